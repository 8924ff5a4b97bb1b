//! Memory kernels `k(t)` and their Laplace images `K(z)`.

use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::laplace::{piecewise_linear_transform, FrequencyGrid, LaplaceError, LaplaceValue, TimeSignal};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("kernel transform requested at {re}{im:+}i, outside the open right half-plane")]
    NonpositiveRealPart { re: f64, im: f64 },
    #[error("sampled kernel grows at rate {growth:.4} which Re z = {re} cannot damp")]
    QuadratureDivergence { growth: f64, re: f64 },
    #[error("invalid kernel parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Laplace(#[from] LaplaceError),
}

/// A memory kernel. Values are immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub enum MemoryKernel {
    /// `k(t) = value`, `K(z) = value / z`.
    Constant(f64),
    /// `k(t) = e^{-decay t}`, `K(z) = 1 / (z + decay)`.
    Exponential(f64),
    /// `k(t) = t^2 / 2`, `K(z) = 1 / z^3`.
    PolynomialHalfSquare,
    /// `k = delta(t)`, `K(z) = 1`; the heat equation.
    DiracDelta,
    /// `k(t) = scale ((t - onset)^+)^2`, vanishing with its slope at the onset.
    DelayedQuadratic { onset: f64, scale: f64 },
    /// Piecewise linear interpolant of the samples, zero past the last one.
    Sampled(TimeSignal),
    Sum(Vec<MemoryKernel>),
}

impl MemoryKernel {
    pub fn constant(value: f64) -> Result<Self, KernelError> {
        if !value.is_finite() {
            return Err(KernelError::InvalidParameter(format!("constant kernel value {value}")));
        }
        Ok(MemoryKernel::Constant(value))
    }

    pub fn exponential(decay: f64) -> Result<Self, KernelError> {
        if !(decay.is_finite() && decay >= 0.0) {
            return Err(KernelError::InvalidParameter(format!("exponential decay must be >= 0, got {decay}")));
        }
        Ok(MemoryKernel::Exponential(decay))
    }

    pub fn delayed_quadratic(onset: f64, scale: f64) -> Result<Self, KernelError> {
        if !(onset.is_finite() && onset >= 0.0 && scale.is_finite()) {
            return Err(KernelError::InvalidParameter(format!(
                "delayed quadratic needs onset >= 0 and finite scale, got {onset}, {scale}"
            )));
        }
        Ok(MemoryKernel::DelayedQuadratic { onset, scale })
    }

    pub fn sum(terms: Vec<MemoryKernel>) -> Result<Self, KernelError> {
        if terms.is_empty() {
            return Err(KernelError::InvalidParameter("sum kernel needs at least one term".into()));
        }
        Ok(MemoryKernel::Sum(terms))
    }

    fn terms(&self) -> Box<dyn Iterator<Item = &MemoryKernel> + '_> {
        match self {
            MemoryKernel::Sum(v) => Box::new(v.iter().flat_map(|k| k.terms())),
            other => Box::new(std::iter::once(other)),
        }
    }

    /// Mass of the singular part at `t = 0`.
    pub fn delta_mass(&self) -> f64 {
        self.terms().filter(|k| matches!(k, MemoryKernel::DiracDelta)).count() as f64
    }

    /// Whether any term has a pointwise (non-singular) part.
    pub fn has_regular_part(&self) -> bool {
        self.terms().any(|k| !matches!(k, MemoryKernel::DiracDelta))
    }

    /// The kernel without its singular part, at `t >= 0`.
    pub fn regular_value(&self, t: f64) -> f64 {
        self.terms()
            .map(|k| match k {
                MemoryKernel::Constant(c) => *c,
                MemoryKernel::Exponential(b) => (-b * t).exp(),
                MemoryKernel::PolynomialHalfSquare => 0.5 * t * t,
                MemoryKernel::DiracDelta => 0.0,
                MemoryKernel::DelayedQuadratic { onset, scale } => scale * (t - onset).max(0.0).powi(2),
                MemoryKernel::Sampled(s) => s.sample(t).unwrap_or(0.0),
                MemoryKernel::Sum(_) => unreachable!("sums are flattened"),
            })
            .sum()
    }

    /// `k(t)`, or `None` when the kernel has a singular part.
    pub fn value(&self, t: f64) -> Option<f64> {
        (self.delta_mass() == 0.0).then(|| self.regular_value(t))
    }

    /// `int_0^t k`, counting the full singular mass for `t > 0`.
    pub fn integrated(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        self.delta_mass() + self.integrated_regular(t)
    }

    /// `int_0^t` of the regular part.
    pub fn integrated_regular(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        self.terms()
            .map(|k| match k {
                MemoryKernel::Constant(c) => c * t,
                MemoryKernel::Exponential(b) if *b == 0.0 => t,
                MemoryKernel::Exponential(b) => -(-b * t).exp_m1() / b,
                MemoryKernel::PolynomialHalfSquare => t.powi(3) / 6.0,
                MemoryKernel::DiracDelta => 0.0,
                MemoryKernel::DelayedQuadratic { onset, scale } => scale * (t - onset).max(0.0).powi(3) / 3.0,
                MemoryKernel::Sampled(s) => integrate_interpolant(s, t),
                MemoryKernel::Sum(_) => unreachable!("sums are flattened"),
            })
            .sum()
    }

    /// `a^2 = k(0)`, defined when the kernel has a pointwise value at zero.
    pub fn wave_speed_sq(&self) -> Option<f64> {
        self.value(0.0)
    }

    /// Whether the image continues analytically to the left half-plane
    /// without exponential growth, so contour inversion applies.
    pub fn is_contour_safe(&self) -> bool {
        self.terms().all(|k| !matches!(k, MemoryKernel::Sampled(_) | MemoryKernel::DelayedQuadratic { .. }))
    }

    /// `K(z)` for `Re z > 0`, with a tail bound for sampled parts.
    pub fn laplace_with_bound(&self, z: Complex64) -> Result<LaplaceValue, KernelError> {
        if !(z.re > 0.0) {
            return Err(KernelError::NonpositiveRealPart { re: z.re, im: z.im });
        }
        let mut bound = 0.0;
        for k in self.terms() {
            if let MemoryKernel::Sampled(s) = k {
                let horizon = s.horizon();
                let v = s.values();
                let (first, last) = (v[0].abs(), v[v.len() - 1].abs());
                let mid = s.sample(0.5 * horizon).unwrap_or(0.0).abs();
                if last > 0.0 && mid > 0.0 {
                    let growth = (last / mid).ln() / (0.5 * horizon);
                    if growth >= z.re {
                        return Err(KernelError::QuadratureDivergence { growth, re: z.re });
                    }
                }
                bound += first.max(last) * (-z.re * horizon).exp() / z.re;
            }
        }
        let value = self.laplace_continued(z);
        if !(value.re.is_finite() && value.im.is_finite()) {
            return Err(LaplaceError::NonFinite.into());
        }
        Ok(LaplaceValue { value, truncation_bound: bound })
    }

    pub fn laplace(&self, z: Complex64) -> Result<Complex64, KernelError> {
        self.laplace_with_bound(z).map(|v| v.value)
    }

    /// The closed-form (or finite-sum) expression of `K` at any `z`, without
    /// half-plane checks.
    pub fn laplace_continued(&self, z: Complex64) -> Complex64 {
        self.terms()
            .map(|k| match k {
                MemoryKernel::Constant(c) => *c / z,
                MemoryKernel::Exponential(b) => 1.0 / (z + b),
                MemoryKernel::PolynomialHalfSquare => 1.0 / (z * z * z),
                MemoryKernel::DiracDelta => Complex64::new(1.0, 0.0),
                MemoryKernel::DelayedQuadratic { onset, scale } => 2.0 * scale * (-z * onset).exp() / (z * z * z),
                MemoryKernel::Sampled(s) => piecewise_linear_transform(s, z),
                MemoryKernel::Sum(_) => unreachable!("sums are flattened"),
            })
            .sum()
    }

    /// `K(z) - k(0)/z` evaluated termwise, so that the leading `a^2/z`
    /// cancels exactly instead of in floating point.
    pub fn laplace_remainder_continued(&self, z: Complex64) -> Complex64 {
        self.terms()
            .map(|k| match k {
                MemoryKernel::Constant(_) => Complex64::new(0.0, 0.0),
                MemoryKernel::Exponential(b) => -*b / (z * (z + b)),
                MemoryKernel::Sampled(s) => piecewise_linear_transform(s, z) - s.values()[0] / z,
                other => other.laplace_continued(z),
            })
            .sum()
    }
}

fn integrate_interpolant(s: &TimeSignal, t: f64) -> f64 {
    let h = s.dt();
    let v = s.values();
    let t = t.min(s.horizon());
    let full = ((t / h).floor() as usize).min(v.len() - 1);
    let mut acc: f64 = (0..full).map(|j| 0.5 * h * (v[j] + v[j + 1])).sum();
    let rest = t - full as f64 * h;
    if rest > 0.0 && full + 1 < v.len() {
        let end = s.sample(t).unwrap_or(v[full]);
        acc += 0.5 * rest * (v[full] + end);
    }
    acc
}

impl fmt::Display for MemoryKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MemoryKernel::Constant(c) => write!(f, "constant({c})"),
            MemoryKernel::Exponential(b) => write!(f, "exponential({b})"),
            MemoryKernel::PolynomialHalfSquare => write!(f, "polynomial_half_square"),
            MemoryKernel::DiracDelta => write!(f, "dirac_delta"),
            MemoryKernel::DelayedQuadratic { onset, scale } => write!(f, "delayed_quadratic({onset},{scale})"),
            MemoryKernel::Sampled(s) => write!(f, "sampled(dt={},n={})", s.dt(), s.len()),
            MemoryKernel::Sum(v) => {
                write!(f, "sum(")?;
                for (i, k) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, "+")?;
                    }
                    write!(f, "{k}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Free-function form of [`MemoryKernel::laplace`].
pub fn laplace_of_kernel(kernel: &MemoryKernel, z: Complex64) -> Result<Complex64, KernelError> {
    kernel.laplace(z)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct K0Report {
    pub a: f64,
    pub a_squared: f64,
    /// Largest `|z^2 (K(z) - a^2/z)| / (1 + a^2)` over the probes.
    pub max_residual: f64,
    pub admissible: bool,
}

/// Largest log-log slope of the normalized remainder treated as bounded.
const BOUNDED_SLOPE: f64 = 0.5;

/// Probe-based check of `K(z) = a^2/z + O(1/z^2)` with `a^2 > tol`.
///
/// This is a necessary-condition test on the supplied probes, not a proof.
pub fn validate_k0(kernel: &MemoryKernel, probes: &[Complex64], tol: f64) -> K0Report {
    let inadmissible = K0Report { a: f64::NAN, a_squared: f64::NAN, max_residual: f64::INFINITY, admissible: false };
    if probes.is_empty() || probes.iter().any(|z| !(z.re > 0.0)) {
        return inadmissible;
    }
    let mut samples: Vec<(Complex64, Complex64)> = Vec::with_capacity(probes.len());
    for &z in probes {
        match kernel.laplace(z) {
            Ok(k) => samples.push((z, k)),
            Err(_) => return inadmissible,
        }
    }
    samples.sort_by(|a, b| a.0.norm().total_cmp(&b.0.norm()));

    let a_squared = match kernel.wave_speed_sq() {
        Some(v) => v,
        None => {
            let top = &samples[samples.len() - (samples.len() / 3).max(2).min(samples.len())..];
            top.iter().map(|(z, k)| (z * k).re).sum::<f64>() / top.len() as f64
        }
    };
    let residual = |(z, k): &(Complex64, Complex64)| (z * z * (k - a_squared / z)).norm() / (1.0 + a_squared.abs());
    let residuals: Vec<f64> = samples.iter().map(residual).collect();
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);

    let (z_lo, r_lo) = (samples[0].0.norm(), residuals[0]);
    let (z_hi, r_hi) = (samples[samples.len() - 1].0.norm(), residuals[residuals.len() - 1]);
    let bounded = if !max_residual.is_finite() {
        false
    } else if r_hi <= 1e-12 * (1.0 + max_residual) || z_hi <= z_lo * (1.0 + 1e-12) {
        true
    } else {
        (r_hi / r_lo.max(f64::MIN_POSITIVE)).ln() / (z_hi / z_lo).ln() <= BOUNDED_SLOPE
    };
    let admissible = a_squared > tol && bounded;
    K0Report { a: a_squared.max(0.0).sqrt(), a_squared, max_residual, admissible }
}

/// Sampling check that `|K(z)| > tol / (1 + |z|)` at every grid point.
pub fn validate_no_zeros(kernel: &MemoryKernel, grid: &FrequencyGrid, tol: f64) -> bool {
    grid.points().iter().all(|&z| match kernel.laplace(z) {
        Ok(k) => k.norm() > tol / (1.0 + z.norm()),
        Err(_) => false,
    })
}

/// Real probes `10^{k/2}`, `k = 0..12`, the default input of [`validate_k0`].
pub fn default_probes() -> Vec<Complex64> {
    (0..13).map(|i| Complex64::new(10f64.powf(i as f64 * 0.5), 0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let z = Complex64::new(2.0, 0.0);
        assert_eq!(MemoryKernel::Constant(1.0).laplace(z).unwrap(), Complex64::new(0.5, 0.0));
        assert_eq!(MemoryKernel::Exponential(1.0).laplace(Complex64::new(1.0, 0.0)).unwrap().re, 0.5);
        assert_eq!(MemoryKernel::PolynomialHalfSquare.laplace(z).unwrap().re, 0.125);
        assert!(matches!(
            MemoryKernel::Constant(1.0).laplace(Complex64::new(0.0, 1.0)),
            Err(KernelError::NonpositiveRealPart { .. })
        ));
    }

    #[test]
    fn defining_identities_hold_exactly() {
        for z in [Complex64::new(0.3, 2.0), Complex64::new(5.0, -1.0), Complex64::new(1.0, 0.0)] {
            assert_eq!(MemoryKernel::Constant(1.0).laplace(z).unwrap() * z, Complex64::new(1.0, 0.0));
            let e = MemoryKernel::Exponential(1.0).laplace(z).unwrap() * (z + 1.0);
            assert!((e - 1.0).norm() <= 2.0 * f64::EPSILON);
            let p = MemoryKernel::PolynomialHalfSquare.laplace(z).unwrap() * z * z * z;
            assert!((p - 1.0).norm() <= 4.0 * f64::EPSILON);
        }
    }

    #[test]
    fn sampled_exponential_matches_closed_form() {
        let s = TimeSignal::from_fn(1e-3, 30.0, |t| (-t).exp()).unwrap();
        let k = MemoryKernel::Sampled(s);
        for z in [Complex64::new(1.0, 0.0), Complex64::new(1.0, 5.0), Complex64::new(3.0, -2.0)] {
            let got = k.laplace_with_bound(z).unwrap();
            let err = (got.value - 1.0 / (z + 1.0)).norm();
            assert!(err < 1e-7 + got.truncation_bound, "z={z} err={err}");
        }
    }

    #[test]
    fn growing_sample_is_rejected() {
        let s = TimeSignal::from_fn(0.01, 10.0, |t| (2.0 * t).exp()).unwrap();
        let k = MemoryKernel::Sampled(s);
        assert!(matches!(k.laplace(Complex64::new(1.0, 0.0)), Err(KernelError::QuadratureDivergence { .. })));
        assert!(k.laplace(Complex64::new(3.0, 0.0)).is_ok());
    }

    #[test]
    fn integrated_kernels() {
        assert!((MemoryKernel::Exponential(1.0).integrated(1.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert_eq!(MemoryKernel::DiracDelta.integrated(0.3), 1.0);
        let s = TimeSignal::from_fn(0.5, 4.0, |t| t).unwrap();
        assert!((MemoryKernel::Sampled(s).integrated(1.25) - 0.78125).abs() < 1e-14);
        assert_eq!(MemoryKernel::delayed_quadratic(2.0, 1.0).unwrap().integrated(3.0), 1.0 / 3.0);
    }

    #[test]
    fn k0_gate() {
        let p = default_probes();
        let c = validate_k0(&MemoryKernel::Constant(1.0), &p, 1e-12);
        assert!(c.admissible && c.a == 1.0 && c.max_residual == 0.0);
        let e = validate_k0(&MemoryKernel::Exponential(1.0), &p, 1e-12);
        assert!(e.admissible && e.a == 1.0 && e.max_residual <= 1.0);
        assert!(!validate_k0(&MemoryKernel::PolynomialHalfSquare, &p, 1e-12).admissible);
        assert!(!validate_k0(&MemoryKernel::DiracDelta, &p, 1e-12).admissible);
        let four = validate_k0(&MemoryKernel::Constant(4.0), &p, 1e-12);
        assert_eq!(four.a, 2.0);
    }

    #[test]
    fn zero_check() {
        let g = FrequencyGrid::real_geometric(0.1, 10.0, 12).unwrap();
        assert!(validate_no_zeros(&MemoryKernel::Constant(1.0), &g, 1e-12));
        assert!(validate_no_zeros(&MemoryKernel::Exponential(1.0), &g, 1e-12));
        let s = MemoryKernel::Sum(vec![MemoryKernel::Constant(1.0), MemoryKernel::Constant(-0.5)]);
        assert!(validate_no_zeros(&s, &g, 1e-12));
        let zero = MemoryKernel::Sum(vec![MemoryKernel::Constant(1.0), MemoryKernel::Constant(-1.0)]);
        assert!(!validate_no_zeros(&zero, &g, 1e-12));
    }
}

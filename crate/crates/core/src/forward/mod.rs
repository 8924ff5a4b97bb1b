//! Forward problem: Laplace-domain field and boundary response, their time
//! domain counterparts, and an independent time-stepping solver.

mod solver;

use num_complex::Complex64;
use std::fmt;
use thiserror::Error;

use crate::kernel::{KernelError, MemoryKernel};
use crate::laplace::{
    inverse_laplace, inverse_laplace_delayed, piecewise_linear_transform, ContourSpec, LaplaceError, TimeSignal,
};

pub use solver::{default_far_field, extract_response, solve_time_domain, FieldSolution, TimeDomainParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ForwardError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Laplace(#[from] LaplaceError),
    #[error("kernel transform vanishes at {re}{im:+}i")]
    KernelZero { re: f64, im: f64 },
    #[error("Re omega <= 0 at {re}{im:+}i; the kernel is not admissible there")]
    BranchViolation { re: f64, im: f64 },
    #[error("sinh(omega L) is within the pole tolerance at {re}{im:+}i")]
    NearPole { re: f64, im: f64 },
    #[error("CFL violation: a dt = {} exceeds dx = {dx}", speed * dt)]
    CflViolation { speed: f64, dt: f64, dx: f64 },
    #[error("field grew by more than the divergence factor at step {step} (t = {time})")]
    UnstableStep { step: usize, time: f64 },
    #[error("kernel {0} has no pointwise time-domain values")]
    MissingTimeDomain(String),
    #[error("kernel {0} has no left-half-plane continuation suitable for contour inversion")]
    NonContourKernel(String),
    #[error("contour inversion needs the ramp control")]
    UnsupportedControl,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Spatial domain `(0, L)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry {
    SemiInfinite,
    Interval(f64),
}

impl Geometry {
    pub fn interval(length: f64) -> Result<Self, ForwardError> {
        if !(length.is_finite() && length > 0.0) {
            return Err(ForwardError::InvalidParameter(format!("interval length must be positive, got {length}")));
        }
        Ok(Geometry::Interval(length))
    }

    pub fn length(&self) -> Option<f64> {
        match self {
            Geometry::SemiInfinite => None,
            Geometry::Interval(l) => Some(*l),
        }
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Geometry::SemiInfinite => write!(f, "inf"),
            Geometry::Interval(l) => write!(f, "{l}"),
        }
    }
}

/// Temperature prescribed at `x = 0`, vanishing at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryControl {
    /// `f(t) = t^+`, `F(z) = 1/z^2`.
    Ramp,
    /// Piecewise linear samples, held constant past the last one.
    Sampled(TimeSignal),
}

impl BoundaryControl {
    pub fn sampled(signal: TimeSignal) -> Result<Self, ForwardError> {
        if signal.values()[0] != 0.0 {
            return Err(ForwardError::InvalidParameter(format!(
                "control must vanish at t = 0, got {}",
                signal.values()[0]
            )));
        }
        Ok(BoundaryControl::Sampled(signal))
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            BoundaryControl::Ramp => t.max(0.0),
            BoundaryControl::Sampled(s) => s.sample(t.max(0.0)).unwrap_or(s.values()[s.len() - 1]),
        }
    }

    /// `F(z)` for `Re z > 0`. The sampled form transforms the samples on
    /// their own horizon only.
    pub fn laplace(&self, z: Complex64) -> Result<Complex64, ForwardError> {
        if !(z.re > 0.0) {
            return Err(LaplaceError::NonpositiveRealPart { re: z.re, im: z.im }.into());
        }
        Ok(self.laplace_continued(z))
    }

    fn laplace_continued(&self, z: Complex64) -> Complex64 {
        match self {
            BoundaryControl::Ramp => 1.0 / (z * z),
            BoundaryControl::Sampled(s) => piecewise_linear_transform(s, z),
        }
    }
}

impl fmt::Display for BoundaryControl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryControl::Ramp => write!(f, "ramp"),
            BoundaryControl::Sampled(s) => write!(f, "sampled(dt={},n={})", s.dt(), s.len()),
        }
    }
}

/// `omega(z) = sqrt(z / K(z))`, principal branch, with `Re omega > 0`.
pub fn omega(kernel: &MemoryKernel, z: Complex64) -> Result<Complex64, ForwardError> {
    let k = kernel.laplace(z)?;
    if k == Complex64::new(0.0, 0.0) {
        return Err(ForwardError::KernelZero { re: z.re, im: z.im });
    }
    let w = (z / k).sqrt();
    if !(w.re > 0.0) {
        return Err(ForwardError::BranchViolation { re: z.re, im: z.im });
    }
    Ok(w)
}

/// Continuation of [`omega`] off the right half-plane, written as
/// `z sqrt(1 / (z K(z)))` so that the branch cut of the square root follows
/// the singular set of `K` rather than the negative real axis.
pub fn omega_continued(kernel: &MemoryKernel, z: Complex64) -> Complex64 {
    let zk = z * kernel.laplace_continued(z);
    if kernel.delta_mass() > 0.0 {
        // K ~ const at infinity: omega behaves like sqrt(z) and the cut
        // belongs on the negative axis.
        return (z / kernel.laplace_continued(z)).sqrt();
    }
    z * (1.0 / zk).sqrt()
}

pub fn theta_hat_semiaxis(
    kernel: &MemoryKernel,
    control: &BoundaryControl,
    x: f64,
    z: Complex64,
) -> Result<Complex64, ForwardError> {
    if !(x >= 0.0) {
        return Err(ForwardError::InvalidParameter(format!("position must be >= 0, got {x}")));
    }
    let f = control.laplace(z)?;
    if x == 0.0 {
        return Ok(f);
    }
    Ok(f * (-omega(kernel, z)? * x).exp())
}

/// `R(z) = -F(z) omega(z)` on the half-line.
pub fn response_semiaxis(kernel: &MemoryKernel, control: &BoundaryControl, z: Complex64) -> Result<Complex64, ForwardError> {
    let f = control.laplace(z)?;
    Ok(-f * omega(kernel, z)?)
}

/// `coth(w)` through `e^{-2w}` (or `e^{2w}`), stable for large `|Re w|`.
pub fn coth(w: Complex64) -> Complex64 {
    if w.re >= 0.0 {
        let e = (-2.0 * w).exp();
        (1.0 + e) / (1.0 - e)
    } else {
        let e = (2.0 * w).exp();
        -(1.0 + e) / (1.0 - e)
    }
}

/// Whether `|sinh(w)| <= 1e-8 e^{|Re w|}`.
pub fn near_pole(w: Complex64) -> bool {
    // |sinh w| e^{-|Re w|} = |1 - e^{-2 sgn(Re w) w}| / 2
    let e = if w.re >= 0.0 { (-2.0 * w).exp() } else { (2.0 * w).exp() };
    0.5 * (1.0 - e).norm() <= 1e-8
}

/// `R(z) = -omega F coth(omega L)` with zero temperature at `x = L`.
pub fn response_interval(
    kernel: &MemoryKernel,
    control: &BoundaryControl,
    length: f64,
    z: Complex64,
) -> Result<Complex64, ForwardError> {
    let f = control.laplace(z)?;
    let w = omega(kernel, z)?;
    let wl = w * length;
    if near_pole(wl) {
        return Err(ForwardError::NearPole { re: z.re, im: z.im });
    }
    Ok(-w * f * coth(wl))
}

pub fn response(
    kernel: &MemoryKernel,
    control: &BoundaryControl,
    geometry: Geometry,
    z: Complex64,
) -> Result<Complex64, ForwardError> {
    match geometry {
        Geometry::SemiInfinite => response_semiaxis(kernel, control, z),
        Geometry::Interval(l) => response_interval(kernel, control, l, z),
    }
}

fn check_contour_inputs(kernel: &MemoryKernel, control: &BoundaryControl) -> Result<(), ForwardError> {
    if !kernel.is_contour_safe() {
        return Err(ForwardError::NonContourKernel(kernel.to_string()));
    }
    if *control != BoundaryControl::Ramp {
        return Err(ForwardError::UnsupportedControl);
    }
    Ok(())
}

/// Wave speed used to factor out the travel delay, when there is one.
fn front_speed(kernel: &MemoryKernel) -> Option<f64> {
    kernel.wave_speed_sq().filter(|&a2| a2 > 0.0).map(f64::sqrt)
}

/// Inverse transform of `scale(z) * e^{-omega(z) d}` for travel distance `d`,
/// with the delay `d / a` factored out when the kernel has a wave speed.
fn invert_travelling<S>(kernel: &MemoryKernel, scale: S, d: f64, t: f64, contour: &ContourSpec) -> Result<f64, ForwardError>
where
    S: Fn(Complex64) -> Complex64,
{
    Ok(match front_speed(kernel) {
        Some(a) => inverse_laplace_delayed(
            |z| scale(z) * (-omega_minus_front(kernel, z, a) * d).exp(),
            d / a,
            t,
            contour,
        )?,
        None => inverse_laplace(|z| scale(z) * (-omega_continued(kernel, z) * d).exp(), t, contour)?,
    })
}

/// `omega(z) - z/a` written as `-z^2 (K - a^2/z) / (a^2 K (omega + z/a))`,
/// which avoids the cancellation of two terms of size `|z|`.
fn omega_minus_front(kernel: &MemoryKernel, z: Complex64, a: f64) -> Complex64 {
    let w = omega_continued(kernel, z);
    let k = kernel.laplace_continued(z);
    -z * z * kernel.laplace_remainder_continued(z) / (a * a * k * (w + z / a))
}

/// Number of reflections that can influence time `t`; without a wave speed,
/// enough images for the Gaussian tails to fall below double precision.
fn reflection_count(kernel: &MemoryKernel, length: f64, t: f64) -> usize {
    match front_speed(kernel) {
        Some(a) => (a * t / (2.0 * length)).ceil() as usize + 1,
        None => {
            let spread = (kernel.delta_mass().max(1.0) * t).sqrt();
            ((12.0 * spread) / (2.0 * length)).ceil() as usize + 2
        }
    }
}

/// `theta(x, t)` by contour inversion. On an interval the field is summed
/// over reflections from `x = L`.
pub fn theta_time(
    kernel: &MemoryKernel,
    control: &BoundaryControl,
    geometry: Geometry,
    x: f64,
    t: f64,
    contour: &ContourSpec,
) -> Result<f64, ForwardError> {
    check_contour_inputs(kernel, control)?;
    if t <= 0.0 {
        return Ok(0.0);
    }
    let f = |z: Complex64| control.laplace_continued(z);
    match geometry {
        Geometry::SemiInfinite => invert_travelling(kernel, f, x, t, contour),
        Geometry::Interval(l) => {
            if !(0.0..=l).contains(&x) {
                return Err(ForwardError::InvalidParameter(format!("position {x} outside [0, {l}]")));
            }
            let mut sum = 0.0;
            for m in 0..reflection_count(kernel, l, t) {
                let m = m as f64;
                sum += invert_travelling(kernel, f, 2.0 * m * l + x, t, contour)?;
                sum -= invert_travelling(kernel, f, 2.0 * (m + 1.0) * l - x, t, contour)?;
            }
            Ok(sum)
        }
    }
}

/// `r(t) = theta_x(0, t)` by contour inversion; `r(0)` is the initial-value
/// limit `lim z R(z)`.
pub fn response_time(
    kernel: &MemoryKernel,
    control: &BoundaryControl,
    geometry: Geometry,
    t: f64,
    contour: &ContourSpec,
) -> Result<f64, ForwardError> {
    check_contour_inputs(kernel, control)?;
    if t <= 0.0 {
        let z = Complex64::new(1e12, 0.0);
        let v = z * response_semiaxis(kernel, control, z)?;
        return Ok(if v.norm() < 1e-6 { 0.0 } else { v.re });
    }
    let base = |z: Complex64| -control.laplace_continued(z) * omega_continued(kernel, z);
    match geometry {
        Geometry::SemiInfinite => invert_travelling(kernel, base, 0.0, t, contour),
        Geometry::Interval(l) => {
            let mut sum = invert_travelling(kernel, base, 0.0, t, contour)?;
            for m in 1..reflection_count(kernel, l, t) {
                sum += 2.0 * invert_travelling(kernel, base, 2.0 * m as f64 * l, t, contour)?;
            }
            Ok(sum)
        }
    }
}

/// Sampled `r` on `[0, horizon]`, computed by contour inversion.
pub fn synthesize_response(
    kernel: &MemoryKernel,
    control: &BoundaryControl,
    geometry: Geometry,
    dt: f64,
    horizon: f64,
    contour: &ContourSpec,
) -> Result<TimeSignal, ForwardError> {
    let n = (horizon / dt).round() as usize + 1;
    let values = (0..n)
        .map(|i| response_time(kernel, control, geometry, i as f64 * dt, contour))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TimeSignal::new(dt, values)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModalValue {
    pub value: f64,
    /// Roots of `z^4 + n^2 = 0`, reported for the `t^2/2` kernel.
    pub poles: Option<Vec<Complex64>>,
}

/// Poles of `Theta_n(z) = xi z^3 / (z^4 + n^2)`: `sqrt(n) e^{i(pi/4 + j pi/2)}`.
pub fn half_square_poles(n: u32) -> Vec<Complex64> {
    let r = (n as f64).sqrt();
    (0..4)
        .map(|j| Complex64::from_polar(r, std::f64::consts::FRAC_PI_4 + j as f64 * std::f64::consts::FRAC_PI_2))
        .collect()
}

/// Mode `n` of the problem on `(0, pi)` with initial data `xi sin(n x)`:
/// the inverse transform of `xi / (z + n^2 K(z))` at `t`.
///
/// For the `t^2/2` kernel a Talbot contour is moved right of the poles when
/// its shift would leave them outside.
pub fn modal_solution(
    kernel: &MemoryKernel,
    n: u32,
    xi: f64,
    t: f64,
    contour: &ContourSpec,
) -> Result<ModalValue, ForwardError> {
    if n == 0 {
        return Err(ForwardError::InvalidParameter("mode index must be positive".into()));
    }
    if !kernel.is_contour_safe() {
        return Err(ForwardError::NonContourKernel(kernel.to_string()));
    }
    let poles = matches!(kernel, MemoryKernel::PolynomialHalfSquare).then(|| half_square_poles(n));
    if t < 0.0 {
        return Err(ForwardError::InvalidParameter(format!("time must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(ModalValue { value: xi, poles });
    }
    let n2 = (n as f64).powi(2);
    let mut contour = *contour;
    if let (Some(p), ContourSpec::Talbot { nodes, shift }) = (&poles, contour) {
        let right = p.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        if shift <= right {
            contour = ContourSpec::Talbot { nodes, shift: right + 0.5 };
        }
    }
    let value = inverse_laplace(|z| xi / (z + n2 * kernel.laplace_continued(z)), t, &contour)?;
    Ok(ModalValue { value, poles })
}

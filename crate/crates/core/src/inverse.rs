//! Kernel recovery from the boundary response.

use num_complex::Complex64;
use std::fmt;
use thiserror::Error;

use crate::forward::{
    self, coth, extract_response, near_pole, solve_time_domain, BoundaryControl, ForwardError, Geometry,
    TimeDomainParams,
};
use crate::kernel::{KernelError, MemoryKernel};
use crate::laplace::{
    forward_laplace, inverse_laplace, invert_line_fft, laplace_on_line, ContourSpec, FrequencyGrid, LaplaceError,
    TimeSignal,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InverseError {
    #[error("response value vanishes at {re}{im:+}i")]
    ZeroResponse { re: f64, im: f64 },
    #[error("control transform vanishes at {re}{im:+}i")]
    ZeroControl { re: f64, im: f64 },
    #[error("recovered kernel reproduces -R instead of R at {re}{im:+}i")]
    BranchMismatch { re: f64, im: f64 },
    #[error("Newton iteration for omega failed at {re}{im:+}i (best residual {residual:.3e})")]
    NewtonDivergence { re: f64, im: f64, residual: f64 },
    #[error("Newton iteration converged to a root with Re omega <= 0 at {re}{im:+}i")]
    WrongHalfPlane { re: f64, im: f64 },
    #[error("z K(z) does not settle to a^2: {0}")]
    K0Violation(String),
    #[error("no grid point passes the truncation gate for T_obs = {t_obs} (best relative error {best:.3e})")]
    InsufficientHorizon { t_obs: f64, best: f64 },
    #[error("finite-data reconstruction needs the ramp control")]
    UnsupportedControl,
    #[error("{0}")]
    UnsupportedContour(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Forward(#[from] ForwardError),
    #[error(transparent)]
    Laplace(#[from] LaplaceError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Synthetic(String),
    External,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Synthetic(id) => write!(f, "synthetic:{id}"),
            Provenance::External => write!(f, "external"),
        }
    }
}

/// Observed `r(t) = theta_x(0, t)` with the experiment that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseRecord {
    pub geometry: Geometry,
    pub control: BoundaryControl,
    pub response: TimeSignal,
    pub provenance: Provenance,
}

/// Relative agreement demanded by the branch check.
const BRANCH_TOL: f64 = 1e-9;
const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 100;
const NEWTON_MAX_HALVINGS: usize = 20;
const VALIDATION_COURANT: f64 = 0.98;
/// Half-width, in steps, of the window for the local step error.
const VALIDATION_WINDOW: usize = 10;

/// `K = z F^2 / R^2`, accepted only if `-F sqrt(z/K)` gives back `R`.
pub fn recover_k_semiaxis(r: Complex64, f: Complex64, z: Complex64) -> Result<Complex64, InverseError> {
    if !(z.re > 0.0) {
        return Err(LaplaceError::NonpositiveRealPart { re: z.re, im: z.im }.into());
    }
    if r == Complex64::new(0.0, 0.0) {
        return Err(InverseError::ZeroResponse { re: z.re, im: z.im });
    }
    if f == Complex64::new(0.0, 0.0) {
        return Err(InverseError::ZeroControl { re: z.re, im: z.im });
    }
    let k = z * f * f / (r * r);
    let back = -f * (z / k).sqrt();
    if (back - r).norm() > BRANCH_TOL * r.norm() {
        return Err(InverseError::BranchMismatch { re: z.re, im: z.im });
    }
    Ok(k)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaRecovery {
    pub omega: Complex64,
    /// `|omega coth(omega L) + R/F|` at the returned root.
    pub residual: f64,
    pub iterations: usize,
}

/// Solves `omega coth(omega L) = -R/F` by damped Newton iteration.
pub fn recover_omega_interval(
    r: Complex64,
    f: Complex64,
    length: f64,
    z: Complex64,
) -> Result<OmegaRecovery, InverseError> {
    if f == Complex64::new(0.0, 0.0) {
        return Err(InverseError::ZeroControl { re: z.re, im: z.im });
    }
    if !(length > 0.0 && length.is_finite()) {
        return Err(InverseError::InvalidParameter(format!("interval length must be positive, got {length}")));
    }
    let q = -r / f;
    let tol = NEWTON_TOL * (1.0 + q.norm());
    let g = |w: Complex64| -> Option<Complex64> {
        let wl = w * length;
        (!near_pole(wl)).then(|| w * coth(wl) - q)
    };
    let starts = [q, q * Complex64::new(1.0, 0.1), q * Complex64::new(1.0, -0.1)];
    let mut best = f64::INFINITY;
    let mut wrong_half = false;
    for start in starts {
        let mut w = start;
        let Some(mut gw) = g(w) else { continue };
        let mut iterations = 0;
        while gw.norm() > tol && iterations < NEWTON_MAX_ITER {
            iterations += 1;
            let wl = w * length;
            let c = coth(wl);
            let dg = c - wl * (c * c - 1.0);
            if dg.norm() == 0.0 {
                break;
            }
            let step = gw / dg;
            let mut lambda = 1.0;
            let mut accepted = None;
            for _ in 0..=NEWTON_MAX_HALVINGS {
                let trial = w - step * lambda;
                if let Some(gt) = g(trial) {
                    if gt.norm() < gw.norm() {
                        accepted = Some((trial, gt));
                        break;
                    }
                }
                lambda *= 0.5;
            }
            match accepted {
                Some((w_new, g_new)) => {
                    w = w_new;
                    gw = g_new;
                }
                None => break,
            }
        }
        let residual = gw.norm();
        best = best.min(residual);
        if residual <= tol {
            if w.re > 0.0 {
                return Ok(OmegaRecovery { omega: w, residual, iterations });
            }
            wrong_half = true;
        }
    }
    if wrong_half {
        return Err(InverseError::WrongHalfPlane { re: z.re, im: z.im });
    }
    Err(InverseError::NewtonDivergence { re: z.re, im: z.im, residual: best })
}

/// Checks that `z K(z)` approaches `a^2` along the real axis.
fn check_k0<F: Fn(Complex64) -> Complex64>(k: &F, a2: f64) -> Result<(), InverseError> {
    let dev: Vec<f64> = [1e3, 1e4, 1e5]
        .iter()
        .map(|&x| {
            let z = Complex64::new(x, 0.0);
            (z * k(z) - a2).norm()
        })
        .collect();
    if dev.iter().any(|d| !d.is_finite()) || dev[2] > 1e-2 * (1.0 + a2) || dev[2] > dev[0] * (1.0 + 1e-12) + 1e-12 {
        return Err(InverseError::K0Violation(format!(
            "|z K - a^2| = {:.3e}, {:.3e}, {:.3e} at z = 1e3, 1e4, 1e5",
            dev[0], dev[1], dev[2]
        )));
    }
    Ok(())
}

/// `k(t) = a^2 + L^{-1}[K(z) - a^2/z](t)` at each time.
pub fn reconstruct_kernel_at<F>(k: F, a: f64, times: &[f64], contour: &ContourSpec) -> Result<Vec<f64>, InverseError>
where
    F: Fn(Complex64) -> Complex64,
{
    if !(a > 0.0 && a.is_finite()) {
        return Err(InverseError::InvalidParameter(format!("wave speed must be positive, got {a}")));
    }
    let a2 = a * a;
    check_k0(&k, a2)?;
    times
        .iter()
        .map(|&t| {
            if t <= 0.0 {
                Ok(a2)
            } else {
                Ok(a2 + inverse_laplace(|z| k(z) - a2 / z, t, contour)?)
            }
        })
        .collect()
}

/// [`reconstruct_kernel_at`] on the grid `0, dt, ..., horizon`.
pub fn reconstruct_kernel_time<F>(
    k: F,
    a: f64,
    dt: f64,
    horizon: f64,
    contour: &ContourSpec,
) -> Result<TimeSignal, InverseError>
where
    F: Fn(Complex64) -> Complex64,
{
    let n = (horizon / dt).round() as usize + 1;
    let times: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
    Ok(TimeSignal::new(dt, reconstruct_kernel_at(k, a, &times, contour)?)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteDataOptions {
    /// Largest relative error of `K` admitted by the truncation gate.
    pub gate_tol: f64,
    /// Kernel error below which reconstructed values count as reliable.
    pub kernel_tol: f64,
    /// Use this wave speed instead of estimating it from the data.
    pub a_override: Option<f64>,
    /// Time step of the re-simulation check; `None` skips the check.
    pub validation_dt: Option<f64>,
}

impl Default for FiniteDataOptions {
    fn default() -> Self {
        Self { gate_tol: 1e-6, kernel_tol: 1e-2, a_override: None, validation_dt: Some(0.04) }
    }
}

/// Recovered `K` at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KSample {
    pub z: Complex64,
    pub k: Complex64,
    /// Estimated absolute error of `k`; infinite when recovery failed.
    pub error: f64,
    /// Whether the point passed the truncation gate.
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationSummary {
    pub dt: f64,
    /// Largest half-step difference after start-up.
    pub self_error: f64,
    /// Largest local acceptance level used.
    pub threshold: f64,
    pub max_residual: f64,
    /// First time the re-simulated response leaves the threshold.
    pub first_violation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    pub k_samples: Vec<KSample>,
    pub a_estimate: f64,
    pub k: TimeSignal,
    pub k_error: Vec<f64>,
    /// Time up to which the error model stays below the kernel tolerance.
    pub t_model: f64,
    pub t_reliable: f64,
    pub abscissa: f64,
    pub cutoff: f64,
    pub line_nodes: usize,
    pub validation: Option<ValidationSummary>,
}

fn recover_k(geometry: Geometry, r: Complex64, f: Complex64, z: Complex64) -> Result<Complex64, InverseError> {
    match geometry {
        Geometry::SemiInfinite => recover_k_semiaxis(r, f, z),
        Geometry::Interval(l) => {
            let w = recover_omega_interval(r, f, l, z)?.omega;
            Ok(z / (w * w))
        }
    }
}

/// Relative error of a transform value from the tail bound and from a
/// comparison with the transform of every other sample.
fn relative_error(value: Complex64, tail: f64, coarse: Option<Complex64>) -> f64 {
    let sampling = coarse.map_or(0.0, |c| (value - c).norm() / 3.0);
    (tail + sampling) / value.norm()
}

/// Wave speed from `sqrt(z K) = -1/(z R^T)` at three real points, with
/// Richardson extrapolation in `1/z`.
fn estimate_speed(r: &TimeSignal) -> Result<f64, InverseError> {
    let z0 = 0.05 / r.dt();
    let speed = |x: f64| -> Result<f64, InverseError> {
        let z = Complex64::new(x, 0.0);
        let rt = forward_laplace(r, z)?.value;
        Ok((-1.0 / (z * rt)).re)
    };
    let (s1, s2, s4) = (speed(z0)?, speed(2.0 * z0)?, speed(4.0 * z0)?);
    let a = (8.0 * s4 - 6.0 * s2 + s1) / 3.0;
    if !(a > 0.0 && a.is_finite()) {
        return Err(InverseError::K0Violation(format!("wave speed estimate {a} is not positive")));
    }
    Ok(a)
}

/// Reconstructs `k` on `[0, t_obs]` from `r` observed on `[0, t_obs]`.
///
/// `K` is recovered from the transform of the truncated record wherever
/// the neglected tail is below `gate_tol`; `k` is then obtained by the
/// trapezoid rule on the Bromwich line through the leftmost admitted
/// abscissa. The per-time error combines the cutoff effect (half versus
/// full cutoff), the propagated truncation error and rounding, and
/// `t_reliable` is further capped where a re-simulation with the
/// reconstructed kernel stops reproducing the record.
pub fn recover_from_finite_data(
    record: &ResponseRecord,
    t_obs: f64,
    grid: &FrequencyGrid,
    contour: &ContourSpec,
    options: &FiniteDataOptions,
) -> Result<ReconstructionResult, InverseError> {
    if record.control != BoundaryControl::Ramp {
        return Err(InverseError::UnsupportedControl);
    }
    let ContourSpec::Bromwich { abscissa, cutoff, nodes } = *contour else {
        return Err(InverseError::UnsupportedContour(
            "finite-data reconstruction inverts on a Bromwich line; Talbot contours need K left of the data".into(),
        ));
    };
    contour.validate()?;
    if !(t_obs > 0.0) {
        return Err(InverseError::InvalidParameter(format!("observation time must be positive, got {t_obs}")));
    }
    let geometry = record.geometry;
    let r = record.response.truncate(t_obs)?;
    let coarse = if r.len() >= 5 { Some(r.decimate(2)?) } else { None };
    let dt = r.dt();
    let a = match options.a_override {
        Some(a) => a,
        None => estimate_speed(&r)?,
    };
    let a2 = a * a;

    let f = |z: Complex64| 1.0 / (z * z);
    let mut k_samples = Vec::with_capacity(grid.len());
    let mut sigma = f64::INFINITY;
    let mut best = f64::INFINITY;
    for &z in grid.points() {
        let lt = forward_laplace(&r, z)?;
        let c = match &coarse {
            Some(c) => Some(forward_laplace(c, z)?.value),
            None => None,
        };
        let rel = 2.0 * relative_error(lt.value, lt.truncation_bound, c);
        best = best.min(rel);
        let passed = rel <= options.gate_tol;
        match recover_k(geometry, lt.value, f(z), z) {
            Ok(k) => {
                if passed {
                    sigma = sigma.min(z.re);
                }
                k_samples.push(KSample { z, k, error: rel * k.norm(), passed });
            }
            Err(e) if passed => return Err(e),
            Err(_) => k_samples.push(KSample {
                z,
                k: Complex64::new(f64::NAN, f64::NAN),
                error: f64::INFINITY,
                passed: false,
            }),
        }
    }
    if !sigma.is_finite() {
        return Err(InverseError::InsufficientHorizon { t_obs, best });
    }
    let sigma = sigma.max(abscissa);
    let omega_max = cutoff.min(0.8 * std::f64::consts::PI / dt);
    let dy_req = omega_max / nodes as f64;
    let n_fft = ((2.0 * std::f64::consts::PI / (dy_req * dt)).ceil() as usize).max(4 * r.len()).next_power_of_two();
    let dy = 2.0 * std::f64::consts::PI / (n_fft as f64 * dt);
    let m = ((omega_max / dy).floor() as usize).max(2);

    let line = laplace_on_line(&r, sigma, n_fft, m)?;
    let coarse_line = match &coarse {
        Some(c) => Some(laplace_on_line(c, sigma, n_fft / 2, m.min(n_fft / 4))?),
        None => None,
    };
    let mut g = Vec::with_capacity(m);
    let mut dg = Vec::with_capacity(m);
    let mut last_sampling = 0.0_f64;
    let mut last_y = dy;
    for (kk, &rv) in line.values.iter().enumerate() {
        let z = line.point(kk);
        let kz = recover_k(geometry, rv, f(z), z)?;
        let sampling = match coarse_line.as_ref().and_then(|c| c.values.get(kk)) {
            Some(cv) => {
                last_sampling = (rv - cv).norm() / 3.0 / rv.norm();
                last_y = z.im.max(dy);
                last_sampling
            }
            None => last_sampling * (z.im / last_y).powi(2),
        };
        let rel = 2.0 * (line.truncation_bound / rv.norm() + sampling);
        g.push(kz - a2 / z);
        dg.push(rel * kz.norm());
    }

    let full = invert_line_fft(&g, sigma, dy, n_fft)?;
    let half = invert_line_fft(&g[..m / 2], sigma, dy, n_fft)?;
    let data_err: f64 = dg.iter().sum::<f64>() * dy / std::f64::consts::PI;
    let round_err: f64 = g.iter().map(|v| v.norm()).sum::<f64>() * dy / std::f64::consts::PI * 64.0 * f64::EPSILON;
    let n_out = r.len();
    let mut k_values = Vec::with_capacity(n_out);
    let mut k_error = Vec::with_capacity(n_out);
    for j in 0..n_out {
        let t = j as f64 * dt;
        let growth = (sigma * t).exp();
        k_values.push(a2 + full[j]);
        k_error.push((full[j] - half[j]).abs() + growth * (data_err + round_err));
    }
    let mut t_model = 0.0;
    for (j, e) in k_error.iter().enumerate() {
        if *e > options.kernel_tol {
            break;
        }
        t_model = j as f64 * dt;
    }
    let k_signal = TimeSignal::new(dt, k_values)?;

    let validation = match options.validation_dt {
        Some(vdt) if t_model >= 10.0 * vdt => Some(validate_by_resimulation(&k_signal, t_model, geometry, &r, vdt, options.kernel_tol)?),
        _ => None,
    };
    let t_reliable = match &validation {
        Some(ValidationSummary { first_violation: Some(tv), .. }) => t_model.min(*tv),
        _ => t_model,
    };
    Ok(ReconstructionResult {
        k_samples,
        a_estimate: a,
        k: k_signal,
        k_error,
        t_model,
        t_reliable,
        abscissa: sigma,
        cutoff: m as f64 * dy,
        line_nodes: m,
        validation,
    })
}

fn simulate_response(kernel: &MemoryKernel, geometry: Geometry, dt: f64, horizon: f64) -> Result<TimeSignal, InverseError> {
    let a = kernel.wave_speed_sq().filter(|&v| v > 0.0).map(f64::sqrt).ok_or_else(|| {
        InverseError::K0Violation("reconstructed kernel has no positive value at t = 0".into())
    })?;
    // A reconstructed kernel may rise slightly above k(0) right after t = 0,
    // which destabilizes the scheme at a Courant number of exactly one.
    let dx_min = a * dt / VALIDATION_COURANT;
    let (nx, x_max) = match geometry {
        Geometry::Interval(l) => ((l / dx_min).floor() as usize, None),
        Geometry::SemiInfinite => {
            let reach = a * horizon + 1.0;
            let nx = (reach / dx_min).ceil() as usize;
            (nx, Some(nx as f64 * dx_min))
        }
    };
    let params = TimeDomainParams { nx: nx.max(16), dt, horizon, x_max };
    let field = solve_time_domain(kernel, &BoundaryControl::Ramp, geometry, &params)?;
    Ok(extract_response(&field)?)
}

/// Re-simulates the record with the reconstructed kernel at `dt` and `dt/2`
/// and reports where the simulated response leaves the observed one by more
/// than ten times the local step error (a sliding maximum of the half-step
/// difference), or by more than `kernel_tol` where that is larger.
fn validate_by_resimulation(
    k: &TimeSignal,
    horizon: f64,
    geometry: Geometry,
    observed: &TimeSignal,
    dt: f64,
    kernel_tol: f64,
) -> Result<ValidationSummary, InverseError> {
    let kernel = MemoryKernel::Sampled(k.truncate(horizon)?);
    let coarse = simulate_response(&kernel, geometry, dt, horizon)?;
    let fine = simulate_response(&kernel, geometry, 0.5 * dt, horizon)?;
    // The response stencil spans two cells; earlier samples are start-up.
    let skip = 4;
    let diff: Vec<f64> = coarse.values().iter().enumerate().map(|(i, v)| (v - fine.values()[2 * i]).abs()).collect();
    let self_error = diff.iter().skip(skip).copied().fold(0.0, f64::max);
    let mut threshold = 0.0_f64;
    let mut max_residual = 0.0_f64;
    let mut first_violation = None;
    for i in skip..coarse.len() {
        let t = coarse.time(i);
        let Some(obs) = observed.sample(t) else { break };
        let lo = i.saturating_sub(VALIDATION_WINDOW).max(skip);
        let hi = (i + VALIDATION_WINDOW + 1).min(diff.len());
        let local = diff[lo..hi].iter().copied().fold(0.0, f64::max);
        let limit = (10.0 * local).max(kernel_tol);
        threshold = threshold.max(limit);
        let res = (coarse.values()[i] - obs).abs();
        max_residual = max_residual.max(res);
        if res > limit && first_violation.is_none() {
            first_violation = Some((t - dt).max(0.0));
        }
    }
    Ok(ValidationSummary { dt, self_error, threshold, max_residual, first_violation })
}

/// Synthetic record: `r` on `[0, horizon]` from the exact response by contour
/// inversion.
pub fn synthetic_record(
    kernel: &MemoryKernel,
    geometry: Geometry,
    dt: f64,
    horizon: f64,
    contour: &ContourSpec,
) -> Result<ResponseRecord, InverseError> {
    let response = forward::synthesize_response(kernel, &BoundaryControl::Ramp, geometry, dt, horizon, contour)?;
    Ok(ResponseRecord {
        geometry,
        control: BoundaryControl::Ramp,
        response,
        provenance: Provenance::Synthetic(kernel.to_string()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::response_interval;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn semiaxis_examples() {
        let z = c(3.0, 0.0);
        let k = recover_k_semiaxis(-1.0 / z, 1.0 / (z * z), z).unwrap();
        assert!((k - 1.0 / 3.0).norm() < 1e-15);
        let z = c(2.0, 1.0);
        let k = recover_k_semiaxis(-z.powf(-1.5), 1.0 / (z * z), z).unwrap();
        assert!((k - 1.0).norm() < 1e-14);
        assert!(matches!(recover_k_semiaxis(1.0 / z, 1.0 / (z * z), z), Err(InverseError::BranchMismatch { .. })));
        assert!(matches!(recover_k_semiaxis(c(0.0, 0.0), c(1.0, 0.0), z), Err(InverseError::ZeroResponse { .. })));
    }

    #[test]
    fn interval_examples() {
        let rec = recover_omega_interval(c(-1.0 / 1f64.tanh(), 0.0), c(1.0, 0.0), 1.0, c(1.0, 0.0)).unwrap();
        assert!((rec.omega - 1.0).norm() < 1e-12);
        let z = c(1.0, 1.0);
        let k = MemoryKernel::Exponential(1.0);
        let r = response_interval(&k, &BoundaryControl::Ramp, 2.0, z).unwrap();
        let rec = recover_omega_interval(r, 1.0 / (z * z), 2.0, z).unwrap();
        assert!((rec.omega - (z * (z + 1.0)).sqrt()).norm() < 1e-10);
    }

    #[test]
    fn kernel_time_examples() {
        let contour = ContourSpec::default();
        let one = reconstruct_kernel_at(|z| 1.0 / z, 1.0, &[0.5, 2.0], &contour).unwrap();
        assert!(one.iter().all(|v| (v - 1.0).abs() < 1e-8));
        let e = reconstruct_kernel_at(|z| 1.0 / (z + 1.0), 1.0, &[1.0], &contour).unwrap();
        assert!((e[0] - (-1.0f64).exp()).abs() < 1e-7);
        let s = 2f64.sqrt();
        let mixed = reconstruct_kernel_at(|z| 2.0 / z + 1.0 / ((z + 3.0) * (z + 3.0)), s, &[0.5], &contour).unwrap();
        assert!((mixed[0] - (2.0 + 0.5 * (-1.5f64).exp())).abs() < 1e-7);
        assert!(matches!(
            reconstruct_kernel_at(|_| c(1.0, 0.0), 1.0, &[1.0], &contour),
            Err(InverseError::K0Violation(_))
        ));
    }
}

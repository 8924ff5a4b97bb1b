//! Numerical experiments: causality of the response, equivalence of the two
//! truncated-transform formulas, modal growth for a kernel with `k(0) = 0`,
//! and finite propagation speed.

use num_complex::Complex64;
use thiserror::Error;

use crate::forward::{
    extract_response, half_square_poles, modal_solution, response_semiaxis, solve_time_domain, synthesize_response,
    BoundaryControl, FieldSolution, ForwardError, Geometry, TimeDomainParams,
};
use crate::kernel::{KernelError, MemoryKernel};
use crate::laplace::{
    forward_laplace, project_rt_contour, project_rt_timedomain, ContourQuadrature, ContourSpec, FrequencyGrid,
    LaplaceError, TimeSignal,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Forward(#[from] ForwardError),
    #[error(transparent)]
    Laplace(#[from] LaplaceError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Grid choice for the time-domain solver: `dx = a dt / courant`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub dt: f64,
    pub courant: f64,
    /// Extra length beyond the reach of the front on the half-line.
    pub margin: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { dt: 0.01, courant: 1.0, margin: 1.0 }
    }
}

fn wave_speed(kernel: &MemoryKernel) -> Result<f64, ExperimentError> {
    kernel
        .wave_speed_sq()
        .filter(|&a2| a2 > 0.0)
        .map(f64::sqrt)
        .ok_or_else(|| ExperimentError::InvalidParameter(format!("kernel {kernel} has no positive k(0)")))
}

/// Runs the solver on a grid tied to the wave speed.
pub fn simulate(
    kernel: &MemoryKernel,
    control: &BoundaryControl,
    geometry: Geometry,
    horizon: f64,
    settings: &SolverSettings,
) -> Result<FieldSolution, ExperimentError> {
    let a = wave_speed(kernel)?;
    if !(settings.courant > 0.0 && settings.courant <= 1.0) {
        return Err(ExperimentError::InvalidParameter(format!("Courant number must be in (0, 1], got {}", settings.courant)));
    }
    let dx = a * settings.dt / settings.courant * (1.0 + 1e-12);
    let (nx, x_max) = match geometry {
        Geometry::Interval(l) => ((l / dx).floor() as usize, None),
        Geometry::SemiInfinite => {
            let nx = ((a * horizon + settings.margin) / dx).ceil() as usize;
            (nx, Some(nx as f64 * dx))
        }
    };
    let params = TimeDomainParams { nx, dt: settings.dt, horizon, x_max };
    Ok(solve_time_domain(kernel, control, geometry, &params)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessReport {
    pub onset: f64,
    /// `sup |r1 - r2|` over `[0, onset]`.
    pub sup_diff_before: f64,
    /// First sampled time with `|r1 - r2| > threshold`; infinite if none.
    pub first_divergence_time: f64,
    pub threshold: f64,
    /// `sup |r1 - r1'|` with `r1'` computed at half the step.
    pub self_error: f64,
    pub times: Vec<f64>,
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
}

/// `k + scale ((t - onset)^+)^2`.
pub fn perturb_after(kernel: &MemoryKernel, onset: f64, scale: f64) -> Result<MemoryKernel, ExperimentError> {
    Ok(MemoryKernel::sum(vec![kernel.clone(), MemoryKernel::delayed_quadratic(onset, scale)?])?)
}

/// Samples skipped at the start when comparing responses of different
/// resolutions: the one-sided stencil needs the front two cells inside.
const STARTUP_SAMPLES: usize = 4;

/// Compares the responses of two kernels that coincide on `[0, onset]`
/// over `[0, onset + extra]`.
pub fn run_uniqueness_experiment(
    k1: &MemoryKernel,
    k2: &MemoryKernel,
    onset: f64,
    extra: f64,
    geometry: Geometry,
    settings: &SolverSettings,
) -> Result<UniquenessReport, ExperimentError> {
    let a1 = wave_speed(k1)?;
    let a2 = wave_speed(k2)?;
    if (a1 - a2).abs() > 1e-12 * a1 {
        return Err(ExperimentError::InvalidParameter(format!("kernels differ at t = 0 ({a1} vs {a2})")));
    }
    if !(onset > 0.0 && extra > 0.0) {
        return Err(ExperimentError::InvalidParameter("onset and extra time must be positive".into()));
    }
    let horizon = onset + extra;
    let control = BoundaryControl::Ramp;
    let r1 = extract_response(&simulate(k1, &control, geometry, horizon, settings)?)?;
    let r2 = extract_response(&simulate(k2, &control, geometry, horizon, settings)?)?;
    let half = SolverSettings { dt: 0.5 * settings.dt, ..*settings };
    let r1_half = extract_response(&simulate(k1, &control, geometry, horizon, &half)?)?;

    let scale = r1.max_abs();
    let self_error = r1
        .values()
        .iter()
        .enumerate()
        .skip(STARTUP_SAMPLES)
        .map(|(i, v)| (v - r1_half.values()[2 * i]).abs())
        .fold(0.0, f64::max);
    // Rounding floor for grids on which the scheme is exact.
    let threshold = (10.0 * self_error).max(64.0 * f64::EPSILON * scale);
    let mut sup_diff_before = 0.0_f64;
    let mut first_divergence_time = f64::INFINITY;
    for (i, (u, v)) in r1.values().iter().zip(r2.values()).enumerate() {
        let t = r1.time(i);
        let d = (u - v).abs();
        if t <= onset * (1.0 + 1e-12) {
            sup_diff_before = sup_diff_before.max(d);
        }
        if d > threshold && first_divergence_time.is_infinite() {
            first_divergence_time = t;
        }
    }
    Ok(UniquenessReport {
        onset,
        sup_diff_before,
        first_divergence_time,
        threshold,
        self_error,
        times: r1.times().collect(),
        r1: r1.values().to_vec(),
        r2: r2.values().to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionPoint {
    pub z: Complex64,
    pub time_domain: Complex64,
    pub contour: Complex64,
    pub deviation: f64,
    /// Contour cutoff estimate plus the time-domain quadrature estimate.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationReport {
    pub horizon: f64,
    pub max_deviation: f64,
    pub points: Vec<ProjectionPoint>,
}

/// Truncated transform of the half-line ramp response computed from the
/// sampled `r` and from `R` on a line near the imaginary axis.
pub fn run_truncation_consistency(
    kernel: &MemoryKernel,
    horizon: f64,
    grid: &FrequencyGrid,
    dt: f64,
    quad: &ContourQuadrature,
) -> Result<TruncationReport, ExperimentError> {
    let control = BoundaryControl::Ramp;
    let r = synthesize_response(kernel, &control, Geometry::SemiInfinite, dt, horizon, &ContourSpec::default())?;
    let coarse = r.decimate(2)?;
    let mut points = Vec::with_capacity(grid.len());
    for &z in grid.points() {
        let td = project_rt_timedomain(&r, horizon, z)?.value;
        let td_coarse = forward_laplace(&coarse, z)?.value;
        let ct = project_rt_contour(
            |p| response_semiaxis(kernel, &control, p).unwrap_or(Complex64::new(f64::NAN, f64::NAN)),
            horizon,
            z,
            quad,
        )?;
        points.push(ProjectionPoint {
            z,
            time_domain: td,
            contour: ct.value,
            deviation: (td - ct.value).norm(),
            bound: ct.cutoff_error + (td - td_coarse).norm() / 3.0,
        });
    }
    let max_deviation = points.iter().map(|p| p.deviation).fold(0.0, f64::max);
    Ok(TruncationReport { horizon, max_deviation, points })
}

/// `xi_n = n^{-power}`.
pub fn power_law(n: u32, power: f64) -> f64 {
    (n as f64).powf(-power)
}

/// Sum of residues of `xi z^3 e^{zt} / (z^4 + n^2)`, which is
/// `(xi/4) sum_p e^{pt}` over the four poles.
pub fn modal_residue_sum(n: u32, xi: f64, t: f64) -> f64 {
    half_square_poles(n)
        .iter()
        .map(|&p| {
            let residue_weight = p.powi(3) / (4.0 * p.powi(3));
            (residue_weight * (p * t).exp()).re
        })
        .sum::<f64>()
        * xi
}

/// Growth rate printed in the source analysis, `n / sqrt(2)`.
pub fn printed_rate(n: u32) -> f64 {
    n as f64 / std::f64::consts::SQRT_2
}

/// Residue constant printed in the source analysis.
pub const PRINTED_RESIDUE_CONSTANT: f64 = 1.0 / 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ModalGrowthReport {
    pub n: u32,
    pub xi: f64,
    pub poles: Vec<Complex64>,
    /// Times up to the overflow limit `t_safe`.
    pub t_grid: Vec<f64>,
    /// Residue evaluation of `theta_n`.
    pub theta_n: Vec<f64>,
    /// `(t, residue, contour)` where both were computed.
    pub contour_check: Vec<(f64, f64, f64)>,
    /// Largest relative deviation over checks with `|theta_n| > 1e-10`.
    pub max_rel_deviation: f64,
    pub fitted_rate: f64,
    pub predicted_rate: f64,
    pub printed_rate: f64,
    /// `theta_n / (xi sum_p e^{pt})` from the contour values.
    pub measured_constant: f64,
    pub printed_constant: f64,
    pub t_safe: f64,
}

/// Slope of `ln|theta|` against `t` through the local maxima of `|theta|`
/// in the upper half of the grid (refined between grid points); masked
/// regression when fewer than two maxima are present.
pub fn fit_growth_rate(t: &[f64], theta: &[f64]) -> f64 {
    let start = t.len() / 2;
    let abs: Vec<f64> = theta.iter().map(|v| v.abs()).collect();
    let mut pts: Vec<(f64, f64)> = (start.max(1)..abs.len().saturating_sub(1))
        .filter(|&i| abs[i - 1] > 0.0 && abs[i + 1] > 0.0 && abs[i] >= abs[i - 1] && abs[i] >= abs[i + 1])
        .map(|i| {
            // Parabola through the three log values locates the peak between
            // grid points.
            let (ym, y0, yp) = (abs[i - 1].ln(), abs[i].ln(), abs[i + 1].ln());
            let curv = ym - 2.0 * y0 + yp;
            let off = if curv < 0.0 { 0.5 * (ym - yp) / curv } else { 0.0 };
            let h = 0.5 * (t[i + 1] - t[i - 1]);
            (t[i] + off * h, y0 - 0.25 * (ym - yp) * off)
        })
        .collect();
    if pts.len() < 2 {
        let peak = abs[start..].iter().copied().fold(0.0, f64::max);
        pts = (start..abs.len()).filter(|&i| abs[i] >= 1e-3 * peak && abs[i] > 0.0).map(|i| (t[i], abs[i].ln())).collect();
    }
    let n = pts.len() as f64;
    if n < 2.0 {
        return f64::NAN;
    }
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    sxy / sxx
}

/// Nodes of the contour used for the residue cross-check.
const MODAL_CONTOUR_NODES: usize = 64;

/// Modes of the `t^2/2` kernel on `(0, pi)` with `xi_n = n^{-power}`.
pub fn run_nonsobolev_demo(modes: &[u32], power: f64, t_grid: &[f64]) -> Result<Vec<ModalGrowthReport>, ExperimentError> {
    let kernel = MemoryKernel::PolynomialHalfSquare;
    let mut reports = Vec::with_capacity(modes.len());
    for &n in modes {
        if n == 0 {
            return Err(ExperimentError::InvalidParameter("mode index must be positive".into()));
        }
        let xi = power_law(n, power);
        let poles = half_square_poles(n);
        let predicted_rate = poles.iter().map(|p| p.re).fold(f64::NEG_INFINITY, f64::max);
        let t_safe = ((f64::MAX / 4.0).ln() - xi.abs().ln().max(0.0)) / predicted_rate;
        let times: Vec<f64> = t_grid.iter().copied().filter(|&t| t >= 0.0 && t <= t_safe).collect();
        let theta_n: Vec<f64> = times.iter().map(|&t| modal_residue_sum(n, xi, t)).collect();

        let contour = ContourSpec::Talbot { nodes: MODAL_CONTOUR_NODES, shift: predicted_rate + 0.5 };
        let t_check = 10.0 / (n as f64).sqrt();
        let mut contour_check = Vec::new();
        let mut max_rel_deviation = 0.0_f64;
        let mut constants = Vec::new();
        for (&t, &res) in times.iter().zip(&theta_n) {
            if t > t_check {
                break;
            }
            let num = modal_solution(&kernel, n, xi, t, &contour)?.value;
            contour_check.push((t, res, num));
            if res.abs() > 1e-10 {
                max_rel_deviation = max_rel_deviation.max((num - res).abs() / res.abs());
            }
            let exp_sum: f64 = poles.iter().map(|&p| (p * t).exp().re).sum::<f64>() * xi;
            if exp_sum.abs() > 1e-3 * xi {
                constants.push(num / exp_sum);
            }
        }
        constants.sort_by(f64::total_cmp);
        let measured_constant = constants.get(constants.len() / 2).copied().unwrap_or(f64::NAN);
        reports.push(ModalGrowthReport {
            n,
            xi,
            poles,
            fitted_rate: fit_growth_rate(&times, &theta_n),
            t_grid: times,
            theta_n,
            contour_check,
            max_rel_deviation,
            predicted_rate,
            printed_rate: printed_rate(n),
            measured_constant,
            printed_constant: PRINTED_RESIDUE_CONSTANT,
            t_safe,
        });
    }
    Ok(reports)
}

/// `max_{1 <= n <= n_max} |theta_n(t)|` with `xi_n = n^{-power}`, and the
/// mode attaining it.
pub fn modal_maximum(n_max: u32, power: f64, t: f64) -> (f64, u32) {
    (1..=n_max)
        .map(|n| (modal_residue_sum(n, power_law(n, power), t).abs(), n))
        .fold((0.0, 0), |best, cur| if cur.0 > best.0 { cur } else { best })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub x: f64,
    /// End of the interval checked for silence, `x/a - 3 dx/a`.
    pub quiet_until: f64,
    pub max_quiet: f64,
    pub quiet_ok: bool,
    pub arrival_measured: Option<f64>,
    pub arrival_predicted: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedReport {
    pub a: f64,
    pub dx: f64,
    pub dt: f64,
    pub f_norm: f64,
    pub tolerance: f64,
    pub probes: Vec<ProbeReport>,
}

/// Levels, as fractions of the probe maximum, through which the rising
/// edge is extrapolated back to zero.
const ARRIVAL_LEVELS: (f64, f64) = (0.01, 0.02);

fn crossing(t: &[f64], v: &[f64], level: f64) -> Option<f64> {
    let i = v.iter().position(|x| x.abs() >= level)?;
    if i == 0 {
        return Some(t[0]);
    }
    let (a, b) = (v[i - 1].abs(), v[i].abs());
    Some(t[i - 1] + (level - a) / (b - a) * (t[i] - t[i - 1]))
}

/// Checks that the ramp response is silent ahead of the front at each probe
/// and measures when the front arrives.
pub fn run_finite_speed_check(
    kernel: &MemoryKernel,
    probes: &[f64],
    tolerance: f64,
    horizon: f64,
    settings: &SolverSettings,
) -> Result<SpeedReport, ExperimentError> {
    let a = wave_speed(kernel)?;
    let control = BoundaryControl::Ramp;
    let field = simulate(kernel, &control, Geometry::SemiInfinite, horizon, settings)?;
    let dx = field.dx();
    let t = field.t_grid();
    let f_norm = t.iter().map(|&s| control.value(s).abs()).fold(0.0, f64::max);
    let mut reports = Vec::with_capacity(probes.len());
    for &x in probes {
        let series = field.series_at(x)?;
        let quiet_until = x / a - 3.0 * dx / a;
        let max_quiet = t
            .iter()
            .zip(&series)
            .filter(|(s, _)| **s < quiet_until)
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max);
        let peak = series.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let arrival_measured = if peak > 0.0 {
            match (crossing(&t, &series, ARRIVAL_LEVELS.0 * peak), crossing(&t, &series, ARRIVAL_LEVELS.1 * peak)) {
                (Some(t1), Some(t2)) if t2 > t1 => {
                    Some(t1 - (t2 - t1) * ARRIVAL_LEVELS.0 / (ARRIVAL_LEVELS.1 - ARRIVAL_LEVELS.0))
                }
                (Some(t1), _) => Some(t1),
                _ => None,
            }
        } else {
            None
        };
        reports.push(ProbeReport {
            x,
            quiet_until,
            max_quiet,
            quiet_ok: max_quiet < tolerance * f_norm,
            arrival_measured,
            arrival_predicted: x / a,
        });
    }
    Ok(SpeedReport { a, dx, dt: field.dt(), f_norm, tolerance, probes: reports })
}

/// Convenience: the response of `kernel` to the ramp on the half-line,
/// simulated with `settings`.
pub fn simulated_response(
    kernel: &MemoryKernel,
    horizon: f64,
    settings: &SolverSettings,
) -> Result<TimeSignal, ExperimentError> {
    let field = simulate(kernel, &BoundaryControl::Ramp, Geometry::SemiInfinite, horizon, settings)?;
    Ok(extract_response(&field)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residue_sum_is_cos_cosh() {
        for n in [1, 4, 9] {
            let c = (n as f64 / 2.0).sqrt();
            for t in [0.0, 0.5, 2.0] {
                let want = (c * t).cos() * (c * t).cosh();
                assert!((modal_residue_sum(n, 1.0, t) - want).abs() < 1e-12 * want.abs().max(1.0));
            }
        }
    }

    #[test]
    fn fit_recovers_rate_of_damped_cosine() {
        let t: Vec<f64> = (0..2001).map(|i| i as f64 * 0.01).collect();
        let v: Vec<f64> = t.iter().map(|&s| (1.3 * s).exp() * (2.0 * s).cos()).collect();
        let r = fit_growth_rate(&t, &v);
        assert!((r - 1.3).abs() < 1e-3, "{r}");
    }

    #[test]
    fn identical_kernels_never_diverge() {
        let k = MemoryKernel::Constant(1.0);
        let s = SolverSettings { dt: 0.02, ..Default::default() };
        let rep = run_uniqueness_experiment(&k, &k, 1.0, 1.0, Geometry::SemiInfinite, &s).unwrap();
        assert!(rep.first_divergence_time.is_infinite());
        assert_eq!(rep.sup_diff_before, 0.0);
    }

    #[test]
    fn boundary_probe_has_no_quiet_zone() {
        let s = SolverSettings { dt: 0.02, ..Default::default() };
        let rep = run_finite_speed_check(&MemoryKernel::Constant(1.0), &[0.0, 2.0], 1e-6, 3.0, &s).unwrap();
        assert!(rep.probes[0].quiet_ok && rep.probes[0].max_quiet == 0.0);
        assert!(rep.probes[0].arrival_measured.unwrap().abs() < 1e-9);
        assert!((rep.probes[1].arrival_measured.unwrap() - 2.0).abs() < 2.0 * s.dt);
    }
}

use num_complex::Complex64;
use std::f64::consts::PI;

use super::transform::{expm1_over, forward_laplace};
use super::{LaplaceError, LaplaceValue, TimeSignal};
use crate::quadrature::GaussLegendre;

/// Transform of `chi_[0, horizon] r` from time samples.
pub fn project_rt_timedomain(r: &TimeSignal, horizon: f64, z: Complex64) -> Result<LaplaceValue, LaplaceError> {
    let cut = r.truncate(horizon)?;
    forward_laplace(&cut, z)
}

/// Line and quadrature parameters for [`project_rt_contour`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourQuadrature {
    /// Abscissa of the integration line, just right of the imaginary axis.
    pub epsilon: f64,
    /// Half-length of the integration line.
    pub cutoff: f64,
    pub gauss_points: usize,
}

impl Default for ContourQuadrature {
    fn default() -> Self {
        Self { epsilon: 1e-3, cutoff: 1e3, gauss_points: 16 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionValue {
    pub value: Complex64,
    pub cutoff_error: f64,
}

/// Transform of `chi_[0, horizon] r` computed from `R` alone,
/// `R^T(z) = (1/2 pi) int (e^{T(p - z)} - 1)/(p - z) R(p) dy`, `p = eps + i y`.
///
/// `response` is evaluated at points of the line `Re p = epsilon`; `z` must
/// lie strictly to the right of that line.
pub fn project_rt_contour<F>(
    response: F,
    horizon: f64,
    z: Complex64,
    quad: &ContourQuadrature,
) -> Result<ProjectionValue, LaplaceError>
where
    F: Fn(Complex64) -> Complex64,
{
    let eps = quad.epsilon;
    if !(eps > 0.0 && quad.cutoff > 1.0) {
        return Err(LaplaceError::InvalidParameter("contour needs epsilon > 0 and cutoff > 1".into()));
    }
    if !(z.re > eps) {
        return Err(LaplaceError::InvalidParameter(format!(
            "projection point {z} must lie right of the line Re p = {eps}"
        )));
    }
    let y_max = quad.cutoff;
    let at = |y: f64| response(Complex64::new(eps, y));
    let r_end = at(y_max);
    let r_half = at(0.5 * y_max);
    let ratio = (y_max * r_end.norm()) / (0.5 * y_max * r_half.norm()).max(f64::MIN_POSITIVE);
    if ratio > 1.2 && r_end.norm() > 0.0 {
        return Err(LaplaceError::SlowDecay { ratio });
    }

    let gl = GaussLegendre::new(quad.gauss_points);
    let mut edges = vec![0.0];
    let mut e = eps;
    while e < 1.0 {
        edges.push(e);
        e *= 2.0;
    }
    let width = 1.0_f64.min(2.0 * PI / horizon).min((z.re - eps).max(1e-3));
    let mut x = 1.0;
    edges.push(x);
    while x < y_max {
        x = (x + width).min(y_max);
        edges.push(x);
    }

    let integrand = |y: f64| {
        let p = Complex64::new(eps, y);
        expm1_over((p - z) * horizon) * horizon * response(p)
    };
    let mut sum = Complex64::new(0.0, 0.0);
    for w in edges.windows(2) {
        for (y, wt) in gl.mapped(w[0], w[1]) {
            sum += (integrand(y) + integrand(-y)) * wt;
        }
    }
    let mut value = sum / (2.0 * PI);
    if !(value.re.is_finite() && value.im.is_finite()) {
        return Err(LaplaceError::NonFinite);
    }

    let p_hi = Complex64::new(eps, y_max);
    let c = 0.5 * (p_hi * r_end + p_hi.conj() * at(-y_max));
    value += c / (PI * y_max);
    let cutoff_error = c.norm() * (1.0 + z.norm()).powi(2) / (PI * y_max * y_max);
    Ok(ProjectionValue { value, cutoff_error })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_response_projection_matches_closed_form() {
        // R(z) = -1/z for the constant unit kernel; r = -1 on (0, T].
        let t = 2.0;
        let z = Complex64::new(1.0, 0.5);
        let exact = -(1.0 - (-z * t).exp()) / z;
        let got = project_rt_contour(|p| -1.0 / p, t, z, &ContourQuadrature::default()).unwrap();
        assert!((got.value - exact).norm() < 1e-3, "{} vs {}", got.value, exact);
    }

    #[test]
    fn slow_decay_is_reported() {
        let err = project_rt_contour(|_| Complex64::new(1.0, 0.0), 1.0, Complex64::new(1.0, 0.0), &Default::default());
        assert!(matches!(err, Err(LaplaceError::SlowDecay { .. })));
    }

    #[test]
    fn timedomain_projection_rejects_long_horizon() {
        let r = TimeSignal::from_fn(0.1, 1.0, |t| t).unwrap();
        assert!(matches!(
            project_rt_timedomain(&r, 2.0, Complex64::new(1.0, 0.0)),
            Err(LaplaceError::TruncationBeyondHorizon { .. })
        ));
    }
}

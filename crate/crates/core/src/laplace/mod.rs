//! Transforms between time signals and their Laplace images.

mod bromwich;
mod grid;
mod projection;
mod signal;
mod talbot;
mod transform;

use num_complex::Complex64;
use thiserror::Error;

pub use bromwich::{invert_line_at, invert_line_fft};
pub use grid::FrequencyGrid;
pub use projection::{project_rt_contour, project_rt_timedomain, ContourQuadrature, ProjectionValue};
pub use signal::TimeSignal;
pub use transform::{forward_laplace, laplace_on_line, LaplaceValue, LineTransform};
pub(crate) use transform::piecewise_linear_transform;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LaplaceError {
    #[error("time signal has no samples")]
    EmptySignal,
    #[error("time signal needs at least two samples, got {0}")]
    TooShort(usize),
    #[error("time step must be positive and finite, got {0}")]
    NonpositiveStep(f64),
    #[error("sample {0} is not finite")]
    NonFiniteSample(usize),
    #[error("frequency grid is empty")]
    EmptyGrid,
    #[error("point {re}{im:+}i lies left of Re z = {z_min}")]
    OutsideHalfPlane { re: f64, im: f64, z_min: f64 },
    #[error("transform requested at {re}{im:+}i, outside the open right half-plane")]
    NonpositiveRealPart { re: f64, im: f64 },
    #[error("inversion time must be positive, got {0}")]
    NonpositiveTime(f64),
    #[error("truncation at {requested} exceeds signal horizon {horizon}")]
    TruncationBeyondHorizon { requested: f64, horizon: f64 },
    #[error("inversion at t = {t} did not converge: {detail}")]
    NonconvergentSum { t: f64, detail: String },
    #[error("inversion at t = {t} left imaginary part {imag:.3e} (value {value:.6e})")]
    SymmetryViolation { t: f64, imag: f64, value: f64 },
    #[error("response decays too slowly along the line (growth ratio {ratio:.3})")]
    SlowDecay { ratio: f64 },
    #[error("non-finite value produced")]
    NonFinite,
    #[error("{0}")]
    UnsupportedContour(String),
    #[error("{0}")]
    InvalidParameter(String),
}

/// How a Laplace image is brought back to the time domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContourSpec {
    /// Deformed Talbot contour with `nodes` midpoint nodes; `shift` moves the
    /// contour right of any singularity with positive real part.
    Talbot { nodes: usize, shift: f64 },
    /// Trapezoid rule on the Bromwich line `Re z = abscissa`, `|Im z| < cutoff`.
    Bromwich { abscissa: f64, cutoff: f64, nodes: usize },
}

impl Default for ContourSpec {
    fn default() -> Self {
        ContourSpec::Talbot { nodes: talbot::DEFAULT_NODES, shift: 0.0 }
    }
}

impl ContourSpec {
    pub fn talbot(nodes: usize, shift: f64) -> Self {
        ContourSpec::Talbot { nodes, shift }
    }

    pub fn validate(&self) -> Result<(), LaplaceError> {
        match *self {
            ContourSpec::Talbot { nodes, shift } => {
                if nodes < 8 || !shift.is_finite() {
                    return Err(LaplaceError::InvalidParameter(format!(
                        "Talbot contour needs at least 8 nodes and a finite shift (got {nodes}, {shift})"
                    )));
                }
            }
            ContourSpec::Bromwich { abscissa, cutoff, nodes } => {
                if !(abscissa > 0.0 && cutoff > 0.0 && nodes >= 2) {
                    return Err(LaplaceError::InvalidParameter(format!(
                        "Bromwich line needs abscissa > 0, cutoff > 0, nodes >= 2 (got {abscissa}, {cutoff}, {nodes})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Real-valued inverse transform of `transform` at `t > 0`.
///
/// `transform` must be analytic (continued) on and to the right of the chosen
/// contour and conjugate symmetric.
pub fn inverse_laplace<F>(transform: F, t: f64, contour: &ContourSpec) -> Result<f64, LaplaceError>
where
    F: Fn(Complex64) -> Complex64,
{
    contour.validate()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(LaplaceError::NonpositiveTime(t));
    }
    match *contour {
        ContourSpec::Talbot { nodes, shift } => talbot::invert(&transform, t, nodes, shift),
        ContourSpec::Bromwich { abscissa, cutoff, nodes } => bromwich::invert(&transform, t, abscissa, cutoff, nodes),
    }
}

/// Inverse of `e^{-z delay} G(z)` at `t`, given `G`: zero up to the delay,
/// then the inverse of `G` at `t - delay`.
pub fn inverse_laplace_delayed<F>(undelayed: F, delay: f64, t: f64, contour: &ContourSpec) -> Result<f64, LaplaceError>
where
    F: Fn(Complex64) -> Complex64,
{
    let s = t - delay;
    if s <= 1e-12 * t.abs().max(1.0) {
        contour.validate()?;
        return Ok(0.0);
    }
    inverse_laplace(undelayed, s, contour)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delayed_ramp() {
        // e^{-z}/z^2 is the ramp switched on at t = 1.
        let c = ContourSpec::default();
        assert_eq!(inverse_laplace_delayed(|z| 1.0 / (z * z), 1.0, 0.5, &c).unwrap(), 0.0);
        let v = inverse_laplace_delayed(|z| 1.0 / (z * z), 1.0, 3.0, &c).unwrap();
        assert!((v - 2.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_nonpositive_time() {
        assert!(matches!(
            inverse_laplace(|z| 1.0 / z, 0.0, &ContourSpec::default()),
            Err(LaplaceError::NonpositiveTime(_))
        ));
    }

    #[test]
    fn bromwich_contour_dispatch() {
        let c = ContourSpec::Bromwich { abscissa: 1.0, cutoff: 2000.0, nodes: 200_000 };
        let v = inverse_laplace(|z| 1.0 / ((z + 1.0) * (z + 2.0)), 1.0, &c).unwrap();
        let exact = (-1.0f64).exp() - (-2.0f64).exp();
        assert!((v - exact).abs() < 1e-3, "{v} vs {exact}");
    }
}

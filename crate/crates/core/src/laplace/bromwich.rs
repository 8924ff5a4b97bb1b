use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

use super::LaplaceError;

const SYMMETRY: f64 = 1e-8;
const CUTOFF_RATIO: f64 = 1e-2;

/// Symmetric trapezoid rule on the line `sigma + i y`, `|y| < cutoff`.
pub(crate) fn invert<F>(f: &F, t: f64, sigma: f64, cutoff: f64, nodes: usize) -> Result<f64, LaplaceError>
where
    F: Fn(Complex64) -> Complex64,
{
    let dy = cutoff / nodes as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut peak = 0.0_f64;
    let mut edge = 0.0_f64;
    for k in -(nodes as i64 - 1)..nodes as i64 {
        let y = k as f64 * dy;
        let fz = f(Complex64::new(sigma, y));
        if !(fz.re.is_finite() && fz.im.is_finite()) {
            return Err(LaplaceError::NonFinite);
        }
        let m = fz.norm();
        peak = peak.max(m);
        if k.unsigned_abs() as usize == nodes - 1 {
            edge = edge.max(m);
        }
        sum += fz * Complex64::new(0.0, y * t).exp();
    }
    if edge > CUTOFF_RATIO * peak {
        return Err(LaplaceError::NonconvergentSum {
            t,
            detail: format!("transform not decayed at cutoff (ratio {:.3e})", edge / peak),
        });
    }
    let value = sum * ((sigma * t).exp() * dy / (2.0 * PI));
    if value.im.abs() >= SYMMETRY * (1.0 + value.re.abs()) {
        return Err(LaplaceError::SymmetryViolation { t, imag: value.im, value: value.re });
    }
    Ok(value.re)
}

/// Inverts conjugate-symmetric samples `g_k = G(sigma + i k dy)`, `k >= 0`,
/// on the time grid `t_j = j * 2 pi / (n_fft dy)`, `j < n_fft / 2`.
pub fn invert_line_fft(values: &[Complex64], sigma: f64, dy: f64, n_fft: usize) -> Result<Vec<f64>, LaplaceError> {
    if values.is_empty() || values.len() > n_fft {
        return Err(LaplaceError::InvalidParameter(format!(
            "{} line samples do not fit an FFT of size {n_fft}",
            values.len()
        )));
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    buf[..values.len()].copy_from_slice(values);
    buf[0] *= 0.5;
    FftPlanner::new().plan_fft_inverse(n_fft).process(&mut buf);
    let dt = 2.0 * PI / (n_fft as f64 * dy);
    Ok(buf
        .iter()
        .take(n_fft / 2)
        .enumerate()
        .map(|(j, s)| (sigma * j as f64 * dt).exp() * dy / PI * s.re)
        .collect())
}

/// Same sum as [`invert_line_fft`] at a single time.
pub fn invert_line_at(values: &[Complex64], sigma: f64, dy: f64, t: f64) -> f64 {
    let mut sum = 0.5 * values[0].re;
    for (k, g) in values.iter().enumerate().skip(1) {
        sum += (g * Complex64::new(0.0, k as f64 * dy * t).exp()).re;
    }
    (sigma * t).exp() * dy / PI * sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_rule_inverts_smooth_transform() {
        let f = |z: Complex64| 1.0 / (z * z + 1.0);
        let got = invert(&f, 2.0, 0.5, 400.0, 40_000).unwrap();
        assert!((got - 2.0_f64.sin()).abs() < 1e-4);
    }

    #[test]
    fn fft_and_direct_agree() {
        let sigma = 0.3;
        let dy = 0.05;
        let values: Vec<Complex64> =
            (0..500).map(|k| 1.0 / (Complex64::new(sigma, k as f64 * dy) + 1.0).powi(2)).collect();
        let grid = invert_line_fft(&values, sigma, dy, 2048).unwrap();
        let dt = 2.0 * PI / (2048.0 * dy);
        for j in [0, 3, 40, 200] {
            let direct = invert_line_at(&values, sigma, dy, j as f64 * dt);
            assert!((grid[j] - direct).abs() < 1e-10);
        }
        let t = 40.0 * dt;
        assert!((grid[40] - t * (-t).exp()).abs() < 2e-2);
    }
}

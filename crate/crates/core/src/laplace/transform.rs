use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{LaplaceError, TimeSignal};

/// Transform value together with an estimate of the neglected tail beyond
/// the signal horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceValue {
    pub value: Complex64,
    pub truncation_bound: f64,
}

/// `(e^w - 1 - w) / w^2`
pub(crate) fn phi(w: Complex64) -> Complex64 {
    if w.norm() < 0.5 {
        let mut term = Complex64::new(0.5, 0.0);
        let mut sum = term;
        for k in 1..20 {
            term *= w / (k as f64 + 2.0);
            sum += term;
        }
        sum
    } else {
        (w.exp() - 1.0 - w) / (w * w)
    }
}

/// `(1 - e^{-u}(1 + u)) / u^2`
pub(crate) fn psi(u: Complex64) -> Complex64 {
    if u.norm() < 0.5 {
        let mut power = Complex64::new(1.0, 0.0);
        let mut factorial = 2.0;
        let mut sum = Complex64::new(0.0, 0.0);
        for k in 0..20 {
            if k > 0 {
                power *= -u;
                factorial *= k as f64 + 2.0;
            }
            sum += power * ((k + 1) as f64 / factorial);
        }
        sum
    } else {
        (1.0 - (-u).exp() * (1.0 + u)) / (u * u)
    }
}

/// `(e^w - 1) / w`
pub(crate) fn expm1_over(w: Complex64) -> Complex64 {
    if w.norm() < 1e-2 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for k in 1..8 {
            term *= w / (k as f64 + 1.0);
            sum += term;
        }
        sum
    } else {
        (w.exp() - 1.0) / w
    }
}

/// Tail estimate assuming `|v(t)| <= C (1 + t)` beyond the horizon, with
/// `C` read off the last few samples.
fn tail_bound(signal: &TimeSignal, sigma: f64) -> f64 {
    let v = signal.values();
    let n = v.len();
    let c = (n.saturating_sub(5)..n)
        .map(|i| v[i].abs() / (1.0 + signal.time(i)))
        .fold(0.0_f64, f64::max);
    let t = signal.horizon();
    c * (-sigma * t).exp() * ((1.0 + t) / sigma + 1.0 / (sigma * sigma))
}

/// Laplace transform of the piecewise linear interpolant of `signal` on
/// `[0, horizon]`, integrated exactly against `e^{-zt}`.
pub fn forward_laplace(signal: &TimeSignal, z: Complex64) -> Result<LaplaceValue, LaplaceError> {
    if !(z.re > 0.0) {
        return Err(LaplaceError::NonpositiveRealPart { re: z.re, im: z.im });
    }
    let value = piecewise_linear_transform(signal, z);
    if !(value.re.is_finite() && value.im.is_finite()) {
        return Err(LaplaceError::NonFinite);
    }
    Ok(LaplaceValue { value, truncation_bound: tail_bound(signal, z.re) })
}

/// Exact transform of the piecewise linear interpolant, valid for any `z`
/// (the sum is finite, hence entire in `z`).
pub(crate) fn piecewise_linear_transform(signal: &TimeSignal, z: Complex64) -> Complex64 {
    let h = signal.dt();
    let u = z * h;
    let a = psi_left(u);
    let b = psi(u);
    let v = signal.values();
    let mut sum = Complex64::new(0.0, 0.0);
    for j in 0..v.len() - 1 {
        let e = (-z * signal.time(j)).exp();
        sum += e * (a * v[j] + b * v[j + 1]);
    }
    sum * h
}

/// `(u - 1 + e^{-u}) / u^2`
fn psi_left(u: Complex64) -> Complex64 {
    phi(-u)
}

/// Transform values on the vertical line `sigma + i k dy`, `k = 0..count`,
/// with `dy = 2 pi / (n_fft dt)`, computed with one FFT.
#[derive(Debug, Clone, PartialEq)]
pub struct LineTransform {
    pub abscissa: f64,
    pub spacing: f64,
    pub values: Vec<Complex64>,
    pub truncation_bound: f64,
}

impl LineTransform {
    pub fn point(&self, k: usize) -> Complex64 {
        Complex64::new(self.abscissa, k as f64 * self.spacing)
    }
}

pub fn laplace_on_line(
    signal: &TimeSignal,
    sigma: f64,
    n_fft: usize,
    count: usize,
) -> Result<LineTransform, LaplaceError> {
    if !(sigma > 0.0) {
        return Err(LaplaceError::NonpositiveRealPart { re: sigma, im: 0.0 });
    }
    let v = signal.values();
    if n_fft < v.len() || count > n_fft {
        return Err(LaplaceError::InvalidParameter(format!(
            "FFT size {n_fft} must cover {} samples and {count} nodes",
            v.len()
        )));
    }
    let h = signal.dt();
    let mut buf: Vec<Complex64> = (0..n_fft)
        .map(|j| if j < v.len() { Complex64::new((-sigma * signal.time(j)).exp() * v[j], 0.0) } else { Complex64::new(0.0, 0.0) })
        .collect();
    FftPlanner::new().plan_fft_forward(n_fft).process(&mut buf);
    let spacing = 2.0 * std::f64::consts::PI / (n_fft as f64 * h);
    let last = v.len() - 1;
    let t_last = signal.time(last);
    let mut values = Vec::with_capacity(count);
    for (k, s) in buf.iter().take(count).enumerate() {
        let z = Complex64::new(sigma, k as f64 * spacing);
        let u = z * h;
        let tail = (-z * t_last).exp() * v[last];
        let value = (psi_left(u) * (s - tail) + phi(u) * (s - v[0])) * h;
        if !(value.re.is_finite() && value.im.is_finite()) {
            return Err(LaplaceError::NonFinite);
        }
        values.push(value);
    }
    Ok(LineTransform { abscissa: sigma, spacing, values, truncation_bound: tail_bound(signal, sigma) })
}

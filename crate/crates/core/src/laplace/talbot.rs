use num_complex::Complex64;
use std::f64::consts::PI;

use super::LaplaceError;

pub const DEFAULT_NODES: usize = 48;
pub const MAX_DOUBLINGS: usize = 2;
const AGREEMENT: f64 = 1e-9;
const SYMMETRY: f64 = 1e-8;
const END_TERM_RATIO: f64 = 1e-6;

const C0: f64 = -0.6122;
const C1: f64 = 0.5017;
const C2: f64 = 0.6407;
const C3: f64 = 0.2645;

#[derive(Debug, Clone, Copy)]
pub(crate) struct TalbotSum {
    pub value: Complex64,
    pub abs_sum: f64,
}

/// Midpoint rule on the modified Talbot contour
/// `z(th) = shift + (n/t)(c0 + c1 th cot(c2 th) + i c3 th)`, `th` in `(-pi, pi)`.
pub(crate) fn talbot_sum<F>(f: &F, t: f64, n: usize, shift: f64) -> Result<TalbotSum, LaplaceError>
where
    F: Fn(Complex64) -> Complex64,
{
    let scale = n as f64 / t;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut abs_sum = 0.0;
    let mut peak = 0.0_f64;
    let mut ends = 0.0_f64;
    for k in 0..n {
        let th = -PI + (k as f64 + 0.5) * 2.0 * PI / n as f64;
        let a = C2 * th;
        let cot = a.cos() / a.sin();
        let z = Complex64::new(shift + scale * (C0 + C1 * th * cot), scale * C3 * th);
        let dz = Complex64::new(scale * C1 * (cot - a / a.sin().powi(2)), scale * C3);
        let term = (z * t).exp() * f(z) * dz;
        if !(term.re.is_finite() && term.im.is_finite()) {
            return Err(LaplaceError::NonconvergentSum { t, detail: format!("non-finite term at node {k} of {n}") });
        }
        let m = term.norm();
        abs_sum += m;
        peak = peak.max(m);
        if k == 0 || k == n - 1 {
            ends = ends.max(m);
        }
        sum += term;
    }
    if ends > END_TERM_RATIO * peak {
        return Err(LaplaceError::NonconvergentSum {
            t,
            detail: format!("contour end terms not negligible (ratio {:.3e})", ends / peak),
        });
    }
    let norm = Complex64::new(0.0, n as f64);
    Ok(TalbotSum { value: sum / norm, abs_sum: abs_sum / n as f64 })
}

/// Talbot inversion with node doubling: the coarse value is accepted once it
/// agrees with the refined one.
pub(crate) fn invert<F>(f: &F, t: f64, nodes: usize, shift: f64) -> Result<f64, LaplaceError>
where
    F: Fn(Complex64) -> Complex64,
{
    let mut n = nodes;
    let mut coarse = talbot_sum(f, t, n, shift)?;
    for _ in 0..MAX_DOUBLINGS {
        let fine = talbot_sum(f, t, 2 * n, shift)?;
        let v = coarse.value.re;
        let tol = (AGREEMENT * (1.0 + v.abs())).max(64.0 * f64::EPSILON * (coarse.abs_sum + fine.abs_sum));
        if (fine.value.re - v).abs() <= tol {
            let imag = coarse.value.im;
            if imag.abs() >= SYMMETRY * (1.0 + v.abs()) {
                return Err(LaplaceError::SymmetryViolation { t, imag, value: v });
            }
            return Ok(v);
        }
        n *= 2;
        coarse = fine;
    }
    Err(LaplaceError::NonconvergentSum {
        t,
        detail: format!("no agreement after {MAX_DOUBLINGS} node doublings from {nodes}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverts_elementary_transforms() {
        let cases: [(fn(Complex64) -> Complex64, fn(f64) -> f64); 4] = [
            (|z| 1.0 / (z * z), |t| t),
            (|z| 1.0 / (z + 1.0), |t| (-t).exp()),
            (|z| 1.0 / (z * z + 1.0), |t| t.sin()),
            (|z| 1.0 / (z.sqrt() * z), |t| 2.0 * (t / PI).sqrt()),
        ];
        for (f, exact) in cases {
            for t in [0.1, 1.0, 5.0] {
                let got = invert(&f, t, DEFAULT_NODES, 0.0).unwrap();
                assert!((got - exact(t)).abs() < 1e-9 * (1.0 + exact(t).abs()), "t={t} got={got}");
            }
        }
    }

    #[test]
    fn shift_handles_growing_signal() {
        let f = |z: Complex64| 1.0 / (z - 2.0);
        let got = invert(&f, 3.0, DEFAULT_NODES, 2.0).unwrap();
        assert!((got - 6.0_f64.exp()).abs() < 1e-9 * 6.0_f64.exp());
    }

    #[test]
    fn delayed_transform_is_flagged() {
        let f = |z: Complex64| (-z * 5.0).exp() / z;
        assert!(matches!(invert(&f, 1.0, DEFAULT_NODES, 0.0), Err(LaplaceError::NonconvergentSum { .. })));
    }

    #[test]
    fn asymmetric_transform_is_flagged() {
        let f = |z: Complex64| Complex64::new(0.0, 1.0) / z;
        assert!(matches!(invert(&f, 1.0, DEFAULT_NODES, 0.0), Err(LaplaceError::SymmetryViolation { .. })));
    }
}

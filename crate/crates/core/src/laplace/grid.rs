use num_complex::Complex64;

use super::LaplaceError;

/// Finite set of points in the open right half-plane.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    points: Vec<Complex64>,
    z_min: f64,
    conjugate_symmetric: bool,
}

impl FrequencyGrid {
    pub fn new(points: Vec<Complex64>, z_min: f64) -> Result<Self, LaplaceError> {
        if points.is_empty() {
            return Err(LaplaceError::EmptyGrid);
        }
        if !(z_min.is_finite() && z_min > 0.0) {
            return Err(LaplaceError::InvalidParameter(format!("z_min must be positive, got {z_min}")));
        }
        if let Some(z) = points.iter().find(|z| !(z.re.is_finite() && z.im.is_finite()) || z.re < z_min) {
            return Err(LaplaceError::OutsideHalfPlane { re: z.re, im: z.im, z_min });
        }
        let conjugate_symmetric = points.iter().all(|z| {
            z.im == 0.0 || points.iter().any(|w| (w - z.conj()).norm() <= 1e-14 * (1.0 + z.norm()))
        });
        Ok(Self { points, z_min, conjugate_symmetric })
    }

    /// `count` real points spaced geometrically between `lo` and `hi`.
    pub fn real_geometric(lo: f64, hi: f64, count: usize) -> Result<Self, LaplaceError> {
        let points = geometric(lo, hi, count).into_iter().map(|x| Complex64::new(x, 0.0)).collect();
        Self::new(points, lo)
    }

    /// Points `re + i*y` for `y` in `{0, +-y_k}` with `y_k` geometric in
    /// `[y_lo, y_hi]`; symmetric under conjugation by construction.
    pub fn vertical_line(re: f64, y_lo: f64, y_hi: f64, count: usize) -> Result<Self, LaplaceError> {
        let mut points = vec![Complex64::new(re, 0.0)];
        for y in geometric(y_lo, y_hi, count) {
            points.push(Complex64::new(re, y));
            points.push(Complex64::new(re, -y));
        }
        Self::new(points, re)
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn z_min(&self) -> f64 {
        self.z_min
    }

    pub fn is_conjugate_symmetric(&self) -> bool {
        self.conjugate_symmetric
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn geometric(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let ratio = (hi / lo).ln() / (count - 1) as f64;
            (0..count).map(|i| lo * (ratio * i as f64).exp()).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_points_left_of_z_min() {
        let err = FrequencyGrid::new(vec![Complex64::new(0.5, 1.0)], 1.0).unwrap_err();
        assert!(matches!(err, LaplaceError::OutsideHalfPlane { .. }));
        assert!(FrequencyGrid::new(vec![], 1.0).is_err());
    }

    #[test]
    fn symmetry_flag() {
        let g = FrequencyGrid::vertical_line(1.0, 0.1, 10.0, 5).unwrap();
        assert!(g.is_conjugate_symmetric());
        assert_eq!(g.len(), 11);
        let h = FrequencyGrid::new(vec![Complex64::new(1.0, 1.0)], 1.0).unwrap();
        assert!(!h.is_conjugate_symmetric());
    }
}

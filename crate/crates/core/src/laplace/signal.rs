use super::LaplaceError;

/// Uniformly sampled real function of time starting at `t = 0`.
///
/// The horizon is `dt * (len - 1)`; nothing is padded or extrapolated
/// implicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal {
    dt: f64,
    values: Vec<f64>,
}

impl TimeSignal {
    pub fn new(dt: f64, values: Vec<f64>) -> Result<Self, LaplaceError> {
        if values.is_empty() {
            return Err(LaplaceError::EmptySignal);
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(LaplaceError::NonpositiveStep(dt));
        }
        if values.len() < 2 {
            return Err(LaplaceError::TooShort(values.len()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(LaplaceError::NonFiniteSample(i));
        }
        Ok(Self { dt, values })
    }

    /// Samples `f` at `0, dt, ..., horizon` (the last sample lands on the
    /// grid point nearest to `horizon`).
    pub fn from_fn(dt: f64, horizon: f64, f: impl FnMut(f64) -> f64) -> Result<Self, LaplaceError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(LaplaceError::NonpositiveStep(dt));
        }
        let n = (horizon / dt).round() as usize + 1;
        let values = (0..n).map(|i| i as f64 * dt).map(f).collect();
        Self::new(dt, values)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.dt * (self.values.len() - 1) as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |i| i as f64 * self.dt)
    }

    /// Linear interpolation; `None` outside `[0, horizon]`.
    pub fn sample(&self, t: f64) -> Option<f64> {
        let horizon = self.horizon();
        if !(0.0..=horizon * (1.0 + 1e-12)).contains(&t) {
            return None;
        }
        let s = t / self.dt;
        let i = (s.floor() as usize).min(self.values.len() - 2);
        let frac = (s - i as f64).clamp(0.0, 1.0);
        Some(self.values[i] * (1.0 - frac) + self.values[i + 1] * frac)
    }

    /// Restriction to `[0, horizon]`, cut at the grid point nearest to
    /// `horizon`.
    pub fn truncate(&self, horizon: f64) -> Result<TimeSignal, LaplaceError> {
        let full = self.horizon();
        if horizon > full * (1.0 + 1e-12) {
            return Err(LaplaceError::TruncationBeyondHorizon { requested: horizon, horizon: full });
        }
        let n = ((horizon / self.dt).round() as usize + 1).clamp(2, self.values.len());
        TimeSignal::new(self.dt, self.values[..n].to_vec())
    }

    /// Every `step`-th sample.
    pub fn decimate(&self, step: usize) -> Result<TimeSignal, LaplaceError> {
        let values: Vec<f64> = self.values.iter().step_by(step.max(1)).copied().collect();
        TimeSignal::new(self.dt * step.max(1) as f64, values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> TimeSignal {
        let values = self.values.iter().enumerate().map(|(i, &v)| f(i as f64 * self.dt, v)).collect();
        TimeSignal { dt: self.dt, values }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_input() {
        assert_eq!(TimeSignal::new(0.0, vec![0.0, 1.0]), Err(LaplaceError::NonpositiveStep(0.0)));
        assert_eq!(TimeSignal::new(0.1, vec![0.0]), Err(LaplaceError::TooShort(1)));
        assert_eq!(TimeSignal::new(0.1, vec![]), Err(LaplaceError::EmptySignal));
        assert_eq!(TimeSignal::new(0.1, vec![0.0, f64::NAN]), Err(LaplaceError::NonFiniteSample(1)));
    }

    #[test]
    fn horizon_is_exact() {
        let s = TimeSignal::from_fn(0.25, 2.0, |t| t).unwrap();
        assert_eq!(s.len(), 9);
        assert_eq!(s.horizon(), 2.0);
        assert_eq!(s.sample(0.375), Some(0.375));
        assert_eq!(s.sample(2.5), None);
    }

    #[test]
    fn truncation_and_decimation() {
        let s = TimeSignal::from_fn(0.1, 10.0, |t| t * t).unwrap();
        let cut = s.truncate(2.0).unwrap();
        assert_eq!(cut.len(), 21);
        assert!((cut.horizon() - 2.0).abs() < 1e-12);
        assert!(matches!(s.truncate(11.0), Err(LaplaceError::TruncationBeyondHorizon { .. })));
        let d = s.decimate(2).unwrap();
        assert_eq!(d.len(), 51);
        assert!((d.dt() - 0.2).abs() < 1e-15);
    }
}

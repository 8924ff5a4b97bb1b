use crate::kernel::MemoryKernel;
use crate::laplace::TimeSignal;

use super::{BoundaryControl, ForwardError, Geometry};

/// Largest growth of the field maximum allowed in one step.
const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeDomainParams {
    /// Number of spatial intervals.
    pub nx: usize,
    pub dt: f64,
    pub horizon: f64,
    /// Far boundary for the half-line; [`default_far_field`] when `None`.
    pub x_max: Option<f64>,
}

/// `theta(x_i, t_n)` on a uniform grid, stored time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSolution {
    dx: f64,
    dt: f64,
    nx: usize,
    nt: usize,
    values: Vec<f64>,
}

impl FieldSolution {
    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of spatial intervals.
    pub fn nx(&self) -> usize {
        self.nx
    }

    /// Number of time steps.
    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn x_grid(&self) -> Vec<f64> {
        (0..=self.nx).map(|i| i as f64 * self.dx).collect()
    }

    pub fn t_grid(&self) -> Vec<f64> {
        (0..=self.nt).map(|n| n as f64 * self.dt).collect()
    }

    pub fn value(&self, n: usize, i: usize) -> f64 {
        self.values[n * (self.nx + 1) + i]
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.values[n * (self.nx + 1)..(n + 1) * (self.nx + 1)]
    }

    /// Time series at `x`, linearly interpolated between grid nodes.
    pub fn series_at(&self, x: f64) -> Result<Vec<f64>, ForwardError> {
        let s = x / self.dx;
        if !(s >= -1e-9 && s <= self.nx as f64 + 1e-9) {
            return Err(ForwardError::InvalidParameter(format!("position {x} outside the computed grid")));
        }
        let s = s.clamp(0.0, self.nx as f64);
        let i = (s.round() as usize).min(self.nx);
        if (s - i as f64).abs() < 1e-9 {
            return Ok((0..=self.nt).map(|n| self.value(n, i)).collect());
        }
        let i = (s.floor() as usize).min(self.nx - 1);
        let w = s - i as f64;
        Ok((0..=self.nt).map(|n| (1.0 - w) * self.value(n, i) + w * self.value(n, i + 1)).collect())
    }
}

/// Far boundary for the half-line: beyond the reach of the front for wave
/// kernels, several diffusion lengths otherwise.
pub fn default_far_field(kernel: &MemoryKernel, horizon: f64) -> f64 {
    match kernel.wave_speed_sq().filter(|&a2| a2 > 0.0) {
        Some(a2) => a2.sqrt() * horizon + 1.0,
        None => 1.0 + 8.0 * (kernel.delta_mass().max(1.0) * horizon).sqrt(),
    }
}

/// Integrates `theta_t = k * theta_xx` written as `theta = kappa * theta_xx`
/// with `kappa(t) = int_0^t k`.
///
/// The convolution is discretized by the trapezoid rule with the
/// Euler–Maclaurin end correction, and `theta_xx` by the compact
/// fourth-order three-point relation `(1 + dx^2/12 D) theta_xx = D theta`.
/// Each step is one tridiagonal solve. For the constant kernel this is the
/// Fox–Goodwin/Numerov scheme, exact at `a dt = dx`; for the delta kernel it
/// reduces to Crank–Nicolson.
pub fn solve_time_domain(
    kernel: &MemoryKernel,
    control: &BoundaryControl,
    geometry: Geometry,
    params: &TimeDomainParams,
) -> Result<FieldSolution, ForwardError> {
    let TimeDomainParams { nx, dt, horizon, x_max } = *params;
    if nx < 16 {
        return Err(ForwardError::InvalidParameter(format!("nx must be at least 16, got {nx}")));
    }
    if !(dt > 0.0 && dt.is_finite() && horizon > 0.0 && horizon.is_finite()) {
        return Err(ForwardError::InvalidParameter(format!("need dt > 0 and horizon > 0, got {dt}, {horizon}")));
    }
    let length = match geometry {
        Geometry::Interval(l) => l,
        Geometry::SemiInfinite => x_max.unwrap_or_else(|| default_far_field(kernel, horizon)),
    };
    if !(length > 0.0 && length.is_finite()) {
        return Err(ForwardError::InvalidParameter(format!("far boundary must be positive, got {length}")));
    }
    let dx = length / nx as f64;
    let c_delta = kernel.delta_mass();
    let k0 = kernel.regular_value(0.0);
    if c_delta == 0.0 && k0 > 0.0 {
        let speed = k0.sqrt();
        if speed * dt > dx * (1.0 + 1e-9) {
            return Err(ForwardError::CflViolation { speed, dt, dx });
        }
    }

    let nt = (horizon / dt).round() as usize;
    let m = nx - 1;
    // Trapezoid weights on kappa, split into the singular part (a constant
    // weight, accumulated as a running sum) and the regular part.
    let w0 = 0.5 * dt * c_delta + k0 * dt * dt / 12.0;
    let regular = kernel.has_regular_part();
    let weights: Vec<f64> = if regular {
        (0..=nt).map(|j| dt * kernel.integrated_regular(j as f64 * dt)).collect()
    } else {
        Vec::new()
    };
    let s = (dx * dx / 12.0 - w0) / (dx * dx);
    let inv_dx2 = 1.0 / (dx * dx);

    let mut values = vec![0.0; (nt + 1) * (nx + 1)];
    let mut lap = vec![0.0; if regular { (nt + 1) * m } else { m }];
    let mut running = vec![0.0; m];
    values[0] = control.value(0.0);
    let mut rhs = vec![0.0; m];
    let mut c_prime = vec![0.0; m];
    let mut prev_max = values[0].abs();
    let mut f_scale = values[0].abs();

    for n in 1..=nt {
        for (r, acc) in rhs.iter_mut().zip(&running) {
            *r = dt * c_delta * acc;
        }
        if regular {
            for j in 1..n {
                let w = weights[n - j];
                let past = &lap[j * m..(j + 1) * m];
                for (r, p) in rhs.iter_mut().zip(past) {
                    *r += w * p;
                }
            }
        }
        let f = control.value(n as f64 * dt);
        f_scale = f_scale.max(f.abs());
        rhs[0] -= s * f;

        // Thomas algorithm for diag 1 - 2s, off-diagonals s.
        let diag = 1.0 - 2.0 * s;
        let row = n * (nx + 1);
        c_prime[0] = s / diag;
        rhs[0] /= diag;
        for i in 1..m {
            let denom = diag - s * c_prime[i - 1];
            c_prime[i] = s / denom;
            rhs[i] = (rhs[i] - s * rhs[i - 1]) / denom;
        }
        values[row] = f;
        values[row + m] = rhs[m - 1];
        for i in (0..m - 1).rev() {
            rhs[i] -= c_prime[i] * rhs[i + 1];
            values[row + 1 + i] = rhs[i];
        }

        let theta = &values[row..row + nx + 1];
        let out = if regular { &mut lap[n * m..(n + 1) * m] } else { &mut lap[..] };
        for i in 0..m {
            out[i] = (theta[i] - 2.0 * theta[i + 1] + theta[i + 2]) * inv_dx2;
            running[i] += out[i];
        }

        let cur_max = theta.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if !cur_max.is_finite() || cur_max > DIVERGENCE_FACTOR * (prev_max + f_scale + f64::MIN_POSITIVE) {
            return Err(ForwardError::UnstableStep { step: n, time: n as f64 * dt });
        }
        prev_max = cur_max;
    }
    Ok(FieldSolution { dx, dt, nx, nt, values })
}

/// `theta_x(0, t)` by the one-sided second-order stencil.
pub fn extract_response(field: &FieldSolution) -> Result<TimeSignal, ForwardError> {
    if field.nx < 2 {
        return Err(ForwardError::InvalidParameter("response needs at least three x nodes".into()));
    }
    let values = (0..=field.nt)
        .map(|n| {
            let r = field.row(n);
            (-3.0 * r[0] + 4.0 * r[1] - r[2]) / (2.0 * field.dx)
        })
        .collect();
    Ok(TimeSignal::new(field.dt, values)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(nx: usize, dt: f64, horizon: f64, x_max: f64) -> TimeDomainParams {
        TimeDomainParams { nx, dt, horizon, x_max: Some(x_max) }
    }

    #[test]
    fn exact_transport_at_unit_courant_number() {
        let field = solve_time_domain(
            &MemoryKernel::Constant(1.0),
            &BoundaryControl::Ramp,
            Geometry::SemiInfinite,
            &params(300, 0.02, 5.0, 6.0),
        )
        .unwrap();
        let x = field.x_grid();
        for (n, t) in field.t_grid().iter().enumerate() {
            for (i, xi) in x.iter().enumerate() {
                assert!((field.value(n, i) - (t - xi).max(0.0)).abs() < 1e-10);
            }
        }
        let r = extract_response(&field).unwrap();
        assert!(r.values()[2..].iter().all(|v| (v + 1.0).abs() < 1e-9));
    }

    #[test]
    fn zero_data_gives_zero_field() {
        let zero = BoundaryControl::sampled(TimeSignal::new(0.5, vec![0.0; 11]).unwrap()).unwrap();
        let field =
            solve_time_domain(&MemoryKernel::Exponential(1.0), &zero, Geometry::Interval(2.0), &params(40, 0.05, 2.0, 0.0))
                .unwrap();
        assert!(field.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cfl_is_enforced() {
        let err = solve_time_domain(
            &MemoryKernel::Constant(4.0),
            &BoundaryControl::Ramp,
            Geometry::Interval(1.0),
            &params(100, 0.01, 1.0, 0.0),
        );
        assert!(matches!(err, Err(ForwardError::CflViolation { .. })));
    }

    #[test]
    fn heat_response_matches_closed_form() {
        let field = solve_time_domain(
            &MemoryKernel::DiracDelta,
            &BoundaryControl::Ramp,
            Geometry::SemiInfinite,
            &TimeDomainParams { nx: 900, dt: 2.5e-4, horizon: 1.0, x_max: None },
        )
        .unwrap();
        let r = extract_response(&field).unwrap();
        for (t, v) in r.times().zip(r.values()).skip(1) {
            assert!((v + 2.0 * (t / std::f64::consts::PI).sqrt()).abs() < 1e-2, "t={t} r={v}");
        }
    }
}

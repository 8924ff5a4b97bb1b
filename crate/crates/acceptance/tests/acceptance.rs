//! Acceptance checks. Each test prints one `[PASS]` or `[FAIL]` line with the
//! measured quantities and then asserts the same condition.

use std::fs;
use std::time::{Duration, Instant};

use gpheat::experiments::{
    modal_maximum, perturb_after, run_finite_speed_check, run_nonsobolev_demo, run_truncation_consistency,
    run_uniqueness_experiment, simulate, SolverSettings,
};
use gpheat::forward::{
    omega_continued, response, response_interval, solve_time_domain, theta_time, BoundaryControl, Geometry,
    TimeDomainParams,
};
use gpheat::inverse::{
    recover_from_finite_data, recover_k_semiaxis, recover_omega_interval, reconstruct_kernel_time, synthetic_record,
    FiniteDataOptions,
};
use gpheat::kernel::{default_probes, validate_k0, MemoryKernel};
use gpheat::laplace::{ContourQuadrature, ContourSpec, FrequencyGrid};
use gpheat_cli::config::{parse_config, Command as CliCommand};
use gpheat_cli::run::execute;
use num_complex::Complex64;

fn report(id: u32, title: &str, ok: bool, detail: &str, elapsed: Duration, budget_s: f64) -> bool {
    let secs = elapsed.as_secs_f64();
    let pass = ok && secs < budget_s;
    println!(
        "[{}] criterion {id}: {title} | {detail} | runtime {secs:.2} s (budget {budget_s} s)",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

fn ramp() -> BoundaryControl {
    BoundaryControl::Ramp
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

#[test]
fn criterion_01_transport_exactness() {
    let start = Instant::now();
    let kernel = MemoryKernel::Constant(1.0);
    let contour = ContourSpec::Talbot { nodes: 48, shift: 0.0 };
    let times: Vec<f64> = (1..=100).map(|i| 0.05 * i as f64).collect();
    let mut laplace_err = 0.0_f64;
    for x in [0.5, 1.0, 2.0] {
        for &t in &times {
            let v = theta_time(&kernel, &ramp(), Geometry::SemiInfinite, x, t, &contour).unwrap();
            laplace_err = laplace_err.max((v - (t - x).max(0.0)).abs());
        }
    }

    let params = TimeDomainParams { nx: 600, dt: 5e-3, horizon: 5.0, x_max: Some(6.0) };
    let field = solve_time_domain(&kernel, &ramp(), Geometry::SemiInfinite, &params).unwrap();
    let t_grid = field.t_grid();
    let mut solver_err = 0.0_f64;
    for x in [0.5, 1.0, 2.0] {
        let series = field.series_at(x).unwrap();
        for (t, v) in t_grid.iter().zip(&series) {
            solver_err = solver_err.max((v - (t - x).max(0.0)).abs());
        }
    }
    let ok_laplace = laplace_err <= 1e-6;
    let ok_solver = solver_err <= 2e-3;
    let detail = format!(
        "contour max err {laplace_err:.3e} <= 1e-6 {}; solver (nx=600, dt=5e-3, a dt/dx={:.2}) max err {solver_err:.3e} <= 2e-3 {}",
        mark(ok_laplace),
        field.dt() / field.dx(),
        mark(ok_solver)
    );
    let pass = report(1, "transport exactness, constant kernel", ok_laplace && ok_solver, &detail, start.elapsed(), 30.0);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_02_cross_method_forward_agreement() {
    let start = Instant::now();
    let kernel = MemoryKernel::Exponential(1.0);
    let settings = SolverSettings { dt: 5e-3, courant: 1.0, margin: 1.0 };
    let field = simulate(&kernel, &ramp(), Geometry::SemiInfinite, 4.0, &settings).unwrap();
    let series = field.series_at(1.0).unwrap();
    let mut worst = 0.0_f64;
    for (t, v) in field.t_grid().iter().zip(&series) {
        let exact = theta_time(&kernel, &ramp(), Geometry::SemiInfinite, 1.0, *t, &ContourSpec::default()).unwrap();
        worst = worst.max((v - exact).abs());
    }
    let ok = worst <= 5e-3;
    let detail = format!("max |theta_solver - theta_contour| at x=1, t in [0,4]: {worst:.3e} <= 5e-3 (dt=5e-3, a dt/dx=1)");
    let pass = report(2, "contour versus solver, exponential kernel", ok, &detail, start.elapsed(), 60.0);
    assert!(pass, "{detail}");
}

fn exact_k_closure(kernel: &MemoryKernel) -> impl Fn(Complex64) -> Complex64 + '_ {
    move |z| {
        let f = 1.0 / (z * z);
        let r = -f * omega_continued(kernel, z);
        z * f * f / (r * r)
    }
}

#[test]
fn criterion_03_exact_inverse_round_trip() {
    let start = Instant::now();
    let grid = FrequencyGrid::real_geometric(0.5, 50.0, 20).unwrap();
    let mut k_err = 0.0_f64;
    let mut t_err = 0.0_f64;
    let cases: [(MemoryKernel, fn(f64) -> f64); 2] =
        [(MemoryKernel::Constant(1.0), |_| 1.0), (MemoryKernel::Exponential(1.0), |t| (-t).exp())];
    for (kernel, exact) in &cases {
        for &z in grid.points() {
            let r = response(kernel, &ramp(), Geometry::SemiInfinite, z).unwrap();
            let k = recover_k_semiaxis(r, 1.0 / (z * z), z).unwrap();
            let want = kernel.laplace(z).unwrap();
            k_err = k_err.max((k - want).norm() / want.norm());
        }
        let k = reconstruct_kernel_time(exact_k_closure(kernel), 1.0, 0.05, 5.0, &ContourSpec::default()).unwrap();
        for (i, v) in k.values().iter().enumerate() {
            t_err = t_err.max((v - exact(k.time(i))).abs());
        }
    }
    let ok = k_err <= 1e-10 && t_err <= 1e-6;
    let detail = format!(
        "max relative K error on 20 points {k_err:.3e} <= 1e-10 {}; max k(t) error on [0,5] {t_err:.3e} <= 1e-6 {}",
        mark(k_err <= 1e-10),
        mark(t_err <= 1e-6)
    );
    let pass = report(3, "exact inverse round trip", ok, &detail, start.elapsed(), 10.0);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_04_finite_interval_recovery() {
    let start = Instant::now();
    let kernel = MemoryKernel::Exponential(1.0);
    let length = 2.0;
    let mut points: Vec<Complex64> = FrequencyGrid::real_geometric(0.5, 50.0, 10).unwrap().points().to_vec();
    for y in [0.5, 2.0, 5.0, 12.0, 30.0] {
        points.push(Complex64::new(1.0, y));
        points.push(Complex64::new(1.0, -y));
    }
    let mut worst = 0.0_f64;
    let mut gate_ok = true;
    for &z in &points {
        let f = 1.0 / (z * z);
        let r = response_interval(&kernel, &ramp(), length, z).unwrap();
        let w = recover_omega_interval(r, f, length, z).unwrap();
        let q = -r / f;
        gate_ok &= w.residual <= 1e-12 * (1.0 + q.norm());
        let exact = (z * (z + 1.0)).sqrt();
        worst = worst.max((w.omega - exact).norm() / exact.norm());
    }
    let ok = worst <= 1e-10 && gate_ok;
    let detail = format!(
        "{} points, max relative omega error {worst:.3e} <= 1e-10 {}; residual gate 1e-12 (1 + |q|) {}",
        points.len(),
        mark(worst <= 1e-10),
        mark(gate_ok)
    );
    let pass = report(4, "omega recovery on an interval, L = 2", ok, &detail, start.elapsed(), 10.0);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_05_finite_time_reconstruction() {
    let start = Instant::now();
    let kernel = MemoryKernel::Exponential(1.0);
    let record = synthetic_record(&kernel, Geometry::SemiInfinite, 2e-3, 40.0, &ContourSpec::default()).unwrap();
    let grid = FrequencyGrid::real_geometric(1.0, 50.0, 20).unwrap();
    let line = ContourSpec::Bromwich { abscissa: 0.05, cutoff: 1000.0, nodes: 1000 };
    let mut parts = Vec::new();
    let mut ok = true;
    for (t_obs, target) in [(20.0, 1e-2), (40.0, 1e-3)] {
        let res = recover_from_finite_data(&record, t_obs, &grid, &line, &FiniteDataOptions::default()).unwrap();
        let worst = res
            .k
            .values()
            .iter()
            .enumerate()
            .filter(|(i, _)| res.k.time(*i) <= 5.0)
            .map(|(i, v)| (v - (-res.k.time(i)).exp()).abs())
            .fold(0.0, f64::max);
        ok &= worst <= target;
        parts.push(format!(
            "T_obs={t_obs}: max error on [0,5] {worst:.3e} <= {target:e} {} (T_reliable {:.2})",
            mark(worst <= target),
            res.t_reliable
        ));
    }
    let detail = parts.join("; ");
    let pass = report(5, "kernel from a finite record", ok, &detail, start.elapsed(), 60.0);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_06_local_uniqueness() {
    let start = Instant::now();
    let k1 = MemoryKernel::Constant(1.0);
    let k2 = perturb_after(&k1, 2.0, 1.0).unwrap();
    let settings = SolverSettings { dt: 5e-3, courant: 1.0, margin: 1.0 };
    let rep = run_uniqueness_experiment(&k1, &k2, 2.0, 2.0, Geometry::SemiInfinite, &settings).unwrap();
    let floor = rep.threshold / 10.0;
    let before_ok = rep.sup_diff_before <= rep.self_error.max(floor);
    let after_ok = (2.0..=4.0).contains(&rep.first_divergence_time);
    let detail = format!(
        "sup|r1-r2| on [0,2] {:.3e} <= self-error {:.3e} {}; first divergence at t = {:.4} in [2,4] {} (threshold {:.3e})",
        rep.sup_diff_before,
        rep.self_error,
        mark(before_ok),
        rep.first_divergence_time,
        mark(after_ok),
        rep.threshold
    );
    let pass = report(6, "responses of kernels equal on [0,2]", before_ok && after_ok, &detail, start.elapsed(), 120.0);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_07_truncation_projection_equivalence() {
    let start = Instant::now();
    let grid = FrequencyGrid::real_geometric(0.5, 5.0, 10).unwrap();
    let rep = run_truncation_consistency(
        &MemoryKernel::Constant(1.0),
        10.0,
        &grid,
        0.01,
        &ContourQuadrature::default(),
    )
    .unwrap();
    let ok = rep.max_deviation < 1e-4;
    let detail = format!("max |R^T time domain - R^T contour| over 10 points: {:.3e} < 1e-4", rep.max_deviation);
    let pass = report(7, "truncated transform, two formulas", ok, &detail, start.elapsed(), 30.0);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_08_finite_speed() {
    let start = Instant::now();
    let settings = SolverSettings { dt: 5e-3, courant: 1.0, margin: 1.0 };
    let rep = run_finite_speed_check(&MemoryKernel::Exponential(1.0), &[0.5, 1.0, 2.0], 1e-6, 3.0, &settings).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for p in &rep.probes {
        let arrival_ok = p.arrival_measured.is_some_and(|t| (t - p.arrival_predicted).abs() <= 2.0 * rep.dt);
        ok &= p.quiet_ok && arrival_ok;
        parts.push(format!(
            "x={}: quiet max {:.1e} {}, arrival {:.4} {}",
            p.x,
            p.max_quiet,
            mark(p.quiet_ok),
            p.arrival_measured.unwrap_or(f64::NAN),
            mark(arrival_ok)
        ));
    }
    let detail = format!("{} (tolerance 1e-6 sup|f| = {:.1e}, 2 dt = {:.1e})", parts.join("; "), 1e-6 * rep.f_norm, 2.0 * rep.dt);
    let pass = report(8, "finite propagation speed, exponential kernel", ok, &detail, start.elapsed(), 60.0);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_09_non_sobolev_modes() {
    let start = Instant::now();
    let t_grid: Vec<f64> = (0..=2000).map(|i| 0.01 * i as f64).collect();
    let reports = run_nonsobolev_demo(&[1, 4, 9, 16], 4.0, &t_grid).unwrap();
    let max_dev = reports.iter().map(|r| r.max_rel_deviation).fold(0.0, f64::max);
    let contour_ok = max_dev < 1e-6;
    let mut rates_ok = true;
    let mut rates = Vec::new();
    for r in reports.iter().filter(|r| [4, 9, 16].contains(&r.n)) {
        let rel = (r.fitted_rate - r.predicted_rate).abs() / r.predicted_rate;
        rates_ok &= rel <= 0.05;
        rates.push(format!("n={} {:.4}/{:.4}", r.n, r.fitted_rate, r.predicted_rate));
    }
    let maxima: Vec<(u32, f64, u32)> = [8, 16, 32]
        .iter()
        .map(|&m| {
            let (v, arg) = modal_maximum(m, 4.0, 1.0);
            (m, v, arg)
        })
        .collect();
    let monotone = maxima.windows(2).all(|w| w[1].1 > w[0].1);
    let detail = format!(
        "residue vs contour max rel dev {max_dev:.3e} < 1e-6 {}; fitted/sqrt(n/2) rates {} within 5% {}; max_n |theta_n(1)| for n_max 8,16,32: {} strictly increasing {}",
        mark(contour_ok),
        rates.join(", "),
        mark(rates_ok),
        maxima.iter().map(|(m, v, a)| format!("{m}:{v:.4e}@n={a}")).collect::<Vec<_>>().join(", "),
        mark(monotone)
    );
    let pass = report(9, "modal growth for k(t) = t^2/2", contour_ok && rates_ok && monotone, &detail, start.elapsed(), 60.0);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_10_admissibility_gate() {
    let start = Instant::now();
    let probes = default_probes();
    let accept = [MemoryKernel::Constant(1.0), MemoryKernel::Exponential(1.0)]
        .iter()
        .all(|k| validate_k0(k, &probes, 1e-12).admissible);
    let reject = [MemoryKernel::PolynomialHalfSquare, MemoryKernel::DiracDelta]
        .iter()
        .all(|k| !validate_k0(k, &probes, 1e-12).admissible);

    let dir = tempfile::tempdir().unwrap();
    let mut codes = Vec::new();
    for (name, body) in [
        ("const", "form = \"constant\"\nvalue = 1.0"),
        ("expo", "form = \"exponential\"\ndecay = 1.0"),
        ("half", "form = \"polynomial_half_square\""),
        ("delta", "form = \"dirac_delta\""),
    ] {
        let cfg = dir.path().join(format!("{name}.toml"));
        fs::write(&cfg, format!("[kernel]\n{body}\n")).unwrap();
        let out = dir.path().join(name);
        let cfg = parse_config(&cfg, CliCommand::Validate, Some(&out)).unwrap();
        codes.push(execute(&cfg, None, false));
    }
    let cli_ok = codes == [0, 0, 2, 2];
    let detail = format!(
        "accepts constant and exponential {}; rejects t^2/2 and delta {}; CLI validate exit codes {codes:?} == [0, 0, 2, 2] {}",
        mark(accept),
        mark(reject),
        mark(cli_ok)
    );
    let pass = report(10, "admissibility gate", accept && reject && cli_ok, &detail, start.elapsed(), 5.0);
    assert!(pass, "{detail}");
}

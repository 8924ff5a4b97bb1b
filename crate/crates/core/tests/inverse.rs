use gpheat::forward::Geometry;
use gpheat::inverse::{recover_from_finite_data, synthetic_record, FiniteDataOptions, InverseError};
use gpheat::kernel::MemoryKernel;
use gpheat::laplace::{ContourSpec, FrequencyGrid};

fn line() -> ContourSpec {
    ContourSpec::Bromwich { abscissa: 0.05, cutoff: 1000.0, nodes: 1000 }
}

#[test]
fn exponential_kernel_from_finite_record() {
    let kernel = MemoryKernel::Exponential(1.0);
    let record = synthetic_record(&kernel, Geometry::SemiInfinite, 2e-3, 40.0, &ContourSpec::default()).unwrap();
    let grid = FrequencyGrid::real_geometric(1.0, 50.0, 20).unwrap();
    for (t_obs, target) in [(20.0, 1e-2), (40.0, 1e-3)] {
        let res = recover_from_finite_data(&record, t_obs, &grid, &line(), &FiniteDataOptions::default()).unwrap();
        let mut worst = 0.0_f64;
        for (i, v) in res.k.values().iter().enumerate() {
            let t = res.k.time(i);
            if t <= 5.0 {
                worst = worst.max((v - (-t).exp()).abs());
            }
        }
        assert!(worst < target, "T_obs = {t_obs}: worst error {worst:.3e}");
        assert!((res.a_estimate - 1.0).abs() < 1e-2, "a = {}", res.a_estimate);
        assert!(res.t_reliable >= 5.0 && res.t_reliable <= t_obs, "t_reliable = {}", res.t_reliable);
    }
}

#[test]
fn short_record_is_reported() {
    let kernel = MemoryKernel::Exponential(1.0);
    let record = synthetic_record(&kernel, Geometry::SemiInfinite, 2e-3, 1.0, &ContourSpec::default()).unwrap();
    let grid = FrequencyGrid::real_geometric(1.0, 10.0, 10).unwrap();
    let res = recover_from_finite_data(&record, 0.1, &grid, &line(), &FiniteDataOptions::default());
    match res {
        Err(InverseError::InsufficientHorizon { .. }) => {}
        Ok(r) => assert!(r.t_reliable <= 0.1, "{}", r.t_reliable),
        Err(e) => panic!("{e}"),
    }
}

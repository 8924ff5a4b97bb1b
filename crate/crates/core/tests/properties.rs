use approx::assert_relative_eq;
use gpheat::forward::omega;
use gpheat::kernel::MemoryKernel;
use gpheat::laplace::{forward_laplace, TimeSignal};
use num_complex::Complex64;
use proptest::prelude::*;

fn signal(values: &[f64]) -> TimeSignal {
    TimeSignal::new(0.05, values.to_vec()).unwrap()
}

fn right_half_plane() -> impl Strategy<Value = Complex64> {
    (0.2..20.0_f64, -30.0..30.0_f64).prop_map(|(re, im)| Complex64::new(re, im))
}

proptest! {
    #[test]
    fn transform_is_linear(
        a in prop::collection::vec(-2.0..2.0_f64, 40),
        b in prop::collection::vec(-2.0..2.0_f64, 40),
        alpha in -3.0..3.0_f64,
        z in right_half_plane(),
    ) {
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| alpha * x + y).collect();
        let lhs = forward_laplace(&signal(&mix), z).unwrap().value;
        let rhs = alpha * forward_laplace(&signal(&a), z).unwrap().value + forward_laplace(&signal(&b), z).unwrap().value;
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
    }

    #[test]
    fn transform_respects_conjugation(values in prop::collection::vec(-2.0..2.0_f64, 30), z in right_half_plane()) {
        let s = signal(&values);
        let direct = forward_laplace(&s, z.conj()).unwrap().value;
        let mirrored = forward_laplace(&s, z).unwrap().value.conj();
        prop_assert!((direct - mirrored).norm() <= 1e-13 * (1.0 + direct.norm()));
    }

    #[test]
    fn omega_stays_on_principal_branch(decay in 0.1..5.0_f64, z in right_half_plane()) {
        let w = omega(&MemoryKernel::Exponential(decay), z).unwrap();
        prop_assert!(w.re > 0.0);
        let k = Complex64::new(1.0, 0.0) / (z + decay);
        prop_assert!((w * w * k - z).norm() <= 1e-12 * z.norm());
    }

    #[test]
    fn remainder_matches_full_transform(decay in 0.1..5.0_f64, z in right_half_plane()) {
        let kernel = MemoryKernel::Exponential(decay);
        let full = kernel.laplace_continued(z);
        let rem = kernel.laplace_remainder_continued(z);
        prop_assert!((rem - (full - 1.0 / z)).norm() <= 1e-13 * (1.0 + full.norm()));
    }
}

#[test]
fn exponential_samples_transform_to_rational() {
    let s = TimeSignal::from_fn(1e-3, 40.0, |t| (-t).exp()).unwrap();
    let z = Complex64::new(1.5, 2.0);
    let got = forward_laplace(&s, z).unwrap().value;
    let want = 1.0 / (z + 1.0);
    assert_relative_eq!(got.re, want.re, epsilon = 1e-6);
    assert_relative_eq!(got.im, want.im, epsilon = 1e-6);
}

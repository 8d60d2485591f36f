//! Property-based invariants over random states and pump parameters.

use proptest::prelude::*;
use qpump::channels::stabilizer_pump;
use qpump::qcore::{DensityMatrix, Pauli, PauliString};
use qpump::{C64, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_density(n: usize, seed: u64) -> DensityMatrix {
    let d = 1usize << n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = Mat::from_fn(d, d, |_, _| {
        C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    let m = &g * g.adjoint();
    let tr = m.trace();
    DensityMatrix::new(m / tr).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn partial_trace_inverts_tensor(seed_a in any::<u64>(), seed_b in any::<u64>()) {
        let a = random_density(2, seed_a);
        let b = random_density(2, seed_b);
        let joint = a.tensor(&b);
        let back_a = joint.partial_trace(&[0, 1]).unwrap();
        let back_b = joint.partial_trace(&[2, 3]).unwrap();
        prop_assert!(qpump::max_abs_diff(back_a.matrix(), a.matrix()) < 1e-12);
        prop_assert!(qpump::max_abs_diff(back_b.matrix(), b.matrix()) < 1e-12);
    }

    #[test]
    fn pump_preserves_state_invariants(seed in any::<u64>(), p in 0.0f64..=1.0) {
        let rho = random_density(2, seed);
        let pump = stabilizer_pump(
            &PauliString::on(2, &[0, 1], Pauli::Z),
            -1,
            p,
            &PauliString::single(2, 1, Pauli::X),
        ).unwrap();
        // apply() re-validates trace, Hermiticity and positivity
        let out = pump.apply(&rho).unwrap();
        out.check_invariants(1e-9).unwrap();
        // pumping never decreases the target-eigenspace expectation
        let s = PauliString::on(2, &[0, 1], Pauli::Z);
        let before = rho.expectation(&s).unwrap();
        let after = out.expectation(&s).unwrap();
        prop_assert!(after <= before + 1e-9);
    }

    #[test]
    fn bell_populations_sum_to_one(seed in any::<u64>()) {
        let rho = random_density(2, seed);
        let pops = rho.bell_populations().unwrap();
        prop_assert!(pops.iter().all(|&p| (-1e-9..=1.0 + 1e-9).contains(&p)));
        let total: f64 = pops.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
    }
}

use levy_transport::drift_fields::{mollify, DriftField, MollifierSpec};
use levy_transport::experiments::{fit_order, FittedOrder};
use levy_transport::flow_engine::{inverse_map, semiflow_defect, solve_forward};
use levy_transport::kolmogorov_resolvent::{resolvent_free, SpectralField, TorusGrid};
use levy_transport::levy_noise::{read_path, sample_path, write_path, SimulationMode, StableSpec};
use proptest::prelude::*;

fn spec_strategy() -> impl Strategy<Value = StableSpec> {
    (0.3f64..1.9, 1usize..=2, any::<bool>()).prop_map(|(alpha, dim, jumps)| {
        let s = StableSpec::new(alpha, 1.0, dim).unwrap();
        if jumps {
            s.with_mode(SimulationMode::JumpDecomposition).with_cutoff(0.5)
        } else {
            s
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn increments_are_additive(spec in spec_strategy(), seed in any::<u64>(), a in 0usize..=20, b in 0usize..=20) {
        let path = sample_path(&spec, 1.0, 0.05, seed).unwrap();
        let (s, t) = (a.min(b), a.max(b));
        let n = path.n_cells();
        let t = t.min(n);
        let s = s.min(t);
        let whole = path.increment_between(0, n);
        let left = path.increment_between(0, s);
        let mid = path.increment_between(s, t);
        let right = path.increment_between(t, n);
        for i in 0..spec.dim {
            let sum = left[i] + mid[i] + right[i];
            prop_assert!((sum - whole[i]).abs() <= 1e-12 * (1.0 + whole[i].abs()));
        }
    }

    #[test]
    fn coarsening_keeps_node_values(spec in spec_strategy(), seed in any::<u64>()) {
        let fine = sample_path(&spec, 1.0, 0.025, seed).unwrap();
        let coarse = fine.coarsen(4).unwrap();
        for (k, t) in coarse.times().iter().enumerate() {
            let j = fine.grid().index_of(*t).unwrap();
            for i in 0..spec.dim {
                let (a, b) = (coarse.value_at_node(k)[i], fine.value_at_node(j)[i]);
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn path_files_round_trip(spec in spec_strategy(), seed in any::<u64>()) {
        let path = sample_path(&spec, 0.5, 0.05, seed).unwrap();
        let mut buf = Vec::new();
        write_path(&path, &mut buf).unwrap();
        prop_assert_eq!(read_path(buf.as_slice()).unwrap(), path);
    }

    #[test]
    fn zero_drift_flow_is_translation(spec in spec_strategy(), seed in any::<u64>(), x in -3.0f64..3.0) {
        let path = sample_path(&spec, 1.0, 0.05, seed).unwrap();
        let b = DriftField::zero(spec.dim);
        let x0 = vec![x; spec.dim];
        let n = path.n_cells();
        let y = solve_forward(&b, &x0, &path).unwrap().last().to_vec();
        let back = inverse_map(&b, &y, &path, 0, n).unwrap();
        for i in 0..spec.dim {
            prop_assert!((y[i] - x0[i] - path.value_at_node(n)[i]).abs() <= 1e-12 * (1.0 + y[i].abs()));
            prop_assert!((back[i] - x0[i]).abs() <= 1e-12 * (1.0 + y[i].abs()));
        }
    }

    #[test]
    fn semiflow_is_exact(seed in any::<u64>(), x in -2.0f64..2.0, i in 0usize..=20, j in 0usize..=20, k in 0usize..=20) {
        let spec = StableSpec::new(1.3, 1.0, 1).unwrap();
        let path = sample_path(&spec, 1.0, 0.05, seed).unwrap();
        let mut idx = [i, j, k];
        idx.sort();
        let t = path.times();
        let d = semiflow_defect(&DriftField::trig(1, 1.0, 2.0), &path, t[idx[0]], t[idx[1]], t[idx[2]], &[x]).unwrap();
        prop_assert!(d <= 1e-12);
    }

    #[test]
    fn mollification_stays_in_range(x in -2.0f64..2.0, eps in 0.02f64..0.5, gamma in 0.2f64..0.9) {
        let b = DriftField::counterexample(gamma, 1.0).unwrap();
        let be = mollify(&b, &MollifierSpec::new(eps, 1).unwrap()).unwrap();
        let v = be.eval(&[x])[0];
        prop_assert!(v.abs() <= b.bound_sup + 1e-12);
        prop_assert!((v - b.eval(&[x])[0]).abs() <= b.bound_holder * (2.0 * eps).powf(gamma) + 1e-12);
    }

    #[test]
    fn free_resolvent_maximum_principle(
        vals in prop::collection::vec(-1.0f64..1.0, 32),
        lambda in 0.1f64..10.0,
        alpha in 0.3f64..1.9,
    ) {
        let g = TorusGrid::new(std::f64::consts::TAU, 32, 1).unwrap();
        let f = SpectralField::from_values(g, &vals).unwrap();
        let v = resolvent_free(lambda, &StableSpec::new(alpha, 1.0, 1).unwrap(), &f).unwrap();
        prop_assert!(lambda * v.sup() <= f.sup() + 1e-10);
    }

    #[test]
    fn fitted_order_recovers_power_laws(p in 0.2f64..3.0, c in 1e-6f64..1e3, levels in 3usize..7) {
        let steps: Vec<f64> = (0..levels).map(|l| 0.1 / 2f64.powi(l as i32)).collect();
        let values: Vec<f64> = steps.iter().map(|s| c * s.powf(p)).collect();
        match fit_order(&steps, &values).unwrap().order {
            FittedOrder::Fitted { order, std_error } => {
                prop_assert!((order - p).abs() < 1e-9);
                prop_assert!(std_error < 1e-6);
            }
            other => prop_assert!(false, "{:?}", other),
        }
    }
}

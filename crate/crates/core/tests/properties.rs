//! Property tests over arbitrary inputs (as opposed to the seeded-grid
//! checks living next to each module).

use proptest::collection::vec;
use proptest::prelude::*;

use lpbal::balancing::{Instance, JobMatrix};
use lpbal::instances::{read_instance, write_instance};
use lpbal::offline::brute_force_opt;
use lpbal::smoothing::{
    lp_norm, lp_norm_perturbation_bound, smoothed_norm, PNormParams, SmoothingParams,
};

fn arb_instance() -> impl Strategy<Value = Instance> {
    (1usize..=4, 1usize..=3, 0usize..=5).prop_flat_map(|(m, k, n)| {
        vec(vec(vec(0.0f64..=1.0, m), k), n).prop_map(move |jobs| {
            let jobs = jobs
                .into_iter()
                .map(|cols| JobMatrix::from_columns(cols).unwrap())
                .collect();
            Instance::new(m, jobs).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn instance_files_round_trip(inst in arb_instance()) {
        let mut buf = Vec::new();
        write_instance(&inst, &mut buf).unwrap();
        let back = read_instance(&buf[..]).unwrap();
        prop_assert_eq!(&inst, &back);
        let mut buf2 = Vec::new();
        write_instance(&back, &mut buf2).unwrap();
        prop_assert_eq!(buf, buf2);
    }

    #[test]
    fn sandwich_holds_for_arbitrary_loads(
        u in vec(0.0f64..50.0, 1..=12),
        p in 2.0f64..64.0,
        eps in 0.01f64..=1.0,
    ) {
        let m = u.len();
        let params = PNormParams::finite(p, m).unwrap();
        let sp = SmoothingParams::from_params(params, eps).unwrap();
        let norm = lp_norm(&u, &params);
        let psi = smoothed_norm(&u, &sp);
        let tol = 1e-9 * norm.max(1.0);
        prop_assert!(psi >= norm - tol);
        prop_assert!(psi <= norm + sp.radius() + tol);
    }

    #[test]
    fn perturbation_bound_never_undershoots(
        u in vec(1e-6f64..20.0, 1..=10),
        v in vec(0.0f64..=1.0, 10),
        p in 2.0f64..32.0,
    ) {
        let m = u.len();
        let v = &v[..m];
        let params = PNormParams::finite(p, m).unwrap();
        let bound = lp_norm_perturbation_bound(&u, v, &params).unwrap();
        let sum: Vec<f64> = u.iter().zip(v).map(|(a, b)| a + b).collect();
        prop_assert!(lp_norm(&sum, &params) <= bound + 1e-9);
    }

    #[test]
    fn optimum_is_order_invariant(inst in arb_instance(), seed in any::<u64>()) {
        prop_assume!(inst.n() > 1);
        let params = PNormParams::finite(2.0, inst.m()).unwrap();
        let base = brute_force_opt(&inst, &params, 1 << 12).unwrap().value;
        // rotate by the seed; any reordering must keep the optimum
        let n = inst.n();
        let shift = (seed % n as u64) as usize;
        let order: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
        let rotated = brute_force_opt(&inst.permuted(&order), &params, 1 << 12)
            .unwrap()
            .value;
        prop_assert!((base - rotated).abs() <= 1e-12 * base.max(1.0));
    }
}

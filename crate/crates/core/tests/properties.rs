use pentaspec::oracle::{dense_eigenvalues, section_eigenvalues};
use pentaspec::operators::{lp_norm, norm_bounds, tail_bound, truncate, BandOperator, PerturbationEntries, SpaceOrder};
use pentaspec::spectra::essential_spectrum;
use pentaspec::{Band, CoefficientModel, LimitProfile};
use proptest::prelude::*;

fn arb_profile() -> impl Strategy<Value = LimitProfile> {
    (-5.0f64..5.0, -5.0f64..5.0, 0.2f64..3.0, 0.2f64..3.0, any::<bool>(), any::<bool>()).prop_map(|(r1, r2, s1, s2, n1, n2)| {
        LimitProfile::new(r1, r2, if n1 { -s1 } else { s1 }, if n2 { -s2 } else { s2 }).unwrap()
    })
}

fn arb_model() -> impl Strategy<Value = CoefficientModel> {
    (
        arb_profile(),
        prop::array::uniform3(-1.0f64..1.0),
        0.1f64..0.9,
        prop::collection::vec((1usize..12, -3.0f64..3.0), 0..4),
    )
        .prop_map(|(p, amps, rate, overrides)| {
            let mut m = CoefficientModel::exponential(p, amps, rate);
            for (k, (n, v)) in overrides.into_iter().enumerate() {
                let band = Band::ALL[k % 3];
                m = m.with_override(band, n, v);
            }
            m
        })
}

fn arb_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn apply_is_linear(m in arb_model(), x in arb_vec(40), y in arb_vec(40), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let op = BandOperator::full(&m).unwrap();
        let z: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
        let (tx, ty, tz) = (op.apply(&x).unwrap(), op.apply(&y).unwrap(), op.apply(&z).unwrap());
        for i in 0..z.len() {
            let want = a * tx[i] + b * ty[i];
            let scale = (a * tx[i]).abs() + (b * ty[i]).abs() + 1.0;
            prop_assert!((tz[i] - want).abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn odd_even_decoupling(p in arb_profile(), x in arb_vec(30), y in arb_vec(30)) {
        let op = BandOperator::limit(p).unwrap();
        // replace the even-index entries (1-based) and check odd rows are unchanged
        let mixed: Vec<f64> = x.iter().zip(&y).enumerate().map(|(i, (u, v))| if i % 2 == 0 { *u } else { *v }).collect();
        let (tx, tm) = (op.apply(&x).unwrap(), op.apply(&mixed).unwrap());
        for i in (0..x.len()).step_by(2) {
            prop_assert_eq!(tx[i], tm[i]);
        }
    }

    #[test]
    fn unit_vectors_respect_upper_bound(p in arb_profile(), x in arb_vec(120), q in prop::sample::select(vec![1.1, 1.5, 2.0, 3.0, 7.0])) {
        let order = SpaceOrder::new(q).unwrap();
        let mut x = x;
        x.extend([0.0, 0.0]);
        let nx = lp_norm(&x, order);
        prop_assume!(nx > 0.0);
        let unit: Vec<f64> = x.iter().map(|v| v / nx).collect();
        let y = BandOperator::limit(p).unwrap().apply(&unit).unwrap();
        let ub = norm_bounds(&p, order).unwrap().upper;
        prop_assert!(lp_norm(&y, order) <= ub * (1.0 + 1e-12));
    }

    #[test]
    fn tail_bound_decreases_to_zero(m in arb_model()) {
        let e = PerturbationEntries::new(&m).unwrap();
        let mut prev = f64::INFINITY;
        for n in 2..80 {
            let t = tail_bound(&e, n).unwrap();
            prop_assert!(t <= prev);
            prev = t;
        }
        prop_assert!(tail_bound(&e, 4000).unwrap() < 1e-12);
    }

    #[test]
    fn t0_sections_are_real_and_inside(p in arb_profile(), n in 8usize..200) {
        let spec = section_eigenvalues(&truncate(&BandOperator::limit(p).unwrap(), n).unwrap()).unwrap();
        let ess = essential_spectrum(&p).unwrap();
        let lo = ess.intervals().first().unwrap().lo;
        let hi = ess.intervals().last().unwrap().hi;
        for z in spec.eigenvalues {
            prop_assert_eq!(z.im, 0.0);
            prop_assert!(z.re >= lo - 1e-8 && z.re <= hi + 1e-8);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn permuted_blocks_match_dense_matrix(m in arb_model(), half in 4usize..40) {
        let sec = truncate(&BandOperator::full(&m).unwrap(), 2 * half).unwrap();
        let blocks = section_eigenvalues(&sec).unwrap().eigenvalues;
        let dense = dense_eigenvalues(&sec).unwrap();
        prop_assert_eq!(blocks.len(), dense.len());
        let scale = sec.inf_norm().max(1.0);
        // greedy multiset matching; eigenvalues of non-normal blocks are
        // only conditioned to about sqrt(eps)
        let mut used = vec![false; dense.len()];
        for z in &blocks {
            let (j, d) = dense
                .iter()
                .enumerate()
                .filter(|(j, _)| !used[*j])
                .map(|(j, w)| (j, (z - w).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            prop_assert!(d <= 1e-6 * scale, "{} unmatched ({})", z, d);
            used[j] = true;
        }
    }

    #[test]
    fn transpose_section_same_spectrum(m in arb_model(), n in 8usize..120) {
        let sec = truncate(&BandOperator::full(&m).unwrap(), n).unwrap();
        let a = section_eigenvalues(&sec).unwrap().eigenvalues;
        let b = section_eigenvalues(&sec.transpose()).unwrap().eigenvalues;
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).norm() <= 1e-8 * sec.inf_norm().max(1.0), "{} vs {}", x, y);
        }
    }
}

#[test]
fn limit_operator_on_basis_vector() {
    let p = LimitProfile::new(1.0, 2.0, 3.0, 4.0).unwrap();
    let y = BandOperator::limit(p).unwrap().apply(&[0.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
    // column 2 of T0 holds a_2 on the diagonal and c_2 two rows below
    assert_eq!(y, vec![0.0, 2.0, 0.0, 4.0, 0.0]);
}

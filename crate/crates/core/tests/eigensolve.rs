use num_complex::Complex64;
use pentaspec::eigensolve::{discrete_spectrum, shoot, Rect, SearchOptions, Side};
use pentaspec::oracle::section_eigenvalues;
use pentaspec::operators::truncate;
use pentaspec::spectra::essential_spectrum;
use pentaspec::{Band, BandOperator, CoefficientModel, LimitProfile};

fn free() -> LimitProfile {
    LimitProfile::new(0.0, 0.0, 1.0, 1.0).unwrap()
}

fn corpus() -> Vec<CoefficientModel> {
    let base = CoefficientModel::constant(free());
    vec![
        base.clone().with_override(Band::A, 1, 3.0),
        base.clone().with_override(Band::A, 1, 3.0).with_override(Band::B, 1, 2.0),
        base.clone().with_override(Band::C, 1, -1.0),
        base.clone().with_override(Band::A, 2, -2.5).with_override(Band::A, 4, 1.5),
        CoefficientModel::exponential(LimitProfile::new(1.0, -2.0, 1.0, 0.5).unwrap(), [1.5, 0.3, 0.2], 0.4),
    ]
}

fn nearest(points: &[Complex64], z: Complex64) -> f64 {
    points.iter().map(|w| (w - z).norm()).fold(f64::INFINITY, f64::min)
}

#[test]
fn emitted_eigenvalues_are_certified_and_reproduced() {
    let opts = SearchOptions::default();
    let mut seen = 0;
    for m in corpus() {
        let d = discrete_spectrum(&m, None, &opts).unwrap();
        let ess = essential_spectrum(&m.limit_profile().unwrap()).unwrap();
        let op = BandOperator::full(&m).unwrap();
        let s2000 = section_eigenvalues(&truncate(&op, 2000).unwrap()).unwrap().eigenvalues;
        let s4000 = section_eigenvalues(&truncate(&op, 4000).unwrap()).unwrap().eigenvalues;
        assert!(d.unresolved.is_empty(), "{:?}", d.unresolved);
        for r in &d.direct {
            let z = r.lambda();
            seen += 1;
            assert!(ess.interval_distance(z) > opts.collar);
            assert!(r.matched_by_adjoint);
            assert!(r.residual < 1e-8);
            let f = shoot(&m, r.chain, Side::Direct, z).unwrap().norm();
            assert!(f < 1e-8);
            assert_eq!(r.isolated, Some(true), "{z}");
            let (d2, d4) = (nearest(&s2000, z), nearest(&s4000, z));
            assert!(d4 <= 1e-4, "{z}: section distance {d4}");
            assert!(d4 <= d2.max(1e-12), "{z}: {d2} -> {d4}");
        }
    }
    assert!(seen >= 5);
}

#[test]
fn unperturbed_operator_has_no_discrete_spectrum() {
    let opts = SearchOptions::default();
    for p in [
        free(),
        LimitProfile::new(0.0, 5.0, 1.0, 1.0).unwrap(),
        LimitProfile::new(-1.0, 2.0, 0.3, -2.0).unwrap(),
    ] {
        let m = CoefficientModel::constant(p);
        for region in [None, Some(Rect::new(-9.0, 9.0, -0.5, 4.0).unwrap())] {
            let d = discrete_spectrum(&m, region, &opts).unwrap();
            assert!(d.direct.is_empty() && d.adjoint.is_empty() && d.embedded.is_empty());
        }
    }
}

#[test]
fn known_values() {
    let opts = SearchOptions::default();
    let c = corpus();
    let d = discrete_spectrum(&c[1], None, &opts).unwrap();
    assert_eq!(d.direct.len(), 1);
    assert!((d.direct[0].re - 13f64.sqrt()).abs() < 1e-10);
    let d = discrete_spectrum(&c[2], None, &opts).unwrap();
    let pts: Vec<Complex64> = d.direct.iter().map(|r| r.lambda()).collect();
    assert_eq!(pts.len(), 2);
    let w = 0.5f64.sqrt();
    assert!(nearest(&pts, Complex64::new(0.0, w)) < 1e-10);
    assert!(nearest(&pts, Complex64::new(0.0, -w)) < 1e-10);
}

//! Spectral sets (unions of real intervals plus isolated points) and the
//! closed-form spectrum and fine-spectrum tables of `T0` and `T`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coeffs::LimitProfile;
use crate::error::{Error, Result};
use crate::recurrence::Chain;

/// Default absolute tolerance for membership tests against interval endpoints.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

/// A closed real interval `[lo, hi]`, serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::domain(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    /// Distance from a complex number to the segment.
    pub fn distance(&self, z: Complex64) -> f64 {
        let dx = if z.re < self.lo {
            self.lo - z.re
        } else if z.re > self.hi {
            z.re - self.hi
        } else {
            0.0
        };
        dx.hypot(z.im)
    }

    pub fn contains(&self, z: Complex64, tol: f64) -> bool {
        self.distance(z) <= tol
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = Error;
    fn try_from(v: [f64; 2]) -> Result<Self> {
        Interval::new(v[0], v[1])
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

/// An isolated spectral point, optionally tagged with the chain it came from
/// and the residual of its certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub re: f64,
    pub im: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Chain>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
}

impl SpectralPoint {
    pub fn new(z: Complex64) -> Self {
        SpectralPoint {
            re: z.re,
            im: z.im,
            source: None,
            residual: None,
        }
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    fn same_location(&self, other: &SpectralPoint) -> bool {
        self.re == other.re && self.im == other.im
    }
}

/// A union of closed real intervals and finitely many isolated points,
/// kept in canonical form: intervals sorted and merged, points sorted,
/// deduplicated and outside every interval.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SpectralSet {
    intervals: Vec<Interval>,
    points: Vec<SpectralPoint>,
    /// Intervals as generated before merging.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    generators: Vec<Interval>,
}

impl SpectralSet {
    pub fn empty() -> Self {
        SpectralSet::default()
    }

    pub fn new(intervals: Vec<Interval>, points: Vec<SpectralPoint>) -> Self {
        let mut set = SpectralSet {
            intervals,
            points,
            generators: Vec::new(),
        };
        set.canonicalize();
        set
    }

    pub fn from_intervals(intervals: Vec<Interval>) -> Self {
        let generators = intervals.clone();
        let mut set = SpectralSet::new(intervals, Vec::new());
        set.generators = generators;
        set
    }

    pub fn from_points(points: Vec<SpectralPoint>) -> Self {
        SpectralSet::new(Vec::new(), points)
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn points(&self) -> &[SpectralPoint] {
        &self.points
    }

    pub fn generators(&self) -> &[Interval] {
        &self.generators
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty() && self.points.is_empty()
    }

    fn canonicalize(&mut self) {
        self.intervals.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut merged: Vec<Interval> = Vec::with_capacity(self.intervals.len());
        for iv in self.intervals.drain(..) {
            match merged.last_mut() {
                Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
                _ => merged.push(iv),
            }
        }
        self.intervals = merged;

        let intervals = &self.intervals;
        self.points
            .retain(|p| !intervals.iter().any(|iv| iv.contains(p.value(), 0.0)));
        self.points
            .sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        self.points.dedup_by(|a, b| a.same_location(b));
    }

    pub fn union(&self, other: &SpectralSet) -> SpectralSet {
        let mut generators = self.generators.clone();
        generators.extend(other.generators.iter().copied());
        let mut set = SpectralSet::new(
            self.intervals.iter().chain(&other.intervals).copied().collect(),
            self.points.iter().chain(&other.points).copied().collect(),
        );
        set.generators = generators;
        set
    }

    /// Exact disjointness of the two closed sets.
    pub fn is_disjoint(&self, other: &SpectralSet) -> bool {
        let intervals_meet = self
            .intervals
            .iter()
            .any(|a| other.intervals.iter().any(|b| a.overlaps(b)));
        let point_in = |pts: &[SpectralPoint], ivs: &[Interval]| {
            pts.iter().any(|p| ivs.iter().any(|iv| iv.contains(p.value(), 0.0)))
        };
        let points_meet = self
            .points
            .iter()
            .any(|p| other.points.iter().any(|q| p.same_location(q)));
        !(intervals_meet
            || points_meet
            || point_in(&self.points, &other.intervals)
            || point_in(&other.points, &self.intervals))
    }

    /// Exact equality as subsets of the complex plane.
    pub fn same_set(&self, other: &SpectralSet) -> bool {
        self.intervals == other.intervals
            && self.points.len() == other.points.len()
            && self.points.iter().zip(&other.points).all(|(a, b)| a.same_location(b))
    }

    pub fn contains(&self, z: Complex64, tol: f64) -> bool {
        self.intervals.iter().any(|iv| iv.contains(z, tol))
            || self.points.iter().any(|p| (p.value() - z).norm() <= tol)
    }

    pub fn distance(&self, z: Complex64) -> f64 {
        self.intervals
            .iter()
            .map(|iv| iv.distance(z))
            .chain(self.points.iter().map(|p| (p.value() - z).norm()))
            .fold(f64::INFINITY, f64::min)
    }

    /// Distance to the interval part only.
    pub fn interval_distance(&self, z: Complex64) -> f64 {
        self.intervals
            .iter()
            .map(|iv| iv.distance(z))
            .fold(f64::INFINITY, f64::min)
    }
}

/// `[r1 - 2|s1|, r1 + 2|s1|] ∪ [r2 - 2|s2|, r2 + 2|s2|]`.
pub fn essential_spectrum(profile: &LimitProfile) -> Result<SpectralSet> {
    profile.validate()?;
    let odd = Interval::new(profile.r1 - 2.0 * profile.s1.abs(), profile.r1 + 2.0 * profile.s1.abs())?;
    let even = Interval::new(profile.r2 - 2.0 * profile.s2.abs(), profile.r2 + 2.0 * profile.s2.abs())?;
    Ok(SpectralSet::from_intervals(vec![odd, even]))
}

/// The nine spectral subdivisions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FineSpectrumReport {
    pub spectrum: SpectralSet,
    pub point: SpectralSet,
    pub residual: SpectralSet,
    pub continuous: SpectralSet,
    pub essential: SpectralSet,
    pub discrete: SpectralSet,
    pub compression: SpectralSet,
    pub approximate: SpectralSet,
    pub defect: SpectralSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubdivisionCheck {
    /// `point ∪ residual ∪ continuous = spectrum`.
    pub tripartition_union: bool,
    /// The three fine-spectrum parts are pairwise disjoint.
    pub tripartition_disjoint: bool,
    /// `spectrum = approximate ∪ compression`.
    pub approximate_compression: bool,
    /// `spectrum = approximate ∪ defect`.
    pub approximate_defect: bool,
}

impl SubdivisionCheck {
    pub fn all_hold(&self) -> bool {
        self.tripartition_union
            && self.tripartition_disjoint
            && self.approximate_compression
            && self.approximate_defect
    }
}

impl FineSpectrumReport {
    pub fn check_identities(&self) -> SubdivisionCheck {
        let tri = self.point.union(&self.residual).union(&self.continuous);
        SubdivisionCheck {
            tripartition_union: tri.same_set(&self.spectrum),
            tripartition_disjoint: self.point.is_disjoint(&self.residual)
                && self.point.is_disjoint(&self.continuous)
                && self.residual.is_disjoint(&self.continuous),
            approximate_compression: self.approximate.union(&self.compression).same_set(&self.spectrum),
            approximate_defect: self.approximate.union(&self.defect).same_set(&self.spectrum),
        }
    }
}

/// Fine spectrum of `T0`: no eigenvalues, everything continuous.
pub fn fine_spectrum_t0(profile: &LimitProfile) -> Result<FineSpectrumReport> {
    let ess = essential_spectrum(profile)?;
    Ok(FineSpectrumReport {
        spectrum: ess.clone(),
        point: SpectralSet::empty(),
        residual: SpectralSet::empty(),
        continuous: ess.clone(),
        essential: ess.clone(),
        discrete: SpectralSet::empty(),
        compression: SpectralSet::empty(),
        approximate: ess.clone(),
        defect: ess,
    })
}

/// Fine spectrum of `T` given its discrete eigenvalues, valid when no
/// eigenvalue is embedded in the essential spectrum.
pub fn fine_spectrum_t(profile: &LimitProfile, discrete: &SpectralSet, tol: f64) -> Result<FineSpectrumReport> {
    let ess = essential_spectrum(profile)?;
    if let Some(p) = discrete
        .points()
        .iter()
        .find(|p| ess.interval_distance(p.value()) <= tol)
    {
        return Err(Error::Consistency(format!(
            "discrete point {} + {}i lies in the essential spectrum",
            p.re, p.im
        )));
    }
    let eig = SpectralSet::from_points(discrete.points().to_vec());
    let full = ess.union(&eig);
    Ok(FineSpectrumReport {
        spectrum: full.clone(),
        point: eig.clone(),
        residual: SpectralSet::empty(),
        continuous: ess.clone(),
        essential: ess,
        discrete: eig.clone(),
        compression: eig,
        approximate: full.clone(),
        defect: full,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn profile(r1: f64, r2: f64, s1: f64, s2: f64) -> LimitProfile {
        LimitProfile::new(r1, r2, s1, s2).unwrap()
    }

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    #[test]
    fn essential_examples() {
        let e = essential_spectrum(&profile(0.0, 0.0, 1.0, 1.0)).unwrap();
        assert_eq!(e.intervals(), &[iv(-2.0, 2.0)]);
        assert!(e.points().is_empty());
        let e = essential_spectrum(&profile(0.0, 5.0, 1.0, 1.0)).unwrap();
        assert_eq!(e.intervals(), &[iv(-2.0, 2.0), iv(3.0, 7.0)]);
        let e = essential_spectrum(&profile(0.0, 3.0, 1.0, 1.0)).unwrap();
        assert_eq!(e.intervals(), &[iv(-2.0, 5.0)]);
        assert_eq!(e.generators(), &[iv(-2.0, 2.0), iv(1.0, 5.0)]);
    }

    #[test]
    fn t0_fine_spectrum() {
        let r = fine_spectrum_t0(&profile(0.0, 0.0, 1.0, 1.0)).unwrap();
        for s in [&r.spectrum, &r.continuous, &r.essential, &r.approximate, &r.defect] {
            assert_eq!(s.intervals(), &[iv(-2.0, 2.0)]);
        }
        for s in [&r.point, &r.residual, &r.compression, &r.discrete] {
            assert!(s.is_empty());
        }
        assert!(r.check_identities().all_hold());

        let r = fine_spectrum_t0(&profile(1.0, -1.0, 1.0, 2.0)).unwrap();
        assert_eq!(r.spectrum.intervals(), &[iv(-5.0, 3.0)]);
    }

    #[test]
    fn t_fine_spectrum_with_points() {
        let prof = profile(0.0, 0.0, 1.0, 1.0);
        let same = fine_spectrum_t(&prof, &SpectralSet::empty(), MEMBERSHIP_TOL).unwrap();
        assert_eq!(same, fine_spectrum_t0(&prof).unwrap());

        let d = SpectralSet::from_points(vec![SpectralPoint::new(Complex64::new(2.5, 0.0))]);
        let r = fine_spectrum_t(&prof, &d, MEMBERSHIP_TOL).unwrap();
        assert_eq!(r.spectrum.intervals(), &[iv(-2.0, 2.0)]);
        assert_eq!(r.spectrum.points().len(), 1);
        for s in [&r.point, &r.discrete, &r.compression] {
            assert_eq!(s.points()[0].re, 2.5);
            assert!(s.intervals().is_empty());
        }
        assert!(r.residual.is_empty());
        assert!(r.check_identities().all_hold());

        let bad = SpectralSet::from_points(vec![SpectralPoint::new(Complex64::new(1.0, 0.0))]);
        assert!(matches!(fine_spectrum_t(&prof, &bad, MEMBERSHIP_TOL), Err(Error::Consistency(_))));
    }

    #[test]
    fn json_shape() {
        let mut p = SpectralPoint::new(Complex64::new(3.5, -0.25));
        p.source = Some(Chain::Odd);
        p.residual = Some(1e-12);
        let set = SpectralSet::new(vec![iv(-2.0, 2.0)], vec![p]);
        let v = serde_json::to_value(&set).unwrap();
        assert_eq!(v["intervals"], serde_json::json!([[-2.0, 2.0]]));
        assert_eq!(v["points"][0]["source"], "odd");
        assert_eq!(v["points"][0]["im"], -0.25);
        let back: SpectralSet = serde_json::from_value(v).unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn reversed_interval_rejected() {
        assert!(Interval::new(1.0, 0.0).is_err());
        assert!(serde_json::from_str::<Interval>("[3.0, 1.0]").is_err());
    }

    #[test]
    fn disjointness() {
        let a = SpectralSet::new(vec![iv(0.0, 1.0)], vec![]);
        let b = SpectralSet::new(vec![iv(1.0, 2.0)], vec![]);
        assert!(!a.is_disjoint(&b));
        let c = SpectralSet::from_points(vec![SpectralPoint::new(Complex64::new(1.5, 0.0))]);
        assert!(a.is_disjoint(&c));
        assert!(!b.is_disjoint(&c));
    }

    proptest! {
        #[test]
        fn endpoints_and_sign_invariance(
            r1 in -5.0f64..5.0, r2 in -5.0f64..5.0,
            s1 in prop_oneof![-3.0f64..-0.1, 0.1f64..3.0],
            s2 in prop_oneof![-3.0f64..-0.1, 0.1f64..3.0],
        ) {
            let e = essential_spectrum(&profile(r1, r2, s1, s2)).unwrap();
            let flipped = essential_spectrum(&profile(r1, r2, -s1, -s2)).unwrap();
            prop_assert_eq!(&e, &flipped);
            let g = e.generators();
            prop_assert_eq!(g[0].lo, r1 - 2.0 * s1.abs());
            prop_assert_eq!(g[0].hi, r1 + 2.0 * s1.abs());
            prop_assert_eq!(g[1].lo, r2 - 2.0 * s2.abs());
            prop_assert_eq!(g[1].hi, r2 + 2.0 * s2.abs());
            prop_assert!(fine_spectrum_t0(&profile(r1, r2, s1, s2)).unwrap().check_identities().all_hold());
        }

        #[test]
        fn identities_with_random_points(
            xs in proptest::collection::vec((-10.0f64..10.0, -3.0f64..3.0), 0..6),
        ) {
            let prof = profile(0.0, 5.0, 1.0, 1.0);
            let ess = essential_spectrum(&prof).unwrap();
            let pts: Vec<SpectralPoint> = xs
                .into_iter()
                .map(|(re, im)| SpectralPoint::new(Complex64::new(re, im)))
                .filter(|p| ess.interval_distance(p.value()) > MEMBERSHIP_TOL)
                .collect();
            let r = fine_spectrum_t(&prof, &SpectralSet::from_points(pts), MEMBERSHIP_TOL).unwrap();
            prop_assert!(r.check_identities().all_hold());
        }
    }
}

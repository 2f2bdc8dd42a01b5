//! Verification of Gromov–Hausdorff approximations between metric pairs
//! and of the maps they induce on quotients and diagram spaces.
//!
//! Everything is measured on finite samples. For finite pairs whose map
//! covers the whole ball the sample is the space itself and the report is
//! exhaustive; otherwise reported values are sampled suprema.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::Rng;

use crate::diagram::Diagram;
use crate::error::{Error, Result};
use crate::math::{abs, Exponent};
use crate::matching::distance;
use crate::metric_pair::{FiniteSpace, MetricPair, PairKind, Point};

/// Slack allowed when comparing a measured quantity against its bound.
pub const PASS_TOL: f64 = 1e-12;

/// A map from a sample of `B̄_R(A_i) ⊂ X_i` into `X`, claimed to be an
/// `ε`-approximation onto `B̄_R(A)`.
#[derive(Debug, Clone)]
pub struct PairApproximation {
    pub source: Arc<MetricPair>,
    pub target: Arc<MetricPair>,
    pub map: Vec<(Point, Point)>,
    pub eps: f64,
    pub radius: f64,
    /// Sample of `B̄_R(A)`; empty means "all of it" for finite targets.
    pub target_sample: Vec<Point>,
}

fn finite_ball(pair: &MetricPair, radius: f64) -> Option<Vec<Point>> {
    match pair.kind() {
        PairKind::Finite(space) => Some(
            (0..space.size())
                .map(Point::Index)
                .filter(|x| pair.d_a(x) <= radius)
                .collect(),
        ),
        _ => None,
    }
}

impl PairApproximation {
    pub fn new(
        source: Arc<MetricPair>,
        target: Arc<MetricPair>,
        map: Vec<(Point, Point)>,
        eps: f64,
        radius: f64,
    ) -> Result<Self> {
        if !(eps >= 0.0) || !(radius > 0.0) {
            return Err(Error::OutOfRange(format!("need eps >= 0 and R > 0, got eps = {eps}, R = {radius}")));
        }
        if map.is_empty() {
            return Err(Error::EmptySample("approximation map is empty"));
        }
        for (x, y) in &map {
            source.validate_point(x)?;
            target.validate_point(y)?;
            if source.d_a(x) > radius {
                return Err(Error::OutOfRange(format!("map domain point {x:?} lies outside the R-ball")));
            }
        }
        Ok(Self {
            source,
            target,
            map,
            eps,
            radius,
            target_sample: Vec::new(),
        })
    }

    pub fn with_target_sample(mut self, sample: Vec<Point>) -> Result<Self> {
        for y in &sample {
            self.target.validate_point(y)?;
        }
        self.target_sample = sample;
        Ok(self)
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    /// Identity on the `R`-ball of a finite pair.
    pub fn identity(pair: Arc<MetricPair>, radius: f64, eps: f64) -> Result<Self> {
        let ball = finite_ball(&pair, radius).ok_or(Error::UnsupportedKind {
            op: "identity approximation",
            kind: pair.kind_name(),
        })?;
        let map = ball.into_iter().map(|x| (x.clone(), x)).collect();
        Self::new(pair.clone(), pair, map, eps, radius)
    }

    pub fn image(&self, x: &Point) -> Result<&Point> {
        self.map
            .iter()
            .find(|(s, _)| s == x)
            .map(|(_, y)| y)
            .ok_or(Error::OutsideDomain)
    }

    /// The map is defined on every point of the source ball.
    pub fn covers_source_ball(&self) -> bool {
        finite_ball(&self.source, self.radius)
            .is_some_and(|ball| ball.iter().all(|x| self.map.iter().any(|(s, _)| s == x)))
    }

    fn target_points(&self) -> Result<Vec<Point>> {
        if !self.target_sample.is_empty() {
            return Ok(self.target_sample.clone());
        }
        finite_ball(&self.target, self.radius).ok_or(Error::EmptySample("continuous targets need a target sample"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxReport {
    pub eps: f64,
    /// `sup |d(x,y) − d(f x, f y)|` over the domain.
    pub max_distortion: f64,
    /// Hausdorff distance between `f(A_i)` and `A`.
    pub hausdorff_gap: f64,
    /// `sup_y inf_x d(y, f x)` over the target sample.
    pub coverage_slack: f64,
    pub pass_distortion: bool,
    pub pass_hausdorff: bool,
    pub pass_coverage: bool,
    /// Finite pairs with a map on the whole ball; otherwise a sampled sup.
    pub exhaustive: bool,
}

impl ApproxReport {
    pub fn passed(&self) -> bool {
        self.pass_distortion && self.pass_hausdorff && self.pass_coverage
    }

    /// Smallest `ε` for which all three conditions pass.
    pub fn measured_eps(&self) -> f64 {
        self.max_distortion.max(self.hausdorff_gap).max(self.coverage_slack)
    }
}

pub fn verify_pair_approximation(apx: &PairApproximation) -> Result<ApproxReport> {
    let (src, tgt) = (&apx.source, &apx.target);
    let map = &apx.map;
    let mut max_distortion: f64 = 0.0;
    for a in 0..map.len() {
        for b in (a + 1)..map.len() {
            let d0 = src.d(&map[a].0, &map[b].0);
            let d1 = tgt.d(&map[a].1, &map[b].1);
            max_distortion = max_distortion.max(abs(d0 - d1));
        }
    }

    let targets = apx.target_points()?;
    if targets.is_empty() {
        return Err(Error::EmptySample("target ball sample is empty"));
    }
    let images_of_a: Vec<&Point> = map.iter().filter(|(x, _)| src.d_a(x) == 0.0).map(|(_, y)| y).collect();
    let a_sample: Vec<&Point> = targets.iter().filter(|y| tgt.d_a(y) == 0.0).collect();
    let hausdorff_gap = if images_of_a.is_empty() {
        f64::INFINITY
    } else {
        let forward = images_of_a.iter().map(|y| tgt.d_a(y)).fold(0.0, f64::max);
        let backward = a_sample
            .iter()
            .map(|a| images_of_a.iter().map(|y| tgt.d(a, y)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max);
        forward.max(backward)
    };

    let coverage_slack = targets
        .iter()
        .map(|y| map.iter().map(|(_, fx)| tgt.d(y, fx)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);

    let ok = |v: f64| v <= apx.eps + PASS_TOL;
    Ok(ApproxReport {
        eps: apx.eps,
        max_distortion,
        hausdorff_gap,
        coverage_slack,
        pass_distortion: ok(max_distortion),
        pass_hausdorff: ok(hausdorff_gap),
        pass_coverage: ok(coverage_slack),
        exhaustive: apx.covers_source_ball() && apx.target_sample.is_empty() && finite_ball(tgt, apx.radius).is_some(),
    })
}

/// `f_*σ`: the images of the points of `σ`, dropping those landing on `A`.
pub fn induced_diagram_map(apx: &PairApproximation, sigma: &Diagram) -> Result<Diagram> {
    if !crate::diagram::same_pair(sigma.pair(), &apx.source) {
        return Err(Error::MismatchedPairs);
    }
    let mut out = Vec::with_capacity(sigma.multiplicity());
    for x in sigma.points() {
        let y = apx.image(x)?;
        if apx.target.d_a(y) > 0.0 {
            out.push(y.clone());
        }
    }
    Ok(Diagram::from_valid(apx.target.clone(), out))
}

/// The induced map `[x] ↦ [f(x)]`, `[A_i] ↦ [A]` between the quotients of
/// finite pairs, claimed at `5ε`.
pub fn quotient_approximation(apx: &PairApproximation) -> Result<PairApproximation> {
    let (qs, class_s) = apx.source.quotient().to_finite()?;
    let (qt, class_t) = apx.target.quotient().to_finite()?;
    let index = |p: &Point| match p {
        Point::Index(i) => *i,
        _ => unreachable!("finite pairs use indices"),
    };
    // the base point is the last index of a materialized quotient
    let (base_s, base_t) = (finite_size(&qs) - 1, finite_size(&qt) - 1);
    let mut map = alloc::vec![(Point::Index(base_s), Point::Index(base_t))];
    for (x, y) in &apx.map {
        let cx = class_s[index(x)];
        if cx != base_s {
            map.push((Point::Index(cx), Point::Index(class_t[index(y)])));
        }
    }
    PairApproximation::new(Arc::new(qs), Arc::new(qt), map, 5.0 * apx.eps, apx.radius)
}

fn finite_size(pair: &MetricPair) -> usize {
    match pair.kind() {
        PairKind::Finite(space) => space.size(),
        _ => unreachable!("quotients of finite pairs are finite"),
    }
}

/// A random diagram in `B̄_R(σ_∅) ⊂ D_p(X_i, A_i)` built from domain points
/// off `A_i`.
pub fn sample_ball_diagram<R: Rng + ?Sized>(
    apx: &PairApproximation,
    p: Exponent,
    rng: &mut R,
    max_points: usize,
) -> Result<Diagram> {
    let off: Vec<&Point> = apx.map.iter().map(|(x, _)| x).filter(|x| apx.source.d_a(x) > 0.0).collect();
    if off.is_empty() {
        return Ok(Diagram::empty(apx.source.clone()));
    }
    let n = rng.gen_range(0..=max_points);
    let mut pts: Vec<Point> = (0..n).map(|_| off[rng.gen_range(0..off.len())].clone()).collect();
    loop {
        let d = Diagram::from_valid(apx.source.clone(), pts.clone());
        if d.persistence_norm(p) <= apx.radius {
            return Ok(d);
        }
        pts.pop();
    }
}

/// `|d_p(σ,σ') − d_p(f_*σ, f_*σ')|` for one random pair in the ball.
pub fn distortion_trial<R: Rng + ?Sized>(
    apx: &PairApproximation,
    p: Exponent,
    rng: &mut R,
    max_points: usize,
) -> Result<f64> {
    let a = sample_ball_diagram(apx, p, rng, max_points)?;
    let b = sample_ball_diagram(apx, p, rng, max_points)?;
    let (d0, _) = distance(&a, &b, p)?;
    let (d1, _) = distance(&induced_diagram_map(apx, &a)?, &induced_diagram_map(apx, &b)?, p)?;
    Ok(abs(d0 - d1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistortionReport {
    pub p: Exponent,
    pub trials: usize,
    /// Sampled sup of the distortion.
    pub sup_distortion: f64,
    /// `3ε + 1e-9` for `p = ∞`; no bound is claimed for finite `p`.
    pub bound: Option<f64>,
}

impl DistortionReport {
    pub fn from_sup(apx: &PairApproximation, p: Exponent, trials: usize, sup_distortion: f64) -> Self {
        Self {
            p,
            trials,
            sup_distortion,
            bound: p.is_infinite().then_some(3.0 * apx.eps + 1e-9),
        }
    }

    pub fn pass(&self) -> Option<bool> {
        self.bound.map(|b| self.sup_distortion <= b)
    }
}

pub fn diagram_distortion_sweep<R: Rng + ?Sized>(
    apx: &PairApproximation,
    p: Exponent,
    trials: usize,
    rng: &mut R,
    max_points: usize,
) -> Result<DistortionReport> {
    let mut sup: f64 = 0.0;
    for _ in 0..trials {
        sup = sup.max(distortion_trial(apx, p, rng, max_points)?);
    }
    Ok(DistortionReport::from_sup(apx, p, trials, sup))
}

/// `X_i = [−1/i, 1/i]` on a grid of `2·steps + 1` points with `A_i = {0}`,
/// mapped by `f ≡ 0` onto `X = A = {0}`.
pub fn interval_approximation(i: u32, steps: usize, eps: f64) -> Result<PairApproximation> {
    if i == 0 || steps == 0 {
        return Err(Error::OutOfRange("need i >= 1 and at least one grid step".into()));
    }
    let s = steps as i64;
    let values: Vec<f64> = (-s..=s).map(|k| (k as f64 / steps as f64) / i as f64).collect();
    let source = Arc::new(MetricPair::finite(FiniteSpace::from_grid(&values, alloc::vec![steps])?));
    let target = Arc::new(MetricPair::finite(FiniteSpace::new(alloc::vec![alloc::vec![0.0]], alloc::vec![0])?));
    let map = (0..values.len()).map(|k| (Point::Index(k), Point::Index(0))).collect();
    PairApproximation::new(source, target, map, eps, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceRow {
    pub n: usize,
    /// `d_p(σ_n, σ_∅)` in `D_p(X_i, A_i)`.
    pub distance_p: f64,
    /// `n^{1/p} / i`.
    pub expected: f64,
    /// `d_p(f_*σ_n, σ_∅)`; always 0 since `D_p(X, A)` is a point.
    pub image_distance: f64,
    /// `d_∞(σ_n, σ_∅)`.
    pub distance_inf: f64,
}

/// `σ_n = n·{1/i}` on the interval example, for each `n`.
pub fn divergence_profile(i: u32, p: Exponent, ns: &[usize]) -> Result<Vec<DivergenceRow>> {
    let apx = interval_approximation(i, 1, 0.0)?;
    let top = Point::Index(2);
    let empty = Diagram::empty(apx.source.clone());
    ns.iter()
        .map(|&n| {
            let sigma = Diagram::repeated(apx.source.clone(), top.clone(), n)?;
            let image = induced_diagram_map(&apx, &sigma)?;
            Ok(DivergenceRow {
                n,
                distance_p: distance(&sigma, &empty, p)?.0,
                expected: p.root(n as f64) / i as f64,
                image_distance: distance(&image, &Diagram::empty(apx.target.clone()), p)?.0,
                distance_inf: distance(&sigma, &empty, Exponent::Infinity)?.0,
            })
        })
        .collect()
}

/// Random finite Euclidean pair and a copy with every point moved by at most
/// `delta / 2`, related by the index bijection. `eps` is set to the measured
/// value, which is at most `delta`.
pub fn perturbed_finite_approximation<R: Rng + ?Sized>(
    rng: &mut R,
    size: usize,
    subset_size: usize,
    delta: f64,
) -> Result<PairApproximation> {
    let (source, points) = crate::random::random_finite_pair(rng, size, subset_size, 2)?;
    let PairKind::Finite(space) = source.kind() else {
        unreachable!("random pairs are finite")
    };
    let moved: Vec<Vec<f64>> = points
        .iter()
        .map(|x| {
            let r = 0.5 * delta * libm::sqrt(rng.gen::<f64>());
            let th = core::f64::consts::TAU * rng.gen::<f64>();
            alloc::vec![x[0] + r * libm::cos(th), x[1] + r * libm::sin(th)]
        })
        .collect();
    let target = MetricPair::finite(FiniteSpace::from_points(&moved, space.subset().to_vec())?);
    let map = (0..size).map(|k| (Point::Index(k), Point::Index(k))).collect();
    // the unit square has diameter √2, so R = 2 covers everything
    let apx = PairApproximation::new(Arc::new(source), Arc::new(target), map, f64::INFINITY, 2.0)?;
    let eps = verify_pair_approximation(&apx)?.measured_eps();
    Ok(apx.with_eps(eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::DiagramSampler;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid_pair(values: &[f64], subset: Vec<usize>) -> Arc<MetricPair> {
        Arc::new(MetricPair::finite(FiniteSpace::from_grid(values, subset).unwrap()))
    }

    #[test]
    fn identity_is_exact() {
        let pair = grid_pair(&[0.0, 0.5, 1.5, 3.0], vec![0]);
        let apx = PairApproximation::identity(pair.clone(), 10.0, 0.0).unwrap();
        let r = verify_pair_approximation(&apx).unwrap();
        assert_eq!((r.max_distortion, r.hausdorff_gap, r.coverage_slack), (0.0, 0.0, 0.0));
        assert!(r.passed() && r.exhaustive);
        let q = verify_pair_approximation(&quotient_approximation(&apx).unwrap()).unwrap();
        assert_eq!(q.measured_eps(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for p in [Exponent::ONE, Exponent::TWO, Exponent::Infinity] {
            assert_eq!(diagram_distortion_sweep(&apx, p, 50, &mut rng, 4).unwrap().sup_distortion, 0.0);
        }
    }

    #[test]
    fn interval_example() {
        for i in [1u32, 4, 10] {
            let tight = interval_approximation(i, 8, 1.0 / i as f64).unwrap();
            let r = verify_pair_approximation(&tight).unwrap();
            assert_eq!(r.max_distortion, 2.0 / i as f64);
            assert!(!r.pass_distortion);
            assert!(r.pass_hausdorff && r.pass_coverage);
            let loose = tight.clone().with_eps(2.0 / i as f64);
            assert!(verify_pair_approximation(&loose).unwrap().passed());
            // every diagram collapses, and d_∞ of diagrams in X_i is at most 1/i
            let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
            let sweep = diagram_distortion_sweep(&loose, Exponent::Infinity, 100, &mut rng, 5).unwrap();
            assert!(sweep.pass().unwrap());
            assert!(sweep.sup_distortion <= 1.0 / i as f64);
            assert!(induced_diagram_map(&loose, &sample_ball_diagram(&loose, Exponent::TWO, &mut rng, 5).unwrap())
                .unwrap()
                .is_empty());
        }
    }

    #[test]
    fn divergence_rows() {
        let rows = divergence_profile(10, Exponent::TWO, &[1, 100, 10_000]).unwrap();
        for (row, want) in rows.iter().zip([0.1, 1.0, 10.0]) {
            assert!((row.distance_p - want).abs() <= 4.0 * f64::EPSILON * want);
            assert_eq!(row.expected, want);
            assert_eq!(row.image_distance, 0.0);
            assert_eq!(row.distance_inf, 0.1);
        }
    }

    #[test]
    fn coverage_counterexample() {
        let source = grid_pair(&[0.0, 1.0], vec![0]);
        let target = grid_pair(&[0.0, 1.0, 2.0], vec![0]);
        let map = vec![(Point::Index(0), Point::Index(0)), (Point::Index(1), Point::Index(1))];
        let apx = PairApproximation::new(source, target, map, 0.5, 10.0).unwrap();
        let r = verify_pair_approximation(&apx).unwrap();
        assert!(r.pass_distortion && r.pass_hausdorff);
        assert!(!r.pass_coverage);
        assert_eq!(r.coverage_slack, 1.0);
    }

    #[test]
    fn domain_outside_ball_and_unknown_points() {
        let pair = grid_pair(&[0.0, 1.0, 5.0], vec![0]);
        let bad = vec![(Point::Index(2), Point::Index(2))];
        assert!(PairApproximation::new(pair.clone(), pair.clone(), bad, 0.1, 2.0).is_err());
        let apx = PairApproximation::identity(pair.clone(), 2.0, 0.0).unwrap();
        assert_eq!(apx.map.len(), 2);
        let far = Diagram::new(pair, vec![Point::Index(2)]).unwrap();
        assert!(matches!(induced_diagram_map(&apx, &far), Err(Error::OutsideDomain)));
    }

    #[test]
    fn continuous_targets_need_a_sample() {
        let src = grid_pair(&[0.0, 1.0], vec![0]);
        let ray = Arc::new(MetricPair::ray());
        let map = vec![(Point::Index(0), Point::scalar(0.0)), (Point::Index(1), Point::scalar(1.0))];
        let apx = PairApproximation::new(src, ray, map, 0.1, 1.0).unwrap();
        assert!(matches!(verify_pair_approximation(&apx), Err(Error::EmptySample(_))));
        let sampled = apx
            .with_target_sample(vec![Point::scalar(0.0), Point::scalar(0.5), Point::scalar(1.0)])
            .unwrap();
        let r = verify_pair_approximation(&sampled).unwrap();
        assert_eq!(r.coverage_slack, 0.5);
        assert!(!r.exhaustive);
    }

    #[test]
    fn affine_map_agrees_with_pushforward() {
        let plane = Arc::new(MetricPair::euclidean_delta(1));
        let f = crate::RelativeMap::affine(vec![vec![2.0, 0.0], vec![0.0, 2.0]], vec![1.0, 1.0], plane.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sigma = DiagramSampler::new(4, 3.0).non_empty().diagram(&mut rng, &plane).unwrap();
        let map = sigma
            .points()
            .iter()
            .map(|x| (x.clone(), f.apply(&plane, x).unwrap()))
            .collect();
        let apx = PairApproximation::new(plane.clone(), plane.clone(), map, 0.0, 100.0).unwrap();
        assert_eq!(induced_diagram_map(&apx, &sigma).unwrap(), f.pushforward(&sigma).unwrap());
    }

    #[test]
    fn perturbed_pairs_induce_bounded_maps() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let apx = perturbed_finite_approximation(&mut rng, 10, 2, 0.05).unwrap();
            assert!(apx.eps <= 0.05 + 1e-12);
            let r = verify_pair_approximation(&apx).unwrap();
            assert!(r.passed() && r.exhaustive);
            let q = verify_pair_approximation(&quotient_approximation(&apx).unwrap()).unwrap();
            assert!(q.passed(), "{q:?}");
            assert_eq!(q.hausdorff_gap, 0.0);
            let sweep = diagram_distortion_sweep(&apx, Exponent::Infinity, 50, &mut rng, 4).unwrap();
            assert!(sweep.pass().unwrap());
        }
    }
}

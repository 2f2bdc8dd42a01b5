//! Finite persistence diagrams over a metric pair.
//!
//! A diagram stores only its points off `A`. The copies of `A` that the
//! distance definition allows to be added freely are implicit; the matching
//! solver materializes them when it needs to.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::math::{abs, Exponent};
use crate::metric_pair::{MetricPair, Point};

#[derive(Debug, Clone)]
pub struct Diagram {
    pair: Arc<MetricPair>,
    points: Vec<Point>,
}

impl PartialEq for Diagram {
    fn eq(&self, other: &Self) -> bool {
        same_pair(&self.pair, &other.pair) && self.points == other.points
    }
}

pub(crate) fn same_pair(a: &Arc<MetricPair>, b: &Arc<MetricPair>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

impl Diagram {
    /// Builds a diagram, dropping points that lie on `A`.
    pub fn new(pair: Arc<MetricPair>, points: Vec<Point>) -> Result<Self> {
        Self::ingest(pair, points).map(|(d, _)| d)
    }

    /// Like [`Diagram::new`] but also reports how many on-`A` points were
    /// dropped.
    pub fn ingest(pair: Arc<MetricPair>, points: Vec<Point>) -> Result<(Self, usize)> {
        let total = points.len();
        let mut kept = Vec::with_capacity(total);
        for p in points {
            if pair.dist_to_a(&p)? > 0.0 {
                kept.push(p);
            }
        }
        let dropped = total - kept.len();
        Ok((Self::from_valid(pair, kept), dropped))
    }

    /// Points already validated and off `A`.
    pub(crate) fn from_valid(pair: Arc<MetricPair>, mut points: Vec<Point>) -> Self {
        points.sort_by(|a, b| a.canonical_cmp(b));
        Self { pair, points }
    }

    pub fn empty(pair: Arc<MetricPair>) -> Self {
        Self {
            pair,
            points: Vec::new(),
        }
    }

    pub fn pair(&self) -> &Arc<MetricPair> {
        &self.pair
    }

    /// Points in canonical order.
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of off-`A` points counted with repetition.
    pub fn multiplicity(&self) -> usize {
        self.points.len()
    }

    pub fn persistences(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(move |x| self.pair.d_a(x))
    }

    /// `d_p(σ, σ_∅)`.
    pub fn persistence_norm(&self, p: Exponent) -> f64 {
        p.aggregate(self.persistences())
    }

    pub fn max_persistence(&self) -> f64 {
        self.persistences().fold(0.0, f64::max)
    }

    pub fn ensure_same_pair(&self, other: &Diagram) -> Result<()> {
        if same_pair(&self.pair, &other.pair) {
            Ok(())
        } else {
            Err(Error::MismatchedPairs)
        }
    }

    fn split(&self, alpha: f64) -> Result<(Vec<Point>, Vec<Point>)> {
        if !(alpha > 0.0) {
            return Err(Error::OutOfRange(format!("alpha = {alpha} must be positive")));
        }
        Ok(self
            .points
            .iter()
            .cloned()
            .partition(|x| self.pair.d_a(x) >= alpha))
    }

    /// `u_α(σ)`: points with persistence `≥ α`.
    pub fn upper_part(&self, alpha: f64) -> Result<Diagram> {
        let (upper, _) = self.split(alpha)?;
        Ok(Self::from_valid(self.pair.clone(), upper))
    }

    /// `l_α(σ)`: points with persistence `< α`.
    pub fn lower_part(&self, alpha: f64) -> Result<Diagram> {
        let (_, lower) = self.split(alpha)?;
        Ok(Self::from_valid(self.pair.clone(), lower))
    }

    /// Multiset sum `σ + τ`.
    pub fn plus(&self, other: &Diagram) -> Result<Diagram> {
        self.ensure_same_pair(other)?;
        let mut points = self.points.clone();
        points.extend(other.points.iter().cloned());
        Ok(Self::from_valid(self.pair.clone(), points))
    }

    /// `n` copies of a single point.
    pub fn repeated(pair: Arc<MetricPair>, point: Point, n: usize) -> Result<Diagram> {
        Self::new(pair, vec![point; n])
    }
}

/// The three quantities of the total-boundedness characterization, evaluated
/// on finite grids.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyDiagnostics {
    /// `sup_σ d_p(σ, σ_∅)`.
    pub bound: f64,
    /// Always `true` for a finite family.
    pub bounded: bool,
    /// `(ε, diameter of the union of u_ε(σ) over the family)`.
    pub offdiag_radius: Vec<(f64, f64)>,
    /// `(δ, sup_σ d_p(l_δ(σ), σ_∅))`, sorted by `δ`.
    pub uniformity_profile: Vec<(f64, f64)>,
}

pub fn family_diagnostics(
    family: &[Diagram],
    p: Exponent,
    eps_grid: &[f64],
    delta_grid: &[f64],
) -> Result<FamilyDiagnostics> {
    if let Some(first) = family.first() {
        for d in &family[1..] {
            first.ensure_same_pair(d)?;
        }
    }
    let bound = family
        .iter()
        .map(|d| d.persistence_norm(p))
        .fold(0.0, f64::max);

    let mut offdiag_radius = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        if !(eps > 0.0) {
            return Err(Error::OutOfRange(format!("eps = {eps} must be positive")));
        }
        let mut pts: Vec<&Point> = Vec::new();
        let mut pair = None;
        for d in family {
            pair = Some(d.pair.clone());
            for x in &d.points {
                if d.pair.d_a(x) >= eps {
                    pts.push(x);
                }
            }
        }
        let mut diam: f64 = 0.0;
        if let Some(pair) = pair {
            for i in 0..pts.len() {
                for j in (i + 1)..pts.len() {
                    diam = diam.max(pair.d(pts[i], pts[j]));
                }
            }
        }
        offdiag_radius.push((eps, diam));
    }

    let mut deltas = delta_grid.to_vec();
    deltas.sort_by(f64::total_cmp);
    let mut uniformity_profile = Vec::with_capacity(deltas.len());
    for delta in deltas {
        let mut sup: f64 = 0.0;
        for d in family {
            sup = sup.max(d.lower_part(delta)?.persistence_norm(p));
        }
        uniformity_profile.push((delta, sup));
    }

    Ok(FamilyDiagnostics {
        bound,
        bounded: bound.is_finite(),
        offdiag_radius,
        uniformity_profile,
    })
}

/// Relative maps `f: (X, A) → (Y, B)` with `f(A) ⊆ B` that can be serialized.
#[derive(Debug, Clone, PartialEq)]
pub enum RelativeMap {
    Identity,
    /// `x ↦ L x + b` on coordinates; `linear` is row-major `rows × cols`.
    Affine {
        rows: usize,
        cols: usize,
        linear: Vec<f64>,
        offset: Vec<f64>,
        target: Arc<MetricPair>,
    },
    /// `i ↦ images[i]` between finite spaces.
    IndexMap {
        images: Vec<usize>,
        target: Arc<MetricPair>,
    },
    /// Explicit point-by-point table, defined only on the listed points.
    Table {
        entries: Vec<(Point, Point)>,
        target: Arc<MetricPair>,
    },
}

/// Images closer to `B` than this (relative to their size) count as on `B`.
const ON_SUBSET_TOL: f64 = 1e-12;

impl RelativeMap {
    pub fn affine(linear: Vec<Vec<f64>>, offset: Vec<f64>, target: Arc<MetricPair>) -> Result<Self> {
        let rows = linear.len();
        let cols = linear.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 || linear.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidPair("ragged or empty affine matrix".into()));
        }
        if offset.len() != rows {
            return Err(Error::DimensionMismatch {
                expected: rows,
                found: offset.len(),
            });
        }
        if target.dimension() != Some(rows) {
            return Err(Error::DimensionMismatch {
                expected: target.dimension().unwrap_or(0),
                found: rows,
            });
        }
        Ok(RelativeMap::Affine {
            rows,
            cols,
            linear: linear.into_iter().flatten().collect(),
            offset,
            target,
        })
    }

    /// The isometric ray embedding `t ↦ (0,…,0, t,…,t)/√n` into
    /// `(R^{2n}, Δ_n)`; its images sit at distance `t/√2` from `Δ_n`.
    pub fn ray_embedding(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidPair("n must be positive".into()));
        }
        let s = 1.0 / libm::sqrt(n as f64);
        let linear = (0..2 * n).map(|k| vec![if k < n { 0.0 } else { s }]).collect();
        Self::affine(linear, vec![0.0; 2 * n], Arc::new(MetricPair::euclidean_delta(n)))
    }

    pub fn target<'a>(&'a self, source: &'a Arc<MetricPair>) -> &'a Arc<MetricPair> {
        match self {
            RelativeMap::Identity => source,
            RelativeMap::Affine { target, .. }
            | RelativeMap::IndexMap { target, .. }
            | RelativeMap::Table { target, .. } => target,
        }
    }

    /// Image of a source point, validated against the target.
    pub fn apply(&self, source: &MetricPair, x: &Point) -> Result<Point> {
        source.validate_point(x)?;
        let y = match self {
            RelativeMap::Identity => return Ok(x.clone()),
            RelativeMap::Affine {
                rows,
                cols,
                linear,
                offset,
                ..
            } => {
                let c = x.coords().ok_or(Error::OutsideDomain)?;
                if c.len() != *cols {
                    return Err(Error::DimensionMismatch {
                        expected: *cols,
                        found: c.len(),
                    });
                }
                Point::Coords(
                    (0..*rows)
                        .map(|r| {
                            offset[r]
                                + linear[r * cols..(r + 1) * cols]
                                    .iter()
                                    .zip(c)
                                    .map(|(a, b)| a * b)
                                    .sum::<f64>()
                        })
                        .collect(),
                )
            }
            RelativeMap::IndexMap { images, .. } => match x {
                Point::Index(i) => Point::Index(*images.get(*i).ok_or(Error::OutsideDomain)?),
                _ => return Err(Error::OutsideDomain),
            },
            RelativeMap::Table { entries, .. } => entries
                .iter()
                .find(|(s, _)| s == x)
                .map(|(_, t)| t.clone())
                .ok_or(Error::OutsideDomain)?,
        };
        match self {
            RelativeMap::Identity => {}
            RelativeMap::Affine { target, .. }
            | RelativeMap::IndexMap { target, .. }
            | RelativeMap::Table { target, .. } => target.validate_point(&y)?,
        }
        Ok(y)
    }

    fn lands_on_subset(target: &MetricPair, y: &Point) -> bool {
        let scale = y
            .coords()
            .map_or(1.0, |c| c.iter().fold(1.0f64, |m, v| m.max(abs(*v))));
        target.d_a(y) <= ON_SUBSET_TOL * scale
    }

    /// Checks `f(A) ⊆ B` on the source's sample of `A` (all of `A` for
    /// finite sources; table maps check the `A`-points they list).
    pub fn check_relative(&self, source: &Arc<MetricPair>) -> Result<()> {
        let target = self.target(source).clone();
        let sample: Vec<Point> = match self {
            RelativeMap::Identity => return Ok(()),
            RelativeMap::Table { entries, .. } => entries
                .iter()
                .filter(|(s, _)| source.dist_to_a(s).is_ok_and(|d| d == 0.0))
                .map(|(s, _)| s.clone())
                .collect(),
            _ => source.sample_a(),
        };
        for a in &sample {
            let y = self.apply(source, a)?;
            if !Self::lands_on_subset(&target, &y) {
                return Err(Error::MapLeavesSubset(format!("{a:?} ↦ {y:?}")));
            }
        }
        Ok(())
    }

    /// `f_*σ`: images of the points of `σ`, dropping those that land on `B`.
    pub fn pushforward(&self, sigma: &Diagram) -> Result<Diagram> {
        self.check_relative(&sigma.pair)?;
        self.pushforward_unchecked(sigma)
    }

    pub(crate) fn pushforward_unchecked(&self, sigma: &Diagram) -> Result<Diagram> {
        let target = self.target(&sigma.pair).clone();
        let mut points = Vec::with_capacity(sigma.points.len());
        for x in &sigma.points {
            let y = self.apply(&sigma.pair, x)?;
            if !Self::lands_on_subset(&target, &y) {
                points.push(y);
            }
        }
        Ok(Diagram::from_valid(target, points))
    }
}

/// Persistence convention helper: the coordinate gap `d - b` of a classical
/// planar point corresponds to a distance `(d - b)/√2` to the diagonal.
pub fn gap_to_persistence(gap: f64) -> f64 {
    gap / SQRT_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::close;
    use crate::metric_pair::FiniteSpace;

    fn plane() -> Arc<MetricPair> {
        Arc::new(MetricPair::euclidean_delta(1))
    }

    fn example() -> Diagram {
        Diagram::new(plane(), vec![Point::xy(0.0, 1.0), Point::xy(0.0, 4.0)]).unwrap()
    }

    #[test]
    fn persistence_norms() {
        let ray = Arc::new(MetricPair::ray());
        for (n, i) in [(1usize, 10.0f64), (7, 3.0), (100, 10.0)] {
            let sigma = Diagram::repeated(ray.clone(), Point::scalar(1.0 / i), n).unwrap();
            for p in [1.0, 2.0, 3.0] {
                let expected = libm::pow(n as f64, 1.0 / p) / i;
                let got = sigma.persistence_norm(Exponent::Finite(p));
                assert!(close(got, expected, 1e-14), "n={n} p={p} {got} vs {expected}");
            }
        }
        assert_eq!(Diagram::empty(plane()).persistence_norm(Exponent::TWO), 0.0);
        let single = Diagram::new(plane(), vec![Point::xy(0.0, 2.0)]).unwrap();
        assert!(close(single.persistence_norm(Exponent::TWO), SQRT_2, 1e-15));
        assert!(close(single.persistence_norm(Exponent::Infinity), SQRT_2, 1e-15));
    }

    #[test]
    fn alpha_parts() {
        let sigma = example();
        let upper = sigma.upper_part(1.0).unwrap();
        let lower = sigma.lower_part(1.0).unwrap();
        assert_eq!(upper.points(), &[Point::xy(0.0, 4.0)]);
        assert_eq!(lower.points(), &[Point::xy(0.0, 1.0)]);
        assert_eq!(sigma.upper_part(1e-9).unwrap(), sigma);
        assert!(sigma.lower_part(1e-9).unwrap().is_empty());
        assert!(sigma.upper_part(1e9).unwrap().is_empty());
        assert_eq!(sigma.lower_part(1e9).unwrap(), sigma);
        assert!(sigma.upper_part(0.0).is_err());
        assert!(sigma.lower_part(-1.0).is_err());
    }

    #[test]
    fn multiplicities() {
        assert_eq!(Diagram::empty(plane()).multiplicity(), 0);
        let five = Diagram::repeated(plane(), Point::xy(0.0, 3.0), 5).unwrap();
        assert_eq!(five.multiplicity(), 5);
        assert_eq!(example().multiplicity(), 2);
    }

    #[test]
    fn ingestion_drops_points_on_a() {
        let (d, dropped) =
            Diagram::ingest(plane(), vec![Point::xy(1.0, 1.0), Point::xy(0.0, 2.0)]).unwrap();
        assert_eq!(dropped, 1);
        assert_eq!(d.multiplicity(), 1);
        assert!(Diagram::new(plane(), vec![Point::scalar(1.0)]).is_err());
    }

    #[test]
    fn diagnostics_on_small_families() {
        let empty = family_diagnostics(&[Diagram::empty(plane())], Exponent::TWO, &[0.5], &[0.1, 1.0])
            .unwrap();
        assert_eq!(empty.bound, 0.0);
        assert!(empty.uniformity_profile.iter().all(|&(_, v)| v == 0.0));

        let x = Point::xy(0.0, 3.0);
        let dx = 3.0 / SQRT_2;
        let family: Vec<Diagram> = (1..=6)
            .map(|n| Diagram::repeated(plane(), x.clone(), n).unwrap())
            .collect();
        for p in [1.0, 2.0, 3.0] {
            let diag = family_diagnostics(&family, Exponent::Finite(p), &[1.0], &[1.0, 2.0]).unwrap();
            // brute evaluation of the family sup
            let expected = family
                .iter()
                .map(|d| libm::pow(d.multiplicity() as f64, 1.0 / p) * dx)
                .fold(0.0, f64::max);
            assert!(close(diag.bound, expected, 1e-14));
            assert!(close(diag.bound, libm::pow(6.0, 1.0 / p) * dx, 1e-14));
            assert!(diag.bounded);
            // all persistences ≥ dx > δ: lower parts are empty
            assert!(diag.uniformity_profile.iter().all(|&(_, v)| v == 0.0));
            assert_eq!(diag.offdiag_radius, vec![(1.0, 0.0)]);
        }

        let mixed = [
            example(),
            Diagram::new(Arc::new(MetricPair::ray()), vec![Point::scalar(1.0)]).unwrap(),
        ];
        assert_eq!(
            family_diagnostics(&mixed, Exponent::TWO, &[], &[]),
            Err(Error::MismatchedPairs)
        );
    }

    #[test]
    fn uniformity_profile_is_monotone() {
        let sigma = Diagram::new(
            plane(),
            vec![Point::xy(0.0, 0.5), Point::xy(0.0, 1.5), Point::xy(2.0, 6.0)],
        )
        .unwrap();
        let diag =
            family_diagnostics(&[sigma], Exponent::TWO, &[0.1, 1.0], &[2.0, 0.2, 1.0, 5.0]).unwrap();
        let values: Vec<f64> = diag.uniformity_profile.iter().map(|&(_, v)| v).collect();
        assert!(values.windows(2).all(|w| w[0] <= w[1]));
        assert!(diag.offdiag_radius[0].1 >= diag.offdiag_radius[1].1);
    }

    #[test]
    fn pushforward_examples() {
        let sigma = example();
        assert_eq!(RelativeMap::Identity.pushforward(&sigma).unwrap(), sigma);

        let ray = Arc::new(MetricPair::ray());
        let rho = Diagram::new(ray.clone(), vec![Point::scalar(3.0), Point::scalar(1.0)]).unwrap();
        for n in 1..4 {
            let f = RelativeMap::ray_embedding(n).unwrap();
            let image = f.pushforward(&rho).unwrap();
            let mut pers: Vec<f64> = image.persistences().collect();
            pers.sort_by(f64::total_cmp);
            assert!(close(pers[0], 1.0 / SQRT_2, 1e-14));
            assert!(close(pers[1], 3.0 / SQRT_2, 1e-14));
        }

        let collapse =
            RelativeMap::affine(vec![vec![0.0, 0.0], vec![0.0, 0.0]], vec![2.0, 2.0], plane()).unwrap();
        assert!(collapse.pushforward(&sigma).unwrap().is_empty());

        let shift = RelativeMap::affine(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0, 1.0], plane())
            .unwrap();
        assert!(matches!(shift.pushforward(&sigma), Err(Error::MapLeavesSubset(_))));
    }

    #[test]
    fn index_maps_between_finite_pairs() {
        let src = Arc::new(MetricPair::finite(
            FiniteSpace::from_grid(&[0.0, 1.0, 2.0], vec![0]).unwrap(),
        ));
        let dst = Arc::new(MetricPair::finite(
            FiniteSpace::from_grid(&[0.0, 2.0], vec![0]).unwrap(),
        ));
        let sigma = Diagram::new(src.clone(), vec![Point::Index(1), Point::Index(2)]).unwrap();
        let f = RelativeMap::IndexMap {
            images: vec![0, 0, 1],
            target: dst.clone(),
        };
        let image = f.pushforward(&sigma).unwrap();
        assert_eq!(image.points(), &[Point::Index(1)]);
        let bad = RelativeMap::IndexMap {
            images: vec![1, 0, 1],
            target: dst,
        };
        assert!(bad.pushforward(&sigma).is_err());
    }
}

//! Comparison-geometry checks in `D_2`: the quadrilateral inequality,
//! comparison angles at the empty diagram and inner products of
//! finite-diagram directions.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::assignment::min_cost_assignment;
use crate::diagram::Diagram;
use crate::error::{Error, Result};
use crate::geodesic::geodesic;
use crate::math::{abs, acos, sqrt, Exponent};
use crate::matching::{distance, Matching};
use crate::metric_pair::{MetricPair, PairKind, Point};

/// Projections closer than this (sup norm) count as the same base point.
pub const BASE_POINT_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs`.
    pub slack: f64,
    pub tol: f64,
    /// Optimal matchings behind the distances, in the order
    /// `σ₂→σ₃, σ₁→m, σ₁→σ₂, σ₁→σ₃`.
    pub witnesses: Vec<Matching>,
}

impl ComparisonReport {
    pub fn failed(&self) -> bool {
        self.slack < -self.tol
    }
}

fn require_nonneg_curved(pair: &MetricPair) -> Result<()> {
    match pair.kind() {
        PairKind::EuclideanDelta { .. }
        | PairKind::EuclideanHalfplaneDelta { .. }
        | PairKind::EuclideanQuadrantDelta { .. }
        | PairKind::RayOrigin => Ok(()),
        _ => Err(Error::UnsupportedKind {
            op: "curvature check",
            kind: pair.kind_name(),
        }),
    }
}

/// With `m` the midpoint of a geodesic `σ₂ → σ₃`, compares
/// `d(σ₁,m)²` against `½d(σ₁,σ₂)² + ½d(σ₁,σ₃)² − ¼d(σ₂,σ₃)²`.
pub fn quadrilateral_check(s1: &Diagram, s2: &Diagram, s3: &Diagram, tol: f64) -> Result<ComparisonReport> {
    s1.ensure_same_pair(s2)?;
    s1.ensure_same_pair(s3)?;
    require_nonneg_curved(s1.pair())?;
    let p = Exponent::TWO;
    let path = geodesic(s2, s3, p)?;
    let m = path.evaluate(0.5)?;
    let d23 = path.length();
    let (d1m, w1m) = distance(s1, &m, p)?;
    let (d12, w12) = distance(s1, s2, p)?;
    let (d13, w13) = distance(s1, s3, p)?;
    let lhs = d1m * d1m;
    let rhs = 0.5 * d12 * d12 + 0.5 * d13 * d13 - 0.25 * d23 * d23;
    Ok(ComparisonReport {
        lhs,
        rhs,
        slack: lhs - rhs,
        tol,
        witnesses: vec![path.matching().clone(), w1m, w12, w13],
    })
}

/// Comparison angle `∠̃ σ σ_∅ σ'` in `D_2`, in `[0, π]`.
pub fn comparison_angle_at_empty(sigma: &Diagram, other: &Diagram) -> Result<f64> {
    sigma.ensure_same_pair(other)?;
    if sigma.is_empty() || other.is_empty() {
        return Err(Error::Degenerate("comparison angle at the empty diagram needs non-empty diagrams"));
    }
    let p = Exponent::TWO;
    let a = sigma.persistence_norm(p);
    let b = other.persistence_norm(p);
    let (c, _) = distance(sigma, other, p)?;
    let cos = (a * a + b * b - c * c) / (2.0 * a * b);
    Ok(acos(cos.clamp(-1.0, 1.0)))
}

fn direction(pair: &MetricPair, x: &Point) -> (Vec<f64>, Vec<f64>) {
    let base = pair.nearest(x);
    let b = base.coords().expect("continuous kind").to_vec();
    let v = x.coords().expect("continuous kind").iter().zip(&b).map(|(x, b)| x - b).collect();
    (b, v)
}

fn same_base(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| abs(x - y) <= BASE_POINT_TOL)
}

/// Weight table of the direction inner product: `Some(⟨x−πx, y−πy⟩)` for
/// pairs with equal base points, row-major `|σ| × |σ'|`.
fn direction_weights(sigma: &Diagram, other: &Diagram) -> Result<Vec<Option<f64>>> {
    sigma.ensure_same_pair(other)?;
    let pair = sigma.pair();
    require_nonneg_curved(pair)?;
    let left: Vec<_> = sigma.points().iter().map(|x| direction(pair, x)).collect();
    let right: Vec<_> = other.points().iter().map(|x| direction(pair, x)).collect();
    let mut w = Vec::with_capacity(left.len() * right.len());
    for (ba, va) in &left {
        for (bb, vb) in &right {
            w.push(if same_base(ba, bb) {
                Some(va.iter().zip(vb).map(|(x, y)| x * y).sum())
            } else {
                None
            });
        }
    }
    Ok(w)
}

/// `max_φ Σ d(a,A)·d(φa,A)·cos∠(ξ_a, ξ_φa)` over partial bijections between
/// points with equal base points. Never negative: the empty bijection
/// contributes 0.
pub fn direction_inner_product(sigma: &Diagram, other: &Diagram) -> Result<f64> {
    let w = direction_weights(sigma, other)?;
    let (n, m) = (sigma.multiplicity(), other.multiplicity());
    let k = n.max(m);
    if k == 0 {
        return Ok(0.0);
    }
    // leaving a point unmatched costs nothing, so only positive gains matter
    let mut cost = vec![0.0; k * k];
    for i in 0..n {
        for j in 0..m {
            if let Some(g) = w[i * m + j] {
                cost[i * k + j] = -g.max(0.0);
            }
        }
    }
    let assign = min_cost_assignment(k, &cost);
    let total: f64 = (0..k).map(|i| -cost[i * k + assign[i]]).sum();
    Ok(total.max(0.0))
}

#[derive(Debug, Clone)]
pub struct DensityProbe {
    /// `(n, ∠̃ σ_n σ_∅ σ)` for prefixes ordered by decreasing persistence.
    pub comparison_angles: Vec<(usize, f64)>,
    /// Angles between the directions of `σ_n` and `σ` from the inner product.
    pub direction_angles: Vec<(usize, f64)>,
    /// Both sequences are non-increasing within the tolerance.
    pub monotone: bool,
}

/// Angles between `σ` and its prefixes `σ_n`, `n = 1..=min(N, |σ|)`.
pub fn finite_direction_density_probe(sigma: &Diagram, max_prefix: usize, tol: f64) -> Result<DensityProbe> {
    require_nonneg_curved(sigma.pair())?;
    let pair = sigma.pair();
    let mut order: Vec<(f64, &Point)> = sigma.points().iter().map(|x| (pair.d_a(x), x)).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.canonical_cmp(b.1)));
    let norm = sigma.persistence_norm(Exponent::TWO);
    let mut comparison_angles = Vec::new();
    let mut direction_angles = Vec::new();
    for n in 1..=max_prefix.min(order.len()) {
        let prefix = Diagram::from_valid(pair.clone(), order[..n].iter().map(|(_, x)| (*x).clone()).collect());
        comparison_angles.push((n, comparison_angle_at_empty(&prefix, sigma)?));
        let cos = direction_inner_product(&prefix, sigma)? / (prefix.persistence_norm(Exponent::TWO) * norm);
        direction_angles.push((n, acos(cos.clamp(-1.0, 1.0))));
    }
    let non_increasing = |s: &[(usize, f64)]| s.windows(2).all(|w| w[1].1 <= w[0].1 + tol);
    Ok(DensityProbe {
        monotone: non_increasing(&comparison_angles) && non_increasing(&direction_angles),
        comparison_angles,
        direction_angles,
    })
}

#[derive(Debug, Clone)]
pub struct FlatTriangleReport {
    /// Persistences `d(x_i, A)`.
    pub persistences: [f64; 3],
    /// Largest `|d_2(σ_i,σ_j)² − (d(x_i,A)² + d(x_j,A)²)|`.
    pub side_defect: f64,
    /// Largest deviation of `d_2(σ_k, η_ij(t))` from the distance between
    /// the matching points of the flat triangle in `R³`.
    pub interior_defect: f64,
    /// Largest deviation of `η_ij` from constant speed.
    pub speed_defect: f64,
}

impl FlatTriangleReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.side_defect <= tol && self.interior_defect <= tol && self.speed_defect <= tol
    }
}

/// Singleton diagrams `{x_i}` far enough apart that every pairwise matching
/// goes through `A` span a geodesic triangle isometric to the flat triangle
/// with vertices `d(x_i,A)·e_i` in `R³`, which rules out any positive lower
/// curvature bound.
pub fn flat_triangle_check(pair: &Arc<MetricPair>, xs: &[Point; 3], grid: &[f64]) -> Result<FlatTriangleReport> {
    require_nonneg_curved(pair)?;
    for x in xs {
        pair.validate_point(x)?;
    }
    let p = Exponent::TWO;
    let pers = [pair.d_a(&xs[0]), pair.d_a(&xs[1]), pair.d_a(&xs[2])];
    let base: Vec<Point> = xs.iter().map(|x| pair.nearest(x)).collect();
    // ξ_i(s): constant speed from the base point to x_i
    let xi = |i: usize, s: f64| pair.segment(&base[i], &xs[i], s);
    let sigma: Vec<Diagram> = xs.iter().map(|x| Diagram::new(pair.clone(), vec![x.clone()])).collect::<Result<_>>()?;
    let mut side_defect: f64 = 0.0;
    let mut interior_defect: f64 = 0.0;
    let mut speed_defect: f64 = 0.0;
    for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
        let (dij, _) = distance(&sigma[i], &sigma[j], p)?;
        side_defect = side_defect.max(abs(dij * dij - (pers[i] * pers[i] + pers[j] * pers[j])));
        let eta: Vec<Diagram> = grid
            .iter()
            .map(|&t| Diagram::new(pair.clone(), vec![xi(i, 1.0 - t)?, xi(j, t)?]))
            .collect::<Result<_>>()?;
        for (a, &t) in grid.iter().enumerate() {
            let (dk, _) = distance(&sigma[k], &eta[a], p)?;
            let (u, v) = ((1.0 - t) * pers[i], t * pers[j]);
            interior_defect = interior_defect.max(abs(dk - sqrt(pers[k] * pers[k] + u * u + v * v)));
            for b in (a + 1)..grid.len() {
                let (d, _) = distance(&eta[a], &eta[b], p)?;
                speed_defect = speed_defect.max(abs(d - abs(grid[b] - t) * dij));
            }
        }
    }
    Ok(FlatTriangleReport {
        persistences: pers,
        side_defect,
        interior_defect,
        speed_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::DiagramSampler;
    use core::f64::consts::{FRAC_PI_2, SQRT_2};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn plane() -> Arc<MetricPair> {
        Arc::new(MetricPair::euclidean_delta(1))
    }

    fn diag(pts: &[(f64, f64)]) -> Diagram {
        Diagram::new(plane(), pts.iter().map(|&(x, y)| Point::xy(x, y)).collect()).unwrap()
    }

    /// Exhaustive maximum over partial bijections.
    fn brute_inner(sigma: &Diagram, other: &Diagram) -> f64 {
        let w = direction_weights(sigma, other).unwrap();
        let (n, m) = (sigma.multiplicity(), other.multiplicity());
        fn go(i: usize, n: usize, m: usize, w: &[Option<f64>], used: &mut [bool]) -> f64 {
            if i == n {
                return 0.0;
            }
            let mut best = go(i + 1, n, m, w, used);
            for j in 0..m {
                if let (false, Some(g)) = (used[j], w[i * m + j]) {
                    used[j] = true;
                    best = best.max(g + go(i + 1, n, m, w, used));
                    used[j] = false;
                }
            }
            best
        }
        go(0, n, m, &w, &mut vec![false; m])
    }

    #[test]
    fn trivial_quadrilaterals() {
        let s = diag(&[(0.0, 2.0), (1.0, 4.0)]);
        let t = diag(&[(3.0, 3.5)]);
        let r = quadrilateral_check(&s, &s, &s, 1e-9).unwrap();
        assert_eq!(r.slack, 0.0);
        let r = quadrilateral_check(&t, &s, &s, 1e-9).unwrap();
        assert!(abs(r.slack) <= 1e-12);
        assert!(!r.failed());
        assert_eq!(r.witnesses.len(), 4);
    }

    #[test]
    fn random_quadrilaterals() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pair = plane();
        let s = DiagramSampler::new(4, 4.0);
        for _ in 0..150 {
            let (a, b, c) = (
                s.diagram(&mut rng, &pair).unwrap(),
                s.diagram(&mut rng, &pair).unwrap(),
                s.diagram(&mut rng, &pair).unwrap(),
            );
            let r = quadrilateral_check(&a, &b, &c, 1e-9).unwrap();
            assert!(!r.failed(), "slack {}", r.slack);
        }
    }

    #[test]
    fn rejects_sup_norm_plane() {
        let pair = Arc::new(MetricPair::linf_plane());
        let d = Diagram::new(pair, vec![Point::xy(0.0, 1.0)]).unwrap();
        assert!(matches!(quadrilateral_check(&d, &d, &d, 1e-9), Err(Error::UnsupportedKind { .. })));
    }

    #[test]
    fn angles_at_empty() {
        let s = diag(&[(0.0, 2.0)]);
        assert!(comparison_angle_at_empty(&s, &s).unwrap().abs() < 1e-7);
        let witness = comparison_angle_at_empty(&s, &diag(&[(2.0, 4.0)])).unwrap();
        assert!(abs(witness - FRAC_PI_2) <= 1e-12);
        assert!(matches!(
            comparison_angle_at_empty(&s, &Diagram::empty(plane())),
            Err(Error::Degenerate(_))
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sampler = DiagramSampler::new(4, 5.0).non_empty();
        for _ in 0..200 {
            let (a, b) = (sampler.diagram(&mut rng, &plane()).unwrap(), sampler.diagram(&mut rng, &plane()).unwrap());
            assert!(comparison_angle_at_empty(&a, &b).unwrap() <= FRAC_PI_2 + 1e-9);
        }
    }

    #[test]
    fn inner_product_examples() {
        let s = diag(&[(0.0, 2.0), (1.0, 4.0), (1.0, 4.0)]);
        let norm = s.persistence_norm(Exponent::TWO);
        assert!(abs(direction_inner_product(&s, &s).unwrap() - norm * norm) <= 1e-9);
        // opposite directions from (1,1)
        let up = diag(&[(0.0, 2.0)]);
        let down = diag(&[(2.0, 0.0)]);
        assert_eq!(direction_inner_product(&up, &down).unwrap(), 0.0);
        assert_eq!(direction_inner_product(&up, &diag(&[(5.0, 6.0)])).unwrap(), 0.0);
        // same base point, same direction, different lengths
        let v = direction_inner_product(&up, &diag(&[(-1.0, 3.0)])).unwrap();
        assert!(abs(v - SQRT_2 * 2.0 * SQRT_2) <= 1e-12);
    }

    #[test]
    fn inner_product_against_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pair = plane();
        // a coarse lattice makes shared base points common
        let sampler = DiagramSampler::new(4, 3.0).with_lattice(1.0);
        for _ in 0..300 {
            let a = sampler.diagram(&mut rng, &pair).unwrap();
            let b = sampler.diagram(&mut rng, &pair).unwrap();
            let v = direction_inner_product(&a, &b).unwrap();
            assert!(abs(v - brute_inner(&a, &b)) <= 1e-9);
            assert!(abs(v - direction_inner_product(&b, &a).unwrap()) <= 1e-9);
            assert!(v >= 0.0);
        }
    }

    #[test]
    fn density_probe() {
        let s = diag(&[(0.0, 2.0)]);
        let r = finite_direction_density_probe(&s, 5, 1e-9).unwrap();
        assert_eq!(r.comparison_angles.len(), 1);
        assert!(r.comparison_angles[0].1 < 1e-7);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let sampler = DiagramSampler::new(6, 5.0);
        for _ in 0..20 {
            let sigma = sampler.exact(&mut rng, &plane(), 6).unwrap();
            let r = finite_direction_density_probe(&sigma, 6, 1e-9).unwrap();
            assert!(r.monotone);
            assert!(r.comparison_angles.last().unwrap().1 < 1e-7);
            for ((_, a), (_, b)) in r.comparison_angles.iter().zip(&r.direction_angles) {
                assert!(abs(a - b) < 1e-6);
            }
        }
        assert!(finite_direction_density_probe(&Diagram::empty(plane()), 3, 1e-9)
            .unwrap()
            .comparison_angles
            .is_empty());
    }

    #[test]
    fn flat_triangle() {
        let xs = [Point::xy(0.0, 2.0), Point::xy(10.0, 14.0), Point::xy(30.0, 36.0)];
        let grid: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let r = flat_triangle_check(&plane(), &xs, &grid).unwrap();
        assert!(r.passed(1e-9), "{r:?}");
        assert!(abs(r.persistences[1] - 2.0 * SQRT_2) <= 1e-12);
    }
}

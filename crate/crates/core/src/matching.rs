//! Exact `d_p` between finite diagrams.
//!
//! For `p < ∞` the augmented bijections reduce to a square assignment problem
//! of size `|σ| + |τ|`:
//!
//! ```text
//!             τ_1 .. τ_m        Ā (n copies)
//!   σ_1..σ_n  d(x,y)^p          d(x,A)^p
//!   Ā (m)     d(y,A)^p          0
//! ```
//!
//! solved with the shortest augmenting path method. For `p = ∞` the same
//! matrix (without powers) is searched for the smallest threshold admitting a
//! perfect matching. Both are checked against [`brute_force_distance`], which
//! enumerates every partial bijection directly.

use alloc::boxed::Box;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::assignment::{hopcroft_karp, min_cost_assignment};
use crate::diagram::Diagram;
use crate::error::{Error, Result};
use crate::math::{hypot_n, Exponent};
use crate::metric_pair::{PairKind, Point};

/// A partial bijection between two diagrams; unmatched points go to `A`.
///
/// Indices refer to the canonical point order of the diagrams.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    pub pairs: Vec<(usize, usize)>,
    pub sigma_to_a: Vec<usize>,
    pub tau_to_a: Vec<usize>,
    pub p: Exponent,
    pub cost: f64,
}

impl Matching {
    /// The individual transport costs, pairs first.
    pub fn terms(&self, sigma: &Diagram, tau: &Diagram) -> Vec<f64> {
        let pair = sigma.pair();
        let (s, t) = (sigma.points(), tau.points());
        self.pairs
            .iter()
            .map(|&(i, j)| pair.d(&s[i], &t[j]))
            .chain(self.sigma_to_a.iter().map(|&i| pair.d_a(&s[i])))
            .chain(self.tau_to_a.iter().map(|&j| pair.d_a(&t[j])))
            .collect()
    }

    /// Recomputes the cost of this matching under exponent `p`.
    pub fn evaluate(&self, sigma: &Diagram, tau: &Diagram, p: Exponent) -> f64 {
        p.aggregate(self.terms(sigma, tau))
    }

    /// Every point of both diagrams is used exactly once.
    pub fn is_complete(&self, n_sigma: usize, n_tau: usize) -> bool {
        let mut s = vec![0u32; n_sigma];
        let mut t = vec![0u32; n_tau];
        for &(i, j) in &self.pairs {
            match (s.get_mut(i), t.get_mut(j)) {
                (Some(a), Some(b)) => {
                    *a += 1;
                    *b += 1;
                }
                _ => return false,
            }
        }
        for &i in &self.sigma_to_a {
            match s.get_mut(i) {
                Some(a) => *a += 1,
                None => return false,
            }
        }
        for &j in &self.tau_to_a {
            match t.get_mut(j) {
                Some(b) => *b += 1,
                None => return false,
            }
        }
        s.iter().chain(&t).all(|&c| c == 1)
    }

    /// The same matching read from `τ` to `σ`.
    pub fn inverse(&self) -> Matching {
        Matching {
            pairs: self.pairs.iter().map(|&(i, j)| (j, i)).collect(),
            sigma_to_a: self.tau_to_a.clone(),
            tau_to_a: self.sigma_to_a.clone(),
            p: self.p,
            cost: self.cost,
        }
    }

    fn canonicalize(mut self) -> Self {
        self.pairs.sort_unstable();
        self.sigma_to_a.sort_unstable();
        self.tau_to_a.sort_unstable();
        self
    }
}

/// Block cost matrix of the reduction, un-powered; `None` marks an infinite
/// entry (points in different components of a disjoint union).
fn block_matrix(sigma: &Diagram, tau: &Diagram) -> (usize, Vec<Option<f64>>) {
    let pair = sigma.pair();
    let (s, t) = (sigma.points(), tau.points());
    let (n, m) = (s.len(), t.len());
    let size = n + m;
    let mut c = vec![Some(0.0); size * size];
    for i in 0..n {
        let da = pair.d_a(&s[i]);
        for j in 0..m {
            let d = pair.d(&s[i], &t[j]);
            c[i * size + j] = if d.is_finite() { Some(d) } else { None };
        }
        for k in 0..n {
            c[i * size + m + k] = Some(da);
        }
    }
    for l in 0..m {
        for j in 0..m {
            c[(n + l) * size + j] = Some(pair.d_a(&t[j]));
        }
    }
    (size, c)
}

fn matching_from_assignment(n: usize, m: usize, assign: &[usize], p: Exponent) -> Matching {
    let mut out = Matching {
        pairs: Vec::new(),
        sigma_to_a: Vec::new(),
        tau_to_a: Vec::new(),
        p,
        cost: 0.0,
    };
    for (row, &col) in assign.iter().enumerate() {
        match (row < n, col < m) {
            (true, true) => out.pairs.push((row, col)),
            (true, false) => out.sigma_to_a.push(row),
            (false, true) => out.tau_to_a.push(col),
            (false, false) => {}
        }
    }
    out.canonicalize()
}

/// `d_p(σ, τ)` together with an optimal matching attaining it.
pub fn distance(sigma: &Diagram, tau: &Diagram, p: Exponent) -> Result<(f64, Matching)> {
    sigma.ensure_same_pair(tau)?;
    let (n, m) = (sigma.multiplicity(), tau.multiplicity());
    if n == 0 || m == 0 {
        let mut matching = Matching {
            pairs: Vec::new(),
            sigma_to_a: (0..n).collect(),
            tau_to_a: (0..m).collect(),
            p,
            cost: 0.0,
        };
        matching.cost = matching.evaluate(sigma, tau, p);
        return Ok((matching.cost, matching));
    }
    let (size, blocks) = block_matrix(sigma, tau);
    let assign = match p {
        Exponent::Finite(_) => {
            let mut cost = Vec::with_capacity(size * size);
            let pair = sigma.pair();
            for (idx, entry) in blocks.iter().enumerate() {
                cost.push(match entry {
                    Some(c) => p.pow(*c),
                    None => {
                        // Strictly worse than sending both endpoints to A.
                        let (i, j) = (idx / size, idx % size);
                        let via_a = p.pow(pair.d_a(&sigma.points()[i]))
                            + p.pow(pair.d_a(&tau.points()[j]));
                        2.0 * via_a + 1.0
                    }
                });
            }
            min_cost_assignment(size, &cost)
        }
        Exponent::Infinity => bottleneck_assignment(size, &blocks),
    };
    let mut matching = matching_from_assignment(n, m, &assign, p);
    matching.cost = matching.evaluate(sigma, tau, p);
    Ok((matching.cost, matching))
}

/// Smallest threshold admitting a perfect matching, by binary search over
/// the sorted distinct candidate costs.
fn bottleneck_assignment(size: usize, blocks: &[Option<f64>]) -> Vec<usize> {
    if size == 0 {
        return Vec::new();
    }
    let mut candidates: Vec<f64> = blocks.iter().flatten().copied().collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    let feasible = |threshold: f64| -> Option<Vec<usize>> {
        let adj: Vec<Vec<usize>> = (0..size)
            .map(|r| {
                (0..size)
                    .filter(|&c| matches!(blocks[r * size + c], Some(v) if v <= threshold))
                    .collect()
            })
            .collect();
        let m = hopcroft_karp(size, size, &adj);
        m.into_iter().collect::<Option<Vec<usize>>>()
    };

    // The largest candidate is always feasible: every point can go to A.
    // `best` always holds a perfect matching at `candidates[hi]`.
    let (mut lo, mut hi) = (0usize, candidates.len() - 1);
    let mut best = feasible(candidates[hi]).expect("through-A matching exists");
    while lo < hi {
        let mid = (lo + hi) / 2;
        match feasible(candidates[mid]) {
            Some(a) => {
                best = a;
                hi = mid;
            }
            None => lo = mid + 1,
        }
    }
    best
}

/// Maximum `|σ| + |τ|` accepted by the enumeration oracle.
pub const BRUTE_FORCE_CAP: usize = 10;

type Visit<'a> = dyn FnMut(&[Option<usize>], &[bool]) + 'a;

/// Calls `visit` on every partial bijection between `σ` and `τ`.
fn enumerate_matchings(n: usize, m: usize, visit: &mut Visit<'_>) {
    fn rec(
        i: usize,
        n: usize,
        assign: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        visit: &mut Visit<'_>,
    ) {
        if i == n {
            visit(assign, used);
            return;
        }
        assign[i] = None;
        rec(i + 1, n, assign, used, visit);
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                assign[i] = Some(j);
                rec(i + 1, n, assign, used, visit);
                used[j] = false;
            }
        }
        assign[i] = None;
    }
    let mut assign = vec![None; n];
    let mut used = vec![false; m];
    rec(0, n, &mut assign, &mut used, visit);
}

fn enumerated_cost(
    sigma: &Diagram,
    tau: &Diagram,
    p: Exponent,
    assign: &[Option<usize>],
    used: &[bool],
) -> f64 {
    let pair = sigma.pair();
    let (s, t) = (sigma.points(), tau.points());
    let terms = assign
        .iter()
        .enumerate()
        .map(|(i, a)| match a {
            Some(j) => pair.d(&s[i], &t[*j]),
            None => pair.d_a(&s[i]),
        })
        .chain(
            used.iter()
                .enumerate()
                .filter(|(_, u)| !**u)
                .map(|(j, _)| pair.d_a(&t[j])),
        );
    p.aggregate(terms)
}

fn check_cap(sigma: &Diagram, tau: &Diagram) -> Result<()> {
    sigma.ensure_same_pair(tau)?;
    let total = sigma.multiplicity() + tau.multiplicity();
    if total > BRUTE_FORCE_CAP {
        return Err(Error::SizeCapExceeded {
            total,
            cap: BRUTE_FORCE_CAP,
        });
    }
    Ok(())
}

/// Exhaustive minimum over all subsets `S ⊆ σ`, `T ⊆ τ` with `|S| = |T|` and
/// all bijections `S → T`, the rest going to `A`.
pub fn brute_force_distance(sigma: &Diagram, tau: &Diagram, p: Exponent) -> Result<f64> {
    check_cap(sigma, tau)?;
    let mut best = f64::INFINITY;
    enumerate_matchings(sigma.multiplicity(), tau.multiplicity(), &mut |assign, used| {
        best = best.min(enumerated_cost(sigma, tau, p, assign, used));
    });
    Ok(best)
}

/// Every matching whose cost is within `tol` (relative) of the optimum,
/// found by exhaustive enumeration under the brute-force cap.
pub fn optimal_matchings(
    sigma: &Diagram,
    tau: &Diagram,
    p: Exponent,
    tol: f64,
) -> Result<Vec<Matching>> {
    let best = brute_force_distance(sigma, tau, p)?;
    let limit = best + tol * best.max(1.0);
    let mut out = Vec::new();
    enumerate_matchings(sigma.multiplicity(), tau.multiplicity(), &mut |assign, used| {
        let cost = enumerated_cost(sigma, tau, p, assign, used);
        if cost <= limit {
            let mut m = Matching {
                pairs: Vec::new(),
                sigma_to_a: Vec::new(),
                tau_to_a: Vec::new(),
                p,
                cost,
            };
            for (i, a) in assign.iter().enumerate() {
                match a {
                    Some(j) => m.pairs.push((i, *j)),
                    None => m.sigma_to_a.push(i),
                }
            }
            m.tau_to_a = (0..used.len()).filter(|&j| !used[j]).collect();
            out.push(m);
        }
    });
    Ok(out)
}

fn ray_values(d: &Diagram) -> Result<Vec<f64>> {
    if !matches!(d.pair().kind(), PairKind::RayOrigin) {
        return Err(Error::UnsupportedKind {
            op: "sorted ray distance",
            kind: d.pair().kind_name(),
        });
    }
    Ok(d.points()
        .iter()
        .map(|x| x.coords().expect("ray points have coordinates")[0])
        .collect())
}

/// `d_2` on `([0,∞), {0})` in closed form: sort both diagrams in decreasing
/// order, pad with zeros and take the Euclidean distance.
pub fn sorted_ray_distance(sigma: &Diagram, tau: &Diagram) -> Result<f64> {
    let mut a = ray_values(sigma)?;
    let mut b = ray_values(tau)?;
    let n = a.len().max(b.len());
    a.resize(n, 0.0);
    b.resize(n, 0.0);
    a.sort_by(|x, y| y.total_cmp(x));
    b.sort_by(|x, y| y.total_cmp(x));
    let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    Ok(hypot_n(&diff))
}

/// Splits a diagram over `X ⊔ Y` into its two components.
pub fn split_components(d: &Diagram) -> Result<(Diagram, Diagram)> {
    let PairKind::DisjointUnion { left, right, .. } = d.pair().kind() else {
        return Err(Error::UnsupportedKind {
            op: "component split",
            kind: d.pair().kind_name(),
        });
    };
    let (left, right) = (Arc::new((**left).clone()), Arc::new((**right).clone()));
    let mut l = Vec::new();
    let mut r = Vec::new();
    for x in d.points() {
        match x {
            Point::Left(p) => l.push((**p).clone()),
            Point::Right(p) => r.push((**p).clone()),
            other => return Err(Error::NotInSpace(format!("{other:?}"))),
        }
    }
    Ok((Diagram::from_valid(left, l), Diagram::from_valid(right, r)))
}

/// Joins two component diagrams into a diagram over their disjoint union.
pub fn join_components(pair: Arc<crate::MetricPair>, left: &Diagram, right: &Diagram) -> Result<Diagram> {
    let points = left
        .points()
        .iter()
        .map(|p| Point::Left(Box::new(p.clone())))
        .chain(right.points().iter().map(|p| Point::Right(Box::new(p.clone()))))
        .collect();
    Diagram::new(pair, points)
}

/// `(d_p(σ_X, τ_X)^p + d_p(σ_Y, τ_Y)^p)^{1/p}` (max for `p = ∞`), computed
/// component by component.
pub fn product_distance_check(sigma: &Diagram, tau: &Diagram, p: Exponent) -> Result<f64> {
    sigma.ensure_same_pair(tau)?;
    let (sl, sr) = split_components(sigma)?;
    let (tl, tr) = split_components(tau)?;
    let (dl, _) = distance(&sl, &tl, p)?;
    let (dr, _) = distance(&sr, &tr, p)?;
    Ok(p.aggregate([dl, dr]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::close;
    use crate::metric_pair::MetricPair;
    use core::f64::consts::SQRT_2;

    fn plane() -> Arc<MetricPair> {
        Arc::new(MetricPair::euclidean_delta(1))
    }

    fn ray(values: &[f64]) -> Diagram {
        Diagram::new(
            Arc::new(MetricPair::ray()),
            values.iter().map(|&v| Point::scalar(v)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn singleton_to_empty() {
        let sigma = Diagram::new(plane(), vec![Point::xy(0.0, 2.0)]).unwrap();
        let (d, m) = distance(&sigma, &Diagram::empty(plane()), Exponent::TWO).unwrap();
        assert!(close(d, SQRT_2, 1e-15));
        assert_eq!(m.sigma_to_a, vec![0]);
        assert!(m.pairs.is_empty());
    }

    #[test]
    fn repeated_point_to_empty() {
        let i = 10.0;
        for n in [1usize, 5, 40] {
            let sigma = ray(&vec![1.0 / i; n]);
            let empty = ray(&[]);
            for p in [1.0, 2.0, 3.0] {
                let (d, _) = distance(&sigma, &empty, Exponent::Finite(p)).unwrap();
                assert!(close(d, libm::pow(n as f64, 1.0 / p) / i, 1e-13));
            }
        }
    }

    #[test]
    fn ray_example() {
        let sigma = ray(&[3.0, 1.0]);
        let tau = ray(&[2.0, 2.0]);
        let bf = brute_force_distance(&sigma, &tau, Exponent::TWO).unwrap();
        assert!(close(bf, SQRT_2, 1e-15));
        let (d, m) = distance(&sigma, &tau, Exponent::TWO).unwrap();
        assert!(close(d, SQRT_2, 1e-15));
        assert_eq!(m.pairs.len(), 2);
        assert!(close(sorted_ray_distance(&sigma, &tau).unwrap(), SQRT_2, 1e-15));
        assert_eq!(sorted_ray_distance(&ray(&[5.0]), &ray(&[])).unwrap(), 5.0);
        let plane_d = Diagram::empty(plane());
        assert!(sorted_ray_distance(&plane_d, &plane_d).is_err());
    }

    #[test]
    fn through_a_dominates_far_pairs() {
        let sigma = Diagram::new(plane(), vec![Point::xy(0.0, 1.0)]).unwrap();
        let tau = Diagram::new(plane(), vec![Point::xy(50.0, 51.0)]).unwrap();
        let expected = libm::sqrt(0.5 + 0.5);
        assert!(close(brute_force_distance(&sigma, &tau, Exponent::TWO).unwrap(), expected, 1e-15));
        let (d, m) = distance(&sigma, &tau, Exponent::TWO).unwrap();
        assert!(close(d, expected, 1e-15));
        assert_eq!((m.sigma_to_a.len(), m.tau_to_a.len()), (1, 1));
    }

    #[test]
    fn identical_diagrams() {
        let sigma = Diagram::new(plane(), vec![Point::xy(0.0, 1.0), Point::xy(2.0, 5.0)]).unwrap();
        for p in [Exponent::ONE, Exponent::TWO, Exponent::Infinity] {
            assert_eq!(distance(&sigma, &sigma, p).unwrap().0, 0.0);
            assert_eq!(brute_force_distance(&sigma, &sigma, p).unwrap(), 0.0);
        }
        let empty = Diagram::empty(plane());
        let (d, m) = distance(&empty, &empty, Exponent::Infinity).unwrap();
        assert_eq!(d, 0.0);
        assert!(m.is_complete(0, 0));
    }

    #[test]
    fn bottleneck_value() {
        let sigma = Diagram::new(plane(), vec![Point::xy(0.0, 4.0), Point::xy(0.0, 1.0)]).unwrap();
        let tau = Diagram::new(plane(), vec![Point::xy(0.0, 5.0)]).unwrap();
        let (d, m) = distance(&sigma, &tau, Exponent::Infinity).unwrap();
        // (0,4)↔(0,5) costs 1, (0,1)→Δ costs 1/√2
        assert!(close(d, 1.0, 1e-15));
        assert!(m.is_complete(2, 1));
        assert!(close(brute_force_distance(&sigma, &tau, Exponent::Infinity).unwrap(), 1.0, 1e-15));
    }

    #[test]
    fn errors() {
        let sigma = Diagram::new(plane(), vec![Point::xy(0.0, 1.0)]).unwrap();
        let other = ray(&[1.0]);
        assert_eq!(distance(&sigma, &other, Exponent::TWO).unwrap_err(), Error::MismatchedPairs);
        let big = Diagram::repeated(plane(), Point::xy(0.0, 1.0), 6).unwrap();
        assert!(matches!(
            brute_force_distance(&big, &big, Exponent::TWO),
            Err(Error::SizeCapExceeded { total: 12, cap: 10 })
        ));
    }

    #[test]
    fn optimal_matching_enumeration_finds_ties() {
        // two equal points against one: either may be matched
        let sigma = ray(&[2.0, 2.0]);
        let tau = ray(&[2.0]);
        let all = optimal_matchings(&sigma, &tau, Exponent::TWO, 1e-12).unwrap();
        assert_eq!(all.len(), 2);
        assert!(all.iter().all(|m| close(m.cost, 2.0, 1e-15)));
    }

    #[test]
    fn product_over_disjoint_union() {
        let union = Arc::new(MetricPair::disjoint_union(
            MetricPair::ray(),
            MetricPair::euclidean_delta(1),
            Exponent::TWO,
        ));
        let l = |v: f64| Point::Left(Box::new(Point::scalar(v)));
        let r = |x: f64, y: f64| Point::Right(Box::new(Point::xy(x, y)));
        let sigma = Diagram::new(union.clone(), vec![l(3.0), r(0.0, 2.0)]).unwrap();
        let tau = Diagram::new(union.clone(), vec![l(1.0), r(0.0, 4.0), r(1.0, 2.0)]).unwrap();
        for p in [Exponent::ONE, Exponent::TWO, Exponent::Finite(3.0), Exponent::Infinity] {
            let product = product_distance_check(&sigma, &tau, p).unwrap();
            let (direct, m) = distance(&sigma, &tau, p).unwrap();
            let bf = brute_force_distance(&sigma, &tau, p).unwrap();
            assert!(close(product, direct, 1e-12), "{p}: {product} vs {direct}");
            assert!(close(bf, direct, 1e-12));
            assert!(m.is_complete(2, 3));
        }
        // identical left parts reduce to the right-component distance
        let tau2 = Diagram::new(union.clone(), vec![l(3.0), r(0.0, 4.0)]).unwrap();
        let (_, sr) = split_components(&sigma).unwrap();
        let (_, tr) = split_components(&tau2).unwrap();
        let right_only = distance(&sr, &tr, Exponent::TWO).unwrap().0;
        assert!(close(product_distance_check(&sigma, &tau2, Exponent::TWO).unwrap(), right_only, 1e-15));
    }
}

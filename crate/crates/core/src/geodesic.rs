//! Convex-combination geodesics in diagram space.
//!
//! Given an optimal matching, every matched pair moves along its ambient
//! geodesic and every point matched to `A` slides to (or grows from) its
//! nearest point of `A`. Evaluated at `t`, the moving points form a diagram
//! whose distance to the endpoints scales linearly in `t`.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::diagram::Diagram;
use crate::error::{Error, Result};
use crate::math::{abs, close, Exponent};
use crate::matching::{distance, optimal_matchings, Matching};
use crate::metric_pair::{MetricPair, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackKind {
    /// A point of `σ` moving to its partner in `τ`.
    Matched,
    /// A point of `σ` sliding into `A`; it dies at `t = 1`.
    Vanishing,
    /// A point of `τ` growing out of `A`; it is born at `t = 0`.
    Appearing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub start: Point,
    pub end: Point,
    pub kind: TrackKind,
}

#[derive(Debug, Clone)]
pub struct GeodesicPath {
    sigma: Diagram,
    tau: Diagram,
    matching: Matching,
    tracks: Vec<Track>,
}

fn require_geodesic_pair(pair: &MetricPair) -> Result<()> {
    if pair.supports_geodesics() {
        Ok(())
    } else {
        Err(Error::UnsupportedKind {
            op: "geodesic",
            kind: pair.kind_name(),
        })
    }
}

/// Geodesic from `σ` to `τ` built on the solver's optimal matching.
pub fn geodesic(sigma: &Diagram, tau: &Diagram, p: Exponent) -> Result<GeodesicPath> {
    if p.is_infinite() {
        return Err(Error::InvalidExponent("geodesics are built for finite p".into()));
    }
    sigma.ensure_same_pair(tau)?;
    require_geodesic_pair(sigma.pair())?;
    let (_, matching) = distance(sigma, tau, p)?;
    GeodesicPath::from_matching(sigma, tau, matching)
}

/// One geodesic per optimal matching, enumerated under the brute-force cap.
pub fn all_optimal_geodesics(
    sigma: &Diagram,
    tau: &Diagram,
    p: Exponent,
    tol: f64,
) -> Result<Vec<GeodesicPath>> {
    require_geodesic_pair(sigma.pair())?;
    optimal_matchings(sigma, tau, p, tol)?
        .into_iter()
        .map(|m| GeodesicPath::from_matching(sigma, tau, m))
        .collect()
}

impl GeodesicPath {
    /// Convex combination along a given matching. The result is a geodesic
    /// exactly when the matching is optimal.
    pub fn from_matching(sigma: &Diagram, tau: &Diagram, matching: Matching) -> Result<Self> {
        sigma.ensure_same_pair(tau)?;
        let pair = sigma.pair();
        require_geodesic_pair(pair)?;
        if !matching.is_complete(sigma.multiplicity(), tau.multiplicity()) {
            return Err(Error::OutOfRange("matching does not cover both diagrams".into()));
        }
        let (s, t) = (sigma.points(), tau.points());
        let mut tracks = Vec::with_capacity(s.len() + t.len());
        for &(i, j) in &matching.pairs {
            tracks.push(Track {
                start: s[i].clone(),
                end: t[j].clone(),
                kind: TrackKind::Matched,
            });
        }
        for &i in &matching.sigma_to_a {
            tracks.push(Track {
                start: s[i].clone(),
                end: pair.nearest(&s[i]),
                kind: TrackKind::Vanishing,
            });
        }
        for &j in &matching.tau_to_a {
            tracks.push(Track {
                start: pair.nearest(&t[j]),
                end: t[j].clone(),
                kind: TrackKind::Appearing,
            });
        }
        Ok(Self {
            sigma: sigma.clone(),
            tau: tau.clone(),
            matching,
            tracks,
        })
    }

    pub fn sigma(&self) -> &Diagram {
        &self.sigma
    }

    pub fn tau(&self) -> &Diagram {
        &self.tau
    }

    pub fn matching(&self) -> &Matching {
        &self.matching
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn pair(&self) -> &Arc<MetricPair> {
        self.sigma.pair()
    }

    /// Total length `d_p(σ, τ)` of the path.
    pub fn length(&self) -> f64 {
        self.matching.cost
    }

    /// `ξ(t)`: every track evaluated at `t`, dropping points on `A`.
    pub fn evaluate(&self, t: f64) -> Result<Diagram> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::OutOfRange(format!("t = {t} is outside [0, 1]")));
        }
        if t == 0.0 {
            return Ok(self.sigma.clone());
        }
        if t == 1.0 {
            return Ok(self.tau.clone());
        }
        let pair = self.pair();
        let mut points = Vec::with_capacity(self.tracks.len());
        for track in &self.tracks {
            let x = pair.segment(&track.start, &track.end, t)?;
            if pair.d_a(&x) > 0.0 {
                points.push(x);
            }
        }
        Ok(Diagram::from_valid(pair.clone(), points))
    }

    /// `max |d_p(ξ(s), ξ(t)) - |s - t| d_p(σ, τ)|` over all pairs of the grid,
    /// using the matcher as the distance oracle.
    pub fn constant_speed_defect(&self, grid: &[f64]) -> Result<f64> {
        let p = self.matching.p;
        let total = self.length();
        let states: Vec<Diagram> = grid.iter().map(|&t| self.evaluate(t)).collect::<Result<_>>()?;
        let mut worst: f64 = 0.0;
        for a in 0..grid.len() {
            for b in (a + 1)..grid.len() {
                let (d, _) = distance(&states[a], &states[b], p)?;
                worst = worst.max(abs(d - abs(grid[a] - grid[b]) * total));
            }
        }
        Ok(worst)
    }
}

/// Composes optimal matchings `m → σ` and `m → τ` into a matching `σ → τ`.
///
/// A point of `m` matched into `σ` on one side and into `A` on the other
/// sends its `σ`-partner to `A`; points of `σ` or `τ` that the half
/// matchings send to `A` stay matched to `A`.
pub fn compose_through_midpoint(to_sigma: &Matching, to_tau: &Matching, n_mid: usize) -> Matching {
    let mut sigma_of = alloc::vec![None; n_mid];
    let mut tau_of = alloc::vec![None; n_mid];
    for &(k, i) in &to_sigma.pairs {
        sigma_of[k] = Some(i);
    }
    for &(k, j) in &to_tau.pairs {
        tau_of[k] = Some(j);
    }
    let mut out = Matching {
        pairs: Vec::new(),
        sigma_to_a: to_sigma.tau_to_a.clone(),
        tau_to_a: to_tau.tau_to_a.clone(),
        p: to_sigma.p,
        cost: 0.0,
    };
    for k in 0..n_mid {
        match (sigma_of[k], tau_of[k]) {
            (Some(i), Some(j)) => out.pairs.push((i, j)),
            (Some(i), None) => out.sigma_to_a.push(i),
            (None, Some(j)) => out.tau_to_a.push(j),
            (None, None) => {}
        }
    }
    out.pairs.sort_unstable();
    out.sigma_to_a.sort_unstable();
    out.tau_to_a.sort_unstable();
    out
}

#[derive(Debug, Clone)]
pub struct MidpointReport {
    pub midpoint: Diagram,
    pub total: f64,
    pub first_half: f64,
    pub second_half: f64,
    /// Cost of the composition of the two optimal half matchings.
    pub composed_cost: f64,
    pub composed: Matching,
    /// Both halves equal `total / 2` within the tolerance.
    pub halves_ok: bool,
    /// The composed matching is optimal within the tolerance.
    pub composition_ok: bool,
}

impl MidpointReport {
    pub fn passed(&self) -> bool {
        self.halves_ok && self.composition_ok
    }
}

/// Builds `m = ξ(1/2)` and checks `d(σ,m) = d(m,τ) = d(σ,τ)/2` and that the
/// composition of optimal matchings `m → σ`, `m → τ` is an optimal `σ → τ`
/// matching. For `p ≠ 2` the result is reported, not guaranteed.
pub fn midpoint_check(sigma: &Diagram, tau: &Diagram, p: Exponent, tol: f64) -> Result<MidpointReport> {
    let path = geodesic(sigma, tau, p)?;
    let total = path.length();
    let midpoint = path.evaluate(0.5)?;
    let (first_half, to_sigma) = distance(&midpoint, sigma, p)?;
    let (second_half, to_tau) = distance(&midpoint, tau, p)?;
    let mut composed = compose_through_midpoint(&to_sigma, &to_tau, midpoint.multiplicity());
    composed.cost = composed.evaluate(sigma, tau, p);
    let half = 0.5 * total;
    Ok(MidpointReport {
        halves_ok: abs(first_half - half) <= tol && abs(second_half - half) <= tol,
        composition_ok: close(composed.cost, total, tol),
        composed_cost: composed.cost,
        composed,
        midpoint,
        total,
        first_half,
        second_half,
    })
}

/// A piecewise-linear path through ambient vertices, parametrized by arc
/// length.
#[derive(Debug, Clone)]
pub struct PolylinePath {
    pair: Arc<MetricPair>,
    vertices: Vec<Point>,
    cumulative: Vec<f64>,
}

impl PolylinePath {
    pub fn new(pair: Arc<MetricPair>, vertices: Vec<Point>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::EmptySample("polyline needs at least one vertex"));
        }
        require_geodesic_pair(&pair)?;
        let mut cumulative = alloc::vec![0.0];
        for w in vertices.windows(2) {
            let step = pair.dist(&w[0], &w[1])?;
            cumulative.push(cumulative.last().copied().unwrap_or(0.0) + step);
        }
        Ok(Self {
            pair,
            vertices,
            cumulative,
        })
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().expect("non-empty")
    }

    /// Point at arc length `s ∈ [0, length]`.
    pub fn at(&self, s: f64) -> Result<Point> {
        let len = self.length();
        if !(0.0..=len).contains(&s) {
            return Err(Error::OutOfRange(format!("s = {s} is outside [0, {len}]")));
        }
        for k in 1..self.vertices.len() {
            let (a, b) = (self.cumulative[k - 1], self.cumulative[k]);
            if s <= b {
                let t = if b > a { (s - a) / (b - a) } else { 0.0 };
                return self.pair.segment(&self.vertices[k - 1], &self.vertices[k], t);
            }
        }
        Ok(self.vertices.last().expect("non-empty").clone())
    }
}

/// Data demonstrating branching of geodesics in `D_p(R², Δ)` for the sup
/// metric.
#[derive(Debug, Clone)]
pub struct BranchingReport {
    /// `d_∞(x_i, x_j)` for `(1,2), (1,3), (2,3)`.
    pub ambient_distances: [f64; 3],
    /// `d_∞(x_i, Δ)` for `i = 1, 2, 3`.
    pub persistences: [f64; 3],
    /// `d_p` between the singleton diagrams, same order as the ambient ones.
    pub diagram_distances: [f64; 3],
    /// Lengths of the two broken-line geodesics through the branch point.
    pub lengths: [f64; 2],
    /// Largest deviation from unit speed of either path in diagram space.
    pub speed_defect: f64,
    /// The two paths coincide on `[1, 2]`.
    pub agree_after_branch: bool,
    /// The two paths differ on `[0, 1)`.
    pub differ_before_branch: bool,
}

/// Singleton diagrams over `x₁ = (0,5)`, `x₂ = (0,7)`, `x₃ = (2,6)` in the
/// sup-norm plane, with the broken-line geodesics `x₁ → (1,6) → x₃` and
/// `x₂ → (1,6) → x₃`.
pub fn linf_branching_example(p: Exponent) -> Result<BranchingReport> {
    let pair = Arc::new(MetricPair::linf_plane());
    let xs = [Point::xy(0.0, 5.0), Point::xy(0.0, 7.0), Point::xy(2.0, 6.0)];
    let y = Point::xy(1.0, 6.0);
    let singleton = |x: &Point| Diagram::new(pair.clone(), alloc::vec![x.clone()]);
    let sigmas = [singleton(&xs[0])?, singleton(&xs[1])?, singleton(&xs[2])?];
    let idx = [(0, 1), (0, 2), (1, 2)];
    let mut ambient_distances = [0.0; 3];
    let mut diagram_distances = [0.0; 3];
    for (k, &(i, j)) in idx.iter().enumerate() {
        ambient_distances[k] = pair.dist(&xs[i], &xs[j])?;
        diagram_distances[k] = distance(&sigmas[i], &sigmas[j], p)?.0;
    }
    let persistences = [pair.d_a(&xs[0]), pair.d_a(&xs[1]), pair.d_a(&xs[2])];

    let eta13 = PolylinePath::new(pair.clone(), alloc::vec![xs[0].clone(), y.clone(), xs[2].clone()])?;
    let eta23 = PolylinePath::new(pair.clone(), alloc::vec![xs[1].clone(), y, xs[2].clone()])?;

    let grid: Vec<f64> = (0..=20).map(|k| k as f64 * 0.1).collect();
    let mut speed_defect: f64 = 0.0;
    for path in [&eta13, &eta23] {
        let states: Vec<Diagram> = grid
            .iter()
            .map(|&s| path.at(s).and_then(|x| singleton(&x)))
            .collect::<Result<_>>()?;
        for a in 0..grid.len() {
            for b in (a + 1)..grid.len() {
                let (d, _) = distance(&states[a], &states[b], p)?;
                speed_defect = speed_defect.max(abs(d - (grid[b] - grid[a])));
            }
        }
    }
    let mut agree_after_branch = true;
    let mut differ_before_branch = true;
    for &s in &grid {
        let same = eta13.at(s)? == eta23.at(s)?;
        if s >= 1.0 {
            agree_after_branch &= same;
        } else {
            differ_before_branch &= !same;
        }
    }

    Ok(BranchingReport {
        ambient_distances,
        persistences,
        diagram_distances,
        lengths: [eta13.length(), eta23.length()],
        speed_defect,
        agree_after_branch,
        differ_before_branch,
    })
}

//! Metric pairs `(X, A)` and the geometric oracles used everywhere else.
//!
//! Every supported ambient space is proper, so distances to `A` are attained
//! and [`MetricPair::nearest_in_a`] always has an answer. Continuous kinds use
//! straight segments as their geodesics; finite spaces have no geodesic oracle.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::math::{abs, hypot_n, Exponent};

/// A point of an ambient space.
#[derive(Debug, Clone, PartialEq)]
pub enum Point {
    /// Coordinates in a continuous space.
    Coords(Vec<f64>),
    /// An element of a finite metric space.
    Index(usize),
    /// A point of the left component of a disjoint union.
    Left(Box<Point>),
    /// A point of the right component of a disjoint union.
    Right(Box<Point>),
}

impl Point {
    pub fn scalar(x: f64) -> Point {
        Point::Coords(vec![x])
    }

    pub fn xy(x: f64, y: f64) -> Point {
        Point::Coords(vec![x, y])
    }

    pub fn coords(&self) -> Option<&[f64]> {
        match self {
            Point::Coords(c) => Some(c),
            _ => None,
        }
    }

    /// Total order used to put diagrams in canonical form.
    pub fn canonical_cmp(&self, other: &Point) -> Ordering {
        fn rank(p: &Point) -> u8 {
            match p {
                Point::Coords(_) => 0,
                Point::Index(_) => 1,
                Point::Left(_) => 2,
                Point::Right(_) => 3,
            }
        }
        match (self, other) {
            (Point::Coords(a), Point::Coords(b)) => {
                for (x, y) in a.iter().zip(b) {
                    match x.total_cmp(y) {
                        Ordering::Equal => continue,
                        ord => return ord,
                    }
                }
                a.len().cmp(&b.len())
            }
            (Point::Index(a), Point::Index(b)) => a.cmp(b),
            (Point::Left(a), Point::Left(b)) | (Point::Right(a), Point::Right(b)) => {
                a.canonical_cmp(b)
            }
            _ => rank(self).cmp(&rank(other)),
        }
    }
}

/// A finite metric space given by its distance matrix, with a subset `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSpace {
    size: usize,
    metric: bool,
    dist: Vec<f64>,
    subset: Vec<usize>,
    in_subset: Vec<bool>,
}

impl FiniteSpace {
    /// Validates the matrix (square, symmetric, zero diagonal, non-negative,
    /// triangle inequality) and the subset (non-empty, in range).
    pub fn new(matrix: Vec<Vec<f64>>, subset: Vec<usize>) -> Result<Self> {
        Self::from_matrix(matrix, subset, true)
    }

    /// Symmetric, non-negative, zero-diagonal matrix without the triangle
    /// inequality check. Useful for exercising the quotient formula on
    /// dissimilarities; [`FiniteSpace::is_metric`] reports whether the
    /// triangle inequality happens to hold.
    pub fn semimetric(matrix: Vec<Vec<f64>>, subset: Vec<usize>) -> Result<Self> {
        Self::from_matrix(matrix, subset, false)
    }

    fn from_matrix(matrix: Vec<Vec<f64>>, subset: Vec<usize>, require_triangle: bool) -> Result<Self> {
        let size = matrix.len();
        if size == 0 {
            return Err(Error::InvalidPair("empty distance matrix".into()));
        }
        let mut dist = Vec::with_capacity(size * size);
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != size {
                return Err(Error::InvalidPair(format!(
                    "row {i} has {} entries, expected {size}",
                    row.len()
                )));
            }
            dist.extend_from_slice(row);
        }
        Self::from_flat(size, dist, subset, require_triangle)
    }

    fn from_flat(
        size: usize,
        dist: Vec<f64>,
        mut subset: Vec<usize>,
        require_triangle: bool,
    ) -> Result<Self> {
        let scale = dist.iter().fold(1.0f64, |m, &d| m.max(d));
        let tol = 1e-12 * scale;
        for i in 0..size {
            if dist[i * size + i] != 0.0 {
                return Err(Error::InvalidPair(format!("non-zero diagonal at {i}")));
            }
            for j in 0..size {
                let d = dist[i * size + j];
                if !(d >= 0.0) || !d.is_finite() {
                    return Err(Error::InvalidPair(format!("bad distance at ({i},{j}): {d}")));
                }
                if abs(d - dist[j * size + i]) > tol {
                    return Err(Error::InvalidPair(format!("asymmetric at ({i},{j})")));
                }
            }
        }
        let violation = triangle_violation(size, &dist, tol);
        if let (true, Some((i, j, k))) = (require_triangle, violation) {
            return Err(Error::InvalidPair(format!(
                "triangle inequality fails for ({i},{j},{k})"
            )));
        }
        subset.sort_unstable();
        subset.dedup();
        if subset.is_empty() {
            return Err(Error::InvalidPair("subset A is empty".into()));
        }
        if let Some(&bad) = subset.iter().find(|&&a| a >= size) {
            return Err(Error::IndexOutOfRange { index: bad, size });
        }
        let mut in_subset = vec![false; size];
        for &a in &subset {
            in_subset[a] = true;
        }
        Ok(Self {
            size,
            metric: violation.is_none(),
            dist,
            subset,
            in_subset,
        })
    }

    /// Finite subspace of Euclidean space spanned by `points`.
    pub fn from_points(points: &[Vec<f64>], subset: Vec<usize>) -> Result<Self> {
        let size = points.len();
        let mut dist = vec![0.0; size * size];
        for i in 0..size {
            for j in (i + 1)..size {
                if points[i].len() != points[j].len() {
                    return Err(Error::DimensionMismatch {
                        expected: points[i].len(),
                        found: points[j].len(),
                    });
                }
                let diff: Vec<f64> = points[i].iter().zip(&points[j]).map(|(a, b)| a - b).collect();
                let d = hypot_n(&diff);
                dist[i * size + j] = d;
                dist[j * size + i] = d;
            }
        }
        Self::from_flat(size, dist, subset, true)
    }

    /// Finite subspace of the real line.
    pub fn from_grid(values: &[f64], subset: Vec<usize>) -> Result<Self> {
        let pts: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
        Self::from_points(&pts, subset)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn is_metric(&self) -> bool {
        self.metric
    }

    pub fn subset(&self) -> &[usize] {
        &self.subset
    }

    pub fn contains_in_subset(&self, i: usize) -> bool {
        self.in_subset.get(i).copied().unwrap_or(false)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.size + j]
    }

    pub fn to_matrix(&self) -> Vec<Vec<f64>> {
        self.dist.chunks(self.size).map(|r| r.to_vec()).collect()
    }

    fn dist_to_subset(&self, i: usize) -> f64 {
        self.subset.iter().map(|&a| self.get(i, a)).fold(f64::INFINITY, f64::min)
    }

    /// Lowest index among the minimizers.
    fn nearest(&self, i: usize) -> usize {
        let mut best = self.subset[0];
        let mut best_d = self.get(i, best);
        for &a in &self.subset[1..] {
            let d = self.get(i, a);
            if d < best_d {
                best = a;
                best_d = d;
            }
        }
        best
    }
}

fn triangle_violation(size: usize, dist: &[f64], tol: f64) -> Option<(usize, usize, usize)> {
    for i in 0..size {
        for j in 0..size {
            for k in 0..size {
                if dist[i * size + k] > dist[i * size + j] + dist[j * size + k] + tol {
                    return Some((i, j, k));
                }
            }
        }
    }
    None
}

/// The supported ambient spaces and their distinguished subsets.
#[derive(Debug, Clone, PartialEq)]
pub enum PairKind {
    /// `(R^{2n}, Δ_n)` with the Euclidean metric, `Δ_n = {(v, v)}`.
    EuclideanDelta { n: usize },
    /// `{(u, v) ∈ R^{2n} : u_i ≤ v_i}` with `Δ_n`.
    EuclideanHalfplaneDelta { n: usize },
    /// `{(u, v) ∈ R^{2n} : 0 ≤ u_i ≤ v_i}` with `Δ_n ∩ R^{2n}_{≥0}`.
    EuclideanQuadrantDelta { n: usize },
    /// `([0, ∞), {0})`.
    RayOrigin,
    /// `(R², Δ)` with the sup-norm metric.
    LinfPlaneDelta,
    Finite(FiniteSpace),
    /// `(X ⊔ Y, A ⊔ B)`; points of different components are infinitely far
    /// apart. `p` is the exponent of the product decomposition.
    DisjointUnion {
        left: Box<MetricPair>,
        right: Box<MetricPair>,
        p: Exponent,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricPair {
    kind: PairKind,
    name: Option<String>,
}

impl MetricPair {
    pub fn new(kind: PairKind) -> Result<Self> {
        match &kind {
            PairKind::EuclideanDelta { n }
            | PairKind::EuclideanHalfplaneDelta { n }
            | PairKind::EuclideanQuadrantDelta { n }
                if *n == 0 =>
            {
                return Err(Error::InvalidPair("half-dimension n must be positive".into()))
            }
            _ => {}
        }
        Ok(Self { kind, name: None })
    }

    pub fn euclidean_delta(n: usize) -> Self {
        Self::new(PairKind::EuclideanDelta { n }).expect("n > 0")
    }

    pub fn ray() -> Self {
        Self::new(PairKind::RayOrigin).expect("valid")
    }

    pub fn linf_plane() -> Self {
        Self::new(PairKind::LinfPlaneDelta).expect("valid")
    }

    pub fn finite(space: FiniteSpace) -> Self {
        Self::new(PairKind::Finite(space)).expect("validated space")
    }

    pub fn disjoint_union(left: MetricPair, right: MetricPair, p: Exponent) -> Self {
        Self::new(PairKind::DisjointUnion {
            left: Box::new(left),
            right: Box::new(right),
            p,
        })
        .expect("valid")
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn kind(&self) -> &PairKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            PairKind::EuclideanDelta { .. } => "euclidean-delta",
            PairKind::EuclideanHalfplaneDelta { .. } => "euclidean-halfplane-delta",
            PairKind::EuclideanQuadrantDelta { .. } => "euclidean-quadrant-delta",
            PairKind::RayOrigin => "ray-origin",
            PairKind::LinfPlaneDelta => "linf-plane-delta",
            PairKind::Finite(_) => "finite",
            PairKind::DisjointUnion { .. } => "disjoint-union",
        }
    }

    /// Half-dimension `n` for the Euclidean kinds.
    pub fn half_dimension(&self) -> Option<usize> {
        match self.kind {
            PairKind::EuclideanDelta { n }
            | PairKind::EuclideanHalfplaneDelta { n }
            | PairKind::EuclideanQuadrantDelta { n } => Some(n),
            _ => None,
        }
    }

    /// Coordinate dimension for continuous kinds.
    pub fn dimension(&self) -> Option<usize> {
        match self.kind {
            PairKind::RayOrigin => Some(1),
            PairKind::LinfPlaneDelta => Some(2),
            _ => self.half_dimension().map(|n| 2 * n),
        }
    }

    pub fn is_euclidean(&self) -> bool {
        self.half_dimension().is_some()
    }

    pub fn supports_geodesics(&self) -> bool {
        match &self.kind {
            PairKind::Finite(_) => false,
            PairKind::DisjointUnion { left, right, .. } => {
                left.supports_geodesics() && right.supports_geodesics()
            }
            _ => true,
        }
    }

    fn unsupported(&self, op: &'static str) -> Error {
        Error::UnsupportedKind {
            op,
            kind: self.kind_name(),
        }
    }

    /// Checks that `x` belongs to the ambient space.
    pub fn validate_point(&self, x: &Point) -> Result<()> {
        match (&self.kind, x) {
            (PairKind::Finite(space), Point::Index(i)) => {
                if *i < space.size {
                    Ok(())
                } else {
                    Err(Error::IndexOutOfRange {
                        index: *i,
                        size: space.size,
                    })
                }
            }
            (PairKind::DisjointUnion { left, .. }, Point::Left(p)) => left.validate_point(p),
            (PairKind::DisjointUnion { right, .. }, Point::Right(p)) => right.validate_point(p),
            (PairKind::Finite(_) | PairKind::DisjointUnion { .. }, _) => Err(Error::NotInSpace(
                format!("{x:?} is not a point of a {} pair", self.kind_name()),
            )),
            (_, Point::Coords(c)) => {
                let dim = self.dimension().expect("continuous kind");
                if c.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: c.len(),
                    });
                }
                if c.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NotInSpace("non-finite coordinate".into()));
                }
                match self.kind {
                    PairKind::RayOrigin if c[0] < 0.0 => {
                        Err(Error::NotInSpace(format!("{} is negative", c[0])))
                    }
                    PairKind::EuclideanHalfplaneDelta { n } => {
                        if (0..n).all(|k| c[k] <= c[n + k]) {
                            Ok(())
                        } else {
                            Err(Error::NotInSpace("requires u_i <= v_i".into()))
                        }
                    }
                    PairKind::EuclideanQuadrantDelta { n } => {
                        if (0..n).all(|k| 0.0 <= c[k] && c[k] <= c[n + k]) {
                            Ok(())
                        } else {
                            Err(Error::NotInSpace("requires 0 <= u_i <= v_i".into()))
                        }
                    }
                    _ => Ok(()),
                }
            }
            _ => Err(Error::NotInSpace(format!(
                "{x:?} is not a point of a {} pair",
                self.kind_name()
            ))),
        }
    }

    /// Ambient distance. Points of different components of a disjoint union
    /// are at distance `+∞`.
    pub fn dist(&self, x: &Point, y: &Point) -> Result<f64> {
        self.validate_point(x)?;
        self.validate_point(y)?;
        Ok(self.d(x, y))
    }

    /// Distance on validated points.
    pub(crate) fn d(&self, x: &Point, y: &Point) -> f64 {
        match (&self.kind, x, y) {
            (PairKind::Finite(space), Point::Index(i), Point::Index(j)) => space.get(*i, *j),
            (PairKind::DisjointUnion { left, .. }, Point::Left(a), Point::Left(b)) => left.d(a, b),
            (PairKind::DisjointUnion { right, .. }, Point::Right(a), Point::Right(b)) => {
                right.d(a, b)
            }
            (PairKind::DisjointUnion { .. }, _, _) => f64::INFINITY,
            (PairKind::LinfPlaneDelta, Point::Coords(a), Point::Coords(b)) => {
                abs(a[0] - b[0]).max(abs(a[1] - b[1]))
            }
            (_, Point::Coords(a), Point::Coords(b)) => {
                if a.len() == 1 {
                    abs(a[0] - b[0])
                } else {
                    let diff: Vec<f64> = a.iter().zip(b).map(|(s, t)| s - t).collect();
                    hypot_n(&diff)
                }
            }
            _ => unreachable!("points validated against the pair"),
        }
    }

    /// `d(x, A)`, the persistence of `x`.
    pub fn dist_to_a(&self, x: &Point) -> Result<f64> {
        self.validate_point(x)?;
        Ok(self.d_a(x))
    }

    pub(crate) fn d_a(&self, x: &Point) -> f64 {
        match (&self.kind, x) {
            (PairKind::Finite(space), Point::Index(i)) => space.dist_to_subset(*i),
            (PairKind::DisjointUnion { left, .. }, Point::Left(a)) => left.d_a(a),
            (PairKind::DisjointUnion { right, .. }, Point::Right(a)) => right.d_a(a),
            (PairKind::RayOrigin, Point::Coords(c)) => c[0],
            (PairKind::LinfPlaneDelta, Point::Coords(c)) => abs(c[1] - c[0]) / 2.0,
            (_, Point::Coords(c)) => {
                let n = c.len() / 2;
                let gap: Vec<f64> = (0..n).map(|k| c[n + k] - c[k]).collect();
                hypot_n(&gap) / SQRT_2
            }
            _ => unreachable!("points validated against the pair"),
        }
    }

    /// A point of `A` realizing `d(x, A)`. Finite spaces break ties by
    /// lowest index; the continuous kinds have a unique minimizer.
    pub fn nearest_in_a(&self, x: &Point) -> Result<Point> {
        self.validate_point(x)?;
        Ok(self.nearest(x))
    }

    pub(crate) fn nearest(&self, x: &Point) -> Point {
        match (&self.kind, x) {
            (PairKind::Finite(space), Point::Index(i)) => Point::Index(space.nearest(*i)),
            (PairKind::DisjointUnion { left, .. }, Point::Left(a)) => {
                Point::Left(Box::new(left.nearest(a)))
            }
            (PairKind::DisjointUnion { right, .. }, Point::Right(a)) => {
                Point::Right(Box::new(right.nearest(a)))
            }
            (PairKind::RayOrigin, Point::Coords(_)) => Point::scalar(0.0),
            (_, Point::Coords(c)) => {
                let n = c.len() / 2;
                let mut out = vec![0.0; 2 * n];
                for k in 0..n {
                    let m = 0.5 * (c[k] + c[n + k]);
                    out[k] = m;
                    out[n + k] = m;
                }
                Point::Coords(out)
            }
            _ => unreachable!("points validated against the pair"),
        }
    }

    pub fn in_a(&self, x: &Point) -> Result<bool> {
        Ok(self.dist_to_a(x)? == 0.0)
    }

    /// Constant-speed geodesic from `x` to `y` evaluated at `t ∈ [0, 1]`.
    /// Continuous kinds return the straight segment; for the sup-norm plane
    /// this is one representative among many geodesics.
    pub fn geodesic_eval(&self, x: &Point, y: &Point, t: f64) -> Result<Point> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::OutOfRange(format!("t = {t} is outside [0, 1]")));
        }
        self.validate_point(x)?;
        self.validate_point(y)?;
        self.segment(x, y, t)
    }

    pub(crate) fn segment(&self, x: &Point, y: &Point, t: f64) -> Result<Point> {
        match (&self.kind, x, y) {
            (PairKind::Finite(_), _, _) => Err(self.unsupported("geodesic")),
            (PairKind::DisjointUnion { left, .. }, Point::Left(a), Point::Left(b)) => {
                Ok(Point::Left(Box::new(left.segment(a, b, t)?)))
            }
            (PairKind::DisjointUnion { right, .. }, Point::Right(a), Point::Right(b)) => {
                Ok(Point::Right(Box::new(right.segment(a, b, t)?)))
            }
            (PairKind::DisjointUnion { .. }, _, _) => Err(Error::UnsupportedKind {
                op: "geodesic between components",
                kind: "disjoint-union",
            }),
            (_, Point::Coords(a), Point::Coords(b)) => {
                if t == 0.0 {
                    return Ok(x.clone());
                }
                if t == 1.0 {
                    return Ok(y.clone());
                }
                Ok(Point::Coords(
                    a.iter().zip(b).map(|(s, e)| s + t * (e - s)).collect(),
                ))
            }
            _ => unreachable!("points validated against the pair"),
        }
    }

    /// Weighted barycenter of ambient points, available where the weighted
    /// mean minimizes the weighted sum of squared distances (Euclidean kinds
    /// and the ray).
    pub fn barycenter(&self, points: &[&Point], weights: &[f64]) -> Result<Point> {
        match self.kind {
            PairKind::EuclideanDelta { .. }
            | PairKind::EuclideanHalfplaneDelta { .. }
            | PairKind::EuclideanQuadrantDelta { .. }
            | PairKind::RayOrigin => {}
            _ => return Err(self.unsupported("barycenter")),
        }
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::EmptySample("barycenter needs matching points and weights"));
        }
        let dim = self.dimension().expect("continuous kind");
        let total: f64 = weights.iter().sum();
        let mut out = vec![0.0; dim];
        for (p, &w) in points.iter().zip(weights) {
            self.validate_point(p)?;
            let c = p.coords().expect("validated");
            for (o, v) in out.iter_mut().zip(c) {
                *o += w * v;
            }
        }
        for o in &mut out {
            *o /= total;
        }
        Ok(Point::Coords(out))
    }

    /// A finite sample of `A` used to validate relative maps.
    pub fn sample_a(&self) -> Vec<Point> {
        match &self.kind {
            PairKind::Finite(space) => space.subset.iter().map(|&a| Point::Index(a)).collect(),
            PairKind::RayOrigin => vec![Point::scalar(0.0)],
            PairKind::LinfPlaneDelta => [0.0, 1.0, -2.5, 10.0]
                .iter()
                .map(|&v| Point::xy(v, v))
                .collect(),
            PairKind::DisjointUnion { left, right, .. } => left
                .sample_a()
                .into_iter()
                .map(|p| Point::Left(Box::new(p)))
                .chain(right.sample_a().into_iter().map(|p| Point::Right(Box::new(p))))
                .collect(),
            kind => {
                let n = self.half_dimension().expect("euclidean kind");
                let nonneg = matches!(kind, PairKind::EuclideanQuadrantDelta { .. });
                let mut base: Vec<Vec<f64>> = vec![vec![0.0; n], vec![3.5; n]];
                for k in 0..n {
                    let mut e = vec![0.0; n];
                    e[k] = 1.0;
                    base.push(e.clone());
                    if !nonneg {
                        e[k] = -2.0;
                        base.push(e);
                    }
                }
                base.into_iter()
                    .map(|v| {
                        let mut c = v.clone();
                        c.extend_from_slice(&v);
                        Point::Coords(c)
                    })
                    .collect()
            }
        }
    }

    pub fn quotient(&self) -> QuotientSpace {
        QuotientSpace { base: self.clone() }
    }
}

/// A point of the quotient `X/A`: either the collapsed class `[A]` or the
/// class of a point off `A`.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassPoint {
    Base,
    Class(Point),
}

/// The pointed quotient `(X/A, [A])` with
/// `d̄([x],[y]) = min(d(x,y), d(x,A) + d(y,A))` and `d̄([x],[A]) = d(x,A)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientSpace {
    base: MetricPair,
}

impl QuotientSpace {
    pub fn base(&self) -> &MetricPair {
        &self.base
    }

    /// Class of a point; points of `A` collapse to the base point.
    pub fn class_of(&self, x: &Point) -> Result<ClassPoint> {
        if self.base.dist_to_a(x)? == 0.0 {
            Ok(ClassPoint::Base)
        } else {
            Ok(ClassPoint::Class(x.clone()))
        }
    }

    pub fn dist(&self, a: &ClassPoint, b: &ClassPoint) -> Result<f64> {
        match (a, b) {
            (ClassPoint::Base, ClassPoint::Base) => Ok(0.0),
            (ClassPoint::Base, ClassPoint::Class(x)) | (ClassPoint::Class(x), ClassPoint::Base) => {
                self.base.dist_to_a(x)
            }
            (ClassPoint::Class(x), ClassPoint::Class(y)) => {
                let direct = self.base.dist(x, y)?;
                Ok(direct.min(self.base.d_a(x) + self.base.d_a(y)))
            }
        }
    }

    /// Materializes the quotient of a finite pair as a finite pointed pair.
    ///
    /// Off-`A` points keep their relative order and are followed by the base
    /// point; the returned vector maps each original index to its class.
    pub fn to_finite(&self) -> Result<(MetricPair, Vec<usize>)> {
        let PairKind::Finite(space) = &self.base.kind else {
            return Err(self.base.unsupported("materialized quotient"));
        };
        let off: Vec<usize> = (0..space.size).filter(|&i| !space.in_subset[i]).collect();
        let k = off.len();
        let mut class_of = vec![k; space.size];
        for (c, &i) in off.iter().enumerate() {
            class_of[i] = c;
        }
        let mut dist = vec![0.0; (k + 1) * (k + 1)];
        for (ci, &i) in off.iter().enumerate() {
            let di = space.dist_to_subset(i);
            dist[ci * (k + 1) + k] = di;
            dist[k * (k + 1) + ci] = di;
            for (cj, &j) in off.iter().enumerate() {
                if ci != cj {
                    let through = di + space.dist_to_subset(j);
                    dist[ci * (k + 1) + cj] = space.get(i, j).min(through);
                }
            }
        }
        let quotient = FiniteSpace::from_flat(k + 1, dist, vec![k], space.metric)?;
        Ok((MetricPair::finite(quotient), class_of))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::close;

    fn example_finite() -> MetricPair {
        // d(0,1) = 5 > d(0,2) + d(2,1): not a metric, but the quotient repairs it
        let space = FiniteSpace::semimetric(
            vec![vec![0.0, 5.0, 1.0], vec![5.0, 0.0, 2.0], vec![1.0, 2.0, 0.0]],
            vec![2],
        )
        .unwrap();
        MetricPair::finite(space)
    }

    #[test]
    fn distances_on_each_kind() {
        let e = MetricPair::euclidean_delta(1);
        assert_eq!(e.dist(&Point::xy(0.0, 5.0), &Point::xy(0.0, 7.0)).unwrap(), 2.0);
        let l = MetricPair::linf_plane();
        assert_eq!(l.dist(&Point::xy(0.0, 5.0), &Point::xy(2.0, 6.0)).unwrap(), 2.0);
        let f = example_finite();
        assert_eq!(f.dist(&Point::Index(0), &Point::Index(1)).unwrap(), 5.0);
    }

    #[test]
    fn distance_to_subset() {
        let e = MetricPair::euclidean_delta(1);
        assert!(close(e.dist_to_a(&Point::xy(0.0, 2.0)).unwrap(), SQRT_2, 1e-15));
        assert_eq!(MetricPair::ray().dist_to_a(&Point::scalar(7.0)).unwrap(), 7.0);
        // ray embedding image t ↦ (0,…,0,t,…,t)/√n sits at t/√2 from Δ_n
        for n in 1..5 {
            let pair = MetricPair::euclidean_delta(n);
            let t = 3.0;
            let mut c = vec![0.0; 2 * n];
            for k in 0..n {
                c[n + k] = t / libm::sqrt(n as f64);
            }
            let d = pair.dist_to_a(&Point::Coords(c)).unwrap();
            assert!(close(d, t / SQRT_2, 1e-14), "n={n} d={d}");
        }
    }

    #[test]
    fn nearest_points() {
        let e = MetricPair::euclidean_delta(1);
        assert_eq!(e.nearest_in_a(&Point::xy(0.0, 2.0)).unwrap(), Point::xy(1.0, 1.0));
        assert_eq!(
            MetricPair::ray().nearest_in_a(&Point::scalar(3.0)).unwrap(),
            Point::scalar(0.0)
        );
        assert_eq!(example_finite().nearest_in_a(&Point::Index(0)).unwrap(), Point::Index(2));
    }

    #[test]
    fn finite_ties_pick_lowest_index() {
        let space = FiniteSpace::from_grid(&[-1.0, 0.0, 1.0], vec![0, 2]).unwrap();
        let pair = MetricPair::finite(space);
        assert_eq!(pair.nearest_in_a(&Point::Index(1)).unwrap(), Point::Index(0));
    }

    #[test]
    fn geodesic_segments() {
        let e = MetricPair::euclidean_delta(1);
        let m = e.geodesic_eval(&Point::xy(0.0, 2.0), &Point::xy(0.0, 4.0), 0.5).unwrap();
        assert_eq!(m, Point::xy(0.0, 3.0));
        let r = MetricPair::ray();
        let g = r.geodesic_eval(&Point::scalar(0.0), &Point::scalar(6.0), 1.0 / 3.0).unwrap();
        assert!(close(g.coords().unwrap()[0], 2.0, 1e-15));
        let l = MetricPair::linf_plane();
        let m = l.geodesic_eval(&Point::xy(0.0, 5.0), &Point::xy(2.0, 6.0), 0.5).unwrap();
        assert_eq!(m, Point::xy(1.0, 5.5));
        assert!(matches!(
            example_finite().geodesic_eval(&Point::Index(0), &Point::Index(1), 0.5),
            Err(Error::UnsupportedKind { .. })
        ));
        assert!(e.geodesic_eval(&Point::xy(0.0, 2.0), &Point::xy(0.0, 4.0), 1.5).is_err());
    }

    #[test]
    fn validation_errors() {
        let e = MetricPair::euclidean_delta(2);
        assert!(matches!(
            e.dist(&Point::xy(0.0, 1.0), &Point::xy(0.0, 1.0)),
            Err(Error::DimensionMismatch { expected: 4, found: 2 })
        ));
        assert!(matches!(
            example_finite().dist(&Point::Index(0), &Point::Index(3)),
            Err(Error::IndexOutOfRange { index: 3, size: 3 })
        ));
        assert!(MetricPair::ray().dist_to_a(&Point::scalar(-1.0)).is_err());
        let half = MetricPair::new(PairKind::EuclideanHalfplaneDelta { n: 1 }).unwrap();
        assert!(half.validate_point(&Point::xy(2.0, 1.0)).is_err());
        let quad = MetricPair::new(PairKind::EuclideanQuadrantDelta { n: 1 }).unwrap();
        assert!(quad.validate_point(&Point::xy(-1.0, 1.0)).is_err());
        assert!(quad.validate_point(&Point::xy(1.0, 3.0)).is_ok());
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(FiniteSpace::new(vec![vec![0.0, 1.0], vec![2.0, 0.0]], vec![0]).is_err());
        assert!(FiniteSpace::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![]).is_err());
        assert!(FiniteSpace::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![5]).is_err());
        let broken = vec![
            vec![0.0, 1.0, 5.0],
            vec![1.0, 0.0, 1.0],
            vec![5.0, 1.0, 0.0],
        ];
        assert!(FiniteSpace::new(broken, vec![0]).is_err());
    }

    #[test]
    fn quotient_metric() {
        let pair = example_finite();
        let q = pair.quotient();
        let d = q
            .dist(&q.class_of(&Point::Index(0)).unwrap(), &q.class_of(&Point::Index(1)).unwrap())
            .unwrap();
        assert_eq!(d, 3.0);
        for i in 0..3 {
            let c = q.class_of(&Point::Index(i)).unwrap();
            assert_eq!(
                q.dist(&c, &ClassPoint::Base).unwrap(),
                pair.dist_to_a(&Point::Index(i)).unwrap()
            );
        }
        let (qp, class_of) = q.to_finite().unwrap();
        assert_eq!(class_of, vec![0, 1, 2]);
        let PairKind::Finite(space) = qp.kind() else { panic!() };
        assert_eq!(space.get(0, 1), 3.0);
        assert_eq!(space.get(0, 2), 1.0);
        assert_eq!(space.subset(), &[2]);
        assert!(space.is_metric());
    }

    #[test]
    fn quotient_restricts_when_through_a_never_shorter() {
        // d(a,b) <= d(a,A) + d(b,A) for every pair, checked exhaustively
        let space = FiniteSpace::from_grid(&[0.0, 1.0, 2.0, 3.0], vec![0]).unwrap();
        let pair = MetricPair::finite(space.clone());
        let mut shorter = false;
        for i in 0..4 {
            for j in 0..4 {
                let (a, b) = (Point::Index(i), Point::Index(j));
                if pair.d(&a, &b) > pair.d_a(&a) + pair.d_a(&b) {
                    shorter = true;
                }
            }
        }
        assert!(!shorter);
        let (qp, class_of) = pair.quotient().to_finite().unwrap();
        let PairKind::Finite(q) = qp.kind() else { panic!() };
        for i in 1..4 {
            for j in 1..4 {
                assert_eq!(q.get(class_of[i], class_of[j]), space.get(i, j));
            }
        }
    }

    #[test]
    fn disjoint_union_components_are_infinitely_far() {
        let pair = MetricPair::disjoint_union(MetricPair::ray(), MetricPair::euclidean_delta(1), Exponent::TWO);
        let a = Point::Left(Box::new(Point::scalar(2.0)));
        let b = Point::Right(Box::new(Point::xy(0.0, 2.0)));
        assert_eq!(pair.dist(&a, &b).unwrap(), f64::INFINITY);
        assert_eq!(pair.dist_to_a(&a).unwrap(), 2.0);
        assert!(pair.validate_point(&Point::scalar(1.0)).is_err());
    }
}

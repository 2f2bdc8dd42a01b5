//! Random instances for property sweeps. Every generator draws from a
//! caller-supplied `Rng`, so sweeps are reproducible from a seed.

use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::Rng;

use crate::diagram::Diagram;
use crate::error::Result;
use crate::matching::join_components;
use crate::metric_pair::{FiniteSpace, MetricPair, PairKind, Point};

/// Shape of random diagrams.
#[derive(Debug, Clone, Copy)]
pub struct DiagramSampler {
    /// Multiplicity is drawn uniformly from `0..=max_points`.
    pub max_points: usize,
    /// Coordinates and gaps lie in `[0, scale]`.
    pub scale: f64,
    /// Rounds coordinates to multiples of the given step, producing ties.
    pub lattice: Option<f64>,
    /// Draw at least one point.
    pub non_empty: bool,
}

impl DiagramSampler {
    pub fn new(max_points: usize, scale: f64) -> Self {
        Self {
            max_points,
            scale,
            lattice: None,
            non_empty: false,
        }
    }

    pub fn with_lattice(mut self, step: f64) -> Self {
        self.lattice = Some(step);
        self
    }

    pub fn non_empty(mut self) -> Self {
        self.non_empty = true;
        self
    }

    fn coord<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let x = rng.gen::<f64>() * self.scale;
        match self.lattice {
            Some(step) => libm::round(x / step) * step,
            None => x,
        }
    }

    /// A strictly positive gap.
    fn gap<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.lattice {
            Some(step) => {
                let k = libm::ceil(self.scale / step).max(1.0) as u64;
                rng.gen_range(1..=k) as f64 * step
            }
            None => loop {
                let g = rng.gen::<f64>() * self.scale;
                if g > 0.0 {
                    break g;
                }
            },
        }
    }

    fn count<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let lo = usize::from(self.non_empty && self.max_points > 0);
        rng.gen_range(lo..=self.max_points)
    }

    /// One off-`A` point of the pair.
    pub fn point<R: Rng + ?Sized>(&self, rng: &mut R, pair: &MetricPair) -> Option<Point> {
        match pair.kind() {
            PairKind::RayOrigin => Some(Point::scalar(self.gap(rng))),
            PairKind::LinfPlaneDelta => {
                let b = self.coord(rng);
                Some(Point::xy(b, b + self.gap(rng)))
            }
            PairKind::Finite(space) => {
                let off: Vec<usize> = (0..space.size()).filter(|&i| !space.contains_in_subset(i)).collect();
                if off.is_empty() {
                    None
                } else {
                    Some(Point::Index(off[rng.gen_range(0..off.len())]))
                }
            }
            PairKind::DisjointUnion { left, right, .. } => {
                if rng.gen::<bool>() {
                    self.point(rng, left).map(|p| Point::Left(p.into()))
                } else {
                    self.point(rng, right).map(|p| Point::Right(p.into()))
                }
            }
            _ => {
                // births and deaths with u_i ≤ v_i, at least one gap positive
                let n = pair.half_dimension().expect("euclidean kind");
                let mut c = alloc::vec![0.0; 2 * n];
                let lift = rng.gen_range(0..n);
                for i in 0..n {
                    c[i] = self.coord(rng);
                    let g = if i == lift { self.gap(rng) } else { self.coord(rng) };
                    c[n + i] = c[i] + g;
                }
                Some(Point::Coords(c))
            }
        }
    }

    pub fn diagram<R: Rng + ?Sized>(&self, rng: &mut R, pair: &Arc<MetricPair>) -> Result<Diagram> {
        if let PairKind::DisjointUnion { left, right, .. } = pair.kind() {
            let split = self.count(rng);
            let k = rng.gen_range(0..=split);
            let sub = |m| DiagramSampler {
                max_points: m,
                non_empty: false,
                ..*self
            };
            let l = sub(k).exact(rng, &Arc::new((**left).clone()), k)?;
            let r = sub(split - k).exact(rng, &Arc::new((**right).clone()), split - k)?;
            return join_components(pair.clone(), &l, &r);
        }
        let n = self.count(rng);
        self.exact(rng, pair, n)
    }

    /// A diagram with exactly `n` draws (fewer if the pair has no off-`A` points).
    pub fn exact<R: Rng + ?Sized>(&self, rng: &mut R, pair: &Arc<MetricPair>, n: usize) -> Result<Diagram> {
        let points: Vec<Point> = (0..n).filter_map(|_| self.point(rng, pair)).collect();
        Diagram::new(pair.clone(), points)
    }
}

/// A random finite Euclidean point cloud with a distinguished subset of
/// `subset_size` points, returned with its coordinates.
pub fn random_finite_pair<R: Rng + ?Sized>(
    rng: &mut R,
    size: usize,
    subset_size: usize,
    dim: usize,
) -> Result<(MetricPair, Vec<Vec<f64>>)> {
    let points: Vec<Vec<f64>> = (0..size)
        .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let subset = rand::seq::index::sample(rng, size, subset_size.clamp(1, size)).into_vec();
    let space = FiniteSpace::from_points(&points, subset)?;
    Ok((MetricPair::finite(space), points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sampled_points_are_off_a_and_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let grid = FiniteSpace::from_grid(&[0.0, 1.0, 2.0], alloc::vec![0]).unwrap();
        let pairs = [
            MetricPair::euclidean_delta(1),
            MetricPair::euclidean_delta(3),
            MetricPair::new(PairKind::EuclideanQuadrantDelta { n: 2 }).unwrap(),
            MetricPair::ray(),
            MetricPair::linf_plane(),
            MetricPair::finite(grid),
            MetricPair::disjoint_union(MetricPair::ray(), MetricPair::euclidean_delta(1), crate::Exponent::TWO),
        ];
        for pair in pairs {
            let pair = Arc::new(pair);
            for sampler in [DiagramSampler::new(4, 5.0), DiagramSampler::new(4, 5.0).with_lattice(1.0)] {
                for _ in 0..50 {
                    let d = sampler.diagram(&mut rng, &pair).unwrap();
                    assert!(d.multiplicity() <= 4);
                    for x in d.points() {
                        pair.validate_point(x).unwrap();
                        assert!(pair.dist_to_a(x).unwrap() > 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn non_empty_and_finite_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pair = Arc::new(MetricPair::ray());
        let s = DiagramSampler::new(3, 1.0).non_empty();
        for _ in 0..100 {
            assert!(!s.diagram(&mut rng, &pair).unwrap().is_empty());
        }
        let (fp, pts) = random_finite_pair(&mut rng, 8, 2, 2).unwrap();
        assert_eq!(pts.len(), 8);
        let PairKind::Finite(space) = fp.kind() else { panic!() };
        assert_eq!(space.subset().len(), 2);
        assert!(space.is_metric());
    }
}

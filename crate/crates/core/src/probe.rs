//! Desk-scale probe of the ingredients behind the dimension results for
//! `D_2([0,∞), {0})`: the sorted closed form and the ray embeddings into
//! `(R^{2n}, Δ_n)`.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::SQRT_2;

use rand::Rng;

use crate::diagram::{Diagram, RelativeMap};
use crate::error::{Error, Result};
use crate::math::{abs, Exponent};
use crate::matching::{distance, sorted_ray_distance};
use crate::metric_pair::MetricPair;
use crate::random::DiagramSampler;

/// Largest number of points per diagram accepted by the probe.
pub const PROBE_CAP: usize = 12;

/// Half-dimensions of the embeddings exercised by every trial.
pub const EMBED_DIMS: [usize; 3] = [1, 2, 3];

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeTrial {
    /// `|sorted − matcher|` relative to `max(1, matcher)`.
    pub sorted_gap: f64,
    /// `d_2(f_*σ, f_*σ') / d_2(σ, σ')` per embedding; `None` when `σ = σ'`.
    pub ratios: Vec<Option<f64>>,
}

/// Compares the sorted formula with the matcher and measures the embedding
/// ratios on the given pair of ray diagrams.
pub fn probe_pair(sigma: &Diagram, tau: &Diagram) -> Result<ProbeTrial> {
    let p = Exponent::TWO;
    let (d, _) = distance(sigma, tau, p)?;
    let sorted = sorted_ray_distance(sigma, tau)?;
    let mut ratios = Vec::with_capacity(EMBED_DIMS.len());
    for n in EMBED_DIMS {
        if d == 0.0 {
            ratios.push(None);
            continue;
        }
        let f = RelativeMap::ray_embedding(n)?;
        let (e, _) = distance(&f.pushforward(sigma)?, &f.pushforward(tau)?, p)?;
        ratios.push(Some(e / d));
    }
    Ok(ProbeTrial {
        sorted_gap: abs(sorted - d) / d.max(1.0),
        ratios,
    })
}

pub fn probe_trial<R: Rng + ?Sized>(rng: &mut R, n_max: usize) -> Result<ProbeTrial> {
    if n_max > PROBE_CAP {
        return Err(Error::SizeCapExceeded {
            total: n_max,
            cap: PROBE_CAP,
        });
    }
    let ray = Arc::new(MetricPair::ray());
    let sampler = DiagramSampler::new(n_max, 10.0);
    let a = sampler.diagram(rng, &ray)?;
    let b = sampler.diagram(rng, &ray)?;
    probe_pair(&a, &b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub n_max: usize,
    pub trials: usize,
    pub max_sorted_gap: f64,
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// Ratios skipped because both diagrams coincide.
    pub degenerate: usize,
    pub tol: f64,
}

impl ProbeReport {
    pub fn new(n_max: usize, tol: f64) -> Self {
        Self {
            n_max,
            trials: 0,
            max_sorted_gap: 0.0,
            ratio_min: f64::INFINITY,
            ratio_max: f64::NEG_INFINITY,
            degenerate: 0,
            tol,
        }
    }

    pub fn record(&mut self, trial: &ProbeTrial) {
        self.trials += 1;
        self.max_sorted_gap = self.max_sorted_gap.max(trial.sorted_gap);
        for r in &trial.ratios {
            match r {
                Some(r) => {
                    self.ratio_min = self.ratio_min.min(*r);
                    self.ratio_max = self.ratio_max.max(*r);
                }
                None => self.degenerate += 1,
            }
        }
    }

    /// Combines reports of disjoint trial sets.
    pub fn merge(&mut self, other: &ProbeReport) {
        self.trials += other.trials;
        self.max_sorted_gap = self.max_sorted_gap.max(other.max_sorted_gap);
        self.ratio_min = self.ratio_min.min(other.ratio_min);
        self.ratio_max = self.ratio_max.max(other.ratio_max);
        self.degenerate += other.degenerate;
    }

    pub fn sorted_ok(&self) -> bool {
        self.max_sorted_gap <= self.tol
    }

    /// All observed ratios lie in `[1/√2 − tol, √2 + tol]`.
    pub fn ratios_ok(&self) -> bool {
        let lo = 1.0 / SQRT_2 - self.tol;
        let hi = SQRT_2 + self.tol;
        (self.ratio_min > self.ratio_max) || (self.ratio_min >= lo && self.ratio_max <= hi)
    }

    pub fn passed(&self) -> bool {
        self.sorted_ok() && self.ratios_ok()
    }
}

pub fn probe_dimension<R: Rng + ?Sized>(rng: &mut R, n_max: usize, trials: usize, tol: f64) -> Result<ProbeReport> {
    let mut report = ProbeReport::new(n_max, tol);
    for _ in 0..trials {
        report.record(&probe_trial(rng, n_max)?);
    }
    Ok(report)
}

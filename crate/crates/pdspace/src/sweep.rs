//! Seeded, parallel trial sweeps.
//!
//! Trial `k` of a sweep with seed `s` draws from ChaCha8 seeded with `s`
//! on stream `k`, so a report does not depend on the worker count.

use std::num::NonZeroUsize;
use std::sync::Arc;
use std::thread;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pdspace_core::curvature::{comparison_angle_at_empty, quadrilateral_check};
use pdspace_core::gh::{distortion_trial, DistortionReport, PairApproximation};
use pdspace_core::probe::{probe_trial, ProbeReport};
use pdspace_core::random::DiagramSampler;
use pdspace_core::{Exponent, MetricPair, Result};

pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

pub fn default_workers() -> usize {
    thread::available_parallelism().map_or(1, NonZeroUsize::get)
}

/// Runs `f(k, rng_k)` for `k in 0..trials` on up to `workers` threads and
/// returns the results in trial order.
pub fn run_trials<T, F>(trials: usize, workers: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> T + Sync,
{
    let workers = workers.clamp(1, trials.max(1));
    if workers == 1 {
        return (0..trials).map(|k| f(k, &mut trial_rng(seed, k))).collect();
    }
    let mut slots: Vec<Option<T>> = (0..trials).map(|_| None).collect();
    thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let f = &f;
                s.spawn(move || {
                    (w..trials)
                        .step_by(workers)
                        .map(|k| (k, f(k, &mut trial_rng(seed, k))))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (k, t) in h.join().expect("sweep worker panicked") {
                slots[k] = Some(t);
            }
        }
    });
    slots.into_iter().map(|t| t.expect("every trial ran")).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureSummary {
    pub trials: usize,
    pub min_slack: f64,
    pub failures: usize,
    /// Trial index of the smallest slack.
    pub worst_trial: Option<usize>,
    /// Largest comparison angle at the empty diagram over non-empty pairs.
    pub max_angle: f64,
    pub tol: f64,
}

impl CurvatureSummary {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Quadrilateral inequality on random triples in `(R^{2n}, Δ_n)`, plus the
/// comparison angle at the empty diagram for the first two diagrams when
/// both are non-empty.
pub fn curvature_sweep(
    n: usize,
    max_points: usize,
    trials: usize,
    seed: u64,
    workers: usize,
    tol: f64,
) -> Result<CurvatureSummary> {
    let pair = Arc::new(MetricPair::new(pdspace_core::PairKind::EuclideanDelta { n })?);
    let sampler = DiagramSampler::new(max_points, 10.0);
    let rows = run_trials(trials, workers, seed, |_, rng| -> Result<(f64, bool, Option<f64>)> {
        let s1 = sampler.diagram(rng, &pair)?;
        let s2 = sampler.diagram(rng, &pair)?;
        let s3 = sampler.diagram(rng, &pair)?;
        let r = quadrilateral_check(&s1, &s2, &s3, tol)?;
        let angle = if s1.is_empty() || s2.is_empty() {
            None
        } else {
            Some(comparison_angle_at_empty(&s1, &s2)?)
        };
        Ok((r.slack, r.failed(), angle))
    });
    let mut out = CurvatureSummary {
        trials,
        min_slack: f64::INFINITY,
        failures: 0,
        worst_trial: None,
        max_angle: 0.0,
        tol,
    };
    for (k, row) in rows.into_iter().enumerate() {
        let (slack, failed, angle) = row?;
        if slack < out.min_slack {
            out.min_slack = slack;
            out.worst_trial = Some(k);
        }
        out.failures += failed as usize;
        if let Some(a) = angle {
            out.max_angle = out.max_angle.max(a);
        }
    }
    Ok(out)
}

pub fn probe_sweep(n_max: usize, trials: usize, seed: u64, workers: usize, tol: f64) -> Result<ProbeReport> {
    let rows = run_trials(trials, workers, seed, |_, rng| probe_trial(rng, n_max));
    let mut report = ProbeReport::new(n_max, tol);
    for row in rows {
        report.record(&row?);
    }
    Ok(report)
}

pub fn distortion_sweep(
    apx: &PairApproximation,
    p: Exponent,
    trials: usize,
    max_points: usize,
    seed: u64,
    workers: usize,
) -> Result<DistortionReport> {
    let rows = run_trials(trials, workers, seed, |_, rng| distortion_trial(apx, p, rng, max_points));
    let mut sup: f64 = 0.0;
    for row in rows {
        sup = sup.max(row?);
    }
    Ok(DistortionReport::from_sup(apx, p, trials, sup))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn worker_count_does_not_change_results() {
        let draw = |_: usize, rng: &mut ChaCha8Rng| rng.gen::<u64>();
        let one = run_trials(37, 1, 9, draw);
        let many = run_trials(37, 5, 9, draw);
        assert_eq!(one, many);
        assert_ne!(one[0], one[1]);
        assert!(run_trials(0, 4, 9, draw).is_empty());
    }

    #[test]
    fn curvature_summary_is_reproducible() {
        let a = curvature_sweep(1, 3, 40, 7, 1, 1e-9).unwrap();
        let b = curvature_sweep(1, 3, 40, 7, 3, 1e-9).unwrap();
        assert_eq!(a, b);
        assert!(a.passed());
        assert!(a.max_angle <= std::f64::consts::FRAC_PI_2 + 1e-9);
    }
}

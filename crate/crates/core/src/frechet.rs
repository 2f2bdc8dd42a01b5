//! Fréchet functional, variance bounds and means of finitely supported
//! measures on `D_2`.
//!
//! The mean is computed by alternating optimal matchings with ambient
//! barycenter updates. This is a local descent method: the result is a
//! fixed point of the scheme, not a certified global minimizer.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::diagram::Diagram;
use crate::error::{Error, Result};
use crate::math::{Exponent, NeumaierSum};
use crate::matching::distance;
use crate::metric_pair::{MetricPair, PairKind, Point};

/// Finitely many diagrams with positive weights summing to one.
#[derive(Debug, Clone)]
pub struct EmpiricalMeasure {
    atoms: Vec<(Diagram, f64)>,
}

impl EmpiricalMeasure {
    /// Normalizes the weights; they must be positive and finite.
    pub fn new(atoms: Vec<(Diagram, f64)>) -> Result<Self> {
        let Some((first, _)) = atoms.first() else {
            return Err(Error::EmptySample("measure needs at least one atom"));
        };
        let mut total = 0.0;
        for (d, w) in &atoms {
            first.ensure_same_pair(d)?;
            if !(w.is_finite() && *w > 0.0) {
                return Err(Error::OutOfRange(format!("atom weight {w} is not positive")));
            }
            total += w;
        }
        let atoms = atoms.into_iter().map(|(d, w)| (d, w / total)).collect();
        Ok(Self { atoms })
    }

    /// Equal weights.
    pub fn uniform(diagrams: Vec<Diagram>) -> Result<Self> {
        Self::new(diagrams.into_iter().map(|d| (d, 1.0)).collect())
    }

    pub fn atoms(&self) -> &[(Diagram, f64)] {
        &self.atoms
    }

    pub fn pair(&self) -> &Arc<MetricPair> {
        self.atoms[0].0.pair()
    }
}

/// `F_μ(σ) = Σ w_i d_p(σ, τ_i)²`, for finite `p`.
pub fn frechet_functional(mu: &EmpiricalMeasure, sigma: &Diagram, p: Exponent) -> Result<f64> {
    if p.is_infinite() {
        return Err(Error::InvalidExponent("the functional is evaluated for finite p".into()));
    }
    let mut acc = NeumaierSum::new();
    for (tau, w) in mu.atoms() {
        let (d, _) = distance(sigma, tau, p)?;
        acc.add(w * d * d);
    }
    Ok(acc.total())
}

/// Starting point of the descent.
#[derive(Debug, Clone)]
pub enum Init {
    /// The atom with most points, lowest index on ties.
    Largest,
    /// The atom with smallest functional value.
    Medoid,
    Atom(usize),
    Diagram(Diagram),
    /// Runs from every atom and keeps the lowest final value.
    MultiStart,
}

#[derive(Debug, Clone)]
pub struct MeanResult {
    pub candidate: Diagram,
    pub value: f64,
    /// Functional value at the start and after every accepted update.
    pub trace: Vec<f64>,
    pub iterations: usize,
    /// The last update decreased the functional by less than the tolerance.
    pub converged: bool,
    /// Index of the starting atom, when the start was an atom.
    pub start: Option<usize>,
}

fn require_barycenters(pair: &MetricPair) -> Result<()> {
    match pair.kind() {
        PairKind::EuclideanDelta { .. }
        | PairKind::EuclideanHalfplaneDelta { .. }
        | PairKind::EuclideanQuadrantDelta { .. }
        | PairKind::RayOrigin => Ok(()),
        _ => Err(Error::UnsupportedKind {
            op: "frechet mean",
            kind: pair.kind_name(),
        }),
    }
}

/// One matching/barycenter update.
fn update(mu: &EmpiricalMeasure, current: &Diagram) -> Result<Diagram> {
    let pair = current.pair();
    let k = current.multiplicity();
    let mut targets: Vec<Vec<(Point, f64)>> = (0..k).map(|_| Vec::with_capacity(mu.atoms.len())).collect();
    let mut off_a = alloc::vec![false; k];
    for (tau, w) in mu.atoms() {
        let (_, m) = distance(current, tau, Exponent::TWO)?;
        for &(i, j) in &m.pairs {
            targets[i].push((tau.points()[j].clone(), *w));
            off_a[i] = true;
        }
        for &i in &m.sigma_to_a {
            targets[i].push((pair.nearest(&current.points()[i]), *w));
        }
    }
    let mut next = Vec::with_capacity(k);
    for (i, t) in targets.iter().enumerate() {
        // matched to A by every atom: the update is the projection
        if !off_a[i] {
            continue;
        }
        let pts: Vec<&Point> = t.iter().map(|(x, _)| x).collect();
        let ws: Vec<f64> = t.iter().map(|(_, w)| *w).collect();
        let x = pair.barycenter(&pts, &ws)?;
        if pair.d_a(&x) > 0.0 {
            next.push(x);
        }
    }
    Ok(Diagram::from_valid(pair.clone(), next))
}

/// Alternating descent from `init`. Stops when an update lowers the
/// functional by less than `tol`, or after `max_iters` updates. Updates that
/// would raise the functional through rounding are rejected, so the trace
/// is non-increasing.
pub fn frechet_mean(mu: &EmpiricalMeasure, init: &Diagram, max_iters: usize, tol: f64) -> Result<MeanResult> {
    require_barycenters(mu.pair())?;
    mu.atoms[0].0.ensure_same_pair(init)?;
    let mut current = init.clone();
    let mut value = frechet_functional(mu, &current, Exponent::TWO)?;
    let mut trace = alloc::vec![value];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        let next = update(mu, &current)?;
        iterations += 1;
        let next_value = frechet_functional(mu, &next, Exponent::TWO)?;
        if next_value > value {
            converged = true;
            break;
        }
        let decrease = value - next_value;
        current = next;
        value = next_value;
        trace.push(value);
        if decrease < tol {
            converged = true;
            break;
        }
    }
    Ok(MeanResult {
        candidate: current,
        value,
        trace,
        iterations,
        converged,
        start: None,
    })
}

/// Runs [`frechet_mean`] from the chosen starting point.
pub fn frechet_mean_with(mu: &EmpiricalMeasure, init: Init, max_iters: usize, tol: f64) -> Result<MeanResult> {
    let from_atom = |i: usize| -> Result<MeanResult> {
        let mut r = frechet_mean(mu, &mu.atoms[i].0, max_iters, tol)?;
        r.start = Some(i);
        Ok(r)
    };
    match init {
        Init::Diagram(d) => frechet_mean(mu, &d, max_iters, tol),
        Init::Atom(i) => {
            if i >= mu.atoms.len() {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    size: mu.atoms.len(),
                });
            }
            from_atom(i)
        }
        Init::Largest => {
            let mut best = 0;
            for (i, (d, _)) in mu.atoms.iter().enumerate() {
                if d.multiplicity() > mu.atoms[best].0.multiplicity() {
                    best = i;
                }
            }
            from_atom(best)
        }
        Init::Medoid => {
            let mut best = (0, f64::INFINITY);
            for (i, (d, _)) in mu.atoms.iter().enumerate() {
                let v = frechet_functional(mu, d, Exponent::TWO)?;
                if v < best.1 {
                    best = (i, v);
                }
            }
            from_atom(best.0)
        }
        Init::MultiStart => {
            let mut best: Option<MeanResult> = None;
            for i in 0..mu.atoms.len() {
                let r = from_atom(i)?;
                if best.as_ref().is_none_or(|b| r.value < b.value) {
                    best = Some(r);
                }
            }
            Ok(best.expect("at least one atom"))
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VarianceBound {
    /// `min(min_i F_μ(τ_i), F_μ(candidate))`, an upper bound on `Var(μ)`.
    pub bound: f64,
    pub best_atom: usize,
    pub best_atom_value: f64,
    pub candidate_value: Option<f64>,
}

/// Upper bound on the Fréchet variance `inf F_μ` from the atoms and an
/// optional mean candidate.
pub fn variance_upper_bound(mu: &EmpiricalMeasure, candidate: Option<&Diagram>) -> Result<VarianceBound> {
    let mut best = (0, f64::INFINITY);
    for (i, (d, _)) in mu.atoms.iter().enumerate() {
        let v = frechet_functional(mu, d, Exponent::TWO)?;
        if v < best.1 {
            best = (i, v);
        }
    }
    let candidate_value = candidate.map(|c| frechet_functional(mu, c, Exponent::TWO)).transpose()?;
    Ok(VarianceBound {
        bound: candidate_value.map_or(best.1, |c| c.min(best.1)),
        best_atom: best.0,
        best_atom_value: best.1,
        candidate_value,
    })
}

//! Categorical stability-index estimation: attracted fractions measured on a
//! shrinking ladder of ball radii around a point of the invariant set, with a
//! log-log slope fit where the fractions are informative.

use super::basin::{build_tube, CycleId, TubeParams};
use super::classify::classify_trajectory;
use crate::error::ExperimentError;
use crate::integrator::{integrate, IntegratorConfig, Termination};
use crate::model::{CoefficientSet, StateVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// What the sampled trajectories are tested for attraction to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum IndexTarget {
    /// Attraction to one of the subcycles, via loop classification.
    Cycle(CycleId),
    /// Attraction to an equilibrium; used as a degenerate control case where
    /// the local basin has full measure.
    Equilibrium(StateVector),
}

/// Qualitative verdict for the local index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IndexVerdict {
    /// Fractions reach one at the smallest radii: locally full measure.
    IndexPlusInfinityLike,
    /// Fractions vanish at the smallest radii: locally negligible measure.
    IndexMinusInfinityLike,
    /// A stable log-log slope: finite index.
    FiniteIndexLike,
    Inconclusive,
}

/// Per-level attracted fractions and the fitted slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEstimate {
    pub base_point: StateVector,
    pub ladder: Vec<f64>,
    pub fractions: Vec<f64>,
    pub samples_per_level: u64,
    pub seed: u64,
    pub slope: Option<f64>,
    pub verdict: IndexVerdict,
}

/// Ten radii descending geometrically from 1e-2 by factors of two.
pub fn default_ladder() -> Vec<f64> {
    (0..10).map(|k| 1e-2 * 0.5_f64.powi(k)).collect()
}

fn sample_ball(rng: &mut impl Rng, center: &StateVector, eps: f64) -> StateVector {
    let dir = StateVector::new(
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    );
    let n = dir.norm();
    let dir = if n > 0.0 {
        dir * (1.0 / n)
    } else {
        StateVector::new(1.0, 0.0, 0.0, 0.0)
    };
    let u: f64 = rng.gen();
    *center + dir * (eps * u.powf(0.25))
}

fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

/// Measure attracted fractions in shrinking balls around `point` and assign a
/// categorical verdict.
///
/// For a cycle target the point must lie on one of the cycle's verified
/// connections.
pub fn stability_index_estimate(
    coeffs: &CoefficientSet,
    target: IndexTarget,
    point: &StateVector,
    ladder: &[f64],
    samples_per_level: u64,
    seed: u64,
    params: &TubeParams,
    cfg: &IntegratorConfig,
) -> Result<IndexEstimate, ExperimentError> {
    if ladder.is_empty() {
        return Err(ExperimentError::PreconditionViolated(
            "the radius ladder must not be empty".into(),
        ));
    }
    if ladder.windows(2).any(|w| w[1] >= w[0]) || ladder.iter().any(|&e| !(e > 0.0)) {
        return Err(ExperimentError::PreconditionViolated(
            "the radius ladder must be positive and strictly decreasing".into(),
        ));
    }
    if samples_per_level == 0 {
        return Err(ExperimentError::PreconditionViolated(
            "samples_per_level must be at least 1".into(),
        ));
    }

    // attraction predicate per sample
    let attracted: Box<dyn Fn(&StateVector, &mut ChaCha8Rng) -> bool + Sync> = match target {
        IndexTarget::Cycle(cycle) => {
            let tube = build_tube(coeffs, cycle, params)?;
            let min_dist = tube
                .cab
                .path
                .iter()
                .chain(tube.cba.path.iter())
                .map(|p| p.dist(point))
                .fold(f64::INFINITY, f64::min);
            if min_dist > 1e-2 {
                return Err(ExperimentError::PreconditionViolated(format!(
                    "base point is {min_dist} away from the verified connections"
                )));
            }
            let want = cycle.attracted_outcome();
            let loops_max = params.loops_max;
            let classify_params = params.classify;
            let cfg = *cfg;
            let coeffs = *coeffs;
            Box::new(move |x0, _| {
                classify_trajectory(&coeffs, x0, loops_max, &classify_params, &cfg).0 == want
            })
        }
        IndexTarget::Equilibrium(target_point) => {
            let cfg = *cfg;
            let coeffs = *coeffs;
            Box::new(move |x0, _| match integrate(&coeffs, x0, &cfg) {
                Ok(traj) => {
                    let close = traj.final_state().dist(&target_point) <= 1e-3;
                    close
                        && matches!(
                            traj.termination,
                            Termination::ConvergedToPoint | Termination::TimeLimit
                        )
                }
                Err(_) => false,
            })
        }
    };

    let mut fractions = Vec::with_capacity(ladder.len());
    for (level, &eps) in ladder.iter().enumerate() {
        let hits: u64 = (0..samples_per_level)
            .into_par_iter()
            .map(|i| {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(seed ^ ((level as u64) << 32) ^ i);
                let x0 = sample_ball(&mut rng, point, eps);
                u64::from(attracted(&x0, &mut rng))
            })
            .sum();
        fractions.push(hits as f64 / samples_per_level as f64);
    }

    // verdicts
    let tail = fractions.len().min(3);
    let smallest = &fractions[fractions.len() - tail..];
    let verdict = if smallest.iter().all(|&f| f >= 1.0 - 1e-3) {
        IndexVerdict::IndexPlusInfinityLike
    } else if smallest.iter().all(|&f| f <= 1e-3) {
        IndexVerdict::IndexMinusInfinityLike
    } else {
        finite_index_verdict(ladder, &fractions)
    };

    let points: Vec<(f64, f64)> = ladder
        .iter()
        .zip(&fractions)
        .filter(|(_, &f)| f > 0.0 && f < 1.0)
        .map(|(&e, &f)| (e.ln(), f.ln()))
        .collect();
    let slope = least_squares_slope(&points);

    Ok(IndexEstimate {
        base_point: *point,
        ladder: ladder.to_vec(),
        fractions,
        samples_per_level,
        seed,
        slope,
        verdict,
    })
}

/// A finite index shows as a stable slope of log(fraction) against log(eps)
/// over the last five levels (pairwise slopes within 20% of their mean).
fn finite_index_verdict(ladder: &[f64], fractions: &[f64]) -> IndexVerdict {
    if ladder.len() < 5 {
        return IndexVerdict::Inconclusive;
    }
    let last = ladder.len() - 5;
    let mut slopes = Vec::new();
    for i in last..ladder.len() - 1 {
        let (f0, f1) = (fractions[i], fractions[i + 1]);
        if !(f0 > 0.0 && f0 < 1.0 && f1 > 0.0 && f1 < 1.0) {
            return IndexVerdict::Inconclusive;
        }
        slopes.push((f1.ln() - f0.ln()) / (ladder[i + 1].ln() - ladder[i].ln()));
    }
    let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
    if mean.abs() < 1e-12 {
        return IndexVerdict::Inconclusive;
    }
    let stable = slopes.iter().all(|s| (s - mean).abs() <= 0.2 * mean.abs());
    if stable {
        IndexVerdict::FiniteIndexLike
    } else {
        IndexVerdict::Inconclusive
    }
}

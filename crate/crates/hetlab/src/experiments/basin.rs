//! Seeded Monte Carlo estimation of the basin proportion attracted to one of
//! the two competing subcycles.
//!
//! Sample points are drawn uniformly from a tube of radius `eps` around the
//! numerically verified cycle (ball centers placed by arc length along the
//! connection paths, plus the two equilibria), classified independently, and
//! aggregated into outcome counts with Wilson confidence intervals. Samples
//! carry per-index generators derived from `seed ^ index`, so counts are
//! reproducible and independent of worker scheduling.

use super::classify::{classify_trajectory, ClassifyParams, Outcome};
use super::{verify_connection, ConnectionRecord};
use crate::analysis::EquilibriumLabel;
use crate::error::ExperimentError;
use crate::integrator::IntegratorConfig;
use crate::model::{CoefficientSet, StateVector, SubspaceId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// The two competing subcycles, named by the plane carrying their branch of
/// the 2-dimensional connection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CycleId {
    #[serde(rename = "P13cycle")]
    P13Cycle,
    #[serde(rename = "P14cycle")]
    P14Cycle,
}

impl CycleId {
    pub fn plane(&self) -> SubspaceId {
        match self {
            CycleId::P13Cycle => SubspaceId::P13,
            CycleId::P14Cycle => SubspaceId::P14,
        }
    }

    pub fn attracted_outcome(&self) -> Outcome {
        match self {
            CycleId::P13Cycle => Outcome::AttractedP13,
            CycleId::P14Cycle => Outcome::AttractedP14,
        }
    }
}

/// Tube construction and classification settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TubeParams {
    /// Number of equally spaced (by arc length) ball centers per cycle.
    pub centers: usize,
    /// Shooting offset used when verifying the carrier connections.
    pub shoot_offset: f64,
    pub loops_max: usize,
    pub classify: ClassifyParams,
}

impl Default for TubeParams {
    fn default() -> Self {
        TubeParams {
            centers: 256,
            shoot_offset: 1e-5,
            loops_max: 50,
            classify: ClassifyParams::default(),
        }
    }
}

/// Per-sample outcome record for the optional CSV stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample: u64,
    pub seed: u64,
    pub outcome: Outcome,
    pub loops: usize,
    /// Exit angle of the last completed loop, when one exists.
    pub final_phi: Option<f64>,
}

/// Aggregated outcome counts for one tube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinReport {
    pub cycle: CycleId,
    pub eps: f64,
    pub n: u64,
    pub seed: u64,
    pub counts: BTreeMap<String, u64>,
    pub fraction_attracted_p13: f64,
    pub ci95_p13: (f64, f64),
    pub fraction_attracted_p14: f64,
    pub ci95_p14: (f64, f64),
    /// Per-sample outcomes in sample order; not part of the JSON report.
    #[serde(skip)]
    pub samples: Vec<SampleRecord>,
}

impl BasinReport {
    pub fn count(&self, outcome: Outcome) -> u64 {
        self.counts.get(outcome.name()).copied().unwrap_or(0)
    }

    /// Fraction attracted to the tube's own cycle with its interval.
    pub fn own_fraction(&self) -> (f64, (f64, f64)) {
        match self.cycle {
            CycleId::P13Cycle => (self.fraction_attracted_p13, self.ci95_p13),
            CycleId::P14Cycle => (self.fraction_attracted_p14, self.ci95_p14),
        }
    }

    /// Stream the per-sample outcomes as CSV.
    pub fn write_sample_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "sample,seed,outcome,loops,final_phi")?;
        for s in &self.samples {
            match s.final_phi {
                Some(phi) => writeln!(
                    w,
                    "{},{},{},{},{:.16e}",
                    s.sample,
                    s.seed,
                    s.outcome.name(),
                    s.loops,
                    phi
                )?,
                None => writeln!(
                    w,
                    "{},{},{},{},nan",
                    s.sample,
                    s.seed,
                    s.outcome.name(),
                    s.loops
                )?,
            }
        }
        Ok(())
    }
}

/// 95% Wilson score interval for `k` successes out of `n`.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959963984540054_f64;
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Equally spaced (by arc length) points along a polyline.
fn arc_length_centers(path: &[StateVector], count: usize) -> Vec<StateVector> {
    if path.len() < 2 || count == 0 {
        return path.to_vec();
    }
    let mut cumulative = Vec::with_capacity(path.len());
    let mut total = 0.0;
    cumulative.push(0.0);
    for w in path.windows(2) {
        total += w[1].dist(&w[0]);
        cumulative.push(total);
    }
    if total == 0.0 {
        return vec![path[0]];
    }
    let mut centers = Vec::with_capacity(count);
    let mut seg = 0;
    for i in 0..count {
        let target = total * i as f64 / (count - 1).max(1) as f64;
        while seg + 1 < cumulative.len() - 1 && cumulative[seg + 1] < target {
            seg += 1;
        }
        let span = cumulative[seg + 1] - cumulative[seg];
        let mix = if span > 0.0 {
            (target - cumulative[seg]) / span
        } else {
            0.0
        };
        centers.push(path[seg] + (path[seg + 1] - path[seg]) * mix);
    }
    centers
}

/// The geometric skeleton of one cycle: tube centers distributed over both
/// connections proportionally to arc length, plus the equilibria.
pub(crate) struct CycleTube {
    pub centers: Vec<StateVector>,
    pub cab: ConnectionRecord,
    pub cba: ConnectionRecord,
}

pub(crate) fn build_tube(
    coeffs: &CoefficientSet,
    cycle: CycleId,
    params: &TubeParams,
) -> Result<CycleTube, ExperimentError> {
    let cab = verify_connection(
        coeffs,
        EquilibriumLabel::XiA,
        EquilibriumLabel::XiB,
        SubspaceId::P12,
        params.shoot_offset,
    )?;
    let cba = verify_connection(
        coeffs,
        EquilibriumLabel::XiB,
        EquilibriumLabel::XiA,
        cycle.plane(),
        params.shoot_offset,
    )?;
    if !cab.verified || !cba.verified {
        return Err(ExperimentError::PreconditionViolated(format!(
            "cycle connections not verified (C_ab: {}, C_ba|{:?}: {})",
            cab.verified,
            cycle.plane(),
            cba.verified
        )));
    }
    let len_ab: f64 = cab
        .path
        .windows(2)
        .map(|w| w[1].dist(&w[0]))
        .sum();
    let len_ba: f64 = cba
        .path
        .windows(2)
        .map(|w| w[1].dist(&w[0]))
        .sum();
    let total = len_ab + len_ba;
    let n_ab = ((params.centers as f64 * len_ab / total).round() as usize).max(2);
    let n_ba = (params.centers.saturating_sub(n_ab)).max(2);
    let mut centers = arc_length_centers(&cab.path, n_ab);
    centers.extend(arc_length_centers(&cba.path, n_ba));
    // the equilibria themselves
    centers.push(*cab.path.first().expect("path nonempty"));
    centers.push(*cba.path.first().expect("path nonempty"));
    Ok(CycleTube { centers, cab, cba })
}

/// Uniform point in the 4-ball of radius `eps` around `center`.
fn sample_in_ball(rng: &mut impl Rng, center: &StateVector, eps: f64) -> StateVector {
    // isotropic direction from four normals, radius via the inverse cdf
    let dir = StateVector::new(
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    );
    let norm = dir.norm();
    let dir = if norm > 0.0 {
        dir * (1.0 / norm)
    } else {
        StateVector::new(1.0, 0.0, 0.0, 0.0)
    };
    let u: f64 = rng.gen();
    *center + dir * (eps * u.powf(0.25))
}

/// Sample `n` points from the `eps`-tube around `cycle`, classify each, and
/// aggregate the outcome counts.
pub fn basin_fraction(
    coeffs: &CoefficientSet,
    cycle: CycleId,
    eps: f64,
    n: u64,
    seed: u64,
    params: &TubeParams,
    cfg: &IntegratorConfig,
) -> Result<BasinReport, ExperimentError> {
    if !(eps > 0.0) {
        return Err(ExperimentError::PreconditionViolated(format!(
            "eps = {eps} must be positive"
        )));
    }
    if n == 0 {
        return Err(ExperimentError::PreconditionViolated(
            "sample count must be at least 1".into(),
        ));
    }
    let tube = build_tube(coeffs, cycle, params)?;

    let samples: Vec<SampleRecord> = (0..n)
        .into_par_iter()
        .map(|i| {
            let sample_seed = seed ^ i;
            let mut rng = ChaCha8Rng::seed_from_u64(sample_seed);
            let center = tube.centers[rng.gen_range(0..tube.centers.len())];
            let x0 = sample_in_ball(&mut rng, &center, eps);
            let (outcome, loops) =
                classify_trajectory(coeffs, &x0, params.loops_max, &params.classify, cfg);
            SampleRecord {
                sample: i,
                seed: sample_seed,
                outcome,
                loops: loops.len(),
                final_phi: loops.last().map(|r| r.phi),
            }
        })
        .collect();

    let mut counts: BTreeMap<String, u64> = Outcome::ALL
        .iter()
        .map(|o| (o.name().to_string(), 0))
        .collect();
    for s in &samples {
        *counts.get_mut(s.outcome.name()).expect("all outcomes preseeded") += 1;
    }

    let k13 = counts[Outcome::AttractedP13.name()];
    let k14 = counts[Outcome::AttractedP14.name()];
    Ok(BasinReport {
        cycle,
        eps,
        n,
        seed,
        counts,
        fraction_attracted_p13: k13 as f64 / n as f64,
        ci95_p13: wilson_interval(k13, n),
        fraction_attracted_p14: k14 as f64 / n as f64,
        ci95_p14: wilson_interval(k14, n),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_interval_basics() {
        let (lo, hi) = wilson_interval(0, 100);
        assert!(lo <= 1e-12);
        assert!(hi < 0.05);
        let (lo, hi) = wilson_interval(100, 100);
        assert!(lo > 0.95);
        assert!(hi >= 1.0 - 1e-12);
        let (lo, hi) = wilson_interval(50, 100);
        assert!(lo < 0.5 && hi > 0.5);
        assert!(hi - lo < 0.2);
    }

    #[test]
    fn zero_samples_rejected() {
        let c = CoefficientSet::reference();
        let res = basin_fraction(
            &c,
            CycleId::P13Cycle,
            1e-3,
            0,
            1,
            &TubeParams::default(),
            &IntegratorConfig::default(),
        );
        assert!(matches!(res, Err(ExperimentError::PreconditionViolated(_))));
    }

    #[test]
    fn arc_length_centers_cover_endpoints() {
        let path = vec![
            StateVector::new(0.0, 0.0, 0.0, 0.0),
            StateVector::new(1.0, 0.0, 0.0, 0.0),
            StateVector::new(1.0, 2.0, 0.0, 0.0),
        ];
        let centers = arc_length_centers(&path, 7);
        assert_eq!(centers.len(), 7);
        assert!(centers[0].dist(&path[0]) < 1e-12);
        assert!(centers[6].dist(&path[2]) < 1e-12);
        // equally spaced by arc length (total 3, spacing 0.5)
        for w in centers.windows(2) {
            let gap = w[1].dist(&w[0]);
            assert!((gap - 0.5).abs() < 1e-9, "gap {gap}");
        }
    }

    #[test]
    fn tube_samples_and_replay_small() {
        let c = CoefficientSet::reference();
        let params = TubeParams::default();
        let cfg = IntegratorConfig::default();
        let r1 = basin_fraction(&c, CycleId::P14Cycle, 1e-3, 24, 5, &params, &cfg).unwrap();
        let r2 = basin_fraction(&c, CycleId::P14Cycle, 1e-3, 24, 5, &params, &cfg).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(r1.counts.values().sum::<u64>(), 24);
        assert_eq!(r1.samples.len(), 24);

        let mut csv = Vec::new();
        r1.write_sample_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().next().unwrap(), "sample,seed,outcome,loops,final_phi");
        assert_eq!(text.lines().count(), 25);
    }
}

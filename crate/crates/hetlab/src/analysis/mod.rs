//! Closed-form equilibrium and eigenvalue computation, the coefficient
//! condition checkers, and coefficient search.

mod conditions;
mod p12;
mod search;

pub use conditions::{
    check_construction, check_hypotheses, check_table1, finalize_hc, ConditionReport,
    ConditionRow, ConstructionReport, H3Direct, HypothesesReport, ItemReport, PrintedInequality,
    Table1Report,
};
pub use p12::{p12_interior_equilibria, P12Equilibrium, P12ScanOptions, P12ScanReport};
pub use search::{
    find_coefficients, openness_probe, CoefficientBox, SearchConfig, SearchMode, SearchOutcome,
};

use crate::error::AnalysisError;
use crate::model::{jacobian, CoefficientSet, StateVector};
use serde::{Deserialize, Serialize};

/// Which of the two axis equilibria a record describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquilibriumLabel {
    #[serde(rename = "xi_a")]
    XiA,
    #[serde(rename = "xi_b")]
    XiB,
}

/// Stability type of an equilibrium restricted to an invariant subspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityRole {
    Sink,
    Saddle,
    Source,
    Degenerate,
}

fn role_of(eigs: &[f64]) -> StabilityRole {
    if eigs.iter().any(|&l| l == 0.0) {
        StabilityRole::Degenerate
    } else if eigs.iter().all(|&l| l < 0.0) {
        StabilityRole::Sink
    } else if eigs.iter().all(|&l| l > 0.0) {
        StabilityRole::Source
    } else {
        StabilityRole::Saddle
    }
}

/// An axis equilibrium with its four closed-form eigenvalues, ordered by
/// coordinate axis, and its stability type restricted to the invariant plane
/// P12 and the invariant 3-space S134.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumRecord {
    pub label: EquilibriumLabel,
    pub x1_value: f64,
    pub eigenvalues: [f64; 4],
    pub role_p12: StabilityRole,
    pub role_s134: StabilityRole,
}

impl EquilibriumRecord {
    pub fn state(&self) -> StateVector {
        StateVector::new(self.x1_value, 0.0, 0.0, 0.0)
    }
}

/// Closed-form eigenvalues of the (diagonal) Jacobian at an axis point `x`.
pub fn axis_eigenvalues(c: &CoefficientSet, x: f64) -> [f64; 4] {
    [
        c.b11 * x + 2.0 * c.c1 * x * x,
        1.0 + c.b21 * x * x + c.d2 * x,
        1.0 + c.b31 * x * x + c.d3 * x,
        1.0 + c.b41 * x * x + c.d4 * x,
    ]
}

fn record_at(c: &CoefficientSet, label: EquilibriumLabel, x: f64) -> EquilibriumRecord {
    let eig = axis_eigenvalues(c, x);
    EquilibriumRecord {
        label,
        x1_value: x,
        eigenvalues: eig,
        role_p12: role_of(&[eig[0], eig[1]]),
        role_s134: role_of(&[eig[0], eig[2], eig[3]]),
    }
}

/// Both roots of `1 + b11 x + c1 x^2` via the cancellation-free quadratic
/// formula, labelled by sign: the negative root is `xi_a`, the positive one
/// `xi_b`.
pub fn compute_equilibria(
    c: &CoefficientSet,
) -> Result<(EquilibriumRecord, EquilibriumRecord), AnalysisError> {
    if c.c1 == 0.0 {
        return Err(AnalysisError::DegenerateCoefficient(
            "c1 = 0: the axis equilibrium equation is not quadratic".into(),
        ));
    }
    let disc = c.discriminant();
    if disc <= 0.0 {
        return Err(AnalysisError::NoRealEquilibria { discriminant: disc });
    }
    let sq = disc.sqrt();
    let q = -0.5 * (c.b11 + c.b11.signum() * sq);
    let (r1, r2) = if q == 0.0 {
        // b11 == 0: symmetric pair
        let r = (-1.0 / c.c1).sqrt();
        (-r, r)
    } else {
        (q / c.c1, 1.0 / q)
    };
    let (neg, pos) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
    if !(neg < 0.0 && pos > 0.0) {
        return Err(AnalysisError::SignPatternViolation {
            x_first: neg,
            x_second: pos,
        });
    }
    Ok((
        record_at(c, EquilibriumLabel::XiA, neg),
        record_at(c, EquilibriumLabel::XiB, pos),
    ))
}

/// Which invariant plane carries the connection tangent to the strongest
/// expanding eigendirection at `xi_b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrincipalPlane {
    P13,
    P14,
    Tie,
}

/// Determine the principal plane by direct comparison of the expanding
/// eigenvalues at `xi_b`. A tie within relative 1e-12 is reported, never
/// silently resolved.
pub fn principal_plane(c: &CoefficientSet) -> Result<PrincipalPlane, AnalysisError> {
    let (_, xi_b) = compute_equilibria(c)?;
    let l3 = xi_b.eigenvalues[2];
    let l4 = xi_b.eigenvalues[3];
    if l3 <= 0.0 || l4 <= 0.0 {
        return Err(AnalysisError::NotASaddleInS134 {
            lambda3: l3,
            lambda4: l4,
        });
    }
    let scale = l3.abs().max(l4.abs());
    if (l3 - l4).abs() <= 1e-12 * scale {
        Ok(PrincipalPlane::Tie)
    } else if l3 > l4 {
        Ok(PrincipalPlane::P13)
    } else {
        Ok(PrincipalPlane::P14)
    }
}

/// Numeric eigenvalues of the full Jacobian at a state, sorted by real part.
/// Used as an independent cross-check of the closed forms.
pub fn numeric_jacobian_eigenvalues(c: &CoefficientSet, x: &StateVector) -> Vec<(f64, f64)> {
    let j = jacobian(c, x);
    let m = nalgebra::Matrix4::from_fn(|r, col| j[r][col]);
    let mut eig: Vec<(f64, f64)> = m
        .complex_eigenvalues()
        .iter()
        .map(|z| (z.re, z.im))
        .collect();
    eig.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    eig
}

#[cfg(test)]
mod tests {
    use super::*;

    const XA: f64 = -0.302_775_637_731_994_65;
    const XB: f64 = 3.302_775_637_731_994_6;

    #[test]
    fn reference_equilibria() {
        let c = CoefficientSet::reference();
        let (a, b) = compute_equilibria(&c).unwrap();
        assert!((a.x1_value - XA).abs() < 1e-14);
        assert!((b.x1_value - XB).abs() < 1e-14);
        // root identities
        let sum = a.x1_value + b.x1_value;
        let prod = a.x1_value * b.x1_value;
        assert!((sum - (-c.b11 / c.c1)).abs() <= 1e-12 * sum.abs());
        assert!((prod - 1.0 / c.c1).abs() <= 1e-12 * prod.abs());
        // residual of the defining quadratic
        for x in [a.x1_value, b.x1_value] {
            assert!((1.0 + c.b11 * x + c.c1 * x * x).abs() <= 1e-12);
        }
    }

    #[test]
    fn reference_eigenvalues_match_frozen_values() {
        let c = CoefficientSet::reference();
        let (a, b) = compute_equilibria(&c).unwrap();
        let exp_a = [
            -1.0916730868040161,
            2.3027756377319946,
            -0.11942946412396253,
            -0.40387048449515396,
        ];
        let exp_b = [
            -11.908326913195984,
            -1.3027756377319946,
            25.119429464123963,
            30.603870484495154,
        ];
        for i in 0..4 {
            assert!((a.eigenvalues[i] - exp_a[i]).abs() <= 1e-6 * exp_a[i].abs());
            assert!((b.eigenvalues[i] - exp_b[i]).abs() <= 1e-6 * exp_b[i].abs());
        }
        // radial eigenvalue closed form
        let sq = c.discriminant().sqrt();
        assert!((a.eigenvalues[0] - a.x1_value * sq).abs() < 1e-12);
        assert!((b.eigenvalues[0] + b.x1_value * sq).abs() < 1e-11);
        assert!(a.eigenvalues[0] < 0.0 && b.eigenvalues[0] < 0.0);
    }

    #[test]
    fn roles_of_reference_equilibria() {
        let c = CoefficientSet::reference();
        let (a, b) = compute_equilibria(&c).unwrap();
        assert_eq!(a.role_p12, StabilityRole::Saddle);
        assert_eq!(b.role_p12, StabilityRole::Sink);
        assert_eq!(a.role_s134, StabilityRole::Sink);
        assert_eq!(b.role_s134, StabilityRole::Saddle);
    }

    #[test]
    fn bisection_oracle_agrees_with_quadratic_formula() {
        // independent root finder on x1' restricted to the axis
        let c = CoefficientSet::reference();
        let f = |x: f64| x * (1.0 + c.b11 * x + c.c1 * x * x);
        let bisect = |mut lo: f64, mut hi: f64| {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(lo) * f(mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        };
        // brackets avoiding the root at the origin
        let ra = bisect(-1.0, -0.1);
        let rb = bisect(2.0, 4.0);
        let (a, b) = compute_equilibria(&c).unwrap();
        assert!((ra - a.x1_value).abs() < 1e-9);
        assert!((rb - b.x1_value).abs() < 1e-9);
    }

    #[test]
    fn no_real_equilibria_and_sign_violations() {
        let mut c = CoefficientSet::reference();
        c.b11 = 1.0;
        c.c1 = 1.0; // disc = -3
        assert!(matches!(
            compute_equilibria(&c),
            Err(AnalysisError::NoRealEquilibria { .. })
        ));
        c.b11 = 3.0;
        c.c1 = 1.0; // disc = 5, both roots negative
        assert!(matches!(
            compute_equilibria(&c),
            Err(AnalysisError::SignPatternViolation { .. })
        ));
        c.c1 = 0.0;
        assert!(matches!(
            compute_equilibria(&c),
            Err(AnalysisError::DegenerateCoefficient(_))
        ));
    }

    #[test]
    fn principal_plane_reference_and_swapped() {
        let c = CoefficientSet::reference();
        assert_eq!(principal_plane(&c).unwrap(), PrincipalPlane::P14);

        // swap the index-3 and index-4 coefficients: planes exchange
        let mut sw = c;
        sw.b31 = 1.2;
        sw.b41 = 1.0;
        sw.d3 = 5.0;
        sw.d4 = 4.0;
        assert_eq!(principal_plane(&sw).unwrap(), PrincipalPlane::P13);

        let mut tie = c;
        tie.b31 = 1.0;
        tie.b41 = 1.0;
        tie.d3 = 4.0;
        tie.d4 = 4.0;
        assert_eq!(principal_plane(&tie).unwrap(), PrincipalPlane::Tie);
    }

    #[test]
    fn principal_plane_requires_expanding_pair() {
        let mut c = CoefficientSet::reference();
        c.d3 = -4.0; // lambda3(xi_b) < 0
        assert!(matches!(
            principal_plane(&c),
            Err(AnalysisError::NotASaddleInS134 { .. })
        ));
    }

    #[test]
    fn closed_forms_match_numeric_eigendecomposition() {
        let c = CoefficientSet::reference();
        let (a, b) = compute_equilibria(&c).unwrap();
        for rec in [a, b] {
            let numeric = numeric_jacobian_eigenvalues(&c, &rec.state());
            let mut closed = rec.eigenvalues.to_vec();
            closed.sort_by(|x, y| x.partial_cmp(y).unwrap());
            for (n, cl) in numeric.iter().zip(closed.iter()) {
                assert!(n.1.abs() < 1e-12, "unexpected complex eigenvalue");
                assert!(
                    (n.0 - cl).abs() <= 1e-8 * cl.abs().max(1.0),
                    "{} vs {}",
                    n.0,
                    cl
                );
            }
        }
    }

    #[test]
    fn eigenvalue_substitution_identity() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..500 {
            let mut c = CoefficientSet::reference();
            c.b11 = rng.gen_range(0.5..4.0);
            c.c1 = rng.gen_range(-3.0..-0.2);
            c.b21 = rng.gen_range(-3.0..3.0);
            c.b31 = rng.gen_range(-3.0..3.0);
            c.b41 = rng.gen_range(-3.0..3.0);
            c.d2 = rng.gen_range(-6.0..6.0);
            c.d3 = rng.gen_range(-6.0..6.0);
            c.d4 = rng.gen_range(-6.0..6.0);
            let (a, b) = compute_equilibria(&c).unwrap();
            for rec in [a, b] {
                let x = rec.x1_value;
                // at a root, x^2 = -(1 + b11 x)/c1
                for (idx, (bk, dk)) in [(c.b21, c.d2), (c.b31, c.d3), (c.b41, c.d4)]
                    .iter()
                    .enumerate()
                {
                    let direct = 1.0 + bk * x * x + dk * x;
                    let rewritten = 1.0 - bk / c.c1 + (dk - (bk / c.c1) * c.b11) * x;
                    let scale = direct.abs().max(rewritten.abs()).max(1e-6);
                    assert!(
                        (direct - rewritten).abs() <= 1e-10 * scale,
                        "index {} at x = {x}: {direct} vs {rewritten}",
                        idx + 2
                    );
                }
            }
        }
    }
}

//! Off-axis equilibria in the invariant plane P12.
//!
//! Points with x2 != 0 are equilibria iff
//!
//! ```text
//! x2^2 = -(x1 + b11 x1^2 + c1 x1^3) / b12 = -(1 + b21 x1^2 + d2 x1) / b22
//! ```
//!
//! The difference of the two right-hand sides is scanned over a bracketing
//! grid and each sign change is bisected; only crossings with a positive
//! common value survive.

use crate::error::AnalysisError;
use crate::model::CoefficientSet;
use serde::{Deserialize, Serialize};

/// Grid and tolerance settings for the scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct P12ScanOptions {
    /// Half-width of the scanned x1 interval.
    pub x_max: f64,
    /// Number of grid points.
    pub grid_points: usize,
    /// Bisection tolerance on x1.
    pub bisect_tol: f64,
}

impl Default for P12ScanOptions {
    fn default() -> Self {
        P12ScanOptions {
            x_max: 50.0,
            grid_points: 20_001,
            bisect_tol: 1e-10,
        }
    }
}

/// One off-axis equilibrium (x1, x2) with x2 > 0; its mirror image under
/// x2 -> -x2 is implied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct P12Equilibrium {
    pub x1: f64,
    pub x2: f64,
    /// Lies strictly between the vertical lines x1 = x_a and x1 = x_b.
    pub inside_d: bool,
    /// Max residual of the two original equilibrium equations.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct P12ScanReport {
    pub solutions: Vec<P12Equilibrium>,
    pub warnings: Vec<String>,
}

pub fn p12_interior_equilibria(
    c: &CoefficientSet,
    opts: &P12ScanOptions,
) -> Result<P12ScanReport, AnalysisError> {
    if c.b12 == 0.0 || c.b22 == 0.0 {
        return Err(AnalysisError::DegenerateCoefficient(format!(
            "b12 = {}, b22 = {}: the x2^2 elimination is undefined",
            c.b12, c.b22
        )));
    }
    let g1 = |x: f64| -(x + c.b11 * x * x + c.c1 * x * x * x) / c.b12;
    let g2 = |x: f64| -(1.0 + c.b21 * x * x + c.d2 * x) / c.b22;
    let h = |x: f64| g1(x) - g2(x);

    let d_bounds = super::compute_equilibria(c)
        .ok()
        .map(|(a, b)| (a.x1_value, b.x1_value));

    let n = opts.grid_points.max(3);
    let step = 2.0 * opts.x_max / (n - 1) as f64;
    let grid_x = |i: usize| -opts.x_max + step * i as f64;

    let mut warnings = Vec::new();

    // a nearly identically-zero difference means the two curves coincide and
    // the crossing set is not isolated
    let scale = (0..n)
        .map(|i| h(grid_x(i)).abs())
        .fold(0.0_f64, f64::max);
    let tiny = (0..n)
        .filter(|&i| h(grid_x(i)).abs() <= 1e-12 * scale.max(1.0))
        .count();
    if tiny > n / 2 {
        return Err(AnalysisError::DegenerateCoefficient(
            "the cubic and parabola branches coincide on most of the grid; \
             the equilibrium set is not isolated"
                .into(),
        ));
    }

    let mut solutions = Vec::new();
    let mut prev = h(grid_x(0));
    for i in 1..n {
        let x = grid_x(i);
        let cur = h(x);
        let crossing = if prev == 0.0 {
            Some(grid_x(i - 1))
        } else if prev * cur < 0.0 {
            // bisect the bracket
            let (mut lo, mut hi) = (grid_x(i - 1), x);
            let mut flo = prev;
            while hi - lo > opts.bisect_tol {
                let mid = 0.5 * (lo + hi);
                let fm = h(mid);
                if flo * fm <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            Some(0.5 * (lo + hi))
        } else {
            None
        };
        if let Some(root) = crossing {
            let x2sq = g1(root);
            if x2sq > 0.0 {
                let x2 = x2sq.sqrt();
                let r1 = root + c.b11 * root * root + c.b12 * x2sq + c.c1 * root.powi(3);
                let r2 = x2 * (1.0 + c.b21 * root * root + c.b22 * x2sq + c.d2 * root);
                let inside_d = match d_bounds {
                    Some((xa, xb)) => root > xa && root < xb,
                    None => false,
                };
                solutions.push(P12Equilibrium {
                    x1: root,
                    x2,
                    inside_d,
                    residual: r1.abs().max(r2.abs()),
                });
            }
        }
        prev = cur;
    }
    if d_bounds.is_none() {
        warnings.push("axis equilibria unavailable; inside_d tags default to false".into());
    }
    Ok(P12ScanReport {
        solutions,
        warnings,
    })
}

//! The vector field, its symmetry group and the invariant coordinate
//! subspaces.
//!
//! The field on `R^4` is
//!
//! ```text
//! x1' = x1 + sum_i b1i xi^2 + c1 x1^3
//! x2' = x2 + x2 sum_i b2i xi^2 + d2 x1 x2
//! x3' = x3 + x3 sum_i b3i xi^2 + c3 x3^2 x4 + d3 x1 x3
//! x4' = x4 + x4 sum_i b4i xi^2 + c4 x3 x4^2 + d4 x1 x4
//! ```
//!
//! and is equivariant under the group generated by `kappa2` (negation of x2)
//! and `kappa34` (simultaneous negation of x3 and x4).

use crate::error::ModelError;
use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

/// The 22 real coefficients of the vector field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSet {
    pub b11: f64,
    pub b12: f64,
    pub b13: f64,
    pub b14: f64,
    pub b21: f64,
    pub b22: f64,
    pub b23: f64,
    pub b24: f64,
    pub b31: f64,
    pub b32: f64,
    pub b33: f64,
    pub b34: f64,
    pub b41: f64,
    pub b42: f64,
    pub b43: f64,
    pub b44: f64,
    pub c1: f64,
    pub c3: f64,
    pub c4: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
}

impl CoefficientSet {
    /// The reference coefficient set used throughout the test suite and the
    /// README examples. It satisfies every row of the sign-condition table.
    pub fn reference() -> Self {
        CoefficientSet {
            b11: 3.0,
            b12: 1.0,
            b13: -1.0,
            b14: -1.0,
            b21: 1.0,
            b22: -0.1,
            b23: -1.0,
            b24: -1.0,
            b31: 1.0,
            b32: -1.0,
            b33: -1.0,
            b34: -1.0,
            b41: 1.2,
            b42: -1.0,
            b43: -1.0,
            b44: -1.0,
            c1: -1.0,
            c3: -1.0,
            c4: -1.0,
            d2: -4.0,
            d3: 4.0,
            d4: 5.0,
        }
    }

    /// Coefficient values in the fixed field order used by samplers and
    /// serializers.
    pub fn as_array(&self) -> [f64; 22] {
        [
            self.b11, self.b12, self.b13, self.b14, self.b21, self.b22, self.b23, self.b24,
            self.b31, self.b32, self.b33, self.b34, self.b41, self.b42, self.b43, self.b44,
            self.c1, self.c3, self.c4, self.d2, self.d3, self.d4,
        ]
    }

    pub fn from_array(a: [f64; 22]) -> Self {
        CoefficientSet {
            b11: a[0],
            b12: a[1],
            b13: a[2],
            b14: a[3],
            b21: a[4],
            b22: a[5],
            b23: a[6],
            b24: a[7],
            b31: a[8],
            b32: a[9],
            b33: a[10],
            b34: a[11],
            b41: a[12],
            b42: a[13],
            b43: a[14],
            b44: a[15],
            c1: a[16],
            c3: a[17],
            c4: a[18],
            d2: a[19],
            d3: a[20],
            d4: a[21],
        }
    }

    /// Field names in the fixed order matching [`as_array`](Self::as_array).
    pub const FIELD_NAMES: [&'static str; 22] = [
        "b11", "b12", "b13", "b14", "b21", "b22", "b23", "b24", "b31", "b32", "b33", "b34", "b41",
        "b42", "b43", "b44", "c1", "c3", "c4", "d2", "d3", "d4",
    ];

    /// All entries finite.
    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, v) in Self::FIELD_NAMES.iter().zip(self.as_array()) {
            if !v.is_finite() {
                return Err(ModelError::NonFiniteInput(format!(
                    "coefficient {name} = {v}"
                )));
            }
        }
        Ok(())
    }

    /// Discriminant of the axis equilibrium quadratic `1 + b11 x + c1 x^2`.
    pub fn discriminant(&self) -> f64 {
        self.b11 * self.b11 - 4.0 * self.c1
    }

    /// True when the axis equilibria are defined: `b11 != 0` and
    /// `b11^2 - 4 c1 > 0`.
    pub fn equilibria_defined(&self) -> bool {
        self.b11 != 0.0 && self.discriminant() > 0.0
    }

    /// Parse from a JSON object with exactly the 22 coefficient keys.
    /// Unknown or missing keys are rejected with the offending key named.
    pub fn from_json_str(s: &str) -> Result<Self, ModelError> {
        let set: CoefficientSet = serde_json::from_str(s)
            .map_err(|e| ModelError::InvalidCoefficients(e.to_string()))?;
        set.validate()?;
        Ok(set)
    }
}

/// A point of phase space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    pub x4: f64,
}

impl StateVector {
    pub const ZERO: StateVector = StateVector {
        x1: 0.0,
        x2: 0.0,
        x3: 0.0,
        x4: 0.0,
    };

    pub fn new(x1: f64, x2: f64, x3: f64, x4: f64) -> Self {
        StateVector { x1, x2, x3, x4 }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        StateVector::new(a[0], a[1], a[2], a[3])
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.x1, self.x2, self.x3, self.x4]
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, other: &StateVector) -> f64 {
        self.x1 * other.x1 + self.x2 * other.x2 + self.x3 * other.x3 + self.x4 * other.x4
    }

    pub fn dist(&self, other: &StateVector) -> f64 {
        (*self - *other).norm()
    }

    /// Radius in the (x3, x4) plane.
    pub fn radius34(&self) -> f64 {
        self.x3.hypot(self.x4)
    }
}

impl Add for StateVector {
    type Output = StateVector;
    fn add(self, o: StateVector) -> StateVector {
        StateVector::new(self.x1 + o.x1, self.x2 + o.x2, self.x3 + o.x3, self.x4 + o.x4)
    }
}

impl AddAssign for StateVector {
    fn add_assign(&mut self, o: StateVector) {
        *self = *self + o;
    }
}

impl Sub for StateVector {
    type Output = StateVector;
    fn sub(self, o: StateVector) -> StateVector {
        StateVector::new(self.x1 - o.x1, self.x2 - o.x2, self.x3 - o.x3, self.x4 - o.x4)
    }
}

impl Mul<f64> for StateVector {
    type Output = StateVector;
    fn mul(self, s: f64) -> StateVector {
        StateVector::new(self.x1 * s, self.x2 * s, self.x3 * s, self.x4 * s)
    }
}

impl Neg for StateVector {
    type Output = StateVector;
    fn neg(self) -> StateVector {
        self * -1.0
    }
}

/// Elements of the symmetry group (isomorphic to Z2 x Z2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SymmetryElement {
    Id,
    Kappa2,
    Kappa34,
    Kappa2Kappa34,
}

impl SymmetryElement {
    pub const ALL: [SymmetryElement; 4] = [
        SymmetryElement::Id,
        SymmetryElement::Kappa2,
        SymmetryElement::Kappa34,
        SymmetryElement::Kappa2Kappa34,
    ];

    /// Group composition.
    pub fn compose(self, other: SymmetryElement) -> SymmetryElement {
        use SymmetryElement::*;
        let sig = |g: SymmetryElement| match g {
            Id => (1.0, 1.0),
            Kappa2 => (-1.0, 1.0),
            Kappa34 => (1.0, -1.0),
            Kappa2Kappa34 => (-1.0, -1.0),
        };
        let (a2, a34) = sig(self);
        let (b2, b34) = sig(other);
        match (a2 * b2 < 0.0, a34 * b34 < 0.0) {
            (false, false) => Id,
            (true, false) => Kappa2,
            (false, true) => Kappa34,
            (true, true) => Kappa2Kappa34,
        }
    }

    pub fn inverse(self) -> SymmetryElement {
        // every element is an involution
        self
    }
}

/// Apply a symmetry element to a state.
pub fn apply_symmetry(g: SymmetryElement, x: &StateVector) -> StateVector {
    match g {
        SymmetryElement::Id => *x,
        SymmetryElement::Kappa2 => StateVector::new(x.x1, -x.x2, x.x3, x.x4),
        SymmetryElement::Kappa34 => StateVector::new(x.x1, x.x2, -x.x3, -x.x4),
        SymmetryElement::Kappa2Kappa34 => StateVector::new(x.x1, -x.x2, -x.x3, -x.x4),
    }
}

/// Coordinate subspaces of interest. Each identifier maps to a fixed pattern
/// of coordinates that vanish on the subspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SubspaceId {
    L1,
    L2,
    L3,
    L4,
    P12,
    P13,
    P14,
    P34,
    S134,
    Full,
}

impl SubspaceId {
    /// Zero-based indices of the coordinates that must vanish on the subspace.
    pub fn vanishing_coords(&self) -> &'static [usize] {
        match self {
            SubspaceId::L1 => &[1, 2, 3],
            SubspaceId::L2 => &[0, 2, 3],
            SubspaceId::L3 => &[0, 1, 3],
            SubspaceId::L4 => &[0, 1, 2],
            SubspaceId::P12 => &[2, 3],
            SubspaceId::P13 => &[1, 3],
            SubspaceId::P14 => &[1, 2],
            SubspaceId::P34 => &[0, 1],
            SubspaceId::S134 => &[1],
            SubspaceId::Full => &[],
        }
    }

    /// Subspaces that are genuinely flow-invariant for every coefficient set:
    /// the fixed-point spaces of the group together with the planes obtained
    /// by intersecting them with the invariant hyperplanes `x3 = 0`, `x4 = 0`.
    /// The axis L2 and the plane P34 are isotypic components of the group
    /// action but not invariant under the flow (the x1 equation carries pure
    /// `b12 x2^2`, `b13 x3^2`, `b14 x4^2` source terms there).
    pub fn flow_invariant() -> &'static [SubspaceId] {
        &[
            SubspaceId::L1,
            SubspaceId::P12,
            SubspaceId::P13,
            SubspaceId::P14,
            SubspaceId::S134,
        ]
    }

    pub fn contains(&self, x: &StateVector, tol: f64) -> bool {
        subspace_distance(*self, x) <= tol
    }
}

/// Euclidean distance from `x` to the coordinate subspace: the norm of the
/// components that must vanish there. Zero iff `x` lies in the subspace.
pub fn subspace_distance(id: SubspaceId, x: &StateVector) -> f64 {
    let a = x.as_array();
    id.vanishing_coords()
        .iter()
        .map(|&i| a[i] * a[i])
        .sum::<f64>()
        .sqrt()
}

/// Raw field evaluation without finiteness checks; the integrator hot loop
/// uses this directly.
#[inline]
pub(crate) fn field(c: &CoefficientSet, x: &StateVector) -> StateVector {
    let (x1, x2, x3, x4) = (x.x1, x.x2, x.x3, x.x4);
    let q1 = x1 * x1;
    let q2 = x2 * x2;
    let q3 = x3 * x3;
    let q4 = x4 * x4;
    let f1 = x1 * (1.0 + x1 * (c.b11 + c.c1 * x1)) + c.b12 * q2 + c.b13 * q3 + c.b14 * q4;
    let f2 = x2 * (1.0 + c.b21 * q1 + c.b22 * q2 + c.b23 * q3 + c.b24 * q4 + c.d2 * x1);
    let f3 = x3 * (1.0 + c.b31 * q1 + c.b32 * q2 + c.b33 * q3 + c.b34 * q4 + c.d3 * x1)
        + c.c3 * q3 * x4;
    let f4 = x4 * (1.0 + c.b41 * q1 + c.b42 * q2 + c.b43 * q3 + c.b44 * q4 + c.d4 * x1)
        + c.c4 * x3 * q4;
    StateVector::new(f1, f2, f3, f4)
}

/// Evaluate the vector field at `x`.
pub fn eval_field(c: &CoefficientSet, x: &StateVector) -> Result<StateVector, ModelError> {
    c.validate()?;
    if !x.is_finite() {
        return Err(ModelError::NonFiniteInput(format!("state {:?}", x.as_array())));
    }
    Ok(field(c, x))
}

/// Raw analytic Jacobian, row i = gradient of the i-th field component.
#[inline]
pub(crate) fn jacobian(c: &CoefficientSet, x: &StateVector) -> [[f64; 4]; 4] {
    let (x1, x2, x3, x4) = (x.x1, x.x2, x.x3, x.x4);
    let q1 = x1 * x1;
    let q2 = x2 * x2;
    let q3 = x3 * x3;
    let q4 = x4 * x4;
    [
        [
            1.0 + 2.0 * c.b11 * x1 + 3.0 * c.c1 * q1,
            2.0 * c.b12 * x2,
            2.0 * c.b13 * x3,
            2.0 * c.b14 * x4,
        ],
        [
            x2 * (2.0 * c.b21 * x1 + c.d2),
            1.0 + c.b21 * q1 + 3.0 * c.b22 * q2 + c.b23 * q3 + c.b24 * q4 + c.d2 * x1,
            2.0 * c.b23 * x2 * x3,
            2.0 * c.b24 * x2 * x4,
        ],
        [
            x3 * (2.0 * c.b31 * x1 + c.d3),
            2.0 * c.b32 * x2 * x3,
            1.0 + c.b31 * q1 + c.b32 * q2 + 3.0 * c.b33 * q3 + c.b34 * q4
                + c.d3 * x1
                + 2.0 * c.c3 * x3 * x4,
            2.0 * c.b34 * x3 * x4 + c.c3 * q3,
        ],
        [
            x4 * (2.0 * c.b41 * x1 + c.d4),
            2.0 * c.b42 * x2 * x4,
            2.0 * c.b43 * x3 * x4 + c.c4 * q4,
            1.0 + c.b41 * q1 + c.b42 * q2 + c.b43 * q3 + 3.0 * c.b44 * q4
                + c.d4 * x1
                + 2.0 * c.c4 * x3 * x4,
        ],
    ]
}

/// Analytic Jacobian of the field at `x`; entry `(i, j)` is the partial
/// derivative of the i-th component with respect to `x_{j+1}`.
pub fn eval_jacobian(c: &CoefficientSet, x: &StateVector) -> Result<[[f64; 4]; 4], ModelError> {
    c.validate()?;
    if !x.is_finite() {
        return Err(ModelError::NonFiniteInput(format!("state {:?}", x.as_array())));
    }
    Ok(jacobian(c, x))
}

//! Native gate vocabulary and its hardware-level decomposition.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, Unitary};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct U3Params {
    pub theta: f64,
    pub phi: f64,
    pub lambda: f64,
}

impl U3Params {
    pub fn new(theta: f64, phi: f64, lambda: f64) -> Self {
        Self { theta, phi, lambda }
    }
}

/// Entries of `U3(theta, phi, lambda)` in row-major order.
#[inline]
pub(crate) fn u3_entries(theta: f64, phi: f64, lambda: f64) -> [Complex64; 4] {
    let (s, c) = (theta / 2.0).sin_cos();
    let el = Complex64::from_polar(1.0, lambda);
    let ep = Complex64::from_polar(1.0, phi);
    [
        Complex64::new(c, 0.0),
        -el * s,
        ep * s,
        ep * el * c,
    ]
}

pub fn u3_matrix(p: U3Params) -> Unitary {
    let e = u3_entries(p.theta, p.phi, p.lambda);
    Unitary::from_matrix_unchecked(ComplexMatrix::from_vec_unchecked(2, 2, e.to_vec()))
}

/// Controlled-NOT with the first (most-significant) qubit as control.
pub fn cnot_matrix() -> Unitary {
    let one = Complex64::new(1.0, 0.0);
    let mut m = ComplexMatrix::zeros(4, 4);
    let d = m.data_mut();
    d[0] = one;
    d[5] = one;
    d[11] = one;
    d[14] = one;
    Unitary::from_matrix_unchecked(m)
}

#[inline]
pub(crate) fn crz_diagonal(angle: f64) -> [Complex64; 4] {
    let one = Complex64::new(1.0, 0.0);
    [
        one,
        one,
        Complex64::from_polar(1.0, -angle / 2.0),
        Complex64::from_polar(1.0, angle / 2.0),
    ]
}

/// Controlled Z-rotation `diag(1, 1, e^{-i a/2}, e^{i a/2})`.
pub fn crz_matrix(angle: f64) -> Unitary {
    let diag = crz_diagonal(angle);
    let mut m = ComplexMatrix::zeros(4, 4);
    for (k, z) in diag.into_iter().enumerate() {
        m.data_mut()[k * 4 + k] = z;
    }
    Unitary::from_matrix_unchecked(m)
}

/// `Rz(a) = diag(e^{-i a/2}, e^{i a/2})`.
pub fn rz_matrix(angle: f64) -> Unitary {
    let data = vec![
        Complex64::from_polar(1.0, -angle / 2.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::from_polar(1.0, angle / 2.0),
    ];
    Unitary::from_matrix_unchecked(ComplexMatrix::from_vec_unchecked(2, 2, data))
}

pub fn rx_matrix(angle: f64) -> Unitary {
    let (s, c) = (angle / 2.0).sin_cos();
    let data = vec![
        Complex64::new(c, 0.0),
        Complex64::new(0.0, -s),
        Complex64::new(0.0, -s),
        Complex64::new(c, 0.0),
    ];
    Unitary::from_matrix_unchecked(ComplexMatrix::from_vec_unchecked(2, 2, data))
}

/// Gates the hardware executes directly: software Z rotations and the fixed
/// X(90) pulse.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NativeRotation {
    Rz(f64),
    Rx90,
}

impl NativeRotation {
    pub fn matrix(&self) -> Unitary {
        match *self {
            NativeRotation::Rz(a) => rz_matrix(a),
            NativeRotation::Rx90 => rx_matrix(FRAC_PI_2),
        }
    }
}

impl fmt::Display for NativeRotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NativeRotation::Rz(a) => write!(f, "rz({a:?})"),
            NativeRotation::Rx90 => write!(f, "rx(pi/2)"),
        }
    }
}

/// Rewrites `U3(theta, phi, lambda)` as `Rz . Rx(90) . Rz . Rx(90) . Rz`.
///
/// The sequence is in matrix-product order (leftmost factor first), so the
/// last element is applied first in time. The two outer Z angles carry
/// `phi + pi` and `lambda`, the middle one `theta + pi`; with those offsets
/// the product matches `u3_matrix(p)` up to global phase.
pub fn decompose_u3(p: U3Params) -> [NativeRotation; 5] {
    [
        NativeRotation::Rz(p.phi + PI),
        NativeRotation::Rx90,
        NativeRotation::Rz(p.theta + PI),
        NativeRotation::Rx90,
        NativeRotation::Rz(p.lambda),
    ]
}

/// Two-qubit expansion gate of a gate set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TwoQubitKind {
    Cnot,
    Crz,
}

impl TwoQubitKind {
    pub fn param_arity(self) -> usize {
        match self {
            TwoQubitKind::Cnot => 0,
            TwoQubitKind::Crz => 1,
        }
    }

    /// Whether swapping control and target changes the gate beyond local
    /// equivalence. CRZ is diagonal and symmetric up to local Z rotations.
    pub fn orientation_sensitive(self) -> bool {
        matches!(self, TwoQubitKind::Cnot)
    }
}

impl std::str::FromStr for TwoQubitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cnot" | "cx" => Ok(TwoQubitKind::Cnot),
            "crz" => Ok(TwoQubitKind::Crz),
            other => Err(Error::InvalidConfig(format!("unknown gate set `{other}`"))),
        }
    }
}

/// The native vocabulary used to build circuit structures.
///
/// With `control_simplification` on, the single-qubit gate placed after a
/// two-qubit gate's control wire drops its trailing Z rotation (2 instead of
/// 3 parameters); that rotation commutes through the control and is absorbed
/// by the gate on the other side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateSet {
    pub two_qubit_kind: TwoQubitKind,
    pub control_simplification: bool,
}

impl GateSet {
    pub fn cnot() -> Self {
        Self {
            two_qubit_kind: TwoQubitKind::Cnot,
            control_simplification: true,
        }
    }

    pub fn crz() -> Self {
        Self {
            two_qubit_kind: TwoQubitKind::Crz,
            control_simplification: true,
        }
    }

    pub fn with_control_simplification(mut self, on: bool) -> Self {
        self.control_simplification = on;
        self
    }

    pub fn two_qubit_param_arity(&self) -> usize {
        self.two_qubit_kind.param_arity()
    }

    pub fn single_qubit_param_arity(&self) -> usize {
        3
    }

    /// Arity of the gate that follows the control wire of an expansion.
    pub fn control_followup_arity(&self) -> usize {
        if self.control_simplification {
            2
        } else {
            3
        }
    }

    /// Parameters added by one expansion step.
    pub fn expansion_param_count(&self) -> usize {
        self.two_qubit_param_arity() + self.control_followup_arity() + self.single_qubit_param_arity()
    }
}

impl Default for GateSet {
    fn default() -> Self {
        Self::cnot()
    }
}

/// Lifts a 1- or 2-qubit gate onto `total_qubits` wires, acting as `gate` on
/// `qubits` (in the gate's own qubit order) and as identity elsewhere.
pub fn embed_gate(gate: &Unitary, qubits: &[usize], total_qubits: usize) -> Result<Unitary> {
    let k = qubits.len();
    if k == 0 || gate.dim() != 1 << k {
        return Err(Error::InvalidQubits(format!(
            "a {}-dimensional gate cannot act on {k} qubits",
            gate.dim()
        )));
    }
    for (a, &q) in qubits.iter().enumerate() {
        if q >= total_qubits {
            return Err(Error::InvalidQubits(format!(
                "qubit {q} out of range for {total_qubits} qubits"
            )));
        }
        if qubits[..a].contains(&q) {
            return Err(Error::InvalidQubits(format!("qubit {q} listed twice")));
        }
    }
    let n = 1usize << total_qubits;
    let shifts: Vec<usize> = qubits.iter().map(|&q| total_qubits - 1 - q).collect();
    let mask: usize = shifts.iter().map(|s| 1usize << s).sum();
    let local_index = |i: usize| -> usize {
        shifts
            .iter()
            .fold(0, |acc, &s| (acc << 1) | ((i >> s) & 1))
    };
    let g = gate.matrix();
    let mut out = ComplexMatrix::zeros(n, n);
    let data = out.data_mut();
    for row in 0..n {
        let lr = local_index(row);
        for col in 0..n {
            if row & !mask != col & !mask {
                continue;
            }
            data[row * n + col] = g.get(lr, local_index(col));
        }
    }
    Ok(Unitary::from_matrix_unchecked(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::hs_distance;

    #[test]
    fn u3_identity_and_x() {
        assert_eq!(u3_matrix(U3Params::new(0., 0., 0.)), Unitary::identity(2));
        let x = Unitary::new(ComplexMatrix::from_real(2, 2, &[0., 1., 1., 0.]).unwrap()).unwrap();
        let u = u3_matrix(U3Params::new(PI, 0., PI));
        assert!(hs_distance(&u, &x).unwrap() < 1e-15);
    }

    #[test]
    fn cnot_columns() {
        let c = cnot_matrix();
        // |10> -> |11>, |00> -> |00>
        assert_eq!(c.matrix().get(3, 2), Complex64::new(1., 0.));
        assert_eq!(c.matrix().get(0, 0), Complex64::new(1., 0.));
        assert_eq!(c.matmul(&c).unwrap(), Unitary::identity(4));
        assert!(c.matrix().is_unitary(1e-10).unwrap());
    }

    #[test]
    fn crz_basics() {
        assert_eq!(crz_matrix(0.0), Unitary::identity(4));
        let p = crz_matrix(0.7).matmul(&crz_matrix(-0.7)).unwrap();
        assert!(p.matrix().max_abs_diff(&ComplexMatrix::identity(4)).unwrap() < 1e-15);
    }

    #[test]
    fn decomposition_uses_two_pulses() {
        let seq = decompose_u3(U3Params::new(0.3, -1.2, 2.0));
        assert_eq!(seq.iter().filter(|r| **r == NativeRotation::Rx90).count(), 2);
        assert_eq!(seq.len(), 5);
    }

    #[test]
    fn embed_validation() {
        let c = cnot_matrix();
        assert!(embed_gate(&c, &[0, 3], 3).is_err());
        assert!(embed_gate(&c, &[1, 1], 3).is_err());
        assert!(embed_gate(&c, &[1], 3).is_err());
        assert_eq!(
            embed_gate(&Unitary::identity(2), &[2], 4).unwrap(),
            Unitary::identity(16)
        );
    }

    #[test]
    fn embed_adjacent_matches_kron() {
        let c = cnot_matrix();
        let e = embed_gate(&c, &[1, 2], 3).unwrap();
        assert_eq!(e, Unitary::identity(2).kron(&c));
        let e = embed_gate(&c, &[0, 1], 3).unwrap();
        assert_eq!(e, c.kron(&Unitary::identity(2)));
    }

    #[test]
    fn gate_set_arity() {
        assert_eq!(GateSet::cnot().expansion_param_count(), 5);
        assert_eq!(GateSet::cnot().with_control_simplification(false).expansion_param_count(), 6);
        assert_eq!(GateSet::crz().with_control_simplification(false).expansion_param_count(), 7);
        assert_eq!(GateSet::crz().expansion_param_count(), 6);
        assert_eq!("cx".parse::<TwoQubitKind>().unwrap(), TwoQubitKind::Cnot);
        assert!("iswap".parse::<TwoQubitKind>().is_err());
    }
}

//! Benchmark unitaries built from their textbook definitions.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::circuit::CircuitStructure;
use crate::error::{Error, Result};
use crate::gates::{cnot_matrix, embed_gate, GateSet};
use crate::matrix::{ComplexMatrix, Unitary};

/// Quantum Fourier transform on `n` qubits: `F[j, k] = w^{jk} / sqrt(N)`.
pub fn qft(num_qubits: usize) -> Unitary {
    let n = 1usize << num_qubits;
    let norm = 1.0 / (n as f64).sqrt();
    let data = (0..n * n)
        .map(|idx| {
            let (j, k) = (idx / n, idx % n);
            Complex64::from_polar(norm, 2.0 * PI * ((j * k) % n) as f64 / n as f64)
        })
        .collect();
    Unitary::from_matrix_unchecked(ComplexMatrix::from_vec_unchecked(n, n, data))
}

/// Permutation unitary sending basis state `k` to `map(k)`.
pub fn permutation(num_qubits: usize, map: impl Fn(usize) -> usize) -> Result<Unitary> {
    let n = 1usize << num_qubits;
    let mut m = ComplexMatrix::zeros(n, n);
    let mut hit = vec![false; n];
    for k in 0..n {
        let img = map(k);
        if img >= n || hit[img] {
            return Err(Error::InvalidConfig(format!("map is not a permutation at {k}")));
        }
        hit[img] = true;
        m.data_mut()[img * n + k] = Complex64::new(1.0, 0.0);
    }
    Ok(Unitary::from_matrix_unchecked(m))
}

fn bits3(k: usize) -> (usize, usize, usize) {
    ((k >> 2) & 1, (k >> 1) & 1, k & 1)
}

fn pack3(a: usize, b: usize, c: usize) -> usize {
    (a << 2) | (b << 1) | c
}

/// `|a b c> -> |a b (c xor ab)>`.
pub fn toffoli() -> Unitary {
    permutation(3, |k| {
        let (a, b, c) = bits3(k);
        pack3(a, b, c ^ (a & b))
    })
    .expect("toffoli is a permutation")
}

/// Controlled swap of qubits 1 and 2, controlled by qubit 0.
pub fn fredkin() -> Unitary {
    permutation(3, |k| {
        let (a, b, c) = bits3(k);
        if a == 1 { pack3(a, c, b) } else { k }
    })
    .expect("fredkin is a permutation")
}

/// `|a b c> -> |a (a xor b) (c xor ab)>`.
pub fn peres() -> Unitary {
    permutation(3, |k| {
        let (a, b, c) = bits3(k);
        pack3(a, a ^ b, c ^ (a & b))
    })
    .expect("peres is a permutation")
}

/// `|a b c> -> |a b (c xor (a or b))>`.
pub fn or_gate() -> Unitary {
    permutation(3, |k| {
        let (a, b, c) = bits3(k);
        pack3(a, b, c ^ (a | b))
    })
    .expect("or is a permutation")
}

fn hadamard() -> Unitary {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Unitary::from_matrix_unchecked(ComplexMatrix::from_real(2, 2, &[h, h, h, -h]).expect("2x2"))
}

fn ry(angle: f64) -> Unitary {
    let (s, c) = (angle / 2.0).sin_cos();
    Unitary::from_matrix_unchecked(ComplexMatrix::from_real(2, 2, &[c, -s, s, c]).expect("2x2"))
}

fn controlled(gate: &Unitary) -> Unitary {
    let mut m = ComplexMatrix::identity(4);
    for r in 0..2 {
        for c in 0..2 {
            m.data_mut()[(2 + r) * 4 + 2 + c] = gate.matrix().get(r, c);
        }
    }
    Unitary::from_matrix_unchecked(m)
}

/// Three-qubit HHL instance for `A = [[1.5, 0.5], [0.5, 1.5]]`.
///
/// Wires: 0 = ancilla, 1 = clock, 2 = system. One-bit phase estimation with
/// `exp(i pi A) = X` (a CNOT from clock to system), an eigenvalue-conditioned
/// `Ry` on the ancilla with `sin(theta/2) = 1/lambda`, then uncomputation.
pub fn hhl() -> Unitary {
    let h_clock = embed_gate(&hadamard(), &[1], 3).expect("valid wires");
    let cu = embed_gate(&cnot_matrix(), &[1, 2], 3).expect("valid wires");
    // clock |0> <-> lambda = 2, clock |1> <-> lambda = 1
    let theta_two = 2.0 * (0.5f64).asin();
    let theta_one = PI;
    let base = embed_gate(&ry(theta_two), &[0], 3).expect("valid wires");
    let boost = embed_gate(&controlled(&ry(theta_one - theta_two)), &[1, 0], 3).expect("valid wires");
    let qpe = h_clock.matmul(&cu).and_then(|m| m.matmul(&h_clock)).expect("square");
    let rot = boost.matmul(&base).expect("square");
    qpe.dagger()
        .matmul(&rot)
        .and_then(|m| m.matmul(&qpe))
        .expect("square")
}

/// Target produced by a random instantiation of a fixed structure; useful
/// when a known CNOT count is required.
pub fn from_structure(structure: &CircuitStructure, params: &[f64]) -> Result<Unitary> {
    structure.evaluate(params)
}

/// Builds a structure from a placement sequence.
pub fn structure_from_placements(num_qubits: usize, placements: &[(usize, usize)], gate_set: &GateSet) -> Result<CircuitStructure> {
    let mut s = CircuitStructure::root(num_qubits)?;
    for &p in placements {
        s = s.expand(p, gate_set);
    }
    Ok(s)
}

/// Names accepted by [`by_name`].
pub const BENCHMARK_NAMES: &[&str] = &["qft2", "qft3", "toffoli", "fredkin", "peres", "hhl", "or"];

pub fn by_name(name: &str) -> Option<Unitary> {
    match name.to_ascii_lowercase().as_str() {
        "qft2" => Some(qft(2)),
        "qft3" => Some(qft(3)),
        "qft4" => Some(qft(4)),
        "toffoli" => Some(toffoli()),
        "fredkin" => Some(fredkin()),
        "peres" => Some(peres()),
        "hhl" => Some(hhl()),
        "or" => Some(or_gate()),
        "identity2" => Some(Unitary::identity(4)),
        _ => None,
    }
}

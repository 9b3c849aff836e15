//! Circuit structures: the nodes of the synthesis tree.
//!
//! A structure is a time-ordered list of steps. The root is one
//! parameterized single-qubit gate per wire; every expansion appends a
//! two-qubit gate followed by parameterized single-qubit gates on the two
//! wires it touched. Evaluation multiplies later steps on the left.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gates::{crz_diagonal, cnot_matrix, crz_matrix, embed_gate, u3_entries, GateSet, TwoQubitKind};
use crate::matrix::{ComplexMatrix, Unitary};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepKind {
    /// Parameterized single-qubit gates as `(wire, arity)`. Arity 3 is a full
    /// U3; arity 2 is `U3(theta, phi, 0)`.
    SingleQubitLayer { wires: Vec<(usize, usize)> },
    TwoQubit {
        control: usize,
        target: usize,
        kind: TwoQubitKind,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub kind: StepKind,
    pub param_offset: usize,
}

impl Step {
    pub fn param_arity(&self) -> usize {
        match &self.kind {
            StepKind::SingleQubitLayer { wires } => wires.iter().map(|&(_, a)| a).sum(),
            StepKind::TwoQubit { kind, .. } => kind.param_arity(),
        }
    }

    pub fn params<'a>(&self, x: &'a [f64]) -> &'a [f64] {
        &x[self.param_offset..self.param_offset + self.param_arity()]
    }

    pub fn wires(&self) -> Vec<usize> {
        match &self.kind {
            StepKind::SingleQubitLayer { wires } => wires.iter().map(|&(w, _)| w).collect(),
            StepKind::TwoQubit { control, target, .. } => vec![*control, *target],
        }
    }

    /// Per-wire `(theta, phi, lambda)` triples of a single-qubit layer.
    pub fn u3_angles(&self, x: &[f64]) -> Vec<(usize, [f64; 3])> {
        let StepKind::SingleQubitLayer { wires } = &self.kind else {
            return Vec::new();
        };
        let mut offset = self.param_offset;
        wires
            .iter()
            .map(|&(w, arity)| {
                let angles = single_qubit_angles(&x[offset..offset + arity]);
                offset += arity;
                (w, angles)
            })
            .collect()
    }
}

#[inline]
fn single_qubit_angles(p: &[f64]) -> [f64; 3] {
    match *p {
        [t, ph, l] => [t, ph, l],
        [t, ph] => [t, ph, 0.0],
        _ => unreachable!("single-qubit arity is 2 or 3"),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CircuitStructure {
    num_qubits: usize,
    steps: Vec<Step>,
    param_count: usize,
}

impl CircuitStructure {
    /// One U3 on every wire, no two-qubit gates.
    pub fn root(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::InvalidConfig("circuit needs at least one qubit".into()));
        }
        Ok(Self {
            num_qubits,
            steps: vec![Step {
                kind: StepKind::SingleQubitLayer {
                    wires: (0..num_qubits).map(|w| (w, 3)).collect(),
                },
                param_offset: 0,
            }],
            param_count: 3 * num_qubits,
        })
    }

    /// Child structure: `self` + two-qubit gate on `placement` + single-qubit
    /// gates on both of its wires. The caller checks the placement against
    /// the topology.
    pub fn expand(&self, placement: (usize, usize), gate_set: &GateSet) -> Self {
        let (control, target) = placement;
        debug_assert!(control != target && control.max(target) < self.num_qubits);
        let mut steps = self.steps.clone();
        let mut offset = self.param_count;
        steps.push(Step {
            kind: StepKind::TwoQubit {
                control,
                target,
                kind: gate_set.two_qubit_kind,
            },
            param_offset: offset,
        });
        offset += gate_set.two_qubit_param_arity();
        let layer = Step {
            kind: StepKind::SingleQubitLayer {
                wires: vec![
                    (control, gate_set.control_followup_arity()),
                    (target, gate_set.single_qubit_param_arity()),
                ],
            },
            param_offset: offset,
        };
        offset += layer.param_arity();
        steps.push(layer);
        Self {
            num_qubits: self.num_qubits,
            steps,
            param_count: offset,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    /// Number of two-qubit gates (the search cost `g`).
    pub fn cnot_count(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s.kind, StepKind::TwoQubit { .. }))
            .count()
    }

    /// Upper bound `Q + 5 * CNOT` on the emitted gate count.
    pub fn total_gate_bound(&self) -> usize {
        self.num_qubits + 5 * self.cnot_count()
    }

    /// Two-qubit placements in time order.
    pub fn placements(&self) -> Vec<(usize, usize)> {
        self.steps
            .iter()
            .filter_map(|s| match s.kind {
                StepKind::TwoQubit { control, target, .. } => Some((control, target)),
                _ => None,
            })
            .collect()
    }

    fn check_params(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.param_count {
            return Err(Error::ParamLength {
                expected: self.param_count,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Full-register unitary of one step.
    pub fn step_unitary(&self, step: &Step, x: &[f64]) -> Result<Unitary> {
        let p = step.params(x);
        match &step.kind {
            StepKind::SingleQubitLayer { .. } => {
                let angles = step.u3_angles(x);
                let mut factors: Vec<Unitary> = vec![Unitary::identity(2); self.num_qubits];
                for (w, [t, ph, l]) in angles {
                    factors[w] = crate::gates::u3_matrix(crate::gates::U3Params::new(t, ph, l));
                }
                Ok(factors
                    .iter()
                    .skip(1)
                    .fold(factors[0].clone(), |acc, f| acc.kron(f)))
            }
            StepKind::TwoQubit { control, target, kind } => {
                let gate = match kind {
                    TwoQubitKind::Cnot => cnot_matrix(),
                    TwoQubitKind::Crz => crz_matrix(p[0]),
                };
                embed_gate(&gate, &[*control, *target], self.num_qubits)
            }
        }
    }

    /// `U(n, x)`: the product of every embedded step, newest on the left.
    ///
    /// This is the straightforward step-by-step evaluation; [`EvalPlan`]
    /// computes the same matrix with far fewer operations.
    pub fn evaluate(&self, x: &[f64]) -> Result<Unitary> {
        self.check_params(x)?;
        let mut acc = self.step_unitary(&self.steps[0], x)?;
        for step in &self.steps[1..] {
            acc = self.step_unitary(step, x)?.matmul(&acc)?;
        }
        Ok(acc)
    }

    /// Number of full-width matrix products done by [`Self::evaluate`].
    pub fn naive_full_width_products(&self) -> usize {
        self.steps.len() - 1
    }

    /// Groups steps into fused blocks so evaluation applies small local
    /// matrices instead of full-register products.
    pub fn eval_plan(&self) -> EvalPlan {
        EvalPlan::new(self)
    }
}

/// One fused unit of work in an [`EvalPlan`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PlanOp {
    /// Start from the Kronecker product of a layer that covers every wire.
    InitKron { step: usize },
    /// Consecutive steps confined to `wires` (one or two), multiplied into a
    /// `2^k x 2^k` block and applied to the accumulated rows.
    Local { wires: Vec<usize>, steps: Vec<usize> },
    /// A step touching more than two wires; embedded and multiplied in full.
    Full { step: usize },
}

/// Evaluation order for a structure.
#[derive(Clone, Debug)]
pub struct EvalPlan {
    num_qubits: usize,
    param_count: usize,
    steps: Vec<Step>,
    ops: Vec<PlanOp>,
}

type Block2 = [Complex64; 4];
type Block4 = [Complex64; 16];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

impl EvalPlan {
    fn new(structure: &CircuitStructure) -> Self {
        let n = structure.num_qubits;
        let mut ops = Vec::new();
        let mut current: Option<(Vec<usize>, Vec<usize>)> = None;
        for (idx, step) in structure.steps.iter().enumerate() {
            let wires = step.wires();
            if idx == 0 && wires.len() == n && matches!(step.kind, StepKind::SingleQubitLayer { .. }) && n > 2 {
                ops.push(PlanOp::InitKron { step: idx });
                continue;
            }
            if wires.len() > 2 {
                if let Some((w, s)) = current.take() {
                    ops.push(PlanOp::Local { wires: w, steps: s });
                }
                ops.push(PlanOp::Full { step: idx });
                continue;
            }
            match &mut current {
                Some((group, members)) => {
                    let mut union = group.clone();
                    for w in &wires {
                        if !union.contains(w) {
                            union.push(*w);
                        }
                    }
                    if union.len() <= 2 {
                        *group = union;
                        members.push(idx);
                    } else {
                        let (w, s) = current.take().unwrap();
                        ops.push(PlanOp::Local { wires: w, steps: s });
                        current = Some((wires, vec![idx]));
                    }
                }
                None => current = Some((wires, vec![idx])),
            }
        }
        if let Some((w, s)) = current {
            ops.push(PlanOp::Local { wires: w, steps: s });
        }
        Self {
            num_qubits: n,
            param_count: structure.param_count,
            steps: structure.steps.clone(),
            ops,
        }
    }

    pub fn ops(&self) -> &[PlanOp] {
        &self.ops
    }

    pub fn full_width_products(&self) -> usize {
        self.ops.iter().filter(|op| matches!(op, PlanOp::Full { .. })).count()
    }

    /// Complex multiply-adds spent by one evaluation.
    pub fn cost(&self) -> usize {
        let dim = 1usize << self.num_qubits;
        self.ops
            .iter()
            .map(|op| match op {
                PlanOp::InitKron { .. } => dim * dim,
                PlanOp::Local { wires, steps } => {
                    let k = 1usize << wires.len();
                    dim * dim * k + steps.len() * k * k * k
                }
                PlanOp::Full { .. } => dim * dim * dim,
            })
            .sum()
    }

    /// Multiply-adds for the step-by-step evaluation of the same structure.
    pub fn naive_cost(&self) -> usize {
        let dim = 1usize << self.num_qubits;
        (self.steps.len() - 1) * dim * dim * dim
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Unitary> {
        if x.len() != self.param_count {
            return Err(Error::ParamLength {
                expected: self.param_count,
                got: x.len(),
            });
        }
        let dim = 1usize << self.num_qubits;
        let mut buf = Vec::with_capacity(dim * dim);
        self.evaluate_into(x, &mut buf);
        Ok(Unitary::from_matrix_unchecked(ComplexMatrix::from_vec_unchecked(dim, dim, buf)))
    }

    /// Writes the row-major unitary into `buf`. `x` must have the right length.
    pub(crate) fn evaluate_into(&self, x: &[f64], buf: &mut Vec<Complex64>) {
        let n = self.num_qubits;
        let dim = 1usize << n;
        buf.clear();
        buf.resize(dim * dim, ZERO);
        let mut started = false;
        for op in &self.ops {
            match op {
                PlanOp::InitKron { step } => {
                    kron_layer_into(&self.steps[*step], x, n, buf);
                    started = true;
                }
                PlanOp::Local { wires, steps } => {
                    if !started {
                        for i in 0..dim {
                            buf[i * dim + i] = ONE;
                        }
                        started = true;
                    }
                    match wires.len() {
                        1 => {
                            let mut block: Block2 = [ONE, ZERO, ZERO, ONE];
                            for &s in steps {
                                let g = local1(&self.steps[s], x);
                                block = mul2(&g, &block);
                            }
                            apply1(buf, n, wires[0], &block);
                        }
                        _ => {
                            let mut block = identity4();
                            for &s in steps {
                                let g = local2(&self.steps[s], x, wires[0], wires[1]);
                                block = mul4(&g, &block);
                            }
                            apply2(buf, n, wires[0], wires[1], &block);
                        }
                    }
                }
                PlanOp::Full { step } => {
                    if !started {
                        for i in 0..dim {
                            buf[i * dim + i] = ONE;
                        }
                        started = true;
                    }
                    let s = &self.steps[*step];
                    let mut layer = vec![ZERO; dim * dim];
                    kron_layer_into(s, x, n, &mut layer);
                    let acc = ComplexMatrix::from_vec_unchecked(dim, dim, std::mem::take(buf));
                    let l = ComplexMatrix::from_vec_unchecked(dim, dim, layer);
                    *buf = l.matmul(&acc).expect("square").into_data();
                }
            }
        }
        if !started {
            for i in 0..dim {
                buf[i * dim + i] = ONE;
            }
        }
    }
}

fn identity4() -> Block4 {
    let mut b = [ZERO; 16];
    for i in 0..4 {
        b[i * 5] = ONE;
    }
    b
}

fn mul2(a: &Block2, b: &Block2) -> Block2 {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

fn mul4(a: &Block4, b: &Block4) -> Block4 {
    let mut out = [ZERO; 16];
    for i in 0..4 {
        for k in 0..4 {
            let aik = a[i * 4 + k];
            if aik == ZERO {
                continue;
            }
            for j in 0..4 {
                out[i * 4 + j] += aik * b[k * 4 + j];
            }
        }
    }
    out
}

fn kron2(a: &Block2, b: &Block2) -> Block4 {
    let mut out = [ZERO; 16];
    for i in 0..2 {
        for k in 0..2 {
            for j in 0..2 {
                for l in 0..2 {
                    out[(i * 2 + j) * 4 + k * 2 + l] = a[i * 2 + k] * b[j * 2 + l];
                }
            }
        }
    }
    out
}

fn layer_gate(step: &Step, x: &[f64], wire: usize) -> Block2 {
    let StepKind::SingleQubitLayer { wires } = &step.kind else {
        unreachable!("layer_gate on a two-qubit step")
    };
    let mut offset = step.param_offset;
    for &(w, arity) in wires {
        if w == wire {
            let [t, ph, l] = single_qubit_angles(&x[offset..offset + arity]);
            return u3_entries(t, ph, l);
        }
        offset += arity;
    }
    [ONE, ZERO, ZERO, ONE]
}

fn local1(step: &Step, x: &[f64]) -> Block2 {
    match &step.kind {
        StepKind::SingleQubitLayer { wires } => layer_gate(step, x, wires[0].0),
        StepKind::TwoQubit { .. } => unreachable!("two-qubit step in a one-wire block"),
    }
}

/// The step as a 4x4 block over `(w0, w1)`, with `w0` the more significant.
fn local2(step: &Step, x: &[f64], w0: usize, w1: usize) -> Block4 {
    match &step.kind {
        StepKind::SingleQubitLayer { .. } => kron2(&layer_gate(step, x, w0), &layer_gate(step, x, w1)),
        StepKind::TwoQubit { control, target, kind } => {
            let aligned = (*control, *target) == (w0, w1);
            let mut b = [ZERO; 16];
            match kind {
                TwoQubitKind::Cnot => {
                    // Basis (c, t): |10> <-> |11>; reversed order swaps |01> <-> |11>.
                    let perm: [usize; 4] = if aligned { [0, 1, 3, 2] } else { [0, 3, 2, 1] };
                    for (col, &row) in perm.iter().enumerate() {
                        b[row * 4 + col] = ONE;
                    }
                }
                TwoQubitKind::Crz => {
                    let d = crz_diagonal(x[step.param_offset]);
                    let order: [usize; 4] = if aligned { [0, 1, 2, 3] } else { [0, 2, 1, 3] };
                    for (i, &src) in order.iter().enumerate() {
                        b[i * 5] = d[src];
                    }
                }
            }
            b
        }
    }
}

/// Left-multiplies the row-major `dim x dim` matrix in `buf` by a one-qubit
/// gate on `wire`.
fn apply1(buf: &mut [Complex64], n: usize, wire: usize, g: &Block2) {
    let dim = 1usize << n;
    let bit = 1usize << (n - 1 - wire);
    for r0 in (0..dim).filter(|r| r & bit == 0) {
        let r1 = r0 | bit;
        for c in 0..dim {
            let a = buf[r0 * dim + c];
            let b = buf[r1 * dim + c];
            buf[r0 * dim + c] = g[0] * a + g[1] * b;
            buf[r1 * dim + c] = g[2] * a + g[3] * b;
        }
    }
}

/// Left-multiplies by a two-qubit block over `(w0, w1)`.
fn apply2(buf: &mut [Complex64], n: usize, w0: usize, w1: usize, g: &Block4) {
    let dim = 1usize << n;
    let b0 = 1usize << (n - 1 - w0);
    let b1 = 1usize << (n - 1 - w1);
    for base in (0..dim).filter(|r| r & (b0 | b1) == 0) {
        let rows = [base, base | b1, base | b0, base | b0 | b1];
        for c in 0..dim {
            let v = [
                buf[rows[0] * dim + c],
                buf[rows[1] * dim + c],
                buf[rows[2] * dim + c],
                buf[rows[3] * dim + c],
            ];
            for (i, &r) in rows.iter().enumerate() {
                let gi = &g[i * 4..i * 4 + 4];
                buf[r * dim + c] = gi[0] * v[0] + gi[1] * v[1] + gi[2] * v[2] + gi[3] * v[3];
            }
        }
    }
}

/// Writes the Kronecker product of a single-qubit layer (identity on absent
/// wires) into `out`.
fn kron_layer_into(step: &Step, x: &[f64], n: usize, out: &mut Vec<Complex64>) {
    let dim = 1usize << n;
    let gates: Vec<Block2> = (0..n).map(|w| layer_gate(step, x, w)).collect();
    out.clear();
    out.resize(dim * dim, ZERO);
    for r in 0..dim {
        for c in 0..dim {
            let mut v = ONE;
            for (w, g) in gates.iter().enumerate() {
                let shift = n - 1 - w;
                v *= g[((r >> shift) & 1) * 2 + ((c >> shift) & 1)];
            }
            out[r * dim + c] = v;
        }
    }
}

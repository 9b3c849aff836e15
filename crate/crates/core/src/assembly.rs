//! OpenQASM 2 text for synthesized circuits, and a parser for the same
//! subset so emitted files can be re-simulated.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::{self, Write as _};

use crate::circuit::{CircuitStructure, StepKind};
use crate::error::{Error, Result};
use crate::gates::{
    cnot_matrix, crz_matrix, decompose_u3, embed_gate, rx_matrix, rz_matrix, u3_matrix, NativeRotation, TwoQubitKind,
    U3Params,
};
use crate::matrix::Unitary;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Instruction {
    U3 { qubit: usize, theta: f64, phi: f64, lambda: f64 },
    Rz { qubit: usize, angle: f64 },
    /// `rx(pi/2)`, the fixed X pulse.
    Rx90 { qubit: usize },
    Cx { control: usize, target: usize },
    Crz { control: usize, target: usize, angle: f64 },
}

impl Instruction {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Instruction::U3 { qubit, .. } | Instruction::Rz { qubit, .. } | Instruction::Rx90 { qubit } => vec![qubit],
            Instruction::Cx { control, target } | Instruction::Crz { control, target, .. } => vec![control, target],
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Instruction::Cx { .. } | Instruction::Crz { .. })
    }

    pub fn matrix(&self) -> Unitary {
        match *self {
            Instruction::U3 { theta, phi, lambda, .. } => u3_matrix(U3Params::new(theta, phi, lambda)),
            Instruction::Rz { angle, .. } => rz_matrix(angle),
            Instruction::Rx90 { .. } => rx_matrix(FRAC_PI_2),
            Instruction::Cx { .. } => cnot_matrix(),
            Instruction::Crz { angle, .. } => crz_matrix(angle),
        }
    }
}

// `{:?}` prints the shortest decimal that parses back to the same f64.
impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Instruction::U3 { qubit, theta, phi, lambda } => write!(f, "u3({theta:?},{phi:?},{lambda:?}) q[{qubit}];"),
            Instruction::Rz { qubit, angle } => write!(f, "rz({angle:?}) q[{qubit}];"),
            Instruction::Rx90 { qubit } => write!(f, "rx(pi/2) q[{qubit}];"),
            Instruction::Cx { control, target } => write!(f, "cx q[{control}],q[{target}];"),
            Instruction::Crz { control, target, angle } => write!(f, "crz({angle:?}) q[{control}],q[{target}];"),
        }
    }
}

/// A circuit as an ordered instruction list (first instruction acts first).
#[derive(Clone, Debug, PartialEq)]
pub struct EmittedCircuit {
    pub num_qubits: usize,
    pub instructions: Vec<Instruction>,
}

impl EmittedCircuit {
    /// Lowers an instantiated structure. With `native`, every `u3` becomes
    /// `rz`/`rx(pi/2)` pulses; `rz(0)` pulses are dropped.
    pub fn from_solution(structure: &CircuitStructure, params: &[f64], native: bool) -> Result<Self> {
        if params.len() != structure.param_count() {
            return Err(Error::ParamLength {
                expected: structure.param_count(),
                got: params.len(),
            });
        }
        let mut instructions = Vec::new();
        for step in structure.steps() {
            match &step.kind {
                StepKind::SingleQubitLayer { .. } => {
                    for (qubit, [theta, phi, lambda]) in step.u3_angles(params) {
                        if native {
                            // Matrix-product order reversed into time order.
                            for rot in decompose_u3(U3Params::new(theta, phi, lambda)).iter().rev() {
                                match *rot {
                                    NativeRotation::Rz(angle) if angle == 0.0 => {}
                                    NativeRotation::Rz(angle) => instructions.push(Instruction::Rz { qubit, angle }),
                                    NativeRotation::Rx90 => instructions.push(Instruction::Rx90 { qubit }),
                                }
                            }
                        } else {
                            instructions.push(Instruction::U3 { qubit, theta, phi, lambda });
                        }
                    }
                }
                StepKind::TwoQubit { control, target, kind } => {
                    let (control, target) = (*control, *target);
                    instructions.push(match kind {
                        TwoQubitKind::Cnot => Instruction::Cx { control, target },
                        TwoQubitKind::Crz => Instruction::Crz {
                            control,
                            target,
                            angle: step.params(params)[0],
                        },
                    });
                }
            }
        }
        Ok(Self {
            num_qubits: structure.num_qubits(),
            instructions,
        })
    }

    pub fn two_qubit_count(&self) -> usize {
        self.instructions.iter().filter(|i| i.is_two_qubit()).count()
    }

    pub fn cx_count(&self) -> usize {
        self.instructions
            .iter()
            .filter(|i| matches!(i, Instruction::Cx { .. }))
            .count()
    }

    pub fn to_qasm(&self) -> String {
        let mut out = String::from("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
        let _ = writeln!(out, "qreg q[{}];", self.num_qubits);
        for inst in &self.instructions {
            let _ = writeln!(out, "{inst}");
        }
        out
    }

    /// Parses the subset produced by [`EmittedCircuit::to_qasm`]. Angles may
    /// be decimal literals or simple multiples of `pi`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut num_qubits = None;
        let mut instructions = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split("//").next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some(stmt) = line.strip_suffix(';') else {
                return Err(Error::parse(line_no, "missing `;`"));
            };
            let stmt = stmt.trim();
            if stmt.starts_with("OPENQASM") || stmt.starts_with("include") {
                continue;
            }
            if let Some(decl) = stmt.strip_prefix("qreg") {
                if num_qubits.is_some() {
                    return Err(Error::parse(line_no, "only one register is supported"));
                }
                let n = parse_register(decl.trim(), line_no)?;
                if n == 0 {
                    return Err(Error::parse(line_no, "register must have at least one qubit"));
                }
                num_qubits = Some(n);
                continue;
            }
            let Some(n) = num_qubits else {
                return Err(Error::parse(line_no, "instruction before `qreg` declaration"));
            };
            let inst = parse_instruction(stmt, line_no)?;
            let qubits = inst.qubits();
            if let Some(&q) = qubits.iter().find(|&&q| q >= n) {
                return Err(Error::parse(line_no, format!("qubit {q} out of range for {n} qubits")));
            }
            if qubits.len() == 2 && qubits[0] == qubits[1] {
                return Err(Error::parse(line_no, "control and target must differ"));
            }
            instructions.push(inst);
        }
        let num_qubits = num_qubits.ok_or_else(|| Error::parse(text.lines().count().max(1), "no `qreg` declaration"))?;
        Ok(Self { num_qubits, instructions })
    }

    /// Simulates the instruction list into its unitary.
    pub fn unitary(&self) -> Result<Unitary> {
        let mut u = Unitary::identity(1 << self.num_qubits);
        for inst in &self.instructions {
            u = embed_gate(&inst.matrix(), &inst.qubits(), self.num_qubits)?.matmul(&u)?;
        }
        Ok(u)
    }
}

fn parse_register(decl: &str, line_no: usize) -> Result<usize> {
    decl.strip_prefix("q[")
        .and_then(|r| r.strip_suffix(']'))
        .and_then(|n| n.trim().parse().ok())
        .ok_or_else(|| Error::parse(line_no, format!("malformed register `{decl}`")))
}

fn parse_qubit(arg: &str, line_no: usize) -> Result<usize> {
    parse_register(arg.trim(), line_no).map_err(|_| Error::parse(line_no, format!("malformed qubit `{}`", arg.trim())))
}

/// Decimal literal, `pi`, `-pi`, `pi/k`, `k*pi` or `k*pi/m`.
pub fn parse_angle(text: &str) -> std::result::Result<f64, String> {
    let t = text.trim();
    if let Ok(v) = t.parse::<f64>() {
        return Ok(v);
    }
    let (sign, body) = match t.strip_prefix('-') {
        Some(rest) => (-1.0, rest.trim()),
        None => (1.0, t),
    };
    let bad = || format!("cannot parse angle `{t}`");
    let Some(pos) = body.find("pi") else {
        return Err(bad());
    };
    let (before, after) = (&body[..pos], &body[pos + 2..]);
    let factor = match before.trim() {
        "" => 1.0,
        b => b.strip_suffix('*').and_then(|n| n.trim().parse::<f64>().ok()).ok_or_else(bad)?,
    };
    let divisor = match after.trim() {
        "" => 1.0,
        a => a.strip_prefix('/').and_then(|n| n.trim().parse::<f64>().ok()).ok_or_else(bad)?,
    };
    Ok(sign * factor * PI / divisor)
}

fn parse_instruction(stmt: &str, line_no: usize) -> Result<Instruction> {
    let split = match stmt.find(')') {
        Some(close) => close + 1,
        None => stmt.find(char::is_whitespace).unwrap_or(stmt.len()),
    };
    let (head, operands) = stmt.split_at(split);
    let (name, args) = match head.find('(') {
        Some(open) => {
            let inner = head[open + 1..]
                .strip_suffix(')')
                .ok_or_else(|| Error::parse(line_no, "unbalanced parentheses"))?;
            (&head[..open], Some(inner))
        }
        None => (head, None),
    };
    let angles: Vec<f64> = match args {
        Some(a) => a
            .split(',')
            .map(|s| parse_angle(s).map_err(|m| Error::parse(line_no, m)))
            .collect::<Result<_>>()?,
        None => Vec::new(),
    };
    let qubits: Vec<usize> = operands
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_qubit(s, line_no))
        .collect::<Result<_>>()?;
    let arity = |n_angles: usize, n_qubits: usize| -> Result<()> {
        if angles.len() != n_angles || qubits.len() != n_qubits {
            return Err(Error::parse(
                line_no,
                format!("`{name}` takes {n_angles} angle(s) and {n_qubits} qubit(s)"),
            ));
        }
        Ok(())
    };
    match name.trim() {
        "u3" => {
            arity(3, 1)?;
            Ok(Instruction::U3 {
                qubit: qubits[0],
                theta: angles[0],
                phi: angles[1],
                lambda: angles[2],
            })
        }
        "rz" => {
            arity(1, 1)?;
            Ok(Instruction::Rz {
                qubit: qubits[0],
                angle: angles[0],
            })
        }
        "rx" => {
            arity(1, 1)?;
            if (angles[0] - FRAC_PI_2).abs() > 1e-12 {
                return Err(Error::parse(line_no, "only `rx(pi/2)` is supported"));
            }
            Ok(Instruction::Rx90 { qubit: qubits[0] })
        }
        "cx" => {
            arity(0, 2)?;
            Ok(Instruction::Cx {
                control: qubits[0],
                target: qubits[1],
            })
        }
        "crz" => {
            arity(1, 2)?;
            Ok(Instruction::Crz {
                control: qubits[0],
                target: qubits[1],
                angle: angles[0],
            })
        }
        other => Err(Error::parse(line_no, format!("unknown instruction `{other}`"))),
    }
}

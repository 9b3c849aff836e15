//! Qubit coupling graphs.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::gates::TwoQubitKind;

/// Undirected, connected coupling graph. Edges are stored as `(low, high)`
/// pairs in sorted order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topology {
    num_qubits: usize,
    edges: Vec<(usize, usize)>,
}

impl Topology {
    pub fn new(num_qubits: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::InvalidTopology("need at least one qubit".into()));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= num_qubits || b >= num_qubits {
                return Err(Error::InvalidTopology(format!(
                    "edge ({a}, {b}) out of range for {num_qubits} qubits"
                )));
            }
            if a == b {
                return Err(Error::InvalidTopology(format!("self-loop on qubit {a}")));
            }
            if !set.insert((a.min(b), a.max(b))) {
                return Err(Error::InvalidTopology(format!("duplicate edge ({a}, {b})")));
            }
        }
        let topo = Self {
            num_qubits,
            edges: set.into_iter().collect(),
        };
        if !topo.is_connected() {
            return Err(Error::InvalidTopology("coupling graph is disconnected".into()));
        }
        Ok(topo)
    }

    pub fn line(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidTopology("line needs at least one qubit".into()));
        }
        Self::new(n, (1..n).map(|i| (i - 1, i)))
    }

    pub fn triangle() -> Self {
        Self {
            num_qubits: 3,
            edges: vec![(0, 1), (0, 2), (1, 2)],
        }
    }

    pub fn fully_connected(n: usize) -> Result<Self> {
        Self::new(n, (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))))
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.num_qubits];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(q) = stack.pop() {
            for &(a, b) in &self.edges {
                let other = if a == q {
                    b
                } else if b == q {
                    a
                } else {
                    continue;
                };
                if !seen[other] {
                    seen[other] = true;
                    stack.push(other);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Two-qubit gate placements as `(control, target)`, sorted by control
    /// then target.
    ///
    /// Each edge yields its canonical orientation (lower index controls).
    /// With `both_orientations`, orientation-sensitive gates also get the
    /// reversed pair; symmetric gates never do.
    pub fn placements(&self, kind: TwoQubitKind, both_orientations: bool) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self.edges.clone();
        if both_orientations && kind.orientation_sensitive() {
            out.extend(self.edges.iter().map(|&(a, b)| (b, a)));
        }
        out.sort_unstable();
        out
    }

    /// Parses the edge-list format: first line `n`, then one `i j` per line.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (first, header) = lines.next().ok_or_else(|| Error::parse(1, "empty edge list"))?;
        let n: usize = header
            .parse()
            .map_err(|_| Error::parse(first, format!("expected qubit count, got `{header}`")))?;
        let mut edges = Vec::new();
        for (line_no, line) in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [a, b] = parts[..] else {
                return Err(Error::parse(line_no, "expected `i j`"));
            };
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::parse(line_no, format!("invalid qubit index `{s}`")))
            };
            edges.push((parse(a)?, parse(b)?));
        }
        Self::new(n, edges)
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.num_qubits)?;
        for (a, b) in &self.edges {
            writeln!(f, "{a} {b}")?;
        }
        Ok(())
    }
}

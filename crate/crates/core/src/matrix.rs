//! Dense complex matrices, unitaries, and the Hilbert-Schmidt distance.
//!
//! Storage is row-major. Qubit 0 is the most-significant bit of a basis
//! index: for a 3-qubit register the state `|q0 q1 q2>` sits at index
//! `q0*4 + q1*2 + q2`. Every module in the crate shares this convention.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance used when validating unitarity.
pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "matrix must be non-empty, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite {
                row: k / cols,
                col: k % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows; all rows must share a length.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Builds a matrix from real entries.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::new(
            rows,
            cols,
            data.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub(crate) fn from_vec_unchecked(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_vec_unchecked(rows, cols, vec![Complex64::new(0.0, 0.0); rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.cols + col]
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let (n, m, p) = (self.rows, self.cols, other.cols);
        let mut out = vec![Complex64::new(0.0, 0.0); n * p];
        for i in 0..n {
            let out_row = &mut out[i * p..(i + 1) * p];
            for k in 0..m {
                let a = self.data[i * m + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * p..(k + 1) * p];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(Self::from_vec_unchecked(n, p, out))
    }

    /// Kronecker product: `kron(a, b)[i*p + j, k*q + l] = a[i, k] * b[j, l]`.
    pub fn kron(&self, other: &ComplexMatrix) -> ComplexMatrix {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = vec![Complex64::new(0.0, 0.0); rows * cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                for j in 0..other.rows {
                    let row = i * other.rows + j;
                    let base = row * cols + k * other.cols;
                    for l in 0..other.cols {
                        out[base + l] = a * other.get(j, l);
                    }
                }
            }
        }
        Self::from_vec_unchecked(rows, cols, out)
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> ComplexMatrix {
        let mut out = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.push(self.get(i, j).conj());
            }
        }
        Self::from_vec_unchecked(self.cols, self.rows, out)
    }

    pub fn scale(&self, factor: Complex64) -> ComplexMatrix {
        Self::from_vec_unchecked(
            self.rows,
            self.cols,
            self.data.iter().map(|z| z * factor).collect(),
        )
    }

    pub fn trace(&self) -> Result<Complex64> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok((0..self.rows).map(|i| self.get(i, i)).sum())
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> Result<f64> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// `max |m^dagger m - I|` over all entries.
    pub fn unitarity_deviation(&self) -> Result<f64> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let gram = self.dagger().matmul(self)?;
        gram.max_abs_diff(&ComplexMatrix::identity(self.rows))
    }

    pub fn is_unitary(&self, tol: f64) -> Result<bool> {
        Ok(self.unitarity_deviation()? <= tol)
    }
}

impl fmt::Display for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| format_complex(self.get(i, j))).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Square complex matrix whose unitarity was checked at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Unitary {
    matrix: ComplexMatrix,
}

impl Unitary {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, UNITARY_TOL)
    }

    pub fn with_tolerance(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        let deviation = matrix.unitarity_deviation()?;
        if deviation > tol {
            return Err(Error::NotUnitary {
                deviation,
                tolerance: tol,
            });
        }
        Ok(Self { matrix })
    }

    /// Wraps a matrix known to be unitary by construction.
    pub(crate) fn from_matrix_unchecked(matrix: ComplexMatrix) -> Self {
        debug_assert!(matrix.is_square());
        Self { matrix }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_matrix_unchecked(ComplexMatrix::identity(dim))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows
    }

    /// Number of qubits, if the dimension is a power of two.
    pub fn num_qubits(&self) -> Option<usize> {
        let d = self.dim();
        d.is_power_of_two().then(|| d.trailing_zeros() as usize)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dagger(&self) -> Unitary {
        Self::from_matrix_unchecked(self.matrix.dagger())
    }

    pub fn matmul(&self, other: &Unitary) -> Result<Unitary> {
        Ok(Self::from_matrix_unchecked(self.matrix.matmul(&other.matrix)?))
    }

    pub fn kron(&self, other: &Unitary) -> Unitary {
        Self::from_matrix_unchecked(self.matrix.kron(&other.matrix))
    }

    /// Multiplies by a unit-modulus phase `e^{i phase}`.
    pub fn with_global_phase(&self, phase: f64) -> Unitary {
        Self::from_matrix_unchecked(self.matrix.scale(Complex64::from_polar(1.0, phase)))
    }

    /// Applies the unitary to a state vector.
    pub fn apply(&self, state: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.dim();
        if state.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "state of length {} for a {n}-dimensional unitary",
                state.len()
            )));
        }
        Ok((0..n)
            .map(|i| {
                self.matrix.data[i * n..(i + 1) * n]
                    .iter()
                    .zip(state)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }
}

/// `|Tr(a^dagger b)|` without forming the product.
pub(crate) fn trace_inner_abs(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| x.conj() * y)
        .sum::<Complex64>()
        .norm()
}

/// Hilbert-Schmidt distance `1 - |Tr(u^dagger target)| / N`.
///
/// The modulus makes the distance blind to global phase, so it is zero
/// exactly when `u` and `target` agree up to a phase. Values lie in `[0, 1]`.
pub fn hs_distance(u: &Unitary, target: &Unitary) -> Result<f64> {
    if u.dim() != target.dim() {
        return Err(Error::DimensionMismatch(format!(
            "distance between {}x{0} and {}x{1} unitaries",
            u.dim(),
            target.dim()
        )));
    }
    Ok(hs_distance_raw(&u.matrix, &target.matrix))
}

#[inline]
pub(crate) fn hs_distance_raw(u: &ComplexMatrix, target: &ComplexMatrix) -> f64 {
    (1.0 - trace_inner_abs(u, target) / u.rows as f64).max(0.0)
}

/// Checks `max |m^dagger m - I| <= tol`; errors on non-square input.
pub fn is_unitary(m: &ComplexMatrix, tol: f64) -> Result<bool> {
    m.is_unitary(tol)
}

/// Formats a complex number as `a+bi` / `a-bi` with round-trip precision.
pub fn format_complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:?}{}{:?}i", z.re, sign, z.im.abs())
}

/// Parses `a+bi`, `a-bi`, `bi`, or a bare real `a`. Scientific notation is
/// accepted in either part.
pub fn parse_complex(token: &str) -> std::result::Result<Complex64, String> {
    let s = token.trim();
    if s.is_empty() {
        return Err("empty complex literal".into());
    }
    let Some(body) = s.strip_suffix(['i', 'j']) else {
        return s
            .parse::<f64>()
            .map(|re| Complex64::new(re, 0.0))
            .map_err(|_| format!("invalid number `{s}`"));
    };
    // Split at the last sign that is not a leading sign or an exponent sign.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let parse_imag = |t: &str| -> std::result::Result<f64, String> {
        match t {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => t.parse::<f64>().map_err(|_| format!("invalid imaginary part in `{s}`")),
        }
    };
    let (re, im) = match split {
        Some(k) => (
            body[..k]
                .parse::<f64>()
                .map_err(|_| format!("invalid real part in `{s}`"))?,
            parse_imag(&body[k..])?,
        ),
        None => (0.0, parse_imag(body)?),
    };
    Ok(Complex64::new(re, im))
}

/// Parses the unitary text format: a first line holding `dim`, then `dim`
/// rows of `dim` whitespace-separated complex entries. Blank lines and
/// lines starting with `#` are ignored.
pub fn parse_matrix_text(text: &str) -> Result<ComplexMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (first_line, header) = lines.next().ok_or_else(|| Error::parse(1, "empty input"))?;
    let dim: usize = header
        .parse()
        .map_err(|_| Error::parse(first_line, format!("expected dimension, got `{header}`")))?;
    if dim == 0 {
        return Err(Error::parse(first_line, "dimension must be positive"));
    }
    let mut data = Vec::with_capacity(dim * dim);
    let mut seen = 0;
    for (line_no, line) in lines {
        if seen == dim {
            return Err(Error::parse(line_no, "more rows than the declared dimension"));
        }
        let row: Vec<&str> = line.split_whitespace().collect();
        if row.len() != dim {
            return Err(Error::parse(
                line_no,
                format!("expected {dim} entries, found {}", row.len()),
            ));
        }
        for tok in row {
            data.push(parse_complex(tok).map_err(|m| Error::parse(line_no, m))?);
        }
        seen += 1;
    }
    if seen != dim {
        return Err(Error::parse(
            first_line,
            format!("declared dimension {dim} but found {seen} rows"),
        ));
    }
    ComplexMatrix::new(dim, dim, data)
}

pub fn format_matrix_text(m: &ComplexMatrix) -> String {
    format!("{}\n{m}", m.rows)
}

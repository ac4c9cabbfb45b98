//! Tensorized Pauli-string decomposition of dense real matrices.
//!
//! A matrix of dimension `2^q` is expanded as `M = Σ_P c_P · P` over
//! tensor products of `{I, X, Y, Z}` with `c_P = tr(P·M) / 2^q`. The
//! decomposition recurses over quadrants: with `M = [[A, B], [C, D]]`,
//! the sub-blocks attached to `I, X, Y, Z` on the leading qubit are
//! `(A+D)/2`, `(B+C)/2`, `i(B-C)/2`, `(A-D)/2`. Zero quadrant
//! combinations prune entire subtrees, which is what makes the sparse
//! operators here cheap to decompose.
//!
//! The leftmost character of a string acts on the most significant bit of
//! the basis index. Real nonsymmetric input yields purely imaginary
//! coefficients on strings with an odd number of `Y` factors.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Coefficients with magnitude at or below this are dropped by default.
pub const DEFAULT_PRUNE_THRESHOLD: f64 = 1e-12;

/// Single-qubit Pauli axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Axis {
    I,
    X,
    Y,
    Z,
}

impl Axis {
    fn as_char(self) -> char {
        match self {
            Axis::I => 'I',
            Axis::X => 'X',
            Axis::Y => 'Y',
            Axis::Z => 'Z',
        }
    }
}

/// Tensor product of single-qubit Paulis; leftmost axis acts on the most
/// significant index bit.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString {
    axes: Vec<Axis>,
}

impl PauliString {
    pub fn new(axes: Vec<Axis>) -> Self {
        Self { axes }
    }

    pub fn len(&self) -> usize {
        self.axes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axes.is_empty()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    /// Number of `Y` factors; odd counts carry imaginary coefficients for
    /// real input matrices.
    pub fn y_count(&self) -> usize {
        self.axes.iter().filter(|a| **a == Axis::Y).count()
    }

    /// Image of basis index `col` under this string: the row index it maps
    /// to and the matrix element value.
    ///
    /// Each Pauli has one nonzero per column, so the string's dense matrix
    /// has entry `(row, col) = value` for every column.
    pub fn column_action(&self, col: usize) -> (usize, Complex64) {
        let q = self.axes.len();
        let mut row = col;
        let mut value = Complex64::new(1.0, 0.0);
        for (k, axis) in self.axes.iter().enumerate() {
            let bit_pos = q - 1 - k;
            let bit = (col >> bit_pos) & 1;
            match axis {
                Axis::I => {}
                Axis::X => row ^= 1 << bit_pos,
                Axis::Y => {
                    row ^= 1 << bit_pos;
                    // Y = [[0, -i], [i, 0]]: column 0 maps up with +i, column 1 with -i.
                    value *= if bit == 0 {
                        Complex64::new(0.0, 1.0)
                    } else {
                        Complex64::new(0.0, -1.0)
                    };
                }
                Axis::Z => {
                    if bit == 1 {
                        value = -value;
                    }
                }
            }
        }
        (row, value)
    }

    /// Dense matrix of the string.
    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.axes.len();
        let mut m = DMatrix::zeros(dim, dim);
        for col in 0..dim {
            let (row, v) = self.column_action(col);
            m[(row, col)] = v;
        }
        m
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.axes {
            write!(f, "{}", a.as_char())?;
        }
        Ok(())
    }
}

/// Weighted sum of Pauli strings on a fixed qubit count.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    qubits: usize,
    terms: BTreeMap<PauliString, Complex64>,
}

impl PauliSum {
    pub fn empty(qubits: usize) -> Self {
        Self {
            qubits,
            terms: BTreeMap::new(),
        }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    /// Retained terms in lexicographic string order.
    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, Complex64)> {
        self.terms.iter().map(|(k, v)| (k, *v))
    }

    pub fn coefficient(&self, s: &PauliString) -> Complex64 {
        self.terms.get(s).copied().unwrap_or_default()
    }

    /// Number of retained terms.
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Largest imaginary magnitude over all coefficients.
    pub fn max_imag(&self) -> f64 {
        self.terms
            .values()
            .map(|c| c.im.abs())
            .fold(0.0, f64::max)
    }

    /// Term-by-term sum, re-pruned at `prune`.
    pub fn add(&self, other: &PauliSum, prune: f64) -> Result<PauliSum> {
        if self.qubits != other.qubits {
            return Err(Error::DimensionMismatch(format!(
                "cannot add sums on {} and {} qubits",
                self.qubits, other.qubits
            )));
        }
        let mut terms = self.terms.clone();
        for (s, c) in &other.terms {
            *terms.entry(s.clone()).or_default() += c;
        }
        terms.retain(|_, c| c.norm() > prune);
        Ok(PauliSum {
            qubits: self.qubits,
            terms,
        })
    }

    /// Apply the sum to a complex vector without densifying.
    pub fn apply_vec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "vector length {} vs operator dimension {}",
                v.len(),
                self.dim()
            )));
        }
        let mut out = vec![Complex64::default(); v.len()];
        for (s, c) in &self.terms {
            for col in 0..v.len() {
                let (row, val) = s.column_action(col);
                out[row] += c * val * v[col];
            }
        }
        Ok(out)
    }

    /// Export one term per line: `STRING coeff_re coeff_im`, sorted
    /// lexicographically by string.
    pub fn export_terms(&self) -> String {
        let mut s = String::new();
        for (p, c) in &self.terms {
            s.push_str(&format!("{} {:.17e} {:.17e}\n", p, c.re, c.im));
        }
        s
    }
}

/// Decompose a real square matrix, zero-padded to the next power of two.
pub fn decompose(m: &DMatrix<f64>, prune: f64) -> PauliSum {
    let side = m.nrows().max(m.ncols()).max(1);
    let dim = side.next_power_of_two();
    let qubits = dim.trailing_zeros() as usize;
    let mut padded = DMatrix::<Complex64>::zeros(dim, dim);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            padded[(i, j)] = Complex64::new(m[(i, j)], 0.0);
        }
    }
    let mut sum = PauliSum::empty(qubits);
    let mut prefix = Vec::with_capacity(qubits);
    recurse(&padded, prune, &mut prefix, &mut sum.terms);
    sum
}

fn recurse(
    block: &DMatrix<Complex64>,
    prune: f64,
    prefix: &mut Vec<Axis>,
    out: &mut BTreeMap<PauliString, Complex64>,
) {
    let dim = block.nrows();
    if dim == 1 {
        let c = block[(0, 0)];
        if c.norm() > prune {
            out.insert(PauliString::new(prefix.clone()), c);
        }
        return;
    }
    let half = dim / 2;
    let a = block.view((0, 0), (half, half));
    let b = block.view((0, half), (half, half));
    let c = block.view((half, 0), (half, half));
    let d = block.view((half, half), (half, half));

    let imag = Complex64::new(0.0, 1.0);
    let combos: [(Axis, DMatrix<Complex64>); 4] = [
        (Axis::I, (a + d).map(|v| v * 0.5)),
        (Axis::X, (b + c).map(|v| v * 0.5)),
        (Axis::Y, (b - c).map(|v| v * 0.5 * imag)),
        (Axis::Z, (a - d).map(|v| v * 0.5)),
    ];
    for (axis, sub) in combos {
        // Every leaf coefficient below is bounded by the block's max-abs,
        // so a sub-threshold block cannot contribute retained terms.
        let max_abs = sub.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if max_abs <= prune {
            continue;
        }
        prefix.push(axis);
        recurse(&sub, prune, prefix, out);
        prefix.pop();
    }
}

/// Dense matrix `Σ c_P · P` of a sum.
pub fn reconstruct(sum: &PauliSum) -> DMatrix<Complex64> {
    let dim = sum.dim();
    let mut m = DMatrix::zeros(dim, dim);
    for (s, c) in sum.terms() {
        for col in 0..dim {
            let (row, v) = s.column_action(col);
            m[(row, col)] += c * v;
        }
    }
    m
}

/// Real part of [`reconstruct`], for sums of real matrices.
pub fn reconstruct_real(sum: &PauliSum) -> DMatrix<f64> {
    reconstruct(sum).map(|c| c.re)
}

/// Mean retained-term count across a family of sums.
pub fn mean_term_count(sums: &[PauliSum]) -> f64 {
    if sums.is_empty() {
        return 0.0;
    }
    sums.iter().map(|s| s.term_count() as f64).sum::<f64>() / sums.len() as f64
}

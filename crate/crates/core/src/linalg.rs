//! Dense symmetric linear algebra.
//!
//! Everything here works on small dense matrices (d up to a few hundred).
//! The eigensolver is cyclic Jacobi, which handles symmetric input
//! unconditionally and returns orthonormal eigenvectors to machine precision.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance below which negative eigenvalues count as rounding noise.
pub const PSD_TOLERANCE: f64 = 1e-10;

const SYMMETRY_TOLERANCE: f64 = 1e-12;
const JACOBI_TOLERANCE: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

/// A dense symmetric `d × d` matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymMatrix {
    d: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Builds a matrix from row-major entries, checking symmetry and finiteness.
    pub fn new(d: usize, data: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidMatrix("dimension must be positive".into()));
        }
        if data.len() != d * d {
            return Err(Error::InvalidMatrix(format!(
                "expected {} entries for a {d}x{d} matrix, got {}",
                d * d,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidMatrix(format!(
                "non-finite entry at ({}, {})",
                pos / d,
                pos % d
            )));
        }
        let scale = data.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        for i in 0..d {
            for j in (i + 1)..d {
                let gap = (data[i * d + j] - data[j * d + i]).abs();
                if gap > SYMMETRY_TOLERANCE * scale {
                    return Err(Error::InvalidMatrix(format!(
                        "asymmetric at ({i}, {j}): difference {gap:e}"
                    )));
                }
            }
        }
        Ok(Self { d, data })
    }

    /// Builds `A[i][j] = f(i, j)` for `i <= j` and mirrors it.
    pub fn from_fn(d: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(d > 0, "dimension must be positive");
        let mut data = vec![0.0; d * d];
        for i in 0..d {
            for j in i..d {
                let x = f(i, j);
                data[i * d + j] = x;
                data[j * d + i] = x;
            }
        }
        Self { d, data }
    }

    pub fn identity(d: usize) -> Self {
        Self::from_fn(d, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn zeros(d: usize) -> Self {
        Self::from_fn(d, |_, _| 0.0)
    }

    pub fn diag(values: &[f64]) -> Self {
        Self::from_fn(values.len(), |i, j| if i == j { values[i] } else { 0.0 })
    }

    /// `Σ_k w_k v_k v_kᵀ`, the spectral synthesis of eigenpairs.
    pub fn from_eigenpairs(values: &[f64], vectors: &[Vec<f64>]) -> Self {
        let d = vectors[0].len();
        Self::from_fn(d, |i, j| {
            values
                .iter()
                .zip(vectors)
                .map(|(w, v)| w * v[i] * v[j])
                .sum()
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.d + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.d).map(|i| self.get(i, i)).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.d).map(|i| self.get(i, i)).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.d).all(|i| (0..self.d).all(|j| i == j || self.get(i, j) == 0.0))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            d: self.d,
            data: self.data.iter().map(|x| c * x).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.d != other.d {
            return Err(Error::Shape(format!("dimension {} vs {}", self.d, other.d)));
        }
        Ok(Self {
            d: self.d,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        })
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.d);
        (0..self.d).map(|i| dot(self.row(i), v)).collect()
    }

    /// `vᵀ A v`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        dot(v, &self.matvec(v))
    }

    /// Matrix product; the result is symmetrized, which is exact when `self` and
    /// `other` commute (the only use here is squaring).
    pub fn mul_symmetric(&self, other: &Self) -> Self {
        let d = self.d;
        Self::from_fn(d, |i, j| {
            let a: f64 = (0..d).map(|k| self.get(i, k) * other.get(k, j)).sum();
            let b: f64 = (0..d).map(|k| self.get(j, k) * other.get(k, i)).sum();
            0.5 * (a + b)
        })
    }

    /// Writes one row per line, comma separated, no header.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_csv_rows(writer, self.d, self.d, &self.data)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let (rows, cols, data) = read_csv_rows(reader)?;
        if rows != cols {
            return Err(Error::Shape(format!(
                "matrix CSV is {rows}x{cols}, not square"
            )));
        }
        Self::new(rows, data)
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Shape("matrix rows must all have length d".into()));
        }
        Self::new(d, rows.into_iter().flatten().collect())
    }
}

impl From<SymMatrix> for Vec<Vec<f64>> {
    fn from(m: SymMatrix) -> Self {
        m.data.chunks(m.d).map(<[f64]>::to_vec).collect()
    }
}

/// An `n × d` sample matrix whose rows are observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl Samples {
    pub fn new(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::Shape("sample matrix must be non-empty".into()));
        }
        if data.len() != n * d {
            return Err(Error::Shape(format!(
                "expected {} entries for {n}x{d} samples, got {}",
                n * d,
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite sample entry".into()));
        }
        Ok(Self { n, d, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Shape("ragged sample rows".into()));
        }
        Self::new(rows.len(), d, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks(self.d)
    }

    /// `⟨X_i, v⟩` for every row.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.d);
        self.rows().map(|x| dot(x, v)).collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_csv_rows(writer, self.n, self.d, &self.data)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let (rows, cols, data) = read_csv_rows(reader)?;
        Self::new(rows, cols, data)
    }
}

fn write_csv_rows<W: Write>(writer: W, rows: usize, cols: usize, data: &[f64]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    for r in 0..rows {
        w.write_record(
            data[r * cols..(r + 1) * cols]
                .iter()
                .map(|x| format!("{x:?}")),
        )
        .map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn read_csv_rows<R: Read>(reader: R) -> Result<(usize, usize, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (r, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("row {}: {e}", r + 1)))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(Error::Parse(format!(
                    "row {}: expected {c} columns, found {}",
                    r + 1,
                    record.len()
                )))
            }
            _ => {}
        }
        for (c, cell) in record.iter().enumerate() {
            let x: f64 = cell.parse().map_err(|_| {
                Error::Parse(format!(
                    "row {}, column {}: '{cell}' is not a number",
                    r + 1,
                    c + 1
                ))
            })?;
            data.push(x);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::Parse("empty CSV".into()))?;
    Ok((rows, cols, data))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Eigenvalues sorted descending with matching orthonormal eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[k]` pairs with `eigenvalues[k]`.
    pub eigenvectors: Vec<Vec<f64>>,
}

impl EigenDecomposition {
    pub fn reconstruct(&self) -> SymMatrix {
        SymMatrix::from_eigenpairs(&self.eigenvalues, &self.eigenvectors)
    }
}

/// Full symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn sym_eigen(a: &SymMatrix) -> Result<EigenDecomposition> {
    let (values, vectors) = jacobi(a, true)?;
    let vectors = vectors.expect("vectors requested");
    let d = a.dim();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    Ok(EigenDecomposition {
        eigenvalues: order.iter().map(|&k| values[k]).collect(),
        eigenvectors: order
            .iter()
            .map(|&k| (0..d).map(|i| vectors[i * d + k]).collect())
            .collect(),
    })
}

/// Eigenvalues only, sorted descending.
pub fn sym_eigenvalues(a: &SymMatrix) -> Result<Vec<f64>> {
    let (mut values, _) = jacobi(a, false)?;
    values.sort_by(|x, y| y.total_cmp(x));
    Ok(values)
}

// Returns raw eigenvalues and, optionally, the row-major accumulated rotation
// matrix whose columns are the eigenvectors.
fn jacobi(a: &SymMatrix, want_vectors: bool) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    if a.data.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidMatrix("non-finite entry".into()));
    }
    let d = a.dim();
    let mut m = a.data.clone();
    let mut v = want_vectors.then(|| SymMatrix::identity(d).data);
    let threshold = JACOBI_TOLERANCE * a.frobenius_norm();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..d)
            .flat_map(|i| ((i + 1)..d).map(move |j| (i, j)))
            .map(|(i, j)| 2.0 * m[i * d + j] * m[i * d + j])
            .sum::<f64>()
            .sqrt();
        if off <= threshold {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = m[p * d + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * d + p];
                let aqq = m[q * d + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;

                for k in 0..d {
                    let mkp = m[k * d + p];
                    let mkq = m[k * d + q];
                    m[k * d + p] = c * mkp - s * mkq;
                    m[k * d + q] = s * mkp + c * mkq;
                }
                for k in 0..d {
                    let mpk = m[p * d + k];
                    let mqk = m[q * d + k];
                    m[p * d + k] = c * mpk - s * mqk;
                    m[q * d + k] = s * mpk + c * mqk;
                }
                m[p * d + q] = 0.0;
                m[q * d + p] = 0.0;

                if let Some(v) = v.as_mut() {
                    for k in 0..d {
                        let vkp = v[k * d + p];
                        let vkq = v[k * d + q];
                        v[k * d + p] = c * vkp - s * vkq;
                        v[k * d + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    Ok(((0..d).map(|i| m[i * d + i]).collect(), v))
}

/// `max_i |λ_i(A)|`.
pub fn operator_norm(a: &SymMatrix) -> Result<f64> {
    let values = sym_eigenvalues(a)?;
    Ok(values
        .first()
        .unwrap()
        .abs()
        .max(values.last().unwrap().abs()))
}

/// Largest eigenvalue, i.e. `sup_{‖v‖=1} vᵀAv`.
pub fn max_eigenvalue(a: &SymMatrix) -> Result<f64> {
    Ok(sym_eigenvalues(a)?[0])
}

fn check_psd(values: &[f64]) -> Result<f64> {
    let top = values[0].abs().max(values[values.len() - 1].abs());
    let min = values[values.len() - 1];
    if min < -PSD_TOLERANCE * top {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
        });
    }
    Ok(top)
}

/// `tr(S) / ‖S‖` for a nonzero PSD matrix.
pub fn effective_rank(s: &SymMatrix) -> Result<f64> {
    let values = sym_eigenvalues(s)?;
    let top = check_psd(&values)?;
    if top == 0.0 {
        return Err(Error::DegenerateMatrix);
    }
    let tr: f64 = values.iter().map(|x| x.max(0.0)).sum();
    Ok(tr / top)
}

/// Checks the PSD tolerance, returning the operator norm.
pub fn psd_norm(s: &SymMatrix) -> Result<f64> {
    check_psd(&sym_eigenvalues(s)?)
}

/// Symmetric PSD square root; eigenvalues within tolerance below zero are clamped.
pub fn psd_sqrt(s: &SymMatrix) -> Result<SymMatrix> {
    if s.is_diagonal() {
        let diag = s.diagonal();
        check_psd(&{
            let mut sorted = diag.clone();
            sorted.sort_by(|x, y| y.total_cmp(x));
            sorted
        })?;
        return Ok(SymMatrix::diag(
            &diag.iter().map(|x| x.max(0.0).sqrt()).collect::<Vec<_>>(),
        ));
    }
    let eig = sym_eigen(s)?;
    check_psd(&eig.eigenvalues)?;
    let roots: Vec<f64> = eig.eigenvalues.iter().map(|x| x.max(0.0).sqrt()).collect();
    Ok(SymMatrix::from_eigenpairs(&roots, &eig.eigenvectors))
}

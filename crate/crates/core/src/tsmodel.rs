//! Time series, matrix polynomials in the shift operator, differencing and
//! causal FIR filtering.
//!
//! Series are stored time-major: row `t` of the data matrix is the sample
//! `u(t)`, and every matrix acts on samples as column vectors.

use nalgebra::{DMatrix, DVector, RowDVector};
use serde::{Deserialize, Serialize};

use crate::error::{shape, Error, Result};

/// A length-`T` sequence of `D`-dimensional finite real samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    data: DMatrix<f64>,
}

impl TimeSeries {
    /// Wraps a `T x D` matrix, rejecting empty or non-finite input.
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(shape(format!(
                "time series must be non-empty, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        for col in 0..data.ncols() {
            for row in 0..data.nrows() {
                if !data[(row, col)].is_finite() {
                    return Err(Error::NonFinite { row, col });
                }
            }
        }
        Ok(Self { data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(shape("ragged rows"));
        }
        Self::new(DMatrix::from_fn(rows.len(), dim, |t, d| rows[t][d]))
    }

    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.data
    }

    pub fn sample(&self, t: usize) -> DVector<f64> {
        self.data.row(t).transpose()
    }

    /// Rows `start..start + len` as a new series.
    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        if len == 0 || start + len > self.len() {
            return Err(shape(format!(
                "slice {start}..{} out of range for length {}",
                start + len,
                self.len()
            )));
        }
        Ok(Self {
            data: self.data.rows(start, len).into_owned(),
        })
    }

    pub fn mean(&self) -> DVector<f64> {
        self.data.row_mean().transpose()
    }

    /// Subtracts `mean` from every sample.
    pub fn centered_by(&self, mean: &DVector<f64>) -> Result<Self> {
        if mean.len() != self.dim() {
            return Err(shape(format!(
                "mean has {} entries, series has dim {}",
                mean.len(),
                self.dim()
            )));
        }
        let row: RowDVector<f64> = mean.transpose();
        let mut data = self.data.clone();
        for mut r in data.row_iter_mut() {
            r -= &row;
        }
        Ok(Self { data })
    }

    pub fn centered(&self) -> Self {
        self.centered_by(&self.mean()).expect("dimension matches")
    }

    /// Sample covariance (normalized by `T`) around the sample mean.
    pub fn covariance(&self) -> DMatrix<f64> {
        let c = self.centered();
        let mut cov = c.data.tr_mul(&c.data) / self.len() as f64;
        symmetrize(&mut cov);
        cov
    }

    /// Applies `m` to every sample: `v(t) = m u(t)`.
    pub fn transform(&self, m: &DMatrix<f64>) -> Result<Self> {
        if m.ncols() != self.dim() {
            return Err(shape(format!(
                "matrix is {}x{}, series has dim {}",
                m.nrows(),
                m.ncols(),
                self.dim()
            )));
        }
        Self::new(&self.data * m.transpose())
    }

    /// Selects and reorders coordinates: output coordinate `k` is input `index[k]`.
    pub fn select_columns(&self, index: &[usize]) -> Result<Self> {
        if index.iter().any(|&i| i >= self.dim()) {
            return Err(shape("column index out of range"));
        }
        Ok(Self {
            data: self.data.select_columns(index),
        })
    }
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// `F[z] = sum_n F_n z^n`, a polynomial of `D1 x D2` matrices in the
/// time-shift operator `(z u)(t) = u(t-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPolynomial {
    coeffs: Vec<DMatrix<f64>>,
}

impl MatrixPolynomial {
    pub fn new(coeffs: Vec<DMatrix<f64>>) -> Result<Self> {
        let first = coeffs
            .first()
            .ok_or_else(|| shape("matrix polynomial needs at least one coefficient"))?;
        let (r, c) = first.shape();
        if r == 0 || c == 0 {
            return Err(shape("empty coefficient matrix"));
        }
        if let Some((n, m)) = coeffs.iter().enumerate().find(|(_, m)| m.shape() != (r, c)) {
            return Err(shape(format!(
                "coefficient {n} is {}x{}, expected {r}x{c}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self { coeffs })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            coeffs: vec![DMatrix::identity(dim, dim)],
        }
    }

    /// `(I - I z)^r` expanded with binomial coefficients.
    pub fn difference_operator(r: DifferenceOrder, dim: usize) -> Self {
        let coeffs = binomial_row(r.get())
            .into_iter()
            .enumerate()
            .map(|(k, c)| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                DMatrix::identity(dim, dim) * (sign * c)
            })
            .collect();
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[DMatrix<f64>] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn out_dim(&self) -> usize {
        self.coeffs[0].nrows()
    }

    pub fn in_dim(&self) -> usize {
        self.coeffs[0].ncols()
    }

    /// `z^k F[z]`.
    pub fn shifted(&self, k: usize) -> Self {
        let zero = DMatrix::zeros(self.out_dim(), self.in_dim());
        let mut coeffs = vec![zero; k];
        coeffs.extend(self.coeffs.iter().cloned());
        Self { coeffs }
    }
}

fn binomial_row(r: usize) -> Vec<f64> {
    let mut row = vec![1.0];
    for _ in 0..r {
        let mut next = vec![1.0; row.len() + 1];
        for k in 1..row.len() {
            next[k] = row[k - 1] + row[k];
        }
        row = next;
    }
    row
}

/// How `apply_polynomial` treats samples before the start of the series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Drop the first `N` outputs whose history is incomplete.
    #[default]
    TruncateFirstN,
    /// Treat `u(t)` as zero before the first sample.
    ZeroPadPast,
}

/// Causal FIR filtering `v(t) = sum_n F_n u(t - n)`.
pub fn apply_polynomial(f: &MatrixPolynomial, u: &TimeSeries, boundary: Boundary) -> Result<TimeSeries> {
    if u.dim() != f.in_dim() {
        return Err(shape(format!(
            "polynomial expects input dim {}, series has dim {}",
            f.in_dim(),
            u.dim()
        )));
    }
    let n = f.degree();
    let t = u.len();
    let x = u.data();
    let data = match boundary {
        Boundary::TruncateFirstN => {
            if t <= n {
                return Err(Error::InsufficientLength { needed: n, got: t });
            }
            let len = t - n;
            let mut v = DMatrix::zeros(len, f.out_dim());
            for (lag, fk) in f.coeffs().iter().enumerate() {
                v.gemm(1.0, &x.rows(n - lag, len), &fk.transpose(), 1.0);
            }
            v
        }
        Boundary::ZeroPadPast => {
            let mut v = DMatrix::zeros(t, f.out_dim());
            for (lag, fk) in f.coeffs().iter().enumerate() {
                if lag >= t {
                    break;
                }
                let len = t - lag;
                let mut dst = v.rows_mut(lag, len);
                dst.gemm(1.0, &x.rows(0, len), &fk.transpose(), 1.0);
            }
            v
        }
    };
    TimeSeries::new(data)
}

/// Order `r >= 0` of the difference operator `(I - I z)^r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DifferenceOrder(pub usize);

impl DifferenceOrder {
    pub fn get(self) -> usize {
        self.0
    }
}

/// r-th order differencing; the output drops the first `r` samples.
pub fn difference(u: &TimeSeries, r: DifferenceOrder) -> Result<TimeSeries> {
    let r = r.get();
    if u.len() <= r {
        return Err(Error::InsufficientLength {
            needed: r,
            got: u.len(),
        });
    }
    let mut data = u.data().clone();
    for _ in 0..r {
        let len = data.nrows() - 1;
        data = data.rows(1, len) - data.rows(0, len);
    }
    TimeSeries::new(data)
}

/// Inverse of [`difference`]: integrates `v` r times, seeded by the first
/// `r` samples of the original series. Output length is `r + v.len()`.
pub fn cumulate(v: &TimeSeries, r: DifferenceOrder, heads: &[DVector<f64>]) -> Result<TimeSeries> {
    let r = r.get();
    if heads.len() != r {
        return Err(shape(format!("expected {r} head samples, got {}", heads.len())));
    }
    if let Some(h) = heads.iter().find(|h| h.len() != v.dim()) {
        return Err(shape(format!(
            "head sample has dim {}, series has dim {}",
            h.len(),
            v.dim()
        )));
    }
    if r == 0 {
        return Ok(v.clone());
    }
    let dim = v.dim();
    // anchors[k] = (k-th difference of the heads) at time r - 1
    let mut level: Vec<DVector<f64>> = heads.to_vec();
    let mut anchors = Vec::with_capacity(r);
    for _ in 0..r {
        anchors.push(level.last().expect("non-empty").clone());
        level = level.windows(2).map(|w| &w[1] - &w[0]).collect();
    }
    let mut cur = v.data().clone();
    for anchor in anchors.iter().rev() {
        let mut acc = anchor.transpose();
        for mut row in cur.row_iter_mut() {
            acc += &row;
            row.copy_from(&acc);
        }
    }
    let mut data = DMatrix::zeros(r + v.len(), dim);
    for (t, h) in heads.iter().enumerate() {
        data.row_mut(t).copy_from(&h.transpose());
    }
    data.rows_mut(r, v.len()).copy_from(&cur);
    TimeSeries::new(data)
}

/// AR lag coefficients `[P_1, ..., P_p]` of the monic operator
/// `I - sum_i P_i z^i`. An empty list means white dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct ArCoeffs {
    dim: usize,
    lags: Vec<DMatrix<f64>>,
}

impl ArCoeffs {
    pub fn new(dim: usize, lags: Vec<DMatrix<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(shape("AR dimension must be positive"));
        }
        if let Some((i, m)) = lags.iter().enumerate().find(|(_, m)| m.shape() != (dim, dim)) {
            return Err(shape(format!(
                "AR coefficient {} is {}x{}, expected square {dim}x{dim}",
                i + 1,
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self { dim, lags })
    }

    pub fn white(dim: usize) -> Self {
        Self { dim, lags: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.lags.len()
    }

    pub fn lags(&self) -> &[DMatrix<f64>] {
        &self.lags
    }

    /// `I - sum_i P_i z^i` as a matrix polynomial.
    pub fn operator(&self) -> MatrixPolynomial {
        let mut coeffs = vec![DMatrix::identity(self.dim, self.dim)];
        coeffs.extend(self.lags.iter().map(|p| -p));
        MatrixPolynomial { coeffs }
    }

    pub fn spectral_radius(&self) -> f64 {
        ar_spectral_radius(&self.lags).expect("coefficients are square by construction")
    }
}

/// Block companion matrix of `[P_1, ..., P_p]`.
pub fn companion_matrix(lags: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let Some(first) = lags.first() else {
        return Ok(DMatrix::zeros(0, 0));
    };
    let d = first.nrows();
    if let Some(m) = lags.iter().find(|m| m.shape() != (d, d)) {
        return Err(shape(format!(
            "AR coefficients must be square {d}x{d}, found {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let p = lags.len();
    let mut c = DMatrix::zeros(p * d, p * d);
    for (i, m) in lags.iter().enumerate() {
        c.view_mut((0, i * d), (d, d)).copy_from(m);
    }
    for i in 1..p {
        c.view_mut((i * d, (i - 1) * d), (d, d)).fill_with_identity();
    }
    Ok(c)
}

/// Spectral radius of the block companion matrix; values below 1 mean the
/// AR operator `I - sum_i P_i z^i` is stable.
pub fn ar_spectral_radius(lags: &[DMatrix<f64>]) -> Result<f64> {
    let c = companion_matrix(lags)?;
    if c.is_empty() {
        return Ok(0.0);
    }
    let eig = c.complex_eigenvalues();
    Ok(eig.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Ordered subspace dimensions `[d_1, ..., d_M]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct ComponentLayout {
    dims: Vec<usize>,
}

impl ComponentLayout {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidArgument("layout needs at least one component".into()));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidArgument("component dimensions must be positive".into()));
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn components(&self) -> usize {
        self.dims.len()
    }

    pub fn total(&self) -> usize {
        self.dims.iter().sum()
    }

    /// Cumulative offsets `[0, d_1, d_1 + d_2, ..., total]`.
    pub fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.dims.len() + 1);
        let mut acc = 0;
        out.push(0);
        for d in &self.dims {
            acc += d;
            out.push(acc);
        }
        out
    }

    /// Component index of every coordinate.
    pub fn assignment(&self) -> Vec<usize> {
        self.dims
            .iter()
            .enumerate()
            .flat_map(|(m, &d)| std::iter::repeat_n(m, d))
            .collect()
    }

    pub fn sorted_dims(&self) -> Vec<usize> {
        let mut d = self.dims.clone();
        d.sort_unstable();
        d
    }
}

impl TryFrom<Vec<usize>> for ComponentLayout {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ComponentLayout> for Vec<usize> {
    fn from(l: ComponentLayout) -> Self {
        l.dims
    }
}

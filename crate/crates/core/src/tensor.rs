//! Dense complex matrix and third-order tensor primitives.
//!
//! Matrices are `nalgebra::DMatrix<C64>`, stored column-major, so `vec(A)`
//! is a plain copy of the storage. A [`Tensor3`] holds its frontal slices
//! `Y[k]` (each `I x J`) and exposes the three unfoldings used by the
//! receivers:
//!
//! * `Y1 = [Y[1] | ... | Y[K]]`            (`I x JK`)
//! * `Y2 = [Y[1]^T | ... | Y[K]^T]`        (`J x IK`)
//! * `Y3 = [vec(Y[1]), ..., vec(Y[K])]`    (`IJ x K`)

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};

#[allow(non_camel_case_types)]
pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Default relative singular-value cutoff for [`pinv`].
pub const PINV_REL_TOL: f64 = 1e-12;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Dense `I x J x K` complex tensor stored as `K` frontal slices.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    rows: usize,
    cols: usize,
    slices: Vec<CMatrix>,
}

impl Tensor3 {
    pub fn zeros(rows: usize, cols: usize, depth: usize) -> Self {
        Self {
            rows,
            cols,
            slices: vec![CMatrix::zeros(rows, cols); depth],
        }
    }

    /// Builds a tensor from its frontal slices; all slices must share a shape.
    pub fn from_slices(slices: Vec<CMatrix>) -> Result<Self> {
        let (rows, cols) = slices.first().map(|s| s.shape()).unwrap_or((0, 0));
        if let Some((k, s)) = slices
            .iter()
            .enumerate()
            .find(|(_, s)| s.shape() != (rows, cols))
        {
            return Err(Error::Dimension(format!(
                "slice {k} is {}x{}, expected {rows}x{cols}",
                s.nrows(),
                s.ncols()
            )));
        }
        Ok(Self { rows, cols, slices })
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        depth: usize,
        mut f: impl FnMut(usize, usize, usize) -> C64,
    ) -> Self {
        let slices = (0..depth)
            .map(|k| CMatrix::from_fn(rows, cols, |i, j| f(i, j, k)))
            .collect();
        Self { rows, cols, slices }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.rows, self.cols, self.slices.len())
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> C64 {
        self.slices[k][(i, j)]
    }

    pub fn slice(&self, k: usize) -> &CMatrix {
        &self.slices[k]
    }

    pub fn slices(&self) -> &[CMatrix] {
        &self.slices
    }

    pub fn slices_mut(&mut self) -> &mut [CMatrix] {
        &mut self.slices
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.slices.iter().map(|s| s.norm_squared()).sum()
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            slices: self.slices.iter().map(|s| s * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&CMatrix, &CMatrix) -> CMatrix) -> Result<Self> {
        if self.dims() != other.dims() {
            return Err(Error::Dimension(format!(
                "tensor shapes {:?} and {:?} differ",
                self.dims(),
                other.dims()
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            slices: self
                .slices
                .iter()
                .zip(&other.slices)
                .map(|(a, b)| f(a, b))
                .collect(),
        })
    }

    pub fn is_zero(&self) -> bool {
        self.slices.iter().all(|s| s.iter().all(|z| *z == ZERO))
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kronecker(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (p, q) = b.shape();
    CMatrix::from_fn(a.nrows() * p, a.ncols() * q, |r, c| {
        a[(r / p, c / q)] * b[(r % p, c % q)]
    })
}

/// Khatri-Rao (column-wise Kronecker) product `a ⋄ b`.
pub fn khatri_rao(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.ncols() != b.ncols() {
        return Err(Error::Dimension(format!(
            "khatri-rao needs equal column counts, got {} and {}",
            a.ncols(),
            b.ncols()
        )));
    }
    let p = b.nrows();
    Ok(CMatrix::from_fn(a.nrows() * p, a.ncols(), |r, c| {
        a[(r / p, c)] * b[(r % p, c)]
    }))
}

/// Element-wise product.
pub fn hadamard(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!(
            "hadamard needs equal shapes, got {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(a.component_mul(b))
}

/// Column-major vectorization.
pub fn vec(a: &CMatrix) -> CVector {
    CVector::from_column_slice(a.as_slice())
}

/// Inverse of [`vec`]: reshapes a length `rows*cols` vector column-major.
pub fn unvec(v: &CVector, rows: usize, cols: usize) -> Result<CMatrix> {
    if v.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "cannot unvec length {} into {rows}x{cols}",
            v.len()
        )));
    }
    Ok(CMatrix::from_column_slice(rows, cols, v.as_slice()))
}

pub fn diag(v: &CVector) -> CMatrix {
    CMatrix::from_diagonal(v)
}

/// `D_k(A)`: diagonal matrix holding row `k` (0-based) of `a`.
pub fn diag_row(a: &CMatrix, k: usize) -> Result<CMatrix> {
    if k >= a.nrows() {
        return Err(Error::Index {
            index: k,
            len: a.nrows(),
        });
    }
    Ok(CMatrix::from_diagonal(&a.row(k).transpose()))
}

/// 1-mode unfolding `[Y[1] | ... | Y[K]]`.
pub fn unfold1(t: &Tensor3) -> CMatrix {
    let (m, tt, k) = t.dims();
    let mut out = CMatrix::zeros(m, tt * k);
    for (kk, s) in t.slices().iter().enumerate() {
        out.columns_mut(kk * tt, tt).copy_from(s);
    }
    out
}

/// 2-mode unfolding `[Y[1]^T | ... | Y[K]^T]`.
pub fn unfold2(t: &Tensor3) -> CMatrix {
    let (m, tt, k) = t.dims();
    let mut out = CMatrix::zeros(tt, m * k);
    for (kk, s) in t.slices().iter().enumerate() {
        out.columns_mut(kk * m, m).copy_from(&s.transpose());
    }
    out
}

/// 3-mode unfolding `[vec(Y[1]), ..., vec(Y[K])]`.
pub fn unfold3(t: &Tensor3) -> CMatrix {
    let (m, tt, k) = t.dims();
    let mut out = CMatrix::zeros(m * tt, k);
    for (kk, s) in t.slices().iter().enumerate() {
        out.column_mut(kk).copy_from_slice(s.as_slice());
    }
    out
}

/// Inverse of [`unfold1`].
pub fn fold1(y1: &CMatrix, cols: usize, depth: usize) -> Result<Tensor3> {
    check_unfolding(y1, y1.nrows(), cols * depth, "fold1")?;
    Tensor3::from_slices(
        (0..depth)
            .map(|k| y1.columns(k * cols, cols).into_owned())
            .collect(),
    )
}

/// Inverse of [`unfold2`].
pub fn fold2(y2: &CMatrix, rows: usize, depth: usize) -> Result<Tensor3> {
    check_unfolding(y2, y2.nrows(), rows * depth, "fold2")?;
    Tensor3::from_slices(
        (0..depth)
            .map(|k| y2.columns(k * rows, rows).transpose())
            .collect(),
    )
}

/// Inverse of [`unfold3`].
pub fn fold3(y3: &CMatrix, rows: usize, cols: usize) -> Result<Tensor3> {
    check_unfolding(y3, rows * cols, y3.ncols(), "fold3")?;
    Tensor3::from_slices(
        (0..y3.ncols())
            .map(|k| CMatrix::from_column_slice(rows, cols, y3.column(k).as_slice()))
            .collect(),
    )
}

fn check_unfolding(y: &CMatrix, rows: usize, cols: usize, what: &str) -> Result<()> {
    if y.shape() != (rows, cols) {
        return Err(Error::Dimension(format!(
            "{what}: got {:?}, expected {rows}x{cols}",
            y.shape()
        )));
    }
    Ok(())
}

/// Thin SVD `A = U diag(s) Vᴴ`, singular values non-increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

/// Thin SVD computed with `faer`, single-threaded.
pub fn svd(a: &CMatrix) -> Result<Svd> {
    let (r, c) = a.shape();
    let p = r.min(c);
    if p == 0 {
        return Ok(Svd {
            u: CMatrix::zeros(r, 0),
            s: Vec::new(),
            v: CMatrix::zeros(c, 0),
        });
    }
    faer::set_global_parallelism(faer::Par::Seq);
    let m = faer::Mat::<C64>::from_fn(r, c, |i, j| a[(i, j)]);
    let d = m
        .thin_svd()
        .map_err(|e| Error::Degenerate(format!("SVD did not converge: {e:?}")))?;
    let (u, sv, v) = (d.U(), d.S().column_vector(), d.V());
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| sv[j].re.total_cmp(&sv[i].re));
    Ok(Svd {
        u: CMatrix::from_fn(r, p, |i, j| u[(i, order[j])]),
        s: order.iter().map(|&i| sv[i].re).collect(),
        v: CMatrix::from_fn(c, p, |i, j| v[(i, order[j])]),
    })
}

/// Moore-Penrose pseudo-inverse through the SVD. Singular values below
/// `rel_tol * sigma_max` are dropped.
pub fn pinv(a: &CMatrix, rel_tol: f64) -> Result<CMatrix> {
    let (r, c) = a.shape();
    if a.iter().all(|z| *z == ZERO) {
        return Ok(CMatrix::zeros(c, r));
    }
    let d = svd(a)?;
    let cutoff = rel_tol * d.s[0];
    let kept = d.s.iter().take_while(|&&s| s > cutoff && s > 0.0).count();
    // V diag(1/s) Uᴴ over the retained singular values
    let mut v = d.v.columns(0, kept).into_owned();
    for (j, mut col) in v.column_iter_mut().enumerate() {
        col /= C64::new(d.s[j], 0.0);
    }
    Ok(v * d.u.columns(0, kept).adjoint())
}

/// Numerical rank with the same relative cutoff convention as [`pinv`].
pub fn rank(a: &CMatrix, rel_tol: f64) -> Result<usize> {
    if a.iter().all(|z| *z == ZERO) {
        return Ok(0);
    }
    let d = svd(a)?;
    let cutoff = rel_tol * d.s[0];
    Ok(d.s.iter().filter(|&&s| s > cutoff).count())
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_abs_diff shape mismatch");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

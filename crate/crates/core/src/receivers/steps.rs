//! Conditional least-squares updates and reconstruction error measures.

use crate::error::{Error, Result};
use crate::signal::paratuck_tensor;
use crate::tensor::{
    khatri_rao, kronecker, pinv, unvec, vec, CMatrix, CVector, Tensor3, C64, PINV_REL_TOL,
};

fn scale_columns(a: &CMatrix, row: &CMatrix, k: usize) -> CMatrix {
    let mut out = a.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col *= row[(k, j)];
    }
    out
}

fn scale_rows(a: &CMatrix, row: &CMatrix, k: usize) -> CMatrix {
    let mut out = a.clone();
    for (i, mut r) in out.row_iter_mut().enumerate() {
        r *= row[(k, i)];
    }
    out
}

/// `F = [X D_1(W) Gᵀ D_1(S); ...; X D_K(W) Gᵀ D_K(S)]`, `TK x N`.
pub fn build_f(x: &CMatrix, g: &CMatrix, s: &CMatrix, w: &CMatrix) -> Result<CMatrix> {
    let (t, l) = x.shape();
    let n = g.nrows();
    let k = s.nrows();
    if g.ncols() != l || s.ncols() != n || w.shape() != (k, l) {
        return Err(Error::Dimension(format!(
            "build_f: X {:?}, G {:?}, S {:?}, W {:?}",
            x.shape(),
            g.shape(),
            s.shape(),
            w.shape()
        )));
    }
    let gt = g.transpose();
    let mut f = CMatrix::zeros(t * k, n);
    for kk in 0..k {
        let block = scale_columns(&(scale_columns(x, w, kk) * &gt), s, kk);
        f.rows_mut(kk * t, t).copy_from(&block);
    }
    Ok(f)
}

/// `E = [H D_1(S) G D_1(W); ...; H D_K(S) G D_K(W)]`, `MK x L`.
pub fn build_e(h: &CMatrix, g: &CMatrix, s: &CMatrix, w: &CMatrix) -> Result<CMatrix> {
    let (m, n) = h.shape();
    let l = g.ncols();
    let k = s.nrows();
    if g.nrows() != n || s.ncols() != n || w.shape() != (k, l) {
        return Err(Error::Dimension(format!(
            "build_e: H {:?}, G {:?}, S {:?}, W {:?}",
            h.shape(),
            g.shape(),
            s.shape(),
            w.shape()
        )));
    }
    let mut e = CMatrix::zeros(m * k, l);
    for kk in 0..k {
        let core = scale_columns(&scale_rows(g, s, kk), w, kk);
        e.rows_mut(kk * m, m).copy_from(&(h * core));
    }
    Ok(e)
}

/// `Ĥ = Y1 (Fᵀ)†`.
pub fn step_h(y1: &CMatrix, f: &CMatrix) -> Result<CMatrix> {
    if y1.ncols() != f.nrows() {
        return Err(Error::Dimension(format!(
            "step_h: Y1 has {} columns, F has {} rows",
            y1.ncols(),
            f.nrows()
        )));
    }
    Ok(y1 * pinv(&f.transpose(), PINV_REL_TOL)?)
}

/// `X̂ = Y2 (Eᵀ)†`.
pub fn step_x(y2: &CMatrix, e: &CMatrix) -> Result<CMatrix> {
    if y2.ncols() != e.nrows() {
        return Err(Error::Dimension(format!(
            "step_x: Y2 has {} columns, E has {} rows",
            y2.ncols(),
            e.nrows()
        )));
    }
    Ok(y2 * pinv(&e.transpose(), PINV_REL_TOL)?)
}

fn check_g_inputs(y3: &CMatrix, x: &CMatrix, h: &CMatrix, psi: &CMatrix) -> Result<()> {
    let (t, l) = x.shape();
    let (m, n) = h.shape();
    if y3.nrows() != t * m || y3.ncols() != psi.ncols() || psi.nrows() != l * n {
        return Err(Error::Dimension(format!(
            "step_g: Y3 {:?}, X {:?}, H {:?}, Psi {:?}",
            y3.shape(),
            x.shape(),
            h.shape(),
            psi.shape()
        )));
    }
    Ok(())
}

/// `Cᴴ vec(Y3)` for `C = Ψᵀ ⋄ Q`, evaluated as the row sums of
/// `(Qᴴ Y3) ⊙ Ψ*` without forming `C`.
fn c_adjoint_times(y3: &CMatrix, q: &CMatrix, psi: &CMatrix) -> CVector {
    let qy = q.adjoint() * y3;
    CVector::from_fn(psi.nrows(), |r, _| {
        qy.row(r)
            .iter()
            .zip(psi.row(r).iter())
            .map(|(a, p)| a * p.conj())
            .sum()
    })
}

/// LS update of `G` from `vec(Y3) = [Ψᵀ ⋄ (X ⊗ H)] vec(G)`.
///
/// With `fast` the semi-unitary shortcut
/// `vec(G) = (1/K) Σ_Q⁻¹ (Ψᵀ ⋄ Q)ᴴ vec(Y3)`, `Σ_Q = diag(‖q_r‖²)`, is used and
/// `Ψ*Ψᵀ = K I` is required. Otherwise the normal equations are solved with
/// the Gram matrix `(Ψ*Ψᵀ) ⊙ (QᴴQ)`.
pub fn step_g(
    y3: &CMatrix,
    x: &CMatrix,
    h: &CMatrix,
    psi: &CMatrix,
    fast: bool,
) -> Result<CMatrix> {
    if fast && !crate::design::is_semi_unitary(psi) {
        return Err(Error::NotSemiUnitary(format!(
            "fast G update needs Ψ*Ψᵀ = K I (residual {:e})",
            crate::design::semi_unitarity_residual(psi)
        )));
    }
    g_update(y3, x, h, psi, fast)
}

/// [`step_g`] without the semi-unitarity check; callers verify `Ψ` once.
pub(crate) fn g_update(
    y3: &CMatrix,
    x: &CMatrix,
    h: &CMatrix,
    psi: &CMatrix,
    fast: bool,
) -> Result<CMatrix> {
    check_g_inputs(y3, x, h, psi)?;
    let (n, l) = (h.ncols(), x.ncols());
    let q = kronecker(x, h);
    let rhs = c_adjoint_times(y3, &q, psi);
    let g = if fast {
        let k = psi.ncols() as f64;
        let mut v = rhs;
        for (r, q_r) in q.column_iter().enumerate() {
            let energy = q_r.norm_squared();
            if energy == 0.0 {
                return Err(Error::Degenerate(format!(
                    "column {r} of X ⊗ H vanishes, G is not identifiable"
                )));
            }
            v[r] /= C64::new(k * energy, 0.0);
        }
        v
    } else {
        let gram = (psi.conjugate() * psi.transpose()).component_mul(&(q.adjoint() * &q));
        pinv(&gram, PINV_REL_TOL)? * rhs
    };
    unvec(&g, n, l)
}

/// Literal `vec(Ĝ) = [Ψᵀ ⋄ (X ⊗ H)]† vec(Y3)` with `C` materialized.
pub fn step_g_explicit(y3: &CMatrix, x: &CMatrix, h: &CMatrix, psi: &CMatrix) -> Result<CMatrix> {
    check_g_inputs(y3, x, h, psi)?;
    let c = khatri_rao(&psi.transpose(), &kronecker(x, h))?;
    unvec(&(pinv(&c, PINV_REL_TOL)? * vec(y3)), h.ncols(), x.ncols())
}

/// Model tensor `Ŷ[k] = Ĥ D_k(S) Ĝ D_k(W) X̂ᵀ`.
pub fn reconstruct(
    h: &CMatrix,
    g: &CMatrix,
    x: &CMatrix,
    s: &CMatrix,
    w: &CMatrix,
) -> Result<Tensor3> {
    paratuck_tensor(h, g, x, s, w)
}

/// `ε = Σ_k ‖Y[k] - Ŷ[k]‖² / ‖Y[k]‖²`. A slice with zero energy contributes
/// its unnormalized residual.
pub fn reconstruction_error(y: &Tensor3, y_hat: &Tensor3) -> f64 {
    y.slices()
        .iter()
        .zip(y_hat.slices())
        .map(|(a, b)| {
            let r = (a - b).norm_squared();
            let e = a.norm_squared();
            if e > 0.0 {
                r / e
            } else {
                r
            }
        })
        .sum()
}

/// Unweighted LS cost `Σ_k ‖Y[k] - Ŷ[k]‖²`, the quantity each update
/// minimizes conditionally.
pub fn reconstruction_cost(y: &Tensor3, y_hat: &Tensor3) -> f64 {
    y.slices()
        .iter()
        .zip(y_hat.slices())
        .map(|(a, b)| (a - b).norm_squared())
        .sum()
}

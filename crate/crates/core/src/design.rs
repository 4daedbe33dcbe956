//! Joint design of the coding matrix `W` and the IRS phase-shift matrix `S`.
//!
//! The combined matrix `Ψ = Wᵀ ⋄ Sᵀ` (`LN x K`) is taken as the first `LN`
//! rows of the `K`-point DFT matrix. Column `k` of that truncated DFT is a
//! Vandermonde vector in `ψ_k = exp(-j2πk/K)`, which splits exactly as a
//! Kronecker product of a Vandermonde vector in `ψ_k^N` (length `L`) and one
//! in `ψ_k` (length `N`). Those two factors are the rows of `W` and `S`.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{khatri_rao, CMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    DftVandermonde,
    RandomPhase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodingDesign {
    /// Coding matrix, `K x L`.
    pub w: CMatrix,
    /// IRS phase shifts, `K x N`.
    pub s: CMatrix,
    /// `Wᵀ ⋄ Sᵀ`, `LN x K`.
    pub psi: CMatrix,
    pub semi_unitary: bool,
    pub kind: DesignKind,
}

impl CodingDesign {
    fn from_factors(w: CMatrix, s: CMatrix, kind: DesignKind) -> Self {
        let psi = khatri_rao(&w.transpose(), &s.transpose()).expect("W and S share K rows");
        let semi_unitary = is_semi_unitary(&psi);
        Self {
            w,
            s,
            psi,
            semi_unitary,
            kind,
        }
    }

    pub fn blocks(&self) -> usize {
        self.w.nrows()
    }
}

/// `exp(-j2π·e/K)`, with the exponent reduced mod `K` first so large powers
/// stay exact.
fn dft_root(exponent: usize, k: usize) -> C64 {
    C64::from_polar(1.0, -2.0 * PI * (exponent % k) as f64 / k as f64)
}

fn check_dft_size(l: usize, n: usize, k: usize) -> Result<()> {
    if l == 0 || n == 0 || k == 0 {
        return Err(Error::Design(format!(
            "L, N and K must be positive (got L={l}, N={n}, K={k})"
        )));
    }
    if l * n > k {
        return Err(Error::Design(format!(
            "truncated DFT design requires LN <= K, got LN = {} > K = {k}",
            l * n
        )));
    }
    Ok(())
}

/// First `LN` rows of the `K`-point DFT matrix: entry `(r, k) = ψ_k^r`.
pub fn build_psi_dft(l: usize, n: usize, k: usize) -> Result<CMatrix> {
    check_dft_size(l, n, k)?;
    Ok(CMatrix::from_fn(l * n, k, |r, col| dft_root(r * col, k)))
}

/// Exact Khatri-Rao split of [`build_psi_dft`]: returns `(W, S)` with
/// `W[k, l] = ψ_k^{N l}` and `S[k, n] = ψ_k^n`.
pub fn factor_psi(l: usize, n: usize, k: usize) -> Result<(CMatrix, CMatrix)> {
    check_dft_size(l, n, k)?;
    let w = CMatrix::from_fn(k, l, |row, col| dft_root(row * n * col, k));
    let s = CMatrix::from_fn(k, n, |row, col| dft_root(row * col, k));
    Ok((w, s))
}

pub fn dft_design(l: usize, n: usize, k: usize) -> Result<CodingDesign> {
    let (w, s) = factor_psi(l, n, k)?;
    Ok(CodingDesign::from_factors(w, s, DesignKind::DftVandermonde))
}

/// Unit-modulus `W` and `S` with phases uniform on `[0, 2π)`.
pub fn build_random_phase<R: Rng + ?Sized>(
    l: usize,
    n: usize,
    k: usize,
    rng: &mut R,
) -> CodingDesign {
    let mut phase = |_: usize, _: usize| C64::from_polar(1.0, rng.random_range(0.0..2.0 * PI));
    let w = CMatrix::from_fn(k, l, &mut phase);
    let s = CMatrix::from_fn(k, n, &mut phase);
    CodingDesign::from_factors(w, s, DesignKind::RandomPhase)
}

/// `‖Ψ*Ψᵀ - K I‖_max <= 1e-10 K`.
pub fn is_semi_unitary(psi: &CMatrix) -> bool {
    semi_unitarity_residual(psi) <= 1e-10 * psi.ncols() as f64
}

/// Largest entry of `|Ψ*Ψᵀ - K I_{LN}|`.
pub fn semi_unitarity_residual(psi: &CMatrix) -> f64 {
    let k = psi.ncols() as f64;
    let gram = psi.conjugate() * psi.transpose();
    gram.iter()
        .enumerate()
        .map(|(idx, z)| {
            let (r, c) = (idx % gram.nrows(), idx / gram.nrows());
            let target = if r == c { k } else { 0.0 };
            (z - C64::new(target, 0.0)).norm()
        })
        .fold(0.0, f64::max)
}

/// Builds the requested design. A DFT request with `LN > K` cannot be
/// semi-unitary; it falls back to random phases and returns a warning.
pub fn design_for<R: Rng + ?Sized>(
    kind: DesignKind,
    l: usize,
    n: usize,
    k: usize,
    rng: &mut R,
) -> Result<(CodingDesign, Option<String>)> {
    match kind {
        DesignKind::DftVandermonde if l * n > k => Ok((
            build_random_phase(l, n, k, rng),
            Some(format!(
                "LN = {} > K = {k}: semi-unitary DFT design impossible, using random phases",
                l * n
            )),
        )),
        DesignKind::DftVandermonde => Ok((dft_design(l, n, k)?, None)),
        DesignKind::RandomPhase => Ok((build_random_phase(l, n, k, rng), None)),
    }
}

/// `K1`-point truncated DFT with `L` columns: `W1[k, l] = exp(-j2πkl/K1)`.
/// Satisfies `W1ᵀ W1* = K1 I_L` whenever `K1 >= L`.
pub fn stage_one_coding(l: usize, k1: usize) -> Result<CMatrix> {
    if k1 < l {
        return Err(Error::Identifiability(format!(
            "K1 >= L required by the Khatri-Rao factorization stage, got K1 = {k1} < L = {l}"
        )));
    }
    Ok(CMatrix::from_fn(k1, l, |row, col| dft_root(row * col, k1)))
}

/// Coding for the two-window protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitDesign {
    /// Stage-I coding, `K1 x L`.
    pub w1: CMatrix,
    /// Stage-II coding and phase shifts over `K2` blocks.
    pub stage2: CodingDesign,
    pub warning: Option<String>,
}

/// Splits `K = K1 + K2` blocks into a direct-link window coded by
/// [`stage_one_coding`] and an IRS window with a fresh design of size `K2`.
pub fn split_design<R: Rng + ?Sized>(
    kind: DesignKind,
    l: usize,
    n: usize,
    k1: usize,
    k2: usize,
    rng: &mut R,
) -> Result<SplitDesign> {
    let w1 = stage_one_coding(l, k1)?;
    let (stage2, warning) = design_for(kind, l, n, k2, rng)?;
    Ok(SplitDesign {
        w1,
        stage2,
        warning,
    })
}

//! Cramér-Rao bounds for `vec(G)` and `vec(H)` under white Gaussian noise,
//! and their expectation over channel and symbol draws.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::draw_channels;
use crate::design::{design_for, is_semi_unitary};
use crate::error::{Error, Result};
use crate::harness::SystemConfig;
use crate::receivers::build_f;
use crate::rng::{mix_seed, seeded};
use crate::signal::{draw_symbols, paratuck_tensor, SymbolMatrix};
use crate::tensor::{khatri_rao, kronecker, CMatrix};

pub type RMatrix = DMatrix<f64>;

/// Stream index reserved for CRB draws in [`mix_seed`].
const CRB_STREAM: u64 = 0xC4B0_0000_0000_0000;

/// Splits a Hermitian `J` into `(Re J, Im J)`.
pub fn fim_blocks(j: &CMatrix) -> Result<(RMatrix, RMatrix)> {
    if !j.is_square() {
        return Err(Error::Dimension(format!(
            "FIM block must be square, got {:?}",
            j.shape()
        )));
    }
    let scale = j.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let asym = (j - j.adjoint())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if asym > 1e-10 * scale {
        return Err(Error::NotHermitian(asym));
    }
    Ok((j.map(|z| z.re), j.map(|z| z.im)))
}

/// Real FIM `2 [[M̄, -M̃], [M̃, M̄]]`.
pub fn assemble_fim(m_bar: &RMatrix, m_tilde: &RMatrix) -> RMatrix {
    let n = m_bar.nrows();
    let mut f = RMatrix::zeros(2 * n, 2 * n);
    f.view_mut((0, 0), (n, n)).copy_from(&(m_bar * 2.0));
    f.view_mut((0, n), (n, n)).copy_from(&(m_tilde * -2.0));
    f.view_mut((n, 0), (n, n)).copy_from(&(m_tilde * 2.0));
    f.view_mut((n, n), (n, n)).copy_from(&(m_bar * 2.0));
    f
}

fn spd_inverse(a: &RMatrix, what: &str) -> Result<RMatrix> {
    let sym = (a + a.transpose()) * 0.5;
    let eig = sym.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let min = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if max.is_nan() || max <= 0.0 || min <= 1e-13 * max {
        return Err(Error::SingularFim(format!(
            "{what}, eigenvalue range [{min:e}, {max:e}]"
        )));
    }
    sym.cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::SingularFim(what.to_string()))
}

/// Traces of the real- and imaginary-part bounds from the Schur complements
/// of the FIM, each `(1/2) Tr{(M̄ + M̃ M̄⁻¹ M̃)⁻¹}`. Their sum bounds
/// `E‖θ - θ̂‖²`.
pub fn crb_trace(m_bar: &RMatrix, m_tilde: &RMatrix) -> Result<(f64, f64)> {
    let m_bar_inv = spd_inverse(m_bar, "M̄ not invertible")?;
    let schur = m_bar + m_tilde * &m_bar_inv * m_tilde;
    let inv = spd_inverse(&schur, "Schur complement not invertible")?;
    let half = 0.5 * inv.trace();
    Ok((half, half))
}

/// Trace bound from a complex information matrix `J`.
pub fn crb_from_information(j: &CMatrix) -> Result<f64> {
    let (m_bar, m_tilde) = fim_blocks(j)?;
    let (re, im) = crb_trace(&m_bar, &m_tilde)?;
    Ok(re + im)
}

/// Bound on `E‖vec(G) - vec(Ĝ)‖²`. With semi-unitary `Ψ` the information is
/// diagonal and the trace is `(σ²/K) Σ_r 1/[XᴴX ⊗ HᴴH]_rr`; otherwise
/// [`crb_g_general`] is used.
pub fn crb_g(x: &CMatrix, h: &CMatrix, psi: &CMatrix, sigma2: f64) -> Result<f64> {
    if !is_semi_unitary(psi) {
        return crb_g_general(x, h, psi, sigma2);
    }
    let k = psi.ncols() as f64;
    let mut total = 0.0;
    for xl in x.column_iter() {
        for hn in h.column_iter() {
            let d = xl.norm_squared() * hn.norm_squared();
            if d == 0.0 {
                return Err(Error::Identifiability(
                    "zero diagonal entry in XᴴX ⊗ HᴴH".into(),
                ));
            }
            total += 1.0 / d;
        }
    }
    Ok(sigma2 / k * total)
}

/// Bound on `vec(G)` with `C = Ψᵀ ⋄ (X ⊗ H)` materialized and
/// `J = CᴴC / σ²`.
pub fn crb_g_general(x: &CMatrix, h: &CMatrix, psi: &CMatrix, sigma2: f64) -> Result<f64> {
    let c = khatri_rao(&psi.transpose(), &kronecker(x, h))?;
    crb_from_information(&((c.adjoint() * c) / nalgebra::Complex::new(sigma2, 0.0)))
}

/// Bound on `E‖vec(H) - vec(Ĥ)‖²` from `Y1 = H Fᵀ`. The information
/// `(FᴴF ⊗ I_M)/σ²` is block diagonal with `M` equal blocks.
pub fn crb_h(f: &CMatrix, sigma2: f64, m: usize) -> Result<f64> {
    let j = (f.adjoint() * f) / nalgebra::Complex::new(sigma2, 0.0);
    Ok(m as f64 * crb_from_information(&j)?)
}

/// How the symbols are treated across draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolAveraging {
    /// Fresh symbols each draw.
    #[default]
    Random,
    /// One symbol realization held fixed over all draws.
    Fixed,
}

/// Expected bounds at one SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct CrbResult {
    pub snr_db: f64,
    pub trace_crb_g: f64,
    pub trace_crb_h: f64,
    /// `(trace_g, trace_h)` per draw.
    pub per_draw: Vec<(f64, f64)>,
    /// Noise variance per draw.
    pub sigma2: Vec<f64>,
    /// `trace_crb_g / E‖G‖²`, comparable to NMSE(G).
    pub nmse_g: f64,
    /// `trace_crb_h / E‖H‖²`, comparable to NMSE(H).
    pub nmse_h: f64,
}

struct Draw {
    crb_g_unit: f64,
    crb_h_unit: f64,
    signal_scale: f64,
    g_energy: f64,
    h_energy: f64,
}

/// Expected CRB over `n_draws` channel (and symbol) realizations of the
/// IRS window described by `config`. Per draw, `σ² = ‖Ȳ‖² 10^(-SNR/10)/(MTK)`.
pub fn expected_crb(
    config: &SystemConfig,
    snr_grid: &[f64],
    n_draws: usize,
    seed: u64,
    symbols: SymbolAveraging,
) -> Result<Vec<CrbResult>> {
    if n_draws == 0 {
        return Err(Error::Config(vec!["n_draws must be at least 1".into()]));
    }
    let (m, l, n, t) = (config.m, config.l, config.n, config.t);
    let k = config.irs_blocks();
    let fixed = match symbols {
        SymbolAveraging::Fixed => Some(draw_symbols(
            t,
            l,
            &mut seeded(mix_seed(seed, CRB_STREAM, u64::MAX)),
            true,
        )?),
        SymbolAveraging::Random => None,
    };
    let draws = (0..n_draws)
        .into_par_iter()
        .map(|d| {
            let mut rng = seeded(mix_seed(seed, CRB_STREAM, d as u64));
            let ch = draw_channels(config.channel_model(), m, n, l, false, &mut rng)?;
            let sym: SymbolMatrix = match &fixed {
                Some(s) => s.clone(),
                None => draw_symbols(t, l, &mut rng, true)?,
            };
            let (design, _) = design_for(config.design, l, n, k, &mut rng)?;
            let clean = paratuck_tensor(&ch.h, &ch.g, &sym.x, &design.s, &design.w)?;
            let signal_scale = clean.frobenius_norm_sq() / (m * t * k) as f64;
            let f = build_f(&sym.x, &ch.g, &design.s, &design.w)?;
            Ok(Draw {
                crb_g_unit: crb_g(&sym.x, &ch.h, &design.psi, 1.0)?,
                crb_h_unit: crb_h(&f, 1.0, m)?,
                signal_scale,
                g_energy: ch.g.norm_squared(),
                h_energy: ch.h.norm_squared(),
            })
        })
        .collect::<Result<Vec<Draw>>>()?;

    let nd = n_draws as f64;
    let mean_g_energy = draws.iter().map(|d| d.g_energy).sum::<f64>() / nd;
    let mean_h_energy = draws.iter().map(|d| d.h_energy).sum::<f64>() / nd;
    Ok(snr_grid
        .iter()
        .map(|&snr_db| {
            let factor = 10f64.powf(-snr_db / 10.0);
            let sigma2: Vec<f64> = draws.iter().map(|d| d.signal_scale * factor).collect();
            let per_draw: Vec<(f64, f64)> = draws
                .iter()
                .zip(&sigma2)
                .map(|(d, s2)| (d.crb_g_unit * s2, d.crb_h_unit * s2))
                .collect();
            let trace_crb_g = per_draw.iter().map(|p| p.0).sum::<f64>() / nd;
            let trace_crb_h = per_draw.iter().map(|p| p.1).sum::<f64>() / nd;
            CrbResult {
                snr_db,
                trace_crb_g,
                trace_crb_h,
                per_draw,
                sigma2,
                nmse_g: trace_crb_g / mean_g_energy,
                nmse_h: trace_crb_h / mean_h_energy,
            }
        })
        .collect())
}

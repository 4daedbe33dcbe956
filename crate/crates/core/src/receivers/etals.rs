use super::ambiguity::normalize_pilots;
use super::identifiability::identifiability_check;
use super::krf::krf;
use super::tals::tals;
use super::{ReceiverResult, StageOne, TalsOptions};
use crate::error::{Error, Result};
use crate::signal::parafac_direct_tensor;
use crate::tensor::{khatri_rao, pinv, unfold1, CMatrix, Tensor3, PINV_REL_TOL};

/// `Q[k] = Y[k] - Ĥ_d D_k(W2) X̂ᵀ`.
pub fn subtract_direct(
    y: &Tensor3,
    h_direct: &CMatrix,
    w2: &CMatrix,
    x: &CMatrix,
) -> Result<Tensor3> {
    y.sub(&parafac_direct_tensor(h_direct, x, w2)?)
}

/// LS direct channel from the stage-I window given symbols:
/// `Ĥ_d = [Y^(D)[1] ... Y^(D)[K1]] [(W1 ⋄ X̂)ᵀ]†`.
pub fn refine_direct_channel(y_direct: &Tensor3, w1: &CMatrix, x: &CMatrix) -> Result<CMatrix> {
    if y_direct.dims().2 != w1.nrows() || y_direct.dims().1 != x.nrows() {
        return Err(Error::Dimension(format!(
            "refinement: tensor {:?}, W1 {:?}, X {:?}",
            y_direct.dims(),
            w1.shape(),
            x.shape()
        )));
    }
    let kr = khatri_rao(w1, x)?;
    Ok(unfold1(y_direct) * pinv(&kr.transpose(), PINV_REL_TOL)?)
}

/// Two-stage receiver.
///
/// Stage I estimates `X` and `H_d` in closed form from the direct-only window.
/// Stage II removes the estimated direct contribution from the IRS window and
/// runs TALS warm-started at the stage-I symbols. The direct channel is then
/// re-estimated from the stage-I window with the final symbols.
///
/// An all-zero stage-I window means no direct link: `Ĥ_d = 0` and stage II is
/// plain TALS.
pub fn etals(
    y_direct: &Tensor3,
    y2: &Tensor3,
    w1: &CMatrix,
    w2: &CMatrix,
    s2: &CMatrix,
    opts: &TalsOptions,
) -> Result<ReceiverResult> {
    let (m, t, k2) = y2.dims();
    let (l, n) = (w2.ncols(), s2.ncols());
    let report = identifiability_check(m, l, n, t, k2, Some(w1.nrows()));
    if !report.passes() {
        return Err(Error::Identifiability(report.violations.join("; ")));
    }
    if y_direct.dims().0 != m || y_direct.dims().1 != t || w1.ncols() != l {
        return Err(Error::Dimension(format!(
            "stage I {:?} with W1 {:?} does not match stage II {:?} with L = {l}",
            y_direct.dims(),
            w1.shape(),
            y2.dims()
        )));
    }

    if y_direct.is_zero() {
        let mut res = tals(y2, s2, w2, opts)?;
        let (g, x) = normalize_pilots(&res.g_hat, &res.x_hat)?;
        res.g_hat = g;
        res.x_hat = x;
        res.h_direct_hat = Some(CMatrix::zeros(m, l));
        return Ok(res);
    }

    let stage1 = krf(y_direct, w1)?;
    let q = subtract_direct(y2, &stage1.h_direct_hat, w2, &stage1.x_hat)?;
    let stage2_opts = TalsOptions {
        init_symbols: Some(stage1.x_hat.clone()),
        ..opts.clone()
    };
    let mut res = tals(&q, s2, w2, &stage2_opts)?;
    let (g, x) = normalize_pilots(&res.g_hat, &res.x_hat)?;
    res.h_direct_hat = Some(refine_direct_channel(y_direct, w1, &x)?);
    res.g_hat = g;
    res.x_hat = x;
    res.stage_one = Some(StageOne {
        x_hat: stage1.x_hat,
        h_direct_hat: stage1.h_direct_hat,
    });
    Ok(res)
}

use crate::error::{Error, Result};
use crate::tensor::{svd, unfold3, unvec, CMatrix, Tensor3, C64};

/// Closed-form stage-I estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct KrfResult {
    /// Pilot-normalized symbols, `T x L`.
    pub x_hat: CMatrix,
    pub h_direct_hat: CMatrix,
    /// `σ2/σ1` of each rearranged column; zero for an exact rank-1 fit.
    pub rank_one_gap: Vec<f64>,
}

/// Khatri-Rao factorization of the direct-link PARAFAC tensor
/// `Y^(D)[k] = H_d D_k(W1) Xᵀ`.
///
/// `Z = Y3 W1* / K1 ≈ X ⋄ H_d`; each column rearranged to `M x T` is fitted
/// by its leading singular triplet, and the scale is fixed by the pilot
/// `x_l(1) = 1`.
pub fn krf(y_direct: &Tensor3, w1: &CMatrix) -> Result<KrfResult> {
    let (m, t, k1) = y_direct.dims();
    let l = w1.ncols();
    if w1.nrows() != k1 {
        return Err(Error::Dimension(format!(
            "W1 has {} rows, stage-I tensor has {k1} slices",
            w1.nrows()
        )));
    }
    let gram = w1.transpose() * w1.conjugate();
    let residual = (0..l * l)
        .map(|i| {
            let (r, c) = (i % l, i / l);
            let target = if r == c { k1 as f64 } else { 0.0 };
            (gram[(r, c)] - C64::new(target, 0.0)).norm()
        })
        .fold(0.0, f64::max);
    if residual > 1e-10 * k1 as f64 {
        return Err(Error::Design(format!(
            "W1 is not column-orthogonal (residual {residual:e})"
        )));
    }

    let z = unfold3(y_direct) * w1.conjugate() / C64::new(k1 as f64, 0.0);
    let mut x_hat = CMatrix::zeros(t, l);
    let mut h_direct_hat = CMatrix::zeros(m, l);
    let mut rank_one_gap = Vec::with_capacity(l);
    for col in 0..l {
        let zl = unvec(&z.column(col).into_owned(), m, t)?;
        let d = svd(&zl)?;
        let sigma = d.s[0];
        rank_one_gap.push(match d.s.get(1) {
            Some(s2) if sigma > 0.0 => s2 / sigma,
            _ => 0.0,
        });
        // Z̃ = σ u vᴴ = h xᵀ with x = conj(v)
        let x = d.v.column(0).map(|z| z.conj());
        let pilot = x[0];
        if sigma == 0.0 || pilot.norm() <= 1e-12 * x.norm() {
            return Err(Error::Degenerate(format!(
                "stage-I column {col} has no usable pilot component"
            )));
        }
        for i in 0..t {
            x_hat[(i, col)] = x[i] / pilot;
        }
        for i in 0..m {
            h_direct_hat[(i, col)] = d.u[(i, 0)] * sigma * pilot;
        }
    }
    Ok(KrfResult {
        x_hat,
        h_direct_hat,
        rank_one_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::stage_one_coding;
    use crate::rng::{seeded, standard_complex_matrix};
    use crate::signal::{add_noise, draw_symbols, parafac_direct_tensor};
    use crate::tensor::{khatri_rao, max_abs_diff};

    #[test]
    fn noiseless_recovery_is_exact() {
        for seed in 0..20 {
            let mut rng = seeded(seed);
            let w1 = stage_one_coding(2, 8).unwrap();
            let hd = standard_complex_matrix(4, 2, &mut rng);
            let x = draw_symbols(8, 2, &mut rng, true).unwrap().x;
            let y = parafac_direct_tensor(&hd, &x, &w1).unwrap();
            let r = krf(&y, &w1).unwrap();
            assert!(max_abs_diff(&r.x_hat, &x) < 1e-10);
            assert!(max_abs_diff(&r.h_direct_hat, &hd) < 1e-10);
            assert!(r.rank_one_gap.iter().all(|&g| g < 1e-10));
        }
    }

    #[test]
    fn matches_optimal_rank_one_residual() {
        let mut rng = seeded(5);
        let w1 = stage_one_coding(3, 6).unwrap();
        let hd = standard_complex_matrix(4, 3, &mut rng);
        let x = draw_symbols(5, 3, &mut rng, true).unwrap().x;
        let y = add_noise(
            &parafac_direct_tensor(&hd, &x, &w1).unwrap(),
            10.0,
            &mut rng,
        )
        .unwrap()
        .0;
        let r = krf(&y, &w1).unwrap();
        let z = unfold3(&y) * w1.conjugate() / C64::new(6.0, 0.0);
        let fit = khatri_rao(&r.x_hat, &r.h_direct_hat).unwrap();
        for col in 0..3 {
            let zl = unvec(&z.column(col).into_owned(), 4, 5).unwrap();
            let sv = svd(&zl).unwrap().s;
            let tail: f64 = sv[1..].iter().map(|s| s * s).sum();
            let res = (z.column(col) - fit.column(col)).norm_squared();
            assert!((res - tail).abs() < 1e-9 * (1.0 + tail), "{res} vs {tail}");
        }
    }

    #[test]
    fn non_orthogonal_w1_is_rejected() {
        let mut rng = seeded(6);
        let w1 = standard_complex_matrix(8, 2, &mut rng);
        let y = Tensor3::zeros(4, 8, 8);
        assert!(matches!(krf(&y, &w1), Err(Error::Design(_))));
    }
}

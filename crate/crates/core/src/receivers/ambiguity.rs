use crate::error::{Error, Result};
use crate::tensor::{CMatrix, C64};

/// Divides each column of `X̂` by its first-row pilot and moves the factor
/// into the matching column of `Ĝ`, leaving the model unchanged.
pub fn normalize_pilots(g_hat: &CMatrix, x_hat: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    if x_hat.nrows() == 0 || x_hat.ncols() != g_hat.ncols() {
        return Err(Error::Dimension(format!(
            "pilot normalization: X {:?}, G {:?}",
            x_hat.shape(),
            g_hat.shape()
        )));
    }
    let mut x = x_hat.clone();
    let mut g = g_hat.clone();
    for l in 0..x.ncols() {
        let p = x_hat[(0, l)];
        if p.norm() == 0.0 || !p.norm().is_finite() {
            return Err(Error::Degenerate(format!("zero pilot entry in column {l}")));
        }
        x.column_mut(l).iter_mut().for_each(|z| *z /= p);
        g.column_mut(l).iter_mut().for_each(|z| *z *= p);
    }
    Ok((g, x))
}

/// Resolves the column scaling of `Ĥ` against the true `H` with the LS
/// scalar `δ_n = ĥ_nᴴ h_n / ‖ĥ_n‖²`, compensating in the rows of `Ĝ`.
/// Evaluation only: needs ground truth.
pub fn align_to_truth(
    h_hat: &CMatrix,
    g_hat: &CMatrix,
    h_true: &CMatrix,
) -> Result<(CMatrix, CMatrix)> {
    if h_hat.shape() != h_true.shape() || g_hat.nrows() != h_hat.ncols() {
        return Err(Error::Dimension(format!(
            "alignment: H_hat {:?}, H {:?}, G_hat {:?}",
            h_hat.shape(),
            h_true.shape(),
            g_hat.shape()
        )));
    }
    let mut h = h_hat.clone();
    let mut g = g_hat.clone();
    for n in 0..h.ncols() {
        let est = h_hat.column(n);
        let energy = est.norm_squared();
        let delta = est.dotc(&h_true.column(n)) / C64::new(energy, 0.0);
        if energy == 0.0 || delta.norm() == 0.0 || !delta.norm().is_finite() {
            return Err(Error::Degenerate(format!(
                "column {n} of H_hat cannot be aligned"
            )));
        }
        h.column_mut(n).iter_mut().for_each(|z| *z *= delta);
        g.row_mut(n).iter_mut().for_each(|z| *z /= delta);
    }
    Ok((h, g))
}

/// Pilot normalization of `X̂`, then, when `h_true` is given, alignment of
/// `Ĥ` to it. Returns the corrected `(H, G, X)`.
pub fn remove_ambiguity(
    h_hat: &CMatrix,
    g_hat: &CMatrix,
    x_hat: &CMatrix,
    h_true: Option<&CMatrix>,
) -> Result<(CMatrix, CMatrix, CMatrix)> {
    let (g, x) = normalize_pilots(g_hat, x_hat)?;
    let (h, g) = match h_true {
        Some(truth) => align_to_truth(h_hat, &g, truth)?,
        None => (h_hat.clone(), g),
    };
    Ok((h, g, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{seeded, standard_complex, standard_complex_matrix};
    use crate::signal::draw_symbols;
    use crate::tensor::{diag, max_abs_diff, CVector};

    fn truth(seed: u64) -> (CMatrix, CMatrix, CMatrix) {
        let mut rng = seeded(seed);
        let h = standard_complex_matrix(4, 6, &mut rng);
        let g = standard_complex_matrix(6, 3, &mut rng);
        let x = draw_symbols(5, 3, &mut rng, true).unwrap().x;
        (h, g, x)
    }

    #[test]
    fn correct_estimates_are_unchanged() {
        let (h, g, x) = truth(1);
        let (h2, g2, x2) = remove_ambiguity(&h, &g, &x, Some(&h)).unwrap();
        assert!(max_abs_diff(&h, &h2) < 1e-14);
        assert!(max_abs_diff(&g, &g2) < 1e-14);
        assert!(max_abs_diff(&x, &x2) < 1e-14);
    }

    #[test]
    fn compensating_scalings_are_undone() {
        for seed in 0..20 {
            let (h, g, x) = truth(seed);
            let mut rng = seeded(1000 + seed);
            let dh = diag(&CVector::from_fn(6, |_, _| standard_complex(&mut rng)));
            let dx = diag(&CVector::from_fn(3, |_, _| standard_complex(&mut rng)));
            let dh_inv = dh.clone().try_inverse().unwrap();
            let dx_inv = dx.clone().try_inverse().unwrap();
            let h_hat = &h * &dh;
            let x_hat = &x * &dx;
            let g_hat = &dh_inv * &g * &dx_inv;
            let (h2, g2, x2) = remove_ambiguity(&h_hat, &g_hat, &x_hat, Some(&h)).unwrap();
            assert!(max_abs_diff(&h, &h2) < 1e-12);
            assert!(max_abs_diff(&g, &g2) < 1e-12);
            assert!(max_abs_diff(&x, &x2) < 1e-12);
        }
    }

    #[test]
    fn zero_pilot_is_an_error() {
        let (_, g, mut x) = truth(3);
        x[(0, 1)] = C64::new(0.0, 0.0);
        assert!(matches!(
            normalize_pilots(&g, &x),
            Err(Error::Degenerate(_))
        ));
    }
}

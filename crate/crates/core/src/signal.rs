//! Received-signal synthesis: PARATUCK (IRS link), PARAFAC (direct link),
//! their composite, calibrated noise, and 16-PSK symbol draws.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::standard_complex;
use crate::tensor::{diag_row, CMatrix, Tensor3, C64, ONE};

/// Constellation size.
pub const PSK_ORDER: usize = 16;

/// 16-PSK point `exp(j2πq/16)`; `q = 0` is `1`, so the pilot is a valid point.
pub fn psk_point(q: usize) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * (q % PSK_ORDER) as f64 / PSK_ORDER as f64)
}

/// Transmitted symbols `X` (`T x L`) with their constellation indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolMatrix {
    pub x: CMatrix,
    /// Column-major constellation indices, same layout as `x`.
    pub indices: Vec<usize>,
    /// Row 0 is the all-ones pilot row.
    pub pilot: bool,
}

impl SymbolMatrix {
    pub fn index(&self, t: usize, l: usize) -> usize {
        self.indices[l * self.x.nrows() + t]
    }
}

/// i.i.d. uniform 16-PSK symbols; row 0 forced to ones when `pilot` is set.
pub fn draw_symbols<R: Rng + ?Sized>(
    t: usize,
    l: usize,
    rng: &mut R,
    pilot: bool,
) -> Result<SymbolMatrix> {
    if pilot && t < 2 {
        return Err(Error::Dimension(format!(
            "T >= 2 needed when the first row carries pilots, got T = {t}"
        )));
    }
    let indices: Vec<usize> = (0..t * l)
        .map(|i| {
            if pilot && i % t == 0 {
                0
            } else {
                rng.random_range(0..PSK_ORDER)
            }
        })
        .collect();
    let x = CMatrix::from_iterator(t, l, indices.iter().map(|&q| psk_point(q)));
    Ok(SymbolMatrix { x, indices, pilot })
}

fn expect_shape(what: &str, m: &CMatrix, rows: usize, cols: usize) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(Error::Dimension(format!(
            "{what} is {}x{}, expected {rows}x{cols}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Noiseless PARATUCK tensor, slice `k = H D_k(S) G D_k(W) Xᵀ`.
pub fn paratuck_tensor(
    h: &CMatrix,
    g: &CMatrix,
    x: &CMatrix,
    s: &CMatrix,
    w: &CMatrix,
) -> Result<Tensor3> {
    let (m, n) = h.shape();
    let l = g.ncols();
    let t = x.nrows();
    let k = s.nrows();
    expect_shape("G", g, n, l)?;
    expect_shape("X", x, t, l)?;
    expect_shape("S", s, k, n)?;
    expect_shape("W", w, k, l)?;
    let xt = x.transpose();
    let slices = (0..k)
        .map(|kk| {
            let core = diag_row(s, kk)? * g * diag_row(w, kk)?;
            Ok(h * core * &xt)
        })
        .collect::<Result<Vec<_>>>()?;
    let out = Tensor3::from_slices(slices)?;
    debug_assert_eq!(out.dims(), (m, t, k));
    Ok(out)
}

/// Noiseless PARAFAC tensor of the direct link, slice `k = H_d D_k(W1) Xᵀ`.
pub fn parafac_direct_tensor(h_direct: &CMatrix, x: &CMatrix, w1: &CMatrix) -> Result<Tensor3> {
    let l = h_direct.ncols();
    expect_shape("X", x, x.nrows(), l)?;
    expect_shape("W1", w1, w1.nrows(), l)?;
    let xt = x.transpose();
    let slices = (0..w1.nrows())
        .map(|k| Ok(h_direct * diag_row(w1, k)? * &xt))
        .collect::<Result<Vec<_>>>()?;
    Tensor3::from_slices(slices)
}

/// Stage-II signal with the direct link scaled to sit `alpha_db` below the
/// IRS-assisted link in total received power.
#[derive(Debug, Clone)]
pub struct CompositeSignal {
    pub tensor: Tensor3,
    /// Factor `c_α` applied to the direct channel. The effective direct
    /// channel seen by the receiver is `c_α · H_d`.
    pub direct_scale: f64,
    pub assisted_power: f64,
    pub direct_power: f64,
}

/// `c_α H_d D_k(W2) Xᵀ + H D_k(S2) G D_k(W2) Xᵀ`, with `c_α` chosen so the
/// realized power of the direct term is exactly `alpha_db` below the assisted
/// term. `alpha_db = +inf` drops the direct term.
pub fn composite_tensor(
    h: &CMatrix,
    g: &CMatrix,
    h_direct: Option<&CMatrix>,
    x: &CMatrix,
    w2: &CMatrix,
    s2: &CMatrix,
    alpha_db: f64,
) -> Result<CompositeSignal> {
    let h_direct = h_direct
        .ok_or_else(|| Error::Dimension("composite signal needs a direct channel".into()))?;
    let assisted = paratuck_tensor(h, g, x, s2, w2)?;
    let direct = parafac_direct_tensor(h_direct, x, w2)?;
    let pa = assisted.frobenius_norm_sq();
    let pd = direct.frobenius_norm_sq();
    let scale = if alpha_db.is_infinite() && alpha_db > 0.0 || pd == 0.0 {
        0.0
    } else {
        (10f64.powf(-alpha_db / 10.0) * pa / pd).sqrt()
    };
    let tensor = assisted.add(&direct.scale(C64::new(scale, 0.0)))?;
    Ok(CompositeSignal {
        tensor,
        direct_scale: scale,
        assisted_power: pa,
        direct_power: pd * scale * scale,
    })
}

/// Per-entry noise variance that puts `signal` at `snr_db`.
pub fn noise_variance_for(signal: &Tensor3, snr_db: f64) -> f64 {
    let (a, b, c) = signal.dims();
    signal.frobenius_norm_sq() * 10f64.powf(-snr_db / 10.0) / (a * b * c) as f64
}

/// i.i.d. `CN(0, variance)` tensor.
pub fn gaussian_noise<R: Rng + ?Sized>(
    dims: (usize, usize, usize),
    variance: f64,
    rng: &mut R,
) -> Tensor3 {
    let sd = variance.sqrt();
    Tensor3::from_fn(dims.0, dims.1, dims.2, |_, _, _| standard_complex(rng) * sd)
}

/// Adds Gaussian noise rescaled so `10 log10(‖Y‖²/‖B‖²)` equals `snr_db`
/// exactly for this realization. `snr_db = +inf` adds nothing. Returns
/// `(noisy, noise)`.
pub fn add_noise<R: Rng + ?Sized>(
    signal: &Tensor3,
    snr_db: f64,
    rng: &mut R,
) -> Result<(Tensor3, Tensor3)> {
    let (a, b, c) = signal.dims();
    if signal.is_zero() {
        return Err(Error::Degenerate(
            "cannot set an SNR on an all-zero signal".into(),
        ));
    }
    if snr_db.is_infinite() && snr_db > 0.0 {
        return Ok((signal.clone(), Tensor3::zeros(a, b, c)));
    }
    let raw = gaussian_noise((a, b, c), 1.0, rng);
    let target = signal.frobenius_norm_sq() * 10f64.powf(-snr_db / 10.0);
    let noise = raw.scale(C64::new((target / raw.frobenius_norm_sq()).sqrt(), 0.0));
    Ok((signal.add(&noise)?, noise))
}

/// Realized SNR in dB.
pub fn realized_snr_db(signal: &Tensor3, noise: &Tensor3) -> f64 {
    10.0 * (signal.frobenius_norm_sq() / noise.frobenius_norm_sq()).log10()
}

/// All-ones matrix, handy for degenerate designs.
pub fn ones(rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_element(rows, cols, ONE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{dft_design, stage_one_coding};
    use crate::rng::{seeded, standard_complex_matrix};
    use crate::tensor::{diag, khatri_rao, kronecker, max_abs_diff, unfold3, vec};

    /// Five-fold sum of the PARATUCK scalar form.
    #[allow(clippy::too_many_arguments)]
    fn scalar_oracle(
        h: &CMatrix,
        g: &CMatrix,
        x: &CMatrix,
        s: &CMatrix,
        w: &CMatrix,
        m: usize,
        t: usize,
        k: usize,
    ) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for n in 0..g.nrows() {
            for l in 0..g.ncols() {
                acc += g[(n, l)] * x[(t, l)] * h[(m, n)] * s[(k, n)] * w[(k, l)];
            }
        }
        acc
    }

    #[test]
    fn single_element_single_stream_is_outer_product() {
        let mut rng = seeded(1);
        let h = standard_complex_matrix(3, 1, &mut rng);
        let g = standard_complex_matrix(1, 1, &mut rng);
        let y = paratuck_tensor(&h, &g, &ones(2, 1), &ones(4, 1), &ones(4, 1)).unwrap();
        let expected = &h * &g * ones(1, 2);
        for k in 0..4 {
            assert!(max_abs_diff(y.slice(k), &expected) < 1e-15);
        }
    }

    #[test]
    fn paratuck_matches_scalar_form() {
        let mut rng = seeded(2);
        let (m, l, n, t, k) = (2, 2, 3, 4, 5);
        let h = standard_complex_matrix(m, n, &mut rng);
        let g = standard_complex_matrix(n, l, &mut rng);
        let x = standard_complex_matrix(t, l, &mut rng);
        let s = standard_complex_matrix(k, n, &mut rng);
        let w = standard_complex_matrix(k, l, &mut rng);
        let y = paratuck_tensor(&h, &g, &x, &s, &w).unwrap();
        for mm in 0..m {
            for tt in 0..t {
                for kk in 0..k {
                    let o = scalar_oracle(&h, &g, &x, &s, &w, mm, tt, kk);
                    assert!((y.get(mm, tt, kk) - o).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn paratuck_third_unfolding_structure() {
        let mut rng = seeded(3);
        let (m, l, n, t, k) = (3, 2, 4, 3, 8);
        let d = dft_design(l, n, k).unwrap();
        let h = standard_complex_matrix(m, n, &mut rng);
        let g = standard_complex_matrix(n, l, &mut rng);
        let x = standard_complex_matrix(t, l, &mut rng);
        let y = paratuck_tensor(&h, &g, &x, &d.s, &d.w).unwrap();
        let expected = kronecker(&x, &h) * diag(&vec(&g)) * &d.psi;
        assert!(max_abs_diff(&unfold3(&y), &expected) < 1e-10);
    }

    #[test]
    fn paratuck_rejects_bad_shapes() {
        let z = |r, c| CMatrix::zeros(r, c);
        assert!(paratuck_tensor(&z(2, 3), &z(4, 2), &z(3, 2), &z(5, 3), &z(5, 2)).is_err());
        assert!(paratuck_tensor(&z(2, 3), &z(3, 2), &z(3, 2), &z(5, 3), &z(4, 2)).is_err());
    }

    #[test]
    fn paratuck_is_linear_in_x_and_g() {
        let mut rng = seeded(4);
        let h = standard_complex_matrix(2, 3, &mut rng);
        let g = standard_complex_matrix(3, 2, &mut rng);
        let x = standard_complex_matrix(4, 2, &mut rng);
        let s = standard_complex_matrix(5, 3, &mut rng);
        let w = standard_complex_matrix(5, 2, &mut rng);
        let c = C64::new(0.3, -1.7);
        let base = paratuck_tensor(&h, &g, &x, &s, &w).unwrap().scale(c);
        let sx = paratuck_tensor(&h, &g, &(&x * c), &s, &w).unwrap();
        let sg = paratuck_tensor(&h, &(&g * c), &x, &s, &w).unwrap();
        for kk in 0..5 {
            assert!(max_abs_diff(base.slice(kk), sx.slice(kk)) < 1e-12);
            assert!(max_abs_diff(base.slice(kk), sg.slice(kk)) < 1e-12);
        }
    }

    #[test]
    fn parafac_single_stream_is_rank_one() {
        let mut rng = seeded(5);
        let hd = standard_complex_matrix(3, 1, &mut rng);
        let x = standard_complex_matrix(4, 1, &mut rng);
        let w1 = standard_complex_matrix(2, 1, &mut rng);
        let y = parafac_direct_tensor(&hd, &x, &w1).unwrap();
        for k in 0..2 {
            assert_eq!(crate::tensor::rank(y.slice(k), 1e-10).unwrap(), 1);
        }
    }

    #[test]
    fn parafac_matches_triple_sum_and_khatri_rao_form() {
        let mut rng = seeded(6);
        let (m, l, t, k1) = (3, 2, 4, 5);
        let hd = standard_complex_matrix(m, l, &mut rng);
        let x = standard_complex_matrix(t, l, &mut rng);
        let w1 = stage_one_coding(l, k1).unwrap();
        let y = parafac_direct_tensor(&hd, &x, &w1).unwrap();
        for mm in 0..m {
            for tt in 0..t {
                for kk in 0..k1 {
                    let o: C64 = (0..l).map(|r| hd[(mm, r)] * x[(tt, r)] * w1[(kk, r)]).sum();
                    assert!((y.get(mm, tt, kk) - o).norm() < 1e-12);
                }
            }
        }
        let expected = khatri_rao(&x, &hd).unwrap() * w1.transpose();
        assert!(max_abs_diff(&unfold3(&y), &expected) < 1e-12);
    }

    fn composite_fixture(
        seed: u64,
    ) -> (
        CMatrix,
        CMatrix,
        CMatrix,
        CMatrix,
        crate::design::CodingDesign,
    ) {
        let mut rng = seeded(seed);
        let (m, l, n, t, k) = (3, 2, 4, 3, 8);
        (
            standard_complex_matrix(m, n, &mut rng),
            standard_complex_matrix(n, l, &mut rng),
            standard_complex_matrix(m, l, &mut rng),
            standard_complex_matrix(t, l, &mut rng),
            dft_design(l, n, k).unwrap(),
        )
    }

    #[test]
    fn composite_infinite_alpha_is_paratuck() {
        let (h, g, hd, x, d) = composite_fixture(7);
        let c = composite_tensor(&h, &g, Some(&hd), &x, &d.w, &d.s, f64::INFINITY).unwrap();
        let p = paratuck_tensor(&h, &g, &x, &d.s, &d.w).unwrap();
        assert_eq!(c.direct_scale, 0.0);
        assert_eq!(c.tensor, p);
    }

    #[test]
    fn composite_power_ratio_hits_alpha() {
        for alpha in [0.0, 10.0, 20.0] {
            let mut acc = 0.0;
            for seed in 0..500 {
                let (h, g, hd, x, d) = composite_fixture(seed);
                let c = composite_tensor(&h, &g, Some(&hd), &x, &d.w, &d.s, alpha).unwrap();
                let direct =
                    parafac_direct_tensor(&(&hd * C64::new(c.direct_scale, 0.0)), &x, &d.w)
                        .unwrap();
                let assisted = paratuck_tensor(&h, &g, &x, &d.s, &d.w).unwrap();
                acc += 10.0 * (direct.frobenius_norm_sq() / assisted.frobenius_norm_sq()).log10();
            }
            let mean = acc / 500.0;
            assert!((mean + alpha).abs() < 0.1, "alpha {alpha}: {mean}");
        }
    }

    #[test]
    fn composite_equal_power_at_zero_alpha() {
        let (h, g, hd, x, d) = composite_fixture(8);
        let c = composite_tensor(&h, &g, Some(&hd), &x, &d.w, &d.s, 0.0).unwrap();
        assert!((c.direct_power / c.assisted_power - 1.0).abs() < 1e-12);
    }

    #[test]
    fn composite_requires_direct_channel() {
        let (h, g, _, x, d) = composite_fixture(9);
        assert!(composite_tensor(&h, &g, None, &x, &d.w, &d.s, 0.0).is_err());
    }

    #[test]
    fn noise_hits_snr_exactly() {
        let (h, g, _, x, d) = composite_fixture(10);
        let y = paratuck_tensor(&h, &g, &x, &d.s, &d.w).unwrap();
        let mut rng = seeded(11);
        for snr in [-5.0, 0.0, 12.5, 30.0] {
            let (noisy, noise) = add_noise(&y, snr, &mut rng).unwrap();
            assert!((realized_snr_db(&y, &noise) - snr).abs() < 1e-9);
            let back = noisy.sub(&noise).unwrap();
            for k in 0..y.dims().2 {
                assert!(max_abs_diff(back.slice(k), y.slice(k)) < 1e-12);
            }
        }
    }

    #[test]
    fn noise_infinite_snr_and_zero_signal() {
        let (h, g, _, x, d) = composite_fixture(12);
        let y = paratuck_tensor(&h, &g, &x, &d.s, &d.w).unwrap();
        let (noisy, noise) = add_noise(&y, f64::INFINITY, &mut seeded(0)).unwrap();
        assert_eq!(noisy, y);
        assert!(noise.is_zero());
        let z = Tensor3::zeros(2, 2, 2);
        assert!(matches!(
            add_noise(&z, 10.0, &mut seeded(0)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn symbols_are_psk_with_pilot_row() {
        let sm = draw_symbols(6, 3, &mut seeded(13), true).unwrap();
        assert!(sm.x.iter().all(|z| (z.norm() - 1.0).abs() < 1e-15));
        for l in 0..3 {
            assert_eq!(sm.x[(0, l)], ONE);
            assert_eq!(sm.index(0, l), 0);
            for t in 0..6 {
                assert_eq!(sm.x[(t, l)], psk_point(sm.index(t, l)));
            }
        }
        assert!(draw_symbols(1, 3, &mut seeded(0), true).is_err());
    }

    #[test]
    fn symbol_frequencies_are_uniform() {
        let sm = draw_symbols(100_000, 1, &mut seeded(14), false).unwrap();
        let mut counts = [0usize; PSK_ORDER];
        for &q in &sm.indices {
            counts[q] += 1;
        }
        let expected = sm.indices.len() as f64 / PSK_ORDER as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // 99.9% quantile of chi-square with 15 degrees of freedom
        assert!(chi2 < 37.7, "chi2 = {chi2}, {counts:?}");
    }
}

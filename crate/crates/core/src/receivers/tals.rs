use std::time::Instant;

use super::identifiability::identifiability_check;
use super::steps::{
    build_e, build_f, g_update, reconstruct, reconstruction_cost, reconstruction_error, step_h,
    step_x,
};
use super::{ReceiverResult, TalsOptions};
use crate::design::is_semi_unitary;
use crate::error::{Error, Result};
use crate::rng::{mix_seed, seeded, standard_complex_matrix};
use crate::tensor::{khatri_rao, rank, unfold1, unfold2, unfold3, CMatrix, Tensor3};

/// Unweighted cost after each of the three updates of one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepCosts {
    pub after_h: f64,
    pub after_g: f64,
    pub after_x: f64,
}

/// Trilinear alternating least squares on `Y[k] = H D_k(S) G D_k(W) Xᵀ`.
///
/// Each iteration updates `H` from the 1-mode unfolding, `G` from the
/// 3-mode unfolding and (when `refine_symbols` is set) `X` from the 2-mode
/// unfolding. Iteration stops once `|ε_(i) - ε_(i-1)| <= delta` or after
/// `max_iters`. Estimates carry the usual diagonal scaling ambiguities; see
/// [`super::remove_ambiguity`].
pub fn tals(y: &Tensor3, s: &CMatrix, w: &CMatrix, opts: &TalsOptions) -> Result<ReceiverResult> {
    tals_inner(y, s, w, opts, None)
}

/// [`tals`] that also records the unweighted cost after every update.
pub fn tals_traced(
    y: &Tensor3,
    s: &CMatrix,
    w: &CMatrix,
    opts: &TalsOptions,
) -> Result<(ReceiverResult, Vec<StepCosts>)> {
    let mut costs = Vec::new();
    let res = tals_inner(y, s, w, opts, Some(&mut costs))?;
    Ok((res, costs))
}

struct Unfoldings {
    y1: CMatrix,
    y2: CMatrix,
    y3: CMatrix,
}

fn validate(y: &Tensor3, s: &CMatrix, w: &CMatrix, opts: &TalsOptions) -> Result<()> {
    let (m, t, k) = y.dims();
    let (n, l) = (s.ncols(), w.ncols());
    if s.nrows() != k || w.nrows() != k {
        return Err(Error::Dimension(format!(
            "tensor has {k} slices but S has {} rows and W has {}",
            s.nrows(),
            w.nrows()
        )));
    }
    if opts.delta.is_nan() || opts.delta <= 0.0 || opts.max_iters == 0 {
        return Err(Error::Config(vec![format!(
            "need delta > 0 and max_iters >= 1 (got {} and {})",
            opts.delta, opts.max_iters
        )]));
    }
    if let Some(x0) = &opts.init_symbols {
        if x0.shape() != (t, l) {
            return Err(Error::Dimension(format!(
                "initial symbols are {:?}, expected ({t}, {l})",
                x0.shape()
            )));
        }
    }
    let report = identifiability_check(m, l, n, t, k, None);
    if !report.passes() {
        return Err(Error::Identifiability(report.violations.join("; ")));
    }
    if y.is_zero() {
        return Err(Error::Degenerate(
            "degenerate input: all-zero tensor".into(),
        ));
    }
    Ok(())
}

fn tals_inner(
    y: &Tensor3,
    s: &CMatrix,
    w: &CMatrix,
    opts: &TalsOptions,
    mut costs: Option<&mut Vec<StepCosts>>,
) -> Result<ReceiverResult> {
    let start = Instant::now();
    validate(y, s, w, opts)?;
    let unf = Unfoldings {
        y1: unfold1(y),
        y2: unfold2(y),
        y3: unfold3(y),
    };
    let psi = khatri_rao(&w.transpose(), &s.transpose())?;
    let fast = opts.fast_g_step && is_semi_unitary(&psi);

    let mut best: Option<ReceiverResult> = None;
    for attempt in 0..=opts.restarts {
        let seed = if attempt == 0 {
            opts.init_seed
        } else {
            mix_seed(opts.init_seed, u64::MAX, attempt as u64)
        };
        let trace_sink = if attempt == 0 {
            costs.as_deref_mut()
        } else {
            None
        };
        let res = run_once(y, &unf, s, w, &psi, fast, opts, seed, trace_sink)?;
        let better = match &best {
            None => true,
            Some(b) => res.error_trace.last() < b.error_trace.last(),
        };
        if better {
            best = Some(res);
        }
    }
    let mut res = best.expect("at least one attempt");
    res.wall_time = start.elapsed();
    Ok(res)
}

#[allow(clippy::too_many_arguments)]
fn run_once(
    y: &Tensor3,
    unf: &Unfoldings,
    s: &CMatrix,
    w: &CMatrix,
    psi: &CMatrix,
    fast: bool,
    opts: &TalsOptions,
    seed: u64,
    mut costs: Option<&mut Vec<StepCosts>>,
) -> Result<ReceiverResult> {
    let (_, t, _) = y.dims();
    let (n, l) = (s.ncols(), w.ncols());
    let mut rng = seeded(seed);
    let mut g = standard_complex_matrix(n, l, &mut rng);
    let mut x = match &opts.init_symbols {
        Some(x0) => x0.clone(),
        None => standard_complex_matrix(t, l, &mut rng),
    };
    let mut h = CMatrix::zeros(y.dims().0, n);

    let mut trace = Vec::new();
    let mut converged = false;
    let mut prev: Option<f64> = None;
    for _ in 0..opts.max_iters {
        let f = build_f(&x, &g, s, w)?;
        h = step_h(&unf.y1, &f)?;
        let after_h = match costs {
            Some(_) => reconstruction_cost(y, &reconstruct(&h, &g, &x, s, w)?),
            None => 0.0,
        };

        g = g_update(&unf.y3, &x, &h, psi, fast)?;
        let after_g = match costs {
            Some(_) => reconstruction_cost(y, &reconstruct(&h, &g, &x, s, w)?),
            None => 0.0,
        };

        if opts.refine_symbols {
            let e = build_e(&h, &g, s, w)?;
            x = step_x(&unf.y2, &e)?;
        }
        let y_hat = reconstruct(&h, &g, &x, s, w)?;
        if let Some(sink) = costs.as_deref_mut() {
            sink.push(StepCosts {
                after_h,
                after_g,
                after_x: reconstruction_cost(y, &y_hat),
            });
        }
        let eps = reconstruction_error(y, &y_hat);
        trace.push(eps);
        if let Some(p) = prev {
            if (eps - p).abs() <= opts.delta {
                converged = true;
                break;
            }
        }
        prev = Some(eps);
    }

    let mut warnings = Vec::new();
    let f = build_f(&x, &g, s, w)?;
    if rank(&f, 1e-10)? < n {
        warnings.push(format!("F lost column rank (rank < N = {n})"));
    }
    if opts.refine_symbols && rank(&build_e(&h, &g, s, w)?, 1e-10)? < l {
        warnings.push(format!("E lost column rank (rank < L = {l})"));
    }

    Ok(ReceiverResult {
        h_hat: h,
        g_hat: g,
        x_hat: x,
        h_direct_hat: None,
        iterations: trace.len(),
        error_trace: trace,
        converged,
        wall_time: Default::default(),
        stage_one: None,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::dft_design;
    use crate::receivers::remove_ambiguity;
    use crate::rng::seeded;
    use crate::signal::{add_noise, draw_symbols, paratuck_tensor};

    fn nmse(truth: &CMatrix, est: &CMatrix) -> f64 {
        (truth - est).norm_squared() / truth.norm_squared()
    }

    struct Case {
        h: CMatrix,
        g: CMatrix,
        x: CMatrix,
        design: crate::design::CodingDesign,
        y: Tensor3,
    }

    fn case(seed: u64, dims: (usize, usize, usize, usize, usize), snr_db: f64) -> Case {
        let (m, l, n, t, k) = dims;
        let mut rng = seeded(seed);
        let design = dft_design(l, n, k).unwrap();
        let h = standard_complex_matrix(m, n, &mut rng);
        let g = standard_complex_matrix(n, l, &mut rng);
        let x = draw_symbols(t, l, &mut rng, true).unwrap().x;
        let clean = paratuck_tensor(&h, &g, &x, &design.s, &design.w).unwrap();
        let y = add_noise(&clean, snr_db, &mut rng).unwrap().0;
        Case { h, g, x, design, y }
    }

    #[test]
    fn noiseless_recovery() {
        let c = case(1, (4, 2, 8, 4, 32), f64::INFINITY);
        let opts = TalsOptions {
            init_seed: 7,
            ..Default::default()
        };
        let res = tals(&c.y, &c.design.s, &c.design.w, &opts).unwrap();
        let (h, g, x) = remove_ambiguity(&res.h_hat, &res.g_hat, &res.x_hat, Some(&c.h)).unwrap();
        eprintln!(
            "iters {} eps {:e}",
            res.iterations,
            res.error_trace.last().unwrap()
        );
        assert!(nmse(&c.h, &h) < 1e-8);
        assert!(nmse(&c.g, &g) < 1e-8);
        assert!(nmse(&c.x, &x) < 1e-8);
        assert!(res.converged);
    }

    #[test]
    fn zero_input_is_degenerate() {
        let d = dft_design(2, 8, 32).unwrap();
        let y = Tensor3::zeros(4, 4, 32);
        let err = tals(&y, &d.s, &d.w, &TalsOptions::default()).unwrap_err();
        assert!(err.to_string().contains("degenerate input"), "{err}");
    }

    #[test]
    fn identifiability_violation_is_reported() {
        let d = dft_design(1, 4, 4).unwrap();
        let y = Tensor3::from_fn(1, 1, 4, |_, _, _| crate::tensor::ONE);
        let y = Tensor3::from_slices((0..2).map(|k| y.slice(k).clone()).collect()).unwrap();
        let s = d.s.rows(0, 2).into_owned();
        let w = d.w.rows(0, 2).into_owned();
        let err = tals(&y, &s, &w, &TalsOptions::default()).unwrap_err();
        assert!(err.to_string().contains("TK >= N"), "{err}");
    }

    #[test]
    fn options_are_validated() {
        let c = case(2, (4, 2, 8, 4, 32), 20.0);
        let bad = TalsOptions {
            delta: 0.0,
            ..Default::default()
        };
        assert!(tals(&c.y, &c.design.s, &c.design.w, &bad).is_err());
        let bad = TalsOptions {
            init_symbols: Some(CMatrix::zeros(3, 2)),
            ..Default::default()
        };
        assert!(tals(&c.y, &c.design.s, &c.design.w, &bad).is_err());
    }

    #[test]
    fn every_update_is_non_increasing() {
        for seed in 0..20 {
            let c = case(100 + seed, (4, 2, 8, 4, 32), 20.0);
            let opts = TalsOptions {
                init_seed: seed,
                max_iters: 60,
                ..Default::default()
            };
            let (_, costs) = tals_traced(&c.y, &c.design.s, &c.design.w, &opts).unwrap();
            let mut last = f64::INFINITY;
            for sc in costs {
                for v in [sc.after_h, sc.after_g, sc.after_x] {
                    assert!(
                        v <= last * (1.0 + 1e-9) + 1e-12,
                        "seed {seed}: {v} > {last}"
                    );
                    last = v;
                }
            }
        }
    }

    #[test]
    fn max_iters_caps_iterations() {
        let c = case(3, (4, 2, 8, 4, 32), 10.0);
        let opts = TalsOptions {
            max_iters: 2,
            delta: 1e-300,
            ..Default::default()
        };
        let res = tals(&c.y, &c.design.s, &c.design.w, &opts).unwrap();
        assert_eq!(res.iterations, 2);
        assert!(!res.converged);
    }

    #[test]
    fn restarts_never_worsen_the_final_error() {
        let c = case(4, (4, 2, 8, 4, 32), 15.0);
        let one = tals(&c.y, &c.design.s, &c.design.w, &TalsOptions::default()).unwrap();
        let many = tals(
            &c.y,
            &c.design.s,
            &c.design.w,
            &TalsOptions {
                restarts: 3,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(many.error_trace.last() <= one.error_trace.last());
    }
}

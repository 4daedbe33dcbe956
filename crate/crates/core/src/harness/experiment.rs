use rand::RngCore;
use rayon::prelude::*;

use super::config::{ReceiverKind, SystemConfig};
use super::metrics::{nmse, ser};
use crate::channel::draw_channels;
use crate::design::{design_for, split_design};
use crate::error::{Error, Result};
use crate::receivers::{
    demodulate, etals, remove_ambiguity, subtract_direct, tals, ReceiverResult, TalsOptions,
};
use crate::rng::{mix_seed, seeded, SimRng};
use crate::signal::{
    add_noise, composite_tensor, draw_symbols, gaussian_noise, noise_variance_for,
    parafac_direct_tensor, paratuck_tensor, realized_snr_db, SymbolMatrix,
};
use crate::tensor::{CMatrix, C64};

/// Stage-I quality of a two-stage run.
#[derive(Debug, Clone, PartialEq)]
pub struct StageOneMetrics {
    pub ser: f64,
    pub nmse_hd: f64,
    /// Realized stage-II SNR in dB once stage-I residuals count as noise.
    pub effective_snr_db: f64,
}

/// Outcome of one `(snr, run)` job.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub snr_db: f64,
    pub run: usize,
    pub seed: u64,
    pub nmse_h: f64,
    pub nmse_g: f64,
    pub nmse_hd: Option<f64>,
    pub ser: f64,
    pub iters: usize,
    pub converged: bool,
    /// Zero unless timing is recorded.
    pub wall_ms: f64,
    pub stage_one: Option<StageOneMetrics>,
    /// Iterations of plain TALS on the same channels, when requested.
    pub baseline_iters: Option<usize>,
    pub warnings: Vec<String>,
}

/// Means over the runs of one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrSummary {
    pub snr_db: f64,
    pub runs: usize,
    pub nmse_h: f64,
    pub nmse_g: f64,
    pub nmse_hd: Option<f64>,
    pub ser: f64,
    pub mean_iters: f64,
    pub median_iters: f64,
    pub converged_fraction: f64,
    pub wall_ms: f64,
    pub stage_one_ser: Option<f64>,
    pub stage_one_nmse_hd: Option<f64>,
    pub stage_two_effective_snr_db: Option<f64>,
    pub median_baseline_iters: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub config: SystemConfig,
    /// Ordered by SNR index, then run index.
    pub records: Vec<ExperimentRecord>,
    pub summaries: Vec<SnrSummary>,
}

/// Runs every `(snr, run)` job in parallel. Results are ordered and
/// independent of scheduling.
pub fn run_experiment(config: &SystemConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let jobs: Vec<(usize, usize)> = (0..config.snr_grid.len())
        .flat_map(|s| (0..config.runs).map(move |r| (s, r)))
        .collect();
    let records = jobs
        .par_iter()
        .map(|&(s, r)| run_single(config, s, r))
        .collect::<Result<Vec<_>>>()?;
    let summaries = config
        .snr_grid
        .iter()
        .enumerate()
        .map(|(s, &snr)| summarize(snr, &records[s * config.runs..(s + 1) * config.runs]))
        .collect();
    Ok(ExperimentOutput {
        config: config.clone(),
        records,
        summaries,
    })
}

/// One Monte Carlo realization, seeded by `mix_seed(base_seed, snr_index, run)`.
pub fn run_single(config: &SystemConfig, snr_index: usize, run: usize) -> Result<ExperimentRecord> {
    let snr_db = *config.snr_grid.get(snr_index).ok_or(Error::Index {
        index: snr_index,
        len: config.snr_grid.len(),
    })?;
    let seed = mix_seed(config.base_seed, snr_index as u64, run as u64);
    let mut rng = seeded(seed);
    let mut rec = match config.receiver {
        ReceiverKind::Tals => single_stage(config, snr_db, &mut rng)?,
        ReceiverKind::Etals | ReceiverKind::EtalsNoRefine => two_stage(config, snr_db, &mut rng)?,
    };
    rec.run = run;
    rec.seed = seed;
    Ok(rec)
}

fn evaluate(
    res: &ReceiverResult,
    h: &CMatrix,
    g: &CMatrix,
    sym: &SymbolMatrix,
    snr_db: f64,
    record_timing: bool,
) -> Result<ExperimentRecord> {
    let (h_hat, g_hat, x_hat) = remove_ambiguity(&res.h_hat, &res.g_hat, &res.x_hat, Some(h))?;
    let hard = demodulate(&x_hat);
    Ok(ExperimentRecord {
        snr_db,
        run: 0,
        seed: 0,
        nmse_h: nmse(h, &h_hat)?,
        nmse_g: nmse(g, &g_hat)?,
        nmse_hd: None,
        ser: ser(&sym.indices, &hard.indices, sym.x.nrows(), true)?,
        iters: res.iterations,
        converged: res.converged,
        wall_ms: if record_timing {
            res.wall_time.as_secs_f64() * 1e3
        } else {
            0.0
        },
        stage_one: None,
        baseline_iters: None,
        warnings: res.warnings.clone(),
    })
}

fn plain_tals(
    config: &SystemConfig,
    h: &CMatrix,
    g: &CMatrix,
    sym: &SymbolMatrix,
    k: usize,
    snr_db: f64,
    rng: &mut SimRng,
) -> Result<ReceiverResult> {
    let (design, warning) = design_for(config.design, config.l, config.n, k, rng)?;
    let clean = paratuck_tensor(h, g, &sym.x, &design.s, &design.w)?;
    let (y, _) = add_noise(&clean, snr_db, rng)?;
    let opts = TalsOptions {
        refine_symbols: true,
        ..config.tals_options(rng.next_u64())
    };
    let mut res = tals(&y, &design.s, &design.w, &opts)?;
    res.warnings.extend(warning);
    Ok(res)
}

fn single_stage(config: &SystemConfig, snr_db: f64, rng: &mut SimRng) -> Result<ExperimentRecord> {
    let (m, l, n, t) = (config.m, config.l, config.n, config.t);
    let ch = draw_channels(config.channel_model(), m, n, l, false, rng)?;
    let sym = draw_symbols(t, l, rng, true)?;
    let res = plain_tals(config, &ch.h, &ch.g, &sym, config.k, snr_db, rng)?;
    evaluate(&res, &ch.h, &ch.g, &sym, snr_db, config.record_timing)
}

fn two_stage(config: &SystemConfig, snr_db: f64, rng: &mut SimRng) -> Result<ExperimentRecord> {
    let (m, l, n, t) = (config.m, config.l, config.n, config.t);
    let (k1, k2) = (config.k1.expect("validated"), config.k2.expect("validated"));
    let alpha_db = config.alpha_db.expect("validated");
    let ch = draw_channels(config.channel_model(), m, n, l, true, rng)?;
    let hd = ch.h_direct.clone().expect("drawn with direct link");
    let sym = draw_symbols(t, l, rng, true)?;
    let split = split_design(config.design, l, n, k1, k2, rng)?;
    let (w2, s2) = (&split.stage2.w, &split.stage2.s);

    let comp = composite_tensor(&ch.h, &ch.g, Some(&hd), &sym.x, w2, s2, alpha_db)?;
    let hd_eff = &hd * C64::new(comp.direct_scale, 0.0);
    let variance = if snr_db.is_infinite() {
        0.0
    } else {
        noise_variance_for(&comp.tensor, snr_db)
    };
    let y2 = comp
        .tensor
        .add(&gaussian_noise(comp.tensor.dims(), variance, rng))?;
    let y1_clean = parafac_direct_tensor(&hd_eff, &sym.x, &split.w1)?;
    let y1 = y1_clean.add(&gaussian_noise(y1_clean.dims(), variance, rng))?;

    let opts = config.tals_options(rng.next_u64());
    let mut res = etals(&y1, &y2, &split.w1, w2, s2, &opts)?;
    res.warnings.extend(split.warning.clone());
    let mut rec = evaluate(&res, &ch.h, &ch.g, &sym, snr_db, config.record_timing)?;

    let hd_nmse = |est: &CMatrix| -> Result<Option<f64>> {
        if hd_eff.norm_squared() == 0.0 {
            Ok(None)
        } else {
            nmse(&hd_eff, est).map(Some)
        }
    };
    rec.nmse_hd = match &res.h_direct_hat {
        Some(est) => hd_nmse(est)?,
        None => None,
    };
    if let Some(stage) = &res.stage_one {
        let hard = demodulate(&stage.x_hat);
        let assisted = paratuck_tensor(&ch.h, &ch.g, &sym.x, s2, w2)?;
        let residual =
            subtract_direct(&y2, &stage.h_direct_hat, w2, &stage.x_hat)?.sub(&assisted)?;
        rec.stage_one = Some(StageOneMetrics {
            ser: ser(&sym.indices, &hard.indices, t, true)?,
            nmse_hd: hd_nmse(&stage.h_direct_hat)?.unwrap_or(f64::NAN),
            effective_snr_db: realized_snr_db(&assisted, &residual),
        });
    }
    if config.compare_plain_tals {
        let base = plain_tals(config, &ch.h, &ch.g, &sym, config.k, snr_db, rng)?;
        rec.baseline_iters = Some(base.iterations);
    }
    Ok(rec)
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, c) = v.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    if c == 0 {
        f64::NAN
    } else {
        s / c as f64
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

fn summarize(snr_db: f64, recs: &[ExperimentRecord]) -> SnrSummary {
    let opt_mean = |vals: Vec<f64>| (!vals.is_empty()).then(|| mean(vals.into_iter()));
    let baseline: Vec<f64> = recs
        .iter()
        .filter_map(|r| r.baseline_iters.map(|i| i as f64))
        .collect();
    SnrSummary {
        snr_db,
        runs: recs.len(),
        nmse_h: mean(recs.iter().map(|r| r.nmse_h)),
        nmse_g: mean(recs.iter().map(|r| r.nmse_g)),
        nmse_hd: opt_mean(recs.iter().filter_map(|r| r.nmse_hd).collect()),
        ser: mean(recs.iter().map(|r| r.ser)),
        mean_iters: mean(recs.iter().map(|r| r.iters as f64)),
        median_iters: median(recs.iter().map(|r| r.iters as f64).collect()),
        converged_fraction: mean(recs.iter().map(|r| f64::from(u8::from(r.converged)))),
        wall_ms: mean(recs.iter().map(|r| r.wall_ms)),
        stage_one_ser: opt_mean(
            recs.iter()
                .filter_map(|r| r.stage_one.as_ref().map(|s| s.ser))
                .collect(),
        ),
        stage_one_nmse_hd: opt_mean(
            recs.iter()
                .filter_map(|r| r.stage_one.as_ref().map(|s| s.nmse_hd))
                .collect(),
        ),
        stage_two_effective_snr_db: opt_mean(
            recs.iter()
                .filter_map(|r| r.stage_one.as_ref().map(|s| s.effective_snr_db))
                .collect(),
        ),
        median_baseline_iters: (!baseline.is_empty()).then(|| median(baseline)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(receiver: ReceiverKind) -> SystemConfig {
        let two = receiver.is_two_stage();
        SystemConfig {
            m: 4,
            l: 2,
            n: 8,
            t: 4,
            k: if two { 36 } else { 32 },
            k1: two.then_some(4),
            k2: two.then_some(32),
            snr_grid: vec![10.0, 20.0],
            alpha_db: two.then_some(0.0),
            channel: Default::default(),
            paths_h: 1,
            paths_g: 1,
            design: crate::design::DesignKind::DftVandermonde,
            receiver,
            runs: 6,
            base_seed: 9,
            delta: 1e-5,
            max_iters: 300,
            record_timing: false,
            compare_plain_tals: two,
        }
    }

    #[test]
    fn records_are_ordered_and_valid() {
        let cfg = small(ReceiverKind::Tals);
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.records.len(), 12);
        for (i, r) in out.records.iter().enumerate() {
            assert_eq!(r.run, i % 6);
            assert_eq!(r.snr_db, cfg.snr_grid[i / 6]);
            assert_eq!(r.seed, mix_seed(9, (i / 6) as u64, (i % 6) as u64));
            assert!(r.nmse_h >= 0.0 && r.nmse_g >= 0.0);
            assert!((0.0..=1.0).contains(&r.ser));
            assert!(r.iters <= cfg.max_iters);
            assert_eq!(r.wall_ms, 0.0);
        }
    }

    #[test]
    fn summary_means_match_records() {
        let out = run_experiment(&small(ReceiverKind::Tals)).unwrap();
        for (s, sum) in out.summaries.iter().enumerate() {
            let recs = &out.records[s * 6..(s + 1) * 6];
            let m = recs.iter().map(|r| r.nmse_h).sum::<f64>() / 6.0;
            assert!((sum.nmse_h - m).abs() <= 1e-12 * m.max(1.0));
        }
    }

    #[test]
    fn single_job_matches_batch() {
        let cfg = small(ReceiverKind::Etals);
        let out = run_experiment(&cfg).unwrap();
        let one = run_single(&cfg, 1, 3).unwrap();
        assert_eq!(out.records[6 + 3], one);
        assert!(one.nmse_hd.is_some() && one.stage_one.is_some() && one.baseline_iters.is_some());
        assert!(one.stage_one.as_ref().unwrap().effective_snr_db.is_finite());
    }

    #[test]
    fn frozen_symbols_variant_runs() {
        let out = run_experiment(&small(ReceiverKind::EtalsNoRefine)).unwrap();
        assert!(out.summaries[1].ser <= 1.0);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}

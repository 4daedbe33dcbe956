use std::io::Write;

use super::experiment::{ExperimentRecord, SnrSummary};
use crate::crb::CrbResult;
use crate::error::{Error, Result};

/// Per-run CSV columns.
pub const CSV_HEADER: [&str; 10] = [
    "snr_db",
    "run",
    "seed",
    "nmse_h",
    "nmse_g",
    "nmse_hd",
    "ser",
    "iters",
    "converged",
    "wall_ms",
];

const SUMMARY_HEADER: [&str; 14] = [
    "snr_db",
    "runs",
    "nmse_h",
    "nmse_g",
    "nmse_hd",
    "ser",
    "mean_iters",
    "median_iters",
    "converged_fraction",
    "wall_ms",
    "stage1_ser",
    "stage1_nmse_hd",
    "stage2_effective_snr_db",
    "median_baseline_iters",
];

const CRB_HEADER: [&str; 5] = ["snr_db", "crb_g", "crb_h", "nmse_crb_g", "nmse_crb_h"];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn write_rows<W: Write>(
    out: W,
    header: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per `(snr, run)`. Floats use the shortest round-trip decimal form.
pub fn write_records_csv<W: Write>(out: W, records: &[ExperimentRecord]) -> Result<()> {
    write_rows(
        out,
        &CSV_HEADER,
        records.iter().map(|r| {
            vec![
                r.snr_db.to_string(),
                r.run.to_string(),
                r.seed.to_string(),
                r.nmse_h.to_string(),
                r.nmse_g.to_string(),
                opt(r.nmse_hd),
                r.ser.to_string(),
                r.iters.to_string(),
                r.converged.to_string(),
                r.wall_ms.to_string(),
            ]
        }),
    )
}

/// One row per SNR point.
pub fn write_summary_csv<W: Write>(out: W, summaries: &[SnrSummary]) -> Result<()> {
    write_rows(
        out,
        &SUMMARY_HEADER,
        summaries.iter().map(|s| {
            vec![
                s.snr_db.to_string(),
                s.runs.to_string(),
                s.nmse_h.to_string(),
                s.nmse_g.to_string(),
                opt(s.nmse_hd),
                s.ser.to_string(),
                s.mean_iters.to_string(),
                s.median_iters.to_string(),
                s.converged_fraction.to_string(),
                s.wall_ms.to_string(),
                opt(s.stage_one_ser),
                opt(s.stage_one_nmse_hd),
                opt(s.stage_two_effective_snr_db),
                opt(s.median_baseline_iters),
            ]
        }),
    )
}

/// Expected-CRB curve, raw traces and NMSE-normalized.
pub fn write_crb_csv<W: Write>(out: W, points: &[CrbResult]) -> Result<()> {
    write_rows(
        out,
        &CRB_HEADER,
        points.iter().map(|p| {
            vec![
                p.snr_db.to_string(),
                p.trace_crb_g.to_string(),
                p.trace_crb_h.to_string(),
                p.nmse_g.to_string(),
                p.nmse_h.to_string(),
            ]
        }),
    )
}

/// Gnuplot commands plotting NMSE and SER against SNR from a summary CSV.
pub fn gnuplot_script(summary_csv: &str, title: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set logscale y\n\
         set grid\n\
         set xlabel 'SNR (dB)'\n\
         set title '{title}'\n\
         set multiplot layout 1,2\n\
         set ylabel 'NMSE'\n\
         plot '{summary_csv}' using 1:3 with linespoints, '' using 1:4 with linespoints\n\
         set ylabel 'SER'\n\
         plot '{summary_csv}' using 1:6 with linespoints\n\
         unset multiplot\n"
    )
}

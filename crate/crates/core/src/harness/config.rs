use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelModel;
use crate::design::DesignKind;
use crate::error::{Error, Result};
use crate::receivers::{identifiability_check, TalsOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceiverKind {
    #[default]
    Tals,
    Etals,
    /// E-TALS with the symbols frozen at the stage-I estimate.
    EtalsNoRefine,
}

impl ReceiverKind {
    pub fn is_two_stage(self) -> bool {
        !matches!(self, ReceiverKind::Tals)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    #[default]
    Rayleigh,
    Geometric,
}

fn default_paths() -> usize {
    1
}
fn default_design() -> DesignKind {
    DesignKind::DftVandermonde
}
fn default_runs() -> usize {
    200
}
fn default_delta() -> f64 {
    1e-5
}
fn default_max_iters() -> usize {
    1000
}

/// Flat experiment description, loadable from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// BS antennas.
    #[serde(alias = "M")]
    pub m: usize,
    /// UT antennas (data streams).
    #[serde(alias = "L")]
    pub l: usize,
    /// IRS elements.
    #[serde(alias = "N")]
    pub n: usize,
    /// Symbols per block.
    #[serde(alias = "T")]
    pub t: usize,
    /// Total blocks.
    #[serde(alias = "K")]
    pub k: usize,
    /// Direct-link window of the two-stage receiver.
    #[serde(default, alias = "K1")]
    pub k1: Option<usize>,
    /// IRS window of the two-stage receiver.
    #[serde(default, alias = "K2")]
    pub k2: Option<usize>,
    pub snr_grid: Vec<f64>,
    /// Direct link power below the IRS link, in dB. Absent means no direct link.
    #[serde(default)]
    pub alpha_db: Option<f64>,
    #[serde(default)]
    pub channel: ChannelKind,
    #[serde(default = "default_paths")]
    pub paths_h: usize,
    #[serde(default = "default_paths")]
    pub paths_g: usize,
    #[serde(default = "default_design")]
    pub design: DesignKind,
    #[serde(default)]
    pub receiver: ReceiverKind,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    /// Fill `wall_ms`; off by default so output is reproducible byte for byte.
    #[serde(default)]
    pub record_timing: bool,
    /// Two-stage receivers also run plain TALS over all `K` blocks without a
    /// direct link, for iteration-count comparison.
    #[serde(default)]
    pub compare_plain_tals: bool,
}

impl SystemConfig {
    /// Parses and validates.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg = Self::parse_toml(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses without checking constraints.
    pub fn parse_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn channel_model(&self) -> ChannelModel {
        match self.channel {
            ChannelKind::Rayleigh => ChannelModel::Rayleigh,
            ChannelKind::Geometric => ChannelModel::Geometric {
                paths_h: self.paths_h,
                paths_g: self.paths_g,
            },
        }
    }

    /// Blocks seen by the PARATUCK receiver: `K`, or `K2` for two-stage runs.
    pub fn irs_blocks(&self) -> usize {
        if self.receiver.is_two_stage() {
            self.k2.unwrap_or(self.k)
        } else {
            self.k
        }
    }

    pub fn tals_options(&self, init_seed: u64) -> TalsOptions {
        TalsOptions {
            delta: self.delta,
            max_iters: self.max_iters,
            init_seed,
            refine_symbols: self.receiver != ReceiverKind::EtalsNoRefine,
            ..TalsOptions::default()
        }
    }

    /// Every violated constraint, collected before failing.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        for (name, v) in [("M", self.m), ("L", self.l), ("N", self.n), ("K", self.k)] {
            if v == 0 {
                errs.push(format!("{name} must be at least 1"));
            }
        }
        if self.t < 2 {
            errs.push(format!(
                "T must be at least 2 (row 1 carries pilots), got {}",
                self.t
            ));
        }
        if self.snr_grid.is_empty() {
            errs.push("snr_grid must not be empty".into());
        }
        if self
            .snr_grid
            .iter()
            .any(|s| s.is_nan() || *s == f64::NEG_INFINITY)
        {
            errs.push("snr_grid entries must be numbers or +inf".into());
        }
        if self.runs == 0 {
            errs.push("runs must be at least 1".into());
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            errs.push(format!(
                "delta must be positive and finite, got {}",
                self.delta
            ));
        }
        if self.max_iters == 0 {
            errs.push("max_iters must be at least 1".into());
        }
        if self.channel == ChannelKind::Geometric && (self.paths_h == 0 || self.paths_g == 0) {
            errs.push("geometric channels need paths_h >= 1 and paths_g >= 1".into());
        }
        if let Some(a) = self.alpha_db {
            if a.is_nan() || a == f64::NEG_INFINITY {
                errs.push(format!("alpha_db must be a number or +inf, got {a}"));
            }
        }

        if self.receiver.is_two_stage() {
            match (self.k1, self.k2) {
                (Some(k1), Some(k2)) => {
                    if k1 + k2 != self.k {
                        errs.push(format!("K1 + K2 = {} must equal K = {}", k1 + k2, self.k));
                    }
                    let r = identifiability_check(self.m, self.l, self.n, self.t, k2, Some(k1));
                    errs.extend(r.violations.into_iter().map(|v| format!("stage II: {v}")));
                }
                _ => errs.push("two-stage receivers need both K1 and K2".into()),
            }
            if self.alpha_db.is_none() {
                errs.push("two-stage receivers need alpha_db".into());
            }
        } else {
            if self.compare_plain_tals {
                errs.push("compare_plain_tals applies to two-stage receivers only".into());
            }
            if self.alpha_db.is_some() {
                errs.push("alpha_db applies to two-stage receivers only".into());
            }
        }
        if !self.receiver.is_two_stage() || self.compare_plain_tals {
            let r = identifiability_check(self.m, self.l, self.n, self.t, self.k, None);
            errs.extend(r.violations);
        }

        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
        M = 4
        L = 2
        N = 8
        T = 4
        K = 32
        snr_grid = [0.0, 10.0]
    "#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = SystemConfig::from_toml_str(BASIC).unwrap();
        assert_eq!(c.runs, 200);
        assert_eq!(c.delta, 1e-5);
        assert_eq!(c.max_iters, 1000);
        assert_eq!(c.receiver, ReceiverKind::Tals);
        assert_eq!(c.design, DesignKind::DftVandermonde);
        assert_eq!(c.irs_blocks(), 32);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = SystemConfig::from_toml_str(&format!("{BASIC}\nbogus = 1")).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn all_violations_are_listed() {
        let text = r#"
            m = 1
            l = 1
            n = 40
            t = 1
            k = 2
            snr_grid = []
            runs = 0
            delta = -1.0
        "#;
        match SystemConfig::from_toml_str(text).unwrap_err() {
            Error::Config(v) => {
                assert!(v.len() >= 5, "{v:?}");
                assert!(v.iter().any(|e| e.contains("TK >= N")));
                assert!(v.iter().any(|e| e.contains("runs")));
                assert!(v.iter().any(|e| e.contains("delta")));
                assert!(v.iter().any(|e| e.contains("snr_grid")));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn two_stage_needs_consistent_split() {
        let text = r#"
            m = 10
            l = 2
            n = 20
            t = 5
            k = 50
            k1 = 10
            k2 = 30
            snr_grid = [20.0]
            receiver = "etals"
        "#;
        match SystemConfig::from_toml_str(text).unwrap_err() {
            Error::Config(v) => {
                assert!(v.iter().any(|e| e.contains("K1 + K2")));
                assert!(v.iter().any(|e| e.contains("alpha_db")));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn toml_round_trip() {
        let c = SystemConfig::from_toml_str(BASIC).unwrap();
        let back = SystemConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(c, back);
    }
}

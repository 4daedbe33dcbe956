use super::config::{ChannelKind, ReceiverKind, SystemConfig};
use crate::design::DesignKind;
use crate::error::{Error, Result};

pub const PRESET_NAMES: [&str; 7] = ["fig4", "fig5", "fig7", "fig8", "fig11", "fig12", "fig13"];

fn snr_range(lo: i32, hi: i32, step: usize) -> Vec<f64> {
    (lo..=hi).step_by(step).map(f64::from).collect()
}

fn base(m: usize, l: usize, n: usize, t: usize, k: usize) -> SystemConfig {
    SystemConfig {
        m,
        l,
        n,
        t,
        k,
        k1: None,
        k2: None,
        snr_grid: snr_range(0, 30, 5),
        alpha_db: None,
        channel: ChannelKind::Rayleigh,
        paths_h: 1,
        paths_g: 1,
        design: DesignKind::DftVandermonde,
        receiver: ReceiverKind::Tals,
        runs: 200,
        base_seed: 0,
        delta: 1e-5,
        max_iters: 1000,
        record_timing: false,
        compare_plain_tals: false,
    }
}

fn two_stage(
    mut c: SystemConfig,
    k1: usize,
    k2: usize,
    alpha_db: f64,
    receiver: ReceiverKind,
) -> SystemConfig {
    c.k1 = Some(k1);
    c.k2 = Some(k2);
    c.alpha_db = Some(alpha_db);
    c.receiver = receiver;
    c
}

/// Figure setups at desk scale (200 runs).
pub fn preset(name: &str) -> Result<SystemConfig> {
    let c = match name {
        "fig4" => SystemConfig {
            channel: ChannelKind::Geometric,
            ..base(5, 2, 64, 5, 128)
        },
        "fig5" => SystemConfig {
            channel: ChannelKind::Geometric,
            ..base(5, 2, 64, 2, 128)
        },
        "fig7" => two_stage(
            SystemConfig {
                channel: ChannelKind::Geometric,
                paths_h: 3,
                paths_g: 2,
                ..base(5, 2, 64, 5, 80)
            },
            16,
            64,
            0.0,
            ReceiverKind::EtalsNoRefine,
        ),
        "fig8" => SystemConfig {
            compare_plain_tals: true,
            ..two_stage(base(10, 2, 70, 5, 150), 10, 140, 0.0, ReceiverKind::Etals)
        },
        "fig11" => two_stage(base(10, 2, 50, 5, 150), 10, 140, 20.0, ReceiverKind::Etals),
        "fig12" => two_stage(base(10, 2, 50, 5, 150), 10, 140, 0.0, ReceiverKind::Etals),
        "fig13" => SystemConfig {
            channel: ChannelKind::Geometric,
            design: DesignKind::RandomPhase,
            ..base(5, 2, 64, 5, 128)
        },
        _ => {
            return Err(Error::UnknownPreset {
                name: name.to_string(),
                valid: PRESET_NAMES.join(", "),
            })
        }
    };
    c.validate()?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_validate() {
        for name in PRESET_NAMES {
            let c = preset(name).unwrap();
            assert_eq!(c.runs, 200, "{name}");
        }
    }

    #[test]
    fn fig4_and_fig7_parameters() {
        let c = preset("fig4").unwrap();
        assert_eq!((c.m, c.l, c.n, c.t, c.k), (5, 2, 64, 5, 128));
        assert_eq!(c.channel, ChannelKind::Geometric);
        assert_eq!((c.paths_h, c.paths_g), (1, 1));
        let c = preset("fig7").unwrap();
        assert_eq!(
            (c.k, c.t, c.l, c.m, c.k1, c.k2),
            (80, 5, 2, 5, Some(16), Some(64))
        );
        assert_eq!((c.paths_h, c.paths_g), (3, 2));
        assert_eq!(c.receiver, ReceiverKind::EtalsNoRefine);
    }

    #[test]
    fn unknown_preset_lists_valid_names() {
        let err = preset("fig99").unwrap_err();
        let msg = err.to_string();
        for name in PRESET_NAMES {
            assert!(msg.contains(name), "{msg}");
        }
    }
}

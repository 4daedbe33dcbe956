use std::f64::consts::PI;

use crate::signal::{psk_point, PSK_ORDER};
use crate::tensor::CMatrix;

/// Hard 16-PSK decisions.
#[derive(Debug, Clone, PartialEq)]
pub struct Demodulated {
    /// Column-major constellation indices.
    pub indices: Vec<usize>,
    pub symbols: CMatrix,
}

/// Nearest constellation point by phase.
pub fn demodulate(x_soft: &CMatrix) -> Demodulated {
    let step = 2.0 * PI / PSK_ORDER as f64;
    let indices: Vec<usize> = x_soft
        .iter()
        .map(|z| (z.arg() / step).round().rem_euclid(PSK_ORDER as f64) as usize % PSK_ORDER)
        .collect();
    let symbols = CMatrix::from_iterator(
        x_soft.nrows(),
        x_soft.ncols(),
        indices.iter().map(|&q| psk_point(q)),
    );
    Demodulated { indices, symbols }
}

//! Semi-blind joint channel and symbol estimation for MIMO links assisted by
//! an intelligent reflecting surface, based on the PARATUCK tensor model of
//! the received signal.
//!
//! The received block `k` is `Y[k] = H D_k(S) G D_k(W) Xᵀ + B[k]` with BS-IRS
//! channel `H`, IRS-UT channel `G`, symbols `X`, IRS phase shifts `S` and
//! coding `W`. [`receivers::tals`] estimates `H`, `G` and `X` jointly;
//! [`receivers::etals`] additionally exploits a direct BS-UT link.

pub mod channel;
pub mod crb;
pub mod design;
pub mod error;
pub mod harness;
pub mod receivers;
pub mod rng;
pub mod signal;
pub mod tensor;

pub use error::{Error, Result};

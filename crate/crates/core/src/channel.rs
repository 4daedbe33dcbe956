//! Ground-truth channel generation: i.i.d. Rayleigh and few-path geometric.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{standard_complex, standard_complex_matrix};
use crate::tensor::{kronecker, CMatrix, CVector, C64};

/// Antenna array layout. Spacing is in wavelengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArrayGeometry {
    Ula {
        elements: usize,
        spacing: f64,
    },
    Ura {
        rows: usize,
        cols: usize,
        spacing: f64,
    },
}

impl ArrayGeometry {
    pub fn ula(elements: usize) -> Self {
        ArrayGeometry::Ula {
            elements,
            spacing: 0.5,
        }
    }

    pub fn ura(rows: usize, cols: usize) -> Self {
        ArrayGeometry::Ura {
            rows,
            cols,
            spacing: 0.5,
        }
    }

    /// Rectangular layout with `elements` entries, as close to square as the
    /// factorization allows (`rows <= cols`).
    pub fn ura_for(elements: usize) -> Self {
        let mut rows = (elements as f64).sqrt().floor() as usize;
        while rows > 1 && !elements.is_multiple_of(rows) {
            rows -= 1;
        }
        let rows = rows.max(1);
        Self::ura(rows, elements / rows)
    }

    pub fn elements(&self) -> usize {
        match *self {
            ArrayGeometry::Ula { elements, .. } => elements,
            ArrayGeometry::Ura { rows, cols, .. } => rows * cols,
        }
    }
}

fn ula_response(elements: usize, spacing: f64, phase_arg: f64) -> CVector {
    CVector::from_fn(elements, |n, _| {
        C64::from_polar(1.0, 2.0 * PI * spacing * n as f64 * phase_arg)
    })
}

/// Array response for a plane wave from `(azimuth, elevation)`.
///
/// ULA: `a_n = exp(j 2π d (n-1) sin(az))`, elevation ignored. URA: Kronecker
/// product of the row-axis response with argument `sin(el) cos(az)` and the
/// column-axis response with argument `sin(el) sin(az)`.
pub fn steering_vector(geometry: ArrayGeometry, azimuth: f64, elevation: f64) -> CVector {
    match geometry {
        ArrayGeometry::Ula { elements, spacing } => ula_response(elements, spacing, azimuth.sin()),
        ArrayGeometry::Ura {
            rows,
            cols,
            spacing,
        } => {
            let ar = ula_response(rows, spacing, elevation.sin() * azimuth.cos());
            let ac = ula_response(cols, spacing, elevation.sin() * azimuth.sin());
            let k = kronecker(
                &CMatrix::from_column_slice(rows, 1, ar.as_slice()),
                &CMatrix::from_column_slice(cols, 1, ac.as_slice()),
            );
            CVector::from_column_slice(k.as_slice())
        }
    }
}

/// Matrix of i.i.d. `CN(0, 1)` entries.
pub fn rayleigh_channel<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    standard_complex_matrix(rows, cols, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelModel {
    Rayleigh,
    /// `paths_h` specular paths IRS->BS, `paths_g` paths UT->IRS.
    Geometric {
        paths_h: usize,
        paths_g: usize,
    },
}

/// Angles drawn for one geometric realization.
#[derive(Debug, Clone, PartialEq)]
pub struct PathDraws {
    /// (azimuth, elevation) per path of H, then per path of G.
    pub h_paths: Vec<(f64, f64)>,
    pub g_paths: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// IRS -> BS, `M x N`.
    pub h: CMatrix,
    /// UT -> IRS, `N x L`.
    pub g: CMatrix,
    /// UT -> BS, `M x L`.
    pub h_direct: Option<CMatrix>,
    pub model: ChannelModel,
    pub paths: Option<PathDraws>,
}

fn draw_angle<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let az = rng.random_range(-FRAC_PI_2..=FRAC_PI_2);
    let el = rng.random_range(0.0..=FRAC_PI_2);
    (az, el)
}

/// Few-path geometric channels with shapes `H: M x N`, `G: N x L`.
///
/// `H = A_BS diag(β) A_IRS^H / √N`, `G = B_IRS diag(γ) B_UT^H / √N` with
/// gains `CN(0, 1)`, azimuth uniform in `[-π/2, π/2]` and elevation uniform in
/// `[0, π/2]`. BS and UT are ULAs, the IRS a near-square URA. The `1/√N`
/// factor normalizes the IRS response to unit norm so `E‖H‖² = M·paths_h`.
pub fn geometric_channel_pair<R: Rng + ?Sized>(
    m: usize,
    n: usize,
    l: usize,
    paths_h: usize,
    paths_g: usize,
    rng: &mut R,
) -> Result<(CMatrix, CMatrix, PathDraws)> {
    if paths_h == 0 || paths_g == 0 {
        return Err(Error::Dimension(
            "geometric model needs at least one path per link".into(),
        ));
    }
    let bs = ArrayGeometry::ula(m);
    let ut = ArrayGeometry::ula(l);
    let irs = ArrayGeometry::ura_for(n);
    let irs_norm = C64::new(1.0 / (n as f64).sqrt(), 0.0);

    let mut h = CMatrix::zeros(m, n);
    let mut h_paths = Vec::with_capacity(paths_h);
    for _ in 0..paths_h {
        let beta = standard_complex(rng);
        let (az_bs, el_bs) = draw_angle(rng);
        let (az_irs, el_irs) = draw_angle(rng);
        let a_bs = steering_vector(bs, az_bs, el_bs);
        let a_irs = steering_vector(irs, az_irs, el_irs);
        h += (&a_bs * a_irs.adjoint()) * (beta * irs_norm);
        h_paths.push((az_irs, el_irs));
    }

    let mut g = CMatrix::zeros(n, l);
    let mut g_paths = Vec::with_capacity(paths_g);
    for _ in 0..paths_g {
        let gamma = standard_complex(rng);
        let (az_irs, el_irs) = draw_angle(rng);
        let (az_ut, el_ut) = draw_angle(rng);
        let b_irs = steering_vector(irs, az_irs, el_irs);
        let b_ut = steering_vector(ut, az_ut, el_ut);
        g += (&b_irs * b_ut.adjoint()) * (gamma * irs_norm);
        g_paths.push((az_irs, el_irs));
    }
    Ok((h, g, PathDraws { h_paths, g_paths }))
}

/// Draws `H`, `G` and, when `with_direct`, a Rayleigh direct channel.
pub fn draw_channels<R: Rng + ?Sized>(
    model: ChannelModel,
    m: usize,
    n: usize,
    l: usize,
    with_direct: bool,
    rng: &mut R,
) -> Result<ChannelSet> {
    let (h, g, paths) = match model {
        ChannelModel::Rayleigh => (
            rayleigh_channel(m, n, rng),
            rayleigh_channel(n, l, rng),
            None,
        ),
        ChannelModel::Geometric { paths_h, paths_g } => {
            let (h, g, p) = geometric_channel_pair(m, n, l, paths_h, paths_g, rng)?;
            (h, g, Some(p))
        }
    };
    let h_direct = with_direct.then(|| rayleigh_channel(m, l, rng));
    Ok(ChannelSet {
        h,
        g,
        h_direct,
        model,
        paths,
    })
}

//! Clustered multipath mmWave channel.
//!
//! A realization holds `N_cl * N_ray` rays. Rays of one cluster share the
//! cluster delay and scatter their AoD/AoA around the cluster means with a
//! Laplacian spread. The frequency-domain channel at subcarrier `k` is
//!
//! ```text
//! H[k] = gamma * sum_{i,l} alpha_il * exp(-j 2 pi f_s tau_il k / K) * a_ue(theta_il) a_bs(phi_il)^H
//! ```
//!
//! with `gamma = sqrt(N_ue * N_bs / (N_cl * N_ray))`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::arrays::ArrayGeometry;
use crate::error::{Error, Result};

/// Statistical parameters of the clustered channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub n_clusters: usize,
    pub n_rays: usize,
    /// Variance of the complex path gains.
    pub gain_variance: f64,
    /// Upper bound of the uniform cluster delay, in seconds.
    pub delay_max: f64,
    /// Standard deviation of the per-ray angular offset, in radians.
    pub ray_angle_std: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            n_clusters: 2,
            n_rays: 3,
            gain_variance: 1.0,
            delay_max: 200e-9,
            ray_angle_std: 2f64.to_radians(),
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_clusters == 0 || self.n_rays == 0 {
            return Err(Error::param("n_clusters and n_rays must be positive"));
        }
        if !(self.delay_max > 0.0) {
            return Err(Error::param("delay_max must be positive"));
        }
        if !(self.ray_angle_std >= 0.0) {
            return Err(Error::param("ray_angle_std must be non-negative"));
        }
        if !(self.gain_variance >= 0.0) {
            return Err(Error::param("gain_variance must be non-negative"));
        }
        Ok(())
    }

    pub fn n_paths(&self) -> usize {
        self.n_clusters * self.n_rays
    }
}

/// One ray of the multipath channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathComponent {
    pub gain: Complex64,
    /// Propagation delay in seconds.
    pub delay: f64,
    /// Angle of departure at the gNB, radians.
    pub aod: f64,
    /// Angle of arrival at the UE, radians.
    pub aoa: f64,
    pub cluster_id: usize,
    pub ray_id: usize,
}

/// A sampled channel: rays plus the array geometries it was drawn for.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub paths: Vec<PathComponent>,
    pub gamma: f64,
    pub tx_geometry: ArrayGeometry,
    pub rx_geometry: ArrayGeometry,
}

/// Normalization `sqrt(N_ue * N_bs / n_paths)`.
pub fn normalization(tx: &ArrayGeometry, rx: &ArrayGeometry, n_paths: usize) -> f64 {
    ((tx.n_ant() * rx.n_ant()) as f64 / n_paths as f64).sqrt()
}

impl ChannelRealization {
    /// Builds a realization from explicit rays, computing gamma from the ray
    /// count.
    pub fn from_paths(
        paths: Vec<PathComponent>,
        tx_geometry: ArrayGeometry,
        rx_geometry: ArrayGeometry,
    ) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::param("channel needs at least one path"));
        }
        for p in &paths {
            if !(p.delay >= 0.0) || !p.aod.is_finite() || !p.aoa.is_finite() {
                return Err(Error::param("path delay must be >= 0 and angles finite"));
            }
        }
        let gamma = normalization(&tx_geometry, &rx_geometry, paths.len());
        Ok(Self {
            paths,
            gamma,
            tx_geometry,
            rx_geometry,
        })
    }

    /// Distinct propagation delays, in order of first appearance.
    pub fn distinct_delays(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for p in &self.paths {
            if !out.contains(&p.delay) {
                out.push(p.delay);
            }
        }
        out
    }
}

/// Draws a circularly-symmetric complex Gaussian sample with the given
/// variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// Zero-mean Laplace sample with standard deviation `std`.
fn laplace<R: Rng + ?Sized>(rng: &mut R, std: f64) -> f64 {
    if std == 0.0 {
        return 0.0;
    }
    let scale = std / 2f64.sqrt();
    // u in (-1/2, 1/2); inverse CDF
    let u: f64 = rng.random::<f64>() - 0.5;
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln()
}

/// Samples one channel realization.
///
/// Cluster means and delays are uniform; each cluster's delay is shared by
/// its rays. Ray angles falling outside `[-pi/2, pi/2]` are clamped.
pub fn sample_channel<R: Rng + ?Sized>(
    params: &ChannelParams,
    tx_geometry: ArrayGeometry,
    rx_geometry: ArrayGeometry,
    rng: &mut R,
) -> Result<ChannelRealization> {
    params.validate()?;
    let mut paths = Vec::with_capacity(params.n_paths());
    for cluster_id in 0..params.n_clusters {
        let aod_mean = rng.random_range(-FRAC_PI_2..=FRAC_PI_2);
        let aoa_mean = rng.random_range(-FRAC_PI_2..=FRAC_PI_2);
        let delay = rng.random_range(0.0..=params.delay_max);
        for ray_id in 0..params.n_rays {
            let aod = (aod_mean + laplace(rng, params.ray_angle_std)).clamp(-FRAC_PI_2, FRAC_PI_2);
            let aoa = (aoa_mean + laplace(rng, params.ray_angle_std)).clamp(-FRAC_PI_2, FRAC_PI_2);
            let gain = complex_gaussian(rng, params.gain_variance);
            paths.push(PathComponent {
                gain,
                delay,
                aod,
                aoa,
                cluster_id,
                ray_id,
            });
        }
    }
    ChannelRealization::from_paths(paths, tx_geometry, rx_geometry)
}

/// Delay phase term `exp(-j 2 pi f_s tau k / K)`.
pub fn delay_phase(delay: f64, k: usize, sample_rate: f64, n_fft: usize) -> Complex64 {
    let cycles = sample_rate * delay * k as f64 / n_fft as f64;
    Complex64::from_polar(1.0, -2.0 * PI * cycles.fract())
}

/// Channel matrix `H[k]` (`N_ue x N_bs`) evaluated as a sum of rank-one ray
/// contributions.
pub fn freq_channel(
    ch: &ChannelRealization,
    k: usize,
    sample_rate: f64,
    n_fft: usize,
) -> DMatrix<Complex64> {
    let mut h = DMatrix::zeros(ch.rx_geometry.n_ant(), ch.tx_geometry.n_ant());
    for p in &ch.paths {
        let coeff = p.gain * delay_phase(p.delay, k, sample_rate, n_fft) * ch.gamma;
        let a_ue = ch.rx_geometry.response_at_sin(p.aoa.sin());
        let a_bs = ch.tx_geometry.response_at_sin(p.aod.sin());
        h += (a_ue * coeff) * a_bs.adjoint();
    }
    h
}

/// `H[k] = A_ue * H_d[k] * A_bs^H` in factored form.
#[derive(Debug, Clone)]
pub struct FactorizedChannel {
    /// Receive responses at the ray AoAs, `N_ue x n_paths`.
    pub a_ue: DMatrix<Complex64>,
    /// Diagonal ray gains including gamma and delay phase.
    pub h_d: DMatrix<Complex64>,
    /// Transmit responses at the ray AoDs, `N_bs x n_paths`.
    pub a_bs: DMatrix<Complex64>,
}

impl FactorizedChannel {
    pub fn product(&self) -> DMatrix<Complex64> {
        &self.a_ue * &self.h_d * self.a_bs.adjoint()
    }
}

/// Ray response matrices at the realization's exact angles.
pub fn response_matrices(ch: &ChannelRealization) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let n = ch.paths.len();
    let mut a_ue = DMatrix::zeros(ch.rx_geometry.n_ant(), n);
    let mut a_bs = DMatrix::zeros(ch.tx_geometry.n_ant(), n);
    for (i, p) in ch.paths.iter().enumerate() {
        a_ue.set_column(i, &ch.rx_geometry.response_at_sin(p.aoa.sin()));
        a_bs.set_column(i, &ch.tx_geometry.response_at_sin(p.aod.sin()));
    }
    (a_ue, a_bs)
}

/// Per-ray diagonal gains of `H_d[k]`.
pub fn ray_gains(
    ch: &ChannelRealization,
    k: usize,
    sample_rate: f64,
    n_fft: usize,
) -> Vec<Complex64> {
    ch.paths
        .iter()
        .map(|p| p.gain * delay_phase(p.delay, k, sample_rate, n_fft) * ch.gamma)
        .collect()
}

pub fn factorized_channel(
    ch: &ChannelRealization,
    k: usize,
    sample_rate: f64,
    n_fft: usize,
) -> FactorizedChannel {
    let (a_ue, a_bs) = response_matrices(ch);
    let gains = ray_gains(ch, k, sample_rate, n_fft);
    let h_d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(gains));
    FactorizedChannel { a_ue, h_d, a_bs }
}

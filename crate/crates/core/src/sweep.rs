//! SSB beam-sweep acquisition and the sparse-recovery system.
//!
//! The gNB sweeps its `m_bs` transmit beams once per UE combiner; with
//! `m_ue` combiners the UE collects `M = m_bs * m_ue` blocks. Block
//! `m = i * m_ue + j` pairs transmit entry `i` with combiner entry `j`.
//! The measurement vector is stacked subcarrier-major:
//!
//! ```text
//! y[k * n_rf * M + m * n_rf + r]  =  subcarrier k, block m, RF chain r
//! ```
//!
//! which is `vec(Y[k])` for `Y[k] = W^H H[k] X`, concatenated over the pilot
//! subcarriers. With the grid dictionary `Psi = conj(A_bs) (x) A_ue` the
//! noiseless measurements are `sqrt(rho) * (X~ (x) W~) h` with
//! `X~ = X^T conj(A_bs)` and `W~ = W^H A_ue`, where `h = vec(H_grid)` indexes
//! grid pairs as `g_tx * G_ue + g_rx`.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::arrays::GridDictionary;
use crate::channel::{complex_gaussian, ray_gains, response_matrices, ChannelRealization};
use crate::codebooks::Codebook;
use crate::error::{Error, Result};

/// Sweep schedule, numerology and link budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub m_bs: usize,
    pub m_ue: usize,
    pub n_rf_ue: usize,
    pub n_rs: usize,
    pub subcarrier_indices: Vec<usize>,
    pub n_fft: usize,
    /// Samples per second.
    pub sample_rate: f64,
    /// Hz.
    pub subcarrier_spacing: f64,
    /// Transmit power per subcarrier.
    pub tx_power: f64,
    pub noise_variance: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            m_bs: 64,
            m_ue: 2,
            n_rf_ue: 4,
            n_rs: 10,
            subcarrier_indices: middle_subcarriers(4096, 10),
            n_fft: 4096,
            sample_rate: 491.52e6,
            subcarrier_spacing: 120e3,
            tx_power: 1.0,
            noise_variance: 1.0,
        }
    }
}

/// The `n_rs` subcarriers centered on `n_fft / 2`.
pub fn middle_subcarriers(n_fft: usize, n_rs: usize) -> Vec<usize> {
    let first = (n_fft / 2).saturating_sub(n_rs / 2);
    (first..first + n_rs).collect()
}

impl SweepConfig {
    pub fn n_blocks(&self) -> usize {
        self.m_bs * self.m_ue
    }

    pub fn measurement_len(&self) -> usize {
        self.n_rf_ue * self.n_blocks() * self.n_rs
    }

    /// Transmit SNR `rho / sigma^2` in dB.
    pub fn snr_db(&self) -> f64 {
        10.0 * (self.tx_power / self.noise_variance).log10()
    }

    /// Sets `rho` so that `rho / sigma^2` equals `snr_db`, keeping the noise
    /// variance. With zero noise variance, `rho` is set to the linear SNR.
    pub fn set_snr_db(&mut self, snr_db: f64) {
        let lin = 10f64.powf(snr_db / 10.0);
        self.tx_power = if self.noise_variance > 0.0 {
            lin * self.noise_variance
        } else {
            lin
        };
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_bs == 0 || self.m_ue == 0 || self.n_rf_ue == 0 || self.n_rs == 0 {
            return Err(Error::param(
                "m_bs, m_ue, n_rf_ue and n_rs must be positive",
            ));
        }
        if self.subcarrier_indices.len() != self.n_rs {
            return Err(Error::param(format!(
                "{} subcarrier indices given for n_rs = {}",
                self.subcarrier_indices.len(),
                self.n_rs
            )));
        }
        if let Some(k) = self.subcarrier_indices.iter().find(|&&k| k >= self.n_fft) {
            return Err(Error::param(format!(
                "subcarrier {k} outside FFT size {}",
                self.n_fft
            )));
        }
        if !(self.sample_rate > 0.0) || !(self.tx_power >= 0.0) || !(self.noise_variance >= 0.0) {
            return Err(Error::param(
                "sample rate must be positive, powers non-negative",
            ));
        }
        Ok(())
    }
}

/// Transmit vectors `x_m = F_m s` with equal-gain baseband weights,
/// normalized to unit norm. Returns the `n_ant x n_entries` matrix `X`.
pub fn transmit_vectors(codebook: &Codebook) -> DMatrix<Complex64> {
    let mut x = DMatrix::zeros(codebook.n_ant(), codebook.len());
    for m in 0..codebook.len() {
        let mut v: DVector<Complex64> = codebook.entry(m).column_sum();
        let norm = v.norm();
        if norm > 0.0 {
            v /= Complex64::from(norm);
        }
        x.set_column(m, &v);
    }
    x
}

/// All combiner columns side by side: `W = [W_1, ..., W_{m_ue}]`.
pub fn combiner_matrix(codebook: &Codebook) -> DMatrix<Complex64> {
    let n_cols = codebook.n_cols();
    let mut w = DMatrix::zeros(codebook.n_ant(), n_cols * codebook.len());
    for j in 0..codebook.len() {
        w.columns_mut(j * n_cols, n_cols)
            .copy_from(&codebook.entry(j));
    }
    w
}

/// `X^T conj(A_grid)`: rows are transmit entries, columns grid bins.
pub fn effective_tx_factor(
    x: &DMatrix<Complex64>,
    grid: &GridDictionary,
) -> Result<DMatrix<Complex64>> {
    if x.nrows() != grid.atoms().nrows() {
        return Err(Error::dims(format!(
            "transmit vectors have {} elements, grid {}",
            x.nrows(),
            grid.atoms().nrows()
        )));
    }
    Ok(x.transpose() * grid.atoms().conjugate())
}

/// `W^H A_grid`: rows are combiner columns, columns grid bins.
pub fn effective_rx_factor(
    w: &DMatrix<Complex64>,
    grid: &GridDictionary,
) -> Result<DMatrix<Complex64>> {
    if w.nrows() != grid.atoms().nrows() {
        return Err(Error::dims(format!(
            "combiners have {} elements, grid {}",
            w.nrows(),
            grid.atoms().nrows()
        )));
    }
    Ok(w.adjoint() * grid.atoms())
}

/// Received energies indexed by (transmit entry, combiner entry, RF chain,
/// subcarrier).
#[derive(Debug, Clone, PartialEq)]
pub struct BlockEnergy {
    pub m_bs: usize,
    pub m_ue: usize,
    pub n_rf: usize,
    pub n_rs: usize,
    values: Vec<f64>,
}

impl BlockEnergy {
    fn index(&self, tx: usize, rx_entry: usize, chain: usize, k: usize) -> usize {
        let block = tx * self.m_ue + rx_entry;
        k * self.n_rf * self.m_bs * self.m_ue + block * self.n_rf + chain
    }

    pub fn get(&self, tx: usize, rx_entry: usize, chain: usize, k: usize) -> f64 {
        self.values[self.index(tx, rx_entry, chain, k)]
    }
}

/// Everything the UE collected during one sweep.
#[derive(Debug, Clone)]
pub struct MeasurementSet {
    pub y: DVector<Complex64>,
    pub per_block_energy: BlockEnergy,
    /// Transmit vectors, `n_ant_bs x m_bs`.
    pub x: DMatrix<Complex64>,
    /// Combiner columns, `n_ant_ue x (n_rf * m_ue)`.
    pub w: DMatrix<Complex64>,
}

impl MeasurementSet {
    pub fn n_rf(&self) -> usize {
        self.per_block_energy.n_rf
    }

    pub fn m_bs(&self) -> usize {
        self.per_block_energy.m_bs
    }

    pub fn m_ue(&self) -> usize {
        self.per_block_energy.m_ue
    }

    pub fn n_rs(&self) -> usize {
        self.per_block_energy.n_rs
    }

    /// Position of (subcarrier, block, chain) in `y`.
    pub fn index(&self, k: usize, block: usize, chain: usize) -> usize {
        k * self.n_rf() * self.m_bs() * self.m_ue() + block * self.n_rf() + chain
    }

    /// Writes `y` as little-endian interleaved (re, im) `f64` pairs to
    /// `<stem>.bin`, and `cfg` as JSON to `<stem>.json`.
    pub fn write_dump(&self, cfg: &SweepConfig, stem: &Path) -> Result<()> {
        let (bin, json) = dump_paths(stem);
        let file = fs::File::create(&bin).map_err(|e| Error::io(&bin, e))?;
        let mut out = BufWriter::new(file);
        for z in self.y.iter() {
            out.write_all(&z.re.to_le_bytes())
                .and_then(|_| out.write_all(&z.im.to_le_bytes()))
                .map_err(|e| Error::io(&bin, e))?;
        }
        out.flush().map_err(|e| Error::io(&bin, e))?;
        let sidecar = DumpSidecar {
            n_values: self.y.len(),
            config: cfg.clone(),
        };
        let text = serde_json::to_string_pretty(&sidecar).map_err(|e| Error::Json {
            path: json.clone(),
            source: e,
        })?;
        fs::write(&json, text).map_err(|e| Error::io(&json, e))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct DumpSidecar {
    n_values: usize,
    config: SweepConfig,
}

fn dump_paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("bin"), stem.with_extension("json"))
}

/// Reads a dump written by [`MeasurementSet::write_dump`].
pub fn read_dump(stem: &Path) -> Result<(DVector<Complex64>, SweepConfig)> {
    let (bin, json) = dump_paths(stem);
    let text = fs::read_to_string(&json).map_err(|e| Error::io(&json, e))?;
    let sidecar: DumpSidecar = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: json.clone(),
        source: e,
    })?;
    let file = fs::File::open(&bin).map_err(|e| Error::io(&bin, e))?;
    let mut bytes = Vec::new();
    BufReader::new(file)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(&bin, e))?;
    if bytes.len() != sidecar.n_values * 16 {
        return Err(Error::dims(format!(
            "{} holds {} bytes, sidecar expects {} values",
            bin.display(),
            bytes.len(),
            sidecar.n_values
        )));
    }
    let f = |b: &[u8]| f64::from_le_bytes(b.try_into().expect("8-byte chunk"));
    let y = DVector::from_iterator(
        sidecar.n_values,
        bytes
            .chunks_exact(16)
            .map(|c| Complex64::new(f(&c[..8]), f(&c[8..]))),
    );
    Ok((y, sidecar.config))
}

/// Noiseless received blocks of one channel realization, before scaling by
/// `sqrt(rho)`. Reused across SNR points.
#[derive(Debug, Clone)]
pub struct SweepSignal {
    /// `W^H H[k] X` per pilot subcarrier, `(n_rf * m_ue) x m_bs`.
    blocks: Vec<DMatrix<Complex64>>,
    x: DMatrix<Complex64>,
    w: DMatrix<Complex64>,
    n_rf: usize,
    m_ue: usize,
}

impl SweepSignal {
    pub fn new(
        ch: &ChannelRealization,
        tx_codebook: &Codebook,
        rx_codebook: &Codebook,
        cfg: &SweepConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        if tx_codebook.len() != cfg.m_bs || rx_codebook.len() != cfg.m_ue {
            return Err(Error::dims(format!(
                "codebooks have {}/{} entries, sweep expects m_bs = {}, m_ue = {}",
                tx_codebook.len(),
                rx_codebook.len(),
                cfg.m_bs,
                cfg.m_ue
            )));
        }
        if rx_codebook.n_cols() != cfg.n_rf_ue {
            return Err(Error::dims(format!(
                "combiner entries have {} columns for {} RF chains",
                rx_codebook.n_cols(),
                cfg.n_rf_ue
            )));
        }
        if tx_codebook.n_ant() != ch.tx_geometry.n_ant()
            || rx_codebook.n_ant() != ch.rx_geometry.n_ant()
        {
            return Err(Error::dims(
                "codebook element counts differ from channel arrays",
            ));
        }
        let x = transmit_vectors(tx_codebook);
        let w = combiner_matrix(rx_codebook);
        let (a_ue, a_bs) = response_matrices(ch);
        let left = w.adjoint() * a_ue;
        let right = a_bs.adjoint() * &x;
        let blocks = cfg
            .subcarrier_indices
            .iter()
            .map(|&k| {
                let gains = ray_gains(ch, k, cfg.sample_rate, cfg.n_fft);
                let mut scaled = left.clone();
                for (mut col, g) in scaled.column_iter_mut().zip(gains) {
                    col *= g;
                }
                scaled * &right
            })
            .collect();
        Ok(Self {
            blocks,
            x,
            w,
            n_rf: cfg.n_rf_ue,
            m_ue: cfg.m_ue,
        })
    }

    /// Adds `sqrt(tx_power)` scaling and combined receiver noise.
    ///
    /// Noise is drawn per receive antenna, `z ~ CN(0, noise_variance I)`,
    /// independently for every block and subcarrier, and passed through the
    /// active combiner, so `n = W_j^H z`.
    pub fn measure<R: Rng + ?Sized>(
        &self,
        tx_power: f64,
        noise_variance: f64,
        rng: &mut R,
    ) -> MeasurementSet {
        let n_sc = self.blocks.len();
        let m_bs = self.x.ncols();
        let per_sc = self.n_rf * self.m_ue * m_bs;
        let n_ue = self.w.nrows();
        let amp = tx_power.sqrt();
        let mut y = DVector::zeros(per_sc * n_sc);
        let mut z = DVector::<Complex64>::zeros(n_ue);
        for (k, block) in self.blocks.iter().enumerate() {
            for i in 0..m_bs {
                for j in 0..self.m_ue {
                    let combiner = self.w.columns(j * self.n_rf, self.n_rf);
                    if noise_variance > 0.0 {
                        for v in z.iter_mut() {
                            *v = complex_gaussian(rng, noise_variance);
                        }
                    }
                    let base = k * per_sc + (i * self.m_ue + j) * self.n_rf;
                    for r in 0..self.n_rf {
                        let mut v = block[(j * self.n_rf + r, i)] * amp;
                        if noise_variance > 0.0 {
                            v += combiner.column(r).dotc(&z);
                        }
                        y[base + r] = v;
                    }
                }
            }
        }
        let per_block_energy = BlockEnergy {
            m_bs,
            m_ue: self.m_ue,
            n_rf: self.n_rf,
            n_rs: n_sc,
            values: y.iter().map(|v| v.norm_sqr()).collect(),
        };
        MeasurementSet {
            y,
            per_block_energy,
            x: self.x.clone(),
            w: self.w.clone(),
        }
    }
}

/// Runs one beam sweep over `ch` and returns the stacked measurements.
pub fn acquire<R: Rng + ?Sized>(
    ch: &ChannelRealization,
    tx_codebook: &Codebook,
    rx_codebook: &Codebook,
    cfg: &SweepConfig,
    rng: &mut R,
) -> Result<MeasurementSet> {
    let signal = SweepSignal::new(ch, tx_codebook, rx_codebook, cfg)?;
    Ok(signal.measure(cfg.tx_power, cfg.noise_variance, rng))
}

/// Kronecker-structured map from grid gains `h` to stacked measurements
/// (without the `sqrt(rho)` factor).
///
/// RF beams are frequency-flat, so `X~[k]` and `W~[k]` are the same for every
/// pilot subcarrier and are stored once.
#[derive(Debug, Clone)]
pub struct SensingOperator {
    tx_factor: DMatrix<Complex64>,
    rx_factor: DMatrix<Complex64>,
    n_rs: usize,
    tx_norms: Vec<f64>,
    rx_norms: Vec<f64>,
}

impl SensingOperator {
    pub fn from_factors(
        tx_factor: DMatrix<Complex64>,
        rx_factor: DMatrix<Complex64>,
        n_rs: usize,
    ) -> Result<Self> {
        if n_rs == 0 {
            return Err(Error::param("operator needs at least one subcarrier"));
        }
        let tx_norms = tx_factor.column_iter().map(|c| c.norm_squared()).collect();
        let rx_norms = rx_factor.column_iter().map(|c| c.norm_squared()).collect();
        Ok(Self {
            tx_factor,
            rx_factor,
            n_rs,
            tx_norms,
            rx_norms,
        })
    }

    /// `X~[k]`, `m_bs x G_bs`.
    pub fn tx_factor(&self, _k: usize) -> &DMatrix<Complex64> {
        &self.tx_factor
    }

    /// `W~[k]`, `(n_rf * m_ue) x G_ue`.
    pub fn rx_factor(&self, _k: usize) -> &DMatrix<Complex64> {
        &self.rx_factor
    }

    pub fn n_rs(&self) -> usize {
        self.n_rs
    }

    pub fn g_tx(&self) -> usize {
        self.tx_factor.ncols()
    }

    pub fn g_rx(&self) -> usize {
        self.rx_factor.ncols()
    }

    fn block_rows(&self) -> usize {
        self.tx_factor.nrows() * self.rx_factor.nrows()
    }

    pub fn nrows(&self) -> usize {
        self.block_rows() * self.n_rs
    }

    pub fn ncols(&self) -> usize {
        self.g_tx() * self.g_rx()
    }

    /// Splits a column index into (tx grid bin, rx grid bin).
    pub fn split_index(&self, g: usize) -> (usize, usize) {
        (g / self.g_rx(), g % self.g_rx())
    }

    pub fn apply(&self, h: &DVector<Complex64>) -> DVector<Complex64> {
        assert_eq!(h.len(), self.ncols(), "operator input length");
        let gains = DMatrix::from_column_slice(self.g_rx(), self.g_tx(), h.as_slice());
        let block = &self.rx_factor * gains * self.tx_factor.transpose();
        let per = self.block_rows();
        let mut out = DVector::zeros(self.nrows());
        for k in 0..self.n_rs {
            out.rows_mut(k * per, per).copy_from_slice(block.as_slice());
        }
        out
    }

    pub fn adjoint(&self, r: &DVector<Complex64>) -> DVector<Complex64> {
        assert_eq!(r.len(), self.nrows(), "operator output length");
        let per = self.block_rows();
        let mut sum = DMatrix::<Complex64>::zeros(self.rx_factor.nrows(), self.tx_factor.nrows());
        for k in 0..self.n_rs {
            for (s, v) in sum.iter_mut().zip(r.rows(k * per, per).iter()) {
                *s += v;
            }
        }
        let gains = self.rx_factor.adjoint() * sum * self.tx_factor.conjugate();
        DVector::from_column_slice(gains.as_slice())
    }

    pub fn column(&self, g: usize) -> DVector<Complex64> {
        let (t, r) = self.split_index(g);
        let tx = self.tx_factor.column(t);
        let rx = self.rx_factor.column(r);
        let per = self.block_rows();
        let mut out = DVector::zeros(self.nrows());
        for k in 0..self.n_rs {
            for (a, tv) in tx.iter().enumerate() {
                for (b, rv) in rx.iter().enumerate() {
                    out[k * per + a * rx.len() + b] = tv * rv;
                }
            }
        }
        out
    }

    pub fn column_norm(&self, g: usize) -> f64 {
        let (t, r) = self.split_index(g);
        (self.n_rs as f64 * self.tx_norms[t] * self.rx_norms[r]).sqrt()
    }

    /// Materializes the dense matrix. Only meant for small test instances.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let kron = self.tx_factor.kronecker(&self.rx_factor);
        let per = self.block_rows();
        let mut dense = DMatrix::zeros(self.nrows(), self.ncols());
        for k in 0..self.n_rs {
            dense.rows_mut(k * per, per).copy_from(&kron);
        }
        dense
    }
}

/// Builds the sensing operator for a pair of codebooks and grids.
pub fn build_sensing_operator(
    tx_codebook: &Codebook,
    rx_codebook: &Codebook,
    tx_grid: &GridDictionary,
    rx_grid: &GridDictionary,
    cfg: &SweepConfig,
) -> Result<SensingOperator> {
    if tx_codebook.len() != cfg.m_bs
        || rx_codebook.len() != cfg.m_ue
        || rx_codebook.n_cols() != cfg.n_rf_ue
    {
        return Err(Error::dims(
            "codebook sizes differ from the sweep configuration",
        ));
    }
    let x = transmit_vectors(tx_codebook);
    let w = combiner_matrix(rx_codebook);
    SensingOperator::from_factors(
        effective_tx_factor(&x, tx_grid)?,
        effective_rx_factor(&w, rx_grid)?,
        cfg.n_rs,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arrays::{grid_sin, ArrayGeometry};
    use crate::channel::{freq_channel, PathComponent};
    use crate::codebooks::{dft_codebook, random_codebook};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_cfg() -> SweepConfig {
        SweepConfig {
            m_bs: 8,
            m_ue: 2,
            n_rf_ue: 2,
            n_rs: 3,
            subcarrier_indices: vec![10, 11, 12],
            n_fft: 64,
            sample_rate: 1e8,
            ..Default::default()
        }
    }

    fn on_grid_channel(
        tx: ArrayGeometry,
        rx: ArrayGeometry,
        bins: &[(usize, usize)],
        k: usize,
    ) -> ChannelRealization {
        let paths = bins
            .iter()
            .enumerate()
            .map(|(i, &(t, r))| PathComponent {
                gain: Complex64::new(0.5 + i as f64, -0.3),
                delay: 0.0,
                aod: grid_sin(t, tx.n_ant() * k).asin(),
                aoa: grid_sin(r, rx.n_ant() * k).asin(),
                cluster_id: i,
                ray_id: 0,
            })
            .collect();
        ChannelRealization::from_paths(paths, tx, rx).unwrap()
    }

    #[test]
    fn default_lengths() {
        let cfg = SweepConfig::default();
        assert_eq!(cfg.measurement_len(), 5120);
        assert_eq!(cfg.subcarrier_indices, (2043..2053).collect::<Vec<_>>());
        let tx = GridDictionary::build(ArrayGeometry::new(64).unwrap(), 3).unwrap();
        let rx = GridDictionary::build(ArrayGeometry::new(8).unwrap(), 3).unwrap();
        let txc = dft_codebook(64, 64, 6).unwrap();
        let rxc = dft_codebook(8, 8, 6).unwrap().group_columns(4).unwrap();
        let op = build_sensing_operator(&txc, &rxc, &tx, &rx, &cfg).unwrap();
        assert_eq!((op.nrows(), op.ncols()), (5120, 4608));
    }

    #[test]
    fn snr_settings() {
        let mut cfg = SweepConfig::default();
        cfg.set_snr_db(-10.0);
        assert!((cfg.tx_power - 0.1).abs() < 1e-15);
        assert!((cfg.snr_db() + 10.0).abs() < 1e-12);
        cfg.subcarrier_indices[0] = 5000;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn transmit_vectors_unit_norm() {
        let cb = dft_codebook(64, 64, 6).unwrap();
        let x = transmit_vectors(&cb);
        assert_eq!(x.shape(), (64, 64));
        for m in 0..64 {
            assert!((x.column(m).norm() - 1.0).abs() < 1e-12);
            assert!((x.column(m) - cb.column(m, 0)).camax() < 1e-15);
        }
        let multi = random_codebook(16, 4, 3, 6, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let x = transmit_vectors(&multi);
        for m in 0..4 {
            assert!((x.column(m).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn acquire_rejects_mismatched_codebooks() {
        let tx = ArrayGeometry::new(8).unwrap();
        let rx = ArrayGeometry::new(4).unwrap();
        let ch = on_grid_channel(tx, rx, &[(1, 1)], 1);
        let cfg = small_cfg();
        let txc = dft_codebook(8, 4, 6).unwrap();
        let rxc = dft_codebook(4, 4, 6).unwrap().group_columns(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(acquire(&ch, &txc, &rxc, &cfg, &mut rng).is_err());
    }

    #[test]
    fn matched_beams_give_full_gain() {
        // noiseless single path aligned with tx beam 3 and rx beam 1
        let tx = ArrayGeometry::new(8).unwrap();
        let rx = ArrayGeometry::new(4).unwrap();
        let ch = on_grid_channel(tx, rx, &[(3, 1)], 1);
        let mut cfg = small_cfg();
        cfg.noise_variance = 0.0;
        cfg.tx_power = 2.0;
        let txc = dft_codebook(8, 8, 6).unwrap();
        let rxc = dft_codebook(4, 4, 6).unwrap().group_columns(2).unwrap();
        let meas = acquire(&ch, &txc, &rxc, &cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(meas.y.len(), cfg.measurement_len());
        let alpha = ch.paths[0].gain.norm();
        let expect = 2f64.sqrt() * ch.gamma * alpha;
        // rx beam 1 is entry 0, chain 1
        for k in 0..3 {
            let v = meas.y[meas.index(k, 3 * 2, 1)];
            assert!((v.norm() - expect).abs() < 1e-10 * expect);
            let off = meas.y[meas.index(k, 2 * 2, 1)];
            assert!(off.norm() < 1e-10);
        }
        assert!((meas.per_block_energy.get(3, 0, 1, 2) - expect * expect).abs() < 1e-8);
    }

    #[test]
    fn acquire_matches_channel_matrix() {
        let tx = ArrayGeometry::new(8).unwrap();
        let rx = ArrayGeometry::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ch = crate::channel::sample_channel(&Default::default(), tx, rx, &mut rng).unwrap();
        let mut cfg = small_cfg();
        cfg.noise_variance = 0.0;
        let txc = random_codebook(8, 8, 1, 6, &mut rng).unwrap();
        let rxc = random_codebook(4, 2, 2, 6, &mut rng).unwrap();
        let meas = acquire(&ch, &txc, &rxc, &cfg, &mut rng).unwrap();
        let x = transmit_vectors(&txc);
        let w = combiner_matrix(&rxc);
        for (kk, &k) in cfg.subcarrier_indices.iter().enumerate() {
            let y = w.adjoint() * freq_channel(&ch, k, cfg.sample_rate, cfg.n_fft) * &x;
            let stacked = meas.y.rows(kk * 32, 32);
            let direct = DVector::from_column_slice(y.as_slice());
            assert!((stacked - &direct).norm() < 1e-10 * direct.norm());
        }
    }

    #[test]
    fn noiseless_on_grid_equals_operator() {
        let tx = ArrayGeometry::new(8).unwrap();
        let rx = ArrayGeometry::new(4).unwrap();
        let k = 2;
        let bins = [(3, 1), (10, 6)];
        let ch = on_grid_channel(tx, rx, &bins, k);
        let mut cfg = small_cfg();
        cfg.noise_variance = 0.0;
        cfg.tx_power = 3.0;
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let txc = random_codebook(8, 8, 1, 6, &mut rng).unwrap();
        let rxc = random_codebook(4, 2, 2, 6, &mut rng).unwrap();
        let tg = GridDictionary::build(tx, k).unwrap();
        let rg = GridDictionary::build(rx, k).unwrap();
        let op = build_sensing_operator(&txc, &rxc, &tg, &rg, &cfg).unwrap();
        let mut h = DVector::zeros(op.ncols());
        for (p, &(t, r)) in ch.paths.iter().zip(&bins) {
            h[t * op.g_rx() + r] = p.gain * ch.gamma;
        }
        let meas = acquire(&ch, &txc, &rxc, &cfg, &mut rng).unwrap();
        let expect = op.apply(&h) * Complex64::from(3f64.sqrt());
        assert!((meas.y - &expect).norm() < 1e-10 * expect.norm());
    }

    #[test]
    fn kronecker_apply_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for n_bs in [4usize, 8, 16] {
            let tx = ArrayGeometry::new(n_bs).unwrap();
            let rx = ArrayGeometry::new(4).unwrap();
            let cfg = SweepConfig {
                m_bs: n_bs,
                ..small_cfg()
            };
            let txc = random_codebook(n_bs, n_bs, 1, 6, &mut rng).unwrap();
            let rxc = random_codebook(4, 2, 2, 6, &mut rng).unwrap();
            let op = build_sensing_operator(
                &txc,
                &rxc,
                &GridDictionary::build(tx, 3).unwrap(),
                &GridDictionary::build(rx, 2).unwrap(),
                &cfg,
            )
            .unwrap();
            let dense = op.to_dense();
            let h = DVector::from_fn(op.ncols(), |_, _| complex_gaussian(&mut rng, 1.0));
            let r = DVector::from_fn(op.nrows(), |_, _| complex_gaussian(&mut rng, 1.0));
            let a = op.apply(&h);
            let b = &dense * &h;
            assert!((&a - &b).norm() <= 1e-10 * b.norm());
            let a = op.adjoint(&r);
            let b = dense.adjoint() * &r;
            assert!((&a - &b).norm() <= 1e-10 * b.norm());
            for g in [0, 5, op.ncols() - 1] {
                assert!((op.column(g) - dense.column(g)).norm() < 1e-12);
                assert!((op.column_norm(g) - dense.column(g).norm()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn identity_codebooks_reduce_to_dictionary() {
        // unquantized DFT beams on a multiplier-one grid make both factors
        // unitary DFT correlations: X~ = X^T conj(A) and W~ = W^H A
        let tx = ArrayGeometry::new(4).unwrap();
        let rx = ArrayGeometry::new(2).unwrap();
        let cfg = SweepConfig {
            m_bs: 4,
            m_ue: 1,
            n_rf_ue: 2,
            n_rs: 1,
            subcarrier_indices: vec![0],
            ..small_cfg()
        };
        let txc = dft_codebook(4, 4, 30).unwrap();
        let rxc = dft_codebook(2, 2, 30).unwrap().group_columns(2).unwrap();
        let tg = GridDictionary::build(tx, 1).unwrap();
        let rg = GridDictionary::build(rx, 1).unwrap();
        let op = build_sensing_operator(&txc, &rxc, &tg, &rg, &cfg).unwrap();
        let x = transmit_vectors(&txc);
        let w = combiner_matrix(&rxc);
        let phi = x.transpose().kronecker(&w.adjoint());
        let psi = tg.atoms().conjugate().kronecker(rg.atoms());
        assert!((op.to_dense() - phi * psi).camax() < 1e-12);
    }

    #[test]
    fn combined_noise_covariance() {
        let tx = ArrayGeometry::new(4).unwrap();
        let rx = ArrayGeometry::new(4).unwrap();
        let ch = on_grid_channel(tx, rx, &[(0, 0)], 1);
        let mut ch0 = ch.clone();
        ch0.paths[0].gain = Complex64::default();
        let cfg = SweepConfig {
            m_bs: 1,
            m_ue: 1,
            n_rf_ue: 3,
            n_rs: 1,
            subcarrier_indices: vec![0],
            noise_variance: 0.7,
            ..small_cfg()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let txc = dft_codebook(4, 1, 6).unwrap();
        let rxc = random_codebook(4, 1, 3, 6, &mut rng).unwrap();
        let signal = SweepSignal::new(&ch0, &txc, &rxc, &cfg).unwrap();
        let n = 10_000;
        let mut cov = DMatrix::<Complex64>::zeros(3, 3);
        for _ in 0..n {
            let y = signal.measure(1.0, cfg.noise_variance, &mut rng).y;
            cov += &y * y.adjoint();
        }
        cov /= Complex64::from(n as f64);
        let w = combiner_matrix(&rxc);
        let expect = w.adjoint() * &w * Complex64::from(0.7);
        assert!((cov - &expect).norm() <= 0.05 * expect.norm());
    }

    #[test]
    fn dump_round_trip() {
        let tx = ArrayGeometry::new(8).unwrap();
        let rx = ArrayGeometry::new(4).unwrap();
        let ch = on_grid_channel(tx, rx, &[(2, 3)], 1);
        let cfg = small_cfg();
        let txc = dft_codebook(8, 8, 6).unwrap();
        let rxc = dft_codebook(4, 4, 6).unwrap().group_columns(2).unwrap();
        let meas = acquire(&ch, &txc, &rxc, &cfg, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("sweep");
        meas.write_dump(&cfg, &stem).unwrap();
        let bytes = fs::read(stem.with_extension("bin")).unwrap();
        assert_eq!(bytes.len(), meas.y.len() * 16);
        assert_eq!(&bytes[..8], &meas.y[0].re.to_le_bytes());
        assert_eq!(&bytes[8..16], &meas.y[0].im.to_le_bytes());
        let (y, back) = read_dump(&stem).unwrap();
        assert_eq!(y, meas.y);
        assert_eq!(back, cfg);
    }
}

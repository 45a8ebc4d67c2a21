//! Seeded Monte Carlo experiment runner and CSV output.
//!
//! One channel is drawn per trial and reused across every SNR point and
//! method. Noise is re-drawn per (trial, SNR, method). All random streams are
//! derived from the master seed, so results are independent of the worker
//! count.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::arrays::{grid_sin, ArrayGeometry, GridDictionary};
use crate::channel::{
    complex_gaussian, sample_channel, ChannelParams, ChannelRealization, PathComponent,
};
use crate::codebooks::{
    designed_codebook, dft_codebook, multi_beam_dft_codebook, random_codebook, Codebook,
};
use crate::detect::{beam_errors, cs_detect, exhaustive_search, true_pairs, DetectionOutcome};
use crate::error::{Error, Result};
use crate::metrics::{detection_probability, error_histogram, GroupSummary, Method, TrialRecord};
use crate::seed::stream_rng;
use crate::sweep::{
    build_sensing_operator, middle_subcarriers, SensingOperator, SweepConfig, SweepSignal,
};

const STREAM_CHANNEL: u64 = 1;
const STREAM_CODEBOOK: u64 = 2;
const STREAM_NOISE: u64 = 3;
const STREAM_DESIGN: u64 = 4;

pub const SUMMARY_HEADER: &str = "snr_db,method,n_trials,p_all,p_all_se,p_single,p_single_se";
pub const ERROR_HEADER: &str = "snr_db,method,side,error,count";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const ERROR_FILE: &str = "error_cdf.csv";

/// How channels are generated per trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelModel {
    /// Clustered multipath with Laplacian ray spread.
    Clustered,
    /// One ray whose AoD and AoA lie exactly on DFT beam directions.
    OnGridSinglePath,
}

impl ChannelModel {
    pub fn as_str(&self) -> &'static str {
        match self {
            ChannelModel::Clustered => "clustered",
            ChannelModel::OnGridSinglePath => "on_grid_single_path",
        }
    }
}

impl fmt::Display for ChannelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChannelModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "clustered" => Ok(ChannelModel::Clustered),
            "on_grid_single_path" => Ok(ChannelModel::OnGridSinglePath),
            other => Err(Error::param(format!("unknown channel model '{other}'"))),
        }
    }
}

/// Full description of an experiment; the output is a pure function of it.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_ant_bs: usize,
    /// Transmit RF chains. IA beams are single-stream, so this only bounds
    /// the configuration.
    pub n_rf_bs: usize,
    pub n_ant_ue: usize,
    pub phase_bits: u32,
    pub grid_multiplier_bs: usize,
    pub grid_multiplier_ue: usize,
    pub sweep: SweepConfig,
    pub channel: ChannelParams,
    pub channel_model: ChannelModel,
    pub snr_grid_db: Vec<f64>,
    pub n_trials: usize,
    pub methods: Vec<Method>,
    pub master_seed: u64,
    pub output_path: Option<PathBuf>,
    /// Zero noise; `snr_db` then only scales the transmit power.
    pub noiseless: bool,
    /// OMP sparsity; the channel path count when unset.
    pub sparsity: Option<usize>,
    pub design_sweeps: usize,
    /// Worker threads; 0 picks the number of available cores.
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_ant_bs: 64,
            n_rf_bs: 8,
            n_ant_ue: 8,
            phase_bits: 6,
            grid_multiplier_bs: 3,
            grid_multiplier_ue: 3,
            sweep: SweepConfig::default(),
            channel: ChannelParams::default(),
            channel_model: ChannelModel::Clustered,
            snr_grid_db: snr_range(-30.0, 5.0, 30.0).expect("valid default range"),
            n_trials: 500,
            methods: vec![Method::Es, Method::OmpRandom, Method::OmpDft],
            master_seed: 1,
            output_path: None,
            noiseless: false,
            sparsity: None,
            design_sweeps: 200,
            workers: 0,
        }
    }
}

/// Inclusive arithmetic range `start, start + step, ..., stop`.
pub fn snr_range(start: f64, step: f64, stop: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && step.is_finite() && stop.is_finite()) || step == 0.0 {
        return Err(Error::param(
            "SNR range needs finite values and a non-zero step",
        ));
    }
    let span = (stop - start) / step;
    if span < -1e-9 {
        return Err(Error::param(format!(
            "SNR range {start}:{step}:{stop} is empty"
        )));
    }
    let n = (span + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| start + i as f64 * step).collect())
}

/// Parses `start:step:stop` or a comma-separated list of SNR values in dB.
pub fn parse_snr_grid(s: &str) -> Result<Vec<f64>> {
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| Error::param(format!("bad SNR value '{}'", t.trim())))
    };
    let parts: Vec<&str> = s.split(':').collect();
    match parts.len() {
        3 => snr_range(num(parts[0])?, num(parts[1])?, num(parts[2])?),
        1 => {
            let v = s.split(',').map(num).collect::<Result<Vec<_>>>()?;
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::param("SNR values must be finite"));
            }
            Ok(v)
        }
        _ => Err(Error::param(format!(
            "bad SNR grid '{s}', expected start:step:stop or a list"
        ))),
    }
}

/// Parses a comma-separated method list.
pub fn parse_methods(s: &str) -> Result<Vec<Method>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(str::parse)
        .collect()
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::param(format!("bad value '{value}' for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::param(format!("bad boolean '{value}' for {key}"))),
    }
}

impl ExperimentConfig {
    /// Sets one field from its textual key and value.
    ///
    /// Changing `n_rs` or `n_fft` resets the pilot subcarriers to the middle
    /// of the band.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "n_ant_bs" => self.n_ant_bs = parse_num(key, v)?,
            "n_rf_bs" => self.n_rf_bs = parse_num(key, v)?,
            "n_ant_ue" => self.n_ant_ue = parse_num(key, v)?,
            "n_rf_ue" => self.sweep.n_rf_ue = parse_num(key, v)?,
            "phase_bits" => self.phase_bits = parse_num(key, v)?,
            "grid_multiplier_bs" => self.grid_multiplier_bs = parse_num(key, v)?,
            "grid_multiplier_ue" => self.grid_multiplier_ue = parse_num(key, v)?,
            "m_bs" => self.sweep.m_bs = parse_num(key, v)?,
            "m_ue" => self.sweep.m_ue = parse_num(key, v)?,
            "n_rs" => {
                self.sweep.n_rs = parse_num(key, v)?;
                self.sweep.subcarrier_indices =
                    middle_subcarriers(self.sweep.n_fft, self.sweep.n_rs);
            }
            "n_fft" => {
                self.sweep.n_fft = parse_num(key, v)?;
                self.sweep.subcarrier_indices =
                    middle_subcarriers(self.sweep.n_fft, self.sweep.n_rs);
            }
            "subcarrier_indices" => {
                self.sweep.subcarrier_indices = v
                    .split(',')
                    .map(|t| parse_num(key, t.trim()))
                    .collect::<Result<_>>()?
            }
            "sample_rate" => self.sweep.sample_rate = parse_num(key, v)?,
            "subcarrier_spacing" => self.sweep.subcarrier_spacing = parse_num(key, v)?,
            "noise_variance" => self.sweep.noise_variance = parse_num(key, v)?,
            "n_clusters" => self.channel.n_clusters = parse_num(key, v)?,
            "n_rays" => self.channel.n_rays = parse_num(key, v)?,
            "gain_variance" => self.channel.gain_variance = parse_num(key, v)?,
            "delay_max" => self.channel.delay_max = parse_num(key, v)?,
            "ray_angle_std_deg" => {
                self.channel.ray_angle_std = parse_num::<f64>(key, v)?.to_radians()
            }
            "channel_model" => self.channel_model = v.parse()?,
            "snr_db" => self.snr_grid_db = parse_snr_grid(v)?,
            "n_trials" => self.n_trials = parse_num(key, v)?,
            "methods" => self.methods = parse_methods(v)?,
            "master_seed" => self.master_seed = parse_num(key, v)?,
            "output_path" => self.output_path = Some(PathBuf::from(v)),
            "noiseless" => self.noiseless = parse_bool(key, v)?,
            "sparsity" => self.sparsity = Some(parse_num(key, v)?),
            "design_sweeps" => self.design_sweeps = parse_num(key, v)?,
            "workers" => self.workers = parse_num(key, v)?,
            other => return Err(Error::param(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Parses flat `key = value` text on top of the defaults. Blank lines and
    /// `#` comments are ignored; unknown or repeated keys are errors.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut seen = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("expected key = value, got '{line}'"),
            })?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("duplicate key '{key}'"),
                });
            }
            entries.push((line_no, key, value.trim()));
        }
        // explicit subcarriers win over the n_rs / n_fft reset
        entries.sort_by_key(|&(_, key, _)| key == "subcarrier_indices");
        let mut cfg = Self::default();
        for (line, key, value) in entries {
            cfg.set(key, value).map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    /// OMP sparsity in effect.
    pub fn effective_sparsity(&self) -> usize {
        self.sparsity.unwrap_or(match self.channel_model {
            ChannelModel::Clustered => self.channel.n_paths(),
            ChannelModel::OnGridSinglePath => 1,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.sweep.validate()?;
        self.channel.validate()?;
        if self.n_ant_bs == 0 || self.n_ant_ue == 0 || self.n_rf_bs == 0 {
            return Err(Error::param("antenna and RF chain counts must be positive"));
        }
        if self.phase_bits == 0 || self.phase_bits > crate::codebooks::MAX_PHASE_BITS {
            return Err(Error::param(format!(
                "phase_bits {} out of range",
                self.phase_bits
            )));
        }
        if self.grid_multiplier_bs == 0 || self.grid_multiplier_ue == 0 {
            return Err(Error::param("grid multipliers must be positive"));
        }
        if self.n_trials == 0 {
            return Err(Error::param("n_trials must be positive"));
        }
        if self.snr_grid_db.is_empty() || self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::param(
                "SNR grid must be a non-empty list of finite values",
            ));
        }
        if self.methods.is_empty() {
            return Err(Error::param("no methods selected"));
        }
        if self.methods.iter().collect::<BTreeSet<_>>().len() != self.methods.len() {
            return Err(Error::param("methods listed more than once"));
        }
        if self.effective_sparsity() == 0 {
            return Err(Error::param("sparsity must be positive"));
        }
        if self.sweep.m_ue * self.sweep.n_rf_ue > self.n_ant_ue {
            return Err(Error::param(format!(
                "m_ue * n_rf_ue = {} receive beams exceed the {} UE antennas",
                self.sweep.m_ue * self.sweep.n_rf_ue,
                self.n_ant_ue
            )));
        }
        let uses_dft_tx = self
            .methods
            .iter()
            .any(|m| matches!(m, Method::Es | Method::OmpDft));
        if self.methods.contains(&Method::Es) && self.n_ant_bs > self.sweep.m_bs {
            return Err(Error::Unsupported(
                "exhaustive search requires M_BS ≥ n_tx_beams".to_string(),
            ));
        }
        if uses_dft_tx && self.sweep.m_bs > self.n_ant_bs {
            return Err(Error::param(format!(
                "{} DFT beams requested from {} antennas",
                self.sweep.m_bs, self.n_ant_bs
            )));
        }
        let multi = self
            .methods
            .iter()
            .any(|m| matches!(m, Method::OmpMultiBeam | Method::OmpDesigned));
        if multi && !self.n_ant_bs.is_multiple_of(self.sweep.m_bs) {
            return Err(Error::param(format!(
                "multi-beam codebooks need n_ant_bs ({}) to be a multiple of m_bs ({})",
                self.n_ant_bs, self.sweep.m_bs
            )));
        }
        Ok(())
    }
}

/// Trial-invariant state: geometries, grids, fixed codebooks and operators.
struct Setup {
    tx_geometry: ArrayGeometry,
    rx_geometry: ArrayGeometry,
    tx_grid: GridDictionary,
    rx_grid: GridDictionary,
    rx_dft: Codebook,
    fixed: HashMap<Method, (Codebook, SensingOperator)>,
}

impl Setup {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let tx_geometry = ArrayGeometry::new(cfg.n_ant_bs)?;
        let rx_geometry = ArrayGeometry::new(cfg.n_ant_ue)?;
        let tx_grid = GridDictionary::build(tx_geometry, cfg.grid_multiplier_bs)?;
        let rx_grid = GridDictionary::build(rx_geometry, cfg.grid_multiplier_ue)?;
        let s = &cfg.sweep;
        let rx_dft = dft_codebook(cfg.n_ant_ue, s.m_ue * s.n_rf_ue, cfg.phase_bits)?
            .group_columns(s.n_rf_ue)?;
        let mut fixed = HashMap::new();
        for &method in &cfg.methods {
            let Some(tx) = fixed_tx_codebook(cfg, &tx_grid, method)? else {
                continue;
            };
            let op = build_sensing_operator(&tx, &rx_dft, &tx_grid, &rx_grid, s)?;
            fixed.insert(method, (tx, op));
        }
        Ok(Self {
            tx_geometry,
            rx_geometry,
            tx_grid,
            rx_grid,
            rx_dft,
            fixed,
        })
    }
}

/// Transmit codebook a method uses in every trial; `None` for methods that
/// draw a fresh codebook per trial.
pub fn fixed_tx_codebook(
    cfg: &ExperimentConfig,
    tx_grid: &GridDictionary,
    method: Method,
) -> Result<Option<Codebook>> {
    let (n, m, bits) = (cfg.n_ant_bs, cfg.sweep.m_bs, cfg.phase_bits);
    Ok(Some(match method {
        Method::Es | Method::OmpDft => dft_codebook(n, m, bits)?,
        Method::OmpMultiBeam => multi_beam_dft_codebook(n, m, bits)?,
        Method::OmpDesigned => designed_codebook(
            n,
            m,
            tx_grid,
            bits,
            cfg.design_sweeps,
            &mut stream_rng(cfg.master_seed, &[STREAM_DESIGN]),
        )?,
        Method::OmpRandom => return Ok(None),
    }))
}

fn on_grid_channel<R: Rng + ?Sized>(
    params: &ChannelParams,
    tx: ArrayGeometry,
    rx: ArrayGeometry,
    rng: &mut R,
) -> Result<ChannelRealization> {
    let tx_beam = rng.random_range(0..tx.n_ant());
    let rx_beam = rng.random_range(0..rx.n_ant());
    let path = PathComponent {
        gain: complex_gaussian(rng, params.gain_variance),
        delay: rng.random_range(0.0..=params.delay_max),
        aod: grid_sin(tx_beam, tx.n_ant()).asin(),
        aoa: grid_sin(rx_beam, rx.n_ant()).asin(),
        cluster_id: 0,
        ray_id: 0,
    };
    ChannelRealization::from_paths(vec![path], tx, rx)
}

fn run_trial(cfg: &ExperimentConfig, setup: &Setup, trial: usize) -> Result<Vec<TrialRecord>> {
    let seed = cfg.master_seed;
    let t = trial as u64;
    let mut ch_rng = stream_rng(seed, &[STREAM_CHANNEL, t]);
    let ch = match cfg.channel_model {
        ChannelModel::Clustered => sample_channel(
            &cfg.channel,
            setup.tx_geometry,
            setup.rx_geometry,
            &mut ch_rng,
        )?,
        ChannelModel::OnGridSinglePath => on_grid_channel(
            &cfg.channel,
            setup.tx_geometry,
            setup.rx_geometry,
            &mut ch_rng,
        )?,
    };
    let truth = true_pairs(&ch, cfg.n_ant_bs, cfg.n_ant_ue);
    let n_pairs = truth.len();
    let s = &cfg.sweep;

    let random = if cfg.methods.contains(&Method::OmpRandom) {
        let mut rng = stream_rng(seed, &[STREAM_CODEBOOK, t]);
        let tx = random_codebook(cfg.n_ant_bs, s.m_bs, 1, cfg.phase_bits, &mut rng)?;
        let rx = random_codebook(cfg.n_ant_ue, s.m_ue, s.n_rf_ue, cfg.phase_bits, &mut rng)?;
        let op = build_sensing_operator(&tx, &rx, &setup.tx_grid, &setup.rx_grid, s)?;
        Some((tx, rx, op))
    } else {
        None
    };

    let mut signals: Vec<(Method, SweepSignal, Option<&SensingOperator>)> = Vec::new();
    for &method in &cfg.methods {
        let (signal, op) = match (method, &random) {
            (Method::OmpRandom, Some((tx, rx, op))) => (SweepSignal::new(&ch, tx, rx, s)?, op),
            _ => {
                let (tx, op) = &setup.fixed[&method];
                (SweepSignal::new(&ch, tx, &setup.rx_dft, s)?, op)
            }
        };
        signals.push((method, signal, (method != Method::Es).then_some(op)));
    }

    let mut records = Vec::with_capacity(cfg.snr_grid_db.len() * signals.len());
    for &snr_db in &cfg.snr_grid_db {
        let lin = 10f64.powf(snr_db / 10.0);
        let (tx_power, noise_variance) = if cfg.noiseless {
            (lin, 0.0)
        } else {
            (lin * s.noise_variance, s.noise_variance)
        };
        for (method, signal, op) in &signals {
            let mut rng = stream_rng(seed, &[STREAM_NOISE, t, snr_db.to_bits(), method.id()]);
            let meas = signal.measure(tx_power, noise_variance, &mut rng);
            let estimated = match op {
                None => exhaustive_search(&meas, n_pairs)?,
                Some(op) => {
                    cs_detect(
                        op,
                        &meas.y,
                        cfg.effective_sparsity(),
                        &setup.tx_grid,
                        &setup.rx_grid,
                        cfg.n_ant_bs,
                        cfg.n_ant_ue,
                        n_pairs,
                    )?
                    .pairs
                }
            };
            let (tx_errors, rx_errors) =
                beam_errors(&estimated, &truth, cfg.n_ant_bs, cfg.n_ant_ue);
            let outcome = DetectionOutcome::new(estimated, truth.clone());
            records.push(TrialRecord {
                trial,
                snr_db,
                method: *method,
                all_match: outcome.all_match(),
                single_match: outcome.single_match(),
                tx_errors,
                rx_errors,
            });
        }
    }
    Ok(records)
}

/// Per-trial records, ordered by (trial, SNR, method), and their aggregates.
#[derive(Debug, Clone)]
pub struct ExperimentResults {
    pub records: Vec<TrialRecord>,
    pub summary: Vec<GroupSummary>,
}

/// Which side of the link a beam-index error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Tx,
    Rx,
}

impl Side {
    pub fn as_str(&self) -> &'static str {
        match self {
            Side::Tx => "tx",
            Side::Rx => "rx",
        }
    }
}

impl ExperimentResults {
    pub fn from_records(records: Vec<TrialRecord>) -> Result<Self> {
        let summary = detection_probability(&records)?;
        Ok(Self { records, summary })
    }

    pub fn group(&self, snr_db: f64, method: Method) -> Option<&GroupSummary> {
        self.summary
            .iter()
            .find(|g| g.snr_db == snr_db && g.method == method)
    }

    /// All beam-index errors of one (SNR, method) group.
    pub fn errors(&self, snr_db: f64, method: Method, side: Side) -> Vec<i64> {
        self.records
            .iter()
            .filter(|r| r.snr_db == snr_db && r.method == method)
            .flat_map(|r| match side {
                Side::Tx => r.tx_errors.iter(),
                Side::Rx => r.rx_errors.iter(),
            })
            .copied()
            .collect()
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from(SUMMARY_HEADER);
        out.push('\n');
        for g in &self.summary {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                g.snr_db,
                g.method,
                g.n_trials(),
                g.all.p(),
                g.all.se(),
                g.single.p(),
                g.single.se()
            ));
        }
        out
    }

    /// Beam-index error counts per group and side; the empirical CDF is the
    /// running sum of `count` over increasing `error`.
    pub fn error_csv(&self) -> String {
        let mut out = String::from(ERROR_HEADER);
        out.push('\n');
        for g in &self.summary {
            for side in [Side::Tx, Side::Rx] {
                for (error, count) in error_histogram(&self.errors(g.snr_db, g.method, side)) {
                    out.push_str(&format!(
                        "{},{},{},{error},{count}\n",
                        g.snr_db,
                        g.method,
                        side.as_str()
                    ));
                }
            }
        }
        out
    }

    /// Writes `summary.csv` and `error_cdf.csv` into `dir`, creating it if
    /// needed.
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, body) in [
            (SUMMARY_FILE, self.summary_csv()),
            (ERROR_FILE, self.error_csv()),
        ] {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

/// Runs every trial, aggregates, and writes the CSV files when an output
/// path is configured.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResults> {
    cfg.validate()?;
    if let Some(dir) = &cfg.output_path {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let setup = Setup::new(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::param(format!("cannot start worker pool: {e}")))?;
    let per_trial: Vec<Vec<TrialRecord>> = pool.install(|| {
        (0..cfg.n_trials)
            .into_par_iter()
            .map(|t| run_trial(cfg, &setup, t))
            .collect::<Result<_>>()
    })?;
    let results = ExperimentResults::from_records(per_trial.into_iter().flatten().collect())?;
    if let Some(dir) = &cfg.output_path {
        results.write_csv(dir)?;
    }
    Ok(results)
}

/// One parsed row of `summary.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub snr_db: f64,
    pub method: Method,
    pub n_trials: usize,
    pub p_all: f64,
    pub p_all_se: f64,
    pub p_single: f64,
    pub p_single_se: f64,
}

/// Parses the text of `summary.csv`.
pub fn parse_summary_csv(text: &str) -> Result<Vec<SummaryRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == SUMMARY_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: "missing summary header".into(),
            })
        }
    }
    lines
        .map(|(i, line)| {
            let bad = |message: String| Error::Parse {
                line: i + 1,
                message,
            };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(bad(format!("expected 7 fields, got {}", f.len())));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| bad(format!("bad number '{s}'")))
            };
            Ok(SummaryRow {
                snr_db: num(f[0])?,
                method: f[1].parse().map_err(|e: Error| bad(e.to_string()))?,
                n_trials: f[2]
                    .parse()
                    .map_err(|_| bad(format!("bad count '{}'", f[2])))?,
                p_all: num(f[3])?,
                p_all_se: num(f[4])?,
                p_single: num(f[5])?,
                p_single_se: num(f[6])?,
            })
        })
        .collect()
}

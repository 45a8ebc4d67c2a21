//! Fixtures shared by the kernel benchmarks.

use nrbeam::codebooks::dft_codebook;
use nrbeam::sweep::{build_sensing_operator, SweepSignal};
use nrbeam::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Default-sized sweep: 64-element gNB, 8-element UE, 3x grids.
pub struct Fixture {
    pub cfg: SweepConfig,
    pub channel: ChannelRealization,
    pub tx: Codebook,
    pub rx: Codebook,
    pub tx_grid: GridDictionary,
    pub rx_grid: GridDictionary,
    pub operator: SensingOperator,
    pub measurements: MeasurementSet,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture() -> Fixture {
    let cfg = SweepConfig::default();
    let tx_geom = ArrayGeometry::new(64).unwrap();
    let rx_geom = ArrayGeometry::new(8).unwrap();
    let mut r = rng(7);
    let channel = sample_channel(&ChannelParams::default(), tx_geom, rx_geom, &mut r).unwrap();
    let tx = dft_codebook(64, cfg.m_bs, 6).unwrap();
    let rx = dft_codebook(8, cfg.m_ue * cfg.n_rf_ue, 6)
        .unwrap()
        .group_columns(cfg.n_rf_ue)
        .unwrap();
    let tx_grid = GridDictionary::build(tx_geom, 3).unwrap();
    let rx_grid = GridDictionary::build(rx_geom, 3).unwrap();
    let operator = build_sensing_operator(&tx, &rx, &tx_grid, &rx_grid, &cfg).unwrap();
    let measurements = SweepSignal::new(&channel, &tx, &rx, &cfg)
        .unwrap()
        .measure(10.0, 1.0, &mut r);
    Fixture {
        cfg,
        channel,
        tx,
        rx,
        tx_grid,
        rx_grid,
        operator,
        measurements,
    }
}

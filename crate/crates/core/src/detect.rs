//! Beam-pair detectors and ground truth.
//!
//! Beam indices always refer to DFT directions of the respective array: beam
//! `m` of an `n`-element array points at sin-angle `2m/n` (wrapped into
//! `[-1, 1)`).

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arrays::{grid_sin, GridDictionary};
use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::metrics;
use crate::sweep::{MeasurementSet, SensingOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BeamPair {
    pub tx: usize,
    pub rx: usize,
}

impl BeamPair {
    pub fn new(tx: usize, rx: usize) -> Self {
        Self { tx, rx }
    }
}

/// One selected dictionary column and its least-squares coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportAtom {
    pub index: usize,
    pub coefficient: Complex64,
}

/// Detector output next to the ground truth of the trial.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionOutcome {
    /// Estimated pairs, most confident first.
    pub estimated: Vec<BeamPair>,
    pub truth: Vec<BeamPair>,
    /// Recovered grid support (CS detectors only).
    pub support: Vec<SupportAtom>,
    /// Set when the least-squares step needed ridge regularization.
    pub regularized: bool,
}

impl DetectionOutcome {
    pub fn new(estimated: Vec<BeamPair>, truth: Vec<BeamPair>) -> Self {
        Self {
            estimated,
            truth,
            support: Vec::new(),
            regularized: false,
        }
    }

    pub fn all_match(&self) -> bool {
        metrics::all_beam_match(&self.estimated, &self.truth)
    }

    pub fn single_match(&self) -> bool {
        metrics::single_beam_match(&self.estimated, &self.truth)
    }
}

/// Circular distance between two sin-angles; `s` and `s + 2` describe the
/// same array response.
fn sin_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0);
    d.min(2.0 - d)
}

/// DFT beam closest to the direction with sine `sin`. Ties go to the lower
/// index.
pub fn nearest_beam(sin: f64, n_beams: usize) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for m in 0..n_beams {
        let d = sin_distance(grid_sin(m, n_beams), sin);
        if d < best_d {
            best = m;
            best_d = d;
        }
    }
    best
}

/// Ground-truth beam pairs: each ray's AoD and AoA quantized to the nearest
/// DFT beam, deduplicated and sorted.
pub fn true_pairs(ch: &ChannelRealization, n_tx_beams: usize, n_rx_beams: usize) -> Vec<BeamPair> {
    let mut pairs: Vec<BeamPair> = ch
        .paths
        .iter()
        .map(|p| {
            BeamPair::new(
                nearest_beam(p.aod.sin(), n_tx_beams),
                nearest_beam(p.aoa.sin(), n_rx_beams),
            )
        })
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

/// Received energy per (transmit beam, receive beam), summed over pilot
/// subcarriers. Receive beam `j * n_rf + r` is chain `r` of combiner `j`.
pub fn beam_energies(meas: &MeasurementSet) -> DMatrix<f64> {
    let e = &meas.per_block_energy;
    DMatrix::from_fn(e.m_bs, e.m_ue * e.n_rf, |tx, rx| {
        let (j, r) = (rx / e.n_rf, rx % e.n_rf);
        (0..e.n_rs).map(|k| e.get(tx, j, r, k)).sum()
    })
}

/// Exhaustive search: the `n_pairs` strongest (transmit, receive) beam pairs
/// by measured energy. Requires single-beam transmit entries and combiners
/// that enumerate distinct receive beams.
pub fn exhaustive_search(meas: &MeasurementSet, n_pairs: usize) -> Result<Vec<BeamPair>> {
    let energy = beam_energies(meas);
    let total = energy.len();
    if n_pairs == 0 || n_pairs > total {
        return Err(Error::param(format!(
            "cannot report {n_pairs} pairs out of {total} beam pairs"
        )));
    }
    let mut pairs: Vec<(f64, BeamPair)> = (0..energy.nrows())
        .flat_map(|tx| (0..energy.ncols()).map(move |rx| (tx, rx)))
        .map(|(tx, rx)| (energy[(tx, rx)], BeamPair::new(tx, rx)))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(pairs.into_iter().take(n_pairs).map(|(_, p)| p).collect())
}

/// Linear map with cheap column access, as needed by OMP.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn apply(&self, h: &DVector<Complex64>) -> DVector<Complex64>;
    fn adjoint(&self, r: &DVector<Complex64>) -> DVector<Complex64>;
    fn column(&self, g: usize) -> DVector<Complex64>;
    fn column_norm(&self, g: usize) -> f64;
}

impl LinearOperator for SensingOperator {
    fn nrows(&self) -> usize {
        SensingOperator::nrows(self)
    }

    fn ncols(&self) -> usize {
        SensingOperator::ncols(self)
    }

    fn apply(&self, h: &DVector<Complex64>) -> DVector<Complex64> {
        SensingOperator::apply(self, h)
    }

    fn adjoint(&self, r: &DVector<Complex64>) -> DVector<Complex64> {
        SensingOperator::adjoint(self, r)
    }

    fn column(&self, g: usize) -> DVector<Complex64> {
        SensingOperator::column(self, g)
    }

    fn column_norm(&self, g: usize) -> f64 {
        SensingOperator::column_norm(self, g)
    }
}

/// A plain dense matrix as an operator.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    matrix: DMatrix<Complex64>,
    norms: Vec<f64>,
}

impl DenseOperator {
    pub fn new(matrix: DMatrix<Complex64>) -> Self {
        let norms = matrix.column_iter().map(|c| c.norm()).collect();
        Self { matrix, norms }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }
}

impl LinearOperator for DenseOperator {
    fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    fn apply(&self, h: &DVector<Complex64>) -> DVector<Complex64> {
        &self.matrix * h
    }

    fn adjoint(&self, r: &DVector<Complex64>) -> DVector<Complex64> {
        self.matrix.ad_mul(r)
    }

    fn column(&self, g: usize) -> DVector<Complex64> {
        self.matrix.column(g).into_owned()
    }

    fn column_norm(&self, g: usize) -> f64 {
        self.norms[g]
    }
}

#[derive(Debug, Clone)]
pub struct OmpResult {
    /// Selected atoms in selection order, with final coefficients.
    pub support: Vec<SupportAtom>,
    /// Residual norm before the first and after every iteration.
    pub residual_norms: Vec<f64>,
    pub residual: DVector<Complex64>,
    pub regularized: bool,
}

/// Solves the normal equations of `columns * c = y`, falling back to a small
/// ridge when the Gram matrix is not numerically positive definite.
fn least_squares(
    columns: &DMatrix<Complex64>,
    y: &DVector<Complex64>,
) -> (DVector<Complex64>, bool) {
    let gram = columns.ad_mul(columns);
    let rhs = columns.ad_mul(y);
    if let Some(chol) = gram.clone().cholesky() {
        let c = chol.solve(&rhs);
        if c.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return (c, false);
        }
    }
    let largest = columns
        .column_iter()
        .map(|c| c.norm_squared())
        .fold(0.0, f64::max);
    let ridge = 1e-12 * largest.max(f64::MIN_POSITIVE);
    let mut reg = gram;
    for i in 0..reg.nrows() {
        reg[(i, i)] += Complex64::from(ridge);
    }
    let c = match reg.clone().cholesky() {
        Some(chol) => chol.solve(&rhs),
        None => reg
            .lu()
            .solve(&rhs)
            .unwrap_or_else(|| DVector::zeros(rhs.len())),
    };
    (c, true)
}

/// Orthogonal matching pursuit with a fixed sparsity budget.
///
/// Each iteration picks the column with the largest normalized correlation
/// `|a_g^H r| / |a_g|` (ties to the lower index), re-fits all selected
/// columns by least squares and updates the residual. Iteration stops early
/// once the residual vanishes.
pub fn omp<O: LinearOperator + ?Sized>(
    op: &O,
    y: &DVector<Complex64>,
    sparsity: usize,
) -> Result<OmpResult> {
    if y.len() != op.nrows() {
        return Err(Error::dims(format!(
            "measurement length {} vs operator rows {}",
            y.len(),
            op.nrows()
        )));
    }
    if sparsity == 0 || sparsity > op.nrows() || sparsity > op.ncols() {
        return Err(Error::param(format!(
            "sparsity {sparsity} outside 1..={}",
            op.nrows().min(op.ncols())
        )));
    }
    let y_norm = y.norm();
    let mut residual = y.clone();
    let mut residual_norms = vec![y_norm];
    let mut selected: Vec<usize> = Vec::with_capacity(sparsity);
    let mut columns = DMatrix::<Complex64>::zeros(op.nrows(), 0);
    let mut coeffs = DVector::<Complex64>::zeros(0);
    let mut regularized = false;

    for _ in 0..sparsity {
        if *residual_norms.last().unwrap() <= 1e-13 * y_norm {
            break;
        }
        let corr = op.adjoint(&residual);
        let mut best: Option<(usize, f64)> = None;
        for (g, c) in corr.iter().enumerate() {
            let norm = op.column_norm(g);
            if norm == 0.0 || selected.contains(&g) {
                continue;
            }
            let score = c.norm() / norm;
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((g, score));
            }
        }
        let Some((g, _)) = best else { break };
        selected.push(g);
        let n = columns.ncols();
        columns = columns.insert_column(n, Complex64::default());
        columns.set_column(n, &op.column(g));
        let (c, reg) = least_squares(&columns, y);
        regularized |= reg;
        residual = y - &columns * &c;
        coeffs = c;
        residual_norms.push(residual.norm());
    }

    let support = selected
        .iter()
        .zip(coeffs.iter())
        .map(|(&index, &coefficient)| SupportAtom { index, coefficient })
        .collect();
    Ok(OmpResult {
        support,
        residual_norms,
        residual,
        regularized,
    })
}

/// Beam pair of grid column `g` in a `conj(A_bs) (x) A_ue` dictionary.
pub fn grid_index_to_pair(
    g: usize,
    tx_grid: &GridDictionary,
    rx_grid: &GridDictionary,
    n_tx_beams: usize,
    n_rx_beams: usize,
) -> BeamPair {
    let g_rx = rx_grid.n_bins();
    BeamPair::new(
        tx_grid.bin_to_beam(g / g_rx, n_tx_beams),
        rx_grid.bin_to_beam(g % g_rx, n_rx_beams),
    )
}

/// Output of [`cs_detect`].
#[derive(Debug, Clone)]
pub struct CsDetection {
    pub pairs: Vec<BeamPair>,
    pub omp: OmpResult,
}

/// Beam detection by sparse recovery.
///
/// Runs OMP on the stacked measurements, maps recovered grid bins to the
/// nearest DFT beams, and reports `n_pairs` distinct pairs ordered by
/// coefficient magnitude. When the support yields fewer distinct pairs, the
/// list is padded with the next best-correlated grid columns of the final
/// residual.
#[allow(clippy::too_many_arguments)]
pub fn cs_detect(
    op: &SensingOperator,
    y: &DVector<Complex64>,
    sparsity: usize,
    tx_grid: &GridDictionary,
    rx_grid: &GridDictionary,
    n_tx_beams: usize,
    n_rx_beams: usize,
    n_pairs: usize,
) -> Result<CsDetection> {
    if op.g_tx() != tx_grid.n_bins() || op.g_rx() != rx_grid.n_bins() {
        return Err(Error::dims("operator was built for different grids"));
    }
    if n_pairs == 0 || n_pairs > n_tx_beams * n_rx_beams {
        return Err(Error::param(format!("cannot report {n_pairs} beam pairs")));
    }
    let result = omp(op, y, sparsity)?;
    let to_pair = |g| grid_index_to_pair(g, tx_grid, rx_grid, n_tx_beams, n_rx_beams);

    let mut atoms = result.support.clone();
    atoms.sort_by(|a, b| {
        b.coefficient
            .norm()
            .total_cmp(&a.coefficient.norm())
            .then(a.index.cmp(&b.index))
    });
    let mut seen = HashSet::new();
    let mut pairs: Vec<BeamPair> = atoms
        .iter()
        .map(|a| to_pair(a.index))
        .filter(|p| seen.insert(*p))
        .collect();
    pairs.truncate(n_pairs);

    if pairs.len() < n_pairs {
        let corr = LinearOperator::adjoint(op, &result.residual);
        let mut order: Vec<(f64, usize)> = corr
            .iter()
            .enumerate()
            .filter(|&(g, _)| op.column_norm(g) > 0.0)
            .map(|(g, c)| (c.norm() / op.column_norm(g), g))
            .collect();
        order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for (_, g) in order {
            let p = to_pair(g);
            if seen.insert(p) {
                pairs.push(p);
                if pairs.len() == n_pairs {
                    break;
                }
            }
        }
    }
    Ok(CsDetection { pairs, omp: result })
}

/// Signed circular difference `a - b` modulo `n`, in `(-n/2, n/2]`.
pub fn circular_diff(a: usize, b: usize, n: usize) -> i64 {
    let n = n as i64;
    let d = (a as i64 - b as i64).rem_euclid(n);
    if 2 * d > n {
        d - n
    } else {
        d
    }
}

/// Beam-index errors of an estimate. For every true pair, the estimated pair
/// with the smallest circular L1 index distance is selected (ties to the
/// earlier estimate) and its signed transmit and receive index offsets are
/// recorded.
pub fn beam_errors(
    estimated: &[BeamPair],
    truth: &[BeamPair],
    n_tx_beams: usize,
    n_rx_beams: usize,
) -> (Vec<i64>, Vec<i64>) {
    let mut tx_err = Vec::with_capacity(truth.len());
    let mut rx_err = Vec::with_capacity(truth.len());
    for t in truth {
        let nearest = estimated
            .iter()
            .map(|e| {
                let dt = circular_diff(e.tx, t.tx, n_tx_beams);
                let dr = circular_diff(e.rx, t.rx, n_rx_beams);
                (dt.abs() + dr.abs(), dt, dr)
            })
            .min_by_key(|&(d, _, _)| d);
        if let Some((_, dt, dr)) = nearest {
            tx_err.push(dt);
            rx_err.push(dr);
        }
    }
    (tx_err, rx_err)
}

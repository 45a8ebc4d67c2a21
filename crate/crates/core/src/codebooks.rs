//! Phase-shifter constrained RF codebooks.
//!
//! Every codebook entry is an `n_ant x n_cols` matrix whose elements have
//! modulus `1/sqrt(n_ant)` and a phase from the `b`-bit set
//! `{2*pi*n / 2^b}`. Phases are stored as integer indices into that set, so
//! grid membership holds exactly and serialization is lossless.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::arrays::GridDictionary;
use crate::error::{Error, Result};
use crate::sweep::{effective_tx_factor, transmit_vectors};

/// Largest supported phase resolution. High resolutions stand in for
/// unquantized phases in tests.
pub const MAX_PHASE_BITS: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CodebookKind {
    Dft,
    Random,
    MultiBeamDft,
    Designed,
}

impl CodebookKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CodebookKind::Dft => "DFT",
            CodebookKind::Random => "Random",
            CodebookKind::MultiBeamDft => "MultiBeamDFT",
            CodebookKind::Designed => "Designed",
        }
    }
}

impl fmt::Display for CodebookKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CodebookKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "DFT" => Ok(CodebookKind::Dft),
            "Random" => Ok(CodebookKind::Random),
            "MultiBeamDFT" => Ok(CodebookKind::MultiBeamDft),
            "Designed" => Ok(CodebookKind::Designed),
            other => Err(Error::param(format!("unknown codebook kind '{other}'"))),
        }
    }
}

/// A sequence of constant-modulus, phase-quantized beamforming matrices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codebook {
    n_ant: usize,
    n_cols: usize,
    phase_bits: u32,
    kind: CodebookKind,
    /// Phase indices, laid out entry-major, then column, then antenna.
    phases: Vec<u32>,
}

fn check_bits(phase_bits: u32) -> Result<()> {
    if phase_bits == 0 || phase_bits > MAX_PHASE_BITS {
        return Err(Error::param(format!(
            "phase_bits must be in 1..={MAX_PHASE_BITS}, got {phase_bits}"
        )));
    }
    Ok(())
}

impl Codebook {
    /// Assembles a codebook from raw phase indices.
    pub fn from_phases(
        n_ant: usize,
        n_cols: usize,
        phase_bits: u32,
        kind: CodebookKind,
        phases: Vec<u32>,
    ) -> Result<Self> {
        check_bits(phase_bits)?;
        if n_ant == 0 || n_cols == 0 {
            return Err(Error::param("codebook dimensions must be positive"));
        }
        if phases.is_empty() || !phases.len().is_multiple_of(n_ant * n_cols) {
            return Err(Error::dims(format!(
                "{} phase indices do not form whole {n_ant}x{n_cols} entries",
                phases.len()
            )));
        }
        let levels = 1u64 << phase_bits;
        if phases.iter().any(|&p| u64::from(p) >= levels) {
            return Err(Error::param("phase index outside the phase set"));
        }
        Ok(Self {
            n_ant,
            n_cols,
            phase_bits,
            kind,
            phases,
        })
    }

    pub fn n_ant(&self) -> usize {
        self.n_ant
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn phase_bits(&self) -> u32 {
        self.phase_bits
    }

    pub fn kind(&self) -> CodebookKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.phases.len() / (self.n_ant * self.n_cols)
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn phase_indices(&self) -> &[u32] {
        &self.phases
    }

    pub fn column_phases(&self, entry: usize, col: usize) -> &[u32] {
        let start = (entry * self.n_cols + col) * self.n_ant;
        &self.phases[start..start + self.n_ant]
    }

    pub fn amplitude(&self) -> f64 {
        1.0 / (self.n_ant as f64).sqrt()
    }

    fn element(&self, index: u32) -> Complex64 {
        phase_element(index, self.phase_bits, self.amplitude())
    }

    pub fn column(&self, entry: usize, col: usize) -> DVector<Complex64> {
        DVector::from_iterator(
            self.n_ant,
            self.column_phases(entry, col)
                .iter()
                .map(|&p| self.element(p)),
        )
    }

    pub fn entry(&self, entry: usize) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.n_ant, self.n_cols, |n, c| {
            self.element(self.column_phases(entry, c)[n])
        })
    }

    /// Regroups a single-column codebook into entries of `n_cols` consecutive
    /// columns, e.g. to spread receive beams over the UE RF chains.
    pub fn group_columns(&self, n_cols: usize) -> Result<Self> {
        if self.n_cols != 1 {
            return Err(Error::param(
                "only single-column codebooks can be regrouped",
            ));
        }
        if n_cols == 0 || !self.len().is_multiple_of(n_cols) {
            return Err(Error::param(format!(
                "{} beams cannot be split into entries of {n_cols} columns",
                self.len()
            )));
        }
        Ok(Self {
            n_cols,
            ..self.clone()
        })
    }

    /// Serializes to the text format: a header line
    /// `n_ant n_entries n_cols phase_bits kind` followed by one line of phase
    /// indices per entry column.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{} {} {} {} {}\n",
            self.n_ant,
            self.len(),
            self.n_cols,
            self.phase_bits,
            self.kind
        );
        for col in self.phases.chunks(self.n_ant) {
            let line: Vec<String> = col.iter().map(u32::to_string).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "empty codebook file".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::Parse {
                line: 1,
                message: "header must be 'n_ant n_entries n_cols phase_bits kind'".into(),
            });
        }
        let num = |s: &str| {
            s.parse::<usize>().map_err(|e| Error::Parse {
                line: 1,
                message: format!("'{s}': {e}"),
            })
        };
        let (n_ant, n_entries, n_cols) = (num(fields[0])?, num(fields[1])?, num(fields[2])?);
        let bits = num(fields[3])? as u32;
        let kind: CodebookKind = fields[4].parse()?;
        let mut phases = Vec::with_capacity(n_ant * n_cols * n_entries);
        let mut n_lines = 0;
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let before = phases.len();
            for tok in line.split_whitespace() {
                phases.push(tok.parse::<u32>().map_err(|e| Error::Parse {
                    line: i + 1,
                    message: format!("'{tok}': {e}"),
                })?);
            }
            if phases.len() - before != n_ant {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected {n_ant} phase indices"),
                });
            }
            n_lines += 1;
        }
        if n_lines != n_entries * n_cols {
            return Err(Error::Parse {
                line: n_lines + 1,
                message: format!(
                    "expected {} column lines, found {n_lines}",
                    n_entries * n_cols
                ),
            });
        }
        Self::from_phases(n_ant, n_cols, bits, kind, phases)
    }
}

/// `amplitude * exp(j * 2*pi * index / 2^bits)`.
pub fn phase_element(index: u32, bits: u32, amplitude: f64) -> Complex64 {
    let turns = f64::from(index) / (1u64 << bits) as f64;
    Complex64::from_polar(amplitude, 2.0 * PI * turns)
}

/// Nearest phase index to `phase` (radians); exact ties go to the smaller
/// phase.
pub fn quantize_phase(phase: f64, bits: u32) -> u32 {
    let levels = (1u64 << bits) as f64;
    let t = phase.rem_euclid(2.0 * PI) / (2.0 * PI) * levels;
    let idx = (t - 0.5).ceil() as u64;
    (idx % (1u64 << bits)) as u32
}

/// Phase index of a complex value; zero maps to index 0.
pub fn quantize_value(z: Complex64, bits: u32) -> u32 {
    if z.norm_sqr() == 0.0 {
        0
    } else {
        quantize_phase(z.arg(), bits)
    }
}

/// Projects every element of `matrix` onto the phase-shifter set: modulus
/// `1/sqrt(rows)` and the nearest `bits`-bit phase. Input moduli are
/// discarded.
pub fn quantize_phases(matrix: &DMatrix<Complex64>, bits: u32) -> Result<DMatrix<Complex64>> {
    check_bits(bits)?;
    let amp = 1.0 / (matrix.nrows() as f64).sqrt();
    Ok(matrix.map(|z| phase_element(quantize_value(z, bits), bits, amp)))
}

/// Index of `2*pi*num/den` on the `bits`-bit grid, rounded to nearest with
/// ties to the smaller phase, computed in integer arithmetic.
fn rational_phase_index(num: u64, den: u64, bits: u32) -> u32 {
    let levels = 1u64 << bits;
    // ceil((2*num*levels - den) / (2*den))
    let twice = 2 * (num % den) * levels;
    let idx = if twice < den {
        0
    } else {
        (twice - den).div_ceil(2 * den)
    };
    (idx % levels) as u32
}

/// Single-beam DFT codebook: entry `m` is DFT beam `m` of an `n_ant`
/// element array.
pub fn dft_codebook(n_ant: usize, n_beams: usize, phase_bits: u32) -> Result<Codebook> {
    check_bits(phase_bits)?;
    if n_beams == 0 || n_beams > n_ant {
        return Err(Error::param(format!(
            "DFT codebook needs 1 <= n_beams <= n_ant ({n_beams} > {n_ant})"
        )));
    }
    let n = n_ant as u64;
    let mut phases = Vec::with_capacity(n_beams * n_ant);
    for m in 0..n_beams as u64 {
        for i in 0..n {
            phases.push(rational_phase_index(i * m % n, n, phase_bits));
        }
    }
    Codebook::from_phases(n_ant, 1, phase_bits, CodebookKind::Dft, phases)
}

/// Codebook with independently uniform phases.
pub fn random_codebook<R: Rng + ?Sized>(
    n_ant: usize,
    n_entries: usize,
    n_cols: usize,
    phase_bits: u32,
    rng: &mut R,
) -> Result<Codebook> {
    check_bits(phase_bits)?;
    if n_entries == 0 {
        return Err(Error::param("codebook needs at least one entry"));
    }
    let levels = 1u32 << phase_bits;
    let phases = (0..n_ant * n_cols * n_entries)
        .map(|_| rng.random_range(0..levels))
        .collect();
    Codebook::from_phases(n_ant, n_cols, phase_bits, CodebookKind::Random, phases)
}

fn beams_per_entry(n_ant: usize, n_entries: usize) -> Result<usize> {
    if n_entries == 0 || n_ant < n_entries || !n_ant.is_multiple_of(n_entries) {
        return Err(Error::param(format!(
            "n_ant ({n_ant}) must be a multiple of the entry count ({n_entries})"
        )));
    }
    Ok(n_ant / n_entries)
}

/// Phase-only combination of DFT beams `entry, entry + n_entries, ...`, each
/// rotated by its phase index from `rotations`.
fn combine_beams(
    n_ant: usize,
    n_entries: usize,
    entry: usize,
    rotations: &[u32],
    bits: u32,
) -> Vec<u32> {
    let n = n_ant as u64;
    let tol = 1e-9 * rotations.len() as f64;
    (0..n)
        .map(|i| {
            let sum: Complex64 = rotations
                .iter()
                .enumerate()
                .map(|(b, &rot)| {
                    let beam = (entry + b * n_entries) as u64;
                    let turns = (i * beam % n) as f64 / n as f64;
                    phase_element(rot, bits, 1.0) * Complex64::from_polar(1.0, 2.0 * PI * turns)
                })
                .sum();
            if sum.norm() < tol {
                0
            } else {
                quantize_phase(sum.arg(), bits)
            }
        })
        .collect()
}

/// Blind multi-beam DFT codebook: entry `m` radiates the `n_ant / n_entries`
/// DFT beams `m, m + n_entries, ...` at once, so `n_entries` SSBs cover all
/// `n_ant` directions.
pub fn multi_beam_dft_codebook(
    n_ant: usize,
    n_entries: usize,
    phase_bits: u32,
) -> Result<Codebook> {
    check_bits(phase_bits)?;
    let per_entry = beams_per_entry(n_ant, n_entries)?;
    let rotations = vec![0u32; per_entry];
    let phases = (0..n_entries)
        .flat_map(|m| combine_beams(n_ant, n_entries, m, &rotations, phase_bits))
        .collect();
    Codebook::from_phases(n_ant, 1, phase_bits, CodebookKind::MultiBeamDft, phases)
}

/// Constituent DFT beam indices of a multi-beam entry.
pub fn multi_beam_members(n_ant: usize, n_entries: usize, entry: usize) -> Vec<usize> {
    (0..n_ant / n_entries)
        .map(|b| entry + b * n_entries)
        .collect()
}

/// Total coherence of a transmit codebook's effective dictionary
/// `X^T conj(A_grid)`: the sum over ordered column pairs `g != g'` of the
/// squared normalized inner products.
pub fn total_coherence(codebook: &Codebook, grid: &GridDictionary) -> Result<f64> {
    let x = transmit_vectors(codebook);
    Ok(CoherenceState::new(effective_tx_factor(&x, grid)?).total())
}

/// Gram-matrix bookkeeping for rank-one row updates of the effective
/// dictionary.
struct CoherenceState {
    rows: DMatrix<Complex64>,
    gram: Vec<Complex64>,
    norms: Vec<f64>,
    total: f64,
}

const ZERO_NORM: f64 = 1e-24;

fn inverse(d: f64) -> f64 {
    if d > ZERO_NORM {
        1.0 / d
    } else {
        0.0
    }
}

impl CoherenceState {
    fn new(rows: DMatrix<Complex64>) -> Self {
        let mut state = Self {
            rows,
            gram: Vec::new(),
            norms: Vec::new(),
            total: 0.0,
        };
        state.refresh();
        state
    }

    fn bins(&self) -> usize {
        self.rows.ncols()
    }

    /// Recomputes the Gram matrix from scratch, discarding accumulated
    /// rounding from incremental updates.
    fn refresh(&mut self) {
        let p = self.rows.adjoint() * &self.rows;
        let g = self.bins();
        self.gram = (0..g * g).map(|i| p[(i / g, i % g)]).collect();
        self.norms = (0..g).map(|i| p[(i, i)].re).collect();
        self.total = self.evaluate(None);
    }

    fn total(&self) -> f64 {
        self.total
    }

    /// Total coherence, optionally with row `m` replaced by `new_row`.
    fn evaluate(&self, change: Option<(usize, &[Complex64])>) -> f64 {
        let g = self.bins();
        let (old, new): (Vec<Complex64>, Vec<Complex64>) = match change {
            Some((m, row)) => (self.rows.row(m).iter().copied().collect(), row.to_vec()),
            None => (vec![Complex64::default(); g], vec![Complex64::default(); g]),
        };
        let inv: Vec<f64> = (0..g)
            .map(|i| inverse(self.norms[i] - old[i].norm_sqr() + new[i].norm_sqr()))
            .collect();
        let mut acc = 0.0;
        for i in 0..g {
            if inv[i] == 0.0 {
                continue;
            }
            let a = new[i].conj();
            let b = old[i].conj();
            let row = &self.gram[i * g..(i + 1) * g];
            let mut part = 0.0;
            for j in i + 1..g {
                let p = row[j] + a * new[j] - b * old[j];
                part += p.norm_sqr() * inv[j];
            }
            acc += part * inv[i];
        }
        2.0 * acc
    }

    fn commit(&mut self, m: usize, new_row: &[Complex64], total: f64) {
        let g = self.bins();
        let old: Vec<Complex64> = self.rows.row(m).iter().copied().collect();
        for i in 0..g {
            let a = new_row[i].conj();
            let b = old[i].conj();
            for j in 0..g {
                self.gram[i * g + j] += a * new_row[j] - b * old[j];
            }
            self.norms[i] = self.gram[i * g + i].re;
        }
        for (j, z) in new_row.iter().enumerate() {
            self.rows[(m, j)] = *z;
        }
        self.total = total;
    }
}

/// Coherence-reducing codebook built on top of the blind multi-beam DFT
/// codebook.
///
/// Each entry combines the same DFT beams as [`multi_beam_dft_codebook`],
/// but every constituent beam after the first carries a phase rotation from
/// the phase-shifter set. Greedy coordinate descent runs `sweeps` passes
/// over all (entry, beam) rotations; each visit proposes one uniformly drawn
/// alternative rotation and keeps it only if the total coherence against
/// `grid` strictly decreases. The result never has higher total coherence
/// than the multi-beam starting point.
pub fn designed_codebook<R: Rng + ?Sized>(
    n_ant: usize,
    n_entries: usize,
    grid: &GridDictionary,
    phase_bits: u32,
    sweeps: usize,
    rng: &mut R,
) -> Result<Codebook> {
    let start = multi_beam_dft_codebook(n_ant, n_entries, phase_bits)?;
    if grid.geometry().n_ant() != n_ant {
        return Err(Error::dims(format!(
            "grid has {} elements, codebook {n_ant}",
            grid.geometry().n_ant()
        )));
    }
    let per_entry = n_ant / n_entries;
    let levels = 1u32 << phase_bits;
    let mut rotations = vec![vec![0u32; per_entry]; n_entries];
    let mut phases = start.phases.clone();
    let mut state = CoherenceState::new(effective_tx_factor(&transmit_vectors(&start), grid)?);
    let conj_atoms = grid.atoms().conjugate();

    if per_entry > 1 {
        for _ in 0..sweeps {
            for m in 0..n_entries {
                for b in 1..per_entry {
                    let mut proposal = rng.random_range(0..levels - 1);
                    if proposal >= rotations[m][b] {
                        proposal += 1;
                    }
                    let mut trial = rotations[m].clone();
                    trial[b] = proposal;
                    let column = combine_beams(n_ant, n_entries, m, &trial, phase_bits);
                    let x = DVector::from_iterator(
                        n_ant,
                        column
                            .iter()
                            .map(|&p| phase_element(p, phase_bits, start.amplitude())),
                    );
                    let row: Vec<Complex64> =
                        (x.transpose() * &conj_atoms).iter().copied().collect();
                    let candidate = state.evaluate(Some((m, &row)));
                    if candidate < state.total() * (1.0 - 1e-12) {
                        state.commit(m, &row, candidate);
                        rotations[m] = trial;
                        phases[m * n_ant..(m + 1) * n_ant].copy_from_slice(&column);
                    }
                }
            }
            state.refresh();
        }
    }
    Codebook::from_phases(n_ant, 1, phase_bits, CodebookKind::Designed, phases)
}

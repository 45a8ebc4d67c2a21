//! Detection probabilities and beam-index error statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::detect::BeamPair;
use crate::error::{Error, Result};

/// Detection method under evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Es,
    OmpRandom,
    OmpDft,
    OmpMultiBeam,
    OmpDesigned,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Es,
        Method::OmpRandom,
        Method::OmpDft,
        Method::OmpMultiBeam,
        Method::OmpDesigned,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Es => "ES",
            Method::OmpRandom => "OMP-Random",
            Method::OmpDft => "OMP-DFT",
            Method::OmpMultiBeam => "OMP-MultiBeam",
            Method::OmpDesigned => "OMP-Designed",
        }
    }

    /// Stable numeric id, used for seeding.
    pub fn id(&self) -> u64 {
        match self {
            Method::Es => 0,
            Method::OmpRandom => 1,
            Method::OmpDft => 2,
            Method::OmpMultiBeam => 3,
            Method::OmpDesigned => 4,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::param(format!("unknown method '{}'", s.trim())))
    }
}

/// Outcome of one (trial, SNR, method) evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub snr_db: f64,
    pub method: Method,
    pub all_match: bool,
    pub single_match: bool,
    pub tx_errors: Vec<i64>,
    pub rx_errors: Vec<i64>,
}

/// True iff the estimated and true pair sets are equal.
pub fn all_beam_match(estimated: &[BeamPair], truth: &[BeamPair]) -> bool {
    let a: BTreeSet<_> = estimated.iter().collect();
    let b: BTreeSet<_> = truth.iter().collect();
    a == b
}

/// True iff at least one estimated pair is a true pair.
pub fn single_beam_match(estimated: &[BeamPair], truth: &[BeamPair]) -> bool {
    estimated.iter().any(|p| truth.contains(p))
}

/// Binomial proportion with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proportion {
    pub successes: usize,
    pub trials: usize,
}

impl Proportion {
    pub fn p(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }

    /// `sqrt(p (1 - p) / n)`.
    pub fn se(&self) -> f64 {
        let p = self.p();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Running mean of Bernoulli outcomes, updated one sample at a time.
#[derive(Debug, Clone, Copy, Default)]
pub struct StreamingProportion {
    n: usize,
    mean: f64,
}

impl StreamingProportion {
    pub fn push(&mut self, outcome: bool) {
        self.n += 1;
        let x = if outcome { 1.0 } else { 0.0 };
        self.mean += (x - self.mean) / self.n as f64;
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn se(&self) -> f64 {
        (self.mean * (1.0 - self.mean) / self.n as f64).sqrt()
    }
}

/// Per (SNR, method) aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub snr_db: f64,
    pub method: Method,
    pub all: Proportion,
    pub single: Proportion,
}

impl GroupSummary {
    pub fn n_trials(&self) -> usize {
        self.all.trials
    }
}

/// Groups records by (SNR, method), in order of first appearance, and
/// computes all- and single-beam detection probabilities.
pub fn detection_probability(records: &[TrialRecord]) -> Result<Vec<GroupSummary>> {
    if records.is_empty() {
        return Err(Error::param("no trial records to aggregate"));
    }
    let mut groups: Vec<GroupSummary> = Vec::new();
    let mut index: BTreeMap<(u64, Method), usize> = BTreeMap::new();
    for r in records {
        let key = (r.snr_db.to_bits(), r.method);
        let i = *index.entry(key).or_insert_with(|| {
            groups.push(GroupSummary {
                snr_db: r.snr_db,
                method: r.method,
                all: Proportion {
                    successes: 0,
                    trials: 0,
                },
                single: Proportion {
                    successes: 0,
                    trials: 0,
                },
            });
            groups.len() - 1
        });
        let g = &mut groups[i];
        g.all.trials += 1;
        g.single.trials += 1;
        g.all.successes += usize::from(r.all_match);
        g.single.successes += usize::from(r.single_match);
    }
    Ok(groups)
}

/// Occurrence count of every error value.
pub fn error_histogram(errors: &[i64]) -> BTreeMap<i64, usize> {
    let mut hist = BTreeMap::new();
    for &e in errors {
        *hist.entry(e).or_insert(0) += 1;
    }
    hist
}

/// Empirical CDF as (value, fraction of samples <= value) at every distinct
/// value.
pub fn error_cdf(errors: &[i64]) -> Result<Vec<(i64, f64)>> {
    if errors.is_empty() {
        return Err(Error::param("empirical CDF of an empty sample"));
    }
    let n = errors.len();
    let mut acc = 0;
    Ok(error_histogram(errors)
        .into_iter()
        .map(|(v, c)| {
            acc += c;
            let frac = if acc == n { 1.0 } else { acc as f64 / n as f64 };
            (v, frac)
        })
        .collect())
}

/// Empirical CDF evaluated at `x`.
pub fn cdf_at(errors: &[i64], x: i64) -> f64 {
    if errors.is_empty() {
        return 0.0;
    }
    errors.iter().filter(|&&e| e <= x).count() as f64 / errors.len() as f64
}

//! Growing-population experiments: add FIHC-optimized individuals until the
//! DSM first decomposes perfectly, over many seeded repeats, and compare the
//! 90th percentile with the analytical population size.

use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fihc::sample_optimized;
use crate::functions::{resolve_function, ConcatenatedProblem};
use crate::rng::RngSeed;
use crate::stats::{contiguous_blocks, is_perfect_from_counts, Criterion, PairCounts};
use crate::theory::{estimate_for_function, EstimateResult};

pub const CONFIG_VERSION: u32 = 1;

fn default_version() -> u32 {
    CONFIG_VERSION
}
fn default_repeats() -> usize {
    100
}
fn default_alpha() -> f64 {
    0.1
}
fn default_initial() -> u64 {
    2
}
fn default_increment() -> u64 {
    1
}
fn default_cap() -> u64 {
    50_000_000
}

/// Growth-experiment settings, read from versioned JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    /// Built-in family or compact name such as `ridge12_4`.
    pub function: String,
    #[serde(default)]
    pub k: Option<usize>,
    pub r: usize,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    /// Tolerated failure probability handed to the estimate.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_initial")]
    pub initial_size: u64,
    #[serde(default = "default_increment")]
    pub increment: u64,
    #[serde(default = "default_cap")]
    pub max_individuals: u64,
    #[serde(default)]
    pub max_seconds: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub criterion: Criterion,
}

impl ExperimentConfig {
    pub fn new(function: impl Into<String>, k: Option<usize>, r: usize) -> Self {
        Self {
            version: CONFIG_VERSION,
            function: function.into(),
            k,
            r,
            repeats: default_repeats(),
            alpha: default_alpha(),
            initial_size: default_initial(),
            increment: default_increment(),
            max_individuals: default_cap(),
            max_seconds: None,
            seed: 0,
            criterion: Criterion::PerGene,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Parameter(msg));
        if self.version != CONFIG_VERSION {
            return bad(format!("unsupported config version {} (expected {CONFIG_VERSION})", self.version));
        }
        if self.repeats < 1 {
            return bad("repeats must be at least 1".into());
        }
        if self.increment < 1 {
            return bad("increment must be at least 1".into());
        }
        if self.initial_size < 2 {
            return bad("initial_size must be at least 2".into());
        }
        if self.max_individuals < 1 {
            return bad("max_individuals must be positive".into());
        }
        if let Some(t) = self.max_seconds {
            if !(t > 0.0) {
                return bad("max_seconds must be positive".into());
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        self.problem().map(|_| ())
    }

    pub fn problem(&self) -> Result<ConcatenatedProblem> {
        ConcatenatedProblem::new(resolve_function(&self.function, self.k)?, self.r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Censor {
    Individuals,
    Time,
}

/// Outcome of one repeat: the population size at the first perfect
/// decomposition, or the reason it was never reached.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepeatOutcome {
    pub repeat: usize,
    pub final_size: Option<u64>,
    pub censored: Option<Censor>,
    /// Largest size examined.
    pub examined: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub p90: f64,
    pub mean: f64,
    pub min: u64,
    pub max: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub config: ExperimentConfig,
    pub k: usize,
    pub n: usize,
    pub outcomes: Vec<RepeatOutcome>,
    /// Over uncensored repeats only; absent when every repeat was censored.
    pub summary: Option<Summary>,
    pub censored: usize,
    pub estimate: Option<EstimateResult>,
    /// Why no estimate exists (asymmetric distribution, undecidable, ...).
    pub estimate_note: Option<String>,
    /// `s_min / p90`.
    pub ratio: Option<f64>,
    pub diagnostic: Option<String>,
}

impl ExperimentRecord {
    pub fn all_censored(&self) -> bool {
        self.censored == self.outcomes.len()
    }

    pub fn write_repeats_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["repeat", "final_size", "censored", "examined"])?;
        for o in &self.outcomes {
            w.write_record([
                o.repeat.to_string(),
                o.final_size.map_or(String::new(), |s| s.to_string()),
                match o.censored {
                    None => String::new(),
                    Some(Censor::Individuals) => "individuals".into(),
                    Some(Censor::Time) => "time".into(),
                },
                o.examined.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Linear-interpolation percentile: the value at fractional rank
/// `(m - 1) q` of the sorted samples.
pub fn percentile(samples: &[f64], q: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Parameter(format!("percentile level must lie in [0, 1], got {q}")));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let h = (xs.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(xs.len() - 1);
    Ok(xs[lo] + (h - lo as f64) * (xs[hi] - xs[lo]))
}

/// Runs every repeat in parallel; repeat `j` draws its individuals from
/// stream `j` of the master seed, so results do not depend on scheduling
/// unless a wall-clock cap fires.
pub fn run_growth_experiment(cfg: &ExperimentConfig) -> Result<ExperimentRecord> {
    cfg.validate()?;
    let problem = cfg.problem()?;
    let deadline = cfg.max_seconds.map(|t| Instant::now() + Duration::from_secs_f64(t));
    let outcomes: Vec<RepeatOutcome> = (0..cfg.repeats)
        .into_par_iter()
        .map(|j| grow(&problem, cfg, j, deadline))
        .collect();

    let sizes: Vec<f64> = outcomes.iter().filter_map(|o| o.final_size).map(|s| s as f64).collect();
    let censored = outcomes.len() - sizes.len();
    let summary = if sizes.is_empty() {
        None
    } else {
        let done: Vec<u64> = outcomes.iter().filter_map(|o| o.final_size).collect();
        Some(Summary {
            p90: percentile(&sizes, 0.9)?,
            mean: sizes.iter().sum::<f64>() / sizes.len() as f64,
            min: *done.iter().min().expect("nonempty"),
            max: *done.iter().max().expect("nonempty"),
        })
    };
    let (estimate, estimate_note) = match estimate_for_function(problem.g(), cfg.r, cfg.alpha) {
        Ok(e) => (Some(e), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let ratio = match (&estimate, &summary) {
        (Some(e), Some(s)) => Some(e.s_min as f64 / s.p90),
        _ => None,
    };
    let diagnostic = if summary.is_none() {
        Some(format!(
            "all {} repeats censored before a perfect decomposition (cap {} individuals)",
            outcomes.len(),
            cfg.max_individuals
        ))
    } else if censored > 0 {
        Some(format!("{censored} of {} repeats censored; summary covers the rest", outcomes.len()))
    } else {
        None
    };
    Ok(ExperimentRecord {
        config: cfg.clone(),
        k: problem.k(),
        n: problem.n(),
        outcomes,
        summary,
        censored,
        estimate,
        estimate_note,
        ratio,
        diagnostic,
    })
}

fn grow(problem: &ConcatenatedProblem, cfg: &ExperimentConfig, repeat: usize, deadline: Option<Instant>) -> RepeatOutcome {
    let seed = RngSeed::new(cfg.seed, repeat as u64);
    let n = problem.n();
    let blocks = contiguous_blocks(problem.k(), problem.r());
    let cap = cfg.max_individuals;
    let mut counts = PairCounts::new(n);
    let mut size = 0u64;
    let mut target = cfg.initial_size.min(cap);
    loop {
        // Members of the latest chunk, kept for refinement.
        let before = counts.clone();
        let start = size;
        let chunk: Vec<_> = (start..target).map(|i| sample_optimized(problem, seed, i)).collect();
        for x in &chunk {
            counts.add(x);
        }
        size = target;
        if is_perfect_from_counts(&counts, &blocks, cfg.criterion) {
            let final_size = if chunk.len() > 1 && start >= 2 {
                refine(before, &chunk, start, size, &blocks, cfg.criterion)
            } else {
                size
            };
            return RepeatOutcome { repeat, final_size: Some(final_size), censored: None, examined: size };
        }
        if size >= cap {
            return RepeatOutcome { repeat, final_size: None, censored: Some(Censor::Individuals), examined: size };
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return RepeatOutcome { repeat, final_size: None, censored: Some(Censor::Time), examined: size };
        }
        target = (size + cfg.increment).min(cap);
    }
}

/// Binary search over `(start, end]` for the smallest tested size at which
/// the decomposition is perfect; `end` is known to be perfect.
fn refine(
    base: PairCounts,
    chunk: &[crate::fihc::Individual],
    start: u64,
    end: u64,
    blocks: &[usize],
    criterion: Criterion,
) -> u64 {
    let (mut lo, mut hi) = (start, end);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let mut c = base.clone();
        for x in &chunk[..(mid - start) as usize] {
            c.add(x);
        }
        if is_perfect_from_counts(&c, blocks, criterion) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_examples() {
        let xs: Vec<f64> = (1..=100).map(f64::from).collect();
        assert!((percentile(&xs, 0.9).unwrap() - 90.1).abs() < 1e-12);
        assert_eq!(percentile(&[7.0; 5], 0.3).unwrap(), 7.0);
        for q in [0.0, 0.25, 0.9, 1.0] {
            assert_eq!(percentile(&[42.0], q).unwrap(), 42.0);
        }
        assert!(matches!(percentile(&[], 0.5), Err(Error::EmptyInput)));
        assert!(percentile(&[1.0], 1.5).is_err());
        assert_eq!(percentile(&[3.0, 1.0, 2.0], 0.5).unwrap(), 2.0);
    }

    #[test]
    fn config_parsing() {
        let cfg = ExperimentConfig::from_json(r#"{"function": "bimodal", "k": 6, "r": 2}"#).unwrap();
        assert_eq!(cfg.repeats, 100);
        assert_eq!(cfg.alpha, 0.1);
        assert_eq!(cfg.max_individuals, 50_000_000);
        assert_eq!(cfg.increment, 1);
        assert!(ExperimentConfig::from_json(r#"{"function": "bimodal", "k": 6, "r": 2, "bogus": 1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"function": "bimodal", "k": 6, "r": 2, "repeats": 0}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"function": "bimodal", "k": 6, "r": 2, "version": 9}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"function": "nope", "k": 6, "r": 2}"#).is_err());
        let round = ExperimentConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(round, cfg);
    }

    #[test]
    fn cap_forces_censoring() {
        let cfg = ExperimentConfig { repeats: 1, max_individuals: 10, ..ExperimentConfig::new("bimodal", Some(6), 2) };
        let rec = run_growth_experiment(&cfg).unwrap();
        assert!(rec.all_censored());
        assert!(rec.summary.is_none() && rec.ratio.is_none());
        assert!(rec.diagnostic.is_some());
        assert_eq!(rec.outcomes[0].examined, 10);
        assert_eq!(rec.estimate.as_ref().unwrap().s_min, 12351);
    }

    #[test]
    fn increments_refine_to_unit_growth() {
        let base = ExperimentConfig { repeats: 6, seed: 11, ..ExperimentConfig::new("reverted", Some(10), 2) };
        let unit = run_growth_experiment(&base).unwrap();
        let coarse = run_growth_experiment(&ExperimentConfig { increment: 16, ..base.clone() }).unwrap();
        for (a, b) in unit.outcomes.iter().zip(&coarse.outcomes) {
            let (fa, fb) = (a.final_size.unwrap(), b.final_size.unwrap());
            assert!(fb <= b.examined && fb + 16 > b.examined);
            // Coarse growth never tests a size below the unit-growth answer
            // without also testing it perfect there.
            assert!(fb >= fa);
        }
    }

    #[test]
    fn deterministic_and_summarized() {
        let cfg = ExperimentConfig { repeats: 8, seed: 3, ..ExperimentConfig::new("reverted", Some(10), 2) };
        let a = run_growth_experiment(&cfg).unwrap();
        let b = run_growth_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        let s = a.summary.as_ref().unwrap();
        assert!(s.min as f64 <= s.p90 && s.p90 <= s.max as f64);
        assert!(a.ratio.unwrap() > 1.0);
        let mut buf = Vec::new();
        a.write_repeats_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 9);
        assert!(text.starts_with("repeat,final_size,censored,examined\n"));
    }

    #[test]
    fn asymmetric_functions_have_no_estimate() {
        let cfg = ExperimentConfig { repeats: 2, max_individuals: 50, ..ExperimentConfig::new("trap", Some(4), 2) };
        let rec = run_growth_experiment(&cfg).unwrap();
        assert!(rec.estimate.is_none());
        assert!(rec.estimate_note.is_some());
    }
}

//! First Improvement Hill Climber and FIHC-optimized populations.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::{unitation, ConcatenatedProblem};
use crate::rng::RngSeed;

/// A binary solution. Serialized as a `0`/`1` string.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Individual {
    bits: Vec<bool>,
}

impl Individual {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self {
            bits: (0..n).map(|_| rng.random::<bool>()).collect(),
        }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn to_bitstring(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn parse(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Format(format!("unexpected character '{other}' in bitstring"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }
}

impl From<Individual> for String {
    fn from(x: Individual) -> Self {
        x.to_bitstring()
    }
}

impl TryFrom<String> for Individual {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        Self::parse(&s)
    }
}

impl From<Vec<bool>> for Individual {
    fn from(bits: Vec<bool>) -> Self {
        Self::new(bits)
    }
}

/// Outcome of one climb.
#[derive(Clone, Debug, PartialEq)]
pub struct ClimbResult {
    pub individual: Individual,
    /// Fitness evaluations charged: one for the start point plus one per
    /// attempted flip.
    pub evaluations: u64,
    pub sweeps: u32,
}

/// Climbs `x` with a gene order drawn uniformly from `rng`.
///
/// The order is drawn once and reused for every sweep. A flip is kept only
/// if it strictly improves fitness; sweeping stops after a sweep with no kept
/// flip.
pub fn fihc_optimize<R: Rng + ?Sized>(
    problem: &ConcatenatedProblem,
    x: &Individual,
    rng: &mut R,
) -> Result<Individual> {
    Ok(fihc_counted(problem, x, rng)?.individual)
}

pub fn fihc_counted<R: Rng + ?Sized>(
    problem: &ConcatenatedProblem,
    x: &Individual,
    rng: &mut R,
) -> Result<ClimbResult> {
    check_len(problem, x)?;
    let mut order: Vec<usize> = (0..problem.n()).collect();
    order.shuffle(rng);
    fihc_with_order(problem, x, &order)
}

/// Climbs `x` visiting genes in the given `order` (a permutation of `0..n`).
pub fn fihc_with_order(
    problem: &ConcatenatedProblem,
    x: &Individual,
    order: &[usize],
) -> Result<ClimbResult> {
    check_len(problem, x)?;
    let n = problem.n();
    if order.len() != n {
        return Err(Error::Dimension {
            expected: n,
            actual: order.len(),
        });
    }
    let g = problem.g();
    let k = problem.k();
    let mut bits = x.bits.clone();
    let mut units: Vec<usize> = bits.chunks_exact(k).map(unitation).collect();
    let mut evaluations = 1u64;
    let mut sweeps = 0u32;
    loop {
        sweeps += 1;
        let mut modified = false;
        for &gene in order {
            let block = gene / k;
            let u = units[block];
            let flipped = if bits[gene] { u - 1 } else { u + 1 };
            evaluations += 1;
            // Only the touched block's term changes.
            if g.eval(flipped) > g.eval(u) {
                bits[gene] = !bits[gene];
                units[block] = flipped;
                modified = true;
            }
        }
        if !modified {
            break;
        }
    }
    Ok(ClimbResult {
        individual: Individual::new(bits),
        evaluations,
        sweeps,
    })
}

fn check_len(problem: &ConcatenatedProblem, x: &Individual) -> Result<()> {
    if x.len() != problem.n() {
        return Err(Error::Dimension {
            expected: problem.n(),
            actual: x.len(),
        });
    }
    Ok(())
}

/// Draws individual `index` uniformly and climbs it, all from sub-stream
/// `index` of `seed`.
pub fn sample_optimized(problem: &ConcatenatedProblem, seed: RngSeed, index: u64) -> Individual {
    let mut rng = seed.rng(index);
    let x = Individual::random(problem.n(), &mut rng);
    fihc_optimize(problem, &x, &mut rng).expect("sampled individual has length n")
}

/// FIHC-optimized individuals of one problem together with their seed.
#[derive(Clone, Debug, PartialEq)]
pub struct Population {
    problem: ConcatenatedProblem,
    members: Vec<Individual>,
    seed: RngSeed,
}

impl Population {
    /// Wraps explicit members. All must have length `n`.
    pub fn from_members(
        problem: ConcatenatedProblem,
        members: Vec<Individual>,
        seed: RngSeed,
    ) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InsufficientSample {
                needed: 1,
                actual: 0,
            });
        }
        if let Some(bad) = members.iter().find(|m| m.len() != problem.n()) {
            return Err(Error::Dimension {
                expected: problem.n(),
                actual: bad.len(),
            });
        }
        Ok(Self {
            problem,
            members,
            seed,
        })
    }

    pub fn problem(&self) -> &ConcatenatedProblem {
        &self.problem
    }

    pub fn members(&self) -> &[Individual] {
        &self.members
    }

    pub fn seed(&self) -> RngSeed {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn n(&self) -> usize {
        self.problem.n()
    }

    /// One individual per line as a 0/1 string after a `# n=.. s=.. seed=..
    /// stream=..` header.
    pub fn to_dump(&self) -> String {
        let mut out = String::with_capacity(self.len() * (self.n() + 1) + 64);
        writeln!(
            out,
            "# n={} s={} seed={} stream={}",
            self.n(),
            self.len(),
            self.seed.master,
            self.seed.stream
        )
        .unwrap();
        for m in &self.members {
            out.push_str(&m.to_bitstring());
            out.push('\n');
        }
        out
    }

    /// Parses a dump produced by [`Population::to_dump`] against `problem`.
    pub fn from_dump(problem: ConcatenatedProblem, text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty population dump".into()))?;
        let fields = header
            .strip_prefix('#')
            .ok_or_else(|| Error::Format("population dump must start with a '#' header".into()))?;
        let mut n = None;
        let mut s = None;
        let mut seed = RngSeed::new(0, 0);
        for field in fields.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("bad header field '{field}'")))?;
            let value: u64 = value
                .parse()
                .map_err(|_| Error::Format(format!("bad header value '{field}'")))?;
            match key {
                "n" => n = Some(value as usize),
                "s" => s = Some(value as usize),
                "seed" => seed.master = value,
                "stream" => seed.stream = value,
                other => return Err(Error::Format(format!("unknown header field '{other}'"))),
            }
        }
        let n = n.ok_or_else(|| Error::Format("header lacks n".into()))?;
        let s = s.ok_or_else(|| Error::Format("header lacks s".into()))?;
        if n != problem.n() {
            return Err(Error::Dimension {
                expected: problem.n(),
                actual: n,
            });
        }
        let members = lines
            .map(|l| Individual::parse(l.trim()))
            .collect::<Result<Vec<_>>>()?;
        if members.len() != s {
            return Err(Error::Format(format!(
                "header announces {s} individuals, found {}",
                members.len()
            )));
        }
        Self::from_members(problem, members, seed)
    }
}

/// Samples `s` uniform individuals and climbs each with its own random order.
pub fn sample_optimized_population(
    problem: &ConcatenatedProblem,
    s: usize,
    seed: RngSeed,
) -> Result<Population> {
    if s == 0 {
        return Err(Error::Parameter("population size must be at least 1".into()));
    }
    let members = (0..s as u64)
        .into_par_iter()
        .map(|i| sample_optimized(problem, seed, i))
        .collect();
    Ok(Population {
        problem: problem.clone(),
        members,
        seed,
    })
}

/// Appends `extra` freshly sampled and climbed individuals. Existing members
/// are kept as they are. New member `i` uses sub-stream `i`, so extending in
/// chunks yields the same population as one large extension.
pub fn extend_population(mut pop: Population, extra: usize) -> Result<Population> {
    if extra == 0 {
        return Err(Error::Parameter("extension size must be at least 1".into()));
    }
    let start = pop.members.len() as u64;
    let problem = &pop.problem;
    let seed = pop.seed;
    let fresh: Vec<Individual> = (start..start + extra as u64)
        .into_par_iter()
        .map(|i| sample_optimized(problem, seed, i))
        .collect();
    pop.members.extend(fresh);
    Ok(pop)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::builtin;

    fn problem(name: &str, k: usize, r: usize) -> ConcatenatedProblem {
        ConcatenatedProblem::new(builtin(name, k).unwrap(), r).unwrap()
    }

    fn ind(s: &str) -> Individual {
        Individual::parse(s).unwrap()
    }

    #[test]
    fn optimum_is_a_fixed_point() {
        let p = problem("trap", 5, 1);
        let mut rng = RngSeed::new(1, 0).rng(0);
        assert_eq!(fihc_optimize(&p, &ind("11111"), &mut rng).unwrap(), ind("11111"));
    }

    #[test]
    fn bimodal_single_one_depends_on_order() {
        let p = problem("bimodal", 6, 1);
        let mut outcomes = std::collections::BTreeSet::new();
        for seed in 0..40 {
            let mut rng = RngSeed::new(seed, 0).rng(0);
            let out = fihc_optimize(&p, &ind("100000"), &mut rng).unwrap();
            let u = unitation(out.bits());
            assert!(u == 0 || u == 3, "stopped at unitation {u}");
            outcomes.insert(u);
            let mut rng = RngSeed::new(seed, 0).rng(0);
            assert_eq!(fihc_optimize(&p, &ind("000000"), &mut rng).unwrap(), ind("000000"));
        }
        assert_eq!(outcomes.len(), 2);
    }

    #[test]
    fn bimodal_identity_order_reaches_middle() {
        let p = problem("bimodal", 6, 1);
        let order: Vec<usize> = (0..6).collect();
        let out = fihc_with_order(&p, &ind("110100"), &order).unwrap();
        assert_eq!(unitation(out.individual.bits()), 3);
        assert_eq!(out.sweeps, 1);
    }

    #[test]
    fn wrong_length_is_rejected() {
        let p = problem("trap", 5, 2);
        let mut rng = RngSeed::new(0, 0).rng(0);
        assert!(fihc_optimize(&p, &ind("11111"), &mut rng).is_err());
        assert!(fihc_with_order(&p, &ind("1111100000"), &[0, 1, 2]).is_err());
    }

    #[test]
    fn single_member_population() {
        let p = problem("reverted", 6, 3);
        let pop = sample_optimized_population(&p, 1, RngSeed::new(3, 0)).unwrap();
        assert_eq!(pop.len(), 1);
        let mut rng = RngSeed::new(99, 0).rng(0);
        let again = fihc_optimize(&p, &pop.members()[0], &mut rng).unwrap();
        assert_eq!(&again, &pop.members()[0]);
        assert!(sample_optimized_population(&p, 0, RngSeed::new(3, 0)).is_err());
    }

    #[test]
    fn extension_is_chunk_independent() {
        let p = problem("bimodal", 6, 2);
        let seed = RngSeed::new(11, 4);
        let base = sample_optimized_population(&p, 5, seed).unwrap();
        assert!(extend_population(base.clone(), 0).is_err());
        let one = extend_population(base.clone(), 1).unwrap();
        assert_eq!(one.len(), 6);
        assert_eq!(&one.members()[..5], base.members());

        let mut chunked = base.clone();
        for _ in 0..4 {
            chunked = extend_population(chunked, 3).unwrap();
        }
        let whole = extend_population(base, 12).unwrap();
        assert_eq!(chunked, whole);
        assert_eq!(whole, sample_optimized_population(&p, 17, seed).unwrap());
    }

    #[test]
    fn dump_round_trip() {
        let p = problem("trap", 4, 2);
        let pop = sample_optimized_population(&p, 7, RngSeed::new(5, 2)).unwrap();
        let text = pop.to_dump();
        assert!(text.starts_with("# n=8 s=7 seed=5 stream=2\n"));
        assert_eq!(Population::from_dump(p.clone(), &text).unwrap(), pop);
        assert!(Population::from_dump(p.clone(), "# n=8 s=2\n00000000\n").is_err());
        assert!(Population::from_dump(p, "# n=8 s=1\n0000x000\n").is_err());
    }
}

//! Empirical gene statistics, the dependency structure matrix (DSM), the
//! perfect-decomposition predicate and the Fill linkage-quality measure.
//!
//! All logarithms are natural; every quantity used downstream is either a
//! ratio of entropies or a same-base comparison, so the base never matters.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fihc::{Individual, Population};

/// Frequencies of 0 and 1 at one gene.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarginalDistribution {
    pub p0: f64,
    pub p1: f64,
}

impl MarginalDistribution {
    pub fn new(p0: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p0) {
            return Err(Error::Parameter(format!("marginal p0 = {p0} outside [0, 1]")));
        }
        Ok(Self { p0, p1: 1.0 - p0 })
    }

    fn from_count(zeros: u64, s: u64) -> Self {
        Self {
            p0: zeros as f64 / s as f64,
            p1: (s - zeros) as f64 / s as f64,
        }
    }

    pub fn entropy(&self) -> f64 {
        entropy(&[self.p0, self.p1])
    }
}

/// Frequencies of `00, 01, 10, 11` at a gene pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairDistribution {
    pub p: [f64; 4],
}

impl PairDistribution {
    pub fn new(p: [f64; 4]) -> Result<Self> {
        if p.iter().any(|&x| !(x >= 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter(format!("{p:?} is not a probability vector")));
        }
        Ok(Self { p })
    }

    pub fn from_counts(c: [u64; 4]) -> Self {
        let s = c.iter().sum::<u64>() as f64;
        Self {
            p: c.map(|x| x as f64 / s),
        }
    }

    /// Marginal of the first gene.
    pub fn first(&self) -> MarginalDistribution {
        MarginalDistribution {
            p0: self.p[0] + self.p[1],
            p1: self.p[2] + self.p[3],
        }
    }

    /// Marginal of the second gene.
    pub fn second(&self) -> MarginalDistribution {
        MarginalDistribution {
            p0: self.p[0] + self.p[2],
            p1: self.p[1] + self.p[3],
        }
    }
}

/// `-sum p log p` with `0 log 0 = 0`.
pub fn entropy(dist: &[f64]) -> f64 {
    -dist
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

pub fn joint_entropy(pd: &PairDistribution) -> f64 {
    entropy(&pd.p)
}

/// `I = H(P_i) + H(P_j) - H(P_ij)`.
pub fn mutual_information(
    pd: &PairDistribution,
    mi: &MarginalDistribution,
    mj: &MarginalDistribution,
) -> f64 {
    mi.entropy() + mj.entropy() - joint_entropy(pd)
}

/// `D = 1 - I / H(joint)`; a constant pair (`H(joint) = 0`) is at distance 0.
pub fn distance(
    pd: &PairDistribution,
    mi: &MarginalDistribution,
    mj: &MarginalDistribution,
) -> f64 {
    let h = joint_entropy(pd);
    if h == 0.0 {
        return 0.0;
    }
    1.0 - (mi.entropy() + mj.entropy() - h) / h
}

fn check_index(i: usize, n: usize) -> Result<()> {
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    Ok(())
}

pub fn marginal(pop: &Population, i: usize) -> Result<MarginalDistribution> {
    check_index(i, pop.n())?;
    let zeros = pop.members().iter().filter(|m| !m.bits()[i]).count() as u64;
    Ok(MarginalDistribution::from_count(zeros, pop.len() as u64))
}

pub fn pair(pop: &Population, i: usize, j: usize) -> Result<PairDistribution> {
    check_index(i, pop.n())?;
    check_index(j, pop.n())?;
    if i == j {
        return Err(Error::Parameter("pair needs two distinct genes".into()));
    }
    let mut c = [0u64; 4];
    for m in pop.members() {
        let b = m.bits();
        c[(b[i] as usize) << 1 | b[j] as usize] += 1;
    }
    Ok(PairDistribution::from_counts(c))
}

/// Additive sufficient statistics for every gene pair: the number of
/// individuals, ones per gene and co-occurring ones per pair. Appending
/// individuals only ever adds to the counters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairCounts {
    n: usize,
    s: u64,
    ones: Vec<u64>,
    // Row-major n x n, only j > i used.
    both: Vec<u64>,
}

impl PairCounts {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            s: 0,
            ones: vec![0; n],
            both: vec![0; n * n],
        }
    }

    pub fn from_members<'a>(n: usize, members: impl IntoIterator<Item = &'a Individual>) -> Self {
        let mut c = Self::new(n);
        for m in members {
            c.add(m);
        }
        c
    }

    pub fn add(&mut self, x: &Individual) {
        debug_assert_eq!(x.len(), self.n);
        self.s += 1;
        let set: Vec<usize> = (0..self.n).filter(|&i| x.bits()[i]).collect();
        for (a, &i) in set.iter().enumerate() {
            self.ones[i] += 1;
            let row = i * self.n;
            for &j in &set[a + 1..] {
                self.both[row + j] += 1;
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> u64 {
        self.s
    }

    pub fn is_empty(&self) -> bool {
        self.s == 0
    }

    /// Counts of `00, 01, 10, 11` at `(i, j)`.
    pub fn counts(&self, i: usize, j: usize) -> [u64; 4] {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let c11 = self.both[a * self.n + b];
        let (ci, cj) = (self.ones[i], self.ones[j]);
        [self.s + c11 - ci - cj, cj - c11, ci - c11, c11]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let pd = PairDistribution::from_counts(self.counts(i, j));
        distance(&pd, &pd.first(), &pd.second())
    }
}

/// Block label of each gene for contiguous blocks of size `k`.
pub fn contiguous_blocks(k: usize, r: usize) -> Vec<usize> {
    (0..k * r).map(|g| g / k).collect()
}

/// Symmetric matrix of pairwise distances plus the true block of each gene.
/// The block labels are used for scoring only.
#[derive(Clone, Debug, PartialEq)]
pub struct Dsm {
    n: usize,
    d: Vec<f64>,
    block_of: Vec<usize>,
}

impl Dsm {
    /// Builds from a full row-major matrix.
    pub fn from_matrix(d: Vec<f64>, block_of: Vec<usize>) -> Result<Self> {
        let n = block_of.len();
        if d.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                actual: d.len(),
            });
        }
        for i in 0..n {
            for j in 0..n {
                if d[i * n + j] != d[j * n + i] {
                    return Err(Error::Parameter(format!("matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { n, d, block_of })
    }

    pub fn from_counts(counts: &PairCounts, block_of: Vec<usize>) -> Result<Self> {
        let n = counts.n();
        if block_of.len() != n {
            return Err(Error::Dimension {
                expected: n,
                actual: block_of.len(),
            });
        }
        if counts.len() < 2 {
            return Err(Error::InsufficientSample {
                needed: 2,
                actual: counts.len() as usize,
            });
        }
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| (i + 1..n).map(|j| counts.distance(i, j)).collect())
            .collect();
        let mut d = vec![0.0; n * n];
        for (i, row) in rows.into_iter().enumerate() {
            for (off, v) in row.into_iter().enumerate() {
                let j = i + 1 + off;
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        Ok(Self { n, d, block_of })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.d[i * self.n..(i + 1) * self.n]
    }

    pub fn block_of(&self) -> &[usize] {
        &self.block_of
    }

    pub fn same_block(&self, i: usize, j: usize) -> bool {
        self.block_of[i] == self.block_of[j]
    }

    /// CSV with a header row of gene indices and one row per gene.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["gene".to_string()];
        header.extend((0..self.n).map(|j| j.to_string()));
        w.write_record(&header)?;
        for i in 0..self.n {
            let mut rec = vec![i.to_string()];
            rec.extend(self.row(i).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// DSM of a population, with the problem's blocks as ground truth.
pub fn build_dsm(pop: &Population) -> Result<Dsm> {
    if pop.len() < 2 {
        return Err(Error::InsufficientSample {
            needed: 2,
            actual: pop.len(),
        });
    }
    let counts = PairCounts::from_members(pop.n(), pop.members());
    let p = pop.problem();
    Dsm::from_counts(&counts, contiguous_blocks(p.k(), p.r()))
}

/// How DSM entries are compared when deciding whether a decomposition is
/// perfect.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    /// For every gene `i`, each `D(i, j)` with `j` in `i`'s block is strictly
    /// below each `D(i, m)` with `m` outside it. A failure is a triple
    /// `i, j, m` with `D(i, j) >= D(i, m)`.
    #[default]
    PerGene,
    /// Every same-block entry is strictly below every cross-block entry.
    Global,
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-gene" => Ok(Self::PerGene),
            "global" => Ok(Self::Global),
            other => Err(Error::Parameter(format!("unknown decomposition criterion {other:?}"))),
        }
    }
}

/// Perfect decomposition under [`Criterion::PerGene`]. Vacuously true when
/// either kind of pair is absent.
pub fn is_perfect_decomposition(dsm: &Dsm) -> bool {
    is_perfect_with(dsm, Criterion::PerGene)
}

pub fn is_perfect_with(dsm: &Dsm, criterion: Criterion) -> bool {
    separated(dsm.n(), dsm.block_of(), criterion, |i, j| dsm.get(i, j))
}

/// [`is_perfect_with`] evaluated straight from pair counters.
pub fn is_perfect_from_counts(counts: &PairCounts, block_of: &[usize], criterion: Criterion) -> bool {
    let n = counts.n();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = counts.distance(i, j);
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    separated(n, block_of, criterion, |i, j| d[i * n + j])
}

fn separated(n: usize, block_of: &[usize], criterion: Criterion, d: impl Fn(usize, usize) -> f64) -> bool {
    match criterion {
        Criterion::Global => {
            let mut dep_max = f64::NEG_INFINITY;
            let mut indep_min = f64::INFINITY;
            for i in 0..n {
                for j in i + 1..n {
                    if block_of[i] == block_of[j] {
                        dep_max = dep_max.max(d(i, j));
                    } else {
                        indep_min = indep_min.min(d(i, j));
                    }
                }
            }
            dep_max < indep_min
        }
        Criterion::PerGene => (0..n).all(|i| {
            let mut dep_max = f64::NEG_INFINITY;
            let mut indep_min = f64::INFINITY;
            for j in (0..n).filter(|&j| j != i) {
                if block_of[i] == block_of[j] {
                    dep_max = dep_max.max(d(i, j));
                } else {
                    indep_min = indep_min.min(d(i, j));
                }
            }
            dep_max < indep_min
        }),
    }
}

/// Per-gene Fill values with the number of genes tied at the selection
/// cutoff (0 when the cutoff is unambiguous).
#[derive(Clone, Debug, PartialEq)]
pub struct FillReport {
    pub fill: Vec<f64>,
    pub ties: Vec<usize>,
}

impl FillReport {
    pub fn summary(&self) -> f64 {
        self.fill.iter().sum::<f64>() / self.fill.len() as f64
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["gene", "fill"])?;
        for (i, f) in self.fill.iter().enumerate() {
            w.write_record([i.to_string(), f.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fill of gene `i` and the cutoff tie count.
///
/// Takes the `b` genes closest to `i`, where `b` is the number of other
/// genes in `i`'s block, and returns the fraction of them that are true block
/// mates. Genes tied at the cutoff distance are resolved in favour of block
/// mates.
pub fn fill_with_ties(dsm: &Dsm, i: usize) -> (f64, usize) {
    let n = dsm.n();
    let mates: Vec<usize> = (0..n).filter(|&j| j != i && dsm.same_block(i, j)).collect();
    let slots = mates.len();
    if slots == 0 {
        return (1.0, 0);
    }
    let mut dists: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| dsm.get(i, j)).collect();
    dists.sort_by(f64::total_cmp);
    let cutoff = dists[slots - 1];
    let below = dists.iter().filter(|&&d| d < cutoff).count();
    let at = dists.iter().filter(|&&d| d == cutoff).count();
    let mates_below = mates.iter().filter(|&&j| dsm.get(i, j) < cutoff).count();
    let mates_at = mates.iter().filter(|&&j| dsm.get(i, j) == cutoff).count();
    let correct = mates_below + mates_at.min(slots - below);
    let ties = if below + at > slots { at } else { 0 };
    (correct as f64 / slots as f64, ties)
}

pub fn fill(dsm: &Dsm, i: usize) -> f64 {
    fill_with_ties(dsm, i).0
}

pub fn fill_report(dsm: &Dsm) -> FillReport {
    let (fill, ties) = (0..dsm.n()).map(|i| fill_with_ties(dsm, i)).unzip();
    FillReport { fill, ties }
}

/// Mean Fill over all genes.
pub fn fill_summary(dsm: &Dsm) -> f64 {
    fill_report(dsm).summary()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{builtin, ConcatenatedProblem};
    use crate::rng::RngSeed;

    fn pop_of(k: usize, r: usize, rows: &[&str]) -> Population {
        let p = ConcatenatedProblem::new(builtin("trap", k).unwrap(), r).unwrap();
        let members = rows.iter().map(|s| Individual::parse(s).unwrap()).collect();
        Population::from_members(p, members, RngSeed::new(0, 0)).unwrap()
    }

    /// Definition-level sums, no entropy identity.
    fn oracle_distance(c: [u64; 4]) -> f64 {
        let s = c.iter().sum::<u64>() as f64;
        let p = c.map(|x| x as f64 / s);
        let pi = [p[0] + p[1], p[2] + p[3]];
        let pj = [p[0] + p[2], p[1] + p[3]];
        let mut h = 0.0;
        let mut i = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let q = p[a * 2 + b];
                if q > 0.0 {
                    h -= q * q.ln();
                    i += q * (q / (pi[a] * pj[b])).ln();
                }
            }
        }
        if h == 0.0 {
            0.0
        } else {
            1.0 - i / h
        }
    }

    #[test]
    fn pair_and_marginal_examples() {
        let pop = pop_of(2, 1, &["00", "11"]);
        assert_eq!(pair(&pop, 0, 1).unwrap().p, [0.5, 0.0, 0.0, 0.5]);
        let pop = pop_of(2, 1, &["01", "10"]);
        let m = marginal(&pop, 0).unwrap();
        assert_eq!((m.p0, m.p1), (0.5, 0.5));
        let pop = pop_of(2, 1, &["11", "11"]);
        assert_eq!(pair(&pop, 0, 1).unwrap().p, [0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(pair(&pop, 0, 2), Err(Error::IndexOutOfRange { index: 2, n: 2 })));
        assert!(marginal(&pop, 5).is_err());
        assert!(pair(&pop, 1, 1).is_err());
    }

    #[test]
    fn entropy_examples() {
        assert!((entropy(&[0.25; 4]) - 4f64.ln()).abs() < 1e-15);
        assert!((entropy(&[0.25; 4]) - 1.386294).abs() < 1e-6);
        assert_eq!(entropy(&[1.0, 0.0, 0.0, 0.0]), 0.0);
        let pd = PairDistribution::new([0.5, 0.0, 0.0, 0.5]).unwrap();
        let u = MarginalDistribution::new(0.5).unwrap();
        assert!((mutual_information(&pd, &u, &u) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn distance_examples() {
        let u = MarginalDistribution::new(0.5).unwrap();
        let indep = PairDistribution::new([0.25; 4]).unwrap();
        assert!((distance(&indep, &u, &u) - 1.0).abs() < 1e-15);
        let det = PairDistribution::new([0.5, 0.0, 0.0, 0.5]).unwrap();
        assert!(distance(&det, &u, &u).abs() < 1e-15);
        // Frozen from a 40-digit evaluation of the definitions:
        // H4 = -(0.6 ln 0.3 + 0.4 ln 0.2), I = 2 ln 2 - H4.
        let pd = PairDistribution::new([0.3, 0.2, 0.2, 0.3]).unwrap();
        let d = distance(&pd, &u, &u);
        assert!((d - 0.985_261_220_840_815_2).abs() < 1e-14, "{d}");
        assert!((d - oracle_distance([3, 2, 2, 3])).abs() < 1e-12);
        // Constant pair.
        let c = PairDistribution::new([0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(distance(&c, &c.first(), &c.second()), 0.0);
    }

    #[test]
    fn build_dsm_examples() {
        let dsm = build_dsm(&pop_of(2, 1, &["01", "10", "01", "10"])).unwrap();
        assert_eq!(dsm.get(0, 1), 0.0);
        let dsm = build_dsm(&pop_of(3, 2, &["101100", "101100", "101100"])).unwrap();
        assert!((0..6).all(|i| dsm.row(i).iter().all(|&v| v == 0.0)));
        assert!(matches!(
            build_dsm(&pop_of(2, 1, &["01"])),
            Err(Error::InsufficientSample { needed: 2, actual: 1 })
        ));
    }

    fn dsm_from(n: usize, k: usize, f: impl Fn(usize, usize) -> f64) -> Dsm {
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    d[i * n + j] = f(i.min(j), i.max(j));
                }
            }
        }
        Dsm::from_matrix(d, contiguous_blocks(k, n / k)).unwrap()
    }

    #[test]
    fn perfect_decomposition_examples() {
        // Dependent entries 0.2 / 0.3, independent 0.9 / 1.0.
        let dsm = dsm_from(4, 2, |i, j| match (i, j) {
            (0, 1) => 0.2,
            (2, 3) => 0.3,
            (0, 2) => 0.9,
            _ => 1.0,
        });
        assert!(is_perfect_decomposition(&dsm));
        let tie = dsm_from(4, 2, |i, j| match (i, j) {
            (0, 1) => 0.9,
            (2, 3) => 0.3,
            _ => if (i, j) == (0, 2) { 0.9 } else { 1.0 },
        });
        assert!(!is_perfect_decomposition(&tie));
        let single = dsm_from(3, 3, |_, _| 0.7);
        assert!(is_perfect_decomposition(&single));
        assert!(is_perfect_with(&single, Criterion::Global));
    }

    #[test]
    fn criteria_differ() {
        // Blocks {0,1}, {2,3}, {4,5}: block 0 is loose (0.5) but far from
        // everything (0.9); blocks 1 and 2 are tight (0.1) and 0.3 apart.
        let dsm = dsm_from(6, 2, |i, j| {
            if i / 2 == j / 2 {
                if i < 2 { 0.5 } else { 0.1 }
            } else if i < 2 {
                0.9
            } else {
                0.3
            }
        });
        assert!(is_perfect_with(&dsm, Criterion::PerGene));
        assert!(!is_perfect_with(&dsm, Criterion::Global));
        assert_eq!("global".parse::<Criterion>().unwrap(), Criterion::Global);
        assert!("sometimes".parse::<Criterion>().is_err());
    }

    #[test]
    fn fill_examples() {
        let perfect = dsm_from(6, 3, |i, j| if i / 3 == j / 3 { 0.2 } else { 1.0 });
        assert!(fill_report(&perfect).fill.iter().all(|&f| f == 1.0));
        assert_eq!(fill_summary(&perfect), 1.0);

        let worst = dsm_from(6, 3, |i, j| if i / 3 == j / 3 { 1.0 } else { 0.2 });
        assert_eq!(fill(&worst, 0), 0.0);

        // Gene 0: mates 1 and 2 at 0.4 and 0.9, outsiders at 0.5, 0.6, 0.7.
        let mixed = dsm_from(6, 3, |i, j| match (i, j) {
            (0, 1) => 0.4,
            (0, 2) => 0.9,
            (0, 3) => 0.5,
            (0, 4) => 0.6,
            (0, 5) => 0.7,
            _ => 0.3,
        });
        assert_eq!(fill(&mixed, 0), 0.5);
    }

    #[test]
    fn fill_ties_are_optimistic() {
        // Everything at one distance: all mates can be placed inside the cutoff.
        let flat = dsm_from(6, 3, |_, _| 0.5);
        let (f, ties) = fill_with_ties(&flat, 0);
        assert_eq!(f, 1.0);
        assert_eq!(ties, 5);
        // One mate strictly inside, the other tied with an outsider.
        let half = dsm_from(6, 3, |i, j| match (i, j) {
            (0, 1) => 0.1,
            (0, 2) | (0, 3) => 0.6,
            _ => 0.9,
        });
        assert_eq!(fill_with_ties(&half, 0), (1.0, 2));
    }

    #[test]
    fn csv_exports() {
        let dsm = dsm_from(4, 2, |i, j| if i / 2 == j / 2 { 0.25 } else { 1.0 });
        let mut buf = Vec::new();
        dsm.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "gene,0,1,2,3");
        assert_eq!(text.lines().nth(1).unwrap(), "0,0,0.25,1,1");
        let mut buf = Vec::new();
        fill_report(&dsm).write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "gene,fill\n0,1\n1,1\n2,1\n3,1\n");
    }

    #[test]
    fn bimodal_intra_block_is_closer() {
        let p = ConcatenatedProblem::new(builtin("bimodal", 6).unwrap(), 2).unwrap();
        let pop = crate::fihc::sample_optimized_population(&p, 100_000, RngSeed::new(1, 0))
            .unwrap();
        let dsm = build_dsm(&pop).unwrap();
        let (mut intra, mut ni, mut inter, mut no) = (0.0, 0, 0.0, 0);
        for i in 0..12 {
            for j in i + 1..12 {
                if dsm.same_block(i, j) {
                    intra += dsm.get(i, j);
                    ni += 1;
                } else {
                    inter += dsm.get(i, j);
                    no += 1;
                }
            }
        }
        assert!(intra / (ni as f64) < inter / (no as f64));
    }

    #[test]
    fn counts_match_direct_pairs() {
        let pop = pop_of(3, 2, &["101100", "011010", "111111", "000001", "100100"]);
        let counts = PairCounts::from_members(6, pop.members());
        for i in 0..6 {
            for j in 0..6 {
                if i != j {
                    let direct = pair(&pop, i, j).unwrap();
                    assert_eq!(PairDistribution::from_counts(counts.counts(i, j)), direct);
                }
            }
        }
        let dsm = build_dsm(&pop).unwrap();
        for c in [Criterion::PerGene, Criterion::Global] {
            assert_eq!(is_perfect_from_counts(&counts, dsm.block_of(), c), is_perfect_with(&dsm, c));
        }
    }
}

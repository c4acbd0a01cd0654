//! Linkage tree construction, optimal mixing, and a small fixed-population
//! linkage-tree optimizer instrumented with the Fill of its DSM.

use std::io::Write;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fihc::{fihc_counted, Individual};
use crate::functions::ConcatenatedProblem;
use crate::rng::RngSeed;
use crate::stats::{contiguous_blocks, fill_summary, Dsm, PairCounts};

/// Inter-cluster distance used when merging linkage tree nodes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Linkage {
    /// Mean of the pairwise distances (UPGMA).
    #[default]
    Average,
    /// Minimum pairwise distance.
    Single,
}

impl FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "average" | "upgma" => Ok(Self::Average),
            "single" => Ok(Self::Single),
            other => Err(Error::Parameter(format!("unknown linkage criterion {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LtNode {
    /// Sorted gene indices.
    pub mask: Vec<usize>,
    pub children: Option<(usize, usize)>,
    /// Distance at which the children were joined; 0 for leaves.
    pub height: f64,
}

/// Binary merge hierarchy over the genes: `n` leaves followed by `n - 1`
/// internal nodes in merge order, the last one being the root.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkageTree {
    n: usize,
    nodes: Vec<LtNode>,
}

impl LinkageTree {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> &[LtNode] {
        &self.nodes
    }

    pub fn root(&self) -> &LtNode {
        self.nodes.last().expect("tree has at least one node")
    }

    /// Every node mask except the root's, leaves first.
    pub fn mixing_masks(&self) -> Vec<&[usize]> {
        self.nodes[..self.nodes.len() - 1]
            .iter()
            .map(|node| node.mask.as_slice())
            .collect()
    }
}

/// UPGMA linkage tree of the DSM.
pub fn build_linkage_tree(dsm: &Dsm) -> Result<LinkageTree> {
    build_linkage_tree_with(dsm, Linkage::Average)
}

/// Agglomerative clustering: repeatedly joins the two closest clusters. Ties
/// go to the pair whose smallest genes are lexicographically lowest.
pub fn build_linkage_tree_with(dsm: &Dsm, linkage: Linkage) -> Result<LinkageTree> {
    let n = dsm.n();
    if n < 2 {
        return Err(Error::Parameter(format!("a linkage tree needs at least 2 genes, got {n}")));
    }
    let mut nodes: Vec<LtNode> = (0..n)
        .map(|g| LtNode { mask: vec![g], children: None, height: 0.0 })
        .collect();
    // Active clusters as (node index, smallest gene), kept sorted by gene.
    let mut active: Vec<(usize, usize)> = (0..n).map(|g| (g, g)).collect();
    // dist[a][b] between active slots, indexed by node id.
    let mut dist = vec![vec![0.0f64; 2 * n - 1]; 2 * n - 1];
    for i in 0..n {
        for j in 0..n {
            dist[i][j] = dsm.get(i, j);
        }
    }
    while active.len() > 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..active.len() {
            for b in a + 1..active.len() {
                let d = dist[active[a].0][active[b].0];
                // Strict comparison keeps the first pair in (min, min) order.
                if best.is_none_or(|(bd, _, _)| d < bd) {
                    best = Some((d, a, b));
                }
            }
        }
        let (height, a, b) = best.expect("at least two active clusters");
        let (na, nb) = (active[a].0, active[b].0);
        let id = nodes.len();
        let mut mask = [nodes[na].mask.as_slice(), nodes[nb].mask.as_slice()].concat();
        mask.sort_unstable();
        let (sa, sb) = (nodes[na].mask.len() as f64, nodes[nb].mask.len() as f64);
        for &(other, _) in &active {
            if other == na || other == nb {
                continue;
            }
            let d = match linkage {
                Linkage::Average => (sa * dist[na][other] + sb * dist[nb][other]) / (sa + sb),
                Linkage::Single => dist[na][other].min(dist[nb][other]),
            };
            dist[id][other] = d;
            dist[other][id] = d;
        }
        let min_gene = active[a].1.min(active[b].1);
        nodes.push(LtNode { mask, children: Some((na, nb)), height });
        active.remove(b);
        active.remove(a);
        let pos = active.partition_point(|&(_, g)| g < min_gene);
        active.insert(pos, (id, min_gene));
    }
    Ok(LinkageTree { n, nodes })
}

/// Result of one mask application.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingOutcome {
    pub accepted: bool,
    pub fitness_before: f64,
    pub fitness_after: f64,
    pub evaluations_used: u64,
}

/// Copies the donor's genes at `mask` into `source` and keeps the result if
/// fitness does not decrease. `source_fitness` must be the source's current
/// fitness. A mask on which donor and source already agree costs nothing.
pub fn optimal_mixing(
    problem: &ConcatenatedProblem,
    source: &Individual,
    source_fitness: f64,
    donor: &Individual,
    mask: &[usize],
) -> Result<(Individual, MixingOutcome)> {
    let n = problem.n();
    for x in [source, donor] {
        if x.len() != n {
            return Err(Error::Dimension { expected: n, actual: x.len() });
        }
    }
    if mask.is_empty() {
        return Err(Error::Parameter("mixing mask must not be empty".into()));
    }
    if let Some(&bad) = mask.iter().find(|&&g| g >= n) {
        return Err(Error::IndexOutOfRange { index: bad, n });
    }
    let mut out = source.clone();
    let outcome = mix_in_place(problem, &mut out, source_fitness, donor, mask);
    Ok((out, outcome))
}

fn mix_in_place(
    problem: &ConcatenatedProblem,
    x: &mut Individual,
    fitness: f64,
    donor: &Individual,
    mask: &[usize],
) -> MixingOutcome {
    let changed: Vec<usize> = mask
        .iter()
        .copied()
        .filter(|&g| x.bits()[g] != donor.bits()[g])
        .collect();
    if changed.is_empty() {
        return MixingOutcome {
            accepted: true,
            fitness_before: fitness,
            fitness_after: fitness,
            evaluations_used: 0,
        };
    }
    for &g in &changed {
        x.bits_mut()[g] = donor.bits()[g];
    }
    let after = problem.evaluate_unchecked(x.bits());
    if after >= fitness {
        MixingOutcome { accepted: true, fitness_before: fitness, fitness_after: after, evaluations_used: 1 }
    } else {
        for &g in &changed {
            x.bits_mut()[g] = !x.bits()[g];
        }
        MixingOutcome { accepted: false, fitness_before: fitness, fitness_after: fitness, evaluations_used: 1 }
    }
}

/// Settings of the linkage-tree optimizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LtConfig {
    pub pop_size: usize,
    pub budget_ffe: u64,
    #[serde(default)]
    pub linkage: Linkage,
    /// Stop as soon as a global optimum appears. When false the run spends
    /// the whole budget, which makes terminal Fill values comparable.
    #[serde(default = "default_true")]
    pub stop_at_optimum: bool,
}

fn default_true() -> bool {
    true
}

impl LtConfig {
    pub fn new(pop_size: usize, budget_ffe: u64) -> Self {
        Self { pop_size, budget_ffe, linkage: Linkage::Average, stop_at_optimum: true }
    }
}

/// One row of the Fill trace. Row 0 describes the initial population, row
/// `g` the population after generation `g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub generation: u32,
    pub ffe_used: u64,
    pub fill_summary: f64,
    pub best_fitness: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Optimum,
    Budget,
    /// All individuals identical; mixing can no longer change anything.
    Converged,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LtRun {
    pub best: Individual,
    pub best_fitness: f64,
    pub trace: Vec<TraceRow>,
    pub ffe_used: u64,
    pub ffe_to_optimum: Option<u64>,
    pub stop: StopReason,
}

impl LtRun {
    pub fn terminal_fill(&self) -> f64 {
        self.trace.last().map_or(0.0, |row| row.fill_summary)
    }
}

/// Writes the trace as `generation,ffe_used,fill_summary,best_fitness`.
pub fn write_trace_csv<W: Write>(trace: &[TraceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["generation", "ffe_used", "fill_summary", "best_fitness"])?;
    for row in trace {
        w.write_record([
            row.generation.to_string(),
            row.ffe_used.to_string(),
            row.fill_summary.to_string(),
            row.best_fitness.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Stream used for mixing decisions; initial individuals use sub-streams
/// `0..pop_size` of the same seed.
const MIXING_STREAM: u64 = u64::MAX;

/// FIHC-initialized population followed by generations of linkage-tree
/// optimal mixing.
pub fn run_lt_gomea_lite(problem: &ConcatenatedProblem, cfg: &LtConfig, seed: RngSeed) -> Result<LtRun> {
    validate(cfg)?;
    let climbs: Vec<(Individual, u64)> = (0..cfg.pop_size as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.rng(i);
            let x = Individual::random(problem.n(), &mut rng);
            let c = fihc_counted(problem, &x, &mut rng).expect("length n");
            (c.individual, c.evaluations)
        })
        .collect();
    // Optimum time counts climbs in index order.
    let mut ffe = 0u64;
    let mut first = None;
    for (x, e) in &climbs {
        ffe += e;
        if first.is_none() && problem.is_optimal(x.bits()) {
            first = Some(ffe);
        }
    }
    let members = climbs.into_iter().map(|(x, _)| x).collect();
    evolve(problem, cfg, seed, members, ffe, first)
}

/// Runs the mixing phase on a given population, charging one evaluation per
/// member for its initial fitness.
pub fn run_lt_gomea_from(
    problem: &ConcatenatedProblem,
    cfg: &LtConfig,
    seed: RngSeed,
    members: Vec<Individual>,
) -> Result<LtRun> {
    let cfg = LtConfig { pop_size: members.len(), ..cfg.clone() };
    validate(&cfg)?;
    if let Some(bad) = members.iter().find(|x| x.len() != problem.n()) {
        return Err(Error::Dimension { expected: problem.n(), actual: bad.len() });
    }
    let ffe = members.len() as u64;
    let first = members.iter().any(|x| problem.is_optimal(x.bits())).then_some(ffe);
    evolve(problem, &cfg, seed, members, ffe, first)
}

fn validate(cfg: &LtConfig) -> Result<()> {
    if cfg.pop_size < 2 {
        return Err(Error::Parameter(format!("population size must be at least 2, got {}", cfg.pop_size)));
    }
    if cfg.budget_ffe < 1 {
        return Err(Error::Parameter("FFE budget must be positive".into()));
    }
    Ok(())
}

fn evolve(
    problem: &ConcatenatedProblem,
    cfg: &LtConfig,
    seed: RngSeed,
    mut pop: Vec<Individual>,
    mut ffe: u64,
    mut ffe_to_optimum: Option<u64>,
) -> Result<LtRun> {
    let n = problem.n();
    let blocks = contiguous_blocks(problem.k(), problem.r());
    let mut fitness: Vec<f64> = pop.iter().map(|x| problem.evaluate_unchecked(x.bits())).collect();
    let mut rng = seed.rng(MIXING_STREAM);
    let dsm_of = |pop: &[Individual]| Dsm::from_counts(&PairCounts::from_members(n, pop), blocks.clone());

    let mut dsm = dsm_of(&pop)?;
    let mut trace = vec![TraceRow {
        generation: 0,
        ffe_used: ffe,
        fill_summary: fill_summary(&dsm),
        best_fitness: max_of(&fitness),
    }];
    let mut generation = 0u32;
    let stop = loop {
        if ffe_to_optimum.is_some() && cfg.stop_at_optimum {
            break StopReason::Optimum;
        }
        if ffe >= cfg.budget_ffe {
            break StopReason::Budget;
        }
        if pop.windows(2).all(|w| w[0] == w[1]) {
            break StopReason::Converged;
        }
        generation += 1;
        let tree = build_linkage_tree_with(&dsm, cfg.linkage)?;
        let mut masks = tree.mixing_masks();
        let mut out_of_budget = false;
        // Donors come from the population as it was when the generation began.
        let parents = pop.clone();
        'members: for i in 0..pop.len() {
            masks.shuffle(&mut rng);
            for mask in &masks {
                if ffe >= cfg.budget_ffe {
                    out_of_budget = true;
                    break 'members;
                }
                let mut d = rng.random_range(0..pop.len() - 1);
                if d >= i {
                    d += 1;
                }
                let outcome = mix_in_place(problem, &mut pop[i], fitness[i], &parents[d], mask);
                ffe += outcome.evaluations_used;
                fitness[i] = outcome.fitness_after;
                if ffe_to_optimum.is_none() && outcome.evaluations_used > 0 && problem.is_optimal(pop[i].bits()) {
                    ffe_to_optimum = Some(ffe);
                    if cfg.stop_at_optimum {
                        break 'members;
                    }
                }
            }
        }
        dsm = dsm_of(&pop)?;
        trace.push(TraceRow {
            generation,
            ffe_used: ffe,
            fill_summary: fill_summary(&dsm),
            best_fitness: max_of(&fitness),
        });
        if out_of_budget {
            break StopReason::Budget;
        }
    };
    let best_idx = (0..pop.len())
        .max_by(|&a, &b| fitness[a].total_cmp(&fitness[b]).then(b.cmp(&a)))
        .expect("nonempty population");
    Ok(LtRun {
        best: pop[best_idx].clone(),
        best_fitness: fitness[best_idx],
        trace,
        ffe_used: ffe,
        ffe_to_optimum,
        stop,
    })
}

fn max_of(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::builtin;

    fn matrix_dsm(n: usize, k: usize, f: impl Fn(usize, usize) -> f64) -> Dsm {
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    d[i * n + j] = f(i, j);
                }
            }
        }
        Dsm::from_matrix(d, contiguous_blocks(k, n / k)).unwrap()
    }

    fn is_laminar(tree: &LinkageTree) -> bool {
        let masks = tree.mixing_masks();
        masks.iter().all(|a| {
            masks.iter().all(|b| {
                let inter = a.iter().filter(|g| b.contains(g)).count();
                inter == 0 || inter == a.len() || inter == b.len()
            })
        })
    }

    #[test]
    fn two_genes() {
        let tree = build_linkage_tree(&matrix_dsm(2, 2, |_, _| 0.5)).unwrap();
        assert_eq!(tree.nodes().len(), 3);
        assert_eq!(tree.root().mask, vec![0, 1]);
        assert_eq!(tree.mixing_masks(), vec![&[0][..], &[1][..]]);
    }

    #[test]
    fn too_small() {
        let d = Dsm::from_matrix(vec![0.0], vec![0]).unwrap();
        assert!(build_linkage_tree(&d).is_err());
    }

    #[test]
    fn perfect_dsm_recovers_blocks() {
        let dsm = matrix_dsm(6, 3, |i, j| if i / 3 == j / 3 { 0.2 } else { 1.0 });
        for linkage in [Linkage::Average, Linkage::Single] {
            let tree = build_linkage_tree_with(&dsm, linkage).unwrap();
            assert_eq!(tree.nodes().len(), 11);
            let masks = tree.mixing_masks();
            assert!(masks.contains(&&[0, 1, 2][..]));
            assert!(masks.contains(&&[3, 4, 5][..]));
            assert!(is_laminar(&tree));
        }
    }

    #[test]
    fn equal_entries_use_tie_break() {
        let dsm = matrix_dsm(4, 2, |_, _| 0.7);
        let tree = build_linkage_tree(&dsm).unwrap();
        let merged: Vec<&Vec<usize>> = tree.nodes()[4..].iter().map(|n| &n.mask).collect();
        assert_eq!(merged, vec![&vec![0, 1], &vec![0, 1, 2], &vec![0, 1, 2, 3]]);
        assert_eq!(tree, build_linkage_tree(&dsm).unwrap());
    }

    #[test]
    fn internal_masks_are_unions() {
        let dsm = matrix_dsm(8, 4, |i, j| ((i * 7 + j * 7) % 11) as f64 / 11.0 + (i + j) as f64 * 1e-3);
        let tree = build_linkage_tree(&dsm).unwrap();
        for node in tree.nodes() {
            if let Some((a, b)) = node.children {
                let mut u = [tree.nodes()[a].mask.clone(), tree.nodes()[b].mask.clone()].concat();
                u.sort_unstable();
                assert_eq!(u, node.mask);
            }
        }
        assert_eq!(tree.root().mask, (0..8).collect::<Vec<_>>());
        assert!(is_laminar(&tree));
    }

    #[test]
    fn mixing_examples() {
        let p = ConcatenatedProblem::new(builtin("trap", 5).unwrap(), 1).unwrap();
        let zeros = Individual::parse("00000").unwrap();
        let ones = Individual::parse("11111").unwrap();
        let (x, o) = optimal_mixing(&p, &zeros, 4.0, &zeros, &[0, 1]).unwrap();
        assert!(o.accepted && o.evaluations_used == 0 && x == zeros);
        let (x, o) = optimal_mixing(&p, &zeros, 4.0, &ones, &[0, 1, 2, 3, 4]).unwrap();
        assert!(o.accepted);
        assert_eq!((o.fitness_before, o.fitness_after, x.clone()), (4.0, 5.0, ones.clone()));
        let (x, o) = optimal_mixing(&p, &zeros, 4.0, &ones, &[1, 3]).unwrap();
        assert!(!o.accepted);
        assert_eq!((x, o.fitness_after, o.evaluations_used), (zeros.clone(), 4.0, 1));
        assert!(optimal_mixing(&p, &zeros, 4.0, &ones, &[]).is_err());
        assert!(optimal_mixing(&p, &zeros, 4.0, &ones, &[5]).is_err());
    }

    #[test]
    fn equal_fitness_is_accepted() {
        let p = ConcatenatedProblem::new(builtin("bimodal", 6).unwrap(), 1).unwrap();
        let a = Individual::parse("111000").unwrap();
        let b = Individual::parse("000111").unwrap();
        let (x, o) = optimal_mixing(&p, &a, 2.0, &b, &[0, 3]).unwrap();
        assert!(o.accepted);
        assert_eq!(x, Individual::parse("011100").unwrap());
    }

    #[test]
    fn identical_optima_stop_immediately() {
        let p = ConcatenatedProblem::new(builtin("trap", 5).unwrap(), 2).unwrap();
        let top = Individual::parse("1111111111").unwrap();
        let run = run_lt_gomea_from(&p, &LtConfig::new(4, 1000), RngSeed::new(1, 0), vec![top; 4]).unwrap();
        assert_eq!(run.trace.len(), 1);
        assert_eq!(run.stop, StopReason::Optimum);
        assert_eq!(run.ffe_to_optimum, Some(4));
    }

    #[test]
    fn trap_is_solved_and_deterministic() {
        let p = ConcatenatedProblem::new(builtin("trap", 5).unwrap(), 4).unwrap();
        let cfg = LtConfig::new(64, 1_000_000);
        let a = run_lt_gomea_lite(&p, &cfg, RngSeed::new(3, 0)).unwrap();
        let b = run_lt_gomea_lite(&p, &cfg, RngSeed::new(3, 0)).unwrap();
        assert_eq!(a, b);
        assert!(a.trace.windows(2).all(|w| w[0].best_fitness <= w[1].best_fitness));
        assert!(a.trace.windows(2).all(|w| w[0].ffe_used <= w[1].ffe_used));
        if a.stop == StopReason::Optimum {
            assert!(p.is_optimal(a.best.bits()));
        }
    }

    #[test]
    fn budget_is_respected() {
        let p = ConcatenatedProblem::new(builtin("trap", 5).unwrap(), 8).unwrap();
        let cfg = LtConfig { stop_at_optimum: false, ..LtConfig::new(16, 2_000) };
        let run = run_lt_gomea_lite(&p, &cfg, RngSeed::new(5, 0)).unwrap();
        assert!(run.stop != StopReason::Optimum);
        // The initial climbs are charged in full; mixing stops at the budget.
        assert!(run.ffe_used <= cfg.budget_ffe.max(run.trace[0].ffe_used));
        assert!(run_lt_gomea_lite(&p, &LtConfig::new(1, 10), RngSeed::new(0, 0)).is_err());
        assert!(run_lt_gomea_lite(&p, &LtConfig::new(4, 0), RngSeed::new(0, 0)).is_err());
    }

    #[test]
    fn trace_csv_layout() {
        let rows = vec![TraceRow { generation: 0, ffe_used: 10, fill_summary: 0.5, best_fitness: 3.0 }];
        let mut buf = Vec::new();
        write_trace_csv(&rows, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "generation,ffe_used,fill_summary,best_fitness\n0,10,0.5,3\n");
    }
}

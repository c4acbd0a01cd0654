use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use sll_core::error::{Error, Result};
use sll_core::fihc::{sample_optimized_population, Population};
use sll_core::functions::{resolve_function, ConcatenatedProblem, MonotonicityProfile, UnitationFunction};
use sll_core::harness::{run_growth_experiment, ExperimentConfig};
use sll_core::linkage::{run_lt_gomea_lite, write_trace_csv, Linkage, LtConfig};
use sll_core::rng::RngSeed;
use sll_core::stats::{build_dsm, fill_report, is_perfect_with, Criterion};
use sll_core::theory::{
    estimate_for_function, is_sll_undecidable, scan_profiles, scan_undecidable, theoretical_distribution,
    write_scan_csv, SymmetricPairDistribution,
};

const EXIT_USAGE: u8 = 2;
const EXIT_CENSORED: u8 = 3;

#[derive(Parser)]
#[command(name = "sll", version, about = "Linkage-learning decomposition analysis for concatenated unitation functions")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Population size that makes the DSM perfect with probability 1 - alpha.
    Estimate {
        #[arg(long)]
        function: String,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        r: usize,
        /// Tolerated failure probability.
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
    },
    /// Exact pair distribution of FIHC-optimized blocks.
    TheoryDist {
        /// JSON profile or function file, or a built-in function name.
        #[arg(long)]
        profile: String,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Lists pairwise-independent (SLL-undecidable) monotonicity profiles as CSV.
    ScanUndecidable {
        #[arg(long, default_value_t = 3)]
        k_min: usize,
        #[arg(long, default_value_t = 16)]
        k_max: usize,
        #[arg(long, default_value_t = 4)]
        n_max: usize,
        /// Emit every profile, not just the undecidable ones.
        #[arg(long)]
        all: bool,
    },
    /// Growing-population experiment from a JSON config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Where to write the per-repeat CSV.
        #[arg(long)]
        repeats_csv: Option<PathBuf>,
    },
    /// Per-gene Fill of a population dump's DSM, as CSV.
    Fill {
        #[arg(long)]
        population: PathBuf,
        /// `FUNCTION:R`, e.g. `bimodal6:2` or `my_function.json:3`.
        #[arg(long)]
        problem: String,
    },
    /// Linkage-tree optimal-mixing run; writes the Fill trace as CSV.
    Optimize {
        #[arg(long)]
        function: String,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        pop: usize,
        /// Fitness evaluation budget; accepts forms like `1e7`.
        #[arg(long, value_parser = parse_count)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "average")]
        linkage: Linkage,
        /// Keep mixing after the optimum appears, until the budget is spent.
        #[arg(long)]
        run_to_budget: bool,
    },
    /// Writes a FIHC-optimized population dump.
    Sample {
        #[arg(long)]
        function: String,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        r: usize,
        #[arg(long, value_parser = parse_count)]
        size: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        stream: u64,
    },
}

fn parse_count(s: &str) -> std::result::Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64 => Ok(v as u64),
        _ => Err(format!("'{s}' is not a non-negative integer")),
    }
}

fn load_function(name: &str, k: Option<usize>) -> Result<UnitationFunction> {
    let path = Path::new(name);
    if path.is_file() {
        let g = UnitationFunction::load(path)?;
        if let Some(k) = k.filter(|&k| k != g.k()) {
            return Err(Error::Parameter(format!("--k {k} disagrees with order {} in {name}", g.k())));
        }
        return Ok(g);
    }
    resolve_function(name, k)
}

fn parse_problem(arg: &str) -> Result<ConcatenatedProblem> {
    let (f, r) = arg
        .rsplit_once(':')
        .ok_or_else(|| Error::Parameter(format!("problem '{arg}' must look like FUNCTION:R")))?;
    let r = r
        .parse()
        .map_err(|_| Error::Parameter(format!("bad block count in problem '{arg}'")))?;
    ConcatenatedProblem::new(load_function(f, None)?, r)
}

fn load_profile(arg: &str, k: Option<usize>) -> Result<(String, MonotonicityProfile)> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = fs::read_to_string(path)?;
        if let Ok(p) = MonotonicityProfile::from_json(&text) {
            return Ok((arg.to_string(), p));
        }
        let g = UnitationFunction::from_json(&text)?;
        return Ok((g.name().to_string(), MonotonicityProfile::extract(&g)?));
    }
    let g = resolve_function(arg, k)?;
    Ok((g.name().to_string(), MonotonicityProfile::extract(&g)?))
}

fn echo(config: &serde_json::Value) {
    eprintln!("# config: {config}");
}

fn summary(result: &serde_json::Value) {
    eprintln!("# result: {result}");
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Parameter(e.to_string()))?;
    }
    match cli.command {
        Command::Estimate { function, k, r, alpha } => {
            let g = load_function(&function, k)?;
            let config = json!({ "function": function, "k": g.k(), "r": r, "alpha": alpha });
            let out = match estimate_for_function(&g, r, alpha) {
                Ok(e) => json!({
                    "config": config,
                    "function": g.name(),
                    "k": g.k(),
                    "r": r,
                    "alpha": alpha,
                    "status": "ok",
                    "q_tilde": e.q_tilde,
                    "q_tilde_from_01": e.q_tilde_from_01,
                    "rho": e.rho,
                    "q_of_rho": e.q_of_rho,
                    "exponent": e.exponent,
                    "pair_budget": e.pair_budget,
                    "s_min": e.s_min,
                }),
                Err(Error::Undecidable) => json!({
                    "config": config,
                    "function": g.name(),
                    "k": g.k(),
                    "r": r,
                    "alpha": alpha,
                    "status": "undecidable",
                    "q_tilde": 0.25,
                    "s_min": null,
                }),
                Err(e) => return Err(e),
            };
            print_json(&out)?;
        }
        Command::TheoryDist { profile, k } => {
            let (name, p) = load_profile(&profile, k)?;
            let d = theoretical_distribution(&p)?;
            let sym = SymmetricPairDistribution::from_theoretical(&d).ok().map(|s| {
                json!({ "exact": s.q_tilde.to_string(), "value": s.to_f64(), "from_01": s.from_01 })
            });
            print_json(&json!({
                "config": { "profile": profile, "k": k },
                "source": name,
                "profile": p,
                "q1": d.q1.to_string(),
                "q2": d.q2.to_string(),
                "q3": d.q3.to_string(),
                "distribution": d.as_f64(),
                "undecidable": is_sll_undecidable(&d),
                "q_tilde": sym,
            }))?;
        }
        Command::ScanUndecidable { k_min, k_max, n_max, all } => {
            if k_min < 2 || k_min > k_max {
                return Err(Error::Parameter(format!("need 2 <= k-min <= k-max, got {k_min}..{k_max}")));
            }
            echo(&json!({ "k_min": k_min, "k_max": k_max, "n_max": n_max, "all": all }));
            let entries = if all {
                scan_profiles(k_min..=k_max, n_max)
            } else {
                scan_undecidable(k_min..=k_max, n_max)
            };
            write_scan_csv(&entries, io::stdout().lock())?;
        }
        Command::Experiment { config, repeats_csv } => {
            let cfg = ExperimentConfig::load(&config)?;
            let record = run_growth_experiment(&cfg)?;
            if let Some(path) = repeats_csv {
                record.write_repeats_csv(fs::File::create(path)?)?;
            }
            print_json(&serde_json::to_value(&record)?)?;
            if record.all_censored() {
                eprintln!("{}", record.diagnostic.as_deref().unwrap_or("all repeats censored"));
                return Ok(EXIT_CENSORED);
            }
        }
        Command::Fill { population, problem } => {
            let p = parse_problem(&problem)?;
            let pop = Population::from_dump(p, &fs::read_to_string(&population)?)?;
            let dsm = build_dsm(&pop)?;
            let report = fill_report(&dsm);
            echo(&json!({ "population": population, "problem": problem, "seed": pop.seed(), "s": pop.len() }));
            summary(&json!({
                "fill_summary": report.summary(),
                "ties": report.ties.iter().sum::<usize>(),
                "perfect": is_perfect_with(&dsm, Criterion::PerGene),
            }));
            report.write_csv(io::stdout().lock())?;
        }
        Command::Optimize { function, k, r, pop, budget, seed, linkage, run_to_budget } => {
            let problem = ConcatenatedProblem::new(load_function(&function, k)?, r)?;
            let cfg = LtConfig { pop_size: pop, budget_ffe: budget, linkage, stop_at_optimum: !run_to_budget };
            let run = run_lt_gomea_lite(&problem, &cfg, RngSeed::new(seed, 0))?;
            echo(&json!({ "function": function, "k": problem.k(), "r": r, "optimizer": cfg, "seed": seed }));
            summary(&json!({
                "ffe_used": run.ffe_used,
                "ffe_to_optimum": run.ffe_to_optimum,
                "best_fitness": run.best_fitness,
                "stop": run.stop,
            }));
            write_trace_csv(&run.trace, io::stdout().lock())?;
        }
        Command::Sample { function, k, r, size, seed, stream } => {
            let problem = ConcatenatedProblem::new(load_function(&function, k)?, r)?;
            let pop = sample_optimized_population(&problem, size as usize, RngSeed::new(seed, stream))?;
            echo(&json!({ "function": function, "k": problem.k(), "r": r, "size": size, "seed": seed, "stream": stream }));
            io::stdout().lock().write_all(pop.to_dump().as_bytes())?;
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

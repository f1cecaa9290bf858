//! Batch experiment driver: parse an experiment config, run one operation,
//! emit CSV tables or structured-text certificates.
//!
//! Exit codes: 0 success; 2 configuration / input problems; 3 inconclusive
//! (a bounded search or a theorem hypothesis did not settle the question);
//! 4 invariant violation (a certified claim failed to re-verify).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use growthlab::config::ExperimentConfig;
use growthlab::displacement::{
    factor_transfer, min_displacement, min_displacement_subdivided, quasi_center,
};
use growthlab::growth::{commutator_set, growth_rate, product_set_counts, psg_check};
use growthlab::loxo::{build_free_base, classify_action, pingpong_pair, short_loxodromic};
use growthlab::report::{cert_to_toml, chain_csv, commutators_csv, growth_csv};
use growthlab::schreier::{chain_psg_bound, schreier_generators};
use growthlab::suite::{format_line, run_all, run_criterion};
use growthlab::tree::point_key;
use growthlab::{Error, Result};

#[derive(Parser)]
#[command(
    name = "growthlab",
    about = "Exact experiments with group actions on simplicial trees",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Artifact path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Recompute and byte-compare against the existing artifact at --out
    /// instead of writing it.
    #[arg(long, global = true)]
    verify: bool,
    /// Size of the rayon thread pool (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override the element cap from the config.
    #[arg(long, global = true)]
    cap_elements: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact displacement minimization and the quasi-center construction.
    Displace,
    /// Factor transfer on a product of trees at threshold M.
    Transfer,
    /// Short loxodromic extraction from the configured set.
    Loxo,
    /// Free-semigroup certificate for the first two words of the set.
    Pingpong,
    /// Free-semigroup base T with |T| about |U|/|F|.
    Freebase,
    /// Schreier generators for a kernel or point stabilizer.
    Schreier,
    /// Product-set growth series with optional PSG verdicts.
    Growth,
    /// Commutator-set growth against a declared linear bound.
    Commutators,
    /// Classify the action generated by the configured set.
    Classify,
    /// Chained finite-index / quotient PSG bound on the measured series.
    Chain,
    /// Run the acceptance battery (all criteria, or one with --criterion).
    Suite {
        #[arg(long)]
        criterion: Option<u32>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(match e {
                Error::Config(_) | Error::SpecMismatch(_) | Error::Precondition(_)
                | Error::Io(_) => 2,
                Error::ResourceLimit(_) | Error::Inconclusive(_) => 3,
                Error::InvariantViolation(_) => 4,
            })
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::Config("this subcommand requires --config <path>".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(cap) = cli.cap_elements {
        cfg.caps.elements = cap;
    }
    Ok(cfg)
}

/// Write the artifact, or under `--verify` byte-compare the recomputation
/// against what an earlier run left at `--out`.
fn emit(cli: &Cli, artifact: &str) -> Result<()> {
    match (&cli.out, cli.verify) {
        (Some(path), true) => {
            let existing = std::fs::read_to_string(path)?;
            if existing == artifact {
                println!("verify: OK ({} bytes, {})", artifact.len(), path.display());
                Ok(())
            } else {
                Err(Error::InvariantViolation(format!(
                    "artifact at {} does not match recomputation",
                    path.display()
                )))
            }
        }
        (Some(path), false) => {
            std::fs::write(path, artifact)?;
            Ok(())
        }
        (None, true) => Err(Error::Config("--verify requires --out <path>".into())),
        (None, false) => {
            print!("{artifact}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct DisplaceArtifact {
    lambda: u64,
    witness: String,
    descent_steps: u64,
    /// Continuous minimum over the quarter grid, quadrupled metric.
    lambda4: u64,
    quarter_minimizer: String,
    quasi_center_lambda: u64,
    quasi_center_bound: u64,
    s_max: String,
}

fn run(cli: &Cli) -> Result<()> {
    let artifact = match &cli.cmd {
        Cmd::Displace => {
            let cfg = load_config(cli)?;
            let action = cfg.tree_action()?;
            let u = cfg.marked_set()?;
            let md = min_displacement(&action, &u.elements)?;
            let (p, lam4) = min_displacement_subdivided(&action, &u.elements)?;
            let o = action.base();
            let qc = quasi_center(&action, &u.elements, &o, &o)?;
            cert_to_toml(&DisplaceArtifact {
                lambda: md.lambda,
                witness: format!("{:?}", md.witness),
                descent_steps: md.descent_steps,
                lambda4: lam4,
                quarter_minimizer: format!("{:02x?}", point_key(&p)),
                quasi_center_lambda: qc.lambda_at_z,
                quasi_center_bound: qc.bound,
                s_max: action.spec.format_word(&qc.s_max),
            })?
        }
        Cmd::Transfer => {
            let cfg = load_config(cli)?;
            let p = cfg.product_action()?;
            let u = cfg.marked_set()?;
            let m = cfg.params.m.unwrap_or(1);
            let report = factor_transfer(&p, &u.elements, m)?;
            let artifact = cert_to_toml(&report)?;
            if report.factor.is_none() {
                // theorem hypothesis unmet: emit the counterexample data
                // (all factor values), then exit 3
                emit(cli, &artifact)?;
                return Err(Error::Inconclusive(format!(
                    "no factor exceeds M = {m}: lambda per factor {:?}",
                    report.lambda_per_factor
                )));
            }
            artifact
        }
        Cmd::Loxo => {
            let cfg = load_config(cli)?;
            let action = cfg.tree_action()?;
            let u = cfg.marked_set()?;
            cert_to_toml(&short_loxodromic(&action, &u.elements)?)?
        }
        Cmd::Pingpong => {
            let cfg = load_config(cli)?;
            let action = cfg.tree_action()?;
            let u = cfg.marked_set()?;
            if u.elements.len() < 2 {
                return Err(Error::Config("pingpong needs two words in `set`".into()));
            }
            let spec = cfg.spec()?;
            let g = cfg.parse_word_spec(&spec, &cfg.set[0])?;
            let h = cfg.parse_word_spec(&spec, &cfg.set[1])?;
            let depth = cfg.params.depth.unwrap_or(6);
            cert_to_toml(&pingpong_pair(&action, &g, &h, depth)?)?
        }
        Cmd::Freebase => {
            let cfg = load_config(cli)?;
            let action = cfg.tree_action()?;
            let u = cfg.marked_set()?;
            let depth = cfg.params.depth.unwrap_or(5);
            let cert =
                build_free_base(&action, &u, depth, cfg.caps.f_word_bound, cfg.caps.search)?;
            cert_to_toml(&cert)?
        }
        Cmd::Schreier => {
            let cfg = load_config(cli)?;
            let spec = cfg.spec()?;
            let u = cfg.marked_set()?;
            let qc = cfg
                .quotient
                .as_ref()
                .ok_or_else(|| Error::Config("schreier requires a [quotient] table".into()))?;
            let q = qc.to_quotient(&spec)?;
            let h = qc.designator()?;
            cert_to_toml(&schreier_generators(&u, &q, &h, &cfg.verify_params())?)?
        }
        Cmd::Growth => {
            let cfg = load_config(cli)?;
            let u = cfg.marked_set()?;
            let n_max = cfg.params.n_max.unwrap_or(10);
            let series = product_set_counts(&u, n_max, cfg.caps.elements)?;
            let fit = match (cfg.params.alpha()?, cfg.params.beta()?) {
                (Some(a), Some(b)) => Some(psg_check(&series, a, b)?),
                _ => None,
            };
            let rates = growth_rate(&series)?;
            growth_csv(&series, fit.as_ref(), &rates)?
        }
        Cmd::Commutators => {
            let cfg = load_config(cli)?;
            let spec = cfg.spec()?;
            let u = cfg.marked_set()?;
            let n_max = cfg.params.n_max.unwrap_or(4);
            let c = cfg
                .params
                .c()?
                .ok_or_else(|| Error::Config("commutators requires params.c".into()))?;
            let reports: Vec<_> = (1..=n_max)
                .map(|n| commutator_set(&u, n, c, cfg.caps.elements, cfg.caps.witnesses))
                .collect::<Result<_>>()?;
            commutators_csv(&spec, &reports)?
        }
        Cmd::Classify => {
            let cfg = load_config(cli)?;
            let action = cfg.tree_action()?;
            let u = cfg.marked_set()?;
            let depth = cfg.params.depth.unwrap_or(4);
            cert_to_toml(&classify_action(&action, &u, depth, cfg.caps.elements)?)?
        }
        Cmd::Chain => {
            let cfg = load_config(cli)?;
            let u = cfg.marked_set()?;
            let n_max = cfg.params.n_max.unwrap_or(10);
            let d = cfg
                .params
                .index
                .ok_or_else(|| Error::Config("chain requires params.index".into()))?;
            let alpha = cfg
                .params
                .alpha()?
                .ok_or_else(|| Error::Config("chain requires params.alpha".into()))?;
            let beta = cfg
                .params
                .beta()?
                .ok_or_else(|| Error::Config("chain requires params.beta".into()))?;
            let series = product_set_counts(&u, n_max, cfg.caps.elements)?;
            let verdict = chain_psg_bound(&series.counts, u.len() as u64, d, alpha, beta)?;
            chain_csv(&series.counts, &verdict)?
        }
        Cmd::Suite { criterion } => {
            let reports = match criterion {
                Some(id) => vec![run_criterion(*id)?],
                None => run_all()?,
            };
            let mut text = String::new();
            for r in &reports {
                let line = format_line(r);
                println!("{line}");
                text.push_str(&line);
                text.push('\n');
            }
            if let Some(path) = &cli.out {
                write_suite_csv(path, &reports, cli.verify)?;
            }
            if reports.iter().any(|r| !r.passed) {
                return Err(Error::InvariantViolation(
                    "acceptance criteria failed; see the lines above".into(),
                ));
            }
            return Ok(());
        }
    };
    emit(cli, &artifact)
}

fn write_suite_csv(
    path: &Path,
    reports: &[growthlab::suite::CriterionReport],
    verify: bool,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    w.write_record(["id", "name", "passed", "detail"])
        .map_err(|e| Error::Config(e.to_string()))?;
    for r in reports {
        w.write_record([
            r.id.to_string(),
            r.name.clone(),
            r.passed.to_string(),
            r.detail.clone(),
        ])
        .map_err(|e| Error::Config(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    let text = String::from_utf8(bytes).map_err(|e| Error::Config(e.to_string()))?;
    if verify {
        let existing = std::fs::read_to_string(path)?;
        if existing != text {
            return Err(Error::InvariantViolation(format!(
                "suite table at {} does not match recomputation",
                path.display()
            )));
        }
        Ok(())
    } else {
        std::fs::write(path, text)?;
        Ok(())
    }
}

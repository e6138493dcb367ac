//! The experiment commands behind the CLI.

use std::fmt::Write as _;
use std::path::Path;

use backsample::decode::{DecodeSession, SampleRecord, SessionConfig, Strategy};
use backsample::oracle::{
    chi_square_p, em_at_k, kl_divergence, sliding_window_kl, tv_distance, EmpiricalDistribution,
    ExactDistribution,
};
use backsample::{CoreError, Prefix};

use crate::config::{ExperimentConfig, RunConfig};
use crate::error::{CliError, Result};
use crate::instance::{build, Instance, Problem};

const EM_KS: [u64; 5] = [1, 3, 5, 10, 20];
/// Node budget for per-problem oracle enumeration in metrics.
const ENUM_BUDGET: u64 = 1_000_000;
const ENUM_MAX_LEN: usize = 16;

fn session_config(run: &RunConfig, seed: u64) -> SessionConfig {
    SessionConfig {
        seed,
        greedy: run.greedy,
        top_p: run.top_p,
        max_backtrack: if run.max_backtrack == 0 {
            None
        } else {
            Some(run.max_backtrack)
        },
        max_model_calls: run.max_model_calls,
        max_len: 256,
        share_q: run.share_q,
        check_q: false,
        fused_rejection: true,
        fault_skip_rejection: run.fault_skip_rejection,
    }
}

fn draw_one(session: &mut DecodeSession, strategy: Strategy) -> backsample::Result<SampleRecord> {
    match strategy {
        Strategy::Unconstrained => session.sample_unconstrained(),
        Strategy::Constrained => session.sample_constrained_greedy(),
        Strategy::Asap => session.asap_sample(),
        Strategy::Backtrack => session.backtrack_sample(),
    }
}

/// Per-problem seed: every strategy uses the same seed on the same problem.
fn problem_seed(run_seed: u64, problem_idx: usize) -> u64 {
    run_seed.wrapping_add(problem_idx as u64)
}

struct CallStats {
    samples: u64,
    model_calls: u64,
    min_calls: u64,
    max_calls: u64,
    constrainer_calls: u64,
    backtracks: u64,
}

impl CallStats {
    fn new() -> Self {
        Self {
            samples: 0,
            model_calls: 0,
            min_calls: u64::MAX,
            max_calls: 0,
            constrainer_calls: 0,
            backtracks: 0,
        }
    }

    fn add(&mut self, rec: &SampleRecord) {
        self.samples += 1;
        self.model_calls += rec.model_calls;
        self.min_calls = self.min_calls.min(rec.model_calls);
        self.max_calls = self.max_calls.max(rec.model_calls);
        self.constrainer_calls += rec.constrainer_calls;
        self.backtracks += rec.backtracks;
    }
}

/// Runs every configured strategy over every problem, writes one sequence
/// file per strategy, optional sliding-window KL series, and a metrics file
/// with per-problem rows and a per-strategy call-count summary.
pub fn cmd_sample(cfg: &ExperimentConfig) -> Result<()> {
    let instance = build(&cfg.instance)?;
    let out = &cfg.run.out;
    std::fs::create_dir_all(out)?;
    let strategies = cfg.strategies()?;
    let multi = instance.problems.len() > 1;

    let mut metrics = String::new();
    writeln!(metrics, "# format = backsample-metrics-v1").unwrap();
    writeln!(metrics, "# instance = {}", instance.kind).unwrap();
    writeln!(metrics, "# seed = {}", cfg.run.seed).unwrap();
    writeln!(metrics, "# samples_per_problem = {}", cfg.run.samples).unwrap();
    writeln!(metrics, "# top_p = {}", cfg.run.top_p).unwrap();
    writeln!(metrics, "# max_backtrack = {}", cfg.run.max_backtrack).unwrap();
    writeln!(metrics, "# share_q = {}", cfg.run.share_q).unwrap();
    writeln!(
        metrics,
        "# columns: problem strategy seed n kl em1 em3 em5 em10 em20"
    )
    .unwrap();

    let mut summaries = Vec::new();
    for &strategy in &strategies {
        let mut lines = String::new();
        let mut stats = CallStats::new();
        for (idx, problem) in instance.problems.iter().enumerate() {
            let seed = problem_seed(cfg.run.seed, idx);
            let mut session = DecodeSession::new(
                problem.model.as_ref(),
                problem.constrainer.as_ref(),
                session_config(&cfg.run, seed),
            );
            let mut sequences = Vec::with_capacity(cfg.run.samples as usize);
            for _ in 0..cfg.run.samples {
                let rec = draw_one(&mut session, strategy)?;
                stats.add(&rec);
                sequences.push(rec.sequence);
            }
            for seq in &sequences {
                let text = instance.vocab.render(seq, ".");
                if multi {
                    writeln!(lines, "{}\t{}", problem.id, text).unwrap();
                } else {
                    writeln!(lines, "{text}").unwrap();
                }
            }
            let row = problem_row(problem, &instance, strategy, seed, &sequences)?;
            metrics.push_str(&row);
            if cfg.run.kl_window > 0 {
                write_kl_series(out, strategy, problem, &sequences, cfg.run.kl_window)?;
            }
        }
        std::fs::write(out.join(format!("samples_{strategy}.txt")), lines)?;
        summaries.push((strategy, stats));
    }

    writeln!(
        metrics,
        "# summary columns: strategy n calls_avg calls_min calls_max constrainer_calls backtracks"
    )
    .unwrap();
    for (strategy, s) in &summaries {
        writeln!(
            metrics,
            "{strategy} {} {:.4} {} {} {} {}",
            s.samples,
            s.model_calls as f64 / s.samples as f64,
            s.min_calls,
            s.max_calls,
            s.constrainer_calls,
            s.backtracks
        )
        .unwrap();
    }
    std::fs::write(out.join("metrics.txt"), metrics)?;
    Ok(())
}

fn problem_row(
    problem: &Problem,
    instance: &Instance,
    strategy: Strategy,
    seed: u64,
    sequences: &[Prefix],
) -> Result<String> {
    let n = sequences.len() as u64;
    let emp = EmpiricalDistribution::from_samples(sequences);
    let kl = match oracle_for(problem) {
        Ok(exact) => {
            match kl_divergence(&emp, problem.model.as_ref(), Some(exact.z().ln())) {
                Ok(v) => format!("{v:.6}"),
                // Unconstrained samples can leave the oracle support.
                Err(CoreError::ZeroProbabilitySample(_)) => "-".into(),
                Err(e) => return Err(e.into()),
            }
        }
        Err(CoreError::InstanceTooLarge { .. }) => "-".into(),
        Err(e) => return Err(e.into()),
    };
    let mut row = format!("{} {strategy} {seed} {n} {kl}", problem.id);
    let correct = problem
        .target
        .as_ref()
        .map(|t| sequences.iter().filter(|s| *s == t).count() as u64);
    for k in EM_KS {
        match correct {
            Some(c) if k <= n => {
                write!(row, " {:.6}", em_at_k(n, c, k)?).unwrap();
            }
            _ => row.push_str(" -"),
        }
    }
    row.push('\n');
    let _ = instance;
    Ok(row)
}

fn oracle_for(problem: &Problem) -> backsample::Result<ExactDistribution> {
    ExactDistribution::enumerate(
        problem.model.as_ref(),
        problem.constrainer.as_ref(),
        ENUM_MAX_LEN,
        ENUM_BUDGET,
    )
}

fn write_kl_series(
    out: &Path,
    strategy: Strategy,
    problem: &Problem,
    sequences: &[Prefix],
    window: usize,
) -> Result<()> {
    if window > sequences.len() {
        return Err(CliError::Config(format!(
            "kl_window {window} exceeds sample count {}",
            sequences.len()
        )));
    }
    let add_log_z = match oracle_for(problem) {
        Ok(exact) => Some(exact.z().ln()),
        Err(CoreError::InstanceTooLarge { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let series = sliding_window_kl(sequences, window, problem.model.as_ref(), add_log_z)?;
    let mut text = format!("# window = {window}\n# problem = {}\n", problem.id);
    for v in series {
        writeln!(text, "{v:.6}").unwrap();
    }
    std::fs::write(out.join(format!("kl_{strategy}_{}.txt", problem.id)), text)?;
    Ok(())
}

/// Compares the backtracking sampler against exhaustive enumeration on every
/// problem of the instance. Prints one report line per problem and fails with
/// a dedicated exit code if any problem misses the distance threshold.
pub fn cmd_oracle_check(cfg: &ExperimentConfig) -> Result<()> {
    let instance = build(&cfg.instance)?;
    let n = cfg.run.oracle_samples;
    let mut failed = 0usize;
    for (idx, problem) in instance.problems.iter().enumerate() {
        let exact = oracle_for(problem)?;
        let seed = problem_seed(cfg.run.seed, idx);
        let mut session = DecodeSession::new(
            problem.model.as_ref(),
            problem.constrainer.as_ref(),
            session_config(&cfg.run, seed),
        );
        let mut emp = EmpiricalDistribution::new();
        for _ in 0..n {
            emp.record(&session.backtrack_sample()?.sequence);
        }
        let tv = tv_distance(&emp, &exact);
        let threshold = 3.0 * (exact.len() as f64 / n as f64).sqrt();
        let p = chi_square_p(&emp, &exact, 5.0).unwrap_or(0.0);
        let pass = tv < threshold;
        if !pass {
            failed += 1;
        }
        println!(
            "{} leaves={} tv={tv:.6} threshold={threshold:.6} chi2_p={p:.4} {}",
            problem.id,
            exact.len(),
            if pass { "PASS" } else { "FAIL" }
        );
    }
    if failed > 0 {
        return Err(CliError::OracleFailed {
            failed,
            total: instance.problems.len(),
        });
    }
    println!("oracle check passed on all {} problems", instance.problems.len());
    Ok(())
}

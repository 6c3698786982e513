//! Paired MU-vs-DNA runs from one shared initial state.

use std::fmt;

use crate::driver::{
    initialize, ConvergenceRecord, Driver, FactorizationState, Problem, SolverConfig,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmSummary {
    pub algorithm: String,
    pub iterations: usize,
    pub final_objective: f64,
    /// Solver time over all iterations, initialization excluded.
    pub total_ms: f64,
    pub mean_ms_per_iter: f64,
    /// First iteration whose objective is at or below MU's final objective.
    pub crossover: Option<usize>,
    /// Cumulative solver time up to and including the crossover iteration.
    pub ms_to_crossover: Option<f64>,
    pub records: Vec<ConvergenceRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub mu: AlgorithmSummary,
    pub dna: AlgorithmSummary,
    /// Mean ms/iteration of MU with cost evaluation switched off.
    pub mu_no_cost_ms_per_iter: Option<f64>,
    /// Hash of the `(W, H)` both runs started from.
    pub start_fingerprint: u64,
}

impl BenchReport {
    /// DNA ms/iteration over MU-with-cost ms/iteration.
    pub fn time_ratio(&self) -> f64 {
        self.dna.mean_ms_per_iter / self.mu.mean_ms_per_iter
    }

    /// MU iterations divided by DNA's crossover iteration.
    pub fn iteration_speedup(&self) -> Option<f64> {
        self.dna
            .crossover
            .filter(|&c| c > 0)
            .map(|c| self.mu.iterations as f64 / c as f64)
    }

    /// MU total time divided by DNA's time to crossover.
    pub fn time_speedup(&self) -> Option<f64> {
        self.dna
            .ms_to_crossover
            .filter(|&t| t > 0.0)
            .map(|t| self.mu.total_ms / t)
    }
}

fn fmt_opt<T: fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<10} {:>10} {:>22} {:>12} {:>12} {:>10}",
            "algorithm", "iterations", "final objective", "total ms", "ms/iter", "crossover"
        )?;
        for s in [&self.mu, &self.dna] {
            writeln!(
                f,
                "{:<10} {:>10} {:>22.12e} {:>12.1} {:>12.3} {:>10}",
                s.algorithm,
                s.iterations,
                s.final_objective,
                s.total_ms,
                s.mean_ms_per_iter,
                fmt_opt(s.crossover)
            )?;
        }
        if let Some(ms) = self.mu_no_cost_ms_per_iter {
            writeln!(f, "mu without cost: {ms:.3} ms/iter")?;
        }
        writeln!(f, "ms/iter ratio dna/mu: {:.1}", self.time_ratio())?;
        writeln!(
            f,
            "speed-up at crossover: {} in iterations, {} in time",
            fmt_opt(self.iteration_speedup().map(|s| format!("{s:.1}"))),
            fmt_opt(self.time_speedup().map(|s| format!("{s:.1}")))
        )
    }
}

/// Runs both algorithms from the seeded initialization.
pub fn run_bench(
    problem: &Problem,
    config: &SolverConfig,
    with_no_cost: bool,
) -> Result<BenchReport> {
    let start = initialize(problem, config)?;
    run_bench_from(problem, config, start, with_no_cost)
}

/// Runs MU for `max_iters`, then DNA and optionally cost-free MU, each from a
/// copy of `start`. `config.algorithm` is ignored.
pub fn run_bench_from(
    problem: &Problem,
    config: &SolverConfig,
    start: FactorizationState,
    with_no_cost: bool,
) -> Result<BenchReport> {
    let fingerprint = start.fingerprint();
    let base = SolverConfig {
        log_every: 1,
        compute_cost: true,
        ..config.clone()
    };

    let mu_records = run_from(problem, &base, "mu", &start, fingerprint)?;
    let target = final_total(&mu_records)?;
    let dna_records = run_from(problem, &base, "dna", &start, fingerprint)?;

    let mu_no_cost_ms_per_iter = if with_no_cost {
        let cfg = SolverConfig {
            compute_cost: false,
            rel_tol: 0.0,
            ..base.clone()
        };
        let records = run_from(problem, &cfg, "mu", &start, fingerprint)?;
        Some(mean_ms(&records))
    } else {
        None
    };

    Ok(BenchReport {
        mu: summarize("mu", mu_records, target)?,
        dna: summarize("dna", dna_records, target)?,
        mu_no_cost_ms_per_iter,
        start_fingerprint: fingerprint,
    })
}

fn run_from(
    problem: &Problem,
    base: &SolverConfig,
    algorithm: &str,
    start: &FactorizationState,
    fingerprint: u64,
) -> Result<Vec<ConvergenceRecord>> {
    let config = SolverConfig {
        algorithm: algorithm.into(),
        ..base.clone()
    };
    let driver = Driver::from_state(problem, config, start.clone())?;
    if driver.state().fingerprint() != fingerprint {
        return Err(Error::Config(format!(
            "{algorithm} run did not start from the shared state"
        )));
    }
    Ok(driver.run()?.records)
}

fn final_total(records: &[ConvergenceRecord]) -> Result<f64> {
    records
        .last()
        .and_then(|r| r.objective)
        .map(|o| o.total)
        .ok_or_else(|| Error::Config("benchmark run produced no objective".into()))
}

fn mean_ms(records: &[ConvergenceRecord]) -> f64 {
    let iters = &records[1.min(records.len())..];
    if iters.is_empty() {
        0.0
    } else {
        iters.iter().map(|r| r.wall_ms).sum::<f64>() / iters.len() as f64
    }
}

fn summarize(
    algorithm: &str,
    records: Vec<ConvergenceRecord>,
    target: f64,
) -> Result<AlgorithmSummary> {
    let final_objective = final_total(&records)?;
    let mut elapsed = 0.0;
    let mut crossover = None;
    for r in &records {
        if r.iteration > 0 {
            elapsed += r.wall_ms;
        }
        if r.objective.is_some_and(|o| o.total <= target) {
            crossover = Some((r.iteration, elapsed));
            break;
        }
    }
    let total_ms = records.iter().skip(1).map(|r| r.wall_ms).sum();
    Ok(AlgorithmSummary {
        algorithm: algorithm.into(),
        iterations: records.last().map_or(0, |r| r.iteration),
        final_objective,
        total_ms,
        mean_ms_per_iter: mean_ms(&records),
        crossover: crossover.map(|c| c.0),
        ms_to_crossover: crossover.map(|c| c.1),
        records,
    })
}

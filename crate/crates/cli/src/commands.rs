use std::path::{Path, PathBuf};

use klnmf::bench::{run_bench, run_bench_from, BenchReport};
use klnmf::io::{self, MatrixFormat, PlotRun, TimingColumn};
use klnmf::solver::DnaParams;
use klnmf::synth::{generate, Noise, SynthConfig};
use klnmf::{DataMatrix, DenseMatrix, Driver, FactorizationState, Problem, SolverConfig};

use crate::args::{BenchArgs, FactorizeArgs, GenArgs, NoiseArg, SolverArgs};
use crate::error::{file_error, CliError};

fn config_from(args: &SolverArgs, algorithm: &str) -> SolverConfig {
    SolverConfig {
        rank: args.rank,
        rho: args.rho,
        lambda: args.lambda,
        params: DnaParams {
            epsilon: args.epsilon,
            alpha: args.alpha,
        },
        max_iters: args.max_iters,
        rel_tol: args.rel_tol,
        seed: args.seed,
        algorithm: algorithm.into(),
        ..SolverConfig::default()
    }
}

fn timing(args: &SolverArgs) -> TimingColumn {
    if args.no_timing {
        TimingColumn::Zeroed
    } else {
        TimingColumn::Measured
    }
}

fn read(path: &Path) -> Result<DataMatrix, CliError> {
    io::read_matrix(path).map_err(file_error(path))
}

fn read_dense(path: &Path) -> Result<DenseMatrix, CliError> {
    Ok(read(path)?.to_dense())
}

fn write_dense(m: &DenseMatrix, path: &Path) -> Result<(), CliError> {
    let data = DataMatrix::Dense(m.clone());
    let format = MatrixFormat::for_path(path, &data);
    io::write_matrix(&data, path, format).map_err(file_error(path))
}

fn start_state(
    problem: &Problem,
    init_w: &Option<PathBuf>,
    init_h: &Option<PathBuf>,
) -> Result<Option<FactorizationState>, CliError> {
    match (init_w, init_h) {
        (Some(w), Some(h)) => {
            let state = FactorizationState::from_factors(problem, read_dense(w)?, read_dense(h)?)?;
            Ok(Some(state))
        }
        _ => Ok(None),
    }
}

pub fn factorize(args: &FactorizeArgs) -> Result<(), CliError> {
    if args.no_cost && args.algo.name() != "mu" {
        return Err(CliError::Usage(
            "--no-cost is only available with --algo mu".into(),
        ));
    }
    let problem = Problem::new(read(&args.solver.input)?);
    let mut config = config_from(&args.solver, args.algo.name());
    config.compute_cost = !args.no_cost;

    let driver = match start_state(&problem, &args.init_w, &args.init_h)? {
        Some(state) => Driver::from_state(&problem, config, state)?,
        None => Driver::new(&problem, config)?,
    };
    let out = driver.run()?;

    let last = out
        .records
        .last()
        .expect("a run always has its initial record");
    match last.objective {
        Some(o) => println!("{} iterations, objective {:.12e}", last.iteration, o.total),
        None => println!("{} iterations", last.iteration),
    }
    if let Some(path) = &args.out_w {
        write_dense(&out.w, path)?;
    }
    if let Some(path) = &args.out_h {
        write_dense(&out.h, path)?;
    }
    if let Some(path) = &args.solver.log {
        io::write_convergence_log(&out.records, path, timing(&args.solver))
            .map_err(file_error(path))?;
    }
    if let Some(path) = &args.solver.plot {
        let runs = [PlotRun {
            label: args.algo.name(),
            records: &out.records,
        }];
        io::write_svg_plot(&runs, path).map_err(file_error(path))?;
    }
    Ok(())
}

/// `run.csv` → `run.mu.csv`.
pub fn tagged_path(path: &Path, tag: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{tag}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{tag}"),
    };
    path.with_file_name(name)
}

pub fn bench(args: &BenchArgs) -> Result<BenchReport, CliError> {
    let problem = Problem::new(read(&args.solver.input)?);
    let config = config_from(&args.solver, "dna");
    let report = match start_state(&problem, &args.init_w, &args.init_h)? {
        Some(state) => run_bench_from(&problem, &config, state, args.no_cost)?,
        None => run_bench(&problem, &config, args.no_cost)?,
    };
    print!("{report}");

    if let Some(path) = &args.solver.log {
        for s in [&report.mu, &report.dna] {
            let p = tagged_path(path, &s.algorithm);
            io::write_convergence_log(&s.records, &p, timing(&args.solver))
                .map_err(file_error(&p))?;
        }
    }
    if let Some(path) = &args.solver.plot {
        let runs = [
            PlotRun {
                label: "mu",
                records: &report.mu.records,
            },
            PlotRun {
                label: "dna",
                records: &report.dna.records,
            },
        ];
        io::write_svg_plot(&runs, path).map_err(file_error(path))?;
    }
    Ok(report)
}

pub fn gen(args: &GenArgs) -> Result<(), CliError> {
    let config = SynthConfig {
        rows: args.n,
        cols: args.t,
        rank: args.r,
        density: args.density,
        noise: match args.noise {
            NoiseArg::None => Noise::None,
            NoiseArg::Poisson => Noise::Poisson,
        },
        scale: args.scale,
        seed: args.seed,
    };
    let data = generate(&config)?;
    let format = MatrixFormat::for_path(&args.output, &data.v);
    io::write_matrix(&data.v, &args.output, format).map_err(file_error(&args.output))?;
    if let Some(path) = &args.out_w {
        write_dense(&data.w, path)?;
    }
    if let Some(path) = &args.out_h {
        write_dense(&data.h, path)?;
    }
    println!(
        "{}x{} matrix with {} stored entries written to {}",
        args.n,
        args.t,
        data.v.support_len(),
        args.output.display()
    );
    Ok(())
}

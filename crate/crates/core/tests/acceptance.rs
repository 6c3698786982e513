//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::{dense, rel_diff, rng};
use klnmf::bench::run_bench;
use klnmf::driver::{kkt_residual, Driver, Problem, SolverConfig};
use klnmf::io::{
    format_convergence_log, parse_csv, parse_matrix_market, read_matrix, write_csv, write_matrix,
    write_matrix_market_array, write_matrix_market_coordinate, MatrixFormat, TimingColumn,
};
use klnmf::objective::kl_divergence;
use klnmf::synth::{generate, Noise, SynthConfig};
use klnmf::tensor::matmul;
use klnmf::{ConvergenceRecord, DataMatrix, DenseMatrix, SparseMatrix};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn poisson(rows: usize, cols: usize, rank: usize, seed: u64, density: f64) -> DataMatrix {
    let mut cfg = SynthConfig::new(rows, cols, rank);
    cfg.noise = Noise::Poisson;
    cfg.seed = seed;
    cfg.density = density;
    generate(&cfg).unwrap().v
}

fn config(rank: usize, algo: &str, seed: u64, iters: usize) -> SolverConfig {
    let mut cfg = SolverConfig::new(rank, algo);
    cfg.seed = seed;
    cfg.max_iters = iters;
    cfg
}

fn totals(records: &[ConvergenceRecord]) -> Vec<f64> {
    records.iter().map(|r| r.objective.unwrap().total).collect()
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn monotonicity() -> Outcome {
    let start = Instant::now();
    let mut g = rng(1);
    let mut worst = f64::NEG_INFINITY;
    let mut failures = 0;
    for trial in 0..100u64 {
        let n = g.random_range(10..=60);
        let t = g.random_range(10..=60);
        let r = g.random_range(2..=8);
        let v = poisson(n, t, r, trial, 1.0);
        for algo in ["mu", "dna"] {
            let trace = totals(
                &klnmf::run(&v, &config(r, algo, trial, 100))
                    .unwrap()
                    .records,
            );
            let slack = 1e-12 * trace[0];
            let rise = trace
                .windows(2)
                .map(|w| (w[1] - w[0]) / trace[0])
                .fold(f64::NEG_INFINITY, f64::max);
            worst = worst.max(rise);
            if trace.windows(2).any(|w| w[1] > w[0] + slack) {
                failures += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failures == 0 && secs < 60.0,
        format!("200 runs x 100 iterations, {failures} violations, largest relative step {worst:.3e}, {secs:.1} s"),
    )
}

fn kkt_convergence() -> Outcome {
    let problem = Problem::new(poisson(30, 20, 3, 2, 1.0));
    let cfg = config(3, "dna", 2, 2000);
    let mut d = Driver::new(&problem, cfg.clone()).unwrap();
    for _ in 0..2000 {
        d.iterate().unwrap();
    }
    let residual = kkt_residual(&problem, d.state(), &cfg);
    outcome(
        residual < 1e-8,
        format!("residual {residual:.3e} (bound 1e-8)"),
    )
}

fn exact_recovery() -> Outcome {
    let mut g = rng(3);
    let w = dense(&mut g, 20, 3, 0.1);
    let h = dense(&mut g, 3, 15, 0.1);
    let problem = Problem::new(DataMatrix::Dense(matmul(&w, &h).unwrap()));
    let mut worst = 0.0_f64;
    for algo in ["mu", "dna"] {
        let out = Driver::from_factors(&problem, config(3, algo, 0, 50), w.clone(), h.clone())
            .unwrap()
            .run()
            .unwrap();
        worst = totals(&out.records)
            .into_iter()
            .fold(worst, |m, o| m.max(o.abs()));
    }
    outcome(
        worst < 1e-12,
        format!("largest objective over 50 iterations {worst:.3e} (bound 1e-12)"),
    )
}

/// Minimizer of a unimodal function on `[lo, hi]`.
fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

fn one_dimensional_oracle() -> Outcome {
    let mut g = rng(4);
    let v = dense(&mut g, 5, 10, 0.0);
    let out = klnmf::run(&DataMatrix::Dense(v.clone()), &config(1, "dna", 4, 200)).unwrap();
    let w = out.w.col(0).to_vec();
    let mut worst = 0.0_f64;
    for c in 0..10 {
        let col = v.col(c);
        let scalar_kl = |h: f64| -> f64 {
            col.iter()
                .zip(&w)
                .map(|(&x, &wn)| {
                    let z = wn * h;
                    if x > 0.0 {
                        x * (x / z).ln() - x + z
                    } else {
                        z
                    }
                })
                .sum()
        };
        let hi = 10.0 * col.iter().sum::<f64>() / w.iter().sum::<f64>();
        let oracle = golden_section(scalar_kl, 0.0, hi);
        worst = worst.max(rel_diff(out.h.get(0, c), oracle));
    }
    outcome(
        worst <= 1e-6,
        format!("largest relative gap to golden section {worst:.3e} (bound 1e-6)"),
    )
}

struct SpeedInstance {
    crossover: Option<usize>,
    mu_iters: usize,
    iteration_speedup: Option<f64>,
    time_speedup: Option<f64>,
    ratio: f64,
}

fn speed_instance() -> SpeedInstance {
    let problem = Problem::new(poisson(200, 150, 20, 5, 1.0));
    let cfg = config(20, "dna", 5, 500);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let report = pool.install(|| run_bench(&problem, &cfg, false)).unwrap();
    let per_iter = |rs: &[ConvergenceRecord]| median(rs[1..].iter().map(|r| r.wall_ms).collect());
    SpeedInstance {
        crossover: report.dna.crossover,
        mu_iters: report.mu.iterations,
        iteration_speedup: report.iteration_speedup(),
        time_speedup: report.time_speedup(),
        ratio: per_iter(&report.dna.records) / per_iter(&report.mu.records),
    }
}

fn convergence_speed(s: &SpeedInstance) -> Outcome {
    let bound = s.mu_iters / 3;
    let fmt = |x: Option<f64>| x.map_or("-".into(), |x| format!("{x:.1}"));
    outcome(
        s.crossover.is_some_and(|c| c <= bound),
        format!(
            "crossover {:?} of {} (bound {bound}); speed-up {} in iterations, {} in time (reported: 15 and 6.3)",
            s.crossover,
            s.mu_iters,
            fmt(s.iteration_speedup),
            fmt(s.time_speedup)
        ),
    )
}

fn cost_ratio(s: &SpeedInstance) -> Outcome {
    outcome(
        (1.2..=4.0).contains(&s.ratio),
        format!("median ms/iter dna/mu {:.2} (window [1.2, 4.0])", s.ratio),
    )
}

fn sparse_dense_equivalence() -> Outcome {
    let v = poisson(500, 400, 10, 7, 0.01);
    let d = v.densified();
    let mut worst = 0.0_f64;
    for algo in ["mu", "dna"] {
        let cfg = config(10, algo, 7, 100);
        let a = totals(&klnmf::run(&v, &cfg).unwrap().records);
        let b = totals(&klnmf::run(&d, &cfg).unwrap().records);
        worst = worst.max(
            a.iter()
                .zip(&b)
                .map(|(x, y)| rel_diff(*x, *y))
                .fold(0.0, f64::max),
        );
    }
    outcome(
        v.is_sparse() && worst <= 1e-10,
        format!(
            "nnz {}, largest relative trace gap {worst:.3e} (bound 1e-10)",
            v.nnz()
        ),
    )
}

fn conservation() -> Outcome {
    let problem = Problem::new(poisson(40, 30, 4, 8, 1.0));
    let target = problem.col_sums().to_vec();
    let mut worst = 0.0_f64;
    for algo in ["mu", "dna"] {
        let mut d = Driver::new(&problem, config(4, algo, 8, 50)).unwrap();
        for _ in 0..50 {
            d.h_phase().unwrap();
            let sums = d.state().reconstruction().column_sums();
            worst = sums
                .iter()
                .zip(&target)
                .map(|(a, b)| rel_diff(*a, *b))
                .fold(worst, f64::max);
            d.normalize_h();
            d.w_phase().unwrap();
            d.normalize_w();
        }
    }
    outcome(
        worst <= 1e-10,
        format!("largest relative column-sum gap {worst:.3e} (bound 1e-10)"),
    )
}

fn determinism() -> Outcome {
    let v = poisson(60, 50, 5, 9, 1.0);
    let cfg = config(5, "dna", 9, 50);
    let log = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            format_convergence_log(&klnmf::run(&v, &cfg).unwrap().records, TimingColumn::Zeroed)
        })
    };
    let logs = [log(1), log(1), log(4), log(4)];
    let same = logs.iter().all(|l| l == &logs[0]);
    outcome(
        same,
        format!(
            "4 runs at 1 and 4 threads, {} distinct logs",
            if same { 1 } else { 2 }
        ),
    )
}

fn random_matrix(g: &mut impl Rng, k: usize) -> DataMatrix {
    let value = |g: &mut dyn rand::RngCore| -> f64 {
        match g.random_range(0..5) {
            0 => 0.0,
            1 => g.random::<f64>() * 1e3,
            2 => f64::from_bits(g.random::<u64>() >> 2),
            3 => g.random_range(0..100) as f64,
            _ => g.random::<f64>() * 1e-300,
        }
    };
    match k {
        0 => DataMatrix::Sparse(SparseMatrix::empty(0, 0)),
        1 => DataMatrix::Sparse(SparseMatrix::empty(3, 5)),
        2 => DataMatrix::Sparse(SparseMatrix::from_triplets(1, 1, &[(0, 0, 0.5)]).unwrap()),
        3 => DataMatrix::Dense(DenseMatrix::from_rows(&[[0.5]]).unwrap()),
        _ => {
            let r = g.random_range(1..12);
            let c = g.random_range(1..12);
            let vals: Vec<f64> = (0..r * c).map(|_| value(g)).collect();
            let d = DenseMatrix::from_col_major(r, c, vals).unwrap();
            if k.is_multiple_of(2) {
                DataMatrix::Sparse(SparseMatrix::from_dense(&d))
            } else {
                DataMatrix::Dense(d)
            }
        }
    }
}

fn io_round_trips() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut g = rng(10);
    let mut failures = 0;
    for k in 0..1000 {
        let m = random_matrix(&mut g, k);
        let mut ok = true;
        let mut buf = Vec::new();
        if m.is_sparse() {
            write_matrix_market_coordinate(&m, &mut buf).unwrap();
            ok &= parse_matrix_market(&buf[..]).ok().as_ref() == Some(&m);
        }
        let dense = m.to_dense();
        if dense.rows() > 0 && dense.cols() > 0 {
            buf.clear();
            write_matrix_market_array(&m, &mut buf).unwrap();
            ok &= parse_matrix_market(&buf[..]).ok().map(|x| x.to_dense()) == Some(dense.clone());
            buf.clear();
            write_csv(&dense, &mut buf).unwrap();
            ok &= parse_csv(&buf[..]).ok() == Some(dense.clone());
        }
        if k < 50 {
            let path = dir.path().join(format!("m{k}.mtx"));
            write_matrix(&m, &path, MatrixFormat::for_path(&path, &m)).unwrap();
            ok &= read_matrix(&path).ok().as_ref() == Some(&m);
        }
        failures += usize::from(!ok);
    }
    outcome(
        failures == 0,
        format!("1000 matrices, {failures} mismatches"),
    )
}

fn main() -> ExitCode {
    // sanity: the synthetic generator is exactly low rank without noise
    let s = generate(&SynthConfig::new(20, 15, 3)).unwrap();
    assert_eq!(
        kl_divergence(&s.v, &matmul(&s.w, &s.h).unwrap()).unwrap(),
        0.0
    );

    let speed = speed_instance();
    let results: Vec<(&str, Outcome)> = vec![
        ("1 monotonicity", monotonicity()),
        ("2 KKT convergence", kkt_convergence()),
        ("3 exact-recovery fixed point", exact_recovery()),
        ("4 1-D oracle", one_dimensional_oracle()),
        ("5 convergence speed", convergence_speed(&speed)),
        ("6 per-iteration cost ratio", cost_ratio(&speed)),
        ("7 sparse/dense equivalence", sparse_dense_equivalence()),
        ("8 conservation", conservation()),
        ("9 determinism", determinism()),
        ("10 I/O round trips", io_round_trips()),
    ];
    let mut all = true;
    for (name, o) in &results {
        println!(
            "{} criterion {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        all &= o.pass;
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

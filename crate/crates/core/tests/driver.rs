mod common;

use common::*;
use klnmf::driver::{kkt_residual, objective_of, Driver, Problem, SolverConfig};
use klnmf::io::{format_convergence_log, TimingColumn};
use klnmf::objective::regularized_objective;
use klnmf::tensor::matmul;
use klnmf::{DataMatrix, DenseMatrix};
use proptest::prelude::*;

fn config(rank: usize, algo: &str, seed: u64, iters: usize) -> SolverConfig {
    let mut cfg = SolverConfig::new(rank, algo);
    cfg.seed = seed;
    cfg.max_iters = iters;
    cfg
}

fn totals(records: &[klnmf::ConvergenceRecord]) -> Vec<f64> {
    records.iter().map(|r| r.objective.unwrap().total).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn full_runs_are_monotone(n in 10usize..40, t in 10usize..40, r in 2usize..6, seed in any::<u64>(), algo in prop_oneof![Just("mu"), Just("dna")]) {
        let v = poisson(n, t, r, seed);
        let out = klnmf::run(&v, &config(r, algo, seed, 60)).unwrap();
        let trace = totals(&out.records);
        for w in trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * trace[0], "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn normalization_keeps_the_reconstruction(n in 5usize..30, t in 5usize..30, r in 1usize..6, seed in any::<u64>()) {
        let problem = Problem::new(poisson(n, t, r, seed));
        let mut d = Driver::new(&problem, config(r, "dna", seed, 10)).unwrap();
        d.h_phase().unwrap();
        let before = d.state().reconstruction();
        d.normalize_h();
        prop_assert!(max_rel_diff(d.state().reconstruction().values(), before.values()) <= 1e-12);
        d.w_phase().unwrap();
        let before = d.state().reconstruction();
        d.normalize_w();
        prop_assert!(max_rel_diff(d.state().reconstruction().values(), before.values()) <= 1e-12);
    }

    #[test]
    fn phases_conserve_margins(
        n in 5usize..30, t in 5usize..30, r in 1usize..6, seed in any::<u64>(),
        algo in prop_oneof![Just("mu"), Just("dna")],
        penalty in prop_oneof![Just(0.0), 0.01f64..1.0],
        sparse_in in any::<bool>(),
    ) {
        let mut v = poisson(n, t, r, seed);
        if sparse_in {
            v = DataMatrix::Sparse(klnmf::SparseMatrix::from_dense(&v.to_dense()));
        }
        let problem = Problem::new(v);
        // λ = 0 with ρ free, then ρ = 0 with λ free
        for (rho, lambda) in [(penalty, 0.0), (0.0, penalty)] {
            let mut cfg = config(r, algo, seed, 10);
            cfg.rho = rho;
            cfg.lambda = lambda;
            let mut d = Driver::new(&problem, cfg).unwrap();
            for _ in 0..5 {
                d.h_phase().unwrap();
                if lambda == 0.0 {
                    prop_assert!(rel_close_each(&d.state().reconstruction_col_sums(), problem.col_sums(), 1e-10));
                }
                d.normalize_h();
                d.w_phase().unwrap();
                if rho == 0.0 {
                    prop_assert!(rel_close_each(&d.state().reconstruction_row_sums(), problem.row_sums(), 1e-10));
                }
                d.normalize_w();
            }
        }
    }

    #[test]
    fn sparse_and_dense_paths_agree(n in 5usize..40, t in 5usize..40, r in 1usize..5, seed in any::<u64>(), density in 0.05f64..0.6, algo in prop_oneof![Just("mu"), Just("dna")]) {
        let s = DataMatrix::Sparse(sparse(&mut rng(seed), n, t, density));
        prop_assume!(s.nnz() > 0);
        let d = s.densified();
        let cfg = config(r, algo, seed, 30);
        let a = totals(&klnmf::run(&s, &cfg).unwrap().records);
        let b = totals(&klnmf::run(&d, &cfg).unwrap().records);
        prop_assert!(rel_close_each(&a, &b, 1e-10));
    }
}

#[test]
fn logs_identical_across_runs_and_thread_counts() {
    let v = poisson(40, 30, 4, 7);
    let cfg = config(4, "dna", 3, 40);
    let log_with = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            let out = klnmf::run(&v, &cfg).unwrap();
            (
                format_convergence_log(&out.records, TimingColumn::Zeroed),
                out.w,
                out.h,
            )
        })
    };
    let one = log_with(1);
    assert_eq!(one, log_with(1));
    assert_eq!(one, log_with(4));
}

#[test]
fn mu_trace_non_increasing_on_poisson_30x20() {
    let v = poisson(30, 20, 4, 1);
    let trace = totals(&klnmf::run(&v, &config(4, "mu", 1, 200)).unwrap().records);
    assert_eq!(trace.len(), 201);
    assert!(trace.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn dna_ends_no_worse_than_mu_in_most_trials() {
    let mut wins = 0;
    for seed in 0..100 {
        let v = poisson(30, 20, 4, 1000 + seed);
        let mu = klnmf::run(&v, &config(4, "mu", seed, 200))
            .unwrap()
            .final_objective()
            .unwrap();
        let dna = klnmf::run(&v, &config(4, "dna", seed, 200))
            .unwrap()
            .final_objective()
            .unwrap();
        wins += usize::from(dna <= mu);
    }
    assert!(wins >= 90, "DNA no worse in {wins}/100");
}

#[test]
fn exact_factorization_is_a_fixed_point() {
    let mut g = rng(5);
    let w = dense(&mut g, 20, 3, 0.1);
    let h = dense(&mut g, 3, 15, 0.1);
    let v = DataMatrix::Dense(matmul(&w, &h).unwrap());
    let problem = Problem::new(v);
    for algo in ["mu", "dna"] {
        let out = Driver::from_factors(&problem, config(3, algo, 0, 50), w.clone(), h.clone())
            .unwrap()
            .run()
            .unwrap();
        assert!(
            totals(&out.records).iter().all(|&o| o.abs() < 1e-12),
            "{algo}"
        );
    }
}

#[test]
fn kkt_residual_shrinks_with_iterations() {
    let problem = Problem::new(poisson(20, 15, 3, 2));
    let residual_after = |iters: usize| {
        let cfg = config(3, "dna", 4, iters);
        let mut d = Driver::new(&problem, cfg.clone()).unwrap();
        for _ in 0..iters {
            d.iterate().unwrap();
        }
        kkt_residual(&problem, d.state(), &cfg)
    };
    let (early, late) = (residual_after(10), residual_after(1000));
    assert!(late < early, "{late} !< {early}");
}

#[test]
fn nan_free_on_degenerate_data() {
    // zero rows and columns, huge dynamic range
    let v = DenseMatrix::from_rows(&[
        [0.0, 0.0, 0.0, 0.0],
        [1e-200, 0.0, 3.0, 0.0],
        [1e200, 0.0, 0.0, 2.0],
        [5.0, 0.0, 1e-5, 0.0],
    ])
    .unwrap();
    for algo in ["mu", "dna"] {
        let out = klnmf::run(&DataMatrix::Dense(v.clone()), &config(3, algo, 1, 50)).unwrap();
        assert!(out.w.is_finite() && out.h.is_finite(), "{algo}");
    }
}

#[test]
fn tracked_objective_matches_direct_evaluation() {
    for (sparse_in, rho, lambda) in [
        (false, 0.0, 0.0),
        (true, 0.0, 0.0),
        (false, 0.3, 0.1),
        (true, 0.2, 0.5),
    ] {
        let mut v = poisson(30, 25, 3, 8);
        if sparse_in {
            v = DataMatrix::Sparse(klnmf::SparseMatrix::from_dense(&v.to_dense()));
        }
        let problem = Problem::new(v.clone());
        let mut cfg = config(3, "dna", 2, 20);
        cfg.rho = rho;
        cfg.lambda = lambda;
        let mut d = Driver::new(&problem, cfg.clone()).unwrap();
        for _ in 0..20 {
            let rec = d.iterate().unwrap();
            let s = d.state();
            let direct = regularized_objective(&v, &s.w, &s.h, rho, lambda)
                .unwrap()
                .total;
            assert!(rel_diff(rec.objective.unwrap().total, direct) <= 1e-10);
            assert!(rel_diff(objective_of(&problem, s, &cfg).total, direct) <= 1e-10);
        }
    }
}

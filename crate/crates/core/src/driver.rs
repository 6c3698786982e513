//! Alternating optimization loop.
//!
//! An iteration runs the coefficient half-step on `H`, rescales the rows of
//! `H` to unit mass (moving the scale into `W`), runs the basis half-step on
//! `W`, and rescales the columns of `W` back to unit mass. The rescalings
//! leave `Z = WH` untouched and make every denominator `(Wᵗ1)_r + λ` equal
//! to one; they are only applied when `ρ = λ = 0`, since with a penalty they
//! would change the objective.

use std::sync::Arc;
use std::time::Instant;

use rand::distr::Open01;
use rand::Rng;
use rand_pcg::Pcg32;

use crate::error::{Error, Result};
use crate::objective::{column_divergence_on, recon_col_sums, ObjectiveValue};
use crate::solver::{
    mu::a_matrix, Denominators, DnaParams, HalfProblem, MuRule, PhaseOutcome, SolverRegistry,
    StepOptions, UpdateRule,
};
use crate::tensor::{
    gather_support, matmul_unchecked, ratio_on, reconstruct_on, transpose_product, DataMatrix,
    DenseMatrix,
};

/// PCG stream reserved for factor initialization.
pub const INIT_STREAM: u64 = 0x6e6d_665f_696e_6974;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub rank: usize,
    pub rho: f64,
    pub lambda: f64,
    pub params: DnaParams,
    pub max_iters: usize,
    /// Relative objective decrease below which the run stops; 0 disables.
    pub rel_tol: f64,
    pub seed: u64,
    /// Registry name of the update rule.
    pub algorithm: String,
    /// Keep every `log_every`-th record (the first and last are always kept).
    pub log_every: usize,
    /// Evaluate candidate scores and the objective. Only MU can run without.
    pub compute_cost: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rank: 10,
            rho: 0.0,
            lambda: 0.0,
            params: DnaParams::default(),
            max_iters: 500,
            rel_tol: 0.0,
            seed: 0,
            algorithm: "dna".into(),
            log_every: 1,
            compute_cost: true,
        }
    }
}

impl SolverConfig {
    pub fn new(rank: usize, algorithm: &str) -> Self {
        Self {
            rank,
            algorithm: algorithm.into(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::Config("rank must be at least 1".into()));
        }
        for (name, v) in [
            ("rho", self.rho),
            ("lambda", self.lambda),
            ("rel_tol", self.rel_tol),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} must be finite and non-negative"
                )));
            }
        }
        if self.log_every == 0 {
            return Err(Error::Config("log_every must be at least 1".into()));
        }
        if !self.compute_cost && self.rel_tol > 0.0 {
            return Err(Error::Config("early stopping needs the objective".into()));
        }
        self.params.validate()
    }

    /// Whether the unit-mass rescaling steps apply.
    pub fn normalizes(&self) -> bool {
        self.rho == 0.0 && self.lambda == 0.0
    }

    fn step_options(&self) -> StepOptions {
        StepOptions {
            params: self.params,
            compute_scores: self.compute_cost,
        }
    }
}

/// Data matrix with its transpose and cached margins.
#[derive(Debug, Clone)]
pub struct Problem {
    v: DataMatrix,
    vt: DataMatrix,
    perm: Option<Vec<usize>>,
    col_sums: Vec<f64>,
    row_sums: Vec<f64>,
}

impl Problem {
    pub fn new(v: DataMatrix) -> Self {
        let (vt, perm) = v.transpose_with_permutation();
        Self {
            col_sums: v.column_sums(),
            row_sums: v.row_sums(),
            v,
            vt,
            perm,
        }
    }

    pub fn data(&self) -> &DataMatrix {
        &self.v
    }

    pub fn shape(&self) -> (usize, usize) {
        self.v.shape()
    }

    pub fn col_sums(&self) -> &[f64] {
        &self.col_sums
    }

    pub fn row_sums(&self) -> &[f64] {
        &self.row_sums
    }

    pub fn mean(&self) -> f64 {
        let (n, t) = self.shape();
        self.col_sums.iter().sum::<f64>() / (n * t) as f64
    }

    /// V-aligned field → Vᵗ-aligned field.
    fn v_to_vt(&self, field: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; field.len()];
        match &self.perm {
            Some(perm) => {
                for (k, &dst) in perm.iter().enumerate() {
                    out[dst] = field[k];
                }
            }
            None => {
                let (n, t) = self.shape();
                for c in 0..t {
                    for r in 0..n {
                        out[r * t + c] = field[c * n + r];
                    }
                }
            }
        }
        out
    }

    /// Vᵗ-aligned field → V-aligned field.
    fn vt_to_v(&self, field: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; field.len()];
        match &self.perm {
            Some(perm) => {
                for (k, &src) in perm.iter().enumerate() {
                    out[k] = field[src];
                }
            }
            None => {
                let (n, t) = self.shape();
                for c in 0..t {
                    for r in 0..n {
                        out[c * n + r] = field[r * t + c];
                    }
                }
            }
        }
        out
    }
}

/// Current factors plus the reconstruction and ratio on the data's support.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationState {
    pub w: DenseMatrix,
    pub h: DenseMatrix,
    /// `WH` at the storage positions of `V`.
    pub z: Vec<f64>,
    /// `V ⊘ Z` at the storage positions of `V`.
    pub q: Vec<f64>,
    pub iteration: usize,
}

impl FactorizationState {
    pub fn from_factors(problem: &Problem, w: DenseMatrix, h: DenseMatrix) -> Result<Self> {
        let (n, t) = problem.shape();
        if w.rows() != n || h.cols() != t || w.cols() != h.rows() {
            return Err(Error::Dimension {
                op: "from_factors",
                left: w.shape(),
                right: h.shape(),
            });
        }
        Ok(Self::build(problem, w, h))
    }

    fn build(problem: &Problem, w: DenseMatrix, h: DenseMatrix) -> Self {
        let z = reconstruct_on(&problem.v, &w, &h);
        let q = ratio_on(&problem.v, &z);
        Self {
            w,
            h,
            z,
            q,
            iteration: 0,
        }
    }

    /// Full reconstruction `WH`.
    pub fn reconstruction(&self) -> DenseMatrix {
        matmul_unchecked(&self.w, &self.h)
    }

    /// Column sums of `WH`, computed from the factors.
    pub fn reconstruction_col_sums(&self) -> Vec<f64> {
        recon_col_sums(&self.w.column_sums(), &self.h)
    }

    /// Row sums of `WH`, computed from the factors.
    pub fn reconstruction_row_sums(&self) -> Vec<f64> {
        let hs = self.h.row_sums();
        (0..self.w.rows())
            .map(|n| (0..self.w.cols()).map(|r| self.w.get(n, r) * hs[r]).sum())
            .collect()
    }

    /// Cheap digest of the factor bits, used to check that paired runs start
    /// from the same point.
    pub fn fingerprint(&self) -> u64 {
        // FNV-1a over the raw bits
        let mut hash = 0xcbf2_9ce4_8422_2325u64;
        for v in self.w.values().iter().chain(self.h.values()) {
            for byte in v.to_bits().to_le_bytes() {
                hash ^= u64::from(byte);
                hash = hash.wrapping_mul(0x100_0000_01b3);
            }
        }
        hash
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub iteration: usize,
    /// Absent when the run skips cost evaluation.
    pub objective: Option<ObjectiveValue>,
    pub wall_ms: f64,
    pub dna_wins_h: usize,
    pub dna_wins_w: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub w: DenseMatrix,
    pub h: DenseMatrix,
    pub records: Vec<ConvergenceRecord>,
    pub stopped_early: bool,
}

impl RunOutput {
    pub fn final_objective(&self) -> Option<f64> {
        self.records.last()?.objective.map(|o| o.total)
    }
}

/// Statistics of one half-step.
#[derive(Debug, Clone)]
pub struct PhaseReport {
    pub newton_wins: usize,
    /// Divergence after the half-step, when scores were computed.
    pub kl: Option<f64>,
}

/// Owns the state of one run.
#[derive(Debug)]
pub struct Driver<'p> {
    problem: &'p Problem,
    config: SolverConfig,
    rule: Arc<dyn UpdateRule>,
    state: FactorizationState,
    records: Vec<ConvergenceRecord>,
    last_objective: Option<f64>,
}

impl<'p> Driver<'p> {
    /// Initializes from the seeded random start.
    pub fn new(problem: &'p Problem, config: SolverConfig) -> Result<Self> {
        Self::with_registry(problem, config, &SolverRegistry::builtin())
    }

    pub fn with_registry(
        problem: &'p Problem,
        config: SolverConfig,
        registry: &SolverRegistry,
    ) -> Result<Self> {
        let start = Instant::now();
        let state = initialize(problem, &config)?;
        let init_ms = start.elapsed().as_secs_f64() * 1e3;
        Self::start(problem, config, registry, state, init_ms)
    }

    /// Starts from given factors, skipping initialization.
    pub fn from_factors(
        problem: &'p Problem,
        config: SolverConfig,
        w: DenseMatrix,
        h: DenseMatrix,
    ) -> Result<Self> {
        if w.cols() != config.rank {
            return Err(Error::Config(format!(
                "factors have rank {} but the configuration asks for {}",
                w.cols(),
                config.rank
            )));
        }
        let state = FactorizationState::from_factors(problem, w, h)?;
        Self::from_state(problem, config, state)
    }

    /// Starts from a previously initialized state.
    pub fn from_state(
        problem: &'p Problem,
        config: SolverConfig,
        state: FactorizationState,
    ) -> Result<Self> {
        Self::start(problem, config, &SolverRegistry::builtin(), state, 0.0)
    }

    fn start(
        problem: &'p Problem,
        config: SolverConfig,
        registry: &SolverRegistry,
        mut state: FactorizationState,
        init_ms: f64,
    ) -> Result<Self> {
        config.validate()?;
        let rule = registry.get(&config.algorithm)?;
        if rule.requires_scores() && !config.compute_cost {
            return Err(Error::Config(format!(
                "'{}' cannot run without cost evaluation",
                rule.name()
            )));
        }
        state.iteration = 0;
        let objective = config
            .compute_cost
            .then(|| objective_of(problem, &state, &config));
        let mut driver = Self {
            problem,
            config,
            rule,
            state,
            records: Vec::new(),
            last_objective: objective.map(|o| o.total),
        };
        driver.records.push(ConvergenceRecord {
            iteration: 0,
            objective,
            wall_ms: init_ms,
            dna_wins_h: 0,
            dna_wins_w: 0,
        });
        Ok(driver)
    }

    pub fn state(&self) -> &FactorizationState {
        &self.state
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn records(&self) -> &[ConvergenceRecord] {
        &self.records
    }

    pub fn rule_name(&self) -> &'static str {
        self.rule.name()
    }

    /// Coefficient half-step on `H`.
    pub fn h_phase(&mut self) -> Result<PhaseReport> {
        let opts = self.config.step_options();
        let rule = Arc::clone(&self.rule);
        h_phase_with(
            self.problem,
            &mut self.state,
            &self.config,
            rule.as_ref(),
            &opts,
        )
    }

    /// Basis half-step on `W`.
    pub fn w_phase(&mut self) -> Result<PhaseReport> {
        let opts = self.config.step_options();
        let rule = Arc::clone(&self.rule);
        w_phase_with(
            self.problem,
            &mut self.state,
            &self.config,
            rule.as_ref(),
            &opts,
        )
    }

    /// Divides row r of `H` by its mass and multiplies column r of `W`.
    pub fn normalize_h(&mut self) {
        if self.config.normalizes() {
            normalize_h(&mut self.state, self.config.rho);
        }
    }

    /// Divides column r of `W` by its mass and multiplies row r of `H`.
    pub fn normalize_w(&mut self) {
        if self.config.normalizes() {
            normalize_w(&mut self.state, self.config.lambda);
        }
    }

    /// One full sweep. Returns the record for this iteration.
    pub fn iterate(&mut self) -> Result<ConvergenceRecord> {
        let start = Instant::now();
        let h = self.h_phase()?;
        self.normalize_h();
        let w = self.w_phase()?;
        self.normalize_w();
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        self.state.iteration += 1;

        let objective = w.kl.map(|kl| {
            ObjectiveValue::new(
                kl,
                self.config.rho * self.state.w.sum(),
                self.config.lambda * self.state.h.sum(),
            )
        });
        let record = ConvergenceRecord {
            iteration: self.state.iteration,
            objective,
            wall_ms,
            dna_wins_h: h.newton_wins,
            dna_wins_w: w.newton_wins,
        };
        self.last_objective = objective.map(|o| o.total);
        Ok(record)
    }

    /// Runs to `max_iters` or until the relative decrease drops below `rel_tol`.
    pub fn run(mut self) -> Result<RunOutput> {
        let mut stopped_early = false;
        while self.state.iteration < self.config.max_iters {
            let prev = self.last_objective;
            let record = self.iterate()?;
            let last = self.state.iteration == self.config.max_iters;
            let converged = match (prev, record.objective) {
                (Some(p), Some(o)) if self.config.rel_tol > 0.0 => {
                    let decrease = p - o.total;
                    p <= 0.0 || decrease / p.abs() < self.config.rel_tol
                }
                _ => false,
            };
            if last || converged || record.iteration % self.config.log_every == 0 {
                self.records.push(record);
            }
            if converged && !last {
                stopped_early = true;
                break;
            }
        }
        Ok(RunOutput {
            w: self.state.w,
            h: self.state.h,
            records: self.records,
            stopped_early,
        })
    }

    pub fn into_state(self) -> FactorizationState {
        self.state
    }
}

/// Initializes and runs in one call.
pub fn run(v: &DataMatrix, config: &SolverConfig) -> Result<RunOutput> {
    let problem = Problem::new(v.clone());
    Driver::new(&problem, config.clone())?.run()
}

/// Random start: uniform `W` with unit column mass, `H = WᵗV`, then one MU
/// sweep.
pub fn initialize(problem: &Problem, config: &SolverConfig) -> Result<FactorizationState> {
    config.validate()?;
    let (n, t) = problem.shape();
    if problem.v.nnz() == 0 {
        return Err(Error::EmptyData);
    }
    let zero_rows = problem.row_sums.iter().filter(|&&s| s == 0.0).count();
    let zero_cols = problem.col_sums.iter().filter(|&&s| s == 0.0).count();
    if zero_rows > 0 || zero_cols > 0 {
        log::warn!("data has {zero_rows} all-zero rows and {zero_cols} all-zero columns");
    }
    if config.rank > n.min(t) {
        log::warn!("rank {} exceeds min(N, T) = {}", config.rank, n.min(t));
    }

    let mut w = random_basis(n, config.rank, config.seed);
    let sums = w.column_sums();
    w.scale_columns(&sums.iter().map(|s| 1.0 / s).collect::<Vec<_>>())?;
    let h = transpose_product(&w, &problem.v)?;
    let mut state = FactorizationState::build(problem, w, h);

    let opts = StepOptions {
        params: config.params,
        compute_scores: false,
    };
    h_phase_with(problem, &mut state, config, &MuRule, &opts)?;
    if config.normalizes() {
        normalize_h(&mut state, config.rho);
    }
    w_phase_with(problem, &mut state, config, &MuRule, &opts)?;
    if config.normalizes() {
        normalize_w(&mut state, config.lambda);
    }
    Ok(state)
}

/// Uniform (0, 1) entries from the seeded PCG32 stream, column-major.
pub fn random_basis(rows: usize, rank: usize, seed: u64) -> DenseMatrix {
    let mut rng = Pcg32::new(seed, INIT_STREAM);
    let values = (0..rows * rank).map(|_| rng.sample(Open01)).collect();
    DenseMatrix::from_raw(rows, rank, values)
}

fn check_finite(m: &DenseMatrix, iteration: usize, factor: &'static str) -> Result<()> {
    if m.is_finite() {
        Ok(())
    } else {
        Err(Error::NumericalFailure { iteration, factor })
    }
}

fn h_phase_with(
    problem: &Problem,
    state: &mut FactorizationState,
    config: &SolverConfig,
    rule: &dyn UpdateRule,
    opts: &StepOptions,
) -> Result<PhaseReport> {
    let hp = HalfProblem {
        data: &problem.v,
        data_col_sums: &problem.col_sums,
        basis: &state.w,
        coef: &state.h,
        recon: &state.z,
        ratio: &state.q,
        reg: config.lambda,
    };
    let PhaseOutcome {
        factor,
        recon,
        ratio,
        scores,
        newton_wins,
    } = rule.half_step(&hp, opts)?;
    check_finite(&factor, state.iteration + 1, "H")?;
    state.h = factor;
    state.z = recon;
    state.q = ratio;
    Ok(PhaseReport {
        newton_wins,
        kl: scores.map(|s| s.iter().sum()),
    })
}

fn w_phase_with(
    problem: &Problem,
    state: &mut FactorizationState,
    config: &SolverConfig,
    rule: &dyn UpdateRule,
    opts: &StepOptions,
) -> Result<PhaseReport> {
    let basis = state.h.transpose();
    let coef = state.w.transpose();
    let recon = problem.v_to_vt(&state.z);
    let ratio = problem.v_to_vt(&state.q);
    let hp = HalfProblem {
        data: &problem.vt,
        data_col_sums: &problem.row_sums,
        basis: &basis,
        coef: &coef,
        recon: &recon,
        ratio: &ratio,
        reg: config.rho,
    };
    let out = rule.half_step(&hp, opts)?;
    check_finite(&out.factor, state.iteration + 1, "W")?;
    state.w = out.factor.transpose();
    state.z = problem.vt_to_v(&out.recon);
    state.q = problem.vt_to_v(&out.ratio);
    Ok(PhaseReport {
        newton_wins: out.newton_wins,
        kl: out.scores.map(|s| s.iter().sum()),
    })
}

/// Scale factors `1 / (sum + reg)`; components with no mass keep scale 1.
fn inverse_masses(sums: &[f64], reg: f64) -> (Vec<f64>, Vec<f64>) {
    sums.iter()
        .map(|&s| {
            let m = s + reg;
            if m > 0.0 {
                (1.0 / m, m)
            } else {
                (1.0, 1.0)
            }
        })
        .unzip()
}

fn normalize_h(state: &mut FactorizationState, rho: f64) {
    let (inv, mass) = inverse_masses(&state.h.row_sums(), rho);
    state.h.scale_rows(&inv).expect("positive scale");
    state.w.scale_columns(&mass).expect("positive scale");
}

fn normalize_w(state: &mut FactorizationState, lambda: f64) {
    let (inv, mass) = inverse_masses(&state.w.column_sums(), lambda);
    state.w.scale_columns(&inv).expect("positive scale");
    state.h.scale_rows(&mass).expect("positive scale");
}

/// Regularized objective of a state, from its stored reconstruction.
pub fn objective_of(
    problem: &Problem,
    state: &FactorizationState,
    config: &SolverConfig,
) -> ObjectiveValue {
    let sums = state.reconstruction_col_sums();
    let kl: f64 = column_divergence_on(&problem.v, &state.q, &state.z, &sums)
        .iter()
        .sum();
    ObjectiveValue::new(
        kl,
        config.rho * state.w.sum(),
        config.lambda * state.h.sum(),
    )
}

/// Largest stationarity product `|a·h|` over `H` and `|a·w|` over `W`,
/// divided by the mean of `V`.
pub fn kkt_residual(problem: &Problem, state: &FactorizationState, config: &SolverConfig) -> f64 {
    let h_side = {
        let hp = HalfProblem {
            data: &problem.v,
            data_col_sums: &problem.col_sums,
            basis: &state.w,
            coef: &state.h,
            recon: &state.z,
            ratio: &state.q,
            reg: config.lambda,
        };
        let a = a_matrix(&hp, &Denominators::new(&state.w, config.lambda));
        max_product(&a, &state.h)
    };
    let w_side = {
        let basis = state.h.transpose();
        let coef = state.w.transpose();
        let recon = problem.v_to_vt(&state.z);
        let ratio = problem.v_to_vt(&state.q);
        let hp = HalfProblem {
            data: &problem.vt,
            data_col_sums: &problem.row_sums,
            basis: &basis,
            coef: &coef,
            recon: &recon,
            ratio: &ratio,
            reg: config.rho,
        };
        let a = a_matrix(&hp, &Denominators::new(&basis, config.rho));
        max_product(&a, &coef)
    };
    h_side.max(w_side) / problem.mean()
}

fn max_product(a: &DenseMatrix, f: &DenseMatrix) -> f64 {
    a.values()
        .iter()
        .zip(f.values())
        .map(|(a, f)| (a * f).abs())
        .fold(0.0, f64::max)
}

/// Dense reconstruction at the data's support; exposed for checks.
pub fn support_values(problem: &Problem, z: &DenseMatrix) -> Vec<f64> {
    gather_support(&problem.v, z)
}

//! Update rules for one half-step of the alternating minimization.
//!
//! Both half-steps are expressed in the same orientation: the data `X`
//! (M×C) is approximated by `basis · coef` and the coefficient matrix
//! (R×C) is updated column by column. The coefficient update on `H` uses
//! `X = V`, `basis = W`; the basis update on `W` runs the same code on
//! `X = Vᵗ`, `basis = Hᵗ`, `coef = Wᵗ`.
//!
//! Rules are trait objects looked up by name in a [`SolverRegistry`].

pub mod dna;
pub mod mu;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::objective::{column_divergence_on, recon_col_sums};
use crate::tensor::{ratio_on, reconstruct_on, DataMatrix, DenseMatrix};

pub use dna::{compute_b, dna_step, renormalize, select_best, DnaParams, DnaRule, Selection};
pub use mu::{compute_a, mu_factor, MuRule};

/// Inputs of one half-step. `recon` and `ratio` are aligned with the
/// storage of `data`.
#[derive(Debug, Clone, Copy)]
pub struct HalfProblem<'a> {
    pub data: &'a DataMatrix,
    /// Σ over rows of each data column.
    pub data_col_sums: &'a [f64],
    pub basis: &'a DenseMatrix,
    pub coef: &'a DenseMatrix,
    pub recon: &'a [f64],
    pub ratio: &'a [f64],
    /// Linear penalty on the coefficients (λ for `H`, ρ for `W`).
    pub reg: f64,
}

impl<'a> HalfProblem<'a> {
    pub fn validate(&self) -> Result<()> {
        let (m, c) = self.data.shape();
        let r = self.basis.cols();
        let ok = self.basis.rows() == m
            && self.coef.shape() == (r, c)
            && self.recon.len() == self.data.support_len()
            && self.ratio.len() == self.data.support_len()
            && self.data_col_sums.len() == c;
        if ok {
            Ok(())
        } else {
            Err(Error::Dimension {
                op: "half_problem",
                left: self.data.shape(),
                right: self.coef.shape(),
            })
        }
    }

    pub fn rank(&self) -> usize {
        self.basis.cols()
    }

    /// Reconstruction column sums for a candidate coefficient matrix.
    pub(crate) fn recon_col_sums(
        &self,
        denominators: &Denominators,
        factor: &DenseMatrix,
    ) -> Vec<f64> {
        recon_col_sums(&denominators.basis_sums, factor)
    }
}

/// Owned half-step inputs built straight from `V`, `W`, `H`.
#[derive(Debug, Clone)]
pub struct PreparedPhase {
    pub data: DataMatrix,
    pub data_col_sums: Vec<f64>,
    pub basis: DenseMatrix,
    pub coef: DenseMatrix,
    pub recon: Vec<f64>,
    pub ratio: Vec<f64>,
    pub reg: f64,
}

impl PreparedPhase {
    /// Update of `H` with `W` fixed.
    pub fn coefficients(
        v: &DataMatrix,
        w: &DenseMatrix,
        h: &DenseMatrix,
        lambda: f64,
    ) -> Result<Self> {
        Self::build(v.clone(), w.clone(), h.clone(), lambda)
    }

    /// Update of `W` with `H` fixed, in transposed orientation.
    pub fn basis(v: &DataMatrix, w: &DenseMatrix, h: &DenseMatrix, rho: f64) -> Result<Self> {
        let (vt, _) = v.transpose_with_permutation();
        Self::build(vt, h.transpose(), w.transpose(), rho)
    }

    fn build(data: DataMatrix, basis: DenseMatrix, coef: DenseMatrix, reg: f64) -> Result<Self> {
        if basis.rows() != data.rows() || basis.cols() != coef.rows() || coef.cols() != data.cols()
        {
            return Err(Error::Dimension {
                op: "prepare_phase",
                left: basis.shape(),
                right: coef.shape(),
            });
        }
        let recon = reconstruct_on(&data, &basis, &coef);
        let ratio = ratio_on(&data, &recon);
        Ok(Self {
            data_col_sums: data.column_sums(),
            data,
            basis,
            coef,
            recon,
            ratio,
            reg,
        })
    }

    pub fn view(&self) -> HalfProblem<'_> {
        HalfProblem {
            data: &self.data,
            data_col_sums: &self.data_col_sums,
            basis: &self.basis,
            coef: &self.coef,
            recon: &self.recon,
            ratio: &self.ratio,
            reg: self.reg,
        }
    }
}

/// Per-component denominators `(basisᵗ1)_r + reg`; a zero value marks a dead
/// component.
#[derive(Debug, Clone, PartialEq)]
pub struct Denominators {
    pub basis_sums: Vec<f64>,
    pub values: Vec<f64>,
}

impl Denominators {
    pub fn new(basis: &DenseMatrix, reg: f64) -> Self {
        let basis_sums = basis.column_sums();
        let values = basis_sums.iter().map(|s| s + reg).collect();
        Self { basis_sums, values }
    }

    #[inline]
    pub fn is_dead(&self, r: usize) -> bool {
        self.values[r] <= 0.0
    }

    pub fn first_dead(&self) -> Option<usize> {
        (0..self.values.len()).find(|&r| self.is_dead(r))
    }
}

/// Intermediate matrices shared by the rules of one half-step.
#[derive(Debug, Clone)]
pub struct UpdateWorkspace {
    pub denominators: Denominators,
    /// `a` entries: normalized gradient quantities, ≥ −1.
    pub a: DenseMatrix,
    /// `b` entries: normalized diagonal curvature, ≥ 0. Only DNA fills it.
    pub b: Option<DenseMatrix>,
}

/// A candidate coefficient matrix with everything needed to score and accept it.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub factor: DenseMatrix,
    pub recon: Vec<f64>,
    pub ratio: Vec<f64>,
    /// Per-column divergence (penalty excluded).
    pub scores: Option<Vec<f64>>,
}

pub type MuCandidate = Candidate;
pub type DnaCandidate = Candidate;

impl Candidate {
    pub(crate) fn evaluate(
        problem: &HalfProblem<'_>,
        denominators: &Denominators,
        factor: DenseMatrix,
        with_scores: bool,
    ) -> Self {
        let recon = reconstruct_on(problem.data, problem.basis, &factor);
        let ratio = ratio_on(problem.data, &recon);
        let scores = with_scores.then(|| {
            let sums = problem.recon_col_sums(denominators, &factor);
            column_divergence_on(problem.data, &ratio, &recon, &sums)
        });
        Self {
            factor,
            recon,
            ratio,
            scores,
        }
    }

    /// Score of column `c` including the linear penalty on its coefficients.
    pub(crate) fn penalized_score(&self, c: usize, reg: f64) -> f64 {
        let kl = self.scores.as_ref().expect("candidate was scored")[c];
        if reg > 0.0 {
            kl + reg * self.factor.col(c).iter().sum::<f64>()
        } else {
            kl
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StepOptions {
    pub params: DnaParams,
    pub compute_scores: bool,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self {
            params: DnaParams::default(),
            compute_scores: true,
        }
    }
}

/// Accepted result of a half-step.
#[derive(Debug, Clone)]
pub struct PhaseOutcome {
    pub factor: DenseMatrix,
    pub recon: Vec<f64>,
    pub ratio: Vec<f64>,
    /// Per-column divergence of the accepted update, when computed.
    pub scores: Option<Vec<f64>>,
    /// Columns where the Newton candidate was accepted.
    pub newton_wins: usize,
}

impl From<Candidate> for PhaseOutcome {
    fn from(c: Candidate) -> Self {
        Self {
            factor: c.factor,
            recon: c.recon,
            ratio: c.ratio,
            scores: c.scores,
            newton_wins: 0,
        }
    }
}

/// One interchangeable half-step update strategy.
pub trait UpdateRule: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    /// Whether the rule needs candidate scores to decide its update.
    fn requires_scores(&self) -> bool {
        false
    }

    fn half_step(&self, problem: &HalfProblem<'_>, opts: &StepOptions) -> Result<PhaseOutcome>;
}

/// Name → rule lookup.
#[derive(Debug, Clone, Default)]
pub struct SolverRegistry {
    rules: BTreeMap<String, Arc<dyn UpdateRule>>,
}

impl SolverRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry holding `mu` and `dna`.
    pub fn builtin() -> Self {
        let mut reg = Self::new();
        reg.register(Arc::new(MuRule));
        reg.register(Arc::new(DnaRule));
        reg
    }

    /// Adds a rule, replacing any rule already registered under its name.
    pub fn register(&mut self, rule: Arc<dyn UpdateRule>) -> Option<Arc<dyn UpdateRule>> {
        self.rules.insert(rule.name().to_string(), rule)
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn UpdateRule>> {
        self.rules
            .get(&name.to_ascii_lowercase())
            .cloned()
            .ok_or_else(|| Error::UnknownSolver {
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&str> {
        self.rules.keys().map(String::as_str).collect()
    }
}

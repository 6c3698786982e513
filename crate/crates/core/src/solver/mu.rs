//! Multiplicative updates: `h ← h ⊙ (basisᵗ q) ⊘ (basisᵗ 1 + reg)`.

use super::{
    Candidate, Denominators, HalfProblem, PhaseOutcome, StepOptions, UpdateRule, UpdateWorkspace,
};
use crate::error::{Error, Result};
use crate::tensor::{gram_on, transpose_product, DataMatrix, DenseMatrix};

/// `a = (wᵗ q) ⊘ (wᵗ 1 + λ) − 1`, rejecting dead components.
pub fn compute_a(w: &DenseMatrix, q: &DataMatrix, lambda: f64) -> Result<DenseMatrix> {
    let den = Denominators::new(w, lambda);
    if let Some(component) = den.first_dead() {
        return Err(Error::DeadComponent { component });
    }
    let g = transpose_product(w, q)?;
    Ok(normalize_gradient(g, &den))
}

/// Gradient quantities for a half-step; dead components get `a = 0` so they
/// stay where they are.
pub(crate) fn a_matrix(problem: &HalfProblem<'_>, den: &Denominators) -> DenseMatrix {
    let g = gram_on(problem.basis, problem.data, problem.ratio);
    normalize_gradient(g, den)
}

fn normalize_gradient(mut g: DenseMatrix, den: &Denominators) -> DenseMatrix {
    let rank = g.rows();
    for col in g.values_mut().chunks_mut(rank.max(1)) {
        for (r, x) in col.iter_mut().enumerate() {
            *x = if den.is_dead(r) {
                0.0
            } else {
                *x / den.values[r] - 1.0
            };
        }
    }
    g
}

/// `h ⊙ (1 + a)`.
pub fn mu_factor(coef: &DenseMatrix, a: &DenseMatrix) -> DenseMatrix {
    debug_assert_eq!(coef.shape(), a.shape());
    let values = coef
        .values()
        .iter()
        .zip(a.values())
        .map(|(h, a)| (h * (1.0 + a)).max(0.0))
        .collect();
    DenseMatrix::from_raw(coef.rows(), coef.cols(), values)
}

pub(crate) fn workspace(problem: &HalfProblem<'_>) -> UpdateWorkspace {
    let denominators = Denominators::new(problem.basis, problem.reg);
    let a = a_matrix(problem, &denominators);
    UpdateWorkspace {
        denominators,
        a,
        b: None,
    }
}

/// MU candidate for a prepared workspace.
pub fn mu_candidate(
    problem: &HalfProblem<'_>,
    ws: &UpdateWorkspace,
    with_scores: bool,
) -> Candidate {
    let factor = mu_factor(problem.coef, &ws.a);
    Candidate::evaluate(problem, &ws.denominators, factor, with_scores)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MuRule;

impl UpdateRule for MuRule {
    fn name(&self) -> &'static str {
        "mu"
    }

    fn half_step(&self, problem: &HalfProblem<'_>, opts: &StepOptions) -> Result<PhaseOutcome> {
        problem.validate()?;
        let ws = workspace(problem);
        Ok(mu_candidate(problem, &ws, opts.compute_scores).into())
    }
}

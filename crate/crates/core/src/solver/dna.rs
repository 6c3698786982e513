//! Diagonalized Newton half-step with a multiplicative-update safety net.
//!
//! Each coefficient gets an element-wise Newton step on its stationarity
//! condition `a·h = 0` using only the diagonal curvature `b`. Steps that
//! would shrink `h` (a < 0) use the Newton gain `hb / (hb − a)` floored at
//! `epsilon`; steps that would grow it use the linearized bound
//! `h + a/b`, capped at `alpha·h`. Columns are then rescaled so the
//! reconstruction carries the data's column mass, and each column keeps
//! whichever of the Newton and MU candidates scores lower.

use super::mu::{self, mu_candidate};
use super::{
    Candidate, Denominators, HalfProblem, PhaseOutcome, StepOptions, UpdateRule, UpdateWorkspace,
};
use crate::error::{Error, Result};
use crate::tensor::{gram_on, ratio_squared_on, weighted_gram, DataMatrix, DenseMatrix};

/// Gain floor and step ceiling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DnaParams {
    pub epsilon: f64,
    pub alpha: f64,
}

impl Default for DnaParams {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            alpha: 4.0,
        }
    }
}

impl DnaParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Config(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// `b = ((w ⊙ w)ᵗ q̄) ⊘ (wᵗ 1 + λ)` with `q̄ = v ⊘ (z ⊙ z)`.
pub fn compute_b(w: &DenseMatrix, qbar: &DataMatrix, lambda: f64) -> Result<DenseMatrix> {
    let den = Denominators::new(w, lambda);
    if let Some(component) = den.first_dead() {
        return Err(Error::DeadComponent { component });
    }
    let g = weighted_gram(w, qbar)?;
    Ok(normalize_curvature(g, &den))
}

fn normalize_curvature(mut g: DenseMatrix, den: &Denominators) -> DenseMatrix {
    let rank = g.rows();
    for col in g.values_mut().chunks_mut(rank.max(1)) {
        for (r, x) in col.iter_mut().enumerate() {
            *x = if den.is_dead(r) {
                0.0
            } else {
                *x / den.values[r]
            };
        }
    }
    g
}

/// Element-wise Newton update of one coefficient.
#[inline]
pub fn dna_step(h: f64, a: f64, b: f64, params: &DnaParams) -> f64 {
    if h <= 0.0 {
        return 0.0;
    }
    if b.is_nan() || b <= 0.0 {
        // no curvature information; MU's value is the conservative move
        return (h * (1.0 + a)).max(0.0);
    }
    if a < 0.0 {
        // hb / (hb − a), written so hb → 0 or ∞ stays finite
        let gain = 1.0 / (1.0 - a / (h * b));
        h * gain.max(params.epsilon)
    } else {
        h + (a / b).min(params.alpha * h)
    }
}

pub(crate) fn dna_factor(
    coef: &DenseMatrix,
    a: &DenseMatrix,
    b: &DenseMatrix,
    params: &DnaParams,
) -> DenseMatrix {
    let values = coef
        .values()
        .iter()
        .zip(a.values())
        .zip(b.values())
        .map(|((&h, &a), &b)| dna_step(h, a, b, params))
        .collect();
    DenseMatrix::from_raw(coef.rows(), coef.cols(), values)
}

/// Rescales each column so `Σ_r den_r h_r = Σ_m x_m`. Returns the columns
/// that could not be rescaled because they carry no weight.
pub(crate) fn renormalize_columns(
    factor: &mut DenseMatrix,
    den: &Denominators,
    data_col_sums: &[f64],
) -> Vec<usize> {
    let mut flagged = Vec::new();
    for (c, &target) in data_col_sums.iter().enumerate().take(factor.cols()) {
        let col = factor.col_mut(c);
        let weight: f64 = col.iter().zip(&den.values).map(|(h, d)| h * d).sum();
        if weight > 0.0 {
            let s = target / weight;
            col.iter_mut().for_each(|h| *h *= s);
        } else {
            flagged.push(c);
        }
    }
    flagged
}

/// Rescales the columns of `h` so that `Σ_r ((wᵗ1)_r + λ) h_rt = Σ_n v_nt`.
pub fn renormalize(
    h: &mut DenseMatrix,
    w: &DenseMatrix,
    v: &DataMatrix,
    lambda: f64,
) -> Result<Vec<usize>> {
    if w.cols() != h.rows() || v.cols() != h.cols() || v.rows() != w.rows() {
        return Err(Error::Dimension {
            op: "renormalize",
            left: w.shape(),
            right: h.shape(),
        });
    }
    let den = Denominators::new(w, lambda);
    Ok(renormalize_columns(h, &den, &v.column_sums()))
}

/// Per-column merge of two scored candidates.
#[derive(Debug, Clone)]
pub struct Selection {
    pub outcome: PhaseOutcome,
    /// `true` where the Newton candidate was taken.
    pub newton_columns: Vec<bool>,
}

/// Keeps, per column, the Newton candidate when its penalized score is
/// strictly lower and the MU candidate otherwise. Reconstruction and ratio
/// columns are spliced; a column of `basis · coef` depends only on the same
/// column of `coef`, so this equals recomputing from the merged factor.
pub fn select_best(problem: &HalfProblem<'_>, mu: Candidate, dna: Candidate) -> Selection {
    let cols = mu.factor.cols();
    let newton_columns: Vec<bool> = (0..cols)
        .map(|c| dna.penalized_score(c, problem.reg) < mu.penalized_score(c, problem.reg))
        .collect();
    let Candidate {
        mut factor,
        mut recon,
        mut ratio,
        scores,
    } = mu;
    let mut scores = scores.expect("MU candidate was scored");
    let dna_scores = dna.scores.as_ref().expect("DNA candidate was scored");
    for c in (0..cols).filter(|&c| newton_columns[c]) {
        factor.col_mut(c).copy_from_slice(dna.factor.col(c));
        let rng = problem.data.col_range(c);
        recon[rng.clone()].copy_from_slice(&dna.recon[rng.clone()]);
        ratio[rng.clone()].copy_from_slice(&dna.ratio[rng]);
        scores[c] = dna_scores[c];
    }
    let newton_wins = newton_columns.iter().filter(|&&w| w).count();
    Selection {
        outcome: PhaseOutcome {
            factor,
            recon,
            ratio,
            scores: Some(scores),
            newton_wins,
        },
        newton_columns,
    }
}

/// Fills `ws.b` for the current state.
pub(crate) fn fill_curvature(problem: &HalfProblem<'_>, ws: &mut UpdateWorkspace) {
    let qbar = ratio_squared_on(problem.data, problem.recon);
    let squared = crate::tensor::square(problem.basis);
    let g = gram_on(&squared, problem.data, &qbar);
    ws.b = Some(normalize_curvature(g, &ws.denominators));
}

/// Newton candidate (before selection).
pub fn dna_candidate(
    problem: &HalfProblem<'_>,
    ws: &UpdateWorkspace,
    params: &DnaParams,
) -> Candidate {
    let b = ws.b.as_ref().expect("curvature computed");
    let mut factor = dna_factor(problem.coef, &ws.a, b, params);
    let flagged = renormalize_columns(&mut factor, &ws.denominators, problem.data_col_sums);
    if !flagged.is_empty() {
        log::debug!("{} columns left unnormalized (no weight)", flagged.len());
    }
    Candidate::evaluate(problem, &ws.denominators, factor, true)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DnaRule;

impl UpdateRule for DnaRule {
    fn name(&self) -> &'static str {
        "dna"
    }

    fn requires_scores(&self) -> bool {
        true
    }

    fn half_step(&self, problem: &HalfProblem<'_>, opts: &StepOptions) -> Result<PhaseOutcome> {
        problem.validate()?;
        opts.params.validate()?;
        if !opts.compute_scores {
            return Err(Error::Config(
                "the Newton rule needs candidate scores for its MU fallback".into(),
            ));
        }
        let mut ws = mu::workspace(problem);
        let mu_c = mu_candidate(problem, &ws, true);
        fill_curvature(problem, &mut ws);
        let dna_c = dna_candidate(problem, &ws, &opts.params);
        Ok(select_best(problem, mu_c, dna_c).outcome)
    }
}

//! Seeded synthetic data with a known low-rank factorization.

use rand::distr::{Distribution, Open01};
use rand::Rng;
use rand_distr::Poisson;
use rand_pcg::Pcg32;

use crate::error::{Error, Result};
use crate::tensor::{matmul, DataMatrix, DenseMatrix, SparseMatrix};

/// PCG stream reserved for synthetic data.
pub const GEN_STREAM: u64 = 0x6e6d_665f_6765_6e5f;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Noise {
    /// `V = W*H*` exactly.
    #[default]
    None,
    /// Each entry drawn from `Poisson((W*H*)_nt)`.
    Poisson,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    /// Probability that an entry is kept; below 1 the output is sparse.
    pub density: f64,
    pub noise: Noise,
    /// Upper bound of the uniform `H*` entries. `W*` entries lie in (0, 1).
    pub scale: f64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(rows: usize, cols: usize, rank: usize) -> Self {
        Self {
            rows,
            cols,
            rank,
            density: 1.0,
            noise: Noise::None,
            scale: 10.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 || self.rank == 0 {
            return Err(Error::Config(format!(
                "dimensions must be positive, got {}x{} with rank {}",
                self.rows, self.cols, self.rank
            )));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(Error::Config(format!(
                "density must lie in (0, 1], got {}",
                self.density
            )));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::Config(format!(
                "scale must be positive, got {}",
                self.scale
            )));
        }
        Ok(())
    }
}

/// Generated data plus the ground-truth factors.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub v: DataMatrix,
    pub w: DenseMatrix,
    pub h: DenseMatrix,
}

fn uniform(rng: &mut Pcg32, rows: usize, cols: usize, scale: f64) -> DenseMatrix {
    let values = (0..rows * cols)
        .map(|_| scale * rng.sample::<f64, _>(Open01))
        .collect();
    DenseMatrix::from_col_major(rows, cols, values)
        .expect("uniform entries are finite and positive")
}

/// Draws `W*`, `H*`, then each entry of `V` in column-major order: a keep
/// decision when `density < 1`, then the Poisson draw when requested.
pub fn generate(config: &SynthConfig) -> Result<Synthetic> {
    config.validate()?;
    let mut rng = Pcg32::new(config.seed, GEN_STREAM);
    let w = uniform(&mut rng, config.rows, config.rank, 1.0);
    let h = uniform(&mut rng, config.rank, config.cols, config.scale);
    let z = matmul(&w, &h)?;

    let sparse = config.density < 1.0;
    let mut triplets = Vec::new();
    let mut dense = Vec::with_capacity(if sparse { 0 } else { z.values().len() });
    for c in 0..config.cols {
        for (r, &mean) in z.col(c).iter().enumerate() {
            if sparse && !rng.random_bool(config.density) {
                continue;
            }
            let value = match config.noise {
                Noise::None => mean,
                Noise::Poisson => Poisson::new(mean)
                    .map_err(|e| Error::Config(format!("Poisson mean {mean}: {e}")))?
                    .sample(&mut rng),
            };
            if sparse {
                if value > 0.0 {
                    triplets.push((r, c, value));
                }
            } else {
                dense.push(value);
            }
        }
    }
    let v = if sparse {
        DataMatrix::Sparse(SparseMatrix::from_triplets(
            config.rows,
            config.cols,
            &triplets,
        )?)
    } else {
        DataMatrix::Dense(DenseMatrix::from_col_major(
            config.rows,
            config.cols,
            dense,
        )?)
    };
    Ok(Synthetic { v, w, h })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::kl_divergence;

    #[test]
    fn noiseless_is_exact_product() {
        let s = generate(&SynthConfig::new(20, 15, 3)).unwrap();
        let z = matmul(&s.w, &s.h).unwrap();
        assert_eq!(s.v.to_dense(), z);
        assert_eq!(kl_divergence(&s.v, &z).unwrap(), 0.0);
    }

    #[test]
    fn same_seed_same_data() {
        let mut cfg = SynthConfig::new(30, 20, 4);
        cfg.noise = Noise::Poisson;
        cfg.seed = 9;
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.v, b.v);
        cfg.seed = 10;
        assert_ne!(generate(&cfg).unwrap().v, a.v);
    }

    #[test]
    fn poisson_values_are_counts() {
        let mut cfg = SynthConfig::new(25, 25, 2);
        cfg.noise = Noise::Poisson;
        let s = generate(&cfg).unwrap();
        assert!(s.v.values().iter().all(|v| *v >= 0.0 && v.fract() == 0.0));
    }

    #[test]
    fn density_matches_binomial_expectation() {
        let mut cfg = SynthConfig::new(1000, 800, 3);
        cfg.density = 0.01;
        cfg.seed = 3;
        let s = generate(&cfg).unwrap();
        assert!(s.v.is_sparse());
        // mean 8000, sd ≈ 89
        let nnz = s.v.nnz() as f64;
        assert!((nnz - 8000.0).abs() < 5.0 * 89.0, "nnz {nnz}");
    }

    #[test]
    fn invalid_dimensions_rejected() {
        assert!(matches!(
            generate(&SynthConfig::new(0, 5, 1)),
            Err(Error::Config(_))
        ));
        let mut cfg = SynthConfig::new(5, 5, 1);
        cfg.density = 0.0;
        assert!(generate(&cfg).is_err());
    }
}

use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{polar_decompose, ComplexDense};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    /// i.i.d. complex Gaussian entries with `E|z|^2 = 1`.
    Ginibre,
    Hermitian,
    /// `G G* / n`, positive semidefinite.
    Psd,
    /// Polar isometry of a Ginibre matrix; unitary when square.
    PartialIsometry,
}

impl FromStr for MatrixKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ginibre" => Ok(Self::Ginibre),
            "hermitian" => Ok(Self::Hermitian),
            "psd" => Ok(Self::Psd),
            "partial_isometry" => Ok(Self::PartialIsometry),
            other => Err(Error::Usage(format!(
                "unknown matrix kind '{other}' (expected ginibre|hermitian|psd|partial_isometry)"
            ))),
        }
    }
}

fn ginibre(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> ComplexDense {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut entries = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        entries.push(Complex64::new(re * s, im * s));
    }
    ComplexDense::from_row_major(rows, cols, entries).expect("gaussian entries are finite")
}

/// Copies the upper triangle onto the lower one so that `M = M*` holds bitwise.
fn mirror_upper(m: &ComplexDense) -> ComplexDense {
    ComplexDense::from_fn(m.rows(), m.cols(), |r, c| {
        if r < c {
            m.get(r, c)
        } else if r > c {
            m.get(c, r).conj()
        } else {
            Complex64::new(m.get(r, r).re, 0.0)
        }
    })
}

/// Deterministic random matrix for a given `(kind, rows, cols, seed)`.
pub fn random_matrix(kind: MatrixKind, rows: usize, cols: usize, seed: u64) -> Result<ComplexDense> {
    if rows == 0 || cols == 0 {
        return Err(Error::Usage(format!(
            "random matrix dimensions must be positive, got {rows}x{cols}"
        )));
    }
    if matches!(kind, MatrixKind::Hermitian | MatrixKind::Psd) && rows != cols {
        return Err(Error::Usage(format!("{kind:?} matrices must be square, got {rows}x{cols}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = match kind {
        MatrixKind::Ginibre => ginibre(rows, cols, &mut rng),
        MatrixKind::Hermitian => {
            let g = ginibre(rows, cols, &mut rng);
            let sym = (&g + &g.adjoint()).scale(Complex64::new(0.5, 0.0));
            mirror_upper(&sym)
        }
        MatrixKind::Psd => {
            let g = ginibre(rows, cols, &mut rng);
            let p = (&g * &g.adjoint()).scale(Complex64::new(1.0 / cols as f64, 0.0));
            mirror_upper(&p)
        }
        MatrixKind::PartialIsometry => {
            let g = ginibre(rows, cols, &mut rng);
            polar_decompose(&g)?.u
        }
    };
    Ok(m)
}

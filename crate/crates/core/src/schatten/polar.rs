use nalgebra::DMatrix;
use num_complex::Complex64;

use super::ComplexDense;
use crate::error::{Error, Result};

/// Polar parts of `c = u |c| = |c*| u`.
#[derive(Debug, Clone)]
pub struct PolarParts {
    /// Partial isometry, same shape as `c`; `u* u` projects onto `range(|c|)`.
    pub u: ComplexDense,
    /// `|c| = sqrt(c* c)`, cols x cols.
    pub mod_l: ComplexDense,
    /// `|c*| = sqrt(c c*)`, rows x rows.
    pub mod_r: ComplexDense,
    /// Square roots of the moduli, kept for the `sqrt|c*| u sqrt|c|` factorization.
    pub sqrt_mod_l: ComplexDense,
    pub sqrt_mod_r: ComplexDense,
    /// Singular values, descending, negatives clipped to zero.
    pub singular_values: Vec<f64>,
    /// Number of singular directions kept in `u`.
    pub rank: usize,
}

/// `sum_i f(s_i) w_i w_i*` over the first `k` columns of `w`.
fn spectral_sum(w: &DMatrix<Complex64>, s: &[f64], f: impl Fn(f64) -> f64) -> DMatrix<Complex64> {
    let n = w.nrows();
    let mut out = DMatrix::zeros(n, n);
    for (i, &si) in s.iter().enumerate() {
        let fi = f(si);
        if fi == 0.0 {
            continue;
        }
        let col = w.column(i);
        out += (col * col.adjoint()).map(|z| z * fi);
    }
    hermitize(&mut out);
    out
}

/// Averages with the adjoint so the result is Hermitian to the last bit.
fn hermitize(m: &mut DMatrix<Complex64>) {
    let n = m.nrows();
    for r in 0..n {
        m[(r, r)].im = 0.0;
        for c in (r + 1)..n {
            let v = (m[(r, c)] + m[(c, r)].conj()) * 0.5;
            m[(r, c)] = v;
            m[(c, r)] = v.conj();
        }
    }
}

/// Polar decomposition through the singular value decomposition.
///
/// Singular directions with `s <= max(rows, cols) * eps * s_max` are treated
/// as null and mapped to zero by `u`.
pub fn polar_decompose(c: &ComplexDense) -> Result<PolarParts> {
    let (rows, cols) = (c.rows(), c.cols());
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyInput("polar decomposition of an empty matrix"));
    }
    let svd = c.as_matrix().clone().svd(true, true);
    let w = svd.u.expect("left singular vectors requested");
    let vt = svd.v_t.expect("right singular vectors requested");
    let v = vt.adjoint();
    let s: Vec<f64> = svd.singular_values.iter().map(|&x| x.max(0.0)).collect();
    let s_max = s.iter().copied().fold(0.0_f64, f64::max);
    let cutoff = rows.max(cols) as f64 * f64::EPSILON * s_max;
    let rank = s.iter().filter(|&&x| x > cutoff).count();

    let mut u = DMatrix::zeros(rows, cols);
    for (i, &si) in s.iter().enumerate() {
        if si > cutoff {
            u += w.column(i) * v.column(i).adjoint();
        }
    }

    let mod_l = spectral_sum(&v, &s, |x| x);
    let mod_r = spectral_sum(&w, &s, |x| x);
    let sqrt_mod_l = spectral_sum(&v, &s, f64::sqrt);
    let sqrt_mod_r = spectral_sum(&w, &s, f64::sqrt);

    Ok(PolarParts {
        u: ComplexDense::from_matrix(u)?,
        mod_l: ComplexDense::from_matrix(mod_l)?,
        mod_r: ComplexDense::from_matrix(mod_r)?,
        sqrt_mod_l: ComplexDense::from_matrix(sqrt_mod_l)?,
        sqrt_mod_r: ComplexDense::from_matrix(sqrt_mod_r)?,
        singular_values: s,
        rank,
    })
}

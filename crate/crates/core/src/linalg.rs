//! Vector kernels and the Hermitian solvers shared by `spectra` and `rp`.
//!
//! Everything here works on plain `[Complex64]` slices so that sparse
//! operators only need to implement [`LinearOp`].

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// A Hermitian linear operator acting on `C^dim`.
pub trait LinearOp: Sync {
    fn dim(&self) -> usize;
    /// `y = A x`; `y` is overwritten.
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]);

    /// Cheap upper bound on the operator norm, used to scale tolerances.
    fn norm_estimate(&self) -> f64;
}

pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: Complex64, x: &mut [Complex64]) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

/// Removes the component along the unit vector `u`.
pub fn project_out(u: &[Complex64], x: &mut [Complex64]) {
    let c = dot(u, x);
    axpy(-c, u, x);
}

pub(crate) fn random_unit_vector(dim: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<Complex64> = (0..dim)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        })
        .collect();
    let n = norm(&v);
    scale(Complex64::new(1.0 / n, 0.0), &mut v);
    v
}

/// Full eigendecomposition of a Hermitian matrix, eigenvalues ascending.
///
/// Matrices with identically zero imaginary parts go through the real
/// symmetric solver, which is several times faster.
pub fn hermitian_eig(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = m.nrows();
    let is_real = m.iter().all(|z| z.im == 0.0);
    let (values, vectors) = if is_real {
        let re = m.map(|z| z.re);
        let eig = SymmetricEigen::new(re);
        (
            eig.eigenvalues.iter().copied().collect::<Vec<_>>(),
            eig.eigenvectors.map(|x| Complex64::new(x, 0.0)),
        )
    } else {
        let eig = SymmetricEigen::new(m.clone());
        (
            eig.eigenvalues.iter().copied().collect::<Vec<_>>(),
            eig.eigenvectors,
        )
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted_values = order.iter().map(|&i| values[i]).collect();
    let sorted_vectors = DMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]);
    (sorted_values, sorted_vectors)
}

#[derive(Debug, Clone)]
pub struct LowestPair {
    pub e0: f64,
    pub e1: f64,
    pub vector: Vec<Complex64>,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    /// Krylov dimension per restart cycle.
    pub krylov: usize,
    pub max_restarts: usize,
    /// Target residual relative to the operator norm estimate.
    pub rel_tol: f64,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            krylov: 120,
            max_restarts: 60,
            rel_tol: 1e-12,
            seed: 0x5eed,
        }
    }
}

/// Restarted Lanczos with full reorthogonalization for the two lowest Ritz
/// values. Each restart seeds the next cycle with the sum of the two lowest
/// Ritz vectors so that the first excited level stays in the Krylov space.
pub fn lanczos_lowest<A: LinearOp + ?Sized>(op: &A, opts: LanczosOptions) -> Result<LowestPair> {
    let n = op.dim();
    if n == 0 {
        return Err(Error::EmptyInput("operator of dimension zero"));
    }
    let scale_h = op.norm_estimate().max(1.0);
    let target = opts.rel_tol * scale_h;
    let m = opts.krylov.min(n).max(1);

    let mut start = random_unit_vector(n, opts.seed);
    let mut best_residual = f64::INFINITY;
    let mut total_iters = 0;

    for _restart in 0..opts.max_restarts.max(1) {
        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m);
        let mut alpha = Vec::with_capacity(m);
        let mut beta: Vec<f64> = Vec::with_capacity(m);
        basis.push(start.clone());
        let mut w = vec![Complex64::new(0.0, 0.0); n];

        for j in 0..m {
            op.apply(&basis[j], &mut w);
            total_iters += 1;
            let a = dot(&basis[j], &w).re;
            alpha.push(a);
            // full reorthogonalization, applied twice
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(q, &w);
                    axpy(-c, q, &mut w);
                }
            }
            let b = norm(&w);
            if j + 1 == m || b <= 1e-14 * scale_h {
                break;
            }
            beta.push(b);
            let mut next = w.clone();
            scale(Complex64::new(1.0 / b, 0.0), &mut next);
            basis.push(next);
        }

        let k = alpha.len();
        let t = DMatrix::from_fn(k, k, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c {
                beta[r]
            } else if c + 1 == r {
                beta[c]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let i0 = order[0];
        let theta0 = eig.eigenvalues[i0];
        let theta1 = order.get(1).map(|&i| eig.eigenvalues[i]).unwrap_or(f64::INFINITY);

        let ritz = |idx: usize| -> Vec<Complex64> {
            let mut v = vec![Complex64::new(0.0, 0.0); n];
            for (j, q) in basis.iter().enumerate().take(k) {
                axpy(Complex64::new(eig.eigenvectors[(j, idx)], 0.0), q, &mut v);
            }
            let nv = norm(&v);
            scale(Complex64::new(1.0 / nv, 0.0), &mut v);
            v
        };
        let v0 = ritz(i0);
        let mut hv = vec![Complex64::new(0.0, 0.0); n];
        op.apply(&v0, &mut hv);
        axpy(Complex64::new(-theta0, 0.0), &v0, &mut hv);
        let residual = norm(&hv);
        best_residual = best_residual.min(residual);

        if residual <= target || k == n {
            return Ok(LowestPair {
                e0: theta0,
                e1: theta1,
                vector: v0,
                residual,
                iterations: total_iters,
            });
        }

        start = v0;
        if let Some(&i1) = order.get(1) {
            let v1 = ritz(i1);
            axpy(Complex64::new(1.0, 0.0), &v1, &mut start);
            let ns = norm(&start);
            scale(Complex64::new(1.0 / ns, 0.0), &mut start);
        }
    }

    Err(Error::NonConvergence {
        iterations: total_iters,
        residual: best_residual,
        target,
    })
}

/// `(A - shift) x` restricted to the orthogonal complement of `pin`.
struct Deflated<'a, A: LinearOp + ?Sized> {
    op: &'a A,
    shift: f64,
    pin: &'a [Complex64],
}

impl<A: LinearOp + ?Sized> Deflated<'_, A> {
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let mut xp = x.to_vec();
        project_out(self.pin, &mut xp);
        self.op.apply(&xp, y);
        axpy(Complex64::new(-self.shift, 0.0), &xp, y);
        project_out(self.pin, y);
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub solution: Vec<Complex64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Conjugate gradients for `P (A - shift) P x = P rhs` with `P = 1 - |pin><pin|`.
///
/// `pin` must be a unit vector; the operator is positive definite on the
/// complement when `shift` is the eigenvalue belonging to `pin` and the
/// spectrum above it is gapped.
pub fn deflated_cg<A: LinearOp + ?Sized>(
    op: &A,
    shift: f64,
    pin: &[Complex64],
    rhs: &[Complex64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<SolveOutcome> {
    let n = op.dim();
    if rhs.len() != n || pin.len() != n {
        return Err(Error::Shape(format!(
            "solve of dimension {n} with rhs {} and pin {}",
            rhs.len(),
            pin.len()
        )));
    }
    let a = Deflated { op, shift, pin };
    let mut b = rhs.to_vec();
    project_out(pin, &mut b);
    let bnorm = norm(&b);
    let zero = Complex64::new(0.0, 0.0);
    if bnorm == 0.0 {
        return Ok(SolveOutcome {
            solution: vec![zero; n],
            residual: 0.0,
            iterations: 0,
        });
    }
    let target = rel_tol * bnorm;
    let mut x = vec![zero; n];
    let mut r = b.clone();
    let mut p = r.clone();
    let mut ap = vec![zero; n];
    let mut rr = dot(&r, &r).re;
    for it in 0..max_iter {
        a.apply(&p, &mut ap);
        let pap = dot(&p, &ap).re;
        if pap <= 0.0 {
            return Err(Error::Degenerate {
                gap: pap / dot(&p, &p).re,
                threshold: 0.0,
            });
        }
        let alpha = rr / pap;
        axpy(Complex64::new(alpha, 0.0), &p, &mut x);
        axpy(Complex64::new(-alpha, 0.0), &ap, &mut r);
        let rr_new = dot(&r, &r).re;
        if rr_new.sqrt() <= target {
            // true residual, not the recurrence one
            a.apply(&x, &mut ap);
            let mut res = b.clone();
            axpy(Complex64::new(-1.0, 0.0), &ap, &mut res);
            let true_res = norm(&res);
            if true_res <= 10.0 * target {
                return Ok(SolveOutcome {
                    solution: x,
                    residual: true_res,
                    iterations: it + 1,
                });
            }
            r = res;
            rr = dot(&r, &r).re;
            p = r.clone();
            continue;
        }
        let beta = rr_new / rr;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        rr = rr_new;
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        residual: rr.sqrt(),
        target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Dense(DMatrix<Complex64>);

    impl LinearOp for Dense {
        fn dim(&self) -> usize {
            self.0.nrows()
        }
        fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
            for (r, yr) in y.iter_mut().enumerate() {
                *yr = (0..x.len()).map(|c| self.0[(r, c)] * x[c]).sum();
            }
        }
        fn norm_estimate(&self) -> f64 {
            self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
        }
    }

    fn test_matrix(n: usize) -> DMatrix<Complex64> {
        DMatrix::from_fn(n, n, |r, c| {
            if r == c {
                Complex64::new(r as f64 * 0.5 + 1.0, 0.0)
            } else if r + 1 == c {
                Complex64::new(0.3, 0.2)
            } else if c + 1 == r {
                Complex64::new(0.3, -0.2)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    #[test]
    fn lanczos_matches_dense() {
        let m = test_matrix(300);
        let (vals, _) = hermitian_eig(&m);
        let op = Dense(m);
        let opts = LanczosOptions {
            krylov: 40,
            ..Default::default()
        };
        let lp = lanczos_lowest(&op, opts).unwrap();
        assert!((lp.e0 - vals[0]).abs() < 1e-10, "{} vs {}", lp.e0, vals[0]);
        assert!((lp.e1 - vals[1]).abs() < 1e-6);
    }

    #[test]
    fn deflated_cg_inverts_on_complement() {
        let m = test_matrix(50);
        let (vals, vecs) = hermitian_eig(&m);
        let pin: Vec<Complex64> = vecs.column(0).iter().copied().collect();
        let rhs = random_unit_vector(50, 3);
        let op = Dense(m);
        let out = deflated_cg(&op, vals[0], &pin, &rhs, 1e-13, 500).unwrap();
        // spectral oracle
        let mut expect = vec![Complex64::new(0.0, 0.0); 50];
        for k in 1..50 {
            let col: Vec<Complex64> = vecs.column(k).iter().copied().collect();
            let c = dot(&col, &rhs) / (vals[k] - vals[0]);
            axpy(c, &col, &mut expect);
        }
        let mut diff = out.solution.clone();
        axpy(Complex64::new(-1.0, 0.0), &expect, &mut diff);
        assert!(norm(&diff) < 1e-10);
    }

    #[test]
    fn hermitian_eig_sorted_and_orthonormal() {
        let m = test_matrix(12);
        let (vals, vecs) = hermitian_eig(&m);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let gram = vecs.adjoint() * &vecs;
        for r in 0..12 {
            for c in 0..12 {
                let e = if r == c { 1.0 } else { 0.0 };
                assert!((gram[(r, c)] - Complex64::new(e, 0.0)).norm() < 1e-12);
            }
        }
    }
}

//! The long-range-order criterion `sqrt(IJ) > I_d`, with
//! `I_d = (2π)^{-d} ∫_{[-π,π]^d} E(k)^{-1/2} dk`, its finite-lattice mode
//! sums and the resulting lower bound on the zero-mode correlation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rotor::{dispersion, LatticeSpec};

/// Coarsest grid, in nodes per axis on `[0, π]`.
const START_NODES: usize = 8;
/// Upper limit on the total number of nodes of one grid.
const NODE_BUDGET: usize = 1 << 27;
/// Extrapolation levels beyond the raw midpoint values.
const LEVELS: usize = 2;
/// Successive growing refinements that signal divergence.
const GROWTH_RUN: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementStep {
    pub nodes_per_axis: usize,
    /// Plain midpoint value.
    pub raw: f64,
    /// Highest available Richardson extrapolation.
    pub extrapolated: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult {
    pub dim: usize,
    pub value: f64,
    pub error_estimate: f64,
    pub diverged: bool,
    pub refinement_trace: Vec<RefinementStep>,
}

fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 32 {
        v.iter().sum()
    } else {
        let (a, b) = v.split_at(v.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// Midpoint rule on `[0, π]^d` with `n` cells per axis; by evenness of `E`
/// this equals the shifted midpoint rule on the full zone. No node hits `k = 0`.
fn midpoint(d: usize, n: usize) -> f64 {
    let h = std::f64::consts::PI / n as f64;
    let cos: Vec<f64> = (0..n).map(|j| ((j as f64 + 0.5) * h).cos()).collect();
    let inner = n.pow(d as u32 - 1);
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|j0| {
            let mut acc = Vec::with_capacity(inner);
            for rest in 0..inner {
                let mut e = d as f64 - cos[j0];
                let mut r = rest;
                for _ in 1..d {
                    e -= cos[r % n];
                    r /= n;
                }
                acc.push(1.0 / e.sqrt());
            }
            pairwise_sum(&acc)
        })
        .collect();
    pairwise_sum(&rows) / (n as f64).powi(d as i32)
}

/// Richardson tableau for an error expansion in `h^{d-1}, h^{d+1}, ...`.
fn extrapolate(raw: &[f64], d: usize) -> Vec<Vec<f64>> {
    let mut table = vec![raw.to_vec()];
    for level in 0..LEVELS.min(raw.len().saturating_sub(1)) {
        let p = (d - 1 + 2 * level) as i32;
        let f = 2f64.powi(p);
        let prev = &table[level];
        let next: Vec<f64> = prev.windows(2).map(|w| (f * w[1] - w[0]) / (f - 1.0)).collect();
        table.push(next);
    }
    table
}

pub fn integral_id(d: usize, tol: f64) -> Result<IntegralResult> {
    if d == 0 {
        return Err(Error::Usage("dimension must be at least 1".into()));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::Usage(format!("tolerance must be positive, got {tol}")));
    }
    let mut raw = Vec::new();
    let mut trace = Vec::new();
    let mut n = START_NODES;
    let mut growth = 0usize;
    while n.checked_pow(d as u32).is_some_and(|t| t <= NODE_BUDGET) {
        let v = midpoint(d, n);
        raw.push(v);
        if d == 1 {
            trace.push(RefinementStep {
                nodes_per_axis: n,
                raw: v,
                extrapolated: v,
            });
            if raw.len() >= 2 {
                let inc = v - raw[raw.len() - 2];
                growth = if inc > tol { growth + 1 } else { 0 };
                if growth >= GROWTH_RUN {
                    return Ok(IntegralResult {
                        dim: d,
                        value: v,
                        error_estimate: f64::INFINITY,
                        diverged: true,
                        refinement_trace: trace,
                    });
                }
                if inc.abs() <= tol {
                    return Ok(IntegralResult {
                        dim: d,
                        value: v,
                        error_estimate: inc.abs(),
                        diverged: false,
                        refinement_trace: trace,
                    });
                }
            }
        } else {
            let table = extrapolate(&raw, d);
            let top = table.iter().rev().find(|row| !row.is_empty()).expect("raw row");
            trace.push(RefinementStep {
                nodes_per_axis: n,
                raw: v,
                extrapolated: *top.last().expect("nonempty"),
            });
            if table.len() > LEVELS && top.len() >= 2 {
                let est = (top[top.len() - 1] - top[top.len() - 2]).abs();
                if est <= tol {
                    return Ok(IntegralResult {
                        dim: d,
                        value: top[top.len() - 1],
                        error_estimate: est,
                        diverged: false,
                        refinement_trace: trace,
                    });
                }
            }
        }
        n *= 2;
    }
    let last = trace.last().copied().ok_or(Error::EmptyInput("no quadrature grid fits the node budget"))?;
    let estimate = if trace.len() >= 2 {
        (last.extrapolated - trace[trace.len() - 2].extrapolated).abs()
    } else {
        f64::INFINITY
    };
    Err(Error::Precision {
        best: last.extrapolated,
        estimate,
        target: tol,
    })
}

/// `(1/|Λ|) sum_{k != 0} E(k)^{-1/2}` over the Brillouin grid of edge `2N`.
pub fn finite_mode_sum(d: usize, half_edge: usize) -> Result<f64> {
    let lat = LatticeSpec::build(d, half_edge)?;
    let terms: Vec<f64> = lat
        .momenta
        .iter()
        .map(|k| dispersion(k))
        .filter(|&e| e != 0.0)
        .map(|e| 1.0 / e.sqrt())
        .collect();
    Ok(pairwise_sum(&terms) / lat.num_sites() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub holds: bool,
    /// `(sqrt(IJ) - S) / (2 sqrt(IJ))`.
    pub lower_bound_c: f64,
    /// `S`: the finite mode sum, or `I_d` for the infinite lattice.
    pub mode_sum: f64,
    pub sqrt_ij: f64,
    /// `None` for the infinite lattice.
    pub half_edge: Option<usize>,
}

/// Quadrature tolerance used for the infinite-lattice verdict.
pub const VERDICT_TOL: f64 = 1e-8;

pub fn lro_verdict(inertia: f64, coupling: f64, d: usize, half_edge: Option<usize>) -> Result<Verdict> {
    if !(inertia > 0.0 && coupling > 0.0 && inertia.is_finite() && coupling.is_finite()) {
        return Err(Error::Usage(format!(
            "the criterion needs I > 0 and J > 0, got I={inertia}, J={coupling}"
        )));
    }
    let sqrt_ij = (inertia * coupling).sqrt();
    let mode_sum = match half_edge {
        Some(n) => finite_mode_sum(d, n)?,
        None => {
            let r = integral_id(d, VERDICT_TOL)?;
            if r.diverged {
                f64::INFINITY
            } else {
                r.value
            }
        }
    };
    let lower_bound_c = if mode_sum.is_infinite() {
        f64::NEG_INFINITY
    } else {
        (sqrt_ij - mode_sum) / (2.0 * sqrt_ij)
    };
    Ok(Verdict {
        holds: sqrt_ij > mode_sum,
        lower_bound_c,
        mode_sum,
        sqrt_ij,
        half_edge,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_integral() {
        let r = integral_id(2, 1e-9).unwrap();
        assert!(!r.diverged);
        assert!((r.value - 0.909173).abs() < 1e-6, "{}", r.value);
        assert!(r.error_estimate <= 1e-9);
    }

    #[test]
    fn cubic_integral() {
        let r = integral_id(3, 1e-8).unwrap();
        assert!((r.value - 0.643954).abs() < 1e-6, "{}", r.value);
    }

    #[test]
    fn chain_diverges() {
        let r = integral_id(1, 1e-6).unwrap();
        assert!(r.diverged);
        let incs: Vec<f64> = r.refinement_trace.windows(2).map(|w| w[1].raw - w[0].raw).collect();
        // log growth: each doubling adds about sqrt(2) ln 2 / π
        let step = 2f64.sqrt() * 2f64.ln() / std::f64::consts::PI;
        assert!((incs.last().unwrap() - step).abs() < 1e-3);
    }

    #[test]
    fn unreachable_tolerance() {
        assert!(matches!(integral_id(2, 1e-17), Err(Error::Precision { .. })));
        assert!(matches!(integral_id(2, 0.0), Err(Error::Usage(_))));
    }

    #[test]
    fn minimal_square_mode_sum() {
        // three nonzero modes (π,0), (0,π) with E = 2 and (π,π) with E = 4
        let want = (2.0 / 2f64.sqrt() + 0.5) / 4.0;
        assert!((finite_mode_sum(2, 1).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn mode_sum_enumeration() {
        // independent enumeration over m in (-N, N]
        let n = 3i64;
        let mut acc = 0.0;
        for m1 in -n + 1..=n {
            for m2 in -n + 1..=n {
                if m1 == 0 && m2 == 0 {
                    continue;
                }
                let k1 = std::f64::consts::PI * m1 as f64 / n as f64;
                let k2 = std::f64::consts::PI * m2 as f64 / n as f64;
                acc += 1.0 / (2.0 - k1.cos() - k2.cos()).sqrt();
            }
        }
        assert!((finite_mode_sum(2, 3).unwrap() - acc / 36.0).abs() < 1e-13);
    }

    #[test]
    fn verdicts() {
        let v = lro_verdict(1.0, 1.0, 2, None).unwrap();
        assert!(v.holds);
        assert!((v.lower_bound_c - 0.0454135).abs() < 1e-6);
        assert!(!lro_verdict(0.5, 0.5, 2, None).unwrap().holds);
        let chain = lro_verdict(100.0, 100.0, 1, None).unwrap();
        assert!(!chain.holds && chain.lower_bound_c == f64::NEG_INFINITY);
        assert!(lro_verdict(0.0, 1.0, 2, None).is_err());
    }

    #[test]
    fn verdict_sign_matches_holds() {
        for &(i, j) in &[(0.3, 2.0), (1.0, 0.9), (2.0, 2.0)] {
            for n in [2, 4] {
                let v = lro_verdict(i, j, 2, Some(n)).unwrap();
                assert_eq!(v.holds, v.lower_bound_c > 0.0);
            }
        }
    }
}

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::schatten::ComplexDense;

/// Single-rotor operators in the basis `e^{i n φ}`, `n = -M..M`, index `n + M`.
#[derive(Debug, Clone)]
pub struct SiteOperators {
    pub cutoff: usize,
    pub inertia: f64,
    /// `diag(n^2 / (2I))`.
    pub kinetic: ComplexDense,
    /// `(S+ + S-) / 2`, the compression of `cos φ`.
    pub cos: ComplexDense,
    /// `(S+ - S-) / 2i`, the compression of `sin φ`.
    pub sin: ComplexDense,
}

impl SiteOperators {
    pub fn new(cutoff: usize, inertia: f64) -> Result<Self> {
        if cutoff == 0 {
            return Err(Error::Usage("angular momentum cutoff must be at least 1".into()));
        }
        if !(inertia > 0.0 && inertia.is_finite()) {
            return Err(Error::Usage(format!("moment of inertia must be positive, got {inertia}")));
        }
        let m = cutoff as i64;
        let dim = 2 * cutoff + 1;
        let zero = Complex64::new(0.0, 0.0);
        let kinetic = ComplexDense::from_fn(dim, dim, |r, c| {
            if r == c {
                let n = r as i64 - m;
                Complex64::new((n * n) as f64 / (2.0 * inertia), 0.0)
            } else {
                zero
            }
        });
        let cos = ComplexDense::from_fn(dim, dim, |r, c| {
            if r.abs_diff(c) == 1 {
                Complex64::new(0.5, 0.0)
            } else {
                zero
            }
        });
        // S+ has ones at (n+1, n); (S+ - S-)/2i puts -i/2 below, +i/2 above the diagonal
        let sin = ComplexDense::from_fn(dim, dim, |r, c| {
            if r == c + 1 {
                Complex64::new(0.0, -0.5)
            } else if c == r + 1 {
                Complex64::new(0.0, 0.5)
            } else {
                zero
            }
        });
        Ok(Self {
            cutoff,
            inertia,
            kinetic,
            cos,
            sin,
        })
    }

    pub fn local_dim(&self) -> usize {
        2 * self.cutoff + 1
    }

    /// Compression of the multiplication operator `sin^2 φ`: `1/2 - (S+^2 + S-^2)/4`.
    pub fn sin_squared(&self) -> ComplexDense {
        self.squared_multiplier(-0.25)
    }

    /// Compression of `cos^2 φ`: `1/2 + (S+^2 + S-^2)/4`.
    pub fn cos_squared(&self) -> ComplexDense {
        self.squared_multiplier(0.25)
    }

    fn squared_multiplier(&self, off: f64) -> ComplexDense {
        let dim = self.local_dim();
        ComplexDense::from_fn(dim, dim, |r, c| {
            if r == c {
                Complex64::new(0.5, 0.0)
            } else if r.abs_diff(c) == 2 {
                Complex64::new(off, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }
}

/// `(kinetic, cos, sin)` for cutoff `M` and inertia `I`.
pub fn site_operators(cutoff: usize, inertia: f64) -> Result<SiteOperators> {
    SiteOperators::new(cutoff, inertia)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinetic_for_m1() {
        let s = site_operators(1, 1.0).unwrap();
        assert_eq!(s.kinetic, ComplexDense::diag(&[0.5, 0.0, 0.5]));
    }

    #[test]
    fn cos_has_half_on_off_diagonals() {
        let s = site_operators(1, 1.0).unwrap();
        let expect = ComplexDense::from_real(3, 3, &[0.0, 0.5, 0.0, 0.5, 0.0, 0.5, 0.0, 0.5, 0.0]).unwrap();
        assert_eq!(s.cos, expect);
        assert_eq!(s.cos.hermiticity_defect(), 0.0);
        assert_eq!(s.sin.hermiticity_defect(), 0.0);
    }

    #[test]
    fn squares_lose_weight_at_the_cutoff() {
        // band-matrix product oracle: (C^2 + S^2)_{nn} = 1/4 * (#neighbours) * 2
        let s = site_operators(1, 1.0).unwrap();
        let sum = &(&s.cos * &s.cos) + &(&s.sin * &s.sin);
        assert!(sum.max_abs_diff(&ComplexDense::diag(&[0.5, 1.0, 0.5])) < 1e-15);
    }

    #[test]
    fn galerkin_squares_add_to_identity() {
        let s = site_operators(3, 2.0).unwrap();
        let sum = &s.cos_squared() + &s.sin_squared();
        assert_eq!(sum, ComplexDense::identity(7));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(site_operators(0, 1.0).is_err());
        assert!(site_operators(2, 0.0).is_err());
    }
}

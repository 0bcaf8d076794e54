use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::LatticeSpec;
use crate::error::{shape_err, Error, Result};

/// Complex shift `b_x` per site, in the site order of a [`LatticeSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbField {
    pub values: Vec<Complex64>,
}

impl PerturbField {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite { row: i, col: 0 });
        }
        Ok(Self { values })
    }

    pub fn zeros(sites: usize) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); sites],
        }
    }

    pub fn constant(sites: usize, value: Complex64) -> Self {
        Self {
            values: vec![value; sites],
        }
    }

    /// `|Λ|^{-1/2} e^{i k·x}`.
    pub fn plane_wave(lat: &LatticeSpec, k: &[f64]) -> Result<Self> {
        lat.momentum_index(k)?;
        let amp = 1.0 / (lat.num_sites() as f64).sqrt();
        Ok(Self {
            values: (0..lat.num_sites())
                .map(|s| Complex64::from_polar(amp, lat.dot_k(k, s)))
                .collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            values: self.values.iter().map(|z| z * lambda).collect(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub(crate) fn check_sites(&self, lat: &LatticeSpec) -> Result<()> {
        if self.len() != lat.num_sites() {
            return Err(shape_err(format!(
                "field has {} values, lattice has {} sites",
                self.len(),
                lat.num_sites()
            )));
        }
        Ok(())
    }

    /// Number of bonds with `b_x != b_y`.
    pub fn nonzero_bonds(&self, lat: &LatticeSpec) -> usize {
        lat.bonds
            .iter()
            .filter(|b| self.values[b.site] != self.values[b.neighbor])
            .count()
    }
}

/// Output of [`reflect_field`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectedFields {
    /// `b` on `Λ_L`, mirrored onto `Λ_R`.
    pub left: PerturbField,
    /// `b` on `Λ_R`, mirrored onto `Λ_L`.
    pub right: PerturbField,
    /// `(l, l_L, l_R)`: bonds with differing endpoints for `b`, `b_L`, `b_R`.
    pub nonzero_bonds: (usize, usize, usize),
}

pub fn reflect_field(b: &PerturbField, lat: &LatticeSpec) -> Result<ReflectedFields> {
    b.check_sites(lat)?;
    let n = lat.num_sites();
    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    for s in 0..n {
        let mirror = lat.reflect(s)?;
        if lat.in_left_half(s)? {
            left.push(b.values[s]);
            right.push(b.values[mirror]);
        } else {
            left.push(b.values[mirror]);
            right.push(b.values[s]);
        }
    }
    let left = PerturbField { values: left };
    let right = PerturbField { values: right };
    let counts = (b.nonzero_bonds(lat), left.nonzero_bonds(lat), right.nonzero_bonds(lat));
    Ok(ReflectedFields {
        left,
        right,
        nonzero_bonds: counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn symmetric_field_is_fixed() {
        let lat = LatticeSpec::build(1, 2).unwrap();
        // sites -1,0,1,2: mirror pairs (0,1) and (-1,2)
        let b = PerturbField::new(vec![c(3.0), c(1.0), c(1.0), c(3.0)]).unwrap();
        let r = reflect_field(&b, &lat).unwrap();
        assert_eq!(r.left, b);
        assert_eq!(r.right, b);
    }

    #[test]
    fn left_copy_is_exact() {
        let lat = LatticeSpec::build(2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = PerturbField::new(
            (0..16).map(|_| Complex64::new(rng.random(), rng.random())).collect(),
        )
        .unwrap();
        let r = reflect_field(&b, &lat).unwrap();
        for s in 0..16 {
            if lat.in_left_half(s).unwrap() {
                assert_eq!(r.left.values[s], b.values[s]);
            } else {
                assert_eq!(r.right.values[s], b.values[s]);
            }
        }
    }

    #[test]
    fn crossing_bond_reduces_count() {
        // brute-force oracle: count differing bonds directly, then compare to
        // the expected reduction from the crossing bonds
        let lat = LatticeSpec::build(2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let b = PerturbField::new((0..16).map(|_| c(rng.random_range(0..3) as f64)).collect()).unwrap();
            let r = reflect_field(&b, &lat).unwrap();
            let (l, ll, lr) = r.nonzero_bonds;
            let crossing = lat
                .bonds
                .iter()
                .filter(|bd| {
                    lat.in_left_half(bd.site).unwrap() != lat.in_left_half(bd.neighbor).unwrap()
                        && b.values[bd.site] != b.values[bd.neighbor]
                })
                .count();
            let mut brute = 0;
            for bd in &lat.bonds {
                if r.left.values[bd.site] != r.left.values[bd.neighbor] {
                    brute += 1;
                }
                if r.right.values[bd.site] != r.right.values[bd.neighbor] {
                    brute += 1;
                }
            }
            assert_eq!(ll + lr, brute);
            assert_eq!(ll + lr, 2 * l - 2 * crossing);
            if crossing > 0 {
                assert!(ll + lr < 2 * l);
            }
        }
    }

    #[test]
    fn plane_wave_rejects_off_grid() {
        let lat = LatticeSpec::build(1, 2).unwrap();
        assert!(PerturbField::plane_wave(&lat, &[0.1]).is_err());
        let pw = PerturbField::plane_wave(&lat, &[std::f64::consts::PI]).unwrap();
        assert!((pw.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_nan() {
        assert!(PerturbField::new(vec![Complex64::new(f64::NAN, 0.0)]).is_err());
    }
}

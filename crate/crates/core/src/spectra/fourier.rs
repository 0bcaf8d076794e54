use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rotor::{LatticeSpec, ProductSpace};

/// `x` uses `cos φ`, `y` uses `sin φ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpinComponent {
    X,
    Y,
}

/// `ŝ_k = |Λ|^{-1/2} sum_x s_x e^{i k·x}` applied to `psi`; with `adjoint`
/// set, applies `(ŝ_k)* = |Λ|^{-1/2} sum_x s_x e^{-i k·x}` instead.
pub fn spin_fourier_apply(
    space: &ProductSpace,
    lat: &LatticeSpec,
    psi: &[Complex64],
    k: &[f64],
    adjoint: bool,
    component: SpinComponent,
) -> Result<Vec<Complex64>> {
    lat.momentum_index(k)?;
    if space.sites != lat.num_sites() || psi.len() != space.dim() {
        return Err(Error::Shape(format!(
            "state of length {} on {} sites, expected {} on {}",
            psi.len(),
            space.sites,
            space.dim(),
            lat.num_sites()
        )));
    }
    let local = space.local_dim();
    let norm = 1.0 / (lat.num_sites() as f64).sqrt();
    let sign = if adjoint { -1.0 } else { 1.0 };
    // amplitudes of S+ and S- in the chosen component
    let (up, down) = match component {
        SpinComponent::X => (Complex64::new(0.5, 0.0), Complex64::new(0.5, 0.0)),
        SpinComponent::Y => (Complex64::new(0.0, -0.5), Complex64::new(0.0, 0.5)),
    };
    let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
    for x in 0..lat.num_sites() {
        let phase = Complex64::from_polar(norm, sign * lat.dot_k(k, x));
        let (pu, pd) = (phase * up, phase * down);
        let stride = space.stride(x);
        for (s, &z) in psi.iter().enumerate() {
            if z == Complex64::new(0.0, 0.0) {
                continue;
            }
            let digit = (s / stride) % local;
            if digit + 1 < local {
                out[s + stride] += pu * z;
            }
            if digit > 0 {
                out[s - stride] += pd * z;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dot, norm};
    use crate::rotor::site_operators;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(dim: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..dim).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()
    }

    #[test]
    fn product_vacuum_has_half_weight() {
        let lat = LatticeSpec::build(1, 2).unwrap();
        let space = ProductSpace::new(4, 1).unwrap();
        let mut psi = vec![Complex64::new(0.0, 0.0); space.dim()];
        psi[space.encode(&[0, 0, 0, 0])] = Complex64::new(1.0, 0.0);
        for k in &lat.momenta {
            let v = spin_fourier_apply(&space, &lat, &psi, k, true, SpinComponent::X).unwrap();
            assert!((norm(&v).powi(2) - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_mode_is_hermitian() {
        let lat = LatticeSpec::build(1, 2).unwrap();
        let space = ProductSpace::new(4, 1).unwrap();
        let psi = random_state(space.dim(), 1);
        for comp in [SpinComponent::X, SpinComponent::Y] {
            let a = spin_fourier_apply(&space, &lat, &psi, &[0.0], false, comp).unwrap();
            let b = spin_fourier_apply(&space, &lat, &psi, &[0.0], true, comp).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn adjoint_pairs_correctly() {
        let lat = LatticeSpec::build(1, 2).unwrap();
        let space = ProductSpace::new(4, 2).unwrap();
        let phi = random_state(space.dim(), 2);
        let psi = random_state(space.dim(), 3);
        let k = [std::f64::consts::FRAC_PI_2];
        for comp in [SpinComponent::X, SpinComponent::Y] {
            let lhs = dot(&phi, &spin_fourier_apply(&space, &lat, &psi, &k, false, comp).unwrap());
            let rhs = dot(&spin_fourier_apply(&space, &lat, &phi, &k, true, comp).unwrap(), &psi);
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn linear() {
        let lat = LatticeSpec::build(1, 2).unwrap();
        let space = ProductSpace::new(4, 1).unwrap();
        let (p1, p2) = (random_state(81, 4), random_state(81, 5));
        let (al, be) = (Complex64::new(0.3, -1.2), Complex64::new(2.0, 0.5));
        let mix: Vec<Complex64> = p1.iter().zip(&p2).map(|(x, y)| al * x + be * y).collect();
        let k = [std::f64::consts::PI];
        let f = |v: &[Complex64]| spin_fourier_apply(&space, &lat, v, &k, false, SpinComponent::Y).unwrap();
        let (a, b, c) = (f(&p1), f(&p2), f(&mix));
        for i in 0..81 {
            assert!((c[i] - (al * a[i] + be * b[i])).norm() < 1e-12);
        }
    }

    #[test]
    fn matches_one_site_sum() {
        let lat = LatticeSpec::build(1, 2).unwrap();
        let space = ProductSpace::new(4, 1).unwrap();
        let ops = site_operators(1, 1.0).unwrap();
        let psi = random_state(81, 6);
        let k = [-std::f64::consts::FRAC_PI_2];
        let got = spin_fourier_apply(&space, &lat, &psi, &k, false, SpinComponent::Y).unwrap();
        let mut want = vec![Complex64::new(0.0, 0.0); 81];
        for x in 0..4 {
            let ph = Complex64::from_polar(0.5, lat.dot_k(&k, x));
            for (w, v) in want.iter_mut().zip(space.apply_local(x, &ops.sin, &psi)) {
                *w += ph * v;
            }
        }
        for i in 0..81 {
            assert!((got[i] - want[i]).norm() < 1e-14);
        }
    }

    #[test]
    fn off_grid_momentum() {
        let lat = LatticeSpec::build(1, 2).unwrap();
        let space = ProductSpace::new(4, 1).unwrap();
        let psi = random_state(81, 7);
        assert!(matches!(
            spin_fourier_apply(&space, &lat, &psi, &[1.0], false, SpinComponent::X),
            Err(Error::Usage(_))
        ));
    }
}

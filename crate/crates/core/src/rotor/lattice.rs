use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nearest-neighbour pair `(site, neighbor)` along `axis`, with
/// `neighbor = site + e_axis` under periodic wrap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bond {
    pub site: usize,
    pub neighbor: usize,
    pub axis: usize,
}

/// Mirror plane `x_axis = 1/2`, mapping `x_axis -> 1 - x_axis`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReflectionPlane {
    pub axis: usize,
}

/// Periodic hypercube `{-N+1, ..., N}^d` of edge `2N`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub dim: usize,
    pub half_edge: usize,
    /// Integer coordinates, lexicographic with axis 0 most significant.
    pub sites: Vec<Vec<i64>>,
    pub bonds: Vec<Bond>,
    /// Brillouin grid `k_j = pi m / N`, `m = -N+1..N`, same ordering as `sites`.
    pub momenta: Vec<Vec<f64>>,
    pub plane: Option<ReflectionPlane>,
}

/// `d - sum_i cos k_i`.
pub fn dispersion(k: &[f64]) -> f64 {
    k.len() as f64 - k.iter().map(|x| x.cos()).sum::<f64>()
}

fn lexicographic(dim: usize, values: &[i64]) -> Vec<Vec<i64>> {
    let base = values.len();
    let count = base.pow(dim as u32);
    (0..count)
        .map(|mut idx| {
            let mut coords = vec![0; dim];
            for axis in (0..dim).rev() {
                coords[axis] = values[idx % base];
                idx /= base;
            }
            coords
        })
        .collect()
}

impl LatticeSpec {
    /// Lattice with the reflection plane `x_1 = 1/2` declared.
    pub fn build(dim: usize, half_edge: usize) -> Result<Self> {
        if dim == 0 || half_edge == 0 {
            return Err(Error::Usage(format!(
                "lattice needs d >= 1 and N >= 1, got d={dim}, N={half_edge}"
            )));
        }
        let n = half_edge as i64;
        let coords: Vec<i64> = (-n + 1..=n).collect();
        let sites = lexicographic(dim, &coords);
        let momenta = lexicographic(dim, &coords)
            .into_iter()
            .map(|m| m.into_iter().map(|mj| PI * mj as f64 / n as f64).collect())
            .collect();
        let mut lat = Self {
            dim,
            half_edge,
            sites,
            bonds: Vec::new(),
            momenta,
            plane: Some(ReflectionPlane { axis: 0 }),
        };
        let mut bonds = Vec::with_capacity(dim * lat.num_sites());
        for s in 0..lat.num_sites() {
            for axis in 0..dim {
                bonds.push(Bond {
                    site: s,
                    neighbor: lat.shifted(s, axis, 1),
                    axis,
                });
            }
        }
        lat.bonds = bonds;
        Ok(lat)
    }

    pub fn without_plane(mut self) -> Self {
        self.plane = None;
        self
    }

    pub fn edge(&self) -> usize {
        2 * self.half_edge
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    /// Edge 2 carries every nearest-neighbour pair twice.
    pub fn has_doubled_bonds(&self) -> bool {
        self.edge() == 2
    }

    /// Index of a coordinate vector, wrapping every axis into range.
    pub fn index_of(&self, coords: &[i64]) -> usize {
        let n = self.half_edge as i64;
        let edge = 2 * n;
        coords.iter().fold(0usize, |acc, &x| {
            let offset = (x + n - 1).rem_euclid(edge);
            acc * edge as usize + offset as usize
        })
    }

    /// Site reached from `site` by `step` units along `axis`, periodic.
    pub fn shifted(&self, site: usize, axis: usize, step: i64) -> usize {
        let mut c = self.sites[site].clone();
        c[axis] += step;
        self.index_of(&c)
    }

    /// Mirror image across the declared plane.
    pub fn reflect(&self, site: usize) -> Result<usize> {
        let plane = self
            .plane
            .ok_or_else(|| Error::Usage("lattice has no reflection plane".into()))?;
        let mut c = self.sites[site].clone();
        c[plane.axis] = 1 - c[plane.axis];
        Ok(self.index_of(&c))
    }

    /// Sites with first coordinate `<= 0`.
    pub fn in_left_half(&self, site: usize) -> Result<bool> {
        let plane = self
            .plane
            .ok_or_else(|| Error::Usage("lattice has no reflection plane".into()))?;
        Ok(self.sites[site][plane.axis] <= 0)
    }

    /// Index of a grid momentum, or a usage error for off-grid values.
    pub fn momentum_index(&self, k: &[f64]) -> Result<usize> {
        if k.len() != self.dim {
            return Err(Error::Usage(format!(
                "momentum of dimension {} on a {}-dimensional lattice",
                k.len(),
                self.dim
            )));
        }
        let n = self.half_edge as f64;
        let mut idx = 0usize;
        for &kj in k {
            let m = kj * n / PI;
            let mr = m.round();
            if (m - mr).abs() > 1e-9 {
                return Err(Error::Usage(format!("momentum component {kj} is not on the Brillouin grid")));
            }
            // fold into m = -N+1..N
            let edge = 2 * self.half_edge as i64;
            let folded = (mr as i64 + self.half_edge as i64 - 1).rem_euclid(edge);
            idx = idx * edge as usize + folded as usize;
        }
        Ok(idx)
    }

    /// Index of `k = 0` in `momenta`.
    pub fn zero_momentum_index(&self) -> usize {
        self.momentum_index(&vec![0.0; self.dim]).expect("zero is on every grid")
    }

    pub fn dot_k(&self, k: &[f64], site: usize) -> f64 {
        k.iter().zip(&self.sites[site]).map(|(a, &x)| a * x as f64).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_of_four() {
        let lat = LatticeSpec::build(1, 2).unwrap();
        assert_eq!(lat.sites, vec![vec![-1], vec![0], vec![1], vec![2]]);
        assert_eq!(lat.bonds.len(), 4);
        // x = N neighbours x = -N + 1
        assert_eq!(lat.bonds[3].neighbor, 0);
        let ks: Vec<f64> = lat.momenta.iter().map(|k| k[0]).collect();
        assert_eq!(ks, vec![-PI / 2.0, 0.0, PI / 2.0, PI]);
    }

    #[test]
    fn square_counts() {
        let lat = LatticeSpec::build(2, 2).unwrap();
        assert_eq!(lat.num_sites(), 16);
        assert_eq!(lat.bonds.len(), 32);
    }

    #[test]
    fn minimal_square_doubles_pairs() {
        // brute-force oracle: every site has its distinct neighbours enumerated
        // by coordinate difference +-1 mod 2, each unordered pair appears twice
        let lat = LatticeSpec::build(2, 1).unwrap();
        assert_eq!(lat.num_sites(), 4);
        assert_eq!(lat.bonds.len(), 8);
        assert!(lat.has_doubled_bonds());
        let mut pairs = std::collections::HashMap::new();
        for b in &lat.bonds {
            let key = (b.site.min(b.neighbor), b.site.max(b.neighbor));
            *pairs.entry(key).or_insert(0) += 1;
        }
        assert_eq!(pairs.len(), 4);
        assert!(pairs.values().all(|&c| c == 2));
    }

    #[test]
    fn every_site_has_2d_neighbour_slots() {
        let lat = LatticeSpec::build(3, 2).unwrap();
        let mut slots = vec![0usize; lat.num_sites()];
        for b in &lat.bonds {
            slots[b.site] += 1;
            slots[b.neighbor] += 1;
        }
        assert!(slots.iter().all(|&s| s == 6));
    }

    #[test]
    fn reflection_swaps_halves() {
        let lat = LatticeSpec::build(2, 2).unwrap();
        for s in 0..lat.num_sites() {
            let r = lat.reflect(s).unwrap();
            assert_eq!(lat.reflect(r).unwrap(), s);
            assert_ne!(lat.in_left_half(s).unwrap(), lat.in_left_half(r).unwrap());
        }
        let left = (0..lat.num_sites()).filter(|&s| lat.in_left_half(s).unwrap()).count();
        assert_eq!(left, 8);
    }

    #[test]
    fn bond_set_is_reflection_symmetric() {
        let lat = LatticeSpec::build(2, 2).unwrap();
        let set: std::collections::HashSet<(usize, usize)> = lat
            .bonds
            .iter()
            .map(|b| (b.site.min(b.neighbor), b.site.max(b.neighbor)))
            .collect();
        for &(a, b) in &set {
            let (ra, rb) = (lat.reflect(a).unwrap(), lat.reflect(b).unwrap());
            assert!(set.contains(&(ra.min(rb), ra.max(rb))));
        }
    }

    #[test]
    fn dispersion_values() {
        assert_eq!(dispersion(&[0.0, 0.0]), 0.0);
        assert!((dispersion(&[PI, PI]) - 4.0).abs() < 1e-15);
        assert!((dispersion(&[PI, 0.0, 0.0]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn momentum_lookup() {
        let lat = LatticeSpec::build(2, 2).unwrap();
        for (i, k) in lat.momenta.iter().enumerate() {
            assert_eq!(lat.momentum_index(k).unwrap(), i);
        }
        assert_eq!(lat.momentum_index(&[-PI, 0.0]).unwrap(), lat.momentum_index(&[PI, 0.0]).unwrap());
        assert!(matches!(lat.momentum_index(&[0.3, 0.0]), Err(Error::Usage(_))));
        assert!(lat.clone().without_plane().reflect(0).is_err());
    }
}

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{LatticeSpec, PerturbField};
use crate::error::{Error, Result};
use crate::linalg::LinearOp;
use crate::schatten::ComplexDense;

/// Coupled rotor parameters: inertia `I`, coupling `J`, per-site cutoff `M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotorModel {
    pub inertia: f64,
    pub coupling: f64,
    pub cutoff: usize,
}

impl RotorModel {
    pub fn new(inertia: f64, coupling: f64, cutoff: usize) -> Result<Self> {
        if !(inertia > 0.0 && inertia.is_finite()) {
            return Err(Error::Usage(format!("moment of inertia must be positive, got {inertia}")));
        }
        if !(coupling >= 0.0 && coupling.is_finite()) {
            return Err(Error::Usage(format!("coupling must be nonnegative, got {coupling}")));
        }
        if cutoff == 0 {
            return Err(Error::Usage("angular momentum cutoff must be at least 1".into()));
        }
        Ok(Self {
            inertia,
            coupling,
            cutoff,
        })
    }

    pub fn local_dim(&self) -> usize {
        2 * self.cutoff + 1
    }

    pub fn with_cutoff(&self, cutoff: usize) -> Self {
        Self { cutoff, ..*self }
    }
}

/// Product basis `⊗_x e^{i n_x φ_x}`, site 0 most significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProductSpace {
    pub sites: usize,
    pub cutoff: usize,
}

impl ProductSpace {
    pub fn new(sites: usize, cutoff: usize) -> Result<Self> {
        let local = 2 * cutoff + 1;
        let mut dim: usize = 1;
        for _ in 0..sites {
            dim = dim
                .checked_mul(local)
                .filter(|&d| d <= 1 << 28)
                .ok_or_else(|| Error::Usage(format!("product space (2M+1)^{sites} with M={cutoff} is too large")))?;
        }
        Ok(Self { sites, cutoff })
    }

    pub fn local_dim(&self) -> usize {
        2 * self.cutoff + 1
    }

    pub fn dim(&self) -> usize {
        self.local_dim().pow(self.sites as u32)
    }

    pub fn stride(&self, site: usize) -> usize {
        self.local_dim().pow((self.sites - 1 - site) as u32)
    }

    /// Angular momenta `n_x` of a basis index.
    pub fn decode(&self, mut index: usize) -> Vec<i64> {
        let local = self.local_dim();
        let m = self.cutoff as i64;
        let mut ns = vec![0; self.sites];
        for x in (0..self.sites).rev() {
            ns[x] = (index % local) as i64 - m;
            index /= local;
        }
        ns
    }

    pub fn encode(&self, ns: &[i64]) -> usize {
        let m = self.cutoff as i64;
        ns.iter()
            .fold(0usize, |acc, &n| acc * self.local_dim() + (n + m) as usize)
    }

    pub fn total_charge(&self, index: usize) -> i64 {
        self.decode(index).iter().sum()
    }

    /// `(op acting on site) psi` for a `(2M+1)x(2M+1)` matrix `op`.
    pub fn apply_local(&self, site: usize, op: &ComplexDense, psi: &[Complex64]) -> Vec<Complex64> {
        let local = self.local_dim();
        let stride = self.stride(site);
        let block = stride * local;
        let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
        for base in (0..psi.len()).step_by(block) {
            for inner in 0..stride {
                let off = base + inner;
                for r in 0..local {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for c in 0..local {
                        let a = op.get(r, c);
                        if a != Complex64::new(0.0, 0.0) {
                            acc += a * psi[off + c * stride];
                        }
                    }
                    out[off + r * stride] = acc;
                }
            }
        }
        out
    }

    /// Zero-pads a state into the space with a larger cutoff.
    pub fn embed(&self, psi: &[Complex64], target: &ProductSpace) -> Result<Vec<Complex64>> {
        if target.sites != self.sites || target.cutoff < self.cutoff || psi.len() != self.dim() {
            return Err(Error::Usage("embedding needs the same sites and a larger cutoff".into()));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); target.dim()];
        for (i, &z) in psi.iter().enumerate() {
            out[target.encode(&self.decode(i))] = z;
        }
        Ok(out)
    }
}

/// `H(b)` in compressed-row storage, including the constant `J |bonds|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHamiltonian {
    pub dim: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub values: Vec<Complex64>,
    pub constant_offset: f64,
    pub space: ProductSpace,
    pub doubled_bonds: bool,
}

impl SparseHamiltonian {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |p| (r, self.cols[p], self.values[p]))
        })
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        let slice = &self.cols[self.row_ptr[row]..self.row_ptr[row + 1]];
        match slice.binary_search(&col) {
            Ok(p) => self.values[self.row_ptr[row] + p],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    /// True when every stored entry equals the conjugate of its mirror.
    pub fn is_exactly_hermitian(&self) -> bool {
        self.entries().all(|(r, c, v)| self.get(c, r) == v.conj())
    }

    pub fn to_dense(&self) -> ComplexDense {
        let mut m = ComplexDense::zeros(self.dim, self.dim).into_matrix();
        for (r, c, v) in self.entries() {
            m[(r, c)] = v;
        }
        ComplexDense::from_matrix(m).expect("stored entries are finite")
    }

    /// `row col re im` per line, zero-based indices.
    pub fn write_coo<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (r, c, v) in self.entries() {
            writeln!(w, "{r} {c} {:e} {:e}", v.re, v.im)?;
        }
        Ok(())
    }

    /// `H + sum_i op_i` with each `op_i` a Hermitian one-site matrix.
    pub fn plus_site_terms(&self, terms: &[(usize, ComplexDense)]) -> Result<Self> {
        let local = self.space.local_dim();
        for (site, op) in terms {
            if *site >= self.space.sites || op.rows() != local || op.cols() != local {
                return Err(Error::Shape(format!("one-site term on site {site} of shape {}x{}", op.rows(), op.cols())));
            }
            if op.hermiticity_defect() != 0.0 {
                return Err(Error::Contract("one-site term is not Hermitian".into()));
            }
        }
        let mut row_ptr = Vec::with_capacity(self.dim + 1);
        let mut cols = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        let mut row: Vec<(usize, Complex64)> = Vec::new();
        row_ptr.push(0);
        for r in 0..self.dim {
            row.clear();
            row.extend((self.row_ptr[r]..self.row_ptr[r + 1]).map(|p| (self.cols[p], self.values[p])));
            for (site, op) in terms {
                let stride = self.space.stride(*site);
                let a = (r / stride) % local;
                for b in 0..local {
                    let v = op.get(a, b);
                    if v != Complex64::new(0.0, 0.0) {
                        row.push((r - a * stride + b * stride, v));
                    }
                }
            }
            row.sort_by_key(|&(c, _)| c);
            let mut last = None;
            for &(c, v) in &row {
                if last == Some(c) {
                    *values.last_mut().expect("entry exists") += v;
                } else {
                    cols.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(Self {
            row_ptr,
            cols,
            values,
            ..self.clone()
        })
    }

    pub fn expectation(&self, psi: &[Complex64]) -> f64 {
        let mut y = vec![Complex64::new(0.0, 0.0); self.dim];
        self.apply(psi, &mut y);
        crate::linalg::dot(psi, &y).re
    }
}

impl LinearOp for SparseHamiltonian {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let row = |r: usize| -> Complex64 {
            (self.row_ptr[r]..self.row_ptr[r + 1])
                .map(|p| self.values[p] * x[self.cols[p]])
                .sum()
        };
        if self.dim >= 4096 {
            y.par_iter_mut().enumerate().for_each(|(r, yr)| *yr = row(r));
        } else {
            for (r, yr) in y.iter_mut().enumerate() {
                *yr = row(r);
            }
        }
    }

    fn norm_estimate(&self) -> f64 {
        (0..self.dim)
            .map(|r| {
                (self.row_ptr[r]..self.row_ptr[r + 1])
                    .map(|p| self.values[p].norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

/// Linear and quadratic parts of `V(b) - V(0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldExpansion {
    /// `H'(b) = sum_x h_x cos φ_x`.
    pub site_coefficients: Vec<f64>,
    /// `C(b) = (J/2) sum |b_x - b_y|^2`.
    pub c_of_b: f64,
}

pub fn field_expansion(model: &RotorModel, lat: &LatticeSpec, b: &PerturbField) -> Result<FieldExpansion> {
    b.check_sites(lat)?;
    let j = model.coupling;
    let mut h = vec![0.0; lat.num_sites()];
    let mut c = 0.0;
    for bond in &lat.bonds {
        let beta = b.values[bond.site] - b.values[bond.neighbor];
        h[bond.site] -= j * beta.re;
        h[bond.neighbor] += j * beta.re;
        c += 0.5 * j * beta.norm_sqr();
    }
    Ok(FieldExpansion {
        site_coefficients: h,
        c_of_b: c,
    })
}

/// Sparse `H(b)` on the truncated product space.
pub fn assemble_hamiltonian(model: &RotorModel, lat: &LatticeSpec, b: &PerturbField) -> Result<SparseHamiltonian> {
    let expansion = field_expansion(model, lat, b)?;
    let space = ProductSpace::new(lat.num_sites(), model.cutoff)?;
    let dim = space.dim();
    let m = model.cutoff as i64;
    let j = model.coupling;
    let offset = j * lat.bonds.len() as f64;
    let hop = Complex64::new(-0.5 * j, 0.0);
    let strides: Vec<usize> = (0..space.sites).map(|x| space.stride(x)).collect();

    let mut row_ptr = Vec::with_capacity(dim + 1);
    let mut cols = Vec::new();
    let mut values = Vec::new();
    let mut row: Vec<(usize, Complex64)> = Vec::new();
    row_ptr.push(0);
    for s in 0..dim {
        let ns = space.decode(s);
        row.clear();
        let kinetic: f64 = ns.iter().map(|&n| (n * n) as f64).sum::<f64>() / (2.0 * model.inertia);
        row.push((s, Complex64::new(kinetic + offset + expansion.c_of_b, 0.0)));
        if j != 0.0 {
            for bond in &lat.bonds {
                let (x, y) = (bond.site, bond.neighbor);
                if ns[x] < m && ns[y] > -m {
                    row.push((s + strides[x] - strides[y], hop));
                }
                if ns[x] > -m && ns[y] < m {
                    row.push((s - strides[x] + strides[y], hop));
                }
            }
        }
        for (x, &hx) in expansion.site_coefficients.iter().enumerate() {
            if hx == 0.0 {
                continue;
            }
            let amp = Complex64::new(0.5 * hx, 0.0);
            if ns[x] < m {
                row.push((s + strides[x], amp));
            }
            if ns[x] > -m {
                row.push((s - strides[x], amp));
            }
        }
        row.sort_by_key(|&(c, _)| c);
        let mut last: Option<usize> = None;
        for &(c, v) in row.iter() {
            if last == Some(c) {
                *values.last_mut().expect("entry exists") += v;
            } else {
                cols.push(c);
                values.push(v);
                last = Some(c);
            }
        }
        row_ptr.push(cols.len());
    }
    Ok(SparseHamiltonian {
        dim,
        row_ptr,
        cols,
        values,
        constant_offset: offset,
        space,
        doubled_bonds: lat.has_doubled_bonds(),
    })
}

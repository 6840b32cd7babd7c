//! Operators on the `3^n`-dimensional chain space.
//!
//! Basis states `|i₁,…,i_n⟩` carry local indices `1, 2, 3` stored as digits
//! `0, 1, 2`, site 1 most significant. Index `2` (digit 1) is the hole.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::aux::add_into;
use crate::error::{Error, Result};
use crate::scalar::Coefficient;

/// Largest chain length for which full physical operators are built.
pub const MAX_PHYSICAL_SITES: usize = 8;

pub fn dim(n: usize) -> usize {
    3usize.pow(n as u32)
}

/// Local digits of a basis index, site 1 first.
pub fn digits(index: usize, n: usize) -> Vec<u8> {
    let mut out = vec![0u8; n];
    let mut rest = index;
    for x in (0..n).rev() {
        out[x] = (rest % 3) as u8;
        rest /= 3;
    }
    out
}

pub fn from_digits(d: &[u8]) -> usize {
    d.iter().fold(0, |acc, &x| acc * 3 + x as usize)
}

/// Number of holes (local index 2) in a basis state.
pub fn hole_count(index: usize, n: usize) -> usize {
    digits(index, n).iter().filter(|&&d| d == 1).count()
}

/// Magnetization `Σ s³`: +1 for index 1, −1 for index 3.
pub fn magnetization(index: usize, n: usize) -> i64 {
    digits(index, n).iter().map(|&d| 1 - d as i64).sum()
}

pub fn sector_dim(n: usize, holes: usize) -> usize {
    if holes > n {
        return 0;
    }
    let mut binom = 1usize;
    for i in 0..holes {
        binom = binom * (n - i) / (i + 1);
    }
    binom << (n - holes)
}

pub fn sector_states(n: usize, holes: usize) -> Vec<usize> {
    (0..dim(n)).filter(|&i| hole_count(i, n) == holes).collect()
}

/// Sparse operator on the chain space.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalOperator<C> {
    sites: usize,
    entries: BTreeMap<(usize, usize), C>,
}

impl<C: Coefficient> PhysicalOperator<C> {
    pub fn zero(sites: usize) -> Self {
        PhysicalOperator { sites, entries: BTreeMap::new() }
    }

    pub fn identity(sites: usize) -> Self {
        let entries = (0..dim(sites)).map(|i| ((i, i), C::one())).collect();
        PhysicalOperator { sites, entries }
    }

    /// Builds from `(row, col, value)` triples; duplicates are summed.
    pub fn from_entries(sites: usize, items: impl IntoIterator<Item = (usize, usize, C)>) -> Result<Self> {
        let d = dim(sites);
        let mut entries = BTreeMap::new();
        for (r, c, v) in items {
            if r >= d || c >= d {
                return Err(Error::Shape(format!("entry ({r},{c}) outside dimension {d}")));
            }
            add_into(&mut entries, (r, c), v);
        }
        Ok(PhysicalOperator { sites, entries })
    }

    pub(crate) fn from_map(sites: usize, mut entries: BTreeMap<(usize, usize), C>) -> Self {
        entries.retain(|_, v| !v.is_zero());
        PhysicalOperator { sites, entries }
    }

    /// Single-site operator `e^{ij}` (one-based) at `site` (one-based).
    pub fn unit_at(sites: usize, site: usize, i: usize, j: usize) -> Self {
        let mut local = BTreeMap::new();
        local.insert((i - 1, j - 1), C::one());
        Self::local(sites, site, 1, &local)
    }

    /// Embeds a `3^ℓ × 3^ℓ` operator acting on sites `first..first+ℓ`.
    pub fn local(sites: usize, first: usize, width: usize, op: &BTreeMap<(usize, usize), C>) -> Self {
        let before = dim(first - 1);
        let after = dim(sites + 1 - first - width);
        let inner = dim(width);
        let mut entries = BTreeMap::new();
        for a in 0..before {
            for ((r, c), v) in op {
                for b in 0..after {
                    let row = (a * inner + r) * after + b;
                    let col = (a * inner + c) * after + b;
                    entries.insert((row, col), v.clone());
                }
            }
        }
        Self::from_map(sites, entries)
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        dim(self.sites)
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, row: usize, col: usize) -> C {
        self.entries.get(&(row, col)).cloned().unwrap_or_else(C::zero)
    }

    pub fn entries(&self) -> &BTreeMap<(usize, usize), C> {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.sites != other.sites {
            return Err(Error::Shape(format!("{} sites vs {} sites", self.sites, other.sites)));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut entries = self.entries.clone();
        for (k, v) in &other.entries {
            add_into(&mut entries, *k, v.clone());
        }
        Ok(PhysicalOperator { sites: self.sites, entries })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&C::from_gauss(-1, 0)))
    }

    pub fn scale(&self, w: &C) -> Self {
        Self::from_map(self.sites, self.entries.iter().map(|(k, v)| (*k, v.times(w))).collect())
    }

    pub fn map<D: Coefficient>(&self, mut f: impl FnMut(&C) -> D) -> PhysicalOperator<D> {
        PhysicalOperator::from_map(self.sites, self.entries.iter().map(|(k, v)| (*k, f(v))).collect())
    }

    pub fn try_map<D: Coefficient>(&self, mut f: impl FnMut(&C) -> Result<D>) -> Result<PhysicalOperator<D>> {
        let mut entries = BTreeMap::new();
        for (k, v) in &self.entries {
            entries.insert(*k, f(v)?);
        }
        Ok(PhysicalOperator::from_map(self.sites, entries))
    }

    /// Numeric value at `(epsilon, mu)`.
    pub fn evaluate(&self, epsilon: f64, mu: f64) -> Result<PhysicalOperator<Complex64>> {
        self.try_map(|v| v.to_complex(epsilon, mu))
    }

    pub fn conjugate(&self) -> Self {
        self.map(C::conjugate)
    }

    pub fn transpose(&self) -> Self {
        Self::from_map(self.sites, self.entries.iter().map(|((r, c), v)| ((*c, *r), v.clone())).collect())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_map(self.sites, self.entries.iter().map(|((r, c), v)| ((*c, *r), v.conjugate())).collect())
    }

    fn rows(&self) -> BTreeMap<usize, Vec<(usize, C)>> {
        let mut rows: BTreeMap<usize, Vec<(usize, C)>> = BTreeMap::new();
        for ((r, c), v) in &self.entries {
            rows.entry(*r).or_default().push((*c, v.clone()));
        }
        rows
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let left = self.rows();
        let right = other.rows();
        let blocks: Vec<Vec<((usize, usize), C)>> = left
            .par_iter()
            .map(|(r, row)| {
                let mut acc: BTreeMap<usize, C> = BTreeMap::new();
                for (k, a) in row {
                    if let Some(rrow) = right.get(k) {
                        for (c, b) in rrow {
                            add_into(&mut acc, *c, a.times(b));
                        }
                    }
                }
                acc.into_iter().map(|(c, v)| ((*r, c), v)).collect()
            })
            .collect();
        Ok(Self::from_map(self.sites, blocks.into_iter().flatten().collect()))
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.matmul(other)?.sub(&other.matmul(self)?)
    }

    pub fn kron(&self, other: &Self) -> Self {
        let d = other.dim();
        let mut entries = BTreeMap::new();
        for ((r1, c1), a) in &self.entries {
            for ((r2, c2), b) in &other.entries {
                add_into(&mut entries, (r1 * d + r2, c1 * d + c2), a.times(b));
            }
        }
        PhysicalOperator { sites: self.sites + other.sites, entries }
    }

    pub fn trace(&self) -> C {
        let mut acc = C::zero();
        for ((r, c), v) in &self.entries {
            if r == c {
                acc.accumulate(v);
            }
        }
        acc
    }

    /// Largest entry residual.
    pub fn max_residual(&self) -> f64 {
        self.entries.values().map(Coefficient::residual).fold(0.0, f64::max)
    }

    /// Applies a basis-index permutation on both sides.
    pub fn permute(&self, f: impl Fn(usize) -> usize) -> Self {
        Self::from_map(self.sites, self.entries.iter().map(|((r, c), v)| ((f(*r), f(*c)), v.clone())).collect())
    }

    /// Lattice reversal `R̂`.
    pub fn reversed(&self) -> Self {
        let n = self.sites;
        self.permute(|i| {
            let mut d = digits(i, n);
            d.reverse();
            from_digits(&d)
        })
    }

    /// Local mirror `Ŝ`: index `i → 4 − i` on every site.
    pub fn mirrored(&self) -> Self {
        let n = self.sites;
        self.permute(|i| from_digits(&digits(i, n).iter().map(|d| 2 - d).collect::<Vec<_>>()))
    }

    /// Site-wise transposition `T̂`, which on product operators is the full
    /// transpose.
    pub fn site_transposed(&self) -> Self {
        self.transpose()
    }

    /// Keeps only rows with `holes` holes.
    pub fn project_rows(&self, holes: usize) -> Self {
        let n = self.sites;
        Self::from_map(
            n,
            self.entries
                .iter()
                .filter(|((r, _), _)| hole_count(*r, n) == holes)
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
        )
    }

    /// Entries connecting different hole numbers.
    pub fn off_block_entries(&self) -> usize {
        let n = self.sites;
        self.entries.keys().filter(|(r, c)| hole_count(*r, n) != hole_count(*c, n)).count()
    }

    pub fn to_json(&self, header: Value) -> Value {
        json!({
            "header": header,
            "entries": self
                .entries
                .iter()
                .map(|((r, c), v)| json!([r, c, v.to_json()]))
                .collect::<Vec<_>>(),
        })
    }
}

impl PhysicalOperator<Complex64> {
    pub fn frobenius_norm(&self) -> f64 {
        self.entries.values().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        for ((r, c), v) in &self.entries {
            m[(*r, *c)] = *v;
        }
        m
    }

    /// Sub-matrix on the given basis states.
    pub fn restrict(&self, states: &[usize]) -> DMatrix<Complex64> {
        let pos: BTreeMap<usize, usize> = states.iter().enumerate().map(|(p, s)| (*s, p)).collect();
        let mut m = DMatrix::zeros(states.len(), states.len());
        for ((r, c), v) in &self.entries {
            if let (Some(&i), Some(&j)) = (pos.get(r), pos.get(c)) {
                m[(i, j)] = *v;
            }
        }
        m
    }

    pub fn from_dense(sites: usize, m: &DMatrix<Complex64>) -> Result<Self> {
        let d = dim(sites);
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::Shape(format!("{}x{} matrix for {sites} sites", m.nrows(), m.ncols())));
        }
        let mut entries = BTreeMap::new();
        for c in 0..d {
            for r in 0..d {
                let v = m[(r, c)];
                if v != Complex64::new(0.0, 0.0) {
                    entries.insert((r, c), v);
                }
            }
        }
        Ok(Self::from_map(sites, entries))
    }

    /// Largest entry difference relative to the largest entry of `self`.
    pub fn relative_distance(&self, other: &Self) -> Result<f64> {
        let diff = self.sub(other)?;
        let scale = self.max_residual().max(other.max_residual());
        if scale == 0.0 {
            return Ok(diff.max_residual());
        }
        Ok(diff.max_residual() / scale)
    }
}

/// Hole-number operator `N₀`.
pub fn hole_number<C: Coefficient>(n: usize) -> PhysicalOperator<C> {
    PhysicalOperator::from_map(
        n,
        (0..dim(n)).map(|i| ((i, i), C::from_gauss(hole_count(i, n) as i64, 0))).collect(),
    )
}

/// Magnetization operator `M = Σ s³`.
pub fn magnetization_operator<C: Coefficient>(n: usize) -> PhysicalOperator<C> {
    PhysicalOperator::from_map(n, (0..dim(n)).map(|i| ((i, i), C::from_gauss(magnetization(i, n), 0))).collect())
}

/// Projector on the sector with `holes` holes.
pub fn sector_projector<C: Coefficient>(n: usize, holes: usize) -> PhysicalOperator<C> {
    PhysicalOperator::from_map(n, sector_states(n, holes).into_iter().map(|i| ((i, i), C::one())).collect())
}

/// `H = Σ_x P_{x,x+1}` with `P` the two-site swap.
pub fn permutation_hamiltonian<C: Coefficient>(n: usize) -> PhysicalOperator<C> {
    let mut entries = BTreeMap::new();
    for col in 0..dim(n) {
        let d = digits(col, n);
        for x in 0..n.saturating_sub(1) {
            let mut swapped = d.clone();
            swapped.swap(x, x + 1);
            add_into(&mut entries, (from_digits(&swapped), col), C::one());
        }
    }
    PhysicalOperator::from_map(n, entries)
}

pub fn check_sites(n: usize, max: usize, what: &'static str) -> Result<()> {
    if n > max {
        return Err(Error::SizeLimit { what, n, max });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ExactScalar;

    #[test]
    fn digit_roundtrip_and_counts() {
        assert_eq!(digits(from_digits(&[1, 0, 1]), 3), vec![1, 0, 1]);
        assert_eq!(hole_count(from_digits(&[1, 0, 1]), 3), 2);
        assert_eq!(magnetization(from_digits(&[0, 0, 2]), 3), 1);
        for n in 1..5 {
            let total: usize = (0..=n).map(|v| sector_dim(n, v)).sum();
            assert_eq!(total, dim(n));
            for v in 0..=n {
                assert_eq!(sector_states(n, v).len(), sector_dim(n, v));
            }
        }
    }

    #[test]
    fn hole_number_example() {
        let n0 = hole_number::<ExactScalar>(3);
        let i = from_digits(&[1, 0, 1]);
        assert_eq!(n0.get(i, i), ExactScalar::integer(2));
    }

    #[test]
    fn embedding_and_products() {
        let a = PhysicalOperator::<Complex64>::unit_at(2, 1, 1, 2);
        let b = PhysicalOperator::<Complex64>::unit_at(2, 2, 2, 3);
        let ab = a.matmul(&b).unwrap();
        let direct = PhysicalOperator::<Complex64>::unit_at(1, 1, 1, 2).kron(&PhysicalOperator::unit_at(1, 1, 2, 3));
        assert_eq!(ab, direct);
        assert!(a.commutator(&b).unwrap().is_zero());
        assert_eq!(ab.adjoint().adjoint(), ab);
    }

    #[test]
    fn parity_maps_are_involutions() {
        let op = PhysicalOperator::<Complex64>::from_entries(
            3,
            [(1, 5, Complex64::new(1.0, 2.0)), (7, 2, Complex64::new(-3.0, 0.5)), (26, 0, Complex64::new(0.0, 1.0))],
        )
        .unwrap();
        assert_eq!(op.reversed().reversed(), op);
        assert_eq!(op.mirrored().mirrored(), op);
        assert_eq!(op.site_transposed().site_transposed(), op);
        // mirror sends |1,1,1⟩ to |3,3,3⟩
        let e = PhysicalOperator::<Complex64>::from_entries(3, [(0, 0, Complex64::new(1.0, 0.0))]).unwrap();
        assert_eq!(e.mirrored().get(26, 26), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn permutation_hamiltonian_action() {
        let h = permutation_hamiltonian::<ExactScalar>(2);
        // H|1,2⟩ = |2,1⟩, H|i,i⟩ = |i,i⟩
        assert_eq!(h.get(from_digits(&[1, 0]), from_digits(&[0, 1])), ExactScalar::one());
        assert_eq!(h.get(from_digits(&[0, 1]), from_digits(&[0, 1])), ExactScalar::zero());
        for i in 0..3u8 {
            let s = from_digits(&[i, i]);
            assert_eq!(h.get(s, s), ExactScalar::one());
        }
        assert_eq!(h.nnz(), 9);
        let h3 = permutation_hamiltonian::<ExactScalar>(3);
        assert!(h3.commutator(&hole_number(3)).unwrap().is_zero());
        assert_eq!(h3.adjoint(), h3);
    }

    #[test]
    fn dense_roundtrip() {
        let op = PhysicalOperator::<Complex64>::from_entries(2, [(1, 3, Complex64::new(1.0, -1.0))]).unwrap();
        assert_eq!(PhysicalOperator::from_dense(2, &op.to_dense()).unwrap(), op);
        assert!(PhysicalOperator::<Complex64>::from_entries(1, [(3, 0, Complex64::new(1.0, 0.0))]).is_err());
    }
}

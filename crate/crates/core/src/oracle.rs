//! Brute-force Lindblad solver used as ground truth at small chain lengths.
//!
//! Operators are vectorized row-major: `vec(ρ)[I·d + J] = ρ_{IJ}`, so that
//! `vec(XρY) = (X ⊗ Yᵀ) vec(ρ)`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::physical::{
    check_sites, dim, hole_count, magnetization, permutation_hamiltonian, sector_states, PhysicalOperator,
};

/// Largest chain length the oracle accepts.
pub const MAX_ORACLE_SITES: usize = 5;

/// Blocks up to this size are solved by a full SVD, larger ones by inverse
/// iteration.
pub const SVD_BLOCK_LIMIT: usize = 1200;

/// Singular values below `KERNEL_TOL · σ_max` count as kernel.
pub const KERNEL_TOL: f64 = 1e-9;

type Op = PhysicalOperator<Complex64>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Spin-1 form `Σ s·s + (s·s)² − 1` of the Hamiltonian.
pub fn spin_hamiltonian(n: usize) -> Op {
    let r2 = std::f64::consts::SQRT_2;
    let sz = DMatrix::from_row_slice(3, 3, &[c(1.0), c(0.0), c(0.0), c(0.0), c(0.0), c(0.0), c(0.0), c(0.0), c(-1.0)]);
    let sp = DMatrix::from_row_slice(3, 3, &[c(0.0), c(r2), c(0.0), c(0.0), c(0.0), c(r2), c(0.0), c(0.0), c(0.0)]);
    let sm = sp.adjoint();
    let ss = sz.kronecker(&sz) + (sp.kronecker(&sm) + sm.kronecker(&sp)).scale(0.5);
    let h = &ss + &ss * &ss - DMatrix::identity(9, 9);
    let mut local = BTreeMap::new();
    for r in 0..9 {
        for col in 0..9 {
            if h[(r, col)].norm() > 1e-14 {
                local.insert((r, col), h[(r, col)]);
            }
        }
    }
    let mut total = Op::zero(n);
    for x in 1..n {
        total = total.add(&Op::local(n, x, 2, &local)).expect("same size");
    }
    total
}

/// Permutation form of the Hamiltonian, checked against the spin form.
pub fn build_hamiltonian(n: usize) -> Result<Op> {
    if n < 2 {
        return Err(Error::InvalidArgument("Hamiltonian needs at least two sites".into()));
    }
    let h = permutation_hamiltonian::<Complex64>(n);
    let residual = h.sub(&spin_hamiltonian(n))?.max_residual();
    if residual > 1e-12 {
        return Err(Error::Inconsistent { what: "permutation vs spin-matrix Hamiltonian".into(), residual });
    }
    Ok(h)
}

/// Bond current `J^{ij}_x = i(e^{ij}⊗e^{ji} − e^{ji}⊗e^{ij})` on sites `x, x+1`.
pub fn bond_current(n: usize, i: usize, j: usize, x: usize) -> Op {
    let mut local = BTreeMap::new();
    if i != j {
        let a = (i - 1) * 3 + (j - 1);
        let b = (j - 1) * 3 + (i - 1);
        // e^{ij}⊗e^{ji} maps |j,i⟩ to |i,j⟩
        local.insert((a, b), Complex64::new(0.0, 1.0));
        local.insert((b, a), Complex64::new(0.0, -1.0));
    }
    Op::local(n, x, 2, &local)
}

/// All partial and total bond currents.
#[derive(Clone, Debug)]
pub struct Currents {
    pub partial: BTreeMap<(usize, usize, usize), Op>,
    /// `J^i_x = Σ_j J^{ij}_x`
    pub total: BTreeMap<(usize, usize), Op>,
}

pub fn build_currents(n: usize) -> Result<Currents> {
    if n < 2 {
        return Err(Error::InvalidArgument("currents need at least two sites".into()));
    }
    let mut partial = BTreeMap::new();
    let mut total = BTreeMap::new();
    for x in 1..n {
        for i in 1..=3 {
            let mut sum = Op::zero(n);
            for j in 1..=3 {
                let op = bond_current(n, i, j, x);
                sum = sum.add(&op)?;
                partial.insert((i, j, x), op);
            }
            total.insert((i, x), sum);
        }
    }
    Ok(Currents { partial, total })
}

/// Diagonal charges plus access to the parity maps on [`PhysicalOperator`].
#[derive(Clone, Debug)]
pub struct SymmetryMaps {
    pub hole_number: Op,
    pub magnetization: Op,
}

pub fn build_symmetry_maps(n: usize) -> SymmetryMaps {
    SymmetryMaps {
        hole_number: crate::physical::hole_number(n),
        magnetization: crate::physical::magnetization_operator(n),
    }
}

/// `−i[H, ρ] + ε Σ_A D_A(ρ)` with `A₁ = e^{13}` at site 1 and `A₂ = e^{31}` at
/// site `n`.
#[derive(Clone, Debug)]
pub struct LindbladModel {
    pub n: usize,
    pub epsilon: f64,
    pub hamiltonian: Op,
    pub jumps: Vec<Op>,
}

impl LindbladModel {
    pub fn new(n: usize, epsilon: f64) -> Result<Self> {
        check_sites(n, crate::physical::MAX_PHYSICAL_SITES, "Lindblad model")?;
        if !epsilon.is_finite() {
            return Err(Error::NonFinite("coupling".into()));
        }
        let hamiltonian = if n >= 2 { build_hamiltonian(n)? } else { Op::zero(1) };
        let jumps = vec![Op::unit_at(n, 1, 1, 3), Op::unit_at(n, n, 3, 1)];
        Ok(LindbladModel { n, epsilon, hamiltonian, jumps })
    }

    /// `L̂ρ`.
    pub fn apply(&self, rho: &Op) -> Result<Op> {
        let h = &self.hamiltonian;
        let mut out = h.matmul(rho)?.sub(&rho.matmul(h)?)?.scale(&Complex64::new(0.0, -1.0));
        for a in &self.jumps {
            out = out.add(&build_dissipator_action(a, rho)?.scale(&c(self.epsilon)))?;
        }
        Ok(out)
    }

    /// Full superoperator on the `9^n`-dimensional operator space.
    pub fn superoperator(&self) -> Result<Superoperator> {
        check_sites(self.n, MAX_ORACLE_SITES, "superoperator")?;
        let id = Op::identity(self.n);
        let h = &self.hamiltonian;
        let mut terms = vec![(Complex64::new(0.0, -1.0), h.clone(), id.clone()), (Complex64::new(0.0, 1.0), id.clone(), h.clone())];
        for a in &self.jumps {
            let ad = a.adjoint();
            let ada = ad.matmul(a)?;
            terms.push((c(2.0 * self.epsilon), a.clone(), ad));
            terms.push((c(-self.epsilon), ada.clone(), id.clone()));
            terms.push((c(-self.epsilon), id.clone(), ada));
        }
        Ok(Superoperator::from_sandwiches(self.n, &terms))
    }
}

/// `D_A(ρ) = 2AρA† − {A†A, ρ}`.
pub fn build_dissipator_action(a: &Op, rho: &Op) -> Result<Op> {
    let ad = a.adjoint();
    let ada = ad.matmul(a)?;
    let jump = a.matmul(rho)?.matmul(&ad)?.scale(&c(2.0));
    jump.sub(&ada.matmul(rho)?)?.sub(&rho.matmul(&ada)?)
}

/// `D_A` as a superoperator.
pub fn build_dissipator(a: &Op) -> Result<Superoperator> {
    check_sites(a.sites(), MAX_ORACLE_SITES, "superoperator")?;
    let id = Op::identity(a.sites());
    let ad = a.adjoint();
    let ada = ad.matmul(a)?;
    Ok(Superoperator::from_sandwiches(
        a.sites(),
        &[(c(2.0), a.clone(), ad), (c(-1.0), ada.clone(), id.clone()), (c(-1.0), id, ada)],
    ))
}

/// Sparse linear map on row-major vectorized operators.
#[derive(Clone, Debug)]
pub struct Superoperator {
    pub n: usize,
    rows: Vec<Vec<(usize, Complex64)>>,
}

impl Superoperator {
    /// `Σ c · X ρ Y` for the given `(c, X, Y)`.
    pub fn from_sandwiches(n: usize, terms: &[(Complex64, Op, Op)]) -> Self {
        let d = dim(n);
        let mut rows: Vec<BTreeMap<usize, Complex64>> = vec![BTreeMap::new(); d * d];
        for (w, x, y) in terms {
            // (XρY)_{IJ} = Σ X_{IK} ρ_{KL} Y_{LJ}
            for ((i, k), xv) in x.entries() {
                for ((l, j), yv) in y.entries() {
                    *rows[i * d + j].entry(k * d + l).or_default() += w * xv * yv;
                }
            }
        }
        let rows = rows
            .into_iter()
            .map(|r| r.into_iter().filter(|(_, v)| v.norm() != 0.0).collect())
            .collect();
        Superoperator { n, rows }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn apply_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.rows.iter().map(|row| row.iter().map(|(k, a)| a * v[*k]).sum()).collect()
    }

    pub fn apply(&self, rho: &Op) -> Result<Op> {
        Op::from_vec(self.n, &self.apply_vec(&rho.to_vec()))
    }
}

impl Op {
    /// Row-major vectorization.
    pub fn to_vec(&self) -> Vec<Complex64> {
        let d = self.dim();
        let mut v = vec![Complex64::new(0.0, 0.0); d * d];
        for ((r, col), x) in self.entries() {
            v[r * d + col] = *x;
        }
        v
    }

    pub fn from_vec(sites: usize, v: &[Complex64]) -> Result<Self> {
        let d = dim(sites);
        if v.len() != d * d {
            return Err(Error::Shape(format!("vector of length {} for {sites} sites", v.len())));
        }
        Op::from_entries(sites, v.iter().enumerate().filter(|(_, x)| x.norm() != 0.0).map(|(k, x)| (k / d, k % d, *x)))
    }
}

/// `‖L̂ρ‖_F / ‖ρ‖_F`.
pub fn liouvillian_residual(model: &LindbladModel, rho: &Op) -> Result<f64> {
    if rho.sites() != model.n {
        return Err(Error::Shape(format!("{} sites vs model with {}", rho.sites(), model.n)));
    }
    let norm = rho.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(model.apply(rho)?.frobenius_norm() / norm)
}

/// Pairs `(I, J)` with `I` in sector `row_holes`, `J` in `col_holes` and
/// magnetization difference `charge`.
fn block_pairs(n: usize, row_holes: usize, col_holes: usize, charge: i64) -> Vec<(usize, usize)> {
    let rows = sector_states(n, row_holes);
    let cols = sector_states(n, col_holes);
    let mut out = Vec::new();
    for &i in &rows {
        for &j in &cols {
            if magnetization(i, n) - magnetization(j, n) == charge {
                out.push((i, j));
            }
        }
    }
    out
}

fn block_charges(n: usize, row_holes: usize, col_holes: usize) -> Vec<i64> {
    let ms = |h: usize| -> Vec<i64> {
        let mut v: Vec<i64> = sector_states(n, h).iter().map(|&i| magnetization(i, n)).collect();
        v.sort();
        v.dedup();
        v
    };
    let mut qs: Vec<i64> = ms(row_holes)
        .iter()
        .flat_map(|a| ms(col_holes).into_iter().map(move |b| a - b))
        .collect();
    qs.sort();
    qs.dedup();
    qs
}

/// Column-wise sparse view used to apply `L̂` to `|I⟩⟨J|`.
struct UnitAction {
    epsilon: f64,
    /// (coefficient, left factor columns, right factor rows) per sandwich
    terms: Vec<(Complex64, BTreeMap<usize, Vec<(usize, Complex64)>>, BTreeMap<usize, Vec<(usize, Complex64)>>)>,
}

impl UnitAction {
    fn new(model: &LindbladModel) -> Result<Self> {
        let id = Op::identity(model.n);
        let mut sandwiches = vec![
            (Complex64::new(0.0, -1.0), model.hamiltonian.clone(), id.clone()),
            (Complex64::new(0.0, 1.0), id.clone(), model.hamiltonian.clone()),
        ];
        for a in &model.jumps {
            let ad = a.adjoint();
            let ada = ad.matmul(a)?;
            sandwiches.push((c(2.0 * model.epsilon), a.clone(), ad));
            sandwiches.push((c(-model.epsilon), ada.clone(), id.clone()));
            sandwiches.push((c(-model.epsilon), id.clone(), ada));
        }
        let terms = sandwiches
            .into_iter()
            .map(|(w, x, y)| {
                let mut cols: BTreeMap<usize, Vec<(usize, Complex64)>> = BTreeMap::new();
                for ((r, col), v) in x.entries() {
                    cols.entry(*col).or_default().push((*r, *v));
                }
                let mut rows: BTreeMap<usize, Vec<(usize, Complex64)>> = BTreeMap::new();
                for ((r, col), v) in y.entries() {
                    rows.entry(*r).or_default().push((*col, *v));
                }
                (w, cols, rows)
            })
            .collect();
        Ok(UnitAction { epsilon: model.epsilon, terms })
    }

    /// `L̂(|I⟩⟨J|)` as `((K, L), value)` pairs.
    fn apply(&self, i: usize, j: usize) -> Vec<((usize, usize), Complex64)> {
        let mut out = Vec::new();
        for (w, cols, rows) in &self.terms {
            let (Some(xc), Some(yr)) = (cols.get(&i), rows.get(&j)) else { continue };
            for (k, xv) in xc {
                for (l, yv) in yr {
                    out.push(((*k, *l), w * xv * yv));
                }
            }
        }
        out
    }

    fn block(&self, pairs: &[(usize, usize)]) -> DMatrix<Complex64> {
        let pos: BTreeMap<(usize, usize), usize> = pairs.iter().enumerate().map(|(p, k)| (*k, p)).collect();
        let mut m = DMatrix::zeros(pairs.len(), pairs.len());
        for (col, &(i, j)) in pairs.iter().enumerate() {
            for (key, v) in self.apply(i, j) {
                if let Some(&row) = pos.get(&key) {
                    m[(row, col)] += v;
                }
            }
        }
        m
    }
}

/// Smallest singular data of one block.
#[derive(Clone, Debug)]
struct BlockKernel {
    null_vector: DVector<Complex64>,
    sigma_min: f64,
    /// Second smallest singular value (an estimate for large blocks).
    sigma_next: f64,
    sigma_max: f64,
    kernel_dim: usize,
}

fn solve_block(m: &DMatrix<Complex64>) -> BlockKernel {
    let size = m.nrows();
    if size <= SVD_BLOCK_LIMIT {
        let svd = m.clone().svd(false, true);
        let sv = &svd.singular_values;
        let mut order: Vec<usize> = (0..size).collect();
        order.sort_by(|a, b| sv[*a].total_cmp(&sv[*b]));
        let sigma_max = sv.max();
        let v_t = svd.v_t.expect("requested");
        let null_vector = v_t.row(order[0]).transpose().map(|x| x.conj());
        let kernel_dim = sv.iter().filter(|s| **s <= KERNEL_TOL * sigma_max).count();
        return BlockKernel {
            null_vector,
            sigma_min: sv[order[0]],
            sigma_next: order.get(1).map(|&k| sv[k]).unwrap_or(f64::INFINITY),
            sigma_max,
            kernel_dim,
        };
    }
    inverse_iteration(m)
}

fn inverse_iteration(m: &DMatrix<Complex64>) -> BlockKernel {
    let size = m.nrows();
    let sigma_max = m.norm();
    let shift = Complex64::new(1e-13 * sigma_max, 0.0);
    let shifted = m + DMatrix::identity(size, size) * shift;
    let lu = shifted.lu();
    let start = |seed: u64| {
        DVector::from_fn(size, |k, _| {
            let h = (k as u64 + 1).wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(seed);
            Complex64::new(((h >> 11) % 1000) as f64 / 1000.0 - 0.5, ((h >> 31) % 997) as f64 / 997.0 - 0.5)
        })
    };
    let iterate = |mut x: DVector<Complex64>, deflate: Option<&DVector<Complex64>>| {
        for _ in 0..8 {
            if let Some(y) = deflate {
                let p = y.dotc(&x);
                x -= y * p;
            }
            x = lu.solve(&x).unwrap_or(x);
            if let Some(y) = deflate {
                let p = y.dotc(&x);
                x -= y * p;
            }
            let nrm = x.norm();
            x /= Complex64::new(nrm, 0.0);
        }
        x
    };
    let x = iterate(start(1), None);
    let sigma_min = (m * &x).norm();
    let y = iterate(start(2), Some(&x));
    let sigma_next = (m * &y).norm();
    let kernel_dim = (sigma_min <= KERNEL_TOL * sigma_max) as usize + (sigma_next <= KERNEL_TOL * sigma_max) as usize;
    BlockKernel { null_vector: x, sigma_min, sigma_next, sigma_max, kernel_dim }
}

/// Oracle steady state of one hole sector.
#[derive(Clone, Debug, Serialize)]
pub struct SectorSolution {
    pub holes: usize,
    /// Number of pairs in the charge-neutral block that holds the state.
    pub block_dim: usize,
    /// Kernel dimension summed over all magnetization blocks of the sector.
    pub kernel_dim: usize,
    pub sigma_min: f64,
    /// Smallest singular value that is not kernel: the numerical gap.
    pub gap: f64,
    #[serde(skip)]
    pub state: Op,
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleSolution {
    pub n: usize,
    pub epsilon: f64,
    pub sectors: Vec<SectorSolution>,
    /// Kernel dimension of the hole-diagonal Liouvillian.
    pub kernel_dim: usize,
}

/// Dimension of the operators on one hole sector that commute with `h`:
/// `Σ m²` over eigenvalue multiplicities.
fn commutant_dim(h: &Op, holes: usize) -> usize {
    let m = h.restrict(&sector_states(h.sites(), holes));
    let mut eig: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    let mut total = 0;
    let mut run = 0;
    for k in 0..eig.len() {
        run += 1;
        if k + 1 == eig.len() || eig[k + 1] - eig[k] > 1e-9 {
            total += run * run;
            run = 0;
        }
    }
    total
}

/// Kernel of every hole-diagonal block. Each sector must have a
/// one-dimensional kernel; its vector is returned with unit trace.
pub fn steady_states(model: &LindbladModel) -> Result<OracleSolution> {
    let n = model.n;
    check_sites(n, MAX_ORACLE_SITES, "oracle")?;
    if model.epsilon == 0.0 {
        return Err(Error::Degenerate { sector: 0, dim: commutant_dim(&model.hamiltonian, 0) });
    }
    let action = UnitAction::new(model)?;
    let sectors: Vec<Result<SectorSolution>> = (0..=n)
        .into_par_iter()
        .map(|holes| {
            let mut kernel_dim = 0;
            let mut gap = f64::INFINITY;
            let mut main = None;
            for q in block_charges(n, holes, holes) {
                let pairs = block_pairs(n, holes, holes, q);
                let k = solve_block(&action.block(&pairs));
                kernel_dim += k.kernel_dim;
                let smallest_nonkernel = if k.kernel_dim > 0 { k.sigma_next } else { k.sigma_min };
                gap = gap.min(smallest_nonkernel / k.sigma_max.max(1e-300));
                if q == 0 {
                    main = Some((pairs, k));
                }
            }
            if kernel_dim != 1 {
                return Err(Error::Degenerate { sector: holes, dim: kernel_dim });
            }
            let (pairs, k) = main.expect("charge-neutral block exists");
            let mut state = Op::from_entries(
                n,
                pairs.iter().zip(k.null_vector.iter()).map(|(&(i, j), v)| (i, j, *v)),
            )?;
            let tr = state.trace();
            if tr.norm() > 0.0 {
                state = state.scale(&(Complex64::new(1.0, 0.0) / tr));
            }
            Ok(SectorSolution { holes, block_dim: pairs.len(), kernel_dim, sigma_min: k.sigma_min, gap, state })
        })
        .collect();
    let sectors = sectors.into_iter().collect::<Result<Vec<_>>>()?;
    let kernel_dim = sectors.iter().map(|s| s.kernel_dim).sum();
    Ok(OracleSolution { n, epsilon: action.epsilon, sectors, kernel_dim })
}

/// Measured kernel dimension of the Liouvillian restricted to operators
/// mapping sector `col_holes` into sector `row_holes`. Only a measurement:
/// nothing is asserted about it.
pub fn block_kernel_dim(model: &LindbladModel, row_holes: usize, col_holes: usize) -> Result<usize> {
    check_sites(model.n, 3, "off-diagonal kernel measurement")?;
    let action = UnitAction::new(model)?;
    let mut total = 0;
    for q in block_charges(model.n, row_holes, col_holes) {
        let pairs = block_pairs(model.n, row_holes, col_holes, q);
        if pairs.is_empty() {
            continue;
        }
        let m = action.block(&pairs);
        let sv = m.singular_values();
        let top = sv.max().max(1e-300);
        total += sv.iter().filter(|s| **s <= KERNEL_TOL * top).count();
    }
    Ok(total)
}

/// Hilbert–Schmidt overlap `|⟨a, b⟩| / (‖a‖ ‖b‖)`.
pub fn overlap(a: &Op, b: &Op) -> Result<f64> {
    if a.sites() != b.sites() {
        return Err(Error::Shape("overlap of operators on different chains".into()));
    }
    let na = a.frobenius_norm();
    let nb = b.frobenius_norm();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let mut dot = Complex64::new(0.0, 0.0);
    for (k, v) in a.entries() {
        if let Some(w) = b.entries().get(k) {
            dot += v.conj() * w;
        }
    }
    Ok(dot.norm() / (na * nb))
}

/// Boundary-driven isotropic spin-1/2 chain with the same jump structure,
/// solved on its own `2^n` space and embedded into the hole-free subspace
/// (spin up → index 1, spin down → index 3). Unit trace.
pub fn xxx_reference(n: usize, epsilon: f64) -> Result<Op> {
    check_sites(n, MAX_ORACLE_SITES, "spin-1/2 reference")?;
    if n < 2 {
        return Err(Error::InvalidArgument("spin-1/2 reference needs n ≥ 2".into()));
    }
    if epsilon == 0.0 {
        return Err(Error::Degenerate { sector: 0, dim: 1 << n });
    }
    let d = 1usize << n;
    let i2 = DMatrix::<Complex64>::identity(2, 2);
    let sx = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
    let sy = DMatrix::from_row_slice(2, 2, &[c(0.0), Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0), c(0.0)]);
    let sz = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]);
    // σ⁺ = |↑⟩⟨↓| with |↑⟩ first
    let sp = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
    let embed = |op: &DMatrix<Complex64>, x: usize, width: usize| {
        let left = DMatrix::<Complex64>::identity(1 << x, 1 << x);
        let right = DMatrix::<Complex64>::identity(1 << (n - x - width), 1 << (n - x - width));
        left.kronecker(op).kronecker(&right)
    };
    let mut h = DMatrix::<Complex64>::zeros(d, d);
    for x in 0..n - 1 {
        let pauli = sx.kronecker(&sx) + sy.kronecker(&sy) + sz.kronecker(&sz);
        // swap = (σ·σ + 1)/2
        let swap = (pauli + i2.kronecker(&i2)).scale(0.5);
        h += embed(&swap, x, 2);
    }
    let jumps = [embed(&sp, 0, 1), embed(&sp.adjoint(), n - 1, 1)];
    let id = DMatrix::<Complex64>::identity(d, d);
    // row-major: vec(XρY) = (X ⊗ Yᵀ) vec(ρ)
    let mut lv = (h.kronecker(&id) - id.kronecker(&h.transpose())) * Complex64::new(0.0, -1.0);
    for a in &jumps {
        let ad = a.adjoint();
        let ada = &ad * a;
        let term = a.kronecker(&ad.transpose()).scale(2.0) - ada.kronecker(&id) - id.kronecker(&ada.transpose());
        lv += term * c(epsilon);
    }
    let k = solve_block(&lv);
    if k.kernel_dim != 1 {
        return Err(Error::Degenerate { sector: 0, dim: k.kernel_dim });
    }
    let to_full = |s: usize| -> usize {
        (0..n).fold(0, |acc, x| acc * 3 + if (s >> (n - 1 - x)) & 1 == 0 { 0 } else { 2 })
    };
    let mut rho = Op::from_entries(
        n,
        k.null_vector.iter().enumerate().map(|(idx, v)| (to_full(idx / d), to_full(idx % d), *v)),
    )?;
    let tr = rho.trace();
    rho = rho.scale(&(Complex64::new(1.0, 0.0) / tr));
    Ok(rho)
}

/// Hole count of every row and column of an operator agrees with `holes`.
pub fn supported_in_sector(op: &Op, holes: usize) -> bool {
    let n = op.sites();
    op.entries().keys().all(|(r, c)| hole_count(*r, n) == holes && hole_count(*c, n) == holes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physical::from_digits;

    fn random_op(n: usize, seed: u64, holes: Option<usize>) -> Op {
        let d = dim(n);
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 33) as f64 / (1u64 << 31) as f64) - 0.5
        };
        let mut entries = Vec::new();
        for r in 0..d {
            for col in 0..d {
                if let Some(h) = holes {
                    if hole_count(r, n) != h || hole_count(col, n) != h {
                        continue;
                    }
                }
                entries.push((r, col, Complex64::new(next(), next())));
            }
        }
        Op::from_entries(n, entries).unwrap()
    }

    #[test]
    fn hamiltonian_forms_agree() {
        for n in 2..=4 {
            let h = build_hamiltonian(n).unwrap();
            assert!(h.sub(&spin_hamiltonian(n)).unwrap().max_residual() < 1e-12);
        }
        let h = build_hamiltonian(2).unwrap();
        assert_eq!(h.get(from_digits(&[1, 0]), from_digits(&[0, 1])), c(1.0));
    }

    #[test]
    fn vectorization_convention() {
        let n = 1;
        let x = random_op(n, 3, None);
        let y = random_op(n, 4, None);
        let rho = random_op(n, 5, None);
        let sup = Superoperator::from_sandwiches(n, &[(c(1.0), x.clone(), y.clone())]);
        let direct = x.matmul(&rho).unwrap().matmul(&y).unwrap();
        assert!(sup.apply(&rho).unwrap().sub(&direct).unwrap().max_residual() < 1e-14);
        assert_eq!(Op::from_vec(n, &rho.to_vec()).unwrap(), rho);
    }

    #[test]
    fn superoperator_matches_direct_action() {
        let model = LindbladModel::new(3, 0.7).unwrap();
        let sup = model.superoperator().unwrap();
        let rho = random_op(3, 11, None);
        let a = sup.apply(&rho).unwrap();
        let b = model.apply(&rho).unwrap();
        assert!(a.sub(&b).unwrap().max_residual() < 1e-12);
        // trace preservation, hermiticity preservation
        assert!(b.trace().norm() < 1e-12);
        let herm = rho.add(&rho.adjoint()).unwrap();
        let out = model.apply(&herm).unwrap();
        assert!(out.sub(&out.adjoint()).unwrap().max_residual() < 1e-12);
    }

    #[test]
    fn dissipator_examples() {
        let a = Op::unit_at(2, 1, 1, 3);
        // |3⟩⟨3| at site 1 is pumped into |1⟩⟨1|
        let down = Op::unit_at(2, 1, 3, 3);
        let out = build_dissipator_action(&a, &down).unwrap();
        let expected = Op::unit_at(2, 1, 1, 1).scale(&c(2.0)).sub(&down.scale(&c(2.0))).unwrap();
        assert!(out.sub(&expected).unwrap().max_residual() < 1e-14);
        assert!(build_dissipator_action(&a, &Op::unit_at(2, 1, 1, 1)).unwrap().is_zero());
        let rho = random_op(2, 9, None);
        assert!(build_dissipator(&a).unwrap().apply(&rho).unwrap().trace().norm() < 1e-13);
    }

    #[test]
    fn strong_and_weak_symmetries() {
        let n = 3;
        let model = LindbladModel::new(n, 1.1).unwrap();
        let sym = build_symmetry_maps(n);
        assert!(model.hamiltonian.commutator(&sym.hole_number).unwrap().is_zero());
        for a in &model.jumps {
            assert!(a.commutator(&sym.hole_number).unwrap().is_zero());
        }
        for holes in 0..=n {
            let rho = random_op(n, 20 + holes as u64, Some(holes));
            assert!(supported_in_sector(&model.apply(&rho).unwrap(), holes));
        }
        let m = &sym.magnetization;
        let model2 = LindbladModel::new(2, 0.9).unwrap();
        let m2 = build_symmetry_maps(2).magnetization;
        let rho = random_op(2, 77, None);
        let lhs = m2.commutator(&model2.apply(&rho).unwrap()).unwrap();
        let rhs = model2.apply(&m2.commutator(&rho).unwrap()).unwrap();
        assert!(lhs.sub(&rhs).unwrap().max_residual() < 1e-12);
        assert_eq!(m.get(0, 0), c(3.0));
    }

    #[test]
    fn continuity_of_total_currents() {
        let n = 3;
        let h = build_hamiltonian(n).unwrap();
        let cur = build_currents(n).unwrap();
        let i_unit = Complex64::new(0.0, 1.0);
        for i in 1..=3 {
            let dens = Op::unit_at(n, 2, i, i);
            let lhs = h.commutator(&dens).unwrap().scale(&i_unit);
            let rhs = cur.total[&(i, 1)].sub(&cur.total[&(i, 2)]).unwrap();
            assert!(lhs.sub(&rhs).unwrap().max_residual() < 1e-14);
            for j in 1..=3 {
                assert_eq!(cur.partial[&(i, j, 1)], cur.partial[&(j, i, 1)].scale(&c(-1.0)));
            }
            assert!(cur.partial[&(i, i, 1)].is_zero());
        }
        let sum = cur.total[&(1, 1)].add(&cur.total[&(2, 1)]).unwrap().add(&cur.total[&(3, 1)]).unwrap();
        assert!(sum.is_zero());
    }

    #[test]
    fn residual_examples() {
        let model = LindbladModel::new(2, 1.0).unwrap();
        assert!(liouvillian_residual(&model, &Op::identity(2)).unwrap() > 0.1);
        let dark = Op::from_entries(2, [(from_digits(&[1, 1]), from_digits(&[1, 1]), c(1.0))]).unwrap();
        assert_eq!(liouvillian_residual(&model, &dark).unwrap(), 0.0);
        assert!(matches!(liouvillian_residual(&model, &Op::zero(2)), Err(Error::ZeroNorm)));
    }

    #[test]
    fn steady_state_kernels() {
        for n in 2..=3 {
            let sol = steady_states(&LindbladModel::new(n, 1.0).unwrap()).unwrap();
            assert_eq!(sol.kernel_dim, n + 1);
            let dark = from_digits(&vec![1u8; n]);
            let top = &sol.sectors[n].state;
            assert_eq!(top.nnz(), 1);
            assert!((top.get(dark, dark) - c(1.0)).norm() < 1e-12);
            for s in &sol.sectors {
                assert!(s.gap > 1e-6);
                let res = liouvillian_residual(&LindbladModel::new(n, 1.0).unwrap(), &s.state).unwrap();
                assert!(res < 1e-10);
            }
        }
        assert!(matches!(steady_states(&LindbladModel::new(2, 0.0).unwrap()), Err(Error::Degenerate { .. })));
    }

    #[test]
    fn inverse_iteration_agrees_with_svd() {
        let model = LindbladModel::new(3, 0.6).unwrap();
        let action = UnitAction::new(&model).unwrap();
        let pairs = block_pairs(3, 1, 1, 0);
        let m = action.block(&pairs);
        let a = solve_block(&m);
        let b = inverse_iteration(&m);
        let ov = a.null_vector.dotc(&b.null_vector).norm();
        assert!((ov - 1.0).abs() < 1e-10, "{ov}");
        assert_eq!(a.kernel_dim, b.kernel_dim);
    }

    #[test]
    fn xxx_reference_is_stationary_in_the_full_model() {
        let rho = xxx_reference(3, 0.8).unwrap();
        assert!(supported_in_sector(&rho, 0));
        let model = LindbladModel::new(3, 0.8).unwrap();
        assert!(liouvillian_residual(&model, &rho).unwrap() < 1e-10);
    }

    #[test]
    fn parity_of_oracle_state() {
        let sol = steady_states(&LindbladModel::new(3, 0.5).unwrap()).unwrap();
        for s in &sol.sectors {
            let flipped = s.state.mirrored().reversed();
            assert!(flipped.sub(&s.state).unwrap().max_residual() < 1e-10);
            let m = crate::physical::magnetization_operator::<Complex64>(3);
            assert!(m.commutator(&s.state).unwrap().max_residual() < 1e-10);
        }
    }

    #[test]
    fn off_diagonal_blocks_are_measured() {
        let model = LindbladModel::new(2, 1.0).unwrap();
        let k = block_kernel_dim(&model, 0, 1).unwrap();
        assert!(k <= 2 * 4);
        assert!(block_kernel_dim(&LindbladModel::new(4, 1.0).unwrap(), 0, 1).is_err());
    }
}

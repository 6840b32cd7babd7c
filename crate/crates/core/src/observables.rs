//! Expectation values evaluated entirely in the doubled auxiliary space.
//!
//! Everything is a vacuum expectation of a string of transfer operators
//! `𝕋 = Σ_i 𝕃^{ii}` with one local vertex inserted. Numeric sweeps keep a
//! running log-scale so that long chains do not overflow.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::aux::{
    add_into, build_conjugate, build_generators, doubled_vacuum, AuxState, Cutoff, DoubledState, DoubledVector,
    LaxComponents, LaxName, ReprParams, TwoLeg,
};
use crate::error::{Error, Result};
use crate::physical::digits;
use crate::report::CheckReport;
use crate::scalar::{Coefficient, ExactScalar};

/// Largest chain handled by the numeric transfer sweeps.
pub const MAX_TRANSFER_SITES: usize = 40;

/// Finite-difference step for `∂_μ log Z`.
pub const MU_STEP: f64 = 1e-5;

/// A word in the two-leg components: `[(i₁,j₁), …]` means `𝕃^{i₁j₁}𝕃^{i₂j₂}⋯`.
pub type Word = Vec<(usize, usize)>;

/// Linear combination of words of a fixed width.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexOperator<C> {
    pub width: usize,
    pub terms: Vec<(C, Word)>,
}

impl<C: Coefficient> VertexOperator<C> {
    /// `𝕋 = Σ_i 𝕃^{ii}`.
    pub fn transfer() -> Self {
        VertexOperator { width: 1, terms: (1..=3).map(|i| (C::one(), vec![(i, i)])).collect() }
    }

    /// Image of a `3^ℓ × 3^ℓ` observable: `Σ X_{J,I} 𝕃^{i₁j₁}⋯𝕃^{i_ℓj_ℓ}`.
    pub fn from_local(width: usize, op: &BTreeMap<(usize, usize), C>) -> Result<Self> {
        if width == 0 {
            return Err(Error::InvalidArgument("observable needs at least one site".into()));
        }
        let d = 3usize.pow(width as u32);
        let mut terms = Vec::new();
        for ((r, c), v) in op {
            if *r >= d || *c >= d {
                return Err(Error::Shape(format!("entry ({r},{c}) outside a {width}-site observable")));
            }
            if v.is_zero() {
                continue;
            }
            let word = digits(*c, width)
                .into_iter()
                .zip(digits(*r, width))
                .map(|(i, j)| (i as usize + 1, j as usize + 1))
                .collect();
            terms.push((v.clone(), word));
        }
        Ok(VertexOperator { width, terms })
    }

    /// Current vertex `i(𝕃^{ji}𝕃^{ij} − 𝕃^{ij}𝕃^{ji})`.
    pub fn current(i: usize, j: usize) -> Self {
        let iu = C::from_gauss(0, 1);
        VertexOperator {
            width: 2,
            terms: vec![(iu.clone(), vec![(j, i), (i, j)]), (iu.negated(), vec![(i, j), (j, i)])],
        }
    }

    /// Total species current `Σ_j` of the current vertices.
    pub fn total_current(i: usize) -> Self {
        let mut terms = Vec::new();
        for j in 1..=3 {
            if j != i {
                terms.extend(Self::current(i, j).terms);
            }
        }
        VertexOperator { width: 2, terms }
    }

    /// `⟨⟨v| X`.
    pub fn apply_bra(&self, legs: &TwoLeg<C>, v: &DoubledVector<C>) -> DoubledVector<C> {
        let mut out = DoubledVector::new();
        for (w, word) in &self.terms {
            let mut cur = v.clone();
            for &(i, j) in word {
                if cur.is_empty() {
                    break;
                }
                cur = legs.apply_bra(i, j, &cur);
            }
            for (s, x) in cur {
                add_into(&mut out, s, x.times(w));
            }
        }
        out
    }

    /// `X|v⟩⟩`.
    pub fn apply(&self, legs: &TwoLeg<C>, v: &DoubledVector<C>) -> DoubledVector<C> {
        let mut out = DoubledVector::new();
        for (w, word) in &self.terms {
            let mut cur = v.clone();
            for &(i, j) in word.iter().rev() {
                if cur.is_empty() {
                    break;
                }
                cur = legs.apply(i, j, &cur);
            }
            for (s, x) in cur {
                add_into(&mut out, s, x.times(w));
            }
        }
        out
    }

    /// Matrix elements `(target, source) → value` of the ket action.
    pub fn materialize(
        &self,
        legs: &TwoLeg<C>,
        sources: impl IntoIterator<Item = DoubledState>,
    ) -> BTreeMap<(DoubledState, DoubledState), C> {
        let mut table = BTreeMap::new();
        for s in sources {
            let mut unit = DoubledVector::new();
            unit.insert(s, C::one());
            for (t, v) in self.apply(legs, &unit) {
                table.insert((t, s), v);
            }
        }
        table
    }
}

/// Two linear charges conserved by `𝕋`: `(j−k) − (j̄−k̄)` and
/// `(j+k+2l) − (j̄+k̄+2l̄)`. Both vanish on the vacuum.
pub fn charges(s: &DoubledState) -> (i64, i64) {
    let (a, b) = (s.left, s.right);
    let minus = (a.j as i64 - a.k as i64) - (b.j as i64 - b.k as i64);
    let plus = (a.j + a.k + 2 * a.l) as i64 - (b.j + b.k + 2 * b.l) as i64;
    (minus, plus)
}

pub fn satisfies_constraints(s: &DoubledState) -> bool {
    charges(s) == (0, 0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    /// Every state of the doubled box.
    Full,
    /// Only states with vanishing conserved charges.
    #[default]
    Constrained,
}

/// Indexed set of doubled states.
#[derive(Clone, Debug)]
pub struct DoubledSpace {
    pub cutoff: Cutoff,
    pub reduction: Reduction,
    states: Vec<DoubledState>,
    index: HashMap<DoubledState, usize>,
}

impl DoubledSpace {
    pub fn new(cutoff: Cutoff, reduction: Reduction) -> Self {
        let mut states = Vec::new();
        for left in cutoff.states() {
            match reduction {
                Reduction::Full => states.extend(cutoff.states().map(|right| DoubledState::new(left, right))),
                Reduction::Constrained => {
                    let diff = left.j as i64 - left.k as i64;
                    let total = (left.j + left.k + 2 * left.l) as i64;
                    for jb in 0..=cutoff.j as i64 {
                        let kb = jb - diff;
                        let twice_l = total - jb - kb;
                        if kb < 0 || kb > cutoff.k as i64 || twice_l < 0 || twice_l % 2 != 0 {
                            continue;
                        }
                        let lb = twice_l / 2;
                        if lb > cutoff.l as i64 {
                            continue;
                        }
                        states.push(DoubledState::new(left, AuxState::new(jb as u32, kb as u32, lb as u32)));
                    }
                }
            }
        }
        let index = states.iter().enumerate().map(|(k, s)| (*s, k)).collect();
        DoubledSpace { cutoff, reduction, states, index }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[DoubledState] {
        &self.states
    }

    pub fn position(&self, s: &DoubledState) -> Option<usize> {
        self.index.get(s).copied()
    }
}

/// Row-wise sparse bra action on an indexed space.
#[derive(Clone, Debug)]
struct BraMatrix {
    rows: Vec<Vec<(usize, Complex64)>>,
}

impl BraMatrix {
    fn build(space: &DoubledSpace, legs: &TwoLeg<Complex64>, i: usize, j: usize) -> (Self, usize) {
        let mut escaped = 0;
        let rows = space
            .states()
            .iter()
            .map(|s| {
                let mut unit = DoubledVector::new();
                unit.insert(*s, Complex64::new(1.0, 0.0));
                legs.apply_bra(i, j, &unit)
                    .into_iter()
                    .filter_map(|(t, v)| match space.position(&t) {
                        Some(p) => Some((p, v)),
                        None => {
                            escaped += 1;
                            None
                        }
                    })
                    .collect()
            })
            .collect();
        (BraMatrix { rows }, escaped)
    }

    fn scaled(&self, w: Complex64) -> Self {
        BraMatrix { rows: self.rows.iter().map(|r| r.iter().map(|(k, v)| (*k, v * w)).collect()).collect() }
    }

    fn sum(parts: &[BraMatrix]) -> Self {
        let n = parts[0].rows.len();
        let rows = (0..n)
            .map(|r| {
                let mut acc: BTreeMap<usize, Complex64> = BTreeMap::new();
                for p in parts {
                    for (k, v) in &p.rows[r] {
                        *acc.entry(*k).or_default() += v;
                    }
                }
                acc.into_iter().filter(|(_, v)| v.norm() != 0.0).collect()
            })
            .collect();
        BraMatrix { rows }
    }

    fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        for (x, row) in v.iter().zip(&self.rows) {
            if x.norm_sqr() == 0.0 {
                continue;
            }
            for (k, a) in row {
                out[*k] += x * a;
            }
        }
    }

    fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }
}

/// Dense frontier with a separate log-scale.
#[derive(Clone, Debug)]
struct Scaled {
    data: Vec<Complex64>,
    log_scale: f64,
}

impl Scaled {
    fn renormalize(&mut self) {
        let m = self.data.iter().map(|x| x.norm()).fold(0.0, f64::max);
        if m > 0.0 && m.is_finite() {
            let inv = 1.0 / m;
            for x in &mut self.data {
                *x *= inv;
            }
            self.log_scale += m.ln();
        }
    }
}

/// A value `mantissa · e^{log_scale}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogValue {
    pub mantissa: Complex64,
    pub log_scale: f64,
}

impl LogValue {
    /// `ln |value|`.
    pub fn ln_abs(&self) -> f64 {
        self.mantissa.norm().ln() + self.log_scale
    }

    pub fn ratio(&self, other: &LogValue) -> Complex64 {
        self.mantissa / other.mantissa * (self.log_scale - other.log_scale).exp()
    }

    pub fn value(&self) -> Complex64 {
        self.mantissa * self.log_scale.exp()
    }
}

/// Numeric transfer-matrix machinery for one `(ε, μ)` and cutoff.
#[derive(Clone, Debug)]
pub struct TransferContext {
    pub epsilon: f64,
    pub mu: f64,
    legs: TwoLeg<Complex64>,
    space: DoubledSpace,
    transfer: BraMatrix,
    /// `𝕃^{11} + 𝕃^{33}` and `𝕃^{22}` without fugacity, for sector sweeps.
    particle: BraMatrix,
    hole: BraMatrix,
    vacuum: usize,
    /// Number of images that left the indexed space while building.
    pub escaped: usize,
}

/// Cutoff used for chains of length `n`: `⌈n/2⌉ + 1` on every axis.
pub fn chain_cutoff(n: usize) -> Cutoff {
    Cutoff::uniform((n as u32).div_ceil(2) + 1)
}

impl TransferContext {
    pub fn new(cutoff: Cutoff, epsilon: f64, mu: f64, reduction: Reduction) -> Result<Self> {
        if !epsilon.is_finite() || !mu.is_finite() {
            return Err(Error::NonFinite("transfer parameters".into()));
        }
        let params = ReprParams::new(epsilon, 0).with_cutoff(cutoff);
        let legs = TwoLeg::<Complex64>::from_params(&params.with_mu(mu))?;
        let plain = TwoLeg::<Complex64>::from_params(&params)?;
        let space = DoubledSpace::new(cutoff, reduction);
        let mut escaped = 0;
        let mut part = |l: &TwoLeg<Complex64>, i: usize| {
            let (m, e) = BraMatrix::build(&space, l, i, i);
            escaped += e;
            m
        };
        let plain_parts = [part(&plain, 1), part(&plain, 2), part(&plain, 3)];
        let z2 = (mu).exp();
        let transfer = BraMatrix::sum(&[plain_parts[0].clone(), plain_parts[1].scaled(Complex64::new(z2, 0.0)), plain_parts[2].clone()]);
        let particle = BraMatrix::sum(&[plain_parts[0].clone(), plain_parts[2].clone()]);
        let hole = plain_parts[1].clone();
        let vacuum = space.position(&DoubledState::VACUUM).expect("vacuum is always indexed");
        Ok(TransferContext { epsilon, mu, legs, space, transfer, particle, hole, vacuum, escaped })
    }

    pub fn for_chain(n: usize, epsilon: f64, mu: f64, reduction: Reduction) -> Result<Self> {
        crate::physical::check_sites(n, MAX_TRANSFER_SITES, "transfer sweep")?;
        Self::new(chain_cutoff(n), epsilon, mu, reduction)
    }

    pub fn space(&self) -> &DoubledSpace {
        &self.space
    }

    pub fn transfer_nnz(&self) -> usize {
        self.transfer.nnz()
    }

    fn check_length(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::InvalidArgument("chain length must be at least 1".into()));
        }
        crate::physical::check_sites(n, MAX_TRANSFER_SITES, "transfer sweep")?;
        self.space.cutoff.check_exact_for(n)
    }

    fn vacuum_bra(&self) -> Scaled {
        let mut data = vec![Complex64::new(0.0, 0.0); self.space.len()];
        data[self.vacuum] = Complex64::new(1.0, 0.0);
        Scaled { data, log_scale: 0.0 }
    }

    fn step(&self, v: &Scaled) -> Scaled {
        let mut out = vec![Complex64::new(0.0, 0.0); v.data.len()];
        self.transfer.apply(&v.data, &mut out);
        let mut s = Scaled { data: out, log_scale: v.log_scale };
        s.renormalize();
        s
    }

    fn finish(&self, v: &Scaled) -> LogValue {
        LogValue { mantissa: v.data[self.vacuum], log_scale: v.log_scale }
    }

    /// `⟨⟨vac|𝕋^n|vac⟩⟩` with its log-scale.
    pub fn partition(&self, n: usize) -> Result<LogValue> {
        self.check_length(n)?;
        let mut v = self.vacuum_bra();
        for _ in 0..n {
            v = self.step(&v);
        }
        Ok(self.finish(&v))
    }

    /// `⟨⟨vac|𝕋^m` for every `m ≤ n`, read off at the vacuum.
    pub fn partition_sequence(&self, n: usize) -> Result<Vec<LogValue>> {
        self.check_length(n)?;
        let mut v = self.vacuum_bra();
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            v = self.step(&v);
            out.push(self.finish(&v));
        }
        Ok(out)
    }

    /// Un-normalized `⟨⟨vac|𝕋^{x−1} X 𝕋^{n−x−ℓ+1}|vac⟩⟩`.
    pub fn insert_vertex(&self, n: usize, first: usize, vertex: &VertexOperator<Complex64>) -> Result<LogValue> {
        self.check_length(n)?;
        if first == 0 || first + vertex.width > n + 1 {
            return Err(Error::InvalidArgument(format!(
                "support {}..{} outside a chain of {n} sites",
                first,
                first + vertex.width - 1
            )));
        }
        let mut v = self.vacuum_bra();
        for _ in 1..first {
            v = self.step(&v);
        }
        let sparse: DoubledVector<Complex64> = v
            .data
            .iter()
            .enumerate()
            .filter(|(_, x)| x.norm_sqr() != 0.0)
            .map(|(k, x)| (self.space.states()[k], *x))
            .collect();
        let image = vertex.apply_bra(&self.legs, &sparse);
        let mut data = vec![Complex64::new(0.0, 0.0); self.space.len()];
        for (s, x) in image {
            // charged states never return to the vacuum
            if let Some(p) = self.space.position(&s) {
                data[p] += x;
            }
        }
        let mut v = Scaled { data, log_scale: v.log_scale };
        v.renormalize();
        for _ in 0..(n + 1 - first - vertex.width) {
            v = self.step(&v);
        }
        Ok(self.finish(&v))
    }

    /// Normalized expectation of a vertex inserted at `first`.
    pub fn expectation(&self, n: usize, first: usize, vertex: &VertexOperator<Complex64>) -> Result<Complex64> {
        let num = self.insert_vertex(n, first, vertex)?;
        let z = self.partition(n)?;
        Ok(num.ratio(&z))
    }

    /// `tr ρ^{(ν)}` for `ν = 0..=n` (un-weighted), as natural logarithms.
    pub fn log_sector_traces(&self, n: usize) -> Result<Vec<f64>> {
        self.check_length(n)?;
        let len = self.space.len();
        let zero = Complex64::new(0.0, 0.0);
        let mut sectors = vec![vec![zero; len]; n + 1];
        sectors[0][self.vacuum] = Complex64::new(1.0, 0.0);
        let mut log_scale = 0.0;
        for step in 0..n {
            let mut next = vec![vec![zero; len]; n + 1];
            for nu in 0..=step {
                self.particle.apply(&sectors[nu], &mut next[nu]);
                self.hole.apply(&sectors[nu], &mut next[nu + 1]);
            }
            let m = next.iter().flatten().map(|x| x.norm()).fold(0.0, f64::max);
            if m > 0.0 {
                for x in next.iter_mut().flatten() {
                    *x /= m;
                }
                log_scale += m.ln();
            }
            sectors = next;
        }
        Ok(sectors.iter().map(|v| v[self.vacuum].re.ln() + log_scale).collect())
    }
}

/// `ln Z_n(ε, μ)`.
pub fn log_partition_function(n: usize, epsilon: f64, mu: f64) -> Result<f64> {
    let ctx = TransferContext::for_chain(n, epsilon, mu, Reduction::Constrained)?;
    let z = ctx.partition(n)?;
    if !(z.mantissa.re > 0.0) {
        return Err(Error::Inconsistent { what: "partition function is not positive".into(), residual: z.mantissa.re });
    }
    Ok(z.ln_abs())
}

/// `Z_n(ε, μ)`.
pub fn partition_function(n: usize, epsilon: f64, mu: f64) -> Result<f64> {
    let ln = log_partition_function(n, epsilon, mu)?;
    let z = ln.exp();
    if !z.is_finite() {
        return Err(Error::NonFinite(format!("Z_{n} overflows; use the logarithm")));
    }
    Ok(z)
}

/// `Z_n` as an exact polynomial in `ε` and the formal fugacity `z`.
pub fn partition_function_exact(n: usize) -> Result<ExactScalar> {
    let legs = TwoLeg::<ExactScalar>::from_params(&ReprParams::formal(Cutoff::threshold(n).max(1)).weighted())?;
    sparse_vacuum_expectation(&legs, n, None)
}

/// Sparse sweep `⟨⟨vac|𝕋^{x−1} X 𝕋^{…}|vac⟩⟩` in any backend; `vertex` is
/// `(first site, operator)`.
pub fn sparse_vacuum_expectation<C: Coefficient>(
    legs: &TwoLeg<C>,
    n: usize,
    vertex: Option<(usize, &VertexOperator<C>)>,
) -> Result<C> {
    legs.cutoff().check_exact_for(n)?;
    let transfer = VertexOperator::<C>::transfer();
    let mut v = doubled_vacuum::<C>();
    let mut site = 1;
    while site <= n {
        let op = match vertex {
            Some((first, x)) if first == site => x,
            _ => &transfer,
        };
        v = op.apply_bra(legs, &v);
        site += op.width;
        let remaining = (n + 1).saturating_sub(site) as u32;
        v.retain(|s, _| s.max_coord() <= remaining);
    }
    if site != n + 1 {
        return Err(Error::InvalidArgument("vertex does not fit the chain".into()));
    }
    Ok(v.get(&DoubledState::VACUUM).cloned().unwrap_or_else(C::zero))
}

/// Normalized local expectation `⟨X⟩` of a `3^ℓ × 3^ℓ` observable on sites
/// `first..first+ℓ`.
pub fn local_expectation(
    n: usize,
    epsilon: f64,
    mu: f64,
    first: usize,
    width: usize,
    op: &BTreeMap<(usize, usize), Complex64>,
) -> Result<Complex64> {
    let ctx = TransferContext::for_chain(n, epsilon, mu, Reduction::Constrained)?;
    ctx.expectation(n, first, &VertexOperator::from_local(width, op)?)
}

/// `⟨J^{ij}_{x,x+1}⟩`.
pub fn current_expectation(i: usize, j: usize, x: usize, n: usize, epsilon: f64, mu: f64) -> Result<f64> {
    let ctx = TransferContext::for_chain(n, epsilon, mu, Reduction::Constrained)?;
    Ok(ctx.expectation(n, x, &VertexOperator::current(i, j))?.re)
}

/// Hole density by two independent routes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Doping {
    /// `n⁻¹ Σ_ν ν e^{μν} tr ρ^{(ν)} / Σ_ν e^{μν} tr ρ^{(ν)}`.
    pub sector_sum: f64,
    /// `n⁻¹ ∂_μ log Z_n` by central difference.
    pub finite_difference: f64,
}

/// Doping from sector traces (`ln tr ρ^{(ν)}`, `ν = 0..=n`).
pub fn doping_from_sectors(log_traces: &[f64], mu: f64) -> f64 {
    let n = log_traces.len() - 1;
    if n == 0 {
        return 0.0;
    }
    let weighted: Vec<f64> = log_traces.iter().enumerate().map(|(nu, t)| t + mu * nu as f64).collect();
    let top = weighted.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = weighted.iter().map(|x| (x - top).exp()).collect();
    let mean = w.iter().enumerate().map(|(nu, x)| nu as f64 * x).sum::<f64>() / w.iter().sum::<f64>();
    // a convex combination of ν/n; clamp the rounding
    (mean / n as f64).clamp(0.0, 1.0)
}

pub fn doping(n: usize, epsilon: f64, mu: f64) -> Result<Doping> {
    let plain = TransferContext::for_chain(n, epsilon, 0.0, Reduction::Constrained)?;
    let sector_sum = doping_from_sectors(&plain.log_sector_traces(n)?, mu);
    let up = log_partition_function(n, epsilon, mu + MU_STEP)?;
    let down = log_partition_function(n, epsilon, mu - MU_STEP)?;
    let finite_difference = (up - down) / (2.0 * MU_STEP * n as f64);
    Ok(Doping { sector_sum, finite_difference })
}

/// Exact sector traces `tr ρ^{(ν)}` as polynomials in `ε`.
pub fn sector_traces_exact(n: usize) -> Result<Vec<ExactScalar>> {
    let z = partition_function_exact(n)?;
    Ok((0..=n as u32).map(|nu| z.z_component(2 * nu)).collect())
}

/// Descriptive fit `log Z_n ≈ α n + β₁ n log n + c`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingFit {
    pub epsilon: f64,
    pub mu: f64,
    pub alpha: f64,
    pub beta1: f64,
    pub offset: f64,
    /// `(n, log Z_n − fit)`.
    pub residuals: Vec<(usize, f64)>,
    pub n_range: (usize, usize),
}

pub fn scaling_fit(epsilon: f64, mu: f64, n_range: (usize, usize)) -> Result<ScalingFit> {
    let (lo, hi) = n_range;
    if hi < lo || hi - lo + 1 < 4 || lo == 0 {
        return Err(Error::InvalidArgument(format!("scaling fit needs at least 4 chain lengths, got {lo}..={hi}")));
    }
    let ctx = TransferContext::for_chain(hi, epsilon, mu, Reduction::Constrained)?;
    let seq = ctx.partition_sequence(hi)?;
    let ns: Vec<usize> = (lo..=hi).collect();
    let y = DVector::from_iterator(ns.len(), ns.iter().map(|&n| seq[n - 1].ln_abs()));
    let a = DMatrix::from_fn(ns.len(), 3, |r, c| {
        let n = ns[r] as f64;
        match c {
            0 => n,
            1 => n * n.ln(),
            _ => 1.0,
        }
    });
    let coef = a
        .clone()
        .svd(true, true)
        .solve(&y, 1e-12)
        .map_err(|e| Error::InvalidArgument(format!("least squares failed: {e}")))?;
    let fitted = &a * &coef;
    let residuals = ns.iter().enumerate().map(|(k, &n)| (n, y[k] - fitted[k])).collect();
    Ok(ScalingFit { epsilon, mu, alpha: coef[0], beta1: coef[1], offset: coef[2], residuals, n_range })
}

/// `s` values of the three local states under `s³`.
const S3: [i64; 3] = [1, 0, -1];

fn lplus<C: Coefficient>(lax: &LaxComponents<C>, v: &crate::aux::AuxVector<C>) -> crate::aux::AuxVector<C> {
    let mut out = lax.by_name(LaxName::LUp).apply(v);
    for (s, x) in lax.by_name(LaxName::LDown).apply(v) {
        add_into(&mut out, s, x);
    }
    out
}

/// U(1) generator identities, `[𝕋, K±] = 0`, and the charge constraints on
/// states reachable from the vacuum in `reach_steps` transfer steps.
pub fn check_aux_symmetries<C: Coefficient>(params: &ReprParams, reach_steps: usize, tol: f64) -> Result<Vec<CheckReport>> {
    let plain = ReprParams { mu: None, ..*params };
    let lax = build_generators::<C>(&plain)?;
    let conj = build_conjugate(&lax);
    let legs = TwoLeg { left: lax.clone(), right: conj.clone() };
    let cut = lax.cutoff;
    let eta = lax.eta();
    let mut reports = Vec::new();

    // [L^{ij}, l⁺] = η (s_i − s_j) L^{ij}
    let mut r = CheckReport::new("[L, iε s³ + l⁺] = 0");
    for s in cut.states().filter(|s| s.j + 2 <= cut.j && s.k + 2 <= cut.k && s.l + 2 <= cut.l) {
        let e = crate::aux::unit_vector::<C>(s);
        for i in 1..=3 {
            for j in 1..=3 {
                let op = lax.get(i, j);
                let ab = op.apply(&lplus(&lax, &e));
                let ba = lplus(&lax, &op.apply(&e));
                let mut diff = crate::aux::vector_difference(&ab, &ba);
                let w = eta.times(&C::from_gauss(S3[i - 1] - S3[j - 1], 0)).negated();
                for (t, x) in op.apply(&e) {
                    add_into(&mut diff, t, x.times(&w));
                }
                let res = diff.values().map(Coefficient::residual).fold(0.0, f64::max);
                r.record(res, tol, || format!("L^{i}{j} from {s}"));
            }
        }
    }
    reports.push(r);

    // [𝕃^{ij}, l⁺⊗1 + 1⊗l̄⁺] = η (s_i − s_j) 𝕃^{ij}
    let k_plus_ops = |v: &DoubledVector<C>| -> DoubledVector<C> {
        let mut out = DoubledVector::new();
        for (s, x) in v {
            let one = |st: AuxState| crate::aux::unit_vector::<C>(st);
            for (t, y) in lplus(&lax, &one(s.left)) {
                add_into(&mut out, DoubledState::new(t, s.right), x.times(&y));
            }
            for (t, y) in lplus(&conj, &one(s.right)) {
                add_into(&mut out, DoubledState::new(s.left, t), x.times(&y));
            }
        }
        out
    };
    let doubled_interior: Vec<DoubledState> = cut
        .states()
        .filter(|s| cut.is_interior(s))
        .flat_map(|a| cut.states().filter(|s| cut.is_interior(s)).map(move |b| DoubledState::new(a, b)))
        .collect();
    let mut r = CheckReport::new("[𝕃, iε s³ + l⁺ + l̄⁺] = 0");
    for s in &doubled_interior {
        let mut e = DoubledVector::new();
        e.insert(*s, C::one());
        for i in 1..=3 {
            for j in 1..=3 {
                let ab = legs.apply(i, j, &k_plus_ops(&e));
                let ba = k_plus_ops(&legs.apply(i, j, &e));
                let mut diff = crate::aux::vector_difference(&ab, &ba);
                let w = eta.times(&C::from_gauss(S3[i - 1] - S3[j - 1], 0)).negated();
                for (t, x) in legs.apply(i, j, &e) {
                    add_into(&mut diff, t, x.times(&w));
                }
                let res = diff.values().map(Coefficient::residual).fold(0.0, f64::max);
                r.record(res, tol, || format!("𝕃^{i}{j} from {s}"));
            }
        }
    }
    reports.push(r);

    // explicit diagonal forms of K±
    let k_explicit = |s: &DoubledState| -> (C, C) {
        let (a, b) = (s.left, s.right);
        let four = C::from_gauss(4, 0);
        let plus = eta.times(&C::from_gauss((a.j + a.k + 2 * a.l) as i64 - (b.j + b.k + 2 * b.l) as i64, 0)).plus(&four);
        let minus = eta.times(&C::from_gauss((a.j as i64 - a.k as i64) - (b.j as i64 - b.k as i64), 0));
        (plus, minus)
    };
    let mut agree = CheckReport::new("K⁺ from generators equals its explicit form");
    for s in &doubled_interior {
        let mut e = DoubledVector::new();
        e.insert(*s, C::one());
        let got = k_plus_ops(&e);
        let mut expected = DoubledVector::new();
        add_into(&mut expected, *s, k_explicit(s).0);
        let res = crate::aux::vector_difference(&got, &expected).values().map(Coefficient::residual).fold(0.0, f64::max);
        agree.record(res, tol, || format!("at {s}"));
    }
    reports.push(agree);

    let transfer = VertexOperator::<C>::transfer();
    for (name, pick) in [("[𝕋, K⁺] = 0", 0usize), ("[𝕋, K⁻] = 0", 1)] {
        let mut r = CheckReport::new(name);
        let kval = |s: &DoubledState| if pick == 0 { k_explicit(s).0 } else { k_explicit(s).1 };
        for s in &doubled_interior {
            let mut e = DoubledVector::new();
            e.insert(*s, C::one());
            let image = transfer.apply(&legs, &e);
            let k_s = kval(s);
            let mut diff = DoubledVector::new();
            for (t, x) in &image {
                add_into(&mut diff, *t, x.times(&kval(t).minus(&k_s)));
            }
            let res = diff.values().map(Coefficient::residual).fold(0.0, f64::max);
            r.record(res, tol, || format!("from {s}"));
        }
        reports.push(r);
    }

    let mut r = CheckReport::new(format!("charge constraints on states reachable in {reach_steps} steps"));
    let mut v = doubled_vacuum::<C>();
    for step in 0..reach_steps {
        v = transfer.apply_bra(&legs, &v);
        for s in v.keys() {
            let (m, p) = charges(s);
            r.record((m.abs() + p.abs()) as f64, 0.0, || format!("step {} reaches {s}", step + 1));
        }
    }
    reports.push(r);
    Ok(reports)
}

/// Output record for observables.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObservableRecord {
    pub n: usize,
    pub epsilon: f64,
    pub mu: f64,
    pub observable: String,
    pub sites: Vec<usize>,
    pub value_re: f64,
    pub value_im: f64,
}

//! Contraction of vacuum expectation values into the Cholesky factor and the
//! density operator, plus the construction-level identity checks.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aux::{
    add_into, build_conjugate, build_generators, build_weighted, doubled_vacuum, unit_vector, vector_difference,
    AuxState, AuxVector, DoubledState, DoubledVector, LaxComponents, ReprParams, TwoLeg, VermaWeight,
};
use crate::error::{Error, Result};
use crate::physical::{check_sites, permutation_hamiltonian, PhysicalOperator, MAX_PHYSICAL_SITES};
use crate::report::CheckReport;
use crate::scalar::{Coefficient, ExactScalar};

/// Largest chain length for walk enumeration.
pub const MAX_WALK_SITES: usize = 7;

/// Depth-first sweep of a frontier vector over all physical index strings.
///
/// `step(i, j, frontier)` applies the `(i, j)` component from the right;
/// states that can no longer return to the vacuum are dropped.
fn sweep<S, C, F>(n: usize, start: BTreeMap<S, C>, vacuum: S, reach: fn(&S) -> u32, step: F) -> BTreeMap<(usize, usize), C>
where
    S: Ord + Clone + Send + Sync,
    C: Coefficient,
    F: Fn(usize, usize, &BTreeMap<S, C>) -> BTreeMap<S, C> + Sync,
{
    fn rec<S, C, F>(
        remaining: usize,
        row: usize,
        col: usize,
        frontier: &BTreeMap<S, C>,
        vacuum: &S,
        reach: fn(&S) -> u32,
        step: &F,
        out: &mut Vec<((usize, usize), C)>,
    ) where
        S: Ord + Clone,
        C: Coefficient,
        F: Fn(usize, usize, &BTreeMap<S, C>) -> BTreeMap<S, C>,
    {
        if remaining == 0 {
            if let Some(v) = frontier.get(vacuum) {
                out.push(((row, col), v.clone()));
            }
            return;
        }
        for i in 1..=3 {
            for j in 1..=3 {
                let mut next = step(i, j, frontier);
                next.retain(|s, _| reach(s) < remaining as u32);
                if next.is_empty() {
                    continue;
                }
                rec(remaining - 1, row * 3 + i - 1, col * 3 + j - 1, &next, vacuum, reach, step, out);
            }
        }
    }

    if n == 0 {
        return BTreeMap::new();
    }
    let pairs: Vec<(usize, usize)> = (1..=3).flat_map(|i| (1..=3).map(move |j| (i, j))).collect();
    let parts: Vec<Vec<((usize, usize), C)>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let mut out = Vec::new();
            let mut next = step(i, j, &start);
            next.retain(|s, _| reach(s) < n as u32);
            if !next.is_empty() {
                rec(n - 1, i - 1, j - 1, &next, &vacuum, reach, &step, &mut out);
            }
            out
        })
        .collect();
    parts.into_iter().flatten().collect()
}

/// `⟨i|S_n|j⟩ = ⟨vac|L^{i₁j₁}⋯L^{iₙjₙ}|vac⟩` from prepared components.
pub fn contract_lax<C: Coefficient>(n: usize, lax: &LaxComponents<C>) -> Result<PhysicalOperator<C>> {
    lax.cutoff.check_exact_for(n)?;
    let entries = sweep(n, unit_vector::<C>(AuxState::VACUUM), AuxState::VACUUM, AuxState::max_coord, |i, j, v| {
        lax.get(i, j).apply_bra(v)
    });
    Ok(PhysicalOperator::from_map(n, entries))
}

/// The Cholesky factor `S_n`, weighted by the fugacity when `params.mu` is
/// set.
pub fn contract_cholesky<C: Coefficient>(n: usize, params: &ReprParams) -> Result<PhysicalOperator<C>> {
    if n == 0 {
        return Err(Error::InvalidArgument("chain length must be at least 1".into()));
    }
    params.cutoff.check_exact_for(n)?;
    contract_lax(n, &build_weighted::<C>(params)?)
}

/// `⟨⟨vac|𝕃^{i₁j₁}⋯𝕃^{iₙjₙ}|vac⟩⟩`.
pub fn contract_two_leg<C: Coefficient>(n: usize, legs: &TwoLeg<C>) -> Result<PhysicalOperator<C>> {
    legs.cutoff().check_exact_for(n)?;
    let entries = sweep(n, doubled_vacuum::<C>(), DoubledState::VACUUM, DoubledState::max_coord, |i, j, v| {
        legs.apply_bra(i, j, v)
    });
    Ok(PhysicalOperator::from_map(n, entries))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityMethod {
    /// `S_n S_n†`.
    Cholesky,
    /// Two-leg monodromy contraction.
    TwoLeg,
}

/// The un-normalized density operator.
pub fn build_density<C: Coefficient>(n: usize, params: &ReprParams, method: DensityMethod) -> Result<PhysicalOperator<C>> {
    check_sites(n, MAX_PHYSICAL_SITES, "full density operator")?;
    match method {
        DensityMethod::Cholesky => {
            let s = contract_cholesky::<C>(n, params)?;
            s.matmul(&s.adjoint())
        }
        DensityMethod::TwoLeg => {
            params.cutoff.check_exact_for(n)?;
            contract_two_leg(n, &TwoLeg::from_params(params)?)
        }
    }
}

fn agreement<C: Coefficient>(a: &PhysicalOperator<C>, b: &PhysicalOperator<C>) -> Result<f64> {
    let diff = a.sub(b)?.max_residual();
    if C::EXACT {
        return Ok(diff);
    }
    let scale = a.max_residual().max(b.max_residual());
    Ok(if scale > 0.0 { diff / scale } else { diff })
}

/// Builds the density both ways and fails on disagreement beyond `tol`
/// (relative to the largest entry; exact mode should use `0.0`).
pub fn build_density_checked<C: Coefficient>(n: usize, params: &ReprParams, tol: f64) -> Result<PhysicalOperator<C>> {
    let chol = build_density::<C>(n, params, DensityMethod::Cholesky)?;
    let legs = build_density::<C>(n, params, DensityMethod::TwoLeg)?;
    let residual = agreement(&chol, &legs)?;
    if !(residual <= tol) {
        return Err(Error::Inconsistent { what: "Cholesky vs two-leg density".into(), residual });
    }
    Ok(chol)
}

/// Keeps the rows with `holes` holes. The operator must be block diagonal in
/// the hole number, so the column constraint follows.
pub fn project_sector<C: Coefficient>(op: &PhysicalOperator<C>, holes: usize) -> Result<PhysicalOperator<C>> {
    let off = op.off_block_entries();
    if off > 0 {
        return Err(Error::NotBlockDiagonal(off));
    }
    if holes > op.sites() {
        return Err(Error::InvalidArgument(format!("sector {holes} on {} sites", op.sites())));
    }
    Ok(op.project_rows(holes))
}

/// `Σ_ν e^{μν} P^{(ν)} ρ`, evaluated both through the weighted two-leg
/// contraction and the explicit sector sum. `params.mu` must be set.
pub fn grand_canonical_density<C: Coefficient>(n: usize, params: &ReprParams, tol: f64) -> Result<PhysicalOperator<C>> {
    let mu = params
        .mu
        .ok_or_else(|| Error::InvalidArgument("grand-canonical density needs a chemical potential".into()))?;
    if !mu.is_finite() {
        return Err(Error::NonFinite("chemical potential".into()));
    }
    let weighted = build_density::<C>(n, params, DensityMethod::TwoLeg)?;
    let plain_params = ReprParams { mu: None, ..*params };
    let plain = build_density::<C>(n, &plain_params, DensityMethod::TwoLeg)?;
    let z = C::fugacity(mu);
    let z2 = z.times(&z);
    let mut sum = PhysicalOperator::zero(n);
    let mut w = C::one();
    for holes in 0..=n {
        sum = sum.add(&project_sector(&plain, holes)?.scale(&w))?;
        w = w.times(&z2);
    }
    let residual = agreement(&weighted, &sum)?;
    if !(residual <= tol) {
        return Err(Error::Inconsistent { what: "weighted contraction vs sector sum".into(), residual });
    }
    Ok(weighted)
}

/// Diagonal of `b = η(e³³ − e¹¹)` for the given leg orientation.
fn boundary_diagonal<C: Coefficient>(lax: &LaxComponents<C>) -> [C; 3] {
    let eta = lax.eta();
    [eta.negated(), C::zero(), eta]
}

/// Checks `[h, L⊗L] = B₁L₂ − L₁B₂` entry-wise on physical ⊗ auxiliary space.
///
/// Source states are kept two steps away from the cutoff so that products of
/// two components are not truncated.
pub fn check_sutherland<C: Coefficient>(lax: &LaxComponents<C>, tol: f64) -> CheckReport {
    let mut report = CheckReport::new("local divergence condition");
    let b = boundary_diagonal(lax);
    let cut = lax.cutoff;
    let sources: Vec<AuxState> =
        cut.states().filter(|s| s.j + 2 <= cut.j && s.k + 2 <= cut.k && s.l + 2 <= cut.l).collect();
    if sources.is_empty() {
        report.fail("cutoff too small for two-step products");
        return report;
    }
    let prod = |x: (usize, usize), y: (usize, usize), e: &AuxVector<C>| lax.get(x.0, x.1).apply(&lax.get(y.0, y.1).apply(e));
    for s in &sources {
        let e = unit_vector::<C>(*s);
        for a in 1..=3 {
            for bb in 1..=3 {
                for c in 1..=3 {
                    for d in 1..=3 {
                        // coefficient of e^{ab} ⊗ e^{cd}
                        let lhs = vector_difference(&prod((c, bb), (a, d), &e), &prod((a, d), (c, bb), &e));
                        let mut rhs = AuxVector::new();
                        if a == bb {
                            for (t, v) in lax.get(c, d).apply(&e) {
                                add_into(&mut rhs, t, v.times(&b[a - 1]));
                            }
                        }
                        if c == d {
                            for (t, v) in lax.get(a, bb).apply(&e) {
                                add_into(&mut rhs, t, v.times(&b[c - 1]).negated());
                            }
                        }
                        let diff = vector_difference(&lhs, &rhs);
                        let r = diff.values().map(Coefficient::residual).fold(0.0, f64::max);
                        report.record(r, tol, || format!("e^{a}{bb}⊗e^{c}{d} from {s}"));
                    }
                }
            }
        }
    }
    report
}

/// `[H, S_n] = b ⊗ S_{n−1} − S_{n−1} ⊗ b`, in full and per hole sector.
pub fn check_defining_relation<C: Coefficient>(n: usize, params: &ReprParams, tol: f64) -> Result<Vec<CheckReport>> {
    if n < 2 {
        return Err(Error::InvalidArgument("defining relation needs n ≥ 2".into()));
    }
    let lax = build_weighted::<C>(params)?;
    let s = contract_lax(n, &lax)?;
    let s_prev = contract_lax(n - 1, &lax)?;
    let b = boundary_diagonal(&lax);
    let b_op = PhysicalOperator::from_map(1, (0..3).map(|i| ((i, i), b[i].clone())).collect());
    let h = permutation_hamiltonian::<C>(n);
    let lhs = h.commutator(&s)?;
    let rhs = b_op.kron(&s_prev).sub(&s_prev.kron(&b_op))?;
    let diff = lhs.sub(&rhs)?;

    let scale = if C::EXACT { 1.0 } else { s.max_residual().max(1.0) };
    let mut reports = Vec::new();
    let mut full = CheckReport::new(format!("[H, S_{n}] = b⊗S_{} − S_{}⊗b", n - 1, n - 1));
    full.record(diff.max_residual() / scale, tol, || format!("{} nonzero residual entries", diff.nnz()));
    reports.push(full);
    for holes in 0..=n {
        let d = project_sector(&lhs, holes)?.sub(&project_sector(&rhs, holes)?)?;
        let mut r = CheckReport::new(format!("sector {holes}"));
        r.record(d.max_residual() / scale, tol, || format!("{} nonzero residual entries", d.nnz()));
        reports.push(r);
    }
    Ok(reports)
}

/// Both boundary equations on physical ⊗ doubled auxiliary space at the
/// vacuum. `verma` selects the weight of the un-conjugated leg; anything but
/// the matched value should fail.
pub fn check_boundary_system<C: Coefficient>(params: &ReprParams, verma: VermaWeight, tol: f64) -> Result<Vec<CheckReport>> {
    if params.cutoff.min() < 2 {
        return Err(Error::InvalidArgument("boundary system needs cutoff ≥ 2".into()));
    }
    let plain = ReprParams { mu: None, ..*params };
    let matched = build_generators::<C>(&plain)?;
    let conj = build_conjugate(&matched);
    let lax = build_generators::<C>(&plain.with_verma(verma))?;
    let legs = TwoLeg { left: lax.clone(), right: conj.clone() };
    let b = boundary_diagonal(&matched);
    let b_bar: Vec<C> = b.iter().map(C::conjugate).collect();
    let eps = C::coupling(params.epsilon);
    let minus_i = C::from_gauss(0, -1);

    // D_A(e^{ij}) as a 3×3 integer table for A = e^{13} (left) or e^{31} (right)
    let dissipator = |left: bool, i: usize, j: usize| -> [[i64; 3]; 3] {
        let (src, dst) = if left { (3, 1) } else { (1, 3) };
        let mut m = [[0i64; 3]; 3];
        if i == src && j == src {
            m[dst - 1][dst - 1] += 2;
        }
        if i == src {
            m[src - 1][j - 1] -= 1;
        }
        if j == src {
            m[i - 1][src - 1] -= 1;
        }
        m
    };

    let vac = doubled_vacuum::<C>();
    let one_leg = |leg: &LaxComponents<C>, i: usize, j: usize, on_left: bool, bra: bool| -> DoubledVector<C> {
        let v = unit_vector::<C>(AuxState::VACUUM);
        let image = if bra { leg.get(i, j).apply_bra(&v) } else { leg.get(i, j).apply(&v) };
        image
            .into_iter()
            .map(|(s, c)| {
                let d = if on_left {
                    DoubledState::new(s, AuxState::VACUUM)
                } else {
                    DoubledState::new(AuxState::VACUUM, s)
                };
                (d, c)
            })
            .collect()
    };

    let mut reports = Vec::new();
    for (left, name) in [(true, "left boundary equation"), (false, "right boundary equation")] {
        let mut report = CheckReport::new(name);
        let sign = if left { minus_i.clone() } else { minus_i.negated() };
        let images: BTreeMap<(usize, usize), DoubledVector<C>> = (1..=3)
            .flat_map(|i| (1..=3).map(move |j| (i, j)))
            .map(|(i, j)| {
                let img = if left { legs.apply_bra(i, j, &vac) } else { legs.apply(i, j, &vac) };
                ((i, j), img)
            })
            .collect();
        for p in 1..=3 {
            for q in 1..=3 {
                let mut acc = DoubledVector::new();
                for i in 1..=3 {
                    for j in 1..=3 {
                        let coef = dissipator(left, i, j)[p - 1][q - 1];
                        if coef == 0 {
                            continue;
                        }
                        let w = eps.times(&C::from_gauss(coef, 0));
                        for (s, v) in &images[&(i, j)] {
                            add_into(&mut acc, *s, v.times(&w));
                        }
                    }
                }
                // ∓i(𝔹⁽¹⁾ − 𝔹⁽²⁾): b_p (1 ⊗ L̄^{qp}) − b̄_q (L^{pq} ⊗ 1)
                for (s, v) in one_leg(&conj, q, p, false, left) {
                    add_into(&mut acc, s, v.times(&b[p - 1]).times(&sign));
                }
                for (s, v) in one_leg(&lax, p, q, true, left) {
                    add_into(&mut acc, s, v.times(&b_bar[q - 1]).times(&sign).negated());
                }
                let r = acc.values().map(Coefficient::residual).fold(0.0, f64::max);
                report.record(r, tol, || {
                    let at = acc.keys().next().map(|s| s.to_string()).unwrap_or_default();
                    format!("physical entry ({p},{q}) at {at}")
                });
            }
        }
        reports.push(report);
    }
    Ok(reports)
}

/// A rational coupling `num/den`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rational {
    pub num: i64,
    pub den: i64,
}

impl Rational {
    pub fn new(num: i64, den: i64) -> Self {
        Rational { num, den }
    }
}

/// `[S_n(ε), S_n(ε′)] = 0` exactly, with both couplings rational. `S_n` is
/// scaled by `den^n` so that every entry stays integral.
pub fn check_transfer_commutation_exact(n: usize, a: Rational, b: Rational) -> Result<CheckReport> {
    check_sites(n, MAX_PHYSICAL_SITES, "transfer commutation")?;
    let s = contract_cholesky::<ExactScalar>(n, &ReprParams::formal(n as u32))?;
    let at = |r: Rational| s.try_map(|v| v.substitute_epsilon(r.num, r.den, n as u32));
    let sa = at(a)?;
    let sb = at(b)?;
    let comm = sa.commutator(&sb)?;
    let mut report = CheckReport::new(format!("[S_{n}({}/{}), S_{n}({}/{})] = 0", a.num, a.den, b.num, b.den));
    report.record(comm.max_residual(), 0.0, || format!("{} nonzero entries", comm.nnz()));
    Ok(report)
}

/// Numeric variant at `(ε, μ)` and `(ε′, μ′)`; the residual is
/// `‖[A, B]‖_F / (‖A‖_F ‖B‖_F)`.
pub fn check_transfer_commutation(n: usize, first: (f64, f64), second: (f64, f64), tol: f64) -> Result<CheckReport> {
    check_sites(n, MAX_PHYSICAL_SITES, "transfer commutation")?;
    let build = |(eps, mu): (f64, f64)| {
        contract_cholesky::<num_complex::Complex64>(n, &ReprParams::new(eps, n as u32).with_mu(mu))
    };
    let sa = build(first)?;
    let sb = build(second)?;
    let comm = sa.commutator(&sb)?;
    let r = comm.frobenius_norm() / (sa.frobenius_norm() * sb.frobenius_norm());
    let mut report = CheckReport::new(format!(
        "[S_{n}({}, {}), S_{n}({}, {})] = 0",
        first.0, first.1, second.0, second.1
    ));
    report.record(r, tol, || "commutator norm".into());
    Ok(report)
}

/// `S_n` as a sum over closed walks of length `n` on the auxiliary lattice.
///
/// Each Lax component moves the walker by a fixed step with a closed-form
/// amplitude; `e^{13}` and `e^{31}` each have two moves whose walks add up.
pub fn wgs_contract<C: Coefficient>(n: usize, params: &ReprParams) -> Result<PhysicalOperator<C>> {
    check_sites(n, MAX_WALK_SITES, "walk enumeration")?;
    if n == 0 {
        return Err(Error::InvalidArgument("chain length must be at least 1".into()));
    }
    let eta = C::from_exact(&ExactScalar::eta(), params.epsilon, 0.0)?;
    let z = params.mu.map(C::fugacity);
    let int = |v: u32| C::from_gauss(v as i64, 0);

    // (move, amplitude) for one step from `s` along e^{ij}
    let moves = |i: usize, j: usize, s: AuxState| -> Vec<(AuxState, C)> {
        let (a, b, c) = (s.j, s.k, s.l);
        let st = AuxState::new;
        let mut out = Vec::with_capacity(2);
        match (i, j) {
            (1, 1) => out.push((s, C::one().plus(&eta.times(&int(a + c))))),
            (2, 2) => out.push((s, C::one())),
            (3, 3) => out.push((s, C::one().plus(&eta.times(&int(b + c))))),
            (1, 2) => out.push((st(a + 1, b, c), int(a + 1))),
            (2, 1) if a > 0 => out.push((st(a - 1, b, c), eta.clone())),
            (2, 3) => out.push((st(a, b + 1, c), eta.times(&int(b + 1)))),
            (3, 2) if b > 0 => out.push((st(a, b - 1, c), C::one())),
            (1, 3) => {
                out.push((st(a + 1, b + 1, c), eta.times(&int((a + 1) * (b + 1)))));
                out.push((st(a, b, c + 1), eta.times(&int(c + 1))));
            }
            (3, 1) => {
                if a > 0 && b > 0 {
                    out.push((st(a - 1, b - 1, c), eta.clone()));
                }
                if c > 0 {
                    let target = c - 1;
                    let amp = C::from_gauss(2, 0).plus(&eta.times(&C::from_gauss(target as i64 - 1, 0)));
                    out.push((st(a, b, target), amp));
                }
            }
            _ => {}
        }
        out
    };

    struct Walk<'a, C, M> {
        n: usize,
        moves: &'a M,
        z: Option<C>,
        out: BTreeMap<(usize, usize), C>,
    }

    impl<C: Coefficient, M: Fn(usize, usize, AuxState) -> Vec<(AuxState, C)>> Walk<'_, C, M> {
        fn go(&mut self, depth: usize, at: AuxState, row: usize, col: usize, amp: C) {
            let remaining = self.n - depth;
            if remaining == 0 {
                if at == AuxState::VACUUM {
                    add_into(&mut self.out, (row, col), amp);
                }
                return;
            }
            for i in 1..=3 {
                for j in 1..=3 {
                    for (next, a) in (self.moves)(i, j, at) {
                        if next.max_coord() as usize >= remaining {
                            continue;
                        }
                        let mut w = amp.times(&a);
                        if let (2, Some(z)) = (i, &self.z) {
                            w = w.times(z);
                        }
                        self.go(depth + 1, next, row * 3 + i - 1, col * 3 + j - 1, w);
                    }
                }
            }
        }
    }

    let mut walk = Walk { n, moves: &moves, z, out: BTreeMap::new() };
    walk.go(0, AuxState::VACUUM, 0, 0, C::one());
    Ok(PhysicalOperator::from_map(n, walk.out))
}

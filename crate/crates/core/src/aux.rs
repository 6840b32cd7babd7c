//! Auxiliary-space representation: two bosonic modes and a Verma module.
//!
//! States are lattice points `|j, k, l⟩` (boson ↑ occupation, boson ↓
//! occupation, Verma level) restricted to a finite box. Operators are stored as
//! sparse tables. In the default monomial basis (`b†|m⟩ = |m+1⟩`,
//! `b|m⟩ = m|m−1⟩`) every matrix element is an integer polynomial in `η = iε`;
//! the orthonormal basis differs by a diagonal similarity transform that leaves
//! vacuum expectation values untouched.
//!
//! The spin parameter `p` of the Verma module is tied to the coupling through
//! `p = 1/2 − 1/η`. It is never stored: only the polynomial composites
//! `η(2p − l) = η − 2 − ηl` and `η(1/2 − p + l) = 1 + ηl` appear.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::report::CheckReport;
use crate::scalar::{Coefficient, ExactScalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct AuxState {
    pub j: u32,
    pub k: u32,
    pub l: u32,
}

impl AuxState {
    pub const VACUUM: AuxState = AuxState { j: 0, k: 0, l: 0 };

    pub const fn new(j: u32, k: u32, l: u32) -> Self {
        AuxState { j, k, l }
    }

    pub fn max_coord(&self) -> u32 {
        self.j.max(self.k).max(self.l)
    }

    fn shifted(&self, dj: i32, dk: i32, dl: i32) -> Option<AuxState> {
        Some(AuxState {
            j: self.j.checked_add_signed(dj)?,
            k: self.k.checked_add_signed(dk)?,
            l: self.l.checked_add_signed(dl)?,
        })
    }
}

impl fmt::Display for AuxState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{},{},{}⟩", self.j, self.k, self.l)
    }
}

/// Per-axis truncation of the auxiliary lattice (inclusive bounds).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cutoff {
    pub j: u32,
    pub k: u32,
    pub l: u32,
}

impl Cutoff {
    pub const fn uniform(c: u32) -> Self {
        Cutoff { j: c, k: c, l: c }
    }

    /// Smallest cutoff at which contractions over `n` sites are exact: a
    /// closed walk of length `n` never strays further than `n/2` from the
    /// origin along any axis.
    pub fn threshold(n: usize) -> u32 {
        (n / 2) as u32
    }

    pub fn min(&self) -> u32 {
        self.j.min(self.k).min(self.l)
    }

    pub fn as_array(&self) -> [u32; 3] {
        [self.j, self.k, self.l]
    }

    pub fn contains(&self, s: &AuxState) -> bool {
        s.j <= self.j && s.k <= self.k && s.l <= self.l
    }

    /// States whose single-step images all stay inside the box.
    pub fn is_interior(&self, s: &AuxState) -> bool {
        s.j < self.j && s.k < self.k && s.l < self.l
    }

    pub fn states(&self) -> impl Iterator<Item = AuxState> + '_ {
        (0..=self.j).flat_map(move |j| {
            (0..=self.k).flat_map(move |k| (0..=self.l).map(move |l| AuxState::new(j, k, l)))
        })
    }

    pub fn len(&self) -> usize {
        ((self.j + 1) * (self.k + 1) * (self.l + 1)) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn check_exact_for(&self, n: usize) -> Result<()> {
        let needed = Cutoff::threshold(n);
        if self.min() < needed {
            return Err(Error::CutoffTooSmall { n, needed, got: self.min() });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    #[default]
    Monomial,
    Orthonormal,
}

/// Which highest weight the Verma module carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum VermaWeight {
    /// `p = 1/2 − 1/η`, the value the boundary equations require.
    #[default]
    Matched,
    /// `p = 1/2 + 1/η`. Only useful as a negative control.
    Mismatched,
}

impl VermaWeight {
    fn sign(self) -> i64 {
        match self {
            VermaWeight::Matched => 1,
            VermaWeight::Mismatched => -1,
        }
    }
}

/// Parameters of a representation build. In exact mode the values of
/// `epsilon` and `mu` are ignored: the coupling and fugacity stay formal.
/// `mu = None` means no chemical weight at all.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReprParams {
    pub epsilon: f64,
    pub mu: Option<f64>,
    pub cutoff: Cutoff,
    pub basis: Basis,
    pub verma: VermaWeight,
}

impl ReprParams {
    pub fn new(epsilon: f64, cutoff: u32) -> Self {
        ReprParams {
            epsilon,
            mu: None,
            cutoff: Cutoff::uniform(cutoff),
            basis: Basis::Monomial,
            verma: VermaWeight::Matched,
        }
    }

    /// Parameters for an exact (formal `ε`, `z`) build.
    pub fn formal(cutoff: u32) -> Self {
        ReprParams::new(1.0, cutoff)
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = Some(mu);
        self
    }

    /// Formal fugacity in exact mode.
    pub fn weighted(self) -> Self {
        self.with_mu(0.0)
    }

    pub fn with_basis(mut self, basis: Basis) -> Self {
        self.basis = basis;
        self
    }

    pub fn with_verma(mut self, verma: VermaWeight) -> Self {
        self.verma = verma;
        self
    }

    pub fn with_cutoff(mut self, cutoff: Cutoff) -> Self {
        self.cutoff = cutoff;
        self
    }
}

pub type AuxVector<C> = BTreeMap<AuxState, C>;

pub fn unit_vector<C: Coefficient>(s: AuxState) -> AuxVector<C> {
    let mut v = AuxVector::new();
    v.insert(s, C::one());
    v
}

pub(crate) fn add_into<K: Ord, C: Coefficient>(map: &mut BTreeMap<K, C>, key: K, value: C) {
    use std::collections::btree_map::Entry;
    if value.is_zero() {
        return;
    }
    match map.entry(key) {
        Entry::Vacant(e) => {
            e.insert(value);
        }
        Entry::Occupied(mut e) => {
            e.get_mut().accumulate(&value);
            if e.get().is_zero() {
                e.remove();
            }
        }
    }
}

/// `a − b` with zero entries dropped.
pub fn vector_difference<K: Ord + Clone, C: Coefficient>(
    a: &BTreeMap<K, C>,
    b: &BTreeMap<K, C>,
) -> BTreeMap<K, C> {
    let mut out = a.clone();
    for (key, v) in b {
        add_into(&mut out, key.clone(), v.negated());
    }
    out
}

/// Sparse operator on the truncated auxiliary lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct AuxOperator<C> {
    cutoff: Cutoff,
    /// source → [(target, ⟨target|A|source⟩)]
    columns: BTreeMap<AuxState, Vec<(AuxState, C)>>,
    /// target → [(source, ⟨target|A|source⟩)]
    rows: BTreeMap<AuxState, Vec<(AuxState, C)>>,
}

impl<C: Coefficient> AuxOperator<C> {
    /// Builds from `(target, source, value)` triples. Entries outside the box
    /// are dropped, duplicates are summed.
    pub fn from_entries<I>(cutoff: Cutoff, entries: I) -> Self
    where
        I: IntoIterator<Item = (AuxState, AuxState, C)>,
    {
        let mut table: BTreeMap<(AuxState, AuxState), C> = BTreeMap::new();
        for (t, s, v) in entries {
            if cutoff.contains(&t) && cutoff.contains(&s) {
                add_into(&mut table, (s, t), v);
            }
        }
        let mut columns: BTreeMap<AuxState, Vec<(AuxState, C)>> = BTreeMap::new();
        let mut rows: BTreeMap<AuxState, Vec<(AuxState, C)>> = BTreeMap::new();
        for ((s, t), v) in table {
            rows.entry(t).or_default().push((s, v.clone()));
            columns.entry(s).or_default().push((t, v));
        }
        AuxOperator { cutoff, columns, rows }
    }

    pub fn identity(cutoff: Cutoff) -> Self {
        AuxOperator::from_entries(cutoff, cutoff.states().map(|s| (s, s, C::one())))
    }

    pub fn cutoff(&self) -> Cutoff {
        self.cutoff
    }

    pub fn get(&self, target: &AuxState, source: &AuxState) -> C {
        self.columns
            .get(source)
            .and_then(|col| col.iter().find(|(t, _)| t == target))
            .map(|(_, v)| v.clone())
            .unwrap_or_else(C::zero)
    }

    /// `A|source⟩` as a list of `(target, value)`.
    pub fn column(&self, source: &AuxState) -> &[(AuxState, C)] {
        self.columns.get(source).map(Vec::as_slice).unwrap_or(&[])
    }

    /// `⟨target|A` as a list of `(source, value)`.
    pub fn row(&self, target: &AuxState) -> &[(AuxState, C)] {
        self.rows.get(target).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Entries as `(target, source, value)`, sorted by source then target.
    pub fn entries(&self) -> impl Iterator<Item = (AuxState, AuxState, &C)> {
        self.columns
            .iter()
            .flat_map(|(s, col)| col.iter().map(move |(t, v)| (*t, *s, v)))
    }

    pub fn nnz(&self) -> usize {
        self.columns.values().map(Vec::len).sum()
    }

    pub fn max_targets_per_source(&self) -> usize {
        self.columns.values().map(Vec::len).max().unwrap_or(0)
    }

    /// Ket action `A|v⟩`.
    pub fn apply(&self, v: &AuxVector<C>) -> AuxVector<C> {
        let mut out = AuxVector::new();
        for (s, c) in v {
            for (t, a) in self.column(s) {
                add_into(&mut out, *t, c.times(a));
            }
        }
        out
    }

    /// Bra action `⟨v|A`.
    pub fn apply_bra(&self, v: &AuxVector<C>) -> AuxVector<C> {
        let mut out = AuxVector::new();
        for (t, c) in v {
            for (s, a) in self.row(t) {
                add_into(&mut out, *s, c.times(a));
            }
        }
        out
    }

    pub fn map<D: Coefficient>(&self, mut f: impl FnMut(&C) -> D) -> AuxOperator<D> {
        AuxOperator::from_entries(self.cutoff, self.entries().map(|(t, s, v)| (t, s, f(v))))
    }

    pub fn try_map<D: Coefficient>(&self, mut f: impl FnMut(&C) -> Result<D>) -> Result<AuxOperator<D>> {
        let mut entries = Vec::with_capacity(self.nnz());
        for (t, s, v) in self.entries() {
            entries.push((t, s, f(v)?));
        }
        Ok(AuxOperator::from_entries(self.cutoff, entries))
    }

    pub fn conjugate(&self) -> Self {
        self.map(C::conjugate)
    }

    pub fn scaled(&self, w: &C) -> Self {
        self.map(|v| v.times(w))
    }

    /// Text dump, one line per entry: `j k l j' k' l' <value>` for
    /// `⟨j,k,l|A|j',k',l'⟩`.
    pub fn dump_text(&self) -> String {
        let mut out = String::new();
        let mut entries: Vec<_> = self.entries().collect();
        entries.sort_by_key(|(t, s, _)| (*t, *s));
        for (t, s, v) in entries {
            out.push_str(&format!("{} {} {} {} {} {} {}\n", t.j, t.k, t.l, s.j, s.k, s.l, v.to_text()));
        }
        out
    }

    pub fn dump_json(&self, basis: Basis) -> Value {
        let mut entries: Vec<_> = self.entries().collect();
        entries.sort_by_key(|(t, s, _)| (*t, *s));
        json!({
            "header": {
                "basis": basis,
                "cutoff": self.cutoff.as_array(),
                "exact": C::EXACT,
            },
            "entries": entries
                .into_iter()
                .map(|(t, s, v)| json!([t.j, t.k, t.l, s.j, s.k, s.l, v.to_json()]))
                .collect::<Vec<_>>(),
        })
    }
}

/// Names of the nine Lax components, in row-major matrix position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LaxName {
    LUp,
    TPlus,
    VPlus,
    TMinus,
    LZero,
    UPlus,
    VMinus,
    UMinus,
    LDown,
}

impl LaxName {
    pub const ALL: [LaxName; 9] = [
        LaxName::LUp,
        LaxName::TPlus,
        LaxName::VPlus,
        LaxName::TMinus,
        LaxName::LZero,
        LaxName::UPlus,
        LaxName::VMinus,
        LaxName::UMinus,
        LaxName::LDown,
    ];

    /// One-based matrix position `(i, j)` of `L^{ij}`.
    pub fn position(self) -> (usize, usize) {
        let idx = self as usize;
        (idx / 3 + 1, idx % 3 + 1)
    }

    pub fn at(i: usize, j: usize) -> LaxName {
        LaxName::ALL[(i - 1) * 3 + (j - 1)]
    }

    pub fn symbol(self) -> &'static str {
        match self {
            LaxName::LUp => "l↑",
            LaxName::TPlus => "t+",
            LaxName::VPlus => "v+",
            LaxName::TMinus => "t-",
            LaxName::LZero => "l0",
            LaxName::UPlus => "u+",
            LaxName::VMinus => "v-",
            LaxName::UMinus => "u-",
            LaxName::LDown => "l↓",
        }
    }
}

/// The nine auxiliary operators `L^{ij}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LaxComponents<C> {
    ops: Vec<AuxOperator<C>>,
    pub cutoff: Cutoff,
    pub basis: Basis,
    pub conjugated: bool,
    pub weighted: bool,
    /// Coupling the numeric entries were evaluated at (unused when exact).
    pub epsilon: f64,
}

impl<C: Coefficient> LaxComponents<C> {
    /// `L^{ij}` with one-based indices.
    pub fn get(&self, i: usize, j: usize) -> &AuxOperator<C> {
        &self.ops[(i - 1) * 3 + (j - 1)]
    }

    pub fn by_name(&self, name: LaxName) -> &AuxOperator<C> {
        &self.ops[name as usize]
    }

    /// `η` in this backend, conjugated if the components are.
    pub fn eta(&self) -> C {
        let eta = C::from_exact(&ExactScalar::eta(), self.epsilon, 0.0).expect("finite coupling");
        if self.conjugated {
            eta.conjugate()
        } else {
            eta
        }
    }

    fn map_ops(&self, f: impl Fn(usize, &AuxOperator<C>) -> AuxOperator<C>) -> Vec<AuxOperator<C>> {
        self.ops.iter().enumerate().map(|(idx, op)| f(idx, op)).collect()
    }
}

fn exact_entries(cutoff: Cutoff, eta_sign: i64, verma_sign: i64) -> Vec<Vec<(AuxState, AuxState, ExactScalar)>> {
    let eta = if eta_sign > 0 { ExactScalar::eta() } else { -&ExactScalar::eta() };
    let int = |c: i64| ExactScalar::integer(c);
    let eta_times = |c: i64| &eta * &int(c);
    let s = verma_sign;
    let mut tables: Vec<Vec<(AuxState, AuxState, ExactScalar)>> = vec![Vec::new(); 9];
    for src in cutoff.states() {
        let (j, k, l) = (src.j as i64, src.k as i64, src.l as i64);
        let mut push = |name: LaxName, dj: i32, dk: i32, dl: i32, v: ExactScalar| {
            if let Some(t) = src.shifted(dj, dk, dl) {
                tables[name as usize].push((t, src, v));
            }
        };
        // l↑ = η(b↑†b↑ + 1/2 − s^z), l↓ likewise, l⁰ = 1
        push(LaxName::LUp, 0, 0, 0, &int(s) + &eta_times(j + l));
        push(LaxName::LDown, 0, 0, 0, &int(s) + &eta_times(k + l));
        push(LaxName::LZero, 0, 0, 0, int(1));
        // t⁺ = b↑, t⁻ = η b↑†
        if j > 0 {
            push(LaxName::TPlus, -1, 0, 0, int(j));
        }
        push(LaxName::TMinus, 1, 0, 0, eta.clone());
        // u⁺ = η b↓, u⁻ = b↓†
        if k > 0 {
            push(LaxName::UPlus, 0, -1, 0, eta_times(k));
        }
        push(LaxName::UMinus, 0, 1, 0, int(1));
        // v⁺ = η(b↑b↓ + s⁺)
        if j > 0 && k > 0 {
            push(LaxName::VPlus, -1, -1, 0, eta_times(j * k));
        }
        if l > 0 {
            push(LaxName::VPlus, 0, 0, -1, eta_times(l));
        }
        // v⁻ = η(b↑†b↓† − s⁻), η s⁻|l⟩ = (η − 2 − ηl)|l+1⟩
        push(LaxName::VMinus, 1, 1, 0, eta.clone());
        push(LaxName::VMinus, 0, 0, 1, &int(2 * s) + &eta_times(l - 1));
    }
    tables
}

fn orthonormal_entries(
    cutoff: Cutoff,
    epsilon: f64,
    eta_sign: i64,
    verma_sign: i64,
) -> Vec<Vec<(AuxState, AuxState, Complex64)>> {
    let eta = Complex64::new(0.0, eta_sign as f64 * epsilon);
    let s = verma_sign as f64;
    let one = Complex64::new(1.0, 0.0);
    let mut tables: Vec<Vec<(AuxState, AuxState, Complex64)>> = vec![Vec::new(); 9];
    for src in cutoff.states() {
        let (j, k, l) = (src.j as f64, src.k as f64, src.l as f64);
        let mut push = |name: LaxName, dj: i32, dk: i32, dl: i32, v: Complex64| {
            if let Some(t) = src.shifted(dj, dk, dl) {
                tables[name as usize].push((t, src, v));
            }
        };
        push(LaxName::LUp, 0, 0, 0, s + eta * (j + l));
        push(LaxName::LDown, 0, 0, 0, s + eta * (k + l));
        push(LaxName::LZero, 0, 0, 0, one);
        if src.j > 0 {
            push(LaxName::TPlus, -1, 0, 0, one * j.sqrt());
        }
        push(LaxName::TMinus, 1, 0, 0, eta * (j + 1.0).sqrt());
        if src.k > 0 {
            push(LaxName::UPlus, 0, -1, 0, eta * k.sqrt());
        }
        push(LaxName::UMinus, 0, 1, 0, one * (k + 1.0).sqrt());
        if src.j > 0 && src.k > 0 {
            push(LaxName::VPlus, -1, -1, 0, eta * (j * k).sqrt());
        }
        if src.l > 0 {
            push(LaxName::VPlus, 0, 0, -1, eta * l);
        }
        push(LaxName::VMinus, 1, 1, 0, eta * ((j + 1.0) * (k + 1.0)).sqrt());
        push(LaxName::VMinus, 0, 0, 1, 2.0 * s + eta * (l - 1.0));
    }
    tables
}

fn build_signed<C: Coefficient>(params: &ReprParams, eta_sign: i64) -> Result<LaxComponents<C>> {
    let cutoff = params.cutoff;
    let ops = match params.basis {
        Basis::Monomial => exact_entries(cutoff, eta_sign, params.verma.sign())
            .into_iter()
            .map(|table| {
                let mut entries = Vec::with_capacity(table.len());
                for (t, s, v) in table {
                    entries.push((t, s, C::from_exact(&v, params.epsilon, 0.0)?));
                }
                Ok(AuxOperator::from_entries(cutoff, entries))
            })
            .collect::<Result<Vec<_>>>()?,
        Basis::Orthonormal => {
            if C::EXACT {
                return Err(Error::Unsupported(
                    "the orthonormal basis carries square roots and needs numeric mode".into(),
                ));
            }
            orthonormal_entries(cutoff, params.epsilon, eta_sign, params.verma.sign())
                .into_iter()
                .map(|table| {
                    AuxOperator::from_entries(
                        cutoff,
                        table.into_iter().map(|(t, s, v)| (t, s, C::from_complex(v).expect("numeric"))),
                    )
                })
                .collect()
        }
    };
    Ok(LaxComponents {
        ops,
        cutoff,
        basis: params.basis,
        conjugated: eta_sign < 0,
        weighted: false,
        epsilon: params.epsilon,
    })
}

/// Builds the nine Lax components of the explicit representation.
pub fn build_generators<C: Coefficient>(params: &ReprParams) -> Result<LaxComponents<C>> {
    if params.cutoff.min() < 1 {
        return Err(Error::InvalidArgument("cutoff must be at least 1".into()));
    }
    build_signed(params, 1)
}

/// [`build_generators`] followed by the chemical weight when `params.mu` is
/// set.
pub fn build_weighted<C: Coefficient>(params: &ReprParams) -> Result<LaxComponents<C>> {
    let lax = build_generators(params)?;
    match params.mu {
        None => Ok(lax),
        Some(mu) => apply_chemical_weight(&lax, &C::fugacity(mu)),
    }
}

/// Builds the conjugate components directly as the representation with
/// `η → −η` (and hence `p → p̄ = 1/2 + 1/η`). Must agree with
/// [`build_conjugate`] entry-wise.
pub fn build_conjugate_representation<C: Coefficient>(params: &ReprParams) -> Result<LaxComponents<C>> {
    if params.cutoff.min() < 1 {
        return Err(Error::InvalidArgument("cutoff must be at least 1".into()));
    }
    build_signed(params, -1)
}

/// Entry-wise complex conjugation. Applying it twice returns the input.
pub fn build_conjugate<C: Coefficient>(lax: &LaxComponents<C>) -> LaxComponents<C> {
    LaxComponents {
        ops: lax.map_ops(|_, op| op.conjugate()),
        conjugated: !lax.conjugated,
        ..lax.clone()
    }
}

/// Multiplies the second row (`t⁻`, `l⁰`, `u⁺`) by the fugacity `weight`.
pub fn apply_chemical_weight<C: Coefficient>(lax: &LaxComponents<C>, weight: &C) -> Result<LaxComponents<C>> {
    if lax.weighted {
        return Err(Error::InvalidArgument("Lax components are already weighted".into()));
    }
    Ok(LaxComponents {
        ops: lax.map_ops(|idx, op| if idx / 3 == 1 { op.scaled(weight) } else { op.clone() }),
        weighted: true,
        ..lax.clone()
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct DoubledState {
    pub left: AuxState,
    pub right: AuxState,
}

impl DoubledState {
    pub const VACUUM: DoubledState = DoubledState { left: AuxState::VACUUM, right: AuxState::VACUUM };

    pub fn new(left: AuxState, right: AuxState) -> Self {
        DoubledState { left, right }
    }

    pub fn max_coord(&self) -> u32 {
        self.left.max_coord().max(self.right.max_coord())
    }
}

impl fmt::Display for DoubledState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}⊗{}", self.left, self.right)
    }
}

pub type DoubledVector<C> = BTreeMap<DoubledState, C>;

pub fn doubled_vacuum<C: Coefficient>() -> DoubledVector<C> {
    let mut v = DoubledVector::new();
    v.insert(DoubledState::VACUUM, C::one());
    v
}

/// Two-leg Lax components `𝕃^{ij} = Σ_k L^{ik} ⊗ L̄^{jk}`.
///
/// The sum runs over the column index of both legs: the conjugate leg enters
/// transposed in the physical space.
#[derive(Clone, Debug)]
pub struct TwoLeg<C> {
    pub left: LaxComponents<C>,
    pub right: LaxComponents<C>,
}

/// Pairs a Lax operator with its conjugate.
pub fn build_two_leg<C: Coefficient>(lax: &LaxComponents<C>, conj: &LaxComponents<C>) -> Result<TwoLeg<C>> {
    if lax.cutoff != conj.cutoff {
        return Err(Error::CutoffMismatch { left: lax.cutoff.as_array(), right: conj.cutoff.as_array() });
    }
    if !conj.conjugated || lax.conjugated {
        return Err(Error::InvalidArgument("second leg must be the conjugated one".into()));
    }
    Ok(TwoLeg { left: lax.clone(), right: conj.clone() })
}

impl<C: Coefficient> TwoLeg<C> {
    /// Builds `L`, conjugates it and applies the fugacity to both legs when
    /// `params.mu` is set.
    pub fn from_params(params: &ReprParams) -> Result<Self> {
        let lax = build_generators::<C>(params)?;
        let conj = build_conjugate(&lax);
        match params.mu {
            None => build_two_leg(&lax, &conj),
            Some(mu) => {
                let weight = C::fugacity(mu);
                let lax = apply_chemical_weight(&lax, &weight)?;
                let conj = apply_chemical_weight(&conj, &weight.conjugate())?;
                build_two_leg(&lax, &conj)
            }
        }
    }

    pub fn cutoff(&self) -> Cutoff {
        self.left.cutoff
    }

    /// `𝕃^{ij}|v⟩⟩`.
    pub fn apply(&self, i: usize, j: usize, v: &DoubledVector<C>) -> DoubledVector<C> {
        let mut out = DoubledVector::new();
        for k in 1..=3 {
            let a = self.left.get(i, k);
            let b = self.right.get(j, k);
            for (s, c) in v {
                let right_col = b.column(&s.right);
                if right_col.is_empty() {
                    continue;
                }
                for (tl, x) in a.column(&s.left) {
                    let cx = c.times(x);
                    for (tr, y) in right_col {
                        add_into(&mut out, DoubledState::new(*tl, *tr), cx.times(y));
                    }
                }
            }
        }
        out
    }

    /// `⟨⟨v|𝕃^{ij}`.
    pub fn apply_bra(&self, i: usize, j: usize, v: &DoubledVector<C>) -> DoubledVector<C> {
        let mut out = DoubledVector::new();
        for k in 1..=3 {
            let a = self.left.get(i, k);
            let b = self.right.get(j, k);
            for (t, c) in v {
                let right_row = b.row(&t.right);
                if right_row.is_empty() {
                    continue;
                }
                for (sl, x) in a.row(&t.left) {
                    let cx = c.times(x);
                    for (sr, y) in right_row {
                        add_into(&mut out, DoubledState::new(*sl, *sr), cx.times(y));
                    }
                }
            }
        }
        out
    }

    /// Materialized matrix element table of `𝕃^{ij}` with sources restricted
    /// to `sources`, keyed by `(target, source)`.
    pub fn component_table(
        &self,
        i: usize,
        j: usize,
        sources: impl IntoIterator<Item = DoubledState>,
    ) -> BTreeMap<(DoubledState, DoubledState), C> {
        let mut table = BTreeMap::new();
        for s in sources {
            let mut unit = DoubledVector::new();
            unit.insert(s, C::one());
            for (t, v) in self.apply(i, j, &unit) {
                table.insert((t, s), v);
            }
        }
        table
    }
}

/// A linear combination of Lax components with integer coefficients, e.g.
/// `l⁺ = l↑ + l↓`.
#[derive(Clone, Debug)]
pub struct Combo(pub Vec<(i64, LaxName)>);

impl Combo {
    pub fn single(name: LaxName) -> Self {
        Combo(vec![(1, name)])
    }

    pub fn zero() -> Self {
        Combo(Vec::new())
    }

    fn apply<C: Coefficient>(&self, lax: &LaxComponents<C>, v: &AuxVector<C>) -> AuxVector<C> {
        let mut out = AuxVector::new();
        for (c, name) in &self.0 {
            let w = C::from_gauss(*c, 0);
            for (s, x) in lax.by_name(*name).apply(v) {
                add_into(&mut out, s, x.times(&w));
            }
        }
        out
    }

    fn label(&self) -> String {
        if self.0.is_empty() {
            return "0".into();
        }
        self.0
            .iter()
            .map(|(c, n)| match c {
                1 => n.symbol().to_string(),
                -1 => format!("-{}", n.symbol()),
                _ => format!("{c}{}", n.symbol()),
            })
            .collect::<Vec<_>>()
            .join("+")
    }
}

/// `[a, b] = η^{eta_power}·(rhs)` on interior states.
#[derive(Clone, Debug)]
pub struct Relation {
    pub a: Combo,
    pub b: Combo,
    pub rhs: Combo,
}

impl Relation {
    pub fn new(a: Combo, b: Combo, rhs: Combo) -> Self {
        Relation { a, b, rhs }
    }

    pub fn label(&self) -> String {
        format!("[{},{}] = η({})", self.a.label(), self.b.label(), self.rhs.label())
    }
}

/// Checks `[A, B] = η·R` on every interior source state.
pub fn check_relation<C: Coefficient>(lax: &LaxComponents<C>, rel: &Relation, tol: f64) -> CheckReport {
    let mut report = CheckReport::new(rel.label());
    let eta = lax.eta();
    for s in lax.cutoff.states().filter(|s| lax.cutoff.is_interior(s)) {
        let e = unit_vector::<C>(s);
        let ab = rel.a.apply(lax, &rel.b.apply(lax, &e));
        let ba = rel.b.apply(lax, &rel.a.apply(lax, &e));
        let lhs = vector_difference(&ab, &ba);
        let rhs: AuxVector<C> = rel.rhs.apply(lax, &e).into_iter().map(|(t, v)| (t, v.times(&eta))).collect();
        let diff = vector_difference(&lhs, &rhs);
        if diff.is_empty() {
            report.record(0.0, tol, String::new);
        }
        for (t, v) in diff {
            report.record(v.residual(), tol, || format!("source {s}, target {t}: {}", v.to_text()));
        }
    }
    report
}

fn c(name: LaxName) -> Combo {
    Combo::single(name)
}

fn lin(terms: &[(i64, LaxName)]) -> Combo {
    Combo(terms.to_vec())
}

/// The complete list of defining commutation relations.
pub fn lie_algebra_relations() -> Vec<Relation> {
    use LaxName::*;
    let z = Combo::zero;
    let mut rels = vec![
        // vanishing brackets
        Relation::new(c(UPlus), c(TPlus), z()),
        Relation::new(c(UPlus), c(TMinus), z()),
        Relation::new(c(UMinus), c(TPlus), z()),
        Relation::new(c(UMinus), c(TMinus), z()),
        Relation::new(c(UPlus), c(VPlus), z()),
        Relation::new(c(UMinus), c(VMinus), z()),
        Relation::new(c(TPlus), c(VPlus), z()),
        Relation::new(c(TMinus), c(VMinus), z()),
        Relation::new(c(LUp), c(UPlus), z()),
        Relation::new(c(LUp), c(UMinus), z()),
        Relation::new(c(LDown), c(TPlus), z()),
        Relation::new(c(LDown), c(TMinus), z()),
        Relation::new(c(LUp), c(LDown), z()),
        // Cartan-type brackets
        Relation::new(c(LUp), c(TPlus), lin(&[(-1, TPlus)])),
        Relation::new(c(LUp), c(TMinus), lin(&[(1, TMinus)])),
        Relation::new(c(LDown), c(UPlus), lin(&[(-1, UPlus)])),
        Relation::new(c(LDown), c(UMinus), lin(&[(1, UMinus)])),
        // mixed
        Relation::new(c(UPlus), c(VMinus), lin(&[(1, TMinus)])),
        Relation::new(c(UMinus), c(VPlus), lin(&[(-1, TPlus)])),
        Relation::new(c(TPlus), c(VMinus), lin(&[(1, UMinus)])),
        Relation::new(c(TMinus), c(VPlus), lin(&[(-1, UPlus)])),
        Relation::new(c(LUp), c(VPlus), lin(&[(-1, VPlus)])),
        Relation::new(c(LUp), c(VMinus), lin(&[(1, VMinus)])),
        Relation::new(c(LDown), c(VPlus), lin(&[(-1, VPlus)])),
        Relation::new(c(LDown), c(VMinus), lin(&[(1, VMinus)])),
        Relation::new(c(VPlus), c(VMinus), lin(&[(1, LUp), (1, LDown)])),
        // Heisenberg pairs
        Relation::new(c(TPlus), c(TMinus), lin(&[(1, LZero)])),
        Relation::new(c(UPlus), c(UMinus), lin(&[(1, LZero)])),
    ];
    // l⁰ is central
    for x in [LUp, LDown, UPlus, UMinus, VPlus, VMinus, TPlus, TMinus] {
        rels.push(Relation::new(c(x), c(LZero), z()));
    }
    rels
}

/// Evaluates every defining relation on the interior states.
pub fn check_lie_algebra<C: Coefficient>(lax: &LaxComponents<C>, tol: f64) -> Vec<CheckReport> {
    use rayon::prelude::*;
    lie_algebra_relations().par_iter().map(|rel| check_relation(lax, rel, tol)).collect()
}

/// Brackets realizing the semidirect split: `{v⁺, v⁻, l⁺}` closes into an
/// `sl₂` copy and `{t±, u±, l⁻, l⁰}` is an ideal of the whole algebra.
pub fn levi_relations() -> Vec<Relation> {
    use LaxName::*;
    let lp = || lin(&[(1, LUp), (1, LDown)]);
    let lm = || lin(&[(1, LUp), (-1, LDown)]);
    let z = Combo::zero;
    let mut rels = vec![
        // sl₂: [v⁺, v⁻] = η l⁺, [l⁺, v±] = ∓2η v±
        Relation::new(c(VPlus), c(VMinus), lp()),
        Relation::new(lp(), c(VPlus), lin(&[(-2, VPlus)])),
        Relation::new(lp(), c(VMinus), lin(&[(2, VMinus)])),
    ];
    // [g, r] ⊆ r
    let radical: Vec<(&str, Combo)> = vec![
        ("t+", c(TPlus)),
        ("t-", c(TMinus)),
        ("u+", c(UPlus)),
        ("u-", c(UMinus)),
        ("l-", lm()),
        ("l0", c(LZero)),
    ];
    let table: Vec<(Combo, [Combo; 6])> = vec![
        (c(TPlus), [z(), lin(&[(1, LZero)]), z(), z(), lin(&[(1, TPlus)]), z()]),
        (c(TMinus), [lin(&[(-1, LZero)]), z(), z(), z(), lin(&[(-1, TMinus)]), z()]),
        (c(UPlus), [z(), z(), z(), lin(&[(1, LZero)]), lin(&[(-1, UPlus)]), z()]),
        (c(UMinus), [z(), z(), lin(&[(-1, LZero)]), z(), lin(&[(1, UMinus)]), z()]),
        (c(VPlus), [z(), lin(&[(1, UPlus)]), z(), lin(&[(1, TPlus)]), z(), z()]),
        (c(VMinus), [lin(&[(-1, UMinus)]), z(), lin(&[(-1, TMinus)]), z(), z(), z()]),
        (lp(), [lin(&[(-1, TPlus)]), lin(&[(1, TMinus)]), lin(&[(-1, UPlus)]), lin(&[(1, UMinus)]), z(), z()]),
        (lm(), [lin(&[(-1, TPlus)]), lin(&[(1, TMinus)]), lin(&[(1, UPlus)]), lin(&[(-1, UMinus)]), z(), z()]),
        (c(LZero), [z(), z(), z(), z(), z(), z()]),
    ];
    for (x, images) in table {
        for ((_, y), rhs) in radical.iter().zip(images) {
            rels.push(Relation::new(x.clone(), y.clone(), rhs));
        }
    }
    rels
}

pub fn check_levi_structure<C: Coefficient>(lax: &LaxComponents<C>, tol: f64) -> Vec<CheckReport> {
    levi_relations().iter().map(|rel| check_relation(lax, rel, tol)).collect()
}

/// Raw bosonic operators `(b↑, b↑†, b↓, b↓†)` in the monomial basis.
pub fn boson_operators<C: Coefficient>(cutoff: Cutoff) -> [AuxOperator<C>; 4] {
    let build = |f: &dyn Fn(AuxState) -> Option<(AuxState, i64)>| {
        AuxOperator::from_entries(
            cutoff,
            cutoff.states().filter_map(|s| f(s).map(|(t, v)| (t, s, C::from_gauss(v, 0)))),
        )
    };
    [
        build(&|s| (s.j > 0).then(|| (AuxState::new(s.j - 1, s.k, s.l), s.j as i64))),
        build(&|s| Some((AuxState::new(s.j + 1, s.k, s.l), 1))),
        build(&|s| (s.k > 0).then(|| (AuxState::new(s.j, s.k - 1, s.l), s.k as i64))),
        build(&|s| Some((AuxState::new(s.j, s.k + 1, s.l), 1))),
    ]
}

/// `[b_σ, b†_σ′] = δ_{σσ′}` and `[b_σ, b_σ′] = 0` on interior states.
pub fn check_weyl_heisenberg<C: Coefficient>(cutoff: Cutoff, tol: f64) -> Vec<CheckReport> {
    let ops = boson_operators::<C>(cutoff);
    let names = ["b↑", "b↑†", "b↓", "b↓†"];
    // (a, b, expected scalar)
    let pairs = [(0, 1, 1), (2, 3, 1), (0, 3, 0), (2, 1, 0), (0, 2, 0), (1, 3, 0)];
    pairs
        .iter()
        .map(|&(a, b, expected)| {
            let mut report = CheckReport::new(format!("[{},{}] = {expected}", names[a], names[b]));
            for s in cutoff.states().filter(|s| cutoff.is_interior(s)) {
                let e = unit_vector::<C>(s);
                let lhs = vector_difference(&ops[a].apply(&ops[b].apply(&e)), &ops[b].apply(&ops[a].apply(&e)));
                let rhs: AuxVector<C> = if expected == 0 { AuxVector::new() } else { e.clone() };
                let diff = vector_difference(&lhs, &rhs);
                let r = diff.values().map(Coefficient::residual).fold(0.0, f64::max);
                report.record(r, tol, || format!("source {s}"));
            }
            report
        })
        .collect()
}

fn compare_vectors<C: Coefficient>(
    report: &mut CheckReport,
    got: &AuxVector<C>,
    expected: &AuxVector<C>,
    tol: f64,
    what: &str,
) {
    let diff = vector_difference(got, expected);
    let r = diff.values().map(Coefficient::residual).fold(0.0, f64::max);
    report.record(r, tol, || {
        let detail = diff.iter().next().map(|(s, v)| format!(" at {s}: {}", v.to_text())).unwrap_or_default();
        format!("{what}{detail}")
    });
}

/// Vacuum row/column actions and the highest-weight conditions.
pub fn check_vacuum_conditions<C: Coefficient>(lax: &LaxComponents<C>, tol: f64) -> Vec<CheckReport> {
    use LaxName::*;
    let eta = lax.eta();
    let one = C::one();
    let two = C::from_gauss(2, 0);
    let vac = unit_vector::<C>(AuxState::VACUUM);
    let vec_of = |terms: &[(AuxState, C)]| -> AuxVector<C> {
        let mut v = AuxVector::new();
        for (s, c) in terms {
            add_into(&mut v, *s, c.clone());
        }
        v
    };
    let s100 = AuxState::new(1, 0, 0);
    let s010 = AuxState::new(0, 1, 0);
    let s110 = AuxState::new(1, 1, 0);
    let s001 = AuxState::new(0, 0, 1);

    let mut reports = Vec::new();

    let mut r = CheckReport::new("l↑|vac⟩ = l⁰|vac⟩ = l↓|vac⟩ = |vac⟩");
    for n in [LUp, LZero, LDown] {
        compare_vectors(&mut r, &lax.by_name(n).apply(&vac), &vac, tol, n.symbol());
    }
    reports.push(r);

    let mut r = CheckReport::new("⟨vac|l↑ = ⟨vac|l⁰ = ⟨vac|l↓ = ⟨vac|");
    for n in [LUp, LZero, LDown] {
        compare_vectors(&mut r, &lax.by_name(n).apply_bra(&vac), &vac, tol, n.symbol());
    }
    reports.push(r);

    let mut r = CheckReport::new("t⁺|vac⟩ = u⁺|vac⟩ = v⁺|vac⟩ = 0");
    for n in [TPlus, UPlus, VPlus] {
        compare_vectors(&mut r, &lax.by_name(n).apply(&vac), &AuxVector::new(), tol, n.symbol());
    }
    reports.push(r);

    let mut r = CheckReport::new("⟨vac|t⁻ = ⟨vac|u⁻ = ⟨vac|v⁻ = 0");
    for n in [TMinus, UMinus, VMinus] {
        compare_vectors(&mut r, &lax.by_name(n).apply_bra(&vac), &AuxVector::new(), tol, n.symbol());
    }
    reports.push(r);

    // L|vac⟩ column by column
    let ket_expected: [[AuxVector<C>; 3]; 3] = [
        [vac.clone(), AuxVector::new(), AuxVector::new()],
        [vec_of(&[(s100, eta.clone())]), vac.clone(), AuxVector::new()],
        [
            vec_of(&[(s110, eta.clone()), (s001, eta.negated()), (s001, two.clone())]),
            vec_of(&[(s010, one.clone())]),
            vac.clone(),
        ],
    ];
    let mut r = CheckReport::new("L|vac⟩ matrix");
    for i in 1..=3 {
        for j in 1..=3 {
            let got = lax.get(i, j).apply(&vac);
            compare_vectors(&mut r, &got, &ket_expected[i - 1][j - 1], tol, &format!("L^{i}{j}|vac⟩"));
        }
    }
    reports.push(r);

    let bra_expected: [[AuxVector<C>; 3]; 3] = [
        [vac.clone(), vec_of(&[(s100, one.clone())]), vec_of(&[(s110, eta.clone()), (s001, eta.clone())])],
        [AuxVector::new(), vac.clone(), vec_of(&[(s010, eta.clone())])],
        [AuxVector::new(), AuxVector::new(), vac.clone()],
    ];
    let mut r = CheckReport::new("⟨vac|L matrix");
    for i in 1..=3 {
        for j in 1..=3 {
            let got = lax.get(i, j).apply_bra(&vac);
            compare_vectors(&mut r, &got, &bra_expected[i - 1][j - 1], tol, &format!("⟨vac|L^{i}{j}"));
        }
    }
    reports.push(r);

    reports
}

//! System parameters, 1-indexed cyclic arithmetic and the index-set
//! vocabulary (subfile-index sets, mini-subfile ids, position sets).

use std::collections::HashMap;
use std::fmt;

use num_traits::{Signed, ToPrimitive};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{format_rational, integer};
use crate::Rational;

/// Largest supported user count; user sets are 64-bit masks.
pub const MAX_USERS: usize = 64;

/// A set of 1-based indices in `[1, 64]`, stored as a bitmask.
///
/// Used for user sets, subfile-index sets, mini-subfile-index sets and
/// position sets alike. Iteration is ascending.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct IndexSet(u64);

impl IndexSet {
    pub const EMPTY: IndexSet = IndexSet(0);

    pub fn from_bits(bits: u64) -> Self {
        IndexSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn singleton(index: usize) -> Self {
        IndexSet(bit(index))
    }

    /// `{1, ..., n}`.
    pub fn prefix(n: usize) -> Self {
        if n >= 64 {
            IndexSet(u64::MAX)
        } else {
            IndexSet((1u64 << n) - 1)
        }
    }

    pub fn contains(self, index: usize) -> bool {
        (1..=64).contains(&index) && self.0 & bit(index) != 0
    }

    pub fn insert(&mut self, index: usize) {
        self.0 |= bit(index);
    }

    pub fn remove(&mut self, index: usize) {
        self.0 &= !bit(index);
    }

    pub fn with(self, index: usize) -> Self {
        IndexSet(self.0 | bit(index))
    }

    pub fn without(self, index: usize) -> Self {
        IndexSet(self.0 & !bit(index))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        IndexSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        IndexSet(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        IndexSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: Self) -> bool {
        self.0 & other.0 == 0
    }

    pub fn iter(self) -> IndexSetIter {
        IndexSetIter(self.0)
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }
}

fn bit(index: usize) -> u64 {
    assert!(
        (1..=MAX_USERS).contains(&index),
        "index {index} outside [1, {MAX_USERS}]"
    );
    1u64 << (index - 1)
}

pub struct IndexSetIter(u64);

impl Iterator for IndexSetIter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let low = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(low + 1)
    }
}

impl IntoIterator for IndexSet {
    type Item = usize;
    type IntoIter = IndexSetIter;

    fn into_iter(self) -> IndexSetIter {
        self.iter()
    }
}

impl FromIterator<usize> for IndexSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut set = IndexSet::EMPTY;
        for i in iter {
            set.insert(i);
        }
        set
    }
}

/// Comma-joined ascending indices; empty set renders as the empty string.
impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for i in self.iter() {
            if !first {
                f.write_str(",")?;
            }
            write!(f, "{i}")?;
            first = false;
        }
        Ok(())
    }
}

impl fmt::Debug for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{self}}}")
    }
}

impl Serialize for IndexSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

/// A residue in `[1, K]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CyclicIndex(usize);

impl CyclicIndex {
    pub fn get(self) -> usize {
        self.0
    }
}

impl fmt::Display for CyclicIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `((a - 1) mod K) + 1`, so labels stay in `[1, K]`.
pub fn cyc_reduce(a: i64, modulus: usize) -> CyclicIndex {
    assert!(modulus >= 1, "modulus must be positive");
    CyclicIndex(((a - 1).rem_euclid(modulus as i64) + 1) as usize)
}

/// A `(K, L, M_a, M_p, N)` system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemParams {
    users: usize,
    access_degree: usize,
    access_memory: Rational,
    private_memory: Rational,
    files: usize,
}

/// Integral replication factors `(gamma_a, gamma_p)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct IntegralPoint {
    pub gamma_a: usize,
    pub gamma_p: usize,
}

/// Which part of the integral parameter space a system falls into.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// `gamma_a = 0`: no access memory, the scheme is the dedicated-cache one.
    Dedicated,
    /// `gamma_a L + gamma_p = K`: every user already holds every file.
    FullCoverage,
    /// `1 <= gamma_a`, `gamma_p < gamma_a L`, `gamma_a L + gamma_p < K`.
    Characterized,
    /// `gamma_p >= gamma_a L` with `gamma_a >= 1`; delivery runs only when
    /// explicitly allowed and carries no rate formula.
    Uncharacterized,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Dedicated => "dedicated",
            Regime::FullCoverage => "full-coverage",
            Regime::Characterized => "characterized",
            Regime::Uncharacterized => "uncharacterized",
        }
    }
}

impl SystemParams {
    pub fn new(
        users: usize,
        access_degree: usize,
        access_memory: Rational,
        private_memory: Rational,
        files: usize,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if users == 0 {
            return bad("K must be at least 1".into());
        }
        if users > MAX_USERS {
            return bad(format!("K = {users} exceeds the supported maximum {MAX_USERS}"));
        }
        if access_degree == 0 {
            return bad("L must be at least 1".into());
        }
        if access_degree > users {
            return bad(format!("L = {access_degree} exceeds K = {users}"));
        }
        if files < users {
            return bad(format!("N = {files} must be at least K = {users}"));
        }
        let n = integer(files as i128);
        for (name, m) in [("M_a", &access_memory), ("M_p", &private_memory)] {
            if m.is_negative() {
                return bad(format!("{name} = {} must be non-negative", format_rational(m)));
            }
            if *m > n {
                return bad(format!(
                    "{name} = {} exceeds N = {files}",
                    format_rational(m)
                ));
            }
        }
        Ok(Self {
            users,
            access_degree,
            access_memory,
            private_memory,
            files,
        })
    }

    /// Builds a system from replication factors: `M = N gamma / K`.
    pub fn from_gammas(
        users: usize,
        access_degree: usize,
        gamma_a: usize,
        gamma_p: usize,
        files: usize,
    ) -> Result<Self> {
        let per = |g: usize| Rational::new((files * g).into(), users.max(1).into());
        Self::new(users, access_degree, per(gamma_a), per(gamma_p), files)
    }

    pub fn k(&self) -> usize {
        self.users
    }

    pub fn l(&self) -> usize {
        self.access_degree
    }

    pub fn n(&self) -> usize {
        self.files
    }

    pub fn ma(&self) -> &Rational {
        &self.access_memory
    }

    pub fn mp(&self) -> &Rational {
        &self.private_memory
    }

    pub fn gamma_a(&self) -> Rational {
        &self.access_memory * integer(self.users as i128) / integer(self.files as i128)
    }

    pub fn gamma_p(&self) -> Rational {
        &self.private_memory * integer(self.users as i128) / integer(self.files as i128)
    }

    /// Memory reachable by one user, `M_a L + M_p`.
    pub fn user_memory(&self) -> Rational {
        &self.access_memory * integer(self.access_degree as i128) + &self.private_memory
    }

    pub fn integral(&self) -> Option<IntegralPoint> {
        let (ga, gp) = (self.gamma_a(), self.gamma_p());
        if ga.is_integer() && gp.is_integer() {
            Some(IntegralPoint {
                gamma_a: ga.to_integer().to_usize()?,
                gamma_p: gp.to_integer().to_usize()?,
            })
        } else {
            None
        }
    }

    pub fn require_integral(&self) -> Result<IntegralPoint> {
        self.integral().ok_or_else(|| Error::NonIntegral {
            gamma_a: self.gamma_a(),
            gamma_p: self.gamma_p(),
        })
    }

    /// Validates that the placement is constructible and classifies the
    /// integral point.
    pub fn regime(&self) -> Result<(IntegralPoint, Regime)> {
        let point = self.require_integral()?;
        let k = self.users;
        let span = point.gamma_a * self.access_degree;
        if point.gamma_a == 0 {
            if point.gamma_p > k {
                return Err(Error::InvalidParams(format!(
                    "gamma_p = {} exceeds K = {k}",
                    point.gamma_p
                )));
            }
            return Ok((point, Regime::Dedicated));
        }
        if span > k {
            return Err(Error::InvalidParams(format!(
                "gamma_a L = {span} exceeds K = {k}"
            )));
        }
        if span + point.gamma_p > k {
            return Err(Error::InvalidParams(format!(
                "gamma_p = {} exceeds K - gamma_a L = {}",
                point.gamma_p,
                k - span
            )));
        }
        let regime = if span + point.gamma_p == k {
            Regime::FullCoverage
        } else if point.gamma_p < span {
            Regime::Characterized
        } else {
            Regime::Uncharacterized
        };
        Ok((point, regime))
    }
}

impl fmt::Display for SystemParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {}, {}, {})",
            self.users,
            self.access_degree,
            format_rational(&self.access_memory),
            format_rational(&self.private_memory),
            self.files
        )
    }
}

impl IntegralPoint {
    /// `gamma_a L`, the size of every subfile-index set.
    pub fn span(&self, access_degree: usize) -> usize {
        self.gamma_a * access_degree
    }
}

/// A set of `span` cyclically consecutive users `<[j - span + 1, j]>_K`,
/// identified by `j`, the index of the subfile before re-indexing.
///
/// With no access memory the only subfile-index set is the empty set, with
/// index 0.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubfileIndexSet {
    index: usize,
    members: IndexSet,
}

impl SubfileIndexSet {
    pub fn new(index: usize, span: usize, users: usize) -> Self {
        if span == 0 {
            return Self::empty();
        }
        assert!((1..=users).contains(&index), "subfile index {index} outside [1, {users}]");
        let start = index as i64 - span as i64 + 1;
        let members = (0..span as i64)
            .map(|o| cyc_reduce(start + o, users).get())
            .collect();
        Self { index, members }
    }

    pub fn empty() -> Self {
        Self {
            index: 0,
            members: IndexSet::EMPTY,
        }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn members(&self) -> IndexSet {
        self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, user: usize) -> bool {
        self.members.contains(user)
    }
}

impl fmt::Display for SubfileIndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.members.fmt(f)
    }
}

impl fmt::Debug for SubfileIndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S{}{{{}}}", self.index, self.members)
    }
}

impl Serialize for SubfileIndexSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.members.serialize(serializer)
    }
}

/// True iff `set` is `<[j - span + 1, j]>_K` for some `j` in `[K]`.
pub fn is_subfile_index_set(set: IndexSet, span: usize, users: usize) -> bool {
    if set.len() != span {
        return false;
    }
    if span == 0 || span >= users {
        return true;
    }
    // A cyclic run has exactly one member whose successor is missing.
    set.iter()
        .filter(|&i| !set.contains(cyc_reduce(i as i64 + 1, users).get()))
        .count()
        == 1
}

/// The `K` subfile-index sets of a ring, with mask lookup.
#[derive(Clone, Debug)]
pub struct RingTopology {
    users: usize,
    span: usize,
    sets: Vec<SubfileIndexSet>,
    by_members: HashMap<IndexSet, SubfileIndexSet>,
}

impl RingTopology {
    pub fn new(users: usize, span: usize) -> Self {
        assert!((1..=MAX_USERS).contains(&users));
        assert!(span <= users, "span {span} exceeds K = {users}");
        let sets: Vec<_> = if span == 0 {
            vec![SubfileIndexSet::empty()]
        } else {
            (1..=users).map(|j| SubfileIndexSet::new(j, span, users)).collect()
        };
        let mut by_members = HashMap::with_capacity(sets.len());
        for s in &sets {
            by_members.entry(s.members()).or_insert(*s);
        }
        Self {
            users,
            span,
            sets,
            by_members,
        }
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn span(&self) -> usize {
        self.span
    }

    /// All subfile-index sets in ascending index order.
    pub fn sets(&self) -> &[SubfileIndexSet] {
        &self.sets
    }

    /// The set that re-indexes subfile `index`.
    pub fn set(&self, index: usize) -> SubfileIndexSet {
        if self.span == 0 {
            self.sets[0]
        } else {
            self.sets[index - 1]
        }
    }

    pub fn find(&self, members: IndexSet) -> Option<SubfileIndexSet> {
        self.by_members.get(&members).copied()
    }

    pub fn is_subfile_index_set(&self, members: IndexSet) -> bool {
        self.by_members.contains_key(&members)
    }

    /// Distinct subfile-index sets contained in `union`.
    pub fn sets_within(&self, union: IndexSet) -> Vec<SubfileIndexSet> {
        let mut seen = Vec::new();
        for s in &self.sets {
            if s.members().is_subset(union) && !seen.iter().any(|t: &SubfileIndexSet| t.members() == s.members()) {
                seen.push(*s);
            }
        }
        seen
    }

    pub fn all_users(&self) -> IndexSet {
        IndexSet::prefix(self.users)
    }
}

/// `W_{n, S, T}`: the slice of subfile `(n, S)` cached privately by the
/// users in `T`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MiniSubfileId {
    pub file: usize,
    pub subfile: SubfileIndexSet,
    pub cached_by: IndexSet,
}

impl MiniSubfileId {
    pub fn new(file: usize, subfile: SubfileIndexSet, cached_by: IndexSet) -> Result<Self> {
        if !subfile.members().is_disjoint(cached_by) {
            return Err(Error::InvalidMiniSubfile(format!(
                "T = {{{cached_by}}} overlaps S = {{{subfile}}}"
            )));
        }
        Ok(Self {
            file,
            subfile,
            cached_by,
        })
    }

    /// The union set `{u} ∪ S ∪ T` for a requesting user.
    pub fn union_with(&self, user: usize) -> IndexSet {
        self.subfile.members().union(self.cached_by).with(user)
    }
}

/// `n:S:T` with `S` and `T` as sorted comma-joined indices.
impl fmt::Display for MiniSubfileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.subfile, self.cached_by)
    }
}

impl fmt::Debug for MiniSubfileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "W[{self}]")
    }
}

/// Positions of `u`, `S` and `T` inside the sorted union set `I`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PositionSets {
    union: Vec<usize>,
    pub user: IndexSet,
    pub subfile: IndexSet,
    pub cached: IndexSet,
}

impl PositionSets {
    /// The sorted union set `I`.
    pub fn union(&self) -> &[usize] {
        &self.union
    }

    pub fn union_set(&self) -> IndexSet {
        self.union.iter().copied().collect()
    }

    /// `|I|`.
    pub fn size(&self) -> usize {
        self.union.len()
    }

    /// `I(P)`: the elements of `I` at the given positions.
    pub fn elements(&self, positions: IndexSet) -> IndexSet {
        positions.iter().map(|p| self.union[p - 1]).collect()
    }

    pub fn element(&self, position: usize) -> usize {
        self.union[position - 1]
    }

    /// Positions shifted by `j`, as `(user, subfile, cached)`.
    pub fn shifted(&self, j: i64) -> (IndexSet, IndexSet, IndexSet) {
        let m = self.size();
        (
            shift_positions(self.user, j, m),
            shift_positions(self.subfile, j, m),
            shift_positions(self.cached, j, m),
        )
    }
}

pub fn position_sets(user: usize, subfile: IndexSet, cached: IndexSet) -> Result<PositionSets> {
    if subfile.contains(user) || cached.contains(user) || !subfile.is_disjoint(cached) {
        return Err(Error::InvalidMiniSubfile(format!(
            "user {user}, S = {{{subfile}}} and T = {{{cached}}} must be pairwise disjoint"
        )));
    }
    let union: Vec<usize> = subfile.union(cached).with(user).iter().collect();
    let mut positions = (IndexSet::EMPTY, IndexSet::EMPTY, IndexSet::EMPTY);
    for (p, &e) in union.iter().enumerate() {
        let slot = if e == user {
            &mut positions.0
        } else if subfile.contains(e) {
            &mut positions.1
        } else {
            &mut positions.2
        };
        slot.insert(p + 1);
    }
    Ok(PositionSets {
        union,
        user: positions.0,
        subfile: positions.1,
        cached: positions.2,
    })
}

/// Cyclic shift of positions within `[1, m]`: `p -> <p + j>_m`.
pub fn shift_positions(positions: IndexSet, j: i64, m: usize) -> IndexSet {
    positions
        .iter()
        .map(|p| cyc_reduce(p as i64 + j, m).get())
        .collect()
}

/// Helper for tests and callers building sets from literals.
pub fn set_of(items: &[usize]) -> IndexSet {
    items.iter().copied().collect()
}

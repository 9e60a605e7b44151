//! XOR delivery: for every demanded mini-subfile the server picks the union
//! set `I = {u} ∪ S ∪ T` and, depending on how many subfile-index sets `I`
//! contains, emits one of three kinds of coded transmission.
//!
//! * general case: rotate the positions of `(u, S, T)` inside `I` and XOR
//!   every rotation that lands `S` on another subfile-index set;
//! * special case 1: `S` is the only subfile-index set in `I`, so the
//!   requester swaps places with each member of `T`;
//! * special case 2: `I` splits into `S` and `{u} ∪ T`, and both halves get
//!   the special-case-1 treatment in one transmission.

use std::collections::{HashMap, HashSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{position_sets, IndexSet, MiniSubfileId, Regime, RingTopology, SubfileIndexSet};
use crate::placement::CacheLayout;
use crate::scalar::{format_rational, ratio};
use crate::Rational;

/// `d_u` for every user, 1-based files.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DemandVector {
    files: Vec<usize>,
}

impl DemandVector {
    pub fn new(files: Vec<usize>, users: usize, library: usize) -> Result<Self> {
        if files.len() != users {
            return Err(Error::InvalidDemand(format!(
                "expected {users} demands, got {}",
                files.len()
            )));
        }
        if let Some((u, d)) = files
            .iter()
            .enumerate()
            .find(|(_, &d)| d == 0 || d > library)
        {
            return Err(Error::InvalidDemand(format!(
                "user {} demands file {d}, outside [1, {library}]",
                u + 1
            )));
        }
        Ok(Self { files })
    }

    /// `d_u = u`.
    pub fn worst_case(users: usize) -> Self {
        Self {
            files: (1..=users).collect(),
        }
    }

    /// Independent uniform demands from a seeded ChaCha8 stream.
    pub fn random(users: usize, library: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            files: (0..users).map(|_| rng.gen_range(1..=library)).collect(),
        }
    }

    pub fn file_of(&self, user: usize) -> usize {
        self.files[user - 1]
    }

    pub fn files(&self) -> &[usize] {
        &self.files
    }

    pub fn is_distinct(&self) -> bool {
        let mut seen = HashSet::new();
        self.files.iter().all(|f| seen.insert(*f))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Case {
    General,
    SpecialOne,
    SpecialTwo,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Case::General => "GENERAL",
            Case::SpecialOne => "SC1",
            Case::SpecialTwo => "SC2",
        })
    }
}

/// Case tag plus, for special case 2, the shift `j` with
/// `I(P_S + j) = {u} ∪ T`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Classification {
    pub case: Case,
    pub shift: Option<usize>,
}

/// One XOR operand: the mini-subfile `user` wants, `W_{d_user, S, T}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Term {
    pub user: usize,
    pub mini: MiniSubfileId,
}

impl Term {
    fn new(user: usize, subfile: SubfileIndexSet, cached_by: IndexSet, demand: &DemandVector) -> Self {
        Term {
            user,
            mini: MiniSubfileId {
                file: demand.file_of(user),
                subfile,
                cached_by,
            },
        }
    }

    fn key(&self) -> DemandKey {
        (self.user, self.mini.subfile, self.mini.cached_by)
    }
}

/// `d<u>:S:T`.
impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d{}:{}:{}", self.user, self.mini.subfile, self.mini.cached_by)
    }
}

type DemandKey = (usize, SubfileIndexSet, IndexSet);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transmission {
    pub case: Case,
    pub anchor: Term,
    /// XOR operands; the anchor comes first.
    pub terms: Vec<Term>,
}

impl Transmission {
    pub fn union_set(&self) -> IndexSet {
        self.anchor.mini.union_with(self.anchor.user)
    }
}

/// `CASE d<u>:S:T ^ d<u'>:S':T' ...`
impl fmt::Display for Transmission {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.case)?;
        for (i, t) in self.terms.iter().enumerate() {
            if i == 0 {
                write!(f, " {t}")?;
            } else {
                write!(f, " ^ {t}")?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DeliveryCounts {
    pub total: usize,
    pub general: usize,
    pub special_one: usize,
    pub special_two: usize,
    /// Distinct union sets served by general-case transmissions.
    pub general_subsets: usize,
}

#[derive(Clone, Debug)]
pub struct DeliveryResult {
    pub transmissions: Vec<Transmission>,
    pub counts: DeliveryCounts,
    pub subpacketization: i128,
}

impl DeliveryResult {
    /// Transmissions per file, `X / F`.
    pub fn rate(&self) -> Rational {
        ratio(self.counts.total as i128, self.subpacketization)
    }

    /// One line per transmission.
    pub fn log(&self) -> String {
        let mut out = String::new();
        for t in &self.transmissions {
            out.push_str(&t.to_string());
            out.push('\n');
        }
        out
    }

    pub fn footer(&self) -> String {
        format!(
            "# transmissions={} general={} sc1={} sc2={} F={} rate={}",
            self.counts.total,
            self.counts.general,
            self.counts.special_one,
            self.counts.special_two,
            self.subpacketization,
            format_rational(&self.rate())
        )
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct DeliveryOptions {
    /// Run delivery even when `gamma_p >= gamma_a L`. No rate formula or
    /// decodability guarantee backs this mode.
    pub allow_uncharacterized: bool,
}

pub fn classify_union_set(
    ring: &RingTopology,
    user: usize,
    subfile: SubfileIndexSet,
    cached_by: IndexSet,
) -> Result<Classification> {
    let pos = position_sets(user, subfile.members(), cached_by)?;
    let union = pos.union_set();
    let inside = ring.sets_within(union);
    let partner = cached_by.with(user);
    let case = match inside.len() {
        1 => Case::SpecialOne,
        2 if inside.iter().any(|s| s.members() == partner) => Case::SpecialTwo,
        _ => Case::General,
    };
    if case != Case::SpecialTwo {
        return Ok(Classification { case, shift: None });
    }
    let shifts: Vec<usize> = (1..pos.size())
        .filter(|&j| pos.elements(pos.shifted(j as i64).1) == partner)
        .collect();
    assert_eq!(shifts.len(), 1, "special case 2 shift must be unique");
    Ok(Classification {
        case,
        shift: Some(shifts[0]),
    })
}

/// Anchor plus every rotation `i in [gamma_a L + gamma_p]` whose image of
/// `S` is a subfile-index set.
pub fn build_general(
    ring: &RingTopology,
    user: usize,
    subfile: SubfileIndexSet,
    cached_by: IndexSet,
    demand: &DemandVector,
) -> Result<Transmission> {
    let pos = position_sets(user, subfile.members(), cached_by)?;
    let anchor = Term::new(user, subfile, cached_by, demand);
    let mut terms = vec![anchor];
    for i in 1..pos.size() {
        let (pu, ps, pt) = pos.shifted(i as i64);
        if let Some(image) = ring.find(pos.elements(ps)) {
            let rotated_user = pos.element(pu.iter().next().expect("singleton"));
            terms.push(Term::new(rotated_user, image, pos.elements(pt), demand));
        }
    }
    Ok(Transmission {
        case: Case::General,
        anchor,
        terms,
    })
}

fn swap_group(
    user: usize,
    subfile: SubfileIndexSet,
    cached_by: IndexSet,
    demand: &DemandVector,
) -> Vec<Term> {
    let group = cached_by.with(user);
    std::iter::once(Term::new(user, subfile, cached_by, demand))
        .chain(
            cached_by
                .iter()
                .map(|t| Term::new(t, subfile, group.without(t), demand)),
        )
        .collect()
}

/// `W_{d_u,S,T} ⊕_{t ∈ T} W_{d_t, S, ({u} ∪ T) \ {t}}`.
pub fn build_sc1(
    user: usize,
    subfile: SubfileIndexSet,
    cached_by: IndexSet,
    demand: &DemandVector,
) -> Transmission {
    let terms = swap_group(user, subfile, cached_by, demand);
    Transmission {
        case: Case::SpecialOne,
        anchor: terms[0],
        terms,
    }
}

/// Special-case-1 group on `S`, then the anchor rotated by `shift` onto
/// `{u} ∪ T` together with its own group.
pub fn build_sc2(
    ring: &RingTopology,
    user: usize,
    subfile: SubfileIndexSet,
    cached_by: IndexSet,
    shift: usize,
    demand: &DemandVector,
) -> Result<Transmission> {
    let pos = position_sets(user, subfile.members(), cached_by)?;
    let (pu, ps, pt) = pos.shifted(shift as i64);
    let image = ring.find(pos.elements(ps)).ok_or_else(|| {
        Error::InvalidMiniSubfile(format!("shift {shift} does not land on a subfile-index set"))
    })?;
    let rotated_user = pos.element(pu.iter().next().expect("singleton"));
    let mut terms = swap_group(user, subfile, cached_by, demand);
    terms.extend(swap_group(rotated_user, image, pos.elements(pt), demand));
    Ok(Transmission {
        case: Case::SpecialTwo,
        anchor: terms[0],
        terms,
    })
}

pub fn deliver(layout: &CacheLayout, demand: &DemandVector) -> Result<DeliveryResult> {
    deliver_with(layout, demand, DeliveryOptions::default())
}

pub fn deliver_with(
    layout: &CacheLayout,
    demand: &DemandVector,
    options: DeliveryOptions,
) -> Result<DeliveryResult> {
    let params = layout.params();
    // re-validate against this layout's system
    let demand = DemandVector::new(demand.files().to_vec(), params.k(), params.n())?;
    if layout.regime() == Regime::Uncharacterized && !options.allow_uncharacterized {
        let point = layout.point();
        return Err(Error::OutOfRegime {
            regime: Regime::Uncharacterized.name(),
            detail: format!(
                "gamma_p = {} is not below gamma_a L = {}",
                point.gamma_p,
                layout.span()
            ),
        });
    }
    let ring = layout.topology();
    let users = layout.users();

    let demand_sets: Vec<Vec<(SubfileIndexSet, IndexSet)>> =
        (1..=users).map(|u| layout.demand_pairs(u)).collect();
    let mut pending: HashSet<DemandKey> = demand_sets
        .iter()
        .enumerate()
        .flat_map(|(i, pairs)| pairs.iter().map(move |(s, t)| (i + 1, *s, *t)))
        .collect();

    let mut transmissions = Vec::new();
    let mut counts = DeliveryCounts::default();
    let mut general_unions = HashSet::new();
    for (i, pairs) in demand_sets.iter().enumerate() {
        let u = i + 1;
        for &(s, t) in pairs {
            if !pending.contains(&(u, s, t)) {
                continue;
            }
            let class = classify_union_set(ring, u, s, t)?;
            let tx = match class.case {
                Case::SpecialOne => build_sc1(u, s, t, &demand),
                Case::SpecialTwo => {
                    build_sc2(ring, u, s, t, class.shift.expect("shift"), &demand)?
                }
                Case::General => build_general(ring, u, s, t, &demand)?,
            };
            for term in &tx.terms {
                pending.remove(&term.key());
            }
            match tx.case {
                Case::General => {
                    counts.general += 1;
                    general_unions.insert(tx.union_set());
                }
                Case::SpecialOne => counts.special_one += 1,
                Case::SpecialTwo => counts.special_two += 1,
            }
            transmissions.push(tx);
        }
    }
    counts.total = transmissions.len();
    counts.general_subsets = general_unions.len();
    Ok(DeliveryResult {
        transmissions,
        counts,
        subpacketization: layout.subpacketization(),
    })
}

/// Per-user decoding outcome.
#[derive(Clone, Debug, Serialize)]
pub struct UserDecoding {
    pub user: usize,
    pub demanded: usize,
    pub decoded: usize,
    pub missing: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecodabilityReport {
    pub users: Vec<UserDecoding>,
}

impl DecodabilityReport {
    pub fn is_success(&self) -> bool {
        self.users.iter().all(|u| u.missing.is_empty())
    }

    /// Users with at least one undecodable mini-subfile.
    pub fn failing_users(&self) -> Vec<usize> {
        self.users
            .iter()
            .filter(|u| !u.missing.is_empty())
            .map(|u| u.user)
            .collect()
    }

    pub fn total_demanded(&self) -> usize {
        self.users.iter().map(|u| u.demanded).sum()
    }

    pub fn summary(&self) -> String {
        if self.is_success() {
            format!(
                "# decodability: PASS ({} users, {} mini-subfiles)",
                self.users.len(),
                self.total_demanded()
            )
        } else {
            let missing: usize = self.users.iter().map(|u| u.missing.len()).sum();
            format!(
                "# decodability: FAIL (users {:?} miss {missing} mini-subfiles)",
                self.failing_users()
            )
        }
    }
}

/// A user decodes a term when it can reach every other operand of the same
/// transmission.
pub fn verify_decodability(
    layout: &CacheLayout,
    demand: &DemandVector,
    result: &DeliveryResult,
) -> DecodabilityReport {
    let mut decoded: HashMap<DemandKey, bool> = HashMap::new();
    for u in 1..=layout.users() {
        for (s, t) in layout.demand_pairs(u) {
            decoded.insert((u, s, t), false);
        }
    }
    for tx in &result.transmissions {
        for (i, term) in tx.terms.iter().enumerate() {
            if term.mini.file != demand.file_of(term.user) {
                continue;
            }
            let clear = tx
                .terms
                .iter()
                .enumerate()
                .all(|(j, other)| j == i || layout.has_mini_subfile(term.user, &other.mini));
            if clear {
                if let Some(slot) = decoded.get_mut(&term.key()) {
                    *slot = true;
                }
            }
        }
    }
    let users = (1..=layout.users())
        .map(|u| {
            let pairs = layout.demand_pairs(u);
            let missing: Vec<String> = pairs
                .iter()
                .filter(|(s, t)| !decoded[&(u, *s, *t)])
                .map(|(s, t)| {
                    MiniSubfileId {
                        file: demand.file_of(u),
                        subfile: *s,
                        cached_by: *t,
                    }
                    .to_string()
                })
                .collect();
            UserDecoding {
                user: u,
                demanded: pairs.len(),
                decoded: pairs.len() - missing.len(),
                missing,
            }
        })
        .collect();
    DecodabilityReport { users }
}

//! Exhaustive oracles: transmission-subset census, three-way count agreement
//! and the dedicated-cache cross-check.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{closed_form_rate, table1_counts};
use crate::combin::{binom, KSubsets};
use crate::delivery::{deliver, verify_decodability, Case, DemandVector};
use crate::error::{Error, Result};
use crate::model::{IndexSet, Regime, RingTopology, SystemParams};
use crate::placement::CacheLayout;
use crate::scalar::{format_rational, integer, ratio};

/// Largest `K` for exhaustive subset enumeration.
pub const CENSUS_MAX_USERS: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SubsetRecord {
    pub members: String,
    pub subfile_index_sets: Vec<String>,
    pub case: Case,
    #[serde(skip)]
    pub mask: IndexSet,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SubsetCensus {
    pub records: Vec<SubsetRecord>,
    pub c: i128,
    pub c_sc1: i128,
    pub c_sc2: i128,
    pub c_general: i128,
}

impl SubsetCensus {
    /// Transmissions implied by the census: one per special subset,
    /// `1 + gamma_p` per general subset.
    pub fn transmissions(&self, gamma_p: usize) -> i128 {
        (1 + gamma_p as i128) * self.c_general + self.c_sc1 + self.c_sc2
    }
}

fn classify_subset(ring: &RingTopology, members: IndexSet) -> Option<SubsetRecord> {
    let inside = ring.sets_within(members);
    let case = match inside.as_slice() {
        [] => return None,
        [_] => Case::SpecialOne,
        [a, b] if a.members().is_disjoint(b.members()) => Case::SpecialTwo,
        _ => Case::General,
    };
    Some(SubsetRecord {
        members: members.to_string(),
        subfile_index_sets: inside.iter().map(|s| s.to_string()).collect(),
        case,
        mask: members,
    })
}

/// Every `(1 + gamma_a L + gamma_p)`-subset of `[K]` that contains a
/// subfile-index set, classified.
pub fn enumerate_transmission_subsets(params: &SystemParams) -> Result<SubsetCensus> {
    let k = params.k();
    if k > CENSUS_MAX_USERS {
        return Err(Error::GuardExceeded {
            users: k,
            limit: CENSUS_MAX_USERS,
        });
    }
    let (point, _) = params.regime()?;
    let span = point.span(params.l());
    let size = 1 + span + point.gamma_p;
    if size > k {
        return Ok(SubsetCensus::default());
    }
    let ring = RingTopology::new(k, span);
    let subsets: Vec<IndexSet> = KSubsets::new(k, size).collect();
    let records: Vec<SubsetRecord> = subsets
        .par_iter()
        .filter_map(|&s| classify_subset(&ring, s))
        .collect();
    let count = |case| records.iter().filter(|r| r.case == case).count() as i128;
    Ok(SubsetCensus {
        c: records.len() as i128,
        c_sc1: count(Case::SpecialOne),
        c_sc2: count(Case::SpecialTwo),
        c_general: count(Case::General),
        records,
    })
}

/// `(C, C_SC1, C_SC2, X)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CountTuple {
    pub c: i128,
    pub sc1: i128,
    pub sc2: i128,
    pub x: i128,
}

impl std::fmt::Display for CountTuple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{},{})", self.c, self.sc1, self.sc2, self.x)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Divergence {
    pub what: String,
    /// The offending transmission-subset, when one can be named.
    pub subset: Option<SubsetRecord>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AgreementReport {
    pub k: usize,
    pub l: usize,
    pub gamma_a: usize,
    pub gamma_p: usize,
    pub census: CountTuple,
    pub table: CountTuple,
    pub delivery: CountTuple,
    pub subpacketization: i128,
    pub closed_form_rate: String,
    pub decodable: bool,
    pub pass: bool,
    pub first_divergence: Option<Divergence>,
}

impl AgreementReport {
    pub fn summary(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let mut line = format!(
            "{verdict} K={} L={} ga={} gp={} {}",
            self.k, self.l, self.gamma_a, self.gamma_p, self.census
        );
        if let Some(d) = &self.first_divergence {
            line.push_str(&format!(" -- {}", d.what));
            if let Some(s) = &d.subset {
                line.push_str(&format!(
                    " at I={{{}}} sets=[{}] class={}",
                    s.members,
                    s.subfile_index_sets.join(" "),
                    s.case
                ));
            }
        }
        line
    }
}

/// Compares the census, the closed-form counts and an actual delivery run
/// with worst-case demands.
pub fn count_vs_formula(params: &SystemParams) -> Result<AgreementReport> {
    let (point, _) = params.regime()?;
    let gp = point.gamma_p;
    let census = enumerate_transmission_subsets(params)?;
    let table = table1_counts(params)?;
    let closed = closed_form_rate(params)?;
    let layout = CacheLayout::build(params)?;
    let demand = DemandVector::worst_case(params.k());
    let result = deliver(&layout, &demand)?;
    let decodable = verify_decodability(&layout, &demand, &result).is_success();

    let census_counts = CountTuple {
        c: census.c,
        sc1: census.c_sc1,
        sc2: census.c_sc2,
        x: census.transmissions(gp),
    };
    let table_counts = CountTuple {
        c: table.c,
        sc1: table.c_sc1,
        sc2: table.c_sc2,
        x: table.x,
    };
    let delivered = result.counts;
    let delivery_counts = CountTuple {
        c: delivered.general_subsets as i128
            + delivered.special_one as i128
            + delivered.special_two as i128,
        sc1: delivered.special_one as i128,
        sc2: delivered.special_two as i128,
        x: delivered.total as i128,
    };

    // per-subset multiplicity and class
    let mut realized: BTreeMap<u64, Vec<Case>> = BTreeMap::new();
    for tx in &result.transmissions {
        realized.entry(tx.union_set().bits()).or_default().push(tx.case);
    }
    let mut divergence = census.records.iter().find_map(|rec| {
        let expected = match rec.case {
            Case::General => 1 + gp,
            _ => 1,
        };
        let cases = realized.get(&rec.mask.bits()).map(Vec::as_slice).unwrap_or(&[]);
        if cases.len() == expected && cases.iter().all(|&c| c == rec.case) {
            return None;
        }
        let sent: Vec<String> = cases.iter().map(|c| c.to_string()).collect();
        Some(Divergence {
            what: format!(
                "delivery sent [{}], census expects {expected} x {}",
                sent.join(" "),
                rec.case
            ),
            subset: Some(rec.clone()),
        })
    });
    if divergence.is_none() && realized.len() as i128 != census.c {
        divergence = Some(Divergence {
            what: format!(
                "delivery used {} subsets, census has {}",
                realized.len(),
                census.c
            ),
            subset: None,
        });
    }
    let checks = [
        (census_counts == table_counts, "census and closed-form counts differ"),
        (census_counts.x == delivery_counts.x, "delivery count differs from census"),
        (
            closed == ratio(table.x, table.f),
            "closed-form rate differs from X/F",
        ),
        (table.f == layout.subpacketization(), "subpacketization differs"),
        (decodable, "worst-case delivery is not decodable"),
        (
            gp + 1 == point.span(params.l()) || census.c_sc2 == 0,
            "SC2 subsets outside gamma_p = gamma_a L - 1",
        ),
    ];
    if divergence.is_none() {
        divergence = checks.iter().find(|(ok, _)| !ok).map(|(_, what)| Divergence {
            what: what.to_string(),
            subset: None,
        });
    }
    Ok(AgreementReport {
        k: params.k(),
        l: params.l(),
        gamma_a: point.gamma_a,
        gamma_p: gp,
        census: census_counts,
        table: table_counts,
        delivery: delivery_counts,
        subpacketization: table.f,
        closed_form_rate: format_rational(&closed),
        decodable,
        pass: divergence.is_none(),
        first_divergence: divergence,
    })
}

/// Characterized integral points with `K in [k_min, k_max]`,
/// `L in [1, l_max]`, `N = K`.
pub fn grid_points(k_min: usize, k_max: usize, l_max: usize) -> Vec<SystemParams> {
    let mut out = Vec::new();
    for k in k_min.max(2)..=k_max {
        for l in 1..=l_max.min(k) {
            for ga in 1..=k {
                let span = ga * l;
                if span >= k {
                    break;
                }
                for gp in 0..span {
                    if 1 + span + gp > k {
                        break;
                    }
                    let params = SystemParams::from_gammas(k, l, ga, gp, k).expect("valid grid point");
                    debug_assert_eq!(params.regime().map(|r| r.1).ok(), Some(Regime::Characterized));
                    out.push(params);
                }
            }
        }
    }
    out
}

/// Runs [`count_vs_formula`] over [`grid_points`] in parallel, reporting in
/// grid order.
pub fn verify_grid(k_min: usize, k_max: usize, l_max: usize) -> Result<Vec<AgreementReport>> {
    if k_max > CENSUS_MAX_USERS {
        return Err(Error::GuardExceeded {
            users: k_max,
            limit: CENSUS_MAX_USERS,
        });
    }
    grid_points(k_min, k_max, l_max)
        .par_iter()
        .map(count_vs_formula)
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ManReport {
    pub k: usize,
    pub t: usize,
    pub transmissions: usize,
    pub subpacketization: i128,
    pub rate: String,
    pub expected_rate: String,
    pub expected_subpacketization: i128,
    pub decodable: bool,
    pub pass: bool,
}

/// Runs delivery with no access memory and `M_p = N t / K` and compares
/// with `C(K, t+1) / C(K, t)` at subpacketization `C(K, t)`.
pub fn man_crosscheck(k: usize, t: usize, n: usize) -> Result<ManReport> {
    if t > k {
        return Err(Error::InvalidParams(format!("t = {t} exceeds K = {k}")));
    }
    let mp = ratio((n * t) as i128, k as i128);
    let params = SystemParams::new(k, 1, integer(0), mp, n)?;
    let layout = CacheLayout::build(&params)?;
    let demand = DemandVector::worst_case(k);
    let result = deliver(&layout, &demand)?;
    let decodable = verify_decodability(&layout, &demand, &result).is_success();
    let expected = ratio(binom(k as i64, t as i64 + 1), binom(k as i64, t as i64));
    let expected_f = binom(k as i64, t as i64);
    let rate = result.rate();
    Ok(ManReport {
        k,
        t,
        transmissions: result.counts.total,
        subpacketization: result.subpacketization,
        pass: rate == expected && result.subpacketization == expected_f && decodable,
        rate: format_rational(&rate),
        expected_rate: format_rational(&expected),
        expected_subpacketization: expected_f,
        decodable,
    })
}

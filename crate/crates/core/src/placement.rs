//! Uncoded placement into access caches and private caches.
//!
//! Every file is split into `K` subfiles `W_{n,i}`. Access cache `k` stores
//! the subfiles with indices `<k + (j-1)L>_K` for `j in [gamma_a]`, which
//! makes subfile `i` reachable exactly by the users in
//! `<[i - gamma_a L + 1, i]>_K`. Each subfile is further split into
//! `C(K - gamma_a L, gamma_p)` mini-subfiles `W_{n,S,T}`, and user `u` keeps
//! every mini-subfile with `u in T` in its private cache.
//!
//! Contents are virtual: the layout answers membership and enumeration
//! queries from the index structure instead of storing payloads.

use serde::Serialize;

use crate::combin::{binom, combinations};
use crate::error::Result;
use crate::model::{
    cyc_reduce, IndexSet, IntegralPoint, MiniSubfileId, Regime, RingTopology, SubfileIndexSet,
    SystemParams,
};

#[derive(Clone, Debug)]
pub struct CacheLayout {
    params: SystemParams,
    point: IntegralPoint,
    regime: Regime,
    topology: RingTopology,
}

/// What one user can reach and what it still lacks.
#[derive(Clone, Debug)]
pub struct UserAccess {
    pub user: usize,
    pub accessible: Vec<MiniSubfileId>,
    /// `D_u`: the `(S, T)` pairs whose mini-subfiles the user lacks.
    pub demanded: Vec<(SubfileIndexSet, IndexSet)>,
}

impl CacheLayout {
    pub fn build(params: &SystemParams) -> Result<Self> {
        let (point, regime) = params.regime()?;
        let span = point.span(params.l());
        Ok(Self {
            params: params.clone(),
            point,
            regime,
            topology: RingTopology::new(params.k(), span),
        })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn point(&self) -> IntegralPoint {
        self.point
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn topology(&self) -> &RingTopology {
        &self.topology
    }

    pub fn users(&self) -> usize {
        self.params.k()
    }

    pub fn span(&self) -> usize {
        self.topology.span()
    }

    /// Mini-subfiles per subfile.
    pub fn minis_per_subfile(&self) -> i128 {
        let k = self.users() as i64;
        binom(k - self.span() as i64, self.point.gamma_p as i64)
    }

    /// Subfiles per file: `K`, or one when there is no access memory.
    pub fn subfiles_per_file(&self) -> i128 {
        if self.point.gamma_a == 0 {
            1
        } else {
            self.users() as i128
        }
    }

    /// Mini-subfiles per file, `F`.
    pub fn subpacketization(&self) -> i128 {
        self.subfiles_per_file() * self.minis_per_subfile()
    }

    /// Subfiles stored in access cache `k`, ascending by index.
    pub fn access_subfiles(&self, cache: usize) -> Vec<SubfileIndexSet> {
        let l = self.params.l() as i64;
        let mut out: Vec<_> = (1..=self.point.gamma_a as i64)
            .map(|j| {
                let index = cyc_reduce(cache as i64 + (j - 1) * l, self.users()).get();
                self.topology.set(index)
            })
            .collect();
        out.sort_by_key(|s| s.index());
        out
    }

    /// Contents of access cache `k` as `(file, S)` pairs.
    pub fn access_cache(&self, cache: usize) -> Vec<(usize, SubfileIndexSet)> {
        let subfiles = self.access_subfiles(cache);
        (1..=self.params.n())
            .flat_map(|n| subfiles.iter().map(move |s| (n, *s)))
            .collect()
    }

    /// Every mini-subfile of subfile `(file, S)`, `T` in lexicographic order.
    pub fn mini_subfiles(&self, file: usize, subfile: SubfileIndexSet) -> Vec<MiniSubfileId> {
        let outside: Vec<usize> = self
            .topology
            .all_users()
            .difference(subfile.members())
            .to_vec();
        combinations(&outside, self.point.gamma_p)
            .into_iter()
            .map(|t| MiniSubfileId {
                file,
                subfile,
                cached_by: t,
            })
            .collect()
    }

    /// Contents of the private cache of `user`.
    pub fn private_cache(&self, user: usize) -> Vec<MiniSubfileId> {
        if self.point.gamma_p == 0 {
            return Vec::new();
        }
        let mut out = Vec::new();
        for n in 1..=self.params.n() {
            for s in self.topology.sets() {
                if s.contains(user) {
                    continue;
                }
                let others: Vec<usize> = self
                    .topology
                    .all_users()
                    .difference(s.members())
                    .without(user)
                    .to_vec();
                for t in combinations(&others, self.point.gamma_p - 1) {
                    out.push(MiniSubfileId {
                        file: n,
                        subfile: *s,
                        cached_by: t.with(user),
                    });
                }
            }
        }
        out
    }

    /// Access caches user `u` connects to: `<[u, u + L - 1]>_K`.
    pub fn connected_caches(&self, user: usize) -> Vec<usize> {
        (0..self.params.l() as i64)
            .map(|o| cyc_reduce(user as i64 + o, self.users()).get())
            .collect()
    }

    /// `D_u`, ordered by subfile index then `T` lexicographically.
    pub fn demand_pairs(&self, user: usize) -> Vec<(SubfileIndexSet, IndexSet)> {
        let mut out = Vec::new();
        for s in self.topology.sets() {
            if s.contains(user) {
                continue;
            }
            let others: Vec<usize> = self
                .topology
                .all_users()
                .difference(s.members())
                .without(user)
                .to_vec();
            for t in combinations(&others, self.point.gamma_p) {
                out.push((*s, t));
            }
        }
        out
    }

    pub fn user_access(&self, user: usize) -> UserAccess {
        let mut accessible = Vec::new();
        let mut reachable: Vec<SubfileIndexSet> = self
            .connected_caches(user)
            .into_iter()
            .flat_map(|c| self.access_subfiles(c))
            .collect();
        reachable.sort_by_key(|s| s.index());
        reachable.dedup();
        for n in 1..=self.params.n() {
            for s in &reachable {
                accessible.extend(self.mini_subfiles(n, *s));
            }
        }
        accessible.extend(self.private_cache(user));
        UserAccess {
            user,
            accessible,
            demanded: self.demand_pairs(user),
        }
    }

    /// True iff `user` reaches `mini` through an access cache (`u in S`) or
    /// its private cache (`u in T`).
    pub fn has_mini_subfile(&self, user: usize, mini: &MiniSubfileId) -> bool {
        mini.subfile.contains(user) || mini.cached_by.contains(user)
    }

    pub fn to_dump(&self) -> LayoutDump {
        let k = self.users();
        LayoutDump {
            k,
            l: self.params.l(),
            n: self.params.n(),
            gamma_a: self.point.gamma_a,
            gamma_p: self.point.gamma_p,
            subpacketization: self.subpacketization(),
            access: (1..=k)
                .map(|c| CacheDump {
                    cache: c,
                    contents: self
                        .access_cache(c)
                        .into_iter()
                        .map(|(n, s)| format!("{n}:{s}:*"))
                        .collect(),
                })
                .collect(),
            private: (1..=k)
                .map(|u| CacheDump {
                    cache: u,
                    contents: self.private_cache(u).iter().map(|m| m.to_string()).collect(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_dump())?)
    }
}

/// JSON form of a layout. Access entries are whole subfiles `n:S:*`;
/// private entries are mini-subfiles `n:S:T`.
#[derive(Clone, Debug, Serialize)]
pub struct LayoutDump {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub gamma_a: usize,
    pub gamma_p: usize,
    #[serde(rename = "F")]
    pub subpacketization: i128,
    pub access: Vec<CacheDump>,
    pub private: Vec<CacheDump>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CacheDump {
    pub cache: usize,
    pub contents: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::set_of;
    use crate::scalar::{integer, ratio};
    use crate::Rational;

    fn layout(k: usize, l: usize, ma: i128, mp: i128, n: usize) -> CacheLayout {
        CacheLayout::build(&SystemParams::new(k, l, integer(ma), integer(mp), n).unwrap()).unwrap()
    }

    fn subfile_strings(v: &[MiniSubfileId]) -> Vec<String> {
        v.iter().filter(|m| m.file == 1).map(|m| m.to_string()).collect()
    }

    #[test]
    fn first_example_cache_listing() {
        let lay = layout(5, 2, 1, 1, 5);
        assert_eq!(lay.subpacketization(), 15);
        let a1: Vec<_> = lay.access_cache(1).iter().map(|(n, s)| format!("{n}:{s}")).collect();
        assert_eq!(a1, ["1:1,5", "2:1,5", "3:1,5", "4:1,5", "5:1,5"]);
        assert_eq!(
            subfile_strings(&lay.private_cache(1)),
            ["1:2,3:1", "1:3,4:1", "1:4,5:1"]
        );
        assert_eq!(
            subfile_strings(&lay.private_cache(3)),
            ["1:1,5:3", "1:1,2:3", "1:4,5:3"]
        );
    }

    #[test]
    fn second_example_private_cache() {
        let lay = layout(7, 2, 1, 1, 7);
        assert_eq!(lay.subpacketization(), 35);
        let p2 = subfile_strings(&lay.private_cache(2));
        assert_eq!(p2, ["1:1,7:2", "1:3,4:2", "1:4,5:2", "1:5,6:2", "1:6,7:2"]);
        assert_eq!(lay.private_cache(2).len(), 35);
    }

    #[test]
    fn zero_memory_is_empty() {
        let lay = layout(6, 2, 0, 0, 6);
        assert!(lay.access_cache(1).is_empty());
        assert!(lay.private_cache(1).is_empty());
        assert_eq!(lay.subpacketization(), 1);
    }

    #[test]
    fn user_access_first_example() {
        let lay = layout(5, 2, 1, 1, 5);
        let acc = lay.user_access(1);
        let mut reach: Vec<String> = acc
            .accessible
            .iter()
            .filter(|m| m.file == 1 && m.subfile.contains(1))
            .map(|m| m.subfile.to_string())
            .collect();
        reach.dedup();
        assert_eq!(reach, ["1,5", "1,2"]);
        assert_eq!(acc.demanded.len(), 6);
    }

    #[test]
    fn user_demand_set_size_second_example() {
        let lay = layout(7, 2, 1, 1, 7);
        let d1 = lay.demand_pairs(1);
        assert_eq!(d1.len(), 20);
        let listed: Vec<String> = d1.iter().map(|(s, t)| format!("{s}|{t}")).collect();
        assert_eq!(&listed[..4], ["2,3|4", "2,3|5", "2,3|6", "2,3|7"]);
    }

    #[test]
    fn full_coverage_has_no_demands() {
        let lay = CacheLayout::build(&SystemParams::from_gammas(6, 2, 2, 2, 6).unwrap()).unwrap();
        assert!((1..=6).all(|u| lay.demand_pairs(u).is_empty()));
    }

    #[test]
    fn membership_examples() {
        let lay = layout(5, 2, 1, 1, 5);
        let ring = lay.topology();
        let m = |s: &[usize], t: &[usize]| MiniSubfileId {
            file: 1,
            subfile: ring.find(set_of(s)).unwrap(),
            cached_by: set_of(t),
        };
        assert!(lay.has_mini_subfile(1, &m(&[1, 2], &[3])));
        assert!(lay.has_mini_subfile(1, &m(&[2, 3], &[1])));
        assert!(!lay.has_mini_subfile(1, &m(&[2, 3], &[4])));
    }

    #[test]
    fn memory_constraints_hold_exactly() {
        for (k, l, ga, gp) in [(5, 2, 1, 1), (7, 2, 1, 1), (9, 2, 2, 2), (8, 3, 1, 2), (6, 1, 0, 2)] {
            let p = SystemParams::from_gammas(k, l, ga, gp, k + 1).unwrap();
            let lay = CacheLayout::build(&p).unwrap();
            let f = Rational::from_integer(lay.subpacketization().into());
            let per_subfile = Rational::from_integer(lay.minis_per_subfile().into());
            for c in 1..=k {
                let access_files = Rational::from_integer(lay.access_cache(c).len().into())
                    * &per_subfile
                    / &f;
                assert_eq!(&access_files, p.ma(), "access cache {c} of {p}");
                let private_files = Rational::from_integer(lay.private_cache(c).len().into()) / &f;
                assert_eq!(&private_files, p.mp(), "private cache {c} of {p}");
            }
        }
        let _ = ratio(1, 1);
    }

    #[test]
    fn private_never_overlaps_access() {
        let lay = layout(7, 2, 1, 1, 7);
        for u in 1..=7 {
            assert!(lay.private_cache(u).iter().all(|m| !m.subfile.contains(u)));
        }
    }

    #[test]
    fn dump_uses_id_strings() {
        let dump = layout(5, 2, 1, 1, 5).to_dump();
        assert_eq!(dump.access[0].contents[0], "1:1,5:*");
        assert_eq!(dump.private[0].contents[0], "1:2,3:1");
        assert_eq!(dump.subpacketization, 15);
    }
}

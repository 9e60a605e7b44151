//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so every line is printed regardless of outcome.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use cwmap::analysis::closed_form_rate;
use cwmap::cli;
use cwmap::scalar::{integer, ratio};
use cwmap::sweep::{run_sweep, SweepSpec};
use cwmap::verify::{enumerate_transmission_subsets, grid_points, man_crosscheck};
use cwmap::{
    achievable_rate, cutset_bound, deliver, is_optimal, memory_share, table1_counts,
    verify_decodability, CacheLayout, DemandVector, Rational, SystemParams,
};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn binom(n: i64, k: i64) -> i128 {
    if n < 0 || k < 0 || k > n {
        return 0;
    }
    (0..k).fold(1i128, |acc, i| acc * (n - i) as i128 / (i + 1) as i128)
}

/// Standalone census: all `size`-subsets of `[K]` containing a cyclic run
/// of length `span`, split by how many runs they hold.
struct Census {
    general: i128,
    sc1: i128,
    sc2: i128,
}

fn census(k: usize, span: usize, size: usize) -> Census {
    let runs: Vec<BTreeSet<usize>> = (1..=k)
        .map(|j| (0..span).map(|o| (j + o - 1) % k + 1).collect())
        .collect();
    let mut out = Census { general: 0, sc1: 0, sc2: 0 };
    let mut pick: Vec<usize> = (1..=size).collect();
    loop {
        let set: BTreeSet<usize> = pick.iter().copied().collect();
        let inside: Vec<&BTreeSet<usize>> = runs.iter().filter(|r| r.is_subset(&set)).collect();
        match inside.len() {
            0 => {}
            1 => out.sc1 += 1,
            2 if inside[0].is_disjoint(inside[1]) => out.sc2 += 1,
            _ => out.general += 1,
        }
        let Some(i) = (0..size).rev().find(|&i| pick[i] < k - size + i + 1) else {
            return out;
        };
        pick[i] += 1;
        for j in i + 1..size {
            pick[j] = pick[j - 1] + 1;
        }
    }
}

fn worst_case_run(k: usize) -> (CacheLayout, DemandVector, cwmap::DeliveryResult) {
    let params = SystemParams::from_gammas(k, 2, 1, 1, k).unwrap();
    let layout = CacheLayout::build(&params).unwrap();
    let demand = DemandVector::worst_case(k);
    let result = deliver(&layout, &demand).unwrap();
    (layout, demand, result)
}

fn criterion_1() -> Outcome {
    let (layout, demand, r) = worst_case_run(5);
    check(r.counts.total == 10, || format!("{} transmissions", r.counts.total))?;
    check(r.subpacketization == 15, || format!("F = {}", r.subpacketization))?;
    check(r.rate() == ratio(2, 3), || format!("rate {}", r.rate()))?;
    check(r.transmissions.iter().all(|t| t.terms.len() == 3), || "a transmission without 3 terms".into())?;
    let report = verify_decodability(&layout, &demand, &r);
    check(report.is_success() && report.users.len() == 5, || report.summary())?;
    Ok("10 transmissions, F=15, rate 2/3, 5 users decode".into())
}

fn criterion_2() -> Outcome {
    let (layout, demand, r) = worst_case_run(7);
    let c = r.counts;
    check(
        (c.total, c.general, c.special_one, c.special_two) == (56, 42, 7, 7),
        || format!("{c:?}"),
    )?;
    check(r.subpacketization == 35, || format!("F = {}", r.subpacketization))?;
    check(r.rate() == ratio(8, 5), || format!("rate {}", r.rate()))?;
    let report = verify_decodability(&layout, &demand, &r);
    check(report.is_success(), || report.summary())?;
    Ok("56 = 42 + 7 + 7, F=35, rate 8/5, all decode".into())
}

fn criterion_3() -> Outcome {
    let grid = grid_points(4, 12, 3);
    let failures: Vec<String> = grid
        .par_iter()
        .filter_map(|p| {
            let (point, _) = p.regime().unwrap();
            let (k, span, gp) = (p.k(), point.span(p.l()), point.gamma_p);
            let closed = closed_form_rate(p).unwrap();
            let table = table1_counts(p).unwrap();
            let f = table.f;
            let table_rate = ratio(table.x, f);
            let layout = CacheLayout::build(p).unwrap();
            let delivered = deliver(&layout, &DemandVector::worst_case(k)).unwrap();
            let algo_rate = ratio(delivered.counts.total as i128, delivered.subpacketization);
            let local = census(k, span, 1 + span + gp);
            let census_x = (1 + gp as i128) * local.general + local.sc1 + local.sc2;
            let census_rate = ratio(census_x, f);
            let library = enumerate_transmission_subsets(p).unwrap();
            let same_census = (library.c_general, library.c_sc1, library.c_sc2)
                == (local.general, local.sc1, local.sc2);
            let agree = closed == table_rate && table_rate == algo_rate && algo_rate == census_rate;
            (!(agree && same_census)).then(|| {
                format!("{p}: closed {closed} table {table_rate} algorithm {algo_rate} census {census_rate}")
            })
        })
        .collect();
    check(failures.is_empty(), || failures.join("; "))?;
    Ok(format!("{} instances, four routes agree exactly", grid.len()))
}

fn criterion_4() -> Outcome {
    let mut checked = 0usize;
    for p in grid_points(4, 6, 3) {
        let k = p.k();
        let layout = CacheLayout::build(&p).unwrap();
        let demands: Vec<Vec<usize>> = if k <= 5 {
            permutations(k)
        } else {
            let mut all = permutations(k);
            all.shuffle(&mut ChaCha8Rng::seed_from_u64(0x5eed));
            all.truncate(500);
            all
        };
        let bad: Vec<String> = demands
            .par_iter()
            .filter_map(|d| {
                let demand = DemandVector::new(d.clone(), k, k).unwrap();
                let result = deliver(&layout, &demand).unwrap();
                let report = verify_decodability(&layout, &demand, &result);
                (!report.is_success()).then(|| format!("{p} demand {d:?}: {}", report.summary()))
            })
            .collect();
        check(bad.is_empty(), || bad.join("; "))?;
        checked += demands.len();
    }
    Ok(format!("{checked} demand vectors decode, zero failures"))
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut items: Vec<usize> = (1..=k).collect();
    heap(&mut items, k, &mut out);
    out
}

fn heap(items: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
    if n <= 1 {
        out.push(items.clone());
        return;
    }
    for i in 0..n - 1 {
        heap(items, n - 1, out);
        if n % 2 == 0 {
            items.swap(i, n - 1);
        } else {
            items.swap(0, n - 1);
        }
    }
    heap(items, n - 1, out);
}

fn criterion_5() -> Outcome {
    let mut points = grid_points(4, 12, 3);
    // full coverage, gamma_p = K - gamma_a L
    for k in 4..=12 {
        for l in 1..=3 {
            for ga in 1..k {
                if ga * l < k {
                    points.push(SystemParams::from_gammas(k, l, ga, k - ga * l, k).unwrap());
                }
            }
        }
    }
    let mut on_edge = 0;
    for p in &points {
        let (point, _) = p.regime().unwrap();
        let rate: Rational = achievable_rate(p).unwrap();
        let bound: Rational = cutset_bound(p);
        check(bound <= rate, || format!("{p}: bound {bound} > rate {rate}"))?;
        let lemma = is_optimal(p);
        check((rate == bound) == lemma, || format!("{p}: rate {rate} bound {bound} condition {lemma}"))?;
        if lemma {
            on_edge += 1;
            let full = point.span(p.l()) + point.gamma_p == p.k();
            let expected = if full { integer(0) } else { ratio(1, p.k() as i128) };
            check(rate == expected, || format!("{p}: optimal rate {rate}, expected {expected}"))?;
        }
    }
    Ok(format!("{} points, bound <= rate, equality exactly on {on_edge} large-memory points", points.len()))
}

fn criterion_6() -> Outcome {
    let mut found = Vec::new();
    for (ma, expected, to) in [(6, 11, 13), (7, 8, 10), (8, 5, 7), (9, 2, 4)] {
        let rows = run_sweep(&SweepSpec {
            k: 30,
            l: 3,
            n: 30,
            access: vec![integer(ma)],
            private_from: integer(1),
            private_to: integer(to),
            private_step: integer(1),
        })
        .map_err(|e| e.to_string())?;
        let first = rows.iter().find(|r| r.optimal == Some(true));
        let Some(row) = first else {
            return Err(format!("Ma={ma}: bound never met"));
        };
        check(row.mp == expected.to_string(), || format!("Ma={ma}: first met at Mp={}", row.mp))?;
        check(
            row.rate_num.as_deref() == Some("1") && row.rate_den.as_deref() == Some("30"),
            || format!("Ma={ma}: rate {:?}/{:?}", row.rate_num, row.rate_den),
        )?;
        found.push(format!("Ma={ma}->Mp={}", row.mp));
    }
    Ok(format!("{} at rate 1/30", found.join(", ")))
}

fn criterion_7a() -> Outcome {
    let mut n = 0;
    for k in 3..=10usize {
        for t in 0..=k {
            let report = man_crosscheck(k, t, k).map_err(|e| e.to_string())?;
            check(
                report.pass && report.subpacketization == binom(k as i64, t as i64),
                || format!("K={k} t={t}: {report:?}"),
            )?;
            let params = SystemParams::from_gammas(k, 1, 0, t, k).unwrap();
            let closed: Rational = achievable_rate(&params).unwrap();
            let expected = ratio(binom(k as i64, t as i64 + 1), binom(k as i64, t as i64));
            check(closed == expected, || format!("K={k} t={t}: rate {closed}"))?;
            n += 1;
        }
    }
    Ok(format!("no access memory: {n} instances match C(K,t+1)/C(K,t) at F=C(K,t)"))
}

fn criterion_7b() -> Outcome {
    let mut mismatches = Vec::new();
    let mut n = 0;
    for k in 3..=10usize {
        for t in 1..k {
            let params = SystemParams::from_gammas(k, 1, t, 0, k).unwrap();
            let layout = CacheLayout::build(&params).unwrap();
            let result = deliver(&layout, &DemandVector::worst_case(k)).unwrap();
            let rate = result.rate();
            let man = ratio(binom(k as i64, t as i64 + 1), binom(k as i64, t as i64));
            if rate != man {
                mismatches.push(format!("K={k} t={t}: {rate} vs {man}"));
            }
            n += 1;
        }
    }
    check(mismatches.is_empty(), || {
        format!("{} of {n} instances differ from the dedicated-cache rate, e.g. {}", mismatches.len(), mismatches[0])
    })?;
    Ok(format!("one access cache, no private memory: {n} instances match"))
}

fn criterion_8() -> Outcome {
    let fractions = [ratio(1, 3), ratio(1, 2), ratio(3, 4)];
    let mut n = 0;
    for base in grid_points(4, 12, 3) {
        let (point, _) = base.regime().unwrap();
        let (k, l) = (base.k(), base.l());
        let (ga, gp) = (point.gamma_a, point.gamma_p);
        for frac in &fractions {
            for (da, dp) in [(true, false), (false, true), (true, true)] {
                let hi_a = ga + da as usize;
                let hi_p = gp + dp as usize;
                let corners_ok = [(ga, gp), (hi_a, gp), (ga, hi_p), (hi_a, hi_p)].iter().all(|&(a, p)| {
                    let span = a * l;
                    span < k && p < span && 1 + span + p <= k
                });
                if !corners_ok {
                    continue;
                }
                let gamma_a = integer(ga as i128) + if da { frac.clone() } else { integer(0) };
                let gamma_p = integer(gp as i128) + if dp { frac.clone() } else { integer(0) };
                let params = SystemParams::new(k, l, gamma_a.clone(), gamma_p.clone(), k).unwrap();
                let plan = memory_share::<Rational>(&params).map_err(|e| format!("{params}: {e}"))?;

                // weights from M = alpha M_1 + (1 - alpha) M_2
                let alpha = |m: &Rational, lo: usize, hi: usize| {
                    if lo == hi {
                        integer(1)
                    } else {
                        (integer(hi as i128) - m) / integer((hi - lo) as i128)
                    }
                };
                let a_access = alpha(&gamma_a, ga, hi_a);
                let a_private = alpha(&gamma_p, gp, hi_p);
                let r = |a: usize, p: usize| -> Rational {
                    achievable_rate(&SystemParams::from_gammas(k, l, a, p, k).unwrap()).unwrap()
                };
                let one = integer(1);
                let expected = a_access.clone()
                    * (a_private.clone() * r(ga, gp) + (one.clone() - &a_private) * r(ga, hi_p))
                    + (one.clone() - &a_access)
                        * (a_private.clone() * r(hi_a, gp) + (one.clone() - &a_private) * r(hi_a, hi_p));
                check(plan.rate == expected, || format!("{params}: rate {} vs {expected}", plan.rate))?;

                // cache accounting, N = K
                let access = a_access.clone() * integer(ga as i128) + (one.clone() - &a_access) * integer(hi_a as i128);
                let private_at = |a: usize, p: usize| {
                    let free = (k - a * l) as i64;
                    ratio(k as i128 * free as i128 * binom(free - 1, p as i64 - 1), k as i128 * binom(free, p as i64))
                };
                let private = a_access.clone()
                    * (a_private.clone() * private_at(ga, gp) + (one.clone() - &a_private) * private_at(ga, hi_p))
                    + (one.clone() - &a_access)
                        * (a_private.clone() * private_at(hi_a, gp) + (one.clone() - &a_private) * private_at(hi_a, hi_p));
                check(
                    access == gamma_a && plan.access_memory == gamma_a,
                    || format!("{params}: access memory {access} / {}", plan.access_memory),
                )?;
                check(
                    private == gamma_p && plan.private_memory == gamma_p,
                    || format!("{params}: private memory {private} / {}", plan.private_memory),
                )?;
                n += 1;
            }
        }
    }
    Ok(format!("{n} fractional points: exact convex combination, caches exactly full"))
}

fn cli_output(args: &[&str]) -> (i32, Vec<u8>) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = cli::run(std::iter::once("cwmap").chain(args.iter().copied()), &mut out, &mut err);
    (code, out)
}

fn criterion_9() -> Outcome {
    let runs: [&[&str]; 3] = [
        &["simulate", "-K", "7", "-L", "2", "-N", "7", "--ma", "1", "--mp", "1", "--worst-case"],
        &["simulate", "-K", "9", "-L", "2", "-N", "12", "--ma", "4/3", "--mp", "4/3", "--seed", "42"],
        &["sweep", "-K", "30", "-L", "3", "-N", "30", "--ma", "6,7,8,9", "--mp-from", "1", "--mp-to", "13", "--mp-step", "1/2"],
    ];
    for args in runs {
        let (code_a, a) = cli_output(args);
        let (code_b, b) = cli_output(args);
        check(code_a == 0 && code_b == 0, || format!("{args:?}: exit {code_a}/{code_b}"))?;
        check(!a.is_empty() && a == b, || format!("{args:?}: outputs differ"))?;
    }
    Ok("simulate and sweep outputs byte-identical across runs".into())
}

struct Criterion {
    id: &'static str,
    title: &'static str,
    limit: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion { id: "1", title: "first worked example", limit: Some(Duration::from_secs(1)), run: criterion_1 },
        Criterion { id: "2", title: "second worked example", limit: Some(Duration::from_secs(1)), run: criterion_2 },
        Criterion { id: "3", title: "closed form, counts, delivery and census agree", limit: Some(Duration::from_secs(120)), run: criterion_3 },
        Criterion { id: "4", title: "decodability for every distinct demand", limit: None, run: criterion_4 },
        Criterion { id: "5", title: "cut-set sandwich", limit: None, run: criterion_5 },
        Criterion { id: "6", title: "large-ring sweeps meet the bound", limit: Some(Duration::from_secs(30)), run: criterion_6 },
        Criterion { id: "7a", title: "dedicated-cache reduction without access memory", limit: None, run: criterion_7a },
        Criterion { id: "7b", title: "dedicated-cache reduction with one access cache and no private memory", limit: None, run: criterion_7b },
        Criterion { id: "8", title: "memory sharing", limit: None, run: criterion_8 },
        Criterion { id: "9", title: "deterministic output", limit: None, run: criterion_9 },
    ];
    let mut failed = Vec::new();
    for c in &criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(c.run).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(msg)
        });
        let elapsed = start.elapsed();
        let outcome = match (outcome, c.limit) {
            (Ok(_), Some(limit)) if elapsed > limit => Err(format!("took {elapsed:.2?}, limit {limit:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("PASS criterion {} ({}): {detail} [{elapsed:.2?}]", c.id, c.title),
            Err(detail) => {
                println!("FAIL criterion {} ({}): {detail} [{elapsed:.2?}]", c.id, c.title);
                failed.push(c.id);
            }
        }
    }
    println!(
        "acceptance: {} passed, {} failed{}",
        criteria.len() - failed.len(),
        failed.len(),
        if failed.is_empty() { String::new() } else { format!(" ({})", failed.join(", ")) }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}

//! Closed-form rate, cut-set lower bound, memory sharing and the
//! large-memory optimality test.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::combin::{binom, pos};
use crate::error::{Error, Result};
use crate::model::{IntegralPoint, Regime, SystemParams};
use crate::scalar::{integer, ratio, Scalar};
use crate::Rational;

/// Transmission-subset counts for one integral operating point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TransmissionCounts {
    /// Transmission-subsets (size `1 + gamma_a L + gamma_p`, at least one
    /// subfile-index set inside).
    pub c: i128,
    pub c_sc1: i128,
    pub c_sc2: i128,
    /// `(1 + gamma_p) C - gamma_p (C_SC1 + C_SC2)`.
    pub x: i128,
    /// Subpacketization.
    pub f: i128,
}

impl TransmissionCounts {
    pub fn general(&self) -> i128 {
        self.c - self.c_sc1 - self.c_sc2
    }

    pub fn rate(&self) -> Rational {
        ratio(self.x, self.f)
    }
}

fn characterized(params: &SystemParams) -> Result<IntegralPoint> {
    let (point, regime) = params.regime()?;
    if regime == Regime::Characterized {
        Ok(point)
    } else {
        Err(Error::OutOfRegime {
            regime: regime.name(),
            detail: format!(
                "closed forms need gamma_a >= 1, gamma_p < gamma_a L and 1 + gamma_a L + gamma_p <= K; got gamma_a = {}, gamma_p = {}, L = {}, K = {}",
                point.gamma_a,
                point.gamma_p,
                params.l(),
                params.k()
            ),
        })
    }
}

/// `sum_{i=1}^{g-1} C(K - 2g - 1 + i, 1 + gamma_p - g + i)`.
fn overlap_sum(k: i64, g: i64, gp: i64) -> i128 {
    (1..g).map(|i| binom(k - 2 * g - 1 + i, 1 + gp - g + i)).sum()
}

/// Subsets `I` that contain a given subfile-index set, summed over all `K`
/// sets, minus multiple counting across neighbouring sets.
fn base_count(k: i64, g: i64, gp: i64) -> i128 {
    binom(k - g, 1 + gp) + (k as i128 - 1) * binom(k - g - 1, 1 + gp) - overlap_sum(k, g, gp)
}

/// `(K - 2g)(K - 2g + 1) / 2`, clamped.
fn triangle(k: i64, g: i64) -> i128 {
    let d = (k - 2 * g) as i128;
    pos(d * (d + 1) / 2)
}

/// Count of subsets made of `S` and a disjoint second set `{u} ∪ T`,
/// clamped; the raw expression goes negative at `K = 2g`.
fn sc2_count(k: i64, g: i64) -> i128 {
    let d = (k - 2 * g - 1) as i128;
    pos((1 + g as i128) * d + (d - 1) * d / 2)
}

pub fn table1_counts(params: &SystemParams) -> Result<TransmissionCounts> {
    let point = characterized(params)?;
    let k = params.k() as i64;
    let g = point.span(params.l()) as i64;
    let gp = point.gamma_p as i64;
    let a = base_count(k, g, gp);
    let sc1_base = k as i128 * binom(k - g - 2, 1 + gp);
    let (c, c_sc1, c_sc2) = if gp < g - 1 {
        (a, sc1_base, 0)
    } else {
        let c = a - triangle(k, g) - pos((g as i128 - 1) * (k - 2 * g - 1) as i128);
        if g == 1 {
            // single-user subfile-index sets: every pair {u, s} is two disjoint sets
            (c, 0, c)
        } else {
            (c, sc1_base - k as i128 * pos((k - 2 * g - 1) as i128), sc2_count(k, g))
        }
    };
    let gp = gp as i128;
    Ok(TransmissionCounts {
        c,
        c_sc1,
        c_sc2,
        x: (1 + gp) * c - gp * (c_sc1 + c_sc2),
        f: k as i128 * binom(k - g, gp as i64),
    })
}

/// Single closed-form expression for the rate, with the `eta` correction
/// applied when `gamma_p = gamma_a L - 1`.
pub fn closed_form_rate(params: &SystemParams) -> Result<Rational> {
    let point = characterized(params)?;
    let k = params.k() as i64;
    let g = point.span(params.l()) as i64;
    let gp = point.gamma_p as i64;
    let gpi = gp as i128;
    let ki = k as i128;
    let mut numerator =
        (1 + gpi) * base_count(k, g, gp) - gpi * ki * binom(k - g - 2, 1 + gp);
    if gp == g - 1 {
        let eta = (1 + gpi) * (triangle(k, g) + pos((g as i128 - 1) * (k - 2 * g - 1) as i128))
            - gpi * ki * pos((k - 2 * g - 1) as i128)
            + gpi * sc2_count(k, g);
        numerator -= eta;
    }
    Ok(ratio(numerator, ki * binom(k - g, gp)))
}

/// Worst-case rate at an integral point.
///
/// No access memory gives the dedicated-cache rate `C(K, t+1) / C(K, t)`;
/// full coverage gives 0.
pub fn achievable_rate<T: Scalar>(params: &SystemParams) -> Result<T> {
    exact_rate(params).map(|r| T::from_rational(&r))
}

fn exact_rate(params: &SystemParams) -> Result<Rational> {
    let (point, regime) = params.regime()?;
    let k = params.k() as i64;
    match regime {
        Regime::Dedicated => {
            let t = point.gamma_p as i64;
            Ok(ratio(binom(k, t + 1), binom(k, t)))
        }
        Regime::FullCoverage => Ok(Rational::zero()),
        Regime::Characterized => {
            let counts = table1_counts(params)?;
            let closed = closed_form_rate(params)?;
            assert_eq!(
                closed,
                counts.rate(),
                "closed form and subset counts disagree at {params}"
            );
            Ok(closed)
        }
        Regime::Uncharacterized => Err(Error::OutOfRegime {
            regime: regime.name(),
            detail: format!(
                "no rate is known for gamma_p = {} >= gamma_a L = {}",
                point.gamma_p,
                point.span(params.l())
            ),
        }),
    }
}

/// `max_s [s - (min(s+L-1, K) M_a + s M_p) / floor(N/s)]`, floored at 0.
pub fn cutset_bound<T: Scalar>(params: &SystemParams) -> T {
    T::from_rational(&exact_bound(params))
}

fn exact_bound(params: &SystemParams) -> Rational {
    let (k, l, n) = (params.k(), params.l(), params.n());
    (1..=k)
        .map(|s| {
            let reach = (s + l - 1).min(k);
            let stored = params.ma() * integer(reach as i128) + params.mp() * integer(s as i128);
            integer(s as i128) - stored / integer((n / s) as i128)
        })
        .fold(Rational::zero(), crate::scalar::larger)
}

/// `M_a L + M_p >= N (1 - 1/K)`.
pub fn is_optimal(params: &SystemParams) -> bool {
    let k = integer(params.k() as i128);
    let n = integer(params.n() as i128);
    let total = params.ma() * integer(params.l() as i128) + params.mp();
    total >= n.clone() - n / k
}

/// One integral operating point used by memory sharing.
#[derive(Clone, Debug, PartialEq)]
pub struct SharingCorner<T> {
    pub gamma_a: usize,
    pub gamma_p: usize,
    pub access_memory: Rational,
    pub private_memory: Rational,
    /// Fraction of every file served by this corner.
    pub weight: T,
    pub rate: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MemorySharePlan<T> {
    /// Share of the lower access corner; 1 when `gamma_a` is integral.
    pub alpha_access: T,
    /// Share of the lower private corner; 1 when `gamma_p` is integral.
    pub alpha_private: T,
    pub corners: Vec<SharingCorner<T>>,
    /// Access-cache contents in files, summed over corners.
    pub access_memory: T,
    /// Private-cache contents in files, summed over corners.
    pub private_memory: T,
    pub rate: T,
}

/// Lower and upper integral neighbours of `gamma` and the weight of the
/// lower one.
fn bracket(gamma: &Rational) -> Vec<(usize, Rational)> {
    let lo = gamma.floor();
    let hi = gamma.ceil();
    let as_usize = |r: &Rational| r.to_integer().try_into().expect("non-negative gamma");
    if lo == hi {
        vec![(as_usize(&lo), Rational::one())]
    } else {
        let alpha = hi.clone() - gamma;
        vec![
            (as_usize(&lo), alpha.clone()),
            (as_usize(&hi), Rational::one() - alpha),
        ]
    }
}

/// Private-cache size in files for the placement at `(gamma_a, gamma_p)`.
fn private_files(k: usize, l: usize, n: usize, gamma_a: usize, gamma_p: usize) -> Rational {
    let free = (k - gamma_a * l) as i64;
    let gp = gamma_p as i64;
    let den = k as i128 * binom(free, gp);
    ratio(n as i128 * free as i128 * binom(free - 1, gp - 1), den)
}

/// Splits a fractional operating point across its integral neighbours.
pub fn memory_share<T: Scalar>(params: &SystemParams) -> Result<MemorySharePlan<T>> {
    let (k, l, n) = (params.k(), params.l(), params.n());
    let access = bracket(&params.gamma_a());
    let private = bracket(&params.gamma_p());

    let mut corners = Vec::new();
    let mut rate = T::zero();
    for (ga, wa) in &access {
        let mut inner = T::zero();
        for (gp, wp) in &private {
            let ma = ratio((n * ga) as i128, k as i128);
            let mp = ratio((n * gp) as i128, k as i128);
            let corner = SystemParams::new(k, l, ma.clone(), mp.clone(), n)?;
            let (_, regime) = corner.regime().map_err(|e| corner_error(&corner, e.to_string()))?;
            if regime == Regime::Uncharacterized {
                return Err(corner_error(
                    &corner,
                    format!("gamma_p = {gp} is not below gamma_a L = {}", ga * l),
                ));
            }
            let corner_rate = achievable_rate::<T>(&corner)?;
            inner = inner + T::from_rational(wp) * corner_rate.clone();
            corners.push(SharingCorner {
                gamma_a: *ga,
                gamma_p: *gp,
                access_memory: ma,
                private_memory: private_files(k, l, n, *ga, *gp),
                weight: T::from_rational(&(wa.clone() * wp)),
                rate: corner_rate,
            });
        }
        rate = rate + T::from_rational(wa) * inner;
    }

    let mut access_memory = Rational::zero();
    let mut private_memory = Rational::zero();
    for c in &corners {
        let weight = weight_of(&access, c.gamma_a) * weight_of(&private, c.gamma_p);
        access_memory += weight.clone() * &c.access_memory;
        private_memory += weight * &c.private_memory;
    }
    Ok(MemorySharePlan {
        alpha_access: T::from_rational(&access[0].1),
        alpha_private: T::from_rational(&private[0].1),
        corners,
        access_memory: T::from_rational(&access_memory),
        private_memory: T::from_rational(&private_memory),
        rate,
    })
}

fn weight_of(side: &[(usize, Rational)], gamma: usize) -> Rational {
    side.iter()
        .find(|(g, _)| *g == gamma)
        .map(|(_, w)| w.clone())
        .expect("corner on bracket")
}

fn corner_error(corner: &SystemParams, why: String) -> Error {
    Error::OutOfRegime {
        regime: "memory-sharing corner",
        detail: format!("corner {corner} is unusable: {why}"),
    }
}

/// Rate and bound at one memory pair.
#[derive(Clone, Debug, PartialEq)]
pub struct RatePoint<T> {
    pub ma: Rational,
    pub mp: Rational,
    pub rate: T,
    pub lower_bound: T,
    /// The rate meets the lower bound.
    pub optimal: bool,
    /// Whether memory sharing was needed.
    pub shared: bool,
}

/// Evaluates the achievable rate (memory sharing for fractional `gamma`)
/// and the cut-set bound.
pub fn rate_point<T: Scalar>(params: &SystemParams) -> Result<RatePoint<T>> {
    let shared = params.integral().is_none();
    let rate: Rational = if shared {
        memory_share::<Rational>(params)?.rate
    } else {
        exact_rate(params)?
    };
    let bound = exact_bound(params);
    Ok(RatePoint {
        ma: params.ma().clone(),
        mp: params.mp().clone(),
        optimal: rate == bound,
        rate: T::from_rational(&rate),
        lower_bound: T::from_rational(&bound),
        shared,
    })
}

//! Rate/bound sweeps over a grid of access and private memory sizes.

use std::io::Write;

use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{cutset_bound, rate_point};
use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::scalar::{format_decimal, format_rational};
use crate::Rational;

/// Environment variable that caps worker threads.
pub const THREADS_ENV: &str = "CWMAP_THREADS";

const DECIMAL_PLACES: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub k: usize,
    pub l: usize,
    pub n: usize,
    pub access: Vec<Rational>,
    pub private_from: Rational,
    pub private_to: Rational,
    pub private_step: Rational,
}

impl SweepSpec {
    /// Grid points in output order: access memory outer, private inner.
    pub fn points(&self) -> Result<Vec<(Rational, Rational)>> {
        if self.private_step <= Rational::zero() {
            return Err(Error::InvalidParams("private-memory step must be positive".into()));
        }
        let mut private = Vec::new();
        let mut mp = self.private_from.clone();
        while mp <= self.private_to {
            private.push(mp.clone());
            mp += &self.private_step;
        }
        Ok(self
            .access
            .iter()
            .flat_map(|ma| private.iter().map(move |mp| (ma.clone(), mp.clone())))
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SweepRow {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "Ma")]
    pub ma: String,
    #[serde(rename = "Mp")]
    pub mp: String,
    pub gamma_a: String,
    pub gamma_p: String,
    pub rate_num: Option<String>,
    pub rate_den: Option<String>,
    pub rate: Option<String>,
    pub bound_num: Option<String>,
    pub bound_den: Option<String>,
    pub bound: Option<String>,
    pub optimal: Option<bool>,
    pub note: String,
}

impl SweepRow {
    fn skipped(spec: &SweepSpec, ma: &Rational, mp: &Rational, why: String) -> Self {
        let gamma = |m: &Rational| format_rational(&(m * Rational::from_integer(spec.k.into()) / Rational::from_integer(spec.n.into())));
        SweepRow {
            k: spec.k,
            l: spec.l,
            n: spec.n,
            ma: format_rational(ma),
            mp: format_rational(mp),
            gamma_a: gamma(ma),
            gamma_p: gamma(mp),
            rate_num: None,
            rate_den: None,
            rate: None,
            bound_num: None,
            bound_den: None,
            bound: None,
            optimal: None,
            note: format!("skipped: {why}"),
        }
    }

    pub fn is_skipped(&self) -> bool {
        self.rate.is_none()
    }
}

fn evaluate(spec: &SweepSpec, ma: &Rational, mp: &Rational) -> SweepRow {
    let params = match SystemParams::new(spec.k, spec.l, ma.clone(), mp.clone(), spec.n) {
        Ok(p) => p,
        Err(e) => return SweepRow::skipped(spec, ma, mp, e.to_string()),
    };
    let mut row = SweepRow::skipped(spec, ma, mp, String::new());
    let bound: Rational = cutset_bound(&params);
    row.bound_num = Some(bound.numer().to_string());
    row.bound_den = Some(bound.denom().to_string());
    row.bound = Some(format_decimal(&bound, DECIMAL_PLACES));
    match rate_point::<Rational>(&params) {
        Ok(point) => {
            row.rate_num = Some(point.rate.numer().to_string());
            row.rate_den = Some(point.rate.denom().to_string());
            row.rate = Some(format_decimal(&point.rate, DECIMAL_PLACES));
            row.optimal = Some(point.optimal);
            row.note = if point.shared { "memory sharing".into() } else { String::new() };
        }
        Err(e) => row.note = format!("skipped: {e}"),
    }
    row
}

/// Runs `job` on a pool sized by [`THREADS_ENV`], or rayon's default.
pub fn with_thread_cap<R: Send>(job: impl FnOnce() -> R + Send) -> R {
    let cap = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0);
    match cap.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(job),
        None => job(),
    }
}

/// One row per grid point, in grid order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let points = spec.points()?;
    Ok(with_thread_cap(|| {
        points
            .par_iter()
            .map(|(ma, mp)| evaluate(spec, ma, mp))
            .collect()
    }))
}

pub fn write_rows<W: Write>(rows: &[SweepRow], format: OutputFormat, out: W) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut writer = csv::Writer::from_writer(out);
            for row in rows {
                writer.serialize(row)?;
            }
            writer.flush()?;
        }
        OutputFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, rows)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

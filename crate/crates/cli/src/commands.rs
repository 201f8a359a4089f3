use std::fmt::Write as _;
use std::path::Path;

use knotenum::analysis::{self, FitWindow};
use knotenum::fixtures;
use knotenum::series::{
    renormalize, sigma1_from_G, sigma2_from_G, SeriesError, TruncatedSeries, TruncatedSeries2,
};
use knotenum::table::crt_combine;
use knotenum::transfer::{Arithmetic, CheckpointConfig};
use knotenum::{enumerate as run_enumeration, CoefficientTable, EnumerationOptions, RunControl, TangencyCutoff};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::{json, Value};

use crate::output::{emit, envelope, read_series, read_table, write_atomic, render, Cache};
use crate::{CombineArgs, DeriveArgs, EnumerateArgs, Failure, FitArgs, FlypeArgs};

fn with_threads<C: Serialize>(config: &C, threads: Option<usize>) -> Value {
    let mut v = serde_json::to_value(config).expect("arguments serialize");
    v["threads"] = json!(threads);
    v
}

fn series_error(e: SeriesError) -> Failure {
    match e {
        SeriesError::MissingCoefficient { .. }
        | SeriesError::NotExact
        | SeriesError::BadConstant
        | SeriesError::Format(_) => Failure::config(e.to_string()),
        _ => Failure::mismatch(e.to_string()),
    }
}

pub fn enumeration_options(a: &EnumerateArgs) -> Result<EnumerationOptions, Failure> {
    let tangencies = match (a.tangency_max, a.tangency_slack) {
        (Some(k), _) => TangencyCutoff::Max(k),
        (None, Some(slack)) => TangencyCutoff::PowerCounting { slack },
        (None, None) => TangencyCutoff::Off,
    };
    let arithmetic = if a.moduli.is_empty() {
        Arithmetic::Exact
    } else {
        Arithmetic::Residues {
            moduli: a.moduli.clone(),
        }
    };
    let o = EnumerationOptions {
        max_order: a.p,
        tangencies,
        allow_tadpoles: a.tadpoles,
        first_return: a.first_return,
        arithmetic,
    };
    o.check()?;
    Ok(o)
}

/// Runs or fetches from the cache. Cached runs also checkpoint there.
pub fn table_for(
    options: &EnumerationOptions,
    cache_dir: Option<&Path>,
    max_states: Option<usize>,
) -> Result<CoefficientTable, Failure> {
    let cache = cache_dir.map(|d| Cache::new(d, options));
    if let Some(hit) = cache.as_ref().and_then(Cache::load) {
        if &hit.options == options {
            return Ok(hit);
        }
    }
    if let Some(dir) = cache_dir {
        std::fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
    }
    let control = RunControl {
        max_states,
        checkpoint: cache.as_ref().map(|c| CheckpointConfig {
            path: c.checkpoint_path(),
            every: 2,
            resume: true,
        }),
    };
    let table = run_enumeration(options, &control)?;
    if let Some(c) = &cache {
        c.store(&table)?;
    }
    Ok(table)
}

pub fn enumerate(a: &EnumerateArgs, threads: Option<usize>) -> Result<(), Failure> {
    let options = enumeration_options(a)?;
    let table = table_for(&options, a.cache_dir.as_deref(), a.max_states)?;
    let doc = envelope("enumerate", &with_threads(a, threads), table.to_json_value());
    emit(a.out.as_deref(), &doc)
}

pub fn combine(a: &CombineArgs) -> Result<(), Failure> {
    let tables = a
        .inputs
        .iter()
        .map(|p| read_table(p))
        .collect::<Result<Vec<_>, _>>()?;
    let table = crt_combine(&tables).map_err(|e| Failure::config(e.to_string()))?;
    emit(a.out.as_deref(), &envelope("combine", a, table.to_json_value()))
}

fn fixture_g() -> TruncatedSeries {
    TruncatedSeries::from_integers(fixtures::two_leg_counts().into_iter().map(|r| r.g))
}

/// Writes one file per named series into `dir`, or a single document.
fn emit_series<C: Serialize>(
    command: &str,
    config: &C,
    out: Option<&Path>,
    parts: &[(&str, &TruncatedSeries)],
    extra: Value,
) -> Result<(), Failure> {
    match out {
        Some(dir) => {
            for (name, s) in parts {
                let doc = envelope(command, config, s.to_json_value());
                write_atomic(&dir.join(format!("{name}.json")), &render(&doc))?;
            }
            if !extra.is_null() {
                let doc = envelope(command, config, extra);
                write_atomic(&dir.join("summary.json"), &render(&doc))?;
            }
            Ok(())
        }
        None => {
            let mut result = serde_json::Map::new();
            for (name, s) in parts {
                result.insert(name.to_string(), s.to_json_value());
            }
            if let Value::Object(m) = extra {
                result.extend(m);
            }
            emit(None, &envelope(command, config, Value::Object(result)))
        }
    }
}

pub fn derive(a: &DeriveArgs) -> Result<(), Failure> {
    let g = match &a.input {
        Some(p) => read_series(p)?,
        None => fixture_g(),
    };
    let s1 = sigma1_from_G(&g).map_err(series_error)?;
    let s2 = sigma2_from_G(&g).map_err(series_error)?;
    emit_series("derive", a, a.out.as_deref(), &[("sigma1", &s1), ("sigma2", &s2)], Value::Null)
}

fn fixture_two_variable() -> TruncatedSeries2 {
    TruncatedSeries2::from_map(
        fixtures::two_variable_counts(12)
            .into_iter()
            .map(|(i, v)| (i, BigRational::from_integer(BigInt::from(v))))
            .collect(),
    )
}

pub fn flype(a: &FlypeArgs, threads: Option<usize>) -> Result<(), Failure> {
    let g = if a.fixture {
        fixture_two_variable()
    } else {
        let table = match &a.input {
            Some(p) => read_table(p)?,
            None => {
                let options = EnumerationOptions::for_renormalization(a.p);
                options.check()?;
                table_for(&options, a.cache_dir.as_deref(), a.max_states)?
            }
        };
        TruncatedSeries2::from_table(&table).map_err(series_error)?
    };
    let sol = renormalize(&g, a.p).map_err(series_error)?;
    let tangles = sol.tangles();
    emit_series(
        "flype",
        &with_threads(a, threads),
        a.out.as_deref(),
        &[("gamma1", &sol.gamma1), ("gamma2", &sol.gamma2), ("tangles", &tangles)],
        json!({ "iterations": sol.iterations }),
    )
}

fn to_floats(s: &TruncatedSeries) -> Vec<f64> {
    s.coeffs().iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()
}

fn analysis_error(e: analysis::AnalysisError) -> Failure {
    Failure::config(e.to_string())
}

pub fn fit(a: &FitArgs) -> Result<(), Failure> {
    let series = match &a.input {
        Some(p) => read_series(p)?,
        None => fixture_g(),
    };
    let coeffs = to_floats(&series);
    let window = FitWindow {
        start: a.fit_window.start,
        end: a.fit_window.end,
    };
    let ratio = analysis::estimate_mu(&coeffs).map_err(analysis_error)?;
    let fit = analysis::fit_log_correction(&coeffs, window).map_err(analysis_error)?;
    let plain = analysis::fit_power_law(&coeffs, window).map_err(analysis_error)?;
    // the identity needs G itself, which starts with 1
    let asymptotics = if coeffs.first() == Some(&1.0) {
        analysis::mu2_from_identity(&coeffs, &fit).ok()
    } else {
        None
    };
    let oscillation = analysis::oscillation_diagnostic(&coeffs);

    let mut table = String::new();
    let mut row = |name: &str, value: f64, err: Option<f64>| {
        let err = err.map(|e| format!("{e:.6}")).unwrap_or_default();
        writeln!(table, "{name:<22} {value:>14.6} {err:>12}").expect("string write");
    };
    row("mu (ratio)", ratio.mu, Some(ratio.uncertainty));
    row("mu", fit.mu, Some(fit.errors[0]));
    row("alpha", fit.alpha, Some(fit.errors[1]));
    row("a", fit.a, Some(fit.errors[2]));
    row("b", fit.b, Some(fit.errors[3]));
    row("2 - alpha", 2.0 - fit.alpha, Some(fit.errors[1]));
    row("mu (no amplitude)", plain.mu, None);
    row("alpha (no amplitude)", plain.alpha, None);
    if let Some(r) = &asymptotics {
        row("G(1/mu)", r.g_at_gc, Some(r.g_error));
        row("mu2", r.mu2, Some(r.mu2_error));
    }

    let doc = envelope(
        "fit",
        a,
        json!({
            "ratio": ratio,
            "log_corrected": fit,
            "power_law": plain,
            "asymptotics": asymptotics,
            "oscillation": oscillation,
        }),
    );
    match &a.out {
        Some(p) => {
            write_atomic(p, &render(&doc))?;
            print!("{table}");
        }
        None => {
            print!("{}", render(&doc));
            eprint!("{table}");
        }
    }
    Ok(())
}

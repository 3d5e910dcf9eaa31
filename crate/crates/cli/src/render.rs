//! Human tables and JSON-lines records.

use std::io::{self, Write};

use scour_core::data::FeatureStats;
use scour_core::gradcheck::GradCheckReport;
use scour_core::MetricsReport;
use serde_json::{json, Value};

use crate::args::Format;

pub fn json_line(out: &mut dyn Write, value: &Value) -> io::Result<()> {
    writeln!(out, "{value}")
}

pub fn metrics_record(model: &str, r: &MetricsReport) -> Value {
    json!({ "model": model, "cc": r.cc, "rmse_m": r.rmse, "mae_m": r.mae, "n": r.n })
}

/// One line: `<model>  cc 0.9612  rmse_m 0.1544  mae_m 0.1120  n 78`.
pub fn metrics(
    out: &mut dyn Write,
    format: Format,
    model: &str,
    r: &MetricsReport,
) -> io::Result<()> {
    match format {
        Format::JsonLines => json_line(out, &metrics_record(model, r)),
        Format::Human => writeln!(
            out,
            "{model}  cc {:.4}  rmse_m {:.4}  mae_m {:.4}  n {}",
            r.cc, r.rmse, r.mae, r.n
        ),
    }
}

/// Min, max, mean and standard deviation per column, one block per partition.
pub fn summary(
    out: &mut dyn Write,
    format: Format,
    blocks: &[(&str, FeatureStats)],
) -> io::Result<()> {
    match format {
        Format::JsonLines => {
            for (part, stats) in blocks {
                for c in &stats.columns {
                    json_line(
                        out,
                        &json!({
                            "partition": part, "column": c.name, "n": stats.n,
                            "min": c.min, "max": c.max, "mean": c.mean, "std": c.std,
                        }),
                    )?;
                }
            }
            Ok(())
        }
        Format::Human => {
            write!(out, "{:<10}", "Parameter")?;
            for (part, stats) in blocks {
                write!(out, "  {:<38}", format!("{part} (n = {})", stats.n))?;
            }
            writeln!(out)?;
            write!(out, "{:<10}", "")?;
            for _ in blocks {
                write!(
                    out,
                    "  {:>8} {:>9} {:>9} {:>9}",
                    "Min", "Max", "Mean", "St. dev."
                )?;
            }
            writeln!(out)?;
            let columns = blocks.first().map_or(0, |(_, s)| s.columns.len());
            for i in 0..columns {
                write!(out, "{:<10}", blocks[0].1.columns[i].name)?;
                for (_, stats) in blocks {
                    let c = &stats.columns[i];
                    write!(
                        out,
                        "  {:>8.2} {:>9.2} {:>9.2} {:>9.2}",
                        c.min, c.max, c.mean, c.std
                    )?;
                }
                writeln!(out)?;
            }
            Ok(())
        }
    }
}

/// Two model rows with RMSE, MAE and CC columns.
pub fn comparison(
    out: &mut dyn Write,
    format: Format,
    rows: &[(&str, MetricsReport)],
) -> io::Result<()> {
    match format {
        Format::JsonLines => {
            for (model, r) in rows {
                json_line(out, &metrics_record(model, r))?;
            }
            Ok(())
        }
        Format::Human => {
            writeln!(
                out,
                "{:<32}  {:>8}  {:>8}  {:>8}",
                "Modelling approach", "RMSE (m)", "MAE (m)", "CC"
            )?;
            for (model, r) in rows {
                writeln!(
                    out,
                    "{model:<32}  {:>8.3}  {:>8.3}  {:>8.3}",
                    r.rmse, r.mae, r.cc
                )?;
            }
            Ok(())
        }
    }
}

pub fn gradcheck(
    out: &mut dyn Write,
    format: Format,
    net: &str,
    report: &GradCheckReport,
) -> io::Result<()> {
    match format {
        Format::JsonLines => {
            for l in &report.layers {
                json_line(
                    out,
                    &json!({
                        "net": net, "layer": l.layer, "parameters": l.parameters,
                        "max_relative_error": l.max_relative_error,
                        "max_absolute_error": l.max_absolute_error,
                    }),
                )?;
            }
            json_line(
                out,
                &json!({
                    "net": net, "max_relative_error": report.max_relative_error(),
                    "max_absolute_error": report.max_absolute_error(),
                    "point_seed": report.point_seed, "kink_distance": report.kink_distance,
                    "passed": report.passed(),
                }),
            )
        }
        Format::Human => {
            writeln!(out, "{net} (point seed {})", report.point_seed)?;
            for l in &report.layers {
                writeln!(
                    out,
                    "  layer {}  params {:>3}  max rel {:.3e}  max abs {:.3e}",
                    l.layer, l.parameters, l.max_relative_error, l.max_absolute_error
                )?;
            }
            if let Some(d) = report.kink_distance {
                writeln!(out, "  nearest relu kink {d:.3e}")?;
            }
            writeln!(
                out,
                "  max relative error {:.3e}  {}",
                report.max_relative_error(),
                if report.passed() { "PASS" } else { "FAIL" }
            )
        }
    }
}

//! JSON and CSV serialization of experiment results.

use std::fmt::Write as _;
use std::path::Path;

use super::{ExperimentResult, OutputFormat};
use crate::error::Result;

pub fn to_json(result: &ExperimentResult) -> Result<String> {
    Ok(serde_json::to_string_pretty(result)?)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Flat table for plotting. Training experiments give one row per
/// (point, repeat, iteration); the variance scan one row per qubit count,
/// carrying the fitted line; the depth report one row per pair.
pub fn to_csv(result: &ExperimentResult) -> String {
    let mut out = String::new();
    if let Some(bp) = &result.bp {
        let (slope, intercept) = bp.fit.map(|f| (Some(f.slope), Some(f.intercept))).unwrap_or((None, None));
        out.push_str("n_qubits,variance,ln_variance,slope,intercept\n");
        for p in &bp.points {
            let _ = writeln!(out, "{},{},{},{},{}", p.n_qubits, p.variance, p.ln_variance, opt(slope), opt(intercept));
        }
    } else if let Some(rows) = &result.depth {
        out.push_str("target,n_qubits,ansatz,layers,dag_depth,table_depth,target_depth,final_cost,converged\n");
        for r in rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.target,
                r.n_qubits,
                r.ansatz,
                r.layers,
                r.dag_depth,
                r.table_depth,
                r.target_depth.map(|d| d.to_string()).unwrap_or_default(),
                opt(r.final_cost),
                r.converged
            );
        }
    } else {
        out.push_str("n_qubits,layers,epsilon,mitigated,repeat,iteration,cost\n");
        for p in &result.points {
            for r in &p.repeats {
                let Some(trace) = &r.trace else { continue };
                for (i, c) in trace.cost_history.iter().enumerate() {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{}",
                        p.n_qubits,
                        p.layers,
                        opt(p.epsilon),
                        p.mitigated,
                        r.repeat,
                        i + 1,
                        c
                    );
                }
            }
        }
    }
    out
}

/// Writes the result to `path` in the requested format.
pub fn emit(result: &ExperimentResult, format: OutputFormat, path: &Path) -> Result<()> {
    let text = match format {
        OutputFormat::Json => to_json(result)?,
        OutputFormat::Csv => to_csv(result),
    };
    std::fs::write(path, text)?;
    Ok(())
}

//! Rendering of command results as CSV, JSON or an aligned text table.

use clap::ValueEnum;
use gigecon_core::experiments::SweepResult;
use gigecon_core::foc::{DiscrepancyReport, FocResiduals, StrictSolution};
use gigecon_core::statics::{Agreement, ErratumReport};
use gigecon_core::steady_state::LevelPath;
use gigecon_core::tables::{Reproduction, TableId, Tolerance, TABLE_COLUMNS};
use gigecon_core::{
    AuxiliaryConstants, DerivativeSet, EconomyParams, ParamField, Sector, SignConstants, SignReport, SteadyState,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
    Table,
}

fn sci(v: f64) -> String {
    format!("{v:e}")
}

/// Shortest round-trip decimal, switching to scientific notation for tiny
/// and huge magnitudes.
fn full(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e7).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn csv_doc(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

fn json_doc(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn text_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        padded.join("  ").trim_end().to_owned() + "\n"
    };
    let mut out = line(header.to_vec());
    for row in rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
    }
    out
}

fn policy_json(cfg: &RunConfig) -> Value {
    json!(cfg.policy)
}

pub fn solve(
    cfg: &RunConfig,
    params: &EconomyParams,
    constants: &AuxiliaryConstants,
    ss: &SteadyState,
    path: Option<&LevelPath>,
) -> String {
    let path_cols = ["t", "N", "K", "Y_p", "Y_d", "Y"];
    let path_vals = path.map(|p| [p.t, p.n, p.k, p.y_p, p.y_d, p.y]);
    match cfg.format {
        Format::Csv => {
            let mut header: Vec<&str> = SteadyState::FIELD_NAMES.to_vec();
            let mut row: Vec<String> = ss.values().iter().copied().map(sci).collect();
            if let Some(vals) = path_vals {
                header.extend(path_cols);
                row.extend(vals.iter().copied().map(sci));
            }
            csv_doc(&header, [row])
        }
        Format::Json => {
            let mut doc = json!({
                "policy": policy_json(cfg),
                "params": params.to_raw(),
                "constants": constants,
                "steady_state": ss,
            });
            if let Some(p) = path {
                doc["level_path"] = json!(p);
            }
            json_doc(&doc)
        }
        Format::Table => {
            let mut rows: Vec<Vec<String>> =
                SteadyState::FIELD_NAMES.iter().zip(ss.values()).map(|(n, v)| vec![(*n).to_owned(), full(v)]).collect();
            if let Some(vals) = path_vals {
                rows.extend(path_cols.iter().zip(vals).map(|(n, v)| vec![(*n).to_owned(), full(v)]));
            }
            text_table(&["field", "value"], &rows)
        }
    }
}

pub fn verify(
    cfg: &RunConfig,
    sol: &StrictSolution,
    closed_residuals: &FocResiduals,
    report: &DiscrepancyReport,
) -> String {
    match cfg.format {
        Format::Csv => csv_doc(
            &["field", "closed", "strict", "rel_diff"],
            report.fields.iter().map(|f| vec![f.field.clone(), sci(f.closed), sci(f.strict), sci(f.rel_diff)]),
        ),
        Format::Json => json_doc(&json!({
            "policy": policy_json(cfg),
            "options": cfg.strict,
            "termination": sol.termination,
            "iterations": sol.iterations(),
            "trace": sol.trace,
            "residuals": sol.residuals,
            "closed_form_residuals": closed_residuals,
            "discrepancy": report.fields,
            "max_rel_diff": report.max_rel_diff(),
        })),
        Format::Table => {
            let rows: Vec<Vec<String>> = report
                .fields
                .iter()
                .map(|f| vec![f.field.clone(), full(f.closed), full(f.strict), format!("{:.3e}", f.rel_diff)])
                .collect();
            let mut out = format!(
                "termination: {:?} after {} iterations, relative residual {:.3e}\n\n",
                sol.termination,
                sol.iterations(),
                sol.residuals.relative_sup_norm()
            );
            out.push_str(&text_table(&["field", "closed", "strict", "rel_diff"], &rows));
            let names = ["r_c", "r_u", "r_hp", "r_hd", "r_lambda", "r_k"];
            let res_rows: Vec<Vec<String>> = names
                .iter()
                .zip(closed_residuals.relative.as_array().iter().zip(sol.residuals.relative.as_array()))
                .map(|(n, (c, s))| vec![(*n).to_owned(), format!("{c:.3e}"), format!("{s:.3e}")])
                .collect();
            out.push('\n');
            out.push_str(&text_table(&["residual", "closed", "strict"], &res_rows));
            out
        }
    }
}

fn sector_name(s: Sector) -> &'static str {
    match s {
        Sector::Physical => "physical",
        Sector::Gig => "gig",
    }
}

pub fn statics(
    cfg: &RunConfig,
    sc: &SignConstants,
    signs: &SignReport,
    derivs: &[(Sector, DerivativeSet, DerivativeSet)],
    agreement: &[Agreement],
    erratum: &ErratumReport,
) -> String {
    let agreement_rows = || {
        agreement.iter().map(|a| {
            vec![
                sector_name(a.sector).to_owned(),
                a.field.clone(),
                sci(a.analytic),
                sci(a.finite_difference),
                sci(a.rel_diff),
                a.pass.to_string(),
            ]
        })
    };
    let header = ["sector", "field", "analytic", "finite_difference", "rel_diff", "pass"];
    match cfg.format {
        Format::Csv => csv_doc(&header, agreement_rows()),
        Format::Json => {
            let derivatives: serde_json::Map<String, Value> = derivs
                .iter()
                .map(|(s, a, f)| (sector_name(*s).to_owned(), json!({ "analytic": a, "finite_difference": f })))
                .collect();
            json_doc(&json!({
                "policy": policy_json(cfg),
                "sign_constants": sc,
                "predicted_signs": signs,
                "derivatives": derivatives,
                "agreement": agreement,
                "erratum": erratum,
            }))
        }
        Format::Table => {
            let mut out = format!(
                "M4 = {:e} ({})  M5 = {:e} ({})  M6 = {:e} ({})  M7 = {:e} ({})\n",
                sc.m4,
                signs.y_wrt_a_p.symbol(),
                sc.m5,
                signs.c_wrt_a_p.symbol(),
                sc.m6,
                signs.y_wrt_a_d.symbol(),
                sc.m7,
                signs.c_wrt_a_d.symbol()
            );
            out.push_str(&format!("printed M4 = {:e}  printed M5 = {:e}\n\n", sc.printed_m4, sc.printed_m5));
            out.push_str(&text_table(&header, &agreement_rows().collect::<Vec<_>>()));
            out
        }
    }
}

pub fn sweep(cfg: &RunConfig, fields: &[ParamField], result: &SweepResult) -> String {
    let mut header: Vec<String> = vec!["label".into(), "digest".into(), "feasible".into()];
    header.extend(fields.iter().map(|f| f.key().to_owned()));
    header.extend(SteadyState::FIELD_NAMES.iter().map(|s| (*s).to_owned()));
    let render = |v: f64, fmt: &dyn Fn(f64) -> String| fmt(v);
    let rows = |fmt: &dyn Fn(f64) -> String| -> Vec<Vec<String>> {
        result
            .table
            .rows
            .iter()
            .map(|r| {
                let mut row = vec![r.label.clone(), r.digest.clone(), r.is_feasible().to_string()];
                row.extend(fields.iter().map(|f| render(r.params.get(*f), fmt)));
                match r.steady_state() {
                    Some(ss) => row.extend(ss.values().iter().map(|v| render(*v, fmt))),
                    None => row.extend(std::iter::repeat_n(String::new(), SteadyState::FIELD_NAMES.len())),
                }
                row
            })
            .collect()
    };
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    match cfg.format {
        Format::Csv => csv_doc(&header_refs, rows(&sci)),
        Format::Json => json_doc(&json!({
            "policy": policy_json(cfg),
            "fields": fields,
            "rows": result.table.rows,
            "monotonicity": result.monotonicity,
        })),
        Format::Table => {
            let mut out = text_table(&header_refs, &rows(&full));
            out.push('\n');
            let trend_rows: Vec<Vec<String>> =
                result.monotonicity.columns.iter().map(|c| vec![c.field.clone(), c.trend.to_string()]).collect();
            out.push_str(&text_table(&["field", "trend"], &trend_rows));
            out
        }
    }
}

fn tolerance_parts(t: Tolerance) -> (&'static str, f64) {
    match t {
        Tolerance::Absolute(v) => ("absolute", v),
        Tolerance::Relative(v) => ("relative", v),
    }
}

pub fn reproduce(cfg: &RunConfig, r: &Reproduction) -> String {
    match cfg.format {
        Format::Csv => csv_doc(
            &["row", "column", "printed", "computed", "deviation", "tolerance_kind", "tolerance", "pass"],
            r.rows.iter().flat_map(|row| {
                row.cells.iter().map(|c| {
                    let (kind, bound) = tolerance_parts(c.tolerance);
                    vec![
                        row.label.clone(),
                        c.column.clone(),
                        c.printed_text.clone(),
                        sci(c.computed),
                        sci(c.deviation),
                        kind.to_owned(),
                        sci(bound),
                        c.pass.to_string(),
                    ]
                })
            }),
        ),
        Format::Json => {
            let rows: Vec<Value> = r
                .rows
                .iter()
                .map(|row| {
                    json!({
                        "label": row.label,
                        "feasible": row.feasible,
                        "pass": row.pass(),
                        "max_deviation": row.max_deviation(),
                        "worst_ratio": row.worst_ratio(),
                        "cells": row.cells,
                    })
                })
                .collect();
            json_doc(&json!({
                "table": r.table,
                "policy": policy_json(cfg),
                "tolerances": cfg.tolerances,
                "pass": r.pass(),
                "rows": rows,
            }))
        }
        Format::Table => {
            let (inputs, fmt): (&[&str], fn(f64) -> String) = match r.table {
                TableId::One => (&["A_p", "A_d"], |v| format!("{v:.3}")),
                TableId::Two => (&["b1", "b2", "b3"], full),
            };
            let computed = r.table.compute(r.policy);
            let mut header = vec!["case"];
            header.extend(inputs);
            header.extend(TABLE_COLUMNS);
            header.extend(["max_dev", "pass"]);
            let rows: Vec<Vec<String>> = r
                .rows
                .iter()
                .zip(&computed.rows)
                .map(|(cmp, row)| {
                    let mut cells = vec![cmp.label.clone()];
                    cells.extend(inputs.iter().map(|k| {
                        let field: ParamField = k.parse().expect("known key");
                        format!("{}", row.params.get(field))
                    }));
                    cells.extend(cmp.cells.iter().map(|c| fmt(c.computed)));
                    cells.push(format!("{:.2e}", cmp.max_deviation()));
                    cells.push(cmp.pass().to_string());
                    cells
                })
                .collect();
            let mut out = text_table(&header, &rows);
            let failures: Vec<_> = r.failures().collect();
            if !failures.is_empty() {
                out.push('\n');
                let fail_rows: Vec<Vec<String>> = failures
                    .iter()
                    .map(|(label, c)| {
                        let (kind, bound) = tolerance_parts(c.tolerance);
                        vec![
                            (*label).to_owned(),
                            c.column.clone(),
                            c.printed_text.clone(),
                            full(c.computed),
                            format!("{:.3e}", c.deviation),
                            format!("{kind} {bound:e}"),
                        ]
                    })
                    .collect();
                out.push_str(&text_table(
                    &["case", "column", "printed", "computed", "deviation", "tolerance"],
                    &fail_rows,
                ));
            }
            out
        }
    }
}

//! Text and tree renderings of a chain run.

use std::fmt::Write;

use serde_json::{json, Value};

use crate::chain::{ChainReport, Constraint, EigenRecord, Termination, Truncation};
use crate::expr::{Expression, Rational};
use crate::lattice::SiteForm;
use crate::oracle::{DiracResult, SpanVerdict};

/// Chain-versus-oracle outcome embedded in a report.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub oracle: DiracResult,
    pub verdict: SpanVerdict,
}

/// Everything a report shows.
#[derive(Debug, Clone, Copy)]
pub struct ReportInput<'a> {
    pub chain: &'a ChainReport,
    pub comparison: Option<&'a Comparison>,
    /// Per-site readings of the constraints, for lattice models.
    pub sites: Option<&'a [SiteForm]>,
}

impl<'a> ReportInput<'a> {
    pub fn chain(chain: &'a ChainReport) -> Self {
        ReportInput {
            chain,
            comparison: None,
            sites: None,
        }
    }
}

fn vector(v: &[Rational]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(", "))
}

fn truncation(t: Truncation) -> String {
    match t {
        Truncation::Full => "full".into(),
        Truncation::KeepBlocks(n) => format!("keep-{n}"),
    }
}

/// One-line summary, e.g. `nonsingular, det(F^(4)) = 16`.
pub fn termination_line(t: &Termination) -> String {
    match t {
        Termination::Nonsingular { level, determinant } => {
            format!("nonsingular, det(F^({level})) = {determinant}")
        }
        Termination::Exhausted { level } => format!("exhausted at F^({level})"),
        Termination::MaxLevelReached { level } => format!("max-level-reached at level {level}"),
    }
}

fn table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().map(|r| r.get(c).map_or(0, |s| s.chars().count())).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in rows {
        let cells: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, s)| {
                if c + 1 == r.len() {
                    s.clone()
                } else {
                    format!("{s:<w$}", w = widths[c])
                }
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join(" | "));
    }
    out
}

/// Human-readable report: a `level | constraint | raw | origin |
/// eigenvector` table followed by the termination and comparison.
pub fn text_report(input: ReportInput<'_>) -> String {
    let r = input.chain;
    let mut out = String::new();
    let _ = writeln!(out, "model {}", r.model);
    let _ = writeln!(out, "zeta: {}", r.zeta.join(" "));
    if !r.multipliers.is_empty() {
        let _ = writeln!(out, "multipliers: {}", r.multipliers.join(" "));
    }
    out.push('\n');
    if r.constraints.is_empty() {
        out.push_str("no constraints\n");
    } else {
        let mut header = vec!["level", "constraint", "raw", "origin", "eigenvector"];
        if input.sites.is_some() {
            header.insert(2, "sites");
        }
        let mut rows = vec![header.iter().map(|s| s.to_string()).collect::<Vec<_>>()];
        for (i, c) in r.constraints.iter().enumerate() {
            let mut row = vec![
                c.level.to_string(),
                c.expr.to_string(),
                c.raw.to_string(),
                c.origin.as_str().to_string(),
                c.generator.as_deref().map_or("-".into(), vector),
            ];
            if let Some(s) = input.sites {
                row.insert(2, s.get(i).map_or("-".into(), |f| f.to_string()));
            }
            rows.push(row);
        }
        out.push_str(&table(&rows));
    }
    out.push('\n');
    if !r.truncations.is_empty() {
        let ks: Vec<String> = r.truncations.iter().map(|k| k.to_string()).collect();
        let _ = writeln!(out, "truncated at level: {}", ks.join(", "));
    }
    let _ = writeln!(out, "termination: {}", termination_line(&r.termination));
    if r.generic {
        out.push_str("generic: yes\n");
    }
    for w in &r.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    if let Some(cmp) = input.comparison {
        out.push('\n');
        let _ = writeln!(out, "oracle constraints: {}", cmp.oracle.constraints.len());
        let rows: Vec<Vec<String>> = cmp
            .oracle
            .constraints
            .iter()
            .map(|c| vec![c.level.to_string(), c.expr.to_string()])
            .collect();
        out.push_str(&table(&rows));
        for (name, value) in &cmp.oracle.multipliers {
            match value {
                Some(v) => {
                    let _ = writeln!(out, "{name} = {v}");
                }
                None => {
                    let _ = writeln!(out, "{name} undetermined");
                }
            }
        }
        let _ = writeln!(
            out,
            "verdict: {} ({} chain vs {} oracle constraints)",
            verdict_word(&cmp.verdict),
            r.constraints.len(),
            cmp.oracle.constraints.len()
        );
        for e in &cmp.verdict.missing_from_chain {
            let _ = writeln!(out, "  missing from chain: {e}");
        }
        for e in &cmp.verdict.missing_from_oracle {
            let _ = writeln!(out, "  missing from oracle: {e}");
        }
    }
    out
}

fn verdict_word(v: &SpanVerdict) -> &'static str {
    if v.equal {
        "equal"
    } else {
        "unequal"
    }
}

fn strings(es: &[Expression]) -> Vec<String> {
    es.iter().map(|e| e.to_string()).collect()
}

fn rationals(v: &[Rational]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

fn constraint_node(c: &Constraint, site: Option<&SiteForm>) -> Value {
    let mut node = json!({
        "level": c.level,
        "expr": c.expr.to_string(),
        "raw": c.raw.to_string(),
        "origin": c.origin.as_str(),
        "generator": c.generator.as_deref().map(rationals),
    });
    if let Some(s) = site {
        node["sites"] = json!(s.to_string());
    }
    node
}

fn eigen_node(e: &EigenRecord) -> Value {
    json!({
        "level": e.level,
        "truncation": truncation(e.truncation),
        "vector": rationals(&e.vector),
        "value": e.value.to_string(),
        "class": e.class.as_str(),
    })
}

fn termination_node(t: &Termination) -> Value {
    match t {
        Termination::Nonsingular { level, determinant } => json!({
            "kind": t.as_str(),
            "level": level,
            "determinant": determinant.to_string(),
        }),
        Termination::Exhausted { level } | Termination::MaxLevelReached { level } => json!({
            "kind": t.as_str(),
            "level": level,
        }),
    }
}

fn comparison_node(c: &Comparison) -> Value {
    let oracle: Vec<Value> = c
        .oracle
        .constraints
        .iter()
        .map(|k| constraint_node(k, None))
        .collect();
    let multipliers: Vec<Value> = c
        .oracle
        .multipliers
        .iter()
        .map(|(n, v)| json!({ "name": n, "value": v.as_ref().map(|e| e.to_string()) }))
        .collect();
    json!({
        "verdict": verdict_word(&c.verdict),
        "oracle_constraints": oracle,
        "oracle_multipliers": multipliers,
        "multiplier_conditions": strings(&c.oracle.multiplier_conditions),
        "missing_from_chain": strings(&c.verdict.missing_from_chain),
        "missing_from_oracle": strings(&c.verdict.missing_from_oracle),
    })
}

/// Lossless tree form of a run.
pub fn tree_report(input: ReportInput<'_>) -> Value {
    let r = input.chain;
    let constraints: Vec<Value> = r
        .constraints
        .iter()
        .enumerate()
        .map(|(i, c)| constraint_node(c, input.sites.and_then(|s| s.get(i))))
        .collect();
    let eigenvectors: Vec<Value> = r.eigenvectors.iter().map(eigen_node).collect();
    json!({
        "model": r.model,
        "zeta": r.zeta,
        "multipliers": r.multipliers,
        "xi": r.xi,
        "constraints": constraints,
        "eigenvectors": eigenvectors,
        "truncations": r.truncations,
        "termination": termination_node(&r.termination),
        "generic": r.generic,
        "warnings": r.warnings,
        "fingerprint": r.span_fingerprint().map(|f| strings(&f)),
        "comparison": input.comparison.map(comparison_node),
    })
}

/// [`tree_report`] as pretty-printed JSON with a trailing newline.
pub fn tree_report_string(input: ReportInput<'_>) -> String {
    let mut s = serde_json::to_string_pretty(&tree_report(input)).expect("tree is serializable");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{run_chain, ChainOptions};
    use crate::model::parse_model;

    fn example2() -> ChainReport {
        let m = parse_model("model example2\nvars x y z\nL xdot*ydot - z*(x+y)\n", "x").unwrap();
        run_chain(&m, &ChainOptions::default()).unwrap()
    }

    #[test]
    fn text_has_table_and_determinant() {
        let r = example2();
        let text = text_report(ReportInput::chain(&r));
        assert!(text.contains("level | constraint | raw"));
        assert!(text.contains("termination: nonsingular, det(F^(4)) = 16"));
        assert!(text.contains("truncated at level: 3"));
        assert!(text.contains("(0, 0, -1, 0, 0, 0, 1)"));
    }

    #[test]
    fn tree_keys() {
        let r = example2();
        let v = tree_report(ReportInput::chain(&r));
        for key in [
            "model",
            "constraints",
            "eigenvectors",
            "truncations",
            "termination",
            "comparison",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["termination"]["determinant"], "16");
        assert_eq!(v["constraints"][3]["origin"], "truncated-null-vector");
        assert_eq!(v["truncations"], json!([3]));
        assert_eq!(
            tree_report_string(ReportInput::chain(&r)),
            tree_report_string(ReportInput::chain(&example2()))
        );
    }
}

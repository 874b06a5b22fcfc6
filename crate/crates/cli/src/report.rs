//! Text reports and JSON summaries.

use std::fmt::Write as _;

use fedmpc::rational::format_rational;
use fedmpc::sim::{PrivacyReport, ReductionReport};
use fedmpc::{FlRun, Rational, Variant};
use num::Zero;
use serde_json::{json, Value as Json};

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn run_report(digest: &str, variant: Variant, run: &FlRun) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "fedmpc-run-report v1");
    let _ = writeln!(s, "config {digest}");
    let _ = writeln!(s, "variant {variant}");
    let _ = writeln!(s, "rounds {}", run.round_models.len());
    let ids: Vec<String> = run.selection.clients().iter().map(u64::to_string).collect();
    let _ = writeln!(s, "selected {}", ids.join(" "));
    for (r, model) in run.round_models.iter().enumerate() {
        let _ = writeln!(s, "round {r} {}", model_line(model));
    }
    let _ = writeln!(s, "final {}", model_line(&run.final_model));
    for v in &run.views {
        let _ = writeln!(s, "view {} entries {}", v.party(), v.len());
    }
    s
}

fn model_line(model: &[Rational]) -> String {
    model.iter().map(format_rational).collect::<Vec<_>>().join(" ")
}

fn privacy_lines(s: &mut String, prefix: &str, report: &PrivacyReport) {
    for row in &report.rows {
        let _ = writeln!(
            s,
            "{prefix}row {} {} {} {} {}",
            row.inputs,
            row.set,
            row.mode,
            format_rational(&row.distance),
            verdict(row.passes())
        );
    }
    for w in &report.witnesses {
        let _ = writeln!(
            s,
            "{prefix}witness {} {} {} {} {}",
            w.set,
            w.mode,
            w.first,
            w.second,
            format_rational(&w.distance)
        );
    }
}

pub fn privacy_report(digest: &str, report: &PrivacyReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "fedmpc-privacy-report v1");
    let _ = writeln!(s, "config {digest}");
    let _ = writeln!(s, "variant {}", report.variant);
    privacy_lines(&mut s, "", report);
    let _ = writeln!(s, "verdict {}", verdict(report.passed()));
    s
}

fn privacy_json(report: &PrivacyReport) -> Json {
    let failures = report.rows.iter().filter(|r| !r.passes()).count();
    let max = report
        .rows
        .iter()
        .map(|r| r.distance.clone())
        .max()
        .unwrap_or_else(Rational::zero);
    let witnesses: Vec<Json> = report
        .witnesses
        .iter()
        .map(|w| {
            json!({
                "set": w.set.to_string(),
                "mode": w.mode.tag(),
                "first": w.first,
                "second": w.second,
                "distance": format_rational(&w.distance),
            })
        })
        .collect();
    json!({
        "variant": report.variant.tag(),
        "rows": report.rows.len(),
        "failures": failures,
        "max_distance": format_rational(&max),
        "witnesses": witnesses,
        "verdict": verdict(report.passed()),
    })
}

pub fn privacy_summary(digest: &str, report: &PrivacyReport) -> String {
    let mut j = privacy_json(report);
    j["command"] = json!("check-privacy");
    j["config"] = json!(digest);
    pretty(&j)
}

pub fn reduction_report(digest: &str, report: &ReductionReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "fedmpc-reduction-report v1");
    let _ = writeln!(s, "config {digest}");
    let _ = writeln!(s, "rounds {}", report.rounds);
    let _ = writeln!(s, "realization {}", report.realization);
    let composition = if report.identity_composition() {
        "identity"
    } else {
        "sequential"
    };
    let _ = writeln!(s, "composition {composition}");
    for m in &report.output_mismatches {
        let _ = writeln!(s, "mismatch {m}");
    }
    let equal = if report.outputs_equal() { "equal" } else { "differ" };
    let _ = writeln!(s, "outputs {equal}");
    privacy_lines(&mut s, "oracle ", &report.oracle);
    let _ = writeln!(s, "oracle verdict {}", verdict(report.oracle.passed()));
    privacy_lines(&mut s, "substituted ", &report.substituted);
    let _ = writeln!(s, "substituted verdict {}", verdict(report.substituted.passed()));
    let _ = writeln!(s, "verdict {}", verdict(report.passed()));
    s
}

pub fn reduction_summary(digest: &str, report: &ReductionReport) -> String {
    pretty(&json!({
        "command": "check-reduction",
        "config": digest,
        "rounds": report.rounds,
        "realization": report.realization.tag(),
        "identity_composition": report.identity_composition(),
        "outputs_equal": report.outputs_equal(),
        "oracle": privacy_json(&report.oracle),
        "substituted": privacy_json(&report.substituted),
        "verdict": verdict(report.passed()),
    }))
}

fn pretty(j: &Json) -> String {
    serde_json::to_string_pretty(j).expect("json values serialize") + "\n"
}

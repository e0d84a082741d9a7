//! EvalReport JSON. Written by hand so that field order and the six-digit
//! float format are fixed.

use std::collections::BTreeMap;
use std::fmt::Write;

use raptor_core::metrics::EvalReport;

fn string(s: &str) -> String {
    serde_json::to_string(s).expect("string serializes")
}

fn number(v: f64) -> String {
    let s = format!("{v:.6}");
    // Avoid "-0.000000".
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        "0.000000".into()
    } else {
        s
    }
}

fn number_map(map: &BTreeMap<String, f64>, indent: &str) -> String {
    if map.is_empty() {
        return "{}".into();
    }
    let body: Vec<String> =
        map.iter().map(|(k, v)| format!("{indent}  {}: {}", string(k), number(*v))).collect();
    format!("{{\n{}\n{indent}}}", body.join(",\n"))
}

pub fn render_report(report: &EvalReport) -> String {
    let tta = report.tta.as_ref();
    let optional = |pick: fn(&raptor_core::metrics::TtaSummary) -> &BTreeMap<String, f64>| {
        tta.map_or_else(|| "null".to_string(), |t| number_map(pick(t), "  "))
    };
    let mut fields = vec![
        ("per_dataset_eer", number_map(&report.per_dataset_eer, "  ")),
        ("avg_eer", number(report.avg_eer)),
        ("pooled_eer", number(report.pooled_eer)),
        ("clean_eer", optional(|t| &t.clean_eer)),
        ("tta_eer", optional(|t| &t.tta_eer)),
        ("delta_eer", optional(|t| &t.delta_eer)),
        ("mean_u_ale", optional(|t| &t.mean_u_ale)),
    ];
    let config: Vec<String> =
        report.config.iter().map(|(k, v)| format!("    {}: {}", string(k), string(v))).collect();
    fields.push(("config", format!("{{\n{}\n  }}", config.join(",\n"))));
    let c = &report.counts;
    fields.push((
        "counts",
        format!(
            "{{\n    \"clean\": {},\n    \"tta\": {},\n    \"tta_utterances\": {},\n    \"datasets\": {}\n  }}",
            c.clean, c.tta, c.tta_utterances, c.datasets
        ),
    ));
    let mut out = String::from("{\n");
    for (i, (k, v)) in fields.iter().enumerate() {
        let sep = if i + 1 == fields.len() { "" } else { "," };
        writeln!(out, "  {}: {v}{sep}", string(k)).expect("write to string");
    }
    out.push_str("}\n");
    out
}

//! Plain-text renderings of [`RunStats`].
//!
//! Run reports are `key = value` lines (valid TOML). Rates are printed as
//! fixed-point decimals with at least six significant digits, never in
//! exponent form.

use std::fmt::Write;

use crate::harness::RunStats;

/// Fixed-point rendering with at least six significant digits.
pub fn format_rate(x: f64) -> String {
    assert!(x.is_finite(), "non-finite statistic {x}");
    let decimals = if x == 0.0 {
        6
    } else {
        let magnitude = x.abs().log10().floor() as i32;
        (5 - magnitude).max(6) as usize
    };
    format!("{x:.decimals$}")
}

pub fn format_optional(x: Option<f64>) -> String {
    x.map(format_rate).unwrap_or_default()
}

/// Ordered `(key, value)` pairs for a run. Eve's fields are left out when
/// she never produced a guess.
pub fn report_fields(stats: &RunStats) -> Vec<(&'static str, String)> {
    let mut fields = vec![
        ("seed", stats.seed.to_string()),
        ("rounds", stats.rounds.to_string()),
        ("message_rounds", stats.message_rounds.to_string()),
        ("control_rounds", stats.control_rounds.to_string()),
        (
            "control_rounds_evaluated",
            stats.control_rounds_evaluated.to_string(),
        ),
        ("qber", format_rate(stats.qber)),
        (
            "control_failure_rate",
            format_rate(stats.control_failure_rate),
        ),
        ("erasures", stats.erasures.to_string()),
        ("anomaly_count", stats.anomaly_count.to_string()),
        ("absorbed_total", stats.absorbed_total.to_string()),
        ("blind_rounds", stats.blind_rounds.to_string()),
        ("eve_guesses", stats.eve_guesses.to_string()),
    ];
    for (key, value) in [
        ("eve_accuracy", stats.eve_accuracy),
        ("eve_mi_bits", stats.eve_mutual_info_bits),
        ("eve_mi_plugin_bits", stats.eve_mi_plugin_bits),
    ] {
        if let Some(v) = value {
            fields.push((key, format_rate(v)));
        }
    }
    fields
}

pub fn render_run_report(stats: &RunStats) -> String {
    let mut out = String::new();
    for (key, value) in report_fields(stats) {
        writeln!(out, "{key} = {value}").expect("writing to a String");
    }
    out
}

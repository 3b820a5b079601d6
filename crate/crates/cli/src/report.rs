//! The analysis report: schema, computation and emission.
//!
//! JSON output is schema-stable: fixed field names, shortest round-trip
//! number formatting (serde_json), struct-ordered keys. Repeated runs over
//! the same input are byte-identical.

use bell_core::chsh::{bell_signal, SettingPair, Verdict};
use bell_core::sampling::CountsRecord;
use bell_core::stats::{
    bell_stderr, correlator_table_from_counts_with_tolerance, delta_report, sigmas_above_classical,
};
use bell_core::{CorrelatorTable64, DeltaTable64, EstimatedQuantity64, EtaTable64};
use serde::{Deserialize, Serialize};

use crate::errors::CliResult;

/// Per-setting estimates echoed into the report (plot-ready numbers).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingRow {
    pub setting_x: String,
    pub setting_y: String,
    pub n: u64,
    pub e: f64,
    pub e_stderr: f64,
    pub marginal_a: f64,
    pub marginal_a_stderr: f64,
    pub marginal_b: f64,
    pub marginal_b_stderr: f64,
}

/// One value per crosstalk parameter, in fixed order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerParameter<V> {
    pub delta_a: V,
    pub delta_a_prime: V,
    pub delta_b: V,
    pub delta_b_prime: V,
}

impl<V: Copy> PerParameter<V> {
    fn from_array(a: [V; 4]) -> Self {
        PerParameter {
            delta_a: a[0],
            delta_a_prime: a[1],
            delta_b: a[2],
            delta_b_prime: a[3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaSection {
    pub values: DeltaTable64,
    pub stderr: PerParameter<f64>,
    /// A parameter below its own stderr is noise, not signal.
    pub noise_dominated: PerParameter<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    CountsFile {
        path: String,
        sidecar: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    /// Bell signal with its propagated standard error; n is total shots.
    pub s: EstimatedQuantity64,
    pub correlators: Vec<SettingRow>,
    pub delta: DeltaSection,
    pub asymmetry_index: f64,
    /// Present only when exact per-setting trace-norm errors are available
    /// (a simulation sidecar).
    pub eta: Option<EtaTable64>,
    /// 2 + eta_total when eta is known, otherwise equal to `rough_bound`.
    pub corrected_bound: f64,
    /// 2 + delta_total: a heuristic estimate, not a bound.
    pub rough_bound: f64,
    /// Null when the standard error is zero.
    pub sigmas_above_2: Option<f64>,
    pub sigmas_above_rough_bound: Option<f64>,
    /// (S - 2) / delta_total; null when delta_total is zero.
    pub violation_ratio: Option<f64>,
    pub verdict: Verdict,
    pub provenance: Provenance,
}

/// Runs the whole counts-to-report pipeline. Deterministic in its inputs.
pub fn analyze(
    record: &CountsRecord,
    eta: Option<EtaTable64>,
    provenance: Provenance,
    tolerance: Option<f64>,
) -> CliResult<AnalysisReport> {
    let tol = tolerance.unwrap_or(1e-9);
    let table: CorrelatorTable64 = correlator_table_from_counts_with_tolerance(record, tol)?;
    Ok(report_from_table(&table, eta, provenance))
}

fn report_from_table(
    table: &CorrelatorTable64,
    eta: Option<EtaTable64>,
    provenance: Provenance,
) -> AnalysisReport {
    let s_value = bell_signal(table);
    let stderrs: [f64; 4] =
        SettingPair::ALL.map(|p| table.stderrs(p).map(|se| se.correlator).unwrap_or(0.0));
    let sigma_s = bell_stderr(stderrs);
    let total_shots = table.total_shots().unwrap_or(0);
    let s = EstimatedQuantity64 {
        value: s_value,
        stderr: sigma_s,
        n: total_shots,
    };

    let correlators = SettingPair::ALL
        .iter()
        .map(|&p| {
            let m = table.moments(p);
            let se = table
                .stderrs(p)
                .copied()
                .unwrap_or(bell_core::SettingMoments {
                    correlator: 0.0,
                    marginal_a: 0.0,
                    marginal_b: 0.0,
                });
            let (x, y) = p.labels();
            SettingRow {
                setting_x: x.to_string(),
                setting_y: y.to_string(),
                n: table.shots(p).unwrap_or(0),
                e: m.correlator,
                e_stderr: se.correlator,
                marginal_a: m.marginal_a,
                marginal_a_stderr: se.marginal_a,
                marginal_b: m.marginal_b,
                marginal_b_stderr: se.marginal_b,
            }
        })
        .collect();

    let dr = delta_report(table);
    let delta: DeltaTable64 = dr.delta;
    let rough_bound = 2.0 + delta.total;
    let corrected_bound = match &eta {
        Some(e) => 2.0 + e.total,
        None => rough_bound,
    };

    let sigmas_above_2 = sigmas_above_classical(&s, 2.0).ok();
    let sigmas_above_rough_bound = sigmas_above_classical(&s, rough_bound).ok();
    let violation_ratio = if delta.total > 0.0 {
        Some((s_value - 2.0) / delta.total)
    } else {
        None
    };

    let verdict = bell_core::verdict(
        s_value,
        corrected_bound,
        if sigma_s > 0.0 { Some(sigma_s) } else { None },
    );

    AnalysisReport {
        s,
        correlators,
        delta: DeltaSection {
            values: delta,
            stderr: PerParameter::from_array(dr.stderr),
            noise_dominated: PerParameter::from_array(dr.noise_dominated),
        },
        asymmetry_index: bell_core::asymmetry_index(&delta),
        eta,
        corrected_bound,
        rough_bound,
        sigmas_above_2,
        sigmas_above_rough_bound,
        violation_ratio,
        verdict,
        provenance,
    }
}

/// True when the data resolves no crosstalk at the 3-sigma level (or the
/// deltas are exactly zero).
fn no_signature(report: &AnalysisReport) -> bool {
    let values = report.delta.values.values();
    let se = [
        report.delta.stderr.delta_a,
        report.delta.stderr.delta_a_prime,
        report.delta.stderr.delta_b,
        report.delta.stderr.delta_b_prime,
    ];
    values
        .into_iter()
        .zip(se)
        .all(|(d, s)| if s > 0.0 { d < 3.0 * s } else { d == 0.0 })
}

pub fn report_to_json(report: &AnalysisReport) -> String {
    let mut out = serde_json::to_string_pretty(report).expect("report serializes");
    out.push('\n');
    out
}

pub fn report_to_text(report: &AnalysisReport) -> String {
    let mut out = String::new();
    let push = |out: &mut String, line: String| {
        out.push_str(&line);
        out.push('\n');
    };

    push(&mut out, "CHSH Bell-test analysis".into());
    match &report.provenance {
        Provenance::CountsFile { path, sidecar } => {
            push(&mut out, format!("source: counts file {path}"));
            if let Some(s) = sidecar {
                push(&mut out, format!("exact-state sidecar: {s}"));
            }
        }
    }
    push(&mut out, String::new());
    push(
        &mut out,
        format!(
            "Bell signal   S = {} +/- {}   ({} shots total)",
            report.s.value, report.s.stderr, report.s.n
        ),
    );
    push(
        &mut out,
        format!(
            "              S exceeds the classical limit 2 by {:.2}%",
            (report.s.value - 2.0) / 2.0 * 100.0
        ),
    );
    push(&mut out, String::new());
    push(&mut out, "per-setting estimates:".into());
    for row in &report.correlators {
        push(
            &mut out,
            format!(
                "  ({}, {}): E = {:+.6} +/- {:.6}   mA = {:+.6}   mB = {:+.6}   (n = {})",
                row.setting_x,
                row.setting_y,
                row.e,
                row.e_stderr,
                row.marginal_a,
                row.marginal_b,
                row.n
            ),
        );
    }
    push(&mut out, String::new());
    push(&mut out, "crosstalk parameters (marginal shifts):".into());
    let names = [
        "delta_a      ",
        "delta_a_prime",
        "delta_b      ",
        "delta_b_prime",
    ];
    let se = [
        report.delta.stderr.delta_a,
        report.delta.stderr.delta_a_prime,
        report.delta.stderr.delta_b,
        report.delta.stderr.delta_b_prime,
    ];
    let flags = [
        report.delta.noise_dominated.delta_a,
        report.delta.noise_dominated.delta_a_prime,
        report.delta.noise_dominated.delta_b,
        report.delta.noise_dominated.delta_b_prime,
    ];
    for (i, d) in report.delta.values.values().into_iter().enumerate() {
        let flag = if flags[i] { "   [noise-dominated]" } else { "" };
        push(
            &mut out,
            format!("  {} = {:.6} +/- {:.6}{}", names[i], d, se[i], flag),
        );
    }
    push(
        &mut out,
        format!("  delta_total   = {:.6}", report.delta.values.total),
    );
    push(
        &mut out,
        format!("  asymmetry index = {:.3}", report.asymmetry_index),
    );
    if no_signature(report) {
        push(&mut out, "  no crosstalk signature detected".into());
    }
    push(&mut out, String::new());
    if let Some(eta) = &report.eta {
        push(
            &mut out,
            format!(
                "trace-norm errors: eta = ({:.6}, {:.6}, {:.6}, {:.6}), total {:.6}",
                eta.eta_ab, eta.eta_ab_prime, eta.eta_a_prime_b, eta.eta_a_prime_b_prime, eta.total
            ),
        );
    }
    push(
        &mut out,
        format!(
            "rough crosstalk bound:  2 + delta_total = {:.6}  (heuristic estimate, not a bound)",
            report.rough_bound
        ),
    );
    push(
        &mut out,
        format!("corrected classical bound: {:.6}", report.corrected_bound),
    );
    if let Some(sig) = report.sigmas_above_2 {
        push(&mut out, format!("significance above 2: {sig:.2} sigma"));
    }
    if let Some(sig) = report.sigmas_above_rough_bound {
        push(
            &mut out,
            format!("significance above the rough bound: {sig:.2} sigma"),
        );
    }
    if let Some(ratio) = report.violation_ratio {
        push(
            &mut out,
            format!(
                "violation-to-estimate ratio: {ratio:.2} (signal excess over the rough crosstalk estimate)"
            ),
        );
    }
    let verdict_line = match report.verdict {
        Verdict::Violation => format!(
            "verdict: VIOLATION (S = {} exceeds the corrected classical bound {:.6})",
            report.s.value, report.corrected_bound
        ),
        Verdict::WithinErrorBudget => format!(
            "verdict: WITHIN_ERROR_BUDGET (S = {} does not clear the corrected bound {:.6} significantly)",
            report.s.value, report.corrected_bound
        ),
        Verdict::NoViolation => format!(
            "verdict: NO_VIOLATION (S = {} does not exceed the classical limit 2)",
            report.s.value
        ),
    };
    push(&mut out, verdict_line);
    out
}

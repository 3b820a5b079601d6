//! Subcommand implementations.

use std::path::{Path, PathBuf};

use bell_core::optimizer::{bias_study, optimize, BiasStudyReport};
use bell_core::sampling::run_experiment;
use bell_core::{corrected_classical_bound, DeltaTable64, EtaTable64};
use serde::Serialize;

use crate::config::{parse_config, parse_delta_file, parse_eta_file, RunConfig};
use crate::counts_io::{counts_to_csv, parse_counts_str};
use crate::errors::{read_file, write_file, CliError, CliResult};
use crate::report::{analyze, report_to_json, report_to_text, AnalysisReport, Provenance};
use crate::sidecar::{build_sidecar, parse_sidecar, sidecar_to_json};
use crate::Format;

fn emit(out: &Option<PathBuf>, contents: &str) -> CliResult<()> {
    match out {
        Some(path) => write_file(path, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

pub fn cmd_analyze(
    counts_path: &Path,
    sidecar_path: Option<&Path>,
    format: Format,
    tolerance: Option<f64>,
    output: &Option<PathBuf>,
) -> CliResult<()> {
    let record = parse_counts_str(&read_file(counts_path)?)?;
    let eta: Option<EtaTable64> = match sidecar_path {
        Some(p) => Some(parse_sidecar(&read_file(p)?)?.eta),
        None => None,
    };
    let provenance = Provenance::CountsFile {
        path: counts_path.display().to_string(),
        sidecar: sidecar_path.map(|p| p.display().to_string()),
    };
    let report: AnalysisReport = analyze(&record, eta, provenance, tolerance)?;
    let rendered = match format {
        Format::Json => report_to_json(&report),
        Format::Text => report_to_text(&report),
    };
    emit(output, &rendered)
}

#[derive(Debug, Serialize)]
struct SimulateSummary {
    counts_path: String,
    sidecar_path: String,
    s_ideal: f64,
    s_true: f64,
    eta_total: f64,
    seed: u64,
    shots_per_setting: u64,
    rng: &'static str,
}

pub fn cmd_simulate(
    config_path: &Path,
    out: Option<PathBuf>,
    sidecar_out: Option<PathBuf>,
    format: Format,
) -> CliResult<()> {
    let cfg: RunConfig = parse_config(&read_file(config_path)?)?;
    let counts_path = out.unwrap_or_else(|| default_output(config_path, "counts.csv"));
    let sidecar_path = sidecar_out.unwrap_or_else(|| sibling(&counts_path, "sidecar.json"));

    let rho = cfg.state.density();
    let run = run_experiment(&rho, &cfg.settings, &cfg.model, cfg.shots, cfg.seed)?;
    let sidecar = build_sidecar(
        &run.states,
        cfg.state.label(),
        &cfg.model,
        &cfg.settings,
        cfg.seed,
        cfg.shots,
    )?;

    write_file(&counts_path, &counts_to_csv(&run.counts))?;
    write_file(&sidecar_path, &sidecar_to_json(&sidecar))?;

    let summary = SimulateSummary {
        counts_path: counts_path.display().to_string(),
        sidecar_path: sidecar_path.display().to_string(),
        s_ideal: sidecar.s_ideal,
        s_true: sidecar.s_true,
        eta_total: sidecar.eta.total,
        seed: cfg.seed,
        shots_per_setting: cfg.shots,
        rng: bell_core::RNG_ID,
    };
    match format {
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&summary).expect("serializes")
        ),
        Format::Text => {
            println!("wrote counts to {}", summary.counts_path);
            println!("wrote exact-state sidecar to {}", summary.sidecar_path);
            println!(
                "S_ideal = {}, S_true = {}, eta_total = {}",
                summary.s_ideal, summary.s_true, summary.eta_total
            );
        }
    }
    Ok(())
}

fn default_output(config_path: &Path, suffix: &str) -> PathBuf {
    let stem = config_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    config_path.with_file_name(format!("{stem}.{suffix}"))
}

fn sibling(counts_path: &Path, suffix: &str) -> PathBuf {
    let stem = counts_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    let stem = stem.strip_suffix(".counts").unwrap_or(&stem).to_string();
    counts_path.with_file_name(format!("{stem}.{suffix}"))
}

#[derive(Debug, Serialize)]
struct OptimizeOutput {
    s_best: f64,
    settings: bell_core::SettingsQuad64,
    evaluations: usize,
    converged: bool,
    provenance: ConfigProvenance,
}

#[derive(Debug, Serialize)]
struct ConfigProvenance {
    config: String,
    seed: u64,
    rng: &'static str,
}

pub fn cmd_optimize(config_path: &Path, format: Format, output: &Option<PathBuf>) -> CliResult<()> {
    let cfg = parse_config(&read_file(config_path)?)?;
    let rho = cfg.state.density();
    let result = optimize(&rho, &cfg.model, &cfg.optimizer)?;
    let out = OptimizeOutput {
        s_best: result.s_best,
        settings: result.settings,
        evaluations: result.evaluations,
        converged: result.converged,
        provenance: ConfigProvenance {
            config: config_path.display().to_string(),
            seed: cfg.optimizer.seed,
            rng: bell_core::RNG_ID,
        },
    };
    let rendered = match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&out).expect("serializes");
            s.push('\n');
            s
        }
        Format::Text => {
            let q = &out.settings;
            let mut s = String::new();
            s.push_str(&format!("optimized Bell signal: S_best = {}\n", out.s_best));
            s.push_str(&format!(
                "settings (theta, phi):\n  a  = ({}, {})\n  a' = ({}, {})\n  b  = ({}, {})\n  b' = ({}, {})\n",
                q.a.theta(), q.a.phi(),
                q.a_prime.theta(), q.a_prime.phi(),
                q.b.theta(), q.b.phi(),
                q.b_prime.theta(), q.b_prime.phi(),
            ));
            s.push_str(&format!(
                "evaluations: {}, converged: {}\n",
                out.evaluations, out.converged
            ));
            if !out.converged {
                s.push_str(
                    "warning: budget exhausted before simplex convergence; best-so-far reported\n",
                );
            }
            s
        }
    };
    emit(output, &rendered)
}

#[derive(Debug, Serialize)]
struct BiasStudyOutput {
    #[serde(flatten)]
    report: BiasStudyReport<f64>,
    provenance: ConfigProvenance,
}

pub fn cmd_bias_study(
    config_path: &Path,
    format: Format,
    output: &Option<PathBuf>,
) -> CliResult<()> {
    let cfg = parse_config(&read_file(config_path)?)?;
    let rho = cfg.state.density();
    let report = bias_study(&rho, &cfg.model, &cfg.optimizer, cfg.rough_validity_factor)?;
    let out = BiasStudyOutput {
        report,
        provenance: ConfigProvenance {
            config: config_path.display().to_string(),
            seed: cfg.optimizer.seed,
            rng: bell_core::RNG_ID,
        },
    };
    let rendered = match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&out).expect("serializes");
            s.push('\n');
            s
        }
        Format::Text => {
            let d = &out.report.diagnostics;
            let mut s = String::new();
            s.push_str(&format!(
                "bias study: optimized S = {} ({} evaluations, converged: {})\n",
                out.report.s_optimized, out.report.evaluations, out.report.converged
            ));
            s.push_str(&format!(
                "crosstalk parameters at the optimum: delta = ({:.6}, {:.6}, {:.6}, {:.6}), total {:.6}\n",
                d.delta.delta_a, d.delta.delta_a_prime, d.delta.delta_b, d.delta.delta_b_prime,
                d.delta.total
            ));
            s.push_str(&format!(
                "trace-norm errors at the optimum:    eta   = ({:.6}, {:.6}, {:.6}, {:.6}), total {:.6}\n",
                d.eta.eta_ab, d.eta.eta_ab_prime, d.eta.eta_a_prime_b, d.eta.eta_a_prime_b_prime,
                d.eta.total
            ));
            s.push_str(&format!("asymmetry index: {:.3}\n", d.asymmetry_index));
            if d.rough_estimate_valid {
                s.push_str(&format!(
                    "delta_total and eta_total agree within the factor {}\n",
                    d.validity_factor
                ));
            } else {
                s.push_str(&format!(
                    "WARNING: the rough estimate is invalid here; delta_total = {:.6} misses eta_total = {:.6} by more than the factor {}\n",
                    d.delta.total, d.eta.total, d.validity_factor
                ));
            }
            s
        }
    };
    emit(output, &rendered)
}

#[derive(Debug, Serialize)]
struct BoundOutput {
    source: String,
    certified: bool,
    note: &'static str,
    total: f64,
    bound: f64,
    asymmetry_index: Option<f64>,
}

pub fn cmd_bound(
    delta_path: Option<&Path>,
    eta_path: Option<&Path>,
    format: Format,
    output: &Option<PathBuf>,
) -> CliResult<()> {
    let out = match (delta_path, eta_path) {
        (Some(p), None) => {
            let table: DeltaTable64 = parse_delta_file(&read_file(p)?)?;
            BoundOutput {
                source: p.display().to_string(),
                certified: false,
                note: "heuristic estimate from marginal shifts, not a bound",
                total: table.total,
                bound: 2.0 + bell_core::rough_total_estimate(&table),
                asymmetry_index: Some(bell_core::asymmetry_index(&table)),
            }
        }
        (None, Some(p)) => {
            let table: EtaTable64 = parse_eta_file(&read_file(p)?)?;
            BoundOutput {
                source: p.display().to_string(),
                certified: true,
                note: "worst-case bound from trace-norm errors",
                total: table.total,
                bound: corrected_classical_bound(&table),
                asymmetry_index: None,
            }
        }
        _ => {
            return Err(CliError::Validation(
                "bound requires exactly one of --delta <file> or --eta <file>".into(),
            ))
        }
    };
    let rendered = match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&out).expect("serializes");
            s.push('\n');
            s
        }
        Format::Text => {
            let mut s = String::new();
            s.push_str(&format!("source: {}\n", out.source));
            s.push_str(&format!("total: {}\n", out.total));
            s.push_str(&format!("corrected classical bound: {}\n", out.bound));
            s.push_str(&format!("note: {}\n", out.note));
            if let Some(idx) = out.asymmetry_index {
                s.push_str(&format!("asymmetry index: {idx:.3}\n"));
            }
            s
        }
    };
    emit(output, &rendered)
}

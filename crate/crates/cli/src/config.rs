//! Flat `key = value` run configuration.
//!
//! `#` starts a comment (whole line or trailing). Unknown keys are an error
//! listing every offender. Model parameter keys must match the chosen model
//! kind. Angles are radians; an explicit state is 32 reals, interleaved
//! (re, im) pairs in row-major order.

use std::collections::BTreeMap;

use bell_core::num_complex::Complex;
use bell_core::{
    CrosstalkModel64, DensityMatrix64, Operator64, OptimizationConfig64, SettingsQuad64,
};

use crate::errors::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    Singlet,
    Mixed,
    Explicit(DensityMatrix64),
}

impl StateSpec {
    pub fn label(&self) -> &'static str {
        match self {
            StateSpec::Singlet => "singlet",
            StateSpec::Mixed => "mixed",
            StateSpec::Explicit(_) => "explicit",
        }
    }

    pub fn density(&self) -> DensityMatrix64 {
        match self {
            StateSpec::Singlet => DensityMatrix64::singlet(),
            StateSpec::Mixed => DensityMatrix64::maximally_mixed(),
            StateSpec::Explicit(rho) => rho.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub state: StateSpec,
    pub settings: SettingsQuad64,
    pub model: CrosstalkModel64,
    pub shots: u64,
    pub seed: u64,
    pub optimizer: OptimizationConfig64,
    pub rough_validity_factor: f64,
}

const ANGLE_KEYS: [&str; 8] = [
    "theta_a",
    "phi_a",
    "theta_a_prime",
    "phi_a_prime",
    "theta_b",
    "phi_b",
    "theta_b_prime",
    "phi_b_prime",
];

const DEPOLARIZING_KEYS: [&str; 6] = [
    "p_alice",
    "p_bob",
    "p_alice_a",
    "p_alice_a_prime",
    "p_bob_b",
    "p_bob_b_prime",
];
const ZZ_KEYS: [&str; 5] = [
    "chi",
    "chi_ab",
    "chi_ab_prime",
    "chi_a_prime_b",
    "chi_a_prime_b_prime",
];
const READOUT_KEYS: [&str; 2] = ["p_flip_a", "p_flip_b"];

const ALL_KEYS: [&str; 31] = [
    "state",
    "state_entries",
    "theta_a",
    "phi_a",
    "theta_a_prime",
    "phi_a_prime",
    "theta_b",
    "phi_b",
    "theta_b_prime",
    "phi_b_prime",
    "model",
    "p_alice",
    "p_bob",
    "p_alice_a",
    "p_alice_a_prime",
    "p_bob_b",
    "p_bob_b_prime",
    "chi",
    "chi_ab",
    "chi_ab_prime",
    "chi_a_prime_b",
    "chi_a_prime_b_prime",
    "p_flip_a",
    "p_flip_b",
    "shots",
    "seed",
    "max_evaluations",
    "restarts",
    "initial_simplex_scale",
    "convergence_tolerance",
    "rough_validity_factor",
];

/// Splits a key-value file into a map, rejecting malformed lines.
pub fn parse_kv(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Validation(format!(
                "line {line_no}: expected 'key = value', got '{line}'"
            ))
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() || value.is_empty() {
            return Err(CliError::Validation(format!(
                "line {line_no}: empty key or value"
            )));
        }
        if map.insert(key.clone(), value).is_some() {
            return Err(CliError::Validation(format!(
                "line {line_no}: duplicate key '{key}'"
            )));
        }
    }
    Ok(map)
}

fn parse_f64(map: &BTreeMap<String, String>, key: &str) -> CliResult<Option<f64>> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => {
            let x: f64 = v.parse().map_err(|_| {
                CliError::Validation(format!("key '{key}': cannot parse '{v}' as a number"))
            })?;
            if !x.is_finite() {
                return Err(CliError::Validation(format!(
                    "key '{key}': value must be finite"
                )));
            }
            Ok(Some(x))
        }
    }
}

fn parse_u64(map: &BTreeMap<String, String>, key: &str) -> CliResult<Option<u64>> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => v.parse().map(Some).map_err(|_| {
            CliError::Validation(format!(
                "key '{key}': cannot parse '{v}' as a non-negative integer"
            ))
        }),
    }
}

fn parse_state(map: &BTreeMap<String, String>) -> CliResult<StateSpec> {
    let kind = map.get("state").map(String::as_str).unwrap_or("singlet");
    match kind {
        "singlet" => Ok(StateSpec::Singlet),
        "mixed" => Ok(StateSpec::Mixed),
        "explicit" => {
            let raw = map.get("state_entries").ok_or_else(|| {
                CliError::Validation("state = explicit requires state_entries (32 reals)".into())
            })?;
            let reals: Vec<f64> = raw
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<f64>().map_err(|_| {
                        CliError::Validation(format!("state_entries: cannot parse '{s}'"))
                    })
                })
                .collect::<CliResult<_>>()?;
            if reals.len() != 32 {
                return Err(CliError::Validation(format!(
                    "state_entries: expected 32 reals (re, im interleaved, row-major), got {}",
                    reals.len()
                )));
            }
            let entries: Vec<Complex<f64>> = reals
                .chunks_exact(2)
                .map(|p| Complex::new(p[0], p[1]))
                .collect();
            let op = Operator64::from_entries(4, entries)?;
            Ok(StateSpec::Explicit(DensityMatrix64::new(op)?))
        }
        other => Err(CliError::Validation(format!(
            "state = '{other}' is not one of singlet|mixed|explicit"
        ))),
    }
}

fn parse_settings(map: &BTreeMap<String, String>) -> CliResult<SettingsQuad64> {
    let canonical = SettingsQuad64::canonical_chsh();
    let defaults = canonical.to_array();
    let mut values = defaults;
    for (i, key) in ANGLE_KEYS.iter().enumerate() {
        if let Some(v) = parse_f64(map, key)? {
            values[i] = v;
        }
    }
    Ok(SettingsQuad64::from_array(&values))
}

fn forbid_keys(
    map: &BTreeMap<String, String>,
    keys: &[&str],
    model: &str,
    required_model: &str,
) -> CliResult<()> {
    let present: Vec<&str> = keys
        .iter()
        .copied()
        .filter(|k| map.contains_key(*k))
        .collect();
    if !present.is_empty() {
        return Err(CliError::Validation(format!(
            "key(s) {} require model = {required_model} (configured model is {model})",
            present.join(", ")
        )));
    }
    Ok(())
}

fn parse_model(map: &BTreeMap<String, String>) -> CliResult<CrosstalkModel64> {
    let kind = map.get("model").map(String::as_str).unwrap_or("none");
    match kind {
        "none" => {
            forbid_keys(map, &DEPOLARIZING_KEYS, kind, "local_depolarizing")?;
            forbid_keys(map, &ZZ_KEYS, kind, "zz_coupling")?;
            forbid_keys(map, &READOUT_KEYS, kind, "measurement_crosstalk")?;
            Ok(CrosstalkModel64::None)
        }
        "local_depolarizing" => {
            forbid_keys(map, &ZZ_KEYS, kind, "zz_coupling")?;
            forbid_keys(map, &READOUT_KEYS, kind, "measurement_crosstalk")?;
            let pa = parse_f64(map, "p_alice")?.unwrap_or(0.0);
            let pb = parse_f64(map, "p_bob")?.unwrap_or(0.0);
            let model = CrosstalkModel64::local_depolarizing_per_setting(
                [
                    parse_f64(map, "p_alice_a")?.unwrap_or(pa),
                    parse_f64(map, "p_alice_a_prime")?.unwrap_or(pa),
                ],
                [
                    parse_f64(map, "p_bob_b")?.unwrap_or(pb),
                    parse_f64(map, "p_bob_b_prime")?.unwrap_or(pb),
                ],
            );
            model.validate()?;
            Ok(model)
        }
        "zz_coupling" => {
            forbid_keys(map, &DEPOLARIZING_KEYS, kind, "local_depolarizing")?;
            forbid_keys(map, &READOUT_KEYS, kind, "measurement_crosstalk")?;
            let chi = parse_f64(map, "chi")?.unwrap_or(0.0);
            let model = CrosstalkModel64::zz_coupling_per_setting([
                parse_f64(map, "chi_ab")?.unwrap_or(chi),
                parse_f64(map, "chi_ab_prime")?.unwrap_or(chi),
                parse_f64(map, "chi_a_prime_b")?.unwrap_or(chi),
                parse_f64(map, "chi_a_prime_b_prime")?.unwrap_or(chi),
            ]);
            model.validate()?;
            Ok(model)
        }
        "measurement_crosstalk" => {
            forbid_keys(map, &DEPOLARIZING_KEYS, kind, "local_depolarizing")?;
            forbid_keys(map, &ZZ_KEYS, kind, "zz_coupling")?;
            let model = CrosstalkModel64::measurement_crosstalk(
                parse_f64(map, "p_flip_a")?.unwrap_or(0.0),
                parse_f64(map, "p_flip_b")?.unwrap_or(0.0),
            );
            model.validate()?;
            Ok(model)
        }
        other => Err(CliError::Validation(format!(
            "model = '{other}' is not one of none|local_depolarizing|zz_coupling|measurement_crosstalk"
        ))),
    }
}

pub fn parse_config(text: &str) -> CliResult<RunConfig> {
    let map = parse_kv(text)?;

    let unknown: Vec<&str> = map
        .keys()
        .map(String::as_str)
        .filter(|k| !ALL_KEYS.contains(k))
        .collect();
    if !unknown.is_empty() {
        return Err(CliError::Validation(format!(
            "unknown configuration key(s): {}",
            unknown.join(", ")
        )));
    }

    let state = parse_state(&map)?;
    let settings = parse_settings(&map)?;
    let model = parse_model(&map)?;
    let shots = parse_u64(&map, "shots")?.unwrap_or(1_000_000);
    let seed = parse_u64(&map, "seed")?.unwrap_or(0);

    let mut optimizer = OptimizationConfig64 {
        seed,
        ..OptimizationConfig64::default()
    };
    if let Some(v) = parse_u64(&map, "max_evaluations")? {
        optimizer.max_evaluations = v as usize;
    }
    if let Some(v) = parse_u64(&map, "restarts")? {
        optimizer.restarts = v as usize;
    }
    if let Some(v) = parse_f64(&map, "initial_simplex_scale")? {
        optimizer.initial_simplex_scale = v;
    }
    if let Some(v) = parse_f64(&map, "convergence_tolerance")? {
        optimizer.convergence_tolerance = v;
    }
    let rough_validity_factor = parse_f64(&map, "rough_validity_factor")?.unwrap_or(2.0);
    if rough_validity_factor < 1.0 {
        return Err(CliError::Validation(
            "rough_validity_factor must be at least 1".into(),
        ));
    }

    Ok(RunConfig {
        state,
        settings,
        model,
        shots,
        seed,
        optimizer,
        rough_validity_factor,
    })
}

/// Parses a delta table file: keys delta_a, delta_a_prime, delta_b,
/// delta_b_prime.
pub fn parse_delta_file(text: &str) -> CliResult<bell_core::DeltaTable64> {
    let map = parse_kv(text)?;
    let keys = ["delta_a", "delta_a_prime", "delta_b", "delta_b_prime"];
    check_exact_keys(&map, &keys)?;
    let get = |k: &str| -> CliResult<f64> {
        parse_f64(&map, k)?.ok_or_else(|| CliError::Validation(format!("missing key '{k}'")))
    };
    Ok(bell_core::DeltaTable64::new(
        get("delta_a")?,
        get("delta_a_prime")?,
        get("delta_b")?,
        get("delta_b_prime")?,
    )?)
}

/// Parses an eta table file: keys eta_ab, eta_ab_prime, eta_a_prime_b,
/// eta_a_prime_b_prime.
pub fn parse_eta_file(text: &str) -> CliResult<bell_core::EtaTable64> {
    let map = parse_kv(text)?;
    let keys = [
        "eta_ab",
        "eta_ab_prime",
        "eta_a_prime_b",
        "eta_a_prime_b_prime",
    ];
    check_exact_keys(&map, &keys)?;
    let get = |k: &str| -> CliResult<f64> {
        parse_f64(&map, k)?.ok_or_else(|| CliError::Validation(format!("missing key '{k}'")))
    };
    Ok(bell_core::EtaTable64::new([
        get("eta_ab")?,
        get("eta_ab_prime")?,
        get("eta_a_prime_b")?,
        get("eta_a_prime_b_prime")?,
    ])?)
}

fn check_exact_keys(map: &BTreeMap<String, String>, allowed: &[&str]) -> CliResult<()> {
    let unknown: Vec<&str> = map
        .keys()
        .map(String::as_str)
        .filter(|k| !allowed.contains(k))
        .collect();
    if !unknown.is_empty() {
        return Err(CliError::Validation(format!(
            "unknown key(s): {}",
            unknown.join(", ")
        )));
    }
    Ok(())
}

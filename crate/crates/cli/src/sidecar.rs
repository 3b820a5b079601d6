//! Exact-state sidecar written next to simulated counts: per-setting ground
//! truth (E, marginals, eta) plus the full reproducibility block.

use bell_core::chsh::{bell_signal, correlators_from_setting_states, SettingPair, SettingStates};
use bell_core::{CrosstalkModel64, EtaTable64, SettingsQuad64};
use serde::{Deserialize, Serialize};

use crate::errors::CliResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidecarRow {
    pub setting_x: String,
    pub setting_y: String,
    /// Exact correlator of the measured (post-channel) state.
    pub e: f64,
    pub marginal_a: f64,
    pub marginal_b: f64,
    /// Trace-norm distance between measured and ideal states.
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub rng: String,
    pub seed: u64,
    pub shots_per_setting: u64,
    pub state: String,
    pub model: CrosstalkModel64,
    pub settings: SettingsQuad64,
    /// Bell signal of the ideal (noise-free) states.
    pub s_ideal: f64,
    /// Bell signal of the measured (post-channel) states.
    pub s_true: f64,
    pub per_setting: Vec<SidecarRow>,
    pub eta: EtaTable64,
}

pub fn build_sidecar(
    states: &[SettingStates<f64>; 4],
    state_label: &str,
    model: &CrosstalkModel64,
    settings: &SettingsQuad64,
    seed: u64,
    shots_per_setting: u64,
) -> CliResult<Sidecar> {
    let actual_table = correlators_from_setting_states(states)?;
    let eta = EtaTable64::from_states(states);

    // Ideal-state table: reuse the prepared ideal states as "actual".
    let ideal_states: [SettingStates<f64>; 4] = core::array::from_fn(|i| SettingStates {
        pair: states[i].pair,
        ideal: states[i].ideal.clone(),
        actual: states[i].ideal.clone(),
    });
    let ideal_table = correlators_from_setting_states(&ideal_states)?;

    let per_setting = SettingPair::ALL
        .iter()
        .map(|&p| {
            let m = actual_table.moments(p);
            let (x, y) = p.labels();
            SidecarRow {
                setting_x: x.to_string(),
                setting_y: y.to_string(),
                e: m.correlator,
                marginal_a: m.marginal_a,
                marginal_b: m.marginal_b,
                eta: eta.get(p),
            }
        })
        .collect();

    Ok(Sidecar {
        rng: bell_core::RNG_ID.to_string(),
        seed,
        shots_per_setting,
        state: state_label.to_string(),
        model: model.clone(),
        settings: *settings,
        s_ideal: bell_signal(&ideal_table),
        s_true: bell_signal(&actual_table),
        per_setting,
        eta,
    })
}

pub fn sidecar_to_json(sidecar: &Sidecar) -> String {
    let mut out = serde_json::to_string_pretty(sidecar).expect("sidecar serializes");
    out.push('\n');
    out
}

pub fn parse_sidecar(text: &str) -> CliResult<Sidecar> {
    let sidecar: Sidecar = serde_json::from_str(text)
        .map_err(|e| crate::errors::CliError::Validation(format!("malformed sidecar: {e}")))?;
    // Reconstructing the table revalidates the range and total-identity
    // invariants on externally supplied data.
    let rebuilt = EtaTable64::new([
        sidecar.eta.eta_ab,
        sidecar.eta.eta_ab_prime,
        sidecar.eta.eta_a_prime_b,
        sidecar.eta.eta_a_prime_b_prime,
    ])?;
    if (rebuilt.total - sidecar.eta.total).abs() > 1e-12 {
        return Err(crate::errors::CliError::Validation(format!(
            "sidecar eta total {} does not match the sum of its entries {}",
            sidecar.eta.total, rebuilt.total
        )));
    }
    Ok(sidecar)
}

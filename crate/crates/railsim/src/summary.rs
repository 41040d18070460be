//! Run summaries, validated against `schemas/summary.json`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::stats::{ChiSquare, Histogram, Moments};

/// Schema shipped with the crate.
pub const SCHEMA: &str = include_str!("../schemas/summary.json");

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Summary {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    pub n: usize,
    pub seed: u64,
    pub backend: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pulse: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy: Option<String>,
    /// Feedback delay as a fraction of the pulse duration.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delay_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks_theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks_theta_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks_x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks_x_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chi_square: Option<ChiSquare>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub histogram: Option<Histogram>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub moments: Option<Moments>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_moments: Option<Moments>,
    /// Relative frequency of each outcome label.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequencies: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub success_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_fidelity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_fidelity: Option<f64>,
}

impl Summary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}

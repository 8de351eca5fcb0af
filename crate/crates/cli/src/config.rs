//! Sweep configuration files.

use std::path::PathBuf;

use fsg_core::metrology::{QfimModel, WeightVector};
use fsg_core::optimizer::Objective;
use fsg_core::search::linspace;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    #[serde(default = "default_spacing")]
    pub spacing: Spacing,
}

fn default_spacing() -> Spacing {
    Spacing::Log
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveSel {
    Precision,
    Privacy,
    Both,
}

impl ObjectiveSel {
    pub fn objectives(self) -> Vec<Objective> {
        match self {
            ObjectiveSel::Precision => vec![Objective::Precision],
            ObjectiveSel::Privacy => vec![Objective::Privacy],
            ObjectiveSel::Both => vec![Objective::Precision, Objective::Privacy],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Weights {
    Named(String),
    Explicit(Vec<f64>),
}

impl Default for Weights {
    fn default() -> Self {
        Weights::Named("mean".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(rename = "M_list")]
    pub m_list: Vec<usize>,
    pub n_th_list: Vec<f64>,
    #[serde(rename = "N_grid")]
    pub n_grid: NGrid,
    pub objective: ObjectiveSel,
    #[serde(default)]
    pub homodyne: bool,
    #[serde(default)]
    pub weights: Weights,
    #[serde(default)]
    pub qfim_model: QfimModel,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl SweepConfig {
    /// Parses and validates; diagnostics name the offending field and its line.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: SweepConfig = serde_json::from_str(text).map_err(|e| {
            CliError::Config(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        cfg.validate().map_err(|(field, msg)| {
            let loc = field_line(text, field).map_or(String::new(), |l| format!("line {l}, "));
            CliError::Config(format!("{loc}field `{field}`: {msg}"))
        })?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), (&'static str, String)> {
        if self.m_list.is_empty() {
            return Err(("M_list", "must not be empty".into()));
        }
        if let Some(&m) = self.m_list.iter().find(|&&m| m < 2) {
            return Err(("M_list", format!("needs at least 2 modes, got {m}")));
        }
        if self.n_th_list.is_empty() {
            return Err(("n_th_list", "must not be empty".into()));
        }
        if let Some(x) = self.n_th_list.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(("n_th_list", format!("thermal occupation must be finite and >= 0, got {x}")));
        }
        let g = &self.n_grid;
        if g.points == 0 {
            return Err(("N_grid", "grid is empty (points = 0)".into()));
        }
        if !(g.min.is_finite() && g.max.is_finite()) || g.min < 0.0 || g.max < g.min {
            return Err(("N_grid", format!("need 0 <= min <= max, got min {} max {}", g.min, g.max)));
        }
        if g.spacing == Spacing::Log && g.min <= 0.0 {
            return Err(("N_grid", "log spacing needs min > 0".into()));
        }
        match &self.weights {
            Weights::Named(name) if name == "mean" => {}
            Weights::Named(name) => return Err(("weights", format!("unknown weights `{name}`"))),
            Weights::Explicit(w) => {
                if let Some(&m) = self.m_list.iter().find(|&&m| m != w.len()) {
                    return Err(("weights", format!("{} weights for M = {m}", w.len())));
                }
                WeightVector::new(w.clone()).map_err(|e| ("weights", e.to_string()))?;
            }
        }
        Ok(())
    }

    pub fn n_values(&self) -> Vec<f64> {
        let g = &self.n_grid;
        match g.spacing {
            Spacing::Linear => linspace(g.min, g.max, g.points),
            Spacing::Log => linspace(g.min.log10(), g.max.log10(), g.points)
                .into_iter()
                .map(|e| 10f64.powf(e))
                .collect(),
        }
    }

    pub fn weights_for(&self, modes: usize) -> WeightVector {
        match &self.weights {
            Weights::Explicit(w) => WeightVector::new(w.clone()).expect("validated"),
            Weights::Named(_) => WeightVector::mean(modes),
        }
    }

    /// Default grids for figure reproduction.
    pub fn figure(which: u8) -> Self {
        let (objective, homodyne) = match which {
            2 => (ObjectiveSel::Precision, false),
            3 => (ObjectiveSel::Privacy, false),
            _ => (ObjectiveSel::Privacy, true),
        };
        SweepConfig {
            m_list: (2..=6).collect(),
            n_th_list: vec![0.0, 1.0, 5.0],
            n_grid: NGrid { min: 1.0, max: 1000.0, points: 25, spacing: Spacing::Log },
            objective,
            homodyne,
            weights: Weights::default(),
            qfim_model: QfimModel::default(),
            seed: 0,
            output: None,
        }
    }
}

fn field_line(text: &str, field: &str) -> Option<usize> {
    let key = format!("\"{field}\"");
    text.lines().position(|l| l.contains(&key)).map(|i| i + 1)
}

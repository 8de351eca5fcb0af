//! Optimisation of the FSG family over its free squeezing parameter `t`.
//!
//! The photon budget fixes `s >= 0` as a function of `t`, so both objectives
//! are smooth functions on `[-t_max, t_max]`. Each search scans a uniform
//! grid and then refines the best grid bracket by golden-section search.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsg::{free_parameter_range, FsgBlocks, FsgParams};
use crate::metrology::{precision, privacy_deficit, qfim_params, QfimModel, StructuredFim, WeightVector};
use crate::search::{argmax, golden_section_max, linspace};

pub const GRID_POINTS: usize = 2001;
pub const BRACKET_TOL: f64 = 1e-10;
const MAX_GOLDEN_ITER: usize = 500;
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Precision,
    Privacy,
}

impl Objective {
    pub fn as_str(&self) -> &'static str {
        match self {
            Objective::Precision => "precision",
            Objective::Privacy => "privacy",
        }
    }
}

impl std::fmt::Display for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "precision" => Ok(Objective::Precision),
            "privacy" => Ok(Objective::Privacy),
            other => Err(Error::Domain(format!("unknown objective `{other}`"))),
        }
    }
}

/// A photon budget on `modes` nodes at thermal occupation `n_th`.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub modes: usize,
    pub n_th: f64,
    pub n_tot: f64,
    pub weights: WeightVector,
    pub model: QfimModel,
    t_max: f64,
}

impl Problem {
    /// Mean-function weights and the exact isothermal QFIM.
    pub fn new(modes: usize, n_th: f64, n_tot: f64) -> Result<Self> {
        let t_max = free_parameter_range(modes, n_th, n_tot)?;
        Ok(Self {
            modes,
            n_th,
            n_tot,
            weights: WeightVector::mean(modes),
            model: QfimModel::default(),
            t_max,
        })
    }

    pub fn with_weights(mut self, weights: WeightVector) -> Result<Self> {
        if weights.len() != self.modes {
            return Err(Error::Domain(format!(
                "{} weights for {} modes",
                weights.len(),
                self.modes
            )));
        }
        self.weights = weights;
        Ok(self)
    }

    pub fn with_model(mut self, model: QfimModel) -> Self {
        self.model = model;
        self
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// State at free parameter `t`, clamped to the feasible interval.
    pub fn params_at(&self, t: f64) -> FsgParams {
        let t = t.clamp(-self.t_max, self.t_max);
        let m = self.modes as f64;
        let nu = 1.0 + 2.0 * self.n_th;
        let h = (2.0 * self.n_tot + m) / nu - (m - 1.0) * (2.0 * t).cosh();
        FsgParams { modes: self.modes, n_th: self.n_th, s: 0.5 * h.max(1.0).acosh(), t }
    }

    pub fn evaluate(&self, t: f64) -> Result<Evaluation> {
        let params = self.params_at(t);
        let fim = qfim_params(&params, self.model);
        let xi = match precision(&fim, &self.weights) {
            Ok(xi) => xi,
            Err(Error::Singular) | Err(Error::OutOfRange { .. }) => 0.0,
            Err(e) => return Err(e),
        };
        let deficit = match privacy_deficit(&fim, &self.weights) {
            Ok(d) => Some(d),
            Err(Error::Undefined) => None,
            Err(e) => return Err(e),
        };
        Ok(Evaluation { params, blocks: params.blocks(), fim, xi, privacy_deficit: deficit })
    }
}

/// Figures of merit of one member of the family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub params: FsgParams,
    pub blocks: FsgBlocks,
    pub fim: StructuredFim,
    pub xi: f64,
    /// `1 - P`; `None` when the QFIM vanishes.
    pub privacy_deficit: Option<f64>,
}

impl Evaluation {
    pub fn privacy(&self) -> Option<f64> {
        self.privacy_deficit.map(|d| 1.0 - d)
    }

    fn score(&self, objective: Objective) -> f64 {
        match objective {
            Objective::Precision => self.xi,
            Objective::Privacy => self.privacy_deficit.map_or(f64::NEG_INFINITY, |d| -d),
        }
    }

    fn secondary(&self, objective: Objective) -> f64 {
        self.score(match objective {
            Objective::Precision => Objective::Privacy,
            Objective::Privacy => Objective::Precision,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub objective: Objective,
    pub t_star: f64,
    pub s_star: f64,
    pub blocks: FsgBlocks,
    pub fim: StructuredFim,
    pub xi: f64,
    pub privacy: Option<f64>,
    pub privacy_deficit: Option<f64>,
    /// `xi` over the largest precision reachable with the same budget.
    pub ratio_to_best_xi: f64,
    pub converged: bool,
    pub iterations: usize,
}

struct Located {
    eval: Evaluation,
    converged: bool,
    iterations: usize,
}

fn locate(problem: &Problem, objective: Objective) -> Result<Located> {
    if problem.t_max == 0.0 {
        return Ok(Located { eval: problem.evaluate(0.0)?, converged: true, iterations: 0 });
    }
    let grid = linspace(-problem.t_max, problem.t_max, GRID_POINTS);
    let evals = grid
        .iter()
        .map(|&t| problem.evaluate(t))
        .collect::<Result<Vec<_>>>()?;
    let scores: Vec<f64> = evals.iter().map(|e| e.score(objective)).collect();
    let best = argmax(&scores).ok_or_else(|| {
        Error::Degenerate(format!("{objective} is undefined on the whole free-parameter range"))
    })?;
    // ties on the objective go to the better secondary figure of merit, then
    // to the smaller squeezing of the orthogonal modes
    let tie = TIE_TOL * scores[best].abs().max(1.0);
    let best = (0..grid.len())
        .filter(|&i| scores[best] - scores[i] <= tie)
        .max_by(|&i, &j| {
            evals[i]
                .secondary(objective)
                .total_cmp(&evals[j].secondary(objective))
                .then(grid[j].abs().total_cmp(&grid[i].abs()))
                .then(j.cmp(&i))
        })
        .unwrap_or(best);

    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let mut failure = None;
    let refined = golden_section_max(
        |t| match problem.evaluate(t) {
            Ok(e) => e.score(objective),
            Err(e) => {
                failure.get_or_insert(e);
                f64::NEG_INFINITY
            }
        },
        lo,
        hi,
        BRACKET_TOL,
        MAX_GOLDEN_ITER,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    if !refined.converged {
        return Err(Error::Convergence(format!(
            "golden-section refinement of {objective} stalled after {} iterations",
            refined.iterations
        )));
    }
    let eval = if refined.fx >= scores[best] { problem.evaluate(refined.x)? } else { evals[best] };
    Ok(Located { eval, converged: refined.converged, iterations: refined.iterations })
}

/// Maximises `objective` over the free parameter.
pub fn optimize(problem: &Problem, objective: Objective) -> Result<OptResult> {
    let found = locate(problem, objective)?;
    let best_xi = match objective {
        Objective::Precision => found.eval.xi,
        Objective::Privacy => locate(problem, Objective::Precision)?.eval.xi,
    };
    let ratio = if best_xi > 0.0 { found.eval.xi / best_xi } else { 1.0 };
    let e = found.eval;
    Ok(OptResult {
        objective,
        t_star: e.params.t,
        s_star: e.params.s,
        blocks: e.blocks,
        fim: e.fim,
        xi: e.xi,
        privacy: e.privacy(),
        privacy_deficit: e.privacy_deficit,
        ratio_to_best_xi: ratio,
        converged: found.converged,
        iterations: found.iterations,
    })
}

/// Precision-optimal state for the mean of the phases.
pub fn maximize_precision(modes: usize, n_th: f64, n_tot: f64) -> Result<OptResult> {
    optimize(&Problem::new(modes, n_th, n_tot)?, Objective::Precision)
}

/// Privacy-optimal state for the mean of the phases.
pub fn maximize_privacy(modes: usize, n_th: f64, n_tot: f64) -> Result<OptResult> {
    optimize(&Problem::new(modes, n_th, n_tot)?, Objective::Privacy)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub t: f64,
    pub s: f64,
    pub xi: f64,
    pub privacy: Option<f64>,
}

/// Raw objective curves on a uniform grid over `[-t_max, t_max]`.
pub fn scan_free_parameter(problem: &Problem, grid_points: usize) -> Result<Vec<ScanRow>> {
    if grid_points < 3 {
        return Err(Error::Domain(format!("need at least 3 grid points, got {grid_points}")));
    }
    linspace(-problem.t_max, problem.t_max, grid_points)
        .into_iter()
        .map(|t| {
            let e = problem.evaluate(t)?;
            Ok(ScanRow { t: e.params.t, s: e.params.s, xi: e.xi, privacy: e.privacy() })
        })
        .collect()
}

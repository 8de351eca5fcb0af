//! One row of a sweep, and the single-state report built on it.

use fsg_core::homodyne::optimize_homodyne_angle;
use fsg_core::metrology::{privacy, QfimModel, WeightVector};
use fsg_core::optimizer::{optimize, Objective, OptResult, Problem};
use fsg_core::Error;
use serde::Serialize;

/// Column order is the CSV header.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    #[serde(rename = "M")]
    pub modes: usize,
    pub n_th: f64,
    #[serde(rename = "N_tot")]
    pub n_tot: f64,
    pub objective: Objective,
    pub t_star: Option<f64>,
    pub s_star: Option<f64>,
    pub eps1: Option<f64>,
    pub eps2: Option<f64>,
    pub gam1: Option<f64>,
    pub gam2: Option<f64>,
    #[serde(rename = "F11")]
    pub f11: Option<f64>,
    #[serde(rename = "F12")]
    pub f12: Option<f64>,
    pub xi: Option<f64>,
    pub xi_ratio_to_opt: Option<f64>,
    pub privacy: Option<f64>,
    pub one_minus_privacy: Option<f64>,
    pub theta_hd_star: Option<f64>,
    pub xi_hd: Option<f64>,
    pub r_hd: Option<f64>,
    pub feasible: bool,
}

#[cfg(test)]
pub const HEADER: [&str; 20] = [
    "M", "n_th", "N_tot", "objective", "t_star", "s_star", "eps1", "eps2", "gam1", "gam2", "F11", "F12",
    "xi", "xi_ratio_to_opt", "privacy", "one_minus_privacy", "theta_hd_star", "xi_hd", "r_hd", "feasible",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomodyneExtra {
    /// Privacy of the homodyne Fisher matrix at the chosen angle.
    pub privacy_hd: Option<f64>,
    /// Angle that maximises the homodyne precision directly, when it differs
    /// from the trace-proxy choice.
    pub direct_theta_hd: Option<f64>,
    pub direct_xi_hd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Computed {
    pub record: SweepRecord,
    pub opt: Option<OptResult>,
    pub extra: Option<HomodyneExtra>,
}

pub struct Request {
    pub modes: usize,
    pub n_th: f64,
    pub n_tot: f64,
    pub objective: Objective,
    pub homodyne: bool,
    pub weights: WeightVector,
    pub model: QfimModel,
}

fn infeasible(req: &Request) -> SweepRecord {
    SweepRecord {
        modes: req.modes,
        n_th: req.n_th,
        n_tot: req.n_tot,
        objective: req.objective,
        t_star: None,
        s_star: None,
        eps1: None,
        eps2: None,
        gam1: None,
        gam2: None,
        f11: None,
        f12: None,
        xi: None,
        xi_ratio_to_opt: None,
        privacy: None,
        one_minus_privacy: None,
        theta_hd_star: None,
        xi_hd: None,
        r_hd: None,
        feasible: false,
    }
}

/// Optimises one configuration. Budgets below the thermal floor give a
/// row with `feasible = false`; other failures propagate.
pub fn compute(req: &Request) -> Result<Computed, Error> {
    let problem = match Problem::new(req.modes, req.n_th, req.n_tot) {
        Ok(p) => p.with_weights(req.weights.clone())?.with_model(req.model),
        Err(Error::Infeasible { .. }) => {
            return Ok(Computed { record: infeasible(req), opt: None, extra: None })
        }
        Err(e) => return Err(e),
    };
    let r = optimize(&problem, req.objective)?;
    let mut record = SweepRecord {
        t_star: Some(r.t_star),
        s_star: Some(r.s_star),
        eps1: Some(r.blocks.eps1),
        eps2: Some(r.blocks.eps2),
        gam1: Some(r.blocks.gam1),
        gam2: Some(r.blocks.gam2),
        f11: Some(r.fim.f11()),
        f12: Some(r.fim.f12()),
        xi: Some(r.xi),
        xi_ratio_to_opt: Some(r.ratio_to_best_xi),
        privacy: r.privacy,
        one_minus_privacy: r.privacy_deficit,
        feasible: true,
        ..infeasible(req)
    };
    let mut extra = None;
    if req.homodyne {
        match optimize_homodyne_angle(&r.blocks, &req.weights) {
            Ok(hd) => {
                record.theta_hd_star = Some(hd.theta_star);
                record.xi_hd = Some(hd.xi_hd);
                record.r_hd = (r.xi > 0.0).then(|| hd.xi_hd / r.xi);
                extra = Some(HomodyneExtra {
                    privacy_hd: privacy(&hd.fim, &req.weights).ok(),
                    direct_theta_hd: hd.direct.map(|d| d.theta),
                    direct_xi_hd: hd.direct.map(|d| d.xi_hd),
                });
            }
            // a state without phase information has no preferred angle
            Err(Error::Degenerate(_)) => record.xi_hd = Some(0.0),
            Err(e) => return Err(e),
        }
    }
    Ok(Computed { record, opt: Some(r), extra })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(modes: usize, n_th: f64, n_tot: f64, objective: Objective) -> Request {
        Request {
            modes,
            n_th,
            n_tot,
            objective,
            homodyne: true,
            weights: WeightVector::mean(modes),
            model: QfimModel::Isothermal,
        }
    }

    #[test]
    fn header_matches_serialized_field_order() {
        let mut w = csv::Writer::from_writer(vec![]);
        w.serialize(infeasible(&req(2, 0.0, 1.0, Objective::Precision))).unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        assert_eq!(text.lines().next().unwrap(), HEADER.join(","));
    }

    #[test]
    fn tmsv_row() {
        let c = compute(&req(2, 0.0, 1.0, Objective::Privacy)).unwrap();
        let r = c.record;
        assert!((r.xi.unwrap() - 12.0).abs() < 1e-9);
        assert!((r.privacy.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(r.one_minus_privacy.unwrap() + r.privacy.unwrap(), 1.0);
        assert!((r.xi_hd.unwrap() - 6.125).abs() < 1e-6);
    }

    #[test]
    fn below_floor_is_marked_not_dropped() {
        let c = compute(&req(3, 1.0, 2.0, Objective::Precision)).unwrap();
        assert!(!c.record.feasible);
        assert!(c.record.xi.is_none() && c.opt.is_none());
    }

    #[test]
    fn thermal_floor_row_has_zero_homodyne_information() {
        let c = compute(&req(2, 1.0, 2.0, Objective::Precision)).unwrap();
        assert!(c.record.feasible);
        assert_eq!(c.record.xi, Some(0.0));
        assert_eq!(c.record.xi_hd, Some(0.0));
        assert_eq!(c.record.privacy, None);
    }
}

//! The isothermal fully-symmetric Gaussian (FSG) family.
//!
//! Every state in the family has a covariance matrix made of identical
//! diagonal 2x2 blocks `diag(eps1, eps2)` and identical off-diagonal blocks
//! `diag(gam1, gam2)`, with all symplectic eigenvalues equal to
//! `nu = 1 + 2 n_th`. The family is charted by two squeezing parameters:
//! `s` acts on the collective mode and `t` on the `M - 1` orthogonal modes,
//! so that
//!
//! ```text
//! eps1 - gam1         = nu e^{2t}      eps2 - gam2         = nu e^{-2t}
//! eps1 + (M - 1) gam1 = nu e^{2s}      eps2 + (M - 1) gam2 = nu e^{-2s}
//! ```
//!
//! Fixing the photon budget leaves `t` as the single free parameter, with
//! `s >= 0` recovered from the photon constraint.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on symplectic eigenvalues sitting just below the vacuum value.
pub const NU_TOL: f64 = 1e-9;

/// Relative slack used when comparing a photon budget to the thermal floor.
const FLOOR_TOL: f64 = 1e-12;

/// `(M, n_th, s, t)` coordinates of an isothermal FSG state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FsgParams {
    pub modes: usize,
    pub n_th: f64,
    pub s: f64,
    pub t: f64,
}

impl FsgParams {
    pub fn new(modes: usize, n_th: f64, s: f64, t: f64) -> Result<Self> {
        if modes < 2 {
            return Err(Error::Domain(format!("need at least 2 modes, got {modes}")));
        }
        if !(n_th.is_finite() && n_th >= 0.0) {
            return Err(Error::Domain(format!("thermal occupation must be >= 0, got {n_th}")));
        }
        if !(s.is_finite() && t.is_finite()) {
            return Err(Error::Domain("squeezing parameters must be finite".into()));
        }
        Ok(Self { modes, n_th, s, t })
    }

    /// Solves the photon constraint for `s >= 0` at the given `t`.
    ///
    /// Fails with [`Error::Domain`] if `t` lies outside the feasible range.
    pub fn from_budget(modes: usize, n_th: f64, n_tot: f64, t: f64) -> Result<Self> {
        let sol = solve_s(modes, n_th, n_tot, t)?;
        if !sol.feasible {
            return Err(Error::Domain(format!(
                "t = {t} is outside the feasible range for M = {modes}, n_th = {n_th}, N = {n_tot}"
            )));
        }
        Self::new(modes, n_th, sol.s, t)
    }

    /// Common symplectic eigenvalue `1 + 2 n_th`.
    pub fn nu(&self) -> f64 {
        1.0 + 2.0 * self.n_th
    }

    pub fn blocks(&self) -> FsgBlocks {
        blocks_from_params(self)
    }
}

/// The four covariance entries of an FSG state on `modes` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FsgBlocks {
    pub modes: usize,
    pub eps1: f64,
    pub eps2: f64,
    pub gam1: f64,
    pub gam2: f64,
}

impl FsgBlocks {
    /// Validates the block entries.
    ///
    /// All four factors of the symplectic eigenvalues must be positive and
    /// both eigenvalues must be at least 1 (up to [`NU_TOL`]).
    pub fn new(modes: usize, eps1: f64, eps2: f64, gam1: f64, gam2: f64) -> Result<Self> {
        if modes < 2 {
            return Err(Error::Domain(format!("need at least 2 modes, got {modes}")));
        }
        if ![eps1, eps2, gam1, gam2].iter().all(|v| v.is_finite()) {
            return Err(Error::Domain("block entries must be finite".into()));
        }
        let blocks = Self { modes, eps1, eps2, gam1, gam2 };
        let (lo1, lo2, hi1, hi2) = blocks.factors();
        if lo1 <= 0.0 || lo2 <= 0.0 || hi1 <= 0.0 || hi2 <= 0.0 {
            return Err(Error::Domain(format!(
                "non-positive symplectic factor in ({lo1}, {lo2}, {hi1}, {hi2})"
            )));
        }
        let nu_minus = (lo1 * lo2).sqrt();
        let nu_plus = (hi1 * hi2).sqrt();
        if nu_minus < 1.0 - NU_TOL || nu_plus < 1.0 - NU_TOL {
            return Err(Error::Domain(format!(
                "symplectic eigenvalues ({nu_minus}, {nu_plus}) fall below the vacuum value"
            )));
        }
        Ok(blocks)
    }

    pub fn vacuum(modes: usize) -> Self {
        Self { modes, eps1: 1.0, eps2: 1.0, gam1: 0.0, gam2: 0.0 }
    }

    /// `(eps1 - gam1, eps2 - gam2, eps1 + (M-1) gam1, eps2 + (M-1) gam2)`.
    pub(crate) fn factors(&self) -> (f64, f64, f64, f64) {
        let m1 = (self.modes - 1) as f64;
        (
            self.eps1 - self.gam1,
            self.eps2 - self.gam2,
            self.eps1 + m1 * self.gam1,
            self.eps2 + m1 * self.gam2,
        )
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.eps1, self.eps2, self.gam1, self.gam2]
    }
}

pub fn blocks_from_params(p: &FsgParams) -> FsgBlocks {
    let m = p.modes as f64;
    let nu = p.nu();
    let (es, et) = ((2.0 * p.s).exp(), (2.0 * p.t).exp());
    let (ems, emt) = ((-2.0 * p.s).exp(), (-2.0 * p.t).exp());
    FsgBlocks {
        modes: p.modes,
        eps1: nu * (es + (m - 1.0) * et) / m,
        eps2: nu * (ems + (m - 1.0) * emt) / m,
        gam1: nu * (es - et) / m,
        gam2: nu * (ems - emt) / m,
    }
}

/// Inverts [`blocks_from_params`] for isothermal blocks.
pub fn params_from_blocks(b: &FsgBlocks) -> Result<FsgParams> {
    let (lo1, lo2, hi1, hi2) = b.factors();
    if lo1 <= 0.0 || lo2 <= 0.0 || hi1 <= 0.0 || hi2 <= 0.0 {
        return Err(Error::Domain("blocks have a non-positive symplectic factor".into()));
    }
    let nu_minus = (lo1 * lo2).sqrt();
    let nu_plus = (hi1 * hi2).sqrt();
    if (nu_minus - nu_plus).abs() > 1e-8 * nu_plus {
        return Err(Error::Domain(format!(
            "blocks are not isothermal: nu- = {nu_minus}, nu+ = {nu_plus}"
        )));
    }
    let nu = 0.5 * (nu_minus + nu_plus);
    let n_th = (0.5 * (nu - 1.0)).max(0.0);
    FsgParams::new(b.modes, n_th, 0.25 * (hi1 / hi2).ln(), 0.25 * (lo1 / lo2).ln())
}

/// Mean photon number above vacuum, `M (eps1 + eps2 - 2) / 4`.
pub fn total_photons(b: &FsgBlocks) -> f64 {
    b.modes as f64 * (b.eps1 + b.eps2 - 2.0) / 4.0
}

/// Smallest total photon number an isothermal state at `n_th` can carry.
pub fn thermal_floor(modes: usize, n_th: f64) -> f64 {
    modes as f64 * n_th
}

fn check_budget(modes: usize, n_th: f64, n_tot: f64) -> Result<()> {
    if modes < 2 {
        return Err(Error::Domain(format!("need at least 2 modes, got {modes}")));
    }
    if !(n_th.is_finite() && n_th >= 0.0) {
        return Err(Error::Domain(format!("thermal occupation must be >= 0, got {n_th}")));
    }
    if !(n_tot.is_finite() && n_tot >= 0.0) {
        return Err(Error::Domain(format!("photon budget must be >= 0, got {n_tot}")));
    }
    let floor = thermal_floor(modes, n_th);
    if n_tot < floor - FLOOR_TOL * floor.max(1.0) {
        return Err(Error::Infeasible { n_tot, floor });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezingSolution {
    pub s: f64,
    pub feasible: bool,
}

/// Collective squeezing `s >= 0` that spends the remaining photon budget
/// once the orthogonal modes are squeezed by `t`.
pub fn solve_s(modes: usize, n_th: f64, n_tot: f64, t: f64) -> Result<SqueezingSolution> {
    check_budget(modes, n_th, n_tot)?;
    let m = modes as f64;
    let nu = 1.0 + 2.0 * n_th;
    let h = (2.0 * n_tot + m) / nu - (m - 1.0) * (2.0 * t).cosh();
    if h >= 1.0 - FLOOR_TOL * h.abs().max(1.0) {
        Ok(SqueezingSolution { s: 0.5 * h.max(1.0).acosh(), feasible: true })
    } else {
        Ok(SqueezingSolution { s: 0.0, feasible: false })
    }
}

/// Largest `|t|` for which [`solve_s`] has a solution.
pub fn free_parameter_range(modes: usize, n_th: f64, n_tot: f64) -> Result<f64> {
    check_budget(modes, n_th, n_tot)?;
    let m = modes as f64;
    let nu = 1.0 + 2.0 * n_th;
    let c = ((2.0 * n_tot + m) / nu - 1.0) / (m - 1.0);
    Ok(0.5 * c.max(1.0).acosh())
}

/// Pure FSG state reaching `8 N (N + 1)` for the mean of the phases.
pub fn optimal_precision_blocks(modes: usize, n_tot: f64) -> Result<FsgBlocks> {
    check_budget(modes, 0.0, n_tot)?;
    let m = modes as f64;
    let root = (n_tot * (n_tot + 1.0)).sqrt();
    let gam1 = 2.0 * (n_tot + root) / m;
    // n - sqrt(n (n + 1)) rewritten to avoid cancellation
    let gam2 = if n_tot > 0.0 { -2.0 * n_tot / (n_tot + root) / m } else { 0.0 };
    Ok(FsgBlocks { modes, eps1: 1.0 + gam1, eps2: 1.0 + gam2, gam1, gam2 })
}

/// Two-mode squeezed vacuum with `n_tot` photons.
pub fn tmsv_blocks(n_tot: f64) -> Result<FsgBlocks> {
    check_budget(2, 0.0, n_tot)?;
    let g = (n_tot * (n_tot + 2.0)).sqrt();
    Ok(FsgBlocks { modes: 2, eps1: 1.0 + n_tot, eps2: 1.0 + n_tot, gam1: g, gam2: -g })
}

/// `(gam1^2 + gam2^2) - (eps1^2 + eps2^2 - 2)`; zero on pure states with `F11 = F12`.
pub fn privacy_condition_residual(b: &FsgBlocks) -> f64 {
    (b.gam1 * b.gam1 + b.gam2 * b.gam2) - (b.eps1 * b.eps1 + b.eps2 * b.eps2 - 2.0)
}

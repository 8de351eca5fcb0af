//! Local homodyne detection on FSG probes.
//!
//! Every node measures the quadrature `x cos θ_HD + p sin θ_HD` after its
//! phase shift. With zero first moments the outcomes are Gaussian with an
//! `M x M` covariance `Γ(Θ)`, and the classical Fisher matrix is
//! `F_jk = ½ Tr[Γ⁻¹ ∂_j Γ Γ⁻¹ ∂_k Γ]`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::fsg::FsgBlocks;
use crate::metrology::{precision, StructuredFim, WeightVector};
use crate::optimizer::{optimize, Objective, OptResult, Problem};
use crate::search::{argmax, golden_section_max, linspace};

pub const ANGLE_GRID_POINTS: usize = 1001;
const ANGLE_TOL: f64 = 1e-10;
const STRUCTURE_TOL: f64 = 1e-10;
/// Maximum-likelihood search window around the zero prior.
pub const MLE_BRACKET: f64 = 0.3;
const MLE_GRID_POINTS: usize = 61;

/// Equal local-oscillator angle on every node; the phase prior is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomodyneConfig {
    pub theta_hd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_samples: usize,
    pub trials: usize,
    pub seed: u64,
}

impl McConfig {
    pub fn new(n_samples: usize, trials: usize, seed: u64) -> Result<Self> {
        if n_samples < 2 || trials < 2 {
            return Err(Error::Domain(format!(
                "Monte-Carlo needs at least 2 samples and 2 trials, got {n_samples} and {trials}"
            )));
        }
        Ok(Self { n_samples, trials, seed })
    }
}

/// Outcome covariance `Γ_jk(Θ) = uᵀ R(θ_j) V_jk R(θ_k)ᵀ u`, `u = (cos θ_HD, sin θ_HD)`.
pub fn homodyne_cov(blocks: &FsgBlocks, theta_hd: f64, thetas: &[f64]) -> Result<DMatrix<f64>> {
    let m = blocks.modes;
    if thetas.len() != m {
        return Err(Error::Domain(format!("{} phases for {m} modes", thetas.len())));
    }
    // R(θ)ᵀ u = (cos(θ_HD + θ), sin(θ_HD + θ))
    let dirs: Vec<(f64, f64)> = thetas.iter().map(|th| (theta_hd + th).sin_cos()).collect();
    let gamma = DMatrix::from_fn(m, m, |j, k| {
        let ((sj, cj), (sk, ck)) = (dirs[j], dirs[k]);
        if j == k {
            blocks.eps1 * cj * cj + blocks.eps2 * sj * sj
        } else {
            blocks.gam1 * cj * ck + blocks.gam2 * sj * sk
        }
    });
    check_positive_definite(&gamma)?;
    Ok(gamma)
}

fn check_positive_definite(gamma: &DMatrix<f64>) -> Result<()> {
    if Cholesky::new(gamma.clone()).is_some() {
        return Ok(());
    }
    let min = SymmetricEigen::new(gamma.clone()).eigenvalues.min();
    Err(Error::Numerical(format!(
        "homodyne covariance is not positive definite (min eigenvalue {min:.3e})"
    )))
}

/// Analytic `∂Γ/∂θ_j` at `Θ = 0`.
pub fn homodyne_cov_derivatives(blocks: &FsgBlocks, theta_hd: f64) -> Vec<DMatrix<f64>> {
    let m = blocks.modes;
    let sin2 = (2.0 * theta_hd).sin();
    let diag = (blocks.eps2 - blocks.eps1) * sin2;
    let off = 0.5 * (blocks.gam2 - blocks.gam1) * sin2;
    (0..m)
        .map(|j| {
            let mut d = DMatrix::zeros(m, m);
            d[(j, j)] = diag;
            for k in (0..m).filter(|&k| k != j) {
                d[(j, k)] = off;
                d[(k, j)] = off;
            }
            d
        })
        .collect()
}

/// Fisher matrix of a zero-mean Gaussian model from its covariance and derivatives.
pub fn gaussian_fim_dense(gamma: &DMatrix<f64>, derivs: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let chol = Cholesky::new(gamma.clone())
        .ok_or_else(|| Error::Numerical("covariance is not positive definite".into()))?;
    let solved: Vec<DMatrix<f64>> = derivs.iter().map(|d| chol.solve(d)).collect();
    let n = derivs.len();
    let mut f = DMatrix::zeros(n, n);
    for j in 0..n {
        for k in j..n {
            let val = 0.5 * solved[j].component_mul(&solved[k].transpose()).sum();
            f[(j, k)] = val;
            f[(k, j)] = val;
        }
    }
    Ok(f)
}

/// Dense homodyne Fisher matrix at `Θ = 0`.
pub fn homodyne_fim_dense(blocks: &FsgBlocks, theta_hd: f64) -> Result<DMatrix<f64>> {
    let gamma = homodyne_cov(blocks, theta_hd, &vec![0.0; blocks.modes])?;
    gaussian_fim_dense(&gamma, &homodyne_cov_derivatives(blocks, theta_hd))
}

/// Homodyne Fisher matrix in `a I + b J` form.
///
/// Fails if the dense result departs from that structure.
pub fn homodyne_fim(blocks: &FsgBlocks, theta_hd: f64) -> Result<StructuredFim> {
    structured_from_dense(&homodyne_fim_dense(blocks, theta_hd)?)
}

pub fn structured_from_dense(f: &DMatrix<f64>) -> Result<StructuredFim> {
    let m = f.nrows();
    let diag: Vec<f64> = (0..m).map(|j| f[(j, j)]).collect();
    let off: Vec<f64> = (0..m)
        .flat_map(|j| (0..m).filter(move |&k| k != j).map(move |k| (j, k)))
        .map(|jk| f[jk])
        .collect();
    let spread = |v: &[f64]| {
        let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        if v.is_empty() { 0.0 } else { hi - lo }
    };
    let scale = f.amax().max(1.0);
    if spread(&diag) > STRUCTURE_TOL * scale || spread(&off) > STRUCTURE_TOL * scale {
        return Err(Error::Numerical("Fisher matrix is not of the form aI + bJ".into()));
    }
    let d = diag.iter().sum::<f64>() / m as f64;
    let o = if off.is_empty() { 0.0 } else { off.iter().sum::<f64>() / off.len() as f64 };
    Ok(StructuredFim::from_entries(m, d, o))
}

fn weighted_trace(f: &StructuredFim, w: &WeightVector) -> f64 {
    f.a * w.norm2_sq() + f.b * w.sum().powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleChoice {
    pub theta: f64,
    pub xi_hd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomodyneAngle {
    /// Angle maximising `Tr(W F_HD)`.
    pub theta_star: f64,
    pub fim: StructuredFim,
    pub xi_hd: f64,
    /// Direct maximiser of `1 / Tr(W F_HD⁺)`, when it beats the proxy
    /// angle by more than 1e-6 relative.
    pub direct: Option<AngleChoice>,
}

/// Refines every grid peak within 1e-3 of the best value and returns the
/// best refined point. Symmetric copies of the optimum are common, so
/// values within 1e-9 relative count as ties and the smallest angle wins.
fn refine_angle<F>(grid: &[f64], values: &[f64], mut f: F) -> Option<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    let best = argmax(values)?;
    let peak = values[best];
    let n = grid.len();
    let mut out: Option<(f64, f64)> = None;
    for i in 0..n {
        let left = if i == 0 { f64::NEG_INFINITY } else { values[i - 1] };
        let right = if i + 1 == n { f64::NEG_INFINITY } else { values[i + 1] };
        let v = values[i];
        if !(v.is_finite() && v >= left && v >= right && v >= peak - 1e-3 * peak.abs()) {
            continue;
        }
        let lo = if i == 0 { grid[0] } else { grid[i - 1] };
        let hi = if i + 1 == n { std::f64::consts::PI } else { grid[i + 1] };
        let r = golden_section_max(&mut f, lo, hi, ANGLE_TOL, 500);
        let cand = if r.fx >= v { (r.x, r.fx) } else { (grid[i], v) };
        out = match out {
            Some(cur) if cand.1 <= cur.1 * (1.0 + 1e-9) => Some(cur),
            _ => Some(cand),
        };
    }
    out
}

/// Picks the common homodyne angle on `[0, π)`.
pub fn optimize_homodyne_angle(blocks: &FsgBlocks, w: &WeightVector) -> Result<HomodyneAngle> {
    let step = std::f64::consts::PI / ANGLE_GRID_POINTS as f64;
    let grid: Vec<f64> = (0..ANGLE_GRID_POINTS).map(|i| i as f64 * step).collect();
    let fims = grid
        .iter()
        .map(|&th| homodyne_fim(blocks, th))
        .collect::<Result<Vec<_>>>()?;
    let proxy: Vec<f64> = fims.iter().map(|f| weighted_trace(f, w)).collect();
    let peak = proxy.iter().copied().fold(0.0, f64::max);
    if peak <= 1e-12 {
        return Err(Error::Degenerate("homodyne Fisher matrix vanishes at every angle".into()));
    }
    let xi_at = |f: &StructuredFim| precision(f, w).unwrap_or(0.0);
    let fim_at = |th: f64| homodyne_fim(blocks, th).ok();

    let (theta_star, _) = refine_angle(&grid, &proxy, |th| {
        fim_at(th).map_or(f64::NEG_INFINITY, |f| weighted_trace(&f, w))
    })
    .expect("finite proxy values");
    let fim = homodyne_fim(blocks, theta_star)?;
    let xi_hd = xi_at(&fim);

    let direct_vals: Vec<f64> = fims.iter().map(xi_at).collect();
    let direct = refine_angle(&grid, &direct_vals, |th| fim_at(th).map_or(f64::NEG_INFINITY, |f| xi_at(&f)))
        .filter(|&(_, xi)| xi > xi_hd * (1.0 + 1e-6))
        .map(|(theta, xi_hd)| AngleChoice { theta, xi_hd });
    Ok(HomodyneAngle { theta_star, fim, xi_hd, direct })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomodyneRatio {
    pub state: OptResult,
    pub angle: HomodyneAngle,
    /// Homodyne precision over the QFIM precision of the same state.
    pub r_hd: f64,
}

/// Homodyne versus collective-measurement precision on the privacy-optimal state.
pub fn homodyne_precision_ratio(modes: usize, n_th: f64, n_tot: f64) -> Result<HomodyneRatio> {
    homodyne_ratio_for(&Problem::new(modes, n_th, n_tot)?, Objective::Privacy)
}

pub fn homodyne_ratio_for(problem: &Problem, objective: Objective) -> Result<HomodyneRatio> {
    let state = optimize(problem, objective)?;
    let angle = optimize_homodyne_angle(&state.blocks, &problem.weights)?;
    let r_hd = if state.xi > 0.0 { angle.xi_hd / state.xi } else { 0.0 };
    Ok(HomodyneRatio { state, angle, r_hd })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub empirical_var: f64,
    pub crb: f64,
    pub ratio: f64,
    /// 95% interval for the variance from the chi-square law of the sample variance.
    pub ci95: (f64, f64),
    pub estimate_mean: f64,
    pub xi_hd: f64,
    pub n_samples: usize,
    pub trials: usize,
    pub seed: u64,
}

/// Lower-triangular factor `L` with `L Lᵀ = Γ`.
fn sampling_factor(gamma: &DMatrix<f64>) -> DMatrix<f64> {
    if let Some(chol) = Cholesky::new(gamma.clone()) {
        return chol.l();
    }
    let eig = SymmetricEigen::new(gamma.clone());
    let roots = eig.eigenvalues.map(|l| if l < 1e-12 { 0.0 } else { l.sqrt() });
    &eig.eigenvectors * DMatrix::from_diagonal(&roots)
}

/// `-(ln det Γ + tr(Γ⁻¹ S))`, the per-sample log-likelihood up to constants.
fn log_likelihood(gamma: DMatrix<f64>, second_moment: &DMatrix<f64>) -> f64 {
    match Cholesky::<f64, Dyn>::new(gamma) {
        Some(chol) => {
            let logdet = 2.0 * chol.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>();
            -(logdet + chol.solve(second_moment).trace())
        }
        None => f64::NEG_INFINITY,
    }
}

fn trial_estimate(
    blocks: &FsgBlocks,
    theta_hd: f64,
    factor: &DMatrix<f64>,
    mc: &McConfig,
    trial: usize,
) -> Result<f64> {
    let m = blocks.modes;
    let mut rng = ChaCha8Rng::seed_from_u64(mc.seed);
    rng.set_stream(trial as u64);
    let mut s = DMatrix::<f64>::zeros(m, m);
    let mut z = DVector::<f64>::zeros(m);
    for _ in 0..mc.n_samples {
        z.iter_mut().for_each(|v| *v = StandardNormal.sample(&mut rng));
        let x = factor * &z;
        s.ger(1.0, &x, &x, 1.0);
    }
    s /= mc.n_samples as f64;

    let loglik = |theta: f64| match homodyne_cov(blocks, theta_hd, &vec![theta; m]) {
        Ok(g) => log_likelihood(g, &s),
        Err(_) => f64::NEG_INFINITY,
    };
    let grid = linspace(-MLE_BRACKET, MLE_BRACKET, MLE_GRID_POINTS);
    let values: Vec<f64> = grid.iter().map(|&t| loglik(t)).collect();
    let best = argmax(&values)
        .ok_or_else(|| Error::Convergence(format!("likelihood undefined in trial {trial}")))?;
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let r = golden_section_max(loglik, lo, hi, 1e-10, 500);
    let theta = if r.fx >= values[best] { r.x } else { grid[best] };
    if theta.abs() >= MLE_BRACKET - 1e-6 {
        return Err(Error::Convergence(format!(
            "maximum-likelihood estimate hit the bracket boundary ({theta:+.4}) in trial {trial}"
        )));
    }
    Ok(theta)
}

/// Monte-Carlo maximum-likelihood estimation of a common phase shift
/// `θ_j = θ` (true value 0), compared against the Cramér–Rao bound
/// `1 / (n 1ᵀ F_HD 1)`.
pub fn mc_estimate(blocks: &FsgBlocks, theta_hd: f64, mc: &McConfig) -> Result<McReport> {
    McConfig::new(mc.n_samples, mc.trials, mc.seed)?;
    let m = blocks.modes;
    let fim = homodyne_fim_dense(blocks, theta_hd)?;
    let xi_hd = fim.sum();
    if xi_hd <= 1e-12 {
        return Err(Error::Convergence(
            "likelihood is flat: homodyne Fisher information along the common phase is zero".into(),
        ));
    }
    let gamma = homodyne_cov(blocks, theta_hd, &vec![0.0; m])?;
    let factor = sampling_factor(&gamma);
    let estimates = (0..mc.trials)
        .into_par_iter()
        .map(|k| trial_estimate(blocks, theta_hd, &factor, mc, k))
        .collect::<Result<Vec<_>>>()?;

    let k = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / k;
    let var = estimates.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    let chi = ChiSquared::new(k - 1.0).map_err(|e| Error::Numerical(e.to_string()))?;
    let ci95 = ((k - 1.0) * var / chi.inverse_cdf(0.975), (k - 1.0) * var / chi.inverse_cdf(0.025));
    let crb = 1.0 / (mc.n_samples as f64 * xi_hd);
    Ok(McReport {
        empirical_var: var,
        crb,
        ratio: var / crb,
        ci95,
        estimate_mean: mean,
        xi_hd,
        n_samples: mc.n_samples,
        trials: mc.trials,
        seed: mc.seed,
    })
}

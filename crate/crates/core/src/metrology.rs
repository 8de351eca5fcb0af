//! Fisher information, precision and privacy for phase sensing with FSG probes.
//!
//! Fisher matrices of FSG states under local phase shifts are permutation
//! invariant, `F = a I + b J` with `J` the all-ones matrix. Their spectrum is
//! `a` on the subspace orthogonal to `(1, ..., 1)` (multiplicity `M - 1`) and
//! `a + M b` along it, which is what every inverse below is built on.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsg::{FsgBlocks, FsgParams};
use crate::symplectic::{physicality_check, CovarianceState, SymplecticForm};

/// Relative rank tolerance separating regular and pseudo inverses.
pub const TOL_RANK: f64 = 1e-10;

/// Traces below this are treated as a zero Fisher matrix.
const TRACE_TOL: f64 = 1e-12;

/// Weight components outside the range of `F` larger than this make the
/// target function unestimable.
const RANGE_TOL: f64 = 1e-9;

/// Which closed form is used for the QFIM of an FSG state.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QfimModel {
    /// Exact QFIM for isothermal states with symplectic eigenvalue `nu`:
    /// `F11 = 2 [(eps1² + eps2²)/2 - nu²] / (1 + nu²)`,
    /// `F12 = (gam1² + gam2²) / (1 + nu²)`.
    #[default]
    Isothermal,
    /// The pure-state expressions `F11 = (eps1² + eps2²)/2 - 1`,
    /// `F12 = (gam1² + gam2²)/2`, applied at every temperature.
    PureStateFormula,
}

/// `a I + b J` on `modes` parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuredFim {
    pub modes: usize,
    pub a: f64,
    pub b: f64,
}

impl StructuredFim {
    pub fn new(modes: usize, a: f64, b: f64) -> Self {
        Self { modes, a, b }
    }

    /// From the diagonal entry `F11` and off-diagonal entry `F12`.
    pub fn from_entries(modes: usize, f11: f64, f12: f64) -> Self {
        Self { modes, a: f11 - f12, b: f12 }
    }

    pub fn f11(&self) -> f64 {
        self.a + self.b
    }

    pub fn f12(&self) -> f64 {
        self.b
    }

    pub fn trace(&self) -> f64 {
        self.modes as f64 * self.f11()
    }

    /// Eigenvalue on the complement of the symmetric direction.
    pub fn transverse_eigenvalue(&self) -> f64 {
        self.a
    }

    /// Eigenvalue along `(1, ..., 1)`.
    pub fn symmetric_eigenvalue(&self) -> f64 {
        self.a + self.modes as f64 * self.b
    }

    pub fn is_psd(&self) -> bool {
        self.a >= -1e-12 && self.symmetric_eigenvalue() >= -1e-12
    }

    pub fn dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.modes, self.modes, |j, k| {
            if j == k {
                self.a + self.b
            } else {
                self.b
            }
        })
    }

    fn rank_scale(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(1.0)
    }

    /// Inverse eigenvalues on the transverse and symmetric subspaces, or
    /// `None` for eigenvalues below the rank tolerance.
    fn inverse_eigenvalues(&self) -> (Option<f64>, Option<f64>) {
        let tol = TOL_RANK * self.rank_scale();
        let perp = self.transverse_eigenvalue();
        let par = self.symmetric_eigenvalue();
        (
            (perp > tol).then(|| 1.0 / perp),
            (par > tol).then(|| 1.0 / par),
        )
    }
}

/// Positive weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::Domain("weight vector is empty".into()));
        }
        if w.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::Domain("weights must be positive and finite".into()));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("weights must sum to 1, got {sum}")));
        }
        Ok(Self(w))
    }

    /// Weights of the mean function, `1/M` each.
    pub fn mean(modes: usize) -> Self {
        Self(vec![1.0 / modes as f64; modes])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn norm2_sq(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum()
    }

    /// `sum_i (w_i - mean(w))^2`, the squared norm off the symmetric direction.
    pub fn transverse_norm_sq(&self) -> f64 {
        if self.is_mean() {
            return 0.0;
        }
        let mean = self.sum() / self.len() as f64;
        self.0.iter().map(|x| (x - mean) * (x - mean)).sum()
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.0)
    }

    /// `W = w w^T`.
    pub fn weight_matrix(&self) -> DMatrix<f64> {
        let w = self.to_vector();
        &w * w.transpose()
    }

    pub fn is_mean(&self) -> bool {
        self.0.iter().all(|&x| x == self.0[0])
    }
}

/// QFIM of an isothermal FSG state from its blocks.
pub fn qfim_fsg(blocks: &FsgBlocks) -> Result<StructuredFim> {
    qfim_fsg_with(blocks, QfimModel::Isothermal)
}

pub fn qfim_fsg_with(blocks: &FsgBlocks, model: QfimModel) -> Result<StructuredFim> {
    let (lo1, lo2, hi1, hi2) = blocks.factors();
    if lo1 <= 0.0 || lo2 <= 0.0 || hi1 <= 0.0 || hi2 <= 0.0 {
        return Err(Error::Domain("blocks have a non-positive symplectic factor".into()));
    }
    let nu_minus = (lo1 * lo2).sqrt();
    let nu_plus = (hi1 * hi2).sqrt();
    if (nu_minus - nu_plus).abs() > 1e-8 * nu_plus.max(nu_minus) {
        return Err(Error::Domain(format!(
            "closed-form QFIM needs an isothermal state, got nu- = {nu_minus}, nu+ = {nu_plus}"
        )));
    }
    let nu2 = nu_minus * nu_plus;
    let eps_sq = blocks.eps1 * blocks.eps1 + blocks.eps2 * blocks.eps2;
    let gam_sq = blocks.gam1 * blocks.gam1 + blocks.gam2 * blocks.gam2;
    let (f11, f12) = match model {
        QfimModel::Isothermal => ((eps_sq - 2.0 * nu2) / (1.0 + nu2), gam_sq / (1.0 + nu2)),
        QfimModel::PureStateFormula => (eps_sq / 2.0 - 1.0, gam_sq / 2.0),
    };
    Ok(StructuredFim::from_entries(blocks.modes, f11, f12))
}

/// QFIM evaluated directly in the `(s, t)` chart.
///
/// Algebraically equal to [`qfim_fsg_with`] on `blocks_from_params(p)`, but
/// `a = F11 - F12` is formed as a sum of non-negative terms, so it keeps full
/// relative accuracy near the perfect-privacy point where `F11 ≈ F12`.
pub fn qfim_params(p: &FsgParams, model: QfimModel) -> StructuredFim {
    let m = p.modes as f64;
    let nu2 = p.nu() * p.nu();
    let (sum, diff) = (p.s + p.t, p.s - p.t);
    // (eps1² + eps2² - gam1² - gam2²) / nu² - 2
    let spread = 4.0 * (1.0 - 2.0 / m) * (2.0 * p.t).sinh().powi(2) + 8.0 / m * sum.sinh().powi(2);
    // (gam1² + gam2²) / nu²
    let cross = 8.0 * diff.sinh().powi(2) * (2.0 * sum).cosh() / (m * m);
    let (a, b) = match model {
        QfimModel::Isothermal => (nu2 * spread / (1.0 + nu2), nu2 * cross / (1.0 + nu2)),
        QfimModel::PureStateFormula => (0.5 * nu2 * spread + (nu2 - 1.0), 0.5 * nu2 * cross),
    };
    StructuredFim::new(p.modes, a, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InverseKind {
    Regular,
    Pseudo,
}

/// `alpha I + beta J`, either the inverse or the Moore–Penrose pseudo-inverse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FimInverse {
    pub modes: usize,
    pub kind: InverseKind,
    pub alpha: f64,
    pub beta: f64,
}

impl FimInverse {
    pub fn dense(&self) -> DMatrix<f64> {
        StructuredFim::new(self.modes, self.alpha, self.beta).dense()
    }
}

pub fn fim_inverse(f: &StructuredFim) -> Result<FimInverse> {
    let m = f.modes as f64;
    match f.inverse_eigenvalues() {
        (Some(_), Some(_)) => {
            let alpha = 1.0 / f.a;
            let beta = -alpha * f.b / (f.f11() + (m - 1.0) * f.f12());
            Ok(FimInverse { modes: f.modes, kind: InverseKind::Regular, alpha, beta })
        }
        (None, None) => Err(Error::Singular),
        (perp, par) => {
            // pinv = perp (I - J/M) + par J/M
            let perp = perp.unwrap_or(0.0);
            let par = par.unwrap_or(0.0);
            Ok(FimInverse {
                modes: f.modes,
                kind: InverseKind::Pseudo,
                alpha: perp,
                beta: (par - perp) / m,
            })
        }
    }
}

/// Precision `xi = 1 / (w^T F^+ w)` for the linear function `w^T Θ`.
///
/// The quadratic form is split over the two eigenspaces of `F`; for a
/// regular `F` this equals `alpha ||w||² + beta (sum w)²`.
pub fn precision(f: &StructuredFim, w: &WeightVector) -> Result<f64> {
    check_len(f.modes, w)?;
    let (perp_inv, par_inv) = f.inverse_eigenvalues();
    if perp_inv.is_none() && par_inv.is_none() {
        return Err(Error::Singular);
    }
    let perp_sq = w.transverse_norm_sq();
    let par_sq = w.sum().powi(2) / f.modes as f64;
    let mut quad = 0.0;
    match perp_inv {
        Some(inv) => quad += perp_sq * inv,
        None if perp_sq.sqrt() > RANGE_TOL => {
            return Err(Error::OutOfRange { residual: perp_sq.sqrt() })
        }
        None => {}
    }
    match par_inv {
        Some(inv) => quad += par_sq * inv,
        None if par_sq.sqrt() > RANGE_TOL => {
            return Err(Error::OutOfRange { residual: par_sq.sqrt() })
        }
        None => {}
    }
    Ok(1.0 / quad)
}

/// Privacy `P = Tr(W F) / (||w||² Tr F)` for a structured Fisher matrix.
pub fn privacy(f: &StructuredFim, w: &WeightVector) -> Result<f64> {
    Ok(1.0 - privacy_deficit(f, w)?)
}

/// `1 - P`, computed without subtracting nearly equal numbers.
pub fn privacy_deficit(f: &StructuredFim, w: &WeightVector) -> Result<f64> {
    check_len(f.modes, w)?;
    let trace = f.trace();
    if trace.abs() <= TRACE_TOL {
        return Err(Error::Undefined);
    }
    let m = f.modes as f64;
    let n2 = w.norm2_sq();
    // ||w||² M (a + b) - (a ||w||² + b (sum w)²)
    let num = f.a * n2 * (m - 1.0) + f.b * m * w.transverse_norm_sq();
    Ok(num / (n2 * trace))
}

/// Privacy of an arbitrary symmetric Fisher matrix.
pub fn privacy_dense(f: &DMatrix<f64>, w: &WeightVector) -> Result<f64> {
    check_len(f.nrows(), w)?;
    let trace = f.trace();
    if trace.abs() <= TRACE_TOL {
        return Err(Error::Undefined);
    }
    let wv = w.to_vector();
    let twf = (wv.transpose() * f * &wv)[(0, 0)];
    Ok(twf / (w.norm2_sq() * trace))
}

fn check_len(modes: usize, w: &WeightVector) -> Result<()> {
    if w.len() != modes {
        return Err(Error::Domain(format!(
            "weight vector has {} entries for {modes} parameters",
            w.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionReport {
    pub xi: f64,
    /// `None` when the Fisher matrix vanishes.
    pub privacy: Option<f64>,
    pub privacy_deficit: Option<f64>,
    /// `mu` in `F = mu W` when `F` is numerically proportional to the weight matrix.
    pub mu: Option<f64>,
}

pub fn precision_report(f: &StructuredFim, w: &WeightVector) -> Result<PrecisionReport> {
    let xi = precision(f, w)?;
    let (privacy, privacy_deficit) = match privacy_deficit(f, w) {
        Ok(d) => (Some(1.0 - d), Some(d)),
        Err(Error::Undefined) => (None, None),
        Err(e) => return Err(e),
    };
    let rank_one = f.a.abs() <= TOL_RANK * f.rank_scale() && f.b > 0.0;
    let mu = (rank_one && w.is_mean()).then(|| (f.modes * f.modes) as f64 * f.b);
    Ok(PrecisionReport { xi, privacy, privacy_deficit, mu })
}

/// Privacy of the precision-optimal pure state, `1 - (M - 1)/(1 + M + 2N)`.
pub fn closed_form_privacy_of_optimum(modes: usize, n_tot: f64) -> f64 {
    let m = modes as f64;
    1.0 - (m - 1.0) / (1.0 + m + 2.0 * n_tot)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSpectrum {
    pub principal: f64,
    pub principal_vec: DVector<f64>,
    pub nulls: usize,
    pub eigenvalues: Vec<f64>,
}

/// Numeric spectrum of `W = w w^T`.
pub fn weight_matrix_spectrum(w: &WeightVector) -> WeightSpectrum {
    let eig = SymmetricEigen::new(w.weight_matrix());
    let (idx, principal) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .expect("non-empty spectrum");
    let mut principal_vec = eig.eigenvectors.column(idx).into_owned();
    if principal_vec.sum() < 0.0 {
        principal_vec.neg_mut();
    }
    let nulls = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|&(i, l)| i != idx && l.abs() <= 1e-12)
        .count();
    WeightSpectrum {
        principal,
        principal_vec,
        nulls,
        eigenvalues: eig.eigenvalues.iter().copied().collect(),
    }
}

/// `∂V/∂θ_j` at `Θ = 0` for local phase rotations on each mode.
pub fn phase_generators(state: &CovarianceState) -> Vec<DMatrix<f64>> {
    let m = state.modes();
    let v = state.covariance();
    (0..m)
        .map(|j| {
            let mut g = DMatrix::zeros(2 * m, 2 * m);
            g[(2 * j, 2 * j + 1)] = 1.0;
            g[(2 * j + 1, 2 * j)] = -1.0;
            &g * v + v * g.transpose()
        })
        .collect()
}

/// QFIM of a zero-mean Gaussian state from covariance derivatives.
///
/// Evaluates `F_jk = ½ vec(∂_j V)^T (V ⊗ V - Ω ⊗ Ω)^+ vec(∂_k V)`. The
/// pseudo-inverse drops the null space that opens up for pure states;
/// singular values in the band between that null space and the retained
/// spectrum make the result unreliable and are reported as an error.
pub fn qfim_general_gaussian(state: &CovarianceState, dv: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let report = physicality_check(state);
    if !report.physical {
        return Err(Error::Physicality { min_eig: report.min_eig });
    }
    let dim = state.covariance().nrows();
    for d in dv {
        if d.nrows() != dim || d.ncols() != dim {
            return Err(Error::Domain("derivative has the wrong shape".into()));
        }
        let asym = (d - d.transpose()).amax();
        if asym > 1e-12 * d.amax().max(1.0) {
            return Err(Error::Domain("covariance derivatives must be symmetric".into()));
        }
    }
    let v = state.covariance();
    let omega = SymplecticForm::new(state.modes());
    let k = v.kronecker(v) - omega.matrix().kronecker(omega.matrix());
    // K is symmetric, so its eigen-decomposition doubles as an SVD
    let eig = SymmetricEigen::new(k);
    let smax = eig.eigenvalues.amax();
    if smax == 0.0 {
        return Err(Error::Numerical("degenerate covariance".into()));
    }
    let (lo, hi) = (1e-12 * smax, 1e-8 * smax);
    if let Some(bad) = eig.eigenvalues.iter().map(|x| x.abs()).find(|&x| x > lo && x < hi) {
        return Err(Error::Numerical(format!(
            "ill-conditioned pseudo-inverse: singular value ratio {:.3e}",
            smax / bad
        )));
    }
    let inv = eig
        .eigenvalues
        .map(|x| if x.abs() > 1e-10 * smax { 1.0 / x } else { 0.0 });
    let pinv = &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose();
    let vecs: Vec<DVector<f64>> = dv
        .iter()
        .map(|d| DVector::from_column_slice(d.as_slice()))
        .collect();
    let applied: Vec<DVector<f64>> = vecs.iter().map(|x| &pinv * x).collect();
    let n = dv.len();
    let mut f = DMatrix::zeros(n, n);
    for j in 0..n {
        for l in j..n {
            let val = 0.5 * 0.5 * (vecs[j].dot(&applied[l]) + vecs[l].dot(&applied[j]));
            f[(j, l)] = val;
            f[(l, j)] = val;
        }
    }
    Ok(f)
}

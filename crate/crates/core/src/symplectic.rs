//! Covariance-level linear algebra for `M`-mode Gaussian states.
//!
//! Quadratures are ordered `(x1, p1, ..., xM, pM)` and the vacuum has
//! covariance equal to the identity. First moments are always zero.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fsg::FsgBlocks;

/// Tolerance on the minimum eigenvalue of `V + iΩ`.
pub const PHYS_TOL: f64 = 1e-9;

/// Relative tolerance used when pairing the `±iν` eigenvalues of `ΩV`.
const PAIR_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    modes: usize,
    matrix: DMatrix<f64>,
}

impl SymplecticForm {
    pub fn new(modes: usize) -> Self {
        let mut matrix = DMatrix::zeros(2 * modes, 2 * modes);
        for j in 0..modes {
            matrix[(2 * j, 2 * j + 1)] = 1.0;
            matrix[(2 * j + 1, 2 * j)] = -1.0;
        }
        Self { modes, matrix }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

pub fn symplectic_form(modes: usize) -> SymplecticForm {
    SymplecticForm::new(modes)
}

/// Zero-mean Gaussian state described by its covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceState {
    v: DMatrix<f64>,
}

impl CovarianceState {
    /// Wraps a covariance matrix, replacing it by its symmetric part.
    ///
    /// Physicality is not checked here; see [`physicality_check`].
    pub fn new(v: DMatrix<f64>) -> Result<Self> {
        if v.nrows() != v.ncols() || v.nrows() == 0 || !v.nrows().is_multiple_of(2) {
            return Err(Error::Domain(format!(
                "covariance must be a non-empty 2M x 2M matrix, got {}x{}",
                v.nrows(),
                v.ncols()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("covariance has non-finite entries".into()));
        }
        let v = (&v + v.transpose()) * 0.5;
        Ok(Self { v })
    }

    pub fn vacuum(modes: usize) -> Self {
        Self { v: DMatrix::identity(2 * modes, 2 * modes) }
    }

    pub fn modes(&self) -> usize {
        self.v.nrows() / 2
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn first_moments(&self) -> DVector<f64> {
        DVector::zeros(self.v.nrows())
    }

    pub fn determinant(&self) -> f64 {
        self.v.clone().lu().determinant()
    }

    /// Applies `S V S^T`.
    pub fn transformed(&self, s: &DMatrix<f64>) -> Result<Self> {
        Self::new(s * &self.v * s.transpose())
    }
}

/// Builds the `2M x 2M` covariance matrix of an FSG state.
pub fn assemble_covariance(blocks: &FsgBlocks) -> Result<CovarianceState> {
    let m = blocks.modes;
    let mut v = DMatrix::zeros(2 * m, 2 * m);
    for j in 0..m {
        for k in 0..m {
            let (a, b) = if j == k {
                (blocks.eps1, blocks.eps2)
            } else {
                (blocks.gam1, blocks.gam2)
            };
            v[(2 * j, 2 * k)] = a;
            v[(2 * j + 1, 2 * k + 1)] = b;
        }
    }
    let state = CovarianceState { v };
    let report = physicality_check(&state);
    if !report.physical {
        return Err(Error::Physicality { min_eig: report.min_eig });
    }
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalityReport {
    pub min_eig: f64,
    pub physical: bool,
}

/// Smallest eigenvalue of the Hermitian matrix `V + iΩ`.
pub fn physicality_check(state: &CovarianceState) -> PhysicalityReport {
    let omega = SymplecticForm::new(state.modes());
    let h = DMatrix::from_fn(state.v.nrows(), state.v.ncols(), |r, c| {
        Complex64::new(state.v[(r, c)], omega.matrix[(r, c)])
    });
    let min_eig = h
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    PhysicalityReport { min_eig, physical: min_eig >= -PHYS_TOL }
}

/// Symplectic eigenvalues from the spectrum of `iΩV`, sorted ascending.
///
/// `ΩV` has eigenvalues `±iν_k`; magnitudes are sorted and paired.
pub fn symplectic_spectrum_numeric(state: &CovarianceState) -> Result<Vec<f64>> {
    let omega = SymplecticForm::new(state.modes());
    let ov = omega.matrix() * &state.v;
    let schur = Schur::try_new(ov, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?;
    let mut mags: Vec<f64> = schur.complex_eigenvalues().iter().map(|z| z.norm()).collect();
    mags.sort_by(f64::total_cmp);
    let spectrum = mags
        .chunks_exact(2)
        .map(|pair| {
            let (lo, hi) = (pair[0], pair[1]);
            if hi - lo > PAIR_TOL * hi.max(1.0) {
                Err(Error::Numerical(format!(
                    "unpaired eigenvalue magnitudes {lo} and {hi} in symplectic spectrum"
                )))
            } else {
                Ok(0.5 * (lo + hi))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(spectrum)
}

/// Block-diagonal phase rotation with blocks `[[cos θ, sin θ], [-sin θ, cos θ]]`.
pub fn phase_rotation(thetas: &[f64]) -> DMatrix<f64> {
    let m = thetas.len();
    let mut r = DMatrix::zeros(2 * m, 2 * m);
    for (j, &theta) in thetas.iter().enumerate() {
        let (s, c) = theta.sin_cos();
        r[(2 * j, 2 * j)] = c;
        r[(2 * j, 2 * j + 1)] = s;
        r[(2 * j + 1, 2 * j)] = -s;
        r[(2 * j + 1, 2 * j + 1)] = c;
    }
    r
}

/// Closed-form determinant of an FSG covariance matrix.
pub fn fsg_determinant(blocks: &FsgBlocks) -> f64 {
    let (lo1, lo2, hi1, hi2) = blocks.factors();
    hi1 * hi2 * (lo1 * lo2).powi(blocks.modes as i32 - 1)
}

/// `(ν⁻, ν⁺)`: the `(M-1)`-fold and the non-degenerate symplectic eigenvalue.
pub fn fsg_symplectic_eigenvalues(blocks: &FsgBlocks) -> Result<(f64, f64)> {
    let (lo1, lo2, hi1, hi2) = blocks.factors();
    if lo1 <= 0.0 || lo2 <= 0.0 || hi1 <= 0.0 || hi2 <= 0.0 {
        return Err(Error::Domain(format!(
            "non-positive symplectic factor in ({lo1}, {lo2}, {hi1}, {hi2})"
        )));
    }
    Ok(((lo1 * lo2).sqrt(), (hi1 * hi2).sqrt()))
}

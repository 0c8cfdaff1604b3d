//! The density-matrix state type.

use crate::error::{Error, Result};
use crate::{C64, Matrix5, DIM};

use super::Level;

/// A 5×5 complex density matrix. Hermiticity is maintained by
/// re-symmetrization after every integrator step; the constructors reject
/// inputs that are not Hermitian to 1e-10.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(Matrix5);

impl DensityMatrix {
    /// Wrap a matrix, requiring Hermiticity within 1e-10 max-norm.
    pub fn from_matrix(m: Matrix5) -> Result<Self> {
        let drift = hermiticity_drift(&m);
        if !(drift < 1e-10) {
            return Err(Error::config(format!(
                "matrix is not Hermitian: max |ρ − ρ†| = {drift:.3e}"
            )));
        }
        for z in m.iter() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::config("non-finite entry in density matrix"));
            }
        }
        Ok(DensityMatrix(symmetrized(&m)))
    }

    /// Wrap a matrix without validation, for tests that need to smuggle in
    /// states the public constructors reject.
    #[cfg(test)]
    pub(crate) fn from_matrix_unchecked(m: Matrix5) -> Self {
        DensityMatrix(m)
    }

    /// All population in the ground state.
    pub fn ground() -> Self {
        let mut m = Matrix5::zeros();
        m[(Level::G.index(), Level::G.index())] = C64::new(1.0, 0.0);
        DensityMatrix(m)
    }

    /// The pure superposition (|e1⟩ + |e2⟩)/√2: populations and coherence
    /// all 0.5. This is the positive-semidefinite state matching the
    /// initial coherence 0.5.
    pub fn purified_superposition() -> Self {
        let mut m = Matrix5::zeros();
        let half = C64::new(0.5, 0.0);
        let (e1, e2) = (Level::E1.index(), Level::E2.index());
        m[(e1, e1)] = half;
        m[(e2, e2)] = half;
        m[(e1, e2)] = half;
        m[(e2, e1)] = half;
        DensityMatrix(m)
    }

    /// Full e1–e2 coherence with the population entirely in e2:
    /// ρ_{e2e2} = 0.5, ρ_{e1e2} = 0.5, everything else zero. As printed the
    /// state has trace ½ and a negative eigenvalue (1 − √5)/4 ≈ −0.309;
    /// selectable for comparison runs only.
    pub fn e2_only_coherent() -> Self {
        let mut m = Matrix5::zeros();
        let half = C64::new(0.5, 0.0);
        let (e1, e2) = (Level::E1.index(), Level::E2.index());
        m[(e2, e2)] = half;
        m[(e1, e2)] = half;
        m[(e2, e1)] = half;
        DensityMatrix(m)
    }

    pub fn matrix(&self) -> &Matrix5 {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix5 {
        self.0
    }

    pub fn trace(&self) -> C64 {
        let mut tr = C64::new(0.0, 0.0);
        for i in 0..DIM {
            tr += self.0[(i, i)];
        }
        tr
    }

    pub fn trace_error(&self) -> f64 {
        (self.trace() - C64::new(1.0, 0.0)).norm()
    }

    /// Diagonal populations in level order (g, e1, e2, m1, m2).
    pub fn populations(&self) -> [f64; DIM] {
        let mut p = [0.0; DIM];
        for (i, slot) in p.iter_mut().enumerate() {
            *slot = self.0[(i, i)].re;
        }
        p
    }

    /// The noise-induced coherence element ρ_{e1e2}.
    pub fn coherence_e1e2(&self) -> C64 {
        self.0[(Level::E1.index(), Level::E2.index())]
    }

    /// Smallest eigenvalue; ≥ −1e-8 for physically valid states.
    pub fn min_eigenvalue(&self) -> f64 {
        self.0
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Max-norm of the anti-Hermitian part, ‖ρ − ρ†‖_max.
pub fn hermiticity_drift(m: &Matrix5) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..DIM {
        for j in i..DIM {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            worst = worst.max(d);
        }
    }
    worst
}

/// (ρ + ρ†)/2.
pub fn symmetrized(m: &Matrix5) -> Matrix5 {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn purified_state_is_valid() {
        let rho = DensityMatrix::purified_superposition();
        assert_relative_eq!(rho.trace().re, 1.0);
        assert!(rho.trace_error() < 1e-15);
        assert!(rho.min_eigenvalue() > -1e-15);
        assert_relative_eq!(rho.coherence_e1e2().re, 0.5);
        let p = rho.populations();
        assert_relative_eq!(p[1], 0.5);
        assert_relative_eq!(p[2], 0.5);
        assert_relative_eq!(p[0] + p[3] + p[4], 0.0);
    }

    #[test]
    fn e2_only_coherent_violates_positivity() {
        let rho = DensityMatrix::e2_only_coherent();
        // as printed: trace ½, not 1
        assert_relative_eq!(rho.trace().re, 0.5);
        // analytic smallest eigenvalue of [[0, .5], [.5, .5]] is (1−√5)/4·0.5
        let expect = (1.0 - 5.0f64.sqrt()) / 4.0;
        assert_relative_eq!(rho.min_eigenvalue(), expect, max_relative = 1e-12);
        assert!(rho.min_eigenvalue() < -1e-8);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = Matrix5::zeros();
        m[(0, 0)] = C64::new(1.0, 0.0);
        m[(0, 1)] = C64::new(0.5, 0.0);
        assert!(DensityMatrix::from_matrix(m).is_err());
    }

    #[test]
    fn symmetrization_reports_drift() {
        let mut m = Matrix5::zeros();
        m[(0, 0)] = C64::new(1.0, 0.0);
        m[(0, 1)] = C64::new(0.5, 0.0);
        m[(1, 0)] = C64::new(0.5, 1e-3);
        assert_relative_eq!(hermiticity_drift(&m), 1e-3, max_relative = 1e-12);
        let s = symmetrized(&m);
        assert!(hermiticity_drift(&s) < 1e-18);
    }
}

//! Time-dependent transition rates induced by bath spectral densities.
//!
//! A memory-carrying bath makes the decay rate of a damped transition time
//! dependent. For a Lorentzian density resonant with the transition the
//! rate has the closed form
//!
//! ```text
//! γ(t) = γ_M · (1 − e^{−κt})
//! ```
//!
//! ramping from zero (no memory accumulated) to the Markovian rate γ_M on
//! the bath correlation time 1/κ. [`rate_quadrature`] evaluates the same
//! quantity by brute-force double quadrature of
//!
//! ```text
//! Γ(t) = ∫₀ᵗ dt′ ∫ dω′ J(ω′) e^{i(ω_ij − ω′)(t − t′)}
//! ```
//!
//! and serves as the independent oracle for the closed form: it never
//! touches the residue-theorem result. Re Γ is the decay rate; Im Γ is the
//! Lamb-shift part, computed for diagnostics and never fed to dynamics.

use crate::error::{Error, Result};
use crate::quad;
use crate::spectral::{SpectralDensity, SpectralKind};
use crate::C64;

/// How a transition's rate depends on time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateKind {
    /// γ(t) = γ_M (1 − e^{−κt}), the resonant-Lorentzian closed form.
    ClosedFormLorentzian,
    /// γ(t) = γ_M for all t (memory-less bath).
    MarkovianConstant,
    /// Linear interpolation of a precomputed (t, Re Γ, Im Γ) grid.
    QuadratureTable,
}

/// Sampled complex rate Γ(t) on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub times_fs: Vec<f64>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

/// The time-dependent rate γ_ij(t) of one damped transition.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFunction {
    pub kind: RateKind,
    /// Long-time (Markovian) rate, rad/fs.
    pub gamma_markov: f64,
    /// Bath memory width κ, rad/fs. Unused for `MarkovianConstant`.
    pub width_kappa: f64,
    /// Frequency ω_ij of the damped transition, rad/fs.
    pub transition_omega: f64,
    /// Sampled grid for the `QuadratureTable` kind.
    pub table: Option<RateTable>,
}

impl RateFunction {
    pub fn markovian(gamma_markov: f64, transition_omega: f64) -> Self {
        RateFunction {
            kind: RateKind::MarkovianConstant,
            gamma_markov,
            width_kappa: 0.0,
            transition_omega,
        table: None,
        }
    }

    pub fn closed_form(gamma_markov: f64, width_kappa: f64, transition_omega: f64) -> Self {
        RateFunction {
            kind: RateKind::ClosedFormLorentzian,
            gamma_markov,
            width_kappa,
            transition_omega,
            table: None,
        }
    }

    /// Tabulate Γ(t) by double quadrature on `n` uniformly spaced times in
    /// [0, t_max]. One-shot construction; the result is immutable.
    pub fn tabulated(
        density: &SpectralDensity,
        gamma_markov: f64,
        transition_omega: f64,
        t_max_fs: f64,
        n: usize,
        tol: f64,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::config("rate table needs at least 2 points"));
        }
        let times: Vec<f64> = (0..n)
            .map(|k| t_max_fs * k as f64 / (n - 1) as f64)
            .collect();
        let gammas = crate::batch::map_collect(&times, |&t| {
            rate_quadrature(t, density, transition_omega, tol)
        });
        let mut re = Vec::with_capacity(n);
        let mut im = Vec::with_capacity(n);
        for g in gammas {
            let g = g?;
            re.push(g.re);
            im.push(g.im);
        }
        Ok(RateFunction {
            kind: RateKind::QuadratureTable,
            gamma_markov,
            width_kappa: density.width_kappa,
            transition_omega,
            table: Some(RateTable { times_fs: times, re, im }),
        })
    }

    /// The real decay rate γ(t) entering the master equation.
    pub fn value(&self, t_fs: f64) -> f64 {
        match self.kind {
            RateKind::MarkovianConstant => self.gamma_markov,
            RateKind::ClosedFormLorentzian => {
                self.gamma_markov * (1.0 - (-self.width_kappa * t_fs).exp())
            }
            RateKind::QuadratureTable => self.interp(t_fs).0,
        }
    }

    /// Complex Γ(t); the imaginary part is the Lamb-shift integral,
    /// reported for diagnostics only.
    pub fn complex_value(&self, t_fs: f64) -> C64 {
        match self.kind {
            RateKind::QuadratureTable => {
                let (re, im) = self.interp(t_fs);
                C64::new(re, im)
            }
            _ => C64::new(self.value(t_fs), 0.0),
        }
    }

    fn interp(&self, t: f64) -> (f64, f64) {
        let tab = self
            .table
            .as_ref()
            .expect("QuadratureTable kind always carries a table");
        let times = &tab.times_fs;
        if t <= times[0] {
            return (tab.re[0], tab.im[0]);
        }
        let last = times.len() - 1;
        if t >= times[last] {
            return (tab.re[last], tab.im[last]);
        }
        let dt = times[1] - times[0];
        let i = (((t - times[0]) / dt) as usize).min(last - 1);
        let w = (t - times[i]) / (times[i + 1] - times[i]);
        (
            tab.re[i] * (1.0 - w) + tab.re[i + 1] * w,
            tab.im[i] * (1.0 - w) + tab.im[i + 1] * w,
        )
    }
}

/// Closed-form non-Markovian rate γ_M (1 − e^{−κt}). Rejects negative t.
pub fn rate_closed_form(t_fs: f64, gamma_markov: f64, width_kappa: f64) -> Result<f64> {
    if t_fs < 0.0 || !t_fs.is_finite() {
        return Err(Error::config(format!("time must be ≥ 0, got {t_fs}")));
    }
    if !(gamma_markov > 0.0) || !(width_kappa > 0.0) {
        return Err(Error::config(
            "rate_closed_form requires positive gamma_markov and width_kappa",
        ));
    }
    Ok(gamma_markov * (1.0 - (-width_kappa * t_fs).exp()))
}

/// Analytic Fourier transform of the density about its own peak:
/// ∫ J(ω′) e^{i(ω₀−ω′)τ} dω′ = 𝒩 e^{−κ|τ|}.
///
/// This single expression covers the three contour cases: τ → 0 gives 𝒩,
/// and the sign of τ only enters through |τ|. A delta-correlated
/// (`FlatMarkovian`) density transforms to zero except at τ = 0.
pub fn lorentzian_fourier(tau_fs: f64, density: &SpectralDensity) -> C64 {
    match density.kind {
        SpectralKind::Lorentzian => C64::new(
            density.norm_n * (-density.width_kappa * tau_fs.abs()).exp(),
            0.0,
        ),
        SpectralKind::FlatMarkovian => {
            if tau_fs == 0.0 {
                C64::new(density.norm_n, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }
    }
}

/// Numeric ω-integral ∫ J(ω′) e^{i(ω_ref−ω′)τ} dω′ for a Lorentzian
/// density, by Filon quadrature with the substitution x = (ω′−ω₀)/κ.
/// `abs_tol` is absolute on the result divided by 𝒩.
pub fn fourier_quadrature(
    tau_fs: f64,
    density: &SpectralDensity,
    omega_ref: f64,
    abs_tol: f64,
) -> Result<C64> {
    if density.kind != SpectralKind::Lorentzian {
        return Err(Error::config(
            "fourier_quadrature needs a Lorentzian density",
        ));
    }
    let kappa = density.width_kappa;
    let a = kappa * tau_fs;
    // odd part of the folded integrand vanishes by symmetry; the numeric
    // transform is real up to the detuning phase below
    let c = quad::lorentzian_cos_transform(a, abs_tol)?;
    let detuning = omega_ref - density.center_omega0;
    let phase = C64::new(0.0, detuning * tau_fs).exp();
    Ok(C64::new(density.norm_n * c, 0.0) * phase)
}

/// Brute-force double quadrature of the transition-rate integral
/// Γ(t) = ∫₀ᵗ dτ ∫ dω′ J(ω′) e^{i(ω_ij−ω′)τ}.
///
/// `tol` is relative: the result satisfies |error| ≲ tol·|Γ|. The inner
/// ω-integral is truncated where the Lorentzian tail bound falls below a
/// tenth of the local budget and is cross-checked against the analytic
/// e^{−κ|τ|} form: disagreement is a hard error, not a silent fallback.
pub fn rate_quadrature(
    t_fs: f64,
    density: &SpectralDensity,
    transition_omega: f64,
    tol: f64,
) -> Result<C64> {
    if t_fs < 0.0 || !t_fs.is_finite() {
        return Err(Error::config(format!("time must be ≥ 0, got {t_fs}")));
    }
    if !(tol > 0.0 && tol <= 1e-2) {
        return Err(Error::config(format!(
            "tolerance must lie in (0, 1e-2], got {tol}"
        )));
    }
    if t_fs == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let n = density.norm_n;
    let kappa = density.width_kappa;
    let detuning = transition_omega - density.center_omega0;

    // a-priori magnitude scale of Γ: N·min(t, 1/κ)
    let scale = n * t_fs.min(1.0 / kappa);
    // inner-transform error integrates over τ: ε_inner·N·t ≤ tol·scale/2
    let inner_tol = (tol * scale / (2.0 * n * t_fs)).min(1e-6);

    // analytic check of the inner result at a probe point (τ = 1/κ scale)
    let probe = t_fs.min(1.0 / kappa);
    let numeric = quad::lorentzian_cos_transform(kappa * probe, inner_tol)?;
    let analytic = (-kappa * probe).exp();
    if (numeric - analytic).abs() > 1e3 * inner_tol.max(1e-12) {
        return Err(Error::QuadratureNonConvergence {
            context: format!(
                "inner ω-transform disagrees with e^(-κτ) at τ = {probe}: {numeric} vs {analytic}"
            ),
            tol: inner_tol,
            reached: (numeric - analytic).abs(),
        });
    }

    let integrand = |tau: f64| -> C64 {
        let c = quad::lorentzian_cos_transform(kappa * tau, inner_tol)
            .expect("inner transform converges within checked budget");
        C64::new(0.0, detuning * tau).exp() * C64::new(n * c, 0.0)
    };
    let gamma = quad::adaptive_complex(integrand, 0.0, t_fs, tol * scale / 2.0)?;
    Ok(gamma)
}

/// Interference rate coupling two transitions that share one bath:
/// p·√(γ_i(t)·γ_j(t)). Rejects |p| > 1, which would break the positivity
/// of the dissipator.
pub fn cross_rate(t_fs: f64, rate_i: &RateFunction, rate_j: &RateFunction, p: f64) -> Result<f64> {
    if !(p.abs() <= 1.0) {
        return Err(Error::config(format!(
            "interference alignment |p| must be ≤ 1, got {p}"
        )));
    }
    if t_fs < 0.0 {
        return Err(Error::config(format!("time must be ≥ 0, got {t_fs}")));
    }
    Ok(p * (rate_i.value(t_fs) * rate_j.value(t_fs)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::WAVENUMBER_TO_ANGULAR;
    use crate::spectral::normalization_for_target_rate;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn resonant(gamma: f64, kappa: f64) -> SpectralDensity {
        let n = normalization_for_target_rate(gamma, kappa).unwrap();
        SpectralDensity::lorentzian(1.0, kappa, n).unwrap()
    }

    #[test]
    fn closed_form_endpoints() {
        assert_eq!(rate_closed_form(0.0, 0.3, 0.1).unwrap(), 0.0);
        // t → ∞ saturates to γ_M
        assert_relative_eq!(
            rate_closed_form(1e9, 0.3, 0.1).unwrap(),
            0.3,
            max_relative = 1e-15
        );
        // one memory time: γ_M(1 − 1/e)
        assert_relative_eq!(
            rate_closed_form(10.0, 0.3, 0.1).unwrap(),
            0.3 * (1.0 - (-1.0f64).exp()),
            max_relative = 1e-15
        );
        assert!(rate_closed_form(-1.0, 0.3, 0.1).is_err());
    }

    #[test]
    fn fourier_examples() {
        let j = resonant(0.2, 0.05);
        let n = j.norm_n;
        assert_relative_eq!(lorentzian_fourier(0.0, &j).re, n, max_relative = 1e-15);
        assert_relative_eq!(
            lorentzian_fourier(1.0 / 0.05, &j).re,
            n * (-1.0f64).exp(),
            max_relative = 1e-14
        );
        // even in τ: Case II equals Case III
        let plus = lorentzian_fourier(3.0 / 0.05, &j);
        let minus = lorentzian_fourier(-3.0 / 0.05, &j);
        assert_eq!(plus, minus);
    }

    #[test]
    fn fourier_numeric_confirms_evenness() {
        let j = resonant(0.2, 0.05);
        let plus = fourier_quadrature(60.0, &j, j.center_omega0, 1e-10).unwrap();
        let minus = fourier_quadrature(-60.0, &j, j.center_omega0, 1e-10).unwrap();
        assert_relative_eq!(plus.re, minus.re, max_relative = 1e-9);
        assert_relative_eq!(plus.re, j.norm_n * (-3.0f64).exp(), max_relative = 1e-6);
    }

    #[test]
    fn quadrature_matches_closed_form_resonant() {
        // the build-order oracle: Re Γ(t) = γ_M(1 − e^{−κt}), Im Γ(t) = 0
        let (gamma, kappa) = (0.02, 0.01);
        let j = resonant(gamma, kappa);
        for &t in &[0.5, 20.0, 150.0, 600.0] {
            let g = rate_quadrature(t, &j, j.center_omega0, 1e-7).unwrap();
            let exact = rate_closed_form(t, gamma, kappa).unwrap();
            assert!(
                (g.re - exact).abs() < 1e-6 * gamma,
                "t = {t}: {} vs {exact}",
                g.re
            );
            assert!(g.im.abs() < 1e-6 * gamma, "t = {t}: Im = {}", g.im);
        }
    }

    #[test]
    fn quadrature_zero_time_is_zero() {
        let j = resonant(0.02, 0.01);
        assert_eq!(
            rate_quadrature(0.0, &j, j.center_omega0, 1e-6).unwrap(),
            C64::new(0.0, 0.0)
        );
    }

    #[test]
    fn quadrature_delta_peak_limit() {
        // κ → 0: the ω-integral at fixed τ returns 𝒩, so Γ grows ∝ 𝒩·t
        let gamma = 0.02;
        let kappa = 1e-9 * gamma;
        let n = normalization_for_target_rate(gamma, kappa).unwrap();
        let j = SpectralDensity::lorentzian(1.0, kappa, n).unwrap();
        let inner = fourier_quadrature(5.0, &j, j.center_omega0, 1e-9).unwrap();
        assert_relative_eq!(inner.re, n, max_relative = 1e-6);
        let g = rate_quadrature(10.0, &j, j.center_omega0, 1e-6).unwrap();
        assert_relative_eq!(g.re, n * 10.0, max_relative = 1e-5);
    }

    #[test]
    fn off_resonant_rate_has_lamb_shift_part() {
        // detuned bath: Re Γ suppressed by κ²/(κ²+δ²), Im Γ nonzero
        let (gamma, kappa) = (0.02, 0.01);
        let n = normalization_for_target_rate(gamma, kappa).unwrap();
        let j = SpectralDensity::lorentzian(1.0, kappa, n).unwrap();
        let delta = 0.03;
        let g = rate_quadrature(3000.0, &j, 1.0 + delta, 1e-6).unwrap();
        let denom = kappa * kappa + delta * delta;
        assert_relative_eq!(g.re, n * kappa / denom, max_relative = 1e-4);
        assert_relative_eq!(g.im, n * delta / denom, max_relative = 1e-4);
    }

    #[test]
    fn markovian_limit_of_closed_form() {
        // κ = 1e3·γ_M: within 1e-3·γ_M of the constant rate for t > 10/κ
        let gamma = 0.05;
        let kappa = 1e3 * gamma;
        for k in 1..=100 {
            let t = 10.0 / kappa * (1.0 + k as f64);
            let r = rate_closed_form(t, gamma, kappa).unwrap();
            assert!(
                (r - gamma).abs() < 1e-3 * gamma,
                "t = {t}: rate {r} not within 1e-3 of {gamma}"
            );
        }
    }

    #[test]
    fn cross_rate_examples() {
        let ri = RateFunction::markovian(140.0 * WAVENUMBER_TO_ANGULAR, 1.0);
        let rj = RateFunction::markovian(18.0 * WAVENUMBER_TO_ANGULAR, 1.0);
        // p = 0: no interference
        assert_eq!(cross_rate(5.0, &ri, &rj, 0.0).unwrap(), 0.0);
        // p = 1, degenerate: the rate itself
        assert_relative_eq!(
            cross_rate(5.0, &ri, &ri, 1.0).unwrap(),
            ri.value(5.0),
            max_relative = 1e-15
        );
        // overdamped Table values: √(140·18) ≈ 50.2 in the same units
        let expect = (140.0f64 * 18.0).sqrt() * WAVENUMBER_TO_ANGULAR;
        assert_relative_eq!(cross_rate(1e9, &ri, &rj, 1.0).unwrap(), expect, max_relative = 1e-12);
        assert!((expect / WAVENUMBER_TO_ANGULAR - 50.2).abs() < 0.01);
        assert!(cross_rate(1.0, &ri, &rj, 1.2).is_err());
        assert!(cross_rate(-1.0, &ri, &rj, 0.5).is_err());
    }

    #[test]
    fn table_kind_interpolates_and_starts_at_zero() {
        let (gamma, kappa) = (0.02, 0.01);
        let j = resonant(gamma, kappa);
        let rf = RateFunction::tabulated(&j, gamma, j.center_omega0, 400.0, 401, 1e-6).unwrap();
        assert_eq!(rf.value(0.0), 0.0);
        for &t in &[10.0, 55.5, 200.0, 399.0] {
            let exact = rate_closed_form(t, gamma, kappa).unwrap();
            assert!(
                (rf.value(t) - exact).abs() < 2e-5 * gamma,
                "t = {t}: {} vs {exact}",
                rf.value(t)
            );
        }
        // clamped beyond the grid
        assert_relative_eq!(rf.value(1e4), rf.value(400.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn closed_form_monotone_and_bounded(
            gamma in 1e-4f64..1.0,
            ratio in 0.1f64..10.0,
            t0 in 0.0f64..500.0,
            dt in 1e-3f64..500.0,
        ) {
            let kappa = gamma * ratio;
            let lo = rate_closed_form(t0, gamma, kappa).unwrap();
            let hi = rate_closed_form(t0 + dt, gamma, kappa).unwrap();
            prop_assert!(hi >= lo);
            prop_assert!(lo >= 0.0 && hi <= gamma);
        }

        #[test]
        fn cross_rate_cauchy_schwarz(
            g1 in 1e-4f64..1.0,
            g2 in 1e-4f64..1.0,
            p in -1.0f64..1.0,
            t in 0.0f64..1e3,
        ) {
            let ri = RateFunction::closed_form(g1, g1, 1.0);
            let rj = RateFunction::closed_form(g2, g2, 1.0);
            let c = cross_rate(t, &ri, &rj, p).unwrap();
            prop_assert!(c * c <= ri.value(t) * rj.value(t) * (1.0 + 1e-12));
        }
    }
}

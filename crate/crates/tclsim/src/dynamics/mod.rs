//! Five-level system structure and the TCL Liouvillian.
//!
//! The equation of motion is a generalized Lindblad dissipator with
//! time-dependent rates. For each ordered pair (i, j) of transitions
//! sharing a bath (jump operators Ŝ = |lower⟩⟨upper|):
//!
//! ```text
//! dρ/dt = Σ_(i,j)  c_em(i,j,t) [ Ŝⱼ ρ Ŝᵢ† − ½{Ŝᵢ†Ŝⱼ, ρ} ]
//!               +  c_abs(i,j,t) [ Ŝᵢ† ρ Ŝⱼ − ½{ŜⱼŜᵢ†, ρ} ]
//! ```
//!
//! with c_em = γ_ij(t)·√((n̄ᵢ+1)(n̄ⱼ+1)) and c_abs = γ_ij(t)·√(n̄ᵢn̄ⱼ).
//! Diagonal terms (i = j) use the transition's own rate; cross terms use
//! the interference rate p·√(γᵢ(t)γⱼ(t)). The geometric-mean occupation
//! factors keep every 2×2 Kossakowski block positive semidefinite up to
//! |p| = 1, so the instantaneous generator is CPTP and trajectories stay
//! positive. The two donor channels couple to their shared reservoir with
//! opposite dipole projections, which makes the symmetric superposition
//! (|e1⟩+|e2⟩)/√2 the subradiant (slowly decaying) mode — the coherence
//! the engine sustains.
//!
//! The form is traceless term by term and, for the symmetric real rate
//! matrix used here, Hermiticity-preserving, so both conservation laws
//! hold by construction rather than by renormalization.

pub mod density;
pub mod integrate;

pub use density::DensityMatrix;
pub use integrate::{integrate, steady_state_detect, Method, RawTrajectory, SolverSettings};

use crate::error::{Error, Result};
use crate::model::Scenario;
use crate::rates::{cross_rate, RateFunction};
use crate::{C64, Matrix5, DIM};

/// The five levels of the reaction-center model, in matrix-index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    /// Molecular ground state.
    G,
    /// Upper donor excited state (e2 + Δ).
    E1,
    /// Lower donor excited state.
    E2,
    /// Charge-separated (metastable) state.
    M1,
    /// Ionized state after the work stroke.
    M2,
}

impl Level {
    pub const ALL: [Level; DIM] = [Level::G, Level::E1, Level::E2, Level::M1, Level::M2];

    pub fn index(self) -> usize {
        match self {
            Level::G => 0,
            Level::E1 => 1,
            Level::E2 => 2,
            Level::M1 => 3,
            Level::M2 => 4,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Level::G => "g",
            Level::E1 => "e1",
            Level::E2 => "e2",
            Level::M1 => "m1",
            Level::M2 => "m2",
        }
    }
}

/// Which reservoir a transition exchanges quanta with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BathId {
    /// High-temperature photon reservoir driving g ↔ e1/e2.
    Hot,
    /// Near-zero-temperature phonon sink shared by e1/e2 → m1.
    Cold1,
    /// Near-zero-temperature sink for the recombination m2 → g.
    Cold2,
    /// The work transition m1 → m2.
    Load,
}

/// One damped transition |upper⟩ ↔ |lower⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub upper: Level,
    pub lower: Level,
    pub bath: BathId,
    pub rate: RateFunction,
    /// Bose occupation n̄ of this transition's bath at its frequency.
    pub nbar: f64,
}

impl Transition {
    pub fn validate(&self) -> Result<()> {
        if self.upper == self.lower {
            return Err(Error::config(format!(
                "transition must couple two distinct levels, got {} twice",
                self.upper.label()
            )));
        }
        if self.nbar < 0.0 || !self.nbar.is_finite() {
            return Err(Error::config(format!("nbar must be ≥ 0, got {}", self.nbar)));
        }
        if self.rate.gamma_markov < 0.0 {
            return Err(Error::config("transition rate must be ≥ 0"));
        }
        Ok(())
    }
}

/// The level structure: energies, donor splitting, transition list.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSystem {
    /// Level energies in rad/fs, indexed by [`Level::index`]; g is 0.
    pub energies: [f64; DIM],
    /// Donor splitting Δ = E(e1) − E(e2), rad/fs.
    pub delta_split: f64,
    pub transitions: Vec<Transition>,
}

impl LevelSystem {
    pub fn validate(&self) -> Result<()> {
        for e in &self.energies {
            if !e.is_finite() {
                return Err(Error::config("level energies must be finite"));
            }
        }
        let gap = self.energies[Level::E1.index()] - self.energies[Level::E2.index()];
        if (gap - self.delta_split).abs() > 1e-12 * self.delta_split.abs().max(1.0) {
            return Err(Error::config(format!(
                "e1 − e2 gap {gap} does not equal delta_split {}",
                self.delta_split
            )));
        }
        for tr in &self.transitions {
            tr.validate()?;
        }
        Ok(())
    }

    /// Transition frequency ω = E(upper) − E(lower).
    pub fn omega(&self, tr: &Transition) -> f64 {
        self.energies[tr.upper.index()] - self.energies[tr.lower.index()]
    }

    /// Index pairs of transitions sharing a bath, with the interference
    /// alignment each pair carries.
    pub fn shared_bath_pairs(&self, p_hot: f64, p_cold: f64) -> Vec<(usize, usize, f64, BathId)> {
        let mut pairs = Vec::new();
        for (i, ti) in self.transitions.iter().enumerate() {
            for (j, tj) in self.transitions.iter().enumerate().skip(i + 1) {
                if ti.bath == tj.bath {
                    let p = match ti.bath {
                        BathId::Hot => p_hot,
                        BathId::Cold1 => p_cold,
                        _ => 0.0,
                    };
                    pairs.push((i, j, p, ti.bath));
                }
            }
        }
        pairs
    }
}

/// Model structure switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelFlags {
    /// Drop all i ≠ j cross terms (plain Lindblad channels).
    pub secular: bool,
    /// Include −i[H_S, ρ] with H_S diagonal in the level energies.
    pub free_evolution: bool,
    /// Multiply hot-bath cross terms by e^{±iΔt} (interaction picture of
    /// the non-degenerate donor channels).
    pub nonsecular_phase: bool,
    /// Apply the pure-dephasing rate 1/τ₂ to ρ_{e1e2}.
    pub dephasing: bool,
}

impl Default for ModelFlags {
    fn default() -> Self {
        ModelFlags {
            secular: false,
            free_evolution: false,
            nonsecular_phase: true,
            dephasing: true,
        }
    }
}

/// Precomputed generator for one scenario: everything `apply` needs per
/// right-hand-side evaluation, immutable and shareable.
#[derive(Debug, Clone)]
pub struct Generator {
    system: LevelSystem,
    pairs: Vec<(usize, usize, f64, BathId)>,
    omegas: Vec<f64>,
    tau2_inv: f64,
    flags: ModelFlags,
    /// 1.0 under the γ(t) = Re Γ(t) identification; 0.5 under the
    /// Γ = γ/2 + iλ convention (uniformly halves every rate).
    rate_factor: f64,
}

impl Generator {
    pub fn new(
        system: LevelSystem,
        p_hot: f64,
        p_cold: f64,
        tau2_inv: f64,
        flags: ModelFlags,
        rate_factor: f64,
    ) -> Result<Self> {
        system.validate()?;
        if !(p_hot.abs() <= 1.0 && p_cold.abs() <= 1.0) {
            return Err(Error::config(format!(
                "|p| must be ≤ 1, got p_hot = {p_hot}, p_cold = {p_cold}"
            )));
        }
        if tau2_inv < 0.0 {
            return Err(Error::config("tau2_inv must be ≥ 0"));
        }
        let pairs = system.shared_bath_pairs(p_hot, p_cold);
        let omegas = system
            .transitions
            .iter()
            .map(|tr| system.omega(tr))
            .collect();
        Ok(Generator {
            system,
            pairs,
            omegas,
            tau2_inv,
            flags,
            rate_factor,
        })
    }

    pub fn system(&self) -> &LevelSystem {
        &self.system
    }

    /// Evaluate dρ/dt at time `t`. Pure; the result is traceless and
    /// Hermitian for Hermitian input.
    pub fn apply(&self, rho: &Matrix5, t: f64) -> Matrix5 {
        let mut out = Matrix5::zeros();
        let trs = &self.system.transitions;

        for tr in trs {
            let g = self.rate_factor * tr.rate.value(t);
            if g == 0.0 {
                continue;
            }
            let one = C64::new(1.0, 0.0);
            add_pair_term(&mut out, rho, tr, tr, g * (tr.nbar + 1.0), g * tr.nbar, one);
        }

        if !self.flags.secular {
            for &(i, j, p, bath) in &self.pairs {
                if p == 0.0 {
                    continue;
                }
                let (ti, tj) = (&trs[i], &trs[j]);
                // Opposite dipole projections on the shared mode: the
                // interference coefficient enters with a minus sign, making
                // the symmetric donor superposition subradiant.
                let c = -self.rate_factor
                    * cross_rate(t, &ti.rate, &tj.rate, p)
                        .expect("pair alignment validated at construction");
                if c == 0.0 {
                    continue;
                }
                let em = c * ((ti.nbar + 1.0) * (tj.nbar + 1.0)).sqrt();
                let ab = c * (ti.nbar * tj.nbar).sqrt();
                let phase = if self.flags.nonsecular_phase && bath == BathId::Hot {
                    C64::new(0.0, (self.omegas[i] - self.omegas[j]) * t).exp()
                } else {
                    C64::new(1.0, 0.0)
                };
                add_pair_term(&mut out, rho, ti, tj, em, ab, phase);
                add_pair_term(&mut out, rho, tj, ti, em, ab, phase.conj());
            }
        }

        if self.flags.dephasing && self.tau2_inv > 0.0 {
            let (e1, e2) = (Level::E1.index(), Level::E2.index());
            let r = C64::new(self.tau2_inv, 0.0);
            out[(e1, e2)] -= r * rho[(e1, e2)];
            out[(e2, e1)] -= r * rho[(e2, e1)];
        }

        if self.flags.free_evolution {
            // −i[H, ρ] with diagonal H: entrywise −i(E_a − E_b)ρ_ab
            for a in 0..DIM {
                for b in 0..DIM {
                    let w = self.system.energies[a] - self.system.energies[b];
                    if w != 0.0 {
                        out[(a, b)] -= C64::new(0.0, w) * rho[(a, b)];
                    }
                }
            }
        }

        out
    }
}

/// Dissipator contribution of the ordered transition pair (i, j):
///
///   em·φ [ Ŝⱼ ρ Ŝᵢ† − ½{Ŝᵢ†Ŝⱼ, ρ} ]  +  ab·φ [ Ŝᵢ† ρ Ŝⱼ − ½{ŜⱼŜᵢ†, ρ} ]
///
/// written out element-wise: with Ŝ = |lower⟩⟨upper| these are rank-one
/// updates plus single-row/column anticommutator corrections.
fn add_pair_term(
    out: &mut Matrix5,
    rho: &Matrix5,
    ti: &Transition,
    tj: &Transition,
    em: f64,
    ab: f64,
    phase: C64,
) {
    let (ui, li) = (ti.upper.index(), ti.lower.index());
    let (uj, lj) = (tj.upper.index(), tj.lower.index());
    let em = C64::new(em, 0.0) * phase;
    let ab = C64::new(ab, 0.0) * phase;
    let half = C64::new(0.5, 0.0);

    // Ŝⱼ ρ Ŝᵢ† = ρ[uj, ui] |lj⟩⟨li|
    out[(lj, li)] += em * rho[(uj, ui)];
    // Ŝᵢ†Ŝⱼ = δ(li, lj) |ui⟩⟨uj|
    if li == lj {
        for k in 0..DIM {
            out[(ui, k)] -= half * em * rho[(uj, k)];
            out[(k, uj)] -= half * em * rho[(k, ui)];
        }
    }
    if ab != C64::new(0.0, 0.0) {
        // Ŝᵢ† ρ Ŝⱼ = ρ[li, lj] |ui⟩⟨uj|
        out[(ui, uj)] += ab * rho[(li, lj)];
        // ŜⱼŜᵢ† = δ(uj, ui) |lj⟩⟨li|
        if ui == uj {
            for k in 0..DIM {
                out[(lj, k)] -= half * ab * rho[(li, k)];
                out[(k, li)] -= half * ab * rho[(k, lj)];
            }
        }
    }
}

/// Validated single evaluation of the Liouvillian for a scenario, as a
/// public entry point. The integrator uses [`Generator::apply`] directly.
pub fn liouvillian_apply(rho: &DensityMatrix, t: f64, scenario: &Scenario) -> Result<Matrix5> {
    for z in rho.matrix().iter() {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::config("NaN or infinite entry in density matrix"));
        }
    }
    let gen = scenario.generator()?;
    Ok(gen.apply(rho.matrix(), t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_scenario, Mode, Regime};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn trace_of(m: &Matrix5) -> C64 {
        (0..DIM).map(|i| m[(i, i)]).sum()
    }

    #[test]
    fn ground_state_is_stationary_at_zero_temperature() {
        // all n̄ = 0: |g⟩⟨g| is a fixed point
        let mut sc = build_scenario(Regime::Underdamped, Mode::Markovian, &[]).unwrap();
        for tr in &mut sc.system.transitions {
            tr.nbar = 0.0;
        }
        let rho = DensityMatrix::ground();
        let d = liouvillian_apply(&rho, 5.0, &sc).unwrap();
        for z in d.iter() {
            assert!(z.norm() < 1e-18, "ground state moved: {z}");
        }
    }

    #[test]
    fn dissipator_is_traceless_and_hermitian() {
        for regime in [Regime::Overdamped, Regime::Underdamped, Regime::Intermediate] {
            for mode in [Mode::Markovian, Mode::NonMarkovian] {
                let sc = build_scenario(regime, mode, &[]).unwrap();
                let gen = sc.generator().unwrap();
                let rho = DensityMatrix::purified_superposition();
                for &t in &[0.0, 1.0, 37.5, 500.0] {
                    let d = gen.apply(rho.matrix(), t);
                    assert!(trace_of(&d).norm() < 1e-12, "trace(dρ/dt) ≠ 0");
                    assert!(
                        density::hermiticity_drift(&d) < 1e-14,
                        "dρ/dt not Hermitian at t = {t}"
                    );
                }
            }
        }
    }

    #[test]
    fn rejects_nan_state() {
        let sc = build_scenario(Regime::Underdamped, Mode::Markovian, &[]).unwrap();
        let mut m = *DensityMatrix::purified_superposition().matrix();
        m[(0, 0)] = C64::new(f64::NAN, 0.0);
        let rho = DensityMatrix::from_matrix_unchecked(m);
        assert!(liouvillian_apply(&rho, 0.0, &sc).is_err());
    }

    #[test]
    fn secular_flag_drops_coherence_coupling_to_populations() {
        let mut sc = build_scenario(Regime::Underdamped, Mode::Markovian, &[]).unwrap();
        sc.flags.secular = true;
        sc.flags.dephasing = false;
        let gen = sc.generator().unwrap();
        // diagonal-only state: secular generator must keep coherences zero
        let mut m = Matrix5::zeros();
        m[(1, 1)] = C64::new(0.6, 0.0);
        m[(2, 2)] = C64::new(0.4, 0.0);
        let d = gen.apply(&m, 10.0);
        for a in 0..DIM {
            for b in 0..DIM {
                if a != b {
                    assert!(d[(a, b)].norm() < 1e-18, "secular coherence generated");
                }
            }
        }
    }

    #[test]
    fn level_indices_are_stable() {
        assert_eq!(Level::G.index(), 0);
        assert_eq!(Level::E1.index(), 1);
        assert_eq!(Level::E2.index(), 2);
        assert_eq!(Level::M1.index(), 3);
        assert_eq!(Level::M2.index(), 4);
        assert_eq!(Level::M1.label(), "m1");
    }

    #[test]
    fn free_evolution_rotates_coherence() {
        let mut sc = build_scenario(Regime::Underdamped, Mode::Markovian, &[]).unwrap();
        sc.flags.free_evolution = true;
        sc.flags.nonsecular_phase = false;
        let gen = sc.generator().unwrap();
        let rho = DensityMatrix::purified_superposition();
        let d = gen.apply(rho.matrix(), 0.0);
        // dρ_{e1e2}/dt picks up −iΔ·ρ_{e1e2} on top of decay
        let delta = sc.system.delta_split;
        assert_relative_eq!(d[(1, 2)].im, -delta * 0.5, max_relative = 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn trace_preserved_for_random_hermitian_input(
            seed in proptest::collection::vec(-1.0f64..1.0, 30),
            t in 0.0f64..2000.0,
        ) {
            // random Hermitian matrix (not necessarily a state)
            let mut m = Matrix5::zeros();
            let mut k = 0;
            for i in 0..DIM {
                m[(i, i)] = C64::new(seed[k], 0.0);
                k += 1;
                for j in (i + 1)..DIM {
                    m[(i, j)] = C64::new(seed[k], seed[k + 1]);
                    m[(j, i)] = m[(i, j)].conj();
                    k += 2;
                }
            }
            let sc = build_scenario(Regime::Overdamped, Mode::NonMarkovian, &[]).unwrap();
            let gen = sc.generator().unwrap();
            let d = gen.apply(&m, t);
            prop_assert!(trace_of(&d).norm() < 1e-10);
            prop_assert!(density::hermiticity_drift(&d) < 1e-12);
        }
    }
}

//! Scenario construction: working-regime presets, unit conversion, thermal
//! occupations, and the scenario config-file schema.
//!
//! All spectroscopic inputs are quoted in wavenumbers (cm⁻¹) and converted
//! to angular frequency (rad/fs) by 2πc. Internally everything is rad/fs.

use serde::Deserialize;

use crate::dynamics::{
    BathId, DensityMatrix, Level, LevelSystem, Method, ModelFlags, SolverSettings, Transition,
    Generator,
};
use crate::error::{Error, Result};
use crate::rates::RateFunction;
use crate::{C64, Matrix5, DIM};

/// Speed of light in cm/fs.
pub const SPEED_OF_LIGHT_CM_PER_FS: f64 = 2.997_924_58e-5;

/// rad/fs per cm⁻¹: ω = 2πc·ν̃.
pub const WAVENUMBER_TO_ANGULAR: f64 = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT_CM_PER_FS;

/// ħ/k_B in fs·K, for Bose occupations with ω in rad/fs and T in kelvin.
pub const HBAR_OVER_KB_FS_K: f64 = 1.054_571_817e-34 / 1.380_649e-23 * 1e15;

/// Convert a wavenumber (cm⁻¹) to angular frequency (rad/fs).
pub fn wavenumber_to_angular(nu_tilde: f64) -> f64 {
    WAVENUMBER_TO_ANGULAR * nu_tilde
}

/// Mean thermal occupation 1/(e^{ħω/k_BT} − 1). T = 0 gives 0; ω must be
/// positive.
pub fn bose_occupation(omega: f64, temperature_k: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::config(format!(
            "bose_occupation needs omega > 0, got {omega}"
        )));
    }
    if temperature_k < 0.0 {
        return Err(Error::config("temperature must be ≥ 0"));
    }
    if temperature_k == 0.0 {
        return Ok(0.0);
    }
    let x = HBAR_OVER_KB_FS_K * omega / temperature_k;
    Ok(1.0 / (x.exp() - 1.0))
}

/// The working regimes of the engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Overdamped,
    Underdamped,
    Intermediate,
    Custom,
}

impl Regime {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "overdamped" | "over" => Ok(Regime::Overdamped),
            "underdamped" | "under" => Ok(Regime::Underdamped),
            "intermediate" | "inter" => Ok(Regime::Intermediate),
            "custom" => Ok(Regime::Custom),
            other => Err(Error::config(format!("unknown regime '{other}'"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Overdamped => "overdamped",
            Regime::Underdamped => "underdamped",
            Regime::Intermediate => "intermediate",
            Regime::Custom => "custom",
        }
    }
}

/// Bath memory treatment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Markovian,
    NonMarkovian,
}

impl Mode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "markovian" | "m" => Ok(Mode::Markovian),
            "nonmarkovian" | "non-markovian" | "nm" => Ok(Mode::NonMarkovian),
            other => Err(Error::config(format!("unknown mode '{other}'"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Markovian => "markovian",
            Mode::NonMarkovian => "nonmarkovian",
        }
    }
}

/// How the default bath memory widths κ are assigned in non-Markovian mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WidthConvention {
    /// One width per bath: the geometric mean of the bath's transition
    /// rates, converted from cm⁻¹ at c (ordinary frequency). A reservoir
    /// has a single correlation time; this is the default.
    BathScale,
    /// Each transition's width equals its own Markovian rate in angular
    /// units, κ_ij = γ_ij, so a transition's rate law is
    /// γ(t) = γ·(1 − e^{−γt}).
    TransitionRate,
}

impl WidthConvention {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "bath-scale" => Ok(WidthConvention::BathScale),
            "transition-rate" => Ok(WidthConvention::TransitionRate),
            other => Err(Error::config(format!("unknown width_convention '{other}'"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            WidthConvention::BathScale => "bath-scale",
            WidthConvention::TransitionRate => "transition-rate",
        }
    }
}

/// Identification of the decay rate with the rate integral Γ(t).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateConvention {
    /// γ(t) = Re Γ(t): saturates to the configured Markovian rates in the
    /// long-time limit. Default.
    Full,
    /// γ(t) = Re Γ(t)/2: the Γ = γ/2 + iλ bookkeeping; uniformly halves
    /// every rate.
    Half,
}

impl RateConvention {
    pub fn factor(&self) -> f64 {
        match self {
            RateConvention::Full => 1.0,
            RateConvention::Half => 0.5,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(RateConvention::Full),
            "half" => Ok(RateConvention::Half),
            other => Err(Error::config(format!("unknown rate_convention '{other}'"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            RateConvention::Full => "full",
            RateConvention::Half => "half",
        }
    }
}

/// Choice of initial density matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    /// (|e1⟩ + |e2⟩)/√2 — populations and coherence all 0.5; positive
    /// semidefinite. Default.
    PurifiedSuperposition,
    /// ρ_{e2e2} = 0.5, ρ_{e1e2} = 0.5, everything else zero. As printed:
    /// trace ½ and λ_min ≈ −0.309; selectable for comparison only.
    E2OnlyCoherent,
    /// All population in |g⟩.
    Ground,
    /// Caller-supplied state.
    Custom(DensityMatrix),
}

impl InitialState {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "purified-superposition" => Ok(InitialState::PurifiedSuperposition),
            "e2-only-coherent" => Ok(InitialState::E2OnlyCoherent),
            "ground" => Ok(InitialState::Ground),
            other => Err(Error::config(format!("unknown initial_state '{other}'"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            InitialState::PurifiedSuperposition => "purified-superposition",
            InitialState::E2OnlyCoherent => "e2-only-coherent",
            InitialState::Ground => "ground",
            InitialState::Custom(_) => "custom",
        }
    }
}

/// Raw per-regime parameters in cm⁻¹ (rates, splitting, dephasing) and
/// dimensionless occupations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeTable {
    pub delta: f64,
    pub gamma_e1g: f64,
    pub gamma_e2g: f64,
    pub gamma_e1m: f64,
    pub gamma_e2m: f64,
    pub gamma_m1m2: f64,
    pub gamma_m2g: f64,
    pub tau2_inv: f64,
    pub nbar_1h: f64,
    pub nbar_2h: f64,
}

pub const OVERDAMPED: RegimeTable = RegimeTable {
    delta: 120.0,
    gamma_e1g: 0.005,
    gamma_e2g: 0.0016,
    gamma_e1m: 140.0,
    gamma_e2m: 18.0,
    gamma_m1m2: 1e-10,
    gamma_m2g: 200.0,
    tau2_inv: 41.0,
    nbar_1h: 60_000.0,
    nbar_2h: 10_000.0,
};

pub const UNDERDAMPED: RegimeTable = RegimeTable {
    delta: 600.0,
    gamma_e1g: 0.005,
    gamma_e2g: 0.005,
    gamma_e1m: 35.0,
    gamma_e2m: 35.0,
    gamma_m1m2: 1e-10,
    gamma_m2g: 50.0,
    tau2_inv: 41.0,
    nbar_1h: 10_000.0,
    nbar_2h: 20_000.0,
};

pub const INTERMEDIATE: RegimeTable = RegimeTable {
    delta: 720.0,
    gamma_e1g: 0.005,
    gamma_e2g: 0.005,
    gamma_e1m: 280.0,
    gamma_e2m: 280.0,
    gamma_m1m2: 1e-10,
    gamma_m2g: 300.0,
    tau2_inv: 41.0,
    nbar_1h: 90_000.0,
    nbar_2h: 10_000.0,
};

impl RegimeTable {
    pub fn preset(regime: Regime) -> Result<&'static RegimeTable> {
        match regime {
            Regime::Overdamped => Ok(&OVERDAMPED),
            Regime::Underdamped => Ok(&UNDERDAMPED),
            Regime::Intermediate => Ok(&INTERMEDIATE),
            Regime::Custom => Err(Error::config(
                "the custom regime has no preset; supply a config file",
            )),
        }
    }
}

/// Nominal absolute level placement in cm⁻¹ (g = 0). Only the donor
/// splitting Δ affects observables under default flags; the absolute
/// placement exists to keep every transition frequency positive.
pub const ENERGY_E2_WAVENUMBER: f64 = 12_000.0;
pub const ENERGY_M1_WAVENUMBER: f64 = 6_000.0;
pub const ENERGY_M2_WAVENUMBER: f64 = 2_000.0;

/// One fully resolved simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub regime: Regime,
    pub mode: Mode,
    pub system: LevelSystem,
    pub p_hot: f64,
    pub p_cold: f64,
    /// Pure-dephasing rate 1/τ₂ on ρ_{e1e2}, rad/fs.
    pub tau2_inv: f64,
    pub flags: ModelFlags,
    pub rate_convention: RateConvention,
    pub width_convention: WidthConvention,
    pub initial_state: InitialState,
    pub horizon_fs: f64,
    pub solver: SolverSettings,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.solver.validate()?;
        if !(self.p_hot.abs() <= 1.0 && self.p_cold.abs() <= 1.0) {
            return Err(Error::config("|p| must be ≤ 1"));
        }
        if self.tau2_inv < 0.0 {
            return Err(Error::config("tau2_inv must be ≥ 0"));
        }
        if !(self.horizon_fs > 0.0) {
            return Err(Error::config("horizon must be positive"));
        }
        Ok(())
    }

    /// The generator (right-hand side) for this scenario.
    pub fn generator(&self) -> Result<Generator> {
        Generator::new(
            self.system.clone(),
            self.p_hot,
            self.p_cold,
            self.tau2_inv,
            self.flags,
            self.rate_convention.factor(),
        )
    }

    pub fn initial_density(&self) -> Result<DensityMatrix> {
        Ok(match &self.initial_state {
            InitialState::PurifiedSuperposition => DensityMatrix::purified_superposition(),
            InitialState::E2OnlyCoherent => DensityMatrix::e2_only_coherent(),
            InitialState::Ground => DensityMatrix::ground(),
            InitialState::Custom(rho) => rho.clone(),
        })
    }

    /// Sum of every dissipator coefficient magnitude at the Markovian
    /// plateau: Σ (2n̄+1)γ plus the interference channels. This is the
    /// scenario's aggregate Markovian rate scale, the reference for
    /// `kappa_scale`.
    pub fn aggregate_markovian_rate(&self) -> f64 {
        let trs = &self.system.transitions;
        let mut total: f64 = trs
            .iter()
            .map(|tr| tr.rate.gamma_markov * (2.0 * tr.nbar + 1.0))
            .sum();
        for (i, j, p, _) in self.system.shared_bath_pairs(self.p_hot, self.p_cold) {
            let gi = trs[i].rate.gamma_markov;
            let gj = trs[j].rate.gamma_markov;
            let c = p.abs() * (gi * gj).sqrt();
            total += 2.0
                * c
                * (((trs[i].nbar + 1.0) * (trs[j].nbar + 1.0)).sqrt()
                    + (trs[i].nbar * trs[j].nbar).sqrt());
        }
        total
    }

    /// Replace every transition's memory width with
    /// `scale × aggregate_markovian_rate()`. `scale = 1e3` is the
    /// Markovian-limit configuration: every channel's missed switch-on
    /// action is ≲ 10⁻³, so trajectories collapse onto the constant-rate
    /// ones.
    pub fn with_kappa_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::config("kappa_scale must be positive"));
        }
        let kappa = scale * self.aggregate_markovian_rate();
        for tr in &mut self.system.transitions {
            tr.rate.width_kappa = kappa;
        }
        Ok(self)
    }
}

/// Default simulated windows per regime (fs). The underdamped window is
/// long enough to cover the coherence plateau forming around 1.5 ps.
pub fn default_horizon_fs(regime: Regime) -> f64 {
    match regime {
        Regime::Overdamped => 1000.0,
        Regime::Underdamped => 2000.0,
        Regime::Intermediate => 1000.0,
        Regime::Custom => 1000.0,
    }
}

fn level_energies(delta_wavenumber: f64) -> [f64; DIM] {
    let mut e = [0.0; DIM];
    e[Level::G.index()] = 0.0;
    e[Level::E2.index()] = wavenumber_to_angular(ENERGY_E2_WAVENUMBER);
    e[Level::E1.index()] = wavenumber_to_angular(ENERGY_E2_WAVENUMBER + delta_wavenumber);
    e[Level::M1.index()] = wavenumber_to_angular(ENERGY_M1_WAVENUMBER);
    e[Level::M2.index()] = wavenumber_to_angular(ENERGY_M2_WAVENUMBER);
    e
}

/// Bath memory widths in rad/fs, one per transition in standard order,
/// derived from the width convention.
fn bath_widths(table: &RegimeTable, convention: WidthConvention) -> [f64; 6] {
    match convention {
        WidthConvention::BathScale => {
            let hot = SPEED_OF_LIGHT_CM_PER_FS * (table.gamma_e1g * table.gamma_e2g).sqrt();
            let cold = SPEED_OF_LIGHT_CM_PER_FS * (table.gamma_e1m * table.gamma_e2m).sqrt();
            let load = SPEED_OF_LIGHT_CM_PER_FS * table.gamma_m1m2;
            let cold2 = SPEED_OF_LIGHT_CM_PER_FS * table.gamma_m2g;
            [hot, hot, cold, cold, load, cold2]
        }
        WidthConvention::TransitionRate => [
            wavenumber_to_angular(table.gamma_e1g),
            wavenumber_to_angular(table.gamma_e2g),
            wavenumber_to_angular(table.gamma_e1m),
            wavenumber_to_angular(table.gamma_e2m),
            wavenumber_to_angular(table.gamma_m1m2),
            wavenumber_to_angular(table.gamma_m2g),
        ],
    }
}

fn build_system(
    table: &RegimeTable,
    mode: Mode,
    convention: WidthConvention,
) -> LevelSystem {
    let energies = level_energies(table.delta);
    let widths = bath_widths(table, convention);
    let gammas_cm = [
        table.gamma_e1g,
        table.gamma_e2g,
        table.gamma_e1m,
        table.gamma_e2m,
        table.gamma_m1m2,
        table.gamma_m2g,
    ];
    let layout = [
        (Level::E1, Level::G, BathId::Hot, table.nbar_1h),
        (Level::E2, Level::G, BathId::Hot, table.nbar_2h),
        (Level::E1, Level::M1, BathId::Cold1, 0.0),
        (Level::E2, Level::M1, BathId::Cold1, 0.0),
        (Level::M1, Level::M2, BathId::Load, 0.0),
        (Level::M2, Level::G, BathId::Cold2, 0.0),
    ];
    let transitions = layout
        .iter()
        .zip(gammas_cm.iter().zip(widths.iter()))
        .map(|(&(upper, lower, bath, nbar), (&g_cm, &kappa))| {
            let gamma = wavenumber_to_angular(g_cm);
            let omega = energies[upper.index()] - energies[lower.index()];
            let rate = match mode {
                Mode::Markovian => RateFunction::markovian(gamma, omega),
                Mode::NonMarkovian => RateFunction::closed_form(gamma, kappa, omega),
            };
            Transition {
                upper,
                lower,
                bath,
                rate,
                nbar,
            }
        })
        .collect();
    LevelSystem {
        energies,
        delta_split: wavenumber_to_angular(table.delta),
        transitions,
    }
}

/// Build a fully resolved scenario from a regime preset, a bath mode, and
/// strict key=value overrides. Unknown keys are errors.
pub fn build_scenario(regime: Regime, mode: Mode, overrides: &[(String, String)]) -> Result<Scenario> {
    let table = RegimeTable::preset(regime)?;
    let mut width_convention = WidthConvention::BathScale;
    // width_convention must be known before the system is built
    for (key, value) in overrides {
        if key == "width_convention" {
            width_convention = WidthConvention::parse(value)?;
        }
    }

    let mut scenario = Scenario {
        regime,
        mode,
        system: build_system(table, mode, width_convention),
        p_hot: 1.0,
        p_cold: 1.0,
        tau2_inv: wavenumber_to_angular(table.tau2_inv),
        flags: ModelFlags::default(),
        rate_convention: RateConvention::Full,
        width_convention,
        initial_state: InitialState::PurifiedSuperposition,
        horizon_fs: default_horizon_fs(regime),
        solver: SolverSettings::default(),
    };

    let mut kappa_scale: Option<f64> = None;
    for (key, value) in overrides {
        let parse_f64 = || -> Result<f64> {
            value
                .parse::<f64>()
                .map_err(|_| Error::config(format!("override {key}: '{value}' is not a number")))
        };
        let parse_bool = || -> Result<bool> {
            value
                .parse::<bool>()
                .map_err(|_| Error::config(format!("override {key}: '{value}' is not a bool")))
        };
        match key.as_str() {
            "p_hot" => scenario.p_hot = parse_f64()?,
            "p_cold" => scenario.p_cold = parse_f64()?,
            "tau2_inv" => scenario.tau2_inv = wavenumber_to_angular(parse_f64()?),
            "horizon_fs" => scenario.horizon_fs = parse_f64()?,
            "sample_interval_fs" => scenario.solver.sample_interval_fs = parse_f64()?,
            "max_step_fs" => scenario.solver.max_step_fs = parse_f64()?,
            "rel_tol" => scenario.solver.rel_tol = parse_f64()?,
            "abs_tol" => scenario.solver.abs_tol = parse_f64()?,
            "method" => {
                scenario.solver.method = match value.as_str() {
                    "adaptive-rk54" => Method::AdaptiveRk54,
                    "fixed-rk4" => Method::FixedRk4,
                    other => return Err(Error::config(format!("unknown method '{other}'"))),
                }
            }
            "kappa_scale" => kappa_scale = Some(parse_f64()?),
            "rate_convention" => scenario.rate_convention = RateConvention::parse(value)?,
            "width_convention" => {} // consumed above
            "initial_state" => scenario.initial_state = InitialState::parse(value)?,
            "secular" => scenario.flags.secular = parse_bool()?,
            "free_evolution" => scenario.flags.free_evolution = parse_bool()?,
            "nonsecular_phase" => scenario.flags.nonsecular_phase = parse_bool()?,
            "dephasing" => scenario.flags.dephasing = parse_bool()?,
            other => {
                return Err(Error::config(format!(
                    "unknown override key '{other}' (strict: misspellings fail loudly)"
                )))
            }
        }
    }

    if let Some(scale) = kappa_scale {
        if mode == Mode::NonMarkovian {
            scenario = scenario.with_kappa_scale(scale)?;
        }
    }
    scenario.validate()?;
    Ok(scenario)
}

/// Deterministic regime classification: the donor splitting Δ compared to
/// the larger of the two donor states' inverse lifetimes (the sum of each
/// state's occupation-dressed outgoing rates). Ratios below 1/2 are
/// overdamped, above 2 underdamped, intermediate between.
pub fn classify_regime(scenario: &Scenario) -> Regime {
    let mut out_e1 = 0.0;
    let mut out_e2 = 0.0;
    for tr in &scenario.system.transitions {
        let dressed = tr.rate.gamma_markov * (tr.nbar + 1.0);
        match tr.upper {
            Level::E1 => out_e1 += dressed,
            Level::E2 => out_e2 += dressed,
            _ => {}
        }
    }
    let lifetime_scale = out_e1.max(out_e2);
    if lifetime_scale <= 0.0 {
        return Regime::Underdamped;
    }
    let ratio = scenario.system.delta_split / lifetime_scale;
    if ratio < 0.5 {
        Regime::Overdamped
    } else if ratio > 2.0 {
        Regime::Underdamped
    } else {
        Regime::Intermediate
    }
}

// ---------------------------------------------------------------------
// Config-file schema
// ---------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    system: SystemSection,
    #[serde(default)]
    bath: BathSection,
    #[serde(default)]
    solver: SolverSection,
    #[serde(default)]
    flags: FlagsSection,
    initial: Option<InitialSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemSection {
    regime: String,
    mode: String,
    /// "wavenumber" (cm⁻¹) or "angular" (rad/fs); applies to delta, all
    /// gamma_* / kappa_* values, and tau2_inv.
    units: String,
    delta: f64,
    gamma_e1g: f64,
    gamma_e2g: f64,
    gamma_e1m: f64,
    gamma_e2m: f64,
    gamma_m1m2: f64,
    gamma_m2g: f64,
    nbar_1h: f64,
    nbar_2h: f64,
    kappa_e1g: Option<f64>,
    kappa_e2g: Option<f64>,
    kappa_e1m: Option<f64>,
    kappa_e2m: Option<f64>,
    kappa_m1m2: Option<f64>,
    kappa_m2g: Option<f64>,
    initial_state: Option<String>,
    horizon_fs: Option<f64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct BathSection {
    p_hot: Option<f64>,
    p_cold: Option<f64>,
    tau2_inv: Option<f64>,
    width_convention: Option<String>,
    kappa_scale: Option<f64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SolverSection {
    method: Option<String>,
    rel_tol: Option<f64>,
    abs_tol: Option<f64>,
    max_step_fs: Option<f64>,
    sample_interval_fs: Option<f64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FlagsSection {
    secular: Option<bool>,
    free_evolution: Option<bool>,
    nonsecular_phase: Option<bool>,
    dephasing: Option<bool>,
    rate_convention: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialSection {
    rho_re: Vec<Vec<f64>>,
    rho_im: Vec<Vec<f64>>,
}

/// Parse a scenario from the config-file text format. Unknown keys fail.
pub fn scenario_from_config_str(text: &str) -> Result<Scenario> {
    let cfg: ConfigFile =
        toml::from_str(text).map_err(|e| Error::config(format!("config parse error: {e}")))?;
    let regime = Regime::parse(&cfg.system.regime)?;
    let mode = Mode::parse(&cfg.system.mode)?;
    let to_angular = match cfg.system.units.as_str() {
        "wavenumber" => WAVENUMBER_TO_ANGULAR,
        "angular" => 1.0,
        other => {
            return Err(Error::config(format!(
                "units must be 'wavenumber' or 'angular', got '{other}'"
            )))
        }
    };
    // Tables are stated in cm⁻¹; convert through the declared units.
    let table = RegimeTable {
        delta: cfg.system.delta * to_angular / WAVENUMBER_TO_ANGULAR,
        gamma_e1g: cfg.system.gamma_e1g * to_angular / WAVENUMBER_TO_ANGULAR,
        gamma_e2g: cfg.system.gamma_e2g * to_angular / WAVENUMBER_TO_ANGULAR,
        gamma_e1m: cfg.system.gamma_e1m * to_angular / WAVENUMBER_TO_ANGULAR,
        gamma_e2m: cfg.system.gamma_e2m * to_angular / WAVENUMBER_TO_ANGULAR,
        gamma_m1m2: cfg.system.gamma_m1m2 * to_angular / WAVENUMBER_TO_ANGULAR,
        gamma_m2g: cfg.system.gamma_m2g * to_angular / WAVENUMBER_TO_ANGULAR,
        tau2_inv: 0.0, // handled below
        nbar_1h: cfg.system.nbar_1h,
        nbar_2h: cfg.system.nbar_2h,
    };
    let width_convention = match &cfg.bath.width_convention {
        Some(s) => WidthConvention::parse(s)?,
        None => WidthConvention::BathScale,
    };
    let mut system = build_system(&table, mode, width_convention);

    // explicit per-transition widths override the convention
    let kappas = [
        cfg.system.kappa_e1g,
        cfg.system.kappa_e2g,
        cfg.system.kappa_e1m,
        cfg.system.kappa_e2m,
        cfg.system.kappa_m1m2,
        cfg.system.kappa_m2g,
    ];
    for (tr, kappa) in system.transitions.iter_mut().zip(kappas.iter()) {
        if let Some(k) = kappa {
            tr.rate.width_kappa = k * to_angular;
        }
    }

    let initial_state = match (&cfg.system.initial_state, &cfg.initial) {
        (_, Some(init)) => {
            if init.rho_re.len() != DIM
                || init.rho_im.len() != DIM
                || init.rho_re.iter().any(|r| r.len() != DIM)
                || init.rho_im.iter().any(|r| r.len() != DIM)
            {
                return Err(Error::config("[initial] matrices must be 5×5"));
            }
            let mut m = Matrix5::zeros();
            for i in 0..DIM {
                for j in 0..DIM {
                    m[(i, j)] = C64::new(init.rho_re[i][j], init.rho_im[i][j]);
                }
            }
            InitialState::Custom(DensityMatrix::from_matrix(m)?)
        }
        (Some(s), None) => InitialState::parse(s)?,
        (None, None) => InitialState::PurifiedSuperposition,
    };

    let mut solver = SolverSettings::default();
    if let Some(m) = &cfg.solver.method {
        solver.method = match m.as_str() {
            "adaptive-rk54" => Method::AdaptiveRk54,
            "fixed-rk4" => Method::FixedRk4,
            other => return Err(Error::config(format!("unknown method '{other}'"))),
        };
    }
    if let Some(v) = cfg.solver.rel_tol {
        solver.rel_tol = v;
    }
    if let Some(v) = cfg.solver.abs_tol {
        solver.abs_tol = v;
    }
    if let Some(v) = cfg.solver.max_step_fs {
        solver.max_step_fs = v;
    }
    if let Some(v) = cfg.solver.sample_interval_fs {
        solver.sample_interval_fs = v;
    }

    let flags = ModelFlags {
        secular: cfg.flags.secular.unwrap_or(false),
        free_evolution: cfg.flags.free_evolution.unwrap_or(false),
        nonsecular_phase: cfg.flags.nonsecular_phase.unwrap_or(true),
        dephasing: cfg.flags.dephasing.unwrap_or(true),
    };
    let rate_convention = match &cfg.flags.rate_convention {
        Some(s) => RateConvention::parse(s)?,
        None => RateConvention::Full,
    };

    let mut scenario = Scenario {
        regime,
        mode,
        system,
        p_hot: cfg.bath.p_hot.unwrap_or(1.0),
        p_cold: cfg.bath.p_cold.unwrap_or(1.0),
        tau2_inv: cfg.bath.tau2_inv.map(|v| v * to_angular).unwrap_or_else(|| {
            wavenumber_to_angular(41.0)
        }),
        flags,
        rate_convention,
        width_convention,
        initial_state,
        horizon_fs: cfg.system.horizon_fs.unwrap_or(default_horizon_fs(regime)),
        solver,
    };
    if let Some(scale) = cfg.bath.kappa_scale {
        if mode == Mode::NonMarkovian {
            scenario = scenario.with_kappa_scale(scale)?;
        }
    }
    scenario.validate()?;
    Ok(scenario)
}

fn fmt(v: f64) -> String {
    format!("{v:.17e}")
}

/// Serialize a scenario to the config-file text format. All magnitudes
/// are written in angular units at 17 significant digits, so re-parsing
/// reproduces every numeric field bit-exactly.
pub fn scenario_to_config_string(sc: &Scenario) -> String {
    let trs = &sc.system.transitions;
    let mut out = String::new();
    out.push_str("[system]\n");
    out.push_str(&format!("regime = \"{}\"\n", sc.regime.as_str()));
    out.push_str(&format!("mode = \"{}\"\n", sc.mode.as_str()));
    out.push_str("units = \"angular\"\n");
    out.push_str(&format!("delta = {}\n", fmt(sc.system.delta_split)));
    let names = ["e1g", "e2g", "e1m", "e2m", "m1m2", "m2g"];
    for (name, tr) in names.iter().zip(trs.iter()) {
        out.push_str(&format!("gamma_{name} = {}\n", fmt(tr.rate.gamma_markov)));
    }
    if sc.mode == Mode::NonMarkovian {
        for (name, tr) in names.iter().zip(trs.iter()) {
            out.push_str(&format!("kappa_{name} = {}\n", fmt(tr.rate.width_kappa)));
        }
    }
    out.push_str(&format!("nbar_1h = {}\n", fmt(trs[0].nbar)));
    out.push_str(&format!("nbar_2h = {}\n", fmt(trs[1].nbar)));
    out.push_str(&format!(
        "initial_state = \"{}\"\n",
        sc.initial_state.as_str()
    ));
    out.push_str(&format!("horizon_fs = {}\n", fmt(sc.horizon_fs)));

    out.push_str("\n[bath]\n");
    out.push_str(&format!("p_hot = {}\n", fmt(sc.p_hot)));
    out.push_str(&format!("p_cold = {}\n", fmt(sc.p_cold)));
    out.push_str(&format!("tau2_inv = {}\n", fmt(sc.tau2_inv)));
    out.push_str(&format!(
        "width_convention = \"{}\"\n",
        sc.width_convention.as_str()
    ));

    out.push_str("\n[solver]\n");
    out.push_str(&format!(
        "method = \"{}\"\n",
        match sc.solver.method {
            Method::AdaptiveRk54 => "adaptive-rk54",
            Method::FixedRk4 => "fixed-rk4",
        }
    ));
    out.push_str(&format!("rel_tol = {}\n", fmt(sc.solver.rel_tol)));
    out.push_str(&format!("abs_tol = {}\n", fmt(sc.solver.abs_tol)));
    out.push_str(&format!("max_step_fs = {}\n", fmt(sc.solver.max_step_fs)));
    out.push_str(&format!(
        "sample_interval_fs = {}\n",
        fmt(sc.solver.sample_interval_fs)
    ));

    out.push_str("\n[flags]\n");
    out.push_str(&format!("secular = {}\n", sc.flags.secular));
    out.push_str(&format!("free_evolution = {}\n", sc.flags.free_evolution));
    out.push_str(&format!(
        "nonsecular_phase = {}\n",
        sc.flags.nonsecular_phase
    ));
    out.push_str(&format!("dephasing = {}\n", sc.flags.dephasing));
    out.push_str(&format!(
        "rate_convention = \"{}\"\n",
        sc.rate_convention.as_str()
    ));

    if let InitialState::Custom(rho) = &sc.initial_state {
        out.push_str("\n[initial]\n");
        let m = rho.matrix();
        let rows_re: Vec<String> = (0..DIM)
            .map(|i| {
                let cols: Vec<String> = (0..DIM).map(|j| fmt(m[(i, j)].re)).collect();
                format!("[{}]", cols.join(", "))
            })
            .collect();
        let rows_im: Vec<String> = (0..DIM)
            .map(|i| {
                let cols: Vec<String> = (0..DIM).map(|j| fmt(m[(i, j)].im)).collect();
                format!("[{}]", cols.join(", "))
            })
            .collect();
        out.push_str(&format!("rho_re = [{}]\n", rows_re.join(", ")));
        out.push_str(&format!("rho_im = [{}]\n", rows_im.join(", ")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn wavenumber_conversion_constant() {
        // recomputed from c = 2.99792458e10 cm/s
        let c_cm_per_fs = 2.99792458e10 * 1e-15;
        assert_relative_eq!(
            wavenumber_to_angular(1.0),
            2.0 * std::f64::consts::PI * c_cm_per_fs,
            max_relative = 1e-15
        );
        assert!((wavenumber_to_angular(1.0) - 1.883652e-4).abs() < 1e-9);
        assert_eq!(wavenumber_to_angular(0.0), 0.0);
        // underdamped splitting: ~0.1130 rad/fs, period ~55.6 fs
        let delta = wavenumber_to_angular(600.0);
        assert!((delta - 0.1130).abs() < 2e-4);
        assert!((2.0 * std::f64::consts::PI / delta - 55.6).abs() < 0.1);
    }

    #[test]
    fn wavenumber_conversion_is_linear() {
        let (a, b) = (123.456, 789.012);
        let lhs = wavenumber_to_angular(a + b);
        let rhs = wavenumber_to_angular(a) + wavenumber_to_angular(b);
        assert!((lhs - rhs).abs() <= 2.0 * f64::EPSILON * lhs.abs());
    }

    #[test]
    fn bose_occupation_examples() {
        assert_eq!(bose_occupation(0.1, 0.0).unwrap(), 0.0);
        // ħω/kT = ln 2 → n̄ = 1 exactly
        let t = HBAR_OVER_KB_FS_K * 0.1 / 2.0f64.ln();
        assert_relative_eq!(bose_occupation(0.1, t).unwrap(), 1.0, max_relative = 1e-12);
        // ħω = kT → 1/(e − 1)
        let t = HBAR_OVER_KB_FS_K * 0.1;
        assert_relative_eq!(
            bose_occupation(0.1, t).unwrap(),
            1.0 / (std::f64::consts::E - 1.0),
            max_relative = 1e-12
        );
        assert!((bose_occupation(0.1, t).unwrap() - 0.5820).abs() < 1e-4);
        assert!(bose_occupation(0.0, 300.0).is_err());
        assert!(bose_occupation(-1.0, 300.0).is_err());
    }

    #[test]
    fn preset_tables_are_verbatim() {
        // golden: every cell of the parameter table
        let o = &OVERDAMPED;
        assert_eq!(
            (o.delta, o.gamma_e1g, o.gamma_e2g, o.gamma_e1m, o.gamma_e2m),
            (120.0, 0.005, 0.0016, 140.0, 18.0)
        );
        assert_eq!(
            (o.gamma_m1m2, o.gamma_m2g, o.tau2_inv, o.nbar_1h, o.nbar_2h),
            (1e-10, 200.0, 41.0, 60000.0, 10000.0)
        );
        let u = &UNDERDAMPED;
        assert_eq!(
            (u.delta, u.gamma_e1g, u.gamma_e2g, u.gamma_e1m, u.gamma_e2m),
            (600.0, 0.005, 0.005, 35.0, 35.0)
        );
        assert_eq!(
            (u.gamma_m1m2, u.gamma_m2g, u.tau2_inv, u.nbar_1h, u.nbar_2h),
            (1e-10, 50.0, 41.0, 10000.0, 20000.0)
        );
        let m = &INTERMEDIATE;
        assert_eq!(
            (m.delta, m.gamma_e1g, m.gamma_e2g, m.gamma_e1m, m.gamma_e2m),
            (720.0, 0.005, 0.005, 280.0, 280.0)
        );
        assert_eq!(
            (m.gamma_m1m2, m.gamma_m2g, m.tau2_inv, m.nbar_1h, m.nbar_2h),
            (1e-10, 300.0, 41.0, 90000.0, 10000.0)
        );
    }

    #[test]
    fn presets_resolve_to_converted_rates() {
        let sc = build_scenario(Regime::Overdamped, Mode::Markovian, &[]).unwrap();
        let trs = &sc.system.transitions;
        assert_relative_eq!(trs[2].rate.gamma_markov, wavenumber_to_angular(140.0));
        assert_relative_eq!(trs[3].rate.gamma_markov, wavenumber_to_angular(18.0));
        assert_eq!(trs[0].nbar, 60000.0);
        assert_eq!(trs[1].nbar, 10000.0);
        assert_eq!(trs[2].nbar, 0.0);
        let sc = build_scenario(Regime::Underdamped, Mode::Markovian, &[]).unwrap();
        assert_relative_eq!(sc.system.delta_split, wavenumber_to_angular(600.0));
        assert_relative_eq!(
            sc.system.transitions[5].rate.gamma_markov,
            wavenumber_to_angular(50.0)
        );
        let sc = build_scenario(Regime::Intermediate, Mode::Markovian, &[]).unwrap();
        assert_relative_eq!(sc.system.delta_split, wavenumber_to_angular(720.0));
        assert_eq!(sc.system.transitions[0].nbar, 90000.0);
    }

    #[test]
    fn strict_overrides_reject_unknown_keys() {
        let bad = vec![("p_hott".to_string(), "0.5".to_string())];
        let err = build_scenario(Regime::Underdamped, Mode::Markovian, &bad).unwrap_err();
        assert!(err.to_string().contains("p_hott"));
        let bad = vec![("p_hot".to_string(), "zero".to_string())];
        assert!(build_scenario(Regime::Underdamped, Mode::Markovian, &bad).is_err());
    }

    #[test]
    fn classify_regime_matches_presets() {
        for (regime, expect) in [
            (Regime::Overdamped, Regime::Overdamped),
            (Regime::Underdamped, Regime::Underdamped),
            (Regime::Intermediate, Regime::Intermediate),
        ] {
            let sc = build_scenario(regime, Mode::Markovian, &[]).unwrap();
            assert_eq!(classify_regime(&sc), expect, "regime {regime:?}");
        }
        // zero gap is overdamped by definition
        let mut sc = build_scenario(Regime::Underdamped, Mode::Markovian, &[]).unwrap();
        sc.system.delta_split = 0.0;
        sc.system.energies[Level::E1.index()] = sc.system.energies[Level::E2.index()];
        assert_eq!(classify_regime(&sc), Regime::Overdamped);
    }

    #[test]
    fn config_round_trip_is_bit_exact() {
        for mode in [Mode::Markovian, Mode::NonMarkovian] {
            let sc = build_scenario(Regime::Underdamped, mode, &[]).unwrap();
            let text = scenario_to_config_string(&sc);
            let back = scenario_from_config_str(&text).unwrap();
            assert_eq!(sc, back, "round trip not identical for {mode:?}");
        }
        // with a custom initial state
        let mut sc = build_scenario(Regime::Overdamped, Mode::NonMarkovian, &[]).unwrap();
        sc.initial_state = InitialState::Custom(DensityMatrix::purified_superposition());
        let text = scenario_to_config_string(&sc);
        let back = scenario_from_config_str(&text).unwrap();
        assert_eq!(sc, back);
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let sc = build_scenario(Regime::Underdamped, Mode::NonMarkovian, &[]).unwrap();
        let mut text = scenario_to_config_string(&sc);
        text.push_str("\ntypo_key = 1.0\n");
        assert!(scenario_from_config_str(&text).is_err());
    }

    #[test]
    fn config_accepts_wavenumber_units() {
        let text = r#"
[system]
regime = "custom"
mode = "nonmarkovian"
units = "wavenumber"
delta = 600.0
gamma_e1g = 0.005
gamma_e2g = 0.005
gamma_e1m = 35.0
gamma_e2m = 35.0
gamma_m1m2 = 1e-10
gamma_m2g = 50.0
nbar_1h = 10000.0
nbar_2h = 20000.0

[bath]
tau2_inv = 41.0
"#;
        let sc = scenario_from_config_str(text).unwrap();
        assert_relative_eq!(sc.system.delta_split, wavenumber_to_angular(600.0));
        assert_relative_eq!(sc.tau2_inv, wavenumber_to_angular(41.0));
        assert_relative_eq!(
            sc.system.transitions[2].rate.gamma_markov,
            wavenumber_to_angular(35.0)
        );
    }

    #[test]
    fn absolute_energies_do_not_affect_default_dynamics() {
        // only the donor splitting Δ enters under default flags; shifting
        // the absolute placement leaves trajectories unchanged
        let mut base = build_scenario(Regime::Underdamped, Mode::NonMarkovian, &[]).unwrap();
        base.horizon_fs = 300.0;
        let mut shifted = base.clone();
        let bump = wavenumber_to_angular(500.0);
        shifted.system.energies[Level::E1.index()] += bump;
        shifted.system.energies[Level::E2.index()] += bump;
        shifted.system.energies[Level::M1.index()] += wavenumber_to_angular(137.0);
        shifted.system.energies[Level::M2.index()] += wavenumber_to_angular(-61.0);
        let a = crate::dynamics::integrate(&base).unwrap();
        let b = crate::dynamics::integrate(&shifted).unwrap();
        let mut worst = 0.0f64;
        for (ma, mb) in a.states.iter().zip(b.states.iter()) {
            for (za, zb) in ma.iter().zip(mb.iter()) {
                worst = worst.max((za - zb).norm());
            }
        }
        assert!(worst < 1e-12, "absolute energies leaked into dynamics: {worst:.3e}");
    }

    #[test]
    fn kappa_scale_overrides_all_widths() {
        let base = build_scenario(Regime::Underdamped, Mode::NonMarkovian, &[]).unwrap();
        let agg = base.aggregate_markovian_rate();
        let scaled = base.clone().with_kappa_scale(1000.0).unwrap();
        for tr in &scaled.system.transitions {
            assert_relative_eq!(tr.rate.width_kappa, 1000.0 * agg, max_relative = 1e-15);
        }
        assert!(base.clone().with_kappa_scale(0.0).is_err());
    }

    #[test]
    fn bath_scale_widths_share_one_value_per_bath() {
        let sc = build_scenario(Regime::Overdamped, Mode::NonMarkovian, &[]).unwrap();
        let trs = &sc.system.transitions;
        // hot pair shares a width, cold pair shares a width
        assert_eq!(trs[0].rate.width_kappa, trs[1].rate.width_kappa);
        assert_eq!(trs[2].rate.width_kappa, trs[3].rate.width_kappa);
        let cold = SPEED_OF_LIGHT_CM_PER_FS * (140.0f64 * 18.0).sqrt();
        assert_relative_eq!(trs[2].rate.width_kappa, cold, max_relative = 1e-15);
    }

    #[test]
    fn transition_rate_widths_equal_own_rates() {
        let ovr = vec![(
            "width_convention".to_string(),
            "transition-rate".to_string(),
        )];
        let sc = build_scenario(Regime::Overdamped, Mode::NonMarkovian, &ovr).unwrap();
        for tr in &sc.system.transitions {
            assert_relative_eq!(tr.rate.width_kappa, tr.rate.gamma_markov, max_relative = 1e-15);
        }
    }
}

//! Time integration of the master equation.
//!
//! Two steppers: an embedded Dormand–Prince 5(4) pair with PI step-size
//! control (the default) and classical fixed-step RK4 (used by the
//! convergence-order check). Both land exactly on the sample grid, and
//! after every accepted step the state is re-symmetrized ρ ← (ρ + ρ†)/2
//! with the pre-symmetrization drift recorded. The trace is never
//! renormalized: |tr ρ − 1| is a diagnostic, and letting it drift keeps
//! the integrator honest about conservation.

use crate::error::{Error, Result};
use crate::model::Scenario;
use crate::{C64, Matrix5};

use super::density::{hermiticity_drift, symmetrized};
use super::Generator;

/// Stepper choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Adaptive embedded Runge–Kutta 5(4) (Dormand–Prince).
    AdaptiveRk54,
    /// Classical fixed-step fourth-order Runge–Kutta.
    FixedRk4,
}

/// Integration controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub method: Method,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper bound on the step size (fs). Also the fixed step for RK4.
    pub max_step_fs: f64,
    /// Observable sampling period (fs).
    pub sample_interval_fs: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            method: Method::AdaptiveRk54,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step_fs: 1.0,
            sample_interval_fs: 1.0,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::config("solver tolerances must be positive"));
        }
        if !(self.max_step_fs > 0.0 && self.sample_interval_fs > 0.0) {
            return Err(Error::config(
                "max_step and sample_interval must be positive",
            ));
        }
        Ok(())
    }
}

/// Raw integration output: the sampled states plus conservation
/// diagnostics recorded at each sample.
#[derive(Debug, Clone)]
pub struct RawTrajectory {
    pub times_fs: Vec<f64>,
    pub states: Vec<Matrix5>,
    /// |tr ρ(t) − tr ρ(0)| at each sample. The generator is trace
    /// preserving whatever the initial trace, so this measures integrator
    /// drift; for unit-trace states it equals |tr ρ − 1|.
    pub trace_error: Vec<f64>,
    /// Max pre-symmetrization ‖ρ − ρ†‖_max seen since the previous sample.
    pub herm_drift: Vec<f64>,
    /// Smallest eigenvalue of ρ at each sample.
    pub min_eigenvalue: Vec<f64>,
}

const TRACE_TOL: f64 = 1e-8;
const HERM_TOL: f64 = 1e-8;
/// Invariant breach beyond 10× tolerance aborts the run.
const BREACH_FACTOR: f64 = 10.0;

/// Advance the scenario's initial state from t = 0 to the horizon,
/// sampling every `sample_interval_fs`.
pub fn integrate(scenario: &Scenario) -> Result<RawTrajectory> {
    scenario.solver.validate()?;
    if !(scenario.horizon_fs > 0.0) {
        return Err(Error::config("horizon must be positive"));
    }
    let gen = scenario.generator()?;
    let rho0 = scenario.initial_density()?;
    match scenario.solver.method {
        Method::AdaptiveRk54 => run_dp54(&gen, rho0.into_matrix(), scenario),
        Method::FixedRk4 => run_rk4(&gen, rho0.into_matrix(), scenario),
    }
}

struct SampleRecorder {
    traj: RawTrajectory,
    drift_since_sample: f64,
    initial_trace: Option<C64>,
}

impl SampleRecorder {
    fn new(capacity: usize) -> Self {
        SampleRecorder {
            traj: RawTrajectory {
                times_fs: Vec::with_capacity(capacity),
                states: Vec::with_capacity(capacity),
                trace_error: Vec::with_capacity(capacity),
                herm_drift: Vec::with_capacity(capacity),
                min_eigenvalue: Vec::with_capacity(capacity),
            },
            drift_since_sample: 0.0,
            initial_trace: None,
        }
    }

    fn note_step(&mut self, drift: f64) {
        self.drift_since_sample = self.drift_since_sample.max(drift);
    }

    fn record(&mut self, t: f64, rho: &Matrix5) -> Result<()> {
        let mut trace = C64::new(0.0, 0.0);
        for i in 0..crate::DIM {
            trace += rho[(i, i)];
        }
        if !trace.re.is_finite() || !trace.im.is_finite() {
            return Err(Error::InvariantBreach {
                t_fs: t,
                what: "trace (non-finite state)",
                value: f64::NAN,
                limit: TRACE_TOL,
            });
        }
        let reference = *self.initial_trace.get_or_insert(trace);
        let trace_err = (trace - reference).norm();
        if trace_err > BREACH_FACTOR * TRACE_TOL {
            return Err(Error::InvariantBreach {
                t_fs: t,
                what: "trace drift |tr rho(t) - tr rho(0)|",
                value: trace_err,
                limit: BREACH_FACTOR * TRACE_TOL,
            });
        }
        if self.drift_since_sample > BREACH_FACTOR * HERM_TOL {
            return Err(Error::InvariantBreach {
                t_fs: t,
                what: "hermiticity drift",
                value: self.drift_since_sample,
                limit: BREACH_FACTOR * HERM_TOL,
            });
        }
        let min_eig = rho
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        self.traj.times_fs.push(t);
        self.traj.states.push(*rho);
        self.traj.trace_error.push(trace_err);
        self.traj.herm_drift.push(self.drift_since_sample);
        self.traj.min_eigenvalue.push(min_eig);
        self.drift_since_sample = 0.0;
        Ok(())
    }
}

// Dormand–Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// error weights b − b̂ (5th minus embedded 4th order)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn scale(m: &Matrix5, s: f64) -> Matrix5 {
    m * C64::new(s, 0.0)
}

fn run_dp54(gen: &Generator, rho0: Matrix5, scenario: &Scenario) -> Result<RawTrajectory> {
    let settings = &scenario.solver;
    let horizon = scenario.horizon_fs;
    let sample = settings.sample_interval_fs;
    let n_samples = (horizon / sample).floor() as usize;
    let mut rec = SampleRecorder::new(n_samples + 1);

    let mut rho = symmetrized(&rho0);
    let mut t = 0.0;
    rec.record(t, &rho)?;

    let mut h = settings.max_step_fs.min(sample).min(1e-2);
    let mut k1 = gen.apply(&rho, t);
    let mut next_sample_idx = 1usize;

    while next_sample_idx <= n_samples {
        let t_target = sample * next_sample_idx as f64;
        // clip the step to land exactly on the sample boundary
        let h_step = h.min(settings.max_step_fs).min(t_target - t);
        if h_step < 1e-14 {
            // float crumbs; snap to the boundary
            t = t_target;
            rec.record(t, &rho)?;
            next_sample_idx += 1;
            continue;
        }

        let hs = C64::new(h_step, 0.0);
        let k2 = gen.apply(&(rho + scale(&k1, A21) * hs), t + 0.2 * h_step);
        let k3 = gen.apply(
            &(rho + (scale(&k1, A31) + scale(&k2, A32)) * hs),
            t + 0.3 * h_step,
        );
        let k4 = gen.apply(
            &(rho + (scale(&k1, A41) + scale(&k2, A42) + scale(&k3, A43)) * hs),
            t + 0.8 * h_step,
        );
        let k5 = gen.apply(
            &(rho + (scale(&k1, A51) + scale(&k2, A52) + scale(&k3, A53) + scale(&k4, A54)) * hs),
            t + 8.0 / 9.0 * h_step,
        );
        let k6 = gen.apply(
            &(rho
                + (scale(&k1, A61) + scale(&k2, A62) + scale(&k3, A63) + scale(&k4, A64)
                    + scale(&k5, A65))
                    * hs),
            t + h_step,
        );
        let y_new = rho
            + (scale(&k1, B1) + scale(&k3, B3) + scale(&k4, B4) + scale(&k5, B5) + scale(&k6, B6))
                * hs;
        let k7 = gen.apply(&y_new, t + h_step);
        let err_m = (scale(&k1, E1) + scale(&k3, E3) + scale(&k4, E4) + scale(&k5, E5)
            + scale(&k6, E6)
            + scale(&k7, E7))
            * hs;

        // max-norm error relative to mixed tolerance
        let mut err = 0.0f64;
        for idx in 0..25 {
            let y_scale = rho[idx].norm().max(y_new[idx].norm());
            let tol = settings.abs_tol + settings.rel_tol * y_scale;
            err = err.max(err_m[idx].norm() / tol);
        }

        if !err.is_finite() {
            return Err(Error::StepSizeUnderflow {
                t_fs: t,
                local_error: f64::NAN,
            });
        }

        if err <= 1.0 {
            // accept
            t += h_step;
            let drift = hermiticity_drift(&y_new);
            rec.note_step(drift);
            rho = symmetrized(&y_new);
            k1 = gen.apply(&rho, t); // re-evaluate: symmetrization moved the state off k7
            if (t - t_target).abs() < 1e-9 {
                rec.record(t_target, &rho)?;
                next_sample_idx += 1;
            }
        }

        // PI-free elementary controller
        let factor = if err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h = (h_step * factor).min(settings.max_step_fs);
        if h < 1e-12 {
            return Err(Error::StepSizeUnderflow {
                t_fs: t,
                local_error: err,
            });
        }
    }

    Ok(rec.traj)
}

fn run_rk4(gen: &Generator, rho0: Matrix5, scenario: &Scenario) -> Result<RawTrajectory> {
    let settings = &scenario.solver;
    let horizon = scenario.horizon_fs;
    let sample = settings.sample_interval_fs;
    let n_samples = (horizon / sample).floor() as usize;
    let mut rec = SampleRecorder::new(n_samples + 1);

    let mut rho = symmetrized(&rho0);
    let mut t = 0.0;
    rec.record(t, &rho)?;

    for k in 1..=n_samples {
        let t_target = sample * k as f64;
        while t < t_target - 1e-12 {
            let h = settings.max_step_fs.min(t_target - t);
            let hs = C64::new(h, 0.0);
            let half = C64::new(0.5 * h, 0.0);
            let k1 = gen.apply(&rho, t);
            let k2 = gen.apply(&(rho + k1 * half), t + 0.5 * h);
            let k3 = gen.apply(&(rho + k2 * half), t + 0.5 * h);
            let k4 = gen.apply(&(rho + k3 * hs), t + h);
            let y_new = rho
                + (k1 + scale(&k2, 2.0) + scale(&k3, 2.0) + k4) * C64::new(h / 6.0, 0.0);
            rec.note_step(hermiticity_drift(&y_new));
            rho = symmetrized(&y_new);
            t += h;
        }
        t = t_target;
        rec.record(t, &rho)?;
    }

    Ok(rec.traj)
}

/// Earliest sample time t such that the spread (max − min) of
/// |ρ_{e1e2}| over the window [t, t + window] falls below
/// eps × the trajectory's initial coherence. `None` if never satisfied.
pub fn steady_state_detect(
    times_fs: &[f64],
    abs_coherence: &[f64],
    window_fs: f64,
    eps: f64,
) -> Result<Option<f64>> {
    if times_fs.len() != abs_coherence.len() || times_fs.is_empty() {
        return Err(Error::Mismatch(
            "times and coherence series must have equal nonzero length".into(),
        ));
    }
    let span = times_fs[times_fs.len() - 1] - times_fs[0];
    if window_fs > span {
        return Err(Error::Mismatch(format!(
            "window {window_fs} fs exceeds trajectory span {span} fs"
        )));
    }
    let threshold = eps * abs_coherence[0];
    let mut tail = 0usize;
    for start in 0..times_fs.len() {
        let t_end = times_fs[start] + window_fs;
        if t_end > times_fs[times_fs.len() - 1] + 1e-9 {
            break;
        }
        while tail < times_fs.len() - 1 && times_fs[tail] < t_end - 1e-9 {
            tail += 1;
        }
        let slice = &abs_coherence[start..=tail];
        let mx = slice.iter().cloned().fold(f64::MIN, f64::max);
        let mn = slice.iter().cloned().fold(f64::MAX, f64::min);
        if mx - mn < threshold {
            return Ok(Some(times_fs[start]));
        }
    }
    Ok(None)
}

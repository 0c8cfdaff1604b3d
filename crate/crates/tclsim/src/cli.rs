//! Command-line driver.
//!
//! Subcommands: `run` (one scenario → trajectory CSV), `compare`
//! (non-Markovian vs Markovian on identical grids → two trajectory CSVs,
//! a pointwise comparison CSV, a scalar summary CSV, and an overlay SVG),
//! `sweep` (parameter grid → long-form summary CSV), `rates` (γ_ij(t)
//! curves as CSV), and `validate` (the built-in oracle suite).
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.
//! Output directory: `--out-dir`, else `TCLSIM_OUT_DIR`, else the current
//! directory. All file writes are atomic; identical invocations produce
//! byte-identical outputs.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::batch;
use crate::dynamics::integrate;
use crate::error::{Error, Result};
use crate::model::{
    build_scenario, scenario_from_config_str, Mode, RateConvention, Regime, Scenario,
};
use crate::observables::{
    compare, extract, write_csv, write_report_csv, write_summary_csv, write_svg_lines, Channel,
    TrajectoryRecord,
};
use crate::validation;

pub const OUT_DIR_ENV: &str = "TCLSIM_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "tclsim",
    about = "Five-level open-system dynamics with memory-carrying Lorentzian baths",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// Working regime: overdamped | underdamped | intermediate
    #[arg(long, default_value = "underdamped")]
    regime: String,
    /// Config file overriding the preset entirely
    #[arg(long)]
    config: Option<PathBuf>,
    /// Simulation window in fs (defaults per regime)
    #[arg(long)]
    horizon: Option<f64>,
    /// Strict key=value overrides (misspelled keys are errors)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Drop dissipator cross terms
    #[arg(long)]
    secular: bool,
    /// Include the coherent term −i[H, ρ]
    #[arg(long)]
    free_evolution: bool,
    /// Disable the e^{±iΔt} phases on hot-bath cross terms
    #[arg(long)]
    no_nonsecular_phase: bool,
    /// Disable the pure-dephasing channel
    #[arg(long)]
    no_dephasing: bool,
    /// Output directory (overrides TCLSIM_OUT_DIR)
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one scenario and write its trajectory CSV
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Bath mode: markovian | nonmarkovian
        #[arg(long, default_value = "nonmarkovian")]
        mode: String,
        /// Also write an SVG of populations and coherence
        #[arg(long)]
        svg: bool,
    },
    /// Run both bath modes on identical grids and compare
    Compare {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Sweep one parameter over a grid, one summary row per point
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Bath mode: markovian | nonmarkovian
        #[arg(long, default_value = "nonmarkovian")]
        mode: String,
        /// Parameter: kappa_scale | p_hot | p_cold | tau2_inv
        #[arg(long)]
        parameter: String,
        /// Comma-separated grid values (at least two)
        #[arg(long)]
        grid: String,
    },
    /// Dump the time-dependent transition rates γ_ij(t) as CSV
    Rates {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Bath mode: markovian | nonmarkovian
        #[arg(long, default_value = "nonmarkovian")]
        mode: String,
    },
    /// Execute the oracle suite and print one pass/fail line per item
    Validate {
        /// Rate identification: full | half
        #[arg(long, default_value = "full")]
        rate_convention: String,
    },
}

/// Parse argv and run; returns the process exit code.
pub fn main_entry<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints its own message; usage problems are config errors
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            scenario,
            mode,
            svg,
        } => cmd_run(&scenario, &mode, svg),
        Command::Compare { scenario } => cmd_compare(&scenario),
        Command::Sweep {
            scenario,
            mode,
            parameter,
            grid,
        } => cmd_sweep(&scenario, &mode, &parameter, &grid),
        Command::Rates { scenario, mode } => cmd_rates(&scenario, &mode),
        Command::Validate { rate_convention } => cmd_validate(&rate_convention),
    }
}

fn out_dir(args: &ScenarioArgs) -> PathBuf {
    args.out_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn parse_overrides(args: &ScenarioArgs) -> Result<Vec<(String, String)>> {
    let mut overrides = Vec::new();
    for item in &args.set {
        let (key, value) = item.split_once('=').ok_or_else(|| {
            Error::config(format!("--set expects KEY=VALUE, got '{item}'"))
        })?;
        overrides.push((key.trim().to_string(), value.trim().to_string()));
    }
    if args.secular {
        overrides.push(("secular".into(), "true".into()));
    }
    if args.free_evolution {
        overrides.push(("free_evolution".into(), "true".into()));
    }
    if args.no_nonsecular_phase {
        overrides.push(("nonsecular_phase".into(), "false".into()));
    }
    if args.no_dephasing {
        overrides.push(("dephasing".into(), "false".into()));
    }
    if let Some(h) = args.horizon {
        overrides.push(("horizon_fs".into(), format!("{h}")));
    }
    Ok(overrides)
}

fn resolve_scenario(args: &ScenarioArgs, mode: Mode) -> Result<Scenario> {
    if let Some(config_path) = &args.config {
        let text = std::fs::read_to_string(config_path)
            .map_err(|e| Error::io(config_path.display().to_string(), e))?;
        let mut sc = scenario_from_config_str(&text)?;
        // CLI flags and overrides still apply on top of the file
        sc.mode = mode;
        for (key, value) in parse_overrides(args)? {
            match key.as_str() {
                "horizon_fs" => sc.horizon_fs = parse_num(&key, &value)?,
                "p_hot" => sc.p_hot = parse_num(&key, &value)?,
                "p_cold" => sc.p_cold = parse_num(&key, &value)?,
                "secular" => sc.flags.secular = parse_flag(&key, &value)?,
                "free_evolution" => sc.flags.free_evolution = parse_flag(&key, &value)?,
                "nonsecular_phase" => sc.flags.nonsecular_phase = parse_flag(&key, &value)?,
                "dephasing" => sc.flags.dephasing = parse_flag(&key, &value)?,
                other => {
                    return Err(Error::config(format!(
                        "override '{other}' cannot be applied on top of a config file"
                    )))
                }
            }
        }
        sc.validate()?;
        Ok(sc)
    } else {
        let regime = Regime::parse(&args.regime)?;
        build_scenario(regime, mode, &parse_overrides(args)?)
    }
}

fn parse_num(key: &str, value: &str) -> Result<f64> {
    value
        .parse()
        .map_err(|_| Error::config(format!("{key}: '{value}' is not a number")))
}

fn parse_flag(key: &str, value: &str) -> Result<bool> {
    value
        .parse()
        .map_err(|_| Error::config(format!("{key}: '{value}' is not a bool")))
}

fn run_record(scenario: &Scenario) -> Result<TrajectoryRecord> {
    Ok(extract(&integrate(scenario)?))
}

fn cmd_run(args: &ScenarioArgs, mode: &str, svg: bool) -> Result<()> {
    let mode = Mode::parse(mode)?;
    let scenario = resolve_scenario(args, mode)?;
    let record = run_record(&scenario)?;
    let dir = out_dir(args);
    ensure_dir(&dir)?;
    let base = format!("trajectory_{}_{}", scenario.regime.as_str(), mode.as_str());
    let csv_path = dir.join(format!("{base}.csv"));
    write_csv(&record, &csv_path)?;
    println!("wrote {}", csv_path.display());
    if svg {
        let svg_path = dir.join(format!("{base}.svg"));
        let channels = [
            Channel { name: "p_g", values: &record.populations[0] },
            Channel { name: "p_e1", values: &record.populations[1] },
            Channel { name: "p_e2", values: &record.populations[2] },
            Channel { name: "p_m1", values: &record.populations[3] },
            Channel { name: "p_m2", values: &record.populations[4] },
            Channel { name: "|rho_e1e2|", values: &record.abs_coherence },
        ];
        write_svg_lines(&record.times_fs, &channels, &svg_path)?;
        println!("wrote {}", svg_path.display());
    }
    Ok(())
}

fn cmd_compare(args: &ScenarioArgs) -> Result<()> {
    let nm_scenario = resolve_scenario(args, Mode::NonMarkovian)?;
    let m_scenario = resolve_scenario(args, Mode::Markovian)?;
    let (nm, m) = batch::join(
        || run_record(&nm_scenario),
        || run_record(&m_scenario),
    );
    let (nm, m) = (nm?, m?);
    let report = compare(&nm, &m)?;

    let dir = out_dir(args);
    ensure_dir(&dir)?;
    let regime = nm_scenario.regime.as_str();
    let nm_path = dir.join(format!("trajectory_{regime}_nonmarkovian.csv"));
    let m_path = dir.join(format!("trajectory_{regime}_markovian.csv"));
    let report_path = dir.join(format!("comparison_{regime}.csv"));
    let summary_path = dir.join(format!("summary_{regime}.csv"));
    let svg_path = dir.join(format!("overlay_{regime}.svg"));
    write_csv(&nm, &nm_path)?;
    write_csv(&m, &m_path)?;
    write_report_csv(&report, &report_path)?;
    write_summary_csv(&report, &summary_path)?;
    let channels = [
        Channel { name: "|c| nonmarkovian", values: &report.abs_c_nonmarkovian },
        Channel { name: "|c| markovian", values: &report.abs_c_markovian },
        Channel { name: "p_m1 nonmarkovian", values: &nm.populations[3] },
        Channel { name: "p_m1 markovian", values: &m.populations[3] },
    ];
    write_svg_lines(&report.times_fs, &channels, &svg_path)?;

    for p in [&nm_path, &m_path, &report_path, &summary_path, &svg_path] {
        println!("wrote {}", p.display());
    }
    println!(
        "coherence enhanced (|c|_NM >= |c|_M pointwise): {}",
        report.claim_coherence_enhanced
    );
    println!(
        "slower charge separation (t_half NM {:.1} fs > M {:.1} fs): {}",
        report.t_half_nonmarkovian_fs, report.t_half_markovian_fs, report.claim_slower_buildup
    );
    Ok(())
}

fn cmd_sweep(args: &ScenarioArgs, mode: &str, parameter: &str, grid: &str) -> Result<()> {
    let mode = Mode::parse(mode)?;
    let allowed = ["kappa_scale", "p_hot", "p_cold", "tau2_inv"];
    if !allowed.contains(&parameter) {
        return Err(Error::config(format!(
            "unknown sweep parameter '{parameter}' (expected one of {allowed:?})"
        )));
    }
    let values: Vec<f64> = grid
        .split(',')
        .map(|s| parse_num("grid", s.trim()))
        .collect::<Result<_>>()?;
    if values.len() < 2 {
        return Err(Error::config("sweep grid needs at least two values"));
    }

    let points: Vec<(f64, Scenario)> = values
        .iter()
        .map(|&v| -> Result<(f64, Scenario)> {
            let mut overrides = parse_overrides(args)?;
            overrides.push((parameter.to_string(), format!("{v:.17e}")));
            let regime = Regime::parse(&args.regime)?;
            Ok((v, build_scenario(regime, mode, &overrides)?))
        })
        .collect::<Result<_>>()?;

    let rows = batch::map_collect(&points, |(v, sc)| -> Result<String> {
        let record = run_record(sc)?;
        let t_ss = record
            .steady_state(
                crate::observables::STEADY_WINDOW_FS.min(sc.horizon_fs / 2.0),
                crate::observables::STEADY_EPS,
            )?
            .map(|t| format!("{t:.16e}"))
            .unwrap_or_else(|| "none".into());
        let final_c = record.abs_coherence[record.len() - 1];
        Ok(format!(
            "{parameter},{v:.16e},{final_c:.16e},{t_ss},{:.16e}",
            record.half_rise_m1()
        ))
    });

    let mut csv = String::from("parameter,value,final_abs_c,t_ss_fs,t_half_fs\n");
    for row in rows {
        csv.push_str(&row?);
        csv.push('\n');
    }
    let dir = out_dir(args);
    ensure_dir(&dir)?;
    let path = dir.join(format!(
        "sweep_{parameter}_{}_{}.csv",
        args.regime,
        mode.as_str()
    ));
    crate::observables::write_atomic(&path, csv.as_bytes())?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_rates(args: &ScenarioArgs, mode: &str) -> Result<()> {
    let mode = Mode::parse(mode)?;
    let scenario = resolve_scenario(args, mode)?;
    let names = ["e1g", "e2g", "e1m", "e2m", "m1m2", "m2g"];
    let mut csv = String::from("t_fs");
    for n in names {
        csv.push_str(&format!(",gamma_{n}"));
    }
    csv.push('\n');
    let dt = scenario.solver.sample_interval_fs;
    let steps = (scenario.horizon_fs / dt).floor() as usize;
    for k in 0..=steps {
        let t = k as f64 * dt;
        csv.push_str(&format!("{t:.16e}"));
        for tr in &scenario.system.transitions {
            csv.push_str(&format!(",{:.16e}", tr.rate.value(t)));
        }
        csv.push('\n');
    }
    let dir = out_dir(args);
    ensure_dir(&dir)?;
    let path = dir.join(format!(
        "rates_{}_{}.csv",
        scenario.regime.as_str(),
        mode.as_str()
    ));
    crate::observables::write_atomic(&path, csv.as_bytes())?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_validate(rate_convention: &str) -> Result<()> {
    let convention = RateConvention::parse(rate_convention)?;
    let results = validation::run_suite(convention);
    let mut failures = 0usize;
    for r in &results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        println!("{status}  {}: {}", r.name, r.detail);
        if !r.passed {
            failures += 1;
        }
    }
    if failures > 0 {
        return Err(Error::InvariantBreach {
            t_fs: 0.0,
            what: "validation suite",
            value: failures as f64,
            limit: 0.0,
        });
    }
    println!("all {} checks passed", results.len());
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn override_parsing_is_strict() {
        let args = ScenarioArgs {
            regime: "underdamped".into(),
            config: None,
            horizon: None,
            set: vec!["p_hot 0.5".into()],
            secular: false,
            free_evolution: false,
            no_nonsecular_phase: false,
            no_dephasing: false,
            out_dir: None,
        };
        assert!(parse_overrides(&args).is_err());
    }

    #[test]
    fn flag_args_become_overrides() {
        let args = ScenarioArgs {
            regime: "underdamped".into(),
            config: None,
            horizon: Some(123.0),
            set: vec!["p_cold=0".into()],
            secular: true,
            free_evolution: false,
            no_nonsecular_phase: true,
            no_dephasing: true,
            out_dir: None,
        };
        let ov = parse_overrides(&args).unwrap();
        assert!(ov.contains(&("p_cold".into(), "0".into())));
        assert!(ov.contains(&("secular".into(), "true".into())));
        assert!(ov.contains(&("nonsecular_phase".into(), "false".into())));
        assert!(ov.contains(&("dephasing".into(), "false".into())));
        assert!(ov.contains(&("horizon_fs".into(), "123".into())));
    }
}

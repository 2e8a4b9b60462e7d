//! Command execution. Each command writes its files, prints a short report
//! and returns the failed checks as `CliError::Assertion`.

use cavity_search::experiments::{
    compare_models, delta_for, designed_schedule, fidelity_threshold, run_figure3_with,
    sweep_scaling, ComparisonOptions, Figure3Config, SweepOptions, G_FACTOR,
};
use cavity_search::hamiltonians::SystemParams;
use cavity_search::propagator::{
    propagate_converged, propagate_with, PropagationOptions, StepReport, Trajectory,
    DEFAULT_MAX_STEPS,
};
use cavity_search::pulsedesign::{
    verify_adiabaticity, GaussianFamily, PulseSchedule, AREA_TOLERANCE,
};
use cavity_search::statespace::{marked_state, uniform_superposition_at, Level, NORM_TOLERANCE};
use serde::Serialize;
use serde_json::json;

use crate::config::{CommandName, Companion, Initial, RunConfig};
use crate::output::Writer;
use crate::CliError;

/// Allowed distance of the fitted duration exponent from 1/2.
const SLOPE_TOLERANCE: f64 = 0.03;
/// Bound on the full-versus-collective deviation.
const REDUCTION_TOLERANCE: f64 = 1e-8;

pub fn run(config: &RunConfig) -> Result<(), CliError> {
    let mut writer = Writer::create(config)?;
    let failures = match config.command {
        CommandName::Design => design(config, &mut writer)?,
        CommandName::Simulate => simulate(config, &mut writer)?,
        CommandName::Sweep => sweep(config, &mut writer)?,
        CommandName::Compare => compare(config, &mut writer)?,
        CommandName::Figure3 => figure3(config, &mut writer)?,
    };
    for path in writer.written() {
        println!("wrote {}", path.display());
    }
    if failures.is_empty() {
        println!("all checks passed");
        Ok(())
    } else {
        Err(CliError::Assertion(failures))
    }
}

fn family(config: &RunConfig) -> GaussianFamily {
    GaussianFamily {
        cutoff: config.cutoff_c,
    }
}

fn schedule(config: &RunConfig) -> Result<PulseSchedule, CliError> {
    Ok(designed_schedule(
        config.n_atoms(),
        config.epsilon,
        &family(config),
        config.samples,
    )?)
}

fn boundary_failures(schedule: &PulseSchedule) -> Vec<String> {
    let b = schedule.boundary_report();
    let mut out = Vec::new();
    if b.initial_ratio != 1.0 {
        out.push(format!("initial ratio {} is not 1", b.initial_ratio));
    }
    if b.final_omega_prime != 0.0 || !(b.final_omega > 0.0) {
        out.push(format!(
            "final pulses ({}, {}) do not satisfy omega > 0, omega_prime = 0",
            b.final_omega, b.final_omega_prime
        ));
    }
    if b.duration_residual > AREA_TOLERANCE {
        out.push(format!(
            "duration condition misses by {:e} > {:e}",
            b.duration_residual, AREA_TOLERANCE
        ));
    }
    out
}

fn design(config: &RunConfig, writer: &mut Writer) -> Result<Vec<String>, CliError> {
    let schedule = schedule(config)?;
    let boundary = schedule.boundary_report();
    let adiabaticity = verify_adiabaticity(&schedule)?;
    writer.table("schedule", &schedule.to_text(&writer.header()))?;

    #[derive(Serialize)]
    struct Summary<'a> {
        n_atoms: usize,
        epsilon: f64,
        duration: f64,
        total_area: f64,
        mean_amplitude: f64,
        omega_peak: f64,
        omega_prime_peak: f64,
        omega_prime_area: f64,
        quadrature_error: Option<f64>,
        shape: serde_json::Map<String, serde_json::Value>,
        boundary: &'a cavity_search::pulsedesign::BoundaryReport,
        adiabaticity: &'a cavity_search::pulsedesign::AdiabaticityReport,
    }
    let shape = schedule
        .shape()
        .iter()
        .map(|(k, v)| (k.to_string(), json!(v)))
        .collect();
    writer.summary(&Summary {
        n_atoms: schedule.n_atoms(),
        epsilon: schedule.epsilon(),
        duration: schedule.duration(),
        total_area: schedule.total_area(),
        mean_amplitude: schedule.mean_amplitude(),
        omega_peak: schedule.omega_peak(),
        omega_prime_peak: schedule.omega_prime_peak(),
        omega_prime_area: schedule.omega_prime_area(),
        quadrature_error: schedule.quadrature_error(),
        shape,
        boundary: &boundary,
        adiabaticity: &adiabaticity,
    })?;
    println!(
        "designed N={} eps={}: duration {:.6}, peak {:.6}, max |theta_dot/Lambda - eps| = {:.3e}",
        schedule.n_atoms(),
        schedule.epsilon(),
        schedule.duration(),
        schedule.omega_peak(),
        adiabaticity.max_deviation
    );

    let mut failures = boundary_failures(&schedule);
    let limit = 0.01 * config.epsilon;
    if !(adiabaticity.max_deviation <= limit) {
        failures.push(format!(
            "adiabaticity deviation {:e} at t = {} exceeds {:e}",
            adiabaticity.max_deviation, adiabaticity.at_time, limit
        ));
    }
    Ok(failures)
}

fn simulate(config: &RunConfig, writer: &mut Writer) -> Result<Vec<String>, CliError> {
    let n = config.n_atoms();
    let level: Level = config.level.into();
    let designed = schedule(config)?;
    let schedule = match config.omega_prime {
        Companion::Designed => designed,
        Companion::Off => PulseSchedule::from_samples(
            n,
            config.epsilon,
            designed.grid().to_vec(),
            designed.omega().to_vec(),
            vec![0.0; designed.grid().len()],
        )?,
    };
    let g = config
        .g
        .unwrap_or(G_FACTOR * schedule.omega_peak() / n as f64);
    let delta = match config.delta_duration {
        Some(dt) => delta_for(dt, &schedule),
        None => config.delta,
    };
    let params = SystemParams::new(n, g, delta, config.rwa)?;
    let psi0 = match config.initial {
        Initial::Uniform => uniform_superposition_at(level, n)?,
        Initial::Marked => marked_state(level, n)?,
    };
    let (trajectory, report): (Trajectory, Option<StepReport>) = match config.steps {
        Some(steps) => {
            let options = PropagationOptions::new(steps).with_integrator(config.integrator.into());
            (
                propagate_with(level, &params, &schedule, &psi0, options)?,
                None,
            )
        }
        None => {
            let (t, r) = propagate_converged(
                level,
                &params,
                &schedule,
                &psi0,
                config.integrator.into(),
                DEFAULT_MAX_STEPS,
            )?;
            (t, Some(r))
        }
    };
    let header = writer.header();
    writer.table("schedule", &schedule.to_text(&header))?;
    writer.table("trajectory", &trajectory.to_text(&header))?;

    let max_sum_error = trajectory
        .populations
        .iter()
        .map(|p| (p.iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);

    #[derive(Serialize)]
    struct Summary {
        level: String,
        n_atoms: usize,
        epsilon: f64,
        coupling_g: f64,
        delta: f64,
        rwa: bool,
        duration: f64,
        steps: usize,
        converged: Option<bool>,
        last_change: Option<f64>,
        initial_marked: f64,
        final_marked: f64,
        final_unmarked: f64,
        max_excited: Option<f64>,
        norm_drift: f64,
        max_population_sum_error: f64,
    }
    writer.summary(&Summary {
        level: level.to_string(),
        n_atoms: n,
        epsilon: config.epsilon,
        coupling_g: g,
        delta,
        rwa: config.rwa,
        duration: schedule.duration(),
        steps: trajectory.steps,
        converged: report.map(|r| r.converged),
        last_change: report.map(|r| r.last_change),
        initial_marked: trajectory.marked[0],
        final_marked: trajectory.final_marked(),
        final_unmarked: trajectory.final_unmarked(),
        max_excited: trajectory.max_excited,
        norm_drift: trajectory.norm_drift,
        max_population_sum_error: max_sum_error,
    })?;
    println!(
        "{} N={} steps={}: final P_N = {:.8}, P_u = {:.3e}",
        level,
        n,
        trajectory.steps,
        trajectory.final_marked(),
        trajectory.final_unmarked()
    );

    let mut failures = Vec::new();
    if trajectory.norm_drift > NORM_TOLERANCE {
        failures.push(format!(
            "norm drift {:e} exceeds {:e}",
            trajectory.norm_drift, NORM_TOLERANCE
        ));
    }
    // the sum is the squared norm
    if max_sum_error > 2.0 * NORM_TOLERANCE {
        failures.push(format!(
            "populations sum to 1 only within {max_sum_error:e}"
        ));
    }
    if let Some(r) = report {
        if !r.converged {
            failures.push(format!(
                "step doubling stopped at {} steps with change {:e}",
                r.steps, r.last_change
            ));
        }
    }
    match (config.initial, config.omega_prime) {
        (Initial::Uniform, Companion::Designed) => {
            let threshold = fidelity_threshold(config.epsilon);
            if trajectory.final_marked() < threshold {
                failures.push(format!(
                    "final P_N = {} < 1 - eps^2 = {}",
                    trajectory.final_marked(),
                    threshold
                ));
            }
        }
        (Initial::Marked, Companion::Off) => {
            let drift = trajectory
                .marked
                .iter()
                .map(|p| (p - 1.0).abs())
                .fold(0.0, f64::max);
            if drift > NORM_TOLERANCE {
                failures.push(format!(
                    "marked state is not stationary without omega_prime: drift {drift:e}"
                ));
            }
        }
        _ => {}
    }
    Ok(failures)
}

fn sweep(config: &RunConfig, writer: &mut Writer) -> Result<Vec<String>, CliError> {
    let options = SweepOptions {
        samples: config.samples,
        steps: config.steps,
    };
    let report = sweep_scaling(&config.n, config.epsilon, &family(config), options)?;
    let structured = serde_json::to_value(&report).expect("report serializes");
    writer.table_both("scaling", &report.to_text(&writer.header()), structured)?;

    let mut failures = Vec::new();
    for r in &report.records {
        println!(
            "N={:<5} T={:<12.6} fidelity={:.8}",
            r.n_atoms, r.duration, r.fidelity
        );
        if !r.passed {
            failures.push(format!(
                "N={}: fidelity {} < 1 - eps^2 = {}",
                r.n_atoms,
                r.fidelity,
                fidelity_threshold(r.epsilon)
            ));
        }
        if (r.duration_ratio - 1.0).abs() > 1e-6 {
            failures.push(format!(
                "N={}: eps*A/sqrt(N-1) = {} differs from 1",
                r.n_atoms, r.duration_ratio
            ));
        }
    }
    if let Some(fit) = &report.fit {
        println!("fitted exponent {:.6}", fit.slope);
        if (fit.slope - 0.5).abs() > SLOPE_TOLERANCE {
            failures.push(format!(
                "fitted exponent {} is not within {} of 1/2",
                fit.slope, SLOPE_TOLERANCE
            ));
        }
    }
    Ok(failures)
}

fn compare(config: &RunConfig, writer: &mut Writer) -> Result<Vec<String>, CliError> {
    let delta = match config.delta_duration {
        Some(dt) => delta_for(dt, &schedule(config)?),
        None => config.delta,
    };
    let options = ComparisonOptions {
        samples: config.samples,
        include_full: config.include_full,
        ..ComparisonOptions::default()
    };
    let report = compare_models(
        config.n_atoms(),
        config.epsilon,
        config.g,
        delta,
        &family(config),
        options,
    )?;
    writer.summary(&report)?;
    print!("{}", report.to_text());

    let mut failures = Vec::new();
    if let Some(d) = &report.full_vs_collective {
        if d.max_population_deviation > REDUCTION_TOLERANCE {
            failures.push(format!(
                "full and collective models differ by {:e} > {:e}",
                d.max_population_deviation, REDUCTION_TOLERANCE
            ));
        }
    }
    Ok(failures)
}

fn figure3(config: &RunConfig, writer: &mut Writer) -> Result<Vec<String>, CliError> {
    let run = run_figure3_with(Figure3Config {
        n_atoms: config.n_atoms(),
        epsilon: config.epsilon,
        cutoff: config.cutoff_c,
        samples: config.samples,
        steps: config.steps,
    })?;
    let header = writer.header();
    writer.table("schedule", &run.schedule.to_text(&header))?;
    writer.table("trajectory", &run.trajectory.to_text(&header))?;
    writer.summary(&run.summary)?;
    print!("{}", run.summary.to_text());
    Ok(run.summary.failures())
}

//! Canned, reproducible studies built on the designer and the propagator.
//!
//! Every study fixes the mean amplitude `Ω̄ = 1`, so durations are in units
//! of `1/Ω̄`. Nothing here is random; the same inputs give bit-identical
//! results.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonians::SystemParams;
use crate::propagator::{
    minimum_steps, propagate_converged, propagate_with, spectral_radius, Integrator,
    PropagationOptions, StepReport, Trajectory, DEFAULT_MAX_STEPS,
};
use crate::pulsedesign::{
    design_schedule, verify_adiabaticity, AdiabaticityReport, GaussianFamily, PulseFamily,
    PulseSchedule, DEFAULT_CUTOFF, DEFAULT_EPSILON,
};
use crate::statespace::{full_to_collective, uniform_superposition_at, CollectiveTransform, Level};
use crate::textio;

pub const FIGURE3_ATOMS: usize = 8;
pub const DEFAULT_SAMPLES: usize = 4000;
pub const MEAN_AMPLITUDE: f64 = 1.0;
/// `G = G_FACTOR · Ω_peak / N`, i.e. `Ω_peak/(N G) = 10⁻²`.
pub const G_FACTOR: f64 = 100.0;
pub const SCALING_ATOMS: [usize; 6] = [2, 8, 32, 128, 512, 2048];

/// Designed schedule with mean amplitude `Ω̄ = 1`.
pub fn designed_schedule(
    n_atoms: usize,
    epsilon: f64,
    family: &dyn PulseFamily,
    samples: usize,
) -> Result<PulseSchedule> {
    if n_atoms < 2 {
        return Err(Error::param(
            "n_atoms",
            format!("need N >= 2, got {n_atoms}"),
        ));
    }
    if !(epsilon > 0.0) {
        return Err(Error::param(
            "epsilon",
            format!("must be > 0, got {epsilon}"),
        ));
    }
    let duration = ((n_atoms - 1) as f64).sqrt() / (epsilon * MEAN_AMPLITUDE);
    let base = family.for_duration(duration)?;
    design_schedule(n_atoms, epsilon, base.as_ref(), samples)
}

/// `1 - ε²`.
pub fn fidelity_threshold(epsilon: f64) -> f64 {
    1.0 - epsilon * epsilon
}

/// Parameters of the reference dynamics run; defaults are `N = 8`,
/// `ε = 0.05`, `c = 4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Figure3Config {
    pub n_atoms: usize,
    pub epsilon: f64,
    pub cutoff: f64,
    pub samples: usize,
    /// Fixed step count; `None` uses the converging step policy.
    pub steps: Option<usize>,
}

impl Default for Figure3Config {
    fn default() -> Self {
        Self {
            n_atoms: FIGURE3_ATOMS,
            epsilon: DEFAULT_EPSILON,
            cutoff: DEFAULT_CUTOFF,
            samples: DEFAULT_SAMPLES,
            steps: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Figure3Summary {
    pub n_atoms: usize,
    pub epsilon: f64,
    pub omega_peak: f64,
    pub width: f64,
    pub duration: f64,
    pub initial_marked: f64,
    pub initial_unmarked: f64,
    pub final_marked: f64,
    pub final_unmarked: f64,
    pub threshold: f64,
    /// Largest decrease of `P_N` between consecutive records.
    pub max_marked_drop: f64,
    pub min_dark_overlap: f64,
    pub initial_ratio: f64,
    pub final_omega: f64,
    pub final_omega_prime: f64,
    pub adiabaticity: AdiabaticityReport,
    pub steps: usize,
    pub norm_drift: f64,
}

impl Figure3Summary {
    /// Names of the checks that fail; empty on success.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        let n = self.n_atoms as f64;
        if (self.initial_marked - 1.0 / n).abs() > 1e-12
            || (self.initial_unmarked - (1.0 - 1.0 / n)).abs() > 1e-12
        {
            out.push(format!(
                "initial populations ({}, {}) differ from (1/N, 1-1/N)",
                self.initial_marked, self.initial_unmarked
            ));
        }
        if self.final_marked < self.threshold {
            out.push(format!(
                "final P_N = {} < 1 - eps^2 = {}",
                self.final_marked, self.threshold
            ));
        }
        if self.final_unmarked > 1.0 - self.threshold {
            out.push(format!(
                "final P_u = {} > eps^2 = {}",
                self.final_unmarked,
                1.0 - self.threshold
            ));
        }
        if self.initial_ratio != 1.0 || self.final_omega_prime != 0.0 || !(self.final_omega > 0.0) {
            out.push("pulse boundary conditions violated".into());
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let json = serde_json::to_value(self).expect("summary serializes");
        if let serde_json::Value::Object(map) = json {
            for (k, v) in map {
                out.push_str(&format!("{k}: {v}\n"));
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Figure3Run {
    pub config: Figure3Config,
    pub schedule: PulseSchedule,
    pub trajectory: Trajectory,
    pub step_report: Option<StepReport>,
    pub summary: Figure3Summary,
}

pub fn run_figure3() -> Result<Figure3Run> {
    run_figure3_with(Figure3Config::default())
}

/// The effective-model dynamics from `|w⟩` under the designed Gaussian pair.
pub fn run_figure3_with(config: Figure3Config) -> Result<Figure3Run> {
    let family = GaussianFamily {
        cutoff: config.cutoff,
    };
    let schedule = designed_schedule(config.n_atoms, config.epsilon, &family, config.samples)?;
    let params = SystemParams::resonant(config.n_atoms, 1.0)?;
    let psi0 = uniform_superposition_at(Level::Effective3, config.n_atoms)?;
    let (trajectory, step_report) = match config.steps {
        Some(steps) => (
            propagate_with(
                Level::Effective3,
                &params,
                &schedule,
                &psi0,
                PropagationOptions::new(steps),
            )?,
            None,
        ),
        None => {
            let (t, r) = propagate_converged(
                Level::Effective3,
                &params,
                &schedule,
                &psi0,
                Integrator::ExponentialMidpoint,
                DEFAULT_MAX_STEPS,
            )?;
            (t, Some(r))
        }
    };
    let boundary = schedule.boundary_report();
    let shape = |key: &str| {
        schedule
            .shape()
            .iter()
            .find(|(k, _)| *k == key)
            .map_or(f64::NAN, |(_, v)| *v)
    };
    let max_marked_drop = trajectory
        .marked
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(0.0, f64::max);
    let min_dark_overlap = trajectory
        .adiabatic_populations
        .as_ref()
        .map_or(f64::NAN, |ad| ad.iter().map(|q| q[1]).fold(1.0, f64::min));
    let summary = Figure3Summary {
        n_atoms: config.n_atoms,
        epsilon: config.epsilon,
        omega_peak: shape("omega_peak"),
        width: shape("width_T"),
        duration: schedule.duration(),
        initial_marked: trajectory.marked[0],
        initial_unmarked: trajectory.unmarked[0],
        final_marked: trajectory.final_marked(),
        final_unmarked: trajectory.final_unmarked(),
        threshold: fidelity_threshold(config.epsilon),
        max_marked_drop,
        min_dark_overlap,
        initial_ratio: boundary.initial_ratio,
        final_omega: boundary.final_omega,
        final_omega_prime: boundary.final_omega_prime,
        adiabaticity: verify_adiabaticity(&schedule)?,
        steps: trajectory.steps,
        norm_drift: trajectory.norm_drift,
    };
    Ok(Figure3Run {
        config,
        schedule,
        trajectory,
        step_report,
        summary,
    })
}

/// One point of the duration-scaling sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingRecord {
    pub n_atoms: usize,
    pub epsilon: f64,
    /// `𝒯`.
    pub duration: f64,
    /// `Ω̄`.
    pub mean_amplitude: f64,
    /// `Ω̄𝒯`.
    pub area: f64,
    /// `ε Ω̄𝒯 / √(N-1)`; 1 by construction.
    pub duration_ratio: f64,
    pub fidelity: f64,
    /// `ε ∫Ω' dt`.
    pub companion_area: f64,
    /// `(√N - 1)/√(N-1)`.
    pub companion_area_expected: f64,
    pub steps: usize,
    /// `fidelity >= 1 - ε²`.
    pub passed: bool,
}

/// Least-squares line `log 𝒯 = slope · log(N-1) + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub residual: f64,
}

pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<LogLogFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least two points of equal-length data".into(),
        ));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidArgument(
            "log-log fit needs positive data".into(),
        ));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument(
            "log-log fit needs at least two distinct abscissae".into(),
        ));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    Ok(LogLogFit {
        slope,
        intercept,
        residual: (ss / n).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub epsilon: f64,
    pub family: String,
    pub records: Vec<ScalingRecord>,
    /// `log 𝒯` against `log(N-1)`; `None` when fewer than two `N > 1`
    /// distinct points exist.
    pub fit: Option<LogLogFit>,
}

impl ScalingReport {
    pub fn all_passed(&self) -> bool {
        self.records.iter().all(|r| r.passed)
    }

    pub fn to_text(&self, extra_header: &[(&str, String)]) -> String {
        let mut fields: Vec<(&str, String)> = extra_header.to_vec();
        fields.push(("epsilon", textio::num(self.epsilon)));
        fields.push(("pulse_family", self.family.clone()));
        fields.push(("mean_amplitude", textio::num(MEAN_AMPLITUDE)));
        if let Some(fit) = &self.fit {
            fields.push(("fit_slope", textio::num(fit.slope)));
            fields.push(("fit_intercept", textio::num(fit.intercept)));
            fields.push(("fit_residual", textio::num(fit.residual)));
        }
        let mut out = textio::header_block(
            &fields,
            &[
                "N",
                "duration",
                "mean_amplitude_duration",
                "duration_ratio",
                "fidelity",
                "companion_area",
                "passed",
            ],
        );
        for r in &self.records {
            out.push_str(&format!(
                "{} {} {} {} {} {} {}\n",
                r.n_atoms,
                textio::num(r.duration),
                textio::num(r.area),
                textio::num(r.duration_ratio),
                textio::num(r.fidelity),
                textio::num(r.companion_area),
                u8::from(r.passed)
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub samples: usize,
    /// Fixed step count; `None` uses the converging step policy.
    pub steps: Option<usize>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SAMPLES,
            steps: None,
        }
    }
}

/// Final `P_N` of the effective model started in `|w⟩`.
fn effective_fidelity(schedule: &PulseSchedule, steps: Option<usize>) -> Result<(f64, usize)> {
    let n = schedule.n_atoms();
    let params = SystemParams::resonant(n, 1.0)?;
    let psi0 = uniform_superposition_at(Level::Effective3, n)?;
    let traj = match steps {
        Some(s) => propagate_with(
            Level::Effective3,
            &params,
            schedule,
            &psi0,
            PropagationOptions::new(s).with_record_every(s),
        )?,
        None => {
            propagate_converged(
                Level::Effective3,
                &params,
                schedule,
                &psi0,
                Integrator::ExponentialMidpoint,
                DEFAULT_MAX_STEPS,
            )?
            .0
        }
    };
    Ok((traj.final_marked(), traj.steps))
}

pub fn scaling_record(
    n_atoms: usize,
    epsilon: f64,
    family: &dyn PulseFamily,
    options: SweepOptions,
) -> Result<ScalingRecord> {
    let schedule = designed_schedule(n_atoms, epsilon, family, options.samples)?;
    let (fidelity, steps) = effective_fidelity(&schedule, options.steps)?;
    let s = ((n_atoms - 1) as f64).sqrt();
    let area = schedule.mean_amplitude() * schedule.duration();
    Ok(ScalingRecord {
        n_atoms,
        epsilon,
        duration: schedule.duration(),
        mean_amplitude: schedule.mean_amplitude(),
        area,
        duration_ratio: epsilon * area / s,
        fidelity,
        companion_area: epsilon * schedule.omega_prime_area(),
        companion_area_expected: ((n_atoms as f64).sqrt() - 1.0) / s,
        steps,
        passed: fidelity >= fidelity_threshold(epsilon),
    })
}

/// Runs every `N` concurrently; records come back sorted by `N`.
pub fn sweep_scaling(
    n_list: &[usize],
    epsilon: f64,
    family: &dyn PulseFamily,
    options: SweepOptions,
) -> Result<ScalingReport> {
    if n_list.is_empty() {
        return Err(Error::InvalidArgument(
            "the sweep needs at least one N".into(),
        ));
    }
    let mut ns = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let records = ns
        .par_iter()
        .map(|&n| scaling_record(n, epsilon, family, options))
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = records.iter().map(|r| (r.n_atoms - 1) as f64).collect();
    let ys: Vec<f64> = records.iter().map(|r| r.duration).collect();
    let fit = if records.len() >= 2 {
        Some(fit_loglog(&xs, &ys)?)
    } else {
        None
    };
    Ok(ScalingReport {
        epsilon,
        family: family.name().to_string(),
        records,
        fit,
    })
}

/// Final fidelity for each `ε` at fixed `N`, in input order.
pub fn epsilon_scan(
    n_atoms: usize,
    epsilons: &[f64],
    family: &dyn PulseFamily,
    options: SweepOptions,
) -> Result<Vec<(f64, f64)>> {
    epsilons
        .par_iter()
        .map(|&e| Ok((e, scaling_record(n_atoms, e, family, options)?.fidelity)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonOptions {
    pub samples: usize,
    /// Steps per `1/Λ_max` period; must be at least 10.
    pub steps_per_period: f64,
    /// Also propagate the `2N+1`-dimensional model.
    pub include_full: bool,
    /// Also propagate the effective model.
    pub include_effective: bool,
}

impl Default for ComparisonOptions {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SAMPLES,
            steps_per_period: 40.0,
            include_full: true,
            include_effective: true,
        }
    }
}

/// Max-over-time, max-over-label population difference of one pair of runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Deviation {
    pub max_population_deviation: f64,
    pub final_fidelity_difference: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub n_atoms: usize,
    pub epsilon: f64,
    pub coupling_g: f64,
    pub delta: f64,
    pub omega_peak: f64,
    pub duration: f64,
    /// `Ω_peak/(N G)`.
    pub elimination_parameter: f64,
    /// `δ𝒯`.
    pub delta_duration: f64,
    pub collective_fidelity: f64,
    /// Peak population outside `{GPrimeU, GPrimeN}` in the resonant
    /// 5-level run.
    pub collective_max_excited: f64,
    /// (a) effective model against the resonant 5-level model.
    pub effective_vs_collective: Option<Deviation>,
    /// (b) resonant against counter-rotating 5-level model.
    pub rwa_vs_counter_rotating: Option<Deviation>,
    /// (c) full against 5-level model.
    pub full_vs_collective: Option<Deviation>,
}

impl ComparisonReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let json = serde_json::to_value(self).expect("report serializes");
        if let serde_json::Value::Object(map) = json {
            for (k, v) in map {
                out.push_str(&format!("{k}: {v}\n"));
            }
        }
        out
    }
}

fn deviation(a: &[Vec<f64>], b: &[Vec<f64>], fa: f64, fb: f64, steps: usize) -> Deviation {
    let max = a
        .iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max);
    Deviation {
        max_population_deviation: max,
        final_fidelity_difference: (fa - fb).abs(),
        steps,
    }
}

/// `COLLECTIVE5` populations of every record of a `FULL` run.
pub fn collective_populations_of_full(traj: &Trajectory) -> Result<Vec<Vec<f64>>> {
    if traj.level != Level::Full {
        return Err(Error::InvalidArgument(format!(
            "expected a FULL trajectory, got {}",
            traj.level
        )));
    }
    let transform = CollectiveTransform::standard(traj.n_atoms)?;
    traj.states
        .iter()
        .map(|s| {
            let d = full_to_collective(s, &transform)?;
            Ok(d.amplitudes.iter().map(|z| z.norm_sqr()).collect())
        })
        .collect()
}

/// `(P_N, γ0, P_u)` of each record of a `COLLECTIVE5` run, in `EFFECTIVE3`
/// order. `γ0 = (-|e_u⟩ + √(N-1) |e_N⟩)/√N` is the cavity dark state.
fn effective_view(traj: &Trajectory) -> Vec<Vec<f64>> {
    let n = traj.n_atoms as f64;
    traj.states
        .iter()
        .map(|s| {
            let a = s.amplitudes();
            let gamma0 = (-a[3] + a[4] * (n - 1.0).sqrt()) / n.sqrt();
            vec![a[1].norm_sqr(), gamma0.norm_sqr(), a[0].norm_sqr()]
        })
        .collect()
}

/// `δ` giving a requested `δ𝒯` for a schedule.
pub fn delta_for(delta_duration: f64, schedule: &PulseSchedule) -> f64 {
    delta_duration / schedule.duration()
}

/// Runs the model hierarchy on one designed schedule.
///
/// `coupling_g = None` picks `G = 100 Ω_peak / N`. Case (b) is skipped when
/// `delta` is 0. The resonant 5-level run fixes the step count for every
/// run, so all trajectories share their record times.
pub fn compare_models(
    n_atoms: usize,
    epsilon: f64,
    coupling_g: Option<f64>,
    delta: f64,
    family: &dyn PulseFamily,
    options: ComparisonOptions,
) -> Result<ComparisonReport> {
    if options.steps_per_period < 10.0 {
        return Err(Error::param("steps_per_period", "must be at least 10"));
    }
    let schedule = designed_schedule(n_atoms, epsilon, family, options.samples)?;
    let omega_peak = schedule.omega_peak();
    let g = coupling_g.unwrap_or(G_FACTOR * omega_peak / n_atoms as f64);
    let rwa = SystemParams::new(n_atoms, g, delta, true)?;
    let cr = if delta > 0.0 {
        Some(SystemParams::new(n_atoms, g, delta, false)?)
    } else {
        None
    };

    let mut radius = spectral_radius(Level::Collective5, &rwa, &schedule)?;
    if let Some(p) = &cr {
        radius = radius.max(spectral_radius(Level::Collective5, p, &schedule)?);
    }
    let steps = ((options.steps_per_period * radius * schedule.duration()).ceil() as usize)
        .max(minimum_steps(Level::Collective5, &rwa, &schedule)?);
    let stride = steps.div_ceil(4000).max(1);
    let opts = PropagationOptions::new(steps).with_record_every(stride);

    let psi5 = uniform_superposition_at(Level::Collective5, n_atoms)?;
    let base = propagate_with(Level::Collective5, &rwa, &schedule, &psi5, opts)?;

    let effective_vs_collective = if options.include_effective {
        let psi3 = uniform_superposition_at(Level::Effective3, n_atoms)?;
        let eff = propagate_with(Level::Effective3, &rwa, &schedule, &psi3, opts)?;
        Some(deviation(
            &eff.populations,
            &effective_view(&base),
            eff.final_marked(),
            base.final_marked(),
            steps,
        ))
    } else {
        None
    };

    let rwa_vs_counter_rotating = match &cr {
        Some(p) => {
            let other = propagate_with(Level::Collective5, p, &schedule, &psi5, opts)?;
            Some(deviation(
                &base.populations,
                &other.populations,
                base.final_marked(),
                other.final_marked(),
                steps,
            ))
        }
        None => None,
    };

    let full_vs_collective = if options.include_full {
        let psi = uniform_superposition_at(Level::Full, n_atoms)?;
        let full = propagate_with(Level::Full, &rwa, &schedule, &psi, opts)?;
        Some(deviation(
            &collective_populations_of_full(&full)?,
            &base.populations,
            full.final_marked(),
            base.final_marked(),
            steps,
        ))
    } else {
        None
    };

    Ok(ComparisonReport {
        n_atoms,
        epsilon,
        coupling_g: g,
        delta,
        omega_peak,
        duration: schedule.duration(),
        elimination_parameter: omega_peak / (n_atoms as f64 * g),
        delta_duration: delta * schedule.duration(),
        collective_fidelity: base.final_marked(),
        collective_max_excited: base.max_excited.unwrap_or(f64::NAN),
        effective_vs_collective,
        rwa_vs_counter_rotating,
        full_vs_collective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure3_run_meets_its_targets() {
        let run = run_figure3().unwrap();
        let s = &run.summary;
        assert!(s.failures().is_empty(), "{:?}", s.failures());
        assert!((s.initial_marked - 0.125).abs() < 1e-15);
        assert!((s.omega_peak - 4.51).abs() < 0.01, "{}", s.omega_peak);
        assert!(run.step_report.unwrap().converged);
    }

    #[test]
    fn fit_recovers_a_power_law() {
        let xs = [1.0, 7.0, 31.0, 127.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(0.5)).collect();
        let fit = fit_loglog(&xs, &ys).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
        assert!(fit_loglog(&[1.0, 1.0], &[2.0, 3.0]).is_err());
    }

    #[test]
    fn duration_law_examples() {
        let opts = SweepOptions {
            samples: 400,
            steps: Some(20_000),
        };
        let two = scaling_record(2, 0.05, &GaussianFamily::default(), opts).unwrap();
        assert!((two.area - 20.0).abs() < 1e-9);
        let many = scaling_record(101, 0.05, &GaussianFamily::default(), opts).unwrap();
        assert!((many.area - 200.0).abs() < 1e-9);
        assert!((many.duration_ratio - 1.0).abs() < 1e-6);
    }

    #[test]
    fn sweep_is_sorted_and_deterministic() {
        let opts = SweepOptions {
            samples: 400,
            steps: Some(20_000),
        };
        let fam = GaussianFamily::default();
        let a = sweep_scaling(&[32, 2, 8], 0.1, &fam, opts).unwrap();
        let b = sweep_scaling(&[8, 32, 2], 0.1, &fam, opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            a.records.iter().map(|r| r.n_atoms).collect::<Vec<_>>(),
            vec![2, 8, 32]
        );
        assert!((a.fit.unwrap().slope - 0.5).abs() < 1e-9);
        let json: serde_json::Value = serde_json::from_str(&a.to_json()).unwrap();
        assert_eq!(json["records"].as_array().unwrap().len(), 3);
        assert_eq!(textio::data_rows(&a.to_text(&[])).count(), 3);
    }

    #[test]
    fn small_comparison_is_consistent() {
        let fam = GaussianFamily::default();
        let opts = ComparisonOptions {
            samples: 400,
            steps_per_period: 10.0,
            include_full: true,
            include_effective: true,
        };
        let r = compare_models(3, 0.2, Some(2.0), 0.0, &fam, opts).unwrap();
        assert!(r.rwa_vs_counter_rotating.is_none());
        assert!(r.full_vs_collective.unwrap().max_population_deviation < 1e-10);
        assert!(r.effective_vs_collective.is_some());
        assert!(compare_models(
            3,
            0.2,
            Some(2.0),
            0.0,
            &fam,
            ComparisonOptions {
                steps_per_period: 5.0,
                ..opts
            }
        )
        .is_err());
    }
}

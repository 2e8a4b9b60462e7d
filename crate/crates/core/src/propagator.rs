//! Time-dependent Schrödinger propagation at every reduction level.
//!
//! The default integrator is the exponential midpoint rule: each step
//! applies `exp(-i H(t + h/2) h)` exactly, so the norm is preserved to
//! rounding. A classical fourth-order Runge–Kutta path is kept as an
//! independent cross-check.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::{
    build_heff_adiabatic, frame_at, full_matrix, h1_matrix, heff_matrix, AdiabaticFrame,
    SystemParams,
};
use crate::linalg::{apply_expm_hermitian, eigvalsh, I};
use crate::pulsedesign::PulseSchedule;
use crate::statespace::{
    BasisLabel, CollectiveTag, EffectiveTag, Level, StateVector, NORM_TOLERANCE,
};
use crate::textio;

/// Largest norm drift tolerated on the Runge–Kutta path.
pub const RK4_DRIFT_LIMIT: f64 = 1e-9;
/// Fewest steps accepted per characteristic period `1/Λ_max`.
pub const MIN_STEPS_PER_PERIOD: f64 = 10.0;
/// Starting resolution of the automatic step policy.
pub const DEFAULT_STEPS_PER_PERIOD: f64 = 200.0;
pub const CONVERGENCE_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_STEPS: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    #[default]
    ExponentialMidpoint,
    RungeKutta4,
}

impl fmt::Display for Integrator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Integrator::ExponentialMidpoint => "exponential-midpoint",
            Integrator::RungeKutta4 => "runge-kutta-4",
        })
    }
}

impl FromStr for Integrator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exponential-midpoint" | "midpoint" => Ok(Integrator::ExponentialMidpoint),
            "runge-kutta-4" | "rk4" => Ok(Integrator::RungeKutta4),
            other => Err(Error::InvalidArgument(format!(
                "unknown integrator `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationOptions {
    pub steps: usize,
    pub integrator: Integrator,
    /// Record every `record_every`-th step; the final step is always kept.
    /// `0` picks a stride giving about 4000 records.
    pub record_every: usize,
}

impl PropagationOptions {
    pub fn new(steps: usize) -> Self {
        Self {
            steps,
            integrator: Integrator::default(),
            record_every: 0,
        }
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = integrator;
        self
    }

    pub fn with_record_every(mut self, stride: usize) -> Self {
        self.record_every = stride;
        self
    }
}

/// Sampled solution of one propagation.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub level: Level,
    pub n_atoms: usize,
    pub integrator: Integrator,
    pub steps: usize,
    /// Recorded times.
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    /// `populations[k][i]`: label `i` at record `k`.
    pub populations: Vec<Vec<f64>>,
    /// Marked-state population `|⟨g'_N,0|φ⟩|²` per record.
    pub marked: Vec<f64>,
    /// Collective unmarked population `|⟨g'_u,0|φ⟩|²` per record.
    pub unmarked: Vec<f64>,
    /// `(Ω, Ω')` at each record.
    pub pulses: Vec<(f64, f64)>,
    /// `(|⟨+|φ⟩|², |⟨0|φ⟩|², |⟨-|φ⟩|²)` per record, `EFFECTIVE3` only and
    /// only if the mixing angle is defined at every record.
    pub adiabatic_populations: Option<Vec<[f64; 3]>>,
    /// Per-label maximum over every step, not only records.
    pub peak_populations: Vec<f64>,
    /// Maximum over every step of the population outside the ground
    /// states (excited atoms, photon, `γ0`); `None` for `ADIABATIC3`.
    pub max_excited: Option<f64>,
    /// `max |‖φ‖ - 1|` over every step.
    pub norm_drift: f64,
}

impl Trajectory {
    pub fn labels(&self) -> Vec<BasisLabel> {
        self.level.labels(self.n_atoms)
    }

    /// Population series of one label.
    pub fn series(&self, label: BasisLabel) -> Result<Vec<f64>> {
        if label.level() != self.level {
            return Err(Error::InvalidArgument(format!(
                "label {label} is not on level {}",
                self.level
            )));
        }
        let i = label.index(self.n_atoms)?;
        Ok(self.populations.iter().map(|p| p[i]).collect())
    }

    pub fn final_state(&self) -> &StateVector {
        self.states
            .last()
            .expect("a trajectory has at least one record")
    }

    pub fn final_marked(&self) -> f64 {
        *self
            .marked
            .last()
            .expect("a trajectory has at least one record")
    }

    pub fn final_unmarked(&self) -> f64 {
        *self
            .unmarked
            .last()
            .expect("a trajectory has at least one record")
    }

    /// Plot-ready columns: `t Ω Ω' P_N P_u`, the level's remaining
    /// populations, the adiabatic projections when present, and the norm.
    pub fn to_text(&self, extra_header: &[(&str, String)]) -> String {
        let mut fields: Vec<(&str, String)> = extra_header.to_vec();
        fields.push(("level", self.level.to_string()));
        fields.push(("n_atoms", self.n_atoms.to_string()));
        fields.push(("integrator", self.integrator.to_string()));
        fields.push(("steps", self.steps.to_string()));
        fields.push(("norm_drift", textio::num(self.norm_drift)));
        let mut columns = vec![
            "t".to_string(),
            "omega".into(),
            "omega_prime".into(),
            "P_N".into(),
            "P_u".into(),
        ];
        columns.extend(extra_columns(self.level).iter().map(|c| c.to_string()));
        if self.adiabatic_populations.is_some() {
            columns.extend(["P_plus".to_string(), "P_zero".into(), "P_minus".into()]);
        }
        columns.push("norm".into());
        let column_refs: Vec<&str> = columns.iter().map(String::as_str).collect();
        let mut out = textio::header_block(&fields, &column_refs);
        for k in 0..self.times.len() {
            let p = &self.populations[k];
            let mut row = vec![
                self.times[k],
                self.pulses[k].0,
                self.pulses[k].1,
                self.marked[k],
                self.unmarked[k],
            ];
            row.extend(extra_values(self.level, self.n_atoms, p));
            if let Some(ad) = &self.adiabatic_populations {
                row.extend(ad[k]);
            }
            row.push(self.states[k].norm());
            let line: Vec<String> = row.into_iter().map(textio::num).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

fn extra_columns(level: Level) -> &'static [&'static str] {
    match level {
        Level::Full => &["P_excited", "P_photon"],
        Level::Collective5 => &["P_photon", "P_excited_u", "P_excited_N"],
        Level::Effective3 => &["P_gamma0"],
        Level::Adiabatic3 => &["P_plus", "P_zero", "P_minus"],
    }
}

fn extra_values(level: Level, n: usize, p: &[f64]) -> Vec<f64> {
    match level {
        Level::Full => vec![p[n..2 * n].iter().sum(), p[2 * n]],
        Level::Collective5 => vec![p[2], p[3], p[4]],
        Level::Effective3 => vec![p[1]],
        Level::Adiabatic3 => p.to_vec(),
    }
}

/// Population outside the ground manifold.
fn excited_population(level: Level, n: usize, p: &[f64]) -> Option<f64> {
    match level {
        Level::Full => Some(p[n..].iter().sum()),
        Level::Collective5 => Some(p[2] + p[3] + p[4]),
        Level::Effective3 => Some(p[1]),
        Level::Adiabatic3 => None,
    }
}

fn frame_for(schedule: &PulseSchedule, n: usize, t: f64) -> Result<AdiabaticFrame> {
    let (o, op) = schedule.pulses_at(t);
    let (od, opd) = schedule.derivatives_at(t);
    frame_at(n, o, op, od, opd)
}

/// `(P_N, P_u)` of a state at time `t`.
fn ground_populations(state: &StateVector, schedule: &PulseSchedule, t: f64) -> Result<(f64, f64)> {
    let n = state.n_atoms();
    let a = state.amplitudes();
    Ok(match state.level() {
        Level::Full => {
            let sum: C64 = a.iter().take(n - 1).sum();
            (a[n - 1].norm_sqr(), sum.norm_sqr() / (n - 1) as f64)
        }
        Level::Collective5 => (a[1].norm_sqr(), a[0].norm_sqr()),
        Level::Effective3 => (a[0].norm_sqr(), a[2].norm_sqr()),
        Level::Adiabatic3 => {
            let eff = frame_for(schedule, n, t)?.basis_matrix() * a;
            (eff[0].norm_sqr(), eff[2].norm_sqr())
        }
    })
}

/// `H(t)` on the requested level.
pub fn hamiltonian_at(
    level: Level,
    params: &SystemParams,
    schedule: &PulseSchedule,
    t: f64,
) -> Result<DMatrix<C64>> {
    let (o, op) = schedule.pulses_at(t);
    Ok(match level {
        Level::Full => full_matrix(params, o, op, t),
        Level::Collective5 => h1_matrix(params, o, op, t),
        Level::Effective3 => heff_matrix(params.n_atoms(), o, op),
        Level::Adiabatic3 => {
            build_heff_adiabatic(&frame_for(schedule, params.n_atoms(), t)?).into_matrix()
        }
    })
}

/// `Λ_max`: largest `|eigenvalue|` of `H(t)` over the schedule grid, and
/// at least `δ` when the counter-rotating terms are kept.
///
/// The full model has the collective spectrum plus zeros, so the 5x5
/// block is used for it.
pub fn spectral_radius(
    level: Level,
    params: &SystemParams,
    schedule: &PulseSchedule,
) -> Result<f64> {
    let probe = if level == Level::Full {
        Level::Collective5
    } else {
        level
    };
    let mut radius: f64 = 0.0;
    for &t in schedule.grid() {
        let h = hamiltonian_at(probe, params, schedule, t)?;
        let ev = eigvalsh(&h);
        radius = radius.max(ev[0].abs()).max(ev[ev.len() - 1].abs());
    }
    if !params.rwa() && level != Level::Effective3 && level != Level::Adiabatic3 {
        radius = radius.max(params.delta());
    }
    Ok(radius)
}

/// Fewest steps meeting the `10 per 1/Λ_max` precondition.
pub fn minimum_steps(
    level: Level,
    params: &SystemParams,
    schedule: &PulseSchedule,
) -> Result<usize> {
    let r = spectral_radius(level, params, schedule)?;
    Ok(((MIN_STEPS_PER_PERIOD * r * schedule.duration()).ceil() as usize).max(1))
}

fn check_inputs(
    level: Level,
    params: &SystemParams,
    schedule: &PulseSchedule,
    psi0: &StateVector,
) -> Result<()> {
    if psi0.level() != level {
        return Err(Error::InvalidArgument(format!(
            "initial state is on {}, propagation on {level}",
            psi0.level()
        )));
    }
    if psi0.n_atoms() != params.n_atoms() || schedule.n_atoms() != params.n_atoms() {
        return Err(Error::InvalidArgument(format!(
            "atom numbers disagree: params N={}, state N={}, schedule N={}",
            params.n_atoms(),
            psi0.n_atoms(),
            schedule.n_atoms()
        )));
    }
    if (psi0.norm() - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::InvalidArgument(format!(
            "initial state norm {} is not 1",
            psi0.norm()
        )));
    }
    if matches!(level, Level::Effective3 | Level::Adiabatic3) && !params.rwa() {
        return Err(Error::InvalidArgument(format!(
            "{level} is derived under the resonant approximation; use COLLECTIVE5 or FULL for counter-rotating runs"
        )));
    }
    Ok(())
}

/// Propagates `psi0` across the schedule window with `steps` uniform
/// exponential-midpoint steps.
pub fn propagate(
    level: Level,
    params: &SystemParams,
    schedule: &PulseSchedule,
    psi0: &StateVector,
    steps: usize,
) -> Result<Trajectory> {
    propagate_with(
        level,
        params,
        schedule,
        psi0,
        PropagationOptions::new(steps),
    )
}

pub fn propagate_with(
    level: Level,
    params: &SystemParams,
    schedule: &PulseSchedule,
    psi0: &StateVector,
    options: PropagationOptions,
) -> Result<Trajectory> {
    check_inputs(level, params, schedule, psi0)?;
    let needed = minimum_steps(level, params, schedule)?;
    if options.steps < needed {
        return Err(Error::param(
            "steps",
            format!(
                "{} steps resolve fewer than {MIN_STEPS_PER_PERIOD} per 1/Λ_max period; need at least {needed}",
                options.steps
            ),
        ));
    }
    integrate(level, params, schedule, psi0, options)
}

/// Exact `exp(-i H τ) ψ` for the effective Hamiltonian, using `H³ = Λ² H`.
fn apply_heff_exponential(h: &DMatrix<C64>, tau: f64, psi: &DVector<C64>) -> DVector<C64> {
    let a = h[(0, 1)].re;
    let b = h[(1, 2)].re;
    let lambda = (a * a + b * b).sqrt();
    if lambda == 0.0 {
        return psi.clone();
    }
    let hpsi = h * psi;
    let hhpsi = h * &hpsi;
    let sin_term = (lambda * tau).sin() / lambda;
    let half = (0.5 * lambda * tau).sin();
    let cos_term = -2.0 * half * half / (lambda * lambda);
    psi - hpsi * (I * sin_term) + hhpsi * C64::new(cos_term, 0.0)
}

fn derivative(h: &DMatrix<C64>, psi: &DVector<C64>) -> DVector<C64> {
    (h * psi) * (-I)
}

fn integrate(
    level: Level,
    params: &SystemParams,
    schedule: &PulseSchedule,
    psi0: &StateVector,
    options: PropagationOptions,
) -> Result<Trajectory> {
    let n = params.n_atoms();
    let steps = options.steps.max(1);
    let stride = if options.record_every == 0 {
        steps.div_ceil(4000).max(1)
    } else {
        options.record_every
    };
    let t0 = schedule.start();
    let h = schedule.duration() / steps as f64;
    let mut psi = psi0.amplitudes().clone();

    let mut traj = Trajectory {
        level,
        n_atoms: n,
        integrator: options.integrator,
        steps,
        times: Vec::new(),
        states: Vec::new(),
        populations: Vec::new(),
        marked: Vec::new(),
        unmarked: Vec::new(),
        pulses: Vec::new(),
        adiabatic_populations: (level == Level::Effective3).then(Vec::new),
        peak_populations: psi0.populations(),
        max_excited: excited_population(level, n, &psi0.populations()),
        norm_drift: (psi0.norm() - 1.0).abs(),
    };
    record(&mut traj, schedule, t0, &psi)?;

    for k in 0..steps {
        let t = t0 + k as f64 * h;
        psi = match options.integrator {
            Integrator::ExponentialMidpoint => {
                let hm = hamiltonian_at(level, params, schedule, t + 0.5 * h)?;
                if level == Level::Effective3 {
                    apply_heff_exponential(&hm, h, &psi)
                } else {
                    apply_expm_hermitian(&hm, h, &psi)
                }
            }
            Integrator::RungeKutta4 => {
                let h0 = hamiltonian_at(level, params, schedule, t)?;
                let hm = hamiltonian_at(level, params, schedule, t + 0.5 * h)?;
                let h1 = hamiltonian_at(level, params, schedule, t + h)?;
                let hc = C64::new(h, 0.0);
                let k1 = derivative(&h0, &psi);
                let k2 = derivative(&hm, &(&psi + &k1 * (hc * 0.5)));
                let k3 = derivative(&hm, &(&psi + &k2 * (hc * 0.5)));
                let k4 = derivative(&h1, &(&psi + &k3 * hc));
                &psi + (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * (hc / 6.0)
            }
        };

        let drift = (psi.norm() - 1.0).abs();
        traj.norm_drift = traj.norm_drift.max(drift);
        if options.integrator == Integrator::RungeKutta4 && drift > RK4_DRIFT_LIMIT {
            // global RK4 error scales as h^4
            let factor = (drift / RK4_DRIFT_LIMIT).powf(0.25) * 1.5;
            return Err(Error::StepSize {
                drift,
                limit: RK4_DRIFT_LIMIT,
                suggested_steps: (steps as f64 * factor).ceil() as usize,
            });
        }
        let pops: Vec<f64> = psi.iter().map(|z| z.norm_sqr()).collect();
        for (peak, p) in traj.peak_populations.iter_mut().zip(&pops) {
            *peak = peak.max(*p);
        }
        if let (Some(m), Some(e)) = (
            traj.max_excited.as_mut(),
            excited_population(level, n, &pops),
        ) {
            *m = m.max(e);
        }
        if (k + 1) % stride == 0 || k + 1 == steps {
            let t_next = if k + 1 == steps {
                schedule.end()
            } else {
                t + h
            };
            record(&mut traj, schedule, t_next, &psi)?;
        }
    }
    Ok(traj)
}

fn record(
    traj: &mut Trajectory,
    schedule: &PulseSchedule,
    t: f64,
    psi: &DVector<C64>,
) -> Result<()> {
    let state = StateVector::from_raw(traj.level, traj.n_atoms, psi.clone());
    let (pn, pu) = ground_populations(&state, schedule, t)?;
    traj.populations.push(state.populations());
    traj.marked.push(pn);
    traj.unmarked.push(pu);
    traj.pulses.push(schedule.pulses_at(t));
    if let Some(ad) = traj.adiabatic_populations.as_mut() {
        match frame_for(schedule, traj.n_atoms, t) {
            Ok(frame) => ad.push(frame.project(psi)),
            // no eigenbasis while both pulses vanish
            Err(Error::UndefinedAngle) => traj.adiabatic_populations = None,
            Err(e) => return Err(e),
        }
    }
    traj.times.push(t);
    traj.states.push(state);
    Ok(())
}

/// Per-record `(|⟨+|φ⟩|², |⟨0|φ⟩|², |⟨-|φ⟩|²)` of an `EFFECTIVE3` run.
pub fn adiabatic_projections(
    traj: &Trajectory,
    params: &SystemParams,
    schedule: &PulseSchedule,
) -> Result<Vec<[f64; 3]>> {
    if traj.level != Level::Effective3 {
        return Err(Error::InvalidArgument(format!(
            "adiabatic projections need an EFFECTIVE3 trajectory, got {}",
            traj.level
        )));
    }
    if params.n_atoms() != traj.n_atoms {
        return Err(Error::InvalidArgument(
            "parameters and trajectory disagree on N".into(),
        ));
    }
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(&t, s)| Ok(frame_for(schedule, traj.n_atoms, t)?.project(s.amplitudes())))
        .collect()
}

/// Outcome of the automatic step policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepReport {
    pub steps: usize,
    /// Largest final-population change at the last doubling.
    pub last_change: f64,
    pub converged: bool,
}

/// Starts at 200 steps per `1/Λ_max` period and doubles until the final
/// populations move by less than `1e-8`, or `max_steps` is reached.
pub fn propagate_converged(
    level: Level,
    params: &SystemParams,
    schedule: &PulseSchedule,
    psi0: &StateVector,
    integrator: Integrator,
    max_steps: usize,
) -> Result<(Trajectory, StepReport)> {
    check_inputs(level, params, schedule, psi0)?;
    let r = spectral_radius(level, params, schedule)?;
    let mut steps = ((DEFAULT_STEPS_PER_PERIOD * r * schedule.duration()).ceil() as usize).max(64);
    let opts = |s| PropagationOptions::new(s).with_integrator(integrator);
    let mut prev = integrate(level, params, schedule, psi0, opts(steps))?;
    loop {
        if steps * 2 > max_steps {
            return Ok((
                prev,
                StepReport {
                    steps,
                    last_change: f64::NAN,
                    converged: false,
                },
            ));
        }
        steps *= 2;
        let next = integrate(level, params, schedule, psi0, opts(steps))?;
        let change = next
            .final_state()
            .populations()
            .iter()
            .zip(prev.final_state().populations())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if change < CONVERGENCE_TOLERANCE || steps * 2 > max_steps {
            return Ok((
                next,
                StepReport {
                    steps,
                    last_change: change,
                    converged: change < CONVERGENCE_TOLERANCE,
                },
            ));
        }
        prev = next;
    }
}

/// `|w⟩` on a propagation level; `ADIABATIC3` uses the dark state at `t_i`.
pub fn initial_uniform(
    level: Level,
    n_atoms: usize,
    schedule: &PulseSchedule,
) -> Result<StateVector> {
    match level {
        Level::Adiabatic3 => {
            let frame = frame_for(schedule, n_atoms, schedule.start())?;
            let eff = crate::statespace::uniform_superposition_at(Level::Effective3, n_atoms)?;
            let amps = frame.basis_matrix().adjoint() * eff.amplitudes();
            StateVector::new(Level::Adiabatic3, n_atoms, amps)
        }
        other => crate::statespace::uniform_superposition_at(other, n_atoms),
    }
}

/// Convenience labels used by experiments.
pub const P_U5: BasisLabel = BasisLabel::Collective(CollectiveTag::GPrimeU);
pub const P_N5: BasisLabel = BasisLabel::Collective(CollectiveTag::GPrimeN);
pub const P_N3: BasisLabel = BasisLabel::Effective(EffectiveTag::GPrimeN);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulsedesign::{design_schedule, GaussianPulse, DEFAULT_CUTOFF};
    use crate::statespace::{marked_state, uniform_superposition_at, AdiabaticTag};

    fn fig3_schedule() -> PulseSchedule {
        let p = GaussianPulse::for_mean_amplitude(8, 0.05, 1.0, DEFAULT_CUTOFF).unwrap();
        design_schedule(8, 0.05, &p, 4000).unwrap()
    }

    fn constant_schedule(n: usize, omega: f64, omega_prime: f64, duration: f64) -> PulseSchedule {
        let grid: Vec<f64> = (0..101).map(|k| k as f64 * duration / 100.0).collect();
        PulseSchedule::from_samples(n, 0.05, grid, vec![omega; 101], vec![omega_prime; 101])
            .unwrap()
    }

    #[test]
    fn lasers_off_freezes_the_state() {
        let s = constant_schedule(5, 0.0, 0.0, 10.0);
        let p = SystemParams::resonant(5, 1.0).unwrap();
        let psi0 = uniform_superposition_at(Level::Effective3, 5).unwrap();
        let tr = propagate(Level::Effective3, &p, &s, &psi0, 50).unwrap();
        assert_eq!(tr.final_state().amplitudes(), psi0.amplitudes());
        assert!(tr.marked.iter().all(|&x| (x - 0.2).abs() < 1e-15));
    }

    #[test]
    fn eigenstate_only_picks_up_a_phase() {
        let (n, o, op, dur) = (4usize, 0.8, 0.3, 7.0);
        let s = constant_schedule(n, o, op, dur);
        let p = SystemParams::resonant(n, 1.0).unwrap();
        let frame = frame_at(n, o, op, 0.0, 0.0).unwrap();
        let psi0 = StateVector::new(Level::Effective3, n, frame.plus.clone()).unwrap();
        let tr = propagate(Level::Effective3, &p, &s, &psi0, 400).unwrap();
        let expected = frame.plus.map(|z| z * (-I * frame.lambda * dur).exp());
        assert!((tr.final_state().amplitudes() - expected).norm() < 1e-12);
        let first = &tr.populations[0];
        assert!(tr
            .populations
            .iter()
            .all(|q| q.iter().zip(first).all(|(a, b)| (a - b).abs() < 1e-13)));
    }

    #[test]
    fn effective_exponential_matches_eigendecomposition() {
        let h = heff_matrix(6, 1.3, 0.4);
        let psi =
            DVector::from_row_slice(&[C64::new(0.6, 0.0), C64::new(0.0, 0.8), C64::new(0.0, 0.0)]);
        let a = apply_heff_exponential(&h, 0.37, &psi);
        let b = apply_expm_hermitian(&h, 0.37, &psi);
        assert!((a - b).norm() < 1e-14);
    }

    #[test]
    fn level_and_normalization_preconditions() {
        let s = fig3_schedule();
        let p = SystemParams::resonant(8, 1.0).unwrap();
        let psi5 = uniform_superposition_at(Level::Collective5, 8).unwrap();
        assert!(propagate(Level::Effective3, &p, &s, &psi5, 100_000).is_err());
        let psi3 = uniform_superposition_at(Level::Effective3, 8).unwrap();
        let needed = minimum_steps(Level::Effective3, &p, &s).unwrap();
        assert!(matches!(
            propagate(Level::Effective3, &p, &s, &psi3, needed - 1),
            Err(Error::InvalidParameter { name: "steps", .. })
        ));
        let cr = SystemParams::new(8, 1.0, 5.0, false).unwrap();
        assert!(propagate(Level::Effective3, &cr, &s, &psi3, 100_000).is_err());
    }

    #[test]
    fn figure3_effective_run_reaches_the_marked_state() {
        let s = fig3_schedule();
        let p = SystemParams::resonant(8, 1.0).unwrap();
        let psi0 = uniform_superposition_at(Level::Effective3, 8).unwrap();
        let tr = propagate(Level::Effective3, &p, &s, &psi0, 40_000).unwrap();
        assert!((tr.marked[0] - 0.125).abs() < 1e-15);
        assert!((tr.unmarked[0] - 0.875).abs() < 1e-15);
        assert!(tr.final_marked() >= 0.9975, "{}", tr.final_marked());
        assert!(tr.norm_drift <= 1e-12);
        let ad = tr.adiabatic_populations.as_ref().unwrap();
        assert!((ad[0][1] - 1.0).abs() < 1e-12);
        assert!((ad.last().unwrap()[1] - tr.final_marked()).abs() < 1e-9);
        assert!(ad
            .iter()
            .all(|q| (q.iter().sum::<f64>() - 1.0).abs() < 1e-9));
        // with θ̇ = εΛ the frame Hamiltonian is Λ times a constant matrix, so
        // the dark-state overlap dips to exactly (1 - 2ε²/(1+ε²))²
        let lo = ad.iter().map(|q| q[1]).fold(1.0, f64::min);
        let e2 = 0.05f64 * 0.05;
        assert!(
            (lo - (1.0 - 2.0 * e2 / (1.0 + e2)).powi(2)).abs() < 1e-5,
            "{lo}"
        );
    }

    #[test]
    fn rk4_agrees_with_exponential_midpoint() {
        let s = fig3_schedule();
        let p = SystemParams::resonant(8, 1.0).unwrap();
        let psi0 = uniform_superposition_at(Level::Effective3, 8).unwrap();
        let a = propagate(Level::Effective3, &p, &s, &psi0, 80_000).unwrap();
        let opts = PropagationOptions::new(80_000).with_integrator(Integrator::RungeKutta4);
        let b = propagate_with(Level::Effective3, &p, &s, &psi0, opts).unwrap();
        assert!(b.norm_drift <= RK4_DRIFT_LIMIT);
        let diff = a
            .populations
            .iter()
            .flatten()
            .zip(b.populations.iter().flatten())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(diff <= 1e-6, "{diff}");
    }

    #[test]
    fn rk4_reports_step_size_failure() {
        let s = constant_schedule(4, 3.0, 2.0, 30.0);
        let p = SystemParams::resonant(4, 1.0).unwrap();
        let psi0 = uniform_superposition_at(Level::Effective3, 4).unwrap();
        let steps = minimum_steps(Level::Effective3, &p, &s).unwrap();
        let opts = PropagationOptions::new(steps).with_integrator(Integrator::RungeKutta4);
        match propagate_with(Level::Effective3, &p, &s, &psi0, opts) {
            Err(Error::StepSize {
                suggested_steps, ..
            }) => assert!(suggested_steps > steps),
            other => panic!("expected a step-size error, got {other:?}"),
        }
    }

    #[test]
    fn midpoint_is_second_order_in_time_dependence() {
        let s = fig3_schedule();
        let p = SystemParams::resonant(8, 1.0).unwrap();
        let psi0 = uniform_superposition_at(Level::Effective3, 8).unwrap();
        let run = |steps| {
            propagate(Level::Effective3, &p, &s, &psi0, steps)
                .unwrap()
                .final_state()
                .amplitudes()
                .clone()
        };
        // the schedule is linear between its samples, so align steps with it
        let reference = run(3999 * 64);
        let e1 = (run(3999) - &reference).norm();
        let e2 = (run(3999 * 2) - &reference).norm();
        let order = (e1 / e2).log2();
        assert!((order - 2.0).abs() < 0.3, "order {order}");
    }

    #[test]
    fn adiabatic_level_matches_effective_level() {
        let s = fig3_schedule();
        let p = SystemParams::resonant(8, 1.0).unwrap();
        let eff = propagate(
            Level::Effective3,
            &p,
            &s,
            &uniform_superposition_at(Level::Effective3, 8).unwrap(),
            20_000,
        )
        .unwrap();
        let psi_ad = initial_uniform(Level::Adiabatic3, 8, &s).unwrap();
        assert!(
            (psi_ad
                .population(BasisLabel::Adiabatic(AdiabaticTag::Zero))
                .unwrap()
                - 1.0)
                .abs()
                < 1e-12
        );
        let ad = propagate(Level::Adiabatic3, &p, &s, &psi_ad, 20_000).unwrap();
        assert!((ad.final_marked() - eff.final_marked()).abs() < 1e-4);
    }

    #[test]
    fn marked_state_is_dark_without_companion_pulse() {
        let s = constant_schedule(6, 1.5, 0.0, 20.0);
        let p = SystemParams::resonant(6, 2.0).unwrap();
        let steps = minimum_steps(Level::Collective5, &p, &s).unwrap() * 4;
        let tr = propagate(
            Level::Collective5,
            &p,
            &s,
            &marked_state(Level::Collective5, 6).unwrap(),
            steps,
        )
        .unwrap();
        let worst = tr
            .marked
            .iter()
            .map(|x| (x - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn full_and_collective_runs_agree() {
        let n = 4;
        let pulse = GaussianPulse::for_mean_amplitude(n, 0.1, 1.0, DEFAULT_CUTOFF).unwrap();
        let s = design_schedule(n, 0.1, &pulse, 1000).unwrap();
        let p = SystemParams::resonant(n, 1.5).unwrap();
        let steps = minimum_steps(Level::Full, &p, &s).unwrap();
        let full = propagate(
            Level::Full,
            &p,
            &s,
            &uniform_superposition_at(Level::Full, n).unwrap(),
            steps,
        )
        .unwrap();
        let coll = propagate(
            Level::Collective5,
            &p,
            &s,
            &uniform_superposition_at(Level::Collective5, n).unwrap(),
            steps,
        )
        .unwrap();
        for k in 0..full.times.len() {
            assert!((full.marked[k] - coll.marked[k]).abs() < 1e-10);
            assert!((full.unmarked[k] - coll.unmarked[k]).abs() < 1e-10);
        }
        assert!((full.max_excited.unwrap() - coll.max_excited.unwrap()).abs() < 1e-10);
    }

    #[test]
    fn export_has_one_row_per_record() {
        let s = fig3_schedule();
        let p = SystemParams::resonant(8, 1.0).unwrap();
        let psi0 = uniform_superposition_at(Level::Effective3, 8).unwrap();
        let opts = PropagationOptions::new(20_000).with_record_every(100);
        let tr = propagate_with(Level::Effective3, &p, &s, &psi0, opts).unwrap();
        assert_eq!(tr.times.len(), 201);
        let text = tr.to_text(&[("command", "test".into())]);
        assert!(text.contains(
            "# columns: t omega omega_prime P_N P_u P_gamma0 P_plus P_zero P_minus norm"
        ));
        assert_eq!(textio::data_rows(&text).count(), 201);
        assert!(
            adiabatic_projections(&tr, &p, &s).unwrap()
                == *tr.adiabatic_populations.as_ref().unwrap()
        );
    }
}

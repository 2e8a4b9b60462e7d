//! Pulse-pair design from the constant-adiabaticity law `θ̇ = εΛ`.
//!
//! Given a base pulse `Ω(t)` and its running area `𝒜(t)`, the companion
//! pulse is fixed by the ratio
//!
//! ```text
//!  Ω'(t)     1 - ε𝒜/√(N-1)
//!  ----- = ---------------------------
//!  Ω(t)    √(1 + ε𝒜 (2√(N-1) - ε𝒜))
//! ```
//!
//! which starts at 1 (both pulses switched on together) and reaches 0 when
//! `ε𝒜 = √(N-1)`. The base pulse is rescaled so that this happens exactly
//! at the end of its window, which makes the duration `𝒯` obey
//! `Ω̄𝒯 = √(N-1)/ε`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonians::{gap, mixing_angle};
use crate::textio;

/// Default truncation half-width of the Gaussian, in units of its width.
pub const DEFAULT_CUTOFF: f64 = 4.0;
/// Adiabaticity ratio used for the reference `N = 8` run.
pub const DEFAULT_EPSILON: f64 = 0.05;
/// Largest admissible adiabaticity ratio.
pub const MAX_EPSILON: f64 = 0.2;
pub const MIN_SAMPLES: usize = 100;

/// A base pulse shape `Ω(t)` defined on a finite window.
pub trait BasePulse: Send + Sync {
    fn amplitude(&self, t: f64) -> f64;

    fn derivative(&self, t: f64) -> f64;

    /// `(t_start, t_end)`.
    fn window(&self) -> (f64, f64);

    /// Exact `∫_{t_start}^{t} Ω`, if the shape has one.
    fn closed_form_area(&self, _t: f64) -> Option<f64> {
        None
    }

    /// Amplitude times time scale; quadrature tolerances are relative to it.
    fn area_scale(&self) -> f64;

    /// Named shape parameters for export headers.
    fn describe(&self) -> Vec<(&'static str, f64)>;
}

/// Builds a base pulse for a requested process duration; used by sweeps.
pub trait PulseFamily: Send + Sync {
    fn for_duration(&self, duration: f64) -> Result<Box<dyn BasePulse>>;

    fn name(&self) -> &'static str;
}

/// `Ω(t) = Ω_peak exp(-((t - t0)/T)^2)` truncated to `t0 ± cT`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianPulse {
    peak: f64,
    width: f64,
    center: f64,
    cutoff: f64,
}

impl GaussianPulse {
    pub fn new(peak: f64, width: f64, center: f64, cutoff: f64) -> Result<Self> {
        if !(peak.is_finite() && peak > 0.0) {
            return Err(Error::param("peak", format!("must be > 0, got {peak}")));
        }
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::param("width", format!("must be > 0, got {width}")));
        }
        if !center.is_finite() {
            return Err(Error::param("center", "must be finite"));
        }
        if !(cutoff.is_finite() && cutoff >= 3.0) {
            return Err(Error::param(
                "cutoff_c",
                format!("must be >= 3, got {cutoff}"),
            ));
        }
        Ok(Self {
            peak,
            width,
            center,
            cutoff,
        })
    }

    /// Peak chosen so that `ε·𝒜(t_f) = √(N-1)` on the truncated window,
    /// i.e. `Ω_peak T = √(N-1)/(ε√π erf(c))`.
    pub fn designed(n_atoms: usize, epsilon: f64, width: f64, cutoff: f64) -> Result<Self> {
        check_design(n_atoms, epsilon)?;
        let probe = Self::new(1.0, width, 0.0, cutoff)?;
        let peak = nominal_peak_area(n_atoms, epsilon) / (width * libm::erf(probe.cutoff));
        Self::new(peak, width, 0.0, cutoff)
    }

    /// Designed pulse whose mean amplitude over the window is `mean_amplitude`,
    /// so that the duration is `√(N-1)/(ε Ω̄)`.
    pub fn for_mean_amplitude(
        n_atoms: usize,
        epsilon: f64,
        mean_amplitude: f64,
        cutoff: f64,
    ) -> Result<Self> {
        check_design(n_atoms, epsilon)?;
        if !(mean_amplitude.is_finite() && mean_amplitude > 0.0) {
            return Err(Error::param(
                "mean_amplitude",
                format!("must be > 0, got {mean_amplitude}"),
            ));
        }
        let duration = ((n_atoms - 1) as f64).sqrt() / (epsilon * mean_amplitude);
        Self::designed(n_atoms, epsilon, duration / (2.0 * cutoff), cutoff)
    }

    pub fn peak(&self) -> f64 {
        self.peak
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }
}

impl BasePulse for GaussianPulse {
    fn amplitude(&self, t: f64) -> f64 {
        let x = (t - self.center) / self.width;
        self.peak * (-x * x).exp()
    }

    fn derivative(&self, t: f64) -> f64 {
        let x = (t - self.center) / self.width;
        -2.0 * x / self.width * self.amplitude(t)
    }

    fn window(&self) -> (f64, f64) {
        let half = self.cutoff * self.width;
        (self.center - half, self.center + half)
    }

    fn closed_form_area(&self, t: f64) -> Option<f64> {
        let x = (t - self.center) / self.width;
        Some(0.5 * self.peak * self.width * PI.sqrt() * (libm::erf(x) + libm::erf(self.cutoff)))
    }

    fn area_scale(&self) -> f64 {
        self.peak * self.width
    }

    fn describe(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("omega_peak", self.peak),
            ("width_T", self.width),
            ("center_t0", self.center),
            ("cutoff_c", self.cutoff),
        ]
    }
}

/// Gaussians centred at 0 whose window `±cT` spans the requested duration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFamily {
    pub cutoff: f64,
}

impl Default for GaussianFamily {
    fn default() -> Self {
        Self {
            cutoff: DEFAULT_CUTOFF,
        }
    }
}

impl PulseFamily for GaussianFamily {
    fn for_duration(&self, duration: f64) -> Result<Box<dyn BasePulse>> {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::param(
                "duration",
                format!("must be > 0, got {duration}"),
            ));
        }
        // unit peak; design_schedule rescales the amplitude
        Ok(Box::new(GaussianPulse::new(
            1.0,
            duration / (2.0 * self.cutoff),
            0.0,
            self.cutoff,
        )?))
    }

    fn name(&self) -> &'static str {
        "gaussian"
    }
}

/// `Ω_peak T = √(N-1)/(ε√π)` for an untruncated Gaussian.
pub fn nominal_peak_area(n_atoms: usize, epsilon: f64) -> f64 {
    ((n_atoms - 1) as f64).sqrt() / (epsilon * PI.sqrt())
}

fn check_design(n_atoms: usize, epsilon: f64) -> Result<()> {
    if n_atoms < 2 {
        return Err(Error::param(
            "n_atoms",
            format!("need N >= 2, got {n_atoms}"),
        ));
    }
    if !(epsilon > 0.0 && epsilon <= MAX_EPSILON) {
        return Err(Error::param(
            "epsilon",
            format!("must lie in (0, {MAX_EPSILON}], got {epsilon}"),
        ));
    }
    Ok(())
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
}

fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let left = simpson(f, a, m);
    let right = simpson(f, m, b);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        left + right + diff / 15.0
    } else {
        adaptive_simpson(f, a, m, left, 0.5 * tol, depth - 1)
            + adaptive_simpson(f, m, b, right, 0.5 * tol, depth - 1)
    }
}

/// `∫_{a}^{b} f` by adaptive Simpson to absolute tolerance `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    // split first so narrow peaks are not missed by the top-level estimate
    let pieces = 16;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|k| {
            let (lo, hi) = (a + k as f64 * h, a + (k + 1) as f64 * h);
            adaptive_simpson(f, lo, hi, simpson(f, lo, hi), tol / pieces as f64, 40)
        })
        .sum()
}

/// Absolute tolerance for running areas, relative to `Ω_peak T`.
pub const AREA_TOLERANCE: f64 = 1e-10;

/// `𝒜(t) = ∫_{t_start}^{t} Ω(u) du` by adaptive quadrature.
pub fn cumulative_area(pulse: &dyn BasePulse, t: f64) -> Result<f64> {
    let (start, end) = pulse.window();
    if !(start..=end).contains(&t) {
        return Err(Error::OutsideWindow { t, start, end });
    }
    let tol = 0.1 * AREA_TOLERANCE * pulse.area_scale();
    Ok(integrate(&|u| pulse.amplitude(u), start, t, tol))
}

/// Value of the designed ratio `Ω'/Ω` at a given running area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoRatio {
    pub value: f64,
    /// `ε𝒜` reached (or passed) `√(N-1)`; the value is clamped to 0.
    pub complete: bool,
}

pub fn ratio_from_rho(n_atoms: usize, epsilon: f64, area: f64) -> Result<RhoRatio> {
    if n_atoms < 2 {
        return Err(Error::param(
            "n_atoms",
            format!("need N >= 2, got {n_atoms}"),
        ));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::param(
            "epsilon",
            format!("must be > 0, got {epsilon}"),
        ));
    }
    if !(area.is_finite() && area >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "running area must be >= 0, got {area}"
        )));
    }
    let s = ((n_atoms - 1) as f64).sqrt();
    let x = epsilon * area;
    if x >= s {
        return Ok(RhoRatio {
            value: 0.0,
            complete: true,
        });
    }
    Ok(RhoRatio {
        value: (1.0 - x / s) / (1.0 + x * (2.0 * s - x)).sqrt(),
        complete: false,
    })
}

/// `d(Ω'/Ω)/d(ε𝒜) = -N / (√(N-1) D^3)`, `D = √(1 + ε𝒜(2√(N-1) - ε𝒜))`.
fn rho_slope(n_atoms: usize, x: f64) -> f64 {
    let s = ((n_atoms - 1) as f64).sqrt();
    let d = (1.0 + x * (2.0 * s - x)).sqrt();
    -(n_atoms as f64) / (s * d * d * d)
}

/// A sampled pulse pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSchedule {
    n_atoms: usize,
    epsilon: f64,
    grid: Vec<f64>,
    omega: Vec<f64>,
    omega_prime: Vec<f64>,
    omega_dot: Vec<f64>,
    omega_prime_dot: Vec<f64>,
    area: Vec<f64>,
    shape: Vec<(&'static str, f64)>,
    quadrature_error: Option<f64>,
}

/// Designs `Ω'` from `base` on `n_samples` uniform points covering its window.
///
/// The base amplitude is rescaled so that `ε𝒜(t_f) = √(N-1)`; for a
/// truncated Gaussian this is the `1/erf(c)` correction of the peak.
pub fn design_schedule(
    n_atoms: usize,
    epsilon: f64,
    pulse: &dyn BasePulse,
    n_samples: usize,
) -> Result<PulseSchedule> {
    check_design(n_atoms, epsilon)?;
    if n_samples < MIN_SAMPLES {
        return Err(Error::param(
            "n_samples",
            format!("need at least {MIN_SAMPLES}, got {n_samples}"),
        ));
    }
    let (start, end) = pulse.window();
    if !(start.is_finite() && end.is_finite() && end > start) {
        return Err(Error::param(
            "window",
            format!("invalid window [{start}, {end}]"),
        ));
    }
    let h = (end - start) / (n_samples - 1) as f64;
    let grid: Vec<f64> = (0..n_samples)
        .map(|k| {
            if k + 1 == n_samples {
                end
            } else {
                start + k as f64 * h
            }
        })
        .collect();

    // per-interval Simpson with the interval midpoint as the middle node
    let mut base_area = Vec::with_capacity(n_samples);
    let mut acc = 0.0;
    base_area.push(0.0);
    for w in grid.windows(2) {
        acc += simpson(&|u| pulse.amplitude(u), w[0], w[1]);
        base_area.push(acc);
    }
    let quadrature_error = pulse.closed_form_area(end).map(|exact| (acc - exact).abs());

    let s = ((n_atoms - 1) as f64).sqrt();
    let target = s / epsilon;
    let scale = target / acc;
    let mut area: Vec<f64> = base_area.iter().map(|a| a * scale).collect();
    *area.last_mut().expect("n_samples >= 100") = target;

    let mut omega = Vec::with_capacity(n_samples);
    let mut omega_prime = Vec::with_capacity(n_samples);
    let mut omega_dot = Vec::with_capacity(n_samples);
    let mut omega_prime_dot = Vec::with_capacity(n_samples);
    for (k, &t) in grid.iter().enumerate() {
        let o = scale * pulse.amplitude(t);
        let od = scale * pulse.derivative(t);
        let last = k + 1 == n_samples;
        let rho = if last {
            0.0
        } else {
            ratio_from_rho(n_atoms, epsilon, area[k])?.value
        };
        let x = (epsilon * area[k]).min(s);
        let rho_dot = rho_slope(n_atoms, x) * epsilon * o;
        omega.push(o);
        omega_dot.push(od);
        omega_prime.push(rho * o);
        omega_prime_dot.push(rho_dot * o + rho * od);
    }

    let mut shape = pulse.describe();
    for entry in shape.iter_mut() {
        if entry.0 == "omega_peak" {
            entry.1 *= scale;
        }
    }
    shape.push(("amplitude_scale", scale));

    Ok(PulseSchedule {
        n_atoms,
        epsilon,
        grid,
        omega,
        omega_prime,
        omega_dot,
        omega_prime_dot,
        area,
        shape,
        quadrature_error,
    })
}

fn central_differences(grid: &[f64], values: &[f64]) -> Vec<f64> {
    let n = grid.len();
    (0..n)
        .map(|k| {
            let (a, b) = if k == 0 {
                (0, 1)
            } else if k + 1 == n {
                (n - 2, n - 1)
            } else {
                (k - 1, k + 1)
            };
            (values[b] - values[a]) / (grid[b] - grid[a])
        })
        .collect()
}

impl PulseSchedule {
    /// A schedule from arbitrary samples (no design law enforced). The
    /// running area uses the trapezoid rule and derivatives use central
    /// differences.
    pub fn from_samples(
        n_atoms: usize,
        epsilon: f64,
        grid: Vec<f64>,
        omega: Vec<f64>,
        omega_prime: Vec<f64>,
    ) -> Result<Self> {
        check_design(n_atoms, epsilon)?;
        if grid.len() < 3 || omega.len() != grid.len() || omega_prime.len() != grid.len() {
            return Err(Error::InvalidArgument(
                "grid and pulse samples must have equal length >= 3".into(),
            ));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(
                "time grid must be strictly increasing".into(),
            ));
        }
        if omega
            .iter()
            .chain(&omega_prime)
            .any(|x| !(x.is_finite() && *x >= 0.0))
        {
            return Err(Error::InvalidArgument(
                "pulse samples must be finite and >= 0".into(),
            ));
        }
        let mut area = vec![0.0];
        for k in 1..grid.len() {
            let step = 0.5 * (grid[k] - grid[k - 1]) * (omega[k] + omega[k - 1]);
            area.push(area[k - 1] + step);
        }
        let omega_dot = central_differences(&grid, &omega);
        let omega_prime_dot = central_differences(&grid, &omega_prime);
        Ok(Self {
            n_atoms,
            epsilon,
            grid,
            omega,
            omega_prime,
            omega_dot,
            omega_prime_dot,
            area,
            shape: vec![("custom", 1.0)],
            quadrature_error: None,
        })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn omega_prime(&self) -> &[f64] {
        &self.omega_prime
    }

    pub fn omega_dot(&self) -> &[f64] {
        &self.omega_dot
    }

    pub fn omega_prime_dot(&self) -> &[f64] {
        &self.omega_prime_dot
    }

    pub fn area(&self) -> &[f64] {
        &self.area
    }

    pub fn shape(&self) -> &[(&'static str, f64)] {
        &self.shape
    }

    /// `|numerical - exact|` total area of the unscaled base pulse, when the
    /// shape has a closed form.
    pub fn quadrature_error(&self) -> Option<f64> {
        self.quadrature_error
    }

    pub fn start(&self) -> f64 {
        self.grid[0]
    }

    pub fn end(&self) -> f64 {
        self.grid[self.grid.len() - 1]
    }

    /// `𝒯 = t_f - t_i`.
    pub fn duration(&self) -> f64 {
        self.end() - self.start()
    }

    pub fn total_area(&self) -> f64 {
        self.area[self.area.len() - 1]
    }

    /// `Ω̄ = 𝒜(𝒯)/𝒯`.
    pub fn mean_amplitude(&self) -> f64 {
        self.total_area() / self.duration()
    }

    /// `∫ Ω' dt` over the window: composite Simpson, with a 3/8 panel when
    /// the interval count is odd. Expects a uniform grid.
    pub fn omega_prime_area(&self) -> f64 {
        composite_simpson(&self.grid, &self.omega_prime)
    }

    pub fn omega_peak(&self) -> f64 {
        self.omega.iter().copied().fold(0.0, f64::max)
    }

    pub fn omega_prime_peak(&self) -> f64 {
        self.omega_prime.iter().copied().fold(0.0, f64::max)
    }

    /// Mixing angle at sample `k`.
    pub fn theta(&self, k: usize) -> Result<f64> {
        mixing_angle(self.n_atoms, self.omega[k], self.omega_prime[k])
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let n = self.grid.len();
        let t = t.clamp(self.grid[0], self.grid[n - 1]);
        let k = self.grid.partition_point(|&g| g <= t).clamp(1, n - 1) - 1;
        let w = (t - self.grid[k]) / (self.grid[k + 1] - self.grid[k]);
        (k, w)
    }

    fn lerp(values: &[f64], k: usize, w: f64) -> f64 {
        values[k] + w * (values[k + 1] - values[k])
    }

    /// `(Ω, Ω')` at `t`, linearly interpolated between samples and clamped
    /// to the window.
    pub fn pulses_at(&self, t: f64) -> (f64, f64) {
        let (k, w) = self.locate(t);
        (
            Self::lerp(&self.omega, k, w),
            Self::lerp(&self.omega_prime, k, w),
        )
    }

    /// `(Ω̇, Ω̇')` at `t`, interpolated like [`Self::pulses_at`].
    pub fn derivatives_at(&self, t: f64) -> (f64, f64) {
        let (k, w) = self.locate(t);
        (
            Self::lerp(&self.omega_dot, k, w),
            Self::lerp(&self.omega_prime_dot, k, w),
        )
    }

    /// Boundary and duration conditions of the design.
    pub fn boundary_report(&self) -> BoundaryReport {
        let last = self.grid.len() - 1;
        let s = ((self.n_atoms - 1) as f64).sqrt();
        BoundaryReport {
            initial_ratio: self.omega_prime[0] / self.omega[0],
            final_omega: self.omega[last],
            final_omega_prime: self.omega_prime[last],
            duration_residual: (self.epsilon * self.total_area() - s).abs(),
        }
    }

    /// Columns `t Ω Ω' 𝒜 θ` with a header describing the design.
    pub fn to_text(&self, extra_header: &[(&str, String)]) -> String {
        let mut fields: Vec<(&str, String)> = extra_header.to_vec();
        fields.push(("n_atoms", self.n_atoms.to_string()));
        fields.push(("epsilon", textio::num(self.epsilon)));
        for (k, v) in &self.shape {
            fields.push((k, textio::num(*v)));
        }
        fields.push(("duration", textio::num(self.duration())));
        let mut out =
            textio::header_block(&fields, &["t", "omega", "omega_prime", "area", "theta"]);
        for k in 0..self.grid.len() {
            let theta = self.theta(k).unwrap_or(f64::NAN);
            out.push_str(&format!(
                "{} {} {} {} {}\n",
                textio::num(self.grid[k]),
                textio::num(self.omega[k]),
                textio::num(self.omega_prime[k]),
                textio::num(self.area[k]),
                textio::num(theta)
            ));
        }
        out
    }
}

pub(crate) fn composite_simpson(grid: &[f64], values: &[f64]) -> f64 {
    let n = grid.len();
    if n < 2 {
        return 0.0;
    }
    if n == 2 {
        return 0.5 * (grid[1] - grid[0]) * (values[0] + values[1]);
    }
    let intervals = n - 1;
    let simpson_end = if intervals.is_multiple_of(2) {
        n - 1
    } else {
        n - 4
    };
    let mut total = 0.0;
    let mut k = 0;
    while k + 2 <= simpson_end {
        let h = 0.5 * (grid[k + 2] - grid[k]);
        total += h / 3.0 * (values[k] + 4.0 * values[k + 1] + values[k + 2]);
        k += 2;
    }
    if intervals % 2 == 1 {
        let h = (grid[n - 1] - grid[n - 4]) / 3.0;
        total += 3.0 * h / 8.0
            * (values[n - 4] + 3.0 * values[n - 3] + 3.0 * values[n - 2] + values[n - 1]);
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryReport {
    pub initial_ratio: f64,
    pub final_omega: f64,
    pub final_omega_prime: f64,
    /// `|ε𝒜(t_f) - √(N-1)|`.
    pub duration_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdiabaticityReport {
    pub epsilon: f64,
    /// `max |θ̇/Λ - ε|` over interior samples.
    pub max_deviation: f64,
    pub at_time: f64,
}

/// Reconstructs `θ(t)` from the sampled ratio, differentiates it by central
/// differences and compares `θ̇/Λ` with `ε` on the grid interior.
pub fn verify_adiabaticity(schedule: &PulseSchedule) -> Result<AdiabaticityReport> {
    let n = schedule.n_atoms;
    let thetas = (0..schedule.grid.len())
        .map(|k| schedule.theta(k))
        .collect::<Result<Vec<f64>>>()?;
    let mut max_deviation = 0.0;
    let mut at_time = schedule.grid[0];
    for k in 1..schedule.grid.len() - 1 {
        let lambda = gap(n, schedule.omega[k], schedule.omega_prime[k]);
        if lambda == 0.0 {
            continue;
        }
        let theta_dot =
            (thetas[k + 1] - thetas[k - 1]) / (schedule.grid[k + 1] - schedule.grid[k - 1]);
        let dev = (theta_dot / lambda - schedule.epsilon).abs();
        if dev > max_deviation {
            max_deviation = dev;
            at_time = schedule.grid[k];
        }
    }
    Ok(AdiabaticityReport {
        epsilon: schedule.epsilon,
        max_deviation,
        at_time,
    })
}

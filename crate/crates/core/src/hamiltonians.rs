//! Hamiltonians of the cavity-laser-atom system at every reduction level.
//!
//! All operators live in the rotating frame in which the cavity/laser
//! carrier has been removed; only the marked-state shift `delta` survives,
//! through the counter-rotating phases `e^{±i delta t}` of
//!
//! ```text
//! Σ(t)  = Ω + e^{-i δ t} Ω'      (unmarked atoms)
//! Σ'(t) = Ω' + e^{+i δ t} Ω      (marked atom)
//! ```
//!
//! With `rwa` set these collapse to `Σ = Ω` and `Σ' = Ω'`.
//! Laser couplings are stored as `⟨g'|H|e⟩ = Σ` (ground row, excited
//! column); cavity couplings `⟨e|H|g,1⟩` are real.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{hermiticity_defect, max_abs, re, I, ONE, ZERO};
use crate::statespace::Level;
use crate::textio;

/// Physical configuration shared by every builder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemParams {
    n_atoms: usize,
    coupling_g: f64,
    delta: f64,
    rwa: bool,
}

impl SystemParams {
    pub fn new(n_atoms: usize, coupling_g: f64, delta: f64, rwa: bool) -> Result<Self> {
        if n_atoms < 2 {
            return Err(Error::param(
                "n_atoms",
                format!("need N >= 2, got {n_atoms}"),
            ));
        }
        if !(coupling_g.is_finite() && coupling_g > 0.0) {
            return Err(Error::param(
                "g",
                format!("cavity coupling must be > 0, got {coupling_g}"),
            ));
        }
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::param(
                "delta",
                format!("marked-state shift must be >= 0, got {delta}"),
            ));
        }
        if !rwa && delta <= 0.0 {
            return Err(Error::param(
                "delta",
                "counter-rotating terms need delta > 0",
            ));
        }
        Ok(Self {
            n_atoms,
            coupling_g,
            delta,
            rwa,
        })
    }

    /// Resonant-approximation parameters; `G` only matters for the
    /// 5-level and full models.
    pub fn resonant(n_atoms: usize, coupling_g: f64) -> Result<Self> {
        Self::new(n_atoms, coupling_g, 0.0, true)
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn coupling_g(&self) -> f64 {
        self.coupling_g
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn rwa(&self) -> bool {
        self.rwa
    }

    pub fn with_rwa(mut self, rwa: bool) -> Result<Self> {
        self.rwa = rwa;
        Self::new(self.n_atoms, self.coupling_g, self.delta, rwa)
    }

    /// `(Σ, Σ')` at time `t`.
    pub fn laser_couplings(&self, omega: f64, omega_prime: f64, t: f64) -> (C64, C64) {
        if self.rwa {
            (re(omega), re(omega_prime))
        } else {
            let phase = C64::from_polar(1.0, self.delta * t);
            (
                re(omega) + phase.conj() * omega_prime,
                re(omega_prime) + phase * omega,
            )
        }
    }

    fn n(&self) -> f64 {
        self.n_atoms as f64
    }
}

fn check_pulses(omega: f64, omega_prime: f64) -> Result<()> {
    if !(omega.is_finite() && omega >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Ω must be finite and >= 0, got {omega}"
        )));
    }
    if !(omega_prime.is_finite() && omega_prime >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Ω' must be finite and >= 0, got {omega_prime}"
        )));
    }
    Ok(())
}

/// Dense Hermitian matrix tagged with the basis it acts on.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    level: Level,
    n_atoms: usize,
    matrix: DMatrix<C64>,
}

impl HermitianOperator {
    /// Relative Hermiticity tolerance.
    pub const TOLERANCE: f64 = 1e-12;

    pub fn new(level: Level, n_atoms: usize, matrix: DMatrix<C64>) -> Result<Self> {
        let dim = level.dimension(n_atoms);
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::InvalidArgument(format!(
                "{level} operator must be {dim}x{dim}, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let scale = max_abs(&matrix);
        let defect = hermiticity_defect(&matrix);
        if defect > Self::TOLERANCE * scale {
            return Err(Error::InvalidArgument(format!(
                "matrix is not Hermitian (defect {defect:.3e})"
            )));
        }
        Ok(Self {
            level,
            n_atoms,
            matrix,
        })
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        crate::linalg::eigvalsh(&self.matrix)
    }

    /// Row-major text, one matrix row per line as `re im` pairs.
    pub fn to_text(&self) -> String {
        let mut out = textio::header_block(
            &[
                ("level", self.level.to_string()),
                ("n_atoms", self.n_atoms.to_string()),
                ("dim", self.matrix.nrows().to_string()),
            ],
            &["row-major re im pairs"],
        );
        for r in 0..self.matrix.nrows() {
            let row: Vec<String> = (0..self.matrix.ncols())
                .map(|c| {
                    let z = self.matrix[(r, c)];
                    format!("{} {}", textio::num(z.re), textio::num(z.im))
                })
                .collect();
            out.push_str(&row.join("  "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let header = textio::Header::parse(text)?;
        let level: Level = header.require("level")?.parse()?;
        let n_atoms: usize = header.require_parsed("n_atoms")?;
        let dim: usize = header.require_parsed("dim")?;
        let mut entries = Vec::with_capacity(dim * dim);
        let mut rows = 0;
        for (line, fields) in textio::data_rows(text) {
            if fields.len() != 2 * dim {
                return Err(Error::Parse {
                    line,
                    reason: format!("expected {} numbers, found {}", 2 * dim, fields.len()),
                });
            }
            for pair in fields.chunks(2) {
                let a =
                    textio::parse_num(pair[0]).map_err(|reason| Error::Parse { line, reason })?;
                let b =
                    textio::parse_num(pair[1]).map_err(|reason| Error::Parse { line, reason })?;
                entries.push(C64::new(a, b));
            }
            rows += 1;
        }
        if rows != dim {
            return Err(Error::Parse {
                line: 0,
                reason: format!("expected {dim} rows, found {rows}"),
            });
        }
        Self::new(level, n_atoms, DMatrix::from_row_slice(dim, dim, &entries))
    }
}

pub(crate) fn full_matrix(
    params: &SystemParams,
    omega: f64,
    omega_prime: f64,
    t: f64,
) -> DMatrix<C64> {
    let n = params.n_atoms;
    let (sigma, sigma_p) = params.laser_couplings(omega, omega_prime, t);
    let g = re(params.coupling_g);
    let photon = 2 * n;
    let mut h = DMatrix::from_element(2 * n + 1, 2 * n + 1, ZERO);
    for j in 0..n {
        let (ground, excited) = (j, n + j);
        let s = if j + 1 == n { sigma_p } else { sigma };
        h[(ground, excited)] = s;
        h[(excited, ground)] = s.conj();
        h[(excited, photon)] = g;
        h[(photon, excited)] = g;
    }
    h
}

/// Full single-photon-sector Hamiltonian, dimension `2N+1`.
pub fn build_full(
    params: &SystemParams,
    omega: f64,
    omega_prime: f64,
    t: f64,
) -> Result<HermitianOperator> {
    check_pulses(omega, omega_prime)?;
    HermitianOperator::new(
        Level::Full,
        params.n_atoms,
        full_matrix(params, omega, omega_prime, t),
    )
}

pub(crate) fn h1_matrix(
    params: &SystemParams,
    omega: f64,
    omega_prime: f64,
    t: f64,
) -> DMatrix<C64> {
    let (sigma, sigma_p) = params.laser_couplings(omega, omega_prime, t);
    let g = params.coupling_g;
    let gu = re((params.n() - 1.0).sqrt() * g);
    let mut h = DMatrix::from_element(5, 5, ZERO);
    // GPrimeU, GPrimeN, Photon, ExcitedU, ExcitedN
    h[(0, 3)] = sigma;
    h[(1, 4)] = sigma_p;
    h[(2, 3)] = gu;
    h[(2, 4)] = re(g);
    for (r, c) in [(0, 3), (1, 4), (2, 3), (2, 4)] {
        h[(c, r)] = h[(r, c)].conj();
    }
    h
}

/// Exact 5-level collective Hamiltonian on
/// `{GPrimeU, GPrimeN, Photon, ExcitedU, ExcitedN}`.
pub fn build_h1(
    params: &SystemParams,
    omega: f64,
    omega_prime: f64,
    t: f64,
) -> Result<HermitianOperator> {
    check_pulses(omega, omega_prime)?;
    HermitianOperator::new(
        Level::Collective5,
        params.n_atoms,
        h1_matrix(params, omega, omega_prime, t),
    )
}

/// The cavity block on `{Photon, ExcitedU, ExcitedN}`.
pub fn cavity_block(params: &SystemParams) -> DMatrix<C64> {
    h1_matrix(params, 0.0, 0.0, 0.0)
        .view((2, 2), (3, 3))
        .into_owned()
}

/// Eigensystem of the cavity block, vectors on `{Photon, ExcitedU, ExcitedN}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CavityEigensystem {
    pub gamma0: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub vector0: [f64; 3],
    pub vector_plus: [f64; 3],
    pub vector_minus: [f64; 3],
}

impl CavityEigensystem {
    /// `T`: columns are `|g'_u⟩, |g'_N⟩, |γ0⟩, |γ+⟩, |γ-⟩` on the
    /// `COLLECTIVE5` basis.
    pub fn t_matrix(&self) -> DMatrix<C64> {
        let mut t = DMatrix::from_element(5, 5, ZERO);
        t[(0, 0)] = ONE;
        t[(1, 1)] = ONE;
        for (col, v) in [
            (2, self.vector0),
            (3, self.vector_plus),
            (4, self.vector_minus),
        ] {
            for (k, x) in v.iter().enumerate() {
                t[(2 + k, col)] = re(*x);
            }
        }
        t
    }
}

pub fn cavity_eigensystem(params: &SystemParams) -> CavityEigensystem {
    let n = params.n();
    let (a, b) = ((1.0 - 1.0 / n).sqrt(), 1.0 / n.sqrt());
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let gamma = n.sqrt() * params.coupling_g;
    CavityEigensystem {
        gamma0: 0.0,
        gamma_plus: gamma,
        gamma_minus: -gamma,
        vector0: [0.0, -b, a],
        vector_plus: [h, h * a, h * b],
        vector_minus: [-h, h * a, h * b],
    }
}

/// Blocks of `T† H1 T`: `A` on `{GPrimeU, GPrimeN, Gamma0}`, `B` coupling
/// them to `{γ+, γ-}`, and the diagonal `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct EliminationBlocks {
    pub a: DMatrix<C64>,
    pub b: DMatrix<C64>,
    pub c: DMatrix<C64>,
}

impl EliminationBlocks {
    /// `(A B; B† C)` on `{GPrimeU, GPrimeN, Gamma0, γ+, γ-}`.
    pub fn assemble(&self) -> DMatrix<C64> {
        let mut m = DMatrix::from_element(5, 5, ZERO);
        m.view_mut((0, 0), (3, 3)).copy_from(&self.a);
        m.view_mut((0, 3), (3, 2)).copy_from(&self.b);
        m.view_mut((3, 0), (2, 3)).copy_from(&self.b.adjoint());
        m.view_mut((3, 3), (2, 2)).copy_from(&self.c);
        m
    }

    /// `B C^{-1} B†`, using that `C` is diagonal.
    pub fn elimination_correction(&self) -> DMatrix<C64> {
        DMatrix::from_fn(3, 3, |i, j| {
            (0..2)
                .map(|k| self.b[(i, k)] * self.b[(j, k)].conj() / self.c[(k, k)])
                .fold(ZERO, |acc, x| acc + x)
        })
    }

    /// `A - B C^{-1} B†` reordered to the `EFFECTIVE3` basis
    /// `{GPrimeN, Gamma0, GPrimeU}`.
    pub fn eliminated(&self) -> DMatrix<C64> {
        let reduced = &self.a - self.elimination_correction();
        let order = [1, 2, 0];
        DMatrix::from_fn(3, 3, |r, c| reduced[(order[r], order[c])])
    }
}

pub fn build_blocks(
    params: &SystemParams,
    omega: f64,
    omega_prime: f64,
    t: f64,
) -> Result<EliminationBlocks> {
    check_pulses(omega, omega_prime)?;
    let (sigma, sigma_p) = params.laser_couplings(omega, omega_prime, t);
    let n = params.n();
    let (sn, sm) = (n.sqrt(), (n - 1.0).sqrt());
    let mut a = DMatrix::from_element(3, 3, ZERO);
    a[(0, 2)] = -sigma / sn;
    a[(1, 2)] = sigma_p * sm / sn;
    a[(2, 0)] = a[(0, 2)].conj();
    a[(2, 1)] = a[(1, 2)].conj();
    let k = 1.0 / (2.0 * n).sqrt();
    let col = [sigma * sm * k, sigma_p * k, ZERO];
    let b = DMatrix::from_fn(3, 2, |r, _| col[r]);
    let g = re(sn * params.coupling_g);
    let c = DMatrix::from_row_slice(2, 2, &[g, ZERO, ZERO, -g]);
    Ok(EliminationBlocks { a, b, c })
}

pub(crate) fn heff_matrix(n_atoms: usize, omega: f64, omega_prime: f64) -> DMatrix<C64> {
    let n = n_atoms as f64;
    let marked = re((n - 1.0).sqrt() * omega_prime / n.sqrt());
    let unmarked = re(-omega / n.sqrt());
    DMatrix::from_row_slice(
        3,
        3,
        &[
            ZERO, marked, ZERO, marked, ZERO, unmarked, ZERO, unmarked, ZERO,
        ],
    )
}

/// Effective 3-level Hamiltonian on `{GPrimeN, Gamma0, GPrimeU}` after the
/// resonant approximation and elimination of the `γ±` branch.
pub fn build_heff(
    params: &SystemParams,
    omega: f64,
    omega_prime: f64,
) -> Result<HermitianOperator> {
    check_pulses(omega, omega_prime)?;
    HermitianOperator::new(
        Level::Effective3,
        params.n_atoms,
        heff_matrix(params.n_atoms, omega, omega_prime),
    )
}

/// `Λ = N^{-1/2} sqrt((N-1) Ω'^2 + Ω^2)`.
pub fn gap(n_atoms: usize, omega: f64, omega_prime: f64) -> f64 {
    let n = n_atoms as f64;
    ((n - 1.0) * omega_prime * omega_prime + omega * omega).sqrt() / n.sqrt()
}

/// Mixing angle in `[-π/2, 0]` with `tan θ = -sqrt(N-1) Ω'/Ω`.
pub fn mixing_angle(n_atoms: usize, omega: f64, omega_prime: f64) -> Result<f64> {
    if omega == 0.0 && omega_prime == 0.0 {
        return Err(Error::UndefinedAngle);
    }
    Ok((-((n_atoms as f64) - 1.0).sqrt() * omega_prime).atan2(omega))
}

/// Instantaneous eigensystem of the effective Hamiltonian.
///
/// The bright states are `|±⟩ = (sin θ |g'_N⟩ + cos θ |g'_u⟩ ∓ |γ0⟩)/√2`,
/// the sign of the `|γ0⟩` component being the one that makes `|±⟩` the
/// `±Λ` eigenvectors on the `θ <= 0` branch.
#[derive(Debug, Clone, PartialEq)]
pub struct AdiabaticFrame {
    pub n_atoms: usize,
    pub theta: f64,
    pub theta_dot: f64,
    pub lambda: f64,
    /// Dark state `|0⟩` on `EFFECTIVE3`.
    pub zero: DVector<C64>,
    pub plus: DVector<C64>,
    pub minus: DVector<C64>,
}

impl AdiabaticFrame {
    /// Columns `|+⟩, |0⟩, |-⟩`, i.e. the map from `ADIABATIC3` to `EFFECTIVE3`.
    pub fn basis_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_columns(&[self.plus.clone(), self.zero.clone(), self.minus.clone()])
    }

    /// Populations `(|⟨+|φ⟩|², |⟨0|φ⟩|², |⟨-|φ⟩|²)` of an `EFFECTIVE3` vector.
    pub fn project(&self, amplitudes: &DVector<C64>) -> [f64; 3] {
        [&self.plus, &self.zero, &self.minus].map(|v| v.dotc(amplitudes).norm_sqr())
    }
}

pub fn adiabatic_frame(
    params: &SystemParams,
    omega: f64,
    omega_prime: f64,
    omega_dot: f64,
    omega_prime_dot: f64,
) -> Result<AdiabaticFrame> {
    check_pulses(omega, omega_prime)?;
    frame_at(
        params.n_atoms,
        omega,
        omega_prime,
        omega_dot,
        omega_prime_dot,
    )
}

pub(crate) fn frame_at(
    n_atoms: usize,
    omega: f64,
    omega_prime: f64,
    omega_dot: f64,
    omega_prime_dot: f64,
) -> Result<AdiabaticFrame> {
    let theta = mixing_angle(n_atoms, omega, omega_prime)?;
    let m = (n_atoms as f64) - 1.0;
    let theta_dot = -m.sqrt() * (omega_prime_dot * omega - omega_prime * omega_dot)
        / (omega * omega + m * omega_prime * omega_prime);
    let (s, c) = theta.sin_cos();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Ok(AdiabaticFrame {
        n_atoms,
        theta,
        theta_dot,
        lambda: gap(n_atoms, omega, omega_prime),
        zero: DVector::from_row_slice(&[re(c), ZERO, re(-s)]),
        plus: DVector::from_row_slice(&[re(h * s), re(-h), re(h * c)]),
        minus: DVector::from_row_slice(&[re(h * s), re(h), re(h * c)]),
    })
}

/// The effective Hamiltonian in the instantaneous eigenbasis
/// `{Plus, Zero, Minus}`, including the non-adiabatic coupling `θ̇/√2`.
pub fn build_heff_adiabatic(frame: &AdiabaticFrame) -> HermitianOperator {
    let k = I * frame.theta_dot * std::f64::consts::FRAC_1_SQRT_2;
    let l = re(frame.lambda);
    let m = DMatrix::from_row_slice(3, 3, &[l, k, ZERO, -k, ZERO, -k, ZERO, k, -l]);
    HermitianOperator {
        level: Level::Adiabatic3,
        n_atoms: frame.n_atoms,
        matrix: m,
    }
}

//! Basis labels and state vectors for the single-photon sector.
//!
//! Four reduction levels share the same conventions:
//!
//! * `FULL` (dimension `2N+1`): `GPrime(1..N)`, `Excited(1..N)`, `Photon`.
//! * `COLLECTIVE5`: `GPrimeU`, `GPrimeN`, `Photon`, `ExcitedU`, `ExcitedN`.
//! * `EFFECTIVE3`: `GPrimeN`, `Gamma0`, `GPrimeU`.
//! * `ADIABATIC3`: `Plus`, `Zero`, `Minus`.
//!
//! Atom `N` is always the marked atom.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{re, unitarity_defect, ONE, ZERO};
use crate::textio;

/// Tolerance on the norm of a state accepted as normalized.
pub const NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    #[serde(rename = "FULL")]
    Full,
    #[serde(rename = "COLLECTIVE5")]
    Collective5,
    #[serde(rename = "EFFECTIVE3")]
    Effective3,
    #[serde(rename = "ADIABATIC3")]
    Adiabatic3,
}

impl Level {
    pub fn dimension(self, n_atoms: usize) -> usize {
        match self {
            Level::Full => 2 * n_atoms + 1,
            Level::Collective5 => 5,
            Level::Effective3 | Level::Adiabatic3 => 3,
        }
    }

    /// Every label of this level in basis order.
    pub fn labels(self, n_atoms: usize) -> Vec<BasisLabel> {
        match self {
            Level::Full => (1..=n_atoms)
                .map(|j| BasisLabel::Full(FullTag::GPrime(j)))
                .chain((1..=n_atoms).map(|j| BasisLabel::Full(FullTag::Excited(j))))
                .chain(std::iter::once(BasisLabel::Full(FullTag::Photon)))
                .collect(),
            Level::Collective5 => CollectiveTag::ALL
                .iter()
                .map(|&t| BasisLabel::Collective(t))
                .collect(),
            Level::Effective3 => EffectiveTag::ALL
                .iter()
                .map(|&t| BasisLabel::Effective(t))
                .collect(),
            Level::Adiabatic3 => AdiabaticTag::ALL
                .iter()
                .map(|&t| BasisLabel::Adiabatic(t))
                .collect(),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Full => "FULL",
            Level::Collective5 => "COLLECTIVE5",
            Level::Effective3 => "EFFECTIVE3",
            Level::Adiabatic3 => "ADIABATIC3",
        })
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "FULL" => Ok(Level::Full),
            "COLLECTIVE5" => Ok(Level::Collective5),
            "EFFECTIVE3" => Ok(Level::Effective3),
            "ADIABATIC3" => Ok(Level::Adiabatic3),
            other => Err(Error::InvalidArgument(format!("unknown level `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FullTag {
    /// `|g'_j,0⟩`, atom index `j` in `1..=N`.
    GPrime(usize),
    /// `|e_j,0⟩`.
    Excited(usize),
    /// `|g,1⟩`.
    Photon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CollectiveTag {
    GPrimeU,
    GPrimeN,
    Photon,
    ExcitedU,
    ExcitedN,
}

impl CollectiveTag {
    pub const ALL: [CollectiveTag; 5] = [
        CollectiveTag::GPrimeU,
        CollectiveTag::GPrimeN,
        CollectiveTag::Photon,
        CollectiveTag::ExcitedU,
        CollectiveTag::ExcitedN,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EffectiveTag {
    GPrimeN,
    Gamma0,
    GPrimeU,
}

impl EffectiveTag {
    pub const ALL: [EffectiveTag; 3] = [
        EffectiveTag::GPrimeN,
        EffectiveTag::Gamma0,
        EffectiveTag::GPrimeU,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AdiabaticTag {
    Plus,
    Zero,
    Minus,
}

impl AdiabaticTag {
    pub const ALL: [AdiabaticTag; 3] =
        [AdiabaticTag::Plus, AdiabaticTag::Zero, AdiabaticTag::Minus];
}

/// A basis label tagged with the level it belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisLabel {
    Full(FullTag),
    Collective(CollectiveTag),
    Effective(EffectiveTag),
    Adiabatic(AdiabaticTag),
}

impl BasisLabel {
    pub fn level(self) -> Level {
        match self {
            BasisLabel::Full(_) => Level::Full,
            BasisLabel::Collective(_) => Level::Collective5,
            BasisLabel::Effective(_) => Level::Effective3,
            BasisLabel::Adiabatic(_) => Level::Adiabatic3,
        }
    }

    /// Position of the label in its level's basis order.
    pub fn index(self, n_atoms: usize) -> Result<usize> {
        let idx = match self {
            BasisLabel::Full(tag) => {
                let check = |j: usize| {
                    if (1..=n_atoms).contains(&j) {
                        Ok(j)
                    } else {
                        Err(Error::InvalidArgument(format!(
                            "atom index {j} outside 1..={n_atoms}"
                        )))
                    }
                };
                match tag {
                    FullTag::GPrime(j) => check(j)? - 1,
                    FullTag::Excited(j) => n_atoms + check(j)? - 1,
                    FullTag::Photon => 2 * n_atoms,
                }
            }
            BasisLabel::Collective(tag) => tag as usize,
            BasisLabel::Effective(tag) => tag as usize,
            BasisLabel::Adiabatic(tag) => tag as usize,
        };
        Ok(idx)
    }

    /// Parses a label string of the given level.
    pub fn parse(level: Level, s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("`{s}` is not a {level} label"));
        let atom = |prefix: &str| -> Option<usize> {
            s.strip_prefix(prefix)?
                .strip_prefix('(')?
                .strip_suffix(')')?
                .parse()
                .ok()
        };
        let label = match level {
            Level::Full => {
                if let Some(j) = atom("GPrime") {
                    BasisLabel::Full(FullTag::GPrime(j))
                } else if let Some(j) = atom("Excited") {
                    BasisLabel::Full(FullTag::Excited(j))
                } else if s == "Photon" {
                    BasisLabel::Full(FullTag::Photon)
                } else {
                    return Err(bad());
                }
            }
            Level::Collective5 => BasisLabel::Collective(match s {
                "GPrimeU" => CollectiveTag::GPrimeU,
                "GPrimeN" => CollectiveTag::GPrimeN,
                "Photon" => CollectiveTag::Photon,
                "ExcitedU" => CollectiveTag::ExcitedU,
                "ExcitedN" => CollectiveTag::ExcitedN,
                _ => return Err(bad()),
            }),
            Level::Effective3 => BasisLabel::Effective(match s {
                "GPrimeN" => EffectiveTag::GPrimeN,
                "Gamma0" => EffectiveTag::Gamma0,
                "GPrimeU" => EffectiveTag::GPrimeU,
                _ => return Err(bad()),
            }),
            Level::Adiabatic3 => BasisLabel::Adiabatic(match s {
                "Plus" => AdiabaticTag::Plus,
                "Zero" => AdiabaticTag::Zero,
                "Minus" => AdiabaticTag::Minus,
                _ => return Err(bad()),
            }),
        };
        Ok(label)
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisLabel::Full(FullTag::GPrime(j)) => write!(f, "GPrime({j})"),
            BasisLabel::Full(FullTag::Excited(j)) => write!(f, "Excited({j})"),
            BasisLabel::Full(FullTag::Photon) => f.write_str("Photon"),
            BasisLabel::Collective(t) => write!(f, "{t:?}"),
            BasisLabel::Effective(t) => write!(f, "{t:?}"),
            BasisLabel::Adiabatic(t) => write!(f, "{t:?}"),
        }
    }
}

fn check_atoms(n_atoms: usize) -> Result<()> {
    if n_atoms < 2 {
        return Err(Error::param(
            "n_atoms",
            format!("need N >= 2, got {n_atoms}"),
        ));
    }
    Ok(())
}

/// A normalized pure state over one level's basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    level: Level,
    n_atoms: usize,
    amplitudes: DVector<C64>,
}

impl StateVector {
    pub fn new(level: Level, n_atoms: usize, amplitudes: DVector<C64>) -> Result<Self> {
        check_atoms(n_atoms)?;
        let dim = level.dimension(n_atoms);
        if amplitudes.len() != dim {
            return Err(Error::InvalidArgument(format!(
                "{level} state needs {dim} amplitudes, got {}",
                amplitudes.len()
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "state norm {norm} is not 1"
            )));
        }
        Ok(Self {
            level,
            n_atoms,
            amplitudes,
        })
    }

    /// Skips the normalization check; used by propagators that track the
    /// drift themselves.
    pub(crate) fn from_raw(level: Level, n_atoms: usize, amplitudes: DVector<C64>) -> Self {
        Self {
            level,
            n_atoms,
            amplitudes,
        }
    }

    pub fn basis_state(level: Level, n_atoms: usize, label: BasisLabel) -> Result<Self> {
        check_atoms(n_atoms)?;
        if label.level() != level {
            return Err(Error::InvalidArgument(format!(
                "label {label} does not belong to {level}"
            )));
        }
        let mut amps = DVector::from_element(level.dimension(n_atoms), ZERO);
        amps[label.index(n_atoms)?] = ONE;
        Self::new(level, n_atoms, amps)
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn amplitude(&self, label: BasisLabel) -> Result<C64> {
        if label.level() != self.level {
            return Err(Error::InvalidArgument(format!(
                "label {label} does not belong to {}",
                self.level
            )));
        }
        Ok(self.amplitudes[label.index(self.n_atoms)?])
    }

    pub fn population(&self, label: BasisLabel) -> Result<f64> {
        Ok(self.amplitude(label)?.norm_sqr())
    }

    /// Populations in basis order.
    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn with_global_phase(&self, phase: f64) -> Self {
        let factor = C64::from_polar(1.0, phase);
        Self::from_raw(
            self.level,
            self.n_atoms,
            self.amplitudes.map(|a| a * factor),
        )
    }

    /// Column text: `index label re im`, one basis label per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# level: {}\n# n_atoms: {}\n",
            self.level, self.n_atoms
        ));
        out.push_str("# columns: index label re im\n");
        for (i, (label, a)) in self
            .level
            .labels(self.n_atoms)
            .iter()
            .zip(self.amplitudes.iter())
            .enumerate()
        {
            out.push_str(&format!(
                "{i} {label} {} {}\n",
                textio::num(a.re),
                textio::num(a.im)
            ));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let header = textio::Header::parse(text)?;
        let level: Level = header.require("level")?.parse()?;
        let n_atoms: usize = header.require_parsed("n_atoms")?;
        check_atoms(n_atoms)?;
        let labels = level.labels(n_atoms);
        let mut amps = DVector::from_element(labels.len(), ZERO);
        let mut seen = 0;
        for (line_no, fields) in textio::data_rows(text) {
            let err = |reason: String| Error::Parse {
                line: line_no,
                reason,
            };
            if fields.len() != 4 {
                return Err(err(format!("expected 4 columns, found {}", fields.len())));
            }
            let index: usize = fields[0].parse().map_err(|_| err("bad index".into()))?;
            if index >= labels.len() {
                return Err(err(format!("index {index} out of range")));
            }
            let label = BasisLabel::parse(level, fields[1])?;
            if label != labels[index] {
                return Err(err(format!("label {label} does not sit at index {index}")));
            }
            let re: f64 = textio::parse_num(fields[2]).map_err(err)?;
            let im: f64 = textio::parse_num(fields[3]).map_err(err)?;
            amps[index] = C64::new(re, im);
            seen += 1;
        }
        if seen != labels.len() {
            return Err(Error::Parse {
                line: 0,
                reason: format!("expected {} rows, found {seen}", labels.len()),
            });
        }
        Self::new(level, n_atoms, amps)
    }
}

/// Squared modulus of the amplitude on `label`.
pub fn population(state: &StateVector, label: BasisLabel) -> Result<f64> {
    state.population(label)
}

/// `|w⟩ = N^{-1/2} Σ_j |g'_j,0⟩` on the full basis.
pub fn uniform_superposition(n_atoms: usize) -> Result<StateVector> {
    check_atoms(n_atoms)?;
    let a = re(1.0 / (n_atoms as f64).sqrt());
    let amps = DVector::from_fn(Level::Full.dimension(n_atoms), |i, _| {
        if i < n_atoms {
            a
        } else {
            ZERO
        }
    });
    StateVector::new(Level::Full, n_atoms, amps)
}

/// `|w⟩` expressed on a reduced level (`COLLECTIVE5` or `EFFECTIVE3`).
pub fn uniform_superposition_at(level: Level, n_atoms: usize) -> Result<StateVector> {
    check_atoms(n_atoms)?;
    let n = n_atoms as f64;
    let (marked, unmarked) = (re(1.0 / n.sqrt()), re((1.0 - 1.0 / n).sqrt()));
    let amps = match level {
        Level::Full => return uniform_superposition(n_atoms),
        Level::Collective5 => DVector::from_row_slice(&[unmarked, marked, ZERO, ZERO, ZERO]),
        Level::Effective3 => DVector::from_row_slice(&[marked, ZERO, unmarked]),
        Level::Adiabatic3 => {
            return Err(Error::InvalidArgument(
                "the adiabatic basis is time dependent; build |w⟩ on EFFECTIVE3".into(),
            ))
        }
    };
    StateVector::new(level, n_atoms, amps)
}

/// Label of the marked state `|g'_N,0⟩` at a level.
pub fn marked_label(level: Level, n_atoms: usize) -> Result<BasisLabel> {
    match level {
        Level::Full => Ok(BasisLabel::Full(FullTag::GPrime(n_atoms))),
        Level::Collective5 => Ok(BasisLabel::Collective(CollectiveTag::GPrimeN)),
        Level::Effective3 => Ok(BasisLabel::Effective(EffectiveTag::GPrimeN)),
        Level::Adiabatic3 => Err(Error::InvalidArgument(
            "no fixed marked label in ADIABATIC3".into(),
        )),
    }
}

/// The marked state `|m⟩ = |g'_N,0⟩`.
pub fn marked_state(level: Level, n_atoms: usize) -> Result<StateVector> {
    StateVector::basis_state(level, n_atoms, marked_label(level, n_atoms)?)
}

/// The unitary `U` on the unmarked atoms, one of whose columns is uniform,
/// and the induced transformation `W` on the full basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectiveTransform {
    mixing: DMatrix<C64>,
    uniform_column: usize,
}

impl CollectiveTransform {
    const TOLERANCE: f64 = 1e-12;

    /// Real orthogonal `U` with the normalized all-ones vector as column 0,
    /// completed by Gram–Schmidt over the standard basis.
    pub fn standard(n_atoms: usize) -> Result<Self> {
        check_atoms(n_atoms)?;
        let m = n_atoms - 1;
        let mut basis: Vec<DVector<f64>> = vec![DVector::from_element(m, 1.0 / (m as f64).sqrt())];
        for k in 0..m {
            if basis.len() == m {
                break;
            }
            let mut v = DVector::from_fn(m, |i, _| if i == k { 1.0 } else { 0.0 });
            // two passes keep the completion orthogonal to rounding
            for _ in 0..2 {
                for b in &basis {
                    let p = b.dot(&v);
                    v.axpy(-p, b, 1.0);
                }
            }
            let norm = v.norm();
            if norm > 1e-8 {
                basis.push(v / norm);
            }
        }
        let mixing = DMatrix::from_fn(m, m, |r, c| re(basis[c][r]));
        Ok(Self {
            mixing,
            uniform_column: 0,
        })
    }

    /// Validates an arbitrary `U`: unitary, with one column equal to
    /// `(N-1)^{-1/2}` in every entry.
    pub fn new(mixing: DMatrix<C64>) -> Result<Self> {
        if !mixing.is_square() || mixing.nrows() == 0 {
            return Err(Error::InvalidTransform(
                "U must be a non-empty square matrix".into(),
            ));
        }
        let m = mixing.nrows();
        let defect = unitarity_defect(&mixing);
        if defect > Self::TOLERANCE {
            return Err(Error::InvalidTransform(format!(
                "U is not unitary (defect {defect:.3e})"
            )));
        }
        let target = 1.0 / (m as f64).sqrt();
        let uniform_column = (0..m)
            .find(|&c| {
                mixing
                    .column(c)
                    .iter()
                    .all(|z| (z - re(target)).norm() <= Self::TOLERANCE)
            })
            .ok_or_else(|| {
                Error::InvalidTransform(
                    "U has no column with all entries equal to (N-1)^{-1/2}".into(),
                )
            })?;
        Ok(Self {
            mixing,
            uniform_column,
        })
    }

    pub fn n_atoms(&self) -> usize {
        self.mixing.nrows() + 1
    }

    pub fn mixing(&self) -> &DMatrix<C64> {
        &self.mixing
    }

    pub fn uniform_column(&self) -> usize {
        self.uniform_column
    }

    /// `W` on the full basis; columns are the transformed basis vectors.
    pub fn w_matrix(&self) -> DMatrix<C64> {
        let n = self.n_atoms();
        let m = n - 1;
        let mut w = DMatrix::from_element(2 * n + 1, 2 * n + 1, ZERO);
        for r in 0..m {
            for c in 0..m {
                w[(r, c)] = self.mixing[(r, c)];
                w[(n + r, n + c)] = self.mixing[(r, c)];
            }
        }
        w[(n - 1, n - 1)] = ONE;
        w[(2 * n - 1, 2 * n - 1)] = ONE;
        w[(2 * n, 2 * n)] = ONE;
        w
    }

    /// Positions, in the `W`-rotated full basis, of the five coupled
    /// collective labels in `COLLECTIVE5` order.
    pub fn coupled_indices(&self) -> [usize; 5] {
        let n = self.n_atoms();
        let u = self.uniform_column;
        [u, n - 1, 2 * n, n + u, 2 * n - 1]
    }
}

/// Amplitudes on the five collective labels plus the norm of everything
/// outside that subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectiveDecomposition {
    pub n_atoms: usize,
    pub amplitudes: DVector<C64>,
    pub residual: f64,
}

impl CollectiveDecomposition {
    /// The `COLLECTIVE5` state, provided the residual is negligible.
    pub fn to_state(&self) -> Result<StateVector> {
        if self.residual > NORM_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "state leaves the collective subspace (residual {:.3e})",
                self.residual
            )));
        }
        StateVector::new(Level::Collective5, self.n_atoms, self.amplitudes.clone())
    }
}

pub fn full_to_collective(
    state: &StateVector,
    transform: &CollectiveTransform,
) -> Result<CollectiveDecomposition> {
    if state.level() != Level::Full {
        return Err(Error::InvalidArgument(format!(
            "expected a FULL state, got {}",
            state.level()
        )));
    }
    if state.n_atoms() != transform.n_atoms() {
        return Err(Error::InvalidTransform(format!(
            "transform is for N={}, state has N={}",
            transform.n_atoms(),
            state.n_atoms()
        )));
    }
    let rotated = transform.w_matrix().adjoint() * state.amplitudes();
    let idx = transform.coupled_indices();
    let amplitudes = DVector::from_iterator(5, idx.iter().map(|&i| rotated[i]));
    let residual = rotated
        .iter()
        .enumerate()
        .filter(|(i, _)| !idx.contains(i))
        .map(|(_, a)| a.norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(CollectiveDecomposition {
        n_atoms: state.n_atoms(),
        amplitudes,
        residual,
    })
}

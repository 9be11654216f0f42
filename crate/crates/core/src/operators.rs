//! Truncated Fock ⊗ spin state space and the Jaynes-Cummings operators.
//!
//! Basis states `|j, s⟩` carry a photon number `0 ≤ j ≤ Λ` and an atomic
//! level `s ∈ {↑, ↓}`. Matrices are indexed with photon number ascending and
//! `↑` before `↓` inside each photon sector, so `|j, ↑⟩ ↦ 2j` and
//! `|j, ↓⟩ ↦ 2j + 1`.
//!
//! Truncation only affects the top photon sector: `a†|Λ⟩ = 0`, so identities
//! such as `[a, a†] = 1` hold on photon sectors `0..Λ` but not at `j = Λ`.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

/// Human-readable description of the basis ordering written into dumps.
pub const BASIS_ORDER: &str = "photon-major: index = 2*j + (0 for up, 1 for down)";

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Physical parameters of a single JCM realisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Coupling `g` (inverse time).
    pub coupling: f64,
    /// Detuning `Δ = ω_a − ω`.
    pub detuning: f64,
    /// Maximum photon occupation `Λ` retained in the truncated space.
    pub cutoff: usize,
    /// Mode frequency `ω`; only enters `H₀`.
    pub mode_frequency: f64,
}

impl ModelParams {
    pub fn new(coupling: f64, detuning: f64, cutoff: usize) -> Result<Self> {
        let params = Self {
            coupling,
            detuning,
            cutoff,
            mode_frequency: 0.0,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn resonant(coupling: f64, cutoff: usize) -> Result<Self> {
        Self::new(coupling, 0.0, cutoff)
    }

    pub fn with_mode_frequency(mut self, omega: f64) -> Result<Self> {
        self.mode_frequency = omega;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        validate_cutoff(self.cutoff)?;
        ensure(
            self.coupling.is_finite(),
            "g",
            "must be finite",
            self.coupling,
        )?;
        ensure(
            self.detuning.is_finite(),
            "delta",
            "must be finite",
            self.detuning,
        )?;
        ensure(
            self.mode_frequency.is_finite(),
            "omega",
            "must be finite",
            self.mode_frequency,
        )
    }
}

pub(crate) fn validate_cutoff(cutoff: usize) -> Result<()> {
    ensure(cutoff >= 2, "lambda_cutoff", "must be >= 2", cutoff as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AtomLevel {
    Up,
    Down,
}

impl fmt::Display for AtomLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AtomLevel::Up => f.write_str("up"),
            AtomLevel::Down => f.write_str("down"),
        }
    }
}

/// Basis state `|j, level⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisLabel {
    pub photons: usize,
    pub level: AtomLevel,
}

impl BasisLabel {
    pub const fn up(photons: usize) -> Self {
        Self {
            photons,
            level: AtomLevel::Up,
        }
    }

    pub const fn down(photons: usize) -> Self {
        Self {
            photons,
            level: AtomLevel::Down,
        }
    }

    pub const fn index(self) -> usize {
        match self.level {
            AtomLevel::Up => 2 * self.photons,
            AtomLevel::Down => 2 * self.photons + 1,
        }
    }

    pub const fn from_index(index: usize) -> Self {
        let photons = index / 2;
        if index.is_multiple_of(2) {
            Self::up(photons)
        } else {
            Self::down(photons)
        }
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arrow = match self.level {
            AtomLevel::Up => '↑',
            AtomLevel::Down => '↓',
        };
        write!(f, "|{},{}⟩", self.photons, arrow)
    }
}

/// Dense complex matrix on the truncated `Fock ⊗ spin` space.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    data: Array2<Complex64>,
    cutoff: usize,
    truncation_tainted: bool,
}

impl OperatorMatrix {
    pub fn dim_for(cutoff: usize) -> usize {
        2 * (cutoff + 1)
    }

    /// Wraps a raw matrix. Panics if the shape does not match `2(Λ+1)`.
    pub fn from_array(data: Array2<Complex64>, cutoff: usize, truncation_tainted: bool) -> Self {
        let dim = Self::dim_for(cutoff);
        assert_eq!(
            data.dim(),
            (dim, dim),
            "operator shape must be 2(Λ+1) square"
        );
        Self {
            data,
            cutoff,
            truncation_tainted,
        }
    }

    pub fn zeros(cutoff: usize) -> Self {
        let dim = Self::dim_for(cutoff);
        Self::from_array(Array2::zeros((dim, dim)), cutoff, false)
    }

    pub fn identity(cutoff: usize) -> Self {
        let dim = Self::dim_for(cutoff);
        Self::from_array(Array2::eye(dim), cutoff, false)
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Whether the top photon sector may differ from the untruncated operator.
    pub fn truncation_tainted(&self) -> bool {
        self.truncation_tainted
    }

    pub fn as_array(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn into_array(self) -> Array2<Complex64> {
        self.data
    }

    /// `⟨bra| O |ket⟩`.
    pub fn element(&self, bra: BasisLabel, ket: BasisLabel) -> Complex64 {
        self.data[[bra.index(), ket.index()]]
    }

    pub(crate) fn set(&mut self, bra: BasisLabel, ket: BasisLabel, value: Complex64) {
        self.data[[bra.index(), ket.index()]] = value;
    }

    pub fn dagger(&self) -> Self {
        let data = self.data.t().mapv(|z| z.conj());
        Self::from_array(data, self.cutoff, self.truncation_tainted)
    }

    pub fn dot(&self, rhs: &Self) -> Self {
        assert_eq!(self.cutoff, rhs.cutoff, "cutoff mismatch");
        Self::from_array(
            self.data.dot(&rhs.data),
            self.cutoff,
            self.truncation_tainted || rhs.truncation_tainted,
        )
    }

    /// `self + factor * rhs`.
    pub fn add_scaled(&self, factor: Complex64, rhs: &Self) -> Self {
        assert_eq!(self.cutoff, rhs.cutoff, "cutoff mismatch");
        let data = &self.data + &rhs.data.mapv(|z| z * factor);
        Self::from_array(
            data,
            self.cutoff,
            self.truncation_tainted || rhs.truncation_tainted,
        )
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self::from_array(
            self.data.mapv(|z| z * factor),
            self.cutoff,
            self.truncation_tainted,
        )
    }

    /// Photon number of the highest sector on which exactness is asserted.
    pub fn guard_limit(&self) -> usize {
        self.cutoff - 2
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest entrywise `|self − other|` over states with photon number
    /// `≤ max_photons` (both row and column).
    pub fn max_abs_diff_within(&self, other: &Self, max_photons: usize) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        let n = (2 * (max_photons + 1)).min(self.dim());
        let mut worst = 0.0_f64;
        for r in 0..n {
            for c in 0..n {
                worst = worst.max((self.data[[r, c]] - other.data[[r, c]]).norm());
            }
        }
        worst
    }

    /// Largest entrywise `|self − other|` on the guarded subspace (photons `≤ Λ−2`).
    pub fn max_abs_diff_guarded(&self, other: &Self) -> f64 {
        self.max_abs_diff_within(other, self.guard_limit())
    }

    /// Largest entrywise modulus on the guarded subspace.
    pub fn max_abs_guarded(&self) -> f64 {
        self.max_abs_diff_guarded(&Self::zeros(self.cutoff))
    }

    /// `‖U†U − 1‖_max` restricted to the guarded subspace.
    pub fn unitarity_defect_guarded(&self) -> f64 {
        self.dagger()
            .dot(self)
            .max_abs_diff_guarded(&Self::identity(self.cutoff))
    }

    /// Largest `|G − G†|` entry.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((self.data[[r, c]] - self.data[[c, r]].conj()).norm());
            }
        }
        worst
    }

    pub fn to_dump(&self) -> OperatorDump {
        OperatorDump {
            dim: self.dim(),
            lambda_cutoff: self.cutoff,
            basis_order: BASIS_ORDER.to_string(),
            truncation_tainted: self.truncation_tainted,
            entries: self.data.iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn from_dump(dump: &OperatorDump) -> Result<Self> {
        validate_cutoff(dump.lambda_cutoff)?;
        let dim = Self::dim_for(dump.lambda_cutoff);
        if dump.dim != dim || dump.entries.len() != dim * dim {
            return Err(Error::InvalidParameter {
                name: "entries",
                constraint: "dump must hold dim*dim entries with dim = 2(lambda_cutoff+1)",
                value: dump.entries.len() as f64,
            });
        }
        let data = Array2::from_shape_vec(
            (dim, dim),
            dump.entries
                .iter()
                .map(|&[re, im]| Complex64::new(re, im))
                .collect(),
        )
        .expect("shape checked above");
        Ok(Self::from_array(
            data,
            dump.lambda_cutoff,
            dump.truncation_tainted,
        ))
    }
}

/// JSON representation of an operator, entries row-major as `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorDump {
    pub dim: usize,
    pub lambda_cutoff: usize,
    pub basis_order: String,
    #[serde(default)]
    pub truncation_tainted: bool,
    pub entries: Vec<[f64; 2]>,
}

/// Names of the operators produced by [`build_operators`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorName {
    A,
    ADagger,
    Number,
    TauPlus,
    TauMinus,
    Tau3,
    #[serde(rename = "V")]
    V,
    #[serde(rename = "H0")]
    H0,
}

impl OperatorName {
    pub const ALL: [OperatorName; 8] = [
        OperatorName::A,
        OperatorName::ADagger,
        OperatorName::Number,
        OperatorName::TauPlus,
        OperatorName::TauMinus,
        OperatorName::Tau3,
        OperatorName::V,
        OperatorName::H0,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OperatorName::A => "a",
            OperatorName::ADagger => "a_dagger",
            OperatorName::Number => "number",
            OperatorName::TauPlus => "tau_plus",
            OperatorName::TauMinus => "tau_minus",
            OperatorName::Tau3 => "tau_3",
            OperatorName::V => "V",
            OperatorName::H0 => "H0",
        }
    }
}

impl fmt::Display for OperatorName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OperatorName {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        OperatorName::ALL
            .into_iter()
            .find(|name| name.as_str() == s)
            .ok_or_else(|| format!("unknown operator `{s}`"))
    }
}

/// The JCM operator set on a truncated space.
#[derive(Debug, Clone, PartialEq)]
pub struct JcmOperators {
    pub a: OperatorMatrix,
    pub a_dagger: OperatorMatrix,
    pub number: OperatorMatrix,
    pub tau_plus: OperatorMatrix,
    pub tau_minus: OperatorMatrix,
    pub tau_3: OperatorMatrix,
    pub v: OperatorMatrix,
    pub h0: OperatorMatrix,
}

impl JcmOperators {
    pub fn get(&self, name: OperatorName) -> &OperatorMatrix {
        match name {
            OperatorName::A => &self.a,
            OperatorName::ADagger => &self.a_dagger,
            OperatorName::Number => &self.number,
            OperatorName::TauPlus => &self.tau_plus,
            OperatorName::TauMinus => &self.tau_minus,
            OperatorName::Tau3 => &self.tau_3,
            OperatorName::V => &self.v,
            OperatorName::H0 => &self.h0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (OperatorName, &OperatorMatrix)> {
        OperatorName::ALL
            .into_iter()
            .map(move |name| (name, self.get(name)))
    }
}

/// Builds `a, a†, 𝗇, τ₊, τ₋, τ₃, V = a†τ₋ + aτ₊` and `H₀ = ω𝗇 + ω_a τ₃`
/// with `ω_a = ω + Δ`.
pub fn build_operators(params: &ModelParams) -> Result<JcmOperators> {
    params.validate()?;
    let cutoff = params.cutoff;

    // Photon-only operators lifted with the atomic identity.
    let mut a = OperatorMatrix::zeros(cutoff);
    let mut number = OperatorMatrix::zeros(cutoff);
    for j in 0..=cutoff {
        for level in [AtomLevel::Up, AtomLevel::Down] {
            let ket = BasisLabel { photons: j, level };
            number.set(ket, ket, Complex64::new(j as f64, 0.0));
            if j > 0 {
                let bra = BasisLabel {
                    photons: j - 1,
                    level,
                };
                a.set(bra, ket, Complex64::new((j as f64).sqrt(), 0.0));
            }
        }
    }
    let a_dagger = a.dagger();

    let mut tau_plus = OperatorMatrix::zeros(cutoff);
    let mut tau_3 = OperatorMatrix::zeros(cutoff);
    for j in 0..=cutoff {
        tau_plus.set(BasisLabel::up(j), BasisLabel::down(j), ONE);
        tau_3.set(
            BasisLabel::up(j),
            BasisLabel::up(j),
            Complex64::new(0.5, 0.0),
        );
        tau_3.set(
            BasisLabel::down(j),
            BasisLabel::down(j),
            Complex64::new(-0.5, 0.0),
        );
    }
    let tau_minus = tau_plus.dagger();

    let mut v = a_dagger.dot(&tau_minus).add_scaled(ONE, &a.dot(&tau_plus));
    v.truncation_tainted = true;

    let omega = params.mode_frequency;
    let omega_a = omega + params.detuning;
    let h0 = number
        .scale(Complex64::new(omega, 0.0))
        .add_scaled(Complex64::new(omega_a, 0.0), &tau_3);

    let mut a_dagger = a_dagger;
    a_dagger.truncation_tainted = true;
    let mut a = a;
    a.truncation_tainted = true;

    Ok(JcmOperators {
        a,
        a_dagger,
        number,
        tau_plus,
        tau_minus,
        tau_3,
        v,
        h0,
    })
}

/// Commutator `[x, y] = xy − yx`.
pub fn commutator(x: &OperatorMatrix, y: &OperatorMatrix) -> OperatorMatrix {
    x.dot(y).add_scaled(-ONE, &y.dot(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ops(cutoff: usize) -> JcmOperators {
        build_operators(&ModelParams::resonant(1.0, cutoff).unwrap()).unwrap()
    }

    #[test]
    fn rejects_small_cutoff() {
        assert!(ModelParams::new(1.0, 0.0, 1).is_err());
        assert!(ModelParams::new(f64::NAN, 0.0, 4).is_err());
    }

    #[test]
    fn single_quantum_vertex() {
        let ops = ops(2);
        let z = ops.v.element(BasisLabel::down(1), BasisLabel::up(0));
        assert_eq!(z, ONE);
    }

    #[test]
    fn vertex_on_three_photons() {
        let ops = ops(8);
        let col = BasisLabel::up(3).index();
        for row in 0..ops.v.dim() {
            let expected = if row == BasisLabel::down(4).index() {
                Complex64::new(2.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            assert!((ops.v.as_array()[[row, col]] - expected).norm() < 1e-15);
        }
    }

    #[test]
    fn canonical_commutator_below_cutoff() {
        let ops = ops(8);
        let c = commutator(&ops.a, &ops.a_dagger);
        assert!(c.max_abs_diff_within(&OperatorMatrix::identity(8), 7) < 1e-13);
        // The top sector is where truncation shows up.
        let top = c.element(BasisLabel::up(8), BasisLabel::up(8));
        assert!((top - Complex64::new(-8.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn spin_algebra() {
        let ops = ops(4);
        let lhs = ops.tau_3.scale(Complex64::new(2.0, 0.0));
        let rhs = commutator(&ops.tau_plus, &ops.tau_minus);
        assert!(lhs.max_abs_diff_within(&rhs, 4) < 1e-15);
    }

    #[test]
    fn vertex_is_hermitian() {
        let ops = ops(6);
        assert_eq!(ops.v.hermiticity_defect(), 0.0);
    }

    #[test]
    fn free_hamiltonian_uses_atomic_frequency() {
        let params = ModelParams::new(0.3, 0.5, 3)
            .unwrap()
            .with_mode_frequency(2.0)
            .unwrap();
        let ops = build_operators(&params).unwrap();
        let e = ops.h0.element(BasisLabel::up(1), BasisLabel::up(1));
        assert!((e.re - (2.0 + 0.5 * 2.5)).abs() < 1e-15);
    }

    #[test]
    fn basis_index_round_trip() {
        for i in 0..20 {
            assert_eq!(BasisLabel::from_index(i).index(), i);
        }
        assert_eq!(BasisLabel::down(3).index(), 7);
    }

    #[test]
    fn dump_round_trip() {
        let ops = ops(3);
        let dump = ops.v.to_dump();
        assert_eq!(dump.dim, 8);
        assert_eq!(dump.entries.len(), 64);
        let json = serde_json::to_string(&dump).unwrap();
        let back: OperatorDump = serde_json::from_str(&json).unwrap();
        assert_eq!(OperatorMatrix::from_dump(&back).unwrap(), ops.v);
    }

    #[test]
    fn operator_names_parse() {
        for name in OperatorName::ALL {
            assert_eq!(name.as_str().parse::<OperatorName>().unwrap(), name);
        }
        assert!("b".parse::<OperatorName>().is_err());
    }
}

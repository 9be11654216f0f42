//! Fixing the arcsin branch of the bare coupling with a second measured
//! probability `P_j = sin²(g₀√(j+1))`.
//!
//! For `√(j+1) ∈ ℤ` every branch predicts the same `P_j` once `P_0 = 1`, so such
//! a measurement carries no information. Otherwise `√(j+1)` is irrational and
//! the unit-decay couplings `(n + ½)π` give pairwise different `P_j`.

use serde::{Deserialize, Serialize};

use crate::coupling::{
    check_probability, renormalised_coupling_branches, BranchIndex, BranchSign, DEFAULT_N_MAX,
};
use crate::error::{ensure, Error, Result};
use crate::evolution::amplitude;

/// A measured scattering probability with its uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub j: u64,
    #[serde(rename = "p")]
    pub probability: f64,
    #[serde(rename = "tol")]
    pub tolerance: f64,
}

impl Measurement {
    pub fn new(j: u64, probability: f64, tolerance: f64) -> Result<Self> {
        let m = Self {
            j,
            probability,
            tolerance,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        check_probability(self.probability)?;
        ensure(
            self.tolerance.is_finite() && self.tolerance > 0.0,
            "tol",
            "must be finite and > 0",
            self.tolerance,
        )
    }

    fn accepts(&self, g0: f64) -> bool {
        let predicted = amplitude(self.j as usize, g0).powi(2);
        (predicted - self.probability).abs() <= self.tolerance
    }
}

/// `true` iff `j + 1` is a perfect square.
pub fn branch_degenerate(j: u64) -> bool {
    let m = u128::from(j) + 1;
    let r = m.isqrt();
    r * r == m
}

/// `sin²(√(j+1)(n+½)π)`, the spectrum of the unit-decay branches `g₀ = (n+½)π`.
pub fn unit_decay_spectrum(n: u32, j: u64) -> f64 {
    // sin²(πx) has period 1 in x, so reduce before multiplying by π.
    let x = ((j + 1) as f64).sqrt() * (f64::from(n) + 0.5);
    (std::f64::consts::PI * x.fract()).sin().powi(2)
}

/// A branch compatible with every measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistentBranch {
    pub n: u32,
    pub sign: BranchSign,
    pub g0: f64,
}

impl ConsistentBranch {
    pub fn index(&self) -> BranchIndex {
        BranchIndex::new(self.n, self.sign)
    }
}

/// Branches `n = 0..=n_max` whose `P_0` and `P_j` both lie within tolerance.
///
/// An empty list means the measurements are inconsistent; more than one
/// entry means the tolerance is too loose or `second.j` is degenerate.
pub fn identify_branch(
    first: &Measurement,
    second: &Measurement,
    n_max: u32,
) -> Result<Vec<ConsistentBranch>> {
    identify_branch_all(&[*first, *second], n_max)
}

/// Like [`identify_branch`] for any number of measurements; the first one
/// must be at `j = 0`.
pub fn identify_branch_all(
    measurements: &[Measurement],
    n_max: u32,
) -> Result<Vec<ConsistentBranch>> {
    let Some(first) = measurements.first() else {
        return Err(Error::InvalidMeasurement(
            "at least one measurement is required".into(),
        ));
    };
    if first.j != 0 {
        return Err(Error::InvalidMeasurement(format!(
            "first measurement must be at j = 0, got j = {}",
            first.j
        )));
    }
    for m in measurements {
        m.validate()?;
    }
    Ok(renormalised_coupling_branches(first.probability, n_max)?
        .into_iter()
        .filter(|&(_, g0)| measurements.iter().all(|m| m.accepts(g0)))
        .map(|(b, g0)| ConsistentBranch {
            n: b.n,
            sign: b.sign,
            g0,
        })
        .collect())
}

/// Smallest `|P_j(n) − P_j(n′)|` over unit-decay branches `0 ≤ n < n′ ≤ n_max`.
pub fn pairwise_distinctness(j: u64, n_max: u32) -> Result<f64> {
    if branch_degenerate(j) {
        return Err(Error::DegenerateIndex(j));
    }
    ensure(n_max >= 1, "n_max", "must be >= 1", f64::from(n_max))?;
    let values: Vec<f64> = (0..=n_max).map(|n| unit_decay_spectrum(n, j)).collect();
    let mut gap = f64::INFINITY;
    for (i, a) in values.iter().enumerate() {
        for b in &values[i + 1..] {
            gap = gap.min((a - b).abs());
        }
    }
    Ok(gap)
}

/// JSON request: `{measurements: [{j, p, tol}], n_max}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchIdRequest {
    pub measurements: Vec<Measurement>,
    #[serde(default = "default_n_max")]
    pub n_max: u32,
}

fn default_n_max() -> u32 {
    DEFAULT_N_MAX
}

/// JSON response: `{consistent: [{n, sign, g0}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchIdResponse {
    pub consistent: Vec<ConsistentBranch>,
}

impl BranchIdRequest {
    pub fn evaluate(&self) -> Result<BranchIdResponse> {
        Ok(BranchIdResponse {
            consistent: identify_branch_all(&self.measurements, self.n_max)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::spectrum;
    use std::f64::consts::PI;

    fn m(j: u64, p: f64, tol: f64) -> Measurement {
        Measurement::new(j, p, tol).unwrap()
    }

    #[test]
    fn perfect_squares() {
        assert!(branch_degenerate(0));
        assert!(!branch_degenerate(1));
        assert!(branch_degenerate(3));
        assert!(branch_degenerate(8));
        assert!(!branch_degenerate(14));
        assert!(!branch_degenerate(u64::MAX - 1));
        // (2³² − 1)² − 1
        assert!(branch_degenerate(18_446_744_065_119_617_024));
    }

    #[test]
    fn unit_decay_values() {
        for n in 0..20 {
            assert_eq!(unit_decay_spectrum(n, 0), 1.0);
            assert_eq!(unit_decay_spectrum(n, 3), 0.0);
        }
        let direct = (2.0_f64.sqrt() * PI / 2.0).sin().powi(2);
        assert!((unit_decay_spectrum(0, 1) - direct).abs() < 1e-14);
        assert!((unit_decay_spectrum(0, 1) - 0.633_127_671_020_707_8).abs() < 1e-14);
    }

    #[test]
    fn unique_unit_decay_branch() {
        let p1 = (3.0 * 2.0_f64.sqrt() * PI / 2.0).sin().powi(2);
        let found = identify_branch(&m(0, 1.0, 1e-9), &m(1, p1, 1e-9), 10).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].n, 1);
        assert!((found[0].g0 - 1.5 * PI).abs() < 1e-12);
    }

    #[test]
    fn degenerate_second_measurement_keeps_everything() {
        let found = identify_branch(&m(0, 1.0, 1e-9), &m(3, 0.0, 1e-9), 10).unwrap();
        assert_eq!(found.len(), 11);
        let ns: Vec<u32> = found.iter().map(|b| b.n).collect();
        assert_eq!(ns, (0..=10).collect::<Vec<_>>());
    }

    #[test]
    fn weak_coupling_branch() {
        let found = identify_branch(&m(0, 0.1, 1e-9), &m(1, 0.19316, 1e-4), 10).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].index(), BranchIndex::new(0, BranchSign::Plus));
    }

    #[test]
    fn intersection_of_tolerances() {
        let table = spectrum(BranchIndex::new(2, BranchSign::Minus), 0.3, 4).unwrap();
        let p2 = table.probabilities[2];
        let found = identify_branch(&m(0, 0.3, 1e-9), &m(2, p2, 1e-10), 10).unwrap();
        assert!(found
            .iter()
            .any(|b| b.index() == BranchIndex::new(2, BranchSign::Minus)));
        // A second measurement no branch predicts empties the list.
        assert!(
            identify_branch(&m(0, 0.3, 1e-9), &m(2, p2 + 0.05, 1e-3), 10)
                .unwrap()
                .is_empty()
        );
        assert!(identify_branch(&m(1, 0.3, 1e-9), &m(2, p2, 1e-3), 10).is_err());
        assert!(Measurement::new(1, 1.2, 1e-3).is_err());
        assert!(Measurement::new(1, 0.2, 0.0).is_err());
    }

    #[test]
    fn distinctness() {
        let expected = (unit_decay_spectrum(0, 1) - unit_decay_spectrum(1, 1)).abs();
        assert_eq!(pairwise_distinctness(1, 1).unwrap(), expected);
        // 30-digit evaluation of the minimum over n < n′ ≤ 20.
        let gap = pairwise_distinctness(1, 20).unwrap();
        assert!((gap - 0.003_536_658_535_734_27).abs() < 1e-12, "{gap}");
        assert!(matches!(
            pairwise_distinctness(3, 5),
            Err(Error::DegenerateIndex(3))
        ));
        assert!(pairwise_distinctness(1, 0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let req: BranchIdRequest = serde_json::from_str(
            r#"{"measurements":[{"j":0,"p":0.1,"tol":1e-9},{"j":1,"p":0.19316,"tol":1e-4}],"n_max":10}"#,
        )
        .unwrap();
        let resp = req.evaluate().unwrap();
        let json = serde_json::to_value(&resp).unwrap();
        assert_eq!(json["consistent"][0]["n"], 0);
        assert_eq!(json["consistent"][0]["sign"], "+");
        let req: BranchIdRequest =
            serde_json::from_str(r#"{"measurements":[{"j":0,"p":1,"tol":1e-9}]}"#).unwrap();
        assert_eq!(req.n_max, DEFAULT_N_MAX);
    }
}

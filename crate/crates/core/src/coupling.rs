//! Renormalisation condition `g_r = sin g₀`, its arcsin branches, probability
//! spectra and the beta-functions of the running coupling.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::flow::FlowState;

/// Default number of arcsin branches enumerated above the principal one.
pub const DEFAULT_N_MAX: u32 = 10;

/// Sign of `√P_obs` in `arcsinₙ(±√P_obs)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BranchSign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl BranchSign {
    pub fn factor(self) -> f64 {
        match self {
            BranchSign::Plus => 1.0,
            BranchSign::Minus => -1.0,
        }
    }
}

impl fmt::Display for BranchSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BranchSign::Plus => "+",
            BranchSign::Minus => "-",
        })
    }
}

/// Label `(n, ±)` of a solution `g₀ = arcsinₙ(±√P_obs)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BranchIndex {
    pub n: u32,
    pub sign: BranchSign,
}

impl BranchIndex {
    pub const fn new(n: u32, sign: BranchSign) -> Self {
        Self { n, sign }
    }

    /// Bare coupling selected by this branch for a given observed probability.
    pub fn bare_coupling(self, p_obs: f64) -> Result<f64> {
        check_probability(p_obs)?;
        Ok(arcsin_n(self.n, self.sign.factor() * p_obs.sqrt()))
    }
}

impl fmt::Display for BranchIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.n, self.sign)
    }
}

/// `arcsinₙ(x) = nπ + (−1)ⁿ arcsin(x)`.
pub fn arcsin_n(n: u32, x: f64) -> f64 {
    let principal = x.clamp(-1.0, 1.0).asin();
    let n_f = f64::from(n);
    if n.is_multiple_of(2) {
        n_f * PI + principal
    } else {
        n_f * PI - principal
    }
}

pub(crate) fn check_probability(p: f64) -> Result<()> {
    ensure((0.0..=1.0).contains(&p), "p_obs", "must lie in [0, 1]", p)
}

/// All non-negative bare couplings reproducing `P_obs = sin² g₀` on branches
/// `n = 0..=n_max`, ordered by `(n, +/−)`.
///
/// Coincident couplings (e.g. every `(n, −)` at `P_obs = 0`) are reported
/// once, under the first label that produces them.
pub fn renormalised_coupling_branches(p_obs: f64, n_max: u32) -> Result<Vec<(BranchIndex, f64)>> {
    check_probability(p_obs)?;
    let mut out: Vec<(BranchIndex, f64)> = Vec::with_capacity(2 * n_max as usize + 2);
    for n in 0..=n_max {
        for sign in [BranchSign::Plus, BranchSign::Minus] {
            let branch = BranchIndex::new(n, sign);
            let g0 = branch.bare_coupling(p_obs)?;
            if g0 < 0.0 {
                continue;
            }
            let duplicate = out
                .iter()
                .any(|&(_, other)| (other - g0).abs() <= 1e-12 * g0.max(1.0));
            if !duplicate {
                out.push((branch, g0.max(0.0)));
            }
        }
    }
    Ok(out)
}

/// Bare coupling as a series in the renormalised one: `g_r` at order 1,
/// `g_r + g_r³/6` at order 3.
pub fn perturbative_bare_coupling(g_r: f64, order: u32) -> Result<f64> {
    ensure(g_r.abs() < 1.0, "g_r", "must satisfy |g_r| < 1", g_r)?;
    match order {
        1 => Ok(g_r),
        3 => Ok(g_r + g_r.powi(3) / 6.0),
        other => Err(Error::UnsupportedOrder(other)),
    }
}

/// Per-branch scattering probabilities `P_j = sin²(g₀√(j+1))`, `j = 0..=J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub branch: BranchIndex,
    pub g0: f64,
    pub probabilities: Vec<f64>,
}

pub fn spectrum(branch: BranchIndex, p_obs: f64, j_max: usize) -> Result<SpectrumTable> {
    let g0 = branch.bare_coupling(p_obs)?;
    let probabilities = (0..=j_max)
        .map(|j| crate::evolution::amplitude(j, g0).powi(2))
        .collect();
    Ok(SpectrumTable {
        branch,
        g0,
        probabilities,
    })
}

/// Spectra for every branch returned by [`renormalised_coupling_branches`].
pub fn spectra(p_obs: f64, n_max: u32, j_max: usize) -> Result<Vec<SpectrumTable>> {
    renormalised_coupling_branches(p_obs, n_max)?
        .into_iter()
        .map(|(branch, _)| spectrum(branch, p_obs, j_max))
        .collect()
}

/// 1-loop beta-function `g_r − g_r³/3`.
pub fn beta_one_loop(g_r: f64) -> f64 {
    g_r - g_r.powi(3) / 3.0
}

/// Exact beta-function after `n` turning points:
/// `βₙ(g_r) = (−1)ⁿ √(1 − g_r²) arcsinₙ(g_r)`.
pub fn beta_branch(n: u32, g_r: f64) -> Result<f64> {
    ensure(g_r.abs() <= 1.0, "g_r", "must satisfy |g_r| <= 1", g_r)?;
    if g_r.abs() == 1.0 {
        return Ok(0.0);
    }
    let root = (1.0 - g_r * g_r).sqrt();
    let parity = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(parity * root * arcsin_n(n, g_r))
}

pub fn beta_exact(state: &FlowState) -> Result<f64> {
    beta_branch(state.branch_count, state.g_r)
}

/// Values of the interpolating function `x(𝗍) = sin²(g₀ e^𝗍)` of the logistic
/// map with parameter 4.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticCheck {
    pub x_now: f64,
    /// `x(𝗍 + log 2)`.
    pub x_doubled: f64,
    /// `4 x(𝗍)(1 − x(𝗍))`.
    pub logistic_image: f64,
}

impl LogisticCheck {
    pub fn defect(&self) -> f64 {
        (self.x_doubled - self.logistic_image).abs()
    }
}

pub fn logistic_interpolation_check(g0: f64, t: f64) -> LogisticCheck {
    let x = |tt: f64| (g0 * tt.exp()).sin().powi(2);
    let x_now = x(t);
    LogisticCheck {
        x_now,
        x_doubled: x(t + std::f64::consts::LN_2),
        logistic_image: 4.0 * x_now * (1.0 - x_now),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: f64 = 0.1;

    #[test]
    fn principal_and_first_branch() {
        let branches = renormalised_coupling_branches(P, 3).unwrap();
        let find = |b: BranchIndex| branches.iter().find(|(x, _)| *x == b).unwrap().1;
        let g = find(BranchIndex::new(0, BranchSign::Plus));
        assert!((g - 0.321_750_554_396_642_2).abs() < 1e-15);
        let g = find(BranchIndex::new(1, BranchSign::Minus));
        assert!((g - (PI + 0.321_750_554_396_642_2)).abs() < 1e-14);
        assert!((g - 3.46334).abs() < 1e-5);
        for (_, g0) in &branches {
            assert!((g0.sin().powi(2) - P).abs() < 1e-12);
            assert!(*g0 >= 0.0);
        }
        // (0,−) is negative and dropped; 1..=3 contribute both signs.
        assert_eq!(branches.len(), 7);
    }

    #[test]
    fn zero_probability_collapses_to_multiples_of_pi() {
        let branches = renormalised_coupling_branches(0.0, 4).unwrap();
        let g0s: Vec<f64> = branches.iter().map(|b| b.1).collect();
        assert_eq!(g0s.len(), 5);
        for (m, g) in g0s.iter().enumerate() {
            assert!((g - m as f64 * PI).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_probability_gives_half_odd_multiples() {
        let branches = renormalised_coupling_branches(1.0, 4).unwrap();
        for (m, (branch, g)) in branches.iter().enumerate() {
            assert!((g - (m as f64 + 0.5) * PI).abs() < 1e-12);
            assert_eq!(branch.n as usize, m);
        }
    }

    #[test]
    fn rejects_bad_probability() {
        assert!(renormalised_coupling_branches(1.2, 3).is_err());
        assert!(renormalised_coupling_branches(-0.1, 3).is_err());
        assert!(spectrum(BranchIndex::new(0, BranchSign::Plus), f64::NAN, 3).is_err());
    }

    #[test]
    fn perturbative_series() {
        assert_eq!(perturbative_bare_coupling(0.0, 3).unwrap(), 0.0);
        let g = perturbative_bare_coupling(0.5, 3).unwrap();
        assert!((g - 0.520_833_333_333_333_4).abs() < 1e-15);
        assert!(((PI / 6.0) - g).abs() < 0.5_f64.powi(5));
        let g = perturbative_bare_coupling(0.1, 3).unwrap();
        assert!((g - 0.100_166_7).abs() < 5e-8);
        assert_eq!(perturbative_bare_coupling(0.3, 1).unwrap(), 0.3);
        assert_eq!(
            perturbative_bare_coupling(0.3, 5),
            Err(Error::UnsupportedOrder(5))
        );
        assert!(perturbative_bare_coupling(1.0, 3).is_err());
    }

    #[test]
    fn spectrum_rows() {
        let table = spectrum(BranchIndex::new(0, BranchSign::Plus), P, 9).unwrap();
        assert_eq!(table.probabilities.len(), 10);
        assert!((table.probabilities[0] - P).abs() < 1e-12);
        assert!((table.probabilities[3] - 0.36).abs() < 1e-14);
        // sin²(arcsin(√0.1)·√2), evaluated independently.
        assert!((table.probabilities[1] - 0.193_146_071_905_664_27).abs() < 1e-14);
        for t in spectra(P, 10, 9).unwrap() {
            assert!((t.probabilities[0] - P).abs() < 1e-12);
            assert!(t.probabilities.iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }

    #[test]
    fn one_loop_values() {
        assert_eq!(beta_one_loop(0.0), 0.0);
        assert!(beta_one_loop(3.0_f64.sqrt()).abs() < 1e-15);
        assert!((beta_one_loop(1.0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn exact_beta_values() {
        assert_eq!(beta_branch(0, 0.0).unwrap(), 0.0);
        assert_eq!(beta_branch(0, 1.0).unwrap(), 0.0);
        assert!(beta_branch(0, 1.0 - 1e-9).unwrap() > 0.0);
        assert!(beta_branch(1, 1.0 - 1e-9).unwrap() < 0.0);
        let expected = 0.75_f64.sqrt() * (2.0 * PI + PI / 6.0);
        assert!((beta_branch(2, 0.5).unwrap() - expected).abs() < 1e-14);
        assert!((beta_branch(2, 0.5).unwrap() - 5.894_847_933_761_207).abs() < 1e-13);
        assert!(beta_branch(0, 1.0001).is_err());
    }

    #[test]
    fn beta_is_derivative_of_analytic_solution() {
        // d/d𝗍 sin(g₀e^𝗍) = g₀e^𝗍 cos(g₀e^𝗍), checked by central differences.
        let g0 = PI / 6.0 + 2.0 * PI;
        for &t in &[-0.3, 0.0, 0.2, 0.41] {
            let theta: f64 = g0 * f64::exp(t);
            let n = (theta / PI + 0.5).floor() as u32;
            let h = 1e-6;
            let fd = ((g0 * f64::exp(t + h)).sin() - (g0 * f64::exp(t - h)).sin()) / (2.0 * h);
            let beta = beta_branch(n, theta.sin()).unwrap();
            assert!((fd - beta).abs() < 1e-6 * theta, "t={t}: {fd} vs {beta}");
        }
    }

    #[test]
    fn logistic_examples() {
        let c = logistic_interpolation_check(PI / 6.0, 0.0);
        assert!((c.x_now - 0.25).abs() < 1e-15);
        assert!((c.x_doubled - 0.75).abs() < 1e-15);
        assert!((c.logistic_image - 0.75).abs() < 1e-15);
        let c = logistic_interpolation_check(0.0, 3.0);
        assert_eq!((c.x_now, c.x_doubled, c.logistic_image), (0.0, 0.0, 0.0));
        assert!(logistic_interpolation_check(1.1, 0.37).defect() < 1e-12);
    }

    #[test]
    fn arcsin_branches_invert_sine() {
        for n in 0..6 {
            for &x in &[-1.0, -0.3, 0.0, 0.8, 1.0] {
                assert!((arcsin_n(n, x).sin() - x).abs() < 1e-14);
            }
        }
    }
}

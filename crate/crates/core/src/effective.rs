//! Detuning-regulated S-matrix `U_k` and the effective transition matrix
//! `𝒯_k`, which runs from the bare vertex `−i e_k V` at `k → ∞` to the
//! T-matrix `e^{−i e_k V} − 1` at `k = 0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::evolution::{evolution_from_phases, sinc};
use crate::operators::{build_operators, validate_cutoff, ModelParams, OperatorMatrix};

/// Default cutoff for operator-level checks of the effective flow.
pub const DEFAULT_CUTOFF: usize = 12;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Point of the effective flow: dimensionless detuning `k = T(ω_a − ω)/2`,
/// running coupling `e_k` and the photon cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    pub k: f64,
    pub e_k: f64,
    pub cutoff: usize,
}

impl FlowParams {
    pub fn new(k: f64, e_k: f64, cutoff: usize) -> Result<Self> {
        let p = Self { k, e_k, cutoff };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(
            self.k.is_finite() && self.k >= 0.0,
            "k",
            "must be finite and >= 0",
            self.k,
        )?;
        ensure(self.e_k.is_finite(), "e_k", "must be finite", self.e_k)?;
        validate_cutoff(self.cutoff)
    }
}

/// Vertex `V` and `τ₃` on the given cutoff.
fn vertex_and_tau3(cutoff: usize) -> Result<(OperatorMatrix, OperatorMatrix)> {
    let ops = build_operators(&ModelParams::resonant(1.0, cutoff)?)?;
    Ok((ops.v, ops.tau_3))
}

/// `U_k` with `ϑ = √(e_k² aa† + k²)` and `φ = √(e_k² a†a + k²)`.
pub fn s_matrix_detuned(p: &FlowParams) -> Result<OperatorMatrix> {
    p.validate()?;
    Ok(evolution_from_phases(p.cutoff, p.e_k, p.k))
}

/// `cos k − 2iτ₃ sin k`, the diagonal part of `U_k` at large `k`.
fn diagonal_subtraction(k: f64, tau_3: &OperatorMatrix) -> OperatorMatrix {
    OperatorMatrix::identity(tau_3.cutoff())
        .scale(Complex64::new(k.cos(), 0.0))
        .add_scaled(Complex64::new(0.0, -2.0 * k.sin()), tau_3)
}

/// Large-detuning form `cos k − 2iτ₃ sin k − i e_k V sin(k)/k`.
pub fn large_k_asymptote(p: &FlowParams) -> Result<OperatorMatrix> {
    p.validate()?;
    ensure(p.k > 0.0, "k", "must be > 0 for the large-k asymptote", p.k)?;
    let (v, tau_3) = vertex_and_tau3(p.cutoff)?;
    Ok(diagonal_subtraction(p.k, &tau_3).add_scaled(-I * (p.e_k * sinc(p.k)), &v))
}

/// `𝒯_k = U_k − (cos k − 2iτ₃ sin k) − i e_k V (1 − sin(k)/k)`.
pub fn effective_t_matrix(p: &FlowParams) -> Result<OperatorMatrix> {
    let u = s_matrix_detuned(p)?;
    let (v, tau_3) = vertex_and_tau3(p.cutoff)?;
    Ok(u.add_scaled(
        -Complex64::new(1.0, 0.0),
        &diagonal_subtraction(p.k, &tau_3),
    )
    .add_scaled(-I * (p.e_k * (1.0 - sinc(p.k))), &v))
}

/// Right-hand side of the flow renormalisation condition,
/// `(1 − sin k/k) e + e sin√(k²+e²)/√(k²+e²)`.
pub fn renorm_condition_rhs(e_k: f64, k: f64) -> f64 {
    let r = (k * k + e_k * e_k).sqrt();
    (1.0 - sinc(k)) * e_k + e_k * sinc(r)
}

/// `∂/∂e` of [`renorm_condition_rhs`].
pub fn renorm_condition_slope(e_k: f64, k: f64) -> f64 {
    let r2 = k * k + e_k * e_k;
    let r = r2.sqrt();
    // (cos r − sinc r)/r² → −1/3 + r²/30 as r → 0.
    let curvature = if r < 1e-3 {
        -1.0 / 3.0 + r2 / 30.0
    } else {
        (r.cos() - sinc(r)) / r2
    };
    (1.0 - sinc(k)) + sinc(r) + e_k * e_k * curvature
}

/// Residual `RHS(e_k, k) − g_r` of the flow renormalisation condition.
pub fn renorm_condition_residual(g_r: f64, p: &FlowParams) -> f64 {
    renorm_condition_rhs(p.e_k, p.k) - g_r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expm::matrix_exponential_oracle;
    use crate::operators::BasisLabel;
    use std::f64::consts::PI;

    fn fp(k: f64, e: f64, cutoff: usize) -> FlowParams {
        FlowParams::new(k, e, cutoff).unwrap()
    }

    #[test]
    fn resonant_reduction() {
        let u = s_matrix_detuned(&fp(0.0, PI / 6.0, 6)).unwrap();
        let z = u.element(BasisLabel::down(1), BasisLabel::up(0));
        assert!((z - Complex64::new(0.0, -0.5)).norm() < 1e-15);
    }

    #[test]
    fn free_phases_without_coupling() {
        let k = 1.7;
        let u = s_matrix_detuned(&fp(k, 0.0, 5)).unwrap();
        for j in 0..=5 {
            let up = u.element(BasisLabel::up(j), BasisLabel::up(j));
            let down = u.element(BasisLabel::down(j), BasisLabel::down(j));
            assert!((up - Complex64::new(k.cos(), -k.sin())).norm() < 1e-15);
            assert!((down - Complex64::new(k.cos(), k.sin())).norm() < 1e-15);
        }
        let t = effective_t_matrix(&fp(k, 0.0, 5)).unwrap();
        assert!(t.max_abs_diff_within(&OperatorMatrix::zeros(5), 5) < 1e-15);
    }

    #[test]
    fn unitary_at_large_detuning() {
        let u = s_matrix_detuned(&fp(3.0, 0.7, 16)).unwrap();
        assert!(u.unitarity_defect_guarded() < 1e-10);
    }

    #[test]
    fn asymptote_special_points() {
        let a = large_k_asymptote(&fp(PI, 0.8, 6)).unwrap();
        let minus_one = OperatorMatrix::identity(6).scale(Complex64::new(-1.0, 0.0));
        assert!(a.max_abs_diff_within(&minus_one, 6) < 1e-15);

        let e = 0.3;
        let a = large_k_asymptote(&fp(PI / 2.0, e, 6)).unwrap();
        let (v, tau_3) = vertex_and_tau3(6).unwrap();
        let expected = tau_3
            .scale(Complex64::new(0.0, -2.0))
            .add_scaled(-I * (e * 2.0 / PI), &v);
        assert!(a.max_abs_diff_within(&expected, 6) < 1e-15);
        assert!(large_k_asymptote(&fp(0.0, e, 6)).is_err());
    }

    #[test]
    fn asymptote_error_decays_like_inverse_k() {
        let e = 0.5;
        let defect = |k: f64| {
            let p = fp(k, e, 8);
            s_matrix_detuned(&p)
                .unwrap()
                .max_abs_diff_guarded(&large_k_asymptote(&p).unwrap())
        };
        let (d50, d100, d200) = (defect(50.0), defect(100.0), defect(200.0));
        // C = k·defect stays of order e²Λ.
        for (k, d) in [(50.0, d50), (100.0, d100), (200.0, d200)] {
            assert!(k * d < e * e * 8.0, "k={k} C={}", k * d);
        }
        assert!(d100 < 0.6 * d50 && d200 < 0.6 * d100);
    }

    #[test]
    fn infrared_limit_matches_exponential() {
        let e = 0.9;
        let t0 = effective_t_matrix(&fp(0.0, e, 12)).unwrap();
        let (v, _) = vertex_and_tau3(12).unwrap();
        let expected = matrix_exponential_oracle(&v, e)
            .unwrap()
            .add_scaled(-Complex64::new(1.0, 0.0), &OperatorMatrix::identity(12));
        assert!(t0.max_abs_diff_guarded(&expected) < 1e-10);
    }

    #[test]
    fn ultraviolet_limit_is_bare_vertex() {
        let e = 0.5;
        let t = effective_t_matrix(&fp(200.0, e, 8)).unwrap();
        let (v, _) = vertex_and_tau3(8).unwrap();
        let d = t.add_scaled(I * e, &v).max_abs_guarded();
        assert!(d <= 0.02, "{d}");
    }

    #[test]
    fn rhs_is_matrix_element() {
        for &(k, e) in &[(0.0, 0.7), (0.3, 2.1), (5.0, 0.5), (12.0, 9.0)] {
            let t = effective_t_matrix(&fp(k, e, 4)).unwrap();
            let z = I * t.element(BasisLabel::down(1), BasisLabel::up(0));
            assert!(z.im.abs() < 1e-14);
            assert!((z.re - renorm_condition_rhs(e, k)).abs() < 1e-12);
        }
    }

    #[test]
    fn residual_limits() {
        for &e in &[0.0, 0.4, 2.0, 7.5] {
            let r = renorm_condition_residual(0.5, &fp(0.0, e, 4));
            assert!((r - (e.sin() - 0.5)).abs() < 1e-15);
        }
        assert_eq!(renorm_condition_residual(0.3, &fp(4.0, 0.0, 4)), -0.3);
    }

    #[test]
    fn residual_root_at_large_k() {
        // Bisection oracle on the closed form.
        let f = |e: f64| renorm_condition_residual(0.5, &fp(10.0, e, 4));
        let (mut lo, mut hi) = (0.0, 2.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((lo - 0.50).abs() < 0.01, "{lo}");
        assert!(f(lo).abs() < 1e-12);
    }

    #[test]
    fn slope_matches_finite_difference() {
        for &(e, k) in &[(0.5, 0.0), (1e-4, 1e-4), (2.3, 0.7), (9.0, 4.0), (0.0, 3.0)] {
            let h = 1e-6;
            let fd = (renorm_condition_rhs(e + h, k) - renorm_condition_rhs(e - h, k)) / (2.0 * h);
            assert!(
                (fd - renorm_condition_slope(e, k)).abs() < 1e-8,
                "e={e} k={k}"
            );
        }
    }
}

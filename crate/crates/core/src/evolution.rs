//! Closed-form interaction-picture evolution operators.
//!
//! Every operator function of `𝗇` is evaluated eigenvalue-wise on the number
//! basis. The only photon-number dependence enters through the Rabi phase
//! `Ω_m = √(c² m + κ²)` of the two-level subsystem `{|m−1,↑⟩, |m,↓⟩}`, where
//! `c = g t` and `κ = Δ t / 2`.

use num_complex::Complex64;

use crate::error::{ensure, Error, Result};
use crate::operators::{validate_cutoff, BasisLabel, ModelParams, OperatorMatrix};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `sin(x)/x` with the removable singularity at the origin filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
    } else {
        x.sin() / x
    }
}

/// `sin(x √m) / √m`, equal to `x` when `m = 0`.
fn sin_sqrt_over_sqrt(x: f64, m: usize) -> f64 {
    if m == 0 {
        x
    } else {
        let root = (m as f64).sqrt();
        (x * root).sin() / root
    }
}

/// Resonant evolution `U(t)` in the interaction picture.
///
/// Only the `|Λ,↑⟩` state is affected by truncation: its partner `|Λ+1,↓⟩`
/// is not part of the space, and the diagonal entry keeps the untruncated
/// value `cos(gt√(Λ+1))`.
pub fn evolution_resonant(params: &ModelParams, t: f64) -> Result<OperatorMatrix> {
    params.validate()?;
    ensure(
        params.detuning == 0.0,
        "delta",
        "must be 0 for resonant evolution",
        params.detuning,
    )?;
    ensure(t.is_finite(), "t", "must be finite", t)?;

    let cutoff = params.cutoff;
    let gt = params.coupling * t;
    let mut u = OperatorMatrix::zeros(cutoff);
    for j in 0..=cutoff {
        let up = BasisLabel::up(j);
        let down = BasisLabel::down(j);
        u.set(
            up,
            up,
            Complex64::new((gt * ((j + 1) as f64).sqrt()).cos(), 0.0),
        );
        u.set(
            down,
            down,
            Complex64::new((gt * (j as f64).sqrt()).cos(), 0.0),
        );
        // −i a τ₊ sin(gt√𝗇)/√𝗇 on |j,↓⟩: the function sees 𝗇 = j, then a gives √j.
        if j > 0 {
            let value = (j as f64).sqrt() * sin_sqrt_over_sqrt(gt, j);
            u.set(BasisLabel::up(j - 1), down, -I * value);
        }
        // −i sin(gt√𝗇)/√𝗇 a† τ₋ on |j,↑⟩: a† gives √(j+1), then 𝗇 = j + 1.
        if j < cutoff {
            let value = ((j + 1) as f64).sqrt() * sin_sqrt_over_sqrt(gt, j + 1);
            u.set(BasisLabel::down(j + 1), up, -I * value);
        }
    }
    Ok(mark_tainted(u))
}

/// Evolution `U(t)` for arbitrary detuning.
pub fn evolution_detuned(params: &ModelParams, t: f64) -> Result<OperatorMatrix> {
    params.validate()?;
    ensure(t.is_finite(), "t", "must be finite", t)?;
    Ok(evolution_from_phases(
        params.cutoff,
        params.coupling * t,
        0.5 * params.detuning * t,
    ))
}

/// Builds the detuned evolution operator from the dimensionless coupling
/// phase `c = g t` and half-detuning phase `κ = Δ t / 2`.
///
/// With `ψ = √(c² aa† + κ²)` and `φ = √(c² a†a + κ²)`:
/// `U = [cos ψ − iκ sin ψ/ψ]↑↑ − i c (sin ψ/ψ) a τ₊ + [cos φ + iκ sin φ/φ]↓↓ − i c (sin φ/φ) a† τ₋`.
pub(crate) fn evolution_from_phases(
    cutoff: usize,
    coupling: f64,
    half_detuning: f64,
) -> OperatorMatrix {
    let omega = |m: usize| (coupling * coupling * m as f64 + half_detuning * half_detuning).sqrt();
    let mut u = OperatorMatrix::zeros(cutoff);
    for j in 0..=cutoff {
        let up = BasisLabel::up(j);
        let down = BasisLabel::down(j);

        // aa† = j + 1 on |j,↑⟩.
        let psi = omega(j + 1);
        u.set(
            up,
            up,
            Complex64::new(psi.cos(), -half_detuning * sinc(psi)),
        );

        // a†a = j on |j,↓⟩.
        let phi = omega(j);
        u.set(
            down,
            down,
            Complex64::new(phi.cos(), half_detuning * sinc(phi)),
        );

        if j > 0 {
            // a first: √j |j−1⟩, then ψ with aa† = j.
            let value = coupling * (j as f64).sqrt() * sinc(omega(j));
            u.set(BasisLabel::up(j - 1), down, -I * value);
        }
        if j < cutoff {
            // a† first: √(j+1) |j+1⟩, then φ with a†a = j + 1.
            let value = coupling * ((j + 1) as f64).sqrt() * sinc(omega(j + 1));
            u.set(BasisLabel::down(j + 1), up, -I * value);
        }
    }
    mark_tainted(u)
}

fn mark_tainted(u: OperatorMatrix) -> OperatorMatrix {
    let cutoff = u.cutoff();
    OperatorMatrix::from_array(u.into_array(), cutoff, true)
}

/// Exact decay amplitude `A_j = sin(g₀ √(j+1))` at `t = T`.
pub fn amplitude(j: usize, g0: f64) -> f64 {
    (g0 * ((j + 1) as f64).sqrt()).sin()
}

/// 2×2 evolution on `span{|n,↑⟩, |n+1,↓⟩}` for dimensionless coupling `g₀`
/// and half-detuning phase `k`.
///
/// The block is `exp(−i H)` with `H = [[k, g₀√(n+1)], [g₀√(n+1), −k]]`,
/// i.e. `cos Ω − i (sin Ω / Ω) H` with `Ω = √(g₀²(n+1) + k²)`.
pub fn subsystem_block(n: usize, g0: f64, k: f64, cutoff: usize) -> Result<[[Complex64; 2]; 2]> {
    validate_cutoff(cutoff)?;
    if n >= cutoff {
        return Err(Error::IndexOutOfRange {
            index: n,
            limit: cutoff,
        });
    }
    let off = g0 * ((n + 1) as f64).sqrt();
    let omega = (off * off + k * k).sqrt();
    let c = Complex64::new(omega.cos(), 0.0);
    let s = sinc(omega);
    Ok([
        [c - I * (s * k), -I * (s * off)],
        [-I * (s * off), c + I * (s * k)],
    ])
}

/// Phase acquired by the decoupled ground state `|0,↓⟩`.
pub fn ground_phase(k: f64) -> Complex64 {
    Complex64::new(k.cos(), k.sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn resonant(cutoff: usize, gt: f64) -> OperatorMatrix {
        evolution_resonant(&ModelParams::resonant(1.0, cutoff).unwrap(), gt).unwrap()
    }

    #[test]
    fn zero_time_is_identity() {
        let u = resonant(6, 0.0);
        assert_eq!(u.max_abs_diff_within(&OperatorMatrix::identity(6), 6), 0.0);
    }

    #[test]
    fn sixth_period_decay_amplitude() {
        let u = resonant(4, PI / 6.0);
        let z = u.element(BasisLabel::down(1), BasisLabel::up(0));
        assert!((z - Complex64::new(0.0, -0.5)).norm() < 1e-15);
    }

    #[test]
    fn resonant_rejects_detuning() {
        let params = ModelParams::new(1.0, 0.1, 4).unwrap();
        assert!(evolution_resonant(&params, 1.0).is_err());
        assert!(
            evolution_resonant(&ModelParams::resonant(1.0, 4).unwrap(), f64::INFINITY).is_err()
        );
    }

    #[test]
    fn detuned_reduces_to_resonant() {
        for &(g, t) in &[(0.7, 1.3), (-0.4, 2.0), (1.0, 0.0), (2.5, 3.7)] {
            let params = ModelParams::resonant(g, 10).unwrap();
            let a = evolution_resonant(&params, t).unwrap();
            let b = evolution_detuned(&params, t).unwrap();
            assert!(a.max_abs_diff_within(&b, 10) < 1e-14, "g={g} t={t}");
        }
    }

    #[test]
    fn free_atom_phase() {
        let params = ModelParams::new(0.0, 2.0, 4).unwrap();
        let u = evolution_detuned(&params, 1.0).unwrap();
        let z = u.element(BasisLabel::up(0), BasisLabel::up(0));
        assert!((z - Complex64::new(1.0_f64.cos(), -1.0_f64.sin())).norm() < 1e-15);
        let z = u.element(BasisLabel::down(0), BasisLabel::down(0));
        assert!((z - ground_phase(1.0)).norm() < 1e-15);
    }

    #[test]
    fn detuned_is_unitary_on_guarded_subspace() {
        let params = ModelParams::new(0.6, 1.3, 16).unwrap();
        let u = evolution_detuned(&params, 2.0).unwrap();
        assert!(u.unitarity_defect_guarded() < 1e-10);
        assert!(u.truncation_tainted());
    }

    #[test]
    fn amplitude_values() {
        assert!((amplitude(0, PI / 2.0) - 1.0).abs() < 1e-15);
        let g0 = 0.1_f64.sqrt().asin();
        assert!((amplitude(3, g0) - 0.6).abs() < 1e-15);
        // sin(0.321751·√2), evaluated independently.
        assert!((amplitude(1, 0.321751) - 0.439_484_435_961_735_3).abs() < 1e-14);
    }

    #[test]
    fn amplitude_matches_matrix_element() {
        let g0 = 1.37;
        let u = resonant(12, g0);
        for j in 0..=10 {
            let a = I * u.element(BasisLabel::down(j + 1), BasisLabel::up(j));
            assert!(a.im.abs() < 1e-15);
            assert!((a.re - amplitude(j, g0)).abs() < 1e-12);
        }
    }

    #[test]
    fn block_limits() {
        let b = subsystem_block(3, 0.0, 0.0, 8).unwrap();
        assert_eq!(b[0][0], Complex64::new(1.0, 0.0));
        assert_eq!(b[0][1], Complex64::new(0.0, 0.0));
        let b = subsystem_block(0, PI / 2.0, 0.0, 8).unwrap();
        assert!(b[0][0].norm() < 1e-15 && b[1][1].norm() < 1e-15);
        assert!((b[0][1] - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        assert!(subsystem_block(8, 1.0, 0.0, 8).is_err());
    }

    #[test]
    fn blocks_match_full_operator() {
        let cutoff = 10;
        let (g0, k) = (0.8, 0.4);
        let u = evolution_detuned(&ModelParams::new(g0, 2.0 * k, cutoff).unwrap(), 1.0).unwrap();
        for n in 0..cutoff {
            let b = subsystem_block(n, g0, k, cutoff).unwrap();
            let labels = [BasisLabel::up(n), BasisLabel::down(n + 1)];
            for (r, &bra) in labels.iter().enumerate() {
                for (c, &ket) in labels.iter().enumerate() {
                    assert!((u.element(bra, ket) - b[r][c]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn sinc_is_smooth_at_origin() {
        assert_eq!(sinc(0.0), 1.0);
        for &x in &[1e-3, 9.9e-5, 1.01e-4, 1e-6] {
            assert!((sinc(x) - x.sin() / x).abs() < 1e-15);
        }
    }
}

//! Numerical matrix exponential used to cross-check the closed forms.
//!
//! Scaling and squaring with a truncated Taylor series: the argument is
//! scaled so its 1-norm is below 1/2, exponentiated by summing the series
//! to machine precision, then squared back up.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operators::OperatorMatrix;

const HERMITIAN_TOL: f64 = 1e-12;
const SCALED_NORM: f64 = 0.5;

/// `exp(−i t G)` for Hermitian `G`.
pub fn matrix_exponential_oracle(generator: &OperatorMatrix, t: f64) -> Result<OperatorMatrix> {
    let scale = generator
        .as_array()
        .iter()
        .fold(1.0_f64, |m, z| m.max(z.norm()));
    let deviation = generator.hermiticity_defect();
    if deviation > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian { deviation });
    }
    if !t.is_finite() {
        return Err(Error::InvalidParameter {
            name: "t",
            constraint: "must be finite",
            value: t,
        });
    }
    let arg = generator.as_array().mapv(|z| z * Complex64::new(0.0, -t));
    Ok(OperatorMatrix::from_array(
        expm(&arg),
        generator.cutoff(),
        generator.truncation_tainted(),
    ))
}

fn one_norm(a: &Array2<Complex64>) -> f64 {
    a.columns()
        .into_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// General complex matrix exponential.
pub(crate) fn expm(a: &Array2<Complex64>) -> Array2<Complex64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    let norm = one_norm(a);
    let squarings = if norm > SCALED_NORM {
        (norm / SCALED_NORM).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a.mapv(|z| z / f64::powi(2.0, squarings as i32));

    let mut result = Array2::<Complex64>::eye(n);
    let mut term = Array2::<Complex64>::eye(n);
    for k in 1..=40 {
        term = term.dot(&scaled).mapv(|z| z / k as f64);
        result += &term;
        if one_norm(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::evolution_resonant;
    use crate::operators::{build_operators, BasisLabel, ModelParams};
    use std::f64::consts::PI;

    #[test]
    fn zero_time_is_identity() {
        let ops = build_operators(&ModelParams::resonant(1.0, 6).unwrap()).unwrap();
        let u = matrix_exponential_oracle(&ops.v, 0.0).unwrap();
        assert!(u.max_abs_diff_within(&OperatorMatrix::identity(6), 6) < 1e-15);
    }

    #[test]
    fn diagonal_generator() {
        let ops = build_operators(&ModelParams::resonant(1.0, 4).unwrap()).unwrap();
        let two_tau3 = ops.tau_3.scale(Complex64::new(2.0, 0.0));
        let u = matrix_exponential_oracle(&two_tau3, PI).unwrap();
        for i in 0..u.dim() {
            let z = u.as_array()[[i, i]];
            assert!((z - Complex64::new(-1.0, 0.0)).norm() < 1e-12, "{z}");
        }
        assert!(u.unitarity_defect_guarded() < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian() {
        let ops = build_operators(&ModelParams::resonant(1.0, 4).unwrap()).unwrap();
        assert!(matches!(
            matrix_exponential_oracle(&ops.a, 1.0),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn agrees_with_resonant_closed_form() {
        let params = ModelParams::resonant(1.0, 8).unwrap();
        let ops = build_operators(&params).unwrap();
        let oracle = matrix_exponential_oracle(&ops.v, 0.5).unwrap();
        let closed = evolution_resonant(&params, 0.5).unwrap();
        assert!(oracle.max_abs_diff_guarded(&closed) < 1e-12);
        let z = oracle.element(BasisLabel::down(1), BasisLabel::up(0));
        assert!((z.im + 0.5_f64.sin()).abs() < 1e-14);
    }
}

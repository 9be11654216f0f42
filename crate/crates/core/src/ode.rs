//! Dormand-Prince 5(4) stepping for scalar autonomous ODEs `y' = f(y)`.

const C2: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// One Dormand-Prince step of size `h` from `y`. Returns the 5th-order
/// solution and the embedded error estimate.
pub(crate) fn dopri_step<F: Fn(f64) -> f64>(f: &F, y: f64, h: f64) -> (f64, f64) {
    let k1 = f(y);
    let k2 = f(y + h * C2 * k1);
    let k3 = f(y + h * (A31 * k1 + A32 * k2));
    let k4 = f(y + h * (A41 * k1 + A42 * k2 + A43 * k3));
    let k5 = f(y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4));
    let k6 = f(y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5));
    let y_new = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
    let k7 = f(y_new);
    let err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
    (y_new, err)
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct StepControl {
    pub rtol: f64,
    pub atol: f64,
}

impl StepControl {
    /// Scaled error norm; `≤ 1` means the step is acceptable.
    pub fn error_norm(&self, y: f64, y_new: f64, err: f64) -> f64 {
        err.abs() / (self.atol + self.rtol * y.abs().max(y_new.abs()))
    }

    /// Next step size from the current one and its error norm.
    pub fn next_step(&self, h: f64, norm: f64) -> f64 {
        let factor = if norm == 0.0 {
            5.0
        } else {
            (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0)
        };
        h * factor
    }
}

/// Integrates `y' = f(y)` from `(t_start, y_start)` to `t_end` (either
/// direction), returning every accepted step including both endpoints.
pub(crate) fn integrate<F: Fn(f64) -> f64>(
    f: &F,
    t_start: f64,
    y_start: f64,
    t_end: f64,
    control: StepControl,
    max_steps: usize,
) -> Option<Vec<(f64, f64)>> {
    let direction = if t_end >= t_start { 1.0 } else { -1.0 };
    let span = (t_end - t_start).abs();
    let mut out = vec![(t_start, y_start)];
    if span == 0.0 {
        return Some(out);
    }
    let (mut t, mut y) = (t_start, y_start);
    let mut h = (span / 100.0).min(1e-2);
    let h_min = 1e-14 * span.max(1.0);
    for _ in 0..max_steps {
        let remaining = (t_end - t).abs();
        if remaining <= 1e-15 * span.max(1.0) {
            return Some(out);
        }
        let step = h.min(remaining);
        let (y_new, err) = dopri_step(f, y, direction * step);
        let norm = control.error_norm(y, y_new, err);
        if norm <= 1.0 {
            t = if step == remaining {
                t_end
            } else {
                t + direction * step
            };
            y = y_new;
            out.push((t, y));
        } else if step <= h_min {
            return None;
        }
        h = control.next_step(step, norm);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let control = StepControl {
            rtol: 1e-11,
            atol: 1e-13,
        };
        let path = integrate(&|y: f64| y, 0.0, 1.0, 2.0, control, 10_000).unwrap();
        let &(t, y) = path.last().unwrap();
        assert_eq!(t, 2.0);
        assert!((y - 2.0_f64.exp()).abs() < 1e-9);
        let back = integrate(&|y: f64| y, 0.0, 1.0, -1.0, control, 10_000).unwrap();
        let &(t, y) = back.last().unwrap();
        assert_eq!(t, -1.0);
        assert!((y - (-1.0_f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn step_is_fifth_order() {
        // Local error of y' = y over h should shrink like h⁶.
        let e = |h: f64| (dopri_step(&|y: f64| y, 1.0, h).0 - h.exp()).abs();
        let ratio = e(0.1) / e(0.05);
        assert!(ratio > 50.0 && ratio < 80.0, "ratio {ratio}");
    }
}

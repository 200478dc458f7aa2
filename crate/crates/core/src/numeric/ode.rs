//! Adaptive embedded Runge-Kutta 5(4) (Dormand-Prince) on complex state
//! vectors, used for matrix fundamental solutions along complex paths and
//! for deformation flows.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

// Dormand-Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
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
// Error weights b - b* of the embedded 4th-order solution.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrate dy/dt = f(t, y) from t = 0 to t = 1 adaptively; returns the
/// final state and the accumulated local error estimate.
pub fn dopri5<F>(f: &F, y0: Vec<Complex64>, opts: &OdeOptions) -> Result<(Vec<Complex64>, f64)>
where
    F: Fn(f64, &[Complex64]) -> Result<Vec<Complex64>>,
{
    let dim = y0.len();
    let mut t = 0.0_f64;
    let mut y = y0;
    let mut h = 0.01_f64;
    let mut k1 = f(t, &y)?;
    let mut est_error = 0.0;
    let mut steps = 0;

    let axpys = |base: &[Complex64], terms: &[(f64, &[Complex64])], h: f64| -> Vec<Complex64> {
        let mut out = base.to_vec();
        for (c, k) in terms {
            for (o, kv) in out.iter_mut().zip(k.iter()) {
                *o += h * c * kv;
            }
        }
        out
    };

    while t < 1.0 {
        if steps >= opts.max_steps {
            return Err(Error::StepUnderflow(t));
        }
        steps += 1;
        if t + h > 1.0 {
            h = 1.0 - t;
        }
        if h < 1e-14 {
            return Err(Error::StepUnderflow(t));
        }
        let k2 = f(t + h / 5.0, &axpys(&y, &[(A21, &k1)], h))?;
        let k3 = f(t + 3.0 * h / 10.0, &axpys(&y, &[(A31, &k1), (A32, &k2)], h))?;
        let k4 = f(
            t + 4.0 * h / 5.0,
            &axpys(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h),
        )?;
        let k5 = f(
            t + 8.0 * h / 9.0,
            &axpys(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h),
        )?;
        let k6 = f(
            t + h,
            &axpys(
                &y,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                h,
            ),
        )?;
        let ynew = axpys(
            &y,
            &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
            h,
        );
        let k7 = f(t + h, &ynew)?; // FSAL

        // Weighted RMS error of the embedded difference.
        let mut err_sq = 0.0;
        for i in 0..dim {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].norm().max(ynew[i].norm());
            err_sq += (e.norm() / sc) * (e.norm() / sc);
        }
        let err = (err_sq / dim as f64).sqrt();

        if err <= 1.0 {
            t += h;
            y = ynew;
            k1 = k7;
            est_error += err * opts.atol.max(opts.rtol);
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    Ok((y, est_error))
}

/// Classical fixed-step RK4 from t = 0 to t = 1 in `steps` steps, with a
/// callback invoked after every step (used to place flow checkpoints).
pub fn rk4<F, C>(f: &F, y0: Vec<Complex64>, steps: usize, mut after_step: C) -> Result<Vec<Complex64>>
where
    F: Fn(f64, &[Complex64]) -> Result<Vec<Complex64>>,
    C: FnMut(f64, &[Complex64]) -> Result<()>,
{
    let h = 1.0 / steps as f64;
    let mut y = y0;
    let mut t = 0.0;
    let add = |a: &[Complex64], b: &[Complex64], c: f64| -> Vec<Complex64> {
        a.iter().zip(b).map(|(x, k)| x + c * k).collect()
    };
    for _ in 0..steps {
        let k1 = f(t, &y)?;
        let k2 = f(t + h / 2.0, &add(&y, &k1, h / 2.0))?;
        let k3 = f(t + h / 2.0, &add(&y, &k2, h / 2.0))?;
        let k4 = f(t + h, &add(&y, &k3, h))?;
        for i in 0..y.len() {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t += h;
        after_step(t, &y)?;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        // y' = y over [0, 1]: y(1) = e.
        let f = |_t: f64, y: &[Complex64]| Ok(vec![y[0]]);
        let (y, _) = dopri5(&f, vec![Complex64::new(1.0, 0.0)], &OdeOptions::default()).unwrap();
        assert!((y[0].re - std::f64::consts::E).abs() < 1e-9);
    }

    #[test]
    fn circular_rotation() {
        // y' = i*2pi*y: y(1) = y(0).
        let f = |_t: f64, y: &[Complex64]| {
            Ok(vec![Complex64::new(0.0, 2.0 * std::f64::consts::PI) * y[0]])
        };
        let (y, _) = dopri5(&f, vec![Complex64::new(1.0, 0.0)], &OdeOptions::default()).unwrap();
        assert!((y[0] - Complex64::new(1.0, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn rk4_matches_closed_form() {
        let f = |t: f64, _y: &[Complex64]| Ok(vec![Complex64::new(3.0 * t * t, 0.0)]);
        let y = rk4(&f, vec![Complex64::new(0.0, 0.0)], 50, |_, _| Ok(())).unwrap();
        assert!((y[0].re - 1.0).abs() < 1e-12);
    }
}

//! Small dense complex matrices for the numerical layer (n <= 3 in practice).

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub n: usize,
    pub data: Vec<Complex64>,
}

impl CMat {
    pub fn zero(n: usize) -> CMat {
        CMat {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> CMat {
        let mut m = CMat::zero(n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_vec(n: usize, data: Vec<Complex64>) -> CMat {
        assert_eq!(data.len(), n * n);
        CMat { n, data }
    }

    pub fn mul(&self, other: &CMat) -> CMat {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = CMat::zero(n);
        for r in 0..n {
            for c in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    acc += self[(r, k)] * other[(k, c)];
                }
                out[(r, c)] = acc;
            }
        }
        out
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        assert_eq!(self.n, other.n);
        CMat {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn det(&self) -> Complex64 {
        match self.n {
            1 => self[(0, 0)],
            2 => self[(0, 0)] * self[(1, 1)] - self[(0, 1)] * self[(1, 0)],
            3 => {
                self[(0, 0)] * (self[(1, 1)] * self[(2, 2)] - self[(1, 2)] * self[(2, 1)])
                    - self[(0, 1)] * (self[(1, 0)] * self[(2, 2)] - self[(1, 2)] * self[(2, 0)])
                    + self[(0, 2)] * (self[(1, 0)] * self[(2, 1)] - self[(1, 1)] * self[(2, 0)])
            }
            _ => panic!("determinant implemented for n <= 3"),
        }
    }

    pub fn inverse(&self) -> Result<CMat> {
        let d = self.det();
        if d.norm() < 1e-300 {
            return Err(Error::Invalid("singular matrix in numeric inverse".into()));
        }
        let n = self.n;
        let mut out = CMat::zero(n);
        match n {
            1 => out[(0, 0)] = 1.0 / d,
            2 => {
                out[(0, 0)] = self[(1, 1)] / d;
                out[(0, 1)] = -self[(0, 1)] / d;
                out[(1, 0)] = -self[(1, 0)] / d;
                out[(1, 1)] = self[(0, 0)] / d;
            }
            3 => {
                for r in 0..3 {
                    for c in 0..3 {
                        let (r1, r2) = match r {
                            0 => (1, 2),
                            1 => (0, 2),
                            _ => (0, 1),
                        };
                        let (c1, c2) = match c {
                            0 => (1, 2),
                            1 => (0, 2),
                            _ => (0, 1),
                        };
                        let minor =
                            self[(r1, c1)] * self[(r2, c2)] - self[(r1, c2)] * self[(r2, c1)];
                        let sign = if (r + c) % 2 == 0 { 1.0 } else { -1.0 };
                        out[(c, r)] = sign * minor / d;
                    }
                }
            }
            _ => return Err(Error::Invalid("inverse implemented for n <= 3".into())),
        }
        Ok(out)
    }

    pub fn norm_inf(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.n + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.n + c]
    }
}

/// Eigenvalues of an n x n complex matrix for n <= 3, via closed-form roots
/// of the characteristic polynomial plus a few Newton polishing steps.
pub fn eigenvalues(m: &CMat) -> Vec<Complex64> {
    let n = m.n;
    // Characteristic polynomial coefficients of lambda^n + c[n-1] l^(n-1) + ...
    let coeffs: Vec<Complex64> = match n {
        1 => vec![-m[(0, 0)]],
        2 => {
            let tr = m.trace();
            let det = m.det();
            vec![det, -tr]
        }
        3 => {
            let tr = m.trace();
            let m2 = m.mul(m);
            let c1 = (tr * tr - m2.trace()) / 2.0;
            let det = m.det();
            vec![-det, c1, -tr]
        }
        _ => panic!("eigenvalues implemented for n <= 3"),
    };
    let mut roots = match n {
        1 => vec![-coeffs[0]],
        2 => quadratic_roots(coeffs[1], coeffs[0]),
        _ => cubic_roots(coeffs[2], coeffs[1], coeffs[0]),
    };
    // Newton polish on p(l) = l^n + sum c_k l^k.
    let p = |l: Complex64| -> (Complex64, Complex64) {
        let mut v = Complex64::new(1.0, 0.0);
        let mut dv = Complex64::new(0.0, 0.0);
        for k in (0..n).rev() {
            dv = dv * l + v;
            v = v * l + coeffs[k];
        }
        (v, dv)
    };
    for r in roots.iter_mut() {
        for _ in 0..8 {
            let (v, dv) = p(*r);
            if dv.norm() < 1e-300 {
                break;
            }
            let step = v / dv;
            *r -= step;
            if step.norm() < 1e-15 * r.norm().max(1.0) {
                break;
            }
        }
    }
    roots
}

fn quadratic_roots(c1: Complex64, c0: Complex64) -> Vec<Complex64> {
    // l^2 + c1 l + c0
    let disc = (c1 * c1 - 4.0 * c0).sqrt();
    // Pick the sign giving the larger |q| to avoid cancellation.
    let q = if (c1 + disc).norm() >= (c1 - disc).norm() {
        -(c1 + disc) / 2.0
    } else {
        -(c1 - disc) / 2.0
    };
    if q.norm() < 1e-300 {
        vec![Complex64::new(0.0, 0.0), -c1]
    } else {
        vec![q, c0 / q]
    }
}

fn cubic_roots(c2: Complex64, c1: Complex64, c0: Complex64) -> Vec<Complex64> {
    // l^3 + c2 l^2 + c1 l + c0; depress with l = t - c2/3.
    let shift = c2 / 3.0;
    let p = c1 - c2 * c2 / 3.0;
    let q = c0 - c1 * c2 / 3.0 + 2.0 * c2 * c2 * c2 / 27.0;
    let disc = (q * q / 4.0 + p * p * p / 27.0).sqrt();
    let u3a = -q / 2.0 + disc;
    let u3b = -q / 2.0 - disc;
    let u3 = if u3a.norm() >= u3b.norm() { u3a } else { u3b };
    let u = u3.powf(1.0 / 3.0);
    let omega = Complex64::new(-0.5, 3.0_f64.sqrt() / 2.0);
    let mut roots = Vec::with_capacity(3);
    for k in 0..3 {
        let uk = u * omega.powu(k);
        let t = if uk.norm() < 1e-300 {
            // p must be ~0 as well: triple root of the depressed cubic.
            Complex64::new(0.0, 0.0)
        } else {
            uk - p / (3.0 * uk)
        };
        roots.push(t - shift);
    }
    roots
}

/// Match two eigenvalue sets up to permutation; returns the max pairwise
/// distance of the best greedy matching.
pub fn eigen_set_distance(got: &[Complex64], want: &[Complex64]) -> f64 {
    let mut remaining: Vec<Complex64> = want.to_vec();
    let mut worst = 0.0_f64;
    for g in got {
        if remaining.is_empty() {
            return f64::INFINITY;
        }
        let (idx, dist) = remaining
            .iter()
            .enumerate()
            .map(|(i, w)| (i, (g - w).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        worst = worst.max(dist);
        remaining.remove(idx);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_2x2_diagonal() {
        let mut m = CMat::zero(2);
        m[(0, 0)] = Complex64::new(2.0, 1.0);
        m[(1, 1)] = Complex64::new(-3.0, 0.5);
        let e = eigenvalues(&m);
        assert!(eigen_set_distance(&e, &[m[(0, 0)], m[(1, 1)]]) < 1e-12);
    }

    #[test]
    fn eigenvalues_3x3_known() {
        // Companion-style matrix with eigenvalues 1, 2, 3.
        let mut m = CMat::zero(3);
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        m[(1, 2)] = Complex64::new(1.0, 0.0);
        m[(2, 0)] = Complex64::new(6.0, 0.0);
        m[(2, 1)] = Complex64::new(-11.0, 0.0);
        m[(2, 2)] = Complex64::new(6.0, 0.0);
        let e = eigenvalues(&m);
        let want = [
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(3.0, 0.0),
        ];
        assert!(eigen_set_distance(&e, &want) < 1e-9, "{e:?}");
    }

    #[test]
    fn inverse_3x3() {
        let mut m = CMat::identity(3);
        m[(0, 1)] = Complex64::new(2.0, -1.0);
        m[(1, 2)] = Complex64::new(0.5, 0.25);
        let inv = m.inverse().unwrap();
        let prod = m.mul(&inv);
        assert!(prod.sub(&CMat::identity(3)).norm_inf() < 1e-14);
    }
}

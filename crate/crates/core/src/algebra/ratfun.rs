//! Normalized rational functions: the coefficient field of every symbolic
//! computation in the crate.
//!
//! Invariants maintained by construction: the denominator is nonzero, the
//! fraction is reduced (gcd of numerator and denominator is 1), and the
//! denominator's leading graded-lex coefficient is 1. Equality is structural.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;

use super::gcd::{poly_gcd, reduce_fraction};
use super::poly::Poly;
use super::vars::{VarId, VarSpace};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatFun {
    num: Poly,
    den: Poly,
}

impl RatFun {
    /// Normalize a quotient of polynomials. Errors on a zero denominator.
    pub fn new(num: Poly, den: Poly) -> Result<RatFun> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if num.is_zero() {
            return Ok(RatFun {
                den: Poly::one(num.space()),
                num,
            });
        }
        let (n, d) = reduce_fraction(&num, &den);
        Ok(RatFun { num: n, den: d })
    }

    pub fn from_poly(p: Poly) -> RatFun {
        let one = Poly::one(p.space());
        RatFun { num: p, den: one }
    }

    pub fn zero(space: &Arc<VarSpace>) -> RatFun {
        RatFun::from_poly(Poly::zero(space))
    }

    pub fn one(space: &Arc<VarSpace>) -> RatFun {
        RatFun::from_poly(Poly::one(space))
    }

    pub fn int(space: &Arc<VarSpace>, n: i64) -> RatFun {
        RatFun::from_poly(Poly::int(space, n))
    }

    pub fn rational(space: &Arc<VarSpace>, c: BigRational) -> RatFun {
        RatFun::from_poly(Poly::constant(space, c))
    }

    pub fn var(space: &Arc<VarSpace>, v: VarId) -> RatFun {
        RatFun::from_poly(Poly::var(space, v))
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn space(&self) -> &Arc<VarSpace> {
        self.num.space()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        if !self.den.is_one() {
            return None;
        }
        self.num.as_constant()
    }

    pub fn lift(self, space: &Arc<VarSpace>) -> RatFun {
        RatFun {
            num: self.num.lift(space),
            den: self.den.lift(space),
        }
    }

    pub fn remap(&self, space: &Arc<VarSpace>, map: &[VarId]) -> RatFun {
        RatFun::new(self.num.remap(space, map), self.den.remap(space, map))
            .expect("denominator stays nonzero under renaming")
    }

    pub fn neg(&self) -> RatFun {
        RatFun {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn add(&self, other: &RatFun) -> RatFun {
        // a/b + c/d = (a d' + c b') / (b' d' g) with g = gcd(b, d).
        let g = poly_gcd(&self.den, &other.den);
        let b1 = self.den.div_exact(&g).expect("gcd divides");
        let d1 = other.den.div_exact(&g).expect("gcd divides");
        let num = self.num.mul(&d1).add(&other.num.mul(&b1));
        let den = self.den.mul(&d1);
        RatFun::new(num, den).expect("nonzero denominator")
    }

    pub fn sub(&self, other: &RatFun) -> RatFun {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &RatFun) -> RatFun {
        RatFun::new(self.num.mul(&other.num), self.den.mul(&other.den))
            .expect("nonzero denominator")
    }

    pub fn div(&self, other: &RatFun) -> Result<RatFun> {
        if other.is_zero() {
            return Err(Error::DivisionByZero);
        }
        RatFun::new(self.num.mul(&other.den), self.den.mul(&other.num))
    }

    pub fn recip(&self) -> Result<RatFun> {
        RatFun::one(self.space()).div(self)
    }

    pub fn scale(&self, c: &BigRational) -> RatFun {
        RatFun::new(self.num.scale(c), self.den.clone()).expect("nonzero denominator")
    }

    pub fn pow(&self, e: i32) -> Result<RatFun> {
        let p = RatFun {
            num: self.num.pow(e.unsigned_abs()),
            den: self.den.pow(e.unsigned_abs()),
        };
        if e < 0 {
            p.recip()
        } else {
            Ok(p)
        }
    }

    /// Formal partial derivative (quotient rule).
    pub fn diff(&self, v: VarId) -> RatFun {
        let n = self
            .num
            .diff(v)
            .mul(&self.den)
            .sub(&self.num.mul(&self.den.diff(v)));
        RatFun::new(n, self.den.mul(&self.den)).expect("nonzero denominator")
    }

    pub fn depends_on(&self, v: VarId) -> bool {
        self.num.depends_on(v) || self.den.depends_on(v)
    }

    pub fn variables(&self) -> Vec<VarId> {
        let mut vs = self.num.variables();
        for v in self.den.variables() {
            if !vs.contains(&v) {
                vs.push(v);
            }
        }
        vs.sort();
        vs
    }

    /// Substitute rational functions for a subset of variables. Images must
    /// live over `target`, an extension or reordering target space; variables
    /// without an image map to themselves (and must exist in `target` under
    /// the same id).
    pub fn substitute(
        &self,
        target: &Arc<VarSpace>,
        images: &HashMap<VarId, RatFun>,
    ) -> Result<RatFun> {
        let sub_poly = |p: &Poly| -> Result<RatFun> {
            let mut acc = RatFun::zero(target);
            for (m, c) in p.terms() {
                let mut term = RatFun::rational(target, c.clone());
                for (i, &e) in m.0.iter().enumerate() {
                    if e == 0 {
                        continue;
                    }
                    let v = VarId(i as u32);
                    let img = match images.get(&v) {
                        Some(r) => r.clone(),
                        None => RatFun::var(target, v),
                    };
                    term = term.mul(&img.pow(e as i32)?);
                }
                acc = acc.add(&term);
            }
            Ok(acc)
        };
        let n = sub_poly(&self.num)?;
        let d = sub_poly(&self.den)?;
        if d.is_zero() {
            return Err(Error::DivisionByZero);
        }
        n.div(&d)
    }

    /// Floating evaluation with a pole guard: errors when the denominator's
    /// magnitude falls below 1e-12 relative to the scale of its terms.
    pub fn eval_complex(&self, assign: &dyn Fn(VarId) -> Option<Complex64>) -> Result<Complex64> {
        let dv = self.den.eval_complex(assign)?;
        let scale = self.den.eval_abs_sum(assign).max(1.0);
        if dv.norm() < 1e-12 * scale {
            return Err(Error::PoleEvaluation {
                denom_abs: dv.norm(),
            });
        }
        let nv = self.num.eval_complex(assign)?;
        Ok(nv / dv)
    }

    /// Evaluate with a map from variable id to value.
    pub fn eval_map(&self, values: &HashMap<VarId, Complex64>) -> Result<Complex64> {
        self.eval_complex(&|v| values.get(&v).copied())
    }

    /// Max total degree of numerator and denominator in the given variables.
    pub fn degree_in_set(&self, vars: &[VarId]) -> u32 {
        self.num.degree_in_set(vars).max(self.den.degree_in_set(vars))
    }
}

impl fmt::Display for RatFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            if self.num.num_terms() > 1 {
                return write!(f, "{}", self.num);
            }
            return write!(f, "{}", self.num);
        }
        let num_s = if self.num.num_terms() > 1 {
            format!("({})", self.num)
        } else {
            format!("{}", self.num)
        };
        write!(f, "{}/({})", num_s, self.den)
    }
}

/// Convenience for tests and presets.
pub fn big(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::vars::VarKind;

    fn sp() -> Arc<VarSpace> {
        let mut s = VarSpace::new();
        s.declare("x", VarKind::Base).unwrap();
        s.declare("s", VarKind::Param).unwrap();
        Arc::new(s)
    }

    fn x(spc: &Arc<VarSpace>) -> RatFun {
        RatFun::var(spc, VarId(0))
    }
    fn s_(spc: &Arc<VarSpace>) -> RatFun {
        RatFun::var(spc, VarId(1))
    }

    #[test]
    fn normalization_cancels_common_factor() {
        let spc = sp();
        // (x^2 - 1)/(x - 1) = x + 1
        let num = x(&spc).mul(&x(&spc)).sub(&RatFun::one(&spc));
        let den = x(&spc).sub(&RatFun::one(&spc));
        let f = RatFun::new(num.num().clone(), den.num().clone()).unwrap();
        let want = x(&spc).add(&RatFun::one(&spc));
        assert_eq!(f, want);
    }

    #[test]
    fn zero_numerator() {
        let spc = sp();
        let f = RatFun::new(Poly::zero(&spc), Poly::var(&spc, VarId(0))).unwrap();
        assert!(f.is_zero());
        assert!(f.den().is_one());
    }

    #[test]
    fn zero_denominator_rejected() {
        let spc = sp();
        assert!(matches!(
            RatFun::new(Poly::one(&spc), Poly::zero(&spc)),
            Err(Error::DivisionByZero)
        ));
    }

    #[test]
    fn scalar_normalization_matches() {
        let spc = sp();
        // (2x, 4) and (x, 2) normalize identically
        let f =
            RatFun::new(Poly::var(&spc, VarId(0)).scale(&big(2, 1)), Poly::int(&spc, 4)).unwrap();
        let g = RatFun::new(Poly::var(&spc, VarId(0)), Poly::int(&spc, 2)).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn normalization_idempotent() {
        let spc = sp();
        let f = x(&spc)
            .mul(&x(&spc))
            .mul(&s_(&spc))
            .div(&RatFun::one(&spc).sub(&x(&spc)))
            .unwrap();
        let again = RatFun::new(f.num().clone(), f.den().clone()).unwrap();
        assert_eq!(f, again);
    }

    #[test]
    fn diff_power_and_independence() {
        let spc = sp();
        let f = x(&spc).mul(&x(&spc));
        assert_eq!(f.diff(VarId(0)), x(&spc).scale(&big(2, 1)));
        assert!(s_(&spc).diff(VarId(0)).is_zero());
    }

    #[test]
    fn diff_quotient_rule_matches_finite_differences() {
        // d/dx [x^2 s / (1 - x)] checked against a 5-point numeric stencil.
        let spc = sp();
        let f = x(&spc)
            .mul(&x(&spc))
            .mul(&s_(&spc))
            .div(&RatFun::one(&spc).sub(&x(&spc)))
            .unwrap();
        let df = f.diff(VarId(0));
        let pts = [(0.3, 1.7), (0.52, -0.9), (-1.1, 0.4), (2.5, 2.0), (0.05, 3.0)];
        for (xv, sv) in pts {
            let at = |xx: f64| {
                let m: HashMap<VarId, Complex64> = HashMap::from([
                    (VarId(0), Complex64::new(xx, 0.0)),
                    (VarId(1), Complex64::new(sv, 0.0)),
                ]);
                f.eval_map(&m).unwrap().re
            };
            let h = 1e-4;
            // 5-point central difference, O(h^4).
            let fd = (-at(xv + 2.0 * h) + 8.0 * at(xv + h) - 8.0 * at(xv - h) + at(xv - 2.0 * h))
                / (12.0 * h);
            let m: HashMap<VarId, Complex64> = HashMap::from([
                (VarId(0), Complex64::new(xv, 0.0)),
                (VarId(1), Complex64::new(sv, 0.0)),
            ]);
            let sym = df.eval_map(&m).unwrap().re;
            assert!(
                ((fd - sym) / sym.abs().max(1.0)).abs() < 1e-8,
                "x={xv} s={sv}: fd={fd} sym={sym}"
            );
        }
    }

    #[test]
    fn eval_examples() {
        let spc = sp();
        // x/(1-x) at 0.5 -> 1.0
        let f = x(&spc).div(&RatFun::one(&spc).sub(&x(&spc))).unwrap();
        let m = HashMap::from([(VarId(0), Complex64::new(0.5, 0.0))]);
        assert!((f.eval_map(&m).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        // 1/x at 0 -> pole error
        let g = RatFun::one(&spc).div(&x(&spc)).unwrap();
        let m0 = HashMap::from([(VarId(0), Complex64::new(0.0, 0.0))]);
        assert!(matches!(
            g.eval_map(&m0),
            Err(Error::PoleEvaluation { .. })
        ));
    }

    #[test]
    fn eval_hand_checked_point() {
        // (a - (a+b)x)/(x(1-x)) at a=1, b=2, x=1/4 equals 4/3.
        let mut s = VarSpace::new();
        let xv = s.declare("x", VarKind::Base).unwrap();
        let av = s.declare("a", VarKind::Param).unwrap();
        let bv = s.declare("b", VarKind::Param).unwrap();
        let spc = Arc::new(s);
        let (x, a, b) = (
            RatFun::var(&spc, xv),
            RatFun::var(&spc, av),
            RatFun::var(&spc, bv),
        );
        let f = a
            .sub(&a.add(&b).mul(&x))
            .div(&x.mul(&RatFun::one(&spc).sub(&x)))
            .unwrap();
        let m = HashMap::from([
            (xv, Complex64::new(0.25, 0.0)),
            (av, Complex64::new(1.0, 0.0)),
            (bv, Complex64::new(2.0, 0.0)),
        ]);
        let got = f.eval_map(&m).unwrap();
        assert!((got - Complex64::new(4.0 / 3.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn substitution_composes() {
        let spc = sp();
        // f = s/(1+x); substitute s -> x^2: f = x^2/(1+x)
        let f = s_(&spc).div(&RatFun::one(&spc).add(&x(&spc))).unwrap();
        let images = HashMap::from([(VarId(1), x(&spc).mul(&x(&spc)))]);
        let g = f.substitute(&spc, &images).unwrap();
        let want = x(&spc)
            .mul(&x(&spc))
            .div(&RatFun::one(&spc).add(&x(&spc)))
            .unwrap();
        assert_eq!(g, want);
    }
}

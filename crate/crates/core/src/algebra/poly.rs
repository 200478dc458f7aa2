//! Sparse multivariate polynomials over the rationals.
//!
//! Terms are kept in a `BTreeMap` keyed by exponent vectors under graded
//! lexicographic order (total degree first, then declaration order), so the
//! representation is canonical: structural equality is mathematical equality.
//! Zero coefficients are never stored.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::vars::{common_space, VarId, VarSpace};
use crate::error::{Error, Result};

/// Exponent vector aligned with a `VarSpace`. Ordered graded-lex.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mono(pub Box<[u32]>);

impl Mono {
    pub fn unit(nvars: usize) -> Self {
        Mono(vec![0u32; nvars].into_boxed_slice())
    }

    pub fn of_var(nvars: usize, v: VarId, exp: u32) -> Self {
        let mut e = vec![0u32; nvars];
        e[v.index()] = exp;
        Mono(e.into_boxed_slice())
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn exp(&self, v: VarId) -> u32 {
        self.0.get(v.index()).copied().unwrap_or(0)
    }

    pub fn mul(&self, other: &Mono) -> Mono {
        debug_assert_eq!(self.0.len(), other.0.len());
        Mono(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn divides(&self, other: &Mono) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| a <= b)
    }

    /// `other / self`; caller guarantees divisibility.
    pub fn div(&self, other: &Mono) -> Mono {
        debug_assert!(self.divides(other));
        Mono(
            other
                .0
                .iter()
                .zip(self.0.iter())
                .map(|(b, a)| b - a)
                .collect(),
        )
    }

    fn padded(&self, nvars: usize) -> Mono {
        if self.0.len() == nvars {
            return self.clone();
        }
        let mut e = self.0.to_vec();
        e.resize(nvars, 0);
        Mono(e.into_boxed_slice())
    }
}

impl Ord for Mono {
    fn cmp(&self, other: &Self) -> Ordering {
        let (da, db) = (self.total_degree(), other.total_degree());
        if da != db {
            return da.cmp(&db);
        }
        // Same degree: lexicographic, earlier variable more significant.
        for (a, b) in self.0.iter().zip(other.0.iter()) {
            if a != b {
                return a.cmp(b);
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse multivariate polynomial with `BigRational` coefficients.
#[derive(Debug, Clone)]
pub struct Poly {
    space: Arc<VarSpace>,
    terms: BTreeMap<Mono, BigRational>,
}

impl PartialEq for Poly {
    fn eq(&self, other: &Self) -> bool {
        if Arc::ptr_eq(&self.space, &other.space) || self.space == other.space {
            return self.terms == other.terms;
        }
        // Allow comparison across prefix-extensions.
        let space = common_space(&self.space, &other.space);
        self.clone().lift(&space).terms == other.clone().lift(&space).terms
    }
}
impl Eq for Poly {}

impl Poly {
    pub fn zero(space: &Arc<VarSpace>) -> Self {
        Poly {
            space: space.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(space: &Arc<VarSpace>, c: BigRational) -> Self {
        let mut p = Poly::zero(space);
        if !c.is_zero() {
            p.terms.insert(Mono::unit(space.len()), c);
        }
        p
    }

    pub fn int(space: &Arc<VarSpace>, n: i64) -> Self {
        Poly::constant(space, BigRational::from_integer(BigInt::from(n)))
    }

    pub fn one(space: &Arc<VarSpace>) -> Self {
        Poly::int(space, 1)
    }

    pub fn var(space: &Arc<VarSpace>, v: VarId) -> Self {
        let mut p = Poly::zero(space);
        p.terms
            .insert(Mono::of_var(space.len(), v, 1), BigRational::one());
        p
    }

    pub fn var_pow(space: &Arc<VarSpace>, v: VarId, e: u32) -> Self {
        if e == 0 {
            return Poly::one(space);
        }
        let mut p = Poly::zero(space);
        p.terms
            .insert(Mono::of_var(space.len(), v, e), BigRational::one());
        p
    }

    pub fn from_terms(
        space: &Arc<VarSpace>,
        it: impl IntoIterator<Item = (Mono, BigRational)>,
    ) -> Self {
        let mut p = Poly::zero(space);
        for (m, c) in it {
            p.add_term(m, c);
        }
        p
    }

    pub fn space(&self) -> &Arc<VarSpace> {
        &self.space
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &BigRational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Some(c) if the polynomial is the constant c (including zero).
    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                if m.total_degree() == 0 {
                    Some(c.clone())
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().map(|c| c.is_one()).unwrap_or(false)
    }

    fn add_term(&mut self, m: Mono, c: BigRational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    /// Re-target to a prefix-extension of the current space.
    pub fn lift(mut self, space: &Arc<VarSpace>) -> Poly {
        if Arc::ptr_eq(&self.space, space) || self.space.len() == space.len() {
            self.space = space.clone();
            return self;
        }
        assert!(
            self.space.is_prefix_of(space),
            "lift target is not an extension"
        );
        let n = space.len();
        let terms = std::mem::take(&mut self.terms)
            .into_iter()
            .map(|(m, c)| (m.padded(n), c))
            .collect();
        Poly {
            space: space.clone(),
            terms,
        }
    }

    /// Rebuild over `space`, sending variable `i` of the old space to
    /// `map[i]` of the new one. Used for declaration-order permutations.
    pub fn remap(&self, space: &Arc<VarSpace>, map: &[VarId]) -> Poly {
        let n = space.len();
        let terms = self
            .terms
            .iter()
            .map(|(m, c)| {
                let mut e = vec![0u32; n];
                for (i, &exp) in m.0.iter().enumerate() {
                    if exp > 0 {
                        e[map[i].index()] += exp;
                    }
                }
                (Mono(e.into_boxed_slice()), c.clone())
            })
            .collect();
        Poly {
            space: space.clone(),
            terms,
        }
    }

    pub fn neg(&self) -> Poly {
        Poly {
            space: self.space.clone(),
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), -c.clone()))
                .collect(),
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let space = common_space(&self.space, &other.space);
        let mut out = self.clone().lift(&space);
        for (m, c) in other.clone().lift(&space).terms {
            out.add_term(m, c);
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let space = common_space(&self.space, &other.space);
        let a = self.clone().lift(&space);
        let b = other.clone().lift(&space);
        let mut out = Poly::zero(&space);
        for (ma, ca) in &a.terms {
            for (mb, cb) in &b.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn scale(&self, c: &BigRational) -> Poly {
        if c.is_zero() {
            return Poly::zero(&self.space);
        }
        Poly {
            space: self.space.clone(),
            terms: self
                .terms
                .iter()
                .map(|(m, k)| (m.clone(), k * c))
                .collect(),
        }
    }

    pub fn mul_var_pow(&self, v: VarId, e: u32) -> Poly {
        if e == 0 {
            return self.clone();
        }
        let shift = Mono::of_var(self.space.len(), v, e);
        Poly {
            space: self.space.clone(),
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.mul(&shift), c.clone()))
                .collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut out = Poly::one(&self.space);
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// Formal partial derivative.
    pub fn diff(&self, v: VarId) -> Poly {
        let mut out = Poly::zero(&self.space);
        for (m, c) in &self.terms {
            let e = m.exp(v);
            if e == 0 {
                continue;
            }
            let mut ne = m.0.to_vec();
            ne[v.index()] = e - 1;
            out.add_term(
                Mono(ne.into_boxed_slice()),
                c * BigRational::from_integer(BigInt::from(e)),
            );
        }
        out
    }

    pub fn total_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|m| m.total_degree())
            .max()
            .unwrap_or(0)
    }

    pub fn degree_in(&self, v: VarId) -> u32 {
        self.terms.keys().map(|m| m.exp(v)).max().unwrap_or(0)
    }

    /// Max total degree over a subset of variables.
    pub fn degree_in_set(&self, vars: &[VarId]) -> u32 {
        self.terms
            .keys()
            .map(|m| vars.iter().map(|&v| m.exp(v)).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn depends_on(&self, v: VarId) -> bool {
        self.terms.keys().any(|m| m.exp(v) > 0)
    }

    pub fn variables(&self) -> Vec<VarId> {
        self.space
            .ids()
            .filter(|&v| self.depends_on(v))
            .collect()
    }

    /// Leading (graded-lex max) term.
    pub fn leading(&self) -> Option<(&Mono, &BigRational)> {
        self.terms.iter().next_back()
    }

    pub fn leading_coeff(&self) -> BigRational {
        self.leading()
            .map(|(_, c)| c.clone())
            .unwrap_or_else(BigRational::zero)
    }

    /// Coefficient of `v^k`, as a polynomial in the remaining variables
    /// (exponent of `v` zeroed out).
    pub fn coeff_of(&self, v: VarId, k: u32) -> Poly {
        let mut out = Poly::zero(&self.space);
        for (m, c) in &self.terms {
            if m.exp(v) == k {
                let mut e = m.0.to_vec();
                e[v.index()] = 0;
                out.add_term(Mono(e.into_boxed_slice()), c.clone());
            }
        }
        out
    }

    /// Exact division; `None` if `d` does not divide `self`.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        if d.is_zero() {
            return None;
        }
        let space = common_space(&self.space, &d.space);
        let den = d.clone().lift(&space);
        let mut rem = self.clone().lift(&space);
        let mut quo = Poly::zero(&space);
        let (dm, dc) = {
            let (m, c) = den.leading().unwrap();
            (m.clone(), c.clone())
        };
        while !rem.is_zero() {
            let (rm, rc) = {
                let (m, c) = rem.leading().unwrap();
                (m.clone(), c.clone())
            };
            if !dm.divides(&rm) {
                return None;
            }
            let qm = dm.div(&rm);
            let qc = rc / &dc;
            let mut t = Poly::zero(&space);
            t.terms.insert(qm, qc);
            rem = rem.sub(&t.mul(&den));
            quo = quo.add(&t);
        }
        Some(quo)
    }

    /// Substitute a complex value for every variable; Horner accumulation by
    /// recursion over the variables.
    pub fn eval_complex(&self, assign: &dyn Fn(VarId) -> Option<Complex64>) -> Result<Complex64> {
        for v in self.variables() {
            if assign(v).is_none() {
                return Err(Error::MissingAssignment(self.space.name(v).to_string()));
            }
        }
        let terms: Vec<(Vec<u32>, Complex64)> = self
            .terms
            .iter()
            .map(|(m, c)| {
                let cf = Complex64::new(
                    c.numer().to_f64().unwrap_or(f64::NAN),
                    0.0,
                ) / Complex64::new(c.denom().to_f64().unwrap_or(f64::NAN), 0.0);
                (m.0.to_vec(), cf)
            })
            .collect();
        Ok(horner(&terms, 0, self.space.len(), assign))
    }

    /// Sum of absolute values of evaluated terms; scale factor for pole guards.
    pub fn eval_abs_sum(&self, assign: &dyn Fn(VarId) -> Option<Complex64>) -> f64 {
        let mut s = 0.0;
        for (m, c) in &self.terms {
            let mut t = (c.numer().to_f64().unwrap_or(f64::NAN)
                / c.denom().to_f64().unwrap_or(f64::NAN))
            .abs();
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    if let Some(z) = assign(VarId(i as u32)) {
                        t *= z.norm().powi(e as i32);
                    }
                }
            }
            s += t;
        }
        s
    }

    /// Rational content: gcd of numerators over lcm of denominators, signed
    /// so the primitive part has positive leading coefficient.
    pub fn content(&self) -> BigRational {
        if self.is_zero() {
            return BigRational::zero();
        }
        let mut num_gcd = BigInt::zero();
        let mut den_lcm = BigInt::one();
        for c in self.terms.values() {
            num_gcd = num_bigint_gcd(&num_gcd, c.numer());
            den_lcm = &den_lcm / num_bigint_gcd(&den_lcm, c.denom()) * c.denom();
        }
        let mut content = BigRational::new(num_gcd, den_lcm);
        if self.leading_coeff().is_negative() {
            content = -content;
        }
        content
    }

    /// `self / content`: integer coefficients, gcd 1, positive leading coeff.
    pub fn primitive_part(&self) -> Poly {
        if self.is_zero() {
            return self.clone();
        }
        let c = self.content();
        self.scale(&c.recip())
    }
}

fn num_bigint_gcd(a: &BigInt, b: &BigInt) -> BigInt {
    use num_integer::Integer;
    a.gcd(b)
}

fn horner(
    terms: &[(Vec<u32>, Complex64)],
    var: usize,
    nvars: usize,
    assign: &dyn Fn(VarId) -> Option<Complex64>,
) -> Complex64 {
    if terms.is_empty() {
        return Complex64::new(0.0, 0.0);
    }
    if var == nvars {
        return terms.iter().map(|(_, c)| c).sum();
    }
    // Group by exponent of `var`, descending, then Horner.
    let mut by_exp: BTreeMap<u32, Vec<(Vec<u32>, Complex64)>> = BTreeMap::new();
    let mut constant_in_var = true;
    for (m, c) in terms {
        if m[var] > 0 {
            constant_in_var = false;
        }
        by_exp.entry(m[var]).or_default().push((m.clone(), *c));
    }
    if constant_in_var {
        return horner(&by_exp.remove(&0).unwrap_or_default(), var + 1, nvars, assign);
    }
    let x = assign(VarId(var as u32)).expect("checked above");
    let mut acc = Complex64::new(0.0, 0.0);
    let mut prev_exp: Option<u32> = None;
    for (&e, group) in by_exp.iter().rev() {
        if let Some(pe) = prev_exp {
            acc *= x.powu(pe - e);
        }
        acc += horner(group, var + 1, nvars, assign);
        prev_exp = Some(e);
    }
    if let Some(pe) = prev_exp {
        acc *= x.powu(pe);
    }
    acc
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms.iter().rev() {
            let neg = c.is_negative();
            let abs = if neg { -c.clone() } else { c.clone() };
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mut parts: Vec<String> = Vec::new();
            if !abs.is_one() || m.total_degree() == 0 {
                parts.push(abs.to_string());
            }
            for (i, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let name = self.space.name(VarId(i as u32));
                if e == 1 {
                    parts.push(name.to_string());
                } else {
                    parts.push(format!("{}^{}", name, e));
                }
            }
            write!(f, "{}", parts.join("*"))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::vars::VarKind;

    fn space2() -> Arc<VarSpace> {
        let mut s = VarSpace::new();
        s.declare("x", VarKind::Base).unwrap();
        s.declare("s", VarKind::Param).unwrap();
        Arc::new(s)
    }

    #[test]
    fn arithmetic_basics() {
        let sp = space2();
        let x = Poly::var(&sp, VarId(0));
        let s = Poly::var(&sp, VarId(1));
        let p = x.mul(&x).add(&s.scale(&BigRational::from_integer(2.into())));
        assert_eq!(p.to_string(), "x^2 + 2*s");
        assert_eq!(p.sub(&p), Poly::zero(&sp));
        assert_eq!(p.total_degree(), 2);
    }

    #[test]
    fn power_rule() {
        let sp = space2();
        let x = Poly::var(&sp, VarId(0));
        let p = x.pow(2);
        assert_eq!(p.diff(VarId(0)).to_string(), "2*x");
        assert_eq!(p.diff(VarId(1)), Poly::zero(&sp));
    }

    #[test]
    fn exact_division() {
        let sp = space2();
        let x = Poly::var(&sp, VarId(0));
        let s = Poly::var(&sp, VarId(1));
        let a = x.add(&s);
        let b = x.sub(&s);
        let prod = a.mul(&b);
        assert_eq!(prod.div_exact(&a).unwrap(), b);
        assert_eq!(prod.div_exact(&b).unwrap(), a);
        assert!(a.div_exact(&prod).is_none());
    }

    #[test]
    fn graded_lex_leading() {
        let sp = space2();
        let x = Poly::var(&sp, VarId(0));
        let s = Poly::var(&sp, VarId(1));
        // x*s^2 has degree 3, beats x^2.
        let p = x.mul(&s).mul(&s).add(&x.mul(&x));
        let (m, _) = p.leading().unwrap();
        assert_eq!(m.exp(VarId(0)), 1);
        assert_eq!(m.exp(VarId(1)), 2);
        // Within the same degree the earlier variable dominates.
        let q = x.mul(&x).add(&x.mul(&s));
        let (m, _) = q.leading().unwrap();
        assert_eq!(m.exp(VarId(0)), 2);
    }

    #[test]
    fn eval_horner() {
        let sp = space2();
        let x = Poly::var(&sp, VarId(0));
        let s = Poly::var(&sp, VarId(1));
        // x^2 s + 3 x - 1/2
        let p = x
            .pow(2)
            .mul(&s)
            .add(&x.scale(&BigRational::from_integer(3.into())))
            .add(&Poly::constant(
                &sp,
                BigRational::new((-1).into(), 2.into()),
            ));
        let assign = |v: VarId| -> Option<Complex64> {
            Some(if v == VarId(0) {
                Complex64::new(2.0, 0.0)
            } else {
                Complex64::new(0.0, 1.0)
            })
        };
        let got = p.eval_complex(&assign).unwrap();
        let want = Complex64::new(5.5, 4.0);
        assert!((got - want).norm() < 1e-12);
    }

    #[test]
    fn content_and_primitive() {
        let sp = space2();
        let x = Poly::var(&sp, VarId(0));
        let p = x
            .scale(&BigRational::new(4.into(), 3.into()))
            .add(&Poly::constant(&sp, BigRational::new(2.into(), 3.into())));
        let c = p.content();
        assert_eq!(c, BigRational::new(2.into(), 3.into()));
        let pp = p.primitive_part();
        assert_eq!(pp.to_string(), "2*x + 1");
    }
}

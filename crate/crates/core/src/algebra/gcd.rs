//! Multivariate polynomial gcd.
//!
//! Strategy: strip the common monomial factor, then probe each shared
//! variable by evaluating the remaining variables at random integer points
//! and taking exact univariate gcds. The image gcd degree bounds the true
//! gcd degree from above provided the leading coefficients do not vanish at
//! the point, so a degree-0 image certifies that the variable does not occur
//! in the gcd at all. Only variables that survive the probe enter a
//! primitive pseudo-remainder sequence; contents recurse through the same
//! path. Inputs in this crate stay at desk scale, and the probe keeps the
//! PRS away from the coprime worst cases where its contents blow up.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};

use super::poly::{Mono, Poly};
use super::vars::VarId;

/// Gcd normalized to a primitive polynomial (integer coefficients, positive
/// leading coefficient); `gcd(0, p) = primitive(p)`.
pub fn poly_gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.primitive_part();
    }
    if b.is_zero() {
        return a.primitive_part();
    }
    if a.as_constant().is_some() || b.as_constant().is_some() {
        return Poly::one(a.space());
    }
    let a = a.primitive_part();
    let b = b.primitive_part();
    if a == b {
        return a;
    }

    // Common monomial factor.
    let mono = common_monomial(&a, &b);
    let space = a.space().clone();
    let mono_poly = Poly::from_terms(&space, [(mono.clone(), BigRational::one())]);
    let a = a
        .div_exact(&mono_poly)
        .expect("common monomial divides");
    let b = b
        .div_exact(&mono_poly)
        .expect("common monomial divides");

    let shared: Vec<VarId> = a
        .variables()
        .into_iter()
        .filter(|&v| b.depends_on(v))
        .collect();

    // Probe: which shared variables can occur in the gcd, and with which
    // degree estimate?
    let mut active: Vec<(VarId, u32)> = Vec::new();
    for &v in &shared {
        match probe_degree(&a, &b, v) {
            Some(0) => {}
            Some(d) => active.push((v, d)),
            None => active.push((v, a.degree_in(v).min(b.degree_in(v)))),
        }
    }
    if active.is_empty() {
        return mono_poly;
    }
    // Prefer a main variable in which both operands are monic up to a
    // constant: the pseudo-remainder sequence then never multiplies by a
    // polynomial leading coefficient.
    let monic_in = |p: &Poly, v: VarId| -> bool {
        p.coeff_of(v, p.degree_in(v)).as_constant().is_some()
    };
    let (&(main, _), _) = active
        .iter()
        .map(|t| (t, t.1))
        .min_by_key(|&(t, d)| {
            let both_monic = monic_in(&a, t.0) && monic_in(&b, t.0);
            (!both_monic, d)
        })
        .expect("nonempty");

    let core = prs_gcd(&a, &b, main);
    mono_poly.mul(&core).primitive_part()
}

fn common_monomial(a: &Poly, b: &Poly) -> Mono {
    let n = a.space().len();
    let min_exp = |p: &Poly| -> Vec<u32> {
        let mut m = vec![u32::MAX; n];
        for (mono, _) in p.terms() {
            for (i, &e) in mono.0.iter().enumerate() {
                m[i] = m[i].min(e);
            }
        }
        m
    };
    let (ma, mb) = (min_exp(a), min_exp(b));
    Mono(
        ma.iter()
            .zip(mb.iter())
            .map(|(&x, &y)| x.min(y))
            .collect(),
    )
}

/// Lower-bound certificate for deg_v(gcd): evaluate the other variables at
/// scattered integer points modulo a large prime and take the univariate gcd
/// degree over F_p. The image of the true gcd divides the image gcd whenever
/// the leading coefficients survive the reduction (checked), so the image
/// degree is >= deg_v(gcd): a zero answer certifies that v does not occur in
/// the gcd. `None` when no admissible point is found.
fn probe_degree(a: &Poly, b: &Poly, v: VarId) -> Option<u32> {
    let others: Vec<VarId> = a
        .variables()
        .into_iter()
        .chain(b.variables())
        .filter(|&u| u != v)
        .collect();
    let da = a.degree_in(v);
    let db = b.degree_in(v);
    let mut best: Option<u32> = None;
    for round in 0..4u64 {
        let mut assign: HashMap<VarId, i64> = HashMap::new();
        for &u in &others {
            assign.insert(u, eval_point(u.0 as u64, round));
        }
        let (Some(ua), Some(ub)) = (
            univariate_image_mod_p(a, v, da, &assign),
            univariate_image_mod_p(b, v, db, &assign),
        ) else {
            continue;
        };
        // Leading coefficients must survive the evaluation.
        if ua.last().copied().unwrap_or(0) == 0 || ub.last().copied().unwrap_or(0) == 0 {
            continue;
        }
        let d = univariate_gcd_degree_mod_p(ua, ub);
        best = Some(best.map_or(d, |x: u32| x.min(d)));
        if best == Some(0) {
            return best;
        }
        if round >= 1 && best.is_some() {
            return best;
        }
    }
    best
}

const PROBE_PRIME: u64 = 2_305_843_009_213_693_951; // 2^61 - 1

fn mulm(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % PROBE_PRIME as u128) as u64
}

fn addm(a: u64, b: u64) -> u64 {
    let s = a as u128 + b as u128;
    (s % PROBE_PRIME as u128) as u64
}

fn subm(a: u64, b: u64) -> u64 {
    addm(a, PROBE_PRIME - b % PROBE_PRIME)
}

fn powm(mut base: u64, mut e: u64) -> u64 {
    let mut acc = 1u64;
    base %= PROBE_PRIME;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulm(acc, base);
        }
        base = mulm(base, base);
        e >>= 1;
    }
    acc
}

fn invm(a: u64) -> u64 {
    powm(a, PROBE_PRIME - 2)
}

fn bigint_mod_p(x: &BigInt) -> u64 {
    use num_traits::ToPrimitive;
    let m = x % BigInt::from(PROBE_PRIME);
    let m = if m.is_negative() {
        m + BigInt::from(PROBE_PRIME)
    } else {
        m
    };
    m.to_u64().expect("reduced")
}

fn rational_mod_p(c: &BigRational) -> Option<u64> {
    let den = bigint_mod_p(c.denom());
    if den == 0 {
        return None;
    }
    Some(mulm(bigint_mod_p(c.numer()), invm(den)))
}

fn univariate_image_mod_p(
    p: &Poly,
    v: VarId,
    deg: u32,
    assign: &HashMap<VarId, i64>,
) -> Option<Vec<u64>> {
    let mut coeffs = vec![0u64; deg as usize + 1];
    for (m, c) in p.terms() {
        let mut val = rational_mod_p(c)?;
        for (i, &e) in m.0.iter().enumerate() {
            if e == 0 || i == v.index() {
                continue;
            }
            let x = *assign.get(&VarId(i as u32)).unwrap_or(&0);
            let xm = if x >= 0 {
                x as u64 % PROBE_PRIME
            } else {
                PROBE_PRIME - ((-x) as u64 % PROBE_PRIME)
            };
            val = mulm(val, powm(xm, e as u64));
        }
        coeffs[m.exp(v) as usize] = addm(coeffs[m.exp(v) as usize], val);
    }
    while coeffs.len() > 1 && *coeffs.last().unwrap() == 0 {
        coeffs.pop();
    }
    Some(coeffs)
}

/// Degree of gcd over F_p by plain Euclid.
fn univariate_gcd_degree_mod_p(mut a: Vec<u64>, mut b: Vec<u64>) -> u32 {
    let is_zero = |p: &Vec<u64>| p.len() == 1 && p[0] == 0;
    let trim = |p: &mut Vec<u64>| {
        while p.len() > 1 && *p.last().unwrap() == 0 {
            p.pop();
        }
    };
    if a.len() < b.len() {
        std::mem::swap(&mut a, &mut b);
    }
    loop {
        if is_zero(&b) {
            return a.len() as u32 - 1;
        }
        if b.len() == 1 {
            return 0;
        }
        let lead_inv = invm(*b.last().unwrap());
        while a.len() >= b.len() && !is_zero(&a) {
            let shift = a.len() - b.len();
            let factor = mulm(*a.last().unwrap(), lead_inv);
            for (i, &bc) in b.iter().enumerate() {
                a[i + shift] = subm(a[i + shift], mulm(factor, bc));
            }
            let last = a.len() - 1;
            a[last] = 0;
            trim(&mut a);
        }
        std::mem::swap(&mut a, &mut b);
        trim(&mut b);
    }
}

/// Deterministic scattered small integers, distinct per variable and round.
fn eval_point(var: u64, round: u64) -> i64 {
    let mut x = var
        .wrapping_mul(0x9e3779b97f4a7c15)
        .wrapping_add(round.wrapping_mul(0xbf58476d1ce4e5b9))
        .wrapping_add(0x94d049bb133111eb);
    x ^= x >> 31;
    x = x.wrapping_mul(0xff51afd7ed558ccd);
    x ^= x >> 29;
    let m = (x % 19) as i64 + 2; // 2..=20
    if x & 1 == 0 {
        m
    } else {
        -m
    }
}

/// Primitive PRS in the chosen main variable; contents recurse through
/// `poly_gcd`.
fn prs_gcd(a: &Poly, b: &Poly, v: VarId) -> Poly {
    let ca = content_wrt(a, v);
    let cb = content_wrt(b, v);
    let cg = poly_gcd(&ca, &cb);
    let pa = a.div_exact(&ca).expect("content divides");
    let pb = b.div_exact(&cb).expect("content divides");

    let mut f = pa;
    let mut g = pb;
    if f.degree_in(v) < g.degree_in(v) {
        std::mem::swap(&mut f, &mut g);
    }
    loop {
        let r = pseudo_rem(&f, &g, v);
        if r.is_zero() {
            break;
        }
        if r.degree_in(v) == 0 {
            return cg.primitive_part();
        }
        f = g;
        g = primitive_wrt(&r, v);
    }
    cg.mul(&primitive_wrt(&g, v)).primitive_part()
}

/// Pseudo-remainder of `f` by `g` in the variable `v`. When the divisor is
/// monic in `v` up to a rational constant this is plain division and the
/// remainder never grows beyond the dividend's size.
fn pseudo_rem(f: &Poly, g: &Poly, v: VarId) -> Poly {
    let dg = g.degree_in(v);
    let lg = g.coeff_of(v, dg);
    let lg_const = lg.as_constant();
    let mut r = f.clone();
    while !r.is_zero() {
        let dr = r.degree_in(v);
        if dr < dg {
            break;
        }
        let lr = r.coeff_of(v, dr);
        match &lg_const {
            Some(c) => {
                // r <- r - (lr / c) * v^(dr-dg) * g
                r = r.sub(&lr.scale(&c.recip()).mul_var_pow(v, dr - dg).mul(g));
            }
            None => {
                // r <- lg * r - lr * v^(dr-dg) * g
                r = r.mul(&lg).sub(&lr.mul_var_pow(v, dr - dg).mul(g));
            }
        }
    }
    r
}

/// Gcd of the coefficients of `p` viewed as univariate in `v`.
fn content_wrt(p: &Poly, v: VarId) -> Poly {
    let d = p.degree_in(v);
    let mut c = Poly::zero(p.space());
    for k in 0..=d {
        let ck = p.coeff_of(v, k);
        if ck.is_zero() {
            continue;
        }
        c = poly_gcd(&c, &ck);
        if c.is_one() {
            break;
        }
    }
    c
}

fn primitive_wrt(p: &Poly, v: VarId) -> Poly {
    let c = content_wrt(p, v);
    p.div_exact(&c).expect("content divides")
}

/// Least common multiple, normalized primitive.
pub fn poly_lcm(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() || b.is_zero() {
        return Poly::zero(a.space());
    }
    let g = poly_gcd(a, b);
    a.mul(b)
        .div_exact(&g)
        .expect("gcd divides product")
        .primitive_part()
}

/// Reduce a fraction of polynomials: divide out the gcd, then scale so the
/// denominator's leading (graded-lex) coefficient is one.
pub fn reduce_fraction(num: &Poly, den: &Poly) -> (Poly, Poly) {
    let g = poly_gcd(num, den);
    let mut n = num.div_exact(&g).expect("gcd divides");
    let mut d = den.div_exact(&g).expect("gcd divides");
    let lc = d.leading_coeff();
    if !lc.is_one() {
        let inv = lc.recip();
        n = n.scale(&inv);
        d = d.scale(&inv);
    }
    debug_assert!(d.leading_coeff().is_one());
    (n, d)
}

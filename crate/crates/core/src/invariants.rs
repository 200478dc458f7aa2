//! Rational differential invariants: exact verification of candidates and a
//! linear-algebra search over a bounded ansatz.
//!
//! A first integral of the order-k prolongation is a rational function of the
//! parameter-jet coordinates annihilated by every restricted base-direction
//! derivation. Verification applies the derivations and checks for exact
//! zero. The search fixes a grouplike denominator (a power of the scalar
//! fiber variable or of det U, whose logarithmic derivative along the
//! horizontal locus is a known coefficient-field element), enumerates
//! numerator monomials by fiber weight, and solves the resulting exact linear
//! system for the unknown coefficients.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::Zero;

use crate::algebra::gcd::poly_lcm;
use crate::algebra::linalg::QMatrix;
use crate::algebra::{Mono, Poly, RatFun, VarId};
use crate::connection::ParamConnection;
use crate::error::{Error, Result};
use crate::jet::ProlongedSystem;

/// Default caps for the search bounds.
pub const CAP_ORDER: u32 = 3;
pub const CAP_JET_DEGREE: u32 = 3;
pub const CAP_COEFF_DEGREE: u32 = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateInvariant {
    pub expr: RatFun,
    pub order: u32,
}

#[derive(Debug, Clone)]
pub struct VerifyOutcome {
    pub ok: bool,
    /// Residual D_i(F) per base direction, any nonzero one witnesses failure.
    pub residuals: Vec<(String, RatFun)>,
}

/// Apply every restricted base derivation to the candidate; all must vanish
/// exactly.
pub fn verify_first_integral(
    candidate: &RatFun,
    sys: &ProlongedSystem,
) -> Result<VerifyOutcome> {
    let mut residuals = Vec::new();
    let mut ok = true;
    for &b in sys.connection().base() {
        let r = sys.derive(b, candidate)?;
        if !r.is_zero() {
            ok = false;
        }
        residuals.push((sys.space().name(b).to_string(), r));
    }
    Ok(VerifyOutcome { ok, residuals })
}

/// Denominator choice for the ansatz: a power of the scalar fiber variable
/// (n = 1) or of det U.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DenomBase {
    FiberScalar,
    DetU,
}

#[derive(Debug, Clone)]
pub struct AnsatzConfig {
    /// Jet order of the prolonged system to search on.
    pub order: u32,
    /// Bound on the total degree of numerator monomials in fiber + jet vars.
    pub jet_degree: u32,
    /// Bound on the total degree of coefficients in base + parameter vars.
    pub coeff_degree: u32,
    pub denom: DenomBase,
    /// Power r of the denominator base.
    pub denom_power: u32,
}

impl AnsatzConfig {
    fn check_caps(&self) -> Result<()> {
        if self.order > CAP_ORDER {
            return Err(Error::AnsatzCap(format!(
                "order {} > cap {}",
                self.order, CAP_ORDER
            )));
        }
        if self.jet_degree > CAP_JET_DEGREE {
            return Err(Error::AnsatzCap(format!(
                "jet degree {} > cap {}",
                self.jet_degree, CAP_JET_DEGREE
            )));
        }
        if self.coeff_degree > CAP_COEFF_DEGREE {
            return Err(Error::AnsatzCap(format!(
                "coefficient degree {} > cap {}",
                self.coeff_degree, CAP_COEFF_DEGREE
            )));
        }
        Ok(())
    }
}

/// Basis of first integrals N/den found inside the ansatz. The condition
/// D_i(N/den) = 0 is linear in N's coefficients because the denominator is
/// grouplike: D_i(den) = lambda_i den with lambda_i free of fiber variables,
/// so the cleared condition reads D_i(N) = r lambda_i N. Fiber weight is
/// preserved by the derivations, so each weight class is solved separately;
/// exact rational constants are dropped from the returned basis.
pub fn search_first_integrals(
    sys: &ProlongedSystem,
    cfg: &AnsatzConfig,
) -> Result<Vec<CandidateInvariant>> {
    cfg.check_caps()?;
    if cfg.order > sys.order() {
        return Err(Error::AnsatzCap(format!(
            "ansatz order {} exceeds system order {}",
            cfg.order,
            sys.order()
        )));
    }
    let space = sys.space();
    let n = sys.connection().dim();

    // Denominator and its logarithmic derivatives along the base directions.
    let den = match cfg.denom {
        DenomBase::FiberScalar => {
            if n != 1 {
                return Err(Error::NotGrouplike(
                    "scalar fiber denominator needs a 1x1 connection; use det U".into(),
                ));
            }
            let w = sys.jet_var((0, 0), &[]).expect("fiber var");
            RatFun::var(space, w).pow(cfg.denom_power as i32)?
        }
        DenomBase::DetU => {
            let mut data = Vec::new();
            for r in 0..n {
                for c in 0..n {
                    let u = sys.jet_var((r, c), &[]).expect("fiber var");
                    data.push(RatFun::var(space, u));
                }
            }
            let m = crate::algebra::MatRF::new(n, n, data)?;
            m.det().pow(cfg.denom_power as i32)?
        }
    };
    let base_dirs = sys.connection().base().to_vec();
    let mut lambdas = Vec::new();
    if cfg.denom_power > 0 {
        for &b in &base_dirs {
            let dd = sys.derive(b, &den)?;
            let lam = dd.div(&den)?;
            // Grouplike: lambda must not involve fiber or jet coordinates.
            if lam
                .variables()
                .iter()
                .any(|v| sys.coord(*v).is_some())
            {
                return Err(Error::NotGrouplike(format!(
                    "log-derivative along {} involves fiber coordinates; choose w^r or det(U)^r",
                    space.name(b)
                )));
            }
            lambdas.push(lam);
        }
    } else {
        for _ in &base_dirs {
            lambdas.push(RatFun::zero(space));
        }
    }

    // Ansatz monomial bases.
    let fiber_vars: Vec<VarId> = sys
        .gamma_coords()
        .iter()
        .copied()
        .filter(|&v| sys.coord(v).map(|c| c.order <= cfg.order).unwrap_or(false))
        .collect();
    let coeff_vars: Vec<VarId> = sys
        .connection()
        .base()
        .iter()
        .chain(sys.connection().params().iter())
        .copied()
        .collect();
    let coeff_monos = monomials_up_to(space.len(), &coeff_vars, cfg.coeff_degree);

    let mut found: Vec<CandidateInvariant> = Vec::new();
    for weight in 0..=cfg.jet_degree {
        let jet_monos = monomials_exact(space.len(), &fiber_vars, weight);
        if jet_monos.is_empty() {
            continue;
        }
        // Columns: (jet monomial, coefficient monomial).
        let mut columns: Vec<Poly> = Vec::new();
        for jm in &jet_monos {
            for cm in &coeff_monos {
                columns.push(Poly::from_terms(
                    space,
                    [(jm.mul(cm), BigRational::from_integer(1.into()))],
                ));
            }
        }
        // Residual of each column under D_i - r*lambda_i, cleared of
        // denominators, stacked over the base directions.
        let mut rows: BTreeMap<(usize, Mono), Vec<BigRational>> = BTreeMap::new();
        for (bi, &b) in base_dirs.iter().enumerate() {
            let mut residuals: Vec<RatFun> = Vec::with_capacity(columns.len());
            for col in &columns {
                let f = RatFun::from_poly(col.clone());
                let r = sys.derive(b, &f)?.sub(&lambdas[bi].mul(&f));
                residuals.push(r);
            }
            // Common denominator for this direction.
            let mut common = Poly::one(space);
            for r in &residuals {
                common = poly_lcm(&common, r.den());
            }
            for (j, r) in residuals.iter().enumerate() {
                let mult = common.div_exact(r.den()).expect("lcm divisible");
                let cleared = r.num().mul(&mult);
                for (m, c) in cleared.terms() {
                    rows.entry((bi, m.clone()))
                        .or_insert_with(|| vec![BigRational::zero(); columns.len()])[j] =
                        c.clone();
                }
            }
        }
        let mat = QMatrix::from_rows(rows.into_values().collect());
        let null = if mat.rows == 0 {
            // No constraints: every column is a solution.
            QMatrix::identity(columns.len())
                .data
                .chunks(columns.len())
                .map(|r| r.to_vec())
                .collect()
        } else {
            mat.nullspace()
        };
        for v in null {
            let mut num = Poly::zero(space);
            for (j, c) in v.iter().enumerate() {
                if !c.is_zero() {
                    num = num.add(&columns[j].scale(c));
                }
            }
            let f = RatFun::from_poly(num).div(&den)?;
            if f.as_rational().is_some() {
                continue; // exact constant, not informative
            }
            let order = f
                .variables()
                .iter()
                .filter_map(|&v| sys.coord(v).map(|c| c.order))
                .max()
                .unwrap_or(0);
            found.push(CandidateInvariant { expr: f, order });
        }
    }

    // Everything returned must verify exactly.
    for cand in &found {
        let check = verify_first_integral(&cand.expr, sys)?;
        debug_assert!(check.ok, "search returned a non-invariant: {}", cand.expr);
        if !check.ok {
            return Err(Error::Invalid(
                "internal: search produced a non-invariant".into(),
            ));
        }
    }
    Ok(found)
}

/// Order-1 invariants contributed by parameters absent from the connection
/// matrices: the entries of U_p U^{-1} (scalar case w_p/w). Each candidate is
/// verified before being returned; entries that satisfy only a Lax equation
/// rather than constancy are dropped.
pub fn absent_parameter_invariants(
    conn: &ParamConnection,
) -> Result<Vec<CandidateInvariant>> {
    let sys = ProlongedSystem::new(conn, 1)?;
    let space = sys.space();
    let n = conn.dim();
    let mut out = Vec::new();
    for &p in conn.params() {
        let absent = conn.matrices().iter().all(|m| {
            m.entries().all(|(_, e)| !e.depends_on(p))
        });
        if !absent {
            continue;
        }
        // U and U_p as symbolic matrices.
        let mut u_data = Vec::new();
        let mut up_data = Vec::new();
        for r in 0..n {
            for c in 0..n {
                u_data.push(RatFun::var(space, sys.jet_var((r, c), &[]).unwrap()));
                up_data.push(RatFun::var(
                    space,
                    sys.jet_var((r, c), &[(p, 1)]).unwrap(),
                ));
            }
        }
        let u = crate::algebra::MatRF::new(n, n, u_data)?;
        let up = crate::algebra::MatRF::new(n, n, up_data)?;
        let phi = up.mul(&u.inverse()?);
        for (_, e) in phi.entries() {
            let check = verify_first_integral(e, &sys)?;
            if check.ok {
                out.push(CandidateInvariant {
                    expr: e.clone(),
                    order: 1,
                });
            }
        }
    }
    Ok(out)
}

/// Exact span-membership test: is `target` a rational linear combination of
/// `basis`? Solves the corresponding linear system after clearing to a
/// common denominator.
pub fn in_span(target: &RatFun, basis: &[RatFun]) -> bool {
    if basis.is_empty() {
        return target.is_zero();
    }
    let space = target.space();
    let mut den = target.den().clone();
    for b in basis {
        den = poly_lcm(&den, b.den());
    }
    let clear = |f: &RatFun| -> Poly {
        f.num()
            .mul(&den.div_exact(f.den()).expect("lcm divisible"))
    };
    let t = clear(target);
    let cleared: Vec<Poly> = basis.iter().map(clear).collect();
    // Match coefficients of every monomial.
    let mut monos: Vec<Mono> = t.terms().map(|(m, _)| m.clone()).collect();
    for c in &cleared {
        for (m, _) in c.terms() {
            if !monos.contains(m) {
                monos.push(m.clone());
            }
        }
    }
    let rows: Vec<Vec<BigRational>> = monos
        .iter()
        .map(|m| {
            let mut row: Vec<BigRational> = cleared
                .iter()
                .map(|c| {
                    c.terms()
                        .find(|(mm, _)| *mm == m)
                        .map(|(_, k)| k.clone())
                        .unwrap_or_else(BigRational::zero)
                })
                .collect();
            row.push(
                t.terms()
                    .find(|(mm, _)| *mm == m)
                    .map(|(_, k)| k.clone())
                    .unwrap_or_else(BigRational::zero),
            );
            row
        })
        .collect();
    // Solvable iff rank(A) == rank([A | t]).
    let full = QMatrix::from_rows(rows.clone());
    let a_only = QMatrix::from_rows(
        rows.into_iter()
            .map(|mut r| {
                r.pop();
                r
            })
            .collect(),
    );
    let _ = space;
    a_only.rank() == full.rank()
}

/// Monomials over `vars` with total degree exactly `d` (in the full space).
fn monomials_exact(nvars: usize, vars: &[VarId], d: u32) -> Vec<Mono> {
    let mut out = Vec::new();
    let mut current = vec![0u32; nvars];
    fn rec(
        vars: &[VarId],
        idx: usize,
        left: u32,
        current: &mut Vec<u32>,
        out: &mut Vec<Mono>,
    ) {
        if idx == vars.len() {
            if left == 0 {
                out.push(Mono(current.clone().into_boxed_slice()));
            }
            return;
        }
        let last = idx + 1 == vars.len();
        let range = if last { left..=left } else { 0..=left };
        for e in range {
            current[vars[idx].index()] = e;
            rec(vars, idx + 1, left - e, current, out);
            current[vars[idx].index()] = 0;
        }
    }
    if vars.is_empty() {
        if d == 0 {
            out.push(Mono(current.into_boxed_slice()));
        }
        return out;
    }
    rec(vars, 0, d, &mut current, &mut out);
    out
}

/// Monomials over `vars` with total degree at most `d`.
fn monomials_up_to(nvars: usize, vars: &[VarId], d: u32) -> Vec<Mono> {
    (0..=d)
        .flat_map(|deg| monomials_exact(nvars, vars, deg))
        .collect()
}

/// The log-Hessian combination w_{pq}/w - w_p w_q/w^2 over the system's
/// jet space; for the determinant reduction these are the three second-order
/// first integrals.
pub fn log_hessian_invariant(
    sys: &ProlongedSystem,
    p1: VarId,
    p2: VarId,
) -> Result<RatFun> {
    let space = sys.space();
    let w = RatFun::var(space, sys.jet_var((0, 0), &[]).unwrap());
    let wp = RatFun::var(space, sys.jet_var((0, 0), &[(p1, 1)]).unwrap());
    let wq = RatFun::var(space, sys.jet_var((0, 0), &[(p2, 1)]).unwrap());
    let wpq = if p1 == p2 {
        RatFun::var(space, sys.jet_var((0, 0), &[(p1, 2)]).unwrap())
    } else {
        RatFun::var(space, sys.jet_var((0, 0), &[(p1, 1), (p2, 1)]).unwrap())
    };
    Ok(wpq.div(&w)?.sub(&wp.mul(&wq).div(&w.mul(&w))?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{MatRF, VarKind, VarSpace};
    use crate::connection::Family;
    use crate::io::expr::parse_expr;
    use crate::io::spec::hypergeometric_det;
    use std::sync::Arc;

    fn det_sys(k: u32) -> ProlongedSystem {
        ProlongedSystem::new(&hypergeometric_det(), k).unwrap()
    }

    #[test]
    fn rst_are_first_integrals() {
        let sys = det_sys(2);
        let det = sys.connection().clone();
        let (a, b) = (det.params()[0], det.params()[1]);
        for (p, q) in [(a, a), (a, b), (b, b)] {
            let f = log_hessian_invariant(&sys, p, q).unwrap();
            let v = verify_first_integral(&f, &sys).unwrap();
            assert!(v.ok, "residuals: {:?}", v.residuals);
        }
    }

    #[test]
    fn w_a_is_not_an_integral_with_known_residual() {
        let sys = det_sys(1);
        let det = sys.connection().clone();
        let a = det.params()[0];
        let wa = RatFun::var(sys.space(), sys.jet_var((0, 0), &[(a, 1)]).unwrap());
        let v = verify_first_integral(&wa, &sys).unwrap();
        assert!(!v.ok);
        let want = parse_expr("(1/x)*w + (a/x - b/(1-x))*w_a", sys.space()).unwrap();
        assert_eq!(v.residuals[0].1, want);
    }

    #[test]
    fn search_finds_w_c_over_w_at_order_one() {
        let sys = det_sys(1);
        let cfg = AnsatzConfig {
            order: 1,
            jet_degree: 1,
            coeff_degree: 0,
            denom: DenomBase::FiberScalar,
            denom_power: 1,
        };
        let basis = search_first_integrals(&sys, &cfg).unwrap();
        let c = sys.connection().params()[2];
        let w = RatFun::var(sys.space(), sys.jet_var((0, 0), &[]).unwrap());
        let wc = RatFun::var(sys.space(), sys.jet_var((0, 0), &[(c, 1)]).unwrap());
        let target = wc.div(&w).unwrap();
        let exprs: Vec<RatFun> = basis.iter().map(|c| c.expr.clone()).collect();
        assert!(
            in_span(&target, &exprs),
            "basis {:?} misses w_c/w",
            exprs.iter().map(|e| e.to_string()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn search_on_zero_connection_returns_jet_coordinates() {
        // A = 0 with params {s, t}: every jet coordinate is an integral.
        let mut s = VarSpace::new();
        let x = s.declare("x", VarKind::Base).unwrap();
        let ps = s.declare_all(&["s", "t"], VarKind::Param).unwrap();
        let sp = Arc::new(s);
        let conn = ParamConnection::new(
            sp.clone(),
            vec![x],
            ps,
            Family::Scalar,
            1,
            vec![MatRF::zero(&sp, 1, 1)],
        )
        .unwrap();
        let sys = ProlongedSystem::new(&conn, 1).unwrap();
        let cfg = AnsatzConfig {
            order: 1,
            jet_degree: 1,
            coeff_degree: 0,
            denom: DenomBase::FiberScalar,
            denom_power: 0,
        };
        let basis = search_first_integrals(&sys, &cfg).unwrap();
        // Expect span {w, w_s, w_t}.
        assert_eq!(basis.len(), 3);
        for v in sys.gamma_coords() {
            let f = RatFun::var(sys.space(), *v);
            let exprs: Vec<RatFun> = basis.iter().map(|c| c.expr.clone()).collect();
            assert!(in_span(&f, &exprs));
        }
    }

    #[test]
    fn absent_parameter_scalar_case() {
        let det = hypergeometric_det();
        let inv = absent_parameter_invariants(&det).unwrap();
        assert_eq!(inv.len(), 1);
        // w_c/w
        let sys = ProlongedSystem::new(&det, 1).unwrap();
        let c = det.params()[2];
        let w = RatFun::var(sys.space(), sys.jet_var((0, 0), &[]).unwrap());
        let wc = RatFun::var(sys.space(), sys.jet_var((0, 0), &[(c, 1)]).unwrap());
        assert_eq!(inv[0].expr, wc.div(&w).unwrap());
    }

    #[test]
    fn absent_parameter_none_for_hypergeometric() {
        let hg = crate::io::spec::hypergeometric();
        let inv = absent_parameter_invariants(&hg).unwrap();
        assert!(inv.is_empty());
    }

    #[test]
    fn absent_parameter_zero_connection_matrix_case() {
        // A = 0, GL(2), params {s}: all entries of U_s U^{-1} are integrals.
        let mut s = VarSpace::new();
        let x = s.declare("x", VarKind::Base).unwrap();
        let ps = vec![s.declare("s", VarKind::Param).unwrap()];
        let sp = Arc::new(s);
        let conn = ParamConnection::new(
            sp.clone(),
            vec![x],
            ps,
            Family::GL,
            2,
            vec![MatRF::zero(&sp, 2, 2)],
        )
        .unwrap();
        let inv = absent_parameter_invariants(&conn).unwrap();
        assert_eq!(inv.len(), 4);
    }
}

//! Parameterized linear connections and their basic reductions.
//!
//! A `ParamConnection` is the data of a linear system dU = (sum_i A_i dx_i) U
//! over declared base and parameter variables: one coefficient matrix per
//! base direction, parameters constant along base flows. On top of it this
//! module provides the curvature/flatness check, the adjoint (Lax) system for
//! gauge symmetries, the determinant and projective (Schwarzian) reductions,
//! and affine changes of parameters.

use std::collections::HashMap;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::Zero;

use crate::algebra::linalg::QMatrix;
use crate::algebra::{MatRF, RatFun, VarId, VarKind, VarSpace};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    GL,
    SL,
    Scalar,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::GL => "GL",
            Family::SL => "SL",
            Family::Scalar => "scalar",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamConnection {
    space: Arc<VarSpace>,
    base: Vec<VarId>,
    params: Vec<VarId>,
    n: usize,
    family: Family,
    /// Coefficient matrices, aligned with `base`.
    mats: Vec<MatRF>,
}

impl ParamConnection {
    pub fn new(
        space: Arc<VarSpace>,
        base: Vec<VarId>,
        params: Vec<VarId>,
        family: Family,
        n: usize,
        mats: Vec<MatRF>,
    ) -> Result<ParamConnection> {
        if mats.len() != base.len() {
            return Err(Error::Schema(format!(
                "need one matrix per base variable: {} base vars, {} matrices",
                base.len(),
                mats.len()
            )));
        }
        for m in &mats {
            if m.rows() != n || m.cols() != n {
                return Err(Error::Schema(format!(
                    "matrix is {}x{}, expected {}x{}",
                    m.rows(),
                    m.cols(),
                    n,
                    n
                )));
            }
        }
        if family == Family::Scalar && n != 1 {
            return Err(Error::Schema("scalar family requires n = 1".into()));
        }
        let conn = ParamConnection {
            space,
            base,
            params,
            n,
            family,
            mats,
        };
        if family == Family::SL {
            for (i, m) in conn.mats.iter().enumerate() {
                if !m.trace().is_zero() {
                    return Err(Error::Schema(format!(
                        "SL family requires traceless matrices; trace of A_{} is {}",
                        conn.space.name(conn.base[i]),
                        m.trace()
                    )));
                }
            }
        }
        Ok(conn)
    }

    pub fn space(&self) -> &Arc<VarSpace> {
        &self.space
    }

    pub fn base(&self) -> &[VarId] {
        &self.base
    }

    pub fn params(&self) -> &[VarId] {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn matrix(&self, i: usize) -> &MatRF {
        &self.mats[i]
    }

    pub fn matrices(&self) -> &[MatRF] {
        &self.mats
    }

    pub fn base_index(&self, v: VarId) -> Option<usize> {
        self.base.iter().position(|&b| b == v)
    }

    /// Compatibility defect of the pair of base directions (i, j):
    /// dA_j/dx_i - dA_i/dx_j - [A_i, A_j]. Zero for all pairs iff the system
    /// of mixed partials closes (Frobenius).
    pub fn curvature(&self, i: usize, j: usize) -> MatRF {
        let (xi, xj) = (self.base[i], self.base[j]);
        self.mats[j]
            .diff(xi)
            .sub(&self.mats[i].diff(xj))
            .sub(&self.mats[i].bracket(&self.mats[j]))
    }

    pub fn is_flat(&self) -> FlatnessReport {
        for i in 0..self.base.len() {
            for j in (i + 1)..self.base.len() {
                let k = self.curvature(i, j);
                if let Some((r, c, f)) = k.first_nonzero() {
                    return FlatnessReport {
                        flat: false,
                        witness: Some(FlatnessWitness {
                            dir_i: self.space.name(self.base[i]).to_string(),
                            dir_j: self.space.name(self.base[j]).to_string(),
                            row: r,
                            col: c,
                            component: f.clone(),
                            matrix: k.clone(),
                        }),
                    };
                }
            }
        }
        FlatnessReport {
            flat: true,
            witness: None,
        }
    }

    /// Adjoint system: per base direction, d(sigma)/dx_i = [A_i, sigma].
    pub fn lax_system(&self) -> LaxSystem {
        LaxSystem {
            directions: self
                .base
                .iter()
                .map(|&v| self.space.name(v).to_string())
                .collect(),
            mats: self.mats.clone(),
            n: self.n,
        }
    }

    /// Scalar connection satisfied by det(U): coefficient trace(A_i) per
    /// direction.
    pub fn det_reduction(&self) -> ParamConnection {
        let mats = self
            .mats
            .iter()
            .map(|m| MatRF::new(1, 1, vec![m.trace()]).expect("1x1"))
            .collect();
        ParamConnection {
            space: self.space.clone(),
            base: self.base.clone(),
            params: self.params.clone(),
            n: 1,
            family: Family::Scalar,
            mats,
        }
    }

    /// Rewrite all matrix entries through an affine, invertible change of the
    /// parameter variables. `new_names[k]` replaces the k-th old parameter in
    /// the declaration order; `images` sends each old parameter to an affine
    /// expression in the new ones.
    pub fn reparametrize(&self, subst: &Substitution) -> Result<ParamConnection> {
        if subst.new_names.len() != self.params.len() {
            return Err(Error::BadSubstitution(format!(
                "{} new parameters for {} old ones",
                subst.new_names.len(),
                self.params.len()
            )));
        }
        // New space: same layout, parameter slots renamed.
        let mut new_space = VarSpace::new();
        for id in self.space.ids() {
            let v = self.space.var(id);
            if let Some(k) = self.params.iter().position(|&p| p == id) {
                new_space.declare(&subst.new_names[k], VarKind::Param)?;
            } else {
                new_space.declare(&v.name, v.kind)?;
            }
        }
        let new_space = Arc::new(new_space);
        let new_params: Vec<VarId> = self.params.clone(); // same slots

        // Validate: every image affine in the new params, constant otherwise,
        // and the linear part invertible over the rationals.
        let m = self.params.len();
        let mut lin = QMatrix::zero(m, m);
        let mut images: HashMap<VarId, RatFun> = HashMap::new();
        for (k, &old) in self.params.iter().enumerate() {
            let img = subst.images.get(&old).cloned().unwrap_or_else(|| {
                RatFun::var(&new_space, old) // same slot: identity substitution
            });
            if !img.den().is_one() {
                return Err(Error::BadSubstitution(format!(
                    "image of {} is not polynomial",
                    self.space.name(old)
                )));
            }
            for v in img.variables() {
                if !new_params.contains(&v) {
                    return Err(Error::BadSubstitution(format!(
                        "image of {} involves non-parameter variable {}",
                        self.space.name(old),
                        new_space.name(v)
                    )));
                }
            }
            if img.num().degree_in_set(&new_params) > 1 {
                return Err(Error::BadSubstitution(format!(
                    "image of {} is not affine",
                    self.space.name(old)
                )));
            }
            for (j, &np) in new_params.iter().enumerate() {
                lin[(k, j)] = img
                    .num()
                    .diff(np)
                    .as_constant()
                    .unwrap_or_else(BigRational::zero);
            }
            images.insert(old, img);
        }
        if lin.rank() != m {
            return Err(Error::BadSubstitution(
                "linear part of the substitution is singular".into(),
            ));
        }

        let mats = self
            .mats
            .iter()
            .map(|mat| mat.try_map(|e| e.substitute(&new_space, &images)))
            .collect::<Result<Vec<_>>>()?;
        ParamConnection::new(
            new_space,
            self.base.clone(),
            new_params,
            self.family,
            self.n,
            mats,
        )
    }

    /// Schwarzian potential of the projective reduction of a 2x2 companion
    /// system: for u'' + p u' + q u = 0 the ratio y of two solutions obeys
    /// Schw(y) = y'''/y' - (3/2)(y''/y')^2 = 2q - p^2/2 - p'.
    pub fn schwarzian_potential(&self) -> Result<RatFun> {
        if self.n != 2 || self.base.len() != 1 {
            return Err(Error::NotCompanion);
        }
        let a = &self.mats[0];
        if !a.entry(0, 0).is_zero() || *a.entry(0, 1) != RatFun::one(&self.space) {
            return Err(Error::NotCompanion);
        }
        let x = self.base[0];
        let p = a.entry(1, 1).neg();
        let q = a.entry(1, 0).neg();
        let half = RatFun::rational(&self.space, BigRational::new(1.into(), 2.into()));
        Ok(q
            .scale(&BigRational::from_integer(2.into()))
            .sub(&p.mul(&p).mul(&half))
            .sub(&p.diff(x)))
    }
}

/// Affine change of parameters.
#[derive(Debug, Clone)]
pub struct Substitution {
    /// Names of the new parameters, in the order they replace the old ones.
    pub new_names: Vec<String>,
    /// Old parameter id -> affine expression over the new space. Missing
    /// entries default to the identity on the same slot.
    pub images: HashMap<VarId, RatFun>,
}

#[derive(Debug, Clone)]
pub struct FlatnessReport {
    pub flat: bool,
    pub witness: Option<FlatnessWitness>,
}

#[derive(Debug, Clone)]
pub struct FlatnessWitness {
    pub dir_i: String,
    pub dir_j: String,
    pub row: usize,
    pub col: usize,
    pub component: RatFun,
    pub matrix: MatRF,
}

/// The adjoint (gauge-symmetry) system d(sigma)/dx_i = [A_i, sigma].
#[derive(Debug, Clone)]
pub struct LaxSystem {
    pub directions: Vec<String>,
    pub mats: Vec<MatRF>,
    pub n: usize,
}

impl LaxSystem {
    /// Right-hand side A sigma - sigma A for a symbolic sigma matrix.
    pub fn bracket_rhs(&self, idx: usize, sigma: &MatRF) -> MatRF {
        let a = self.mats[idx].lift(sigma.entry(0, 0).space());
        a.bracket(sigma)
    }

    pub fn equations_text(&self) -> Vec<String> {
        self.directions
            .iter()
            .zip(&self.mats)
            .map(|(d, m)| {
                format!(
                    "d(sigma)/d({}) = [A_{}, sigma],  A_{} =\n{}",
                    d, d, d, m
                )
            })
            .collect()
    }
}

/// A symbolic sigma matrix over `space` extended by fresh Aux entries; used
/// to state identities about Lax right-hand sides.
pub fn symbolic_sigma(space: &Arc<VarSpace>, n: usize) -> Result<(Arc<VarSpace>, MatRF)> {
    let mut names = Vec::new();
    for r in 1..=n {
        for c in 1..=n {
            names.push((format!("sg{r}{c}"), VarKind::Aux));
        }
    }
    let ext = Arc::new(space.extended(&names)?);
    let mut data = Vec::new();
    for r in 1..=n {
        for c in 1..=n {
            let id = ext.lookup(&format!("sg{r}{c}")).unwrap();
            data.push(RatFun::var(&ext, id));
        }
    }
    Ok((ext.clone(), MatRF::new(n, n, data)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::expr::parse_expr;

    fn two_base_connection(a1: &str, a2: &str) -> ParamConnection {
        // 2x2 matrices a1*E12 and a2*E12 over base {x1, x2}.
        let mut s = VarSpace::new();
        s.declare("x1", VarKind::Base).unwrap();
        s.declare("x2", VarKind::Base).unwrap();
        let sp = Arc::new(s);
        let e12 = |f: RatFun| {
            MatRF::new(
                2,
                2,
                vec![
                    RatFun::zero(&sp),
                    f,
                    RatFun::zero(&sp),
                    RatFun::zero(&sp),
                ],
            )
            .unwrap()
        };
        let m1 = e12(parse_expr(a1, &sp).unwrap());
        let m2 = e12(parse_expr(a2, &sp).unwrap());
        ParamConnection::new(
            sp.clone(),
            vec![VarId(0), VarId(1)],
            vec![],
            Family::GL,
            2,
            vec![m1, m2],
        )
        .unwrap()
    }

    #[test]
    fn constant_bracket_curvature() {
        // A_1 = x2*E12, A_2 = 0: curvature(1,2) = -E12.
        let c = two_base_connection("x2", "0");
        let k = c.curvature(0, 1);
        assert!(k.entry(0, 0).is_zero());
        assert_eq!(k.entry(0, 1).to_string(), "-1");
        let rep = c.is_flat();
        assert!(!rep.flat);
        let w = rep.witness.unwrap();
        assert_eq!((w.row, w.col), (0, 1));
        assert_eq!(w.component.to_string(), "-1");
    }

    #[test]
    fn curvature_antisymmetric() {
        let c = two_base_connection("x1*x2", "x1^2");
        let k12 = c.curvature(0, 1);
        let k21 = c.curvature(1, 0);
        assert_eq!(k12, k21.neg());
    }

    #[test]
    fn scalar_two_base_flat() {
        // Scalar A_x = y, A_y = x on base {x, y}: flat.
        let mut s = VarSpace::new();
        s.declare("x", VarKind::Base).unwrap();
        s.declare("y", VarKind::Base).unwrap();
        let sp = Arc::new(s);
        let m = |name: &str| {
            MatRF::new(1, 1, vec![parse_expr(name, &sp).unwrap()]).unwrap()
        };
        let c = ParamConnection::new(
            sp.clone(),
            vec![VarId(0), VarId(1)],
            vec![],
            Family::Scalar,
            1,
            vec![m("y"), m("x")],
        )
        .unwrap();
        assert!(c.is_flat().flat);
    }

    #[test]
    fn single_base_vacuously_flat() {
        let mut s = VarSpace::new();
        s.declare("x", VarKind::Base).unwrap();
        let sp = Arc::new(s);
        let c = ParamConnection::new(
            sp.clone(),
            vec![VarId(0)],
            vec![],
            Family::GL,
            1,
            vec![MatRF::new(1, 1, vec![RatFun::var(&sp, VarId(0))]).unwrap()],
        )
        .unwrap();
        assert!(c.is_flat().flat);
    }

    #[test]
    fn scalar_lax_rhs_vanishes() {
        let mut s = VarSpace::new();
        s.declare("x", VarKind::Base).unwrap();
        let sp = Arc::new(s);
        let c = ParamConnection::new(
            sp.clone(),
            vec![VarId(0)],
            vec![],
            Family::Scalar,
            1,
            vec![MatRF::new(1, 1, vec![RatFun::var(&sp, VarId(0))]).unwrap()],
        )
        .unwrap();
        let lax = c.lax_system();
        let (ext, sigma) = symbolic_sigma(&sp, 1).unwrap();
        let rhs = lax.bracket_rhs(0, &sigma);
        assert!(rhs.is_zero(), "abelian bracket must vanish: {}", rhs);
        let _ = ext;
    }

    #[test]
    fn lax_rhs_traceless_for_matrix_connections() {
        let hg = crate::io::spec::hypergeometric();
        let lax = hg.lax_system();
        let (_, sigma) = symbolic_sigma(hg.space(), 2).unwrap();
        let rhs = lax.bracket_rhs(0, &sigma);
        assert!(rhs.trace().is_zero());
        let fu = crate::io::spec::fuchsian(2, 2).unwrap();
        let lax = fu.lax_system();
        let (_, sigma) = symbolic_sigma(fu.space(), 2).unwrap();
        assert!(lax.bracket_rhs(0, &sigma).trace().is_zero());
    }

    #[test]
    fn diagonal_det_reduction() {
        let mut s = VarSpace::new();
        s.declare("x", VarKind::Base).unwrap();
        let sp = Arc::new(s);
        let f = parse_expr("x", &sp).unwrap();
        let g = parse_expr("1 - x", &sp).unwrap();
        let m = MatRF::new(
            2,
            2,
            vec![f.clone(), RatFun::zero(&sp), RatFun::zero(&sp), g.clone()],
        )
        .unwrap();
        let c = ParamConnection::new(sp.clone(), vec![VarId(0)], vec![], Family::GL, 2, vec![m])
            .unwrap();
        let d = c.det_reduction();
        assert_eq!(d.dim(), 1);
        assert_eq!(*d.matrix(0).entry(0, 0), f.add(&g));
    }

    #[test]
    fn sl_trace_validation() {
        let mut s = VarSpace::new();
        s.declare("x", VarKind::Base).unwrap();
        let sp = Arc::new(s);
        let bad = MatRF::new(
            2,
            2,
            vec![
                RatFun::one(&sp),
                RatFun::zero(&sp),
                RatFun::zero(&sp),
                RatFun::one(&sp),
            ],
        )
        .unwrap();
        assert!(ParamConnection::new(
            sp.clone(),
            vec![VarId(0)],
            vec![],
            Family::SL,
            2,
            vec![bad]
        )
        .is_err());
    }
}

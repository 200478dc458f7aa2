//! Jet coordinates over the parameters, total-derivative operators, and the
//! prolongation of a connection to order k.
//!
//! `ProlongedSystem` extends the connection's variable space with jet
//! coordinates `u_{rc;sigma}` (scalar case `w_sigma`) indexed by
//! multi-indices over base and parameter directions up to order k+1. The
//! restricted total-derivative table realizes the order-k prolongation: every
//! base-direction derivative of a jet coordinate is rewritten through the
//! horizontal equations dU = (A_i dx_i) U, so table rows involve only
//! parameter-direction coordinates of the same or lower order. Transient
//! base-direction coordinates exist only inside `total_derivative`, and
//! `restrict` eliminates them again.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::algebra::{MatRF, Poly, RatFun, VarId, VarKind, VarSpace};
use crate::connection::ParamConnection;
use crate::error::{Error, Result};

/// Hard cap on the jet order to bound expression swell.
pub const MAX_ORDER: u32 = 4;

/// One jet coordinate: fiber slot (row, col) and a multi-index over the
/// system's directions (base first, then parameters).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JetCoord {
    pub var: VarId,
    pub fiber: (usize, usize),
    pub multi: Vec<u32>,
    pub order: u32,
}

impl JetCoord {
    fn base_degree(&self, n_base: usize) -> u32 {
        self.multi[..n_base].iter().sum()
    }
}

#[derive(Debug)]
pub struct ProlongedSystem {
    conn: ParamConnection,
    k: u32,
    space: Arc<VarSpace>,
    /// Base directions followed by parameter directions (connection ids).
    dirs: Vec<VarId>,
    n_base: usize,
    coords: HashMap<VarId, JetCoord>,
    /// All jet coordinates, sorted by (order, fiber, multi).
    coord_ids: Vec<VarId>,
    by_key: HashMap<((usize, usize), Vec<u32>), VarId>,
    /// Parameter-only coordinates of order <= k, in table order.
    gamma: Vec<VarId>,
    /// Restricted total-derivative rows: (base direction, coordinate) -> rhs.
    table: HashMap<(VarId, VarId), RatFun>,
}

impl ProlongedSystem {
    pub fn new(conn: &ParamConnection, k: u32) -> Result<ProlongedSystem> {
        Self::with_cap(conn, k, MAX_ORDER)
    }

    pub fn with_cap(conn: &ParamConnection, k: u32, cap: u32) -> Result<ProlongedSystem> {
        if k > cap {
            return Err(Error::OrderCap { got: k, cap });
        }
        let n = conn.dim();
        let dirs: Vec<VarId> = conn
            .base()
            .iter()
            .chain(conn.params().iter())
            .copied()
            .collect();
        let n_base = conn.base().len();
        let dir_names: Vec<String> = dirs
            .iter()
            .map(|&d| conn.space().name(d).to_string())
            .collect();
        let compact = dir_names.iter().all(|s| s.len() == 1);

        // Declare fiber and jet variables, order by order.
        let mut extra: Vec<(String, VarKind)> = Vec::new();
        let mut keys: Vec<((usize, usize), Vec<u32>)> = Vec::new();
        for order in 0..=k + 1 {
            for multi in multi_indices(dirs.len(), order) {
                for r in 0..n {
                    for c in 0..n {
                        let name = coord_name(n, (r, c), &multi, &dir_names, compact);
                        let kind = if order == 0 { VarKind::Fiber } else { VarKind::Jet };
                        extra.push((name, kind));
                        keys.push(((r, c), multi.clone()));
                    }
                }
            }
        }
        let space = Arc::new(conn.space().extended(&extra)?);

        let mut coords = HashMap::new();
        let mut coord_ids = Vec::new();
        let mut by_key = HashMap::new();
        for (i, (fiber, multi)) in keys.into_iter().enumerate() {
            let var = space
                .lookup(&extra[i].0)
                .expect("just declared");
            let order = multi.iter().sum();
            coords.insert(
                var,
                JetCoord {
                    var,
                    fiber,
                    multi: multi.clone(),
                    order,
                },
            );
            coord_ids.push(var);
            by_key.insert((fiber, multi), var);
        }

        let mut sys = ProlongedSystem {
            conn: conn.clone(),
            k,
            space,
            dirs,
            n_base,
            coords,
            coord_ids,
            by_key,
            gamma: Vec::new(),
            table: HashMap::new(),
        };
        sys.gamma = sys
            .coord_ids
            .iter()
            .copied()
            .filter(|v| {
                let c = &sys.coords[v];
                c.order <= k && c.base_degree(n_base) == 0
            })
            .collect();
        sys.build_table()?;
        Ok(sys)
    }

    /// The restricted rows D(i, v) for every parameter-only coordinate v of
    /// order <= k: the Leibniz expansion of d^sigma((A_i U)_{rc}) in the
    /// parameter directions.
    fn build_table(&mut self) -> Result<()> {
        let n = self.conn.dim();
        for (bi, &b) in self.conn.base().to_vec().iter().enumerate() {
            let a = self.conn.matrix(bi).lift(&self.space);
            // Memoized parameter-derivatives of A_b.
            let mut deriv: HashMap<Vec<u32>, MatRF> = HashMap::new();
            deriv.insert(vec![0; self.dirs.len()], a.clone());
            for &v in &self.gamma.clone() {
                let coord = self.coords[&v].clone();
                let mut rhs = RatFun::zero(&self.space);
                for tau in sub_multi_indices(&coord.multi) {
                    let rho: Vec<u32> = coord
                        .multi
                        .iter()
                        .zip(&tau)
                        .map(|(s, t)| s - t)
                        .collect();
                    let coeff = multi_binomial(&coord.multi, &tau);
                    let da = self.derived_matrix(&mut deriv, &rho);
                    let (r, c) = coord.fiber;
                    for l in 0..n {
                        let u_tau = self.by_key[&((l, c), tau.clone())];
                        let term = da
                            .entry(r, l)
                            .mul(&RatFun::var(&self.space, u_tau))
                            .scale(&coeff);
                        rhs = rhs.add(&term);
                    }
                }
                self.table.insert((b, v), rhs);
            }
        }
        Ok(())
    }

    /// Iterated parameter-derivative of the coefficient matrix, memoized
    /// by multi-index; the zero multi-index must already be seeded.
    fn derived_matrix(&self, memo: &mut HashMap<Vec<u32>, MatRF>, rho: &[u32]) -> MatRF {
        if let Some(m) = memo.get(rho) {
            return m.clone();
        }
        // Reduce along the first nonzero position.
        let pos = rho.iter().position(|&e| e > 0).expect("nonzero rho");
        let mut prev = rho.to_vec();
        prev[pos] -= 1;
        let base = self.derived_matrix(memo, &prev);
        let m = base.diff(self.dirs[pos]);
        memo.insert(rho.to_vec(), m.clone());
        m
    }

    pub fn connection(&self) -> &ParamConnection {
        &self.conn
    }

    pub fn order(&self) -> u32 {
        self.k
    }

    pub fn space(&self) -> &Arc<VarSpace> {
        &self.space
    }

    pub fn gamma_coords(&self) -> &[VarId] {
        &self.gamma
    }

    pub fn coord(&self, v: VarId) -> Option<&JetCoord> {
        self.coords.get(&v)
    }

    /// Jet coordinate for a fiber slot and a parameter multi-index given as
    /// (param id, exponent) pairs.
    pub fn jet_var(&self, fiber: (usize, usize), param_exps: &[(VarId, u32)]) -> Option<VarId> {
        let mut multi = vec![0u32; self.dirs.len()];
        for (p, e) in param_exps {
            let idx = self.dirs.iter().position(|d| d == p)?;
            multi[idx] += e;
        }
        self.by_key.get(&(fiber, multi)).copied()
    }

    /// Jet coordinate by full multi-index over the directions.
    pub fn coord_by_multi(&self, fiber: (usize, usize), multi: &[u32]) -> Option<VarId> {
        self.by_key.get(&(fiber, multi.to_vec())).copied()
    }

    pub fn table_row(&self, base_dir: VarId, v: VarId) -> Option<&RatFun> {
        self.table.get(&(base_dir, v))
    }

    /// Unrestricted total derivative: acts as d/d(dir) on base and parameter
    /// variables and raises jet coordinates formally. The result has order at
    /// most one above the input's.
    pub fn total_derivative(&self, f: &RatFun, dir: VarId) -> Result<RatFun> {
        let pos = self
            .dirs
            .iter()
            .position(|&d| d == dir)
            .ok_or_else(|| Error::Invalid("total derivative direction is not declared".into()))?;
        let f = f.clone().lift(&self.space);
        let mut out = f.diff(dir);
        for v in f.variables() {
            if let Some(coord) = self.coords.get(&v) {
                let mut multi = coord.multi.clone();
                multi[pos] += 1;
                let raised = self
                    .by_key
                    .get(&(coord.fiber, multi))
                    .copied()
                    .ok_or(Error::OrderCap {
                        got: coord.order + 1,
                        cap: self.k + 1,
                    })?;
                out = out.add(&f.diff(v).mul(&RatFun::var(&self.space, raised)));
            }
        }
        Ok(out)
    }

    /// Rewrite every jet coordinate containing a base-direction derivative
    /// through the horizontal equations, innermost first; the result involves
    /// only parameter-direction coordinates.
    pub fn restrict(&self, f: &RatFun) -> Result<RatFun> {
        let mut memo: HashMap<VarId, RatFun> = HashMap::new();
        self.restrict_with(f, &mut memo)
    }

    fn restrict_with(&self, f: &RatFun, memo: &mut HashMap<VarId, RatFun>) -> Result<RatFun> {
        let f = f.clone().lift(&self.space);
        // Mixed coordinates present in f, innermost (lowest order) first.
        let mut mixed: Vec<VarId> = f
            .variables()
            .into_iter()
            .filter(|v| {
                self.coords
                    .get(v)
                    .map(|c| c.base_degree(self.n_base) > 0)
                    .unwrap_or(false)
            })
            .collect();
        if mixed.is_empty() {
            return Ok(f);
        }
        mixed.sort_by_key(|v| (self.coords[v].order, v.0));
        let mut images = HashMap::new();
        for v in mixed {
            let img = match memo.get(&v) {
                Some(r) => r.clone(),
                None => {
                    let r = self.rewrite_coord(v, memo)?;
                    memo.insert(v, r.clone());
                    r
                }
            };
            images.insert(v, img);
        }
        f.substitute(&self.space, &images)
    }

    /// Express a coordinate with at least one base entry through the
    /// connection: u_{rc; sigma + e_b} = d^sigma((A_b U)_{rc}).
    fn rewrite_coord(&self, v: VarId, memo: &mut HashMap<VarId, RatFun>) -> Result<RatFun> {
        let coord = self.coords[&v].clone();
        let pos = (0..self.n_base)
            .find(|&i| coord.multi[i] > 0)
            .expect("mixed coordinate");
        let b = self.dirs[pos];
        let bi = self.conn.base_index(b).expect("base direction");
        let mut rest = coord.multi.clone();
        rest[pos] -= 1;

        // (A_b U)_{rc}
        let a = self.conn.matrix(bi).lift(&self.space);
        let (r, c) = coord.fiber;
        let mut expr = RatFun::zero(&self.space);
        for l in 0..self.conn.dim() {
            let u = self.by_key[&((l, c), vec![0; self.dirs.len()])];
            expr = expr.add(&a.entry(r, l).mul(&RatFun::var(&self.space, u)));
        }
        // Apply the remaining total derivatives in canonical direction order.
        for (i, &e) in rest.iter().enumerate() {
            for _ in 0..e {
                expr = self.total_derivative(&expr, self.dirs[i])?;
            }
        }
        // The expansion may still contain lower base-degree coordinates.
        self.restrict_with(&expr, memo)
    }

    /// Restricted derivation along a base direction, on expressions in
    /// parameter-only coordinates of order <= k.
    pub fn derive(&self, base_dir: VarId, f: &RatFun) -> Result<RatFun> {
        let f = f.clone().lift(&self.space);
        let mut out = f.diff(base_dir);
        for v in f.variables() {
            if let Some(coord) = self.coords.get(&v) {
                if coord.base_degree(self.n_base) > 0 {
                    return Err(Error::Invalid(format!(
                        "expression contains unrestricted coordinate {}; restrict first",
                        self.space.name(v)
                    )));
                }
                let row = self.table.get(&(base_dir, v)).ok_or(Error::OrderCap {
                    got: coord.order,
                    cap: self.k,
                })?;
                out = out.add(&f.diff(v).mul(row));
            }
        }
        Ok(out)
    }

    /// Mixed-partial compatibility of the restricted derivations: holds for
    /// every coordinate iff the source connection is flat.
    pub fn commutation_check(&self) -> CommutationReport {
        let base = self.conn.base().to_vec();
        for i in 0..base.len() {
            for j in (i + 1)..base.len() {
                for &v in &self.gamma {
                    let fv = RatFun::var(&self.space, v);
                    let dj = self.derive(base[j], &fv).expect("table row");
                    let di = self.derive(base[i], &fv).expect("table row");
                    // Rows of order-k coordinates have order k; the second
                    // derivative needs rows again, which exist since the
                    // rewriting closes at the same order.
                    let dij = self.derive(base[i], &dj).expect("closed");
                    let dji = self.derive(base[j], &di).expect("closed");
                    let res = dij.sub(&dji);
                    if !res.is_zero() {
                        return CommutationReport {
                            commutes: false,
                            witness: Some(CommutationWitness {
                                dir_i: self.space.name(base[i]).to_string(),
                                dir_j: self.space.name(base[j]).to_string(),
                                coord: self.space.name(v).to_string(),
                                residual: res,
                            }),
                        };
                    }
                }
            }
        }
        CommutationReport {
            commutes: true,
            witness: None,
        }
    }

    /// Rendered equations `D_x(v) = rhs`, order by order.
    pub fn equations_text(&self) -> Vec<String> {
        let mut out = Vec::new();
        for &v in &self.gamma {
            for (bi, &b) in self.conn.base().iter().enumerate() {
                let _ = bi;
                let row = &self.table[&(b, v)];
                out.push(format!(
                    "D_{}({}) = {}",
                    self.space.name(b),
                    self.space.name(v),
                    row
                ));
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct CommutationReport {
    pub commutes: bool,
    pub witness: Option<CommutationWitness>,
}

#[derive(Debug, Clone)]
pub struct CommutationWitness {
    pub dir_i: String,
    pub dir_j: String,
    pub coord: String,
    pub residual: RatFun,
}

fn coord_name(
    n: usize,
    fiber: (usize, usize),
    multi: &[u32],
    dir_names: &[String],
    compact: bool,
) -> String {
    let base = if n == 1 {
        "w".to_string()
    } else {
        format!("u{}{}", fiber.0 + 1, fiber.1 + 1)
    };
    if multi.iter().all(|&e| e == 0) {
        return base;
    }
    let mut parts = Vec::new();
    for (i, &e) in multi.iter().enumerate() {
        for _ in 0..e {
            parts.push(dir_names[i].clone());
        }
    }
    if compact {
        format!("{}_{}", base, parts.concat())
    } else {
        format!("{}_{}", base, parts.join("_"))
    }
}

/// All multi-indices over `d` slots with total order exactly `order`,
/// lexicographically by slot.
fn multi_indices(d: usize, order: u32) -> Vec<Vec<u32>> {
    if d == 0 {
        return if order == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in (0..=order).rev() {
        for mut rest in multi_indices(d - 1, order - first) {
            let mut m = Vec::with_capacity(d);
            m.push(first);
            m.append(&mut rest);
            out.push(m);
        }
    }
    out
}

/// All tau with 0 <= tau <= sigma componentwise.
fn sub_multi_indices(sigma: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for &s in sigma {
        let mut next = Vec::with_capacity(out.len() * (s as usize + 1));
        for prefix in &out {
            for e in 0..=s {
                let mut m = prefix.clone();
                m.push(e);
                next.push(m);
            }
        }
        out = next;
    }
    out
}

/// Product of componentwise binomial coefficients C(sigma_i, tau_i).
fn multi_binomial(sigma: &[u32], tau: &[u32]) -> BigRational {
    let mut acc = BigInt::from(1);
    for (&s, &t) in sigma.iter().zip(tau) {
        acc *= binomial(s, t);
    }
    BigRational::from_integer(acc)
}

fn binomial(n: u32, k: u32) -> BigInt {
    let mut acc = BigInt::from(1);
    for i in 0..k.min(n - k) {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Substitute actual derivatives of an explicit section for the jet
/// coordinates of a scalar system: the composition F o j(u). Test oracle for
/// the chain-rule identity of total derivatives.
pub fn compose_with_section(
    sys: &ProlongedSystem,
    f: &RatFun,
    section: &Poly,
) -> Result<RatFun> {
    if sys.conn.dim() != 1 {
        return Err(Error::Invalid("section composition is scalar-only".into()));
    }
    let mut images = HashMap::new();
    for &v in &sys.coord_ids {
        let coord = &sys.coords[&v];
        let mut d = section.clone().lift(&sys.space);
        for (i, &e) in coord.multi.iter().enumerate() {
            for _ in 0..e {
                d = d.diff(sys.dirs[i]);
            }
        }
        images.insert(v, RatFun::from_poly(d));
    }
    f.clone().lift(&sys.space).substitute(&sys.space, &images)
}

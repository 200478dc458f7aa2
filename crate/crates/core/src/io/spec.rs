//! Connection specification documents and built-in presets.
//!
//! A spec document is JSON with fields `base_vars`, `param_vars`, `group`
//! (`{"family": "GL"|"SL"|"scalar", "n": ...}`) and `matrices` (one n x n
//! grid of expression strings per base variable). A document may instead
//! name a `preset`; presets are also constructible directly.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::expr::parse_expr;
use crate::algebra::{MatRF, RatFun, VarKind, VarSpace};
use crate::connection::{Family, ParamConnection, Substitution};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupSpec {
    pub family: String,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConnectionSpecFile {
    #[serde(default)]
    pub base_vars: Vec<String>,
    #[serde(default)]
    pub param_vars: Vec<String>,
    #[serde(default)]
    pub group: Option<GroupSpec>,
    #[serde(default)]
    pub matrices: BTreeMap<String, Vec<Vec<String>>>,
    #[serde(default)]
    pub preset: Option<String>,
}

/// Parse and validate a spec document (or resolve its preset).
pub fn parse_connection(bytes: &[u8]) -> Result<ParamConnection> {
    let file: ConnectionSpecFile =
        serde_json::from_slice(bytes).map_err(|e| Error::Schema(e.to_string()))?;
    build_connection(&file)
}

pub fn build_connection(file: &ConnectionSpecFile) -> Result<ParamConnection> {
    if let Some(name) = &file.preset {
        return preset(name);
    }
    let group = file
        .group
        .as_ref()
        .ok_or_else(|| Error::Schema("missing group".into()))?;
    let family = match group.family.as_str() {
        "GL" => Family::GL,
        "SL" => Family::SL,
        "scalar" => Family::Scalar,
        other => return Err(Error::Schema(format!("unknown family `{other}`"))),
    };
    if file.base_vars.is_empty() {
        return Err(Error::Schema("no base variables".into()));
    }
    let mut space = VarSpace::new();
    let mut base = Vec::new();
    for b in &file.base_vars {
        base.push(space.declare(b, VarKind::Base)?);
    }
    let mut params = Vec::new();
    for p in &file.param_vars {
        params.push(space.declare(p, VarKind::Param)?);
    }
    let space = Arc::new(space);
    let n = group.n;
    let mut mats = Vec::new();
    for b in &file.base_vars {
        let grid = file
            .matrices
            .get(b)
            .ok_or_else(|| Error::Schema(format!("missing matrix for base variable `{b}`")))?;
        if grid.len() != n || grid.iter().any(|row| row.len() != n) {
            return Err(Error::Schema(format!(
                "matrix for `{b}` is not {n}x{n}"
            )));
        }
        let mut data = Vec::with_capacity(n * n);
        for row in grid {
            for entry in row {
                data.push(parse_expr(entry, &space)?);
            }
        }
        mats.push(MatRF::new(n, n, data)?);
    }
    if file.matrices.len() != file.base_vars.len() {
        return Err(Error::Schema(
            "matrices given for undeclared base variables".into(),
        ));
    }
    ParamConnection::new(space, base, params, family, n, mats)
}

/// Resolve a preset name: `hypergeometric`, `hypergeometric-det`, or
/// `fuchsian(n,k)`.
pub fn preset(name: &str) -> Result<ParamConnection> {
    let trimmed = name.trim();
    if trimmed == "hypergeometric" {
        return Ok(hypergeometric());
    }
    if trimmed == "hypergeometric-det" {
        return Ok(hypergeometric_det());
    }
    if let Some(args) = trimmed
        .strip_prefix("fuchsian(")
        .and_then(|s| s.strip_suffix(')'))
    {
        let parts: Vec<&str> = args.split(',').map(str::trim).collect();
        if parts.len() == 2 {
            let n: usize = parts[0]
                .parse()
                .map_err(|_| Error::Schema(format!("bad preset `{name}`")))?;
            let k: usize = parts[1]
                .parse()
                .map_err(|_| Error::Schema(format!("bad preset `{name}`")))?;
            return fuchsian(n, k);
        }
    }
    Err(Error::Schema(format!("unknown preset `{name}`")))
}

/// Companion form of the Gauss second-order equation
/// x(1-x) u'' + (gamma - (alpha+beta+1) x) u' - alpha beta u = 0:
/// base {x}, parameters {alpha, beta, gamma}, GL(2).
pub fn hypergeometric() -> ParamConnection {
    let mut s = VarSpace::new();
    let x = s.declare("x", VarKind::Base).unwrap();
    let params = s
        .declare_all(&["alpha", "beta", "gamma"], VarKind::Param)
        .unwrap();
    let space = Arc::new(s);
    let e = |t: &str| parse_expr(t, &space).unwrap();
    let a = MatRF::new(
        2,
        2,
        vec![
            RatFun::zero(&space),
            RatFun::one(&space),
            e("alpha*beta/(x*(1-x))"),
            e("((alpha+beta+1)*x - gamma)/(x*(1-x))"),
        ],
    )
    .unwrap();
    ParamConnection::new(space, vec![x], params, Family::GL, 2, vec![a]).unwrap()
}

/// Determinant reduction of the companion system, written in the affine
/// parameters (a, b, c): scalar equation dw/dx = (a/x - b/(1-x)) w.
///
/// The parameter change is alpha -> c, beta -> -a-b-c-1, gamma -> -a, i.e.
/// a = -gamma, b = gamma-alpha-beta-1, c = alpha. The b-direction is the
/// negative of the naive reading of the trace's partial fractions at 1; this
/// is the unique affine change making the coefficient exactly a/x - b/(1-x).
pub fn hypergeometric_det() -> ParamConnection {
    let hg = hypergeometric();
    let det = hg.det_reduction();
    // Build images over the renamed space (same slots: alpha->a, beta->b,
    // gamma->c in declaration order).
    let mut renamed = VarSpace::new();
    renamed.declare("x", VarKind::Base).unwrap();
    renamed.declare_all(&["a", "b", "c"], VarKind::Param).unwrap();
    let renamed = Arc::new(renamed);
    let e = |t: &str| parse_expr(t, &renamed).unwrap();
    let alpha = det.params()[0];
    let beta = det.params()[1];
    let gamma = det.params()[2];
    let subst = Substitution {
        new_names: vec!["a".into(), "b".into(), "c".into()],
        images: HashMap::from([
            (alpha, e("c")),
            (beta, e("-a - b - c - 1")),
            (gamma, e("-a")),
        ]),
    };
    det.reparametrize(&subst).unwrap()
}

/// General Fuchsian system with k simple poles and traceless residues:
/// dU/dx = (sum_i A_i/(x - a_i)) U over SL(n). The pole positions a_1..a_k
/// and the independent residue entries are all parameters; the last diagonal
/// entry of each residue is minus the sum of the others.
pub fn fuchsian(n: usize, k: usize) -> Result<ParamConnection> {
    if !(2..=3).contains(&n) {
        return Err(Error::Schema("fuchsian preset supports n in {2, 3}".into()));
    }
    if !(2..=4).contains(&k) {
        return Err(Error::Schema("fuchsian preset supports k in 2..=4".into()));
    }
    let mut s = VarSpace::new();
    let x = s.declare("x", VarKind::Base)?;
    let mut params = Vec::new();
    for i in 1..=k {
        params.push(s.declare(&format!("a{i}"), VarKind::Param)?);
    }
    // Residue entries. n=2 uses the compact names p_i, q_i, r_i for
    // ((p, q), (r, -p)); n=3 uses m{i}_{rc} with m{i}_33 dependent.
    let entry_names: Vec<Vec<Option<String>>> =
        (1..=k).map(|i| fuchsian_entry_names(n, i)).collect();
    for names in &entry_names {
        for nm in names.iter().flatten() {
            params.push(s.declare(nm, VarKind::Param)?);
        }
    }
    let space = Arc::new(s);

    let residues: Vec<MatRF> = entry_names
        .iter()
        .map(|names| residue_matrix(&space, names, n))
        .collect();
    let mut total = MatRF::zero(&space, n, n);
    for (i, res) in residues.iter().enumerate() {
        let ai = space.lookup(&format!("a{}", i + 1)).unwrap();
        let pole = RatFun::var(&space, x)
            .sub(&RatFun::var(&space, ai));
        let coeff = RatFun::one(&space).div(&pole)?;
        total = total.add(&res.scale_rf(&coeff));
    }
    ParamConnection::new(space, vec![x], params, Family::SL, n, vec![total])
}

/// The i-th residue matrix of the Fuchsian preset, as symbols.
pub fn residue_matrix(space: &Arc<VarSpace>, names: &[Option<String>], n: usize) -> MatRF {
    let mut data = Vec::with_capacity(n * n);
    for nm in names {
        match nm {
            Some(nm) => data.push(RatFun::var(space, space.lookup(nm).unwrap())),
            None => data.push(RatFun::zero(space)), // fixed below
        }
    }
    let mut m = MatRF::new(n, n, data).unwrap();
    // Last diagonal entry = -(sum of the other diagonal entries).
    let mut sum = RatFun::zero(space);
    for d in 0..n - 1 {
        sum = sum.add(m.entry(d, d));
    }
    *m.entry_mut(n - 1, n - 1) = sum.neg();
    m
}

/// Names of the independent entries of the i-th Fuchsian residue (row major,
/// skipping the dependent last diagonal slot).
pub fn fuchsian_entry_names(n: usize, i: usize) -> Vec<Option<String>> {
    let mut names = Vec::new();
    for r in 0..n {
        for c in 0..n {
            if r == n - 1 && c == n - 1 {
                names.push(None);
            } else if n == 2 {
                names.push(Some(match (r, c) {
                    (0, 0) => format!("p{i}"),
                    (0, 1) => format!("q{i}"),
                    (1, 0) => format!("r{i}"),
                    _ => unreachable!(),
                }));
            } else {
                names.push(Some(format!("m{i}_{}{}", r + 1, c + 1)));
            }
        }
    }
    names
}

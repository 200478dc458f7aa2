//! Numerical validation layer: fundamental solutions along complex paths,
//! loop monodromy and eigenvalues, isomonodromy transport tests, functional
//! independence of monodromy invariants, and the numerical Schwarzian check.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::algebra::VarId;
use crate::connection::{Family, ParamConnection};
use crate::error::{Error, Result};
use crate::isomonodromy::Deformation;
use crate::numeric::{dopri5, eigenvalues, rk4, CMat, OdeOptions};

/// Default fraction of the smallest pairwise singularity distance kept as
/// clearance between integration paths and singularities.
pub const R_MIN_FACTOR: f64 = 0.1;
/// Default polygon resolution for circular loops.
pub const CIRCLE_SEGMENTS: usize = 64;

#[derive(Debug, Clone, Copy)]
pub struct CircleSpec {
    pub center: Complex64,
    pub radius: f64,
    pub segments: usize,
}

/// Closed polyline with a base point; optionally produced from a circle
/// descriptor (radial approach, regular polygon, radial return).
#[derive(Debug, Clone)]
pub struct LoopPath {
    pub base: Complex64,
    pub waypoints: Vec<Complex64>,
    pub circle: Option<CircleSpec>,
}

impl LoopPath {
    pub fn from_waypoints(waypoints: Vec<Complex64>) -> Result<LoopPath> {
        if waypoints.len() < 2 {
            return Err(Error::Invalid("loop needs at least two waypoints".into()));
        }
        if (waypoints[0] - waypoints[waypoints.len() - 1]).norm() > 1e-12 {
            return Err(Error::Invalid("loop is not closed".into()));
        }
        Ok(LoopPath {
            base: waypoints[0],
            waypoints,
            circle: None,
        })
    }

    /// Positively oriented polygonal circle around `center`, entered radially
    /// from `base`.
    pub fn circle(base: Complex64, center: Complex64, radius: f64, segments: usize) -> LoopPath {
        let dir = {
            let d = base - center;
            if d.norm() < 1e-12 {
                Complex64::new(1.0, 0.0)
            } else {
                d / d.norm()
            }
        };
        let start = center + radius * dir;
        let phase0 = dir.arg();
        let mut waypoints = Vec::with_capacity(segments + 3);
        if (base - start).norm() > 1e-12 {
            waypoints.push(base);
        }
        for k in 0..=segments {
            let th = phase0 + 2.0 * PI * (k as f64) / (segments as f64);
            waypoints.push(center + radius * Complex64::new(th.cos(), th.sin()));
        }
        if (base - start).norm() > 1e-12 {
            waypoints.push(base);
        }
        LoopPath {
            base,
            waypoints,
            circle: Some(CircleSpec {
                center,
                radius,
                segments,
            }),
        }
    }

    pub fn reversed(&self) -> LoopPath {
        let mut w = self.waypoints.clone();
        w.reverse();
        LoopPath {
            base: self.base,
            waypoints: w,
            circle: self.circle,
        }
    }

    /// Every segment must keep distance >= r_min from every singularity.
    pub fn validate(&self, singularities: &[Complex64], r_min: f64) -> Result<()> {
        for seg in self.waypoints.windows(2) {
            for &s in singularities {
                let d = segment_distance(seg[0], seg[1], s);
                if d < r_min {
                    return Err(Error::PoleProximity { dist: d, r_min });
                }
            }
        }
        Ok(())
    }
}

/// Distance from point `p` to the segment [a, b].
fn segment_distance(a: Complex64, b: Complex64, p: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a) * ab.conj()).re / len2;
    let t = t.clamp(0.0, 1.0);
    (p - (a + t * ab)).norm()
}

/// Coefficient matrix compiled against fixed parameter values: every entry
/// becomes a univariate complex rational function of the base variable, so
/// a Runge-Kutta stage is a handful of Horner evaluations.
pub struct MatrixEvaluator {
    n: usize,
    entries: Vec<(Vec<Complex64>, Vec<Complex64>)>,
}

impl MatrixEvaluator {
    pub fn new(
        conn: &ParamConnection,
        params: &HashMap<VarId, Complex64>,
    ) -> Result<MatrixEvaluator> {
        if conn.base().len() != 1 {
            return Err(Error::Invalid(
                "numerical integration needs a single base variable".into(),
            ));
        }
        let x = conn.base()[0];
        let mat = conn.matrix(0);
        let n = mat.rows();
        let compile = |p: &crate::algebra::Poly| -> Result<Vec<Complex64>> {
            let mut coeffs = vec![Complex64::new(0.0, 0.0); p.degree_in(x) as usize + 1];
            for (m, c) in p.terms() {
                use num_traits::ToPrimitive;
                let mut v = Complex64::new(
                    c.numer().to_f64().unwrap_or(f64::NAN)
                        / c.denom().to_f64().unwrap_or(f64::NAN),
                    0.0,
                );
                for (i, &e) in m.0.iter().enumerate() {
                    if e == 0 || i == x.index() {
                        continue;
                    }
                    let id = VarId(i as u32);
                    let val = params.get(&id).copied().ok_or_else(|| {
                        Error::MissingAssignment(conn.space().name(id).to_string())
                    })?;
                    v *= val.powu(e);
                }
                coeffs[m.exp(x) as usize] += v;
            }
            Ok(coeffs)
        };
        let mut entries = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                let e = mat.entry(r, c);
                entries.push((compile(e.num())?, compile(e.den())?));
            }
        }
        Ok(MatrixEvaluator { n, entries })
    }

    pub fn eval(&self, x: Complex64) -> Result<CMat> {
        let horner = |coeffs: &[Complex64]| -> (Complex64, f64) {
            let mut v = Complex64::new(0.0, 0.0);
            let mut scale = 0.0;
            let ax = x.norm();
            let mut pw = 1.0;
            for (k, c) in coeffs.iter().enumerate() {
                if k > 0 {
                    pw *= ax;
                }
                scale += c.norm() * pw;
            }
            for c in coeffs.iter().rev() {
                v = v * x + c;
            }
            (v, scale)
        };
        let mut data = Vec::with_capacity(self.n * self.n);
        for (num, den) in &self.entries {
            let (dv, scale) = horner(den);
            if dv.norm() < 1e-12 * scale.max(1.0) {
                return Err(Error::PoleEvaluation {
                    denom_abs: dv.norm(),
                });
            }
            let (nv, _) = horner(num);
            data.push(nv / dv);
        }
        Ok(CMat::from_vec(self.n, data))
    }
}

#[derive(Debug, Clone)]
pub struct FundamentalResult {
    pub matrix: CMat,
    pub est_error: f64,
    /// |det U - exp(int tr A)| / |exp(int tr A)|, co-integrated.
    pub liouville_rel_err: f64,
}

/// Integrate dU/dx = A(x) U along a polyline with U = Id at the start. The
/// scalar Abel/Liouville equation w' = tr(A) w is co-integrated and compared
/// with det U at the end.
pub fn integrate_fundamental(
    conn: &ParamConnection,
    params: &HashMap<VarId, Complex64>,
    path: &[Complex64],
    opts: &OdeOptions,
) -> Result<FundamentalResult> {
    let ev = MatrixEvaluator::new(conn, params)?;
    let n = conn.dim();
    let mut state: Vec<Complex64> = CMat::identity(n).data;
    state.push(Complex64::new(1.0, 0.0)); // det co-integration
    let mut est = 0.0;
    for seg in path.windows(2) {
        let (z0, z1) = (seg[0], seg[1]);
        let dz = z1 - z0;
        if dz.norm() == 0.0 {
            continue;
        }
        let f = |t: f64, y: &[Complex64]| -> Result<Vec<Complex64>> {
            let a = ev.eval(z0 + t * dz)?;
            let mut dy = vec![Complex64::new(0.0, 0.0); n * n + 1];
            for r in 0..n {
                for c in 0..n {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for k in 0..n {
                        acc += a[(r, k)] * y[k * n + c];
                    }
                    dy[r * n + c] = dz * acc;
                }
            }
            dy[n * n] = dz * a.trace() * y[n * n];
            Ok(dy)
        };
        let (next, e) = dopri5(&f, state, opts)?;
        state = next;
        est += e;
    }
    let w = state[n * n];
    let matrix = CMat::from_vec(n, state[..n * n].to_vec());
    let det = matrix.det();
    let liouville_rel_err = (det - w).norm() / w.norm().max(1e-300);
    Ok(FundamentalResult {
        matrix,
        est_error: est,
        liouville_rel_err,
    })
}

#[derive(Debug, Clone)]
pub struct MonodromyResult {
    pub matrix: CMat,
    pub eigenvalues: Vec<Complex64>,
    pub trace: Complex64,
    pub det: Complex64,
    pub est_error: f64,
    pub liouville_rel_err: f64,
}

/// Singularities of the coefficient matrix in the base variable: roots of
/// the entry denominators after substituting the parameter values.
pub fn singularities_in_base(
    conn: &ParamConnection,
    params: &HashMap<VarId, Complex64>,
) -> Result<Vec<Complex64>> {
    let x = conn.base()[0];
    let mut roots: Vec<Complex64> = Vec::new();
    for m in conn.matrices() {
        for (_, e) in m.entries() {
            let den = e.den();
            let deg = den.degree_in(x);
            if deg == 0 {
                continue;
            }
            // Univariate coefficients in x with parameters substituted.
            let mut coeffs = Vec::with_capacity(deg as usize + 1);
            for k in 0..=deg {
                let ck = den.coeff_of(x, k);
                let v = ck.eval_complex(&|v| {
                    if v == x {
                        None
                    } else {
                        params.get(&v).copied()
                    }
                })?;
                coeffs.push(v);
            }
            for r in polynomial_roots(&coeffs) {
                if !roots.iter().any(|&q| (q - r).norm() < 1e-8) {
                    roots.push(r);
                }
            }
        }
    }
    roots.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    Ok(roots)
}

/// Durand-Kerner iteration; adequate for the small degrees arising here.
fn polynomial_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let deg = coeffs.len() - 1;
    if deg == 0 {
        return vec![];
    }
    let lead = coeffs[deg];
    let monic: Vec<Complex64> = coeffs.iter().map(|c| c / lead).collect();
    let eval = |z: Complex64| -> Complex64 {
        let mut v = Complex64::new(0.0, 0.0);
        for k in (0..=deg).rev() {
            v = v * z + monic[k];
        }
        v
    };
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..deg).map(|k| seed.powu(k as u32 + 1)).collect();
    for _ in 0..200 {
        let mut delta: f64 = 0.0;
        for i in 0..deg {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..deg {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.norm() < 1e-300 {
                continue;
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-13 {
            break;
        }
    }
    roots
}

/// Clearance radius: `R_MIN_FACTOR` times the smallest pairwise singularity
/// distance (or times the loop radius when there is a single singularity).
pub fn default_r_min(singularities: &[Complex64], fallback_scale: f64) -> f64 {
    let mut min_dist = f64::INFINITY;
    for i in 0..singularities.len() {
        for j in (i + 1)..singularities.len() {
            min_dist = min_dist.min((singularities[i] - singularities[j]).norm());
        }
    }
    if min_dist.is_finite() {
        R_MIN_FACTOR * min_dist
    } else {
        R_MIN_FACTOR * fallback_scale
    }
}

/// Monodromy along a positively oriented loop around one singularity.
pub fn loop_monodromy(
    conn: &ParamConnection,
    params: &HashMap<VarId, Complex64>,
    singularity: Complex64,
    radius: f64,
    base_point: Complex64,
    opts: &OdeOptions,
) -> Result<MonodromyResult> {
    loop_monodromy_with_segments(
        conn,
        params,
        singularity,
        radius,
        base_point,
        CIRCLE_SEGMENTS,
        opts,
    )
}

/// As `loop_monodromy`, with an explicit polygon resolution.
pub fn loop_monodromy_with_segments(
    conn: &ParamConnection,
    params: &HashMap<VarId, Complex64>,
    singularity: Complex64,
    radius: f64,
    base_point: Complex64,
    segments: usize,
    opts: &OdeOptions,
) -> Result<MonodromyResult> {
    let lp = LoopPath::circle(base_point, singularity, radius, segments.max(3));
    let sings = singularities_in_base(conn, params)?;
    let others: Vec<Complex64> = sings
        .iter()
        .copied()
        .filter(|&s| (s - singularity).norm() > 1e-9)
        .collect();
    let r_min = default_r_min(&sings, radius);
    lp.validate(&others, r_min)?;
    // The loop stays at distance ~radius from its own singularity.
    for seg in lp.waypoints.windows(2) {
        let d = segment_distance(seg[0], seg[1], singularity);
        if d < 0.5 * radius {
            return Err(Error::PoleProximity {
                dist: d,
                r_min: 0.5 * radius,
            });
        }
    }
    monodromy_along(conn, params, &lp, opts)
}

/// Monodromy along an explicit loop.
pub fn monodromy_along(
    conn: &ParamConnection,
    params: &HashMap<VarId, Complex64>,
    lp: &LoopPath,
    opts: &OdeOptions,
) -> Result<MonodromyResult> {
    let f = integrate_fundamental(conn, params, &lp.waypoints, opts)?;
    let det = f.matrix.det();
    if det.norm() < 1e-12 {
        return Err(Error::Invalid("monodromy matrix is singular".into()));
    }
    Ok(MonodromyResult {
        eigenvalues: eigenvalues(&f.matrix),
        trace: f.matrix.trace(),
        det,
        est_error: f.est_error,
        liouville_rel_err: f.liouville_rel_err,
        matrix: f.matrix,
    })
}

impl MonodromyResult {
    /// For SL sources the determinant must sit on 1 within tolerance.
    pub fn check_unimodular(&self, family: Family, tol: f64) -> bool {
        family != Family::SL || (self.det - Complex64::new(1.0, 0.0)).norm() <= tol
    }
}

/// Residual of the lower-triangular closed-form fundamental matrix
///   [x^a (1-x)^b, 0, 0; log(x) ..., ...; log(1-x) ..., ...]
/// against the rank-3 system with coefficient f = a/x - b/(1-x), sampled on
/// a real segment inside (0, 1) (simply connected, principal branches).
pub fn lemma3_check(a: Complex64, b: Complex64, samples: usize) -> Lemma3Result {
    let f = |x: Complex64| a / x - b / (Complex64::new(1.0, 0.0) - x);
    let phi = |x: Complex64| -> CMat {
        let g = x.powc(a) * (Complex64::new(1.0, 0.0) - x).powc(b);
        let lx = x.ln();
        let l1x = (Complex64::new(1.0, 0.0) - x).ln();
        let z = Complex64::new(0.0, 0.0);
        CMat::from_vec(3, vec![g, z, z, lx * g, g, z, l1x * g, z, g])
    };
    // Closed-form derivative of phi: g' = f g; (log x g)' = g/x + log x f g;
    // (log(1-x) g)' = -g/(1-x) + log(1-x) f g.
    let phi_prime = |x: Complex64| -> CMat {
        let one = Complex64::new(1.0, 0.0);
        let g = x.powc(a) * (one - x).powc(b);
        let fg = f(x) * g;
        let lx = x.ln();
        let l1x = (one - x).ln();
        let z = Complex64::new(0.0, 0.0);
        CMat::from_vec(
            3,
            vec![
                fg,
                z,
                z,
                g / x + lx * fg,
                fg,
                z,
                -g / (one - x) + l1x * fg,
                z,
                fg,
            ],
        )
    };
    let system = |x: Complex64| -> CMat {
        let one = Complex64::new(1.0, 0.0);
        let z = Complex64::new(0.0, 0.0);
        let fv = f(x);
        CMat::from_vec(
            3,
            vec![fv, z, z, one / x, fv, z, -one / (one - x), z, fv],
        )
    };
    let mut max_residual = 0.0_f64;
    for i in 0..samples {
        let t = 0.2 + 0.6 * (i as f64) / ((samples - 1).max(1) as f64);
        let x = Complex64::new(t, 0.0);
        let res = phi_prime(x).sub(&system(x).mul(&phi(x))).norm_inf();
        max_residual = max_residual.max(res);
    }
    Lemma3Result { max_residual }
}

#[derive(Debug, Clone, Copy)]
pub struct Lemma3Result {
    pub max_residual: f64,
}

/// Rank of the Jacobian of the three monodromy-trace invariants
///   f = 2 cos(2 pi gamma),
///   g = 2 cos(2 pi (gamma - alpha - beta)),
///   h = 2 cos(2 pi (alpha - beta))
/// with respect to (alpha, beta, gamma), evaluated analytically.
pub fn independence_rank(alpha: f64, beta: f64, gamma: f64) -> (usize, [[f64; 3]; 3]) {
    let tau = 2.0 * PI;
    let u = -2.0 * tau * (tau * gamma).sin();
    let v = -2.0 * tau * (tau * (gamma - alpha - beta)).sin();
    let w = -2.0 * tau * (tau * (alpha - beta)).sin();
    let jac = [
        [0.0, 0.0, u],
        [-v, -v, v],
        [w, -w, 0.0],
    ];
    (matrix_rank(&jac, 1e-8), jac)
}

fn matrix_rank(m: &[[f64; 3]; 3], tol: f64) -> usize {
    let mut a: Vec<Vec<f64>> = m.iter().map(|r| r.to_vec()).collect();
    let mut rank = 0;
    for col in 0..3 {
        let Some(p) = (rank..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
        else {
            break;
        };
        if a[p][col].abs() < tol {
            continue;
        }
        a.swap(rank, p);
        let pivot_row = a[rank].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != rank {
                let f = row[col] / pivot_row[col];
                for (c, v) in row.iter_mut().enumerate() {
                    *v -= f * pivot_row[c];
                }
            }
        }
        rank += 1;
    }
    rank
}

#[derive(Debug, Clone)]
pub struct TraceTestResult {
    /// max_t max_i |tr M_i(t) - tr M_i(0)|
    pub max_trace_drift: f64,
    /// max_t max_i ||M_i(t) - T_i(t) M_i(0) T_i(t)^{-1}||_inf where T_i is
    /// the parallel transport of the deformation at the loop base point.
    pub max_transport_drift: f64,
    pub checkpoints: usize,
}

/// Numerically verify isomonodromy along one deformation direction: flow the
/// coordinates, recompute loop monodromies at checkpoints, compare traces
/// and the transport-conjugated matrices. Loop geometry is fixed at t = 0,
/// with the moving singularity's circle widened to contain its whole track.
#[allow(clippy::too_many_arguments)]
pub fn isomonodromy_trace_test(
    def: &Deformation,
    init: &HashMap<VarId, Complex64>,
    direction: VarId,
    length: f64,
    checkpoints: usize,
    opts: &OdeOptions,
    allow_nonflat: bool,
) -> Result<TraceTestResult> {
    if !allow_nonflat {
        let curv = def.extended_curvature();
        if let Some(bad) = curv.first_failure() {
            return Err(Error::NotFlat(bad));
        }
    }
    let conn = def.connection();
    let space = conn.space();
    let dir_idx = def
        .directions()
        .iter()
        .position(|d| d.var == direction)
        .ok_or_else(|| Error::Invalid("flow direction is not a deformation direction".into()))?;
    if checkpoints < 1 {
        return Err(Error::Invalid("need at least one checkpoint".into()));
    }

    // State layout: dependent coordinates in flow order, then the moving
    // direction value, then k transport matrices (n^2 each).
    let deps: Vec<VarId> = def.flows().keys().copied().collect();
    let n = conn.dim();
    let sing_params: Vec<VarId> = def.directions().iter().map(|d| d.var).collect();
    let init_sings: Vec<Complex64> = sing_params
        .iter()
        .map(|p| {
            init.get(p).copied().ok_or_else(|| {
                Error::MissingAssignment(space.name(*p).to_string())
            })
        })
        .collect::<Result<Vec<_>>>()?;

    // Fixed loop geometry with the moving circle pre-widened.
    let mut centers = init_sings.clone();
    centers[dir_idx] += Complex64::new(length / 2.0, 0.0);
    let mut radii = Vec::new();
    for i in 0..centers.len() {
        let gap = centers
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, c)| (c - centers[i]).norm())
            .fold(f64::INFINITY, f64::min);
        if !gap.is_finite() {
            return Err(Error::Invalid("need at least two singularities".into()));
        }
        let r = 0.3 * gap;
        if i == dir_idx && r <= length / 2.0 + 0.05 * gap {
            return Err(Error::SingularityCollision(gap));
        }
        radii.push(r);
    }
    let loops: Vec<LoopPath> = (0..centers.len())
        .map(|i| {
            let base = centers[i] + Complex64::new(radii[i], 0.0);
            LoopPath::circle(base, centers[i], radii[i], CIRCLE_SEGMENTS)
        })
        .collect();
    let r_min = default_r_min(&init_sings, radii[0]);

    let param_map = |state: &[Complex64]| -> HashMap<VarId, Complex64> {
        let mut values = init.clone();
        for (i, d) in deps.iter().enumerate() {
            values.insert(*d, state[i]);
        }
        values.insert(direction, state[deps.len()]);
        values
    };

    // Reference monodromies at t = 0.
    let values0 = {
        let mut v = init.clone();
        for d in &deps {
            v.insert(*d, *init.get(d).ok_or_else(|| {
                Error::MissingAssignment(space.name(*d).to_string())
            })?);
        }
        v
    };
    let mut m0 = Vec::new();
    for lp in &loops {
        lp.validate(
            &init_sings
                .iter()
                .copied()
                .filter(|s| (s - lp.circle.unwrap().center).norm() > lp.circle.unwrap().radius)
                .collect::<Vec<_>>(),
            r_min,
        )?;
        m0.push(monodromy_along(conn, &values0, lp, opts)?);
    }

    // Flow the coordinates + transports with RK4; sample at checkpoints.
    let b_dir = &def.directions()[dir_idx].matrix;
    let mut state: Vec<Complex64> = deps
        .iter()
        .map(|d| values0[d])
        .chain([init_sings[dir_idx]])
        .collect();
    for _ in &loops {
        state.extend(CMat::identity(n).data.iter());
    }
    let f = |_t: f64, y: &[Complex64]| -> Result<Vec<Complex64>> {
        let values = param_map(y);
        let mut dy = vec![Complex64::new(0.0, 0.0); y.len()];
        for (i, d) in deps.iter().enumerate() {
            let flow = &def.flows()[d][&direction];
            dy[i] = Complex64::new(length, 0.0) * flow.eval_map(&values)?;
        }
        dy[deps.len()] = Complex64::new(length, 0.0);
        // Transports at each loop base point.
        for (li, lp) in loops.iter().enumerate() {
            let mut at = values.clone();
            at.insert(conn.base()[0], lp.base);
            let offset = deps.len() + 1 + li * n * n;
            let mut b = Vec::with_capacity(n * n);
            for r in 0..n {
                for c in 0..n {
                    b.push(b_dir.entry(r, c).eval_map(&at)?);
                }
            }
            for r in 0..n {
                for c in 0..n {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for k in 0..n {
                        acc += b[r * n + k] * y[offset + k * n + c];
                    }
                    dy[offset + r * n + c] = Complex64::new(length, 0.0) * acc;
                }
            }
        }
        Ok(dy)
    };

    let substeps = 20usize;
    let total_steps = checkpoints * substeps;
    let mut max_trace_drift = 0.0_f64;
    let mut max_transport_drift = 0.0_f64;
    let mut step_count = 0usize;
    rk4(&f, state, total_steps, |_t, y| {
        step_count += 1;
        if !step_count.is_multiple_of(substeps) {
            return Ok(());
        }
        let values = param_map(y);
        // Current singularity positions; check the frozen loops still
        // separate them correctly.
        let cur_sings: Vec<Complex64> = sing_params
            .iter()
            .map(|p| values[p])
            .collect();
        for i in 0..cur_sings.len() {
            for j in (i + 1)..cur_sings.len() {
                if (cur_sings[i] - cur_sings[j]).norm() < r_min {
                    return Err(Error::SingularityCollision(
                        (cur_sings[i] - cur_sings[j]).norm(),
                    ));
                }
            }
        }
        for (li, lp) in loops.iter().enumerate() {
            let spec = lp.circle.unwrap();
            if (cur_sings[li] - spec.center).norm() >= spec.radius {
                return Err(Error::SingularityCollision(
                    (cur_sings[li] - spec.center).norm(),
                ));
            }
            let others: Vec<Complex64> = cur_sings
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != li)
                .map(|(_, s)| *s)
                .collect();
            lp.validate(&others, r_min)?;
            let m_t = monodromy_along(conn, &values, lp, opts)?;
            max_trace_drift = max_trace_drift.max((m_t.trace - m0[li].trace).norm());
            let offset = deps.len() + 1 + li * n * n;
            let t_mat = CMat::from_vec(n, y[offset..offset + n * n].to_vec());
            let predicted = t_mat.mul(&m0[li].matrix).mul(&t_mat.inverse()?);
            max_transport_drift =
                max_transport_drift.max(m_t.matrix.sub(&predicted).norm_inf());
        }
        Ok(())
    })?;

    Ok(TraceTestResult {
        max_trace_drift,
        max_transport_drift,
        checkpoints,
    })
}

#[derive(Debug, Clone)]
pub struct SchwarzianCheck {
    pub numeric: Complex64,
    pub symbolic: Complex64,
    pub residual: f64,
}

/// Compare the numerically measured Schwarzian of a ratio of two integrated
/// solutions against the symbolic potential at x0. The derivative stencils
/// act on log y' sampled at x0 +- h and x0 +- ih (complex cross), which
/// cancels the leading truncation orders; `mobius` optionally post-composes
/// y -> (m0 y + m1)/(m2 y + m3).
pub fn schwarzian_numeric_check(
    conn: &ParamConnection,
    params: &HashMap<VarId, Complex64>,
    x0: Complex64,
    h: f64,
    mobius: Option<[Complex64; 4]>,
    opts: &OdeOptions,
) -> Result<SchwarzianCheck> {
    let potential = conn.schwarzian_potential()?;
    let x = conn.base()[0];
    let mut at = params.clone();
    at.insert(x, x0);
    let symbolic = potential.eval_map(&at)?;

    // Fundamental matrix with columns (u1, u1') = (1, 0), (u2, u2') = (1, 1)
    // at x0, so y = u1/u2 has y'(x0) = -1.
    let m = mobius.unwrap_or([
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
    ]);
    let log_yprime = |target: Complex64| -> Result<Complex64> {
        let phi0 = CMat::from_vec(
            2,
            vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
            ],
        );
        let path = [x0, target];
        let res = integrate_fundamental(conn, params, &path, opts)?;
        let phi = res.matrix.mul(&phi0);
        // Columns after the Mobius recombination (a y + b)/(c y + d):
        // new u1 = a u1 + b u2, new u2 = c u1 + d u2.
        let u1 = m[0] * phi[(0, 0)] + m[1] * phi[(0, 1)];
        let du1 = m[0] * phi[(1, 0)] + m[1] * phi[(1, 1)];
        let u2 = m[2] * phi[(0, 0)] + m[3] * phi[(0, 1)];
        let du2 = m[2] * phi[(1, 0)] + m[3] * phi[(1, 1)];
        let yp = (du1 * u2 - u1 * du2) / (u2 * u2);
        if yp.norm() < 1e-12 {
            return Err(Error::Invalid(
                "solution ratio has a critical point near x0; pick different data".into(),
            ));
        }
        Ok(yp)
    };
    let z0 = log_yprime(x0)?;
    let zp = log_yprime(x0 + Complex64::new(h, 0.0))?;
    let zm = log_yprime(x0 - Complex64::new(h, 0.0))?;
    let zi = log_yprime(x0 + Complex64::new(0.0, h))?;
    let zmi = log_yprime(x0 - Complex64::new(0.0, h))?;
    // Differences of log y' relative to the center avoid branch jumps.
    let lp = (zp / z0).ln();
    let lm = (zm / z0).ln();
    let li = (zi / z0).ln();
    let lmi = (zmi / z0).ln();
    let hh = Complex64::new(h, 0.0);
    let ih = Complex64::new(0.0, h);
    // L' with the h^2 terms cancelled between the real and imaginary pairs.
    let d_real = (lp - lm) / (2.0 * hh);
    let d_imag = (li - lmi) / (2.0 * ih);
    let l1 = (d_real + d_imag) / 2.0;
    // L'' with the h^4 term cancelled.
    let l2 = ((lp + lm) - (li + lmi)) / (2.0 * hh * hh);
    let numeric = l2 - l1 * l1 / 2.0;
    Ok(SchwarzianCheck {
        numeric,
        symbolic,
        residual: (numeric - symbolic).norm(),
    })
}

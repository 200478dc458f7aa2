//! jetconn command line: symbolic and numerical computations on
//! parameterized linear connections.
//!
//! Exit codes: 0 success; 1 mathematical failure (non-flat input where
//! flatness is required, failed verification, residual above tolerance);
//! 2 usage, parse, or schema errors.

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use jetconn_core::algebra::{RatFun, VarId};
use jetconn_core::connection::ParamConnection;
use jetconn_core::error::Error;
use jetconn_core::invariants::{
    search_first_integrals, verify_first_integral, AnsatzConfig, DenomBase,
};
use jetconn_core::io::{parse_connection, parse_rational, preset, Report};
use jetconn_core::isomonodromy::{hypergeometric_galois_preset, schlesinger_system};
use jetconn_core::jet::ProlongedSystem;
use jetconn_core::monodromy::{
    independence_rank, isomonodromy_trace_test, lemma3_check, loop_monodromy_with_segments,
    schwarzian_numeric_check,
};
use jetconn_core::numeric::OdeOptions;

#[derive(Parser)]
#[command(
    name = "jetconn",
    about = "Exact symbolic + numerical toolkit for parameterized linear connections",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Write the report to a file instead of stdout.
    #[arg(long, global = true)]
    output: Option<std::path::PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Machine,
}

#[derive(Args)]
struct SourceArgs {
    /// Built-in preset: hypergeometric, hypergeometric-det, fuchsian(n,k).
    #[arg(long, conflicts_with = "spec")]
    preset: Option<String>,

    /// Path to a connection spec document (JSON).
    #[arg(long)]
    spec: Option<std::path::PathBuf>,
}

impl SourceArgs {
    fn load(&self) -> Result<ParamConnection, Error> {
        match (&self.preset, &self.spec) {
            (Some(p), None) => preset(p),
            (None, Some(path)) => {
                let bytes = std::fs::read(path)
                    .map_err(|e| Error::Schema(format!("cannot read {}: {e}", path.display())))?;
                parse_connection(&bytes)
            }
            _ => Err(Error::Schema(
                "exactly one of --preset or --spec is required".into(),
            )),
        }
    }
}

#[derive(Args)]
struct ParamArgs {
    /// Parameter assignment name=p/q (repeatable).
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,

    /// JSON file mapping parameter names to values ("p/q" strings or
    /// numbers).
    #[arg(long = "params-file")]
    params_file: Option<std::path::PathBuf>,

    /// Shorthand for --param alpha=...
    #[arg(long)]
    alpha: Option<String>,

    /// Shorthand for --param beta=...
    #[arg(long)]
    beta: Option<String>,

    /// Shorthand for --param gamma=...
    #[arg(long)]
    gamma: Option<String>,
}

impl ParamArgs {
    fn assignments(&self, conn: &ParamConnection) -> Result<HashMap<VarId, Complex64>, Error> {
        let mut out = HashMap::new();
        let mut push = |name: &str, value: &str| -> Result<(), Error> {
            let id = conn
                .space()
                .lookup(name)
                .ok_or_else(|| Error::UnknownIdentifier {
                    name: name.to_string(),
                    pos: 0,
                })?;
            let v = parse_numeric(value)?;
            out.insert(id, v);
            Ok(())
        };
        if let Some(path) = &self.params_file {
            let bytes = std::fs::read(path)
                .map_err(|e| Error::Schema(format!("cannot read {}: {e}", path.display())))?;
            let doc: serde_json::Map<String, Value> = serde_json::from_slice(&bytes)
                .map_err(|e| Error::Schema(e.to_string()))?;
            for (name, value) in &doc {
                match value {
                    Value::String(s) => push(name, s)?,
                    Value::Number(n) => push(name, &n.to_string())?,
                    other => {
                        return Err(Error::Schema(format!(
                            "parameter `{name}` has unsupported value {other}"
                        )))
                    }
                }
            }
        }
        for kv in &self.params {
            let (name, value) = kv
                .split_once('=')
                .ok_or_else(|| Error::Schema(format!("bad --param `{kv}`, expected NAME=VALUE")))?;
            push(name.trim(), value.trim())?;
        }
        if let Some(a) = &self.alpha {
            push("alpha", a)?;
        }
        if let Some(b) = &self.beta {
            push("beta", b)?;
        }
        if let Some(g) = &self.gamma {
            push("gamma", g)?;
        }
        for &p in conn.params() {
            if !out.contains_key(&p) {
                return Err(Error::MissingAssignment(
                    conn.space().name(p).to_string(),
                ));
            }
        }
        Ok(out)
    }
}

/// Rational `p/q` (exact) or decimal literal; `re,im` gives a complex value.
fn parse_numeric(text: &str) -> Result<Complex64, Error> {
    let t = text.trim();
    if let Some((re, im)) = t.split_once(',') {
        return Ok(Complex64::new(
            parse_numeric(re)?.re,
            parse_numeric(im)?.re,
        ));
    }
    if t.contains('/') {
        let q = parse_rational(t)?;
        return Ok(Complex64::new(rational_to_f64(&q), 0.0));
    }
    t.parse::<f64>()
        .map(|v| Complex64::new(v, 0.0))
        .map_err(|_| Error::Schema(format!("not a number: `{t}`")))
}

fn rational_to_f64(q: &num_rational::BigRational) -> f64 {
    use num_traits::ToPrimitive;
    q.numer().to_f64().unwrap_or(f64::NAN) / q.denom().to_f64().unwrap_or(f64::NAN)
}

#[derive(Subcommand)]
enum Command {
    /// Check Frobenius flatness: all compatibility matrices
    /// dA_j/dx_i - dA_i/dx_j - [A_i, A_j] must vanish.
    CheckFlat {
        #[command(flatten)]
        source: SourceArgs,
    },

    /// Emit the adjoint (gauge-symmetry) system d(sigma)/dx_i = [A_i, sigma].
    Lax {
        #[command(flatten)]
        source: SourceArgs,
    },

    /// Scalar connection satisfied by det U (coefficient trace A_i).
    DetReduce {
        #[command(flatten)]
        source: SourceArgs,
    },

    /// Schwarzian potential of the projective reduction of a 2x2 companion
    /// system; optionally cross-check numerically at a point.
    Schwarzian {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        params: ParamArgs,
        /// Evaluate the numeric cross-check at this base point.
        #[arg(long)]
        x0: Option<String>,
        /// Stencil width for the numeric Schwarzian.
        #[arg(long, default_value_t = 1e-3)]
        stencil: f64,
    },

    /// Prolong the connection to jet order k: the restricted
    /// total-derivative table on parameter jets.
    Prolong {
        #[command(flatten)]
        source: SourceArgs,
        /// Jet order.
        #[arg(long, default_value_t = 1)]
        order: u32,
    },

    /// Verify that an expression in the jet coordinates is a first integral
    /// of the order-k prolongation.
    InvariantsVerify {
        #[command(flatten)]
        source: SourceArgs,
        /// Expression in the jet coordinates (e.g. "w_aa/w - w_a^2/w^2").
        #[arg(long)]
        expr: String,
        #[arg(long, default_value_t = 2)]
        order: u32,
    },

    /// Search rational first integrals N/den over a bounded ansatz by exact
    /// linear algebra.
    InvariantsSearch {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value_t = 2)]
        order: u32,
        #[arg(long = "jet-degree", default_value_t = 2)]
        jet_degree: u32,
        #[arg(long = "coeff-degree", default_value_t = 0)]
        coeff_degree: u32,
        /// Denominator base: the scalar fiber variable or det U.
        #[arg(long, value_enum, default_value_t = DenomChoice::W)]
        den: DenomChoice,
        /// Power of the denominator base.
        #[arg(long = "den-power", default_value_t = 2)]
        den_power: u32,
    },

    /// The Schlessinger isomonodromic deformation of the Fuchsian system:
    /// fiber matrices over each pole position plus the residue flows.
    Schlesinger {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        k: usize,
    },

    /// Extended curvature of the Schlessinger deformation: every direction
    /// pair, differentiated through the coordinate flows.
    ExtendedCurvature {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Perturb B_{a_1} by E_12 to demonstrate a non-flat deformation.
        #[arg(long, default_value_t = false)]
        perturb: bool,
    },

    /// Gauge-symmetry PDE system of the Schlessinger deformation
    /// (parameterized Galois system of the Fuchsian connection).
    Galois {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        k: usize,
    },

    /// Two-layer gauge-symmetry system of the Gauss companion connection:
    /// bracket equation plus five determinant constraints, with the
    /// exp(mu0 + mu1 gamma + mu2 (alpha+beta)) family check.
    HypergeometricGalois,

    /// Loop monodromy: integrate the fundamental solution around a
    /// singularity and report eigenvalues and trace.
    Monodromy {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        params: ParamArgs,
        /// Singularity to encircle (complex "re" or "re,im").
        #[arg(long = "loop")]
        loop_center: String,
        #[arg(long, default_value_t = 0.3)]
        radius: f64,
        /// Base point of the loop.
        #[arg(long = "base-point", default_value = "0.5")]
        base_point: String,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Polygon resolution of the loop circle.
        #[arg(long, default_value_t = 64)]
        segments: usize,
    },

    /// Monodromy-constancy test along a Schlessinger flow: trace drift and
    /// transport-conjugation drift over checkpoints.
    IsomonodromyTest {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[command(flatten)]
        params: ParamArgs,
        /// Deformation direction (a pole position, e.g. a1).
        #[arg(long, default_value = "a1")]
        direction: String,
        #[arg(long, default_value_t = 0.1)]
        length: f64,
        #[arg(long, default_value_t = 10)]
        checkpoints: usize,
        /// Perturb B_{a_1} by E_12 (skips the flatness gate).
        #[arg(long, default_value_t = false)]
        perturb: bool,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },

    /// Verify that the closed-form lower-triangular fundamental matrix
    /// solves the rank-3 system with coefficient a/x - b/(1-x).
    Lemma3 {
        #[arg(long, default_value = "3/10")]
        a: String,
        #[arg(long, default_value = "7/10")]
        b: String,
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },

    /// Rank of the Jacobian of the three monodromy-trace invariants in
    /// (alpha, beta, gamma).
    Independence {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        gamma: f64,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum DenomChoice {
    /// Scalar fiber variable w.
    W,
    /// Determinant of the fiber matrix U.
    Det,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let (mut report, code) = match run(&cli.command) {
        Ok((report, code)) => (report, code),
        Err(e) => {
            let code = classify_error(&e);
            (
                Report::failure(command_name(&cli.command), json!({"error": e.to_string()})),
                code,
            )
        }
    };
    report.timing_ms = Some(started.elapsed().as_millis());
    let bytes = match cli.format {
        Format::Machine => report.to_machine_bytes(),
        Format::Text => report.to_text().into_bytes(),
    };
    match &cli.output {
        Some(path) => {
            if std::fs::write(path, &bytes).is_err() {
                eprintln!("cannot write {}", path.display());
                return ExitCode::from(2);
            }
        }
        None => {
            use std::io::Write;
            let _ = std::io::stdout().write_all(&bytes);
        }
    }
    ExitCode::from(code)
}

fn classify_error(e: &Error) -> u8 {
    match e {
        Error::NotFlat(_)
        | Error::PoleEvaluation { .. }
        | Error::PoleProximity { .. }
        | Error::SingularityCollision(_)
        | Error::StepUnderflow(_)
        | Error::NotCompanion
        | Error::NotGrouplike(_) => 1,
        _ => 2,
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::CheckFlat { .. } => "check-flat",
        Command::Lax { .. } => "lax",
        Command::DetReduce { .. } => "det-reduce",
        Command::Schwarzian { .. } => "schwarzian",
        Command::Prolong { .. } => "prolong",
        Command::InvariantsVerify { .. } => "invariants-verify",
        Command::InvariantsSearch { .. } => "invariants-search",
        Command::Schlesinger { .. } => "schlesinger",
        Command::ExtendedCurvature { .. } => "extended-curvature",
        Command::Galois { .. } => "galois",
        Command::HypergeometricGalois => "hypergeometric-galois",
        Command::Monodromy { .. } => "monodromy",
        Command::IsomonodromyTest { .. } => "isomonodromy-test",
        Command::Lemma3 { .. } => "lemma3",
        Command::Independence { .. } => "independence",
    }
}

fn complex_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn run(cmd: &Command) -> Result<(Report, u8), Error> {
    let name = command_name(cmd);
    match cmd {
        Command::CheckFlat { source } => {
            let conn = source.load()?;
            let rep = conn.is_flat();
            // Echo every curvature component, flat or not.
            let mut pairs = Vec::new();
            for i in 0..conn.base().len() {
                for j in (i + 1)..conn.base().len() {
                    let k = conn.curvature(i, j);
                    pairs.push(json!({
                        "pair": [
                            conn.space().name(conn.base()[i]),
                            conn.space().name(conn.base()[j]),
                        ],
                        "zero": k.is_zero(),
                        "matrix": matrix_json(&k),
                    }));
                }
            }
            let mut payload = json!({"flat": rep.flat, "curvature": pairs});
            if let Some(w) = &rep.witness {
                payload["witness"] = json!({
                    "pair": [w.dir_i, w.dir_j],
                    "entry": [w.row, w.col],
                    "component": w.component.to_string(),
                });
            }
            let code = if rep.flat { 0 } else { 1 };
            Ok((
                if rep.flat {
                    Report::ok(name, payload)
                } else {
                    Report::failure(name, payload)
                },
                code,
            ))
        }
        Command::Lax { source } => {
            let conn = source.load()?;
            let lax = conn.lax_system();
            let payload = json!({
                "equations": lax.equations_text(),
                "matrices": lax
                    .directions
                    .iter()
                    .zip(&lax.mats)
                    .map(|(d, m)| json!({"direction": d, "matrix": matrix_json(m)}))
                    .collect::<Vec<_>>(),
            });
            Ok((Report::ok(name, payload), 0))
        }
        Command::DetReduce { source } => {
            let conn = source.load()?;
            let det = conn.det_reduction();
            let mut payload = json!({
                "coefficients": det
                    .base()
                    .iter()
                    .enumerate()
                    .map(|(i, &b)| json!({
                        "direction": det.space().name(b),
                        "coefficient": det.matrix(i).entry(0, 0).to_string(),
                    }))
                    .collect::<Vec<_>>(),
            });
            if source.preset.as_deref() == Some("hypergeometric") {
                payload["abc_change"] = json!({
                    "note": "the affine change a = -gamma, b = gamma-alpha-beta-1, c = alpha \
                             turns the coefficient into exactly a/x - b/(1-x); the b-direction \
                             is the negative of the naive partial-fraction reading at 1",
                    "substitution": {"alpha": "c", "beta": "-a-b-c-1", "gamma": "-a"},
                });
            }
            Ok((Report::ok(name, payload), 0))
        }
        Command::Schwarzian {
            source,
            params,
            x0,
            stencil,
        } => {
            let conn = source.load()?;
            let potential = conn.schwarzian_potential()?;
            let mut payload = json!({
                "potential": potential.to_string(),
                "convention": "Schw(y) = y'''/y' - (3/2)(y''/y')^2 = 2q - p^2/2 - p' for u'' + p u' + q u = 0; \
                               some references print the halved potential nu = V/2 with singular parts \
                               over 4x^2, 4(1-x)^2 and 2x(1-x)",
            });
            let mut code = 0;
            if let Some(x0) = x0 {
                let values = params.assignments(&conn)?;
                let x0 = parse_numeric(x0)?;
                let check = schwarzian_numeric_check(
                    &conn,
                    &values,
                    x0,
                    *stencil,
                    None,
                    &OdeOptions::default(),
                )?;
                payload["numeric_check"] = json!({
                    "x0": complex_json(x0),
                    "numeric": complex_json(check.numeric),
                    "symbolic": complex_json(check.symbolic),
                    "residual": check.residual,
                });
                if check.residual > 1e-5 {
                    code = 1;
                }
            }
            Ok((Report::ok(name, payload), code))
        }
        Command::Prolong { source, order } => {
            let conn = source.load()?;
            let sys = ProlongedSystem::new(&conn, *order)?;
            let payload = json!({
                "order": order,
                "coordinates": sys
                    .gamma_coords()
                    .iter()
                    .map(|&v| sys.space().name(v))
                    .collect::<Vec<_>>(),
                "equations": sys.equations_text(),
            });
            Ok((Report::ok(name, payload), 0))
        }
        Command::InvariantsVerify {
            source,
            expr,
            order,
        } => {
            let conn = source.load()?;
            let sys = ProlongedSystem::new(&conn, *order)?;
            let f = jetconn_core::io::parse_expr(expr, sys.space())?;
            let out = verify_first_integral(&f, &sys)?;
            let payload = json!({
                "expression": f.to_string(),
                "is_first_integral": out.ok,
                "residuals": out
                    .residuals
                    .iter()
                    .map(|(d, r)| json!({"direction": d, "residual": r.to_string()}))
                    .collect::<Vec<_>>(),
            });
            let code = if out.ok { 0 } else { 1 };
            Ok((
                if out.ok {
                    Report::ok(name, payload)
                } else {
                    Report::failure(name, payload)
                },
                code,
            ))
        }
        Command::InvariantsSearch {
            source,
            order,
            jet_degree,
            coeff_degree,
            den,
            den_power,
        } => {
            let conn = source.load()?;
            let sys = ProlongedSystem::new(&conn, *order)?;
            let cfg = AnsatzConfig {
                order: *order,
                jet_degree: *jet_degree,
                coeff_degree: *coeff_degree,
                denom: match den {
                    DenomChoice::W => DenomBase::FiberScalar,
                    DenomChoice::Det => DenomBase::DetU,
                },
                denom_power: *den_power,
            };
            let basis = search_first_integrals(&sys, &cfg)?;
            let payload = json!({
                "dimension": basis.len(),
                "basis": basis
                    .iter()
                    .map(|c| json!({"expression": c.expr.to_string(), "order": c.order}))
                    .collect::<Vec<_>>(),
            });
            Ok((Report::ok(name, payload), 0))
        }
        Command::Schlesinger { n, k } => {
            let def = schlesinger_system(*n, *k)?;
            let space = def.connection().space();
            let payload = json!({
                "n": n,
                "k": k,
                "deformation_matrices": def
                    .directions()
                    .iter()
                    .map(|d| json!({
                        "direction": space.name(d.var),
                        "matrix": matrix_json(&d.matrix),
                    }))
                    .collect::<Vec<_>>(),
                "flows": def
                    .flows()
                    .iter()
                    .flat_map(|(dep, per)| {
                        per.iter().map(move |(dir, rhs)| {
                            json!({
                                "dependent": space.name(*dep),
                                "direction": space.name(*dir),
                                "rhs": rhs.to_string(),
                            })
                        })
                    })
                    .collect::<Vec<_>>(),
            });
            Ok((Report::ok(name, payload), 0))
        }
        Command::ExtendedCurvature { n, k, perturb } => {
            let mut def = schlesinger_system(*n, *k)?;
            if *perturb {
                let space = def.connection().space().clone();
                let one = RatFun::one(&space);
                let m = def.direction_matrix_mut(0);
                let e01 = m.entry(0, 1).add(&one);
                *m.entry_mut(0, 1) = e01;
            }
            let curv = def.extended_curvature();
            let all_zero = curv.all_zero();
            let payload = json!({
                "all_zero": all_zero,
                "pairs": curv
                    .pairs
                    .iter()
                    .map(|p| json!({
                        "pair": [p.dir_i, p.dir_j],
                        "zero": p.matrix.is_zero(),
                        "matrix": matrix_json(&p.matrix),
                    }))
                    .collect::<Vec<_>>(),
                "flow_consistency": curv
                    .flow_residuals
                    .iter()
                    .map(|f| json!({
                        "dependent": f.dependent,
                        "pair": [f.dir_i, f.dir_j],
                        "zero": f.residual.is_zero(),
                    }))
                    .collect::<Vec<_>>(),
                "first_failure": curv.first_failure(),
            });
            let code = if all_zero { 0 } else { 1 };
            Ok((
                if all_zero {
                    Report::ok(name, payload)
                } else {
                    Report::failure(name, payload)
                },
                code,
            ))
        }
        Command::Galois { n, k } => {
            let def = schlesinger_system(*n, *k)?;
            let sys = def.galois_equations()?;
            let payload = galois_json(&sys);
            Ok((Report::ok(name, payload), 0))
        }
        Command::HypergeometricGalois => {
            let (sys, family) = hypergeometric_galois_preset()?;
            let satisfied = family.satisfies(&sys.det_constraints);
            let mut payload = galois_json(&sys);
            payload["solution_family"] = json!({
                "det_sigma": "exp(mu0 + mu1*gamma + mu2*(alpha + beta))",
                "satisfies_constraints": satisfied,
            });
            let code = if satisfied { 0 } else { 1 };
            Ok((Report::ok(name, payload), code))
        }
        Command::Monodromy {
            source,
            params,
            loop_center,
            radius,
            base_point,
            tol,
            segments,
        } => {
            let conn = source.load()?;
            let values = params.assignments(&conn)?;
            let center = parse_numeric(loop_center)?;
            let base = parse_numeric(base_point)?;
            let opts = OdeOptions {
                rtol: *tol,
                ..OdeOptions::default()
            };
            let res = loop_monodromy_with_segments(
                &conn, &values, center, *radius, base, *segments, &opts,
            )?;
            let payload = json!({
                "singularity": complex_json(center),
                "radius": radius,
                "eigenvalues": res.eigenvalues.iter().copied().map(complex_json).collect::<Vec<_>>(),
                "trace": complex_json(res.trace),
                "det": complex_json(res.det),
                "liouville_rel_err": res.liouville_rel_err,
            });
            Ok((Report::ok(name, payload), 0))
        }
        Command::IsomonodromyTest {
            n,
            k,
            params,
            direction,
            length,
            checkpoints,
            perturb,
            tol,
        } => {
            let mut def = schlesinger_system(*n, *k)?;
            if *perturb {
                let space = def.connection().space().clone();
                let one = RatFun::one(&space);
                let m = def.direction_matrix_mut(0);
                let e01 = m.entry(0, 1).add(&one);
                *m.entry_mut(0, 1) = e01;
            }
            let conn = def.connection().clone();
            let values = params.assignments(&conn)?;
            let dir = conn
                .space()
                .lookup(direction)
                .ok_or_else(|| Error::UnknownIdentifier {
                    name: direction.clone(),
                    pos: 0,
                })?;
            let opts = OdeOptions {
                rtol: *tol,
                ..OdeOptions::default()
            };
            let res = isomonodromy_trace_test(
                &def,
                &values,
                dir,
                *length,
                *checkpoints,
                &opts,
                *perturb,
            )?;
            let payload = json!({
                "direction": direction,
                "length": length,
                "checkpoints": res.checkpoints,
                "max_trace_drift": res.max_trace_drift,
                "max_transport_drift": res.max_transport_drift,
                "perturbed": perturb,
            });
            Ok((Report::ok(name, payload), 0))
        }
        Command::Lemma3 { a, b, samples } => {
            let av = parse_numeric(a)?;
            let bv = parse_numeric(b)?;
            let res = lemma3_check(av, bv, *samples);
            let ok = res.max_residual <= 1e-8;
            let payload = json!({
                "a": complex_json(av),
                "b": complex_json(bv),
                "samples": samples,
                "max_residual": res.max_residual,
                "solves_system": ok,
            });
            let code = if ok { 0 } else { 1 };
            Ok((
                if ok {
                    Report::ok(name, payload)
                } else {
                    Report::failure(name, payload)
                },
                code,
            ))
        }
        Command::Independence { alpha, beta, gamma } => {
            let (rank, jac) = independence_rank(*alpha, *beta, *gamma);
            let payload = json!({
                "alpha": alpha,
                "beta": beta,
                "gamma": gamma,
                "rank": rank,
                "jacobian": jac,
            });
            Ok((Report::ok(name, payload), 0))
        }
    }
}

fn matrix_json(m: &jetconn_core::algebra::MatRF) -> Value {
    let rows: Vec<Vec<String>> = (0..m.rows())
        .map(|r| (0..m.cols()).map(|c| m.entry(r, c).to_string()).collect())
        .collect();
    json!(rows)
}

fn galois_json(sys: &jetconn_core::isomonodromy::GaloisSystem) -> Value {
    json!({
        "equations": sys.equations_text(),
        "bracket_equations": sys
            .bracket_eqs
            .iter()
            .map(|e| json!({"direction": e.direction, "matrix": matrix_json(&e.matrix)}))
            .collect::<Vec<_>>(),
        "det_constraints": sys
            .det_constraints
            .iter()
            .map(|c| json!(c.text))
            .collect::<Vec<_>>(),
        "flow_equations": sys
            .flow_eqs
            .iter()
            .map(|f| json!({
                "dependent": f.dependent,
                "direction": f.direction,
                "rhs": f.rhs.to_string(),
            }))
            .collect::<Vec<_>>(),
        "notes": sys.notes,
    })
}

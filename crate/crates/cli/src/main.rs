//! Command-line front end: locate balanced fibers, print potentials, solve
//! and lift leading term systems, and run the correspondence checks, over
//! polytopes given as structured text files.

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

use toric_potential::error::Error;
use toric_potential::floer::{displacement_report, hf_t2};
use toric_potential::lift::{
    default_cap, lift_exact, lift_numeric, po_threshold, recognize_solution, ThresholdOutcome,
};
use toric_potential::linalg::QVec;
use toric_potential::locator::{integer_basis, level_structure_at, run_filtration};
use toric_potential::lte::{lte_at, solve_full, Degeneracy, Tolerances};
use toric_potential::novikov::{Exponent, NovikovSeries, Order};
use toric_potential::polytope::{parse_polytope, MomentPolytope};
use toric_potential::potential::{
    build_po0, leading_term_system, render_po0_symbolic, LaurentPolyNov,
};
use toric_potential::qcoh::{build_relations, count_vs_betti, verify_psi};
use toric_potential::scalar::{fmt_rat, parse_rat, Coeff, GaussQ, Rat, C64};

#[derive(Parser)]
#[command(
    name = "toric-potential",
    version,
    about = "Balanced torus fibers of toric manifolds via Novikov-ring critical points"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Polytope file (structured text)
    file: PathBuf,
    /// Override a symbolic parameter, e.g. --param alpha=1/3 (repeatable)
    #[arg(long = "param", value_name = "NAME=P/Q")]
    params: Vec<String>,
    /// Seed for the multistart solver
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Machine-readable output
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct AtPoint {
    /// Fiber position, e.g. --at 1/3,1/3 (defaults to the located center)
    #[arg(long, value_name = "U1,U2,..")]
    at: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the max-min filtration: S_k, the faces P_k, and u0
    Locate {
        #[command(flatten)]
        common: Common,
    },
    /// Print the leading-order potential (symbolically, or at a point)
    Potential {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        at: AtPoint,
    },
    /// Solve the leading term equations at a point
    Lte {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        at: AtPoint,
    },
    /// Enumerate candidate fibers, count solutions, compare with Betti numbers
    Fibers {
        #[command(flatten)]
        common: Common,
        /// Explicit positions to test (repeatable); required for dim > 2
        #[arg(long = "at", value_name = "U1,U2,..")]
        at: Vec<String>,
    },
    /// Lift strong solutions to Novikov-series critical points
    Lift {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        at: AtPoint,
        /// Truncation order of the lift, e.g. --order 2
        #[arg(long, value_name = "P/Q")]
        order: Option<String>,
    },
    /// Solvability threshold of the critical equations at a point
    Threshold {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        at: AtPoint,
        /// Verification cap, e.g. --cap 2
        #[arg(long, value_name = "P/Q")]
        cap: Option<String>,
    },
    /// Floer cohomology of a surface fiber at given y
    Hf {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        at: AtPoint,
        /// Coordinates y, rational with optional imaginary part: "1,-1" or "1/2+1/3i,1"
        #[arg(long, value_name = "Y1,Y2", default_value = "1,1")]
        y: String,
        #[arg(long, value_name = "P/Q", default_value = "2")]
        cap: String,
    },
    /// Verify the quantum Stanley-Reisner and linear relations under z -> z̄(u)
    #[command(name = "qh-check")]
    QhCheck {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        at: AtPoint,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = std::time::Instant::now();
    match run(cli) {
        Ok(()) => {
            // stdout stays byte-identical across runs; timing goes to stderr
            eprintln!("({} ms)", started.elapsed().as_millis());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Malformed(_)
                | Error::NotSmooth(_, _)
                | Error::Unbounded(_)
                | Error::NotFullDim(_)
                | Error::NotInterior(_, _, _)
                | Error::DimensionUnsupported(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Locate { common } => {
            let (p, hash) = load(&common)?;
            let f = run_filtration(&p)?;
            if common.json {
                let steps: Vec<_> = f
                    .steps
                    .iter()
                    .map(|s| {
                        json!({
                            "k": s.k,
                            "s": fmt_rat(&s.s_value),
                            "dim": s.face_dim,
                            "face_vertices": s.face_vertices.iter().map(fmt_point).collect::<Vec<_>>(),
                            "level_facets": s.level_facets.iter().map(|i| i + 1).collect::<Vec<_>>(),
                        })
                    })
                    .collect();
                emit(&common, &hash, "locate", json!({"steps": steps, "u0": fmt_point(&f.center)}));
            } else {
                print!("{p}");
                for s in &f.steps {
                    println!(
                        "S_{} = {}  (dim P_{} = {}, level facets {{{}}})",
                        s.k,
                        fmt_rat(&s.s_value),
                        s.k,
                        s.face_dim,
                        s.level_facets
                            .iter()
                            .map(|i| (i + 1).to_string())
                            .collect::<Vec<_>>()
                            .join(","),
                    );
                    println!(
                        "  P_{} vertices: {}",
                        s.k,
                        s.face_vertices
                            .iter()
                            .map(|v| format!("({})", fmt_point(v)))
                            .collect::<Vec<_>>()
                            .join(" ")
                    );
                }
                println!("u0 = ({})", fmt_point(&f.center));
            }
            Ok(())
        }
        Command::Potential { common, at } => {
            let (p, hash) = load(&common)?;
            match parse_at(&at.at, p.dim)? {
                None => {
                    let s = render_po0_symbolic(&p);
                    if common.json {
                        emit(&common, &hash, "potential", json!({"symbolic": s}));
                    } else {
                        println!("PO_0 = {s}");
                    }
                }
                Some(u) => {
                    let po: LaurentPolyNov<GaussQ> = build_po0(&p, &u, &[])?;
                    if common.json {
                        let terms: Vec<_> = po
                            .terms()
                            .map(|(e, c)| json!({"y_exponents": e, "coefficient": c.to_string()}))
                            .collect();
                        emit(&common, &hash, "potential", json!({"at": fmt_point(&u), "terms": terms}));
                    } else {
                        println!("PO_0 at ({}) = {}", fmt_point(&u), po);
                    }
                }
            }
            Ok(())
        }
        Command::Lte { common, at } => {
            let (p, hash) = load(&common)?;
            let u = require_at(&p, parse_at(&at.at, p.dim)?)?;
            let report = lte_at(&p, &u, &tolerances(&common))?;
            if common.json {
                let sols: Vec<_> = report
                    .outcome
                    .solutions
                    .iter()
                    .map(|s| {
                        json!({
                            "values": s.values.iter().map(fmt_c64).collect::<Vec<_>>(),
                            "residual": s.residual,
                            "classification": s.degeneracy.to_string(),
                            "multiplicity": s.multiplicity,
                            "family": s.family,
                        })
                    })
                    .collect();
                emit(
                    &common,
                    &hash,
                    "lte",
                    json!({
                        "at": fmt_point(&u),
                        "interior": report.interior,
                        "solutions": sols,
                        "complete": report.outcome.complete,
                        "count": report.count,
                    }),
                );
            } else {
                println!(
                    "leading term system at ({}) [{}]",
                    fmt_point(&u),
                    if report.interior { "interior" } else { "NOT interior" }
                );
                for (i, s) in report.outcome.solutions.iter().enumerate() {
                    println!(
                        "  #{}: ({})  {}  residual {:.2e}{}",
                        i + 1,
                        s.values.iter().map(fmt_c64).collect::<Vec<_>>().join(", "),
                        s.degeneracy,
                        s.residual,
                        if s.family { "  [1-parameter family]" } else { "" }
                    );
                }
                if !report.outcome.complete {
                    println!("  (completeness not guaranteed: multistart fallback was used)");
                }
                println!("count = {}", report.count);
            }
            Ok(())
        }
        Command::Fibers { common, at } => {
            let (p, hash) = load(&common)?;
            let tol = tolerances(&common);
            if p.dim <= 2 && at.is_empty() {
                let betti = count_vs_betti(&p, &tol)?;
                let count = &betti.count;
                if common.json {
                    let fibers: Vec<_> = count
                        .fibers
                        .iter()
                        .map(|f| {
                            json!({
                                "u": fmt_point(&f.u),
                                "interior": f.interior,
                                "count": f.count,
                                "family": f.outcome.has_family,
                                "profile": f.outcome.solutions.iter().map(|s| s.degeneracy.to_string()).collect::<Vec<_>>(),
                            })
                        })
                        .collect();
                    emit(
                        &common,
                        &hash,
                        "fibers",
                        json!({
                            "fibers": fibers,
                            "interior_total": count.interior_total,
                            "betti_sum": count.betti_sum,
                            "count_equals_betti": betti.pass,
                            "degenerate_strata": count.strata.iter().map(|s| json!({
                                "facets": [s.facet_pair.0 + 1, s.facet_pair.1 + 1],
                                "witness": fmt_point(&s.witness),
                            })).collect::<Vec<_>>(),
                        }),
                    );
                } else {
                    println!("candidate fibers of {}:", p.name);
                    for f in &count.fibers {
                        println!(
                            "  u = ({})  count {}  [{}]{}",
                            fmt_point(&f.u),
                            f.count,
                            if f.interior { "interior" } else { "outside P" },
                            if f.outcome.has_family { "  degenerate family" } else { "" }
                        );
                    }
                    for s in &count.strata {
                        println!(
                            "  segment l_{} = l_{}: degenerate family (witness ({}))",
                            s.facet_pair.0 + 1,
                            s.facet_pair.1 + 1,
                            fmt_point(&s.witness)
                        );
                    }
                    println!(
                        "interior total {} vs Betti sum {}: {}",
                        count.interior_total,
                        count.betti_sum,
                        if betti.pass { "MATCH" } else { "MISMATCH" }
                    );
                }
            } else {
                if at.is_empty() {
                    return Err(Error::DimensionUnsupported(p.dim));
                }
                let mut rows = Vec::new();
                for raw in &at {
                    let u = parse_point(raw, p.dim)?;
                    rows.push(lte_at(&p, &u, &tol)?);
                }
                if common.json {
                    let fibers: Vec<_> = rows
                        .iter()
                        .map(|f| {
                            json!({
                                "u": fmt_point(&f.u),
                                "interior": f.interior,
                                "count": f.count,
                                "complete": f.outcome.complete,
                            })
                        })
                        .collect();
                    emit(&common, &hash, "fibers", json!({"fibers": fibers}));
                } else {
                    for f in &rows {
                        println!(
                            "u = ({})  count {}  [{}]{}",
                            fmt_point(&f.u),
                            f.count,
                            if f.interior { "interior" } else { "outside P" },
                            if f.outcome.complete { "" } else { "  (multistart; completeness unknown)" }
                        );
                    }
                }
            }
            Ok(())
        }
        Command::Lift { common, at, order } => {
            let (p, hash) = load(&common)?;
            let tol = tolerances(&common);
            let u = require_at(&p, parse_at(&at.at, p.dim)?)?;
            let levels = level_structure_at(&p, &u)?;
            let basis = integer_basis(&p, &levels)?;
            let sys = leading_term_system(&p, &u, &levels, &basis, &[])?;
            let order = match order {
                Some(s) => Exponent::new(parse_rat(&s)?),
                None => Exponent::new(default_cap(&sys)),
            };
            let outcome = solve_full(&sys, &tol)?;
            let mut rows = Vec::new();
            for sol in outcome
                .solutions
                .iter()
                .filter(|s| s.degeneracy == Degeneracy::Strong)
            {
                // exact arithmetic when the leading terms are recognizable
                let exact = recognize_solution(sol, 64)
                    .and_then(|exact| lift_exact(&sys, &exact, &order).ok());
                let (mode, series, terms, value, resval) = match exact {
                    Some(lp) => (
                        "exact",
                        lp.y.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
                        lp.y.iter().map(json_series).collect::<Vec<_>>(),
                        lp.critical_value.to_string(),
                        lp.residual_valuation.to_string(),
                    ),
                    None => {
                        let lp = lift_numeric(&sys, sol, &order)?;
                        (
                            "float",
                            lp.y.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
                            lp.y.iter().map(json_series).collect::<Vec<_>>(),
                            lp.critical_value.to_string(),
                            lp.residual_valuation.to_string(),
                        )
                    }
                };
                rows.push((
                    sol.values.iter().map(fmt_c64).collect::<Vec<_>>(),
                    mode,
                    series,
                    terms,
                    value,
                    resval,
                ));
            }
            if common.json {
                let branches: Vec<_> = rows
                    .iter()
                    .map(|(leading, mode, series, terms, value, resval)| {
                        json!({
                            "leading": leading,
                            "mode": mode,
                            "series": series,
                            "terms": terms,
                            "critical_value": value,
                            "residual_valuation": resval,
                        })
                    })
                    .collect();
                emit(
                    &common,
                    &hash,
                    "lift",
                    json!({"at": fmt_point(&u), "order": order.to_string(), "branches": branches}),
                );
            } else {
                println!(
                    "lifting {} strong branch(es) at ({}) to order {}",
                    rows.len(),
                    fmt_point(&u),
                    order
                );
                for (leading, mode, series, _, value, resval) in rows {
                    println!("branch ({}) [{} mode]:", leading.join(", "), mode);
                    for (i, s) in series.iter().enumerate() {
                        println!("  y{} = {}", i + 1, s);
                    }
                    println!("  PO_0(y) = {value}");
                    println!("  gradient valuation >= {resval} (verified by substitution)");
                }
            }
            Ok(())
        }
        Command::Threshold { common, at, cap } => {
            let (p, hash) = load(&common)?;
            let u = require_at(&p, parse_at(&at.at, p.dim)?)?;
            let cap = cap.map(|s| parse_rat(&s)).transpose()?;
            let report = po_threshold(&p, &u, cap, &tolerances(&common))?;
            if common.json {
                let outcome = match &report.outcome {
                    ThresholdOutcome::Obstructed { level, s_value } => {
                        json!({"kind": "obstructed", "level": level + 1, "value": fmt_rat(s_value)})
                    }
                    ThresholdOutcome::AtLeastCap { cap } => {
                        json!({"kind": "at-least-cap", "cap": fmt_rat(cap)})
                    }
                    ThresholdOutcome::LowerBoundOnly { level, s_value } => {
                        json!({"kind": "lower-bound-only", "level": level + 1, "value": fmt_rat(s_value)})
                    }
                };
                emit(&common, &hash, "threshold", json!({"at": fmt_point(&u), "outcome": outcome}));
            } else {
                println!("PO-threshold at ({}): {}", fmt_point(&u), report.outcome);
            }
            Ok(())
        }
        Command::Hf { common, at, y, cap } => {
            let (p, hash) = load(&common)?;
            let u = require_at(&p, parse_at(&at.at, p.dim)?)?;
            let cap = Exponent::new(parse_rat(&cap)?);
            let yvals = parse_y(&y, p.dim, &cap)?;
            let report = hf_t2(&p, &u, &yvals, &cap)?;
            let disp = displacement_report(&p, &u, None, &tolerances(&common))?;
            if common.json {
                emit(
                    &common,
                    &hash,
                    "hf",
                    json!({
                        "at": fmt_point(&u),
                        "free_rank": report.free_rank,
                        "torsion": report.torsion.iter().map(|e| e.to_string()).collect::<Vec<_>>(),
                        "cap": report.cap.to_string(),
                        "gradient_valuations": report.gradient_valuations.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
                        "energy_bound": disp.energy_bound.as_ref().map(fmt_rat),
                        "balanced_to_cap": disp.balanced_to_cap,
                        "intersection_bound": disp.intersection_bound,
                    }),
                );
            } else {
                println!("{report}");
                if report.free_rank == 0 {
                    let pts = 2 * report.torsion.len();
                    let bound = report.torsion.iter().min().unwrap();
                    println!(
                        "#(ψ(L)∩L) ≥ {pts} for transversal ψ with ‖ψ‖ < 2π·{bound}"
                    );
                }
                println!("{disp}");
            }
            Ok(())
        }
        Command::QhCheck { common, at } => {
            let (p, hash) = load(&common)?;
            let u = match parse_at(&at.at, p.dim)? {
                Some(u) => u,
                None => p.interior_point(),
            };
            let (qsr, linear) = build_relations(&p)?;
            let report = verify_psi(&p, &u)?;
            if common.json {
                emit(
                    &common,
                    &hash,
                    "qh-check",
                    json!({
                        "at": fmt_point(&u),
                        "qsr": qsr.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
                        "linear": linear.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
                        "qsr_checked": report.qsr_checked,
                        "linear_checked": report.linear_checked,
                        "verdict": "PASS",
                    }),
                );
            } else {
                println!("quantum Stanley-Reisner relations of {}:", p.name);
                for r in &qsr {
                    println!("  {r}");
                }
                println!("linear relations:");
                for r in &linear {
                    println!("  {r}");
                }
                println!(
                    "substitution z_i -> zbar_i(u) at ({}): PASS ({} + {} identities exact)",
                    fmt_point(&u),
                    report.qsr_checked,
                    report.linear_checked
                );
            }
            Ok(())
        }
    }
}

fn load(common: &Common) -> Result<(MomentPolytope, String), Error> {
    let text = std::fs::read_to_string(&common.file)
        .map_err(|e| Error::Malformed(format!("{}: {e}", common.file.display())))?;
    let mut overrides = Vec::new();
    for raw in &common.params {
        let (k, v) = raw
            .split_once('=')
            .ok_or_else(|| Error::Malformed(format!("--param needs NAME=P/Q, got {raw:?}")))?;
        overrides.push((k.trim().to_string(), parse_rat(v)?));
    }
    let p = parse_polytope(&text, &overrides)?;
    Ok((p, fnv1a(text.as_bytes())))
}

fn tolerances(common: &Common) -> Tolerances {
    Tolerances {
        seed: common.seed,
        ..Tolerances::default()
    }
}

/// Deterministic content hash for run reports (FNV-1a, 64 bit).
fn fnv1a(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

fn emit(common: &Common, hash: &str, command: &str, payload: serde_json::Value) {
    let report = json!({
        "command": command,
        "inputs": {
            "polytope_hash": hash,
            "params": common.params,
            "seed": common.seed,
        },
        "tool_version": env!("CARGO_PKG_VERSION"),
        "output": payload,
    });
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
}

fn parse_at(at: &Option<String>, dim: usize) -> Result<Option<QVec>, Error> {
    match at {
        None => Ok(None),
        Some(s) => Ok(Some(parse_point(s, dim)?)),
    }
}

fn parse_point(s: &str, dim: usize) -> Result<QVec, Error> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != dim {
        return Err(Error::Malformed(format!(
            "point {s:?} has {} coordinates, expected {dim}",
            parts.len()
        )));
    }
    parts.iter().map(|p| parse_rat(p)).collect()
}

fn require_at(p: &MomentPolytope, at: Option<QVec>) -> Result<QVec, Error> {
    match at {
        Some(u) => Ok(u),
        None => Ok(run_filtration(p)?.center),
    }
}

/// Parses y coordinates: each "a" or "a+bi" / "a-bi" with rational a, b.
fn parse_y(s: &str, dim: usize, cap: &Exponent) -> Result<Vec<NovikovSeries<GaussQ>>, Error> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != dim {
        return Err(Error::Malformed(format!(
            "y {s:?} has {} coordinates, expected {dim}",
            parts.len()
        )));
    }
    let one = Rat::from_integer(1.into());
    let trunc = Order::Finite(Exponent::new(cap.rat() + &one));
    parts
        .iter()
        .map(|raw| {
            let raw = raw.trim();
            let (re, im) = match raw.strip_suffix('i') {
                Some(body) => match body.rfind(['+', '-']).filter(|&i| i > 0) {
                    Some(idx) => {
                        let (r, rest) = body.split_at(idx);
                        let imag = if rest == "+" {
                            one.clone()
                        } else if rest == "-" {
                            -one.clone()
                        } else {
                            parse_rat(rest)?
                        };
                        (parse_rat(r)?, imag)
                    }
                    None => {
                        let imag = if body.is_empty() || body == "+" {
                            one.clone()
                        } else if body == "-" {
                            -one.clone()
                        } else {
                            parse_rat(body)?
                        };
                        (Rat::from_integer(0.into()), imag)
                    }
                },
                None => (parse_rat(raw)?, Rat::from_integer(0.into())),
            };
            Ok(NovikovSeries::constant(GaussQ::new(re, im)).truncate_to(trunc.clone()))
        })
        .collect()
}

fn fmt_point(u: &QVec) -> String {
    u.iter().map(fmt_rat).collect::<Vec<_>>().join(",")
}

/// Series as an ordered term list: exponents exact, coefficients rendered
/// per mode ("p/q" strings exactly, [re, im] numbers for float data).
fn json_series<C: Coeff>(s: &NovikovSeries<C>) -> serde_json::Value {
    let terms: Vec<_> = s
        .terms()
        .map(|(e, c)| {
            let approx = c.approx();
            let coeff = match C::MODE {
                toric_potential::scalar::CoeffMode::Exact => json!(c.fmt_coeff()),
                toric_potential::scalar::CoeffMode::Float => json!([approx.re, approx.im]),
            };
            json!({"t": e.to_string(), "c": coeff})
        })
        .collect();
    json!({"terms": terms, "truncation": s.trunc().to_string()})
}

fn fmt_c64(z: &C64) -> String {
    z.fmt_coeff()
}

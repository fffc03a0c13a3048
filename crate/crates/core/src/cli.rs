//! Command-line front end. Exit codes: 0 success, 1 property check failed,
//! 2 usage or input error.

use std::f64::consts::{E, PI};
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::algebra::{EvolutionAlgebra, StructureMatrix};
use crate::baric;
use crate::chains::{self, build_family, unit_exp_triangular, ChainFamilySpec, NumericLimit};
use crate::error::{CeaError, Result};
use crate::idempotent;
use crate::iso2d::{self, RotSign};
use crate::nilpotent;
use crate::time_fn::TimeFunction;
use crate::transitions::{self, Controller, Property};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Reals accept `e` and `pi` besides plain numbers.
fn parse_real(s: &str) -> std::result::Result<f64, String> {
    let v = match s {
        "e" => E,
        "-e" => -E,
        "pi" => PI,
        "-pi" => -PI,
        "2pi" => 2.0 * PI,
        _ => s.parse::<f64>().map_err(|e| format!("{s:?} is not a number: {e}"))?,
    };
    if !v.is_finite() {
        return Err(format!("{s:?} is not finite"));
    }
    Ok(v)
}

fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',').map(|x| parse_real(x.trim())).collect()
}

/// `exp:L`, `linear:C`, `const:C`, `sin`, `cos`, `tan`, or
/// `piecewise:B1,B2,..:V0,V1,..`.
pub fn parse_time_function(s: &str) -> std::result::Result<TimeFunction, String> {
    let mut parts = s.splitn(3, ':');
    let kind = parts.next().unwrap_or_default();
    let arg = parts.next();
    let one = |a: Option<&str>| -> std::result::Result<f64, String> {
        parse_real(a.ok_or_else(|| format!("{kind} needs a parameter, e.g. {kind}:2"))?)
    };
    let f = match kind {
        "exp" => TimeFunction::exp(one(arg)?),
        "linear" => TimeFunction::linear(one(arg)?),
        "const" => TimeFunction::constant(one(arg)?),
        "sin" => TimeFunction::Sin,
        "cos" => TimeFunction::Cos,
        "tan" => TimeFunction::Tan,
        "piecewise" => {
            let b = arg.ok_or("piecewise needs breakpoints and values")?;
            let v = parts.next().ok_or("piecewise needs values after the breakpoints")?;
            let breaks = if b.is_empty() { Vec::new() } else { parse_list(b)? };
            TimeFunction::piecewise_const(breaks, parse_list(v)?).map_err(|e| e.to_string())?
        }
        other => return Err(format!("unknown time function {other:?}")),
    };
    f.validate().map_err(|e| e.to_string())?;
    Ok(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "cea", version, about = "Chains of evolution algebras: analyses and diagrams")]
pub struct Cli {
    /// Output format [default: json; csv for diagram]
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write the output to this file instead of standard output
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for sampled checks
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Tolerance for property checks
    #[arg(long, global = true, default_value = "1e-9", value_parser = parse_real)]
    tol: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct FamilyArgs {
    /// example1, example2, two-state, triangular, rotation, constant-row, theorem5
    #[arg(long)]
    family: Option<String>,
    /// JSON family document {"variant": ..., "params": {...}}
    #[arg(long, conflicts_with = "family")]
    family_file: Option<PathBuf>,
    /// Rate of example1 [default: 1]
    #[arg(long = "A", value_parser = parse_real, allow_hyphen_values = true)]
    rate: Option<f64>,
    #[arg(long, value_parser = parse_real, allow_hyphen_values = true)]
    lambda: Option<f64>,
    #[arg(long, value_parser = parse_real, allow_hyphen_values = true)]
    mu: Option<f64>,
    /// Time function, e.g. exp:2, linear:0.5, const:1, sin, tan, piecewise:1,2:0,1,0
    #[arg(long, value_parser = parse_time_function)]
    phi: Option<TimeFunction>,
    #[arg(long, value_parser = parse_time_function)]
    psi: Option<TimeFunction>,
    #[arg(long, value_parser = parse_time_function)]
    g: Option<TimeFunction>,
    /// Dimension of constant-row
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AnalyzeProperty {
    Baric,
    Nilpotent,
    Trivial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DiagramProperty {
    Baric,
    NilpotentUnique,
    IdempotentCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Analysis {
    P1,
    Idempotent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ControllerKind {
    Tan,
    Sin,
    Explinear,
    Const,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check M(s,t) = M(s,tau) M(tau,t) on seeded random triples
    VerifyCk {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value = "5", value_parser = parse_real)]
        tmax: f64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Baric, nilpotent or triviality analysis of one algebra
    Analyze {
        /// Matrix file: n on the first line, then n rows
        #[arg(long, conflicts_with_all = ["family", "family_file"])]
        matrix: Option<PathBuf>,
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value = "0", value_parser = parse_real)]
        s: f64,
        #[arg(long, value_parser = parse_real)]
        t: Option<f64>,
        #[arg(long, value_enum)]
        property: AnalyzeProperty,
    },
    /// Idempotents of the two-dimensional homogeneous family
    Idempotents {
        #[arg(long, value_parser = parse_real)]
        lambda: f64,
        #[arg(long, value_parser = parse_real)]
        mu: f64,
        #[arg(long, value_parser = parse_real)]
        t: f64,
        /// Also run the Newton grid search (radius 10, step 0.05)
        #[arg(long)]
        oracle: bool,
    },
    /// Critical times of the exponential-linear controller or of the idempotent count
    CriticalTimes {
        #[arg(long, value_enum)]
        analysis: Analysis,
        #[arg(long, value_parser = parse_real, allow_hyphen_values = true)]
        lambda: f64,
        #[arg(long, value_parser = parse_real, allow_hyphen_values = true)]
        c: Option<f64>,
        #[arg(long, value_parser = parse_real, allow_hyphen_values = true)]
        mu: Option<f64>,
    },
    /// Classify every cell of the time triangle
    Diagram {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, value_enum)]
        property: DiagramProperty,
        #[arg(long, value_parser = parse_real)]
        tmax: f64,
        #[arg(long)]
        grid: usize,
        /// Baric tolerance for cell centers
        #[arg(long, default_value = "1e-6", value_parser = parse_real)]
        eps: f64,
    },
    /// Long-time limit of a family
    Limits {
        #[command(flatten)]
        family: FamilyArgs,
        /// Evaluate M(s, tprobe) numerically
        #[arg(long)]
        numeric: bool,
        #[arg(long, default_value = "60", value_parser = parse_real)]
        tprobe: f64,
        #[arg(long, default_value = "1e12", value_parser = parse_real)]
        bound: f64,
    },
    /// Isomorphism of the rotation algebras E_a and E_b
    Iso {
        #[arg(long, value_parser = parse_real, allow_hyphen_values = true)]
        a: f64,
        #[arg(long, value_parser = parse_real, allow_hyphen_values = true)]
        b: f64,
        #[arg(long, default_value = "+", allow_hyphen_values = true)]
        sign: String,
    },
    /// Smallest n with |cos n - a| <= tol
    Density {
        #[arg(long, value_parser = parse_real, allow_hyphen_values = true)]
        a: f64,
        #[arg(long = "nmax", default_value_t = 1_000_000)]
        n_max: u64,
    },
    /// Times t with theta(t) = theta(s)
    BaricTimes {
        #[arg(long, value_enum)]
        controller: ControllerKind,
        #[arg(long, value_parser = parse_real, allow_hyphen_values = true)]
        lambda: Option<f64>,
        #[arg(long, value_parser = parse_real, allow_hyphen_values = true)]
        c: Option<f64>,
        #[arg(long, value_parser = parse_real)]
        s: f64,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], value_parser = parse_real, allow_hyphen_values = true)]
        window: Vec<f64>,
    },
}

fn need<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| CeaError::invalid(format!("missing required flag --{flag}")))
}

fn family_spec(a: &FamilyArgs) -> Result<ChainFamilySpec> {
    if let Some(path) = &a.family_file {
        let text = fs::read_to_string(path)
            .map_err(|e| CeaError::invalid(format!("--family-file {}: {e}", path.display())))?;
        return serde_json::from_str(&text)
            .map_err(|e| CeaError::Parse(format!("--family-file {}: {e}", path.display())));
    }
    let name = need(a.family.as_deref(), "family (or --family-file)")?;
    let spec = match name.replace('-', "_").as_str() {
        "example1" => ChainFamilySpec::Example1 {
            a: a.rate.unwrap_or(1.0),
        },
        "example2" => ChainFamilySpec::Example2 {
            lambda: need(a.lambda, "lambda")?,
            mu: need(a.mu, "mu")?,
        },
        "two_state" => ChainFamilySpec::TwoState {
            phi: need(a.phi.clone(), "phi")?,
            psi: need(a.psi.clone(), "psi")?,
        },
        "triangular" => unit_exp_triangular(),
        "rotation" => ChainFamilySpec::Rotation {},
        "constant_row" => ChainFamilySpec::ConstantRow {
            phi: need(a.phi.clone(), "phi")?,
            n: need(a.n, "n")?,
        },
        "theorem5" => ChainFamilySpec::Theorem5 {
            psi: need(a.psi.clone(), "psi")?,
            g: need(a.g.clone(), "g")?,
        },
        other => return Err(CeaError::invalid(format!("--family: unknown family {other:?}"))),
    };
    Ok(spec)
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

enum Output {
    Json(Value),
    Csv(String),
}

struct Outcome {
    output: Output,
    pass: bool,
}

fn ok(v: Value) -> Result<Outcome> {
    Ok(Outcome {
        output: Output::Json(v),
        pass: true,
    })
}

fn execute(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::VerifyCk {
            family,
            tmax,
            samples,
        } => {
            let spec = family_spec(family)?;
            let fam = build_family(spec.clone())?;
            let r = chains::verify_ck(&fam, *tmax, *samples, cli.seed, cli.tol)?;
            let mut v = to_value(&r);
            v["family"] = to_value(&spec);
            Ok(Outcome {
                pass: r.pass,
                output: Output::Json(v),
            })
        }
        Command::Analyze {
            matrix,
            family,
            s,
            t,
            property,
        } => {
            let (m, mut v) = match matrix {
                Some(path) => {
                    let text = fs::read_to_string(path).map_err(|e| {
                        CeaError::invalid(format!("--matrix {}: {e}", path.display()))
                    })?;
                    (StructureMatrix::parse_text(&text)?, json!({}))
                }
                None => {
                    let spec = family_spec(family)?;
                    let t = need(*t, "t")?;
                    let m = build_family(spec.clone())?.eval(*s, t)?;
                    (m, json!({"family": to_value(&spec), "s": s, "t": t}))
                }
            };
            v["matrix"] = to_value(&m);
            let e = EvolutionAlgebra::new(m);
            match property {
                AnalyzeProperty::Baric => {
                    let ws = baric::weight_functions(&e, cli.tol);
                    v["property"] = json!("baric");
                    v["baric"] = json!(!ws.is_empty());
                    v["weight_functions"] = to_value(&ws);
                }
                AnalyzeProperty::Nilpotent => {
                    v["property"] = json!("nilpotent");
                    v["nilpotent"] = to_value(&nilpotent::nilpotent_analysis(&e, cli.tol));
                }
                AnalyzeProperty::Trivial => {
                    v["property"] = json!("trivial");
                    v["class"] = to_value(&baric::classify_trivial(&e, cli.tol));
                }
            }
            ok(v)
        }
        Command::Idempotents {
            lambda,
            mu,
            t,
            oracle,
        } => {
            let set = idempotent::idempotents_example2(*lambda, *mu, *t)?;
            let mut v = json!({
                "lambda": lambda,
                "mu": mu,
                "t": t,
                "critical_time": idempotent::idempotent_critical_time(*lambda, *mu)?,
                "count": set.len(),
                "points": to_value(&set.points),
            });
            if *oracle {
                let (l, m) = (lambda.powf(*t), mu.powf(*t));
                let (a, b) = (0.5 * (l + m), 0.5 * (l - m));
                let e = EvolutionAlgebra::new(StructureMatrix::from_rows(&[[a, b], [b, a]])?);
                let found = idempotent::idempotent_oracle(&e, 10.0, 0.05, 1e-12)?;
                v["oracle_count"] = json!(found.len());
                v["oracle_points"] = to_value(&found.points);
                v["oracle_agrees"] = json!(found.matches(&set, 1e-8));
            }
            ok(v)
        }
        Command::CriticalTimes {
            analysis,
            lambda,
            c,
            mu,
        } => match analysis {
            Analysis::P1 => {
                let r = transitions::critical_times_p1(*lambda, need(*c, "c")?)?;
                ok(to_value(&r))
            }
            Analysis::Idempotent => {
                let tc = idempotent::idempotent_critical_time(*lambda, need(*mu, "mu")?)?;
                ok(json!({ "t_c": tc }))
            }
        },
        Command::Diagram {
            family,
            property,
            tmax,
            grid,
            eps,
        } => {
            let fam = build_family(family_spec(family)?)?;
            let prop = match property {
                DiagramProperty::Baric => Property::Baric,
                DiagramProperty::NilpotentUnique => Property::NilpotentUnique,
                DiagramProperty::IdempotentCount => Property::IdempotentCount,
            };
            let d = transitions::diagram(&fam, prop, *tmax, *grid, *eps)?;
            if cli.format.unwrap_or(Format::Csv) == Format::Csv {
                return Ok(Outcome {
                    output: Output::Csv(d.to_csv()),
                    pass: true,
                });
            }
            let mut v = to_value(&d);
            if prop == Property::Baric {
                v["baric_fraction"] = json!(transitions::baric_fraction(&d));
            }
            ok(v)
        }
        Command::Limits {
            family,
            numeric,
            tprobe,
            bound,
        } => {
            let spec = family_spec(family)?;
            let mut v = json!({ "family": to_value(&spec) });
            if let ChainFamilySpec::Example2 { lambda, mu } = spec {
                let lim = chains::limit_classify_example2(lambda, mu)?;
                v["limit"] = to_value(&lim);
                v["limit_matrix"] = to_value(&lim.matrix());
            } else if !numeric {
                return Err(CeaError::invalid(
                    "closed-form limits exist for example2 only; pass --numeric",
                ));
            }
            if *numeric {
                let fam = build_family(spec)?;
                let r = chains::numeric_limit(&fam, 0.0, *tprobe, *bound)?;
                v["tprobe"] = json!(tprobe);
                v["numeric"] = match r {
                    NumericLimit::Finite(m) => json!({"kind": "finite", "matrix": to_value(&m)}),
                    NumericLimit::Divergent => json!({"kind": "divergent"}),
                };
            }
            ok(v)
        }
        Command::Iso { a, b, sign } => {
            let sign: RotSign = sign.parse()?;
            let r = iso2d::iso_rotation(*a, *b, sign)?;
            ok(json!({"a": a, "b": b, "sign": to_value(&sign), "isomorphic": r}))
        }
        Command::Density { a, n_max } => {
            let hit = iso2d::density_search(*a, cli.tol, *n_max)?;
            let mut v = json!({"a": a, "tol": cli.tol, "n_max": n_max, "found": hit.is_some()});
            if let Some(h) = hit {
                v["n"] = json!(h.n);
                v["sign"] = to_value(&h.sign);
                v["cos_n"] = json!(h.cos_n);
            }
            Ok(Outcome {
                pass: hit.is_some(),
                output: Output::Json(v),
            })
        }
        Command::BaricTimes {
            controller,
            lambda,
            c,
            s,
            window,
        } => {
            let ctl = match controller {
                ControllerKind::Tan => Controller::Tan,
                ControllerKind::Sin => Controller::Sin,
                ControllerKind::Explinear => Controller::ExpLinear {
                    lambda: need(*lambda, "lambda")?,
                    c: need(*c, "c")?,
                },
                ControllerKind::Const => Controller::Const {
                    c: c.unwrap_or(1.0),
                },
            };
            let r = transitions::baric_times(&ctl, *s, (window[0], window[1]), cli.tol)?;
            let mut v = to_value(&r);
            v["controller"] = to_value(&ctl);
            v["s"] = json!(s);
            ok(v)
        }
    }
}

fn render_text(v: &Value) -> String {
    match v {
        Value::Object(map) => {
            let mut out = String::new();
            for (k, x) in map {
                let x = match x {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                out.push_str(&format!("{k}: {x}\n"));
            }
            out
        }
        other => format!("{other}\n"),
    }
}

fn render(cli: &Cli, outcome: &Outcome) -> Result<String> {
    match &outcome.output {
        Output::Csv(s) => Ok(s.clone()),
        Output::Json(v) => match cli.format.unwrap_or(Format::Json) {
            Format::Json => Ok(serde_json::to_string_pretty(v).expect("json") + "\n"),
            Format::Text => Ok(render_text(v)),
            Format::Csv => Err(CeaError::invalid("--format csv is only available for diagram")),
        },
    }
}

/// Runs the command line `argv` (including the program name), writing
/// results to `out` and diagnostics to `err`.
pub fn run_with(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    return EXIT_OK;
                }
                _ => EXIT_USAGE,
            };
            let _ = write!(err, "{}", e.render());
            return code;
        }
    };
    let result = execute(&cli).and_then(|o| render(&cli, &o).map(|s| (s, o.pass)));
    let (text, pass) = match result {
        Ok(x) => x,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    match &cli.out {
        Some(path) => {
            if let Err(e) = fs::write(path, &text) {
                let _ = writeln!(err, "error: --out {}: {e}", path.display());
                return EXIT_USAGE;
            }
        }
        None => {
            if out.write_all(text.as_bytes()).is_err() {
                return EXIT_USAGE;
            }
        }
    }
    if pass {
        EXIT_OK
    } else {
        EXIT_FAIL
    }
}

pub fn run(argv: &[String]) -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

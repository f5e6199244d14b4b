use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use twistor_core::bivector::curvature_operator;
use twistor_core::builtin::Builtin;
use twistor_core::geometry::{curvature_summary, MetricSpec};
use twistor_core::parahermitian::{structure_tests, verify_triple, HyperTriple};
use twistor_core::petean::{assemble_atlas, solve_dbar_constant, verify_coordinates, verify_petean, PeteanSpec};
use twistor_core::report::{Check, Report};
use twistor_core::sampling::{sample_points, Sampler};
use twistor_core::selftest;
use twistor_core::specfile::MetricSpecFile;
use twistor_core::twistor::{classify, ClassifyOptions, ORACLE_TOLERANCE};
use twistor_core::twistor::{CoordinateOracle, Structure, TwistorContext, TwistorTangent};
use twistor_core::{Error, Result};

const EXIT_FAIL: u8 = 1;
const EXIT_INPUT: u8 = 2;

/// Verification engine for neutral four-manifolds and their hyperbolic
/// twistor spaces.
#[derive(Parser)]
#[command(name = "twistor", version)]
struct Cli {
    #[command(flatten)]
    source: SourceArgs,
    /// Random samples per check.
    #[arg(long, global = true, default_value_t = 100)]
    samples: usize,
    /// Seed for the sampling RNG
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Emit the report as JSON.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SourceArgs {
    /// Metric spec file (TOML).
    #[arg(long, global = true, conflicts_with = "builtin")]
    metric: Option<PathBuf>,
    /// Builtin metric: flat, constcurv:<k>, petean:<f>, perturbed-nonsd.
    #[arg(long, global = true)]
    builtin: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Curvature summary and SO(2,2) decomposition.
    Curvature,
    /// Classification of (J1, h_t) and (J2, h_t).
    Classify {
        /// Nonzero parameter of the metric h_t on the twistor space
        #[arg(long, allow_hyphen_values = true)]
        t: f64,
        /// Cross-check verdicts with the coordinate oracles.
        #[arg(long)]
        oracle: bool,
        /// Real dimension of the base manifold.
        #[arg(long, default_value_t = 4)]
        dim: usize,
    },
    /// Closed-form twistor tensors against independent computations.
    TwistorCheck {
        /// Nonzero parameter of the metric h_t on the twistor space
        #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
        t: f64,
        /// Compare against the coordinate oracles.
        #[arg(long)]
        oracle: bool,
    },
    /// Hyperhermitian and hyperkaehler tests for the metric's triple.
    Hyperhermitian,
    /// Petean metric suite for g = f(dx1² + dx2²) + 2dx1dx3 + 2dx2dx4.
    Petean {
        #[arg(long)]
        f: String,
    },
    /// Full acceptance suite.
    Selftest,
}

struct Loaded {
    metric: MetricSpec,
    triple: HyperTriple,
    text: String,
}

fn load(source: &SourceArgs) -> Result<Loaded> {
    if let Some(path) = &source.metric {
        let file = MetricSpecFile::read(path)?;
        return Ok(Loaded {
            metric: file.metric,
            triple: file.triple,
            text: file.text,
        });
    }
    let Some(name) = &source.builtin else {
        return Err(Error::InvalidParameter(
            "one of --metric or --builtin is required".into(),
        ));
    };
    let builtin = Builtin::parse(name)?;
    let triple = match &builtin {
        Builtin::Petean(f) => PeteanSpec::parse(f)?.triple(),
        _ => HyperTriple::Asd,
    };
    Ok(Loaded {
        metric: builtin.metric()?,
        triple,
        text: builtin.name(),
    })
}

fn curvature(loaded: &Loaded, samples: usize, seed: u64) -> Result<Report> {
    let spec = &loaded.metric;
    let mut report = Report::new(&loaded.text, seed);
    let (mut tau_min, mut tau_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut einstein, mut w_plus, mut w_minus, mut b) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut reassembly, mut tau_agreement) = (0.0f64, 0.0f64);
    for p in sample_points(&spec.bounds, samples, seed)? {
        let summary = curvature_summary(spec, &p)?;
        let op = curvature_operator(spec, &p)?;
        tau_min = tau_min.min(summary.tau);
        tau_max = tau_max.max(summary.tau);
        einstein = einstein.max(summary.einstein_residual);
        w_plus = w_plus.max(op.w_plus_norm());
        w_minus = w_minus.max(op.w_minus_norm());
        b = b.max(op.b_norm());
        let scale = 1.0 + op.matrix.amax();
        reassembly = reassembly.max((op.reassemble() - op.matrix).amax() / scale);
        tau_agreement = tau_agreement.max((op.tau() - summary.tau).abs() / (1.0 + summary.tau.abs()));
    }
    report.push(Check::at_most(
        "decomposition_reassembly",
        reassembly,
        1e-10,
        "R = tau/6 I + B + W+ + W-",
        samples,
    ));
    report.push(Check::at_most(
        "tau_ricci_vs_operator",
        tau_agreement,
        1e-8,
        "Ricci contraction and operator trace give the same tau",
        samples,
    ));
    report.value("tau_min", tau_min);
    report.value("tau_max", tau_max);
    report.value("einstein_residual", einstein);
    report.value("w_plus", w_plus);
    report.value("w_minus", w_minus);
    report.value("b", b);
    Ok(report)
}

fn classification(loaded: &Loaded, options: &ClassifyOptions) -> Result<Report> {
    let r = classify(&loaded.metric, options)?;
    let mut report = Report::new(&loaded.text, options.seed);
    report.extend(r.checks());
    report.value("t", r.t);
    report.value("tau_min", r.tau_min);
    report.value("tau_max", r.tau_max);
    report.value("einstein_residual", r.einstein_residual);
    report.value("sd_residual", r.sd_residual);
    for (name, verdict, _) in r.verdicts() {
        report.value(name, verdict.holds);
    }
    Ok(report)
}

fn twistor_check(loaded: &Loaded, t: f64, oracle: bool, samples: usize, seed: u64) -> Result<Report> {
    let spec = &loaded.metric;
    let mut report = Report::new(&loaded.text, seed);
    let mut s = Sampler::new(seed.wrapping_add(1));
    let (mut n_err, mut d_err, mut cyclic_err, mut weingarten_err) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut delta, mut w_minus) = (0.0f64, 0.0f64);
    for (i, p) in sample_points(&spec.bounds, samples, seed)?.iter().enumerate() {
        let k = if i % 2 == 0 { Structure::J1 } else { Structure::J2 };
        let ctx = TwistorContext::at(spec, p)?;
        let y = s.fiber();
        let mut tangent = || TwistorTangent::new(s.vector(), s.fiber_tangent(&y));
        let (a, b, c) = (tangent(), tangent(), tangent());
        if oracle {
            let o = CoordinateOracle::new(spec, ctx.plan().clone(), k, t)?;
            let (n, d) = o.evaluate(&ctx, &y, &a, &b, &c)?;
            n_err = n_err.max(ctx.nijenhuis(k, &y, &a, &b).sub(&n).norm());
            d_err = d_err.max((ctx.d_omega(k, t, &a, &b, &c)? - d).abs());
        }
        let (ha, hb) = (TwistorTangent::horizontal(a.x), TwistorTangent::horizontal(b.x));
        let cyclic = ctx.nabla_omega_hhv(k, t, &y, &a.x, &b.x, &c.v) - ctx.nabla_omega_hhv(k, t, &y, &b.x, &a.x, &c.v)
            + ctx.nabla_omega_vhh(t, &y, &c.v, &a.x, &b.x);
        let direct = ctx.d_omega(k, t, &ha, &hb, &TwistorTangent::vertical(c.v))?;
        cyclic_err = cyclic_err.max((cyclic - direct).abs() / (1.0 + direct.abs()));
        let w = ctx.weingarten(t, &a)?.sub(&ctx.weingarten_from_connection(t, &y, &a)?);
        weingarten_err = weingarten_err.max(w.norm());
        delta = delta.max(ctx.delta_omega(t, &y, &a)?.abs());
        w_minus = w_minus.max(ctx.curvature.w_minus_norm());
    }
    if oracle {
        report.push(Check::at_most(
            "nijenhuis_formula_vs_oracle",
            n_err,
            ORACLE_TOLERANCE,
            "closed-form N_k vs coordinate brackets",
            samples,
        ));
        report.push(Check::at_most(
            "d_omega_formula_vs_oracle",
            d_err,
            ORACLE_TOLERANCE,
            "closed-form dOmega vs coordinate exterior derivative",
            samples,
        ));
    }
    report.push(Check::at_most(
        "nabla_omega_cyclic_sum",
        cyclic_err,
        1e-8,
        "cyclic sum of nabla Omega equals dOmega",
        samples,
    ));
    report.push(Check::at_most(
        "weingarten",
        weingarten_err,
        1e-8,
        "A_t = (sqrt|t|/t) vertical projection",
        samples,
    ));
    let tol = 1e-8;
    report.push(Check::expect(
        "delta_omega_vs_w_minus",
        (delta <= tol) == (w_minus <= tol),
        "delta Omega = 0 iff W- = 0",
        samples,
    ));
    report.value("delta_omega_max", delta);
    report.value("w_minus", w_minus);
    report.value("t", t);
    Ok(report)
}

fn hyperhermitian(loaded: &Loaded, samples: usize, seed: u64) -> Result<Report> {
    let spec = &loaded.metric;
    let mut report = Report::new(&loaded.text, seed);
    let algebra = verify_triple(spec, &loaded.triple, samples, seed)?;
    report.push(Check::at_most(
        "triple_algebra",
        algebra.max(),
        1e-8,
        "J1^2 = -1, J2^2 = J3^2 = 1, anticommuting, compatible with g",
        samples,
    ));
    let s = structure_tests(spec, &loaded.triple, samples, seed)?;
    report.extend(s.checks());
    report.value("integrable_all_Jy", s.integrable_all_jy());
    report.value("hyperkahler", s.hyperkahler());
    report.value("p_holomorphic_J1", s.p_holomorphic_j1());
    report.value("p_antiholomorphic_J2", s.p_antiholomorphic_j2());
    report.value("integrable_residual", s.integrable_residual);
    report.value("hyperkahler_residual", s.hyperkahler_residual);
    Ok(report)
}

fn petean(f: &str, samples: usize, seed: u64) -> Result<Report> {
    let fspec = PeteanSpec::parse(f)?;
    let mut report = Report::new(&format!("petean:{f}"), seed);
    let r = verify_petean(&fspec, samples, seed)?;
    report.push(Check::at_most("ricci", r.ricci, 1e-8, "Ricci-flat", samples));
    report.push(Check::at_most("w_minus", r.w_minus, 1e-8, "self-dual", samples));
    report.push(Check::at_most("parallel", r.parallel, 1e-8, "D s_a = 0", samples));
    let c = verify_coordinates(&fspec, samples, seed.wrapping_add(1))?;
    report.push(Check::at_most("cr_G1", c.cr_g1, 1e-10, "G1 is J1-holomorphic", samples));
    report.push(Check::at_most("cr_G2", c.cr_g2, 1e-10, "G2 is J1-holomorphic", samples));
    report.push(Check::at_most(
        "cr_frame_form",
        c.frame_cr,
        1e-10,
        "annihilated by W + iJ1W",
        samples,
    ));
    report.push(Check::at_most(
        "compatibility_identity",
        c.identity,
        1e-8,
        "solvability identity of the dbar system",
        samples,
    ));
    report.push(Check::at_most(
        "displayed_partials",
        c.partials.max(c.closed_forms),
        1e-10,
        "closed-form partials of x1, x2 in z, w",
        samples,
    ));
    if let Ok(constant) = f.trim().parse::<f64>() {
        let h = solve_dbar_constant(constant)?;
        let atlas = assemble_atlas(&fspec, &h, samples, seed.wrapping_add(2))?;
        report.push(Check::at_most(
            "dbar",
            atlas.dbar,
            1e-12,
            "H solves the dbar system",
            samples,
        ));
        report.push(Check::at_most(
            "cr_G3",
            atlas.cr_g3,
            1e-9,
            "G3 is J1-holomorphic",
            samples,
        ));
        report.push(Check::exceeds(
            "jacobian",
            atlas.min_abs_det,
            1e-6,
            "(G1, G2, G3) is a local chart",
            samples,
        ));
    } else {
        report.note("G3 closed form is available only for constant f");
    }
    Ok(report)
}

fn execute(cli: &Cli) -> Result<Report> {
    let (samples, seed) = (cli.samples, cli.seed);
    match &cli.command {
        Command::Curvature => curvature(&load(&cli.source)?, samples, seed),
        Command::Classify { t, oracle, dim } => {
            let options = ClassifyOptions {
                samples,
                seed,
                oracle: *oracle,
                dimension: *dim,
                ..ClassifyOptions::new(*t)
            };
            classification(&load(&cli.source)?, &options)
        }
        Command::TwistorCheck { t, oracle } => twistor_check(&load(&cli.source)?, *t, *oracle, samples, seed),
        Command::Hyperhermitian => hyperhermitian(&load(&cli.source)?, samples, seed),
        Command::Petean { f } => petean(f, samples, seed),
        Command::Selftest => {
            let (report, elapsed) = selftest::run_full(seed)?;
            eprintln!("selftest: {:.2} s per run", elapsed.as_secs_f64());
            Ok(report)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(report) => {
            if cli.json {
                println!("{}", report.to_json());
            } else {
                print!("{}", report.to_text());
            }
            if report.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAIL)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

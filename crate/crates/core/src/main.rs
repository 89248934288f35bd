//! Command-line front door: generate instances, run the extension pipeline,
//! verify batteries, certify surjectivity, and reproduce the counterexample,
//! with machine-readable deterministic reports.
//!
//! Exit codes: 0 all certificates passed; 1 hypothesis failure; 2
//! conclusion-check failure; 64 usage or parse error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use jordan_ext::algebra::{operator_norm, Operator};
use jordan_ext::battery::{equivalence_battery, jordan_battery};
use jordan_ext::counterexample::{
    nonextendability_witness, random_rank1, twist_apply, TwistMap, TwistProfile, R0_SIN,
};
use jordan_ext::extension::{extend_full, phi_on_projection, ExtensionProblem};
use jordan_ext::generators::{random_instance, InstanceBundle};
use jordan_ext::report;
use jordan_ext::sample;
use jordan_ext::surjectivity::certify_jordan_isomorphism;
use jordan_ext::tol::Tolerances;
use jordan_ext::Error;

#[derive(Parser)]
#[command(name = "jordan-ext", about = "Certified extension of projection mappings on block algebras")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// RNG seed for sampling and generation.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of random samples per battery.
    #[arg(long, default_value_t = 500)]
    samples: usize,
    /// Multiplies every documented tolerance.
    #[arg(long = "tolerance-scale", default_value_t = 1.0)]
    tolerance_scale: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a ground-truth instance (U = h J) and write it as JSON.
    Gen {
        #[command(flatten)]
        common: Common,
        #[arg(long = "out")]
        out: PathBuf,
    },
    /// Run the extension pipeline on an instance or problem file.
    Extend {
        #[command(flatten)]
        common: Common,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "out")]
        out: Option<PathBuf>,
    },
    /// Verify the batteries and the generator guarantee on an instance file.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "out")]
        out: Option<PathBuf>,
    },
    /// Extend and certify surjectivity (isomorphism verdict).
    Certify {
        #[command(flatten)]
        common: Common,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "out")]
        out: Option<PathBuf>,
    },
    /// Reproduce the M2 Bloch-twist nonextendability witness.
    Counterexample {
        #[command(flatten)]
        common: Common,
        /// Twist profile: zero, constant:<c>, or sin.
        #[arg(long, default_value = "sin")]
        profile: String,
        #[arg(long = "out")]
        out: Option<PathBuf>,
    },
}

fn config_json(common: &Common, input: Option<&PathBuf>, out: Option<&PathBuf>, profile: Option<&str>) -> Value {
    let mut cfg = json!({
        "seed": common.seed,
        "samples": common.samples,
        "tolerance_scale": common.tolerance_scale,
    });
    if let Some(p) = input {
        cfg["in"] = json!(p.display().to_string());
    }
    if let Some(p) = out {
        cfg["out"] = json!(p.display().to_string());
    }
    if let Some(p) = profile {
        cfg["profile"] = json!(p);
    }
    cfg
}

fn tolerances(common: &Common) -> Result<Tolerances, Error> {
    if common.samples < 1 {
        return Err(Error::Precondition("samples must be >= 1".into()));
    }
    if common.tolerance_scale.is_nan() || common.tolerance_scale <= 0.0 {
        return Err(Error::Precondition("tolerance-scale must be > 0".into()));
    }
    Ok(Tolerances {
        scale: common.tolerance_scale,
    })
}

fn read_file(path: &PathBuf) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn write_output(path: Option<&PathBuf>, text: &str) -> Result<(), Error> {
    if let Some(path) = path {
        std::fs::write(path, text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
    }
    Ok(())
}

/// Either a full instance (with ground truth) or a bare problem.
fn load_problem(path: &PathBuf) -> Result<(ExtensionProblem, Option<InstanceBundle>), Error> {
    let text = read_file(path)?;
    let value = report::parse_value(&text, &path.display().to_string())?;
    let p = path.display().to_string();
    if value.get("ground_truth").is_some() {
        let parsed: report::InstanceJson = report::from_value(value, &p)?;
        let bundle = report::instance_from_json(&parsed, &p)?;
        Ok((bundle.problem.clone(), Some(bundle)))
    } else {
        let parsed: report::ProblemJson = report::from_value(value, &p)?;
        Ok((report::problem_from_json(&parsed, &p)?, None))
    }
}

fn finish(
    command: &str,
    config: Value,
    reports: Vec<Value>,
    overall: bool,
    out: Option<&PathBuf>,
    exit_on_fail: u8,
) -> Result<u8, Error> {
    let doc = json!({
        "command": command,
        "config": config,
        "reports": reports,
        "overall": overall,
    });
    let text = report::render_json(&doc)?;
    write_output(out, &text)?;
    println!(
        "{command}: {}",
        if overall { "all checks passed" } else { "CHECK FAILURES (see report)" }
    );
    Ok(if overall { 0 } else { exit_on_fail })
}

fn cmd_gen(common: &Common, out: &PathBuf) -> Result<u8, Error> {
    tolerances(common)?;
    let bundle = random_instance(common.seed)?;
    let text = report::render_json(&report::instance_to_json(&bundle))?;
    write_output(Some(out), &text)?;
    println!(
        "gen: seed {} -> source dim {}, target dim {}, written to {}",
        common.seed,
        bundle.problem.source().total_dim(),
        bundle.problem.target().total_dim(),
        out.display()
    );
    Ok(0)
}

fn cmd_extend(common: &Common, input: &PathBuf, out: Option<&PathBuf>) -> Result<u8, Error> {
    let tols = tolerances(common)?;
    let (problem, _) = load_problem(input)?;
    let config = config_json(common, Some(input), out, None);
    match extend_full(&problem, common.samples, common.seed, &tols) {
        Ok(result) => {
            for c in &result.certificates {
                println!(
                    "  [{}] {}: residual {:.3e} (tol {:.3e})",
                    if c.passed { "ok" } else { "FAIL" },
                    c.name,
                    c.residual,
                    c.tolerance
                );
            }
            let overall = result.all_passed();
            let reports = vec![json!({
                "kind": "extension_result",
                "result": report::extension_result_to_json(&result),
            })];
            finish("extend", config, reports, overall, out, 2)
        }
        Err(Error::Hypothesis {
            name,
            residual,
            tolerance,
            context,
        }) => {
            println!("  [FAIL] hypothesis {name}: residual {residual:.3e} (tol {tolerance:.3e}) [{context}]");
            let reports = vec![json!({
                "kind": "hypothesis_failure",
                "name": name,
                "residual": residual,
                "tolerance": tolerance,
                "context": context,
            })];
            finish("extend", config, reports, false, out, 1)
        }
        Err(e) => Err(e),
    }
}

fn cmd_verify(common: &Common, input: &PathBuf, out: Option<&PathBuf>) -> Result<u8, Error> {
    let tols = tolerances(common)?;
    let text = read_file(input)?;
    let p = input.display().to_string();
    let value = report::parse_value(&text, &p)?;
    let parsed: report::InstanceJson = report::from_value(value, &p)?;
    let bundle = report::instance_from_json(&parsed, &p)?;
    let config = config_json(common, Some(input), out, None);

    let jb = jordan_battery(&bundle.ground_truth, common.samples, common.seed, &tols)?;
    let eq = equivalence_battery(
        &bundle.ground_truth,
        common.samples,
        common.seed.wrapping_add(1),
        &tols,
    )?;

    // the generator guarantee: s(U(p)) = J(p) on sampled projections
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(common.seed.wrapping_add(2));
    let mut worst = 0.0f64;
    for _ in 0..common.samples {
        let proj = sample::random_projection(bundle.problem.source(), &mut rng, &tols);
        let fp = phi_on_projection(&bundle.problem, &proj, &tols)?;
        let jp = bundle.ground_truth.apply(&proj)?;
        worst = worst.max(operator_norm(&fp.sub(&jp)));
    }
    let oracle_ok = worst <= tols.cert();

    for b in [&jb, &eq] {
        for c in &b.checks {
            println!(
                "  [{}] {}: residual {:.3e} (tol {:.3e})",
                if c.passed { "ok" } else { "FAIL" },
                c.name,
                c.residual,
                c.tolerance
            );
        }
    }
    println!(
        "  [{}] support_oracle: residual {:.3e} (tol {:.3e})",
        if oracle_ok { "ok" } else { "FAIL" },
        worst,
        tols.cert()
    );

    let overall = jb.overall && eq.overall && oracle_ok;
    let reports = vec![
        json!({"kind": "jordan_battery", "battery": report::battery_to_json(&jb)}),
        json!({"kind": "equivalence_battery", "battery": report::battery_to_json(&eq)}),
        json!({
            "kind": "support_oracle",
            "residual": worst,
            "tolerance": tols.cert(),
            "passed": oracle_ok,
        }),
    ];
    finish("verify", config, reports, overall, out, 2)
}

fn cmd_certify(common: &Common, input: &PathBuf, out: Option<&PathBuf>) -> Result<u8, Error> {
    let tols = tolerances(common)?;
    let (problem, _) = load_problem(input)?;
    let config = config_json(common, Some(input), out, None);
    match extend_full(&problem, common.samples, common.seed, &tols) {
        Ok(result) => {
            let surj = certify_jordan_isomorphism(
                &result.phi,
                common.samples,
                common.seed.wrapping_add(1),
                &tols,
            )?;
            println!("  verdict: {}", surj.verdict.as_str());
            let overall = result.all_passed() && surj.battery.overall;
            let reports = vec![
                json!({
                    "kind": "extension_result",
                    "result": report::extension_result_to_json(&result),
                }),
                json!({
                    "kind": "surjectivity",
                    "report": report::surjectivity_to_json(&surj),
                }),
            ];
            finish("certify", config, reports, overall, out, 2)
        }
        Err(Error::Hypothesis {
            name,
            residual,
            tolerance,
            context,
        }) => {
            println!("  [FAIL] hypothesis {name}: residual {residual:.3e}");
            let reports = vec![json!({
                "kind": "hypothesis_failure",
                "name": name,
                "residual": residual,
                "tolerance": tolerance,
                "context": context,
            })];
            finish("certify", config, reports, false, out, 1)
        }
        Err(e) => Err(e),
    }
}

fn cmd_counterexample(
    common: &Common,
    profile: &str,
    out: Option<&PathBuf>,
) -> Result<u8, Error> {
    let tols = tolerances(common)?;
    let prof = TwistProfile::parse(profile)?;
    let map = TwistMap::new(prof);
    let config = config_json(common, None, out, Some(profile));

    // orthogonal additivity of the twist on antipodal pairs
    use rand::SeedableRng;
    let alg = jordan_ext::counterexample::m2_algebra();
    let one = Operator::identity(&alg);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(common.seed);
    let mut additivity = 0.0f64;
    for _ in 0..common.samples {
        let p = random_rank1(&alg, &mut rng);
        let a = twist_apply(&map, &p, &tols)?;
        let b = twist_apply(&map, &one.sub(&p), &tols)?;
        additivity = additivity.max(operator_norm(&a.add(&b).sub(&one)));
    }
    let additivity_ok = additivity <= tols.cert();

    let witness =
        nonextendability_witness(&map, common.samples, common.seed.wrapping_add(1), &tols)?;
    let linear_profile = matches!(prof, TwistProfile::Zero | TwistProfile::Constant(_));
    let witness_ok = if linear_profile {
        witness <= tols.cert()
    } else {
        witness >= R0_SIN / 2.0
    };

    println!(
        "  [{}] orthogonal_additivity: residual {:.3e}",
        if additivity_ok { "ok" } else { "FAIL" },
        additivity
    );
    println!(
        "  [{}] nonextendability_witness: residual {:.6}{}",
        if witness_ok { "ok" } else { "FAIL" },
        witness,
        if linear_profile {
            " (linear profile: should vanish)".to_string()
        } else {
            format!(" (regression floor {})", R0_SIN / 2.0)
        }
    );

    let overall = additivity_ok && witness_ok;
    let reports = vec![
        json!({
            "kind": "twist_orthogonal_additivity",
            "residual": additivity,
            "tolerance": tols.cert(),
            "passed": additivity_ok,
        }),
        json!({
            "kind": "nonextendability_witness",
            "profile": prof.describe(),
            "residual": witness,
            "linear_profile": linear_profile,
            "regression_floor": if linear_profile { Value::Null } else { json!(R0_SIN / 2.0) },
            "passed": witness_ok,
        }),
    ];
    finish("counterexample", config, reports, overall, out, 2)
}

fn dispatch(cli: Cli) -> Result<u8, Error> {
    match &cli.command {
        Command::Gen { common, out } => cmd_gen(common, out),
        Command::Extend { common, input, out } => cmd_extend(common, input, out.as_ref()),
        Command::Verify { common, input, out } => cmd_verify(common, input, out.as_ref()),
        Command::Certify { common, input, out } => cmd_certify(common, input, out.as_ref()),
        Command::Counterexample {
            common,
            profile,
            out,
        } => cmd_counterexample(common, profile, out.as_ref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are not usage errors
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::from(0);
            }
            let _ = e.print();
            return ExitCode::from(64);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e @ (Error::Parse { .. } | Error::Precondition(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(64)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

//! Command-line interface for equivalence testing of two parametric
//! regression curves: fit models, run the equivalence tests, reproduce the
//! operating-characteristic tables, and export confidence-band profiles.
//!
//! Exit codes: 0 on success (including a non-rejecting test — the decision
//! is data, not an error), 2 on usage or validation errors, 3 on numerical
//! failure (non-convergence, singular information, non-unique extremum,
//! infeasible constraint).

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use curve_equiv::constrain::DistanceKind;
use curve_equiv::data::{load_samples_csv, GroupSample};
use curve_equiv::error::Error;
use curve_equiv::fitting::{fit_pair, PairedFit};
use curve_equiv::mcsim::{self, ScenarioConfig, ScenarioResult};
use curve_equiv::metrics::{band_halfwidth, dist_l2sq, dist_sup, QuadratureRule};
use curve_equiv::models::{builtin_registry, ModelSpec};
use curve_equiv::testing::{
    test_band_iu, test_bootstrap, test_l2_asymptotic, test_sup_asymptotic, Method, TestOutcome,
};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "curve-equiv",
    version,
    about = "Equivalence tests for two parametric regression curves"
)]
struct Cli {
    /// Worker threads (fallback: CURVE_EQUIV_THREADS); results do not
    /// depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit both models and report estimates and distances.
    Fit(FitArgs),
    /// Run one equivalence test and emit its outcome.
    Test(TestArgs),
    /// Simulate rejection rates for preset or custom scenarios.
    Simulate(SimulateArgs),
    /// Export the pointwise confidence band of the fitted difference.
    Bands(BandsArgs),
}

#[derive(Args)]
struct DataArgs {
    /// CSV with columns group,dose,response (group in {1,2}).
    #[arg(long)]
    data: PathBuf,
    /// Model id for group 1 (emax, exponential, linear, quadratic, constant).
    #[arg(long)]
    model1: String,
    /// Model id for group 2.
    #[arg(long)]
    model2: String,
    /// Comparison region as `lo,hi` (default: observed dose range).
    #[arg(long, value_parser = parse_region)]
    region: Option<(f64, f64)>,
}

#[derive(Args)]
struct OutArgs {
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    L2Asymptotic,
    BootL2,
    BootSup,
    SupAsymptotic,
    BandIu,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::L2Asymptotic => Method::L2Asymptotic,
            MethodArg::BootL2 => Method::BootL2,
            MethodArg::BootSup => Method::BootSup,
            MethodArg::SupAsymptotic => Method::SupAsymptotic,
            MethodArg::BandIu => Method::BandIu,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DistanceArg {
    L2sq,
    Sup,
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Decision procedure.
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Distance the threshold refers to (inferred from the method; rejected
    /// if inconsistent).
    #[arg(long, value_enum)]
    distance: Option<DistanceArg>,
    /// Equivalence threshold.
    #[arg(long)]
    eps: f64,
    /// Significance level in (0, 0.5).
    #[arg(long)]
    alpha: f64,
    /// Bootstrap replications.
    #[arg(long, short = 'B', default_value_t = 300)]
    b: u32,
    /// RNG seed for bootstrap methods.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct SimulateArgs {
    /// Preset id, e.g. `table1` or `table5_n50_50_d0.75_s0.25_0.25`.
    #[arg(long, conflicts_with = "scenario")]
    preset: Option<String>,
    /// JSON file with one scenario config or an array of them.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Override simulation replicates.
    #[arg(long)]
    nsim: Option<u32>,
    /// Override bootstrap replications.
    #[arg(long, short = 'B')]
    b: Option<u32>,
    /// Override the master seed of every scenario.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BandsArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Band confidence parameter in (0, 1).
    #[arg(long)]
    alpha: f64,
    /// Number of grid points.
    #[arg(long, default_value_t = 201)]
    grid: usize,
    /// Output CSV file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_region(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("expected `lo,hi`".into());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|e| format!("lo: {e}"))?;
    let hi: f64 = parts[1].trim().parse().map_err(|e| format!("hi: {e}"))?;
    if !(lo < hi) {
        return Err(format!("region lower bound {lo} must be below {hi}"));
    }
    Ok((lo, hi))
}

/// Exit code for a library error: numerical failures map to 3, everything
/// else (input, validation) to 2.
fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::NonConvergence(_)
        | Error::SingularInformation { .. }
        | Error::NonUniqueExtremum { .. }
        | Error::ConstraintInfeasible { .. }
        | Error::DroppedReplicates { .. } => 3,
        _ => 2,
    }
}

fn fail(err: Error) -> ExitCode {
    let hint = match &err {
        Error::NonUniqueExtremum { .. } => {
            "\nhint: the asymptotic sup test needs a unique extremal point; use --method boot-sup"
        }
        _ => "",
    };
    eprintln!("error: {err}{hint}");
    ExitCode::from(exit_code_for(&err))
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Invalid(format!("serialize: {e}"))
}

fn write_output(out: &Option<PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(Error::from),
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(Error::from)
        }
    }
}

fn load_pair(args: &DataArgs) -> Result<(ModelSpec, ModelSpec, GroupSample, GroupSample), Error> {
    let reg = builtin_registry();
    let spec1 = reg.lookup(&args.model1)?.clone();
    let spec2 = reg.lookup(&args.model2)?.clone();
    let (mut s1, mut s2) = load_samples_csv(&args.data)?;
    if let Some(region) = args.region {
        s1 = s1.with_region(region)?;
        s2 = s2.with_region(region)?;
    } else {
        // default to the union of both observed dose ranges so the curves
        // are compared on a common interval
        let lo = s1.region.0.min(s2.region.0);
        let hi = s1.region.1.max(s2.region.1);
        s1 = s1.with_region((lo, hi))?;
        s2 = s2.with_region((lo, hi))?;
    }
    Ok((spec1, spec2, s1, s2))
}

fn fitted_pair(args: &DataArgs) -> Result<(ModelSpec, ModelSpec, GroupSample, GroupSample, PairedFit), Error> {
    let (spec1, spec2, s1, s2) = load_pair(args)?;
    let pf = fit_pair(&spec1, &spec2, &s1, &s2)?;
    Ok((spec1, spec2, s1, s2, pf))
}

fn cmd_fit(args: &FitArgs) -> Result<(), Error> {
    let (_, _, _, _, pf) = fitted_pair(&args.data)?;
    let quad = QuadratureRule::default_on(pf.region)?;
    let sup = dist_sup(&pf, 2001, 1e-3);
    let group = |f: &curve_equiv::FitResult| {
        json!({
            "model": f.spec.id,
            "beta_hat": f.beta_hat,
            "sigma2_hat": f.sigma2_hat,
            "cond": f.cond,
            "n": f.n,
            "ssr": f.ssr,
            "converged": f.converged,
        })
    };
    let report = json!({
        "group1": group(&pf.fit1),
        "group2": group(&pf.fit2),
        "region": [pf.region.0, pf.region.1],
        "d_l2sq": dist_l2sq(&pf, &quad),
        "d_sup": sup.value,
        "extremal_points": sup.extremal_points,
        "plateau": sup.plateau,
    });
    let text = match args.out.format {
        Format::Json => format!(
            "{}\n",
            serde_json::to_string_pretty(&report).map_err(json_err)?
        ),
        Format::Csv => {
            let mut t = String::from("key,value\n");
            flatten_json("", &report, &mut t);
            t
        }
    };
    write_output(&args.out.out, &text)
}

/// Flattens a JSON value into `key,value` CSV rows with dotted paths.
fn flatten_json(prefix: &str, v: &serde_json::Value, out: &mut String) {
    match v {
        serde_json::Value::Object(map) => {
            for (k, vv) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten_json(&key, vv, out);
            }
        }
        serde_json::Value::Array(items) => {
            for (i, vv) in items.iter().enumerate() {
                flatten_json(&format!("{prefix}.{i}"), vv, out);
            }
        }
        _ => out.push_str(&format!("{prefix},{v}\n")),
    }
}

fn cmd_test(args: &TestArgs) -> Result<(), Error> {
    let method: Method = args.method.into();
    if let Some(d) = args.distance {
        let d = match d {
            DistanceArg::L2sq => DistanceKind::L2sq,
            DistanceArg::Sup => DistanceKind::Sup,
        };
        if d != method.distance() {
            return Err(Error::Invalid(format!(
                "--distance contradicts --method {}",
                method.cli_name()
            )));
        }
    }
    let (spec1, spec2, s1, s2) = load_pair(&args.data)?;
    let outcome: TestOutcome = match method {
        Method::L2Asymptotic => {
            let pf = fit_pair(&spec1, &spec2, &s1, &s2)?;
            let quad = QuadratureRule::default_on(pf.region)?;
            test_l2_asymptotic(&pf, args.eps, args.alpha, &quad)?
        }
        Method::SupAsymptotic => {
            let pf = fit_pair(&spec1, &spec2, &s1, &s2)?;
            test_sup_asymptotic(&pf, args.eps, args.alpha)?
        }
        Method::BandIu => {
            let pf = fit_pair(&spec1, &spec2, &s1, &s2)?;
            test_band_iu(&pf, args.eps, args.alpha)?
        }
        Method::BootL2 | Method::BootSup => test_bootstrap(
            &spec1,
            &spec2,
            &s1,
            &s2,
            args.eps,
            args.alpha,
            args.b,
            method.distance(),
            args.seed,
        )?,
    };
    let text = match args.out.format {
        Format::Json => format!(
            "{}\n",
            serde_json::to_string_pretty(&outcome).map_err(json_err)?
        ),
        Format::Csv => {
            let v = serde_json::to_value(&outcome).map_err(json_err)?;
            let mut t = String::from("key,value\n");
            flatten_json("", &v, &mut t);
            t
        }
    };
    write_output(&args.out.out, &text)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Error> {
    let mut configs: Vec<ScenarioConfig> = if let Some(id) = &args.preset {
        mcsim::preset(id)?
    } else if let Some(path) = &args.scenario {
        let text = std::fs::read_to_string(path)?;
        match serde_json::from_str::<Vec<ScenarioConfig>>(&text) {
            Ok(v) => v,
            Err(_) => vec![serde_json::from_str::<ScenarioConfig>(&text)
                .map_err(|e| Error::Invalid(format!("scenario JSON: {e}")))?],
        }
    } else {
        return Err(Error::Invalid(
            "one of --preset or --scenario is required".into(),
        ));
    };
    for cfg in &mut configs {
        if let Some(nsim) = args.nsim {
            cfg.nsim = nsim;
        }
        if let Some(b) = args.b {
            cfg.b = b;
        }
        if let Some(seed) = args.seed {
            cfg.master_seed = seed;
        }
    }
    let mut results: Vec<ScenarioResult> = Vec::with_capacity(configs.len());
    for cfg in &configs {
        let res = mcsim::run_scenario(cfg)?;
        eprintln!(
            "{}: {} replicates in {:.1}s",
            cfg.id, cfg.nsim, res.elapsed_secs
        );
        results.push(res);
    }
    let text = mcsim::render_table(&results);
    write_output(&args.out, &text)
}

fn cmd_bands(args: &BandsArgs) -> Result<(), Error> {
    if !(args.alpha > 0.0 && args.alpha <= 0.5) {
        return Err(Error::Invalid(format!(
            "alpha must lie in (0, 0.5], got {}",
            args.alpha
        )));
    }
    if args.grid < 2 {
        return Err(Error::Invalid("grid needs at least 2 points".into()));
    }
    let (_, _, _, _, pf) = fitted_pair(&args.data)?;
    let (lo, hi) = pf.region;
    let step = (hi - lo) / (args.grid - 1) as f64;
    let mut text = String::from("x,delta,lower,upper\n");
    for i in 0..args.grid {
        let x = lo + step * i as f64;
        let d = pf.delta(x);
        let hw = band_halfwidth(&pf, x, args.alpha);
        text.push_str(&format!("{x},{d},{},{}\n", d - hw, d + hw));
    }
    write_output(&args.out, &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads.or_else(|| {
        std::env::var("CURVE_EQUIV_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(t) = threads {
        if t == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Test(args) => cmd_test(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Bands(args) => cmd_bands(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}

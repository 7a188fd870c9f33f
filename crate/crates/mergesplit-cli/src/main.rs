//! Batch driver. Every subcommand assembles an effective config from
//! defaults, then an optional config file, then explicit flags; runs one
//! pipeline; and writes CSV artifacts plus a JSON summary that embeds the
//! config. Identical effective config and seed reproduce identical bytes.
//!
//! Exit codes: 0 success, 1 computation or acceptance failure, 2 invalid
//! parameters or config.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use mergesplit::discrete::{init_powerlaw, integrate, moments, write_state_csv, IntegrateControls};
use mergesplit::evolution::{evolve, rescaled_error, write_snapshot_csv};
use mergesplit::grid::GridFunction;
use mergesplit::profile::{shoot, ProfileCurve, ProfileEvaluator, ShootConfig};
use mergesplit::series::coefficients;
use mergesplit::transforms::{invert_profile, mixing_density, subordinate, StableKernel};

use mergesplit_cli::config::Config;
use mergesplit_cli::output;
use mergesplit_cli::suite;

#[derive(Parser)]
#[command(
    name = "mergesplit",
    version,
    about = "Self-similar profiles of the constant-rate merging-splitting system"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the self-similar profile for one shape parameter.
    Profile(ProfileArgs),
    /// Evolve power initial data and track the distance to the profile.
    Evolve(EvolveArgs),
    /// Integrate the discrete size system and track its rescaled transform.
    Discrete(DiscreteArgs),
    /// Reconstruct the size density by direct inversion and the kernel route.
    Invert(InvertArgs),
    /// Run the acceptance battery, one printed line per criterion.
    Check(CheckArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Key=value config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for CSV and JSON artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized probes, recorded in every summary.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ProfileArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    alpha: Option<f64>,
    /// Also run the residual and series/ODE cross-route gates.
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct EvolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    #[arg(long = "grid-min")]
    grid_min: Option<f64>,
    #[arg(long = "grid-max")]
    grid_max: Option<f64>,
    #[arg(long = "grid-per-decade")]
    grid_per_decade: Option<usize>,
}

#[derive(Args)]
struct DiscreteArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Truncation size of the discrete system.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "t-end")]
    t_end: Option<f64>,
}

#[derive(Args)]
struct InvertArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long = "grid-min")]
    grid_min: Option<f64>,
    #[arg(long = "grid-max")]
    grid_max: Option<f64>,
    #[arg(long = "grid-per-decade")]
    grid_per_decade: Option<usize>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Sub-minute subset instead of the full battery.
    #[arg(long)]
    quick: bool,
}

enum Failure {
    /// Bad parameters or config: nothing was computed.
    Validation(String),
    /// The pipeline started and failed, or a gate did not pass.
    Computation(String),
}

impl Failure {
    fn validation<E: std::fmt::Display>(e: E) -> Self {
        Failure::Validation(e.to_string())
    }
    fn computation<E: std::fmt::Display>(e: E) -> Self {
        Failure::Computation(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Profile(args) => cmd_profile(args),
        Command::Evolve(args) => cmd_evolve(args),
        Command::Discrete(args) => cmd_discrete(args),
        Command::Invert(args) => cmd_invert(args),
        Command::Check(args) => cmd_check(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Computation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Validation(msg)) => {
            eprintln!("invalid request: {msg}");
            ExitCode::from(2)
        }
    }
}

/// Defaults <- config file <- flags, with unknown file keys rejected.
fn effective_config(
    defaults: &[(&str, &str)],
    file: Option<&Path>,
    flags: &[(&str, Option<String>)],
) -> Result<Config, Failure> {
    let mut cfg = Config::new();
    for (k, v) in defaults {
        cfg.set(k, v).map_err(Failure::validation)?;
    }
    if let Some(path) = file {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Failure::Validation(format!("config {}: {e}", path.display()))
        })?;
        let from_file = Config::parse(&text).map_err(|e| {
            Failure::Validation(format!("config {}: {e}", path.display()))
        })?;
        let known: Vec<&str> = defaults.iter().map(|(k, _)| *k).collect();
        let unknown = from_file.unknown_keys(&known);
        if !unknown.is_empty() {
            return Err(Failure::Validation(format!(
                "config {}: unknown keys {unknown:?}",
                path.display()
            )));
        }
        for (k, v) in from_file.iter() {
            cfg.set(k, v).map_err(Failure::validation)?;
        }
    }
    for (k, v) in flags {
        if let Some(v) = v {
            cfg.set(k, v).map_err(Failure::validation)?;
        }
    }
    Ok(cfg)
}

fn out_dir(cfg: &Config) -> Result<PathBuf, Failure> {
    let dir = PathBuf::from(cfg.get("out").unwrap_or("mergesplit-out"));
    std::fs::create_dir_all(&dir)
        .map_err(|e| Failure::Validation(format!("out dir {}: {e}", dir.display())))?;
    Ok(dir)
}

fn need_f64(cfg: &Config, key: &str) -> Result<f64, Failure> {
    cfg.get_f64(key)
        .map_err(Failure::validation)?
        .ok_or_else(|| Failure::Validation(format!("missing {key}")))
}

fn need_usize(cfg: &Config, key: &str) -> Result<usize, Failure> {
    cfg.get_usize(key)
        .map_err(Failure::validation)?
        .ok_or_else(|| Failure::Validation(format!("missing {key}")))
}

fn seed_of(cfg: &Config) -> Result<u64, Failure> {
    cfg.get_u64("seed")
        .map_err(Failure::validation)?
        .ok_or_else(|| Failure::Validation("missing seed".into()))
}

fn check_alpha(alpha: f64) -> Result<(), Failure> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Failure::Validation(format!(
            "alpha = {alpha} outside (0, 1)"
        )));
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Computation(format!("{}: {e}", path.display())))
}

/// On failure after validation, leave a machine-readable record next to the
/// other artifacts.
fn record_failure(dir: &Path, command: &str, cfg: &Config, msg: &str) {
    let record = json!({
        "schema_version": output::SCHEMA_VERSION,
        "command": command,
        "config": serde_json::Map::from_iter(
            cfg.iter().map(|(k, v)| (k.to_string(), json!(v)))),
        "error": msg,
    });
    let _ = output::write_json(&dir.join("failure.json"), &record);
}

fn flag_f64(v: Option<f64>) -> Option<String> {
    v.map(|x| x.to_string())
}

fn profile_pipeline(alpha: f64) -> Result<(ProfileCurve, ProfileEvaluator), String> {
    let series = coefficients(alpha, 120).map_err(|e| e.to_string())?;
    let mut curve = shoot(alpha, &ShootConfig::default())
        .map_err(|e| e.to_string())?
        .normalize(&series)
        .map_err(|e| e.to_string())?;
    curve.fit_tail().map_err(|e| e.to_string())?;
    let evaluator =
        ProfileEvaluator::new(curve.clone(), series).map_err(|e| e.to_string())?;
    Ok((curve, evaluator))
}

fn cmd_profile(args: ProfileArgs) -> Result<(), Failure> {
    let defaults = [
        ("alpha", "0.5"),
        ("seed", "12345"),
        ("out", "mergesplit-out"),
    ];
    let cfg = effective_config(
        &defaults,
        args.common.config.as_deref(),
        &[
            ("alpha", flag_f64(args.alpha)),
            ("seed", args.common.seed.map(|s| s.to_string())),
            (
                "out",
                args.common.out.map(|p| p.display().to_string()),
            ),
        ],
    )?;
    let alpha = need_f64(&cfg, "alpha")?;
    check_alpha(alpha)?;
    let seed = seed_of(&cfg)?;
    let dir = out_dir(&cfg)?;

    let run = || -> Result<serde_json::Value, String> {
        let (curve, evaluator) = profile_pipeline(alpha)?;
        let series = evaluator.series();

        // Worst series/ODE disagreement over four decades up to half the
        // estimated radius; the same quantity the acceptance battery gates.
        let mut overlap = 0.0_f64;
        for i in 0..=200 {
            let w = 0.5 * series.radius_est * 10f64.powf(-4.0 * (1.0 - i as f64 / 200.0));
            let z = w.powf(1.0 / alpha);
            let tau = z.ln();
            if tau < curve.tau_grid[0] || tau > *curve.tau_grid.last().unwrap() {
                continue;
            }
            let a = series.eval_series(z).map_err(|e| e.to_string())?.value;
            let b = curve.u_at_tau(tau).map_err(|e| e.to_string())?;
            overlap = overlap.max((a - b).abs() / a);
        }
        let residual = curve.residual();

        let mut csv = create(&dir.join("profile.csv")).map_err(|e| match e {
            Failure::Computation(m) | Failure::Validation(m) => m,
        })?;
        curve.write_csv(&mut csv).map_err(|e| e.to_string())?;

        let mut results = curve.header_json();
        results["residual"] = json!(residual);
        results["series_overlap_error"] = json!(overlap);
        results["radius_est"] = json!(series.radius_est);

        if args.check {
            if !(overlap < 1e-6) {
                return Err(format!("series/ODE overlap {overlap:.3e} above 1e-6"));
            }
            if !(residual < 1e-8) {
                return Err(format!("profile residual {residual:.3e} above 1e-8"));
            }
            results["checks"] = json!("residual and cross-route gates passed");
        }
        Ok(results)
    };

    match run() {
        Ok(results) => {
            let summary = output::summary("profile", &cfg, seed, results);
            output::write_json(&dir.join("profile.json"), &summary)
                .map_err(Failure::computation)?;
            Ok(())
        }
        Err(msg) => {
            record_failure(&dir, "profile", &cfg, &msg);
            Err(Failure::Computation(msg))
        }
    }
}

fn cmd_evolve(args: EvolveArgs) -> Result<(), Failure> {
    let defaults = [
        ("alpha", "0.5"),
        ("dt", "1e-3"),
        ("t-end", "20"),
        ("grid-min", "1e-8"),
        ("grid-max", "1e8"),
        ("grid-per-decade", "40"),
        ("seed", "12345"),
        ("out", "mergesplit-out"),
    ];
    let cfg = effective_config(
        &defaults,
        args.common.config.as_deref(),
        &[
            ("alpha", flag_f64(args.alpha)),
            ("dt", flag_f64(args.dt)),
            ("t-end", flag_f64(args.t_end)),
            ("grid-min", flag_f64(args.grid_min)),
            ("grid-max", flag_f64(args.grid_max)),
            ("grid-per-decade", args.grid_per_decade.map(|n| n.to_string())),
            ("seed", args.common.seed.map(|s| s.to_string())),
            ("out", args.common.out.map(|p| p.display().to_string())),
        ],
    )?;
    let alpha = need_f64(&cfg, "alpha")?;
    check_alpha(alpha)?;
    let dt = need_f64(&cfg, "dt")?;
    let t_end = need_f64(&cfg, "t-end")?;
    let (g_min, g_max) = (need_f64(&cfg, "grid-min")?, need_f64(&cfg, "grid-max")?);
    let per_decade = need_usize(&cfg, "grid-per-decade")?;
    if !(dt > 0.0 && dt < 0.1) {
        return Err(Failure::Validation(format!("dt = {dt} outside (0, 0.1)")));
    }
    if !(t_end > 0.0 && t_end <= 100.0) {
        return Err(Failure::Validation(format!("t-end = {t_end} outside (0, 100]")));
    }
    let seed = seed_of(&cfg)?;
    let u0 = GridFunction::sample(g_min, g_max, per_decade, alpha, |s| s.powf(alpha))
        .map_err(Failure::validation)?;
    let m0 = g_max.powf(alpha);
    let dir = out_dir(&cfg)?;

    let run = || -> Result<serde_json::Value, String> {
        let (curve, _) = profile_pipeline(alpha)?;
        let snaps: Vec<f64> = (1..)
            .map(|k| 2.0 * k as f64)
            .take_while(|&t| t < t_end)
            .collect();
        let states = evolve(&u0, m0, t_end, dt, &snaps).map_err(|e| e.to_string())?;

        let mut series = Vec::new();
        for state in &states {
            let err = rescaled_error(state, &curve, (0.1, 10.0)).map_err(|e| e.to_string())?;
            series.push(json!({"t": state.time, "rescaled_error": err, "m0": state.m0}));
        }
        let mut csv = create(&dir.join("evolve.csv")).map_err(any_msg)?;
        write_snapshot_csv(&states, &mut csv).map_err(|e| e.to_string())?;
        Ok(json!({"rescaled_error": series}))
    };

    match run() {
        Ok(results) => {
            let summary = output::summary("evolve", &cfg, seed, results);
            output::write_json(&dir.join("evolve.json"), &summary)
                .map_err(Failure::computation)?;
            Ok(())
        }
        Err(msg) => {
            record_failure(&dir, "evolve", &cfg, &msg);
            Err(Failure::Computation(msg))
        }
    }
}

fn any_msg(e: Failure) -> String {
    match e {
        Failure::Computation(m) | Failure::Validation(m) => m,
    }
}

fn cmd_discrete(args: DiscreteArgs) -> Result<(), Failure> {
    let defaults = [
        ("alpha", "0.5"),
        ("lambda", "1"),
        ("n", "100000"),
        ("t-end", "12"),
        ("seed", "12345"),
        ("out", "mergesplit-out"),
    ];
    let cfg = effective_config(
        &defaults,
        args.common.config.as_deref(),
        &[
            ("alpha", flag_f64(args.alpha)),
            ("lambda", flag_f64(args.lambda)),
            ("n", args.n.map(|n| n.to_string())),
            ("t-end", flag_f64(args.t_end)),
            ("seed", args.common.seed.map(|s| s.to_string())),
            ("out", args.common.out.map(|p| p.display().to_string())),
        ],
    )?;
    let alpha = need_f64(&cfg, "alpha")?;
    check_alpha(alpha)?;
    let lambda = need_f64(&cfg, "lambda")?;
    let n = need_usize(&cfg, "n")?;
    let t_end = need_f64(&cfg, "t-end")?;
    if !(t_end > 0.0 && t_end <= 30.0) {
        return Err(Failure::Validation(format!("t-end = {t_end} outside (0, 30]")));
    }
    let seed = seed_of(&cfg)?;
    let state0 = init_powerlaw(alpha, lambda, n).map_err(Failure::validation)?;
    let dir = out_dir(&cfg)?;

    let run = || -> Result<serde_json::Value, String> {
        let (curve, _) = profile_pipeline(alpha)?;
        let snaps: Vec<f64> = (1..)
            .map(|k| 2.0 * k as f64)
            .take_while(|&t| t < t_end)
            .collect();
        let controls = IntegrateControls {
            rtol: 1e-6,
            snapshot_times: snaps,
        };
        let states = integrate(&state0, t_end, &controls).map_err(|e| e.to_string())?;

        let mut series = Vec::new();
        for state in &states {
            // Null once the rescaled window slides inside the truncation
            // scale 1/n; the comparison has no meaning there.
            let err = if state.time > 0.0 {
                match mergesplit::discrete::rescaled_transform_error(state, &curve, lambda) {
                    Ok(e) => json!(e),
                    Err(mergesplit::Error::WindowTooSmall(_)) => json!(null),
                    Err(e) => return Err(e.to_string()),
                }
            } else {
                json!(null)
            };
            let (m0, m1) = moments(&state.f);
            series.push(json!({
                "t": state.time,
                "transform_error": err,
                "m0": m0,
                "m1": m1,
                "mass_leak": state.mass_leak,
            }));
        }
        let mut csv = create(&dir.join("discrete.csv")).map_err(any_msg)?;
        write_state_csv(&states, 1e-16, &mut csv).map_err(|e| e.to_string())?;
        Ok(json!({"trajectory": series}))
    };

    match run() {
        Ok(results) => {
            let summary = output::summary("discrete", &cfg, seed, results);
            output::write_json(&dir.join("discrete.json"), &summary)
                .map_err(Failure::computation)?;
            Ok(())
        }
        Err(msg) => {
            record_failure(&dir, "discrete", &cfg, &msg);
            Err(Failure::Computation(msg))
        }
    }
}

fn cmd_invert(args: InvertArgs) -> Result<(), Failure> {
    let defaults = [
        ("alpha", "0.5"),
        ("grid-min", "1e-3"),
        ("grid-max", "1e3"),
        ("grid-per-decade", "20"),
        ("seed", "12345"),
        ("out", "mergesplit-out"),
    ];
    let cfg = effective_config(
        &defaults,
        args.common.config.as_deref(),
        &[
            ("alpha", flag_f64(args.alpha)),
            ("grid-min", flag_f64(args.grid_min)),
            ("grid-max", flag_f64(args.grid_max)),
            ("grid-per-decade", args.grid_per_decade.map(|n| n.to_string())),
            ("seed", args.common.seed.map(|s| s.to_string())),
            ("out", args.common.out.map(|p| p.display().to_string())),
        ],
    )?;
    let alpha = need_f64(&cfg, "alpha")?;
    check_alpha(alpha)?;
    let (g_min, g_max) = (need_f64(&cfg, "grid-min")?, need_f64(&cfg, "grid-max")?);
    let per_decade = need_usize(&cfg, "grid-per-decade")?;
    let seed = seed_of(&cfg)?;
    let x_grid =
        GridFunction::zeros(g_min, g_max, per_decade, 0.0).map_err(Failure::validation)?;
    let dir = out_dir(&cfg)?;

    let run = || -> Result<serde_json::Value, String> {
        let (_, evaluator) = profile_pipeline(alpha)?;
        let direct = invert_profile(&evaluator, &x_grid).map_err(|e| e.to_string())?;

        let tau_grid = GridFunction::zeros(1e-4, 16.0, 24, 0.0).map_err(|e| e.to_string())?;
        let g = mixing_density(&evaluator, &tau_grid).map_err(|e| e.to_string())?;
        let kernel = StableKernel::new(alpha).map_err(|e| e.to_string())?;
        let (routed, info) = subordinate(&g, &kernel, &x_grid).map_err(|e| e.to_string())?;

        let mut worst = 0.0_f64;
        for k in 0..x_grid.len() {
            worst = worst.max((routed.grid.values[k] / direct.grid.values[k] - 1.0).abs());
        }

        let mut csv = create(&dir.join("density_inversion.csv")).map_err(any_msg)?;
        direct.write_csv(&mut csv).map_err(|e| e.to_string())?;
        let mut csv = create(&dir.join("density_subordination.csv")).map_err(any_msg)?;
        routed.write_csv(&mut csv).map_err(|e| e.to_string())?;
        let mut csv = create(&dir.join("mixing_density.csv")).map_err(any_msg)?;
        g.write_csv(&mut csv).map_err(|e| e.to_string())?;

        Ok(json!({
            "route_disagreement": worst,
            "inversion_err_estimate": direct.err_estimate,
            "subordination": {
                "head_fraction": info.head_fraction,
                "tail_fraction": info.tail_fraction,
                "tail_model": format!("{:?}", info.tail_model),
                "truncation_warning": info.truncation_warning,
            },
        }))
    };

    match run() {
        Ok(results) => {
            let summary = output::summary("invert", &cfg, seed, results);
            output::write_json(&dir.join("invert.json"), &summary)
                .map_err(Failure::computation)?;
            Ok(())
        }
        Err(msg) => {
            record_failure(&dir, "invert", &cfg, &msg);
            Err(Failure::Computation(msg))
        }
    }
}

fn cmd_check(args: CheckArgs) -> Result<(), Failure> {
    let defaults = [("seed", "12345"), ("out", "mergesplit-out")];
    let cfg = effective_config(
        &defaults,
        args.common.config.as_deref(),
        &[
            ("seed", args.common.seed.map(|s| s.to_string())),
            ("out", args.common.out.map(|p| p.display().to_string())),
        ],
    )?;
    let seed = seed_of(&cfg)?;
    let dir = out_dir(&cfg)?;

    let reports = if args.quick {
        suite::run_quick(seed)
    } else {
        suite::run_all(seed)
    };
    for report in &reports {
        println!("{}", report.line());
    }
    // No timings in the artifact: identical config and seed must reproduce
    // identical bytes.
    let rows: Vec<serde_json::Value> = reports
        .iter()
        .map(|r| {
            json!({
                "index": r.index,
                "name": r.name,
                "passed": r.passed,
                "known_limit": r.known_limit,
                "measured": r.measured,
            })
        })
        .collect();
    let all_passed = reports.iter().all(|r| r.passed);
    let summary = output::summary(
        if args.quick { "check-quick" } else { "check" },
        &cfg,
        seed,
        json!({"criteria": rows, "all_passed": all_passed}),
    );
    output::write_json(&dir.join("check.json"), &summary).map_err(Failure::computation)?;
    if all_passed {
        Ok(())
    } else {
        Err(Failure::Computation(
            "acceptance battery has failing criteria (see table)".into(),
        ))
    }
}

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod output;
mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use config::{ConfigError, FileConfig, Job};
use output::{Manifest, Row};
use vlc_noma::analytic::analytic_sum_rate_sweep;
use vlc_noma::sim::{run_sweep, validate, ValidationOptions, ValidationReport};
use vlc_noma::{AnalyticModel, CurvePoint, FeedbackKind, QuadratureConfig};

/// Outage and sum-rate evaluation for VLC NOMA with randomly tilting receivers.
#[derive(Parser)]
#[command(name = "vlc-noma", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo sum-rate curves.
    Simulate(RunArgs),
    /// Closed-form sum-rate curves (full-CSI and two-bit schemes only).
    Analytic(RunArgs),
    /// Compare the closed-form distributions with sampling.
    Validate(ValidateArgs),
    /// Write a matplotlib script plotting result CSVs.
    Plot(PlotArgs),
}

#[derive(Args, Clone)]
struct Source {
    /// Configuration file (TOML).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Bundled configuration: fig2, fig3 or fig4. Default fig2.
    #[arg(long)]
    preset: Option<String>,
    /// Override a configuration value, e.g. `--set sweep.trials=1000`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trials per curve.
    #[arg(long)]
    trials: Option<u64>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// 10^4 trials per curve.
    #[arg(long)]
    quick: bool,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Ten times fewer samples with wider tolerances.
    #[arg(long)]
    quick: bool,
    /// Divide every tolerance by this factor.
    #[arg(long, value_name = "FACTOR")]
    tighten: Option<f64>,
}

#[derive(Args)]
struct PlotArgs {
    /// CSV files produced by `simulate` or `analytic`.
    #[arg(required = true)]
    csv: Vec<PathBuf>,
    /// Script path; the image is written next to it with a .png extension.
    #[arg(long, default_value = "plot.py")]
    out: PathBuf,
    #[arg(long, default_value = "Sum rate versus transmit SNR")]
    title: String,
}

enum Failure {
    Usage(String),
    Validation,
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Validation => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.0)
    }
}

fn io_fail(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Usage(format!("{}: {e}", path.display()))
}

fn engine_fail(e: vlc_noma::Error) -> Failure {
    match e {
        vlc_noma::Error::Quadrature { .. } | vlc_noma::Error::EmptySample => Failure::Numerical(e.to_string()),
        _ => Failure::Usage(e.to_string()),
    }
}

struct Loaded {
    name: String,
    config: FileConfig,
}

fn load(source: &Source) -> Result<Loaded, Failure> {
    let (name, text) = match (&source.config, &source.preset) {
        (Some(p), _) => (p.display().to_string(), config::read_file(p)?),
        (None, preset) => {
            let n = preset.as_deref().unwrap_or("fig2");
            (format!("preset:{n}"), config::preset_text(n)?.to_string())
        }
    };
    Ok(Loaded {
        name,
        config: config::load(&text, &source.overrides)?,
    })
}

fn default_out(source: &Source, command: &str) -> PathBuf {
    let stem = match (&source.config, &source.preset) {
        (Some(p), _) => p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
        (None, p) => p.clone().unwrap_or_else(|| "fig2".into()),
    };
    PathBuf::from(format!("{stem}-{command}.csv"))
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn curve_rows(job: &Job, noma: &[CurvePoint], oma: &[CurvePoint], rows: &mut Vec<Row>) {
    let mut push = |access: &str, pts: &[CurvePoint]| {
        let scheme = job.label(access);
        rows.extend(pts.iter().map(|p| Row {
            scheme: scheme.clone(),
            point: *p,
        }));
    };
    push("noma", noma);
    if job.with_oma {
        push("oma", oma);
    }
}

fn simulate(args: &RunArgs) -> Result<(), Failure> {
    let started = Instant::now();
    let t0 = unix_now();
    let mut loaded = load(&args.source)?;
    let trials = args.trials.or(args.quick.then_some(10_000));
    if let Some(t) = trials {
        loaded.config.sweep.trials = t;
    }
    if let Some(s) = args.seed {
        loaded.config.sweep.seed = s;
    }
    let jobs = loaded.config.jobs()?;
    let mut rows = Vec::new();
    for job in &jobs {
        let r = run_sweep(&job.experiment).map_err(engine_fail)?;
        curve_rows(job, &r.noma, &r.oma, &mut rows);
        eprintln!("{}: {} trials done", job.label("noma"), job.experiment.trials);
    }
    let out = args.out.clone().unwrap_or_else(|| default_out(&args.source, "simulate"));
    output::write_csv(&out, &rows).map_err(io_fail(&out))?;
    let manifest = Manifest {
        command: "simulate".into(),
        tool_version: env!("CARGO_PKG_VERSION"),
        engine_version: vlc_noma::VERSION,
        source: loaded.name,
        overrides: args.source.overrides.clone(),
        root_seed: Some(loaded.config.sweep.seed),
        trials: Some(loaded.config.sweep.trials),
        config_toml: loaded.config.to_toml(),
        outputs: vec![out.clone()],
        started_unix_s: t0,
        elapsed_s: started.elapsed().as_secs_f64(),
        notes: Vec::new(),
    };
    let m = output::write_manifest(&out, &manifest).map_err(io_fail(&out))?;
    println!("wrote {} and {}", out.display(), m.display());
    Ok(())
}

fn flagged_point(gamma_db: f64) -> CurvePoint {
    CurvePoint {
        gamma_db,
        sum_rate: f64::NAN,
        ci_halfwidth: f64::NAN,
        outage_weak: f64::NAN,
        outage_strong: f64::NAN,
        conditioning_rate: f64::NAN,
    }
}

fn analytic(args: &RunArgs) -> Result<(), Failure> {
    let started = Instant::now();
    let t0 = unix_now();
    let mut loaded = load(&args.source)?;
    if let Some(s) = args.seed {
        loaded.config.sweep.seed = s;
    }
    let jobs = loaded.config.jobs()?;
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    let mut flagged = 0usize;
    for job in &jobs {
        if !matches!(
            job.kind,
            FeedbackKind::FullCsi | FeedbackKind::TwoBitInstant | FeedbackKind::TwoBitMean
        ) {
            let note = format!("{}: no closed form for this scheme; skipped", job.label("noma"));
            eprintln!("{note}");
            notes.push(note);
            continue;
        }
        let e = &job.experiment;
        let model = AnalyticModel::new(e.geom, e.mobility, e.scheme, QuadratureConfig::default())
            .map_err(engine_fail)?;
        let (mut noma, mut oma) = (Vec::new(), Vec::new());
        for &g in &e.gamma_db {
            match analytic_sum_rate_sweep(&model, &e.noma, e.strategy, &[g]) {
                Ok(p) => {
                    noma.push(p[0].noma);
                    oma.push(p[0].oma);
                }
                Err(err @ vlc_noma::Error::Quadrature { .. }) => {
                    let note = format!("{} at {g} dB: {err}; row written as NaN", job.label("noma"));
                    eprintln!("{note}");
                    notes.push(note);
                    flagged += 1;
                    noma.push(flagged_point(g));
                    oma.push(flagged_point(g));
                }
                Err(err) => return Err(engine_fail(err)),
            }
        }
        curve_rows(job, &noma, &oma, &mut rows);
    }
    let out = args.out.clone().unwrap_or_else(|| default_out(&args.source, "analytic"));
    output::write_csv(&out, &rows).map_err(io_fail(&out))?;
    let manifest = Manifest {
        command: "analytic".into(),
        tool_version: env!("CARGO_PKG_VERSION"),
        engine_version: vlc_noma::VERSION,
        source: loaded.name,
        overrides: args.source.overrides.clone(),
        root_seed: None,
        trials: None,
        config_toml: loaded.config.to_toml(),
        outputs: vec![out.clone()],
        started_unix_s: t0,
        elapsed_s: started.elapsed().as_secs_f64(),
        notes,
    };
    let m = output::write_manifest(&out, &manifest).map_err(io_fail(&out))?;
    println!("wrote {} and {}", out.display(), m.display());
    if flagged > 0 {
        return Err(Failure::Numerical(format!("{flagged} rows did not converge")));
    }
    Ok(())
}

fn print_report(run: &str, rep: &ValidationReport) {
    println!("run {run}");
    for c in &rep.checks {
        println!(
            "  {:<4} {:<28} measured {:<11.4e} required <= {:<9.3e} {}",
            if c.passed { "ok" } else { "FAIL" },
            c.name,
            c.measured,
            c.tolerance,
            c.detail
        );
    }
}

fn validate_cmd(args: &ValidateArgs) -> Result<(), Failure> {
    let started = Instant::now();
    let t0 = unix_now();
    let loaded = load(&args.source)?;
    let mut opts = if args.quick {
        ValidationOptions::quick()
    } else {
        ValidationOptions::default()
    };
    if let Some(s) = args.seed {
        opts.seed = s;
    }
    if let Some(f) = args.tighten {
        if !(f > 0.0) {
            return Err(Failure::Usage("--tighten must be positive".into()));
        }
        opts = opts.tightened(f);
    }
    let jobs = loaded.config.jobs()?;
    // one validation per run: the checks depend on mobility, not on the scheme
    let mut reports = Vec::new();
    let mut seen = Vec::new();
    for job in &jobs {
        if seen.contains(&job.run) {
            continue;
        }
        seen.push(job.run.clone());
        let rep = validate(&job.experiment, &opts).map_err(engine_fail)?;
        print_report(&job.run, &rep);
        reports.push((job.run.clone(), rep));
    }
    let passed = reports.iter().all(|(_, r)| r.passed());
    println!("{}", if passed { "all checks passed" } else { "some checks failed" });
    if let Some(out) = &args.out {
        let json: Vec<_> = reports
            .iter()
            .map(|(run, r)| serde_json::json!({ "run": run, "passed": r.passed(), "checks": r.checks }))
            .collect();
        let body = serde_json::json!({ "options": opts, "passed": passed, "runs": json });
        let text = serde_json::to_string_pretty(&body).map_err(|e| Failure::Usage(e.to_string()))?;
        std::fs::write(out, text + "\n").map_err(io_fail(out))?;
        let manifest = Manifest {
            command: "validate".into(),
            tool_version: env!("CARGO_PKG_VERSION"),
            engine_version: vlc_noma::VERSION,
            source: loaded.name,
            overrides: args.source.overrides.clone(),
            root_seed: Some(opts.seed),
            trials: None,
            config_toml: loaded.config.to_toml(),
            outputs: vec![out.clone()],
            started_unix_s: t0,
            elapsed_s: started.elapsed().as_secs_f64(),
            notes: Vec::new(),
        };
        output::write_manifest(out, &manifest).map_err(io_fail(out))?;
    }
    if passed {
        Ok(())
    } else {
        Err(Failure::Validation)
    }
}

fn plot_cmd(args: &PlotArgs) -> Result<(), Failure> {
    let started = Instant::now();
    let t0 = unix_now();
    let series = plot::read_series(&args.csv).map_err(|e| Failure::Usage(e.0))?;
    let image = args.out.with_extension("png");
    let text = plot::script(&series, &image.to_string_lossy(), &args.title);
    std::fs::write(&args.out, text).map_err(io_fail(&args.out))?;
    let manifest = Manifest {
        command: "plot".into(),
        tool_version: env!("CARGO_PKG_VERSION"),
        engine_version: vlc_noma::VERSION,
        source: args.csv.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "),
        overrides: Vec::new(),
        root_seed: None,
        trials: None,
        config_toml: String::new(),
        outputs: vec![args.out.clone()],
        started_unix_s: t0,
        elapsed_s: started.elapsed().as_secs_f64(),
        notes: vec![format!("{} curves", series.len())],
    };
    output::write_manifest(&args.out, &manifest).map_err(io_fail(&args.out))?;
    println!("wrote {} (run it with python3 to render {})", args.out.display(), image.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Analytic(a) => analytic(a),
        Command::Validate(a) => validate_cmd(a),
        Command::Plot(a) => plot_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("error: {m}"),
                Failure::Numerical(m) => eprintln!("numerical failure: {m}"),
                Failure::Validation => eprintln!("validation failed"),
            }
            ExitCode::from(f.code())
        }
    }
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use nonclass::analysis::{
    analyze_file_distribution, analyze_histogram, parse_families, AnalysisConfig, BootstrapConfig, Pipeline,
    Reconstruction,
};
use nonclass::criteria::{Family, Registry};
use nonclass::data::{load_distribution, load_histogram, save_distribution, save_histogram, AnalysisReport, JointHistogram};
use nonclass::moments::{OrderingConvention, DEFAULT_ORDER, MAX_ORDER};
use nonclass::ncd::NcdOptions;
use nonclass::reconstruct::{calibrate, em_reconstruct, CalibrationOptions, CalibrationParams, EmOptions};
use nonclass::sim::Scenario;
use nonclass::{report, selftest, Error, Result};

#[derive(Parser)]
#[command(name = "nonclass", version, about = "Nonclassicality criteria for twin-beam photon-counting data")]
struct Cli {
    /// Seed for sampling, bootstrap and calibration starts.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; the pipeline currently runs on one.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Highest moment order K.
    #[arg(long, global = true, default_value_t = DEFAULT_ORDER)]
    k_order: usize,
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a photocount histogram from a scenario file.
    Simulate {
        scenario: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Override the scenario frame count.
        #[arg(long)]
        frames: Option<u64>,
        /// Also write the photon-number distribution (JSON).
        #[arg(long)]
        distribution: Option<PathBuf>,
        /// Also write the exact photocount distribution (JSON).
        #[arg(long)]
        photocount: Option<PathBuf>,
    },
    /// Reconstruct the photon-number distribution from a histogram.
    #[command(subcommand)]
    Reconstruct(ReconstructCommand),
    /// Evaluate criteria on a histogram (CSV or JSON) or a distribution (JSON).
    Analyze(AnalyzeArgs),
    /// Export plot data from a report.
    Report {
        report: PathBuf,
        #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
        format: ReportFormat,
        #[arg(short, long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Criterion catalog.
    #[command(subcommand)]
    Criteria(CriteriaCommand),
    /// Run the identity suite on random moment tables.
    Selftest {
        #[arg(long, default_value_t = 200)]
        tables: usize,
    },
}

#[derive(Subcommand)]
enum ReconstructCommand {
    /// Maximum-likelihood EM through the detector POVM.
    Em {
        histogram: PathBuf,
        /// Scenario file supplying the detector parameters.
        #[arg(long)]
        scenario: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        n_max: Option<usize>,
        #[arg(long, default_value_t = 100_000)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        accelerate: bool,
    },
    /// Parametric least-squares fit of the twin-beam model.
    Calibrate {
        histogram: PathBuf,
        /// Scenario file supplying detectors and the starting parameters.
        #[arg(long)]
        scenario: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Fitted parameters (JSON).
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        starts: usize,
        #[arg(long, default_value_t = 2000)]
        max_iter: u64,
    },
}

#[derive(Subcommand)]
enum CriteriaCommand {
    List {
        /// Restrict to one family.
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        include_redundant: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Csv,
    Svg,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Direct,
    Em,
    Calibrate,
}

#[derive(Clone, Copy, ValueEnum)]
enum Convention {
    IntensityNoise,
    Laguerre,
}

#[derive(Args)]
struct AnalyzeArgs {
    input: PathBuf,
    /// Report JSON; printed to stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Flat table, one row per criterion.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Comma-separated families, e.g. `E,D,T,F`.
    #[arg(long)]
    families: Option<String>,
    #[arg(long)]
    include_redundant: bool,
    #[arg(long)]
    no_ncd: bool,
    /// Largest depth searched.
    #[arg(long, default_value_t = 1.0)]
    tau_max: f64,
    #[arg(long, value_enum, default_value_t = Convention::IntensityNoise)]
    convention: Convention,
    /// Bootstrap replicas for standard errors.
    #[arg(long, num_args = 0..=1, default_missing_value = "200")]
    bootstrap: Option<usize>,
    /// How a histogram is turned into a distribution.
    #[arg(long, value_enum, default_value_t = Method::Direct)]
    reconstruct: Method,
    /// Detectors and starting parameters for `em` or `calibrate`.
    #[arg(long)]
    scenario: Option<PathBuf>,
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    }
    fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Writes to stdout, tolerating a closed pipe.
fn print_stdout(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".provenance.json");
    PathBuf::from(s)
}

fn load_any_histogram(path: &Path) -> Result<Option<JointHistogram>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    if text.trim_start().starts_with("frames") {
        return JointHistogram::parse_csv(&text).map(Some);
    }
    if path.extension().is_some_and(|e| e == "csv") {
        return load_histogram(path).map(Some);
    }
    Ok(JointHistogram::parse_json(&text).ok())
}

fn simulate(cli: &Cli, scenario: &Path, output: &Path, frames: Option<u64>, dist: Option<&Path>, pc: Option<&Path>) -> Result<()> {
    let mut s = Scenario::load(scenario)?;
    if let Some(f) = frames {
        s.frames = f;
    }
    if let Some(seed) = cli.seed {
        s.seed = seed;
    }
    s.validate()?;
    let out = s.run()?;
    save_histogram(&out.histogram, output)?;
    if let Some(p) = dist {
        save_distribution(&out.distribution, p)?;
    }
    if let Some(p) = pc {
        save_distribution(&out.photocount, p)?;
    }
    let (ms, mi) = out.photocount.means();
    let prov = json!({
        "tool": concat!("nonclass ", env!("CARGO_PKG_VERSION")),
        "scenario": s,
        "n_max": s.grid()?,
        "photocount_means": [ms, mi],
        "photon_means": out.distribution.means(),
    });
    write(&sidecar(output), &serde_json::to_string_pretty(&prov)?)?;
    eprintln!("wrote {} ({} frames, mean counts {ms:.4}, {mi:.4})", output.display(), s.frames);
    Ok(())
}

fn reconstruct(cli: &Cli, cmd: &ReconstructCommand) -> Result<()> {
    match cmd {
        ReconstructCommand::Em { histogram, scenario, output, n_max, max_iter, tol, accelerate } => {
            let h = load_histogram(histogram)?;
            let (ds, di) = Scenario::load(scenario)?.detectors()?;
            let opts = EmOptions { n_max: *n_max, max_iter: *max_iter, tol: *tol, accelerate: *accelerate, ..EmOptions::default() };
            let out = em_reconstruct(&h, &ds, &di, &opts)?;
            save_distribution(&out.distribution, output)?;
            let prov = json!({
                "method": "em",
                "options": opts,
                "iterations": out.iterations,
                "log_likelihood": out.log_likelihood,
                "stop": out.stop,
                "converged": out.converged,
            });
            write(&sidecar(output), &serde_json::to_string_pretty(&prov)?)?;
            eprintln!("EM: {} iterations, stop {:?}, log-likelihood {:.9}", out.iterations, out.stop, out.log_likelihood);
            if !out.converged {
                return Err(Error::Numerical(format!("EM did not converge within {max_iter} iterations")));
            }
            Ok(())
        }
        ReconstructCommand::Calibrate { histogram, scenario, output, params, starts, max_iter } => {
            let h = load_histogram(histogram)?;
            let sc = Scenario::load(scenario)?;
            let (ds, di) = sc.detectors()?;
            let init = CalibrationParams { eta_s: ds.efficiency, eta_i: di.efficiency, twinbeam: sc.twinbeam };
            let mut opts = CalibrationOptions { starts: *starts, max_iter: *max_iter, ..CalibrationOptions::default() };
            if let Some(seed) = cli.seed {
                opts.seed = seed;
            }
            let r = calibrate(&h, &init, &ds, &di, &opts)?;
            save_distribution(&r.distribution, output)?;
            let fit = json!({
                "params": r.params,
                "mean_pairs": r.params.twinbeam.mean_pairs(),
                "residual": r.residual,
                "initial_residual": r.initial_residual,
                "start_residuals": r.start_residuals,
                "at_bounds": r.at_bounds,
                "evaluations": r.evaluations,
                "n_max": r.n_max,
            });
            let text = serde_json::to_string_pretty(&fit)?;
            match params {
                Some(p) => write(p, &text)?,
                None => println!("{text}"),
            }
            Ok(())
        }
    }
}

fn analyze(cli: &Cli, a: &AnalyzeArgs) -> Result<()> {
    if cli.k_order > MAX_ORDER {
        return Err(Error::OrderTooLarge(cli.k_order, MAX_ORDER));
    }
    let families = match &a.families {
        Some(list) => parse_families(list)?,
        None => Vec::new(),
    };
    let convention = match a.convention {
        Convention::IntensityNoise => OrderingConvention::IntensityNoise,
        Convention::Laguerre => OrderingConvention::Laguerre,
    };
    let ncd = (!a.no_ncd).then_some(NcdOptions { tau_max: a.tau_max, convention, ..NcdOptions::default() });
    let config = AnalysisConfig { order: cli.k_order, families, include_redundant: a.include_redundant, ncd };
    let input = Some(a.input.display().to_string());

    let report = match load_any_histogram(&a.input)? {
        Some(h) => {
            let reconstruction = match a.reconstruct {
                Method::Direct => Reconstruction::Direct,
                method => {
                    let path = a.scenario.as_ref().ok_or_else(|| {
                        Error::Invalid("--scenario is required for em and calibrate reconstructions".into())
                    })?;
                    let sc = Scenario::load(path)?;
                    let (ds, di) = sc.detectors()?;
                    match method {
                        Method::Em => Reconstruction::Em { detector_s: ds, detector_i: di, options: EmOptions::default() },
                        _ => Reconstruction::Calibrate {
                            detector_s: ds,
                            detector_i: di,
                            init: CalibrationParams { eta_s: ds.efficiency, eta_i: di.efficiency, twinbeam: sc.twinbeam },
                            options: CalibrationOptions { seed: cli.seed.unwrap_or(CalibrationOptions::default().seed), ..CalibrationOptions::default() },
                        },
                    }
                }
            };
            let boot = a.bootstrap.map(|replicas| BootstrapConfig { replicas, seed: cli.seed.unwrap_or(0) });
            analyze_histogram(&h, &Pipeline { reconstruction, config }, boot, input)?
        }
        None => {
            if a.bootstrap.is_some() {
                return Err(Error::Invalid("bootstrap needs a histogram input".into()));
            }
            analyze_file_distribution(&load_distribution(&a.input)?, &config, input)?
        }
    };
    match &a.output {
        Some(p) => write(p, &report.to_json())?,
        None => print_stdout(&(report.to_json() + "\n")),
    }
    if let Some(p) = &a.csv {
        write(p, &report::report_csv(&report))?;
    }
    let violated = report.results.iter().filter(|r| r.violated).count();
    eprintln!("{} criteria evaluated, {violated} violated", report.results.len());
    Ok(())
}

fn export(path: &Path, format: ReportFormat, out_dir: &Path) -> Result<()> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let rep = AnalysisReport::parse_json(&text)?;
    let families = report::family_series(&rep);
    let has_f = rep.results.iter().any(|r| r.family == Family::F);
    match format {
        ReportFormat::Csv => {
            write(&out_dir.join("criteria.csv"), &report::report_csv(&rep))?;
            for (fam, rows) in &families {
                write(&out_dir.join(format!("family_{fam}.csv")), &report::family_csv(rows))?;
            }
            if has_f {
                write(&out_dir.join("f_series.csv"), &report::f_series_csv(&rep))?;
            }
        }
        ReportFormat::Svg => {
            for (fam, rows) in &families {
                write(&out_dir.join(format!("family_{fam}.svg")), &report::family_svg(fam, rows))?;
            }
            if has_f {
                write(&out_dir.join("f_series.svg"), &report::f_svg(&rep))?;
            }
        }
    }
    Ok(())
}

fn list_criteria(family: Option<&str>, include_redundant: bool) -> Result<()> {
    let family = family
        .map(|f| Family::parse(f).ok_or_else(|| Error::Invalid(format!("unknown criterion family {f}"))))
        .transpose()?;
    let mut out = String::from("id\tfamily\tscope\torder\tbasis\tformula\n");
    for s in Registry::standard().specs() {
        if family.is_some_and(|f| f != s.family) || (s.redundant && !include_redundant) {
            continue;
        }
        out.push_str(&format!("{}\t{}\t{:?}\t{}\t{:?}\t{}\n", s.id, s.family, s.scope, s.order(), s.basis, s.expr));
    }
    if family.is_none_or(|f| f == Family::F) {
        out.push_str("F_k_l_1\tF\tGlobal\tk+l+2\tdistribution\tpt(k+2,l) + pt(k,l+2) - 2 pt(k+1,l+1)\n");
    }
    print_stdout(&out);
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    if cli.threads == 0 {
        return Err(Error::Invalid("--threads must be at least 1".into()));
    }
    match &cli.command {
        Command::Simulate { scenario, output, frames, distribution, photocount } => {
            simulate(cli, scenario, output, *frames, distribution.as_deref(), photocount.as_deref())
        }
        Command::Reconstruct(cmd) => reconstruct(cli, cmd),
        Command::Analyze(a) => analyze(cli, a),
        Command::Report { report, format, out_dir } => export(report, *format, out_dir),
        Command::Criteria(CriteriaCommand::List { family, include_redundant }) => {
            list_criteria(family.as_deref(), *include_redundant)
        }
        Command::Selftest { tables } => {
            let s = selftest::run(*tables, cli.seed.unwrap_or(1))?;
            println!(
                "{} tables, {} decompositions, {} generating rules: {}",
                s.tables,
                s.identities,
                s.origins,
                if s.passed() { "all hold" } else { "FAILURES" }
            );
            if s.passed() {
                Ok(())
            } else {
                Err(Error::Identity(s.failures.join("; ")))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if cli.verbose { "debug" } else { "warn" }))
        .init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

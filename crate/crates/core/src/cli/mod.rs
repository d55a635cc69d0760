mod config;
mod report;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use chrono::Datelike;
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use mcbc::crossval::{run_crossval, BlockScheme};
use mcbc::evaluation::evaluate_all;
use mcbc::ingest::{parse_station_csv_lenient, write_station_csv};
use mcbc::params::{calibrate, Method, ParamSet};
use mcbc::qc::{run_qc, write_flags_csv, QcFlag};
use mcbc::series::DailySeries;
use mcbc::synth::{generate, SynthSpec};

pub use config::{RunConfig, StationConfig};

#[derive(Debug, Parser)]
#[command(
    name = "mcbc",
    version,
    about = "Bias correction of daily rainfall with Markov-chain aware thresholds"
)]
struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Maximum number of worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Print the fully defaulted configuration and exit.
    #[arg(long)]
    print_default_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Input {
    /// Stitched cross-validation output (`<station>.<method>.crossval.csv`).
    Crossval,
    /// Full-period correction (`<station>.<method>.corrected.csv`).
    Corrected,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Quality-control the gauge records.
    Qc,
    /// Calibrate on the full record and write parameter JSON.
    Calibrate {
        /// Methods to run (comma separated); all four when omitted.
        #[arg(long, value_delimiter = ',')]
        method: Vec<Method>,
    },
    /// Apply stored parameters to the model series.
    Correct {
        /// Methods to run (comma separated); all four when omitted.
        #[arg(long, value_delimiter = ',')]
        method: Vec<Method>,
        /// Parameter file to apply to every station instead of each
        /// station's calibrated file; its method overrides `--method`.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Leave-one-block-out cross-validation.
    Crossval {
        /// Methods to run (comma separated); all four when omitted.
        #[arg(long, value_delimiter = ',')]
        method: Vec<Method>,
    },
    /// Compare raw and corrected series against the gauge.
    Evaluate {
        /// Methods to run (comma separated); all four when omitted.
        #[arg(long, value_delimiter = ',')]
        method: Vec<Method>,
        #[arg(long, value_enum, default_value = "crossval")]
        input: Input,
    },
    /// Write synthetic gauge/model station files and a matching config.
    Synth {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        stations: Option<usize>,
        #[arg(long)]
        years: Option<u32>,
    },
}

pub fn run() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// Result of one station's work.
struct Outcome {
    station: String,
    warnings: Vec<String>,
    error: Option<String>,
}

fn execute(cli: Cli) -> Result<bool> {
    if cli.print_default_config {
        let text = serde_json::to_string_pretty(&RunConfig::default())?;
        match writeln!(std::io::stdout(), "{text}") {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
            _ => return Ok(true),
        }
    }
    let Some(command) = cli.command else {
        bail!("no command given; see --help");
    };
    if let Some(n) = cli.jobs {
        if n == 0 {
            bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")?;
    }
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }

    if let Command::Synth {
        seed,
        stations,
        years,
    } = command
    {
        if let Some(s) = seed {
            cfg.synth.seed = s;
        }
        if let Some(n) = stations {
            cfg.synth.stations = n;
        }
        if let Some(y) = years {
            cfg.synth.years = y;
        }
        cfg.validate()?;
        synth(&cfg)?;
        return Ok(true);
    }

    if cfg.stations.is_empty() {
        bail!("the configuration lists no stations (use --config)");
    }
    std::fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("creating output directory {}", cfg.output_dir.display()))?;
    let methods = |m: Vec<Method>| {
        if m.is_empty() {
            Method::ALL.to_vec()
        } else {
            m
        }
    };
    let shared_params = match &command {
        Command::Correct {
            params: Some(p), ..
        } => Some(read_params(p)?),
        _ => None,
    };

    let outcomes: Vec<Outcome> = cfg
        .stations
        .par_iter()
        .map(|st| {
            let mut warnings = Vec::new();
            let r = match &command {
                Command::Qc => cmd_qc(&cfg, st, &mut warnings),
                Command::Calibrate { method } => {
                    cmd_calibrate(&cfg, st, &methods(method.clone()), &mut warnings)
                }
                Command::Correct { method, .. } => cmd_correct(
                    &cfg,
                    st,
                    &methods(method.clone()),
                    shared_params.as_ref(),
                    &mut warnings,
                ),
                Command::Crossval { method } => {
                    cmd_crossval(&cfg, st, &methods(method.clone()), &mut warnings)
                }
                Command::Evaluate { method, input } => {
                    cmd_evaluate(&cfg, st, &methods(method.clone()), *input, &mut warnings)
                }
                Command::Synth { .. } => unreachable!("handled above"),
            };
            Outcome {
                station: st.name.clone(),
                warnings,
                error: r.err().map(|e| format!("{e:#}")),
            }
        })
        .collect();
    Ok(summarise(&outcomes))
}

const MAX_WARNINGS_SHOWN: usize = 10;

/// Prints warnings and errors to stderr; true when no station failed.
fn summarise(outcomes: &[Outcome]) -> bool {
    let mut ok = true;
    for o in outcomes {
        if !o.warnings.is_empty() {
            eprintln!("{}: {} warning(s)", o.station, o.warnings.len());
            for w in o.warnings.iter().take(MAX_WARNINGS_SHOWN) {
                eprintln!("  warning: {w}");
            }
            if o.warnings.len() > MAX_WARNINGS_SHOWN {
                eprintln!("  ... and {} more", o.warnings.len() - MAX_WARNINGS_SHOWN);
            }
        }
        if let Some(e) = &o.error {
            eprintln!("{}: error: {e}", o.station);
            ok = false;
        }
    }
    ok
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn read_series(path: &Path, warnings: &mut Vec<String>) -> Result<(DailySeries, Vec<QcFlag>)> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let (series, flags) =
        parse_station_csv_lenient(&text).with_context(|| format!("parsing {}", path.display()))?;
    if !flags.is_empty() {
        warnings.push(format!(
            "{}: {} negative value(s) read as missing",
            path.display(),
            flags.len()
        ));
    }
    Ok((series, flags))
}

/// The gauge record after quality control, with every flag raised.
fn load_gauge(
    cfg: &RunConfig,
    st: &StationConfig,
    warnings: &mut Vec<String>,
) -> Result<(DailySeries, Vec<QcFlag>)> {
    let (raw, mut flags) = read_series(&st.gauge, warnings)?;
    let (clean, qc_flags) = run_qc(&raw, &cfg.qc);
    flags.extend(qc_flags);
    flags.sort_by_key(|f| f.date);
    Ok((clean, flags))
}

fn load_model(st: &StationConfig, warnings: &mut Vec<String>) -> Result<DailySeries> {
    Ok(read_series(&st.model, warnings)?.0)
}

fn out_path(cfg: &RunConfig, station: &str, suffix: &str) -> PathBuf {
    cfg.output_dir.join(format!("{station}.{suffix}"))
}

fn params_path(cfg: &RunConfig, station: &str, method: Method) -> PathBuf {
    out_path(cfg, station, &format!("{method}.params.json"))
}

fn read_params(path: &Path) -> Result<ParamSet> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    ParamSet::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_qc(cfg: &RunConfig, st: &StationConfig, warnings: &mut Vec<String>) -> Result<()> {
    let (clean, flags) = load_gauge(cfg, st, warnings)?;
    write(
        &out_path(cfg, &st.name, "clean.csv"),
        &write_station_csv(&clean),
    )?;
    write(
        &out_path(cfg, &st.name, "qcflags.csv"),
        &write_flags_csv(&flags)?,
    )?;
    if !flags.is_empty() {
        warnings.push(format!("{} QC flag(s) raised", flags.len()));
    }
    Ok(())
}

fn prefixed(method: Method, ws: &[String]) -> impl Iterator<Item = String> + '_ {
    ws.iter().map(move |w| format!("{method}: {w}"))
}

fn cmd_calibrate(
    cfg: &RunConfig,
    st: &StationConfig,
    methods: &[Method],
    warnings: &mut Vec<String>,
) -> Result<()> {
    let (gauge, _) = load_gauge(cfg, st, warnings)?;
    let model = load_model(st, warnings)?;
    let mut failed = Vec::new();
    for &m in methods {
        match calibrate(m, &gauge, &model, &cfg.scheme, &cfg.correction()) {
            Ok(p) => {
                warnings.extend(prefixed(m, p.warnings()));
                write(&params_path(cfg, &st.name, m), &p.to_json()?)?;
            }
            Err(e) => failed.push(format!("{m}: {e}")),
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(anyhow!("calibration failed ({})", failed.join("; ")))
    }
}

fn cmd_correct(
    cfg: &RunConfig,
    st: &StationConfig,
    methods: &[Method],
    shared: Option<&ParamSet>,
    warnings: &mut Vec<String>,
) -> Result<()> {
    let model = load_model(st, warnings)?;
    let sets: Vec<ParamSet> = match shared {
        Some(p) => vec![p.clone()],
        None => methods
            .iter()
            .map(|&m| read_params(&params_path(cfg, &st.name, m)).context("run `calibrate` first"))
            .collect::<Result<_>>()?,
    };
    for p in sets {
        let m = p.method();
        let c = p
            .apply(&model, &cfg.scheme)
            .with_context(|| format!("{m}: correction failed"))?;
        warnings.extend(prefixed(m, &c.warnings));
        write(
            &out_path(cfg, &st.name, &format!("{m}.corrected.csv")),
            &write_station_csv(&c.series),
        )?;
    }
    Ok(())
}

fn cmd_crossval(
    cfg: &RunConfig,
    st: &StationConfig,
    methods: &[Method],
    warnings: &mut Vec<String>,
) -> Result<()> {
    let (gauge, _) = load_gauge(cfg, st, warnings)?;
    let model = load_model(st, warnings)?;
    for &m in methods {
        let r = run_crossval(
            &gauge,
            &model,
            m,
            &cfg.blocks,
            &cfg.scheme,
            &cfg.correction(),
        )
        .with_context(|| format!("{m}: cross-validation failed"))?;
        warnings.extend(prefixed(m, &r.warnings));
        write(
            &out_path(cfg, &st.name, &format!("{m}.crossval.csv")),
            &write_station_csv(&r.series),
        )?;
        for (k, fold) in r.folds.iter().enumerate() {
            if let Some(p) = &fold.params {
                write(
                    &out_path(cfg, &st.name, &format!("{m}.fold{}.params.json", k + 1)),
                    &p.to_json()?,
                )?;
            }
        }
    }
    Ok(())
}

fn cmd_evaluate(
    cfg: &RunConfig,
    st: &StationConfig,
    methods: &[Method],
    input: Input,
    warnings: &mut Vec<String>,
) -> Result<()> {
    let (gauge, _) = load_gauge(cfg, st, warnings)?;
    let model = load_model(st, warnings)?;
    let suffix = match input {
        Input::Crossval => "crossval.csv",
        Input::Corrected => "corrected.csv",
    };
    let mut sources = vec![("raw".to_string(), model)];
    for &m in methods {
        let path = out_path(cfg, &st.name, &format!("{m}.{suffix}"));
        if path.exists() {
            let (s, _) = read_series(&path, warnings)?;
            sources.push((m.to_string(), s));
        } else {
            warnings.push(format!("{} not found; {m} not evaluated", path.display()));
        }
    }
    let eval = evaluate_all(&gauge, &sources, &cfg.eval()).context("evaluation failed")?;
    warnings.extend(eval.warnings.iter().cloned());

    let mut calibration = Vec::new();
    for &m in methods.iter().filter(|m| m.is_markov()) {
        let mut sets = Vec::new();
        let full = params_path(cfg, &st.name, m);
        if full.exists() {
            sets.push(("full".to_string(), read_params(&full)?));
        }
        for k in 1..=cfg.blocks.blocks().len() {
            let p = out_path(cfg, &st.name, &format!("{m}.fold{k}.params.json"));
            if p.exists() {
                sets.push((format!("fold{k}"), read_params(&p)?));
            }
        }
        if !sets.is_empty() {
            calibration.push((m, sets));
        }
    }
    let dir = cfg.output_dir.join("eval").join(&st.name);
    for (name, contents) in report::render(&eval, &calibration)? {
        write(&dir.join(name), &contents)?;
    }
    Ok(())
}

fn synth(cfg: &RunConfig) -> Result<()> {
    let out = &cfg.output_dir;
    let mut run = RunConfig {
        output_dir: PathBuf::from("results"),
        synth: cfg.synth.clone(),
        ..RunConfig::default()
    };
    let specs: Vec<(String, SynthSpec)> = (0..cfg.synth.stations)
        .map(|k| {
            let mut spec =
                SynthSpec::seasonal(cfg.synth.years, cfg.synth.seed.wrapping_add(k as u64));
            spec.t_x = cfg.t_x;
            (format!("S{:02}", k + 1), spec)
        })
        .collect();
    let files: Vec<(String, DailySeries, DailySeries)> = specs
        .par_iter()
        .map(|(name, spec)| {
            let (truth, model) = generate(spec)?;
            Ok((name.clone(), truth, model))
        })
        .collect::<mcbc::Result<_>>()?;
    for (name, truth, model) in &files {
        let gauge = PathBuf::from("data").join(format!("{name}.gauge.csv"));
        let model_path = PathBuf::from("data").join(format!("{name}.model.csv"));
        write(&out.join(&gauge), &write_station_csv(truth))?;
        write(&out.join(&model_path), &write_station_csv(model))?;
        run.stations.push(StationConfig {
            name: name.clone(),
            gauge,
            model: model_path,
        });
    }
    if let Some((_, truth, _)) = files.first() {
        let end = truth.end().expect("non-empty synthetic series");
        let k = 4.min((end.year() - truth.start().year() + 1) as usize);
        if k >= 2 {
            run.blocks = BlockScheme::equal_years(truth.start(), end, k)?;
        }
    }
    write(
        &out.join("config.json"),
        &(serde_json::to_string_pretty(&run)? + "\n"),
    )?;
    eprintln!(
        "wrote {} station(s) and {}",
        files.len(),
        out.join("config.json").display()
    );
    Ok(())
}

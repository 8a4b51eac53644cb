use clap::{Args, Parser, Subcommand};
use dfrc_core::harness::{
    emit_plot_data, run_scenario, sweep, Algorithm, ExperimentResult, PlotKind, PlotSource, RowStatus, ScenarioConfig, SweepAxis,
    SweepMetric,
};
use dfrc_core::optimizer::RowNormalization;
use dfrc_core::DfrcError;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "dfrc", version, about = "Outage-constrained DFRC beamforming experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize the radar loss subject to per-user outage constraints.
    RadarCentric(Common),
    /// Minimize the common outage level subject to radar loss bounds.
    CommCentric(Common),
    /// Gaussian randomization around the relaxation, against the penalty method.
    Baseline(Common),
    /// Gaussianity of the trace statistic under dependent errors.
    CltValidate(Common),
    /// Repeat an experiment over values of one parameter.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct Common {
    /// JSON scenario file; missing fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// 10 channel and 200 error realizations.
    #[arg(long)]
    quick: bool,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    print_config: bool,
    /// Row rescaling of baseline candidates.
    #[arg(long, value_parser = parse_row_norm)]
    baseline_row_norm: Option<RowNormalization>,
    #[arg(long)]
    workers: Option<usize>,
    /// Override a config field, e.g. `--set users.gamma_db=[5]`. Repeatable.
    #[arg(long = "set", value_name = "PATH=JSON")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// gamma_db, p_out, K, M or sigma_e2.
    #[arg(long, value_parser = parse_axis)]
    axis: SweepAxis,
    /// Comma-separated axis values.
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    values: Vec<f64>,
    /// Design swept; defaults to the config's algorithm.
    #[arg(long, value_parser = parse_algorithm)]
    algorithm: Option<Algorithm>,
}

fn parse_row_norm(s: &str) -> Result<RowNormalization, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| "expected squared-norm or norm".into())
}

fn parse_axis(s: &str) -> Result<SweepAxis, String> {
    SweepAxis::parse(s).map_err(|e| e.to_string())
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    serde_json::from_value(serde_json::Value::String(s.into()))
        .map_err(|_| "expected radar-centric, comm-centric or baseline".into())
}

fn resolve(c: &Common, algorithm: Option<Algorithm>) -> Result<ScenarioConfig, DfrcError> {
    let mut cfg = match &c.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(a) = algorithm {
        cfg.algorithm = a;
    }
    if c.quick {
        cfg = cfg.quick();
    }
    for o in &c.overrides {
        let (path, value) =
            o.split_once('=').ok_or_else(|| DfrcError::Config(format!("override `{o}` is not PATH=VALUE")))?;
        cfg = cfg.set(path.trim(), value.trim())?;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(n) = c.baseline_row_norm {
        cfg.baseline.row_norm = n;
    }
    if let Some(w) = c.workers {
        cfg.workers = Some(w);
    }
    cfg.resolve()?;
    Ok(cfg)
}

fn write_experiment(r: &ExperimentResult, dir: &Path) -> Result<(), DfrcError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.json"), r.config.to_json_pretty())?;
    fs::write(dir.join("summary.json"), r.summary_json())?;
    if r.config.algorithm == Algorithm::CltValidate {
        emit_plot_data(PlotSource::Experiment(r), PlotKind::Histogram, dir)?;
        emit_plot_data(PlotSource::Experiment(r), PlotKind::KlCurve, dir)?;
        return Ok(());
    }
    r.write_rows_csv(fs::File::create(dir.join("rows.csv"))?)?;
    r.write_timing_csv(fs::File::create(dir.join("timing.csv"))?)?;
    if r.rows.iter().any(|row| row.status == RowStatus::Ok) {
        emit_plot_data(PlotSource::Experiment(r), PlotKind::Beampattern, dir)?;
    }
    Ok(())
}

fn report(r: &ExperimentResult) {
    let a = &r.aggregate;
    if let Some(clt) = &r.clt {
        for p in &clt.points {
            println!("{:>16} N = {:>2}  KL = {:.3e}", p.entry_law.as_str(), p.n, p.kl);
        }
        println!("Gaussian noise floor: {:.3e}", clt.noise_floor);
        return;
    }
    println!("{} of {} realizations succeeded", a.ok_rows, a.rows);
    let show = |name: &str, s: Option<dfrc_core::harness::Stat>| {
        if let Some(s) = s {
            println!("{name:>16}: {:.6} +/- {:.6}", s.mean, s.stderr);
        }
    };
    show("combined loss", a.combined);
    show("beampattern MSE", a.l1);
    show("cross term", a.l2);
    show("penalty loss", a.reference_loss);
    show("sum rate", a.sum_rate);
    show("max outage", a.max_outage);
    show("t*", a.t_star);
    if let Some(l) = r.radar_only_loss {
        println!("{:>16}: {l:.6}", "radar-only loss");
    }
}

fn exit_for(e: &DfrcError) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        DfrcError::Config(_) | DfrcError::Json(_) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn run(cmd: Command) -> Result<ExitCode, DfrcError> {
    let (common, algorithm) = match &cmd {
        Command::RadarCentric(c) => (c, Some(Algorithm::RadarCentric)),
        Command::CommCentric(c) => (c, Some(Algorithm::CommCentric)),
        Command::Baseline(c) => (c, Some(Algorithm::Baseline)),
        Command::CltValidate(c) => (c, Some(Algorithm::CltValidate)),
        Command::Sweep(s) => (&s.common, s.algorithm),
    };
    let cfg = resolve(common, algorithm)?;
    if common.print_config {
        println!("{}", cfg.to_json_pretty());
        return Ok(ExitCode::SUCCESS);
    }
    let out = &common.out;
    if let Command::Sweep(s) = &cmd {
        let table = sweep(&cfg, s.axis, &s.values)?;
        fs::create_dir_all(out)?;
        fs::write(out.join("config.json"), cfg.to_json_pretty())?;
        let mut any = false;
        for (i, p) in table.points.iter().enumerate() {
            match &p.result {
                Ok(r) => {
                    any |= r.aggregate.ok_rows > 0;
                    write_experiment(r, &out.join(format!("point_{i:02}")))?;
                }
                Err(e) => eprintln!("{} = {}: {e}", s.axis.as_str(), p.x),
            }
        }
        if !any {
            eprintln!("error: no sweep point produced a successful realization");
            return Ok(ExitCode::from(3));
        }
        emit_plot_data(PlotSource::Sweep(&table), PlotKind::SweepCurve, out)?;
        for (x, m, se) in table.curve(SweepMetric::Combined) {
            println!("{} = {x}: combined loss {m:.6} +/- {se:.6}", s.axis.as_str());
        }
        for (x, m, se) in table.curve(SweepMetric::TStar) {
            println!("{} = {x}: t* {m:.6} +/- {se:.6}", s.axis.as_str());
        }
        return Ok(ExitCode::SUCCESS);
    }
    let r = run_scenario(&cfg)?;
    write_experiment(&r, out)?;
    report(&r);
    if r.clt.is_none() && r.aggregate.ok_rows == 0 {
        eprintln!("error: no realization succeeded; see {}", out.join("rows.csv").display());
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    run(cli.command).unwrap_or_else(|e| exit_for(&e))
}

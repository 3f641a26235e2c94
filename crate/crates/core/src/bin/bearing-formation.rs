use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use bearing_formation::certificates::scenario_certificates;
use bearing_formation::io::{
    parse_scenario, render_line_plot, render_trajectory_plot, to_file, write_agents_csv, write_certificates_csv, write_edges_csv,
    write_observer_csv, write_pe_csv, write_svg, Path3, PlotSpec, ScenarioFile, Series,
};
use bearing_formation::observer::{above_floor, fit_exponential_rate, run_observer, ObserverTruth, DEFAULT_SKIP_FRACTION};
use bearing_formation::pe::formation_is_bearing_pe;
use bearing_formation::sim::{simulate, TrajectoryLog};
use bearing_formation::{Error, ErrorClass, Result};

/// Errors below this are treated as converged when fitting decay rates.
const FIT_FLOOR: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(version, about = "Bearing-based leader-follower formation control toolkit")]
struct Cli {
    /// Scenario file
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,

    /// Output directory (created if missing)
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Override the integration step [s]
    #[arg(long, global = true, allow_negative_numbers = true)]
    dt: Option<f64>,

    /// Override the simulated horizon [s]
    #[arg(long = "t-end", global = true, allow_negative_numbers = true)]
    t_end: Option<f64>,

    /// Run every `*.cfg` in this directory in parallel; results go to
    /// `<out>/<file stem>/`
    #[arg(long, global = true, conflicts_with = "scenario")]
    batch: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Subcommand)]
enum Command {
    /// Integrate the closed loop; writes agents.csv and edges.csv
    Simulate,
    /// Run the position observer; writes observer.csv
    Observe {
        /// Where the true motion comes from (default: scenario file, else desired)
        #[arg(long, value_enum)]
        truth: Option<TruthArg>,
    },
    /// Measure persistence of excitation of the desired bearings; writes pe.csv
    CheckPe {
        /// Override the averaging window T [s]
        #[arg(long)]
        window: Option<f64>,
        /// Override the required level mu
        #[arg(long)]
        mu: Option<f64>,
    },
    /// Gain admissibility and stability certificates per follower; writes certificates.csv
    AnalyzeGains,
    /// Simulate and render SVG plots
    Plot {
        #[arg(long, value_enum, default_value = "all")]
        kind: PlotKind,
        /// Linear instead of logarithmic y axis for error plots
        #[arg(long)]
        linear: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TruthArg {
    Desired,
    ClosedLoop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlotKind {
    Errors,
    Lyapunov,
    Trajectories,
    Observer,
    All,
}

struct Outcome {
    lines: Vec<String>,
    error: Option<Error>,
}

impl Outcome {
    fn ok(lines: Vec<String>) -> Self {
        Outcome { lines, error: None }
    }
}

fn load(path: &Path, cli: &Cli) -> Result<ScenarioFile> {
    let mut file = parse_scenario(path)?;
    if cli.dt.is_some() || cli.t_end.is_some() {
        let s = &file.scenario;
        file.scenario = s.with_timing(cli.dt.unwrap_or(s.dt), cli.t_end.unwrap_or(s.t_end))?;
    }
    Ok(file)
}

fn run(path: &Path, out: &Path, cli: &Cli) -> Outcome {
    match load(path, cli).and_then(|file| {
        std::fs::create_dir_all(out).map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;
        dispatch(&cli.command, &file, out)
    }) {
        Ok(o) => o,
        Err(e) => Outcome { lines: Vec::new(), error: Some(e) },
    }
}

fn dispatch(command: &Command, file: &ScenarioFile, out: &Path) -> Result<Outcome> {
    match command {
        Command::Simulate => cmd_simulate(file, out),
        Command::Observe { truth } => cmd_observe(file, out, *truth),
        Command::CheckPe { window, mu } => cmd_check_pe(file, out, *window, *mu),
        Command::AnalyzeGains => cmd_analyze_gains(file, out),
        Command::Plot { kind, linear } => cmd_plot(file, out, *kind, !*linear),
    }
}

fn violation_error(log: &TrajectoryLog) -> Option<Error> {
    log.violation.as_ref().map(|v| Error::SeparationViolated { i: v.i, j: v.j, t: v.t, dist: v.dist })
}

fn cmd_simulate(file: &ScenarioFile, out: &Path) -> Result<Outcome> {
    let log = simulate(&file.scenario)?;
    to_file(out.join("agents.csv"), |w| write_agents_csv(&log, w))?;
    to_file(out.join("edges.csv"), |w| write_edges_csv(&log, w))?;
    let t = log.times.last().copied().unwrap_or(0.0);
    let mut lines = vec![format!("simulated {} steps to t = {t} s", log.times.len().saturating_sub(1))];
    for e in &log.edges {
        let first = e.err_x.first().copied().unwrap_or(f64::NAN);
        let last = e.err_x.last().copied().unwrap_or(f64::NAN);
        lines.push(format!("edge ({}, {}): |x~| {first:.6e} -> {last:.6e}", e.i, e.j));
    }
    Ok(Outcome { lines, error: violation_error(&log) })
}

fn cmd_observe(file: &ScenarioFile, out: &Path, truth: Option<TruthArg>) -> Result<Outcome> {
    let mut settings = file.observer_or_default();
    if let Some(t) = truth {
        settings.truth = match t {
            TruthArg::Desired => ObserverTruth::Desired,
            TruthArg::ClosedLoop => ObserverTruth::ClosedLoop,
        };
    }
    let scn = &file.scenario;
    let log = run_observer(scn, &settings.config())?;
    to_file(out.join("observer.csv"), |w| write_observer_csv(&log, w))?;
    let mut lines = vec![format!("observer ran {} steps to t = {} s", log.times.len() - 1, log.times.last().copied().unwrap_or(0.0))];
    for a in scn.graph.agents().filter(|&a| a != scn.leader()) {
        let series = log.error_series(a);
        let (e0, e1) = (series[0].1, series[series.len() - 1].1);
        let fit = fit_exponential_rate(above_floor(&series, FIT_FLOOR), DEFAULT_SKIP_FRACTION)
            .map(|f| format!("rate {:.6e} 1/s (r2 {:.6})", f.rate, f.r_squared))
            .unwrap_or_else(|e| format!("no rate ({e})"));
        lines.push(format!("agent {a}: |p~| {e0:.6e} -> {e1:.6e}, {fit}"));
    }
    Ok(Outcome::ok(lines))
}

fn cmd_check_pe(file: &ScenarioFile, out: &Path, window: Option<f64>, mu: Option<f64>) -> Result<Outcome> {
    let pe = &file.pe;
    let window = window.unwrap_or(pe.window);
    let horizon = pe.horizon.max(window);
    let report = formation_is_bearing_pe(&file.scenario.graph, &file.scenario.desired, window, mu.unwrap_or(pe.mu), horizon, pe.dt)?;
    to_file(out.join("pe.csv"), |w| write_pe_csv(&report, w))?;
    let mut lines = vec![format!(
        "bearing PE over T = {window} s at mu = {}: {} (margin {:.6e}, quadrature error ~{:.1e})",
        report.mu_requested,
        if report.is_pe { "yes" } else { "no" },
        report.mu_star,
        report.quadrature_error.unwrap_or(0.0)
    )];
    for a in &report.per_agent {
        lines.push(format!("agent {}: margin {:.6e} ({})", a.agent, a.mu_star, if a.is_pe { "PE" } else { "not PE" }));
    }
    Ok(Outcome::ok(lines))
}

fn cmd_analyze_gains(file: &ScenarioFile, out: &Path) -> Result<Outcome> {
    let pe = &file.pe;
    let certs = scenario_certificates(&file.scenario, pe.window, pe.horizon, pe.dt)?;
    to_file(out.join("certificates.csv"), |w| write_certificates_csv(&certs, w))?;
    let mut lines = Vec::new();
    for ((f, inp), c) in certs.followers.iter().zip(&certs.inputs).zip(&certs.cascade.c_rates) {
        lines.push(format!(
            "agent {} (m = {}, kp = {}, kd = {}): gamma {:.6e}, c {:.6e}, mu {:.6e}, rate {:.6e} 1/s, cascade rate {:.6e} 1/s, envelope x{:.6}",
            f.agent, f.m, inp.gains.kp, inp.gains.kd, f.gamma.gamma, f.cascade.c, f.rate.mu, f.rate.rate, c, f.rate.envelope_coeff
        ));
    }
    Ok(Outcome::ok(lines))
}

fn cmd_plot(file: &ScenarioFile, out: &Path, kind: PlotKind, log_y: bool) -> Result<Outcome> {
    let want = |k: PlotKind| kind == k || (kind == PlotKind::All && k != PlotKind::Observer);
    let mut lines = Vec::new();
    let scn = &file.scenario;
    if want(PlotKind::Errors) || want(PlotKind::Lyapunov) || want(PlotKind::Trajectories) {
        let log = simulate(scn)?;
        if want(PlotKind::Errors) {
            let series: Vec<Series> = log
                .edges
                .iter()
                .map(|e| Series { label: format!("|x~_{}{}|", e.i, e.j), points: log.times.iter().copied().zip(e.err_x.iter().copied()).collect() })
                .collect();
            let spec = PlotSpec::new("Relative state errors", "t [s]", "error norm").log_y(log_y);
            write_svg(out.join("errors.svg"), &render_line_plot(&series, &spec)?)?;
            lines.push(format!("wrote {}", out.join("errors.svg").display()));
        }
        if want(PlotKind::Lyapunov) {
            let series: Vec<Series> = log
                .edges
                .iter()
                .map(|e| Series { label: format!("L_{}{}", e.i, e.j), points: log.times.iter().copied().zip(e.lyapunov.iter().copied()).collect() })
                .collect();
            let spec = PlotSpec::new("Lyapunov functions", "t [s]", "L").log_y(log_y);
            write_svg(out.join("lyapunov.svg"), &render_line_plot(&series, &spec)?)?;
            lines.push(format!("wrote {}", out.join("lyapunov.svg").display()));
        }
        if want(PlotKind::Trajectories) {
            let mut paths = Vec::new();
            for a in scn.graph.agents() {
                let desired: Vec<_> = log.times.iter().map(|&t| scn.desired.state(a.index(), t).p).collect();
                let actual: Vec<_> = log.states.iter().map(|s| s[a.index()].p).collect();
                paths.push(Path3 { label: format!("desired {a}"), points: desired, desired: true });
                paths.push(Path3 { label: format!("agent {a}"), points: actual, desired: false });
            }
            let spec = PlotSpec::new("3-D trajectories", "", "");
            write_svg(out.join("trajectories.svg"), &render_trajectory_plot(&paths, &spec)?)?;
            lines.push(format!("wrote {}", out.join("trajectories.svg").display()));
        }
        if let Some(e) = violation_error(&log) {
            return Ok(Outcome { lines, error: Some(e) });
        }
    }
    if want(PlotKind::Observer) {
        let log = run_observer(scn, &file.observer_or_default().config())?;
        let series: Vec<Series> = scn
            .graph
            .agents()
            .filter(|&a| a != scn.leader())
            .map(|a| Series { label: format!("|p~_{a}|"), points: log.error_series(a) })
            .collect();
        let spec = PlotSpec::new("Position estimation errors", "t [s]", "error norm").log_y(log_y);
        write_svg(out.join("observer.svg"), &render_line_plot(&series, &spec)?)?;
        lines.push(format!("wrote {}", out.join("observer.svg").display()));
    }
    Ok(Outcome::ok(lines))
}

fn error_line(e: &Error) -> String {
    let class = match e.class() {
        ErrorClass::Validation => "validation",
        ErrorClass::Runtime => "runtime",
    };
    format!("error[{class}]: {}", e.to_string().replace('\n', " "))
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Validation => 1,
        ErrorClass::Runtime => 2,
    }
}

fn batch_inputs(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "cfg"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::InvalidArgument(format!("no .cfg files in {}", dir.display())));
    }
    Ok(files)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error[validation]: {first}");
            return ExitCode::from(1);
        }
    };

    if let Some(dir) = &cli.batch {
        let files = match batch_inputs(dir) {
            Ok(f) => f,
            Err(e) => {
                eprintln!("{}", error_line(&e));
                return ExitCode::from(exit_code(&e));
            }
        };
        let outcomes: Vec<(String, Outcome)> = std::thread::scope(|s| {
            let handles: Vec<_> = files
                .iter()
                .map(|f| {
                    let stem = f.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                    let out = cli.out.join(&stem);
                    let cli = &cli;
                    (stem, s.spawn(move || run(f, &out, cli)))
                })
                .collect();
            handles.into_iter().map(|(stem, h)| (stem, h.join().expect("batch worker panicked"))).collect()
        });
        let mut code = 0;
        for (stem, o) in outcomes {
            for l in &o.lines {
                println!("[{stem}] {l}");
            }
            if let Some(e) = &o.error {
                eprintln!("{} ({stem})", error_line(e));
                code = code.max(exit_code(e));
            }
        }
        return ExitCode::from(code);
    }

    let Some(path) = cli.scenario.clone() else {
        eprintln!("error[validation]: one of --scenario or --batch is required");
        return ExitCode::from(1);
    };
    let o = run(&path, &cli.out, &cli);
    for l in &o.lines {
        println!("{l}");
    }
    match &o.error {
        None => ExitCode::SUCCESS,
        Some(e) => {
            eprintln!("{}", error_line(e));
            ExitCode::from(exit_code(e))
        }
    }
}

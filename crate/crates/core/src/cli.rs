//! Command-line front end. Each command renders its output to a string so the
//! same code paths serve the binary and the tests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::Value;

use crate::config::{ProtocolConfig, RunConfig};
use crate::eigen::diagonalize;
use crate::error::{Error, Result};
use crate::format::sig12;
use crate::hamiltonian::build_hamiltonian;
use crate::levels::{endor_frequencies_merged, epr_lines, thermal_populations, EnergyLevels, ENDOR_MERGE_MHZ};
use crate::metrics::{metrics, Metrics};
use crate::population::PopulationState;
use crate::protocols::{ponsee_cw, ponsepe, run, RunOptions, Trajectory};
use crate::spectra::{component_areas, epr_components, simulate_epr, EprOptions};
use crate::spin::{HalfInt, Label};

pub const THREADS_ENV: &str = "DNP_KINETICS_THREADS";

#[derive(Debug, Parser)]
#[command(name = "dnp-kinetics", version, about = "Electron-nuclear spin level kinetics for DNP")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Energy levels with (mS, mI) labels.
    Levels(CommonArgs),
    /// ENDOR line frequencies per electron projection.
    Endor(CommonArgs),
    /// Field-swept EPR spectrum of the thermal state or a state file.
    Epr(CommonArgs),
    /// Run the configured protocol and write its trajectory.
    Protocol(CommonArgs),
    /// Run the configured protocol over a grid of one parameter.
    Sweep(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `epr`: population state to render. `protocol`: where to write the final state.
    #[arg(long)]
    pub state: Option<PathBuf>,
    /// `sweep`: dotted path of the config value to vary, e.g. `protocol.duration_s`.
    #[arg(long)]
    pub param: Option<String>,
    /// `sweep`: comma-separated values.
    #[arg(long)]
    pub grid: Option<String>,
}

/// Runs the CLI and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            report(&Error::Config(first.trim_start_matches("error: ").to_string()));
            return 2;
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            report(&e);
            e.exit_code()
        }
    }
}

/// One machine-parsable line on standard error.
fn report(e: &Error) {
    let message = e.to_string().replace(['\n', '\r'], " ");
    eprintln!(
        "error class={} kind={} code={} message={:?}",
        e.class().name(),
        e.kind(),
        e.exit_code(),
        message
    );
}

fn execute(command: &Command) -> Result<()> {
    let args = match command {
        Command::Levels(a) | Command::Endor(a) | Command::Epr(a) | Command::Protocol(a) | Command::Sweep(a) => a,
    };
    let config = RunConfig::load(&args.config)?;
    let text = match command {
        Command::Levels(_) => cmd_levels(&config)?,
        Command::Endor(_) => cmd_endor(&config)?,
        Command::Epr(_) => {
            let rows = args.state.as_deref().map(read_state_file).transpose()?;
            cmd_epr_rows(&config, rows.as_ref())?
        }
        Command::Protocol(_) => {
            let (csv, final_state) = cmd_protocol(&config)?;
            if let Some(path) = args.state.as_ref().or(config.output.final_state.as_ref()) {
                write_file(path, &final_state)?;
            }
            csv
        }
        Command::Sweep(_) => {
            let param = args
                .param
                .as_deref()
                .ok_or_else(|| Error::Config("sweep needs --param".into()))?;
            let grid = args
                .grid
                .as_deref()
                .ok_or_else(|| Error::Config("sweep needs --grid".into()))?;
            let value = read_config_value(&args.config)?;
            cmd_sweep(&value, param, &parse_grid(grid)?, sweep_threads()?)?
        }
    };
    match args.out.as_ref().or(config.output.out.as_ref()) {
        Some(path) => write_file(path, &text),
        None => {
            use std::io::Write;
            // A closed pipe (e.g. `| head`) is not an error for the producer.
            match std::io::stdout().lock().write_all(text.as_bytes()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::Io {
                    path: "<stdout>".into(),
                    source: e,
                }),
                _ => Ok(()),
            }
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read_config_value(path: &Path) -> Result<Value> {
    serde_json::from_str(&read_text(path)?).map_err(|e| Error::Config(e.to_string()))
}

fn sweep_threads() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(None),
    }
}

fn quantum(h: HalfInt) -> String {
    format!("{}", h.value())
}

/// `level,ms,mi,energy_MHz`. At zero field the product labels are not good
/// quantum numbers, so the label columns are left empty.
pub fn cmd_levels(cfg: &RunConfig) -> Result<String> {
    let sys = cfg.spin_system()?;
    let mut out = String::from("level,ms,mi,energy_MHz\n");
    if cfg.field_t == 0.0 {
        let eig = diagonalize(&build_hamiltonian(&sys, 0.0)?)?;
        for (k, e) in eig.values.iter().enumerate() {
            let _ = writeln!(out, "{k},,,{}", sig12(*e));
        }
        return Ok(out);
    }
    let levels = EnergyLevels::compute(&sys, cfg.field_t)?;
    for (k, (e, l)) in levels.energies().iter().zip(levels.labels()).enumerate() {
        let _ = writeln!(out, "{k},{},{},{}", quantum(l.ms), quantum(l.mi), sig12(*e));
    }
    Ok(out)
}

/// `ms,frequency_MHz,multiplicity`, mS descending.
pub fn cmd_endor(cfg: &RunConfig) -> Result<String> {
    let levels = cfg.levels()?;
    let mut out = String::from("ms,frequency_MHz,multiplicity\n");
    for (ms, lines) in endor_frequencies_merged(&levels, ENDOR_MERGE_MHZ)?.into_iter().rev() {
        for l in lines {
            let _ = writeln!(out, "{},{},{}", quantum(ms), sig12(l.frequency), l.multiplicity);
        }
    }
    Ok(out)
}

fn epr_options(cfg: &RunConfig, levels: &EnergyLevels, microwave: f64) -> Result<EprOptions> {
    let s = &cfg.spectrum;
    let range = match s.field_range_mt {
        Some(r) => r,
        None => {
            let fields: Vec<f64> = epr_lines(levels.system(), microwave)?.iter().map(|l| l.field * 1e3).collect();
            let pad = 10.0 * s.linewidth_mt;
            let lo = fields.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = fields.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo - pad, hi + pad)
        }
    };
    Ok(EprOptions {
        field_range_mt: range,
        n_points: s.n_points,
        linewidth_mt: s.linewidth_mt,
        shape: s.shape,
        derivative: s.derivative,
        amplitude: s.amplitude,
    })
}

/// EPR spectrum CSV of `state` (thermal when `None`), with the recovered
/// component area fractions as metadata.
pub fn cmd_epr(cfg: &RunConfig, state: Option<&PopulationState>) -> Result<String> {
    let levels = cfg.levels()?;
    let thermal;
    let p = match state {
        Some(p) => p,
        None => {
            thermal = thermal_populations(&levels, cfg.temperature_k)?;
            &thermal
        }
    };
    let microwave = cfg.microwave(levels.system())?;
    let opts = epr_options(cfg, &levels, microwave)?;
    let spec = simulate_epr(&levels, p, microwave, &opts)?;
    let components = epr_components(&levels, p, microwave, opts.amplitude)?;
    let centers: Vec<f64> = components.iter().map(|c| c.0).collect();
    let mut extra = vec![("microwave_MHz".to_string(), sig12(microwave))];
    let lines = epr_lines(levels.system(), microwave)?;
    let areas = component_areas(&spec, &centers);
    for (k, line) in lines.iter().enumerate() {
        let mi = quantum(line.mi);
        extra.push((format!("center_mT_mI={mi}"), sig12(centers[k])));
        if let Ok(a) = &areas {
            extra.push((format!("area_fraction_mI={mi}"), sig12(a[k])));
        }
    }
    Ok(spec.to_csv_with(&extra))
}

/// A protocol run with its reference thermal state.
pub struct ProtocolRun {
    pub levels: EnergyLevels,
    pub thermal: PopulationState,
    pub trajectory: Trajectory,
    pub kind: &'static str,
    pub target: Option<HalfInt>,
}

impl ProtocolRun {
    pub fn final_metrics(&self) -> Result<Metrics> {
        metrics(self.trajectory.final_state(), &self.levels, &self.thermal)
    }
}

pub fn run_protocol(cfg: &RunConfig) -> Result<ProtocolRun> {
    let protocol = cfg
        .protocol
        .as_ref()
        .ok_or_else(|| Error::Config("config has no protocol".into()))?;
    let levels = cfg.levels()?;
    let model = cfg.rate_model()?;
    let thermal = thermal_populations(&levels, cfg.temperature_k)?;
    let opts = RunOptions {
        points_per_step: cfg.sampling.points_per_step,
    };
    let sys = *levels.system();
    let (trajectory, kind, target) = match protocol {
        ProtocolConfig::PonseeCw {
            target_mi,
            rate_w_per_s,
            duration_s,
        } => {
            let target = cfg.resolve_target(*target_mi, &sys)?;
            let rate = rate_w_per_s.unwrap_or_else(|| cfg.ideal_rate());
            (ponsee_cw(&levels, &model, target, rate, *duration_s, opts)?, "ponsee_cw", Some(target))
        }
        ProtocolConfig::Ponsepe {
            target_mi,
            n_cycles,
            inter_cycle_wait_s,
        } => {
            let target = cfg.resolve_target(*target_mi, &sys)?;
            let wait = inter_cycle_wait_s.unwrap_or_else(|| cfg.default_wait());
            (ponsepe(&levels, &model, target, *n_cycles, wait, opts)?, "ponsepe", Some(target))
        }
        ProtocolConfig::Steps { steps } => (run(&levels, &model, steps, &thermal, opts)?, "steps", None),
    };
    Ok(ProtocolRun {
        levels,
        thermal,
        trajectory,
        kind,
        target,
    })
}

fn eps_text(m: &Metrics) -> String {
    m.enhancement_eps.map(sig12).unwrap_or_else(|| "NA".to_string())
}

/// Trajectory CSV and the final state CSV.
pub fn cmd_protocol(cfg: &RunConfig) -> Result<(String, String)> {
    let run = run_protocol(cfg)?;
    let levels = &run.levels;
    let mut out = String::new();
    let _ = writeln!(out, "# protocol={}", run.kind);
    if let Some(t) = run.target {
        let _ = writeln!(out, "# target_mI={}", quantum(t));
    }
    let _ = writeln!(out, "# clipped={}", run.trajectory.clipped);
    out.push_str("time_s");
    for k in 0..levels.len() {
        let _ = write!(out, ",pop_{k}");
    }
    for mi in levels.system().nuclear_spin().projections() {
        let _ = write!(out, ",frac_mI={}", quantum(mi));
    }
    out.push_str(",P_n,P_e,eps\n");
    let mut last = None;
    for (t, p) in run.trajectory.times.iter().zip(&run.trajectory.states) {
        let m = metrics(p, levels, &run.thermal)?;
        out.push_str(&sig12(*t));
        for x in p.as_slice() {
            let _ = write!(out, ",{}", sig12(*x));
        }
        for (_, f) in &m.manifold_fractions {
            let _ = write!(out, ",{}", sig12(*f));
        }
        let _ = writeln!(
            out,
            ",{},{},{}",
            sig12(m.nuclear_polarization),
            sig12(m.electron_polarization),
            eps_text(&m)
        );
        last = Some(m);
    }
    let m = last.expect("trajectory is non-empty");
    let _ = writeln!(
        out,
        "# final time_s={} P_n={} P_e={} eps={}",
        sig12(run.trajectory.final_time()),
        sig12(m.nuclear_polarization),
        sig12(m.electron_polarization),
        eps_text(&m)
    );
    Ok((out, state_csv(run.trajectory.final_state(), levels)))
}

/// `level,ms,mi,population`.
pub fn state_csv(p: &PopulationState, levels: &EnergyLevels) -> String {
    let mut out = String::from("level,ms,mi,population\n");
    for (k, (x, l)) in p.as_slice().iter().zip(levels.labels()).enumerate() {
        let _ = writeln!(out, "{k},{},{},{}", quantum(l.ms), quantum(l.mi), sig12(*x));
    }
    out
}

/// Rows of a state file as (label, population); the level column is ignored
/// in favour of the labels.
pub fn parse_state_csv(text: &str) -> Result<Vec<(Label, f64)>> {
    let bad = |line: usize, what: &str| Error::Config(format!("state file line {line}: {what}"));
    let mut rows = Vec::new();
    let mut header_seen = false;
    for (n, line) in text.lines().enumerate().map(|(n, l)| (n + 1, l.trim())) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            if line != "level,ms,mi,population" {
                return Err(bad(n, "expected header level,ms,mi,population"));
            }
            header_seen = true;
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 4 {
            return Err(bad(n, "expected 4 columns"));
        }
        let half = |s: &str| {
            s.parse::<f64>()
                .ok()
                .and_then(HalfInt::from_f64)
                .ok_or_else(|| bad(n, "invalid quantum number"))
        };
        let pop: f64 = cols[3].parse().map_err(|_| bad(n, "invalid population"))?;
        rows.push((Label::new(half(cols[1])?, half(cols[2])?), pop));
    }
    Ok(rows)
}

/// Maps state rows onto the level order of `levels`.
pub fn state_from_rows(rows: &[(Label, f64)], levels: &EnergyLevels) -> Result<PopulationState> {
    if rows.len() != levels.len() {
        return Err(Error::DimensionMismatch {
            expected: levels.len(),
            got: rows.len(),
        });
    }
    let mut p = vec![f64::NAN; levels.len()];
    for &(label, x) in rows {
        let k = levels.index_of(label)?;
        if !p[k].is_nan() {
            return Err(Error::Config(format!("state file lists {label} twice")));
        }
        p[k] = x;
    }
    PopulationState::new(p)
}

fn read_state_file(path: &Path) -> Result<Vec<(Label, f64)>> {
    parse_state_csv(&read_text(path)?)
}

/// [`cmd_epr`] for state-file rows.
pub fn cmd_epr_rows(cfg: &RunConfig, rows: Option<&Vec<(Label, f64)>>) -> Result<String> {
    match rows {
        Some(rows) => cmd_epr(cfg, Some(&state_from_rows(rows, &cfg.levels()?)?)),
        None => cmd_epr(cfg, None),
    }
}

/// Grid tokens as JSON values; bare words such as `inf` become strings.
pub fn parse_grid(grid: &str) -> Result<Vec<(String, Value)>> {
    let tokens: Vec<String> = grid.split(',').map(|t| t.trim().to_string()).collect();
    if tokens.iter().any(|t| t.is_empty()) {
        return Err(Error::Config(format!("empty entry in grid {grid:?}")));
    }
    Ok(tokens
        .into_iter()
        .map(|t| {
            let v = serde_json::from_str(&t).unwrap_or_else(|_| Value::String(t.clone()));
            (t, v)
        })
        .collect())
}

/// Sets `path` (dot-separated object keys) in `doc`. The parent object must
/// exist; the final key may be new.
pub fn set_dotted(doc: &mut Value, path: &str, value: Value) -> Result<()> {
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("invalid parameter path {path:?}")));
    }
    let (last, parents) = keys.split_last().expect("split yields one key");
    let mut node = doc;
    for key in parents {
        node = node
            .get_mut(*key)
            .ok_or_else(|| Error::Config(format!("parameter path {path:?}: no key {key:?}")))?;
    }
    let obj = node
        .as_object_mut()
        .ok_or_else(|| Error::Config(format!("parameter path {path:?} does not lead to an object")))?;
    obj.insert((*last).to_string(), value);
    Ok(())
}

/// One final-metrics row per grid value, in grid order.
pub fn cmd_sweep(base: &Value, param: &str, grid: &[(String, Value)], threads: Option<usize>) -> Result<String> {
    let configs: Vec<RunConfig> = grid
        .iter()
        .map(|(_, v)| {
            let mut doc = base.clone();
            set_dotted(&mut doc, param, v.clone())?;
            RunConfig::from_value(doc)
        })
        .collect::<Result<_>>()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<Result<(ProtocolRun, Metrics)>> = pool.install(|| {
        configs
            .par_iter()
            .map(|c| {
                let run = run_protocol(c)?;
                let m = run.final_metrics()?;
                Ok((run, m))
            })
            .collect()
    });

    let mut out = String::new();
    let mut header_done = false;
    for ((token, _), result) in grid.iter().zip(results) {
        let (run, m) = result?;
        if !header_done {
            let _ = write!(out, "{param},final_time_s,P_n,P_e,eps");
            for (mi, _) in &m.manifold_fractions {
                let _ = write!(out, ",frac_mI={}", quantum(*mi));
            }
            out.push('\n');
            header_done = true;
        }
        let _ = write!(
            out,
            "{token},{},{},{},{}",
            sig12(run.trajectory.final_time()),
            sig12(m.nuclear_polarization),
            sig12(m.electron_polarization),
            eps_text(&m)
        );
        for (_, f) in &m.manifold_fractions {
            let _ = write!(out, ",{}", sig12(*f));
        }
        out.push('\n');
    }
    Ok(out)
}

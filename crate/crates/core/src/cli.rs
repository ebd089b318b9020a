//! Command-line front end: `evolve`, `death-time`, `classify` and `sweep`.
//!
//! Every numeric option can also come from a JSON config file (`--config`); flags win over the
//! file, which wins over built-in defaults. Exit codes: 0 ok, 2 usage or parse error, 3 runtime.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Deserialize;

use crate::channels::{AsymptoticSet, ChannelSpec};
use crate::classify::{self, ScenarioLabel};
use crate::dynamics::{self, DeathReport, DynamicsError};
use crate::state::{DensityMatrix, StateLiteral, Tolerances, XState};

const DEFAULT_HORIZON_RATE_UNITS: f64 = 50.0;
const DEFAULT_SAMPLES: usize = 100;
const RETAINED_SAMPLES: usize = 2000;

#[derive(Debug, Parser)]
#[command(
    name = "esd",
    version,
    about = "Two-qubit entanglement sudden death simulator and reservoir classifier"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve one state and write its trajectory as CSV.
    Evolve {
        #[command(flatten)]
        common: Common,
        /// Keep every n-th grid point (default: about 2000 rows).
        #[arg(long)]
        sample_every: Option<usize>,
    },
    /// Decide finite, asymptotic or no disentanglement and write a JSON report.
    DeathTime {
        #[command(flatten)]
        common: Common,
    },
    /// Classify a reservoir (or an explicit set of asymptotic states) and write JSON.
    Classify {
        #[command(flatten)]
        common: Common,
        /// JSON file `{"states": ["<literal>", ...]}` used instead of --channel.
        #[arg(long)]
        set_file: Option<PathBuf>,
        /// Random members drawn from continuous asymptotic families.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Death reports over a grid of initial states, written as CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// `param=start:stop:n`; repeat for a cartesian grid.
        #[arg(long)]
        grid: Vec<String>,
        /// State family: `pure` (a), `werner` (b) or `x` (a,b,c,d,w,z around --state).
        #[arg(long)]
        family: Option<String>,
    },
}

#[derive(Debug, Args, Clone)]
struct Common {
    /// `decay:γA,γB,n̄` | `dephase:κA,κB` | `collective:κ` | `custom:<path>`
    #[arg(long)]
    channel: Option<String>,
    /// `x:a,b,c,d,w_re,w_im,z_re,z_im` or `dense:<16 re:im entries>`
    #[arg(long)]
    state: Option<String>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    eps_death: Option<f64>,
    #[arg(long)]
    eps_trace: Option<f64>,
    #[arg(long)]
    eps_psd: Option<f64>,
    #[arg(long)]
    eps_ent: Option<f64>,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file with defaults for any of these options.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads for sweeps and sampling (default: all processors).
    #[arg(long)]
    jobs: Option<usize>,
}

/// Contents of a `--config` file. Keys mirror the long flags with `_` for `-`.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub channel: Option<String>,
    pub state: Option<String>,
    pub horizon: Option<f64>,
    pub dt: Option<f64>,
    pub seed: Option<u64>,
    pub eps_death: Option<f64>,
    pub eps_trace: Option<f64>,
    pub eps_psd: Option<f64>,
    pub eps_ent: Option<f64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub sample_every: Option<usize>,
    pub samples: Option<usize>,
    pub set_file: Option<PathBuf>,
    pub grid: Option<Vec<String>>,
    pub family: Option<String>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => m,
        }
    }
}

fn usage(field: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("{field}: {e}"))
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

impl Common {
    /// Fills unset flags from the config file.
    fn merge(mut self) -> Result<(Self, RunConfig), CliError> {
        let cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| usage("--config", format!("{}: {e}", path.display())))?;
                serde_json::from_str::<RunConfig>(&text).map_err(|e| usage("--config", e))?
            }
            None => RunConfig::default(),
        };
        self.channel = self.channel.or_else(|| cfg.channel.clone());
        self.state = self.state.or_else(|| cfg.state.clone());
        self.horizon = self.horizon.or(cfg.horizon);
        self.dt = self.dt.or(cfg.dt);
        self.seed = self.seed.or(cfg.seed);
        self.eps_death = self.eps_death.or(cfg.eps_death);
        self.eps_trace = self.eps_trace.or(cfg.eps_trace);
        self.eps_psd = self.eps_psd.or(cfg.eps_psd);
        self.eps_ent = self.eps_ent.or(cfg.eps_ent);
        self.out = self.out.or_else(|| cfg.out.clone());
        self.jobs = self.jobs.or(cfg.jobs);
        Ok((self, cfg))
    }

    fn tolerances(&self) -> Result<Tolerances, CliError> {
        let d = Tolerances::default();
        Tolerances::new(
            self.eps_trace.unwrap_or(d.trace),
            self.eps_psd.unwrap_or(d.psd),
            self.eps_ent.unwrap_or(d.ent),
            self.eps_death.unwrap_or(d.death),
        )
        .map_err(|e| usage("tolerances", e))
    }

    fn channel(&self) -> Result<ChannelSpec, CliError> {
        let literal = self
            .channel
            .as_deref()
            .ok_or_else(|| usage("--channel", "required"))?;
        ChannelSpec::parse(literal).map_err(|e| usage("--channel", e))
    }

    fn state(&self, tol: &Tolerances) -> Result<DensityMatrix, CliError> {
        let literal = self
            .state
            .as_deref()
            .ok_or_else(|| usage("--state", "required"))?;
        StateLiteral::parse(literal, tol)
            .map(StateLiteral::into_density)
            .map_err(|e| usage("--state", e))
    }

    fn horizon(&self, ch: &ChannelSpec) -> Result<f64, CliError> {
        let h = self
            .horizon
            .unwrap_or(DEFAULT_HORIZON_RATE_UNITS / ch.rate());
        if h.is_finite() && h > 0.0 {
            Ok(h)
        } else {
            Err(usage("--horizon", format!("{h} must be positive")))
        }
    }

    fn dt(&self, ch: &ChannelSpec) -> Result<f64, CliError> {
        let dt = self.dt.unwrap_or_else(|| ch.default_dt());
        if dt.is_finite() && dt > 0.0 {
            Ok(dt)
        } else {
            Err(usage("--dt", format!("{dt} must be positive")))
        }
    }

    fn pool(&self) -> Result<rayon::ThreadPool, CliError> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.jobs {
            if n == 0 {
                return Err(usage("--jobs", "must be at least 1"));
            }
            b = b.num_threads(n);
        }
        b.build().map_err(runtime)
    }

    fn emit(&self, bytes: &[u8], stdout: &mut dyn Write) -> Result<(), CliError> {
        match &self.out {
            Some(path) => {
                fs::write(path, bytes).map_err(|e| runtime(format!("{}: {e}", path.display())))
            }
            None => stdout.write_all(bytes).map_err(runtime),
        }
    }
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message());
            e.code()
        }
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Evolve {
            common,
            sample_every,
        } => {
            let (common, cfg) = common.merge()?;
            cmd_evolve(&common, sample_every.or(cfg.sample_every), stdout)
        }
        Command::DeathTime { common } => {
            let (common, _) = common.merge()?;
            cmd_death_time(&common, stdout)
        }
        Command::Classify {
            common,
            set_file,
            samples,
        } => {
            let (common, cfg) = common.merge()?;
            cmd_classify(
                &common,
                set_file.or(cfg.set_file),
                samples.or(cfg.samples).unwrap_or(DEFAULT_SAMPLES),
                stdout,
            )
        }
        Command::Sweep {
            common,
            grid,
            family,
        } => {
            let (common, cfg) = common.merge()?;
            let grid = if grid.is_empty() {
                cfg.grid.unwrap_or_default()
            } else {
                grid
            };
            let family = family.or(cfg.family).unwrap_or_else(|| "x".into());
            cmd_sweep(&common, &grid, &family, stdout)
        }
    }
}

fn cmd_evolve(
    common: &Common,
    sample_every: Option<usize>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let tol = common.tolerances()?;
    let ch = common.channel()?;
    let rho = common.state(&tol)?;
    let horizon = common.horizon(&ch)?;
    let dt = common.dt(&ch)?;
    let steps = (horizon / dt).ceil() as usize;
    let sample_every = match sample_every {
        Some(0) => return Err(usage("--sample-every", "must be at least 1")),
        Some(n) => n,
        None => steps.div_ceil(RETAINED_SAMPLES).max(1),
    };
    let traj = dynamics::simulate(&rho, &ch, horizon, dt, sample_every, &tol).map_err(runtime)?;
    let mut buf = Vec::new();
    traj.write_csv(&mut buf).map_err(runtime)?;
    common.emit(&buf, stdout)
}

fn cmd_death_time(common: &Common, stdout: &mut dyn Write) -> Result<(), CliError> {
    let tol = common.tolerances()?;
    let ch = common.channel()?;
    let rho = common.state(&tol)?;
    let horizon = common.horizon(&ch)?;
    let dt = common.dt(&ch)?;
    let report = dynamics::death_time_with(&rho, &ch, horizon, dt, &tol).map_err(runtime)?;
    common.emit(format!("{}\n", report.to_json()).as_bytes(), stdout)
}

/// Reads `{"states": ["<literal>", ...]}`.
pub fn read_set_file(path: &Path, tol: &Tolerances) -> Result<AsymptoticSet, String> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct SetFile {
        states: Vec<String>,
    }
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let file: SetFile = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let states = file
        .states
        .iter()
        .map(|s| StateLiteral::parse(s, tol).map(StateLiteral::into_density))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    Ok(AsymptoticSet::ExplicitSamples(states))
}

fn cmd_classify(
    common: &Common,
    set_file: Option<PathBuf>,
    samples: usize,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let tol = common.tolerances()?;
    let seed = common.seed.unwrap_or(0);
    let set = match (&set_file, &common.channel) {
        (Some(_), Some(_)) => return Err(usage("--set-file", "conflicts with --channel")),
        (Some(path), None) => read_set_file(path, &tol).map_err(|e| usage("--set-file", e))?,
        (None, _) => crate::channels::asymptotic_set(&common.channel()?).map_err(runtime)?,
    };
    let pool = common.pool()?;
    let label: ScenarioLabel = pool
        .install(|| classify::classify_set(&set, &tol, samples, seed))
        .map_err(runtime)?;
    common.emit(format!("{}\n", label.to_json()).as_bytes(), stdout)
}

/// One axis of a sweep grid, `param=start:stop:n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub param: String,
    pub values: Vec<f64>,
}

impl GridAxis {
    pub fn parse(spec: &str) -> Result<Self, String> {
        let (param, range) = spec
            .split_once('=')
            .ok_or_else(|| format!("{spec:?}: expected param=start:stop:n"))?;
        let parts: Vec<&str> = range.split(':').collect();
        let [start, stop, n] = parts[..] else {
            return Err(format!("{spec:?}: expected param=start:stop:n"));
        };
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| format!("{spec:?}: {s:?}: {e}"))
        };
        let (start, stop) = (num(start)?, num(stop)?);
        let n: usize = n
            .trim()
            .parse()
            .map_err(|e| format!("{spec:?}: {n:?}: {e}"))?;
        if !start.is_finite() || !stop.is_finite() {
            return Err(format!("{spec:?}: bounds must be finite"));
        }
        if n == 0 {
            return Err(format!("{spec:?}: empty grid"));
        }
        let values = if n == 1 {
            vec![start]
        } else {
            let m = (n - 1) as f64;
            (0..n)
                .map(|k| snap(start + (stop - start) * k as f64 / m))
                .collect()
        };
        Ok(Self {
            param: param.trim().to_owned(),
            values,
        })
    }
}

/// Rounds to 15 significant digits so decimal grids print as typed (0.5, not 0.49999999999999994).
fn snap(v: f64) -> f64 {
    format!("{v:.14e}").parse().unwrap_or(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SweepFamily {
    Pure,
    Werner,
    X,
}

impl SweepFamily {
    fn parse(name: &str) -> Result<Self, CliError> {
        match name {
            "pure" => Ok(SweepFamily::Pure),
            "werner" => Ok(SweepFamily::Werner),
            "x" => Ok(SweepFamily::X),
            other => Err(usage(
                "--family",
                format!("unknown family {other:?} (pure, werner, x)"),
            )),
        }
    }

    fn params(&self) -> &'static [&'static str] {
        match self {
            SweepFamily::Pure => &["a"],
            SweepFamily::Werner => &["b"],
            SweepFamily::X => &["a", "b", "c", "d", "w", "z"],
        }
    }

    fn build(
        &self,
        base: Option<&XState>,
        names: &[String],
        values: &[f64],
        tol: &Tolerances,
    ) -> Option<XState> {
        let get = |p: &str| names.iter().position(|n| n == p).map(|i| values[i]);
        match self {
            SweepFamily::Pure => XState::pure_phi(get("a")?).ok(),
            SweepFamily::Werner => XState::werner(get("b")?).ok(),
            SweepFamily::X => {
                let base = base?;
                let w = match get("w") {
                    Some(v) => num_complex::Complex64::new(v, 0.0),
                    None => base.w(),
                };
                let z = match get("z") {
                    Some(v) => num_complex::Complex64::new(v, 0.0),
                    None => base.z(),
                };
                XState::new(
                    get("a").unwrap_or(base.a()),
                    get("b").unwrap_or(base.b()),
                    get("c").unwrap_or(base.c()),
                    get("d").unwrap_or(base.d()),
                    w,
                    z,
                    tol,
                )
                .ok()
            }
        }
    }
}

fn cartesian(axes: &[GridAxis]) -> Vec<Vec<f64>> {
    let mut rows = vec![Vec::new()];
    for axis in axes {
        rows = rows
            .into_iter()
            .flat_map(|row| {
                axis.values.iter().map(move |&v| {
                    let mut r = row.clone();
                    r.push(v);
                    r
                })
            })
            .collect();
    }
    rows
}

fn cmd_sweep(
    common: &Common,
    grid: &[String],
    family: &str,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let tol = common.tolerances()?;
    let ch = common.channel()?;
    let family = SweepFamily::parse(family)?;
    if grid.is_empty() {
        return Err(usage("--grid", "empty grid"));
    }
    let axes = grid
        .iter()
        .map(|g| GridAxis::parse(g))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| usage("--grid", e))?;
    let names: Vec<String> = axes.iter().map(|a| a.param.clone()).collect();
    for (k, name) in names.iter().enumerate() {
        if !family.params().contains(&name.as_str()) {
            return Err(usage(
                "--grid",
                format!(
                    "{name:?} is not a parameter of this family {:?}",
                    family.params()
                ),
            ));
        }
        if names[..k].contains(name) {
            return Err(usage("--grid", format!("{name:?} appears twice")));
        }
    }
    if family != SweepFamily::X && names.is_empty() {
        return Err(usage("--grid", "empty grid"));
    }
    let base = match family {
        SweepFamily::X => {
            let rho = common.state(&tol)?;
            Some(rho.project_x(&tol).map_err(|e| usage("--state", e))?)
        }
        _ => None,
    };
    let horizon = common.horizon(&ch)?;
    let dt = common.dt(&ch)?;
    let rows = cartesian(&axes);

    let pool = common.pool()?;
    let results: Vec<Result<Vec<String>, CliError>> = pool.install(|| {
        rows.par_iter()
            .map(|values| {
                let mut record: Vec<String> = values.iter().map(|v| v.to_string()).collect();
                let Some(x0) = family.build(base.as_ref(), &names, values, &tol) else {
                    record.extend(["invalid".into(), String::new(), String::new()]);
                    return Ok(record);
                };
                match dynamics::death_time_with(&x0.embed(), &ch, horizon, dt, &tol) {
                    Ok(r) => record.extend(report_columns(&r)),
                    Err(DynamicsError::Inconclusive(_)) => {
                        record.extend(["inconclusive".into(), String::new(), String::new()])
                    }
                    Err(e) => return Err(runtime(e)),
                }
                Ok(record)
            })
            .collect()
    });

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = names.clone();
    header.extend(["verdict".into(), "t_star".into(), "crossings".into()]);
    w.write_record(&header).map_err(runtime)?;
    for row in results {
        w.write_record(&row?).map_err(runtime)?;
    }
    let buf = w.into_inner().map_err(runtime)?;
    common.emit(&buf, stdout)
}

fn report_columns(r: &DeathReport) -> [String; 3] {
    [
        r.verdict.as_str().to_owned(),
        r.verdict
            .t_star()
            .map(|t| t.to_string())
            .unwrap_or_default(),
        r.crossings.to_string(),
    ]
}

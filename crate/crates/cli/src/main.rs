mod config;
mod error;
mod random;
mod report;
mod sweep;
mod tasks;

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ExperimentConfig, RawConfig, Task};
use error::Result;
use report::{write_file, Report};
use tasks::Extras;

/// Vector-valued Gabor frames on R x Z_q and Chern numbers of their projections.
///
/// Exit status: 0 all checks pass, 1 an identity failed, 2 configuration error,
/// 3 not a frame, 4 conjugate gradients did not converge.
#[derive(Debug, Parser)]
#[command(name = "ncgabor", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cocycle, twisted convolution, involution, trace, Leibniz and module identities on random data.
    CheckAxioms,
    /// Frame bounds, critical-density trend and the Laurent symbol when it exists.
    Frame,
    /// Canonical dual window with Wexler-Raz and reconstruction residuals.
    Dual,
    /// Canonical tight window.
    Tight,
    /// Chern number of the Gabor projection by both formulas.
    Chern,
    /// Energy of the Gabor projection and the bound E >= |c1|.
    Energy,
    /// Full soliton check: duality, c1 = q, E = q and self-duality.
    VerifySoliton,
    /// Moyal identity, continuous energy and Chern number, window corpus screening.
    Moyal,
    /// Soliton experiments over a parameter grid, written as CSV.
    Sweep,
    /// Runs the tasks listed in the configuration.
    Run,
}

#[derive(Debug, Args)]
struct Common {
    /// key=value configuration file; flags override its values
    #[arg(long, global = true)]
    config: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    alpha: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    beta: Option<String>,
    #[arg(long, global = true)]
    r: Option<String>,
    #[arg(long, global = true)]
    s: Option<String>,
    #[arg(long, global = true)]
    q: Option<String>,
    /// Grid period
    #[arg(long = "L", global = true)]
    period: Option<String>,
    /// Grid samples
    #[arg(long = "N", global = true)]
    samples: Option<String>,
    /// Lattice truncation radius
    #[arg(long, global = true)]
    radius: Option<String>,
    /// Base of the tolerance ladder
    #[arg(long, global = true)]
    eps0: Option<String>,
    /// Conjugate-gradient stopping tolerance
    #[arg(long, global = true)]
    cg_tol: Option<String>,
    /// Conjugate-gradient iteration budget
    #[arg(long, global = true)]
    cg_max_iter: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Hermite functions per channel for frame-bound estimates
    #[arg(long, global = true)]
    probes: Option<String>,
    /// Random instances per identity
    #[arg(long, global = true)]
    count: Option<String>,
    /// Laurent symbol samples per axis
    #[arg(long, global = true)]
    grid: Option<String>,
    /// gaussian, lifted_gaussian, hermite or file
    #[arg(long, global = true)]
    window: Option<String>,
    /// Gaussian channel weight, re or re,im; repeat once per channel
    #[arg(long, global = true, allow_hyphen_values = true)]
    c: Vec<String>,
    /// Gaussian chirp parameter, re or re,im
    #[arg(long, global = true, allow_hyphen_values = true)]
    lambda: Option<String>,
    /// Hermite order
    #[arg(long, global = true)]
    n: Option<String>,
    /// Window file in columnar format
    #[arg(long, global = true)]
    path: Option<String>,
    /// Hermite perturbation n,eps added to the window
    #[arg(long, global = true)]
    perturb: Option<String>,
    /// Task to run or assert; repeatable
    #[arg(long, global = true)]
    task: Vec<String>,
    /// Window corpus file for moyal
    #[arg(long, global = true)]
    corpus: Option<String>,
    /// JSON report path (default stdout)
    #[arg(long, global = true)]
    out: Option<String>,
    /// Sweep CSV path (default stdout)
    #[arg(long, global = true)]
    csv: Option<String>,
    /// Directory for plot-data files
    #[arg(long, global = true)]
    plot_dir: Option<String>,
    /// Where to write the dual or tight window
    #[arg(long, global = true)]
    window_out: Option<String>,
}

impl Common {
    fn apply(&self, raw: &mut RawConfig) {
        let single = [
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("r", &self.r),
            ("s", &self.s),
            ("q", &self.q),
            ("L", &self.period),
            ("N", &self.samples),
            ("radius", &self.radius),
            ("eps0", &self.eps0),
            ("cg_tol", &self.cg_tol),
            ("cg_max_iter", &self.cg_max_iter),
            ("seed", &self.seed),
            ("probes", &self.probes),
            ("count", &self.count),
            ("grid", &self.grid),
            ("window", &self.window),
            ("lambda", &self.lambda),
            ("n", &self.n),
            ("path", &self.path),
            ("perturb", &self.perturb),
            ("corpus", &self.corpus),
            ("out", &self.out),
            ("csv", &self.csv),
            ("plot_dir", &self.plot_dir),
            ("window_out", &self.window_out),
        ];
        for (key, v) in single {
            if let Some(v) = v {
                raw.set(key, vec![v.clone()]);
            }
        }
        raw.set("c", self.c.clone());
        raw.set("task", self.task.clone());
    }
}

fn tasks_for(command: &Command) -> Option<&'static [Task]> {
    Some(match command {
        Command::CheckAxioms => &[Task::Axioms],
        Command::Frame | Command::Tight => &[Task::Frame],
        Command::Dual => &[Task::Frame, Task::WexlerRaz],
        Command::Chern => &[Task::Frame, Task::Chern],
        Command::Energy => &[Task::Frame, Task::Energy],
        Command::VerifySoliton => &[Task::Frame, Task::WexlerRaz, Task::Chern, Task::Energy, Task::Soliton],
        Command::Moyal => &[Task::Moyal],
        Command::Sweep | Command::Run => return None,
    })
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::CheckAxioms => "check-axioms",
        Command::Frame => "frame",
        Command::Dual => "dual",
        Command::Tight => "tight",
        Command::Chern => "chern",
        Command::Energy => "energy",
        Command::VerifySoliton => "verify-soliton",
        Command::Moyal => "moyal",
        Command::Sweep => "sweep",
        Command::Run => "run",
    }
}

fn emit(report: &Report, out: Option<&str>) -> Result<()> {
    let json = report.to_json();
    match out {
        Some(path) => write_file(path, &format!("{json}\n"))?,
        None => println!("{json}"),
    }
    let _ = report.summary(std::io::stderr().lock());
    Ok(())
}

fn execute(cli: Cli) -> Result<u8> {
    let mut raw = match &cli.common.config {
        Some(path) => RawConfig::load(path)?,
        None => RawConfig::default(),
    };
    cli.common.apply(&mut raw);
    let out = raw.single("out")?.map(str::to_string);

    if let Command::Sweep = cli.command {
        let s = sweep::run(&raw)?;
        let csv_path = raw.single("csv")?;
        match csv_path {
            Some(path) => write_file(path, &s.csv)?,
            None => print!("{}", s.csv),
        }
        if let Some(dir) = raw.single("plot_dir")? {
            write_file(&format!("{dir}/energy_curve.dat"), &s.energy_curve)?;
        }
        // with the CSV on stdout the report only goes to a file
        if out.is_some() || csv_path.is_some() {
            emit(&s.report, out.as_deref())?;
        } else {
            let _ = s.report.summary(std::io::stderr().lock());
        }
        return Ok(s.failure_code.unwrap_or(u8::from(!s.report.pass)));
    }

    let defaults: &[Task] = match tasks_for(&cli.command) {
        Some(t) => {
            // fixed task sets; a task list in the file only applies to run and sweep
            raw.clear("task");
            t
        }
        None => &[],
    };
    if matches!(cli.command, Command::Moyal) && raw.values("window").is_empty() {
        // the continuous plane has no lattice to lift along
        raw.set("window", vec!["gaussian".into()]);
    }
    let cfg = ExperimentConfig::resolve(&raw, defaults)?;
    let mut extras = Extras::from_raw(&raw)?;
    extras.frame_trend = matches!(cli.command, Command::Frame);
    extras.tight = matches!(cli.command, Command::Tight);
    let mut report = Report::new(command_name(&cli.command), &cfg);
    tasks::run(&cfg, &extras, &mut report)?;
    emit(&report, out.as_deref())?;
    Ok(u8::from(!report.pass))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

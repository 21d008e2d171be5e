//! Command-line surface: `run`, `sweep`, `snapshot` and `width`.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{fmt_f64, load_document, RunManifest};
use crate::experiment::{
    developed_habitat, init_batch, run_trial_with, sweep, SweepPlan, TrialConfig,
};
use crate::output::{
    write_agents_csv, write_arrivals_csv, write_flow_bin, write_flow_csv, write_scalar_bin,
    write_series_csv, write_series_rows, write_sweep_csv, write_transects_csv, OutputDir,
};

#[derive(Debug, Parser)]
#[command(
    name = "plume-swarm",
    version,
    about = "Collective odor-plume tracking simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one trial and write agent snapshots and group metrics.
    Run(CommonArgs),
    /// Run a parameter sweep over group size, repulsion radius and memory.
    Sweep(CommonArgs),
    /// Develop the plume and write the flow and concentration fields.
    Snapshot(CommonArgs),
    /// Develop the plume and report the filament width.
    Width(CommonArgs),
}

#[derive(Debug, Args, Clone, Default)]
pub struct CommonArgs {
    /// Flat `name = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Base seed for every random stream.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Group sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub agents: Vec<usize>,
    /// Memory timescales, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Vec<f64>,
    /// Repulsion radii, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub repulsion: Vec<f64>,
    /// Trials per sweep cell.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Also dump flow and concentration fields at every snapshot interval.
    #[arg(long)]
    pub snapshots: bool,
    /// Write per-trial time series.
    #[arg(long)]
    pub verbose: bool,
}

pub type CliResult<T> = std::result::Result<T, Box<dyn std::error::Error>>;

impl CommonArgs {
    /// Config file (or defaults) with scalar flag overrides applied. List
    /// flags apply their single value; longer lists are only meaningful for
    /// `sweep`.
    pub fn resolve(&self, allow_lists: bool) -> CliResult<TrialConfig> {
        self.resolve_with_axes(allow_lists).map(|(cfg, _)| cfg)
    }

    /// As [`resolve`](Self::resolve), also returning sweep axes from the file.
    fn resolve_with_axes(&self, allow_lists: bool) -> CliResult<(TrialConfig, SweepPlan)> {
        let (mut cfg, axes) = match &self.config {
            Some(p) => {
                let doc = load_document(p)?;
                (doc.trial, doc.sweep)
            }
            None => (TrialConfig::default(), SweepPlan::default()),
        };
        if let Some(seed) = self.seed {
            cfg.base_seed = seed;
        }
        if let Some(t) = self.trials {
            cfg.n_trials = t;
        }
        if !allow_lists {
            for (flag, len) in [
                ("--agents", self.agents.len()),
                ("--alpha", self.alpha.len()),
                ("--repulsion", self.repulsion.len()),
            ] {
                if len > 1 {
                    return Err(format!("{flag} takes a single value for this command").into());
                }
            }
        }
        if let Some(&n) = self.agents.first() {
            cfg.swarm.n_agents = n;
        }
        if let Some(&a) = self.alpha.first() {
            cfg.swarm.memory_timescale = a;
        }
        if let Some(&r) = self.repulsion.first() {
            cfg.swarm.repulsion_radius = r;
        }
        cfg.validate()?;
        Ok((cfg, axes))
    }

    /// Sweep axes: flags first, then lists from the config file, then the
    /// single configured value.
    fn plan(&self, cfg: &TrialConfig, file: &SweepPlan) -> SweepPlan {
        fn pick<T: Clone>(flag: &[T], file: &[T], single: T) -> Vec<T> {
            if !flag.is_empty() {
                flag.to_vec()
            } else if !file.is_empty() {
                file.to_vec()
            } else {
                vec![single]
            }
        }
        SweepPlan {
            n_agents: pick(&self.agents, &file.n_agents, cfg.swarm.n_agents),
            repulsion_radius: pick(
                &self.repulsion,
                &file.repulsion_radius,
                cfg.swarm.repulsion_radius,
            ),
            alpha: pick(&self.alpha, &file.alpha, cfg.swarm.memory_timescale),
        }
    }
}

/// Parses `args` (including the program name) and executes the command.
pub fn run_cli<I, T>(args: I) -> CliResult<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    execute(&cli.command)
}

pub fn execute(command: &Command) -> CliResult<()> {
    match command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Snapshot(a) => cmd_snapshot(a),
        Command::Width(a) => cmd_width(a),
    }
}

fn finish(out: OutputDir, command: &str, cfg: TrialConfig) -> CliResult<()> {
    finish_with(out, command, cfg, None)
}

/// Writes `manifest.txt` last, then keeps the outputs.
fn finish_with(
    mut out: OutputDir,
    command: &str,
    cfg: TrialConfig,
    plan: Option<SweepPlan>,
) -> CliResult<()> {
    let mut outputs = out.names();
    outputs.push("manifest.txt".into());
    let mut manifest = RunManifest::new(command, cfg, outputs);
    manifest.sweep = plan;
    let mut f = out.file("manifest.txt")?;
    f.write_all(manifest.render().as_bytes())?;
    f.flush()?;
    drop(f);
    out.commit();
    Ok(())
}

fn cmd_run(args: &CommonArgs) -> CliResult<()> {
    let cfg = args.resolve(false)?;
    let mut out = OutputDir::create(&args.out)?;
    let state = init_batch(&cfg, std::slice::from_ref(&cfg.swarm), 0, true)?;
    let mut frame = 0usize;
    let results = {
        let out = &mut out;
        run_trial_with(state, |_t, habitat| {
            if args.snapshots {
                let io = |e: std::io::Error| {
                    crate::SimError::InvalidConfig(format!("snapshot write failed: {e}"))
                };
                write_flow_bin(
                    out.file(&format!("flow_{frame:04}.bin")).map_err(io)?,
                    &habitat.flow,
                )
                .map_err(io)?;
                write_scalar_bin(
                    out.file(&format!("scalar_{frame:04}.bin")).map_err(io)?,
                    &habitat.scalar,
                )
                .map_err(io)?;
            }
            frame += 1;
            Ok(())
        })?
    };
    let result = &results[0];
    write_agents_csv(out.file("agents.csv")?, &result.agent_records)?;
    write_arrivals_csv(out.file("arrivals.csv")?, result)?;
    write_series_csv(out.file("series.csv")?, result)?;
    eprintln!(
        "{} of {} agents reached the source",
        result.n_success, result.n_agents
    );
    finish(out, "run", cfg)
}

fn cmd_sweep(args: &CommonArgs) -> CliResult<()> {
    let (cfg, axes) = args.resolve_with_axes(true)?;
    let plan = args.plan(&cfg, &axes);
    let mut out = OutputDir::create(&args.out)?;
    let outcome = sweep(&plan, &cfg)?;
    write_sweep_csv(out.file("sweep.csv")?, &outcome.rows)?;
    if args.verbose {
        let mut w = out.file("trials.csv")?;
        writeln!(w, "cell,trial,t,polarity,nnd")?;
        for (c, trials) in outcome.trials.iter().enumerate() {
            for r in trials {
                write_series_rows(&mut w, &format!("{c},{},", r.trial_index), r)?;
            }
        }
        w.flush()?;
    }
    for row in &outcome.rows {
        eprintln!(
            "n={} r_rep={} alpha={} p={} [{}]",
            row.n_agents,
            fmt_f64(row.repulsion_radius),
            fmt_f64(row.alpha),
            row.stats
                .as_ref()
                .map(|s| fmt_f64(s.p_success))
                .unwrap_or_default(),
            row.status
        );
    }
    finish_with(out, "sweep", cfg, Some(plan))
}

fn cmd_snapshot(args: &CommonArgs) -> CliResult<()> {
    let cfg = args.resolve(false)?;
    let mut out = OutputDir::create(&args.out)?;
    let habitat = developed_habitat(&cfg, 0)?;
    write_flow_bin(out.file("flow.bin")?, &habitat.flow)?;
    write_flow_csv(out.file("flow.csv")?, &habitat.flow)?;
    write_scalar_bin(out.file("scalar.bin")?, &habitat.scalar)?;
    finish(out, "snapshot", cfg)
}

fn cmd_width(args: &CommonArgs) -> CliResult<()> {
    let cfg = args.resolve(false)?;
    let mut out = OutputDir::create(&args.out)?;
    let habitat = developed_habitat(&cfg, 0)?;
    let width = habitat
        .scalar
        .measure_filament_width(cfg.downstream(), cfg.n_transects)?;
    let t_star = width.crossing_time(cfg.swarm.speed);
    write_transects_csv(out.file("transects.csv")?, &width)?;
    let mut w = out.file("width.csv")?;
    writeln!(w, "transect_id,distance,sigma")?;
    for t in &width.transects {
        writeln!(
            w,
            "{},{},{}",
            t.id,
            fmt_f64(t.distance),
            t.sigma.map(fmt_f64).unwrap_or_else(|| "NaN".into())
        )?;
    }
    writeln!(w, "mean,,{}", fmt_f64(width.sigma))?;
    w.flush()?;
    drop(w);
    println!("sigma = {}", fmt_f64(width.sigma));
    println!("t_star = {}", fmt_f64(t_star));
    finish(out, "width", cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_flags_are_rejected() {
        assert!(Cli::try_parse_from(["plume-swarm", "run", "--bogus"]).is_err());
        assert!(Cli::try_parse_from(["plume-swarm", "fly"]).is_err());
    }

    #[test]
    fn list_flags_parse() {
        let cli = Cli::try_parse_from([
            "plume-swarm",
            "sweep",
            "--alpha",
            "25e-3,12.5e-3,2.5e-3,1.25e-3,0.5e-3",
            "--agents",
            "10,20,40,60,80",
        ])
        .unwrap();
        let Command::Sweep(a) = cli.command else {
            panic!()
        };
        assert_eq!(a.alpha, vec![25e-3, 12.5e-3, 2.5e-3, 1.25e-3, 0.5e-3]);
        let cfg = a.resolve(true).unwrap();
        assert_eq!(a.plan(&cfg, &SweepPlan::default()).cells().len(), 25);
        assert!(a.resolve(false).is_err());
    }
}

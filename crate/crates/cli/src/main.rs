use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use phasespace_cli::config::{preset, RunConfig};
use phasespace_cli::experiments::run_experiment;
use phasespace_cli::observables::output_paths;

#[derive(Parser)]
#[command(name = "phasespace", about = "Phase-space field simulations: figure runs and sampler moment suites", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Override the RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for CSV and metadata output.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads for ensemble runs (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Fail with a nonzero exit code when an experiment invariant is
    /// breached.
    #[arg(long = "assert", global = true)]
    assert_invariants: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a TOML configuration file.
    Run { config: PathBuf },
    /// Run a built-in figure experiment (fig1..fig6) or `all`.
    Figures { which: String },
    /// Moment suite for a state spec: `fock:3`, `fock:1,0,2`,
    /// `coherent:2+1i`, or a TOML config path.
    Moments {
        state_spec: String,
        /// Number of phase-space samples.
        #[arg(long)]
        samples: Option<usize>,
    },
}

fn parse_state_spec(spec: &str, cfg: &mut RunConfig) -> anyhow::Result<()> {
    if let Some(rest) = spec.strip_prefix("fock:") {
        cfg.state.kind = "fock".into();
        cfg.state.occupations = rest
            .split(',')
            .map(|s| s.trim().parse::<u64>())
            .collect::<Result<_, _>>()
            .map_err(|e| anyhow::anyhow!("bad fock occupation list '{rest}': {e}"))?;
        cfg.state.radii = None;
    } else if let Some(rest) = spec.strip_prefix("coherent:") {
        cfg.state.kind = "coherent".into();
        cfg.state.amplitudes = rest
            .split(',')
            .map(parse_complex_pair)
            .collect::<anyhow::Result<_>>()?;
    } else {
        anyhow::bail!("unrecognized state spec '{spec}' (use fock:..., coherent:..., or a TOML path)");
    }
    Ok(())
}

/// Parse "a+bi" / "a-bi" / "a" into a re/im pair.
fn parse_complex_pair(text: &str) -> anyhow::Result<[f64; 2]> {
    let t = text.trim();
    if let Some(body) = t.strip_suffix('i') {
        // Split at the last +/- that is not a leading sign or exponent.
        let bytes = body.as_bytes();
        for pos in (1..bytes.len()).rev() {
            let c = bytes[pos] as char;
            if (c == '+' || c == '-') && !matches!(bytes[pos - 1] as char, 'e' | 'E') {
                let re: f64 = body[..pos].parse()?;
                let im: f64 = match &body[pos..] {
                    "+" => 1.0,
                    "-" => -1.0,
                    s => s.parse()?,
                };
                return Ok([re, im]);
            }
        }
        return Ok([0.0, body.parse()?]);
    }
    Ok([t.parse()?, 0.0])
}

fn execute(cfg: &mut RunConfig, cli: &Cli, name: &str) -> anyhow::Result<bool> {
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.assertions.enabled = cfg.assertions.enabled || cli.assert_invariants;
    let out = run_experiment(cfg)?;
    std::fs::create_dir_all(&cli.out_dir)?;
    let (csv_path, meta_path) = output_paths(&cli.out_dir, name);
    out.record.write_csv(&csv_path)?;
    out.record.write_metadata(&meta_path, cfg)?;
    println!("{name}: wrote {} and {}", csv_path.display(), meta_path.display());
    for (k, v) in &out.record.summary {
        println!("  {k} = {v:.6e}");
    }
    for failure in &out.assertion_failures {
        eprintln!("  ASSERTION FAILED: {failure}");
    }
    Ok(out.assertion_failures.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .ok();
    }
    let result = (|| -> anyhow::Result<bool> {
        match &cli.command {
            Command::Run { config } => {
                let mut cfg = RunConfig::from_path(config)?;
                if let Err(errors) = cfg.validate() {
                    anyhow::bail!("invalid configuration:\n  {}", errors.join("\n  "));
                }
                let name = cfg.experiment.clone();
                execute(&mut cfg, &cli, &name)
            }
            Command::Figures { which } => {
                let names: Vec<String> = if which == "all" {
                    (1..=6).map(|k| format!("fig{k}")).collect()
                } else {
                    vec![which.clone()]
                };
                let mut ok = true;
                for name in names {
                    let mut cfg = preset(&name)?;
                    ok &= execute(&mut cfg, &cli, &name)?;
                }
                Ok(ok)
            }
            Command::Moments { state_spec, samples } => {
                let mut cfg = if state_spec.ends_with(".toml") {
                    RunConfig::from_path(&PathBuf::from(state_spec))?
                } else {
                    let mut cfg = preset("sample-moments")?;
                    parse_state_spec(state_spec, &mut cfg)?;
                    cfg
                };
                if let Some(s) = samples {
                    cfg.ensemble.samples = *s;
                }
                execute(&mut cfg, &cli, "moments")
            }
        }
    })();
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Map, Value};

use dqm_core::experiment::{
    config_from_value, execute, load_config, output_root, planck_table, run_sweep, ConstantsChoice, CsvTable,
    ExperimentConfig, PlanckConfig, PlanckStateConfig, ResultRecord,
};
use dqm_core::{DqmError, Result};

#[derive(Parser)]
#[command(name = "dqm", version, about = "1D quantum-dynamics laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a JSON config.
    Run { config: PathBuf },
    /// Run a parameter sweep from a JSON config with a `sweep` section.
    Sweep { config: PathBuf },
    /// Print the minimum-measurable-length table as CSV.
    Planck {
        #[arg(long, default_value = "natural", value_parser = ["natural", "si"])]
        constants: String,
        /// Lengths in Planck lengths (default: six decades from 1).
        #[arg(long, value_delimiter = ',')]
        lengths: Vec<f64>,
    },
    /// Protective tomography of a bound state.
    Protect {
        #[arg(long, default_value = "well", value_parser = ["well", "ring", "double_well"])]
        state: String,
        #[arg(long)]
        regions: Option<u64>,
        /// Measurement duration T.
        #[arg(long = "duration", short = 'T')]
        duration: Option<f64>,
        /// Pointer momentum P (default: 0.05 x gap x smallest region).
        #[arg(long = "pointer-momentum", short = 'P')]
        pointer_momentum: Option<f64>,
        #[arg(long)]
        level: Option<u64>,
        #[arg(long)]
        k: Option<i64>,
        #[arg(long)]
        asymmetry: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Monte Carlo collapse of a two-level superposition.
    Collapse {
        /// Energy gap in units of the Planck energy.
        #[arg(long = "delta-e")]
        delta_e: f64,
        #[arg(long, default_value_t = 0.5)]
        rho0: f64,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long = "max-steps")]
        max_steps: Option<u64>,
        #[arg(long, default_value = "natural", value_parser = ["natural", "si"])]
        constants: String,
    },
}

fn insert_some<T: Into<Value>>(map: &mut Map<String, Value>, key: &str, v: Option<T>) {
    if let Some(v) = v {
        map.insert(key.to_string(), v.into());
    }
}

fn report(record: &ResultRecord) -> Result<()> {
    for w in &record.warnings {
        eprintln!("warning: {w}");
    }
    let summary = serde_json::to_string_pretty(&record.summary).map_err(|e| DqmError::Numeric(e.to_string()))?;
    println!("{summary}");
    eprintln!("wrote {}", record.output_dir.join("result.json").display());
    Ok(())
}

fn run_config(config: &ExperimentConfig) -> Result<ExitCode> {
    let record = execute(config, &output_root())?;
    report(&record)?;
    let timeouts = record.summary.get("timeouts").and_then(Value::as_f64).unwrap_or(0.0);
    Ok(if timeouts > 0.0 { ExitCode::from(4) } else { ExitCode::SUCCESS })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { config } => run_config(&load_config(&std::fs::read_to_string(config)?)?),
        Command::Sweep { config } => {
            let text = std::fs::read_to_string(&config)?;
            let record = run_sweep(&text, &output_root())?;
            report(&record)?;
            let failures = record.summary.get("failures").and_then(Value::as_u64).unwrap_or(0);
            if failures > 0 {
                eprintln!("{failures} sweep points failed; see sweep.csv");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Planck { constants, lengths } => {
            let constants = if constants == "si" { ConstantsChoice::Si } else { ConstantsChoice::Natural };
            let lengths = if lengths.is_empty() { PlanckConfig::default_lengths() } else { lengths };
            let config = PlanckConfig {
                state: PlanckStateConfig { constants, lengths },
            };
            let (rows, slope) = planck_table(&config)?;
            let mut table = CsvTable::new("planck.csv", "none", &["L", "m_star", "dL_qm", "dL_gr", "dL_min", "exponent_fit"]);
            for r in &rows {
                table.row(&[r[0], r[1], r[2], r[3], r[4], slope]);
            }
            let text = table.finish().contents;
            // drop the hash comment: the table is not tied to a config file
            print!("{}", text.split_once('\n').map(|(_, rest)| rest).unwrap_or(&text));
            Ok(ExitCode::SUCCESS)
        }
        Command::Protect {
            state,
            regions,
            duration,
            pointer_momentum,
            level,
            k,
            asymmetry,
            seed,
        } => {
            let mut st = Map::new();
            st.insert("kind".into(), Value::from(state));
            insert_some(&mut st, "level", level);
            insert_some(&mut st, "k", k);
            insert_some(&mut st, "asymmetry", asymmetry);
            let mut sc = Map::new();
            insert_some(&mut sc, "regions", regions);
            insert_some(&mut sc, "duration", duration);
            insert_some(&mut sc, "pointer_momentum", pointer_momentum);
            run_config(&config_from_value(&json!({"experiment": "protect", "seed": seed, "state": st, "schedule": sc}))?)
        }
        Command::Collapse {
            delta_e,
            rho0,
            trials,
            seed,
            max_steps,
            constants,
        } => {
            let mut sc = Map::new();
            sc.insert("trials".into(), Value::from(trials));
            insert_some(&mut sc, "max_steps", max_steps);
            run_config(&config_from_value(&json!({
                "experiment": "collapse",
                "seed": seed,
                "state": {"delta_e": delta_e, "rho0": rho0, "constants": constants},
                "schedule": sc,
            }))?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

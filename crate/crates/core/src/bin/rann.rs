use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use rann_deeponet::bench::{self, io, BenchError, BenchExample, ExperimentConfig, Scale, SweepAxis};
use rann_deeponet::datagen::{build_dataset, DatasetSpec, ExampleId, Layout};
use rann_deeponet::train;

#[derive(Parser)]
#[command(name = "rann", version, about = "Operator learning with randomized DeepONets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LayoutArg {
    Train,
    Test,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Paper,
    Desk,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    K,
    P,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset directory.
    GenData {
        /// dr, burgers or darcy
        #[arg(long)]
        example: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = LayoutArg::Train)]
        layout: LayoutArg,
    },
    /// Fit a model to a dataset and save it.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a saved model on a dataset.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Report file; per-case errors go to `<report>.cases.csv`.
        #[arg(long)]
        report: PathBuf,
    },
    /// Train and evaluate once per width.
    Sweep {
        #[arg(long, value_enum)]
        axis: AxisArg,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<usize>,
        /// Base configuration; defaults to the desk Burgers preset with
        /// k = 30 and p = 30.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "bench-out/sweep")]
        out: PathBuf,
    },
    /// Run a preset experiment end to end.
    Bench {
        /// dr, burgers, darcy or darcy_pi
        #[arg(long, required_unless_present = "config")]
        example: Option<String>,
        /// Run this configuration instead of a preset.
        #[arg(long, conflicts_with = "example")]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ScaleArg::Desk)]
        scale: ScaleArg,
        /// Overrides the preset seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Defaults to `bench-out/<example>-<scale>`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read_config(path: &Path) -> Result<ExperimentConfig, BenchError> {
    let text = std::fs::read_to_string(path).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
    ExperimentConfig::parse(&text)
}

fn write_text(path: &Path, text: &str) -> Result<(), BenchError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| BenchError::Io(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, text).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), BenchError> {
    match cli.command {
        Command::GenData {
            example,
            n,
            seed,
            out,
            layout,
        } => {
            let example: ExampleId = example.parse()?;
            let layout = match layout {
                LayoutArg::Train => Layout::Train,
                LayoutArg::Test => Layout::Test,
            };
            let data = build_dataset(&DatasetSpec::new(example, n, seed, layout))?;
            io::save_dataset(&data, &out)?;
            println!("wrote {} realizations ({} points each) to {}", data.len(), data.q, out.display());
        }
        Command::Train { config, data, out } => {
            let config = read_config(&config)?;
            let data = io::load_dataset(&data)?;
            let mut model = bench::build_model(&config, &data)?;
            let report = train::train(&mut model, &data, &bench::train_config(&config)?)?;
            io::save_model(&model, &out)?;
            println!(
                "rows {} rank {} residual {:e} train {:.2} s (solve {:.2} s)",
                report.rows_used, report.effective_rank, report.residual_norm, report.train_seconds, report.solve_seconds
            );
        }
        Command::Eval { model, data, report } => {
            let model = io::load_model(&model)?;
            let data = io::load_dataset(&data)?;
            let eval = bench::evaluate(&model, &data)?;
            write_text(&report, &eval.render())?;
            let mut csv = report.clone().into_os_string();
            csv.push(".cases.csv");
            write_text(Path::new(&csv), &eval.cases_csv())?;
            println!("mean rel. l2 {:e}, worst {:e}", eval.mean_rel_l2, eval.worst_rel_l2);
        }
        Command::Sweep {
            axis,
            values,
            config,
            out,
        } => {
            let mut config = match config {
                Some(path) => read_config(&path)?,
                None => ExperimentConfig {
                    k: 30,
                    p: 30,
                    ..ExperimentConfig::desk(BenchExample::Burgers)
                },
            };
            config.out_dir = Some(out.clone());
            let axis = match axis {
                AxisArg::K => SweepAxis::HiddenK,
                AxisArg::P => SweepAxis::OutputP,
            };
            let table = bench::neuron_sweep(&config, axis, &values)?;
            print!("{}", table.to_csv());
        }
        Command::Bench {
            example,
            config,
            scale,
            seed,
            out,
        } => {
            let (scale, scale_name) = match scale {
                ScaleArg::Paper => (Scale::Paper, "paper"),
                ScaleArg::Desk => (Scale::Desk, "desk"),
            };
            let (mut config, label) = match (config, example) {
                (Some(path), _) => {
                    let c = read_config(&path)?;
                    let label = c.example.to_string();
                    (c, label)
                }
                (None, Some(example)) => {
                    let example: BenchExample = example.parse()?;
                    (ExperimentConfig::preset(example, scale), format!("{example}-{scale_name}"))
                }
                (None, None) => unreachable!("clap requires one of --example and --config"),
            };
            if let Some(s) = seed {
                config.seed = s;
            }
            let out = out
                .or_else(|| config.out_dir.clone())
                .unwrap_or_else(|| PathBuf::from(format!("bench-out/{label}")));
            config.out_dir = Some(out.clone());
            let report = bench::run_experiment(&config)?;
            print!("{}", report.eval.render());
            println!("reports written to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

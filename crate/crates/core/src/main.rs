use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use depthup::bench::{gradient_stats, rmse, run_benchmark, BenchConfig, DirectionStats, Method};
use depthup::io::{read_depth_auto, read_guide_auto, write_depth_auto};
use depthup::synthetic::write_scene;
use depthup::{upsample, Error, GuidedFilterParams, SolverParams};

#[derive(Parser)]
#[command(name = "depthup", version, about = "Guided depth map upsampling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Upsample a low-resolution depth map with a high-resolution guide.
    Upscale(UpscaleArgs),
    /// RMSE between a prediction and ground truth.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
    },
    /// Integer-level gradient histogram of a depth map.
    Stats {
        #[arg(long)]
        depth: PathBuf,
        /// Print the full histogram as CSV.
        #[arg(long)]
        csv: bool,
    },
    /// Simulate, upsample and score every scene in a dataset directory.
    Bench(BenchArgs),
    /// Write the built-in synthetic scene as `<out>/scene96/`.
    Synth {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 0.75)]
    t: f64,
    #[arg(long, default_value_t = 0.0025)]
    beta0: f64,
    #[arg(long, default_value_t = 2.0)]
    kappa: f64,
    #[arg(long, default_value_t = 30)]
    iters: usize,
    #[arg(long, default_value_t = 8)]
    gf_radius: usize,
    #[arg(long, default_value_t = 1e-4)]
    gf_eps: f64,
    /// Edge-pad the domain before the periodic solve (default).
    #[arg(long, overrides_with = "no_pad")]
    pad: bool,
    #[arg(long)]
    no_pad: bool,
    /// Input depth that corresponds to full scale; defaults to 255, or the
    /// input maximum when that is larger.
    #[arg(long)]
    depth_scale: Option<f64>,
}

impl SolverArgs {
    fn params(&self) -> depthup::Result<SolverParams> {
        Ok(SolverParams {
            t: self.t,
            beta0: self.beta0,
            kappa: self.kappa,
            max_iter: self.iters,
            gf: GuidedFilterParams::new(self.gf_radius, self.gf_eps)?,
            pad: !self.no_pad,
            depth_scale: self.depth_scale,
            ..SolverParams::default()
        })
    }
}

#[derive(Args)]
struct UpscaleArgs {
    #[arg(long)]
    lr: PathBuf,
    #[arg(long)]
    guide: PathBuf,
    #[arg(long)]
    factor: usize,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    gt: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Per-iteration CSV trace.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "2,4")]
    factors: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "bicubic,ours,gfl0")]
    methods: Vec<String>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Noise sigma at the maximum depth of each scene.
    #[arg(long, default_value_t = 2.0)]
    sigma: f64,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: PathBuf,
    /// Also write a Markdown table.
    #[arg(long)]
    markdown: Option<PathBuf>,
}

fn write_text(path: &PathBuf, text: &str) -> depthup::Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })
}

fn upscale(args: UpscaleArgs) -> depthup::Result<()> {
    let params = args.solver.params()?;
    let lr = read_depth_auto(&args.lr)?;
    let guide = read_guide_auto(&args.guide)?;
    let gt = args.gt.as_deref().map(read_depth_auto).transpose()?;
    let (out, trace) = upsample(&lr, &guide, args.factor, &params, gt.as_ref())?;
    write_depth_auto(&out, &args.out)?;
    if let Some(path) = &args.trace {
        write_text(path, &trace.to_csv())?;
    }
    if let Some(gt) = &gt {
        println!("rmse {:.6}", rmse(&out, gt, None)?);
    }
    Ok(())
}

fn print_direction(name: &str, d: &DirectionStats) {
    println!(
        "{name}: zero {:.4}  one {:.4}  above-one {:.4}",
        d.fraction_zero(),
        d.fraction_one(),
        d.fraction_above_one()
    );
}

fn bench(args: BenchArgs) -> depthup::Result<()> {
    let methods = args
        .methods
        .iter()
        .map(|m| m.parse::<Method>())
        .collect::<depthup::Result<Vec<_>>>()?;
    let config = BenchConfig {
        factors: args.factors.clone(),
        methods,
        seed: args.seed,
        noise_sigma: args.sigma,
        params: args.solver.params()?,
    };
    config.params.validate()?;
    let report = run_benchmark(&args.dataset, &config)?;
    write_text(&args.out, &report.to_csv()?)?;
    if let Some(path) = &args.markdown {
        write_text(path, &report.to_markdown())?;
    }
    for (name, reason) in &report.failures {
        eprintln!("skipped {name}: {reason}");
    }
    Ok(())
}

fn run(cli: Cli) -> depthup::Result<()> {
    match cli.command {
        Command::Upscale(args) => upscale(args),
        Command::Eval { pred, gt } => {
            let pred = read_depth_auto(&pred)?;
            let gt = read_depth_auto(&gt)?;
            println!("{:.6}", rmse(&pred, &gt, None)?);
            Ok(())
        }
        Command::Stats { depth, csv } => {
            let stats = gradient_stats(&read_depth_auto(&depth)?);
            if csv {
                print!("{}", stats.to_csv());
            } else {
                print_direction("horizontal", &stats.horizontal);
                print_direction("vertical", &stats.vertical);
            }
            Ok(())
        }
        Command::Bench(args) => bench(args),
        Command::Synth { out } => write_scene(&out, "scene96"),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::NumericalAbort { .. } => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

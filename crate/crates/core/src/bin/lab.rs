use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use spinboson_lab::correlations::{BoundaryProfiles, Profile};
use spinboson_lab::davies::{self, GeneratorDump, LindbladGenerator};
use spinboson_lab::error::Result;
use spinboson_lab::lab::{self, ExperimentConfig};
use spinboson_lab::model::{load_model, SpectralDensity};
use spinboson_lab::vanhove::{self, VanHoveModel};

#[derive(Parser)]
#[command(name = "lab", version, about = "Massless spin-boson numerical lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a TOML config; exits 1 if any row is flagged.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: the config's `output`, else ".").
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Davies generator tools.
    Davies {
        #[command(subcommand)]
        command: DaviesCommand,
    },
    /// Van Hove closed forms.
    Vanhove {
        #[command(subcommand)]
        command: VanhoveCommand,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Route {
    Direct,
    Quadrature,
}

#[derive(Subcommand)]
enum DaviesCommand {
    /// Build the generator of a model and write it as JSON.
    Build {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "direct")]
        route: Route,
        /// Time horizon of the quadrature route.
        #[arg(long, default_value_t = 200.0)]
        s_max: f64,
    },
    /// Print the spectral analysis of a generator JSON file.
    Spectrum { generator: PathBuf },
}

#[derive(Subcommand)]
enum VanhoveCommand {
    /// Tabulate ⟨N⟩, ⟨e^{κN}⟩ and a Weyl expectation on a time grid.
    Scan {
        /// Model TOML; its density and λ are used.
        #[arg(long, conflicts_with = "gamma")]
        model: Option<PathBuf>,
        /// Analytic density J(ω) = A ω^γ e^{−ω/ω_c}.
        #[arg(long, default_value_t = 2.0)]
        gamma: f64,
        #[arg(long, default_value_t = 1.0)]
        omega_c: f64,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 0.1)]
        kappa: f64,
        /// Observable profile ψ = c·φ, given as "re,im".
        #[arg(long, default_value = "0,0.3", value_parser = parse_complex)]
        profile: Complex64,
        #[arg(long, default_value_t = 100.0)]
        tmax: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_complex(s: &str) -> std::result::Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| p.parse::<f64>().map_err(|e| format!("'{p}': {e}"));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(format!("expected 're' or 're,im', got '{s}'")),
    }
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, text)?;
            log::info!("wrote {}", p.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn run(config: &Path, out: Option<PathBuf>) -> Result<bool> {
    let cfg = ExperimentConfig::load(config)?;
    let dir = out
        .or_else(|| cfg.output.as_ref().map(|o| cfg.base_dir.join(o)))
        .unwrap_or_else(|| PathBuf::from("."));
    let table = lab::run_experiment(&cfg)?;
    let (csv, json) = table.write(&dir)?;
    println!("{}", csv.display());
    println!("{}", json.display());
    for (k, v) in &table.metadata.summary {
        println!("{k} = {v:.6e}");
    }
    if table.any_flagged() {
        eprintln!(
            "{} row(s) flagged by the norm-at-cutoff diagnostic",
            table.metadata.flagged_rows
        );
    }
    Ok(!table.any_flagged())
}

fn davies_build(model: &Path, out: &Path, route: Route, s_max: f64) -> Result<()> {
    let m = load_model(model)?;
    let gen = match route {
        Route::Direct => davies::build_generator_direct(&m)?,
        Route::Quadrature => davies::build_generator_quadrature(&m, s_max)?,
    };
    write_or_print(Some(out), &serde_json::to_string_pretty(&gen.to_dump())?)
}

fn davies_spectrum(path: &Path) -> Result<()> {
    let dump: GeneratorDump = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let gen = LindbladGenerator::from_dump(&dump)?;
    let r = davies::spectral_analysis(&gen)?;
    println!("eigenvalues (by decreasing real part):");
    for z in &r.eigenvalues {
        println!("  {:+.10e} {:+.10e}i", z.re, z.im);
    }
    println!("gap = {:.10e}", r.gap);
    println!("markov_gap = {:.10e}", r.markov_gap);
    println!("simple_zero = {}", r.simple_zero);
    println!("stationary (system basis, re/im):");
    for i in 0..r.stationary.nrows() {
        let row: Vec<String> = (0..r.stationary.ncols())
            .map(|j| {
                format!(
                    "{:+.6e}{:+.6e}i",
                    r.stationary[(i, j)].re,
                    r.stationary[(i, j)].im
                )
            })
            .collect();
        println!("  {}", row.join("  "));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn vanhove_scan(
    model: Option<&Path>,
    gamma: f64,
    omega_c: f64,
    amplitude: f64,
    lambda: f64,
    kappa: f64,
    profile: Complex64,
    tmax: f64,
    points: usize,
    out: Option<&Path>,
) -> Result<()> {
    let vh = match model {
        Some(p) => {
            let m = load_model(p)?;
            VanHoveModel::new(m.density().clone(), m.lambda())
        }
        None => VanHoveModel::new(
            SpectralDensity::analytic(gamma, omega_c, amplitude)?,
            lambda,
        ),
    };
    let n = points.max(2);
    let ts: Vec<f64> = (0..n).map(|k| tmax * k as f64 / (n - 1) as f64).collect();
    let profiles = BoundaryProfiles::right_only(Profile::Matching(profile));
    let rows = vanhove::scan(&vh, Complex64::new(kappa, 0.0), &profiles, &ts)?;
    write_or_print(out, &vanhove::scan_to_csv(&rows))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    lab::configure_threads();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, out } => run(&config, out),
        Command::Davies { command } => match command {
            DaviesCommand::Build {
                model,
                out,
                route,
                s_max,
            } => davies_build(&model, &out, route, s_max).map(|_| true),
            DaviesCommand::Spectrum { generator } => davies_spectrum(&generator).map(|_| true),
        },
        Command::Vanhove { command } => match command {
            VanhoveCommand::Scan {
                model,
                gamma,
                omega_c,
                amplitude,
                lambda,
                kappa,
                profile,
                tmax,
                points,
                out,
            } => vanhove_scan(
                model.as_deref(),
                gamma,
                omega_c,
                amplitude,
                lambda,
                kappa,
                profile,
                tmax,
                points,
                out.as_deref(),
            )
            .map(|_| true),
        },
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

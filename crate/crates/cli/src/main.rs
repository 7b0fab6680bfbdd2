use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pathlab::ballmeasure::RadiusSchedule;
use pathlab::meanlab::{ObservableKind, RotationEstimator};
use pathlab_cli::config::{
    BrownianConfig, CaseConfig, Check, ElementSpec, ExperimentConfig, ExperimentKind, Format, FunctionalSpec,
    GeometryConfig, PathSpec, RotorSpec, SelftestConfig, WitnessConfig,
};
use pathlab_cli::error::CliError;
use pathlab_cli::run::{run, Overrides};

#[derive(Parser)]
#[command(name = "pathlab", version, about = "Invariance experiments on path groups of compact Lie groups")]
struct Cli {
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "results")]
    out: PathBuf,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Record wall time per report (outputs are then no longer byte-stable).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config file.
    Run {
        config: PathBuf,
        /// Override every sample count of defect cases.
        #[arg(long)]
        m: Option<usize>,
        /// Print the resolved config instead of running it.
        #[arg(long)]
        echo: bool,
    },
    /// Cocycle, round-trip, group-law and exactness checks.
    Selftest {
        /// Pairs, paths or triples per check.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Shifted-ball overlap, exact and Monte Carlo.
    Geometry {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        s: f64,
        #[arg(long, default_value_t = 100_000)]
        m: usize,
    },
    /// A defect sweep over N.
    Defect(DefectArgs),
    /// Brownian defect over diffusion times.
    Brownian {
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        t: Vec<f64>,
        #[arg(long, default_value_t = 64)]
        steps: usize,
        #[arg(long, default_value_t = 20_000)]
        m: usize,
        /// Angle of the geodesic `g` about the first basis direction.
        #[arg(long, default_value_t = std::f64::consts::PI)]
        angle: f64,
        #[arg(long, default_value = "so3")]
        group: String,
    },
    /// Right-uniform-continuity witness.
    Witness {
        #[arg(long, value_delimiter = ',')]
        y: Vec<f64>,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_value = "10,100")]
        radii: Vec<f64>,
        #[arg(long, default_value = "so3")]
        group: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DefectChoice {
    Translation,
    Rotation,
    Star,
    Semidirect,
}

#[derive(Args)]
struct DefectArgs {
    #[arg(long, value_enum)]
    kind: DefectChoice,
    #[arg(long, default_value_t = 0.75)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, value_delimiter = ',', default_value = "16,32,64,128,256")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 20_000)]
    m: usize,
    /// Blocks of the random translation path.
    #[arg(long, default_value_t = 4)]
    blocks: usize,
    /// L² norm of the random translation path.
    #[arg(long, default_value_t = 1.0)]
    norm: f64,
    /// Seed of the random translation path.
    #[arg(long, default_value_t = 11)]
    path_seed: u64,
    /// Rotation grid `K`.
    #[arg(long, default_value_t = 2048)]
    grid: usize,
    #[arg(long, default_value = "so3")]
    group: String,
}

fn defect_config(a: &DefectArgs) -> Result<ExperimentConfig, CliError> {
    let (experiment, rotor, k) = match a.kind {
        DefectChoice::Translation => (ExperimentKind::Translation, None, None),
        DefectChoice::Star => (ExperimentKind::Star, None, None),
        DefectChoice::Rotation => (ExperimentKind::Rotation, Some(RotorSpec::Develop { grid: a.grid }), None),
        DefectChoice::Semidirect => {
            let mut axis = vec![0.0; dim_of(&a.group)?];
            axis[0] = 1.0;
            (ExperimentKind::Semidirect, None, Some(ElementSpec { axis, angle: 1.5 }))
        }
    };
    let mut cfg = ExperimentConfig::builtin_selftest(0);
    cfg.experiment = experiment;
    cfg.group = a.group.clone();
    cfg.format = Format::Csv;
    cfg.selftest = None;
    cfg.schedule = Some(RadiusSchedule::PowerLaw { c: a.c, alpha: a.alpha });
    cfg.n_list = Some(a.n.clone());
    cfg.m = Some(a.m);
    cfg.cases = vec![CaseConfig {
        label: "cli".into(),
        schedule: None,
        n_list: None,
        m: None,
        path: Some(PathSpec::Random { blocks: a.blocks, norm: a.norm, seed: a.path_seed }),
        functional: Some(FunctionalSpec::Cosine { direction: PathSpec::SameAsPath }),
        rotor,
        estimator: RotationEstimator::default(),
        envelope: None,
        k,
        group_functional: Default::default(),
    }];
    Ok(cfg)
}

fn build_config(cli: &Cli) -> Result<(ExperimentConfig, Overrides), CliError> {
    let mut over = Overrides { seed: cli.seed, format: cli.format, m: None };
    let mut base = ExperimentConfig::builtin_selftest(0);
    base.selftest = None;
    base.format = Format::Csv;
    let cfg = match &cli.command {
        Command::Run { config, m, .. } => {
            over.m = *m;
            ExperimentConfig::load(config)?
        }
        Command::Selftest { samples } => {
            let mut c = ExperimentConfig::builtin_selftest(0);
            c.selftest = Some(SelftestConfig {
                checks: vec![Check::Cocycle, Check::RoundTrip, Check::GroupLaws, Check::Exactness],
                samples: *samples,
            });
            c
        }
        Command::Geometry { n, s, m } => ExperimentConfig {
            experiment: ExperimentKind::Geometry,
            geometry: Some(GeometryConfig { points: vec![(*n, *s)], trends: Vec::new(), m: *m }),
            ..base
        },
        Command::Defect(a) => defect_config(a)?,
        Command::Brownian { t, steps, m, angle, group } => {
            let axis = std::iter::once(1.0).chain(std::iter::repeat(0.0)).take(dim_of(group)?).collect();
            ExperimentConfig {
                experiment: ExperimentKind::Brownian,
                group: group.clone(),
                m: Some(*m),
                brownian: Some(BrownianConfig {
                    t_list: t.clone(),
                    steps: *steps,
                    path: RotorSpec::Geodesic { axis, angle: *angle, grid: 64 },
                    observable: ObservableKind::TraceLinear,
                    time: 1.0,
                    ks: None,
                }),
                ..base
            }
        }
        Command::Witness { y, eps, n, radii, group } => ExperimentConfig {
            experiment: ExperimentKind::Witness,
            group: group.clone(),
            witness: Some(WitnessConfig { y: y.clone(), eps: *eps, n: *n, radii: radii.clone() }),
            ..base
        },
    };
    Ok((cfg, over))
}

fn dim_of(group: &str) -> Result<usize, CliError> {
    let fam = pathlab::liegroup::Family::parse(group).map_err(|e| CliError::Config(e.to_string()))?;
    let ctx = pathlab::liegroup::LieContext::new(fam).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(ctx.algebra_dim())
}

fn main_inner(cli: Cli) -> Result<ExitCode, CliError> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let (mut cfg, over) = build_config(&cli)?;
    over.apply(&mut cfg);
    if let Command::Run { echo: true, .. } = cli.command {
        print!("{}", cfg.to_toml());
        return Ok(ExitCode::SUCCESS);
    }
    let (manifest, outcome) = run(cfg, &cli.out, cli.timing)?;
    for o in &manifest.outputs {
        println!("{}  {}", o.sha256, cli.out.join(&o.file).display());
    }
    if !outcome.failed_checks.is_empty() {
        eprintln!("pathlab: failed checks: {}", outcome.failed_checks.join(", "));
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("pathlab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

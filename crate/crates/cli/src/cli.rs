use std::ffi::OsString;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skeleform_core::io::{load_dataset, write_pose, PoseDocument};
use skeleform_core::losses::{
    embedding_l1, l1_loss, read_tensor, style_loss, total_objective, toy_features, ChannelMean, LossWeights,
};
use skeleform_core::neural::{
    completion_model_config, factor_model_config, grad_check, mlp_init, save_model, synth_dataset,
    train_completion_model, train_factor_model, Activation, MlpConfig, ModelKind, TrainConfig,
};
use skeleform_core::pose::Topology;

use crate::error::{ApiError, ErrorCode};
use crate::ops::{self, ArtSource, DeformRequest, Models, RenderRequest};
use crate::service::{self, AppState};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

/// Gradient checks pass below this relative error.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Parser)]
#[command(name = "skeleform", version, about = "Skeleton completion, body-ratio factors and retargeting")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Every flag here can also be set through a `SKELEFORM_*` variable.
#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Seed for every random draw.
    #[arg(long, global = true, env = "SKELEFORM_SEED", default_value_t = 0)]
    pub seed: u64,
    /// OpenPose keypoints at or below this confidence are treated as missing.
    #[arg(long, global = true, env = "SKELEFORM_CONFIDENCE_THRESHOLD", default_value_t = 0.0)]
    pub confidence_threshold: f64,
    #[arg(long, global = true, env = "SKELEFORM_FACTOR_MODEL")]
    pub factor_model: Option<PathBuf>,
    #[arg(long, global = true, env = "SKELEFORM_COMPLETION_MODEL")]
    pub completion_model: Option<PathBuf>,
    /// Log filter, e.g. `info` or `skeleform=debug`.
    #[arg(long, global = true, env = "SKELEFORM_LOG", default_value = "warn")]
    pub log: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write synthetic template-based poses, one canonical file each.
    Synth {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the body-ratio factor predictor.
    TrainFactors {
        #[command(flatten)]
        train: TrainArgs,
        /// Default factor range, as `lo,hi`.
        #[arg(long, env = "SKELEFORM_SCALE_RANGE", value_parser = parse_range, default_value = "0.5,2.0")]
        scale_range: (f64, f64),
    },
    /// Train the pose completion model.
    TrainCompletion {
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long, default_value_t = 0.2)]
        mask_prob: f64,
    },
    /// Fill missing joints with the completion model.
    Complete {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predict the six body-ratio factors of every pose.
    Factors {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Retarget a person pose to an art reference's proportions.
    Deform {
        #[arg(long)]
        person: PathBuf,
        #[arg(long, required_unless_present = "tau_a", conflicts_with = "tau_a")]
        art: Option<PathBuf>,
        /// Six comma-separated art factors instead of an art pose.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        tau_a: Option<Vec<f64>>,
        /// Keep angles and copy the art pose's lengths.
        #[arg(long)]
        naive: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw poses as an SVG overlay.
    Render {
        #[arg(long, required = true)]
        input: Vec<PathBuf>,
        /// Canvas size as `w,h`; defaults to the first document's image size.
        #[arg(long, value_parser = parse_range)]
        canvas: Option<(f64, f64)>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Finite-difference check of the network's analytic gradients.
    Gradcheck {
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        /// Layer sizes of the probe network.
        #[arg(long, value_delimiter = ',', default_value = "12,16,16,4")]
        layers: Vec<usize>,
    },
    /// Evaluate the stylization objective between two image tensors.
    Loss {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value_t = 2)]
        levels: usize,
        #[arg(long, default_value_t = 200.0)]
        lambda_l1: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda_face: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda_r: f64,
    },
    /// Run the JSON-over-HTTP service.
    Serve {
        #[arg(long, env = "SKELEFORM_BIND", default_value = "127.0.0.1")]
        bind: IpAddr,
        #[arg(long, env = "SKELEFORM_PORT", default_value_t = 8080)]
        port: u16,
    },
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory of pose files; synthetic poses are used when absent.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Number of synthetic poses when no data directory is given.
    #[arg(long, default_value_t = 2000)]
    pub synth: usize,
    #[arg(long, default_value_t = 4000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub learning_rate: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Optional file for the per-iteration loss, one value per line.
    #[arg(long)]
    pub history: Option<PathBuf>,
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected two comma-separated numbers")?;
    let p = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok((p(a)?, p(b)?))
}

/// Parses `argv` and runs the command, returning the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    init_logging(&cli.global.log);
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error[{}]: {}", e.code.as_str(), e.detail());
            EXIT_DATA
        }
    }
}

fn init_logging(filter: &str) {
    let filter =
        tracing_subscriber::EnvFilter::try_new(filter).unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn"));
    let _ = tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).try_init();
}

fn read_input(path: &Path) -> Result<Vec<u8>, ApiError> {
    std::fs::read(path).map_err(|e| ApiError::new(ErrorCode::Parse, format!("cannot read {}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), ApiError> {
    let result = match out {
        Some(p) => std::fs::write(p, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    result.map_err(|e| ApiError::new(ErrorCode::Internal, format!("cannot write output: {e}")))
}

fn load_models(g: &GlobalArgs) -> Result<Models, ApiError> {
    Ok(Models {
        factor: g.factor_model.as_deref().map(|p| ops::load_model_file(p, ModelKind::Factor)).transpose()?,
        completion: g
            .completion_model
            .as_deref()
            .map(|p| ops::load_model_file(p, ModelKind::Completion))
            .transpose()?,
    })
}

fn execute(cli: Cli) -> Result<(), ApiError> {
    let g = &cli.global;
    let topo = Topology::openpose18();
    match cli.command {
        Command::Synth { n, out } => synth(n, g.seed, &out),
        Command::TrainFactors { train, scale_range } => {
            let tc = TrainConfig { scale_range, ..train_config(&train, g.seed) };
            let data = training_data(&train, g)?;
            let (model, history) = train_factor_model(&data, &tc, &factor_model_config(g.seed), &topo)?;
            finish_training(&train, save_model(&model, ModelKind::Factor), &history)
        }
        Command::TrainCompletion { train, mask_prob } => {
            let tc = TrainConfig { mask_prob, ..train_config(&train, g.seed) };
            let data = training_data(&train, g)?;
            let (model, history) = train_completion_model(&data, &tc, &completion_model_config(g.seed), &topo)?;
            finish_training(&train, save_model(&model, ModelKind::Completion), &history)
        }
        Command::Complete { input, out } => {
            let models = load_models(g)?;
            let doc = ops::parse_document(&read_input(&input)?, g.confidence_threshold)?;
            emit(out.as_deref(), &ops::complete(&doc, &models, &topo)?)
        }
        Command::Factors { input, out } => {
            let models = load_models(g)?;
            let doc = ops::parse_document(&read_input(&input)?, g.confidence_threshold)?;
            emit(out.as_deref(), &ops::factors(&doc, &models, &topo)?)
        }
        Command::Deform { person, art, tau_a, naive, out } => {
            let models = load_models(g)?;
            let person = ops::parse_document(&read_input(&person)?, g.confidence_threshold)?;
            let art = match (art, tau_a) {
                (Some(a), _) => ArtSource::Pose(ops::parse_document(&read_input(&a)?, g.confidence_threshold)?),
                (None, Some(t)) => ArtSource::Factors(ops::factor_array(&t)?),
                (None, None) => unreachable!("clap requires one of --art and --tau-a"),
            };
            let req = DeformRequest { person, art, naive };
            emit(out.as_deref(), &ops::deform_request(&req, &models, &topo)?)
        }
        Command::Render { input, canvas, out } => {
            let mut doc = PoseDocument::default();
            for (i, p) in input.iter().enumerate() {
                let d = ops::parse_document(&read_input(p)?, g.confidence_threshold)?;
                if i == 0 {
                    doc.image_size = d.image_size;
                }
                doc.poses.extend(d.poses);
            }
            let req = RenderRequest { poses: doc, styles: Vec::new(), canvas };
            emit(out.as_deref(), &ops::render(&req, &topo)?)
        }
        Command::Gradcheck { eps, layers } => gradcheck(eps, layers, g.seed),
        Command::Loss { a, b, levels, lambda_l1, lambda_face, lambda_r } => {
            let w = LossWeights { lambda_l1, lambda_face, lambda_r };
            loss(&a, &b, levels, g.seed, &w)
        }
        Command::Serve { bind, port } => {
            let state =
                AppState { models: load_models(g)?, topology: topo, confidence_threshold: g.confidence_threshold };
            let rt = tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()
                .map_err(|e| ApiError::new(ErrorCode::Internal, e.to_string()))?;
            rt.block_on(service::serve(SocketAddr::new(bind, port), state))
                .map_err(|e| ApiError::new(ErrorCode::Internal, format!("service failed: {e}")))
        }
    }
}

fn train_config(t: &TrainArgs, seed: u64) -> TrainConfig {
    TrainConfig {
        iterations: t.iterations,
        batch_size: t.batch_size,
        learning_rate: t.learning_rate,
        seed,
        ..TrainConfig::default()
    }
}

fn training_data(t: &TrainArgs, g: &GlobalArgs) -> Result<Vec<skeleform_core::KeypointSet>, ApiError> {
    match &t.data {
        Some(dir) => {
            let ds = load_dataset(dir, g.confidence_threshold)?;
            for w in &ds.warnings {
                tracing::warn!(path = %w.path.display(), "skipped: {}", w.error);
            }
            Ok(ds.poses)
        }
        None => Ok(synth_dataset(t.synth, g.seed)),
    }
}

fn finish_training(t: &TrainArgs, model: String, history: &[f64]) -> Result<(), ApiError> {
    emit(Some(&t.out), &model)?;
    if let Some(h) = &t.history {
        let text: String = history.iter().map(|v| format!("{v}\n")).collect();
        emit(Some(h), &text)?;
    }
    if let (Some(first), Some(last)) = (history.first(), history.last()) {
        eprintln!("loss {first:.6} -> {last:.6} over {} iterations", history.len());
    }
    Ok(())
}

fn synth(n: usize, seed: u64, out: &Path) -> Result<(), ApiError> {
    std::fs::create_dir_all(out)
        .map_err(|e| ApiError::new(ErrorCode::Internal, format!("cannot create {}: {e}", out.display())))?;
    for (i, k) in synth_dataset(n, seed).into_iter().enumerate() {
        let doc = PoseDocument { source: Some(format!("synth:{seed}:{i}")), ..PoseDocument::single(k) };
        emit(Some(&out.join(format!("pose_{i:05}.json"))), &write_pose(&doc))?;
    }
    Ok(())
}

fn gradcheck(eps: f64, layers: Vec<usize>, seed: u64) -> Result<(), ApiError> {
    let config = MlpConfig::new(layers, Activation::Tanh, seed)?;
    let model = mlp_init(&config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let input: Vec<f64> = (0..model.input_size()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let err = grad_check(&model, &input, eps)?;
    println!("max relative error: {err:e}");
    if err < GRADCHECK_TOLERANCE {
        Ok(())
    } else {
        Err(ApiError::new(ErrorCode::Internal, format!("gradient check failed: {err:e} >= {GRADCHECK_TOLERANCE:e}")))
    }
}

fn loss(a: &Path, b: &Path, levels: usize, seed: u64, w: &LossWeights) -> Result<(), ApiError> {
    let (ta, tb) = (read_tensor(a)?, read_tensor(b)?);
    let (l1, _) = l1_loss(&ta, &tb)?;
    let (fa, fb) = (toy_features(&ta, levels, seed)?, toy_features(&tb, levels, seed)?);
    let (style, _) = style_loss(&fa, &fb)?;
    let face = embedding_l1(&ChannelMean, &ta, &tb)?;
    let total = total_objective(l1, face, style, w);
    println!("{}", serde_json::json!({ "l1": l1, "face": face, "style": style, "total": total }));
    Ok(())
}

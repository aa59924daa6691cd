//! Subcommands.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use slipforge_core::baselines::{CosineScorer, DtwScorer, RandomScorer};
use slipforge_core::calibration::{calibrate, GaConfig, ReferenceSet};
use slipforge_core::datastore::{
    load_document, load_manifest, load_model, save_document, save_manifest, save_model, DatasetManifest, Ledger,
    CALIBRATION_FORMAT, MATRIX_FORMAT, PARAMS_FORMAT, REPORT_FORMAT,
};
use slipforge_core::evaluation::{evaluate_topk_with, similarity_matrix, EdgeTable, Scorer, TopKReport};
use slipforge_core::matcher::{train, EmbeddingModel, MatcherScorer, TrainConfig};
use slipforge_core::physics::{generate_dataset, PhysicsParams};

use crate::failure::{with_path, Failure};
use crate::service::{serve, AppState};

#[derive(Parser, Debug)]
#[command(name = "slipforge", version, about = "Synthesize, match and review fragmented slip edges")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate fractured, corroded fragment pairs into a dataset manifest.
    Generate {
        #[arg(long, default_value_t = 118)]
        pairs: usize,
        /// Extra unpaired fragments, split between the groups.
        #[arg(long, default_value_t = 0)]
        interference: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Physics parameters document (defaults apply when omitted).
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit physics parameters to a reference set of edges.
    Calibrate {
        /// Dataset manifest whose edges form the reference distribution.
        #[arg(long)]
        reference: PathBuf,
        #[arg(long, default_value_t = 30)]
        generations: usize,
        #[arg(long, default_value_t = 24)]
        pop: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Generated edges per fitness evaluation.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Starting parameters; genes outside the search are kept from here.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Writes the best parameters.
        #[arg(long)]
        out: PathBuf,
        /// Also writes the full run (best genome, fitness history).
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Train the embedding model with the triplet loss.
    Train {
        #[arg(long, env = "SLIPFORGE_DATASET")]
        dataset: PathBuf,
        #[arg(long, default_value_t = 30)]
        epochs: usize,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        #[arg(long, default_value_t = 64)]
        batch_size: usize,
        /// Seeds both the initialization and the sampling order.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Top-k accuracy of one or more ranking methods.
    Eval {
        #[arg(long, env = "SLIPFORGE_DATASET")]
        dataset: PathBuf,
        #[arg(long, env = "SLIPFORGE_MODEL")]
        model: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "wisepanda,dtw,cosine,random")]
        methods: Vec<Method>,
        #[arg(long, value_delimiter = ',', default_value = "1,5,10,20,50,100")]
        ks: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        random_seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pairwise score matrix over the ground-truth pairs.
    Matrix {
        #[arg(long, env = "SLIPFORGE_DATASET")]
        dataset: PathBuf,
        #[arg(long, env = "SLIPFORGE_MODEL")]
        model: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Method::Wisepanda)]
        method: Method,
        #[arg(long, default_value_t = 0)]
        random_seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the ranking API (and optionally the review UI).
    Serve {
        #[arg(long, env = "SLIPFORGE_DATASET")]
        dataset: PathBuf,
        #[arg(long, env = "SLIPFORGE_MODEL")]
        model: PathBuf,
        #[arg(long, env = "SLIPFORGE_LEDGER")]
        ledger: PathBuf,
        #[arg(long, env = "SLIPFORGE_ADDR", default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Built review UI, served under `/`.
        #[arg(long, env = "SLIPFORGE_STATIC_DIR")]
        static_dir: Option<PathBuf>,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Wisepanda,
    Dtw,
    Cosine,
    Random,
}

fn read_manifest(path: &Path) -> Result<DatasetManifest, Failure> {
    load_manifest(path).map_err(with_path(path))
}

fn read_model(path: &Path) -> Result<EmbeddingModel, Failure> {
    load_model(path).map_err(with_path(path))
}

fn read_params(path: Option<&Path>) -> Result<PhysicsParams, Failure> {
    match path {
        Some(p) => load_document(p, PARAMS_FORMAT).map_err(with_path(p)),
        None => Ok(PhysicsParams::default()),
    }
}

fn scorer_for(method: Method, model: Option<&Path>, random_seed: u64) -> Result<Box<dyn Scorer>, Failure> {
    Ok(match method {
        Method::Wisepanda => {
            let path = model.ok_or_else(|| Failure::usage("method wisepanda needs --model (or SLIPFORGE_MODEL)"))?;
            Box::new(MatcherScorer::new(read_model(path)?)?)
        }
        Method::Dtw => Box::new(DtwScorer),
        Method::Cosine => Box::new(CosineScorer),
        Method::Random => Box::new(RandomScorer::new(random_seed)),
    })
}

/// Runs one command; progress and results go to stdout.
pub fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Generate { pairs, interference, seed, params, out } => {
            let params = read_params(params.as_deref())?;
            let manifest = generate_dataset(&params, pairs, interference, seed)?;
            save_manifest(&out, &manifest)?;
            println!(
                "wrote {}: {} fragments, {} pairs, {} interference",
                out.display(),
                manifest.fragments.len(),
                manifest.ground_truth.len(),
                interference
            );
        }
        Command::Calibrate { reference, generations, pop, seed, samples, params, out, history } => {
            let base = read_params(params.as_deref())?;
            let reference = ReferenceSet::from_manifest(&read_manifest(&reference)?)?;
            let config = GaConfig { pop_size: pop, generations, m_samples: samples, seed, ..GaConfig::default() };
            let result = calibrate(&reference, &base, &config)?;
            save_document(&out, PARAMS_FORMAT, &result.params)?;
            if let Some(path) = history {
                save_document(&path, CALIBRATION_FORMAT, &result)?;
            }
            println!(
                "wrote {}: best fitness {:.4} after {generations} generations (initial {:.4})",
                out.display(),
                result.best_fitness,
                result.history[0]
            );
        }
        Command::Train { dataset, epochs, lr, batch_size, seed, out } => {
            let manifest = read_manifest(&dataset)?;
            let init = EmbeddingModel::with_default_shape(seed);
            let config = TrainConfig { epochs, learning_rate: lr, batch_size, seed };
            let model = train(&init, &manifest, &config)?;
            save_model(&out, &model)?;
            match model.training.loss_history.last() {
                Some(loss) => println!("wrote {}: {epochs} epochs, final loss {loss:.6}", out.display()),
                None => println!("wrote {}: untrained initialization", out.display()),
            }
        }
        Command::Eval { dataset, model, methods, ks, random_seed, out } => {
            if ks.is_empty() || ks.contains(&0) {
                return Err(Failure::usage("--ks must list positive integers"));
            }
            let manifest = read_manifest(&dataset)?;
            let table = EdgeTable::new(&manifest)?;
            let mut reports: Vec<TopKReport> = Vec::new();
            for method in methods {
                let scorer = scorer_for(method, model.as_deref(), random_seed)?;
                let report = evaluate_topk_with(&manifest, &table, scorer.as_ref(), &ks)?;
                println!("{report}");
                reports.push(report);
            }
            if let Some(path) = out {
                save_document(&path, REPORT_FORMAT, &reports)?;
            }
        }
        Command::Matrix { dataset, model, method, random_seed, out } => {
            let manifest = read_manifest(&dataset)?;
            let scorer = scorer_for(method, model.as_deref(), random_seed)?;
            let matrix = similarity_matrix(&manifest, scorer.as_ref())?;
            save_document(&out, MATRIX_FORMAT, &matrix)?;
            println!("wrote {}: {}x{} {} matrix, contrast {:.4}", out.display(), matrix.upper_ids.len(), matrix.lower_ids.len(), matrix.method, matrix.contrast);
        }
        Command::Serve { dataset, model, ledger, addr, static_dir } => {
            let manifest = read_manifest(&dataset)?;
            let model = read_model(&model)?;
            let ledger = Ledger::open(&ledger).map_err(with_path(&ledger))?;
            let state = AppState::new(manifest, model, ledger)?;
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::new("storage_error", e.to_string()))?;
            runtime
                .block_on(serve(state, addr, static_dir, |bound| {
                    println!("listening on http://{bound}");
                }))
                .map_err(|e| Failure::new("storage_error", format!("serving on {addr}: {e}")))?;
        }
    }
    Ok(())
}

//! Study orchestration: resolved run options, persona sources, and the
//! per-study pipelines behind the CLI subcommands.

pub mod study1;
pub mod study23;
pub mod study4;

use std::path::{Path, PathBuf};

use psychoforge_core::persona::{PersonaProfile, PromptFormat};
use psychoforge_core::scales::{ResponseVector, ScaleDefinition};
use psychoforge_core::semantic::SimilarityMethod;
use psychoforge_core::simulate::{simulate_bfi2, SimulationParams};

use crate::agent::AgentError;
use crate::formats::{self, FormatError};
use crate::manifest::{ManifestBuilder, ManifestError};

pub const DEFAULT_CHAT_MODEL: &str = "gpt-3.5-turbo-0125";
pub const DEFAULT_EMBEDDING_MODEL: &str = "text-embedding-3-large";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Embed(#[from] crate::embed::EmbedError),
    #[error("simulation failed: {0}")]
    Simulate(String),
    #[error("persona rendering failed: {0}")]
    Persona(String),
    #[error("statistics failed: {0}")]
    Stats(String),
    #[error("semantic analysis failed: {0}")]
    Semantic(String),
    #[error("{0}")]
    Config(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl From<psychoforge_core::simulate::SimulateError> for RunError {
    fn from(e: psychoforge_core::simulate::SimulateError) -> Self {
        RunError::Simulate(e.to_string())
    }
}

impl From<psychoforge_core::persona::PersonaError> for RunError {
    fn from(e: psychoforge_core::persona::PersonaError) -> Self {
        RunError::Persona(e.to_string())
    }
}

impl From<psychoforge_core::psychometrics::StatError> for RunError {
    fn from(e: psychoforge_core::psychometrics::StatError) -> Self {
        RunError::Stats(e.to_string())
    }
}

impl From<psychoforge_core::semantic::SemanticError> for RunError {
    fn from(e: psychoforge_core::semantic::SemanticError) -> Self {
        RunError::Semantic(e.to_string())
    }
}

impl From<psychoforge_core::scales::ScaleError> for RunError {
    fn from(e: psychoforge_core::scales::ScaleError) -> Self {
        RunError::Stats(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Mock,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatChoice {
    Likert,
    Expanded,
    Both,
}

impl FormatChoice {
    pub fn formats(self) -> Vec<PromptFormat> {
        match self {
            FormatChoice::Likert => vec![PromptFormat::Likert],
            FormatChoice::Expanded => vec![PromptFormat::Expanded],
            FormatChoice::Both => vec![PromptFormat::Likert, PromptFormat::Expanded],
        }
    }
}

/// Fully resolved options for one run, after merging config file and flags.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RunOptions {
    pub backend: BackendKind,
    pub format: FormatChoice,
    pub n_agents: Option<usize>,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub offline: bool,
    pub model: String,
    pub embedding_model: String,
    pub temperature: f64,
    pub max_retries: usize,
    pub concurrency: usize,
    pub noise_sd: f64,
    pub assets_dir: PathBuf,
    pub cache: Option<PathBuf>,
    pub params: Option<PathBuf>,
    pub matrix: Option<PathBuf>,
    pub banks: Option<Vec<PathBuf>>,
    pub method: SimilarityMethod,
    pub perplexity: Option<f64>,
    pub iterations: Option<usize>,
    pub per_scenario: bool,
    pub standardized: bool,
    pub refresh_cache: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            backend: BackendKind::Mock,
            format: FormatChoice::Both,
            n_agents: None,
            seed: 0,
            out_dir: PathBuf::from("runs/latest"),
            offline: false,
            model: DEFAULT_CHAT_MODEL.to_string(),
            embedding_model: DEFAULT_EMBEDDING_MODEL.to_string(),
            temperature: 1.0,
            max_retries: 3,
            concurrency: 4,
            noise_sd: 0.5,
            assets_dir: crate::assets::assets_dir(),
            cache: None,
            params: None,
            matrix: None,
            banks: None,
            method: SimilarityMethod::PairwiseMean,
            perplexity: None,
            iterations: None,
            per_scenario: false,
            standardized: false,
            refresh_cache: false,
        }
    }
}

impl RunOptions {
    /// Invariants that hold for every agent-running study.
    pub fn validate_for_agents(&self) -> Result<(), RunError> {
        if let Some(n) = self.n_agents {
            if n == 0 {
                return Err(RunError::Config("--n-agents must be at least 1".into()));
            }
        }
        if self.backend == BackendKind::Remote {
            // Fails without credentials, before any work.
            crate::agent::RemoteConfig::from_env()
                .map_err(|e| RunError::Config(e.to_string()))?;
        }
        Ok(())
    }
}

/// Where a run's personas came from, recorded in the manifest.
#[derive(Debug, Clone, serde::Serialize)]
pub enum PersonaSource {
    Matrix { path: PathBuf, n_agents: usize },
    Simulated { params: PathBuf, n_agents: usize, seed: u64 },
}

/// Loads BFI2 response vectors either from a matrix file or by simulating
/// from a parameter file; simulated runs write the generated matrix plus a
/// provenance sidecar into the run dir.
pub fn load_input_responses(
    opts: &RunOptions,
    bfi2: &ScaleDefinition,
    builder: &mut ManifestBuilder,
) -> Result<(Vec<ResponseVector>, PersonaSource), RunError> {
    match (&opts.matrix, &opts.params) {
        (Some(matrix), _) => {
            let responses = formats::read_response_matrix(matrix, bfi2)?;
            if let Some(n) = opts.n_agents {
                if n != responses.len() {
                    return Err(RunError::Config(format!(
                        "--n-agents {n} does not match the {} rows of {}",
                        responses.len(),
                        matrix.display()
                    )));
                }
            }
            builder.record_input(matrix)?;
            let source =
                PersonaSource::Matrix { path: matrix.clone(), n_agents: responses.len() };
            Ok((responses, source))
        }
        (None, params_path) => {
            let path = params_path
                .clone()
                .unwrap_or_else(|| crate::assets::demo_params(&opts.assets_dir));
            let mut params: SimulationParams = formats::load_params(&path)?;
            builder.record_input(&path)?;
            if let Some(n) = opts.n_agents {
                params.n_agents = n;
            }
            params.seed = derive_params_seed(&params, opts);
            let dataset = simulate_bfi2(&params, bfi2)?;
            write_simulated(builder, bfi2, &dataset.responses, &params)?;
            let source = PersonaSource::Simulated {
                params: path,
                n_agents: params.n_agents,
                seed: params.seed,
            };
            Ok((dataset.responses, source))
        }
    }
}

/// The run seed wins over the parameter file's seed when explicitly set;
/// a file seed of 0 always defers to the run seed.
fn derive_params_seed(params: &SimulationParams, opts: &RunOptions) -> u64 {
    if opts.seed != 0 {
        opts.seed
    } else {
        params.seed
    }
}

fn write_simulated(
    builder: &mut ManifestBuilder,
    bfi2: &ScaleDefinition,
    responses: &[ResponseVector],
    params: &SimulationParams,
) -> Result<(), RunError> {
    let matrix_name = "simulated_bfi2.csv";
    formats::write_response_matrix(&builder.run_dir().join(matrix_name), bfi2, responses)?;
    builder.record_output(matrix_name)?;

    let provenance = serde_json::json!({
        "toolkit_version": crate::VERSION,
        "seed": params.seed,
        "n_agents": params.n_agents,
        "params": params,
    });
    let sidecar = "simulated_bfi2.provenance.json";
    std::fs::write(
        builder.run_dir().join(sidecar),
        serde_json::to_string_pretty(&provenance).expect("provenance serialize"),
    )
    .map_err(|source| RunError::Io { path: builder.run_dir().join(sidecar), source })?;
    builder.record_output(sidecar)?;
    Ok(())
}

/// Wraps response vectors into agent profiles with stable ids.
pub fn profiles_from_responses(
    responses: &[ResponseVector],
    format: PromptFormat,
) -> Vec<PersonaProfile> {
    responses
        .iter()
        .enumerate()
        .map(|(i, rv)| PersonaProfile {
            agent_id: format!("agent_{i:04}"),
            bfi2: rv.clone(),
            format,
        })
        .collect()
}

/// Fixed-precision float formatting shared by all tabular outputs so runs
/// are byte-stable.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.6}")
}

pub fn write_csv(path: &Path, rows: &[Vec<String>]) -> Result<(), RunError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| RunError::Io {
        path: path.into(),
        source: std::io::Error::other(e),
    })?;
    for row in rows {
        writer.write_record(row).map_err(|e| RunError::Io {
            path: path.into(),
            source: std::io::Error::other(e),
        })?;
    }
    writer.flush().map_err(|e| RunError::Io { path: path.into(), source: e })?;
    Ok(())
}

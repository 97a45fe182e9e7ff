//! File formats: item banks, simulation parameters, response matrices,
//! expansion tables, scenarios, prompt templates, and the mock crosswalk.
//!
//! Item banks and parameter files are JSON; response matrices are CSV with a
//! header row of item ids, one row per respondent, one column per item.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use psychoforge_core::persona::{
    validate_battery, Battery, ExpansionTable, PromptTemplates, ScenarioDefinition,
};
use psychoforge_core::scales::{ResponseVector, ScaleDefinition, ScaleError, KNOWN_PROFILES};
use psychoforge_core::simulate::{Facet, SimulationParams, FACET_COUNT};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("failed to read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Scale {
        path: PathBuf,
        #[source]
        source: ScaleError,
    },
    #[error("{0}")]
    Invalid(String),
    #[error("csv error in {path}: {message}")]
    Csv { path: PathBuf, message: String },
}

fn read_to_string(path: &Path) -> Result<String, FormatError> {
    fs::read_to_string(path).map_err(|source| FormatError::Read { path: path.into(), source })
}

/// Loads and validates an item bank. Instruments with a known profile
/// (BFI2, Mini-Markers) are additionally checked against their shape.
pub fn load_scale(path: &Path) -> Result<ScaleDefinition, FormatError> {
    let text = read_to_string(path)?;
    let scale: ScaleDefinition = serde_json::from_str(&text)
        .map_err(|e| FormatError::Parse { path: path.into(), message: e.to_string() })?;
    scale
        .validate()
        .map_err(|source| FormatError::Scale { path: path.into(), source })?;
    if let Some(profile) = KNOWN_PROFILES.iter().find(|p| p.name == scale.name) {
        scale
            .validate_profile(profile)
            .map_err(|source| FormatError::Scale { path: path.into(), source })?;
    }
    Ok(scale)
}

/// On-disk layout of a simulation parameter file: facet statistics keyed by
/// facet name so row order in the file is irrelevant.
#[derive(serde::Serialize, serde::Deserialize)]
struct ParamsFile {
    facets: Vec<FacetStats>,
    /// Correlation matrix in the canonical facet order listed in `facets`.
    facet_corr: Vec<Vec<f64>>,
    n_agents: usize,
    seed: u64,
}

#[derive(serde::Serialize, serde::Deserialize)]
struct FacetStats {
    facet: String,
    mean: f64,
    sd: f64,
    intra_item_corr: f64,
}

pub fn load_params(path: &Path) -> Result<SimulationParams, FormatError> {
    let text = read_to_string(path)?;
    let file: ParamsFile = serde_json::from_str(&text)
        .map_err(|e| FormatError::Parse { path: path.into(), message: e.to_string() })?;
    if file.facets.len() != FACET_COUNT {
        return Err(FormatError::Invalid(format!(
            "{} facets in {}, expected {FACET_COUNT}",
            file.facets.len(),
            path.display()
        )));
    }

    // The file lists facets in its own order; build the permutation into
    // canonical order and apply it to the correlation matrix too.
    let mut order = Vec::with_capacity(FACET_COUNT);
    for stats in &file.facets {
        let facet = Facet::from_name(&stats.facet).ok_or_else(|| {
            FormatError::Invalid(format!("unknown facet '{}' in {}", stats.facet, path.display()))
        })?;
        if order.contains(&facet) {
            return Err(FormatError::Invalid(format!(
                "facet '{}' listed twice in {}",
                stats.facet,
                path.display()
            )));
        }
        order.push(facet);
    }
    if file.facet_corr.len() != FACET_COUNT
        || file.facet_corr.iter().any(|r| r.len() != FACET_COUNT)
    {
        return Err(FormatError::Invalid(format!(
            "facet_corr in {} is not {FACET_COUNT}x{FACET_COUNT}",
            path.display()
        )));
    }

    let mut facet_means = [0.0; FACET_COUNT];
    let mut facet_sds = [0.0; FACET_COUNT];
    let mut intra = [0.0; FACET_COUNT];
    let mut corr = vec![vec![0.0; FACET_COUNT]; FACET_COUNT];
    for (file_i, (stats, &facet_i)) in file.facets.iter().zip(&order).enumerate() {
        let ci = facet_i.index();
        facet_means[ci] = stats.mean;
        facet_sds[ci] = stats.sd;
        intra[ci] = stats.intra_item_corr;
        for (file_j, &facet_j) in order.iter().enumerate() {
            corr[ci][facet_j.index()] = file.facet_corr[file_i][file_j];
        }
    }

    let params = SimulationParams {
        facet_means,
        facet_sds,
        facet_corr: corr,
        intra_facet_item_corr: intra,
        n_agents: file.n_agents,
        seed: file.seed,
    };
    params
        .validate()
        .map_err(|e| FormatError::Invalid(format!("{}: {e}", path.display())))?;
    Ok(params)
}

pub fn write_params(path: &Path, params: &SimulationParams) -> Result<(), FormatError> {
    let facets: Vec<FacetStats> = Facet::ALL
        .iter()
        .map(|f| FacetStats {
            facet: f.name().to_string(),
            mean: params.facet_means[f.index()],
            sd: params.facet_sds[f.index()],
            intra_item_corr: params.intra_facet_item_corr[f.index()],
        })
        .collect();
    let file = ParamsFile {
        facets,
        facet_corr: params.facet_corr.clone(),
        n_agents: params.n_agents,
        seed: params.seed,
    };
    let text = serde_json::to_string_pretty(&file).expect("params serialize");
    fs::write(path, text).map_err(|source| FormatError::Write { path: path.into(), source })
}

/// Writes a response matrix: header of item ids in scale order, one row per
/// respondent.
pub fn write_response_matrix(
    path: &Path,
    scale: &ScaleDefinition,
    responses: &[ResponseVector],
) -> Result<(), FormatError> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| FormatError::Csv { path: path.into(), message: e.to_string() })?;
    let header: Vec<&str> = scale.items.iter().map(|i| i.id.as_str()).collect();
    writer
        .write_record(&header)
        .map_err(|e| FormatError::Csv { path: path.into(), message: e.to_string() })?;
    for rv in responses {
        rv.validate_against(scale)
            .map_err(|source| FormatError::Scale { path: path.into(), source })?;
        let row: Vec<String> = scale
            .items
            .iter()
            .map(|item| rv.answers[&item.id].to_string())
            .collect();
        writer
            .write_record(&row)
            .map_err(|e| FormatError::Csv { path: path.into(), message: e.to_string() })?;
    }
    writer
        .flush()
        .map_err(|e| FormatError::Csv { path: path.into(), message: e.to_string() })?;
    Ok(())
}

/// Reads a response matrix. The header must contain exactly the scale's item
/// ids (any order); every row must be complete and in range.
pub fn read_response_matrix(
    path: &Path,
    scale: &ScaleDefinition,
) -> Result<Vec<ResponseVector>, FormatError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| FormatError::Csv { path: path.into(), message: e.to_string() })?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| FormatError::Csv { path: path.into(), message: e.to_string() })?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();

    let mut responses = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record
            .map_err(|e| FormatError::Csv { path: path.into(), message: e.to_string() })?;
        let mut rv = ResponseVector::new(scale.name.clone());
        for (col, value) in header.iter().zip(record.iter()) {
            let answer: i64 = value.trim().parse().map_err(|_| FormatError::Csv {
                path: path.into(),
                message: format!("row {}: '{value}' is not an integer", row_idx + 2),
            })?;
            rv.answers.insert(col.clone(), answer);
        }
        rv.validate_against(scale)
            .map_err(|source| FormatError::Scale { path: path.into(), source })?;
        responses.push(rv);
    }
    Ok(responses)
}

pub fn load_expansion_table(
    path: &Path,
    scale: &ScaleDefinition,
) -> Result<ExpansionTable, FormatError> {
    let text = read_to_string(path)?;
    let sentences: BTreeMap<String, [String; 5]> = serde_json::from_str(&text)
        .map_err(|e| FormatError::Parse { path: path.into(), message: e.to_string() })?;
    let table = ExpansionTable { sentences };
    table
        .validate_against(scale)
        .map_err(|e| FormatError::Invalid(format!("{}: {e}", path.display())))?;
    Ok(table)
}

pub fn load_scenarios(path: &Path) -> Result<Vec<ScenarioDefinition>, FormatError> {
    let text = read_to_string(path)?;
    let scenarios: Vec<ScenarioDefinition> = serde_json::from_str(&text)
        .map_err(|e| FormatError::Parse { path: path.into(), message: e.to_string() })?;
    for battery in [Battery::Risk, Battery::Ethics] {
        validate_battery(&scenarios, battery)
            .map_err(|e| FormatError::Invalid(format!("{}: {e}", path.display())))?;
    }
    Ok(scenarios)
}

pub fn load_templates(dir: &Path) -> Result<PromptTemplates, FormatError> {
    let templates = PromptTemplates {
        likert: read_to_string(&dir.join("persona_likert.tmpl"))?,
        expanded: read_to_string(&dir.join("persona_expanded.tmpl"))?,
        questionnaire: read_to_string(&dir.join("questionnaire.tmpl"))?,
        scenarios: read_to_string(&dir.join("scenarios.tmpl"))?,
    };
    templates
        .validate()
        .map_err(|e| FormatError::Invalid(format!("{}: {e}", dir.display())))?;
    Ok(templates)
}

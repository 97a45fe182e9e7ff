//! Deterministic offline stand-in for the live model.
//!
//! The mock maps each questionnaire adjective to a handful of semantically
//! matching BFI2 items through a hand-authored crosswalk, rescales the mean
//! of the mapped answers onto the 9-point accuracy scale, and adds seeded
//! Gaussian noise. Scenario answers are weighted sums of domain scores
//! rescaled onto the 10-point anchor scale. It is the pipeline's test
//! oracle, not a scientific claim: with zero noise the convergent pipeline
//! is attenuated only by rounding.

use std::collections::BTreeMap;
use std::path::Path;

use psychoforge_core::persona::{Battery, PersonaProfile, ScenarioDefinition};
use psychoforge_core::scales::{score, Domain, Keying, ScaleDefinition};
use psychoforge_core::seed::{substream, Stage};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{AgentError, AgentSpec, Completion, CompletionBackend};
use crate::formats::FormatError;

/// One adjective's mapping: BFI2 item ids with signs, or an alias that
/// always copies another adjective's final value (emulating synonym
/// collapse in model output).
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct AdjectiveMap {
    #[serde(default)]
    pub maps: Vec<(String, i8)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duplicate_of: Option<String>,
}

/// Hand-authored semantic map from Mini-Markers adjectives to BFI2 items,
/// plus per-scenario domain weight vectors.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct MockCrosswalk {
    pub adjectives: BTreeMap<String, AdjectiveMap>,
    /// Positive weight: the trait raises the tendency the battery measures
    /// (risk-taking / empathy).
    pub scenario_weights: BTreeMap<String, BTreeMap<Domain, f64>>,
}

impl MockCrosswalk {
    pub fn load(path: &Path) -> Result<Self, FormatError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| FormatError::Read { path: path.into(), source })?;
        serde_json::from_str(&text)
            .map_err(|e| FormatError::Parse { path: path.into(), message: e.to_string() })
    }

    /// Structural validation: every adjective of the questionnaire is
    /// covered; every mapping points at a real BFI2 item of the same domain
    /// with a sign consistent with both keyings; aliases resolve to mapped
    /// adjectives.
    pub fn validate(
        &self,
        questionnaire: &ScaleDefinition,
        bfi2: &ScaleDefinition,
        scenarios: &[ScenarioDefinition],
    ) -> Result<(), FormatError> {
        for adjective in &questionnaire.items {
            let map = self.adjectives.get(&adjective.id).ok_or_else(|| {
                FormatError::Invalid(format!("crosswalk lacks adjective '{}'", adjective.id))
            })?;
            if let Some(target) = &map.duplicate_of {
                let target_map = self.adjectives.get(target).ok_or_else(|| {
                    FormatError::Invalid(format!(
                        "'{}' duplicates unknown adjective '{target}'",
                        adjective.id
                    ))
                })?;
                if target_map.duplicate_of.is_some() {
                    return Err(FormatError::Invalid(format!(
                        "'{}' duplicates '{target}', which is itself an alias",
                        adjective.id
                    )));
                }
                continue;
            }
            if map.maps.is_empty() {
                return Err(FormatError::Invalid(format!(
                    "adjective '{}' has no item mappings",
                    adjective.id
                )));
            }
            let adjective_dir = keying_dir(adjective.keying);
            for (item_id, sign) in &map.maps {
                let item = bfi2.item(item_id).ok_or_else(|| {
                    FormatError::Invalid(format!(
                        "adjective '{}' maps unknown item '{item_id}'",
                        adjective.id
                    ))
                })?;
                if item.domain != adjective.domain {
                    return Err(FormatError::Invalid(format!(
                        "adjective '{}' ({}) maps item '{item_id}' of domain {}",
                        adjective.id, adjective.domain, item.domain
                    )));
                }
                if !matches!(sign, 1 | -1) {
                    return Err(FormatError::Invalid(format!(
                        "adjective '{}' has sign {sign} for '{item_id}'",
                        adjective.id
                    )));
                }
                // Sign must reconcile the two keyings: a reversed adjective
                // fed from a positive item needs sign -1, and so on.
                if adjective_dir != keying_dir(item.keying) * i64::from(*sign) {
                    return Err(FormatError::Invalid(format!(
                        "adjective '{}' / item '{item_id}': sign {sign} conflicts with keying",
                        adjective.id
                    )));
                }
            }
        }
        for scenario in scenarios {
            let weights = self.scenario_weights.get(&scenario.name).ok_or_else(|| {
                FormatError::Invalid(format!("crosswalk lacks scenario '{}'", scenario.name))
            })?;
            for domain in Domain::ALL {
                if !weights.contains_key(&domain) {
                    return Err(FormatError::Invalid(format!(
                        "scenario '{}' lacks a weight for domain {domain}",
                        scenario.name
                    )));
                }
            }
        }
        Ok(())
    }
}

fn keying_dir(keying: Keying) -> i64 {
    match keying {
        Keying::Positive => 1,
        Keying::Reversed => -1,
    }
}

/// What the mock is answering: the adjective questionnaire or one scenario
/// battery.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MockTask {
    Questionnaire,
    Scenarios(Battery),
}

/// Deterministic completion backend closed over the run's profiles.
pub struct MockBackend {
    crosswalk: MockCrosswalk,
    bfi2: ScaleDefinition,
    questionnaire: ScaleDefinition,
    scenarios: Vec<ScenarioDefinition>,
    task: MockTask,
    noise_sd: f64,
    seed: u64,
    /// agent_id -> (batch index, profile); the index drives the noise
    /// substream so results are schedule-independent.
    profiles: BTreeMap<String, (u64, PersonaProfile)>,
}

impl MockBackend {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        crosswalk: MockCrosswalk,
        bfi2: ScaleDefinition,
        questionnaire: ScaleDefinition,
        scenarios: Vec<ScenarioDefinition>,
        task: MockTask,
        noise_sd: f64,
        seed: u64,
        profiles: &[PersonaProfile],
    ) -> Self {
        let profiles = profiles
            .iter()
            .enumerate()
            .map(|(i, p)| (p.agent_id.clone(), (i as u64, p.clone())))
            .collect();
        MockBackend {
            crosswalk,
            bfi2,
            questionnaire,
            scenarios,
            task,
            noise_sd,
            seed,
            profiles,
        }
    }
}

impl CompletionBackend for MockBackend {
    fn complete(&self, spec: &AgentSpec) -> Result<Completion, AgentError> {
        let (index, profile) = self
            .profiles
            .get(&spec.agent_id)
            .ok_or_else(|| AgentError::UnknownAgent { agent_id: spec.agent_id.clone() })?;
        let text = match self.task {
            MockTask::Questionnaire => mock_complete_questionnaire(
                profile,
                &self.crosswalk,
                &self.bfi2,
                &self.questionnaire,
                self.noise_sd,
                self.seed,
                *index,
            )?,
            MockTask::Scenarios(battery) => mock_complete_scenarios(
                profile,
                &self.crosswalk,
                &self.bfi2,
                &self.scenarios,
                battery,
                self.noise_sd,
                self.seed,
                *index,
            )?,
        };
        Ok(Completion { text, calls: 1 })
    }

    fn name(&self) -> &'static str {
        "mock"
    }
}

/// Questionnaire answers for one profile as a JSON object string.
///
/// Per adjective: mean of mapped BFI2 answers (sign -1 reflects on the 1..5
/// range), affine rescale 1..5 -> 1..9, plus seeded Gaussian noise, rounded
/// and clamped. Aliased adjectives copy the final value of their target, so
/// the pair is perfectly collinear by construction.
pub fn mock_complete_questionnaire(
    profile: &PersonaProfile,
    crosswalk: &MockCrosswalk,
    bfi2: &ScaleDefinition,
    questionnaire: &ScaleDefinition,
    noise_sd: f64,
    seed: u64,
    agent_index: u64,
) -> Result<String, AgentError> {
    profile
        .bfi2
        .validate_against(bfi2)
        .map_err(|e| AgentError::InvalidProfile { message: e.to_string() })?;
    let mut rng = substream(seed, Stage::MockQuestionnaire, agent_index);
    let (lo, hi) = (bfi2.response_min, bfi2.response_max);
    let (qlo, qhi) = (questionnaire.response_min, questionnaire.response_max);
    let rescale = (qhi - qlo) as f64 / (hi - lo) as f64;

    let mut values: BTreeMap<&str, i64> = BTreeMap::new();
    let mut aliases: Vec<(&str, &str)> = Vec::new();
    for item in &questionnaire.items {
        let map = crosswalk.adjectives.get(&item.id).ok_or_else(|| {
            AgentError::IncompleteCrosswalk { key: item.id.clone() }
        })?;
        if let Some(target) = &map.duplicate_of {
            aliases.push((item.id.as_str(), target.as_str()));
            continue;
        }
        let mut sum = 0.0;
        for (item_id, sign) in &map.maps {
            let answer = *profile.bfi2.answers.get(item_id).ok_or_else(|| {
                AgentError::IncompleteCrosswalk { key: item_id.clone() }
            })? as f64;
            sum += if *sign > 0 { answer } else { (lo + hi) as f64 - answer };
        }
        let mean = sum / map.maps.len() as f64;
        let z: f64 = rng.sample(StandardNormal);
        let raw = qlo as f64 + (mean - lo as f64) * rescale + noise_sd * z;
        values.insert(item.id.as_str(), (raw.round() as i64).clamp(qlo, qhi));
    }
    for (alias, target) in aliases {
        let value = *values
            .get(target)
            .ok_or_else(|| AgentError::IncompleteCrosswalk { key: target.to_string() })?;
        values.insert(alias, value);
    }

    let object: serde_json::Map<String, serde_json::Value> = questionnaire
        .items
        .iter()
        .map(|item| (item.id.clone(), serde_json::json!(values[item.id.as_str()])))
        .collect();
    Ok(serde_json::to_string(&object).expect("mock answers serialize"))
}

/// Scenario answers for one battery as a JSON object string.
///
/// The weighted sum of domain scores is rescaled to a 1..10 tendency and
/// mapped onto the anchor scale, where 1 is the high-tendency end
/// (risk-embracing / empathetic), matching the prompts' anchors.
#[allow(clippy::too_many_arguments)]
pub fn mock_complete_scenarios(
    profile: &PersonaProfile,
    crosswalk: &MockCrosswalk,
    bfi2: &ScaleDefinition,
    scenarios: &[ScenarioDefinition],
    battery: Battery,
    noise_sd: f64,
    seed: u64,
    agent_index: u64,
) -> Result<String, AgentError> {
    let report = score(&profile.bfi2, bfi2)
        .map_err(|e| AgentError::InvalidProfile { message: e.to_string() })?;
    let mut rng = substream(seed, Stage::MockScenario, agent_index);
    let (lo, hi) = (bfi2.response_min as f64, bfi2.response_max as f64);

    let mut object = serde_json::Map::new();
    for scenario in scenarios.iter().filter(|s| s.battery == battery) {
        let weights = crosswalk
            .scenario_weights
            .get(&scenario.name)
            .ok_or_else(|| AgentError::IncompleteCrosswalk { key: scenario.name.clone() })?;
        let mut value = 0.0;
        let mut value_min = 0.0;
        let mut value_max = 0.0;
        for domain in Domain::ALL {
            let w = weights[&domain];
            value += w * report.domain(domain);
            if w > 0.0 {
                value_min += w * lo;
                value_max += w * hi;
            } else {
                value_min += w * hi;
                value_max += w * lo;
            }
        }
        let tendency = if value_max > value_min {
            (value - value_min) / (value_max - value_min)
        } else {
            0.5
        };
        let z: f64 = rng.sample(StandardNormal);
        // Anchor scale runs 1 = act on the tendency, 10 = refrain.
        let raw = 10.0 - 9.0 * tendency + noise_sd * z;
        object.insert(
            scenario.name.clone(),
            serde_json::json!((raw.round() as i64).clamp(1, 10)),
        );
    }
    Ok(serde_json::to_string(&object).expect("mock answers serialize"))
}

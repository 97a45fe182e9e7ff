//! Deterministic rendering of persona-assignment prompts, the adjective
//! questionnaire, and the behavioral-scenario battery.
//!
//! Prompts are assembled from fixed section templates with `{{...}}`
//! placeholders; the templates ship as data files beside the item banks so
//! golden tests can pin exact bytes. Two persona formats exist: the Likert
//! format lists each item as `text: n;`, and the Expanded format replaces
//! each (item, answer) pair with a first-person sentence from the expansion
//! table.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::scales::{ResponseVector, ScaleDefinition, ScaleError};

/// How a persona is written into the prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PromptFormat {
    Likert,
    Expanded,
}

impl fmt::Display for PromptFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PromptFormat::Likert => f.write_str("Likert"),
            PromptFormat::Expanded => f.write_str("Expanded"),
        }
    }
}

/// One agent: an id, its complete BFI2 answers, and the prompt format used
/// to assign them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonaProfile {
    pub agent_id: String,
    pub bfi2: ResponseVector,
    pub format: PromptFormat,
}

/// First-person sentences for every (item, answer level) pair of a 5-point
/// scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionTable {
    pub sentences: BTreeMap<String, [String; 5]>,
}

impl ExpansionTable {
    /// Completeness and shape validation against a scale: one 5-sentence
    /// ladder per item, each sentence non-empty, first-person, and distinct
    /// within its item (so prompts stay injective in the answers).
    pub fn validate_against(&self, scale: &ScaleDefinition) -> Result<(), PersonaError> {
        for item in &scale.items {
            let ladder = self
                .sentences
                .get(&item.id)
                .ok_or_else(|| PersonaError::MissingExpansion { item: item.id.clone(), level: 0 })?;
            for (k, sentence) in ladder.iter().enumerate() {
                let s = sentence.trim();
                if s.is_empty() {
                    return Err(PersonaError::EmptySentence {
                        item: item.id.clone(),
                        level: k as u8 + 1,
                    });
                }
                if !(s.starts_with("I ") || s.starts_with("I'")) {
                    return Err(PersonaError::NotFirstPerson {
                        item: item.id.clone(),
                        level: k as u8 + 1,
                    });
                }
                for other in &ladder[..k] {
                    if other == sentence {
                        return Err(PersonaError::DuplicateSentence {
                            item: item.id.clone(),
                            level: k as u8 + 1,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn sentence(&self, item_id: &str, answer: i64) -> Result<&str, PersonaError> {
        let ladder = self
            .sentences
            .get(item_id)
            .ok_or_else(|| PersonaError::MissingExpansion { item: item_id.into(), level: 0 })?;
        if !(1..=5).contains(&answer) {
            return Err(PersonaError::LevelOutOfRange { item: item_id.into(), level: answer });
        }
        Ok(&ladder[(answer - 1) as usize])
    }
}

/// Which scenario battery a scenario belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Battery {
    Risk,
    Ethics,
}

impl fmt::Display for Battery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Battery::Risk => f.write_str("risk"),
            Battery::Ethics => f.write_str("ethics"),
        }
    }
}

pub const SCENARIOS_PER_BATTERY: usize = 5;
pub const SCENARIO_RESPONSE_RANGE: (i64, i64) = (1, 10);

/// One behavioral scenario with its 1..10 anchors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDefinition {
    pub name: String,
    pub battery: Battery,
    pub text: String,
    pub anchor_low: String,
    pub anchor_high: String,
}

/// Validates one battery: exactly five uniquely named scenarios.
pub fn validate_battery(
    scenarios: &[ScenarioDefinition],
    battery: Battery,
) -> Result<(), PersonaError> {
    let of_battery: Vec<&ScenarioDefinition> =
        scenarios.iter().filter(|s| s.battery == battery).collect();
    if of_battery.len() != SCENARIOS_PER_BATTERY {
        return Err(PersonaError::BatterySize { battery, count: of_battery.len() });
    }
    for (i, s) in of_battery.iter().enumerate() {
        if of_battery[..i].iter().any(|o| o.name == s.name) {
            return Err(PersonaError::DuplicateScenario(s.name.clone()));
        }
    }
    Ok(())
}

/// Section templates with `{{persona}}`, `{{questionnaire}}`, `{{items}}`,
/// and `{{scenarios}}` placeholders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptTemplates {
    pub likert: String,
    pub expanded: String,
    pub questionnaire: String,
    pub scenarios: String,
}

impl PromptTemplates {
    pub fn validate(&self) -> Result<(), PersonaError> {
        for (name, template, slots) in [
            ("likert", &self.likert, &["{{persona}}", "{{questionnaire}}"][..]),
            ("expanded", &self.expanded, &["{{persona}}", "{{questionnaire}}"][..]),
            ("questionnaire", &self.questionnaire, &["{{items}}"][..]),
            ("scenarios", &self.scenarios, &["{{persona}}", "{{scenarios}}"][..]),
        ] {
            for slot in slots {
                if !template.contains(slot) {
                    return Err(PersonaError::TemplateMissingSlot {
                        template: name,
                        slot,
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PersonaError {
    MissingExpansion { item: String, level: u8 },
    EmptySentence { item: String, level: u8 },
    NotFirstPerson { item: String, level: u8 },
    DuplicateSentence { item: String, level: u8 },
    LevelOutOfRange { item: String, level: i64 },
    BatterySize { battery: Battery, count: usize },
    DuplicateScenario(String),
    TemplateMissingSlot { template: &'static str, slot: &'static str },
    ExpandedFormatRequired { agent_id: String },
    Scale(ScaleError),
}

impl fmt::Display for PersonaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PersonaError::MissingExpansion { item, .. } => {
                write!(f, "expansion table has no entry for item '{item}'")
            }
            PersonaError::EmptySentence { item, level } => {
                write!(f, "expansion for '{item}' level {level} is empty")
            }
            PersonaError::NotFirstPerson { item, level } => {
                write!(f, "expansion for '{item}' level {level} is not first-person")
            }
            PersonaError::DuplicateSentence { item, level } => {
                write!(f, "expansion for '{item}' level {level} duplicates another level")
            }
            PersonaError::LevelOutOfRange { item, level } => {
                write!(f, "answer {level} for '{item}' outside the 1..5 expansion range")
            }
            PersonaError::BatterySize { battery, count } => {
                write!(f, "battery '{battery}' has {count} scenarios, expected 5")
            }
            PersonaError::DuplicateScenario(name) => {
                write!(f, "duplicate scenario name '{name}'")
            }
            PersonaError::TemplateMissingSlot { template, slot } => {
                write!(f, "template '{template}' lacks required slot {slot}")
            }
            PersonaError::ExpandedFormatRequired { agent_id } => {
                write!(f, "agent '{agent_id}' must use the Expanded format for scenarios")
            }
            PersonaError::Scale(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for PersonaError {}

impl From<ScaleError> for PersonaError {
    fn from(e: ScaleError) -> Self {
        PersonaError::Scale(e)
    }
}

/// The persona section body: one line per BFI2 item, in scale order.
fn persona_block(
    profile: &PersonaProfile,
    scale: &ScaleDefinition,
    table: Option<&ExpansionTable>,
) -> Result<String, PersonaError> {
    profile.bfi2.validate_against(scale)?;
    let mut lines = Vec::with_capacity(scale.items.len());
    match profile.format {
        PromptFormat::Likert => {
            for item in &scale.items {
                let answer = profile.bfi2.answers[&item.id];
                lines.push(alloc::format!("{}: {};", item.text, answer));
            }
        }
        PromptFormat::Expanded => {
            let table = table.ok_or_else(|| PersonaError::MissingExpansion {
                item: scale.items[0].id.clone(),
                level: 0,
            })?;
            for item in &scale.items {
                let answer = profile.bfi2.answers[&item.id];
                lines.push(table.sentence(&item.id, answer)?.into());
            }
        }
    }
    Ok(lines.join("\n"))
}

/// The questionnaire block: the instruction template with one numbered
/// `text _` line per item of the response scale, in scale order.
pub fn render_questionnaire(
    scale: &ScaleDefinition,
    templates: &PromptTemplates,
) -> Result<String, PersonaError> {
    templates.validate()?;
    let items: Vec<String> = scale
        .items
        .iter()
        .enumerate()
        .map(|(i, item)| alloc::format!("{}. {} _", i + 1, item.text))
        .collect();
    Ok(templates.questionnaire.replace("{{items}}", &items.join("\n")))
}

/// A complete persona-assignment prompt in the profile's format.
pub fn render_persona_prompt(
    profile: &PersonaProfile,
    persona_scale: &ScaleDefinition,
    questionnaire_scale: &ScaleDefinition,
    table: Option<&ExpansionTable>,
    templates: &PromptTemplates,
) -> Result<String, PersonaError> {
    templates.validate()?;
    let persona = persona_block(profile, persona_scale, table)?;
    let questionnaire = render_questionnaire(questionnaire_scale, templates)?;
    let template = match profile.format {
        PromptFormat::Likert => &templates.likert,
        PromptFormat::Expanded => &templates.expanded,
    };
    Ok(template
        .replace("{{persona}}", &persona)
        .replace("{{questionnaire}}", &questionnaire))
}

/// A complete scenario prompt for one battery. Scenario prompts always carry
/// the Expanded persona.
pub fn render_scenarios(
    profile: &PersonaProfile,
    persona_scale: &ScaleDefinition,
    table: &ExpansionTable,
    scenarios: &[ScenarioDefinition],
    battery: Battery,
    templates: &PromptTemplates,
) -> Result<String, PersonaError> {
    templates.validate()?;
    if profile.format != PromptFormat::Expanded {
        return Err(PersonaError::ExpandedFormatRequired { agent_id: profile.agent_id.clone() });
    }
    validate_battery(scenarios, battery)?;
    let persona = persona_block(profile, persona_scale, Some(table))?;
    let blocks: Vec<String> = scenarios
        .iter()
        .filter(|s| s.battery == battery)
        .enumerate()
        .map(|(i, s)| {
            alloc::format!("### Scenario {} ###\nScenario Name: {}\n{}", i + 1, s.name, s.text)
        })
        .collect();
    Ok(templates
        .scenarios
        .replace("{{persona}}", &persona)
        .replace("{{scenarios}}", &blocks.join("\n\n")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scales::{Domain, ItemDefinition, ItemKind, Keying};
    use alloc::string::ToString;
    use alloc::vec;

    fn two_item_scale() -> ScaleDefinition {
        ScaleDefinition {
            name: "BFI2".into(),
            response_min: 1,
            response_max: 5,
            items: vec![
                ItemDefinition {
                    id: "bfi2_01".into(),
                    text: "Is outgoing, sociable".into(),
                    domain: Domain::Extraversion,
                    facet: Some("Sociability".into()),
                    keying: Keying::Positive,
                    kind: ItemKind::Statement,
                },
                ItemDefinition {
                    id: "bfi2_16".into(),
                    text: "Tends to be quiet".into(),
                    domain: Domain::Extraversion,
                    facet: Some("Sociability".into()),
                    keying: Keying::Reversed,
                    kind: ItemKind::Statement,
                },
            ],
        }
    }

    fn questionnaire_scale() -> ScaleDefinition {
        ScaleDefinition {
            name: "Mini-Markers".into(),
            response_min: 1,
            response_max: 9,
            items: vec![
                ItemDefinition {
                    id: "Bashful".into(),
                    text: "Bashful".into(),
                    domain: Domain::Extraversion,
                    facet: None,
                    keying: Keying::Reversed,
                    kind: ItemKind::Adjective,
                },
                ItemDefinition {
                    id: "Bold".into(),
                    text: "Bold".into(),
                    domain: Domain::Extraversion,
                    facet: None,
                    keying: Keying::Positive,
                    kind: ItemKind::Adjective,
                },
            ],
        }
    }

    fn templates() -> PromptTemplates {
        PromptTemplates {
            likert: "### Context ###\nstudy\n\n### Your Assigned Personality ###\n{{persona}}\n\n{{questionnaire}}".into(),
            expanded: "### Context ###\nstudy\n\n### Your Personality ###\n{{persona}}\n\n{{questionnaire}}".into(),
            questionnaire: "### Questionnaire Item ###\n{{items}}".into(),
            scenarios: "### Personality ###\n{{persona}}\n\n{{scenarios}}".into(),
        }
    }

    fn table() -> ExpansionTable {
        let mut sentences = BTreeMap::new();
        sentences.insert(
            "bfi2_01".to_string(),
            [
                "I am very reserved, unsociable.".to_string(),
                "I am quite reserved, unsociable.".to_string(),
                "I am somewhat outgoing, sociable.".to_string(),
                "I am quite outgoing, sociable.".to_string(),
                "I am very outgoing, sociable.".to_string(),
            ],
        );
        sentences.insert(
            "bfi2_16".to_string(),
            [
                "I am almost never quiet.".to_string(),
                "I am rarely quiet.".to_string(),
                "I am sometimes quiet.".to_string(),
                "I am often quiet.".to_string(),
                "I am almost always quiet.".to_string(),
            ],
        );
        ExpansionTable { sentences }
    }

    fn profile(format: PromptFormat) -> PersonaProfile {
        let mut rv = ResponseVector::new("BFI2");
        rv.answers.insert("bfi2_01".into(), 5);
        rv.answers.insert("bfi2_16".into(), 2);
        PersonaProfile { agent_id: "agent_1".into(), bfi2: rv, format }
    }

    #[test]
    fn likert_prompt_lists_items_with_answers() {
        let prompt = render_persona_prompt(
            &profile(PromptFormat::Likert),
            &two_item_scale(),
            &questionnaire_scale(),
            None,
            &templates(),
        )
        .unwrap();
        assert!(prompt.contains("Is outgoing, sociable: 5;"));
        assert!(prompt.contains("Tends to be quiet: 2;"));
        assert!(prompt.contains("1. Bashful _"));
        assert!(prompt.contains("2. Bold _"));
    }

    #[test]
    fn expanded_prompt_uses_ladder_sentences() {
        let prompt = render_persona_prompt(
            &profile(PromptFormat::Expanded),
            &two_item_scale(),
            &questionnaire_scale(),
            Some(&table()),
            &templates(),
        )
        .unwrap();
        assert!(prompt.contains("I am very outgoing, sociable."));
        assert!(prompt.contains("I am rarely quiet."));
        assert!(!prompt.contains(": 5;"));
    }

    #[test]
    fn persona_section_has_one_line_per_item() {
        let scale = two_item_scale();
        let block = persona_block(&profile(PromptFormat::Likert), &scale, None).unwrap();
        assert_eq!(block.lines().count(), scale.items.len());
        let block =
            persona_block(&profile(PromptFormat::Expanded), &scale, Some(&table())).unwrap();
        assert_eq!(block.lines().count(), scale.items.len());
    }

    #[test]
    fn prompts_differ_when_any_answer_differs() {
        let scale = two_item_scale();
        let qscale = questionnaire_scale();
        let t = templates();
        let tab = table();
        for format in [PromptFormat::Likert, PromptFormat::Expanded] {
            let base = profile(format);
            let mut other = base.clone();
            other.bfi2.answers.insert("bfi2_16".into(), 3);
            let a =
                render_persona_prompt(&base, &scale, &qscale, Some(&tab), &t).unwrap();
            let b =
                render_persona_prompt(&other, &scale, &qscale, Some(&tab), &t).unwrap();
            assert_ne!(a, b);
        }
    }

    #[test]
    fn missing_expansion_entry_is_reported() {
        let mut tab = table();
        tab.sentences.remove("bfi2_16");
        let err = render_persona_prompt(
            &profile(PromptFormat::Expanded),
            &two_item_scale(),
            &questionnaire_scale(),
            Some(&tab),
            &templates(),
        )
        .unwrap_err();
        assert!(matches!(err, PersonaError::MissingExpansion { .. }));
    }

    #[test]
    fn scenarios_require_expanded_personas() {
        let scenarios = vec![
            ScenarioDefinition {
                name: "S1".into(),
                battery: Battery::Risk,
                text: "text".into(),
                anchor_low: "go".into(),
                anchor_high: "stay".into(),
            };
            5
        ];
        let mut scenarios = scenarios;
        for (i, s) in scenarios.iter_mut().enumerate() {
            s.name = alloc::format!("S{i}");
        }
        let err = render_scenarios(
            &profile(PromptFormat::Likert),
            &two_item_scale(),
            &table(),
            &scenarios,
            Battery::Risk,
            &templates(),
        )
        .unwrap_err();
        assert!(matches!(err, PersonaError::ExpandedFormatRequired { .. }));

        let prompt = render_scenarios(
            &profile(PromptFormat::Expanded),
            &two_item_scale(),
            &table(),
            &scenarios,
            Battery::Risk,
            &templates(),
        )
        .unwrap();
        assert_eq!(prompt.matches("### Scenario").count(), 5);
        assert!(prompt.contains("Scenario Name: S0"));
    }

    #[test]
    fn battery_must_have_five_scenarios() {
        let scenarios = vec![ScenarioDefinition {
            name: "only".into(),
            battery: Battery::Ethics,
            text: "t".into(),
            anchor_low: "a".into(),
            anchor_high: "b".into(),
        }];
        assert!(matches!(
            validate_battery(&scenarios, Battery::Ethics),
            Err(PersonaError::BatterySize { .. })
        ));
    }

    #[test]
    fn expansion_validation_catches_bad_ladders() {
        let scale = two_item_scale();
        let mut tab = table();
        tab.sentences.get_mut("bfi2_01").unwrap()[2] = "".into();
        assert!(matches!(
            tab.validate_against(&scale),
            Err(PersonaError::EmptySentence { .. })
        ));
        let mut tab = table();
        tab.sentences.get_mut("bfi2_01").unwrap()[2] = "Somewhat outgoing.".into();
        assert!(matches!(
            tab.validate_against(&scale),
            Err(PersonaError::NotFirstPerson { .. })
        ));
        assert!(table().validate_against(&scale).is_ok());
    }
}

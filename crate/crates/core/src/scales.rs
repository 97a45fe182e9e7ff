//! Personality instruments as data: item definitions, scale validation, and
//! scoring with reverse-coding.
//!
//! Instruments ship as item-bank files (see the `psychoforge` crate for the
//! loader); this module owns the in-memory types and the scoring rules.
//! Domain scores are computed as means of the recoded items rather than sums
//! so they stay on the response scale; every downstream analysis in the
//! toolkit is correlation-based, for which the two are equivalent.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// The five personality domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Domain {
    #[serde(rename = "O")]
    Openness,
    #[serde(rename = "C")]
    Conscientiousness,
    #[serde(rename = "E")]
    Extraversion,
    #[serde(rename = "A")]
    Agreeableness,
    #[serde(rename = "N")]
    Neuroticism,
}

impl Domain {
    pub const ALL: [Domain; 5] = [
        Domain::Openness,
        Domain::Conscientiousness,
        Domain::Extraversion,
        Domain::Agreeableness,
        Domain::Neuroticism,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Domain::Openness => "O",
            Domain::Conscientiousness => "C",
            Domain::Extraversion => "E",
            Domain::Agreeableness => "A",
            Domain::Neuroticism => "N",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Domain::Openness => "Openness",
            Domain::Conscientiousness => "Conscientiousness",
            Domain::Extraversion => "Extraversion",
            Domain::Agreeableness => "Agreeableness",
            Domain::Neuroticism => "Neuroticism",
        }
    }

    pub fn from_code(code: &str) -> Option<Domain> {
        match code {
            "O" => Some(Domain::Openness),
            "C" => Some(Domain::Conscientiousness),
            "E" => Some(Domain::Extraversion),
            "A" => Some(Domain::Agreeableness),
            "N" => Some(Domain::Neuroticism),
            _ => None,
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Whether a high raw answer indicates a high or low standing on the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Keying {
    Positive,
    Reversed,
}

/// Item phrasing style; adjectives embed differently from full statements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemKind {
    Statement,
    Adjective,
}

/// One item of a personality instrument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemDefinition {
    pub id: String,
    pub text: String,
    pub domain: Domain,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub facet: Option<String>,
    pub keying: Keying,
    pub kind: ItemKind,
}

/// A complete instrument: named, ordered items with a shared response range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleDefinition {
    pub name: String,
    pub response_min: i64,
    pub response_max: i64,
    pub items: Vec<ItemDefinition>,
}

/// Structural expectations for a named instrument.
#[derive(Debug, Clone, Copy)]
pub struct ScaleProfile {
    pub name: &'static str,
    pub items: usize,
    pub per_domain: usize,
    pub facets_per_domain: Option<usize>,
    pub items_per_facet: Option<usize>,
    pub response_min: i64,
    pub response_max: i64,
}

/// Instruments whose shape is checked on load.
pub const KNOWN_PROFILES: [ScaleProfile; 2] = [
    ScaleProfile {
        name: "BFI2",
        items: 60,
        per_domain: 12,
        facets_per_domain: Some(3),
        items_per_facet: Some(4),
        response_min: 1,
        response_max: 5,
    },
    ScaleProfile {
        name: "Mini-Markers",
        items: 40,
        per_domain: 8,
        facets_per_domain: None,
        items_per_facet: None,
        response_min: 1,
        response_max: 9,
    },
];

#[derive(Debug, Clone, PartialEq)]
pub enum ScaleError {
    EmptyScale,
    InvalidRange { min: i64, max: i64 },
    DuplicateItemId(String),
    MixedFacetPresence(String),
    FacetSpansDomains(String),
    ItemCountMismatch { expected: usize, actual: usize },
    DomainCountMismatch { domain: Domain, expected: usize, actual: usize },
    FacetCountMismatch { facet: String, expected: usize, actual: usize },
    FacetStructureMismatch { domain: Domain, expected: usize, actual: usize },
    RangeMismatch { expected: (i64, i64), actual: (i64, i64) },
    FacetsNotAllowed(String),
    WrongScale { expected: String, actual: String },
    MissingAnswer(String),
    UnknownItem(String),
    AnswerOutOfRange { item: String, value: i64, min: i64, max: i64 },
}

impl fmt::Display for ScaleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScaleError::EmptyScale => write!(f, "scale has no items"),
            ScaleError::InvalidRange { min, max } => {
                write!(f, "response range [{min},{max}] is invalid")
            }
            ScaleError::DuplicateItemId(id) => write!(f, "duplicate item id '{id}'"),
            ScaleError::MixedFacetPresence(id) => {
                write!(f, "item '{id}' breaks the all-or-none facet rule")
            }
            ScaleError::FacetSpansDomains(facet) => {
                write!(f, "facet '{facet}' appears under more than one domain")
            }
            ScaleError::ItemCountMismatch { expected, actual } => {
                write!(f, "expected {expected} items, found {actual}")
            }
            ScaleError::DomainCountMismatch { domain, expected, actual } => {
                write!(f, "domain {domain} has {actual} items, expected {expected}")
            }
            ScaleError::FacetCountMismatch { facet, expected, actual } => {
                write!(f, "facet '{facet}' has {actual} items, expected {expected}")
            }
            ScaleError::FacetStructureMismatch { domain, expected, actual } => {
                write!(f, "domain {domain} has {actual} facets, expected {expected}")
            }
            ScaleError::RangeMismatch { expected, actual } => write!(
                f,
                "response range [{},{}] does not match the instrument's [{},{}]",
                actual.0, actual.1, expected.0, expected.1
            ),
            ScaleError::FacetsNotAllowed(id) => {
                write!(f, "item '{id}' declares a facet but the instrument has none")
            }
            ScaleError::WrongScale { expected, actual } => {
                write!(f, "responses are for scale '{actual}', expected '{expected}'")
            }
            ScaleError::MissingAnswer(id) => write!(f, "missing answer for item '{id}'"),
            ScaleError::UnknownItem(id) => write!(f, "answer for unknown item '{id}'"),
            ScaleError::AnswerOutOfRange { item, value, min, max } => {
                write!(f, "answer {value} for item '{item}' outside [{min},{max}]")
            }
        }
    }
}

impl core::error::Error for ScaleError {}

impl ScaleDefinition {
    /// Structural validation independent of any named instrument: unique ids,
    /// a sane range, consistent facet usage, and a uniform domain layout.
    pub fn validate(&self) -> Result<(), ScaleError> {
        if self.items.is_empty() {
            return Err(ScaleError::EmptyScale);
        }
        if self.response_min >= self.response_max {
            return Err(ScaleError::InvalidRange {
                min: self.response_min,
                max: self.response_max,
            });
        }
        let mut seen = BTreeSet::new();
        for item in &self.items {
            if !seen.insert(item.id.as_str()) {
                return Err(ScaleError::DuplicateItemId(item.id.clone()));
            }
        }
        let has_facets = self.items[0].facet.is_some();
        let mut facet_domains: BTreeMap<&str, Domain> = BTreeMap::new();
        for item in &self.items {
            if item.facet.is_some() != has_facets {
                return Err(ScaleError::MixedFacetPresence(item.id.clone()));
            }
            if let Some(facet) = &item.facet {
                match facet_domains.get(facet.as_str()) {
                    Some(d) if *d != item.domain => {
                        return Err(ScaleError::FacetSpansDomains(facet.clone()))
                    }
                    None => {
                        facet_domains.insert(facet.as_str(), item.domain);
                    }
                    _ => {}
                }
            }
        }
        let mut per_domain: BTreeMap<Domain, usize> = BTreeMap::new();
        for item in &self.items {
            *per_domain.entry(item.domain).or_insert(0) += 1;
        }
        let first = *per_domain.values().next().unwrap();
        for domain in Domain::ALL {
            let count = per_domain.get(&domain).copied().unwrap_or(0);
            if count != first {
                return Err(ScaleError::DomainCountMismatch {
                    domain,
                    expected: first,
                    actual: count,
                });
            }
        }
        Ok(())
    }

    /// Checks the scale against a named instrument's expected shape.
    pub fn validate_profile(&self, profile: &ScaleProfile) -> Result<(), ScaleError> {
        if self.items.len() != profile.items {
            return Err(ScaleError::ItemCountMismatch {
                expected: profile.items,
                actual: self.items.len(),
            });
        }
        if (self.response_min, self.response_max) != (profile.response_min, profile.response_max) {
            return Err(ScaleError::RangeMismatch {
                expected: (profile.response_min, profile.response_max),
                actual: (self.response_min, self.response_max),
            });
        }
        for domain in Domain::ALL {
            let count = self.items.iter().filter(|i| i.domain == domain).count();
            if count != profile.per_domain {
                return Err(ScaleError::DomainCountMismatch {
                    domain,
                    expected: profile.per_domain,
                    actual: count,
                });
            }
        }
        match profile.facets_per_domain {
            Some(fpd) => {
                let per_facet = profile.items_per_facet.unwrap_or(0);
                for domain in Domain::ALL {
                    let mut facets: BTreeMap<&str, usize> = BTreeMap::new();
                    for item in self.items.iter().filter(|i| i.domain == domain) {
                        match &item.facet {
                            Some(facet) => *facets.entry(facet.as_str()).or_insert(0) += 1,
                            None => return Err(ScaleError::MixedFacetPresence(item.id.clone())),
                        }
                    }
                    if facets.len() != fpd {
                        return Err(ScaleError::FacetStructureMismatch {
                            domain,
                            expected: fpd,
                            actual: facets.len(),
                        });
                    }
                    for (facet, count) in facets {
                        if count != per_facet {
                            return Err(ScaleError::FacetCountMismatch {
                                facet: facet.into(),
                                expected: per_facet,
                                actual: count,
                            });
                        }
                    }
                }
            }
            None => {
                if let Some(item) = self.items.iter().find(|i| i.facet.is_some()) {
                    return Err(ScaleError::FacetsNotAllowed(item.id.clone()));
                }
            }
        }
        Ok(())
    }

    pub fn item(&self, id: &str) -> Option<&ItemDefinition> {
        self.items.iter().find(|i| i.id == id)
    }

    /// Items of one domain in scale order.
    pub fn domain_items(&self, domain: Domain) -> impl Iterator<Item = &ItemDefinition> {
        self.items.iter().filter(move |i| i.domain == domain)
    }

    /// Distinct facet names in scale order, empty for facet-less instruments.
    pub fn facets(&self) -> Vec<&str> {
        let mut out = Vec::new();
        for item in &self.items {
            if let Some(f) = &item.facet {
                if !out.contains(&f.as_str()) {
                    out.push(f.as_str());
                }
            }
        }
        out
    }

    pub fn midpoint(&self) -> f64 {
        (self.response_min + self.response_max) as f64 / 2.0
    }
}

/// One respondent's complete answers to a scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseVector {
    pub scale_name: String,
    pub answers: BTreeMap<String, i64>,
}

impl ResponseVector {
    pub fn new(scale_name: impl Into<String>) -> Self {
        ResponseVector {
            scale_name: scale_name.into(),
            answers: BTreeMap::new(),
        }
    }

    /// Completeness and range validation against the scale definition.
    pub fn validate_against(&self, scale: &ScaleDefinition) -> Result<(), ScaleError> {
        if self.scale_name != scale.name {
            return Err(ScaleError::WrongScale {
                expected: scale.name.clone(),
                actual: self.scale_name.clone(),
            });
        }
        for item in &scale.items {
            match self.answers.get(&item.id) {
                None => return Err(ScaleError::MissingAnswer(item.id.clone())),
                Some(&v) if v < scale.response_min || v > scale.response_max => {
                    return Err(ScaleError::AnswerOutOfRange {
                        item: item.id.clone(),
                        value: v,
                        min: scale.response_min,
                        max: scale.response_max,
                    })
                }
                _ => {}
            }
        }
        if self.answers.len() != scale.items.len() {
            let known: BTreeSet<&str> = scale.items.iter().map(|i| i.id.as_str()).collect();
            let extra = self
                .answers
                .keys()
                .find(|k| !known.contains(k.as_str()))
                .cloned()
                .unwrap_or_default();
            return Err(ScaleError::UnknownItem(extra));
        }
        Ok(())
    }
}

/// Domain (and facet, where defined) scores for one respondent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub domain_scores: BTreeMap<Domain, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub facet_scores: Option<BTreeMap<String, f64>>,
}

impl ScoreReport {
    pub fn domain(&self, domain: Domain) -> f64 {
        self.domain_scores[&domain]
    }
}

/// Reflects an answer around the scale midpoint: `min + max - answer`.
pub fn reverse_code(answer: i64, scale: &ScaleDefinition) -> Result<i64, ScaleError> {
    if answer < scale.response_min || answer > scale.response_max {
        return Err(ScaleError::AnswerOutOfRange {
            item: String::new(),
            value: answer,
            min: scale.response_min,
            max: scale.response_max,
        });
    }
    Ok(scale.response_min + scale.response_max - answer)
}

/// Recoded value of one item's answer (reversed items are reflected).
pub fn recoded_answer(
    item: &ItemDefinition,
    answer: i64,
    scale: &ScaleDefinition,
) -> Result<i64, ScaleError> {
    match item.keying {
        Keying::Positive => {
            if answer < scale.response_min || answer > scale.response_max {
                return Err(ScaleError::AnswerOutOfRange {
                    item: item.id.clone(),
                    value: answer,
                    min: scale.response_min,
                    max: scale.response_max,
                });
            }
            Ok(answer)
        }
        Keying::Reversed => reverse_code(answer, scale).map_err(|e| match e {
            ScaleError::AnswerOutOfRange { value, min, max, .. } => {
                ScaleError::AnswerOutOfRange {
                    item: item.id.clone(),
                    value,
                    min,
                    max,
                }
            }
            other => other,
        }),
    }
}

/// Scores a complete response vector: domain means over recoded items, plus
/// facet means when the instrument defines facets.
pub fn score(
    responses: &ResponseVector,
    scale: &ScaleDefinition,
) -> Result<ScoreReport, ScaleError> {
    responses.validate_against(scale)?;

    let mut domain_sum: BTreeMap<Domain, (f64, usize)> = BTreeMap::new();
    let mut facet_sum: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    let has_facets = scale.items.iter().any(|i| i.facet.is_some());

    for item in &scale.items {
        let recoded = recoded_answer(item, responses.answers[&item.id], scale)? as f64;
        let entry = domain_sum.entry(item.domain).or_insert((0.0, 0));
        entry.0 += recoded;
        entry.1 += 1;
        if let Some(facet) = &item.facet {
            let entry = facet_sum.entry(facet.clone()).or_insert((0.0, 0));
            entry.0 += recoded;
            entry.1 += 1;
        }
    }

    let domain_scores = domain_sum
        .into_iter()
        .map(|(d, (sum, n))| (d, sum / n as f64))
        .collect();
    let facet_scores = if has_facets {
        Some(
            facet_sum
                .into_iter()
                .map(|(f, (sum, n))| (f, sum / n as f64))
                .collect(),
        )
    } else {
        None
    };

    Ok(ScoreReport {
        domain_scores,
        facet_scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::string::ToString;
    use alloc::vec;

    fn tiny_scale() -> ScaleDefinition {
        let mk = |id: &str, text: &str, domain, keying| ItemDefinition {
            id: id.into(),
            text: text.into(),
            domain,
            facet: None,
            keying,
            kind: ItemKind::Statement,
        };
        ScaleDefinition {
            name: "tiny".into(),
            response_min: 1,
            response_max: 5,
            items: vec![
                mk("t1", "Is talkative", Domain::Extraversion, Keying::Positive),
                mk("t2", "Tends to be quiet", Domain::Extraversion, Keying::Reversed),
                mk("t3", "Is curious", Domain::Openness, Keying::Positive),
                mk("t4", "Dislikes art", Domain::Openness, Keying::Reversed),
                mk("t5", "Is organized", Domain::Conscientiousness, Keying::Positive),
                mk("t6", "Is messy", Domain::Conscientiousness, Keying::Reversed),
                mk("t7", "Is kind", Domain::Agreeableness, Keying::Positive),
                mk("t8", "Is rude", Domain::Agreeableness, Keying::Reversed),
                mk("t9", "Worries", Domain::Neuroticism, Keying::Positive),
                mk("t10", "Is calm", Domain::Neuroticism, Keying::Reversed),
            ],
        }
    }

    fn answer_all(scale: &ScaleDefinition, value: i64) -> ResponseVector {
        let mut rv = ResponseVector::new(scale.name.clone());
        for item in &scale.items {
            rv.answers.insert(item.id.clone(), value);
        }
        rv
    }

    #[test]
    fn reverse_code_endpoints_and_midpoint() {
        let scale = tiny_scale();
        assert_eq!(reverse_code(5, &scale).unwrap(), 1);
        assert_eq!(reverse_code(3, &scale).unwrap(), 3);
        let nine = ScaleDefinition {
            response_max: 9,
            ..tiny_scale()
        };
        assert_eq!(reverse_code(2, &nine).unwrap(), 8);
        assert!(reverse_code(6, &scale).is_err());
    }

    #[test]
    fn reverse_code_is_an_involution() {
        let scale = tiny_scale();
        for v in 1..=5 {
            let coded = reverse_code(v, &scale).unwrap();
            assert_eq!(reverse_code(coded, &scale).unwrap(), v);
        }
    }

    #[test]
    fn midpoint_profile_scores_midpoint() {
        let scale = tiny_scale();
        let report = score(&answer_all(&scale, 3), &scale).unwrap();
        for domain in Domain::ALL {
            assert_eq!(report.domain(domain), 3.0);
        }
    }

    #[test]
    fn keyed_maximum_scores_maximum() {
        let scale = tiny_scale();
        let mut rv = ResponseVector::new("tiny");
        for item in &scale.items {
            let v = match item.keying {
                Keying::Positive => 5,
                Keying::Reversed => 1,
            };
            rv.answers.insert(item.id.clone(), v);
        }
        let report = score(&rv, &scale).unwrap();
        for domain in Domain::ALL {
            assert_eq!(report.domain(domain), 5.0);
        }
    }

    #[test]
    fn missing_and_unknown_answers_are_named() {
        let scale = tiny_scale();
        let mut rv = answer_all(&scale, 3);
        rv.answers.remove("t4");
        assert_eq!(
            score(&rv, &scale).unwrap_err(),
            ScaleError::MissingAnswer("t4".to_string())
        );
        let mut rv = answer_all(&scale, 3);
        rv.answers.insert("ghost".into(), 3);
        assert_eq!(
            score(&rv, &scale).unwrap_err(),
            ScaleError::UnknownItem("ghost".to_string())
        );
    }

    #[test]
    fn out_of_range_answer_is_rejected() {
        let scale = tiny_scale();
        let mut rv = answer_all(&scale, 3);
        rv.answers.insert("t1".into(), 7);
        assert!(matches!(
            score(&rv, &scale).unwrap_err(),
            ScaleError::AnswerOutOfRange { .. }
        ));
    }

    #[test]
    fn duplicate_ids_are_rejected_by_name() {
        let mut scale = tiny_scale();
        scale.items[1].id = "t1".into();
        let err = scale.validate().unwrap_err();
        assert_eq!(err, ScaleError::DuplicateItemId("t1".to_string()));
        assert!(format!("{err}").contains("t1"));
    }

    #[test]
    fn uneven_domains_are_rejected() {
        let mut scale = tiny_scale();
        scale.items.pop();
        assert!(matches!(
            scale.validate().unwrap_err(),
            ScaleError::DomainCountMismatch { .. }
        ));
    }
}

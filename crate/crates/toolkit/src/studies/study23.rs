//! Persona assignment and psychometric validation: builds personas from an
//! empirical BFI2 matrix (study-2 shape) or simulated responses (study-3
//! shape), runs the agent batch against the adjective questionnaire, and
//! emits convergent correlations plus per-domain CFA and reliability
//! reports, including multicollinearity diagnoses and the post-drop refit.

use psychoforge_core::linalg::Mat;
use psychoforge_core::persona::{render_persona_prompt, PersonaProfile, PromptFormat};
use psychoforge_core::psychometrics::{
    convergent_table, cronbach_alpha, fit_one_factor_cfa, AlphaReport, CfaFailure, CfaFit,
    ConvergentTable, CorrelationMatrix,
};
use psychoforge_core::scales::{score, Domain, Keying, ResponseVector, ScaleDefinition, ScoreReport};

use super::{fmt_float, write_csv, BackendKind, PersonaSource, RunError, RunOptions};
use crate::agent::{
    run_batch, AgentSpec, AnswerSchema, CompletionBackend, MockBackend, MockCrosswalk, MockTask,
    ParsedAnswers, RemoteBackend,
};
use crate::formats::{
    load_expansion_table, load_scale, load_scenarios, load_templates, write_response_matrix,
};
use crate::manifest::ManifestBuilder;
use crate::transcript::TranscriptStore;

pub struct FormatOutcome {
    pub format: PromptFormat,
    pub n_agents: usize,
    pub n_success: usize,
    pub convergent: ConvergentTable,
    pub alphas: Vec<AlphaReport>,
    pub cfa: Vec<DomainCfa>,
}

pub struct DomainCfa {
    pub domain: Domain,
    pub initial_failure: Option<CfaFailure>,
    pub dropped: Vec<String>,
    pub fit: CfaFit,
    pub alpha: AlphaReport,
}

pub struct Study23Outcome {
    pub source: PersonaSource,
    pub per_format: Vec<FormatOutcome>,
}

pub fn run(opts: &RunOptions) -> Result<Study23Outcome, RunError> {
    opts.validate_for_agents()?;
    let config_echo = serde_json::to_value(opts).expect("options serialize");
    let mut builder = ManifestBuilder::new(&opts.out_dir, "study23", config_echo)?;

    let assets = &opts.assets_dir;
    let bfi2 = load_scale(&crate::assets::bfi2_bank(assets))?;
    let mm = load_scale(&crate::assets::mini_markers_bank(assets))?;
    let templates = load_templates(&crate::assets::templates_dir(assets))?;
    let expansion = load_expansion_table(&crate::assets::expansion_table(assets), &bfi2)?;
    let crosswalk = MockCrosswalk::load(&crate::assets::crosswalk(assets))?;
    let scenarios = load_scenarios(&crate::assets::scenarios(assets))?;
    crosswalk.validate(&mm, &bfi2, &scenarios)?;

    let (responses, source) = super::load_input_responses(opts, &bfi2, &mut builder)?;
    if responses.is_empty() {
        return Err(RunError::Config("no input responses; nothing to run".into()));
    }

    let schema = AnswerSchema {
        keys: mm.items.iter().map(|i| i.id.clone()).collect(),
        min: mm.response_min,
        max: mm.response_max,
    };

    let remote = match opts.backend {
        BackendKind::Remote => Some(RemoteBackend::from_env()?),
        BackendKind::Mock => None,
    };

    let mut per_format = Vec::new();
    for format in opts.format.formats() {
        let slug = format_slug(format);
        let profiles = super::profiles_from_responses(&responses, format);
        let specs: Vec<AgentSpec> = profiles
            .iter()
            .map(|p| {
                Ok(AgentSpec {
                    agent_id: p.agent_id.clone(),
                    prompt: render_persona_prompt(p, &bfi2, &mm, Some(&expansion), &templates)?,
                    model_name: opts.model.clone(),
                    temperature: opts.temperature,
                    max_retries: opts.max_retries,
                })
            })
            .collect::<Result<_, RunError>>()?;

        let mock;
        let backend: &dyn CompletionBackend = match &remote {
            Some(remote) => remote,
            None => {
                mock = MockBackend::new(
                    crosswalk.clone(),
                    bfi2.clone(),
                    mm.clone(),
                    scenarios.clone(),
                    MockTask::Questionnaire,
                    opts.noise_sd,
                    opts.seed,
                    &profiles,
                );
                &mock
            }
        };

        let transcript_name = format!("transcripts_{slug}.jsonl");
        let transcripts = TranscriptStore::open(&builder.run_dir().join(&transcript_name))
            .map_err(|e| RunError::Config(e.to_string()))?;
        let results = run_batch(&specs, backend, &schema, opts.concurrency, Some(&transcripts))?;
        builder.record_output(&transcript_name)?;

        let (successes, failures) = split_results(&profiles, results);
        if !failures.is_empty() {
            let mut rows = vec![vec!["agent_id".to_string(), "error".to_string()]];
            rows.extend(failures.iter().cloned().map(|(id, e)| vec![id, e]));
            let name = format!("failures_{slug}.csv");
            write_csv(&builder.run_dir().join(&name), &rows)?;
            builder.record_output(&name)?;
            log::warn!("{} of {} agents failed in {slug}", failures.len(), specs.len());
        }
        if successes.is_empty() {
            return Err(RunError::Config(format!("every {slug} agent failed")));
        }

        let mm_responses: Vec<ResponseVector> = successes
            .iter()
            .map(|(_, parsed)| ResponseVector {
                scale_name: mm.name.clone(),
                answers: parsed.answers.clone(),
            })
            .collect();
        let name = format!("responses_{slug}.csv");
        write_response_matrix(&builder.run_dir().join(&name), &mm, &mm_responses)?;
        builder.record_output(&name)?;

        // Convergent correlations: input BFI2 scores vs questionnaire scores.
        let input_scores: Vec<ScoreReport> = successes
            .iter()
            .map(|(profile, _)| score(&profile.bfi2, &bfi2))
            .collect::<Result<_, _>>()?;
        let output_scores: Vec<ScoreReport> = mm_responses
            .iter()
            .map(|rv| score(rv, &mm))
            .collect::<Result<_, _>>()?;
        let convergent = convergent_table(&input_scores, &output_scores)?;
        write_convergent(&mut builder, &slug, &convergent)?;

        // Per-domain CFA and reliability on the recoded item matrix.
        let mut alphas = Vec::new();
        let mut cfa_rows = vec![vec![
            "domain".to_string(),
            "item".to_string(),
            "loading".to_string(),
            "uniqueness".to_string(),
            "heywood".to_string(),
        ]];
        let mut fit_rows = vec![vec![
            "domain".to_string(),
            "converged".to_string(),
            "iterations".to_string(),
            "fit_value".to_string(),
            "dropped_items".to_string(),
            "diagnosis".to_string(),
        ]];
        let mut domain_fits: Vec<DomainCfa> = Vec::new();
        for domain in Domain::ALL {
            let analysis = analyze_domain(&mm, domain, &mm_responses)?;
            for (item, (loading, uniqueness)) in
                analysis.fit.labels.iter().zip(analysis.fit.loadings.iter().zip(&analysis.fit.uniquenesses))
            {
                cfa_rows.push(vec![
                    domain.code().to_string(),
                    item.clone(),
                    fmt_float(*loading),
                    fmt_float(*uniqueness),
                    analysis.fit.heywood_flags.contains(item).to_string(),
                ]);
            }
            fit_rows.push(vec![
                domain.code().to_string(),
                analysis.fit.converged.to_string(),
                analysis.fit.iterations.to_string(),
                if analysis.fit.fit_value.is_finite() {
                    fmt_float(analysis.fit.fit_value)
                } else {
                    String::new()
                },
                analysis.dropped.join(";"),
                analysis
                    .initial_failure
                    .as_ref()
                    .map(|f| f.to_string())
                    .unwrap_or_default(),
            ]);
            alphas.push(analysis.alpha.clone());
            domain_fits.push(analysis);
        }
        write_csv(&builder.run_dir().join(format!("cfa_{slug}.csv")), &cfa_rows)?;
        builder.record_output(&format!("cfa_{slug}.csv"))?;
        write_csv(&builder.run_dir().join(format!("cfa_fit_{slug}.csv")), &fit_rows)?;
        builder.record_output(&format!("cfa_fit_{slug}.csv"))?;

        let mut alpha_rows = vec![vec![
            "domain".to_string(),
            "alpha".to_string(),
            "k_items".to_string(),
            "dropped_items".to_string(),
        ]];
        for alpha in &alphas {
            alpha_rows.push(vec![
                alpha.domain.code().to_string(),
                fmt_float(alpha.alpha),
                alpha.k_items.to_string(),
                alpha.dropped_items.join(";"),
            ]);
        }
        write_csv(&builder.run_dir().join(format!("alpha_{slug}.csv")), &alpha_rows)?;
        builder.record_output(&format!("alpha_{slug}.csv"))?;

        per_format.push(FormatOutcome {
            format,
            n_agents: specs.len(),
            n_success: successes.len(),
            convergent,
            alphas,
            cfa: domain_fits,
        });
    }

    builder.finalize()?;
    Ok(Study23Outcome { source, per_format })
}

pub fn format_slug(format: PromptFormat) -> String {
    match format {
        PromptFormat::Likert => "likert".to_string(),
        PromptFormat::Expanded => "expanded".to_string(),
    }
}

fn split_results(
    profiles: &[PersonaProfile],
    results: Vec<Result<ParsedAnswers, crate::agent::AgentError>>,
) -> (Vec<(PersonaProfile, ParsedAnswers)>, Vec<(String, String)>) {
    let mut successes = Vec::new();
    let mut failures = Vec::new();
    for (profile, result) in profiles.iter().zip(results) {
        match result {
            Ok(parsed) => successes.push((profile.clone(), parsed)),
            Err(e) => failures.push((profile.agent_id.clone(), e.to_string())),
        }
    }
    (successes, failures)
}

fn write_convergent(
    builder: &mut ManifestBuilder,
    slug: &str,
    table: &ConvergentTable,
) -> Result<(), RunError> {
    let mut header = vec!["population".to_string()];
    header.extend(Domain::ALL.iter().map(|d| d.code().to_string()));
    header.push("average".to_string());
    let mut row = vec![format!("agents-{slug} vs input")];
    row.extend(table.per_domain.iter().map(|(_, r)| fmt_float(*r)));
    row.push(fmt_float(table.average));
    let name = format!("convergent_{slug}.csv");
    write_csv(&builder.run_dir().join(&name), &[header, row])?;
    builder.record_output(&name)?;
    Ok(())
}

/// The recoded item matrix for one domain: one column per item in scale
/// order, reversed items reflected.
pub fn domain_item_matrix(
    scale: &ScaleDefinition,
    domain: Domain,
    responses: &[ResponseVector],
) -> (Vec<String>, Mat) {
    let items: Vec<_> = scale.domain_items(domain).collect();
    let labels: Vec<String> = items.iter().map(|i| i.id.clone()).collect();
    let mut matrix = Mat::zeros(responses.len(), items.len());
    for (r, rv) in responses.iter().enumerate() {
        for (c, item) in items.iter().enumerate() {
            let raw = rv.answers[&item.id];
            let value = match item.keying {
                Keying::Positive => raw,
                Keying::Reversed => scale.response_min + scale.response_max - raw,
            };
            matrix.set(r, c, value as f64);
        }
    }
    (labels, matrix)
}

/// CFA with the multicollinearity protocol: when the gate names a perfectly
/// correlated pair, the later-listed item is dropped and the model refit;
/// reliability is computed on the surviving item set.
pub fn analyze_domain(
    scale: &ScaleDefinition,
    domain: Domain,
    responses: &[ResponseVector],
) -> Result<DomainCfa, RunError> {
    let (labels, matrix) = domain_item_matrix(scale, domain, responses);
    let mut corr = CorrelationMatrix::from_columns(labels.clone(), &matrix)?;
    let mut dropped: Vec<String> = Vec::new();
    let mut initial_failure = None;

    let fit = loop {
        let fit = fit_one_factor_cfa(&corr)?;
        match &fit.failure {
            Some(CfaFailure::Multicollinearity { item_a, item_b, .. }) if corr.len() > 3 => {
                if initial_failure.is_none() {
                    initial_failure = fit.failure.clone();
                }
                // Drop whichever of the pair the scale lists later.
                let later = if position(&labels, item_a) > position(&labels, item_b) {
                    item_a.clone()
                } else {
                    item_b.clone()
                };
                log::warn!(
                    "{domain}: {}; dropping '{later}' and refitting",
                    fit.failure.as_ref().unwrap()
                );
                corr = corr.without_item(&later)?;
                dropped.push(later);
            }
            _ => break fit,
        }
    };

    // Reliability over the same surviving items.
    let keep: Vec<usize> = labels
        .iter()
        .enumerate()
        .filter(|(_, l)| !dropped.contains(l))
        .map(|(i, _)| i)
        .collect();
    let mut reduced = Mat::zeros(matrix.rows(), keep.len());
    for (c, &src) in keep.iter().enumerate() {
        for r in 0..matrix.rows() {
            reduced.set(r, c, matrix.get(r, src));
        }
    }
    // Columns are already recoded, so keying is uniformly positive here.
    let alpha_value = cronbach_alpha(&reduced, &vec![Keying::Positive; keep.len()])?;
    let alpha = AlphaReport {
        domain,
        alpha: alpha_value,
        k_items: keep.len(),
        dropped_items: dropped.clone(),
    };

    Ok(DomainCfa { domain, initial_failure, dropped, fit, alpha })
}

fn position(labels: &[String], item: &str) -> usize {
    labels.iter().position(|l| l == item).unwrap_or(usize::MAX)
}

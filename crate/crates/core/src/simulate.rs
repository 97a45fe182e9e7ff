//! Parametric generation of item-level BFI2 response matrices from facet
//! summary statistics.
//!
//! The generative model: facet scores are multivariate normal with the given
//! means and a block-diagonal covariance (domains independent, facets within
//! a domain linearly related); each item equals its facet score plus an
//! independent normal error. The error variance is calibrated from the
//! facet's average intra-facet item correlation `rho`:
//!
//! ```text
//! corr(x1, x2) = var(f) / (var(f) + var(e)) = rho
//!   => var(e) = var(f) * (1 - rho) / rho
//! ```
//!
//! so two items sharing a facet correlate `rho` in expectation. Reversed
//! items are generated on the positively keyed latent and reflected
//! afterwards, which keeps keying from distorting intra-facet correlations.
//! Discretization is round-and-clamp onto the response range.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float; // sqrt/ln/... in no_std builds

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::linalg::{cholesky_psd, LinalgError, Mat};
use crate::scales::{Keying, ResponseVector, ScaleDefinition, ScaleError};
use crate::seed::{substream, Stage};

pub const FACET_COUNT: usize = 15;

/// The fifteen BFI2 facets, three per domain, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Facet {
    AestheticSensitivity,
    IntellectualCuriosity,
    CreativeImagination,
    Organization,
    Productiveness,
    Responsibility,
    Sociability,
    Assertiveness,
    EnergyLevel,
    Compassion,
    Respectfulness,
    Trust,
    Anxiety,
    Depression,
    EmotionalVolatility,
}

impl Facet {
    pub const ALL: [Facet; FACET_COUNT] = [
        Facet::AestheticSensitivity,
        Facet::IntellectualCuriosity,
        Facet::CreativeImagination,
        Facet::Organization,
        Facet::Productiveness,
        Facet::Responsibility,
        Facet::Sociability,
        Facet::Assertiveness,
        Facet::EnergyLevel,
        Facet::Compassion,
        Facet::Respectfulness,
        Facet::Trust,
        Facet::Anxiety,
        Facet::Depression,
        Facet::EmotionalVolatility,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Facet::AestheticSensitivity => "Aesthetic Sensitivity",
            Facet::IntellectualCuriosity => "Intellectual Curiosity",
            Facet::CreativeImagination => "Creative Imagination",
            Facet::Organization => "Organization",
            Facet::Productiveness => "Productiveness",
            Facet::Responsibility => "Responsibility",
            Facet::Sociability => "Sociability",
            Facet::Assertiveness => "Assertiveness",
            Facet::EnergyLevel => "Energy Level",
            Facet::Compassion => "Compassion",
            Facet::Respectfulness => "Respectfulness",
            Facet::Trust => "Trust",
            Facet::Anxiety => "Anxiety",
            Facet::Depression => "Depression",
            Facet::EmotionalVolatility => "Emotional Volatility",
        }
    }

    pub fn from_name(name: &str) -> Option<Facet> {
        Facet::ALL.iter().copied().find(|f| f.name() == name)
    }

    pub fn index(self) -> usize {
        Facet::ALL.iter().position(|f| *f == self).unwrap()
    }

    /// Domain block index (0..5); facets of one domain are adjacent.
    pub fn block(self) -> usize {
        self.index() / 3
    }
}

/// Inputs for one simulation run, all on response-scale units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationParams {
    pub facet_means: [f64; FACET_COUNT],
    pub facet_sds: [f64; FACET_COUNT],
    pub facet_corr: Vec<Vec<f64>>,
    pub intra_facet_item_corr: [f64; FACET_COUNT],
    pub n_agents: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimulateError {
    NonFiniteParameter(&'static str),
    NegativeSd { facet: Facet, value: f64 },
    BadCorrShape { rows: usize, cols: usize },
    CorrNotSymmetric { i: usize, j: usize },
    CorrDiagonalNotUnit { i: usize },
    CorrOutOfRange { i: usize, j: usize, value: f64 },
    CrossDomainCorrelation { i: usize, j: usize, value: f64 },
    IntraItemCorrOutOfRange { facet: Facet, value: f64 },
    NotPositiveSemiDefinite(LinalgError),
    FacetMissingFromScale(Facet),
    UnknownFacetInScale(String),
    Scale(ScaleError),
}

impl fmt::Display for SimulateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimulateError::NonFiniteParameter(which) => {
                write!(f, "parameter '{which}' contains a non-finite value")
            }
            SimulateError::NegativeSd { facet, value } => {
                write!(f, "facet '{}' has negative sd {value}", facet.name())
            }
            SimulateError::BadCorrShape { rows, cols } => {
                write!(f, "facet correlation matrix is {rows}x{cols}, expected 15x15")
            }
            SimulateError::CorrNotSymmetric { i, j } => {
                write!(f, "facet correlation matrix is asymmetric at ({i},{j})")
            }
            SimulateError::CorrDiagonalNotUnit { i } => {
                write!(f, "facet correlation diagonal entry {i} is not 1")
            }
            SimulateError::CorrOutOfRange { i, j, value } => {
                write!(f, "facet correlation ({i},{j}) = {value} outside [-1,1]")
            }
            SimulateError::CrossDomainCorrelation { i, j, value } => write!(
                f,
                "cross-domain facet correlation ({i},{j}) = {value}; domains must be independent"
            ),
            SimulateError::IntraItemCorrOutOfRange { facet, value } => write!(
                f,
                "intra-facet item correlation {value} for '{}' outside (0,1]",
                facet.name()
            ),
            SimulateError::NotPositiveSemiDefinite(e) => {
                write!(f, "facet correlation matrix not repairable to PSD: {e}")
            }
            SimulateError::FacetMissingFromScale(facet) => {
                write!(f, "scale has no items for facet '{}'", facet.name())
            }
            SimulateError::UnknownFacetInScale(name) => {
                write!(f, "scale facet '{name}' is not a simulated facet")
            }
            SimulateError::Scale(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for SimulateError {}

impl From<ScaleError> for SimulateError {
    fn from(e: ScaleError) -> Self {
        SimulateError::Scale(e)
    }
}

/// Largest ridge that may be silently (but logged) added to repair a
/// numerically non-PSD correlation matrix; bigger defects are hard errors.
pub const MAX_RIDGE: f64 = 1e-6;

const RIDGE_LADDER: [f64; 3] = [1e-10, 1e-8, MAX_RIDGE];
const PIVOT_TOL: f64 = 1e-8;

impl SimulationParams {
    pub fn validate(&self) -> Result<(), SimulateError> {
        if self.facet_means.iter().any(|v| !v.is_finite()) {
            return Err(SimulateError::NonFiniteParameter("facet_means"));
        }
        for (k, (&sd, facet)) in self.facet_sds.iter().zip(Facet::ALL).enumerate() {
            if !sd.is_finite() {
                return Err(SimulateError::NonFiniteParameter("facet_sds"));
            }
            if sd < 0.0 {
                return Err(SimulateError::NegativeSd { facet, value: self.facet_sds[k] });
            }
        }
        if self.facet_corr.len() != FACET_COUNT
            || self.facet_corr.iter().any(|r| r.len() != FACET_COUNT)
        {
            return Err(SimulateError::BadCorrShape {
                rows: self.facet_corr.len(),
                cols: self.facet_corr.first().map(Vec::len).unwrap_or(0),
            });
        }
        for i in 0..FACET_COUNT {
            for j in 0..FACET_COUNT {
                let v = self.facet_corr[i][j];
                if !v.is_finite() {
                    return Err(SimulateError::NonFiniteParameter("facet_corr"));
                }
                if v.abs() > 1.0 + 1e-12 {
                    return Err(SimulateError::CorrOutOfRange { i, j, value: v });
                }
                if (v - self.facet_corr[j][i]).abs() > 1e-12 {
                    return Err(SimulateError::CorrNotSymmetric { i, j });
                }
                if i == j && (v - 1.0).abs() > 1e-12 {
                    return Err(SimulateError::CorrDiagonalNotUnit { i });
                }
                // Domains are independent: off-block entries must be zero.
                if Facet::ALL[i].block() != Facet::ALL[j].block() && v.abs() > 1e-12 {
                    return Err(SimulateError::CrossDomainCorrelation { i, j, value: v });
                }
            }
        }
        for (&rho, facet) in self.intra_facet_item_corr.iter().zip(Facet::ALL) {
            if !rho.is_finite() || rho <= 0.0 || rho > 1.0 {
                return Err(SimulateError::IntraItemCorrOutOfRange { facet, value: rho });
            }
        }
        Ok(())
    }

    pub fn rho(&self, facet: Facet) -> f64 {
        self.intra_facet_item_corr[facet.index()]
    }
}

/// Facet covariance `sigma_ij = sd_i * sd_j * corr_ij` together with its
/// Cholesky factor and any ridge that was needed to repair the correlation
/// matrix.
#[derive(Debug, Clone)]
pub struct Covariance {
    pub matrix: Mat,
    pub factor: Mat,
    pub ridge: f64,
}

/// Builds the facet covariance matrix and factors it.
///
/// A ridge of up to [`MAX_RIDGE`] may be added to the correlation matrix to
/// repair numerical non-PSD-ness; the repair is logged. Anything worse is an
/// error rather than a silent rewrite of the input statistics.
pub fn build_covariance(params: &SimulationParams) -> Result<Covariance, SimulateError> {
    params.validate()?;
    let mut last_err = LinalgError::NotSquare;
    for (attempt, &ridge) in [0.0].iter().chain(RIDGE_LADDER.iter()).enumerate() {
        let mut sigma = Mat::zeros(FACET_COUNT, FACET_COUNT);
        for i in 0..FACET_COUNT {
            for j in 0..FACET_COUNT {
                let corr = self_or_ridge(params.facet_corr[i][j], i, j, ridge);
                sigma.set(i, j, params.facet_sds[i] * params.facet_sds[j] * corr);
            }
        }
        let scale = sigma.max_abs().max(1.0);
        match cholesky_psd(&sigma, PIVOT_TOL * scale) {
            Ok(factor) => {
                if reconstruction_error(&sigma, &factor) <= 1e-8 * scale {
                    if attempt > 0 {
                        log::warn!(
                            "facet correlation matrix was not numerically PSD; \
                             repaired with ridge {ridge:e}"
                        );
                    }
                    return Ok(Covariance { matrix: sigma, factor, ridge });
                }
                last_err = LinalgError::InconsistentDegeneracy { pivot: 0 };
            }
            Err(e) => last_err = e,
        }
    }
    Err(SimulateError::NotPositiveSemiDefinite(last_err))
}

fn self_or_ridge(corr: f64, i: usize, j: usize, ridge: f64) -> f64 {
    if i == j {
        corr + ridge
    } else {
        corr
    }
}

fn reconstruction_error(sigma: &Mat, l: &Mat) -> f64 {
    let rec = l.matmul(&l.transpose());
    let mut err = 0.0f64;
    for i in 0..sigma.rows() {
        for j in 0..sigma.cols() {
            err = err.max((rec.get(i, j) - sigma.get(i, j)).abs());
        }
    }
    err
}

/// Draws `n_agents` facet rows from the multivariate normal.
///
/// Row `i` is `mean + L z_i` where `z_i` comes from the agent's own seed
/// substream, so results are independent of generation order.
pub fn sample_facets(params: &SimulationParams) -> Result<Mat, SimulateError> {
    let cov = build_covariance(params)?;
    Ok(sample_facets_with_factor(params, &cov.factor))
}

pub fn sample_facets_with_factor(params: &SimulationParams, factor: &Mat) -> Mat {
    let mut latent = Mat::zeros(params.n_agents, FACET_COUNT);
    for agent in 0..params.n_agents {
        let mut rng = substream(params.seed, Stage::FacetSampling, agent as u64);
        let z: Vec<f64> = (0..FACET_COUNT).map(|_| rng.sample(StandardNormal)).collect();
        for i in 0..FACET_COUNT {
            let mut v = params.facet_means[i];
            for k in 0..=i {
                v += factor.get(i, k) * z[k];
            }
            latent.set(agent, i, v);
        }
    }
    latent
}

/// Maps scale items to facet indices, requiring every simulated facet to
/// appear in the scale.
fn facet_layout(scale: &ScaleDefinition) -> Result<Vec<usize>, SimulateError> {
    let mut layout = Vec::with_capacity(scale.items.len());
    let mut seen = [false; FACET_COUNT];
    for item in &scale.items {
        let name = item
            .facet
            .as_deref()
            .ok_or_else(|| SimulateError::UnknownFacetInScale(item.id.clone()))?;
        let facet = Facet::from_name(name)
            .ok_or_else(|| SimulateError::UnknownFacetInScale(String::from(name)))?;
        seen[facet.index()] = true;
        layout.push(facet.index());
    }
    for facet in Facet::ALL {
        if !seen[facet.index()] {
            return Err(SimulateError::FacetMissingFromScale(facet));
        }
    }
    Ok(layout)
}

/// Continuous item values on the positively keyed latent, before reflection,
/// rounding, or clamping. One row per agent, one column per scale item.
pub fn generate_continuous_items(
    latent: &Mat,
    scale: &ScaleDefinition,
    params: &SimulationParams,
) -> Result<Mat, SimulateError> {
    params.validate()?;
    let layout = facet_layout(scale)?;
    let mut items = Mat::zeros(latent.rows(), scale.items.len());
    for agent in 0..latent.rows() {
        let mut rng = substream(params.seed, Stage::ItemGeneration, agent as u64);
        for (j, &facet_idx) in layout.iter().enumerate() {
            let rho = params.intra_facet_item_corr[facet_idx];
            let sd_f = params.facet_sds[facet_idx];
            let error_sd = sd_f * ((1.0 - rho) / rho).sqrt();
            let z: f64 = rng.sample(StandardNormal);
            items.set(agent, j, latent.get(agent, facet_idx) + error_sd * z);
        }
    }
    Ok(items)
}

/// Discretizes continuous item values into response vectors: reversed items
/// are reflected (`min + max - x`), then everything is rounded to the nearest
/// integer and clamped to the response range.
pub fn generate_items(
    latent: &Mat,
    scale: &ScaleDefinition,
    params: &SimulationParams,
) -> Result<Vec<ResponseVector>, SimulateError> {
    let continuous = generate_continuous_items(latent, scale, params)?;
    Ok(discretize(&continuous, scale))
}

pub fn discretize(continuous: &Mat, scale: &ScaleDefinition) -> Vec<ResponseVector> {
    let lo = scale.response_min;
    let hi = scale.response_max;
    (0..continuous.rows())
        .map(|agent| {
            let mut rv = ResponseVector::new(scale.name.clone());
            for (j, item) in scale.items.iter().enumerate() {
                let mut x = continuous.get(agent, j);
                if item.keying == Keying::Reversed {
                    x = (lo + hi) as f64 - x;
                }
                let answer = (x.round() as i64).clamp(lo, hi);
                rv.answers.insert(item.id.clone(), answer);
            }
            rv
        })
        .collect()
}

/// A complete simulation run: latent facets, discrete responses, and the
/// parameters that produced them.
pub struct SimulatedDataset {
    pub latent_facets: Mat,
    pub responses: Vec<ResponseVector>,
    pub params_echo: SimulationParams,
}

/// Full Study-3-style generation: covariance, latent facets, item responses.
pub fn simulate_bfi2(
    params: &SimulationParams,
    scale: &ScaleDefinition,
) -> Result<SimulatedDataset, SimulateError> {
    let cov = build_covariance(params)?;
    let latent = sample_facets_with_factor(params, &cov.factor);
    let responses = generate_items(&latent, scale, params)?;
    Ok(SimulatedDataset {
        latent_facets: latent,
        responses,
        params_echo: params.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_params(n_agents: usize) -> SimulationParams {
        let mut corr = vec![vec![0.0; FACET_COUNT]; FACET_COUNT];
        for (i, row) in corr.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        SimulationParams {
            facet_means: [3.0; FACET_COUNT],
            facet_sds: [1.0; FACET_COUNT],
            facet_corr: corr,
            intra_facet_item_corr: [0.5; FACET_COUNT],
            n_agents,
            seed: 42,
        }
    }

    #[test]
    fn identity_correlation_gives_identity_covariance() {
        let params = identity_params(1);
        let cov = build_covariance(&params).unwrap();
        for i in 0..FACET_COUNT {
            for j in 0..FACET_COUNT {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((cov.matrix.get(i, j) - want).abs() < 1e-15);
            }
        }
        assert_eq!(cov.ridge, 0.0);
    }

    #[test]
    fn covariance_is_product_of_sds_and_correlation() {
        let mut params = identity_params(1);
        params.facet_sds[0] = 2.0;
        params.facet_sds[1] = 3.0;
        params.facet_corr[0][1] = 0.5;
        params.facet_corr[1][0] = 0.5;
        let cov = build_covariance(&params).unwrap();
        assert!((cov.matrix.get(0, 1) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn cross_domain_correlation_is_rejected() {
        let mut params = identity_params(1);
        // Facets 0 and 3 live in different domains.
        params.facet_corr[0][3] = 0.2;
        params.facet_corr[3][0] = 0.2;
        assert!(matches!(
            build_covariance(&params).unwrap_err(),
            SimulateError::CrossDomainCorrelation { .. }
        ));
    }

    #[test]
    fn near_singular_block_is_repaired_with_ridge() {
        // This block has a tiny negative eigenvalue (about -3.8e-7), the kind
        // of defect rounded third-party statistics produce. The 1e-6 ridge
        // must repair it and the repaired factor must reproduce the matrix.
        let mut params = identity_params(1);
        let block = [
            [1.0, 0.9, 0.9],
            [0.9, 1.0, 0.62 - 1e-6],
            [0.9, 0.62 - 1e-6, 1.0],
        ];
        for i in 0..3 {
            for j in 0..3 {
                params.facet_corr[i][j] = block[i][j];
            }
        }
        let cov = build_covariance(&params).unwrap();
        assert!(cov.ridge > 0.0 && cov.ridge <= MAX_RIDGE, "ridge {}", cov.ridge);
        let rec = cov.factor.matmul(&cov.factor.transpose());
        for i in 0..FACET_COUNT {
            for j in 0..FACET_COUNT {
                assert!((rec.get(i, j) - cov.matrix.get(i, j)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn exactly_duplicated_facets_factor_without_ridge() {
        // A perfectly correlated pair is a legitimate degenerate PSD matrix
        // and needs no repair.
        let mut params = identity_params(1);
        params.facet_corr[0][1] = 1.0;
        params.facet_corr[1][0] = 1.0;
        let cov = build_covariance(&params).unwrap();
        assert_eq!(cov.ridge, 0.0);
    }

    #[test]
    fn indefinite_block_is_a_hard_error() {
        let mut params = identity_params(1);
        let block = [[1.0, 0.9, 0.9], [0.9, 1.0, -0.9], [0.9, -0.9, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                params.facet_corr[i][j] = block[i][j];
            }
        }
        assert!(matches!(
            build_covariance(&params).unwrap_err(),
            SimulateError::NotPositiveSemiDefinite(_)
        ));
    }

    #[test]
    fn zero_sds_collapse_to_the_mean() {
        let mut params = identity_params(5);
        params.facet_sds = [0.0; FACET_COUNT];
        let latent = sample_facets(&params).unwrap();
        for agent in 0..5 {
            for i in 0..FACET_COUNT {
                assert_eq!(latent.get(agent, i), 3.0);
            }
        }
    }

    #[test]
    fn same_seed_reproduces_exactly() {
        let params = identity_params(20);
        let a = sample_facets(&params).unwrap();
        let b = sample_facets(&params).unwrap();
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn rho_one_gives_zero_error_variance() {
        // With rho = 1 all items of a facet equal the facet score exactly.
        let mut params = identity_params(3);
        params.intra_facet_item_corr = [1.0; FACET_COUNT];
        let scale = crate::simulate::tests::four_item_facet_scale();
        let latent = sample_facets(&params).unwrap();
        let continuous = generate_continuous_items(&latent, &scale, &params).unwrap();
        for agent in 0..3 {
            let f = latent.get(agent, 0);
            for j in 0..4 {
                assert!((continuous.get(agent, j) - f).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn invalid_rho_is_rejected() {
        let mut params = identity_params(1);
        params.intra_facet_item_corr[2] = 0.0;
        assert!(matches!(
            params.validate().unwrap_err(),
            SimulateError::IntraItemCorrOutOfRange { .. }
        ));
        params.intra_facet_item_corr[2] = 1.2;
        assert!(params.validate().is_err());
    }

    #[test]
    fn empty_dataset_for_zero_agents() {
        let params = identity_params(0);
        let scale = four_item_facet_scale();
        let data = simulate_bfi2(&params, &scale).unwrap();
        assert!(data.responses.is_empty());
        assert_eq!(data.latent_facets.rows(), 0);
    }

    /// A minimal scale covering all fifteen facets: four items for the first
    /// facet (for intra-facet checks), one for each remaining facet.
    pub(crate) fn four_item_facet_scale() -> ScaleDefinition {
        use crate::scales::{Domain, ItemDefinition, ItemKind};
        let mut items = Vec::new();
        for k in 0..4 {
            items.push(ItemDefinition {
                id: alloc::format!("f0_{k}"),
                text: alloc::format!("facet zero item {k}"),
                domain: Domain::Openness,
                facet: Some("Aesthetic Sensitivity".into()),
                keying: if k == 3 { Keying::Reversed } else { Keying::Positive },
                kind: ItemKind::Statement,
            });
        }
        for facet in Facet::ALL.iter().skip(1) {
            let domain = match facet.block() {
                0 => Domain::Openness,
                1 => Domain::Conscientiousness,
                2 => Domain::Extraversion,
                3 => Domain::Agreeableness,
                _ => Domain::Neuroticism,
            };
            items.push(ItemDefinition {
                id: alloc::format!("f{}", facet.index()),
                text: alloc::format!("item for {}", facet.name()),
                domain,
                facet: Some(facet.name().into()),
                keying: Keying::Positive,
                kind: ItemKind::Statement,
            });
        }
        ScaleDefinition {
            name: "facet-test".into(),
            response_min: 1,
            response_max: 5,
            items,
        }
    }
}

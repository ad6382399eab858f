//! TOML run configuration.

use crate::limitset::MAX_DEPTH as MAX_LIMITSET_DEPTH;
use quake_core::covering::{OrientedCurve, ReferenceStructure};
use quake_core::deform::{default_reference, CentralizerParameter, Component, DeformError, WeightedMulticurve};
use quake_core::earthquake::{DehnTwistRecipe, LaminationApproximation};
use quake_core::minkowski::GroupElement;
use quake_core::representation::Representation;
use quake_core::surface_group::{SurfacePresentation, Word};
use quake_core::verify::{self, SuiteOptions, CHECK_NAMES};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("invalid `{field}`: {message}")]
    Semantic { field: String, message: String },
}

impl ConfigError {
    fn semantic(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Semantic { field: field.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_genus")]
    pub genus: usize,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub representation: RepresentationSource,
    #[serde(default)]
    pub multicurve: Vec<CurveSpec>,
    #[serde(default)]
    pub deform: DeformBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub earthquake: Option<EarthquakeBlock>,
    #[serde(default)]
    pub verify: VerifyBlock,
    #[serde(default)]
    pub crossings: CrossingsBlock,
    #[serde(default)]
    pub limitset: LimitSetBlock,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Where files go; not serialized, so it affects neither the hash nor the report.
    #[serde(default, skip_serializing)]
    pub output: OutputBlock,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            genus: default_genus(),
            dimension: default_dimension(),
            seed: 0,
            representation: RepresentationSource::default(),
            multicurve: Vec::new(),
            deform: DeformBlock::default(),
            earthquake: None,
            verify: VerifyBlock::default(),
            crossings: CrossingsBlock::default(),
            limitset: LimitSetBlock::default(),
            tolerances: Tolerances::default(),
            output: OutputBlock::default(),
        }
    }
}

fn default_genus() -> usize {
    2
}

fn default_dimension() -> usize {
    2
}

fn one() -> f64 {
    1.0
}

/// Where the representation to deform comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RepresentationSource {
    /// The regular Fuchsian reference, embedded in dimension n.
    #[default]
    Reference,
    /// Generator images `a1, b1, …, ag, bg`, row-major.
    Matrices { images: Vec<Vec<Vec<f64>>> },
    /// The reference embedded, conjugated by a seeded random isometry and bent along `curve`.
    Bent {
        #[serde(default = "default_bend_curve")]
        curve: String,
        bend: f64,
    },
}

fn default_bend_curve() -> String {
    "a1".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub word: String,
    #[serde(default = "one")]
    pub weight: f64,
    #[serde(default)]
    pub twist: f64,
    /// Rotation angle about the axis (n ≥ 3).
    #[serde(default)]
    pub bend: f64,
    /// Rotation plane selector for n = 4, a vector of length n + 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plane: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeformBlock {
    #[serde(default = "one")]
    pub t: f64,
}

impl Default for DeformBlock {
    fn default() -> Self {
        DeformBlock { t: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EarthquakeBlock {
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recipe: Option<RecipeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence: Option<Vec<Vec<CurveSpec>>>,
}

fn default_max_steps() -> usize {
    16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecipeSpec {
    pub seed: String,
    pub twisting: String,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "one")]
    pub twist: f64,
}

fn default_count() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<String>>,
    #[serde(default = "default_trials")]
    pub random_trials: usize,
    #[serde(default = "default_oracle_length")]
    pub oracle_word_length: usize,
}

fn default_trials() -> usize {
    5
}

fn default_oracle_length() -> usize {
    3
}

impl Default for VerifyBlock {
    fn default() -> Self {
        VerifyBlock { checks: None, random_trials: default_trials(), oracle_word_length: default_oracle_length() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CrossingsBlock {
    /// Elements whose segments are examined; the generators when empty.
    #[serde(default)]
    pub words: Vec<String>,
    /// Curves to cross; the multicurve's cores when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curves: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitSetBlock {
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default = "default_angular")]
    pub angular_tolerance: f64,
}

fn default_depth() -> usize {
    4
}

fn default_angular() -> f64 {
    1e-9
}

impl Default for LimitSetBlock {
    fn default() -> Self {
        LimitSetBlock { depth: default_depth(), angular_tolerance: default_angular() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Earthquake convergence tolerance; `--tol` overrides it.
    #[serde(default = "default_convergence")]
    pub convergence: f64,
}

fn default_convergence() -> f64 {
    1e-4
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { convergence: default_convergence() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "default_out")]
    pub dir: String,
}

fn default_out() -> String {
    "out".into()
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock { dir: default_out() }
    }
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| {
        let msg = e.to_string();
        if e.span().is_some() && ["unknown field", "missing field", "invalid type", "unknown variant"].iter().any(|k| msg.contains(k)) {
            ConfigError::Schema(msg)
        } else {
            ConfigError::Syntax(msg)
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn finite(field: &str, x: f64) -> Result<(), ConfigError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::semantic(field, "must be finite"))
    }
}

impl RunConfig {
    pub fn presentation(&self) -> Result<SurfacePresentation, ConfigError> {
        SurfacePresentation::new(self.genus).map_err(|e| ConfigError::semantic("genus", e.to_string()))
    }

    fn word(&self, field: &str, text: &str) -> Result<Word, ConfigError> {
        Word::parse_for_genus(text, self.genus).map_err(|e| ConfigError::semantic(field, e.to_string()))
    }

    fn validate_curve(&self, field: &str, c: &CurveSpec) -> Result<(), ConfigError> {
        let w = self.word(&format!("{field}.word"), &c.word)?;
        if w.is_empty() {
            return Err(ConfigError::semantic(format!("{field}.word"), "reduces to the identity"));
        }
        finite(&format!("{field}.twist"), c.twist)?;
        finite(&format!("{field}.bend"), c.bend)?;
        if !(c.weight > 0.0 && c.weight.is_finite()) {
            return Err(ConfigError::semantic(format!("{field}.weight"), format!("must be positive, got {}", c.weight)));
        }
        if c.bend != 0.0 && self.dimension < 3 {
            return Err(ConfigError::semantic(format!("{field}.bend"), "rotations need dimension >= 3"));
        }
        if let Some(p) = &c.plane {
            if self.dimension != 4 {
                return Err(ConfigError::semantic(format!("{field}.plane"), "only used in dimension 4"));
            }
            if p.len() != self.dimension + 1 || p.iter().any(|x| !x.is_finite()) {
                return Err(ConfigError::semantic(format!("{field}.plane"), "needs n + 1 finite entries"));
            }
        }
        Ok(())
    }

    /// Semantic checks that do not need any geometry.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.presentation()?;
        if !(2..=4).contains(&self.dimension) {
            return Err(ConfigError::semantic("dimension", "must be 2, 3 or 4"));
        }
        match &self.representation {
            RepresentationSource::Reference => {}
            RepresentationSource::Matrices { images } => {
                if images.len() != 2 * self.genus {
                    return Err(ConfigError::semantic(
                        "representation.images",
                        format!("expected {} generator images, got {}", 2 * self.genus, images.len()),
                    ));
                }
                let k = self.dimension + 1;
                for (i, m) in images.iter().enumerate() {
                    if m.len() != k || m.iter().any(|r| r.len() != k) {
                        return Err(ConfigError::semantic(format!("representation.images[{i}]"), format!("must be {k}x{k}")));
                    }
                }
            }
            RepresentationSource::Bent { curve, bend } => {
                self.word("representation.curve", curve)?;
                finite("representation.bend", *bend)?;
                if self.dimension < 3 {
                    return Err(ConfigError::semantic("representation.bend", "bending needs dimension >= 3"));
                }
            }
        }
        for (i, c) in self.multicurve.iter().enumerate() {
            self.validate_curve(&format!("multicurve[{i}]"), c)?;
        }
        finite("deform.t", self.deform.t)?;
        if let Some(eq) = &self.earthquake {
            match (&eq.recipe, &eq.sequence) {
                (Some(r), None) => {
                    self.word("earthquake.recipe.seed", &r.seed)?;
                    self.word("earthquake.recipe.twisting", &r.twisting)?;
                    finite("earthquake.recipe.twist", r.twist)?;
                    if r.count == 0 {
                        return Err(ConfigError::semantic("earthquake.recipe.count", "must be at least 1"));
                    }
                }
                (None, Some(seq)) => {
                    if seq.is_empty() {
                        return Err(ConfigError::semantic("earthquake.sequence", "must not be empty"));
                    }
                    for (k, mc) in seq.iter().enumerate() {
                        for (i, c) in mc.iter().enumerate() {
                            self.validate_curve(&format!("earthquake.sequence[{k}][{i}]"), c)?;
                        }
                    }
                }
                _ => return Err(ConfigError::semantic("earthquake", "give exactly one of `recipe` and `sequence`")),
            }
            if eq.max_steps == 0 {
                return Err(ConfigError::semantic("earthquake.max_steps", "must be at least 1"));
            }
        }
        if let Some(checks) = &self.verify.checks {
            if let Some(bad) = checks.iter().find(|c| !CHECK_NAMES.contains(&c.as_str())) {
                return Err(ConfigError::semantic("verify.checks", format!("unknown check `{bad}`")));
            }
        }
        for (i, w) in self.crossings.words.iter().enumerate() {
            self.word(&format!("crossings.words[{i}]"), w)?;
        }
        for (i, w) in self.crossings.curves.iter().flatten().enumerate() {
            if self.word(&format!("crossings.curves[{i}]"), w)?.is_empty() {
                return Err(ConfigError::semantic(format!("crossings.curves[{i}]"), "reduces to the identity"));
            }
        }
        if self.limitset.depth > MAX_LIMITSET_DEPTH {
            return Err(ConfigError::semantic(
                "limitset.depth",
                format!("at most {MAX_LIMITSET_DEPTH} (word count grows like 7^depth)"),
            ));
        }
        if !(self.limitset.angular_tolerance > 0.0) {
            return Err(ConfigError::semantic("limitset.angular_tolerance", "must be positive"));
        }
        if !(self.tolerances.convergence > 0.0) {
            return Err(ConfigError::semantic("tolerances.convergence", "must be positive"));
        }
        if self.output.dir.is_empty() {
            return Err(ConfigError::semantic("output.dir", "must not be empty"));
        }
        Ok(())
    }

    pub fn reference(&self) -> Result<ReferenceStructure, DeformError> {
        default_reference(self.genus)
    }

    pub fn representation(&self, reference: &ReferenceStructure) -> Result<Representation, BuildError> {
        match &self.representation {
            RepresentationSource::Reference => {
                Ok(reference.fuchsian().embed(self.dimension).map_err(|e| BuildError::Numerical(e.to_string()))?)
            }
            RepresentationSource::Matrices { images } => {
                let elements = images
                    .iter()
                    .enumerate()
                    .map(|(i, m)| {
                        GroupElement::try_from(m.clone())
                            .map_err(|e| ConfigError::semantic(format!("representation.images[{i}]"), e.to_string()))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Representation::new(self.presentation()?, elements)
                    .map_err(|e| ConfigError::semantic("representation.images", e.to_string()))?)
            }
            RepresentationSource::Bent { curve, bend } => {
                let fx = verify::bent_fixture_along(reference, self.dimension, curve, *bend, self.seed)
                    .map_err(|e| BuildError::Numerical(e.to_string()))?;
                Ok(fx.rho)
            }
        }
    }

    fn curve_component(&self, c: &CurveSpec) -> Result<Component, ConfigError> {
        let core = Word::parse_for_genus(&c.word, self.genus).map_err(|e| ConfigError::semantic("word", e.to_string()))?;
        let curve = OrientedCurve::new(core, c.weight).map_err(|e| ConfigError::semantic("word", e.to_string()))?;
        let mut parameter = CentralizerParameter::twist(c.twist);
        if c.bend != 0.0 || c.plane.is_some() {
            parameter = parameter.with_rotation(c.bend, c.plane.clone());
        }
        Ok(Component { curve, parameter })
    }

    fn build_multicurve(
        &self,
        field: &str,
        specs: &[CurveSpec],
        reference: &ReferenceStructure,
    ) -> Result<WeightedMulticurve, BuildError> {
        let components = specs.iter().map(|c| self.curve_component(c)).collect::<Result<Vec<_>, _>>()?;
        WeightedMulticurve::new(components, reference).map_err(|e| BuildError::from_multicurve(field, e))
    }

    pub fn multicurve(&self, reference: &ReferenceStructure) -> Result<WeightedMulticurve, BuildError> {
        self.build_multicurve("multicurve", &self.multicurve, reference)
    }

    pub fn approximation(&self, reference: &ReferenceStructure) -> Result<LaminationApproximation, BuildError> {
        let eq = self
            .earthquake
            .as_ref()
            .ok_or_else(|| ConfigError::semantic("earthquake", "the earthquake command needs an [earthquake] block"))?;
        if let Some(r) = &eq.recipe {
            return Ok(LaminationApproximation::DehnTwistRecipe(DehnTwistRecipe {
                seed: self.word("earthquake.recipe.seed", &r.seed)?,
                twisting: self.word("earthquake.recipe.twisting", &r.twisting)?,
                count: r.count,
                twist: r.twist,
            }));
        }
        let multicurves = eq
            .sequence
            .iter()
            .flatten()
            .enumerate()
            .map(|(k, specs)| self.build_multicurve(&format!("earthquake.sequence[{k}]"), specs, reference))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(LaminationApproximation::ExplicitList { multicurves })
    }

    pub fn suite_options(&self) -> SuiteOptions {
        SuiteOptions {
            checks: self.verify.checks.clone(),
            seed: self.seed,
            random_trials: self.verify.random_trials,
            oracle_word_length: self.verify.oracle_word_length,
        }
    }

    pub fn crossing_words(&self) -> Result<Vec<Word>, ConfigError> {
        if self.crossings.words.is_empty() {
            return Ok(self.presentation()?.generators());
        }
        self.crossings.words.iter().map(|w| self.word("crossings.words", w)).collect()
    }

    pub fn crossing_curves(&self) -> Result<Vec<OrientedCurve>, ConfigError> {
        let words: Vec<String> = match &self.crossings.curves {
            Some(c) => c.clone(),
            None => self.multicurve.iter().map(|c| c.word.clone()).collect(),
        };
        if words.is_empty() {
            return Err(ConfigError::semantic("crossings.curves", "no curves given and the multicurve is empty"));
        }
        words
            .iter()
            .map(|w| {
                let core = self.word("crossings.curves", w)?;
                OrientedCurve::unit(core).map_err(|e| ConfigError::semantic("crossings.curves", e.to_string()))
            })
            .collect()
    }
}

/// Failure while turning a valid configuration into core objects.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum BuildError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Numerical(String),
}

impl BuildError {
    /// Intersecting, homotopic or otherwise invalid curves are input errors;
    /// anything else is a numerical failure.
    fn from_multicurve(field: &str, e: DeformError) -> Self {
        match e {
            DeformError::Intersecting(..)
            | DeformError::Homotopic(..)
            | DeformError::MissingPlane(_)
            | DeformError::RotationInPlane
            | DeformError::Invalid(_)
            | DeformError::Covering(_) => BuildError::Config(ConfigError::semantic(field, e.to_string())),
            e => BuildError::Numerical(e.to_string()),
        }
    }
}

//! TOML run configuration. Physical quantities are written either as plain
//! linear numbers or as strings with a `dB` suffix (`"-15 dB"`); parsing
//! converts everything to linear values, and the canonical text written
//! back out is plain TOML with linear numbers only.

use std::fmt;
use std::path::PathBuf;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::ensemble::{EnsembleParams, SqueezeOrientation};
use crate::error::{Error, Result};
use crate::oracle::{SqueezeProfile, DEFAULT_COMPONENTS, DEFAULT_PRIOR_POINTS};
use crate::sweep::{Axis, AxisScale, SweepParameter};
use crate::units::{db_to_linear, Decibels};

/// A linear value that may be written in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity(pub f64);

impl Quantity {
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        let (num, db) = match t.strip_suffix("dB").or_else(|| t.strip_suffix("db")) {
            Some(rest) => (rest.trim(), true),
            None => (t, false),
        };
        // Accept the Unicode minus sign too.
        let num = num.replace('\u{2212}', "-");
        let v: f64 = num
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("cannot parse quantity '{s}'")))?;
        Ok(Quantity(if db { db_to_linear(Decibels(v)) } else { v }))
    }
}

impl Serialize for Quantity {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Quantity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Quantity;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a string such as \"-15 dB\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Quantity, E> {
                Ok(Quantity(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Quantity, E> {
                Ok(Quantity(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Quantity, E> {
                Ok(Quantity(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Quantity, E> {
                Quantity::parse(v).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrientationMode {
    MeasurementBased,
    FeedbackBased,
}

/// Either a named mode or an explicit angle in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OrientationSetting {
    Mode(OrientationMode),
    Angle(f64),
}

impl From<OrientationSetting> for SqueezeOrientation {
    fn from(o: OrientationSetting) -> Self {
        match o {
            OrientationSetting::Mode(OrientationMode::MeasurementBased) => {
                SqueezeOrientation::MeasurementBased
            }
            OrientationSetting::Mode(OrientationMode::FeedbackBased) => {
                SqueezeOrientation::FeedbackBased
            }
            OrientationSetting::Angle(t) => SqueezeOrientation::Explicit(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub atoms: f64,
    /// `xi^2`.
    pub squeezing: Quantity,
    /// `chi^2`; give this or `area`, not both.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub antisqueezing: Option<Quantity>,
    /// `A^2`; defaults to 1 when neither is given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub area: Option<Quantity>,
    pub prep_contrast: Quantity,
    pub ramsey_contrast: Quantity,
    pub orientation: OrientationSetting,
    pub fractional_atoms: bool,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            atoms: 1e4,
            squeezing: Quantity(1.0),
            antisqueezing: None,
            area: None,
            prep_contrast: Quantity(1.0),
            ramsey_contrast: Quantity(1.0),
            orientation: OrientationSetting::Mode(OrientationMode::MeasurementBased),
            fractional_atoms: false,
        }
    }
}

impl EnsembleConfig {
    pub fn params(&self) -> Result<EnsembleParams> {
        let xi2 = self.squeezing.0;
        let chi2 = match (self.antisqueezing, self.area) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidSpec(
                    "give either antisqueezing or area, not both".into(),
                ))
            }
            (Some(c), None) => c.0,
            (None, Some(a)) => a.0 / xi2,
            (None, None) => 1.0 / xi2,
        };
        Ok(EnsembleParams {
            atoms: self.atoms,
            squeezing: xi2,
            antisqueezing: chi2,
            prep_contrast: self.prep_contrast.0,
            ramsey_contrast: self.ramsey_contrast.0,
            orientation: self.orientation.into(),
            fractional_atoms: self.fractional_atoms,
        })
    }
}

/// Partial override of the base ensemble, one per `[[cases]]` entry.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CaseConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atoms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub squeezing: Option<Quantity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub antisqueezing: Option<Quantity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub area: Option<Quantity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prep_contrast: Option<Quantity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ramsey_contrast: Option<Quantity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orientation: Option<OrientationSetting>,
}

impl CaseConfig {
    fn apply(&self, base: &EnsembleConfig) -> EnsembleConfig {
        let mut e = base.clone();
        if let Some(v) = self.atoms {
            e.atoms = v;
        }
        if let Some(v) = self.squeezing {
            e.squeezing = v;
        }
        if self.antisqueezing.is_some() || self.area.is_some() {
            e.antisqueezing = self.antisqueezing;
            e.area = self.area;
        }
        if let Some(v) = self.prep_contrast {
            e.prep_contrast = v;
        }
        if let Some(v) = self.ramsey_contrast {
            e.ramsey_contrast = v;
        }
        if let Some(v) = self.orientation {
            e.orientation = v;
        }
        e
    }
}

/// A one-parameter family applied on top of every case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub parameter: String,
    pub values: Vec<Quantity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoConfig {
    pub gamma: f64,
    /// Defaults to `1 / gamma`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_time: Option<f64>,
}

impl Default for LoConfig {
    fn default() -> Self {
        LoConfig {
            gamma: 1.0,
            total_time: None,
        }
    }
}

impl LoConfig {
    pub fn total_time(&self) -> f64 {
        self.total_time.unwrap_or(1.0 / self.gamma)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub components: usize,
    pub profile: SqueezeProfile,
    pub prior_points: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            components: DEFAULT_COMPONENTS,
            profile: SqueezeProfile::Gaussian,
            prior_points: DEFAULT_PRIOR_POINTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseErrorConfig {
    pub phi_over_pi_min: f64,
    pub phi_over_pi_max: f64,
    pub points: usize,
    /// Add the exact simulation as a third column.
    pub oracle: bool,
}

impl Default for PhaseErrorConfig {
    fn default() -> Self {
        PhaseErrorConfig {
            phi_over_pi_min: -1.0,
            phi_over_pi_max: 1.0,
            points: 101,
            oracle: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityConfig {
    pub gamma_tau_min: f64,
    pub gamma_tau_max: f64,
    pub points: usize,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            gamma_tau_min: 1e-3,
            gamma_tau_max: 1.0,
            points: 61,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub parameter: String,
    #[serde(default = "default_scale")]
    pub scale: AxisScale,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    /// Explicit samples; overrides `from`/`to`/`points`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

fn default_scale() -> AxisScale {
    AxisScale::Linear
}

impl AxisConfig {
    pub fn axis(&self) -> Result<Axis> {
        let p = SweepParameter::parse(&self.parameter)?;
        if let Some(v) = &self.values {
            return Axis::new(p, self.scale, v.clone());
        }
        let (Some(from), Some(to), Some(n)) = (self.from, self.to, self.points) else {
            return Err(Error::InvalidArgument(format!(
                "axis '{}' needs either values or from/to/points",
                self.parameter
            )));
        };
        match self.scale {
            AxisScale::Log => Axis::logspace(p, from, to, n),
            s => Axis::linspace(p, s, from, to, n),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapConfig {
    pub axes: Vec<AxisConfig>,
    /// Fit the regime-boundary constant (needs dB xi2 and a2 axes).
    pub boundary_fit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateConfig {
    pub points: usize,
    /// Cells with `|phi| <= limit * pi` must agree within `tolerance`.
    pub phi_over_pi_limit: f64,
    pub tolerance: f64,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        ValidateConfig {
            points: 101,
            phi_over_pi_limit: 0.2,
            tolerance: 0.1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentsConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub ensemble: EnsembleConfig,
    pub lo: LoConfig,
    pub oracle: OracleConfig,
    pub phase_error: PhaseErrorConfig,
    pub stability: StabilityConfig,
    pub map: MapConfig,
    pub validate: ValidateConfig,
    pub experiments: ExperimentsConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<FamilyConfig>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub cases: Vec<CaseConfig>,
}

/// One concrete ensemble to evaluate, with a label for output rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub label: String,
    pub params: EnsembleParams,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {e}")))?;
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<()> {
        if !(self.lo.gamma.is_finite() && self.lo.gamma > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "lo.gamma must be positive, got {}",
                self.lo.gamma
            )));
        }
        let t = self.lo.total_time();
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "lo.total_time must be positive, got {t}"
            )));
        }
        if let Some(f) = &self.sweep {
            SweepParameter::parse(&f.parameter)?;
        }
        Ok(())
    }

    /// Deterministic text form: TOML with every default filled in and all
    /// quantities linear.
    pub fn canonical_text(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical text.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_text().as_bytes()))
    }

    /// Every (case x family value) combination, validated.
    pub fn runs(&self) -> Result<Vec<Run>> {
        let bases: Vec<(String, EnsembleConfig)> = if self.cases.is_empty() {
            vec![(String::new(), self.ensemble.clone())]
        } else {
            self.cases
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let label = c.label.clone().unwrap_or_else(|| format!("case{i}"));
                    (label, c.apply(&self.ensemble))
                })
                .collect()
        };
        let mut runs = Vec::new();
        for (label, e) in bases {
            let p = e.params()?;
            match &self.sweep {
                None => runs.push(Run { label, params: p }),
                Some(f) => {
                    let param = SweepParameter::parse(&f.parameter)?;
                    for v in &f.values {
                        let mut q = p;
                        param.apply(&mut q, v.0);
                        if param == SweepParameter::Atoms {
                            q.fractional_atoms = e.fractional_atoms;
                        }
                        runs.push(Run {
                            label: label.clone(),
                            params: q,
                        });
                    }
                }
            }
        }
        for r in &runs {
            r.params.validate()?;
        }
        Ok(runs)
    }
}

//! JSON model configuration.
//!
//! Schema version 1:
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "alpha": 1.5,
//!   "kind": "symmetric",
//!   "dimension": 2,
//!   "spectral": { "atoms": [ { "direction": [1, 0], "weight": 1 } ] },
//!   "seed": 7,
//!   "quad": { "circle": 512, "product": 64, "random": 200000, "seed": null },
//!   "tolerance": 1e-7
//! }
//! ```
//!
//! `kind` is `symmetric`, `one-sided` or `p-sum`; a `p-sum` model also
//! carries `p` and its atoms describe the one-sided core of exponent
//! `alpha / p`. The `spectral` block is exactly one of
//!
//! * `{"atoms": [{"direction": [...], "weight": w}, ...]}`
//! * `{"independent": [scale_1, ..., scale_d]}`
//! * `{"isotropic": {"mass": m}}` or `{"isotropic": {"scale": s}}`
//! * `{"ellipsoid": [[...], ...]}` (sub-Gaussian, gauge `sqrt(<Cu,u>/2)`)
//! * `{"star_body": {"lp": q, "scales": [...]}}`: the spectral density of
//!   the star body `{y : ||y / scales||_q <= 1}` tabulated on the default
//!   sphere rule.
//!
//! Only `schema_version`, `alpha`, `kind` and `spectral` are required.

use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::onesided::{OneSidedModel, PSumModel};
use crate::quadrature::QuadLevels;
use crate::spectral::{
    is_clean, spectral_from_star_body, validate_model, Atom, GaugeSource, Kind, SpectralMeasure, StableModel,
};
use crate::tolerances::GEOMETRY;

/// Current schema version.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub direction: Vec<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsotropicConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StarBodyConfig {
    pub lp: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scales: Option<Vec<f64>>,
}

/// Spectral block of a configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectralConfig {
    Atoms(Vec<AtomConfig>),
    Independent(Vec<f64>),
    Isotropic(IsotropicConfig),
    Ellipsoid(Vec<Vec<f64>>),
    StarBody(StarBodyConfig),
}

/// Model kind as written in a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConfigKind {
    Symmetric,
    OneSided,
    PSum,
}

/// Parsed configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub schema_version: u32,
    pub alpha: f64,
    pub kind: ConfigKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    pub spectral: SpectralConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad: Option<QuadLevels>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

/// A model built from a configuration.
#[derive(Debug, Clone)]
pub enum LoadedModel {
    Stable(StableModel),
    OneSided(OneSidedModel),
    PSum(PSumModel),
}

impl LoadedModel {
    pub fn alpha(&self) -> f64 {
        match self {
            LoadedModel::Stable(m) => m.alpha(),
            LoadedModel::OneSided(m) => m.alpha(),
            LoadedModel::PSum(m) => m.alpha(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            LoadedModel::Stable(m) => m.dim(),
            LoadedModel::OneSided(m) => m.dim(),
            LoadedModel::PSum(m) => m.core().dim(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            LoadedModel::Stable(m) => m.kind().as_str(),
            LoadedModel::OneSided(_) => "one-sided",
            LoadedModel::PSum(_) => "p-sum",
        }
    }

    /// The symmetric model, or a kind mismatch.
    pub fn symmetric(&self) -> Result<&StableModel> {
        match self {
            LoadedModel::Stable(m) => Ok(m),
            _ => Err(Error::KindMismatch(format!("expected a symmetric model, got {}", self.kind_name()))),
        }
    }

    /// The one-sided model, or a kind mismatch.
    pub fn onesided(&self) -> Result<&OneSidedModel> {
        match self {
            LoadedModel::OneSided(m) => Ok(m),
            _ => Err(Error::KindMismatch(format!("expected a one-sided model, got {}", self.kind_name()))),
        }
    }
}

fn field(name: &str, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("field `{name}`: {msg}"))
}

impl ModelConfig {
    /// Parses JSON text; syntax and schema errors carry line and column.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ModelConfig = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(field(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", cfg.schema_version),
            ));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    /// Configuration of a discrete model.
    pub fn from_atoms(alpha: f64, kind: Kind, atoms: &[Atom]) -> Self {
        ModelConfig {
            schema_version: SCHEMA_VERSION,
            alpha,
            kind: match kind {
                Kind::Symmetric => ConfigKind::Symmetric,
                Kind::OneSided => ConfigKind::OneSided,
            },
            p: None,
            dimension: atoms.first().map(|a| a.direction.len()),
            spectral: SpectralConfig::Atoms(
                atoms.iter().map(|a| AtomConfig { direction: a.direction.clone(), weight: a.weight }).collect(),
            ),
            seed: None,
            quad: None,
            tolerance: None,
        }
    }

    pub fn levels(&self) -> QuadLevels {
        self.quad.clone().unwrap_or_default()
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance.unwrap_or(GEOMETRY)
    }

    fn atom_pairs(&self) -> Result<Vec<(Vec<f64>, f64)>> {
        match &self.spectral {
            SpectralConfig::Atoms(a) => Ok(a.iter().map(|a| (a.direction.clone(), a.weight)).collect()),
            SpectralConfig::Independent(s) => {
                let d = s.len();
                Ok(s.iter()
                    .enumerate()
                    .map(|(i, w)| (crate::linalg::basis(d, i), w.powf(self.alpha)))
                    .collect())
            }
            _ => Err(field("spectral", "one-sided and p-sum models need `atoms` or `independent`")),
        }
    }

    /// Builds and validates the model.
    pub fn build(&self) -> Result<LoadedModel> {
        let wrap = |e: Error| match e {
            Error::InvalidArgument(m) | Error::KindMismatch(m) => field("spectral", m),
            other => other,
        };
        if !self.alpha.is_finite() {
            return Err(field("alpha", "must be finite"));
        }
        if self.p.is_some() && self.kind != ConfigKind::PSum {
            return Err(field("p", "only p-sum models take `p`"));
        }
        let model = match self.kind {
            ConfigKind::Symmetric => LoadedModel::Stable(self.build_symmetric().map_err(wrap)?),
            ConfigKind::OneSided => {
                if !(self.alpha > 0.0 && self.alpha < 1.0) {
                    return Err(field("alpha", format!("one-sided models need alpha in (0, 1), got {}", self.alpha)));
                }
                LoadedModel::OneSided(OneSidedModel::new(self.alpha, self.atom_pairs()?).map_err(wrap)?)
            }
            ConfigKind::PSum => {
                let p = self.p.ok_or_else(|| field("p", "p-sum models need `p`"))?;
                let core_alpha = self.alpha / p;
                if !(core_alpha > 0.0 && core_alpha < 1.0) {
                    return Err(field("alpha", format!("need 0 < alpha < p, got alpha = {} and p = {p}", self.alpha)));
                }
                LoadedModel::PSum(PSumModel::new(p, self.alpha, self.atom_pairs()?).map_err(wrap)?)
            }
        };
        if let Some(d) = self.dimension {
            if d != model.dim() {
                return Err(field("dimension", format!("declared {d}, spectral block has dimension {}", model.dim())));
            }
        }
        if let LoadedModel::Stable(m) = &model {
            let diags = validate_model(m);
            if !is_clean(&diags) {
                let list: Vec<String> = diags.iter().map(|d| format!("{}: {}", d.code, d.message)).collect();
                return Err(field("spectral", list.join("; ")));
            }
        }
        Ok(model)
    }

    fn build_symmetric(&self) -> Result<StableModel> {
        let a = self.alpha;
        match &self.spectral {
            SpectralConfig::Atoms(_) => StableModel::symmetric_atoms(a, self.atom_pairs()?),
            SpectralConfig::Independent(s) => StableModel::independent(a, s),
            SpectralConfig::Isotropic(iso) => {
                let d = self.dimension.ok_or_else(|| field("dimension", "isotropic models need `dimension`"))?;
                match (iso.mass, iso.scale) {
                    (Some(m), None) => StableModel::isotropic(d, a, m),
                    (None, Some(s)) => StableModel::isotropic_scaled(d, a, s),
                    _ => Err(field("spectral.isotropic", "give exactly one of `mass` and `scale`")),
                }
            }
            SpectralConfig::Ellipsoid(rows) => {
                let d = rows.len();
                if d == 0 || rows.iter().any(|r| r.len() != d) {
                    return Err(field("spectral.ellipsoid", "matrix must be square and nonempty"));
                }
                StableModel::sub_gaussian(a, DMatrix::from_fn(d, d, |i, j| rows[i][j]))
            }
            SpectralConfig::StarBody(sb) => {
                let d = self.dimension.ok_or_else(|| field("dimension", "star-body models need `dimension`"))?;
                let scales = sb.scales.clone().unwrap_or_else(|| vec![1.0; d]);
                if scales.len() != d || scales.iter().any(|s| !(*s > 0.0)) {
                    return Err(field("spectral.star_body.scales", "need one positive scale per coordinate"));
                }
                if !(sb.lp > 0.0) {
                    return Err(field("spectral.star_body.lp", "must be positive"));
                }
                let q = sb.lp;
                let rule = Arc::new(self.levels().rule(d)?);
                let gauge = move |u: &[f64]| {
                    if q.is_infinite() {
                        u.iter().zip(&scales).map(|(x, s)| (x / s).abs()).fold(0.0, f64::max)
                    } else {
                        u.iter().zip(&scales).map(|(x, s)| (x / s).abs().powf(q)).sum::<f64>().powf(1.0 / q)
                    }
                };
                let measure = spectral_from_star_body(gauge, a, rule)?;
                StableModel::new(a, Kind::Symmetric, GaugeSource::Spectral(measure))
            }
        }
    }
}

/// Loads, parses and builds a model file.
pub fn load_model(path: &Path) -> Result<(ModelConfig, LoadedModel)> {
    let cfg = ModelConfig::load(path)?;
    let model = cfg.build()?;
    Ok((cfg, model))
}

/// Configuration for a discrete spectral measure, as written by `estimate`.
pub fn config_for_measure(alpha: f64, kind: Kind, measure: &SpectralMeasure) -> Result<ModelConfig> {
    Ok(ModelConfig::from_atoms(alpha, kind, &measure.to_atoms()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build(text: &str) -> Result<LoadedModel> {
        ModelConfig::parse(text)?.build()
    }

    #[test]
    fn independent_cauchy_gauge() {
        let m = build(r#"{"schema_version": 1, "alpha": 1, "kind": "symmetric", "spectral": {"independent": [1, 1]}}"#)
            .unwrap();
        assert!((m.symmetric().unwrap().gauge(&[1.0, 1.0]).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn every_spectral_form_builds() {
        let texts = [
            r#"{"schema_version":1,"alpha":1.5,"kind":"symmetric","spectral":{"atoms":[{"direction":[0.6,0.8],"weight":2},{"direction":[1,0],"weight":1}]}}"#,
            r#"{"schema_version":1,"alpha":1,"kind":"symmetric","dimension":3,"spectral":{"isotropic":{"scale":2}}}"#,
            r#"{"schema_version":1,"alpha":1,"kind":"symmetric","dimension":2,"spectral":{"isotropic":{"mass":1}}}"#,
            r#"{"schema_version":1,"alpha":1.2,"kind":"symmetric","spectral":{"ellipsoid":[[2,0.5],[0.5,1]]}}"#,
            r#"{"schema_version":1,"alpha":1.2,"kind":"symmetric","dimension":2,"spectral":{"star_body":{"lp":2}},"quad":{"circle":64}}"#,
            r#"{"schema_version":1,"alpha":0.5,"kind":"one-sided","spectral":{"independent":[1,2]}}"#,
            r#"{"schema_version":1,"alpha":1.5,"kind":"p-sum","p":2,"spectral":{"atoms":[{"direction":[1,1],"weight":1}]}}"#,
        ];
        for t in texts {
            let m = build(t).unwrap_or_else(|e| panic!("{t}: {e}"));
            assert!(m.dim() >= 2);
        }
    }

    #[test]
    fn isotropic_scale_is_the_gauge() {
        let m = build(r#"{"schema_version":1,"alpha":1.3,"kind":"symmetric","dimension":3,"spectral":{"isotropic":{"scale":2}}}"#)
            .unwrap();
        assert!((m.symmetric().unwrap().gauge(&[0.0, 0.6, 0.8]).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn euclidean_star_body_is_isotropic() {
        let m = build(r#"{"schema_version":1,"alpha":1.5,"kind":"symmetric","dimension":2,"spectral":{"star_body":{"lp":2}}}"#)
            .unwrap();
        let m = m.symmetric().unwrap();
        let g = m.gauge(&[1.0, 0.0]).unwrap();
        assert!((m.gauge(&[0.6, 0.8]).unwrap() - g).abs() < 1e-6 * g);
    }

    #[test]
    fn syntax_errors_report_position() {
        let e = ModelConfig::parse("{\n \"schema_version\": 1,\n \"alpha\": ,\n}").unwrap_err();
        assert!(matches!(&e, Error::Parse(m) if m.contains("line 3")), "{e}");
    }

    #[test]
    fn schema_errors_name_the_field() {
        let cases = [
            (r#"{"schema_version":2,"alpha":1,"kind":"symmetric","spectral":{"independent":[1]}}"#, "schema_version"),
            (r#"{"schema_version":1,"alpha":1,"kind":"symmetric","spectral":{"independent":[1]},"colour":1}"#, "colour"),
            (r#"{"schema_version":1,"alpha":1,"kind":"sideways","spectral":{"independent":[1]}}"#, "sideways"),
            (r#"{"schema_version":1,"alpha":1.5,"kind":"p-sum","spectral":{"independent":[1]}}"#, "`p`"),
            (r#"{"schema_version":1,"alpha":1.5,"kind":"one-sided","spectral":{"independent":[1]}}"#, "`alpha`"),
            (r#"{"schema_version":1,"alpha":1,"kind":"symmetric","dimension":3,"spectral":{"independent":[1,1]}}"#, "`dimension`"),
            (r#"{"schema_version":1,"alpha":1,"kind":"symmetric","spectral":{"atoms":[{"direction":[1,1],"weight":1}]}}"#, "unit"),
            (r#"{"schema_version":1,"alpha":3,"kind":"symmetric","spectral":{"independent":[1]}}"#, "alpha"),
        ];
        for (text, needle) in cases {
            let e = build(text).unwrap_err();
            assert!(matches!(&e, Error::Parse(m) if m.contains(needle)), "{text}: {e}");
        }
    }

    #[test]
    fn atoms_round_trip_through_json() {
        let atoms = vec![Atom::new(vec![1.0, 0.0], 0.25), Atom::new(vec![0.6, 0.8], 1.5)];
        let cfg = ModelConfig::from_atoms(1.7, Kind::Symmetric, &atoms);
        let back = ModelConfig::parse(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        let m = back.build().unwrap();
        let direct = StableModel::symmetric_atoms(1.7, vec![(vec![1.0, 0.0], 0.25), (vec![0.6, 0.8], 1.5)]).unwrap();
        assert_eq!(m.symmetric().unwrap().fingerprint(), direct.fingerprint());
    }

    #[test]
    fn kind_accessors_reject_mismatches() {
        let m = build(r#"{"schema_version":1,"alpha":0.5,"kind":"one-sided","spectral":{"independent":[1,2]}}"#).unwrap();
        assert!(matches!(m.symmetric(), Err(Error::KindMismatch(_))));
        assert!((m.onesided().unwrap().exponent(&[1.0, 1.0]).unwrap() - (1.0 + 2f64.sqrt())).abs() < 1e-15);
    }
}

//! Spectral measures and stable models.
//!
//! The mass convention is `||u||_F^alpha = sum_j w_j |<u, s_j>|^alpha` for
//! atoms, with symmetric atoms stored on the half-sphere whose first nonzero
//! coordinate is positive. Each such weight accounts for both `s` and `-s`.
//! Densities are tabulated on the full sphere, so that
//! `||u||_F^alpha = sum_i w_i v_i |<u, n_i>|^alpha` over all rule nodes.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, is_spd, mat_t_vec, mat_vec, norm, quad_form};
use crate::quadrature::SphereRule;
use crate::special::{omega, signed_pow, sphere_abs_moment};
use crate::tolerances::{RANK, UNIT_NORM};

/// Symmetry class of a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Symmetric,
    OneSided,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Symmetric => "symmetric",
            Kind::OneSided => "one-sided",
        }
    }
}

/// A point mass of the spectral measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub direction: Vec<f64>,
    pub weight: f64,
}

impl Atom {
    pub fn new(direction: Vec<f64>, weight: f64) -> Self {
        Atom { direction, weight }
    }
}

/// Flips `s` so that its first nonzero coordinate is positive.
pub fn canonical_direction(s: &[f64]) -> Vec<f64> {
    match s.iter().find(|x| **x != 0.0) {
        Some(x) if *x < 0.0 => s.iter().map(|v| -v).collect(),
        _ => s.to_vec(),
    }
}

/// Spectral measure of a stable law.
#[derive(Debug, Clone)]
pub enum SpectralMeasure {
    Atoms(Vec<Atom>),
    /// Nonnegative values at the nodes of `rule` (full sphere).
    Density { rule: Arc<SphereRule>, values: Vec<f64> },
    /// Rotation-invariant measure with the given total mass.
    Isotropic { dim: usize, mass: f64 },
}

impl SpectralMeasure {
    pub fn atoms(list: Vec<(Vec<f64>, f64)>) -> Self {
        SpectralMeasure::Atoms(list.into_iter().map(|(d, w)| Atom::new(d, w)).collect())
    }

    /// Atoms from arbitrary nonzero points: `y` becomes the direction
    /// `y/|y|` with weight `w |y|^alpha`.
    pub fn from_points(points: &[(Vec<f64>, f64)], alpha: f64) -> Result<Self> {
        let mut atoms = Vec::with_capacity(points.len());
        for (i, (y, w)) in points.iter().enumerate() {
            let n = norm(y);
            if n == 0.0 {
                return invalid(format!("point {i} is zero"));
            }
            atoms.push(Atom::new(y.iter().map(|x| x / n).collect(), w * n.powf(alpha)));
        }
        Ok(SpectralMeasure::Atoms(atoms))
    }

    pub fn dim(&self) -> usize {
        match self {
            SpectralMeasure::Atoms(a) => a.first().map_or(0, |a| a.direction.len()),
            SpectralMeasure::Density { rule, .. } => rule.dim(),
            SpectralMeasure::Isotropic { dim, .. } => *dim,
        }
    }

    /// Total mass `sigma(S^{d-1})`.
    pub fn total_mass(&self) -> f64 {
        match self {
            SpectralMeasure::Atoms(a) => a.iter().map(|a| a.weight).sum(),
            SpectralMeasure::Density { rule, values } => {
                values.iter().zip(rule.weights()).map(|(v, w)| v * w).sum()
            }
            SpectralMeasure::Isotropic { mass, .. } => *mass,
        }
    }

    /// Multiplies the measure by `c > 0`.
    pub fn scale(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return invalid(format!("scale factor must be positive, got {c}"));
        }
        Ok(match self {
            SpectralMeasure::Atoms(a) => SpectralMeasure::Atoms(
                a.iter().map(|a| Atom::new(a.direction.clone(), a.weight * c)).collect(),
            ),
            SpectralMeasure::Density { rule, values } => SpectralMeasure::Density {
                rule: rule.clone(),
                values: values.iter().map(|v| v * c).collect(),
            },
            SpectralMeasure::Isotropic { dim, mass } => SpectralMeasure::Isotropic { dim: *dim, mass: mass * c },
        })
    }

    /// `sum w |<u,s>|^alpha`, the alpha-th power of the gauge.
    pub fn gauge_pow(&self, u: &[f64], alpha: f64) -> f64 {
        match self {
            SpectralMeasure::Atoms(a) => a.iter().map(|a| a.weight * dot(u, &a.direction).abs().powf(alpha)).sum(),
            SpectralMeasure::Density { rule, values } => {
                let mut s = 0.0;
                for (i, v) in values.iter().enumerate() {
                    if *v != 0.0 {
                        s += rule.weight(i) * v * dot(u, rule.node(i)).abs().powf(alpha);
                    }
                }
                s
            }
            SpectralMeasure::Isotropic { dim, mass } => {
                mass / omega(*dim) * sphere_abs_moment(*dim, alpha) * norm(u).powf(alpha)
            }
        }
    }

    /// Gradient of `gauge_pow` in `u`.
    pub fn gauge_pow_grad(&self, u: &[f64], alpha: f64) -> Vec<f64> {
        let d = u.len();
        let mut g = vec![0.0; d];
        let mut add = |s: &[f64], w: f64| {
            let t = alpha * w * signed_pow(dot(u, s), alpha - 1.0);
            for k in 0..d {
                g[k] += t * s[k];
            }
        };
        match self {
            SpectralMeasure::Atoms(a) => a.iter().for_each(|a| add(&a.direction, a.weight)),
            SpectralMeasure::Density { rule, values } => {
                for (i, v) in values.iter().enumerate() {
                    add(rule.node(i), rule.weight(i) * v);
                }
            }
            SpectralMeasure::Isotropic { dim, mass } => {
                let c = mass / omega(*dim) * sphere_abs_moment(*dim, alpha);
                let n = norm(u);
                if n > 0.0 {
                    let t = c * alpha * n.powf(alpha - 2.0);
                    for k in 0..d {
                        g[k] = t * u[k];
                    }
                }
            }
        }
        g
    }

    /// Second-moment matrix `int s s^T sigma(ds)`, used for the rank test.
    pub fn second_moment(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        let mut add = |s: &[f64], w: f64| {
            for i in 0..d {
                for j in 0..d {
                    m[(i, j)] += w * s[i] * s[j];
                }
            }
        };
        match self {
            SpectralMeasure::Atoms(a) => a.iter().for_each(|a| add(&a.direction, a.weight)),
            SpectralMeasure::Density { rule, values } => {
                for (i, v) in values.iter().enumerate() {
                    add(rule.node(i), rule.weight(i) * v);
                }
            }
            SpectralMeasure::Isotropic { dim, mass } => {
                for i in 0..*dim {
                    m[(i, i)] = mass / *dim as f64;
                }
            }
        }
        m
    }

    /// Folds a tabulated density onto half-sphere atoms with weights
    /// `w_i (v_i + v_{-i})`; atoms are returned unchanged.
    pub fn to_atoms(&self) -> Result<Vec<Atom>> {
        match self {
            SpectralMeasure::Atoms(a) => Ok(a.clone()),
            SpectralMeasure::Density { rule, values } => {
                let mut out = Vec::new();
                for i in 0..rule.len() {
                    let j = rule.antipode(i);
                    let s = rule.node(i);
                    if canonical_direction(s) == s && i != j {
                        let w = rule.weight(i) * values[i] + rule.weight(j) * values[j];
                        if w > 0.0 {
                            out.push(Atom::new(s.to_vec(), w));
                        }
                    }
                }
                Ok(out)
            }
            SpectralMeasure::Isotropic { .. } => {
                Err(Error::Unsupported("isotropic measures have no atom representation".into()))
            }
        }
    }

    fn describe(&self) -> Value {
        match self {
            SpectralMeasure::Atoms(a) => json!({
                "atoms": a.iter().map(|a| json!({"direction": a.direction, "weight": a.weight})).collect::<Vec<_>>()
            }),
            SpectralMeasure::Density { rule, values } => json!({
                "density": {
                    "nodes": rule.nodes().map(|n| n.to_vec()).collect::<Vec<_>>(),
                    "weights": rule.weights(),
                    "values": values,
                }
            }),
            SpectralMeasure::Isotropic { dim, mass } => json!({"isotropic": {"dimension": dim, "mass": mass}}),
        }
    }
}

/// Gauge evaluator supplied directly rather than through a measure.
pub type GaugeFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Gauges given in closed form or derived from other models.
#[derive(Clone)]
pub enum ExplicitGauge {
    /// `||u||^2 = <Cu, u> / 2`.
    Ellipsoid { c: DMatrix<f64> },
    /// Same gauge as `source`, smaller exponent (subordinated law).
    Substable { source: Box<StableModel> },
    /// `||u||^alpha = ||u||_a^alpha + ||u||_b^alpha` (independent sum).
    StarSum { a: Box<StableModel>, b: Box<StableModel> },
    /// `||u|| = ||map u||_source`, the law of `map^T xi`.
    Linear { source: Box<StableModel>, map: DMatrix<f64> },
    /// Arbitrary homogeneous evaluator; no sampler is available.
    Custom { dim: usize, gauge: GaugeFn },
}

impl fmt::Debug for ExplicitGauge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExplicitGauge::Ellipsoid { c } => f.debug_struct("Ellipsoid").field("c", c).finish(),
            ExplicitGauge::Substable { source } => f.debug_struct("Substable").field("source", source).finish(),
            ExplicitGauge::StarSum { a, b } => f.debug_struct("StarSum").field("a", a).field("b", b).finish(),
            ExplicitGauge::Linear { source, map } => {
                f.debug_struct("Linear").field("source", source).field("map", map).finish()
            }
            ExplicitGauge::Custom { dim, .. } => f.debug_struct("Custom").field("dim", dim).finish(),
        }
    }
}

/// Where a model's gauge comes from.
#[derive(Debug, Clone)]
pub enum GaugeSource {
    Spectral(SpectralMeasure),
    Explicit(ExplicitGauge),
}

/// Characteristic exponent, symmetry kind, and gauge of a stable law.
#[derive(Debug, Clone)]
pub struct StableModel {
    alpha: f64,
    kind: Kind,
    dim: usize,
    source: GaugeSource,
}

impl StableModel {
    /// Builds a model after structural checks (exponent range, matching
    /// dimensions, nonempty spectral data). Symmetric atoms are moved to
    /// the canonical half-sphere. Use [`validate_model`] for the full list
    /// of diagnostics.
    pub fn new(alpha: f64, kind: Kind, source: GaugeSource) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return invalid(format!("alpha must lie in (0, 2], got {alpha}"));
        }
        let source = match source {
            GaugeSource::Spectral(SpectralMeasure::Atoms(atoms)) => {
                if atoms.is_empty() {
                    return invalid("spectral measure has no atoms");
                }
                let d = atoms[0].direction.len();
                if atoms.iter().any(|a| a.direction.len() != d) {
                    return invalid("atoms have inconsistent dimensions");
                }
                let atoms = if kind == Kind::Symmetric {
                    atoms
                        .into_iter()
                        .map(|a| Atom::new(canonical_direction(&a.direction), a.weight))
                        .collect()
                } else {
                    atoms
                };
                GaugeSource::Spectral(SpectralMeasure::Atoms(atoms))
            }
            GaugeSource::Spectral(SpectralMeasure::Density { rule, values }) => {
                if values.len() != rule.len() {
                    return invalid("density values do not match the rule size");
                }
                GaugeSource::Spectral(SpectralMeasure::Density { rule, values })
            }
            GaugeSource::Explicit(ExplicitGauge::Ellipsoid { c }) => {
                if !is_spd(&c, 1e-12) {
                    return invalid("ellipsoid matrix must be symmetric positive definite");
                }
                GaugeSource::Explicit(ExplicitGauge::Ellipsoid { c })
            }
            GaugeSource::Explicit(ExplicitGauge::Linear { source, map }) => {
                if map.nrows() != source.dim() {
                    return invalid("linear map rows must match the source dimension");
                }
                GaugeSource::Explicit(ExplicitGauge::Linear { source, map })
            }
            GaugeSource::Explicit(ExplicitGauge::StarSum { a, b }) => {
                if a.dim() != b.dim() || a.kind() != b.kind() || (a.alpha() - alpha).abs() > 0.0 || (b.alpha() - alpha).abs() > 0.0 {
                    return Err(Error::KindMismatch("star sum needs equal exponent, kind, and dimension".into()));
                }
                GaugeSource::Explicit(ExplicitGauge::StarSum { a, b })
            }
            other => other,
        };
        if kind == Kind::OneSided && !matches!(source, GaugeSource::Spectral(SpectralMeasure::Atoms(_))) {
            return invalid("one-sided models need a discrete spectral measure");
        }
        let dim = match &source {
            GaugeSource::Spectral(m) => m.dim(),
            GaugeSource::Explicit(ExplicitGauge::Ellipsoid { c }) => c.nrows(),
            GaugeSource::Explicit(ExplicitGauge::Substable { source }) => source.dim(),
            GaugeSource::Explicit(ExplicitGauge::StarSum { a, .. }) => a.dim(),
            GaugeSource::Explicit(ExplicitGauge::Linear { map, .. }) => map.ncols(),
            GaugeSource::Explicit(ExplicitGauge::Custom { dim, .. }) => *dim,
        };
        if dim == 0 {
            return invalid("model dimension must be positive");
        }
        Ok(StableModel { alpha, kind, dim, source })
    }

    /// Symmetric model with the given atoms.
    pub fn symmetric_atoms(alpha: f64, atoms: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        Self::new(alpha, Kind::Symmetric, GaugeSource::Spectral(SpectralMeasure::atoms(atoms)))
    }

    /// One-sided model with the given atoms.
    pub fn onesided_atoms(alpha: f64, atoms: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        Self::new(alpha, Kind::OneSided, GaugeSource::Spectral(SpectralMeasure::atoms(atoms)))
    }

    /// Independent symmetric components with scale parameters `scales`:
    /// atoms `e_i` with weights `scales_i^alpha`.
    pub fn independent(alpha: f64, scales: &[f64]) -> Result<Self> {
        let d = scales.len();
        let atoms = scales
            .iter()
            .enumerate()
            .map(|(i, s)| (crate::linalg::basis(d, i), s.powf(alpha)))
            .collect();
        Self::symmetric_atoms(alpha, atoms)
    }

    /// Isotropic model with total spectral mass `mass`.
    pub fn isotropic(dim: usize, alpha: f64, mass: f64) -> Result<Self> {
        Self::new(alpha, Kind::Symmetric, GaugeSource::Spectral(SpectralMeasure::Isotropic { dim, mass }))
    }

    /// Isotropic model whose gauge is `scale * |u|`.
    pub fn isotropic_scaled(dim: usize, alpha: f64, scale: f64) -> Result<Self> {
        let mass = scale.powf(alpha) * omega(dim) / sphere_abs_moment(dim, alpha);
        Self::isotropic(dim, alpha, mass)
    }

    /// Sub-Gaussian model with `||u||^2 = <Cu, u> / 2`; `alpha = 2` is the
    /// centred normal law with covariance `C`.
    pub fn sub_gaussian(alpha: f64, c: DMatrix<f64>) -> Result<Self> {
        Self::new(alpha, Kind::Symmetric, GaugeSource::Explicit(ExplicitGauge::Ellipsoid { c }))
    }

    /// Symmetric model with a user-supplied gauge.
    pub fn custom(alpha: f64, dim: usize, gauge: GaugeFn) -> Result<Self> {
        Self::new(alpha, Kind::Symmetric, GaugeSource::Explicit(ExplicitGauge::Custom { dim, gauge }))
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn source(&self) -> &GaugeSource {
        &self.source
    }

    pub fn is_symmetric(&self) -> bool {
        self.kind == Kind::Symmetric
    }

    /// Spectral measure, if the model has one.
    pub fn measure(&self) -> Option<&SpectralMeasure> {
        match &self.source {
            GaugeSource::Spectral(m) => Some(m),
            _ => None,
        }
    }

    /// Matrix `C` of a sub-Gaussian model.
    pub fn ellipsoid_matrix(&self) -> Option<&DMatrix<f64>> {
        match &self.source {
            GaugeSource::Explicit(ExplicitGauge::Ellipsoid { c }) => Some(c),
            _ => None,
        }
    }

    fn check_arg(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.dim {
            return invalid(format!("expected a {}-vector, got length {}", self.dim, u.len()));
        }
        if self.kind == Kind::OneSided && u.iter().any(|x| *x < 0.0) {
            return invalid("one-sided gauges are defined on the positive orthant only");
        }
        Ok(())
    }

    /// The gauge `||u||_F`.
    pub fn gauge(&self, u: &[f64]) -> Result<f64> {
        self.check_arg(u)?;
        Ok(self.gauge_raw(u))
    }

    /// `||u||_F^alpha`.
    pub fn gauge_pow(&self, u: &[f64]) -> Result<f64> {
        self.check_arg(u)?;
        Ok(self.gauge_pow_raw(u))
    }

    /// Gauge without argument checks; `u` must have the model dimension.
    pub fn gauge_raw(&self, u: &[f64]) -> f64 {
        match &self.source {
            GaugeSource::Spectral(m) => m.gauge_pow(u, self.alpha).powf(1.0 / self.alpha),
            GaugeSource::Explicit(e) => match e {
                ExplicitGauge::Ellipsoid { c } => (0.5 * quad_form(c, u)).max(0.0).sqrt(),
                ExplicitGauge::Substable { source } => source.gauge_raw(u),
                ExplicitGauge::StarSum { a, b } => {
                    (a.gauge_pow_raw(u) + b.gauge_pow_raw(u)).powf(1.0 / self.alpha)
                }
                ExplicitGauge::Linear { source, map } => source.gauge_raw(&mat_vec(map, u)),
                ExplicitGauge::Custom { gauge, .. } => gauge(u),
            },
        }
    }

    /// `||u||_F^alpha` without argument checks.
    pub fn gauge_pow_raw(&self, u: &[f64]) -> f64 {
        match &self.source {
            GaugeSource::Spectral(m) => m.gauge_pow(u, self.alpha),
            GaugeSource::Explicit(ExplicitGauge::StarSum { a, b }) => a.gauge_pow_raw(u) + b.gauge_pow_raw(u),
            _ => self.gauge_raw(u).powf(self.alpha),
        }
    }

    /// Radial function `rho_F(u) = 1/||u||_F`; infinite where the gauge
    /// vanishes.
    pub fn radial(&self, u: &[f64]) -> f64 {
        let g = self.gauge_raw(u);
        if g > 0.0 {
            1.0 / g
        } else {
            f64::INFINITY
        }
    }

    /// Gradient of the gauge at `u != 0`.
    pub fn gauge_grad(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_arg(u)?;
        if norm(u) == 0.0 {
            return invalid("gradient is undefined at the origin");
        }
        Ok(self.gauge_grad_raw(u))
    }

    pub(crate) fn gauge_grad_raw(&self, u: &[f64]) -> Vec<f64> {
        let a = self.alpha;
        match &self.source {
            GaugeSource::Spectral(m) => {
                let g = self.gauge_raw(u);
                let scale = g.powf(1.0 - a) / a;
                m.gauge_pow_grad(u, a).into_iter().map(|x| x * scale).collect()
            }
            GaugeSource::Explicit(e) => match e {
                ExplicitGauge::Ellipsoid { c } => {
                    let g = self.gauge_raw(u);
                    mat_vec(c, u).into_iter().map(|x| 0.5 * x / g).collect()
                }
                ExplicitGauge::Substable { source } => source.gauge_grad_raw(u),
                ExplicitGauge::StarSum { a: m1, b: m2 } => {
                    let g = self.gauge_raw(u);
                    let (g1, g2) = (m1.gauge_raw(u), m2.gauge_raw(u));
                    let (d1, d2) = (m1.gauge_grad_raw(u), m2.gauge_grad_raw(u));
                    let (c1, c2) = (g1.powf(a - 1.0), g2.powf(a - 1.0));
                    let s = g.powf(1.0 - a);
                    d1.iter().zip(&d2).map(|(x, y)| s * (c1 * x + c2 * y)).collect()
                }
                ExplicitGauge::Linear { source, map } => {
                    let v = mat_vec(map, u);
                    mat_t_vec(map, &source.gauge_grad_raw(&v))
                }
                ExplicitGauge::Custom { gauge, .. } => {
                    let h = 1e-6 * norm(u);
                    (0..u.len())
                        .map(|k| {
                            let mut p = u.to_vec();
                            let mut q = u.to_vec();
                            p[k] += h;
                            q[k] -= h;
                            (gauge(&p) - gauge(&q)) / (2.0 * h)
                        })
                        .collect()
                }
            },
        }
    }

    /// Model of `t xi`: the gauge is multiplied by `t > 0`.
    pub fn scale_vector(&self, t: f64) -> Result<Self> {
        if !(t > 0.0) {
            return invalid("scale must be positive");
        }
        let source = match &self.source {
            GaugeSource::Spectral(m) => GaugeSource::Spectral(m.scale(t.powf(self.alpha))?),
            GaugeSource::Explicit(ExplicitGauge::Ellipsoid { c }) => {
                GaugeSource::Explicit(ExplicitGauge::Ellipsoid { c: c * (t * t) })
            }
            _ => GaugeSource::Explicit(ExplicitGauge::Linear {
                source: Box::new(self.clone()),
                map: DMatrix::identity(self.dim, self.dim) * t,
            }),
        };
        Self::new(self.alpha, self.kind, source)
    }

    /// Model of `M^T xi` for a `dim x k` matrix `M`, with gauge
    /// `u -> ||M u||_F` on `R^k`. Atoms are mapped to `M^T s` and
    /// renormalized; sub-Gaussian matrices become `M^T C M`.
    pub fn linear_image(&self, m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != self.dim {
            return invalid("map rows must match the model dimension");
        }
        if self.kind == Kind::OneSided {
            return Err(Error::KindMismatch("linear images are only defined for symmetric models".into()));
        }
        let source = match &self.source {
            GaugeSource::Spectral(SpectralMeasure::Atoms(atoms)) => {
                let mut out = Vec::new();
                for a in atoms {
                    let y = mat_t_vec(m, &a.direction);
                    let n = norm(&y);
                    if n > UNIT_NORM {
                        out.push(Atom::new(y.iter().map(|x| x / n).collect(), a.weight * n.powf(self.alpha)));
                    }
                }
                if out.is_empty() {
                    return invalid("every atom maps to zero");
                }
                GaugeSource::Spectral(SpectralMeasure::Atoms(out))
            }
            GaugeSource::Explicit(ExplicitGauge::Ellipsoid { c }) => {
                GaugeSource::Explicit(ExplicitGauge::Ellipsoid { c: m.transpose() * c * m })
            }
            _ => GaugeSource::Explicit(ExplicitGauge::Linear { source: Box::new(self.clone()), map: m.clone() }),
        };
        Self::new(self.alpha, self.kind, source)
    }

    /// Canonical JSON description used for fingerprints.
    pub fn describe(&self) -> Value {
        let source = match &self.source {
            GaugeSource::Spectral(m) => m.describe(),
            GaugeSource::Explicit(e) => match e {
                ExplicitGauge::Ellipsoid { c } => json!({"ellipsoid": matrix_rows(c)}),
                ExplicitGauge::Substable { source } => json!({"substable": source.describe()}),
                ExplicitGauge::StarSum { a, b } => json!({"star_sum": [a.describe(), b.describe()]}),
                ExplicitGauge::Linear { source, map } => {
                    json!({"linear": {"source": source.describe(), "map": matrix_rows(map)}})
                }
                ExplicitGauge::Custom { dim, .. } => json!({"custom": {"dimension": dim}}),
            },
        };
        json!({"alpha": self.alpha, "kind": self.kind.as_str(), "dimension": self.dim, "source": source})
    }

    /// SHA-256 of the canonical description, as lowercase hex.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.describe().to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub(crate) fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

/// Severity of a validation finding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Note,
}

/// One validation finding.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: &'static str,
    pub message: String,
}

impl Diagnostic {
    fn error(code: &'static str, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Error, code, message: message.into() }
    }
}

/// True when no diagnostic is an error.
pub fn is_clean(diags: &[Diagnostic]) -> bool {
    diags.iter().all(|d| d.severity != Severity::Error)
}

fn probe_directions(d: usize, n: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    (0..n)
        .map(|_| {
            let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            let r = norm(&v);
            v.into_iter().map(|x| x / r).collect()
        })
        .collect()
}

/// Lists every failed check of a model; an empty list means valid.
pub fn validate_model(model: &StableModel) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let a = model.alpha;
    if !(a > 0.0 && a <= 2.0) {
        out.push(Diagnostic::error("alpha-range", format!("alpha must lie in (0, 2], got {a}")));
    }
    if a == 2.0 {
        out.push(Diagnostic {
            severity: Severity::Note,
            code: "non-unique",
            message: "spectral measure not unique at alpha = 2".into(),
        });
    }
    if model.kind == Kind::OneSided && a >= 1.0 {
        out.push(Diagnostic::error("one-sided-alpha", format!("one-sided requires alpha < 1, got {a}")));
    }
    match &model.source {
        GaugeSource::Spectral(m) => {
            match m {
                SpectralMeasure::Atoms(atoms) => {
                    for (i, at) in atoms.iter().enumerate() {
                        if !(at.weight >= 0.0) {
                            out.push(Diagnostic::error("weight", format!("atom {i} has negative weight")));
                        }
                        if (norm(&at.direction) - 1.0).abs() > UNIT_NORM {
                            out.push(Diagnostic::error("unit", format!("atom {i} direction is not a unit vector")));
                        }
                        if model.kind == Kind::Symmetric && canonical_direction(&at.direction) != at.direction {
                            out.push(Diagnostic::error("half-sphere", format!("atom {i} is not on the canonical half-sphere")));
                        }
                        if model.kind == Kind::OneSided && at.direction.iter().any(|x| *x < 0.0) {
                            out.push(Diagnostic::error("orthant", format!("atom {i} lies outside the positive orthant")));
                        }
                    }
                }
                SpectralMeasure::Density { values, .. } => {
                    if let Some(i) = values.iter().position(|v| !(*v >= 0.0)) {
                        out.push(Diagnostic::error("weight", format!("density is negative at node {i}")));
                    }
                }
                SpectralMeasure::Isotropic { .. } => {}
            }
            if !(m.total_mass() > 0.0) {
                out.push(Diagnostic::error("mass", "total mass must be positive"));
            } else {
                let eig = m.second_moment().symmetric_eigenvalues();
                let max = eig.max();
                if eig.min() <= RANK * max {
                    out.push(Diagnostic::error("full-dimensional", "not full-dimensional"));
                }
            }
        }
        GaugeSource::Explicit(_) => {
            let dirs = probe_directions(model.dim, 64);
            let mut max: f64 = 0.0;
            let mut min = f64::INFINITY;
            let mut homogeneous = true;
            for u in &dirs {
                let g = model.gauge_raw(u);
                max = max.max(g);
                min = min.min(g);
                for c in [0.5, 3.0] {
                    let v: Vec<f64> = u.iter().map(|x| c * x).collect();
                    let gc = model.gauge_raw(&v);
                    if (gc - c * g).abs() > 1e-10 * (c * g).max(1e-300) {
                        homogeneous = false;
                    }
                }
            }
            if !homogeneous {
                out.push(Diagnostic::error("homogeneity", "gauge is not positively homogeneous of degree one"));
            }
            if !(min > RANK * max) {
                out.push(Diagnostic::error("full-dimensional", "not full-dimensional"));
            }
        }
    }
    out
}

/// Density `rho_L^{d+alpha}/(d+alpha)` on the nodes of `rule`, whose gauge
/// satisfies `||u||^alpha = int_L |<u,y>|^alpha dy`.
pub fn spectral_from_star_body(
    gauge_l: impl Fn(&[f64]) -> f64,
    alpha: f64,
    rule: Arc<SphereRule>,
) -> Result<SpectralMeasure> {
    let d = rule.dim() as f64;
    let mut values = Vec::with_capacity(rule.len());
    for i in 0..rule.len() {
        let g = gauge_l(rule.node(i));
        let rho = 1.0 / g;
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::NonFinite(i));
        }
        values.push(rho.powf(d + alpha) / (d + alpha));
    }
    Ok(SpectralMeasure::Density { rule, values })
}

/// Empirical spectral measure of the directions of samples with norm at
/// least `t`, one atom of weight `1/m` per retained sample. Symmetric
/// estimates are folded to the half-sphere. With `bins = Some(n)` and
/// `d = 2`, directions are grouped into `n` equal angular bins instead.
pub fn estimate_spectral_from_samples(
    samples: &[Vec<f64>],
    t: f64,
    kind: Kind,
    bins: Option<usize>,
) -> Result<SpectralMeasure> {
    let kept: Vec<Vec<f64>> = samples
        .iter()
        .filter(|s| norm(s) >= t && norm(s) > 0.0)
        .map(|s| {
            let n = norm(s);
            let v: Vec<f64> = s.iter().map(|x| x / n).collect();
            match kind {
                Kind::Symmetric => canonical_direction(&v),
                Kind::OneSided => v,
            }
        })
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyTail(t));
    }
    let m = kept.len() as f64;
    if let Some(nb) = bins {
        if kept[0].len() != 2 {
            return invalid("angular binning is only available in dimension 2");
        }
        if nb == 0 {
            return invalid("bin count must be positive");
        }
        let span = match kind {
            Kind::Symmetric => std::f64::consts::PI,
            Kind::OneSided => 2.0 * std::f64::consts::PI,
        };
        let mut counts = vec![0usize; nb];
        for v in &kept {
            let mut ang = v[1].atan2(v[0]);
            if kind == Kind::Symmetric {
                ang = (ang + std::f64::consts::FRAC_PI_2).rem_euclid(span) - std::f64::consts::FRAC_PI_2;
            } else {
                ang = ang.rem_euclid(span);
            }
            let offset = if kind == Kind::Symmetric { std::f64::consts::FRAC_PI_2 } else { 0.0 };
            let k = (((ang + offset) / span * nb as f64) as usize).min(nb - 1);
            counts[k] += 1;
        }
        let offset = if kind == Kind::Symmetric { -std::f64::consts::FRAC_PI_2 } else { 0.0 };
        let atoms = counts
            .iter()
            .enumerate()
            .filter(|(_, c)| **c > 0)
            .map(|(k, c)| {
                let ang = offset + (k as f64 + 0.5) * span / nb as f64;
                let dir = vec![ang.cos(), ang.sin()];
                let dir = if kind == Kind::Symmetric { canonical_direction(&dir) } else { dir };
                Atom::new(dir, *c as f64 / m)
            })
            .collect();
        return Ok(SpectralMeasure::Atoms(atoms));
    }
    // Merge identical directions so repeated samples form a single atom.
    let mut atoms: Vec<Atom> = Vec::new();
    let mut index: std::collections::HashMap<Vec<u64>, usize> = std::collections::HashMap::new();
    for v in kept {
        let key: Vec<u64> = v.iter().map(|x| (x + 0.0).to_bits()).collect();
        match index.get(&key) {
            Some(&i) => atoms[i].weight += 1.0 / m,
            None => {
                index.insert(key, atoms.len());
                atoms.push(Atom::new(v, 1.0 / m));
            }
        }
    }
    Ok(SpectralMeasure::Atoms(atoms))
}

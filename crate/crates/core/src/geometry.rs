//! The star body `F`, the zonoid `K`, and body-level functionals.
//!
//! `F` is the unit ball of the gauge, `rho_F = 1/gauge`. For `alpha >= 1`
//! the gauge is also the support function of the convex body `K`, and
//! `F` is the polar of `K`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, is_orthonormal, is_spd, norm, quad_form};
use crate::optim::{golden_section, nelder_mead, scan_minimize};
use crate::quadrature::{arc_rule, circle_rule, circle_rule_offset, fibonacci_pairs, integrate_sphere, Estimate, QuadLevels, SphereRule};
use crate::special::gamma;
use crate::spectral::{
    validate_model, Atom, ExplicitGauge, GaugeSource, Kind, SpectralMeasure, StableModel,
};
use crate::tolerances::{JOHN_LOGDET, JOHN_MAX_ITER};

/// Gauge values of a model cached on the nodes of a rule.
#[derive(Debug, Clone)]
pub struct GaugeView<'a> {
    pub model: &'a StableModel,
    pub rule: Arc<SphereRule>,
    pub values: Vec<f64>,
}

impl<'a> GaugeView<'a> {
    pub fn new(model: &'a StableModel, rule: Arc<SphereRule>) -> Result<Self> {
        if rule.dim() != model.dim() {
            return invalid("rule and model dimensions differ");
        }
        let values = rule.nodes().map(|u| model.gauge_raw(u)).collect();
        Ok(GaugeView { model, rule, values })
    }

    pub fn gauge(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn radial(&self, i: usize) -> f64 {
        1.0 / self.values[i]
    }

    /// Largest cached gauge value, an estimate of `||K||` for `alpha >= 1`.
    pub fn max_gauge(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }
}

/// Centred ellipsoid `{x : x^T M x <= 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    pub matrix: DMatrix<f64>,
}

impl Ellipsoid {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !is_spd(&matrix, 1e-12) {
            return invalid("ellipsoid matrix must be symmetric positive definite");
        }
        Ok(Ellipsoid { matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Support function `sqrt(u^T M^{-1} u)`.
    pub fn support(&self, u: &[f64]) -> f64 {
        let inv = self.matrix.clone().try_inverse().expect("positive definite");
        quad_form(&inv, u).sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        quad_form(&self.matrix, x) <= 1.0
    }

    pub fn volume(&self) -> f64 {
        crate::special::kappa(self.dim()) / self.matrix.determinant().sqrt()
    }

    /// Sub-Gaussian model whose zonoid is this ellipsoid: `C = 2 M^{-1}`.
    pub fn to_model(&self, alpha: f64) -> Result<StableModel> {
        let inv = self.matrix.clone().try_inverse().ok_or_else(|| Error::InvalidArgument("singular ellipsoid".into()))?;
        StableModel::sub_gaussian(alpha, inv * 2.0)
    }
}

pub(crate) fn ensure_full_dimensional(model: &StableModel) -> Result<()> {
    if validate_model(model).iter().any(|d| d.code == "full-dimensional") {
        return Err(Error::InfiniteVolume);
    }
    Ok(())
}

pub(crate) fn ensure_symmetric(model: &StableModel, what: &str) -> Result<()> {
    if model.kind() != Kind::Symmetric {
        return Err(Error::KindMismatch(format!("{what} needs a symmetric model")));
    }
    Ok(())
}

/// Default rule for `model`: in the plane, atomic gauges get Gauss–Legendre
/// panels between the directions orthogonal to their atoms, where the gauge
/// has kinks; otherwise the rule from `levels`.
pub fn adapted_rule(model: &StableModel, levels: &QuadLevels) -> Result<SphereRule> {
    if model.dim() == 2 {
        if let Some(SpectralMeasure::Atoms(atoms)) = model.measure() {
            let breaks: Vec<f64> =
                atoms.iter().map(|a| a.direction[1].atan2(a.direction[0]) + PI / 2.0).collect();
            return arc_rule(&breaks, levels.circle);
        }
    }
    levels.rule(model.dim())
}

/// The gauge `||u||_F`.
pub fn gauge(model: &StableModel, u: &[f64]) -> Result<f64> {
    model.gauge(u)
}

/// Support point `T(K,u)`, the gradient of `h(K, .)` at `u`, for `alpha > 1`.
pub fn support_point(model: &StableModel, u: &[f64]) -> Result<Vec<f64>> {
    if model.alpha() <= 1.0 {
        return invalid("support points need alpha > 1");
    }
    ensure_symmetric(model, "support_point")?;
    let g = model.gauge(u)?;
    if norm(u) == 0.0 {
        return invalid("support point is undefined at u = 0");
    }
    if !(g > 0.0) {
        return Err(Error::InfiniteVolume);
    }
    model.gauge_grad(u)
}

/// Volume `|F| = (1/d) int rho_F^d`.
pub fn volume(model: &StableModel, rule: &SphereRule) -> Result<Estimate> {
    if rule.dim() != model.dim() {
        return invalid("rule and model dimensions differ");
    }
    ensure_full_dimensional(model)?;
    let d = model.dim() as i32;
    let est = integrate_sphere(rule, |u| model.radial(u).powi(d)).map_err(|e| match e {
        Error::NonFinite(_) => Error::InfiniteVolume,
        other => other,
    })?;
    Ok(est.scale(1.0 / d as f64))
}

/// Orthonormal basis of the orthogonal complement of `u`, as columns.
pub fn orthogonal_complement(u: &[f64]) -> Result<DMatrix<f64>> {
    let d = u.len();
    let n = norm(u);
    if n == 0.0 {
        return invalid("zero vector has no complement basis");
    }
    let mut basis: Vec<Vec<f64>> = vec![u.iter().map(|x| x / n).collect()];
    for i in 0..d {
        let mut v = crate::linalg::basis(d, i);
        for b in &basis {
            let c = dot(&v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let r = norm(&v);
        if r > 1e-8 {
            basis.push(v.into_iter().map(|x| x / r).collect());
        }
        if basis.len() == d {
            break;
        }
    }
    let cols: Vec<DVector<f64>> = basis[1..].iter().map(|v| DVector::from_column_slice(v)).collect();
    Ok(DMatrix::from_columns(&cols))
}

/// `Vol_k(F cap H)` for the subspace `H` spanned by the orthonormal
/// columns of `basis`.
pub fn subspace_volume(model: &StableModel, basis: &DMatrix<f64>, levels: &QuadLevels) -> Result<Estimate> {
    if basis.nrows() != model.dim() {
        return invalid("basis rows must match the model dimension");
    }
    if !is_orthonormal(basis, 1e-10) {
        return invalid("basis is not orthonormal");
    }
    ensure_full_dimensional(model)?;
    let k = basis.ncols();
    let map = |v: &[f64]| -> Vec<f64> { (basis * DVector::from_column_slice(v)).as_slice().to_vec() };
    if k == 1 {
        let b = map(&[1.0]);
        let r = model.radial(&b);
        if !r.is_finite() {
            return Err(Error::InfiniteVolume);
        }
        return Ok(Estimate::exact(2.0 * r));
    }
    let rule = levels.rule(k)?;
    let est = integrate_sphere(&rule, |v| model.radial(&map(v)).powi(k as i32)).map_err(|e| match e {
        Error::NonFinite(_) => Error::InfiniteVolume,
        other => other,
    })?;
    Ok(est.scale(1.0 / k as f64))
}

/// `Vol_{d-1}(F cap u^perp)`.
pub fn section_volume(model: &StableModel, u: &[f64], levels: &QuadLevels) -> Result<Estimate> {
    if model.dim() < 2 {
        return invalid("sections need d >= 2");
    }
    if u.len() != model.dim() {
        return invalid("direction has the wrong dimension");
    }
    subspace_volume(model, &orthogonal_complement(u)?, levels)
}

/// Alpha-star sum: the law of the sum of independent vectors.
pub fn star_sum(a: &StableModel, b: &StableModel) -> Result<StableModel> {
    if a.alpha() != b.alpha() || a.kind() != b.kind() || a.dim() != b.dim() {
        return Err(Error::KindMismatch("star sum needs equal exponent, kind, and dimension".into()));
    }
    match (a.source(), b.source()) {
        (GaugeSource::Spectral(SpectralMeasure::Atoms(x)), GaugeSource::Spectral(SpectralMeasure::Atoms(y))) => {
            let atoms: Vec<Atom> = x.iter().chain(y).cloned().collect();
            StableModel::new(a.alpha(), a.kind(), GaugeSource::Spectral(SpectralMeasure::Atoms(atoms)))
        }
        _ => StableModel::new(
            a.alpha(),
            a.kind(),
            GaugeSource::Explicit(ExplicitGauge::StarSum { a: Box::new(a.clone()), b: Box::new(b.clone()) }),
        ),
    }
}

/// Subordinated law `zeta^{1/alpha} xi` with exponent `alpha beta` and the
/// same star body.
pub fn substable_transform(model: &StableModel, beta: f64) -> Result<StableModel> {
    ensure_symmetric(model, "substable_transform")?;
    if !(beta > 0.0 && beta < 1.0) {
        return invalid(format!("beta must lie in (0, 1), got {beta}"));
    }
    StableModel::new(
        model.alpha() * beta,
        Kind::Symmetric,
        GaugeSource::Explicit(ExplicitGauge::Substable { source: Box::new(model.clone()) }),
    )
}

/// Projection onto the subspace spanned by the orthonormal columns of
/// `basis`, expressed in those coordinates.
pub fn project_model(model: &StableModel, basis: &DMatrix<f64>) -> Result<StableModel> {
    ensure_symmetric(model, "project_model")?;
    if basis.nrows() != model.dim() || !is_orthonormal(basis, 1e-10) {
        return invalid("basis is not orthonormal in the model space");
    }
    model.linear_image(basis)
}

/// Result of the John ellipsoid computation.
#[derive(Debug, Clone)]
pub struct JohnEllipsoid {
    pub ellipsoid: Ellipsoid,
    pub iterations: usize,
    /// Largest `h(E,u_i)/h(K,u_i)` over the constraint directions (at most 1).
    pub inner_ratio: f64,
    /// Largest `h(K,u_i)/h(E,u_i)` over the constraint directions.
    pub outer_ratio: f64,
}

impl JohnEllipsoid {
    /// `E` inside the polytope and `K` inside `sqrt(d)(1 + eps) E` on all
    /// constraint directions.
    pub fn certified(&self, eps: f64) -> bool {
        let d = self.ellipsoid.dim() as f64;
        self.inner_ratio <= 1.0 + 1e-12 && self.outer_ratio <= d.sqrt() * (1.0 + eps)
    }
}

fn john_directions(d: usize) -> Result<Vec<Vec<f64>>> {
    match d {
        2 => Ok(circle_rule(128)?.nodes().map(|u| u.to_vec()).collect()),
        3 => Ok(fibonacci_pairs(385).into_iter().map(|u| u.to_vec()).collect()),
        _ => invalid("John ellipsoids are computed for d = 2 or 3 only"),
    }
}

/// Maximal-volume centred ellipsoid inscribed in the polytope
/// `{x : <x,u_i> <= h(K,u_i)}` over a fixed direction set.
///
/// Solved as the minimal enclosing ellipsoid of the polar points
/// `u_i/h(K,u_i)` with Frank–Wolfe steps and away steps, stopping when the
/// certified log-det gap is below the tolerance.
pub fn john_ellipsoid(model: &StableModel) -> Result<JohnEllipsoid> {
    if model.alpha() < 1.0 {
        return invalid("John ellipsoids need alpha >= 1 (convex K)");
    }
    ensure_symmetric(model, "john_ellipsoid")?;
    ensure_full_dimensional(model)?;
    let d = model.dim();
    let dirs = john_directions(d)?;
    let h: Vec<f64> = dirs.iter().map(|u| model.gauge_raw(u)).collect();
    let pts: Vec<DVector<f64>> = dirs
        .iter()
        .zip(&h)
        .map(|(u, hi)| DVector::from_iterator(d, u.iter().map(|x| x / hi)))
        .collect();
    let n = pts.len();
    let df = d as f64;
    let mut p = vec![1.0 / n as f64; n];
    let mut iterations = 0;
    let kappa_of = |p: &[f64]| -> Result<(DMatrix<f64>, Vec<f64>)> {
        let mut x = DMatrix::zeros(d, d);
        for (pi, a) in p.iter().zip(&pts) {
            if *pi > 0.0 {
                x += a * a.transpose() * *pi;
            }
        }
        let inv = x.clone().try_inverse().ok_or_else(|| Error::NoConvergence("singular moment matrix".into()))?;
        let k = pts.iter().map(|a| (a.transpose() * &inv * a)[(0, 0)]).collect();
        Ok((x, k))
    };
    loop {
        let (x, k) = kappa_of(&p)?;
        let mut j = 0;
        let mut kmin_idx = usize::MAX;
        for i in 0..n {
            if k[i] > k[j] {
                j = i;
            }
            if p[i] > 0.0 && (kmin_idx == usize::MAX || k[i] < k[kmin_idx]) {
                kmin_idx = i;
            }
        }
        let kmax = k[j];
        if df * (kmax / df).ln() < JOHN_LOGDET {
            let m = x * kmax.max(df);
            let ellipsoid = Ellipsoid::new(m.clone())?;
            let inv = m.try_inverse().expect("positive definite");
            let mut inner: f64 = 0.0;
            let mut outer: f64 = 0.0;
            for (u, hi) in dirs.iter().zip(&h) {
                let he = quad_form(&inv, u).sqrt();
                inner = inner.max(he / hi);
                outer = outer.max(hi / he);
            }
            return Ok(JohnEllipsoid { ellipsoid, iterations, inner_ratio: inner, outer_ratio: outer });
        }
        iterations += 1;
        if iterations > JOHN_MAX_ITER {
            return Err(Error::NoConvergence(format!("John ellipsoid after {iterations} iterations")));
        }
        let kk = kmin_idx;
        let kmin = k[kk];
        if kmax - df >= df - kmin {
            let beta = (kmax - df) / (df * (kmax - 1.0));
            p.iter_mut().for_each(|v| *v *= 1.0 - beta);
            p[j] += beta;
        } else {
            let drop = p[kk] / (1.0 - p[kk]);
            let beta = if kmin > 1.0 { ((df - kmin) / (df * (kmin - 1.0))).min(drop) } else { drop };
            p.iter_mut().for_each(|v| *v *= 1.0 + beta);
            if beta == drop {
                p[kk] = 0.0;
            } else {
                p[kk] -= beta;
            }
        }
    }
}

/// `sup_u |h(K_1,u)^alpha - h(K_2,u)^alpha|` over the rule nodes.
pub fn metric_m_alpha(a: &StableModel, b: &StableModel, rule: &SphereRule) -> Result<f64> {
    if a.alpha() != b.alpha() || a.dim() != b.dim() {
        return Err(Error::KindMismatch("models need equal exponent and dimension".into()));
    }
    ensure_symmetric(a, "metric_m_alpha")?;
    ensure_symmetric(b, "metric_m_alpha")?;
    Ok(rule.nodes().map(|u| (a.gauge_pow_raw(u) - b.gauge_pow_raw(u)).abs()).fold(0.0, f64::max))
}

/// Upper bound `(d^{alpha/2} - 1) ||K||^alpha` on the distance to the
/// John-ellipsoid model; `||K||` is taken as the largest gauge on `rule`.
pub fn subgaussian_bound(model: &StableModel, rule: &SphereRule) -> f64 {
    let d = model.dim() as f64;
    let kmax = rule.nodes().map(|u| model.gauge_raw(u)).fold(0.0, f64::max);
    (d.powf(model.alpha() / 2.0) - 1.0) * kmax.powf(model.alpha())
}

/// Default node count for the principal-value functional.
pub const I_FUNCTIONAL_NODES: usize = 4096;

/// Principal value `I(F) = PV int_F du/(u_1 u_2)` in the plane, computed
/// as `-int_{S^1} log||v||_F /(v_1 v_2) dv` on a rule with no node on an
/// axis, so that each axis sits midway between a symmetric node pair.
pub fn i_functional(model: &StableModel, nodes: usize) -> Result<Estimate> {
    if model.dim() != 2 {
        return invalid("I(F) is implemented for d = 2");
    }
    ensure_symmetric(model, "i_functional")?;
    ensure_full_dimensional(model)?;
    let rule = circle_rule_offset(nodes)?;
    let est = integrate_sphere(&rule, |v| -model.gauge_raw(v).ln() / (v[0] * v[1]))?;
    if est.value.abs() > PI * PI * (1.0 + 1e-6) {
        return Err(Error::NoConvergence(format!("|I(F)| = {} exceeds pi^2", est.value)));
    }
    Ok(est)
}

/// Outcome of a Birkhoff orthogonality test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orthogonality {
    pub orthogonal: bool,
    /// `min_c ||x + c y|| - ||x||`.
    pub margin: f64,
    pub argmin: f64,
}

/// Tests `||x + c y|| >= ||x||` for all real `c` (relative tolerance `tol`).
pub fn birkhoff_orthogonal(model: &StableModel, x: &[f64], y: &[f64], tol: f64) -> Result<Orthogonality> {
    ensure_symmetric(model, "birkhoff_orthogonal")?;
    let gx = model.gauge(x)?;
    let gy = model.gauge(y)?;
    if norm(x) == 0.0 || norm(y) == 0.0 {
        return invalid("x and y must be nonzero");
    }
    if !(gy > 0.0) {
        return Err(Error::InfiniteVolume);
    }
    let f = |c: f64| -> f64 {
        let v: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + c * b).collect();
        model.gauge_raw(&v)
    };
    let span = 2.02 * gx / gy;
    let (argmin, min) = scan_minimize(f, -span, span, 400, 1e-12 * span);
    let margin = min - gx;
    Ok(Orthogonality { orthogonal: margin >= -tol * gx, margin, argmin })
}

/// Support function `h(F, x) = max_u <x,u> rho_F(u)` of the star body,
/// i.e. the gauge of `K` when `F` is convex.
struct PolarSupport<'a> {
    model: &'a StableModel,
    candidates: Vec<Vec<f64>>,
}

impl<'a> PolarSupport<'a> {
    fn new(model: &'a StableModel) -> Self {
        let d = model.dim();
        let dirs: Vec<Vec<f64>> = if d == 2 {
            (0..1440).map(|k| {
                let t = 2.0 * PI * k as f64 / 1440.0;
                vec![t.cos(), t.sin()]
            }).collect()
        } else {
            fibonacci_pairs(2000).into_iter().map(|u| u.to_vec()).collect()
        };
        let candidates = dirs
            .into_iter()
            .map(|u| {
                let r = model.radial(&u);
                u.into_iter().map(|x| x * r).collect()
            })
            .collect();
        PolarSupport { model, candidates }
    }

    fn value(&self, x: &[f64]) -> f64 {
        let (best, _) = self
            .candidates
            .iter()
            .enumerate()
            .map(|(i, y)| (i, dot(x, y)))
            .fold((0, f64::NEG_INFINITY), |acc, v| if v.1 > acc.1 { v } else { acc });
        let y0 = &self.candidates[best];
        let along = |v: &[f64]| dot(x, v) * self.model.radial(v);
        if x.len() == 2 {
            let t0 = y0[1].atan2(y0[0]);
            let h = 2.0 * PI / 1440.0;
            let (_, v) = golden_section(|t| -along(&[t.cos(), t.sin()]), t0 - 1.5 * h, t0 + 1.5 * h, 1e-13);
            (-v).max(dot(x, y0))
        } else {
            let u0: Vec<f64> = { let n = norm(y0); y0.iter().map(|c| c / n).collect() };
            let frame = orthogonal_complement(&u0).expect("nonzero");
            let point = |s: &[f64]| -> Vec<f64> {
                let v: Vec<f64> = (0..3).map(|k| u0[k] + s[0] * frame[(k, 0)] + s[1] * frame[(k, 1)]).collect();
                let n = norm(&v);
                v.into_iter().map(|c| c / n).collect()
            };
            let (_, v) = nelder_mead(|s| -along(&point(s)), &[0.0, 0.0], 0.02, 1e-10, 1e-16, 2000);
            (-v).max(dot(x, y0))
        }
    }
}

/// Volume of the zonoid `K = F^*` for `alpha >= 1` (d = 2 or 3).
pub fn zonoid_volume(model: &StableModel, rule: &SphereRule) -> Result<Estimate> {
    if model.alpha() < 1.0 {
        return invalid("the zonoid is convex only for alpha >= 1");
    }
    if !(2..=3).contains(&model.dim()) || rule.dim() != model.dim() {
        return invalid("zonoid volume is computed for d = 2 or 3 with a matching rule");
    }
    ensure_full_dimensional(model)?;
    let ps = PolarSupport::new(model);
    let d = model.dim() as i32;
    let est = integrate_sphere(rule, |x| ps.value(x).powi(-d))?;
    Ok(est.scale(1.0 / d as f64))
}

/// `(omega_d(2)/c_alpha, omega_d(alpha))`: volume bounds of `F` for
/// isotropic spectral measures (`int s s^T sigma(ds) = I`) and
/// `alpha >= 1`. The upper bound is attained by the cross measure and the
/// lower bound by the uniform measure.
pub fn isotropic_volume_bounds(d: usize, alpha: f64) -> (f64, f64) {
    let df = d as f64;
    let upper = (2.0 * gamma(1.0 + 1.0 / alpha)).powf(df) / gamma(1.0 + df / alpha);
    let lower_base = (2.0 * gamma(1.5)).powf(df) / gamma(1.0 + df / 2.0);
    let c = (gamma(1.0 + df / 2.0) / gamma(1.5) * gamma((1.0 + alpha) / 2.0) / gamma((df + alpha) / 2.0)).powf(df / alpha);
    (lower_base / c, upper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::mat_vec;
    use crate::quadrature::sphere_rule;
    use crate::special::kappa;
    use nalgebra::dmatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn indep(alpha: f64) -> StableModel {
        StableModel::independent(alpha, &[1.0, 1.0]).unwrap()
    }

    fn ellipse(a: f64, b: f64) -> StableModel {
        // F = {x1^2/a^2 + x2^2/b^2 <= 1}: gauge^2 = u1^2/a^2 + u2^2/b^2 = u^T C u / 2.
        StableModel::sub_gaussian(1.5, dmatrix![2.0 / (a * a), 0.0; 0.0, 2.0 / (b * b)]).unwrap()
    }

    fn tilted(deg: f64, a: f64, b: f64) -> DMatrix<f64> {
        let t = deg.to_radians();
        let r = dmatrix![t.cos(), -t.sin(); t.sin(), t.cos()];
        let d = dmatrix![2.0 / (a * a), 0.0; 0.0, 2.0 / (b * b)];
        &r * d * r.transpose()
    }

    fn random_atoms(rng: &mut ChaCha8Rng, d: usize, alpha: f64, n: usize) -> StableModel {
        let atoms = (0..n)
            .map(|_| {
                let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                let r = norm(&v);
                (v.into_iter().map(|x| x / r).collect(), rng.random_range(0.2..2.0))
            })
            .collect();
        StableModel::symmetric_atoms(alpha, atoms).unwrap()
    }

    #[test]
    fn gauge_examples() {
        for a in [0.8, 1.3, 2.0] {
            assert!((gauge(&indep(a), &[1.0, 1.0]).unwrap() - 2f64.powf(1.0 / a)).abs() < 1e-14);
        }
    }

    #[test]
    fn support_point_examples() {
        let a = 1.5;
        let m = indep(a);
        let u = [0.3, -0.7];
        let t = support_point(&m, &u).unwrap();
        let na = (0.3f64.powf(a) + 0.7f64.powf(a)).powf(1.0 / a);
        for k in 0..2 {
            let expect = na.powf(1.0 - a) * crate::special::signed_pow(u[k], a - 1.0);
            assert!((t[k] - expect).abs() < 1e-14);
        }
        let e2 = support_point(&m, &[0.0, 1.0]).unwrap();
        assert!(e2[0].abs() < 1e-15 && (e2[1] - 1.0).abs() < 1e-15);
        // Ellipsoid K with h(K,u) = sqrt(<C^{-1}u,u>): C' = 2 C^{-1}.
        let c = dmatrix![2.0, 0.5; 0.5, 1.0];
        let cinv = c.clone().try_inverse().unwrap();
        let m = StableModel::sub_gaussian(1.7, &cinv * 2.0).unwrap();
        let u = [0.4, 0.9];
        let ciu = mat_vec(&cinv, &u);
        let s = dot(&ciu, &u).sqrt();
        let t = support_point(&m, &u).unwrap();
        assert!((t[0] - ciu[0] / s).abs() < 1e-14 && (t[1] - ciu[1] / s).abs() < 1e-14);
        assert!(support_point(&indep(1.0), &u).is_err());
    }

    #[test]
    fn volume_examples() {
        let r = circle_rule(512).unwrap();
        let iso = StableModel::isotropic_scaled(2, 1.0, 1.0).unwrap();
        assert!((volume(&iso, &r).unwrap().value - PI).abs() < 1e-12);
        let l1 = indep(1.0);
        // The cross-polytope has kinks; the offset rule keeps nodes off them.
        let v = volume(&l1, &circle_rule(4096).unwrap()).unwrap();
        assert!((v.value - 2.0).abs() < 1e-5, "{}", v.value);
        let e = ellipse(1.0, 3.0);
        assert!((volume(&e, &r).unwrap().value - 3.0 * PI).abs() < 1e-9);
        let single = StableModel::symmetric_atoms(1.0, vec![(vec![1.0, 0.0], 1.0)]).unwrap();
        assert_eq!(volume(&single, &r).unwrap_err(), Error::InfiniteVolume);
    }

    #[test]
    fn volume_in_three_dimensions() {
        let r = sphere_rule(3, 64, None).unwrap();
        let c = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.5, 2.0 / 9.0]));
        let m = StableModel::sub_gaussian(1.2, c).unwrap();
        // Semi-axes 1, 2, 3.
        let v = volume(&m, &r).unwrap();
        assert!((v.value - 4.0 * PI * 2.0).abs() < 1e-9, "{v:?}");
    }

    #[test]
    fn section_volume_examples() {
        let lv = QuadLevels::default();
        let disk = StableModel::isotropic_scaled(2, 1.0, 1.0).unwrap();
        assert!((section_volume(&disk, &[0.3, 0.4], &lv).unwrap().value - 2.0).abs() < 1e-13);
        assert!((section_volume(&indep(1.0), &[1.0, 0.0], &lv).unwrap().value - 2.0).abs() < 1e-14);
        assert!((section_volume(&ellipse(1.0, 2.0), &[1.0, 0.0], &lv).unwrap().value - 4.0).abs() < 1e-14);
        let ball = StableModel::isotropic_scaled(3, 1.5, 1.0).unwrap();
        assert!((section_volume(&ball, &[0.0, 0.6, 0.8], &lv).unwrap().value - PI).abs() < 1e-12);
    }

    #[test]
    fn star_sum_examples() {
        let a = StableModel::symmetric_atoms(1.3, vec![(vec![1.0, 0.0], 1.0)]).unwrap();
        let b = StableModel::symmetric_atoms(1.3, vec![(vec![0.0, 1.0], 1.0)]).unwrap();
        let s = star_sum(&a, &b).unwrap();
        let i = indep(1.3);
        let iso = StableModel::isotropic_scaled(2, 1.3, 0.7).unwrap();
        let s2 = star_sum(&i, &iso).unwrap();
        let s3 = star_sum(&i, &i).unwrap();
        for k in 0..16 {
            let t = k as f64 * 0.4;
            let u = [t.cos(), t.sin()];
            assert!((s.gauge_raw(&u) - i.gauge_raw(&u)).abs() < 1e-14);
            let lhs = s2.gauge_pow_raw(&u);
            assert!((lhs - i.gauge_pow_raw(&u) - iso.gauge_pow_raw(&u)).abs() < 1e-12);
            assert!((s3.gauge_raw(&u) - 2f64.powf(1.0 / 1.3) * i.gauge_raw(&u)).abs() < 1e-12);
        }
        assert!(star_sum(&indep(1.3), &indep(1.2)).is_err());
    }

    #[test]
    fn substable_keeps_gauge() {
        let g = StableModel::sub_gaussian(2.0, dmatrix![2.0, 1.0; 1.0, 3.0]).unwrap();
        let s = substable_transform(&g, 0.5).unwrap();
        assert_eq!(s.alpha(), 1.0);
        for k in 0..16 {
            let t = k as f64 * 0.4;
            let u = [t.cos(), 2.0 * t.sin()];
            assert!((s.gauge_raw(&u) - g.gauge_raw(&u)).abs() < 1e-14);
        }
        assert!(substable_transform(&g, 1.0).is_err());
    }

    #[test]
    fn projection_examples() {
        let a = 1.4;
        let m = indep(a);
        let b = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let p = project_model(&m, &b).unwrap();
        assert_eq!(p.dim(), 1);
        assert!((p.gauge(&[1.0]).unwrap() - 1.0).abs() < 1e-15);
        let s = 0.5f64.sqrt();
        let b = DMatrix::from_column_slice(2, 1, &[s, s]);
        let p = project_model(&m, &b).unwrap();
        assert!((p.gauge(&[1.0]).unwrap() - 2f64.powf(1.0 / a - 0.5)).abs() < 1e-14);
        let m3 = StableModel::symmetric_atoms(1.2, vec![(vec![1.0, 0.0, 0.0], 1.0), (vec![0.0, 0.6, 0.8], 2.0), (vec![0.0, 0.0, 1.0], 1.0), (vec![0.0, 1.0, 0.0], 0.5)]).unwrap();
        let basis = orthogonal_complement(&[1.0, 1.0, 1.0]).unwrap();
        let p = project_model(&m3, &basis).unwrap();
        for k in 0..16 {
            let t = k as f64 * 0.4;
            let v = [t.cos(), t.sin()];
            let full = mat_vec(&basis, &v);
            assert!((p.gauge_raw(&v) - m3.gauge_raw(&full)).abs() < 1e-12);
        }
        let bad = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        assert!(project_model(&m, &bad).is_err());
    }

    #[test]
    fn john_ellipsoid_of_an_ellipsoid_is_itself() {
        let c = tilted(30.0, 1.0, 3.0);
        let m = StableModel::sub_gaussian(1.5, c.clone()).unwrap();
        let j = john_ellipsoid(&m).unwrap();
        // Zonoid of the model: h(K,u)^2 = u^T C u / 2, so M = 2 C^{-1}.
        let expect = c.try_inverse().unwrap() * 2.0;
        assert!((&j.ellipsoid.matrix - &expect).norm() < 1e-6 * expect.norm());
        assert!(j.certified(1e-6));
    }

    #[test]
    fn john_ellipsoid_of_cross_polytope() {
        let s = 0.5f64.sqrt();
        let m = StableModel::symmetric_atoms(1.0, vec![(vec![s, s], s), (vec![s, -s], s)]).unwrap();
        let j = john_ellipsoid(&m).unwrap();
        let expect = DMatrix::identity(2, 2) * 2.0;
        assert!((&j.ellipsoid.matrix - &expect).norm() < 1e-6, "{}", j.ellipsoid.matrix);
        assert!(j.certified(1e-6));
    }

    #[test]
    fn john_ellipsoid_in_three_dimensions() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_atoms(&mut rng, 3, 1.5, 6);
        let j = john_ellipsoid(&m).unwrap();
        assert!(j.certified(1e-6), "{} {}", j.inner_ratio, j.outer_ratio);
        let r = sphere_rule(3, 16, None).unwrap();
        let e = j.ellipsoid.to_model(1.5).unwrap();
        assert!(metric_m_alpha(&m, &e, &r).unwrap() <= subgaussian_bound(&m, &r) * (1.0 + 1e-6));
    }

    #[test]
    fn metric_examples() {
        let r = circle_rule(64).unwrap();
        let m = indep(1.5);
        assert_eq!(metric_m_alpha(&m, &m, &r).unwrap(), 0.0);
        let d1 = StableModel::isotropic_scaled(2, 1.0, 1.0).unwrap();
        let d2 = StableModel::isotropic_scaled(2, 1.0, 2.5).unwrap();
        assert!((metric_m_alpha(&d1, &d2, &r).unwrap() - 1.5).abs() < 1e-12);
        assert!(metric_m_alpha(&m, &d1, &r).is_err());
    }

    #[test]
    fn i_functional_examples() {
        let z = i_functional(&indep(1.3), I_FUNCTIONAL_NODES).unwrap();
        assert!(z.value.abs() < 1e-12);
        let c = tilted(30.0, 1.0, 3.0);
        let m = StableModel::sub_gaussian(1.0, c.clone()).unwrap();
        let i = i_functional(&m, I_FUNCTIONAL_NODES).unwrap();
        // Gaussian sign correlation: E sign = (2/pi) asin(rho) = -I/pi^2.
        let rho = c[(0, 1)] / (c[(0, 0)] * c[(1, 1)]).sqrt();
        assert!((-i.value / (PI * PI) - 2.0 / PI * rho.asin()).abs() < 1e-10);
        let a = dmatrix![2.0, 0.0; 0.0, 1.0 / 3.0];
        let af = m.linear_image(&a.try_inverse().unwrap()).unwrap();
        let ia = i_functional(&af, I_FUNCTIONAL_NODES).unwrap();
        assert!((ia.value - i.value).abs() < 1e-8);
    }

    #[test]
    fn birkhoff_examples() {
        // Conjugate directions for the quadratic form of C.
        let c = dmatrix![2.0, 1.0; 1.0, 2.0];
        let m = StableModel::sub_gaussian(1.5, c).unwrap();
        let x = [1.0, 0.0];
        let y = [-1.0, 2.0]; // x^T C y = 0
        assert!(birkhoff_orthogonal(&m, &x, &y, 1e-7).unwrap().orthogonal);
        let r = birkhoff_orthogonal(&m, &x, &x, 1e-7).unwrap();
        assert!(!r.orthogonal);
        let r = birkhoff_orthogonal(&indep(1.5), &[0.0, 1.0], &[1.0, 0.0], 1e-7).unwrap();
        assert!(r.orthogonal);
        assert_eq!(r.margin, 0.0);
        assert_eq!(r.argmin, 0.0);
    }

    #[test]
    fn blaschke_santalo_equality_for_ellipses() {
        let m = StableModel::sub_gaussian(1.5, tilted(20.0, 1.0, 2.0)).unwrap();
        let r = circle_rule(512).unwrap();
        let p = volume(&m, &r).unwrap().value * zonoid_volume(&m, &r).unwrap().value;
        assert!((p / (PI * PI) - 1.0).abs() < 1e-6, "{p}");
        let r3 = sphere_rule(3, 24, None).unwrap();
        let c = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.5, 1.0]));
        let m3 = StableModel::sub_gaussian(1.2, c).unwrap();
        let p = volume(&m3, &r3).unwrap().value * zonoid_volume(&m3, &r3).unwrap().value;
        assert!((p / kappa(3).powi(2) - 1.0).abs() < 1e-6, "{p}");
    }

    #[test]
    fn isotropic_bounds_are_attained() {
        let r = circle_rule(4096).unwrap();
        for a in [1.0, 1.3, 1.7] {
            let (lo, hi) = isotropic_volume_bounds(2, a);
            let cross = indep(a);
            let uniform = StableModel::isotropic(2, a, 2.0).unwrap();
            let vc = volume(&cross, &r).unwrap().value;
            let vu = volume(&uniform, &r).unwrap().value;
            assert!((vc - hi).abs() < 1e-4 * hi, "{vc} {hi}");
            assert!((vu - lo).abs() < 1e-10 * lo, "{vu} {lo}");
        }
    }

    #[test]
    fn isotropic_mixtures_respect_bounds() {
        let r = circle_rule(2048).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let a = rng.random_range(1.0..2.0);
            // Mixture of rotated cross measures is isotropic.
            let mut atoms = Vec::new();
            let k = rng.random_range(1..4);
            for _ in 0..k {
                let t: f64 = rng.random_range(0.0..PI);
                atoms.push((vec![t.cos(), t.sin()], 1.0 / k as f64));
                atoms.push((vec![-t.sin(), t.cos()], 1.0 / k as f64));
            }
            let m = StableModel::symmetric_atoms(a, atoms).unwrap();
            let (lo, hi) = isotropic_volume_bounds(2, a);
            let v = volume(&m, &r).unwrap().value;
            assert!(v >= lo * (1.0 - 1e-6) && v <= hi * (1.0 + 1e-4), "{lo} {v} {hi}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn gauge_is_homogeneous(c in 0.01f64..100.0, t in 0.0f64..6.3, a in 0.5f64..2.0) {
            let m = StableModel::symmetric_atoms(a, vec![(vec![1.0, 0.0], 1.0), (vec![0.6, 0.8], 0.7)]).unwrap();
            let u = [t.cos(), t.sin()];
            let cu = [c * u[0], c * u[1]];
            prop_assert!((m.gauge_raw(&cu) - c * m.gauge_raw(&u)).abs() <= 1e-12 * c * m.gauge_raw(&u));
        }

        #[test]
        fn gauge_is_convex_for_alpha_at_least_one(a in 1.0f64..2.0, s in 0.0f64..6.3, t in 0.0f64..6.3, r in 0.1f64..3.0) {
            let m = StableModel::symmetric_atoms(a, vec![(vec![1.0, 0.0, 0.0], 1.0), (vec![0.6, 0.8, 0.0], 0.7), (vec![0.0, 0.6, 0.8], 1.3)]).unwrap();
            let u = [s.cos(), s.sin(), 0.3];
            let v = [r * t.cos(), 0.5, r * t.sin()];
            let w = [u[0] + v[0], u[1] + v[1], u[2] + v[2]];
            prop_assert!(m.gauge_raw(&w) <= m.gauge_raw(&u) + m.gauge_raw(&v) + 1e-12);
        }

        #[test]
        fn support_point_matches_finite_differences(t in 0.0f64..6.3, p in -1.0f64..1.0, a in 1.2f64..2.0) {
            let m = StableModel::symmetric_atoms(a, vec![(vec![1.0, 0.0, 0.0], 1.0), (vec![0.6, 0.8, 0.0], 0.7), (vec![0.0, 0.6, 0.8], 1.3)]).unwrap();
            let u = [t.cos(), t.sin(), p];
            prop_assume!(u[0].abs() > 1e-2 && (0.6 * u[0] + 0.8 * u[1]).abs() > 1e-2 && (0.6 * u[1] + 0.8 * u[2]).abs() > 1e-2);
            let g = support_point(&m, &u).unwrap();
            prop_assert!((dot(&g, &u) - m.gauge_raw(&u)).abs() < 1e-10);
            let h = 1e-6;
            for k in 0..3 {
                let mut x = u; x[k] += h;
                let mut y = u; y[k] -= h;
                let fd = (m.gauge_raw(&x) - m.gauge_raw(&y)) / (2.0 * h);
                prop_assert!((fd - g[k]).abs() < 1e-6);
            }
        }

        #[test]
        fn metric_triangle_inequality(s1 in 0.2f64..3.0, s2 in 0.2f64..3.0, w in 0.1f64..2.0) {
            let r = circle_rule(64).unwrap();
            let a = StableModel::isotropic_scaled(2, 1.5, s1).unwrap();
            let b = StableModel::independent(1.5, &[s2, 1.0]).unwrap();
            let c = StableModel::symmetric_atoms(1.5, vec![(vec![0.6, 0.8], w), (vec![0.0, 1.0], 1.0)]).unwrap();
            let ab = metric_m_alpha(&a, &b, &r).unwrap();
            let bc = metric_m_alpha(&b, &c, &r).unwrap();
            let ac = metric_m_alpha(&a, &c, &r).unwrap();
            prop_assert!(ac <= ab + bc + 1e-12);
        }
    }
}

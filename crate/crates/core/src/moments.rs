//! Densities, density functionals, and moments of symmetric stable vectors.
//!
//! Every closed form here is the formula side of a formula-versus-simulation
//! check. Directional integrals run on a [`SphereRule`]; for `d = 1` the
//! "sphere" is the pair `{-1, +1}` with unit weights.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::geometry::{self, ensure_full_dimensional, ensure_symmetric};
use crate::kernel::kernel_table;
use crate::linalg::{dot, norm};
use crate::quadrature::{
    arc_rule, integrate_adaptive, integrate_radial, integrate_sphere, integrate_tanh_sinh, pairwise_sum,
    radial_rule, Estimate, QuadLevels, SphereRule, TailClass,
};
use crate::special::{gamma, kappa, si_ci};
use crate::spectral::{SpectralMeasure, StableModel};
use crate::tolerances::MOMENT_ENDPOINT;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// A formula value with its numerical error estimate and a short tag naming
/// the identity that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub value: f64,
    pub error: f64,
    pub tag: String,
}

impl MomentReport {
    fn new(est: Estimate, tag: &str) -> Result<Self> {
        if !est.value.is_finite() || !est.error.is_finite() {
            return Err(Error::NoConvergence(format!("{tag}: nonfinite result")));
        }
        Ok(MomentReport { value: est.value, error: est.error.abs(), tag: tag.to_string() })
    }
}

fn check_order(order: f64, lo: f64, hi: f64) -> Result<()> {
    if !order.is_finite() || order <= lo + MOMENT_ENDPOINT || order >= hi - MOMENT_ENDPOINT {
        return Err(Error::MomentNotFinite { order, lo, hi });
    }
    Ok(())
}

fn check_dim(model: &StableModel, v: &[f64]) -> Result<()> {
    if v.len() != model.dim() {
        return invalid(format!("expected a {}-vector, got length {}", model.dim(), v.len()));
    }
    Ok(())
}

fn symmetric_full(model: &StableModel, what: &str) -> Result<()> {
    ensure_symmetric(model, what)?;
    ensure_full_dimensional(model)
}

/// `Gamma(1 - l/alpha) / Gamma(1 - l/2)`, exactly one at `alpha = 2`.
fn stable_gamma_ratio(l: f64, alpha: f64) -> f64 {
    if alpha == 2.0 {
        1.0
    } else {
        gamma(1.0 - l / alpha) / gamma(1.0 - l / 2.0)
    }
}

/// Integral over the unit sphere; `d = 1` sums over `u = -1, +1`.
fn sphere_integral(model: &StableModel, rule: &SphereRule, f: impl Fn(&[f64]) -> f64) -> Result<Estimate> {
    if model.dim() == 1 {
        let v = f(&[1.0]) + f(&[-1.0]);
        if !v.is_finite() {
            return Err(Error::NonFinite(0));
        }
        return Ok(Estimate::exact(v));
    }
    if rule.dim() != model.dim() {
        return invalid("rule and model dimensions differ");
    }
    integrate_sphere(rule, f)
}

fn body_volume(model: &StableModel, rule: &SphereRule) -> Result<Estimate> {
    if model.dim() == 1 {
        let r = model.radial(&[1.0]);
        if !r.is_finite() {
            return Err(Error::InfiniteVolume);
        }
        return Ok(Estimate::exact(2.0 * r));
    }
    geometry::volume(model, rule)
}

/// Characteristic function `exp(-||u||_F^alpha)`.
pub fn charfun(model: &StableModel, u: &[f64]) -> Result<f64> {
    if !model.is_symmetric() {
        return Err(Error::KindMismatch("charfun needs a symmetric model; use the one-sided Laplace transform".into()));
    }
    Ok((-model.gauge_pow(u)?).exp())
}

/// Density `f(x) = (2 pi)^{-d} int_S ||u||^{-d} phi(<u,x>/||u||) du` where
/// `phi` is the radial cosine kernel. The sine part cancels exactly on
/// antithetic rules. Supported for `d <= 3`.
pub fn density(model: &StableModel, x: &[f64], rule: &SphereRule) -> Result<Estimate> {
    symmetric_full(model, "density")?;
    check_dim(model, x)?;
    let d = model.dim();
    if d > 3 {
        return Err(Error::Unsupported(format!("densities are implemented for d <= 3, got {d}")));
    }
    let table = kernel_table(model.alpha(), d)?;
    let est = sphere_integral(model, rule, |u| {
        let g = model.gauge_raw(u);
        g.powi(-(d as i32)) * table.eval(dot(u, x) / g)
    })?;
    let c = (2.0 * PI).powi(-(d as i32));
    let kernel_err = c * table.error * sphere_integral(model, rule, |u| model.gauge_raw(u).powi(-(d as i32)))?.value;
    let out = est.scale(c);
    Ok(Estimate::new(out.value, out.error + kernel_err))
}

/// `f(0) = (2 pi)^{-d} Gamma(1 + d/alpha) |F|`.
pub fn density_at_zero(model: &StableModel, rule: &SphereRule) -> Result<MomentReport> {
    symmetric_full(model, "density_at_zero")?;
    let d = model.dim() as f64;
    let vol = body_volume(model, rule)?;
    MomentReport::new(vol.scale((2.0 * PI).powf(-d) * gamma(1.0 + d / model.alpha())), "density-at-zero")
}

/// Second-moment matrix `int_F v v^T dv = (d+2)^{-1} int_S u u^T rho^{d+2} du`.
pub fn body_second_moments(model: &StableModel, rule: &SphereRule) -> Result<DMatrix<f64>> {
    ensure_full_dimensional(model)?;
    let d = model.dim();
    let mut m = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let est = sphere_integral(model, rule, |u| u[i] * u[j] * model.radial(u).powi(d as i32 + 2))
                .map_err(|_| Error::InfiniteVolume)?;
            let v = est.value / (d as f64 + 2.0);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// Hessian of the density at the origin:
/// `-(2 pi)^{-d} Gamma(1 + (d+2)/alpha) int_F v v^T dv`.
pub fn density_hessian_at_zero(model: &StableModel, rule: &SphereRule) -> Result<DMatrix<f64>> {
    ensure_symmetric(model, "density_hessian_at_zero")?;
    let d = model.dim() as f64;
    let b = body_second_moments(model, rule)?;
    Ok(b * (-(2.0 * PI).powf(-d) * gamma(1.0 + (d + 2.0) / model.alpha())))
}

/// Lower bound on `int_F sum w_i^2 x_i^2 dx` over bodies of volume `|F|`:
/// `d/(d+2) |F|^{1+2/d} (w_1...w_d)^{2/d} kappa_d^{-2/d}`.
pub fn weighted_inertia_lower_bound(volume: f64, weights: &[f64]) -> f64 {
    let d = weights.len() as f64;
    let prod: f64 = weights.iter().map(|w| w.abs()).product();
    d / (d + 2.0) * volume.powf(1.0 + 2.0 / d) * prod.powf(2.0 / d) * kappa(weights.len()).powf(-2.0 / d)
}

/// `E ||xi||^lambda` for `lambda in (-d, alpha)`:
/// `2^{l-1} pi^{-d/2} Gamma((d+l)/2) Gamma(1-l/alpha)/Gamma(1-l/2) int_S ||u||_F^l du`.
/// Gaussian models admit every `lambda > -d`.
pub fn norm_moment(model: &StableModel, lambda: f64, rule: &SphereRule) -> Result<MomentReport> {
    symmetric_full(model, "norm_moment")?;
    let (d, alpha) = (model.dim() as f64, model.alpha());
    let hi = if alpha == 2.0 { f64::INFINITY } else { alpha };
    check_order(lambda, -d, hi)?;
    if lambda == 0.0 {
        return MomentReport::new(Estimate::exact(1.0), "norm-moment");
    }
    let integral = sphere_integral(model, rule, |u| model.gauge_raw(u).powf(lambda))?;
    let c = 2f64.powf(lambda - 1.0) * PI.powf(-d / 2.0) * gamma((d + lambda) / 2.0) * stable_gamma_ratio(lambda, alpha);
    MomentReport::new(integral.scale(c), "norm-moment")
}

/// Lower bound on `E ||xi||^lambda`, `lambda in (0, alpha)`, in terms of the
/// volume of `F`; equality holds for Euclidean balls.
pub fn norm_moment_lower_bound(model: &StableModel, lambda: f64, rule: &SphereRule) -> Result<f64> {
    symmetric_full(model, "norm_moment_lower_bound")?;
    let (dim, alpha) = (model.dim(), model.alpha());
    let d = dim as f64;
    let hi = if alpha == 2.0 { f64::INFINITY } else { alpha };
    check_order(lambda, 0.0, hi)?;
    let vol = body_volume(model, rule)?.value;
    Ok(2f64.powf(lambda) * gamma((d + lambda) / 2.0) / gamma(d / 2.0)
        * stable_gamma_ratio(lambda, alpha)
        * (kappa(dim) / vol).powf(lambda / d))
}

/// `lim_{l -> alpha} E||xi||^l / Gamma(1 - l/alpha)
///  = 2^{alpha-1} pi^{-d/2} Gamma((d+alpha)/2) / Gamma(1-alpha/2) int_S ||u||_F^alpha du`,
/// which depends on the spectral measure only through its total mass.
pub fn moment_limit_ratio(model: &StableModel, rule: &SphereRule) -> Result<MomentReport> {
    symmetric_full(model, "moment_limit_ratio")?;
    let (d, alpha) = (model.dim() as f64, model.alpha());
    if alpha >= 2.0 {
        return invalid("the moment limit needs alpha < 2");
    }
    let integral = match model.measure() {
        Some(m) => Estimate::exact(m.total_mass() * crate::special::sphere_abs_moment(model.dim(), alpha)),
        None => sphere_integral(model, rule, |u| model.gauge_pow_raw(u))?,
    };
    let c = 2f64.powf(alpha - 1.0) * PI.powf(-d / 2.0) * gamma((d + alpha) / 2.0) / gamma(1.0 - alpha / 2.0);
    MomentReport::new(integral.scale(c), "moment-limit")
}

/// `E |<xi,u>|^lambda = 2^l Gamma((l+1)/2) pi^{-1/2} Gamma(1-l/alpha)/Gamma(1-l/2) ||u||_F^l`
/// for `lambda in (-1, alpha)`.
pub fn scalar_moment(model: &StableModel, u: &[f64], lambda: f64) -> Result<MomentReport> {
    ensure_symmetric(model, "scalar_moment")?;
    check_dim(model, u)?;
    let alpha = model.alpha();
    let hi = if alpha == 2.0 { f64::INFINITY } else { alpha };
    check_order(lambda, -1.0, hi)?;
    if lambda == 0.0 {
        return MomentReport::new(Estimate::exact(1.0), "scalar-moment");
    }
    let g = model.gauge_raw(u);
    if g == 0.0 {
        if lambda > 0.0 {
            return MomentReport::new(Estimate::exact(0.0), "scalar-moment");
        }
        return Err(Error::MomentNotFinite { order: lambda, lo: 0.0, hi });
    }
    let v = 2f64.powf(lambda) * gamma((lambda + 1.0) / 2.0) / PI.sqrt() * stable_gamma_ratio(lambda, alpha)
        * g.powf(lambda);
    MomentReport::new(Estimate::exact(v), "scalar-moment")
}

fn ensure_plane(model: &StableModel, what: &str) -> Result<()> {
    if model.dim() != 2 {
        return invalid(format!("{what} is implemented for d = 2"));
    }
    symmetric_full(model, what)
}

/// Pairs `(theta, pi/2 - theta)` in `(0, pi/2)` where a quadrant gauge
/// restricted to the arc `(+-cos, sin)` has a kink.
fn kink_angles(model: &StableModel) -> Vec<(f64, f64)> {
    match model.measure() {
        Some(SpectralMeasure::Atoms(atoms)) => atoms
            .iter()
            .filter(|a| a.direction[0] != 0.0 && a.direction[1] != 0.0)
            .map(|a| {
                let (x, y) = (a.direction[0].abs(), a.direction[1].abs());
                (x.atan2(y), y.atan2(x))
            })
            .collect(),
        _ => Vec::new(),
    }
}

/// Local power-law tail `int_0^delta w`, fitted from `w` at `delta, 2 delta, 4 delta`.
fn power_tail(w: impl Fn(f64) -> f64, delta: f64) -> Result<Estimate> {
    let (w1, w2, w4) = (w(delta), w(2.0 * delta), w(4.0 * delta));
    if w1 == 0.0 {
        return Ok(Estimate::exact(0.0));
    }
    if w1.signum() != w2.signum() || w2.signum() != w4.signum() {
        return Ok(Estimate::new(w1 * delta, w1 * delta));
    }
    let q1 = (w2 / w1).log2();
    let q2 = (w4 / w2).log2();
    if q1 <= -1.0 + 1e-6 {
        return Err(Error::NoConvergence("angular integrand is not integrable at the axis".into()));
    }
    let t1 = w1 * delta / (q1 + 1.0);
    let t2 = w1 * delta / (q2.max(-1.0 + 1e-6) + 1.0);
    Ok(Estimate::new(t1, (t1 - t2).abs()))
}

/// Smallest cut `delta` next to an axis at which the integrand still stands
/// well above its rounding noise.
fn axis_cut(w: &impl Fn(f64) -> (f64, f64)) -> f64 {
    let mut best = 1e-2;
    for k in 4..=20 {
        let delta = 10f64.powf(-(k as f64) / 2.0);
        let (v, mag) = w(delta);
        if v.abs() < 1e7 * f64::EPSILON * mag || !v.is_finite() {
            break;
        }
        best = delta;
    }
    best
}

/// `int_0^{pi/2} w(c, s) dt` with `c = cos t`, `s = sin t`, for integrands
/// with power-law behaviour at both ends. The integrand returns its value
/// and the magnitude of the terms that cancel in it. The arc is split at
/// `pi/4` (half 0 is next to `e_1`, half 1 next to `e_2`) so that the small
/// coordinate is always computed as a sine; the pieces next to the axes come
/// from a fitted power law and the rest from tanh–sinh panels split at the
/// given kinks.
fn quarter_arc_integral(w: impl Fn(usize, f64, f64) -> (f64, f64), kinks: &[(f64, f64)]) -> Result<Estimate> {
    let mut total = Estimate::exact(0.0);
    for half in 0..2 {
        let eval_full = |t: f64| if half == 0 { w(0, t.cos(), t.sin()) } else { w(1, t.sin(), t.cos()) };
        let eval = |t: f64| eval_full(t).0;
        let delta = axis_cut(&eval_full);
        let mut breaks = vec![delta, PI / 4.0];
        for &(a, b) in kinks {
            let t = if half == 0 { a } else { b };
            if t > 2.0 * delta && t < PI / 4.0 - 1e-12 {
                breaks.push(t);
            }
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        let mut fine = Vec::new();
        let mut coarse = Vec::new();
        for p in breaks.windows(2) {
            fine.push(integrate_tanh_sinh(|t, _, _| eval(t), p[0], p[1], 64, 0.0));
            coarse.push(integrate_tanh_sinh(|t, _, _| eval(t), p[0], p[1], 32, 0.0));
        }
        let (vf, vc) = (pairwise_sum(&fine), pairwise_sum(&coarse));
        if !vf.is_finite() {
            return Err(Error::NoConvergence("nonfinite angular integrand".into()));
        }
        let tail = power_tail(eval, delta)?;
        total = Estimate::new(total.value + vf + tail.value, total.error + (vf - vc).abs() + tail.error);
    }
    Ok(total)
}

/// `|x|^l = C_l int (1 - cos(t x)) |t|^{-1-l} dt` with `C_l = Gamma(1+l) sin(pi l/2)/pi`.
fn abs_power_constant(l: f64) -> f64 {
    gamma(1.0 + l) * (PI * l / 2.0).sin() / PI
}

/// `int_0^inf sin(t) t^{-1-l} dt = Gamma(1-l) sin(pi l/2)/l`, `pi/2` at `l = 0`.
fn sine_power_constant(l: f64) -> f64 {
    if l == 0.0 {
        PI / 2.0
    } else {
        gamma(1.0 - l) * (PI * l / 2.0).sin() / l
    }
}

/// `E |xi_1|^{l1} |xi_2|^{l2}` for `l1, l2 > 0`, `l1 + l2 < alpha`.
///
/// Writing each absolute power as a `1 - cos` integral and integrating the
/// radial part in closed form gives
/// `C_{l1} C_{l2} Gamma(1 - l/alpha) int_{S^1} |v_1|^{-1-l1} |v_2|^{-1-l2} R(v) dv`
/// with `R(v) = (||v_1 e_1||^l + ||v_2 e_2||^l - ||v||^l)/l`. Near each axis
/// the leading power of the integrand is integrated in closed form.
pub fn mixed_abs_moment_2d(model: &StableModel, l1: f64, l2: f64) -> Result<MomentReport> {
    ensure_plane(model, "mixed_abs_moment_2d")?;
    let alpha = model.alpha();
    if !(l1 > 0.0 && l2 > 0.0) {
        return invalid("mixed absolute moments need positive exponents");
    }
    let l = l1 + l2;
    check_order(l, 0.0, alpha)?;
    let g1 = model.gauge_raw(&[1.0, 0.0]).powf(l);
    let g2 = model.gauge_raw(&[0.0, 1.0]).powf(l);
    // R(c, s) + R(-c, s) without the axis term of the current half, which
    // contributes (2/l) g2 / l1 next to e_1 and (2/l) g1 / l2 next to e_2.
    let w = |half: usize, c: f64, s: f64| {
        let base = c.powf(-1.0 - l1) * s.powf(-1.0 - l2) / l;
        let kept = if half == 0 { 2.0 * c.powf(l) * g1 } else { 2.0 * s.powf(l) * g2 };
        let (p, m) = (model.gauge_raw(&[c, s]).powf(l), model.gauge_raw(&[-c, s]).powf(l));
        (base * (kept - p - m), base * (kept + p + m))
    };
    let arc = quarter_arc_integral(w, &kink_angles(model))?;
    let lead = 2.0 / l * (g2 / l1 + g1 / l2);
    let arc = Estimate::new(arc.value + lead, arc.error);
    let c = abs_power_constant(l1) * abs_power_constant(l2) * gamma(1.0 - l / alpha) * 2.0;
    MomentReport::new(arc.scale(c), "mixed-abs-moment")
}

/// `E xi_1^<l1> xi_2^<l2>` (signed powers) for `l1, l2 in [0, 1)`,
/// `l1 + l2 < alpha`. The principal-value integral reduces to
/// `Gamma(1 - l/alpha) / (2 l S_{l1} S_{l2}) int_0^{pi/2} c^{-1-l1} s^{-1-l2}
/// (||(c,s)||^l - ||(-c,s)||^l) dt`, and to the sign moment at `l = 0`.
pub fn signed_mixed_moment_2d(model: &StableModel, l1: f64, l2: f64) -> Result<MomentReport> {
    ensure_plane(model, "signed_mixed_moment_2d")?;
    for li in [l1, l2] {
        if !(li >= 0.0) {
            return invalid("signed moments need nonnegative exponents");
        }
        if (li - 1.0).abs() <= MOMENT_ENDPOINT {
            return Err(Error::Unsupported("signed moments with an exponent equal to one".into()));
        }
        if li > 1.0 {
            return Err(Error::Unsupported("signed moments are implemented for exponents below one".into()));
        }
    }
    let l = l1 + l2;
    if l == 0.0 {
        return sign_moment_2d(model);
    }
    check_order(l, 0.0, model.alpha())?;
    let w = |_: usize, c: f64, s: f64| {
        let base = c.powf(-1.0 - l1) * s.powf(-1.0 - l2);
        let (p, m) = (model.gauge_raw(&[c, s]).powf(l), model.gauge_raw(&[-c, s]).powf(l));
        (base * (p - m), base * (p + m))
    };
    let arc = quarter_arc_integral(w, &kink_angles(model))?;
    let c = gamma(1.0 - l / model.alpha()) / (2.0 * l * sine_power_constant(l1) * sine_power_constant(l2));
    MomentReport::new(arc.scale(c), "signed-mixed-moment")
}

/// `E sign(xi_1 xi_2) = -I(F)/pi^2`; the value does not depend on `alpha`
/// once `F` is fixed.
pub fn sign_moment_2d(model: &StableModel) -> Result<MomentReport> {
    ensure_plane(model, "sign_moment_2d")?;
    let i = geometry::i_functional(model, geometry::I_FUNCTIONAL_NODES)?;
    let est = i.scale(-1.0 / (PI * PI));
    if est.value.abs() > 1.0 + 1e-9 {
        return Err(Error::NoConvergence(format!("sign moment {} outside [-1, 1]", est.value)));
    }
    MomentReport::new(est, "sign-moment")
}

/// `P(xi in A R^2_+) = 1/4 - I(F_A)/(4 pi^2)`, where `F_A` is the star body
/// of `A^{-1} xi`.
pub fn orthant_probability_2d(model: &StableModel, a: &DMatrix<f64>) -> Result<MomentReport> {
    ensure_plane(model, "orthant_probability_2d")?;
    if a.shape() != (2, 2) {
        return invalid("orthant map must be 2 x 2");
    }
    let det = a.determinant();
    if !(det.abs() > 1e-12 * a.amax().powi(2)) {
        return invalid("orthant map is singular");
    }
    let inv_t = a.clone().try_inverse().ok_or_else(|| Error::InvalidArgument("orthant map is singular".into()))?.transpose();
    let image = model.linear_image(&inv_t)?;
    let i = geometry::i_functional(&image, geometry::I_FUNCTIONAL_NODES)?;
    let est = i.scale(-1.0 / (4.0 * PI * PI));
    let est = Estimate::new(0.25 + est.value, est.error);
    if !(-1e-9..=1.0 + 1e-9).contains(&est.value) {
        return Err(Error::NoConvergence(format!("orthant probability {} outside [0, 1]", est.value)));
    }
    MomentReport::new(est, "orthant-probability")
}

/// `int_R f(t u) dt = (2 pi)^{-(d-1)} Gamma(1 + (d-1)/alpha) Vol_{d-1}(F cap u^perp)`.
pub fn marginal_line_integral(model: &StableModel, u: &[f64], levels: &QuadLevels) -> Result<MomentReport> {
    symmetric_full(model, "marginal_line_integral")?;
    check_dim(model, u)?;
    if (norm(u) - 1.0).abs() > crate::tolerances::UNIT_NORM.max(1e-10) {
        return invalid("line direction must be a unit vector");
    }
    let k = model.dim() as f64 - 1.0;
    let vol = geometry::section_volume(model, u, levels)?;
    MomentReport::new(vol.scale((2.0 * PI).powf(-k) * gamma(1.0 + k / model.alpha())), "marginal-line-integral")
}

/// Density at the origin of the projection onto `H = span(basis)`, equal to
/// `int_{H^perp} f = (2 pi)^{-k} Gamma(1 + k/alpha) Vol_k(F cap H)`.
pub fn subspace_density_integral(model: &StableModel, basis: &DMatrix<f64>, levels: &QuadLevels) -> Result<MomentReport> {
    symmetric_full(model, "subspace_density_integral")?;
    let k = basis.ncols() as f64;
    if basis.ncols() == 0 || basis.ncols() > model.dim() {
        return invalid("subspace dimension must be between 1 and d");
    }
    let vol = if basis.ncols() == model.dim() && model.dim() == 1 {
        if !crate::linalg::is_orthonormal(basis, 1e-10) {
            return invalid("basis is not orthonormal");
        }
        body_volume(model, &levels.rule(2)?)?
    } else {
        geometry::subspace_volume(model, basis, levels)?
    };
    MomentReport::new(vol.scale((2.0 * PI).powf(-k) * gamma(1.0 + k / model.alpha())), "subspace-density-integral")
}

/// `int f(c x) f(x) dx = (1 + |c|^alpha)^{-d/alpha} f(0)`.
pub fn renyi_overlap(model: &StableModel, c: f64, rule: &SphereRule) -> Result<MomentReport> {
    if c == 0.0 || !c.is_finite() {
        return invalid("overlap scale must be nonzero and finite");
    }
    let f0 = density_at_zero(model, rule)?;
    let (d, alpha) = (model.dim() as f64, model.alpha());
    let k = (1.0 + c.abs().powf(alpha)).powf(-d / alpha);
    MomentReport::new(Estimate::new(f0.value * k, f0.error * k), "renyi-overlap")
}

/// `E ||xi||_{IF}^{-1} = d Gamma(1 + 1/alpha) |F| / (pi (d - 1))`, where the
/// intersection body has radial function `Vol_{d-1}(F cap u^perp)`.
pub fn intersection_body_moment(model: &StableModel, rule: &SphereRule) -> Result<MomentReport> {
    symmetric_full(model, "intersection_body_moment")?;
    let d = model.dim();
    if d < 2 {
        return invalid("intersection bodies need d >= 2");
    }
    let vol = body_volume(model, rule)?;
    let c = d as f64 * gamma(1.0 + 1.0 / model.alpha()) / (PI * (d as f64 - 1.0));
    MomentReport::new(vol.scale(c), "intersection-body-moment")
}

/// `||x||_{IF}^{-1} = Vol_{d-1}(F cap x^perp) / ||x||`, the Monte Carlo
/// functional behind [`intersection_body_moment`].
pub fn intersection_body_functional(model: &StableModel, x: &[f64], levels: &QuadLevels) -> Result<f64> {
    check_dim(model, x)?;
    let r = norm(x);
    if r == 0.0 {
        return Ok(f64::INFINITY);
    }
    let u: Vec<f64> = x.iter().map(|v| v / r).collect();
    Ok(geometry::section_volume(model, &u, levels)?.value / r)
}

/// `int_0^inf e^{-y} f(y^{1/alpha}) dy = E f(zeta)` with `zeta^alpha`
/// standard exponential. Panels follow the phase of an oscillation with
/// frequency `freq` in `zeta`.
fn zeta_expectation(alpha: f64, freq: f64, f: impl Fn(f64) -> f64) -> f64 {
    const Y_MAX: f64 = 46.0;
    const MAX_PANELS: usize = 4000;
    let mut breaks = vec![0.0];
    if freq > 0.0 {
        let mut k = 1usize;
        loop {
            let y = (k as f64 * PI / freq).powf(alpha);
            if y >= Y_MAX || breaks.len() >= MAX_PANELS {
                break;
            }
            breaks.push(y);
            k += 1;
        }
    }
    breaks.push(Y_MAX);
    let g = |y: f64| (-y).exp() * f(y.powf(1.0 / alpha));
    let parts: Vec<f64> =
        breaks.windows(2).map(|p| integrate_adaptive(g, p[0], p[1], 1e-15, 1e-13).value).collect();
    pairwise_sum(&parts)
}

/// `Cin(x) = int_0^x (1 - cos t)/t dt`.
fn cin(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < 0.5 {
        // Alternating series sum_{k>=1} (-1)^{k+1} x^{2k} / (2k (2k)!).
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..30 {
            let kk = 2.0 * k as f64;
            term *= x * x / ((kk - 1.0) * kk);
            let t = term / kk;
            sum += if k % 2 == 1 { t } else { -t };
            if t < 1e-18 * sum.abs() {
                break;
            }
        }
        return sum;
    }
    EULER_GAMMA + x.ln() - si_ci(x).1
}

fn si(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        si_ci(x.abs()).0.copysign(x)
    }
}

fn ensure_low_dim(model: &StableModel, what: &str) -> Result<()> {
    symmetric_full(model, what)?;
    if model.dim() > 3 {
        return Err(Error::Unsupported(format!("{what} is implemented for d <= 3")));
    }
    Ok(())
}

/// Plane rule with panel breaks at `extra` angles, the axes, and the kinks
/// of atomic gauges.
fn kinked_plane_rule(model: &StableModel, extra: &[f64], n: usize) -> Result<SphereRule> {
    let mut breaks = vec![0.0, PI / 2.0];
    breaks.extend_from_slice(extra);
    if let Some(SpectralMeasure::Atoms(atoms)) = model.measure() {
        breaks.extend(atoms.iter().map(|a| a.direction[1].atan2(a.direction[0]) + PI / 2.0));
    }
    arc_rule(&breaks, n)
}

fn probability_report(est: Estimate, tag: &str) -> Result<MomentReport> {
    if !(-1e-8..=1.0 + 1e-8).contains(&est.value) {
        return Err(Error::NoConvergence(format!("{tag}: value {} outside [0, 1]", est.value)));
    }
    MomentReport::new(est, tag)
}

/// `P(xi in [-a_1, a_1] x ... x [-a_d, a_d])` for `d <= 3`, from the
/// Fourier transform of the box indicator with the radial expectation taken
/// against the law of `zeta`.
pub fn box_probability(model: &StableModel, a: &[f64], levels: &QuadLevels) -> Result<MomentReport> {
    ensure_low_dim(model, "box_probability")?;
    check_dim(model, a)?;
    if a.iter().any(|x| !(*x > 0.0)) {
        return invalid("box half-widths must be positive");
    }
    let alpha = model.alpha();
    let est = match model.dim() {
        1 => {
            let rho = model.radial(&[1.0]);
            Estimate::exact(2.0 / PI * zeta_expectation(alpha, a[0] * rho, |z| si(a[0] * rho * z)))
        }
        2 => {
            let t = a[0].atan2(a[1]);
            let rule = kinked_plane_rule(model, &[t, -t], levels.circle)?;
            integrate_sphere(&rule, |u| {
                let (x, y) = (a[0] * u[0].abs(), a[1] * u[1].abs());
                let (b, c) = ((x - y).abs(), x + y);
                let rho = model.radial(u);
                let e = zeta_expectation(alpha, c * rho, |z| cin(c * rho * z) - cin(b * rho * z));
                e / (u[0] * u[1]).abs()
            })?
            .scale(1.0 / (2.0 * PI * PI))
        }
        _ => {
            let rule = levels.rule(3)?;
            integrate_sphere(&rule, |u| {
                let (x, y, z) = (a[0] * u[0].abs(), a[1] * u[1].abs(), a[2] * u[2].abs());
                let ks = [x + y - z, x - y + z, -x + y + z, -(x + y + z)];
                let rho = model.radial(u);
                let e = zeta_expectation(alpha, (x + y + z) * rho, |t| ks.iter().map(|k| si(k * rho * t)).sum());
                e / (u[0] * u[1] * u[2]).abs()
            })?
            .scale(1.0 / (4.0 * PI.powi(3)))
        }
    };
    probability_report(est, "box-probability")
}

/// `P(||xi|| <= r)` for `d <= 3`.
pub fn ball_probability(model: &StableModel, r: f64, levels: &QuadLevels) -> Result<MomentReport> {
    ensure_low_dim(model, "ball_probability")?;
    if !(r > 0.0) {
        return invalid("ball radius must be positive");
    }
    let alpha = model.alpha();
    let est = match model.dim() {
        1 => return box_probability(model, &[r], levels).map(|m| MomentReport { tag: "ball-probability".into(), ..m }),
        2 => {
            let rule = geometry::adapted_rule(model, levels)?;
            let e = integrate_sphere(&rule, |u| {
                let a = r * model.radial(u);
                zeta_expectation(alpha, a, |z| crate::special::bessel_j0(a * z))
            })?;
            Estimate::new(1.0 - e.value / (2.0 * PI), e.error / (2.0 * PI))
        }
        _ => {
            let rule = levels.rule(3)?;
            integrate_sphere(&rule, |u| {
                let a = r * model.radial(u);
                zeta_expectation(alpha, a, |z| si(a * z) - (a * z).sin())
            })?
            .scale(1.0 / (2.0 * PI * PI))
        }
    };
    probability_report(est, "ball-probability")
}

/// `E exp(-sum lambda_i |xi_i|) =
///  pi^{-d} int_S rho^d int_0^inf prod lambda_i/(lambda_i^2 + s^2 rho^2 u_i^2) e^{-s^alpha} s^{d-1} ds du`.
pub fn laplace_abs(model: &StableModel, lambda: &[f64], levels: &QuadLevels) -> Result<MomentReport> {
    ensure_low_dim(model, "laplace_abs")?;
    check_dim(model, lambda)?;
    if lambda.iter().any(|x| !(*x > 0.0)) {
        return invalid("Laplace exponents must be positive");
    }
    let d = model.dim();
    let radial = radial_rule(TailClass::ExpPower(model.alpha()), 64)?;
    let inner = |u: &[f64]| -> f64 {
        let rho = model.radial(u);
        let v = integrate_radial(&radial, |s| {
            let p: f64 = lambda.iter().zip(u).map(|(l, ui)| l / (l * l + (s * rho * ui).powi(2))).product();
            p * (-s.powf(model.alpha())).exp() * s.powi(d as i32 - 1)
        })
        .unwrap_or(f64::NAN);
        rho.powi(d as i32) * v
    };
    let est = if d == 1 {
        Estimate::exact(inner(&[1.0]) + inner(&[-1.0]))
    } else if d == 2 {
        integrate_sphere(&kinked_plane_rule(model, &[], levels.circle)?, inner)?
    } else {
        integrate_sphere(&levels.rule(d)?, inner)?
    };
    let est = est.scale(PI.powi(-(d as i32)));
    if !(est.value > 0.0 && est.value <= 1.0 + 1e-8) {
        return Err(Error::NoConvergence(format!("Laplace transform {} outside (0, 1]", est.value)));
    }
    MomentReport::new(est, "laplace-abs")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{circle_rule, sphere_rule};
    use crate::special::gamma;
    use proptest::prelude::*;

    fn cauchy() -> StableModel {
        StableModel::isotropic_scaled(2, 1.0, 1.0).unwrap()
    }

    fn gaussian(c: DMatrix<f64>) -> StableModel {
        StableModel::sub_gaussian(2.0, c).unwrap()
    }

    fn tilted(alpha: f64) -> StableModel {
        let t = PI / 6.0;
        let r = DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()]);
        let c = &r * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 0.5])) * r.transpose();
        StableModel::sub_gaussian(alpha, c).unwrap()
    }

    fn cauchy_density(x: &[f64]) -> f64 {
        (1.0 + dot(x, x)).powf(-1.5) / (2.0 * PI)
    }

    #[test]
    fn charfun_values() {
        let m = StableModel::independent(1.0, &[1.0, 1.0]).unwrap();
        assert_eq!(charfun(&m, &[0.0, 0.0]).unwrap(), 1.0);
        assert!((charfun(&m, &[1.0, 1.0]).unwrap() - (-2.0f64).exp()).abs() < 1e-15);
        let g = gaussian(DMatrix::identity(2, 2));
        assert!((charfun(&g, &[1.0, 0.0]).unwrap() - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn cauchy_density_matches_closed_form() {
        let rule = circle_rule(2048).unwrap();
        let m = cauchy();
        for x in [[0.0, 0.0], [1.0, 0.0], [0.3, -2.0], [5.0, 7.0], [30.0, 1.0]] {
            let f = density(&m, &x, &rule).unwrap();
            assert!((f.value - cauchy_density(&x)).abs() < 1e-11, "{x:?}: {}", f.value);
        }
    }

    #[test]
    fn gaussian_density_matches_normal() {
        let rule = circle_rule(512).unwrap();
        let g = gaussian(DMatrix::identity(2, 2));
        let f = density(&g, &[1.0, 0.0], &rule).unwrap().value;
        assert!((f - (-0.5f64).exp() / (2.0 * PI)).abs() < 1e-12);
        let g3 = StableModel::sub_gaussian(2.0, DMatrix::identity(3, 3)).unwrap();
        let rule3 = sphere_rule(3, 32, None).unwrap();
        let f = density(&g3, &[0.5, -0.5, 1.0], &rule3).unwrap().value;
        assert!((f - (-0.75f64).exp() * (2.0 * PI).powf(-1.5)).abs() < 1e-12);
        let g1 = StableModel::independent(2.0, &[1.0]).unwrap();
        // Scale one with alpha = 2 is N(0, 2).
        let f = density(&g1, &[0.7], &rule).unwrap().value;
        assert!((f - (-0.49f64 / 4.0).exp() / (4.0 * PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn density_at_zero_values() {
        let rule = circle_rule(512).unwrap();
        let f = density_at_zero(&cauchy(), &rule).unwrap();
        assert!((f.value - 1.0 / (2.0 * PI)).abs() < 1e-12);
        let g = gaussian(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 4.0])));
        let f = density_at_zero(&g, &rule).unwrap();
        assert!((f.value - 0.5 / (2.0 * PI)).abs() < 1e-12);
        for alpha in [0.8, 1.3, 1.9] {
            let m = StableModel::symmetric_atoms(alpha, vec![(vec![1.0, 0.0], 1.0), (vec![0.6, 0.8], 0.5)]).unwrap();
            let a = density_at_zero(&m, &rule).unwrap();
            let b = density(&m, &[0.0, 0.0], &rule).unwrap();
            assert!((a.value - b.value).abs() <= 1e-9 + 10.0 * (a.error + b.error), "{alpha}");
        }
    }

    #[test]
    fn density_is_symmetric() {
        let rule = circle_rule(256).unwrap();
        let m = StableModel::symmetric_atoms(1.4, vec![(vec![1.0, 0.0], 1.0), (vec![0.6, 0.8], 0.5)]).unwrap();
        for i in 0..16 {
            let x = [(i as f64 * 0.7).sin() * 3.0, (i as f64 * 1.3).cos() * 2.0];
            let a = density(&m, &x, &rule).unwrap().value;
            let b = density(&m, &[-x[0], -x[1]], &rule).unwrap().value;
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn density_integrates_to_one_along_marginals() {
        let rule = circle_rule(4096).unwrap();
        let m = cauchy();
        let levels = QuadLevels::default();
        let want = marginal_line_integral(&m, &[0.6, 0.8], &levels).unwrap();
        assert!((want.value - 1.0 / PI).abs() < 1e-14);
        // Beyond |t| = 40 the density is replaced by its leading decay t^{-3}/(2 pi).
        let t_max = 40.0;
        let got = integrate_adaptive(|t| density(&m, &[0.6 * t, 0.8 * t], &rule).unwrap().value, -t_max, t_max, 1e-12, 1e-10)
            .value
            + 1.0 / (2.0 * PI * t_max * t_max);
        assert!((got - want.value).abs() / want.value < 1e-4, "{got}");
    }

    #[test]
    fn hessian_matches_gaussian_and_finite_differences() {
        let rule = circle_rule(512).unwrap();
        let g = gaussian(DMatrix::identity(2, 2));
        let h = density_hessian_at_zero(&g, &rule).unwrap();
        let f0 = 1.0 / (2.0 * PI);
        assert!((h[(0, 0)] + f0).abs() < 1e-12 && (h[(1, 1)] + f0).abs() < 1e-12 && h[(0, 1)].abs() < 1e-14);
        let m = StableModel::symmetric_atoms(1.5, vec![(vec![1.0, 0.0], 1.0), (vec![0.6, 0.8], 0.7)]).unwrap();
        let h = density_hessian_at_zero(&m, &rule).unwrap();
        let f = |x: [f64; 2]| density(&m, &x, &rule).unwrap().value;
        let s = 1e-3;
        let fd00 = (f([s, 0.0]) - 2.0 * f([0.0, 0.0]) + f([-s, 0.0])) / (s * s);
        let fd01 = (f([s, s]) - f([s, -s]) - f([-s, s]) + f([-s, -s])) / (4.0 * s * s);
        assert!((fd00 - h[(0, 0)]).abs() < 1e-4, "{fd00} {}", h[(0, 0)]);
        assert!((fd01 - h[(0, 1)]).abs() < 1e-4, "{fd01} {}", h[(0, 1)]);
        let iso = density_hessian_at_zero(&cauchy(), &rule).unwrap();
        assert!((iso[(0, 0)] - iso[(1, 1)]).abs() < 1e-14 && iso[(0, 1)].abs() < 1e-14 && iso[(0, 0)] < 0.0);
    }

    #[test]
    fn norm_moment_values() {
        let rule = circle_rule(512).unwrap();
        let m = cauchy();
        assert_eq!(norm_moment(&m, 0.0, &rule).unwrap().value, 1.0);
        // Radial integral of the closed-form Cauchy density.
        let v = norm_moment(&m, 0.5, &rule).unwrap().value;
        let want = gamma(1.25) * gamma(0.25) / (2.0 * gamma(1.5));
        assert!((v - want).abs() < 1e-12, "{v} {want}");
        assert!((v - 1.854_08).abs() < 1e-5);
        let g = gaussian(DMatrix::identity(2, 2));
        assert!((norm_moment(&g, 2.0, &rule).unwrap().value - 2.0).abs() < 1e-12);
        assert!(matches!(norm_moment(&m, 1.0, &rule), Err(Error::MomentNotFinite { .. })));
        assert!(matches!(norm_moment(&m, -2.0, &rule), Err(Error::MomentNotFinite { .. })));
    }

    #[test]
    fn norm_moment_bound_is_attained_by_balls() {
        let rule = circle_rule(512).unwrap();
        for alpha in [0.7, 1.2, 1.8] {
            let m = StableModel::isotropic_scaled(2, alpha, 1.3).unwrap();
            let l = alpha / 3.0;
            let a = norm_moment(&m, l, &rule).unwrap().value;
            let b = norm_moment_lower_bound(&m, l, &rule).unwrap();
            assert!((a - b).abs() < 1e-6 * a);
        }
    }

    #[test]
    fn moment_limit_depends_on_total_mass_only() {
        let rule = circle_rule(512).unwrap();
        let cross = StableModel::symmetric_atoms(1.0, vec![(vec![1.0, 0.0], 0.5), (vec![0.0, 1.0], 0.5)]).unwrap();
        let uniform = StableModel::isotropic(2, 1.0, 1.0).unwrap();
        let a = moment_limit_ratio(&cross, &rule).unwrap().value;
        let b = moment_limit_ratio(&uniform, &rule).unwrap().value;
        assert!((a - b).abs() < 1e-12);
        // Isotropic Cauchy of unit scale: the limit is one.
        let c = moment_limit_ratio(&cauchy(), &rule).unwrap().value;
        assert!((c - 1.0).abs() < 1e-12);
        let l = 1.0 - 1e-3;
        let near = norm_moment(&cauchy(), l, &rule).unwrap().value / gamma(1.0 - l);
        assert!((near - c).abs() < 1e-2 * c);
    }

    #[test]
    fn scalar_moment_values() {
        let g = gaussian(DMatrix::identity(2, 2));
        let u = [0.3, 0.4];
        let gu = g.gauge(&u).unwrap();
        let v = scalar_moment(&g, &u, 1.0).unwrap().value;
        assert!((v - 2.0 * gu / PI.sqrt()).abs() < 1e-14);
        // E|N(0, s^2)| = s sqrt(2/pi) with s^2 = 2 gauge^2.
        assert!((v - (2.0 * gu * gu).sqrt() * (2.0 / PI).sqrt()).abs() < 1e-14);
        assert_eq!(scalar_moment(&g, &u, 0.0).unwrap().value, 1.0);
    }

    #[test]
    fn mixed_abs_moment_factorizes_for_independent_components() {
        for &(alpha, l1, l2) in &[(1.5, 0.3, 0.3), (1.2, 0.2, 0.5), (0.8, 0.25, 0.3)] {
            let m = StableModel::independent(alpha, &[1.0, 2.0]).unwrap();
            let v = mixed_abs_moment_2d(&m, l1, l2).unwrap();
            let want = scalar_moment(&m, &[1.0, 0.0], l1).unwrap().value * scalar_moment(&m, &[0.0, 1.0], l2).unwrap().value;
            assert!((v.value - want).abs() < 1e-6 * want, "{alpha} {l1} {l2}: {} {want}", v.value);
        }
    }

    #[test]
    fn mixed_abs_moment_swap_symmetry() {
        let m = StableModel::symmetric_atoms(1.4, vec![(vec![1.0, 0.0], 1.0), (vec![0.0, 1.0], 1.0), (vec![0.6, 0.8], 0.5), (vec![0.8, 0.6], 0.5)]).unwrap();
        let a = mixed_abs_moment_2d(&m, 0.2, 0.4).unwrap().value;
        let b = mixed_abs_moment_2d(&m, 0.4, 0.2).unwrap().value;
        assert!((a - b).abs() < 1e-10 * a);
    }

    /// `E X^<a> Y^<b>` for a standard bivariate normal with correlation `r`,
    /// by nested one-dimensional quadrature.
    fn normal_signed_moment(r: f64, a: f64, b: f64) -> f64 {
        let s = (1.0 - r * r).sqrt();
        let phi = |z: f64| (-z * z / 2.0).exp() / (2.0 * PI).sqrt();
        let inner = |x: f64| {
            let root = -r * x / s;
            let f = |z: f64| crate::special::signed_pow(r * x + s * z, b) * phi(z);
            let (lo, hi) = (root.min(0.0) - 12.0, root.max(0.0) + 12.0);
            integrate_adaptive(f, lo, root, 1e-14, 1e-12).value + integrate_adaptive(f, root, hi, 1e-14, 1e-12).value
        };
        let outer = |x: f64| crate::special::signed_pow(x, a) * inner(x) * phi(x);
        integrate_adaptive(outer, -12.0, 0.0, 1e-13, 1e-11).value + integrate_adaptive(outer, 0.0, 12.0, 1e-13, 1e-11).value
    }

    #[test]
    fn signed_moment_matches_gaussian_oracle() {
        // C has unit diagonal in the standard normal scale: gauge^2 = u^T C u / 2.
        let r = 0.6;
        let g = gaussian(DMatrix::from_row_slice(2, 2, &[1.0, r, r, 1.0]));
        for &(a, b) in &[(0.2, 0.3), (0.0, 0.5), (0.7, 0.4)] {
            let got = signed_mixed_moment_2d(&g, a, b).unwrap().value;
            let want = normal_signed_moment(r, a, b);
            assert!((got - want).abs() < 1e-7, "{a} {b}: {got} {want}");
        }
        let s = signed_mixed_moment_2d(&g, 0.0, 0.0).unwrap().value;
        assert!((s - 2.0 / PI * r.asin()).abs() < 1e-10);
    }

    #[test]
    fn signed_moment_vanishes_for_axis_symmetric_bodies() {
        let m = StableModel::independent(1.3, &[1.0, 2.0]).unwrap();
        assert!(signed_mixed_moment_2d(&m, 0.3, 0.4).unwrap().value.abs() < 1e-12);
        assert!(sign_moment_2d(&m).unwrap().value.abs() < 1e-12);
        assert!(matches!(signed_mixed_moment_2d(&m, 1.0, 0.1), Err(Error::Unsupported(_))));
    }

    #[test]
    fn sign_moment_does_not_depend_on_alpha() {
        let a = sign_moment_2d(&tilted(1.2)).unwrap().value;
        let b = sign_moment_2d(&tilted(1.8)).unwrap().value;
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn orthant_probabilities() {
        let m = StableModel::independent(1.5, &[1.0, 1.0]).unwrap();
        let id = DMatrix::identity(2, 2);
        assert!((orthant_probability_2d(&m, &id).unwrap().value - 0.25).abs() < 1e-12);
        let t = tilted(2.0);
        let c = t.ellipsoid_matrix().unwrap();
        let rho = c[(0, 1)] / (c[(0, 0)] * c[(1, 1)]).sqrt();
        let p = orthant_probability_2d(&t, &id).unwrap().value;
        assert!((p - (0.25 + rho.asin() / (2.0 * PI))).abs() < 1e-10);
        let s = sign_moment_2d(&t).unwrap().value;
        assert!((p - (0.25 + s / 4.0)).abs() < 1e-12);
        // The cone spanned by e1 and e1 + e2 for a standard normal has angle pi/4.
        let g = gaussian(DMatrix::identity(2, 2));
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!((orthant_probability_2d(&g, &a).unwrap().value - 0.125).abs() < 1e-10);
    }

    #[test]
    fn subspace_integrals() {
        let m = cauchy();
        let levels = QuadLevels::default();
        let e1 = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        assert!((subspace_density_integral(&m, &e1, &levels).unwrap().value - 1.0 / PI).abs() < 1e-14);
        let full = DMatrix::identity(2, 2);
        let a = subspace_density_integral(&m, &full, &levels).unwrap().value;
        let b = density_at_zero(&m, &levels.rule(2).unwrap()).unwrap().value;
        assert!((a - b).abs() < 1e-14);
        let big = m.scale_vector(2.0).unwrap();
        let c = subspace_density_integral(&big, &e1, &levels).unwrap().value;
        assert!((c - 0.5 / PI).abs() < 1e-14);
    }

    #[test]
    fn renyi_overlap_gaussian() {
        let rule = circle_rule(128).unwrap();
        let g = gaussian(DMatrix::identity(2, 2));
        assert!((renyi_overlap(&g, 1.0, &rule).unwrap().value - 1.0 / (4.0 * PI)).abs() < 1e-14);
        assert!(renyi_overlap(&g, 1e8, &rule).unwrap().value < 1e-15);
        assert!(renyi_overlap(&g, 0.0, &rule).is_err());
    }

    #[test]
    fn intersection_body_value() {
        let rule = circle_rule(512).unwrap();
        let v = intersection_body_moment(&cauchy(), &rule).unwrap().value;
        // E 2/||xi|| for the isotropic Cauchy law, from its radial density.
        assert!((v - 2.0).abs() < 1e-12);
        let t = cauchy().scale_vector(3.0).unwrap();
        let w = intersection_body_moment(&t, &rule).unwrap().value;
        assert!((w - 2.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn ball_probability_cauchy() {
        let levels = QuadLevels { circle: 128, ..QuadLevels::default() };
        let p = ball_probability(&cauchy(), 1.0, &levels).unwrap().value;
        assert!((p - (1.0 - 0.5f64.sqrt())).abs() < 1e-9, "{p}");
        let g3 = StableModel::sub_gaussian(2.0, DMatrix::identity(3, 3)).unwrap();
        let levels3 = QuadLevels { product: 8, ..QuadLevels::default() };
        // |xi|^2 is chi-square with 3 degrees of freedom.
        let p = ball_probability(&g3, 1.5, &levels3).unwrap().value;
        let want = statrs_free_chi3_cdf(2.25);
        assert!((p - want).abs() < 1e-9, "{p} {want}");
    }

    fn statrs_free_chi3_cdf(x: f64) -> f64 {
        // P(chi^2_3 <= x) = erf(sqrt(x/2)) - sqrt(2x/pi) exp(-x/2).
        let s = (x / 2.0).sqrt();
        erf(s) - (2.0 * x / PI).sqrt() * (-x / 2.0).exp()
    }

    fn erf(x: f64) -> f64 {
        2.0 / PI.sqrt() * integrate_adaptive(|t| (-t * t).exp(), 0.0, x, 1e-16, 1e-15).value
    }

    #[test]
    fn box_probabilities() {
        let levels = QuadLevels { circle: 128, product: 8, ..QuadLevels::default() };
        let g = gaussian(DMatrix::identity(2, 2));
        let p = box_probability(&g, &[1.0, 0.5], &levels).unwrap().value;
        assert!((p - erf(1.0 / 2f64.sqrt()) * erf(0.5 / 2f64.sqrt())).abs() < 1e-9, "{p}");
        let big = box_probability(&g, &[9.0, 9.0], &QuadLevels { circle: 512, ..levels.clone() }).unwrap().value;
        assert!((big - 1.0).abs() < 1e-8, "{big}");
        let g3 = StableModel::sub_gaussian(2.0, DMatrix::identity(3, 3)).unwrap();
        let want = erf(1.0 / 2f64.sqrt()) * erf(0.5 / 2f64.sqrt()) * erf(2.0 / 2f64.sqrt());
        let p = box_probability(&g3, &[1.0, 0.5, 2.0], &QuadLevels { product: 16, ..levels.clone() }).unwrap().value;
        assert!((p - want).abs() < 1e-9, "{p} {want}");
        let c = StableModel::independent(1.0, &[1.0]).unwrap();
        let p = box_probability(&c, &[1.0], &levels).unwrap().value;
        assert!((p - 0.5).abs() < 1e-12);
    }

    #[test]
    fn laplace_abs_values() {
        let levels = QuadLevels { circle: 256, product: 16, ..QuadLevels::default() };
        let m = StableModel::independent(1.0, &[1.0, 1.0]).unwrap();
        // For a standard Cauchy X, E exp(-l|X|) = (2/pi) int_0^inf e^{-l x}/(1+x^2) dx.
        let one = |l: f64| 2.0 / PI * integrate_adaptive(|x| (-l * x).exp() / (1.0 + x * x), 0.0, 800.0 / l, 1e-15, 1e-13).value;
        let v = laplace_abs(&m, &[0.5, 2.0], &levels).unwrap().value;
        assert!((v - one(0.5) * one(2.0)).abs() < 1e-10, "{v}");
        // Polar integration against the isotropic Cauchy density.
        let l = [0.3, 0.1];
        let want = integrate_adaptive(
            |t| {
                let c = l[0] * t.cos().abs() + l[1] * t.sin().abs();
                integrate_adaptive(|r| r * (-c * r).exp() * (1.0 + r * r).powf(-1.5), 0.0, 60.0 / c, 1e-15, 1e-14).value
            },
            0.0,
            2.0 * PI,
            1e-14,
            1e-13,
        )
        .value
            / (2.0 * PI);
        let v = laplace_abs(&cauchy(), &l, &levels).unwrap().value;
        assert!((v - want).abs() < 1e-9, "{v} {want}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn inertia_bound_holds(w1 in 0.2f64..3.0, w2 in 0.2f64..3.0, t in 0.0f64..3.0, m2 in 0.1f64..2.0, alpha in 1.0f64..2.0) {
            let rule = circle_rule(256).unwrap();
            let m = StableModel::symmetric_atoms(alpha, vec![(vec![1.0, 0.0], 1.0), (vec![t.cos(), t.sin()], m2)]).unwrap();
            let b = body_second_moments(&m, &rule).unwrap();
            let lhs = w1 * w1 * b[(0, 0)] + w2 * w2 * b[(1, 1)];
            let vol = geometry::volume(&m, &rule).unwrap().value;
            prop_assert!(lhs >= weighted_inertia_lower_bound(vol, &[w1, w2]) * (1.0 - 1e-9));
            // The same statement for the Hessian at the origin.
            let h = density_hessian_at_zero(&m, &rule).unwrap();
            let f0 = density_at_zero(&m, &rule).unwrap().value;
            let vol_from_f0 = f0 * (2.0 * PI).powi(2) / gamma(1.0 + 2.0 / alpha);
            let bound = -(2.0 * PI).powi(-2) * gamma(1.0 + 4.0 / alpha) * weighted_inertia_lower_bound(vol_from_f0, &[w1, w2]);
            prop_assert!(w1 * w1 * h[(0, 0)] + w2 * w2 * h[(1, 1)] <= bound * (1.0 - 1e-9));
        }

        #[test]
        fn density_scaling(t in 0.3f64..3.0, alpha in 0.6f64..2.0) {
            let rule = circle_rule(256).unwrap();
            let m = StableModel::symmetric_atoms(alpha, vec![(vec![1.0, 0.0], 1.0), (vec![0.6, 0.8], 0.4)]).unwrap();
            let s = m.scale_vector(t).unwrap();
            let a = density_at_zero(&m, &rule).unwrap().value;
            let b = density_at_zero(&s, &rule).unwrap().value;
            prop_assert!((b * t * t - a).abs() < 1e-10 * a);
            let l = alpha / 3.0;
            let ma = norm_moment(&m, l, &rule).unwrap().value;
            let mb = norm_moment(&s, l, &rule).unwrap().value;
            prop_assert!((mb - t.powf(l) * ma).abs() < 1e-10 * mb);
        }

        #[test]
        fn section_product_bound(w in 0.1f64..2.0, t in 0.1f64..3.0, alpha in 1.0f64..2.0) {
            let levels = QuadLevels::default();
            let m = StableModel::symmetric_atoms(alpha, vec![(vec![1.0, 0.0], 1.0), (vec![0.0, 1.0], 0.7), (vec![t.cos(), t.sin()], w)]).unwrap();
            let f0 = density_at_zero(&m, &levels.rule(2).unwrap()).unwrap().value;
            let e1 = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
            let e2 = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
            let f1 = subspace_density_integral(&m, &e1, &levels).unwrap().value;
            let f2 = subspace_density_integral(&m, &e2, &levels).unwrap().value;
            let c = gamma(1.0 + 2.0 / alpha) / (2.0 * gamma(1.0 + 1.0 / alpha).powi(2));
            prop_assert!(f0 >= c * f1 * f2 * (1.0 - 1e-9));
        }

        #[test]
        fn sign_moment_bounded(t in 0.0f64..3.1, w in 0.05f64..3.0, alpha in 0.5f64..2.0) {
            let m = StableModel::symmetric_atoms(alpha, vec![(vec![1.0, 0.0], 1.0), (vec![t.cos(), t.sin()], w)]).unwrap();
            let s = sign_moment_2d(&m).unwrap().value;
            prop_assert!(s.abs() <= 1.0);
        }
    }
}

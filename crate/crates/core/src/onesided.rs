//! One-sided strictly stable laws on the positive orthant, laws stable for
//! power sums, and their zonoid representations.
//!
//! The Laplace exponent is `psi(u) = sum_j w_j <u, s_j>^alpha` with the
//! weights taken as given; no extra Gamma factor is attached to them.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::linalg::dot;
use crate::special::{gamma, ln_gamma};
use crate::spectral::{Atom, SpectralMeasure, StableModel};

/// One-sided strictly stable law with exponent in `(0, 1)` and a discrete
/// spectral measure on the positive orthant.
#[derive(Debug, Clone)]
pub struct OneSidedModel {
    alpha: f64,
    atoms: Vec<Atom>,
}

fn check_atoms(atoms: &[Atom]) -> Result<usize> {
    let d = atoms.first().map(|a| a.direction.len()).ok_or_else(|| Error::InvalidArgument("no atoms".into()))?;
    if d == 0 {
        return invalid("atoms must have positive dimension");
    }
    for a in atoms {
        if a.direction.len() != d {
            return invalid("atoms have inconsistent dimensions");
        }
        if a.direction.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return invalid("atom coordinates must be finite and nonnegative");
        }
        if a.direction.iter().all(|x| *x == 0.0) {
            return invalid("atom directions must be nonzero");
        }
        if !(a.weight > 0.0 && a.weight.is_finite()) {
            return invalid("atom weights must be positive");
        }
    }
    Ok(d)
}

fn ensure_orthant(u: &[f64], d: usize, strict: bool) -> Result<()> {
    if u.len() != d {
        return invalid(format!("expected a {d}-vector, got length {}", u.len()));
    }
    let bad = if strict { u.iter().any(|x| !(*x > 0.0)) } else { u.iter().any(|x| !(*x >= 0.0)) };
    if bad {
        let what = if strict { "positive" } else { "nonnegative" };
        return invalid(format!("argument coordinates must be {what}"));
    }
    Ok(())
}

impl OneSidedModel {
    pub fn new(alpha: f64, atoms: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        if alpha == 1.0 {
            return invalid("one-sided strictly stable laws with alpha = 1 are degenerate");
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return invalid(format!("one-sided models need alpha in (0, 1), got {alpha}"));
        }
        let atoms: Vec<Atom> = atoms.into_iter().map(|(s, w)| Atom::new(s, w)).collect();
        check_atoms(&atoms)?;
        Ok(OneSidedModel { alpha, atoms })
    }

    /// Independent components: atoms `e_i` with weights `a_i`.
    pub fn independent(alpha: f64, weights: &[f64]) -> Result<Self> {
        let d = weights.len();
        Self::new(alpha, weights.iter().enumerate().map(|(i, w)| (crate::linalg::basis(d, i), *w)).collect())
    }

    /// Reads a one-sided [`StableModel`].
    pub fn from_model(model: &StableModel) -> Result<Self> {
        if model.is_symmetric() {
            return Err(Error::KindMismatch("expected a one-sided model".into()));
        }
        match model.measure() {
            Some(SpectralMeasure::Atoms(atoms)) => {
                Self::new(model.alpha(), atoms.iter().map(|a| (a.direction.clone(), a.weight)).collect())
            }
            _ => invalid("one-sided models need a discrete spectral measure"),
        }
    }

    pub fn to_model(&self) -> Result<StableModel> {
        StableModel::onesided_atoms(self.alpha, self.atoms.iter().map(|a| (a.direction.clone(), a.weight)).collect())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].direction.len()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Laplace exponent `psi(u)` for `u >= 0`.
    pub fn exponent(&self, u: &[f64]) -> Result<f64> {
        ensure_orthant(u, self.dim(), false)?;
        Ok(self.exponent_raw(u))
    }

    pub(crate) fn exponent_raw(&self, u: &[f64]) -> f64 {
        self.atoms.iter().map(|a| a.weight * dot(u, &a.direction).powf(self.alpha)).sum()
    }

    /// Atoms of the associated `L_1(1/alpha)`-zonoid: `(s_j^alpha, w_j)`.
    pub fn zonoid_atoms(&self) -> Vec<Atom> {
        self.atoms
            .iter()
            .map(|a| Atom::new(a.direction.iter().map(|x| x.powf(self.alpha)).collect(), a.weight))
            .collect()
    }
}

/// `E exp(-<u, xi>) = exp(-psi(u))` for `u >= 0`.
pub fn laplace(model: &OneSidedModel, u: &[f64]) -> Result<f64> {
    Ok((-model.exponent(u)?).exp())
}

fn lp_norm(v: impl Iterator<Item = f64>, p: f64) -> f64 {
    if p.is_infinite() {
        return v.fold(0.0, f64::max);
    }
    let xs: Vec<f64> = v.collect();
    let m = xs.iter().cloned().fold(0.0, f64::max);
    if m == 0.0 {
        return 0.0;
    }
    m * xs.iter().map(|x| (x / m).powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Support function of the `L_1(p)`-zonoid `sum_j w_j E(y_j B_q)`:
/// `h(K, u) = sum_j w_j ||y_j o u||_p`, for any `u` and `p` in `[1, inf]`.
pub fn l1p_zonoid_support(atoms: &[Atom], p: f64, u: &[f64]) -> Result<f64> {
    if !(p >= 1.0) {
        return invalid(format!("L1(p)-zonoids need p >= 1, got {p}"));
    }
    let d = check_atoms(atoms)?;
    if u.len() != d {
        return invalid(format!("expected a {d}-vector, got length {}", u.len()));
    }
    Ok(atoms.iter().map(|a| a.weight * lp_norm(a.direction.iter().zip(u).map(|(y, x)| (y * x).abs()), p)).sum())
}

/// `h(K, u^alpha)` for the associated zonoid `K`; equals `psi(u)`.
pub fn assoc_zonoid_support(model: &OneSidedModel, u: &[f64]) -> Result<f64> {
    ensure_orthant(u, model.dim(), false)?;
    let v: Vec<f64> = u.iter().map(|x| x.powf(model.alpha)).collect();
    l1p_zonoid_support(&model.zonoid_atoms(), 1.0 / model.alpha, &v)
}

/// Support function of the zonoid `L` of the subordinated law
/// `zeta^{1/alpha} xi`, with `zeta` one-sided `beta`-stable:
/// `h(L, v) = h(K, v^{1/beta})^beta`, so that `h(L, u^{alpha beta}) = psi(u)^beta`.
pub fn substable_support(model: &OneSidedModel, beta: f64, v: &[f64]) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return invalid(format!("beta must lie in (0, 1), got {beta}"));
    }
    ensure_orthant(v, model.dim(), false)?;
    let w: Vec<f64> = v.iter().map(|x| x.powf(1.0 / beta)).collect();
    Ok(l1p_zonoid_support(&model.zonoid_atoms(), 1.0 / model.alpha, &w)?.powf(beta))
}

/// Coordinatewise `p`-sum `(x^p + y^p)^{1/p}`; `p = inf` is the maximum.
pub fn psum(x: &[f64], y: &[f64], p: f64) -> Result<Vec<f64>> {
    if !(p > 0.0) || x.len() != y.len() {
        return invalid("p-sums need p > 0 and vectors of equal length");
    }
    if x.iter().chain(y).any(|v| !(*v >= 0.0)) {
        return invalid("p-sums are defined on the positive orthant");
    }
    Ok(x.iter().zip(y).map(|(a, b)| if p.is_infinite() { a.max(*b) } else { lp_norm([*a, *b].into_iter(), p) }).collect())
}

/// Law on the positive orthant that is strictly stable for `p`-sums with
/// exponent `alpha <= p`. Its coordinatewise `p`-th power is the one-sided
/// law `core` with exponent `alpha / p`.
#[derive(Debug, Clone)]
pub struct PSumModel {
    p: f64,
    core: OneSidedModel,
}

impl PSumModel {
    pub fn new(p: f64, alpha: f64, atoms: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        if p.is_infinite() {
            return invalid("p = inf is the max-stable case; use maxstable_cdf");
        }
        if !(p > 0.0) {
            return invalid(format!("p must be positive, got {p}"));
        }
        if !(alpha > 0.0 && alpha <= p) {
            return invalid(format!("alpha must lie in (0, p], got {alpha}"));
        }
        Ok(PSumModel { p, core: OneSidedModel::new(alpha / p, atoms)? })
    }

    /// Inverse of [`psum_transform`].
    pub fn from_core(core: OneSidedModel, p: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return invalid(format!("p must be positive and finite, got {p}"));
        }
        Ok(PSumModel { p, core })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn alpha(&self) -> f64 {
        self.core.alpha * self.p
    }

    pub fn core(&self) -> &OneSidedModel {
        &self.core
    }

    /// `E chi_u(xi) = E exp(-sum (xi_i u_i)^p) = exp(-psi_core(u^p))`.
    pub fn character_expectation(&self, u: &[f64]) -> Result<f64> {
        ensure_orthant(u, self.core.dim(), false)?;
        let v: Vec<f64> = u.iter().map(|x| x.powf(self.p)).collect();
        laplace(&self.core, &v)
    }

    /// The character `chi_u(x) = exp(-sum (x_i u_i)^p)`.
    pub fn character(&self, u: &[f64], x: &[f64]) -> f64 {
        (-u.iter().zip(x).map(|(a, b)| (a * b).powf(self.p)).sum::<f64>()).exp()
    }

    /// Support function of the associated `L_1(p/alpha)`-zonoid at `v`;
    /// `E chi_u(xi) = exp(-h(K, u^alpha))`.
    pub fn zonoid_support(&self, v: &[f64]) -> Result<f64> {
        ensure_orthant(v, self.core.dim(), false)?;
        l1p_zonoid_support(&self.core.zonoid_atoms(), self.p / self.alpha(), v)
    }
}

/// Arithmetic-sum core of a `p`-sum model: the law of `xi^p`.
pub fn psum_transform(model: &PSumModel) -> OneSidedModel {
    model.core.clone()
}

/// `P(xi <= 1/u) = exp(-sum_j w_j max_i u_i y_{j,i})` for a max-stable law
/// with unit Frechet-type margins.
pub fn maxstable_cdf(atoms: &[Atom], u: &[f64]) -> Result<f64> {
    let d = check_atoms(atoms)?;
    ensure_orthant(u, d, true)?;
    Ok((-l1p_zonoid_support(atoms, f64::INFINITY, u)?).exp())
}

/// `E <xi, u>^beta = Gamma(1 - beta/alpha) / Gamma(1 - beta) psi(u)^{beta/alpha}`
/// for `beta` in `(0, alpha)`.
pub fn onesided_moment_pos(model: &OneSidedModel, u: &[f64], beta: f64) -> Result<f64> {
    let a = model.alpha;
    if !(beta > 0.0 && beta < a) {
        return Err(Error::MomentNotFinite { order: beta, lo: 0.0, hi: a });
    }
    let psi = model.exponent(u)?;
    if !(psi > 0.0) {
        return invalid("Laplace exponent vanishes at u");
    }
    Ok(gamma(1.0 - beta / a) / gamma(1.0 - beta) * psi.powf(beta / a))
}

/// `E <xi, u>^{-lambda-1} = Gamma((1+lambda)/alpha) / (alpha Gamma(1+lambda)) psi(u)^{-(1+lambda)/alpha}`
/// for `lambda > -1`.
pub fn onesided_moment_neg(model: &OneSidedModel, u: &[f64], lambda: f64) -> Result<f64> {
    let a = model.alpha;
    if !(lambda > -1.0) {
        return Err(Error::MomentNotFinite { order: -lambda - 1.0, lo: f64::NEG_INFINITY, hi: 0.0 });
    }
    let psi = model.exponent(u)?;
    if !(psi > 0.0) {
        return invalid("Laplace exponent vanishes at u");
    }
    let c = (ln_gamma((1.0 + lambda) / a) - ln_gamma(1.0 + lambda)).exp() / a;
    Ok(c * psi.powf(-(1.0 + lambda) / a))
}

/// Pointwise comparison of two Laplace transforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LaplaceOrder {
    /// `E e^{-<u,xi_1>} <= E e^{-<u,xi_2>}` for all `u`, i.e. the first
    /// zonoid contains the second. Equal transforms report this variant.
    Le,
    /// The reverse inequality.
    Ge,
    Incomparable,
}

/// Compares `psi_1` and `psi_2` on `nodes` directions of the positive
/// orthant. Both exponents are homogeneous of the same degree, so the
/// comparison on directions decides the order.
pub fn laplace_ordering(a: &OneSidedModel, b: &OneSidedModel, nodes: usize, tol: f64) -> Result<LaplaceOrder> {
    if a.alpha != b.alpha || a.dim() != b.dim() {
        return Err(Error::KindMismatch("Laplace ordering needs equal exponent and dimension".into()));
    }
    let d = a.dim();
    let mut dirs: Vec<Vec<f64>> = crate::dependence::direction_set(d, nodes.max(4), 11)
        .into_iter()
        .map(|v| v.into_iter().map(f64::abs).collect())
        .collect();
    dirs.extend((0..d).map(|i| crate::linalg::basis(d, i)));
    let (mut le, mut ge) = (true, true);
    for u in &dirs {
        let (pa, pb) = (a.exponent_raw(u), b.exponent_raw(u));
        let slack = tol * pa.max(pb);
        le &= pa >= pb - slack;
        ge &= pa <= pb + slack;
    }
    Ok(match (le, ge) {
        (true, _) => LaplaceOrder::Le,
        (false, true) => LaplaceOrder::Ge,
        _ => LaplaceOrder::Incomparable,
    })
}

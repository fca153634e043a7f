//! Spherical, radial, and one-dimensional integration rules.
//!
//! Every sphere rule is antithetic: for each node `u` the node `-u` is also
//! present with the same weight. Sums are reduced pairwise in node order so
//! results are bit-reproducible for a fixed rule.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::special::omega;

/// A value together with a nonnegative error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, error: 0.0 }
    }

    pub fn new(value: f64, error: f64) -> Self {
        Estimate { value, error: error.abs() }
    }

    /// Applies a differentiable map, propagating the error to first order.
    pub fn map(self, f: impl Fn(f64) -> f64) -> Self {
        let v = f(self.value);
        let h = self.error.max(1e-8 * self.value.abs().max(1e-300));
        let slope = (f(self.value + h) - f(self.value - h)) / (2.0 * h);
        Estimate::new(v, slope.abs() * self.error)
    }

    pub fn scale(self, c: f64) -> Self {
        Estimate::new(self.value * c, self.error * c.abs())
    }
}

/// Pairwise (cascade) summation in slice order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        s
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * pp * pp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// What a sphere rule integrates exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Exactness {
    /// Trigonometric polynomials up to this degree on the circle.
    Trigonometric(usize),
    /// Polynomials up to this total degree on `S^2`.
    Polynomial(usize),
    /// Equal-weight random antithetic directions.
    Randomized { seed: u64 },
    /// Gauss–Legendre panels between breakpoints on the circle.
    Piecewise { panels: usize },
}

#[derive(Debug, Clone)]
enum Coarse {
    Subset { indices: Vec<usize>, weights: Vec<f64> },
    Separate(Box<SphereRule>),
    Stochastic,
}

/// Quadrature nodes and weights on the unit sphere `S^{d-1}`.
#[derive(Debug, Clone)]
pub struct SphereRule {
    dim: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    antipodes: Vec<usize>,
    exactness: Exactness,
    coarse: Coarse,
}

impl SphereRule {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Index of the node `-u` for node `i`.
    pub fn antipode(&self, i: usize) -> usize {
        self.antipodes[i]
    }

    pub fn exactness(&self) -> &Exactness {
        &self.exactness
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[f64]> {
        self.nodes.chunks(self.dim)
    }

    /// Total weight; equals the sphere area up to rounding.
    pub fn total_weight(&self) -> f64 {
        pairwise_sum(&self.weights)
    }
}

fn circle_nodes(n: usize, offset: f64) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    let h = 2.0 * PI / n as f64;
    let mut nodes = Vec::with_capacity(2 * n);
    for j in 0..n {
        let t = (j as f64 + offset) * h;
        nodes.push(t.cos());
        nodes.push(t.sin());
    }
    let weights = vec![h; n];
    let antipodes = (0..n).map(|j| (j + n / 2) % n).collect();
    (nodes, weights, antipodes)
}

/// Equally spaced angles `2 pi j / n` with weights `2 pi / n`.
pub fn circle_rule(n: usize) -> Result<SphereRule> {
    if n < 8 {
        return invalid(format!("circle rule needs at least 8 nodes, got {n}"));
    }
    if n % 2 == 1 {
        return invalid(format!("circle rule needs an even node count, got {n}"));
    }
    let (nodes, weights, antipodes) = circle_nodes(n, 0.0);
    let half = n / 2;
    let coarse = Coarse::Subset {
        indices: (0..half).map(|j| 2 * j).collect(),
        weights: vec![2.0 * PI / half as f64; half],
    };
    Ok(SphereRule {
        dim: 2,
        nodes,
        weights,
        antipodes,
        exactness: Exactness::Trigonometric(n - 1),
        coarse,
    })
}

/// Circle rule with angles `2 pi (j + 1/2) / n`; for `n` divisible by four no
/// node lies on a coordinate axis and each axis sits midway between a
/// symmetric pair of nodes.
pub fn circle_rule_offset(n: usize) -> Result<SphereRule> {
    if n < 8 || n % 4 != 0 {
        return invalid(format!("offset circle rule needs n >= 8 divisible by 4, got {n}"));
    }
    let (nodes, weights, antipodes) = circle_nodes(n, 0.5);
    let coarse_rule = {
        // Keep the coarse count divisible by four so it also avoids the axes.
        let m = (n / 8 * 4).max(4);
        let (nodes, weights, antipodes) = circle_nodes(m, 0.5);
        SphereRule {
            dim: 2,
            nodes,
            weights,
            antipodes,
            exactness: Exactness::Trigonometric(m - 1),
            coarse: Coarse::Stochastic,
        }
    };
    Ok(SphereRule {
        dim: 2,
        nodes,
        weights,
        antipodes,
        exactness: Exactness::Trigonometric(n - 1),
        coarse: Coarse::Separate(Box::new(coarse_rule)),
    })
}

fn arc_nodes(breaks: &[f64], per_pi: usize, halve: bool) -> (Vec<f64>, Vec<f64>, usize) {
    let mut half_nodes = Vec::new();
    let mut half_weights = Vec::new();
    for (i, &a) in breaks.iter().enumerate() {
        let b = if i + 1 < breaks.len() { breaks[i + 1] } else { breaks[0] + PI };
        let mut m = ((per_pi as f64) * (b - a) / PI).ceil().max(2.0) as usize;
        if halve {
            m = m.div_ceil(2).max(2);
        }
        let (x, w) = gauss_legendre(m);
        for (xi, wi) in x.iter().zip(&w) {
            half_nodes.push(0.5 * (a + b) + 0.5 * (b - a) * xi);
            half_weights.push(0.5 * (b - a) * wi);
        }
    }
    let k = half_nodes.len();
    let mut nodes = Vec::with_capacity(4 * k);
    let mut weights = Vec::with_capacity(2 * k);
    for shift in [0.0, PI] {
        for (t, w) in half_nodes.iter().zip(&half_weights) {
            nodes.push((t + shift).cos());
            nodes.push((t + shift).sin());
            weights.push(*w);
        }
    }
    (nodes, weights, k)
}

/// Circle rule made of Gauss–Legendre panels between the given angles
/// (taken modulo `pi`, so every break also holds at its antipode), with
/// about `n` nodes in total. Integrands that are smooth between the breaks
/// converge spectrally even when they have kinks at the breaks.
pub fn arc_rule(breaks: &[f64], n: usize) -> Result<SphereRule> {
    if n < 8 {
        return invalid(format!("arc rule needs at least 8 nodes, got {n}"));
    }
    let mut b: Vec<f64> = breaks.iter().filter(|t| t.is_finite()).map(|t| t.rem_euclid(PI)).collect();
    if b.is_empty() {
        b.push(0.0);
    }
    b.sort_by(f64::total_cmp);
    b.dedup_by(|x, y| (*x - *y).abs() < 1e-13);
    if b.len() > 1 && (b[0] + PI - b[b.len() - 1]) < 1e-13 {
        b.pop();
    }
    let per_pi = n / 2;
    let build = |halve: bool| {
        let (nodes, weights, k) = arc_nodes(&b, per_pi, halve);
        let antipodes = (0..2 * k).map(|i| (i + k) % (2 * k)).collect();
        SphereRule {
            dim: 2,
            nodes,
            weights,
            antipodes,
            exactness: Exactness::Piecewise { panels: b.len() },
            coarse: Coarse::Stochastic,
        }
    };
    let mut rule = build(false);
    rule.coarse = Coarse::Separate(Box::new(build(true)));
    Ok(rule)
}

fn product_rule(m: usize) -> SphereRule {
    let (z, wz) = gauss_legendre(m);
    let na = 2 * m;
    let h = 2.0 * PI / na as f64;
    let mut nodes = Vec::with_capacity(3 * m * na);
    let mut weights = Vec::with_capacity(m * na);
    for (i, &zi) in z.iter().enumerate() {
        let r = (1.0 - zi * zi).sqrt();
        for j in 0..na {
            let t = (j as f64 + 0.5) * h;
            nodes.push(r * t.cos());
            nodes.push(r * t.sin());
            nodes.push(zi);
            weights.push(wz[i] * h);
        }
    }
    let antipodes = (0..m * na)
        .map(|k| {
            let (i, j) = (k / na, k % na);
            (m - 1 - i) * na + (j + na / 2) % na
        })
        .collect();
    SphereRule {
        dim: 3,
        nodes,
        weights,
        antipodes,
        exactness: Exactness::Polynomial(2 * m - 1),
        coarse: Coarse::Stochastic,
    }
}

fn random_rule(d: usize, n: usize, seed: u64) -> SphereRule {
    let pairs = n / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes = Vec::with_capacity(d * 2 * pairs);
    for _ in 0..pairs {
        let mut v: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        nodes.extend_from_slice(&v);
        nodes.extend(v.iter().map(|x| -x));
    }
    let w = omega(d) / (2 * pairs) as f64;
    SphereRule {
        dim: d,
        nodes,
        weights: vec![w; 2 * pairs],
        antipodes: (0..2 * pairs).map(|k| k ^ 1).collect(),
        exactness: Exactness::Randomized { seed },
        coarse: Coarse::Stochastic,
    }
}

/// Rule on `S^{d-1}`.
///
/// `d = 2` uses `level` equally spaced angles, `d = 3` uses `level`
/// Gauss–Legendre heights times `2 level` azimuths, and `d >= 4` uses
/// `level` random antithetic directions drawn from `seed`.
pub fn sphere_rule(d: usize, level: usize, seed: Option<u64>) -> Result<SphereRule> {
    match d {
        0 | 1 => invalid(format!("sphere rules need d >= 2, got {d}")),
        2 => circle_rule(level),
        3 => {
            if level < 2 || level % 2 == 1 {
                return invalid(format!("product rule needs an even level >= 2, got {level}"));
            }
            let mut rule = product_rule(level);
            if level >= 4 {
                let half = (level / 2) + (level / 2) % 2;
                rule.coarse = Coarse::Separate(Box::new(product_rule(half)));
            }
            Ok(rule)
        }
        _ => {
            let seed = seed.ok_or_else(|| {
                Error::InvalidArgument(format!("a seed is required for sphere rules in dimension {d}"))
            })?;
            if level < 4 {
                return invalid(format!("random rule needs at least 4 nodes, got {level}"));
            }
            Ok(random_rule(d, level, seed))
        }
    }
}

/// Roughly uniform antipodal directions on `S^2`: a Fibonacci lattice on the
/// upper hemisphere together with the reflected points.
pub fn fibonacci_pairs(pairs: usize) -> Vec<[f64; 3]> {
    let golden = PI * (3.0 - 5f64.sqrt());
    let mut out = Vec::with_capacity(2 * pairs);
    for k in 0..pairs {
        let z = 1.0 - (k as f64 + 0.5) / pairs as f64;
        let r = (1.0 - z * z).sqrt();
        let t = golden * k as f64;
        let u = [r * t.cos(), r * t.sin(), z];
        out.push(u);
        out.push([-u[0], -u[1], -u[2]]);
    }
    out
}

/// Default quadrature resolution per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadLevels {
    /// Angles on the circle.
    pub circle: usize,
    /// Gauss–Legendre heights for `S^2` (azimuths are twice this).
    pub product: usize,
    /// Random directions for `d >= 4`.
    pub random: usize,
    /// Seed for randomized rules.
    pub seed: Option<u64>,
}

impl Default for QuadLevels {
    fn default() -> Self {
        QuadLevels { circle: 512, product: 64, random: 200_000, seed: None }
    }
}

impl QuadLevels {
    pub fn rule(&self, d: usize) -> Result<SphereRule> {
        match d {
            2 => circle_rule(self.circle),
            3 => sphere_rule(3, self.product, None),
            _ => sphere_rule(d, self.random, self.seed),
        }
    }
}

fn eval_nodes(rule: &SphereRule, f: &impl Fn(&[f64]) -> f64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(rule.len());
    for i in 0..rule.len() {
        let v = f(rule.node(i));
        if !v.is_finite() {
            return Err(Error::NonFinite(i));
        }
        out.push(v);
    }
    Ok(out)
}

fn weighted_sum(weights: &[f64], values: &[f64]) -> f64 {
    let terms: Vec<f64> = weights.iter().zip(values).map(|(w, v)| w * v).collect();
    pairwise_sum(&terms)
}

/// Integral of `f` over the sphere with an error estimate.
///
/// Deterministic rules report the difference to a coarser rule; random
/// rules report the standard error of the antithetic pair means.
pub fn integrate_sphere(rule: &SphereRule, f: impl Fn(&[f64]) -> f64) -> Result<Estimate> {
    let values = eval_nodes(rule, &f)?;
    let value = weighted_sum(&rule.weights, &values);
    let error = match &rule.coarse {
        Coarse::Subset { indices, weights } => {
            let sub: Vec<f64> = indices.iter().map(|&i| values[i]).collect();
            (weighted_sum(weights, &sub) - value).abs()
        }
        Coarse::Separate(c) => {
            let cv = eval_nodes(c, &f)?;
            (weighted_sum(&c.weights, &cv) - value).abs()
        }
        Coarse::Stochastic => {
            let mut pair_means = Vec::with_capacity(rule.len() / 2);
            for i in 0..rule.len() {
                let j = rule.antipodes[i];
                if i < j {
                    pair_means.push(0.5 * (values[i] + values[j]));
                }
            }
            let m = pair_means.len() as f64;
            if m < 2.0 {
                0.0
            } else {
                let mean = pairwise_sum(&pair_means) / m;
                let var = pair_means.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
                rule.total_weight() * (var / m).sqrt()
            }
        }
    };
    Ok(Estimate::new(value, error))
}

/// Integral of `f` over the sphere without an error estimate.
pub fn integrate_sphere_value(rule: &SphereRule, f: impl Fn(&[f64]) -> f64) -> Result<f64> {
    let values = eval_nodes(rule, &f)?;
    Ok(weighted_sum(&rule.weights, &values))
}

/// Decay class of a radial integrand on `(0, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TailClass {
    /// Integrand decays like `exp(-r^alpha)`.
    ExpPower(f64),
    /// Integrand decays like `r^{-s}` with `s > 1`.
    Algebraic(f64),
}

/// Double-exponential rule on `(0, inf)`: `r = exp(pi/2 sinh t)`.
#[derive(Debug, Clone)]
pub struct RadialRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub tail: TailClass,
}

/// Builds a radial rule with step `1/level` in the transformed variable.
pub fn radial_rule(tail: TailClass, level: usize) -> Result<RadialRule> {
    if level < 4 {
        return invalid("radial rule level must be at least 4");
    }
    let r_max = match tail {
        TailClass::ExpPower(a) => {
            if !(a > 0.0) {
                return invalid("exponential tail needs a positive exponent");
            }
            (60.0f64).powf(1.0 / a)
        }
        TailClass::Algebraic(s) => {
            if !(s > 1.0) {
                return invalid("algebraic tail needs an exponent above one");
            }
            (40.0 * 10f64.ln() / (s - 1.0)).exp().min(1e300)
        }
    };
    let h = 1.0 / level as f64;
    let t_max = (2.0 * r_max.ln() / PI).asinh();
    let t_min = -(2.0 * 700.0 / PI).asinh();
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let k_min = (t_min / h).floor() as i64;
    let k_max = (t_max / h).ceil() as i64;
    for k in k_min..=k_max {
        let t = k as f64 * h;
        let e = PI / 2.0 * t.sinh();
        let r = e.exp();
        let w = h * r * PI / 2.0 * t.cosh();
        if r > 0.0 && w > 0.0 && w.is_finite() {
            nodes.push(r);
            weights.push(w);
        }
    }
    Ok(RadialRule { nodes, weights, tail })
}

/// Integral of `f` over `(0, inf)` with the radial rule.
pub fn integrate_radial(rule: &RadialRule, f: impl Fn(f64) -> f64) -> Result<f64> {
    let mut terms = Vec::with_capacity(rule.nodes.len());
    for (i, (&r, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        let v = f(r);
        if !v.is_finite() {
            return Err(Error::NonFinite(i));
        }
        terms.push(w * v);
    }
    Ok(pairwise_sum(&terms))
}

const GK_X: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const GK_WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = GK_WK[7] * fc;
    let mut g = GK_WG[3] * fc;
    for i in 0..7 {
        let dx = h * GK_X[i];
        let s = f(c - dx) + f(c + dx);
        k += GK_WK[i] * s;
        if i % 2 == 1 {
            g += GK_WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) integration on a finite interval.
pub fn integrate_adaptive(f: impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Estimate {
    let mut stack = vec![(a, b, 0usize)];
    let (whole, _) = gk15(&f, a, b);
    let scale = whole.abs();
    let mut total = 0.0;
    let mut err = 0.0;
    let mut parts = Vec::new();
    while let Some((lo, hi, depth)) = stack.pop() {
        let (v, e) = gk15(&f, lo, hi);
        let local_tol = (abs_tol.max(rel_tol * scale)) * (hi - lo) / (b - a);
        if e <= local_tol || depth >= 48 {
            parts.push(v);
            err += e;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    total += pairwise_sum(&parts);
    Estimate::new(total, err)
}

/// Tanh–sinh rule on `(a, b)`. The integrand receives the point and its
/// distances to both endpoints so that endpoint singularities can be
/// evaluated without cancellation. Points closer than `cut` (relative to
/// the interval length) to an endpoint are skipped.
pub fn integrate_tanh_sinh(f: impl Fn(f64, f64, f64) -> f64, a: f64, b: f64, level: usize, cut: f64) -> f64 {
    let len = b - a;
    let h = 1.0 / level as f64;
    let mut terms = Vec::new();
    let kmax = (4.0 / h) as i64;
    for k in -kmax..=kmax {
        let t = k as f64 * h;
        let u = PI / 2.0 * t.sinh();
        // Fractions of the interval from each endpoint.
        let fa = 1.0 / (1.0 + (-2.0 * u).exp());
        let fb = 1.0 / (1.0 + (2.0 * u).exp());
        if fa < cut || fb < cut {
            continue;
        }
        let w = len * PI / 2.0 * t.cosh() * fa * fb * 2.0 * h;
        let x = if fa < 0.5 { a + len * fa } else { b - len * fb };
        terms.push(w * f(x, len * fa, len * fb));
    }
    pairwise_sum(&terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::kappa;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn arc_rule_resolves_kinked_integrands() {
        let breaks = [0.3, 0.3 + PI / 2.0];
        let r = arc_rule(&breaks, 256).unwrap();
        assert!((r.total_weight() - 2.0 * PI).abs() < 1e-13);
        // int |cos(t - 0.3)|^1.5 dt over the circle.
        let v = integrate_sphere(&r, |u| (u[0] * 0.3f64.cos() + u[1] * 0.3f64.sin()).abs().powf(1.5)).unwrap();
        let want = crate::special::sphere_abs_moment(2, 1.5);
        assert!((v.value - want).abs() < 1e-8, "{}", v.value - want);
        for i in 0..r.len() {
            let (a, b) = (r.node(i), r.node(r.antipode(i)));
            assert!((a[0] + b[0]).abs() < 1e-15 && (a[1] + b[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn circle_rule_rejects_bad_counts() {
        assert!(circle_rule(4).is_err());
        assert!(circle_rule(9).is_err());
        assert!(circle_rule_offset(18).is_err());
    }

    #[test]
    fn circle_rule_trig_exactness() {
        let r = circle_rule(64).unwrap();
        let one = integrate_sphere(&r, |_| 1.0).unwrap();
        assert!((one.value - 2.0 * PI).abs() < 1e-14);
        let c2 = integrate_sphere(&r, |u| u[0] * u[0]).unwrap();
        assert!((c2.value - PI).abs() < 1e-14);
    }

    #[test]
    fn offset_rule_avoids_axes() {
        let r = circle_rule_offset(512).unwrap();
        for u in r.nodes() {
            assert!(u[0].abs() > 1e-3 && u[1].abs() > 1e-3);
        }
    }

    #[test]
    fn product_rule_moments() {
        let r = sphere_rule(3, 16, None).unwrap();
        assert!((r.total_weight() - 4.0 * PI).abs() < 1e-10);
        let z2 = integrate_sphere(&r, |u| u[2] * u[2]).unwrap();
        assert!((z2.value - 4.0 * PI / 3.0).abs() < 1e-10);
        for u in r.nodes() {
            let n: f64 = u.iter().map(|x| x * x).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn random_rule_requires_seed_and_matches_abs_moment() {
        assert!(sphere_rule(5, 1000, None).is_err());
        let r = sphere_rule(5, 100_000, Some(7)).unwrap();
        let est = integrate_sphere(&r, |u| u[0].abs()).unwrap();
        // int_{S^{d-1}} |<u,y>| du = 2 pi^{(d-1)/2} / Gamma((d+1)/2) |y|
        let exact = 2.0 * PI.powf(2.0) / crate::special::gamma(3.0);
        assert!((est.value - exact).abs() < 3.0 * est.error.max(1e-12));
        assert!((r.total_weight() - 5.0 * kappa(5)).abs() < 1e-10 * r.total_weight());
    }

    #[test]
    fn antipodes_are_consistent() {
        for rule in [
            circle_rule(16).unwrap(),
            circle_rule_offset(16).unwrap(),
            sphere_rule(3, 8, None).unwrap(),
            sphere_rule(4, 20, Some(1)).unwrap(),
        ] {
            for i in 0..rule.len() {
                let j = rule.antipode(i);
                assert_eq!(rule.weight(i), rule.weight(j));
                for (a, b) in rule.node(i).iter().zip(rule.node(j)) {
                    assert!((a + b).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn radial_rule_reproduces_gamma_integrals() {
        let r = radial_rule(TailClass::ExpPower(1.0), 16).unwrap();
        let v = integrate_radial(&r, |x| (-x).exp()).unwrap();
        assert!((v - 1.0).abs() < 1e-10);
        let r2 = radial_rule(TailClass::ExpPower(2.0), 16).unwrap();
        let v = integrate_radial(&r2, |x| x * (-x * x).exp()).unwrap();
        assert!((v - 0.5).abs() < 1e-10);
        // int_0^inf r^{d-1} exp(-r^alpha) dr = Gamma(d/alpha)/alpha; alpha = 1, d = 2 gives 1.
        let v = integrate_radial(&r, |x| x * (-x).exp()).unwrap();
        assert!((v - 1.0).abs() < 1e-9);
        let ra = radial_rule(TailClass::Algebraic(3.0), 16).unwrap();
        let v = integrate_radial(&ra, |x| 1.0 / (1.0 + x).powi(3)).unwrap();
        assert!((v - 0.5).abs() < 1e-10);
    }

    #[test]
    fn level_doubling_is_within_reported_error() {
        let f = |u: &[f64]| (u[0] + 0.3 * u[1]).exp();
        let a = integrate_sphere(&circle_rule(16).unwrap(), f).unwrap();
        let b = integrate_sphere(&circle_rule(32).unwrap(), f).unwrap();
        assert!((a.value - b.value).abs() <= a.error + 1e-15);
        let g = |u: &[f64]| (u[0] * u[2] + u[1]).cos();
        let a = integrate_sphere(&sphere_rule(3, 8, None).unwrap(), g).unwrap();
        let b = integrate_sphere(&sphere_rule(3, 16, None).unwrap(), g).unwrap();
        assert!((a.value - b.value).abs() <= a.error + 1e-14);
    }

    #[test]
    fn adaptive_and_tanh_sinh() {
        let e = integrate_adaptive(|x| x.sqrt(), 0.0, 1.0, 1e-13, 1e-13);
        assert!((e.value - 2.0 / 3.0).abs() < 1e-12);
        let v = integrate_tanh_sinh(|_, da, _| da.powf(-0.7), 0.0, 1.0, 32, 1e-300);
        assert!((v - 1.0 / 0.3).abs() < 1e-8, "{v}");
    }

    #[test]
    fn nonfinite_values_are_reported() {
        let r = circle_rule(8).unwrap();
        let e = integrate_sphere(&r, |u| if u[0] > 0.99 { f64::NAN } else { 1.0 });
        assert_eq!(e.unwrap_err(), Error::NonFinite(0));
    }
}

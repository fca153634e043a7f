//! Covariation, regression, orthogonality and independence diagnostics.
//!
//! Every quantity here is read off the gauge: for `alpha > 1` the gauge is
//! the support function of the zonoid `K`, and its gradient is the support
//! point `T(K, u)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::geometry::{orthogonal_complement, support_point};
use crate::linalg::{dot, norm};
use crate::optim::{golden_section, nelder_mead};
use crate::quadrature::{QuadLevels, SphereRule};
use crate::spectral::StableModel;

fn ensure_alpha_above_one(model: &StableModel, what: &str) -> Result<()> {
    if model.alpha() <= 1.0 {
        return invalid(format!("{what} needs alpha > 1, got {}", model.alpha()));
    }
    Ok(())
}

fn ensure_convex_range(model: &StableModel, what: &str) -> Result<()> {
    if model.alpha() < 1.0 {
        return Err(Error::Unsupported(format!("{what} needs a convex gauge, i.e. alpha >= 1")));
    }
    if !model.is_symmetric() {
        return Err(Error::KindMismatch(format!("{what} needs a symmetric model")));
    }
    Ok(())
}

/// Unit directions in `R^dim`: `+-1` on the line, `n` equally spaced
/// angles on the circle, `n` seeded random directions otherwise.
pub fn direction_set(dim: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    match dim {
        0 => Vec::new(),
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..n)
            .map(|k| {
                let t = 2.0 * PI * (k as f64 + 0.5) / n as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n)
                .map(|_| {
                    let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                    let r = norm(&v);
                    v.into_iter().map(|x| x / r).collect()
                })
                .collect()
        }
    }
}

/// Covariation `[<xi,u1>, <xi,u2>]_alpha = ||u2||^{alpha-1} <T(K,u2), u1>`.
pub fn covariation(model: &StableModel, u1: &[f64], u2: &[f64]) -> Result<f64> {
    ensure_alpha_above_one(model, "covariation")?;
    if u1.len() != model.dim() {
        return invalid("first direction has the wrong dimension");
    }
    if norm(u2) == 0.0 {
        return invalid("second direction must be nonzero");
    }
    let t = support_point(model, u2)?;
    Ok(model.gauge(u2)?.powf(model.alpha() - 1.0) * dot(&t, u1))
}

/// Slope of `E(xi_1 | xi_2)` for a planar model: `x_1 / x_2` with
/// `(x_1, x_2) = T(K, e_2)`.
pub fn regression_coefficient(model: &StableModel) -> Result<f64> {
    ensure_alpha_above_one(model, "regression_coefficient")?;
    if model.dim() != 2 {
        return invalid("regression_coefficient needs d = 2");
    }
    let t = support_point(model, &[0.0, 1.0])?;
    if t[1] == 0.0 {
        return Err(Error::InfiniteVolume);
    }
    Ok(t[0] / t[1])
}

/// Outcome of the multiple-regression linearity test.
#[derive(Debug, Clone, Serialize)]
pub struct LinearityReport {
    pub is_linear: bool,
    /// Normal of the fitted hyperplane, with the regressed coordinate equal to 1.
    pub normal: Vec<f64>,
    /// Largest `|<grad h(u), a>| / (|grad h(u)| |a|)` over the test nodes.
    pub residual: f64,
}

/// Tests whether `E(xi_axis | other coordinates)` is linear: the support
/// points `T(K,u)` for `u` orthogonal to `e_axis` must lie in a hyperplane
/// whose normal `a` has `a_axis = 1`.
pub fn regression_linearity_check(
    model: &StableModel,
    axis: usize,
    levels: &QuadLevels,
    tol: f64,
) -> Result<LinearityReport> {
    ensure_alpha_above_one(model, "regression_linearity_check")?;
    let d = model.dim();
    if d < 2 || axis >= d {
        return invalid(format!("axis {axis} is out of range for d = {d}"));
    }
    let e = crate::linalg::basis(d, axis);
    let comp = orthogonal_complement(&e)?;
    let dirs: Vec<Vec<f64>> = if d == 2 {
        direction_set(1, 0, 0)
    } else {
        let rule: SphereRule = if d - 1 >= 4 {
            crate::quadrature::sphere_rule(d - 1, levels.random.min(20_000), Some(levels.seed.unwrap_or(0)))?
        } else {
            levels.rule(d - 1)?
        };
        rule.nodes().map(|v| v.to_vec()).collect()
    };
    let others: Vec<usize> = (0..d).filter(|i| *i != axis).collect();
    let mut grads = Vec::with_capacity(dirs.len());
    for v in &dirs {
        let u = (&comp * DVector::from_column_slice(v)).as_slice().to_vec();
        grads.push(support_point(model, &u)?);
    }
    let a_mat = DMatrix::from_fn(grads.len(), d - 1, |j, k| grads[j][others[k]]);
    let b = DVector::from_fn(grads.len(), |j, _| -grads[j][axis]);
    let coef = a_mat
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::NoConvergence(format!("least-squares fit failed: {e}")))?;
    let mut normal = vec![0.0; d];
    normal[axis] = 1.0;
    for (k, &i) in others.iter().enumerate() {
        normal[i] = coef[k];
    }
    let an = norm(&normal);
    let residual = grads.iter().map(|g| dot(g, &normal).abs() / (norm(g) * an)).fold(0.0, f64::max);
    Ok(LinearityReport { is_linear: residual < tol, normal, residual })
}

/// Whether `xi_2` is James orthogonal to `xi_1`: the star body lies in the
/// strip `|x_2| <= rho_F(e_2)`. The largest `rho_F(u) |u_2|` over the
/// rule nodes is refined by a local search before the comparison.
pub fn james_orthogonal_bivariate(model: &StableModel, rule: &SphereRule, tol: f64) -> Result<bool> {
    ensure_convex_range(model, "james_orthogonal_bivariate")?;
    if model.dim() != 2 || rule.dim() != 2 {
        return invalid("james_orthogonal_bivariate needs d = 2");
    }
    let height = |t: f64| {
        let u = [t.cos(), t.sin()];
        model.radial(&u) * u[1].abs()
    };
    let top = model.radial(&[0.0, 1.0]);
    if !top.is_finite() {
        return Err(Error::InfiniteVolume);
    }
    let mut best = (0.0, f64::NEG_INFINITY);
    for u in rule.nodes() {
        let t = u[1].atan2(u[0]);
        let h = height(t);
        if h > best.1 {
            best = (t, h);
        }
    }
    let step = 4.0 * PI / rule.len() as f64;
    let (_, neg) = golden_section(|t| -height(t), best.0 - step, best.0 + step, 1e-13);
    let peak = best.1.max(-neg);
    Ok(peak <= top * (1.0 + tol))
}

/// Outcome of the block orthogonality test.
#[derive(Debug, Clone, Serialize)]
pub struct JamesReport {
    /// `||u + v|| >= ||v||` for every tested `u` in the first block and
    /// `v` in the second.
    pub strong: bool,
    /// The same inequality along `u = c (1,..,1,0,..)`, `v = (0,..,1,..,1)`.
    pub weak: bool,
    /// Smallest observed `||u + v|| / ||v||`.
    pub worst_ratio: f64,
}

/// Smallest `||c u + v||` over `c`, which is convex in `c` for `alpha >= 1`.
fn min_along(model: &StableModel, u: &[f64], v: &[f64]) -> f64 {
    let gv = model.gauge_raw(v);
    let gu = model.gauge_raw(u);
    let g = |c: f64| {
        let w: Vec<f64> = u.iter().zip(v).map(|(a, b)| c * a + b).collect();
        model.gauge_raw(&w)
    };
    if !(gu > 0.0) {
        return g(0.0);
    }
    let c_max = 2.0 * gv / gu;
    let (_, m) = golden_section(g, -c_max, c_max, 1e-12 * (1.0 + c_max));
    m.min(g(0.0))
}

/// Strong and weak James orthogonality of the last `d2` coordinates to the
/// first `d1`, using `nodes` directions in each block.
pub fn strong_james_check(model: &StableModel, d1: usize, d2: usize, nodes: usize, tol: f64) -> Result<JamesReport> {
    ensure_convex_range(model, "strong_james_check")?;
    if d1 == 0 || d2 == 0 || d1 + d2 != model.dim() {
        return invalid(format!("block sizes {d1} + {d2} do not match d = {}", model.dim()));
    }
    let embed = |x: &[f64], first: bool| -> Vec<f64> {
        let mut w = vec![0.0; d1 + d2];
        let off = if first { 0 } else { d1 };
        w[off..off + x.len()].copy_from_slice(x);
        w
    };
    let us = direction_set(d1, nodes, 1);
    let vs = direction_set(d2, nodes, 2);
    let mut worst = f64::INFINITY;
    for u in &us {
        let u = embed(u, true);
        for v in &vs {
            let v = embed(v, false);
            worst = worst.min(min_along(model, &u, &v) / model.gauge_raw(&v));
        }
    }
    let u = embed(&vec![1.0; d1], true);
    let v = embed(&vec![1.0; d2], false);
    let weak_ratio = min_along(model, &u, &v) / model.gauge_raw(&v);
    Ok(JamesReport { strong: worst >= 1.0 - tol, weak: weak_ratio >= 1.0 - tol, worst_ratio: worst.min(weak_ratio) })
}

/// Whether the coordinates in `block` are independent of the rest:
/// `||(u1, u2)||^alpha = ||u1||^alpha + ||u2||^alpha` on node pairs, with
/// several relative scalings of the two parts.
pub fn independence_check(model: &StableModel, block: &[usize], nodes: usize, tol: f64) -> Result<bool> {
    if !model.is_symmetric() {
        return Err(Error::KindMismatch("independence_check needs a symmetric model".into()));
    }
    let d = model.dim();
    let mut in_block = vec![false; d];
    for &i in block {
        if i >= d || in_block[i] {
            return invalid(format!("block index {i} is out of range or repeated"));
        }
        in_block[i] = true;
    }
    let first: Vec<usize> = (0..d).filter(|i| in_block[*i]).collect();
    let second: Vec<usize> = (0..d).filter(|i| !in_block[*i]).collect();
    if first.is_empty() || second.is_empty() {
        return invalid("both parts of the partition must be nonempty");
    }
    let place = |x: &[f64], idx: &[usize], scale: f64, w: &mut [f64]| {
        for (k, &i) in idx.iter().enumerate() {
            w[i] = scale * x[k];
        }
    };
    let us = direction_set(first.len(), nodes, 3);
    let vs = direction_set(second.len(), nodes, 4);
    for u in &us {
        for v in &vs {
            for t in [0.25, 1.0, 4.0] {
                let mut a = vec![0.0; d];
                let mut b = vec![0.0; d];
                place(u, &first, 1.0, &mut a);
                place(v, &second, t, &mut b);
                let joint: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
                let (pa, pb, pj) = (model.gauge_pow_raw(&a), model.gauge_pow_raw(&b), model.gauge_pow_raw(&joint));
                if (pj - pa - pb).abs() > tol * (pa + pb) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Whether to minimize or maximize the gauge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Min,
    Max,
}

/// Optimal portfolio weights.
#[derive(Debug, Clone, Serialize)]
pub struct Portfolio {
    pub weights: Vec<f64>,
    /// Gauge of the weights, the scale of `<xi, weights>`.
    pub gauge: f64,
    /// `E |<xi, weights>|^lambda`.
    pub moment: f64,
    /// Largest descent rate along the constraint tangent directions.
    pub stationarity: f64,
    pub certified: bool,
}

/// Halton point `index` in `[0, 1)^dim`.
fn halton(index: usize, dim: usize) -> Vec<f64> {
    const PRIMES: [usize; 4] = [2, 3, 5, 7];
    (0..dim)
        .map(|k| {
            let b = PRIMES[k];
            let (mut i, mut f, mut r) = (index, 1.0, 0.0);
            while i > 0 {
                f /= b as f64;
                r += f * (i % b) as f64;
                i /= b;
            }
            r
        })
        .collect()
}

const STARTS: usize = 16;
const STATIONARITY: f64 = 1e-8;

/// Extremizes the gauge, hence `E|<xi,u>|^lambda`, over
/// `{u : <u, mu> = r, <u, 1> = 1}` for `d <= 4`.
pub fn portfolio_direction(model: &StableModel, mu: &[f64], r: f64, lambda: f64, sense: Sense) -> Result<Portfolio> {
    let d = model.dim();
    if d > 4 {
        return Err(Error::Unsupported(format!("portfolio search supports d <= 4, got {d}")));
    }
    if mu.len() != d {
        return invalid("mean vector has the wrong dimension");
    }
    if !(lambda > 0.0 && lambda < model.alpha()) {
        return invalid(format!("lambda must lie in (0, {}), got {lambda}", model.alpha()));
    }
    let cons = DMatrix::from_fn(2, d, |i, j| if i == 0 { mu[j] } else { 1.0 });
    let rhs = DVector::from_vec(vec![r, 1.0]);
    let svd = cons.clone().svd(true, true);
    let u0 = svd.solve(&rhs, 1e-12).map_err(|e| Error::NoConvergence(e.to_string()))?;
    if (&cons * &u0 - &rhs).norm() > 1e-10 * (1.0 + rhs.norm()) {
        return invalid("the constraints are inconsistent");
    }
    let rank = svd.singular_values.iter().filter(|s| **s > 1e-12 * svd.singular_values.max()).count();
    let v_t = svd.v_t.clone().ok_or_else(|| Error::NoConvergence("SVD failed".into()))?;
    let full = {
        // Complete the row space to an orthonormal basis of R^d.
        let mut rows: Vec<Vec<f64>> = (0..rank).map(|i| v_t.row(i).iter().cloned().collect()).collect();
        for i in 0..d {
            let mut v = crate::linalg::basis(d, i);
            for b in &rows {
                let c = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
            let n = norm(&v);
            if n > 1e-8 {
                rows.push(v.into_iter().map(|x| x / n).collect());
            }
        }
        rows
    };
    let null: Vec<Vec<f64>> = full[rank..d].to_vec();
    let k = null.len();
    let point = |z: &[f64]| -> Vec<f64> {
        (0..d).map(|i| u0[i] + null.iter().zip(z).map(|(b, c)| c * b[i]).sum::<f64>()).collect()
    };
    if k > 0 && sense == Sense::Max {
        return invalid("the gauge is unbounded above on a feasible set of positive dimension");
    }
    let objective = |z: &[f64]| model.gauge_raw(&point(z));
    let best = if k == 0 {
        Vec::new()
    } else {
        let spread = 1.0 + u0.norm();
        let mut best: Option<(Vec<f64>, f64)> = None;
        for s in 0..STARTS {
            let z0: Vec<f64> = halton(s, k).into_iter().map(|h| spread * (2.0 * h - 1.0) * (s > 0) as u8 as f64).collect();
            let (z, v) = nelder_mead(objective, &z0, 0.1 * spread, 1e-13, 1e-15, 20_000);
            if best.as_ref().map_or(true, |b| v < b.1) {
                best = Some((z, v));
            }
        }
        best.map(|b| b.0).unwrap_or_default()
    };
    let u = point(&best);
    let g = model.gauge(&u)?;
    let h = 1e-6 * (1.0 + norm(&u));
    let mut stationarity: f64 = 0.0;
    for dir in &null {
        for sign in [1.0, -1.0] {
            let w: Vec<f64> = u.iter().zip(dir).map(|(x, y)| x + sign * h * y).collect();
            stationarity = stationarity.max((g - model.gauge_raw(&w)) / h);
        }
    }
    let moment = crate::moments::scalar_moment(model, &u, lambda)?.value;
    Ok(Portfolio { weights: u, gauge: g, moment, stationarity, certified: stationarity <= STATIONARITY })
}

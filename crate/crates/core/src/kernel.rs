//! The radial Fourier kernel `phi(k) = int_0^inf cos(k s) exp(-s^alpha) s^{d-1} ds`.
//!
//! Values on `[0, SPLIT]` come from a Chebyshev panel table built once per
//! `(alpha, d)`; each table node is evaluated on a rotated contour where the
//! integrand decays without oscillating much. Beyond `SPLIT` the asymptotic
//! series in `k^{-(d + j alpha)}` is used.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{invalid, Result};
use crate::quadrature::{radial_rule, RadialRule, TailClass};
use crate::special::ln_gamma;
use crate::tolerances::KERNEL_ABS;

const SPLIT: f64 = 12.0;
const CHEB_N: usize = 32;
const START_PANELS: [f64; 6] = [0.0, 1.0, 2.0, 4.0, 8.0, SPLIT];
const MIN_WIDTH: f64 = 1e-7;

/// Direct evaluation of the kernel by contour rotation.
pub(crate) struct ContourKernel {
    alpha: f64,
    dim: usize,
    theta: f64,
    rule: RadialRule,
}

impl ContourKernel {
    pub(crate) fn new(alpha: f64, dim: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) || dim == 0 {
            return invalid(format!("kernel needs alpha in (0, 2] and d >= 1, got {alpha}, {dim}"));
        }
        let theta = (PI / 2.0).min(PI / (4.0 * alpha));
        let rule = radial_rule(TailClass::ExpPower(alpha.min(1.0)), 32)?;
        Ok(ContourKernel { alpha, dim, theta, rule })
    }

    /// Length scale `L` with `k L sin(theta) + L^alpha cos(alpha theta) = 1`.
    fn scale(&self, k: f64) -> f64 {
        let (a, b) = (k * self.theta.sin(), (self.alpha * self.theta).cos());
        let f = |l: f64| a * l + b * l.powf(self.alpha) - 1.0;
        let mut lo = 0.0;
        let mut hi = (1.0 / b).powf(1.0 / self.alpha);
        if a > 0.0 {
            hi = hi.min(1.0 / a);
        }
        while f(hi) < 0.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-16 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    pub(crate) fn eval(&self, k: f64) -> f64 {
        let k = k.abs();
        let l = self.scale(k);
        let (st, ct) = self.theta.sin_cos();
        let (sa, ca) = (self.alpha * self.theta).sin_cos();
        let la = l.powf(self.alpha);
        let d = self.dim as f64;
        let shift = d * self.theta;
        let mut terms = Vec::with_capacity(self.rule.nodes.len());
        for (&t, &w) in self.rule.nodes.iter().zip(&self.rule.weights) {
            let ta = t.powf(self.alpha);
            let re = -k * l * t * st - la * ta * ca;
            if re < -745.0 {
                continue;
            }
            let im = k * l * t * ct - la * ta * sa;
            terms.push(w * t.powi(self.dim as i32 - 1) * re.exp() * (im + shift).cos());
        }
        l.powf(d) * crate::quadrature::pairwise_sum(&terms)
    }
}

/// Asymptotic series for large `k`.
fn asymptotic(alpha: f64, dim: usize, k: f64) -> f64 {
    let d = dim as f64;
    let lk = k.ln();
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    for j in 0..400 {
        let p = d + j as f64 * alpha;
        let mag = (ln_gamma(p) - ln_gamma(j as f64 + 1.0) - p * lk).exp();
        if mag > prev {
            break;
        }
        prev = mag;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * mag * (PI * p / 2.0).cos();
        if mag < 1e-18 * sum.abs().max(1e-300) || mag < 1e-30 {
            break;
        }
    }
    sum
}

#[derive(Debug, Clone)]
struct Panel {
    a: f64,
    b: f64,
    coef: Vec<f64>,
}

impl Panel {
    fn eval(&self, x: f64) -> f64 {
        let t = (2.0 * x - self.a - self.b) / (self.b - self.a);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coef.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + 0.5 * self.coef[0]
    }
}

fn chebyshev_fit(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (Vec<f64>, f64) {
    let n = CHEB_N;
    let vals: Vec<f64> = (0..n)
        .map(|i| {
            let t = (PI * (i as f64 + 0.5) / n as f64).cos();
            f(0.5 * (a + b) + 0.5 * (b - a) * t)
        })
        .collect();
    let coef: Vec<f64> = (0..n)
        .map(|j| {
            2.0 / n as f64
                * vals
                    .iter()
                    .enumerate()
                    .map(|(i, v)| v * (PI * j as f64 * (i as f64 + 0.5) / n as f64).cos())
                    .sum::<f64>()
        })
        .collect();
    let tail = coef[n - 4..].iter().map(|c| c.abs()).fold(0.0, f64::max);
    (coef, tail)
}

/// Tabulated kernel for one `(alpha, d)`.
#[derive(Debug, Clone)]
pub(crate) struct KernelTable {
    alpha: f64,
    dim: usize,
    panels: Vec<Panel>,
    /// Largest trailing Chebyshev coefficient over all panels.
    pub(crate) error: f64,
}

impl KernelTable {
    fn build(alpha: f64, dim: usize) -> Result<Self> {
        let direct = ContourKernel::new(alpha, dim)?;
        let f = |k: f64| direct.eval(k);
        let mut panels = Vec::new();
        let mut error: f64 = 0.0;
        let mut stack: Vec<(f64, f64)> = START_PANELS.windows(2).rev().map(|w| (w[0], w[1])).collect();
        while let Some((a, b)) = stack.pop() {
            let (coef, tail) = chebyshev_fit(&f, a, b);
            if tail <= 0.1 * KERNEL_ABS || b - a <= MIN_WIDTH {
                error = error.max(tail);
                panels.push(Panel { a, b, coef });
            } else {
                let m = 0.5 * (a + b);
                stack.push((m, b));
                stack.push((a, m));
            }
        }
        Ok(KernelTable { alpha, dim, panels, error })
    }

    pub(crate) fn eval(&self, k: f64) -> f64 {
        let k = k.abs();
        if k >= SPLIT {
            return asymptotic(self.alpha, self.dim, k);
        }
        let idx = self.panels.partition_point(|p| p.b <= k).min(self.panels.len() - 1);
        self.panels[idx].eval(k)
    }

    #[cfg(test)]
    /// `phi(0) = Gamma(d / alpha) / alpha`.
    pub(crate) fn at_zero(&self) -> f64 {
        crate::special::gamma(self.dim as f64 / self.alpha) / self.alpha
    }
}

type Cache = Mutex<HashMap<(u64, usize), Arc<KernelTable>>>;

/// Shared table for `(alpha, d)`, built on first use.
pub(crate) fn kernel_table(alpha: f64, dim: usize) -> Result<Arc<KernelTable>> {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (alpha.to_bits(), dim);
    if let Some(t) = cache.lock().expect("kernel cache poisoned").get(&key) {
        return Ok(t.clone());
    }
    let table = Arc::new(KernelTable::build(alpha, dim)?);
    cache.lock().expect("kernel cache poisoned").insert(key, table.clone());
    Ok(table)
}

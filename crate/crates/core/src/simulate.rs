//! Seeded samplers and Monte Carlo estimation.
//!
//! Every sampler draws from ChaCha8 (rand_chacha 0.9) seeded with the
//! 64-bit user seed. Rows are produced in chunks of [`CHUNK`]; chunk `c`
//! uses stream `c` of the generator, so batches are bit-identical for any
//! number of worker threads.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, Open01, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::linalg::{basis, dot, mat_t_vec};
use crate::onesided::{OneSidedModel, PSumModel};
use crate::quadrature::pairwise_sum;
use crate::special::gamma;
use crate::spectral::{Atom, ExplicitGauge, GaugeSource, Kind, SpectralMeasure, StableModel};

/// Rows per generator stream.
pub const CHUNK: usize = 4096;

/// Name and version of the generator, recorded in reports.
pub const RNG_NAME: &str = "chacha8-rand_chacha-0.9";

/// Draws from a model, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub data: Vec<f64>,
    pub n: usize,
    pub dim: usize,
    pub seed: u64,
    pub alpha: f64,
    pub kind: String,
    pub fingerprint: String,
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl McEstimate {
    /// Plain mean and `sd / sqrt(n)`.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return invalid("empty batch");
        }
        let mean = pairwise_sum(values) / n as f64;
        let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
        let var = if n > 1 { pairwise_sum(&dev) / (n - 1) as f64 } else { 0.0 };
        Ok(McEstimate { mean, se: (var / n as f64).sqrt(), n })
    }

    /// Median of `blocks` block means; the standard error is
    /// `sqrt(pi/2) sd_blocks / sqrt(blocks)`.
    pub fn median_of_means(values: &[f64], blocks: usize) -> Result<Self> {
        let n = values.len();
        if blocks == 0 || n < blocks {
            return invalid("need at least one value per block");
        }
        let size = n / blocks;
        let mut means: Vec<f64> =
            (0..blocks).map(|b| pairwise_sum(&values[b * size..(b + 1) * size]) / size as f64).collect();
        let block = McEstimate::from_values(&means)?;
        means.sort_by(f64::total_cmp);
        let median = if blocks % 2 == 1 {
            means[blocks / 2]
        } else {
            0.5 * (means[blocks / 2 - 1] + means[blocks / 2])
        };
        let sd = block.se * (blocks as f64).sqrt();
        Ok(McEstimate { mean: median, se: (std::f64::consts::FRAC_PI_2).sqrt() * sd / (blocks as f64).sqrt(), n })
    }

    /// `|mean - target| / se`; zero when both the error and the gap vanish.
    pub fn z_score(&self, target: f64) -> f64 {
        let gap = (self.mean - target).abs();
        if gap == 0.0 {
            0.0
        } else {
            gap / self.se
        }
    }
}

impl SampleBatch {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.dim)
    }

    /// Rows as owned vectors.
    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        self.rows().map(|r| r.to_vec()).collect()
    }

    /// Column `j` as a vector.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Writes a metadata line, a header `x1,...,xd`, and one row per draw.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::Io(e.to_string()))?;
        let mut file = std::io::BufWriter::new(file);
        writeln!(
            file,
            "#alpha={};kind={};seed={};fingerprint={}",
            self.alpha, self.kind, self.seed, self.fingerprint
        )
        .map_err(|e| Error::Io(e.to_string()))?;
        let mut w = csv::Writer::from_writer(file);
        let header: Vec<String> = (1..=self.dim).map(|j| format!("x{j}")).collect();
        w.write_record(&header).map_err(|e| Error::Io(e.to_string()))?;
        for r in self.rows() {
            w.write_record(r.iter().map(|x| x.to_string())).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Io(e.to_string()))
    }

    /// Reads a file written by [`SampleBatch::write_csv`].
    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut reader = BufReader::new(file);
        let mut meta = String::new();
        reader.read_line(&mut meta).map_err(|e| Error::Io(e.to_string()))?;
        let meta = meta.trim().strip_prefix('#').ok_or_else(|| Error::Parse("missing metadata line".into()))?;
        let (mut alpha, mut kind, mut seed, mut fingerprint) = (None, None, None, None);
        for field in meta.split(';') {
            let (k, v) = field.split_once('=').ok_or_else(|| Error::Parse(format!("bad metadata field {field:?}")))?;
            match k {
                "alpha" => alpha = Some(v.parse::<f64>().map_err(|e| Error::Parse(format!("alpha: {e}")))?),
                "kind" => kind = Some(v.to_string()),
                "seed" => seed = Some(v.parse::<u64>().map_err(|e| Error::Parse(format!("seed: {e}")))?),
                "fingerprint" => fingerprint = Some(v.to_string()),
                _ => return Err(Error::Parse(format!("unknown metadata key {k:?}"))),
            }
        }
        let missing = |k: &str| Error::Parse(format!("metadata lacks {k}"));
        let mut csv = csv::Reader::from_reader(reader);
        let dim = csv.headers().map_err(|e| Error::Parse(e.to_string()))?.len();
        let mut data = Vec::new();
        for (i, rec) in csv.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            if rec.len() != dim {
                return Err(Error::Parse(format!("row {} has {} fields, expected {dim}", i + 1, rec.len())));
            }
            for f in rec.iter() {
                data.push(f.trim().parse::<f64>().map_err(|e| Error::Parse(format!("row {}: {e}", i + 1)))?);
            }
        }
        if dim == 0 || data.is_empty() {
            return Err(Error::Parse("sample file has no rows".into()));
        }
        Ok(SampleBatch {
            n: data.len() / dim,
            data,
            dim,
            seed: seed.ok_or_else(|| missing("seed"))?,
            alpha: alpha.ok_or_else(|| missing("alpha"))?,
            kind: kind.ok_or_else(|| missing("kind"))?,
            fingerprint: fingerprint.ok_or_else(|| missing("fingerprint"))?,
        })
    }
}

fn sha_hex(v: &Value) -> String {
    Sha256::digest(v.to_string().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn sas<R: Rng>(alpha: f64, rng: &mut R) -> f64 {
    if alpha == 2.0 {
        let z: f64 = rng.sample(StandardNormal);
        return std::f64::consts::SQRT_2 * z;
    }
    let u: f64 = rng.sample(Open01);
    let v = std::f64::consts::PI * (u - 0.5);
    let w: f64 = rng.sample(Exp1);
    if alpha == 1.0 {
        return v.tan();
    }
    (alpha * v).sin() / v.cos().powf(1.0 / alpha) * ((v - alpha * v).cos() / w).powf((1.0 - alpha) / alpha)
}

fn positive<R: Rng>(alpha: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    let u = std::f64::consts::PI * u;
    let w: f64 = rng.sample(Exp1);
    let ln = (alpha * u).sin().ln() - u.sin().ln() / alpha
        + (1.0 - alpha) / alpha * (((1.0 - alpha) * u).sin().ln() - w.ln());
    ln.exp()
}

fn frechet<R: Rng>(rng: &mut R) -> f64 {
    let e: f64 = rng.sample(Exp1);
    1.0 / e
}

enum Sampler {
    Atoms { alpha: f64, dirs: Vec<Vec<f64>>, scales: Vec<f64> },
    Positive { alpha: f64, dirs: Vec<Vec<f64>>, scales: Vec<f64> },
    SubGauss { alpha: f64, chol: DMatrix<f64> },
    Substable { beta: f64, source_alpha: f64, inner: Box<Sampler> },
    Sum(Box<Sampler>, Box<Sampler>),
    Linear { map: DMatrix<f64>, inner: Box<Sampler>, inner_dim: usize },
    Power { p: f64, inner: Box<Sampler> },
    Max { dirs: Vec<Vec<f64>>, weights: Vec<f64> },
}

impl Sampler {
    fn for_model(model: &StableModel) -> Result<Self> {
        let alpha = model.alpha();
        if model.kind() == Kind::OneSided {
            return Ok(Self::onesided(&OneSidedModel::from_model(model)?));
        }
        Ok(match model.source() {
            GaugeSource::Spectral(SpectralMeasure::Isotropic { dim, .. }) => {
                let scale = model.gauge_raw(&basis(*dim, 0));
                let c = DMatrix::identity(*dim, *dim) * (2.0 * scale * scale);
                Sampler::SubGauss { alpha, chol: cholesky(&c)? }
            }
            GaugeSource::Spectral(m) => Self::atoms(alpha, &m.to_atoms()?),
            GaugeSource::Explicit(e) => match e {
                ExplicitGauge::Ellipsoid { c } => Sampler::SubGauss { alpha, chol: cholesky(c)? },
                ExplicitGauge::Substable { source } => Sampler::Substable {
                    beta: alpha / source.alpha(),
                    source_alpha: source.alpha(),
                    inner: Box::new(Self::for_model(source)?),
                },
                ExplicitGauge::StarSum { a, b } => {
                    Sampler::Sum(Box::new(Self::for_model(a)?), Box::new(Self::for_model(b)?))
                }
                ExplicitGauge::Linear { source, map } => Sampler::Linear {
                    map: map.clone(),
                    inner: Box::new(Self::for_model(source)?),
                    inner_dim: source.dim(),
                },
                ExplicitGauge::Custom { .. } => {
                    return Err(Error::Unsupported("models with a custom gauge cannot be sampled".into()))
                }
            },
        })
    }

    fn atoms(alpha: f64, atoms: &[Atom]) -> Self {
        Sampler::Atoms {
            alpha,
            dirs: atoms.iter().map(|a| a.direction.clone()).collect(),
            scales: atoms.iter().map(|a| a.weight.powf(1.0 / alpha)).collect(),
        }
    }

    fn onesided(model: &OneSidedModel) -> Self {
        let alpha = model.alpha();
        Sampler::Positive {
            alpha,
            dirs: model.atoms().iter().map(|a| a.direction.clone()).collect(),
            scales: model.atoms().iter().map(|a| a.weight.powf(1.0 / alpha)).collect(),
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            Sampler::Atoms { alpha, dirs, scales } => {
                out.fill(0.0);
                for (s, c) in dirs.iter().zip(scales) {
                    let x = c * sas(*alpha, rng);
                    out.iter_mut().zip(s).for_each(|(o, si)| *o += x * si);
                }
            }
            Sampler::Positive { alpha, dirs, scales } => {
                out.fill(0.0);
                for (s, c) in dirs.iter().zip(scales) {
                    let x = c * positive(*alpha, rng);
                    out.iter_mut().zip(s).for_each(|(o, si)| *o += x * si);
                }
            }
            Sampler::SubGauss { alpha, chol } => {
                let a = if *alpha == 2.0 { 1.0 } else { positive(alpha / 2.0, rng) };
                let g: Vec<f64> = (0..out.len()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                let r = a.sqrt();
                for (i, o) in out.iter_mut().enumerate() {
                    *o = r * (0..=i).map(|j| chol[(i, j)] * g[j]).sum::<f64>();
                }
            }
            Sampler::Substable { beta, source_alpha, inner } => {
                let z = positive(*beta, rng).powf(1.0 / source_alpha);
                inner.draw(rng, out);
                out.iter_mut().for_each(|o| *o *= z);
            }
            Sampler::Sum(a, b) => {
                let mut tmp = vec![0.0; out.len()];
                a.draw(rng, out);
                b.draw(rng, &mut tmp);
                out.iter_mut().zip(&tmp).for_each(|(o, t)| *o += t);
            }
            Sampler::Linear { map, inner, inner_dim } => {
                let mut tmp = vec![0.0; *inner_dim];
                inner.draw(rng, &mut tmp);
                out.copy_from_slice(&mat_t_vec(map, &tmp));
            }
            Sampler::Power { p, inner } => {
                inner.draw(rng, out);
                out.iter_mut().for_each(|o| *o = o.powf(1.0 / p));
            }
            Sampler::Max { dirs, weights } => {
                out.fill(0.0);
                for (s, w) in dirs.iter().zip(weights) {
                    let z = w * frechet(rng);
                    out.iter_mut().zip(s).for_each(|(o, si)| *o = o.max(z * si));
                }
            }
        }
    }
}

fn cholesky(c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    nalgebra::Cholesky::new(c.clone())
        .map(|ch| ch.l())
        .ok_or_else(|| Error::InvalidArgument("matrix is not positive definite".into()))
}

fn generate(n: usize, dim: usize, seed: u64, fill: impl Fn(&mut ChaCha8Rng, &mut [f64]) + Sync) -> Result<Vec<f64>> {
    if n == 0 {
        return invalid("sample size must be at least 1");
    }
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let rows = CHUNK.min(n - c * CHUNK);
            let mut buf = vec![0.0; rows * dim];
            for r in buf.chunks_mut(dim) {
                fill(&mut rng, r);
            }
            buf
        })
        .collect();
    Ok(parts.concat())
}

fn run(sampler: &Sampler, n: usize, dim: usize, seed: u64) -> Result<Vec<f64>> {
    generate(n, dim, seed, |rng, row| sampler.draw(rng, row))
}

/// Standard symmetric stable draws with `E exp(iuX) = exp(-|u|^alpha)`
/// (Chambers–Mallows–Stuck; `alpha = 2` gives `N(0, 2)`).
pub fn sample_sas_scalar(alpha: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return invalid(format!("alpha must lie in (0, 2], got {alpha}"));
    }
    generate(n, 1, seed, |rng, row| row[0] = sas(alpha, rng))
}

/// Positive stable draws with `E exp(-uS) = exp(-u^alpha)` (Kanter).
pub fn sample_positive_stable(alpha: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return invalid(format!("alpha must lie in (0, 1), got {alpha}"));
    }
    generate(n, 1, seed, |rng, row| row[0] = positive(alpha, rng))
}

/// Draws from any samplable model. Tabulated densities are sampled through
/// their atom folding, which has exactly the tabulated gauge.
pub fn sample_vector(model: &StableModel, n: usize, seed: u64) -> Result<SampleBatch> {
    let sampler = Sampler::for_model(model)?;
    let dim = model.dim();
    Ok(SampleBatch {
        data: run(&sampler, n, dim, seed)?,
        n,
        dim,
        seed,
        alpha: model.alpha(),
        kind: model.kind().as_str().to_string(),
        fingerprint: model.fingerprint(),
    })
}

/// Sub-Gaussian draws `sqrt(A) G` with `G ~ N(0, C)` and `A` positive
/// `alpha/2`-stable; the gauge is `sqrt(<Cu, u> / 2)`.
pub fn sample_subgaussian(c: &DMatrix<f64>, alpha: f64, n: usize, seed: u64) -> Result<SampleBatch> {
    sample_vector(&StableModel::sub_gaussian(alpha, c.clone())?, n, seed)
}

/// Draws `zeta^{1/alpha} xi` with `zeta` positive `beta`-stable.
pub fn sample_substable(model: &StableModel, beta: f64, n: usize, seed: u64) -> Result<SampleBatch> {
    sample_vector(&crate::geometry::substable_transform(model, beta)?, n, seed)
}

/// Draws `sum_j w_j^{1/alpha} s_j S_j` with i.i.d. positive stable `S_j`.
pub fn sample_onesided(model: &OneSidedModel, n: usize, seed: u64) -> Result<SampleBatch> {
    let dim = model.dim();
    Ok(SampleBatch {
        data: run(&Sampler::onesided(model), n, dim, seed)?,
        n,
        dim,
        seed,
        alpha: model.alpha(),
        kind: Kind::OneSided.as_str().to_string(),
        fingerprint: model.to_model()?.fingerprint(),
    })
}

/// Draws from a `p`-sum stable law as coordinatewise `p`-th roots of its
/// one-sided core.
pub fn sample_psum(model: &PSumModel, n: usize, seed: u64) -> Result<SampleBatch> {
    let dim = model.core().dim();
    let sampler = Sampler::Power { p: model.p(), inner: Box::new(Sampler::onesided(model.core())) };
    Ok(SampleBatch {
        data: run(&sampler, n, dim, seed)?,
        n,
        dim,
        seed,
        alpha: model.alpha(),
        kind: "p-sum".into(),
        fingerprint: sha_hex(&json!({"p": model.p(), "core": model.core().to_model()?.describe()})),
    })
}

/// Max-stable draws `xi_i = max_j w_j Z_j y_{j,i}` with i.i.d. unit Frechet
/// `Z_j`, so that `P(xi <= 1/u) = exp(-sum_j w_j max_i u_i y_{j,i})`.
pub fn sample_maxstable(atoms: &[Atom], n: usize, seed: u64) -> Result<SampleBatch> {
    let dim = atoms.first().map(|a| a.direction.len()).ok_or_else(|| Error::InvalidArgument("no atoms".into()))?;
    if atoms.iter().any(|a| a.direction.len() != dim || a.direction.iter().any(|x| !(*x >= 0.0)) || !(a.weight > 0.0)) {
        return invalid("max-stable atoms need nonnegative directions of one dimension and positive weights");
    }
    let sampler = Sampler::Max {
        dirs: atoms.iter().map(|a| a.direction.clone()).collect(),
        weights: atoms.iter().map(|a| a.weight).collect(),
    };
    let desc = json!(atoms.iter().map(|a| json!({"direction": a.direction, "weight": a.weight})).collect::<Vec<_>>());
    Ok(SampleBatch {
        data: run(&sampler, n, dim, seed)?,
        n,
        dim,
        seed,
        alpha: 1.0,
        kind: "max-stable".into(),
        fingerprint: sha_hex(&json!({"max_stable": desc})),
    })
}

/// Mean and standard error of `f` over the rows.
pub fn mc_functional(batch: &SampleBatch, f: impl Fn(&[f64]) -> f64 + Sync + Send) -> Result<McEstimate> {
    McEstimate::from_values(&functional_values(batch, f))
}

/// Median-of-means estimate of `E f` over `blocks` equal blocks.
pub fn median_of_means(batch: &SampleBatch, f: impl Fn(&[f64]) -> f64 + Sync + Send, blocks: usize) -> Result<McEstimate> {
    McEstimate::median_of_means(&functional_values(batch, f), blocks)
}

fn functional_values(batch: &SampleBatch, f: impl Fn(&[f64]) -> f64 + Sync + Send) -> Vec<f64> {
    batch.data.par_chunks(batch.dim).map(f).collect()
}

/// Real part of the empirical characteristic function at `u`.
pub fn empirical_charfun(batch: &SampleBatch, u: &[f64]) -> Result<McEstimate> {
    if u.len() != batch.dim {
        return invalid("direction dimension does not match the batch");
    }
    mc_functional(batch, |x| dot(x, u).cos())
}

/// Empirical Laplace transform `mean exp(-<x, u>)`.
pub fn empirical_laplace(batch: &SampleBatch, u: &[f64]) -> Result<McEstimate> {
    if u.len() != batch.dim {
        return invalid("direction dimension does not match the batch");
    }
    mc_functional(batch, |x| (-dot(x, u)).exp())
}

/// Support estimate of the associated zonoid in one direction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportEstimate {
    pub direction: Vec<f64>,
    /// Mean of `|<xi, u>| / 2`.
    pub raw: McEstimate,
    /// `raw` times `pi / Gamma(1 - 1/alpha)`, an estimate of the gauge.
    pub support: McEstimate,
}

/// Estimates `h(K, u)` as a rescaled mean segment support, for `alpha > 1`.
pub fn estimate_zonoid_from_samples(
    batch: &SampleBatch,
    alpha: f64,
    directions: &[Vec<f64>],
) -> Result<Vec<SupportEstimate>> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return invalid(format!("the zonoid estimate needs alpha in (1, 2], got {alpha}"));
    }
    let c = std::f64::consts::PI / gamma(1.0 - 1.0 / alpha);
    directions
        .iter()
        .map(|u| {
            if u.len() != batch.dim {
                return invalid("direction dimension does not match the batch");
            }
            let raw = mc_functional(batch, |x| 0.5 * dot(x, u).abs())?;
            let support = McEstimate { mean: raw.mean * c, se: raw.se * c, n: raw.n };
            Ok(SupportEstimate { direction: u.clone(), raw, support })
        })
        .collect()
}

/// `lim t^alpha P(||xi|| > t)` per unit of spectral mass: `(2/pi) Gamma(alpha)
/// sin(pi alpha / 2)` for symmetric laws and `1 / Gamma(1 - alpha)` for
/// one-sided laws.
pub fn tail_constant(alpha: f64, kind: Kind) -> Result<f64> {
    match kind {
        Kind::Symmetric if alpha > 0.0 && alpha < 2.0 => {
            Ok(2.0 / std::f64::consts::PI * gamma(alpha) * (std::f64::consts::FRAC_PI_2 * alpha).sin())
        }
        Kind::OneSided if alpha > 0.0 && alpha < 1.0 => Ok(1.0 / gamma(1.0 - alpha)),
        _ => invalid(format!("no power tail for alpha = {alpha} and kind {}", kind.as_str())),
    }
}

/// Spectral estimate from the draws with norm at least `t`. Directions
/// come from [`estimate_spectral_from_samples`]; the total mass is
/// `(k / n) t^alpha / tail_constant` for `k` exceedances. Returns the
/// measure and `k`.
///
/// [`estimate_spectral_from_samples`]: crate::spectral::estimate_spectral_from_samples
pub fn estimate_measure_from_batch(
    batch: &SampleBatch,
    t: f64,
    kind: Kind,
    bins: Option<usize>,
) -> Result<(SpectralMeasure, usize)> {
    if !(t > 0.0 && t.is_finite()) {
        return invalid(format!("threshold must be positive and finite, got {t}"));
    }
    let c = tail_constant(batch.alpha, kind)?;
    let k = batch.rows().filter(|r| dot(r, r).sqrt() >= t).count();
    let shape = crate::spectral::estimate_spectral_from_samples(&batch.to_vecs(), t, kind, bins)?;
    let mass = k as f64 / batch.n as f64 * t.powf(batch.alpha) / c;
    Ok((shape.scale(mass)?, k))
}

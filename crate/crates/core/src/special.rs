//! Special functions: Gamma, ball and sphere constants, Bessel `J0`, and the
//! sine and cosine integrals.

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_sum(z: f64) -> f64 {
    let mut s = LANCZOS[0];
    for (k, c) in LANCZOS.iter().enumerate().skip(1) {
        s += c / (z + k as f64);
    }
    s
}

/// Gamma function; reflection is used for arguments below one half.
///
/// Returns `NaN` at the poles `0, -1, -2, ...`.
pub fn gamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return f64::NAN;
    }
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    if x > 171.0 {
        return f64::INFINITY;
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * lanczos_sum(z)
}

/// Logarithm of `|Gamma(x)|`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        return (PI / (PI * x).sin().abs()).ln() - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + lanczos_sum(z).ln()
}

/// Ratio `Gamma(a) / Gamma(b)` evaluated through logarithms when large.
pub fn gamma_ratio(a: f64, b: f64) -> f64 {
    if a < 150.0 && b < 150.0 {
        gamma(a) / gamma(b)
    } else {
        let sign = gamma_sign(a) * gamma_sign(b);
        sign * (ln_gamma(a) - ln_gamma(b)).exp()
    }
}

fn gamma_sign(x: f64) -> f64 {
    if x > 0.0 || (x.floor() as i64) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Volume of the unit ball in `R^d`.
pub fn kappa(d: usize) -> f64 {
    PI.powf(d as f64 / 2.0) / gamma(1.0 + d as f64 / 2.0)
}

/// Surface area of the unit sphere in `R^d`.
pub fn omega(d: usize) -> f64 {
    d as f64 * kappa(d)
}

/// `int_{S^{d-1}} |u_1|^p du` for `p > -1`.
pub fn sphere_abs_moment(d: usize, p: f64) -> f64 {
    let df = d as f64;
    2.0 * PI.powf((df - 1.0) / 2.0) * gamma((p + 1.0) / 2.0) / gamma((df + p) / 2.0)
}

/// Signed power `|t|^p sign(t)` with `0 -> 0`.
#[inline]
pub fn signed_pow(t: f64, p: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t.abs().powf(p).copysign(t)
    }
}

/// Bessel function of the first kind of order zero.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x <= 200.0 {
        // Periodic trapezoid of (1/2pi) int cos(x sin t) dt; error ~ J_{2n}(x).
        let n = (x as usize) / 2 + 24;
        let m = 4 * n;
        let h = 2.0 * PI / m as f64;
        let mut s = 0.0;
        for k in 0..m {
            s += (x * (h * k as f64).sin()).cos();
        }
        s / m as f64
    } else {
        hankel_j0(x)
    }
}

fn hankel_j0(x: f64) -> f64 {
    // Asymptotic expansion; for x > 200 the truncation error is far below
    // double precision after a handful of terms.
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    for k in 1..30 {
        let kf = k as f64;
        term *= -((2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * x);
        if term.abs() < 1e-18 {
            break;
        }
        if k % 2 == 1 {
            q += if (k / 2) % 2 == 0 { term } else { -term };
        } else {
            p += if (k / 2) % 2 == 0 { term } else { -term };
        }
    }
    let w = x - PI / 4.0;
    (2.0 / (PI * x)).sqrt() * (p * w.cos() - q * w.sin())
}

/// Sine and cosine integrals `(Si(x), Ci(x))` for `x > 0`.
pub fn si_ci(x: f64) -> (f64, f64) {
    const EULER: f64 = 0.577_215_664_901_532_9;
    assert!(x > 0.0, "si_ci requires a positive argument");
    if x <= 4.0 {
        let x2 = x * x;
        let mut si = 0.0;
        let mut ci = 0.0;
        let mut fact_term = 1.0; // x^k / k!
        let mut k = 0usize;
        loop {
            let kf = k as f64;
            if k > 0 {
                fact_term *= x / kf;
            }
            if k % 2 == 1 {
                let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
                si += sign * fact_term / kf;
            } else if k > 0 {
                let sign = if (k / 2) % 2 == 1 { -1.0 } else { 1.0 };
                ci += sign * fact_term / kf;
            }
            if k > 6 && fact_term < 1e-18 * (1.0 + x2) {
                break;
            }
            k += 1;
        }
        (si, EULER + x.ln() + ci)
    } else {
        // Modified Lentz evaluation of E1(ix) as a continued fraction.
        let (mut br, bi) = (1.0, x);
        let tiny = 1e-300;
        let (mut cr, mut ci_) = (1.0 / tiny, 0.0);
        let (mut dr, mut di) = complex_inv(br, bi);
        let (mut hr, mut hi) = (dr, di);
        for i in 1..1000 {
            let a = -((i * i) as f64);
            br += 2.0;
            // d = 1 / (a d + b)
            let (tr, ti) = (a * dr + br, a * di + bi);
            let inv = complex_inv(tr, ti);
            dr = inv.0;
            di = inv.1;
            // c = b + a / c
            let (qr, qi) = complex_inv(cr, ci_);
            cr = br + a * qr;
            ci_ = bi + a * qi;
            let (delr, deli) = (cr * dr - ci_ * di, cr * di + ci_ * dr);
            let (nr, ni) = (hr * delr - hi * deli, hr * deli + hi * delr);
            hr = nr;
            hi = ni;
            if (delr - 1.0).abs() + deli.abs() < 1e-16 {
                break;
            }
        }
        let (c, s) = (x.cos(), x.sin());
        let (er, ei) = (hr * c + hi * s, hi * c - hr * s);
        (PI / 2.0 + ei, -er)
    }
}

fn complex_inv(r: f64, i: f64) -> (f64, f64) {
    let m = r * r + i * i;
    (r / m, -i / m)
}

//! Zeta-type special functions needed by the power-law degree families.
//!
//! Everything here is evaluated in double precision with Euler–Maclaurin
//! summation (Hurwitz zeta), the reflection formula (zeta at negative
//! arguments) and the singular expansion of the polylogarithm around `s = 1`.

use core::f64::consts::PI;

/// `B_{2m}` for m = 1..=10.
const BERNOULLI_EVEN: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// Shift below which the Euler–Maclaurin tail is not yet accurate to f64.
const EM_SHIFT: f64 = 16.0;

/// Hurwitz zeta `ζ(s, a) = Σ_{j≥0} (a + j)^{-s}` for `s > 1/2`, `s != 1`, `a > 0`.
///
/// For `s < 1` the value is the analytic continuation.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    debug_assert!(a > 0.0);
    let mut sum = 0.0;
    let mut x = a;
    while x < EM_SHIFT {
        sum += libm::pow(x, -s);
        x += 1.0;
    }
    let mut tail = libm::pow(x, 1.0 - s) / (s - 1.0) + 0.5 * libm::pow(x, -s);
    // B_{2m}/(2m)! * s(s+1)...(s+2m-2) * x^{-s-2m+1}
    let mut factorial = 1.0;
    let mut rising = s;
    let mut power = libm::pow(x, -s - 1.0);
    let x2 = x * x;
    for (m, b) in BERNOULLI_EVEN.iter().enumerate() {
        let m = (m + 1) as f64;
        factorial *= (2.0 * m - 1.0) * (2.0 * m);
        let term = b / factorial * rising * power;
        tail += term;
        if libm::fabs(term) < 1e-18 * libm::fabs(tail) {
            break;
        }
        rising *= (s + 2.0 * m - 1.0) * (s + 2.0 * m);
        power /= x2;
    }
    sum + tail
}

/// Riemann zeta for any real `s != 1`.
pub fn zeta(s: f64) -> f64 {
    if s >= 0.5 {
        hurwitz_zeta(s, 1.0)
    } else if s == 0.0 {
        -0.5
    } else {
        // ζ(s) = 2^s π^{s-1} sin(πs/2) Γ(1-s) ζ(1-s)
        let reflected = hurwitz_zeta(1.0 - s, 1.0);
        libm::pow(2.0, s)
            * libm::pow(PI, s - 1.0)
            * libm::sin(0.5 * PI * s)
            * libm::tgamma(1.0 - s)
            * reflected
    }
}

/// `ζ(σ) - Li_σ(1 - u)` for non-integer `σ > 1` and `u ∈ [0, 1]`.
///
/// Near `u = 0` this uses the expansion
/// `Li_σ(e^μ) = Γ(1-σ)(-μ)^{σ-1} + Σ_k ζ(σ-k) μ^k / k!`, so the result keeps
/// full relative precision even when it is tiny.
pub fn zeta_minus_polylog(sigma: f64, u: f64) -> f64 {
    debug_assert!(sigma > 1.0 && (0.0..=1.0).contains(&u));
    if u == 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return zeta(sigma);
    }
    let mu = libm::log1p(-u);
    if mu > -1.0 {
        let mut acc = -libm::tgamma(1.0 - sigma) * libm::pow(-mu, sigma - 1.0);
        let mut coeff = 1.0;
        for k in 1..64 {
            coeff *= mu / k as f64;
            let term = zeta(sigma - k as f64) * coeff;
            acc -= term;
            if libm::fabs(term) < 1e-17 * libm::fabs(acc) {
                break;
            }
        }
        acc
    } else {
        zeta(sigma) - polylog_direct(sigma, 1.0 - u)
    }
}

/// `Li_σ(s)` for `σ > 1`, `s ∈ [0, 1]`.
pub fn polylog(sigma: f64, s: f64) -> f64 {
    if s <= libm::exp(-1.0) {
        polylog_direct(sigma, s)
    } else {
        zeta(sigma) - zeta_minus_polylog(sigma, 1.0 - s)
    }
}

fn polylog_direct(sigma: f64, s: f64) -> f64 {
    let mut acc = 0.0;
    let mut sk = s;
    let mut k = 1.0;
    while sk > 0.0 {
        let term = sk * libm::pow(k, -sigma);
        acc += term;
        if term < 1e-18 * acc {
            break;
        }
        sk *= s;
        k += 1.0;
    }
    acc
}

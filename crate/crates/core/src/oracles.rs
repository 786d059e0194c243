//! Independent brute-force references. Each oracle uses a different
//! algorithm from the module it checks: exact rational series instead of
//! recurrences, product quadrature instead of elliptic closed forms, Monte
//! Carlo instead of the Kac-Rice expectation formula.

use crate::covariance;
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

/// One row of the verification table.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub quantity: String,
    pub oracle_value: f64,
    pub main_value: f64,
    pub abs_deviation: f64,
    pub rel_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl OracleReport {
    /// Builds a report judging the relative deviation (falling back to
    /// absolute when the oracle value is tiny) against `tolerance`.
    pub fn new(quantity: &str, oracle_value: f64, main_value: f64, tolerance: f64) -> Self {
        let abs = (oracle_value - main_value).abs();
        let denom = oracle_value.abs().max(1e-30);
        let rel = abs / denom;
        let pass = if oracle_value.abs() > 1e-12 { rel <= tolerance } else { abs <= tolerance };
        OracleReport {
            quantity: quantity.to_string(),
            oracle_value,
            main_value,
            abs_deviation: abs,
            rel_deviation: rel,
            tolerance,
            pass,
        }
    }
}

fn big_binomial(n: u64, k: u64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k.min(n - k) {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// P_ell(x) by the explicit hypergeometric sum
/// P_ell(x) = sum_k (-1)^k C(ell,k) C(ell+k,k) u^k with u = (1-x)/2,
/// evaluated in exact rational arithmetic (x is a dyadic rational, so the
/// whole sum is exact; rounding happens once at the end).
pub fn legendre_series_oracle(ell: u32, x: f64) -> Result<f64> {
    if ell > 60 {
        return Err(Error::Domain {
            op: "legendre_series_oracle",
            detail: format!("degree {ell} exceeds the oracle cap 60"),
        });
    }
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Domain {
            op: "legendre_series_oracle",
            detail: format!("argument {x} outside [-1, 1]"),
        });
    }
    let xr = BigRational::from_float(x).expect("finite input");
    let u = (BigRational::one() - xr) / BigRational::from_integer(2.into());
    let mut sum = BigRational::zero();
    let mut upow = BigRational::one();
    for k in 0..=ell as u64 {
        let c = big_binomial(ell as u64, k) * big_binomial(ell as u64 + k, k);
        let term = BigRational::from_integer(c) * &upow;
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        upow *= &u;
    }
    // round to nearest f64 through a high-precision quotient
    let scale = BigInt::one() << 80;
    let scaled: BigInt = (sum.numer() * &scale) / sum.denom();
    Ok(scaled.to_f64().unwrap_or(f64::NAN) / 2f64.powi(80))
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration,
/// self-contained so the quadrature oracle shares no code with the
/// recurrences it may be used to check.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Tricomi initial guess
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 1..n {
                let kf = k as f64;
                let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0f64, x);
        for k in 1..n {
            let kf = k as f64;
            let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// E[sqrt(var1 X^2 + var2 Y^2)] by 2D product quadrature in polar form:
/// Gauss-Legendre in the radius against the Rayleigh weight r e^{-r^2/2},
/// trapezoid rule in the angle (periodic, so spectrally accurate away from
/// the degenerate axis-kink case, which the node count covers).
pub fn quadrature_norm_oracle(var1: f64, var2: f64) -> Result<f64> {
    if var1 < 0.0 || var2 < 0.0 {
        return Err(Error::Domain {
            op: "quadrature_norm_oracle",
            detail: format!("negative variance ({var1}, {var2})"),
        });
    }
    let (rn, rw) = gauss_legendre(64);
    // radial integral of r^2 e^{-r^2/2} over [0, 12]; tail < 1e-30
    let (lo, hi) = (0.0f64, 12.0f64);
    let mut radial = 0.0;
    for (x, w) in rn.iter().zip(rw.iter()) {
        let r = 0.5 * (hi - lo) * x + 0.5 * (hi + lo);
        radial += w * 0.5 * (hi - lo) * r * r * (-0.5 * r * r).exp();
    }
    let n_ang = 1usize << 20;
    let mut angular = 0.0;
    for j in 0..n_ang {
        let t = 2.0 * PI * (j as f64 + 0.5) / n_ang as f64;
        let c = t.cos();
        let s = t.sin();
        angular += (var1 * c * c + var2 * s * s).sqrt();
    }
    angular /= n_ang as f64;
    Ok(radial * angular)
}

/// Monte Carlo estimate of K1 at (ell, psi): draws gradient vectors from
/// the conditional Gaussian with covariance Omega and averages the norm,
/// scaled by 1/sqrt(2 pi Var). Returns (estimate, stderr).
pub fn mc_conditional_k1(ell: u32, psi: f64, samples: u64, seed: u64) -> Result<(f64, f64)> {
    let theta = 0.5 * (PI - psi / ell as f64);
    let cc = covariance::conditional_covariance(ell, theta)?;
    let (sd1, sd2) = (cc.omega[0].max(0.0).sqrt(), cc.omega[1].max(0.0).sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let mut sum = 0.0f64;
    let mut sumsq = 0.0f64;
    for _ in 0..samples {
        let g1: f64 = normal.sample(&mut rng);
        let g2: f64 = normal.sample(&mut rng);
        let v = (sd1 * g1).hypot(sd2 * g2);
        sum += v;
        sumsq += v * v;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sumsq / n - mean * mean).max(0.0) / (n - 1.0);
    let scale = 1.0 / (2.0 * PI * cc.variance).sqrt();
    Ok((scale * mean, scale * var.sqrt()))
}

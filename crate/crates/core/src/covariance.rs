//! Exact covariance structure of the boundary-adapted field: two-point
//! function, variance, unconditional blocks, and the conditional gradient
//! covariance. A rational-arithmetic series branch handles the
//! near-equator region where the direct formulas cancel catastrophically.

use crate::error::{Error, Result};
use crate::special::legendre_triple;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

/// Scaled distance below which the conditional covariance is evaluated
/// through the truncated exact series instead of the direct formulas.
pub const PSI_SWITCH: f64 = 0.5;

/// Truncation order of the near-boundary series. The expansion parameter
/// is (psi/2)^2 with factorial-squared decay, so 20 terms are far beyond
/// f64 precision at psi <= 1.
const SERIES_TERMS: usize = 20;

/// A point on the closed upper hemisphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HemispherePoint {
    pub theta: f64,
    pub phi: f64,
}

impl HemispherePoint {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI / 2.0).contains(&theta) {
            return Err(Error::Domain {
                op: "HemispherePoint::new",
                detail: format!("colatitude {theta} outside [0, pi/2]"),
            });
        }
        Ok(HemispherePoint { theta, phi: phi.rem_euclid(2.0 * PI) })
    }

    /// Scaled distance to the equator, psi = ell (pi - 2 theta).
    pub fn psi(&self, ell: u32) -> f64 {
        ell as f64 * (PI - 2.0 * self.theta)
    }
}

/// Covariance of (T(x), grad T(x)) in the orthonormal frame
/// (d/dtheta, (1/sin theta) d/dphi). Azimuthal symmetry forces b2 = 0 and
/// c12 = 0, so only the nonzero entries are stored.
#[derive(Debug, Clone, Copy)]
pub struct CovarianceBlocks {
    pub a: f64,
    pub b1: f64,
    pub c11: f64,
    pub c22: f64,
}

/// Covariance of the gradient conditioned on a zero of the field, in the
/// same frame. Diagonal by symmetry; `omega` holds the two diagonal
/// entries. The scaled form is omega = (ell(ell+1)/2) (1 + s).
#[derive(Debug, Clone, Copy)]
pub struct ConditionalCovariance {
    pub omega: [f64; 2],
    pub s11: f64,
    pub s22: f64,
    pub variance: f64,
}

/// Which evaluation path to use for the conditional covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Auto,
    Direct,
    Series,
}

/// Reflection across the equator: (theta, phi) -> (pi - theta, phi).
pub fn mirror(theta: f64, phi: f64) -> (f64, f64) {
    (PI - theta, phi)
}

fn cos_distance(x: (f64, f64), y: (f64, f64)) -> f64 {
    let c = x.0.cos() * y.0.cos() + x.0.sin() * y.0.sin() * (x.1 - y.1).cos();
    c.clamp(-1.0, 1.0)
}

/// Two-point covariance r_ell(x, y) = P_ell(cos d(x,y)) - P_ell(cos d(x, y-mirrored)).
pub fn covariance(ell: u32, x: (f64, f64), y: (f64, f64)) -> Result<f64> {
    if ell < 1 {
        return Err(Error::Domain {
            op: "covariance",
            detail: "degree must be >= 1".into(),
        });
    }
    let p_direct = legendre_triple(ell, cos_distance(x, y))?.p;
    let p_mirror = legendre_triple(ell, cos_distance(x, mirror(y.0, y.1)))?.p;
    Ok(p_direct - p_mirror)
}

/// Field variance at colatitude theta: 1 - P_ell(cos(pi - 2 theta)).
pub fn field_variance(ell: u32, theta: f64) -> Result<f64> {
    Ok(1.0 - legendre_triple(ell, (PI - 2.0 * theta).cos())?.p)
}

/// Unconditional covariance blocks of (T, grad T) at colatitude theta.
pub fn covariance_blocks(ell: u32, theta: f64) -> Result<CovarianceBlocks> {
    if !(theta > 0.0 && theta < PI / 2.0) {
        return Err(Error::Domain {
            op: "covariance_blocks",
            detail: format!("colatitude {theta} outside (0, pi/2)"),
        });
    }
    let lam1 = 0.5 * ell as f64 * (ell as f64 + 1.0); // P'_ell(1)
    let arg = (PI - 2.0 * theta).cos();
    let t = legendre_triple(ell, arg)?;
    let a = 1.0 - t.p;
    if a <= 1e-14 {
        return Err(Error::DegenerateVariance {
            theta,
            detail: "field variance vanishes (equator or even-degree pole)".into(),
        });
    }
    let s2 = (2.0 * theta).sin();
    let c2 = (2.0 * theta).cos();
    Ok(CovarianceBlocks {
        a,
        b1: -s2 * t.dp,
        c11: lam1 - c2 * t.dp - s2 * s2 * t.ddp,
        c22: lam1 - t.dp,
    })
}

/// Truncated exact power series in u = sin^2((pi - 2 theta)/2) of the
/// variance and the conditional diagonal, with the leading-order
/// cancellations performed in rational arithmetic before rounding.
struct BoundarySeries {
    /// variance A(u) = sum_{k>=1} a[k-1] u^k
    a: Vec<f64>,
    /// Omega_11(u) = sum_{k>=1} o11[k-1] u^k
    o11: Vec<f64>,
    /// Omega_22(u) = o22[0] + sum_{k>=1} o22[k] u^k (constant is exact
    /// after cancelling P'(1))
    o22: Vec<f64>,
}

fn series_mul(x: &[BigRational], y: &[BigRational], n: usize) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); n];
    for (i, xi) in x.iter().enumerate().take(n) {
        if xi.is_zero() {
            continue;
        }
        for (j, yj) in y.iter().enumerate() {
            if i + j >= n {
                break;
            }
            out[i + j] += xi * yj;
        }
    }
    out
}

fn series_inv(x: &[BigRational], n: usize) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); n];
    let c0 = x[0].recip();
    out[0] = c0.clone();
    for k in 1..n {
        let mut acc = BigRational::zero();
        for j in 1..=k.min(x.len() - 1) {
            acc += &x[j] * &out[k - j];
        }
        out[k] = -acc * &c0;
    }
    out
}

fn build_boundary_series(ell: u32) -> BoundarySeries {
    let n = SERIES_TERMS;
    let lf = BigInt::from(ell);
    // s_k = (-1)^k C(ell, k) C(ell+k, k) so that P_ell(1 - 2u) = sum_k s_k u^k
    let mut s = vec![BigRational::one(); n + 2];
    for k in 1..n + 2 {
        let kb = BigRational::from_integer(BigInt::from(k * k));
        let num = BigRational::from_integer(
            (&lf - BigInt::from(k - 1)) * (&lf + BigInt::from(k)),
        );
        s[k] = -(&s[k - 1] * num / kb);
    }
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let quarter = BigRational::new(BigInt::one(), BigInt::from(4));
    let lam_half = BigRational::new(&lf * (&lf + BigInt::one()), BigInt::from(2));

    // A(u) = 1 - P = -sum_{k>=1} s_k u^k ; coefficients of u^{k}, k>=1
    let a_ser: Vec<BigRational> = (1..=n).map(|k| -s[k].clone()).collect();
    // p1(u) = P'(x) = -(1/2) sum_{k>=1} k s_k u^{k-1}
    let p1: Vec<BigRational> = (1..=n + 1)
        .map(|k| -&half * BigRational::from_integer(BigInt::from(k)) * &s[k])
        .collect();
    // p2(u) = P''(x) = (1/4) sum_{k>=2} k(k-1) s_k u^{k-2}
    let p2: Vec<BigRational> = (2..=n + 1)
        .map(|k| &quarter * BigRational::from_integer(BigInt::from(k * (k - 1))) * &s[k])
        .collect();

    // Omega_22(u) = lam/2 - p1(u); the u^0 terms cancel exactly
    let mut o22 = vec![BigRational::zero(); n];
    o22[0] = &lam_half - &p1[0];
    debug_assert!(o22[0].is_zero() || ell == 0);
    for k in 1..n {
        o22[k] = -p1[k].clone();
    }
    // store as constant + series; constant is 0, so reuse the vec shape
    // Omega_11(u) = lam/2 + (1-2u) p1 - 4u(1-u) p2 - 4(1-u) p1^2 / (A/u)
    let ahat: Vec<BigRational> = a_ser.clone(); // A/u has coefficients a_ser shifted: ahat[k] = a_{k+1}
    let inv_ahat = series_inv(&ahat, n);
    let p1sq = series_mul(&p1, &p1, n);
    let frac = series_mul(&p1sq, &inv_ahat, n);
    let mut o11 = vec![BigRational::zero(); n + 1];
    o11[0] = lam_half.clone();
    for k in 0..n {
        o11[k] += &p1[k];
        if k + 1 <= n {
            o11[k + 1] -= BigRational::from_integer(BigInt::from(2)) * &p1[k];
        }
    }
    for k in 0..n.min(p2.len()) {
        let four = BigRational::from_integer(BigInt::from(4));
        o11[k + 1] -= &four * &p2[k];
        if k + 2 <= n {
            o11[k + 2] += &four * &p2[k];
        }
    }
    for k in 0..n {
        let four = BigRational::from_integer(BigInt::from(4));
        o11[k] -= &four * &frac[k];
        if k + 1 <= n {
            o11[k + 1] += &four * &frac[k];
        }
    }
    debug_assert!(o11[0].is_zero());

    BoundarySeries {
        a: a_ser.iter().map(|r| r.to_f64().unwrap()).collect(),
        o11: o11[1..=n].iter().map(|r| r.to_f64().unwrap()).collect(),
        o22: o22[1..].iter().map(|r| r.to_f64().unwrap()).collect(),
    }
}

fn boundary_series(ell: u32) -> &'static BoundarySeries {
    static CACHE: OnceLock<Mutex<HashMap<u32, &'static BoundarySeries>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap();
    map.entry(ell)
        .or_insert_with(|| Box::leak(Box::new(build_boundary_series(ell))))
}

fn eval_poly(coeffs: &[f64], u: f64) -> f64 {
    let mut acc = 0.0;
    for &c in coeffs.iter().rev() {
        acc = acc * u + c;
    }
    acc
}

fn conditional_series(ell: u32, psi: f64) -> ConditionalCovariance {
    let lam_half = 0.5 * ell as f64 * (ell as f64 + 1.0);
    let ser = boundary_series(ell);
    let u = (0.5 * psi / ell as f64).sin().powi(2);
    let variance = u * eval_poly(&ser.a, u);
    let o11 = u * eval_poly(&ser.o11, u);
    let o22 = u * eval_poly(&ser.o22, u);
    ConditionalCovariance {
        omega: [o11, o22],
        s11: o11 / lam_half - 1.0,
        s22: o22 / lam_half - 1.0,
        variance,
    }
}

fn conditional_direct(ell: u32, psi: f64) -> Result<ConditionalCovariance> {
    let lam_half = 0.5 * ell as f64 * (ell as f64 + 1.0);
    let phi0 = psi / ell as f64; // pi - 2 theta
    let t = legendre_triple(ell, phi0.cos())?;
    let a = 1.0 - t.p;
    if a <= 1e-14 {
        return Err(Error::DegenerateVariance {
            theta: 0.5 * (PI - phi0),
            detail: "field variance vanishes".into(),
        });
    }
    // frame quantities: cos 2theta = -cos phi0, sin^2 2theta = sin^2 phi0
    let sin2 = phi0.sin().powi(2);
    let c11 = lam_half + phi0.cos() * t.dp - sin2 * t.ddp;
    let c22 = lam_half - t.dp;
    let b1sq_over_a = sin2 * t.dp * t.dp / a;
    let o11 = c11 - b1sq_over_a;
    let o22 = c22;
    Ok(ConditionalCovariance {
        omega: [o11, o22],
        s11: o11 / lam_half - 1.0,
        s22: -t.dp / lam_half,
        variance: a,
    })
}

/// Conditional gradient covariance at scaled distance psi from the
/// equator. `Branch::Auto` switches to the series below PSI_SWITCH.
pub fn conditional_covariance_at_psi(
    ell: u32,
    psi: f64,
    branch: Branch,
) -> Result<ConditionalCovariance> {
    if ell < 1 {
        return Err(Error::Domain {
            op: "conditional_covariance",
            detail: "degree must be >= 1".into(),
        });
    }
    let max_psi = PI * ell as f64;
    if !(psi > 0.0 && psi <= max_psi) {
        return Err(Error::DegenerateVariance {
            theta: 0.5 * (PI - psi / ell as f64),
            detail: format!("psi = {psi} outside (0, pi ell]"),
        });
    }
    if psi == max_psi && ell % 2 == 0 {
        return Err(Error::DegenerateVariance {
            theta: 0.0,
            detail: "even-degree pole: field variance vanishes".into(),
        });
    }
    match branch {
        Branch::Series => Ok(conditional_series(ell, psi)),
        Branch::Direct => conditional_direct(ell, psi),
        Branch::Auto => {
            if psi < PSI_SWITCH {
                Ok(conditional_series(ell, psi))
            } else {
                conditional_direct(ell, psi)
            }
        }
    }
}

/// Conditional gradient covariance at colatitude theta.
pub fn conditional_covariance(ell: u32, theta: f64) -> Result<ConditionalCovariance> {
    if !(0.0..=PI / 2.0).contains(&theta) {
        return Err(Error::Domain {
            op: "conditional_covariance",
            detail: format!("colatitude {theta} outside [0, pi/2]"),
        });
    }
    conditional_covariance_at_psi(ell, ell as f64 * (PI - 2.0 * theta), Branch::Auto)
}

//! The zero density K1 of the boundary-adapted ensemble: exact evaluation,
//! the far-from-boundary and near-boundary asymptotic laws, the Taylor
//! expansion of the Gaussian expectation, and the planar baseline model.

use crate::covariance::{self, Branch};
use crate::error::{Error, Result};
use crate::special::{
    bessel_j0, bessel_j0_prime, gaussian_norm_expectation, legendre_triple, one_minus_j0,
};
use serde::Serialize;
use std::f64::consts::PI;

/// Default lower boundary of the far regime. The residual of the far
/// expansion times psi^{3/2} flattens from about this value on.
pub const FAR_REGIME_C: f64 = 10.0;

/// Evaluation regime tag for profile rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Exact,
    Far,
    Near,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::Exact => write!(f, "exact"),
            Regime::Far => write!(f, "far"),
            Regime::Near => write!(f, "near"),
        }
    }
}

/// A sampled density curve psi -> K1(psi).
#[derive(Debug, Clone, Serialize)]
pub struct DensityProfile {
    pub degree: u32,
    pub samples: Vec<(f64, f64, Regime)>,
}

/// Exact zero density K1(psi) = E[||grad T|| | T = 0] / sqrt(2 pi Var),
/// with the Gaussian expectation in elliptic closed form and the branch
/// choice for the conditional covariance delegated to `covariance`.
pub fn k1_exact_branch(ell: u32, psi: f64, branch: Branch) -> Result<f64> {
    let cc = covariance::conditional_covariance_at_psi(ell, psi, branch)?;
    if ell == 1 {
        // the gradient of T_1 (proportional to cos theta) vanishes
        // identically on the zero set off the equator
        return Ok(0.0);
    }
    let o1 = cc.omega[0].max(0.0);
    let o2 = cc.omega[1].max(0.0);
    if o1 == 0.0 && o2 == 0.0 {
        // degree 1: the gradient vanishes identically on {T = 0} off the equator
        return Ok(0.0);
    }
    Ok(gaussian_norm_expectation(o1, o2)? / (2.0 * PI * cc.variance).sqrt())
}

/// Exact zero density with automatic branch selection.
pub fn k1_exact(ell: u32, psi: f64) -> Result<f64> {
    k1_exact_branch(ell, psi, Branch::Auto)
}

/// Far-from-boundary expansion, valid for C < psi < pi ell.
pub fn k1_far_asymptotic(ell: u32, psi: f64) -> f64 {
    let lf = ell as f64;
    let plateau = (lf * (lf + 1.0)).sqrt() / (2.0 * 2f64.sqrt());
    let chi = (lf + 0.5) * psi / lf - PI / 4.0;
    let bracket = 1.0 + (2.0 / PI).sqrt() / psi.sqrt() * chi.cos() - 1.0 / (16.0 * PI * psi)
        + 15.0 / (16.0 * PI * psi) * ((lf + 0.5) * 2.0 * psi / lf - PI / 2.0).cos();
    plateau * bracket
}

/// Near-boundary law: the leading term ell / (2 pi), uniform in psi small.
pub fn k1_near_asymptotic(ell: u32, _psi: f64) -> f64 {
    ell as f64 / (2.0 * PI)
}

/// Taylor expansion of K1 in the perturbation (s, S): returns the plateau
/// plus the leading correction
/// L = (sqrt(l(l+1))/(4 sqrt 2)) [s + tr S / 2 + 3 s^2 / 4 + s tr S / 4
///     - tr S^2 / 16 - (tr S)^2 / 32],
/// evaluated with the exact s = P_ell(cos(psi/ell)) and exact S entries.
pub fn taylor_leading_term(ell: u32, psi: f64) -> Result<f64> {
    let lf = ell as f64;
    let s = legendre_triple(ell, (psi / lf).cos())?.p;
    let cc = covariance::conditional_covariance_at_psi(ell, psi, Branch::Auto)?;
    let tr = cc.s11 + cc.s22;
    let tr_sq = cc.s11 * cc.s11 + cc.s22 * cc.s22;
    let plateau = (lf * (lf + 1.0)).sqrt() / (2.0 * 2f64.sqrt());
    let l_term = (lf * (lf + 1.0)).sqrt() / (4.0 * 2f64.sqrt())
        * (s + 0.5 * tr + 0.75 * s * s + 0.25 * s * tr - tr_sq / 16.0 - tr * tr / 32.0);
    Ok(plateau + l_term)
}

/// Leading oscillatory approximations of (P, P', P'') at argument
/// cos(psi/ell), valid for C < psi < pi ell.
pub fn hilb_legendre_asymptotics(ell: u32, psi: f64) -> (f64, f64, f64) {
    let lf = ell as f64;
    let chi = (lf + 0.5) * psi / lf - PI / 4.0;
    let amp = (2.0 / PI).sqrt();
    let sphi = (psi / lf).sin();
    let p = amp / psi.sqrt() * chi.cos();
    let dp = amp * lf.sqrt() / sphi.powf(1.5) * chi.sin();
    let ddp = -amp * lf.powf(1.5) / sphi.powf(2.5) * chi.cos();
    (p, dp, ddp)
}

/// Two-term asymptotics of the scaled conditional perturbation entries.
pub fn s_matrix_asymptotic(ell: u32, psi: f64) -> (f64, f64) {
    let lf = ell as f64;
    let chi = (lf + 0.5) * psi / lf - PI / 4.0;
    let amp = (2.0 / PI).sqrt();
    let s11 = 2.0 * amp / psi.sqrt() * chi.cos() - 4.0 / PI / psi * chi.sin().powi(2);
    let s22 = -2.0 * amp / psi.powf(1.5) * chi.sin();
    (s11, s22)
}

/// Zero density of the planar boundary-adapted model at height x2 above
/// the boundary. The covariance is J0(|x-y|) - J0(|x-y~|); all derivatives
/// are reduced analytically to J0 and J0' at argument 2 x2.
pub fn planar_berry_density(x2: f64) -> Result<f64> {
    if !(x2 > 0.0) {
        return Err(Error::Domain {
            op: "planar_berry_density",
            detail: format!("height {x2} must be positive"),
        });
    }
    let h = x2;
    let j0 = bessel_j0(2.0 * h);
    let j0p = bessel_j0_prime(2.0 * h);
    let variance = one_minus_j0(2.0 * h);
    if variance <= 1e-300 {
        return Err(Error::DegenerateVariance {
            theta: 0.0,
            detail: "planar variance vanishes".into(),
        });
    }
    // Omega_11 = 1/2 + J0'(2h)/(2h)
    // Omega_22 = 1/2 + J0(2h) + J0'(2h)/(2h) - J0'(2h)^2 / (1 - J0(2h))
    let o11 = (0.5 + j0p / (2.0 * h)).max(0.0);
    let o22 = (0.5 + j0 + j0p / (2.0 * h) - j0p * j0p / variance).max(0.0);
    if o11 == 0.0 && o22 == 0.0 {
        return Ok(0.0);
    }
    Ok(gaussian_norm_expectation(o11, o22)? / (2.0 * PI * variance).sqrt())
}

/// Samples the exact density (plus the two asymptotic laws where they
/// apply) on a log-spaced psi grid.
pub fn density_profile(ell: u32, psi_min: f64, psi_max: f64, n: usize) -> Result<DensityProfile> {
    if !(psi_min > 0.0 && psi_max > psi_min && psi_max <= PI * ell as f64) {
        return Err(Error::Config(format!(
            "psi range [{psi_min}, {psi_max}] invalid for degree {ell}"
        )));
    }
    if n < 2 {
        return Err(Error::Config("need at least 2 profile points".into()));
    }
    let mut samples = Vec::with_capacity(3 * n);
    let ratio = (psi_max / psi_min).ln();
    for i in 0..n {
        let psi = psi_min * (ratio * i as f64 / (n - 1) as f64).exp();
        samples.push((psi, k1_exact(ell, psi)?, Regime::Exact));
        if psi > FAR_REGIME_C {
            samples.push((psi, k1_far_asymptotic(ell, psi), Regime::Far));
        }
        if psi < 1.0 {
            samples.push((psi, k1_near_asymptotic(ell, psi), Regime::Near));
        }
    }
    Ok(DensityProfile { degree: ell, samples })
}

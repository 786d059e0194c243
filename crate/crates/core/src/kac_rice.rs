//! Expected nodal length by integrating the zero density over the
//! hemisphere (plus the deterministic 2 pi equator component), region
//! attribution, and the logarithmic deficiency fit.

use crate::density::{k1_exact, k1_far_asymptotic, FAR_REGIME_C};
use crate::error::{Error, Result};
use crate::special::legendre_triple;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Default excision of the degenerate equator neighbourhood, in psi.
pub const DEFAULT_EXCISION_PSI: f64 = 1e-6;

/// Default Gauss-Legendre nodes per quadrature panel.
pub const DEFAULT_NODES: usize = 24;

/// Inner region boundary (psi) separating the boundary layer H_C from the
/// intermediate region H_I; H_I meets the far region H_F at FAR_REGIME_C.
pub const REGION_EPS0: f64 = 0.5;

#[derive(Debug, Clone, Serialize)]
pub struct NodalLengthPrediction {
    pub degree: u32,
    /// expected length including the 2 pi equator component
    pub total: f64,
    /// 2 pi sqrt(l(l+1)) / (2 sqrt 2), the isotropic plateau integrated
    /// over the hemisphere
    pub leading: f64,
    /// total - 2 pi - leading: the genuinely random part of the length
    /// against its boundaryless analogue (negative: nodal deficiency)
    pub deficiency: f64,
    /// contributions of psi in [excision, eps0], [eps0, C], [C, pi ell]
    pub region_contributions: [f64; 3],
    /// psi below which the integrand was truncated, and the O(ell) bound
    /// on the discarded mass
    pub excision_psi: f64,
    pub truncation_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeficiencyFit {
    pub slope: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
}

fn gauss_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..60 {
            let t = legendre_triple(n as u32, x).expect("node in range");
            let dx = t.p / t.dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let t = legendre_triple(n as u32, x).expect("node in range");
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * t.dp * t.dp);
    }
    (nodes, weights)
}

/// Integrates f over [lo, hi] split into the given panels with an n-node
/// Gauss rule per panel; panel sums combined with compensated summation.
fn integrate_panels<F>(panels: &[(f64, f64)], nodes: &[f64], weights: &[f64], f: F) -> Result<f64>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let partials: Vec<Result<f64>> = panels
        .par_iter()
        .map(|&(a, b)| {
            let mut s = 0.0;
            for (x, w) in nodes.iter().zip(weights) {
                let t = 0.5 * (b - a) * x + 0.5 * (a + b);
                s += w * f(t)?;
            }
            Ok(0.5 * (b - a) * s)
        })
        .collect();
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for p in partials {
        let v = p?;
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    Ok(sum)
}

/// Builds panels over [lo, hi]: geometric clustering toward the boundary
/// layer psi <~ 1 where the density transitions, then uniform panels a
/// fraction of the oscillation wavelength (~ 2 pi in psi) wide.
fn build_panels(lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let mut panels = Vec::new();
    let mut a = lo;
    while a < hi.min(1.0) {
        let b = (a * 4.0).min(hi.min(1.0));
        panels.push((a, b));
        a = b;
    }
    while a < hi {
        let b = (a + PI / 2.0).min(hi);
        panels.push((a, b));
        a = b;
    }
    panels
}

fn integrate_weighted<F>(ell: u32, lo: f64, hi: f64, nodes: usize, f: F) -> Result<f64>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if hi <= lo {
        return Ok(0.0);
    }
    let lf = ell as f64;
    let (xs, ws) = gauss_nodes(nodes);
    let panels = build_panels(lo, hi);
    // area weight: (pi / ell) sin(pi/2 - psi / (2 ell)) = (pi/ell) cos(psi/(2 ell))
    integrate_panels(&panels, &xs, &ws, |psi| {
        Ok(PI / lf * (psi / (2.0 * lf)).cos() * f(psi)?)
    })
}

/// Expected nodal length with explicit quadrature controls. When
/// `far_tail` is set, the far-field expansion replaces the exact density
/// on H_F (used for attribution experiments, never for headline numbers).
pub fn expected_nodal_length_opts(
    ell: u32,
    nodes: usize,
    excision_psi: f64,
    far_tail: bool,
) -> Result<NodalLengthPrediction> {
    expected_nodal_length_regions(ell, nodes, excision_psi, REGION_EPS0, FAR_REGIME_C, far_tail)
}

/// As `expected_nodal_length_opts`, with explicit region boundaries
/// (used only for attribution; the headline total is unaffected unless
/// `far_tail` is set).
pub fn expected_nodal_length_regions(
    ell: u32,
    nodes: usize,
    excision_psi: f64,
    eps0: f64,
    far_c: f64,
    far_tail: bool,
) -> Result<NodalLengthPrediction> {
    if ell < 1 {
        return Err(Error::Domain {
            op: "expected_nodal_length",
            detail: "degree must be >= 1".into(),
        });
    }
    if !(excision_psi > 0.0) || nodes < 2 || !(eps0 > 0.0 && far_c > eps0) {
        return Err(Error::Config(format!(
            "invalid quadrature settings: nodes = {nodes}, excision = {excision_psi}, \
             regions = ({eps0}, {far_c})"
        )));
    }
    let lf = ell as f64;
    let max_psi = PI * lf;
    let b1 = eps0.min(max_psi);
    let b2 = far_c.min(max_psi);
    let hc = integrate_weighted(ell, excision_psi.min(b1), b1, nodes, |p| k1_exact(ell, p))?;
    let hi_region = integrate_weighted(ell, b1, b2, nodes, |p| k1_exact(ell, p))?;
    let hf = if far_tail {
        integrate_weighted(ell, b2, max_psi, nodes, |p| Ok(k1_far_asymptotic(ell, p)))?
    } else {
        integrate_weighted(ell, b2, max_psi, nodes, |p| k1_exact(ell, p))?
    };
    let leading = 2.0 * PI * (lf * (lf + 1.0)).sqrt() / (2.0 * 2f64.sqrt());
    let total = hc + hi_region + hf + 2.0 * PI;
    Ok(NodalLengthPrediction {
        degree: ell,
        total,
        leading,
        deficiency: total - 2.0 * PI - leading,
        region_contributions: [hc, hi_region, hf],
        excision_psi,
        truncation_bound: excision_psi * lf / (2.0 * PI) * PI / lf,
    })
}

/// Expected nodal length with default quadrature.
pub fn expected_nodal_length(ell: u32) -> Result<NodalLengthPrediction> {
    expected_nodal_length_opts(ell, DEFAULT_NODES, DEFAULT_EXCISION_PSI, false)
}

/// Least-squares fit of y against ln x.
pub fn fit_against_log(xs: &[f64], ys: &[f64]) -> Result<DeficiencyFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InsufficientSpan("need matching xs/ys, length >= 2".into()));
    }
    let n = xs.len() as f64;
    let ls: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let mx = ls.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = ls.iter().map(|l| (l - mx) * (l - mx)).sum();
    let sxy: f64 = ls.iter().zip(ys).map(|(l, y)| (l - mx) * (y - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::InsufficientSpan("degenerate abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = ls
        .iter()
        .zip(ys)
        .map(|(l, y)| y - (slope * l + intercept))
        .collect();
    Ok(DeficiencyFit { slope, intercept, residuals })
}

/// Fits the nodal deficiency against log degree. Requires at least five
/// degrees spanning a decade.
pub fn deficiency_fit(degrees: &[u32]) -> Result<DeficiencyFit> {
    if degrees.len() < 5 {
        return Err(Error::InsufficientSpan(format!(
            "need >= 5 degrees, got {}",
            degrees.len()
        )));
    }
    let lo = *degrees.iter().min().unwrap() as f64;
    let hi = *degrees.iter().max().unwrap() as f64;
    if hi / lo < 10.0 {
        return Err(Error::InsufficientSpan(format!(
            "degrees must span a decade ({lo}..{hi} does not)"
        )));
    }
    let defs: Vec<f64> = degrees
        .par_iter()
        .map(|&ell| expected_nodal_length(ell).map(|p| p.deficiency))
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = degrees.iter().map(|&d| d as f64).collect();
    fit_against_log(&xs, &defs)
}

/// Full-sphere rotation-invariant baseline: sqrt(2) pi sqrt(l(l+1)).
/// Pinned by the degree-1 case, whose nodal set is a great circle of
/// length exactly 2 pi, and by being exactly twice the hemisphere plateau
/// term integrated over the half sphere.
pub fn berard_baseline(ell: u32) -> f64 {
    let lf = ell as f64;
    2f64.sqrt() * PI * (lf * (lf + 1.0)).sqrt()
}

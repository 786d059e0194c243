//! Nodal-line extraction from sampled fields by marching squares, metric
//! length measurement, and the Monte Carlo campaign driver.

use crate::error::{Error, Result};
use crate::sampler::{
    evaluate, sample_coefficients_replicate, synthesize_field, CoefficientSet, FieldSample,
    GridSpec, Mode,
};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Default equator exclusion in grid steps.
pub const DEFAULT_EXCLUSION_STEPS: f64 = 1.5;

/// Extracted nodal line of one field realisation.
#[derive(Debug, Clone)]
pub struct NodalSegments {
    /// segments as ((theta1, phi1), (theta2, phi2)) pairs
    pub segments: Vec<((f64, f64), (f64, f64))>,
    /// metric length, including the 2 pi equator when the convention is on
    pub total_length: f64,
    /// whether the deterministic 2 pi equator component was added
    pub equator_convention: bool,
    /// largest colatitude the extraction covered (hemisphere mode):
    /// cells below this were skipped as the excluded equator band
    pub theta_cut: Option<f64>,
}

/// Monte Carlo campaign summary.
#[derive(Debug, Clone, Serialize)]
pub struct NodalLengthResult {
    pub degree: u32,
    pub mode: Mode,
    pub replicates: u64,
    pub mean: f64,
    pub stderr: f64,
    pub values: Vec<f64>,
    pub theta_cut: Option<f64>,
}

fn segment_length(p: (f64, f64), q: (f64, f64)) -> f64 {
    let dtheta = q.0 - p.0;
    let dphi = q.1 - p.1;
    let mean_theta = 0.5 * (p.0 + q.0);
    (dtheta * dtheta + (mean_theta.sin() * dphi).powi(2)).sqrt()
}

fn crossing(p: (f64, f64), fp: f64, q: (f64, f64), fq: f64) -> (f64, f64) {
    let t = fp / (fp - fq);
    (p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1))
}

fn check_resolution(field: &FieldSample) -> Result<()> {
    let ell = field.degree as usize;
    let g = &field.grid;
    // >= 10 nodes per oscillation wavelength pi/ell in theta, 2pi/ell in phi
    let span = g.theta_max - g.theta_min;
    let need_theta = (10.0 * ell as f64 * span / (0.5 * PI)).ceil() as usize;
    if g.n_theta < need_theta || g.n_phi < 20 * ell {
        return Err(Error::GridTooCoarse(format!(
            "grid {}x{} below the resolution rule ({need_theta}x{}) for degree {ell}",
            g.n_theta,
            g.n_phi,
            20 * ell
        )));
    }
    Ok(())
}

/// Marching-squares extraction of the zero set with linear interpolation
/// on cell edges. Saddle cells are resolved by the exact field value at
/// the cell centre when the coefficients are available, otherwise by the
/// corner average. Cells within `exclusion_steps` grid steps of the
/// equator are skipped and the deterministic 2 pi equator is added
/// instead (boundary-adapted hemisphere convention).
pub fn extract_nodal_length(
    field: &FieldSample,
    coeffs: Option<&CoefficientSet>,
    exclusion_steps: f64,
) -> Result<NodalSegments> {
    check_resolution(field)?;
    let g = field.grid;
    let hemisphere = field.mode == Mode::BoundaryAdapted;
    if hemisphere && exclusion_steps < 1.0 {
        return Err(Error::Config(
            "equator exclusion must be at least one grid step".into(),
        ));
    }
    let dtheta = g.theta_step();
    let theta_limit = if hemisphere {
        0.5 * PI - exclusion_steps * dtheta
    } else {
        f64::INFINITY
    };
    let dphi = 2.0 * PI / g.n_phi as f64;

    let per_row: Vec<(f64, Vec<((f64, f64), (f64, f64))>)> = (0..g.n_theta - 1)
        .into_par_iter()
        .map(|i| -> Result<(f64, Vec<((f64, f64), (f64, f64))>)> {
            let (t0, t1) = (g.theta(i), g.theta(i + 1));
            if t1 > theta_limit {
                return Ok((0.0, Vec::new()));
            }
            let mut segs = Vec::new();
            let mut len = 0.0;
            for j in 0..g.n_phi {
                let jn = (j + 1) % g.n_phi;
                let p0 = g.phi(j);
                let p1 = p0 + dphi;
                // corners: a = (t0,p0), b = (t0,p1), c = (t1,p1), d = (t1,p0)
                let fa = field.value(i, j);
                let fb = field.value(i, jn);
                let fc = field.value(i + 1, jn);
                let fd = field.value(i + 1, j);
                let code = ((fa > 0.0) as u8)
                    | (((fb > 0.0) as u8) << 1)
                    | (((fc > 0.0) as u8) << 2)
                    | (((fd > 0.0) as u8) << 3);
                if code == 0 || code == 0b1111 {
                    continue;
                }
                let a = (t0, p0);
                let b = (t0, p1);
                let c = (t1, p1);
                let d = (t1, p0);
                let top = || crossing(a, fa, b, fb);
                let right = || crossing(b, fb, c, fc);
                let bottom = || crossing(d, fd, c, fc);
                let left = || crossing(a, fa, d, fd);
                let mut push = |s: (f64, f64), e: (f64, f64)| {
                    len += segment_length(s, e);
                    segs.push((s, e));
                };
                match code {
                    0b0001 | 0b1110 => push(top(), left()),
                    0b0010 | 0b1101 => push(top(), right()),
                    0b0100 | 0b1011 => push(right(), bottom()),
                    0b1000 | 0b0111 => push(left(), bottom()),
                    0b0011 | 0b1100 => push(left(), right()),
                    0b1001 | 0b0110 => push(top(), bottom()),
                    0b0101 | 0b1010 => {
                        // saddle: a, c against b, d
                        let centre = match coeffs {
                            Some(cs) => {
                                evaluate(cs, 0.5 * (t0 + t1), 0.5 * (p0 + p1))?
                            }
                            None => 0.25 * (fa + fb + fc + fd),
                        };
                        let a_side = fa > 0.0;
                        if (centre > 0.0) == a_side {
                            // the a-c diagonal region is connected
                            push(top(), right());
                            push(left(), bottom());
                        } else {
                            push(top(), left());
                            push(right(), bottom());
                        }
                    }
                    _ => unreachable!(),
                }
            }
            Ok((len, segs))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut total = 0.0;
    let mut segments = Vec::new();
    for (len, segs) in per_row {
        total += len;
        segments.extend(segs);
    }
    let theta_cut = if hemisphere {
        // largest included cell boundary
        let mut cut = g.theta(0);
        for i in 0..g.n_theta {
            let t = g.theta(i);
            if t <= theta_limit {
                cut = t;
            }
        }
        Some(cut)
    } else {
        None
    };
    if hemisphere {
        total += 2.0 * PI;
    }
    Ok(NodalSegments {
        segments,
        total_length: total,
        equator_convention: hemisphere,
        theta_cut,
    })
}

/// Runs `replicates` independent realisations and extracts each nodal
/// length. Deterministic in (seed, replicate), independent of scheduling.
pub fn monte_carlo_nodal_length(
    ell: u32,
    mode: Mode,
    replicates: u64,
    grid: GridSpec,
    seed: u64,
) -> Result<NodalLengthResult> {
    if replicates < 30 {
        return Err(Error::Config(format!(
            "need >= 30 replicates, got {replicates}"
        )));
    }
    let results: Vec<(f64, Option<f64>)> = (0..replicates)
        .into_par_iter()
        .map(|r| -> Result<(f64, Option<f64>)> {
            let coeffs = sample_coefficients_replicate(ell, mode, seed, r)?;
            let field = synthesize_field(&coeffs, grid)?;
            let segs = extract_nodal_length(&field, Some(&coeffs), DEFAULT_EXCLUSION_STEPS)?;
            Ok((segs.total_length, segs.theta_cut))
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = results.iter().map(|r| r.0).collect();
    let n = replicates as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok(NodalLengthResult {
        degree: ell,
        mode,
        replicates,
        mean,
        stderr: (var / n).sqrt(),
        values,
        theta_cut: results[0].1,
    })
}

/// Writes segments as CSV rows (theta1, phi1, theta2, phi2).
pub fn write_segments_csv<W: std::io::Write>(segs: &NodalSegments, w: &mut W) -> Result<()> {
    writeln!(w, "theta1,phi1,theta2,phi2")?;
    for ((t1, p1), (t2, p2)) in &segs.segments {
        writeln!(w, "{t1},{p1},{t2},{p2}")?;
    }
    Ok(())
}

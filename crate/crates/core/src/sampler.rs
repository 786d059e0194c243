//! Monte Carlo synthesis of the boundary-adapted ensemble and the
//! full-sphere baseline on structured (theta, phi) grids.

use crate::error::{Error, Result};
use crate::special::associated_legendre_row;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::io::Write;

/// Which Gaussian ensemble to draw from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Dirichlet subspace: only orders with m != ell (mod 2), normalised
    /// by sqrt(8 pi / (2 ell + 1)).
    BoundaryAdapted,
    /// Full rotation-invariant ensemble, unit variance everywhere.
    FullSphere,
}

/// Gaussian coefficients in the real orthonormal harmonic basis. A complex
/// coefficient a_m = (u + i v)/sqrt(2) under the reality constraint
/// a_{-m} = conj(a_m) contributes sqrt(2) lambda_m (u cos m phi - v sin m phi),
/// so `cos_m[m-1] = u_m` and `sin_m[m-1] = -v_m` in that convention.
#[derive(Debug, Clone)]
pub struct CoefficientSet {
    pub degree: u32,
    pub mode: Mode,
    pub seed: u64,
    pub replicate: u64,
    /// coefficient of the m = 0 harmonic (zero unless 0 != ell mod 2)
    pub m0: f64,
    /// cosine-harmonic coefficients for m = 1..=ell (zero on blocked orders)
    pub cos_m: Vec<f64>,
    /// sine-harmonic coefficients for m = 1..=ell
    pub sin_m: Vec<f64>,
}

impl CoefficientSet {
    fn scale(&self) -> f64 {
        let lf = self.degree as f64;
        match self.mode {
            Mode::BoundaryAdapted => (8.0 * PI / (2.0 * lf + 1.0)).sqrt(),
            Mode::FullSphere => (4.0 * PI / (2.0 * lf + 1.0)).sqrt(),
        }
    }

    fn order_is_free(&self, m: u32) -> bool {
        match self.mode {
            Mode::BoundaryAdapted => (m % 2) != (self.degree % 2),
            Mode::FullSphere => true,
        }
    }

    /// Number of free real Gaussian degrees of freedom.
    pub fn dof(&self) -> usize {
        let mut n = 0;
        for m in 0..=self.degree {
            if self.order_is_free(m) {
                n += if m == 0 { 1 } else { 2 };
            }
        }
        n
    }
}

/// Structured latitude-longitude grid. Rows run from theta_min to
/// theta_max inclusive of the end row; columns cover [0, 2 pi).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GridSpec {
    pub n_theta: usize,
    pub n_phi: usize,
    pub theta_min: f64,
    pub theta_max: f64,
}

impl GridSpec {
    /// Hemisphere grid: n_theta rows on (0, pi/2], equator included,
    /// pole excluded.
    pub fn hemisphere(n_theta: usize, n_phi: usize) -> Self {
        GridSpec {
            n_theta,
            n_phi,
            theta_min: 0.5 * PI / n_theta as f64,
            theta_max: 0.5 * PI,
        }
    }

    /// Full-sphere grid on [eps, pi - eps], poles excised.
    pub fn full_sphere(n_theta: usize, n_phi: usize) -> Self {
        let eps = 1e-4;
        GridSpec { n_theta, n_phi, theta_min: eps, theta_max: PI - eps }
    }

    pub fn theta(&self, i: usize) -> f64 {
        if self.n_theta == 1 {
            return self.theta_min;
        }
        self.theta_min
            + (self.theta_max - self.theta_min) * i as f64 / (self.n_theta - 1) as f64
    }

    pub fn phi(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n_phi as f64
    }

    pub fn theta_step(&self) -> f64 {
        (self.theta_max - self.theta_min) / (self.n_theta - 1).max(1) as f64
    }
}

/// A realisation of the field on a grid, row-major over (theta, phi).
#[derive(Debug, Clone)]
pub struct FieldSample {
    pub degree: u32,
    pub mode: Mode,
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl FieldSample {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n_phi + j]
    }

    /// Little-endian binary dump: magic b"NKF1", u32 degree, u8 mode,
    /// u64 n_theta, u64 n_phi, f64 theta_min, f64 theta_max, then
    /// row-major f64 values.
    pub fn write_binary<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(b"NKF1")?;
        w.write_all(&self.degree.to_le_bytes())?;
        w.write_all(&[match self.mode {
            Mode::BoundaryAdapted => 0u8,
            Mode::FullSphere => 1u8,
        }])?;
        w.write_all(&(self.grid.n_theta as u64).to_le_bytes())?;
        w.write_all(&(self.grid.n_phi as u64).to_le_bytes())?;
        w.write_all(&self.grid.theta_min.to_le_bytes())?;
        w.write_all(&self.grid.theta_max.to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

/// Draws the coefficient set for one replicate. Deterministic in
/// (seed, replicate): the replicate index selects an independent stream
/// of the counter-based generator, so parallel order never matters.
pub fn sample_coefficients_replicate(
    ell: u32,
    mode: Mode,
    seed: u64,
    replicate: u64,
) -> Result<CoefficientSet> {
    if ell < 1 {
        return Err(Error::Domain {
            op: "sample_coefficients",
            detail: "degree must be >= 1".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    let normal = StandardNormal;
    let mut set = CoefficientSet {
        degree: ell,
        mode,
        seed,
        replicate,
        m0: 0.0,
        cos_m: vec![0.0; ell as usize],
        sin_m: vec![0.0; ell as usize],
    };
    if set.order_is_free(0) {
        set.m0 = normal.sample(&mut rng);
    }
    for m in 1..=ell {
        if set.order_is_free(m) {
            set.cos_m[(m - 1) as usize] = normal.sample(&mut rng);
            set.sin_m[(m - 1) as usize] = normal.sample(&mut rng);
        }
    }
    Ok(set)
}

/// Draws the coefficient set for replicate 0 of a seed.
pub fn sample_coefficients(ell: u32, mode: Mode, seed: u64) -> Result<CoefficientSet> {
    sample_coefficients_replicate(ell, mode, seed, 0)
}

/// Evaluates the field at a single point directly from the coefficients.
pub fn evaluate(coeffs: &CoefficientSet, theta: f64, phi: f64) -> Result<f64> {
    let row = associated_legendre_row(coeffs.degree, theta)?;
    let mut acc = coeffs.m0 * row[0];
    let (cp, sp) = (phi.cos(), phi.sin());
    let (mut c, mut s) = (1.0f64, 0.0f64); // cos/sin of m*phi
    let sqrt2 = 2f64.sqrt();
    for m in 1..=coeffs.degree as usize {
        let (cn, sn) = (c * cp - s * sp, s * cp + c * sp);
        c = cn;
        s = sn;
        acc += sqrt2 * row[m] * (coeffs.cos_m[m - 1] * c + coeffs.sin_m[m - 1] * s);
    }
    Ok(coeffs.scale() * acc)
}

/// Evaluates the field on the whole grid, one Legendre row per latitude
/// and an incremental rotation for the phi sweep.
pub fn synthesize_field(coeffs: &CoefficientSet, grid: GridSpec) -> Result<FieldSample> {
    let ell = coeffs.degree as usize;
    let n_phi = grid.n_phi;
    let scale = coeffs.scale();
    let sqrt2 = 2f64.sqrt();
    let rows: Vec<Vec<f64>> = (0..grid.n_theta)
        .into_par_iter()
        .map(|i| {
            let lam = associated_legendre_row(coeffs.degree, grid.theta(i))?;
            let mut out = vec![0.0; n_phi];
            for (j, slot) in out.iter_mut().enumerate() {
                let phi = grid.phi(j);
                let (cp, sp) = (phi.cos(), phi.sin());
                let (mut c, mut s) = (1.0f64, 0.0f64);
                let mut acc = coeffs.m0 * lam[0];
                for m in 1..=ell {
                    let (cn, sn) = (c * cp - s * sp, s * cp + c * sp);
                    c = cn;
                    s = sn;
                    acc += sqrt2 * lam[m] * (coeffs.cos_m[m - 1] * c + coeffs.sin_m[m - 1] * s);
                }
                *slot = scale * acc;
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FieldSample {
        degree: coeffs.degree,
        mode: coeffs.mode,
        grid,
        values: rows.concat(),
    })
}

/// Monte Carlo estimate of E[T(x) T(y)] for each pair, with stderr.
pub fn empirical_covariance(
    ell: u32,
    mode: Mode,
    pairs: &[((f64, f64), (f64, f64))],
    replicates: u64,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    if replicates < 100 {
        return Err(Error::Config(format!(
            "need >= 100 replicates, got {replicates}"
        )));
    }
    let sums: Vec<(f64, f64)> = (0..replicates)
        .into_par_iter()
        .map(|r| -> Result<Vec<(f64, f64)>> {
            let coeffs = sample_coefficients_replicate(ell, mode, seed, r)?;
            pairs
                .iter()
                .map(|&(x, y)| {
                    let p = evaluate(&coeffs, x.0, x.1)? * evaluate(&coeffs, y.0, y.1)?;
                    Ok((p, p * p))
                })
                .collect()
        })
        .try_reduce(
            || vec![(0.0, 0.0); pairs.len()],
            |mut acc, prods| {
                for (a, p) in acc.iter_mut().zip(&prods) {
                    a.0 += p.0;
                    a.1 += p.1;
                }
                Ok(acc)
            },
        )?;
    let n = replicates as f64;
    Ok(sums
        .iter()
        .map(|&(s, s2)| {
            let mean = s / n;
            let var = ((s2 / n - mean * mean).max(0.0)) / (n - 1.0);
            (mean, var.sqrt())
        })
        .collect())
}

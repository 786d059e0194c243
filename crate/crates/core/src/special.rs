//! Legendre polynomials and derivatives, orthonormal associated Legendre
//! rows, Bessel J0, complete elliptic integrals, and the Gaussian norm
//! expectation. These are the kernels everything else is built on.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Crossover between the J0 power series and the asymptotic expansion.
/// Both branches agree to ~1e-12 in a neighbourhood of this point.
pub const BESSEL_CROSSOVER: f64 = 12.0;

/// Value of the Legendre polynomial of degree `ell` together with its first
/// two derivatives in the argument `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegendreTriple {
    pub p: f64,
    pub dp: f64,
    pub ddp: f64,
}

/// P_ell(x), P'_ell(x), P''_ell(x) by the stable three-term recurrence.
///
/// Derivatives use the degree recurrences P'_{k+1} = P'_{k-1} + (2k+1) P_k
/// and P''_{k+1} = P''_{k-1} + (2k+1) P'_k, which stay finite at x = ±1
/// (no division by 1 - x^2).
pub fn legendre_triple(ell: u32, x: f64) -> Result<LegendreTriple> {
    if !(-1.0..=1.0).contains(&x) || x.is_nan() {
        return Err(Error::Domain {
            op: "legendre_triple",
            detail: format!("argument {x} outside [-1, 1]"),
        });
    }
    if ell == 0 {
        return Ok(LegendreTriple { p: 1.0, dp: 0.0, ddp: 0.0 });
    }
    let (mut p0, mut p1) = (1.0f64, x);
    let (mut d0, mut d1) = (0.0f64, 1.0);
    let (mut s0, mut s1) = (0.0f64, 0.0);
    for k in 1..ell as u64 {
        let kf = k as f64;
        let w = 2.0 * kf + 1.0;
        let p2 = (w * x * p1 - kf * p0) / (kf + 1.0);
        let d2 = d0 + w * p1;
        let s2 = s0 + w * d1;
        p0 = p1;
        p1 = p2;
        d0 = d1;
        d1 = d2;
        s0 = s1;
        s1 = s2;
    }
    Ok(LegendreTriple { p: p1, dp: d1, ddp: s1 })
}

/// P_ell(x) alone.
pub fn legendre_p(ell: u32, x: f64) -> Result<f64> {
    Ok(legendre_triple(ell, x)?.p)
}

/// The colatitude-dependent part of the fully L2-orthonormal complex
/// spherical harmonics: returns lambda_{ell,m} for m = 0..=ell such that
/// Y_{ell,m}(theta, phi) = lambda_{ell,m}(theta) * exp(i m phi).
///
/// Normalised (Condon-Shortley phase included) so the Addition Theorem
/// (4 pi / (2 ell + 1)) * sum_m |Y_{ell,m}|^2 = 1 holds exactly.
pub fn associated_legendre_row(ell: u32, theta: f64) -> Result<Vec<f64>> {
    if !(0.0..=PI).contains(&theta) || theta.is_nan() {
        return Err(Error::Domain {
            op: "associated_legendre_row",
            detail: format!("colatitude {theta} outside [0, pi]"),
        });
    }
    let n = ell as usize;
    let (ct, st) = (theta.cos(), theta.sin());
    let mut row = vec![0.0f64; n + 1];
    // Sectoral seed lambda_{m,m}, walked up in m with per-step scaling.
    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    for m in 0..=n {
        let mf = m as f64;
        if m > 0 {
            pmm *= -st * ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt();
        }
        if m == n {
            row[m] = pmm;
            break;
        }
        // Upward recurrence in degree at fixed order m.
        let mut prev = pmm;
        let mut curr = ct * (2.0 * mf + 3.0).sqrt() * pmm;
        for l in (m + 2)..=n {
            let lf = l as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf)
                / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
                .sqrt();
            let next = a * (ct * curr - b * prev);
            prev = curr;
            curr = next;
        }
        row[m] = if n > m { curr } else { prev };
    }
    Ok(row)
}

/// Sums the cosine (P) and sine (Q) tails of the Hankel-form asymptotic
/// expansion J0(x) ~ sqrt(2/(pi x)) [P cos(x - pi/4) + Q sin(x - pi/4)],
/// together with their derivatives in x. Term magnitudes are
/// t_0 = 1, t_m = t_{m-1} (2m-1)^2 / (8 m x), with sign (-1)^{floor(m/2)};
/// truncation at the smallest term bounds the remainder.
fn j0_asymptotic_tails(x: f64) -> (f64, f64, f64, f64) {
    let mut p = 0.0;
    let mut q = 0.0;
    let mut pd = 0.0;
    let mut qd = 0.0;
    let mut t = 1.0f64;
    let mut prev = f64::INFINITY;
    for m in 0..40u32 {
        if t >= prev || t < 1e-19 {
            break;
        }
        prev = t;
        let signed = if (m / 2) % 2 == 0 { t } else { -t };
        if m % 2 == 0 {
            p += signed;
            pd += -(m as f64) * signed / x;
        } else {
            q += signed;
            qd += -(m as f64) * signed / x;
        }
        let mf = m as f64;
        t *= (2.0 * mf + 1.0) * (2.0 * mf + 1.0) / (8.0 * (mf + 1.0) * x);
    }
    (p, q, pd, qd)
}

/// Bessel function of the first kind J0. Power series below the crossover,
/// the two-cosine asymptotic form above it. Even in x.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x <= BESSEL_CROSSOVER {
        let q = 0.25 * x * x;
        let mut term = 1.0f64;
        let mut sum = 1.0f64;
        for k in 1..80u32 {
            term *= -q / ((k * k) as f64);
            sum += term;
            if term.abs() < 1e-18 {
                break;
            }
        }
        sum
    } else {
        let (p, q, _, _) = j0_asymptotic_tails(x);
        let w = x - PI / 4.0;
        (2.0 / (PI * x)).sqrt() * (w.cos() * p + w.sin() * q)
    }
}

/// d/dx J0(x) (equals -J1(x)). Odd in x.
pub fn bessel_j0_prime(x: f64) -> f64 {
    let ax = x.abs();
    let val = if ax == 0.0 {
        0.0
    } else if ax <= BESSEL_CROSSOVER {
        // term-wise derivative of the power series
        let q = 0.25 * ax * ax;
        let mut s = 0.0f64; // sum of k * (-q)^k / (k!)^2
        let mut term = 1.0f64;
        for k in 1..80u32 {
            term *= -q / ((k * k) as f64);
            s += (k as f64) * term;
            if term.abs() < 1e-18 {
                break;
            }
        }
        2.0 * s / ax
    } else {
        let (p, q, pd, qd) = j0_asymptotic_tails(ax);
        let amp = (2.0 / (PI * ax)).sqrt();
        let w = ax - PI / 4.0;
        let (cw, sw) = (w.cos(), w.sin());
        -0.5 / ax * amp * (cw * p + sw * q) + amp * (-sw * p + cw * q + cw * pd + sw * qd)
    };
    if x < 0.0 {
        -val
    } else {
        val
    }
}

/// 1 - J0(x) without cancellation for small x (the field-variance kernel of
/// the planar boundary-adapted model). Falls back to the direct difference
/// above the crossover.
pub fn one_minus_j0(x: f64) -> f64 {
    let x = x.abs();
    if x > BESSEL_CROSSOVER {
        return 1.0 - bessel_j0(x);
    }
    let q = 0.25 * x * x;
    let mut term = 1.0f64;
    let mut sum = 0.0f64;
    for k in 1..80u32 {
        term *= -q / ((k * k) as f64);
        sum -= term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// Complete elliptic integral of the second kind, parameter convention
/// E(m) = int_0^{pi/2} sqrt(1 - m sin^2 t) dt, via the AGM c-sum.
pub fn elliptic_e(m: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&m) || m.is_nan() {
        // tolerate roundoff just past 1
        if m > 1.0 && m < 1.0 + 1e-12 {
            return Ok(1.0);
        }
        return Err(Error::Domain {
            op: "elliptic_e",
            detail: format!("parameter {m} outside [0, 1]"),
        });
    }
    if m == 0.0 {
        return Ok(PI / 2.0);
    }
    if m == 1.0 {
        return Ok(1.0);
    }
    let mut a = 1.0f64;
    let mut b = (1.0 - m).sqrt();
    let mut sum = 0.5 * m; // 2^{-1} c_0^2 with c_0^2 = m
    let mut pow = 0.5;
    for _ in 0..40 {
        let c = 0.5 * (a - b);
        let an = 0.5 * (a + b);
        let bn = (a * b).sqrt();
        a = an;
        b = bn;
        pow *= 2.0;
        sum += pow * c * c;
        if c.abs() < 1e-17 * a {
            break;
        }
    }
    let k = PI / (2.0 * a);
    Ok(k * (1.0 - sum))
}

/// E[sqrt(var1 X^2 + var2 Y^2)] for independent standard Gaussians X, Y.
///
/// Closed form: with a^2 = max(var1, var2) and b^2 = min(var1, var2),
/// the angular average of the radius of the (a, b)-ellipse is
/// (2 a / pi) E(1 - b^2/a^2) and the Rayleigh radial mean is sqrt(pi/2),
/// giving sqrt(2/pi) * a * E(1 - b^2/a^2). Verified against the module
/// `oracles` product quadrature.
pub fn gaussian_norm_expectation(var1: f64, var2: f64) -> Result<f64> {
    if var1 < 0.0 || var2 < 0.0 || var1.is_nan() || var2.is_nan() {
        return Err(Error::Domain {
            op: "gaussian_norm_expectation",
            detail: format!("negative variance ({var1}, {var2})"),
        });
    }
    if var1 == 0.0 && var2 == 0.0 {
        return Err(Error::DegenerateInput(
            "gaussian_norm_expectation: both variances are zero".into(),
        ));
    }
    let a2 = var1.max(var2);
    let b2 = var1.min(var2);
    let a = a2.sqrt();
    Ok((2.0 / PI).sqrt() * a * elliptic_e(1.0 - b2 / a2)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn legendre_at_one() {
        for ell in [0u32, 1, 5, 17, 100, 2000] {
            let t = legendre_triple(ell, 1.0).unwrap();
            assert_eq!(t.p, 1.0);
            let expect = 0.5 * ell as f64 * (ell as f64 + 1.0);
            if ell > 0 {
                assert!((t.dp - expect).abs() / expect < 1e-10, "ell={ell}");
            }
        }
    }

    #[test]
    fn legendre_examples() {
        let t = legendre_triple(5, 1.0).unwrap();
        assert_eq!(t.p, 1.0);
        assert!((t.dp - 15.0).abs() < 1e-12);

        let t = legendre_triple(0, 0.3).unwrap();
        assert_eq!((t.p, t.dp, t.ddp), (1.0, 0.0, 0.0));

        // P4(x) = (35 x^4 - 30 x^2 + 3)/8
        let t = legendre_triple(4, 0.5).unwrap();
        assert!((t.p - (-0.2890625)).abs() < 1e-14);
    }

    #[test]
    fn legendre_domain_error() {
        assert!(legendre_triple(3, 1.0001).is_err());
        assert!(legendre_triple(3, -1.0001).is_err());
    }

    #[test]
    fn legendre_finite_difference() {
        let h = 1e-6;
        for &(ell, x) in &[(7u32, 0.3f64), (40, -0.62), (150, 0.11)] {
            let t = legendre_triple(ell, x).unwrap();
            let fd = (legendre_p(ell, x + h).unwrap() - legendre_p(ell, x - h).unwrap())
                / (2.0 * h);
            assert!(
                (t.dp - fd).abs() / t.dp.abs().max(1.0) < 1e-4,
                "ell={ell} x={x}: {} vs {}",
                t.dp,
                fd
            );
        }
    }

    #[test]
    fn associated_row_examples() {
        let row = associated_legendre_row(0, 1.234).unwrap();
        assert!((row[0] - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-15);

        let row = associated_legendre_row(1, 0.0).unwrap();
        assert!((row[0] - (3.0 / (4.0 * PI)).sqrt()).abs() < 1e-14);
        assert_eq!(row[1], 0.0);

        // Addition theorem at coincident points, ell = 3, theta = pi/3
        let ell = 3u32;
        let row = associated_legendre_row(ell, PI / 3.0).unwrap();
        let s: f64 = row[0] * row[0] + 2.0 * row[1..].iter().map(|v| v * v).sum::<f64>();
        assert!((4.0 * PI / (2.0 * ell as f64 + 1.0) * s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bessel_j0_examples() {
        assert_eq!(bessel_j0(0.0), 1.0);
        assert!(bessel_j0(2.404825557695773).abs() < 1e-9);
        // branch overlap near the crossover
        for &x in &[11.5f64, 11.9, 12.1, 12.5] {
            let q = 0.25 * x * x;
            let mut term = 1.0f64;
            let mut series = 1.0f64;
            for k in 1..120u32 {
                term *= -q / ((k * k) as f64);
                series += term;
            }
            assert!((bessel_j0(x) - series).abs() < 5e-12, "x={x}");
        }
    }

    #[test]
    fn bessel_j0_prime_matches_difference_quotient() {
        for &x in &[0.5f64, 3.0, 11.0, 20.0, 80.0] {
            // h large enough that series roundoff (amplified by 1/h) stays
            // below the quotient's truncation error
            let h = 1e-4;
            let fd = (bessel_j0(x + h) - bessel_j0(x - h)) / (2.0 * h);
            assert!((bessel_j0_prime(x) - fd).abs() < 1e-6, "x={x}");
        }
        // spot values against an independent multiprecision reference
        assert!((bessel_j0_prime(11.9) - 0.228983249661924).abs() < 1e-12);
        assert!((bessel_j0_prime(11.0) - 0.176785298956722).abs() < 1e-12);
    }

    #[test]
    fn elliptic_endpoints() {
        assert!((elliptic_e(0.0).unwrap() - PI / 2.0).abs() < 1e-15);
        assert_eq!(elliptic_e(1.0).unwrap(), 1.0);
        assert!(elliptic_e(-0.1).is_err());
        assert!(elliptic_e(1.1).is_err());
    }

    #[test]
    fn gaussian_norm_examples() {
        // isotropic: sigma * sqrt(pi/2)
        let v = gaussian_norm_expectation(2.0, 2.0).unwrap();
        assert!((v - 2.0f64.sqrt() * (PI / 2.0).sqrt()).abs() < 1e-13);
        // half-normal mean
        let v = gaussian_norm_expectation(1.0, 0.0).unwrap();
        assert!((v - (2.0 / PI).sqrt()).abs() < 1e-13);
        assert!(gaussian_norm_expectation(0.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn legendre_bounded_on_interval(ell in 0u32..400, x in -1.0f64..1.0) {
            let t = legendre_triple(ell, x).unwrap();
            prop_assert!(t.p.abs() <= 1.0 + 1e-12);
        }

        #[test]
        fn gaussian_norm_symmetric_and_homogeneous(
            v1 in 1e-6f64..10.0, v2 in 1e-6f64..10.0, t in 0.01f64..100.0
        ) {
            let a = gaussian_norm_expectation(v1, v2).unwrap();
            let b = gaussian_norm_expectation(v2, v1).unwrap();
            prop_assert!((a - b).abs() <= 1e-13 * a.abs());
            let scaled = gaussian_norm_expectation(t * v1, t * v2).unwrap();
            prop_assert!((scaled - t.sqrt() * a).abs() <= 1e-12 * scaled.abs());
        }

        #[test]
        fn addition_theorem_closure(ell in 0u32..50, ct1 in -0.999f64..0.999,
                                    ct2 in -0.999f64..0.999, dphi in 0.0f64..6.28) {
            let th1 = ct1.acos();
            let th2 = ct2.acos();
            let r1 = associated_legendre_row(ell, th1).unwrap();
            let r2 = associated_legendre_row(ell, th2).unwrap();
            // (4pi/(2l+1)) sum_m Y(x) conj(Y(y)) with Y = lambda e^{im phi}
            let mut s = r1[0] * r2[0];
            for m in 1..=ell as usize {
                s += 2.0 * r1[m] * r2[m] * (m as f64 * dphi).cos();
            }
            let cosd = ct1 * ct2 + th1.sin() * th2.sin() * dphi.cos();
            let p = legendre_p(ell, cosd.clamp(-1.0, 1.0)).unwrap();
            prop_assert!((4.0 * PI / (2.0 * ell as f64 + 1.0) * s - p).abs() < 1e-10);
        }
    }
}

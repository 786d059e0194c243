//! Command-line front end: density profiles, Kac-Rice tables, deficiency
//! fits, Monte Carlo campaigns, and the verification suite.

use clap::{Args, Parser, Subcommand};
use nodalkit::config::ExperimentConfig;
use nodalkit::covariance::{self, Branch};
use nodalkit::density;
use nodalkit::error::Error;
use nodalkit::kac_rice;
use nodalkit::nodal;
use nodalkit::oracles::{self, OracleReport};
use nodalkit::sampler::{self, GridSpec, Mode};
use nodalkit::special;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Parser)]
#[command(name = "nodalkit", version, about = "Zero density and expected nodal length \
of boundary-adapted random spherical harmonics on the Dirichlet hemisphere")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// config file of `key = value` lines; flags override file values
    #[arg(long)]
    config: Option<PathBuf>,
    /// worker thread cap (also via NODALKIT_THREADS)
    #[arg(long)]
    threads: Option<usize>,
    /// RNG seed
    #[arg(long)]
    seed: Option<u64>,
    /// output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a zero-density profile CSV (exact, far, near, planar baseline)
    Density {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        ell: Option<u32>,
        #[arg(long)]
        psi_min: Option<f64>,
        #[arg(long)]
        psi_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Kac-Rice expected-length table and deficiency fit
    Length {
        #[command(flatten)]
        common: CommonArgs,
        /// comma-separated degrees
        #[arg(long)]
        ells: Option<String>,
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long)]
        excision: Option<f64>,
        /// write the fit summary JSON here (stdout when omitted)
        #[arg(long)]
        fit_out: Option<PathBuf>,
    },
    /// Monte Carlo nodal-length campaign
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        ell: Option<u32>,
        /// boundary-adapted | full-sphere
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        replicates: Option<u64>,
        #[arg(long)]
        n_theta: Option<usize>,
        #[arg(long)]
        n_phi: Option<usize>,
        /// dump the first replicate's segments as CSV here
        #[arg(long)]
        segments_out: Option<PathBuf>,
        /// dump the first replicate's field grid (little-endian binary) here
        #[arg(long)]
        field_out: Option<PathBuf>,
    },
    /// Run the oracle and invariant suites; nonzero exit on failure
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// reduce Monte Carlo sample counts
        #[arg(long)]
        quick: bool,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            let kind = match e {
                Error::Config(_) | Error::Domain { .. } => "usage",
                _ => "numerical",
            };
            eprintln!(
                "{}",
                serde_json::json!({ "error": e.to_string(), "kind": kind })
            );
            if kind == "usage" {
                2
            } else {
                1
            }
        }
    };
    std::process::exit(code);
}

fn build_config(common: &CommonArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &common.config {
        cfg.load_file(path)?;
    }
    if let Ok(t) = std::env::var("NODALKIT_THREADS") {
        cfg.threads = Some(
            t.parse()
                .map_err(|e| Error::Config(format!("NODALKIT_THREADS: {e}")))?,
        );
    }
    if let Some(t) = common.threads {
        cfg.threads = Some(t);
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn init_threads(cfg: &ExperimentConfig) -> Result<(), Error> {
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn write_header(w: &mut dyn Write, cfg: &ExperimentConfig) -> Result<(), Error> {
    writeln!(w, "# schema=1")?;
    writeln!(w, "# config: {}", cfg.header_line())?;
    let ts = SystemTime::now().duration_since(UNIX_EPOCH).unwrap().as_secs();
    writeln!(w, "# timestamp: {ts}")?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Density { common, ell, psi_min, psi_max, points } => {
            let mut cfg = build_config(&common)?;
            if let Some(v) = ell {
                cfg.ell = v;
            }
            if let Some(v) = psi_min {
                cfg.psi_min = v;
            }
            if let Some(v) = psi_max {
                cfg.psi_max = v;
            }
            if let Some(v) = points {
                cfg.points = v;
            }
            cfg.psi_max = cfg.psi_max.min(PI * cfg.ell as f64 * (1.0 - 1e-12));
            cfg.validate()?;
            init_threads(&cfg)?;
            let profile = density::density_profile(cfg.ell, cfg.psi_min, cfg.psi_max, cfg.points)?;
            let mut w = open_out(&common.out)?;
            write_header(&mut *w, &cfg)?;
            writeln!(w, "quantity,psi,value,regime")?;
            for (psi, value, regime) in &profile.samples {
                writeln!(w, "k1,{psi},{value},{regime}")?;
            }
            for i in 0..cfg.points {
                let x2 = cfg.psi_min
                    * ((cfg.psi_max / cfg.psi_min).ln() * i as f64 / (cfg.points - 1) as f64)
                        .exp();
                writeln!(w, "planar,{x2},{},exact", density::planar_berry_density(x2)?)?;
            }
            Ok(())
        }
        Command::Length { common, ells, nodes, excision, fit_out } => {
            let mut cfg = build_config(&common)?;
            if let Some(v) = &ells {
                cfg.set("ells", v)?;
            }
            if let Some(v) = nodes {
                cfg.nodes = v;
            }
            if let Some(v) = excision {
                cfg.excision = v;
            }
            cfg.validate()?;
            init_threads(&cfg)?;
            let mut rows = Vec::new();
            for &ell in &cfg.ells {
                rows.push(kac_rice::expected_nodal_length_regions(
                    ell,
                    cfg.nodes,
                    cfg.excision,
                    cfg.eps0,
                    cfg.far_c,
                    false,
                )?);
            }
            let mut w = open_out(&common.out)?;
            write_header(&mut *w, &cfg)?;
            writeln!(w, "ell,total,leading,deficiency,hc,hi,hf")?;
            for p in &rows {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    p.degree,
                    p.total,
                    p.leading,
                    p.deficiency,
                    p.region_contributions[0],
                    p.region_contributions[1],
                    p.region_contributions[2]
                )?;
            }
            drop(w);
            if cfg.ells.len() >= 5 {
                let fit = kac_rice::deficiency_fit(&cfg.ells)?;
                let summary = serde_json::json!({
                    "schema": 1,
                    "config": cfg.header_line(),
                    "slope": fit.slope,
                    "intercept": fit.intercept,
                    "residuals": fit.residuals,
                });
                let mut fw = open_out(&fit_out)?;
                writeln!(fw, "{}", serde_json::to_string_pretty(&summary).unwrap())?;
            }
            Ok(())
        }
        Command::Simulate {
            common,
            ell,
            mode,
            replicates,
            n_theta,
            n_phi,
            segments_out,
            field_out,
        } => {
            let mut cfg = build_config(&common)?;
            if let Some(v) = ell {
                cfg.ell = v;
            }
            if let Some(v) = &mode {
                cfg.set("mode", v)?;
            }
            if let Some(v) = replicates {
                cfg.replicates = v;
            }
            if let Some(v) = n_theta {
                cfg.n_theta = v;
            }
            if let Some(v) = n_phi {
                cfg.n_phi = v;
            }
            cfg.validate()?;
            init_threads(&cfg)?;
            let mode = if cfg.mode == "full-sphere" {
                Mode::FullSphere
            } else {
                Mode::BoundaryAdapted
            };
            let (nt, np) = cfg.grid_dims();
            let grid = match mode {
                Mode::BoundaryAdapted => GridSpec::hemisphere(nt, np),
                Mode::FullSphere => GridSpec::full_sphere(2 * nt, np),
            };
            let result =
                nodal::monte_carlo_nodal_length(cfg.ell, mode, cfg.replicates, grid, cfg.seed)?;
            let prediction = match mode {
                Mode::BoundaryAdapted => {
                    let psi_cut = result
                        .theta_cut
                        .map(|t| cfg.ell as f64 * (PI - 2.0 * t))
                        .unwrap_or(kac_rice::DEFAULT_EXCISION_PSI);
                    kac_rice::expected_nodal_length_opts(
                        cfg.ell,
                        cfg.nodes,
                        psi_cut.max(kac_rice::DEFAULT_EXCISION_PSI),
                        false,
                    )?
                    .total
                }
                Mode::FullSphere => kac_rice::berard_baseline(cfg.ell),
            };
            if let Some(path) = &segments_out {
                let coeffs = sampler::sample_coefficients_replicate(cfg.ell, mode, cfg.seed, 0)?;
                let field = sampler::synthesize_field(&coeffs, grid)?;
                let segs = nodal::extract_nodal_length(
                    &field,
                    Some(&coeffs),
                    nodal::DEFAULT_EXCLUSION_STEPS,
                )?;
                let mut sw = BufWriter::new(File::create(path)?);
                nodal::write_segments_csv(&segs, &mut sw)?;
            }
            if let Some(path) = &field_out {
                let coeffs = sampler::sample_coefficients_replicate(cfg.ell, mode, cfg.seed, 0)?;
                let field = sampler::synthesize_field(&coeffs, grid)?;
                field.write_binary(&mut BufWriter::new(File::create(path)?))?;
            }
            let mut w = open_out(&common.out)?;
            write_header(&mut *w, &cfg)?;
            writeln!(w, "# mean={} stderr={} prediction={}", result.mean, result.stderr, prediction)?;
            writeln!(w, "replicate,length")?;
            for (r, v) in result.values.iter().enumerate() {
                writeln!(w, "{r},{v}")?;
            }
            Ok(())
        }
        Command::Verify { common, quick } => {
            let cfg = build_config(&common)?;
            init_threads(&cfg)?;
            let reports = verification_suite(cfg.seed, quick)?;
            let mut w = open_out(&common.out)?;
            write_header(&mut *w, &cfg)?;
            writeln!(w, "quantity,oracle,main,abs_dev,rel_dev,tolerance,pass")?;
            let mut all_pass = true;
            for r in &reports {
                all_pass &= r.pass;
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    r.quantity,
                    r.oracle_value,
                    r.main_value,
                    r.abs_deviation,
                    r.rel_deviation,
                    r.tolerance,
                    r.pass
                )?;
            }
            if !all_pass {
                return Err(Error::NumericalFailure {
                    op: "verify",
                    diagnostic: "one or more oracle checks failed".into(),
                });
            }
            Ok(())
        }
    }
}

/// Adaptive-free Simpson rule reference for the elliptic integral,
/// independent of the AGM implementation.
fn elliptic_e_simpson(m: f64) -> f64 {
    let n = 1 << 14;
    let h = 0.5 * PI / n as f64;
    let f = |t: f64| (1.0 - m * t.sin().powi(2)).sqrt();
    let mut s = f(0.0) + f(0.5 * PI);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn verification_suite(seed: u64, quick: bool) -> Result<Vec<OracleReport>, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reports = Vec::new();

    // Legendre recurrence against the exact rational series
    for _ in 0..20 {
        let ell = rng.random_range(1u32..=60);
        let x: f64 = rng.random_range(-1.0..1.0);
        reports.push(OracleReport::new(
            &format!("legendre(ell={ell})"),
            oracles::legendre_series_oracle(ell, x)?,
            special::legendre_triple(ell, x)?.p,
            1e-9,
        ));
    }

    // Addition theorem closure
    for _ in 0..10 {
        let ell = rng.random_range(1u32..=50);
        let (t1, t2) = (rng.random_range(0.01..3.1), rng.random_range(0.01..3.1));
        let dphi: f64 = rng.random_range(0.0..6.28);
        let r1 = special::associated_legendre_row(ell, t1)?;
        let r2 = special::associated_legendre_row(ell, t2)?;
        let mut s = r1[0] * r2[0];
        for m in 1..=ell as usize {
            s += 2.0 * r1[m] * r2[m] * (m as f64 * dphi).cos();
        }
        let cosd =
            (t1.cos() * t2.cos() + t1.sin() * t2.sin() * dphi.cos()).clamp(-1.0, 1.0);
        reports.push(OracleReport::new(
            &format!("addition_theorem(ell={ell})"),
            special::legendre_triple(ell, cosd)?.p,
            4.0 * PI / (2.0 * ell as f64 + 1.0) * s,
            1e-10,
        ));
    }

    // Dirichlet vanishing on the equator
    for _ in 0..10 {
        let ell = rng.random_range(1u32..=80);
        let x = (rng.random_range(0.01..1.55), rng.random_range(0.0..6.28));
        let y = (PI / 2.0, rng.random_range(0.0..6.28));
        reports.push(OracleReport::new(
            &format!("dirichlet(ell={ell})"),
            0.0,
            covariance::covariance(ell, x, y)?,
            1e-12,
        ));
    }

    // Gaussian norm expectation against product quadrature
    for &(v1, v2) in &[(2.0, 0.5), (3.0, 0.2), (1.0, 1.0), (0.7, 0.0)] {
        reports.push(OracleReport::new(
            &format!("gaussian_norm({v1},{v2})"),
            oracles::quadrature_norm_oracle(v1, v2)?,
            special::gaussian_norm_expectation(v1, v2)?,
            1e-9,
        ));
    }

    // elliptic integral against Simpson quadrature
    reports.push(OracleReport::new(
        "elliptic_e(0.5)",
        elliptic_e_simpson(0.5),
        special::elliptic_e(0.5)?,
        1e-10,
    ));

    // Bessel first zero
    reports.push(OracleReport::new(
        "bessel_j0(first zero)",
        0.0,
        special::bessel_j0(2.404825557695773),
        1e-9,
    ));

    // k1 closed form vs quadrature path
    let points = if quick { 10 } else { 100 };
    for _ in 0..points {
        let ell = rng.random_range(2u32..=300);
        let psi = rng.random_range(1e-3..PI * ell as f64 * 0.999);
        let cc = covariance::conditional_covariance_at_psi(ell, psi, Branch::Auto)?;
        let quad = oracles::quadrature_norm_oracle(cc.omega[0].max(0.0), cc.omega[1].max(0.0))?
            / (2.0 * PI * cc.variance).sqrt();
        reports.push(OracleReport::new(
            &format!("k1(ell={ell},psi={psi:.3})"),
            quad,
            density::k1_exact(ell, psi)?,
            1e-8,
        ));
    }

    // Monte Carlo conditional density
    let samples = if quick { 200_000 } else { 1_000_000 };
    for &(ell, psi) in &[(2u32, PI), (100, 0.05), (40, 7.0)] {
        let (est, stderr) = oracles::mc_conditional_k1(ell, psi, samples, seed ^ 0x5eed)?;
        let main = density::k1_exact(ell, psi)?;
        let mut rep = OracleReport::new(&format!("mc_k1(ell={ell},psi={psi:.2})"), est, main, 0.0);
        rep.tolerance = 3.0 * stderr;
        rep.pass = rep.abs_deviation <= rep.tolerance;
        reports.push(rep);
    }

    // two-regime overlap
    for &ell in &[10u32, 100] {
        let mut worst = 0.0f64;
        for i in 0..=25 {
            let psi = 0.3 + 0.5 * i as f64 / 25.0;
            let a = density::k1_exact_branch(ell, psi, Branch::Direct)?;
            let b = density::k1_exact_branch(ell, psi, Branch::Series)?;
            worst = worst.max((a - b).abs() / a.max(1.0));
        }
        let mut rep = OracleReport::new(&format!("branch_overlap(ell={ell})"), 0.0, worst, 1e-6);
        rep.pass = worst <= 1e-6;
        reports.push(rep);
    }

    Ok(reports)
}

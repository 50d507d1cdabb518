//! One function per subcommand. Each fills in its defaults on the config
//! before running, so the embedded config is fully resolved.

use std::io::Write;

use rayon::prelude::*;
use serde_json::{json, Value};

use torushu::io::{pointset_to_csv_string, read_pointset_file, write_sweep_csv, write_wce_csv, SweepRow, WceRow};
use torushu::lattice::LatticeJson;
use torushu::qmc::DEFAULT_WCE_TOL;
use torushu::variance::l2_discrepancy_sq;
use torushu::{
    ball_volume, choose_spectrum, expected_variance_dpp_closed, expected_variance_dpp_with, expected_variance_jittered,
    fit_regime_with, gen_dpp, gen_jittered, gen_sublattice, gen_uniform, make_partition, normalize_lattice,
    qmc_design_fit, variance_montecarlo, variance_realspace, variance_spectral_with, wce_detailed, Error, KernelSpec,
    Lattice, PointSet, Regime, RegimeRow, RngSpec, Truncation, VarianceEstimate,
};

use crate::config::RunConfig;
use crate::output::{csv_preamble, emit, emit_partial, sink, write_json};
use crate::CliError;

const DEFAULT_SEED: u64 = 0;
const DEFAULT_MC_SAMPLES: usize = 200_000;
const DEFAULT_CELL_SAMPLES: usize = 1_000;
const DEFAULT_QUAD_TOL: f64 = 1e-8;
const DEFAULT_REPLICATES: usize = 1;

fn need<T: Clone>(v: &Option<T>, flag: &str) -> Result<T, CliError> {
    v.clone().ok_or_else(|| CliError::Precondition(format!("missing --{flag}")))
}

/// Default dual truncation radius when neither --W nor --tol is given: the
/// sums stay around 10⁶ terms per point.
fn default_radius(d: usize) -> f64 {
    match d {
        1 => 100_000.0,
        2 => 1000.0,
        3 => 100.0,
        4 => 30.0,
        _ => 12.0,
    }
}

fn lattice(cfg: &mut RunConfig) -> Result<Lattice, CliError> {
    let name = cfg.lattice.get_or_insert_with(|| "identity2".into()).clone();
    if let Ok(l) = Lattice::preset(&name) {
        return Ok(l);
    }
    let text = std::fs::read_to_string(&name)
        .map_err(|e| CliError::Precondition(format!("--lattice '{name}' is neither a preset nor a readable file: {e}")))?;
    let j: LatticeJson =
        serde_json::from_str(&text).map_err(|e| CliError::Precondition(format!("{name}: {e}")))?;
    Ok(normalize_lattice(j.dim, &j.basis)?)
}

/// Dual truncation from --W / --tol, defaulting to a fixed radius.
fn truncation(cfg: &mut RunConfig, d: usize) -> Truncation {
    match (cfg.w, cfg.tol) {
        (Some(w), _) => Truncation::Radius(w),
        (None, Some(t)) => Truncation::Tolerance(t),
        (None, None) => Truncation::Radius(*cfg.w.get_or_insert(default_radius(d))),
    }
}

fn rng_root(cfg: &mut RunConfig) -> RngSpec {
    RngSpec::new(*cfg.seed.get_or_insert(DEFAULT_SEED), *cfg.stream.get_or_insert(0))
}

/// `m` with `m^d = n`, if any.
fn grid_side(n: usize, d: usize) -> Option<usize> {
    let m = (n as f64).powf(1.0 / d as f64).round() as usize;
    (m.checked_pow(d as u32) == Some(n)).then_some(m)
}

/// How a generator is parameterized at a given size.
#[derive(Clone, Copy)]
enum Size {
    N(usize),
    M(usize),
}

fn generate(lattice: &Lattice, generator: &str, size: Size, spec: RngSpec) -> Result<PointSet, CliError> {
    let d = lattice.dim();
    let side = |size: Size| -> Result<usize, CliError> {
        match size {
            Size::M(m) => Ok(m),
            Size::N(n) => grid_side(n, d)
                .ok_or_else(|| CliError::Precondition(format!("{generator} needs N = m^{d}, got {n}"))),
        }
    };
    let count = |size: Size| match size {
        Size::N(n) => n,
        Size::M(m) => m.pow(d as u32),
    };
    Ok(match generator {
        "uniform" => gen_uniform(lattice, count(size), spec)?,
        "jittered" => gen_jittered(&make_partition(lattice, side(size)?)?, spec)?,
        "sublattice" => gen_sublattice(lattice, side(size)?)?,
        "dpp" => gen_dpp(&choose_spectrum(lattice, count(size))?, spec)?,
        other => {
            return Err(CliError::Precondition(format!(
                "unknown generator '{other}' (uniform, jittered, sublattice, dpp)"
            )))
        }
    })
}

/// Size from --N or --m, whichever the generator takes.
fn size_flag(cfg: &RunConfig, generator: &str) -> Result<Size, CliError> {
    match (generator, cfg.n, cfg.m) {
        ("jittered" | "sublattice", _, Some(m)) => Ok(Size::M(m)),
        (_, Some(n), _) => Ok(Size::N(n)),
        (_, None, Some(m)) => Ok(Size::M(m)),
        _ => Err(CliError::Precondition("missing --N or --m".into())),
    }
}

/// The point set from --points, or generated in-process from the generator
/// flags.
fn points(cfg: &mut RunConfig) -> Result<PointSet, CliError> {
    if let Some(p) = &cfg.points {
        let x = read_pointset_file(p)?;
        cfg.lattice = Some(serde_json::to_string(x.lattice()).expect("lattice serializes"));
        return Ok(x);
    }
    let l = lattice(cfg)?;
    let generator = need(&cfg.generator, "generator (or --points)")?;
    let size = size_flag(cfg, &generator)?;
    let spec = rng_root(cfg);
    generate(&l, &generator, size, spec)
}

pub fn gen(mut cfg: RunConfig) -> Result<(), CliError> {
    let x = points(&mut cfg)?;
    let format = cfg.format.get_or_insert_with(|| "csv".into()).clone();
    match format.as_str() {
        "csv" => {
            let text = pointset_to_csv_string(&x);
            let (header, rows) = text.split_once('\n').unwrap_or((&text, ""));
            let mut out = sink(&cfg)?;
            write!(out, "{header}\n{}{rows}", csv_preamble(&cfg)?).map_err(|e| CliError::Precondition(e.to_string()))?;
            out.flush().map_err(|e| CliError::Precondition(e.to_string()))
        }
        "json" => {
            let rows: Vec<&[f64]> = x.points().collect();
            emit(
                &cfg,
                &json!({
                    "lattice": x.lattice(),
                    "provenance": x.provenance(),
                    "N": x.len(),
                    "points": rows,
                }),
            )
        }
        other => Err(CliError::Precondition(format!("unknown format '{other}' (csv, json)"))),
    }
}

fn check_format_json(cfg: &mut RunConfig) -> Result<(), CliError> {
    match cfg.format.get_or_insert_with(|| "json".into()).as_str() {
        "json" => Ok(()),
        other => Err(CliError::Precondition(format!("this command writes JSON, not '{other}'"))),
    }
}

/// Whether two estimates agree within their stated bounds (three standard
/// errors for Monte Carlo).
fn agree(a: &VarianceEstimate, b: &VarianceEstimate) -> bool {
    let width = |e: &VarianceEstimate| {
        if e.samples.is_some() {
            3.0 * e.error_bound
        } else {
            e.error_bound
        }
    };
    (a.value - b.value).abs() <= width(a) + width(b) + 1e-8 * (1.0 + a.value.abs())
}

pub fn variance(mut cfg: RunConfig) -> Result<(), CliError> {
    check_format_json(&mut cfg)?;
    let x = points(&mut cfg)?;
    let r = need(&cfg.r, "R")?;
    let method = cfg.method.get_or_insert_with(|| "all".into()).clone();
    let methods: Vec<&str> = match method.as_str() {
        "all" => vec!["spectral", "realspace", "montecarlo"],
        m @ ("spectral" | "realspace" | "montecarlo") => vec![m],
        other => {
            return Err(CliError::Precondition(format!(
                "unknown method '{other}' (spectral, realspace, montecarlo, all)"
            )))
        }
    };
    let trunc = methods.contains(&"spectral").then(|| truncation(&mut cfg, x.dim()));
    let mc = methods.contains(&"montecarlo").then(|| {
        let samples = *cfg.samples.get_or_insert(DEFAULT_MC_SAMPLES);
        (samples, rng_root(&mut cfg).substream(1))
    });
    let mut estimates = Vec::new();
    let mut skipped = Vec::new();
    for m in methods {
        let est = match m {
            "spectral" => variance_spectral_with(&x, r, trunc.expect("set above")),
            "realspace" => variance_realspace(&x, r),
            _ => {
                let (s, spec) = mc.expect("set above");
                variance_montecarlo(&x, r, s, spec)
            }
        };
        match est {
            Ok(e) => estimates.push(e),
            Err(e @ Error::BallNotEmbedded { .. }) if method == "all" => skipped.push(json!({"method": m, "reason": e.to_string()})),
            Err(e @ Error::ToleranceUnreachable { .. }) => {
                let Error::ToleranceUnreachable { value, error_bound, radius, .. } = e else { unreachable!() };
                let partial = json!({"N": x.len(), "R": r, "estimates": estimates, "partial": {
                    "method": m, "value": value, "error_bound": error_bound, "truncation_radius": radius}});
                return Err(emit_partial(&cfg, e, partial));
            }
            Err(e) => return Err(e.into()),
        }
    }
    let consistent = estimates.iter().enumerate().all(|(i, a)| estimates[i + 1..].iter().all(|b| agree(a, b)));
    emit(
        &cfg,
        &json!({"N": x.len(), "R": r, "estimates": estimates, "skipped": skipped, "methods_agree": consistent}),
    )
}

pub fn wce(mut cfg: RunConfig) -> Result<(), CliError> {
    check_format_json(&mut cfg)?;
    let x = points(&mut cfg)?;
    let alpha = need(&cfg.alpha, "alpha")?;
    let trunc = match cfg.w {
        Some(w) => Truncation::Radius(w),
        None => Truncation::Tolerance(*cfg.tol.get_or_insert(DEFAULT_WCE_TOL)),
    };
    let k = KernelSpec::with_truncation(x.lattice(), alpha, trunc)?;
    match wce_detailed(&x, &k) {
        Ok(res) => emit(&cfg, &json!({"N": x.len(), "alpha": alpha, "wce": res})),
        Err(e @ Error::ToleranceUnreachable { .. }) => {
            let Error::ToleranceUnreachable { value, error_bound, radius, .. } = e else { unreachable!() };
            let partial = json!({"N": x.len(), "alpha": alpha, "wce": {
                "wce": value, "wce_sq": value * value, "tail_bound": error_bound, "truncation_radius": radius}});
            Err(emit_partial(&cfg, e, partial))
        }
        Err(e) => Err(e.into()),
    }
}

pub fn discrepancy(mut cfg: RunConfig) -> Result<(), CliError> {
    check_format_json(&mut cfg)?;
    let x = points(&mut cfg)?;
    let tol = *cfg.quad_tol.get_or_insert(DEFAULT_QUAD_TOL);
    let q = l2_discrepancy_sq(&x, tol)?;
    emit(
        &cfg,
        &json!({
            "N": x.len(),
            "l2_discrepancy": q.value.max(0.0).sqrt(),
            "l2_discrepancy_sq": q.value,
            "quadrature_error": q.error,
            "evaluations": q.evaluations,
        }),
    )
}

pub fn dpp_expected(mut cfg: RunConfig) -> Result<(), CliError> {
    check_format_json(&mut cfg)?;
    let l = lattice(&mut cfg)?;
    let n = need(&cfg.n, "N")?;
    let r = need(&cfg.r, "R")?;
    let s = choose_spectrum(&l, n)?;
    let method = cfg.method.get_or_insert_with(|| "spectral".into()).clone();
    let est = match method.as_str() {
        "closed" => expected_variance_dpp_closed(&s, r),
        "spectral" => {
            let t = truncation(&mut cfg, l.dim());
            expected_variance_dpp_with(&s, r, t)
        }
        other => return Err(CliError::Precondition(format!("unknown method '{other}' (spectral, closed)"))),
    };
    match est {
        Ok(e) => emit(&cfg, &json!({"N": n, "R": r, "estimate": e})),
        Err(e @ Error::ToleranceUnreachable { .. }) => {
            let Error::ToleranceUnreachable { value, error_bound, radius, .. } = e else { unreachable!() };
            let partial = json!({"N": n, "R": r, "value": value, "error_bound": error_bound, "truncation_radius": radius});
            Err(emit_partial(&cfg, e, partial))
        }
        Err(e) => Err(e.into()),
    }
}

pub fn jittered_expected(mut cfg: RunConfig) -> Result<(), CliError> {
    check_format_json(&mut cfg)?;
    let l = lattice(&mut cfg)?;
    let m = match (cfg.m, cfg.n) {
        (Some(m), _) => m,
        (None, Some(n)) => grid_side(n, l.dim())
            .ok_or_else(|| CliError::Precondition(format!("jittered sampling needs N = m^{}, got {n}", l.dim())))?,
        _ => return Err(CliError::Precondition("missing --m (or --N = m^d)".into())),
    };
    let r = need(&cfg.r, "R")?;
    let samples = *cfg.samples.get_or_insert(DEFAULT_CELL_SAMPLES);
    let spec = rng_root(&mut cfg);
    let p = make_partition(&l, m)?;
    let e = expected_variance_jittered(&p, r, samples, spec)?;
    emit(&cfg, &json!({"N": p.num_cells(), "m": m, "R": r, "estimate": e}))
}

/// One replicate's measurement.
struct Sample {
    value: f64,
    error: f64,
}

/// Realspace when the ball is embedded, spectral otherwise.
fn measure_variance(x: &PointSet, r: f64, trunc: Truncation) -> Result<Sample, CliError> {
    let e = if 2.0 * r < x.lattice().shortest_vector_length() {
        variance_realspace(x, r)?
    } else {
        variance_spectral_with(x, r, trunc)?
    };
    Ok(Sample {
        value: e.value,
        error: e.error_bound,
    })
}

pub fn scan(mut cfg: RunConfig) -> Result<(), CliError> {
    let l = lattice(&mut cfg)?;
    let d = l.dim();
    let regime = cfg.regime.get_or_insert_with(|| "large".into()).clone();
    let generator = need(&cfg.generator, "generator")?;
    let deterministic = generator == "sublattice";
    let replicates = if deterministic { 1 } else { *cfg.replicates.get_or_insert(DEFAULT_REPLICATES) };
    if replicates == 0 {
        return Err(CliError::Precondition("--replicates must be >= 1".into()));
    }
    let delta = *cfg.delta.get_or_insert(torushu::variance::DEFAULT_DELTA);
    let format = cfg.format.get_or_insert_with(|| "json".into()).clone();
    if format != "json" && format != "csv" {
        return Err(CliError::Precondition(format!("unknown format '{format}' (csv, json)")));
    }
    let root = rng_root(&mut cfg);
    let trunc = truncation(&mut cfg, d);

    // (N, radius or t, radius) per sweep point.
    let points: Vec<(usize, f64, f64)> = match regime.as_str() {
        "large" | "small" | "qmc" => {
            let ns = need(&cfg.ns, "Ns")?;
            if ns.len() < 4 {
                return Err(CliError::Precondition(format!("--Ns needs at least 4 values, got {}", ns.len())));
            }
            match regime.as_str() {
                "large" => {
                    let r = need(&cfg.r, "R")?;
                    ns.iter().map(|&n| (n, r, r)).collect()
                }
                "small" => {
                    let r = need(&cfg.r, "R")?;
                    let gamma = *cfg.r_exponent.get_or_insert(1.0 / (2.0 * d as f64));
                    let n0 = ns[0] as f64;
                    ns.iter()
                        .map(|&n| {
                            let rn = r * (n as f64 / n0).powf(-gamma);
                            (n, rn, rn)
                        })
                        .collect()
                }
                _ => ns.iter().map(|&n| (n, 0.0, 0.0)).collect(),
            }
        }
        "threshold" => {
            let n = need(&cfg.n, "N")?;
            let ts = need(&cfg.t_grid, "t-grid")?;
            if ts.len() < 4 {
                return Err(CliError::Precondition(format!("--t-grid needs at least 4 values, got {}", ts.len())));
            }
            let scale = (n as f64).powf(-1.0 / d as f64);
            ts.iter().map(|&t| (n, t, t * scale)).collect()
        }
        other => {
            return Err(CliError::Precondition(format!(
                "unknown regime '{other}' (large, small, threshold, qmc)"
            )))
        }
    };
    let kernel = if regime == "qmc" {
        let alpha = need(&cfg.alpha, "alpha")?;
        Some(KernelSpec::with_truncation(&l, alpha, trunc)?)
    } else {
        None
    };
    if kernel.is_none() {
        let hd = l.half_diameter();
        if let Some(&(_, _, r)) = points.iter().find(|p| !(p.2 > 0.0 && p.2 < hd)) {
            return Err(CliError::Precondition(format!("radius {r} outside (0, {hd})")));
        }
    }

    // Threshold scans reuse one set per replicate across all t.
    let per_point: Vec<Vec<Sample>> = points
        .iter()
        .enumerate()
        .map(|(i, &(n, _, r))| {
            let stream = if regime == "threshold" { 0 } else { i as u64 };
            (0..replicates)
                .into_par_iter()
                .map(|k| {
                    let spec = root.substream(stream).substream(k as u64);
                    let x = generate(&l, &generator, Size::N(n), spec)?;
                    match &kernel {
                        Some(kern) => {
                            let w = wce_detailed(&x, kern)?;
                            Ok(Sample {
                                value: w.wce_sq,
                                error: w.tail_bound,
                            })
                        }
                        None => measure_variance(&x, r, trunc),
                    }
                })
                .collect::<Result<Vec<_>, CliError>>()
        })
        .collect::<Result<_, _>>()?;

    let mean = |v: &[Sample]| v.iter().map(|s| s.value).sum::<f64>() / v.len() as f64;
    let rows: Vec<RegimeRow> = points
        .iter()
        .zip(&per_point)
        .map(|(&(n, r_or_t, _), s)| RegimeRow {
            n,
            r_or_t,
            variance: if kernel.is_some() { mean(s).sqrt() } else { mean(s) },
        })
        .collect();
    let report = match (&kernel, regime.as_str()) {
        (Some(k), _) => qmc_design_fit(rows.clone(), k.alpha(), d),
        (None, "large") => fit_regime_with(&rows, Regime::Large, d, delta)?,
        (None, "small") => fit_regime_with(&rows, Regime::Small, d, delta)?,
        _ => fit_regime_with(&rows, Regime::Threshold, d, delta)?,
    };

    let mut out = sink(&cfg)?;
    let io = |e: std::io::Error| CliError::Precondition(e.to_string());
    if format == "csv" {
        write!(out, "{}", csv_preamble(&cfg)?).map_err(io)?;
        if let Some(k) = &kernel {
            let generator = generator.as_str();
            let table: Vec<WceRow> = points
                .iter()
                .zip(&per_point)
                .flat_map(|(&(n, _, _), s)| {
                    s.iter().map(move |v| WceRow {
                        generator: generator.to_string(),
                        d,
                        n,
                        alpha: k.alpha(),
                        wce: v.value.sqrt(),
                        tail_bound: v.error,
                    })
                })
                .collect();
            write_wce_csv(&table, &mut out)?;
        } else {
            write_sweep_csv(&sweep_rows(&generator, d, &points, &per_point), &mut out)?;
        }
        writeln!(out, "# report={}", serde_json::to_string(&report).expect("report serializes")).map_err(io)?;
        out.flush().map_err(io)
    } else {
        drop(out);
        let table: Vec<Value> = points
            .iter()
            .zip(&per_point)
            .map(|(&(n, r_or_t, r), s)| {
                json!({
                    "N": n,
                    "R_or_t": r_or_t,
                    "R": r,
                    "mean": mean(s),
                    "values": s.iter().map(|v| v.value).collect::<Vec<_>>(),
                    "errors": s.iter().map(|v| v.error).collect::<Vec<_>>(),
                })
            })
            .collect();
        let expected_count: Vec<f64> = points.iter().map(|&(n, _, r)| n as f64 * ball_volume(d, r)).collect();
        let rec = crate::output::envelope(
            &cfg,
            "ok",
            None,
            json!({"report": report, "sweep": table, "expected_counts": expected_count}),
        );
        write_json(&cfg, &rec)
    }
}

fn sweep_rows(generator: &str, d: usize, points: &[(usize, f64, f64)], per_point: &[Vec<Sample>]) -> Vec<SweepRow> {
    points
        .iter()
        .zip(per_point)
        .flat_map(|(&(n, r_or_t, _), s)| {
            s.iter().enumerate().map(move |(k, v)| SweepRow {
                generator: generator.to_string(),
                d,
                n,
                r_or_t,
                replicate: k,
                variance: v.value,
                error: v.error,
            })
        })
        .collect()
}

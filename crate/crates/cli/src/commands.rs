use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use semiflow::decay::{envelope_check, fit_decay, DecayReport, EnvelopeCheck, DEFAULT_NOISE_FLOOR};
use semiflow::renewal::{correlation_curve, RenewalOptions};
use semiflow::spectral::{dolgopyat_probe, lasota_yorke_fit, DolgopyatOptions, LasotaYorkeFit, ProbeBasket};
use semiflow::suspension::{laplace_chi_series, laplace_direct, LaplaceValue};
use semiflow::transfer::ResolventOptions;
use semiflow::uni::{
    cancellation_set_measure, cohomology_verdict, partition_points, CancellationReport, CohomologyReport,
    PartitionPoints,
};
use semiflow::{Complex64, Error, ExperimentConfig, SuspensionObservable, System};

use crate::output::Sink;
use crate::{say, Failure};

/// Tail-to-head amplitude ratio above which a curve is reported as not mixing.
pub const NON_MIXING_RATIO: f64 = 0.5;

/// Route gap accepted as agreement between the two Laplace routes.
pub const ROUTE_TOLERANCE: f64 = 1e-3;

fn num(v: f64) -> String {
    format!("{v}")
}

fn observables(cfg: &ExperimentConfig, system: &System) -> Result<(SuspensionObservable, SuspensionObservable), Failure> {
    let make = |name: &str| -> Result<SuspensionObservable, Failure> {
        let o = SuspensionObservable::parse(name, Arc::clone(system.roof()))?;
        Ok(if cfg.observables.centered { o.centered(system) } else { o })
    };
    Ok((make(&cfg.observables.e)?, make(&cfg.observables.f)?))
}

fn renewal_options(cfg: &ExperimentConfig) -> RenewalOptions {
    RenewalOptions {
        dt: cfg.t_grid.dt,
        out_step: cfg.t_grid.step,
    }
}

#[derive(Serialize)]
struct SrbReport {
    eigenvalue: f64,
    iterations: usize,
    mean_roof: f64,
    density_min: f64,
    density_max: f64,
}

pub fn srb(_cfg: &ExperimentConfig, system: &System, sink: &mut Sink) -> Result<(), Failure> {
    let eig = system.eigen();
    let density = system.srb().density();
    let grid = system.grid();
    let rows: Vec<Vec<String>> = (0..grid.len())
        .map(|k| {
            vec![
                num(grid.node(k)),
                grid.interval_of_node(k).to_string(),
                num(density.values()[k].re),
            ]
        })
        .collect();
    let re = density.values().iter().map(|v| v.re);
    let report = SrbReport {
        eigenvalue: eig.eigenvalue,
        iterations: eig.iterations,
        mean_roof: system.mean_roof(),
        density_min: re.clone().fold(f64::INFINITY, f64::min),
        density_max: re.fold(f64::NEG_INFINITY, f64::max),
    };
    sink.csv("density.csv", &["x", "interval", "density"], &rows)?;
    sink.json("srb.json", &report)?;
    Ok(())
}

/// True when the largest `|rho|` on the last quarter of the window is at least
/// `NON_MIXING_RATIO` times the largest on the first quarter.
pub fn non_mixing(ts: &[f64], rho: &[Complex64]) -> bool {
    let t_end = ts.last().copied().unwrap_or(0.0);
    let sup = |keep: &dyn Fn(f64) -> bool| {
        ts.iter().zip(rho).filter(|(t, _)| keep(**t)).map(|(_, r)| r.norm()).fold(0.0, f64::max)
    };
    let head = sup(&|t| t <= 0.25 * t_end);
    let tail = sup(&|t| t >= 0.75 * t_end);
    head > 0.0 && tail >= NON_MIXING_RATIO * head
}

#[derive(Serialize)]
struct CorrelateReport {
    e: String,
    f: String,
    centered: bool,
    non_mixing: bool,
    decay: DecayReport,
    /// Envelope of the best fit with its prefactor inflated by 1.5.
    envelope: EnvelopeCheck,
}

pub fn correlate(cfg: &ExperimentConfig, system: &System, sink: &mut Sink) -> Result<(), Failure> {
    let (e, f) = observables(cfg, system)?;
    let curve = correlation_curve(system, &e, &f, cfg.t_grid.t_max, &renewal_options(cfg))?;
    let rows: Vec<Vec<String>> = (0..curve.t.len())
        .map(|k| {
            vec![
                num(curve.t[k]),
                num(curve.rho[k].re),
                num(curve.rho[k].im),
                num(curve.delta[k].re),
                num(curve.delta[k].im),
                num(curve.chi[k].re),
                num(curve.chi[k].im),
            ]
        })
        .collect();
    sink.csv(
        "correlation.csv",
        &["t", "rho_re", "rho_im", "delta_re", "delta_im", "chi_re", "chi_im"],
        &rows,
    )?;
    let decay = fit_decay(&curve.t, &curve.rho, DEFAULT_NOISE_FLOOR)?;
    let best = decay.fit(decay.best);
    let envelope = envelope_check(&curve.t, &curve.rho, 1.5 * best.prefactor, best.delta);
    let report = CorrelateReport {
        e: cfg.observables.e.clone(),
        f: cfg.observables.f.clone(),
        centered: cfg.observables.centered,
        non_mixing: non_mixing(&curve.t, &curve.rho),
        decay,
        envelope,
    };
    sink.json("correlation.json", &report)?;
    if report.non_mixing {
        say("NON-MIXING");
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepRow {
    b: f64,
    status: &'static str,
    n: Option<usize>,
    nodes: Option<usize>,
}

#[derive(Serialize)]
struct RouteRow {
    direct: LaplaceValue,
    series: LaplaceValue,
    relative_gap: f64,
}

#[derive(Serialize)]
struct SpectralReport {
    lasota_yorke: Option<LyLine>,
    c3: f64,
    sweep: Vec<SweepRow>,
    /// Least-squares slope of `N(b)` against `ln |b|` over contracting rows.
    log_slope: Option<f64>,
    routes: Vec<RouteRow>,
    max_route_gap: Option<f64>,
    routes_agree: Option<bool>,
}

#[derive(Serialize)]
struct LyLine {
    c9: f64,
    lambda: f64,
    alpha: f64,
    n1: usize,
    records: usize,
}

fn ly(cfg: &ExperimentConfig, system: &System, b_list: &[f64]) -> Result<LasotaYorkeFit, Failure> {
    let basket = ProbeBasket::standard(cfg.seed, system.alpha());
    Ok(lasota_yorke_fit(system, b_list, &cfg.spectral.n_grid, &basket)?)
}

fn high_frequencies(cfg: &ExperimentConfig) -> Vec<f64> {
    cfg.b_grid.iter().copied().filter(|b| b.abs() >= 3.0).collect()
}

fn log_slope(rows: &[SweepRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.n.map(|n| (r.b.abs().ln(), n as f64)))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / k, pts.iter().map(|p| p.1).sum::<f64>() / k);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn spectral(cfg: &ExperimentConfig, system: &System, sink: &mut Sink) -> Result<(), Failure> {
    let high = high_frequencies(cfg);
    let fit = if high.is_empty() { None } else { Some(ly(cfg, system, &high)?) };
    let c3 = fit.as_ref().map_or(1.0, |f| f.c3());
    if let Some(fit) = &fit {
        let rows: Vec<Vec<String>> = fit
            .records
            .iter()
            .map(|r| vec![r.probe.clone(), num(r.b), r.n.to_string(), num(r.seminorm), num(r.ratio)])
            .collect();
        sink.csv("lasota_yorke.csv", &["probe", "b", "n", "seminorm", "ratio"], &rows)?;
    }

    let basket = ProbeBasket::standard(cfg.seed, system.alpha());
    let mut opts = DolgopyatOptions::new(c3);
    opts.target = cfg.spectral.target;
    opts.cap = cfg.spectral.cap;
    let mut sweep = Vec::new();
    for &b in &cfg.b_grid {
        sweep.push(match dolgopyat_probe(system, b, &opts, &basket) {
            Ok(t) => SweepRow {
                b,
                status: "CONTRACTED",
                n: Some(t.n),
                nodes: Some(t.nodes),
            },
            Err(Error::NoContraction { .. }) => SweepRow {
                b,
                status: "NO_CONTRACTION",
                n: None,
                nodes: None,
            },
            Err(e) => return Err(e.into()),
        });
    }
    let rows: Vec<Vec<String>> = sweep
        .iter()
        .map(|r| {
            vec![
                num(r.b),
                r.n.map_or(String::new(), |n| n.to_string()),
                r.status.to_string(),
                r.nodes.map_or(String::new(), |n| n.to_string()),
            ]
        })
        .collect();
    sink.csv("dolgopyat.csv", &["b", "n", "status", "nodes"], &rows)?;

    let mut routes = Vec::new();
    if cfg.spectral.route_samples > 0 {
        let (e, f) = observables(cfg, system)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let s_list: Vec<Complex64> = (0..cfg.spectral.route_samples)
            .map(|_| Complex64::new(rng.random_range(0.5..2.0), rng.random_range(-20.0..20.0)))
            .collect();
        let a_min = s_list.iter().map(|s| s.re).fold(f64::INFINITY, f64::min);
        let t_max = (1e10f64 / a_min).ln() / a_min;
        for direct in laplace_direct(system, &e, &f, &s_list, t_max, &renewal_options(cfg))? {
            let series = laplace_chi_series(system, &e, &f, direct.s, &ResolventOptions::default())?;
            let relative_gap = (direct.value - series.value).norm() / series.value.norm();
            routes.push(RouteRow {
                direct,
                series,
                relative_gap,
            });
        }
    }
    let max_route_gap = routes.iter().map(|r| r.relative_gap).reduce(f64::max);
    let report = SpectralReport {
        lasota_yorke: fit.as_ref().map(|f| LyLine {
            c9: f.c9,
            lambda: f.lambda,
            alpha: f.alpha,
            n1: f.n1,
            records: f.records.len(),
        }),
        c3,
        log_slope: log_slope(&sweep),
        sweep,
        routes_agree: max_route_gap.map(|g| g < ROUTE_TOLERANCE),
        max_route_gap,
        routes,
    };
    sink.json("spectral.json", &report)?;
    Ok(())
}

#[derive(Serialize)]
struct PartitionRow {
    b: f64,
    status: &'static str,
    partition: Option<PartitionPoints>,
    half_well_spaced: Option<bool>,
}

#[derive(Serialize)]
struct UniReport {
    cohomology: CohomologyReport,
    partitions: Vec<PartitionRow>,
    cancellation: Option<CancellationReport>,
}

pub fn uni(cfg: &ExperimentConfig, system: &System, sink: &mut Sink) -> Result<(), Failure> {
    let (map, roof) = (system.map(), system.roof());
    let cohomology = cohomology_verdict(map, roof, cfg.uni.max_depth, cfg.uni.threshold)?;
    let rows: Vec<Vec<String>> = cohomology
        .depths
        .iter()
        .map(|d| vec![d.depth.to_string(), num(d.d)])
        .collect();
    sink.csv("depths.csv", &["depth", "d"], &rows)?;

    let mut partitions = Vec::new();
    for &b in &cfg.b_grid {
        partitions.push(match partition_points(map, roof, &cohomology.witness, b) {
            Ok(p) => PartitionRow {
                b,
                status: "OK",
                half_well_spaced: Some(p.half_well_spaced()),
                partition: Some(p),
            },
            Err(Error::InsufficientOscillation(_)) => PartitionRow {
                b,
                status: "INSUFFICIENT_OSCILLATION",
                partition: None,
                half_well_spaced: None,
            },
            Err(Error::InvalidArgument(_)) => PartitionRow {
                b,
                status: "LOW_FREQUENCY",
                partition: None,
                half_well_spaced: None,
            },
            Err(e) => return Err(e.into()),
        });
    }

    let cancellation = match high_frequencies(cfg).first() {
        Some(&b) => {
            let c3 = ly(cfg, system, &[b])?.c3();
            let one = |_: f64| Complex64::new(1.0, 0.0);
            Some(cancellation_set_measure(system, b, one, cfg.uni.n_iter, c3)?)
        }
        None => None,
    };
    say(serde_json::to_value(cohomology.verdict).map_err(std::io::Error::other)?.as_str().unwrap_or(""));
    sink.json(
        "uni.json",
        &UniReport {
            cohomology,
            partitions,
            cancellation,
        },
    )?;
    Ok(())
}

use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use serde::Serialize;
use serde_json::json;

use orthowall_core::analysis::{
    equilibrium_spectrum, g_sweep, recommended_grid, GridRecommendation,
};
use orthowall_core::energy::el_residual;
use orthowall_core::minimize::minimize;
use orthowall_core::reduced::{reduced_energy, reduced_orbit};
use orthowall_core::{Equilibrium, Init, Params, Profile, SolveOptions};

use crate::config::{InitSpec, RunConfig};
use crate::error::CliError;
use crate::output::{
    num, opt_num, read_profile, write_json, CsvSink, RunManifest, PROFILE_HEADER,
    REDUCED_HEADER, SWEEP_HEADER, SWEEP_PLOT_HEADER,
};

fn params(cfg: &RunConfig) -> Result<Params, CliError> {
    Ok(Params::new(cfg.eps, cfg.g, cfg.half_length, cfg.n)?)
}

fn options(cfg: &RunConfig) -> Result<SolveOptions, CliError> {
    let init = match &cfg.init {
        InitSpec::Testfn => Init::TestFunction,
        InitSpec::Reduced => Init::ReducedLimit,
        InitSpec::File(path) => Init::Given(read_profile(path)?),
    };
    let opts = SolveOptions {
        grad_tol: cfg.grad_tol,
        max_iters: cfg.max_iters,
        memory: cfg.memory,
        init,
    };
    opts.validate()?;
    Ok(opts)
}

fn out_dir(cfg: &RunConfig) -> Result<&Path, CliError> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(|source| CliError::Output {
        path: cfg.out_dir.display().to_string(),
        source,
    })?;
    Ok(&cfg.out_dir)
}

fn path_string(p: &Path) -> String {
    p.display().to_string()
}

fn finish(
    mut manifest: RunManifest,
    dir: &Path,
    started: Instant,
) -> Result<PathBuf, CliError> {
    let path = dir.join("manifest.json");
    manifest.outputs.push(path_string(&path));
    manifest.wall_time_seconds = started.elapsed().as_secs_f64();
    write_json(&path, &manifest)?;
    Ok(path)
}

/// Central differences with the clamp values beyond the ends.
fn central_derivative(v: &[f64], left: f64, right: f64, h: f64) -> Vec<f64> {
    let n = v.len() - 1;
    (0..=n)
        .map(|i| {
            let lo = if i == 0 { left } else { v[i - 1] };
            let hi = if i == n { right } else { v[i + 1] };
            (hi - lo) / (2.0 * h)
        })
        .collect()
}

pub fn write_profile_csv(
    path: PathBuf,
    p: &Profile,
    params: &Params,
) -> Result<PathBuf, CliError> {
    let h = p.step();
    let da = central_derivative(&p.a, 1.0, 0.0, h);
    let db = central_derivative(&p.b, 0.0, 1.0, h);
    let res = el_residual(p, params)?;
    let n = p.intervals();
    let mut sink = CsvSink::create(path, &PROFILE_HEADER)?;
    for i in 0..=n {
        // the residual lives on interior nodes only
        let (ra, rb) = if i == 0 || i == n {
            (None, None)
        } else {
            (Some(res.res_a[i - 1]), Some(res.res_b[i - 1]))
        };
        sink.row([
            num(p.x[i]),
            num(p.a[i]),
            num(p.b[i]),
            num(da[i]),
            num(db[i]),
            opt_num(ra),
            opt_num(rb),
        ])?;
    }
    sink.finish()
}

pub fn solve(cfg: &RunConfig) -> Result<(), CliError> {
    let started = Instant::now();
    let params = params(cfg)?;
    let opts = options(cfg)?;
    let dir = out_dir(cfg)?;
    let r = minimize(&params, &opts)?;
    let profile_path = write_profile_csv(dir.join("profile.csv"), &r.profile, &params)?;
    let residual = el_residual(&r.profile, &params)?;

    let mut manifest = RunManifest::new("solve", cfg);
    manifest.outputs.push(path_string(&profile_path));
    manifest.converged = r.converged;
    manifest.insert("energy", r.energy);
    manifest.insert("grad_norm", r.grad_norm);
    manifest.insert("iterations", r.iterations);
    manifest.insert("status", r.status);
    manifest.insert("shift", r.shift);
    manifest.insert("el_residual_sup", residual.sup_norm);
    manifest.insert("circle_sup", r.profile.circle_sup());
    finish(manifest, dir, started)?;

    if !r.converged {
        return Err(CliError::NotConverged(format!(
            "{:?} after {} iterations, gradient sup-norm {:e} > {:e}",
            r.status, r.iterations, r.grad_norm, cfg.grad_tol
        )));
    }
    info!(
        "energy {} after {} iterations, gradient {:e}",
        r.energy.total, r.iterations, r.grad_norm
    );
    Ok(())
}

pub fn reduced(cfg: &RunConfig) -> Result<(), CliError> {
    let started = Instant::now();
    let params = params(cfg)?;
    let orbit = reduced_orbit(cfg.g)?;
    let dir = out_dir(cfg)?;
    let xj = orbit.x_junction;

    let mut xs = params.grid();
    let at = xs.partition_point(|&x| x < xj);
    if xs.get(at) != Some(&xj) {
        xs.insert(at, xj);
    }
    let mut sink = CsvSink::create(dir.join("reduced.csv"), &REDUCED_HEADER)?;
    for &x in &xs {
        // both invariants hold at the junction itself
        let inner = (x <= xj).then(|| orbit.invariant_inner(x));
        let outer = (x >= xj).then(|| orbit.invariant_outer(x));
        sink.row([
            num(x),
            num(orbit.a(x)),
            num(orbit.b(x)),
            num(orbit.b_prime(x)),
            opt_num(inner),
            opt_num(outer),
        ])?;
    }
    let csv_path = sink.finish()?;
    let energy = reduced_energy(&orbit, 1e-12)?;

    let mut manifest = RunManifest::new("reduced", cfg);
    manifest.outputs.push(path_string(&csv_path));
    manifest.converged = true;
    manifest.insert(
        "junction",
        json!({ "x": xj, "B": orbit.b(xj), "B_prime": orbit.b_prime(xj) }),
    );
    manifest.insert("reduced_energy", energy);
    manifest.insert("orbit", orbit);
    finish(manifest, dir, started)?;
    Ok(())
}

#[derive(Serialize)]
struct EquilibriumEntry {
    equilibrium: Equilibrium,
    point: [f64; 2],
    a_roots: Vec<[f64; 2]>,
    b_roots: [f64; 2],
    hyperbolic: bool,
    slowest_rate: f64,
}

#[derive(Serialize)]
struct SpectrumFile {
    params: Params,
    equilibria: Vec<EquilibriumEntry>,
    slowest_rate: f64,
    recommended: GridRecommendation<f64>,
}

pub fn spectrum(cfg: &RunConfig) -> Result<(), CliError> {
    let params = params(cfg)?;
    let dir = out_dir(cfg)?;
    let equilibria: Vec<EquilibriumEntry> = Equilibrium::ALL
        .iter()
        .map(|&e| {
            let s = equilibrium_spectrum(&params, e);
            let (a, b) = e.point::<f64>();
            EquilibriumEntry {
                equilibrium: e,
                point: [a, b],
                a_roots: s.a_roots.iter().map(|z| [z.re, z.im]).collect(),
                b_roots: s.b_roots,
                hyperbolic: s.hyperbolic,
                slowest_rate: s.slowest_rate(),
            }
        })
        .collect();
    let slowest_rate = equilibria
        .iter()
        .map(|e| e.slowest_rate)
        .fold(f64::INFINITY, f64::min);
    let file = SpectrumFile {
        params,
        equilibria,
        slowest_rate,
        recommended: recommended_grid(&params),
    };
    write_json(&dir.join("spectrum.json"), &file)
}

pub fn sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let started = Instant::now();
    let opts = options(cfg)?;
    let dir = out_dir(cfg)?;
    let mut table = CsvSink::create(dir.join("sweep.csv"), &SWEEP_HEADER)?;
    let mut plot = CsvSink::create(dir.join("sweep_plot.csv"), &SWEEP_PLOT_HEADER)?;
    let mut points = Vec::new();
    let mut write_error = None;

    let outcome = g_sweep(cfg.eps, &cfg.g_list, &opts, cfg.sweep_max_step, |rec, res| {
        if write_error.is_some() {
            return;
        }
        let mut emit = || -> Result<(), CliError> {
            table.row([
                num(rec.g),
                num(rec.min_energy),
                num(rec.testfn_bound),
                num(rec.circle_sup),
                rec.converged.to_string(),
            ])?;
            table.flush()?;
            let p = &res.profile;
            for i in 0..p.x.len() {
                plot.row([num(rec.g), num(p.x[i]), num(p.a[i]), num(p.b[i])])?;
            }
            plot.flush()
        };
        if let Err(e) = emit() {
            write_error = Some(e);
        }
        points.push(json!({
            "g": rec.g,
            "L": rec.half_length,
            "n": rec.n,
            "iterations": res.iterations,
            "grad_norm": res.grad_norm,
            "status": res.status,
        }));
    });
    if let Some(e) = write_error {
        return Err(e);
    }
    let table_path = table.finish()?;
    let plot_path = plot.finish()?;

    let mut manifest = RunManifest::new("sweep", cfg);
    manifest.outputs.push(path_string(&table_path));
    manifest.outputs.push(path_string(&plot_path));
    manifest.converged = outcome.is_ok();
    manifest.insert("points", points);
    if let Err(e) = &outcome {
        warn!("sweep stopped: {e}");
        manifest.insert("error", e.to_string());
    }
    finish(manifest, dir, started)?;
    outcome?;
    Ok(())
}

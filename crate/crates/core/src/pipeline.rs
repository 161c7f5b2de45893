//! End-to-end runs behind the command-line tool: each step computes, checks and
//! writes its artifacts into an output directory.
//!
//! Every JSON artifact embeds the resolved configuration and its content hash.
//! Nothing time- or machine-dependent is written, so two runs with the same
//! configuration produce byte-identical files.

use serde::Serialize;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use crate::bloch::{band_sweep, BandSweep};
use crate::config::RunConfig;
use crate::dirac::{
    band_slope_oracle, c_sharp_from_g2, default_gap_k_grid, parity_block_split, verify_gap_opening,
    DiracPointData, GapReport,
};
use crate::error::{Error, Result};
use crate::multiscale::{fitted_order, residual_field, solvability_check, Ansatz, UniformGrid};
use crate::newton::{error_vs_ansatz, frequency_window_check, solve_soliton, FdOrder, NewtonConfig, SolitonField};
use crate::nld::{integrate_homoclinic, kernel_check, HomoclinicOptions, KernelReport, NldParams, SpinorProfile};
use crate::output::{write_csv, write_json};

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    #[serde(flatten)]
    body: T,
    config: &'a RunConfig,
    input_hash: String,
}

fn stamped<'a, T: Serialize>(cfg: &'a RunConfig, body: T) -> Stamped<'a, T> {
    Stamped { body, config: cfg, input_hash: cfg.content_hash() }
}

fn ensure_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    Ok(())
}

fn delta_tag(delta: f64) -> String {
    format!("{delta}")
}

/// Band values on a uniform grid over `[0, 2 pi]`, written to `bands.csv`.
pub fn cmd_bands(cfg: &RunConfig, out: &Path) -> Result<BandSweep> {
    cfg.validate()?;
    ensure_dir(out)?;
    let n = cfg.band_k_points;
    let ks: Vec<f64> = (0..n).map(|i| 2.0 * PI * i as f64 / (n - 1) as f64).collect();
    let sweep = band_sweep(&cfg.potential_v()?, &ks, cfg.fourier_cutoff()?, cfg.n_bands)?;
    let rows = sweep.k_grid.iter().zip(&sweep.bands).flat_map(|(&k, vals)| {
        vals.iter().enumerate().map(move |(b, &mu)| vec![k, (b + 1) as f64, mu])
    });
    write_csv(&out.join("bands.csv"), &["k", "band_index", "mu"], rows)?;
    Ok(sweep)
}

#[derive(Serialize)]
struct PotentialSpec<'a> {
    #[serde(rename = "V")]
    v: &'a [(usize, f64)],
    #[serde(rename = "W")]
    w: &'a [(usize, f64)],
}

#[derive(Serialize)]
struct DiracJson<'a> {
    band_pair: (usize, usize),
    mu_star: f64,
    c_sharp: f64,
    theta_sharp: f64,
    beta1: f64,
    beta2: f64,
    cutoff: usize,
    potential_spec: PotentialSpec<'a>,
    crossing: usize,
    c_sharp_from_g2: f64,
    slope_oracle: (f64, f64),
    block_cross_coupling: f64,
}

#[derive(Serialize)]
struct GapJson<'a> {
    reports: &'a [GapReport],
}

/// Crossing, effective coefficients and one gap report per `delta`. Writes
/// `dirac_point.json` and `gap_report.json`; fails if any gap does not open.
pub fn cmd_dirac(cfg: &RunConfig, out: &Path) -> Result<(DiracPointData, Vec<GapReport>)> {
    cfg.validate()?;
    ensure_dir(out)?;
    let data = DiracPointData::compute(&cfg.potential_v()?, &cfg.potential_w()?, cfg.fourier_cutoff()?, cfg.crossing)?;
    let c = data.coefficients;
    let mat = crate::bloch::assemble_fb_matrix(&data.point.potential_v, PI, data.point.cutoff)?;
    let json = DiracJson {
        band_pair: data.point.band_pair,
        mu_star: data.point.mu_star,
        c_sharp: c.c_sharp,
        theta_sharp: c.theta_sharp,
        beta1: c.beta1,
        beta2: c.beta2,
        cutoff: cfg.cutoff,
        potential_spec: PotentialSpec { v: &cfg.v, w: &cfg.w },
        crossing: cfg.crossing,
        c_sharp_from_g2: c_sharp_from_g2(&data.point),
        slope_oracle: band_slope_oracle(&data.point, 1e-4)?,
        block_cross_coupling: parity_block_split(&mat, data.point.cutoff).cross_coupling,
    };
    write_json(&out.join("dirac_point.json"), &stamped(cfg, json))?;

    let ks = default_gap_k_grid();
    let reports = cfg
        .deltas
        .iter()
        .map(|&d| verify_gap_opening(&data, d, cfg.a, &ks))
        .collect::<Result<Vec<_>>>()?;
    write_json(&out.join("gap_report.json"), &stamped(cfg, GapJson { reports: &reports }))?;
    if let Some(r) = reports.iter().find(|r| !r.is_open()) {
        return Err(Error::GapNotOpen(format!(
            "{} band values inside the window at delta = {}",
            r.violations.len(),
            r.delta
        )));
    }
    Ok((data, reports))
}

/// Dirac coefficients for the `nld` step: configuration overrides where given,
/// otherwise the values computed from `V` and `W`.
pub fn nld_params(cfg: &RunConfig, data: Option<&DiracPointData>) -> Result<NldParams> {
    let pick = |o: Option<f64>, f: fn(&DiracPointData) -> f64| -> Result<f64> {
        match (o, data) {
            (Some(v), _) => Ok(v),
            (None, Some(d)) => Ok(f(d)),
            (None, None) => Err(Error::Config("missing Dirac coefficient and no crossing data".into())),
        }
    };
    let p = NldParams::new(
        pick(cfg.c_sharp, |d| d.coefficients.c_sharp)?,
        pick(cfg.theta_sharp, |d| d.coefficients.theta_sharp)?,
        cfg.mu_sharp,
        pick(cfg.beta1, |d| d.coefficients.beta1)?,
        pick(cfg.beta2, |d| d.coefficients.beta2)?,
    )?;
    if cfg.mu_sharp.abs() >= cfg.a * p.theta_sharp.abs() {
        return Err(Error::InvalidParameter(format!(
            "|mu_sharp| = {} must be below a |theta_sharp| = {}",
            cfg.mu_sharp.abs(),
            cfg.a * p.theta_sharp.abs()
        )));
    }
    Ok(p)
}

fn overrides_complete(cfg: &RunConfig) -> bool {
    cfg.c_sharp.is_some() && cfg.theta_sharp.is_some() && cfg.beta1.is_some() && cfg.beta2.is_some()
}

#[derive(Serialize)]
struct NldJson<'a> {
    decay_rate_fit: f64,
    h_drift_max: f64,
    sigma_min_restricted: f64,
    sigma_min_unrestricted: f64,
    decay_rate_predicted: f64,
    parity_defect: f64,
    shooting_defect: f64,
    translation_mode_residual: f64,
    y_max: f64,
    params: &'a NldParams,
}

fn homoclinic_options(cfg: &RunConfig) -> HomoclinicOptions {
    HomoclinicOptions { y_max: cfg.y_max, tol: cfg.ode_tol, points_per_side: cfg.profile_points }
}

fn run_nld(cfg: &RunConfig, out: &Path, params: &NldParams) -> Result<(SpinorProfile, KernelReport)> {
    let profile = integrate_homoclinic(params, &homoclinic_options(cfg))?;
    let kernel = kernel_check(&profile, cfg.kernel_points)?;
    let rows = (0..profile.len()).step_by(cfg.export_stride).map(|i| {
        let pm = profile.psi_minus(i);
        vec![profile.y[i], profile.u[i], profile.v[i], pm.re, pm.im, profile.hamiltonian[i]]
    });
    write_csv(
        &out.join("profile.csv"),
        &["y", "u", "v", "re_psi_minus", "im_psi_minus", "H"],
        rows,
    )?;
    let d = profile.diagnostics;
    let json = NldJson {
        decay_rate_fit: d.decay_rate_fit,
        h_drift_max: d.h_drift_max,
        sigma_min_restricted: kernel.sigma_min_restricted,
        sigma_min_unrestricted: kernel.sigma_min_unrestricted,
        decay_rate_predicted: d.decay_rate_predicted,
        parity_defect: d.parity_defect,
        shooting_defect: d.shooting_defect,
        translation_mode_residual: kernel.translation_mode_residual,
        y_max: profile.y_max,
        params,
    };
    write_json(&out.join("nld.json"), &stamped(cfg, json))?;
    Ok((profile, kernel))
}

/// Homoclinic profile and kernel diagnostics; writes `profile.csv` and `nld.json`.
pub fn cmd_nld(cfg: &RunConfig, out: &Path) -> Result<(SpinorProfile, KernelReport)> {
    cfg.validate()?;
    ensure_dir(out)?;
    let data = if overrides_complete(cfg) {
        None
    } else {
        Some(DiracPointData::compute(&cfg.potential_v()?, &cfg.potential_w()?, cfg.fourier_cutoff()?, cfg.crossing)?)
    };
    let params = nld_params(cfg, data.as_ref())?;
    run_nld(cfg, out, &params)
}

#[derive(Debug, Clone, Serialize)]
pub struct SolitonReport {
    pub delta: f64,
    pub mu_delta: f64,
    pub iters: usize,
    pub final_residual: f64,
    pub l2_error: f64,
    pub h2_error: f64,
    pub jacobian_min_eig: f64,
    pub jacobian_negative_count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub deltas: Vec<f64>,
    pub residual_norms: Vec<f64>,
    pub fitted_order: Option<f64>,
    pub residual_norms_u0_only: Vec<f64>,
    pub fitted_order_u0_only: Option<f64>,
    pub h2_errors: Vec<f64>,
    pub h2_fitted_order: Option<f64>,
    pub solvability_relative: f64,
    pub u1_kernel_projection: f64,
}

#[derive(Debug, Clone)]
pub struct SolitonOutcome {
    pub scaling: ScalingReport,
    pub solitons: Vec<SolitonReport>,
}

fn order_of(deltas: &[f64], ys: &[f64]) -> Option<f64> {
    (deltas.len() >= 2).then(|| fitted_order(deltas, ys))
}

fn run_soliton(
    cfg: &RunConfig,
    out: &Path,
    data: &DiracPointData,
    gaps: &[GapReport],
    profile: &SpinorProfile,
) -> Result<SolitonOutcome> {
    let ansatz = Ansatz::new(data, profile)?;
    let solv = solvability_check(&ansatz.forcing, data);
    let newton_cfg = NewtonConfig {
        max_iters: cfg.newton_max_iters,
        tol: cfg.newton_tol,
        damping: cfg.newton_damping,
        order: FdOrder::Fourth,
    };
    let mut scaling = ScalingReport {
        deltas: cfg.deltas.clone(),
        residual_norms: Vec::new(),
        fitted_order: None,
        residual_norms_u0_only: Vec::new(),
        fitted_order_u0_only: None,
        h2_errors: Vec::new(),
        h2_fitted_order: None,
        solvability_relative: solv.relative(),
        u1_kernel_projection: ansatz.u1.kernel_projection,
    };
    let mut solitons = Vec::new();
    for (&delta, gap) in cfg.deltas.iter().zip(gaps) {
        if !frequency_window_check(data, profile.params.mu_sharp, delta, cfg.a, Some(gap)) {
            return Err(Error::InvalidParameter(format!(
                "mu_sharp = {} at delta = {delta} is outside the certified gap window",
                profile.params.mu_sharp
            )));
        }
        let tag = delta_tag(delta);
        let mu_delta = ansatz.mu_delta(delta);
        let grid = UniformGrid::symmetric(ansatz.default_half_length(delta), cfg.residual_h)?;
        let field = ansatz.sample(delta, &grid, true)?;
        let res = residual_field(&field, data, mu_delta);
        scaling.residual_norms.push((grid.h * res.iter().map(|r| r * r).sum::<f64>()).sqrt());
        let rows = (0..grid.n)
            .step_by(cfg.export_stride)
            .map(|i| vec![grid.x(i), field.samples[i], res[i]]);
        write_csv(&out.join(format!("field_delta_{tag}.csv")), &["x", "u_delta", "residual"], rows)?;
        drop(field);
        let bare = ansatz.sample(delta, &grid, false)?;
        scaling.residual_norms_u0_only.push(crate::multiscale::residual_norm(&bare, data, mu_delta));
        drop(bare);

        let sol = solve_soliton(&ansatz, delta, cfg.newton_h, &newton_cfg)?;
        let (l2, h2) = error_vs_ansatz(&sol, &ansatz)?;
        scaling.h2_errors.push(h2);
        write_soliton_csv(&out.join(format!("soliton_delta_{tag}.csv")), &sol, cfg.export_stride)?;
        let report = SolitonReport {
            delta,
            mu_delta: sol.mu_delta,
            iters: sol.iterations,
            final_residual: sol.final_residual,
            l2_error: l2,
            h2_error: h2,
            jacobian_min_eig: sol.jacobian_min_abs_eig,
            jacobian_negative_count: sol.jacobian_negative_count,
        };
        write_json(&out.join(format!("soliton_delta_{tag}.json")), &stamped(cfg, &report))?;
        solitons.push(report);
    }
    scaling.fitted_order = order_of(&cfg.deltas, &scaling.residual_norms);
    scaling.fitted_order_u0_only = order_of(&cfg.deltas, &scaling.residual_norms_u0_only);
    scaling.h2_fitted_order = order_of(&cfg.deltas, &scaling.h2_errors);
    write_json(&out.join("scaling.json"), &stamped(cfg, &scaling))?;
    Ok(SolitonOutcome { scaling, solitons })
}

/// Full-line samples of a parity-reduced solution, every `stride`-th point.
fn write_soliton_csv(path: &Path, sol: &SolitonField, stride: usize) -> Result<()> {
    let s = match sol.parity {
        crate::newton::Parity::Even => 1.0,
        crate::newton::Parity::Odd => -1.0,
    };
    let n = sol.grid.n;
    let left = (0..n).rev().map(|i| (-sol.grid.x(i), s * sol.samples[i]));
    let right = (0..n).map(|i| (sol.grid.x(i), sol.samples[i]));
    let rows = left.chain(right).step_by(stride).map(|(x, u)| vec![x, u]);
    write_csv(path, &["x", "u"], rows)
}

/// Ansatz residual scaling and Newton-refined solitons for every `delta`.
pub fn cmd_soliton(cfg: &RunConfig, out: &Path) -> Result<SolitonOutcome> {
    cfg.validate()?;
    ensure_dir(out)?;
    let (data, gaps) = cmd_dirac(cfg, out)?;
    let params = NldParams::from_coefficients(&data.coefficients, cfg.mu_sharp)?;
    let profile = integrate_homoclinic(&params, &homoclinic_options(cfg))?;
    run_soliton(cfg, out, &data, &gaps, &profile)
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, pass: value <= threshold }
    }

    fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, pass: value >= threshold }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifySummary {
    pub checks: Vec<Check>,
    pub all_pass: bool,
}

fn crossing_checks(data: &DiracPointData, gaps: &[GapReport]) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let c = data.coefficients;
    let (s_minus, s_plus) = band_slope_oracle(&data.point, 1e-4)?;
    let rel = (s_minus.abs() - c.c_sharp.abs()).abs().max((s_plus.abs() - c.c_sharp.abs()).abs()) / c.c_sharp.abs();
    checks.push(Check::at_most("c_sharp_vs_band_slope_relative", rel, 1e-4));
    checks.push(Check::at_most(
        "c_sharp_g1_vs_g2",
        (c.c_sharp - c_sharp_from_g2(&data.point)).abs() / c.c_sharp.abs(),
        1e-10,
    ));
    checks.push(Check::at_most("beta2_over_beta1", c.beta2.abs() / c.beta1, 1.0));
    for g in gaps {
        checks.push(Check::at_most(&format!("gap_violations_delta_{}", g.delta), g.violations.len() as f64, 0.0));
        checks.push(Check::at_most(
            &format!("half_gap_relative_error_delta_{}", g.delta),
            g.half_gap_relative_error(),
            0.1,
        ));
    }
    Ok(checks)
}

const REGRESSION_DIR: &str = "golden";

fn artifact_files(out: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(out)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    Ok(files)
}

/// Copy every artifact into `out/golden`, or compare against an existing copy.
fn regressions(out: &Path, seed: bool) -> Result<()> {
    let golden = out.join(REGRESSION_DIR);
    if seed {
        std::fs::create_dir_all(&golden)?;
        for f in artifact_files(out)? {
            std::fs::copy(&f, golden.join(f.file_name().expect("file name")))?;
        }
        return Ok(());
    }
    if !golden.is_dir() {
        return Ok(());
    }
    let mut mismatched = Vec::new();
    for g in artifact_files(&golden)? {
        let name = g.file_name().expect("file name");
        let current = std::fs::read(out.join(name)).unwrap_or_default();
        if current != std::fs::read(&g)? {
            mismatched.push(name.to_string_lossy().into_owned());
        }
    }
    if mismatched.is_empty() {
        Ok(())
    } else {
        Err(Error::Regression(format!("artifacts differ from golden copies: {}", mismatched.join(", "))))
    }
}

/// Every step, every certification check, then the regression comparison.
/// Writes `verify.json`; fails if any check fails.
pub fn verify_all(cfg: &RunConfig, out: &Path, seed_regressions: bool) -> Result<VerifySummary> {
    cfg.validate()?;
    ensure_dir(out)?;
    cmd_bands(cfg, out)?;
    let (data, gaps) = cmd_dirac(cfg, out)?;
    let params = nld_params(cfg, Some(&data))?;
    let (profile, kernel) = run_nld(cfg, out, &params)?;
    let mut checks = crossing_checks(&data, &gaps)?;
    let d = profile.diagnostics;
    checks.push(Check::at_most("nld_h_drift", d.h_drift_max, 1e-9));
    checks.push(Check::at_most("nld_parity_defect", d.parity_defect, 1e-9));
    checks.push(Check::at_most(
        "nld_decay_rate_relative_error",
        (d.decay_rate_fit - d.decay_rate_predicted).abs() / d.decay_rate_predicted,
        0.02,
    ));
    checks.push(Check::at_most("nld_translation_mode_residual", kernel.translation_mode_residual, 1e-6));
    checks.push(Check::at_least(
        "nld_sigma_restricted_over_unrestricted",
        kernel.sigma_min_restricted / kernel.sigma_min_unrestricted,
        10.0,
    ));

    // The soliton step uses the coefficients computed from V and W.
    let any_override = cfg.c_sharp.is_some() || cfg.theta_sharp.is_some() || cfg.beta1.is_some() || cfg.beta2.is_some();
    let sol_profile = if any_override {
        let p = NldParams::from_coefficients(&data.coefficients, cfg.mu_sharp)?;
        integrate_homoclinic(&p, &homoclinic_options(cfg))?
    } else {
        profile
    };
    let outcome = run_soliton(cfg, out, &data, &gaps, &sol_profile)?;
    let s = &outcome.scaling;
    checks.push(Check::at_most("solvability_projection_relative", s.solvability_relative, 1e-6));
    checks.push(Check::at_most("u1_kernel_projection", s.u1_kernel_projection, 1e-10));
    if let Some(o) = s.fitted_order {
        checks.push(Check::at_least("residual_delta_order", o, 0.8));
    }
    if let Some(o) = s.h2_fitted_order {
        checks.push(Check::at_least("h2_error_delta_order", o, 0.8));
    }
    for r in &outcome.solitons {
        checks.push(Check::at_most(&format!("newton_final_residual_delta_{}", r.delta), r.final_residual, cfg.newton_tol));
        checks.push(Check::at_most(&format!("newton_iters_delta_{}", r.delta), r.iters as f64, 8.0));
        checks.push(Check {
            name: format!("jacobian_min_abs_eig_delta_{}", r.delta),
            value: r.jacobian_min_eig,
            threshold: 0.0,
            pass: r.jacobian_min_eig > 0.0,
        });
    }
    let all_pass = checks.iter().all(|c| c.pass);
    let summary = VerifySummary { checks, all_pass };
    write_json(&out.join("verify.json"), &stamped(cfg, &summary))?;
    regressions(out, seed_regressions)?;
    if !summary.all_pass {
        let failed: Vec<&str> = summary.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        return Err(Error::CheckFailed(failed.join(", ")));
    }
    Ok(summary)
}

//! Command-line front end.
//!
//! Exit codes: 0 every check passed, 1 a check failed, 2 configuration or
//! input error, 3 blow-up. Errors go to stderr as a JSON document.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use oscillon::config::{ExperimentConfig, Setup};
use oscillon::diagnostics::{
    absorbing_experiment, bounds_report, decay_estimate_check, energy_report, ensemble, linear_pullback_control,
    norm_equivalence_report, pullback_attraction_experiment, random_state, DecayReport, EnsembleSpec,
};
use oscillon::fracop::{alpha_limit_report, identity_check, quadrature_check, spectrum};
use oscillon::io::{encode_dump, write_atomic, write_json, Table};
use oscillon::{Error, Result};

#[derive(Parser)]
#[command(name = "oscillon", version, about = "Fractional oscillon simulator and property checks")]
struct Cli {
    /// TOML experiment configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form identities, integral representation and the α → 1 limit.
    VerifyOperator,
    /// Structural assumptions and the two-sided energy bounds.
    CheckAssumptions {
        /// Random states per sample time.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// One trajectory from `scheme.tau` to `scheme.t_end`.
    Simulate {
        /// Ensemble member used as initial data.
        #[arg(long, default_value_t = 0)]
        member: usize,
        /// Override `scheme.t_end`.
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Energies and functionals of the initial ensemble.
    EnergyReport,
    /// A-priori decay estimate along every ensemble trajectory.
    DecayCheck,
    /// Entry of pulled-back ensembles into the absorbing family.
    Absorbing,
    /// Hausdorff semidistance between pullback images.
    Pullback {
        /// Also run the linear control with this constant damping.
        #[arg(long)]
        linear_control: Option<f64>,
    },
    /// Eigenvalues of `−Λ(t)^α` on the lowest modes.
    SpectrumTable,
}

/// Outcome of one named check.
#[derive(Debug, Serialize)]
struct Verdict {
    check: String,
    passed: bool,
    detail: String,
}

#[derive(Default)]
struct Verdicts(Vec<Verdict>);

impl Verdicts {
    fn add(&mut self, check: &str, passed: bool, detail: impl Into<String>) {
        self.0.push(Verdict {
            check: check.into(),
            passed,
            detail: detail.into(),
        });
    }

    fn finish(self) -> Outcome {
        for v in &self.0 {
            println!("{} {}: {}", if v.passed { "PASS" } else { "FAIL" }, v.check, v.detail);
        }
        if self.0.iter().all(|v| v.passed) {
            Outcome::Pass
        } else {
            Outcome::CheckFailed
        }
    }
}

enum Outcome {
    Pass,
    CheckFailed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Pass) => ExitCode::from(0),
        Ok(Outcome::CheckFailed) => ExitCode::from(1),
        Err(e) => {
            let (code, doc) = error_document(&e);
            eprintln!("{}", serde_json::to_string_pretty(&doc).expect("json"));
            ExitCode::from(code)
        }
    }
}

fn error_document(e: &Error) -> (u8, serde_json::Value) {
    let (code, kind, key) = match e {
        Error::Config { key, .. } => (2, "config", Some(key.clone())),
        Error::InvalidArgument { name, .. } => (2, "invalid-argument", Some(name.to_string())),
        Error::Inadmissible(_) => (2, "inadmissible", None),
        Error::Io(_) => (2, "io", None),
        Error::BlowUp { .. } => (3, "blow-up", None),
        Error::Assumptions(_) => (1, "assumptions", None),
        _ => (2, "error", None),
    };
    let message = match e {
        Error::Config { message, .. } => message.clone(),
        other => other.to_string(),
    };
    (code, json!({ "error": { "kind": kind, "key": key, "message": message }, "exit_code": code }))
}

fn run(cli: &Cli) -> Result<Outcome> {
    let config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let out = cli.out.clone().unwrap_or_else(|| config.output.dir.clone());
    let setup = config.build()?;
    match &cli.command {
        Command::VerifyOperator => verify_operator(&setup, &out),
        Command::CheckAssumptions { samples } => check_assumptions(&setup, &out, *samples),
        Command::Simulate { member, t_end } => simulate(&setup, &out, *member, *t_end),
        Command::EnergyReport => energy_table(&setup, &out),
        Command::DecayCheck => decay_check(&setup, &out),
        Command::Absorbing => absorbing(&setup, &out),
        Command::Pullback { linear_control } => pullback(&setup, &out, *linear_control),
        Command::SpectrumTable => spectrum_table(&setup, &out),
    }
}

fn with_meta(table: Table, setup: &Setup) -> Table {
    let s = &setup.config.scheme;
    table
        .meta("dim", setup.problem.basis.dim())
        .meta("modes", setup.problem.basis.modes_per_axis())
        .meta("alpha", s.alpha)
        .meta("h", s.h)
        .meta("seed", s.seed)
}

fn sample_window(setup: &Setup) -> (f64, f64) {
    let g = &setup.sample_grid;
    (g[0], g[g.len() - 1])
}

fn verify_operator(setup: &Setup, out: &Path) -> Result<Outcome> {
    let c = &setup.config;
    let p = &setup.problem;
    let window = sample_window(setup);
    let ids = identity_check(&p.mu, &p.basis, window, c.operator.samples, c.scheme.seed)?;
    let alphas: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    let quad = quadrature_check(&p.mu, &p.basis, window, &alphas, 10, c.operator.quad_tol, c.scheme.seed)?;
    let t = c.scheme.t_end;
    let state = random_state(p, t, &EnsembleSpec::fixed(1, 1.0, c.scheme.seed), 0)?;
    let limit = alpha_limit_report(t, &state, &p.mu, &p.basis, &c.operator.limit_alphas)?;

    let mut qt = with_meta(Table::new("quadrature", &["alpha", "samples", "max_error", "max_estimate"]), setup);
    for r in &quad {
        qt.push(vec![r.alpha, r.samples as f64, r.max_error, r.max_estimate])?;
    }
    qt.write(&out.join("operator_quadrature.csv"))?;
    let mut lt = with_meta(Table::new("alpha_limit", &["alpha", "inverse_error", "inverse_argmax_nu", "apply_error"]), setup);
    for r in &limit {
        lt.push(vec![r.alpha, r.inverse_error, r.inverse_argmax_nu, r.apply_error])?;
    }
    lt.write(&out.join("alpha_limit.csv"))?;
    write_json(&out.join("operator.json"), &json!({ "identities": ids, "quadrature": quad, "alpha_limit": limit }))?;

    let mut v = Verdicts::default();
    v.add("inverse", ids.inverse_error <= 1e-12, format!("max error {:e}", ids.inverse_error));
    v.add("determinant", ids.det_error <= 1e-12, format!("max error {:e}", ids.det_error));
    v.add("trace", ids.trace_error <= 1e-12, format!("max error {:e}", ids.trace_error));
    v.add("spectrum", ids.spectrum_error <= 1e-10, format!("max error {:e}", ids.spectrum_error));
    let qmax = quad.iter().map(|r| r.max_error).fold(0.0, f64::max);
    v.add("quadrature", qmax <= 1e-6, format!("max error {qmax:e}"));
    let dec = |f: fn(&oscillon::fracop::AlphaLimitRow) -> f64| limit.windows(2).all(|w| f(&w[1]) < f(&w[0]));
    let (first, last) = (&limit[0], &limit[limit.len() - 1]);
    v.add(
        "alpha_limit_inverse",
        dec(|r| r.inverse_error),
        format!("last/first {:e}", last.inverse_error / first.inverse_error),
    );
    v.add(
        "alpha_limit_apply",
        dec(|r| r.apply_error),
        format!("last/first {:e}", last.apply_error / first.apply_error),
    );
    Ok(v.finish())
}

fn check_assumptions(setup: &Setup, out: &Path, samples: usize) -> Result<Outcome> {
    let c = &setup.config;
    let p = &setup.problem;
    let cal = &setup.calibration;
    let mut at = Table::new("assumptions", &["index", "passed", "worst", "bound", "witness_time"]);
    for (i, chk) in cal.assumptions.checks.iter().enumerate() {
        at = at.meta(&format!("check{i}"), chk.name);
        at.push(vec![i as f64, chk.passed as u8 as f64, chk.worst, chk.bound, chk.witness_time.unwrap_or(f64::NAN)])?;
    }
    with_meta(at, setup).write(&out.join("assumptions.csv"))?;

    let spec = EnsembleSpec {
        size: samples,
        ..c.ensemble_spec()?
    };
    let times = [c.scheme.tau, 0.5 * (c.scheme.tau + c.scheme.t_end), c.scheme.t_end];
    let mut bounds = Vec::new();
    let mut equiv = Vec::new();
    for &t in &times {
        let states = ensemble(p, t, &spec)?;
        bounds.push(bounds_report(p, cal, t, &states)?);
        equiv.push(norm_equivalence_report(p, &cal.consts, t, &spec)?);
    }
    let mut bt = with_meta(
        Table::new(
            "bounds",
            &["t", "phi_violations", "phi_lower_margin", "phi_upper_margin", "lyap_violations", "lyap_lower_margin",
              "lyap_upper_margin", "energy_violations", "energy_lower_margin", "energy_upper_margin", "identity_error"],
        ),
        setup,
    );
    for b in &bounds {
        bt.push(vec![
            b.t,
            b.phi.violations as f64,
            b.phi.lower_margin,
            b.phi.upper_margin,
            b.lyapunov.violations as f64,
            b.lyapunov.lower_margin,
            b.lyapunov.upper_margin,
            b.energy.violations as f64,
            b.energy.lower_margin,
            b.energy.upper_margin,
            b.identity_error,
        ])?;
    }
    bt.write(&out.join("bounds.csv"))?;
    write_json(
        &out.join("assumptions.json"),
        &json!({
            "calibration": cal,
            "admissibility": setup.admissibility,
            "mu_steepness": c.mu.steepness,
            "bounds": bounds,
            "norm_equivalence": equiv,
        }),
    )?;

    let mut v = Verdicts::default();
    for chk in &cal.assumptions.checks {
        v.add(chk.name, chk.passed, format!("worst {:e} vs bound {:e}", chk.worst, chk.bound));
    }
    for b in &bounds {
        for chk in [&b.phi, &b.lyapunov, &b.energy] {
            v.add(
                &format!("{} at t={}", chk.name, b.t),
                chk.passed(),
                format!("{} violations in {}, margins {:e} / {:e}", chk.violations, chk.samples, chk.lower_margin, chk.upper_margin),
            );
        }
        v.add(&format!("lyapunov_identity at t={}", b.t), b.identity_error <= 1e-10, format!("{:e}", b.identity_error));
    }
    Ok(v.finish())
}

fn energy_columns() -> [&'static str; 8] {
    ["t", "energy", "phi", "lyapunov", "norm_u_hi", "norm_u", "norm_ut_lo", "product_norm"]
}

fn simulate(setup: &Setup, out: &Path, member: usize, t_end: Option<f64>) -> Result<Outcome> {
    let c = &setup.config;
    let p = &setup.problem;
    let tau = c.scheme.tau;
    let t_end = t_end.unwrap_or(c.scheme.t_end);
    if !(t_end >= tau) {
        return Err(Error::Config {
            key: "scheme.t_end".into(),
            message: "must not precede scheme.tau".into(),
        });
    }
    let spec = c.ensemble_spec()?;
    let initial = random_state(p, tau, &spec, member)?;
    let traj = p.evolve_strided(&initial, tau, t_end, c.scheme.h, c.output.stride)?;
    let mut table = with_meta(Table::new("trajectory", &energy_columns()), setup).meta("member", member);
    for (&t, s) in traj.times.iter().zip(&traj.states) {
        let r = energy_report(p, setup.calibration.eps, t, s)?;
        table.push(vec![r.t, r.energy, r.phi, r.lyapunov, r.norm_u_hi, r.norm_u, r.norm_ut_lo, r.product_norm])?;
    }
    table.write(&out.join("trajectory.csv"))?;
    if c.output.dump_states {
        let records: Vec<(f64, &oscillon::State)> = traj.times.iter().copied().zip(traj.states.iter()).collect();
        write_atomic(&out.join("states.bin"), &encode_dump(&p.basis, p.alpha, &records)?)?;
    }
    if let Some(b) = traj.blow_up {
        return Err(Error::BlowUp { t: b.t, reason: b.reason });
    }
    println!("PASS simulate: {} rows written", table.rows.len());
    Ok(Outcome::Pass)
}

fn energy_table(setup: &Setup, out: &Path) -> Result<Outcome> {
    let c = &setup.config;
    let p = &setup.problem;
    let tau = c.scheme.tau;
    let spec = c.ensemble_spec()?;
    let states = ensemble(p, tau, &spec)?;
    let mut cols = vec!["member"];
    cols.extend(energy_columns());
    let mut table = with_meta(Table::new("energy", &cols), setup);
    let mut v = Verdicts::default();
    for (i, s) in states.iter().enumerate() {
        let r = energy_report(p, setup.calibration.eps, tau, s)?;
        table.push(vec![i as f64, r.t, r.energy, r.phi, r.lyapunov, r.norm_u_hi, r.norm_u, r.norm_ut_lo, r.product_norm])?;
        let target = spec.target_energy(i);
        let rel = (r.energy - target).abs() / target.max(f64::MIN_POSITIVE);
        v.add(&format!("member {i} energy"), rel <= 1e-12, format!("{:e} (target {:e})", r.energy, target));
    }
    table.write(&out.join("energy.csv"))?;
    Ok(v.finish())
}

fn decay_check(setup: &Setup, out: &Path) -> Result<Outcome> {
    let c = &setup.config;
    let p = &setup.problem;
    let cal = &setup.calibration;
    cal.require_assumptions()?;
    let tau = c.scheme.tau;
    let spec = c.ensemble_spec()?;
    let reports: Vec<DecayReport> = (0..spec.size)
        .into_par_iter()
        .map(|i| {
            let x = random_state(p, tau, &spec, i)?;
            let traj = p.evolve(&x, tau, c.scheme.t_end, c.scheme.h)?;
            decay_estimate_check(p, cal, &traj)
        })
        .collect::<Result<_>>()?;
    let mut table = with_meta(
        Table::new(
            "decay",
            &["member", "energy_tau", "worst_margin", "worst_time", "worst_discrete_residual", "discrete_slack",
              "gronwall_margin", "blow_up", "passed"],
        ),
        setup,
    )
    .meta("eps", cal.eps)
    .meta("c_eps", cal.consts.c_eps);
    for (i, r) in reports.iter().enumerate() {
        table.push(vec![
            i as f64,
            r.energy_tau,
            r.worst_margin,
            r.worst_time,
            r.worst_discrete_residual,
            r.discrete_slack,
            r.gronwall_margin,
            r.blow_up as u8 as f64,
            r.passed() as u8 as f64,
        ])?;
    }
    table.write(&out.join("decay.csv"))?;
    let mut path = with_meta(Table::new("decay_path", &["t", "energy", "phi", "lyapunov", "bound", "margin"]), setup)
        .meta("member", 0);
    let stride = c.output.stride.max(1);
    let rows = &reports[0].rows;
    for (j, r) in rows.iter().enumerate() {
        if j % stride == 0 || j + 1 == rows.len() {
            path.push(vec![r.t, r.energy, r.phi, r.lyapunov, r.bound, r.margin])?;
        }
    }
    path.write(&out.join("decay_path.csv"))?;
    if let Some((i, r)) = reports.iter().enumerate().find(|(_, r)| r.blow_up) {
        return Err(Error::BlowUp {
            t: r.rows.last().map_or(tau, |x| x.t),
            reason: format!("member {i} blew up"),
        });
    }
    let mut v = Verdicts::default();
    for (i, r) in reports.iter().enumerate() {
        v.add(
            &format!("member {i}"),
            r.passed(),
            format!(
                "margin {:e}, discrete residual {:e} <= {:e}, gronwall margin {:e}",
                r.worst_margin, r.worst_discrete_residual, r.discrete_slack, r.gronwall_margin
            ),
        );
    }
    Ok(v.finish())
}

fn absorbing(setup: &Setup, out: &Path) -> Result<Outcome> {
    let c = &setup.config;
    let p = &setup.problem;
    let cal = &setup.calibration;
    let t_final = c.scheme.t_end;
    let h = c.scheme.h;
    let mut reports = Vec::new();
    for &r in &c.absorbing.radii {
        let spec = EnsembleSpec::fixed(c.absorbing.size, r, c.scheme.seed);
        reports.push(absorbing_experiment(p, cal, t_final, h, &spec, true)?);
    }
    let control_energy = c.absorbing.control_factor * cal.consts.big_c2 * cal.consts.absorbing_radius;
    let spec = EnsembleSpec::fixed(c.absorbing.size, control_energy, c.scheme.seed);
    let control = absorbing_experiment(p, cal, t_final, h, &spec, false)?;
    let mut table = with_meta(
        Table::new(
            "absorbing",
            &["energy_bound", "theta", "tau", "worst_norm", "absorbing_radius", "absorbed", "blow_ups", "control"],
        ),
        setup,
    );
    for (r, is_control) in reports.iter().map(|r| (r, false)).chain([(&control, true)]) {
        table.push(vec![
            r.energy_bound,
            r.theta,
            r.tau,
            r.worst_norm,
            r.absorbing_radius,
            r.absorbed as u8 as f64,
            r.blow_ups as f64,
            is_control as u8 as f64,
        ])?;
    }
    table.write(&out.join("absorbing.csv"))?;
    write_json(&out.join("absorbing.json"), &json!({ "runs": reports, "control": control }))?;
    let mut v = Verdicts::default();
    for r in &reports {
        v.add(
            &format!("R = {}", r.energy_bound),
            r.absorbed,
            format!("{}: q = {:e} vs R_A = {:e} after tau = {}", r.status(), r.worst_norm, r.absorbing_radius, r.tau),
        );
    }
    v.add(
        "control",
        !control.absorbed,
        format!("{}: q = {:e} vs R_A = {:e}", control.status(), control.worst_norm, control.absorbing_radius),
    );
    Ok(v.finish())
}

fn pullback(setup: &Setup, out: &Path, linear_omega: Option<f64>) -> Result<Outcome> {
    let c = &setup.config;
    let p = &setup.problem;
    let t_fixed = c.pullback.t_fixed.unwrap_or(c.scheme.t_end);
    let taus: Vec<f64> = c.pullback.offsets.iter().map(|o| t_fixed - o).collect();
    let spec = EnsembleSpec::fixed(c.pullback.size, c.pullback.energy, c.scheme.seed);
    let report = pullback_attraction_experiment(p, t_fixed, &taus, c.scheme.h, &spec)?;
    let write_rows = |name: &str, rows: &[oscillon::diagnostics::PullbackRow]| -> Result<()> {
        let mut t = with_meta(Table::new(name, &["tau", "to_final", "to_next", "rate"]), setup).meta("t_fixed", t_fixed);
        for r in rows {
            t.push(vec![r.tau, r.to_final, r.to_next.unwrap_or(f64::NAN), r.rate.unwrap_or(f64::NAN)])?;
        }
        t.write(&out.join(format!("{name}.csv")))
    };
    write_rows("pullback", &report.rows)?;
    let mut v = Verdicts::default();
    v.add("monotone", report.monotone, format!("{} blow-ups", report.blow_ups));
    v.add(
        "decrease",
        report.passed(c.pullback.min_decrease),
        format!("factor {:e} (need {})", report.decrease_factor, c.pullback.min_decrease),
    );
    let control = match linear_omega {
        Some(omega) => {
            let lc = linear_pullback_control(p, t_fixed, &taus, c.scheme.h, &spec, omega)?;
            write_rows("pullback_linear", &lc.report.rows)?;
            v.add(
                "linear_rate",
                lc.max_relative_error <= 0.05,
                format!("gap {:e}, worst relative error {:e}", lc.gap, lc.max_relative_error),
            );
            Some(lc)
        }
        None => None,
    };
    write_json(&out.join("pullback.json"), &json!({ "report": report, "linear_control": control }))?;
    Ok(v.finish())
}

fn spectrum_table(setup: &Setup, out: &Path) -> Result<Outcome> {
    let c = &setup.config;
    let p = &setup.problem;
    let mut nus: Vec<f64> = p.basis.eigenvalues().to_vec();
    nus.sort_by(f64::total_cmp);
    nus.dedup();
    nus.truncate(c.spectrum.modes);
    let mut table = with_meta(Table::new("spectrum", &["alpha", "t", "nu", "re", "im"]), setup);
    let mut v = Verdicts::default();
    for &alpha in &c.spectrum.alphas {
        let mut worst_re = f64::NEG_INFINITY;
        let mut any_real_part = false;
        for &t in &c.spectrum.times {
            for &nu in &nus {
                for z in spectrum(t, alpha, nu, &p.mu)? {
                    table.push(vec![alpha, t, nu, z.re, z.im])?;
                    worst_re = worst_re.max(z.re);
                    any_real_part |= z.re != 0.0;
                }
            }
        }
        if alpha == 1.0 {
            v.add("alpha=1", !any_real_part, "purely imaginary");
        } else {
            v.add(&format!("alpha={alpha}"), worst_re < 0.0, format!("largest real part {worst_re:e}"));
        }
    }
    table.write(&out.join("spectrum.csv"))?;
    Ok(v.finish())
}

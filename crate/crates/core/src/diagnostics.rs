//! Energies, Lyapunov functionals and the numerical experiments built on them.
//!
//! All norms are squared. With `lo = (1−α)/4`, `hi = (1+α)/4`:
//!
//! ```text
//! 𝓔(u, u_t) = μ^{(1+α)/2}‖u‖²_{X^hi} + ‖u‖² + μ^{(1−α)/2}‖u_t‖²_{X^lo}
//! q(u, v)   = ‖u‖²_{X^hi} + ‖v‖²_{X^{(α−1)/4}}
//! ```
//!
//! Attractor statements are checked on finite ensembles and a finite
//! truncation, so every report is evidence consistent with a statement, not a
//! proof of it.

use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{Field, SpectralBasis};
use crate::coeffs::{check_assumptions, compute_constants, AssumptionReport, MuModel, OmegaModel, StructuralConstants};
use crate::dynamics::{velocity_at, Problem, State, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::fracop::{forward_entries, trig};
use crate::nonlin::{c_epsilon, potential_on, NonlinearitySpec};
use crate::rng::CounterRng;

fn hi(alpha: f64) -> f64 {
    0.25 * (1.0 + alpha)
}

fn lo(alpha: f64) -> f64 {
    0.25 * (1.0 - alpha)
}

/// Squared product norm `‖u‖²_{X^{(1+α)/4}} + ‖v‖²_{X^{(α−1)/4}}`.
pub fn product_norm_sq(basis: &SpectralBasis, alpha: f64, state: &State) -> f64 {
    state.norm_sq(basis, hi(alpha), -lo(alpha))
}

/// Squared phase-space norm `‖u‖²_{X^{s/2}} + ‖v‖²_{X^{(s−1)/2}}`.
pub fn phase_norm_sq(basis: &SpectralBasis, s: f64, state: &State) -> f64 {
    state.norm_sq(basis, 0.5 * s, 0.5 * (s - 1.0))
}

fn check_pair(basis: &SpectralBasis, u: &Field, w: &Field) -> Result<()> {
    basis.check_len(u)?;
    basis.check_len(w)
}

/// Natural energy `𝓔(u, u_t)` at time `t`.
pub fn natural_energy(p: &Problem, t: f64, u: &Field, u_t: &Field) -> Result<f64> {
    check_pair(&p.basis, u, u_t)?;
    let mu = p.mu.eval(t);
    let a = p.alpha;
    Ok(mu.powf(0.5 * (1.0 + a)) * p.basis.norm_sq(u, hi(a))
        + u.dot(u)
        + mu.powf(0.5 * (1.0 - a)) * p.basis.norm_sq(u_t, lo(a)))
}

/// `𝓔` of a state, with the velocity recovered from `(u, v)`.
pub fn state_energy(p: &Problem, t: f64, state: &State) -> Result<f64> {
    check_pair(&p.basis, &state.u, &state.v)?;
    natural_energy(p, t, &state.u, &p.velocity(state, t))
}

/// `Φ_α(u, u_t)` with the decay parameter `eps`:
///
/// ```text
/// μ^{(1+α)/2}‖u‖²_{X^hi} + μ^{(1−α)/2}‖u_t‖²_{X^lo} − 2 sin(πα/2) V(u)
///   + 2ε[2μ^{1/2} cos(πα/2)‖u‖²_{X^{1/4}} + sin(πα/2) ω‖u‖² + 2μ^{(1−α)/2}⟨A^lo u_t, A^lo u⟩]
/// ```
pub fn phi_functional(p: &Problem, t: f64, eps: f64, u: &Field, u_t: &Field) -> Result<f64> {
    check_pair(&p.basis, u, u_t)?;
    let a = p.alpha;
    let (cs, sn) = trig(a);
    let mu = p.mu.eval(t);
    let w = p.omega.eval(t);
    let b = &p.basis;
    let v_pot = potential_on(&p.nonlin, b, &p.grid, u)?;
    let ml = mu.powf(0.5 * (1.0 - a));
    let quad = mu.powf(0.5 * (1.0 + a)) * b.norm_sq(u, hi(a)) + ml * b.norm_sq(u_t, lo(a));
    let cross = 2.0 * mu.sqrt() * cs * b.norm_sq(u, 0.25)
        + sn * w * u.dot(u)
        + 2.0 * ml * b.pairing(u_t, lo(a), u, lo(a));
    Ok(quad - 2.0 * sn * v_pot + 2.0 * eps * cross)
}

/// `𝓛_α(u, v)`, the functional `Φ_α` written in the coordinates of the
/// first-order system:
///
/// ```text
/// μ^{(1+α)/2}‖u‖²_{X^hi} + ‖sin(πα/2) μ^{(α−1)/4} A^{(α−1)/4} v − cos(πα/2) μ^{(1+α)/4} A^hi u‖²
///   − 2 sin(πα/2) V(u) + 2ε sin(πα/2) ω‖u‖² + 4ε sin(πα/2)⟨u, v⟩
/// ```
///
/// The `cos(πα/2)‖u‖²_{X^{1/4}}` terms of `Φ_α` cancel against the cross term.
pub fn lyapunov_l(p: &Problem, t: f64, eps: f64, state: &State) -> Result<f64> {
    check_pair(&p.basis, &state.u, &state.v)?;
    let a = p.alpha;
    let (cs, sn) = trig(a);
    let mu = p.mu.eval(t);
    let w = p.omega.eval(t);
    let cv = sn * mu.powf(0.25 * (a - 1.0));
    let cu = cs * mu.powf(0.25 * (1.0 + a));
    let mixed: f64 = p
        .basis
        .eigenvalues()
        .iter()
        .zip(state.u.iter().zip(state.v.iter()))
        .map(|(nu, (u, v))| {
            let r = cv * nu.powf(0.25 * (a - 1.0)) * v - cu * nu.powf(hi(a)) * u;
            r * r
        })
        .sum();
    let v_pot = potential_on(&p.nonlin, &p.basis, &p.grid, &state.u)?;
    Ok(mu.powf(0.5 * (1.0 + a)) * p.basis.norm_sq(&state.u, hi(a)) + mixed - 2.0 * sn * v_pot
        + 2.0 * eps * sn * w * state.u.dot(&state.u)
        + 4.0 * eps * sn * state.u.dot(&state.v))
}

/// Structural constants, decay parameter and assumption report for an
/// experiment ending at `t0`.
///
/// `ε = ε_ω(t₀)` needs `c₁`, which does not depend on `C_ε`, so the constants
/// are computed once with `C_ε = 0`, then `C_ε(ε)` fixes the rest.
#[derive(Debug, Clone, Serialize)]
pub struct Calibration {
    pub t0: f64,
    pub eps: f64,
    pub consts: StructuralConstants,
    pub assumptions: AssumptionReport,
}

impl Calibration {
    pub fn new(p: &Problem, t0: f64, sample_grid: &[f64]) -> Result<Self> {
        let pre = compute_constants(&p.omega, &p.mu, p.alpha, &p.basis, 0.0, t0)?;
        let eps = pre.decay_rate(&p.omega, t0);
        let c_eps = c_epsilon(&p.nonlin, &p.basis, eps)?;
        let consts = compute_constants(&p.omega, &p.mu, p.alpha, &p.basis, c_eps, t0)?;
        let assumptions = check_assumptions(&p.omega, &p.mu, &consts, sample_grid);
        Ok(Self {
            t0,
            eps,
            consts,
            assumptions,
        })
    }

    pub fn require_assumptions(&self) -> Result<()> {
        if self.assumptions.passed() {
            Ok(())
        } else {
            Err(Error::Assumptions(self.assumptions.failures().join(", ")))
        }
    }

    pub fn decay_rate(&self, p: &Problem, t: f64) -> f64 {
        self.consts.decay_rate(&p.omega, t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub t: f64,
    pub energy: f64,
    pub phi: f64,
    pub lyapunov: f64,
    pub norm_u_hi: f64,
    pub norm_u: f64,
    pub norm_ut_lo: f64,
    pub product_norm: f64,
    pub eps: f64,
}

pub fn energy_report(p: &Problem, eps: f64, t: f64, state: &State) -> Result<EnergyReport> {
    let u_t = p.velocity(state, t);
    let a = p.alpha;
    Ok(EnergyReport {
        t,
        energy: natural_energy(p, t, &state.u, &u_t)?,
        phi: phi_functional(p, t, eps, &state.u, &u_t)?,
        lyapunov: lyapunov_l(p, t, eps, state)?,
        norm_u_hi: p.basis.norm_sq(&state.u, hi(a)).sqrt(),
        norm_u: state.u.norm(),
        norm_ut_lo: p.basis.norm_sq(&u_t, lo(a)).sqrt(),
        product_norm: product_norm_sq(&p.basis, a, state).sqrt(),
        eps,
    })
}

/// Random initial data: member `i` uses stream `i` of the counter generator.
///
/// Coefficients are white in the weighted coordinates
/// `U_k = ν_k^{(1+α)/4} u_k` (normals `0..K`) and `V_k = ν_k^{(α−1)/4} v_k`
/// (normals `K..2K`), then rescaled so that `𝓔` at the initial time equals
/// the member's target energy. Targets are log-uniform in
/// `[energy_min, energy_max]` using the uniform draw at counter `2⁶²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleSpec {
    pub size: usize,
    pub energy_min: f64,
    pub energy_max: f64,
    pub seed: u64,
}

const ENERGY_COUNTER: u64 = 1 << 62;

impl EnsembleSpec {
    pub fn fixed(size: usize, energy: f64, seed: u64) -> Self {
        Self {
            size,
            energy_min: energy,
            energy_max: energy,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.size == 0 {
            return Err(Error::invalid("size", "ensemble must be nonempty"));
        }
        if !(self.energy_min >= 0.0 && self.energy_max >= self.energy_min && self.energy_max.is_finite()) {
            return Err(Error::invalid("energy", "need 0 <= energy_min <= energy_max < inf"));
        }
        Ok(())
    }

    pub fn target_energy(&self, i: usize) -> f64 {
        if self.energy_min == self.energy_max || self.energy_min == 0.0 {
            return self.energy_max;
        }
        let x = CounterRng::new(self.seed, i as u64).uniform(ENERGY_COUNTER);
        (self.energy_min.ln() + x * (self.energy_max / self.energy_min).ln()).exp()
    }
}

pub fn random_state(p: &Problem, t: f64, spec: &EnsembleSpec, i: usize) -> Result<State> {
    let k = p.basis.len();
    let rng = CounterRng::new(spec.seed, i as u64);
    let z = rng.normals(0, 2 * k);
    let a = p.alpha;
    let nu = p.basis.eigenvalues();
    let u: Vec<f64> = (0..k).map(|j| z[j] * nu[j].powf(-0.25 * (1.0 + a))).collect();
    let v: Vec<f64> = (0..k).map(|j| z[k + j] * nu[j].powf(0.25 * (1.0 - a))).collect();
    let state = State::new(Field::from_vec(u), Field::from_vec(v))?;
    let e = state_energy(p, t, &state)?;
    let target = spec.target_energy(i);
    Ok(if e > 0.0 { state.scaled((target / e).sqrt()) } else { state })
}

pub fn ensemble(p: &Problem, t: f64, spec: &EnsembleSpec) -> Result<Vec<State>> {
    spec.validate()?;
    (0..spec.size).map(|i| random_state(p, t, spec, i)).collect()
}

/// Smallest `upper − value` and `value − lower` over the samples of one
/// two-sided bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub name: &'static str,
    pub samples: usize,
    pub violations: usize,
    pub lower_margin: f64,
    pub upper_margin: f64,
}

impl BoundCheck {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            samples: 0,
            violations: 0,
            lower_margin: f64::INFINITY,
            upper_margin: f64::INFINITY,
        }
    }

    fn record(&mut self, lower: f64, value: f64, upper: f64) {
        // identities are exact only up to rounding of the summands
        let slack = 1e-12 * (lower.abs() + value.abs() + upper.abs());
        self.samples += 1;
        let lm = value - lower;
        let um = upper - value;
        if !(lm >= -slack && um >= -slack) {
            self.violations += 1;
        }
        self.lower_margin = self.lower_margin.min(lm);
        self.upper_margin = self.upper_margin.min(um);
    }

    fn merge(mut self, other: &Self) -> Self {
        self.samples += other.samples;
        self.violations += other.violations;
        self.lower_margin = self.lower_margin.min(other.lower_margin);
        self.upper_margin = self.upper_margin.min(other.upper_margin);
        self
    }

    pub fn passed(&self) -> bool {
        self.violations == 0 && self.samples > 0
    }
}

/// Two-sided energy bounds and the `𝓛 = Φ ∘ velocity` identity on an
/// ensemble evaluated at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub t: f64,
    pub eps: f64,
    /// `c₁𝓔 − 2C_ε ≤ Φ ≤ c₂𝓔 + 2C_ε`
    pub phi: BoundCheck,
    /// `D₁q − D₃ ≤ 𝓛 ≤ D₂q + D₃`
    pub lyapunov: BoundCheck,
    /// `C₁q ≤ 𝓔 ≤ C₂q`
    pub energy: BoundCheck,
    /// `max |𝓛 − Φ| / max(1, |Φ|)`
    pub identity_error: f64,
}

impl BoundsReport {
    pub fn passed(&self, identity_tol: f64) -> bool {
        self.phi.passed() && self.lyapunov.passed() && self.energy.passed() && self.identity_error <= identity_tol
    }
}

pub fn bounds_report(p: &Problem, cal: &Calibration, t: f64, states: &[State]) -> Result<BoundsReport> {
    let c = &cal.consts;
    let eps = cal.eps;
    let two_c = 2.0 * c.c_eps;
    type Acc = (BoundCheck, BoundCheck, BoundCheck, f64);
    let empty = || -> Acc {
        (
            BoundCheck::new("phi_two_sided"),
            BoundCheck::new("lyapunov_two_sided"),
            BoundCheck::new("energy_norm_equivalence"),
            0.0,
        )
    };
    let rows: Vec<Acc> = states
        .par_iter()
        .map(|s| -> Result<Acc> {
            let u_t = p.velocity(s, t);
            let e = natural_energy(p, t, &s.u, &u_t)?;
            let phi = phi_functional(p, t, eps, &s.u, &u_t)?;
            let l = lyapunov_l(p, t, eps, s)?;
            let q = product_norm_sq(&p.basis, p.alpha, s);
            let mut acc = empty();
            acc.0.record(c.c1 * e - two_c, phi, c.c2 * e + two_c);
            acc.1.record(c.d1_lyap * q - c.d3_lyap, l, c.d2_lyap * q + c.d3_lyap);
            acc.2.record(c.big_c1 * q, e, c.big_c2 * q);
            acc.3 = (l - phi).abs() / phi.abs().max(1.0);
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let (phi, lyapunov, energy, identity_error) = rows
        .iter()
        .fold(empty(), |acc, r| (acc.0.merge(&r.0), acc.1.merge(&r.1), acc.2.merge(&r.2), acc.3.max(r.3)));
    Ok(BoundsReport {
        t,
        eps,
        phi,
        lyapunov,
        energy,
        identity_error,
    })
}

/// Extreme values of `𝓔/q` over random states, with the constants they are
/// compared against and the exact extremes over single-mode states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormEquivalence {
    pub t: f64,
    pub samples: usize,
    pub worst_lower_ratio: f64,
    pub worst_upper_ratio: f64,
    pub c1: f64,
    pub c2: f64,
    pub single_mode_min: f64,
    pub single_mode_max: f64,
}

impl NormEquivalence {
    pub fn passed(&self) -> bool {
        self.worst_lower_ratio >= self.c1 && self.worst_upper_ratio <= self.c2
    }
}

/// Eigenvalues of the per-mode quadratic form `𝓔 / q` in the weighted
/// coordinates `(ν^{(1+α)/4}u, ν^{(α−1)/4}v)`.
fn mode_ratio_extremes(mu: f64, alpha: f64, nu: f64) -> (f64, f64) {
    let (cs, sn) = trig(alpha);
    let m = mu.powf(0.5 * (1.0 + alpha));
    let q11 = m * (1.0 + cs * cs) + nu.powf(-0.5 * (1.0 + alpha));
    let q12 = -sn * cs * mu.powf(0.5 * alpha);
    let q22 = sn * sn * mu.powf(0.5 * (alpha - 1.0));
    let half = 0.5 * (q11 + q22);
    let disc = (0.25 * (q11 - q22).powi(2) + q12 * q12).sqrt();
    (half - disc, half + disc)
}

pub fn norm_equivalence_report(
    p: &Problem,
    consts: &StructuralConstants,
    t: f64,
    spec: &EnsembleSpec,
) -> Result<NormEquivalence> {
    let states = ensemble(p, t, spec)?;
    let mut lo_r = f64::INFINITY;
    let mut hi_r = f64::NEG_INFINITY;
    for s in &states {
        let q = product_norm_sq(&p.basis, p.alpha, s);
        if q > 0.0 {
            let r = state_energy(p, t, s)? / q;
            lo_r = lo_r.min(r);
            hi_r = hi_r.max(r);
        }
    }
    let mu = p.mu.eval(t);
    let (smin, smax) = p
        .basis
        .eigenvalues()
        .iter()
        .map(|&nu| mode_ratio_extremes(mu, p.alpha, nu))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (x, y)| (a.min(x), b.max(y)));
    Ok(NormEquivalence {
        t,
        samples: states.len(),
        worst_lower_ratio: lo_r,
        worst_upper_ratio: hi_r,
        c1: consts.big_c1,
        c2: consts.big_c2,
        single_mode_min: smin,
        single_mode_max: smax,
    })
}

/// One recorded time of a decay check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayRow {
    pub t: f64,
    pub energy: f64,
    pub phi: f64,
    pub lyapunov: f64,
    /// `M₀𝓔(τ)e^{−ε_ω(t)(t−τ)} + M₁`
    pub bound: f64,
    /// `bound + tol − 𝓔(t)`
    pub margin: f64,
}

/// A-priori estimate along one trajectory, plus the differential inequality
/// `dΦ/dt + εΦ ≤ 16εC_ε` in discrete form and its integrated (Gronwall)
/// version `Φ(t) ≤ Φ(τ)e^{−ε(t−τ)} + 16C_ε`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub tau: f64,
    pub energy_tau: f64,
    pub tol: f64,
    pub worst_margin: f64,
    pub worst_time: f64,
    /// Largest `(Φₙ₊₁ − Φₙ)/h + εΦₙ − 16εC_ε` over steps.
    pub worst_discrete_residual: f64,
    /// Allowed slack for the discrete residual, `10h`.
    pub discrete_slack: f64,
    /// Smallest `Φ(τ)e^{−ε(t−τ)} + 16C_ε + tol − Φ(t)`.
    pub gronwall_margin: f64,
    pub blow_up: bool,
    pub rows: Vec<DecayRow>,
}

impl DecayReport {
    pub fn passed(&self) -> bool {
        !self.blow_up
            && self.worst_margin >= 0.0
            && self.worst_discrete_residual <= self.discrete_slack
            && self.gronwall_margin >= 0.0
    }
}

/// Relative tolerance on energy bounds for integration error.
pub const ENERGY_TOL: f64 = 1e-6;

pub fn decay_estimate_check(p: &Problem, cal: &Calibration, traj: &TrajectoryRecord) -> Result<DecayReport> {
    cal.require_assumptions()?;
    let c = &cal.consts;
    let eps = cal.eps;
    let tau = traj.times[0];
    let e_tau = state_energy(p, tau, &traj.states[0])?;
    let tol = ENERGY_TOL * e_tau;
    let rows: Vec<DecayRow> = traj
        .times
        .par_iter()
        .zip(traj.states.par_iter())
        .map(|(&t, s)| -> Result<DecayRow> {
            let u_t = p.velocity(s, t);
            let energy = natural_energy(p, t, &s.u, &u_t)?;
            let bound = c.m0 * e_tau * (-cal.decay_rate(p, t) * (t - tau)).exp() + c.m1;
            Ok(DecayRow {
                t,
                energy,
                phi: phi_functional(p, t, eps, &s.u, &u_t)?,
                lyapunov: lyapunov_l(p, t, eps, s)?,
                bound,
                margin: bound + tol - energy,
            })
        })
        .collect::<Result<_>>()?;
    let (worst_margin, worst_time) = rows
        .iter()
        .fold((f64::INFINITY, tau), |(m, at), r| if r.margin < m { (r.margin, r.t) } else { (m, at) });
    let rhs = 16.0 * eps * c.c_eps;
    let worst_discrete_residual = rows
        .windows(2)
        .map(|w| (w[1].phi - w[0].phi) / (w[1].t - w[0].t) + eps * w[0].phi - rhs)
        .fold(f64::NEG_INFINITY, f64::max);
    let phi_tau = rows[0].phi;
    let gronwall_margin = rows
        .iter()
        .map(|r| phi_tau * (-eps * (r.t - tau)).exp() + 16.0 * c.c_eps + tol - r.phi)
        .fold(f64::INFINITY, f64::min);
    Ok(DecayReport {
        tau,
        energy_tau: e_tau,
        tol,
        worst_margin,
        worst_time,
        worst_discrete_residual,
        discrete_slack: 10.0 * traj.h,
        gronwall_margin,
        blow_up: traj.blew_up(),
        rows,
    })
}

/// Entry time `θ = max{0, ε_ω(t)⁻¹ log(M₀R/(1+M₁))}` into the absorbing
/// family for initial energies up to `R`.
pub fn entry_time(cal: &Calibration, p: &Problem, t: f64, energy_bound: f64) -> f64 {
    let c = &cal.consts;
    let eps = cal.decay_rate(p, t);
    (((c.m0 * energy_bound) / (1.0 + c.m1)).ln() / eps).max(0.0)
}

/// Nearest lattice point of `hℤ` at or before `t`.
fn lattice_floor(t: f64, h: f64) -> f64 {
    ((t / h) + 1e-9).floor() * h
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbsorbingReport {
    pub t_final: f64,
    pub tau: f64,
    pub theta: f64,
    pub energy_bound: f64,
    pub absorbing_radius: f64,
    /// Largest `q` over the ensemble at `t_final`.
    pub worst_norm: f64,
    pub members: usize,
    pub blow_ups: usize,
    pub absorbed: bool,
}

impl AbsorbingReport {
    pub fn status(&self) -> &'static str {
        if self.absorbed {
            "absorbed"
        } else {
            "not yet absorbed"
        }
    }
}

/// Evolves an ensemble of energy `R` from `tau` to `t_final` and compares
/// the squared product norm at `t_final` with `R_𝔸`.
///
/// `pullback = true` starts at `τ = t_final − θ − 1`; `false` is the
/// no-transient control with `τ = t_final`.
pub fn absorbing_experiment(
    p: &Problem,
    cal: &Calibration,
    t_final: f64,
    h: f64,
    spec: &EnsembleSpec,
    pullback: bool,
) -> Result<AbsorbingReport> {
    cal.require_assumptions()?;
    let energy_bound = spec.energy_max;
    let theta = entry_time(cal, p, t_final, energy_bound);
    let tau = if pullback {
        lattice_floor(t_final - theta - 1.0, h)
    } else {
        t_final
    };
    let initial = ensemble(p, tau, spec)?;
    let finals: Vec<Result<State>> = initial.par_iter().map(|x| p.flow(x, tau, t_final, h)).collect();
    let mut worst = 0f64;
    let mut blow_ups = 0;
    for f in finals {
        match f {
            Ok(s) => worst = worst.max(product_norm_sq(&p.basis, p.alpha, &s)),
            Err(Error::BlowUp { .. }) => blow_ups += 1,
            Err(e) => return Err(e),
        }
    }
    let tol = ENERGY_TOL * energy_bound;
    let radius = cal.consts.absorbing_radius;
    Ok(AbsorbingReport {
        t_final,
        tau,
        theta,
        energy_bound,
        absorbing_radius: radius,
        worst_norm: worst,
        members: initial.len(),
        blow_ups,
        absorbed: blow_ups == 0 && worst <= radius + tol,
    })
}

/// `sup_{x∈a} inf_{y∈b} ‖x − y‖` in the `X^{s/2} × X^{(s−1)/2}` norm, by
/// brute force over all pairs.
pub fn hausdorff_semidistance(basis: &SpectralBasis, s: f64, a: &[State], b: &[State]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("set", "semidistance needs nonempty sets"));
    }
    Ok(a
        .par_iter()
        .map(|x| {
            b.iter()
                .map(|y| phase_norm_sq(basis, s, &x.difference(y)))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| 0.0, f64::max)
        .sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PullbackRow {
    pub tau: f64,
    /// Semidistance of this image to the most pulled-back one.
    pub to_final: f64,
    /// Semidistance to the image of the next (more pulled-back) `τ`.
    pub to_next: Option<f64>,
    /// `log(dᵢ/dᵢ₊₁)/(τᵢ − τᵢ₊₁)` on the `to_final` column.
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PullbackReport {
    pub t_fixed: f64,
    pub rows: Vec<PullbackRow>,
    pub monotone: bool,
    /// First over last nonzero entry of the `to_final` column.
    pub decrease_factor: f64,
    pub blow_ups: usize,
}

impl PullbackReport {
    pub fn passed(&self, min_factor: f64) -> bool {
        self.blow_ups == 0 && self.monotone && self.decrease_factor >= min_factor
    }
}

/// Images `S(t, τ)B` of one ensemble `B` for each `τ` in the strictly
/// decreasing `taus`, compared at `t_fixed`.
pub fn pullback_attraction_experiment(
    p: &Problem,
    t_fixed: f64,
    taus: &[f64],
    h: f64,
    spec: &EnsembleSpec,
) -> Result<PullbackReport> {
    if taus.len() < 3 {
        return Err(Error::invalid("taus", "need at least three initial times"));
    }
    if taus.windows(2).any(|w| w[1] >= w[0]) || taus[0] > t_fixed {
        return Err(Error::invalid("taus", "must be strictly decreasing and not after t_fixed"));
    }
    spec.validate()?;
    let mut images = Vec::with_capacity(taus.len());
    let mut blow_ups = 0;
    for &tau in taus {
        let initial = ensemble(p, tau, spec)?;
        let out: Vec<Result<State>> = initial.par_iter().map(|x| p.flow(x, tau, t_fixed, h)).collect();
        let mut image = Vec::with_capacity(out.len());
        for r in out {
            match r {
                Ok(s) => image.push(s),
                Err(Error::BlowUp { .. }) => blow_ups += 1,
                Err(e) => return Err(e),
            }
        }
        if image.is_empty() {
            return Err(Error::BlowUp {
                t: t_fixed,
                reason: format!("every member started at {tau} blew up"),
            });
        }
        images.push(image);
    }
    let last = images.len() - 1;
    let mut rows = Vec::with_capacity(taus.len());
    for i in 0..images.len() {
        let to_final = hausdorff_semidistance(&p.basis, p.s_ref, &images[i], &images[last])?;
        let to_next = if i < last {
            Some(hausdorff_semidistance(&p.basis, p.s_ref, &images[i], &images[i + 1])?)
        } else {
            None
        };
        rows.push(PullbackRow {
            tau: taus[i],
            to_final,
            to_next,
            rate: None,
        });
    }
    for i in 0..last.saturating_sub(1) {
        let (a, b) = (rows[i].to_final, rows[i + 1].to_final);
        if a > 0.0 && b > 0.0 {
            rows[i].rate = Some((a / b).ln() / (taus[i] - taus[i + 1]));
        }
    }
    let col: Vec<f64> = rows.iter().map(|r| r.to_final).collect();
    let monotone = col.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
    let nonzero: Vec<f64> = col.iter().copied().filter(|&d| d > 0.0).collect();
    let decrease_factor = match (nonzero.first(), nonzero.last()) {
        (Some(&a), Some(&b)) if nonzero.len() > 1 => a / b,
        _ => 1.0,
    };
    Ok(PullbackReport {
        t_fixed,
        rows,
        monotone,
        decrease_factor,
        blow_ups,
    })
}

/// Exponential decay rate of the linear autonomous flow
/// `w′ = −(Λ^α + diag(0, ω))w` at frozen `μ`: the smallest `−Re λ` over modes.
pub fn linear_spectral_gap(mu: f64, alpha: f64, omega: f64, basis: &SpectralBasis) -> f64 {
    basis
        .eigenvalues()
        .iter()
        .map(|&nu| {
            let (a, b, c) = forward_entries(mu, alpha, nu);
            // eigenvalues of [[−a, b], [−c, −a − ω]]
            let m = -a - 0.5 * omega;
            let disc = 0.25 * omega * omega - b * c;
            -(m + disc.max(0.0).sqrt())
        })
        .fold(f64::INFINITY, f64::min)
}

/// The pullback experiment repeated on the linear autonomous problem
/// (`f = 0`, frozen `μ` and `ω`), where the rate is known in closed form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearControl {
    pub mu: f64,
    pub omega: f64,
    pub gap: f64,
    pub report: PullbackReport,
    /// Largest `|rate − gap| / gap` over the rows with a rate.
    pub max_relative_error: f64,
}

pub fn linear_control_problem(p: &Problem, mu: f64, omega: f64) -> Result<Problem> {
    let mut q = Problem::new(
        p.basis.clone(),
        p.alpha,
        p.s_ref,
        OmegaModel::constant(omega),
        MuModel::constant(mu),
        NonlinearitySpec::new(0.0, 0.0, p.nonlin.rho)?,
    )?;
    q.grid = p.grid.clone();
    Ok(q)
}

pub fn linear_pullback_control(
    p: &Problem,
    t_fixed: f64,
    taus: &[f64],
    h: f64,
    spec: &EnsembleSpec,
    omega: f64,
) -> Result<LinearControl> {
    let mu = p.mu.eval(t_fixed);
    let lin = linear_control_problem(p, mu, omega)?;
    let report = pullback_attraction_experiment(&lin, t_fixed, taus, h, spec)?;
    let gap = linear_spectral_gap(mu, p.alpha, omega, &p.basis);
    let max_relative_error = report
        .rows
        .iter()
        .filter_map(|r| r.rate)
        .map(|r| (r - gap).abs() / gap)
        .fold(f64::NAN, f64::max);
    Ok(LinearControl {
        mu,
        omega,
        gap,
        report,
        max_relative_error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailRow {
    pub cutoff: f64,
    /// Largest fraction of `q` carried by modes with `ν > cutoff`.
    pub max_fraction: f64,
}

/// Tail-energy surrogate for the Kuratowski measure of an ensemble.
pub fn tail_energy_compactness(basis: &SpectralBasis, alpha: f64, states: &[State], cutoffs: &[f64]) -> Result<Vec<TailRow>> {
    if states.is_empty() {
        return Err(Error::invalid("states", "ensemble must be nonempty"));
    }
    let nu = basis.eigenvalues();
    let weights: Vec<Vec<f64>> = states
        .iter()
        .map(|s| {
            nu.iter()
                .zip(s.u.iter().zip(s.v.iter()))
                .map(|(&n, (u, v))| n.powf(2.0 * hi(alpha)) * u * u + n.powf(-2.0 * lo(alpha)) * v * v)
                .collect()
        })
        .collect();
    Ok(cutoffs
        .iter()
        .map(|&cutoff| {
            let max_fraction = weights
                .iter()
                .map(|w| {
                    let total: f64 = w.iter().sum();
                    if total == 0.0 {
                        return 0.0;
                    }
                    let tail: f64 = w.iter().zip(nu).filter(|(_, &n)| n > cutoff).map(|(x, _)| x).sum();
                    tail / total
                })
                .fold(0.0, f64::max);
            TailRow { cutoff, max_fraction }
        })
        .collect())
}

/// Self-convergence from three runs at `h`, `h/2`, `h/4`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub h: f64,
    pub diff_coarse: f64,
    pub diff_fine: f64,
    pub order: f64,
}

pub fn self_convergence(p: &Problem, initial: &State, tau: f64, t_end: f64, h: f64) -> Result<ConvergenceReport> {
    let runs: Vec<Result<State>> = [h, 0.5 * h, 0.25 * h]
        .par_iter()
        .map(|&k| p.flow(initial, tau, t_end, k))
        .collect();
    let mut runs = runs.into_iter();
    let (y1, y2, y4) = (runs.next().unwrap()?, runs.next().unwrap()?, runs.next().unwrap()?);
    let dist = |a: &State, b: &State| phase_norm_sq(&p.basis, p.s_ref, &a.difference(b)).sqrt();
    let diff_coarse = dist(&y1, &y2);
    let diff_fine = dist(&y2, &y4);
    Ok(ConvergenceReport {
        h,
        diff_coarse,
        diff_fine,
        order: (diff_coarse / diff_fine).log2(),
    })
}

/// Pointwise `𝓛 − Φ` for one state, for callers that want the raw gap.
pub fn identity_gap(p: &Problem, t: f64, eps: f64, state: &State) -> Result<f64> {
    let u_t = velocity_at(state, p.mu.eval(t), p.alpha, &p.basis);
    Ok(lyapunov_l(p, t, eps, state)? - phi_functional(p, t, eps, &state.u, &u_t)?)
}

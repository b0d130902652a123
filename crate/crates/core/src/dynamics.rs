//! Time integration of `dw/dt + Λ(t)^α w = F(t, w)` in spectral coordinates.
//!
//! The stepper is the second-order exponential Runge–Kutta scheme of Cox and
//! Matthews with the linear part frozen at the step midpoint:
//!
//! ```text
//! a    = e^{−hB} w + h φ₁(−hB) F(t, w)
//! w⁺   = a + h φ₂(−hB) (F(t + h, a) − F(t, w)),     B = Λ(t + h/2)^α
//! ```
//!
//! applied mode by mode. Each `B` is a 2×2 block, so `e^{−hB}`, `φ₁` and `φ₂`
//! are evaluated in closed form from its eigenvalue pair.

use num_complex::Complex64;
use serde::Serialize;

use crate::basis::{Field, Grid, SpectralBasis};
use crate::coeffs::{MuModel, OmegaModel};
use crate::error::{Error, Result};
use crate::fracop::{check_alpha, forward_entries, Mat2};
use crate::nonlin::{rhs_f_on, NonlinearitySpec};

pub const BLOW_UP_THRESHOLD: f64 = 1e12;

/// Spectral coefficients `(u, v)` of the first-order system.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct State {
    pub u: Field,
    pub v: Field,
}

impl State {
    pub fn new(u: Field, v: Field) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::LengthMismatch {
                expected: u.len(),
                actual: v.len(),
            });
        }
        Ok(Self { u, v })
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            u: Field::zeros(len),
            v: Field::zeros(len),
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn scaled(&self, c: f64) -> State {
        State {
            u: self.u.scaled(c),
            v: self.v.scaled(c),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }

    pub fn max_abs(&self) -> f64 {
        self.u.max_abs().max(self.v.max_abs())
    }

    /// Squared product norm `‖u‖²_{X^a} + ‖v‖²_{X^b}`.
    pub fn norm_sq(&self, basis: &SpectralBasis, a: f64, b: f64) -> f64 {
        basis.norm_sq(&self.u, a) + basis.norm_sq(&self.v, b)
    }

    pub fn difference(&self, other: &State) -> State {
        let diff = |x: &Field, y: &Field| Field::from_vec(x.iter().zip(y.iter()).map(|(a, b)| a - b).collect());
        State {
            u: diff(&self.u, &other.u),
            v: diff(&self.v, &other.v),
        }
    }
}

/// Evaluates `g(Z)` for a real 2×2 `Z` through its eigenvalue pair
/// `m ± iω` (or `m ± r`): `g(Z) = c₀I + c₁(Z − mI)`.
pub fn mat_function<G: Fn(Complex64) -> Complex64>(z: &Mat2, g: G) -> Mat2 {
    let m = 0.5 * (z[0][0] + z[1][1]);
    let det = z[0][0] * z[1][1] - z[0][1] * z[1][0];
    let q = m * m - det;
    let (c0, c1) = if q > 1e-16 * m * m && q > 0.0 {
        let r = q.sqrt();
        let hi = g(Complex64::new(m + r, 0.0)).re;
        let lo = g(Complex64::new(m - r, 0.0)).re;
        (0.5 * (hi + lo), (hi - lo) / (2.0 * r))
    } else {
        // complex pair, or a double eigenvalue handled as a complex step
        let w = (-q).max(0.0).sqrt().max(1e-150);
        let gz = g(Complex64::new(m, w));
        (gz.re, gz.im / w)
    };
    [
        [c0 + c1 * (z[0][0] - m), c1 * z[0][1]],
        [c1 * z[1][0], c0 + c1 * (z[1][1] - m)],
    ]
}

const SERIES_RADIUS: f64 = 0.5;
const SERIES_TERMS: usize = 20;

/// `Σ_{k≥0} z^k/(k+j)!`
fn phi_series(z: Complex64, j: usize) -> Complex64 {
    let mut term = Complex64::new(1.0, 0.0);
    for i in 1..=j {
        term /= i as f64;
    }
    let mut sum = term;
    for k in 1..SERIES_TERMS {
        term = term * z / (k + j) as f64;
        sum += term;
    }
    sum
}

/// `φ₁(z) = (e^z − 1)/z`
pub fn phi1(z: Complex64) -> Complex64 {
    if z.norm() < SERIES_RADIUS {
        phi_series(z, 1)
    } else {
        (z.exp() - 1.0) / z
    }
}

/// `φ₂(z) = (e^z − 1 − z)/z²`
pub fn phi2(z: Complex64) -> Complex64 {
    if z.norm() < SERIES_RADIUS {
        phi_series(z, 2)
    } else {
        (z.exp() - 1.0 - z) / (z * z)
    }
}

/// Per-mode propagators `(e^{−hB}, φ₁(−hB), φ₂(−hB))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagator {
    pub exp: Mat2,
    pub phi1: Mat2,
    pub phi2: Mat2,
}

impl Propagator {
    pub fn new(mu: f64, alpha: f64, nu: f64, h: f64) -> Self {
        let (a, b, c) = forward_entries(mu, alpha, nu);
        let z = [[-h * a, h * b], [-h * c, -h * a]];
        Self {
            exp: mat_function(&z, |x| x.exp()),
            phi1: mat_function(&z, phi1),
            phi2: mat_function(&z, phi2),
        }
    }
}

fn mv(m: &Mat2, x: f64, y: f64) -> (f64, f64) {
    (m[0][0] * x + m[0][1] * y, m[1][0] * x + m[1][1] * y)
}

/// `u_t = μ^{(α−1)/2} sin(πα/2) A^{(α−1)/2} v − μ^{α/2} cos(πα/2) A^{α/2} u`.
pub fn recover_velocity(state: &State, t: f64, alpha: f64, mu: &MuModel, basis: &SpectralBasis) -> Result<Field> {
    check_alpha(alpha)?;
    basis.check_len(&state.u)?;
    basis.check_len(&state.v)?;
    Ok(velocity_at(state, mu.eval(t), alpha, basis))
}

pub(crate) fn velocity_at(state: &State, mu: f64, alpha: f64, basis: &SpectralBasis) -> Field {
    if alpha == 1.0 {
        return state.v.clone();
    }
    Field::from_vec(
        basis
            .eigenvalues()
            .iter()
            .zip(state.u.iter().zip(state.v.iter()))
            .map(|(&nu, (u, v))| {
                let (a, b, _) = forward_entries(mu, alpha, nu);
                b * v - a * u
            })
            .collect(),
    )
}

/// Everything needed to advance the system: basis, collocation grid,
/// exponent and coefficient models.
#[derive(Debug, Clone)]
pub struct Problem {
    pub basis: SpectralBasis,
    pub grid: Grid,
    pub alpha: f64,
    pub s_ref: f64,
    pub omega: OmegaModel,
    pub mu: MuModel,
    pub nonlin: NonlinearitySpec,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowUp {
    pub t: f64,
    pub reason: String,
}

/// States of one trajectory on its time lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub h: f64,
    pub alpha: f64,
    pub s_ref: f64,
    pub blow_up: Option<BlowUp>,
}

impl TrajectoryRecord {
    pub fn last(&self) -> (f64, &State) {
        let i = self.times.len() - 1;
        (self.times[i], &self.states[i])
    }

    pub fn blew_up(&self) -> bool {
        self.blow_up.is_some()
    }
}

const LATTICE_SLACK: f64 = 1e-9;

/// Number of steps of size `h` between `a` and `b`, if it is an integer.
fn steps_between(a: f64, b: f64, h: f64) -> Option<i64> {
    let n = (b - a) / h;
    let r = n.round();
    ((n - r).abs() <= LATTICE_SLACK * r.abs().max(1.0)).then_some(r as i64)
}

impl Problem {
    pub fn new(
        basis: SpectralBasis,
        alpha: f64,
        s_ref: f64,
        omega: OmegaModel,
        mu: MuModel,
        nonlin: NonlinearitySpec,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        omega.validate()?;
        mu.validate()?;
        nonlin.validate()?;
        let grid = basis.grid();
        Ok(Self {
            basis,
            grid,
            alpha,
            s_ref,
            omega,
            mu,
            nonlin,
        })
    }

    /// Replaces the default `M`-point collocation grid by the dealiased one.
    pub fn dealiased(mut self) -> Result<Self> {
        self.grid = Grid::dealiased(&self.basis, self.nonlin.rho)?;
        Ok(self)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        self.alpha = alpha;
        Ok(self)
    }

    pub fn rhs(&self, t: f64, state: &State) -> Result<State> {
        rhs_f_on(&self.nonlin, &self.omega, &self.basis, &self.grid, t, state).map_err(|e| match e {
            Error::BlowUp { reason, .. } => Error::BlowUp { t, reason },
            other => other,
        })
    }

    pub fn velocity(&self, state: &State, t: f64) -> Field {
        velocity_at(state, self.mu.eval(t), self.alpha, &self.basis)
    }

    pub fn propagators(&self, t: f64, h: f64) -> Vec<Propagator> {
        let mu = self.mu.eval(t + 0.5 * h);
        self.basis
            .eigenvalues()
            .iter()
            .map(|&nu| Propagator::new(mu, self.alpha, nu, h))
            .collect()
    }

    /// One step from `t` to `t + h`.
    pub fn step(&self, state: &State, t: f64, h: f64) -> Result<State> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid("h", "step size must be positive and finite"));
        }
        self.basis.check_len(&state.u)?;
        self.basis.check_len(&state.v)?;
        let props = self.propagators(t, h);
        self.step_with(&props, state, t, h)
    }

    #[allow(clippy::needless_range_loop)]
    fn step_with(&self, props: &[Propagator], state: &State, t: f64, h: f64) -> Result<State> {
        let k = state.len();
        let f0 = self.rhs(t, state)?;
        let mut a = State::zeros(k);
        for i in 0..k {
            let (eu, ev) = mv(&props[i].exp, state.u[i], state.v[i]);
            let (pu, pv) = mv(&props[i].phi1, f0.u[i], f0.v[i]);
            a.u[i] = eu + h * pu;
            a.v[i] = ev + h * pv;
        }
        check_finite(&a, t + h)?;
        let f1 = self.rhs(t + h, &a)?;
        let mut out = a;
        for i in 0..k {
            let (pu, pv) = mv(&props[i].phi2, f1.u[i] - f0.u[i], f1.v[i] - f0.v[i]);
            out.u[i] += h * pu;
            out.v[i] += h * pv;
        }
        check_finite(&out, t + h)?;
        Ok(out)
    }

    /// Integrates from `tau` to `t_end` with step `h`, recording every
    /// `stride`-th state plus the final one.
    ///
    /// Times are generated on the lattice `hℤ` whenever `tau` lies on it, so
    /// trajectories split at a lattice point compose bit-exactly.
    pub fn evolve_strided(&self, initial: &State, tau: f64, t_end: f64, h: f64, stride: usize) -> Result<TrajectoryRecord> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid("h", "step size must be positive and finite"));
        }
        if !(t_end >= tau) {
            return Err(Error::invalid("t_end", "must not precede tau"));
        }
        self.basis.check_len(&initial.u)?;
        self.basis.check_len(&initial.v)?;
        let n = steps_between(tau, t_end, h)
            .ok_or_else(|| Error::invalid("h", format!("{h} does not divide t_end − tau = {}", t_end - tau)))?;
        let origin = steps_between(0.0, tau, h);
        let time_at = |k: i64| match origin {
            Some(o) => (o + k) as f64 * h,
            None => tau + k as f64 * h,
        };
        let stride = stride.max(1) as i64;
        let mut record = TrajectoryRecord {
            times: vec![tau],
            states: vec![initial.clone()],
            h,
            alpha: self.alpha,
            s_ref: self.s_ref,
            blow_up: None,
        };
        if let Err(e) = check_finite(initial, tau) {
            record.blow_up = Some(blow_up_info(e, tau));
            return Ok(record);
        }
        let constant_mu = self.mu.is_constant();
        let fixed = constant_mu.then(|| self.propagators(tau, h));
        let mut state = initial.clone();
        for k in 0..n {
            let t = time_at(k);
            let step = match &fixed {
                Some(p) => self.step_with(p, &state, t, h),
                None => self.step_with(&self.propagators(t, h), &state, t, h),
            };
            match step {
                Ok(next) => state = next,
                Err(e @ Error::BlowUp { .. }) => {
                    record.blow_up = Some(blow_up_info(e, t + h));
                    return Ok(record);
                }
                Err(e) => return Err(e),
            }
            if (k + 1) % stride == 0 || k + 1 == n {
                record.times.push(if k + 1 == n { t_end } else { time_at(k + 1) });
                record.states.push(state.clone());
            }
        }
        Ok(record)
    }

    pub fn evolve(&self, initial: &State, tau: f64, t_end: f64, h: f64) -> Result<TrajectoryRecord> {
        self.evolve_strided(initial, tau, t_end, h, 1)
    }

    /// Final state of [`Problem::evolve`] without storing the path.
    pub fn flow(&self, initial: &State, tau: f64, t_end: f64, h: f64) -> Result<State> {
        let n = steps_between(tau, t_end, h).unwrap_or(1).max(1) as usize;
        let rec = self.evolve_strided(initial, tau, t_end, h, n)?;
        if let Some(b) = rec.blow_up {
            return Err(Error::BlowUp { t: b.t, reason: b.reason });
        }
        Ok(rec.states.last().expect("record is never empty").clone())
    }
}

fn blow_up_info(e: Error, t: f64) -> BlowUp {
    match e {
        Error::BlowUp { t: et, reason } => BlowUp {
            t: if et.is_nan() { t } else { et },
            reason,
        },
        other => BlowUp { t, reason: other.to_string() },
    }
}

fn check_finite(state: &State, t: f64) -> Result<()> {
    let m = state.max_abs();
    if !m.is_finite() || !state.is_finite() {
        return Err(Error::BlowUp {
            t,
            reason: "non-finite coefficient".into(),
        });
    }
    if m > BLOW_UP_THRESHOLD {
        return Err(Error::BlowUp {
            t,
            reason: format!("coefficient magnitude {m:e} exceeds {BLOW_UP_THRESHOLD:e}"),
        });
    }
    Ok(())
}

/// Free-function form of [`Problem::step`].
pub fn step(problem: &Problem, state: &State, t: f64, h: f64) -> Result<State> {
    problem.step(state, t, h)
}

/// Free-function form of [`Problem::evolve`].
pub fn evolve(problem: &Problem, initial: &State, tau: f64, t_end: f64, h: f64) -> Result<TrajectoryRecord> {
    problem.evolve(initial, tau, t_end, h)
}

/// `Σ_k (μνu_k² + v_k²)`, conserved by the linear flow at `α = 1`.
pub fn wave_energy(state: &State, mu: f64, basis: &SpectralBasis) -> f64 {
    basis
        .eigenvalues()
        .iter()
        .zip(state.u.iter().zip(state.v.iter()))
        .map(|(nu, (u, v))| mu * nu * u * u + v * v)
        .sum()
}

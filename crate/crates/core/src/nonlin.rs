//! The nonlinearity `f(s) = βs − λ|s|^{ρ−1}s`, its potential, the
//! dissipation constant `C_ε`, and the right-hand side `F(t, w)`.

use serde::{Deserialize, Serialize};

use crate::basis::{Field, Grid, SpectralBasis};
use crate::coeffs::OmegaModel;
use crate::dynamics::State;
use crate::error::{Error, Result};
use crate::rng::CounterRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySpec {
    /// linear gain `β`
    pub beta: f64,
    /// dissipation strength `λ_f`
    pub lambda: f64,
    /// growth exponent `ρ`
    pub rho: f64,
}

impl NonlinearitySpec {
    pub fn new(beta: f64, lambda: f64, rho: f64) -> Result<Self> {
        let spec = Self { beta, lambda, rho };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.beta.is_finite() {
            return Err(Error::invalid("beta", "must be finite"));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::invalid("lambda", "must be finite and nonnegative"));
        }
        if !(self.rho.is_finite() && self.rho > 1.0) {
            return Err(Error::invalid("rho", "must exceed 1"));
        }
        Ok(())
    }

    pub fn f(&self, s: f64) -> f64 {
        self.beta * s - self.lambda * s.abs().powf(self.rho - 1.0) * s
    }

    /// `∫₀^s f = βs²/2 − λ|s|^{ρ+1}/(ρ+1)`.
    pub fn primitive(&self, s: f64) -> f64 {
        0.5 * self.beta * s * s - self.lambda * s.abs().powf(self.rho + 1.0) / (self.rho + 1.0)
    }

    /// `C` in `|f′(s)| ≤ C(1 + |s|^{ρ−1})`.
    pub fn growth_constant(&self) -> f64 {
        self.beta.abs() + self.rho * self.lambda
    }
}

/// `sup_{x ≥ 0} (a x − b x^p)` for `p > 1`, `b ≥ 0`.
fn sup_power_gap(a: f64, b: f64, p: f64) -> Option<f64> {
    if a <= 0.0 {
        return Some(0.0);
    }
    if b <= 0.0 {
        return None;
    }
    let x = (a / (p * b)).powf(1.0 / (p - 1.0));
    Some(a * x * (1.0 - 1.0 / p))
}

/// Smallest `C_ε` with `⟨f(u), u⟩ ≤ ε‖u‖² + C_ε` and `V(u) ≤ ε‖u‖² + C_ε`
/// pointwise-integrated over the box, in closed form.
pub fn c_epsilon(spec: &NonlinearitySpec, basis: &SpectralBasis, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::invalid("eps", "must be positive"));
    }
    let p = 0.5 * (spec.rho + 1.0);
    let pairing = sup_power_gap(spec.beta - eps, spec.lambda, p);
    let potential = sup_power_gap(0.5 * spec.beta - eps, spec.lambda / (spec.rho + 1.0), p);
    match (pairing, potential) {
        (Some(a), Some(b)) => Ok(basis.volume() * a.max(b)),
        _ => Err(Error::NonDissipative(format!(
            "f(s)s − {eps}s² is unbounded above with lambda = 0 and beta = {}",
            spec.beta
        ))),
    }
}

fn blow_up(what: &str) -> Error {
    Error::BlowUp {
        t: f64::NAN,
        reason: format!("non-finite values in {what}"),
    }
}

/// Nemytskii operator `u ↦ f(u(·))` by collocation on `grid`.
pub fn apply_f_on(spec: &NonlinearitySpec, basis: &SpectralBasis, grid: &Grid, u: &Field) -> Result<Field> {
    let mut values = grid.inverse(basis, u)?;
    for x in values.iter_mut() {
        *x = spec.f(*x);
    }
    if values.iter().any(|x| !x.is_finite()) {
        return Err(blow_up("f(u) on the grid"));
    }
    grid.forward(basis, &values)
}

/// [`apply_f_on`] on the default grid with `M` nodes per axis.
pub fn apply_f(spec: &NonlinearitySpec, basis: &SpectralBasis, u: &Field) -> Result<Field> {
    apply_f_on(spec, basis, &basis.grid(), u)
}

/// `V(u) = ∫_Ω ∫₀^u f` by collocation quadrature on `grid`.
pub fn potential_on(spec: &NonlinearitySpec, basis: &SpectralBasis, grid: &Grid, u: &Field) -> Result<f64> {
    let values: Vec<f64> = grid.inverse(basis, u)?.into_iter().map(|x| spec.primitive(x)).collect();
    Ok(grid.integrate(&values))
}

pub fn potential(spec: &NonlinearitySpec, basis: &SpectralBasis, u: &Field) -> Result<f64> {
    potential_on(spec, basis, &basis.grid(), u)
}

/// `F(t, (u, v)) = (0, f(u) − ω(t)v)`.
pub fn rhs_f_on(
    spec: &NonlinearitySpec,
    omega: &OmegaModel,
    basis: &SpectralBasis,
    grid: &Grid,
    t: f64,
    state: &State,
) -> Result<State> {
    let mut second = apply_f_on(spec, basis, grid, &state.u)?;
    let w = omega.eval(t);
    for (g, v) in second.as_mut_slice().iter_mut().zip(state.v.iter()) {
        *g -= w * v;
    }
    State::new(Field::zeros(basis.len()), second)
}

#[allow(non_snake_case)]
pub fn rhs_F(spec: &NonlinearitySpec, omega: &OmegaModel, basis: &SpectralBasis, t: f64, state: &State) -> Result<State> {
    rhs_f_on(spec, omega, basis, &basis.grid(), t, state)
}

/// Exponent pair `(θ₁, θ₂)` of the `E^θ` scale for an admissible `(ρ, s, α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Admissibility {
    pub theta1: f64,
    pub theta2: f64,
    /// `(N/2)(ρ − 1) − ρ s`, the smallest admissible `α`.
    pub alpha_min: f64,
    /// `(N/2)(1 − 1/ρ) − 1/ρ`, the infimum of admissible `s`.
    pub s_min: f64,
}

const ADMISSIBILITY_SLACK: f64 = 1e-12;

/// Checks `N/(N−2) < ρ < (N+2)/(N−2)`, `s ∈ ((N/2)(1−1/ρ) − 1/ρ, 1)` and
/// `α ∈ [(N/2)(ρ−1) − ρs, 1]`; the lower end of `α` is compared with a
/// `1e−12` slack so that decimal inputs landing on the boundary are accepted.
pub fn admissibility(dim: usize, rho: f64, s: f64, alpha: f64) -> Result<Admissibility> {
    if dim < 3 {
        return Err(Error::Inadmissible(format!("dimension {dim} < 3 has no supercritical range")));
    }
    let n = dim as f64;
    let (lo, hi) = (n / (n - 2.0), (n + 2.0) / (n - 2.0));
    if !(rho > lo && rho < hi) {
        return Err(Error::Inadmissible(format!("rho = {rho} is outside ({lo}, {hi})")));
    }
    let s_min = 0.5 * n * (1.0 - 1.0 / rho) - 1.0 / rho;
    if !(s > s_min && s < 1.0) {
        return Err(Error::Inadmissible(format!("s = {s} is outside ({s_min}, 1)")));
    }
    let alpha_min = 0.5 * n * (rho - 1.0) - rho * s;
    if !(alpha <= 1.0 && alpha >= alpha_min - ADMISSIBILITY_SLACK) {
        return Err(Error::Inadmissible(format!("alpha = {alpha} is outside [{alpha_min}, 1]")));
    }
    Ok(Admissibility {
        theta1: -alpha_min / alpha,
        theta2: (s - 1.0) / alpha,
        alpha_min,
        s_min,
    })
}

/// `‖(u, v)‖_{E^θ}` with `E^θ = X^{(1+αθ)/2} × X^{αθ/2}` (Hilbert product).
pub fn e_norm(basis: &SpectralBasis, alpha: f64, theta: f64, u: &Field, v: &Field) -> f64 {
    (basis.norm_sq(u, 0.5 * (1.0 + alpha * theta)) + basis.norm_sq(v, 0.5 * alpha * theta)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub magnitude: f64,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonlinearityBoundReport {
    pub theta1: f64,
    pub theta2: f64,
    pub rows: Vec<BoundRow>,
}

impl NonlinearityBoundReport {
    pub fn max_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.max_ratio).fold(0.0, f64::max)
    }
}

/// Samples `‖F(w)‖_{E^{θ₁}} / (1 + ‖w‖^ρ_{E^{θ₂}})` on `n_samples` random
/// directions (white in `E^{θ₂}`), each rescaled to every magnitude in turn.
#[allow(clippy::too_many_arguments)]
pub fn nonlinearity_bound_report(
    spec: &NonlinearitySpec,
    basis: &SpectralBasis,
    grid: &Grid,
    alpha: f64,
    s_ref: f64,
    omega_value: f64,
    n_samples: usize,
    magnitudes: &[f64],
    seed: u64,
) -> Result<NonlinearityBoundReport> {
    let adm = admissibility(basis.dim(), spec.rho, s_ref, alpha)?;
    let k = basis.len();
    let wu = basis.powers(-0.5 * (1.0 + alpha * adm.theta2));
    let wv = basis.powers(-0.5 * alpha * adm.theta2);
    let rng = CounterRng::new(seed, 0x6e6f_6e6c);
    let directions: Vec<(Field, Field)> = (0..n_samples)
        .map(|i| {
            let z = rng.normals((2 * k * i) as u64, 2 * k);
            let u = Field::from_vec((0..k).map(|j| z[j] * wu[j]).collect());
            let v = Field::from_vec((0..k).map(|j| z[k + j] * wv[j]).collect());
            let n = e_norm(basis, alpha, adm.theta2, &u, &v);
            (u.scaled(1.0 / n), v.scaled(1.0 / n))
        })
        .collect();
    let mut rows = Vec::with_capacity(magnitudes.len());
    for &m in magnitudes {
        let mut worst = 0f64;
        for (du, dv) in &directions {
            let (u, v) = (du.scaled(m), dv.scaled(m));
            let mut g = apply_f_on(spec, basis, grid, &u)?;
            for (x, y) in g.as_mut_slice().iter_mut().zip(v.iter()) {
                *x -= omega_value * y;
            }
            let lhs = basis.norm_sq(&g, 0.5 * alpha * adm.theta1).sqrt();
            let w = e_norm(basis, alpha, adm.theta2, &u, &v);
            worst = worst.max(lhs / (1.0 + w.powf(spec.rho)));
        }
        rows.push(BoundRow { magnitude: m, max_ratio: worst });
    }
    Ok(NonlinearityBoundReport {
        theta1: adm.theta1,
        theta2: adm.theta2,
        rows,
    })
}

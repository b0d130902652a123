//! Time-dependent coefficients `ω(t)` (damping) and `μ(t)` (stiffness), the
//! structural checks they must pass, and the ledger of constants that enter
//! the energy estimates.

use serde::{Deserialize, Serialize};

use crate::basis::{embedding_constant, SpectralBasis};
use crate::error::{Error, Result};

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OmegaKind {
    Constant { value: f64 },
    /// `ω(t) = min + (max − min)·σ(−steepness·t)`
    LogisticDecay { min: f64, max: f64, steepness: f64 },
}

/// Damping coefficient together with its declared `(ζ, κ₀)` Hölder data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaModel {
    pub kind: OmegaKind,
    pub holder_exponent: f64,
    pub holder_constant: f64,
}

impl OmegaModel {
    pub fn constant(value: f64) -> Self {
        Self {
            kind: OmegaKind::Constant { value },
            holder_exponent: 1.0,
            holder_constant: 1.0,
        }
    }

    pub fn logistic_decay(min: f64, max: f64, steepness: f64) -> Self {
        Self {
            kind: OmegaKind::LogisticDecay { min, max, steepness },
            holder_exponent: 1.0,
            holder_constant: ((max - min) * steepness).abs() / 4.0,
        }
    }

    pub fn with_holder(mut self, exponent: f64, constant: f64) -> Self {
        self.holder_exponent = exponent;
        self.holder_constant = constant;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            OmegaKind::Constant { value } => {
                if !(value.is_finite() && value >= 0.0) {
                    return Err(Error::invalid("omega.value", "must be finite and nonnegative"));
                }
            }
            OmegaKind::LogisticDecay { min, max, steepness } => {
                if !(min.is_finite() && min >= 0.0) {
                    return Err(Error::invalid("omega.min", "must be finite and nonnegative"));
                }
                if !(max.is_finite() && max > 0.0 && max >= min) {
                    return Err(Error::invalid("omega.max", "must be positive and at least omega.min"));
                }
                if !steepness.is_finite() {
                    return Err(Error::invalid("omega.steepness", "must be finite"));
                }
            }
        }
        if !(self.holder_exponent > 0.0 && self.holder_exponent <= 1.0) {
            return Err(Error::invalid("omega.holder_exponent", "must lie in (0, 1]"));
        }
        if !(self.holder_constant > 0.0) {
            return Err(Error::invalid("omega.holder_constant", "must be positive"));
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self.kind {
            OmegaKind::Constant { value } => value,
            OmegaKind::LogisticDecay { min, max, steepness } => {
                min + (max - min) * logistic(-steepness * t)
            }
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self.kind {
            OmegaKind::Constant { .. } => 0.0,
            OmegaKind::LogisticDecay { min, max, steepness } => {
                let s = logistic(-steepness * t);
                -(max - min) * steepness * s * (1.0 - s)
            }
        }
    }

    /// `W = sup_t ω(t)`.
    pub fn sup(&self) -> f64 {
        match self.kind {
            OmegaKind::Constant { value } => value,
            OmegaKind::LogisticDecay { min, max, steepness } => {
                if steepness >= 0.0 {
                    max
                } else {
                    // increasing profile, the supremum is the +∞ limit
                    max.max(min)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MuKind {
    Constant { value: f64 },
    /// `μ(t) = min + (max − min)·σ(steepness·t)`
    LogisticRise { min: f64, max: f64, steepness: f64 },
}

/// Stiffness coefficient together with its declared `(γ, κ)` Hölder data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuModel {
    pub kind: MuKind,
    pub holder_exponent: f64,
    pub holder_constant: f64,
}

impl MuModel {
    pub fn constant(value: f64) -> Self {
        Self {
            kind: MuKind::Constant { value },
            holder_exponent: 1.0,
            holder_constant: 1.0,
        }
    }

    pub fn logistic_rise(min: f64, max: f64, steepness: f64) -> Self {
        Self {
            kind: MuKind::LogisticRise { min, max, steepness },
            holder_exponent: 1.0,
            holder_constant: ((max - min) * steepness).abs() / 4.0,
        }
    }

    pub fn with_holder(mut self, exponent: f64, constant: f64) -> Self {
        self.holder_exponent = exponent;
        self.holder_constant = constant;
        self
    }

    pub fn with_steepness(mut self, new_steepness: f64) -> Self {
        if let MuKind::LogisticRise { steepness, .. } = &mut self.kind {
            *steepness = new_steepness;
        }
        self
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, MuKind::Constant { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            MuKind::Constant { value } => {
                if !(value.is_finite() && value > 0.0) {
                    return Err(Error::invalid("mu.value", "must be finite and positive"));
                }
            }
            MuKind::LogisticRise { min, max, steepness } => {
                if !(min.is_finite() && min > 0.0) {
                    return Err(Error::invalid("mu.min", "must be finite and positive"));
                }
                if !(max.is_finite() && max >= min) {
                    return Err(Error::invalid("mu.max", "must be finite and at least mu.min"));
                }
                if !(steepness.is_finite() && steepness > 0.0) {
                    return Err(Error::invalid("mu.steepness", "must be finite and positive"));
                }
            }
        }
        if !(self.holder_exponent >= 0.5 && self.holder_exponent <= 1.0) {
            return Err(Error::invalid("mu.holder_exponent", "must lie in [1/2, 1]"));
        }
        if !(self.holder_constant > 0.0) {
            return Err(Error::invalid("mu.holder_constant", "must be positive"));
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self.kind {
            MuKind::Constant { value } => value,
            MuKind::LogisticRise { min, max, steepness } => {
                min + (max - min) * logistic(steepness * t)
            }
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self.kind {
            MuKind::Constant { .. } => 0.0,
            MuKind::LogisticRise { min, max, steepness } => {
                let s = logistic(steepness * t);
                (max - min) * steepness * s * (1.0 - s)
            }
        }
    }

    pub fn min(&self) -> f64 {
        match self.kind {
            MuKind::Constant { value } => value,
            MuKind::LogisticRise { min, .. } => min,
        }
    }

    pub fn max(&self) -> f64 {
        match self.kind {
            MuKind::Constant { value } => value,
            MuKind::LogisticRise { max, .. } => max,
        }
    }

    /// Closed-form bound on `μ′/μ`: `(max − min)·steepness / (4 min)`.
    pub fn log_derivative_bound(&self) -> f64 {
        match self.kind {
            MuKind::Constant { .. } => 0.0,
            MuKind::LogisticRise { min, max, steepness } => (max - min) * steepness / (4.0 * min),
        }
    }

    /// Constant `κ′` with `|μ(t)^p − μ(τ)^p| ≤ κ′|t − τ|^{1/4}` for all `t, τ`.
    ///
    /// With `L = sup|d/dt μ^p|` and `R = |μ_max^p − μ_min^p|` the difference is
    /// at most `min(L r, R)` at separation `r`, whose worst ratio against
    /// `r^{1/4}` is `R^{3/4} L^{1/4}`.
    pub fn quarter_holder_constant(&self, p: f64) -> f64 {
        match self.kind {
            MuKind::Constant { .. } => 0.0,
            MuKind::LogisticRise { min, max, steepness } => {
                if p == 0.0 {
                    return 0.0;
                }
                let lip = p.abs() * min.powf(p - 1.0).max(max.powf(p - 1.0)) * (max - min) * steepness / 4.0;
                let range = (max.powf(p) - min.powf(p)).abs();
                range.powf(0.75) * lip.powf(0.25)
            }
        }
    }
}

pub fn eval_omega(model: &OmegaModel, t: f64) -> f64 {
    model.eval(t)
}

pub fn eval_mu(model: &MuModel, t: f64) -> f64 {
    model.eval(t)
}

pub fn eval_mu_prime(model: &MuModel, t: f64) -> f64 {
    model.derivative(t)
}

/// Constants of the a-priori estimate, the norm equivalences and the
/// absorbing radius, evaluated for one `(α, basis, ω, μ, C_ε, t₀)`.
///
/// Embedding constants are sharp on the truncation and normalized against the
/// left-most norm of each chain:
/// `‖·‖ ≤ d₀‖·‖_{X^{(1−α)/4}}`, `‖·‖ ≤ d₁‖·‖_{X^{1/4}}`, `‖·‖ ≤ d₂‖·‖_{X^{(1+α)/4}}`
/// and `‖·‖_{X^{(α−1)/4}} ≤ d₃‖·‖ ≤ …`, `d₄` against `X^{(1−α)/4}`, `d₅`
/// against `X^{(1+α)/4}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuralConstants {
    pub alpha: f64,
    pub t0: f64,
    pub omega_t0: f64,
    /// `W = sup ω`
    pub omega_sup: f64,
    pub mu_min: f64,
    pub mu_max: f64,
    pub d: [f64; 6],
    /// `c₁ = min{ω(t₀)/2, 1}`
    pub c1: f64,
    /// `c₂ = max{1 + 4d₂²/d₁² + 2d₂²/d₀², 2(1+W), 3}`
    pub c2: f64,
    /// `C₁ = min{1, 1/d₄²}`
    pub big_c1: f64,
    /// `C₂ = max{3μ_max + d₅²/d₃², 2}`
    pub big_c2: f64,
    /// `D₁ = c₁C₁`
    pub d1_lyap: f64,
    /// `D₂ = c₂C₂`
    pub d2_lyap: f64,
    /// `D₃ = 2C_ε`
    pub d3_lyap: f64,
    /// `M₀ = c₂/c₁`
    pub m0: f64,
    /// `M₁ = 20C_ε/c₁`
    pub m1: f64,
    pub c_eps: f64,
    /// `R_𝔸 = C₁⁻¹(1 + 2M₁)`
    pub absorbing_radius: f64,
}

impl StructuralConstants {
    /// `ε_ω(t) = min{1, ω(t)/4, c₁/(4(W+2)), d₀²/(3d₁²)}`.
    pub fn decay_rate(&self, omega: &OmegaModel, t: f64) -> f64 {
        let [d0, d1, ..] = self.d;
        1f64.min(omega.eval(t) / 4.0)
            .min(self.c1 / (4.0 * (self.omega_sup + 2.0)))
            .min(d0 * d0 / (3.0 * d1 * d1))
    }
}

pub fn decay_rate(omega: &OmegaModel, consts: &StructuralConstants, t: f64) -> f64 {
    consts.decay_rate(omega, t)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid("alpha", format!("{alpha} is outside (0, 1]")));
    }
    Ok(())
}

pub fn compute_constants(
    omega: &OmegaModel,
    mu: &MuModel,
    alpha: f64,
    basis: &SpectralBasis,
    c_eps: f64,
    t0: f64,
) -> Result<StructuralConstants> {
    check_alpha(alpha)?;
    if !(c_eps >= 0.0 && c_eps.is_finite()) {
        return Err(Error::invalid("c_eps", "must be finite and nonnegative"));
    }
    if !t0.is_finite() {
        return Err(Error::invalid("t0", "must be finite"));
    }
    let lo = (1.0 - alpha) / 4.0;
    let hi = (1.0 + alpha) / 4.0;
    let neg = (alpha - 1.0) / 4.0;
    let d = [
        embedding_constant(basis, 0.0, lo)?,
        embedding_constant(basis, 0.0, 0.25)?,
        embedding_constant(basis, 0.0, hi)?,
        embedding_constant(basis, neg, 0.0)?,
        embedding_constant(basis, neg, lo)?,
        embedding_constant(basis, neg, hi)?,
    ];
    let [d0, d1, d2, d3, d4, d5] = d;
    let w = omega.sup();
    let omega_t0 = omega.eval(t0);
    let c1 = (omega_t0 / 2.0).min(1.0);
    let c2 = (1.0 + 4.0 * d2 * d2 / (d1 * d1) + 2.0 * d2 * d2 / (d0 * d0))
        .max(2.0 * (1.0 + w))
        .max(3.0);
    let big_c1 = 1f64.min(1.0 / (d4 * d4));
    let big_c2 = (3.0 * mu.max() + d5 * d5 / (d3 * d3)).max(2.0);
    if !(c1 > 0.0) {
        return Err(Error::invalid("omega", "ω(t₀) must be positive"));
    }
    let m1 = 20.0 * c_eps / c1;
    Ok(StructuralConstants {
        alpha,
        t0,
        omega_t0,
        omega_sup: w,
        mu_min: mu.min(),
        mu_max: mu.max(),
        d,
        c1,
        c2,
        big_c1,
        big_c2,
        d1_lyap: c1 * big_c1,
        d2_lyap: c2 * big_c2,
        d3_lyap: 2.0 * c_eps,
        m0: c2 / c1,
        m1,
        c_eps,
        absorbing_radius: (1.0 + 2.0 * m1) / big_c1,
    })
}

pub fn uniform_grid(start: f64, end: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        n => (0..n)
            .map(|i| start + (end - start) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Worst sampled value of the checked quantity.
    pub worst: f64,
    /// Bound it was compared against.
    pub bound: f64,
    /// Time (or first time of a pair) attaining the worst value.
    pub witness_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
    /// Empirical `κ′` for `|μ^{α/2}(t) − μ^{α/2}(τ)| ≤ κ′|t−τ|^{1/4}` on the sample pairs.
    pub mu_alpha_half_quarter_holder: f64,
    /// Closed-form bound on the same constant.
    pub mu_alpha_half_quarter_holder_bound: f64,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }
}

const REL_SLACK: f64 = 1e-12;

// Worst value of `value(t)` over the grid, larger is worse.
fn worst_over<F: Fn(f64) -> f64>(grid: &[f64], value: F) -> (f64, Option<f64>) {
    grid.iter().fold((f64::NEG_INFINITY, None), |(w, at), &t| {
        let v = value(t);
        if v > w || v.is_nan() {
            (v, Some(t))
        } else {
            (w, at)
        }
    })
}

fn holder_quotient<F: Fn(f64) -> f64>(grid: &[f64], exponent: f64, g: F) -> (f64, Option<f64>) {
    let values: Vec<f64> = grid.iter().map(|&t| g(t)).collect();
    let mut worst = 0.0;
    let mut at = None;
    for i in 0..grid.len() {
        for j in i + 1..grid.len() {
            let dt = (grid[j] - grid[i]).abs();
            if dt == 0.0 {
                continue;
            }
            let q = (values[j] - values[i]).abs() / dt.powf(exponent);
            if q > worst {
                worst = q;
                at = Some(grid[i]);
            }
        }
    }
    (worst, at)
}

/// Samples every structural assumption on `sample_grid` and reports the
/// worst case of each.
pub fn check_assumptions(
    omega: &OmegaModel,
    mu: &MuModel,
    consts: &StructuralConstants,
    sample_grid: &[f64],
) -> AssumptionReport {
    let mut grid = sample_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let alpha = consts.alpha;
    let w = omega.sup();
    let mut checks = Vec::new();
    let mut push = |name, worst: f64, bound: f64, at, larger_is_worse: bool| {
        let passed = if larger_is_worse {
            worst <= bound + REL_SLACK * bound.abs().max(1.0)
        } else {
            worst > bound
        };
        checks.push(AssumptionCheck {
            name,
            passed: passed && worst.is_finite(),
            worst,
            bound,
            witness_time: at,
        });
    };

    let (min_omega, at) = worst_over(&grid, |t| -omega.eval(t));
    push("omega_positive", -min_omega, 0.0, at, false);

    let mut increase = f64::NEG_INFINITY;
    let mut inc_at = None;
    for pair in grid.windows(2) {
        let rise = omega.eval(pair[1]) - omega.eval(pair[0]);
        let slope = omega.derivative(pair[0]);
        let v = rise.max(slope);
        if v > increase {
            increase = v;
            inc_at = Some(pair[0]);
        }
    }
    if grid.len() == 1 {
        increase = omega.derivative(grid[0]);
        inc_at = Some(grid[0]);
    }
    push("omega_nonincreasing", increase, 0.0, inc_at, true);

    let (sup_sampled, at) = worst_over(&grid, |t| omega.eval(t));
    push("omega_bounded_by_sup", sup_sampled, w, at, true);

    let (q, at) = holder_quotient(&grid, omega.holder_exponent, |t| omega.eval(t));
    push("omega_holder", q, omega.holder_constant, at, true);

    let (mu_hi, at) = worst_over(&grid, |t| mu.eval(t));
    push("mu_upper_bound", mu_hi, mu.max(), at, true);
    let (mu_lo, at) = worst_over(&grid, |t| -mu.eval(t));
    push("mu_lower_bound", -mu_lo, mu.min() * (1.0 - REL_SLACK), at, false);

    if !mu.is_constant() {
        let (neg_slope, at) = worst_over(&grid, |t| -mu.derivative(t));
        push("mu_increasing", -neg_slope, 0.0, at, false);
    }

    // running sup of ϑ = μ′/μ must stay below ε_ω(t)²
    let mut running = 0f64;
    let mut excess = f64::NEG_INFINITY;
    let mut excess_at = None;
    let mut excess_pair = (0.0, 0.0);
    for &t in &grid {
        running = running.max(mu.derivative(t) / mu.eval(t));
        let eps = consts.decay_rate(omega, t);
        let margin = running - eps * eps;
        if margin > excess {
            excess = margin;
            excess_at = Some(t);
            excess_pair = (running, eps * eps);
        }
    }
    push("mu_theta_envelope", excess_pair.0, excess_pair.1, excess_at, true);

    let (q, at) = holder_quotient(&grid, mu.holder_exponent, |t| mu.eval(t));
    push("mu_holder", q, mu.holder_constant, at, true);

    let [d0, d1, d2, ..] = consts.d;
    let mu_min = mu.min();
    push(
        "damping_sup_absorbs_embedding",
        mu_min.powf(-alpha) * d2 * d2 / (d0 * d0),
        (w + 2.0) / 2.0,
        None,
        true,
    );
    push(
        "alpha_close_to_one",
        2.0 * crate::fracop::trig(alpha).0 * mu_min.powf(-alpha / 2.0) * d2 * d2 / (d1 * d1),
        (w + 2.0) / 2.0,
        None,
        true,
    );

    let (kappa, _) = holder_quotient(&grid, 0.25, |t| mu.eval(t).powf(alpha / 2.0));
    AssumptionReport {
        checks,
        mu_alpha_half_quarter_holder: kappa,
        mu_alpha_half_quarter_holder_bound: mu.quarter_holder_constant(alpha / 2.0),
    }
}

/// Largest logistic steepness for `μ` that still passes every check, found by
/// bisection in `log δ`. Returns `None` if even `lo` fails.
pub fn max_admissible_mu_steepness(
    omega: &OmegaModel,
    mu: &MuModel,
    consts: &StructuralConstants,
    sample_grid: &[f64],
    lo: f64,
    hi: f64,
) -> Option<f64> {
    let passes = |s: f64| {
        let m = mu.with_steepness(s).with_holder(mu.holder_exponent, mu.holder_constant);
        check_assumptions(omega, &m, consts, sample_grid).passed()
    };
    if !passes(lo) {
        return None;
    }
    if passes(hi) {
        return Some(hi);
    }
    let (mut a, mut b) = (lo.ln(), hi.ln());
    for _ in 0..60 {
        let mid = 0.5 * (a + b);
        if passes(mid.exp()) {
            a = mid;
        } else {
            b = mid;
        }
    }
    Some(a.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_basis() -> SpectralBasis {
        SpectralBasis::new(1, 4).unwrap()
    }

    #[test]
    fn evaluators() {
        let mu = MuModel::logistic_rise(1.0, 2.0, 0.3);
        assert_relative_eq!(eval_mu(&mu, 0.0), 1.5);
        assert!(eval_mu_prime(&mu, 0.0) > 0.0);
        assert_eq!(eval_omega(&OmegaModel::constant(2.0), 123.0), 2.0);
        let om = OmegaModel::logistic_decay(0.5, 2.0, 0.1);
        assert_relative_eq!(eval_omega(&om, -1e3), 2.0, epsilon = 1e-12);
        assert_eq!(om.sup(), 2.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let om = OmegaModel::logistic_decay(0.5, 2.0, 0.1);
        let mu = MuModel::logistic_rise(1.0, 2.0, 0.7);
        for t in [-20.0, -1.0, 0.0, 3.0, 40.0] {
            let h = 1e-5;
            let fd = (om.eval(t + h) - om.eval(t - h)) / (2.0 * h);
            assert!((fd - om.derivative(t)).abs() < 1e-9);
            let fd = (mu.eval(t + h) - mu.eval(t - h)) / (2.0 * h);
            assert!((fd - mu.derivative(t)).abs() < 1e-9);
        }
    }

    #[test]
    fn decay_rate_arithmetic() {
        let b = unit_basis();
        let om = OmegaModel::constant(2.0);
        let c = compute_constants(&om, &MuModel::constant(1.0), 0.5, &b, 0.0, 0.0).unwrap();
        assert_eq!(c.d[0], 1.0);
        assert_eq!(c.d[1], 1.0);
        assert_eq!(c.c1, 1.0);
        assert_relative_eq!(decay_rate(&om, &c, 0.0), 0.0625);

        // saturates at one once every other term is at least one
        let big = StructuralConstants {
            c1: 100.0,
            omega_sup: 8.0,
            d: [2.0, 1.0, 1.0, 1.0, 1.0, 1.0],
            ..c
        };
        assert_eq!(decay_rate(&OmegaModel::constant(8.0), &big, 0.0), 1.0);
    }

    #[test]
    fn decay_rate_with_equal_embedding_constants() {
        let b = unit_basis();
        let om = OmegaModel::constant(40.0);
        let c = compute_constants(&om, &MuModel::constant(1.0), 0.8, &b, 0.0, 0.0).unwrap();
        assert_eq!(c.d[0], c.d[1]);
        let expected = (c.c1 / (4.0 * (40.0 + 2.0))).min(1.0 / 3.0);
        assert_relative_eq!(decay_rate(&om, &c, 0.0), expected);
    }

    #[test]
    fn constants_on_unit_basis() {
        let b = unit_basis();
        let om = OmegaModel::constant(2.0);
        let mu = MuModel::constant(1.0);
        let c = compute_constants(&om, &mu, 0.9, &b, 0.0, 0.0).unwrap();
        assert_eq!(c.c1, 1.0);
        assert_eq!(c.c2, 7.0);
        assert_eq!(c.big_c1, 1.0);
        assert_eq!(c.big_c2, 4.0);
        assert_eq!(c.m0, 7.0);
        assert_eq!(c.m1, 0.0);
        assert_eq!(c.absorbing_radius, 1.0);
        assert_eq!(c.d1_lyap, 1.0);
        assert_eq!(c.d2_lyap, 28.0);

        let c = compute_constants(&om, &mu, 0.9, &b, 1.0, 0.0).unwrap();
        assert_eq!(c.m1, 20.0);
        assert_eq!(c.absorbing_radius, 41.0);
        assert_eq!(c.d3_lyap, 2.0);

        let c = compute_constants(&OmegaModel::constant(1.0), &mu, 0.9, &b, 0.0, 0.0).unwrap();
        assert_eq!(c.c1, 0.5);
    }

    #[test]
    fn constants_reject_bad_alpha() {
        let b = unit_basis();
        let om = OmegaModel::constant(2.0);
        let mu = MuModel::constant(1.0);
        assert!(compute_constants(&om, &mu, 0.0, &b, 0.0, 0.0).is_err());
        assert!(compute_constants(&om, &mu, 1.2, &b, 0.0, 0.0).is_err());
        assert!(compute_constants(&om, &mu, 1.0, &b, 0.0, 0.0).is_ok());
    }

    #[test]
    fn constants_monotone_in_c_eps() {
        let b = SpectralBasis::new(3, 2).unwrap();
        let om = OmegaModel::logistic_decay(0.5, 2.0, 0.1);
        let mu = MuModel::logistic_rise(1.0, 2.0, 1e-3);
        let mut last = compute_constants(&om, &mu, 0.9, &b, 0.0, 10.0).unwrap();
        for c_eps in [0.5, 1.0, 7.0, 30.0] {
            let c = compute_constants(&om, &mu, 0.9, &b, c_eps, 10.0).unwrap();
            assert!(c.m1 > last.m1 && c.d3_lyap > last.d3_lyap && c.absorbing_radius > last.absorbing_radius);
            last = c;
        }
    }

    #[test]
    fn decay_rate_bounded_and_nonincreasing() {
        let b = SpectralBasis::new(3, 4).unwrap();
        let om = OmegaModel::logistic_decay(0.5, 2.0, 0.1);
        let c = compute_constants(&om, &MuModel::constant(1.0), 0.9, &b, 1.0, 50.0).unwrap();
        let mut prev = f64::INFINITY;
        for t in uniform_grid(-100.0, 100.0, 401) {
            let e = c.decay_rate(&om, t);
            assert!(e > 0.0 && e <= 1.0 && e <= om.eval(t) / 4.0);
            assert!(e <= prev);
            prev = e;
        }
    }

    fn default_setup(mu_steep: f64) -> (OmegaModel, MuModel, StructuralConstants, Vec<f64>) {
        let b = SpectralBasis::new(3, 4).unwrap();
        let om = OmegaModel::logistic_decay(0.5, 2.0, 0.1).with_holder(1.0, 0.04);
        let mu = MuModel::logistic_rise(1.0, 2.0, mu_steep).with_holder(1.0, 0.01);
        let c = compute_constants(&om, &mu, 0.9, &b, 10.0, 50.0).unwrap();
        (om, mu, c, uniform_grid(-100.0, 150.0, 501))
    }

    #[test]
    fn gentle_coefficients_pass() {
        let (om, mu, c, grid) = default_setup(1e-4);
        let report = check_assumptions(&om, &mu, &c, &grid);
        assert!(report.passed(), "{:?}", report.failures());
        assert!(report.mu_alpha_half_quarter_holder <= report.mu_alpha_half_quarter_holder_bound * (1.0 + 1e-9));
    }

    #[test]
    fn steep_mu_fails_the_envelope() {
        let (om, mu, c, grid) = default_setup(10.0);
        let report = check_assumptions(&om, &mu, &c, &grid);
        assert!(!report.get("mu_theta_envelope").unwrap().passed);
        assert!(report.get("mu_theta_envelope").unwrap().witness_time.is_some());
    }

    #[test]
    fn increasing_omega_fails_monotonicity() {
        let (_, mu, c, grid) = default_setup(1e-4);
        let om = OmegaModel::logistic_decay(0.5, 2.0, -0.1).with_holder(1.0, 0.04);
        let report = check_assumptions(&om, &mu, &c, &grid);
        assert!(!report.get("omega_nonincreasing").unwrap().passed);
    }

    #[test]
    fn largest_steepness_is_the_threshold() {
        let (om, mu, c, grid) = default_setup(1e-4);
        let s = max_admissible_mu_steepness(&om, &mu, &c, &grid, 1e-8, 10.0).unwrap();
        assert!(check_assumptions(&om, &mu.with_steepness(s), &c, &grid).passed());
        assert!(!check_assumptions(&om, &mu.with_steepness(s * 1.001), &c, &grid).passed());
    }

    #[test]
    fn quarter_holder_bound_dominates_samples() {
        let mu = MuModel::logistic_rise(1.0, 2.0, 0.5);
        let grid = uniform_grid(-30.0, 30.0, 301);
        for p in [0.45, 0.5, -0.05, 0.95] {
            let (q, _) = holder_quotient(&grid, 0.25, |t| mu.eval(t).powf(p));
            assert!(q <= mu.quarter_holder_constant(p), "p={p}: {q}");
        }
        assert_eq!(MuModel::constant(2.0).quarter_holder_constant(0.45), 0.0);
    }
}

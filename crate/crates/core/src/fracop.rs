//! Per-mode calculus for `Λ(t)^α` and `Λ(t)^{−α}`.
//!
//! On the eigenmode with eigenvalue `ν` the operator `Λ(t) = [0, −I; μA, 0]`
//! is the 2×2 matrix `[0, −1; μν, 0]`, and its fractional powers are explicit
//! 2×2 blocks with equal diagonal entries.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::basis::SpectralBasis;
use crate::coeffs::MuModel;
use crate::dynamics::State;
use crate::error::{Error, Result};
use crate::quad;
use crate::rng::CounterRng;

/// `(cos(πα/2), sin(πα/2))`, exact at `α = 1`.
pub fn trig(alpha: f64) -> (f64, f64) {
    if alpha == 1.0 {
        (0.0, 1.0)
    } else {
        let x = 0.5 * PI * alpha;
        (x.cos(), x.sin())
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid("alpha", format!("{alpha} is outside (0, 1]")));
    }
    Ok(())
}

fn check_nu(nu: f64) -> Result<()> {
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::invalid("nu", "eigenvalue must be positive and finite"));
    }
    Ok(())
}

pub type Mat2 = [[f64; 2]; 2];

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

/// Largest singular value of a real 2×2 matrix.
pub fn mat_norm(m: &Mat2) -> f64 {
    let [[a, b], [c, d]] = *m;
    0.5 * ((a + d).hypot(b - c) + (a - d).hypot(b + c))
}

/// `diag(wu, wv) · m · diag(wu, wv)⁻¹`
pub fn mat_conjugate_diag(m: &Mat2, wu: f64, wv: f64) -> Mat2 {
    [[m[0][0], m[0][1] * wu / wv], [m[1][0] * wv / wu, m[1][1]]]
}

/// Entries `(a, b, c)` of `Λ^α = [a, −b; c, a]` on one mode for a frozen `μ`.
pub(crate) fn forward_entries(mu: f64, alpha: f64, nu: f64) -> (f64, f64, f64) {
    let (cs, sn) = trig(alpha);
    let a = (mu * nu).powf(0.5 * alpha) * cs;
    let b = (mu * nu).powf(0.5 * (alpha - 1.0)) * sn;
    let c = (mu * nu).powf(0.5 * (alpha + 1.0)) * sn;
    (a, b, c)
}

/// The 2×2 block of `Λ(t)^α` or `Λ(t)^{−α}` on one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeBlock {
    pub m: Mat2,
    pub alpha: f64,
    pub t: f64,
    pub nu: f64,
}

impl ModeBlock {
    /// `Λ^α` for a frozen stiffness value `mu`.
    pub fn forward(mu: f64, alpha: f64, nu: f64) -> Self {
        let (a, b, c) = forward_entries(mu, alpha, nu);
        Self {
            m: [[a, -b], [c, a]],
            alpha,
            t: f64::NAN,
            nu,
        }
    }

    /// `Λ^{−α}` for a frozen stiffness value `mu`.
    pub fn inverse(mu: f64, alpha: f64, nu: f64) -> Self {
        let (cs, sn) = trig(alpha);
        let s = mu * nu;
        let diag = s.powf(-0.5 * alpha) * cs;
        Self {
            m: [
                [diag, s.powf(-0.5 * (1.0 + alpha)) * sn],
                [-s.powf(0.5 * (1.0 - alpha)) * sn, diag],
            ],
            alpha,
            t: f64::NAN,
            nu,
        }
    }

    fn at(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn apply(&self, u: f64, v: f64) -> (f64, f64) {
        (
            self.m[0][0] * u + self.m[0][1] * v,
            self.m[1][0] * u + self.m[1][1] * v,
        )
    }

    pub fn mul(&self, other: &ModeBlock) -> Mat2 {
        mat_mul(&self.m, &other.m)
    }

    /// Eigenvalues by the quadratic formula on trace and determinant.
    pub fn eigenvalues(&self) -> [Complex64; 2] {
        let half = 0.5 * self.trace();
        let disc = Complex64::new(half * half - self.det(), 0.0).sqrt();
        [Complex64::new(half, 0.0) + disc, Complex64::new(half, 0.0) - disc]
    }

    pub fn norm(&self) -> f64 {
        mat_norm(&self.m)
    }
}

pub fn lambda_block(t: f64, alpha: f64, nu: f64, mu: &MuModel) -> Result<ModeBlock> {
    check_alpha(alpha)?;
    check_nu(nu)?;
    Ok(ModeBlock::forward(mu.eval(t), alpha, nu).at(t))
}

pub fn lambda_inverse_block(t: f64, alpha: f64, nu: f64, mu: &MuModel) -> Result<ModeBlock> {
    check_alpha(alpha)?;
    check_nu(nu)?;
    Ok(ModeBlock::inverse(mu.eval(t), alpha, nu).at(t))
}

/// Eigenvalues of `−Λ(t)^α`: `e^{±iπ(2−α)/2} μ^{α/2} ν^{α/2}`, `+` first.
pub fn spectrum(t: f64, alpha: f64, nu: f64, mu: &MuModel) -> Result<[Complex64; 2]> {
    check_alpha(alpha)?;
    check_nu(nu)?;
    let r = (mu.eval(t) * nu).powf(0.5 * alpha);
    // cos(π(2−α)/2) = −cos(πα/2), sin(π(2−α)/2) = sin(πα/2)
    let (cs, sn) = trig(alpha);
    Ok([Complex64::new(-cs * r, sn * r), Complex64::new(-cs * r, -sn * r)])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureBlock {
    pub block: ModeBlock,
    /// Bound on the entrywise error, quadrature estimate plus truncated tails.
    pub error: f64,
}

/// `Λ(t)^{−α}` from the integral `(sin πα/π) ∫₀^∞ λ^{−α}(λI + Λ(t))^{−1} dλ`.
///
/// With `s² = μν` and `λ = s e^x` the resolvent `[λ, 1; −s², λ]/(λ² + s²)`
/// reduces the block to two scalar integrals,
/// `I₁ = ∫ e^{(2−α)x}/(1+e^{2x})` (diagonal, scale `s^{−α}`) and
/// `I₂ = ∫ e^{(1−α)x}/(1+e^{2x})` (off-diagonal, scales `s^{−1−α}` and `−s^{1−α}`).
pub fn balakrishnan_block(t: f64, alpha: f64, nu: f64, mu: &MuModel, quad_tol: f64) -> Result<QuadratureBlock> {
    check_alpha(alpha)?;
    check_nu(nu)?;
    if alpha == 1.0 {
        return Err(Error::invalid("alpha", "the integral representation needs alpha < 1"));
    }
    if !(quad_tol > 0.0) {
        return Err(Error::invalid("quad_tol", "must be positive"));
    }
    let s = (mu.eval(t) * nu).sqrt();
    let pref = (PI * alpha).sin() / PI;
    let scale_diag = pref * s.powf(-alpha);
    let scale_off = pref * s.powf(-1.0 - alpha).max(s.powf(1.0 - alpha));

    // kernel e^{ax}/(1+e^{2x}) behaves like e^{ax} on the left and e^{(a−2)x} on the right
    let integral = |a: f64, scale: f64| -> Result<(f64, f64)> {
        let budget = quad_tol / scale;
        let tail_target = 0.1 * budget;
        let left = (1.0 / (a * tail_target)).ln().max(1.0) / a;
        let right = (1.0 / ((2.0 - a) * tail_target)).ln().max(1.0) / (2.0 - a);
        let tails = (-a * left).exp() / a + (-(2.0 - a) * right).exp() / (2.0 - a);
        let kernel = |x: f64| {
            if x > 0.0 {
                ((a - 2.0) * x).exp() / (1.0 + (-2.0 * x).exp())
            } else {
                (a * x).exp() / (1.0 + (2.0 * x).exp())
            }
        };
        let r = quad::integrate(kernel, -left, right, 0.5 * budget, 4000).map_err(|e| match e {
            Error::Quadrature { achieved, .. } => Error::Quadrature {
                achieved: achieved * scale,
                requested: quad_tol,
            },
            other => other,
        })?;
        Ok((r.value, (r.error + tails) * scale))
    };
    let (i1, e1) = integral(2.0 - alpha, scale_diag)?;
    let (i2, e2) = integral(1.0 - alpha, scale_off)?;
    let diag = scale_diag * i1;
    let m = [
        [diag, pref * s.powf(-1.0 - alpha) * i2],
        [-pref * s.powf(1.0 - alpha) * i2, diag],
    ];
    Ok(QuadratureBlock {
        block: ModeBlock { m, alpha, t, nu },
        error: e1.max(e2),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaLimitRow {
    pub alpha: f64,
    /// `sup_k ‖Λ^{−α} − Λ^{−1}‖` in the `Y_t` metric, exact on the truncation.
    pub inverse_error: f64,
    /// Eigenvalue of the mode attaining the supremum.
    pub inverse_argmax_nu: f64,
    /// `‖Λ^α w − Λ w‖_{Y_t}` for the supplied state.
    pub apply_error: f64,
}

/// Per-mode weights of `‖(u, v)‖²_{Y_t} = μ^{1/2}‖u‖²_{X^{1/2}} + ‖u‖² + ‖v‖²`.
fn y_weight(mu: f64, nu: f64) -> f64 {
    (mu.sqrt() * nu + 1.0).sqrt()
}

pub fn alpha_limit_report(
    t: f64,
    state: &State,
    mu: &MuModel,
    basis: &SpectralBasis,
    alphas: &[f64],
) -> Result<Vec<AlphaLimitRow>> {
    if alphas.is_empty() {
        return Err(Error::invalid("alphas", "list is empty"));
    }
    basis.check_len(&state.u)?;
    basis.check_len(&state.v)?;
    let m = mu.eval(t);
    alphas
        .iter()
        .map(|&alpha| {
            check_alpha(alpha)?;
            let mut inverse_error = 0.0;
            let mut argmax = basis.nu_min();
            let mut apply_sq = 0.0;
            for (k, &nu) in basis.eigenvalues().iter().enumerate() {
                let w = y_weight(m, nu);
                let inv_a = ModeBlock::inverse(m, alpha, nu).m;
                let inv_1 = ModeBlock::inverse(m, 1.0, nu).m;
                let diff = [
                    [inv_a[0][0] - inv_1[0][0], inv_a[0][1] - inv_1[0][1]],
                    [inv_a[1][0] - inv_1[1][0], inv_a[1][1] - inv_1[1][1]],
                ];
                let e = mat_norm(&mat_conjugate_diag(&diff, w, 1.0));
                if e > inverse_error {
                    inverse_error = e;
                    argmax = nu;
                }
                let (u, v) = (state.u[k], state.v[k]);
                let (pa, qa) = ModeBlock::forward(m, alpha, nu).apply(u, v);
                let (p1, q1) = ModeBlock::forward(m, 1.0, nu).apply(u, v);
                apply_sq += (w * (pa - p1)).powi(2) + (qa - q1).powi(2);
            }
            Ok(AlphaLimitRow {
                alpha,
                inverse_error,
                inverse_argmax_nu: argmax,
                apply_error: apply_sq.sqrt(),
            })
        })
        .collect()
}

/// Outcome of the Hölder estimate for `t ↦ Λ(t)^α` in the `E^{θ₁}` scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderEstimate {
    /// `sup_k ‖[Λ(t)^α − Λ(τ)^α]Λ(s)^{−α}‖` in `E^{θ₁} = X^{(1+αθ₁)/2} × X^{αθ₁/2}`.
    pub lhs: f64,
    /// `C|t − τ|^{1/4}`.
    pub bound: f64,
    pub constant: f64,
}

impl HolderEstimate {
    pub fn holds(&self) -> bool {
        self.lhs <= self.bound * (1.0 + 1e-12)
    }
}

/// Constant `C(μ_min, μ_max, κ′)` of the quarter-Hölder bound.
///
/// In the weights `diag(ν^{1/2}, 1)` (the common factor `ν^{αθ₁/2}` cancels)
/// the difference of forward blocks is `ν^{α/2}` times a matrix with diagonal
/// `cos(πα/2)Δμ^{α/2}` and off-diagonals `sin(πα/2)Δμ^{(α∓1)/2}`, while the
/// inverse block is `ν^{−α/2}μ^{−α/2}` times a matrix bounded by
/// `cos(πα/2) + sin(πα/2)·max(μ^{−1/2}, μ^{1/2})`.
pub fn hoelder_constant(alpha: f64, mu: &MuModel) -> f64 {
    let (cs, sn) = trig(alpha);
    let diff = cs * mu.quarter_holder_constant(0.5 * alpha)
        + sn * mu
            .quarter_holder_constant(0.5 * (alpha - 1.0))
            .max(mu.quarter_holder_constant(0.5 * (alpha + 1.0)));
    let inv = mu.min().powf(-0.5 * alpha) * (cs + sn * mu.min().powf(-0.5).max(mu.max().sqrt()));
    diff * inv
}

pub fn hoelder_operator_estimate(
    t: f64,
    tau: f64,
    s_ref: f64,
    alpha: f64,
    mu: &MuModel,
    basis: &SpectralBasis,
    theta1: f64,
) -> Result<HolderEstimate> {
    check_alpha(alpha)?;
    let (mt, mtau, ms) = (mu.eval(t), mu.eval(tau), mu.eval(s_ref));
    let mut lhs = 0f64;
    for &nu in basis.eigenvalues() {
        let ft = ModeBlock::forward(mt, alpha, nu).m;
        let ftau = ModeBlock::forward(mtau, alpha, nu).m;
        let diff = [
            [ft[0][0] - ftau[0][0], ft[0][1] - ftau[0][1]],
            [ft[1][0] - ftau[1][0], ft[1][1] - ftau[1][1]],
        ];
        let op = mat_mul(&diff, &ModeBlock::inverse(ms, alpha, nu).m);
        let wu = nu.powf(0.5 * (1.0 + alpha * theta1));
        let wv = nu.powf(0.5 * alpha * theta1);
        lhs = lhs.max(mat_norm(&mat_conjugate_diag(&op, wu, wv)));
    }
    let constant = hoelder_constant(alpha, mu);
    Ok(HolderEstimate {
        lhs,
        bound: constant * (t - tau).abs().powf(0.25),
        constant,
    })
}

/// Worst deviations of the closed-form blocks from their defining identities
/// over random `(α, t, ν)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub samples: usize,
    /// `max |Λ^α Λ^{−α} − I|` entrywise.
    pub inverse_error: f64,
    /// Relative error of `det Λ^α = (μν)^α`.
    pub det_error: f64,
    /// Error of `tr Λ^α = 2(μν)^{α/2}cos(πα/2)` relative to `(μν)^{α/2}`.
    pub trace_error: f64,
    /// Relative distance between `spectrum` and the eigenvalues of `−Λ^α`.
    pub spectrum_error: f64,
}

/// Draw `i` of an identity or quadrature sweep: `α ∈ (0, 1)`, `t` uniform in
/// `times`, `ν` a uniformly chosen eigenvalue of `basis`.
fn sample_point(rng: &CounterRng, i: u64, times: (f64, f64), basis: &SpectralBasis) -> (f64, f64, f64) {
    let alpha = 1.0 - rng.uniform(3 * i);
    let t = times.0 + (times.1 - times.0) * rng.uniform(3 * i + 1);
    let nus = basis.eigenvalues();
    let k = ((rng.uniform(3 * i + 2) * nus.len() as f64) as usize).min(nus.len() - 1);
    (alpha, t, nus[k])
}

pub fn identity_check(
    mu: &MuModel,
    basis: &SpectralBasis,
    times: (f64, f64),
    samples: usize,
    seed: u64,
) -> Result<IdentityCheck> {
    if samples == 0 {
        return Err(Error::invalid("samples", "need at least one sample"));
    }
    let rng = CounterRng::new(seed, 0x6f70);
    let mut out = IdentityCheck {
        samples,
        inverse_error: 0.0,
        det_error: 0.0,
        trace_error: 0.0,
        spectrum_error: 0.0,
    };
    for i in 0..samples as u64 {
        let (alpha, t, nu) = sample_point(&rng, i, times, basis);
        let fwd = lambda_block(t, alpha, nu, mu)?;
        let inv = lambda_inverse_block(t, alpha, nu, mu)?;
        let p = fwd.mul(&inv);
        let id_err = (p[0][0] - 1.0).abs().max(p[0][1].abs()).max(p[1][0].abs()).max((p[1][1] - 1.0).abs());
        let r = (mu.eval(t) * nu).powf(0.5 * alpha);
        let (cs, _) = trig(alpha);
        let det_err = (fwd.det() - r * r).abs() / (r * r);
        let tr_err = (fwd.trace() - 2.0 * r * cs).abs() / r;
        let closed = spectrum(t, alpha, nu, mu)?;
        let mut ev = fwd.eigenvalues().map(|z| -z);
        if ev[0].im < ev[1].im {
            ev.swap(0, 1);
        }
        let sp_err = (closed[0] - ev[0]).norm().max((closed[1] - ev[1]).norm()) / r;
        out.inverse_error = out.inverse_error.max(id_err);
        out.det_error = out.det_error.max(det_err);
        out.trace_error = out.trace_error.max(tr_err);
        out.spectrum_error = out.spectrum_error.max(sp_err);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureRow {
    pub alpha: f64,
    pub samples: usize,
    /// `max |quadrature − closed form|` entrywise.
    pub max_error: f64,
    /// Largest error estimate reported by the quadrature.
    pub max_estimate: f64,
}

/// Compares the integral representation of `Λ^{−α}` with the closed form at
/// `per_alpha` random `(t, ν)` for every `α` in `alphas`.
pub fn quadrature_check(
    mu: &MuModel,
    basis: &SpectralBasis,
    times: (f64, f64),
    alphas: &[f64],
    per_alpha: usize,
    quad_tol: f64,
    seed: u64,
) -> Result<Vec<QuadratureRow>> {
    alphas
        .iter()
        .enumerate()
        .map(|(j, &alpha)| {
            let rng = CounterRng::new(seed, 0x7175_0000 + j as u64);
            let mut row = QuadratureRow {
                alpha,
                samples: per_alpha,
                max_error: 0.0,
                max_estimate: 0.0,
            };
            for i in 0..per_alpha as u64 {
                let (_, t, nu) = sample_point(&rng, i, times, basis);
                let q = balakrishnan_block(t, alpha, nu, mu, quad_tol)?;
                let exact = lambda_inverse_block(t, alpha, nu, mu)?;
                let err = (0..2)
                    .flat_map(|a| (0..2).map(move |b| (a, b)))
                    .map(|(a, b)| (q.block.m[a][b] - exact.m[a][b]).abs())
                    .fold(0.0, f64::max);
                row.max_error = row.max_error.max(err);
                row.max_estimate = row.max_estimate.max(q.error);
            }
            Ok(row)
        })
        .collect()
}

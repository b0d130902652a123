//! Dirichlet sine basis on the box `(0, π)^d`.
//!
//! Eigenfunctions are `φ_n(x) = Π_i sqrt(2/π) sin(n_i x_i)` with eigenvalue
//! `ν_n = n_1² + … + n_d²` for `n ∈ {1..M}^d`. They have unit L² norm, so the
//! ℓ² norm of a coefficient vector is the L² norm of the function it
//! represents. Modes are stored sorted by eigenvalue, ties broken by the
//! lexicographic order of the multi-index.

use std::f64::consts::PI;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    dim: usize,
    modes_per_axis: usize,
    eigenvalues: Vec<f64>,
    multi_indices: Vec<Vec<usize>>,
    // position of sorted mode k inside the lexicographic tensor layout
    lex_position: Vec<usize>,
}

impl SpectralBasis {
    pub fn new(dim: usize, modes_per_axis: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        if modes_per_axis == 0 {
            return Err(Error::invalid("modes_per_axis", "must be at least 1"));
        }
        let count = modes_per_axis
            .checked_pow(dim as u32)
            .filter(|&c| c <= 1 << 22)
            .ok_or_else(|| Error::invalid("modes_per_axis", "mode count too large"))?;

        let mut modes: Vec<(u64, usize, Vec<usize>)> = (0..count)
            .map(|lex| {
                let mut rem = lex;
                let mut idx = vec![0usize; dim];
                for slot in idx.iter_mut().rev() {
                    *slot = rem % modes_per_axis + 1;
                    rem /= modes_per_axis;
                }
                let nu = idx.iter().map(|&n| (n * n) as u64).sum();
                (nu, lex, idx)
            })
            .collect();
        modes.sort_by_key(|(nu, lex, _)| (*nu, *lex));

        Ok(Self {
            dim,
            modes_per_axis,
            eigenvalues: modes.iter().map(|(nu, _, _)| *nu as f64).collect(),
            lex_position: modes.iter().map(|(_, lex, _)| *lex).collect(),
            multi_indices: modes.into_iter().map(|(_, _, idx)| idx).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes_per_axis(&self) -> usize {
        self.modes_per_axis
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn multi_index(&self, k: usize) -> &[usize] {
        &self.multi_indices[k]
    }

    pub fn nu_min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn nu_max(&self) -> f64 {
        *self.eigenvalues.last().expect("basis is never empty")
    }

    /// Median of the sorted eigenvalue list.
    pub fn median_eigenvalue(&self) -> f64 {
        let n = self.len();
        if n % 2 == 1 {
            self.eigenvalues[n / 2]
        } else {
            0.5 * (self.eigenvalues[n / 2 - 1] + self.eigenvalues[n / 2])
        }
    }

    pub fn volume(&self) -> f64 {
        PI.powi(self.dim as i32)
    }

    /// `ν_k^p` for every mode.
    pub fn powers(&self, p: f64) -> Vec<f64> {
        self.eigenvalues.iter().map(|nu| nu.powf(p)).collect()
    }

    pub fn check_len(&self, u: &Field) -> Result<()> {
        if u.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                actual: u.len(),
            });
        }
        Ok(())
    }

    /// Collocation grid with `M` interior nodes per axis.
    pub fn grid(&self) -> Grid {
        Grid::new(self, self.modes_per_axis).expect("M >= M")
    }

    /// `Σ ν_k^{2θ} u_k²`, the squared `X^θ` norm.
    pub fn norm_sq(&self, u: &Field, theta: f64) -> f64 {
        self.eigenvalues
            .iter()
            .zip(u.iter())
            .map(|(nu, c)| nu.powf(2.0 * theta) * c * c)
            .sum()
    }

    /// `⟨A^a u, A^b w⟩ = Σ ν_k^{a+b} u_k w_k`.
    pub fn pairing(&self, u: &Field, a: f64, w: &Field, b: f64) -> f64 {
        self.eigenvalues
            .iter()
            .zip(u.iter().zip(w.iter()))
            .map(|(nu, (x, y))| nu.powf(a + b) * x * y)
            .sum()
    }

    /// Coefficient vector of `φ_{n}` for a 1-based multi-index.
    pub fn unit_mode(&self, multi_index: &[usize]) -> Option<Field> {
        let k = self.multi_indices.iter().position(|m| m == multi_index)?;
        let mut f = Field::zeros(self.len());
        f[k] = 1.0;
        Some(f)
    }
}

pub fn build_basis(dim: usize, modes_per_axis: usize) -> Result<SpectralBasis> {
    SpectralBasis::new(dim, modes_per_axis)
}

/// `‖u‖_{X^θ} = (Σ ν_k^{2θ} |u_k|²)^{1/2}`.
pub fn sobolev_norm(basis: &SpectralBasis, u: &Field, theta: f64) -> Result<f64> {
    basis.check_len(u)?;
    Ok(basis.norm_sq(u, theta).sqrt())
}

/// Sharp constant `c` in `‖u‖_{X^{lo}} ≤ c ‖u‖_{X^{hi}}` on the truncation;
/// attained on the lowest mode.
pub fn embedding_constant(basis: &SpectralBasis, theta_lo: f64, theta_hi: f64) -> Result<f64> {
    if theta_lo > theta_hi {
        return Err(Error::invalid(
            "theta_lo",
            format!("{theta_lo} exceeds theta_hi = {theta_hi}"),
        ));
    }
    Ok(basis.nu_min().powf(theta_lo - theta_hi))
}

pub fn forward_transform(basis: &SpectralBasis, grid_values: &[f64]) -> Result<Field> {
    basis.grid().forward(basis, grid_values)
}

pub fn inverse_transform(basis: &SpectralBasis, u: &Field) -> Result<Vec<f64>> {
    basis.grid().inverse(basis, u)
}

/// Spectral coefficients of a scalar function against the normalized sine
/// eigenfunctions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Field(Vec<f64>);

impl Field {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if let Some(i) = coefficients.iter().position(|c| !c.is_finite()) {
            return Err(Error::invalid(
                "coefficients",
                format!("entry {i} is not finite"),
            ));
        }
        Ok(Self(coefficients))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub(crate) fn from_vec(coefficients: Vec<f64>) -> Self {
        Self(coefficients)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn dot(&self, other: &Field) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    /// Plain ℓ² norm, equal to the L² norm of the represented function.
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scaled(&self, c: f64) -> Field {
        Field(self.0.iter().map(|x| c * x).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl Index<usize> for Field {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

impl IndexMut<usize> for Field {
    fn index_mut(&mut self, k: usize) -> &mut f64 {
        &mut self.0[k]
    }
}

/// Tensor-product sine-collocation grid with `P ≥ M` interior nodes per axis,
/// `x_j = jπ/(P+1)`. Grid values are laid out row-major over `(j_1, …, j_d)`.
///
/// With weight `w = (π/(P+1))^d` the pair is exact:
/// `Σ_j w φ_n(x_j) φ_m(x_j) = δ_nm` for all modes of the basis.
#[derive(Debug, Clone)]
pub struct Grid {
    dim: usize,
    modes: usize,
    points: usize,
    nodes: Vec<f64>,
    // table[j * modes + n] = sqrt(2/π) sin((n+1) x_j)
    table: Vec<f64>,
    axis_weight: f64,
}

impl Grid {
    pub fn new(basis: &SpectralBasis, points_per_axis: usize) -> Result<Self> {
        let modes = basis.modes_per_axis();
        if points_per_axis < modes {
            return Err(Error::invalid(
                "points_per_axis",
                format!("{points_per_axis} is below the mode count {modes}"),
            ));
        }
        let step = PI / (points_per_axis + 1) as f64;
        let nodes: Vec<f64> = (1..=points_per_axis).map(|j| j as f64 * step).collect();
        let norm = (2.0 / PI).sqrt();
        let table = nodes
            .iter()
            .flat_map(|x| (1..=modes).map(move |n| norm * (n as f64 * x).sin()))
            .collect();
        Ok(Self {
            dim: basis.dim(),
            modes,
            points: points_per_axis,
            nodes,
            table,
            axis_weight: step,
        })
    }

    /// Grid that resolves the projection of `|u|^{ρ-1}u` exactly when the
    /// power is an integer: `⌈(ρ+1)/2⌉ · M` nodes per axis.
    pub fn dealiased(basis: &SpectralBasis, rho: f64) -> Result<Self> {
        let factor = ((rho + 1.0) / 2.0).ceil().max(1.0) as usize;
        Self::new(basis, factor * basis.modes_per_axis())
    }

    pub fn points_per_axis(&self) -> usize {
        self.points
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.points == 0
    }

    /// Quadrature weight of every node.
    pub fn weight(&self) -> f64 {
        self.axis_weight.powi(self.dim as i32)
    }

    /// Coordinates of grid point `flat` (row-major).
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut rem = flat;
        let mut x = vec![0.0; self.dim];
        for slot in x.iter_mut().rev() {
            *slot = self.nodes[rem % self.points];
            rem /= self.points;
        }
        x
    }

    pub fn inverse(&self, basis: &SpectralBasis, u: &Field) -> Result<Vec<f64>> {
        basis.check_len(u)?;
        self.check_basis(basis)?;
        let mut data = vec![0.0; u.len()];
        for (k, &lex) in basis.lex_position.iter().enumerate() {
            data[lex] = u[k];
        }
        let mut shape = vec![self.modes; self.dim];
        for axis in 0..self.dim {
            data = apply_axis(&data, &shape, axis, &self.table, self.points);
            shape[axis] = self.points;
        }
        Ok(data)
    }

    pub fn forward(&self, basis: &SpectralBasis, grid_values: &[f64]) -> Result<Field> {
        self.check_basis(basis)?;
        if grid_values.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                actual: grid_values.len(),
            });
        }
        let transposed: Vec<f64> = (0..self.modes)
            .flat_map(|n| (0..self.points).map(move |j| (n, j)))
            .map(|(n, j)| self.axis_weight * self.table[j * self.modes + n])
            .collect();
        let mut data = grid_values.to_vec();
        let mut shape = vec![self.points; self.dim];
        for axis in 0..self.dim {
            data = apply_axis(&data, &shape, axis, &transposed, self.modes);
            shape[axis] = self.modes;
        }
        Ok(Field::from_vec(
            basis.lex_position.iter().map(|&lex| data[lex]).collect(),
        ))
    }

    /// `Σ_j w g(x_j)`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weight() * values.iter().sum::<f64>()
    }

    fn check_basis(&self, basis: &SpectralBasis) -> Result<()> {
        if basis.dim() != self.dim || basis.modes_per_axis() != self.modes {
            return Err(Error::invalid(
                "grid",
                "grid was built for a different basis",
            ));
        }
        Ok(())
    }
}

/// Applies the `rows × shape[axis]` matrix along one axis of a row-major
/// tensor.
fn apply_axis(data: &[f64], shape: &[usize], axis: usize, mat: &[f64], rows: usize) -> Vec<f64> {
    let cols = shape[axis];
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let mut out = vec![0.0; outer * rows * inner];
    for o in 0..outer {
        for r in 0..rows {
            let dst = &mut out[(o * rows + r) * inner..][..inner];
            for c in 0..cols {
                let m = mat[r * cols + c];
                let src = &data[(o * cols + c) * inner..][..inner];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += m * s;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_mode_box() {
        let b = SpectralBasis::new(3, 1).unwrap();
        assert_eq!(b.eigenvalues(), &[3.0]);
        assert_eq!(b.volume(), PI.powi(3));
    }

    #[test]
    fn one_dimensional_eigenvalues() {
        let b = SpectralBasis::new(1, 4).unwrap();
        assert_eq!(b.eigenvalues(), &[1.0, 4.0, 9.0, 16.0]);
    }

    #[test]
    fn enumerated_eigenvalues_d3_m2() {
        // brute-force enumeration of n1²+n2²+n3² over {1,2}³
        let mut expected = Vec::new();
        for a in 1..=2 {
            for b in 1..=2 {
                for c in 1..=2 {
                    expected.push((a * a + b * b + c * c) as f64);
                }
            }
        }
        expected.sort_by(f64::total_cmp);
        let b = SpectralBasis::new(3, 2).unwrap();
        assert_eq!(b.eigenvalues(), expected.as_slice());
        assert_eq!(b.eigenvalues(), &[3.0, 6.0, 6.0, 6.0, 9.0, 9.0, 9.0, 12.0]);
        // ties in lexicographic order of the multi-index
        assert_eq!(b.multi_index(1), &[1, 1, 2]);
        assert_eq!(b.multi_index(2), &[1, 2, 1]);
        assert_eq!(b.multi_index(3), &[2, 1, 1]);
    }

    #[test]
    fn rejects_empty_dimensions() {
        assert!(SpectralBasis::new(0, 3).is_err());
        assert!(SpectralBasis::new(2, 0).is_err());
    }

    #[test]
    fn sobolev_norm_examples() {
        let b = SpectralBasis::new(3, 1).unwrap();
        let u = Field::new(vec![1.0]).unwrap();
        assert_relative_eq!(sobolev_norm(&b, &u, 0.5).unwrap(), 3f64.sqrt(), epsilon = 1e-12);
        assert_eq!(sobolev_norm(&b, &Field::zeros(1), 0.7).unwrap(), 0.0);

        let b2 = SpectralBasis::new(1, 2).unwrap();
        let u2 = Field::new(vec![1.0, 1.0]).unwrap();
        assert_relative_eq!(sobolev_norm(&b2, &u2, 0.25).unwrap(), 3f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(sobolev_norm(&b2, &u2, 0.0).unwrap(), u2.norm(), epsilon = 1e-15);

        assert!(sobolev_norm(&b2, &u, 0.0).is_err());
    }

    #[test]
    fn embedding_constants() {
        let b = SpectralBasis::new(3, 4).unwrap();
        assert_relative_eq!(embedding_constant(&b, 0.0, 0.25).unwrap(), 3f64.powf(-0.25), epsilon = 1e-14);
        assert_relative_eq!(embedding_constant(&b, 0.25, 0.25).unwrap(), 1.0);
        let b1 = SpectralBasis::new(1, 4).unwrap();
        let alpha = 0.5;
        assert_eq!(embedding_constant(&b1, (1.0 - alpha) / 4.0, 0.25).unwrap(), 1.0);
        assert!(embedding_constant(&b, 0.5, 0.25).is_err());

        // equality on the lowest mode
        let lo = b.unit_mode(&[1, 1, 1]).unwrap();
        let c = embedding_constant(&b, 0.1, 0.6).unwrap();
        assert_relative_eq!(
            sobolev_norm(&b, &lo, 0.1).unwrap(),
            c * sobolev_norm(&b, &lo, 0.6).unwrap(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn lowest_mode_samples_the_product_of_sines() {
        let b = SpectralBasis::new(2, 3).unwrap();
        let g = b.grid();
        let values = g.inverse(&b, &b.unit_mode(&[1, 1]).unwrap()).unwrap();
        for (flat, value) in values.iter().enumerate() {
            let x = g.point(flat);
            let expected = (2.0 / PI) * x[0].sin() * x[1].sin();
            assert_relative_eq!(*value, expected, epsilon = 1e-14);
        }
    }

    #[test]
    fn zero_grid_maps_to_zero_field() {
        let b = SpectralBasis::new(3, 3).unwrap();
        let f = forward_transform(&b, &vec![0.0; 27]).unwrap();
        assert_eq!(f, Field::zeros(27));
        assert!(forward_transform(&b, &[0.0; 5]).is_err());
    }

    #[test]
    fn round_trip_and_parseval() {
        let b = SpectralBasis::new(3, 4).unwrap();
        let rng = crate::rng::CounterRng::new(3, 0);
        let u = Field::new(rng.normals(0, b.len())).unwrap();
        for points in [4, 7, 11] {
            let g = Grid::new(&b, points).unwrap();
            let values = g.inverse(&b, &u).unwrap();
            let back = g.forward(&b, &values).unwrap();
            for (x, y) in u.iter().zip(back.iter()) {
                assert!((x - y).abs() <= 1e-12 * u.max_abs());
            }
            let grid_sq: f64 = values.iter().map(|v| v * v).sum::<f64>() * g.weight();
            assert_relative_eq!(grid_sq, u.dot(&u), max_relative = 1e-12);
        }
    }
}

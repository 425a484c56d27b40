//! Field calculus on the lattice: gradients, divergences, the nonlinear
//! source term, displacement integration and extrapolation to boundaries.
//!
//! Derivatives use central differences where both neighbours are solid and
//! second-order one-sided differences next to boundaries and the hole.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{BoundaryKind, Grid, Link, OFFSETS};
use crate::material::{poisson_stress, Hyperelastic};
use crate::tensor::{self, Combine, Mat2, Sym2, Vec2};
use crate::Real;

const UNIT: [[i32; 2]; 2] = [[1, 0], [0, 1]];

/// Treatment of the nonlinear source next to traction boundaries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceClosure {
    /// One-sided differences; the wall traction carries the remainder stress.
    OneSided,
    /// No remainder flux through traction walls. The source gradient mirrors
    /// the displacement across the wall, which makes it the negative adjoint
    /// of the divergence.
    #[default]
    ZeroFlux,
}

/// Difference rule used where a neighbour lies beyond a traction wall.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stencil {
    OneSided,
    /// Ghost value equal to the boundary site value.
    Mirror,
    /// Zero ghost flux at the half-link wall.
    ZeroFlux,
}

/// `∂φ/∂X_axis` at `site` for a field given by `value`.
#[inline]
pub fn partial<T: Real>(grid: &Grid<T>, site: usize, axis: usize, value: impl Fn(usize) -> T) -> T {
    partial_with(grid, site, axis, Stencil::OneSided, value)
}

fn at_traction_wall<T: Real>(grid: &Grid<T>, site: usize, dir: usize) -> bool {
    matches!(grid.link(site, dir), Link::Boundary(_, BoundaryKind::Neumann))
}

/// [`partial`] with a chosen rule at traction walls. Dirichlet walls always
/// use one-sided differences.
pub fn partial_with<T: Real>(
    grid: &Grid<T>,
    site: usize,
    axis: usize,
    stencil: Stencil,
    value: impl Fn(usize) -> T,
) -> T {
    let e = UNIT[axis];
    let back = [-e[0], -e[1]];
    let dx = grid.dx();
    let two = T::lit(2.0);
    match (grid.offset(site, e), grid.offset(site, back)) {
        (Some(p), Some(m)) => (value(p) - value(m)) / (two * dx),
        (Some(p), None) => match (stencil, at_traction_wall(grid, site, axis + 3)) {
            (Stencil::Mirror, true) => (value(p) - value(site)) / (two * dx),
            (Stencil::ZeroFlux, true) => (value(p) + value(site)) / (two * dx),
            _ => match grid.offset(p, e) {
                Some(p2) => (T::lit(-3.0) * value(site) + T::lit(4.0) * value(p) - value(p2)) / (two * dx),
                None => (value(p) - value(site)) / dx,
            },
        },
        (None, Some(m)) => match (stencil, at_traction_wall(grid, site, axis + 1)) {
            (Stencil::Mirror, true) => (value(site) - value(m)) / (two * dx),
            (Stencil::ZeroFlux, true) => -(value(site) + value(m)) / (two * dx),
            _ => match grid.offset(m, back) {
                Some(m2) => (T::lit(3.0) * value(site) - T::lit(4.0) * value(m) + value(m2)) / (two * dx),
                None => (value(site) - value(m)) / dx,
            },
        },
        (None, None) => T::zero(),
    }
}

fn check_width<T: Real>(grid: &Grid<T>) -> Result<()> {
    let [n1, n2] = grid.dims();
    if !grid.is_periodic() && (n1 < 3 || n2 < 3) {
        return Err(Error::UnsupportedGeometry(format!(
            "finite differences need at least 3 sites per axis, got {n1}x{n2}"
        )));
    }
    Ok(())
}

/// `H_ab = ∂u_a/∂X_b`. Void sites get zero.
pub fn gradient<T: Real>(u: &[Vec2<T>], grid: &Grid<T>) -> Result<Vec<Mat2<T>>> {
    gradient_with(u, grid, Stencil::OneSided)
}

pub fn gradient_with<T: Real>(u: &[Vec2<T>], grid: &Grid<T>, stencil: Stencil) -> Result<Vec<Mat2<T>>> {
    check_width(grid)?;
    Ok((0..grid.len())
        .into_par_iter()
        .map(|s| {
            if !grid.is_solid(s) {
                return tensor::zero_mat();
            }
            let mut h = tensor::zero_mat();
            for (a, row) in h.iter_mut().enumerate() {
                for (b, hab) in row.iter_mut().enumerate() {
                    *hab = partial_with(grid, s, b, stencil, |k| u[k][a]);
                }
            }
            h
        })
        .collect())
}

/// `(div T)_a = ∂T_ab/∂X_b`.
pub fn divergence<T: Real>(field: &[Mat2<T>], grid: &Grid<T>) -> Result<Vec<Vec2<T>>> {
    divergence_with(field, grid, Stencil::OneSided)
}

pub fn divergence_with<T: Real>(field: &[Mat2<T>], grid: &Grid<T>, stencil: Stencil) -> Result<Vec<Vec2<T>>> {
    check_width(grid)?;
    Ok((0..grid.len())
        .into_par_iter()
        .map(|s| {
            if !grid.is_solid(s) {
                return [T::zero(); 2];
            }
            std::array::from_fn(|a| {
                partial_with(grid, s, 0, stencil, |k| field[k][a][0])
                    + partial_with(grid, s, 1, stencil, |k| field[k][a][1])
            })
        })
        .collect())
}

/// `¹S = ρ0 b + div(P(H) + P̄(H))`.
pub fn source_field<T: Real, M: Hyperelastic<T> + ?Sized>(
    h: &[Mat2<T>],
    body_force: Vec2<T>,
    rho0: T,
    material: &M,
    grid: &Grid<T>,
) -> Result<Vec<Vec2<T>>> {
    source_field_with(h, body_force, rho0, material, grid, Stencil::OneSided)
}

/// Source computed straight from the displacement under `closure`.
pub fn source_from_displacement<T: Real, M: Hyperelastic<T> + ?Sized>(
    u: &[Vec2<T>],
    closure: SourceClosure,
    body_force: Vec2<T>,
    rho0: T,
    material: &M,
    grid: &Grid<T>,
) -> Result<Vec<Vec2<T>>> {
    let (grad, div) = match closure {
        SourceClosure::OneSided => (Stencil::OneSided, Stencil::OneSided),
        SourceClosure::ZeroFlux => (Stencil::Mirror, Stencil::ZeroFlux),
    };
    let h = gradient_with(u, grid, grad)?;
    source_field_with(&h, body_force, rho0, material, grid, div)
}

fn source_field_with<T: Real, M: Hyperelastic<T> + ?Sized>(
    h: &[Mat2<T>],
    body_force: Vec2<T>,
    rho0: T,
    material: &M,
    grid: &Grid<T>,
    div: Stencil,
) -> Result<Vec<Vec2<T>>> {
    let mu = material.shear_modulus();
    let remainder = (0..grid.len())
        .into_par_iter()
        .map(|s| {
            if !grid.is_solid(s) {
                return Ok(tensor::zero_mat());
            }
            let p = material.first_pk(&h[s]).map_err(|e| e.at_site(s))?;
            Ok(tensor::add(&p, &poisson_stress(&h[s], mu).to_mat()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut s1 = divergence_with(&remainder, grid, div)?;
    for (s, v) in s1.iter_mut().enumerate() {
        if grid.is_solid(s) {
            v[0] += rho0 * body_force[0];
            v[1] += rho0 * body_force[1];
        }
    }
    Ok(s1)
}

/// Trapezoidal rule `u + Δt/(2ρ0) (j̄_t + j̄_next)`.
#[inline]
pub fn update_displacement<T: Real>(u: Vec2<T>, j_t: Vec2<T>, j_next: Vec2<T>, rho0: T, dt: T) -> Vec2<T> {
    let k = dt / (T::lit(2.0) * rho0);
    [u[0] + k * (j_t[0] + j_next[0]), u[1] + k * (j_t[1] + j_next[1])]
}

/// Linear extrapolation of `field` from `site` along outgoing direction
/// `dir` to the half-link boundary point: `3/2 φ(X) − 1/2 φ(X − C_i Δt)`.
/// Falls back to `φ(X)` when the upstream site is not solid.
pub fn extrapolate_to_boundary<T: Real, V: Combine<T>>(field: &[V], site: usize, dir: usize, grid: &Grid<T>) -> V {
    let [a, b] = OFFSETS[dir];
    match grid.offset(site, [-a, -b]) {
        Some(up) => field[site].combine(T::lit(1.5), &field[up], T::lit(-0.5)),
        None => field[site],
    }
}

/// Displacement-side state advanced alongside the distributions.
#[derive(Clone, Debug)]
pub struct MechanicalState<T> {
    pub u: Vec<Vec2<T>>,
    /// Momentum at the previous time level, kept for source extrapolation.
    pub j_prev: Vec<Vec2<T>>,
    pub h: Vec<Mat2<T>>,
    /// First Piola-Kirchhoff stress.
    pub p: Vec<Mat2<T>>,
    /// Poisson stress `P̄(H)` from the displacement gradient.
    pub pbar: Vec<Sym2<T>>,
}

impl<T: Real> MechanicalState<T> {
    pub fn zeros(sites: usize) -> Self {
        Self {
            u: vec![[T::zero(); 2]; sites],
            j_prev: vec![[T::zero(); 2]; sites],
            h: vec![tensor::zero_mat(); sites],
            p: vec![tensor::zero_mat(); sites],
            pbar: vec![Sym2::zero(); sites],
        }
    }
}

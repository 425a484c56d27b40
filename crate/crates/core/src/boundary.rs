//! Boundary rules for the populations that streaming cannot supply.
//!
//! Momentum (Dirichlet) edges use bounce-back. Traction (Neumann) edges use
//! anti-bounce-back on the Poisson stress, after converting the prescribed
//! nominal traction into the normal row of `P̄` at the wall.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{extrapolate_to_boundary, MechanicalState, SourceClosure};
use crate::kinetics::KineticState;
use crate::lattice::{BoundaryKind, BoundaryLink, Edge, Grid, VelocitySet, OPPOSITE};
use crate::tensor::{self, Combine, Mat2, Sym2, Vec2};
use crate::Real;

/// Time profile of a boundary load; `amplitude` is reached at full load.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LoadSchedule<T> {
    Constant { amplitude: Vec2<T> },
    /// Linear from zero at `t = 0` to `amplitude` at `t_ramp`, then held.
    RampHold { amplitude: Vec2<T>, t_ramp: T },
    /// `amplitude` on `[0, t_release)`, zero afterwards.
    StepHoldRelease { amplitude: Vec2<T>, t_release: T },
}

impl<T: Real> LoadSchedule<T> {
    pub fn zero() -> Self {
        LoadSchedule::Constant {
            amplitude: [T::zero(); 2],
        }
    }

    pub fn eval(&self, t: T) -> Vec2<T> {
        match *self {
            LoadSchedule::Constant { amplitude } => amplitude,
            LoadSchedule::RampHold { amplitude, t_ramp } => {
                let s = (t / t_ramp).max(T::zero()).min(T::one());
                [amplitude[0] * s, amplitude[1] * s]
            }
            LoadSchedule::StepHoldRelease { amplitude, t_release } => {
                if t < t_release {
                    amplitude
                } else {
                    [T::zero(); 2]
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        let a = match *self {
            LoadSchedule::Constant { amplitude }
            | LoadSchedule::RampHold { amplitude, .. }
            | LoadSchedule::StepHoldRelease { amplitude, .. } => amplitude,
        };
        a[0] == T::zero() && a[1] == T::zero()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundaryCondition<T> {
    /// Prescribed momentum density `j̄*`.
    Dirichlet { momentum: LoadSchedule<T> },
    /// Prescribed nominal traction `T*` (force per reference length).
    Neumann { traction: LoadSchedule<T> },
}

impl<T: Real> BoundaryCondition<T> {
    pub fn kind(&self) -> BoundaryKind {
        match self {
            BoundaryCondition::Dirichlet { .. } => BoundaryKind::Dirichlet,
            BoundaryCondition::Neumann { .. } => BoundaryKind::Neumann,
        }
    }

    pub fn traction_free() -> Self {
        BoundaryCondition::Neumann {
            traction: LoadSchedule::zero(),
        }
    }
}

/// One condition per [`Edge`]; unset edges are traction free.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundarySpec<T> {
    conditions: [BoundaryCondition<T>; 8],
}

impl<T: Real> Default for BoundarySpec<T> {
    fn default() -> Self {
        Self {
            conditions: [BoundaryCondition::traction_free(); 8],
        }
    }
}

impl<T: Real> BoundarySpec<T> {
    pub fn with(mut self, edge: Edge, condition: BoundaryCondition<T>) -> Self {
        self.conditions[edge.index()] = condition;
        self
    }

    pub fn set(&mut self, edge: Edge, condition: BoundaryCondition<T>) {
        self.conditions[edge.index()] = condition;
    }

    pub fn condition(&self, edge: Edge) -> &BoundaryCondition<T> {
        &self.conditions[edge.index()]
    }

    pub fn kinds(&self) -> [BoundaryKind; 8] {
        self.conditions.map(|c| c.kind())
    }

    /// Traction on a Neumann edge at time `t`; zero on Dirichlet edges.
    pub fn traction(&self, edge: Edge, t: T) -> Vec2<T> {
        match self.condition(edge) {
            BoundaryCondition::Neumann { traction } => traction.eval(t),
            BoundaryCondition::Dirichlet { .. } => [T::zero(); 2],
        }
    }
}

/// `f_ī = f_i^col − (2/C_s²) w_i C_i·j̄*`.
#[inline]
pub fn bounce_back_dirichlet<T: Real>(f_col: T, i: usize, j_star: Vec2<T>, vs: &VelocitySet<T>) -> T {
    let c = vs.c[i];
    f_col - T::lit(2.0) / vs.cs2 * vs.w[i] * (c[0] * j_star[0] + c[1] * j_star[1])
}

/// Wall value `P̄*` with `P̄* N = −T* + (P_b + P̄_b) N`.
///
/// In the frame `(N, t)` the normal row and column come from the quasi
/// traction; the tangential-tangential entry is kept from `P̄_b`.
pub fn traction_to_poisson_boundary<T: Real>(
    t_star: Vec2<T>,
    normal: Vec2<T>,
    p_b: &Mat2<T>,
    pbar_b: &Sym2<T>,
) -> Result<Sym2<T>> {
    wall_poisson_stress(t_star, normal, &tensor::add(p_b, &pbar_b.to_mat()), pbar_b)
}

/// Same as [`traction_to_poisson_boundary`] with the source remainder
/// `P + P̄(H)` and the tensor supplying the tangential entry given
/// separately.
pub fn wall_poisson_stress<T: Real>(
    t_star: Vec2<T>,
    normal: Vec2<T>,
    remainder_b: &Mat2<T>,
    tangential_b: &Sym2<T>,
) -> Result<Sym2<T>> {
    let len = (normal[0] * normal[0] + normal[1] * normal[1]).sqrt();
    if (len - T::one()).abs() > T::lit(1e-12) {
        return Err(Error::InvalidNormal(len.to_f64_lossy()));
    }
    let n = normal;
    let tan = [-n[1], n[0]];
    let rn = tensor::mat_vec(remainder_b, &n);
    let g = [rn[0] - t_star[0], rn[1] - t_star[1]];

    let gn = g[0] * n[0] + g[1] * n[1];
    let gt = g[0] * tan[0] + g[1] * tan[1];
    let ptt = tensor::dot(&tan, &tangential_b.apply(&tan));
    // R = [n | t], P̄* = R [[gn, gt], [gt, ptt]] Rᵀ
    let comp = |a: usize, b: usize| {
        gn * n[a] * n[b] + gt * (n[a] * tan[b] + tan[a] * n[b]) + ptt * tan[a] * tan[b]
    };
    Ok(Sym2::new(comp(0, 0), comp(0, 1), comp(1, 1)))
}

/// `f_ī = −f_i^col + 2 w_i (r + (P̄* − r C_s² I):(C_i C_i − C_s² I)/(2C_s⁴))`.
#[inline]
pub fn anti_bounce_back_neumann<T: Real>(f_col: T, i: usize, r_bd: T, pbar_star: &Sym2<T>, vs: &VelocitySet<T>) -> T {
    let cs2 = vs.cs2;
    let [cx, cy] = vs.c[i];
    let second = (pbar_star.xx - r_bd * cs2) * (cx * cx - cs2)
        + T::lit(2.0) * pbar_star.xy * cx * cy
        + (pbar_star.yy - r_bd * cs2) * (cy * cy - cs2);
    -f_col + T::lit(2.0) * vs.w[i] * (r_bd + second / (T::lit(2.0) * cs2 * cs2))
}

/// How wall values of `r`, `P̄` and `P` are taken from the boundary site.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WallValues {
    /// Value at the boundary site.
    #[default]
    Copy,
    /// Linear extrapolation along the link to the half-link wall point.
    Linear,
}

fn wall_value<T: Real, V: Combine<T>>(field: &[V], l: &BoundaryLink, grid: &Grid<T>, wall: WallValues) -> V {
    match wall {
        WallValues::Copy => field[l.site],
        WallValues::Linear => extrapolate_to_boundary(field, l.site, l.dir, grid),
    }
}

/// Fills every population whose upstream link crosses a boundary, writing
/// `kin.f` from `f_post` and the time-`t` fields. The wall `P̄*` takes its
/// tangential entry from the lattice `P̄` and its quasi traction from
/// `P + P̄(H)`. Loads are evaluated at `t_load`. Returns the number of
/// filled entries.
pub fn fill_boundaries<T: Real>(
    kin: &mut KineticState<T>,
    mech: &MechanicalState<T>,
    grid: &Grid<T>,
    spec: &BoundarySpec<T>,
    vs: &VelocitySet<T>,
    wall: WallValues,
    closure: SourceClosure,
    t_load: T,
) -> Result<usize> {
    let links = grid.boundary_links();
    let values = links
        .par_iter()
        .map(|l| {
            let f_col = kin.f_post[l.site][l.dir];
            match spec.condition(l.edge) {
                BoundaryCondition::Dirichlet { momentum } => {
                    Ok(bounce_back_dirichlet(f_col, l.dir, momentum.eval(t_load), vs))
                }
                BoundaryCondition::Neumann { traction } => {
                    let r_bd = wall_value(&kin.r, l, grid, wall);
                    let remainder = match closure {
                        SourceClosure::OneSided => tensor::add(
                            &wall_value(&mech.p, l, grid, wall),
                            &wall_value(&mech.pbar, l, grid, wall).to_mat(),
                        ),
                        SourceClosure::ZeroFlux => tensor::zero_mat(),
                    };
                    let tangential = wall_value(&kin.pbar, l, grid, wall);
                    let star = wall_poisson_stress(traction.eval(t_load), l.edge.normal(), &remainder, &tangential)?;
                    Ok(anti_bounce_back_neumann(f_col, l.dir, r_bd, &star, vs))
                }
            }
        })
        .collect::<Result<Vec<T>>>()?;

    #[cfg(debug_assertions)]
    let mut filled = vec![[false; crate::lattice::Q]; grid.len()];
    for (l, v) in links.iter().zip(values) {
        let target = OPPOSITE[l.dir];
        #[cfg(debug_assertions)]
        {
            debug_assert!(!filled[l.site][target], "population filled twice");
            filled[l.site][target] = true;
        }
        kin.f[l.site][target] = v;
    }
    Ok(links.len())
}

//! Lattice Boltzmann core: equilibrium, source projection, BGK collision
//! with He forcing, streaming and moment reconstruction.
//!
//! Moments carried by the distributions: `r = −ρ0 ∇·u` (zeroth), the
//! momentum density `j̄ = ρ0 v` (first) and the Poisson stress `P̄` (second).
//! All three are read back from `f`; the displacement-derived `P̄(H)` only
//! enters through the source and the boundary rules.

use rayon::prelude::*;

use crate::boundary::WallValues;
use crate::fields::SourceClosure;
use crate::error::{Error, Result};
use crate::lattice::{positive, Grid, Link, VelocitySet, OFFSETS, Q};
use crate::tensor::{Sym2, Vec2};
use crate::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct Parameters<T> {
    /// Relaxation time τ̄.
    pub tau: T,
    pub dt: T,
    pub rho0: T,
    pub lambda: T,
    pub mu: T,
    /// Body force per unit mass.
    pub body_force: Vec2<T>,
    /// Evaluate the moment-step source from an extrapolated momentum instead
    /// of the current state.
    pub source_extrapolation: bool,
    /// Fixed-point passes that re-evaluate the moment-step source at the
    /// end-of-step displacement. Zero keeps the source lagged at `t`.
    pub source_iterations: usize,
    pub wall_values: WallValues,
    pub source_closure: SourceClosure,
}

impl<T: Real> Parameters<T> {
    /// `tau_ratio = τ̄ / Δt` must exceed 1/2.
    pub fn new(tau_ratio: T, dt: T, rho0: T, lambda: T, mu: T, body_force: Vec2<T>) -> Result<Self> {
        if !(tau_ratio > T::lit(0.5)) || !tau_ratio.is_finite() {
            return Err(Error::StabilityViolation {
                tau_ratio: tau_ratio.to_f64_lossy(),
            });
        }
        positive("dt", dt)?;
        positive("rho0", rho0)?;
        positive("mu", mu)?;
        if !lambda.is_finite() {
            return Err(Error::InvalidParameter {
                name: "lambda",
                reason: "must be finite".into(),
            });
        }
        Ok(Self {
            tau: tau_ratio * dt,
            dt,
            rho0,
            lambda,
            mu,
            body_force,
            source_extrapolation: false,
            source_iterations: 2,
            wall_values: WallValues::Copy,
            source_closure: SourceClosure::ZeroFlux,
        })
    }

    pub fn tau_ratio(&self) -> T {
        self.tau / self.dt
    }
}

/// `f_i^eq = w_i (r + C_i·j̄/C_s² + (P̄ − r C_s² I):(C_i C_i − C_s² I)/(2 C_s⁴))`.
pub fn equilibrium<T: Real>(r: T, j: Vec2<T>, pbar: Sym2<T>, vs: &VelocitySet<T>) -> [T; Q] {
    let cs2 = vs.cs2;
    let inv_cs2 = T::one() / cs2;
    let inv_2cs4 = T::lit(0.5) * inv_cs2 * inv_cs2;
    let dxx = pbar.xx - r * cs2;
    let dyy = pbar.yy - r * cs2;
    std::array::from_fn(|i| {
        let [cx, cy] = vs.c[i];
        let second = dxx * (cx * cx - cs2) + T::lit(2.0) * pbar.xy * cx * cy + dyy * (cy * cy - cs2);
        vs.w[i] * (r + (cx * j[0] + cy * j[1]) * inv_cs2 + second * inv_2cs4)
    })
}

/// `ψ_i = w_i C_i·¹S / C_s²`.
pub fn source_projection<T: Real>(s1: Vec2<T>, vs: &VelocitySet<T>) -> [T; Q] {
    let inv_cs2 = T::one() / vs.cs2;
    std::array::from_fn(|i| vs.w[i] * (vs.c[i][0] * s1[0] + vs.c[i][1] * s1[1]) * inv_cs2)
}

/// BGK relaxation plus the He forcing term.
#[inline]
pub fn collide<T: Real>(f: &[T; Q], feq: &[T; Q], psi: &[T; Q], p: &Parameters<T>) -> [T; Q] {
    let omega = p.dt / p.tau;
    let force = p.dt * (T::one() - T::lit(0.5) * omega);
    std::array::from_fn(|i| f[i] - omega * (f[i] - feq[i]) + force * psi[i])
}

/// `r = Σ f_i`, `j̄ = Σ C_i f_i + Δt/2 ¹S`.
#[inline]
pub fn compute_moments<T: Real>(f: &[T; Q], s1: Vec2<T>, vs: &VelocitySet<T>, dt: T) -> (T, Vec2<T>) {
    let mut r = T::zero();
    let mut j = [T::zero(); 2];
    for i in 0..Q {
        r += f[i];
        j[0] += vs.c[i][0] * f[i];
        j[1] += vs.c[i][1] * f[i];
    }
    let h = T::lit(0.5) * dt;
    (r, [j[0] + h * s1[0], j[1] + h * s1[1]])
}

/// `P̄ = Σ C_i C_i f_i`.
#[inline]
pub fn second_moment<T: Real>(f: &[T; Q], vs: &VelocitySet<T>) -> Sym2<T> {
    let mut p = Sym2::zero();
    for i in 0..Q {
        let [cx, cy] = vs.c[i];
        p.xx += cx * cx * f[i];
        p.xy += cx * cy * f[i];
        p.yy += cy * cy * f[i];
    }
    p
}

/// Distributions and the macroscopic fields they are built from.
///
/// `f` holds the populations at the current time level; `f_post` is the
/// second buffer written by collision and read by streaming and the
/// boundary fill.
#[derive(Clone, Debug)]
pub struct KineticState<T> {
    pub f: Vec<[T; Q]>,
    pub f_post: Vec<[T; Q]>,
    pub r: Vec<T>,
    pub j: Vec<Vec2<T>>,
    pub pbar: Vec<Sym2<T>>,
    /// First-order source `¹S`.
    pub source: Vec<Vec2<T>>,
    pub t: T,
}

impl<T: Real> KineticState<T> {
    pub fn zeros(sites: usize) -> Self {
        Self {
            f: vec![[T::zero(); Q]; sites],
            f_post: vec![[T::zero(); Q]; sites],
            r: vec![T::zero(); sites],
            j: vec![[T::zero(); 2]; sites],
            pbar: vec![Sym2::zero(); sites],
            source: vec![[T::zero(); 2]; sites],
            t: T::zero(),
        }
    }

    /// Sets `f = f^eq(r, j̄ − Δt/2 ¹S, P̄)` on all solid sites, so that
    /// the moment rule returns the given `j̄` with the current source.
    pub fn initialise(&mut self, grid: &Grid<T>, vs: &VelocitySet<T>) {
        let (r, j, pbar, src) = (&self.r, &self.j, &self.pbar, &self.source);
        let h = T::lit(0.5) * vs.dt;
        self.f.par_iter_mut().enumerate().for_each(|(s, f)| {
            *f = if grid.is_solid(s) {
                let shifted = [j[s][0] - h * src[s][0], j[s][1] - h * src[s][1]];
                equilibrium(r[s], shifted, pbar[s], vs)
            } else {
                [T::zero(); Q]
            };
        });
    }

    /// Collides every solid site into `f_post` using the current `r`, `j̄`,
    /// `P̄` and `¹S`.
    pub fn collide_all(&mut self, grid: &Grid<T>, vs: &VelocitySet<T>, p: &Parameters<T>) {
        let (f, r, j, pbar, src) = (&self.f, &self.r, &self.j, &self.pbar, &self.source);
        self.f_post.par_iter_mut().enumerate().for_each(|(s, out)| {
            if grid.is_solid(s) {
                let feq = equilibrium(r[s], j[s], pbar[s], vs);
                let psi = source_projection(src[s], vs);
                *out = collide(&f[s], &feq, &psi, p);
            }
        });
    }

    /// Pulls post-collision values along interior links into `f`. Entries
    /// whose upstream link crosses a boundary are left for the boundary fill.
    pub fn stream(&mut self, grid: &Grid<T>) {
        let post = &self.f_post;
        self.f.par_iter_mut().enumerate().for_each(|(s, f)| {
            if !grid.is_solid(s) {
                return;
            }
            for (i, &[a, b]) in OFFSETS.iter().enumerate() {
                if let Some(src) = grid.offset(s, [-a, -b]) {
                    if grid.link(src, i) == Link::Interior(s) {
                        f[i] = post[src][i];
                    }
                }
            }
        });
    }

    /// Recomputes `r`, `j̄` and `P̄` from `f` with the given source field.
    pub fn update_moments(&mut self, grid: &Grid<T>, vs: &VelocitySet<T>, source: &[Vec2<T>], dt: T) {
        let f = &self.f;
        self.r
            .par_iter_mut()
            .zip(self.j.par_iter_mut())
            .zip(self.pbar.par_iter_mut())
            .enumerate()
            .for_each(|(s, ((r, j), p))| {
                if grid.is_solid(s) {
                    (*r, *j) = compute_moments(&f[s], source[s], vs, dt);
                    *p = second_moment(&f[s], vs);
                }
            });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn vs() -> VelocitySet<f64> {
        VelocitySet::d2q9(0.025, 0.025 / 3f64.sqrt()).unwrap()
    }

    fn params(tau_ratio: f64, dt: f64) -> Parameters<f64> {
        Parameters::new(tau_ratio, dt, 1.0, 1.0, 1.0, [0.0, 0.0]).unwrap()
    }

    /// Brute-force moments of a population over the 9 velocities.
    fn moments(f: &[f64; Q], vs: &VelocitySet<f64>) -> (f64, [f64; 2], [[f64; 2]; 2], [[[f64; 2]; 2]; 2]) {
        let mut m0 = 0.0;
        let mut m1 = [0.0; 2];
        let mut m2 = [[0.0; 2]; 2];
        let mut m3 = [[[0.0; 2]; 2]; 2];
        for i in 0..Q {
            let c = vs.c[i];
            m0 += f[i];
            for a in 0..2 {
                m1[a] += c[a] * f[i];
                for b in 0..2 {
                    m2[a][b] += c[a] * c[b] * f[i];
                    for g in 0..2 {
                        m3[a][b][g] += c[a] * c[b] * c[g] * f[i];
                    }
                }
            }
        }
        (m0, m1, m2, m3)
    }

    #[test]
    fn equilibrium_at_rest() {
        let vs = vs();
        let f = equilibrium(1.0, [0.0, 0.0], Sym2::isotropic(vs.cs2), &vs);
        for i in 0..Q {
            assert!((f[i] - vs.w[i]).abs() < 1e-15);
        }
        assert_eq!(equilibrium(0.0, [0.0, 0.0], Sym2::zero(), &vs), [0.0; Q]);
    }

    #[test]
    fn equilibrium_moment_identities() {
        let vs = vs();
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        for _ in 0..1000 {
            let r: f64 = rng.gen_range(-1.0..1.0);
            let j = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let p = Sym2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let (m0, m1, m2, m3) = moments(&equilibrium(r, j, p, &vs), &vs);
            let scale = 1.0 + r.abs() + j[0].abs() + j[1].abs();
            assert!((m0 - r).abs() <= 1e-13 * scale);
            for a in 0..2 {
                assert!((m1[a] - j[a]).abs() <= 1e-13 * scale);
                for b in 0..2 {
                    assert!((m2[a][b] - p.get(a, b)).abs() <= 1e-13 * scale);
                    for g in 0..2 {
                        let q = vs.cs2 * (j[a] * d(b, g) + j[b] * d(a, g) + j[g] * d(a, b));
                        assert!((m3[a][b][g] - q).abs() <= 1e-13 * scale);
                    }
                }
            }
        }
    }

    #[test]
    fn source_projection_moments() {
        let vs = VelocitySet::d2q9(3f64.sqrt(), 1.0).unwrap();
        assert!((vs.cs - 1.0).abs() < 1e-15);
        assert_eq!(source_projection([0.0, 0.0], &vs), [0.0; Q]);
        let psi = source_projection([1.0, 0.0], &vs);
        let (m0, m1, _, _) = moments(&psi, &vs);
        assert!(m0.abs() < 1e-15);
        assert!((m1[0] - 1.0).abs() < 1e-14 && m1[1].abs() < 1e-15);
    }

    #[test]
    fn collision_examples() {
        let vs = vs();
        let dt = vs.dt;
        let feq = equilibrium(0.3, [0.1, -0.2], Sym2::new(0.5, 0.1, -0.4), &vs);
        let zero = [0.0; Q];
        let f = collide(&feq, &feq, &zero, &params(0.55, dt));
        for i in 0..Q {
            assert!((f[i] - feq[i]).abs() < 1e-15);
        }
        let f0 = equilibrium(-0.2, [0.3, 0.0], Sym2::new(0.1, 0.0, 0.2), &vs);
        let full = params(1.0, dt);
        let out = collide(&f0, &feq, &zero, &full);
        for i in 0..Q {
            assert!((out[i] - feq[i]).abs() < 1e-15);
        }
        let psi = source_projection([0.7, -1.1], &vs);
        let out = collide(&f0, &feq, &psi, &full);
        for i in 0..Q {
            assert!((out[i] - (feq[i] + 0.5 * dt * psi[i])).abs() < 1e-15);
        }
    }

    #[test]
    fn collision_preserves_zeroth_moment() {
        let vs = vs();
        let feq = equilibrium(0.4, [0.2, 0.1], Sym2::new(0.3, 0.2, 0.1), &vs);
        let mut f = feq;
        f[1] += 0.05;
        f[3] -= 0.05;
        let out = collide(&f, &feq, &[0.0; Q], &params(0.7, vs.dt));
        assert!((out.iter().sum::<f64>() - 0.4).abs() < 1e-14);
    }

    #[test]
    fn stability_guard() {
        assert!(matches!(
            Parameters::new(0.5, 0.01, 1.0, 1.0, 1.0, [0.0, 0.0]),
            Err(Error::StabilityViolation { .. })
        ));
        assert!(Parameters::new(0.5001, 0.01, 1.0, 1.0, 1.0, [0.0, 0.0]).is_ok());
    }

    #[test]
    fn moment_examples() {
        let vs = vs();
        let (r, j) = compute_moments(&vs.w, [0.0, 0.0], &vs, vs.dt);
        assert!((r - 1.0).abs() < 1e-15 && j[0].abs() < 1e-15 && j[1].abs() < 1e-15);
        let (r, j) = compute_moments(&[0.0; Q], [2.0, 0.0], &vs, 0.1);
        assert_eq!((r, j), (0.0, [0.1, 0.0]));
    }

    #[test]
    fn moment_round_trip() {
        let vs = vs();
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..1000 {
            let r: f64 = rng.gen_range(-1.0..1.0);
            let j0 = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let p = Sym2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let (r1, j1) = compute_moments(&equilibrium(r, j0, p, &vs), [0.0, 0.0], &vs, vs.dt);
            let scale = 1.0 + r.abs() + j0[0].abs() + j0[1].abs();
            assert!((r1 - r).abs() <= 1e-13 * scale);
            assert!((j1[0] - j0[0]).abs() <= 1e-13 * scale && (j1[1] - j0[1]).abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn streaming_shifts_and_conserves() {
        let grid = Grid::<f64>::periodic(5, 4, 1.0).unwrap();
        let mut st = KineticState::zeros(grid.len());
        st.f_post[grid.index(0, 0)][1] = 1.0;
        st.stream(&grid);
        for s in 0..grid.len() {
            let expect = if s == grid.index(1, 0) { 1.0 } else { 0.0 };
            assert_eq!(st.f[s][1], expect);
        }

        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for f in st.f_post.iter_mut() {
            *f = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        }
        let before: Vec<f64> = (0..Q).map(|i| st.f_post.iter().map(|f| f[i]).sum()).collect();
        st.stream(&grid);
        for i in 0..Q {
            let after: f64 = st.f.iter().map(|f| f[i]).sum();
            assert!((after - before[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn streaming_matches_link_enumeration() {
        let grid = Grid::<f64>::periodic(3, 3, 1.0).unwrap();
        let mut st = KineticState::zeros(grid.len());
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        for f in st.f_post.iter_mut() {
            *f = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        }
        st.stream(&grid);
        for s in 0..grid.len() {
            for i in 0..Q {
                let [k1, k2] = grid.coords(s);
                let d1 = (k1 as i32 + OFFSETS[i][0]).rem_euclid(3) as usize;
                let d2 = (k2 as i32 + OFFSETS[i][1]).rem_euclid(3) as usize;
                assert_eq!(st.f[grid.index(d1, d2)][i], st.f_post[s][i]);
            }
        }
    }
}

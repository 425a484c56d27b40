//! Scenario assembly, the time-stepping loop, probes and run orchestration.

use rayon::prelude::*;

use crate::boundary::{fill_boundaries, BoundarySpec};
use crate::error::{Error, Result};
use crate::fields::{gradient, source_from_displacement, update_displacement, MechanicalState};
use crate::kinetics::{KineticState, Parameters};
use crate::lattice::{derive_timestep, BoundaryKind, GeometrySpec, Grid, VelocitySet, Q};
use crate::material::{cauchy_stress, poisson_stress, Hyperelastic, NeoHooke};
use crate::tensor::{self, Mat2, Sym2, Vec2};
use crate::Real;

/// A named sampling point snapped to its nearest lattice site.
#[derive(Clone, Debug, PartialEq)]
pub struct Probe<T> {
    pub name: String,
    pub requested: Vec2<T>,
    pub site: usize,
    /// Distance between the requested point and the site it snapped to.
    pub snap_distance: T,
}

/// Everything needed to run: lattice, material, loads, probes and controls.
#[derive(Clone, Debug)]
pub struct Scenario<T> {
    pub grid: Grid<T>,
    pub vs: VelocitySet<T>,
    pub params: Parameters<T>,
    pub material: NeoHooke<T>,
    pub boundaries: BoundarySpec<T>,
    pub probes: Vec<Probe<T>>,
    pub t_max: T,
    /// Field dump cadence in steps; the initial and final states are always
    /// dumped when set.
    pub dump_every: Option<usize>,
}

impl<T: Real> Scenario<T> {
    pub fn new(
        geometry: &GeometrySpec<T>,
        material: NeoHooke<T>,
        rho0: T,
        tau_ratio: T,
        boundaries: BoundarySpec<T>,
        body_force: Vec2<T>,
        t_max: T,
    ) -> Result<Self> {
        let grid = Grid::build(geometry, &boundaries.kinds())?;
        Self::on_grid(grid, material, rho0, tau_ratio, boundaries, body_force, t_max)
    }

    /// Uses a prebuilt grid, e.g. a periodic one.
    pub fn on_grid(
        grid: Grid<T>,
        material: NeoHooke<T>,
        rho0: T,
        tau_ratio: T,
        boundaries: BoundarySpec<T>,
        body_force: Vec2<T>,
        t_max: T,
    ) -> Result<Self> {
        if !(t_max > T::zero()) || !t_max.is_finite() {
            return Err(Error::InvalidParameter {
                name: "t_max",
                reason: format!("must be positive and finite, got {t_max}"),
            });
        }
        let dt = derive_timestep(grid.dx(), material.mu, rho0)?;
        let vs = VelocitySet::d2q9(grid.dx(), dt)?;
        let params = Parameters::new(tau_ratio, dt, rho0, material.lambda, material.mu, body_force)?;
        Ok(Self {
            grid,
            vs,
            params,
            material,
            boundaries,
            probes: Vec::new(),
            t_max,
            dump_every: None,
        })
    }

    /// Snaps `x` to the nearest solid site; rejects points further than
    /// `ΔX/4` from any site.
    pub fn add_probe(&mut self, name: impl Into<String>, x: Vec2<T>) -> Result<()> {
        let name = name.into();
        let (site, d) = self
            .grid
            .nearest_site(x)
            .ok_or_else(|| Error::Geometry("grid has no solid sites".into()))?;
        if d > self.grid.dx() * T::lit(0.25) {
            return Err(Error::Geometry(format!(
                "probe `{name}` at ({}, {}) is {d} from the nearest site, more than dx/4",
                x[0], x[1]
            )));
        }
        self.probes.push(Probe {
            name,
            requested: x,
            site,
            snap_distance: d,
        });
        Ok(())
    }

    pub fn dt(&self) -> T {
        self.params.dt
    }

    /// Number of steps to reach `t_max`.
    pub fn steps(&self) -> usize {
        let r = (self.t_max / self.params.dt).to_f64_lossy();
        let k = r.round();
        if (r - k).abs() <= 1e-9 * r.max(1.0) {
            k as usize
        } else {
            r.ceil() as usize
        }
    }
}

/// Displacement and Cauchy stress at one probe.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeSample<T> {
    pub u: Vec2<T>,
    pub cauchy: Sym2<T>,
}

/// Probe values after every step.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeSeries<T> {
    pub names: Vec<String>,
    pub times: Vec<T>,
    /// `samples[k][p]` is probe `p` after step `k + 1`.
    pub samples: Vec<Vec<ProbeSample<T>>>,
}

impl<T> ProbeSeries<T> {
    pub fn new(names: Vec<String>) -> Self {
        Self {
            names,
            times: Vec::new(),
            samples: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn probe_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// External work done by boundary tractions and the energies stored in the
/// body at time `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergySample<T> {
    pub t: T,
    pub external_work: T,
    pub kinetic: T,
    pub strain: T,
}

impl<T: Real> EnergySample<T> {
    pub fn imbalance(&self) -> T {
        self.external_work - self.kinetic - self.strain
    }
}

/// Distributions plus displacement-side fields, advanced one step at a time.
#[derive(Clone, Debug)]
pub struct Simulation<T> {
    scenario: Scenario<T>,
    kin: KineticState<T>,
    mech: MechanicalState<T>,
    step: usize,
    external_work: T,
}

impl<T: Real> Simulation<T> {
    /// Body at rest in the reference configuration.
    pub fn new(scenario: Scenario<T>) -> Result<Self> {
        let n = scenario.grid.len();
        let mut sim = Self {
            scenario,
            kin: KineticState::zeros(n),
            mech: MechanicalState::zeros(n),
            step: 0,
            external_work: T::zero(),
        };
        sim.set_initial_state(vec![[T::zero(); 2]; n], vec![[T::zero(); 2]; n])?;
        Ok(sim)
    }

    /// Starts from displacement `u` and momentum density `j`, with
    /// `r = −ρ0 tr H`, `P̄ = P̄(H)` and `f` at equilibrium.
    pub fn set_initial_state(&mut self, u: Vec<Vec2<T>>, j: Vec<Vec2<T>>) -> Result<()> {
        let n = self.scenario.grid.len();
        if u.len() != n || j.len() != n {
            return Err(Error::InvalidParameter {
                name: "initial state",
                reason: format!("expected {n} sites"),
            });
        }
        self.mech.u = u;
        self.mech.j_prev = j.clone();
        self.kin.j = j;
        self.update_stresses()?;
        let sc = &self.scenario;
        let grid = &sc.grid;
        let rho0 = sc.params.rho0;
        let h = &self.mech.h;
        self.kin.r.par_iter_mut().enumerate().for_each(|(s, r)| {
            *r = if grid.is_solid(s) {
                -rho0 * tensor::trace(&h[s])
            } else {
                T::zero()
            };
        });
        self.kin.pbar = self.mech.pbar.clone();
        self.kin.source = source_from_displacement(
            &self.mech.u,
            sc.params.source_closure,
            sc.params.body_force,
            rho0,
            &sc.material,
            grid,
        )?;
        self.kin.initialise(grid, &sc.vs);
        self.step = 0;
        self.kin.t = T::zero();
        self.external_work = T::zero();
        Ok(())
    }

    pub fn scenario(&self) -> &Scenario<T> {
        &self.scenario
    }

    pub fn kinetic(&self) -> &KineticState<T> {
        &self.kin
    }

    pub fn mechanical(&self) -> &MechanicalState<T> {
        &self.mech
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> T {
        self.kin.t
    }

    /// H, P and P̄(H) from the current displacement.
    fn update_stresses(&mut self) -> Result<()> {
        let sc = &self.scenario;
        let grid = &sc.grid;
        self.mech.h = gradient(&self.mech.u, grid)?;
        let h = &self.mech.h;
        let material = &sc.material;
        self.mech.p = (0..grid.len())
            .into_par_iter()
            .map(|s| {
                if grid.is_solid(s) {
                    material.first_pk(&h[s]).map_err(|e| e.at_site(s))
                } else {
                    Ok(tensor::zero_mat())
                }
            })
            .collect::<Result<Vec<Mat2<T>>>>()?;
        let mu = material.mu;
        self.mech.pbar = h.par_iter().map(|h| poisson_stress(h, mu)).collect();
        Ok(())
    }

    /// Advances by one time step.
    pub fn step(&mut self) -> Result<()> {
        let sc = &self.scenario;
        let (grid, vs, p) = (&sc.grid, &sc.vs, &sc.params);
        let dt = p.dt;
        let half_dt = T::lit(0.5) * dt;
        let t_load = self.kin.t + half_dt;

        self.kin.source = source_from_displacement(&self.mech.u, p.source_closure, p.body_force, p.rho0, &sc.material, grid)?;

        self.kin.collide_all(grid, vs, p);
        self.kin.stream(grid);
        fill_boundaries(&mut self.kin, &self.mech, grid, &sc.boundaries, vs, p.wall_values, p.source_closure, t_load)?;

        let j_t = self.kin.j.clone();
        let moment_source = if p.source_extrapolation {
            let predicted: Vec<Vec2<T>> = (0..grid.len())
                .into_par_iter()
                .map(|s| {
                    let (j, jp) = (j_t[s], self.mech.j_prev[s]);
                    let j_next = [j[0] + j[0] - jp[0], j[1] + j[1] - jp[1]];
                    update_displacement(self.mech.u[s], j, j_next, p.rho0, dt)
                })
                .collect();
            source_from_displacement(&predicted, p.source_closure, p.body_force, p.rho0, &sc.material, grid)?
        } else {
            std::mem::take(&mut self.kin.source)
        };
        self.kin.update_moments(grid, vs, &moment_source, dt);
        let mut used = moment_source;
        for _ in 0..p.source_iterations {
            let j = &self.kin.j;
            let predicted: Vec<Vec2<T>> = (0..grid.len())
                .into_par_iter()
                .map(|s| update_displacement(self.mech.u[s], j_t[s], j[s], p.rho0, dt))
                .collect();
            let next = source_from_displacement(&predicted, p.source_closure, p.body_force, p.rho0, &sc.material, grid)?;
            self.kin.j.par_iter_mut().enumerate().for_each(|(s, j)| {
                if grid.is_solid(s) {
                    j[0] += half_dt * (next[s][0] - used[s][0]);
                    j[1] += half_dt * (next[s][1] - used[s][1]);
                }
            });
            used = next;
        }
        self.kin.source = used;

        let (rho0, j_next) = (p.rho0, &self.kin.j);
        self.mech
            .u
            .par_iter_mut()
            .enumerate()
            .for_each(|(s, u)| *u = update_displacement(*u, j_t[s], j_next[s], rho0, dt));
        self.external_work += self.boundary_power(&j_t, t_load) * dt;
        self.mech.j_prev = j_t;
        self.update_stresses()?;

        self.step += 1;
        self.kin.t = T::lit(self.step as f64) * dt;
        self.check_finite()
    }

    /// `Σ T*·v ΔX` over Neumann faces, with `v` the mean of the site
    /// velocities at both ends of the step.
    fn boundary_power(&self, j_t: &[Vec2<T>], t_load: T) -> T {
        let sc = &self.scenario;
        let (rho0, dx) = (sc.params.rho0, sc.grid.dx());
        let terms: Vec<T> = sc
            .grid
            .boundary_links()
            .par_iter()
            .map(|l| {
                if l.kind != BoundaryKind::Neumann || l.dir > 4 {
                    return T::zero();
                }
                let tr = sc.boundaries.traction(l.edge, t_load);
                let (a, b) = (j_t[l.site], self.kin.j[l.site]);
                (tr[0] * (a[0] + b[0]) + tr[1] * (a[1] + b[1])) / (T::lit(2.0) * rho0) * dx
            })
            .collect();
        terms.into_iter().sum()
    }

    fn check_finite(&self) -> Result<()> {
        let step = self.step;
        let grid = &self.scenario.grid;
        let bad = |field: &'static str, site: usize| Error::NonFinite { field, step, site };
        for s in grid.solid_sites() {
            if self.kin.f[s].iter().any(|v| !v.is_finite()) {
                return Err(bad("f", s));
            }
            let u = self.mech.u[s];
            if !(u[0].is_finite() && u[1].is_finite()) {
                return Err(bad("u", s));
            }
            let j = self.kin.j[s];
            if !(j[0].is_finite() && j[1].is_finite()) {
                return Err(bad("j", s));
            }
        }
        Ok(())
    }

    /// Symmetrised Cauchy stress per site; zero on void sites.
    pub fn cauchy_field(&self) -> Result<Vec<Sym2<T>>> {
        let grid = &self.scenario.grid;
        (0..grid.len())
            .into_par_iter()
            .map(|s| {
                if grid.is_solid(s) {
                    cauchy_stress(&self.mech.h[s], &self.mech.p[s])
                        .map(|m| Sym2::from_mat(&m))
                        .map_err(|e| e.at_site(s))
                } else {
                    Ok(Sym2::zero())
                }
            })
            .collect()
    }

    /// Strain energy density per site; zero on void sites.
    pub fn strain_energy_field(&self) -> Result<Vec<T>> {
        let grid = &self.scenario.grid;
        let material = &self.scenario.material;
        (0..grid.len())
            .into_par_iter()
            .map(|s| {
                if grid.is_solid(s) {
                    material.energy(&self.mech.h[s]).map_err(|e| e.at_site(s))
                } else {
                    Ok(T::zero())
                }
            })
            .collect()
    }

    pub fn energy(&self) -> Result<EnergySample<T>> {
        let grid = &self.scenario.grid;
        let area = grid.dx() * grid.dx();
        let rho0 = self.scenario.params.rho0;
        let w = self.strain_energy_field()?;
        let mut kinetic = T::zero();
        let mut strain = T::zero();
        for s in grid.solid_sites() {
            let j = self.kin.j[s];
            kinetic += (j[0] * j[0] + j[1] * j[1]) / (T::lit(2.0) * rho0) * area;
            strain += w[s] * area;
        }
        Ok(EnergySample {
            t: self.kin.t,
            external_work: self.external_work,
            kinetic,
            strain,
        })
    }

    pub fn probe_samples(&self) -> Result<Vec<ProbeSample<T>>> {
        self.scenario
            .probes
            .iter()
            .map(|pr| {
                let s = pr.site;
                let sigma = cauchy_stress(&self.mech.h[s], &self.mech.p[s]).map_err(|e| e.at_site(s))?;
                Ok(ProbeSample {
                    u: self.mech.u[s],
                    cauchy: Sym2::from_mat(&sigma),
                })
            })
            .collect()
    }

    /// Total number of populations, for sanity checks.
    pub fn population_count(&self) -> usize {
        self.scenario.grid.solid_count() * Q
    }
}

/// Receives field frames and the finished run.
pub trait Sink<T: Real> {
    fn frame(&mut self, _sim: &Simulation<T>) -> Result<()> {
        Ok(())
    }

    fn finish(&mut self, _sim: &Simulation<T>, _output: &RunOutput<T>) -> Result<()> {
        Ok(())
    }

    /// Called instead of `finish` when a step fails, with the records so far.
    fn abort(&mut self, _sim: &Simulation<T>, _partial: &RunOutput<T>) -> Result<()> {
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput<T> {
    pub probes: ProbeSeries<T>,
    /// One sample per step.
    pub energy: Vec<EnergySample<T>>,
}

/// Steps until `t_max`, recording probes and energies after every step.
pub fn run<T: Real>(sim: &mut Simulation<T>, sinks: &mut [&mut dyn Sink<T>]) -> Result<RunOutput<T>> {
    let names = sim.scenario().probes.iter().map(|p| p.name.clone()).collect();
    let mut out = RunOutput {
        probes: ProbeSeries::new(names),
        energy: Vec::new(),
    };
    let steps = sim.scenario().steps();
    let dump_every = sim.scenario().dump_every;
    if dump_every.is_some() {
        for s in sinks.iter_mut() {
            s.frame(sim)?;
        }
    }
    for k in 1..=steps {
        let record = sim.step().and_then(|_| Ok((sim.probe_samples()?, sim.energy()?)));
        let (probes, energy) = match record {
            Ok(r) => r,
            Err(e) => {
                for s in sinks.iter_mut() {
                    s.abort(sim, &out)?;
                }
                return Err(e);
            }
        };
        out.probes.times.push(sim.time());
        out.probes.samples.push(probes);
        out.energy.push(energy);
        if let Some(n) = dump_every {
            if k % n == 0 || k == steps {
                for s in sinks.iter_mut() {
                    s.frame(sim)?;
                }
            }
        }
    }
    for s in sinks.iter_mut() {
        s.finish(sim, &out)?;
    }
    Ok(out)
}

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool
/// when `None`. Results do not depend on the thread count.
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidParameter {
                    name: "threads",
                    reason: e.to_string(),
                })?;
            Ok(pool.install(f))
        }
    }
}

//! Independent reference computations used to validate runs.

use crate::boundary::BoundarySpec;
use crate::error::{Error, Result};
use crate::lattice::Grid;
use crate::material::{first_pk, neo_hooke_energy, NeoHooke};
use crate::scenario::{EnergySample, Scenario, Simulation};
use crate::tensor::Mat2;
use crate::Real;

/// Homogeneous plane-strain state under uniaxial nominal traction `T*` along `x2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StaticUniaxialSolution<T> {
    /// Principal stretches `(λ1, λ2)`.
    pub stretch: [T; 2],
    /// Max-norm of `(P11, P22 − T*)` at the returned stretches.
    pub residual: T,
    pub iterations: usize,
}

impl<T: Real> StaticUniaxialSolution<T> {
    /// Displacement gradient `diag(λ1 − 1, λ2 − 1)`.
    pub fn displacement_gradient(&self) -> Mat2<T> {
        [
            [self.stretch[0] - T::one(), T::zero()],
            [T::zero(), self.stretch[1] - T::one()],
        ]
    }

    /// `u2` of a material point at height `x2`, the body centred on the origin.
    pub fn displacement_at(&self, x2: T) -> T {
        (self.stretch[1] - T::one()) * x2
    }
}

const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 100;

fn uniaxial_residual<T: Real>(l: [T; 2], traction: T, lambda: T, mu: T) -> Result<[T; 2]> {
    let h = [[l[0] - T::one(), T::zero()], [T::zero(), l[1] - T::one()]];
    let p = first_pk(&h, lambda, mu)?;
    Ok([p[0][0], p[1][1] - traction])
}

fn max_abs<T: Real>(r: [T; 2]) -> T {
    r[0].abs().max(r[1].abs())
}

/// `∂(P11, P22)/∂(λ1, λ2)` for the neo-Hooke law.
fn analytic_jacobian<T: Real>(l: [T; 2], lambda: T, mu: T) -> [[T; 2]; 2] {
    let j = l[0] * l[1];
    let c = T::lit(0.5) * lambda * (j * j - T::one()) - mu;
    let off = lambda * j;
    [
        [mu + lambda * l[1] * l[1] - c / (l[0] * l[0]), off],
        [off, mu + lambda * l[0] * l[0] - c / (l[1] * l[1])],
    ]
}

fn fd_jacobian<T: Real>(l: [T; 2], traction: T, lambda: T, mu: T) -> Result<[[T; 2]; 2]> {
    let h = T::lit(1e-7);
    let mut jac = [[T::zero(); 2]; 2];
    for b in 0..2 {
        let (mut lp, mut lm) = (l, l);
        lp[b] += h;
        lm[b] -= h;
        let (rp, rm) = (
            uniaxial_residual(lp, traction, lambda, mu)?,
            uniaxial_residual(lm, traction, lambda, mu)?,
        );
        for a in 0..2 {
            jac[a][b] = (rp[a] - rm[a]) / (h + h);
        }
    }
    Ok(jac)
}

fn solve2<T: Real>(m: [[T; 2]; 2], r: [T; 2]) -> Option<[T; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det.abs() <= T::epsilon() || !det.is_finite() {
        return None;
    }
    Some([
        (m[1][1] * r[0] - m[0][1] * r[1]) / det,
        (m[0][0] * r[1] - m[1][0] * r[0]) / det,
    ])
}

/// Newton iteration from `(1, 1)` on `P11 = 0`, `P22 = T*`. Steps are halved
/// until the trial state has `J > 0`.
pub fn static_uniaxial<T: Real>(traction: T, lambda: T, mu: T) -> Result<StaticUniaxialSolution<T>> {
    if !traction.is_finite() || !(mu > T::zero()) || !lambda.is_finite() {
        return Err(Error::InvalidParameter {
            name: "static_uniaxial",
            reason: format!("needs finite T* and λ, and μ > 0; got T* = {traction}, λ = {lambda}, μ = {mu}"),
        });
    }
    let tol = T::lit(NEWTON_TOL);
    let mut l = [T::one(); 2];
    let mut r = uniaxial_residual(l, traction, lambda, mu)?;
    for it in 0..NEWTON_MAX_ITER {
        if max_abs(r) <= tol {
            return Ok(StaticUniaxialSolution {
                stretch: l,
                residual: max_abs(r),
                iterations: it,
            });
        }
        let dl = match solve2(analytic_jacobian(l, lambda, mu), r) {
            Some(d) => d,
            None => solve2(fd_jacobian(l, traction, lambda, mu)?, r).ok_or_else(|| Error::Oracle {
                what: "singular Jacobian in uniaxial Newton solve".into(),
                residual: max_abs(r).to_f64_lossy(),
            })?,
        };
        let mut step = T::one();
        loop {
            let trial = [l[0] - step * dl[0], l[1] - step * dl[1]];
            if trial[0] > T::zero() && trial[1] > T::zero() {
                l = trial;
                break;
            }
            step = step * T::lit(0.5);
            if step < T::lit(1e-12) {
                return Err(Error::Oracle {
                    what: "line search could not keep J > 0".into(),
                    residual: max_abs(r).to_f64_lossy(),
                });
            }
        }
        r = uniaxial_residual(l, traction, lambda, mu)?;
    }
    if max_abs(r) <= tol {
        return Ok(StaticUniaxialSolution {
            stretch: l,
            residual: max_abs(r),
            iterations: NEWTON_MAX_ITER,
        });
    }
    Err(Error::Oracle {
        what: format!("uniaxial Newton solve did not converge in {NEWTON_MAX_ITER} iterations"),
        residual: max_abs(r).to_f64_lossy(),
    })
}

/// Largest `|P_ab − (W(H + h e_ab) − W(H − h e_ab)) / 2h|`. If a perturbed
/// state inverts, `h` is reduced tenfold once before giving up.
pub fn fd_energy_gradient_check<T: Real>(h: &Mat2<T>, lambda: T, mu: T, step: T) -> Result<T> {
    let p = first_pk(h, lambda, mu)?;
    let attempt = |step: T| -> Result<T> {
        let mut worst = T::zero();
        for a in 0..2 {
            for b in 0..2 {
                let (mut hp, mut hm) = (*h, *h);
                hp[a][b] += step;
                hm[a][b] -= step;
                let fd = (neo_hooke_energy(&hp, lambda, mu)? - neo_hooke_energy(&hm, lambda, mu)?) / (step + step);
                worst = worst.max((p[a][b] - fd).abs());
            }
        }
        Ok(worst)
    };
    match attempt(step) {
        Err(Error::InvertedElement { .. }) => attempt(step * T::lit(0.1)),
        other => other,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WaveKind {
    /// Longitudinal.
    P,
    /// Transverse.
    S,
}

impl WaveKind {
    pub fn name(self) -> &'static str {
        match self {
            WaveKind::P => "p",
            WaveKind::S => "s",
        }
    }

    /// Displacement component that carries the wave on a line along `x1`.
    pub fn component(self) -> usize {
        match self {
            WaveKind::P => 0,
            WaveKind::S => 1,
        }
    }
}

/// `c_p = √((λ + 2μ)/ρ0)`, `c_s = √(μ/ρ0)`.
pub fn wave_speed<T: Real>(kind: WaveKind, lambda: T, mu: T, rho0: T) -> T {
    match kind {
        WaveKind::P => ((lambda + mu + mu) / rho0).sqrt(),
        WaveKind::S => (mu / rho0).sqrt(),
    }
}

/// d'Alembert solution for an initial displacement `profile` released from rest.
pub fn linear_wave_reference<T: Real>(
    kind: WaveKind,
    profile: impl Fn(T) -> T,
    x: T,
    t: T,
    lambda: T,
    mu: T,
    rho0: T,
) -> T {
    let c = wave_speed(kind, lambda, mu, rho0);
    T::lit(0.5) * (profile(x - c * t) + profile(x + c * t))
}

/// Outcome of a small-amplitude pulse run compared against d'Alembert.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaveCheck<T> {
    pub kind: WaveKind,
    pub reference_arrival: T,
    pub measured_arrival: T,
    pub relative_error: T,
    pub measured_speed: T,
}

/// Settings for [`wave_cross_validation`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseSetup<T> {
    pub sites: usize,
    pub length: T,
    pub amplitude: T,
    /// Gaussian width in lattice spacings.
    pub width: T,
    /// Source-to-receiver distance as a fraction of `length`.
    pub offset: T,
    pub lambda: T,
    pub mu: T,
    pub rho0: T,
    pub tau_ratio: T,
}

impl<T: Real> Default for PulseSetup<T> {
    fn default() -> Self {
        Self {
            sites: 200,
            length: T::one(),
            amplitude: T::lit(1e-6),
            width: T::lit(6.0),
            offset: T::lit(0.25),
            lambda: T::one(),
            mu: T::one(),
            rho0: T::one(),
            tau_ratio: T::lit(0.55),
        }
    }
}

/// Releases a Gaussian pulse on a periodic line and times the peak of the
/// right-moving half at a receiver, with parabolic sub-step interpolation.
pub fn wave_cross_validation<T: Real>(kind: WaveKind, setup: &PulseSetup<T>) -> Result<WaveCheck<T>> {
    let n = setup.sites;
    let dx = setup.length / T::lit(n as f64);
    let grid = Grid::periodic(n, 1, dx)?;
    let scenario = Scenario::on_grid(
        grid,
        NeoHooke::new(setup.lambda, setup.mu),
        setup.rho0,
        setup.tau_ratio,
        BoundarySpec::default(),
        [T::zero(); 2],
        setup.length,
    )?;
    let mut sim = Simulation::new(scenario)?;
    let grid = sim.scenario().grid.clone();
    let comp = kind.component();
    let source = grid.index(n / 4, 0);
    let x0 = grid.position(source)[0];
    let receiver = grid.index(n / 4 + (setup.offset * T::lit(n as f64)).round().to_usize().unwrap_or(0), 0);
    let distance = grid.position(receiver)[0] - x0;
    let sigma = setup.width * dx;
    let pulse = |x: T| setup.amplitude * (-((x - x0) * (x - x0)) / (T::lit(2.0) * sigma * sigma)).exp();
    let u = (0..grid.len())
        .map(|s| {
            let mut v = [T::zero(); 2];
            v[comp] = pulse(grid.position(s)[0]);
            v
        })
        .collect();
    sim.set_initial_state(u, vec![[T::zero(); 2]; grid.len()])?;

    let c = wave_speed(kind, setup.lambda, setup.mu, setup.rho0);
    let reference_arrival = distance / c;
    let dt = sim.scenario().dt();
    // stop well before the left-moving half wraps around to the receiver
    let horizon = reference_arrival * T::lit(1.6);
    let mut history = vec![sim.mechanical().u[receiver][comp]];
    while sim.time() < horizon {
        sim.step()?;
        history.push(sim.mechanical().u[receiver][comp]);
    }
    let (k, _) = history
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
        .ok_or_else(|| Error::Oracle {
            what: "empty receiver history".into(),
            residual: f64::NAN,
        })?;
    if k == 0 || k + 1 >= history.len() {
        return Err(Error::Oracle {
            what: "pulse peak not bracketed at the receiver".into(),
            residual: f64::NAN,
        });
    }
    let (ym, y0, yp) = (history[k - 1], history[k], history[k + 1]);
    let curvature = ym - y0 - y0 + yp;
    let shift = if curvature < T::zero() {
        T::lit(0.5) * (ym - yp) / curvature
    } else {
        T::zero()
    };
    let measured_arrival = (T::lit(k as f64) + shift) * dt;
    Ok(WaveCheck {
        kind,
        reference_arrival,
        measured_arrival,
        relative_error: ((measured_arrival - reference_arrival) / reference_arrival).abs(),
        measured_speed: distance / measured_arrival,
    })
}

/// Energy balance over a window of a run history.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyAudit<T> {
    pub samples: usize,
    pub max_external_work: T,
    /// Largest `|W_ext − E_kin − E_strain|`.
    pub max_imbalance: T,
    /// `max_imbalance / max_external_work`, zero when no work was done.
    pub relative_imbalance: T,
    pub min_kinetic: T,
    pub min_strain: T,
}

/// Audits samples with `t ≤ until` (all samples when `None`).
pub fn energy_audit<T: Real>(history: &[EnergySample<T>], until: Option<T>) -> EnergyAudit<T> {
    let mut audit = EnergyAudit {
        samples: 0,
        max_external_work: T::zero(),
        max_imbalance: T::zero(),
        relative_imbalance: T::zero(),
        min_kinetic: T::zero(),
        min_strain: T::zero(),
    };
    for (i, e) in history.iter().filter(|e| until.is_none_or(|u| e.t <= u)).enumerate() {
        audit.samples += 1;
        audit.max_external_work = audit.max_external_work.max(e.external_work.abs());
        audit.max_imbalance = audit.max_imbalance.max(e.imbalance().abs());
        if i == 0 {
            audit.min_kinetic = e.kinetic;
            audit.min_strain = e.strain;
        } else {
            audit.min_kinetic = audit.min_kinetic.min(e.kinetic);
            audit.min_strain = audit.min_strain.min(e.strain);
        }
    }
    if audit.max_external_work > T::zero() {
        audit.relative_imbalance = audit.max_imbalance / audit.max_external_work;
    }
    audit
}

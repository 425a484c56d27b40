//! Hyperelastic constitutive evaluation in plane strain.
//!
//! All functions take the displacement gradient `H = ∇u` and work with the
//! deformation gradient `F = H + I`.

use crate::error::{Error, Result};
use crate::tensor::{self, Mat2, Sym2};
use crate::Real;

/// Stress and energy from the displacement gradient. Any law implementing
/// this can drive the solver; the linear part carried by the lattice is
/// always [`poisson_stress`] with the law's shear modulus.
pub trait Hyperelastic<T: Real>: Send + Sync {
    fn energy(&self, h: &Mat2<T>) -> Result<T>;

    /// First Piola-Kirchhoff stress `P = ∂W/∂F`.
    fn first_pk(&self, h: &Mat2<T>) -> Result<Mat2<T>>;

    fn shear_modulus(&self) -> T;
}

/// Compressible neo-Hooke solid,
/// `W = μ/2 (I_C − 2) + λ/4 (J² − 1) − (λ/2 + μ) log J`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeoHooke<T> {
    pub lambda: T,
    pub mu: T,
}

impl<T: Real> NeoHooke<T> {
    pub fn new(lambda: T, mu: T) -> Self {
        Self { lambda, mu }
    }
}

pub fn deformation_gradient<T: Real>(h: &Mat2<T>) -> Mat2<T> {
    tensor::add(h, &tensor::identity())
}

fn jacobian<T: Real>(f: &Mat2<T>) -> Result<T> {
    let j = tensor::det(f);
    if j > T::zero() {
        Ok(j)
    } else {
        Err(Error::InvertedElement {
            site: None,
            jacobian: j.to_f64_lossy(),
        })
    }
}

impl<T: Real> Hyperelastic<T> for NeoHooke<T> {
    fn energy(&self, h: &Mat2<T>) -> Result<T> {
        neo_hooke_energy(h, self.lambda, self.mu)
    }

    fn first_pk(&self, h: &Mat2<T>) -> Result<Mat2<T>> {
        first_pk(h, self.lambda, self.mu)
    }

    fn shear_modulus(&self) -> T {
        self.mu
    }
}

pub fn neo_hooke_energy<T: Real>(h: &Mat2<T>, lambda: T, mu: T) -> Result<T> {
    let f = deformation_gradient(h);
    let j = jacobian(&f)?;
    let ic = f[0][0] * f[0][0] + f[0][1] * f[0][1] + f[1][0] * f[1][0] + f[1][1] * f[1][1];
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    Ok(half * mu * (ic - two) + T::lit(0.25) * lambda * (j * j - T::one())
        - (half * lambda + mu) * j.ln())
}

/// `P = μF + (λ/2 (J² − 1) − μ) F⁻ᵀ`.
pub fn first_pk<T: Real>(h: &Mat2<T>, lambda: T, mu: T) -> Result<Mat2<T>> {
    let f = deformation_gradient(h);
    let j = jacobian(&f)?;
    let coef = T::lit(0.5) * lambda * (j * j - T::one()) - mu;
    Ok(tensor::add(
        &tensor::scale(&f, mu),
        &tensor::scale(&tensor::inverse_transpose(&f), coef),
    ))
}

/// `P̄ = −μ (H + Hᵀ + tr(H) I)`.
pub fn poisson_stress<T: Real>(h: &Mat2<T>, mu: T) -> Sym2<T> {
    let tr = tensor::trace(h);
    Sym2::new(
        -mu * (h[0][0] + h[0][0] + tr),
        -mu * (h[0][1] + h[1][0]),
        -mu * (h[1][1] + h[1][1] + tr),
    )
}

/// `σ = J⁻¹ P Fᵀ`. Returned unsymmetrised so callers can audit symmetry.
pub fn cauchy_stress<T: Real>(h: &Mat2<T>, p: &Mat2<T>) -> Result<Mat2<T>> {
    let f = deformation_gradient(h);
    let j = jacobian(&f)?;
    Ok(tensor::scale(&tensor::matmul(p, &tensor::transpose(&f)), T::one() / j))
}

/// Everything postprocessing needs at one site.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StressState<T> {
    pub first_pk: Mat2<T>,
    pub poisson: Sym2<T>,
    pub cauchy: Sym2<T>,
    pub energy: T,
}

impl<T: Real> StressState<T> {
    pub fn evaluate<M: Hyperelastic<T> + ?Sized>(material: &M, h: &Mat2<T>) -> Result<Self> {
        let p = material.first_pk(h)?;
        Ok(Self {
            first_pk: p,
            poisson: poisson_stress(h, material.shear_modulus()),
            cauchy: Sym2::from_mat(&cauchy_stress(h, &p)?),
            energy: material.energy(h)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Central differences of the energy, independent of `first_pk`.
    fn fd_stress(h: &Mat2<f64>, lambda: f64, mu: f64, step: f64) -> Mat2<f64> {
        let mut out = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                let mut hp = *h;
                let mut hm = *h;
                hp[a][b] += step;
                hm[a][b] -= step;
                out[a][b] = (neo_hooke_energy(&hp, lambda, mu).unwrap()
                    - neo_hooke_energy(&hm, lambda, mu).unwrap())
                    / (2.0 * step);
            }
        }
        out
    }

    #[test]
    fn reference_state_is_stress_free() {
        let z = [[0.0; 2]; 2];
        assert_eq!(neo_hooke_energy(&z, 1.0, 1.0).unwrap(), 0.0);
        let p = first_pk(&z, 1.0, 1.0).unwrap();
        assert!(tensor::norm(&p) < 1e-15);
        assert_eq!(poisson_stress(&z, 1.0), Sym2::zero());
        assert_eq!(cauchy_stress(&z, &p).unwrap(), p);
    }

    #[test]
    fn uniaxial_stretch_by_two() {
        let h = [[1.0, 0.0], [0.0, 0.0]];
        let w = neo_hooke_energy(&h, 1.0, 1.0).unwrap();
        assert!((w - (2.25 - 1.5 * 2f64.ln())).abs() < 1e-14);
        assert!((w - 1.210279).abs() < 1e-6);
        let p = first_pk(&h, 1.0, 1.0).unwrap();
        let expect = [[2.25, 0.0], [0.0, 1.5]];
        let fd = fd_stress(&h, 1.0, 1.0, 1e-6);
        for a in 0..2 {
            for b in 0..2 {
                assert!((p[a][b] - expect[a][b]).abs() < 1e-14);
                assert!((fd[a][b] - expect[a][b]).abs() < 1e-6);
            }
        }
        let s = cauchy_stress(&h, &p).unwrap();
        assert!((s[0][0] - 2.25).abs() < 1e-14 && (s[1][1] - 0.75).abs() < 1e-14);
        assert_eq!(s[0][1], 0.0);
    }

    #[test]
    fn inverted_element_is_rejected() {
        // det(F) = -0.5
        let h = [[-1.5, 0.0], [0.0, 0.0]];
        assert!(matches!(neo_hooke_energy(&h, 1.0, 1.0), Err(Error::InvertedElement { .. })));
        assert!(first_pk(&h, 1.0, 1.0).is_err());
        assert!(cauchy_stress(&h, &h).is_err());
    }

    #[test]
    fn poisson_stress_examples() {
        let h = 0.3;
        assert_eq!(poisson_stress(&[[h, 0.0], [0.0, 0.0]], 2.0), Sym2::new(-6.0 * h, 0.0, -2.0 * h));
        let g = 0.2;
        assert_eq!(poisson_stress(&[[0.0, g], [0.0, 0.0]], 1.0), Sym2::new(0.0, -g, 0.0));
    }

    fn admissible_h() -> impl Strategy<Value = Mat2<f64>> {
        prop::array::uniform4(-0.5f64..0.5).prop_filter_map("J in [0.5, 2]", |v| {
            let h = [[v[0], v[1]], [v[2], v[3]]];
            let j = tensor::det(&deformation_gradient(&h));
            (0.5..=2.0).contains(&j).then_some(h)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn first_pk_matches_energy_gradient(h in admissible_h(), lambda in 0.5f64..3.0, mu in 0.5f64..3.0) {
            let p = first_pk(&h, lambda, mu).unwrap();
            let fd = fd_stress(&h, lambda, mu, 1e-6);
            let scale = 1.0 + tensor::norm(&p);
            for a in 0..2 {
                for b in 0..2 {
                    prop_assert!((p[a][b] - fd[a][b]).abs() <= 1e-6 * scale);
                }
            }
        }

        #[test]
        fn cauchy_is_symmetric(h in admissible_h()) {
            let p = first_pk(&h, 1.0, 1.0).unwrap();
            let s = cauchy_stress(&h, &p).unwrap();
            prop_assert!((s[0][1] - s[1][0]).abs() <= 1e-10 * tensor::norm(&s).max(1e-300));
        }

        #[test]
        fn poisson_stress_is_linear(h1 in prop::array::uniform4(-1f64..1.0), h2 in prop::array::uniform4(-1f64..1.0), a in -2f64..2.0, b in -2f64..2.0) {
            let m1 = [[h1[0], h1[1]], [h1[2], h1[3]]];
            let m2 = [[h2[0], h2[1]], [h2[2], h2[3]]];
            let lhs = poisson_stress(&tensor::add(&tensor::scale(&m1, a), &tensor::scale(&m2, b)), 1.3);
            let p1 = poisson_stress(&m1, 1.3);
            let p2 = poisson_stress(&m2, 1.3);
            for (x, y) in [(lhs.xx, a * p1.xx + b * p2.xx), (lhs.xy, a * p1.xy + b * p2.xy), (lhs.yy, a * p1.yy + b * p2.yy)] {
                prop_assert!((x - y).abs() <= 1e-13 * (1.0 + y.abs()));
            }
        }

        #[test]
        fn small_strain_linearisation(v in prop::array::uniform4(-1f64..1.0), lambda in 0.5f64..3.0, mu in 0.5f64..3.0) {
            let h = tensor::scale(&[[v[0], v[1]], [v[2], v[3]]], 1e-6);
            let p = first_pk(&h, lambda, mu).unwrap();
            let tr = tensor::trace(&h);
            let lin = [
                [mu * 2.0 * h[0][0] + lambda * tr, mu * (h[0][1] + h[1][0])],
                [mu * (h[0][1] + h[1][0]), mu * 2.0 * h[1][1] + lambda * tr],
            ];
            let hn = tensor::norm(&h);
            let err = tensor::norm(&tensor::add(&p, &tensor::scale(&lin, -1.0)));
            // round-off floor of P at |H| ~ 1e-6 is ~1e-16 · (λ + μ)
            prop_assert!(err <= 10.0 * hn * hn + 1e-15);
        }
    }
}

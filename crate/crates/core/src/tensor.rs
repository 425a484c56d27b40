//! Fixed-size 2D vectors and tensors.
//!
//! Second-order tensors are row-major `[[T; 2]; 2]`, so `m[a][b]` is the
//! `ab` component. Symmetric tensors are stored as three components.

use crate::Real;

pub type Vec2<T> = [T; 2];
pub type Mat2<T> = [[T; 2]; 2];

#[inline]
pub fn zero_mat<T: Real>() -> Mat2<T> {
    [[T::zero(); 2]; 2]
}

#[inline]
pub fn identity<T: Real>() -> Mat2<T> {
    [[T::one(), T::zero()], [T::zero(), T::one()]]
}

#[inline]
pub fn det<T: Real>(m: &Mat2<T>) -> T {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

#[inline]
pub fn trace<T: Real>(m: &Mat2<T>) -> T {
    m[0][0] + m[1][1]
}

#[inline]
pub fn transpose<T: Real>(m: &Mat2<T>) -> Mat2<T> {
    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
}

#[inline]
pub fn add<T: Real>(a: &Mat2<T>, b: &Mat2<T>) -> Mat2<T> {
    [
        [a[0][0] + b[0][0], a[0][1] + b[0][1]],
        [a[1][0] + b[1][0], a[1][1] + b[1][1]],
    ]
}

#[inline]
pub fn scale<T: Real>(m: &Mat2<T>, s: T) -> Mat2<T> {
    [[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]]
}

#[inline]
pub fn matmul<T: Real>(a: &Mat2<T>, b: &Mat2<T>) -> Mat2<T> {
    let mut c = zero_mat();
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

#[inline]
pub fn mat_vec<T: Real>(m: &Mat2<T>, v: &Vec2<T>) -> Vec2<T> {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

/// `F^{-T}`; caller guarantees a nonzero determinant.
#[inline]
pub fn inverse_transpose<T: Real>(m: &Mat2<T>) -> Mat2<T> {
    let d = det(m);
    [[m[1][1] / d, -m[1][0] / d], [-m[0][1] / d, m[0][0] / d]]
}

#[inline]
pub fn dot<T: Real>(a: &Vec2<T>, b: &Vec2<T>) -> T {
    a[0] * b[0] + a[1] * b[1]
}

/// Frobenius norm.
#[inline]
pub fn norm<T: Real>(m: &Mat2<T>) -> T {
    (m[0][0] * m[0][0] + m[0][1] * m[0][1] + m[1][0] * m[1][0] + m[1][1] * m[1][1]).sqrt()
}

/// Symmetric 2×2 tensor.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Sym2<T> {
    pub xx: T,
    pub xy: T,
    pub yy: T,
}

impl<T: Real> Sym2<T> {
    pub fn new(xx: T, xy: T, yy: T) -> Self {
        Self { xx, xy, yy }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn isotropic(s: T) -> Self {
        Self::new(s, T::zero(), s)
    }

    /// Symmetric part of a general tensor.
    pub fn from_mat(m: &Mat2<T>) -> Self {
        Self::new(m[0][0], (m[0][1] + m[1][0]) * T::lit(0.5), m[1][1])
    }

    pub fn to_mat(self) -> Mat2<T> {
        [[self.xx, self.xy], [self.xy, self.yy]]
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> T {
        match (a, b) {
            (0, 0) => self.xx,
            (1, 1) => self.yy,
            _ => self.xy,
        }
    }

    pub fn trace(&self) -> T {
        self.xx + self.yy
    }

    pub fn apply(&self, v: &Vec2<T>) -> Vec2<T> {
        [self.xx * v[0] + self.xy * v[1], self.xy * v[0] + self.yy * v[1]]
    }
}

/// Linear combination `a·self + b·other`, used by the boundary extrapolation
/// for every field type it touches.
pub trait Combine<T>: Copy {
    fn combine(&self, a: T, other: &Self, b: T) -> Self;
}

impl<T: Real> Combine<T> for T {
    fn combine(&self, a: T, other: &Self, b: T) -> Self {
        a * *self + b * *other
    }
}

impl<T: Real> Combine<T> for Vec2<T> {
    fn combine(&self, a: T, other: &Self, b: T) -> Self {
        [a * self[0] + b * other[0], a * self[1] + b * other[1]]
    }
}

impl<T: Real> Combine<T> for Mat2<T> {
    fn combine(&self, a: T, other: &Self, b: T) -> Self {
        add(&scale(self, a), &scale(other, b))
    }
}

impl<T: Real> Combine<T> for Sym2<T> {
    fn combine(&self, a: T, other: &Self, b: T) -> Self {
        Sym2::new(
            a * self.xx + b * other.xx,
            a * self.xy + b * other.xy,
            a * self.yy + b * other.yy,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_transpose_is_inverse_of_transpose() {
        let m: Mat2<f64> = [[2.0, 0.3], [-0.4, 1.5]];
        let it = inverse_transpose(&m);
        let p = matmul(&transpose(&m), &it);
        for i in 0..2 {
            for j in 0..2 {
                let e: f64 = if i == j { 1.0 } else { 0.0 };
                assert!((p[i][j] - e).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn sym_from_mat_takes_symmetric_part() {
        let s = Sym2::from_mat(&[[1.0, 2.0], [4.0, 5.0]]);
        assert_eq!(s, Sym2::new(1.0, 3.0, 5.0));
        assert_eq!(s.apply(&[1.0, 0.0]), [1.0, 3.0]);
    }
}

//! Forward-mode dual numbers for exact first derivatives of small kernels.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar operations the kinematics code needs, implemented for `f64` and
/// for [`Jet`].
pub trait Real:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn cst(v: f64) -> Self;
    fn value(&self) -> f64;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;

    fn scale(self, k: f64) -> Self {
        self * Self::cst(k)
    }
}

impl Real for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn scale(self, k: f64) -> Self {
        self * k
    }
}

/// Value plus gradient with respect to `N` seed variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<const N: usize> {
    pub v: f64,
    pub d: [f64; N],
}

impl<const N: usize> Jet<N> {
    pub fn constant(v: f64) -> Self {
        Self { v, d: [0.0; N] }
    }

    /// Independent variable number `i`.
    pub fn var(v: f64, i: usize) -> Self {
        let mut d = [0.0; N];
        d[i] = 1.0;
        Self { v, d }
    }

    fn chain(self, v: f64, dv: f64) -> Self {
        let mut d = self.d;
        d.iter_mut().for_each(|x| *x *= dv);
        Self { v, d }
    }
}

impl<const N: usize> Add for Jet<N> {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        self.v += o.v;
        self.d.iter_mut().zip(&o.d).for_each(|(a, b)| *a += b);
        self
    }
}

impl<const N: usize> Sub for Jet<N> {
    type Output = Self;
    fn sub(mut self, o: Self) -> Self {
        self.v -= o.v;
        self.d.iter_mut().zip(&o.d).for_each(|(a, b)| *a -= b);
        self
    }
}

impl<const N: usize> Mul for Jet<N> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut d = [0.0; N];
        for i in 0..N {
            d[i] = self.v * o.d[i] + o.v * self.d[i];
        }
        Self { v: self.v * o.v, d }
    }
}

impl<const N: usize> Div for Jet<N> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.v;
        let v = self.v * inv;
        let mut d = [0.0; N];
        for i in 0..N {
            d[i] = (self.d[i] - v * o.d[i]) * inv;
        }
        Self { v, d }
    }
}

impl<const N: usize> Neg for Jet<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.chain(-self.v, -1.0)
    }
}

impl<const N: usize> Real for Jet<N> {
    fn cst(v: f64) -> Self {
        Self::constant(v)
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn sqrt(self) -> Self {
        let r = self.v.sqrt();
        self.chain(r, 0.5 / r)
    }
    fn sin(self) -> Self {
        self.chain(self.v.sin(), self.v.cos())
    }
    fn cos(self) -> Self {
        self.chain(self.v.cos(), -self.v.sin())
    }
    fn scale(self, k: f64) -> Self {
        self.chain(self.v * k, k)
    }
}

pub type V3<T> = [T; 3];
pub type M3<T> = [[T; 3]; 3];

pub fn m3_identity<T: Real>() -> M3<T> {
    let (o, z) = (T::cst(1.0), T::cst(0.0));
    [[o, z, z], [z, o, z], [z, z, o]]
}

pub fn m3_mul<T: Real>(a: &M3<T>, b: &M3<T>) -> M3<T> {
    let mut out = [[T::cst(0.0); 3]; 3];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            *cell = a[r][0] * b[0][c] + a[r][1] * b[1][c] + a[r][2] * b[2][c];
        }
    }
    out
}

pub fn m3_apply<T: Real>(a: &M3<T>, v: &V3<T>) -> V3<T> {
    [0, 1, 2].map(|r| a[r][0] * v[0] + a[r][1] * v[1] + a[r][2] * v[2])
}

pub fn v3_add<T: Real>(a: &V3<T>, b: &V3<T>) -> V3<T> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn v3_sub<T: Real>(a: &V3<T>, b: &V3<T>) -> V3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Rotation matrix of an axis-angle vector (Rodrigues), with a series
/// expansion near zero so derivatives stay finite at the identity.
pub fn axis_angle_to_matrix<T: Real>(w: &V3<T>) -> M3<T> {
    let theta2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
    let (a, b) = if theta2.value() < 1e-10 {
        (T::cst(1.0) - theta2.scale(1.0 / 6.0), T::cst(0.5) - theta2.scale(1.0 / 24.0))
    } else {
        let theta = theta2.sqrt();
        (theta.sin() / theta, (T::cst(1.0) - theta.cos()) / theta2)
    };
    let z = T::cst(0.0);
    let k = [[z, -w[2], w[1]], [w[2], z, -w[0]], [-w[1], w[0], z]];
    let k2 = m3_mul(&k, &k);
    let mut r = m3_identity::<T>();
    for i in 0..3 {
        for j in 0..3 {
            r[i][j] = r[i][j] + a * k[i][j] + b * k2[i][j];
        }
    }
    r
}

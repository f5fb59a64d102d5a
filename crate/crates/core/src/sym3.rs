//! Symmetric 3×3 matrices, the pointwise value type of metric and curvature fields.

use core::ops::{Add, AddAssign, Mul, Neg, Sub};

/// Packed symmetric 3×3 matrix, components ordered `11, 12, 13, 22, 23, 33`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Sym3(pub [f64; 6]);

const PACK: [[usize; 3]; 3] = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];

/// `(i, j)` pairs in packed order.
pub const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

impl Sym3 {
    pub const ZERO: Sym3 = Sym3([0.0; 6]);
    pub const IDENTITY: Sym3 = Sym3([1.0, 0.0, 0.0, 1.0, 0.0, 1.0]);

    pub fn diag(a: f64, b: f64, c: f64) -> Sym3 {
        Sym3([a, 0.0, 0.0, b, 0.0, c])
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> f64) -> Sym3 {
        let mut s = Sym3::ZERO;
        for (slot, &(i, j)) in PAIRS.iter().enumerate() {
            s.0[slot] = f(i, j);
        }
        s
    }

    /// Symmetric part of a general 3×3 matrix.
    pub fn symmetrize(m: &[[f64; 3]; 3]) -> Sym3 {
        Sym3::from_fn(|i, j| 0.5 * (m[i][j] + m[j][i]))
    }

    /// `a ⊗ b + b ⊗ a` halved, i.e. the symmetric outer product.
    pub fn outer(a: [f64; 3], b: [f64; 3]) -> Sym3 {
        Sym3::from_fn(|i, j| 0.5 * (a[i] * b[j] + a[j] * b[i]))
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[PACK[i][j]]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.0[PACK[i][j]] = value;
    }

    pub fn to_matrix(&self) -> [[f64; 3]; 3] {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.get(i, j);
            }
        }
        m
    }

    pub fn trace(&self) -> f64 {
        self.0[0] + self.0[3] + self.0[5]
    }

    pub fn det(&self) -> f64 {
        let [a, b, c, d, e, f] = self.0;
        a * (d * f - e * e) - b * (b * f - e * c) + c * (b * e - d * c)
    }

    /// Inverse by the adjugate; `None` when the determinant vanishes.
    pub fn inverse(&self) -> Option<Sym3> {
        let [a, b, c, d, e, f] = self.0;
        let c00 = d * f - e * e;
        let c01 = c * e - b * f;
        let c02 = b * e - c * d;
        let det = a * c00 + b * c01 + c * c02;
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let inv = 1.0 / det;
        Some(Sym3([
            c00 * inv,
            c01 * inv,
            c02 * inv,
            (a * f - c * c) * inv,
            (b * c - a * e) * inv,
            (a * d - b * b) * inv,
        ]))
    }

    pub fn mul_vec(&self, v: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.get(i, 0) * v[0] + self.get(i, 1) * v[1] + self.get(i, 2) * v[2];
        }
        out
    }

    /// Quadratic form `vᵀ A v`.
    pub fn quad(&self, v: [f64; 3]) -> f64 {
        let w = self.mul_vec(v);
        v[0] * w[0] + v[1] * w[1] + v[2] * w[2]
    }

    /// Full contraction `a^{ij} b_ij` (both stored as packed symmetric matrices).
    pub fn dot(&self, other: &Sym3) -> f64 {
        let a = &self.0;
        let b = &other.0;
        a[0] * b[0] + a[3] * b[3] + a[5] * b[5] + 2.0 * (a[1] * b[1] + a[2] * b[2] + a[4] * b[4])
    }

    /// `g^{ik} g^{jl} T_ij T_kl` given the inverse metric.
    pub fn norm_sq_with(&self, g_inv: &Sym3) -> f64 {
        let gi = g_inv.to_matrix();
        let t = self.to_matrix();
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = gi[i][0] * t[0][j] + gi[i][1] * t[1][j] + gi[i][2] * t[2][j];
            }
        }
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += m[i][j] * m[j][i];
            }
        }
        s
    }

    /// Eigenvalues in ascending order (closed-form trigonometric method).
    pub fn eigenvalues(&self) -> [f64; 3] {
        let [a00, a01, a02, a11, a12, a22] = self.0;
        let p1 = a01 * a01 + a02 * a02 + a12 * a12;
        let scale = self.0.iter().fold(0.0f64, |m, x| m.max(libm::fabs(*x)));
        if p1 <= (f64::EPSILON * scale) * (f64::EPSILON * scale) {
            let mut e = [a00, a11, a22];
            sort3(&mut e);
            return e;
        }
        let q = self.trace() / 3.0;
        let p2 = (a00 - q) * (a00 - q) + (a11 - q) * (a11 - q) + (a22 - q) * (a22 - q) + 2.0 * p1;
        let p = libm::sqrt(p2 / 6.0);
        let b = Sym3([
            (a00 - q) / p,
            a01 / p,
            a02 / p,
            (a11 - q) / p,
            a12 / p,
            (a22 - q) / p,
        ]);
        let r = (b.det() / 2.0).clamp(-1.0, 1.0);
        let phi = libm::acos(r) / 3.0;
        let hi = q + 2.0 * p * libm::cos(phi);
        let lo = q + 2.0 * p * libm::cos(phi + 2.0 * core::f64::consts::PI / 3.0);
        let mid = 3.0 * q - hi - lo;
        let mut e = [lo, mid, hi];
        sort3(&mut e);
        e
    }

    /// Lower Cholesky factor; `None` unless positive definite.
    pub fn cholesky(&self) -> Option<[[f64; 3]; 3]> {
        let a = self.to_matrix();
        let mut l = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..=i {
                let mut s = a[i][j];
                for k in 0..j {
                    s -= l[i][k] * l[j][k];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return None;
                    }
                    l[i][i] = libm::sqrt(s);
                } else {
                    l[i][j] = s / l[j][j];
                }
            }
        }
        Some(l)
    }

    /// Eigenvalues `μ` of the pencil `A x = μ g x` (ascending), i.e. of `A`
    /// measured relative to the metric `g`.
    pub fn generalized_eigenvalues(&self, g: &Sym3) -> Option<[f64; 3]> {
        let l = g.cholesky()?;
        // Solve L Y = A, then M = Y L⁻ᵀ, symmetric.
        let a = self.to_matrix();
        let mut y = [[0.0; 3]; 3];
        for col in 0..3 {
            for i in 0..3 {
                let mut s = a[i][col];
                for k in 0..i {
                    s -= l[i][k] * y[k][col];
                }
                y[i][col] = s / l[i][i];
            }
        }
        let mut m = [[0.0; 3]; 3];
        for row in 0..3 {
            for j in 0..3 {
                let mut s = y[row][j];
                for k in 0..j {
                    s -= m[row][k] * l[j][k];
                }
                m[row][j] = s / l[j][j];
            }
        }
        Some(Sym3::symmetrize(&m).eigenvalues())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0f64, |m, x| m.max(libm::fabs(*x)))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

fn sort3(e: &mut [f64; 3]) {
    if e[0] > e[1] {
        e.swap(0, 1);
    }
    if e[1] > e[2] {
        e.swap(1, 2);
    }
    if e[0] > e[1] {
        e.swap(0, 1);
    }
}

impl Add for Sym3 {
    type Output = Sym3;
    fn add(mut self, rhs: Sym3) -> Sym3 {
        self += rhs;
        self
    }
}

impl AddAssign for Sym3 {
    fn add_assign(&mut self, rhs: Sym3) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
    }
}

impl Sub for Sym3 {
    type Output = Sym3;
    fn sub(mut self, rhs: Sym3) -> Sym3 {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a -= b;
        }
        self
    }
}

impl Mul<f64> for Sym3 {
    type Output = Sym3;
    fn mul(mut self, s: f64) -> Sym3 {
        for a in self.0.iter_mut() {
            *a *= s;
        }
        self
    }
}

impl Neg for Sym3 {
    type Output = Sym3;
    fn neg(self) -> Sym3 {
        self * -1.0
    }
}

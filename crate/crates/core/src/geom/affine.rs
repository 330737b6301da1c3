//! 2D affine transforms: robust estimation from point correspondences and
//! rotation extraction through the polar factor.

use nalgebra::{DMatrix, DVector, Matrix2};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point2 = [f64; 2];

/// Row-major 2×3 matrix mapping source pixel coordinates to destination ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 3]; 2]", into = "[[f64; 3]; 2]")]
pub struct Affine2 {
    m: [[f64; 3]; 2],
}

impl Affine2 {
    pub fn new(m: [[f64; 3]; 2]) -> Result<Self> {
        if m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("affine has non-finite entries".into()));
        }
        let a = Self { m };
        if a.det() == 0.0 {
            return Err(Error::SingularLinearPart);
        }
        Ok(a)
    }

    pub fn identity() -> Self {
        Self { m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]] }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Self { m: [[1.0, 0.0, tx], [0.0, 1.0, ty]] }
    }

    /// Rotation by `degrees` about `center`; positive angles turn +x toward +y.
    pub fn rotation_about(degrees: f64, center: Point2) -> Self {
        let (s, c) = degrees.to_radians().sin_cos();
        let [cx, cy] = center;
        Self { m: [[c, -s, cx - c * cx + s * cy], [s, c, cy - s * cx - c * cy]] }
    }

    pub fn matrix(&self) -> [[f64; 3]; 2] {
        self.m
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn apply(&self, p: Point2) -> Point2 {
        let m = &self.m;
        [m[0][0] * p[0] + m[0][1] * p[1] + m[0][2], m[1][0] * p[0] + m[1][1] * p[1] + m[1][2]]
    }

    pub fn inverse(&self) -> Self {
        let m = &self.m;
        let inv_det = 1.0 / self.det();
        let a = m[1][1] * inv_det;
        let b = -m[0][1] * inv_det;
        let c = -m[1][0] * inv_det;
        let d = m[0][0] * inv_det;
        Self { m: [[a, b, -(a * m[0][2] + b * m[1][2])], [c, d, -(c * m[0][2] + d * m[1][2])]] }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Affine2) -> Self {
        let (a, b) = (&self.m, &other.m);
        let mut m = [[0.0; 3]; 2];
        for r in 0..2 {
            for c in 0..3 {
                m[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c] + if c == 2 { a[r][2] } else { 0.0 };
            }
        }
        Self { m }
    }
}

impl TryFrom<[[f64; 3]; 2]> for Affine2 {
    type Error = Error;

    fn try_from(m: [[f64; 3]; 2]) -> Result<Self> {
        Self::new(m)
    }
}

impl From<Affine2> for [[f64; 3]; 2] {
    fn from(a: Affine2) -> Self {
        a.m
    }
}

/// Rotation angle of the polar factor of the linear block, in degrees within
/// (−180, 180]. With `U Σ Vᵀ` the SVD of the 2×2 block, `R = U Vᵀ` and the
/// angle is `atan2(R₂₁, R₁₁)`.
pub fn rotation_angle_from_affine(a: &Affine2) -> Result<f64> {
    let m = a.matrix();
    let lin = Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1]);
    let scale = lin.norm_squared();
    if scale == 0.0 || lin.determinant().abs() <= 1e-12 * scale {
        return Err(Error::SingularLinearPart);
    }
    let svd = lin.svd(true, true);
    let (u, vt) = (svd.u.expect("requested U"), svd.v_t.expect("requested Vᵀ"));
    let r = u * vt;
    let deg = r[(1, 0)].atan2(r[(0, 0)]).to_degrees();
    Ok(if deg <= -180.0 { deg + 360.0 } else { deg })
}

/// Settings for [`estimate_affine_ransac`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RansacParams {
    pub iterations: usize,
    pub inlier_tol: f64,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self { iterations: 500, inlier_tol: 2.0 }
    }
}

/// Robust affine fit: best 3-point hypothesis by inlier count (residual
/// strictly below `inlier_tol`), refit by least squares on its inliers.
/// Returns the final affine and its inlier count.
pub fn estimate_affine_ransac(
    src: &[Point2],
    dst: &[Point2],
    iterations: usize,
    inlier_tol: f64,
    seed: u64,
) -> Result<(Affine2, usize)> {
    if src.len() != dst.len() {
        return Err(Error::DimensionMismatch(format!("{} source vs {} destination points", src.len(), dst.len())));
    }
    if src.len() < 3 {
        return Err(Error::Underdetermined(src.len()));
    }
    let (lo, hi) = src.iter().fold(([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]), |(lo, hi), p| {
        ([lo[0].min(p[0]), lo[1].min(p[1])], [hi[0].max(p[0]), hi[1].max(p[1])])
    });
    let diag = ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2)).sqrt();
    let collinear_tol = 1e-6 * diag;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Affine2, Vec<usize>)> = None;
    for _ in 0..iterations.max(1) {
        let pick = sample(&mut rng, src.len(), 3).into_vec();
        let tri = [src[pick[0]], src[pick[1]], src[pick[2]]];
        if is_degenerate(&tri, collinear_tol) {
            continue;
        }
        let Some(model) = exact_affine(&tri, &[dst[pick[0]], dst[pick[1]], dst[pick[2]]]) else {
            continue;
        };
        let inliers = inliers_of(&model, src, dst, inlier_tol);
        if best.as_ref().is_none_or(|(_, b)| inliers.len() > b.len()) {
            best = Some((model, inliers));
        }
    }
    let (model, inliers) = best.ok_or(Error::DegenerateCorrespondences)?;
    let refit = if inliers.len() >= 3 { least_squares(src, dst, &inliers).unwrap_or(model) } else { model };
    let count = inliers_of(&refit, src, dst, inlier_tol).len();
    Ok((refit, count))
}

fn is_degenerate(tri: &[Point2; 3], tol: f64) -> bool {
    let [a, b, c] = tri;
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ac = [c[0] - a[0], c[1] - a[1]];
    let base = (ab[0] * ab[0] + ab[1] * ab[1]).sqrt();
    if base <= tol {
        return true;
    }
    let height = (ab[0] * ac[1] - ab[1] * ac[0]).abs() / base;
    height <= tol
}

fn exact_affine(src: &[Point2; 3], dst: &[Point2; 3]) -> Option<Affine2> {
    let idx = [0, 1, 2];
    least_squares(src, dst, &idx)
}

fn least_squares(src: &[Point2], dst: &[Point2], subset: &[usize]) -> Option<Affine2> {
    let n = subset.len();
    // center for conditioning
    let mean = subset.iter().fold([0.0; 2], |acc, &i| [acc[0] + src[i][0], acc[1] + src[i][1]]);
    let mean = [mean[0] / n as f64, mean[1] / n as f64];
    let design = DMatrix::from_fn(n, 3, |r, c| match c {
        0 => src[subset[r]][0] - mean[0],
        1 => src[subset[r]][1] - mean[1],
        _ => 1.0,
    });
    let svd = design.svd(true, true);
    let mut m = [[0.0; 3]; 2];
    for (row, out) in m.iter_mut().enumerate() {
        let rhs = DVector::from_fn(n, |r, _| dst[subset[r]][row]);
        let sol = svd.solve(&rhs, 1e-12).ok()?;
        *out = [sol[0], sol[1], sol[2] - sol[0] * mean[0] - sol[1] * mean[1]];
    }
    Affine2::new(m).ok().filter(|a| a.det().abs() > 1e-12)
}

fn inliers_of(model: &Affine2, src: &[Point2], dst: &[Point2], tol: f64) -> Vec<usize> {
    (0..src.len())
        .filter(|&i| {
            let p = model.apply(src[i]);
            let (dx, dy) = (p[0] - dst[i][0], p[1] - dst[i][1]);
            (dx * dx + dy * dy).sqrt() < tol
        })
        .collect()
}

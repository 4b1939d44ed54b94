//! Small 3-vector helpers, oriented surface frames and Fibonacci spheres.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub type Vec3 = [f64; 3];
pub type CVec3 = [C64; 3];

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn normalize(a: Vec3) -> Vec3 {
    scale(a, 1.0 / norm(a))
}

pub fn to_complex(a: Vec3) -> CVec3 {
    [a[0].into(), a[1].into(), a[2].into()]
}

pub fn cdot(a: CVec3, b: CVec3) -> C64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Real direction dotted into a complex vector.
pub fn rdot(a: Vec3, b: CVec3) -> C64 {
    b[0] * a[0] + b[1] * a[1] + b[2] * a[2]
}

pub fn ccross(a: CVec3, b: CVec3) -> CVec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Real vector crossed with a complex vector.
pub fn rcross(a: Vec3, b: CVec3) -> CVec3 {
    [
        b[2] * a[1] - b[1] * a[2],
        b[0] * a[2] - b[2] * a[0],
        b[1] * a[0] - b[0] * a[1],
    ]
}

pub fn cadd(a: CVec3, b: CVec3) -> CVec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn csub(a: CVec3, b: CVec3) -> CVec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn cscale(a: CVec3, s: C64) -> CVec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn cnorm(a: CVec3) -> f64 {
    (a[0].norm_sqr() + a[1].norm_sqr() + a[2].norm_sqr()).sqrt()
}

/// Oriented point: position, outward unit normal and tangents with `t1 x t2 = n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointFrame {
    pub position: Vec3,
    pub normal: Vec3,
    pub t1: Vec3,
    pub t2: Vec3,
}

const REFERENCE_AXIS: Vec3 = [0.0, 0.0, 1.0];
const FALLBACK_AXIS: Vec3 = [1.0, 0.0, 0.0];

impl PointFrame {
    /// Frame at `position` with the given outward normal. `t1` is the unit
    /// projection of the z axis onto the tangent plane, or of the x axis when
    /// the normal is (anti)parallel to z.
    pub fn from_normal(position: Vec3, normal: Vec3) -> Self {
        let n = normalize(normal);
        let reference = if dot(n, REFERENCE_AXIS).abs() > 1.0 - 1e-8 {
            FALLBACK_AXIS
        } else {
            REFERENCE_AXIS
        };
        let t1 = normalize(sub(reference, scale(n, dot(reference, n))));
        let t2 = cross(n, t1);
        Self {
            position,
            normal: n,
            t1,
            t2,
        }
    }

    pub fn tangent(&self, which: usize) -> Vec3 {
        if which == 0 {
            self.t1
        } else {
            self.t2
        }
    }

    /// Largest deviation of `{t1, t2, n}` from a right-handed orthonormal triad.
    pub fn orthonormality_defect(&self) -> f64 {
        let (t1, t2, n) = (self.t1, self.t2, self.normal);
        let checks = [
            dot(t1, t1) - 1.0,
            dot(t2, t2) - 1.0,
            dot(n, n) - 1.0,
            dot(t1, t2),
            dot(t1, n),
            dot(t2, n),
        ];
        let handed = norm(sub(cross(t1, t2), n));
        checks.iter().fold(handed, |acc, v| acc.max(v.abs()))
    }
}

/// Which role a surface plays in a scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SurfaceKind {
    /// Equivalent (reconstruction) surface.
    Equivalent,
    Measurement,
    Evaluation,
}

#[derive(Clone, Debug)]
pub struct SurfaceGeometry {
    pub frames: Vec<PointFrame>,
    pub kind: SurfaceKind,
    pub radius: f64,
    /// Quadrature weight (area, m^2) of each point.
    pub weights: Vec<f64>,
}

impl SurfaceGeometry {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Replaces the weights with a rule exact for spherical harmonics up to
    /// `degree` (for centred spheres).
    pub fn with_quadrature_degree(mut self, degree: usize) -> crate::Result<Self> {
        let dirs: Vec<Vec3> = self.frames.iter().map(|f| f.normal).collect();
        let r2 = self.radius * self.radius;
        self.weights = crate::modes::exact_sphere_weights(&dirs, degree)?
            .into_iter()
            .map(|w| w * r2)
            .collect();
        Ok(self)
    }

    /// Ratio of the largest to the smallest nearest-neighbour distance.
    pub fn spacing_spread(&self) -> f64 {
        let nn: Vec<f64> = self
            .frames
            .iter()
            .enumerate()
            .map(|(i, a)| {
                self.frames
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, b)| norm(sub(a.position, b.position)))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let max = nn.iter().cloned().fold(0.0, f64::max);
        let min = nn.iter().cloned().fold(f64::INFINITY, f64::min);
        max / min
    }
}

/// Largest degree `D` with `(D + 1)^2 <= n / 2`.
pub fn default_quadrature_degree(n: usize) -> usize {
    let mut d = 0;
    while (d + 2) * (d + 2) * 2 <= n {
        d += 1;
    }
    d
}

/// `n` points on a centred sphere of the given radius on a Fibonacci lattice,
/// with quadrature weights exact to [`default_quadrature_degree`].
///
/// Point `i` has `z = 1 - (2i + 1)/n` and azimuth `i` times the golden angle.
pub fn fibonacci_sphere(n: usize, radius: f64, kind: SurfaceKind) -> SurfaceGeometry {
    let g = fibonacci_lattice(n, radius, kind);
    if n < 2 {
        return g;
    }
    g.with_quadrature_degree(default_quadrature_degree(n))
        .expect("degree fits the point count")
}

/// [`fibonacci_sphere`] with equal weights `4 pi r^2 / n`.
pub fn fibonacci_lattice(n: usize, radius: f64, kind: SurfaceKind) -> SurfaceGeometry {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let frames = (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            let unit = [rho * phi.cos(), rho * phi.sin(), z];
            PointFrame::from_normal(scale(unit, radius), unit)
        })
        .collect();
    SurfaceGeometry {
        frames,
        kind,
        radius,
        weights: vec![4.0 * std::f64::consts::PI * radius * radius / n.max(1) as f64; n],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_points_on_radius_with_radial_normals() {
        let g = fibonacci_sphere(137, 0.3, SurfaceKind::Measurement);
        for f in &g.frames {
            assert!((norm(f.position) - 0.3).abs() < 1e-12);
            assert!(norm(sub(f.normal, scale(f.position, 1.0 / 0.3))) < 1e-12);
            assert!(f.orthonormality_defect() < 1e-12);
        }
    }

    #[test]
    fn pole_frames_use_fallback_axis() {
        let f = PointFrame::from_normal([0.0, 0.0, 1.0], [0.0, 0.0, 1.0]);
        assert!(f.orthonormality_defect() < 1e-15);
        assert_eq!(f.t1, [1.0, 0.0, 0.0]);
        let f = PointFrame::from_normal([0.0, 0.0, -2.0], [0.0, 0.0, -1.0]);
        assert!(f.orthonormality_defect() < 1e-15);
    }

    #[test]
    fn spacing_is_near_uniform() {
        let g = fibonacci_sphere(400, 1.0, SurfaceKind::Equivalent);
        let spread = g.spacing_spread();
        assert!(spread < 2.5, "{spread}");
    }

    #[test]
    fn weights_sum_to_area() {
        let g = fibonacci_sphere(50, 2.0, SurfaceKind::Evaluation);
        assert!((g.total_weight() - 16.0 * std::f64::consts::PI).abs() < 1e-12);
        let e = fibonacci_lattice(50, 2.0, SurfaceKind::Evaluation);
        assert!((e.total_weight() - 16.0 * std::f64::consts::PI).abs() < 1e-12);
    }
}

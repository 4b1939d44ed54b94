//! Fields radiated by discrete equivalent currents, evaluated off the
//! collocation grid.
//!
//! The node samples of a current vector are read as a band-limited tangential
//! field (least-squares fit of vector spherical harmonics up to a fixed
//! degree), which is then integrated against the free-space kernels with a
//! Gauss-Legendre x trapezoid product rule fine enough for the closest
//! observation point.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::em::{rotated_tangential_pair, PairKernel};
use crate::error::{Error, Result};
use crate::geometry::{cadd, cscale, csub, norm, CVec3, SurfaceGeometry, Vec3};
use crate::modes::{angles_of, gauss_legendre, tangent_basis, vsh_local, vsh_tangential, ModalIndex};
use crate::numerics::{svd, ComplexMatrix};
use crate::pinv::mpp_from_svd;

/// Target size of the kernel content left unresolved by the product rule.
pub const QUADRATURE_TOL: f64 = 1e-9;

const MAX_QUADRATURE_DEGREE: usize = 1200;
const FIT_TOL: f64 = 1e-12;

/// Least-squares vector-spherical-harmonic fit of tangential node samples.
#[derive(Clone, Debug)]
pub struct CurrentInterpolant {
    radius: f64,
    nodes: usize,
    modes: Vec<ModalIndex>,
    fit: ComplexMatrix,
    condition: f64,
}

impl CurrentInterpolant {
    /// Largest degree whose `2 L (L + 2)` harmonics use at most 65% of the
    /// `2 N` real tangential samples of one block.
    pub fn default_degree(nodes: usize) -> usize {
        let budget = 1.3 * nodes as f64;
        let mut l = 1;
        while (2 * (l + 1) * (l + 3)) as f64 <= budget {
            l += 1;
        }
        l
    }

    pub fn new(gamma: &SurfaceGeometry, degree: usize) -> Result<Self> {
        let modes = ModalIndex::all(degree);
        if degree == 0 || modes.len() > 2 * gamma.len() {
            return Err(Error::InvalidArgument(format!(
                "interpolation degree {degree} needs {} harmonics but only {} samples exist",
                modes.len(),
                2 * gamma.len()
            )));
        }
        let angles: Vec<(f64, f64)> = gamma.frames.iter().map(|f| angles_of(f.normal)).collect();
        let design = ComplexMatrix::from_fn(2 * gamma.len(), modes.len(), |row, col| {
            let frame = &gamma.frames[row / 2];
            let (theta, phi) = angles[row / 2];
            let v = vsh_tangential(modes[col], theta, phi);
            let t = frame.tangent(row % 2);
            v[0] * t[0] + v[1] * t[1] + v[2] * t[2]
        });
        let dec = svd(&design)?;
        let condition = dec.s[0] / dec.s[dec.s.len() - 1];
        Ok(Self {
            radius: gamma.radius,
            nodes: gamma.len(),
            fit: mpp_from_svd(&dec, FIT_TOL),
            modes,
            condition,
        })
    }

    pub fn for_surface(gamma: &SurfaceGeometry) -> Result<Self> {
        Self::new(gamma, Self::default_degree(gamma.len()))
    }

    pub fn degree(&self) -> usize {
        self.modes.last().map_or(0, |m| m.n)
    }

    pub fn modes(&self) -> &[ModalIndex] {
        &self.modes
    }

    /// `sigma_max / sigma_min` of the sampled harmonics.
    pub fn condition_number(&self) -> f64 {
        self.condition
    }

    /// Harmonic coefficients of one `(t1, t2)`-per-node block.
    pub fn coefficients(&self, block: &[C64]) -> Result<Vec<C64>> {
        if block.len() != 2 * self.nodes {
            return Err(Error::DimensionMismatch {
                op: "CurrentInterpolant::coefficients",
                left_rows: self.fit.rows(),
                left_cols: self.fit.cols(),
                right_rows: block.len(),
                right_cols: 1,
            });
        }
        self.fit.mul_vec(block)
    }
}

/// Product rule sized so that the kernel content of degree above `N` is below
/// [`QUADRATURE_TOL`] for observation points at `closest / radius`.
fn quadrature_shape(radius: f64, closest: f64, degree: usize) -> (usize, usize) {
    let ratio = radius / closest;
    let mut n = 1usize;
    while n < MAX_QUADRATURE_DEGREE && (n * n) as f64 * ratio.powi(n as i32) > QUADRATURE_TOL {
        n += 1;
    }
    let total = n + degree;
    (total / 2 + 1, total + 1)
}

struct Grid {
    thetas: Vec<f64>,
    theta_weights: Vec<f64>,
    phis: Vec<f64>,
}

impl Grid {
    fn new(n_theta: usize, n_phi: usize) -> Self {
        let (x, w) = gauss_legendre(n_theta);
        Self {
            thetas: x.iter().map(|c| c.acos()).collect(),
            theta_weights: w,
            phis: (0..n_phi).map(|j| 2.0 * PI * j as f64 / n_phi as f64).collect(),
        }
    }

    fn len(&self) -> usize {
        self.thetas.len() * self.phis.len()
    }
}

/// Tangential `n x E` pairs radiated by each current vector in `currents`
/// (all on the sphere `interp` was built for), sampled on `surface`.
pub fn radiate(
    interp: &CurrentInterpolant,
    currents: &[&[C64]],
    surface: &SurfaceGeometry,
    k: f64,
) -> Result<Vec<Vec<C64>>> {
    let closest = surface
        .frames
        .iter()
        .map(|f| norm(f.position))
        .fold(f64::INFINITY, f64::min);
    if !(closest > interp.radius) {
        return Err(Error::InvalidArgument(format!(
            "observation points must lie outside the current sphere (closest radius {closest}, \
             sphere radius {})",
            interp.radius
        )));
    }
    let (n_theta, n_phi) = quadrature_shape(interp.radius, closest, interp.degree());
    let grid = Grid::new(n_theta, n_phi);
    let samples = currents
        .iter()
        .map(|x| sample_on_grid(interp, x, &grid))
        .collect::<Result<Vec<_>>>()?;

    let a = interp.radius;
    let dphi = 2.0 * PI / n_phi as f64;
    let mut points = Vec::with_capacity(grid.len());
    for (i, &theta) in grid.thetas.iter().enumerate() {
        let w = a * a * grid.theta_weights[i] * dphi;
        for &phi in &grid.phis {
            let (st, ct) = theta.sin_cos();
            let (sp, cp) = phi.sin_cos();
            let p: Vec3 = [a * st * cp, a * st * sp, a * ct];
            points.push((p, w));
        }
    }

    let zero = [C64::new(0.0, 0.0); 3];
    let mut out = vec![Vec::with_capacity(2 * surface.len()); currents.len()];
    let mut acc = vec![zero; currents.len()];
    for obs in &surface.frames {
        acc.iter_mut().for_each(|v| *v = zero);
        for (q, &(p, w)) in points.iter().enumerate() {
            let pk = PairKernel::new(p, obs.position, k)?;
            for (v, s) in acc.iter_mut().zip(&samples) {
                let (u, j) = s[q];
                *v = cadd(*v, cscale(csub(pk.electric(j), pk.magnetic(u)), w.into()));
            }
        }
        for (o, v) in out.iter_mut().zip(&acc) {
            o.extend_from_slice(&rotated_tangential_pair(*v, obs));
        }
    }
    Ok(out)
}

/// `(-M, eta J)` of one current vector at every grid point, row-major in `theta`.
fn sample_on_grid(interp: &CurrentInterpolant, x: &[C64], grid: &Grid) -> Result<Vec<(CVec3, CVec3)>> {
    let n = interp.nodes;
    if x.len() != 4 * n {
        return Err(Error::DimensionMismatch {
            op: "radiate",
            left_rows: 4 * n,
            left_cols: 1,
            right_rows: x.len(),
            right_cols: 1,
        });
    }
    let cu = interp.coefficients(&x[..2 * n])?;
    let cw = interp.coefficients(&x[2 * n..])?;
    let l = interp.degree() as i64;
    let width = (2 * l + 1) as usize;
    let mut out = Vec::with_capacity(grid.len());
    for &theta in &grid.thetas {
        // per-order (theta, phi) components for both blocks
        let mut fu = vec![[C64::new(0.0, 0.0); 2]; width];
        let mut fw = vec![[C64::new(0.0, 0.0); 2]; width];
        for (idx, (a, b)) in interp.modes.iter().zip(cu.iter().zip(&cw)) {
            let local = vsh_local(*idx, theta);
            let slot = (idx.m + l) as usize;
            for c in 0..2 {
                fu[slot][c] += a * local[c];
                fw[slot][c] += b * local[c];
            }
        }
        for &phi in &grid.phis {
            let (th, ph) = tangent_basis(theta, phi);
            let mut u = [C64::new(0.0, 0.0); 2];
            let mut w = [C64::new(0.0, 0.0); 2];
            for m in -l..=l {
                let e = C64::from_polar(1.0, m as f64 * phi);
                let slot = (m + l) as usize;
                for c in 0..2 {
                    u[c] += fu[slot][c] * e;
                    w[c] += fw[slot][c] * e;
                }
            }
            let to_cart = |v: [C64; 2]| -> CVec3 {
                [
                    v[0] * th[0] + v[1] * ph[0],
                    v[0] * th[1] + v[1] * ph[1],
                    v[0] * th[2] + v[1] * ph[2],
                ]
            };
            out.push((to_cart(u), to_cart(w)));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::em::{dipole_fields, DipoleSource, Medium};
    use crate::geometry::{fibonacci_sphere, SurfaceKind};
    use crate::numerics::norm2;

    #[test]
    fn default_degree_budget() {
        assert_eq!(CurrentInterpolant::default_degree(400), 15);
        for n in [20, 100, 400, 900] {
            let l = CurrentInterpolant::default_degree(n);
            assert!((2 * l * (l + 2)) as f64 <= 1.3 * n as f64);
            assert!((2 * (l + 1) * (l + 3)) as f64 > 1.3 * n as f64);
        }
    }

    #[test]
    fn fit_recovers_sampled_harmonic() {
        let gamma = fibonacci_sphere(200, 0.04, SurfaceKind::Equivalent);
        let interp = CurrentInterpolant::new(&gamma, 8).unwrap();
        assert!(interp.condition_number() < 10.0, "{}", interp.condition_number());
        let idx = ModalIndex::new(5, -3, crate::modes::Polarization::TM).unwrap();
        let block: Vec<C64> = gamma
            .frames
            .iter()
            .flat_map(|f| {
                let (theta, phi) = angles_of(f.normal);
                let v = vsh_tangential(idx, theta, phi);
                [0, 1].map(|c| {
                    let t = f.tangent(c);
                    v[0] * t[0] + v[1] * t[1] + v[2] * t[2]
                })
            })
            .collect();
        let c = interp.coefficients(&block).unwrap();
        let pos = interp.modes().iter().position(|m| *m == idx).unwrap();
        for (i, v) in c.iter().enumerate() {
            if i != pos {
                assert!(v.norm() < 1e-10 * c[pos].norm());
            }
        }
    }

    #[test]
    fn love_currents_reproduce_dipole_near_field() {
        let medium = Medium::vacuum(5e9).unwrap();
        let gamma = fibonacci_sphere(400, 0.04, SurfaceKind::Equivalent);
        let interp = CurrentInterpolant::for_surface(&gamma).unwrap();
        let d = DipoleSource::electric([0.0, 0.01, 0.01], [0.3, 0.0, 1.0]).unwrap();
        let eta = medium.eta();
        let n = gamma.len();
        let mut x = vec![C64::new(0.0, 0.0); 4 * n];
        for (i, f) in gamma.frames.iter().enumerate() {
            let (e, h) = dipole_fields(&d, f.position, &medium).unwrap();
            let ep = rotated_tangential_pair(e, f);
            let hp = rotated_tangential_pair(h, f);
            for c in 0..2 {
                x[2 * i + c] = ep[c];
                x[2 * n + 2 * i + c] = hp[c] * eta;
            }
        }
        let near = fibonacci_sphere(100, 0.044, SurfaceKind::Evaluation);
        let e = radiate(&interp, &[&x], &near, medium.k()).unwrap();
        let exact: Vec<C64> = near
            .frames
            .iter()
            .flat_map(|f| rotated_tangential_pair(dipole_fields(&d, f.position, &medium).unwrap().0, f))
            .collect();
        let diff: Vec<C64> = e[0].iter().zip(&exact).map(|(a, b)| a - b).collect();
        let err = norm2(&diff) / norm2(&exact);
        eprintln!("near floor {err:e}");
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn rejects_interior_observation() {
        let gamma = fibonacci_sphere(50, 0.04, SurfaceKind::Equivalent);
        let interp = CurrentInterpolant::new(&gamma, 3).unwrap();
        let x = vec![C64::new(1.0, 0.0); 200];
        let inner = fibonacci_sphere(10, 0.03, SurfaceKind::Evaluation);
        assert!(radiate(&interp, &[&x], &inner, 100.0).is_err());
    }
}

//! Free-space kernels and elementary dipole fields.
//!
//! Time dependence is `exp(-i omega t)`, so outgoing waves carry
//! `exp(+i k d)`. Electric current moments are in A·m and magnetic current
//! moments in V·m.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    cadd, cdot, cnorm, cscale, csub, norm, rcross, rdot, scale, sub, to_complex,
    CVec3, PointFrame, Vec3,
};

pub const EPSILON0: f64 = 8.8541878128e-12;
pub const MU0: f64 = 1.25663706212e-6;

/// Separation below which two points are treated as coincident.
pub const COINCIDENCE_TOL: f64 = 1e-12;

const I: C64 = C64::new(0.0, 1.0);

/// Homogeneous medium at one frequency.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Medium {
    pub frequency: f64,
    pub epsilon: f64,
    pub mu: f64,
}

impl Medium {
    pub fn vacuum(frequency: f64) -> Result<Self> {
        if !(frequency > 0.0 && frequency.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "frequency must be positive, got {frequency}"
            )));
        }
        Ok(Self {
            frequency,
            epsilon: EPSILON0,
            mu: MU0,
        })
    }

    pub fn speed(&self) -> f64 {
        1.0 / (self.epsilon * self.mu).sqrt()
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI * self.frequency
    }

    /// Wavenumber in rad/m.
    pub fn k(&self) -> f64 {
        self.omega() / self.speed()
    }

    pub fn wavelength(&self) -> f64 {
        self.speed() / self.frequency
    }

    /// Wave impedance `sqrt(mu / epsilon)` in ohms.
    pub fn eta(&self) -> f64 {
        (self.mu / self.epsilon).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DipoleKind {
    Electric,
    Magnetic,
}

/// Infinitesimal current element.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DipoleSource {
    pub position: Vec3,
    pub moment: CVec3,
    pub kind: DipoleKind,
}

impl DipoleSource {
    pub fn new(position: Vec3, moment: CVec3, kind: DipoleKind) -> Result<Self> {
        if cnorm(moment) == 0.0 || !moment.iter().all(|z| z.is_finite()) {
            return Err(Error::InvalidArgument(
                "dipole moment must be finite and non-zero".into(),
            ));
        }
        Ok(Self {
            position,
            moment,
            kind,
        })
    }

    pub fn electric(position: Vec3, moment: Vec3) -> Result<Self> {
        Self::new(position, to_complex(moment), DipoleKind::Electric)
    }

    pub fn magnetic(position: Vec3, moment: Vec3) -> Result<Self> {
        Self::new(position, to_complex(moment), DipoleKind::Magnetic)
    }

    pub fn scaled(&self, alpha: C64) -> Self {
        Self {
            moment: cscale(self.moment, alpha),
            ..*self
        }
    }
}

fn separation(r: Vec3, rp: Vec3) -> Result<(f64, Vec3)> {
    let d = sub(r, rp);
    let dist = norm(d);
    if !(dist >= COINCIDENCE_TOL) {
        return Err(Error::CoincidentPoints { distance: dist });
    }
    Ok((dist, scale(d, 1.0 / dist)))
}

fn green_at(dist: f64, k: f64) -> C64 {
    C64::from_polar(1.0 / (4.0 * PI * dist), k * dist)
}

/// Scalar Green's function `exp(i k d) / (4 pi d)`.
pub fn green(r: Vec3, rp: Vec3, k: f64) -> Result<C64> {
    let (dist, _) = separation(r, rp)?;
    Ok(green_at(dist, k))
}

/// Bracketed transverse/longitudinal factors of the dipole near field.
///
/// `E = i k eta G [ p_perp (1 + i/kd - 1/(kd)^2) + p_par (2/(kd)^2 - 2i/kd) ]`.
fn radiation_factors(kd: f64) -> (C64, C64) {
    let inv = 1.0 / kd;
    let inv2 = inv * inv;
    let transverse = C64::new(1.0 - inv2, inv);
    let longitudinal = C64::new(2.0 * inv2, -2.0 * inv);
    (transverse, longitudinal)
}

/// `ikG [ p_perp a + p_par b ]` for the dipole at separation `dist` along `dhat`.
fn dyadic_apply(p: CVec3, dhat: Vec3, dist: f64, k: f64) -> CVec3 {
    let g = green_at(dist, k);
    let (a, b) = radiation_factors(k * dist);
    let p_par_mag = rdot(dhat, p);
    let p_par = cscale(to_complex(dhat), p_par_mag);
    let p_perp = csub(p, p_par);
    cscale(cadd(cscale(p_perp, a), cscale(p_par, b)), I * k * g)
}

/// Exact `(E, H)` of an infinitesimal dipole at `r`.
pub fn dipole_fields(src: &DipoleSource, r: Vec3, medium: &Medium) -> Result<(CVec3, CVec3)> {
    let (dist, dhat) = separation(r, src.position)?;
    let k = medium.k();
    let eta = medium.eta();
    // grad G = (ik - 1/d) G dhat, curl(G p) = grad G x p
    let grad_factor = (I * k - 1.0 / dist) * green_at(dist, k);
    let curl = cscale(rcross(dhat, src.moment), grad_factor);
    let transverse_field = dyadic_apply(src.moment, dhat, dist, k);
    Ok(match src.kind {
        DipoleKind::Electric => (cscale(transverse_field, eta.into()), curl),
        DipoleKind::Magnetic => (
            cscale(curl, C64::from(-1.0)),
            cscale(transverse_field, (1.0 / eta).into()),
        ),
    })
}

/// Geometry shared by the T and K kernels for one source/observation pair.
#[derive(Clone, Copy, Debug)]
pub struct PairKernel {
    green: C64,
    grad_factor: C64,
    hess_par: C64,
    hess_perp: C64,
    dhat: Vec3,
    k: f64,
}

impl PairKernel {
    pub fn new(src_point: Vec3, obs_point: Vec3, k: f64) -> Result<Self> {
        let (dist, dhat) = separation(obs_point, src_point)?;
        let g = green_at(dist, k);
        let f = I * k - 1.0 / dist;
        // d_i d_j G = G [ (f^2 + 1/d^2) dhat_i dhat_j + (f/d) (delta_ij - dhat_i dhat_j) ]
        let hess_par = g * (f * f + 1.0 / (dist * dist));
        let hess_perp = g * f / dist;
        Ok(Self {
            green: g,
            grad_factor: f * g,
            hess_par,
            hess_perp,
            dhat,
            k,
        })
    }

    /// `grad G`.
    pub fn gradient(&self) -> CVec3 {
        cscale(to_complex(self.dhat), self.grad_factor)
    }

    /// `ik G J - (ik)^{-1} grad(grad G . J)`, the field `E / eta` of current element `J`.
    pub fn electric(&self, current: CVec3) -> CVec3 {
        let ik = I * self.k;
        let par = rdot(self.dhat, current);
        let hess_j = cadd(
            cscale(to_complex(self.dhat), par * (self.hess_par - self.hess_perp)),
            cscale(current, self.hess_perp),
        );
        csub(cscale(current, ik * self.green), cscale(hess_j, 1.0 / ik))
    }

    /// `-(grad G x J)`; with the observation normal this gives `K(J) = -n x (grad G x J)`.
    pub fn magnetic(&self, current: CVec3) -> CVec3 {
        let g = self.gradient();
        [
            -(g[1] * current[2] - g[2] * current[1]),
            -(g[2] * current[0] - g[0] * current[2]),
            -(g[0] * current[1] - g[1] * current[0]),
        ]
    }
}

fn check_unit(t: Vec3) -> Result<()> {
    let n = norm(t);
    if (n - 1.0).abs() > 1e-12 {
        return Err(Error::NonUnitTangent { norm: n });
    }
    Ok(())
}

/// `n x [ik G J - (ik)^{-1} grad(grad G . J)]` at the observation frame for a
/// unit current element along `src_tangent`.
pub fn t_kernel(src_point: Vec3, src_tangent: Vec3, obs: &PointFrame, medium: &Medium) -> Result<CVec3> {
    check_unit(src_tangent)?;
    t_kernel_current(src_point, to_complex(src_tangent), obs, medium)
}

/// [`t_kernel`] for an arbitrary complex current moment.
pub fn t_kernel_current(src_point: Vec3, current: CVec3, obs: &PointFrame, medium: &Medium) -> Result<CVec3> {
    let pk = PairKernel::new(src_point, obs.position, medium.k())?;
    Ok(rcross(obs.normal, pk.electric(current)))
}

/// `-n x (grad G x J)` at the observation frame for a unit current element.
pub fn k_kernel(src_point: Vec3, src_tangent: Vec3, obs: &PointFrame, medium: &Medium) -> Result<CVec3> {
    check_unit(src_tangent)?;
    k_kernel_current(src_point, to_complex(src_tangent), obs, medium)
}

/// [`k_kernel`] for an arbitrary complex current moment.
pub fn k_kernel_current(src_point: Vec3, current: CVec3, obs: &PointFrame, medium: &Medium) -> Result<CVec3> {
    let pk = PairKernel::new(src_point, obs.position, medium.k())?;
    Ok(rcross(obs.normal, pk.magnetic(current)))
}

/// Components of a 3-vector along the frame tangents.
pub fn tangential_pair(v: CVec3, frame: &PointFrame) -> [C64; 2] {
    [rdot(frame.t1, v), rdot(frame.t2, v)]
}

/// `n x v` expressed on the frame tangents, `[-(v.t2), v.t1]`.
pub fn rotated_tangential_pair(v: CVec3, frame: &PointFrame) -> [C64; 2] {
    [-rdot(frame.t2, v), rdot(frame.t1, v)]
}

/// `p . E` helper used for reciprocity checks.
pub fn reaction(p: CVec3, e: CVec3) -> C64 {
    cdot(p, e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ccross, cross, normalize};

    fn medium() -> Medium {
        Medium::vacuum(5e9).unwrap()
    }

    fn rel(a: CVec3, b: CVec3) -> f64 {
        cnorm(csub(a, b)) / cnorm(b)
    }

    #[test]
    fn vacuum_constants() {
        let m = medium();
        assert!((m.eta() - 376.7303).abs() < 1e-3);
        assert!((m.wavelength() - 0.059958).abs() < 1e-5);
        assert!(Medium::vacuum(0.0).is_err());
    }

    #[test]
    fn green_static_and_full_cycle() {
        let g = green([0.0, 0.0, 1.0], [0.0; 3], 0.0).unwrap();
        assert!((g.re - 0.0795775).abs() < 1e-7 && g.im == 0.0);
        let d = 0.3;
        let k = 2.0 * PI / d;
        let g = green([d, 0.0, 0.0], [0.0; 3], k).unwrap();
        assert!((g.re - 1.0 / (4.0 * PI * d)).abs() < 1e-12);
        assert!(g.im.abs() < 1e-12);
    }

    #[test]
    fn green_magnitude_times_distance_is_constant() {
        for i in 1..20 {
            let d = 0.01 * i as f64;
            let g = green([0.0, d, 0.0], [0.0; 3], 104.7).unwrap();
            assert!((g.norm() * d - 1.0 / (4.0 * PI)).abs() < 1e-14);
        }
    }

    #[test]
    fn green_rejects_coincident_points() {
        assert!(matches!(
            green([1.0, 2.0, 3.0], [1.0, 2.0, 3.0], 1.0),
            Err(Error::CoincidentPoints { .. })
        ));
    }

    #[test]
    fn far_zone_impedance() {
        let m = medium();
        let k = m.k();
        let src = DipoleSource::electric([0.0; 3], [0.0, 0.0, 1.0]).unwrap();
        let dist = 100.0 / k;
        let r = scale(normalize([1.0, 0.5, 0.3]), dist);
        let (e, h) = dipole_fields(&src, r, &m).unwrap();
        let ratio = cnorm(e) / cnorm(h);
        assert!((ratio / m.eta() - 1.0).abs() < 1e-3, "{ratio}");
        // E, H and r-hat mutually orthogonal in the far zone
        let rhat = to_complex(normalize(r));
        assert!(cdot(e, rhat).norm() / cnorm(e) < 0.03);
        assert!(cdot(h, rhat).norm() / cnorm(h) < 1e-12);
    }

    #[test]
    fn axial_null() {
        let m = medium();
        let src = DipoleSource::electric([0.0; 3], [0.0, 0.0, 1.0]).unwrap();
        let (e, _) = dipole_fields(&src, [0.0, 0.0, 1000.0 / m.k()], &m).unwrap();
        let transverse = (e[0].norm_sqr() + e[1].norm_sqr()).sqrt();
        assert!(transverse < 1e-12 * cnorm(e));
    }

    fn curl_fd(src: &DipoleSource, r: Vec3, m: &Medium, h: f64) -> CVec3 {
        let e_at = |dr: Vec3| dipole_fields(src, [r[0] + dr[0], r[1] + dr[1], r[2] + dr[2]], m).unwrap().0;
        let deriv = |axis: usize| -> CVec3 {
            let mut p = [0.0; 3];
            p[axis] = h;
            let mut q = [0.0; 3];
            q[axis] = -h;
            cscale(csub(e_at(p), e_at(q)), (0.5 / h).into())
        };
        let (dx, dy, dz) = (deriv(0), deriv(1), deriv(2));
        [dy[2] - dz[1], dz[0] - dx[2], dx[1] - dy[0]]
    }

    #[test]
    fn maxwell_faraday_residual() {
        let m = medium();
        let src = DipoleSource::new(
            [0.001, -0.002, 0.003],
            [C64::new(0.3, 0.1), C64::new(-0.2, 0.5), C64::new(1.0, 0.0)],
            DipoleKind::Electric,
        )
        .unwrap();
        let r = add_vec(src.position, scale(normalize([0.4, -0.7, 0.2]), 5.0 / m.k()));
        let curl = curl_fd(&src, r, &m, 1e-5 * m.wavelength());
        let (_, h) = dipole_fields(&src, r, &m).unwrap();
        let expected = cscale(h, I * m.omega() * m.mu);
        assert!(rel(curl, expected) < 1e-4, "{}", rel(curl, expected));
    }

    fn add_vec(a: Vec3, b: Vec3) -> Vec3 {
        [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
    }

    #[test]
    fn duality_transform() {
        let m = medium();
        let eta = m.eta();
        let moment = [C64::new(0.2, -0.4), C64::new(1.0, 0.3), C64::new(-0.5, 0.0)];
        let pos = [0.01, 0.0, -0.01];
        let e_src = DipoleSource::new(pos, moment, DipoleKind::Electric).unwrap();
        let m_src = DipoleSource::new(pos, cscale(moment, eta.into()), DipoleKind::Magnetic).unwrap();
        for r in [[0.1, 0.05, 0.02], [-0.03, 0.2, 0.5], [0.0, 0.0, 0.04]] {
            let (ee, he) = dipole_fields(&e_src, r, &m).unwrap();
            let (em, hm) = dipole_fields(&m_src, r, &m).unwrap();
            assert!(rel(em, cscale(he, (-eta).into())) < 1e-12);
            assert!(rel(hm, cscale(ee, (1.0 / eta).into())) < 1e-12);
        }
    }

    #[test]
    fn reciprocity() {
        let m = medium();
        let p = [C64::new(0.3, 0.2), C64::new(-1.0, 0.0), C64::new(0.1, 0.9)];
        let q = [C64::new(1.0, -0.5), C64::new(0.2, 0.2), C64::new(0.0, 0.4)];
        let (r1, r2) = ([0.01, 0.02, -0.03], [0.2, -0.1, 0.15]);
        let sp = DipoleSource::new(r1, p, DipoleKind::Electric).unwrap();
        let sq = DipoleSource::new(r2, q, DipoleKind::Electric).unwrap();
        let a = reaction(p, dipole_fields(&sq, r1, &m).unwrap().0);
        let b = reaction(q, dipole_fields(&sp, r2, &m).unwrap().0);
        assert!((a - b).norm() / a.norm() < 1e-10);
    }

    #[test]
    fn kernels_match_dipole_fields() {
        let m = medium();
        let eta = m.eta();
        let src_point = [0.03, 0.01, -0.02];
        let obs = PointFrame::from_normal([0.05, 0.12, 0.08], normalize([0.05, 0.12, 0.08]));
        let t = normalize([0.3, -0.2, 0.5]);
        let src = DipoleSource::electric(src_point, t).unwrap();
        let (e, h) = dipole_fields(&src, obs.position, &m).unwrap();
        let n = obs.normal;
        let tk = t_kernel(src_point, t, &obs, &m).unwrap();
        assert!(rel(tk, cscale(rcross(n, e), (1.0 / eta).into())) < 1e-8);
        // n x H of an electric element is -K(J)
        let kk = k_kernel(src_point, t, &obs, &m).unwrap();
        assert!(rel(kk, cscale(rcross(n, h), C64::from(-1.0))) < 1e-8);
    }

    #[test]
    fn kernel_rejects_non_unit_tangent() {
        let obs = PointFrame::from_normal([0.0, 0.0, 1.0], [0.0, 0.0, 1.0]);
        assert!(matches!(
            t_kernel([0.0; 3], [1.0, 1.0, 0.0], &obs, &medium()),
            Err(Error::NonUnitTangent { .. })
        ));
        assert!(k_kernel([0.0; 3], [0.0, 0.0, 1.0 + 1e-9], &obs, &medium()).is_err());
    }

    #[test]
    fn k_kernel_vanishes_for_radial_current() {
        let obs = PointFrame::from_normal([0.0, 0.3, 0.4], [0.0, 0.6, 0.8]);
        let src_point = [0.0, 0.0, 0.0];
        let along = normalize(sub(obs.position, src_point));
        let kk = k_kernel(src_point, along, &obs, &medium()).unwrap();
        assert!(cnorm(kk) < 1e-14);
    }

    #[test]
    fn kernels_are_linear_in_moment() {
        let m = medium();
        let obs = PointFrame::from_normal([0.1, 0.1, 0.1], normalize([1.0, 1.0, 1.0]));
        let j = [C64::new(0.1, 0.2), C64::new(0.3, -0.1), C64::new(0.0, 1.0)];
        let alpha = C64::new(2.5, -1.5);
        let a = t_kernel_current([0.0; 3], cscale(j, alpha), &obs, &m).unwrap();
        let b = cscale(t_kernel_current([0.0; 3], j, &obs, &m).unwrap(), alpha);
        assert!(rel(a, b) < 1e-14);
        let a = k_kernel_current([0.0; 3], cscale(j, alpha), &obs, &m).unwrap();
        let b = cscale(k_kernel_current([0.0; 3], j, &obs, &m).unwrap(), alpha);
        assert!(rel(a, b) < 1e-14);
    }

    #[test]
    fn rotated_pair_is_n_cross() {
        let f = PointFrame::from_normal([0.2, -0.1, 0.3], normalize([0.2, -0.1, 0.3]));
        let v = [C64::new(0.3, 1.0), C64::new(-0.2, 0.1), C64::new(0.7, 0.0)];
        let direct = tangential_pair(ccross(to_complex(f.normal), v), &f);
        let fast = rotated_tangential_pair(v, &f);
        for c in 0..2 {
            assert!((direct[c] - fast[c]).norm() < 1e-15);
        }
        let _ = cross(f.t1, f.t2);
    }
}

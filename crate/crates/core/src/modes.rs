//! Spherical special functions, tangential vector spherical harmonics and the
//! modal transfer spectrum between two concentric spheres.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CVec3, SurfaceGeometry, Vec3};
use crate::numerics::{matmul, ComplexMatrix};

const I: C64 = C64::new(0.0, 1.0);

fn check_argument(x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "spherical Bessel argument must be positive, got {x}"
        )));
    }
    Ok(())
}

/// `j_0(x) .. j_nmax(x)` by Miller's downward recurrence, normalized with
/// `sum (2n + 1) j_n(x)^2 = 1`.
pub fn sph_bessel_j_all(nmax: usize, x: f64) -> Result<Vec<f64>> {
    check_argument(x)?;
    let start = nmax.max(x.ceil() as usize) + 20 + (2.0 * x.sqrt()).ceil() as usize + nmax / 2;
    let mut vals = vec![0.0; start + 2];
    vals[start] = 1.0;
    for n in (1..=start).rev() {
        vals[n - 1] = (2 * n + 1) as f64 / x * vals[n] - vals[n + 1];
        if vals[n - 1].abs() > 1e100 {
            for v in vals[n - 1..].iter_mut() {
                *v *= 1e-100;
            }
        }
    }
    let sum: f64 = vals
        .iter()
        .enumerate()
        .map(|(n, v)| (2 * n + 1) as f64 * v * v)
        .sum();
    let norm = 1.0 / sum.sqrt();
    // sign from j_0 (or j_1 when j_0 is too close to a zero)
    let j0 = x.sin() / x;
    let j1 = x.sin() / (x * x) - x.cos() / x;
    let sign = if j0.abs() > j1.abs() {
        j0.signum() * vals[0].signum()
    } else {
        j1.signum() * vals[1].signum()
    };
    vals.truncate(nmax + 1);
    Ok(vals.into_iter().map(|v| v * norm * sign).collect())
}

/// `y_0(x) .. y_nmax(x)` by upward recurrence.
pub fn sph_bessel_y_all(nmax: usize, x: f64) -> Result<Vec<f64>> {
    check_argument(x)?;
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(-x.cos() / x);
    if nmax >= 1 {
        out.push(-x.cos() / (x * x) - x.sin() / x);
    }
    for n in 1..nmax {
        let next = (2 * n + 1) as f64 / x * out[n] - out[n - 1];
        out.push(next);
    }
    Ok(out)
}

/// Outgoing spherical Hankel functions `h_n = j_n + i y_n`, `n = 0..=nmax`.
pub fn sph_hankel1_all(nmax: usize, x: f64) -> Result<Vec<C64>> {
    let j = sph_bessel_j_all(nmax, x)?;
    let y = sph_bessel_y_all(nmax, x)?;
    Ok(j.into_iter().zip(y).map(|(a, b)| C64::new(a, b)).collect())
}

pub fn sph_bessel_j(n: usize, x: f64) -> Result<f64> {
    Ok(sph_bessel_j_all(n, x)?[n])
}

pub fn sph_bessel_y(n: usize, x: f64) -> Result<f64> {
    Ok(sph_bessel_y_all(n, x)?[n])
}

pub fn sph_hankel1(n: usize, x: f64) -> Result<C64> {
    Ok(sph_hankel1_all(n, x)?[n])
}

/// Derivatives `z_n'(x) = z_{n-1}(x) - (n + 1) z_n(x) / x` from a table of values.
pub fn derivative_table<T>(vals: &[T], x: f64) -> Vec<T>
where
    T: Copy + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Neg<Output = T>,
{
    (0..vals.len())
        .map(|n| {
            if n == 0 {
                // z_0' = -z_1 (requires the table to reach n = 1)
                -vals[1.min(vals.len() - 1)]
            } else {
                vals[n - 1] - vals[n] * ((n + 1) as f64 / x)
            }
        })
        .collect()
}

/// Riccati derivative `(x z_n(x))' / x = z_{n-1}(x) - n z_n(x) / x` for `n >= 1`.
pub fn riccati_ratio<T>(vals: &[T], n: usize, x: f64) -> T
where
    T: Copy + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T>,
{
    vals[n - 1] - vals[n] * (n as f64 / x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    /// Tangential field along `X_nm`.
    TE,
    /// Tangential field along `r x X_nm`.
    TM,
}

impl Polarization {
    pub fn label(&self) -> &'static str {
        match self {
            Polarization::TE => "TE",
            Polarization::TM => "TM",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModalIndex {
    pub n: usize,
    pub m: i64,
    pub pol: Polarization,
}

impl ModalIndex {
    pub fn new(n: usize, m: i64, pol: Polarization) -> Result<Self> {
        if n == 0 || m.unsigned_abs() as usize > n {
            return Err(Error::InvalidArgument(format!(
                "modal index needs n >= 1 and |m| <= n, got n = {n}, m = {m}"
            )));
        }
        Ok(Self { n, m, pol })
    }

    /// All indices with `1 <= n <= nmax`, ordered by `n`, then `m`, then TE before TM.
    pub fn all(nmax: usize) -> Vec<Self> {
        let mut out = Vec::new();
        for n in 1..=nmax {
            for m in -(n as i64)..=(n as i64) {
                for pol in [Polarization::TE, Polarization::TM] {
                    out.push(Self { n, m, pol });
                }
            }
        }
        out
    }
}

/// Orthonormal associated Legendre values `Q_l^m(cos theta)` (Condon-Shortley
/// phase) together with `Q_l^m / sin(theta)` for `l = m ..= lmax`, `m >= 1`.
struct LegendreColumn {
    q: Vec<f64>,
    q_over_s: Vec<f64>,
}

fn legendre_column(m: usize, lmax: usize, theta: f64) -> LegendreColumn {
    let (s, x) = theta.sin_cos();
    // seed Q_m^m and Q_m^m / s
    let mut qmm_over_s = 0.0;
    let mut qmm = 1.0 / (4.0 * PI).sqrt();
    for mm in 1..=m {
        let f = -((2 * mm + 1) as f64 / (2 * mm) as f64).sqrt();
        qmm_over_s = f * qmm;
        qmm *= f * s;
    }
    let run = |seed: f64| -> Vec<f64> {
        let mut out = vec![0.0; lmax + 1];
        if m > lmax {
            return out;
        }
        out[m] = seed;
        if m < lmax {
            out[m + 1] = ((2 * m + 3) as f64).sqrt() * x * seed;
        }
        for l in m + 2..=lmax {
            let lf = l as f64;
            let mf = m as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            out[l] = a * (x * out[l - 1] - b * out[l - 2]);
        }
        out
    };
    LegendreColumn {
        q: run(qmm),
        q_over_s: if m == 0 { Vec::new() } else { run(qmm_over_s) },
    }
}

/// Weights on the unit sphere closest (in the Euclidean sense) to equal
/// weights that integrate every spherical harmonic of degree `<= degree`
/// exactly over the given directions.
pub fn exact_sphere_weights(directions: &[Vec3], degree: usize) -> Result<Vec<f64>> {
    let n = directions.len();
    let rows = (degree + 1) * (degree + 1);
    if n == 0 || rows > n {
        return Err(Error::InvalidArgument(format!(
            "{n} points cannot carry a rule exact to degree {degree}"
        )));
    }
    let angles: Vec<(f64, f64)> = directions.iter().map(|&d| angles_of(d)).collect();
    // real harmonics Q_l^m cos(m phi), Q_l^m sin(m phi)
    let mut design = ComplexMatrix::zeros(rows, n);
    for (i, &(theta, phi)) in angles.iter().enumerate() {
        let mut row = 0;
        for m in 0..=degree {
            let col = legendre_column(m, degree, theta);
            let (s, c) = (m as f64 * phi).sin_cos();
            for l in m..=degree {
                design.set(row, i, C64::from(col.q[l] * c));
                row += 1;
                if m > 0 {
                    design.set(row, i, C64::from(col.q[l] * s));
                    row += 1;
                }
            }
        }
    }
    let equal = 4.0 * PI / n as f64;
    let w0 = vec![C64::from(equal); n];
    let moments = design.mul_vec(&w0)?;
    // only the constant harmonic integrates to a nonzero value
    let mut defect: Vec<C64> = moments.iter().map(|v| -v).collect();
    defect[0] += (4.0 * PI).sqrt();
    let correction = crate::pinv::mpp(&design, 1e-12)?.mul_vec(&defect)?;
    Ok(correction.iter().map(|c| equal + c.re).collect())
}

/// Returns `(m Q_n^m / sin theta, dQ_n^m / dtheta)` for `m >= 0`.
fn angular_factors(n: usize, m: usize, theta: f64) -> (f64, f64) {
    if m == 0 {
        // dQ_n^0/dtheta = sqrt(n (n + 1)) Q_n^1
        let col = legendre_column(1, n, theta);
        return (0.0, ((n * (n + 1)) as f64).sqrt() * col.q[n]);
    }
    let col = legendre_column(m, n + 1, theta);
    let x = theta.cos();
    let (nf, mf) = (n as f64, m as f64);
    let ratio = ((2.0 * nf + 1.0) * (nf + mf + 1.0) * (nf - mf + 1.0) / (2.0 * nf + 3.0)).sqrt();
    let dq = -((nf + 1.0) * x * col.q_over_s[n] - ratio * col.q_over_s[n + 1]);
    (mf * col.q_over_s[n], dq)
}

fn spherical_unit_vectors(theta: f64, phi: f64) -> (Vec3, Vec3, Vec3) {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    (
        [st * cp, st * sp, ct],
        [ct * cp, ct * sp, -st],
        [-sp, cp, 0.0],
    )
}

/// `(theta, phi)` components of the unit-norm tangential harmonic at azimuth
/// zero; the value at `phi` is this times `exp(i m phi)`.
pub fn vsh_local(idx: ModalIndex, theta: f64) -> [C64; 2] {
    let (n, m) = (idx.n, idx.m);
    let ma = m.unsigned_abs() as usize;
    let (m_over_s, dq) = angular_factors(n, ma, theta);
    // Q_n^{-m} = (-1)^m Q_n^m
    let parity = if m < 0 && ma % 2 == 1 { -1.0 } else { 1.0 };
    let m_over_s = if m < 0 { -m_over_s } else { m_over_s } * parity;
    let scale = 1.0 / ((n * (n + 1)) as f64).sqrt();
    let x_theta = C64::from(-m_over_s * scale);
    let x_phi = -I * (dq * parity * scale);
    match idx.pol {
        Polarization::TE => [x_theta, x_phi],
        // r x theta = phi, r x phi = -theta
        Polarization::TM => [-x_phi, x_theta],
    }
}

/// `(theta hat, phi hat)` at the given direction.
pub fn tangent_basis(theta: f64, phi: f64) -> (Vec3, Vec3) {
    let (_, th, ph) = spherical_unit_vectors(theta, phi);
    (th, ph)
}

/// Unit-norm tangential vector spherical harmonic: `X_nm` for TE and
/// `r x X_nm` for TM. The poles are handled by the limit forms of
/// `m Q / sin(theta)` built into the Legendre recurrence.
pub fn vsh_tangential(idx: ModalIndex, theta: f64, phi: f64) -> CVec3 {
    let [ct, cp] = vsh_local(idx, theta);
    let e = C64::from_polar(1.0, idx.m as f64 * phi);
    let (_, th, ph) = spherical_unit_vectors(theta, phi);
    let (ct, cp) = (ct * e, cp * e);
    [
        ct * th[0] + cp * ph[0],
        ct * th[1] + cp * ph[1],
        ct * th[2] + cp * ph[2],
    ]
}

/// Polar and azimuthal angle of a Cartesian direction.
pub fn angles_of(v: Vec3) -> (f64, f64) {
    let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let theta = (v[2] / r).clamp(-1.0, 1.0).acos();
    let mut phi = v[1].atan2(v[0]);
    if phi < 0.0 {
        phi += 2.0 * PI;
    }
    (theta, phi)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = x;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModalEntry {
    pub n: usize,
    pub pol: Polarization,
    pub magnitude: f64,
}

/// Transfer magnitudes from unit-norm surface-current modes on the sphere of
/// radius `a` to the tangential field (`n x E` and `eta n x H`) on radius `r_m`.
#[derive(Clone, Debug, Serialize)]
pub struct ModalSpectrum {
    pub entries: Vec<ModalEntry>,
    pub source_radius: f64,
    pub measurement_radius: f64,
    pub k: f64,
}

impl ModalSpectrum {
    pub fn magnitude(&self, n: usize, pol: Polarization) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.n == n && e.pol == pol)
            .map(|e| e.magnitude)
    }

    pub fn max_magnitude(&self) -> f64 {
        self.entries.iter().map(|e| e.magnitude).fold(0.0, f64::max)
    }
}

/// Default modal truncation `2 ceil(k r_m) + 10`.
pub fn default_n_max(k: f64, r_m: f64) -> usize {
    2 * (k * r_m).ceil() as usize + 10
}

/// Interior factors `(j_n(ka), (ka j_n(ka))' / ka)` for `n = 1..=nmax` (index 0 unused).
fn interior_factors(nmax: usize, ka: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let j = sph_bessel_j_all(nmax + 1, ka)?;
    let d = (0..=nmax)
        .map(|n| if n == 0 { 0.0 } else { riccati_ratio(&j, n, ka) })
        .collect();
    Ok((j, d))
}

/// Per-degree transfer magnitude
/// `k^2 a r_m sqrt(j_n(ka)^2 + Dj_n(ka)^2) sqrt(|h_n(kr_m)|^2 + |Dh_n(kr_m)|^2)`,
/// identical for TE and TM because both current types are unknowns.
pub fn modal_spectrum(a: f64, r_m: f64, k: f64, n_max: usize) -> Result<ModalSpectrum> {
    if !(a > 0.0 && r_m > a && k > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "modal spectrum needs r_m > a > 0 and k > 0 (a = {a}, r_m = {r_m}, k = {k})"
        )));
    }
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    let (j, dj) = interior_factors(n_max, k * a)?;
    let h = sph_hankel1_all(n_max + 1, k * r_m)?;
    let mut entries = Vec::with_capacity(2 * n_max);
    for n in 1..=n_max {
        let dh = riccati_ratio(&h, n, k * r_m);
        let interior = (j[n] * j[n] + dj[n] * dj[n]).sqrt();
        let exterior = (h[n].norm_sqr() + dh.norm_sqr()).sqrt();
        let magnitude = k * k * a * r_m * interior * exterior;
        for pol in [Polarization::TE, Polarization::TM] {
            entries.push(ModalEntry { n, pol, magnitude });
        }
    }
    Ok(ModalSpectrum {
        entries,
        source_radius: a,
        measurement_radius: r_m,
        k,
    })
}

/// Discrete radiating current mode on `gamma`, normalized to unit Euclidean norm.
///
/// Layout follows the current vector: `[-M (t1, t2) per point | eta J (t1, t2) per point]`.
/// Within each `(n, m, pol)` pair of current patterns this is the combination
/// that radiates; its orthogonal partner produces no exterior field.
pub fn mode_current(idx: ModalIndex, gamma: &SurfaceGeometry, k: f64) -> Result<Vec<C64>> {
    let (j, dj) = interior_factors(idx.n, k * gamma.radius)?;
    let (jn, dn) = (j[idx.n], dj[idx.n]);
    // (coefficient of X, coefficient of r x X) for -M and for eta J
    let (u_coef, w_coef) = match idx.pol {
        Polarization::TE => ((C64::new(0.0, 0.0), I * dn), (C64::from(jn), C64::new(0.0, 0.0))),
        Polarization::TM => ((I * jn, C64::new(0.0, 0.0)), (C64::new(0.0, 0.0), C64::from(dn))),
    };
    let ns = gamma.len();
    let mut out = vec![C64::new(0.0, 0.0); 4 * ns];
    let te = ModalIndex { pol: Polarization::TE, ..idx };
    let tm = ModalIndex { pol: Polarization::TM, ..idx };
    for (i, f) in gamma.frames.iter().enumerate() {
        let (theta, phi) = angles_of(f.normal);
        let x = vsh_tangential(te, theta, phi);
        let z = vsh_tangential(tm, theta, phi);
        for (c, t) in [f.t1, f.t2].into_iter().enumerate() {
            let xt = x[0] * t[0] + x[1] * t[1] + x[2] * t[2];
            let zt = z[0] * t[0] + z[1] * t[1] + z[2] * t[2];
            out[2 * i + c] = u_coef.0 * xt + u_coef.1 * zt;
            out[2 * ns + 2 * i + c] = w_coef.0 * xt + w_coef.1 * zt;
        }
    }
    let norm = crate::numerics::norm2(&out);
    for v in out.iter_mut() {
        *v /= norm;
    }
    Ok(out)
}

/// Columns of [`mode_current`] for every index in `indices`.
pub fn mode_current_matrix(
    indices: &[ModalIndex],
    gamma: &SurfaceGeometry,
    k: f64,
) -> Result<ComplexMatrix> {
    let cols = indices
        .iter()
        .map(|&idx| mode_current(idx, gamma, k))
        .collect::<Result<Vec<_>>>()?;
    ComplexMatrix::from_columns(4 * gamma.len(), &cols)
}

/// Per-mode gain `|x_n* (pinv R x_n)| / ||x_n||^2`.
pub fn modal_reconstruction_gain(
    r: &ComplexMatrix,
    pinv: &ComplexMatrix,
    mode_currents: &ComplexMatrix,
) -> Result<Vec<f64>> {
    let radiated = matmul(r, mode_currents)?;
    modal_gain_from_radiated(pinv, &radiated, mode_currents)
}

/// [`modal_reconstruction_gain`] with `R X` already formed.
pub fn modal_gain_from_radiated(
    pinv: &ComplexMatrix,
    radiated: &ComplexMatrix,
    mode_currents: &ComplexMatrix,
) -> Result<Vec<f64>> {
    let recovered = matmul(pinv, radiated)?;
    if recovered.shape() != mode_currents.shape() {
        return Err(Error::DimensionMismatch {
            op: "modal_reconstruction_gain",
            left_rows: recovered.rows(),
            left_cols: recovered.cols(),
            right_rows: mode_currents.rows(),
            right_cols: mode_currents.cols(),
        });
    }
    Ok((0..mode_currents.cols())
        .map(|c| {
            let x = mode_currents.column(c);
            let y = recovered.column(c);
            let xx: f64 = x.iter().map(|z| z.norm_sqr()).sum();
            crate::numerics::dot_conj(&x, &y).norm() / xx
        })
        .collect())
}

/// Discrete mode directions: Gram-Schmidt of the columns in their given order
/// (two passes), so each column keeps only what the earlier columns do not
/// already explain.
///
/// With columns ordered by degree this strips the aliasing overlap between
/// sampled high-degree harmonics and lower-degree ones on a finite grid.
pub fn orthonormalize_columns(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(a.cols());
    for c in 0..a.cols() {
        let mut v = a.column(c);
        let start = crate::numerics::norm2(&v);
        for _ in 0..2 {
            for q in &basis {
                let p = crate::numerics::dot_conj(q, &v);
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= p * y;
                }
            }
        }
        let norm = crate::numerics::norm2(&v);
        if !(norm > 1e-10 * start) {
            return Err(Error::InvalidArgument(format!(
                "column {c} is linearly dependent on the preceding columns"
            )));
        }
        for x in v.iter_mut() {
            *x /= norm;
        }
        basis.push(v);
    }
    ComplexMatrix::from_columns(a.rows(), &basis)
}

/// Fraction `||P x||^2 / ||x||^2` of each column of `modes` lying in the
/// column span of `span` (singular directions above `tol_rel` of the largest).
pub fn subspace_coverage(modes: &ComplexMatrix, span: &ComplexMatrix, tol_rel: f64) -> Result<Vec<f64>> {
    if modes.rows() != span.rows() {
        return Err(Error::DimensionMismatch {
            op: "subspace_coverage",
            left_rows: modes.rows(),
            left_cols: modes.cols(),
            right_rows: span.rows(),
            right_cols: span.cols(),
        });
    }
    if span.cols() == 0 {
        return Ok(vec![0.0; modes.cols()]);
    }
    let dec = crate::numerics::svd(span)?;
    let rank = crate::numerics::truncated_rank(&dec.s, tol_rel);
    let basis = ComplexMatrix::from_fn(span.rows(), rank, |i, j| dec.u.get(i, j));
    let proj = matmul(&basis.adjoint(), modes)?;
    Ok((0..modes.cols())
        .map(|c| {
            let x = modes.column(c);
            let xx: f64 = x.iter().map(|z| z.norm_sqr()).sum();
            proj.column(c).iter().map(|z| z.norm_sqr()).sum::<f64>() / xx
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::cdot;

    #[test]
    fn closed_forms() {
        assert!((sph_bessel_j(0, 1.0).unwrap() - 0.8414709848078965).abs() < 1e-15);
        for &x in &[0.3, 1.0, 7.5, 31.0] {
            let h0 = sph_hankel1(0, x).unwrap();
            let expected = -I * C64::from_polar(1.0, x) / x;
            assert!((h0 - expected).norm() < 1e-14 * expected.norm());
            let j1 = x.sin() / (x * x) - x.cos() / x;
            assert!((sph_bessel_j(1, x).unwrap() - j1).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_non_positive_argument() {
        assert!(sph_bessel_j(2, 0.0).is_err());
        assert!(sph_hankel1(2, -1.0).is_err());
    }

    #[test]
    fn small_argument_high_order() {
        // j_n(x) ~ x^n / (2n + 1)!! for x << n
        let x = 0.01;
        let j = sph_bessel_j_all(10, x).unwrap();
        let mut dfact = 1.0;
        for k in (1..=21).step_by(2) {
            dfact *= k as f64;
        }
        let approx = x.powi(10) / dfact;
        assert!((j[10] / approx - 1.0).abs() < 1e-4);
    }

    #[test]
    fn wronskian() {
        for &x in &[2.0, 10.0] {
            let j = sph_bessel_j_all(41, x).unwrap();
            let y = sph_bessel_y_all(41, x).unwrap();
            let dj = derivative_table(&j, x);
            let dy = derivative_table(&y, x);
            for n in 0..=40 {
                let w = j[n] * dy[n] - dj[n] * y[n];
                assert!((w * x * x - 1.0).abs() < 1e-10, "n={n} x={x} w={w}");
            }
        }
    }

    #[test]
    fn invalid_modal_index() {
        assert!(ModalIndex::new(0, 0, Polarization::TE).is_err());
        assert!(ModalIndex::new(2, 3, Polarization::TM).is_err());
        assert_eq!(ModalIndex::all(2).len(), 2 * (3 + 5));
    }

    fn inner_product(a: ModalIndex, b: ModalIndex, nodes: &(Vec<f64>, Vec<f64>), nphi: usize) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (x, w) in nodes.0.iter().zip(&nodes.1) {
            let theta = x.acos();
            for p in 0..nphi {
                let phi = 2.0 * PI * p as f64 / nphi as f64;
                let va = vsh_tangential(a, theta, phi);
                let vb = vsh_tangential(b, theta, phi);
                let va_c = [va[0].conj(), va[1].conj(), va[2].conj()];
                acc += cdot(va_c, vb) * (w * 2.0 * PI / nphi as f64);
            }
        }
        acc
    }

    #[test]
    fn orthonormal_low_orders() {
        let nodes = gauss_legendre(24);
        let idx = ModalIndex::all(4);
        for &a in &idx {
            for &b in &idx {
                let ip = inner_product(a, b, &nodes, 24);
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((ip - expected).norm() < 1e-10, "{a:?} {b:?} {ip}");
            }
        }
    }

    #[test]
    fn m_zero_magnitude_is_azimuth_independent() {
        let idx = ModalIndex::new(5, 0, Polarization::TE).unwrap();
        let a = vsh_tangential(idx, 0.7, 0.1);
        let b = vsh_tangential(idx, 0.7, 4.0);
        let na = crate::geometry::cnorm(a);
        assert!((na - crate::geometry::cnorm(b)).abs() < 1e-14);
    }

    #[test]
    fn conjugation_symmetry() {
        for n in 1..6usize {
            for m in 1..=n as i64 {
                for pol in [Polarization::TE, Polarization::TM] {
                    let p = vsh_tangential(ModalIndex { n, m, pol }, 1.1, 2.3);
                    let q = vsh_tangential(ModalIndex { n, m: -m, pol }, 1.1, 2.3);
                    let sign = if m % 2 == 0 { -1.0 } else { 1.0 };
                    for c in 0..3 {
                        assert!((q[c] - p[c].conj() * sign).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn pole_limits_are_finite() {
        for n in 1..6 {
            for m in -(n as i64)..=(n as i64) {
                let v = vsh_tangential(ModalIndex { n, m, pol: Polarization::TE }, 0.0, 0.3);
                let near = vsh_tangential(ModalIndex { n, m, pol: Polarization::TE }, 1e-7, 0.3);
                assert!(v.iter().all(|z| z.is_finite()));
                assert!(crate::geometry::cnorm(crate::geometry::csub(v, near)) < 1e-5);
                if m.abs() != 1 {
                    assert!(crate::geometry::cnorm(v) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn spectrum_rejects_bad_geometry() {
        assert!(modal_spectrum(0.2, 0.1, 1.0, 5).is_err());
        assert!(modal_spectrum(0.1, 0.2, 1.0, 0).is_err());
    }

    #[test]
    fn spectrum_is_polarization_degenerate() {
        let s = modal_spectrum(0.04, 0.16, 104.7, 20).unwrap();
        for n in 1..=20 {
            assert_eq!(s.magnitude(n, Polarization::TE), s.magnitude(n, Polarization::TM));
        }
        assert_eq!(default_n_max(104.7, 0.16), 2 * 17 + 10);
    }
}

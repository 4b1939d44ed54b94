//! Discrete radiation operator, synthetic measurements, constraint sets and
//! reconstruction error metrics for a dipole enclosed by a spherical
//! equivalent surface.
//!
//! Unknowns are tangential point currents at the nodes of the equivalent
//! surface, each weighted by its quadrature weight. A current
//! vector of `N_s` nodes has length `4 N_s` and block layout
//!
//! ```text
//! [ -M.t1, -M.t2 (node 0), ..., -M (node N_s-1) | eta J.t1, eta J.t2 (node 0), ... ]
//! ```
//!
//! and a measurement vector over `N_m` frames stacks `n x E` and `eta n x H`
//! the same way. The operator has the block form `[-K, T; -T, -K]`.

use num_complex::Complex64 as C64;

pub use crate::geometry::{fibonacci_sphere, PointFrame, SurfaceGeometry, SurfaceKind};

use crate::em::{dipole_fields, rotated_tangential_pair, DipoleSource, Medium, PairKernel};
use crate::error::{Error, Result};
use crate::geometry::{cadd, cscale, csub, norm, sub, to_complex, CVec3};
use crate::numerics::{matmul, norm2, svd, ComplexMatrix, SvdResult};
use crate::radiation::{radiate, CurrentInterpolant};
use crate::pinv::{
    constrained_pinv, constraint_fit_pinv, mpp_from_svd, one_inverse_from_mpp, ConsistencyPolicy,
    ConstraintSet,
};

/// Minimum source/observation separation, in wavelengths.
pub const MIN_SEPARATION_WAVELENGTHS: f64 = 0.05;

/// Discrete unknown `[-M; eta J]` on the equivalent surface.
#[derive(Clone, Debug, PartialEq)]
pub struct CurrentVector(pub Vec<C64>);

/// Discrete data `[n x E; eta n x H]` on the measurement surface.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementVector(pub Vec<C64>);

impl CurrentVector {
    pub fn new(coefficients: Vec<C64>) -> Result<Self> {
        check_layout(&coefficients)?;
        Ok(Self(coefficients))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn zeros(nodes: usize) -> Self {
        Self(vec![C64::new(0.0, 0.0); 4 * nodes])
    }
}

impl MeasurementVector {
    pub fn new(coefficients: Vec<C64>) -> Result<Self> {
        check_layout(&coefficients)?;
        Ok(Self(coefficients))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }
}

fn check_layout(v: &[C64]) -> Result<()> {
    if !v.len().is_multiple_of(4) {
        return Err(Error::InvalidArgument(format!(
            "block vector length {} is not divisible by 4",
            v.len()
        )));
    }
    if !v.iter().all(|z| z.is_finite()) {
        return Err(Error::InvalidArgument("block vector has non-finite entries".into()));
    }
    Ok(())
}

/// Assembles the `(4 N_m) x (4 N_s)` radiation operator.
pub fn assemble_r(src: &SurfaceGeometry, meas: &SurfaceGeometry, medium: &Medium) -> Result<ComplexMatrix> {
    let (ns, nm) = (src.len(), meas.len());
    let k = medium.k();
    let minimum = MIN_SEPARATION_WAVELENGTHS * medium.wavelength();
    let mut r = ComplexMatrix::zeros(4 * nm, 4 * ns);
    for (j, obs) in meas.frames.iter().enumerate() {
        for (i, s) in src.frames.iter().enumerate() {
            let distance = norm(sub(obs.position, s.position));
            if distance <= minimum {
                return Err(Error::ProximityViolation {
                    source_index: i,
                    measurement: j,
                    distance,
                    minimum,
                });
            }
            let pk = PairKernel::new(s.position, obs.position, k)?;
            let weight = src.weights[i];
            for c in 0..2 {
                let t = to_complex(s.tangent(c));
                let tk = rotated_tangential_pair(pk.electric(t), obs);
                let kk = rotated_tangential_pair(pk.magnetic(t), obs);
                let (col_u, col_w) = (2 * i + c, 2 * ns + 2 * i + c);
                for row in 0..2 {
                    let (row_e, row_h) = (2 * j + row, 2 * nm + 2 * j + row);
                    r.set(row_e, col_u, -kk[row] * weight);
                    r.set(row_e, col_w, tk[row] * weight);
                    r.set(row_h, col_u, -tk[row] * weight);
                    r.set(row_h, col_w, -kk[row] * weight);
                }
            }
        }
    }
    Ok(r)
}

fn check_inside(src: &DipoleSource, radius: f64) -> Result<()> {
    let r = norm(src.position);
    if !(r < radius) {
        return Err(Error::SourceOutsideSurface { radius: r, surface: radius });
    }
    Ok(())
}

/// `[n x E; eta n x H]` of a dipole sampled on a surface, in the block layout.
fn tangential_fields(src: &DipoleSource, surface: &SurfaceGeometry, medium: &Medium) -> Result<Vec<C64>> {
    let n = surface.len();
    let eta = medium.eta();
    let mut out = vec![C64::new(0.0, 0.0); 4 * n];
    for (j, f) in surface.frames.iter().enumerate() {
        let (e, h) = dipole_fields(src, f.position, medium)?;
        let ep = rotated_tangential_pair(e, f);
        let hp = rotated_tangential_pair(h, f);
        for c in 0..2 {
            out[2 * j + c] = ep[c];
            out[2 * n + 2 * j + c] = hp[c] * eta;
        }
    }
    Ok(out)
}

/// Analytic measurement vector of a dipole enclosed by the measurement surface.
pub fn synth_measurements(src: &DipoleSource, meas: &SurfaceGeometry, medium: &Medium) -> Result<MeasurementVector> {
    check_inside(src, meas.radius)?;
    Ok(MeasurementVector(tangential_fields(src, meas, medium)?))
}

/// Love equivalent currents `-M = n x E`, `eta J = eta n x H` of an interior dipole.
pub fn equivalent_currents_of(src: &DipoleSource, gamma: &SurfaceGeometry, medium: &Medium) -> Result<CurrentVector> {
    check_inside(src, gamma.radius)?;
    Ok(CurrentVector(tangential_fields(src, gamma, medium)?))
}

/// Constraint pairs from auxiliary dipoles: `X` holds their equivalent currents.
///
/// With [`ConsistencyPolicy::Project`] the right-hand sides are `R X`; with
/// `Reject` they are the analytic measurements, accepted only when they agree
/// with `R X`.
pub fn build_constraints(
    dipoles: &[DipoleSource],
    gamma: &SurfaceGeometry,
    meas: &SurfaceGeometry,
    medium: &Medium,
    r: &ComplexMatrix,
    policy: ConsistencyPolicy,
) -> Result<ConstraintSet> {
    if dipoles.len() > 2 * meas.len() {
        return Err(Error::InvalidArgument(format!(
            "{} constraint dipoles exceed 2 N_m = {}",
            dipoles.len(),
            2 * meas.len()
        )));
    }
    let mut xs = Vec::with_capacity(dipoles.len());
    let mut bs = Vec::with_capacity(dipoles.len());
    for d in dipoles {
        xs.push(equivalent_currents_of(d, gamma, medium)?.0);
        if policy == ConsistencyPolicy::Reject {
            bs.push(synth_measurements(d, meas, medium)?.0);
        }
    }
    let xtil = ComplexMatrix::from_columns(4 * gamma.len(), &xs)?;
    let btil = match policy {
        ConsistencyPolicy::Project => None,
        ConsistencyPolicy::Reject => Some(ComplexMatrix::from_columns(4 * meas.len(), &bs)?),
    };
    ConstraintSet::for_operator(r, xtil, btil, policy)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Truncated Moore-Penrose inverse.
    Mpp,
    /// `{1}`-inverse `A⁺ + (I - A⁺A) W + V (I - A A⁺)`.
    #[serde(rename = "one_inverse")]
    OneInv,
    /// `X B•`.
    #[serde(rename = "constraint_fit")]
    Fit,
    /// `R‡` built on the `{1}`-inverse.
    Constrained,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Mpp, Method::OneInv, Method::Fit, Method::Constrained];

    pub fn label(&self) -> &'static str {
        match self {
            Method::Mpp => "mpp",
            Method::OneInv => "one_inverse",
            Method::Fit => "constraint_fit",
            Method::Constrained => "constrained",
        }
    }
}

/// Parameters shared by all reconstruction methods.
#[derive(Clone, Debug)]
pub struct ReconstructionParams {
    /// Relative singular value cut-off of the Moore-Penrose inverse of `R`.
    pub svd_tol: f64,
    /// Relative cut-off used for `B•`.
    pub btil_tol: f64,
    pub constraints: ConstraintSet,
    /// Optional `(W, V)` for the `{1}`-inverse; `None` means `W = V = 0`.
    pub perturbation: Option<(ComplexMatrix, ComplexMatrix)>,
}

/// All pseudoinverses of one operator, built from a single SVD.
#[derive(Clone, Debug)]
pub struct Pseudoinverses {
    pub svd: SvdResult,
    pub mpp: ComplexMatrix,
    pub one_inverse: ComplexMatrix,
    pub fit: Option<ComplexMatrix>,
    pub constrained: ComplexMatrix,
}

impl Pseudoinverses {
    pub fn build(r: &ComplexMatrix, params: &ReconstructionParams) -> Result<Self> {
        Self::from_svd(r, svd(r)?, params)
    }

    pub fn from_svd(r: &ComplexMatrix, dec: SvdResult, params: &ReconstructionParams) -> Result<Self> {
        if !(params.svd_tol > 0.0 && params.svd_tol < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "svd tolerance must lie in (0, 1), got {}",
                params.svd_tol
            )));
        }
        let mpp = mpp_from_svd(&dec, params.svd_tol);
        let one_inverse = match &params.perturbation {
            Some((w, v)) => one_inverse_from_mpp(r, &mpp, w, v)?,
            None => mpp.clone(),
        };
        let fit = if params.constraints.is_empty() {
            None
        } else {
            Some(constraint_fit_pinv(&params.constraints, params.btil_tol)?)
        };
        let constrained = constrained_pinv(&one_inverse, &params.constraints, params.btil_tol)?;
        Ok(Self {
            svd: dec,
            mpp,
            one_inverse,
            fit,
            constrained,
        })
    }

    pub fn get(&self, method: Method) -> Result<&ComplexMatrix> {
        match method {
            Method::Mpp => Ok(&self.mpp),
            Method::OneInv => Ok(&self.one_inverse),
            Method::Fit => self.fit.as_ref().ok_or(Error::EmptyConstraints),
            Method::Constrained => Ok(&self.constrained),
        }
    }

    pub fn reconstruct(&self, b: &MeasurementVector, method: Method) -> Result<CurrentVector> {
        Ok(CurrentVector(self.get(method)?.mul_vec(b.as_slice())?))
    }
}

/// One-shot reconstruction `x = pinv(R) b` for the chosen method.
pub fn reconstruct(
    r: &ComplexMatrix,
    b: &MeasurementVector,
    method: Method,
    params: &ReconstructionParams,
) -> Result<CurrentVector> {
    Pseudoinverses::build(r, params)?.reconstruct(b, method)
}

/// `||R x - b|| / ||b||`.
pub fn measurement_residual(r: &ComplexMatrix, x: &CurrentVector, b: &MeasurementVector) -> Result<f64> {
    let rx = r.mul_vec(x.as_slice())?;
    let diff: Vec<C64> = rx.iter().zip(b.as_slice()).map(|(p, q)| p - q).collect();
    Ok(norm2(&diff) / norm2(b.as_slice()))
}

/// Tangential `n x E` pairs radiated by the currents `x` on `gamma` as point
/// sources at the nodes, sampled on `surface`. Accurate only well away from `gamma`.
pub fn collocation_tangential_e(
    x: &CurrentVector,
    gamma: &SurfaceGeometry,
    surface: &SurfaceGeometry,
    medium: &Medium,
) -> Result<Vec<C64>> {
    let ns = gamma.len();
    if x.len() != 4 * ns {
        return Err(Error::DimensionMismatch {
            op: "collocation_tangential_e",
            left_rows: x.len(),
            left_cols: 1,
            right_rows: 4 * ns,
            right_cols: 1,
        });
    }
    let k = medium.k();
    let xs = x.as_slice();
    // physical current vectors per node
    let nodes: Vec<(CVec3, CVec3)> = gamma
        .frames
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let along = |a: C64, b: C64| cadd(cscale(to_complex(f.t1), a), cscale(to_complex(f.t2), b));
            (
                along(xs[2 * i], xs[2 * i + 1]),
                along(xs[2 * ns + 2 * i], xs[2 * ns + 2 * i + 1]),
            )
        })
        .collect();
    let mut out = Vec::with_capacity(2 * surface.len());
    for obs in &surface.frames {
        let mut acc = [C64::new(0.0, 0.0); 3];
        for ((f, (u, w)), &weight) in gamma.frames.iter().zip(&nodes).zip(&gamma.weights) {
            let pk = PairKernel::new(f.position, obs.position, k)?;
            // n x E = -K(u) + T(w) = n x [electric(w) - magnetic(u)]
            acc = cadd(acc, cscale(csub(pk.electric(*w), pk.magnetic(*u)), weight.into()));
        }
        let pair = rotated_tangential_pair(acc, obs);
        out.extend_from_slice(&pair);
    }
    Ok(out)
}

/// Tangential `n x E` of an analytic dipole on `surface`.
pub fn dipole_tangential_e(src: &DipoleSource, surface: &SurfaceGeometry, medium: &Medium) -> Result<Vec<C64>> {
    let mut out = Vec::with_capacity(2 * surface.len());
    for f in &surface.frames {
        let (e, _) = dipole_fields(src, f.position, medium)?;
        out.extend_from_slice(&rotated_tangential_pair(e, f));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SurfaceError {
    pub label: String,
    pub radius: f64,
    pub relative_error: f64,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ErrorReport {
    pub surfaces: Vec<SurfaceError>,
}

impl ErrorReport {
    pub fn get(&self, label: &str) -> Option<f64> {
        self.surfaces
            .iter()
            .find(|s| s.label == label)
            .map(|s| s.relative_error)
    }
}

/// Relative L2 error of tangential `E` radiated by `x` against the analytic field
/// of `truth`, per labelled evaluation surface.
pub fn reconstruction_error(
    x: &CurrentVector,
    truth: &DipoleSource,
    gamma: &SurfaceGeometry,
    eval_surfaces: &[(String, SurfaceGeometry)],
    medium: &Medium,
) -> Result<ErrorReport> {
    let interp = CurrentInterpolant::for_surface(gamma)?;
    Ok(reconstruction_errors(&[x], truth, &interp, eval_surfaces, medium)?.remove(0))
}

/// [`reconstruction_error`] for several current vectors sharing one kernel sweep.
pub fn reconstruction_errors(
    xs: &[&CurrentVector],
    truth: &DipoleSource,
    interp: &CurrentInterpolant,
    eval_surfaces: &[(String, SurfaceGeometry)],
    medium: &Medium,
) -> Result<Vec<ErrorReport>> {
    let slices: Vec<&[C64]> = xs.iter().map(|x| x.as_slice()).collect();
    let mut reports = vec![ErrorReport { surfaces: Vec::new() }; xs.len()];
    for (label, surface) in eval_surfaces {
        let exact = dipole_tangential_e(truth, surface, medium)?;
        let fields = radiate(interp, &slices, surface, medium.k())?;
        for (report, approx) in reports.iter_mut().zip(&fields) {
            report.surfaces.push(SurfaceError {
                label: label.clone(),
                radius: surface.radius,
                relative_error: relative_l2(approx, &exact),
            });
        }
    }
    Ok(reports)
}

/// `||a - b|| / ||b||`.
pub fn relative_l2(a: &[C64], b: &[C64]) -> f64 {
    let diff: Vec<C64> = a.iter().zip(b).map(|(p, q)| p - q).collect();
    norm2(&diff) / norm2(b)
}

/// Geometry and operator of the full experiment.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub medium: Medium,
    pub gamma: SurfaceGeometry,
    pub meas: SurfaceGeometry,
    pub r: ComplexMatrix,
}

impl Scenario {
    /// Spheres of `n_s` and `n_m` Fibonacci nodes; the measurement sphere sits
    /// `distance_wavelengths` wavelengths outside the equivalent sphere.
    pub fn new(
        frequency: f64,
        gamma_radius: f64,
        distance_wavelengths: f64,
        n_s: usize,
        n_m: usize,
    ) -> Result<Self> {
        let medium = Medium::vacuum(frequency)?;
        if !(gamma_radius > 0.0 && distance_wavelengths > 0.0) || n_s < 4 || n_m < 4 {
            return Err(Error::InvalidArgument(format!(
                "invalid scenario geometry: radius {gamma_radius}, distance {distance_wavelengths}, \
                 N_s {n_s}, N_m {n_m}"
            )));
        }
        let gamma = fibonacci_sphere(n_s, gamma_radius, SurfaceKind::Equivalent);
        let meas_radius = gamma_radius + distance_wavelengths * medium.wavelength();
        let meas = fibonacci_sphere(n_m, meas_radius, SurfaceKind::Measurement);
        let r = assemble_r(&gamma, &meas, &medium)?;
        Ok(Self { medium, gamma, meas, r })
    }

    pub fn constraints(&self, dipoles: &[DipoleSource], policy: ConsistencyPolicy) -> Result<ConstraintSet> {
        build_constraints(dipoles, &self.gamma, &self.meas, &self.medium, &self.r, policy)
    }

    pub fn measurements(&self, src: &DipoleSource) -> Result<MeasurementVector> {
        check_inside(src, self.gamma.radius)?;
        synth_measurements(src, &self.meas, &self.medium)
    }

    /// Near (`near_factor` times the equivalent radius), measurement and far
    /// (`far_wavelengths` wavelengths) evaluation spheres.
    pub fn evaluation_surfaces(&self, n_eval: usize, near_factor: f64, far_wavelengths: f64) -> Vec<(String, SurfaceGeometry)> {
        let near = fibonacci_sphere(n_eval, near_factor * self.gamma.radius, SurfaceKind::Evaluation);
        let far = fibonacci_sphere(n_eval, far_wavelengths * self.medium.wavelength(), SurfaceKind::Evaluation);
        vec![
            ("near".to_string(), near),
            ("measurement".to_string(), self.meas.clone()),
            ("far".to_string(), far),
        ]
    }

    /// `R X` for arbitrary current columns.
    pub fn radiate(&self, currents: &ComplexMatrix) -> Result<ComplexMatrix> {
        matmul(&self.r, currents)
    }
}

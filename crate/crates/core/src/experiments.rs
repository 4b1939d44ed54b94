//! The three experiments run by the `consrc` binary: Penrose residuals of every
//! pseudoinverse, per-mode spectral gains, and dipole reconstruction errors.

use std::path::PathBuf;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::{Experiment, RunConfig};
use crate::error::Result;
use crate::geometry::{norm, sub, Vec3};
use crate::modes::{
    modal_gain_from_radiated, modal_spectrum, mode_current_matrix, orthonormalize_columns,
    subspace_coverage, ModalIndex, Polarization,
};
use crate::numerics::{matmul, norm2, random_gaussian, random_rank, svd, ComplexMatrix, SvdResult};
use crate::pinv::{
    constrained_pinv, constraint_fit_pinv, mp_residuals, mpp, one_inverse_from_mpp, ConsistencyPolicy,
    ConstraintSet, MpResiduals,
};
use crate::radiation::CurrentInterpolant;
use crate::report::{num, write_json, write_text, CsvTable, JSON_SCHEMA_VERSION};
use crate::scenario::{
    measurement_residual, reconstruction_errors, MeasurementVector, Method, Pseudoinverses,
    ReconstructionParams, Scenario,
};

/// Relative cut-off of the Moore-Penrose inverse of the random test systems.
pub const RANDOM_SYSTEM_TOL: f64 = 1e-10;
/// Modes whose constraint-span fraction reaches this are counted as covered.
pub const COVERAGE_THRESHOLD: f64 = 1e-3;
/// A degree is past the truncation knee once every MPP gain in it is below this.
pub const KNEE_GAIN: f64 = 0.5;
/// Constraint dipoles within this many equivalent radii of the truth are local.
pub const LOCAL_CONSTRAINT_RADIUS: f64 = 0.3;

/// Scenario operator and its SVD, shared by several runs on one geometry.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub scenario: Scenario,
    pub svd: SvdResult,
}

impl Prepared {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        let scenario = Scenario::new(cfg.frequency, cfg.gamma_radius, cfg.distance_wavelengths, cfg.n_s, cfg.n_m)?;
        let svd = svd(&scenario.r)?;
        Ok(Self { scenario, svd })
    }

    fn constraints(&self, dipoles: &[crate::em::DipoleSource], policy: ConsistencyPolicy) -> Result<ConstraintSet> {
        if dipoles.is_empty() {
            let (m, n) = self.scenario.r.shape();
            return Ok(ConstraintSet::empty(n, m));
        }
        self.scenario.constraints(dipoles, policy)
    }

    fn pseudoinverses(&self, cfg: &RunConfig, tol: f64, constraints: ConstraintSet, rng: &mut ChaCha8Rng) -> Result<Pseudoinverses> {
        let (m, n) = self.scenario.r.shape();
        let perturbation = (cfg.one_inverse_scale > 0.0).then(|| {
            let s = C64::from(cfg.one_inverse_scale);
            (random_gaussian(n, m, rng).scale(s), random_gaussian(n, m, rng).scale(s))
        });
        let params = ReconstructionParams {
            svd_tol: tol,
            btil_tol: cfg.btil_tol,
            constraints,
            perturbation,
        };
        Pseudoinverses::from_svd(&self.scenario.r, self.svd.clone(), &params)
    }
}

/// One pass/fail test on a scalar. `binding` checks set the exit status.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// `"<"` or `">="`.
    pub relation: String,
    pub threshold: f64,
    pub passed: bool,
    pub binding: bool,
}

impl Check {
    fn below(name: &str, value: f64, threshold: f64, binding: bool) -> Self {
        Self {
            name: name.into(),
            value,
            relation: "<".into(),
            threshold,
            passed: value < threshold,
            binding,
        }
    }

    fn at_least(name: &str, value: f64, threshold: f64, binding: bool) -> Self {
        Self {
            name: name.into(),
            value,
            relation: ">=".into(),
            threshold,
            passed: value >= threshold,
            binding,
        }
    }

    pub fn failure(&self) -> Option<String> {
        (self.binding && !self.passed).then(|| {
            format!("{}: {:e} is not {} {:e}", self.name, self.value, self.relation, self.threshold)
        })
    }
}

fn failures(checks: &[Check]) -> Vec<String> {
    checks.iter().filter_map(Check::failure).collect()
}

/// Files written by a run and the binding checks that failed.
#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub failures: Vec<String>,
}

/// Runs `cfg.experiment` and writes its outputs (plus the effective config) to `cfg.out_dir`.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let mut out = match cfg.experiment {
        Experiment::Properties => run_properties(cfg)?,
        Experiment::Spectrum => run_spectrum(cfg)?,
        Experiment::Reconstruct => run_reconstruct(cfg)?,
    };
    out.files.push(write_text(&cfg.out_dir, "config.toml", &cfg.to_toml())?);
    Ok(out)
}

// ---------------------------------------------------------------- properties

#[derive(Clone, Debug, PartialEq)]
pub struct PropertyRow {
    pub case: &'static str,
    pub index: usize,
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub method: Method,
    pub residuals: MpResiduals,
    /// Which residuals are bound: `"r1-r4"`, `"r1"`, `"r2"` or `"none"`.
    pub bound: &'static str,
    pub threshold: f64,
}

impl PropertyRow {
    pub fn passed(&self) -> bool {
        let r = self.residuals.as_array();
        match self.bound {
            "r1-r4" => r.iter().all(|&v| v < self.threshold),
            "r1" => r[0] < self.threshold,
            "r2" => r[1] < self.threshold,
            _ => true,
        }
    }
}

fn binding(random: bool, method: Method) -> (&'static str, f64) {
    match (random, method) {
        (true, Method::Mpp) => ("r1-r4", 1e-10),
        (true, Method::OneInv) => ("r1", 1e-10),
        (_, Method::Fit) => ("r2", 1e-8),
        (_, Method::Constrained) => ("r1", 1e-8),
        (false, _) => ("none", 0.0),
    }
}

fn property_rows(
    case: &'static str,
    index: usize,
    a: &ComplexMatrix,
    rank: usize,
    pinvs: &[(Method, &ComplexMatrix)],
) -> Result<Vec<PropertyRow>> {
    pinvs
        .iter()
        .map(|&(method, p)| {
            let (bound, threshold) = binding(case == "random", method);
            Ok(PropertyRow {
                case,
                index,
                rows: a.rows(),
                cols: a.cols(),
                rank,
                method,
                residuals: mp_residuals(a, p)?,
                bound,
                threshold,
            })
        })
        .collect()
}

/// Penrose residuals over `cfg.properties_trials` random systems of random
/// shape and rank, each with a random `{1}`-inverse and up to three random
/// constraint pairs.
pub fn random_property_rows(cfg: &RunConfig) -> Result<Vec<PropertyRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::new();
    for t in 0..cfg.properties_trials {
        let m = rng.random_range(1..=cfg.properties_max_rows);
        let n = rng.random_range(1..=cfg.properties_max_cols);
        let rank = rng.random_range(0..=m.min(n));
        let magnitude = 10f64.powf(rng.random_range(-3.0..3.0));
        let a = random_rank(m, n, rank, &mut rng).scale(C64::from(magnitude));
        let ap = mpp(&a, RANDOM_SYSTEM_TOL)?;
        // W and V on the scale of A⁺ keep roundoff in A W A comparable to that of A⁺
        let fro = a.frobenius();
        let wv_scale = C64::from(if fro > 0.0 { 1.0 / fro } else { 1.0 });
        let w = random_gaussian(n, m, &mut rng).scale(wv_scale);
        let v = random_gaussian(n, m, &mut rng).scale(wv_scale);
        let one = one_inverse_from_mpp(&a, &ap, &w, &v)?;
        let mut list: Vec<(Method, ComplexMatrix)> = vec![(Method::Mpp, ap), (Method::OneInv, one.clone())];
        let p = rank.min(3);
        if p > 0 {
            let xtil = random_gaussian(n, p, &mut rng);
            let cs = ConstraintSet::for_operator(&a, xtil, None, ConsistencyPolicy::Project)?;
            list.push((Method::Fit, constraint_fit_pinv(&cs, cfg.btil_tol)?));
            list.push((Method::Constrained, constrained_pinv(&one, &cs, cfg.btil_tol)?));
        }
        let refs: Vec<(Method, &ComplexMatrix)> = list.iter().map(|(k, p)| (*k, p)).collect();
        rows.extend(property_rows("random", t, &a, rank, &refs)?);
    }
    Ok(rows)
}

/// Penrose residuals of the scenario operator at `cfg.properties_svd_tol`.
pub fn scenario_property_rows(cfg: &RunConfig, prepared: &Prepared) -> Result<Vec<PropertyRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5ce9_a710);
    let cs = prepared.constraints(&cfg.analysis_dipoles()?, cfg.consistency)?;
    let p = prepared.pseudoinverses(cfg, cfg.properties_svd_tol, cs, &mut rng)?;
    let rank = crate::numerics::truncated_rank(&p.svd.s, cfg.properties_svd_tol);
    let mut list = vec![(Method::Mpp, &p.mpp), (Method::OneInv, &p.one_inverse)];
    if let Some(fit) = &p.fit {
        list.push((Method::Fit, fit));
    }
    list.push((Method::Constrained, &p.constrained));
    property_rows("scenario", 0, &prepared.scenario.r, rank, &list)
}

pub fn properties_table(rows: &[PropertyRow]) -> CsvTable {
    let mut t = CsvTable::new(
        "properties",
        &["case", "index", "rows", "cols", "rank", "method", "r1", "r2", "r3", "r4", "bound", "threshold", "passed"],
    )
    .note("case: random (seeded small system) or scenario (assembled radiation operator)")
    .note("method: mpp | one_inverse | constraint_fit | constrained")
    .note("r1 = |A P A - A|/|A|, r2 = |P A P - P|/|P|, r3 = |(P A)* - P A|/|P A|, r4 = |(A P)* - A P|/|A P| (Frobenius)")
    .note("bound: residuals required below threshold (r1-r4, r1, r2 or none); passed: true or false");
    for r in rows {
        let res = r.residuals.as_array();
        t.push(vec![
            r.case.to_string(),
            r.index.to_string(),
            r.rows.to_string(),
            r.cols.to_string(),
            r.rank.to_string(),
            r.method.label().to_string(),
            num(res[0]),
            num(res[1]),
            num(res[2]),
            num(res[3]),
            r.bound.to_string(),
            num(r.threshold),
            r.passed().to_string(),
        ]);
    }
    t
}

pub fn run_properties(cfg: &RunConfig) -> Result<RunOutput> {
    let mut rows = random_property_rows(cfg)?;
    rows.extend(scenario_property_rows(cfg, &Prepared::new(cfg)?)?);
    let failures = rows
        .iter()
        .filter(|r| !r.passed())
        .map(|r| {
            format!(
                "{} #{} {}: residuals {:?} exceed {:e} on {}",
                r.case,
                r.index,
                r.method.label(),
                r.residuals.as_array(),
                r.threshold,
                r.bound
            )
        })
        .collect();
    let file = properties_table(&rows).write(&cfg.out_dir, "properties.csv")?;
    Ok(RunOutput { files: vec![file], failures })
}

// ------------------------------------------------------------------ spectrum

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeGain {
    pub n: usize,
    pub m: i64,
    pub pol: Polarization,
    pub magnitude: f64,
    /// Fraction of the mode direction inside the span of the constraint currents.
    pub coverage: f64,
    pub mpp: f64,
    pub one_inverse: f64,
    pub constraint_fit: f64,
    pub constrained: f64,
}

/// m-averaged gains of one `(n, pol)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegreeGain {
    pub n: usize,
    pub pol: Polarization,
    pub magnitude: f64,
    pub mpp: f64,
    pub one_inverse: f64,
    pub constraint_fit: f64,
    pub constrained: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeRatio {
    pub n: usize,
    pub m: i64,
    pub pol: Polarization,
    pub coverage: f64,
    pub mpp: f64,
    pub constrained: f64,
    pub ratio: f64,
}

impl ModeRatio {
    fn of(g: &ModeGain) -> Self {
        Self {
            n: g.n,
            m: g.m,
            pol: g.pol,
            coverage: g.coverage,
            mpp: g.mpp,
            constrained: g.constrained,
            ratio: g.constrained / g.mpp,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSummary {
    pub schema_version: u32,
    pub experiment: String,
    pub ka: f64,
    pub k_rm: f64,
    pub max_degree: usize,
    pub modes: usize,
    pub svd_tol: f64,
    pub rank: usize,
    pub constraint_count: usize,
    pub coverage_threshold: f64,
    /// First degree whose MPP gains are all below `KNEE_GAIN`.
    pub knee: Option<usize>,
    pub max_mpp_gain_past_knee: f64,
    pub best_enhancement: Option<ModeRatio>,
    pub worst_propagating: Option<ModeRatio>,
    pub covered_evanescent_modes: usize,
    /// Covered evanescent modes where the constrained gain is below the MPP gain.
    pub covered_evanescent_below_mpp: usize,
    pub checks: Vec<Check>,
}

#[derive(Clone, Debug)]
pub struct SpectrumAnalysis {
    pub modes: Vec<ModeGain>,
    pub degrees: Vec<DegreeGain>,
    pub summary: SpectrumSummary,
}

/// Gains of every discrete mode up to the sampling degree of the grid.
///
/// Mode directions are orthonormalized in order of increasing degree, so a
/// sampled harmonic only counts the part not already carried by lower degrees.
pub fn spectrum_analysis(cfg: &RunConfig, prepared: &Prepared) -> Result<SpectrumAnalysis> {
    let sc = &prepared.scenario;
    let k = sc.medium.k();
    let tol = cfg.spectrum_svd_tol;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let cs = prepared.constraints(&cfg.analysis_dipoles()?, cfg.consistency)?;
    let coverage_span = cs.xtil().clone();
    let p = prepared.pseudoinverses(cfg, tol, cs, &mut rng)?;

    let l = if cfg.spectrum_n_max > 0 {
        cfg.spectrum_n_max
    } else {
        CurrentInterpolant::default_degree(sc.gamma.len())
    };
    let indices = ModalIndex::all(l);
    let modes = orthonormalize_columns(&mode_current_matrix(&indices, &sc.gamma, k)?)?;
    let radiated = matmul(&sc.r, &modes)?;
    let gain = |pinv: &ComplexMatrix| modal_gain_from_radiated(pinv, &radiated, &modes);
    let g_mpp = gain(&p.mpp)?;
    let g_one = gain(&p.one_inverse)?;
    let g_fit = gain(p.fit.as_ref().expect("spectrum constraints are non-empty"))?;
    let g_con = gain(&p.constrained)?;
    let coverage = subspace_coverage(&modes, &coverage_span, 1e-10)?;
    let spectrum = modal_spectrum(sc.gamma.radius, sc.meas.radius, k, l)?;

    let mode_gains: Vec<ModeGain> = indices
        .iter()
        .enumerate()
        .map(|(c, idx)| ModeGain {
            n: idx.n,
            m: idx.m,
            pol: idx.pol,
            magnitude: spectrum.magnitude(idx.n, idx.pol).unwrap_or(f64::NAN),
            coverage: coverage[c],
            mpp: g_mpp[c],
            one_inverse: g_one[c],
            constraint_fit: g_fit[c],
            constrained: g_con[c],
        })
        .collect();

    let mut degrees = Vec::new();
    for n in 1..=l {
        for pol in [Polarization::TE, Polarization::TM] {
            let sel: Vec<&ModeGain> = mode_gains.iter().filter(|g| g.n == n && g.pol == pol).collect();
            let mean = |f: fn(&ModeGain) -> f64| sel.iter().map(|g| f(g)).sum::<f64>() / sel.len() as f64;
            degrees.push(DegreeGain {
                n,
                pol,
                magnitude: sel[0].magnitude,
                mpp: mean(|g| g.mpp),
                one_inverse: mean(|g| g.one_inverse),
                constraint_fit: mean(|g| g.constraint_fit),
                constrained: mean(|g| g.constrained),
            });
        }
    }

    let knee = (1..=l).find(|&n| {
        mode_gains
            .iter()
            .filter(|g| g.n == n)
            .all(|g| g.mpp < KNEE_GAIN)
    });
    let summary = summarize_spectrum(cfg, prepared, &mode_gains, &spectrum, knee, l, coverage_span.cols());
    Ok(SpectrumAnalysis {
        modes: mode_gains,
        degrees,
        summary,
    })
}

fn summarize_spectrum(
    cfg: &RunConfig,
    prepared: &Prepared,
    modes: &[ModeGain],
    spectrum: &crate::modes::ModalSpectrum,
    knee: Option<usize>,
    l: usize,
    constraint_count: usize,
) -> SpectrumSummary {
    let sc = &prepared.scenario;
    let k = sc.medium.k();
    let knee_n = knee.unwrap_or(l + 1);
    let past: Vec<&ModeGain> = modes.iter().filter(|g| g.n >= knee_n).collect();
    let max_past = past.iter().map(|g| g.mpp).fold(0.0, f64::max);
    let covered: Vec<&&ModeGain> = past.iter().filter(|g| g.coverage >= COVERAGE_THRESHOLD).collect();
    let best = covered
        .iter()
        .max_by(|a, b| (a.constrained / a.mpp).total_cmp(&(b.constrained / b.mpp)))
        .map(|g| ModeRatio::of(g));
    let worst = modes
        .iter()
        .filter(|g| g.n < knee_n)
        .min_by(|a, b| (a.constrained / a.mpp).total_cmp(&(b.constrained / b.mpp)))
        .map(ModeRatio::of);
    let below = covered.iter().filter(|g| g.constrained < g.mpp).count();

    let mut checks = vec![Check::at_least(
        "truncation knee inside analysed degrees",
        if knee.is_some() { 1.0 } else { 0.0 },
        1.0,
        true,
    )];
    if knee.is_some() {
        checks.push(Check::below("mpp gain past knee", max_past, 1e-3, true));
        checks.push(Check::at_least(
            "best constrained/mpp gain ratio on covered evanescent modes",
            best.as_ref().map_or(0.0, |b| b.ratio),
            10.0,
            true,
        ));
        checks.push(Check::at_least(
            "worst constrained/mpp gain ratio on propagating modes",
            worst.as_ref().map_or(1.0, |w| w.ratio),
            0.99,
            true,
        ));
        let decreasing = (knee_n..l).all(|n| {
            spectrum.magnitude(n + 1, Polarization::TE) < spectrum.magnitude(n, Polarization::TE)
        });
        checks.push(Check::at_least(
            "modal magnitudes decreasing past knee",
            if decreasing { 1.0 } else { 0.0 },
            1.0,
            true,
        ));
        checks.push(Check::below(
            "covered evanescent modes with constrained gain below mpp",
            below as f64,
            1.0,
            false,
        ));
    }
    SpectrumSummary {
        schema_version: JSON_SCHEMA_VERSION,
        experiment: "spectrum".into(),
        ka: k * sc.gamma.radius,
        k_rm: k * sc.meas.radius,
        max_degree: l,
        modes: modes.len(),
        svd_tol: cfg.spectrum_svd_tol,
        rank: crate::numerics::truncated_rank(&prepared.svd.s, cfg.spectrum_svd_tol),
        constraint_count,
        coverage_threshold: COVERAGE_THRESHOLD,
        knee,
        max_mpp_gain_past_knee: max_past,
        best_enhancement: best,
        worst_propagating: worst,
        covered_evanescent_modes: covered.len(),
        covered_evanescent_below_mpp: below,
        checks,
    }
}

const GAIN_NOTE: &str = "gain = |x* P R x| / |x|^2 for the discrete mode direction x and pseudoinverse P";

pub fn spectrum_tables(a: &SpectrumAnalysis) -> (CsvTable, CsvTable) {
    let mut deg = CsvTable::new(
        "spectrum",
        &["n", "pol", "magnitude", "gain_mpp", "gain_one_inverse", "gain_constraint_fit", "gain_constrained"],
    )
    .note("n: degree; pol: TE or TM")
    .note("magnitude: analytic transfer magnitude of a unit surface-current mode to the measurement sphere")
    .note(GAIN_NOTE)
    .note("gain_*: mean over the orders m = -n..n");
    for d in &a.degrees {
        deg.push(vec![
            d.n.to_string(),
            d.pol.label().to_string(),
            num(d.magnitude),
            num(d.mpp),
            num(d.one_inverse),
            num(d.constraint_fit),
            num(d.constrained),
        ]);
    }
    let mut modes = CsvTable::new(
        "spectrum_modes",
        &[
            "n", "m", "pol", "magnitude", "coverage", "gain_mpp", "gain_one_inverse", "gain_constraint_fit",
            "gain_constrained",
        ],
    )
    .note("n, m, pol: vector spherical harmonic index")
    .note("coverage: fraction of |x|^2 inside the span of the constraint currents")
    .note(GAIN_NOTE);
    for g in &a.modes {
        modes.push(vec![
            g.n.to_string(),
            g.m.to_string(),
            g.pol.label().to_string(),
            num(g.magnitude),
            num(g.coverage),
            num(g.mpp),
            num(g.one_inverse),
            num(g.constraint_fit),
            num(g.constrained),
        ]);
    }
    (deg, modes)
}

pub fn run_spectrum(cfg: &RunConfig) -> Result<RunOutput> {
    let analysis = spectrum_analysis(cfg, &Prepared::new(cfg)?)?;
    let (deg, modes) = spectrum_tables(&analysis);
    let files = vec![
        deg.write(&cfg.out_dir, "spectrum.csv")?,
        modes.write(&cfg.out_dir, "spectrum_modes.csv")?,
        write_json(&cfg.out_dir, "spectrum_summary.json", &analysis.summary)?,
    ];
    Ok(RunOutput {
        files,
        failures: failures(&analysis.summary.checks),
    })
}

// --------------------------------------------------------------- reconstruct

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSummary {
    pub method: Method,
    pub near_error: f64,
    pub measurement_error: f64,
    pub far_error: f64,
    /// `|R x - b| / |b|`.
    pub measurement_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructSummary {
    pub schema_version: u32,
    pub experiment: String,
    pub frequency: f64,
    pub wavelength: f64,
    pub ka: f64,
    pub gamma_radius: f64,
    pub measurement_radius: f64,
    pub near_radius: f64,
    pub far_radius: f64,
    pub n_s: usize,
    pub n_m: usize,
    pub svd_tol: f64,
    pub rank: usize,
    pub truth_position: Vec3,
    pub constraint_count: usize,
    /// Largest constraint-to-truth distance in equivalent radii.
    pub constraint_spread: f64,
    pub noise: f64,
    pub methods: Vec<MethodSummary>,
    pub checks: Vec<Check>,
}

impl ReconstructSummary {
    pub fn method(&self, method: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == method)
    }
}

/// Reconstructs the truth dipole of `cfg` with every method and scores the
/// radiated fields on the near, measurement and far spheres.
pub fn reconstruct_summary(cfg: &RunConfig, prepared: &Prepared) -> Result<ReconstructSummary> {
    let sc = &prepared.scenario;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let truth = cfg.truth()?;
    let mut b = sc.measurements(&truth)?;
    if cfg.noise > 0.0 {
        let sigma = cfg.noise * norm2(b.as_slice()) / (2.0 * b.len() as f64).sqrt();
        for z in b.0.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *z += C64::new(re, im) * sigma;
        }
    }
    let b = MeasurementVector::new(b.0)?;
    let dipoles = cfg.constraint_dipoles()?;
    let spread = dipoles
        .iter()
        .map(|d| norm(sub(d.position, truth.position)) / cfg.gamma_radius)
        .fold(0.0, f64::max);
    let cs = prepared.constraints(&dipoles, cfg.consistency)?;
    let p = prepared.pseudoinverses(cfg, cfg.svd_tol, cs, &mut rng)?;

    let methods: Vec<Method> = Method::ALL
        .into_iter()
        .filter(|m| *m != Method::Fit || p.fit.is_some())
        .collect();
    let xs = methods
        .iter()
        .map(|&m| p.reconstruct(&b, m))
        .collect::<Result<Vec<_>>>()?;
    let surfaces = sc.evaluation_surfaces(cfg.n_eval, cfg.near_factor, cfg.far_wavelengths);
    let interp = CurrentInterpolant::for_surface(&sc.gamma)?;
    let refs: Vec<_> = xs.iter().collect();
    let reports = reconstruction_errors(&refs, &truth, &interp, &surfaces, &sc.medium)?;
    let mut summaries = Vec::new();
    for ((&method, x), report) in methods.iter().zip(&xs).zip(&reports) {
        let get = |label: &str| report.get(label).unwrap_or(f64::NAN);
        summaries.push(MethodSummary {
            method,
            near_error: get("near"),
            measurement_error: get("measurement"),
            far_error: get("far"),
            measurement_residual: measurement_residual(&sc.r, x, &b)?,
        });
    }

    let mut checks = Vec::new();
    let find = |m: Method| summaries.iter().find(|s| s.method == m);
    if let (Some(mp), Some(con)) = (find(Method::Mpp), find(Method::Constrained)) {
        checks.push(Check::below(
            "constrained measurement residual",
            con.measurement_residual,
            1e-6,
            cfg.noise == 0.0,
        ));
        if !dipoles.is_empty() {
            let local = spread <= LOCAL_CONSTRAINT_RADIUS;
            checks.push(Check::below(
                "far error difference constrained vs mpp",
                (con.far_error - mp.far_error).abs(),
                0.01,
                local,
            ));
            checks.push(Check::below(
                "near error ratio constrained / mpp",
                con.near_error / mp.near_error,
                1.0,
                local,
            ));
        }
    }
    Ok(ReconstructSummary {
        schema_version: JSON_SCHEMA_VERSION,
        experiment: "reconstruct".into(),
        frequency: cfg.frequency,
        wavelength: sc.medium.wavelength(),
        ka: sc.medium.k() * sc.gamma.radius,
        gamma_radius: sc.gamma.radius,
        measurement_radius: sc.meas.radius,
        near_radius: surfaces[0].1.radius,
        far_radius: surfaces[2].1.radius,
        n_s: cfg.n_s,
        n_m: cfg.n_m,
        svd_tol: cfg.svd_tol,
        rank: crate::numerics::truncated_rank(&prepared.svd.s, cfg.svd_tol),
        truth_position: truth.position,
        constraint_count: dipoles.len(),
        constraint_spread: spread,
        noise: cfg.noise,
        methods: summaries,
        checks,
    })
}

pub fn reconstruct_table(s: &ReconstructSummary) -> CsvTable {
    let mut t = CsvTable::new(
        "reconstruct",
        &["method", "near_error", "measurement_error", "far_error", "measurement_residual"],
    )
    .note("*_error: relative L2 error of tangential E radiated by the reconstructed currents against the analytic dipole field")
    .note(&format!(
        "surface radii (m): near {}, measurement {}, far {}",
        num(s.near_radius),
        num(s.measurement_radius),
        num(s.far_radius)
    ))
    .note("measurement_residual: |R x - b| / |b|");
    for m in &s.methods {
        t.push(vec![
            m.method.label().to_string(),
            num(m.near_error),
            num(m.measurement_error),
            num(m.far_error),
            num(m.measurement_residual),
        ]);
    }
    t
}

pub fn run_reconstruct(cfg: &RunConfig) -> Result<RunOutput> {
    let summary = reconstruct_summary(cfg, &Prepared::new(cfg)?)?;
    let files = vec![
        reconstruct_table(&summary).write(&cfg.out_dir, "reconstruct.csv")?,
        write_json(&cfg.out_dir, "reconstruct_summary.json", &summary)?,
    ];
    Ok(RunOutput {
        files,
        failures: failures(&summary.checks),
    })
}

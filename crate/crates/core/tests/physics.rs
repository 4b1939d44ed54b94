use consrc::config::{Layout, RunConfig};
use consrc::em::{dipole_fields, DipoleSource, Medium};
use consrc::geometry::{cnorm, normalize, scale};
use consrc::modes::{
    default_n_max, modal_spectrum, orthonormalize_columns, sph_bessel_j,
    sph_bessel_y, vsh_tangential, ModalIndex, Polarization,
};
use consrc::numerics::{matmul, norm2, svd, ComplexMatrix};
use consrc::pinv::ConsistencyPolicy;
use consrc::scenario::{equivalent_currents_of, relative_l2, MeasurementVector, Method, Pseudoinverses, ReconstructionParams, Scenario};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn scenario(n: usize) -> Scenario {
    Scenario::new(5e9, 0.04, 2.0, n, n).unwrap()
}

#[test]
fn far_zone_wave_impedance_within_two_percent() {
    let medium = Medium::vacuum(5e9).unwrap();
    let src = DipoleSource::electric([0.0, 0.0, 0.01], [1.0, 0.5, 0.0]).unwrap();
    for dir in [[1.0, 0.0, 0.0], [0.3, -0.8, 0.5], [0.0, 1.0, 1.0]] {
        let r = scale(normalize(dir), 20.0 * medium.wavelength());
        let (e, h) = dipole_fields(&src, r, &medium).unwrap();
        let ratio = cnorm(e) / (medium.eta() * cnorm(h));
        assert!((ratio - 1.0).abs() < 0.02, "{ratio}");
    }
}

fn vsh_basis(sc: &Scenario, l: usize) -> (Vec<ModalIndex>, ComplexMatrix) {
    let idx = ModalIndex::all(l);
    let frames = &sc.gamma.frames;
    let cols: Vec<Vec<C64>> = idx
        .iter()
        .map(|&i| {
            frames
                .iter()
                .flat_map(|f| {
                    let n = f.normal;
                    let theta = n[2].clamp(-1.0, 1.0).acos();
                    let phi = n[1].atan2(n[0]);
                    let v = vsh_tangential(i, theta, phi);
                    [f.t1, f.t2].map(|t| v[0] * t[0] + v[1] * t[1] + v[2] * t[2])
                })
                .collect()
        })
        .collect();
    let m = ComplexMatrix::from_columns(2 * frames.len(), &cols).unwrap();
    (idx, orthonormalize_columns(&m).unwrap())
}

#[test]
fn centred_dipole_is_degree_one() {
    let sc = scenario(200);
    let (idx, basis) = vsh_basis(&sc, 6);
    for moment in [[0.0, 0.0, 1.0], [1.0, -0.5, 0.3]] {
        let src = DipoleSource::electric([0.0; 3], moment).unwrap();
        let x = equivalent_currents_of(&src, &sc.gamma, &sc.medium).unwrap();
        let ns2 = 2 * sc.gamma.len();
        let (u, w) = x.0.split_at(ns2);
        let halves = ComplexMatrix::from_columns(ns2, &[u.to_vec(), w.to_vec()]).unwrap();
        let coeffs = matmul(&basis.adjoint(), &halves).unwrap();
        let total: f64 = x.0.iter().map(|z| z.norm_sqr()).sum();
        let degree_one: f64 = (0..idx.len())
            .filter(|&c| idx[c].n == 1)
            .map(|c| coeffs.get(c, 0).norm_sqr() + coeffs.get(c, 1).norm_sqr())
            .sum();
        assert!(degree_one / total > 0.99, "{}", degree_one / total);
    }
}

#[test]
fn love_currents_radiate_the_measured_field() {
    let sc = scenario(400);
    let src = DipoleSource::electric([0.004, -0.01, 0.015], [0.2, 1.0, -0.4]).unwrap();
    let x = equivalent_currents_of(&src, &sc.gamma, &sc.medium).unwrap();
    let b = sc.measurements(&src).unwrap();
    let rx = sc.r.mul_vec(x.as_slice()).unwrap();
    let err = relative_l2(&rx, b.as_slice());
    assert!(err < 0.05, "{err}");
    assert!(err < 1e-4, "quadrature regressed: {err}");
}

#[test]
fn operator_is_ill_posed_at_200_nodes() {
    let sc = scenario(200);
    let s = svd(&sc.r).unwrap().s;
    let decades = (s[0] / s[s.len() - 1]).log10();
    assert!(decades >= 8.0, "{decades}");
    let k = consrc::numerics::truncated_rank(&s, 1e-8);
    assert!(k < sc.r.rows().min(sc.r.cols()));
}

#[test]
fn scenario_constraints_are_reproduced() {
    let sc = scenario(200);
    let cfg = RunConfig {
        n_s: 200,
        n_m: 200,
        ..RunConfig::default()
    };
    let ring = RunConfig {
        constraint_layout: Layout::Ring,
        constraint_radius: 0.8,
        ..cfg.clone()
    };
    for c in [&cfg, &ring] {
        for dipoles in [c.constraint_dipoles().unwrap(), c.constraint_dipoles().unwrap()[..1].to_vec()] {
            let cs = sc.constraints(&dipoles, ConsistencyPolicy::Project).unwrap();
            let bs = svd(cs.btil()).unwrap().s;
            assert!(bs[bs.len() - 1] / bs[0] > 1e-8);
            let params = ReconstructionParams {
                svd_tol: 1e-8,
                btil_tol: 1e-10,
                constraints: cs.clone(),
                perturbation: None,
            };
            let p = Pseudoinverses::build(&sc.r, &params).unwrap();
            for j in 0..cs.len() {
                let b = MeasurementVector::new(cs.btil().column(j)).unwrap();
                let x = p.reconstruct(&b, Method::Constrained).unwrap();
                let err = relative_l2(x.as_slice(), &cs.xtil().column(j));
                assert!(err < 1e-8, "{err}");
            }
        }
    }
}

#[test]
fn error_metrics_ignore_global_phase() {
    let sc = scenario(150);
    let truth = DipoleSource::electric([0.0, 0.0, 0.02], [1.0, 0.0, 0.0]).unwrap();
    let b = sc.measurements(&truth).unwrap();
    let params = ReconstructionParams {
        svd_tol: 1e-4,
        btil_tol: 1e-10,
        constraints: consrc::pinv::ConstraintSet::empty(sc.r.cols(), sc.r.rows()),
        perturbation: None,
    };
    let p = Pseudoinverses::build(&sc.r, &params).unwrap();
    let rot = C64::from_polar(1.0, 1.234);
    let br = MeasurementVector::new(b.0.iter().map(|z| z * rot).collect()).unwrap();
    let x = p.reconstruct(&b, Method::Mpp).unwrap();
    let xr = p.reconstruct(&br, Method::Mpp).unwrap();
    let diff: Vec<C64> = x.0.iter().zip(&xr.0).map(|(a, c)| a * rot - c).collect();
    assert!(norm2(&diff) < 1e-12 * norm2(&x.0));
    let e = consrc::scenario::measurement_residual(&sc.r, &x, &b).unwrap();
    let er = consrc::scenario::measurement_residual(&sc.r, &xr, &br).unwrap();
    assert!((e - er).abs() < 1e-12);
}

#[test]
fn default_geometry_spectrum_decay() {
    let medium = Medium::vacuum(5e9).unwrap();
    let (a, k) = (0.04, medium.k());
    let rm = a + 2.0 * medium.wavelength();
    assert!((k * a - 4.19).abs() < 0.01);
    let n_max = default_n_max(k, rm);
    let s = modal_spectrum(a, rm, k, n_max).unwrap();
    let t = |n| s.magnitude(n, Polarization::TE).unwrap();
    assert!(t(3) / t(15) > 1e6, "{}", t(3) / t(15));
    let start = (k * rm).ceil() as usize + 5;
    for n in start..n_max {
        assert!(t(n + 1) < t(n));
    }
    let far = modal_spectrum(a, 2.0 * rm, k, n_max).unwrap();
    for n in start..=n_max {
        assert!(far.magnitude(n, Polarization::TM).unwrap() < s.magnitude(n, Polarization::TM).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bessel_recurrences(n in 1usize..50, x in 1.0f64..30.0) {
        let (jm, j, jp) = (sph_bessel_j(n - 1, x).unwrap(), sph_bessel_j(n, x).unwrap(), sph_bessel_j(n + 1, x).unwrap());
        let (ym, y, yp) = (sph_bessel_y(n - 1, x).unwrap(), sph_bessel_y(n, x).unwrap(), sph_bessel_y(n + 1, x).unwrap());
        let f = (2 * n + 1) as f64 / x;
        let scale_j = jm.abs().max(jp.abs()).max(f * j.abs());
        let scale_y = ym.abs().max(yp.abs()).max(f * y.abs());
        prop_assert!((jm + jp - f * j).abs() <= 1e-10 * scale_j);
        prop_assert!((ym + yp - f * y).abs() <= 1e-10 * scale_y);
        // j_n y_{n-1} - j_{n-1} y_n = 1/x^2
        prop_assert!(((j * ym - jm * y) * x * x - 1.0).abs() < 1e-10);
    }

    #[test]
    fn dipole_reciprocity(
        p in prop::array::uniform3(-1.0f64..1.0),
        q in prop::array::uniform3(-1.0f64..1.0),
        r1 in prop::array::uniform3(-0.02f64..0.02),
        r2 in prop::array::uniform3(0.05f64..0.3),
    ) {
        prop_assume!(cnorm(consrc::geometry::to_complex(p)) > 1e-3 && cnorm(consrc::geometry::to_complex(q)) > 1e-3);
        let medium = Medium::vacuum(5e9).unwrap();
        let sp = DipoleSource::electric(r1, p).unwrap();
        let sq = DipoleSource::electric(r2, q).unwrap();
        let a = consrc::em::reaction(sp.moment, dipole_fields(&sq, r1, &medium).unwrap().0);
        let b = consrc::em::reaction(sq.moment, dipole_fields(&sp, r2, &medium).unwrap().0);
        prop_assert!((a - b).norm() <= 1e-10 * a.norm().max(b.norm()));
    }
}

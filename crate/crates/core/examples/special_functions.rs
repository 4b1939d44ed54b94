//! Spherical Bessel and Hankel functions, their Wronskian, and the
//! orthonormality of the tangential vector spherical harmonics.

use consrc::modes::{gauss_legendre, sph_bessel_j, sph_bessel_y, sph_hankel1, vsh_tangential, ModalIndex};
use num_complex::Complex64 as C64;

fn main() -> consrc::Result<()> {
    for x in [0.5, 4.19, 16.76] {
        let j = sph_bessel_j(10, x)?;
        let h = sph_hankel1(10, x)?;
        println!("x = {x:6.2}: j_10 = {j:+.6e}, h_10 = {:+.6e} {:+.6e}i", h.re, h.im);
    }

    let mut worst: f64 = 0.0;
    for x in [2.0, 10.0] {
        for n in 1..=40usize {
            let (j0, j1) = (sph_bessel_j(n, x)?, sph_bessel_j(n + 1, x)?);
            let (y0, y1) = (sph_bessel_y(n, x)?, sph_bessel_y(n + 1, x)?);
            // j_n y_{n+1} - j_{n+1} y_n = -1/x^2
            let w = j0 * y1 - j1 * y0;
            worst = worst.max((w * x * x + 1.0).abs());
        }
    }
    println!("worst Wronskian defect for n <= 40: {worst:.2e}");

    let nmax = 6;
    let (nodes, weights) = gauss_legendre(2 * nmax + 2);
    let nphi = 2 * nmax + 3;
    let dphi = 2.0 * std::f64::consts::PI / nphi as f64;
    let modes = ModalIndex::all(nmax);
    let samples: Vec<Vec<[C64; 3]>> = modes
        .iter()
        .map(|&idx| {
            let mut out = Vec::new();
            for x in &nodes {
                for k in 0..nphi {
                    out.push(vsh_tangential(idx, x.acos(), k as f64 * dphi));
                }
            }
            out
        })
        .collect();
    let quad: Vec<f64> = weights.iter().flat_map(|&w| std::iter::repeat_n(w * dphi, nphi)).collect();
    let mut defect: f64 = 0.0;
    for (p, u) in samples.iter().enumerate() {
        for (q, v) in samples.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for ((a, b), w) in u.iter().zip(v).zip(&quad) {
                acc += (a[0].conj() * b[0] + a[1].conj() * b[1] + a[2].conj() * b[2]) * w;
            }
            let target = if p == q { 1.0 } else { 0.0 };
            defect = defect.max((acc - target).norm());
        }
    }
    println!("vector harmonic Gram defect over {} modes up to n = {nmax}: {defect:.2e}", modes.len());
    Ok(())
}

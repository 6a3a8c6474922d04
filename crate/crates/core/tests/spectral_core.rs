#![allow(clippy::needless_range_loop)]

use std::f64::consts::PI;

use glno_core::spectral::{
    decompose_uniform, dft_direct, eval_decomposition, evaluate_basis, glno_forward,
    laplace_of_basis, lno_forward, pole_residue_product, reconstruct_time,
    reconstruct_time_complex, uniform_grid, PoleResidueKernel, SpectralCoordinate,
    SpectralDecomposition, SpectralProduct,
};
use glno_core::{ComplexValue as C, GlnoError};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn close(a: C, b: C, tol: f64) -> bool {
    (a - b).norm() <= tol
}

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

/// Compensated (two-sum) accumulation of complex terms.
fn kahan_sum(terms: impl Iterator<Item = C>) -> C {
    let (mut s, mut e) = (c(0.0, 0.0), c(0.0, 0.0));
    for t in terms {
        let y = t - e;
        let u = s + y;
        e = (u - s) - y;
        s = u;
    }
    s
}

/// `(1/K) sum_j w_j f_j e^{-2 pi i k j / K}` evaluated term by term.
fn quadrature_coeff(samples: &[f64], length: f64, sigma: f64, bin: i64) -> C {
    let k = samples.len();
    let s = kahan_sum(samples.iter().enumerate().map(|(j, f)| {
        let t = j as f64 * length / k as f64;
        let ph = -2.0 * PI * bin as f64 * j as f64 / k as f64;
        (-sigma * t).exp() * f * c(ph.cos(), ph.sin())
    }));
    s / k as f64
}

fn coeff_at(d: &SpectralDecomposition, sigma: f64, bin: i64) -> C {
    let omega = -2.0 * PI * bin as f64 / d.length();
    let i = d
        .coords()
        .iter()
        .position(|z| z.sigma == -sigma && (z.omega - omega).abs() < 1e-12)
        .unwrap();
    d.coeffs()[i]
}

fn random_kernel(rng: &mut ChaCha8Rng, n: usize, sep: f64) -> PoleResidueKernel {
    let mut poles: Vec<C> = Vec::new();
    while poles.len() < n {
        let p = c(rng.gen_range(-3.0..0.5), rng.gen_range(-3.0..3.0));
        if poles.iter().all(|q| (p - q).norm() >= sep) {
            poles.push(p);
        }
    }
    let res = (0..n)
        .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    PoleResidueKernel::new(poles, res).unwrap()
}

fn random_decomposition(
    rng: &mut ChaCha8Rng,
    m: usize,
    avoid: &[C],
    sep: f64,
) -> SpectralDecomposition {
    let mut coords: Vec<SpectralCoordinate> = Vec::new();
    while coords.len() < m {
        let z = SpectralCoordinate::new(rng.gen_range(-2.0..2.0), rng.gen_range(-4.0..4.0));
        let ok_self = coords
            .iter()
            .all(|w| (w.as_complex() - z.as_complex()).norm() >= sep);
        let ok_kernel = avoid.iter().all(|mu| (mu + z.as_complex()).norm() >= sep);
        if ok_self && ok_kernel {
            coords.push(z);
        }
    }
    let coeffs = (0..m)
        .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    SpectralDecomposition::new(coords, coeffs, 1.0).unwrap()
}

#[test]
fn basis_examples() {
    let z = |s, w| SpectralCoordinate::new(s, w);
    assert!(close(
        evaluate_basis(z(0.0, 0.0), 3.7).unwrap(),
        c(1.0, 0.0),
        0.0
    ));
    assert!(close(
        evaluate_basis(z(0.0, 1.0), PI).unwrap(),
        c(-1.0, 0.0),
        1e-15
    ));
    assert!(close(
        evaluate_basis(z(1.0, 0.0), 2f64.ln()).unwrap(),
        c(0.5, 0.0),
        1e-16
    ));
    assert!(matches!(
        evaluate_basis(z(-1.0, 0.0), 701.0),
        Err(GlnoError::Overflow { .. })
    ));
    assert!(evaluate_basis(z(0.0, 0.0), f64::NAN).is_err());
}

#[test]
fn laplace_of_basis_examples() {
    let z = |s, w| SpectralCoordinate::new(s, w);
    assert_eq!(
        laplace_of_basis(z(0.0, 0.0), c(1.0, 0.0)).unwrap(),
        c(1.0, 0.0)
    );
    assert!(close(
        laplace_of_basis(z(1.0, 2.0), c(0.0, 0.0)).unwrap(),
        c(0.2, -0.4),
        1e-16
    ));
    assert!(matches!(
        laplace_of_basis(z(1.0, 0.0), c(-1.0, 0.0)),
        Err(GlnoError::PoleCollision { .. })
    ));
}

#[test]
fn decompose_examples_match_quadrature() {
    let k = 64;
    let t_len = 2.0;
    let grid = uniform_grid(k, t_len);
    let zero = decompose_uniform(&vec![0.0; k], t_len, &[0.0, 1.0], 4).unwrap();
    assert!(zero.coeffs().iter().all(|a| a.norm() == 0.0));

    let cosine: Vec<f64> = grid.iter().map(|t| (2.0 * PI * t / t_len).cos()).collect();
    let d = decompose_uniform(&cosine, t_len, &[0.0], 4).unwrap();
    for bin in -3..=3i64 {
        let got = coeff_at(&d, 0.0, bin);
        let want = quadrature_coeff(&cosine, t_len, 0.0, bin);
        assert!(close(got, want, 1e-14), "bin {bin}");
        let exact = if bin.abs() == 1 { 0.5 } else { 0.0 };
        assert!(close(got, c(exact, 0.0), 1e-14));
    }

    let growth: Vec<f64> = grid.iter().map(|t| t.exp()).collect();
    let d = decompose_uniform(&growth, t_len, &[1.0], 4).unwrap();
    for bin in -3..=3i64 {
        let got = coeff_at(&d, 1.0, bin);
        let want = quadrature_coeff(&growth, t_len, 1.0, bin);
        assert!(close(got, want, 1e-13));
        let exact = if bin == 0 { 1.0 } else { 0.0 };
        assert!(close(got, c(exact, 0.0), 1e-13));
    }

    // argument checks
    assert!(decompose_uniform(&cosine, t_len, &[], 4).is_err());
    assert!(decompose_uniform(&cosine, t_len, &[0.0], 33).is_err());
    assert!(decompose_uniform(&cosine, -1.0, &[0.0], 4).is_err());
}

#[test]
fn eval_decomposition_examples() {
    let empty = SpectralDecomposition::new(vec![], vec![], 1.0).unwrap();
    assert_eq!(
        eval_decomposition(&empty, c(0.3, 0.1)).unwrap(),
        c(0.0, 0.0)
    );
    let one = SpectralDecomposition::new(
        vec![SpectralCoordinate::new(2.0, 0.0)],
        vec![c(1.0, 0.0)],
        1.0,
    )
    .unwrap();
    assert!(close(
        eval_decomposition(&one, c(1.0, 0.0)).unwrap(),
        c(1.0 / 3.0, 0.0),
        1e-16
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let d = random_decomposition(&mut rng, 5, &[], 0.1);
    for _ in 0..20 {
        let s = c(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let got = eval_decomposition(&d, s).unwrap();
        let want = kahan_sum(
            d.coords()
                .iter()
                .zip(d.coeffs())
                .map(|(z, a)| a / (s + z.as_complex())),
        );
        assert!((got - want).norm() <= 1e-12 * want.norm().max(1e-300));
    }
    assert!(eval_decomposition(&one, c(-2.0, 0.0)).is_err());
}

#[test]
fn product_examples() {
    let f = SpectralDecomposition::new(
        vec![SpectralCoordinate::new(2.0, 0.0)],
        vec![c(1.0, 0.0)],
        1.0,
    )
    .unwrap();
    let k = PoleResidueKernel::new(vec![c(1.0, 0.0)], vec![c(1.0, 0.0)]).unwrap();
    let p = pole_residue_product(&f, &k).unwrap();
    assert!(close(p.transient[0].1, c(1.0 / 3.0, 0.0), 1e-16));
    assert_eq!(p.transient[0].0, c(1.0, 0.0));
    assert!(close(p.steady[0].1, c(-1.0 / 3.0, 0.0), 1e-16));
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let s = c(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
        let direct = eval_decomposition(&f, s).unwrap() * k.eval(s).unwrap();
        assert!((p.eval(s).unwrap() - direct).norm() < 1e-10 * direct.norm());
    }

    let zero_k =
        PoleResidueKernel::new(vec![c(-1.0, 0.5), c(-3.0, 0.0)], vec![c(0.0, 0.0); 2]).unwrap();
    let p = pole_residue_product(&f, &zero_k).unwrap();
    assert!(
        p.steady.iter().all(|r| r.1.norm() == 0.0) && p.transient.iter().all(|r| r.1.norm() == 0.0)
    );

    let clash = PoleResidueKernel::new(vec![c(-2.0, 0.0)], vec![c(1.0, 0.0)]).unwrap();
    match pole_residue_product(&f, &clash) {
        Err(GlnoError::PoleCollision { what, .. }) => {
            assert!(what.contains("mu_0") && what.contains("z_0"))
        }
        other => panic!("expected collision, got {other:?}"),
    }
}

#[test]
fn conjugate_closed_inputs_give_conjugate_residues() {
    let grid = uniform_grid(32, 3.0);
    let x: Vec<f64> = grid.iter().map(|t| (1.3 * t).sin() + 0.2 * t).collect();
    let f = decompose_uniform(&x, 3.0, &[0.0, 0.4], 5).unwrap();
    let k = PoleResidueKernel::new(
        vec![c(-0.5, 1.2), c(-0.5, -1.2), c(-2.0, 0.0)],
        vec![c(0.3, -0.7), c(0.3, 0.7), c(1.1, 0.0)],
    )
    .unwrap();
    let p = pole_residue_product(&f, &k).unwrap();
    for (z, a) in &p.steady {
        let (_, b) = p.steady.iter().find(|(w, _)| *w == z.conj()).unwrap();
        assert!(close(*b, a.conj(), 1e-13 * (1.0 + a.norm())));
    }
    for (mu, a) in &p.transient {
        let (_, b) = p
            .transient
            .iter()
            .find(|(nu, _)| close(*nu, mu.conj(), 0.0))
            .unwrap();
        assert!(close(*b, a.conj(), 1e-13 * (1.0 + a.norm())));
    }
    let g = reconstruct_time_complex(&p, &grid).unwrap();
    let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.re.abs()));
    assert!(g.iter().all(|v| v.im.abs() <= 1e-9 * gmax));
}

#[test]
fn reconstruct_examples() {
    let grid = uniform_grid(50, 2.0);
    let empty = SpectralProduct {
        steady: vec![],
        transient: vec![],
    };
    assert!(reconstruct_time(&empty, &grid)
        .unwrap()
        .iter()
        .all(|v| *v == 0.0));
    let single = SpectralProduct {
        steady: vec![(SpectralCoordinate::new(0.8, 0.0), c(1.0, 0.0))],
        transient: vec![],
    };
    let g = reconstruct_time(&single, &grid).unwrap();
    for (v, t) in g.iter().zip(&grid) {
        assert!((v - (-0.8 * t).exp()).abs() < 1e-15);
    }
    let bad = SpectralProduct {
        steady: vec![],
        transient: vec![(c(400.0, 0.0), c(1.0, 0.0))],
    };
    assert!(matches!(
        reconstruct_time(&bad, &grid),
        Err(GlnoError::Overflow { .. })
    ));
}

/// `int_0^t h(t - s) f(s) ds` by the trapezoid rule on the grid.
fn trapezoid_convolution(h: impl Fn(f64) -> f64, f: &[f64], dt: f64) -> Vec<f64> {
    (0..f.len())
        .map(|j| {
            if j == 0 {
                return 0.0;
            }
            let mut acc = 0.0;
            for i in 0..=j {
                let w = if i == 0 || i == j { 0.5 } else { 1.0 };
                acc += w * h((j - i) as f64 * dt) * f[i];
            }
            acc * dt
        })
        .collect()
}

#[test]
fn exponential_convolution() {
    let (k, t_len) = (2048, 10.0);
    let grid = uniform_grid(k, t_len);
    let x: Vec<f64> = grid.iter().map(|t| (-2.0 * t).exp()).collect();
    let kernel = PoleResidueKernel::new(vec![c(-1.0, 0.0)], vec![c(1.0, 0.0)]).unwrap();
    // weighting by e^{2t} flattens the input onto the DC bin
    let y = glno_forward(&x, t_len, &[-2.0], &kernel, 8).unwrap();
    let exact: Vec<f64> = grid.iter().map(|t| (-t).exp() - (-2.0 * t).exp()).collect();
    assert!(rel_l2(&y, &exact) < 1e-3);
    let trap = trapezoid_convolution(|t| (-t).exp(), &x, t_len / k as f64);
    assert!(rel_l2(&y, &trap) < 5e-3);
}

#[test]
fn lno_examples() {
    let (k, t_len) = (1024, 8.0);
    let grid = uniform_grid(k, t_len);
    let kernel = PoleResidueKernel::new(vec![c(-1.0, 0.0)], vec![c(1.0, 0.0)]).unwrap();
    assert!(lno_forward(&vec![0.0; k], t_len, &kernel, 6)
        .unwrap()
        .iter()
        .all(|v| *v == 0.0));
    let x: Vec<f64> = grid.iter().map(|t| (2.0 * PI * t / t_len).sin()).collect();
    let a = lno_forward(&x, t_len, &kernel, 6).unwrap();
    let b = glno_forward(&x, t_len, &[0.0], &kernel, 6).unwrap();
    assert!(a.iter().zip(&b).all(|(p, q)| p.to_bits() == q.to_bits()));
    let trap = trapezoid_convolution(|t| (-t).exp(), &x, t_len / k as f64);
    assert!(rel_l2(&a, &trap) < 5e-3, "{}", rel_l2(&a, &trap));
}

#[test]
fn zero_sigma_equals_plain_dft() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let k = 48;
    let x: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let d = decompose_uniform(&x, 1.0, &[0.0], 10).unwrap();
    let plain = dft_direct(&x.iter().map(|v| c(*v, 0.0)).collect::<Vec<_>>());
    let scale = plain.iter().fold(0.0f64, |m, v| m.max(v.norm())) / k as f64;
    for bin in -9..=9i64 {
        let want = plain[bin.rem_euclid(k as i64) as usize] / k as f64;
        assert!((coeff_at(&d, 0.0, bin) - want).norm() <= 1e-13 * scale);
    }
}

#[test]
fn band_limited_round_trip() {
    let (k, t_len) = (64, 2.0);
    let grid = uniform_grid(k, t_len);
    let w = 2.0 * PI / t_len;
    let x: Vec<f64> = grid
        .iter()
        .map(|t| 0.3 + (w * t).cos() - 0.5 * (3.0 * w * t).sin())
        .collect();
    let d = decompose_uniform(&x, t_len, &[0.0], 5).unwrap();
    let prod = SpectralProduct {
        steady: d
            .coords()
            .iter()
            .copied()
            .zip(d.coeffs().iter().copied())
            .collect(),
        transient: vec![],
    };
    let y = reconstruct_time(&prod, &grid).unwrap();
    assert!(rel_l2(&y, &x) < 1e-9);
}

#[test]
fn residue_partial_fractions_random() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..50 {
        let n = rng.gen_range(1..=8);
        let m = rng.gen_range(1..=8);
        let kernel = random_kernel(&mut rng, n, 0.1);
        let f = random_decomposition(&mut rng, m, kernel.poles(), 0.1);
        let p = pole_residue_product(&f, &kernel).unwrap();
        let mut tested = 0;
        while tested < 100 {
            let s = c(rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0));
            let near = kernel.poles().iter().any(|mu| (s - mu).norm() < 0.1)
                || f.coords().iter().any(|z| (s + z.as_complex()).norm() < 0.1);
            if near {
                continue;
            }
            let g = eval_decomposition(&f, s).unwrap() * kernel.eval(s).unwrap();
            assert!((p.eval(s).unwrap() - g).norm() < 1e-10 * g.norm());
            tested += 1;
        }
    }
}

proptest! {
    #[test]
    fn product_is_linear(seed in 0u64..10_000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kernel = random_kernel(&mut rng, 3, 0.1);
        let f1 = random_decomposition(&mut rng, 4, kernel.poles(), 0.1);
        let coeffs2: Vec<C> = (0..4).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let f2 = SpectralDecomposition::new(f1.coords().to_vec(), coeffs2.clone(), 1.0).unwrap();
        let mix = SpectralDecomposition::new(
            f1.coords().to_vec(),
            f1.coeffs().iter().zip(&coeffs2).map(|(x, y)| x * a + y * b).collect(),
            1.0,
        ).unwrap();
        let (p1, p2, pm) = (
            pole_residue_product(&f1, &kernel).unwrap(),
            pole_residue_product(&f2, &kernel).unwrap(),
            pole_residue_product(&mix, &kernel).unwrap(),
        );
        for i in 0..4 {
            let want = p1.steady[i].1 * a + p2.steady[i].1 * b;
            prop_assert!((pm.steady[i].1 - want).norm() <= 1e-12 * (1.0 + want.norm()) * 10.0);
        }
        for n in 0..3 {
            let want = p1.transient[n].1 * a + p2.transient[n].1 * b;
            prop_assert!((pm.transient[n].1 - want).norm() <= 1e-12 * (1.0 + want.norm()) * 10.0);
        }
    }

    #[test]
    fn real_signals_reconstruct_real(seed in 0u64..10_000, sigma in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = 32;
        let x: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = decompose_uniform(&x, 2.0, &[0.0, sigma + 0.05], 6).unwrap();
        let kernel = PoleResidueKernel::new(
            vec![c(-0.7, 0.9), c(-0.7, -0.9)],
            vec![c(0.2, 0.4), c(0.2, -0.4)],
        ).unwrap();
        let p = pole_residue_product(&f, &kernel).unwrap();
        let g = reconstruct_time_complex(&p, &uniform_grid(k, 2.0)).unwrap();
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        prop_assert!(g.iter().all(|v| v.im.abs() <= 1e-9 * gmax.max(1e-300)));
    }
}

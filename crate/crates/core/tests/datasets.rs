use std::f64::consts::PI;

use glno_core::datasets::{
    delaunay_rectangle_with, generate, generate_dataset, icosphere, integrate_system, read_array,
    rk4_integrate, solve_beam_2d, solve_diffusion_2d, solve_poisson_mesh,
    solve_reaction_diffusion_2d, source_field, toy_shape_classification_set, unit_square_boundary,
    DomainSpec, ForcingKind, ForcingSpec, GaussianSource, HeatSmoother, Manifest, OdeSystem,
    Profile, ShapeClass, SpaceTimeGrid, Task, FORCING_OMEGA,
};
use glno_core::mesh::{build_laplacian, compute_spectrum, read_off, EigenOptions};
use glno_core::GlnoError;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

const GRID: SpaceTimeGrid = SpaceTimeGrid {
    nx: 50,
    nt: 50,
    length: 1.0,
    horizon: 1.0,
};

#[test]
fn rk4_exponential_decay() {
    let t: Vec<f64> = (0..2048).map(|j| j as f64 * 10.0 / 2047.0).collect();
    let traj = rk4_integrate(&|_, s, out| out[0] = -s[0], &t, &[1.0]).unwrap();
    let err = t
        .iter()
        .zip(&traj)
        .map(|(t, s)| (s[0] - (-t).exp()).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-9, "{err}");
}

#[test]
fn rk4_rejects_nonuniform_grid_and_divergence() {
    assert!(rk4_integrate(&|_, s, o| o[0] = s[0], &[0.0, 0.1, 0.3], &[1.0]).is_err());
    let t: Vec<f64> = (0..200).map(|j| j as f64 * 0.1).collect();
    let r = rk4_integrate(&|_, s, o| o[0] = s[0] * s[0], &t, &[1.0]);
    assert!(matches!(r, Err(GlnoError::Unstable(_))));
}

#[test]
fn small_angle_pendulum_period() {
    let dt = 1e-3;
    let t: Vec<f64> = (0..30000).map(|j| j as f64 * dt).collect();
    let traj =
        integrate_system(OdeSystem::Pendulum { c: 0.0 }, &|_| 0.0, &t, &[0.01, 0.0]).unwrap();
    // Downward zero crossings by linear interpolation.
    let mut crossings = Vec::new();
    for j in 1..t.len() {
        let (a, b) = (traj[j - 1][0], traj[j][0]);
        if a > 0.0 && b <= 0.0 {
            crossings.push(t[j - 1] + dt * a / (a - b));
        }
    }
    assert!(crossings.len() >= 4);
    let period = (crossings[3] - crossings[0]) / 3.0;
    assert!((period / (2.0 * PI) - 1.0).abs() < 5e-3, "{period}");
}

#[test]
fn lorenz_fixed_point_is_kept() {
    let c = (32.0f64 / 3.0).sqrt();
    let t: Vec<f64> = (0..2048).map(|j| j as f64 * 10.0 / 2047.0).collect();
    for sign in [1.0, -1.0] {
        let x0 = [sign * c, sign * c, 4.0];
        let traj = integrate_system(OdeSystem::Lorenz { rho: 5.0 }, &|_| 0.0, &t, &x0).unwrap();
        for s in &traj {
            for i in 0..3 {
                assert!((s[i] - x0[i]).abs() < 1e-3);
            }
        }
    }
}

#[test]
fn diffusion_zero_and_manufactured() {
    let zero = solve_diffusion_2d(1.0, &|_, _| 0.0, &|_| 0.0, &GRID).unwrap();
    assert!(zero.iter().all(|&v| v == 0.0));
    let d = 1.0;
    let f = move |x: f64, t: f64| (1.0 - d * PI * PI) * (PI * x).sin() * (-t).exp();
    let y = solve_diffusion_2d(d, &f, &|x| (PI * x).sin(), &GRID).unwrap();
    let exact = GRID.sample(&|x, t| (PI * x).sin() * (-t).exp());
    let e = rel_l2(&y, &exact);
    assert!(e < 1e-3, "{e}");
}

#[test]
fn diffusion_heat_mode_decay() {
    for d in [0.1, 1.0] {
        let y = solve_diffusion_2d(d, &|_, _| 0.0, &|x| (PI * x).sin(), &GRID).unwrap();
        let exact = GRID.sample(&|x, t| (PI * x).sin() * (-d * PI * PI * t).exp());
        let err = y
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-3, "D = {d}: {err}");
    }
}

#[test]
fn beam_zero_and_manufactured() {
    let zero = solve_beam_2d(1.0, 1.0, &|_, _| 0.0, &|_| 0.0, &|_| 0.0, &GRID).unwrap();
    assert!(zero.iter().all(|&v| v == 0.0));
    let f = |x: f64, t: f64| (PI.powi(4) - 1.0) * (PI * x).sin() * t.cos();
    let w = solve_beam_2d(1.0, 1.0, &f, &|x| (PI * x).sin(), &|_| 0.0, &GRID).unwrap();
    let exact = GRID.sample(&|x, t| (PI * x).sin() * t.cos());
    let e = rel_l2(&w, &exact);
    assert!(e < 5e-3, "{e}");
}

#[test]
fn reaction_diffusion_reduces_to_diffusion() {
    let grid = SpaceTimeGrid {
        nx: 40,
        nt: 20,
        length: 1.0,
        horizon: 1.0,
    };
    let spec = ForcingSpec {
        amplitude: 3.0,
        omega: 1.7,
        decay: 0.05,
        kind: ForcingKind::Train,
        quadratic: false,
    };
    let f = |x: f64, t: f64| spec.eval_2d(x, t);
    let a = solve_reaction_diffusion_2d(0.01, 0.0, &f, &|_| 0.0, &grid).unwrap();
    let b = solve_diffusion_2d(0.01, &f, &|_| 0.0, &grid).unwrap();
    assert_eq!(a, b);
    assert!(solve_reaction_diffusion_2d(0.01, 50.0, &|_, _| -50.0, &|_| 0.0, &grid).is_err());
}

#[test]
fn poisson_manufactured_and_maximum_principle() {
    let mesh = delaunay_rectangle_with(57, 7, 3).unwrap();
    assert_eq!(mesh.num_vertices(), 3242);
    let f: Vec<f64> = mesh
        .vertices()
        .iter()
        .map(|v| 2.0 * PI * PI * (PI * v[0]).sin() * (PI * v[1]).sin())
        .collect();
    let exact: Vec<f64> = mesh
        .vertices()
        .iter()
        .map(|v| (PI * v[0]).sin() * (PI * v[1]).sin())
        .collect();
    let u = solve_poisson_mesh(&mesh, &f).unwrap();
    let e = rel_l2(&u, &exact);
    assert!(e < 1e-2, "{e}");
    assert!(solve_poisson_mesh(&mesh, &vec![0.0; 3242])
        .unwrap()
        .iter()
        .all(|&v| v == 0.0));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..5 {
        let sources: Vec<_> = (0..3).map(|_| GaussianSource::sample(&mut rng)).collect();
        let u = solve_poisson_mesh(&mesh, &source_field(&mesh, &sources)).unwrap();
        assert!(u.iter().all(|&v| v >= -1e-10));
    }
    let boundary = unit_square_boundary(&mesh).unwrap();
    assert_eq!(boundary.iter().filter(|&&b| b).count(), 4 * 56);
    assert!(solve_poisson_mesh(&icosphere(1).unwrap(), &[0.0; 42]).is_err());
}

#[test]
fn heat_smoother_damps_modes_by_their_eigenvalue() {
    let mesh = icosphere(3).unwrap();
    let (s, m) = build_laplacian(&mesh).unwrap();
    let spec = compute_spectrum(&s, &m, 10, &EigenOptions::default()).unwrap();
    let smoother = HeatSmoother::new(&mesh, 0.05, 4).unwrap();
    let phi = spec.eigenfunction(5);
    let out = smoother.apply(phi).unwrap();
    let factor = (1.0 + 0.05 / 4.0 * spec.eigenvalues()[5]).powi(-4);
    for (a, b) in out.iter().zip(phi) {
        assert!((a - factor * b).abs() < 1e-6, "{a} vs {}", factor * b);
    }
    let ones = smoother.apply(&vec![1.0; mesh.num_vertices()]).unwrap();
    assert!(ones.iter().all(|v| (v - 1.0).abs() < 1e-10));
}

#[test]
fn toy_sphere_and_torus_spectra_differ() {
    let set = toy_shape_classification_set(0).unwrap();
    for class in [ShapeClass::Sphere, ShapeClass::Torus, ShapeClass::Ellipsoid] {
        assert_eq!(set.iter().filter(|(_, c)| *c == class).count(), 10);
    }
    assert!(set
        .iter()
        .all(|(m, _)| m.is_closed() && m.is_edge_manifold()));
    let first = |class| {
        let (mesh, _) = set.iter().find(|(_, c)| *c == class).unwrap();
        let (s, m) = build_laplacian(mesh).unwrap();
        let spec = compute_spectrum(&s, &m, 4, &EigenOptions::default()).unwrap();
        spec.eigenvalues()[1] * mesh.total_area()
    };
    let (a, b) = (first(ShapeClass::Sphere), first(ShapeClass::Torus));
    assert!((a - b).abs() / a.max(b) > 0.2, "{a} vs {b}");
}

fn dir_bytes(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn generation_is_byte_reproducible() {
    for task in ["pendulum-c0.5", "diffusion"] {
        let task: Task = task.parse().unwrap();
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        generate_dataset(task, Profile::Desk, 7, a.path()).unwrap();
        generate_dataset(task, Profile::Desk, 7, b.path()).unwrap();
        assert_eq!(dir_bytes(a.path()), dir_bytes(b.path()));
        let c = tempfile::tempdir().unwrap();
        generate_dataset(task, Profile::Desk, 8, c.path()).unwrap();
        assert_ne!(dir_bytes(a.path()), dir_bytes(c.path()));
    }
}

#[test]
fn forcing_family_counts_and_layout() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = generate_dataset(
        "pendulum-c0.5".parse().unwrap(),
        Profile::Desk,
        1,
        dir.path(),
    )
    .unwrap();
    assert_eq!(manifest.counts["train"] + manifest.counts["val"], 200);
    assert_eq!(manifest.counts["val"], 30);
    assert_eq!(manifest.counts["test"], 130);
    assert!(matches!(
        manifest.domain,
        DomainSpec::Grid1d { nt: 2048, .. }
    ));
    let read = Manifest::read(dir.path()).unwrap();
    assert_eq!(read.counts, manifest.counts);
    let test = read.split(dir.path(), "test").unwrap();
    assert_eq!(test.len(), 130);
    assert_eq!(test.input(0).len(), 2048);
    // Test forcing starts at zero and decays like exp(-0.05 t).
    assert_eq!(test.input(0)[0], 0.0);
    let raw = read_array(&dir.path().join(&read.files["train"].inputs)).unwrap();
    assert_eq!(raw.dims, vec![170 * 2048, 1]);
}

#[test]
fn mesh_tasks_write_meshes_and_fields() {
    let data = generate(Task::HeatSphere, Profile::Desk, 2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let manifest = glno_core::datasets::write_dataset(dir.path(), &data).unwrap();
    let DomainSpec::Mesh {
        meshes, p_fields, ..
    } = &manifest.domain
    else {
        panic!("mesh domain expected")
    };
    assert_eq!(meshes.len(), 2);
    let fine = read_off(&std::fs::read_to_string(dir.path().join(&meshes[1])).unwrap()).unwrap();
    assert_eq!(fine.num_vertices(), 2562);
    assert_eq!(
        read_array(&dir.path().join(&p_fields[1]))
            .unwrap()
            .data
            .len(),
        2562
    );
    let test = manifest.split(dir.path(), "test").unwrap();
    assert_eq!(test.len(), 100);
    assert_eq!(test.mesh_ids[0], 0);
    assert_eq!(test.mesh_ids[99], 1);
    assert_eq!(test.input(99).len(), 2562);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sampled_forcings_respect_ranges(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for kind in [ForcingKind::Train, ForcingKind::Test] {
            let s = ForcingSpec::sample(&mut rng, kind, 0.05, FORCING_OMEGA, false);
            prop_assert!(s.validate().is_ok());
            prop_assert!(s.omega >= FORCING_OMEGA.0 && s.omega <= FORCING_OMEGA.1);
        }
    }

    #[test]
    fn diffusion_is_linear_in_forcing(a in -5.0f64..5.0, w in 0.5f64..2.0) {
        let grid = SpaceTimeGrid { nx: 12, nt: 8, length: 1.0, horizon: 1.0 };
        let f = |x: f64, t: f64| (w * x).sin() * (-t).exp();
        let y1 = solve_diffusion_2d(1.0, &f, &|_| 0.0, &grid).unwrap();
        let ya = solve_diffusion_2d(1.0, &|x, t| a * f(x, t), &|_| 0.0, &grid).unwrap();
        for (p, q) in y1.iter().zip(&ya) {
            prop_assert!((a * p - q).abs() <= 1e-12 * (1.0 + q.abs()));
        }
    }
}

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::forcing::{ForcingKind, ForcingSpec, FORCING_OMEGA};
use super::io::{write_array, write_split, Array, DomainSpec, Manifest, Split};
use super::meshgen::{
    delaunay_rectangle_with, icosphere, toy_shape_classification_set, ShapeClass,
};
use super::ode::{integrate_system, OdeSystem};
use super::pde::{solve_beam_2d, solve_reaction_diffusion_2d, SpaceTimeGrid};
use super::poisson::{source_field, GaussianSource, HeatSmoother, PoissonSolver};
use crate::error::{GlnoError, Result};
use crate::mesh::{boundary_distance_field, curvature_field, write_off, TriangleMesh};

/// Samples per series for the 1D tasks.
pub const SERIES_LENGTH: usize = 2048;
/// Horizon of the 1D tasks in seconds.
pub const SERIES_HORIZON: f64 = 10.0;
/// Fraction of generated training samples held out for validation.
pub const VALIDATION_FRACTION: f64 = 0.15;
/// Forcing families: generated training and test counts.
pub const FORCING_COUNTS: (usize, usize) = (200, 130);
/// Gaussian sources per Poisson sample.
pub const POISSON_SOURCES: usize = 3;
/// Heat smoothing time of the grid-invariance task.
pub const HEAT_TAU: f64 = 0.05;
pub const HEAT_STEPS: usize = 4;

/// Benchmark tasks known to `datagen`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Task {
    Ode(OdeSystem),
    Beam,
    Diffusion,
    ReactionDiffusion,
    Poisson,
    HeatSphere,
    Shapes,
}

impl FromStr for Task {
    type Err = GlnoError;

    fn from_str(s: &str) -> Result<Self> {
        let num = |rest: &str| -> Result<f64> {
            rest.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v >= 0.0)
                .ok_or_else(|| GlnoError::Parse(format!("bad parameter in task {s}")))
        };
        Ok(match s {
            "beam" => Task::Beam,
            "diffusion" => Task::Diffusion,
            "reaction-diffusion" => Task::ReactionDiffusion,
            "poisson" => Task::Poisson,
            "heat-sphere" => Task::HeatSphere,
            "shapes" => Task::Shapes,
            _ => {
                if let Some(r) = s.strip_prefix("pendulum-c") {
                    Task::Ode(OdeSystem::Pendulum { c: num(r)? })
                } else if let Some(r) = s.strip_prefix("duffing-c") {
                    Task::Ode(OdeSystem::Duffing { c: num(r)? })
                } else if let Some(r) = s.strip_prefix("lorenz-rho") {
                    Task::Ode(OdeSystem::Lorenz { rho: num(r)? })
                } else {
                    return Err(GlnoError::Parse(format!(
                        "unknown task {s}; expected pendulum-c<c>, duffing-c<c>, lorenz-rho<rho>, beam, diffusion, \
                         reaction-diffusion, poisson, heat-sphere or shapes"
                    )));
                }
            }
        })
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Task::Ode(OdeSystem::Pendulum { c }) => write!(f, "pendulum-c{c}"),
            Task::Ode(OdeSystem::Duffing { c }) => write!(f, "duffing-c{c}"),
            Task::Ode(OdeSystem::Lorenz { rho }) => write!(f, "lorenz-rho{rho}"),
            Task::Beam => write!(f, "beam"),
            Task::Diffusion => write!(f, "diffusion"),
            Task::ReactionDiffusion => write!(f, "reaction-diffusion"),
            Task::Poisson => write!(f, "poisson"),
            Task::HeatSphere => write!(f, "heat-sphere"),
            Task::Shapes => write!(f, "shapes"),
        }
    }
}

/// Dataset size profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Reduced sizes for single-core runs.
    Desk,
    /// Sample counts of the reference benchmarks.
    Full,
}

impl FromStr for Profile {
    type Err = GlnoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "full" => Ok(Profile::Full),
            _ => Err(GlnoError::Parse(format!(
                "unknown profile {s}; expected desk or full"
            ))),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Desk => "desk",
            Profile::Full => "full",
        })
    }
}

/// Space-time grid of a 2D task.
pub fn task_grid(task: Task) -> Option<SpaceTimeGrid> {
    match task {
        Task::Beam | Task::Diffusion => Some(SpaceTimeGrid {
            nx: 50,
            nt: 50,
            length: 1.0,
            horizon: 1.0,
        }),
        Task::ReactionDiffusion => Some(SpaceTimeGrid {
            nx: 40,
            nt: 20,
            length: 1.0,
            horizon: 1.0,
        }),
        _ => None,
    }
}

/// Generated dataset held in memory before writing.
#[derive(Debug, Clone)]
pub struct GeneratedDataset {
    pub manifest: Manifest,
    pub splits: Vec<(String, Split)>,
    /// Meshes and their geometry fields (mesh tasks).
    pub meshes: Vec<(TriangleMesh, Vec<f64>)>,
}

fn split_train(all: Split) -> Result<(Split, Split)> {
    let n_val = (all.len() as f64 * VALIDATION_FRACTION).round() as usize;
    let (train, val) = all.split_off_front(all.len() - n_val)?;
    Ok((train, val))
}

fn counts_of(splits: &[(String, Split)]) -> BTreeMap<String, usize> {
    splits.iter().map(|(n, s)| (n.clone(), s.len())).collect()
}

fn ode_dataset(system: OdeSystem, seed: u64) -> Result<(Vec<(String, Split)>, serde_json::Value)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid: Vec<f64> = (0..SERIES_LENGTH)
        .map(|j| j as f64 * SERIES_HORIZON / (SERIES_LENGTH - 1) as f64)
        .collect();
    let x0 = system.default_initial_state();
    let mut make = |kind: ForcingKind, decay: f64, n: usize| -> Result<Split> {
        let mut split = Split::new(1, 1);
        for _ in 0..n {
            let spec = ForcingSpec::sample(&mut rng, kind, decay, FORCING_OMEGA, false);
            let traj = integrate_system(system, &|t| spec.eval_1d(t), &grid, &x0)?;
            let f: Vec<f64> = grid.iter().map(|&t| spec.eval_1d(t)).collect();
            let x: Vec<f64> = traj.iter().map(|s| s[0]).collect();
            split.push(&f, &x, 0)?;
        }
        Ok(split)
    };
    let all = make(ForcingKind::Train, 0.0, FORCING_COUNTS.0)?;
    let test = make(ForcingKind::Test, 0.05, FORCING_COUNTS.1)?;
    let (train, val) = split_train(all)?;
    let params = json!({
        "system": system,
        "initial_state": x0,
        "integrator": "rk4",
        "dt": SERIES_HORIZON / (SERIES_LENGTH - 1) as f64,
        "train_forcing": "A sin(omega t)",
        "test_forcing": "A exp(-0.05 t) sin(omega t)",
        "omega_range": FORCING_OMEGA,
        "output": "first state component",
    });
    Ok((
        vec![
            ("train".into(), train),
            ("val".into(), val),
            ("test".into(), test),
        ],
        params,
    ))
}

fn pde_dataset(task: Task, seed: u64) -> Result<(Vec<(String, Split)>, serde_json::Value)> {
    let grid = task_grid(task).expect("2D task");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let quadratic = task == Task::ReactionDiffusion;
    let (d, k, ei, rho_a) = (1.0, 0.0, 1.0, 1.0);
    let (rd_d, rd_k) = (0.01, 0.01);
    let mut rejected = 0usize;
    let mut make = |kind: ForcingKind, decay: f64, n: usize| -> Result<Split> {
        let mut split = Split::new(1, 1);
        while split.len() < n {
            let spec = ForcingSpec::sample(&mut rng, kind, decay, FORCING_OMEGA, quadratic);
            let f = |x: f64, t: f64| spec.eval_2d(x, t);
            let zero = |_: f64| 0.0;
            let y = match task {
                Task::Beam => solve_beam_2d(ei, rho_a, &f, &zero, &zero, &grid),
                Task::Diffusion => solve_reaction_diffusion_2d(d, k, &f, &zero, &grid),
                _ => solve_reaction_diffusion_2d(rd_d, rd_k, &f, &zero, &grid),
            };
            match y {
                Ok(y) => split.push(&grid.sample(&f), &y, 0)?,
                Err(GlnoError::Unstable(_)) => rejected += 1,
                Err(e) => return Err(e),
            }
        }
        Ok(split)
    };
    let all = make(ForcingKind::Train, 0.05, FORCING_COUNTS.0)?;
    let test = make(ForcingKind::Test, 1.0, FORCING_COUNTS.1)?;
    let (train, val) = split_train(all)?;
    let coeffs = match task {
        Task::Beam => json!({"ei": ei, "rho_a": rho_a, "scheme": "newmark average acceleration"}),
        Task::Diffusion => json!({"d": d, "scheme": "crank-nicolson"}),
        _ => json!({"d": rd_d, "k": rd_k, "scheme": "crank-nicolson + explicit k y^2"}),
    };
    let params = json!({
        "grid": grid,
        "coefficients": coeffs,
        "train_forcing_decay": 0.05,
        "test_forcing_decay": 1.0,
        "omega_range": FORCING_OMEGA,
        "quadratic_term": quadratic,
        "initial_condition": "zero",
        "rejected_unstable_draws": rejected,
    });
    Ok((
        vec![
            ("train".into(), train),
            ("val".into(), val),
            ("test".into(), test),
        ],
        params,
    ))
}

fn poisson_dataset(profile: Profile, seed: u64) -> Result<GeneratedDataset> {
    let (n_train, n_val, n_test) = match profile {
        Profile::Desk => (400, 50, 50),
        Profile::Full => (4000, 500, 500),
    };
    let mesh = delaunay_rectangle_with(57, 7, seed ^ 0x9e37_79b9_7f4a_7c15)?;
    let solver = PoissonSolver::new(&mesh)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut splits = Vec::new();
    for (name, n) in [("train", n_train), ("val", n_val), ("test", n_test)] {
        let mut split = Split::new(1, 1);
        for _ in 0..n {
            let sources: Vec<GaussianSource> = (0..POISSON_SOURCES)
                .map(|_| GaussianSource::sample(&mut rng))
                .collect();
            let f = source_field(&mesh, &sources);
            let u = solver.solve(&f)?;
            split.push(&f, &u, 0)?;
        }
        splits.push((name.to_string(), split));
    }
    let p = boundary_distance_field(&mesh).0;
    let params = json!({
        "vertices": mesh.num_vertices(),
        "sources_per_sample": POISSON_SOURCES,
        "source": "sum of exp(-|x - mu|^2 / (2 sigma^2)), mu ~ U(0,1)^2, sigma ~ U(0.025, 0.1)",
        "boundary": "u = 0",
    });
    Ok(GeneratedDataset {
        manifest: mesh_manifest(
            Task::Poisson,
            profile,
            seed,
            &splits,
            1,
            None,
            "boundary_distance",
            params,
        ),
        splits,
        meshes: vec![(mesh, p)],
    })
}

/// Smooth random field on the unit sphere: three Gaussian bumps in the
/// ambient distance, centers uniform on the sphere.
fn sphere_bumps(rng: &mut ChaCha8Rng) -> Vec<([f64; 3], f64, f64)> {
    (0..3)
        .map(|_| {
            let z: f64 = rng.gen_range(-1.0..1.0);
            let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let r = (1.0 - z * z).sqrt();
            (
                [r * phi.cos(), r * phi.sin(), z],
                rng.gen_range(0.3..0.6),
                rng.gen_range(-1.0..1.0),
            )
        })
        .collect()
}

fn eval_bumps(mesh: &TriangleMesh, bumps: &[([f64; 3], f64, f64)]) -> Vec<f64> {
    mesh.vertices()
        .iter()
        .map(|v| {
            bumps
                .iter()
                .map(|(c, w, a)| {
                    let d2 = (v[0] - c[0]).powi(2) + (v[1] - c[1]).powi(2) + (v[2] - c[2]).powi(2);
                    a * (-d2 / (2.0 * w * w)).exp()
                })
                .sum()
        })
        .collect()
}

fn heat_sphere_dataset(profile: Profile, seed: u64) -> Result<GeneratedDataset> {
    let coarse = icosphere(3)?;
    let fine = icosphere(4)?;
    let smooth_coarse = HeatSmoother::new(&coarse, HEAT_TAU, HEAT_STEPS)?;
    let smooth_fine = HeatSmoother::new(&fine, HEAT_TAU, HEAT_STEPS)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all = Split::new(1, 1);
    for _ in 0..FORCING_COUNTS.0 {
        let f = eval_bumps(&coarse, &sphere_bumps(&mut rng));
        all.push(&f, &smooth_coarse.apply(&f)?, 0)?;
    }
    let (train, val) = split_train(all)?;
    let n_test = 50;
    let test_fields: Vec<_> = (0..n_test).map(|_| sphere_bumps(&mut rng)).collect();
    let mut test = Split::new(1, 1);
    for b in &test_fields {
        let f = eval_bumps(&coarse, b);
        test.push(&f, &smooth_coarse.apply(&f)?, 0)?;
    }
    for b in &test_fields {
        let f = eval_bumps(&fine, b);
        test.push(&f, &smooth_fine.apply(&f)?, 1)?;
    }
    let splits = vec![
        ("train".to_string(), train),
        ("val".to_string(), val),
        ("test".to_string(), test),
    ];
    let params = json!({
        "meshes": ["icosphere(3)", "icosphere(4)"],
        "operator": "implicit heat smoothing (M + tau/steps S)^-steps M",
        "tau": HEAT_TAU,
        "steps": HEAT_STEPS,
        "input": "three Gaussian bumps, width U(0.3, 0.6), height U(-1, 1)",
        "test_layout": "first half on mesh 0, the same inputs on mesh 1 in the second half",
    });
    let height = |m: &TriangleMesh| m.vertices().iter().map(|v| v[2]).collect::<Vec<f64>>();
    Ok(GeneratedDataset {
        manifest: mesh_manifest(
            Task::HeatSphere,
            profile,
            seed,
            &splits,
            2,
            None,
            "height",
            params,
        ),
        meshes: vec![
            (coarse.clone(), height(&coarse)),
            (fine.clone(), height(&fine)),
        ],
        splits,
    })
}

fn shapes_dataset(profile: Profile, seed: u64) -> Result<GeneratedDataset> {
    let set = toy_shape_classification_set(seed)?;
    let mut meshes = Vec::new();
    let mut per_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, (mesh, class)) in set.iter().enumerate() {
        per_class.entry(class.index()).or_default().push(i);
        let curv = curvature_field(mesh)?.0;
        meshes.push((mesh.clone(), curv));
    }
    let mut splits: Vec<(String, Split)> = ["train", "val", "test"]
        .iter()
        .map(|n| (n.to_string(), Split::new(1, 1)))
        .collect();
    for ids in per_class.values() {
        for (j, &i) in ids.iter().enumerate() {
            let slot = match j {
                0..=5 => 0,
                6 => 1,
                _ => 2,
            };
            let (mesh, curv) = &meshes[i];
            let label = vec![set[i].1.index() as f64; mesh.num_vertices()];
            splits[slot].1.push(curv, &label, i)?;
        }
    }
    let params = json!({
        "classes": [ShapeClass::Sphere, ShapeClass::Torus, ShapeClass::Ellipsoid],
        "input": "normalized mean curvature",
        "labels": "per-vertex copy of the mesh class",
    });
    Ok(GeneratedDataset {
        manifest: mesh_manifest(
            Task::Shapes,
            profile,
            seed,
            &splits,
            set.len(),
            Some(3),
            "curvature",
            params,
        ),
        splits,
        meshes,
    })
}

#[allow(clippy::too_many_arguments)]
fn mesh_manifest(
    task: Task,
    profile: Profile,
    seed: u64,
    splits: &[(String, Split)],
    n_meshes: usize,
    classes: Option<usize>,
    p_field: &str,
    parameters: serde_json::Value,
) -> Manifest {
    Manifest {
        task: task.to_string(),
        profile: profile.to_string(),
        seed,
        domain: DomainSpec::Mesh {
            meshes: (0..n_meshes).map(|i| format!("mesh_{i}.off")).collect(),
            p_fields: (0..n_meshes).map(|i| format!("mesh_{i}_p.bin")).collect(),
            p_field: p_field.into(),
        },
        in_dim: 1,
        out_dim: 1,
        classes,
        counts: counts_of(splits),
        validation_fraction: VALIDATION_FRACTION,
        parameters,
        files: BTreeMap::new(),
    }
}

/// Generates a task dataset in memory; a pure function of its arguments.
pub fn generate(task: Task, profile: Profile, seed: u64) -> Result<GeneratedDataset> {
    let grid_manifest = |domain: DomainSpec, splits: &[(String, Split)], parameters| Manifest {
        task: task.to_string(),
        profile: profile.to_string(),
        seed,
        domain,
        in_dim: 1,
        out_dim: 1,
        classes: None,
        counts: counts_of(splits),
        validation_fraction: VALIDATION_FRACTION,
        parameters,
        files: BTreeMap::new(),
    };
    match task {
        Task::Ode(system) => {
            let (splits, params) = ode_dataset(system, seed)?;
            let domain = DomainSpec::Grid1d {
                nt: SERIES_LENGTH,
                horizon: SERIES_HORIZON,
            };
            Ok(GeneratedDataset {
                manifest: grid_manifest(domain, &splits, params),
                splits,
                meshes: Vec::new(),
            })
        }
        Task::Beam | Task::Diffusion | Task::ReactionDiffusion => {
            let (splits, params) = pde_dataset(task, seed)?;
            let g = task_grid(task).expect("2D task");
            let domain = DomainSpec::Grid2d {
                nx: g.nx,
                nt: g.nt,
                length: g.length,
                horizon: g.horizon,
            };
            Ok(GeneratedDataset {
                manifest: grid_manifest(domain, &splits, params),
                splits,
                meshes: Vec::new(),
            })
        }
        Task::Poisson => poisson_dataset(profile, seed),
        Task::HeatSphere => heat_sphere_dataset(profile, seed),
        Task::Shapes => shapes_dataset(profile, seed),
    }
}

/// Writes a generated dataset: split arrays, meshes, geometry fields and
/// the manifest, in a fixed order.
pub fn write_dataset(dir: &Path, data: &GeneratedDataset) -> Result<Manifest> {
    std::fs::create_dir_all(dir)?;
    let mut manifest = data.manifest.clone();
    for (name, split) in &data.splits {
        manifest
            .files
            .insert(name.clone(), write_split(dir, name, split)?);
    }
    if let DomainSpec::Mesh {
        meshes, p_fields, ..
    } = &manifest.domain
    {
        for ((mesh, p), (mname, pname)) in data.meshes.iter().zip(meshes.iter().zip(p_fields)) {
            std::fs::write(dir.join(mname), write_off(mesh))?;
            write_array(&dir.join(pname), &Array::new(vec![p.len()], p.clone())?)?;
        }
    }
    manifest.write(dir)?;
    Ok(manifest)
}

/// `generate` followed by `write_dataset`.
pub fn generate_dataset(task: Task, profile: Profile, seed: u64, dir: &Path) -> Result<Manifest> {
    write_dataset(dir, &generate(task, profile, seed)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn task_names_round_trip() {
        for name in [
            "pendulum-c0",
            "pendulum-c0.5",
            "duffing-c0.5",
            "lorenz-rho5",
            "lorenz-rho10",
            "beam",
            "diffusion",
            "reaction-diffusion",
            "poisson",
            "heat-sphere",
            "shapes",
        ] {
            let t: Task = name.parse().unwrap();
            assert_eq!(t.to_string(), name);
        }
        assert!("pendulum".parse::<Task>().is_err());
        assert!("lorenz-rhoX".parse::<Task>().is_err());
        assert!("desk".parse::<Profile>().is_ok());
        assert!("huge".parse::<Profile>().is_err());
    }
}

use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::GradcheckConfig;
use super::metrics::loglog_slope;
use crate::autodiff::{Matrix, Tape, Var};
use crate::datasets::{grid_rectangle, write_array, Array};
use crate::error::{GlnoError, Result};
use crate::mesh::{
    build_laplacian, compute_spectrum, read_mesh, EigenOptions, ManifoldSpectrum, TriangleMesh,
};
use crate::nn::{
    gradcheck, Domain, DomainKind, Glno, GradcheckReport, GridContext, MeshContext, NetworkConfig,
    TaskKind,
};

fn parse_grid_mesh(spec: &str) -> Result<Option<TriangleMesh>> {
    let Some(dims) = spec.strip_prefix("grid:") else {
        return Ok(None);
    };
    let (a, b) = dims
        .split_once('x')
        .and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)))
        .ok_or_else(|| {
            GlnoError::Parse(format!("bad grid mesh {spec:?}, expected grid:<nx>x<ny>"))
        })?;
    grid_rectangle(a, b, 1.0, 1.0).map(Some)
}

fn gradcheck_domain(cfg: &GradcheckConfig) -> Result<Domain> {
    let n = &cfg.network;
    Ok(match n.domain {
        DomainKind::Grid1d => Domain::Grid(GridContext::new_1d(cfg.grid, n.modes)?),
        DomainKind::Grid2d => {
            Domain::Grid(GridContext::new_2d(cfg.nx, cfg.grid, n.modes_x, n.modes)?)
        }
        DomainKind::Mesh => {
            let mesh = match parse_grid_mesh(&cfg.mesh)? {
                Some(m) => m,
                None => read_mesh(Path::new(&cfg.mesh))?,
            };
            let (s, m) = build_laplacian(&mesh)?;
            let spec = compute_spectrum(&s, &m, n.modes, &EigenOptions::default())?;
            let p: Vec<f64> = mesh.vertices().iter().map(|v| v[0] + 0.5 * v[1]).collect();
            Domain::Mesh(MeshContext::new(&mesh, &spec, &p, n.gauss_width)?)
        }
    })
}

/// Finite-difference check of every parameter group of a toy network.
pub fn run_gradcheck(cfg: &GradcheckConfig) -> Result<GradcheckReport> {
    let domain = gradcheck_domain(cfg)?;
    let model = Glno::new(cfg.network.clone(), &domain, cfg.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xfd);
    let v = domain.num_vertices();
    let input = Matrix::from_fn(v, cfg.network.in_dim, |_, _| 0.0);
    let input = Matrix {
        data: input
            .data
            .iter()
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect(),
        ..input
    };
    let out_dim = cfg.network.out_dim;
    let task = cfg.network.task;
    let weights: Vec<f64> = (0..v * out_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let labels: Vec<usize> = (0..v).map(|_| rng.gen_range(0..out_dim)).collect();
    let loss = move |tape: &mut Tape, out: Var| -> Result<Var> {
        match task {
            TaskKind::Regression => {
                let r = tape.leaf(Matrix::new(v, out_dim, weights.clone())?);
                let lin = tape.mul(out, r)?;
                let sq = tape.mul(out, out)?;
                let sq = tape.scale(sq, 0.5);
                let s = tape.add(lin, sq)?;
                Ok(tape.mean(s))
            }
            TaskKind::NodeClassification => {
                let lp = tape.log_softmax_rows(out);
                tape.nll(lp, labels.clone())
            }
        }
    };
    gradcheck(
        &model,
        &domain,
        &input,
        &loss,
        cfg.step,
        cfg.per_param,
        cfg.seed,
    )
}

/// Dry-run check of a gradcheck configuration: builds the domain and model.
pub fn check_gradcheck(cfg: &GradcheckConfig) -> Result<usize> {
    let domain = gradcheck_domain(cfg)?;
    Ok(Glno::new(cfg.network.clone(), &domain, cfg.seed)?.num_parameters())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub vertices: usize,
    pub eigenvalues: Vec<f64>,
}

/// Reads a mesh and checks `k` eigenpairs are available.
pub fn check_spectrum(mesh: &Path, k: usize) -> Result<TriangleMesh> {
    let mesh = read_mesh(mesh)?;
    if k == 0 || k > mesh.num_vertices() {
        return Err(GlnoError::InvalidArgument(format!(
            "k = {k} eigenpairs requested for {} vertices",
            mesh.num_vertices()
        )));
    }
    Ok(mesh)
}

pub fn mesh_spectrum(mesh: &TriangleMesh, k: usize) -> Result<ManifoldSpectrum> {
    let (s, m) = build_laplacian(mesh)?;
    compute_spectrum(&s, &m, k, &EigenOptions::default())
}

/// Writes `eigenvalues.txt`, `eigenvalues.bin`, `eigenfunctions.bin`
/// (`V x k`, mass-orthonormal columns) and `mass.bin`.
pub fn dump_spectrum(mesh: &Path, k: usize, out_dir: &Path) -> Result<SpectrumSummary> {
    let mesh = check_spectrum(mesh, k)?;
    let spec = mesh_spectrum(&mesh, k)?;
    std::fs::create_dir_all(out_dir)?;
    let v = spec.num_vertices();
    let ev = spec.eigenvalues().to_vec();
    let text: String = ev.iter().map(|e| format!("{e:.17e}\n")).collect();
    std::fs::write(out_dir.join("eigenvalues.txt"), text)?;
    write_array(
        &out_dir.join("eigenvalues.bin"),
        &Array::new(vec![ev.len()], ev.clone())?,
    )?;
    let ef = spec.eigenfunctions();
    let data = (0..v)
        .flat_map(|i| (0..spec.len()).map(move |j| ef[(i, j)]))
        .collect();
    write_array(
        &out_dir.join("eigenfunctions.bin"),
        &Array::new(vec![v, spec.len()], data)?,
    )?;
    write_array(
        &out_dir.join("mass.bin"),
        &Array::new(vec![v], spec.mass().weights().to_vec())?,
    )?;
    Ok(SpectrumSummary {
        vertices: v,
        eigenvalues: ev,
    })
}

/// `a..b` (powers of two from `a` to `b`) or a comma list.
pub fn parse_sizes(text: &str) -> Result<Vec<usize>> {
    let bad = || GlnoError::Parse(format!("bad sizes {text:?}; expected a..b or a,b,c"));
    let sizes: Vec<usize> = if let Some((a, b)) = text.split_once("..") {
        let (a, b): (usize, usize) = (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        );
        if a == 0 || b < a {
            return Err(bad());
        }
        std::iter::successors(Some(a), |&k| k.checked_mul(2))
            .take_while(|&k| k <= b)
            .collect()
    } else {
        text.split(',')
            .map(|s| s.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?
    };
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(bad());
    }
    Ok(sizes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub sizes: Vec<usize>,
    /// Best-of-`repeats` forward time per size.
    pub seconds: Vec<f64>,
    pub slope: f64,
}

/// Network timed by `bench`: 4 blocks, 16 channels, 16 retained bins.
pub fn bench_network() -> NetworkConfig {
    NetworkConfig {
        channels: 16,
        blocks: 4,
        modes: 16,
        poles: 2,
        sigmas: 2,
        ..NetworkConfig::default()
    }
}

/// Times 1D forward passes at every size and fits the log-log slope.
pub fn bench_forward(
    sizes: &[usize],
    repeats: usize,
    network: &NetworkConfig,
) -> Result<BenchReport> {
    if network.domain != DomainKind::Grid1d {
        return Err(GlnoError::InvalidArgument(
            "bench supports the 1D network only".into(),
        ));
    }
    let mut seconds = Vec::new();
    for &k in sizes {
        let domain = Domain::Grid(GridContext::new_1d(k, network.modes)?);
        let model = Glno::new(network.clone(), &domain, 0)?;
        let input = Matrix::from_fn(k, network.in_dim, |i, c| ((i * 7 + c) as f64 * 0.01).sin());
        model.predict(&domain, &input)?;
        let mut best = f64::INFINITY;
        for _ in 0..repeats.max(1) {
            let t = Instant::now();
            std::hint::black_box(model.predict(&domain, &input)?);
            best = best.min(t.elapsed().as_secs_f64());
        }
        seconds.push(best);
    }
    let x: Vec<f64> = sizes.iter().map(|&k| k as f64).collect();
    let slope = loglog_slope(&x, &seconds)?;
    Ok(BenchReport {
        sizes: sizes.to_vec(),
        seconds,
        slope,
    })
}

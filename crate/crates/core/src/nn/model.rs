use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::config::{DomainKind, NetworkConfig};
use super::context::{Domain, GridContext, MeshContext};
use super::params::ParameterStore;
use crate::autodiff::{Matrix, Tape, Var};
use crate::error::{GlnoError, Result, POLE_TOLERANCE};

/// Pole decay `-re(mu)` starts log-uniform between these powers of ten
/// times the mean retained frequency.
pub const POLE_DECAY_LOG10: (f64, f64) = (-1.5, 0.0);
/// Grid decay rates start log-uniform between these powers of ten.
pub const SIGMA_INIT_LOG10: (f64, f64) = (-1.0, 1.0);
/// On meshes the exponent variable `P` may be signed, so decay rates and
/// pole decays start log-uniform between these powers of ten over `max |P|`,
/// keeping every initial exponential factor within `e^{+-1}`.
pub const MESH_RATE_LOG10: (f64, f64) = (-2.0, 0.0);

/// Operator network: lifting MLP, stacked Laplace blocks, projection MLP.
#[derive(Debug, Clone)]
pub struct Glno {
    pub config: NetworkConfig,
    pub params: ParameterStore,
}

/// Tape handles of every parameter, aligned with the store.
#[derive(Debug, Clone)]
pub struct ParamVars(pub Vec<Var>);

struct BlockVars {
    w: Var,
    b: Option<Var>,
    mu_re: Var,
    mu_im: Var,
    beta: Vec<(Var, Var)>,
    sigma: Option<Var>,
    gamma: Vec<(Var, Option<Var>)>,
    fuse: Option<([Var; 2], [Option<Var>; 2])>,
}

fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, std: f64) -> Matrix {
    let d = Normal::new(0.0, std).expect("finite positive std");
    let data = (0..rows * cols).map(|_| d.sample(rng)).collect();
    Matrix { rows, cols, data }
}

impl Glno {
    /// Random initialization. With `w` the mean retained frequency, pole
    /// decays `-re(mu)` start log-uniform in `[0.03 w, w]`, imaginary parts
    /// `~ N(0, w)`, residues `~ N(0, 1/sqrt(D))`, decay rates log-uniform
    /// in `[0.1, 10]`.
    /// Steady multipliers start at zero, so the untrained steady response of
    /// every bin is the one implied by the pole-residue kernel.
    pub fn new(config: NetworkConfig, domain: &Domain, seed: u64) -> Result<Self> {
        check_domain(&config, domain)?;
        Self::init(config, domain.mean_frequency(), domain.extent(), seed)
    }

    /// Initialization with an explicit pole frequency scale and exponent
    /// variable extent.
    pub fn init(config: NetworkConfig, omega_bar: f64, extent: f64, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = config.channels;
        let nb = config.num_bins();
        let mesh = config.domain == DomainKind::Mesh;
        let mut p = ParameterStore::new();
        let dense = |rng: &mut ChaCha8Rng, i: usize, o: usize| {
            normal_matrix(rng, i, o, (1.0 / i as f64).sqrt())
        };
        p.insert("enc.w1", dense(&mut rng, config.in_dim, d))?;
        let bias = |p: &mut ParameterStore, name: String, width: usize| -> Result<()> {
            if config.bias {
                p.insert(name, Matrix::zeros(1, width))?;
            }
            Ok(())
        };
        bias(&mut p, "enc.b1".into(), d)?;
        p.insert("enc.w2", dense(&mut rng, d, d))?;
        bias(&mut p, "enc.b2".into(), d)?;
        let res_std = 1.0 / (d as f64).sqrt();
        for l in 0..config.blocks {
            let pre = format!("block{l}");
            p.insert(format!("{pre}.w"), dense(&mut rng, d, d))?;
            bias(&mut p, format!("{pre}.b"), d)?;
            if config.spectral {
                let re = (0..config.poles)
                    .map(|_| {
                        let m = if mesh {
                            10f64.powf(rng.gen_range(MESH_RATE_LOG10.0..=MESH_RATE_LOG10.1))
                                / extent
                        } else {
                            omega_bar
                                * 10f64.powf(rng.gen_range(POLE_DECAY_LOG10.0..=POLE_DECAY_LOG10.1))
                        };
                        if config.stable_poles {
                            m + (-(-m).exp_m1()).ln()
                        } else {
                            -m
                        }
                    })
                    .collect();
                let re = Matrix::new(1, config.poles, re)?;
                let im = normal_matrix(&mut rng, 1, config.poles, omega_bar);
                p.insert(format!("{pre}.pole_re"), re)?;
                p.insert(format!("{pre}.pole_im"), im)?;
                for n in 0..config.poles {
                    let scale = res_std / config.poles as f64;
                    p.insert(
                        format!("{pre}.beta_re.{n}"),
                        normal_matrix(&mut rng, d, d, scale),
                    )?;
                    p.insert(
                        format!("{pre}.beta_im.{n}"),
                        normal_matrix(&mut rng, d, d, scale),
                    )?;
                }
                if config.learn_sigma {
                    let sig = (0..config.sigmas)
                        .map(|_| {
                            if mesh {
                                10f64.powf(rng.gen_range(MESH_RATE_LOG10.0..=MESH_RATE_LOG10.1))
                                    / extent
                            } else {
                                10f64.powf(rng.gen_range(SIGMA_INIT_LOG10.0..=SIGMA_INIT_LOG10.1))
                            }
                        })
                        .collect();
                    p.insert(format!("{pre}.sigma"), Matrix::new(1, config.sigmas, sig)?)?;
                }
                for s in 0..config.sigma_count() {
                    p.insert(format!("{pre}.gamma_re.{s}"), Matrix::zeros(nb, d))?;
                    if config.domain != DomainKind::Mesh {
                        p.insert(format!("{pre}.gamma_im.{s}"), Matrix::zeros(nb, d))?;
                    }
                }
            }
            if config.fusion {
                p.insert(
                    format!("{pre}.fuse.w1"),
                    dense(&mut rng, config.geo_features(), d),
                )?;
                bias(&mut p, format!("{pre}.fuse.b1"), d)?;
                p.insert(format!("{pre}.fuse.w2"), dense(&mut rng, d, d))?;
                bias(&mut p, format!("{pre}.fuse.b2"), d)?;
            }
        }
        p.insert("dec.w1", dense(&mut rng, d, 2 * d))?;
        bias(&mut p, "dec.b1".into(), 2 * d)?;
        p.insert("dec.w2", dense(&mut rng, 2 * d, config.out_dim))?;
        bias(&mut p, "dec.b2".into(), config.out_dim)?;
        Ok(Self { config, params: p })
    }

    /// Rebuilds a network from stored parameters, checking names and shapes
    /// against a fresh initialization of `config`.
    pub fn from_parts(config: NetworkConfig, params: ParameterStore) -> Result<Self> {
        let reference = Self::init(config.clone(), 1.0, 1.0, 0)?;
        if reference.params.names() != params.names() {
            return Err(GlnoError::Format(
                "parameter names do not match the network configuration".into(),
            ));
        }
        for (a, b) in reference.params.values().iter().zip(params.values()) {
            if a.shape() != b.shape() {
                return Err(GlnoError::Format(
                    "parameter shapes do not match the network configuration".into(),
                ));
            }
        }
        Ok(Self { config, params })
    }

    pub fn num_parameters(&self) -> usize {
        self.params.num_scalars()
    }

    /// Records the forward pass for one sample (`V x in_dim` features) and
    /// returns the `V x out_dim` output with the parameter handles.
    pub fn forward(
        &self,
        tape: &mut Tape,
        domain: &Domain,
        input: &Matrix,
    ) -> Result<(Var, ParamVars)> {
        check_domain(&self.config, domain)?;
        let v = domain.num_vertices();
        if input.rows != v || input.cols != self.config.in_dim {
            return Err(GlnoError::ShapeMismatch(format!(
                "input is {}x{}, expected {v}x{}",
                input.rows, input.cols, self.config.in_dim
            )));
        }
        if input.data.iter().any(|x| !x.is_finite()) {
            return Err(GlnoError::NonFinite("network input".into()));
        }
        let pv = ParamVars(
            self.params
                .values()
                .iter()
                .map(|m| tape.leaf(m.clone()))
                .collect(),
        );
        let get = |name: &str| -> Result<Var> {
            self.params
                .index_of(name)
                .map(|i| pv.0[i])
                .ok_or_else(|| GlnoError::InvalidArgument(format!("missing parameter {name}")))
        };
        let bias = |name: &str| -> Result<Option<Var>> {
            if self.config.bias {
                get(name).map(Some)
            } else {
                Ok(None)
            }
        };
        let x = tape.leaf(input.clone());
        let h = dense(tape, x, get("enc.w1")?, bias("enc.b1")?)?;
        let h = tape.gelu(h);
        let mut h = dense(tape, h, get("enc.w2")?, bias("enc.b2")?)?;
        let geo = match domain {
            Domain::Mesh(m) if self.config.fusion => Some(tape.leaf(m.geo.clone())),
            Domain::Grid(g) if self.config.fusion => Some(tape.leaf(g.geo.clone())),
            _ => None,
        };
        for l in 0..self.config.blocks {
            let bv = self.block_vars(tape, &pv, l)?;
            let pre_act = self.block(tape, domain, &bv, h, geo)?;
            h = tape.gelu(pre_act);
        }
        let o = dense(tape, h, get("dec.w1")?, bias("dec.b1")?)?;
        let o = tape.gelu(o);
        let out = dense(tape, o, get("dec.w2")?, bias("dec.b2")?)?;
        if tape.value(out).data.iter().any(|x| !x.is_finite()) {
            return Err(GlnoError::NonFinite("network output".into()));
        }
        Ok((out, pv))
    }

    fn block_vars(&self, tape: &mut Tape, pv: &ParamVars, l: usize) -> Result<BlockVars> {
        let get = |name: String| -> Result<Var> {
            self.params
                .index_of(&name)
                .map(|i| pv.0[i])
                .ok_or_else(|| GlnoError::InvalidArgument(format!("missing parameter {name}")))
        };
        let bias = |name: String| -> Result<Option<Var>> {
            if self.config.bias {
                get(name).map(Some)
            } else {
                Ok(None)
            }
        };
        let w = get(format!("block{l}.w"))?;
        let b = bias(format!("block{l}.b"))?;
        let fuse = if self.config.fusion {
            Some((
                [
                    get(format!("block{l}.fuse.w1"))?,
                    get(format!("block{l}.fuse.w2"))?,
                ],
                [
                    bias(format!("block{l}.fuse.b1"))?,
                    bias(format!("block{l}.fuse.b2"))?,
                ],
            ))
        } else {
            None
        };
        if !self.config.spectral {
            let zero = tape.leaf(Matrix::zeros(1, self.config.poles));
            return Ok(BlockVars {
                w,
                b,
                mu_re: zero,
                mu_im: zero,
                beta: Vec::new(),
                sigma: None,
                gamma: Vec::new(),
                fuse,
            });
        }
        let mut beta = Vec::new();
        for i in 0..self.config.poles {
            beta.push((
                get(format!("block{l}.beta_re.{i}"))?,
                get(format!("block{l}.beta_im.{i}"))?,
            ));
        }
        let mut gamma = Vec::new();
        for s in 0..self.config.sigma_count() {
            let im = if self.config.domain == DomainKind::Mesh {
                None
            } else {
                Some(get(format!("block{l}.gamma_im.{s}"))?)
            };
            gamma.push((get(format!("block{l}.gamma_re.{s}"))?, im));
        }
        let raw_re = get(format!("block{l}.pole_re"))?;
        let mu_re = if self.config.stable_poles {
            let sp = tape.softplus(raw_re);
            tape.scale(sp, -1.0)
        } else {
            raw_re
        };
        Ok(BlockVars {
            w,
            b,
            mu_re,
            mu_im: get(format!("block{l}.pole_im"))?,
            beta,
            sigma: if self.config.learn_sigma {
                Some(get(format!("block{l}.sigma"))?)
            } else {
                None
            },
            gamma,
            fuse,
        })
    }

    /// `Spectral(h) + h W + b + Fuse(geo)`, the block pre-activation.
    fn block(
        &self,
        tape: &mut Tape,
        domain: &Domain,
        bv: &BlockVars,
        h: Var,
        geo: Option<Var>,
    ) -> Result<Var> {
        let mut pre_act = dense(tape, h, bv.w, bv.b)?;
        if self.config.spectral {
            let spec = match domain {
                Domain::Grid(g) => self.grid_spectral(tape, g, bv, h)?,
                Domain::Mesh(m) => self.mesh_spectral(tape, m, bv, h)?,
            };
            pre_act = tape.add(spec, pre_act)?;
        }
        if let (Some(([w1, w2], [b1, b2])), Some(g)) = (bv.fuse, geo) {
            let f = dense(tape, g, w1, b1)?;
            let f = tape.gelu(f);
            let f = dense(tape, f, w2, b2)?;
            pre_act = tape.add(pre_act, f)?;
        }
        Ok(pre_act)
    }

    /// Pre-activation of block `l` applied to `V x D` latent features.
    pub fn block_preactivation(&self, domain: &Domain, l: usize, x: &Matrix) -> Result<Matrix> {
        self.block_eval(domain, l, x, true)
    }

    /// Spectral operator of block `l` alone applied to `V x D` latent features.
    pub fn spectral_response(&self, domain: &Domain, l: usize, x: &Matrix) -> Result<Matrix> {
        self.block_eval(domain, l, x, false)
    }

    fn block_eval(&self, domain: &Domain, l: usize, x: &Matrix, full: bool) -> Result<Matrix> {
        check_domain(&self.config, domain)?;
        if l >= self.config.blocks {
            return Err(GlnoError::InvalidArgument(format!(
                "block {l} does not exist"
            )));
        }
        if x.rows != domain.num_vertices() || x.cols != self.config.channels {
            return Err(GlnoError::ShapeMismatch(format!(
                "latent input is {}x{}",
                x.rows, x.cols
            )));
        }
        let mut tape = Tape::new();
        let pv = ParamVars(
            self.params
                .values()
                .iter()
                .map(|m| tape.leaf(m.clone()))
                .collect(),
        );
        let bv = self.block_vars(&mut tape, &pv, l)?;
        let h = tape.leaf(x.clone());
        let out = match domain {
            _ if full => {
                let geo = match domain {
                    Domain::Mesh(m) if self.config.fusion => Some(tape.leaf(m.geo.clone())),
                    Domain::Grid(g) if self.config.fusion => Some(tape.leaf(g.geo.clone())),
                    _ => None,
                };
                self.block(&mut tape, domain, &bv, h, geo)?
            }
            _ if !self.config.spectral => tape.leaf(Matrix::zeros(x.rows, x.cols)),
            Domain::Grid(g) => self.grid_spectral(&mut tape, g, &bv, h)?,
            Domain::Mesh(m) => self.mesh_spectral(&mut tape, m, &bv, h)?,
        };
        Ok(tape.value(out).clone())
    }

    /// Forward pass without gradient bookkeeping for the caller.
    pub fn predict(&self, domain: &Domain, input: &Matrix) -> Result<Matrix> {
        let mut tape = Tape::new();
        let (out, _) = self.forward(&mut tape, domain, input)?;
        Ok(tape.value(out).clone())
    }

    fn sigma_var(&self, tape: &mut Tape, bv: &BlockVars, s: usize) -> Result<Var> {
        match bv.sigma {
            Some(sig) => tape.slice_cols(sig, s, 1),
            None => Ok(tape.leaf(Matrix::zeros(1, 1))),
        }
    }

    /// `1 / (mu_n + z_b)` for every bin and pole as real and imaginary parts,
    /// with `re(mu + z) = mu_re + shift`, `im(mu + z) = mu_im + freq_b`.
    fn resolvent(
        &self,
        tape: &mut Tape,
        bv: &BlockVars,
        shift: Var,
        freq: &[f64],
    ) -> Result<(Var, Var)> {
        let (nb, np) = (freq.len(), self.config.poles);
        let zeros = tape.leaf(Matrix::zeros(nb, np));
        let a0 = tape.add_row(zeros, bv.mu_re)?;
        let a = tape.add_scalar(a0, shift)?;
        let fr = tape.leaf(Matrix::from_fn(nb, np, |b, _| freq[b]));
        let b = tape.add_row(fr, bv.mu_im)?;
        let a2 = tape.mul(a, a)?;
        let b2 = tape.mul(b, b)?;
        let den = tape.add(a2, b2)?;
        if let Some(d) = tape
            .value(den)
            .data
            .iter()
            .find(|&&d| d.sqrt() < POLE_TOLERANCE)
        {
            return Err(GlnoError::PoleCollision {
                what: "mu_n + z_b".into(),
                distance: d.sqrt(),
            });
        }
        let inv = tape.recip(den);
        let rr = tape.mul(a, inv)?;
        let bi = tape.mul(b, inv)?;
        let ri = tape.scale(bi, -1.0);
        Ok((rr, ri))
    }

    fn grid_spectral(
        &self,
        tape: &mut Tape,
        ctx: &GridContext,
        bv: &BlockVars,
        x: Var,
    ) -> Result<Var> {
        let tcol = tape.leaf(ctx.t.clone());
        let neg_omega: Vec<f64> = ctx.omega.iter().map(|w| -w).collect();
        let mut total: Option<Var> = None;
        for s in 0..self.config.sigma_count() {
            let sig = self.sigma_var(tape, bv, s)?;
            let nsig = tape.scale(sig, -1.0);
            let e = tape.mul_scalar(tcol, nsig)?;
            let w = tape.exp(e);
            let e = tape.mul_scalar(tcol, sig)?;
            let winv = tape.exp(e);
            let xw = tape.mul_col(x, w)?;
            let ar = tape.const_matmul(&ctx.analysis_re, xw)?;
            let ai = tape.const_matmul(&ctx.analysis_im, xw)?;
            let (rr, ri) = self.resolvent(tape, bv, nsig, &neg_omega)?;
            let (gr, gi) = bv.gamma[s];
            let gi = gi.ok_or_else(|| {
                GlnoError::InvalidArgument("grid blocks need complex gamma".into())
            })?;
            let (mut st_r, mut st_i) = cmul(tape, (gr, gi), (ar, ai))?;
            for (n, &(br, bi)) in bv.beta.iter().enumerate() {
                let rrn = tape.slice_cols(rr, n, 1)?;
                let rin = tape.slice_cols(ri, n, 1)?;
                let (pr, pi) = cmul_col(tape, (ar, ai), (rrn, rin))?;
                let gsr = tape.const_matmul(&ctx.group, pr)?;
                let gsi = tape.const_matmul(&ctx.group, pi)?;
                let (hr, hi) = cmatmul(tape, (gsr, gsi), (br, bi))?;
                let (yr, yi) = cconst_matmul(tape, (&ctx.space_cos, &ctx.space_sin), (hr, hi))?;
                let mur = tape.slice_cols(bv.mu_re, n, 1)?;
                let mui = tape.slice_cols(bv.mu_im, n, 1)?;
                let e = tape.mul_scalar(tcol, mur)?;
                let er = tape.exp(e);
                let th = tape.mul_scalar(tcol, mui)?;
                let c = tape.cos(th);
                let sn = tape.sin(th);
                let ec = tape.mul(er, c)?;
                let es = tape.mul(er, sn)?;
                let t1 = tape.mul_col(yr, ec)?;
                let t2 = tape.mul_col(yi, es)?;
                let tr = tape.sub(t1, t2)?;
                total = Some(accumulate(tape, total, tr)?);
                let (abr, abi) = cmatmul(tape, (ar, ai), (br, bi))?;
                let (qr, qi) = cmul_col(tape, (abr, abi), (rrn, rin))?;
                st_r = tape.sub(st_r, qr)?;
                st_i = tape.sub(st_i, qi)?;
            }
            let c = tape.const_matmul(&ctx.synth_cos, st_r)?;
            let sn = tape.const_matmul(&ctx.synth_sin, st_i)?;
            let rec = tape.sub(c, sn)?;
            let steady = tape.mul_col(rec, winv)?;
            total = Some(accumulate(tape, total, steady)?);
        }
        total.ok_or_else(|| GlnoError::InvalidArgument("no decay rates".into()))
    }

    fn mesh_spectral(
        &self,
        tape: &mut Tape,
        ctx: &MeshContext,
        bv: &BlockVars,
        x: Var,
    ) -> Result<Var> {
        let pcol = tape.leaf(ctx.p.clone());
        let width = ctx.gauss_width;
        let neg_omega = tape.leaf(Matrix::column(ctx.omega.iter().map(|w| -w).collect()));
        let mut total: Option<Var> = None;
        for s in 0..self.config.sigma_count() {
            let sig = self.sigma_var(tape, bv, s)?;
            let nsig = tape.scale(sig, -1.0);
            let e = tape.mul_scalar(pcol, nsig)?;
            let w = tape.exp(e);
            let xw = tape.mul_col(x, w)?;
            let al = tape.const_matmul(&ctx.project, xw)?;
            let (rr, ri) = self.resolvent(tape, bv, sig, &ctx.omega)?;
            let mut st = tape.mul(bv.gamma[s].0, al)?;
            for (n, &(br, bi)) in bv.beta.iter().enumerate() {
                let rrn = tape.slice_cols(rr, n, 1)?;
                let rin = tape.slice_cols(ri, n, 1)?;
                let rrt = tape.transpose(rrn);
                let rit = tape.transpose(rin);
                let fr = tape.matmul(rrt, al)?;
                let fi = tape.matmul(rit, al)?;
                let h1 = tape.matmul(fr, br)?;
                let h2 = tape.matmul(fi, bi)?;
                let hr = tape.sub(h1, h2)?;
                let mur = tape.slice_cols(bv.mu_re, n, 1)?;
                let mui = tape.slice_cols(bv.mu_im, n, 1)?;
                let d = tape.add_scalar(neg_omega, mui)?;
                let d2 = tape.mul(d, d)?;
                let g = tape.scale(d2, -1.0 / (2.0 * width * width));
                let g = tape.exp(g);
                let mut g = tape.scale(g, 1.0 / ((2.0 * PI).sqrt() * width));
                if self.config.renormalize_gauss {
                    let total_w = tape.sum(g);
                    let total_w = tape.offset(total_w, f64::MIN_POSITIVE);
                    let inv = tape.recip(total_w);
                    g = tape.mul_scalar(g, inv)?;
                }
                let field = tape.const_matmul(&ctx.phi, g)?;
                let e = tape.mul_scalar(pcol, mur)?;
                let ep = tape.exp(e);
                let field = tape.mul(field, ep)?;
                let tr = tape.matmul(field, hr)?;
                total = Some(accumulate(tape, total, tr)?);
                let abr = tape.matmul(al, br)?;
                let abi = tape.matmul(al, bi)?;
                let q1 = tape.mul_col(abr, rrn)?;
                let q2 = tape.mul_col(abi, rin)?;
                let q = tape.sub(q1, q2)?;
                st = tape.sub(st, q)?;
            }
            let rec = tape.const_matmul(&ctx.phi, st)?;
            let steady = tape.mul_col(rec, w)?;
            total = Some(accumulate(tape, total, steady)?);
        }
        total.ok_or_else(|| GlnoError::InvalidArgument("no decay rates".into()))
    }
}

fn check_domain(config: &NetworkConfig, domain: &Domain) -> Result<()> {
    let ok = match (config.domain, domain) {
        (DomainKind::Grid1d, Domain::Grid(g)) => g.nx == 1 && g.num_bins() == config.num_bins(),
        (DomainKind::Grid2d, Domain::Grid(g)) => g.num_bins() == config.num_bins(),
        (DomainKind::Mesh, Domain::Mesh(m)) => m.num_modes() == config.num_bins(),
        _ => false,
    };
    if !ok {
        return Err(GlnoError::ShapeMismatch(format!(
            "{:?} network with {} modes does not match the domain ({} modes)",
            config.domain,
            config.num_bins(),
            domain.num_modes()
        )));
    }
    Ok(())
}

fn dense(tape: &mut Tape, x: Var, w: Var, b: Option<Var>) -> Result<Var> {
    let y = tape.matmul(x, w)?;
    match b {
        Some(b) => tape.add_row(y, b),
        None => Ok(y),
    }
}

fn accumulate(tape: &mut Tape, acc: Option<Var>, v: Var) -> Result<Var> {
    match acc {
        Some(a) => tape.add(a, v),
        None => Ok(v),
    }
}

/// Elementwise complex product.
fn cmul(tape: &mut Tape, a: (Var, Var), b: (Var, Var)) -> Result<(Var, Var)> {
    let rr = tape.mul(a.0, b.0)?;
    let ii = tape.mul(a.1, b.1)?;
    let ri = tape.mul(a.0, b.1)?;
    let ir = tape.mul(a.1, b.0)?;
    Ok((tape.sub(rr, ii)?, tape.add(ri, ir)?))
}

/// Complex matrix times complex column, broadcast along rows.
fn cmul_col(tape: &mut Tape, a: (Var, Var), c: (Var, Var)) -> Result<(Var, Var)> {
    let rr = tape.mul_col(a.0, c.0)?;
    let ii = tape.mul_col(a.1, c.1)?;
    let ri = tape.mul_col(a.0, c.1)?;
    let ir = tape.mul_col(a.1, c.0)?;
    Ok((tape.sub(rr, ii)?, tape.add(ri, ir)?))
}

fn cmatmul(tape: &mut Tape, a: (Var, Var), b: (Var, Var)) -> Result<(Var, Var)> {
    let rr = tape.matmul(a.0, b.0)?;
    let ii = tape.matmul(a.1, b.1)?;
    let ri = tape.matmul(a.0, b.1)?;
    let ir = tape.matmul(a.1, b.0)?;
    Ok((tape.sub(rr, ii)?, tape.add(ri, ir)?))
}

fn cconst_matmul(
    tape: &mut Tape,
    m: (&std::sync::Arc<Matrix>, &std::sync::Arc<Matrix>),
    b: (Var, Var),
) -> Result<(Var, Var)> {
    let rr = tape.const_matmul(m.0, b.0)?;
    let ii = tape.const_matmul(m.1, b.1)?;
    let ri = tape.const_matmul(m.0, b.1)?;
    let ir = tape.const_matmul(m.1, b.0)?;
    Ok((tape.sub(rr, ii)?, tape.add(ri, ir)?))
}

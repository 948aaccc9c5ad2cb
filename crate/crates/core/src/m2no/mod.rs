//! Trainable multiwavelet multigrid operator.
//!
//! The network is `h⁰ = lift(a)`, `hˡ = GELU(Lmgˡ hˡ⁻¹ + Bˡ hˡ⁻¹ + bˡ)` for
//! `l = 1..L` and `u = project(Lmg^{L+1} h^L)`, where each `Lmg` is a
//! learnable multigrid cycle: pre-smoothing `u ← u + Sⁱ ∗ (f − A ∗ u)` from
//! `u = 0`, residual restriction with the low-pass filter `H`, recursion,
//! and the correction `ũ_j = u_j + Hᵀ ũ_{j−1}` on the way back up.
//!
//! All convolutions act on the cell layout of [`cells`]: a `k^d`-block of
//! multiwavelet coefficients per cell and channel, so one 3-tap (3×3 in 2D)
//! kernel over cells can represent the Galerkin coarse operators exactly.
//! When `hscale` is on, `A_j` is multiplied by `1/h_j²` and `S_j` by `h_j²`
//! (`h_j` the level spacing), keeping the learned weights O(1) and the
//! operator meaningful at other resolutions.
//!
//! `depth` counts grid levels here: `depth = 1` is a single smoothing level.

pub mod cells;
mod precond;
pub mod tape;
mod train;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{shape_bail, Error, Result};
use crate::io::Record;
use crate::multigrid::{MgHierarchy, Smoother};
use crate::pdegrid::{interior_spacing, Field, Sample};
use crate::polywavelet::{derive_filter_bank, FilterBank};
use cells::{Dims, Footprint};
use tape::{Tape, Var};

pub use precond::{precondition_with_model, LearnedPreconditioner};
pub use train::{backward, evaluate, loss, loss_with_tape, relative_l2, train, Adam, History, LossTape, TrainConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub dim: usize,
    pub k: usize,
    /// Hidden channel width.
    pub c: usize,
    /// Number of GELU layers `L`; the network holds `L + 1` cycles.
    pub layers: usize,
    /// Grid levels per cycle.
    pub depth: usize,
    /// Smoothing steps per level, finest first.
    pub steps: Vec<usize>,
    pub detail_maps: bool,
    pub hscale: bool,
    /// Points per axis of the training grid (0 when unknown).
    pub resolution: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            k: 4,
            c: 4,
            layers: 4,
            depth: 3,
            steps: vec![1; 3],
            detail_maps: false,
            hscale: true,
            resolution: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(1..=2).contains(&self.dim) {
            return bad(format!("dimension must be 1 or 2, got {}", self.dim));
        }
        if self.k == 0 || self.k > crate::polywavelet::MAX_ORDER {
            return Err(Error::InvalidOrder(self.k));
        }
        if self.c == 0 || self.depth == 0 {
            return bad("channel width and depth must be positive".into());
        }
        if self.steps.len() != self.depth {
            return bad(format!("{} step counts for depth {}", self.steps.len(), self.depth));
        }
        Ok(())
    }

    /// Coefficients per cell and channel.
    pub fn cell_size(&self) -> usize {
        self.k.pow(self.dim as u32)
    }

    /// Channels of the cell layout (`c · k^d`).
    pub fn cell_channels(&self) -> usize {
        self.c * self.cell_size()
    }

    fn detail_blocks(&self) -> usize {
        (1 << self.dim) - 1
    }

    /// Checks that a grid of `shape` points is admissible.
    pub fn check_grid(&self, shape: &[usize]) -> Result<()> {
        if shape.len() != self.dim {
            shape_bail!("model is {}D, field has shape {shape:?}", self.dim);
        }
        let unit = self.k << (self.depth - 1);
        if let Some(n) = shape.iter().find(|&&n| n == 0 || n % unit != 0) {
            shape_bail!("axis length {n} is not a multiple of k·2^(depth−1) = {unit}");
        }
        Ok(())
    }
}

/// A named parameter array.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
struct CycleLayout {
    a: Vec<usize>,
    s: Vec<Vec<usize>>,
    detail: Vec<Vec<usize>>,
    d_inv: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
struct Layout {
    lift: usize,
    project: usize,
    cycles: Vec<CycleLayout>,
    mix: Vec<usize>,
    bias: Vec<usize>,
}

/// Tensor shapes in a fixed order, with their index layout.
fn build_layout(cfg: &ModelConfig) -> (Vec<(String, Vec<usize>)>, Layout) {
    let cc = cfg.cell_channels();
    let kd = cfg.cell_size();
    let taps = if cfg.dim == 1 { 3 } else { 9 };
    let mut specs: Vec<(String, Vec<usize>)> = Vec::new();
    let mut add = |name: String, shape: Vec<usize>| {
        specs.push((name, shape));
        specs.len() - 1
    };
    let lift = add("lift".into(), vec![cc, kd, 1]);
    let mut cycles = Vec::new();
    let mut mix = Vec::new();
    let mut bias = Vec::new();
    for l in 0..=cfg.layers {
        let mut cl = CycleLayout { a: vec![], s: vec![], detail: vec![], d_inv: None };
        for j in 0..cfg.depth {
            cl.a.push(add(format!("cycle{l}.A{j}"), vec![cc, cc, taps]));
            cl.s.push((0..cfg.steps[j]).map(|i| add(format!("cycle{l}.S{j}.{i}"), vec![cc, cc, taps])).collect());
        }
        if cfg.detail_maps {
            for j in 0..cfg.depth - 1 {
                cl.detail.push((0..cfg.detail_blocks()).map(|b| add(format!("cycle{l}.det{j}.{b}"), vec![cc, cc, 1])).collect());
            }
            cl.d_inv = Some(add(format!("cycle{l}.Dinv"), vec![cc, cc, 1]));
        }
        cycles.push(cl);
        if l < cfg.layers {
            mix.push(add(format!("mix{l}"), vec![cc, cc, 1]));
            bias.push(add(format!("bias{l}"), vec![cc]));
        }
    }
    let project = add("project".into(), vec![kd, cc, 1]);
    (specs, Layout { lift, project, cycles, mix, bias })
}

/// Patch matrices of the fixed transfers.
#[derive(Debug, Clone)]
struct Transfers {
    h: Arc<Vec<f64>>,
    g: Vec<Arc<Vec<f64>>>,
}

impl Transfers {
    fn new(bank: &FilterBank, dim: usize) -> Self {
        let (h, g) = (bank.h(), bank.g());
        if dim == 1 {
            Self { h: Arc::new(cells::patch_matrix(&[h])), g: vec![Arc::new(cells::patch_matrix(&[g]))] }
        } else {
            Self {
                h: Arc::new(cells::patch_matrix(&[h, h])),
                g: [[g, h], [h, g], [g, g]].iter().map(|f| Arc::new(cells::patch_matrix(f))).collect(),
            }
        }
    }
}

/// All learnable tensors of one network plus fixed input/output scales.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub tensors: Vec<Tensor>,
    /// Inputs are divided by this before lifting.
    pub input_scale: f64,
    /// Projected outputs are multiplied by this.
    pub output_scale: f64,
    bank: FilterBank,
    layout: Layout,
    transfers: Transfers,
}

impl PartialEq for ModelParams {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.tensors == other.tensors
            && self.input_scale.to_bits() == other.input_scale.to_bits()
            && self.output_scale.to_bits() == other.output_scale.to_bits()
    }
}

impl ModelParams {
    /// All-zero parameters.
    pub fn zeros(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let bank = derive_filter_bank(config.k)?;
        let (specs, layout) = build_layout(&config);
        let tensors = specs
            .into_iter()
            .map(|(name, shape)| Tensor { data: vec![0.0; shape.iter().product()], name, shape })
            .collect();
        let transfers = Transfers::new(&bank, config.dim);
        Ok(Self { config, tensors, input_scale: 1.0, output_scale: 1.0, bank, layout, transfers })
    }

    /// Weights uniform in `[−s, s]`, `s = 1/√fan_in`, drawn in tensor order
    /// from ChaCha20 seeded with `seed_from_u64(seed)`; biases start at zero.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        let mut p = Self::zeros(config)?;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        for t in &mut p.tensors {
            if t.shape.len() == 3 {
                let s = 1.0 / ((t.shape[1] * t.shape[2]) as f64).sqrt();
                t.data.iter_mut().for_each(|v| *v = rng.random_range(-s..=s));
            }
        }
        Ok(p)
    }

    pub fn bank(&self) -> &FilterBank {
        &self.bank
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors.iter().map(|t| t.data.len()).sum()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.tensors.iter().map(|t| t.data.len()).collect()
    }

    pub fn tensor(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn tensor_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.tensors.iter_mut().find(|t| t.name == name)
    }

    /// Sets `input_scale`/`output_scale` to the RMS of the inputs and targets.
    pub fn fit_normalization(&mut self, samples: &[Sample]) -> Result<()> {
        let rms = |f: &dyn Fn(&Sample) -> &Field| -> f64 {
            let (mut s, mut n) = (0.0, 0usize);
            for x in samples {
                s += f(x).data().iter().map(|v| v * v).sum::<f64>();
                n += f(x).len();
            }
            (s / n.max(1) as f64).sqrt()
        };
        let (a, u) = (rms(&|s| &s.input), rms(&|s| &s.target));
        if !(a > 0.0 && u > 0.0) {
            return Err(Error::Numerical("cannot normalize by an all-zero dataset".into()));
        }
        self.input_scale = a;
        self.output_scale = u;
        Ok(())
    }

    fn level_spacing(&self, h0: f64, j: usize) -> f64 {
        h0 * (1u64 << j) as f64
    }

    fn conv_scales(&self, h0: f64, j: usize) -> (f64, f64) {
        if self.config.hscale {
            let h = self.level_spacing(h0, j);
            (1.0 / (h * h), h * h)
        } else {
            (1.0, 1.0)
        }
    }

    /// Replaces cycle `layer` by the classical V-cycle of `hier` with Jacobi
    /// smoothing, zeroing its detail maps. Requires `hier.depth() == depth − 1`
    /// and translation-invariant level operators (constant-coefficient problems).
    pub fn set_cycle_classical(&mut self, layer: usize, hier: &MgHierarchy) -> Result<()> {
        let cfg = self.config.clone();
        if layer > cfg.layers {
            return Err(Error::InvalidParameter(format!("layer {layer} out of range 0..={}", cfg.layers)));
        }
        if hier.depth() + 1 != cfg.depth || hier.bank().k() != cfg.k || hier.fine_shape().len() != cfg.dim {
            return Err(Error::InvalidParameter("hierarchy does not match the model geometry".into()));
        }
        let Smoother::Jacobi { omega } = hier.smoother() else {
            return Err(Error::InvalidParameter("classical cycle weights need a Jacobi smoother".into()));
        };
        let h0 = interior_spacing(hier.fine_shape()[0]);
        let cl = self.layout.cycles[layer].clone();
        let (kd, c, k) = (cfg.cell_size(), cfg.c, cfg.k);
        let cc = cfg.cell_channels();
        for j in 0..cfg.depth {
            let level = &hier.levels()[j];
            let cells_per_axis: Vec<usize> = level.shape.iter().map(|n| n / k).collect();
            let dims = Dims::new(&cells_per_axis);
            let taps = dims.taps();
            let (sa, ss) = self.conv_scales(h0, j);
            let point = |cell: usize, local: usize| -> usize {
                if cfg.dim == 1 {
                    cell * k + local
                } else {
                    let (cy, cx) = (cell / dims.n[1], cell % dims.n[1]);
                    let (ly, lx) = (local / k, local % k);
                    (cy * k + ly) * level.shape[1] + cx * k + lx
                }
            };
            let mut a = vec![0.0; cc * cc * taps];
            for t in 0..taps {
                // any cell whose tap neighbour exists; the operator is block-Toeplitz
                let off: Vec<isize> = if cfg.dim == 1 { vec![t as isize - 1] } else { vec![(t / 3) as isize - 1, (t % 3) as isize - 1] };
                let pick = |m: usize, o: isize| -> Option<(usize, usize)> {
                    let p = if o < 0 { 1 } else { 0 };
                    let q = (p as isize + o) as usize;
                    (p < m && q < m).then_some((p, q))
                };
                let pairs: Option<Vec<(usize, usize)>> = off.iter().enumerate().map(|(ax, &o)| pick(dims.n[ax], o)).collect();
                let Some(pairs) = pairs else { continue };
                let (p, q) = if cfg.dim == 1 {
                    (pairs[0].0, pairs[0].1)
                } else {
                    (pairs[0].0 * dims.n[1] + pairs[1].0, pairs[0].1 * dims.n[1] + pairs[1].1)
                };
                for io in 0..kd {
                    for ii in 0..kd {
                        let v = level.op.get(point(p, io), point(q, ii)) / sa;
                        for ch in 0..c {
                            let (co, ci) = (ch * kd + io, ch * kd + ii);
                            a[(co * cc + ci) * taps + t] = v;
                        }
                    }
                }
            }
            let center = taps / 2;
            let mut s = vec![0.0; cc * cc * taps];
            for io in 0..kd {
                let d = level.op.get(point(0, io), point(0, io));
                for ch in 0..c {
                    let co = ch * kd + io;
                    s[(co * cc + co) * taps + center] = omega / d / ss;
                }
            }
            self.tensors[cl.a[j]].data = a;
            for &si in &cl.s[j] {
                self.tensors[si].data = s.clone();
            }
        }
        for &d in cl.detail.iter().flatten().chain(cl.d_inv.iter()) {
            self.tensors[d].data.fill(0.0);
        }
        Ok(())
    }

    /// Serializes configuration, scales and tensors as container records.
    pub fn to_records(&self) -> Vec<Record> {
        let c = &self.config;
        let steps = c.steps.iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
        let head = Field::from_parts(vec![2], 1, vec![1.0], vec![self.input_scale, self.output_scale]);
        let mut out = vec![Record::new("model", head)
            .with_attr("dim", c.dim)
            .with_attr("k", c.k)
            .with_attr("c", c.c)
            .with_attr("layers", c.layers)
            .with_attr("depth", c.depth)
            .with_attr("steps", steps)
            .with_attr("detail_maps", c.detail_maps)
            .with_attr("hscale", c.hscale)
            .with_attr("resolution", c.resolution)];
        for t in &self.tensors {
            let f = Field::from_parts(vec![t.data.len()], 1, vec![1.0], t.data.clone());
            let shape = t.shape.iter().map(ToString::to_string).collect::<Vec<_>>().join("x");
            out.push(Record::new(t.name.clone(), f).with_attr("tensor_shape", shape));
        }
        out
    }

    pub fn from_records(records: &[Record]) -> Result<Self> {
        let fmt = |m: String| Error::Format(m);
        let head = records
            .first()
            .filter(|r| r.name.as_deref() == Some("model"))
            .ok_or_else(|| fmt("checkpoint must start with a `model` record".into()))?;
        let attr = |k: &str| head.attrs.get(k).map(String::as_str).ok_or_else(|| fmt(format!("checkpoint lacks `{k}`")));
        let num = |k: &str| -> Result<usize> { attr(k)?.parse().map_err(|_| fmt(format!("bad `{k}`"))) };
        let flag = |k: &str| -> Result<bool> { attr(k)?.parse().map_err(|_| fmt(format!("bad `{k}`"))) };
        let steps = attr("steps")?
            .split(',')
            .map(|s| s.parse().map_err(|_| fmt("bad `steps`".into())))
            .collect::<Result<Vec<usize>>>()?;
        let config = ModelConfig {
            dim: num("dim")?,
            k: num("k")?,
            c: num("c")?,
            layers: num("layers")?,
            depth: num("depth")?,
            steps,
            detail_maps: flag("detail_maps")?,
            hscale: flag("hscale")?,
            resolution: num("resolution")?,
        };
        let mut p = Self::zeros(config)?;
        if head.field.len() != 2 {
            return Err(fmt("model record must hold the two scales".into()));
        }
        p.input_scale = head.field.data()[0];
        p.output_scale = head.field.data()[1];
        if records.len() != p.tensors.len() + 1 {
            return Err(fmt(format!("checkpoint has {} tensors, model needs {}", records.len() - 1, p.tensors.len())));
        }
        for (t, r) in p.tensors.iter_mut().zip(&records[1..]) {
            if r.name.as_deref() != Some(t.name.as_str()) || r.field.len() != t.data.len() {
                return Err(fmt(format!("checkpoint tensor {:?} does not match `{}`", r.name, t.name)));
            }
            t.data = r.field.data().to_vec();
        }
        Ok(p)
    }
}

/// Per-level cell grids and spacings for one input resolution.
#[derive(Debug, Clone)]
pub(crate) struct Grid {
    dims: Vec<Dims>,
    h0: f64,
}

impl Grid {
    pub(crate) fn new(cfg: &ModelConfig, shape: &[usize], h0: f64) -> Result<Self> {
        cfg.check_grid(shape)?;
        let cells: Vec<usize> = shape.iter().map(|n| n / cfg.k).collect();
        let mut dims = vec![Dims::new(&cells)];
        for _ in 1..cfg.depth {
            let next = dims.last().unwrap().coarse();
            dims.push(next);
        }
        Ok(Self { dims, h0 })
    }
}

impl ModelParams {
    fn p(&self, tape: &mut Tape, idx: usize) -> Var {
        tape.param(idx, &self.tensors[idx].data)
    }

    /// Records one learnable cycle on cell-layout input `f`.
    pub(crate) fn record_cycle(&self, tape: &mut Tape, layer: usize, f: Var, grid: &Grid) -> Var {
        let cfg = &self.config;
        let cl = &self.layout.cycles[layer];
        let cc = cfg.cell_channels();
        let depth = cfg.depth;
        let mut fs = vec![f];
        let mut us: Vec<Option<Var>> = Vec::with_capacity(depth);
        let mut dets: Vec<Vec<Var>> = Vec::new();
        for j in 0..depth {
            let dims = grid.dims[j];
            let (sa, ss) = self.conv_scales(grid.h0, j);
            let a = self.p(tape, cl.a[j]);
            let fj = fs[j];
            let mut u: Option<Var> = None;
            for &si in &cl.s[j] {
                let r = match u {
                    None => fj,
                    Some(u) => {
                        let au = tape.conv(a, u, dims, Footprint::Full, cc, cc, sa);
                        tape.sub(fj, au)
                    }
                };
                let s = self.p(tape, si);
                let upd = tape.conv(s, r, dims, Footprint::Full, cc, cc, ss);
                u = Some(match u {
                    None => upd,
                    Some(u) => tape.add(u, upd),
                });
            }
            us.push(u);
            if j + 1 < depth {
                let r = match u {
                    None => fj,
                    Some(u) => {
                        let au = tape.conv(a, u, dims, Footprint::Full, cc, cc, sa);
                        tape.sub(fj, au)
                    }
                };
                fs.push(tape.patch(r, self.transfers.h.clone(), dims, cfg.c, cfg.k));
                if cfg.detail_maps {
                    let coarse = dims.coarse();
                    let mut level = Vec::new();
                    for (b, g) in self.transfers.g.iter().enumerate() {
                        let d = tape.patch(r, g.clone(), dims, cfg.c, cfg.k);
                        let w = self.p(tape, cl.detail[j][b]);
                        level.push(tape.conv(w, d, coarse, Footprint::Point, cc, cc, 1.0));
                    }
                    dets.push(level);
                }
            }
        }
        let last = depth - 1;
        let mut ut = us[last];
        if let Some(di) = cl.d_inv {
            let w = self.p(tape, di);
            let v = tape.conv(w, fs[last], grid.dims[last], Footprint::Point, cc, cc, 1.0);
            ut = Some(match ut {
                None => v,
                Some(u) => tape.add(u, v),
            });
        }
        for j in (0..last).rev() {
            let fine = grid.dims[j];
            let mut parts: Vec<Var> = Vec::new();
            if let Some(u) = us[j] {
                parts.push(u);
            }
            if let Some(c) = ut {
                parts.push(tape.patch_transpose(c, self.transfers.h.clone(), fine, cfg.c, cfg.k));
            }
            if cfg.detail_maps {
                for (b, g) in self.transfers.g.iter().enumerate() {
                    parts.push(tape.patch_transpose(dets[j][b], g.clone(), fine, cfg.c, cfg.k));
                }
            }
            ut = match parts.len() {
                0 => None,
                1 => Some(parts[0]),
                _ => Some(tape.sum(parts)),
            };
        }
        ut.unwrap_or_else(|| tape.leaf(vec![0.0; grid.dims[0].count() * cc]))
    }

    /// Records the full network on a cell-layout input (one channel).
    pub(crate) fn record_forward(&self, tape: &mut Tape, a: Var, grid: &Grid) -> Var {
        let cfg = &self.config;
        let (cc, kd) = (cfg.cell_channels(), cfg.cell_size());
        let d0 = grid.dims[0];
        let lift = self.p(tape, self.layout.lift);
        let mut h = tape.conv(lift, a, d0, Footprint::Point, kd, cc, 1.0 / self.input_scale);
        for l in 0..cfg.layers {
            let m = self.record_cycle(tape, l, h, grid);
            let w = self.p(tape, self.layout.mix[l]);
            let bh = tape.conv(w, h, d0, Footprint::Point, cc, cc, 1.0);
            let s = tape.add(m, bh);
            let b = self.p(tape, self.layout.bias[l]);
            let z = tape.bias(s, b);
            h = tape.gelu(z);
        }
        let m = self.record_cycle(tape, cfg.layers, h, grid);
        let proj = self.p(tape, self.layout.project);
        tape.conv(proj, m, d0, Footprint::Point, cc, kd, self.output_scale)
    }
}

pub(crate) fn input_cells(params: &ModelParams, a: &Field) -> Result<(Vec<f64>, Grid)> {
    if a.channels() != 1 {
        shape_bail!("model input must have one channel, got {}", a.channels());
    }
    let grid = Grid::new(&params.config, a.shape(), a.spacing()[0])?;
    Ok((cells::to_cells(a.data(), a.shape(), 1, params.config.k), grid))
}

/// Evaluates the network on `a`.
pub fn forward(params: &ModelParams, a: &Field) -> Result<Field> {
    let (x, grid) = input_cells(params, a)?;
    let mut tape = Tape::new();
    let xv = tape.leaf(x);
    let y = params.record_forward(&mut tape, xv, &grid);
    let out = cells::from_cells(tape.value(y), a.shape(), 1, params.config.k);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite model output".into()));
    }
    Ok(a.like(out))
}

/// Applies cycle `layer` alone to a `c`-channel field.
pub fn learnable_mg_cycle(params: &ModelParams, layer: usize, h: &Field) -> Result<Field> {
    let cfg = &params.config;
    if layer > cfg.layers {
        return Err(Error::InvalidParameter(format!("layer {layer} out of range 0..={}", cfg.layers)));
    }
    if h.channels() != cfg.c {
        shape_bail!("cycle input needs {} channels, got {}", cfg.c, h.channels());
    }
    let grid = Grid::new(cfg, h.shape(), h.spacing()[0])?;
    let mut tape = Tape::new();
    let x = tape.leaf(cells::to_cells(h.data(), h.shape(), cfg.c, cfg.k));
    let y = params.record_cycle(&mut tape, layer, x, &grid);
    Ok(h.like(cells::from_cells(tape.value(y), h.shape(), cfg.c, cfg.k)))
}

/// Runs the trained network on a finer grid. The resolution must be the
/// training resolution times a power of two.
pub fn evaluate_superres(params: &ModelParams, a_fine: &Field) -> Result<Field> {
    let base = params.config.resolution;
    if base > 0 {
        for &n in a_fine.shape() {
            if n % base != 0 || !(n / base).is_power_of_two() {
                return Err(Error::InvalidParameter(format!(
                    "resolution {n} is not a dyadic multiple of the training resolution {base}"
                )));
            }
        }
    }
    forward(params, a_fine)
}

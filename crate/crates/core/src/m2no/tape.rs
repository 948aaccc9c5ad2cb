//! Minimal reverse-mode tape over flat `f64` buffers.
//!
//! Every operation appends a node holding its output value; `backward`
//! walks the nodes in reverse and accumulates adjoints. Parameters enter as
//! dedicated leaves so their adjoints can be read back per tensor.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};

use super::cells::{self, Dims, Footprint};

/// Handle to a tape node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Param(usize),
    Conv { w: Var, x: Var, dims: Dims, fp: Footprint, cin: usize, cout: usize, scale: f64 },
    Add(Var, Var),
    Sub(Var, Var),
    Bias { x: Var, b: Var },
    Gelu(Var),
    Patch { x: Var, mat: Arc<Vec<f64>>, fine: Dims, channels: usize, k: usize },
    PatchT { y: Var, mat: Arc<Vec<f64>>, fine: Dims, channels: usize, k: usize },
    /// `Σ ‖x − target‖² / ‖target‖²`, scaled.
    RelSq { x: Var, target: Vec<f64>, inv_norm2: f64, weight: f64 },
    Sum(Vec<Var>),
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    value: Vec<f64>,
}

/// Recorded computation. Consumed by [`Tape::backward`].
#[derive(Debug, Clone, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: HashMap<usize, Var>,
    consumed: bool,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, value: Vec<f64>) -> Var {
        self.nodes.push(Node { op, value });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    pub fn leaf(&mut self, value: Vec<f64>) -> Var {
        self.push(Op::Leaf, value)
    }

    /// Parameter tensor `index`; repeated requests return the same node.
    pub fn param(&mut self, index: usize, value: &[f64]) -> Var {
        if let Some(&v) = self.params.get(&index) {
            return v;
        }
        let v = self.push(Op::Param(index), value.to_vec());
        self.params.insert(index, v);
        v
    }

    #[allow(clippy::too_many_arguments)]
    pub fn conv(&mut self, w: Var, x: Var, dims: Dims, fp: Footprint, cin: usize, cout: usize, scale: f64) -> Var {
        let y = cells::conv_forward(self.value(w), self.value(x), dims, fp, cin, cout, scale);
        self.push(Op::Conv { w, x, dims, fp, cin, cout, scale }, y)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let y = self.value(a).iter().zip(self.value(b)).map(|(a, b)| a + b).collect();
        self.push(Op::Add(a, b), y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let y = self.value(a).iter().zip(self.value(b)).map(|(a, b)| a - b).collect();
        self.push(Op::Sub(a, b), y)
    }

    /// Adds the per-channel bias `b` to every cell of `x`.
    pub fn bias(&mut self, x: Var, b: Var) -> Var {
        let bv = self.value(b);
        let c = bv.len();
        let y = self.value(x).iter().enumerate().map(|(i, v)| v + bv[i % c]).collect();
        self.push(Op::Bias { x, b }, y)
    }

    pub fn gelu(&mut self, x: Var) -> Var {
        let y = self.value(x).iter().map(|&v| cells::gelu(v)).collect();
        self.push(Op::Gelu(x), y)
    }

    pub fn patch(&mut self, x: Var, mat: Arc<Vec<f64>>, fine: Dims, channels: usize, k: usize) -> Var {
        let y = cells::patch_forward(&mat, self.value(x), fine, channels, k);
        self.push(Op::Patch { x, mat, fine, channels, k }, y)
    }

    pub fn patch_transpose(&mut self, y: Var, mat: Arc<Vec<f64>>, fine: Dims, channels: usize, k: usize) -> Var {
        let kd = k.pow(fine.d as u32);
        let mut out = vec![0.0; fine.count() * channels * kd];
        cells::patch_transpose_add(&mat, self.value(y), fine, channels, k, &mut out);
        self.push(Op::PatchT { y, mat, fine, channels, k }, out)
    }

    /// `weight · ‖x − target‖² / ‖target‖²` as a scalar node.
    pub fn rel_sq(&mut self, x: Var, target: &[f64], weight: f64) -> Result<Var> {
        let norm2: f64 = target.iter().map(|t| t * t).sum();
        if norm2 == 0.0 {
            return Err(Error::Numerical("relative loss against an all-zero target".into()));
        }
        let inv_norm2 = 1.0 / norm2;
        let err: f64 = self.value(x).iter().zip(target).map(|(a, b)| (a - b).powi(2)).sum();
        Ok(self.push(Op::RelSq { x, target: target.to_vec(), inv_norm2, weight }, vec![weight * err * inv_norm2]))
    }

    pub fn sum(&mut self, xs: Vec<Var>) -> Var {
        let n = self.value(xs[0]).len();
        let mut y = vec![0.0; n];
        for &x in &xs {
            y.iter_mut().zip(self.value(x)).for_each(|(y, v)| *y += v);
        }
        self.push(Op::Sum(xs), y)
    }

    /// Propagates `seed = ∂L/∂output` back through the tape and returns the
    /// gradient of every parameter tensor (`sizes[i]` entries for tensor `i`;
    /// tensors absent from the tape get zeros). A tape can be consumed once.
    pub fn backward(&mut self, output: Var, seed: &[f64], sizes: &[usize]) -> Result<Vec<Vec<f64>>> {
        if self.consumed {
            return Err(Error::InvalidParameter("tape already consumed by a backward pass".into()));
        }
        self.consumed = true;
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[output.0] = Some(seed.to_vec());
        let mut out: Vec<Vec<f64>> = sizes.iter().map(|&n| vec![0.0; n]).collect();
        for i in (0..=output.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            let mut acc = |v: Var, f: &mut dyn FnMut(&mut [f64])| {
                let len = self.nodes[v.0].value.len();
                let slot = grads[v.0].get_or_insert_with(|| vec![0.0; len]);
                f(slot);
            };
            match &node.op {
                Op::Leaf => {}
                Op::Param(idx) => {
                    out[*idx].iter_mut().zip(&g).for_each(|(o, g)| *o += g);
                }
                &Op::Conv { w, x, dims, fp, cin, cout, scale } => {
                    let (wv, xv) = (&self.nodes[w.0].value, &self.nodes[x.0].value);
                    let needs_x = !matches!(self.nodes[x.0].op, Op::Leaf);
                    let mut dw = vec![0.0; wv.len()];
                    let mut dx = if needs_x { vec![0.0; xv.len()] } else { Vec::new() };
                    cells::conv_backward(wv, xv, &g, dims, fp, cin, cout, scale, needs_x.then_some(dx.as_mut_slice()), Some(&mut dw));
                    acc(w, &mut |s| s.iter_mut().zip(&dw).for_each(|(s, d)| *s += d));
                    if needs_x {
                        acc(x, &mut |s| s.iter_mut().zip(&dx).for_each(|(s, d)| *s += d));
                    }
                }
                &Op::Add(a, b) => {
                    acc(a, &mut |s| s.iter_mut().zip(&g).for_each(|(s, d)| *s += d));
                    acc(b, &mut |s| s.iter_mut().zip(&g).for_each(|(s, d)| *s += d));
                }
                &Op::Sub(a, b) => {
                    acc(a, &mut |s| s.iter_mut().zip(&g).for_each(|(s, d)| *s += d));
                    acc(b, &mut |s| s.iter_mut().zip(&g).for_each(|(s, d)| *s -= d));
                }
                &Op::Bias { x, b } => {
                    acc(x, &mut |s| s.iter_mut().zip(&g).for_each(|(s, d)| *s += d));
                    acc(b, &mut |s| {
                        let c = s.len();
                        g.iter().enumerate().for_each(|(i, d)| s[i % c] += d);
                    });
                }
                &Op::Gelu(x) => {
                    let xv = &self.nodes[x.0].value;
                    let d: Vec<f64> = xv.iter().zip(&g).map(|(x, g)| g * cells::gelu_derivative(*x)).collect();
                    acc(x, &mut |s| s.iter_mut().zip(&d).for_each(|(s, d)| *s += d));
                }
                Op::Patch { x, mat, fine, channels, k } => {
                    acc(*x, &mut |s| cells::patch_transpose_add(mat, &g, *fine, *channels, *k, s));
                }
                Op::PatchT { y, mat, fine, channels, k } => {
                    let d = cells::patch_forward(mat, &g, *fine, *channels, *k);
                    acc(*y, &mut |s| s.iter_mut().zip(&d).for_each(|(s, d)| *s += d));
                }
                Op::RelSq { x, target, inv_norm2, weight } => {
                    let xv = &self.nodes[x.0].value;
                    let c = 2.0 * weight * inv_norm2 * g[0];
                    let d: Vec<f64> = xv.iter().zip(target).map(|(a, b)| c * (a - b)).collect();
                    acc(*x, &mut |s| s.iter_mut().zip(&d).for_each(|(s, d)| *s += d));
                }
                Op::Sum(xs) => {
                    for &x in xs {
                        acc(x, &mut |s| s.iter_mut().zip(&g).for_each(|(s, d)| *s += d));
                    }
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_backward_fails() {
        let mut t = Tape::new();
        let p = t.param(0, &[2.0]);
        let y = t.gelu(p);
        assert!(t.backward(y, &[1.0], &[1]).is_ok());
        assert!(t.backward(y, &[1.0], &[1]).is_err());
    }

    #[test]
    fn bias_gradient_by_hand() {
        // L = ‖x + b − t‖² / ‖t‖² with one cell, one channel: dL/db = 2(x + b − t)/t²
        let mut t = Tape::new();
        let x = t.leaf(vec![1.0]);
        let b = t.param(0, &[0.5]);
        let y = t.bias(x, b);
        let l = t.rel_sq(y, &[2.0], 1.0).unwrap();
        let g = t.backward(l, &[1.0], &[1]).unwrap();
        assert!((g[0][0] - 2.0 * (1.5 - 2.0) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn zero_seed_gives_zero_gradients() {
        let mut t = Tape::new();
        let x = t.leaf(vec![0.3, -0.2, 0.9]);
        let w = t.param(0, &[0.1, 0.2, 0.3]);
        let y = t.conv(w, x, Dims::new(&[3]), Footprint::Full, 1, 1, 1.0);
        let g = t.backward(y, &[0.0; 3], &[3]).unwrap();
        assert!(g[0].iter().all(|&v| v == 0.0));
    }
}

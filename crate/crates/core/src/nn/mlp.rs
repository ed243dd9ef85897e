use rand::Rng as _;

use super::Layout;
use crate::error::{Error, Result};
use crate::rng::Rng;

pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Shape of a residual MLP: an input projection to `hidden_width`, then
/// `n_blocks` residual blocks `h ← h + relu(layer_norm(W h + b))`, then a
/// linear read-out to `output_dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResidualMlpSpec {
    pub input_dim: usize,
    pub hidden_width: usize,
    pub n_blocks: usize,
    pub output_dim: usize,
}

impl ResidualMlpSpec {
    pub fn new(input_dim: usize, hidden_width: usize, n_blocks: usize, output_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_width,
            n_blocks,
            output_dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_width == 0 || self.output_dim == 0 {
            return Err(Error::Config(format!("network widths must be positive: {self:?}")));
        }
        if self.n_blocks == 0 {
            return Err(Error::Config("residual MLP needs at least one block".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct BlockOffsets {
    w: usize,
    b: usize,
    gain: usize,
    bias: usize,
}

/// Residual MLP with a fixed parameter layout. Parameters live outside the
/// network in a flat `&[f64]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidualMlp {
    spec: ResidualMlpSpec,
    layout: Layout,
}

/// Intermediates of one residual block needed by the backward pass.
#[derive(Debug, Clone)]
pub struct BlockTape {
    input: Vec<f64>,
    xhat: Vec<f64>,
    inv_std: f64,
    pre_relu: Vec<f64>,
}

/// Cached forward intermediates.
#[derive(Debug, Clone)]
pub struct Tape {
    input: Vec<f64>,
    blocks: Vec<BlockTape>,
    last_hidden: Vec<f64>,
}

/// Dot product with four independent accumulators so the compiler can
/// vectorize it; the summation order is fixed, so results stay bitwise
/// reproducible.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn linear(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let n_in = x.len();
    for (o, (row, bias)) in out.iter_mut().zip(w.chunks_exact(n_in).zip(b)) {
        *o = bias + dot(row, x);
    }
}

/// Accumulates `dW += g xᵀ`, `db += g` and writes `Wᵀ g` into `dx` (added).
fn linear_backward(
    w: &[f64],
    x: &[f64],
    g: &[f64],
    dw: &mut [f64],
    db: &mut [f64],
    dx: Option<&mut [f64]>,
) {
    let n_in = x.len();
    for (o, &go) in g.iter().enumerate() {
        if go == 0.0 {
            continue;
        }
        db[o] += go;
        let row = &mut dw[o * n_in..(o + 1) * n_in];
        row.iter_mut().zip(x).for_each(|(d, x)| *d += go * x);
    }
    if let Some(dx) = dx {
        for (o, &go) in g.iter().enumerate() {
            if go == 0.0 {
                continue;
            }
            let row = &w[o * n_in..(o + 1) * n_in];
            dx.iter_mut().zip(row).for_each(|(d, w)| *d += go * w);
        }
    }
}

impl ResidualMlp {
    pub fn new(spec: ResidualMlpSpec) -> Result<Self> {
        spec.validate()?;
        let (d, h, o) = (spec.input_dim, spec.hidden_width, spec.output_dim);
        let mut layout = Layout::new();
        layout.push("input/w", &[h, d]);
        layout.push("input/b", &[h]);
        for k in 0..spec.n_blocks {
            layout.push(format!("block{k}/w"), &[h, h]);
            layout.push(format!("block{k}/b"), &[h]);
            layout.push(format!("block{k}/ln_gain"), &[h]);
            layout.push(format!("block{k}/ln_bias"), &[h]);
        }
        layout.push("output/w", &[o, h]);
        layout.push("output/b", &[o]);
        Ok(Self { spec, layout })
    }

    pub fn spec(&self) -> &ResidualMlpSpec {
        &self.spec
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn n_params(&self) -> usize {
        self.layout.len()
    }

    fn input_offsets(&self) -> (usize, usize) {
        let (d, h) = (self.spec.input_dim, self.spec.hidden_width);
        (0, h * d)
    }

    fn block_offsets(&self, k: usize) -> BlockOffsets {
        let (d, h) = (self.spec.input_dim, self.spec.hidden_width);
        let base = h * d + h + k * (h * h + 3 * h);
        BlockOffsets {
            w: base,
            b: base + h * h,
            gain: base + h * h + h,
            bias: base + h * h + 2 * h,
        }
    }

    fn output_offsets(&self) -> (usize, usize) {
        let (d, h, o) = (self.spec.input_dim, self.spec.hidden_width, self.spec.output_dim);
        let base = h * d + h + self.spec.n_blocks * (h * h + 3 * h);
        (base, base + o * h)
    }

    /// Fan-in scaled uniform weights, zero biases, unit layer-norm gains.
    pub fn init(&self, rng: &mut Rng) -> Vec<f64> {
        let mut p = vec![0.0; self.n_params()];
        let (h, d, o) = (self.spec.hidden_width, self.spec.input_dim, self.spec.output_dim);
        let mut fill = |p: &mut [f64], start: usize, len: usize, fan_in: usize| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for x in &mut p[start..start + len] {
                *x = rng.random_range(-bound..bound);
            }
        };
        fill(&mut p, 0, h * d, d);
        for k in 0..self.spec.n_blocks {
            let off = self.block_offsets(k);
            fill(&mut p, off.w, h * h, h);
            p[off.gain..off.gain + h].fill(1.0);
        }
        let (ow, _) = self.output_offsets();
        fill(&mut p, ow, o * h, h);
        p
    }

    fn check(&self, params: &[f64], input: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::Input(format!(
                "expected {} parameters, got {}",
                self.n_params(),
                params.len()
            )));
        }
        if input.len() != self.spec.input_dim {
            return Err(Error::Input(format!(
                "expected input of dimension {}, got {}",
                self.spec.input_dim,
                input.len()
            )));
        }
        if input.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("non-finite network input".into()));
        }
        Ok(())
    }

    /// Forward pass without recording a tape.
    pub fn forward(&self, params: &[f64], input: &[f64]) -> Result<Vec<f64>> {
        self.check(params, input)?;
        let h = self.spec.hidden_width;
        let (iw, ib) = self.input_offsets();
        let mut hidden = vec![0.0; h];
        linear(&params[iw..ib], &params[ib..ib + h], input, &mut hidden);
        let mut z = vec![0.0; h];
        for k in 0..self.spec.n_blocks {
            let off = self.block_offsets(k);
            linear(&params[off.w..off.b], &params[off.b..off.b + h], &hidden, &mut z);
            let mean = z.iter().sum::<f64>() / h as f64;
            let var = z.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / h as f64;
            let inv_std = 1.0 / (var + LAYER_NORM_EPS).sqrt();
            for i in 0..h {
                let y = (z[i] - mean) * inv_std * params[off.gain + i] + params[off.bias + i];
                hidden[i] += y.max(0.0);
            }
        }
        let (ow, ob) = self.output_offsets();
        let mut out = vec![0.0; self.spec.output_dim];
        linear(&params[ow..ob], &params[ob..ob + self.spec.output_dim], &hidden, &mut out);
        Ok(out)
    }

    /// Forward pass that also returns the intermediates for [`Self::backward`].
    pub fn forward_tape(&self, params: &[f64], input: &[f64]) -> Result<(Vec<f64>, Tape)> {
        self.check(params, input)?;
        let h = self.spec.hidden_width;
        let (iw, ib) = self.input_offsets();
        let mut hidden = vec![0.0; h];
        linear(&params[iw..ib], &params[ib..ib + h], input, &mut hidden);
        let mut blocks = Vec::with_capacity(self.spec.n_blocks);
        for k in 0..self.spec.n_blocks {
            let off = self.block_offsets(k);
            let mut z = vec![0.0; h];
            linear(&params[off.w..off.b], &params[off.b..off.b + h], &hidden, &mut z);
            let mean = z.iter().sum::<f64>() / h as f64;
            let var = z.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / h as f64;
            let inv_std = 1.0 / (var + LAYER_NORM_EPS).sqrt();
            let xhat: Vec<f64> = z.iter().map(|v| (v - mean) * inv_std).collect();
            let pre_relu: Vec<f64> = (0..h)
                .map(|i| xhat[i] * params[off.gain + i] + params[off.bias + i])
                .collect();
            let input = hidden.clone();
            for (hv, y) in hidden.iter_mut().zip(&pre_relu) {
                *hv += y.max(0.0);
            }
            blocks.push(BlockTape {
                input,
                xhat,
                inv_std,
                pre_relu,
            });
        }
        let (ow, ob) = self.output_offsets();
        let mut out = vec![0.0; self.spec.output_dim];
        linear(&params[ow..ob], &params[ob..ob + self.spec.output_dim], &hidden, &mut out);
        Ok((
            out,
            Tape {
                input: input.to_vec(),
                blocks,
                last_hidden: hidden,
            },
        ))
    }

    /// Reverse-mode gradient of `⟨output_grad, forward(params, input)⟩`,
    /// accumulated into `param_grad`. Returns the gradient with respect to
    /// the input.
    pub fn backward_into(
        &self,
        params: &[f64],
        tape: &Tape,
        output_grad: &[f64],
        param_grad: &mut [f64],
    ) -> Result<Vec<f64>> {
        let h = self.spec.hidden_width;
        if output_grad.len() != self.spec.output_dim
            || param_grad.len() != self.n_params()
            || tape.blocks.len() != self.spec.n_blocks
            || tape.last_hidden.len() != h
        {
            return Err(Error::Internal("tape or gradient shape mismatch in backward".into()));
        }
        let (ow, ob) = self.output_offsets();
        let o = self.spec.output_dim;
        let mut dh = vec![0.0; h];
        {
            let (dw, rest) = param_grad[ow..].split_at_mut(ob - ow);
            linear_backward(
                &params[ow..ob],
                &tape.last_hidden,
                output_grad,
                dw,
                &mut rest[..o],
                Some(&mut dh),
            );
        }
        let mut dz = vec![0.0; h];
        for k in (0..self.spec.n_blocks).rev() {
            let off = self.block_offsets(k);
            let bt = &tape.blocks[k];
            let mut dxhat_sum = 0.0;
            let mut dxhat_xhat_sum = 0.0;
            for i in 0..h {
                let dy = if bt.pre_relu[i] > 0.0 { dh[i] } else { 0.0 };
                param_grad[off.gain + i] += dy * bt.xhat[i];
                param_grad[off.bias + i] += dy;
                let dxhat = dy * params[off.gain + i];
                dz[i] = dxhat;
                dxhat_sum += dxhat;
                dxhat_xhat_sum += dxhat * bt.xhat[i];
            }
            let (m1, m2) = (dxhat_sum / h as f64, dxhat_xhat_sum / h as f64);
            for i in 0..h {
                dz[i] = bt.inv_std * (dz[i] - m1 - bt.xhat[i] * m2);
            }
            let (dw, rest) = param_grad[off.w..].split_at_mut(off.b - off.w);
            linear_backward(
                &params[off.w..off.b],
                &bt.input,
                &dz,
                dw,
                &mut rest[..h],
                Some(&mut dh),
            );
        }
        let (iw, ib) = self.input_offsets();
        let mut dx = vec![0.0; self.spec.input_dim];
        let (dw, rest) = param_grad[iw..].split_at_mut(ib - iw);
        linear_backward(&params[iw..ib], &tape.input, &dh, dw, &mut rest[..h], Some(&mut dx));
        Ok(dx)
    }

    /// Parameter gradient of `⟨output_grad, forward(params, input)⟩`.
    pub fn backward(&self, params: &[f64], tape: &Tape, output_grad: &[f64]) -> Result<Vec<f64>> {
        let mut g = vec![0.0; self.n_params()];
        self.backward_into(params, tape, output_grad, &mut g)?;
        Ok(g)
    }
}

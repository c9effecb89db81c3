//! Network parameters and forward/backward kernels.
//!
//! All parameters live in one flat `f64` buffer so the optimizer and the
//! finite-difference gradient check can address every coordinate uniformly.
//! Convolutions are stride-1, zero-padded to preserve the spatial size at
//! every layer (grids can be as small as 1×1), optionally dilated.

use crate::grid::{Grid, NUM_COLORS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One convolution layer: `out_ch` filters of shape `in_ch × kernel × kernel`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvSpec {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub dilation: usize,
}

/// Network shape: a conv stack over 10 one-hot color channels, channel
/// aggregation to `3 * feature_channels()` reals, and two heads (classifier
/// and projection) on the aggregate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub convs: Vec<ConvSpec>,
    pub num_classes: usize,
    pub proj_dim: usize,
}

impl Architecture {
    /// The search-time stack: 10→32 (k3), 32→64 (k3, dilation 2), 64→64 (k3),
    /// every layer size-preserving with ReLU; 64 final channels aggregate to
    /// a 192-dimensional embedding; 16-way classifier and 64-dim projection.
    pub fn standard() -> Self {
        Architecture {
            convs: vec![
                ConvSpec { in_ch: NUM_COLORS, out_ch: 32, kernel: 3, dilation: 1 },
                ConvSpec { in_ch: 32, out_ch: 64, kernel: 3, dilation: 2 },
                ConvSpec { in_ch: 64, out_ch: 64, kernel: 3, dilation: 1 },
            ],
            num_classes: 16,
            proj_dim: 64,
        }
    }

    /// Down-scaled stack for gradient checking.
    pub fn tiny() -> Self {
        Architecture {
            convs: vec![
                ConvSpec { in_ch: NUM_COLORS, out_ch: 4, kernel: 3, dilation: 1 },
                ConvSpec { in_ch: 4, out_ch: 4, kernel: 3, dilation: 1 },
            ],
            num_classes: 4,
            proj_dim: 8,
        }
    }

    pub fn feature_channels(&self) -> usize {
        self.convs.last().expect("at least one conv layer").out_ch
    }

    /// Aggregate embedding dimension: [min ‖ max ‖ mean] per channel.
    pub fn embed_dim(&self) -> usize {
        3 * self.feature_channels()
    }

    fn conv_w_len(spec: &ConvSpec) -> usize {
        spec.out_ch * spec.in_ch * spec.kernel * spec.kernel
    }

    /// Flat parameter layout: per conv layer W then b, then classifier W, b,
    /// then projection W, b.
    pub fn param_len(&self) -> usize {
        let conv: usize = self.convs.iter().map(|s| Self::conv_w_len(s) + s.out_ch).sum();
        let heads = self.num_classes * self.embed_dim()
            + self.num_classes
            + self.proj_dim * self.embed_dim()
            + self.proj_dim;
        conv + heads
    }

    pub fn conv_offsets(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.convs.len());
        let mut at = 0;
        for spec in &self.convs {
            let w = at;
            let b = at + Self::conv_w_len(spec);
            out.push((w, b));
            at = b + spec.out_ch;
        }
        out
    }

    pub fn classifier_offsets(&self) -> (usize, usize) {
        let conv: usize = self.convs.iter().map(|s| Self::conv_w_len(s) + s.out_ch).sum();
        (conv, conv + self.num_classes * self.embed_dim())
    }

    pub fn projection_offsets(&self) -> (usize, usize) {
        let (_, cls_b) = self.classifier_offsets();
        let at = cls_b + self.num_classes;
        (at, at + self.proj_dim * self.embed_dim())
    }
}

/// The transformation-embedding model: architecture plus flat parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel {
    pub arch: Architecture,
    pub params: Vec<f64>,
}

impl CnnModel {
    /// He-style seeded initialization.
    pub fn init(arch: Architecture, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![0.0; arch.param_len()];
        for (spec, (w_off, b_off)) in arch.convs.iter().zip(arch.conv_offsets()) {
            let fan_in = (spec.in_ch * spec.kernel * spec.kernel) as f64;
            let scale = (2.0 / fan_in).sqrt();
            for p in params[w_off..b_off].iter_mut() {
                *p = gaussian(&mut rng) * scale;
            }
        }
        let embed = arch.embed_dim() as f64;
        let head_scale = (1.0 / embed).sqrt();
        let (cls_w, cls_b) = arch.classifier_offsets();
        for p in params[cls_w..cls_b].iter_mut() {
            *p = gaussian(&mut rng) * head_scale;
        }
        let (proj_w, proj_b) = arch.projection_offsets();
        for p in params[proj_w..proj_b].iter_mut() {
            *p = gaussian(&mut rng) * head_scale;
        }
        CnnModel { arch, params }
    }
}

/// Box-Muller on the ChaCha stream.
fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Channel-major activation tensor: `data[(c * h + r) * w + col]`.
#[derive(Debug, Clone)]
pub struct Feat {
    pub ch: usize,
    pub h: usize,
    pub w: usize,
    pub data: Vec<f64>,
}

impl Feat {
    pub fn zeros(ch: usize, h: usize, w: usize) -> Self {
        Feat { ch, h, w, data: vec![0.0; ch * h * w] }
    }

    #[inline]
    pub fn at(&self, c: usize, r: usize, col: usize) -> f64 {
        self.data[(c * self.h + r) * self.w + col]
    }
}

/// One-hot encode cell occupancy into 10 channels.
pub fn one_hot(grid: &Grid) -> Feat {
    let (h, w) = (grid.height(), grid.width());
    let mut feat = Feat::zeros(NUM_COLORS, h, w);
    for r in 0..h {
        for c in 0..w {
            let color = grid.get(r, c) as usize;
            feat.data[(color * h + r) * w + c] = 1.0;
        }
    }
    feat
}

/// Patch matrix for one input: `cols[pos * taps + t]` holds the input value
/// sampled by kernel tap `t = (i * k + kr) * k + kc` at output position
/// `pos = r * w + c`, zero where the tap lands in padding. Weight rows flat
/// over `(i, kr, kc)` line up with the tap axis, so the convolution becomes
/// contiguous dot products.
fn im2col(spec: &ConvSpec, input: &Feat) -> Vec<f64> {
    let (h, wd) = (input.h, input.w);
    let k = spec.kernel;
    let half = (k as i64 - 1) / 2;
    let d = spec.dilation as i64;
    let taps = spec.in_ch * k * k;
    let mut cols = vec![0.0; h * wd * taps];
    for i in 0..spec.in_ch {
        let in_plane = &input.data[i * h * wd..(i + 1) * h * wd];
        for kr in 0..k {
            let dr = (kr as i64 - half) * d;
            for kc in 0..k {
                let dc = (kc as i64 - half) * d;
                let t = (i * k + kr) * k + kc;
                for r in 0..h {
                    let rr = r as i64 + dr;
                    if rr < 0 || rr >= h as i64 {
                        continue;
                    }
                    let in_row = &in_plane[rr as usize * wd..(rr as usize + 1) * wd];
                    let row_base = r * wd;
                    for c in 0..wd {
                        let cc = c as i64 + dc;
                        if cc < 0 || cc >= wd as i64 {
                            continue;
                        }
                        cols[(row_base + c) * taps + t] = in_row[cc as usize];
                    }
                }
            }
        }
    }
    cols
}

/// Zero-padded stride-1 convolution followed by ReLU. Spatial size is
/// preserved for any input size (including 1×1).
pub fn conv_forward(spec: &ConvSpec, w: &[f64], b: &[f64], input: &Feat) -> Feat {
    debug_assert_eq!(input.ch, spec.in_ch);
    let (h, wd) = (input.h, input.w);
    let taps = spec.in_ch * spec.kernel * spec.kernel;
    let cols = im2col(spec, input);
    let mut out = Feat::zeros(spec.out_ch, h, wd);
    for o in 0..spec.out_ch {
        let w_row = &w[o * taps..(o + 1) * taps];
        let plane = &mut out.data[o * h * wd..(o + 1) * h * wd];
        for (pos, slot) in plane.iter_mut().enumerate() {
            let col = &cols[pos * taps..(pos + 1) * taps];
            let mut acc = b[o];
            for (wv, cv) in w_row.iter().zip(col) {
                acc += wv * cv;
            }
            *slot = if acc > 0.0 { acc } else { 0.0 };
        }
    }
    out
}

/// Backward pass for `conv_forward`. `d_out` is the gradient w.r.t. the
/// post-ReLU output; `output` is that post-ReLU output (its zeros mask the
/// ReLU). Accumulates into `d_w`/`d_b` and returns the input gradient.
pub fn conv_backward(
    spec: &ConvSpec,
    w: &[f64],
    input: &Feat,
    output: &Feat,
    d_out: &Feat,
    d_w: &mut [f64],
    d_b: &mut [f64],
) -> Feat {
    let (h, wd) = (input.h, input.w);
    let k = spec.kernel;
    let half = (k as i64 - 1) / 2;
    let d = spec.dilation as i64;
    let plane_len = h * wd;
    let taps = spec.in_ch * k * k;
    let cols = im2col(spec, input);
    let mut d_cols = vec![0.0; cols.len()];
    let mut d_pre = vec![0.0; plane_len];
    for o in 0..spec.out_ch {
        let out_plane = &output.data[o * plane_len..(o + 1) * plane_len];
        let d_out_plane = &d_out.data[o * plane_len..(o + 1) * plane_len];
        let mut any = false;
        // ReLU subgradient: zero where the unit did not fire.
        for i in 0..plane_len {
            let g = if out_plane[i] > 0.0 { d_out_plane[i] } else { 0.0 };
            d_pre[i] = g;
            any |= g != 0.0;
        }
        if !any {
            continue;
        }
        d_b[o] += d_pre.iter().sum::<f64>();
        let w_row = &w[o * taps..(o + 1) * taps];
        let d_w_row = &mut d_w[o * taps..(o + 1) * taps];
        for (pos, &g) in d_pre.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let col = &cols[pos * taps..(pos + 1) * taps];
            let d_col = &mut d_cols[pos * taps..(pos + 1) * taps];
            for t in 0..taps {
                d_w_row[t] += g * col[t];
                d_col[t] += g * w_row[t];
            }
        }
    }

    // Scatter the patch-matrix gradient back onto the input (reverse of
    // im2col).
    let mut d_in = Feat::zeros(spec.in_ch, h, wd);
    for i in 0..spec.in_ch {
        let d_in_plane = &mut d_in.data[i * plane_len..(i + 1) * plane_len];
        for kr in 0..k {
            let dr = (kr as i64 - half) * d;
            for kc in 0..k {
                let dc = (kc as i64 - half) * d;
                let t = (i * k + kr) * k + kc;
                for r in 0..h {
                    let rr = r as i64 + dr;
                    if rr < 0 || rr >= h as i64 {
                        continue;
                    }
                    let row_base = r * wd;
                    let dst_row = rr as usize * wd;
                    for c in 0..wd {
                        let cc = c as i64 + dc;
                        if cc < 0 || cc >= wd as i64 {
                            continue;
                        }
                        d_in_plane[dst_row + cc as usize] += d_cols[(row_base + c) * taps + t];
                    }
                }
            }
        }
    }
    d_in
}

/// Per-channel aggregation over H×W: `[min ‖ max ‖ mean]`, yielding
/// `3 * ch` values independent of the grid size.
pub fn aggregate(feat: &Feat) -> Vec<f64> {
    let ch = feat.ch;
    let plane = feat.h * feat.w;
    let mut out = vec![0.0; 3 * ch];
    for c in 0..ch {
        let slice = &feat.data[c * plane..(c + 1) * plane];
        let mut mn = slice[0];
        let mut mx = slice[0];
        let mut sum = 0.0;
        for &v in slice {
            if v < mn {
                mn = v;
            }
            if v > mx {
                mx = v;
            }
            sum += v;
        }
        out[c] = mn;
        out[ch + c] = mx;
        out[2 * ch + c] = sum / plane as f64;
    }
    out
}

/// Backward of `aggregate`: min and max route to their first occurrence in
/// row-major order; mean spreads uniformly.
pub fn aggregate_backward(feat: &Feat, d_vec: &[f64]) -> Feat {
    let ch = feat.ch;
    let plane = feat.h * feat.w;
    let mut d_feat = Feat::zeros(ch, feat.h, feat.w);
    for c in 0..ch {
        let slice = &feat.data[c * plane..(c + 1) * plane];
        let mut mn_idx = 0;
        let mut mx_idx = 0;
        for (i, &v) in slice.iter().enumerate() {
            if v < slice[mn_idx] {
                mn_idx = i;
            }
            if v > slice[mx_idx] {
                mx_idx = i;
            }
        }
        let base = c * plane;
        d_feat.data[base + mn_idx] += d_vec[c];
        d_feat.data[base + mx_idx] += d_vec[ch + c];
        let spread = d_vec[2 * ch + c] / plane as f64;
        for i in 0..plane {
            d_feat.data[base + i] += spread;
        }
    }
    d_feat
}

/// Activations kept from an encoding pass: `acts[0]` is the one-hot input,
/// `acts[l + 1]` the post-ReLU output of conv layer `l`.
pub struct EncodeCache {
    pub acts: Vec<Feat>,
}

/// Run the conv stack and aggregate. Output length is `arch.embed_dim()` for
/// every grid size.
pub fn encode_grid(model: &CnnModel, grid: &Grid) -> Vec<f64> {
    encode_grid_cached(model, grid).0
}

pub fn encode_grid_cached(model: &CnnModel, grid: &Grid) -> (Vec<f64>, EncodeCache) {
    let mut acts = Vec::with_capacity(model.arch.convs.len() + 1);
    acts.push(one_hot(grid));
    for (spec, (w_off, b_off)) in model.arch.convs.iter().zip(model.arch.conv_offsets()) {
        let w = &model.params[w_off..b_off];
        let b = &model.params[b_off..b_off + spec.out_ch];
        let out = conv_forward(spec, w, b, acts.last().unwrap());
        acts.push(out);
    }
    let vec = aggregate(acts.last().unwrap());
    (vec, EncodeCache { acts })
}

/// Backpropagate a gradient on the aggregate vector through the conv stack,
/// accumulating parameter gradients into `grads`.
pub fn encode_backward(model: &CnnModel, cache: &EncodeCache, d_vec: &[f64], grads: &mut [f64]) {
    let mut d_feat = aggregate_backward(cache.acts.last().unwrap(), d_vec);
    let offsets = model.arch.conv_offsets();
    for l in (0..model.arch.convs.len()).rev() {
        let spec = &model.arch.convs[l];
        let (w_off, b_off) = offsets[l];
        let w = &model.params[w_off..b_off];
        // Split `grads` around the layer's W/b region for simultaneous
        // mutable access.
        let (d_w, rest) = grads[w_off..].split_at_mut(b_off - w_off);
        let d_b = &mut rest[..spec.out_ch];
        d_feat = conv_backward(spec, w, &cache.acts[l], &cache.acts[l + 1], &d_feat, d_w, d_b);
    }
}

/// Dense head forward: `y = W x + b`.
pub fn linear_forward(w: &[f64], b: &[f64], x: &[f64], out_dim: usize) -> Vec<f64> {
    let in_dim = x.len();
    let mut y = Vec::with_capacity(out_dim);
    for o in 0..out_dim {
        let row = &w[o * in_dim..(o + 1) * in_dim];
        let mut acc = b[o];
        for (wi, xi) in row.iter().zip(x) {
            acc += wi * xi;
        }
        y.push(acc);
    }
    y
}

/// Dense head backward; accumulates into `d_w`/`d_b`, adds `W^T d_y` into `d_x`.
pub fn linear_backward(
    w: &[f64],
    x: &[f64],
    d_y: &[f64],
    d_w: &mut [f64],
    d_b: &mut [f64],
    d_x: &mut [f64],
) {
    let in_dim = x.len();
    for (o, &g) in d_y.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        d_b[o] += g;
        let row = &w[o * in_dim..(o + 1) * in_dim];
        let d_row = &mut d_w[o * in_dim..(o + 1) * in_dim];
        for i in 0..in_dim {
            d_row[i] += g * x[i];
            d_x[i] += g * row[i];
        }
    }
}

//! Reference encoder-decoder:
//!
//! ```text
//! x (3)  -conv s2-> e1 (c1) -conv s2-> e2 (c2)
//! e2 -up2-> conv -> d1 (c1);  s = d1 + e1
//! s  -up2-> conv -> z (1);    depth = d_min + sigmoid(z) * (d_max - d_min)
//! ```
//!
//! All convolutions are 3x3 with padding 1; hidden activations are ELU.
//! Parameters live in one flat buffer so the optimizer and checkpoints see a
//! single vector.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{conv_backward, conv_forward, elu, elu_grad, sigmoid, upsample2, upsample2_backward, ConvShape};
use crate::depth::{RgbImage, MAX_DEPTH, MIN_DEPTH};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Encoder level-1 (and decoder level-1) channels.
    pub enc1: usize,
    /// Encoder level-2 channels.
    pub enc2: usize,
    pub seed: u64,
    /// Start the output layer at zero so every prediction is the range midpoint.
    pub zero_output_layer: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            enc1: 8,
            enc2: 16,
            seed: 0,
            zero_output_layer: false,
        }
    }
}

const LAYER_NAMES: [&str; 4] = ["enc1", "enc2", "dec1", "out"];

#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel {
    config: ModelConfig,
    shapes: [ConvShape; 4],
    offsets: [usize; 5],
    params: Vec<f64>,
}

/// Intermediate activations of one sample, kept for the backward pass.
pub struct ForwardCache {
    h: usize,
    w: usize,
    input: Vec<f64>,
    a1: Vec<f64>,
    e1: Vec<f64>,
    a2: Vec<f64>,
    u1: Vec<f64>,
    a3: Vec<f64>,
    u2: Vec<f64>,
    z: Vec<f64>,
    /// Depth prediction, `h * w` values in `[MIN_DEPTH, MAX_DEPTH]`.
    pub depth: Vec<f64>,
}

impl ToyModel {
    pub fn new(config: ModelConfig) -> Result<Self> {
        if config.enc1 == 0 || config.enc2 == 0 {
            return Err(Error::InvalidParameter("model channel widths must be positive".into()));
        }
        let shapes = [
            ConvShape { in_c: 3, out_c: config.enc1, stride: 2 },
            ConvShape { in_c: config.enc1, out_c: config.enc2, stride: 2 },
            ConvShape { in_c: config.enc2, out_c: config.enc1, stride: 1 },
            ConvShape { in_c: config.enc1, out_c: 1, stride: 1 },
        ];
        let mut offsets = [0; 5];
        for (i, s) in shapes.iter().enumerate() {
            offsets[i + 1] = offsets[i] + s.param_len();
        }
        let mut params = vec![0.0; offsets[4]];
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        for (i, s) in shapes.iter().enumerate() {
            let fan_in = (s.in_c * 9) as f64;
            // He-uniform for hidden layers, Xavier-uniform for the output
            let bound = if i == 3 {
                (6.0 / (fan_in + 9.0)).sqrt()
            } else {
                (6.0 / fan_in).sqrt()
            };
            let weights = &mut params[offsets[i]..offsets[i] + s.weight_len()];
            for v in weights.iter_mut() {
                *v = rng.random_range(-bound..bound);
            }
        }
        if config.zero_output_layer {
            params[offsets[3]..].fill(0.0);
        }
        Ok(Self {
            config,
            shapes,
            offsets,
            params,
        })
    }

    pub fn config(&self) -> ModelConfig {
        self.config
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn layer(&self, i: usize) -> &[f64] {
        &self.params[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn check_input_size(h: usize, w: usize) -> Result<()> {
        if h == 0 || w == 0 || h % 4 != 0 || w % 4 != 0 {
            return Err(Error::ShapeMismatch {
                expected: "input sides divisible by 4".into(),
                actual: format!("{h}x{w}"),
            });
        }
        Ok(())
    }

    /// Runs one image and keeps the activations.
    pub fn forward_cached(&self, image: &RgbImage) -> Result<ForwardCache> {
        let (h, w) = (image.height(), image.width());
        Self::check_input_size(h, w)?;
        let [s1, s2, s3, s4] = self.shapes;
        let input = image.data().to_vec();
        let (a1, h1, w1) = conv_forward(s1, self.layer(0), &input, h, w);
        let e1: Vec<f64> = a1.iter().map(|&v| elu(v)).collect();
        let (a2, h2, w2) = conv_forward(s2, self.layer(1), &e1, h1, w1);
        let e2: Vec<f64> = a2.iter().map(|&v| elu(v)).collect();
        let u1 = upsample2(&e2, s2.out_c, h2, w2);
        let (a3, _, _) = conv_forward(s3, self.layer(2), &u1, h1, w1);
        let skip: Vec<f64> = a3.iter().zip(&e1).map(|(&a, &e)| elu(a) + e).collect();
        let u2 = upsample2(&skip, s3.out_c, h1, w1);
        let (z, _, _) = conv_forward(s4, self.layer(3), &u2, h, w);
        let depth = z.iter().map(|&v| MIN_DEPTH + sigmoid(v) * (MAX_DEPTH - MIN_DEPTH)).collect();
        Ok(ForwardCache {
            h,
            w,
            input,
            a1,
            e1,
            a2,
            u1,
            a3,
            u2,
            z,
            depth,
        })
    }

    /// Depth prediction for one image, row-major `h * w`.
    pub fn predict(&self, image: &RgbImage) -> Result<Vec<f64>> {
        Ok(self.forward_cached(image)?.depth)
    }

    pub fn forward(&self, images: &[RgbImage]) -> Result<Vec<Vec<f64>>> {
        images.iter().map(|im| self.predict(im)).collect()
    }

    /// Backpropagates `grad_depth` (dL/d depth per pixel) and adds the
    /// parameter gradient into `grad`.
    pub fn backward(&self, cache: &ForwardCache, grad_depth: &[f64], grad: &mut [f64]) {
        let (h, w) = (cache.h, cache.w);
        let (h1, w1) = (h / 2, w / 2);
        let (h2, w2) = (h / 4, w / 4);
        let [s1, s2, s3, s4] = self.shapes;
        let off = self.offsets;
        let span = MAX_DEPTH - MIN_DEPTH;
        let gz: Vec<f64> = cache
            .z
            .iter()
            .zip(grad_depth)
            .map(|(&z, &g)| {
                let s = sigmoid(z);
                g * span * s * (1.0 - s)
            })
            .collect();
        let g_u2 = conv_backward(s4, self.layer(3), &cache.u2, h, w, &gz, &mut grad[off[3]..off[4]], true).unwrap();
        let g_skip = upsample2_backward(&g_u2, s3.out_c, h1, w1);
        let g_a3: Vec<f64> = g_skip.iter().zip(&cache.a3).map(|(&g, &a)| g * elu_grad(a)).collect();
        let g_u1 = conv_backward(s3, self.layer(2), &cache.u1, h1, w1, &g_a3, &mut grad[off[2]..off[3]], true).unwrap();
        let g_e2 = upsample2_backward(&g_u1, s2.out_c, h2, w2);
        let g_a2: Vec<f64> = g_e2.iter().zip(&cache.a2).map(|(&g, &a)| g * elu_grad(a)).collect();
        let g_e1_conv = conv_backward(s2, self.layer(1), &cache.e1, h1, w1, &g_a2, &mut grad[off[1]..off[2]], true).unwrap();
        let g_a1: Vec<f64> = g_skip
            .iter()
            .zip(&g_e1_conv)
            .zip(&cache.a1)
            .map(|((&gs, &gc), &a)| (gs + gc) * elu_grad(a))
            .collect();
        conv_backward(s1, self.layer(0), &cache.input, h, w, &g_a1, &mut grad[off[0]..off[1]], false);
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct LayerFile {
    name: String,
    /// `[out_channels, in_channels, 3, 3]`
    shape: [usize; 4],
    stride: usize,
    weight: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    config: ModelConfig,
    depth_range: [f64; 2],
    param_count: usize,
    layers: Vec<LayerFile>,
}

const CHECKPOINT_FORMAT: &str = "depthcurr-toy-model";
const CHECKPOINT_VERSION: u32 = 1;

impl ToyModel {
    pub fn to_json(&self) -> Result<String> {
        let layers = self
            .shapes
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let (weight, bias) = self.layer(i).split_at(s.weight_len());
                LayerFile {
                    name: LAYER_NAMES[i].into(),
                    shape: [s.out_c, s.in_c, 3, 3],
                    stride: s.stride,
                    weight: weight.to_vec(),
                    bias: bias.to_vec(),
                }
            })
            .collect();
        Ok(serde_json::to_string(&CheckpointFile {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config: self.config,
            depth_range: [MIN_DEPTH, MAX_DEPTH],
            param_count: self.param_count(),
            layers,
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CheckpointFile = serde_json::from_str(text)?;
        if file.format != CHECKPOINT_FORMAT || file.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint {} v{}",
                file.format, file.version
            )));
        }
        let mut model = ToyModel::new(file.config)?;
        if file.layers.len() != 4 || file.param_count != model.param_count() {
            return Err(Error::Checkpoint("layer layout does not match the model config".into()));
        }
        for (i, layer) in file.layers.iter().enumerate() {
            let s = model.shapes[i];
            if layer.shape != [s.out_c, s.in_c, 3, 3]
                || layer.stride != s.stride
                || layer.weight.len() != s.weight_len()
                || layer.bias.len() != s.out_c
            {
                return Err(Error::Checkpoint(format!("layer {} has the wrong shape", layer.name)));
            }
            if layer.weight.iter().chain(&layer.bias).any(|v| !v.is_finite()) {
                return Err(Error::Checkpoint(format!("layer {} holds non-finite values", layer.name)));
            }
            let dst = &mut model.params[model.offsets[i]..model.offsets[i + 1]];
            dst[..s.weight_len()].copy_from_slice(&layer.weight);
            dst[s.weight_len()..].copy_from_slice(&layer.bias);
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

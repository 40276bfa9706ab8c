//! 3x3 convolution (padding 1), nearest 2x upsampling, and ELU on planar
//! `C x H x W` buffers, with their backward passes.

/// Output side of a 3x3, padding-1 convolution.
#[inline]
pub fn conv_out_len(len: usize, stride: usize) -> usize {
    (len - 1) / stride + 1
}

// Output positions `o` with `0 <= o * stride + k - 1 < len`, clipped to `out_len`.
#[inline]
fn valid_range(k: usize, stride: usize, len: usize, out_len: usize) -> (usize, usize) {
    let lo = if k == 0 { 1 } else { 0 };
    let hi = (len + 1 - k).div_ceil(stride).min(out_len);
    (lo, hi.max(lo))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvShape {
    pub in_c: usize,
    pub out_c: usize,
    pub stride: usize,
}

impl ConvShape {
    pub fn weight_len(&self) -> usize {
        self.out_c * self.in_c * 9
    }

    pub fn param_len(&self) -> usize {
        self.weight_len() + self.out_c
    }
}

/// `params` holds the weights (`[out][in][3][3]`) followed by the biases.
pub fn conv_forward(shape: ConvShape, params: &[f64], input: &[f64], h: usize, w: usize) -> (Vec<f64>, usize, usize) {
    let ConvShape { in_c, out_c, stride } = shape;
    let (ho, wo) = (conv_out_len(h, stride), conv_out_len(w, stride));
    let (weight, bias) = params.split_at(shape.weight_len());
    let mut out = vec![0.0; out_c * ho * wo];
    for oc in 0..out_c {
        let plane = &mut out[oc * ho * wo..(oc + 1) * ho * wo];
        plane.fill(bias[oc]);
        for ic in 0..in_c {
            let src = &input[ic * h * w..(ic + 1) * h * w];
            for ky in 0..3 {
                let (oy_lo, oy_hi) = valid_range(ky, stride, h, ho);
                for kx in 0..3 {
                    let wv = weight[((oc * in_c + ic) * 3 + ky) * 3 + kx];
                    let (ox_lo, ox_hi) = valid_range(kx, stride, w, wo);
                    for oy in oy_lo..oy_hi {
                        let iy = oy * stride + ky - 1;
                        let in_row = &src[iy * w..(iy + 1) * w];
                        let out_row = &mut plane[oy * wo..(oy + 1) * wo];
                        if stride == 1 {
                            let shift = kx as isize - 1;
                            let ins = &in_row[(ox_lo as isize + shift) as usize..(ox_hi as isize + shift) as usize];
                            for (o, &i) in out_row[ox_lo..ox_hi].iter_mut().zip(ins) {
                                *o += wv * i;
                            }
                        } else {
                            for ox in ox_lo..ox_hi {
                                out_row[ox] += wv * in_row[ox * stride + kx - 1];
                            }
                        }
                    }
                }
            }
        }
    }
    (out, ho, wo)
}

/// Accumulates parameter gradients into `grad_params` and returns the input
/// gradient when `want_input` is set.
#[allow(clippy::too_many_arguments)]
pub fn conv_backward(
    shape: ConvShape,
    params: &[f64],
    input: &[f64],
    h: usize,
    w: usize,
    grad_out: &[f64],
    grad_params: &mut [f64],
    want_input: bool,
) -> Option<Vec<f64>> {
    let ConvShape { in_c, out_c, stride } = shape;
    let (ho, wo) = (conv_out_len(h, stride), conv_out_len(w, stride));
    let weight = &params[..shape.weight_len()];
    let (gw, gb) = grad_params.split_at_mut(shape.weight_len());
    let mut grad_in = want_input.then(|| vec![0.0; in_c * h * w]);
    for oc in 0..out_c {
        let gplane = &grad_out[oc * ho * wo..(oc + 1) * ho * wo];
        gb[oc] += gplane.iter().sum::<f64>();
        for ic in 0..in_c {
            let src = &input[ic * h * w..(ic + 1) * h * w];
            for ky in 0..3 {
                let (oy_lo, oy_hi) = valid_range(ky, stride, h, ho);
                for kx in 0..3 {
                    let widx = ((oc * in_c + ic) * 3 + ky) * 3 + kx;
                    let wv = weight[widx];
                    let (ox_lo, ox_hi) = valid_range(kx, stride, w, wo);
                    let mut acc = 0.0;
                    for oy in oy_lo..oy_hi {
                        let iy = oy * stride + ky - 1;
                        let g_row = &gplane[oy * wo..(oy + 1) * wo];
                        let in_row = &src[iy * w..(iy + 1) * w];
                        if stride == 1 {
                            let shift = kx as isize - 1;
                            let lo = (ox_lo as isize + shift) as usize;
                            let hi = (ox_hi as isize + shift) as usize;
                            acc += g_row[ox_lo..ox_hi]
                                .iter()
                                .zip(&in_row[lo..hi])
                                .map(|(g, i)| g * i)
                                .sum::<f64>();
                            if let Some(gi) = grad_in.as_mut() {
                                let gi_row = &mut gi[(ic * h + iy) * w..(ic * h + iy + 1) * w];
                                for (d, &g) in gi_row[lo..hi].iter_mut().zip(&g_row[ox_lo..ox_hi]) {
                                    *d += wv * g;
                                }
                            }
                        } else {
                            for ox in ox_lo..ox_hi {
                                acc += g_row[ox] * in_row[ox * stride + kx - 1];
                            }
                            if let Some(gi) = grad_in.as_mut() {
                                let base = (ic * h + iy) * w;
                                for ox in ox_lo..ox_hi {
                                    gi[base + ox * stride + kx - 1] += wv * g_row[ox];
                                }
                            }
                        }
                    }
                    gw[widx] += acc;
                }
            }
        }
    }
    grad_in
}

/// Nearest-neighbor 2x upsampling of `c` planes of `h x w`.
pub fn upsample2(input: &[f64], c: usize, h: usize, w: usize) -> Vec<f64> {
    let (h2, w2) = (2 * h, 2 * w);
    let mut out = Vec::with_capacity(c * h2 * w2);
    for ch in 0..c {
        for y in 0..h2 {
            let row = &input[(ch * h + y / 2) * w..(ch * h + y / 2 + 1) * w];
            out.extend(row.iter().flat_map(|&v| [v, v]));
        }
    }
    out
}

/// Adjoint of [`upsample2`]: sums each 2x2 block.
pub fn upsample2_backward(grad: &[f64], c: usize, h: usize, w: usize) -> Vec<f64> {
    let w2 = 2 * w;
    let mut out = vec![0.0; c * h * w];
    for ch in 0..c {
        for y in 0..2 * h {
            let g_row = &grad[(ch * 2 * h + y) * w2..(ch * 2 * h + y + 1) * w2];
            let o_row = &mut out[(ch * h + y / 2) * w..(ch * h + y / 2 + 1) * w];
            for (o, pair) in o_row.iter_mut().zip(g_row.chunks_exact(2)) {
                *o += pair[0] + pair[1];
            }
        }
    }
    out
}

#[inline]
pub fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

#[inline]
pub fn elu_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        x.exp()
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

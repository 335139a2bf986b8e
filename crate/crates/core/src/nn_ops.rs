//! Convolution, pooling, normalization and softmax ops for [`Graph`].

use crate::graph::{Graph, Mode, Var};
use crate::scalar::Scalar;
use crate::tensor::{gemm_acc, gemm_at_acc, gemm_bt_acc, Tensor};

const BN_EPS: f64 = 1e-5;

impl<E: Scalar> Graph<E> {
    /// 2-d cross-correlation. x: [n,c,h,w], w: [o,c,kh,kw] -> [n,o,h',w'].
    pub fn conv2d(
        &self,
        x: Var,
        weight: Var,
        bias: Option<Var>,
        stride: usize,
        pad: (usize, usize),
    ) -> Var {
        let xs = self.shape_of(x);
        let ws = self.shape_of(weight);
        assert_eq!(xs.len(), 4, "conv2d input must be [n,c,h,w]");
        assert_eq!(ws.len(), 4, "conv2d weight must be [o,c,kh,kw]");
        let (n, c, h, w) = (xs[0], xs[1], xs[2], xs[3]);
        let (o, wc, kh, kw) = (ws[0], ws[1], ws[2], ws[3]);
        assert_eq!(
            c, wc,
            "contract violation: conv2d channels {c} vs weight {wc}"
        );
        assert!(kh % 2 == 1 && kw % 2 == 1, "conv2d kernels must be odd");
        let oh = (h + 2 * pad.0 - kh) / stride + 1;
        let ow = (w + 2 * pad.1 - kw) / stride + 1;
        let geom = ConvGeom {
            n,
            c,
            h,
            w,
            o,
            kh,
            kw,
            oh,
            ow,
            stride,
            pad,
        };

        let mut out = vec![E::ZERO; n * o * oh * ow];
        self.with_value(x, |xv| {
            self.with_value(weight, |wv| {
                let mut cols = vec![E::ZERO; c * kh * kw * oh * ow];
                for s in 0..n {
                    im2col(&geom, &xv.data()[s * c * h * w..(s + 1) * c * h * w], &mut cols);
                    gemm_acc(
                        &mut out[s * o * oh * ow..(s + 1) * o * oh * ow],
                        wv.data(),
                        &cols,
                        o,
                        c * kh * kw,
                        oh * ow,
                    );
                }
            })
        });
        if let Some(b) = bias {
            self.with_value(b, |bv| {
                assert_eq!(bv.numel(), o, "conv2d bias length");
                for s in 0..n {
                    for (ch, &bc) in bv.data().iter().enumerate() {
                        let base = (s * o + ch) * oh * ow;
                        for v in &mut out[base..base + oh * ow] {
                            *v += bc;
                        }
                    }
                }
            });
        }

        let parents: Vec<Var> = match bias {
            Some(b) => vec![x, weight, b],
            None => vec![x, weight],
        };
        let has_bias = bias.is_some();
        self.push_op(
            Tensor::new(&[n, o, oh, ow], out),
            parents,
            Box::new(move |g, parents, _, needs| {
                let (xv, wv) = (parents[0], parents[1]);
                let ConvGeom {
                    n, c, h, w, o, kh, kw, oh, ow, ..
                } = geom;
                let k_dim = c * kh * kw;
                let mut dx = needs[0].then(|| Tensor::zeros(&[n, c, h, w]));
                let mut dw = needs[1].then(|| vec![E::ZERO; o * k_dim]);
                let mut cols = vec![E::ZERO; k_dim * oh * ow];
                let mut dcols = vec![E::ZERO; k_dim * oh * ow];
                for s in 0..n {
                    let g_s = &g.data()[s * o * oh * ow..(s + 1) * o * oh * ow];
                    if dw.is_some() || needs[0] {
                        im2col(&geom, &xv.data()[s * c * h * w..(s + 1) * c * h * w], &mut cols);
                    }
                    if let Some(dw) = dw.as_mut() {
                        // dW += dY_s @ cols^T, contiguous via transposed-B gemm
                        gemm_bt_acc(dw, g_s, &cols, o, oh * ow, k_dim);
                    }
                    if let Some(dx) = dx.as_mut() {
                        dcols.iter_mut().for_each(|v| *v = E::ZERO);
                        // dcols = W^T @ dY_s
                        gemm_at_acc(&mut dcols, wv.data(), g_s, k_dim, o, oh * ow);
                        col2im(
                            &geom,
                            &dcols,
                            &mut dx.data_mut()[s * c * h * w..(s + 1) * c * h * w],
                        );
                    }
                }
                let mut result = vec![
                    dx,
                    dw.map(|d| Tensor::new(&[o, c, kh, kw], d)),
                ];
                if has_bias {
                    result.push(needs[2].then(|| {
                        let mut db = vec![E::ZERO; o];
                        for s in 0..n {
                            for (ch, acc) in db.iter_mut().enumerate() {
                                let base = (s * o + ch) * oh * ow;
                                for &gv in &g.data()[base..base + oh * ow] {
                                    *acc += gv;
                                }
                            }
                        }
                        Tensor::new(&[o], db)
                    }));
                }
                result
            }),
        )
    }

    /// 1-d convolution with same-length output. x: [n,c,l], w: [o,c,k].
    pub fn conv1d(&self, x: Var, weight: Var, bias: Option<Var>) -> Var {
        let xs = self.shape_of(x);
        let ws = self.shape_of(weight);
        assert_eq!(xs.len(), 3, "conv1d input must be [n,c,l]");
        assert_eq!(ws.len(), 3, "conv1d weight must be [o,c,k]");
        let k = ws[2];
        let x4 = self.reshape(x, &[xs[0], xs[1], 1, xs[2]]);
        let w4 = self.reshape(weight, &[ws[0], ws[1], 1, k]);
        let y = self.conv2d(x4, w4, bias, 1, (0, k / 2));
        let ys = self.shape_of(y);
        self.reshape(y, &[ys[0], ys[1], ys[3]])
    }

    /// 2x2 max pooling with stride 2. x: [n,c,h,w] with even h, w.
    pub fn maxpool2d(&self, x: Var) -> Var {
        let xs = self.shape_of(x);
        assert_eq!(xs.len(), 4);
        let (n, c, h, w) = (xs[0], xs[1], xs[2], xs[3]);
        assert!(h % 2 == 0 && w % 2 == 0, "maxpool2d needs even dims");
        let (oh, ow) = (h / 2, w / 2);
        let mut out = vec![E::ZERO; n * c * oh * ow];
        let mut argmax = vec![0usize; n * c * oh * ow];
        self.with_value(x, |xv| {
            let data = xv.data();
            for nc in 0..n * c {
                let base = nc * h * w;
                for i in 0..oh {
                    for j in 0..ow {
                        let mut best_idx = base + (2 * i) * w + 2 * j;
                        let mut best = data[best_idx];
                        for (di, dj) in [(0, 1), (1, 0), (1, 1)] {
                            let idx = base + (2 * i + di) * w + 2 * j + dj;
                            if data[idx] > best {
                                best = data[idx];
                                best_idx = idx;
                            }
                        }
                        out[nc * oh * ow + i * ow + j] = best;
                        argmax[nc * oh * ow + i * ow + j] = best_idx;
                    }
                }
            }
        });
        let in_shape = xs.clone();
        self.push_op(
            Tensor::new(&[n, c, oh, ow], out),
            vec![x],
            Box::new(move |g, _, _, _| {
                let mut dx = Tensor::zeros(&in_shape);
                for (gi, &src) in g.data().iter().zip(argmax.iter()) {
                    dx.data_mut()[src] += *gi;
                }
                vec![Some(dx)]
            }),
        )
    }

    /// Column-wise max over the height axis: [n,c,h,w] -> [n,c,w].
    pub fn max_over_height(&self, x: Var) -> Var {
        let xs = self.shape_of(x);
        assert_eq!(xs.len(), 4);
        let (n, c, h, w) = (xs[0], xs[1], xs[2], xs[3]);
        let mut out = vec![E::NEG_INFINITY; n * c * w];
        let mut argmax = vec![0usize; n * c * w];
        self.with_value(x, |xv| {
            let data = xv.data();
            for nc in 0..n * c {
                for i in 0..h {
                    for j in 0..w {
                        let idx = nc * h * w + i * w + j;
                        let slot = nc * w + j;
                        if data[idx] > out[slot] {
                            out[slot] = data[idx];
                            argmax[slot] = idx;
                        }
                    }
                }
            }
        });
        let in_shape = xs.clone();
        self.push_op(
            Tensor::new(&[n, c, w], out),
            vec![x],
            Box::new(move |g, _, _, _| {
                let mut dx = Tensor::zeros(&in_shape);
                for (gi, &src) in g.data().iter().zip(argmax.iter()) {
                    dx.data_mut()[src] += *gi;
                }
                vec![Some(dx)]
            }),
        )
    }

    /// Per-channel batch normalization over axis 1 of a rank-2/3/4 input.
    /// Train mode returns the batch statistics so the caller can maintain
    /// running averages; eval mode uses the provided frozen statistics.
    pub fn batchnorm(
        &self,
        x: Var,
        gamma: Var,
        beta: Var,
        running: (&Tensor<E>, &Tensor<E>),
        mode: Mode,
    ) -> (Var, Option<(Tensor<E>, Tensor<E>)>) {
        let xs = self.shape_of(x);
        assert!(xs.len() >= 2, "batchnorm input must have a channel axis");
        let n = xs[0];
        let c = xs[1];
        let r: usize = xs[2..].iter().product();
        let group = n * r;
        let eps = E::from_f64(BN_EPS);

        let (mean, var) = match mode {
            Mode::Train => {
                assert!(
                    group >= 2,
                    "contract violation: batchnorm train mode needs at least 2 elements per channel"
                );
                let mut mean = vec![E::ZERO; c];
                let mut var = vec![E::ZERO; c];
                self.with_value(x, |xv| {
                    let data = xv.data();
                    for ch in 0..c {
                        let mut sum = E::ZERO;
                        for s in 0..n {
                            let base = (s * c + ch) * r;
                            for &v in &data[base..base + r] {
                                sum += v;
                            }
                        }
                        let m = sum / E::from_f64(group as f64);
                        let mut sq = E::ZERO;
                        for s in 0..n {
                            let base = (s * c + ch) * r;
                            for &v in &data[base..base + r] {
                                let d = v - m;
                                sq += d * d;
                            }
                        }
                        mean[ch] = m;
                        var[ch] = sq / E::from_f64(group as f64);
                    }
                });
                (mean, var)
            }
            Mode::Eval => (running.0.data().to_vec(), running.1.data().to_vec()),
        };

        let inv_std: Vec<E> = var.iter().map(|&v| E::ONE / (v + eps).sqrt()).collect();
        let mut xhat = vec![E::ZERO; n * c * r];
        let mut out = vec![E::ZERO; n * c * r];
        self.with_value(x, |xv| {
            self.with_value(gamma, |gv| {
                self.with_value(beta, |bv| {
                    let data = xv.data();
                    for s in 0..n {
                        for ch in 0..c {
                            let base = (s * c + ch) * r;
                            for i in base..base + r {
                                let xh = (data[i] - mean[ch]) * inv_std[ch];
                                xhat[i] = xh;
                                out[i] = gv.data()[ch] * xh + bv.data()[ch];
                            }
                        }
                    }
                })
            })
        });

        let stats = match mode {
            Mode::Train => Some((Tensor::new(&[c], mean.clone()), Tensor::new(&[c], var.clone()))),
            Mode::Eval => None,
        };

        let shape = xs.clone();
        let train = mode == Mode::Train;
        let out_var = self.push_op(
            Tensor::new(&shape, out),
            vec![x, gamma, beta],
            Box::new(move |g, parents, _, needs| {
                let gv = parents[1];
                let gd = g.data();
                let m_inv = E::ONE / E::from_f64(group as f64);

                let dgamma = needs[1].then(|| {
                    let mut d = vec![E::ZERO; c];
                    for s in 0..n {
                        for ch in 0..c {
                            let base = (s * c + ch) * r;
                            for i in base..base + r {
                                d[ch] += gd[i] * xhat[i];
                            }
                        }
                    }
                    Tensor::new(&[c], d)
                });
                let dbeta = needs[2].then(|| {
                    let mut d = vec![E::ZERO; c];
                    for s in 0..n {
                        for ch in 0..c {
                            let base = (s * c + ch) * r;
                            for i in base..base + r {
                                d[ch] += gd[i];
                            }
                        }
                    }
                    Tensor::new(&[c], d)
                });
                let dx = needs[0].then(|| {
                    let mut dx = vec![E::ZERO; n * c * r];
                    if train {
                        // dl/dx through the batch statistics
                        let mut sum_g = vec![E::ZERO; c];
                        let mut sum_gx = vec![E::ZERO; c];
                        for s in 0..n {
                            for ch in 0..c {
                                let base = (s * c + ch) * r;
                                for i in base..base + r {
                                    sum_g[ch] += gd[i];
                                    sum_gx[ch] += gd[i] * xhat[i];
                                }
                            }
                        }
                        for s in 0..n {
                            for ch in 0..c {
                                let scale = gv.data()[ch] * inv_std[ch];
                                let base = (s * c + ch) * r;
                                for i in base..base + r {
                                    dx[i] = scale
                                        * (gd[i]
                                            - sum_g[ch] * m_inv
                                            - xhat[i] * sum_gx[ch] * m_inv);
                                }
                            }
                        }
                    } else {
                        for s in 0..n {
                            for ch in 0..c {
                                let scale = gv.data()[ch] * inv_std[ch];
                                let base = (s * c + ch) * r;
                                for i in base..base + r {
                                    dx[i] = gd[i] * scale;
                                }
                            }
                        }
                    }
                    Tensor::new(&shape, dx)
                });
                vec![dx, dgamma, dbeta]
            }),
        );
        (out_var, stats)
    }

    /// Row-wise softmax over the last axis.
    pub fn softmax_last(&self, x: Var) -> Var {
        let shape = self.shape_of(x);
        let cols = *shape.last().expect("softmax on 0-d tensor");
        let value = self.with_value(x, |xv| {
            let mut out = vec![E::ZERO; xv.numel()];
            for (orow, irow) in out.chunks_mut(cols).zip(xv.data().chunks(cols)) {
                softmax_row(irow, orow);
            }
            Tensor::new(&shape, out)
        });
        self.push_op(
            value,
            vec![x],
            Box::new(move |g, _, out, _| {
                let mut dx = vec![E::ZERO; g.numel()];
                for ((drow, grow), srow) in dx
                    .chunks_mut(cols)
                    .zip(g.data().chunks(cols))
                    .zip(out.data().chunks(cols))
                {
                    let mut dot = E::ZERO;
                    for (&gi, &si) in grow.iter().zip(srow) {
                        dot += gi * si;
                    }
                    for ((d, &gi), &si) in drow.iter_mut().zip(grow).zip(srow) {
                        *d = si * (gi - dot);
                    }
                }
                vec![Some(Tensor::new(out.shape(), dx))]
            }),
        )
    }

    /// Row-wise log-softmax over the last axis (log-sum-exp stabilized).
    pub fn log_softmax_last(&self, x: Var) -> Var {
        let shape = self.shape_of(x);
        let cols = *shape.last().expect("log_softmax on 0-d tensor");
        let value = self.with_value(x, |xv| {
            let mut out = vec![E::ZERO; xv.numel()];
            for (orow, irow) in out.chunks_mut(cols).zip(xv.data().chunks(cols)) {
                log_softmax_row(irow, orow);
            }
            Tensor::new(&shape, out)
        });
        self.push_op(
            value,
            vec![x],
            Box::new(move |g, _, out, _| {
                let mut dx = vec![E::ZERO; g.numel()];
                for ((drow, grow), lrow) in dx
                    .chunks_mut(cols)
                    .zip(g.data().chunks(cols))
                    .zip(out.data().chunks(cols))
                {
                    let sum_g: E = grow.iter().copied().sum();
                    for ((d, &gi), &li) in drow.iter_mut().zip(grow).zip(lrow) {
                        *d = gi - li.exp() * sum_g;
                    }
                }
                vec![Some(Tensor::new(out.shape(), dx))]
            }),
        )
    }

    pub(crate) fn push_op(
        &self,
        value: Tensor<E>,
        parents: Vec<Var>,
        backward: Box<dyn Fn(&Tensor<E>, &[&Tensor<E>], &Tensor<E>, &[bool]) -> Vec<Option<Tensor<E>>>>,
    ) -> Var {
        self.push_node(value, parents, Some(backward))
    }
}

struct ConvGeom {
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    o: usize,
    kh: usize,
    kw: usize,
    oh: usize,
    ow: usize,
    stride: usize,
    pad: (usize, usize),
}

fn im2col<E: Scalar>(geom: &ConvGeom, x: &[E], cols: &mut [E]) {
    let ConvGeom {
        c, h, w, kh, kw, oh, ow, stride, pad, ..
    } = *geom;
    let plane = oh * ow;
    for ch in 0..c {
        for ki in 0..kh {
            for kj in 0..kw {
                let row = ((ch * kh + ki) * kw + kj) * plane;
                for i in 0..oh {
                    let si = (i * stride + ki) as isize - pad.0 as isize;
                    let dst = &mut cols[row + i * ow..row + (i + 1) * ow];
                    if si < 0 || si >= h as isize {
                        dst.iter_mut().for_each(|v| *v = E::ZERO);
                        continue;
                    }
                    let src_base = ch * h * w + si as usize * w;
                    for (j, d) in dst.iter_mut().enumerate() {
                        let sj = (j * stride + kj) as isize - pad.1 as isize;
                        *d = if sj < 0 || sj >= w as isize {
                            E::ZERO
                        } else {
                            x[src_base + sj as usize]
                        };
                    }
                }
            }
        }
    }
}

fn col2im<E: Scalar>(geom: &ConvGeom, cols: &[E], dx: &mut [E]) {
    let ConvGeom {
        c, h, w, kh, kw, oh, ow, stride, pad, ..
    } = *geom;
    let plane = oh * ow;
    for ch in 0..c {
        for ki in 0..kh {
            for kj in 0..kw {
                let row = ((ch * kh + ki) * kw + kj) * plane;
                for i in 0..oh {
                    let si = (i * stride + ki) as isize - pad.0 as isize;
                    if si < 0 || si >= h as isize {
                        continue;
                    }
                    let dst_base = ch * h * w + si as usize * w;
                    for j in 0..ow {
                        let sj = (j * stride + kj) as isize - pad.1 as isize;
                        if sj >= 0 && sj < w as isize {
                            dx[dst_base + sj as usize] += cols[row + i * ow + j];
                        }
                    }
                }
            }
        }
    }
}

pub(crate) fn softmax_row<E: Scalar>(row: &[E], out: &mut [E]) {
    let mut max = E::NEG_INFINITY;
    for &v in row {
        max = max.max(v);
    }
    let mut sum = E::ZERO;
    for (o, &v) in out.iter_mut().zip(row) {
        *o = (v - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

pub(crate) fn log_softmax_row<E: Scalar>(row: &[E], out: &mut [E]) {
    let mut max = E::NEG_INFINITY;
    for &v in row {
        max = max.max(v);
    }
    let mut sum = E::ZERO;
    for &v in row {
        sum += (v - max).exp();
    }
    let lse = max + sum.ln();
    for (o, &v) in out.iter_mut().zip(row) {
        *o = v - lse;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    #[test]
    fn conv2d_scaling_kernel() {
        let g: Graph<f64> = Graph::new();
        let x = g.leaf(Tensor::full(&[1, 1, 3, 3], 1.0), false);
        let w = g.leaf(Tensor::new(&[1, 1, 1, 1], vec![2.0]), true);
        let y = g.conv2d(x, w, None, 1, (0, 0));
        assert_eq!(g.shape_of(y), vec![1, 1, 3, 3]);
        assert!(g.value(y).data().iter().all(|&v| v == 2.0));
    }

    #[test]
    fn conv2d_identity_kernel() {
        let g: Graph<f64> = Graph::new();
        let data: Vec<f64> = (0..25).map(|i| i as f64 * 0.4 - 3.0).collect();
        let x = g.leaf(Tensor::new(&[1, 1, 5, 5], data.clone()), false);
        let mut kernel = vec![0.0; 9];
        kernel[4] = 1.0; // center
        let w = g.leaf(Tensor::new(&[1, 1, 3, 3], kernel), true);
        let y = g.conv2d(x, w, None, 1, (1, 1));
        assert_eq!(g.value(y).data(), &data[..]);
    }

    #[test]
    fn conv2d_matches_naive_loop() {
        let g: Graph<f64> = Graph::new();
        let xd: Vec<f64> = (0..50).map(|i| ((i * 31 % 17) as f64) * 0.21 - 1.5).collect();
        let wd: Vec<f64> = (0..2 * 9).map(|i| ((i * 7 % 11) as f64) * 0.1 - 0.5).collect();
        let x = g.leaf(Tensor::new(&[1, 2, 5, 5], xd.clone()), false);
        let w = g.leaf(Tensor::new(&[1, 2, 3, 3], wd.clone()), true);
        let y = g.conv2d(x, w, None, 1, (1, 1));
        // direct nested loops
        for i in 0..5usize {
            for j in 0..5usize {
                let mut acc = 0.0;
                for c in 0..2usize {
                    for ki in 0..3usize {
                        for kj in 0..3usize {
                            let si = i as isize + ki as isize - 1;
                            let sj = j as isize + kj as isize - 1;
                            if si >= 0 && si < 5 && sj >= 0 && sj < 5 {
                                acc += xd[c * 25 + si as usize * 5 + sj as usize]
                                    * wd[c * 9 + ki * 3 + kj];
                            }
                        }
                    }
                }
                let got = g.value(y).data()[i * 5 + j];
                assert!((got - acc).abs() < 1e-6, "at ({i},{j}): {got} vs {acc}");
            }
        }
    }

    #[test]
    fn conv1d_identity_kernels() {
        let g: Graph<f64> = Graph::new();
        let data: Vec<f64> = (0..6).map(|i| i as f64 - 2.5).collect();
        let x = g.leaf(Tensor::new(&[1, 1, 6], data.clone()), false);
        // k=1 weight [1.0]
        let w1 = g.leaf(Tensor::new(&[1, 1, 1], vec![1.0]), true);
        let y1 = g.conv1d(x, w1, None);
        assert_eq!(g.value(y1).data(), &data[..]);
        // k=3 weight [0,1,0]
        let w3 = g.leaf(Tensor::new(&[1, 1, 3], vec![0.0, 1.0, 0.0]), true);
        let y3 = g.conv1d(x, w3, None);
        assert_eq!(g.value(y3).data(), &data[..]);
    }

    #[test]
    fn maxpool_picks_max() {
        let g: Graph<f64> = Graph::new();
        let x = g.leaf(Tensor::new(&[1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]), true);
        let y = g.maxpool2d(x);
        assert_eq!(g.value(y).data(), &[4.0]);
        let loss = g.sum_all(y);
        g.backward(loss);
        assert_eq!(g.grad(x).unwrap().data(), &[0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn column_max_is_row_permutation_invariant() {
        let g: Graph<f64> = Graph::new();
        let rows = [
            vec![1.0, 5.0, 3.0],
            vec![4.0, 2.0, 6.0],
        ];
        let a: Vec<f64> = rows.concat();
        let b: Vec<f64> = rows.iter().rev().flat_map(|r| r.clone()).collect();
        let xa = g.leaf(Tensor::new(&[1, 1, 2, 3], a), false);
        let xb = g.leaf(Tensor::new(&[1, 1, 2, 3], b), false);
        let ya = g.max_over_height(xa);
        let yb = g.max_over_height(xb);
        assert_eq!(g.value(ya).data(), g.value(yb).data());
        assert_eq!(g.value(ya).data(), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn softmax_symmetry() {
        let g: Graph<f64> = Graph::new();
        let x = g.leaf(Tensor::new(&[1, 2], vec![0.0, 0.0]), false);
        let y = g.softmax_last(x);
        assert_eq!(g.value(y).data(), &[0.5, 0.5]);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let g: Graph<f64> = Graph::new();
        let x = g.leaf(
            Tensor::new(&[2, 3], vec![1.0, -2.0, 0.5, 10.0, 10.0, -10.0]),
            false,
        );
        let y = g.softmax_last(x);
        for row in g.value(y).data().chunks(3) {
            let s: f64 = row.iter().sum();
            assert!((s - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn log_softmax_matches_log_of_softmax_and_is_stable() {
        let g: Graph<f64> = Graph::new();
        let vals = vec![100.0, -100.0, 3.0, 0.0];
        let x = g.leaf(Tensor::new(&[1, 4], vals), false);
        let ls = g.log_softmax_last(x);
        let s = g.softmax_last(x);
        for (a, b) in g.value(ls).data().iter().zip(g.value(s).data()) {
            assert!(a.is_finite());
            assert!((a - b.ln()).abs() < 1e-6);
        }
        // rows log-sum-exp to zero
        let total: f64 = g.value(ls).data().iter().map(|v| v.exp()).sum();
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn batchnorm_train_normalizes() {
        let g: Graph<f64> = Graph::new();
        // one channel, 256-element batch
        let data: Vec<f64> = (0..256).map(|i| (i as f64) * 0.37 - 11.0).collect();
        let x = g.leaf(Tensor::new(&[256, 1], data), false);
        let gamma = g.leaf(Tensor::new(&[1], vec![1.0]), true);
        let beta = g.leaf(Tensor::new(&[1], vec![0.0]), true);
        let running = (Tensor::zeros(&[1]), Tensor::full(&[1], 1.0));
        let (y, stats) =
            g.batchnorm(x, gamma, beta, (&running.0, &running.1), Mode::Train);
        assert!(stats.is_some());
        let out = g.value(y);
        let mean: f64 = out.data().iter().sum::<f64>() / 256.0;
        let var: f64 = out.data().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 256.0;
        assert!(mean.abs() < 1e-4);
        assert!((var - 1.0).abs() < 1e-4);
    }

    #[test]
    #[should_panic(expected = "contract violation")]
    fn batchnorm_train_rejects_batch_of_one() {
        let g: Graph<f64> = Graph::new();
        let x = g.leaf(Tensor::new(&[1, 1], vec![3.0]), false);
        let gamma = g.leaf(Tensor::new(&[1], vec![1.0]), true);
        let beta = g.leaf(Tensor::new(&[1], vec![0.0]), true);
        let running = (Tensor::zeros(&[1]), Tensor::full(&[1], 1.0));
        g.batchnorm(x, gamma, beta, (&running.0, &running.1), Mode::Train);
    }
}

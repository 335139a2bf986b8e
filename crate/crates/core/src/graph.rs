//! Reverse-mode automatic differentiation on an append-only tape.
//!
//! Ops execute eagerly: calling a method on [`Graph`] computes the output
//! value immediately and records a backward closure. [`Graph::backward`]
//! walks the tape in reverse, accumulating gradients additively into leaf
//! nodes. Parents always precede children on the tape, so reverse order is
//! a valid topological order by construction.

use std::cell::RefCell;
use std::collections::HashMap;

use crate::params::ParamStore;
use crate::scalar::Scalar;
use crate::tensor::{gemm, gemm_at_acc, gemm_bt_acc, Tensor};

/// Handle to a node on the tape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(pub(crate) usize);

/// Train/eval switch for dropout and batch normalization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

pub(crate) type BackwardFn<E> =
    Box<dyn Fn(&Tensor<E>, &[&Tensor<E>], &Tensor<E>, &[bool]) -> Vec<Option<Tensor<E>>>>;

struct Node<E: Scalar> {
    value: Tensor<E>,
    parents: Vec<Var>,
    backward: Option<BackwardFn<E>>,
    /// For leaves: gradients wanted. For interior nodes: any parent wants them.
    requires_grad: bool,
    /// Accumulated gradient (leaves only; populated by `backward`).
    grad: Option<Tensor<E>>,
}

pub struct Graph<E: Scalar> {
    nodes: RefCell<Vec<Node<E>>>,
    named: RefCell<HashMap<String, Var>>,
}

impl<E: Scalar> Default for Graph<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E: Scalar> Graph<E> {
    pub fn new() -> Self {
        Graph {
            nodes: RefCell::new(Vec::new()),
            named: RefCell::new(HashMap::new()),
        }
    }

    pub(crate) fn push_node(
        &self,
        value: Tensor<E>,
        parents: Vec<Var>,
        backward: Option<BackwardFn<E>>,
    ) -> Var {
        let mut nodes = self.nodes.borrow_mut();
        let idx = nodes.len();
        for p in &parents {
            assert!(p.0 < idx, "internal fault: tape parent out of order");
        }
        let requires_grad = if backward.is_some() {
            parents.iter().any(|p| nodes[p.0].requires_grad)
        } else {
            false
        };
        nodes.push(Node {
            value,
            parents,
            backward,
            requires_grad,
            grad: None,
        });
        Var(idx)
    }

    pub fn leaf(&self, value: Tensor<E>, requires_grad: bool) -> Var {
        let mut nodes = self.nodes.borrow_mut();
        let idx = nodes.len();
        nodes.push(Node {
            value,
            parents: Vec::new(),
            backward: None,
            requires_grad,
            grad: None,
        });
        Var(idx)
    }

    pub fn constant(&self, value: Tensor<E>) -> Var {
        self.leaf(value, false)
    }

    /// Lift a named parameter from the store onto the tape. Memoized per
    /// graph: asking for the same name twice returns the same leaf, so
    /// modules shared between flows accumulate gradients into one node.
    pub fn param(&self, store: &ParamStore<E>, name: &str) -> Var {
        if let Some(&v) = self.named.borrow().get(name) {
            return v;
        }
        let entry = store.entry(name);
        let v = self.leaf(entry.value.clone(), entry.trainable);
        self.named.borrow_mut().insert(name.to_string(), v);
        v
    }

    /// Leaves created via [`Graph::param`], in creation order.
    pub fn named_leaves(&self) -> Vec<(String, Var)> {
        let named = self.named.borrow();
        let mut out: Vec<(String, Var)> = named.iter().map(|(k, &v)| (k.clone(), v)).collect();
        out.sort_by_key(|(_, v)| v.0);
        out
    }

    pub fn value(&self, v: Var) -> Tensor<E> {
        self.nodes.borrow()[v.0].value.clone()
    }

    pub fn with_value<R>(&self, v: Var, f: impl FnOnce(&Tensor<E>) -> R) -> R {
        f(&self.nodes.borrow()[v.0].value)
    }

    pub fn shape_of(&self, v: Var) -> Vec<usize> {
        self.nodes.borrow()[v.0].value.shape().to_vec()
    }

    /// Accumulated gradient of a leaf after one or more `backward` calls.
    pub fn grad(&self, v: Var) -> Option<Tensor<E>> {
        self.nodes.borrow()[v.0].grad.clone()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes.borrow()[v.0].requires_grad
    }

    pub fn zero_grad(&self) {
        for node in self.nodes.borrow_mut().iter_mut() {
            node.grad = None;
        }
    }

    /// Scale a leaf's accumulated gradient in place (gradient clipping).
    pub fn scale_grad(&self, v: Var, scale: f64) {
        let s = E::from_f64(scale);
        if let Some(g) = self.nodes.borrow_mut()[v.0].grad.as_mut() {
            for x in g.data_mut() {
                *x *= s;
            }
        }
    }

    /// Reverse sweep from a scalar loss. Gradients accumulate additively
    /// into every reachable leaf with `requires_grad`; calling twice
    /// doubles them.
    pub fn backward(&self, loss: Var) {
        {
            let nodes = self.nodes.borrow();
            let value = &nodes[loss.0].value;
            assert_eq!(
                value.numel(),
                1,
                "contract violation: backward requires a scalar loss, got shape {:?}",
                value.shape()
            );
        }
        let n = self.nodes.borrow().len();
        let mut grads: Vec<Option<Tensor<E>>> = Vec::with_capacity(n);
        grads.resize_with(n, || None);
        grads[loss.0] = Some(Tensor::full(&self.nodes.borrow()[loss.0].value.shape().to_vec(), E::ONE));

        for i in (0..=loss.0).rev() {
            let Some(out_grad) = grads[i].take() else {
                continue;
            };
            let contributions = {
                let nodes = self.nodes.borrow();
                let node = &nodes[i];
                if !node.requires_grad && node.backward.is_some() {
                    continue;
                }
                match &node.backward {
                    None => None,
                    Some(back) => {
                        let parent_vals: Vec<&Tensor<E>> =
                            node.parents.iter().map(|p| &nodes[p.0].value).collect();
                        let needs: Vec<bool> = node
                            .parents
                            .iter()
                            .map(|p| nodes[p.0].requires_grad)
                            .collect();
                        let contribs = back(&out_grad, &parent_vals, &node.value, &needs);
                        assert_eq!(contribs.len(), node.parents.len());
                        Some(
                            node.parents
                                .iter()
                                .zip(contribs)
                                .filter_map(|(p, c)| c.map(|c| (*p, c)))
                                .collect::<Vec<_>>(),
                        )
                    }
                }
            };
            match contributions {
                Some(contribs) => {
                    for (p, c) in contribs {
                        match &mut grads[p.0] {
                            Some(g) => g.add_assign(&c),
                            slot => *slot = Some(c),
                        }
                    }
                }
                None => {
                    // Leaf: fold into the persistent accumulator.
                    let mut nodes = self.nodes.borrow_mut();
                    let node = &mut nodes[i];
                    if node.requires_grad {
                        match &mut node.grad {
                            Some(g) => g.add_assign(&out_grad),
                            slot => *slot = Some(out_grad),
                        }
                    }
                }
            }
        }
    }

    // ── Elementwise and linear ops ──────────────────────────────────────

    pub fn add(&self, a: Var, b: Var) -> Var {
        let value = self.with_value(a, |av| self.with_value(b, |bv| av.zip_map(bv, |x, y| x + y)));
        self.push_node(
            value,
            vec![a, b],
            Some(Box::new(|g, _, _, needs| {
                vec![
                    needs[0].then(|| g.clone()),
                    needs[1].then(|| g.clone()),
                ]
            })),
        )
    }

    pub fn sub(&self, a: Var, b: Var) -> Var {
        let value = self.with_value(a, |av| self.with_value(b, |bv| av.zip_map(bv, |x, y| x - y)));
        self.push_node(
            value,
            vec![a, b],
            Some(Box::new(|g, _, _, needs| {
                vec![
                    needs[0].then(|| g.clone()),
                    needs[1].then(|| g.map(|x| -x)),
                ]
            })),
        )
    }

    pub fn mul(&self, a: Var, b: Var) -> Var {
        let value = self.with_value(a, |av| self.with_value(b, |bv| av.zip_map(bv, |x, y| x * y)));
        self.push_node(
            value,
            vec![a, b],
            Some(Box::new(|g, parents, _, needs| {
                vec![
                    needs[0].then(|| g.zip_map(parents[1], |gi, bi| gi * bi)),
                    needs[1].then(|| g.zip_map(parents[0], |gi, ai| gi * ai)),
                ]
            })),
        )
    }

    pub fn div(&self, a: Var, b: Var) -> Var {
        let value = self.with_value(a, |av| self.with_value(b, |bv| av.zip_map(bv, |x, y| x / y)));
        self.push_node(
            value,
            vec![a, b],
            Some(Box::new(|g, parents, _, needs| {
                let (a_val, b_val) = (parents[0], parents[1]);
                vec![
                    needs[0].then(|| g.zip_map(b_val, |gi, bi| gi / bi)),
                    needs[1].then(|| {
                        let mut out = g.clone();
                        for ((o, &ai), &bi) in out
                            .data_mut()
                            .iter_mut()
                            .zip(a_val.data())
                            .zip(b_val.data())
                        {
                            *o = -*o * ai / (bi * bi);
                        }
                        out
                    }),
                ]
            })),
        )
    }

    /// y = scale * x + shift, elementwise with constant coefficients.
    pub fn affine(&self, x: Var, scale: f64, shift: f64) -> Var {
        let s = E::from_f64(scale);
        let c = E::from_f64(shift);
        let value = self.with_value(x, |v| v.map(|xi| s * xi + c));
        self.push_node(
            value,
            vec![x],
            Some(Box::new(move |g, _, _, _| vec![Some(g.map(|gi| gi * s))])),
        )
    }

    /// Elementwise multiplication by a constant tensor (no gradient to it).
    pub fn mul_const(&self, x: Var, weights: Tensor<E>) -> Var {
        let value = self.with_value(x, |v| v.zip_map(&weights, |a, b| a * b));
        self.push_node(
            value,
            vec![x],
            Some(Box::new(move |g, _, _, _| {
                vec![Some(g.zip_map(&weights, |gi, wi| gi * wi))]
            })),
        )
    }

    pub fn relu(&self, x: Var) -> Var {
        let value = self.with_value(x, |v| v.map(|xi| if xi > E::ZERO { xi } else { E::ZERO }));
        self.push_node(
            value,
            vec![x],
            Some(Box::new(|g, parents, _, _| {
                vec![Some(g.zip_map(parents[0], |gi, xi| {
                    if xi > E::ZERO {
                        gi
                    } else {
                        E::ZERO
                    }
                }))]
            })),
        )
    }

    pub fn sigmoid(&self, x: Var) -> Var {
        let value = self.with_value(x, |v| {
            v.map(|xi| E::ONE / (E::ONE + (-xi).exp()))
        });
        self.push_node(
            value,
            vec![x],
            Some(Box::new(|g, _, out, _| {
                vec![Some(g.zip_map(out, |gi, yi| gi * yi * (E::ONE - yi)))]
            })),
        )
    }

    pub fn tanh(&self, x: Var) -> Var {
        let value = self.with_value(x, |v| v.map(|xi| xi.tanh()));
        self.push_node(
            value,
            vec![x],
            Some(Box::new(|g, _, out, _| {
                vec![Some(g.zip_map(out, |gi, yi| gi * (E::ONE - yi * yi)))]
            })),
        )
    }

    pub fn sqrt(&self, x: Var) -> Var {
        let value = self.with_value(x, |v| v.map(|xi| xi.sqrt()));
        self.push_node(
            value,
            vec![x],
            Some(Box::new(|g, _, out, _| {
                let half = E::from_f64(0.5);
                vec![Some(g.zip_map(out, |gi, yi| gi * half / yi))]
            })),
        )
    }

    pub fn sum_all(&self, x: Var) -> Var {
        let (total, shape) = self.with_value(x, |v| {
            (v.data().iter().copied().sum::<E>(), v.shape().to_vec())
        });
        self.push_node(
            Tensor::scalar(total),
            vec![x],
            Some(Box::new(move |g, _, _, _| {
                vec![Some(Tensor::full(&shape, g.item()))]
            })),
        )
    }

    pub fn mean_all(&self, x: Var) -> Var {
        let n = self.with_value(x, |v| v.numel());
        let s = self.sum_all(x);
        self.affine(s, 1.0 / n as f64, 0.0)
    }

    /// a[m,k] @ b[k,n] -> [m,n]
    pub fn matmul(&self, a: Var, b: Var) -> Var {
        let (m, k) = self.with_value(a, |v| {
            assert_eq!(v.shape().len(), 2, "matmul lhs must be 2-d");
            (v.shape()[0], v.shape()[1])
        });
        let (k2, n) = self.with_value(b, |v| {
            assert_eq!(v.shape().len(), 2, "matmul rhs must be 2-d");
            (v.shape()[0], v.shape()[1])
        });
        assert_eq!(k, k2, "contract violation: matmul inner dims {k} vs {k2}");
        let value = self.with_value(a, |av| {
            self.with_value(b, |bv| {
                Tensor::new(&[m, n], gemm(av.data(), bv.data(), m, k, n))
            })
        });
        self.push_node(
            value,
            vec![a, b],
            Some(Box::new(move |g, parents, _, needs| {
                let (av, bv) = (parents[0], parents[1]);
                let da = needs[0].then(|| {
                    // dA = dC @ B^T
                    let mut out = vec![E::ZERO; m * k];
                    gemm_bt_acc(&mut out, g.data(), bv.data(), m, n, k);
                    Tensor::new(&[m, k], out)
                });
                let db = needs[1].then(|| {
                    // dB = A^T @ dC
                    let mut out = vec![E::ZERO; k * n];
                    gemm_at_acc(&mut out, av.data(), g.data(), k, m, n);
                    Tensor::new(&[k, n], out)
                });
                vec![da, db]
            })),
        )
    }

    /// x[n,in] @ w[out,in]^T + b -> [n,out]
    pub fn linear(&self, x: Var, w: Var, b: Option<Var>) -> Var {
        let (n, d_in) = self.with_value(x, |v| (v.shape()[0], v.shape()[1]));
        let (d_out, d_in2) = self.with_value(w, |v| (v.shape()[0], v.shape()[1]));
        assert_eq!(d_in, d_in2, "contract violation: linear dims {d_in} vs {d_in2}");
        let mut out = vec![E::ZERO; n * d_out];
        self.with_value(x, |xv| {
            self.with_value(w, |wv| {
                gemm_bt_acc(&mut out, xv.data(), wv.data(), n, d_in, d_out);
            })
        });
        if let Some(b) = b {
            self.with_value(b, |bv| {
                assert_eq!(bv.numel(), d_out, "linear bias length");
                for row in out.chunks_mut(d_out) {
                    for (o, &bi) in row.iter_mut().zip(bv.data()) {
                        *o += bi;
                    }
                }
            });
        }
        let parents: Vec<Var> = match b {
            Some(b) => vec![x, w, b],
            None => vec![x, w],
        };
        let has_bias = b.is_some();
        self.push_node(
            Tensor::new(&[n, d_out], out),
            parents,
            Some(Box::new(move |g, parents, _, needs| {
                let (xv, wv) = (parents[0], parents[1]);
                let dx = needs[0].then(|| {
                    // dX = dY @ W
                    let mut out = vec![E::ZERO; n * d_in];
                    crate::tensor::gemm_acc(&mut out, g.data(), wv.data(), n, d_out, d_in);
                    Tensor::new(&[n, d_in], out)
                });
                let dw = needs[1].then(|| {
                    // dW = dY^T @ X
                    let mut out = vec![E::ZERO; d_out * d_in];
                    gemm_at_acc(&mut out, g.data(), xv.data(), d_out, n, d_in);
                    Tensor::new(&[d_out, d_in], out)
                });
                let mut result = vec![dx, dw];
                if has_bias {
                    result.push(needs[2].then(|| {
                        let mut db = vec![E::ZERO; d_out];
                        for row in g.data().chunks(d_out) {
                            for (acc, &gi) in db.iter_mut().zip(row) {
                                *acc += gi;
                            }
                        }
                        Tensor::new(&[d_out], db)
                    }));
                }
                result
            })),
        )
    }

    pub fn reshape(&self, x: Var, shape: &[usize]) -> Var {
        let old_shape = self.shape_of(x);
        let value = self.value(x).reshape(shape);
        self.push_node(
            value,
            vec![x],
            Some(Box::new(move |g, _, _, _| {
                vec![Some(g.clone().reshape(&old_shape))]
            })),
        )
    }

    /// Slice `len` entries starting at `start` along the last axis.
    pub fn narrow_last(&self, x: Var, start: usize, len: usize) -> Var {
        let shape = self.shape_of(x);
        let last = *shape.last().expect("narrow_last on 0-d tensor");
        assert!(start + len <= last, "narrow_last out of range");
        let rows: usize = shape[..shape.len() - 1].iter().product();
        let mut out_shape = shape.clone();
        *out_shape.last_mut().unwrap() = len;
        let value = self.with_value(x, |v| {
            let mut out = Vec::with_capacity(rows * len);
            for r in 0..rows {
                out.extend_from_slice(&v.data()[r * last + start..r * last + start + len]);
            }
            Tensor::new(&out_shape, out)
        });
        self.push_node(
            value,
            vec![x],
            Some(Box::new(move |g, _, _, _| {
                let mut dx = Tensor::zeros(&shape);
                for r in 0..rows {
                    let src = &g.data()[r * len..(r + 1) * len];
                    dx.data_mut()[r * last + start..r * last + start + len]
                        .copy_from_slice(src);
                }
                vec![Some(dx)]
            })),
        )
    }

    /// Concatenate along the last axis.
    pub fn concat_last(&self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty());
        let shapes: Vec<Vec<usize>> = parts.iter().map(|&p| self.shape_of(p)).collect();
        let lead = &shapes[0][..shapes[0].len() - 1];
        for s in &shapes {
            assert_eq!(&s[..s.len() - 1], lead, "concat_last leading dims differ");
        }
        let rows: usize = lead.iter().product();
        let widths: Vec<usize> = shapes.iter().map(|s| *s.last().unwrap()).collect();
        let total: usize = widths.iter().sum();
        let mut out_shape = shapes[0].clone();
        *out_shape.last_mut().unwrap() = total;
        let mut out = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for (&p, &w) in parts.iter().zip(&widths) {
                self.with_value(p, |v| {
                    out.extend_from_slice(&v.data()[r * w..(r + 1) * w]);
                });
            }
        }
        self.push_node(
            Tensor::new(&out_shape, out),
            parts.to_vec(),
            Some(Box::new(move |g, _, _, needs| {
                let mut grads: Vec<Option<Tensor<E>>> = Vec::with_capacity(widths.len());
                let mut offset = 0;
                for (idx, &w) in widths.iter().enumerate() {
                    if needs[idx] {
                        let part_shape: Vec<usize> = lead_shape_of(g.shape(), w);
                        let rows: usize = part_shape[..part_shape.len() - 1].iter().product();
                        let mut data = Vec::with_capacity(rows * w);
                        for r in 0..rows {
                            data.extend_from_slice(
                                &g.data()[r * total + offset..r * total + offset + w],
                            );
                        }
                        grads.push(Some(Tensor::new(&part_shape, data)));
                    } else {
                        grads.push(None);
                    }
                    offset += w;
                }
                grads
            })),
        )
    }

    /// Permute axes; `dims[i]` names the source axis for output axis i.
    pub fn permute(&self, x: Var, dims: &[usize]) -> Var {
        let shape = self.shape_of(x);
        assert_eq!(dims.len(), shape.len());
        let out_shape: Vec<usize> = dims.iter().map(|&d| shape[d]).collect();
        let value = self.with_value(x, |v| permute_tensor(v, dims));
        let mut inverse = vec![0usize; dims.len()];
        for (i, &d) in dims.iter().enumerate() {
            inverse[d] = i;
        }
        self.push_node(
            value.reshape(&out_shape),
            vec![x],
            Some(Box::new(move |g, _, _, _| {
                vec![Some(permute_tensor(g, &inverse))]
            })),
        )
    }

    /// rows of `table` selected by `ids` -> [ids.len(), emb_dim]
    pub fn embedding(&self, table: Var, ids: &[usize]) -> Var {
        let (vocab, dim) = self.with_value(table, |v| (v.shape()[0], v.shape()[1]));
        for &id in ids {
            assert!(id < vocab, "contract violation: embedding id {id} >= vocab {vocab}");
        }
        let value = self.with_value(table, |v| {
            let mut out = Vec::with_capacity(ids.len() * dim);
            for &id in ids {
                out.extend_from_slice(&v.data()[id * dim..(id + 1) * dim]);
            }
            Tensor::new(&[ids.len(), dim], out)
        });
        let ids = ids.to_vec();
        self.push_node(
            value,
            vec![table],
            Some(Box::new(move |g, _, _, _| {
                let mut dt = Tensor::zeros(&[vocab, dim]);
                for (row, &id) in ids.iter().enumerate() {
                    let src = &g.data()[row * dim..(row + 1) * dim];
                    for (acc, &v) in dt.data_mut()[id * dim..(id + 1) * dim]
                        .iter_mut()
                        .zip(src)
                    {
                        *acc += v;
                    }
                }
                vec![Some(dt)]
            })),
        )
    }

    /// out[i] = x[i, idx[i]] for a [n, c] input.
    pub fn pick_last(&self, x: Var, idx: &[usize]) -> Var {
        let (n, c) = self.with_value(x, |v| (v.shape()[0], v.shape()[1]));
        assert_eq!(idx.len(), n);
        let value = self.with_value(x, |v| {
            let data: Vec<E> = idx
                .iter()
                .enumerate()
                .map(|(i, &j)| v.data()[i * c + j])
                .collect();
            Tensor::new(&[n], data)
        });
        let idx = idx.to_vec();
        self.push_node(
            value,
            vec![x],
            Some(Box::new(move |g, _, _, _| {
                let mut dx = Tensor::zeros(&[n, c]);
                for (i, &j) in idx.iter().enumerate() {
                    dx.data_mut()[i * c + j] = g.data()[i];
                }
                vec![Some(dx)]
            })),
        )
    }

    /// Forward `sign(x)` in {-1,+1} with sign(0) = +1; backward treats the
    /// forward as `tanh(slope * x)`.
    pub fn sign_ste(&self, x: Var, slope: f64) -> Var {
        let value = self.with_value(x, |v| {
            v.map(|xi| if xi >= E::ZERO { E::ONE } else { -E::ONE })
        });
        let a = E::from_f64(slope);
        self.push_node(
            value,
            vec![x],
            Some(Box::new(move |g, parents, _, _| {
                vec![Some(g.zip_map(parents[0], |gi, xi| {
                    let t = (a * xi).tanh();
                    gi * a * (E::ONE - t * t)
                }))]
            })),
        )
    }

    /// Inverted-scaling dropout: identity in eval mode.
    pub fn dropout(&self, x: Var, p: f64, mode: Mode, rng: &mut impl rand::Rng) -> Var {
        assert!(
            (0.0..1.0).contains(&p),
            "contract violation: dropout p {p} outside [0,1)"
        );
        if mode == Mode::Eval || p == 0.0 {
            return x;
        }
        let keep = E::from_f64(1.0 / (1.0 - p));
        let numel = self.with_value(x, |v| v.numel());
        let mask: Vec<E> = (0..numel)
            .map(|_| {
                if rng.random::<f64>() < p {
                    E::ZERO
                } else {
                    keep
                }
            })
            .collect();
        let shape = self.shape_of(x);
        let mask = Tensor::new(&shape, mask);
        self.mul_const(x, mask)
    }
}

fn lead_shape_of(out_shape: &[usize], width: usize) -> Vec<usize> {
    let mut s = out_shape.to_vec();
    *s.last_mut().unwrap() = width;
    s
}

fn permute_tensor<E: Scalar>(t: &Tensor<E>, dims: &[usize]) -> Tensor<E> {
    let shape = t.shape();
    let rank = shape.len();
    let out_shape: Vec<usize> = dims.iter().map(|&d| shape[d]).collect();
    let mut in_strides = vec![1usize; rank];
    for i in (0..rank - 1).rev() {
        in_strides[i] = in_strides[i + 1] * shape[i + 1];
    }
    let mut out = vec![E::ZERO; t.numel()];
    let mut idx = vec![0usize; rank];
    for o in out.iter_mut() {
        let mut src = 0;
        for (i, &d) in dims.iter().enumerate() {
            src += idx[i] * in_strides[d];
        }
        *o = t.data()[src];
        for i in (0..rank).rev() {
            idx[i] += 1;
            if idx[i] < out_shape[i] {
                break;
            }
            idx[i] = 0;
        }
    }
    Tensor::new(&out_shape, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph() -> Graph<f64> {
        Graph::new()
    }

    #[test]
    fn backward_sum_is_ones() {
        let g = graph();
        let x = g.leaf(Tensor::new(&[3], vec![1.0, 2.0, 3.0]), true);
        let loss = g.sum_all(x);
        g.backward(loss);
        assert_eq!(g.grad(x).unwrap().data(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn backward_square() {
        let g = graph();
        let x = g.leaf(Tensor::new(&[2], vec![2.0, -1.0]), true);
        let sq = g.mul(x, x);
        let loss = g.sum_all(sq);
        g.backward(loss);
        assert_eq!(g.grad(x).unwrap().data(), &[4.0, -2.0]);
    }

    #[test]
    fn backward_twice_accumulates_exactly_double() {
        let g = graph();
        let x = g.leaf(Tensor::new(&[2], vec![0.5, -0.25]), true);
        let y = g.tanh(x);
        let loss = g.sum_all(y);
        g.backward(loss);
        let once = g.grad(x).unwrap();
        g.backward(loss);
        let twice = g.grad(x).unwrap();
        for (a, b) in once.data().iter().zip(twice.data()) {
            assert_eq!(*b, 2.0 * *a);
        }
    }

    #[test]
    #[should_panic(expected = "contract violation")]
    fn backward_rejects_non_scalar_loss() {
        let g = graph();
        let x = g.leaf(Tensor::new(&[2], vec![1.0, 2.0]), true);
        let y = g.relu(x);
        g.backward(y);
    }

    #[test]
    fn shared_parameter_accumulates_both_paths() {
        let g = graph();
        let x = g.leaf(Tensor::new(&[2], vec![1.0, 2.0]), true);
        let a = g.affine(x, 2.0, 0.0);
        let b = g.affine(x, 3.0, 0.0);
        let s = g.add(a, b);
        let loss = g.sum_all(s);
        g.backward(loss);
        assert_eq!(g.grad(x).unwrap().data(), &[5.0, 5.0]);
    }

    #[test]
    fn matmul_values() {
        let g = graph();
        let a = g.leaf(Tensor::new(&[2, 2], vec![1.0, 2.0, 3.0, 4.0]), true);
        let b = g.leaf(Tensor::new(&[2, 1], vec![1.0, 1.0]), true);
        let c = g.matmul(a, b);
        assert_eq!(g.value(c).data(), &[3.0, 7.0]);
    }

    #[test]
    fn permute_roundtrip() {
        let g = graph();
        let x = g.leaf(
            Tensor::new(&[2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]),
            true,
        );
        let t = g.permute(x, &[1, 0]);
        assert_eq!(g.shape_of(t), vec![3, 2]);
        assert_eq!(g.value(t).data(), &[1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
        let back = g.permute(t, &[1, 0]);
        assert_eq!(g.value(back).data(), g.value(x).data());
    }

    #[test]
    fn narrow_and_concat_roundtrip() {
        let g = graph();
        let x = g.leaf(
            Tensor::new(&[2, 4], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]),
            true,
        );
        let left = g.narrow_last(x, 0, 2);
        let right = g.narrow_last(x, 2, 2);
        let whole = g.concat_last(&[left, right]);
        assert_eq!(g.value(whole).data(), g.value(x).data());
        let loss = g.sum_all(whole);
        g.backward(loss);
        assert_eq!(g.grad(x).unwrap().data(), &[1.0; 8]);
    }

    #[test]
    fn dropout_eval_is_identity() {
        use rand::SeedableRng;
        let g = graph();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let x = g.leaf(Tensor::new(&[4], vec![1.0, -2.0, 3.0, -4.0]), true);
        let y = g.dropout(x, 0.5, Mode::Eval, &mut rng);
        assert_eq!(g.value(y).data(), g.value(x).data());
    }

    #[test]
    #[should_panic(expected = "contract violation")]
    fn dropout_rejects_p_one() {
        use rand::SeedableRng;
        let g = graph();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let x = g.leaf(Tensor::new(&[4], vec![1.0; 4]), true);
        g.dropout(x, 1.0, Mode::Train, &mut rng);
    }

    #[test]
    fn sign_ste_forward_and_multiplier() {
        let g = graph();
        let x = g.leaf(Tensor::new(&[3], vec![0.0, 0.3, -5.0]), true);
        let y = g.sign_ste(x, 1.0);
        assert_eq!(g.value(y).data(), &[1.0, 1.0, -1.0]);
        let loss = g.sum_all(y);
        g.backward(loss);
        let grad = g.grad(x).unwrap();
        assert!((grad.data()[0] - 1.0).abs() < 1e-12);
        assert!((grad.data()[1] - (1.0 - 0.3f64.tanh().powi(2))).abs() < 1e-12);
        assert!((grad.data()[2] - (1.0 - 5.0f64.tanh().powi(2))).abs() < 1e-12);
    }
}

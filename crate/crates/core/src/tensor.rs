//! Dense row-major tensors backing every activation and parameter.

use crate::scalar::Scalar;

/// Dense n-dimensional array, flat row-major storage.
///
/// Shapes are immutable after construction; `reshape` returns a view-copy
/// with the same data. All forward kernels must produce finite values; a
/// NaN/Inf escaping a kernel is a numerical fault, checked at the loss.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<E: Scalar> {
    shape: Vec<usize>,
    data: Vec<E>,
}

impl<E: Scalar> Tensor<E> {
    pub fn new(shape: &[usize], data: Vec<E>) -> Self {
        let numel: usize = shape.iter().product();
        assert_eq!(
            data.len(),
            numel,
            "tensor data length {} does not match shape {:?}",
            data.len(),
            shape
        );
        Tensor {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let numel = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![E::ZERO; numel],
        }
    }

    pub fn full(shape: &[usize], value: E) -> Self {
        let numel = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![value; numel],
        }
    }

    pub fn scalar(value: E) -> Self {
        Tensor {
            shape: vec![1],
            data: vec![value],
        }
    }

    pub fn from_f64_slice(shape: &[usize], data: &[f64]) -> Self {
        Tensor::new(shape, data.iter().map(|&x| E::from_f64(x)).collect())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[E] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [E] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<E> {
        self.data
    }

    /// Single element of a one-element tensor.
    pub fn item(&self) -> E {
        assert_eq!(self.numel(), 1, "item() on tensor of shape {:?}", self.shape);
        self.data[0]
    }

    pub fn reshape(mut self, shape: &[usize]) -> Self {
        let numel: usize = shape.iter().product();
        assert_eq!(numel, self.data.len(), "reshape {:?} -> {:?}", self.shape, shape);
        self.shape = shape.to_vec();
        self
    }

    pub fn map(&self, f: impl Fn(E) -> E) -> Self {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(E, E) -> E) -> Self {
        assert_eq!(self.shape, other.shape, "zip_map shape mismatch");
        Tensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        assert_eq!(self.shape, other.shape, "add_assign shape mismatch");
        for (a, &b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += b;
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.data.iter().map(|x| x.to_f64()).collect()
    }
}

/// C[m,n] += A[m,k] * B[k,n].
///
/// Row i of C depends only on row i of A, and the k-accumulation order per
/// element is fixed, so results are bit-identical whether a row is computed
/// alone or as part of a larger batch. Training determinism relies on this.
pub fn gemm_acc<E: Scalar>(c: &mut [E], a: &[E], b: &[E], m: usize, k: usize, n: usize) {
    assert_eq!(a.len(), m * k);
    assert_eq!(b.len(), k * n);
    assert_eq!(c.len(), m * n);
    for i in 0..m {
        let c_row = &mut c[i * n..(i + 1) * n];
        let a_row = &a[i * k..(i + 1) * k];
        for (p, &a_ip) in a_row.iter().enumerate() {
            let b_row = &b[p * n..(p + 1) * n];
            for (c_ij, &b_pj) in c_row.iter_mut().zip(b_row.iter()) {
                *c_ij += a_ip * b_pj;
            }
        }
    }
}

/// C[m,n] = A[m,k] * B[k,n].
pub fn gemm<E: Scalar>(a: &[E], b: &[E], m: usize, k: usize, n: usize) -> Vec<E> {
    let mut c = vec![E::ZERO; m * n];
    gemm_acc(&mut c, a, b, m, k, n);
    c
}

/// C[m,n] += A[m,k] * B[n,k]^T. Inner loops run over contiguous rows of B.
pub fn gemm_bt_acc<E: Scalar>(c: &mut [E], a: &[E], b: &[E], m: usize, k: usize, n: usize) {
    assert_eq!(a.len(), m * k);
    assert_eq!(b.len(), n * k);
    assert_eq!(c.len(), m * n);
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        for j in 0..n {
            let b_row = &b[j * k..(j + 1) * k];
            let mut acc = E::ZERO;
            for (&x, &y) in a_row.iter().zip(b_row.iter()) {
                acc += x * y;
            }
            c[i * n + j] += acc;
        }
    }
}

/// C[m,n] += A[k,m]^T * B[k,n].
pub fn gemm_at_acc<E: Scalar>(c: &mut [E], a: &[E], b: &[E], m: usize, k: usize, n: usize) {
    assert_eq!(a.len(), k * m);
    assert_eq!(b.len(), k * n);
    assert_eq!(c.len(), m * n);
    for p in 0..k {
        let a_row = &a[p * m..(p + 1) * m];
        let b_row = &b[p * n..(p + 1) * n];
        for (i, &a_pi) in a_row.iter().enumerate() {
            let c_row = &mut c[i * n..(i + 1) * n];
            for (c_ij, &b_pj) in c_row.iter_mut().zip(b_row.iter()) {
                *c_ij += a_pi * b_pj;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_gemm(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
        let mut c = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                for p in 0..k {
                    c[i * n + j] += a[i * k + p] * b[p * n + j];
                }
            }
        }
        c
    }

    #[test]
    fn gemm_matches_naive() {
        let m = 3;
        let k = 5;
        let n = 4;
        let a: Vec<f64> = (0..m * k).map(|i| (i as f64) * 0.3 - 1.0).collect();
        let b: Vec<f64> = (0..k * n).map(|i| (i as f64) * 0.1 - 0.7).collect();
        let c = gemm(&a, &b, m, k, n);
        let expect = naive_gemm(&a, &b, m, k, n);
        for (x, y) in c.iter().zip(expect.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn gemm_bt_matches_gemm() {
        let m = 4;
        let k = 3;
        let n = 5;
        let a: Vec<f64> = (0..m * k).map(|i| i as f64 * 0.2).collect();
        let bt: Vec<f64> = (0..n * k).map(|i| i as f64 * 0.4 - 2.0).collect();
        // b[p][j] = bt[j][p]
        let mut b = vec![0.0; k * n];
        for j in 0..n {
            for p in 0..k {
                b[p * n + j] = bt[j * k + p];
            }
        }
        let mut c1 = vec![0.0; m * n];
        gemm_bt_acc(&mut c1, &a, &bt, m, k, n);
        let c2 = gemm(&a, &b, m, k, n);
        for (x, y) in c1.iter().zip(c2.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn gemm_at_matches_gemm() {
        let m = 4;
        let k = 3;
        let n = 2;
        let at: Vec<f64> = (0..k * m).map(|i| i as f64 * 0.25 - 1.0).collect();
        let b: Vec<f64> = (0..k * n).map(|i| i as f64 * 0.5).collect();
        // a[i][p] = at[p][i]
        let mut a = vec![0.0; m * k];
        for p in 0..k {
            for i in 0..m {
                a[i * k + p] = at[p * m + i];
            }
        }
        let mut c1 = vec![0.0; m * n];
        gemm_at_acc(&mut c1, &at, &b, m, k, n);
        let c2 = gemm(&a, &b, m, k, n);
        for (x, y) in c1.iter().zip(c2.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn gemm_row_independent_of_batch() {
        // The same input row must produce bit-identical output whether it is
        // computed in a batch of 1 or embedded in a larger matrix.
        let k = 64;
        let n = 48;
        let b: Vec<f32> = (0..k * n).map(|i| ((i * 37 % 101) as f32) * 0.013 - 0.5).collect();
        let rows: Vec<Vec<f32>> = (0..5)
            .map(|r| (0..k).map(|i| ((i + r * 7) as f32).sin()).collect())
            .collect();
        let batched = gemm(&rows.concat(), &b, 5, k, n);
        for (r, row) in rows.iter().enumerate() {
            let single = gemm(row, &b, 1, k, n);
            assert_eq!(&batched[r * n..(r + 1) * n], &single[..]);
        }
    }
}

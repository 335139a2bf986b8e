//! Central finite-difference gradient checking.
//!
//! The oracle re-runs only the forward path; it never touches the backward
//! rules it is checking. Run at f64 with h = 1e-5.

use crate::graph::Graph;
use crate::tensor::Tensor;

pub const STEP: f64 = 1e-5;
pub const REL_TOL: f64 = 1e-4;
/// Entries whose analytic gradient is below this magnitude are skipped;
/// relative error is meaningless at the noise floor.
pub const GRAD_FLOOR: f64 = 1e-6;

pub struct GradCheckReport {
    pub checked: usize,
    pub worst_rel_err: f64,
    pub worst_at: Option<(usize, usize)>,
}

/// Check d(loss)/d(inputs) for a scalar-valued builder.
///
/// `build` receives a fresh graph plus leaf variables created from
/// `inputs` and must return the scalar loss var. Panics if any checked
/// entry exceeds [`REL_TOL`].
pub fn check_gradients(
    inputs: &[Tensor<f64>],
    build: impl Fn(&Graph<f64>, &[crate::graph::Var]) -> crate::graph::Var,
) -> GradCheckReport {
    let eval = |tensors: &[Tensor<f64>]| -> f64 {
        let g: Graph<f64> = Graph::new();
        let vars: Vec<_> = tensors.iter().map(|t| g.leaf(t.clone(), true)).collect();
        let loss = build(&g, &vars);
        g.value(loss).item()
    };

    // analytic
    let g: Graph<f64> = Graph::new();
    let vars: Vec<_> = inputs.iter().map(|t| g.leaf(t.clone(), true)).collect();
    let loss = build(&g, &vars);
    g.backward(loss);
    let analytic: Vec<Tensor<f64>> = vars
        .iter()
        .map(|&v| g.grad(v).unwrap_or_else(|| Tensor::zeros(&g.shape_of(v))))
        .collect();

    let mut report = GradCheckReport {
        checked: 0,
        worst_rel_err: 0.0,
        worst_at: None,
    };
    let mut work: Vec<Tensor<f64>> = inputs.to_vec();
    for (ti, grad) in analytic.iter().enumerate() {
        for i in 0..grad.numel() {
            let a = grad.data()[i];
            if a.abs() <= GRAD_FLOOR {
                continue;
            }
            let orig = work[ti].data()[i];
            work[ti].data_mut()[i] = orig + STEP;
            let plus = eval(&work);
            work[ti].data_mut()[i] = orig - STEP;
            let minus = eval(&work);
            work[ti].data_mut()[i] = orig;
            let numeric = (plus - minus) / (2.0 * STEP);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs());
            report.checked += 1;
            if rel > report.worst_rel_err {
                report.worst_rel_err = rel;
                report.worst_at = Some((ti, i));
            }
            assert!(
                rel <= REL_TOL,
                "gradient mismatch: input {ti} elem {i}: analytic {a} vs numeric {numeric} (rel {rel:.3e})"
            );
        }
    }
    assert!(report.checked > 0, "gradient check exercised no entries");
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catches_correct_composite_gradients() {
        let x = Tensor::new(&[4], vec![0.3, -0.8, 1.2, 0.05]);
        let w = Tensor::new(&[4], vec![1.0, 0.5, -0.25, 2.0]);
        check_gradients(&[x, w], |g, vars| {
            let p = g.mul(vars[0], vars[1]);
            let t = g.tanh(p);
            let s = g.sigmoid(t);
            g.sum_all(s)
        });
    }

    #[test]
    #[should_panic(expected = "gradient mismatch")]
    fn catches_wrong_gradients() {
        use std::cell::Cell;
        // make the analytic pass (first call) see a different function than
        // the numeric probes, so the check must fire
        let x = Tensor::new(&[3], vec![0.5, 1.5, -0.7]);
        let calls = Cell::new(0usize);
        check_gradients(&[x], move |g, vars| {
            let scale = if calls.get() == 0 { 1.05 } else { 1.0 };
            calls.set(calls.get() + 1);
            let y = g.affine(vars[0], scale, 0.0);
            let sq = g.mul(y, y);
            g.sum_all(sq)
        });
    }
}

//! Central finite-difference gradient checking. This is the independent
//! oracle every backward rule and every model graph is validated against.

use crate::par;
use crate::params::ParamStore;
use crate::tape::{NodeId, Tape};
use crate::tensor::Tensor;

/// Relative error with a small absolute floor so finite-difference noise on
/// near-zero gradients does not dominate.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| rel_err(x, y)).fold(0.0, f64::max)
}

/// Checks the analytic gradients of a graph against central differences.
///
/// `build` receives a fresh tape and the node ids of `inputs` (registered as
/// parameters 0..n) and must return a scalar loss node. Returns the worst
/// relative error over all input entries.
pub fn fd_check_inputs<F>(inputs: &[Tensor], build: &F, h: f64) -> f64
where
    F: Fn(&mut Tape, &[NodeId]) -> NodeId,
{
    let eval = |tensors: &[Tensor]| -> f64 {
        let mut tape = Tape::new();
        let ids: Vec<NodeId> =
            tensors.iter().enumerate().map(|(i, t)| tape.param(i, t.clone())).collect();
        let loss = build(&mut tape, &ids);
        tape.value(loss).data()[0]
    };

    let mut tape = Tape::new();
    let ids: Vec<NodeId> =
        inputs.iter().enumerate().map(|(i, t)| tape.param(i, t.clone())).collect();
    let loss = build(&mut tape, &ids);
    let grads = tape.backward(loss).expect("loss must be scalar");

    let mut work = inputs.to_vec();
    let mut worst = 0.0f64;
    for pi in 0..inputs.len() {
        for e in 0..inputs[pi].numel() {
            let orig = work[pi].data()[e];
            work[pi].data_mut()[e] = orig + h;
            let up = eval(&work);
            work[pi].data_mut()[e] = orig - h;
            let down = eval(&work);
            work[pi].data_mut()[e] = orig;
            let fd = (up - down) / (2.0 * h);
            worst = worst.max(rel_err(grads[&pi].data()[e], fd));
        }
    }
    worst
}

/// Finite-difference gradients of `loss` with respect to every entry of
/// every parameter in `store`. Parameters are probed in parallel.
pub fn fd_gradients<F>(store: &ParamStore, loss: F, h: f64) -> Vec<Tensor>
where
    F: Fn(&ParamStore) -> f64 + Sync,
{
    par::map_indices(store.len(), |pi| fd_one_param(store, &loss, h, pi))
}

/// Sequential twin of [`fd_gradients`]; baseline side of the benchmarks.
pub fn fd_gradients_seq<F>(store: &ParamStore, loss: F, h: f64) -> Vec<Tensor>
where
    F: Fn(&ParamStore) -> f64,
{
    (0..store.len()).map(|pi| fd_one_param(store, &loss, h, pi)).collect()
}

fn fd_one_param<F>(store: &ParamStore, loss: &F, h: f64, pi: usize) -> Tensor
where
    F: Fn(&ParamStore) -> f64,
{
    let mut local = store.clone();
    let mut grad = Tensor::zeros_like(store.get(pi));
    for e in 0..grad.numel() {
        let orig = local.get(pi).data()[e];
        local.get_mut(pi).data_mut()[e] = orig + h;
        let up = loss(&local);
        local.get_mut(pi).data_mut()[e] = orig - h;
        let down = loss(&local);
        local.get_mut(pi).data_mut()[e] = orig;
        grad.data_mut()[e] = (up - down) / (2.0 * h);
    }
    grad
}

/// Per-parameter comparison of analytic vs finite-difference gradients.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub name: String,
    pub entries: usize,
    pub max_rel_err: f64,
}

impl GradCheckReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_rel_err <= tol
    }
}

/// Runs the full check for a model: analytic gradients from one backward
/// pass vs finite differences of `loss` over the whole store.
pub fn check_model<F>(store: &ParamStore, analytic: &[Tensor], loss: F, h: f64) -> Vec<GradCheckReport>
where
    F: Fn(&ParamStore) -> f64 + Sync,
{
    assert_eq!(analytic.len(), store.len());
    let fd = fd_gradients(store, loss, h);
    (0..store.len())
        .map(|pi| GradCheckReport {
            name: store.name(pi).to_string(),
            entries: store.get(pi).numel(),
            max_rel_err: max_rel_err(analytic[pi].data(), fd[pi].data()),
        })
        .collect()
}

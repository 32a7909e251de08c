//! GRU cell built from tape primitives:
//! z = sigmoid(W_z [x, h] + b_z), r = sigmoid(W_r [x, h] + b_r),
//! cand = tanh(W_h [x, r*h] + b_h), h' = (1 - z)*h + z*cand.
//! The cell output equals the new hidden state.

use crate::error::{Error, Result};
use crate::init::{derive_seed, init_params};
use crate::params::ParamStore;
use crate::tape::{NodeId, Tape};
use crate::tensor::Tensor;

#[derive(Clone, Debug)]
pub struct GruParams {
    pub input_size: usize,
    pub hidden_size: usize,
    pub w_z: usize,
    pub w_r: usize,
    pub w_h: usize,
    pub b_z: usize,
    pub b_r: usize,
    pub b_h: usize,
}

impl GruParams {
    /// Registers the six parameters under `prefix` and returns their handles.
    /// Weights are `[input+hidden, hidden]`, biases `[1, hidden]` (zero).
    pub fn register(
        store: &mut ParamStore,
        prefix: &str,
        input_size: usize,
        hidden_size: usize,
        seed: u64,
    ) -> Result<Self> {
        let rows = input_size + hidden_size;
        let weight = |store: &mut ParamStore, name: String| {
            let t = init_params(&[rows, hidden_size], derive_seed(seed, &name));
            store.register(&name, t)
        };
        let bias = |store: &mut ParamStore, name: String| {
            store.register(&name, Tensor::zeros(1, hidden_size))
        };
        Ok(GruParams {
            input_size,
            hidden_size,
            w_z: weight(store, format!("{prefix}.w_z"))?,
            w_r: weight(store, format!("{prefix}.w_r"))?,
            w_h: weight(store, format!("{prefix}.w_h"))?,
            b_z: bias(store, format!("{prefix}.b_z"))?,
            b_r: bias(store, format!("{prefix}.b_r"))?,
            b_h: bias(store, format!("{prefix}.b_h"))?,
        })
    }

    /// Checks the registered tensors still match the declared sizes.
    pub fn verify(&self, store: &ParamStore) -> Result<()> {
        let rows = self.input_size + self.hidden_size;
        for &w in &[self.w_z, self.w_r, self.w_h] {
            let t = store.get(w);
            if t.rows() != rows || t.cols() != self.hidden_size {
                return Err(Error::ShapeMismatch {
                    op: "gru",
                    details: format!(
                        "weight {} has shape {:?}, expected [{rows}, {}]",
                        store.name(w),
                        t.shape(),
                        self.hidden_size
                    ),
                });
            }
        }
        Ok(())
    }

    /// One recurrence step. `nodes` is the full parameter binding from
    /// [`ParamStore::bind`]. Returns `(g, h_new)` with `g = h_new`.
    pub fn step(
        &self,
        tape: &mut Tape,
        nodes: &[NodeId],
        x: NodeId,
        h_prev: NodeId,
    ) -> Result<(NodeId, NodeId)> {
        let xc = tape.value(x).cols();
        let hc = tape.value(h_prev).cols();
        if xc != self.input_size || hc != self.hidden_size
            || tape.value(x).rows() != tape.value(h_prev).rows()
        {
            return Err(Error::ShapeMismatch {
                op: "gru_step",
                details: format!(
                    "x {:?} / h {:?} vs declared input {} hidden {}",
                    tape.value(x).shape(),
                    tape.value(h_prev).shape(),
                    self.input_size,
                    self.hidden_size
                ),
            });
        }
        let xh = tape.concat_cols(&[x, h_prev]);
        let z_lin = tape.matmul(xh, nodes[self.w_z]);
        let z_lin = tape.add(z_lin, nodes[self.b_z]);
        let z = tape.sigmoid(z_lin);
        let r_lin = tape.matmul(xh, nodes[self.w_r]);
        let r_lin = tape.add(r_lin, nodes[self.b_r]);
        let r = tape.sigmoid(r_lin);
        let rh = tape.mul(r, h_prev);
        let xrh = tape.concat_cols(&[x, rh]);
        let c_lin = tape.matmul(xrh, nodes[self.w_h]);
        let c_lin = tape.add(c_lin, nodes[self.b_h]);
        let cand = tape.tanh(c_lin);
        // h' = h + z*(cand - h)
        let neg_h = tape.scale(h_prev, -1.0);
        let delta = tape.add(cand, neg_h);
        let zd = tape.mul(z, delta);
        let h_new = tape.add(h_prev, zd);
        Ok((h_new, h_new))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::fd_check_inputs;

    fn zero_gru(input: usize, hidden: usize) -> (ParamStore, GruParams) {
        let mut store = ParamStore::new();
        let mut gru = GruParams::register(&mut store, "g", input, hidden, 0).unwrap();
        for &w in &[gru.w_z, gru.w_r, gru.w_h] {
            *store.get_mut(w) = Tensor::zeros(input + hidden, hidden);
        }
        gru.verify(&store).unwrap();
        let _ = &mut gru;
        (store, gru)
    }

    #[test]
    fn zero_weights_zero_state_stay_zero() {
        let (store, gru) = zero_gru(3, 4);
        let mut tape = Tape::new();
        let nodes = store.bind(&mut tape);
        let x = tape.input(Tensor::row(vec![0.7, -0.3, 1.1]));
        let h0 = tape.input(Tensor::zeros(1, 4));
        let (_, h1) = gru.step(&mut tape, &nodes, x, h0).unwrap();
        assert!(tape.value(h1).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn saturated_update_gate_keeps_previous_state() {
        let mut store = ParamStore::new();
        let gru = GruParams::register(&mut store, "g", 3, 4, 5).unwrap();
        *store.get_mut(gru.b_z) = Tensor::row(vec![-50.0; 4]);
        let mut tape = Tape::new();
        let nodes = store.bind(&mut tape);
        let x = tape.input(Tensor::row(vec![0.9, -1.4, 0.2]));
        let h0 = tape.input(Tensor::row(vec![0.3, -0.6, 0.1, 0.8]));
        let (_, h1) = gru.step(&mut tape, &nodes, x, h0).unwrap();
        for (a, b) in tape.value(h1).data().iter().zip(tape.value(h0).data()) {
            assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn size_mismatch_rejected() {
        let (store, gru) = zero_gru(3, 4);
        let mut tape = Tape::new();
        let nodes = store.bind(&mut tape);
        let x = tape.input(Tensor::row(vec![0.0; 5]));
        let h0 = tape.input(Tensor::zeros(1, 4));
        assert!(gru.step(&mut tape, &nodes, x, h0).is_err());
    }

    #[test]
    fn fd_gradients_of_squared_state_norm() {
        let mut store = ParamStore::new();
        let gru = GruParams::register(&mut store, "g", 3, 4, 11).unwrap();
        // random biases too, so all six parameters matter
        *store.get_mut(gru.b_z) = init_params(&[1, 4], 100);
        *store.get_mut(gru.b_r) = init_params(&[1, 4], 101);
        *store.get_mut(gru.b_h) = init_params(&[1, 4], 102);
        let tensors: Vec<Tensor> = (0..store.len()).map(|i| store.get(i).clone()).collect();
        let gru2 = gru.clone();
        let max_err = fd_check_inputs(&tensors, &move |tape, ids| {
            let x = tape.input(Tensor::row(vec![0.4, -0.8, 1.2]));
            let h0 = tape.input(Tensor::row(vec![0.1, 0.5, -0.2, 0.7]));
            let (_, h1) = gru2.step(tape, ids, x, h0).unwrap();
            let sq = tape.mul(h1, h1);
            tape.sum_all(sq)
        }, 1e-6);
        assert!(max_err <= 1e-6, "max rel err {max_err:.3e}");
    }
}

//! LSTM and GRU cells: full-sequence forward passes with cached activations
//! and backpropagation through time.
//!
//! Input-side gate pre-activations for the whole sequence are computed as
//! one matrix product; only the recurrent matrix–vector product runs inside
//! the timestep loop. Backward accumulates per-step gate gradients into
//! matrices and recovers the weight gradients with two matrix products.

use ndarray::{s, Array1, Array2, Axis, NdFloat};

/// Weights of one cell (one direction). Gate blocks are stacked row-wise in
/// `w_x`/`w_h`: LSTM order `[i, f, g, o]`, GRU order `[z, r, n]`.
///
/// `b_h` is the separate recurrent bias of the GRU formulation that applies
/// the reset gate after the candidate's recurrent matrix product; it is
/// `None` for LSTM cells.
#[derive(Debug, Clone)]
pub struct CellParams<F> {
    pub w_x: Array2<F>,
    pub w_h: Array2<F>,
    pub b_x: Array1<F>,
    pub b_h: Option<Array1<F>>,
}

/// Gradients share the weight layout.
pub type CellGrads<F> = CellParams<F>;

impl<F: NdFloat> CellParams<F> {
    pub fn hidden(&self) -> usize {
        self.w_h.ncols()
    }

    pub fn input_dim(&self) -> usize {
        self.w_x.ncols()
    }

    fn zero_grads(&self) -> CellGrads<F> {
        CellGrads {
            w_x: Array2::zeros(self.w_x.dim()),
            w_h: Array2::zeros(self.w_h.dim()),
            b_x: Array1::zeros(self.b_x.dim()),
            b_h: self.b_h.as_ref().map(|b| Array1::zeros(b.dim())),
        }
    }
}

fn sigmoid<F: NdFloat>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

/// Rows of `h` shifted down by one step, with a zero initial row.
fn shifted_states<F: NdFloat>(h: &Array2<F>) -> Array2<F> {
    let (t_len, hidden) = h.dim();
    let mut prev = Array2::zeros((t_len, hidden));
    if t_len > 1 {
        prev.slice_mut(s![1.., ..]).assign(&h.slice(s![..t_len - 1, ..]));
    }
    prev
}

/// Cached LSTM activations for one sequence.
#[derive(Debug, Clone)]
pub struct LstmTrace<F> {
    /// Post-activation gates per step: (T, 4H) as `[i, f, g, o]`.
    gates: Array2<F>,
    /// Cell states (T, H).
    c: Array2<F>,
    tanh_c: Array2<F>,
    /// Hidden states (T, H); the layer output.
    pub h: Array2<F>,
}

pub fn lstm_forward<F: NdFloat>(p: &CellParams<F>, x: &Array2<F>) -> LstmTrace<F> {
    let (t_len, hidden) = (x.nrows(), p.hidden());
    let mut ax = x.dot(&p.w_x.t());
    for mut row in ax.rows_mut() {
        row += &p.b_x;
    }

    let mut gates = Array2::zeros((t_len, 4 * hidden));
    let mut c = Array2::zeros((t_len, hidden));
    let mut tanh_c = Array2::zeros((t_len, hidden));
    let mut h = Array2::zeros((t_len, hidden));
    let mut h_prev: Array1<F> = Array1::zeros(hidden);
    let mut c_prev: Array1<F> = Array1::zeros(hidden);

    for t in 0..t_len {
        let mut a = p.w_h.dot(&h_prev);
        a += &ax.row(t);
        for j in 0..hidden {
            let i_g = sigmoid(a[j]);
            let f_g = sigmoid(a[hidden + j]);
            let g_g = a[2 * hidden + j].tanh();
            let o_g = sigmoid(a[3 * hidden + j]);
            let c_t = f_g * c_prev[j] + i_g * g_g;
            let tc = c_t.tanh();
            gates[(t, j)] = i_g;
            gates[(t, hidden + j)] = f_g;
            gates[(t, 2 * hidden + j)] = g_g;
            gates[(t, 3 * hidden + j)] = o_g;
            c[(t, j)] = c_t;
            tanh_c[(t, j)] = tc;
            h[(t, j)] = o_g * tc;
        }
        h_prev.assign(&h.row(t));
        c_prev.assign(&c.row(t));
    }

    LstmTrace { gates, c, tanh_c, h }
}

/// Backpropagate `dh_out` (gradient of the loss in every hidden state)
/// through the sequence. Returns weight gradients and the input gradient.
pub fn lstm_backward<F: NdFloat>(
    p: &CellParams<F>,
    x: &Array2<F>,
    trace: &LstmTrace<F>,
    dh_out: &Array2<F>,
) -> (CellGrads<F>, Array2<F>) {
    let (t_len, hidden) = (x.nrows(), p.hidden());
    let mut da = Array2::zeros((t_len, 4 * hidden));
    let mut dh_next: Array1<F> = Array1::zeros(hidden);
    let mut dc_next: Array1<F> = Array1::zeros(hidden);

    for t in (0..t_len).rev() {
        let mut da_row: Array1<F> = Array1::zeros(4 * hidden);
        for j in 0..hidden {
            let i_g = trace.gates[(t, j)];
            let f_g = trace.gates[(t, hidden + j)];
            let g_g = trace.gates[(t, 2 * hidden + j)];
            let o_g = trace.gates[(t, 3 * hidden + j)];
            let tc = trace.tanh_c[(t, j)];
            let c_prev = if t > 0 { trace.c[(t - 1, j)] } else { F::zero() };

            let dh = dh_out[(t, j)] + dh_next[j];
            let do_ = dh * tc;
            let dc = dh * o_g * (F::one() - tc * tc) + dc_next[j];
            let di = dc * g_g;
            let df = dc * c_prev;
            let dg = dc * i_g;
            dc_next[j] = dc * f_g;

            da_row[j] = di * i_g * (F::one() - i_g);
            da_row[hidden + j] = df * f_g * (F::one() - f_g);
            da_row[2 * hidden + j] = dg * (F::one() - g_g * g_g);
            da_row[3 * hidden + j] = do_ * o_g * (F::one() - o_g);
        }
        dh_next = p.w_h.t().dot(&da_row);
        da.row_mut(t).assign(&da_row);
    }

    let h_prev = shifted_states(&trace.h);
    let grads = CellGrads {
        w_x: da.t().dot(x),
        w_h: da.t().dot(&h_prev),
        b_x: da.sum_axis(Axis(0)),
        b_h: None,
    };
    let dx = da.dot(&p.w_x);
    (grads, dx)
}

/// Cached GRU activations for one sequence.
#[derive(Debug, Clone)]
pub struct GruTrace<F> {
    z: Array2<F>,
    r: Array2<F>,
    /// Recurrent candidate pre-activation `w_h[n] h_prev + b_h[n]`.
    s: Array2<F>,
    /// Candidate state tanh output.
    n: Array2<F>,
    pub h: Array2<F>,
}

pub fn gru_forward<F: NdFloat>(p: &CellParams<F>, x: &Array2<F>) -> GruTrace<F> {
    let (t_len, hidden) = (x.nrows(), p.hidden());
    let b_h = p.b_h.as_ref().expect("GRU cells carry a recurrent bias");
    let mut ax = x.dot(&p.w_x.t());
    for mut row in ax.rows_mut() {
        row += &p.b_x;
    }

    let mut z = Array2::zeros((t_len, hidden));
    let mut r = Array2::zeros((t_len, hidden));
    let mut s = Array2::zeros((t_len, hidden));
    let mut n = Array2::zeros((t_len, hidden));
    let mut h = Array2::zeros((t_len, hidden));
    let mut h_prev: Array1<F> = Array1::zeros(hidden);

    for t in 0..t_len {
        let mut rec = p.w_h.dot(&h_prev);
        rec += b_h;
        for j in 0..hidden {
            let z_g = sigmoid(ax[(t, j)] + rec[j]);
            let r_g = sigmoid(ax[(t, hidden + j)] + rec[hidden + j]);
            let s_j = rec[2 * hidden + j];
            let n_g = (ax[(t, 2 * hidden + j)] + r_g * s_j).tanh();
            z[(t, j)] = z_g;
            r[(t, j)] = r_g;
            s[(t, j)] = s_j;
            n[(t, j)] = n_g;
            h[(t, j)] = z_g * h_prev[j] + (F::one() - z_g) * n_g;
        }
        h_prev.assign(&h.row(t));
    }

    GruTrace { z, r, s, n, h }
}

pub fn gru_backward<F: NdFloat>(
    p: &CellParams<F>,
    x: &Array2<F>,
    trace: &GruTrace<F>,
    dh_out: &Array2<F>,
) -> (CellGrads<F>, Array2<F>) {
    let (t_len, hidden) = (x.nrows(), p.hidden());
    let mut da_x = Array2::zeros((t_len, 3 * hidden));
    // Gradients of the recurrent-side pre-activations [a_z, a_r, s].
    let mut d_rec = Array2::zeros((t_len, 3 * hidden));
    let mut dh_next: Array1<F> = Array1::zeros(hidden);

    for t in (0..t_len).rev() {
        let mut rec_row: Array1<F> = Array1::zeros(3 * hidden);
        let mut carry: Array1<F> = Array1::zeros(hidden);
        for j in 0..hidden {
            let z_g = trace.z[(t, j)];
            let r_g = trace.r[(t, j)];
            let s_j = trace.s[(t, j)];
            let n_g = trace.n[(t, j)];
            let h_prev = if t > 0 { trace.h[(t - 1, j)] } else { F::zero() };

            let dh = dh_out[(t, j)] + dh_next[j];
            let dn = dh * (F::one() - z_g);
            let dz = dh * (h_prev - n_g);
            let da_n = dn * (F::one() - n_g * n_g);
            let dr = da_n * s_j;
            let ds = da_n * r_g;
            let da_z = dz * z_g * (F::one() - z_g);
            let da_r = dr * r_g * (F::one() - r_g);

            da_x[(t, j)] = da_z;
            da_x[(t, hidden + j)] = da_r;
            da_x[(t, 2 * hidden + j)] = da_n;
            rec_row[j] = da_z;
            rec_row[hidden + j] = da_r;
            rec_row[2 * hidden + j] = ds;
            carry[j] = dh * z_g;
        }
        dh_next = p.w_h.t().dot(&rec_row) + &carry;
        d_rec.row_mut(t).assign(&rec_row);
    }

    let h_prev = shifted_states(&trace.h);
    let grads = CellGrads {
        w_x: da_x.t().dot(x),
        w_h: d_rec.t().dot(&h_prev),
        b_x: da_x.sum_axis(Axis(0)),
        b_h: Some(d_rec.sum_axis(Axis(0))),
    };
    let dx = da_x.dot(&p.w_x);
    (grads, dx)
}

/// Run a cell over a sequence, dispatching on kind; returns hidden states.
pub enum CellTrace<F> {
    Lstm(LstmTrace<F>),
    Gru(GruTrace<F>),
}

impl<F: NdFloat> CellTrace<F> {
    pub fn hidden_states(&self) -> &Array2<F> {
        match self {
            CellTrace::Lstm(t) => &t.h,
            CellTrace::Gru(t) => &t.h,
        }
    }
}

pub(crate) fn cell_forward<F: NdFloat>(
    kind: super::CellKind,
    p: &CellParams<F>,
    x: &Array2<F>,
) -> CellTrace<F> {
    match kind {
        super::CellKind::Lstm => CellTrace::Lstm(lstm_forward(p, x)),
        super::CellKind::Gru => CellTrace::Gru(gru_forward(p, x)),
    }
}

pub(crate) fn cell_backward<F: NdFloat>(
    p: &CellParams<F>,
    x: &Array2<F>,
    trace: &CellTrace<F>,
    dh: &Array2<F>,
) -> (CellGrads<F>, Array2<F>) {
    match trace {
        CellTrace::Lstm(t) => lstm_backward(p, x, t, dh),
        CellTrace::Gru(t) => gru_backward(p, x, t, dh),
    }
}

pub(crate) fn zero_cell_grads<F: NdFloat>(p: &CellParams<F>) -> CellGrads<F> {
    p.zero_grads()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cell(rng: &mut ChaCha8Rng, gates: usize, d: usize, h: usize, gru: bool) -> CellParams<f64> {
        let mut draw = |n: usize, m: usize| Array2::from_shape_fn((n, m), |_| rng.random_range(-0.5..0.5));
        let w_x = draw(gates * h, d);
        let w_h = draw(gates * h, h);
        let b_x = Array1::from_shape_fn(gates * h, |_| rng.random_range(-0.2..0.2));
        let b_h = gru.then(|| Array1::from_shape_fn(gates * h, |_| rng.random_range(-0.2..0.2)));
        CellParams { w_x, w_h, b_x, b_h }
    }

    #[test]
    fn lstm_zero_weights_give_zero_states() {
        let p = CellParams::<f64> {
            w_x: Array2::zeros((8, 3)),
            w_h: Array2::zeros((8, 2)),
            b_x: Array1::zeros(8),
            b_h: None,
        };
        let x = Array2::from_elem((5, 3), 1.0);
        let trace = lstm_forward(&p, &x);
        // All gates sit at sigmoid(0)/tanh(0); cell state stays at
        // 0.5 * tanh(0) accumulation = i*g = 0.5*0 = 0.
        assert!(trace.h.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gru_forward_matches_manual_single_step() {
        // One step, H = 1: hand-evaluate the reset-after equations.
        let p = CellParams::<f64> {
            w_x: Array2::from_shape_vec((3, 1), vec![0.3, -0.2, 0.5]).unwrap(),
            w_h: Array2::from_shape_vec((3, 1), vec![0.7, 0.1, -0.4]).unwrap(),
            b_x: Array1::from_vec(vec![0.01, 0.02, 0.03]),
            b_h: Some(Array1::from_vec(vec![0.04, 0.05, 0.06])),
        };
        let x = Array2::from_shape_vec((1, 1), vec![0.9]).unwrap();
        let trace = gru_forward(&p, &x);

        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let z = sig(0.3 * 0.9 + 0.01 + 0.04);
        let r = sig(-0.2 * 0.9 + 0.02 + 0.05);
        let s = 0.06;
        let n = (0.5 * 0.9 + 0.03 + r * s).tanh();
        let h = (1.0 - z) * n;
        assert!((trace.h[(0, 0)] - h).abs() < 1e-14);
    }

    #[test]
    fn bptt_gradients_match_finite_differences() {
        // Central differences on a sum-of-hidden-states loss.
        for (gru, name) in [(false, "lstm"), (true, "gru")] {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let gates = if gru { 3 } else { 4 };
            let (t_len, d, h) = (5, 3, 2);
            let p = random_cell(&mut rng, gates, d, h, gru);
            let x = Array2::from_shape_fn((t_len, d), |_| rng.random_range(-1.0..1.0));

            let loss = |p: &CellParams<f64>| -> f64 {
                let trace = cell_forward(
                    if gru { crate::nn::CellKind::Gru } else { crate::nn::CellKind::Lstm },
                    p,
                    &x,
                );
                trace.hidden_states().sum()
            };

            let kind = if gru { crate::nn::CellKind::Gru } else { crate::nn::CellKind::Lstm };
            let trace = cell_forward(kind, &p, &x);
            let dh = Array2::from_elem((t_len, h), 1.0);
            let (grads, _) = cell_backward(&p, &x, &trace, &dh);

            let eps = 1e-6;
            let mut check = |get: &dyn Fn(&CellParams<f64>) -> f64,
                             set: &dyn Fn(&mut CellParams<f64>, f64),
                             analytic: f64| {
                let base = get(&p);
                let mut pp = p.clone();
                set(&mut pp, base + eps);
                let up = loss(&pp);
                set(&mut pp, base - eps);
                let down = loss(&pp);
                let numeric = (up - down) / (2.0 * eps);
                assert!(
                    (numeric - analytic).abs() <= 1e-6 * numeric.abs().max(1.0),
                    "{name}: numeric {numeric} vs analytic {analytic}"
                );
            };

            check(&|p| p.w_x[(1, 1)], &|p, v| p.w_x[(1, 1)] = v, grads.w_x[(1, 1)]);
            check(&|p| p.w_h[(0, 1)], &|p, v| p.w_h[(0, 1)] = v, grads.w_h[(0, 1)]);
            check(&|p| p.b_x[2], &|p, v| p.b_x[2] = v, grads.b_x[2]);
            if gru {
                check(
                    &|p| p.b_h.as_ref().unwrap()[4],
                    &|p, v| p.b_h.as_mut().unwrap()[4] = v,
                    grads.b_h.as_ref().unwrap()[4],
                );
            }
        }
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_cell(&mut rng, 4, 3, 2, false);
        let x = Array2::from_shape_fn((4, 3), |_| rng.random_range(-1.0..1.0));
        let trace = lstm_forward(&p, &x);
        let dh = Array2::from_elem((4, 2), 1.0);
        let (_, dx) = lstm_backward(&p, &x, &trace, &dh);

        let eps = 1e-6;
        for idx in [(0, 0), (1, 2), (3, 1)] {
            let mut xx = x.clone();
            xx[idx] += eps;
            let up = lstm_forward(&p, &xx).h.sum();
            xx[idx] -= 2.0 * eps;
            let down = lstm_forward(&p, &xx).h.sum();
            let numeric = (up - down) / (2.0 * eps);
            assert!((numeric - dx[idx]).abs() <= 1e-6 * numeric.abs().max(1.0));
        }
    }
}

use super::params::GruLayerParams;
use crate::error::{Error, Result};
use crate::numerics::matrix::{gemv_acc, gemv_t_acc, ger_acc};
use crate::numerics::ops::sigmoid_scalar;

/// Activations saved by the forward pass of one cell application.
#[derive(Debug, Clone)]
pub struct GruCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub u: Vec<f64>,
    pub r: Vec<f64>,
    pub candidate: Vec<f64>,
    pub h: Vec<f64>,
}

impl GruLayerParams {
    /// One step:
    /// `u = σ(W_xu x + W_hu h + b_u)`, `r = σ(W_xr x + W_hr h + b_r)`,
    /// `h̃ = tanh(W_xh x + W_hh (r ⊙ h) + b_h)`, `h' = u ⊙ h + (1 − u) ⊙ h̃`.
    pub fn step(&self, x: &[f64], h_prev: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() || h_prev.len() != self.hidden_dim() {
            return Err(Error::Shape(format!(
                "gru step: x {} (want {}), h {} (want {})",
                x.len(),
                self.input_dim(),
                h_prev.len(),
                self.hidden_dim()
            )));
        }
        Ok(self.forward(x, h_prev).h)
    }

    pub(crate) fn forward(&self, x: &[f64], h_prev: &[f64]) -> GruCache {
        let n = self.hidden_dim();
        let mut u = self.b_u.as_slice().to_vec();
        gemv_acc(&self.w_xu, x, &mut u);
        gemv_acc(&self.w_hu, h_prev, &mut u);
        u.iter_mut().for_each(|v| *v = sigmoid_scalar(*v));

        let mut r = self.b_r.as_slice().to_vec();
        gemv_acc(&self.w_xr, x, &mut r);
        gemv_acc(&self.w_hr, h_prev, &mut r);
        r.iter_mut().for_each(|v| *v = sigmoid_scalar(*v));

        let rh: Vec<f64> = r.iter().zip(h_prev).map(|(a, b)| a * b).collect();
        let mut candidate = self.b_h.as_slice().to_vec();
        gemv_acc(&self.w_xh, x, &mut candidate);
        gemv_acc(&self.w_hh, &rh, &mut candidate);
        candidate.iter_mut().for_each(|v| *v = v.tanh());

        let h = (0..n)
            .map(|i| u[i] * h_prev[i] + (1.0 - u[i]) * candidate[i])
            .collect();
        GruCache {
            x: x.to_vec(),
            h_prev: h_prev.to_vec(),
            u,
            r,
            candidate,
            h,
        }
    }

    /// Accumulates weight gradients into `grad`, and input / previous-state
    /// gradients into `dx` / `dh_prev`, given `dh = ∂L/∂h'`.
    pub(crate) fn backward(
        &self,
        cache: &GruCache,
        dh: &[f64],
        grad: &mut GruLayerParams,
        dx: &mut [f64],
        dh_prev: &mut [f64],
    ) {
        let n = self.hidden_dim();
        let GruCache {
            x,
            h_prev,
            u,
            r,
            candidate,
            ..
        } = cache;

        let mut da_h = vec![0.0; n];
        let mut da_u = vec![0.0; n];
        for i in 0..n {
            dh_prev[i] += dh[i] * u[i];
            let dcand = dh[i] * (1.0 - u[i]);
            da_h[i] = dcand * (1.0 - candidate[i] * candidate[i]);
            let du = dh[i] * (h_prev[i] - candidate[i]);
            da_u[i] = du * u[i] * (1.0 - u[i]);
        }

        // Candidate branch.
        let rh: Vec<f64> = r.iter().zip(h_prev.iter()).map(|(a, b)| a * b).collect();
        ger_acc(&mut grad.w_xh, &da_h, x);
        ger_acc(&mut grad.w_hh, &da_h, &rh);
        grad.b_h.add_slice(&da_h);
        gemv_t_acc(&self.w_xh, &da_h, dx);
        let mut drh = vec![0.0; n];
        gemv_t_acc(&self.w_hh, &da_h, &mut drh);
        let mut da_r = vec![0.0; n];
        for i in 0..n {
            dh_prev[i] += drh[i] * r[i];
            let dr = drh[i] * h_prev[i];
            da_r[i] = dr * r[i] * (1.0 - r[i]);
        }

        // Update gate.
        ger_acc(&mut grad.w_xu, &da_u, x);
        ger_acc(&mut grad.w_hu, &da_u, h_prev);
        grad.b_u.add_slice(&da_u);
        gemv_t_acc(&self.w_xu, &da_u, dx);
        gemv_t_acc(&self.w_hu, &da_u, dh_prev);

        // Reset gate.
        ger_acc(&mut grad.w_xr, &da_r, x);
        ger_acc(&mut grad.w_hr, &da_r, h_prev);
        grad.b_r.add_slice(&da_r);
        gemv_t_acc(&self.w_xr, &da_r, dx);
        gemv_t_acc(&self.w_hr, &da_r, dh_prev);
    }
}

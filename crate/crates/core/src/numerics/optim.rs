use super::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// L2 penalty coefficient, added to the gradient as `λ·θ` before the moment updates.
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

/// Adam moments for a list of parameter tensors.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    m: Vec<Matrix>,
    v: Vec<Matrix>,
    step: u64,
}

impl AdamState {
    pub fn new<'a>(config: AdamConfig, params: impl IntoIterator<Item = &'a Matrix>) -> Self {
        let m: Vec<Matrix> = params
            .into_iter()
            .map(|p| Matrix::zeros(p.rows(), p.cols()))
            .collect();
        let v = m.clone();
        AdamState {
            config,
            m,
            v,
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.config.lr = lr;
    }

    /// One bias-corrected Adam update. `params` and `grads` must be in the
    /// same order as the tensors this state was created from.
    pub fn step(&mut self, params: &mut [&mut Matrix], grads: &[&Matrix]) {
        assert_eq!(params.len(), self.m.len(), "parameter count changed");
        assert_eq!(grads.len(), self.m.len(), "gradient count mismatch");
        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
            weight_decay,
        } = self.config;
        let bc1 = 1.0 - beta1.powi(self.step as i32);
        let bc2 = 1.0 - beta2.powi(self.step as i32);
        for (k, p) in params.iter_mut().enumerate() {
            let g = grads[k].as_slice();
            let m = self.m[k].as_mut_slice();
            let v = self.v[k].as_mut_slice();
            for (i, theta) in p.as_mut_slice().iter_mut().enumerate() {
                let gi = g[i] + weight_decay * *theta;
                m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
                v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                *theta -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

/// Step decay: `base_lr · gamma^floor(epoch / step_size)`.
pub fn step_lr(epoch: usize, base_lr: f64, step_size: usize, gamma: f64) -> f64 {
    let step_size = step_size.max(1);
    base_lr * gamma.powi((epoch / step_size) as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> Matrix {
        Matrix::column(&[v])
    }

    #[test]
    fn zero_gradient_without_decay_is_a_no_op() {
        let mut p = scalar(1.5);
        let g = scalar(0.0);
        let mut st = AdamState::new(AdamConfig::default(), [&p]);
        for _ in 0..5 {
            st.step(&mut [&mut p], &[&g]);
        }
        assert_eq!(p.get(0, 0), 1.5);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        for g0 in [3.0, -0.02, 1e-3] {
            let mut p = scalar(0.0);
            let cfg = AdamConfig::default();
            let mut st = AdamState::new(cfg, [&p]);
            st.step(&mut [&mut p], &[&scalar(g0)]);
            let expected = -cfg.lr * g0 / (g0.abs() + cfg.eps);
            assert!((p.get(0, 0) - expected).abs() < 1e-15);
            assert!((p.get(0, 0) + cfg.lr * g0.signum()).abs() < 1e-7);
        }
    }

    /// Scalar Adam with L2 coupling, written out independently.
    fn scalar_adam(theta0: f64, steps: usize, cfg: AdamConfig, grad: impl Fn(f64) -> f64) -> f64 {
        let (mut theta, mut m, mut v) = (theta0, 0.0f64, 0.0f64);
        for t in 1..=steps {
            let g = grad(theta) + cfg.weight_decay * theta;
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
            let mh = m / (1.0 - cfg.beta1.powi(t as i32));
            let vh = v / (1.0 - cfg.beta2.powi(t as i32));
            theta -= cfg.lr * mh / (vh.sqrt() + cfg.eps);
        }
        theta
    }

    #[test]
    fn quadratic_trajectory_matches_scalar_reference() {
        let cfg = AdamConfig {
            lr: 0.05,
            weight_decay: 0.01,
            ..AdamConfig::default()
        };
        // L = 0.5·a·(θ - c)², elementwise with different a, c.
        let a = [1.0, 4.0, 0.25];
        let c = [2.0, -1.0, 0.5];
        let mut p = Matrix::column(&[0.0, 0.3, -2.0]);
        let mut st = AdamState::new(cfg, [&p]);
        for _ in 0..100 {
            let g: Vec<f64> = (0..3).map(|i| a[i] * (p.get(i, 0) - c[i])).collect();
            st.step(&mut [&mut p], &[&Matrix::column(&g)]);
        }
        for i in 0..3 {
            let start = [0.0, 0.3, -2.0][i];
            let r = scalar_adam(start, 100, cfg, |th| a[i] * (th - c[i]));
            assert!((p.get(i, 0) - r).abs() < 1e-10);
        }
    }

    #[test]
    fn step_schedule() {
        assert_eq!(step_lr(0, 1e-3, 10, 0.5), 1e-3);
        assert_eq!(step_lr(57, 1e-3, 10, 1.0), 1e-3);
        assert!((step_lr(25, 1e-3, 10, 0.5) - 2.5e-4).abs() < 1e-18);
        assert_eq!(step_lr(9, 1.0, 10, 0.5), 1.0);
        assert_eq!(step_lr(10, 1.0, 10, 0.5), 0.5);
    }
}

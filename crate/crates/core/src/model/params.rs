use serde::{Deserialize, Serialize};

use super::QUANTILE_COUNT;
use crate::error::{Error, Result};
use crate::numerics::{Matrix, RngStream};
use crate::transform::N_FEATURES;

/// Architecture dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n_countries: usize,
    pub d_emb: usize,
    pub hidden_dim: usize,
    pub n_layers: usize,
    pub l_enc: usize,
    pub l_pred: usize,
}

impl ModelConfig {
    /// Per-step input width of the first encoder and decoder layers.
    pub fn input_dim(&self) -> usize {
        N_FEATURES + self.d_emb
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_countries == 0 || self.hidden_dim == 0 || self.n_layers == 0 {
            return Err(Error::Config(format!("degenerate model dimensions {self:?}")));
        }
        if self.l_enc == 0 || self.l_pred == 0 {
            return Err(Error::Config("l_enc and l_pred must be positive".into()));
        }
        Ok(())
    }
}

/// Weights of one GRU layer; weight matrices are stored `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct GruLayerParams {
    pub w_xu: Matrix,
    pub w_hu: Matrix,
    pub b_u: Matrix,
    pub w_xr: Matrix,
    pub w_hr: Matrix,
    pub b_r: Matrix,
    pub w_xh: Matrix,
    pub w_hh: Matrix,
    pub b_h: Matrix,
}

impl GruLayerParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        let wx = || Matrix::zeros(hidden_dim, input_dim);
        let wh = || Matrix::zeros(hidden_dim, hidden_dim);
        let b = || Matrix::zeros(hidden_dim, 1);
        GruLayerParams {
            w_xu: wx(),
            w_hu: wh(),
            b_u: b(),
            w_xr: wx(),
            w_hr: wh(),
            b_r: b(),
            w_xh: wx(),
            w_hh: wh(),
            b_h: b(),
        }
    }

    /// Uniform(−k, k) with `k = 1/√fan_in` for weights; zero biases.
    pub fn init(input_dim: usize, hidden_dim: usize, rng: &mut RngStream) -> Self {
        let mut p = GruLayerParams::zeros(input_dim, hidden_dim);
        for w in [
            &mut p.w_xu,
            &mut p.w_hu,
            &mut p.w_xr,
            &mut p.w_hr,
            &mut p.w_xh,
            &mut p.w_hh,
        ] {
            init_uniform(w, rng);
        }
        p
    }

    pub fn input_dim(&self) -> usize {
        self.w_xu.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_hu.rows()
    }

    pub fn tensors(&self) -> [&Matrix; 9] {
        [
            &self.w_xu, &self.w_hu, &self.b_u, &self.w_xr, &self.w_hr, &self.b_r, &self.w_xh,
            &self.w_hh, &self.b_h,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Matrix; 9] {
        [
            &mut self.w_xu,
            &mut self.w_hu,
            &mut self.b_u,
            &mut self.w_xr,
            &mut self.w_hr,
            &mut self.b_r,
            &mut self.w_xh,
            &mut self.w_hh,
            &mut self.b_h,
        ]
    }
}

fn init_uniform(m: &mut Matrix, rng: &mut RngStream) {
    let k = 1.0 / (m.cols() as f64).sqrt();
    for v in m.as_mut_slice() {
        *v = rng.uniform_range(-k, k);
    }
}

/// All trainable weights of the encoder-decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub encoder: Vec<GruLayerParams>,
    pub decoder: Vec<GruLayerParams>,
    /// `n_countries × d_emb`.
    pub embeddings: Matrix,
    /// `Q × hidden_dim`.
    pub head_w: Matrix,
    /// `Q × 1`.
    pub head_b: Matrix,
}

impl ModelParams {
    pub fn zeros(config: ModelConfig) -> Self {
        let layers = |cfg: &ModelConfig| {
            (0..cfg.n_layers)
                .map(|l| {
                    let input = if l == 0 { cfg.input_dim() } else { cfg.hidden_dim };
                    GruLayerParams::zeros(input, cfg.hidden_dim)
                })
                .collect::<Vec<_>>()
        };
        ModelParams {
            config,
            encoder: layers(&config),
            decoder: layers(&config),
            embeddings: Matrix::zeros(config.n_countries, config.d_emb),
            head_w: Matrix::zeros(QUANTILE_COUNT, config.hidden_dim),
            head_b: Matrix::zeros(QUANTILE_COUNT, 1),
        }
    }

    pub fn init(config: ModelConfig, rng: &RngStream) -> Result<Self> {
        config.validate()?;
        let mut rng = rng.derive("init");
        let mut p = ModelParams::zeros(config);
        for layer in p.encoder.iter_mut().chain(p.decoder.iter_mut()) {
            *layer = GruLayerParams::init(layer.input_dim(), config.hidden_dim, &mut rng);
        }
        init_uniform(&mut p.embeddings, &mut rng);
        init_uniform(&mut p.head_w, &mut rng);
        Ok(p)
    }

    pub fn zeros_like(&self) -> Self {
        ModelParams::zeros(self.config)
    }

    /// Tensors in declared order: encoder layers, decoder layers, embeddings, head weight, head bias.
    pub fn tensors(&self) -> Vec<&Matrix> {
        let mut out = Vec::new();
        for l in self.encoder.iter().chain(&self.decoder) {
            out.extend(l.tensors());
        }
        out.push(&self.embeddings);
        out.push(&self.head_w);
        out.push(&self.head_b);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out = Vec::new();
        for l in self.encoder.iter_mut().chain(self.decoder.iter_mut()) {
            out.extend(l.tensors_mut());
        }
        out.push(&mut self.embeddings);
        out.push(&mut self.head_w);
        out.push(&mut self.head_b);
        out
    }

    pub fn n_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for t in self.tensors() {
            out.extend_from_slice(t.as_slice());
        }
        out
    }

    pub fn assign_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(Error::Shape(format!(
                "{} values for {} parameters",
                flat.len(),
                self.n_params()
            )));
        }
        let mut pos = 0;
        for t in self.tensors_mut() {
            let n = t.len();
            t.as_mut_slice().copy_from_slice(&flat[pos..pos + n]);
            pos += n;
        }
        Ok(())
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &ModelParams, scale: f64) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.add_scaled(b, scale);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for t in self.tensors_mut() {
            t.scale(s);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ModelConfig {
        ModelConfig {
            n_countries: 3,
            d_emb: 2,
            hidden_dim: 5,
            n_layers: 2,
            l_enc: 6,
            l_pred: 3,
        }
    }

    #[test]
    fn shapes_and_count() {
        let p = ModelParams::init(cfg(), &RngStream::new(1)).unwrap();
        let h = 5;
        let layer0 = 3 * (h * 6 + h * h + h);
        let layer1 = 3 * (h * h + h * h + h);
        let expected = 2 * (layer0 + layer1) + 3 * 2 + 5 * h + 5;
        assert_eq!(p.n_params(), expected);
        assert_eq!(p.encoder[0].input_dim(), 6);
        assert_eq!(p.encoder[1].input_dim(), 5);
        assert!(p.encoder[0].b_u.as_slice().iter().all(|v| *v == 0.0));
        let k = 1.0 / 6f64.sqrt();
        assert!(p.encoder[0].w_xu.as_slice().iter().all(|v| v.abs() <= k));
    }

    #[test]
    fn flatten_round_trip_and_determinism() {
        let p = ModelParams::init(cfg(), &RngStream::new(2)).unwrap();
        let q = ModelParams::init(cfg(), &RngStream::new(2)).unwrap();
        assert_eq!(p, q);
        let mut z = p.zeros_like();
        z.assign_flat(&p.flatten()).unwrap();
        assert_eq!(z, p);
        assert!(z.assign_flat(&[0.0]).is_err());
    }
}

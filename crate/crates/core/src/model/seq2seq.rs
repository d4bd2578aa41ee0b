//! Encoder-decoder forward pass with an optional tape, and the matching
//! reverse pass.
//!
//! Decoder step `k` (0-based) sees `[s_k, s_{k−2}, s_{k−4}, s_{k−6}]` plus the
//! country embedding, where `s_0` is the last observed value, `s_j` for
//! `j ≥ 1` is the feedback chosen after step `j−1` (teacher value or the
//! model's own median), and negative indices read observed history.

use super::gru::GruCache;
use super::params::ModelParams;
use super::quantiles::{ForecastGrid, QuantileRow, MEDIAN_INDEX};
use crate::error::{Error, Result};
use crate::numerics::matrix::{gemv_acc, gemv_t_acc, ger_acc};
use crate::numerics::{Matrix, RngStream};
use crate::transform::{observed_lag, LAGS, N_FEATURES};

/// Everything the reverse pass needs from one forward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    country_id: usize,
    /// `[step][layer]`
    encoder: Vec<Vec<GruCache>>,
    /// `[step][layer]`
    decoder: Vec<Vec<GruCache>>,
    /// `feedback_from_model[j]`: whether `s_j` was the model's own median.
    feedback_from_model: Vec<bool>,
}

impl Tape {
    pub fn teacher_forced_steps(&self) -> usize {
        self.feedback_from_model
            .iter()
            .skip(1)
            .filter(|m| !**m)
            .count()
    }
}

fn check_inputs(params: &ModelParams, encoder_input: &Matrix, country_id: usize) -> Result<()> {
    if country_id >= params.config.n_countries {
        return Err(Error::InvalidInput(format!(
            "unknown country id {country_id} (model has {})",
            params.config.n_countries
        )));
    }
    if encoder_input.cols() != N_FEATURES || encoder_input.rows() == 0 {
        return Err(Error::Shape(format!(
            "encoder input must be L×{N_FEATURES}, got {:?}",
            encoder_input.shape()
        )));
    }
    Ok(())
}

fn step_input(features: &[f64], emb: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(features.len() + emb.len());
    x.extend_from_slice(features);
    x.extend_from_slice(emb);
    x
}

fn run_layers(
    layers: &[super::params::GruLayerParams],
    x: Vec<f64>,
    h: &mut [Vec<f64>],
    caches: Option<&mut Vec<GruCache>>,
) {
    let mut input = x;
    let mut record = Vec::new();
    for (l, layer) in layers.iter().enumerate() {
        let cache = layer.forward(&input, &h[l]);
        h[l] = cache.h.clone();
        input = cache.h.clone();
        record.push(cache);
    }
    if let Some(c) = caches {
        *c = record;
    }
}

fn encode_inner(
    params: &ModelParams,
    encoder_input: &Matrix,
    country_id: usize,
    mut tape: Option<&mut Vec<Vec<GruCache>>>,
) -> Vec<Vec<f64>> {
    let hdim = params.config.hidden_dim;
    let emb = params.embeddings.row(country_id);
    let mut h = vec![vec![0.0; hdim]; params.encoder.len()];
    for t in 0..encoder_input.rows() {
        let x = step_input(encoder_input.row(t), emb);
        match tape.as_deref_mut() {
            Some(steps) => {
                let mut c = Vec::new();
                run_layers(&params.encoder, x, &mut h, Some(&mut c));
                steps.push(c);
            }
            None => run_layers(&params.encoder, x, &mut h, None),
        }
    }
    h
}

/// Final hidden state of every encoder layer.
pub fn encode(params: &ModelParams, encoder_input: &Matrix, country_id: usize) -> Result<Vec<Vec<f64>>> {
    check_inputs(params, encoder_input, country_id)?;
    Ok(encode_inner(params, encoder_input, country_id, None))
}

/// Teacher-forcing settings for one decode.
#[derive(Debug)]
pub struct TeacherForcing<'a> {
    pub targets: Option<&'a [f64]>,
    pub prob: f64,
    /// One Bernoulli draw per step when present.
    pub rng: Option<&'a mut RngStream>,
}

impl TeacherForcing<'_> {
    pub fn off() -> Self {
        TeacherForcing {
            targets: None,
            prob: 0.0,
            rng: None,
        }
    }
}

fn decode_inner(
    params: &ModelParams,
    h_enc: &[Vec<f64>],
    encoder_input: &Matrix,
    country_id: usize,
    tf: TeacherForcing<'_>,
    mut tape: Option<(&mut Vec<Vec<GruCache>>, &mut Vec<bool>)>,
) -> Result<ForecastGrid> {
    let l_pred = params.config.l_pred;
    if !(0.0..=1.0).contains(&tf.prob) {
        return Err(Error::InvalidInput(format!("tf_prob {} outside [0, 1]", tf.prob)));
    }
    if tf.prob > 0.0 {
        match tf.targets {
            None => {
                return Err(Error::InvalidInput(
                    "teacher targets required when tf_prob > 0".into(),
                ))
            }
            Some(t) if t.len() != l_pred => {
                return Err(Error::Shape(format!("{} targets for l_pred {l_pred}", t.len())))
            }
            _ => {}
        }
        if tf.prob < 1.0 && tf.rng.is_none() {
            return Err(Error::InvalidInput("teacher forcing needs an rng".into()));
        }
    }
    if encoder_input.rows() < 2 {
        return Err(Error::Shape("decoder lags need at least 2 encoder rows".into()));
    }
    if h_enc.len() != params.decoder.len() {
        return Err(Error::Shape("encoder/decoder layer count mismatch".into()));
    }

    let emb = params.embeddings.row(country_id);
    let mut h: Vec<Vec<f64>> = h_enc.to_vec();
    let mut feedback = vec![0.0; l_pred];
    let mut from_model = vec![false; l_pred];
    feedback[0] = observed_lag(encoder_input, 0);
    let mut rng = tf.rng;
    let mut rows = Vec::with_capacity(l_pred);

    for k in 0..l_pred {
        let mut features = [0.0; N_FEATURES];
        for (c, lag) in LAGS.iter().enumerate() {
            let idx = k as isize - *lag as isize;
            features[c] = if idx >= 0 {
                feedback[idx as usize]
            } else {
                observed_lag(encoder_input, (-idx) as usize)
            };
        }
        let x = step_input(&features, emb);
        match tape.as_mut() {
            Some((steps, _)) => {
                let mut c = Vec::new();
                run_layers(&params.decoder, x, &mut h, Some(&mut c));
                steps.push(c);
            }
            None => run_layers(&params.decoder, x, &mut h, None),
        }
        let top = h.last().expect("at least one layer");
        let mut out = params.head_b.as_slice().to_vec();
        gemv_acc(&params.head_w, top, &mut out);
        let row: QuantileRow = out.try_into().expect("head has Q outputs");
        rows.push(row);

        if k + 1 < l_pred {
            let teacher = match rng.as_deref_mut() {
                Some(r) => r.bernoulli(tf.prob),
                None => tf.prob >= 1.0,
            };
            if teacher {
                feedback[k + 1] = tf.targets.expect("checked above")[k];
            } else {
                feedback[k + 1] = row[MEDIAN_INDEX];
                from_model[k + 1] = true;
            }
        }
    }
    if let Some((_, fm)) = tape {
        *fm = from_model;
    }
    Ok(ForecastGrid::new(rows))
}

/// Runs the decoder from the encoder states `h_enc`.
pub fn decode(
    params: &ModelParams,
    h_enc: &[Vec<f64>],
    encoder_input: &Matrix,
    country_id: usize,
    tf: TeacherForcing<'_>,
) -> Result<ForecastGrid> {
    check_inputs(params, encoder_input, country_id)?;
    decode_inner(params, h_enc, encoder_input, country_id, tf, None)
}

/// Inference pass (no teacher forcing).
pub fn forward(params: &ModelParams, encoder_input: &Matrix, country_id: usize) -> Result<ForecastGrid> {
    let h = encode(params, encoder_input, country_id)?;
    decode(params, &h, encoder_input, country_id, TeacherForcing::off())
}

/// Forward pass that records everything needed by [`backward`].
pub fn forward_with_tape(
    params: &ModelParams,
    encoder_input: &Matrix,
    country_id: usize,
    tf: TeacherForcing<'_>,
) -> Result<(ForecastGrid, Tape)> {
    check_inputs(params, encoder_input, country_id)?;
    let mut enc_steps = Vec::with_capacity(encoder_input.rows());
    let h = encode_inner(params, encoder_input, country_id, Some(&mut enc_steps));
    let mut dec_steps = Vec::with_capacity(params.config.l_pred);
    let mut from_model = Vec::new();
    let grid = decode_inner(
        params,
        &h,
        encoder_input,
        country_id,
        tf,
        Some((&mut dec_steps, &mut from_model)),
    )?;
    Ok((
        grid,
        Tape {
            country_id,
            encoder: enc_steps,
            decoder: dec_steps,
            feedback_from_model: from_model,
        },
    ))
}

/// Accumulates `∂L/∂θ` into `grads` given `dgrid[k][q] = ∂L/∂ŷ_{k,q}`.
/// Gradients flow through fed-back medians as well as through the states.
pub fn backward(params: &ModelParams, tape: &Tape, dgrid: &[QuantileRow], grads: &mut ModelParams) {
    let cfg = params.config;
    let n_layers = params.decoder.len();
    let hdim = cfg.hidden_dim;
    let l_pred = tape.decoder.len();
    assert_eq!(dgrid.len(), l_pred, "gradient rows must match decoder steps");

    let mut dy: Vec<QuantileRow> = dgrid.to_vec();
    let mut dh = vec![vec![0.0; hdim]; n_layers];
    let mut demb = vec![0.0; cfg.d_emb];

    for k in (0..l_pred).rev() {
        let caches = &tape.decoder[k];
        let top = &caches[n_layers - 1].h;
        ger_acc(&mut grads.head_w, &dy[k], top);
        grads.head_b.add_slice(&dy[k]);
        gemv_t_acc(&params.head_w, &dy[k], &mut dh[n_layers - 1]);

        for l in (0..n_layers).rev() {
            let layer = &params.decoder[l];
            let mut dx = vec![0.0; layer.input_dim()];
            let mut dh_prev = vec![0.0; hdim];
            let dh_l = std::mem::take(&mut dh[l]);
            layer.backward(&caches[l], &dh_l, &mut grads.decoder[l], &mut dx, &mut dh_prev);
            dh[l] = dh_prev;
            if l > 0 {
                for (a, b) in dh[l - 1].iter_mut().zip(&dx) {
                    *a += b;
                }
            } else {
                for (c, lag) in LAGS.iter().enumerate() {
                    let idx = k as isize - *lag as isize;
                    if idx >= 1 && tape.feedback_from_model[idx as usize] {
                        dy[idx as usize - 1][MEDIAN_INDEX] += dx[c];
                    }
                }
                for (a, b) in demb.iter_mut().zip(&dx[N_FEATURES..]) {
                    *a += b;
                }
            }
        }
    }

    // dh now holds ∂L/∂h_enc for each layer.
    for caches in tape.encoder.iter().rev() {
        for l in (0..n_layers).rev() {
            let layer = &params.encoder[l];
            let mut dx = vec![0.0; layer.input_dim()];
            let mut dh_prev = vec![0.0; hdim];
            let dh_l = std::mem::take(&mut dh[l]);
            layer.backward(&caches[l], &dh_l, &mut grads.encoder[l], &mut dx, &mut dh_prev);
            dh[l] = dh_prev;
            if l > 0 {
                for (a, b) in dh[l - 1].iter_mut().zip(&dx) {
                    *a += b;
                }
            } else {
                for (a, b) in demb.iter_mut().zip(&dx[N_FEATURES..]) {
                    *a += b;
                }
            }
        }
    }
    grads.embeddings.row_mut(tape.country_id).iter_mut().zip(&demb).for_each(|(a, b)| *a += b);
}

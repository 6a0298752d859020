//! Projected subgradient baseline on the primal objective.
//!
//! Full-batch subgradient steps `W ← W - η_t (λW + (1/n) Σ x_i g_iᵀ)` with
//! `η_t = 1/(λt)`, each followed by projection onto the Frobenius ball of
//! radius `R`. The default radius `sqrt(2 P(0) / λ)` bounds the norm of the
//! minimizer, since `(λ/2)‖W*‖² ≤ P(W*) ≤ P(0)`.

use std::time::Instant;

use ndarray::Array2;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::loss::LossSpec;
use crate::model::Model;
use crate::solver::{example_pass, outer_sum};
use crate::trace::TraceRecord;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PgConfig {
    pub lambda: f64,
    pub max_iters: usize,
    /// Projection radius; 0 selects `sqrt(2 P(0) / λ)`.
    pub radius: f64,
    pub deterministic: bool,
}

impl PgConfig {
    pub fn new(lambda: f64) -> Self {
        PgConfig {
            lambda,
            max_iters: 1000,
            radius: 0.0,
            deterministic: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PgOutcome {
    pub model: Model,
    /// One row per iterate `0..=max_iters`; dual and gap are NaN.
    pub trace: Vec<TraceRecord>,
    pub radius: f64,
}

/// Scales `weights` onto the Frobenius ball of radius `radius` if outside.
pub fn project_to_ball(weights: &mut Array2<f64>, radius: f64) {
    let norm = weights.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > radius {
        let scale = if norm > 0.0 { radius / norm } else { 0.0 };
        weights.mapv_inplace(|v| v * scale);
    }
}

pub fn pg_train(data: &Dataset, spec: &LossSpec, config: &PgConfig) -> Result<PgOutcome> {
    let lambda = config.lambda;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidConfig(format!("lambda must be positive, got {lambda}")));
    }
    if !(config.radius >= 0.0 && config.radius.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "radius must be non-negative, got {}",
            config.radius
        )));
    }
    if data.classes() != spec.classes() {
        return Err(Error::Dimension {
            expected: spec.classes(),
            actual: data.classes(),
        });
    }

    let started = Instant::now();
    let n = data.len() as f64;
    let mut weights = Array2::<f64>::zeros((data.dim(), spec.classes()));
    let mut trace = Vec::with_capacity(config.max_iters + 1);
    let mut radius = config.radius;

    for t in 0..=config.max_iters {
        let pass = example_pass(weights.view(), data, spec, None);
        let norm_sq: f64 = weights.iter().map(|v| v * v).sum();
        let primal = 0.5 * lambda * norm_sq + pass.losses.iter().sum::<f64>() / n;
        if t == 0 && radius == 0.0 {
            radius = (2.0 * primal / lambda).sqrt();
        }
        trace.push(TraceRecord {
            iteration: t,
            elapsed_sec: started.elapsed().as_secs_f64(),
            primal,
            dual: f64::NAN,
            gap: f64::NAN,
        });
        if t == config.max_iters {
            break;
        }
        // Rows of `pass.vertices` are the negated loss subgradients.
        let loss_part = outer_sum(&pass.vertices, data, config.deterministic);
        let eta = 1.0 / (lambda * (t + 1) as f64);
        let shrink = 1.0 - eta * lambda;
        ndarray::Zip::from(&mut weights)
            .and(&loss_part)
            .for_each(|w, &g| *w = shrink * *w + eta * g / n);
        project_to_ball(&mut weights, radius);
    }

    let model = Model::new(
        weights,
        data.label_names().to_vec(),
        spec.clone(),
        lambda,
        0.0,
    )?;
    Ok(PgOutcome {
        model,
        trace,
        radius,
    })
}

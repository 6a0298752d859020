//! Frank-Wolfe maximization of the Fenchel dual.
//!
//! The dual variable is an `n × m` matrix `A` whose row `i` is `α_i`. Every
//! row lives in `{<1,β>·e_{y_i} - β : β ∈ B}` for the loss polytope `B`, and
//! on that set the dual takes the rearranged form
//!
//! ```text
//! D(A) = -(λ/2)‖W(A)‖² + (1/n) Σ_i α_i[y_i]          W(A) = (1/(λn)) Σ_i x_i α_iᵀ
//! ```
//!
//! Direction finding decomposes per example: the best vertex for row `i` is
//! `u_i = -∂Φ(s_i; y_i)`, read off the loss polytope's maximizing vertex.
//! The line search along `ΔA = U - A` maximizes a concave quadratic and is
//! solved exactly.
//!
//! With Moreau smoothing (`γ_sm > 0`) the dual gains
//! `-(γ_sm/(2n))‖A‖²_F`, scores become `s̃_i = s_i + γ_sm·α_i`, and the line
//! search curvature gains `γ_sm‖ΔA‖²_F`. The primal reported in that mode is
//! the augmented objective whose Fenchel dual is the smoothed dual, so the
//! gap is a valid certificate without any proximal computation.
//!
//! Per-example work runs on the rayon pool. Reductions (line search sums and
//! the `ΔW` accumulation) run in example order when `deterministic` is set
//! and are bit-reproducible; otherwise they are tree-reduced in parallel and
//! may differ in the last bits between runs.

use std::time::Instant;

use ndarray::{Array2, ArrayView2, Zip};
use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::loss::{LossSpec, Scratch};
use crate::model::{scores_into, Model};
use crate::trace::TraceRecord;

/// Step size rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepRule {
    /// Exact maximization along the segment.
    LineSearch,
    /// The pre-set schedule `γ_t = 2/(t+1)`.
    Schedule,
}

/// Whether the loss is replaced by its Moreau envelope.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Smoothing {
    Off,
    /// Moreau envelope with the given smoothing parameter (may be zero, in
    /// which case the smoothed code path reproduces the plain one).
    Moreau(f64),
}

impl Smoothing {
    /// `Off` for zero, `Moreau(gamma)` otherwise.
    pub fn from_gamma(gamma: f64) -> Self {
        if gamma > 0.0 {
            Smoothing::Moreau(gamma)
        } else {
            Smoothing::Off
        }
    }

    pub fn gamma(self) -> f64 {
        match self {
            Smoothing::Off => 0.0,
            Smoothing::Moreau(g) => g,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub lambda: f64,
    pub smoothing: Smoothing,
    /// Stop once the duality gap is at most this.
    pub epsilon: f64,
    pub max_iters: usize,
    pub step_rule: StepRule,
    /// Iterations between gap evaluations (and trace rows).
    pub gap_stride: usize,
    /// Period of full `W` recomputation from `A`; 0 disables it.
    pub refresh_every: usize,
    pub deterministic: bool,
}

impl SolverConfig {
    pub fn new(lambda: f64) -> Self {
        SolverConfig {
            lambda,
            smoothing: Smoothing::Off,
            epsilon: 1e-5,
            max_iters: 10_000,
            step_rule: StepRule::LineSearch,
            gap_stride: 1,
            refresh_every: 100,
            deterministic: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        let gamma = self.smoothing.gamma();
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "gamma_sm must be non-negative, got {gamma}"
            )));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.gap_stride == 0 {
            return Err(Error::InvalidConfig("gap_stride must be positive".into()));
        }
        Ok(())
    }
}

/// Dual iterate `A` with the incrementally maintained `W(A)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DualState {
    alpha: Array2<f64>,
    weights: Array2<f64>,
    lambda: f64,
    iteration: usize,
}

fn check_compatible(data: &Dataset, spec: &LossSpec) -> Result<()> {
    if data.classes() != spec.classes() {
        return Err(Error::Dimension {
            expected: spec.classes(),
            actual: data.classes(),
        });
    }
    Ok(())
}

/// `(1/(λn)) Σ_i x_i α_iᵀ` summed in example order.
fn weights_from_alpha(alpha: &Array2<f64>, data: &Dataset, lambda: f64) -> Array2<f64> {
    let m = alpha.ncols();
    let mut w = Array2::zeros((data.dim(), m));
    accumulate_outer(&mut w, alpha, data, 1.0 / (lambda * data.len() as f64));
    w
}

/// `out += scale · Σ_i x_i rows[i]ᵀ`, sequentially.
fn accumulate_outer(out: &mut Array2<f64>, rows: &Array2<f64>, data: &Dataset, scale: f64) {
    for (x, row) in data.features().iter().zip(rows.rows()) {
        for (idx, val) in x.iter() {
            let v = scale * val;
            let mut target = out.row_mut(idx);
            for (t, &r) in target.iter_mut().zip(row.iter()) {
                *t += v * r;
            }
        }
    }
}

impl DualState {
    /// `A = 0`, which is feasible for every loss family.
    pub fn zeros(data: &Dataset, classes: usize, lambda: f64) -> Self {
        DualState {
            alpha: Array2::zeros((data.len(), classes)),
            weights: Array2::zeros((data.dim(), classes)),
            lambda,
            iteration: 0,
        }
    }

    /// State with the given `A` (rows are examples) and freshly computed `W`.
    /// Feasibility of `A` is the caller's responsibility.
    pub fn from_alpha(data: &Dataset, alpha: Array2<f64>, lambda: f64) -> Result<Self> {
        if alpha.nrows() != data.len() {
            return Err(Error::Dimension {
                expected: data.len(),
                actual: alpha.nrows(),
            });
        }
        if alpha.ncols() != data.classes() {
            return Err(Error::Dimension {
                expected: data.classes(),
                actual: alpha.ncols(),
            });
        }
        let weights = weights_from_alpha(&alpha, data, lambda);
        Ok(DualState {
            alpha,
            weights,
            lambda,
            iteration: 0,
        })
    }

    pub fn alpha(&self) -> &Array2<f64> {
        &self.alpha
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Number of updates applied so far.
    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn recompute_weights(&self, data: &Dataset) -> Array2<f64> {
        weights_from_alpha(&self.alpha, data, self.lambda)
    }

    pub fn refresh_weights(&mut self, data: &Dataset) {
        self.weights = self.recompute_weights(data);
    }

    /// `‖W_incremental - W_recomputed‖_F / ‖W_recomputed‖_F` (absolute when
    /// the recomputed matrix is zero).
    pub fn weight_drift(&self, data: &Dataset) -> f64 {
        let fresh = self.recompute_weights(data);
        let diff = (&self.weights - &fresh).mapv(|v| v * v).sum().sqrt();
        let norm = fresh.mapv(|v| v * v).sum().sqrt();
        if norm > 0.0 {
            diff / norm
        } else {
            diff
        }
    }

    /// `A += γ ΔA`, `W += γ ΔW`.
    pub fn apply(&mut self, delta: &StepDelta, gamma: f64) {
        Zip::from(&mut self.alpha)
            .and(&delta.delta_alpha)
            .par_for_each(|a, &d| *a += gamma * d);
        Zip::from(&mut self.weights)
            .and(&delta.delta_weights)
            .for_each(|w, &d| *w += gamma * d);
        self.iteration += 1;
    }
}

/// Output of the direction-finding pass over all examples.
#[derive(Clone, Debug, PartialEq)]
pub struct Direction {
    /// Row `i` is the vertex `u_i`.
    pub vertices: Array2<f64>,
    /// Row `i` is `s̃_i` (equal to the raw scores when smoothing is off).
    pub scores: Array2<f64>,
    /// `Φ(s̃_i; y_i)` per example.
    pub losses: Vec<f64>,
}

/// Computes `u_i = <1,β*>·e_{y_i} - β*` with `β*` the maximizing vertex at
/// `s̃_i = Wᵀx_i + γ_sm·α_i`, for every example in parallel.
pub fn direction_find(
    state: &DualState,
    data: &Dataset,
    spec: &LossSpec,
    smoothing: Smoothing,
) -> Direction {
    let shift = match smoothing {
        Smoothing::Off => None,
        Smoothing::Moreau(gamma) => Some((gamma, &state.alpha)),
    };
    example_pass(state.weights.view(), data, spec, shift)
}

/// Scores, losses and negated subgradients of every example at `weights`,
/// with scores optionally shifted by `gamma · alpha[i]`.
pub(crate) fn example_pass(
    weights: ArrayView2<'_, f64>,
    data: &Dataset,
    spec: &LossSpec,
    shift: Option<(f64, &Array2<f64>)>,
) -> Direction {
    let n = data.len();
    let m = spec.classes();
    let mut vertices = Array2::zeros((n, m));
    let mut scores = Array2::zeros((n, m));
    let mut losses = vec![0.0; n];

    vertices
        .as_slice_mut()
        .expect("standard layout")
        .par_chunks_mut(m)
        .zip(scores.as_slice_mut().expect("standard layout").par_chunks_mut(m))
        .zip(losses.par_iter_mut())
        .enumerate()
        .for_each_init(Scratch::default, |scratch, (i, ((u, s), loss))| {
            let x = &data.features()[i];
            let y = data.labels()[i];
            scores_into(weights, x, s);
            if let Some((gamma, alpha)) = shift {
                for (sj, &aj) in s.iter_mut().zip(alpha.row(i).iter()) {
                    *sj += gamma * aj;
                }
            }
            let (value, mass) = spec.evaluate_into(s, y, scratch, u);
            for uj in u.iter_mut() {
                *uj = -*uj;
            }
            u[y] += mass;
            *loss = value;
        });

    Direction {
        vertices,
        scores,
        losses,
    }
}

/// `Σ_i x_i rows[i]ᵀ` as a `d0 × m` matrix; in example order when
/// `deterministic`, tree-reduced on the rayon pool otherwise.
pub(crate) fn outer_sum(rows: &Array2<f64>, data: &Dataset, deterministic: bool) -> Array2<f64> {
    let shape = (data.dim(), rows.ncols());
    if deterministic {
        let mut out = Array2::zeros(shape);
        accumulate_outer(&mut out, rows, data, 1.0);
        return out;
    }
    (0..data.len())
        .into_par_iter()
        .fold(
            || Array2::<f64>::zeros(shape),
            |mut acc, i| {
                let row = rows.row(i);
                for (idx, val) in data.features()[i].iter() {
                    let mut target = acc.row_mut(idx);
                    for (t, &r) in target.iter_mut().zip(row.iter()) {
                        *t += val * r;
                    }
                }
                acc
            },
        )
        .reduce(|| Array2::<f64>::zeros(shape), |a, b| a + b)
}

/// Quantities along the segment from `A` towards `U`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepDelta {
    pub delta_alpha: Array2<f64>,
    /// `ΔW = (1/(λn)) Σ_i x_i Δα_iᵀ`.
    pub delta_weights: Array2<f64>,
    /// `Σ_i <Δα_i, e_{y_i} - s̃_i>`.
    pub numerator: f64,
    /// `λn ‖ΔW‖²_F`.
    pub weight_curvature: f64,
    /// `‖ΔA‖²_F`.
    pub delta_alpha_sq: f64,
}

impl StepDelta {
    pub fn new(state: &DualState, direction: &Direction, data: &Dataset, deterministic: bool) -> Self {
        let n = data.len();
        let lambda_n = state.lambda * n as f64;
        let delta_alpha = &direction.vertices - &state.alpha;
        let labels = data.labels();

        let row_terms = |i: usize| -> (f64, f64) {
            let d = delta_alpha.row(i);
            let s = direction.scores.row(i);
            let y = labels[i];
            let mut num = d[y];
            let mut sq = 0.0;
            for (&dj, &sj) in d.iter().zip(s.iter()) {
                num -= dj * sj;
                sq += dj * dj;
            }
            (num, sq)
        };

        let (numerator, delta_alpha_sq) = if deterministic {
            (0..n).map(row_terms).fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d))
        } else {
            (0..n)
                .into_par_iter()
                .map(row_terms)
                .reduce(|| (0.0, 0.0), |(a, b), (c, d)| (a + c, b + d))
        };
        let raw = outer_sum(&delta_alpha, data, deterministic);
        let raw_sq = raw.iter().map(|v| v * v).sum::<f64>();
        let delta_weights = raw / lambda_n;
        StepDelta {
            delta_alpha,
            delta_weights,
            numerator,
            weight_curvature: raw_sq / lambda_n,
            delta_alpha_sq,
        }
    }

    /// The curvature `λn‖ΔW‖² (+ γ_sm‖ΔA‖²)` of `-n·D` along the segment.
    pub fn denominator(&self, smoothing: Smoothing) -> f64 {
        match smoothing {
            Smoothing::Off => self.weight_curvature,
            Smoothing::Moreau(gamma) => self.weight_curvature + gamma * self.delta_alpha_sq,
        }
    }

    /// Maximizer over `[0, 1]` of the dual along the segment.
    pub fn exact_gamma(&self, smoothing: Smoothing) -> f64 {
        let den = self.denominator(smoothing);
        if den > 0.0 {
            (self.numerator / den).clamp(0.0, 1.0)
        } else if self.numerator > 0.0 {
            // Flat curvature with ascent: the dual is linear along the segment.
            1.0
        } else {
            0.0
        }
    }
}

/// Closed-form line search step `γ ∈ [0, 1]` from `state` towards `direction`.
pub fn line_search_gamma(
    state: &DualState,
    direction: &Direction,
    data: &Dataset,
    smoothing: Smoothing,
) -> f64 {
    StepDelta::new(state, direction, data, true).exact_gamma(smoothing)
}

fn frobenius_sq(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum()
}

/// Dual objective (smoothed when `smoothing` is on). Valid on the feasible
/// set only.
pub fn dual_value(state: &DualState, data: &Dataset, smoothing: Smoothing) -> f64 {
    let n = data.len() as f64;
    let linear: f64 = data
        .labels()
        .iter()
        .enumerate()
        .map(|(i, &y)| state.alpha[[i, y]])
        .sum();
    let d = -0.5 * state.lambda * frobenius_sq(&state.weights) + linear / n;
    match smoothing {
        Smoothing::Off => d,
        Smoothing::Moreau(gamma) => d - gamma / (2.0 * n) * frobenius_sq(&state.alpha),
    }
}

/// Primal objective at `W(A)` from losses already computed by
/// [`direction_find`] on the same state. With smoothing on this is the
/// augmented primal `(λ/2)‖W‖² + (γ_sm/(2n))‖A‖² + (1/n) Σ Φ(s̃_i; y_i)`.
pub fn primal_from_direction(state: &DualState, direction: &Direction, smoothing: Smoothing) -> f64 {
    let n = direction.losses.len() as f64;
    let risk: f64 = direction.losses.iter().sum::<f64>() / n;
    let p = 0.5 * state.lambda * frobenius_sq(&state.weights) + risk;
    match smoothing {
        Smoothing::Off => p,
        Smoothing::Moreau(gamma) => p + gamma / (2.0 * n) * frobenius_sq(&state.alpha),
    }
}

/// Primal objective at `W(A)`, computing the scores from scratch.
pub fn primal_value(state: &DualState, data: &Dataset, spec: &LossSpec, smoothing: Smoothing) -> f64 {
    let direction = direction_find(state, data, spec, smoothing);
    primal_from_direction(state, &direction, smoothing)
}

/// Primal, dual and gap at one iterate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

/// Stateful driver that shares the per-example scores between gap
/// evaluation and the next direction-finding step.
#[derive(Debug)]
pub struct FrankWolfe<'a> {
    data: &'a Dataset,
    spec: &'a LossSpec,
    config: SolverConfig,
    state: DualState,
    direction: Option<Direction>,
    started: Instant,
}

impl<'a> FrankWolfe<'a> {
    pub fn new(data: &'a Dataset, spec: &'a LossSpec, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        check_compatible(data, spec)?;
        Ok(FrankWolfe {
            data,
            spec,
            config,
            state: DualState::zeros(data, spec.classes(), config.lambda),
            direction: None,
            started: Instant::now(),
        })
    }

    pub fn state(&self) -> &DualState {
        &self.state
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn iteration(&self) -> usize {
        self.state.iteration
    }

    fn direction(&mut self) -> &Direction {
        if self.direction.is_none() {
            self.direction = Some(direction_find(
                &self.state,
                self.data,
                self.spec,
                self.config.smoothing,
            ));
        }
        self.direction.as_ref().expect("just computed")
    }

    pub fn evaluate(&mut self) -> Evaluation {
        let smoothing = self.config.smoothing;
        self.direction();
        let direction = self.direction.as_ref().expect("computed above");
        let primal = primal_from_direction(&self.state, direction, smoothing);
        let dual = dual_value(&self.state, self.data, smoothing);
        Evaluation {
            primal,
            dual,
            gap: primal - dual,
        }
    }

    pub fn record(&mut self) -> TraceRecord {
        let eval = self.evaluate();
        TraceRecord {
            iteration: self.state.iteration,
            elapsed_sec: self.started.elapsed().as_secs_f64(),
            primal: eval.primal,
            dual: eval.dual,
            gap: eval.gap,
        }
    }

    /// One Frank-Wolfe iteration. Returns the step size taken.
    pub fn step(&mut self) -> f64 {
        self.direction();
        let direction = self.direction.take().expect("computed above");
        let delta = StepDelta::new(&self.state, &direction, self.data, self.config.deterministic);
        let gamma = match self.config.step_rule {
            StepRule::LineSearch => delta.exact_gamma(self.config.smoothing),
            StepRule::Schedule => 2.0 / (self.state.iteration as f64 + 2.0),
        };
        self.state.apply(&delta, gamma);
        let refresh = self.config.refresh_every;
        if refresh > 0 && self.state.iteration.is_multiple_of(refresh) {
            self.state.refresh_weights(self.data);
        }
        gamma
    }

    pub fn into_state(self) -> DualState {
        self.state
    }

    pub fn model(&self) -> Result<Model> {
        Model::new(
            self.state.weights.clone(),
            self.data.label_names().to_vec(),
            self.spec.clone(),
            self.config.lambda,
            self.config.smoothing.gamma(),
        )
    }
}

/// Result of [`train`].
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: Model,
    pub trace: Vec<TraceRecord>,
    /// Whether the gap reached `epsilon`.
    pub converged: bool,
    pub iterations: usize,
    /// Gap at the last evaluation.
    pub final_gap: f64,
    pub state: DualState,
}

/// Runs Frank-Wolfe from `A = 0` until the gap is at most `epsilon` or
/// `max_iters` updates have been made. The gap is checked (and a trace row
/// emitted) every `gap_stride` updates and after the last one.
pub fn train(data: &Dataset, spec: &LossSpec, config: &SolverConfig) -> Result<TrainOutcome> {
    let mut solver = FrankWolfe::new(data, spec, *config)?;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut final_gap = f64::INFINITY;
    loop {
        let t = solver.iteration();
        if t % config.gap_stride == 0 || t >= config.max_iters {
            let record = solver.record();
            final_gap = record.gap;
            trace.push(record);
            if record.gap <= config.epsilon {
                converged = true;
                break;
            }
        }
        if t >= config.max_iters {
            break;
        }
        solver.step();
    }
    let model = solver.model()?;
    Ok(TrainOutcome {
        model,
        trace,
        converged,
        iterations: solver.iteration(),
        final_gap,
        state: solver.into_state(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SparseVector;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    /// n = 1, d0 = 1, m = 2, x = 1, y = class 0.
    fn micro() -> (Dataset, LossSpec) {
        let x = SparseVector::new(vec![0], vec![1.0], 1).unwrap();
        let data = Dataset::new(vec![x], vec![0], 1, vec!["1".into(), "2".into()]).unwrap();
        (data, LossSpec::max_hinge(2).unwrap())
    }

    #[test]
    fn micro_direction() {
        let (data, spec) = micro();
        let state = DualState::zeros(&data, 2, 1.0);
        let dir = direction_find(&state, &data, &spec, Smoothing::Off);
        assert_eq!(dir.vertices, array![[1.0, -1.0]]);
        assert_eq!(dir.scores, array![[0.0, 0.0]]);
        assert_eq!(dir.losses, vec![1.0]);
        let smoothed = direction_find(&state, &data, &spec, Smoothing::Moreau(0.7));
        assert_eq!(smoothed.vertices, dir.vertices);
    }

    #[test]
    fn micro_line_search() {
        let (data, spec) = micro();
        let state = DualState::zeros(&data, 2, 1.0);
        let dir = direction_find(&state, &data, &spec, Smoothing::Off);
        let delta = StepDelta::new(&state, &dir, &data, true);
        assert_eq!(delta.numerator, 1.0);
        assert_eq!(delta.weight_curvature, 2.0);
        assert_eq!(line_search_gamma(&state, &dir, &data, Smoothing::Off), 0.5);
        assert_eq!(line_search_gamma(&state, &dir, &data, Smoothing::Moreau(1.0)), 0.25);
    }

    #[test]
    fn micro_one_step_reaches_optimum() {
        let (data, spec) = micro();
        let config = SolverConfig {
            lambda: 1.0,
            epsilon: 1e-9,
            ..SolverConfig::new(1.0)
        };
        let out = train(&data, &spec, &config).unwrap();
        assert!(out.converged);
        assert_eq!(out.iterations, 1);
        assert_eq!(out.state.alpha(), &array![[0.5, -0.5]]);
        assert_eq!(out.model.weights(), &array![[0.5, -0.5]]);
        let last = out.trace.last().unwrap();
        assert_abs_diff_eq!(last.dual, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(last.primal, 0.25, epsilon = 1e-15);
        assert!(last.gap.abs() <= 1e-15);
        assert_eq!(out.trace[0].primal, 1.0);
        assert_eq!(out.trace[0].dual, 0.0);
    }

    #[test]
    fn zero_direction_gives_zero_step() {
        let (data, spec) = micro();
        let mut state = DualState::zeros(&data, 2, 1.0);
        let dir = direction_find(&state, &data, &spec, Smoothing::Off);
        state = DualState::from_alpha(&data, dir.vertices.clone(), 1.0).unwrap();
        let same = Direction {
            vertices: state.alpha().clone(),
            ..direction_find(&state, &data, &spec, Smoothing::Off)
        };
        assert_eq!(line_search_gamma(&state, &same, &data, Smoothing::Off), 0.0);
        assert_eq!(line_search_gamma(&state, &same, &data, Smoothing::Moreau(1.0)), 0.0);
    }

    #[test]
    fn schedule_first_step_is_full() {
        let (data, spec) = micro();
        let config = SolverConfig {
            step_rule: StepRule::Schedule,
            ..SolverConfig::new(1.0)
        };
        let mut fw = FrankWolfe::new(&data, &spec, config).unwrap();
        assert_eq!(fw.step(), 1.0);
        assert_abs_diff_eq!(fw.step(), 2.0 / 3.0);
    }

    #[test]
    fn dual_and_primal_at_zero() {
        let (data, spec) = micro();
        let state = DualState::zeros(&data, 2, 1.0);
        assert_eq!(dual_value(&state, &data, Smoothing::Off), 0.0);
        assert_eq!(primal_value(&state, &data, &spec, Smoothing::Off), 1.0);
        assert_eq!(primal_value(&state, &data, &spec, Smoothing::Moreau(0.5)), 1.0);
    }

    #[test]
    fn moreau_dual_identity() {
        let (data, _) = micro();
        let state = DualState::from_alpha(&data, array![[0.3, -0.3]], 1.0).unwrap();
        let plain = dual_value(&state, &data, Smoothing::Off);
        let smooth = dual_value(&state, &data, Smoothing::Moreau(0.4));
        assert_abs_diff_eq!(smooth, plain - 0.4 / 2.0 * 0.18, epsilon = 1e-15);
    }

    #[test]
    fn large_epsilon_stops_at_first_check() {
        let (data, spec) = micro();
        let config = SolverConfig {
            epsilon: 1e9,
            ..SolverConfig::new(1.0)
        };
        let out = train(&data, &spec, &config).unwrap();
        assert!(out.converged);
        assert_eq!(out.iterations, 0);
        assert_eq!(out.trace.len(), 1);
    }

    #[test]
    fn max_iters_exhaustion_is_reported() {
        let (data, spec) = micro();
        let config = SolverConfig {
            step_rule: StepRule::Schedule,
            max_iters: 3,
            epsilon: 1e-12,
            ..SolverConfig::new(1.0)
        };
        let out = train(&data, &spec, &config).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 3);
        assert_eq!(out.trace.len(), 4);
    }

    #[test]
    fn gap_stride_thins_the_trace() {
        let (data, spec) = micro();
        let config = SolverConfig {
            step_rule: StepRule::Schedule,
            max_iters: 10,
            epsilon: 1e-12,
            gap_stride: 4,
            ..SolverConfig::new(1.0)
        };
        let out = train(&data, &spec, &config).unwrap();
        let iters: Vec<usize> = out.trace.iter().map(|r| r.iteration).collect();
        assert_eq!(iters, vec![0, 4, 8, 10]);
    }

    #[test]
    fn config_validation() {
        let (data, spec) = micro();
        let bad = [
            SolverConfig::new(0.0),
            SolverConfig { epsilon: 0.0, ..SolverConfig::new(1.0) },
            SolverConfig { gap_stride: 0, ..SolverConfig::new(1.0) },
            SolverConfig { smoothing: Smoothing::Moreau(-1.0), ..SolverConfig::new(1.0) },
        ];
        for config in bad {
            assert!(FrankWolfe::new(&data, &spec, config).is_err());
        }
        let wrong = LossSpec::max_hinge(3).unwrap();
        assert!(FrankWolfe::new(&data, &wrong, SolverConfig::new(1.0)).is_err());
    }
}

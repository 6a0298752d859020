//! Brute-force reference computations for tests.
//!
//! These are deliberately naive: vertex lists are enumerated explicitly,
//! gradients come from central differences, and line searches from direct
//! dual evaluation on a grid.

use ndarray::Array2;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::loss::{LossFamily, LossSpec};
use crate::solver::{dual_value, DualState, Smoothing};

/// Largest class count accepted by [`simplex_vertices`].
pub const MAX_ENUM_CLASSES: usize = 8;

/// Vertices of the loss polytope of an unweighted family: the origin plus
/// `(1/k)·1_S` for every admissible subset `S` (`|S| = 1` for max hinge,
/// `|S| = k` for top-k, `1 ≤ |S| ≤ k` for Usunier).
pub fn simplex_vertices(family: LossFamily, m: usize, k: usize) -> Result<Vec<Vec<f64>>> {
    if family.is_weighted() {
        return Err(Error::InvalidLoss(format!(
            "vertex enumeration does not cover the weighted family `{family}`"
        )));
    }
    if m == 0 || m > MAX_ENUM_CLASSES {
        return Err(Error::InvalidLoss(format!(
            "vertex enumeration needs 1 <= m <= {MAX_ENUM_CLASSES}, got {m}"
        )));
    }
    let k = if family == LossFamily::MaxHinge { 1 } else { k };
    if k == 0 || k > m {
        return Err(Error::InvalidLoss(format!("k must lie in 1..={m}, got {k}")));
    }
    let admissible = |size: usize| match family {
        LossFamily::MaxHinge => size == 1,
        LossFamily::UnweightedTopK => size == k,
        _ => (1..=k).contains(&size),
    };
    let mut vertices = vec![vec![0.0; m]];
    for mask in 1u32..(1 << m) {
        let size = mask.count_ones() as usize;
        if !admissible(size) {
            continue;
        }
        let v = (0..m)
            .map(|j| if mask & (1 << j) != 0 { 1.0 / k as f64 } else { 0.0 })
            .collect();
        vertices.push(v);
    }
    Ok(vertices)
}

/// `max_β <β, c>` over an explicit vertex list, with the first maximizer.
pub fn bruteforce_maxdot(vertices: &[Vec<f64>], c: &[f64]) -> Result<(f64, Vec<f64>)> {
    let mut best: Option<(f64, &Vec<f64>)> = None;
    for v in vertices {
        if v.len() != c.len() {
            return Err(Error::Dimension {
                expected: c.len(),
                actual: v.len(),
            });
        }
        let value: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
        if best.is_none_or(|(b, _)| value > b) {
            best = Some((value, v));
        }
    }
    best.map(|(value, v)| (value, v.clone()))
        .ok_or_else(|| Error::InvalidLoss("empty vertex list".into()))
}

/// Whether the subgradient is constant on the box of half-width `2h`
/// around `s` along every axis, i.e. `s` is safely away from sorting ties
/// and hinge kinks.
pub fn is_generic_point(spec: &LossSpec, s: &[f64], y: usize, h: f64) -> Result<bool> {
    let g = spec.subgradient(s, y)?;
    let mut probe = s.to_vec();
    for j in 0..s.len() {
        for sign in [-2.0, 2.0] {
            probe[j] = s[j] + sign * h;
            if spec.subgradient(&probe, y)? != g {
                return Ok(false);
            }
        }
        probe[j] = s[j];
    }
    Ok(true)
}

/// Central-difference gradient of the loss at `s` with step `h`.
pub fn finite_diff_gradient(spec: &LossSpec, s: &[f64], y: usize, h: f64) -> Result<Vec<f64>> {
    let mut probe = s.to_vec();
    let mut grad = Vec::with_capacity(s.len());
    for j in 0..s.len() {
        probe[j] = s[j] + h;
        let up = spec.loss(&probe, y)?;
        probe[j] = s[j] - h;
        let down = spec.loss(&probe, y)?;
        probe[j] = s[j];
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

/// Whether the central-difference gradient matches
/// [`LossSpec::subgradient`] within `1e-4` in every component. Meaningful
/// only at generic points (see [`is_generic_point`]).
pub fn finite_diff_subgradient_check(spec: &LossSpec, s: &[f64], y: usize, h: f64) -> Result<bool> {
    let numeric = finite_diff_gradient(spec, s, y, h)?;
    let analytic = spec.subgradient(s, y)?;
    Ok(numeric
        .iter()
        .zip(&analytic)
        .all(|(a, b)| (a - b).abs() <= 1e-4))
}

/// Best `γ` among `grid` evenly spaced points of `[0, 1]` for the dual along
/// `A + γ(U - A)`, by direct evaluation. Returns `(γ, dual)`; ties keep the
/// smallest `γ`.
pub fn grid_line_search_oracle(
    state: &DualState,
    target: &Array2<f64>,
    data: &Dataset,
    smoothing: Smoothing,
    grid: usize,
) -> Result<(f64, f64)> {
    if grid < 2 {
        return Err(Error::InvalidConfig(format!("grid needs at least 2 points, got {grid}")));
    }
    let delta = target - state.alpha();
    let mut best = (0.0, f64::NEG_INFINITY);
    for i in 0..grid {
        let gamma = i as f64 / (grid - 1) as f64;
        let alpha = state.alpha() + &(&delta * gamma);
        let value = dual_value(&DualState::from_alpha(data, alpha, state.lambda())?, data, smoothing);
        if value > best.1 {
            best = (gamma, value);
        }
    }
    Ok(best)
}

//! Max-dot-over-simplex loss functions.
//!
//! Every loss here can be written as `max_{β ∈ B} <β, c>` where
//! `c = 1 - e_y + s - s_y·1` is the margin vector of a score vector `s`
//! and true label `y`, and `B` is a fixed polytope containing the origin.
//! Besides the loss value, each family exposes its maximizing vertex `β*`,
//! from which a subgradient `β* - <1, β*>·e_y` follows directly.
//!
//! Sorting is by descending margin with ties broken by ascending index, so
//! every result is a deterministic function of its inputs.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Member of the loss family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LossFamily {
    MaxHinge,
    UnweightedTopK,
    UnweightedUsunier,
    WeightedTopK,
    WeightedUsunier,
}

impl LossFamily {
    pub const ALL: [LossFamily; 5] = [
        LossFamily::MaxHinge,
        LossFamily::UnweightedTopK,
        LossFamily::UnweightedUsunier,
        LossFamily::WeightedTopK,
        LossFamily::WeightedUsunier,
    ];

    /// Short name used on the command line and in model files.
    pub fn code(self) -> &'static str {
        match self {
            LossFamily::MaxHinge => "mh",
            LossFamily::UnweightedTopK => "utk",
            LossFamily::UnweightedUsunier => "uu",
            LossFamily::WeightedTopK => "wtk",
            LossFamily::WeightedUsunier => "wu",
        }
    }

    pub fn is_weighted(self) -> bool {
        matches!(self, LossFamily::WeightedTopK | LossFamily::WeightedUsunier)
    }

    pub fn needs_k(self) -> bool {
        matches!(self, LossFamily::UnweightedTopK | LossFamily::UnweightedUsunier)
    }
}

impl fmt::Display for LossFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for LossFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LossFamily::ALL
            .into_iter()
            .find(|family| family.code() == s)
            .ok_or_else(|| Error::InvalidLoss(format!("unknown loss family `{s}`")))
    }
}

/// One entry of the level structure of a weight vector: a position `k`
/// where the weights strictly drop, together with the weight `ρ_k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Level {
    pub k: usize,
    pub weight: f64,
}

/// A validated loss function over `classes` categories.
#[derive(Clone, Debug, PartialEq)]
pub struct LossSpec {
    family: LossFamily,
    classes: usize,
    k: Option<usize>,
    rho: Option<Vec<f64>>,
    levels: Vec<Level>,
}

/// Weights `ρ_j = max(0, 6 - j) / 15` truncated to `m` entries, with the
/// last entry forced to zero.
pub fn default_weights(classes: usize) -> Vec<f64> {
    let mut rho: Vec<f64> = (1..=classes)
        .map(|j| (6.0 - j as f64).max(0.0) / 15.0)
        .collect();
    if let Some(last) = rho.last_mut() {
        *last = 0.0;
    }
    rho
}

fn check_classes(classes: usize) -> Result<()> {
    if classes < 2 {
        return Err(Error::InvalidLoss(format!(
            "at least two classes are required, got {classes}"
        )));
    }
    Ok(())
}

/// Positions where the weights strictly drop, with `ρ_{m+1} := 0`.
fn levels_of(rho: &[f64]) -> Vec<Level> {
    (0..rho.len())
        .filter(|&j| {
            let next = rho.get(j + 1).copied().unwrap_or(0.0);
            rho[j] > next
        })
        .map(|j| Level {
            k: j + 1,
            weight: rho[j],
        })
        .collect()
}

impl LossSpec {
    pub fn max_hinge(classes: usize) -> Result<Self> {
        check_classes(classes)?;
        Ok(Self::unweighted(LossFamily::MaxHinge, classes, None))
    }

    pub fn top_k(classes: usize, k: usize) -> Result<Self> {
        Self::with_k(LossFamily::UnweightedTopK, classes, k)
    }

    pub fn usunier(classes: usize, k: usize) -> Result<Self> {
        Self::with_k(LossFamily::UnweightedUsunier, classes, k)
    }

    pub fn weighted_top_k(rho: Vec<f64>) -> Result<Self> {
        Self::with_rho(LossFamily::WeightedTopK, rho)
    }

    pub fn weighted_usunier(rho: Vec<f64>) -> Result<Self> {
        Self::with_rho(LossFamily::WeightedUsunier, rho)
    }

    /// Builds any family from its parts; `k` is read by the unweighted
    /// top-k families and `rho` by the weighted ones.
    pub fn new(
        family: LossFamily,
        classes: usize,
        k: Option<usize>,
        rho: Option<Vec<f64>>,
    ) -> Result<Self> {
        match family {
            LossFamily::MaxHinge => Self::max_hinge(classes),
            LossFamily::UnweightedTopK | LossFamily::UnweightedUsunier => {
                let k = k.ok_or_else(|| {
                    Error::InvalidLoss(format!("loss `{family}` requires k"))
                })?;
                Self::with_k(family, classes, k)
            }
            LossFamily::WeightedTopK | LossFamily::WeightedUsunier => {
                let rho = rho.ok_or_else(|| {
                    Error::InvalidLoss(format!("loss `{family}` requires a weight vector"))
                })?;
                if rho.len() != classes {
                    return Err(Error::InvalidLoss(format!(
                        "weight vector has {} entries for {classes} classes",
                        rho.len()
                    )));
                }
                Self::with_rho(family, rho)
            }
        }
    }

    fn with_k(family: LossFamily, classes: usize, k: usize) -> Result<Self> {
        check_classes(classes)?;
        if k == 0 || k > classes {
            return Err(Error::InvalidLoss(format!(
                "k = {k} must lie in 1..={classes}"
            )));
        }
        Ok(Self::unweighted(family, classes, Some(k)))
    }

    fn unweighted(family: LossFamily, classes: usize, k: Option<usize>) -> Self {
        let kk = k.unwrap_or(1);
        let rho: Vec<f64> = (0..classes)
            .map(|j| if j < kk { 1.0 / kk as f64 } else { 0.0 })
            .collect();
        LossSpec {
            family,
            classes,
            k,
            rho: None,
            levels: levels_of(&rho),
        }
    }

    fn with_rho(family: LossFamily, rho: Vec<f64>) -> Result<Self> {
        let classes = rho.len();
        check_classes(classes)?;
        if let Some(bad) = rho.iter().find(|r| !r.is_finite() || **r < 0.0) {
            return Err(Error::InvalidLoss(format!(
                "weights must be finite and non-negative, found {bad}"
            )));
        }
        if rho.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidLoss("weights must be non-increasing".into()));
        }
        if rho[classes - 1] != 0.0 {
            return Err(Error::InvalidLoss("the last weight must be zero".into()));
        }
        if rho[0] <= 0.0 {
            return Err(Error::InvalidLoss("the first weight must be positive".into()));
        }
        let levels = levels_of(&rho);
        Ok(LossSpec {
            family,
            classes,
            k: None,
            rho: Some(rho),
            levels,
        })
    }

    pub fn family(&self) -> LossFamily {
        self.family
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn k(&self) -> Option<usize> {
        self.k
    }

    pub fn rho(&self) -> Option<&[f64]> {
        self.rho.as_deref()
    }

    /// Drop positions `k_1 < … < k_L` with weights `ρ'_ℓ = ρ_{k_ℓ}`. For
    /// the unweighted families these are taken from the equivalent weight
    /// vector (`e_1` for max hinge, `1/k` on the first `k` for top-k).
    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    /// Number of leading sorted positions that can carry weight.
    fn prefix_len(&self) -> usize {
        match self.family {
            LossFamily::MaxHinge => 1,
            LossFamily::UnweightedTopK | LossFamily::UnweightedUsunier => {
                self.k.unwrap_or(1)
            }
            LossFamily::WeightedTopK | LossFamily::WeightedUsunier => {
                self.levels.last().map_or(1, |level| level.k)
            }
        }
    }

    fn check_input(&self, s: &[f64], y: usize) -> Result<()> {
        if s.len() != self.classes {
            return Err(Error::Dimension {
                expected: self.classes,
                actual: s.len(),
            });
        }
        if y >= self.classes {
            return Err(Error::LabelOutOfRange {
                label: y,
                classes: self.classes,
            });
        }
        Ok(())
    }

    /// The margin vector `c = 1 - e_y + s - s_y·1`, with `c_y = 0` exactly.
    pub fn margin_vector(&self, s: &[f64], y: usize) -> Result<MarginVector> {
        self.check_input(s, y)?;
        let mut c = vec![0.0; s.len()];
        fill_margins(s, y, &mut c);
        Ok(MarginVector { c, y })
    }

    /// Loss value from the closed-form definition of the family.
    pub fn loss(&self, s: &[f64], y: usize) -> Result<f64> {
        let margins = self.margin_vector(s, y)?;
        let mut order = Vec::with_capacity(self.classes);
        Ok(self.loss_from_margins(&margins.c, &mut order))
    }

    /// A maximizer of `<β, c>` over the family's polytope. When the maximum
    /// is zero the origin is returned.
    pub fn beta_argmax(&self, margins: &MarginVector) -> Result<BetaVertex> {
        if margins.c.len() != self.classes {
            return Err(Error::Dimension {
                expected: self.classes,
                actual: margins.c.len(),
            });
        }
        if margins.y >= self.classes {
            return Err(Error::LabelOutOfRange {
                label: margins.y,
                classes: self.classes,
            });
        }
        let mut order = Vec::with_capacity(self.classes);
        let mut beta = vec![0.0; self.classes];
        let mass = self.beta_from_margins(&margins.c, &mut order, &mut beta);
        Ok(BetaVertex { beta, mass })
    }

    /// The subgradient `β* - <1, β*>·e_y` of the loss at `s`.
    pub fn subgradient(&self, s: &[f64], y: usize) -> Result<Vec<f64>> {
        let margins = self.margin_vector(s, y)?;
        let BetaVertex { mut beta, mass } = self.beta_argmax(&margins)?;
        beta[y] -= mass;
        Ok(beta)
    }

    fn loss_from_margins(&self, c: &[f64], order: &mut Vec<usize>) -> f64 {
        if self.family == LossFamily::MaxHinge {
            return argmax(c).1;
        }
        let len = self.prefix_len();
        sort_prefix(c, order, len);
        self.loss_sorted(c, &order[..len])
    }

    /// Writes `β*` into `beta` (which must be zeroed) and returns its mass.
    fn beta_from_margins(&self, c: &[f64], order: &mut Vec<usize>, beta: &mut [f64]) -> f64 {
        if self.family == LossFamily::MaxHinge {
            return max_hinge_beta(c, beta).1;
        }
        let len = self.prefix_len();
        sort_prefix(c, order, len);
        self.beta_sorted(c, &order[..len], beta)
    }

    /// Loss from the indices of the largest margins, in sorted order.
    fn loss_sorted(&self, c: &[f64], top: &[usize]) -> f64 {
        match self.family {
            LossFamily::MaxHinge => c[top[0]],
            LossFamily::UnweightedTopK => {
                let sum: f64 = top.iter().map(|&j| c[j]).sum();
                (sum / top.len() as f64).max(0.0)
            }
            LossFamily::UnweightedUsunier => {
                let sum: f64 = top.iter().map(|&j| c[j].max(0.0)).sum();
                sum / top.len() as f64
            }
            LossFamily::WeightedTopK => {
                let rho = self.rho.as_deref().unwrap_or_default();
                let sum: f64 = top.iter().zip(rho).map(|(&j, &r)| r * c[j]).sum();
                sum.max(0.0)
            }
            LossFamily::WeightedUsunier => {
                let rho = self.rho.as_deref().unwrap_or_default();
                top.iter().zip(rho).map(|(&j, &r)| r * c[j].max(0.0)).sum()
            }
        }
    }

    fn beta_sorted(&self, c: &[f64], top: &[usize], beta: &mut [f64]) -> f64 {
        let inv_k = 1.0 / top.len() as f64;
        let mut mass = 0.0;
        match self.family {
            LossFamily::MaxHinge => {
                if c[top[0]] > 0.0 {
                    beta[top[0]] = 1.0;
                    mass = 1.0;
                }
            }
            LossFamily::UnweightedTopK => {
                let sum: f64 = top.iter().map(|&j| c[j]).sum();
                if sum > 0.0 {
                    for &j in top {
                        beta[j] = inv_k;
                        mass += inv_k;
                    }
                }
            }
            LossFamily::UnweightedUsunier => {
                for &j in top.iter().filter(|&&j| c[j] > 0.0) {
                    beta[j] = inv_k;
                    mass += inv_k;
                }
            }
            LossFamily::WeightedTopK => {
                let rho = self.rho.as_deref().unwrap_or_default();
                let sum: f64 = top.iter().zip(rho).map(|(&j, &r)| r * c[j]).sum();
                if sum > 0.0 {
                    for (&j, &r) in top.iter().zip(rho) {
                        beta[j] = r;
                        mass += r;
                    }
                }
            }
            LossFamily::WeightedUsunier => {
                let rho = self.rho.as_deref().unwrap_or_default();
                for (&j, &r) in top.iter().zip(rho) {
                    if c[j] > 0.0 {
                        beta[j] = r;
                        mass += r;
                    }
                }
            }
        }
        mass
    }

    /// Solver fast path: loss value and `β*` for one example using caller
    /// owned scratch space. `beta` is overwritten. Returns `(loss, mass)`.
    pub(crate) fn evaluate_into(
        &self,
        s: &[f64],
        y: usize,
        scratch: &mut Scratch,
        beta: &mut [f64],
    ) -> (f64, f64) {
        let Scratch { margins, order } = scratch;
        margins.resize(s.len(), 0.0);
        fill_margins(s, y, margins);
        beta.fill(0.0);
        if self.family == LossFamily::MaxHinge {
            return max_hinge_beta(margins, beta);
        }
        let len = self.prefix_len();
        sort_prefix(margins, order, len);
        let top = &order[..len];
        (self.loss_sorted(margins, top), self.beta_sorted(margins, top, beta))
    }
}

/// Max-hinge vertex: `e_j*` on the first maximal margin when it is positive.
fn max_hinge_beta(c: &[f64], beta: &mut [f64]) -> (f64, f64) {
    let (best, value) = argmax(c);
    if value > 0.0 {
        beta[best] = 1.0;
        (value, 1.0)
    } else {
        (value, 0.0)
    }
}

/// Reusable buffers for [`LossSpec::evaluate_into`].
#[derive(Debug, Default, Clone)]
pub(crate) struct Scratch {
    margins: Vec<f64>,
    order: Vec<usize>,
}

fn fill_margins(s: &[f64], y: usize, c: &mut [f64]) {
    let sy = s[y];
    for (j, (cj, &sj)) in c.iter_mut().zip(s).enumerate() {
        *cj = if j == y { 0.0 } else { 1.0 + sj - sy };
    }
}

/// First index of the maximum entry.
fn argmax(c: &[f64]) -> (usize, f64) {
    let mut best = 0;
    for j in 1..c.len() {
        if c[j] > c[best] {
            best = j;
        }
    }
    (best, c[best])
}

fn descending(c: &[f64], a: usize, b: usize) -> Ordering {
    c[b].total_cmp(&c[a]).then(a.cmp(&b))
}

/// Leaves the indices of the `len` largest entries of `c`, sorted by
/// descending value then ascending index, in `order[..len]`.
fn sort_prefix(c: &[f64], order: &mut Vec<usize>, len: usize) {
    order.clear();
    order.extend(0..c.len());
    if len < c.len() {
        order.select_nth_unstable_by(len - 1, |&a, &b| descending(c, a, b));
        order[..len].sort_unstable_by(|&a, &b| descending(c, a, b));
    } else {
        order.sort_unstable_by(|&a, &b| descending(c, a, b));
    }
}

/// Margin vector `1 - e_y + s - s_y·1` of one example.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginVector {
    pub c: Vec<f64>,
    pub y: usize,
}

/// A maximizing vertex `β*` and its total mass `<1, β*>`.
#[derive(Clone, Debug, PartialEq)]
pub struct BetaVertex {
    pub beta: Vec<f64>,
    pub mass: f64,
}

impl BetaVertex {
    pub fn dot(&self, c: &[f64]) -> f64 {
        self.beta.iter().zip(c).map(|(b, c)| b * c).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn third() -> f64 {
        1.0 / 3.0
    }

    #[test]
    fn margin_vector_examples() {
        let mh = LossSpec::max_hinge(3).unwrap();
        assert_eq!(mh.margin_vector(&[0.0, 3.0, 2.0], 0).unwrap().c, vec![0.0, 4.0, 3.0]);
        assert_eq!(mh.margin_vector(&[0.0, 0.0, 0.0], 1).unwrap().c, vec![1.0, 0.0, 1.0]);
        let mh2 = LossSpec::max_hinge(2).unwrap();
        assert_eq!(mh2.margin_vector(&[5.0, 5.0], 0).unwrap().c, vec![0.0, 1.0]);
    }

    #[test]
    fn margin_vector_rejects_bad_input() {
        let mh = LossSpec::max_hinge(3).unwrap();
        assert!(matches!(mh.margin_vector(&[0.0, 1.0], 0), Err(Error::Dimension { .. })));
        assert!(matches!(
            mh.margin_vector(&[0.0, 1.0, 2.0], 3),
            Err(Error::LabelOutOfRange { .. })
        ));
    }

    #[test]
    fn loss_examples() {
        let s = [0.0, 3.0, 2.0];
        assert_abs_diff_eq!(LossSpec::max_hinge(3).unwrap().loss(&s, 0).unwrap(), 4.0);

        let s2 = [0.0, 3.0, -2.0];
        let utk = LossSpec::top_k(3, 3).unwrap();
        let uu = LossSpec::usunier(3, 3).unwrap();
        assert_abs_diff_eq!(utk.loss(&s2, 0).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(uu.loss(&s2, 0).unwrap(), 4.0 / 3.0, epsilon = 1e-15);

        let wu = LossSpec::weighted_usunier(vec![2.0 * third(), third(), 0.0]).unwrap();
        assert_abs_diff_eq!(wu.loss(&s, 0).unwrap(), 11.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn constant_scores_give_unit_max_hinge() {
        let mh = LossSpec::max_hinge(4).unwrap();
        for y in 0..4 {
            assert_eq!(mh.loss(&[2.5; 4], y).unwrap(), 1.0);
        }
    }

    #[test]
    fn beta_examples() {
        let mh = LossSpec::max_hinge(3).unwrap();
        let c = MarginVector { c: vec![0.0, 4.0, 3.0], y: 0 };
        let b = mh.beta_argmax(&c).unwrap();
        assert_eq!(b.beta, vec![0.0, 1.0, 0.0]);
        assert_eq!(b.mass, 1.0);

        let utk = LossSpec::top_k(3, 2).unwrap();
        let b = utk.beta_argmax(&c).unwrap();
        assert_eq!(b.beta, vec![0.0, 0.5, 0.5]);
        assert_abs_diff_eq!(b.dot(&c.c), 3.5);

        let neg = MarginVector { c: vec![0.0, -1.0, -1.0], y: 0 };
        let rho = default_weights(3);
        let specs = [
            mh,
            utk,
            LossSpec::usunier(3, 2).unwrap(),
            LossSpec::weighted_top_k(rho.clone()).unwrap(),
            LossSpec::weighted_usunier(rho).unwrap(),
        ];
        for spec in &specs {
            let b = spec.beta_argmax(&neg).unwrap();
            assert!(b.beta.iter().all(|&v| v == 0.0), "{:?}", spec.family());
            assert_eq!(b.mass, 0.0);
        }
    }

    #[test]
    fn subgradient_examples() {
        let s = [0.0, 3.0, 2.0];
        let mh = LossSpec::max_hinge(3).unwrap();
        assert_eq!(mh.subgradient(&s, 0).unwrap(), vec![-1.0, 1.0, 0.0]);
        let utk = LossSpec::top_k(3, 2).unwrap();
        assert_eq!(utk.subgradient(&s, 0).unwrap(), vec![-1.0, 0.5, 0.5]);
        assert_eq!(mh.subgradient(&[2.0, 0.0, 0.0], 0).unwrap(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn weight_validation() {
        assert!(LossSpec::weighted_top_k(vec![0.5, 0.6, 0.0]).is_err());
        assert!(LossSpec::weighted_top_k(vec![0.5, 0.2, 0.1]).is_err());
        assert!(LossSpec::weighted_top_k(vec![0.0, 0.0, 0.0]).is_err());
        assert!(LossSpec::weighted_top_k(vec![0.5, -0.1, 0.0]).is_err());
        assert!(LossSpec::weighted_top_k(vec![f64::NAN, 0.0]).is_err());
        assert!(LossSpec::weighted_top_k(vec![2.0, 1.0, 0.0]).is_ok());
        assert!(LossSpec::top_k(3, 0).is_err());
        assert!(LossSpec::top_k(3, 4).is_err());
        assert!(LossSpec::max_hinge(1).is_err());
        assert!(LossSpec::new(LossFamily::UnweightedTopK, 3, None, None).is_err());
    }

    #[test]
    fn default_weights_match_decay() {
        let rho = default_weights(10);
        let expected = [5.0, 4.0, 3.0, 2.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        for (r, e) in rho.iter().zip(expected) {
            assert_abs_diff_eq!(*r, e / 15.0);
        }
        assert_abs_diff_eq!(rho.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        assert_eq!(*default_weights(3).last().unwrap(), 0.0);
    }

    #[test]
    fn levels_follow_drops() {
        let spec = LossSpec::weighted_usunier(default_weights(10)).unwrap();
        let ks: Vec<usize> = spec.levels().iter().map(|l| l.k).collect();
        assert_eq!(ks, vec![1, 2, 3, 4, 5]);
        assert_abs_diff_eq!(spec.levels()[4].weight, 1.0 / 15.0);

        let flat = LossSpec::weighted_top_k(vec![0.25, 0.25, 0.0, 0.0]).unwrap();
        assert_eq!(flat.levels(), &[Level { k: 2, weight: 0.25 }]);

        let utk = LossSpec::top_k(5, 3).unwrap();
        assert_eq!(utk.levels().len(), 1);
        assert_eq!(utk.levels()[0].k, 3);
    }

    #[test]
    fn family_codes_round_trip() {
        for family in LossFamily::ALL {
            assert_eq!(family.code().parse::<LossFamily>().unwrap(), family);
        }
        assert!("xx".parse::<LossFamily>().is_err());
    }

    #[test]
    fn evaluate_into_agrees_with_public_path() {
        let spec = LossSpec::weighted_usunier(default_weights(6)).unwrap();
        let s = [0.3, -1.2, 0.8, 0.1, 0.9, -0.4];
        let mut scratch = Scratch::default();
        let mut beta = vec![7.0; 6];
        let (loss, mass) = spec.evaluate_into(&s, 2, &mut scratch, &mut beta);
        assert_eq!(loss, spec.loss(&s, 2).unwrap());
        let vertex = spec.beta_argmax(&spec.margin_vector(&s, 2).unwrap()).unwrap();
        assert_eq!(beta, vertex.beta);
        assert_eq!(mass, vertex.mass);
    }
}

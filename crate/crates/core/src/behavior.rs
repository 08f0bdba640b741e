//! Driver behavior: repositioning preference, confidence beliefs and the
//! accept / self-direct decision.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

use crate::domain::{DriverId, RegionId};
use crate::error::{Error, Result};

/// Names of the per-region features, in vector order.
pub const FEATURE_NAMES: [&str; 5] = ["search_km", "expected_pickups", "median_trip_km", "hour", "weekday"];

/// Logit weights; the last entry is the intercept.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreferenceModel {
    pub weights: Vec<f64>,
}

impl PreferenceModel {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("preference weights need at least the intercept"));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("preference weights must be finite"));
        }
        Ok(PreferenceModel { weights })
    }

    pub fn zeros(feature_dim: usize) -> Self {
        PreferenceModel { weights: vec![0.0; feature_dim + 1] }
    }

    pub fn feature_dim(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn score(&self, z: &[f64]) -> f64 {
        let k = self.feature_dim();
        self.weights[..k].iter().zip(z).map(|(w, x)| w * x).sum::<f64>() + self.weights[k]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegionFeatures(pub Vec<f64>);

/// z-scores each feature across regions. A feature that is constant across
/// regions maps to 0.
pub fn standardize_features(features: &[RegionFeatures]) -> Vec<RegionFeatures> {
    if features.is_empty() {
        return Vec::new();
    }
    let k = features[0].0.len();
    let n = features.len() as f64;
    let mut out: Vec<RegionFeatures> = features.to_vec();
    for f in 0..k {
        let mean = features.iter().map(|z| z.0[f]).sum::<f64>() / n;
        let var = features.iter().map(|z| (z.0[f] - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        for z in &mut out {
            z.0[f] = if sd > 1e-12 { (z.0[f] - mean) / sd } else { 0.0 };
        }
    }
    out
}

fn log_sigmoid(s: f64) -> f64 {
    // -ln(1 + e^-s), stable for both signs
    if s >= 0.0 {
        -(-s).exp().ln_1p()
    } else {
        s - s.exp().ln_1p()
    }
}

fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// Normalized sigmoid scores, one entry per region.
pub fn preference_distribution(model: &PreferenceModel, features: &[RegionFeatures]) -> Result<Vec<f64>> {
    if features.is_empty() {
        return Err(Error::invalid("preference distribution over zero regions"));
    }
    for (j, z) in features.iter().enumerate() {
        if z.0.len() != model.feature_dim() {
            return Err(Error::invalid(format!(
                "region {j} has {} features, model expects {}",
                z.0.len(),
                model.feature_dim()
            )));
        }
    }
    let logs: Vec<f64> = features.iter().map(|z| log_sigmoid(model.score(&z.0))).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// One observed repositioning choice with the features of every region at
/// decision time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChoiceRecord {
    pub chosen: RegionId,
    pub features: Vec<RegionFeatures>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PreferenceFit {
    pub model: PreferenceModel,
    /// Set when the history carries no feature variation at all.
    pub degenerate: bool,
    pub iterations: usize,
    pub log_likelihood: f64,
}

const FIT_L2: f64 = 1e-4;
const FIT_ITERATIONS: usize = 500;

/// Fits logit weights by gradient ascent on the L2-regularized Bernoulli
/// log-likelihood. Each choice contributes one row per region, labeled 1 for
/// the chosen region and 0 otherwise.
pub fn fit_preference(history: &[ChoiceRecord]) -> Result<PreferenceFit> {
    let Some(first) = history.first() else {
        return Err(Error::invalid("preference fit needs at least one decision"));
    };
    let k = first.features.first().map(|z| z.0.len()).unwrap_or(0);
    let mut rows: Vec<(&[f64], f64)> = Vec::new();
    for (d, rec) in history.iter().enumerate() {
        if rec.chosen.0 >= rec.features.len() {
            return Err(Error::invalid(format!("decision {d} chose region {} of {}", rec.chosen, rec.features.len())));
        }
        for (j, z) in rec.features.iter().enumerate() {
            if z.0.len() != k {
                return Err(Error::invalid(format!("decision {d} region {j} has {} features, expected {k}", z.0.len())));
            }
            rows.push((&z.0, if j == rec.chosen.0 { 1.0 } else { 0.0 }));
        }
    }
    let reference = rows[0].0;
    if rows.iter().all(|(z, _)| *z == reference) {
        log::warn!("preference history has no feature variation; returning zero weights");
        return Ok(PreferenceFit {
            model: PreferenceModel::zeros(k),
            degenerate: true,
            iterations: 0,
            log_likelihood: f64::NAN,
        });
    }

    let n = rows.len() as f64;
    let objective = |w: &[f64]| -> f64 {
        let ll: f64 = rows
            .iter()
            .map(|(z, y)| {
                let s = z.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + w[k];
                y * log_sigmoid(s) + (1.0 - y) * log_sigmoid(-s)
            })
            .sum::<f64>()
            / n;
        ll - 0.5 * FIT_L2 * w[..k].iter().map(|v| v * v).sum::<f64>()
    };
    let gradient = |w: &[f64]| -> Vec<f64> {
        let mut g = vec![0.0; k + 1];
        for (z, y) in &rows {
            let s = z.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + w[k];
            let r = y - sigmoid(s);
            for f in 0..k {
                g[f] += r * z[f];
            }
            g[k] += r;
        }
        for f in 0..=k {
            g[f] /= n;
            if f < k {
                g[f] -= FIT_L2 * w[f];
            }
        }
        g
    };

    let mut w = vec![0.0; k + 1];
    let mut f_w = objective(&w);
    let mut step = 1.0;
    let mut iterations = 0;
    for _ in 0..FIT_ITERATIONS {
        iterations += 1;
        let g = gradient(&w);
        let g2: f64 = g.iter().map(|v| v * v).sum();
        if g2 < 1e-20 {
            break;
        }
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = w.iter().zip(&g).map(|(a, b)| a + step * b).collect();
            let f_trial = objective(&trial);
            if f_trial >= f_w + 1e-4 * step * g2 {
                w = trial;
                f_w = f_trial;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        step = (step * 2.0).min(64.0);
    }
    Ok(PreferenceFit { model: PreferenceModel { weights: w }, degenerate: false, iterations, log_likelihood: f_w })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaBelief {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for BetaBelief {
    fn default() -> Self {
        BetaBelief { alpha: 1.0, beta: 1.0 }
    }
}

impl BetaBelief {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if alpha.is_finite() && beta.is_finite() && alpha > 0.0 && beta > 0.0 {
            Ok(BetaBelief { alpha, beta })
        } else {
            Err(Error::invalid(format!("Beta({alpha}, {beta}) needs positive finite parameters")))
        }
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    fn ln_pdf(&self, ln_x: f64, ln_1mx: f64) -> f64 {
        (self.alpha - 1.0) * ln_x + (self.beta - 1.0) * ln_1mx + ln_gamma(self.alpha + self.beta)
            - ln_gamma(self.alpha)
            - ln_gamma(self.beta)
    }
}

/// Success adds `eps1` to alpha, failure adds `eps0` to beta.
pub fn update_belief(b: BetaBelief, outcome: bool, eps0: f64, eps1: f64) -> BetaBelief {
    if outcome {
        BetaBelief { alpha: b.alpha + eps1, beta: b.beta }
    } else {
        BetaBelief { alpha: b.alpha, beta: b.beta + eps0 }
    }
}

/// Fraction of `m` paired posterior draws in which the system belief beats
/// the driver's own.
pub fn acceptance_probability<R: Rng + ?Sized>(
    belief_system: BetaBelief,
    belief_self: BetaBelief,
    m: usize,
    rng: &mut R,
) -> f64 {
    assert!(m >= 1, "acceptance_probability needs M >= 1");
    let sys = Beta::new(belief_system.alpha, belief_system.beta).expect("valid belief");
    let own = Beta::new(belief_self.alpha, belief_self.beta).expect("valid belief");
    let wins = (0..m).filter(|_| sys.sample(rng) > own.sample(rng)).count();
    wins as f64 / m as f64
}

/// `P(theta_r > theta_p) = integral f_r(x) F_p(x) dx` by tanh-sinh quadrature.
pub fn acceptance_probability_exact(belief_system: BetaBelief, belief_self: BetaBelief) -> f64 {
    let integrand = |ln_x: f64, ln_1mx: f64, x: f64| -> f64 {
        belief_system.ln_pdf(ln_x, ln_1mx).exp() * beta_reg(belief_self.alpha, belief_self.beta, x)
    };
    tanh_sinh_unit(integrand).clamp(0.0, 1.0)
}

/// Integrates over (0, 1); the integrand receives ln x, ln(1-x) and x so
/// endpoint singularities are evaluated without cancellation.
fn tanh_sinh_unit(f: impl Fn(f64, f64, f64) -> f64) -> f64 {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let eval = |t: f64| -> f64 {
        let u = half_pi * t.sinh();
        // x = 1 / (1 + e^{-2u}), 1 - x = 1 / (1 + e^{2u})
        let ln_x = -(-2.0 * u).exp().ln_1p();
        let ln_1mx = -(2.0 * u).exp().ln_1p();
        let x = ln_x.exp();
        let dx = half_pi * t.cosh() * (ln_x + ln_1mx).exp() * 2.0;
        if dx == 0.0 || !dx.is_finite() {
            return 0.0;
        }
        let v = f(ln_x, ln_1mx, x) * dx;
        if v.is_finite() { v } else { 0.0 }
    };
    let t_max = 4.0;
    let mut h = 0.5;
    let mut sum = eval(0.0);
    let mut k = 1;
    while k as f64 * h <= t_max {
        let t = k as f64 * h;
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut estimate = sum * h;
    for _ in 0..8 {
        // halve h: only the new odd nodes are evaluated
        h *= 0.5;
        let mut k = 1;
        while k as f64 * h <= t_max {
            let t = k as f64 * h;
            sum += eval(t) + eval(-t);
            k += 2;
        }
        let next = sum * h;
        if (next - estimate).abs() < 1e-12 {
            return next;
        }
        estimate = next;
    }
    estimate
}

/// Draws the decision: accept with probability `mu`, otherwise reposition by
/// the preference distribution. Returns `(accepted, destination)`.
pub fn sample_decision<R: Rng + ?Sized>(
    recommendation: RegionId,
    mu: f64,
    preference: &[f64],
    rng: &mut R,
) -> (bool, RegionId) {
    let accept_draw: f64 = rng.random();
    let dest_draw: f64 = rng.random();
    if accept_draw < mu {
        return (true, recommendation);
    }
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (j, &p) in preference.iter().enumerate() {
        if p > 0.0 {
            last_positive = j;
        }
        acc += p;
        if dest_draw < acc {
            return (false, RegionId(j));
        }
    }
    (false, RegionId(last_positive))
}

fn top_region(model: &PreferenceModel, features: &[RegionFeatures]) -> usize {
    let scores: Vec<f64> = features.iter().map(|z| model.score(&z.0)).collect();
    (0..scores.len()).fold(0, |best, j| if scores[j] > scores[best] { j } else { best })
}

/// Share of records on which `fitted` and `reference` rank the same region
/// first.
pub fn top1_agreement(fitted: &PreferenceModel, reference: &PreferenceModel, records: &[ChoiceRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    let hits = records.iter().filter(|r| top_region(fitted, &r.features) == top_region(reference, &r.features)).count();
    hits as f64 / records.len() as f64
}

/// Share of records whose chosen region `model` ranks first.
pub fn top1_accuracy(model: &PreferenceModel, records: &[ChoiceRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    let hits = records.iter().filter(|r| top_region(model, &r.features) == r.chosen.0).count();
    hits as f64 / records.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum DriverStatus {
    Idle,
    /// Absolute arrival time in minutes since simulation start.
    Repositioning { arrival: f64 },
    OnTrip { arrival: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriverAgent {
    pub id: DriverId,
    /// Current region, or the destination while moving.
    pub region: RegionId,
    pub preference: PreferenceModel,
    pub belief_system: BetaBelief,
    pub belief_self: BetaBelief,
    pub status: DriverStatus,
    /// Fixed acceptance probability that bypasses the beliefs.
    #[serde(default)]
    pub pinned_mu: Option<f64>,
    /// Fixed self-directed destination distribution that bypasses the logit.
    #[serde(default)]
    pub pinned_preference: Option<Vec<f64>>,
}

impl DriverAgent {
    pub fn new(id: DriverId, region: RegionId, preference: PreferenceModel) -> Self {
        DriverAgent {
            id,
            region,
            preference,
            belief_system: BetaBelief::default(),
            belief_self: BetaBelief::default(),
            status: DriverStatus::Idle,
            pinned_mu: None,
            pinned_preference: None,
        }
    }

    pub fn is_idle(&self) -> bool {
        self.status == DriverStatus::Idle
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;

    fn feats(rows: &[&[f64]]) -> Vec<RegionFeatures> {
        rows.iter().map(|r| RegionFeatures(r.to_vec())).collect()
    }

    #[test]
    fn zero_weights_give_uniform() {
        let l = preference_distribution(&PreferenceModel::zeros(2), &feats(&[&[1.0, 2.0], &[3.0, -1.0], &[0.0, 0.0]])).unwrap();
        for p in l {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn two_region_ratio() {
        // sigma = 0.8 and 0.2 via logits ln 4 and -ln 4
        let model = PreferenceModel::new(vec![1.0, 0.0]).unwrap();
        let l = preference_distribution(&model, &feats(&[&[4f64.ln()], &[-(4f64.ln())]])).unwrap();
        assert!((l[0] - 0.8).abs() < 1e-12 && (l[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let model = PreferenceModel::zeros(3);
        assert!(preference_distribution(&model, &feats(&[&[1.0]])).is_err());
    }

    #[test]
    fn extreme_weights_still_normalize() {
        let model = PreferenceModel::new(vec![1e6, -1e6, 3.0]).unwrap();
        let l = preference_distribution(&model, &feats(&[&[1.0, 0.0], &[-1.0, 2.0], &[0.5, 0.5]])).unwrap();
        assert!((l.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(l.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn single_decision_pulls_toward_choice() {
        let rec = ChoiceRecord { chosen: RegionId(1), features: feats(&[&[0.0, 1.0], &[1.0, 0.0]]) };
        let fit = fit_preference(&[rec.clone()]).unwrap();
        let l = preference_distribution(&fit.model, &rec.features).unwrap();
        assert!(l[1] > 0.5);
    }

    #[test]
    fn degenerate_history_flags() {
        let rec = ChoiceRecord { chosen: RegionId(0), features: feats(&[&[1.0, 1.0], &[1.0, 1.0]]) };
        let fit = fit_preference(&[rec]).unwrap();
        assert!(fit.degenerate);
        assert!(fit.model.weights.iter().all(|w| *w == 0.0));
    }

    #[test]
    fn update_rule_examples() {
        let mut b = BetaBelief::default();
        for _ in 0..6 {
            b = update_belief(b, true, 1.0, 1.0);
        }
        assert_eq!(b, BetaBelief { alpha: 7.0, beta: 1.0 });
        assert_eq!(b.mean(), 0.875);
        let mut c = BetaBelief::default();
        for o in [true, false, true] {
            c = update_belief(c, o, 1.0, 2.0);
        }
        assert_eq!(c, BetaBelief { alpha: 5.0, beta: 2.0 });
    }

    #[test]
    fn exact_acceptance_symmetry() {
        let b = BetaBelief::new(3.5, 2.0).unwrap();
        assert!((acceptance_probability_exact(b, b) - 0.5).abs() < 1e-9);
        let u = BetaBelief::default();
        assert!((acceptance_probability_exact(u, u) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn exact_acceptance_handles_singular_densities() {
        // Beta(0.5,0.5) vs itself is still 1/2
        let b = BetaBelief::new(0.5, 0.5).unwrap();
        assert!((acceptance_probability_exact(b, b) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn decision_edge_cases() {
        let mut rng = seeded_rng(1, "decision");
        for _ in 0..200 {
            assert_eq!(sample_decision(RegionId(2), 1.0, &[1.0, 0.0, 0.0], &mut rng), (true, RegionId(2)));
            assert_eq!(sample_decision(RegionId(2), 0.0, &[0.0, 1.0, 0.0], &mut rng), (false, RegionId(1)));
        }
    }
}

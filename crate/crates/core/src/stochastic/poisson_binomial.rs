use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sum of independent Bernoulli trials with success probabilities `probs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonBinomial {
    probs: Vec<f64>,
}

impl PoissonBinomial {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
            return Err(Error::invalid(format!("success probability {i} is {p}, outside [0, 1]")));
        }
        Ok(PoissonBinomial { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

pub fn pb_expectation(pb: &PoissonBinomial) -> f64 {
    pb.probs.iter().sum()
}

pub fn pb_variance(pb: &PoissonBinomial) -> f64 {
    pb.probs.iter().map(|p| p * (1.0 - p)).sum()
}

/// Exact PMF by convolving in one trial at a time, O(m^2).
pub fn pb_pmf(pb: &PoissonBinomial) -> Vec<f64> {
    let m = pb.probs.len();
    let mut pmf = vec![0.0; m + 1];
    pmf[0] = 1.0;
    for (k, &p) in pb.probs.iter().enumerate() {
        let q = 1.0 - p;
        // walk downward so pmf[j - 1] is still the previous row
        for j in (1..=k + 1).rev() {
            pmf[j] = pmf[j] * q + pmf[j - 1] * p;
        }
        pmf[0] *= q;
    }
    pmf
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_examples() {
        let pb = PoissonBinomial::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(pb_pmf(&pb), vec![0.25, 0.5, 0.25]);
        let pb = PoissonBinomial::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(pb_pmf(&pb), vec![0.0, 0.0, 1.0]);
        let pb = PoissonBinomial::new(vec![1.0; 3]).unwrap();
        assert_eq!(pb_expectation(&pb), 3.0);
        let pb = PoissonBinomial::new(vec![0.2, 0.7, 0.5]).unwrap();
        assert!((pb_expectation(&pb) - 1.4).abs() < 1e-15);
        let pb = PoissonBinomial::new(vec![0.5; 200]).unwrap();
        assert_eq!(pb_expectation(&pb), 100.0);
    }

    #[test]
    fn empty_is_point_mass_at_zero() {
        let pb = PoissonBinomial::new(vec![]).unwrap();
        assert_eq!(pb_pmf(&pb), vec![1.0]);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(PoissonBinomial::new(vec![0.3, 1.2]).is_err());
        assert!(PoissonBinomial::new(vec![f64::NAN]).is_err());
    }
}

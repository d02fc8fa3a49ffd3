//! Welch's unequal-variances t-test.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Two-sided Welch test result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchTest {
    pub t_statistic: f64,
    pub p_value: f64,
    /// Welch-Satterthwaite degrees of freedom.
    pub degrees_of_freedom: f64,
}

fn mean_and_var(sample: &[f64]) -> (f64, f64) {
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let var = sample.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Welch's t statistic with Welch-Satterthwaite degrees of freedom and a
/// two-sided p-value. Both samples need at least two points and the pooled
/// standard error must be nonzero.
pub fn welch_t_test(sample_a: &[f64], sample_b: &[f64]) -> Result<WelchTest> {
    if sample_a.len() < 2 || sample_b.len() < 2 {
        return Err(Error::DegenerateSamples(
            "welch test needs at least two points per sample".into(),
        ));
    }
    let (mean_a, var_a) = mean_and_var(sample_a);
    let (mean_b, var_b) = mean_and_var(sample_b);
    let na = sample_a.len() as f64;
    let nb = sample_b.len() as f64;
    let se_a = var_a / na;
    let se_b = var_b / nb;
    let se2 = se_a + se_b;
    if !(se2 > 0.0) {
        return Err(Error::DegenerateSamples(
            "both samples have zero variance".into(),
        ));
    }
    let t = (mean_a - mean_b) / se2.sqrt();
    let df = se2 * se2 / (se_a * se_a / (na - 1.0) + se_b * se_b / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::DegenerateSamples(e.to_string()))?;
    let p = 2.0 * (1.0 - dist.cdf(t.abs()));
    Ok(WelchTest {
        t_statistic: t,
        p_value: p.clamp(0.0, 1.0),
        degrees_of_freedom: df,
    })
}

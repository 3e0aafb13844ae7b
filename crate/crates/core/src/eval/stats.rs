use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiRunSummary {
    pub run_scores: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for a single run.
    pub std: f64,
    /// Half-width of the two-sided 95% Student-t interval.
    pub ci95_halfwidth: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// 0.975 quantile of Student's t with `df` degrees of freedom.
pub fn t_quantile_975(df: usize) -> f64 {
    StudentsT::new(0.0, 1.0, df as f64)
        .expect("degrees of freedom are positive")
        .inverse_cdf(0.975)
}

/// Mean and 95% confidence half-width `t(0.975, n-1) * s / sqrt(n)`.
///
/// Panics on an empty slice.
pub fn summarize_runs(scores: &[f64]) -> MultiRunSummary {
    assert!(!scores.is_empty(), "summarize_runs needs at least one score");
    let n = scores.len();
    let mean = scores.iter().sum::<f64>() / n as f64;
    if n == 1 {
        log::warn!("single run: confidence interval is undefined, reporting 0");
        return MultiRunSummary {
            run_scores: scores.to_vec(),
            mean,
            std: 0.0,
            ci95_halfwidth: 0.0,
            warning: Some("single run; confidence interval undefined".into()),
        };
    }
    let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let std = var.sqrt();
    MultiRunSummary {
        run_scores: scores.to_vec(),
        mean,
        std,
        ci95_halfwidth: t_quantile_975(n - 1) * std / (n as f64).sqrt(),
        warning: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_runs() {
        let s = summarize_runs(&[0.9, 0.9, 0.9]);
        assert!((s.mean - 0.9).abs() < 1e-15);
        assert!(s.ci95_halfwidth.abs() < 1e-15);
        assert!(s.warning.is_none());
    }

    #[test]
    fn single_run_warns() {
        let s = summarize_runs(&[0.85]);
        assert_eq!((s.mean, s.ci95_halfwidth), (0.85, 0.0));
        assert!(s.warning.is_some());
    }

    #[test]
    fn t_table_values() {
        // Standard two-sided 95% critical values.
        for (df, t) in [(1, 12.706204736), (4, 2.776445105), (9, 2.262157163), (30, 2.042272456)] {
            assert!((t_quantile_975(df) - t).abs() < 1e-8, "df={df}");
        }
    }
}

//! Experiment drivers: configuration, the synthetic studies, single runs and
//! the statistics used to summarize them.

pub mod config;
pub mod single;
pub mod stats;
pub mod study;

pub use config::{ExperimentConfig, KeyValues, Method, Study};
pub use single::{bound_report, evaluate, evaluate_files, generate, train_single, GenerateSpec, SingleConfig};
pub use stats::{welch_t_test, WelchTest};
pub use study::{run_noise_study, run_overlap_study, StudyOutcome};

/// Formats like C's `%.9g`: nine significant digits, trailing zeros trimmed.
pub fn fmt9(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::fmt9;

    #[test]
    fn matches_printf_g() {
        assert_eq!(fmt9(0.0), "0");
        assert_eq!(fmt9(1.0), "1");
        assert_eq!(fmt9(0.5), "0.5");
        assert_eq!(fmt9(91.94), "91.94");
        assert_eq!(fmt9(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt9(123456789.0), "123456789");
        assert_eq!(fmt9(1234567890.0), "1.23456789e+09");
        assert_eq!(fmt9(1e-5), "1e-05");
        assert_eq!(fmt9(2.5e-6), "2.5e-06");
        assert_eq!(fmt9(0.00012345), "0.00012345");
        assert_eq!(fmt9(-0.125), "-0.125");
        assert_eq!(fmt9(f64::NAN), "nan");
        assert_eq!(fmt9(9.999999999), "10");
    }
}

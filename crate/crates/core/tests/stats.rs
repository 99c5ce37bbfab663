//! Confidence intervals over repeated runs.

use dopamine::analysis::{summarize_runs, CiMethod, RunSummary};
use dopamine::rng::{standard_normal, stream_rng, Stream};

fn coverage(method: CiMethod, n: usize, trials: usize) -> f64 {
    let mut rng = stream_rng(11, Stream::Data);
    let (mu, sd) = (0.3, 0.05);
    let hits = (0..trials)
        .filter(|_| {
            let xs: Vec<f64> = (0..n).map(|_| mu + sd * standard_normal(&mut rng)).collect();
            let s = summarize_runs(&xs, method).unwrap();
            s.ci_low <= mu && mu <= s.ci_high
        })
        .count();
    hits as f64 / trials as f64
}

#[test]
fn student_t_interval_has_nominal_coverage() {
    // 4000 trials: the binomial standard error of a 95% rate is ~0.0035.
    let c = coverage(CiMethod::StudentT, 5, 4000);
    assert!((c - 0.95).abs() < 0.015, "coverage {c}");
    let c = coverage(CiMethod::StudentT, 20, 4000);
    assert!((c - 0.95).abs() < 0.015, "coverage {c}");
}

#[test]
fn normal_interval_undercovers_for_few_seeds() {
    let normal = coverage(CiMethod::Normal, 5, 4000);
    let t = coverage(CiMethod::StudentT, 5, 4000);
    assert!(normal < t, "{normal} vs {t}");
    // Large-n limit: the two agree.
    assert!((coverage(CiMethod::Normal, 200, 1000) - 0.95).abs() < 0.025);
}

#[test]
fn textbook_values() {
    let s = summarize_runs(&[1.0, 2.0, 3.0, 4.0], CiMethod::StudentT).unwrap();
    assert_eq!(s.mean, 2.5);
    assert!((s.std - 1.2909944487358056).abs() < 1e-15);
    // t_{0.975, 3} = 3.182446305284263
    let half = 3.182446305284263 * s.std / 2.0;
    assert!((s.ci_high - 2.5 - half).abs() < 1e-9);
    assert!(summarize_runs(&[1.0], CiMethod::Normal).is_err());
    assert!(RunSummary::from_values(&[1.0], CiMethod::Normal).unwrap().degenerate);
}

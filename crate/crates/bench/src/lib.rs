//! Shared fixtures for the benchmarks.

use resprod_core::{generate_synthetic_corpus, Corpus, Dmu, SyntheticParams};

/// Synthetic corpus with roughly `6 * researchers` publications.
pub fn corpus(researchers: usize) -> Corpus {
    let params = SyntheticParams {
        researchers,
        institutions: (researchers / 250).max(12),
        lotka_exponent: 1.5,
        max_papers: 75,
        ..SyntheticParams::default()
    };
    generate_synthetic_corpus(7, &params).expect("valid parameters")
}

/// `n` DMUs with two inputs and two outputs spread over a curved frontier.
pub fn dmus(n: usize) -> Vec<Dmu> {
    (0..n)
        .map(|j| {
            let t = j as f64 + 1.0;
            Dmu::new(
                format!("d{j}"),
                vec![10.0 + (t * 7.3) % 13.0, 5.0 + (t * 3.1) % 9.0],
                vec![t.sqrt() * 4.0 + (t * 1.7) % 5.0, 20.0 - (t * 2.9) % 11.0],
            )
        })
        .collect()
}

/// A ranking of `n` units and a perturbed copy.
pub fn score_pairs(n: usize) -> (Vec<f64>, Vec<f64>) {
    let a: Vec<f64> = (0..n).map(|i| ((i * 7919) % n) as f64).collect();
    let b: Vec<f64> = a.iter().enumerate().map(|(i, x)| x + ((i * 31) % 17) as f64).collect();
    (a, b)
}

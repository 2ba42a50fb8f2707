//! Small statistics helpers for the experiment comparisons.

/// One-sided paired sign test. `wins` counts pairs where the tested side was
/// strictly better, `losses` the opposite; ties are dropped beforehand.
/// Returns the probability of at least `wins` successes out of
/// `wins + losses` fair coin flips; an empty sample yields 1.0.
pub fn sign_test_p(wins: u32, losses: u32) -> f64 {
    let n = wins + losses;
    if n == 0 {
        return 1.0;
    }
    // Exact binomial tail: sum C(n, k) / 2^n for k = wins..=n.
    let mut coef = 1.0f64; // C(n, 0)
    let mut tail = 0.0f64;
    let mut total = 0.0f64;
    for k in 0..=n {
        if k >= wins {
            tail += coef;
        }
        total += coef;
        if k < n {
            coef = coef * (n - k) as f64 / (k + 1) as f64;
        }
    }
    tail / total
}

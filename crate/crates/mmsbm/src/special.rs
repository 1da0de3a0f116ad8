//! Small special-function kernel: `ln Γ`, digamma, and trigamma.
//!
//! All three use the same scheme: shift the argument above 10 with the
//! recurrence relation, then evaluate the asymptotic (Stirling-type) series.
//! Accuracy is limited by the series itself, roughly 14-15 significant digits
//! in `f64`, which is far below every tolerance used by the estimators.

use crate::scalar::Scalar;

/// Arguments below this are shifted upward before applying the series.
const SHIFT_THRESHOLD: f64 = 10.0;

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma<F: Scalar>(x: F) -> F {
    debug_assert!(x > F::zero(), "ln_gamma needs a positive argument");
    let threshold = F::cast(SHIFT_THRESHOLD);
    // ln Γ(x) = ln Γ(x + n) - Σ ln(x + i)
    let mut shift = F::zero();
    let mut y = x;
    while y < threshold {
        shift += y.ln();
        y += F::one();
    }
    #[allow(clippy::excessive_precision)] // ln(2π)/2 truncated from higher precision
    let half_ln_two_pi = F::cast(0.918_938_533_204_672_742);
    let inv = y.recip();
    let inv2 = inv * inv;
    // Stirling series coefficients: B_{2k} / (2k (2k-1))
    let series = [
        8.333_333_333_333_333e-2,  //  1/12
        -2.777_777_777_777_778e-3, // -1/360
        7.936_507_936_507_937e-4,  //  1/1260
        -5.952_380_952_380_952e-4, // -1/1680
        8.417_508_417_508_418e-4,  //  1/1188
    ];
    let mut tail = F::zero();
    let mut power = inv;
    for c in series {
        tail += F::cast(c) * power;
        power *= inv2;
    }
    (y - F::cast(0.5)) * y.ln() - y + half_ln_two_pi + tail - shift
}

/// Digamma function ψ(x) = d/dx ln Γ(x) for `x > 0`.
pub fn digamma<F: Scalar>(x: F) -> F {
    debug_assert!(x > F::zero(), "digamma needs a positive argument");
    let threshold = F::cast(SHIFT_THRESHOLD);
    // ψ(x) = ψ(x + n) - Σ 1/(x + i)
    let mut shift = F::zero();
    let mut y = x;
    while y < threshold {
        shift += y.recip();
        y += F::one();
    }
    let inv = y.recip();
    let inv2 = inv * inv;
    // ψ(y) ~ ln y - 1/(2y) - Σ B_{2k} / (2k y^{2k})
    let series = [
        -8.333_333_333_333_333e-2, // -1/12
        8.333_333_333_333_333e-3,  //  1/120
        -3.968_253_968_253_968e-3, // -1/252
        4.166_666_666_666_667e-3,  //  1/240
        -7.575_757_575_757_576e-3, // -1/132
        2.109_279_609_279_609e-2,  //  691/32760
    ];
    let mut tail = F::zero();
    let mut power = inv2;
    for c in series {
        tail += F::cast(c) * power;
        power *= inv2;
    }
    y.ln() - F::cast(0.5) * inv + tail - shift
}

/// Trigamma function ψ'(x) for `x > 0`.
pub fn trigamma<F: Scalar>(x: F) -> F {
    debug_assert!(x > F::zero(), "trigamma needs a positive argument");
    let threshold = F::cast(SHIFT_THRESHOLD);
    // ψ'(x) = ψ'(x + n) + Σ 1/(x + i)^2
    let mut shift = F::zero();
    let mut y = x;
    while y < threshold {
        shift += (y * y).recip();
        y += F::one();
    }
    let inv = y.recip();
    let inv2 = inv * inv;
    // ψ'(y) ~ 1/y + 1/(2y^2) + Σ B_{2k} / y^{2k+1}
    let series = [
        1.666_666_666_666_667e-1,  //  1/6
        -3.333_333_333_333_333e-2, // -1/30
        2.380_952_380_952_381e-2,  //  1/42
        -3.333_333_333_333_333e-2, // -1/30
        7.575_757_575_757_576e-2,  //  5/66
        -2.531_135_531_135_531e-1, // -691/2730
    ];
    let mut tail = F::zero();
    let mut power = inv2 * inv;
    for c in series {
        tail += F::cast(c) * power;
        power *= inv2;
    }
    inv + F::cast(0.5) * inv2 + tail + shift
}

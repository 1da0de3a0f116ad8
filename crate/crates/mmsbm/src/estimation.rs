//! End-to-end parameter estimation and identifiability-aware error metrics.
//!
//! The pipeline embeds the graph spectrally, projects the embedding onto its
//! principal components, fits a minimum-volume enclosing polytope, applies
//! the sample-size shrinkage correction, and reads the model parameters off
//! the corrected polytope: the connectivity matrix as a Gram matrix of the
//! vertices, per-node memberships as barycentric coordinates, and the
//! Dirichlet concentration by maximum likelihood.
//!
//! All comparisons against reference parameters go through row-column
//! permutation matching, since vertex labels are only identified up to
//! relabeling.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::embedding::{pca_project, pca_reconstruct, spectral_embed, EmbedOptions, PcaFrame};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::GraphSample;
use crate::polytope::{fit_mvecp, shrink, shrink_factor, Polytope};
use crate::scalar::Scalar;
use crate::special::{digamma, ln_gamma, trigamma};

/// Gradient infinity-norm at which the Dirichlet Newton solver stops.
pub const MLE_GRAD_TOL: f64 = 1e-10;

/// Iteration cap for the Dirichlet Newton solver.
pub const MLE_MAX_ITER: usize = 500;

/// Concentration ceiling; an iterate beyond this reports non-convergence
/// (the likelihood is unbounded for degenerate data).
pub const MLE_ALPHA_CEILING: f64 = 1e6;

/// Lower clip applied to membership entries before taking logarithms.
pub const MLE_PI_FLOOR: f64 = 1e-10;

/// Largest vertex count for which permutation matching is exhaustive.
pub const EXHAUSTIVE_MATCH_LIMIT: usize = 8;

/// How the fitted polytope is shrunk toward the cloud mean before the
/// parameters are read off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShrinkPolicy<F> {
    /// No correction: the fitted polytope is used as-is.
    None,
    /// Fixed factor `eta` in `[0, 1]`.
    Fixed(F),
    /// Sample-size-driven factor `eta(n) = 1 - a sqrt(ln n) / sqrt(n)`,
    /// clamped to `[0, 1]`.
    Rate(F),
}

impl<F: Scalar> ShrinkPolicy<F> {
    /// Validates the policy's parameter.
    pub fn validate(&self) -> Result<()> {
        match *self {
            ShrinkPolicy::None => Ok(()),
            ShrinkPolicy::Fixed(eta) => {
                if eta.is_finite() && eta >= F::zero() && eta <= F::one() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "fixed shrink factor {eta} must lie in [0, 1]"
                    )))
                }
            }
            ShrinkPolicy::Rate(a) => {
                if a.is_finite() && a >= F::zero() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "rate constant {a} must be finite and non-negative"
                    )))
                }
            }
        }
    }

    /// The shrink factor this policy applies at `n` nodes.
    pub fn eta(&self, n: usize) -> F {
        match *self {
            ShrinkPolicy::None => F::one(),
            ShrinkPolicy::Fixed(eta) => eta,
            ShrinkPolicy::Rate(a) => shrink_factor(n, a),
        }
    }
}

impl<F: Scalar> fmt::Display for ShrinkPolicy<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ShrinkPolicy::None => write!(f, "none"),
            ShrinkPolicy::Fixed(eta) => write!(f, "fixed:{eta}"),
            ShrinkPolicy::Rate(a) => write!(f, "rate:{a}"),
        }
    }
}

impl<F: Scalar> FromStr for ShrinkPolicy<F> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| Error::InvalidParameter(msg);
        if s == "none" {
            return Ok(ShrinkPolicy::None);
        }
        if let Some(rest) = s.strip_prefix("fixed:") {
            let eta: f64 = rest
                .parse()
                .map_err(|_| bad(format!("cannot parse shrink factor in policy '{s}'")))?;
            let policy = ShrinkPolicy::Fixed(F::cast(eta));
            policy.validate()?;
            return Ok(policy);
        }
        if let Some(rest) = s.strip_prefix("rate:") {
            let a: f64 = rest
                .parse()
                .map_err(|_| bad(format!("cannot parse rate constant in policy '{s}'")))?;
            let policy = ShrinkPolicy::Rate(F::cast(a));
            policy.validate()?;
            return Ok(policy);
        }
        Err(bad(format!(
            "unknown shrink policy '{s}' (expected none, fixed:<eta>, or rate:<a>)"
        )))
    }
}

/// Everything the pipeline estimates, plus per-stage diagnostics.
///
/// Memberships and the concentration vector are only identified when the
/// vertex count equals the embedding dimension; otherwise they are `None`.
#[derive(Debug, Clone)]
pub struct EstimationResult<F: Scalar> {
    /// Estimated connectivity matrix: Gram matrix of the corrected polytope's
    /// vertices, clipped to `[0, 1]`.
    pub b_hat: Array2<F>,
    /// Estimated `n x k` membership matrix (rows on the simplex), when
    /// `k = d`.
    pub pi_hat: Option<Array2<F>>,
    /// Estimated Dirichlet concentration, when `k = d`.
    pub alpha_hat: Option<Array1<F>>,
    /// Corrected polytope mapped back to embedding coordinates.
    pub s_hat: Polytope<F>,
    /// Uncorrected fit mapped back to embedding coordinates.
    pub s_hat_raw: Polytope<F>,
    /// Projection frame used by the fit (`None` when `d = 1`, where no
    /// projection happens).
    pub frame: Option<PcaFrame<F>>,
    /// Named scalar diagnostics: shrink factor, eigensolver residual and
    /// iterations, clip counts and magnitudes, membership residual, and
    /// Dirichlet solver iterations.
    pub diagnostics: BTreeMap<String, F>,
}

/// How much entrywise clipping [`estimate_b`] applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClipReport<F> {
    /// Number of matrix entries moved.
    pub count: usize,
    /// Largest distance any entry was moved.
    pub max_excess: F,
}

/// Per-row diagnostics from [`estimate_memberships`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MembershipReport<F> {
    /// Rows whose affine coordinates left the simplex and were projected
    /// back.
    pub projected_rows: usize,
    /// Largest distance from a point to the affine hull of the vertices.
    pub max_residual: F,
}

/// Output of the Dirichlet maximum-likelihood solver.
#[derive(Debug, Clone)]
pub struct DirichletMle<F: Scalar> {
    /// The estimated concentration vector, entrywise positive.
    pub alpha: Array1<F>,
    /// Accepted Newton steps.
    pub iterations: usize,
    /// Mean log-likelihood after the initializer and after each accepted
    /// step; non-decreasing by construction.
    pub trace: Vec<F>,
    /// Membership entries raised to the floor before taking logarithms.
    pub clipped_entries: usize,
}

/// A vertex-label matching and the error it achieves.
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationMatch<F> {
    /// `perm[i]` is the estimate index matched to reference index `i`.
    pub perm: Vec<usize>,
    /// The minimized error (Frobenius for matrices, max distance for vertex
    /// sets).
    pub error: F,
    /// Whether the search was exhaustive over all permutations.
    pub optimal: bool,
}

/// Runs the full estimation pipeline on a graph with default embedding
/// options.
///
/// Requires `k >= d >= 1` and a nonempty graph.  The steps are: spectral
/// embedding into `d` dimensions, principal-component projection to `d - 1`
/// (skipped when `d = 1`, where the fit runs on the raw line), minimum-volume
/// enclosing polytope fit with `k` vertices, shrinkage toward the projected
/// cloud's mean according to `policy`, reconstruction to embedding
/// coordinates, and parameter read-off.
pub fn estimate<F: Scalar>(
    g: &GraphSample<F>,
    k: usize,
    d: usize,
    policy: ShrinkPolicy<F>,
) -> Result<EstimationResult<F>> {
    let mut results = estimate_policies(g, k, d, &[policy], &EmbedOptions::default())?;
    Ok(results.pop().expect("one policy in, one result out"))
}

/// Runs the pipeline once and reads parameters off under several shrink
/// policies.
///
/// The embedding, projection, and polytope fit are shared across policies,
/// which differ only in the shrink factor; the returned vector is parallel
/// to `policies`.
pub fn estimate_policies<F: Scalar>(
    g: &GraphSample<F>,
    k: usize,
    d: usize,
    policies: &[ShrinkPolicy<F>],
    opts: &EmbedOptions<F>,
) -> Result<Vec<EstimationResult<F>>> {
    if g.n() == 0 {
        return Err(Error::InvalidParameter(
            "cannot estimate from an empty graph".to_string(),
        ));
    }
    let embedding = spectral_embed(g, d, opts)?;
    let mut base = BTreeMap::new();
    base.insert("eigen_residual".to_string(), embedding.residual);
    base.insert(
        "eigen_iterations".to_string(),
        F::cast(embedding.iterations as f64),
    );
    finish_policies(&embedding.positions, k, g.n(), policies, &base)
}

/// Runs the post-embedding pipeline on externally supplied positions.
///
/// This is the noiseless bypass: feeding the true latent positions recovers
/// the parameters up to the fit's numerical accuracy.  A rate policy reads
/// its sample size from the row count.
pub fn estimate_from_positions<F: Scalar>(
    xhat: ArrayView2<F>,
    k: usize,
    policy: ShrinkPolicy<F>,
) -> Result<EstimationResult<F>> {
    let positions = xhat.to_owned();
    let mut results = finish_policies(
        &positions,
        k,
        positions.nrows(),
        &[policy],
        &BTreeMap::new(),
    )?;
    Ok(results.pop().expect("one policy in, one result out"))
}

/// Shared tail of the pipeline: project, fit once, then shrink and read off
/// parameters per policy.
fn finish_policies<F: Scalar>(
    positions: &Array2<F>,
    k: usize,
    n_nodes: usize,
    policies: &[ShrinkPolicy<F>],
    base_diagnostics: &BTreeMap<String, F>,
) -> Result<Vec<EstimationResult<F>>> {
    let (n, d) = positions.dim();
    if d == 0 || k < d {
        return Err(Error::InvalidParameter(format!(
            "need k >= d >= 1, got k = {k}, d = {d}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameter(
            "cannot estimate from an empty point set".to_string(),
        ));
    }
    for policy in policies {
        policy.validate()?;
    }

    // Project and fit once; policies only differ in the shrink factor.
    let (projected, frame) = if d == 1 {
        (positions.clone(), None)
    } else {
        let (proj, frame) = pca_project(positions.view(), d - 1)?;
        (proj, Some(frame))
    };
    let raw_fit = if k == 1 {
        // A single "vertex" cannot enclose a spread-out cloud; the 1-d
        // convention is the midpoint of the interval hull.
        debug_assert_eq!(d, 1);
        let lo = positions.iter().cloned().fold(F::infinity(), F::min);
        let hi = positions.iter().cloned().fold(F::neg_infinity(), F::max);
        let half = F::cast(0.5);
        Polytope::raw(Array2::from_elem((1, 1), (lo + hi) * half))
    } else {
        fit_mvecp(projected.view(), k)?
    };
    let center = projected.mean_axis(Axis(0)).expect("nonempty cloud");

    let mut results = Vec::with_capacity(policies.len());
    for policy in policies {
        let eta = policy.eta(n_nodes);
        let shrunk_fit = shrink(&raw_fit, center.view(), eta);
        let (raw_vertices, shrunk_vertices) = match &frame {
            Some(frame) => (
                pca_reconstruct(frame, raw_fit.vertices().view())?,
                pca_reconstruct(frame, shrunk_fit.vertices().view())?,
            ),
            None => (raw_fit.vertices().clone(), shrunk_fit.vertices().clone()),
        };
        let s_hat_raw = Polytope::raw(raw_vertices);
        let s_hat = Polytope::raw(shrunk_vertices);

        let (b_hat, clip) = estimate_b(s_hat.vertices().view());

        let mut diagnostics = base_diagnostics.clone();
        diagnostics.insert("eta".to_string(), eta);
        diagnostics.insert("b_clip_count".to_string(), F::cast(clip.count as f64));
        diagnostics.insert("b_clip_max_excess".to_string(), clip.max_excess);

        let (pi_hat, alpha_hat) = if k == d {
            let (pi, report) = estimate_memberships(positions.view(), &s_hat)?;
            diagnostics.insert(
                "pi_clip_count".to_string(),
                F::cast(report.projected_rows as f64),
            );
            diagnostics.insert("pi_max_residual".to_string(), report.max_residual);
            let mle = dirichlet_mle(pi.view())?;
            diagnostics.insert("mle_iterations".to_string(), F::cast(mle.iterations as f64));
            (Some(pi), Some(mle.alpha))
        } else {
            (None, None)
        };

        results.push(EstimationResult {
            b_hat,
            pi_hat,
            alpha_hat,
            s_hat,
            s_hat_raw,
            frame: frame.clone(),
            diagnostics,
        });
    }
    Ok(results)
}

/// Gram matrix of the vertex rows, clipped entrywise to `[0, 1]`.
pub fn estimate_b<F: Scalar>(vertices: ArrayView2<F>) -> (Array2<F>, ClipReport<F>) {
    let k = vertices.nrows();
    let mut gram = Array2::<F>::zeros((k, k));
    for i in 0..k {
        for j in i..k {
            let value = vertices.row(i).dot(&vertices.row(j));
            gram[(i, j)] = value;
            gram[(j, i)] = value;
        }
    }
    let mut count = 0usize;
    let mut max_excess = F::zero();
    for value in gram.iter_mut() {
        let clipped = value.max(F::zero()).min(F::one());
        if clipped != *value {
            count += 1;
            max_excess = max_excess.max((*value - clipped).abs());
            *value = clipped;
        }
    }
    (gram, ClipReport { count, max_excess })
}

/// Per-row barycentric membership estimates for the simplex case `k = d`.
///
/// Each row is the affine least-squares solution of `X_i = sum_j c_j V_j`
/// subject to `sum_j c_j = 1`; rows leaving the simplex are replaced by their
/// Euclidean projection onto it.
pub fn estimate_memberships<F: Scalar>(
    xhat: ArrayView2<F>,
    s_hat: &Polytope<F>,
) -> Result<(Array2<F>, MembershipReport<F>)> {
    let (n, d) = xhat.dim();
    let k = s_hat.k();
    if s_hat.ambient_dim() != d {
        return Err(Error::InvalidParameter(format!(
            "points have {d} coordinates but the polytope lives in {} dimensions",
            s_hat.ambient_dim()
        )));
    }
    if k != d {
        return Err(Error::InvalidParameter(format!(
            "membership estimation needs as many vertices as coordinates, got {k} vertices in {d} dimensions"
        )));
    }
    let vertices = s_hat.vertices();
    // Affine least squares for every row shares one KKT matrix:
    // [ V V^T  1 ] [c]   [V x]
    // [ 1^T    0 ] [l] = [ 1 ]
    let mut kkt = Array2::<F>::zeros((k + 1, k + 1));
    for i in 0..k {
        for j in i..k {
            let value = vertices.row(i).dot(&vertices.row(j));
            kkt[(i, j)] = value;
            kkt[(j, i)] = value;
        }
        kkt[(i, k)] = F::one();
        kkt[(k, i)] = F::one();
    }

    let mut pi = Array2::<F>::zeros((n, k));
    let mut projected_rows = 0usize;
    let mut max_residual = F::zero();
    let mut rhs = Array1::<F>::zeros(k + 1);
    for r in 0..n {
        let x = xhat.row(r);
        for i in 0..k {
            rhs[i] = vertices.row(i).dot(&x);
        }
        rhs[k] = F::one();
        let solution = linalg::solve(kkt.view(), rhs.view()).map_err(|_| {
            Error::DegenerateInput(
                "polytope vertices are affinely dependent; memberships are not identified"
                    .to_string(),
            )
        })?;
        let coeffs = Array1::from_iter(solution.iter().take(k).cloned());
        // distance from the point to the affine hull of the vertices
        let recon = coeffs.dot(vertices);
        let mut residual = F::zero();
        for c in 0..d {
            let diff = recon[c] - x[c];
            residual += diff * diff;
        }
        max_residual = max_residual.max(residual.sqrt());
        let smallest = coeffs.iter().cloned().fold(F::infinity(), F::min);
        let dust = F::cast(-1e-12);
        let row = if smallest < dust {
            projected_rows += 1;
            simplex_project(coeffs.view())
        } else if smallest < F::zero() {
            // rounding dust from the affine solve, not a containment failure
            let mut cleaned = coeffs;
            cleaned.mapv_inplace(|c| c.max(F::zero()));
            let total = cleaned.sum();
            cleaned / total
        } else {
            coeffs
        };
        pi.row_mut(r).assign(&row);
    }
    Ok((
        pi,
        MembershipReport {
            projected_rows,
            max_residual,
        },
    ))
}

/// Euclidean projection of a coefficient vector onto the probability
/// simplex.
pub fn simplex_project<F: Scalar>(c: ArrayView1<F>) -> Array1<F> {
    let k = c.len();
    let mut sorted: Vec<F> = c.iter().cloned().collect();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite coefficients"));
    let mut cumulative = F::zero();
    let mut theta = F::zero();
    for (j, &value) in sorted.iter().enumerate() {
        cumulative += value;
        let count = F::cast((j + 1) as f64);
        let candidate = (cumulative - F::one()) / count;
        if value - candidate > F::zero() {
            theta = candidate;
        }
    }
    let mut out = Array1::<F>::zeros(k);
    for i in 0..k {
        out[i] = (c[i] - theta).max(F::zero());
    }
    out
}

/// Maximum-likelihood Dirichlet concentration for simplex-valued rows.
///
/// Damped Newton ascent on the mean log-likelihood, initialized by moment
/// matching.  The Hessian's diagonal-plus-rank-one structure is inverted in
/// closed form.  Entries are raised to [`MLE_PI_FLOOR`] (rows renormalized)
/// before logarithms are taken.
pub fn dirichlet_mle<F: Scalar>(pi: ArrayView2<F>) -> Result<DirichletMle<F>> {
    let (n, k) = pi.dim();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "dirichlet fitting needs at least 2 rows, got {n}"
        )));
    }
    if k == 0 {
        return Err(Error::InvalidParameter(
            "dirichlet fitting needs at least one column".to_string(),
        ));
    }
    let sum_tol = F::cast(1e-9);
    let entry_tol = F::cast(-1e-12);
    let floor = F::cast(MLE_PI_FLOOR);
    let mut clipped_entries = 0usize;
    // sufficient statistics: mean log-membership per component, plus moments
    // for the initializer
    let mut mean_log = Array1::<F>::zeros(k);
    let mut mean = Array1::<F>::zeros(k);
    let mut mean_sq = Array1::<F>::zeros(k);
    let inv_n = F::one() / F::cast(n as f64);
    for r in 0..n {
        let row = pi.row(r);
        let sum = row.sum();
        if (sum - F::one()).abs() > sum_tol || row.iter().any(|&v| v < entry_tol) {
            return Err(Error::InvalidParameter(format!(
                "row {r} is not on the probability simplex"
            )));
        }
        let mut clipped = Array1::<F>::zeros(k);
        let mut clipped_sum = F::zero();
        for j in 0..k {
            let value = row[j];
            let v = if value < floor {
                clipped_entries += 1;
                floor
            } else {
                value
            };
            clipped[j] = v;
            clipped_sum += v;
        }
        for j in 0..k {
            let v = clipped[j] / clipped_sum;
            mean_log[j] += v.ln() * inv_n;
            mean[j] += v * inv_n;
            mean_sq[j] += v * v * inv_n;
        }
    }

    let mut alpha = moment_init(&mean, &mean_sq);
    let grad_tol = F::cast(MLE_GRAD_TOL);
    let ceiling = F::cast(MLE_ALPHA_CEILING);
    let mut value = dirichlet_loglik(&alpha, &mean_log);
    let mut trace = vec![value];

    for it in 1..=MLE_MAX_ITER {
        let alpha0 = alpha.sum();
        let psi0 = digamma(alpha0);
        let mut grad = Array1::<F>::zeros(k);
        let mut worst = F::zero();
        for j in 0..k {
            grad[j] = psi0 - digamma(alpha[j]) + mean_log[j];
            worst = worst.max(grad[j].abs());
        }
        if worst < grad_tol {
            return Ok(DirichletMle {
                alpha,
                iterations: it - 1,
                trace,
                clipped_entries,
            });
        }

        // Newton direction via the diagonal-plus-rank-one inverse:
        // -H = diag(q) - b 1 1^T with q_j = trigamma(alpha_j),
        // b = trigamma(alpha_0); concavity keeps the Schur term positive.
        let b = trigamma(alpha0);
        let mut inv_q_sum = F::zero();
        let mut weighted = F::zero();
        let mut q = Array1::<F>::zeros(k);
        for j in 0..k {
            q[j] = trigamma(alpha[j]);
            inv_q_sum += F::one() / q[j];
            weighted += grad[j] / q[j];
        }
        let denom = F::one() - b * inv_q_sum;
        let mut direction = Array1::<F>::zeros(k);
        let newton = denom > F::zero();
        if newton {
            let factor = b * weighted / denom;
            for j in 0..k {
                direction[j] = (grad[j] + factor) / q[j];
            }
        } else {
            // numerically outside the concave regime: fall back to ascent
            // along the gradient
            direction.assign(&grad);
        }

        // The log-likelihood is evaluated with absolute rounding error on
        // the order of eps times the ln_gamma arguments (the shifted-series
        // intermediates dwarf the heavily cancelled result). Once the
        // predicted quadratic gain 0.5 g·d of the Newton step falls below
        // that floor, the measured-ascent test is pure noise and rejects
        // genuinely contracting steps, stalling the iterate just above the
        // gradient tolerance — take the positivity-damped full step
        // outright there; the true change is bounded by the (unobservable)
        // predicted gain. The stored value is clamped so the recorded
        // trace stays non-decreasing.
        let mut scale = F::one() + value.abs() + alpha0;
        for j in 0..k {
            scale += (alpha[j] - F::one()).abs() * mean_log[j].abs();
        }
        let noise = F::epsilon() * F::cast(16.0 * (k as f64 + 2.0)) * scale;
        let force = newton && F::cast(0.5) * grad.dot(&direction) < noise;

        // damped step: halve until the iterate is positive and (unless the
        // ascent test is below the noise floor) the log-likelihood does
        // not decrease
        let mut step = F::one();
        let mut accepted = false;
        while step >= F::cast(1e-16) {
            let candidate = &alpha + &(&direction * step);
            if candidate.iter().all(|&a| a > F::zero()) {
                let candidate_value = dirichlet_loglik(&candidate, &mean_log);
                if force || candidate_value >= value {
                    alpha = candidate;
                    value = value.max(candidate_value);
                    trace.push(value);
                    accepted = true;
                    break;
                }
            }
            step *= F::cast(0.5);
        }
        if !accepted {
            return Err(Error::MleNonConvergence { iterations: it });
        }
        if alpha.iter().any(|&a| a > ceiling) {
            return Err(Error::MleNonConvergence { iterations: it });
        }
    }
    Err(Error::MleNonConvergence {
        iterations: MLE_MAX_ITER,
    })
}

/// Mean Dirichlet log-likelihood given the mean-log sufficient statistic.
fn dirichlet_loglik<F: Scalar>(alpha: &Array1<F>, mean_log: &Array1<F>) -> F {
    let mut value = ln_gamma(alpha.sum());
    for j in 0..alpha.len() {
        value -= ln_gamma(alpha[j]);
        value += (alpha[j] - F::one()) * mean_log[j];
    }
    value
}

/// Method-of-moments initializer for the Newton solver.
fn moment_init<F: Scalar>(mean: &Array1<F>, mean_sq: &Array1<F>) -> Array1<F> {
    let k = mean.len();
    let mut total = F::zero();
    let mut positive = 0usize;
    for j in 0..k {
        let variance = mean_sq[j] - mean[j] * mean[j];
        if variance > F::cast(1e-12) {
            let s = mean[j] * (F::one() - mean[j]) / variance - F::one();
            if s > F::zero() {
                total += s;
                positive += 1;
            }
        }
    }
    let alpha0 = if positive > 0 {
        total / F::cast(positive as f64)
    } else {
        F::cast(k as f64)
    };
    let floor = F::cast(1e-3);
    let mut alpha = Array1::<F>::zeros(k);
    for j in 0..k {
        alpha[j] = (alpha0 * mean[j]).max(floor);
    }
    alpha
}

/// Minimizes the Frobenius error of `b_hat` over row-column relabelings
/// against `b`.
///
/// Exhaustive over all permutations up to [`EXHAUSTIVE_MATCH_LIMIT`]; beyond
/// that, an assignment on sorted-row profiles is used as a heuristic and the
/// result is flagged non-exhaustive.
pub fn match_permutation<F: Scalar>(
    b_hat: ArrayView2<F>,
    b: ArrayView2<F>,
) -> Result<PermutationMatch<F>> {
    let k = b.nrows();
    if b.ncols() != k || b_hat.nrows() != k || b_hat.ncols() != k {
        return Err(Error::InvalidParameter(format!(
            "permutation matching needs two square matrices of equal size, got {:?} and {:?}",
            b_hat.dim(),
            b.dim()
        )));
    }
    if k == 0 {
        return Err(Error::InvalidParameter(
            "cannot match empty matrices".to_string(),
        ));
    }
    let frobenius = |perm: &[usize]| -> F {
        let mut acc = F::zero();
        for i in 0..k {
            for j in 0..k {
                let diff = b_hat[(perm[i], perm[j])] - b[(i, j)];
                acc += diff * diff;
            }
        }
        acc.sqrt()
    };
    if k <= EXHAUSTIVE_MATCH_LIMIT {
        let mut best_perm: Vec<usize> = (0..k).collect();
        let mut best = F::infinity();
        for_each_permutation(k, &mut |perm| {
            let error = frobenius(perm);
            if error < best {
                best = error;
                best_perm = perm.to_vec();
            }
        });
        return Ok(PermutationMatch {
            perm: best_perm,
            error: best,
            optimal: true,
        });
    }
    // Sorted rows are invariant to the unknown relabeling, so they make a
    // usable per-index signature for assignment.
    let sorted_rows = |m: ArrayView2<F>| -> Vec<Vec<F>> {
        (0..k)
            .map(|i| {
                let mut row: Vec<F> = m.row(i).iter().cloned().collect();
                row.sort_by(|a, b| a.partial_cmp(b).expect("finite entries"));
                row
            })
            .collect()
    };
    let reference = sorted_rows(b);
    let estimate = sorted_rows(b_hat);
    let mut cost = Array2::<F>::zeros((k, k));
    for i in 0..k {
        for j in 0..k {
            let mut acc = F::zero();
            for t in 0..k {
                let diff = reference[i][t] - estimate[j][t];
                acc += diff * diff;
            }
            cost[(i, j)] = acc;
        }
    }
    let perm = hungarian(&cost);
    let error = frobenius(&perm);
    Ok(PermutationMatch {
        perm,
        error,
        optimal: false,
    })
}

/// Matches estimated vertices to reference vertices, minimizing the maximum
/// per-vertex Euclidean distance.
///
/// Exhaustive up to [`EXHAUSTIVE_MATCH_LIMIT`]; beyond that an assignment on
/// squared distances is used as a heuristic and flagged non-exhaustive.
pub fn match_vertices<F: Scalar>(
    v_hat: ArrayView2<F>,
    v: ArrayView2<F>,
) -> Result<PermutationMatch<F>> {
    if v_hat.dim() != v.dim() {
        return Err(Error::InvalidParameter(format!(
            "vertex matching needs equal shapes, got {:?} and {:?}",
            v_hat.dim(),
            v.dim()
        )));
    }
    let k = v.nrows();
    if k == 0 {
        return Err(Error::InvalidParameter(
            "cannot match empty vertex sets".to_string(),
        ));
    }
    let mut distance = Array2::<F>::zeros((k, k));
    for i in 0..k {
        for j in 0..k {
            let mut acc = F::zero();
            for c in 0..v.ncols() {
                let diff = v[(i, c)] - v_hat[(j, c)];
                acc += diff * diff;
            }
            distance[(i, j)] = acc;
        }
    }
    if k <= EXHAUSTIVE_MATCH_LIMIT {
        let mut best_perm: Vec<usize> = (0..k).collect();
        let mut best = F::infinity();
        for_each_permutation(k, &mut |perm| {
            let mut worst = F::zero();
            for i in 0..k {
                worst = worst.max(distance[(i, perm[i])]);
            }
            if worst < best {
                best = worst;
                best_perm = perm.to_vec();
            }
        });
        return Ok(PermutationMatch {
            perm: best_perm,
            error: best.sqrt(),
            optimal: true,
        });
    }
    let perm = hungarian(&distance);
    let mut worst = F::zero();
    for i in 0..k {
        worst = worst.max(distance[(i, perm[i])]);
    }
    Ok(PermutationMatch {
        perm,
        error: worst.sqrt(),
        optimal: false,
    })
}

/// Permutation-minimized maximum distance between two vertex sets.
pub fn vertex_error<F: Scalar>(v_hat: ArrayView2<F>, v: ArrayView2<F>) -> Result<F> {
    Ok(match_vertices(v_hat, v)?.error)
}

/// Calls `f` with every permutation of `0..k` (Heap's algorithm).
///
/// Factorial cost; callers gate on small `k` the way [`match_permutation`]
/// does with [`EXHAUSTIVE_MATCH_LIMIT`].
pub fn for_each_permutation(k: usize, f: &mut impl FnMut(&[usize])) {
    fn recurse(m: usize, items: &mut [usize], f: &mut impl FnMut(&[usize])) {
        if m <= 1 {
            f(items);
            return;
        }
        for i in 0..m {
            recurse(m - 1, items, f);
            if m % 2 == 0 {
                items.swap(i, m - 1);
            } else {
                items.swap(0, m - 1);
            }
        }
    }
    let mut items: Vec<usize> = (0..k).collect();
    recurse(k, &mut items, f);
}

/// Minimum-cost assignment on a square cost matrix; returns the column
/// assigned to each row.
fn hungarian<F: Scalar>(cost: &Array2<F>) -> Vec<usize> {
    let n = cost.nrows();
    debug_assert_eq!(cost.ncols(), n);
    // potentials-based shortest augmenting path, 1-based with column 0 as
    // the virtual source
    let mut u = vec![F::zero(); n + 1];
    let mut v = vec![F::zero(); n + 1];
    let mut matched = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched[0] = i;
        let mut j0 = 0usize;
        let mut min_slack = vec![F::infinity(); n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched[j0];
            let mut delta = F::infinity();
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let current = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                    if current < min_slack[j] {
                        min_slack[j] = current;
                        way[j] = j0;
                    }
                    if min_slack[j] < delta {
                        delta = min_slack[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if matched[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched[j0] = matched[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if matched[j] > 0 {
            assignment[matched[j] - 1] = j - 1;
        }
    }
    assignment
}

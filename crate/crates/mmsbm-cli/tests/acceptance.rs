//! Acceptance suite: ten end-to-end checks of the model/embedding/polytope/
//! estimation stack at desk scale, each printing one summary line.
//!
//! Criteria 4, 5, and 10 share one replicated sweep (grid × replicates ×
//! policies with paired seeds), computed once behind a `Lazy`.

use std::time::{Duration, Instant};

use ndarray::{array, Array1, Array2, ArrayView2, Axis};
use once_cell::sync::Lazy;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mmsbm::embedding::{
    eigen_topk_dense, eigen_topk_iterative, pca_project, procrustes_align, EmbedOptions,
    SymmetricOperator,
};
use mmsbm::estimation::{
    dirichlet_mle, estimate, estimate_from_positions, estimate_policies, match_permutation,
    match_vertices, ShrinkPolicy,
};
use mmsbm::model::{
    latent_positions, sample_dirichlet, sample_mmsbm, sample_mmsbm_conditional, sample_rdpg,
    MembershipMatrix, ModelSpec,
};
use mmsbm::polytope::{
    barycentric, contains, fit_mvecp, simplex_volume, symdiff_volume_mc, Polytope,
};
use mmsbm::Scalar;
use mmsbm_cli::sweep::vertex_error_aligned;

fn report(criterion: usize, label: &str, pass: bool) {
    println!(
        "[acceptance] criterion {criterion} ({label}): {}",
        if pass { "PASS" } else { "FAIL" }
    );
}

/// The running three-community connectivity matrix.
fn three_block() -> ModelSpec<f64> {
    ModelSpec::new(
        array![[0.9, 0.2, 0.3], [0.2, 0.9, 0.5], [0.3, 0.5, 0.9]],
        array![1.0, 1.0, 1.0],
    )
    .expect("valid model")
}

/// Rate constant calibrated so the shrink factor is exactly 0.9 at n = 10⁴.
fn a_star() -> f64 {
    0.1 * 1e4f64.sqrt() / 1e4f64.ln().sqrt()
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 0 {
        0.5 * (sorted[mid - 1] + sorted[mid])
    } else {
        sorted[mid]
    }
}

/// Least-squares slope of ln(y) on ln(x).
fn log_log_slope(xs: &[usize], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|&x| (x as f64).ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|&y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

const SWEEP_NS: [usize; 4] = [100, 500, 1000, 5000];
const SWEEP_REPLICATES: usize = 30;
const SYMDIFF_REPLICATES: usize = 20;
const SWEEP_SEED: u64 = 20_260_816;
/// Policy order in the shared sweep: uncorrected, fixed 10%, rate-calibrated.
const POLICY_NONE: usize = 0;
const POLICY_FIXED: usize = 1;
const POLICY_RATE: usize = 2;

struct SweepData {
    elapsed: Duration,
    /// `[n_index][policy][replicate]` connectivity errors.
    b_errors: Vec<Vec<Vec<f64>>>,
    /// `[n_index][policy][replicate]` aligned max vertex distances.
    vertex_errors: Vec<Vec<Vec<f64>>>,
    /// Per replicate (first [`SYMDIFF_REPLICATES`]): the uncorrected fitted
    /// polytope at n = 500 and n = 5000, same seed within a pair.
    mvecp_pairs: Vec<(Polytope<f64>, Polytope<f64>)>,
}

static SWEEP: Lazy<SweepData> = Lazy::new(|| {
    let started = Instant::now();
    let spec = three_block();
    let policies = [
        ShrinkPolicy::None,
        ShrinkPolicy::Fixed(0.9),
        ShrinkPolicy::Rate(a_star()),
    ];
    let mut b_errors = vec![vec![Vec::new(); policies.len()]; SWEEP_NS.len()];
    let mut vertex_errors = vec![vec![Vec::new(); policies.len()]; SWEEP_NS.len()];
    let mut at_500 = Vec::new();
    let mut at_5000 = Vec::new();
    for (ni, &n) in SWEEP_NS.iter().enumerate() {
        for r in 0..SWEEP_REPLICATES {
            let mut rng = ChaCha8Rng::seed_from_u64(SWEEP_SEED + r as u64);
            let graph = sample_mmsbm(&spec, n, &mut rng).expect("sampling succeeds");
            let results = estimate_policies(
                &graph,
                spec.k(),
                spec.d(),
                &policies,
                &EmbedOptions::default(),
            )
            .expect("estimation succeeds");
            for (p, result) in results.iter().enumerate() {
                let b_err = match_permutation(result.b_hat.view(), spec.b().view())
                    .expect("square matrices")
                    .error;
                let v_err = vertex_error_aligned(
                    result.s_hat.vertices().view(),
                    spec.vertex_matrix().view(),
                )
                .expect("matching vertex counts");
                b_errors[ni][p].push(b_err);
                vertex_errors[ni][p].push(v_err);
            }
            if r < SYMDIFF_REPLICATES {
                if n == 500 {
                    at_500.push(results[POLICY_NONE].s_hat.clone());
                } else if n == 5000 {
                    at_5000.push(results[POLICY_NONE].s_hat.clone());
                }
            }
        }
    }
    SweepData {
        elapsed: started.elapsed(),
        b_errors,
        vertex_errors,
        mvecp_pairs: at_500.into_iter().zip(at_5000).collect(),
    }
});

#[test]
fn criterion_01_factorization_reproduces_edge_probabilities() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0001);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let k = 1 + (rand::Rng::random_range(&mut rng, 0..5usize));
        // W W' / k is symmetric positive definite with entries in [0, 1)
        let mut w = Array2::<f64>::zeros((k, k));
        for v in w.iter_mut() {
            *v = f64::unit_uniform(&mut rng);
        }
        let b = w.dot(&w.t()) / k as f64;
        let spec = ModelSpec::new(b.clone(), Array1::from_elem(k, 1.0)).expect("positive definite");
        let pi = sample_dirichlet(spec.alpha().view(), 40, &mut rng).expect("valid alpha");
        let x = latent_positions(&spec, &pi).expect("matching blocks");
        let probs = pi.matrix().dot(&b).dot(&pi.matrix().t());
        let gram = x.matrix().dot(&x.matrix().t());
        for (p, g) in probs.iter().zip(gram.iter()) {
            worst = worst.max((p - g).abs());
        }
    }
    let elapsed = started.elapsed();
    let pass = worst < 1e-10 && elapsed < Duration::from_secs(5);
    report(1, "exact factorization of edge probabilities", pass);
    assert!(pass, "worst deviation {worst:e}, elapsed {elapsed:?}");
}

#[test]
fn criterion_02_blockmodel_and_dot_product_samplers_agree() {
    let started = Instant::now();
    let spec = three_block();
    let pi = MembershipMatrix::new(array![
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.5, 0.3, 0.2],
        [0.2, 0.2, 0.6],
    ])
    .expect("simplex rows");
    let x = latent_positions(&spec, &pi).expect("matching blocks");
    let replicates = 20_000usize;
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0002);
    let mut count = |edges_of: &mut dyn FnMut(&mut ChaCha8Rng) -> Vec<(u32, u32)>| {
        let mut counts = [[0usize; 5]; 5];
        for _ in 0..replicates {
            for (i, j) in edges_of(&mut rng) {
                counts[i as usize][j as usize] += 1;
            }
        }
        counts
    };
    let mmsbm_counts = count(&mut |rng| {
        sample_mmsbm_conditional(&spec, &pi, rng)
            .expect("sampling succeeds")
            .edges()
            .to_vec()
    });
    let rdpg_counts = count(&mut |rng| {
        sample_rdpg(&x, rng)
            .expect("probabilities in range")
            .edges()
            .to_vec()
    });

    let r = replicates as f64;
    let mut worst_sigma = 0.0f64;
    for i in 0..5 {
        for j in (i + 1)..5 {
            let f1 = mmsbm_counts[i][j] as f64 / r;
            let f2 = rdpg_counts[i][j] as f64 / r;
            let pooled_se = (f1 * (1.0 - f1) / r + f2 * (1.0 - f2) / r).sqrt();
            worst_sigma = worst_sigma.max((f1 - f2).abs() / pooled_se);
        }
    }
    let elapsed = started.elapsed();
    let pass = worst_sigma <= 3.0 && elapsed < Duration::from_secs(30);
    report(2, "sampler distributional equivalence", pass);
    assert!(
        pass,
        "worst pair deviation {worst_sigma:.2} pooled SEs, elapsed {elapsed:?}"
    );
}

#[test]
fn criterion_03_noiseless_positions_recover_the_model() {
    let started = Instant::now();
    let spec = three_block();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0003);
    let interior = sample_dirichlet(spec.alpha().view(), 300, &mut rng).expect("valid alpha");
    let mut pi_rows = Array2::<f64>::zeros((303, 3));
    for (mut dst, src) in pi_rows.rows_mut().into_iter().zip(interior.matrix().rows()) {
        dst.assign(&src);
    }
    for j in 0..3 {
        pi_rows[(300 + j, j)] = 1.0; // pure rows put the vertices in the cloud
    }
    let pi = MembershipMatrix::new(pi_rows.clone()).expect("simplex rows");
    let x = latent_positions(&spec, &pi).expect("matching blocks");

    let result = estimate_from_positions(x.matrix().view(), 3, ShrinkPolicy::None)
        .expect("estimation succeeds");
    let matched = match_permutation(result.b_hat.view(), spec.b().view()).expect("square matrices");
    let pi_hat = result.pi_hat.as_ref().expect("k = d");
    let mut pi_err = 0.0f64;
    for row in 0..pi_rows.nrows() {
        for (i, &src) in matched.perm.iter().enumerate() {
            pi_err = pi_err.max((pi_hat[(row, src)] - pi_rows[(row, i)]).abs());
        }
    }
    let elapsed = started.elapsed();
    let pass = matched.error < 1e-6 && pi_err < 1e-8 && elapsed < Duration::from_secs(5);
    report(3, "noiseless pipeline exactness", pass);
    assert!(
        pass,
        "B error {:e}, membership error {pi_err:e}, elapsed {elapsed:?}",
        matched.error
    );
}

#[test]
fn criterion_04_vertex_distance_follows_the_rate() {
    let data = &*SWEEP;
    let medians: Vec<f64> = data
        .vertex_errors
        .iter()
        .map(|by_policy| median(&by_policy[POLICY_NONE]))
        .collect();
    let decreasing = medians.windows(2).all(|w| w[1] < w[0]);
    let slope = log_log_slope(&SWEEP_NS, &medians);
    let pass =
        decreasing && (-0.7..=-0.3).contains(&slope) && data.elapsed < Duration::from_secs(30 * 60);
    report(4, "vertex distance decay rate", pass);
    assert!(
        pass,
        "medians {medians:?}, slope {slope:.4}, sweep elapsed {:?}",
        data.elapsed
    );
}

#[test]
fn criterion_05_rate_policy_dominates_fixed_choices() {
    let data = &*SWEEP;
    let mut pass = true;
    let mut detail = String::new();
    for (ni, &n) in SWEEP_NS.iter().enumerate() {
        let none = median(&data.b_errors[ni][POLICY_NONE]);
        let fixed = median(&data.b_errors[ni][POLICY_FIXED]);
        let rate = median(&data.b_errors[ni][POLICY_RATE]);
        pass &= rate <= none;
        pass &= n > 5000 || rate <= fixed;
        detail.push_str(&format!(
            "n={n}: none {none:.4} fixed {fixed:.4} rate {rate:.4}; "
        ));
    }
    // regression floor for the calibrated policy at the largest grid point
    let rate_at_5000 = median(&data.b_errors[SWEEP_NS.len() - 1][POLICY_RATE]);
    pass &= rate_at_5000 < 0.35;
    report(5, "shrink policy ordering", pass);
    assert!(pass, "{detail}rate@5000 {rate_at_5000:.4}");
}

#[test]
fn criterion_06_calibrated_rate_matches_fixed_shrink_at_calibration_size() {
    let spec = three_block();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0006);
    let graph = sample_mmsbm(&spec, 10_000, &mut rng).expect("sampling succeeds");
    // two independent full pipeline runs, not a shared fit
    let fixed = estimate(&graph, 3, 3, ShrinkPolicy::Fixed(0.9)).expect("estimation succeeds");
    let rate = estimate(&graph, 3, 3, ShrinkPolicy::Rate(a_star())).expect("estimation succeeds");
    let mut worst = 0.0f64;
    for (a, b) in fixed
        .s_hat
        .vertices()
        .iter()
        .zip(rate.s_hat.vertices().iter())
    {
        worst = worst.max((a - b).abs());
    }
    let pass = worst <= 1e-12;
    report(6, "shrink policy coincidence at the calibration size", pass);
    assert!(pass, "max vertex coordinate difference {worst:e}");
}

/// Independent log-gamma (Lanczos, g = 7) for the grid oracle; the library
/// route uses a shifted Stirling series, so agreement is meaningful.
fn ln_gamma_oracle(x: f64) -> f64 {
    // Published table digits, kept verbatim past f64 round-trip length.
    #[allow(clippy::excessive_precision)]
    const COEFFS: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma_oracle(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEFFS[0];
    for (i, &c) in COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

#[test]
fn criterion_07_dirichlet_mle_matches_grid_oracle() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0007);
    let pi =
        sample_dirichlet(array![1.0f64, 1.0, 1.0].view(), 100_000, &mut rng).expect("valid alpha");
    let fit = dirichlet_mle(pi.matrix().view()).expect("converges");

    // sufficient statistics: mean log-coordinates
    let n = pi.matrix().nrows() as f64;
    let mut mean_log = [0.0f64; 3];
    for row in pi.matrix().rows() {
        for j in 0..3 {
            mean_log[j] += row[j].ln();
        }
    }
    for m in mean_log.iter_mut() {
        *m /= n;
    }
    // exhaustive grid over [0.5, 2]^3, step 0.025
    let grid: Vec<f64> = (0..=60).map(|t| 0.5 + 0.025 * t as f64).collect();
    let mut best = (f64::NEG_INFINITY, [0.0f64; 3]);
    for &a0 in &grid {
        for &a1 in &grid {
            for &a2 in &grid {
                let total = a0 + a1 + a2;
                let value = ln_gamma_oracle(total)
                    - ln_gamma_oracle(a0)
                    - ln_gamma_oracle(a1)
                    - ln_gamma_oracle(a2)
                    + (a0 - 1.0) * mean_log[0]
                    + (a1 - 1.0) * mean_log[1]
                    + (a2 - 1.0) * mean_log[2];
                if value > best.0 {
                    best = (value, [a0, a1, a2]);
                }
            }
        }
    }
    let vs_truth = fit
        .alpha
        .iter()
        .map(|a| (a - 1.0).abs())
        .fold(0.0f64, f64::max);
    let vs_grid = fit
        .alpha
        .iter()
        .zip(best.1.iter())
        .map(|(a, g)| (a - g).abs())
        .fold(0.0f64, f64::max);
    let elapsed = started.elapsed();
    let pass = vs_truth < 0.05 && vs_grid < 0.05 && elapsed < Duration::from_secs(60);
    report(7, "Dirichlet likelihood maximizer vs grid oracle", pass);
    assert!(
        pass,
        "alpha {:?}, grid argmax {:?}, |vs truth| {vs_truth:.4}, |vs grid| {vs_grid:.4}, elapsed {elapsed:?}",
        fit.alpha, best.1
    );
}

/// Convex-hull area by monotone chain + shoelace; independent of the fitting
/// code's geometry.
fn hull_area_oracle(points: ArrayView2<f64>) -> f64 {
    let mut pts: Vec<(f64, f64)> = points.rows().into_iter().map(|r| (r[0], r[1])).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    pts.dedup();
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| -> f64 {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().chain(pts.iter().rev().skip(1)) {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            let boundary = hull.len() == pts.len() + 1;
            if boundary {
                break;
            }
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    let mut twice_area = 0.0;
    for i in 0..hull.len() {
        let (x0, y0) = hull[i];
        let (x1, y1) = hull[(i + 1) % hull.len()];
        twice_area += x0 * y1 - x1 * y0;
    }
    0.5 * twice_area.abs()
}

#[test]
fn criterion_08_fitted_polytopes_are_tight_enclosures() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0008);
    for cloud_index in 0..50 {
        // random triangle, points drawn as convex combinations of its corners
        let mut corners = Array2::<f64>::zeros((3, 2));
        for v in corners.iter_mut() {
            *v = f64::standard_normal(&mut rng);
        }
        let weights =
            sample_dirichlet(array![1.0, 1.0, 1.0].view(), 1000, &mut rng).expect("valid alpha");
        let points = weights.matrix().dot(&corners);
        let fitted = fit_mvecp(points.view(), 3).expect("nondegenerate cloud");

        for row in points.rows() {
            assert!(
                contains(&fitted, row, 1e-9),
                "cloud {cloud_index}: point escaped the fitted polytope"
            );
        }
        let volume = simplex_volume(&fitted).expect("triangle");
        let hull = hull_area_oracle(points.view());
        assert!(
            volume >= hull - 1e-9 * hull.max(1.0),
            "cloud {cloud_index}: fitted volume {volume} below hull volume {hull}"
        );
        // single-facet local minimality: translating any one facet inward to
        // the nearest point gains at most the fit's own relative tolerance
        let mut worst_gain = 0.0f64;
        for facet in 0..3 {
            let mut slack = f64::INFINITY;
            for row in points.rows() {
                let coords = barycentric(&fitted, row).expect("nondegenerate");
                slack = slack.min(coords[facet]);
            }
            let gain = 1.0 - (1.0 - slack.max(0.0)).powi(2);
            worst_gain = worst_gain.max(gain);
        }
        assert!(
            worst_gain <= 1e-6 + 1e-9,
            "cloud {cloud_index}: single-facet volume gain {worst_gain:e}"
        );
    }
    let elapsed = started.elapsed();
    let pass = elapsed < Duration::from_secs(60);
    report(8, "enclosing polytope tightness properties", pass);
    assert!(pass, "elapsed {elapsed:?}");
}

struct DenseOp(Array2<f64>);

impl SymmetricOperator<f64> for DenseOp {
    fn dim(&self) -> usize {
        self.0.nrows()
    }
    fn apply(&self, x: ArrayView2<f64>, y: &mut Array2<f64>) {
        y.assign(&self.0.dot(&x));
    }
    fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[test]
fn criterion_09_iterative_eigensolver_matches_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0009);
    let mut worst_value = 0.0f64;
    let mut worst_angle = 0.0f64;
    for trial in 0..50 {
        let mut g = Array2::<f64>::zeros((200, 200));
        for v in g.iter_mut() {
            *v = f64::standard_normal(&mut rng);
        }
        let a = (&g + &g.t()) * 0.5;
        let (dense_values, dense_vectors) = eigen_topk_dense(a.view(), 3).expect("symmetric");
        let op = DenseOp(a);
        let tol = 1e-11 * op.frobenius_norm();
        let (values, vectors, _residual, _iters) =
            eigen_topk_iterative(&op, 3, tol, 10_000, 0xACCE_0009 + trial).expect("converges");
        for col in 0..3 {
            worst_value = worst_value.max((values[col] - dense_values[col]).abs());
            let dot = vectors.column(col).dot(&dense_vectors.column(col));
            let angle = dot.abs().min(1.0).acos();
            worst_angle = worst_angle.max(angle);
        }
    }
    let pass = worst_value <= 1e-8 && worst_angle <= 1e-6;
    report(9, "iterative eigensolver vs dense oracle", pass);
    assert!(
        pass,
        "worst eigenvalue deviation {worst_value:e}, worst angle {worst_angle:e}"
    );
}

/// Expresses a fitted polytope in the plane of the true simplex: match
/// vertices, Procrustes-align, then drop to the true polytope's principal
/// coordinates (both polytopes have k = d, so their affine hulls are planes
/// and volumes must be measured there).
fn plane_coordinates(
    fitted: &Polytope<f64>,
    v_true: ArrayView2<f64>,
    mean: &Array1<f64>,
    basis: &Array2<f64>,
) -> Array2<f64> {
    let matched = match_vertices(fitted.vertices().view(), v_true).expect("equal shapes");
    let selected = fitted.vertices().select(Axis(0), &matched.perm);
    let (w, _) = procrustes_align(selected.view(), v_true).expect("full-rank sets");
    let aligned = selected.dot(&w);
    (&aligned - &mean.view().insert_axis(Axis(0))).dot(basis)
}

#[test]
fn criterion_10_symmetric_difference_shrinks_with_n() {
    let data = &*SWEEP;
    let spec = three_block();
    let (true_plane, frame) = pca_project(spec.vertex_matrix().view(), 2).expect("planar simplex");
    let true_poly = Polytope::new(true_plane).expect("nondegenerate");
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0010);
    let mut improved = 0usize;
    let total = data.mvecp_pairs.len();
    for (small, large) in &data.mvecp_pairs {
        let mut volume_of = |poly: &Polytope<f64>| -> f64 {
            let coords =
                plane_coordinates(poly, spec.vertex_matrix().view(), &frame.mean, &frame.basis);
            let poly2 = Polytope::new(coords).expect("nondegenerate");
            symdiff_volume_mc(&poly2, &true_poly, 200_000, &mut rng)
                .expect("same dimension")
                .volume
        };
        let at_500 = volume_of(small);
        let at_5000 = volume_of(large);
        if at_5000 < at_500 {
            improved += 1;
        }
    }
    let pass = total == SYMDIFF_REPLICATES && improved * 5 >= total * 4;
    report(10, "symmetric-difference consistency trend", pass);
    assert!(pass, "improved in {improved} of {total} paired replicates");
}

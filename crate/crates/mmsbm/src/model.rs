//! Model parameters and samplers.
//!
//! A model is a symmetric connectivity matrix `B` (entries in `[0, 1]`,
//! non-negative definite) together with a positive Dirichlet concentration
//! vector `alpha`.  Node memberships are Dirichlet draws on the simplex; for
//! every unordered node pair each endpoint picks a block from its own
//! membership row and an edge appears with the connectivity probability of
//! that block pair.  Because `B` factors as `B = U diag(s) U^T` with
//! non-negative `s`, the same graph law arises from latent positions
//! `X = Pi U diag(s)^{1/2}` with edge probabilities `<x_i, x_j>`; both
//! samplers are provided and agree in distribution.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;

/// Symmetry slack allowed in a connectivity matrix.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Most-negative eigenvalue tolerated before `B` is rejected.
pub const DEFINITENESS_TOL: f64 = -1e-10;
/// Relative eigenvalue threshold that decides the embedding rank `d`.
pub const RANK_TOL: f64 = 1e-10;
/// Row-sum slack allowed in a membership matrix.
pub const SIMPLEX_TOL: f64 = 1e-12;
/// Slack allowed on pairwise dot products of latent positions.
pub const DOT_PRODUCT_TOL: f64 = 1e-10;
/// Largest node count the dense adjacency helper will materialize.
pub const DENSIFY_LIMIT: usize = 20_000;

/// Validated model parameters: connectivity matrix, concentration vector, and
/// the derived embedding rank.
#[derive(Debug, Clone)]
pub struct ModelSpec<F: Scalar> {
    b: Array2<F>,
    alpha: Array1<F>,
    d: usize,
    /// `k x d` matrix whose rows are the exact latent-position vertices:
    /// `U_d diag(s_d)^{1/2}` from the spectral factorization of `b`.
    vertex_matrix: Array2<F>,
}

impl<F: Scalar> ModelSpec<F> {
    /// Validates `b` and `alpha` and derives the rank `d`.
    ///
    /// `b` must be square, symmetric within [`SYMMETRY_TOL`], with entries in
    /// `[0, 1]` and smallest eigenvalue above [`DEFINITENESS_TOL`]; `alpha`
    /// must match `b`'s size with positive finite entries.
    pub fn new(b: Array2<F>, alpha: Array1<F>) -> Result<Self> {
        let k = b.nrows();
        if k == 0 || b.ncols() != k {
            return Err(Error::InvalidParameter(format!(
                "connectivity matrix must be non-empty and square, got {}x{}",
                b.nrows(),
                b.ncols()
            )));
        }
        if alpha.len() != k {
            return Err(Error::InvalidParameter(format!(
                "alpha has {} entries but B is {k}x{k}",
                alpha.len()
            )));
        }
        let sym_tol = F::cast(SYMMETRY_TOL);
        for i in 0..k {
            for j in 0..k {
                let v = b[(i, j)];
                if !v.is_finite() || v < F::zero() || v > F::one() {
                    return Err(Error::InvalidParameter(format!(
                        "B[{i}][{j}] = {v} is outside [0, 1]"
                    )));
                }
                if (v - b[(j, i)]).abs() > sym_tol {
                    return Err(Error::InvalidParameter(format!(
                        "B is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        for (j, &a) in alpha.iter().enumerate() {
            if !a.is_finite() || a <= F::zero() {
                return Err(Error::InvalidParameter(format!(
                    "alpha[{j}] = {a} must be positive and finite"
                )));
            }
        }
        let eig = linalg::symmetric_eigen(b.view())?;
        let smallest = eig.values[0];
        if smallest < F::cast(DEFINITENESS_TOL) {
            return Err(Error::NotNonNegativeDefinite {
                eigenvalue: smallest.to_f64().unwrap_or(f64::NAN),
            });
        }
        let largest = eig.values[k - 1].max(F::zero());
        let rank_cut = F::cast(RANK_TOL) * largest;
        // eigenvalues exceeding the relative rank tolerance, largest first
        let mut kept: Vec<usize> = (0..k)
            .filter(|&i| eig.values[i] > rank_cut && eig.values[i] > F::zero())
            .collect();
        kept.sort_by(|&a, &b| eig.values[b].partial_cmp(&eig.values[a]).expect("finite"));
        let d = kept.len();
        let mut vertex_matrix = Array2::<F>::zeros((k, d));
        for (col, &src) in kept.iter().enumerate() {
            let root = eig.values[src].sqrt();
            for row in 0..k {
                vertex_matrix[(row, col)] = eig.vectors[(row, src)] * root;
            }
        }
        Ok(Self {
            b,
            alpha,
            d,
            vertex_matrix,
        })
    }

    /// Number of blocks.
    pub fn k(&self) -> usize {
        self.b.nrows()
    }

    /// Embedding rank: the count of eigenvalues of `B` above the relative
    /// rank tolerance.
    pub fn d(&self) -> usize {
        self.d
    }

    /// Connectivity matrix.
    pub fn b(&self) -> &Array2<F> {
        &self.b
    }

    /// Concentration vector.
    pub fn alpha(&self) -> &Array1<F> {
        &self.alpha
    }

    /// `k x d` matrix whose rows are the latent-position simplex vertices.
    pub fn vertex_matrix(&self) -> &Array2<F> {
        &self.vertex_matrix
    }
}

/// Row-stochastic membership matrix; every row lies on the simplex.
#[derive(Debug, Clone)]
pub struct MembershipMatrix<F: Scalar>(Array2<F>);

impl<F: Scalar> MembershipMatrix<F> {
    /// Validates that every row is a probability vector within
    /// [`SIMPLEX_TOL`].
    pub fn new(pi: Array2<F>) -> Result<Self> {
        let tol = F::cast(SIMPLEX_TOL);
        for (i, row) in pi.rows().into_iter().enumerate() {
            let mut sum = F::zero();
            for &v in row {
                if !v.is_finite() || v < F::zero() {
                    return Err(Error::InvalidParameter(format!(
                        "membership row {i} has a negative or non-finite entry"
                    )));
                }
                sum += v;
            }
            if (sum - F::one()).abs() > tol {
                return Err(Error::InvalidParameter(format!(
                    "membership row {i} sums to {sum}, not 1"
                )));
            }
        }
        Ok(Self(pi))
    }

    /// Number of nodes.
    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    /// Number of blocks.
    pub fn k(&self) -> usize {
        self.0.ncols()
    }

    /// The underlying `n x k` matrix.
    pub fn matrix(&self) -> &Array2<F> {
        &self.0
    }

    /// Consumes the wrapper.
    pub fn into_matrix(self) -> Array2<F> {
        self.0
    }
}

/// Latent positions, one node per row.
#[derive(Debug, Clone)]
pub struct LatentPositions<F: Scalar>(Array2<F>);

impl<F: Scalar> LatentPositions<F> {
    /// Wraps a position matrix after checking entries are finite.  Pairwise
    /// dot products are validated lazily where they are consumed (the RDPG
    /// sampler), since the full check is quadratic; [`Self::validate_dots`]
    /// runs it eagerly.
    pub fn new(x: Array2<F>) -> Result<Self> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "latent positions must be finite".to_string(),
            ));
        }
        Ok(Self(x))
    }

    /// Number of nodes.
    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        self.0.ncols()
    }

    /// The underlying `n x d` matrix.
    pub fn matrix(&self) -> &Array2<F> {
        &self.0
    }

    /// Checks every pairwise dot product lies in
    /// `[-DOT_PRODUCT_TOL, 1 + DOT_PRODUCT_TOL]`.  Quadratic; intended for
    /// tests and small inputs.
    pub fn validate_dots(&self) -> Result<()> {
        let lo = -F::cast(DOT_PRODUCT_TOL);
        let hi = F::one() + F::cast(DOT_PRODUCT_TOL);
        let n = self.n();
        for i in 0..n {
            for j in (i + 1)..n {
                let p = self.0.row(i).dot(&self.0.row(j));
                if p < lo || p > hi {
                    return Err(Error::InvalidParameter(format!(
                        "dot product of positions {i} and {j} is {p}, outside [0, 1]"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Ground truth attached to a sampled graph.
#[derive(Debug, Clone)]
pub struct GraphTruth<F: Scalar> {
    /// Sampled memberships, one row per node.
    pub memberships: MembershipMatrix<F>,
    /// Exact latent positions `Pi U diag(s)^{1/2}`.
    pub positions: LatentPositions<F>,
}

/// An undirected simple graph stored as a sorted upper-triangle edge list.
#[derive(Debug, Clone)]
pub struct GraphSample<F: Scalar> {
    n: usize,
    edges: Vec<(u32, u32)>,
    truth: Option<GraphTruth<F>>,
}

impl<F: Scalar> GraphSample<F> {
    /// Validates that `edges` is strictly increasing lexicographically with
    /// `i < j < n` for every pair.
    pub fn new(n: usize, edges: Vec<(u32, u32)>, truth: Option<GraphTruth<F>>) -> Result<Self> {
        if n > u32::MAX as usize {
            return Err(Error::InvalidParameter(format!(
                "node count {n} exceeds the supported maximum"
            )));
        }
        let mut prev: Option<(u32, u32)> = None;
        for (idx, &(i, j)) in edges.iter().enumerate() {
            if i >= j {
                return Err(Error::InvalidParameter(format!(
                    "edge {idx} = ({i}, {j}) must have i < j"
                )));
            }
            if (j as usize) >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge {idx} = ({i}, {j}) references a node >= n = {n}"
                )));
            }
            if let Some(p) = prev {
                if (i, j) <= p {
                    return Err(Error::InvalidParameter(format!(
                        "edge list is not strictly sorted at position {idx}"
                    )));
                }
            }
            prev = Some((i, j));
        }
        if let Some(t) = &truth {
            if t.memberships.n() != n || t.positions.n() != n {
                return Err(Error::InvalidParameter(
                    "truth matrices must have one row per node".to_string(),
                ));
            }
        }
        Ok(Self { n, edges, truth })
    }

    /// Node count.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Sorted upper-triangle edge list.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    /// Number of edges.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Attached ground truth, when the graph came from a model sampler.
    pub fn truth(&self) -> Option<&GraphTruth<F>> {
        self.truth.as_ref()
    }

    /// Edge density `2m / (n (n-1))`; zero for graphs with fewer than two
    /// nodes.
    pub fn density(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let pairs = self.n as f64 * (self.n as f64 - 1.0) / 2.0;
        self.edges.len() as f64 / pairs
    }

    /// Dense symmetric 0/1 adjacency with zero diagonal.  Guarded by
    /// [`DENSIFY_LIMIT`] because the result is quadratic in `n`.
    pub fn densify(&self) -> Result<Array2<F>> {
        if self.n > DENSIFY_LIMIT {
            return Err(Error::InvalidParameter(format!(
                "refusing to densify a graph with n = {} > {DENSIFY_LIMIT}",
                self.n
            )));
        }
        let mut a = Array2::<F>::zeros((self.n, self.n));
        for &(i, j) in &self.edges {
            a[(i as usize, j as usize)] = F::one();
            a[(j as usize, i as usize)] = F::one();
        }
        Ok(a)
    }

    /// Relabels nodes: node `i` becomes `perm[i]`.  `perm` must be a
    /// permutation of `0..n`.  Truth rows are permuted alongside.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::InvalidParameter(
                "permutation length must equal node count".to_string(),
            ));
        }
        let mut seen = vec![false; self.n];
        for &p in perm {
            if p >= self.n || seen[p] {
                return Err(Error::InvalidParameter(
                    "relabel requires a permutation of 0..n".to_string(),
                ));
            }
            seen[p] = true;
        }
        let mut edges: Vec<(u32, u32)> = self
            .edges
            .iter()
            .map(|&(i, j)| {
                let a = perm[i as usize] as u32;
                let b = perm[j as usize] as u32;
                (a.min(b), a.max(b))
            })
            .collect();
        edges.sort_unstable();
        let truth = self.truth.as_ref().map(|t| {
            let k = t.memberships.k();
            let d = t.positions.dim();
            let mut pi = Array2::<F>::zeros((self.n, k));
            let mut x = Array2::<F>::zeros((self.n, d));
            for i in 0..self.n {
                for c in 0..k {
                    pi[(perm[i], c)] = t.memberships.matrix()[(i, c)];
                }
                for c in 0..d {
                    x[(perm[i], c)] = t.positions.matrix()[(i, c)];
                }
            }
            GraphTruth {
                memberships: MembershipMatrix(pi),
                positions: LatentPositions(x),
            }
        });
        GraphSample::new(self.n, edges, truth)
    }
}

/// Samples `n` membership rows from `Dirichlet(alpha)`.
///
/// Deterministic given the RNG state; rows are normalized gamma draws, with a
/// retry guard against the (measure-zero, underflow-induced) all-zero row.
pub fn sample_dirichlet<F: Scalar, R: Rng + ?Sized>(
    alpha: ArrayView1<F>,
    n: usize,
    rng: &mut R,
) -> Result<MembershipMatrix<F>> {
    let k = alpha.len();
    if k == 0 {
        return Err(Error::InvalidParameter(
            "alpha must be non-empty".to_string(),
        ));
    }
    for (j, &a) in alpha.iter().enumerate() {
        if !a.is_finite() || a <= F::zero() {
            return Err(Error::InvalidParameter(format!(
                "alpha[{j}] = {a} must be positive and finite"
            )));
        }
    }
    let mut pi = Array2::<F>::zeros((n, k));
    for mut row in pi.rows_mut() {
        let mut tries = 0;
        loop {
            let mut sum = F::zero();
            for (j, slot) in row.iter_mut().enumerate() {
                let g = F::standard_gamma(rng, alpha[j]);
                *slot = g;
                sum += g;
            }
            if sum > F::zero() {
                for slot in row.iter_mut() {
                    *slot /= sum;
                }
                break;
            }
            tries += 1;
            if tries > 100 {
                return Err(Error::DegenerateInput(
                    "dirichlet sampling underflowed repeatedly".to_string(),
                ));
            }
        }
    }
    MembershipMatrix::new(pi)
}

/// Exact latent positions `Pi U diag(s)^{1/2}` for a membership matrix under
/// a model; rows of the result have pairwise dot products
/// `pi_i^T B pi_j`.
pub fn latent_positions<F: Scalar>(
    spec: &ModelSpec<F>,
    pi: &MembershipMatrix<F>,
) -> Result<LatentPositions<F>> {
    if pi.k() != spec.k() {
        return Err(Error::InvalidParameter(format!(
            "membership has {} blocks but model has {}",
            pi.k(),
            spec.k()
        )));
    }
    LatentPositions::new(pi.matrix().dot(spec.vertex_matrix()))
}

/// Exact edge probability `pi_i^T B pi_j` between two membership rows.
pub fn edge_probability<F: Scalar>(
    spec: &ModelSpec<F>,
    pi_i: ArrayView1<F>,
    pi_j: ArrayView1<F>,
) -> Result<F> {
    if pi_i.len() != spec.k() || pi_j.len() != spec.k() {
        return Err(Error::InvalidParameter(
            "membership rows must have k entries".to_string(),
        ));
    }
    Ok(pi_i.dot(&spec.b().dot(&pi_j)))
}

/// One categorical draw from a probability row via inverse CDF.
#[inline]
fn draw_categorical<F: Scalar>(row: &[F], u: F) -> usize {
    let mut acc = F::zero();
    for (idx, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return idx;
        }
    }
    row.len() - 1
}

/// Samples a graph from the blockmodel given fixed memberships: for each pair
/// `i < j` both endpoints draw a block from their own membership row and the
/// edge appears with probability `B[z_i][z_j]`.
///
/// Pairs are visited in lexicographic order and consume exactly three uniform
/// draws each, so the output is a pure function of `(b, pi, rng state)`.
pub fn sample_mmsbm_conditional<F: Scalar, R: Rng + ?Sized>(
    spec: &ModelSpec<F>,
    pi: &MembershipMatrix<F>,
    rng: &mut R,
) -> Result<GraphSample<F>> {
    if pi.k() != spec.k() {
        return Err(Error::InvalidParameter(format!(
            "membership has {} blocks but model has {}",
            pi.k(),
            spec.k()
        )));
    }
    let n = pi.n();
    let k = spec.k();
    let b = spec.b();
    let flat: Vec<F> = pi.matrix().iter().copied().collect();
    let mut edges: Vec<(u32, u32)> = Vec::new();
    for i in 0..n {
        let row_i = &flat[i * k..(i + 1) * k];
        for j in (i + 1)..n {
            let row_j = &flat[j * k..(j + 1) * k];
            let zi = draw_categorical(row_i, F::unit_uniform(rng));
            let zj = draw_categorical(row_j, F::unit_uniform(rng));
            let u = F::unit_uniform(rng);
            if u < b[(zi, zj)] {
                edges.push((i as u32, j as u32));
            }
        }
    }
    let positions = latent_positions(spec, pi)?;
    GraphSample::new(
        n,
        edges,
        Some(GraphTruth {
            memberships: pi.clone(),
            positions,
        }),
    )
}

/// Samples memberships from `Dirichlet(alpha)` and then a graph from the
/// blockmodel; the result carries the sampled truth.
pub fn sample_mmsbm<F: Scalar, R: Rng + ?Sized>(
    spec: &ModelSpec<F>,
    n: usize,
    rng: &mut R,
) -> Result<GraphSample<F>> {
    let pi = sample_dirichlet(spec.alpha().view(), n, rng)?;
    sample_mmsbm_conditional(spec, &pi, rng)
}

/// Samples a random dot product graph: each pair `i < j` is an independent
/// Bernoulli with probability `<x_i, x_j>`, clipped to `[0, 1]` within
/// [`DOT_PRODUCT_TOL`].  Dot products outside the tolerated band are an
/// error.  Consumes one uniform draw per pair in lexicographic order.
pub fn sample_rdpg<F: Scalar, R: Rng + ?Sized>(
    x: &LatentPositions<F>,
    rng: &mut R,
) -> Result<GraphSample<F>> {
    let n = x.n();
    let dim = x.dim();
    let lo = -F::cast(DOT_PRODUCT_TOL);
    let hi = F::one() + F::cast(DOT_PRODUCT_TOL);
    let flat: Vec<F> = x.matrix().iter().copied().collect();
    let mut edges: Vec<(u32, u32)> = Vec::new();
    for i in 0..n {
        let xi = &flat[i * dim..(i + 1) * dim];
        for j in (i + 1)..n {
            let xj = &flat[j * dim..(j + 1) * dim];
            let mut p = F::zero();
            for (a, b) in xi.iter().zip(xj) {
                p += *a * *b;
            }
            if p < lo || p > hi {
                return Err(Error::InvalidParameter(format!(
                    "dot product of positions {i} and {j} is {p}, outside [0, 1]"
                )));
            }
            let p = p.max(F::zero()).min(F::one());
            if F::unit_uniform(rng) < p {
                edges.push((i as u32, j as u32));
            }
        }
    }
    GraphSample::new(n, edges, None)
}

/// Column means of a membership matrix (test and diagnostic helper).
pub fn membership_means<F: Scalar>(pi: &MembershipMatrix<F>) -> Array1<F> {
    pi.matrix().mean_axis(Axis(0)).unwrap_or_default()
}

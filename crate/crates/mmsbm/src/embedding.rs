//! Adjacency spectral embedding, PCA projection, and Procrustes alignment.
//!
//! The embedding of a graph on `n` nodes is `U_d |S_d|^{1/2}` where `S_d`
//! holds the `d` adjacency eigenvalues of largest magnitude and `U_d` the
//! matching orthonormal eigenvectors.  Small graphs take a dense
//! tridiagonalization route; large graphs run block subspace iteration with
//! Rayleigh-Ritz extraction on a sparse operator, which converges to the
//! dominant-magnitude eigenpairs from both ends of the spectrum at once.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::GraphSample;
use crate::scalar::Scalar;

/// Tuning knobs for [`spectral_embed`].
#[derive(Debug, Clone)]
pub struct EmbedOptions<F: Scalar> {
    /// Node counts at or below this take the dense eigensolver.
    pub dense_cutoff: usize,
    /// Iterative residual tolerance, relative to the operator Frobenius
    /// norm: convergence requires `max_i ||A v_i - s_i v_i|| <= rel_tol *
    /// ||A||_F`.
    pub rel_tol: F,
    /// Iteration cap for the subspace solver.
    pub max_iter: usize,
    /// Seed for the deterministic starting block.
    pub seed: u64,
}

impl<F: Scalar> Default for EmbedOptions<F> {
    fn default() -> Self {
        Self {
            dense_cutoff: 300,
            rel_tol: F::cast(1e-8),
            max_iter: 10_000,
            seed: 0x00C0_FFEE,
        }
    }
}

/// How an embedding was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbedMethod {
    /// Full dense symmetric eigendecomposition.
    Dense,
    /// Block subspace iteration on the sparse adjacency.
    Iterative,
}

/// Result of adjacency spectral embedding.
#[derive(Debug, Clone)]
pub struct Embedding<F: Scalar> {
    /// `n x d` matrix `U_d |S_d|^{1/2}`, one node per row.
    pub positions: Array2<F>,
    /// The `d` retained eigenvalues, sorted by decreasing magnitude with
    /// magnitude ties broken toward the algebraically larger value.
    pub eigenvalues: Array1<F>,
    /// Matching orthonormal eigenvectors, one per column.
    pub vectors: Array2<F>,
    /// Largest residual `||A v - s v||` over the retained pairs.
    pub residual: F,
    /// Iterations spent (zero for the dense route).
    pub iterations: usize,
    /// Which solver produced the result.
    pub method: EmbedMethod,
}

/// Anything that can act as a symmetric linear operator.
pub trait SymmetricOperator<F: Scalar> {
    /// Operator dimension.
    fn dim(&self) -> usize;
    /// Dense block product `Y = A X`; `x` and `y` are `n x p`.
    fn apply(&self, x: ArrayView2<F>, y: &mut Array2<F>);
    /// Frobenius norm of the operator, used to scale tolerances.
    fn frobenius_norm(&self) -> F;
}

/// Compressed sparse row view of an undirected graph's adjacency matrix.
#[derive(Debug, Clone)]
pub struct CsrAdjacency {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
}

impl CsrAdjacency {
    /// Builds the symmetric adjacency (both directions stored) from an edge
    /// list.
    pub fn from_graph<F: Scalar>(g: &GraphSample<F>) -> Self {
        let n = g.n();
        let mut degree = vec![0usize; n];
        for &(i, j) in g.edges() {
            degree[i as usize] += 1;
            degree[j as usize] += 1;
        }
        let mut row_ptr = vec![0usize; n + 1];
        for i in 0..n {
            row_ptr[i + 1] = row_ptr[i] + degree[i];
        }
        let mut cursor = row_ptr.clone();
        let mut col_idx = vec![0u32; row_ptr[n]];
        for &(i, j) in g.edges() {
            col_idx[cursor[i as usize]] = j;
            cursor[i as usize] += 1;
            col_idx[cursor[j as usize]] = i;
            cursor[j as usize] += 1;
        }
        Self {
            n,
            row_ptr,
            col_idx,
        }
    }

    /// Number of stored entries (twice the edge count).
    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }
}

impl<F: Scalar> SymmetricOperator<F> for CsrAdjacency {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: ArrayView2<F>, y: &mut Array2<F>) {
        let p = x.ncols();
        let xs = x.as_standard_layout();
        let xf = xs.as_slice().expect("standard layout");
        y.fill(F::zero());
        let yf = y.as_slice_mut().expect("standard layout");
        for i in 0..self.n {
            let row = &mut yf[i * p..(i + 1) * p];
            for &j in &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]] {
                let src = &xf[j as usize * p..(j as usize + 1) * p];
                for (acc, &v) in row.iter_mut().zip(src) {
                    *acc += v;
                }
            }
        }
    }

    fn frobenius_norm(&self) -> F {
        F::cast(self.col_idx.len() as f64).sqrt()
    }
}

/// Dense symmetric matrix as an operator (testing and small problems).
#[derive(Debug, Clone)]
pub struct DenseOperator<'a, F: Scalar>(pub ArrayView2<'a, F>);

impl<'a, F: Scalar> SymmetricOperator<F> for DenseOperator<'a, F> {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, x: ArrayView2<F>, y: &mut Array2<F>) {
        y.assign(&self.0.dot(&x));
    }

    fn frobenius_norm(&self) -> F {
        self.0
            .iter()
            .map(|&v| v * v)
            .fold(F::zero(), |a, b| a + b)
            .sqrt()
    }
}

/// Sorts eigenvalue indices by decreasing magnitude, breaking magnitude ties
/// toward the algebraically larger value.
fn magnitude_order<F: Scalar>(values: &Array1<F>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        values[b]
            .abs()
            .partial_cmp(&values[a].abs())
            .expect("finite eigenvalues")
            .then(
                values[b]
                    .partial_cmp(&values[a])
                    .expect("finite eigenvalues"),
            )
    });
    idx
}

/// Top `d` eigenpairs by magnitude of a dense symmetric matrix.
pub fn eigen_topk_dense<F: Scalar>(a: ArrayView2<F>, d: usize) -> Result<(Array1<F>, Array2<F>)> {
    let n = a.nrows();
    if d > n {
        return Err(Error::InvalidParameter(format!(
            "cannot extract {d} eigenpairs from a {n}x{n} matrix"
        )));
    }
    let eig = linalg::symmetric_eigen(a)?;
    let order = magnitude_order(&eig.values);
    let mut values = Array1::<F>::zeros(d);
    let mut vectors = Array2::<F>::zeros((n, d));
    for (col, &src) in order.iter().take(d).enumerate() {
        values[col] = eig.values[src];
        vectors.column_mut(col).assign(&eig.vectors.column(src));
    }
    Ok((values, vectors))
}

/// Modified Gram-Schmidt with one re-orthogonalization pass.  Columns that
/// collapse to zero are replaced with fresh random directions so the block
/// keeps full rank.
fn orthonormalize<F: Scalar>(q: &mut Array2<F>, rng: &mut ChaCha8Rng) {
    let (n, p) = q.dim();
    let tiny = F::cast(1e-300);
    for col in 0..p {
        loop {
            for _pass in 0..2 {
                for prev in 0..col {
                    let proj = q.column(prev).dot(&q.column(col));
                    let prev_col = q.column(prev).to_owned();
                    let mut cur = q.column_mut(col);
                    cur.scaled_add(-proj, &prev_col);
                }
            }
            let norm = q.column(col).dot(&q.column(col)).sqrt();
            if norm > tiny {
                let mut cur = q.column_mut(col);
                cur.mapv_inplace(|v| v / norm);
                break;
            }
            for i in 0..n {
                q[(i, col)] = F::standard_normal(rng);
            }
        }
    }
}

/// Top `d` eigenpairs by magnitude via block subspace iteration with
/// Rayleigh-Ritz extraction.
///
/// The block is wider than `d` so the method captures the dominant-magnitude
/// invariant subspace regardless of sign; within it, Rayleigh-Ritz recovers
/// both spectrum ends.  Convergence requires every retained pair to satisfy
/// `||A v - s v|| <= tol`.
pub fn eigen_topk_iterative<F: Scalar, Op: SymmetricOperator<F>>(
    op: &Op,
    d: usize,
    tol: F,
    max_iter: usize,
    seed: u64,
) -> Result<(Array1<F>, Array2<F>, F, usize)> {
    let n = op.dim();
    if d > n {
        return Err(Error::InvalidParameter(format!(
            "cannot extract {d} eigenpairs from an operator of dimension {n}"
        )));
    }
    if d == 0 {
        return Ok((Array1::zeros(0), Array2::zeros((n, 0)), F::zero(), 0));
    }
    let p = (2 * d + 2).max(d + 6).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = Array2::<F>::zeros((n, p));
    for v in q.iter_mut() {
        *v = F::standard_normal(&mut rng);
    }
    orthonormalize(&mut q, &mut rng);
    let mut z = Array2::<F>::zeros((n, p));
    let mut best_residual = F::infinity();
    for iter in 1..=max_iter {
        op.apply(q.view(), &mut z);
        // Rayleigh-Ritz on the current block: T = Q' Z, symmetrized
        let t_raw = q.t().dot(&z);
        let t = (&t_raw + &t_raw.t()) * F::cast(0.5);
        let small = linalg::symmetric_eigen(t.view())?;
        let order = magnitude_order(&small.values);
        // Ritz pairs for the d dominant-magnitude values
        let mut values = Array1::<F>::zeros(d);
        let mut s_sel = Array2::<F>::zeros((p, d));
        for (col, &src) in order.iter().take(d).enumerate() {
            values[col] = small.values[src];
            s_sel.column_mut(col).assign(&small.vectors.column(src));
        }
        let ritz = q.dot(&s_sel); // candidate eigenvectors, orthonormal
        let image = z.dot(&s_sel); // A times the candidates
        let mut worst = F::zero();
        for col in 0..d {
            let mut acc = F::zero();
            for i in 0..n {
                let r = image[(i, col)] - values[col] * ritz[(i, col)];
                acc += r * r;
            }
            worst = worst.max(acc.sqrt());
        }
        best_residual = best_residual.min(worst);
        if worst <= tol {
            return Ok((values, ritz, worst, iter));
        }
        // next subspace: orthonormalized image of the full block
        q.assign(&z);
        orthonormalize(&mut q, &mut rng);
    }
    Err(Error::EigenNonConvergence {
        iterations: max_iter,
        residual: best_residual.to_f64().unwrap_or(f64::NAN),
    })
}

/// Builds positions `U_d |S_d|^{1/2}` from eigenpairs.
fn scale_by_root_magnitude<F: Scalar>(values: &Array1<F>, vectors: &Array2<F>) -> Array2<F> {
    let mut x = vectors.clone();
    for (col, &s) in values.iter().enumerate() {
        let root = s.abs().sqrt();
        x.column_mut(col).mapv_inplace(|v| v * root);
    }
    x
}

/// Adjacency spectral embedding of a graph into `d` dimensions.
///
/// Routes to the dense solver at or below `opts.dense_cutoff` nodes and to
/// the sparse iterative solver above it.
pub fn spectral_embed<F: Scalar>(
    g: &GraphSample<F>,
    d: usize,
    opts: &EmbedOptions<F>,
) -> Result<Embedding<F>> {
    let n = g.n();
    if n == 0 {
        return Err(Error::InvalidParameter(
            "cannot embed an empty graph".to_string(),
        ));
    }
    if d == 0 || d > n {
        return Err(Error::InvalidParameter(format!(
            "embedding dimension {d} must lie in 1..={n}"
        )));
    }
    if n <= opts.dense_cutoff {
        let a = g.densify()?;
        let (values, vectors) = eigen_topk_dense(a.view(), d)?;
        let residual = dense_residual(a.view(), &values, &vectors);
        return Ok(Embedding {
            positions: scale_by_root_magnitude(&values, &vectors),
            eigenvalues: values,
            vectors,
            residual,
            iterations: 0,
            method: EmbedMethod::Dense,
        });
    }
    let csr = CsrAdjacency::from_graph(g);
    let tol = opts.rel_tol * SymmetricOperator::<F>::frobenius_norm(&csr);
    let (values, vectors, residual, iterations) =
        eigen_topk_iterative(&csr, d, tol, opts.max_iter, opts.seed)?;
    Ok(Embedding {
        positions: scale_by_root_magnitude(&values, &vectors),
        eigenvalues: values,
        vectors,
        residual,
        iterations,
        method: EmbedMethod::Iterative,
    })
}

/// Spectral embedding of an arbitrary dense symmetric matrix (noiseless
/// probability matrices, tests).
pub fn spectral_embed_sym<F: Scalar>(a: ArrayView2<F>, d: usize) -> Result<Embedding<F>> {
    let n = a.nrows();
    if d == 0 || d > n {
        return Err(Error::InvalidParameter(format!(
            "embedding dimension {d} must lie in 1..={n}"
        )));
    }
    let (values, vectors) = eigen_topk_dense(a, d)?;
    let residual = dense_residual(a, &values, &vectors);
    Ok(Embedding {
        positions: scale_by_root_magnitude(&values, &vectors),
        eigenvalues: values,
        vectors,
        residual,
        iterations: 0,
        method: EmbedMethod::Dense,
    })
}

fn dense_residual<F: Scalar>(a: ArrayView2<F>, values: &Array1<F>, vectors: &Array2<F>) -> F {
    let image = a.dot(vectors);
    let mut worst = F::zero();
    for col in 0..values.len() {
        let mut acc = F::zero();
        for i in 0..a.nrows() {
            let r = image[(i, col)] - values[col] * vectors[(i, col)];
            acc += r * r;
        }
        worst = worst.max(acc.sqrt());
    }
    worst
}

/// Affine frame recording how a point cloud was projected onto its principal
/// components, sufficient to map fitted objects back to the original space.
#[derive(Debug, Clone)]
pub struct PcaFrame<F: Scalar> {
    /// Column means of the input cloud.
    pub mean: Array1<F>,
    /// `d x m` matrix whose columns are the principal directions.
    pub basis: Array2<F>,
    /// Covariance eigenvalues (divisor `n`) of the retained directions,
    /// clamped at zero, in decreasing order.
    pub spectrum: Array1<F>,
}

/// Projects a point cloud onto its top `out_dim` principal components.
///
/// The covariance uses divisor `n`.  Returns the projected `n x out_dim`
/// cloud and the frame needed by [`pca_reconstruct`].
pub fn pca_project<F: Scalar>(
    x: ArrayView2<F>,
    out_dim: usize,
) -> Result<(Array2<F>, PcaFrame<F>)> {
    let (n, dim) = x.dim();
    if n == 0 {
        return Err(Error::DegenerateInput(
            "cannot run PCA on an empty cloud".to_string(),
        ));
    }
    if out_dim > dim {
        return Err(Error::InvalidParameter(format!(
            "cannot keep {out_dim} components of {dim}-dimensional data"
        )));
    }
    let mean = x.mean_axis(Axis(0)).expect("non-empty");
    let centered = &x - &mean.view().insert_axis(Axis(0));
    let cov = centered.t().dot(&centered) / F::cast(n as f64);
    let eig = linalg::symmetric_eigen(cov.view())?;
    // covariance is PSD, so algebraic and magnitude order agree
    let mut basis = Array2::<F>::zeros((dim, out_dim));
    let mut spectrum = Array1::<F>::zeros(out_dim);
    for col in 0..out_dim {
        let src = dim - 1 - col;
        basis.column_mut(col).assign(&eig.vectors.column(src));
        spectrum[col] = eig.values[src].max(F::zero());
    }
    let projected = centered.dot(&basis);
    Ok((
        projected,
        PcaFrame {
            mean,
            basis,
            spectrum,
        },
    ))
}

/// Maps points from PCA coordinates back to the original space.
pub fn pca_reconstruct<F: Scalar>(frame: &PcaFrame<F>, points: ArrayView2<F>) -> Result<Array2<F>> {
    if points.ncols() != frame.basis.ncols() {
        return Err(Error::InvalidParameter(format!(
            "points have {} coordinates but the frame keeps {} components",
            points.ncols(),
            frame.basis.ncols()
        )));
    }
    Ok(points.dot(&frame.basis.t()) + frame.mean.view().insert_axis(Axis(0)))
}

/// Finds the orthogonal matrix `W` minimizing `||a W - b||_F` and reports the
/// largest row deviation after alignment.
pub fn procrustes_align<F: Scalar>(a: ArrayView2<F>, b: ArrayView2<F>) -> Result<(Array2<F>, F)> {
    if a.dim() != b.dim() {
        return Err(Error::InvalidParameter(format!(
            "cannot align a {:?} cloud with a {:?} cloud",
            a.dim(),
            b.dim()
        )));
    }
    let m = a.t().dot(&b);
    let svd = linalg::svd(m.view())?;
    let w = svd.u.dot(&svd.vt);
    let aligned = a.dot(&w);
    let mut worst = F::zero();
    for i in 0..a.nrows() {
        let mut acc = F::zero();
        for j in 0..a.ncols() {
            let r = aligned[(i, j)] - b[(i, j)];
            acc += r * r;
        }
        worst = worst.max(acc.sqrt());
    }
    Ok((w, worst))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{latent_positions, sample_dirichlet, sample_mmsbm, GraphSample, ModelSpec};
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn example_spec() -> ModelSpec<f64> {
        ModelSpec::new(
            array![[0.9, 0.2, 0.3], [0.2, 0.9, 0.5], [0.3, 0.5, 0.9]],
            array![1.0, 1.0, 1.0],
        )
        .unwrap()
    }

    fn complete_graph(n: usize) -> GraphSample<f64> {
        let mut edges = Vec::new();
        for i in 0..n as u32 {
            for j in (i + 1)..n as u32 {
                edges.push((i, j));
            }
        }
        GraphSample::new(n, edges, None).unwrap()
    }

    #[test]
    fn complete_graph_embedding_is_known_in_closed_form() {
        // K_n has top eigenvalue n-1 with the constant unit eigenvector, so
        // every embedded coordinate is sqrt(n-1)/sqrt(n).
        let n = 40;
        let g = complete_graph(n);
        let expected = ((n - 1) as f64).sqrt() / (n as f64).sqrt();
        let dense = spectral_embed(&g, 1, &EmbedOptions::default()).unwrap();
        assert_eq!(dense.method, EmbedMethod::Dense);
        assert!((dense.eigenvalues[0] - (n as f64 - 1.0)).abs() < 1e-10);
        let forced = EmbedOptions {
            dense_cutoff: 0,
            ..EmbedOptions::default()
        };
        let iterative = spectral_embed(&g, 1, &forced).unwrap();
        assert_eq!(iterative.method, EmbedMethod::Iterative);
        assert!((iterative.eigenvalues[0] - (n as f64 - 1.0)).abs() < 1e-8);
        for e in [&dense, &iterative] {
            for i in 0..n {
                assert!(
                    (e.positions[(i, 0)].abs() - expected).abs() < 1e-8,
                    "entry {i} = {}",
                    e.positions[(i, 0)]
                );
            }
        }
    }

    #[test]
    fn magnitude_ordering_keeps_algebraically_larger_first_on_ties() {
        let a = Array2::from_diag(&array![2.0f64, -2.0, 1.0]);
        let e = spectral_embed_sym(a.view(), 3).unwrap();
        assert_eq!(e.eigenvalues[0], 2.0);
        assert_eq!(e.eigenvalues[1], -2.0);
        assert_eq!(e.eigenvalues[2], 1.0);
    }

    #[test]
    fn negative_eigenvalues_enter_positions_by_magnitude() {
        let a = Array2::from_diag(&array![3.0f64, -5.0, 1.0]);
        let e = spectral_embed_sym(a.view(), 2).unwrap();
        assert_eq!(e.eigenvalues[0], -5.0);
        assert_eq!(e.eigenvalues[1], 3.0);
        // positions scale by |s|^{1/2}: node 1 sits at sqrt(5) in the first
        // coordinate, node 0 at sqrt(3) in the second
        assert!((e.positions[(1, 0)].abs() - 5.0f64.sqrt()).abs() < 1e-12);
        assert!((e.positions[(0, 1)].abs() - 3.0f64.sqrt()).abs() < 1e-12);
        assert!(e.positions[(2, 0)].abs() < 1e-12);
        assert!(e.positions[(2, 1)].abs() < 1e-12);
    }

    #[test]
    fn noiseless_probability_matrix_recovers_latent_positions() {
        let spec = example_spec();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let pi = sample_dirichlet(spec.alpha().view(), 80, &mut rng).unwrap();
        let x0 = latent_positions(&spec, &pi).unwrap();
        let p = x0.matrix().dot(&x0.matrix().t());
        let e = spectral_embed_sym(p.view(), 3).unwrap();
        let recon = e.positions.dot(&e.positions.t());
        for i in 0..80 {
            for j in 0..80 {
                assert!((recon[(i, j)] - p[(i, j)]).abs() < 1e-10);
            }
        }
        // any two full-rank factorizations differ by an orthogonal map
        let (_, err) = procrustes_align(e.positions.view(), x0.matrix().view()).unwrap();
        assert!(err < 1e-9, "alignment error {err}");
    }

    #[test]
    fn iterative_and_dense_agree_on_a_sampled_graph() {
        let spec = example_spec();
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let g = sample_mmsbm(&spec, 120, &mut rng).unwrap();
        let dense = spectral_embed(&g, 3, &EmbedOptions::default()).unwrap();
        let forced = EmbedOptions {
            dense_cutoff: 0,
            rel_tol: 1e-11,
            ..EmbedOptions::default()
        };
        let iter = spectral_embed(&g, 3, &forced).unwrap();
        assert_eq!(iter.method, EmbedMethod::Iterative);
        for c in 0..3 {
            assert!(
                (dense.eigenvalues[c] - iter.eigenvalues[c]).abs() < 1e-7,
                "eigenvalue {c}: {} vs {}",
                dense.eigenvalues[c],
                iter.eigenvalues[c]
            );
        }
        // subspaces agree: singular values of U_dense' U_iter are all near 1
        let overlap = dense.vectors.t().dot(&iter.vectors);
        let svd = linalg::svd(overlap.view()).unwrap();
        for &s in svd.s.iter() {
            assert!((s - 1.0).abs() < 1e-6, "principal angle cosine {s}");
        }
    }

    #[test]
    fn csr_apply_matches_dense_multiplication() {
        let spec = example_spec();
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let g = sample_mmsbm(&spec, 50, &mut rng).unwrap();
        let csr = CsrAdjacency::from_graph(&g);
        assert_eq!(csr.nnz(), 2 * g.edge_count());
        let a = g.densify().unwrap();
        let mut x = Array2::<f64>::zeros((50, 4));
        for v in x.iter_mut() {
            *v = f64::standard_normal(&mut rng);
        }
        let mut y = Array2::<f64>::zeros((50, 4));
        csr.apply(x.view(), &mut y);
        let reference = a.dot(&x);
        for (u, v) in y.iter().zip(reference.iter()) {
            assert!((u - v).abs() < 1e-12);
        }
        let fro: f64 = SymmetricOperator::<f64>::frobenius_norm(&csr);
        assert!((fro - (2.0 * g.edge_count() as f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn embedding_is_equivariant_under_relabeling() {
        let spec = example_spec();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let g = sample_mmsbm(&spec, 70, &mut rng).unwrap();
        let perm: Vec<usize> = (0..70).map(|i| (i * 11 + 5) % 70).collect();
        let h = g.relabel(&perm).unwrap();
        let eg = spectral_embed(&g, 3, &EmbedOptions::default()).unwrap();
        let eh = spectral_embed(&h, 3, &EmbedOptions::default()).unwrap();
        for c in 0..3 {
            assert!((eg.eigenvalues[c] - eh.eigenvalues[c]).abs() < 1e-9);
        }
        // rows follow their nodes, up to a joint orthogonal transform
        let mut permuted = Array2::<f64>::zeros((70, 3));
        for i in 0..70 {
            for c in 0..3 {
                permuted[(perm[i], c)] = eg.positions[(i, c)];
            }
        }
        let (_, err) = procrustes_align(permuted.view(), eh.positions.view()).unwrap();
        assert!(err < 1e-8, "alignment error {err}");
    }

    #[test]
    fn iterative_solver_reports_non_convergence() {
        let g = complete_graph(30);
        let csr = CsrAdjacency::from_graph(&g);
        let r = eigen_topk_iterative::<f64, _>(&csr, 2, 0.0, 1, 7);
        assert!(matches!(r, Err(Error::EigenNonConvergence { .. })));
    }

    #[test]
    fn embed_rejects_bad_dimensions() {
        let g = complete_graph(5);
        assert!(spectral_embed(&g, 0, &EmbedOptions::default()).is_err());
        assert!(spectral_embed(&g, 6, &EmbedOptions::default()).is_err());
        let empty = GraphSample::<f64>::new(0, vec![], None).unwrap();
        assert!(spectral_embed(&empty, 1, &EmbedOptions::default()).is_err());
    }

    #[test]
    fn pca_uses_divisor_n_and_orthonormal_basis() {
        // two points at distance 1: divisor-n covariance has eigenvalue 1/4
        let x: Array2<f64> = array![[0.0, 0.0], [1.0, 0.0]];
        let (proj, frame) = pca_project(x.view(), 1).unwrap();
        assert!((frame.spectrum[0] - 0.25).abs() < 1e-15);
        assert!((frame.mean[0] - 0.5).abs() < 1e-15);
        assert!((proj[(0, 0)].abs() - 0.5).abs() < 1e-15);
        // a larger cloud: basis orthonormality and mean-zero projection
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let mut data = Array2::<f64>::zeros((60, 4));
        for v in data.iter_mut() {
            *v = f64::standard_normal(&mut rng);
        }
        let (proj, frame) = pca_project(data.view(), 3).unwrap();
        let gram = frame.basis.t().dot(&frame.basis);
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - expected).abs() < 1e-12);
            }
        }
        let col_means = proj.mean_axis(Axis(0)).unwrap();
        for &m in col_means.iter() {
            assert!(m.abs() < 1e-12);
        }
        // retained spectrum entries are the projected column variances
        for c in 0..3 {
            let var = proj.column(c).dot(&proj.column(c)) / 60.0;
            assert!((var - frame.spectrum[c]).abs() < 1e-12);
        }
    }

    #[test]
    fn pca_reconstruction_is_exact_on_flat_data() {
        // points in a 2-dimensional affine subspace of R^4
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        let mut coords = Array2::<f64>::zeros((40, 2));
        for v in coords.iter_mut() {
            *v = f64::standard_normal(&mut rng);
        }
        let map = array![[1.0, 0.5, -0.25, 2.0], [0.0, 1.0, 1.5, -1.0]];
        let offset = array![0.3, -0.7, 0.1, 0.9];
        let data = coords.dot(&map) + offset.view().insert_axis(Axis(0));
        let (proj, frame) = pca_project(data.view(), 2).unwrap();
        let back = pca_reconstruct(&frame, proj.view()).unwrap();
        for (u, v) in back.iter().zip(data.iter()) {
            assert!((u - v).abs() < 1e-10);
        }
        // trailing covariance eigenvalues vanish on flat data
        let (_, full) = pca_project(data.view(), 4).unwrap();
        assert!(full.spectrum[2].abs() < 1e-12);
        assert!(full.spectrum[3].abs() < 1e-12);
    }

    #[test]
    fn procrustes_recovers_a_planted_orthogonal_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let mut a = Array2::<f64>::zeros((30, 3));
        for v in a.iter_mut() {
            *v = f64::standard_normal(&mut rng);
        }
        // orthonormalize a random matrix to get a rotation
        let mut r = Array2::<f64>::zeros((3, 3));
        for v in r.iter_mut() {
            *v = f64::standard_normal(&mut rng);
        }
        orthonormalize(&mut r, &mut rng);
        let b = a.dot(&r);
        let (w, err) = procrustes_align(a.view(), b.view()).unwrap();
        assert!(err < 1e-12, "alignment error {err}");
        for (u, v) in w.iter().zip(r.iter()) {
            assert!((u - v).abs() < 1e-10);
        }
        // reflections are inside the search space too
        let mut flip = r.clone();
        flip.column_mut(0).mapv_inplace(|v| -v);
        let b = a.dot(&flip);
        let (_, err) = procrustes_align(a.view(), b.view()).unwrap();
        assert!(err < 1e-12);
    }
}

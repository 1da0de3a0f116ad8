//! Minimum-volume enclosing convex polytope fitting, shrinkage, and the
//! supporting geometry (volume, containment, barycentric coordinates,
//! Monte Carlo symmetric-difference volume).
//!
//! The fitter targets the simplex case `k = m+1` with a facet-descent local
//! search: a greedily grown maximum-volume inscribed simplex is dilated
//! until it encloses the cloud, then facets are repeatedly pulled inward to
//! their support and rotated by shrinking angular steps, keeping only
//! volume-reducing moves.  Every facet move re-supports against the cloud,
//! so containment is maintained by construction.  One-dimensional clouds
//! take an exact interval path, and planar clouds with `k > 3` run the same
//! descent on `k` half-planes.

// Negated comparisons (`!(x > y)`) are used deliberately so that NaN takes
// the failure branch; the positively phrased forms would let it through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;

/// Absolute containment tolerance, in signed facet-distance units.
pub const CONTAINMENT_TOL: f64 = 1e-9;
/// Relative per-pass volume improvement below which the fit stops.
pub const FIT_REL_IMPROVEMENT: f64 = 1e-6;
/// Maximum number of full descent passes.
pub const FIT_PASS_CAP: usize = 500;
/// Initial facet rotation step in radians.
pub const ROTATION_STEP_INIT: f64 = 0.1;
/// Rotation steps are halved down to this angle before a facet is left
/// alone.
pub const ROTATION_STEP_MIN: f64 = 1e-4;
/// Relative covariance-eigenvalue threshold below which a cloud counts as
/// rank deficient.
pub const CLOUD_RANK_TOL: f64 = 1e-12;

/// A convex polytope stored as an ordered list of vertices (rows).
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope<F: Scalar> {
    vertices: Array2<F>,
}

impl<F: Scalar> Polytope<F> {
    /// Validates and wraps a vertex list: at least two finite vertices in a
    /// positive-dimension space, and for the simplex case `k = m+1`, affine
    /// independence (positive volume).
    pub fn new(vertices: Array2<F>) -> Result<Self> {
        let (k, m) = vertices.dim();
        if k < 2 || m == 0 {
            return Err(Error::InvalidParameter(format!(
                "a polytope needs at least 2 vertices in at least 1 dimension, got {k} in {m}"
            )));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "polytope vertices must be finite".to_string(),
            ));
        }
        let poly = Self { vertices };
        if k == m + 1 && simplex_volume(&poly)? <= F::zero() {
            return Err(Error::DegenerateInput(
                "simplex vertices are affinely dependent".to_string(),
            ));
        }
        Ok(poly)
    }

    /// Wraps vertices without the affine-independence check; used by
    /// [`shrink`], whose contract includes the fully collapsed case, and by
    /// the estimation pipeline for reconstructed and single-vertex shapes.
    pub(crate) fn raw(vertices: Array2<F>) -> Self {
        Self { vertices }
    }

    /// Number of vertices.
    pub fn k(&self) -> usize {
        self.vertices.nrows()
    }

    /// Ambient dimension `m`.
    pub fn ambient_dim(&self) -> usize {
        self.vertices.ncols()
    }

    /// The `k x m` vertex matrix.
    pub fn vertices(&self) -> &Array2<F> {
        &self.vertices
    }

    /// Mean of the vertices.
    pub fn centroid(&self) -> Array1<F> {
        self.vertices.mean_axis(Axis(0)).expect("k >= 2")
    }

    /// Lebesgue volume of the convex hull of the vertices.  Exact for
    /// simplices and for ambient dimension at most 2; higher-dimensional
    /// non-simplex polytopes are unsupported.
    pub fn volume(&self) -> Result<F> {
        let (k, m) = self.vertices.dim();
        if k == m + 1 {
            return simplex_volume(self);
        }
        match m {
            1 => {
                let mut lo = F::infinity();
                let mut hi = F::neg_infinity();
                for &v in self.vertices.column(0) {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                Ok(hi - lo)
            }
            2 => {
                let hull = convex_hull_2d(&collect_points_2d(self.vertices.view()));
                Ok(polygon_area(&hull))
            }
            _ => Err(Error::InvalidParameter(format!(
                "volume of a {k}-vertex polytope in dimension {m} is not supported"
            ))),
        }
    }
}

/// Shrinkage factor `eta = clamp(1 - a n^{-1/2} log^{1/2}(n), 0, 1)` with the
/// natural logarithm.  Callers must pass `n >= 2` and `a >= 0`.
pub fn shrink_factor<F: Scalar>(n: usize, a: F) -> F {
    debug_assert!(n >= 2, "shrink_factor needs n >= 2");
    debug_assert!(a >= F::zero(), "shrink_factor needs a >= 0");
    let nf = F::cast(n as f64);
    let eta = F::one() - a * nf.powf(F::cast(-0.5)) * nf.ln().sqrt();
    eta.max(F::zero()).min(F::one())
}

/// The rate constant `a` for which [`shrink_factor`] hits `eta` at the given
/// `n`: `a = (1 - eta) sqrt(n) / sqrt(log n)`.  Callers must pass `n >= 2`.
pub fn rate_constant<F: Scalar>(eta: F, n: usize) -> F {
    debug_assert!(n >= 2, "rate_constant needs n >= 2");
    let nf = F::cast(n as f64);
    (F::one() - eta) * nf.sqrt() / nf.ln().sqrt()
}

/// Contracts every vertex toward `center` by factor `eta`:
/// `v -> center + eta (v - center)`.
///
/// # Panics
/// If `center` does not match the ambient dimension or `eta` lies outside
/// `[0, 1]`.
pub fn shrink<F: Scalar>(poly: &Polytope<F>, center: ArrayView1<F>, eta: F) -> Polytope<F> {
    assert_eq!(
        center.len(),
        poly.ambient_dim(),
        "shrink center must match the ambient dimension"
    );
    assert!(
        eta >= F::zero() && eta <= F::one(),
        "shrink factor must lie in [0, 1]"
    );
    let mut vertices = poly.vertices.clone();
    for mut row in vertices.rows_mut() {
        for (v, &c) in row.iter_mut().zip(center.iter()) {
            *v = c + eta * (*v - c);
        }
    }
    Polytope::raw(vertices)
}

/// Volume of a simplex (`k = m+1`): `|det([v_2 - v_1, ..., v_{m+1} - v_1])| / m!`.
/// Zero for degenerate simplices.
pub fn simplex_volume<F: Scalar>(poly: &Polytope<F>) -> Result<F> {
    let (k, m) = poly.vertices.dim();
    if k != m + 1 {
        return Err(Error::InvalidParameter(format!(
            "simplex volume needs k = m+1, got {k} vertices in dimension {m}"
        )));
    }
    let mut edges = Array2::<F>::zeros((m, m));
    for r in 0..m {
        for c in 0..m {
            edges[(r, c)] = poly.vertices[(r + 1, c)] - poly.vertices[(0, c)];
        }
    }
    let det = linalg::determinant(edges.view())?;
    let mut fact = F::one();
    for i in 2..=m {
        fact *= F::cast(i as f64);
    }
    Ok(det.abs() / fact)
}

/// Barycentric coordinates of `point` with respect to a simplex: the unique
/// `c` with `sum c = 1` and `sum c_j v_j = point`.  Coefficients may be
/// negative for points outside.
pub fn barycentric<F: Scalar>(poly: &Polytope<F>, point: ArrayView1<F>) -> Result<Array1<F>> {
    let (k, m) = poly.vertices.dim();
    if k != m + 1 {
        return Err(Error::InvalidParameter(format!(
            "barycentric coordinates need a simplex, got {k} vertices in dimension {m}"
        )));
    }
    if point.len() != m {
        return Err(Error::InvalidParameter(format!(
            "point has {} coordinates, expected {m}",
            point.len()
        )));
    }
    // affine system: rows are the m coordinate equations plus sum(c) = 1
    let mut mat = Array2::<F>::zeros((k, k));
    for j in 0..k {
        for r in 0..m {
            mat[(r, j)] = poly.vertices[(j, r)];
        }
        mat[(m, j)] = F::one();
    }
    let mut rhs = Array1::<F>::zeros(k);
    for r in 0..m {
        rhs[r] = point[r];
    }
    rhs[m] = F::one();
    linalg::solve(mat.view(), rhs.view()).map_err(|_| {
        Error::DegenerateInput("barycentric coordinates of a degenerate simplex".to_string())
    })
}

/// Unit-normal facet tests for a polytope: `point` is inside when every row
/// satisfies `row . point + offset >= -tol`, with rows normalized so the
/// left side is a signed Euclidean facet distance.
struct FacetTester<F: Scalar> {
    rows: Array2<F>,
    offsets: Array1<F>,
}

impl<F: Scalar> FacetTester<F> {
    fn build(poly: &Polytope<F>) -> Result<Self> {
        let (k, m) = poly.vertices.dim();
        if m == 1 {
            let mut lo = F::infinity();
            let mut hi = F::neg_infinity();
            for &v in poly.vertices.column(0) {
                lo = lo.min(v);
                hi = hi.max(v);
            }
            let rows =
                Array2::from_shape_vec((2, 1), vec![F::one(), -F::one()]).expect("static shape");
            let offsets = Array1::from_vec(vec![-lo, hi]);
            return Ok(Self { rows, offsets });
        }
        if k == m + 1 {
            // rows of the inverse affine system are barycentric gradients;
            // scaling by the gradient norm turns them into facet distances
            let mut mat = Array2::<F>::zeros((k, k));
            for j in 0..k {
                for r in 0..m {
                    mat[(r, j)] = poly.vertices[(j, r)];
                }
                mat[(m, j)] = F::one();
            }
            let mut rows = Array2::<F>::zeros((k, m));
            let mut offsets = Array1::<F>::zeros(k);
            for j in 0..k {
                let mut e = Array1::<F>::zeros(k);
                e[j] = F::one();
                // row j of mat^{-1} equals the solution of mat' x = e_j
                let row = linalg::solve(mat.t().view(), e.view())?;
                let mut norm = F::zero();
                for r in 0..m {
                    norm += row[r] * row[r];
                }
                let norm = norm.sqrt();
                if !(norm > F::zero()) || !norm.is_finite() {
                    return Err(Error::DegenerateInput(
                        "degenerate simplex facet".to_string(),
                    ));
                }
                for r in 0..m {
                    rows[(j, r)] = row[r] / norm;
                }
                offsets[j] = row[m] / norm;
            }
            return Ok(Self { rows, offsets });
        }
        if m == 2 {
            let hull = convex_hull_2d(&collect_points_2d(poly.vertices.view()));
            if hull.len() < 3 {
                return Err(Error::DegenerateInput(
                    "polytope vertices are collinear".to_string(),
                ));
            }
            let h = hull.len();
            let mut rows = Array2::<F>::zeros((h, 2));
            let mut offsets = Array1::<F>::zeros(h);
            for i in 0..h {
                let (ax, ay) = hull[i];
                let (bx, by) = hull[(i + 1) % h];
                // inward unit normal of the CCW edge a -> b
                let (ex, ey) = (bx - ax, by - ay);
                let len = (ex * ex + ey * ey).sqrt();
                let (nx, ny) = (-ey / len, ex / len);
                rows[(i, 0)] = nx;
                rows[(i, 1)] = ny;
                offsets[i] = -(nx * ax + ny * ay);
            }
            return Ok(Self { rows, offsets });
        }
        Err(Error::InvalidParameter(format!(
            "containment for a {k}-vertex polytope in dimension {m} is not supported"
        )))
    }

    fn contains(&self, point: ArrayView1<F>, tol: F) -> bool {
        for (row, &off) in self.rows.rows().into_iter().zip(self.offsets.iter()) {
            if row.dot(&point) + off < -tol {
                return false;
            }
        }
        true
    }
}

/// Whether `point` lies inside the polytope or within `tol` of every facet
/// (signed Euclidean facet distance).  Simplices use the barycentric-gradient
/// test; other planar polytopes use half-plane tests on the vertex hull.
///
/// # Panics
/// For `k > m+1` polytopes in ambient dimension 3 or higher, which the facet
/// machinery does not cover.
pub fn contains<F: Scalar>(poly: &Polytope<F>, point: ArrayView1<F>, tol: F) -> bool {
    assert_eq!(
        point.len(),
        poly.ambient_dim(),
        "point dimension must match the polytope"
    );
    match FacetTester::build(poly) {
        Ok(t) => t.contains(point, tol),
        Err(Error::DegenerateInput(_)) => {
            // collapsed polytope: fall back to distance from the vertex hull
            degenerate_contains(poly, point, tol)
        }
        Err(e) => panic!("{e}"),
    }
}

/// Containment for polytopes whose facet representation is degenerate
/// (collapsed simplices, collinear vertex sets): distance to the nearest
/// vertex or edge segment.
fn degenerate_contains<F: Scalar>(poly: &Polytope<F>, point: ArrayView1<F>, tol: F) -> bool {
    let m = poly.ambient_dim();
    let mut best = F::infinity();
    let k = poly.k();
    for i in 0..k {
        for j in i..k {
            // distance from point to segment v_i -> v_j
            let mut dd = F::zero();
            let mut dp = F::zero();
            for c in 0..m {
                let d = poly.vertices[(j, c)] - poly.vertices[(i, c)];
                dd += d * d;
                dp += d * (point[c] - poly.vertices[(i, c)]);
            }
            let t = if dd > F::zero() {
                (dp / dd).max(F::zero()).min(F::one())
            } else {
                F::zero()
            };
            let mut dist = F::zero();
            for c in 0..m {
                let d = poly.vertices[(j, c)] - poly.vertices[(i, c)];
                let r = point[c] - poly.vertices[(i, c)] - t * d;
                dist += r * r;
            }
            best = best.min(dist.sqrt());
        }
    }
    best <= tol
}

fn collect_points_2d<F: Scalar>(m: ArrayView2<F>) -> Vec<(F, F)> {
    m.rows().into_iter().map(|r| (r[0], r[1])).collect()
}

/// Cross product `(b - a) x (c - a)`.
fn cross<F: Scalar>(a: (F, F), b: (F, F), c: (F, F)) -> F {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

/// Monotone-chain convex hull in counter-clockwise order without repeated
/// endpoints; collinear boundary points are dropped.  Degenerate inputs give
/// hulls with fewer than three points.
fn convex_hull_2d<F: Scalar>(points: &[(F, F)]) -> Vec<(F, F)> {
    let mut pts: Vec<(F, F)> = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    pts.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<(F, F)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2
            && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= F::zero()
        {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(F, F)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2
            && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= F::zero()
        {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Shoelace area of a polygon given in counter-clockwise order.
fn polygon_area<F: Scalar>(poly: &[(F, F)]) -> F {
    if poly.len() < 3 {
        return F::zero();
    }
    let mut acc = F::zero();
    for i in 0..poly.len() {
        let (ax, ay) = poly[i];
        let (bx, by) = poly[(i + 1) % poly.len()];
        acc += ax * by - bx * ay;
    }
    (acc / F::cast(2.0)).abs()
}

/// Validates the fitting preconditions shared by the initialization and the
/// fit: `n >= k >= m+1` and an `m`-dimensional cloud (smallest covariance
/// eigenvalue above [`CLOUD_RANK_TOL`] times the largest).
fn validate_cloud<F: Scalar>(points: ArrayView2<F>, k: usize) -> Result<()> {
    let (n, m) = points.dim();
    if m == 0 {
        return Err(Error::InvalidParameter(
            "points must have at least one coordinate".to_string(),
        ));
    }
    if k < m + 1 {
        return Err(Error::InvalidParameter(format!(
            "k = {k} vertices cannot enclose a {m}-dimensional cloud; need k >= m+1"
        )));
    }
    if n < k {
        return Err(Error::InvalidParameter(format!(
            "need at least k = {k} points, got {n}"
        )));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("points must be finite".to_string()));
    }
    let mean = points.mean_axis(Axis(0)).expect("non-empty");
    let centered = &points - &mean.view().insert_axis(Axis(0));
    let cov = centered.t().dot(&centered) / F::cast(n as f64);
    let eig = linalg::symmetric_eigen(cov.view())?;
    let largest = eig.values[m - 1];
    if !(eig.values[0] > F::cast(CLOUD_RANK_TOL) * largest) || !(largest > F::zero()) {
        return Err(Error::DegenerateInput(format!(
            "point cloud does not span {m} dimensions (covariance eigenvalues {:?})",
            eig.values
        )));
    }
    Ok(())
}

/// Reduces a cloud to the points that can support enclosing facets: the
/// convex hull for planar clouds, everything otherwise.
fn reduce_cloud<F: Scalar>(points: ArrayView2<F>) -> Array2<F> {
    if points.ncols() == 2 {
        let hull = convex_hull_2d(&collect_points_2d(points));
        if hull.len() >= 3 {
            let mut out = Array2::<F>::zeros((hull.len(), 2));
            for (i, &(x, y)) in hull.iter().enumerate() {
                out[(i, 0)] = x;
                out[(i, 1)] = y;
            }
            return out;
        }
    }
    points.to_owned()
}

/// The initialization of the simplex fit: a maximum-volume inscribed simplex
/// grown greedily from the farthest point pair, dilated about its centroid
/// by the smallest factor that encloses the whole cloud.  Its volume upper
/// bounds the fitted volume.
pub fn initial_enclosing_simplex<F: Scalar>(points: ArrayView2<F>) -> Result<Polytope<F>> {
    let m = points.ncols();
    validate_cloud(points, m + 1)?;
    let reduced = reduce_cloud(points);
    let n = reduced.nrows();
    // farthest pair
    let mut best = (0usize, 0usize, F::neg_infinity());
    for i in 0..n {
        for j in (i + 1)..n {
            let mut dist = F::zero();
            for c in 0..m {
                let d = reduced[(i, c)] - reduced[(j, c)];
                dist += d * d;
            }
            if dist > best.2 {
                best = (i, j, dist);
            }
        }
    }
    let mut chosen = vec![best.0, best.1];
    // greedy growth: repeatedly add the point farthest from the affine hull
    // of the current set, tracked with an orthonormal basis
    let mut basis: Vec<Array1<F>> = Vec::new();
    {
        let mut dir = &reduced.row(best.1) - &reduced.row(best.0);
        let norm = dir.dot(&dir).sqrt();
        if !(norm > F::zero()) {
            return Err(Error::DegenerateInput("all points coincide".to_string()));
        }
        dir.mapv_inplace(|v| v / norm);
        basis.push(dir);
    }
    while chosen.len() < m + 1 {
        let origin = reduced.row(chosen[0]);
        let mut far = (0usize, F::neg_infinity());
        for i in 0..n {
            let mut resid = &reduced.row(i) - &origin;
            for b in &basis {
                let c = resid.dot(b);
                resid.scaled_add(-c, b);
            }
            let r = resid.dot(&resid);
            if r > far.1 {
                far = (i, r);
            }
        }
        if !(far.1.sqrt() > F::zero()) {
            return Err(Error::DegenerateInput(
                "point cloud does not span the ambient dimension".to_string(),
            ));
        }
        let mut resid = &reduced.row(far.0) - &origin;
        for b in &basis {
            let c = resid.dot(b);
            resid.scaled_add(-c, b);
        }
        let norm = resid.dot(&resid).sqrt();
        resid.mapv_inplace(|v| v / norm);
        basis.push(resid);
        chosen.push(far.0);
    }
    let mut inscribed = Array2::<F>::zeros((m + 1, m));
    for (r, &idx) in chosen.iter().enumerate() {
        inscribed.row_mut(r).assign(&reduced.row(idx));
    }
    let inscribed = Polytope::new(inscribed)?;
    // dilation about the centroid: a point with smallest barycentric
    // coordinate c needs factor 1 - (m+1) c, so take the worst over the cloud
    let kf = F::cast((m + 1) as f64);
    let mut worst = F::one();
    for row in points.rows() {
        let bary = barycentric(&inscribed, row)?;
        for &c in bary.iter() {
            worst = worst.max(F::one() - kf * c);
        }
    }
    let center = inscribed.centroid();
    let mut vertices = inscribed.vertices().clone();
    for mut row in vertices.rows_mut() {
        for (v, &c) in row.iter_mut().zip(center.iter()) {
            *v = c + worst * (*v - c);
        }
    }
    Polytope::new(vertices)
}

/// Facet representation of an intersection of half-spaces
/// `normals[i] . x <= offsets[i]` with unit normals.
struct FacetSet<F: Scalar> {
    normals: Array2<F>,
    offsets: Array1<F>,
}

impl<F: Scalar> FacetSet<F> {
    /// Facet planes of a non-degenerate simplex, one opposite each vertex.
    fn from_simplex(poly: &Polytope<F>) -> Result<Self> {
        let tester = FacetTester::build(poly)?;
        // tester rows satisfy row . p + off >= 0 inside; flip to <= form
        let k = tester.rows.nrows();
        let m = tester.rows.ncols();
        let mut normals = Array2::<F>::zeros((k, m));
        let mut offsets = Array1::<F>::zeros(k);
        for i in 0..k {
            for c in 0..m {
                normals[(i, c)] = -tester.rows[(i, c)];
            }
            offsets[i] = tester.offsets[i];
        }
        Ok(Self { normals, offsets })
    }

    /// Largest dot product of a facet normal with the cloud.
    fn support(&self, cloud: ArrayView2<F>, facet: usize) -> F {
        let normal = self.normals.row(facet);
        let mut best = F::neg_infinity();
        for row in cloud.rows() {
            best = best.max(normal.dot(&row));
        }
        best
    }

    /// Pulls every facet to its support position.
    fn resupport_all(&mut self, cloud: ArrayView2<F>) {
        for i in 0..self.normals.nrows() {
            self.offsets[i] = self.support(cloud, i);
        }
    }

    /// Rebuilds simplex vertices: vertex `j` is the intersection of all
    /// facets except `j`.  Returns the vertices and volume, or `None` when a
    /// facet system is singular.
    fn simplex_vertices(&self) -> Option<(Array2<F>, F)> {
        let k = self.normals.nrows();
        let m = self.normals.ncols();
        debug_assert_eq!(k, m + 1);
        let mut vertices = Array2::<F>::zeros((k, m));
        let mut mat = Array2::<F>::zeros((m, m));
        let mut rhs = Array1::<F>::zeros(m);
        for j in 0..k {
            let mut r = 0;
            for l in 0..k {
                if l == j {
                    continue;
                }
                mat.row_mut(r).assign(&self.normals.row(l));
                rhs[r] = self.offsets[l];
                r += 1;
            }
            match linalg::solve(mat.view(), rhs.view()) {
                Ok(x) => vertices.row_mut(j).assign(&x),
                Err(_) => return None,
            }
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return None;
        }
        // every vertex must respect every half-space: an over-rotated facet
        // can leave a positive-volume but inverted vertex triple that no
        // longer bounds the intersection (the volume alone cannot tell,
        // being an absolute value)
        let scale = self
            .offsets
            .iter()
            .fold(F::one(), |acc, &v| acc.max(v.abs()));
        let slack = F::cast(1e-9) * scale;
        for v in vertices.rows() {
            for i in 0..k {
                if self.normals.row(i).dot(&v) > self.offsets[i] + slack {
                    return None;
                }
            }
        }
        let poly = Polytope::raw(vertices);
        let vol = simplex_volume(&poly).ok()?;
        if !(vol > F::zero()) || !vol.is_finite() {
            return None;
        }
        let Polytope { vertices } = poly;
        Some((vertices, vol))
    }
}

/// Rotates vector `v` in the coordinate plane `(a, b)` by angle `theta`.
fn rotate_in_plane<F: Scalar>(v: ArrayView1<F>, a: usize, b: usize, theta: F) -> Array1<F> {
    let mut out = v.to_owned();
    let (sin, cos) = (theta.sin(), theta.cos());
    out[a] = cos * v[a] - sin * v[b];
    out[b] = sin * v[a] + cos * v[b];
    out
}

/// Facet-descent fit of the minimum-volume enclosing simplex (`k = m+1`).
fn fit_simplex<F: Scalar>(points: ArrayView2<F>) -> Result<Polytope<F>> {
    let m = points.ncols();
    let cloud = reduce_cloud(points);
    let init = initial_enclosing_simplex(points)?;
    let mut facets = FacetSet::from_simplex(&init)?;
    facets.resupport_all(cloud.view());
    let (mut vertices, mut volume) = facets
        .simplex_vertices()
        .ok_or_else(|| Error::DegenerateInput("initial simplex is degenerate".to_string()))?;
    let planes: Vec<(usize, usize)> = (0..m)
        .flat_map(|a| ((a + 1)..m).map(move |b| (a, b)))
        .collect();
    let theta_min = F::cast(ROTATION_STEP_MIN);
    let eps = F::cast(1e-12);
    for _pass in 0..FIT_PASS_CAP {
        let pass_start = volume;
        // facets sit at their support by construction; descend on rotations
        for facet in 0..facets.normals.nrows() {
            for &(a, b) in &planes {
                let mut theta = F::cast(ROTATION_STEP_INIT);
                while theta > theta_min {
                    let mut moved = false;
                    for sign in [F::one(), -F::one()] {
                        let normal = rotate_in_plane(facets.normals.row(facet), a, b, sign * theta);
                        let saved_normal = facets.normals.row(facet).to_owned();
                        let saved_offset = facets.offsets[facet];
                        facets.normals.row_mut(facet).assign(&normal);
                        facets.offsets[facet] = facets.support(cloud.view(), facet);
                        match facets.simplex_vertices() {
                            Some((v, vol)) if vol < volume * (F::one() - eps) => {
                                vertices = v;
                                volume = vol;
                                moved = true;
                                break;
                            }
                            _ => {
                                facets.normals.row_mut(facet).assign(&saved_normal);
                                facets.offsets[facet] = saved_offset;
                            }
                        }
                    }
                    if !moved {
                        theta *= F::cast(0.5);
                    }
                }
            }
        }
        let improvement = (pass_start - volume) / pass_start;
        if improvement < F::cast(FIT_REL_IMPROVEMENT) {
            break;
        }
    }
    Polytope::new(vertices)
}

/// Exact fit for one-dimensional clouds: `k` evenly spaced vertices across
/// the interval hull, whose length is the minimum possible volume.
fn fit_interval<F: Scalar>(points: ArrayView2<F>, k: usize) -> Result<Polytope<F>> {
    let mut lo = F::infinity();
    let mut hi = F::neg_infinity();
    for &v in points.column(0) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let mut vertices = Array2::<F>::zeros((k, 1));
    let den = F::cast((k - 1) as f64);
    for i in 0..k {
        vertices[(i, 0)] = lo + (hi - lo) * F::cast(i as f64) / den;
    }
    Polytope::new(vertices)
}

/// Planar fit for `k` vertices beyond the simplex case: facet descent on `k`
/// half-planes whose intersections in cyclic order are the vertices.
fn fit_polygon<F: Scalar>(points: ArrayView2<F>, k: usize) -> Result<Polytope<F>> {
    let hull_pts = convex_hull_2d(&collect_points_2d(points));
    if hull_pts.len() <= k {
        // the hull itself is optimal; pad extra vertices onto the longest
        // edges so the count is exactly k without changing the set
        let mut verts = hull_pts;
        while verts.len() < k {
            let h = verts.len();
            let mut longest = (0usize, F::neg_infinity());
            for i in 0..h {
                let (ax, ay) = verts[i];
                let (bx, by) = verts[(i + 1) % h];
                let d = (bx - ax) * (bx - ax) + (by - ay) * (by - ay);
                if d > longest.1 {
                    longest = (i, d);
                }
            }
            let (ax, ay) = verts[longest.0];
            let (bx, by) = verts[(longest.0 + 1) % h];
            let half = F::cast(0.5);
            verts.insert(longest.0 + 1, ((ax + bx) * half, (ay + by) * half));
        }
        let mut vertices = Array2::<F>::zeros((k, 2));
        for (i, &(x, y)) in verts.iter().enumerate() {
            vertices[(i, 0)] = x;
            vertices[(i, 1)] = y;
        }
        return Polytope::new(vertices);
    }
    let mut cloud = Array2::<F>::zeros((hull_pts.len(), 2));
    for (i, &(x, y)) in hull_pts.iter().enumerate() {
        cloud[(i, 0)] = x;
        cloud[(i, 1)] = y;
    }
    // k supporting half-planes at evenly spaced outward angles
    let mut normals = Array2::<F>::zeros((k, 2));
    for i in 0..k {
        let angle = F::cast(2.0 * std::f64::consts::PI * i as f64 / k as f64);
        normals[(i, 0)] = angle.cos();
        normals[(i, 1)] = angle.sin();
    }
    let mut facets = FacetSet {
        normals,
        offsets: Array1::zeros(k),
    };
    facets.resupport_all(cloud.view());
    let (mut vertices, mut area) = polygon_vertices(&facets)
        .ok_or_else(|| Error::DegenerateInput("initial polygon is degenerate".to_string()))?;
    let theta_min = F::cast(ROTATION_STEP_MIN);
    let eps = F::cast(1e-12);
    for _pass in 0..FIT_PASS_CAP {
        let pass_start = area;
        for facet in 0..k {
            let mut theta = F::cast(ROTATION_STEP_INIT);
            while theta > theta_min {
                let mut moved = false;
                for sign in [F::one(), -F::one()] {
                    let normal = rotate_in_plane(facets.normals.row(facet), 0, 1, sign * theta);
                    let saved_normal = facets.normals.row(facet).to_owned();
                    let saved_offset = facets.offsets[facet];
                    facets.normals.row_mut(facet).assign(&normal);
                    facets.offsets[facet] = facets.support(cloud.view(), facet);
                    match polygon_vertices(&facets) {
                        Some((v, a)) if a < area * (F::one() - eps) => {
                            vertices = v;
                            area = a;
                            moved = true;
                            break;
                        }
                        _ => {
                            facets.normals.row_mut(facet).assign(&saved_normal);
                            facets.offsets[facet] = saved_offset;
                        }
                    }
                }
                if !moved {
                    theta *= F::cast(0.5);
                }
            }
        }
        let improvement = (pass_start - area) / pass_start;
        if improvement < F::cast(FIT_REL_IMPROVEMENT) {
            break;
        }
    }
    Polytope::new(vertices)
}

/// Vertices of a polygon given as cyclically ordered half-planes: vertex `i`
/// is the intersection of facets `i` and `i+1`.  Returns `None` when an
/// intersection fails, a vertex escapes another half-plane (a redundant
/// facet), or the area degenerates.
fn polygon_vertices<F: Scalar>(facets: &FacetSet<F>) -> Option<(Array2<F>, F)> {
    let k = facets.normals.nrows();
    let mut vertices = Array2::<F>::zeros((k, 2));
    for i in 0..k {
        let j = (i + 1) % k;
        let (a, b) = (facets.normals[(i, 0)], facets.normals[(i, 1)]);
        let (c, d) = (facets.normals[(j, 0)], facets.normals[(j, 1)]);
        let det = a * d - b * c;
        if det.abs() < F::cast(1e-14) {
            return None;
        }
        let (p, q) = (facets.offsets[i], facets.offsets[j]);
        vertices[(i, 0)] = (p * d - b * q) / det;
        vertices[(i, 1)] = (a * q - p * c) / det;
    }
    if vertices.iter().any(|v| !v.is_finite()) {
        return None;
    }
    // every vertex must respect every half-plane, else a facet went redundant
    let scale = facets
        .offsets
        .iter()
        .fold(F::one(), |acc, &v| acc.max(v.abs()));
    let slack = F::cast(1e-9) * scale;
    for v in vertices.rows() {
        for i in 0..k {
            if facets.normals.row(i).dot(&v) > facets.offsets[i] + slack {
                return None;
            }
        }
    }
    // signed shoelace: cyclic intersections of angle-ordered facets are CCW
    let mut acc = F::zero();
    for i in 0..k {
        let (ax, ay) = (vertices[(i, 0)], vertices[(i, 1)]);
        let (bx, by) = (vertices[((i + 1) % k, 0)], vertices[((i + 1) % k, 1)]);
        acc += ax * by - bx * ay;
    }
    let area = acc / F::cast(2.0);
    if !(area > F::zero()) || !area.is_finite() {
        return None;
    }
    Some((vertices, area))
}

/// Fits the minimum-volume enclosing convex `k`-polytope around a point
/// cloud.
///
/// The simplex case `k = m+1` runs the facet-descent local search; planar
/// clouds support any `k >= 3`; one-dimensional clouds are exact for any
/// `k >= 2`.  Rank-deficient clouds are rejected, as is `k < m+1`.
pub fn fit_mvecp<F: Scalar>(points: ArrayView2<F>, k: usize) -> Result<Polytope<F>> {
    validate_cloud(points, k)?;
    let m = points.ncols();
    if m == 1 {
        fit_interval(points, k)
    } else if k == m + 1 {
        fit_simplex(points)
    } else if m == 2 {
        fit_polygon(points, k)
    } else {
        Err(Error::InvalidParameter(format!(
            "fitting a {k}-vertex polytope in dimension {m} is not supported; \
             only k = m+1 is available above dimension 2"
        )))
    }
}

/// Monte Carlo estimate of the symmetric-difference volume between two
/// polytopes of equal ambient dimension.
#[derive(Debug, Clone, Copy)]
pub struct SymdiffEstimate<F> {
    /// Estimated volume of the symmetric difference.
    pub volume: F,
    /// Monte Carlo standard error of the estimate.
    pub std_error: F,
}

/// Estimates the volume of the symmetric difference by uniform sampling over
/// the joint bounding box of both vertex sets.
pub fn symdiff_volume_mc<F: Scalar, R: Rng + ?Sized>(
    p1: &Polytope<F>,
    p2: &Polytope<F>,
    samples: usize,
    rng: &mut R,
) -> Result<SymdiffEstimate<F>> {
    let m = p1.ambient_dim();
    if p2.ambient_dim() != m {
        return Err(Error::InvalidParameter(format!(
            "ambient dimensions differ: {m} vs {}",
            p2.ambient_dim()
        )));
    }
    if samples == 0 {
        return Err(Error::InvalidParameter(
            "symmetric-difference estimate needs at least one sample".to_string(),
        ));
    }
    let mut lo = Array1::<F>::from_elem(m, F::infinity());
    let mut hi = Array1::<F>::from_elem(m, F::neg_infinity());
    for poly in [p1, p2] {
        for row in poly.vertices().rows() {
            for c in 0..m {
                lo[c] = lo[c].min(row[c]);
                hi[c] = hi[c].max(row[c]);
            }
        }
    }
    let mut box_volume = F::one();
    for c in 0..m {
        box_volume *= hi[c] - lo[c];
    }
    if !(box_volume > F::zero()) {
        // both polytopes are flat in some direction: symmetric difference
        // has measure zero
        return Ok(SymdiffEstimate {
            volume: F::zero(),
            std_error: F::zero(),
        });
    }
    let t1 = FacetTester::build(p1);
    let t2 = FacetTester::build(p2);
    let mut point = Array1::<F>::zeros(m);
    let mut hits = 0usize;
    for _ in 0..samples {
        for c in 0..m {
            point[c] = lo[c] + F::unit_uniform(rng) * (hi[c] - lo[c]);
        }
        let in1 = match &t1 {
            Ok(t) => t.contains(point.view(), F::zero()),
            Err(_) => false,
        };
        let in2 = match &t2 {
            Ok(t) => t.contains(point.view(), F::zero()),
            Err(_) => false,
        };
        if in1 != in2 {
            hits += 1;
        }
    }
    let frac = F::cast(hits as f64) / F::cast(samples as f64);
    let volume = box_volume * frac;
    let std_error = box_volume * (frac * (F::one() - frac) / F::cast(samples as f64)).sqrt();
    Ok(SymdiffEstimate { volume, std_error })
}

//! Replicated estimation sweeps over a node-count grid, emitting plot-ready
//! long-format CSV.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use mmsbm::embedding::{procrustes_align, EmbedOptions};
use mmsbm::error::{Error, Result};
use mmsbm::estimation::{
    estimate_policies, for_each_permutation, match_permutation, match_vertices, ShrinkPolicy,
    EXHAUSTIVE_MATCH_LIMIT,
};
use mmsbm::model::{sample_mmsbm, GraphTruth, ModelSpec};

use crate::config::ExperimentConfig;

/// Column order of the sweep CSV.
pub const SWEEP_HEADER: &str =
    "n,replicate,policy,b_error,vertex_error,alpha_error,pi_max_error,runtime,error";

/// One output row of the sweep CSV.
///
/// Rows appear in `(n, replicate, policy)` order: grid points ascending,
/// replicates ascending, policies in config order.  Numeric columns are
/// empty when the cell failed (the `error` column then carries the message)
/// or when the quantity is undefined for the run (`alpha_error` and
/// `pi_max_error` require `d = k`).  `runtime` is the wall time in seconds
/// of the cell's shared embedding and fits, so every policy row of a cell
/// reports the same value; it is the one column that varies between
/// otherwise identical runs.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Node count of the cell.
    pub n: usize,
    /// Replicate index within the cell, from 0.
    pub replicate: usize,
    /// Policy in its textual form, e.g. `fixed:0.9`.
    pub policy: String,
    /// Permutation-minimized Frobenius error of the estimated connectivity
    /// matrix.
    pub b_error: Option<f64>,
    /// Max vertex distance of the corrected polytope after Procrustes
    /// alignment, minimized over vertex correspondences.
    pub vertex_error: Option<f64>,
    /// Max coordinate error of the concentration estimate under the
    /// connectivity-matching permutation.
    pub alpha_error: Option<f64>,
    /// Max entry error of the membership estimate under the
    /// connectivity-matching permutation.
    pub pi_max_error: Option<f64>,
    /// Wall time in seconds for the cell.
    pub runtime: f64,
    /// Failure message when the cell could not be estimated.
    pub error: Option<String>,
}

impl SweepRow {
    /// Renders the row in the documented column order.
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{:.16e},{}",
            self.n,
            self.replicate,
            self.policy,
            render_opt(self.b_error),
            render_opt(self.vertex_error),
            render_opt(self.alpha_error),
            render_opt(self.pi_max_error),
            self.runtime,
            self.error.as_deref().map(sanitize).unwrap_or_default(),
        )
    }

    /// Parses a rendered row; the inverse of [`SweepRow::to_csv_line`].
    pub fn parse(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected 9 fields, got {}", fields.len()),
            });
        }
        let bad = |what: &str, detail: String| Error::Parse {
            line: 1,
            message: format!("bad {what}: {detail}"),
        };
        Ok(SweepRow {
            n: fields[0]
                .parse()
                .map_err(|e| bad("n", format!("{:?}: {e}", fields[0])))?,
            replicate: fields[1]
                .parse()
                .map_err(|e| bad("replicate", format!("{:?}: {e}", fields[1])))?,
            policy: fields[2].to_string(),
            b_error: parse_opt(fields[3]).map_err(|e| bad("b_error", e))?,
            vertex_error: parse_opt(fields[4]).map_err(|e| bad("vertex_error", e))?,
            alpha_error: parse_opt(fields[5]).map_err(|e| bad("alpha_error", e))?,
            pi_max_error: parse_opt(fields[6]).map_err(|e| bad("pi_max_error", e))?,
            runtime: fields[7]
                .parse()
                .map_err(|e| bad("runtime", format!("{:?}: {e}", fields[7])))?,
            error: if fields[8].is_empty() {
                None
            } else {
                Some(fields[8].to_string())
            },
        })
    }
}

fn render_opt(value: Option<f64>) -> String {
    value.map(|v| format!("{v:.16e}")).unwrap_or_default()
}

fn parse_opt(field: &str) -> std::result::Result<Option<f64>, String> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse::<f64>()
        .map(Some)
        .map_err(|e| format!("{field:?}: {e}"))
}

fn sanitize(message: &str) -> String {
    message.replace(',', ";").replace('\n', " ")
}

/// Runs the configured sweep and writes the CSV to `out`.
///
/// Cells (one per grid point and replicate) run on a worker pool of `jobs`
/// threads (`None` leaves the pool size to the runtime); output order is
/// deterministic regardless of scheduling.
pub fn cmd_sweep(config: &ExperimentConfig, jobs: Option<usize>, out: &Path) -> Result<()> {
    let rows = run_sweep(config, jobs)?;
    let mut w = BufWriter::new(File::create(out)?);
    writeln!(w, "{SWEEP_HEADER}")?;
    for row in &rows {
        writeln!(w, "{}", row.to_csv_line())?;
    }
    w.flush()?;
    Ok(())
}

/// Computes the sweep rows in `(n, replicate, policy)` order.
pub fn run_sweep(config: &ExperimentConfig, jobs: Option<usize>) -> Result<Vec<SweepRow>> {
    let spec = config.model_spec()?;
    let policies = config.parsed_policies()?;
    let cells: Vec<(usize, usize)> = config
        .n_grid
        .iter()
        .flat_map(|&n| (0..config.replicates).map(move |r| (n, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot build worker pool: {e}")))?;
    let nested: Vec<Vec<SweepRow>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(n, replicate)| run_cell(&spec, &policies, config.seed, n, replicate))
            .collect()
    });
    Ok(nested.into_iter().flatten().collect())
}

/// Per-policy error metrics of one successfully estimated cell.
struct CellMetrics {
    b_error: f64,
    vertex_error: f64,
    alpha_error: Option<f64>,
    pi_max_error: Option<f64>,
}

fn run_cell(
    spec: &ModelSpec<f64>,
    policies: &[ShrinkPolicy<f64>],
    base_seed: u64,
    n: usize,
    replicate: usize,
) -> Vec<SweepRow> {
    let started = Instant::now();
    let outcome = estimate_cell(spec, policies, base_seed, n, replicate);
    let runtime = started.elapsed().as_secs_f64();
    match outcome {
        Ok(metrics) => policies
            .iter()
            .zip(metrics)
            .map(|(policy, m)| SweepRow {
                n,
                replicate,
                policy: policy.to_string(),
                b_error: Some(m.b_error),
                vertex_error: Some(m.vertex_error),
                alpha_error: m.alpha_error,
                pi_max_error: m.pi_max_error,
                runtime,
                error: None,
            })
            .collect(),
        Err(e) => policies
            .iter()
            .map(|policy| SweepRow {
                n,
                replicate,
                policy: policy.to_string(),
                b_error: None,
                vertex_error: None,
                alpha_error: None,
                pi_max_error: None,
                runtime,
                error: Some(e.to_string()),
            })
            .collect(),
    }
}

fn estimate_cell(
    spec: &ModelSpec<f64>,
    policies: &[ShrinkPolicy<f64>],
    base_seed: u64,
    n: usize,
    replicate: usize,
) -> Result<Vec<CellMetrics>> {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(replicate as u64));
    let graph = sample_mmsbm(spec, n, &mut rng)?;
    let results = estimate_policies(
        &graph,
        spec.k(),
        spec.d(),
        policies,
        &EmbedOptions::default(),
    )?;
    let truth = graph.truth().expect("sampler attaches ground truth");
    results
        .iter()
        .map(|result| {
            let matched = match_permutation(result.b_hat.view(), spec.b().view())?;
            let vertex_error =
                vertex_error_aligned(result.s_hat.vertices().view(), spec.vertex_matrix().view())?;
            let alpha_error = result
                .alpha_hat
                .as_ref()
                .map(|alpha| max_abs_permuted(alpha.view(), spec.alpha().view(), &matched.perm));
            let pi_max_error = result
                .pi_hat
                .as_ref()
                .map(|pi| max_abs_permuted_columns(pi.view(), truth, &matched.perm));
            Ok(CellMetrics {
                b_error: matched.error,
                vertex_error,
                alpha_error,
                pi_max_error,
            })
        })
        .collect()
}

fn max_abs_permuted(estimate: ArrayView1<f64>, reference: ArrayView1<f64>, perm: &[usize]) -> f64 {
    let mut worst = 0.0f64;
    for (i, &src) in perm.iter().enumerate() {
        worst = worst.max((estimate[src] - reference[i]).abs());
    }
    worst
}

fn max_abs_permuted_columns(
    estimate: ArrayView2<f64>,
    truth: &GraphTruth<f64>,
    perm: &[usize],
) -> f64 {
    let reference = truth.memberships.matrix();
    let mut worst = 0.0f64;
    for row in 0..estimate.nrows() {
        for (i, &src) in perm.iter().enumerate() {
            worst = worst.max((estimate[(row, src)] - reference[(row, i)]).abs());
        }
    }
    worst
}

/// Max vertex distance after Procrustes alignment, minimized over vertex
/// correspondences — the boxplot statistic of the polytope-recovery sweep.
///
/// Exhaustive over correspondences for small vertex counts; beyond
/// [`EXHAUSTIVE_MATCH_LIMIT`] the assignment heuristic picks one
/// correspondence and a single alignment is scored.
pub fn vertex_error_aligned(v_hat: ArrayView2<f64>, v_true: ArrayView2<f64>) -> Result<f64> {
    if v_hat.dim() != v_true.dim() {
        return Err(Error::InvalidParameter(format!(
            "vertex sets have shapes {:?} and {:?}",
            v_hat.dim(),
            v_true.dim()
        )));
    }
    let k = v_hat.nrows();
    if k <= EXHAUSTIVE_MATCH_LIMIT {
        let mut best = f64::INFINITY;
        for_each_permutation(k, &mut |perm| {
            let permuted = select_rows(v_hat, perm);
            if let Ok((_, worst)) = procrustes_align(permuted.view(), v_true) {
                best = best.min(worst);
            }
        });
        if best.is_finite() {
            Ok(best)
        } else {
            Err(Error::DegenerateInput(
                "no vertex correspondence admits an alignment".to_string(),
            ))
        }
    } else {
        let matched = match_vertices(v_hat, v_true)?;
        let permuted = select_rows(v_hat, &matched.perm);
        let (_, worst) = procrustes_align(permuted.view(), v_true)?;
        Ok(worst)
    }
}

fn select_rows(m: ArrayView2<f64>, perm: &[usize]) -> Array2<f64> {
    m.select(Axis(0), perm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn sweep_rows_render_and_parse_back() {
        let full = SweepRow {
            n: 500,
            replicate: 3,
            policy: "fixed:0.9".to_string(),
            b_error: Some(0.12345678901234568),
            vertex_error: Some(9.87e-3),
            alpha_error: Some(0.25),
            pi_max_error: Some(1e-6),
            runtime: 1.5,
            error: None,
        };
        let line = full.to_csv_line();
        assert_eq!(SweepRow::parse(&line).unwrap(), full);

        let failed = SweepRow {
            n: 100,
            replicate: 0,
            policy: "rate:3.25".to_string(),
            b_error: None,
            vertex_error: None,
            alpha_error: None,
            pi_max_error: None,
            runtime: 0.25,
            error: Some("dirichlet maximum likelihood did not converge (500 iterates)".to_string()),
        };
        let line = failed.to_csv_line();
        assert_eq!(SweepRow::parse(&line).unwrap(), failed);

        assert!(SweepRow::parse("1,2,3").is_err());
        assert!(SweepRow::parse("x,0,none,,,,,1.0,").is_err());
    }

    #[test]
    fn error_messages_cannot_break_the_row_format() {
        let row = SweepRow {
            n: 10,
            replicate: 1,
            policy: "none".to_string(),
            b_error: None,
            vertex_error: None,
            alpha_error: None,
            pi_max_error: None,
            runtime: 0.0,
            error: Some("bad, very bad\nindeed".to_string()),
        };
        let line = row.to_csv_line();
        let back = SweepRow::parse(&line).unwrap();
        assert_eq!(back.error.as_deref(), Some("bad; very bad indeed"));
    }

    #[test]
    fn aligned_vertex_error_sees_through_rotation_and_permutation() {
        let v: Array2<f64> = array![[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]];
        // rotate by 30 degrees, then shuffle rows
        let theta = 30f64.to_radians();
        let rot = array![[theta.cos(), theta.sin()], [-theta.sin(), theta.cos()]];
        let rotated = v.dot(&rot);
        let shuffled = rotated.select(Axis(0), &[2, 0, 1]);
        let err = vertex_error_aligned(shuffled.view(), v.view()).unwrap();
        assert!(err < 1e-12, "err {err}");

        // displacing one vertex by delta is detected at the right scale
        let mut bumped = shuffled.clone();
        bumped[(1, 0)] += 0.05;
        let err = vertex_error_aligned(bumped.view(), v.view()).unwrap();
        assert!(err > 0.01 && err < 0.1, "err {err}");
    }
}

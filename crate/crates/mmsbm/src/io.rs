//! Text and JSON interchange: edge lists, CSV matrices, and result DTOs.
//!
//! Every writer is deterministic byte-for-byte given the same input.  Numeric
//! text carries 17 significant digits (`{:.16e}`), which round-trips `f64`
//! exactly.  Edge lists start with a `# n=<count>` header followed by
//! 1-indexed `i j` pairs with `i < j`, sorted lexicographically — the same
//! order [`GraphSample`] stores.  Parse failures name the offending 1-based
//! line.
//!
//! The JSON payloads are plain `f64` data-transfer structs.  Deserialization
//! restores exactly what was serialized (structure and finiteness are
//! checked); semantic invariants such as polytope non-degeneracy remain the
//! producer's responsibility, so degenerate shapes (a fully shrunk polytope,
//! a single-vertex interval hull) survive the round trip.

use std::collections::BTreeMap;
use std::io::{BufRead, Read, Write};

use ndarray::{Array1, Array2, ArrayView2};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::embedding::PcaFrame;
use crate::error::{Error, Result};
use crate::estimation::EstimationResult;
use crate::model::GraphSample;
use crate::polytope::Polytope;
use crate::scalar::Scalar;

/// Writes a graph in the edge-list text format.
pub fn write_edge_list<F: Scalar, W: Write>(mut w: W, g: &GraphSample<F>) -> Result<()> {
    writeln!(w, "# n={}", g.n())?;
    for &(i, j) in g.edges() {
        writeln!(w, "{} {}", u64::from(i) + 1, u64::from(j) + 1)?;
    }
    Ok(())
}

/// Reads a graph from the edge-list text format.
///
/// The result carries no ground truth.  Indices are converted back to the
/// internal 0-based form; ordering, range, and `i < j` violations are
/// reported with their line number.
pub fn read_edge_list<F: Scalar, R: BufRead>(r: R) -> Result<GraphSample<F>> {
    let mut lines = r.lines();
    let header = match lines.next() {
        Some(line) => line?,
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "missing '# n=<count>' header".to_string(),
            })
        }
    };
    let n = parse_header(&header)?;
    let mut edges: Vec<(u32, u32)> = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        let pair = parse_edge(&line, n, line_no)?;
        if let Some(&last) = edges.last() {
            if pair <= last {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!(
                        "edge {} {} is not in strictly increasing order",
                        pair.0 + 1,
                        pair.1 + 1
                    ),
                });
            }
        }
        edges.push(pair);
    }
    GraphSample::new(n, edges, None)
}

fn parse_header(line: &str) -> Result<usize> {
    let rest = line
        .trim_end()
        .strip_prefix("# n=")
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("expected '# n=<count>' header, got {line:?}"),
        })?;
    rest.parse::<usize>().map_err(|e| Error::Parse {
        line: 1,
        message: format!("bad node count {rest:?}: {e}"),
    })
}

fn parse_edge(line: &str, n: usize, line_no: usize) -> Result<(u32, u32)> {
    let mut tokens = line.split_whitespace();
    let (a, b) = match (tokens.next(), tokens.next(), tokens.next()) {
        (Some(a), Some(b), None) => (a, b),
        _ => {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 'i j', got {line:?}"),
            })
        }
    };
    let i = parse_index(a, n, line_no)?;
    let j = parse_index(b, n, line_no)?;
    if i >= j {
        return Err(Error::Parse {
            line: line_no,
            message: format!("edge must satisfy i < j, got {i} {j}"),
        });
    }
    Ok(((i - 1) as u32, (j - 1) as u32))
}

fn parse_index(token: &str, n: usize, line_no: usize) -> Result<u64> {
    let value = token.parse::<u64>().map_err(|e| Error::Parse {
        line: line_no,
        message: format!("bad node index {token:?}: {e}"),
    })?;
    if value < 1 || value > n as u64 {
        return Err(Error::Parse {
            line: line_no,
            message: format!("node index {value} outside 1..={n}"),
        });
    }
    Ok(value)
}

/// Writes a matrix as CSV, one row per line, 17 significant digits per field.
pub fn write_matrix_csv<F: Scalar, W: Write>(mut w: W, m: ArrayView2<F>) -> Result<()> {
    if m.ncols() == 0 {
        return Err(Error::InvalidParameter(
            "cannot write a matrix with zero columns".to_string(),
        ));
    }
    for row in m.rows() {
        let mut first = true;
        for v in row.iter() {
            if first {
                first = false;
            } else {
                write!(w, ",")?;
            }
            write!(w, "{v:.16e}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Reads a CSV matrix written by [`write_matrix_csv`].
///
/// All rows must have the same field count and every field must be a finite
/// number.
pub fn read_matrix_csv<F: Scalar, R: BufRead>(r: R) -> Result<Array2<F>> {
    let mut data: Vec<F> = Vec::new();
    let mut cols: Option<usize> = None;
    let mut rows = 0usize;
    for (idx, line) in r.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let mut count = 0usize;
        for token in line.trim_end().split(',') {
            let value: f64 = token.trim().parse().map_err(|e| Error::Parse {
                line: line_no,
                message: format!("bad numeric field {token:?}: {e}"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("non-finite field {token:?}"),
                });
            }
            data.push(F::cast(value));
            count += 1;
        }
        match cols {
            None => cols = Some(count),
            Some(c) if c != count => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected {c} fields, got {count}"),
                });
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::Parse {
        line: 1,
        message: "empty matrix".to_string(),
    })?;
    Array2::from_shape_vec((rows, cols), data).map_err(|e| Error::InvalidParameter(e.to_string()))
}

/// Row-major dense matrix payload for JSON interchange.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDto {
    /// Row count.
    pub rows: usize,
    /// Column count.
    pub cols: usize,
    /// Entries in row-major order; `rows * cols` values.
    pub data: Vec<f64>,
}

impl MatrixDto {
    /// Captures a matrix as an `f64` payload.
    pub fn from_array<F: Scalar>(m: ArrayView2<F>) -> Self {
        MatrixDto {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.iter().map(widen).collect(),
        }
    }

    /// Rebuilds the matrix, checking shape coherence and finiteness.
    pub fn to_array<F: Scalar>(&self) -> Result<Array2<F>> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::InvalidParameter(format!(
                "matrix payload holds {} values for a {}x{} shape",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        let data = finite_cast(&self.data)?;
        Array2::from_shape_vec((self.rows, self.cols), data)
            .map_err(|e| Error::InvalidParameter(e.to_string()))
    }
}

/// Convex polytope payload: ambient dimension plus one vertex per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolytopeDto {
    /// Dimension every vertex lives in.
    pub ambient_dim: usize,
    /// Vertex coordinates, each of length `ambient_dim`.
    pub vertices: Vec<Vec<f64>>,
}

/// Captures a polytope as an `f64` payload.
pub fn polytope_to_dto<F: Scalar>(p: &Polytope<F>) -> PolytopeDto {
    PolytopeDto {
        ambient_dim: p.ambient_dim(),
        vertices: p
            .vertices()
            .rows()
            .into_iter()
            .map(|row| row.iter().map(widen).collect())
            .collect(),
    }
}

/// Rebuilds a polytope from its payload, preserving degenerate shapes.
pub fn polytope_from_dto<F: Scalar>(dto: &PolytopeDto) -> Result<Polytope<F>> {
    if dto.vertices.is_empty() {
        return Err(Error::InvalidParameter(
            "polytope payload has no vertices".to_string(),
        ));
    }
    let mut flat = Vec::with_capacity(dto.vertices.len() * dto.ambient_dim);
    for (idx, vertex) in dto.vertices.iter().enumerate() {
        if vertex.len() != dto.ambient_dim {
            return Err(Error::InvalidParameter(format!(
                "vertex {idx} has {} coordinates, ambient_dim is {}",
                vertex.len(),
                dto.ambient_dim
            )));
        }
        flat.extend_from_slice(vertex);
    }
    let data = finite_cast(&flat)?;
    let vertices = Array2::from_shape_vec((dto.vertices.len(), dto.ambient_dim), data)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(Polytope::raw(vertices))
}

/// Projection-frame payload matching [`PcaFrame`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaFrameDto {
    /// Column means of the input cloud.
    pub mean: Vec<f64>,
    /// Principal directions, one per column.
    pub basis: MatrixDto,
    /// Retained covariance eigenvalues, decreasing.
    pub spectrum: Vec<f64>,
}

fn frame_to_dto<F: Scalar>(frame: &PcaFrame<F>) -> PcaFrameDto {
    PcaFrameDto {
        mean: frame.mean.iter().map(widen).collect(),
        basis: MatrixDto::from_array(frame.basis.view()),
        spectrum: frame.spectrum.iter().map(widen).collect(),
    }
}

fn frame_from_dto<F: Scalar>(dto: &PcaFrameDto) -> Result<PcaFrame<F>> {
    Ok(PcaFrame {
        mean: Array1::from_vec(finite_cast(&dto.mean)?),
        basis: dto.basis.to_array()?,
        spectrum: Array1::from_vec(finite_cast(&dto.spectrum)?),
    })
}

/// Full estimation output as a JSON-friendly payload; matrices row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResultDto {
    /// Estimated connectivity matrix.
    pub b_hat: MatrixDto,
    /// Estimated membership matrix, when computed.
    pub pi_hat: Option<MatrixDto>,
    /// Estimated Dirichlet concentration, when computed.
    pub alpha_hat: Option<Vec<f64>>,
    /// Corrected polytope in embedding coordinates.
    pub s_hat: PolytopeDto,
    /// Uncorrected fit in embedding coordinates.
    pub s_hat_raw: PolytopeDto,
    /// Projection frame, absent when no projection happened.
    pub frame: Option<PcaFrameDto>,
    /// Named scalar diagnostics.
    pub diagnostics: BTreeMap<String, f64>,
}

/// Captures an estimation result as an `f64` payload.
pub fn result_to_dto<F: Scalar>(result: &EstimationResult<F>) -> EstimationResultDto {
    EstimationResultDto {
        b_hat: MatrixDto::from_array(result.b_hat.view()),
        pi_hat: result
            .pi_hat
            .as_ref()
            .map(|pi| MatrixDto::from_array(pi.view())),
        alpha_hat: result
            .alpha_hat
            .as_ref()
            .map(|alpha| alpha.iter().map(widen).collect()),
        s_hat: polytope_to_dto(&result.s_hat),
        s_hat_raw: polytope_to_dto(&result.s_hat_raw),
        frame: result.frame.as_ref().map(frame_to_dto),
        diagnostics: result
            .diagnostics
            .iter()
            .map(|(key, value)| (key.clone(), widen(value)))
            .collect(),
    }
}

/// Rebuilds an estimation result from its payload.
pub fn result_from_dto<F: Scalar>(dto: &EstimationResultDto) -> Result<EstimationResult<F>> {
    Ok(EstimationResult {
        b_hat: dto.b_hat.to_array()?,
        pi_hat: match &dto.pi_hat {
            Some(pi) => Some(pi.to_array()?),
            None => None,
        },
        alpha_hat: match &dto.alpha_hat {
            Some(alpha) => Some(Array1::from_vec(finite_cast(alpha)?)),
            None => None,
        },
        s_hat: polytope_from_dto(&dto.s_hat)?,
        s_hat_raw: polytope_from_dto(&dto.s_hat_raw)?,
        frame: match &dto.frame {
            Some(frame) => Some(frame_from_dto(frame)?),
            None => None,
        },
        diagnostics: dto
            .diagnostics
            .iter()
            .map(|(key, value)| (key.clone(), F::cast(*value)))
            .collect(),
    })
}

/// Serializes a payload as pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize, W: Write>(mut w: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

/// Reads a payload back from JSON.
pub fn read_json<T: DeserializeOwned, R: Read>(r: R) -> Result<T> {
    Ok(serde_json::from_reader(r)?)
}

fn widen<F: Scalar>(value: &F) -> f64 {
    value.to_f64().expect("float widens to f64")
}

fn finite_cast<F: Scalar>(values: &[f64]) -> Result<Vec<F>> {
    values
        .iter()
        .map(|&v| {
            if v.is_finite() {
                Ok(F::cast(v))
            } else {
                Err(Error::InvalidParameter(format!(
                    "non-finite value {v} in numeric payload"
                )))
            }
        })
        .collect()
}

//! JSON persistence for problem instances.
//!
//! The on-disk layout is a single object `{n, m, dims, graph, blocks}`
//! with matrices stored as row-major arrays of rows. Blocks whose
//! objective is a quadratic round-trip exactly; blocks backed by a
//! callback serialize as a marker only and cannot be loaded back, since
//! a function cannot be rebuilt from data.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{NodeProblem, ObjectiveBlock, ProblemInstance};
use crate::error::{Error, Result};
use crate::graphs::Graph;

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    n: usize,
    m: usize,
    dims: Vec<usize>,
    graph: GraphFile,
    blocks: Vec<BlockFile>,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    n: usize,
    edges: Vec<[usize; 2]>,
}

#[derive(Serialize, Deserialize)]
struct BlockFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    q: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c: Option<Vec<f64>>,
    /// Marker written for callback-backed objectives; never loadable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    oracle: Option<String>,
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
}

fn mat_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn rows_to_mat(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    if rows.is_empty() {
        return Err(Error::ShapeMismatch(format!("{what} has no rows")));
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::ShapeMismatch(format!("{what} rows have uneven lengths")));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), ncols, &flat))
}

/// Serialize an instance to pretty JSON at `path`.
pub fn save_instance(instance: &ProblemInstance, path: &Path) -> Result<()> {
    let blocks = instance
        .nodes()
        .iter()
        .map(|node| {
            let (q, c) = match node.objective().quadratic_parts() {
                Some((q, c)) => (
                    Some(mat_to_rows(q)),
                    Some(c.iter().copied().collect::<Vec<f64>>()),
                ),
                None => (None, None),
            };
            BlockFile {
                q,
                c,
                oracle: node
                    .objective()
                    .quadratic_parts()
                    .is_none()
                    .then(|| "callback".to_string()),
                a: mat_to_rows(node.a()),
                b: node.b().iter().copied().collect(),
            }
        })
        .collect();
    let file = InstanceFile {
        n: instance.n(),
        m: instance.m(),
        dims: instance.dims().to_vec(),
        graph: GraphFile {
            n: instance.graph().n(),
            edges: instance.graph().edges().iter().map(|&(i, j)| [i, j]).collect(),
        },
        blocks,
    };
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Load an instance from JSON at `path`, re-validating every invariant
/// the in-memory constructors enforce.
pub fn load_instance(path: &Path) -> Result<ProblemInstance> {
    let text = fs::read_to_string(path)?;
    let file: InstanceFile = serde_json::from_str(&text)?;
    if file.blocks.len() != file.n || file.dims.len() != file.n {
        return Err(Error::ShapeMismatch(format!(
            "n = {} but {} blocks and {} dims",
            file.n,
            file.blocks.len(),
            file.dims.len()
        )));
    }
    if file.graph.n != file.n {
        return Err(Error::ShapeMismatch(format!(
            "graph has {} nodes but the instance declares {}",
            file.graph.n, file.n
        )));
    }
    let edges: Vec<(usize, usize)> = file.graph.edges.iter().map(|e| (e[0], e[1])).collect();
    let graph = Graph::new(file.n, &edges)?;

    let mut nodes = Vec::with_capacity(file.n);
    for (i, block) in file.blocks.iter().enumerate() {
        if block.oracle.is_some() {
            return Err(Error::InvalidParam(format!(
                "node {i} has a callback objective, which cannot be rebuilt from JSON"
            )));
        }
        let q_rows = block.q.as_ref().ok_or_else(|| Error::MissingBlock {
            node: i,
            name: "q".into(),
        })?;
        let c = block.c.as_ref().ok_or_else(|| Error::MissingBlock {
            node: i,
            name: "c".into(),
        })?;
        let q = rows_to_mat(q_rows, &format!("node {i} cost matrix"))?;
        let a = rows_to_mat(&block.a, &format!("node {i} constraint block"))?;
        if file.dims[i] != q.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "node {i} declares width {} but q is {}x{}",
                file.dims[i],
                q.nrows(),
                q.ncols()
            )));
        }
        if a.nrows() != file.m {
            return Err(Error::ShapeMismatch(format!(
                "node {i} constraint block has {} rows, expected {}",
                a.nrows(),
                file.m
            )));
        }
        let objective = ObjectiveBlock::quadratic(q, DVector::from_vec(c.clone()))?;
        nodes.push(NodeProblem::new(
            objective,
            a,
            DVector::from_vec(block.b.clone()),
        )?);
    }
    ProblemInstance::new(graph, nodes)
}

//! File formats: headerless CSV matrices and JSON structures and results.
//!
//! Indices in JSON files are 1-based; in memory they are 0-based.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Edge, FusionGraph, Group, GroupStructure, SolveResult, TracePoint};

fn path_str(path: &Path) -> String {
    path.display().to_string()
}

/// Writes `m` as comma-separated rows, LF-terminated, with shortest
/// round-trip float formatting.
pub fn write_matrix_csv(path: &Path, m: ArrayView2<f64>) -> Result<()> {
    fs::write(path, matrix_to_csv(m))?;
    Ok(())
}

pub fn matrix_to_csv(m: ArrayView2<f64>) -> String {
    let mut out = String::with_capacity(m.len() * 20);
    for row in m.rows() {
        for (c, v) in row.iter().enumerate() {
            if c > 0 {
                out.push(',');
            }
            write!(out, "{v:?}").expect("writing to a String");
        }
        out.push('\n');
    }
    out
}

/// Writes a vector as a single CSV column.
pub fn write_vector_csv(path: &Path, v: ArrayView1<f64>) -> Result<()> {
    let col = v.to_owned().insert_axis(ndarray::Axis(1));
    write_matrix_csv(path, col.view())
}

pub fn read_matrix_csv(path: &Path) -> Result<Array2<f64>> {
    let text = fs::read_to_string(path)?;
    parse_matrix_csv(&text, &path_str(path))
}

/// Parses a headerless numeric CSV; `name` labels errors.
pub fn parse_matrix_csv(text: &str, name: &str) -> Result<Array2<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            path: name.to_string(),
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = record.position().map_or(rows as u64 + 1, |p| p.line());
        let parse_err = |msg: String| Error::Parse { path: name.to_string(), line, msg };
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(parse_err(format!("expected {c} fields, found {}", record.len())));
            }
            _ => {}
        }
        for (i, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(format!("field {}: `{field}` is not a number", i + 1)))?;
            if !v.is_finite() {
                return Err(parse_err(format!("field {}: `{field}` is not finite", i + 1)));
            }
            values.push(v);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::Parse {
        path: name.to_string(),
        line: 1,
        msg: "no data".into(),
    })?;
    Ok(Array2::from_shape_vec((rows, cols), values).expect("row lengths checked"))
}

/// Reads a single-column CSV as a vector.
pub fn read_vector_csv(path: &Path) -> Result<Array1<f64>> {
    let m = read_matrix_csv(path)?;
    if m.ncols() != 1 {
        return Err(Error::Parse {
            path: path_str(path),
            line: 1,
            msg: format!("expected a single column, found {}", m.ncols()),
        });
    }
    Ok(m.column(0).to_owned())
}

fn parse_json<T: DeserializeOwned>(text: &str, name: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_syntax() || inner.is_eof() {
            Error::Parse { path: name.to_string(), line: inner.line() as u64, msg: inner.to_string() }
        } else {
            Error::Schema { file: name.to_string(), field, msg: inner.to_string() }
        }
    })
}

fn schema(name: &str, field: String, msg: impl Into<String>) -> Error {
    Error::Schema { file: name.to_string(), field, msg: msg.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupEntry {
    members: Vec<usize>,
    #[serde(default = "unit_weight")]
    weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupsFile {
    dim: usize,
    groups: Vec<GroupEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeEntry {
    m: usize,
    l: usize,
    r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    dim: usize,
    edges: Vec<EdgeEntry>,
}

pub fn groups_to_json(groups: &GroupStructure) -> String {
    let file = GroupsFile {
        dim: groups.dim(),
        groups: groups
            .groups()
            .iter()
            .map(|g| GroupEntry {
                members: g.members.iter().map(|&m| m + 1).collect(),
                weight: g.weight,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("serializable") + "\n"
}

/// Parses `{"dim", "groups": [{"members", "weight"}]}` with 1-based members.
pub fn parse_groups_json(text: &str, name: &str) -> Result<GroupStructure> {
    let file: GroupsFile = parse_json(text, name)?;
    if file.dim == 0 {
        return Err(schema(name, "dim".into(), "must be positive"));
    }
    let mut groups = Vec::with_capacity(file.groups.len());
    for (gi, g) in file.groups.into_iter().enumerate() {
        if g.members.is_empty() {
            return Err(schema(name, format!("groups[{gi}].members"), "group is empty"));
        }
        let mut members = Vec::with_capacity(g.members.len());
        for (mi, &m) in g.members.iter().enumerate() {
            if m == 0 || m > file.dim {
                return Err(schema(
                    name,
                    format!("groups[{gi}].members[{mi}]"),
                    format!("index {m} outside 1..={}", file.dim),
                ));
            }
            if mi > 0 && m <= g.members[mi - 1] {
                return Err(schema(name, format!("groups[{gi}].members[{mi}]"), "members must be strictly ascending"));
            }
            members.push(m - 1);
        }
        if !(g.weight.is_finite() && g.weight > 0.0) {
            return Err(schema(name, format!("groups[{gi}].weight"), "weight must be positive"));
        }
        groups.push(Group { members, weight: g.weight });
    }
    GroupStructure::new(file.dim, groups)
}

pub fn read_groups_json(path: &Path) -> Result<GroupStructure> {
    parse_groups_json(&fs::read_to_string(path)?, &path_str(path))
}

pub fn graph_to_json(graph: &FusionGraph) -> String {
    let file = GraphFile {
        dim: graph.dim(),
        edges: graph
            .edges()
            .iter()
            .map(|e| EdgeEntry { m: e.m + 1, l: e.l + 1, r: e.r })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("serializable") + "\n"
}

/// Parses `{"dim", "edges": [{"m", "l", "r"}]}` with 1-based endpoints.
pub fn parse_graph_json(text: &str, name: &str) -> Result<FusionGraph> {
    let file: GraphFile = parse_json(text, name)?;
    if file.dim == 0 {
        return Err(schema(name, "dim".into(), "must be positive"));
    }
    let mut edges = Vec::with_capacity(file.edges.len());
    for (i, e) in file.edges.iter().enumerate() {
        for (field, v) in [("m", e.m), ("l", e.l)] {
            if v == 0 || v > file.dim {
                return Err(schema(name, format!("edges[{i}].{field}"), format!("index {v} outside 1..={}", file.dim)));
            }
        }
        if e.m >= e.l {
            return Err(schema(name, format!("edges[{i}].l"), "edges need m < l"));
        }
        if !(e.r.is_finite() && e.r != 0.0) {
            return Err(schema(name, format!("edges[{i}].r"), "weight must be finite and nonzero"));
        }
        if edges.iter().any(|p: &Edge| p.m == e.m - 1 && p.l == e.l - 1) {
            return Err(schema(name, format!("edges[{i}]"), "duplicate edge"));
        }
        edges.push(Edge { m: e.m - 1, l: e.l - 1, r: e.r });
    }
    FusionGraph::new(file.dim, edges)
}

pub fn read_graph_json(path: &Path) -> Result<FusionGraph> {
    parse_graph_json(&fs::read_to_string(path)?, &path_str(path))
}

/// Contents of `result.json`. `beta` is stored row-major with `shape`
/// `[J]` for a vector or `[J, K]` for a matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub method: String,
    pub shape: Vec<usize>,
    pub beta: Vec<f64>,
    pub objective: f64,
    pub smoothed_objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub wall_seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gram_seconds: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    /// Echo of the solver configuration.
    pub config: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TracePoint>>,
}

impl ResultFile {
    pub fn from_vector(method: &str, r: &SolveResult, config: serde_json::Value) -> Self {
        Self::build(method, vec![r.beta.len()], r.beta.to_vec(), r, config)
    }

    pub fn from_matrix(method: &str, r: &SolveResult<Array2<f64>>, config: serde_json::Value) -> Self {
        let (j, k) = r.beta.dim();
        Self::build(method, vec![j, k], r.beta.iter().copied().collect(), r, config)
    }

    fn build<T>(method: &str, shape: Vec<usize>, beta: Vec<f64>, r: &SolveResult<T>, config: serde_json::Value) -> Self {
        ResultFile {
            method: method.to_string(),
            shape,
            beta,
            objective: r.objective,
            smoothed_objective: r.smoothed_objective,
            iterations: r.iterations,
            converged: r.converged,
            wall_seconds: r.wall_seconds,
            gram_seconds: None,
            mu: r.mu,
            lipschitz: r.lipschitz,
            config,
            trace: r.trace.clone(),
        }
    }

    pub fn beta_vector(&self) -> Result<Array1<f64>> {
        match self.shape.as_slice() {
            [j] if *j == self.beta.len() => Ok(Array1::from(self.beta.clone())),
            _ => Err(Error::InvalidStructure(format!("result shape {:?} is not a vector of {} values", self.shape, self.beta.len()))),
        }
    }

    pub fn beta_matrix(&self) -> Result<Array2<f64>> {
        match self.shape.as_slice() {
            [j, k] => Array2::from_shape_vec((*j, *k), self.beta.clone())
                .map_err(|_| Error::InvalidStructure(format!("result shape {:?} does not match {} values", self.shape, self.beta.len()))),
            _ => Err(Error::InvalidStructure(format!("result shape {:?} is not a matrix", self.shape))),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("finite values serialize") + "\n"
    }

    pub fn parse(text: &str, name: &str) -> Result<Self> {
        parse_json(text, name)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?, &path_str(path))
    }
}

/// Serializes any value as pretty JSON followed by a newline.
pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    parse_json(&fs::read_to_string(path)?, &path_str(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn csv_round_trip_is_exact() {
        let m = array![[0.1, -1e-300, 1.0 / 3.0], [f64::MAX, 5e-324, -0.0]];
        let text = matrix_to_csv(m.view());
        let back = parse_matrix_csv(&text, "m.csv").unwrap();
        assert_eq!(back, m);
        assert!(!text.contains('\r'));
        assert_eq!(matrix_to_csv(back.view()), text);
    }

    #[test]
    fn csv_errors_name_the_line() {
        let err = parse_matrix_csv("1,2\n3,x\n", "X.csv").unwrap_err().to_string();
        assert!(err.starts_with("X.csv:2:"), "{err}");
        let err = parse_matrix_csv("1,2\n3\n", "X.csv").unwrap_err().to_string();
        assert!(err.starts_with("X.csv:2:"), "{err}");
        let err = parse_matrix_csv("1\nNaN\n", "y.csv").unwrap_err().to_string();
        assert!(err.contains("not finite"), "{err}");
    }

    #[test]
    fn groups_json_round_trip() {
        let g = GroupStructure::chain(3, 4, 1).unwrap();
        let text = groups_to_json(&g);
        assert!(text.contains("\"members\""));
        assert_eq!(parse_groups_json(&text, "g.json").unwrap(), g);
    }

    #[test]
    fn groups_json_paths() {
        let bad = r#"{"dim": 3, "groups": [{"members": [1, 2], "weight": 1.0}, {"members": [2, 4], "weight": 1.0}]}"#;
        let err = parse_groups_json(bad, "g.json").unwrap_err().to_string();
        assert!(err.contains("groups[1].members[1]"), "{err}");
        let unweighted = parse_groups_json(r#"{"dim": 2, "groups": [{"members": [1, 2]}]}"#, "g.json").unwrap();
        assert_eq!(unweighted.groups()[0].weight, 1.0);
        let bad = r#"{"dim": 3, "groups": [{"members": [1], "weight": "heavy"}]}"#;
        let err = parse_groups_json(bad, "g.json").unwrap_err().to_string();
        assert!(err.contains("groups[0].weight"), "{err}");
    }

    #[test]
    fn graph_json_round_trip_and_paths() {
        let g = FusionGraph::new(3, vec![Edge { m: 0, l: 2, r: -0.25 }]).unwrap();
        let text = graph_to_json(&g);
        assert_eq!(parse_graph_json(&text, "e.json").unwrap(), g);
        let bad = r#"{"dim": 3, "edges": [{"m": 2, "l": 1, "r": 0.5}]}"#;
        let err = parse_graph_json(bad, "e.json").unwrap_err().to_string();
        assert!(err.contains("edges[0].l"), "{err}");
        let bad = r#"{"dim": 3, "edges": [{"m": 1, "l": 2}]}"#;
        assert!(parse_graph_json(bad, "e.json").is_err());
    }

    #[test]
    fn result_file_round_trip() {
        let r = SolveResult {
            beta: array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]],
            objective: 1.5,
            smoothed_objective: 1.25,
            iterations: 3,
            converged: true,
            trace: None,
            wall_seconds: 0.0,
            mu: Some(1e-4),
            lipschitz: Some(2.0),
        };
        let file = ResultFile::from_matrix("spg", &r, serde_json::json!({"lambda": 1.0}));
        let back = ResultFile::parse(&file.to_json(), "result.json").unwrap();
        assert_eq!(back, file);
        assert_eq!(back.beta[..3], [1.0, 2.0, 3.0]);
        assert_eq!(back.beta_matrix().unwrap(), r.beta);
        assert!(back.beta_vector().is_err());
    }
}

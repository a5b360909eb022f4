//! Structural node features and the two-stage normalization.
//!
//! Normalization is a per-column z-score followed by min-max scaling of the
//! standardized values into `[0, 1]`. The statistics are kept in [`NormParams`]
//! so decoder outputs can be mapped back to raw feature units.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Degree,
    Clustering,
    NeighborCount,
    MeanNeighborDegree,
    /// Share of neighbors whose degree exceeds the graph's mean degree.
    FracHighDegreeNeighbors,
    /// Population standard deviation of neighbor degrees.
    StdNeighborDegree,
    /// Share of neighbors with strictly larger degree than the node itself.
    FracHigherDegreeNeighbors,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 7] = [
        FeatureKind::Degree,
        FeatureKind::Clustering,
        FeatureKind::NeighborCount,
        FeatureKind::MeanNeighborDegree,
        FeatureKind::FracHighDegreeNeighbors,
        FeatureKind::StdNeighborDegree,
        FeatureKind::FracHigherDegreeNeighbors,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Degree => "degree",
            FeatureKind::Clustering => "clustering",
            FeatureKind::NeighborCount => "neighbor_count",
            FeatureKind::MeanNeighborDegree => "mean_neighbor_degree",
            FeatureKind::FracHighDegreeNeighbors => "frac_high_degree_neighbors",
            FeatureKind::StdNeighborDegree => "std_neighbor_degree",
            FeatureKind::FracHigherDegreeNeighbors => "frac_higher_degree_neighbors",
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownFeature(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub features: Vec<FeatureKind>,
}

impl FeatureSchema {
    pub fn new(features: Vec<FeatureKind>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::InvalidArgument("feature schema is empty".into()));
        }
        Ok(Self { features })
    }

    /// degree, clustering, neighbor_count, mean_neighbor_degree
    pub fn community() -> Self {
        Self {
            features: vec![
                FeatureKind::Degree,
                FeatureKind::Clustering,
                FeatureKind::NeighborCount,
                FeatureKind::MeanNeighborDegree,
            ],
        }
    }

    pub fn multi_community() -> Self {
        let mut s = Self::community();
        s.features.push(FeatureKind::FracHighDegreeNeighbors);
        s
    }

    pub fn scale_free() -> Self {
        let mut s = Self::community();
        s.features.push(FeatureKind::StdNeighborDegree);
        s.features.push(FeatureKind::FracHigherDegreeNeighbors);
        s
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.features.iter().map(|f| f.name()).collect()
    }

    /// Parse a comma-separated list of feature names.
    pub fn parse_list(s: &str) -> Result<Self> {
        let features = s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(FeatureKind::from_str)
            .collect::<Result<Vec<_>>>()?;
        Self::new(features)
    }

    /// A regime name (`community`, `multi_community`, `scale_free`) or a
    /// comma-separated feature list.
    pub fn from_spec(s: &str) -> Result<Self> {
        match s.trim() {
            "community" => Ok(Self::community()),
            "multi_community" => Ok(Self::multi_community()),
            "scale_free" => Ok(Self::scale_free()),
            other => Self::parse_list(other),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    pub values: Matrix<T>,
    pub schema: FeatureSchema,
}

impl<T: Scalar> FeatureMatrix<T> {
    pub fn new(values: Matrix<T>, schema: FeatureSchema) -> Result<Self> {
        if values.cols() != schema.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} columns for a {}-feature schema",
                values.cols(),
                schema.dim()
            )));
        }
        Ok(Self { values, schema })
    }

    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn dim(&self) -> usize {
        self.values.cols()
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.schema.names())?;
        for row in self.values.row_iter() {
            w.write_record(row.iter().map(|v| v.as_f64().to_string()))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Serialization(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()?).map_err(|e| Error::io(path, e))
    }
}

pub fn extract_features<T: Scalar>(g: &Graph, schema: &FeatureSchema) -> FeatureMatrix<T> {
    let n = g.node_count();
    let deg = g.degrees();
    let mean_degree = if n == 0 {
        0.0
    } else {
        deg.iter().sum::<usize>() as f64 / n as f64
    };
    let needs_triangles = schema.features.contains(&FeatureKind::Clustering);
    let triangles = if needs_triangles {
        g.triangles_per_node()
    } else {
        Vec::new()
    };

    let mut values = Matrix::zeros(n, schema.dim());
    for v in 0..n {
        let nb = g.neighbors(v);
        let dv = deg[v] as f64;
        let k = nb.len() as f64;
        let nb_mean = if nb.is_empty() {
            0.0
        } else {
            nb.iter().map(|&u| deg[u] as f64).sum::<f64>() / k
        };
        for (c, kind) in schema.features.iter().enumerate() {
            let x = match kind {
                FeatureKind::Degree => dv,
                FeatureKind::NeighborCount => k,
                FeatureKind::Clustering => {
                    if deg[v] < 2 {
                        0.0
                    } else {
                        2.0 * triangles[v] as f64 / (dv * (dv - 1.0))
                    }
                }
                FeatureKind::MeanNeighborDegree => nb_mean,
                FeatureKind::FracHighDegreeNeighbors => {
                    fraction(nb, |u| deg[u] as f64 > mean_degree)
                }
                FeatureKind::StdNeighborDegree => {
                    if nb.is_empty() {
                        0.0
                    } else {
                        let var = nb
                            .iter()
                            .map(|&u| (deg[u] as f64 - nb_mean).powi(2))
                            .sum::<f64>()
                            / k;
                        var.sqrt()
                    }
                }
                FeatureKind::FracHigherDegreeNeighbors => fraction(nb, |u| deg[u] > deg[v]),
            };
            values[(v, c)] = T::of(x);
        }
    }
    FeatureMatrix {
        values,
        schema: schema.clone(),
    }
}

fn fraction(nb: &[usize], pred: impl Fn(usize) -> bool) -> f64 {
    if nb.is_empty() {
        0.0
    } else {
        nb.iter().filter(|&&u| pred(u)).count() as f64 / nb.len() as f64
    }
}

/// Per-dimension statistics of the two-stage normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct NormParams<T> {
    pub mean: Vec<T>,
    pub std: Vec<T>,
    pub std_min: Vec<T>,
    pub std_max: Vec<T>,
}

impl<T: Scalar> NormParams<T> {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Columns whose normalized value is pinned at 0.5.
    pub fn degenerate_columns(&self) -> Vec<usize> {
        (0..self.dim())
            .filter(|&k| self.std_max[k] == self.std_min[k])
            .collect()
    }
}

/// Fit the normalization on `x` and apply it.
///
/// A constant column has zero standard deviation; its standardized values are
/// zero and its normalized values are all 0.5.
pub fn normalize<T: Scalar>(x: &FeatureMatrix<T>) -> Result<(FeatureMatrix<T>, NormParams<T>)> {
    let n = x.rows();
    if n == 0 {
        return Err(Error::InvalidArgument(
            "cannot normalize an empty feature matrix".into(),
        ));
    }
    let d = x.dim();
    let nf = T::of(n as f64);
    let mut params = NormParams {
        mean: vec![T::zero(); d],
        std: vec![T::zero(); d],
        std_min: vec![T::zero(); d],
        std_max: vec![T::zero(); d],
    };
    for k in 0..d {
        let col = x.values.column(k);
        let lo = col.iter().copied().fold(T::infinity(), T::min);
        let hi = col.iter().copied().fold(T::neg_infinity(), T::max);
        let mean = col.iter().copied().sum::<T>() / nf;
        params.mean[k] = mean;
        if lo == hi {
            params.mean[k] = lo;
            continue;
        }
        let var = col.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / nf;
        let std = var.sqrt();
        params.std[k] = std;
        params.std_min[k] = (lo - mean) / std;
        params.std_max[k] = (hi - mean) / std;
    }
    let normalized = apply_normalization(x, &params)?;
    Ok((normalized, params))
}

/// Apply previously fitted statistics.
pub fn apply_normalization<T: Scalar>(
    x: &FeatureMatrix<T>,
    p: &NormParams<T>,
) -> Result<FeatureMatrix<T>> {
    if p.dim() != x.dim() {
        return Err(Error::DimensionMismatch(format!(
            "normalization has {} dimensions, features have {}",
            p.dim(),
            x.dim()
        )));
    }
    let half = T::of(0.5);
    let mut out = x.values.clone();
    for i in 0..out.rows() {
        for (k, v) in out.row_mut(i).iter_mut().enumerate() {
            let span = p.std_max[k] - p.std_min[k];
            *v = if span == T::zero() {
                half
            } else {
                ((*v - p.mean[k]) / p.std[k] - p.std_min[k]) / span
            };
        }
    }
    FeatureMatrix::new(out, x.schema.clone())
}

/// Inverse min-max on standardized coordinates, then inverse z-score.
pub fn denormalize<T: Scalar>(
    x_norm: &FeatureMatrix<T>,
    p: &NormParams<T>,
) -> Result<FeatureMatrix<T>> {
    denormalize_matrix(&x_norm.values, p).and_then(|m| FeatureMatrix::new(m, x_norm.schema.clone()))
}

pub fn denormalize_matrix<T: Scalar>(x_norm: &Matrix<T>, p: &NormParams<T>) -> Result<Matrix<T>> {
    if p.dim() != x_norm.cols() {
        return Err(Error::DimensionMismatch(format!(
            "normalization has {} dimensions, matrix has {} columns",
            p.dim(),
            x_norm.cols()
        )));
    }
    let mut out = x_norm.clone();
    for i in 0..out.rows() {
        for (k, v) in out.row_mut(i).iter_mut().enumerate() {
            let span = p.std_max[k] - p.std_min[k];
            *v = if span == T::zero() {
                p.mean[k]
            } else {
                (*v * span + p.std_min[k]) * p.std[k] + p.mean[k]
            };
        }
    }
    Ok(out)
}

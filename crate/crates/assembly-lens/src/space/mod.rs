//! Cosine geometry over embeddings: gap ranking, t-SNE planar maps, and
//! figure emission.

mod map;
mod tsne;

pub use map::{apply_overlay, emit_map, MapFormat, PlanarMap, PointKind};
pub use tsne::{
    calibrate_affinities, tsne_embed, tsne_gradient, tsne_objective, AffinityMatrix, TsneConfig,
};

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("cosine undefined for a zero vector")]
    ZeroVector,
    #[error("recommendations matrix is empty")]
    EmptyRecommendations,
    #[error("embedding model mismatch: {left:?} vs {right:?}")]
    ModelMismatch { left: String, right: String },
    #[error("degenerate geometry: all pairwise distances are zero")]
    DegenerateGeometry,
    #[error("need at least {required} points, got {n}")]
    TooFewPoints { n: usize, required: usize },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("unknown id {0:?}")]
    UnknownId(String),
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("{0}")]
    BadInput(String),
}

/// Ordered item ids with their embedding vectors (one row per id).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    ids: Vec<String>,
    vectors: Array2<f64>,
    model_id: String,
}

#[derive(Serialize, Deserialize)]
struct MatrixFile {
    model_id: String,
    dim: usize,
    items: Vec<MatrixItem>,
}

#[derive(Serialize, Deserialize)]
struct MatrixItem {
    id: String,
    vector: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn new(
        ids: Vec<String>,
        rows: Vec<Vec<f64>>,
        model_id: &str,
    ) -> Result<Self, SpaceError> {
        if ids.len() != rows.len() {
            return Err(SpaceError::BadInput(format!(
                "{} ids but {} vectors",
                ids.len(),
                rows.len()
            )));
        }
        if rows.is_empty() {
            return Err(SpaceError::BadInput("embedding matrix is empty".into()));
        }
        let dim = rows[0].len();
        if dim == 0 {
            return Err(SpaceError::BadInput("zero-dimensional vectors".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for id in &ids {
            if !seen.insert(id) {
                return Err(SpaceError::DuplicateId(id.clone()));
            }
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(SpaceError::DimMismatch {
                    left: dim,
                    right: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(SpaceError::NonFinite(format!("row {i} ({})", ids[i])));
            }
            data.extend_from_slice(row);
        }
        let vectors = Array2::from_shape_vec((rows.len(), dim), data)
            .expect("shape checked above");
        Ok(Self {
            ids,
            vectors,
            model_id: model_id.to_string(),
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.vectors.row(i)
    }

    pub fn vectors(&self) -> &Array2<f64> {
        &self.vectors
    }

    pub fn vector_of(&self, id: &str) -> Option<ArrayView1<'_, f64>> {
        self.ids.iter().position(|x| x == id).map(|i| self.row(i))
    }

    /// Concatenate two matrices over the same model and dimension.
    pub fn stacked(&self, other: &EmbeddingMatrix) -> Result<EmbeddingMatrix, SpaceError> {
        check_compatible(self, other)?;
        let mut ids = self.ids.clone();
        ids.extend(other.ids.iter().cloned());
        let mut rows: Vec<Vec<f64>> = self.vectors.rows().into_iter().map(|r| r.to_vec()).collect();
        rows.extend(other.vectors.rows().into_iter().map(|r| r.to_vec()));
        EmbeddingMatrix::new(ids, rows, &self.model_id)
    }

    pub fn to_json(&self) -> String {
        let file = MatrixFile {
            model_id: self.model_id.clone(),
            dim: self.dim(),
            items: self
                .ids
                .iter()
                .zip(self.vectors.rows())
                .map(|(id, row)| MatrixItem {
                    id: id.clone(),
                    vector: row.to_vec(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("matrix serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, SpaceError> {
        let file: MatrixFile =
            serde_json::from_str(json).map_err(|e| SpaceError::BadInput(e.to_string()))?;
        let (ids, rows) = file
            .items
            .into_iter()
            .map(|item| (item.id, item.vector))
            .unzip();
        EmbeddingMatrix::new(ids, rows, &file.model_id)
    }
}

fn check_compatible(a: &EmbeddingMatrix, b: &EmbeddingMatrix) -> Result<(), SpaceError> {
    if a.model_id != b.model_id {
        return Err(SpaceError::ModelMismatch {
            left: a.model_id.clone(),
            right: b.model_id.clone(),
        });
    }
    if a.dim() != b.dim() {
        return Err(SpaceError::DimMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(())
}

/// Cosine similarity of two equal-dimension, nonzero vectors.
pub fn cosine(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> Result<f64, SpaceError> {
    if a.len() != b.len() {
        return Err(SpaceError::DimMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let dot = a.dot(&b);
    let na = a.dot(&a).sqrt();
    let nb = b.dot(&b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(SpaceError::ZeroVector);
    }
    Ok(dot / (na * nb))
}

/// One gap-ranking row: a suggestion, its nearest recommendation, and the
/// distance between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapEntry {
    pub suggestion_id: String,
    pub nearest_recommendation_id: String,
    pub max_similarity: f64,
    pub distance: f64,
}

/// Suggestions ordered most-distant-first from any recommendation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRanking {
    pub entries: Vec<GapEntry>,
}

impl GapRanking {
    pub fn to_csv(&self) -> Vec<u8> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record([
                "suggestion_id",
                "nearest_recommendation_id",
                "max_similarity",
                "distance",
            ])
            .expect("write to Vec cannot fail");
        for e in &self.entries {
            writer
                .write_record([
                    e.suggestion_id.as_str(),
                    e.nearest_recommendation_id.as_str(),
                    &format!("{:.6}", e.max_similarity),
                    &format!("{:.6}", e.distance),
                ])
                .expect("write to Vec cannot fail");
        }
        writer.into_inner().expect("flush to Vec cannot fail")
    }
}

/// For each suggestion, the maximum cosine similarity over all
/// recommendations; ranked by `distance = 1 - max_similarity` descending,
/// ties broken by suggestion id ascending, truncated to `k`.
pub fn rank_gaps(
    suggestions: &EmbeddingMatrix,
    recommendations: &EmbeddingMatrix,
    k: usize,
) -> Result<GapRanking, SpaceError> {
    if recommendations.is_empty() {
        return Err(SpaceError::EmptyRecommendations);
    }
    check_compatible(suggestions, recommendations)?;

    let mut entries = Vec::with_capacity(suggestions.len());
    for (i, sid) in suggestions.ids().iter().enumerate() {
        let mut best_sim = f64::NEG_INFINITY;
        let mut best_rec = "";
        for (j, rid) in recommendations.ids().iter().enumerate() {
            let sim = cosine(suggestions.row(i), recommendations.row(j))?;
            // Ties on similarity resolve to the smaller recommendation id.
            if sim > best_sim || (sim == best_sim && rid.as_str() < best_rec) {
                best_sim = sim;
                best_rec = rid;
            }
        }
        entries.push(GapEntry {
            suggestion_id: sid.clone(),
            nearest_recommendation_id: best_rec.to_string(),
            max_similarity: best_sim,
            distance: 1.0 - best_sim,
        });
    }
    entries.sort_by(|a, b| {
        b.distance
            .partial_cmp(&a.distance)
            .expect("distances are finite")
            .then_with(|| a.suggestion_id.cmp(&b.suggestion_id))
    });
    entries.truncate(k);
    Ok(GapRanking { entries })
}

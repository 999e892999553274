//! 2-D projections of embedding sets for cluster inspection.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::embed::{fit_pca, EmbeddingSet};
use crate::error::{Error, Result};

const DEGENERATE_VARIANCE: f64 = 1e-20;

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedPoint {
    pub label: String,
    pub x: f64,
    pub y: f64,
}

/// PCA with two components over the embedding vectors. One-dimensional sets
/// get `y = 0`; sets with no spread put every point at the origin.
pub fn project_2d(set: &EmbeddingSet) -> Result<Vec<ProjectedPoint>> {
    if set.len() < 3 {
        return Err(Error::Argument(format!(
            "a 2-D projection needs at least 3 items, got {}",
            set.len()
        )));
    }
    let k = set.dim().min(2);
    let model = fit_pca(&[set.vectors().view()], k)?;
    let coords: Array2<f32> = if model
        .explained_variance
        .iter()
        .all(|&v| v <= DEGENERATE_VARIANCE)
    {
        log::warn!(
            "all {} embeddings are identical; projecting to the origin",
            set.len()
        );
        Array2::zeros((set.len(), k))
    } else {
        model.project(set.vectors().view())?
    };
    Ok(set
        .labels()
        .iter()
        .zip(coords.outer_iter())
        .map(|(label, c)| ProjectedPoint {
            label: label.clone(),
            x: c[0] as f64,
            y: if k > 1 { c[1] as f64 } else { 0.0 },
        })
        .collect())
}

fn csv_label(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// `label,x,y` CSV with a header row.
pub fn projection_csv(points: &[ProjectedPoint]) -> String {
    let mut out = String::from("label,x,y\n");
    for p in points {
        writeln!(out, "{},{},{}", csv_label(&p.label), p.x, p.y).unwrap();
    }
    out
}

pub fn export_projection_2d(set: &EmbeddingSet, out_path: impl AsRef<Path>) -> Result<()> {
    let path = out_path.as_ref();
    let csv = projection_csv(&project_2d(set)?);
    fs::write(path, csv).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(rows: Vec<Vec<f32>>) -> EmbeddingSet {
        let labels = (0..rows.len()).map(|i| format!("w{}", i % 2)).collect();
        EmbeddingSet::from_rows(labels, rows).unwrap()
    }

    #[test]
    fn collinear_points_have_flat_y() {
        let s = set(vec![
            vec![1.0, 2.0, 3.0],
            vec![2.0, 4.0, 6.0],
            vec![-1.0, -2.0, -3.0],
        ]);
        let pts = project_2d(&s).unwrap();
        assert_eq!(pts.len(), 3);
        assert!(pts.iter().all(|p| p.y.abs() < 1e-5), "{pts:?}");
        assert!(pts.iter().any(|p| p.x.abs() > 1.0));
    }

    #[test]
    fn identical_points_collapse_to_origin() {
        let s = set(vec![vec![0.5, 0.5]; 4]);
        let pts = project_2d(&s).unwrap();
        assert!(pts.iter().all(|p| p.x == 0.0 && p.y == 0.0));
    }

    #[test]
    fn too_few_items() {
        assert!(project_2d(&set(vec![vec![1.0], vec![2.0]])).is_err());
    }

    #[test]
    fn one_dimensional_embeddings() {
        let pts = project_2d(&set(vec![vec![1.0], vec![2.0], vec![4.0]])).unwrap();
        assert!(pts.iter().all(|p| p.y == 0.0));
    }

    #[test]
    fn csv_has_one_row_per_item() {
        let s = set(vec![
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
            vec![3.0, 0.5],
        ]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        export_projection_2d(&s, &path).unwrap();
        let text = fs::read_to_string(path).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert_eq!(text.lines().next(), Some("label,x,y"));
    }
}

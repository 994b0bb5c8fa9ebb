use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::mesh::PointCloud;
use crate::spatial::KdTree;

/// Default F-score distance threshold, meters.
pub const DEFAULT_TAU: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconMetrics {
    /// Mean distance from predicted points to the ground truth.
    pub acc: f64,
    /// Mean distance from ground-truth points to the prediction.
    pub comp: f64,
    pub c_l1: f64,
    /// Normal consistency; `None` unless both clouds carry normals.
    pub nc: Option<f64>,
    pub precision: f64,
    pub recall: f64,
    pub fscore: f64,
    pub tau: f64,
}

struct Directed {
    mean_dist: f64,
    within: f64,
    normal_agreement: Option<f64>,
}

fn directed(from: &PointCloud, to: &PointCloud, tree: &KdTree, tau: f64) -> Directed {
    let mut sum = 0.0;
    let mut hits = 0usize;
    let mut agree = 0.0;
    let normals = from.normals().zip(to.normals());
    for (i, p) in from.points().iter().enumerate() {
        let (j, d2) = tree.nearest(p).expect("target cloud is nonempty");
        let d = d2.sqrt();
        sum += d;
        if d <= tau {
            hits += 1;
        }
        if let Some((na, nb)) = normals {
            agree += na[i].dot(&nb[j]).abs();
        }
    }
    let n = from.len() as f64;
    Directed {
        mean_dist: sum / n,
        within: hits as f64 / n,
        normal_agreement: normals.map(|_| agree / n),
    }
}

/// Accuracy, completion, Chamfer-L1, normal consistency and F-score at
/// `tau`. A point counts for precision/recall when its nearest neighbor in
/// the other cloud is at most `tau` away.
pub fn recon_eval(pred: &PointCloud, gt: &PointCloud, tau: f64) -> Result<ReconMetrics, MetricsError> {
    if pred.is_empty() || gt.is_empty() {
        return Err(MetricsError::Input("point clouds must be nonempty".into()));
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(MetricsError::Input(format!("tau must be positive, got {tau}")));
    }
    let gt_tree = KdTree::build(gt.points());
    let pred_tree = KdTree::build(pred.points());
    let fwd = directed(pred, gt, &gt_tree, tau);
    let bwd = directed(gt, pred, &pred_tree, tau);
    let (precision, recall) = (fwd.within, bwd.within);
    let fscore = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(ReconMetrics {
        acc: fwd.mean_dist,
        comp: bwd.mean_dist,
        c_l1: (fwd.mean_dist + bwd.mean_dist) / 2.0,
        nc: fwd.normal_agreement.zip(bwd.normal_agreement).map(|(a, b)| (a + b) / 2.0),
        precision,
        recall,
        fscore,
        tau,
    })
}

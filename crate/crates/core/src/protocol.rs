//! Evaluation-protocol constants. Every default elsewhere in the crate is
//! derived from these, and the CLI echoes them in its manifests.

use serde::Serialize;

/// Points per local patch at test time.
pub const PATCH_SIZE: usize = 256;
/// Graph neighborhood radius on unit-sphere normalized coordinates.
pub const EPSILON: f64 = 0.5;
/// HF points selected per patch.
pub const HF_PATCH_M: usize = 256;
/// HF points selected per cloud for HF_CD / HF_HD.
pub const HF_METRIC_M: usize = 2048;
/// Upsampling ratio.
pub const RATIO: usize = 4;
/// Ground-truth cloud size (Poisson disk).
pub const GT_POINTS: usize = 8192;
/// Low-resolution input size (Monte Carlo).
pub const LR_POINTS: usize = 2048;
/// Squared ball radius for the uniformity metric.
pub const R_Q_SQ: f64 = 0.012;
/// Weights of the reconstruction, uniform and identity-distribution losses.
pub const LOSS_WEIGHTS: (f64, f64, f64) = (100.0, 10.0, 1.0);

/// All protocol constants as one serializable record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Protocol {
    pub patch_size: usize,
    pub epsilon: f64,
    pub hf_patch_m: usize,
    pub hf_metric_m: usize,
    pub ratio: usize,
    pub gt_points: usize,
    pub lr_points: usize,
    pub r_q_sq: f64,
    pub loss_weights: [f64; 3],
}

pub const PROTOCOL: Protocol = Protocol {
    patch_size: PATCH_SIZE,
    epsilon: EPSILON,
    hf_patch_m: HF_PATCH_M,
    hf_metric_m: HF_METRIC_M,
    ratio: RATIO,
    gt_points: GT_POINTS,
    lr_points: LR_POINTS,
    r_q_sq: R_Q_SQ,
    loss_weights: [LOSS_WEIGHTS.0, LOSS_WEIGHTS.1, LOSS_WEIGHTS.2],
};

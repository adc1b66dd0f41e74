//! Training losses: per-joint MSE for the skeleton, row-wise KL divergence
//! for the skinning distribution, and their unweighted sum.

use crate::autodiff::Tensor;
use crate::{Error, Result};

/// Clamp inside the KL logs; keeps one-hot ground-truth rows finite without
/// disturbing softmax-positive predictions.
pub const KL_EPS: f64 = 1e-8;

/// Mean over joints of the squared Euclidean error:
/// `(1/s) * sum_i ||pred_i - gt_i||^2`.
pub fn loss_skeleton(pred: &Tensor, gt: &Tensor) -> Result<Tensor> {
    if pred.shape() != gt.shape() {
        return Err(Error::ShapeMismatch {
            op: "loss_skeleton",
            lhs: pred.shape().to_vec(),
            rhs: gt.shape().to_vec(),
        });
    }
    let diff = pred.sub(gt)?;
    diff.mul(&diff)?.sum_all()?.mul_scalar(1.0 / pred.rows() as f64)
}

/// Mean over vertices of `KL(pred || gt)`:
/// `(1/m) * sum_i sum_j p_ij * log(p_ij / max(g_ij, eps))`, with zero `p`
/// entries contributing zero.
pub fn loss_skinning(pred: &Tensor, gt: &Tensor) -> Result<Tensor> {
    if pred.shape() != gt.shape() {
        return Err(Error::ShapeMismatch {
            op: "loss_skinning",
            lhs: pred.shape().to_vec(),
            rhs: gt.shape().to_vec(),
        });
    }
    let log_ratio = pred.ln_clamped(KL_EPS)?.sub(&gt.ln_clamped(KL_EPS)?)?;
    pred.mul(&log_ratio)?
        .sum_all()?
        .mul_scalar(1.0 / pred.rows() as f64)
}

/// Unweighted sum of the skinning and skeleton losses.
pub fn loss_total(
    pred_joints: &Tensor,
    pred_skinning: &Tensor,
    gt_joints: &Tensor,
    gt_skinning: &Tensor,
) -> Result<Tensor> {
    loss_skinning(pred_skinning, gt_skinning)?.add(&loss_skeleton(pred_joints, gt_joints)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use crate::skeleton::JOINT_COUNT;

    #[test]
    fn skeleton_loss_zero_at_target_and_hand_value() {
        let mut rng = Rng::new(1);
        let vals: Vec<f64> = (0..JOINT_COUNT * 3).map(|_| rng.uniform(-0.5, 0.5)).collect();
        let g = Tensor::constant(JOINT_COUNT, 3, vals.clone()).unwrap();
        let p = Tensor::constant(JOINT_COUNT, 3, vals.clone()).unwrap();
        assert_eq!(loss_skeleton(&p, &g).unwrap().item(), 0.0);

        // one joint offset by (0.1, 0, 0): loss = 0.01 / 22
        let mut off = vals.clone();
        off[0] += 0.1;
        let p2 = Tensor::constant(JOINT_COUNT, 3, off).unwrap();
        let loss = loss_skeleton(&p2, &g).unwrap().item();
        assert!((loss - 0.01 / 22.0).abs() < 1e-15, "loss {loss}");

        // symmetric in the sign of the error
        let mut neg = vals;
        neg[0] -= 0.1;
        let p3 = Tensor::constant(JOINT_COUNT, 3, neg).unwrap();
        assert!((loss_skeleton(&p3, &g).unwrap().item() - loss).abs() < 1e-15);
    }

    #[test]
    fn skinning_loss_zero_when_equal_and_hand_value() {
        // strictly positive identical rows -> 0
        let p = Tensor::constant(2, 4, vec![0.25; 8]).unwrap();
        assert!(loss_skinning(&p, &p).unwrap().item().abs() < 1e-15);

        // m = 1, p = [0.5, 0.5, 0, 0], g one-hot: hand computation with the
        // eps clamp on g (and on the zero p entries, which contribute 0).
        let p = Tensor::constant(1, 4, vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        let g = Tensor::constant(1, 4, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let expected = 0.5 * (0.5_f64.ln() - 1.0_f64.ln()) + 0.5 * (0.5_f64.ln() - KL_EPS.ln());
        let got = loss_skinning(&p, &g).unwrap().item();
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
        assert!(got.is_finite());
    }

    #[test]
    fn skinning_loss_finite_for_valid_inputs() {
        let mut rng = Rng::new(2);
        for _ in 0..20 {
            let rows = 5;
            let mut pd = vec![0.0; rows * 6];
            let mut gd = vec![0.0; rows * 6];
            for i in 0..rows {
                let mut ps = 0.0;
                let mut gs = 0.0;
                for j in 0..6 {
                    let a = rng.next_f64();
                    let b = if rng.next_f64() < 0.5 { rng.next_f64() } else { 0.0 };
                    pd[i * 6 + j] = a;
                    gd[i * 6 + j] = b;
                    ps += a;
                    gs += b;
                }
                if gs == 0.0 {
                    gd[i * 6] = 1.0;
                    gs = 1.0;
                }
                for j in 0..6 {
                    pd[i * 6 + j] /= ps;
                    gd[i * 6 + j] /= gs;
                }
            }
            let p = Tensor::constant(rows, 6, pd).unwrap();
            let g = Tensor::constant(rows, 6, gd).unwrap();
            assert!(loss_skinning(&p, &g).unwrap().item().is_finite());
        }
    }

    #[test]
    fn total_is_sum_of_components() {
        let mut rng = Rng::new(3);
        let pj = Tensor::constant(
            JOINT_COUNT,
            3,
            (0..66).map(|_| rng.uniform(-0.5, 0.5)).collect(),
        )
        .unwrap();
        let gj = Tensor::constant(
            JOINT_COUNT,
            3,
            (0..66).map(|_| rng.uniform(-0.5, 0.5)).collect(),
        )
        .unwrap();
        let ps = Tensor::constant(3, 4, vec![0.25; 12]).unwrap();
        let mut gd = vec![0.1; 12];
        for r in 0..3 {
            gd[r * 4] = 0.7;
        }
        let gs = Tensor::constant(3, 4, gd).unwrap();
        let total = loss_total(&pj, &ps, &gj, &gs).unwrap().item();
        let parts =
            loss_skeleton(&pj, &gj).unwrap().item() + loss_skinning(&ps, &gs).unwrap().item();
        assert!((total - parts).abs() < 1e-15);

        // equals loss_skeleton alone when the skinnings match
        let total2 = loss_total(&pj, &ps, &gj, &ps).unwrap().item();
        assert!((total2 - loss_skeleton(&pj, &gj).unwrap().item()).abs() < 1e-15);
    }

    #[test]
    fn both_zero_gives_zero() {
        let j = Tensor::constant(JOINT_COUNT, 3, vec![0.1; 66]).unwrap();
        let s = Tensor::constant(2, 3, vec![1.0 / 3.0; 6]).unwrap();
        assert!(loss_total(&j, &s, &j, &s).unwrap().item().abs() < 1e-15);
    }
}

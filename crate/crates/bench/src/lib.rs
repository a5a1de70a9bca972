//! Fixtures shared by the criterion benches.

use homolag::lagrangian::{SymmetricTensor, SymmetricTensorField, VectorPotentialField};
use homolag::{DVec, LagrangianSpec, MetricField};

/// Unit charge and mass in a unit field along the 3-axis.
pub fn cyclotron() -> LagrangianSpec {
    LagrangianSpec::new(
        MetricField::minkowski(4),
        1.0,
        VectorPotentialField::UniformMagnetic {
            dim: 4,
            field: 1.0,
            plane: (1, 2),
        },
        1.0,
    )
    .expect("valid spec")
}

/// Cyclotron plus a rank-3 and a rank-4 term, every coupling switched on.
pub fn loaded() -> LagrangianSpec {
    let u = DVec::from_vec(vec![1.0, 0.2, -0.1, 0.3]);
    let w = DVec::from_vec(vec![0.8, -0.3, 0.4, 0.0]);
    let s3 = SymmetricTensor::from_rank_one(3, &[(1.0, u.clone()), (0.5, w.clone())]);
    let s4 = SymmetricTensor::from_rank_one(4, &[(0.7, u), (0.2, w)]);
    cyclotron()
        .with_extra(0.3, SymmetricTensorField::constant(s3))
        .and_then(|s| s.with_extra(-0.2, SymmetricTensorField::constant(s4)))
        .expect("distinct ranks")
}

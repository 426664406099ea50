//! Shared fixtures for the kernel benchmarks: deterministic sample sets and
//! maps sized to exercise the hot paths without dominating wall time.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use flatext::{Point, SampledSet};

/// A noisy curve in the plane: `m` samples of (t, sin 3t) plus jitter.
pub fn noisy_curve_2d(m: usize, seed: u64) -> SampledSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SampledSet::from_points(
        (0..m)
            .map(|i| {
                let t = -0.5 + i as f64 / (m - 1) as f64;
                DVector::from_vec(vec![
                    t + rng.gen_range(-1e-3..1e-3),
                    (3.0 * t).sin() * 0.2 + rng.gen_range(-1e-3..1e-3),
                ])
            })
            .collect(),
    )
}

/// A noisy graph surface in space: m×m samples of (u, v, 0.2·sin(u+2v)).
pub fn noisy_surface_3d(m: usize, seed: u64) -> SampledSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            let u = -0.5 + i as f64 / (m - 1) as f64;
            let v = -0.5 + j as f64 / (m - 1) as f64;
            pts.push(DVector::from_vec(vec![
                u,
                v,
                0.2 * (u + 2.0 * v).sin() + rng.gen_range(-1e-3..1e-3),
            ]));
        }
    }
    SampledSet::from_points(pts)
}

/// Samples of a straight segment in the plane, the standard Whitney input.
pub fn segment_2d(m: usize) -> SampledSet {
    SampledSet::from_points(
        (0..=m)
            .map(|i| DVector::from_vec(vec![-0.5 + i as f64 / m as f64, 0.0]))
            .collect(),
    )
}

/// A convenience center guaranteed to be a member of the set.
pub fn center_of(e: &SampledSet) -> Point {
    e.points[e.points.len() / 2].clone()
}

//! Deterministic generators of synthetic sampled sets and maps used by the
//! command-line harness and the test suites: similarities, radial
//! quasiconformal maps, Koch-style snowflake curves with per-level angles,
//! perturbed affine maps, and plain grid/circle sets.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FlatextError, Result};
use crate::geometry::{AffineMap, Point, SampledSet};
use crate::quasisymmetry::SampledMap;

/// Maximum snowflake recursion depth (4^12 segments ≈ 1.7e7 is already far
/// beyond what the desk-scale functionals need).
pub const MAX_SNOWFLAKE_DEPTH: usize = 12;

/// What to generate.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorKind {
    /// Rotation·scale + shift from ℝⁿ into ℝᴺ, sampled on a grid.
    Similarity { scale: f64 },
    /// f(x) = |x|^{α−1}·x on ℝⁿ, α ∈ (0,1]; α = 1 is the identity.
    RadialQc { alpha: f64 },
    /// Koch-style four-segment curve in ℝ² with tent angle `angles[j]` at
    /// recursion level j (the last entry repeats if depth exceeds the list).
    Snowflake { angles: Vec<f64>, depth: usize },
    /// Affine map plus a bounded relative perturbation of size ε.
    PerturbedAffine { eps: f64 },
    /// Uniform grid in the unit cube of ℝⁿ.
    GridSet,
    /// Circle samples in ℝ².
    CircleSet { radius: f64 },
}

/// Full generator request; fixed spec ⇒ bit-identical output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    /// Domain dimension.
    pub n: usize,
    /// Ambient image dimension (maps only; sets ignore it).
    pub big_n: usize,
    /// Samples per axis for grids, total samples for circles.
    pub samples_per_side: usize,
    pub seed: u64,
}

/// A generator yields either a bare set or a sampled map.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Generated {
    Set(SampledSet),
    Map(SampledMap),
}

impl Generated {
    pub fn as_set(&self) -> &SampledSet {
        match self {
            Generated::Set(s) => s,
            Generated::Map(m) => &m.domain,
        }
    }

    pub fn as_map(&self) -> Result<&SampledMap> {
        match self {
            Generated::Map(m) => Ok(m),
            Generated::Set(_) => Err(FlatextError::BadSpec(
                "generator produced a set where a map was required".into(),
            )),
        }
    }
}

/// Grid over [−1/2, 1/2]ⁿ with m points per axis.
pub fn unit_grid(n: usize, m: usize) -> Vec<Point> {
    assert!(m >= 2);
    let mut pts = Vec::with_capacity(m.pow(n as u32));
    let mut idx = vec![0usize; n];
    loop {
        pts.push(DVector::from_fn(n, |i, _| {
            -0.5 + idx[i] as f64 / (m - 1) as f64
        }));
        let mut carry = true;
        for v in idx.iter_mut() {
            if carry {
                *v += 1;
                if *v >= m {
                    *v = 0;
                } else {
                    carry = false;
                }
            }
        }
        if carry {
            break;
        }
    }
    pts
}

/// Random rotation·scale embedding ℝⁿ → ℝᴺ (orthonormal columns) plus shift.
pub fn random_similarity(rng: &mut ChaCha8Rng, n: usize, big_n: usize, scale: f64) -> AffineMap {
    let raw = DMatrix::from_fn(big_n, n, |_, _| rng.gen_range(-1.0..1.0f64));
    let mut cols: Vec<DVector<f64>> = Vec::new();
    let mut linear = DMatrix::zeros(big_n, n);
    for c in 0..n {
        let mut v = raw.column(c).into_owned();
        for u in &cols {
            let t = v.dot(u);
            v -= u * t;
        }
        let v = v.normalize();
        linear.set_column(c, &v);
        cols.push(v);
    }
    AffineMap::new(
        linear * scale,
        DVector::from_fn(big_n, |_, _| rng.gen_range(-1.0..1.0)),
    )
}

/// Vertices of the four-segment snowflake polyline at the given depth,
/// starting from the unit segment (0,0)–(1,0).
///
/// Each segment of length L becomes four of length t·L with
/// t = 1/(2(1+cos a)), the middle two forming a tent of base angle a, so the
/// arc length grows by 2/(1+cos a) per level; a = 0 keeps the segment flat.
pub fn snowflake_polyline(angles: &[f64], depth: usize) -> Result<Vec<Point>> {
    if depth > MAX_SNOWFLAKE_DEPTH {
        return Err(FlatextError::BadSpec(format!(
            "snowflake depth {depth} exceeds maximum {MAX_SNOWFLAKE_DEPTH}"
        )));
    }
    if angles.is_empty() && depth > 0 {
        return Err(FlatextError::BadSpec("snowflake needs at least one angle".into()));
    }
    for &a in angles {
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&a) {
            return Err(FlatextError::BadSpec(format!(
                "snowflake angle {a} outside [0, π/2)"
            )));
        }
    }
    let mut verts: Vec<Point> = vec![
        DVector::from_vec(vec![0.0, 0.0]),
        DVector::from_vec(vec![1.0, 0.0]),
    ];
    for level in 0..depth {
        let a = angles[level.min(angles.len() - 1)];
        let t = 1.0 / (2.0 * (1.0 + a.cos()));
        let mut next = Vec::with_capacity(verts.len() * 4);
        for w in verts.windows(2) {
            let (p, q) = (&w[0], &w[1]);
            let d = q - p;
            let len = d.norm();
            let u = &d / len;
            let normal = DVector::from_vec(vec![-u[1], u[0]]);
            let x1 = p + &u * (t * len);
            let x2 = q - &u * (t * len);
            let apex = (&x1 + &x2) / 2.0 + &normal * (t * len * a.sin());
            next.push(p.clone());
            next.push(x1);
            next.push(apex);
            next.push(x2);
        }
        next.push(verts.last().unwrap().clone());
        verts = next;
    }
    Ok(verts)
}

/// Total length of a polyline.
pub fn polyline_length(verts: &[Point]) -> f64 {
    verts.windows(2).map(|w| (&w[1] - &w[0]).norm()).sum()
}

/// Produce the sample described by the spec; identical specs give identical
/// samples.
pub fn generate(spec: &GeneratorSpec) -> Result<Generated> {
    if spec.n == 0 || spec.big_n < spec.n {
        return Err(FlatextError::BadSpec(format!(
            "need 1 ≤ n ≤ N, got n={} N={}",
            spec.n, spec.big_n
        )));
    }
    if spec.samples_per_side < 2 {
        return Err(FlatextError::BadSpec("need at least 2 samples per side".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match &spec.kind {
        GeneratorKind::Similarity { scale } => {
            if *scale <= 0.0 {
                return Err(FlatextError::BadSpec("similarity scale must be positive".into()));
            }
            let a = random_similarity(&mut rng, spec.n, spec.big_n, *scale);
            let dom = unit_grid(spec.n, spec.samples_per_side);
            let img = dom.iter().map(|x| a.apply(x)).collect();
            Ok(Generated::Map(SampledMap::new(
                SampledSet::from_points(dom),
                img,
                format!("similarity scale={scale} seed={}", spec.seed),
            )))
        }
        GeneratorKind::RadialQc { alpha } => {
            if !(0.0..=1.0).contains(alpha) || *alpha == 0.0 {
                return Err(FlatextError::BadSpec(format!(
                    "radial exponent must lie in (0,1], got {alpha}"
                )));
            }
            if spec.big_n != spec.n {
                return Err(FlatextError::BadSpec(
                    "radial map is defined with N = n".into(),
                ));
            }
            let dom = unit_grid(spec.n, spec.samples_per_side);
            let img = dom
                .iter()
                .map(|x| {
                    let r = x.norm();
                    if r == 0.0 {
                        x.clone()
                    } else {
                        x * r.powf(alpha - 1.0)
                    }
                })
                .collect();
            Ok(Generated::Map(SampledMap::new(
                SampledSet::from_points(dom),
                img,
                format!("radial_qc alpha={alpha}"),
            )))
        }
        GeneratorKind::Snowflake { angles, depth } => {
            let verts = snowflake_polyline(angles, *depth)?;
            Ok(Generated::Set(SampledSet::from_points(verts)))
        }
        GeneratorKind::PerturbedAffine { eps } => {
            if !(0.0..1.0).contains(eps) {
                return Err(FlatextError::BadSpec(format!(
                    "perturbation size must lie in [0,1), got {eps}"
                )));
            }
            let a = random_similarity(&mut rng, spec.n, spec.big_n, 1.0);
            let freq: Vec<f64> = (0..spec.n).map(|_| rng.gen_range(2.0..6.0)).collect();
            let dir = DVector::from_fn(spec.big_n, |_, _| rng.gen_range(-1.0f64..1.0)).normalize();
            let dom = unit_grid(spec.n, spec.samples_per_side);
            let nrm = a.operator_norm();
            let img = dom
                .iter()
                .map(|x| {
                    let phase: f64 = x.iter().zip(&freq).map(|(xi, fi)| xi * fi).sum();
                    a.apply(x) + &dir * (eps * nrm * phase.sin())
                })
                .collect();
            Ok(Generated::Map(SampledMap::new(
                SampledSet::from_points(dom),
                img,
                format!("perturbed_affine eps={eps} seed={}", spec.seed),
            )))
        }
        GeneratorKind::GridSet => Ok(Generated::Set(SampledSet::from_points(unit_grid(
            spec.n,
            spec.samples_per_side,
        )))),
        GeneratorKind::CircleSet { radius } => {
            if *radius <= 0.0 {
                return Err(FlatextError::BadSpec("circle radius must be positive".into()));
            }
            let m = spec.samples_per_side;
            let pts = (0..m)
                .map(|i| {
                    let t = std::f64::consts::TAU * i as f64 / m as f64;
                    DVector::from_vec(vec![radius * t.cos(), radius * t.sin()])
                })
                .collect();
            Ok(Generated::Set(SampledSet::from_points(pts)))
        }
    }
}

//! Affine maps, planes, sampled sets, and the minimax plane-fitting engine.
//!
//! Everything downstream (flatness numbers, family verification, the
//! extension operator) reduces to three primitives implemented here:
//! singular values of a linear part, affine interpolation through a simplex,
//! and best-fit planes in the sup-distance (minimax) sense.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{FlatextError, Result};

/// A point or vector in ℝᵈ.
pub type Point = DVector<f64>;

/// An affine map ℝⁿ → ℝᴺ: `x ↦ linear·x + shift` with `shift = A(0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    /// The linear part A′ (N×n).
    pub linear: DMatrix<f64>,
    /// The value A(0) in ℝᴺ.
    pub shift: DVector<f64>,
}

impl AffineMap {
    pub fn new(linear: DMatrix<f64>, shift: DVector<f64>) -> Self {
        assert_eq!(linear.nrows(), shift.len(), "shift must live in the codomain");
        Self { linear, shift }
    }

    /// Identity on ℝⁿ.
    pub fn identity(n: usize) -> Self {
        Self::new(DMatrix::identity(n, n), DVector::zeros(n))
    }

    /// Domain dimension n.
    pub fn n(&self) -> usize {
        self.linear.ncols()
    }

    /// Codomain dimension N.
    pub fn codim_n(&self) -> usize {
        self.linear.nrows()
    }

    /// Evaluate A(x).
    pub fn apply(&self, x: &Point) -> Point {
        &self.linear * x + &self.shift
    }

    /// Operator norm ‖A′‖ (largest singular value).
    pub fn operator_norm(&self) -> f64 {
        *singular_values(self).last().unwrap_or(&0.0)
    }

    /// Smallest singular value λ₁(A′).
    pub fn min_singular_value(&self) -> f64 {
        *singular_values(self).first().unwrap_or(&0.0)
    }
}

/// Singular values of the linear part, ascending: λ₁ ≤ … ≤ λₙ.
///
/// For any r > 0 these bracket the displacement of A on spheres:
/// inf over |x−y| = r of |A(x)−A(y)| equals λ₁·r and the sup equals λₙ·r.
pub fn singular_values(a: &AffineMap) -> Vec<f64> {
    let svd = a.linear.clone().svd(false, false);
    let mut vals: Vec<f64> = svd.singular_values.iter().copied().collect();
    // nalgebra returns descending order; we promise ascending, padded with
    // zeros when rank-deficient so the list always has n entries.
    while vals.len() < a.n() {
        vals.push(0.0);
    }
    vals.sort_by(|p, q| p.partial_cmp(q).unwrap());
    vals
}

/// The unique affine map sending `nodes[i]` to `values[i]`.
///
/// `nodes` must be n+1 affinely independent points in ℝⁿ; `values` are the
/// corresponding points in ℝᴺ.
pub fn affine_from_samples(nodes: &[Point], values: &[Point]) -> Result<AffineMap> {
    let n = nodes
        .first()
        .map(|p| p.len())
        .ok_or_else(|| FlatextError::DegenerateSimplex("no nodes".into()))?;
    if nodes.len() != n + 1 || values.len() != n + 1 {
        return Err(FlatextError::DegenerateSimplex(format!(
            "need {} nodes/values in dimension {}, got {}/{}",
            n + 1,
            n,
            nodes.len(),
            values.len()
        )));
    }
    let big_n = values[0].len();
    // Columns of M are edge vectors of the node simplex; columns of W are the
    // matching edge vectors of the image.
    let mut m = DMatrix::zeros(n, n);
    let mut w = DMatrix::zeros(big_n, n);
    for i in 0..n {
        m.set_column(i, &(&nodes[i + 1] - &nodes[0]));
        w.set_column(i, &(&values[i + 1] - &values[0]));
    }
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1e-300);
    let svd = m.clone().svd(true, true);
    let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin < 1e-12 * scale {
        return Err(FlatextError::DegenerateSimplex(format!(
            "smallest simplex singular value {smin:.3e} below tolerance"
        )));
    }
    let m_inv = m
        .try_inverse()
        .ok_or_else(|| FlatextError::DegenerateSimplex("node matrix not invertible".into()))?;
    let linear = w * m_inv;
    let shift = &values[0] - &linear * &nodes[0];
    Ok(AffineMap::new(linear, shift))
}

/// An n-dimensional affine plane in ℝᴺ: `base + span(frame)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Plane {
    /// A point on the plane.
    pub base: Point,
    /// Pairwise orthonormal direction vectors spanning the plane.
    pub frame: Vec<Point>,
}

impl Plane {
    /// Build a plane, orthonormalizing `frame` by Gram–Schmidt.
    ///
    /// Returns `None` when the directions are linearly dependent.
    pub fn new(base: Point, frame: Vec<Point>) -> Option<Self> {
        let mut ortho: Vec<Point> = Vec::with_capacity(frame.len());
        for mut v in frame {
            for u in &ortho {
                let c = v.dot(u);
                v -= u * c;
            }
            let norm = v.norm();
            if norm < 1e-14 {
                return None;
            }
            ortho.push(v / norm);
        }
        Some(Self { base, frame: ortho })
    }

    /// Plane dimension n.
    pub fn dim(&self) -> usize {
        self.frame.len()
    }

    /// Orthogonal projection of `p` onto the plane.
    pub fn project(&self, p: &Point) -> Point {
        let d = p - &self.base;
        let mut q = self.base.clone();
        for u in &self.frame {
            q += u * d.dot(u);
        }
        q
    }

    /// Euclidean distance from `p` to the plane.
    pub fn distance(&self, p: &Point) -> f64 {
        (p - self.project(p)).norm()
    }

    /// A hyperplane through `base` with unit normal `u` (codimension 1).
    ///
    /// The frame is an orthonormal basis of u⊥.
    pub fn from_normal(base: Point, u: &Point) -> Self {
        let frame = orthonormal_complement(std::slice::from_ref(u));
        Self { base, frame }
    }
}

/// Orthonormal basis of the orthogonal complement of `vecs` in ℝᵈ.
///
/// `vecs` must themselves be orthonormal; an empty slice yields the full
/// standard basis of ℝᵈ.
pub fn orthonormal_complement_in(vecs: &[Point], d: usize) -> Vec<Point> {
    let mut basis: Vec<Point> = vecs.to_vec();
    let mut out = Vec::new();
    for i in 0..d {
        let mut e = DVector::zeros(d);
        e[i] = 1.0;
        for u in &basis {
            let c = e.dot(u);
            e -= u * c;
        }
        let norm = e.norm();
        if norm > 1e-10 {
            let e = e / norm;
            basis.push(e.clone());
            out.push(e);
        }
        if basis.len() == d {
            break;
        }
    }
    out
}

/// Orthonormal complement of nonempty `vecs` (ambient dimension inferred).
pub fn orthonormal_complement(vecs: &[Point]) -> Vec<Point> {
    orthonormal_complement_in(vecs, vecs[0].len())
}

/// Finite point set standing in for a closed subset of ℝᵈ, with an ambient
/// bounding cube.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampledSet {
    /// The sample points.
    pub points: Vec<Point>,
    /// Lower corner of the ambient bounding cube.
    pub box_corner: Point,
    /// Side length of the ambient bounding cube.
    pub box_side: f64,
    /// Ambient dimension d.
    pub dim: usize,
}

impl SampledSet {
    /// Wrap a nonempty point list, computing a bounding cube with 5% margin.
    pub fn from_points(points: Vec<Point>) -> Self {
        assert!(!points.is_empty(), "sampled set must be nonempty");
        let dim = points[0].len();
        let mut lo = points[0].clone();
        let mut hi = points[0].clone();
        for p in &points {
            for i in 0..dim {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        let side = (0..dim)
            .map(|i| hi[i] - lo[i])
            .fold(0.0f64, f64::max)
            .max(1e-12);
        let margin = 0.05 * side;
        let mut corner = lo.clone();
        for i in 0..dim {
            // Center each axis inside the cube.
            let slack = side + 2.0 * margin - (hi[i] - lo[i]);
            corner[i] = lo[i] - 0.5 * slack;
        }
        Self {
            points,
            box_corner: corner,
            box_side: side + 2.0 * margin,
            dim,
        }
    }

    /// Diameter of the sample (0 for singletons).
    pub fn diameter(&self) -> f64 {
        let mut d2 = 0.0f64;
        for i in 0..self.points.len() {
            for j in (i + 1)..self.points.len() {
                d2 = d2.max(dist_sq(&self.points[i], &self.points[j]));
            }
        }
        d2.sqrt()
    }

    /// Indices of samples within the closed ball B(x, r).
    pub fn indices_in_ball(&self, x: &Point, r: f64) -> Vec<usize> {
        let r2 = r * r;
        self.points
            .iter()
            .enumerate()
            .filter(|(_, p)| dist_sq(p, x) <= r2)
            .map(|(i, _)| i)
            .collect()
    }

    /// Distance from `x` to the sample, with the nearest index.
    ///
    /// Ties are broken by lowest sample index.
    pub fn distance_to(&self, x: &Point) -> (f64, usize) {
        let mut best = (f64::INFINITY, 0);
        for (i, p) in self.points.iter().enumerate() {
            let d = dist_sq(p, x);
            if d < best.0 {
                best = (d, i);
            }
        }
        (best.0.sqrt(), best.1)
    }

    /// Smallest positive pairwise gap among samples — the sampling resolution.
    pub fn resolution(&self) -> f64 {
        let mut res = f64::INFINITY;
        for i in 0..self.points.len() {
            for j in (i + 1)..self.points.len() {
                let d = dist_sq(&self.points[i], &self.points[j]);
                if d > 1e-28 {
                    res = res.min(d);
                }
            }
        }
        if res.is_finite() {
            res.sqrt()
        } else {
            0.0
        }
    }
}

/// Squared Euclidean distance without allocating an intermediate vector.
#[inline]
pub(crate) fn dist_sq(a: &Point, b: &Point) -> f64 {
    let mut s = 0.0;
    for k in 0..a.len() {
        let d = a[k] - b[k];
        s += d * d;
    }
    s
}

/// Result of a minimax plane fit.
#[derive(Debug, Clone)]
pub struct PlaneFit {
    pub plane: Plane,
    /// Max over the input points of the distance to `plane`.
    pub supdist: f64,
    /// Set when the input had fewer than n+1 affinely independent points, so
    /// any containing plane is optimal (supdist 0).
    pub degenerate: bool,
}

/// Best-fit n-plane in the sup-distance sense.
///
/// Minimizes `max_i dist(points[i], V)` over n-planes V; when `anchor` is
/// given, V is constrained to pass through it.  Two-stage solver: a
/// principal-component least-squares initialization followed by direction
/// refinement (pattern search over normals/directions with per-direction
/// exact offsets — midrange for hyperplanes, minimum enclosing circle for
/// lines in ℝ³).  The reported supdist is within `tol_fit` of the true
/// infimum on the dimensions this crate targets (n ≤ 2, N ≤ 3); higher
/// codimensions fall back to the iterated-reweighting stage alone.
pub fn fit_plane_minimax(points: &[Point], n: usize, anchor: Option<&Point>) -> PlaneFit {
    assert!(!points.is_empty(), "need at least one point");
    let big_n = points[0].len();
    assert!(n >= 1 && n <= big_n, "plane dimension out of range");

    // n = N: the whole space fits everything exactly.
    if n == big_n {
        let mut frame = Vec::new();
        for i in 0..n {
            let mut e = DVector::zeros(big_n);
            e[i] = 1.0;
            frame.push(e);
        }
        let base = anchor.cloned().unwrap_or_else(|| points[0].clone());
        return PlaneFit {
            plane: Plane { base, frame },
            supdist: 0.0,
            degenerate: false,
        };
    }

    // Degenerate input: points already span an affine subspace of dim ≤ n.
    if let Some(fit) = exact_containing_plane(points, n, anchor) {
        return fit;
    }

    let codim = big_n - n;
    let best = if codim == 1 {
        fit_hyperplane(points, anchor)
    } else if n == 1 && big_n == 3 {
        fit_line_3d(points, anchor)
    } else {
        fit_reweighted(points, n, anchor)
    };
    best
}

/// When the points affinely span ≤ n dimensions, return a containing plane
/// (supdist 0, flagged degenerate).  `None` when the spread is genuinely
/// n+1 dimensional.
fn exact_containing_plane(points: &[Point], n: usize, anchor: Option<&Point>) -> Option<PlaneFit> {
    let big_n = points[0].len();
    let center = anchor.cloned().unwrap_or_else(|| points[0].clone());
    let mut data = DMatrix::zeros(big_n, points.len());
    for (j, p) in points.iter().enumerate() {
        data.set_column(j, &(p - &center));
    }
    let scale = data.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    let svd = data.clone().svd(true, false);
    let u = svd.u.as_ref()?;
    let sv = &svd.singular_values;
    let rank = sv.iter().filter(|s| **s > 1e-12 * scale).count();
    if rank > n {
        return None;
    }
    // Spanning directions: the rank leading left singular vectors, padded
    // with arbitrary orthonormal completions up to n.
    let mut frame: Vec<Point> = (0..rank.min(u.ncols()))
        .map(|i| u.column(i).into_owned())
        .collect();
    if frame.len() < n {
        let extra = orthonormal_complement_in(&frame, big_n);
        for e in extra {
            if frame.len() == n {
                break;
            }
            frame.push(e);
        }
    }
    let plane = Plane {
        base: center,
        frame,
    };
    let supdist = points.iter().map(|p| plane.distance(p)).fold(0.0, f64::max);
    Some(PlaneFit {
        plane,
        supdist,
        degenerate: true,
    })
}

/// Ascending-variance principal directions of the point cloud about `center`.
fn principal_directions(points: &[Point], center: &Point) -> Vec<Point> {
    let d = points[0].len();
    let mut data = DMatrix::zeros(d, points.len());
    for (j, p) in points.iter().enumerate() {
        data.set_column(j, &(p - center));
    }
    let svd = data.svd(true, false);
    let u = svd.u.unwrap();
    let mut idx: Vec<usize> = (0..u.ncols()).collect();
    idx.sort_by(|a, b| {
        svd.singular_values[*a]
            .partial_cmp(&svd.singular_values[*b])
            .unwrap()
    });
    idx.iter().map(|i| u.column(*i).into_owned()).collect()
}

fn centroid(points: &[Point]) -> Point {
    let mut c = DVector::zeros(points[0].len());
    for p in points {
        c += p;
    }
    c / points.len() as f64
}

/// Objective for a hyperplane with unit normal `u`: the optimal offset is
/// the midrange of the projections (or the anchor's projection).
fn hyperplane_value(points: &[Point], u: &Point, anchor: Option<&Point>) -> f64 {
    match anchor {
        Some(a) => {
            let c = a.dot(u);
            points.iter().map(|p| (p.dot(u) - c).abs()).fold(0.0, f64::max)
        }
        None => {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for p in points {
                let t = p.dot(u);
                lo = lo.min(t);
                hi = hi.max(t);
            }
            0.5 * (hi - lo)
        }
    }
}

fn hyperplane_fit_from_normal(points: &[Point], u: &Point, anchor: Option<&Point>) -> PlaneFit {
    let base = match anchor {
        Some(a) => a.clone(),
        None => {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for p in points {
                let t = p.dot(u);
                lo = lo.min(t);
                hi = hi.max(t);
            }
            let c = 0.5 * (lo + hi);
            let cen = centroid(points);
            &cen - u * cen.dot(u) + u * c
        }
    };
    let plane = Plane::from_normal(base, u);
    let supdist = points.iter().map(|p| plane.distance(p)).fold(0.0, f64::max);
    PlaneFit {
        plane,
        supdist,
        degenerate: false,
    }
}

/// Deterministic unit-direction starts: principal directions plus a fixed
/// grid (angle grid on S¹, Fibonacci lattice on S²).
fn direction_starts(d: usize, seeds: &[Point]) -> Vec<Point> {
    let mut starts: Vec<Point> = seeds.to_vec();
    if d == 2 {
        let k = 64;
        for i in 0..k {
            let t = std::f64::consts::PI * i as f64 / k as f64;
            starts.push(DVector::from_vec(vec![t.cos(), t.sin()]));
        }
    } else if d == 3 {
        let k = 96;
        let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
        for i in 0..k {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / k as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let phi = 2.0 * std::f64::consts::PI * i as f64 / golden;
            starts.push(DVector::from_vec(vec![rho * phi.cos(), rho * phi.sin(), z]));
        }
    }
    starts
}

/// Pattern search over the unit sphere minimizing `value`; shrinks tangent
/// steps geometrically down to 1e−9 radians. Improvements must clear a small
/// relative noise floor so roundoff jitter in the objective cannot stall the
/// step schedule.
fn refine_direction<F: Fn(&Point) -> f64>(value: &F, start: &Point) -> (Point, f64) {
    let mut dir = start.normalize();
    let mut best = value(&dir);
    let mut step = 0.35f64;
    let mut at_step = 0usize;
    while step > 1e-9 {
        let tangents = orthonormal_complement(std::slice::from_ref(&dir));
        let mut improved = false;
        for t in &tangents {
            for sign in [1.0, -1.0] {
                let cand = (&dir + t * (sign * step)).normalize();
                let v = value(&cand);
                if v < best - 1e-13 * (1.0 + best.abs()) {
                    best = v;
                    dir = cand;
                    improved = true;
                } else if v < best {
                    best = v;
                    dir = cand;
                }
            }
        }
        // Halve on failure, and also after a bounded number of same-step
        // successes: objectives built on the enclosing-circle radius carry
        // ~1e−12 jitter that would otherwise stall the schedule.
        if !improved || at_step >= 24 {
            step *= 0.5;
            at_step = 0;
        } else {
            at_step += 1;
        }
    }
    (dir, best)
}

fn fit_hyperplane(points: &[Point], anchor: Option<&Point>) -> PlaneFit {
    let center = anchor.cloned().unwrap_or_else(|| centroid(points));
    let pd = principal_directions(points, &center);
    // The least-variance direction is the least-squares normal.
    let seeds: Vec<Point> = pd.into_iter().take(2).collect();
    let value = |u: &Point| hyperplane_value(points, u, anchor);
    let starts = direction_starts(points[0].len(), &seeds);
    let mut ranked: Vec<(f64, Point)> = starts
        .into_iter()
        .map(|u| {
            let u = u.normalize();
            (value(&u), u)
        })
        .collect();
    ranked.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut best: Option<(Point, f64)> = None;
    for (_, u) in ranked.into_iter().take(6) {
        let (dir, v) = refine_direction(&value, &u);
        if best.as_ref().map(|b| v < b.1).unwrap_or(true) {
            best = Some((dir, v));
        }
    }
    let (u, _) = best.unwrap();
    hyperplane_fit_from_normal(points, &canonical_sign(u), anchor)
}

/// Flip a direction so its first nonzero component is positive (deterministic
/// representative among ±u).
fn canonical_sign(u: Point) -> Point {
    for i in 0..u.len() {
        if u[i].abs() > 1e-14 {
            return if u[i] < 0.0 { -u } else { u };
        }
    }
    u
}

/// Objective for a line with unit direction `d` in ℝ³: project onto d⊥ and
/// take the minimum enclosing circle radius (or the max distance to the
/// anchor's projection).
fn line3d_value_and_center(
    points: &[Point],
    d: &Point,
    anchor: Option<&Point>,
) -> (f64, [f64; 2], [Point; 2]) {
    let (b0, b1) = complement_basis_3d(d);
    let proj: Vec<[f64; 2]> = points.iter().map(|p| [p.dot(&b0), p.dot(&b1)]).collect();
    match anchor {
        Some(a) => {
            let c = [a.dot(&b0), a.dot(&b1)];
            let r = proj
                .iter()
                .map(|q| ((q[0] - c[0]).powi(2) + (q[1] - c[1]).powi(2)).sqrt())
                .fold(0.0, f64::max);
            (r, c, [b0, b1])
        }
        None => {
            let (c, r) = min_enclosing_circle(&proj);
            (r, c, [b0, b1])
        }
    }
}

/// Orthonormal basis of the plane orthogonal to a unit vector in ℝ³,
/// built from cross products (no SVD; this sits on the hot path of the
/// 3D line fit).
fn complement_basis_3d(d: &Point) -> (Point, Point) {
    let a: [f64; 3] = if d[0].abs() <= 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    // b0 = normalize(a × d), b1 = d × b0.
    let mut b0 = [
        a[1] * d[2] - a[2] * d[1],
        a[2] * d[0] - a[0] * d[2],
        a[0] * d[1] - a[1] * d[0],
    ];
    let nrm = (b0[0] * b0[0] + b0[1] * b0[1] + b0[2] * b0[2]).sqrt();
    for c in b0.iter_mut() {
        *c /= nrm;
    }
    let b1 = [
        d[1] * b0[2] - d[2] * b0[1],
        d[2] * b0[0] - d[0] * b0[2],
        d[0] * b0[1] - d[1] * b0[0],
    ];
    (
        DVector::from_vec(b0.to_vec()),
        DVector::from_vec(b1.to_vec()),
    )
}

fn fit_line_3d(points: &[Point], anchor: Option<&Point>) -> PlaneFit {
    let center = anchor.cloned().unwrap_or_else(|| centroid(points));
    let pd = principal_directions(points, &center);
    // The max-variance direction is the least-squares line direction.
    let seeds: Vec<Point> = pd.into_iter().rev().take(2).collect();
    let value = |d: &Point| line3d_value_and_center(points, d, anchor).0;
    let starts = direction_starts(3, &seeds);
    let mut ranked: Vec<(f64, Point)> = starts
        .into_iter()
        .map(|u| {
            let u = u.normalize();
            (value(&u), u)
        })
        .collect();
    ranked.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut best: Option<(Point, f64)> = None;
    for (_, u) in ranked.into_iter().take(6) {
        let (dir, v) = refine_direction(&value, &u);
        if best.as_ref().map(|b| v < b.1).unwrap_or(true) {
            best = Some((dir, v));
        }
    }
    let (d, _) = best.unwrap();
    let d = canonical_sign(d);
    let (supdist, c, basis) = line3d_value_and_center(points, &d, anchor);
    let base = match anchor {
        Some(a) => a.clone(),
        None => &basis[0] * c[0] + &basis[1] * c[1],
    };
    PlaneFit {
        plane: Plane {
            base,
            frame: vec![d],
        },
        supdist,
        degenerate: false,
    }
}

/// Minimum enclosing circle of 2D points (Welzl's algorithm with a
/// deterministic shuffle).
pub fn min_enclosing_circle(points: &[[f64; 2]]) -> ([f64; 2], f64) {
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    // Fisher–Yates with a fixed inline LCG: expected linear time,
    // reproducible, and cheap enough to run per objective evaluation.
    let mut state: u64 = 0x5eed_5eed_5eed_5eed;
    for i in (1..pts.len()).rev() {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        let j = ((state >> 33) as usize) % (i + 1);
        pts.swap(i, j);
    }
    let mut c = ([pts[0][0], pts[0][1]], 0.0f64);
    for i in 1..pts.len() {
        if !in_circle(&c, &pts[i]) {
            c = (pts[i], 0.0);
            for j in 0..i {
                if !in_circle(&c, &pts[j]) {
                    c = circle_two(&pts[i], &pts[j]);
                    for k in 0..j {
                        if !in_circle(&c, &pts[k]) {
                            c = circle_three(&pts[i], &pts[j], &pts[k]);
                        }
                    }
                }
            }
        }
    }
    c
}

fn in_circle(c: &([f64; 2], f64), p: &[f64; 2]) -> bool {
    let dx = p[0] - c.0[0];
    let dy = p[1] - c.0[1];
    (dx * dx + dy * dy).sqrt() <= c.1 + 1e-12 * (1.0 + c.1)
}

fn circle_two(a: &[f64; 2], b: &[f64; 2]) -> ([f64; 2], f64) {
    let c = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
    let r = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt() / 2.0;
    (c, r)
}

fn circle_three(a: &[f64; 2], b: &[f64; 2], c: &[f64; 2]) -> ([f64; 2], f64) {
    let d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]));
    if d.abs() < 1e-30 {
        // Collinear: fall back to the widest two-point circle.
        let cands = [circle_two(a, b), circle_two(a, c), circle_two(b, c)];
        return cands
            .into_iter()
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .unwrap();
    }
    let a2 = a[0] * a[0] + a[1] * a[1];
    let b2 = b[0] * b[0] + b[1] * b[1];
    let c2 = c[0] * c[0] + c[1] * c[1];
    let ux = (a2 * (b[1] - c[1]) + b2 * (c[1] - a[1]) + c2 * (a[1] - b[1])) / d;
    let uy = (a2 * (c[0] - b[0]) + b2 * (a[0] - c[0]) + c2 * (b[0] - a[0])) / d;
    let r = ((a[0] - ux).powi(2) + (a[1] - uy).powi(2)).sqrt();
    ([ux, uy], r)
}

/// Fallback for higher codimensions: principal-component start, then
/// Chebyshev-style iterated reweighting that concentrates weight on the
/// active extreme points.
fn fit_reweighted(points: &[Point], n: usize, anchor: Option<&Point>) -> PlaneFit {
    let center = anchor.cloned().unwrap_or_else(|| centroid(points));
    let d = points[0].len();
    let mut weights = vec![1.0f64; points.len()];
    let mut best: Option<PlaneFit> = None;
    for iter in 0..40 {
        // Weighted PCA about the (weighted) center.
        let wsum: f64 = weights.iter().sum();
        let c = if anchor.is_some() {
            center.clone()
        } else {
            let mut c = DVector::zeros(d);
            for (p, w) in points.iter().zip(&weights) {
                c += p * *w;
            }
            c / wsum
        };
        let mut data = DMatrix::zeros(d, points.len());
        for (j, (p, w)) in points.iter().zip(&weights).enumerate() {
            data.set_column(j, &((p - &c) * w.sqrt()));
        }
        let svd = data.svd(true, false);
        let u = svd.u.unwrap();
        let mut idx: Vec<usize> = (0..u.ncols()).collect();
        idx.sort_by(|a, b| {
            svd.singular_values[*b]
                .partial_cmp(&svd.singular_values[*a])
                .unwrap()
        });
        let frame: Vec<Point> = idx.iter().take(n).map(|i| u.column(*i).into_owned()).collect();
        if let Some(plane) = Plane::new(c, frame) {
            let dists: Vec<f64> = points.iter().map(|p| plane.distance(p)).collect();
            let supdist = dists.iter().cloned().fold(0.0, f64::max);
            if best.as_ref().map(|b| supdist < b.supdist).unwrap_or(true) {
                best = Some(PlaneFit {
                    plane,
                    supdist,
                    degenerate: false,
                });
            }
            // Sharpen weights toward the extremes.
            let temp = supdist.max(1e-300) / (1.0 + iter as f64);
            for (w, dist) in weights.iter_mut().zip(&dists) {
                *w = ((dist - supdist) / temp).exp().max(1e-12);
            }
        } else {
            break;
        }
    }
    best.expect("reweighted fit produced no plane")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use approx::assert_relative_eq;

    fn v(coords: &[f64]) -> Point {
        DVector::from_vec(coords.to_vec())
    }

    #[test]
    fn singular_values_identity() {
        let a = AffineMap::identity(2);
        assert_eq!(singular_values(&a), vec![1.0, 1.0]);
    }

    #[test]
    fn singular_values_diagonal_into_r3() {
        let linear = DMatrix::from_row_slice(3, 2, &[2.0, 0.0, 0.0, 3.0, 0.0, 0.0]);
        let a = AffineMap::new(linear, DVector::zeros(3));
        let sv = singular_values(&a);
        assert_relative_eq!(sv[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(sv[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn singular_values_match_unit_circle_grid_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let linear = DMatrix::from_fn(3, 2, |_, _| rng.gen_range(-2.0..2.0));
            let a = AffineMap::new(linear.clone(), DVector::zeros(3));
            let sv = singular_values(&a);
            // Oracle: sup/inf of |A'u| over a fine unit-circle grid.
            let mut lo = f64::INFINITY;
            let mut hi = 0.0f64;
            for i in 0..20_000 {
                let t = std::f64::consts::TAU * i as f64 / 20_000.0;
                let u = v(&[t.cos(), t.sin()]);
                let norm = (&linear * u).norm();
                lo = lo.min(norm);
                hi = hi.max(norm);
            }
            assert_relative_eq!(sv[0], lo, max_relative = 1e-3, epsilon = 1e-6);
            assert_relative_eq!(sv[1], hi, max_relative = 1e-3, epsilon = 1e-6);
        }
    }

    #[test]
    fn affine_from_samples_identity() {
        let nodes = vec![v(&[0.0, 0.0]), v(&[1.0, 0.0]), v(&[0.0, 1.0])];
        let a = affine_from_samples(&nodes, &nodes).unwrap();
        assert_relative_eq!((a.linear - DMatrix::identity(2, 2)).norm(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(a.shift.norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn affine_from_samples_scaling_into_r2() {
        let nodes = vec![v(&[0.0]), v(&[1.0])];
        let values = vec![v(&[0.0, 0.0]), v(&[2.0, 0.0])];
        let a = affine_from_samples(&nodes, &values).unwrap();
        assert_relative_eq!(a.linear[(0, 0)], 2.0, epsilon = 1e-12);
        assert_relative_eq!(a.linear[(1, 0)], 0.0, epsilon = 1e-12);
        assert_relative_eq!(a.shift.norm(), 0.0, epsilon = 1e-12);
    }

    /// Independent oracle: solve for the affine map by Gaussian elimination
    /// on the full (n+1)×(n+1) interpolation system.
    fn elimination_oracle(nodes: &[Point], values: &[Point]) -> (DMatrix<f64>, DVector<f64>) {
        let n = nodes[0].len();
        let big_n = values[0].len();
        // Unknowns per output row: n linear coefficients + 1 shift.
        let mut linear = DMatrix::zeros(big_n, n);
        let mut shift = DVector::zeros(big_n);
        for row in 0..big_n {
            let mut m = vec![vec![0.0f64; n + 2]; n + 1];
            for (i, node) in nodes.iter().enumerate() {
                for j in 0..n {
                    m[i][j] = node[j];
                }
                m[i][n] = 1.0;
                m[i][n + 1] = values[i][row];
            }
            // Gaussian elimination with partial pivoting.
            for col in 0..=n {
                let piv = (col..=n)
                    .max_by(|a, b| m[*a][col].abs().partial_cmp(&m[*b][col].abs()).unwrap())
                    .unwrap();
                m.swap(col, piv);
                let p = m[col][col];
                for r in (col + 1)..=n {
                    let f = m[r][col] / p;
                    for c in col..=(n + 1) {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
            let mut sol = vec![0.0f64; n + 1];
            for r in (0..=n).rev() {
                let mut acc = m[r][n + 1];
                for c in (r + 1)..=n {
                    acc -= m[r][c] * sol[c];
                }
                sol[r] = acc / m[r][r];
            }
            for j in 0..n {
                linear[(row, j)] = sol[j];
            }
            shift[row] = sol[n];
        }
        (linear, shift)
    }

    #[test]
    fn affine_from_samples_matches_elimination_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let nodes: Vec<Point> = (0..3)
                .map(|_| v(&[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]))
                .collect();
            let values: Vec<Point> = (0..3)
                .map(|_| {
                    v(&[
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    ])
                })
                .collect();
            let a = match affine_from_samples(&nodes, &values) {
                Ok(a) => a,
                Err(_) => continue, // near-degenerate draw
            };
            for (node, val) in nodes.iter().zip(&values) {
                assert!((a.apply(node) - val).norm() < 1e-10);
            }
            let (linear, shift) = elimination_oracle(&nodes, &values);
            assert!((a.linear.clone() - linear).norm() < 1e-8);
            assert!((a.shift.clone() - shift).norm() < 1e-8);
        }
    }

    #[test]
    fn fit_collinear_points_is_exact() {
        let pts: Vec<Point> = (0..10).map(|i| v(&[i as f64, 2.0 * i as f64])).collect();
        let fit = fit_plane_minimax(&pts, 1, None);
        assert!(fit.supdist < 1e-12);
    }

    /// Exhaustive angle-grid oracle for 1-planes in ℝ² at 1e−4 rad.
    fn angle_grid_oracle(points: &[Point], anchor: Option<&Point>) -> f64 {
        let steps = 31_416; // π / 1e-4
        let mut best = f64::INFINITY;
        for i in 0..steps {
            let t = std::f64::consts::PI * i as f64 / steps as f64;
            let u = v(&[-t.sin(), t.cos()]); // normal to direction (cos t, sin t)
            best = best.min(hyperplane_value(points, &u, anchor));
        }
        best
    }

    #[test]
    fn fit_unit_square_corners() {
        let pts = vec![
            v(&[0.0, 0.0]),
            v(&[1.0, 0.0]),
            v(&[1.0, 1.0]),
            v(&[0.0, 1.0]),
        ];
        let fit = fit_plane_minimax(&pts, 1, None);
        assert_relative_eq!(fit.supdist, 0.5, epsilon = 1e-9);
        let oracle = angle_grid_oracle(&pts, None);
        assert!((fit.supdist - oracle).abs() < 1e-4);
    }

    #[test]
    fn fit_equilateral_triangle() {
        let pts = vec![
            v(&[0.0, 0.0]),
            v(&[1.0, 0.0]),
            v(&[0.5, 3.0f64.sqrt() / 2.0]),
        ];
        let fit = fit_plane_minimax(&pts, 1, None);
        assert_relative_eq!(fit.supdist, 3.0f64.sqrt() / 4.0, epsilon = 1e-9);
        let oracle = angle_grid_oracle(&pts, None);
        assert!((fit.supdist - oracle).abs() < 1e-4);
    }

    #[test]
    fn anchored_fit_never_beats_unconstrained() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..30 {
            let pts: Vec<Point> = (0..12)
                .map(|_| v(&[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]))
                .collect();
            let anchor = pts[0].clone();
            let free = fit_plane_minimax(&pts, 1, None);
            let tied = fit_plane_minimax(&pts, 1, Some(&anchor));
            assert!(tied.supdist >= free.supdist - 1e-9);
        }
    }

    #[test]
    fn fit_matches_angle_oracle_on_random_clouds() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..25 {
            let pts: Vec<Point> = (0..15)
                .map(|_| v(&[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]))
                .collect();
            let fit = fit_plane_minimax(&pts, 1, None);
            let oracle = angle_grid_oracle(&pts, None);
            assert!(
                fit.supdist <= oracle + 1e-9,
                "solver {} worse than oracle {}",
                fit.supdist,
                oracle
            );
            assert!(fit.supdist >= oracle - 2e-4, "solver underflowed the infimum");
        }
    }

    #[test]
    fn fit_line_in_r3_beats_least_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..10 {
            let dir = v(&[1.0, 0.5, -0.3]).normalize();
            let pts: Vec<Point> = (0..20)
                .map(|i| {
                    let t = i as f64 / 19.0;
                    &dir * (2.0 * t)
                        + v(&[
                            rng.gen_range(-0.05..0.05),
                            rng.gen_range(-0.05..0.05),
                            rng.gen_range(-0.05..0.05),
                        ])
                })
                .collect();
            let fit = fit_plane_minimax(&pts, 1, None);
            assert!(fit.supdist < 0.1, "line fit residual too large");
            // Sanity: reported supdist matches a direct recomputation.
            let direct = pts.iter().map(|p| fit.plane.distance(p)).fold(0.0, f64::max);
            assert_relative_eq!(fit.supdist, direct, epsilon = 1e-10);
        }
    }

    #[test]
    fn degenerate_input_is_flagged() {
        let pts = vec![v(&[0.0, 0.0, 0.0]), v(&[1.0, 0.0, 0.0])];
        let fit = fit_plane_minimax(&pts, 2, None);
        assert!(fit.degenerate);
        assert!(fit.supdist < 1e-12);
    }

    #[test]
    fn min_enclosing_circle_square() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let (c, r) = min_enclosing_circle(&pts);
        assert_relative_eq!(c[0], 0.5, epsilon = 1e-9);
        assert_relative_eq!(c[1], 0.5, epsilon = 1e-9);
        assert_relative_eq!(r, 0.5f64.sqrt(), epsilon = 1e-9);
    }
}

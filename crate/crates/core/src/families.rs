//! ε-compatible affine families over dyadic scale grids: compatibility and
//! almost-affinity measurement, the T_ε/τ/Ψ quantities, stabilization and
//! adaptation transforms, and verifiers for the quantitative inequalities
//! that compatible families satisfy.
//!
//! Scale grids are geometric with ratio 2 anchored at `r_min`, matching the
//! dyadic structure of every telescoping argument involved; intermediate
//! scales are reconstructed by nearest-grid lookup.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FlatextError, Result};
use crate::geometry::{affine_from_samples, AffineMap, Point};
use crate::quasisymmetry::SampledMap;

/// Indexed collection {A_{x,r}} over base points × a geometric scale grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AffineFamily {
    /// Index set (finite surrogate for E ⊂ ℝⁿ).
    pub base_points: Vec<Point>,
    /// Scales r_min·2^k, k = 0..levels.
    pub scales: Vec<f64>,
    /// Row-major: maps[b·levels + k] is A at (base b, scale k).
    pub maps: Vec<AffineMap>,
    /// The ε this family claims.
    pub eps_nominal: f64,
}

impl AffineFamily {
    pub fn new(
        base_points: Vec<Point>,
        r_min: f64,
        levels: usize,
        maps: Vec<AffineMap>,
        eps_nominal: f64,
    ) -> Self {
        assert!(r_min > 0.0 && levels >= 1);
        assert_eq!(maps.len(), base_points.len() * levels, "one map per (base, scale)");
        let scales = (0..levels).map(|k| r_min * 2f64.powi(k as i32)).collect();
        Self {
            base_points,
            scales,
            maps,
            eps_nominal,
        }
    }

    pub fn levels(&self) -> usize {
        self.scales.len()
    }

    pub fn map(&self, b: usize, k: usize) -> &AffineMap {
        &self.maps[b * self.levels() + k]
    }

    pub fn map_mut(&mut self, b: usize, k: usize) -> &mut AffineMap {
        let l = self.levels();
        &mut self.maps[b * l + k]
    }

    pub fn r_min(&self) -> f64 {
        self.scales[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.scales.last().unwrap()
    }

    /// Index of the grid scale nearest to r in log₂.
    pub fn nearest_scale_index(&self, r: f64) -> usize {
        let k = (r / self.r_min()).log2().round();
        (k.max(0.0) as usize).min(self.levels() - 1)
    }

    /// Index of the base point nearest to x (ties to the lowest index).
    pub fn nearest_base_index(&self, x: &Point) -> usize {
        let mut best = (f64::INFINITY, 0usize);
        for (i, p) in self.base_points.iter().enumerate() {
            let d = (p - x).norm();
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    /// A_{x,r} by nearest-grid lookup.
    pub fn lookup(&self, x: &Point, r: f64) -> &AffineMap {
        self.map(self.nearest_base_index(x), self.nearest_scale_index(r))
    }

    /// Diameter of the base point set.
    pub fn base_diameter(&self) -> f64 {
        let mut d = 0.0f64;
        for i in 0..self.base_points.len() {
            for j in (i + 1)..self.base_points.len() {
                d = d.max((&self.base_points[i] - &self.base_points[j]).norm());
            }
        }
        d
    }
}

/// Inequality kinds recognized by `verify_inequality`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IneqKind {
    Compat,
    PreA,
    PreB,
    PostA,
    PostB,
    AbBound,
    Holder,
    Inradius,
}

/// Literal evaluation of both sides of a verified inequality.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IneqReport {
    pub kind: IneqKind,
    pub lhs: f64,
    pub rhs: f64,
    /// rhs − lhs; recorded even when negative.
    pub slack: f64,
    /// Reproducible identification of the tested instance.
    pub witness: String,
}

impl IneqReport {
    fn new(kind: IneqKind, lhs: f64, rhs: f64, witness: String) -> Self {
        Self {
            kind,
            lhs,
            rhs,
            slack: rhs - lhs,
            witness,
        }
    }
}

/// T_ε(t) = (2log₂(t)+1)·t^{2log₂(1+ε)}, nondecreasing in both arguments.
pub fn t_eps(eps: f64, t: f64) -> Result<f64> {
    if t < 1.0 {
        return Err(FlatextError::DomainError(format!("T_eps needs t >= 1, got {t}")));
    }
    if eps <= 0.0 {
        return Err(FlatextError::DomainError(format!("T_eps needs eps > 0, got {eps}")));
    }
    Ok((2.0 * t.log2() + 1.0) * t.powf(2.0 * (1.0 + eps).log2()))
}

/// τ(x,r,y,s) = max{r, s, 2|x−y|} / min{r, s}.
pub fn tau(x: &Point, r: f64, y: &Point, s: f64) -> f64 {
    assert!(r > 0.0 && s > 0.0);
    let d = 2.0 * (x - y).norm();
    r.max(s).max(d) / r.min(s)
}

/// Measured compatibility constant: max over qualifying pairs
/// (|x−y| ≤ max{r,s} and 1/2 ≤ r/s ≤ 2) of ‖A′_{x,r}−A′_{y,s}‖ / min norm.
///
/// Returns the constant and the worst pair ((b,k),(b,k)).
pub fn check_compatible(
    fam: &AffineFamily,
) -> Result<(f64, ((usize, usize), (usize, usize)))> {
    let levels = fam.levels();
    let nb = fam.base_points.len();
    // Pre-compute operator norms, rejecting degenerate members.
    let mut norms = vec![0.0f64; nb * levels];
    for b in 0..nb {
        for k in 0..levels {
            let nrm = fam.map(b, k).operator_norm();
            if nrm <= 0.0 {
                return Err(FlatextError::ZeroLinearPart(b, k));
            }
            norms[b * levels + k] = nrm;
        }
    }
    let mut worst = (0.0f64, ((0, 0), (0, 0)));
    for b1 in 0..nb {
        for k1 in 0..levels {
            for b2 in b1..nb {
                let k2_lo = k1.saturating_sub(1);
                let k2_hi = (k1 + 1).min(levels - 1);
                for k2 in k2_lo..=k2_hi {
                    if b2 == b1 && k2 <= k1 {
                        continue; // avoid double-count and the trivial pair
                    }
                    let (r, s) = (fam.scales[k1], fam.scales[k2]);
                    let dxy = (&fam.base_points[b1] - &fam.base_points[b2]).norm();
                    if dxy > r.max(s) {
                        continue;
                    }
                    let diff = (&fam.map(b1, k1).linear - &fam.map(b2, k2).linear)
                        .clone()
                        .svd(false, false)
                        .singular_values
                        .iter()
                        .cloned()
                        .fold(0.0, f64::max);
                    let m = norms[b1 * levels + k1].min(norms[b2 * levels + k2]);
                    let ratio = diff / m;
                    if ratio > worst.0 {
                        worst = (ratio, ((b1, k1), (b2, k2)));
                    }
                }
            }
        }
    }
    Ok(worst)
}

/// Measured almost-affinity constant of (f, E, 𝒜): the max of the proximity
/// term sup_{z∈E∩B(x,r)} |f(z)−A_{x,r}(z)| / (‖A′_{x,r}‖·r) over all family
/// entries, combined with the compatibility constant (the definition demands
/// both).
pub fn check_almost_affine(f: &SampledMap, fam: &AffineFamily) -> Result<f64> {
    let compat = check_compatible(fam)?.0;
    Ok(compat.max(proximity_constant(f, fam)?))
}

/// The proximity half of the almost-affine measurement (no compatibility).
pub fn proximity_constant(f: &SampledMap, fam: &AffineFamily) -> Result<f64> {
    let levels = fam.levels();
    let mut worst = 0.0f64;
    for (b, x) in fam.base_points.iter().enumerate() {
        for k in 0..levels {
            let r = fam.scales[k];
            let a = fam.map(b, k);
            let nrm = a.operator_norm();
            if nrm <= 0.0 {
                return Err(FlatextError::ZeroLinearPart(b, k));
            }
            for (z, fz) in f.domain.points.iter().zip(&f.image) {
                if (z - x).norm() <= r {
                    let dev = (fz - a.apply(z)).norm() / (nrm * r);
                    worst = worst.max(dev);
                }
            }
        }
    }
    Ok(worst)
}

/// Ψ(V) = (diam V)ⁿ / ℒⁿ(co V); infinity-sentinel when the hull volume
/// vanishes (relative tolerance 1e−12).
///
/// Exact simplex determinant for |V| = n+1; convex-hull volume for n ≤ 3
/// otherwise.
pub fn psi(v: &[Point]) -> Result<f64> {
    if v.len() < 2 {
        return Err(FlatextError::DomainError("psi needs at least 2 points".into()));
    }
    let n = v[0].len();
    let mut diam = 0.0f64;
    for i in 0..v.len() {
        for j in (i + 1)..v.len() {
            diam = diam.max((&v[i] - &v[j]).norm());
        }
    }
    if diam <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let vol = if v.len() == n + 1 {
        // Simplex: |det of edge matrix| / n!.
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m.set_column(i, &(&v[i + 1] - &v[0]));
        }
        m.determinant().abs() / factorial(n)
    } else {
        match n {
            1 => {
                let lo = v.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
                let hi = v.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
                hi - lo
            }
            2 => hull_area_2d(v),
            3 => hull_volume_3d(v),
            _ => return Err(FlatextError::UnsupportedDimension(n)),
        }
    };
    let tol = 1e-12 * diam.powi(n as i32);
    if vol <= tol {
        return Ok(f64::INFINITY);
    }
    Ok(diam.powi(n as i32) / vol)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product::<f64>().max(1.0)
}

/// Convex hull area by Andrew's monotone chain + shoelace.
fn hull_area_2d(v: &[Point]) -> f64 {
    let mut pts: Vec<(f64, f64)> = v.iter().map(|p| (p[0], p[1])).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    if pts.len() < 3 {
        return 0.0;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().chain(pts.iter().rev().skip(1)) {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            // Keep strictly convex turns; collinear points are dropped.
            if hull.len() == pts.len() {
                break;
            }
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    let mut area2 = 0.0;
    for i in 0..hull.len() {
        let j = (i + 1) % hull.len();
        area2 += hull[i].0 * hull[j].1 - hull[j].0 * hull[i].1;
    }
    area2.abs() / 2.0
}

/// Convex hull volume in ℝ³ by incremental insertion.
fn hull_volume_3d(v: &[Point]) -> f64 {
    let pts: Vec<[f64; 3]> = v.iter().map(|p| [p[0], p[1], p[2]]).collect();
    let m = pts.len();
    if m < 4 {
        return 0.0;
    }
    let sub = |a: [f64; 3], b: [f64; 3]| [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    let cross = |a: [f64; 3], b: [f64; 3]| {
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    };
    let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    // Seed tetrahedron: farthest pair, then farthest from the line, then
    // farthest from the plane.
    let scale = {
        let mut d = 0.0f64;
        for i in 0..m {
            for j in (i + 1)..m {
                d = d.max(dot(sub(pts[i], pts[j]), sub(pts[i], pts[j])).sqrt());
            }
        }
        d
    };
    let eps = 1e-12 * scale.max(1e-300);
    let (mut i0, mut i1, mut best) = (0, 1, -1.0);
    for i in 0..m {
        for j in (i + 1)..m {
            let d = dot(sub(pts[i], pts[j]), sub(pts[i], pts[j]));
            if d > best {
                best = d;
                i0 = i;
                i1 = j;
            }
        }
    }
    let axis = sub(pts[i1], pts[i0]);
    let (mut i2, mut best) = (0, -1.0);
    for i in 0..m {
        let c = cross(axis, sub(pts[i], pts[i0]));
        let d = dot(c, c);
        if d > best {
            best = d;
            i2 = i;
        }
    }
    let normal = cross(axis, sub(pts[i2], pts[i0]));
    let (mut i3, mut best) = (0, -1.0);
    for i in 0..m {
        let d = dot(normal, sub(pts[i], pts[i0])).abs();
        if d > best {
            best = d;
            i3 = i;
        }
    }
    // Degenerate (coplanar) input.
    if dot(normal, sub(pts[i3], pts[i0])).abs() <= eps * scale {
        return 0.0;
    }
    let centroid = [
        (pts[i0][0] + pts[i1][0] + pts[i2][0] + pts[i3][0]) / 4.0,
        (pts[i0][1] + pts[i1][1] + pts[i2][1] + pts[i3][1]) / 4.0,
        (pts[i0][2] + pts[i1][2] + pts[i2][2] + pts[i3][2]) / 4.0,
    ];
    // Faces as index triples oriented so the normal points away from the
    // interior centroid.
    let orient = |f: [usize; 3]| -> [usize; 3] {
        let nrm = cross(sub(pts[f[1]], pts[f[0]]), sub(pts[f[2]], pts[f[0]]));
        if dot(nrm, sub(centroid, pts[f[0]])) > 0.0 {
            [f[0], f[2], f[1]]
        } else {
            f
        }
    };
    let mut faces: Vec<[usize; 3]> = vec![
        orient([i0, i1, i2]),
        orient([i0, i1, i3]),
        orient([i0, i2, i3]),
        orient([i1, i2, i3]),
    ];
    for p in 0..m {
        if p == i0 || p == i1 || p == i2 || p == i3 {
            continue;
        }
        let visible: Vec<usize> = (0..faces.len())
            .filter(|&fi| {
                let f = faces[fi];
                let nrm = cross(sub(pts[f[1]], pts[f[0]]), sub(pts[f[2]], pts[f[0]]));
                dot(nrm, sub(pts[p], pts[f[0]])) > eps
            })
            .collect();
        if visible.is_empty() {
            continue;
        }
        // Horizon: edges of visible faces bordering an invisible face.
        use std::collections::HashMap;
        let mut edge_count: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        for &fi in &visible {
            let f = faces[fi];
            for e in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                let key = (e.0.min(e.1), e.0.max(e.1));
                let entry = edge_count.entry(key).or_insert((0, 0));
                entry.0 += 1;
                entry.1 = if e.0 < e.1 { 0 } else { 1 };
            }
        }
        let horizon: Vec<(usize, usize)> = {
            let mut h = Vec::new();
            for &fi in &visible {
                let f = faces[fi];
                for e in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                    let key = (e.0.min(e.1), e.0.max(e.1));
                    if edge_count[&key].0 == 1 {
                        h.push(e);
                    }
                }
            }
            h
        };
        let mut keep: Vec<[usize; 3]> = faces
            .iter()
            .enumerate()
            .filter(|(fi, _)| !visible.contains(fi))
            .map(|(_, f)| *f)
            .collect();
        for (a, b) in horizon {
            keep.push(orient([a, b, p]));
        }
        faces = keep;
    }
    let mut vol6 = 0.0;
    for f in &faces {
        let a = sub(pts[f[0]], centroid);
        let b = sub(pts[f[1]], centroid);
        let c = sub(pts[f[2]], centroid);
        vol6 += dot(a, cross(b, c)).abs();
    }
    vol6 / 6.0
}

/// Replace all super-diameter scales with the map at (x_*, diam E): the
/// output is stable on large scales and preserves the measured constants.
pub fn stabilize_large_scales(fam: &AffineFamily, x_star: usize) -> AffineFamily {
    let diam = fam.base_diameter();
    let mut out = fam.clone();
    if diam <= 0.0 {
        return out;
    }
    let k_diam = fam.nearest_scale_index(diam);
    let replacement = fam.map(x_star, k_diam).clone();
    for b in 0..fam.base_points.len() {
        for k in 0..fam.levels() {
            if fam.scales[k] > diam {
                *out.map_mut(b, k) = replacement.clone();
            }
        }
    }
    out
}

/// P(n) = 18·(1 + 2(2n)^{(n+1)/2}), the almost-affinity inflation factor of
/// the small-scale adaptation transform.
pub fn p_const(n: usize) -> f64 {
    18.0 * (1.0 + 2.0 * (2.0 * n as f64).powf((n as f64 + 1.0) / 2.0))
}

/// Replace small-scale maps (r ≤ 2r₀) with the affine interpolants of f at
/// the nodes {x, x+re₁, …, x+reₙ}; larger scales are copied from the input.
///
/// The output family is over the base points inside B(x0, r0) and its
/// almost-affinity constant is at most P(n)·ε (ε measured on the input).
pub fn adapt_small_scales(
    f: &SampledMap,
    fam: &AffineFamily,
    x0: &Point,
    r0: f64,
) -> Result<AffineFamily> {
    let n = x0.len();
    let eps = check_almost_affine(f, fam)?;
    let p = p_const(n);
    if p * eps > 1.0 {
        return Err(FlatextError::EpsilonTooLarge {
            eps,
            limit: 1.0 / p,
        });
    }
    let keep: Vec<usize> = fam
        .base_points
        .iter()
        .enumerate()
        .filter(|(_, x)| (*x - x0).norm() <= r0)
        .map(|(b, _)| b)
        .collect();
    if keep.is_empty() {
        return Err(FlatextError::DomainError(
            "no base points inside the target ball".into(),
        ));
    }
    let lookup_sample = |node: &Point| -> Result<Point> {
        for (z, fz) in f.domain.points.iter().zip(&f.image) {
            if (z - node).norm() <= 1e-9 {
                return Ok(fz.clone());
            }
        }
        Err(FlatextError::MissingSamples(format!("{:?}", node.as_slice())))
    };
    let levels = fam.levels();
    let mut maps = Vec::with_capacity(keep.len() * levels);
    for &b in &keep {
        let x = &fam.base_points[b];
        for k in 0..levels {
            let r = fam.scales[k];
            if r <= 2.0 * r0 {
                let mut nodes = vec![x.clone()];
                let mut values = vec![lookup_sample(x)?];
                for i in 0..n {
                    let mut node = x.clone();
                    node[i] += r;
                    values.push(lookup_sample(&node)?);
                    nodes.push(node);
                }
                maps.push(affine_from_samples(&nodes, &values)?);
            } else {
                maps.push(fam.map(b, k).clone());
            }
        }
    }
    let base_points = keep.iter().map(|&b| fam.base_points[b].clone()).collect();
    Ok(AffineFamily::new(
        base_points,
        fam.r_min(),
        levels,
        maps,
        p * eps.max(f64::MIN_POSITIVE),
    ))
}

/// Inputs for `verify_inequality`, one variant per inequality kind.
pub enum IneqCheck<'a> {
    /// Compatibility of a single qualifying pair against eps_nominal.
    Compat {
        fam: &'a AffineFamily,
        i: (usize, usize),
        j: (usize, usize),
    },
    /// ‖A′_{x,r}−A′_{y,s}‖ ≤ T_ε(τ)·ε·min norm.
    PreA {
        fam: &'a AffineFamily,
        i: (usize, usize),
        j: (usize, usize),
        eps: f64,
    },
    /// max norm ≤ (1+T_ε(τ)ε)·min norm.
    PreB {
        fam: &'a AffineFamily,
        i: (usize, usize),
        j: (usize, usize),
        eps: f64,
    },
    /// |A_{x,r}(z)−A_{y,s}(z)| ≤ C(a)·T_ε(τ)·ε·min norm·max{r,s}, where C(a)
    /// is the explicit constant read off the proof chain (see `c_post`).
    PostA {
        fam: &'a AffineFamily,
        i: (usize, usize),
        j: (usize, usize),
        z: Point,
        eps: f64,
        a: f64,
    },
    /// The τ ≤ a specialization: C(a)·T_ε(a)·ε·min norm·max{r,s}.
    PostB {
        fam: &'a AffineFamily,
        i: (usize, usize),
        j: (usize, usize),
        z: Point,
        eps: f64,
        a: f64,
    },
    /// |A(z)−B(z)| ≤ ε(diam V + (4n^{(n+1)/2}/n!)·Ψ(V)·dist(z,V)) with ε
    /// measured from the vertex deviations.
    AbBound {
        a: &'a AffineMap,
        b: &'a AffineMap,
        v: &'a [Point],
        z: Point,
    },
    /// Hölder bound |f(x)−f(y)| ≤ (4/(θ log 2))·(|x−y|/r₀)^{(1−ε)θ}·‖A′_{x₀,r₀}‖·r₀.
    Holder {
        fam: &'a AffineFamily,
        f: &'a SampledMap,
        x0: usize,
        r0: f64,
        xi: usize,
        yi: usize,
        eps: f64,
    },
    /// Diameter / boundary-displacement / local-flatness estimates for the
    /// image of a ball under an almost affine map; reports the tightest of
    /// the conclusions.
    Inradius {
        f: &'a SampledMap,
        a: &'a AffineMap,
        x_index: usize,
        r: f64,
        boundary: &'a [usize],
        eps: f64,
        h: f64,
        t: f64,
    },
}

fn op_norm(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Explicit post-estimate constant from the proof chain: with hypotheses
/// ε ≤ a, ε·T_ε(a) ≤ 1 and ε·T_ε(τ) ≤ 1 in force,
/// C(a) = 4a·T_ε(2a) + 4a·T_ε(a) + 8a + 4.
pub fn c_post(eps: f64, a: f64) -> Result<f64> {
    Ok(4.0 * a * t_eps(eps, 2.0 * a)? + 4.0 * a * t_eps(eps, a)? + 8.0 * a + 4.0)
}

fn pair_data(
    fam: &AffineFamily,
    i: (usize, usize),
    j: (usize, usize),
) -> (Point, f64, &AffineMap, Point, f64, &AffineMap) {
    let (x, r) = (fam.base_points[i.0].clone(), fam.scales[i.1]);
    let (y, s) = (fam.base_points[j.0].clone(), fam.scales[j.1]);
    (x, r, fam.map(i.0, i.1), y, s, fam.map(j.0, j.1))
}

/// Check the scale coverage that the telescoping proofs consume: every
/// intermediate dyadic scale up to 2·max{r, s, 2|x−y|} must exist in the
/// family grid.
fn require_scale_coverage(fam: &AffineFamily, x: &Point, r: f64, y: &Point, s: f64) -> Result<()> {
    let top = 2.0 * r.max(s).max(2.0 * (x - y).norm());
    if top > fam.r_max() * (1.0 + 1e-12) {
        return Err(FlatextError::HypothesisViolated(format!(
            "scale coverage: need grid top ≥ {top:.3e}, family tops out at {:.3e}",
            fam.r_max()
        )));
    }
    Ok(())
}

/// Evaluate both sides of the named inequality literally; callers assert
/// nonnegative slack on hypothesis-satisfying inputs.
pub fn verify_inequality(check: &IneqCheck<'_>) -> Result<IneqReport> {
    match check {
        IneqCheck::Compat { fam, i, j } => {
            let (x, r, ai, y, s, aj) = pair_data(fam, *i, *j);
            let ratio = r / s;
            if (x.clone() - &y).norm() > r.max(s) || !(0.5..=2.0).contains(&ratio) {
                return Err(FlatextError::HypothesisViolated(
                    "pair does not qualify for the compatibility condition".into(),
                ));
            }
            let lhs = op_norm(&(&ai.linear - &aj.linear));
            let rhs = fam.eps_nominal * ai.operator_norm().min(aj.operator_norm());
            Ok(IneqReport::new(
                IneqKind::Compat,
                lhs,
                rhs,
                format!("pair {:?} {:?}", i, j),
            ))
        }
        IneqCheck::PreA { fam, i, j, eps } => {
            let (x, r, ai, y, s, aj) = pair_data(fam, *i, *j);
            require_scale_coverage(fam, &x, r, &y, s)?;
            let t = t_eps(*eps, tau(&x, r, &y, s))?;
            let lhs = op_norm(&(&ai.linear - &aj.linear));
            let rhs = t * eps * ai.operator_norm().min(aj.operator_norm());
            Ok(IneqReport::new(
                IneqKind::PreA,
                lhs,
                rhs,
                format!("pair {:?} {:?}", i, j),
            ))
        }
        IneqCheck::PreB { fam, i, j, eps } => {
            let (x, r, ai, y, s, aj) = pair_data(fam, *i, *j);
            require_scale_coverage(fam, &x, r, &y, s)?;
            let t = t_eps(*eps, tau(&x, r, &y, s))?;
            let (ni, nj) = (ai.operator_norm(), aj.operator_norm());
            let lhs = ni.max(nj);
            let rhs = (1.0 + t * eps) * ni.min(nj);
            Ok(IneqReport::new(
                IneqKind::PreB,
                lhs,
                rhs,
                format!("pair {:?} {:?}", i, j),
            ))
        }
        IneqCheck::PostA {
            fam,
            i,
            j,
            z,
            eps,
            a,
        }
        | IneqCheck::PostB {
            fam,
            i,
            j,
            z,
            eps,
            a,
        } => {
            let is_b = matches!(check, IneqCheck::PostB { .. });
            let (x, r, ai, y, s, aj) = pair_data(fam, *i, *j);
            let smax = r.max(s);
            if *a < 1.0 || a.log2().fract().abs() > 1e-12 {
                return Err(FlatextError::HypothesisViolated(
                    "a must be a power of two ≥ 1 on the dyadic grid".into(),
                ));
            }
            if *eps > *a {
                return Err(FlatextError::HypothesisViolated("eps ≤ a fails".into()));
            }
            if (x.clone() - &y).norm() > a * smax {
                return Err(FlatextError::HypothesisViolated("|x−y| ≤ a·max{r,s} fails".into()));
            }
            let dz = (z - &x).norm().min((z - &y).norm());
            if dz > a * smax {
                return Err(FlatextError::HypothesisViolated(
                    "dist(z,{x,y}) ≤ a·max{r,s} fails".into(),
                ));
            }
            let tval = tau(&x, r, &y, s);
            if is_b && tval > *a {
                return Err(FlatextError::HypothesisViolated("τ ≤ a fails".into()));
            }
            if eps * t_eps(*eps, *a)? > 1.0 || eps * t_eps(*eps, tval)? > 1.0 {
                return Err(FlatextError::HypothesisViolated(
                    "ε·T_ε too large for the norm-comparability steps".into(),
                ));
            }
            // Coverage must also reach the auxiliary scale a·max{r,s}.
            require_scale_coverage(fam, &x, r, &y, a * smax)?;
            let m = ai.operator_norm().min(aj.operator_norm());
            let c = c_post(*eps, *a)?;
            let t_factor = if is_b {
                t_eps(*eps, *a)?
            } else {
                t_eps(*eps, tval)?
            };
            let lhs = (ai.apply(z) - aj.apply(z)).norm();
            let rhs = c * t_factor * eps * m * smax;
            Ok(IneqReport::new(
                if is_b { IneqKind::PostB } else { IneqKind::PostA },
                lhs,
                rhs,
                format!("pair {:?} {:?} a={a}", i, j),
            ))
        }
        IneqCheck::AbBound { a, b, v, z } => {
            let n = v[0].len();
            let mut diam = 0.0f64;
            for p in 0..v.len() {
                for q in (p + 1)..v.len() {
                    diam = diam.max((&v[p] - &v[q]).norm());
                }
            }
            if diam <= 0.0 {
                return Err(FlatextError::HypothesisViolated("diam V = 0".into()));
            }
            let eps = v
                .iter()
                .map(|p| (a.apply(p) - b.apply(p)).norm())
                .fold(0.0, f64::max)
                / diam;
            let psi_v = psi(v)?;
            let dist_zv = v.iter().map(|p| (z - p).norm()).fold(f64::INFINITY, f64::min);
            let lhs = (a.apply(z) - b.apply(z)).norm();
            let rhs = if psi_v.is_infinite() && lhs > eps * diam {
                f64::INFINITY // Ψ(V)=∞: the bound is vacuous
            } else {
                eps * (diam
                    + 4.0 * (n as f64).powf((n as f64 + 1.0) / 2.0) / factorial(n)
                        * psi_v
                        * dist_zv)
            };
            Ok(IneqReport::new(
                IneqKind::AbBound,
                lhs,
                rhs,
                format!("|V|={} eps={eps:.3e}", v.len()),
            ))
        }
        IneqCheck::Holder {
            fam,
            f,
            x0,
            r0,
            xi,
            yi,
            eps,
        } => {
            let sqrt2m1 = 2f64.sqrt() - 1.0;
            if *eps >= sqrt2m1 {
                return Err(FlatextError::HypothesisViolated(format!(
                    "holder requires eps < √2−1, got {eps}"
                )));
            }
            let theta = 1.0 - 2.0 * (1.0 + eps).log2();
            let x0p = &fam.base_points[*x0];
            let (x, y) = (&f.domain.points[*xi], &f.domain.points[*yi]);
            if (x - x0p).norm() > r0 / 2.0 || (y - x0p).norm() > r0 / 2.0 {
                return Err(FlatextError::HypothesisViolated(
                    "sample pair must lie in B(x0, r0/2)".into(),
                ));
            }
            let d = (x - y).norm();
            let lhs = (&f.image[*xi] - &f.image[*yi]).norm();
            let a0 = fam.map(*x0, fam.nearest_scale_index(*r0));
            let rhs = if d == 0.0 {
                // Coincident points: any nonnegative bound works.
                lhs
            } else {
                4.0 / (theta * 2f64.ln())
                    * (d / r0).powf((1.0 - eps) * theta)
                    * a0.operator_norm()
                    * r0
            };
            Ok(IneqReport::new(
                IneqKind::Holder,
                lhs,
                rhs,
                format!("pair ({xi},{yi}) about base {x0}"),
            ))
        }
        IneqCheck::Inradius {
            f,
            a,
            x_index,
            r,
            boundary,
            eps,
            h,
            t,
        } => {
            if *h * (*t + 2.0 * eps) > 1.0 {
                return Err(FlatextError::HypothesisViolated("H(t+2ε) ≤ 1 fails".into()));
            }
            let sv = crate::geometry::singular_values(a);
            let (l1, ln) = (sv[0], *sv.last().unwrap());
            if ln > h * l1 * (1.0 + 1e-12) {
                return Err(FlatextError::HypothesisViolated(format!(
                    "λₙ ≤ Hλ₁ fails: {ln:.3e} > {h}·{l1:.3e}"
                )));
            }
            let x = &f.domain.points[*x_index];
            let fx = &f.image[*x_index];
            // Hypothesis: (f, B, A) is ε-almost affine for this single map.
            let prox = f
                .domain
                .points
                .iter()
                .zip(&f.image)
                .filter(|(z, _)| (*z - x).norm() <= *r)
                .map(|(z, fz)| (fz - a.apply(z)).norm())
                .fold(0.0, f64::max);
            if prox > eps * ln * r * (1.0 + 1e-9) {
                return Err(FlatextError::HypothesisViolated(format!(
                    "proximity {prox:.3e} exceeds ε‖A′‖r = {:.3e}",
                    eps * ln * r
                )));
            }
            let nrm_r = ln * r;
            // diam f(B) over the samples.
            let in_ball: Vec<usize> = f
                .domain
                .points
                .iter()
                .enumerate()
                .filter(|(_, z)| (*z - x).norm() <= *r)
                .map(|(i, _)| i)
                .collect();
            let mut diam_fb = 0.0f64;
            for p in 0..in_ball.len() {
                for q in (p + 1)..in_ball.len() {
                    diam_fb = diam_fb.max((&f.image[in_ball[p]] - &f.image[in_ball[q]]).norm());
                }
            }
            let mut worst = IneqReport::new(
                IneqKind::Inradius,
                nrm_r,
                diam_fb,
                "diam lower: ‖A′‖r ≤ diam f(B)".into(),
            );
            let mut consider = |lhs: f64, rhs: f64, tag: &str| {
                let rep = IneqReport::new(IneqKind::Inradius, lhs, rhs, tag.into());
                if rep.slack < worst.slack {
                    worst = rep;
                }
            };
            consider(diam_fb, 3.0 * nrm_r, "diam upper: diam f(B) ≤ 3‖A′‖r");
            for &bi in boundary.iter() {
                let dev = (&f.image[bi] - fx).norm();
                consider(t * nrm_r, dev, "boundary lower: t‖A′‖r ≤ |f(x)−f(y)|");
                consider(dev, 2.0 * nrm_r, "boundary upper: |f(x)−f(y)| ≤ 2‖A′‖r");
            }
            // Local flatness of the sampled image at scale diam f(B)/(3H),
            // with the analytically known plane as a candidate.
            let image_set = crate::geometry::SampledSet::from_points(
                in_ball.iter().map(|&i| f.image[i].clone()).collect(),
            );
            let n_dom = x.len();
            let frame: Vec<Point> = (0..n_dom).map(|i| a.linear.column(i).into_owned()).collect();
            if let Some(plane) = crate::geometry::Plane::new(fx.clone(), frame) {
                let scale = diam_fb / (3.0 * h);
                if scale > 0.0 {
                    let opts = crate::flatness::ThetaOpts {
                        grid_rel: 1.0 / 64.0,
                        refine: false,
                        extra_candidates: vec![plane],
                    };
                    let th =
                        crate::flatness::theta_with_opts(&image_set, fx, scale, n_dom, &opts)?;
                    consider(th, 6.0 * eps * h, "flatness: θ ≤ 6εH");
                }
            }
            Ok(worst)
        }
    }
}

/// Deterministic generator of provably ε-compatible families with an
/// accompanying almost-affine map.
///
/// A smooth low-frequency field drives the deviation from one affine seed:
/// the linear parts move by at most ε/4 per unit log-scale step and by at
/// most ε/4 across the spatial extent, so every qualifying pair satisfies
/// the compatibility bound by the triangle inequality; the value at each
/// base point drifts from the seed map by at most (ε/4)·‖A′‖·r.  The
/// constants are re-verified by measurement in the callers.
pub struct FamilySpec {
    pub n: usize,
    pub big_n: usize,
    pub eps: f64,
    /// Scale the perturbation down (1.0 = full ε/4 steps); used to generate
    /// near-conformal families where λₙ/λ₁ must stay below a target.
    pub conformal_bias: f64,
}

pub fn random_compatible_family(
    rng: &mut ChaCha8Rng,
    spec: &FamilySpec,
    base_points: Vec<Point>,
    r_min: f64,
    levels: usize,
) -> (AffineFamily, SampledMap) {
    let (n, big_n, eps) = (spec.n, spec.big_n, spec.eps);
    let r_max = r_min * 2f64.powi(levels as i32 - 1);
    // Seed: scaled isometric embedding plus a shift.
    let scale0 = rng.gen_range(0.5..2.0);
    let mut seed_linear = DMatrix::zeros(big_n, n);
    {
        // Random orthonormal columns via Gram–Schmidt on a random matrix.
        let raw = DMatrix::from_fn(big_n, n, |_, _| rng.gen_range(-1.0..1.0f64));
        let mut cols: Vec<DVector<f64>> = Vec::new();
        for c in 0..n {
            let mut v = raw.column(c).into_owned();
            for u in &cols {
                let t = v.dot(u);
                v -= u * t;
            }
            let v = v.normalize();
            cols.push(v.clone());
            seed_linear.set_column(c, &v);
        }
        seed_linear *= scale0;
    }
    let seed_shift = DVector::from_fn(big_n, |_, _| rng.gen_range(-1.0..1.0));
    let a0 = AffineMap::new(seed_linear, seed_shift);
    let norm0 = a0.operator_norm();

    let amp = eps / 4.0 * spec.conformal_bias;
    let mut g1 = DMatrix::from_fn(big_n, n, |_, _| rng.gen_range(-1.0..1.0f64));
    let mut g2 = DMatrix::from_fn(big_n, n, |_, _| rng.gen_range(-1.0..1.0f64));
    g1 /= g1.norm().max(1e-300);
    g2 /= g2.norm().max(1e-300);
    let u_dir = DVector::from_fn(n, |_, _| rng.gen_range(-1.0f64..1.0)).normalize();
    let w_dir = DVector::from_fn(big_n, |_, _| rng.gen_range(-1.0f64..1.0)).normalize();
    let (p1, p2, p3) = (
        rng.gen_range(0.0..std::f64::consts::TAU),
        rng.gen_range(0.0..std::f64::consts::TAU),
        rng.gen_range(0.0..std::f64::consts::TAU),
    );

    let mut maps = Vec::with_capacity(base_points.len() * levels);
    for x in &base_points {
        for k in 0..levels {
            let r = r_min * 2f64.powi(k as i32);
            // Lipschitz-1 coefficients in log-scale and in x/r_max.
            let c1 = (0.9 * k as f64 + p1).sin();
            let c2 = (u_dir.dot(x) / r_max + p2).sin();
            let linear = &a0.linear + (&g1 * (amp * norm0 * c1)) + (&g2 * (amp * norm0 * c2));
            let c3 = (0.7 * k as f64 + 1.3 * u_dir.dot(x) / r_max + p3).sin();
            // Value at the base point drifts by ≤ (ε/4)·‖A′‖·r.
            let target = a0.apply(x) + &w_dir * (amp * norm0 * r * c3);
            let shift = target - &linear * x;
            maps.push(AffineMap::new(linear, shift));
        }
    }
    let fam = AffineFamily::new(base_points.clone(), r_min, levels, maps, eps);
    // The accompanying almost-affine map: the seed restricted to the bases.
    let image: Vec<Point> = base_points.iter().map(|x| a0.apply(x)).collect();
    let f = SampledMap::new(
        crate::geometry::SampledSet::from_points(base_points),
        image,
        format!("compatible-family-seed eps={eps}"),
    );
    (fam, f)
}

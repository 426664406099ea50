//! Whitney cubes over the complement of a sampled set, a smooth partition of
//! unity subordinate to the doubled cubes, the induced extension F of an
//! almost affine map (with analytic first and second derivatives), the
//! extended affine family, and measurement of the extension constants.
//!
//! The ambient region is a finite axis-aligned cube; dyadic subdivision stops
//! at a resolution floor, and the uncovered band around the sampled set (the
//! "collar") is flagged rather than extrapolated, because finite samples
//! cannot support the infinite Whitney tail.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{FlatextError, Result};
use crate::families::{check_almost_affine, AffineFamily};
use crate::geometry::{AffineMap, Point, SampledSet};
use crate::quasisymmetry::{weak_qs_constant, SampledMap};

/// One accepted dyadic cube: 3Q misses E while the parent's 3Q does not.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WhitneyCube {
    /// Lower corner in ambient coordinates.
    pub corner: Point,
    pub side: f64,
    /// Dyadic depth below the ambient box (side = box_side / 2^level).
    pub level: u32,
    /// Integer grid cell at this level, measured from the box corner.
    pub cell: Vec<i64>,
    /// Point of Q closest to E (exact for a finite sample: the clamp of the
    /// best sample point into Q).
    pub w_q: Point,
    /// Index into E of the sample nearest to w_Q (ties to lowest index).
    pub z_q: usize,
    /// diam Q = side·√n.
    pub r_q: f64,
}

impl WhitneyCube {
    pub fn center(&self) -> Point {
        self.corner.map(|c| c) + DVector::from_element(self.corner.len(), self.side / 2.0)
    }

    /// Is x in the closed concentric dilate λQ?
    pub fn contains_dilated(&self, x: &Point, lambda: f64) -> bool {
        let c = self.center();
        (0..x.len()).all(|i| (x[i] - c[i]).abs() <= lambda * self.side / 2.0)
    }
}

/// Maximal dyadic cubes Q with 3Q ∩ E = ∅ inside an ambient box, down to a
/// resolution floor.
#[derive(Debug, Clone)]
pub struct WhitneyDecomposition {
    pub cubes: Vec<WhitneyCube>,
    pub min_level: u32,
    pub box_corner: Point,
    pub box_side: f64,
    pub n: usize,
    /// Sampling resolution of E at build time, recorded because every
    /// distance below it is a discretization artifact.
    pub resolution: f64,
    /// (level, cell) → cube index, for O(3ⁿ·levels) point queries.
    index: HashMap<(u32, Vec<i64>), usize>,
    levels_present: Vec<u32>,
}

/// Measured Whitney geometry: the classical cube–distance comparisons, the
/// neighbor size ratio, and the bounded-overlap count.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WhitneyGeometryReport {
    /// min over cubes Q, test points x ∈ Q of d(x)/diam Q (≥ 1/√n).
    pub min_d_over_diam_in_q: f64,
    /// max of the same ratio (≤ 4).
    pub max_d_over_diam_in_q: f64,
    /// min over y ∈ 2Q of d(y)/diam Q (≥ 1/(2√n)).
    pub min_d_over_diam_in_2q: f64,
    /// max of the same ratio (≤ 9/2).
    pub max_d_over_diam_in_2q: f64,
    /// max over touching pairs (2Q∩2R ≠ ∅) of diam R / diam Q (≤ 9√n).
    pub max_neighbor_ratio: f64,
    /// max over probe points of Σ_Q χ_{2Q}(x).
    pub max_overlap: usize,
}

impl WhitneyDecomposition {
    /// Indices of cubes whose closed 2Q contains x.
    pub fn cubes_covering_2q(&self, x: &Point) -> Vec<usize> {
        let mut out = Vec::new();
        for &level in &self.levels_present {
            let side = self.box_side / 2f64.powi(level as i32);
            let cell: Vec<i64> = (0..self.n)
                .map(|i| ((x[i] - self.box_corner[i]) / side).floor() as i64)
                .collect();
            // 2Q reaches half a side beyond Q, so candidates sit within
            // Chebyshev distance 1 of x's cell at this level.
            let mut offsets = vec![0i64; self.n];
            loop {
                let key: Vec<i64> = cell.iter().zip(&offsets).map(|(c, o)| c + o).collect();
                if let Some(&ci) = self.index.get(&(level, key)) {
                    if self.cubes[ci].contains_dilated(x, 2.0) {
                        out.push(ci);
                    }
                }
                // Advance the {-1,0,1}ⁿ counter.
                let mut carry = true;
                for o in offsets.iter_mut() {
                    if carry {
                        *o += 1;
                        if *o > 1 {
                            *o = -1;
                        } else {
                            carry = false;
                        }
                    }
                }
                if carry {
                    break;
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Is x inside some accepted cube (i.e. off the collar and inside the
    /// covered part of the box)?
    pub fn covered(&self, x: &Point) -> bool {
        for &level in &self.levels_present {
            let side = self.box_side / 2f64.powi(level as i32);
            let cell: Vec<i64> = (0..self.n)
                .map(|i| ((x[i] - self.box_corner[i]) / side).floor() as i64)
                .collect();
            if self.index.contains_key(&(level, cell)) {
                return true;
            }
        }
        false
    }

    /// Measure the classical Whitney comparisons against the sampled set the
    /// decomposition was built from, over per-cube vertex grids and random
    /// overlap probes.
    pub fn verify_geometry(&self, e: &SampledSet, overlap_probes: &[Point]) -> WhitneyGeometryReport {
        let mut rep = WhitneyGeometryReport {
            min_d_over_diam_in_q: f64::INFINITY,
            max_d_over_diam_in_q: 0.0,
            min_d_over_diam_in_2q: f64::INFINITY,
            max_d_over_diam_in_2q: 0.0,
            max_neighbor_ratio: 0.0,
            max_overlap: 0,
        };
        let grid = |q: &WhitneyCube, lambda: f64| -> Vec<Point> {
            // 3-per-axis vertex grid of λQ.
            let c = q.center();
            let mut pts = vec![];
            let mut idx = vec![0usize; self.n];
            loop {
                let p = DVector::from_fn(self.n, |i, _| {
                    c[i] + (idx[i] as f64 - 1.0) * lambda * q.side / 2.0
                });
                pts.push(p);
                let mut carry = true;
                for v in idx.iter_mut() {
                    if carry {
                        *v += 1;
                        if *v > 2 {
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
        };
        for q in &self.cubes {
            for x in grid(q, 1.0) {
                let ratio = e.distance_to(&x).0 / q.r_q;
                rep.min_d_over_diam_in_q = rep.min_d_over_diam_in_q.min(ratio);
                rep.max_d_over_diam_in_q = rep.max_d_over_diam_in_q.max(ratio);
            }
            for y in grid(q, 2.0) {
                let ratio = e.distance_to(&y).0 / q.r_q;
                rep.min_d_over_diam_in_2q = rep.min_d_over_diam_in_2q.min(ratio);
                rep.max_d_over_diam_in_2q = rep.max_d_over_diam_in_2q.max(ratio);
            }
        }
        for (i, q) in self.cubes.iter().enumerate() {
            for (j, r) in self.cubes.iter().enumerate() {
                if i == j {
                    continue;
                }
                // 2Q ∩ 2R ≠ ∅ iff centers are within (side_Q+side_R) in ∞-norm.
                let (cq, cr) = (q.center(), r.center());
                let touching = (0..self.n)
                    .all(|k| (cq[k] - cr[k]).abs() <= q.side + r.side);
                if touching {
                    rep.max_neighbor_ratio = rep.max_neighbor_ratio.max(r.r_q / q.r_q);
                }
            }
        }
        for x in overlap_probes {
            rep.max_overlap = rep.max_overlap.max(self.cubes_covering_2q(x).len());
        }
        rep
    }
}

/// Build the maximal dyadic cubes Q ⊂ box with 3Q ∩ E = ∅ (interior
/// dilation: a sample on ∂(3Q) does not block acceptance), stopping at
/// `min_level`; cubes that would need to subdivide deeper form the collar
/// and are omitted.
pub fn whitney_decompose(
    e: &SampledSet,
    box_corner: &Point,
    box_side: f64,
    min_level: u32,
) -> Result<WhitneyDecomposition> {
    let n = box_corner.len();
    assert!(box_side > 0.0);
    for p in &e.points {
        if (0..n).any(|i| p[i] < box_corner[i] || p[i] > box_corner[i] + box_side) {
            return Err(FlatextError::DomainError(
                "sampled set must lie inside the ambient box".into(),
            ));
        }
    }
    let res = e.resolution();
    let finest = box_side / 2f64.powi(min_level as i32);
    if res.is_finite() && res >= finest {
        return Err(FlatextError::ResolutionTooCoarse(format!(
            "sampling resolution {res:.3e} ≥ finest cube side {finest:.3e}; \
             cubes below the sampling scale would resolve artificial holes"
        )));
    }
    let mut cubes = Vec::new();
    // Depth-first subdivision; a cube is visited only if its parent's 3Q
    // meets E, so acceptance here is maximality.
    let mut stack: Vec<(u32, Vec<i64>)> = vec![(0, vec![0; n])];
    while let Some((level, cell)) = stack.pop() {
        let side = box_side / 2f64.powi(level as i32);
        let corner = DVector::from_fn(n, |i, _| box_corner[i] + cell[i] as f64 * side);
        let center = corner.map(|c| c) + DVector::from_element(n, side / 2.0);
        // Open 3Q: strict inequality on each axis.
        let hit = e
            .points
            .iter()
            .any(|p| (0..n).all(|i| (p[i] - center[i]).abs() < 1.5 * side));
        if !hit {
            // Exact nearest point of Q to E over a finite sample: clamp each
            // sample into Q and take the closest.
            let mut best = (f64::INFINITY, DVector::zeros(n));
            for p in &e.points {
                let clamped = DVector::from_fn(n, |i, _| p[i].clamp(corner[i], corner[i] + side));
                let d = (p - &clamped).norm();
                if d < best.0 {
                    best = (d, clamped);
                }
            }
            let w_q = best.1;
            let z_q = e.distance_to(&w_q).1;
            cubes.push(WhitneyCube {
                corner,
                side,
                level,
                cell,
                w_q,
                z_q,
                r_q: side * (n as f64).sqrt(),
            });
        } else if level < min_level {
            for child in 0..(1usize << n) {
                let ccell: Vec<i64> = (0..n)
                    .map(|i| 2 * cell[i] + ((child >> i) & 1) as i64)
                    .collect();
                stack.push((level + 1, ccell));
            }
        }
        // level == min_level and hit: collar, omitted.
    }
    cubes.sort_by(|a, b| (a.level, a.cell.clone()).cmp(&(b.level, b.cell.clone())));
    let index = cubes
        .iter()
        .enumerate()
        .map(|(i, q)| ((q.level, q.cell.clone()), i))
        .collect();
    let mut levels_present: Vec<u32> = cubes.iter().map(|q| q.level).collect();
    levels_present.sort_unstable();
    levels_present.dedup();
    Ok(WhitneyDecomposition {
        cubes,
        min_level,
        box_corner: box_corner.clone(),
        box_side,
        n,
        resolution: res,
        index,
        levels_present,
    })
}

/// β(t) = exp(−1/(1−t²)) on (−1,1); returns (β, β′, β″).
fn bump(t: f64) -> (f64, f64, f64) {
    if t.abs() >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let s = 1.0 - t * t;
    let v = (-1.0 / s).exp();
    let up = -2.0 * t / (s * s);
    let upp = -2.0 / (s * s) - 8.0 * t * t / (s * s * s);
    (v, v * up, v * (upp + up * up))
}

/// Value, gradient, and Hessian of one φ_Q's *unnormalized* bump at x.
fn tensor_bump(q: &WhitneyCube, x: &Point) -> (f64, DVector<f64>, DMatrix<f64>) {
    let n = x.len();
    let c = q.center();
    let h = q.side; // 2Q half-width, so t_i ∈ (−1,1) exactly on 2Q
    let parts: Vec<(f64, f64, f64)> = (0..n).map(|i| bump((x[i] - c[i]) / h)).collect();
    let prod_except = |skip: &[usize]| -> f64 {
        (0..n)
            .filter(|i| !skip.contains(i))
            .map(|i| parts[i].0)
            .product()
    };
    let b = prod_except(&[]);
    let db = DVector::from_fn(n, |i, _| parts[i].1 / h * prod_except(&[i]));
    let d2b = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            parts[i].2 / (h * h) * prod_except(&[i])
        } else {
            parts[i].1 * parts[j].1 / (h * h) * prod_except(&[i, j])
        }
    });
    (b, db, d2b)
}

/// Per-cube value and derivatives of the normalized partition functions at a
/// single point.
#[derive(Debug, Clone)]
pub struct PouTerm {
    pub cube: usize,
    pub phi: f64,
    pub dphi: DVector<f64>,
    pub d2phi: DMatrix<f64>,
}

/// Smooth partition of unity subordinate to {2Q}: tensor-product C^∞ bumps
/// scaled to 2Q, normalized by the local sum, so Σφ_Q ≡ 1 and every
/// derivative sum vanishes identically on the covered region.
#[derive(Debug, Clone)]
pub struct PartitionOfUnity {
    pub w: WhitneyDecomposition,
}

impl PartitionOfUnity {
    pub fn new(w: &WhitneyDecomposition) -> Self {
        Self { w: w.clone() }
    }

    /// All nonzero φ_Q with analytic gradient and Hessian; `None` on the
    /// collar / outside coverage (where the local sum vanishes).
    pub fn eval(&self, x: &Point) -> Option<Vec<PouTerm>> {
        let active = self.w.cubes_covering_2q(x);
        if active.is_empty() {
            return None;
        }
        let n = x.len();
        let raw: Vec<(usize, f64, DVector<f64>, DMatrix<f64>)> = active
            .iter()
            .map(|&ci| {
                let (b, db, d2b) = tensor_bump(&self.w.cubes[ci], x);
                (ci, b, db, d2b)
            })
            .collect();
        let s: f64 = raw.iter().map(|t| t.1).sum();
        if !(s > 1e-300) {
            return None;
        }
        let ds: DVector<f64> = raw.iter().fold(DVector::zeros(n), |acc, t| acc + &t.2);
        let d2s: DMatrix<f64> = raw.iter().fold(DMatrix::zeros(n, n), |acc, t| acc + &t.3);
        Some(
            raw.into_iter()
                .map(|(ci, b, db, d2b)| {
                    let phi = b / s;
                    let dphi = &db / s - &ds * (b / (s * s));
                    let d2phi = &d2b / s
                        - (&db * ds.transpose() + &ds * db.transpose()) / (s * s)
                        - &d2s * (b / (s * s))
                        + (&ds * ds.transpose()) * (2.0 * b / (s * s * s));
                    PouTerm {
                        cube: ci,
                        phi,
                        dphi,
                        d2phi,
                    }
                })
                .collect(),
        )
    }
}

/// Value of the extension at a point, with the collar flag.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtensionValue {
    pub value: Point,
    /// True when the point sits below the sampling resolution (on the collar
    /// or outside coverage) and the value is the nearest-sample fallback.
    pub collar: bool,
}

/// The Whitney extension F of f: evaluates F, DF, D²F and builds the
/// extended affine family.
pub struct ExtensionEvaluator {
    pub e: SampledSet,
    pub f_image: Vec<Point>,
    pub fam: AffineFamily,
    pub pou: PartitionOfUnity,
    /// A_Q = A at (z_Q, r_Q), one per cube.
    pub a_q: Vec<AffineMap>,
    /// Measured almost-affinity constant of the input triple.
    pub eps: f64,
}

/// Assemble the extension: measure ε of (f, E, 𝒜), resolve A_Q for every
/// cube by nearest-grid lookup, and return the evaluator.
pub fn extend_map(
    f: &SampledMap,
    fam: &AffineFamily,
    w: &WhitneyDecomposition,
) -> Result<ExtensionEvaluator> {
    let eps = check_almost_affine(f, fam)?;
    let limit = 2f64.sqrt() - 1.0;
    if eps >= limit {
        return Err(FlatextError::EpsilonTooLarge { eps, limit });
    }
    let mut a_q = Vec::with_capacity(w.cubes.len());
    for q in &w.cubes {
        if q.r_q > 2.0 * fam.r_max() || q.r_q < fam.r_min() / 2.0 {
            return Err(FlatextError::UnresolvableCube(format!(
                "cube diameter {:.3e} outside family grid [{:.3e}, {:.3e}]",
                q.r_q,
                fam.r_min(),
                fam.r_max()
            )));
        }
        let base = fam.nearest_base_index(&f.domain.points[q.z_q]);
        a_q.push(fam.map(base, fam.nearest_scale_index(q.r_q)).clone());
    }
    Ok(ExtensionEvaluator {
        e: f.domain.clone(),
        f_image: f.image.clone(),
        fam: fam.clone(),
        pou: PartitionOfUnity::new(w),
        a_q,
        eps,
    })
}

impl ExtensionEvaluator {
    /// d(x) = dist(x, E) and the nearest sample index.
    pub fn dist(&self, x: &Point) -> (f64, usize) {
        self.e.distance_to(x)
    }

    /// F(x): f on E, Σφ_Q·A_Q off E, nearest-sample fallback on the collar.
    pub fn eval(&self, x: &Point) -> ExtensionValue {
        let (d, nearest) = self.dist(x);
        if d <= 1e-12 {
            return ExtensionValue {
                value: self.f_image[nearest].clone(),
                collar: false,
            };
        }
        match self.pou.eval(x) {
            Some(terms) => {
                let big_n = self.f_image[0].len();
                let mut val = DVector::zeros(big_n);
                for t in &terms {
                    val += self.a_q[t.cube].apply(x) * t.phi;
                }
                ExtensionValue {
                    value: val,
                    collar: false,
                }
            }
            None => ExtensionValue {
                value: self.f_image[nearest].clone(),
                collar: true,
            },
        }
    }

    /// DF(x) = Σ A_Q(x)⊗Dφ_Q + φ_Q·A′_Q (analytic); fails on E and on the
    /// collar where the Whitney sum is unavailable.
    pub fn jacobian(&self, x: &Point) -> Result<DMatrix<f64>> {
        let (d, _) = self.dist(x);
        let terms = if d <= 1e-12 { None } else { self.pou.eval(x) };
        let terms = terms.ok_or(FlatextError::CollarViolation(d))?;
        let n = x.len();
        let big_n = self.f_image[0].len();
        let mut df = DMatrix::zeros(big_n, n);
        for t in &terms {
            let aq = &self.a_q[t.cube];
            df += aq.apply(x) * t.dphi.transpose() + &aq.linear * t.phi;
        }
        Ok(df)
    }

    /// D²F(x) = Σ 2·sym(A′_Q⊗Dφ_Q) + A_Q(x)⊗D²φ_Q, returned as one n×n
    /// Hessian per output coordinate.
    pub fn hessian(&self, x: &Point) -> Result<Vec<DMatrix<f64>>> {
        let (d, _) = self.dist(x);
        let terms = if d <= 1e-12 { None } else { self.pou.eval(x) };
        let terms = terms.ok_or(FlatextError::CollarViolation(d))?;
        let n = x.len();
        let big_n = self.f_image[0].len();
        let mut hess = vec![DMatrix::zeros(n, n); big_n];
        for t in &terms {
            let aq = &self.a_q[t.cube];
            let val = aq.apply(x);
            for i in 0..big_n {
                for j in 0..n {
                    for k in 0..n {
                        hess[i][(j, k)] += aq.linear[(i, j)] * t.dphi[k]
                            + aq.linear[(i, k)] * t.dphi[j]
                            + val[i] * t.d2phi[(j, k)];
                    }
                }
            }
        }
        Ok(hess)
    }

    /// The extended family on the given base points: rows over E are copied
    /// from the input family; off E, the first-order Taylor map of F for
    /// r < d(x)/2 (scale-independent) and the nearest-sample row otherwise.
    pub fn extend_family(
        &self,
        bases: &[Point],
        r_min: f64,
        levels: usize,
    ) -> Result<AffineFamily> {
        let mut maps = Vec::with_capacity(bases.len() * levels);
        for x in bases {
            let (d, nearest) = self.dist(x);
            let on_e = d <= 1e-9;
            // Taylor data computed once per base; only consulted off E.
            let taylor = if on_e {
                None
            } else {
                let fx = self.eval(x);
                if fx.collar {
                    None
                } else {
                    Some((fx.value, self.jacobian(x)?))
                }
            };
            for k in 0..levels {
                let r = r_min * 2f64.powi(k as i32);
                if on_e {
                    maps.push(self.fam.lookup(x, r).clone());
                } else if r >= d / 2.0 {
                    maps.push(self.fam.lookup(&self.e.points[nearest], r).clone());
                } else {
                    let (fx, df) = taylor
                        .as_ref()
                        .ok_or(FlatextError::CollarViolation(d))?;
                    let shift = fx - df * x;
                    maps.push(AffineMap::new(df.clone(), shift));
                }
            }
        }
        Ok(AffineFamily::new(
            bases.to_vec(),
            r_min,
            levels,
            maps,
            self.eps,
        ))
    }
}

/// Probe layout for `measure_extension_theorems`.
pub struct ProbeConfig {
    /// Base points of the extended family (typically E samples plus off-E
    /// grid points inside coverage).
    pub plus_bases: Vec<Point>,
    pub r_min: f64,
    pub levels: usize,
    /// Dense evaluation grid for F (collar-flagged points are dropped).
    pub dense_grid: Vec<Point>,
    /// Indices into `dense_grid` used as centers of the image-side Dini
    /// integrals.
    pub dini_centers: Vec<usize>,
    pub dini_rmax: f64,
    pub grid_per_decade: usize,
    pub dini_r_lo: f64,
}

/// Measured extension constants, each normalized by the input ε where the
/// theorems predict linear dependence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtensionReport {
    /// Measured ε of the input triple.
    pub eps: f64,
    /// check_compatible(extended family) / ε.
    pub c_compat: f64,
    /// check_almost_affine(F, extended family) / ε.
    pub c_aa: f64,
    /// Weak quasisymmetry constant of F on the probe grid.
    pub h_f: f64,
    /// max over probe centers of ∫ β²(F-image) dr/r.
    pub dini_beta_max: f64,
}

/// Evaluate F over the probe grids and measure the extension constants: the
/// compatibility and almost-affinity constants of the extended family (per
/// ε), the weak quasisymmetry constant of F, and the worst image-side Dini
/// flatness integral.
pub fn measure_extension_theorems(
    ev: &ExtensionEvaluator,
    cfg: &ProbeConfig,
) -> Result<ExtensionReport> {
    let eps = ev.eps.max(1e-15);
    let a_plus = ev.extend_family(&cfg.plus_bases, cfg.r_min, cfg.levels)?;
    let c_compat = crate::families::check_compatible(&a_plus)?.0 / eps;

    // F over E samples plus the unflagged dense grid.
    let mut dom = ev.e.points.clone();
    let mut img = ev.f_image.clone();
    let mut dense_pos: Vec<Option<usize>> = Vec::with_capacity(cfg.dense_grid.len());
    for x in &cfg.dense_grid {
        if ev.dist(x).0 <= 1e-12 {
            dense_pos.push(None); // already present as an E sample
            continue;
        }
        let fx = ev.eval(x);
        if fx.collar {
            dense_pos.push(None);
        } else {
            dense_pos.push(Some(dom.len()));
            dom.push(x.clone());
            img.push(fx.value);
        }
    }
    let f_plus = SampledMap::new(SampledSet::from_points(dom), img, "whitney-extension");
    let c_aa = crate::families::proximity_constant(&f_plus, &a_plus)?.max(c_compat * eps) / eps;

    let all: Vec<usize> = (0..f_plus.domain.points.len()).collect();
    let h_f = weak_qs_constant(&f_plus, &all)?.h;

    let image_set = SampledSet::from_points(f_plus.image.clone());
    let mut dini_beta_max = 0.0f64;
    for &ci in &cfg.dini_centers {
        if let Some(pos) = dense_pos.get(ci).copied().flatten() {
            let center = &f_plus.image[pos];
            let val = crate::flatness::dini_beta_integral(
                &image_set,
                center,
                cfg.dini_rmax,
                ev.e.points[0].len(),
                cfg.grid_per_decade,
                cfg.dini_r_lo,
            )?;
            dini_beta_max = dini_beta_max.max(val);
        }
    }
    Ok(ExtensionReport {
        eps: ev.eps,
        c_compat,
        c_aa,
        h_f,
        dini_beta_max,
    })
}

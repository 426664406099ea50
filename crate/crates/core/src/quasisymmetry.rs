//! Weak quasisymmetry constants of sampled maps, Dini and Carleson
//! distortion functionals, and similarity approximation.
//!
//! The weak constant H_f(X) is the least H such that |x−a| ≤ |y−a| forces
//! |f(x)−f(a)| ≤ H·|f(y)−f(a)| on X; we compute it exactly on the sample by
//! O(|X|³) triple enumeration, capped at 400 points per query by
//! deterministic farthest-point subsampling.

use serde::{Deserialize, Serialize};

use crate::error::{FlatextError, Result};
use crate::geometry::{AffineMap, Point, SampledSet};
use nalgebra::{DMatrix, DVector};

/// Hard cap on triple enumeration per ball.
pub const TRIPLE_CAP: usize = 400;

/// A map f evaluated on a sampled domain: `image[i] = f(domain.points[i])`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampledMap {
    pub domain: SampledSet,
    pub image: Vec<Point>,
    /// Generator tag + parameters, carried through to reports.
    pub meta: String,
}

impl SampledMap {
    pub fn new(domain: SampledSet, image: Vec<Point>, meta: impl Into<String>) -> Self {
        assert_eq!(domain.points.len(), image.len(), "domain/image length mismatch");
        Self {
            domain,
            image,
            meta: meta.into(),
        }
    }
}

/// Weak quasisymmetry measurement over a sample subset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistortionReport {
    /// Weak quasisymmetry constant, ≥ 1.
    pub h: f64,
    /// H − 1.
    pub htilde: f64,
    /// Sample indices (x, y, a) realizing H.
    pub witness: (usize, usize, usize),
    /// Number of points actually enumerated (less than the request when the
    /// farthest-point cap kicked in).
    pub used: usize,
    /// Dini integral, when computed.
    pub dini: Option<f64>,
    /// Carleson sum, when computed.
    pub carleson: Option<f64>,
}

/// Deterministic farthest-point subsample of `indices`, at most `cap` long.
///
/// Starts from the lowest index and greedily adds the sample farthest from
/// the chosen set (ties to the lowest index).
pub fn farthest_point_subsample(points: &[Point], indices: &[usize], cap: usize) -> Vec<usize> {
    if indices.len() <= cap {
        return indices.to_vec();
    }
    let mut chosen = vec![indices[0]];
    let mut dist: Vec<f64> = indices
        .iter()
        .map(|&i| (&points[i] - &points[indices[0]]).norm())
        .collect();
    while chosen.len() < cap {
        let mut best = (0usize, -1.0f64);
        for k in 0..indices.len() {
            if dist[k] > best.1 {
                best = (k, dist[k]);
            }
        }
        let next = indices[best.0];
        chosen.push(next);
        for (k, &i) in indices.iter().enumerate() {
            dist[k] = dist[k].min((&points[i] - &points[next]).norm());
        }
    }
    chosen.sort_unstable();
    chosen
}

/// Weak quasisymmetry constant of f over the sample subset `x_indices`.
///
/// Exact triple enumeration on the (possibly capped) subset; H is floored at
/// 1.  Triples with f(y) = f(a) and f(x) = f(a) are skipped (0/0 carries no
/// information); f(y) = f(a) with f(x) ≠ f(a) under the constraint means H
/// is infinite and surfaces as `NotInjective`.
pub fn weak_qs_constant(f: &SampledMap, x_indices: &[usize]) -> Result<DistortionReport> {
    if x_indices.len() < 3 {
        return Err(FlatextError::DomainError(
            "weak_qs_constant needs at least 3 samples".into(),
        ));
    }
    let idx = farthest_point_subsample(&f.domain.points, x_indices, TRIPLE_CAP);
    let m = idx.len();
    // Precompute pairwise distances in domain and image.
    let mut dd = vec![0.0f64; m * m];
    let mut di = vec![0.0f64; m * m];
    for p in 0..m {
        for q in (p + 1)..m {
            let a = (&f.domain.points[idx[p]] - &f.domain.points[idx[q]]).norm();
            let b = (&f.image[idx[p]] - &f.image[idx[q]]).norm();
            dd[p * m + q] = a;
            dd[q * m + p] = a;
            di[p * m + q] = b;
            di[q * m + p] = b;
        }
    }
    let mut h = 1.0f64;
    let mut witness = (idx[0], idx[1], idx[2]);
    for a in 0..m {
        for x in 0..m {
            if x == a {
                continue;
            }
            let dxa = dd[x * m + a];
            let ixa = di[x * m + a];
            for y in 0..m {
                if y == a || y == x {
                    continue;
                }
                if dxa <= dd[y * m + a] {
                    let iya = di[y * m + a];
                    if iya <= 1e-12 * (1.0 + ixa) {
                        if ixa > 1e-12 {
                            return Err(FlatextError::NotInjective(idx[y], idx[a]));
                        }
                        continue; // 0/0 contributes nothing
                    }
                    let ratio = ixa / iya;
                    if ratio > h {
                        h = ratio;
                        witness = (idx[x], idx[y], idx[a]);
                    }
                }
            }
        }
    }
    Ok(DistortionReport {
        h,
        htilde: h - 1.0,
        witness,
        used: m,
        dini: None,
        carleson: None,
    })
}

/// H̃_f over the samples inside the closed ball B(y, s); 0 when fewer than 3
/// samples fall in the ball.
pub fn htilde_in_ball(f: &SampledMap, y: &Point, s: f64) -> Result<f64> {
    let idx = f.domain.indices_in_ball(y, s);
    if idx.len() < 3 {
        return Ok(0.0);
    }
    Ok(weak_qs_constant(f, &idx)?.htilde)
}

/// Log-grid quadrature of ∫ H̃_f(B(y,s))² ds/s over [r_lo, rmax].
pub fn dini_qs_integral(
    f: &SampledMap,
    y: &Point,
    rmax: f64,
    grid_per_decade: usize,
    r_lo: f64,
) -> Result<f64> {
    let res = f.domain.resolution();
    if r_lo < res {
        return Err(FlatextError::ScaleBelowResolution {
            requested: r_lo,
            resolution: res,
        });
    }
    if r_lo >= rmax {
        return Err(FlatextError::DomainError("r_lo must be below rmax".into()));
    }
    let decades = (rmax / r_lo).log10();
    let steps = ((decades * grid_per_decade as f64).ceil() as usize).max(1);
    let lu = r_lo.ln();
    let du = (rmax.ln() - lu) / steps as f64;
    let mut sum = 0.0;
    for i in 0..=steps {
        let s = (lu + du * i as f64).exp();
        let ht = htilde_in_ball(f, y, s)?;
        let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
        sum += w * ht * ht;
    }
    Ok(sum * du)
}

/// Discretized Carleson functional: the average over `centers` ⊂ B(x0,r0)
/// (uniform weights summing to the ball volume) of the inner Dini integral
/// over `scale grid` ⊂ (resolution, r0], normalized by the ball volume so
/// the output compares directly to a Carleson constant.
pub fn carleson_qs_sum(
    f: &SampledMap,
    x0: &Point,
    r0: f64,
    centers: &[Point],
    rmax: f64,
    grid_per_decade: usize,
    r_lo: f64,
) -> Result<f64> {
    if centers.is_empty() {
        return Err(FlatextError::DomainError("no quadrature centers".into()));
    }
    for c in centers {
        if (c - x0).norm() > r0 * (1.0 + 1e-9) {
            return Err(FlatextError::DomainError(
                "quadrature center outside the base ball".into(),
            ));
        }
    }
    // Uniform weights w_i = vol/|centers| cancel against the normalization;
    // the sum is just the mean of the inner integrals.
    let mut acc = 0.0;
    for c in centers {
        acc += dini_qs_integral(f, c, rmax, grid_per_decade, r_lo)?;
    }
    Ok(acc / centers.len() as f64)
}

/// Procrustes-type similarity fit on matched samples inside a ball of
/// radius r: rotation/reflection from the cross-covariance polar factor,
/// scale from matched norms, translation from centroids.
///
/// Returns the similarity and the normalized residual
/// `sup_i |f(y_i) − S(y_i)| / (‖S′‖·r)`.
pub fn fit_similarity(domain: &[Point], image: &[Point], r: f64) -> Result<(AffineMap, f64)> {
    let n = domain
        .first()
        .map(|p| p.len())
        .ok_or_else(|| FlatextError::DegenerateSamples("no samples".into()))?;
    if domain.len() != image.len() || domain.len() < n + 1 {
        return Err(FlatextError::DegenerateSamples(format!(
            "need at least {} matched samples, got {}",
            n + 1,
            domain.len()
        )));
    }
    let big_n = image[0].len();
    let m = domain.len() as f64;
    let mut p_bar = DVector::zeros(n);
    let mut q_bar = DVector::zeros(big_n);
    for (p, q) in domain.iter().zip(image) {
        p_bar += p;
        q_bar += q;
    }
    p_bar /= m;
    q_bar /= m;
    let mut cross = DMatrix::zeros(big_n, n);
    let mut p_ss = 0.0;
    let mut q_ss = 0.0;
    for (p, q) in domain.iter().zip(image) {
        let dp = p - &p_bar;
        let dq = q - &q_bar;
        cross += &dq * dp.transpose();
        p_ss += dp.norm_squared();
        q_ss += dq.norm_squared();
    }
    if p_ss <= 1e-24 {
        return Err(FlatextError::DegenerateSamples(
            "domain samples coincide".into(),
        ));
    }
    let svd = cross.svd(true, true);
    let u = svd
        .u
        .ok_or_else(|| FlatextError::DegenerateSamples("SVD failed".into()))?;
    let v_t = svd
        .v_t
        .ok_or_else(|| FlatextError::DegenerateSamples("SVD failed".into()))?;
    // Reflections are similarities, so the polar factor is used as-is.
    let rot = u * v_t; // N×n with orthonormal columns
    let scale = (q_ss / p_ss).sqrt();
    let linear = rot * scale;
    let shift = &q_bar - &linear * &p_bar;
    let s = AffineMap::new(linear, shift);
    let denom = scale * r;
    let residual = domain
        .iter()
        .zip(image)
        .map(|(p, q)| (s.apply(p) - q).norm())
        .fold(0.0, f64::max)
        / denom.max(1e-300);
    Ok((s, residual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(coords: &[f64]) -> Point {
        DVector::from_vec(coords.to_vec())
    }

    fn grid_map<F: Fn(&Point) -> Point>(m: usize, half: f64, f: F) -> SampledMap {
        let mut dom = Vec::new();
        for i in 0..m {
            for j in 0..m {
                dom.push(v(&[
                    -half + 2.0 * half * i as f64 / (m - 1) as f64,
                    -half + 2.0 * half * j as f64 / (m - 1) as f64,
                ]));
            }
        }
        let img = dom.iter().map(&f).collect();
        SampledMap::new(SampledSet::from_points(dom), img, "test-grid")
    }

    fn radial(alpha: f64) -> impl Fn(&Point) -> Point {
        move |p: &Point| {
            let r = p.norm();
            if r < 1e-300 {
                p.clone()
            } else {
                p * r.powf(alpha - 1.0)
            }
        }
    }

    #[test]
    fn similarity_has_unit_h() {
        let (c, s) = (0.4f64.cos(), 0.4f64.sin());
        let f = grid_map(9, 1.0, |p| {
            v(&[2.0 * (c * p[0] - s * p[1]) + 1.0, 2.0 * (s * p[0] + c * p[1]) - 3.0])
        });
        let idx: Vec<usize> = (0..f.domain.points.len()).collect();
        let rep = weak_qs_constant(&f, &idx).unwrap();
        assert!((rep.h - 1.0).abs() < 1e-9, "H = {}", rep.h);
    }

    #[test]
    fn quadratic_on_three_points_matches_brute_force() {
        let dom = vec![v(&[0.0]), v(&[0.5]), v(&[1.0])];
        let img: Vec<Point> = dom.iter().map(|p| v(&[p[0] + p[0] * p[0]])).collect();
        let f = SampledMap::new(SampledSet::from_points(dom.clone()), img.clone(), "quad");
        let rep = weak_qs_constant(&f, &[0, 1, 2]).unwrap();
        // Independent brute force, written directly from the definition.
        let mut expect = 1.0f64;
        for a in 0..3 {
            for x in 0..3 {
                for y in 0..3 {
                    if x == a || y == a || y == x {
                        continue;
                    }
                    let dxa = (&dom[x] - &dom[a]).norm();
                    let dya = (&dom[y] - &dom[a]).norm();
                    if dxa <= dya {
                        let ixa = (&img[x] - &img[a]).norm();
                        let iya = (&img[y] - &img[a]).norm();
                        if iya > 0.0 {
                            expect = expect.max(ixa / iya);
                        }
                    }
                }
            }
        }
        assert!((rep.h - expect).abs() < 1e-12);
    }

    #[test]
    fn radial_h_grows_as_alpha_shrinks() {
        let f8 = grid_map(15, 1.0, radial(0.8));
        let f9 = grid_map(15, 1.0, radial(0.9));
        let idx: Vec<usize> = (0..f8.domain.points.len()).collect();
        let h8 = weak_qs_constant(&f8, &idx).unwrap().h;
        let h9 = weak_qs_constant(&f9, &idx).unwrap().h;
        assert!(h8 > h9, "H(0.8)={h8} should exceed H(0.9)={h9}");
        assert!(h9 > 1.0);
    }

    #[test]
    fn collapsing_map_reports_not_injective() {
        let dom = vec![v(&[0.0]), v(&[0.5]), v(&[1.0])];
        let img = vec![v(&[0.0]), v(&[1.0]), v(&[1.0])];
        let f = SampledMap::new(SampledSet::from_points(dom), img, "collapse");
        assert!(matches!(
            weak_qs_constant(&f, &[0, 1, 2]),
            Err(FlatextError::NotInjective(_, _))
        ));
    }

    #[test]
    fn h_invariant_under_similarity_composition() {
        let f = grid_map(11, 1.0, radial(0.85));
        let idx: Vec<usize> = (0..f.domain.points.len()).collect();
        let h0 = weak_qs_constant(&f, &idx).unwrap().h;
        // Post-compose with rotation+dilation, pre-compose with translation
        // of the domain samples (same combinatorics, scaled distances).
        let (c, s) = (1.1f64.cos(), 1.1f64.sin());
        let post = |p: &Point| v(&[5.0 * (c * p[0] - s * p[1]), 5.0 * (s * p[0] + c * p[1])]);
        let g = SampledMap::new(
            f.domain.clone(),
            f.image.iter().map(|q| post(q)).collect(),
            "post-composed",
        );
        let h1 = weak_qs_constant(&g, &idx).unwrap().h;
        assert!((h0 - h1).abs() < 1e-12);
        let pre_dom: Vec<Point> = f.domain.points.iter().map(|p| p * 3.0 + v(&[7.0, 7.0])).collect();
        let g2 = SampledMap::new(SampledSet::from_points(pre_dom), f.image.clone(), "pre-composed");
        let h2 = weak_qs_constant(&g2, &idx).unwrap().h;
        assert!((h0 - h2).abs() < 1e-12);
    }

    #[test]
    fn inverse_of_qs_bijection_has_finite_h() {
        let f = grid_map(11, 1.0, radial(0.8));
        let inv = SampledMap::new(
            SampledSet::from_points(f.image.clone()),
            f.domain.points.clone(),
            "inverse",
        );
        let idx: Vec<usize> = (0..inv.domain.points.len()).collect();
        let rep = weak_qs_constant(&inv, &idx).unwrap();
        assert!(rep.h.is_finite());
        assert!(rep.h >= 1.0);
    }

    #[test]
    fn qs_composition_lemma_on_radial_maps() {
        // For the radial stretch with exponent α, η(t) = 4·max(t^α, t^{1/α})
        // is a valid control function at desk scale; the diameter sandwich
        // 1/(2η(diam B/diam A)) ≤ diam f(A)/diam f(B) ≤ η(2 diam A/diam B)
        // must hold for sampled subsets A ⊆ B.
        let alpha = 0.8;
        let f = grid_map(21, 1.0, radial(alpha));
        let eta = |t: f64| 4.0 * t.powf(alpha).max(t.powf(1.0 / alpha));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let c = v(&[rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)]);
            let rb = rng.gen_range(0.3..0.5);
            let ra = rng.gen_range(0.1..rb);
            let ai = f.domain.indices_in_ball(&c, ra);
            let bi = f.domain.indices_in_ball(&c, rb);
            if ai.len() < 2 || bi.len() < 2 {
                continue;
            }
            let diam = |idx: &[usize], pts: &[Point]| {
                let mut d = 0.0f64;
                for i in 0..idx.len() {
                    for j in (i + 1)..idx.len() {
                        d = d.max((&pts[idx[i]] - &pts[idx[j]]).norm());
                    }
                }
                d
            };
            let da = diam(&ai, &f.domain.points);
            let db = diam(&bi, &f.domain.points);
            let fa = diam(&ai, &f.image);
            let fb = diam(&bi, &f.image);
            if da == 0.0 || fb == 0.0 {
                continue;
            }
            let ratio = fa / fb;
            assert!(ratio <= eta(2.0 * da / db) + 1e-12);
            assert!(ratio >= 1.0 / (2.0 * eta(db / da)) - 1e-12);
        }
    }

    #[test]
    fn dini_zero_for_similarity_and_monotone_in_rmax() {
        let f = grid_map(21, 1.0, |p| p * 2.0 + v(&[1.0, 1.0]));
        let y = v(&[0.0, 0.0]);
        let d = dini_qs_integral(&f, &y, 0.8, 8, 0.2).unwrap();
        assert!(d < 1e-18);
        let g = grid_map(21, 1.0, radial(0.8));
        let d1 = dini_qs_integral(&g, &y, 0.5, 8, 0.2).unwrap();
        let d2 = dini_qs_integral(&g, &y, 0.9, 8, 0.2).unwrap();
        assert!(d2 >= d1 - 1e-15);
    }

    #[test]
    fn dini_matches_refined_grid_oracle() {
        let g = grid_map(25, 1.0, radial(0.8));
        let y = v(&[1.0 / 12.0, 1.0 / 12.0]); // origin-adjacent grid point
        let coarse = dini_qs_integral(&g, &y, 0.8, 12, 0.25).unwrap();
        let fine = dini_qs_integral(&g, &y, 0.8, 96, 0.25).unwrap();
        assert!(
            (coarse - fine).abs() <= 0.02 * fine.max(1e-12),
            "coarse {coarse} fine {fine}"
        );
    }

    #[test]
    fn carleson_zero_for_similarity_positive_for_diagonal_affine() {
        let sim = grid_map(21, 2.0, |p| p * 3.0);
        let x0 = v(&[0.0, 0.0]);
        let centers = vec![v(&[0.0, 0.0]), v(&[0.3, 0.0]), v(&[0.0, -0.3])];
        let c = carleson_qs_sum(&sim, &x0, 1.0, &centers, 0.8, 8, 0.3).unwrap();
        assert!(c < 1e-18);

        // diag(1,2): scale-invariant distortion, so the value is the same at
        // two disjoint balls (same inner scale range relative to resolution).
        let aff = grid_map(41, 4.0, |p| v(&[p[0], 2.0 * p[1]]));
        let c1 = carleson_qs_sum(
            &aff,
            &v(&[-2.0, -2.0]),
            1.0,
            &[v(&[-2.0, -2.0])],
            0.8,
            8,
            0.3,
        )
        .unwrap();
        let c2 = carleson_qs_sum(&aff, &v(&[2.0, 2.0]), 1.0, &[v(&[2.0, 2.0])], 0.8, 8, 0.3)
            .unwrap();
        assert!(c1 > 1e-4);
        assert!(
            (c1 - c2).abs() <= 0.05 * c1,
            "disjoint balls disagree: {c1} vs {c2}"
        );
    }

    #[test]
    fn fit_similarity_recovers_exact_similarity_and_reflection() {
        let (c, s) = (0.9f64.cos(), 0.9f64.sin());
        let pts: Vec<Point> = vec![
            v(&[0.0, 0.0]),
            v(&[1.0, 0.0]),
            v(&[0.0, 1.0]),
            v(&[0.7, 0.4]),
        ];
        let rot = |p: &Point| v(&[1.7 * (c * p[0] - s * p[1]) + 2.0, 1.7 * (s * p[0] + c * p[1]) - 1.0]);
        let img: Vec<Point> = pts.iter().map(&rot).collect();
        let (_, resid) = fit_similarity(&pts, &img, 1.0).unwrap();
        assert!(resid < 1e-10);
        // Compose with a reflection: still a similarity.
        let refl: Vec<Point> = img.iter().map(|q| v(&[q[0], -q[1]])).collect();
        let (_, resid) = fit_similarity(&pts, &refl, 1.0).unwrap();
        assert!(resid < 1e-10);
    }

    #[test]
    fn fit_similarity_residual_tracks_perturbation() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let pts: Vec<Point> = (0..20)
            .map(|_| v(&[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]))
            .collect();
        let scale = 2.5;
        let r = 1.0;
        let eps = 1e-3;
        let img: Vec<Point> = pts
            .iter()
            .map(|p| {
                // S = scale·Id plus a perturbation bounded by eps·‖S′‖·r.
                let g = v(&[
                    (3.0 * p[0]).sin() * 0.5,
                    (2.0 * p[1]).cos() * 0.5,
                ]);
                p * scale + g * (eps * scale * r)
            })
            .collect();
        let (s_map, resid) = fit_similarity(&pts, &img, r).unwrap();
        // Direct sup oracle against the fitted map.
        let direct = pts
            .iter()
            .zip(&img)
            .map(|(p, q)| (s_map.apply(p) - q).norm())
            .fold(0.0, f64::max)
            / (s_map.operator_norm() * r);
        assert!((resid - direct).abs() < 1e-12);
        // The fit can only beat the planted similarity, up to centering
        // effects of the same order as the perturbation itself.
        assert!(resid <= 2.0 * eps + 1e-9, "residual {resid} vs eps {eps}");
    }

    #[test]
    fn fit_similarity_rejects_degenerate_samples() {
        let pts = vec![v(&[0.0, 0.0]), v(&[0.0, 0.0]), v(&[0.0, 0.0])];
        let img = pts.clone();
        assert!(matches!(
            fit_similarity(&pts, &img, 1.0),
            Err(FlatextError::DegenerateSamples(_))
        ));
    }

    #[test]
    fn farthest_point_cap_is_deterministic_and_recorded() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let dom: Vec<Point> = (0..500)
            .map(|_| v(&[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]))
            .collect();
        let img: Vec<Point> = dom.iter().map(|p| p * 2.0).collect();
        let f = SampledMap::new(SampledSet::from_points(dom), img, "big");
        let idx: Vec<usize> = (0..500).collect();
        let r1 = weak_qs_constant(&f, &idx).unwrap();
        let r2 = weak_qs_constant(&f, &idx).unwrap();
        assert_eq!(r1.used, TRIPLE_CAP);
        assert_eq!(r1.witness, r2.witness);
        assert_eq!(r1.h, r2.h);
    }
}

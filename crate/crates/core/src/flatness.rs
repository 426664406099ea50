//! Local flatness of sampled sets: β numbers (free and center-constrained),
//! the bilateral θ number, dyadic square sums, Dini integrals, and
//! Reifenberg-flatness checks.
//!
//! All quantities are normalized to [0, 1].  The key structural facts are
//! built into the computation rather than merely tested after the fact:
//!
//! * sandwich: β ≤ β^ctr ≤ 2β, enforced by cross-seeding candidate planes
//!   (the anchored plane is a free candidate; the free plane translated to
//!   pass through the center is an anchored candidate);
//! * clamp: every anchored candidate passes through the center, so β^ctr ≤ 1
//!   automatically.

use serde::{Deserialize, Serialize};

use crate::error::{FlatextError, Result};
use crate::geometry::{fit_plane_minimax, Plane, Point, SampledSet};

/// Relative solver tolerance for plane fits: the reported supdist is within
/// `DEFAULT_TOL_FIT_REL · diam` of the true infimum on the target dimensions.
pub const DEFAULT_TOL_FIT_REL: f64 = 1e-6;

/// Default spacing of the plane-side supremum grid in θ, as a fraction of r.
pub const DEFAULT_THETA_GRID_REL: f64 = 1.0 / 64.0;

/// Per-center flatness measurements over a descending scale list.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlatnessProfile {
    /// The center x ∈ E.
    pub center: Point,
    /// Strictly decreasing radii.
    pub scales: Vec<f64>,
    /// Free β per scale.
    pub beta: Vec<f64>,
    /// Center-constrained β per scale.
    pub beta_ctr: Vec<f64>,
    /// Bilateral θ per scale.
    pub theta: Vec<f64>,
    /// Σ β^ctr(x, base^{−k}·r₀)² over the scales list.
    pub dyadic_sq_sum: f64,
    /// Log-grid quadrature of ∫ β(x,r)² dr/r over [min scale, max scale].
    pub dini_integral: f64,
    /// Sampling resolution of E, reported alongside every value because the
    /// effect of finite sampling on β is not otherwise quantified.
    pub resolution: f64,
}

fn require_member(e: &SampledSet, x: &Point) -> Result<()> {
    let (d, _) = e.distance_to(x);
    if d > 1e-12 {
        return Err(FlatextError::PointNotInSet(d));
    }
    Ok(())
}

/// β_E(x,r) and β^ctr_E(x,r) computed together so the sandwich
/// β ≤ β^ctr ≤ 2β holds by construction.
///
/// Returns `(beta, beta_ctr)`, both in [0, 1].
pub fn beta_pair(e: &SampledSet, x: &Point, r: f64, n: usize) -> Result<(f64, f64)> {
    require_member(e, x)?;
    if r <= 0.0 {
        return Err(FlatextError::DomainError("radius must be positive".into()));
    }
    let idx = e.indices_in_ball(x, r);
    let pts: Vec<Point> = idx.iter().map(|i| e.points[*i].clone()).collect();
    let free = fit_plane_minimax(&pts, n, None);
    let anchored = fit_plane_minimax(&pts, n, Some(x));
    // Translate the free plane to pass through x: a valid anchored candidate
    // whose supdist is at most free.supdist + dist(x, free plane).
    let translated = Plane {
        base: x.clone(),
        frame: free.plane.frame.clone(),
    };
    let translated_sup = pts.iter().map(|p| translated.distance(p)).fold(0.0, f64::max);
    let ctr_sup = anchored.supdist.min(translated_sup);
    // The anchored plane is also a free candidate.
    let free_sup = free.supdist.min(ctr_sup);
    Ok(((free_sup / r).min(1.0), (ctr_sup / r).min(1.0)))
}

/// β_E(x,r): scale-normalized sup distance of E ∩ B(x,r) to its best-fitting
/// n-plane; `centered` constrains the plane through x.
pub fn beta(e: &SampledSet, x: &Point, r: f64, n: usize, centered: bool) -> Result<f64> {
    let (b, bc) = beta_pair(e, x, r, n)?;
    Ok(if centered { bc } else { b })
}

/// Options for the bilateral θ computation.
#[derive(Debug, Clone)]
pub struct ThetaOpts {
    /// Plane-side grid spacing as a fraction of r.
    pub grid_rel: f64,
    /// Refine candidate orientations under the bilateral objective.
    pub refine: bool,
    /// Extra candidate planes (must pass through the query center to be
    /// legitimate upper bounds; enforced by translating the base).
    pub extra_candidates: Vec<Plane>,
}

impl Default for ThetaOpts {
    fn default() -> Self {
        Self {
            grid_rel: DEFAULT_THETA_GRID_REL,
            refine: true,
            extra_candidates: Vec::new(),
        }
    }
}

/// Bilateral value of a candidate plane through x at scale r:
/// max(sup over E∩B(x,r) of dist to V, sup over a grid of V∩B(x,r) of dist
/// to E), unnormalized.
fn bilateral_value(e: &SampledSet, ball: &[Point], x: &Point, r: f64, v: &Plane, h: f64) -> f64 {
    let one_sided = ball.iter().map(|p| v.distance(p)).fold(0.0, f64::max);
    let plane_side = plane_side_sup(e, x, r, v, h);
    one_sided.max(plane_side)
}

/// Sup over a uniform grid of V ∩ B(x,r) (spacing h in frame coordinates) of
/// the distance to the sampled set.  Grid values never exceed the continuum
/// supremum, so this is a certified under-approximation of the plane-side
/// term.
fn plane_side_sup(e: &SampledSet, x: &Point, r: f64, v: &Plane, h: f64) -> f64 {
    let n = v.dim();
    let k = (r / h).floor() as i64;
    let mut sup = 0.0f64;
    match n {
        1 => {
            let d = &v.frame[0];
            for i in -k..=k {
                let z = x + d * (i as f64 * h);
                sup = sup.max(e.distance_to(&z).0);
            }
        }
        2 => {
            let (u, w) = (&v.frame[0], &v.frame[1]);
            for i in -k..=k {
                let a = i as f64 * h;
                let rem = (r * r - a * a).max(0.0).sqrt();
                let kj = (rem / h).floor() as i64;
                for j in -kj..=kj {
                    let z = x + u * a + w * (j as f64 * h);
                    sup = sup.max(e.distance_to(&z).0);
                }
            }
        }
        _ => {
            // Higher plane dimensions: center sample only (documented
            // fallback; θ in this crate targets n ≤ 2).
            sup = e.distance_to(x).0;
        }
    }
    sup
}

/// θ_E(x,r): min over candidate planes through x of the bilateral sup,
/// divided by r.  Candidates are the center-constrained minimax fit, the
/// translated free fit, any caller-supplied planes, and (optionally) a
/// pattern-search refinement of the best candidate under the bilateral
/// objective.
pub fn theta_with_opts(e: &SampledSet, x: &Point, r: f64, n: usize, opts: &ThetaOpts) -> Result<f64> {
    require_member(e, x)?;
    if r <= 0.0 {
        return Err(FlatextError::DomainError("radius must be positive".into()));
    }
    let idx = e.indices_in_ball(x, r);
    let ball: Vec<Point> = idx.iter().map(|i| e.points[*i].clone()).collect();
    let h = opts.grid_rel * r;

    let anchored = fit_plane_minimax(&ball, n, Some(x));
    let free = fit_plane_minimax(&ball, n, None);
    let mut candidates: Vec<Plane> = vec![
        anchored.plane,
        Plane {
            base: x.clone(),
            frame: free.plane.frame,
        },
    ];
    for p in &opts.extra_candidates {
        candidates.push(Plane {
            base: x.clone(),
            frame: p.frame.clone(),
        });
    }

    let mut best_plane = candidates[0].clone();
    let mut best = f64::INFINITY;
    for c in &candidates {
        let v = bilateral_value(e, &ball, x, r, c, h);
        if v < best {
            best = v;
            best_plane = c.clone();
        }
    }

    if opts.refine {
        // Orientation sweep around the best candidate: pattern search in the
        // frame (direction for n=1, normal for codimension 1).
        let big_n = x.len();
        if n == 1 {
            let value = |d: &Point| {
                let v = Plane {
                    base: x.clone(),
                    frame: vec![d.clone()],
                };
                bilateral_value(e, &ball, x, r, &v, h)
            };
            let (d, v) = pattern_search_direction(&value, &best_plane.frame[0], 1e-6);
            if v < best {
                best = v;
                best_plane = Plane {
                    base: x.clone(),
                    frame: vec![d],
                };
            }
        } else if big_n == n + 1 {
            let normal = crate::geometry::orthonormal_complement(&best_plane.frame)
                .into_iter()
                .next();
            if let Some(u0) = normal {
                let value = |u: &Point| {
                    let v = Plane::from_normal(x.clone(), u);
                    bilateral_value(e, &ball, x, r, &v, h)
                };
                let (u, v) = pattern_search_direction(&value, &u0, 1e-6);
                if v < best {
                    best = v;
                    best_plane = Plane::from_normal(x.clone(), &u);
                }
            }
        }
    }
    let _ = best_plane;
    Ok((best / r).min(1.0))
}

/// θ_E(x,r) with default options.
pub fn theta(e: &SampledSet, x: &Point, r: f64, n: usize) -> Result<f64> {
    theta_with_opts(e, x, r, n, &ThetaOpts::default())
}

/// Shallow pattern search over unit directions (same scheme as the plane
/// fitter but with a configurable stopping step, since the bilateral
/// objective is much more expensive per evaluation).
fn pattern_search_direction<F: Fn(&Point) -> f64>(
    value: &F,
    start: &Point,
    min_step: f64,
) -> (Point, f64) {
    let mut dir = start.normalize();
    let mut best = value(&dir);
    let mut step = 0.2f64;
    while step > min_step {
        let tangents = crate::geometry::orthonormal_complement(std::slice::from_ref(&dir));
        let mut improved = false;
        for t in &tangents {
            for sign in [1.0, -1.0] {
                let cand = (&dir + t * (sign * step)).normalize();
                let v = value(&cand);
                if v < best {
                    best = v;
                    dir = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (dir, best)
}

/// Σ_{k=0}^{kmax} β^ctr_E(x, base^{−k}·r₀)².
///
/// Errors with `ScaleBelowResolution` when the deepest scale dips below the
/// sampling resolution of E.
pub fn dyadic_beta_sq_sum(
    e: &SampledSet,
    x: &Point,
    r0: f64,
    n: usize,
    base: f64,
    kmax: usize,
) -> Result<f64> {
    let res = e.resolution();
    let deepest = base.powi(-(kmax as i32)) * r0;
    if deepest < res {
        return Err(FlatextError::ScaleBelowResolution {
            requested: deepest,
            resolution: res,
        });
    }
    let mut sum = 0.0;
    for k in 0..=kmax {
        let r = base.powi(-(k as i32)) * r0;
        let b = beta(e, x, r, n, true)?;
        sum += b * b;
    }
    Ok(sum)
}

/// Trapezoidal approximation of ∫ β_E(x,r)² dr/r on a log grid from `r_lo`
/// to `rmax` with `grid_per_decade` nodes per decade.
pub fn dini_beta_integral(
    e: &SampledSet,
    x: &Point,
    rmax: f64,
    n: usize,
    grid_per_decade: usize,
    r_lo: f64,
) -> Result<f64> {
    let res = e.resolution();
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
    let hu = rmax.ln();
    let du = (hu - lu) / steps as f64;
    // Trapezoid in u = ln r of β(x, e^u)².
    let mut sum = 0.0;
    for i in 0..=steps {
        let r = (lu + du * i as f64).exp();
        let b = beta(e, x, r, n, false)?;
        let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
        sum += w * b * b;
    }
    Ok(sum * du)
}

/// Reifenberg flatness check: pass iff θ_E(x,r) ≤ δ for every tested center
/// and scale; returns the worst offender (center index, scale, θ).
pub fn reifenberg_check(
    e: &SampledSet,
    n: usize,
    delta: f64,
    big_r: f64,
    centers: &[usize],
    scale_grid: &[f64],
) -> Result<(bool, (usize, f64, f64))> {
    let mut worst = (0usize, 0.0f64, -1.0f64);
    for &ci in centers {
        let x = e.points[ci].clone();
        for &r in scale_grid {
            if r > big_r {
                continue;
            }
            let t = theta(e, &x, r, n)?;
            if t > worst.2 {
                worst = (ci, r, t);
            }
        }
    }
    Ok((worst.2 <= delta, worst))
}

/// Full per-center profile over a descending scale list, with the dyadic sum
/// over the listed scales and the Dini integral over [min, max] scale.
pub fn flatness_profile(
    e: &SampledSet,
    x: &Point,
    scales: &[f64],
    n: usize,
    grid_per_decade: usize,
) -> Result<FlatnessProfile> {
    if scales.windows(2).any(|w| w[1] >= w[0]) {
        return Err(FlatextError::DomainError(
            "scales must be strictly decreasing".into(),
        ));
    }
    let mut beta_v = Vec::with_capacity(scales.len());
    let mut beta_ctr_v = Vec::with_capacity(scales.len());
    let mut theta_v = Vec::with_capacity(scales.len());
    let mut dyadic = 0.0;
    for &r in scales {
        let (b, bc) = beta_pair(e, x, r, n)?;
        let t = theta(e, &x.clone(), r, n)?;
        beta_v.push(b);
        beta_ctr_v.push(bc);
        // θ dominates β^ctr in the continuum; discretization of the
        // plane-side term can undercut that, so profiles report the max.
        theta_v.push(t.max(bc));
        dyadic += bc * bc;
    }
    let r_lo = *scales.last().unwrap();
    let r_hi = scales[0];
    let dini = if r_lo < r_hi {
        dini_beta_integral(e, x, r_hi, n, grid_per_decade, r_lo)?
    } else {
        0.0
    };
    Ok(FlatnessProfile {
        center: x.clone(),
        scales: scales.to_vec(),
        beta: beta_v,
        beta_ctr: beta_ctr_v,
        theta: theta_v,
        dyadic_sq_sum: dyadic,
        dini_integral: dini,
        resolution: e.resolution(),
    })
}

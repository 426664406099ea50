//! Command-line harness: synthetic data generation, flatness and
//! quasisymmetry measurements, Whitney extension runs, and named inequality
//! verification suites, all driven by a JSON config for reproducibility.
//!
//! Exit codes: 0 success, 1 verification failure, 2 bad input.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use flatext::families::{
    check_almost_affine, check_compatible, random_compatible_family, verify_inequality,
    AffineFamily, FamilySpec, IneqCheck, IneqReport,
};
use flatext::flatness::{self, FlatnessProfile};
use flatext::generate::{generate, Generated, GeneratorKind, GeneratorSpec};
use flatext::geometry::{AffineMap, Point, SampledSet};
use flatext::quasisymmetry::{self, SampledMap};
use flatext::whitney;
use flatext::{FlatextError, Result as CoreResult};

#[derive(Parser)]
#[command(name = "flatext", about = "Flatness, quasisymmetry, and extension experiments")]
struct Cli {
    /// Path to the experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the synthetic set/map described by the config generator.
    Generate,
    /// Flatness profiles (β, centered β, bilateral θ, square sums) of a set.
    Flatness,
    /// Quasisymmetric distortion of a map (weak constant, Dini, Carleson).
    Qs,
    /// Whitney decomposition, extension, and measured extension constants.
    Extend,
    /// Run a named inequality suite; nonzero exit on any negative slack.
    Verify {
        /// Suite: betas-sandwich | pre-post | ab-bound | holder | inradius |
        /// lemma-check | all.
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

/// Everything an experiment depends on; a config plus the binary version
/// determines all outputs bit-for-bit.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ExperimentConfig {
    seed: u64,
    generator: GeneratorSpec,
    #[serde(default)]
    flatness: FlatnessSection,
    #[serde(default)]
    qs: QsSection,
    #[serde(default)]
    extend: ExtendSection,
    /// Slack below −tol fails verification.
    #[serde(default = "default_tol")]
    tol: f64,
}

fn default_tol() -> f64 {
    1e-9
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FlatnessSection {
    plane_dim: usize,
    scales: Vec<f64>,
    /// Profile every k-th sample as a center.
    center_stride: usize,
}

impl Default for FlatnessSection {
    fn default() -> Self {
        Self {
            plane_dim: 1,
            scales: vec![0.5, 0.25, 0.125],
            center_stride: 8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct QsSection {
    /// Radius for per-ball distortion probes (0 disables).
    ball_radius: f64,
    dini_rmax: f64,
    dini_r_lo: f64,
    grid_per_decade: usize,
}

impl Default for QsSection {
    fn default() -> Self {
        Self {
            ball_radius: 0.25,
            dini_rmax: 0.5,
            dini_r_lo: 0.05,
            grid_per_decade: 12,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ExtendSection {
    box_corner: Vec<f64>,
    box_side: f64,
    min_level: u32,
    family_eps: f64,
    family_r_min: f64,
    family_levels: usize,
    probes_per_axis: usize,
}

impl Default for ExtendSection {
    fn default() -> Self {
        Self {
            box_corner: vec![-2.0],
            box_side: 4.0,
            min_level: 7,
            family_eps: 1e-2,
            family_r_min: 0.03125,
            family_levels: 9,
            probes_per_axis: 121,
        }
    }
}

/// FNV-1a over the canonical JSON serialization; stamped on every artifact
/// so outputs can be traced back to their exact configuration.
fn config_hash(cfg: &ExperimentConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

/// 17 significant digits: round-trips every f64 exactly.
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_text(dir: &Path, name: &str, content: &str) -> std::io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, content)?;
    Ok(path)
}

fn point_row(p: &Point) -> String {
    p.iter().map(|v| fmt(*v)).collect::<Vec<_>>().join(",")
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, String> {
    let mut cfg: ExperimentConfig = match &cli.config {
        Some(path) => {
            let raw = fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
            serde_json::from_str(&raw).map_err(|e| format!("bad config: {e}"))?
        }
        None => default_config(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
        cfg.generator.seed = seed;
    }
    Ok(cfg)
}

/// The bundled fixture: a mildly perturbed affine line map.
fn default_config() -> ExperimentConfig {
    ExperimentConfig {
        seed: 7,
        generator: GeneratorSpec {
            kind: GeneratorKind::PerturbedAffine { eps: 1e-2 },
            n: 1,
            big_n: 2,
            samples_per_side: 65,
            seed: 7,
        },
        flatness: FlatnessSection::default(),
        qs: QsSection::default(),
        extend: ExtendSection::default(),
        tol: default_tol(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load_config(&cli) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let hash = config_hash(&cfg);
    let run = match &cli.command {
        Command::Generate => cmd_generate(&cfg, &hash, &cli.out),
        Command::Flatness => cmd_flatness(&cfg, &hash, &cli.out),
        Command::Qs => cmd_qs(&cfg, &hash, &cli.out),
        Command::Extend => cmd_extend(&cfg, &hash, &cli.out),
        Command::Verify { suite } => return cmd_verify(&cfg, suite),
    };
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn core_err(e: FlatextError) -> String {
    e.to_string()
}

fn cmd_generate(cfg: &ExperimentConfig, hash: &str, out: &Path) -> Result<(), String> {
    let g = generate(&cfg.generator).map_err(core_err)?;
    let json = serde_json::json!({ "config_hash": hash, "data": &g });
    write_text(out, "generated.json", &serde_json::to_string_pretty(&json).unwrap())
        .map_err(|e| e.to_string())?;
    let mut csv = format!("# config_hash={hash}\n");
    match &g {
        Generated::Set(s) => {
            csv.push_str("index,point\n");
            for (i, p) in s.points.iter().enumerate() {
                csv.push_str(&format!("{i},{}\n", point_row(p)));
            }
        }
        Generated::Map(m) => {
            csv.push_str("index,domain,image\n");
            for (i, (x, y)) in m.domain.points.iter().zip(&m.image).enumerate() {
                csv.push_str(&format!("{i},{},{}\n", point_row(x), point_row(y)));
            }
        }
    }
    write_text(out, "generated.csv", &csv).map_err(|e| e.to_string())?;
    println!("generated {} -> {}", hash, out.display());
    Ok(())
}

fn cmd_flatness(cfg: &ExperimentConfig, hash: &str, out: &Path) -> Result<(), String> {
    let g = generate(&cfg.generator).map_err(core_err)?;
    let e = g.as_set();
    let sec = &cfg.flatness;
    let mut rows: Vec<(usize, f64, f64, f64, f64)> = Vec::new();
    for i in (0..e.points.len()).step_by(sec.center_stride.max(1)) {
        let x = &e.points[i];
        for &r in &sec.scales {
            let (b, bc) = flatness::beta_pair(e, x, r, sec.plane_dim).map_err(core_err)?;
            let th = flatness::theta(e, x, r, sec.plane_dim).map_err(core_err)?;
            rows.push((i, r, b, bc, th));
        }
    }
    rows.sort_by(|a, b| (a.0, ordf(a.1)).cmp(&(b.0, ordf(b.1))));
    let mut csv = format!("# config_hash={hash}\ncenter_index,scale,beta,beta_ctr,theta\n");
    for (i, r, b, bc, th) in &rows {
        csv.push_str(&format!("{i},{},{},{},{}\n", fmt(*r), fmt(*b), fmt(*bc), fmt(*th)));
    }
    write_text(out, "flatness.csv", &csv).map_err(|e2| e2.to_string())?;

    // One full profile at the first center for the JSON artifact.
    let x0 = &e.points[0];
    let profile: FlatnessProfile =
        flatness::flatness_profile(e, x0, &sec.scales, sec.plane_dim, 24).map_err(core_err)?;
    let json = serde_json::json!({ "config_hash": hash, "data": profile });
    write_text(out, "flatness.json", &serde_json::to_string_pretty(&json).unwrap())
        .map_err(|e2| e2.to_string())?;
    println!("flatness {} rows -> {}", rows.len(), out.display());
    Ok(())
}

fn ordf(v: f64) -> u64 {
    v.to_bits()
}

fn cmd_qs(cfg: &ExperimentConfig, hash: &str, out: &Path) -> Result<(), String> {
    let g = generate(&cfg.generator).map_err(core_err)?;
    let m = g.as_map().map_err(core_err)?;
    let all: Vec<usize> = (0..m.domain.points.len()).collect();
    let rep = quasisymmetry::weak_qs_constant(m, &all).map_err(core_err)?;
    let sec = &cfg.qs;
    let center = m.domain.points.len() / 2;
    // The inner cutoff can never go below the sampling resolution.
    let r_lo = sec.dini_r_lo.max(m.domain.resolution());
    let dini = quasisymmetry::dini_qs_integral(
        m,
        &m.domain.points[center],
        sec.dini_rmax.max(2.0 * r_lo),
        sec.grid_per_decade,
        r_lo,
    )
    .map_err(core_err)?;
    let mut ball_rows = Vec::new();
    if sec.ball_radius > 0.0 {
        for i in (0..m.domain.points.len()).step_by(8) {
            let h = quasisymmetry::htilde_in_ball(m, &m.domain.points[i], sec.ball_radius)
                .map_err(core_err)?;
            ball_rows.push((i, h));
        }
    }
    let json = serde_json::json!({
        "config_hash": hash,
        "data": { "report": rep, "dini_center": dini }
    });
    write_text(out, "qs.json", &serde_json::to_string_pretty(&json).unwrap())
        .map_err(|e| e.to_string())?;
    let mut csv = format!("# config_hash={hash}\ncenter_index,htilde_in_ball\n");
    for (i, h) in &ball_rows {
        csv.push_str(&format!("{i},{}\n", fmt(*h)));
    }
    write_text(out, "qs.csv", &csv).map_err(|e| e.to_string())?;
    println!("qs H={} -> {}", fmt(rep.h), out.display());
    Ok(())
}

fn cmd_extend(cfg: &ExperimentConfig, hash: &str, out: &Path) -> Result<(), String> {
    let g = generate(&cfg.generator).map_err(core_err)?;
    let e = g.as_set();
    let sec = &cfg.extend;
    if sec.box_corner.len() != e.dim {
        return Err("extend.box_corner dimension must match the generated set".into());
    }
    // A deterministic compatible family over the generated set, and its
    // accompanying almost affine sample.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let spec = FamilySpec {
        n: e.dim,
        big_n: e.dim + 1,
        eps: sec.family_eps,
        conformal_bias: 1.0,
    };
    let (fam, f) = random_compatible_family(
        &mut rng,
        &spec,
        e.points.clone(),
        sec.family_r_min,
        sec.family_levels,
    );
    let corner = Point::from_vec(sec.box_corner.clone());
    let w = whitney::whitney_decompose(e, &corner, sec.box_side, sec.min_level).map_err(core_err)?;
    let ev = whitney::extend_map(&f, &fam, &w).map_err(core_err)?;

    let cubes_json = serde_json::json!({
        "config_hash": hash,
        "data": { "min_level": w.min_level, "resolution": w.resolution, "cubes": w.cubes }
    });
    write_text(out, "whitney.json", &serde_json::to_string_pretty(&cubes_json).unwrap())
        .map_err(|e2| e2.to_string())?;

    // Probe F along an axis-aligned grid through the box.
    let mut csv = format!("# config_hash={hash}\nx,f_x,d_x,collar\n");
    let probes = probe_grid(&corner, sec.box_side, e.dim, sec.probes_per_axis);
    let mut dense_grid = Vec::new();
    for x in &probes {
        let val = ev.eval(x);
        let d = ev.dist(x).0;
        csv.push_str(&format!(
            "{},{},{},{}\n",
            point_row(x),
            point_row(&val.value),
            fmt(d),
            val.collar as u8
        ));
        if !val.collar {
            dense_grid.push(x.clone());
        }
    }
    write_text(out, "extension.csv", &csv).map_err(|e2| e2.to_string())?;

    let mut plus_bases: Vec<Point> = e.points.iter().step_by(8).cloned().collect();
    for x in dense_grid.iter().step_by(3) {
        if plus_bases.iter().all(|b| (b - x).norm() > 1e-9) {
            plus_bases.push(x.clone());
        }
    }
    let probe = whitney::ProbeConfig {
        plus_bases,
        r_min: sec.family_r_min,
        levels: sec.family_levels,
        dini_centers: (0..dense_grid.len()).step_by(17).collect(),
        dense_grid,
        dini_rmax: sec.box_side / 4.0,
        grid_per_decade: 12,
        dini_r_lo: sec.box_side / 50.0,
    };
    let rep = whitney::measure_extension_theorems(&ev, &probe).map_err(core_err)?;
    let json = serde_json::json!({ "config_hash": hash, "data": rep });
    write_text(out, "extension.json", &serde_json::to_string_pretty(&json).unwrap())
        .map_err(|e2| e2.to_string())?;
    println!("extend cubes={} -> {}", w.cubes.len(), out.display());
    Ok(())
}

fn probe_grid(corner: &Point, side: f64, n: usize, per_axis: usize) -> Vec<Point> {
    let mut pts = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        pts.push(Point::from_fn(n, |i, _| {
            corner[i] + side * (idx[i] as f64 + 0.5) / per_axis as f64
        }));
        let mut carry = true;
        for v in idx.iter_mut() {
            if carry {
                *v += 1;
                if *v >= per_axis {
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

// ---------------------------------------------------------------------------
// Verification suites
// ---------------------------------------------------------------------------

struct SuiteResult {
    name: String,
    passed: bool,
    detail: String,
}

fn check(results: &mut Vec<SuiteResult>, name: &str, passed: bool, detail: String) {
    results.push(SuiteResult {
        name: name.into(),
        passed,
        detail,
    });
}

fn ineq_outcome(results: &mut Vec<SuiteResult>, name: &str, tol: f64, reps: &[IneqReport]) {
    let worst = reps
        .iter()
        .map(|r| r.slack)
        .fold(f64::INFINITY, f64::min);
    check(
        results,
        name,
        !reps.is_empty() && worst >= -tol,
        format!("{} instances, worst slack {}", reps.len(), fmt(worst)),
    );
}

fn cmd_verify(cfg: &ExperimentConfig, suite: &str) -> ExitCode {
    let tol = cfg.tol;
    let mut results = Vec::new();
    let run = |s: &str| suite == s || suite == "all";
    let outcome: CoreResult<()> = (|| {
        if run("betas-sandwich") {
            suite_betas_sandwich(cfg, tol, &mut results)?;
        }
        if run("pre-post") {
            suite_pre_post(cfg, tol, &mut results)?;
        }
        if run("ab-bound") {
            suite_ab_bound(cfg, tol, &mut results)?;
        }
        if run("holder") {
            suite_holder(cfg, tol, &mut results)?;
        }
        if run("inradius") {
            suite_inradius(cfg, tol, &mut results)?;
        }
        if run("lemma-check") {
            suite_lemma_check(cfg, tol, &mut results)?;
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    if results.is_empty() {
        eprintln!("error: unknown suite '{suite}'");
        return ExitCode::from(2);
    }
    let mut failed = false;
    for r in &results {
        println!("{} {} — {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
        failed |= !r.passed;
    }
    if failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn line_points(m: usize) -> Vec<Point> {
    (0..=m)
        .map(|i| Point::from_vec(vec![-0.5 + i as f64 / m as f64]))
        .collect()
}

fn suite_betas_sandwich(
    cfg: &ExperimentConfig,
    tol: f64,
    results: &mut Vec<SuiteResult>,
) -> CoreResult<()> {
    let sets: Vec<(String, SampledSet, usize)> = vec![
        (
            "grid".into(),
            SampledSet::from_points(flatext::generate::unit_grid(2, 12)),
            1,
        ),
        (
            "circle".into(),
            generate(&GeneratorSpec {
                kind: GeneratorKind::CircleSet { radius: 1.0 },
                n: 2,
                big_n: 2,
                samples_per_side: 90,
                seed: cfg.seed,
            })?
            .as_set()
            .clone(),
            1,
        ),
        (
            "snowflake".into(),
            SampledSet::from_points(flatext::generate::snowflake_polyline(&[0.4], 4)?),
            1,
        ),
    ];
    for (name, e, n) in &sets {
        let mut worst = f64::INFINITY;
        let mut count = 0;
        for i in (0..e.points.len()).step_by(7) {
            for r in [0.4, 0.2, 0.1] {
                let (b, bc) = flatness::beta_pair(e, &e.points[i], r, *n)?;
                worst = worst
                    .min(bc - b) // β ≤ β^ctr
                    .min(2.0 * b - bc) // β^ctr ≤ 2β
                    .min(1.0 - bc) // β^ctr ≤ 1
                    .min(b);
                count += 1;
            }
        }
        check(
            results,
            &format!("betas-sandwich/{name}"),
            worst >= -tol,
            format!("{count} probes, worst margin {}", fmt(worst)),
        );
    }
    Ok(())
}

fn verification_family(cfg: &ExperimentConfig, eps: f64) -> (AffineFamily, SampledMap, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let spec = FamilySpec {
        n: 1,
        big_n: 2,
        eps,
        conformal_bias: 1.0,
    };
    let (fam, f) = random_compatible_family(&mut rng, &spec, line_points(16), 0.25, 6);
    let measured = check_almost_affine(&f, &fam).expect("family measures").max(1e-15);
    (fam, f, measured)
}

fn suite_pre_post(
    cfg: &ExperimentConfig,
    tol: f64,
    results: &mut Vec<SuiteResult>,
) -> CoreResult<()> {
    let (fam, _, eps) = verification_family(cfg, 1e-2);
    let nb = fam.base_points.len();
    let mut pre = Vec::new();
    let mut post = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xab);
    for b1 in (0..nb).step_by(3) {
        for b2 in (0..nb).step_by(5) {
            for (k1, k2) in [(0, 0), (0, 2), (1, 3), (2, 5)] {
                let (i, j) = ((b1, k1), (b2, k2));
                for kind in [
                    IneqCheck::PreA { fam: &fam, i, j, eps },
                    IneqCheck::PreB { fam: &fam, i, j, eps },
                ] {
                    if let Ok(rep) = verify_inequality(&kind) {
                        pre.push(rep);
                    }
                }
                use rand::Rng;
                let z = Point::from_vec(vec![rng.gen_range(-0.6..0.6)]);
                for a in [1.0, 2.0, 4.0] {
                    for kind in [
                        IneqCheck::PostA { fam: &fam, i, j, z: z.clone(), eps, a },
                        IneqCheck::PostB { fam: &fam, i, j, z: z.clone(), eps, a },
                    ] {
                        if let Ok(rep) = verify_inequality(&kind) {
                            post.push(rep);
                        }
                    }
                }
            }
        }
    }
    ineq_outcome(results, "pre-post/pre", tol, &pre);
    ineq_outcome(results, "pre-post/post", tol, &post);
    check(
        results,
        "pre-post/compat",
        check_compatible(&fam)?.0 <= fam.eps_nominal,
        format!("measured ε within nominal {}", fam.eps_nominal),
    );
    Ok(())
}

fn suite_ab_bound(
    cfg: &ExperimentConfig,
    tol: f64,
    results: &mut Vec<SuiteResult>,
) -> CoreResult<()> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xcd);
    let simplex = vec![
        Point::from_vec(vec![0.0, 0.0]),
        Point::from_vec(vec![1.0, 0.0]),
        Point::from_vec(vec![0.0, 1.0]),
    ];
    let a = AffineMap::new(
        nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 0.2, -0.3, 0.9]),
        Point::from_vec(vec![0.5, -0.5]),
    );
    let mut reps = Vec::new();
    for _ in 0..300 {
        let b = AffineMap::new(
            &a.linear + nalgebra::DMatrix::from_fn(2, 2, |_, _| rng.gen_range(-1e-3..1e-3)),
            &a.shift + Point::from_fn(2, |_, _| rng.gen_range(-1e-3..1e-3)),
        );
        let z = Point::from_fn(2, |_, _| rng.gen_range(-5.0..5.0));
        reps.push(verify_inequality(&IneqCheck::AbBound {
            a: &a,
            b: &b,
            v: &simplex,
            z,
        })?);
    }
    ineq_outcome(results, "ab-bound", tol, &reps);
    Ok(())
}

fn suite_holder(
    cfg: &ExperimentConfig,
    tol: f64,
    results: &mut Vec<SuiteResult>,
) -> CoreResult<()> {
    let (fam, f, eps) = verification_family(cfg, 5e-2);
    let x0 = fam.nearest_base_index(&Point::from_vec(vec![0.0]));
    let mut reps = Vec::new();
    for xi in 0..f.domain.points.len() {
        for yi in (xi + 1)..f.domain.points.len() {
            if let Ok(rep) = verify_inequality(&IneqCheck::Holder {
                fam: &fam,
                f: &f,
                x0,
                r0: 1.0,
                xi,
                yi,
                eps,
            }) {
                reps.push(rep);
            }
        }
    }
    ineq_outcome(results, "holder", tol, &reps);
    Ok(())
}

fn suite_inradius(
    cfg: &ExperimentConfig,
    tol: f64,
    results: &mut Vec<SuiteResult>,
) -> CoreResult<()> {
    let _ = cfg;
    let a = AffineMap::new(
        nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.02]),
        Point::from_vec(vec![0.3, -0.2]),
    );
    let eps = 2e-2;
    let x = Point::from_vec(vec![0.0, 0.0]);
    let mut dom = vec![x.clone()];
    let m = 21;
    for i in 0..m {
        for j in 0..m {
            let p = Point::from_vec(vec![
                -1.0 + 2.0 * i as f64 / (m - 1) as f64,
                -1.0 + 2.0 * j as f64 / (m - 1) as f64,
            ]);
            if p.norm() <= 1.0 && p.norm() > 1e-9 {
                dom.push(p);
            }
        }
    }
    let mut boundary = Vec::new();
    for i in 0..64 {
        let t = std::f64::consts::TAU * i as f64 / 64.0;
        boundary.push(dom.len());
        dom.push(Point::from_vec(vec![t.cos(), t.sin()]));
    }
    let nrm = a.operator_norm();
    let img: Vec<Point> = dom
        .iter()
        .map(|p| {
            let wiggle = Point::from_vec(vec![(5.0 * p[0]).sin(), (4.0 * p[1]).cos()])
                * (0.3 * eps * nrm);
            a.apply(p) + wiggle
        })
        .collect();
    let f = SampledMap::new(SampledSet::from_points(dom), img, "inradius-fixture");
    let rep = verify_inequality(&IneqCheck::Inradius {
        f: &f,
        a: &a,
        x_index: 0,
        r: 1.0,
        boundary: &boundary,
        eps,
        h: 1.1,
        t: 0.5,
    })?;
    ineq_outcome(results, "inradius", tol, &[rep]);
    Ok(())
}

fn suite_lemma_check(
    cfg: &ExperimentConfig,
    tol: f64,
    results: &mut Vec<SuiteResult>,
) -> CoreResult<()> {
    // Σ_k β^ctr(x, 10⁻ᵏ r₀)² against (400/ln 10)·∫ β² dr/r on a snowflake.
    let _ = cfg;
    let e = SampledSet::from_points(flatext::generate::snowflake_polyline(&[0.3], 5)?);
    let x = &e.points[e.points.len() / 2];
    let r0 = 0.4;
    let kmax = 2;
    let sum = flatness::dyadic_beta_sq_sum(&e, x, r0, 1, 10.0, kmax)?;
    let res = e.resolution();
    let integral = flatness::dini_beta_integral(&e, x, r0, 1, 48, (res * 2.0).max(r0 * 10f64.powi(-(kmax as i32))))?;
    let rhs = 400.0 / 10f64.ln() * integral;
    check(
        results,
        "lemma-check",
        sum <= rhs + tol,
        format!("sum {} ≤ bound {}", fmt(sum), fmt(rhs)),
    );
    Ok(())
}

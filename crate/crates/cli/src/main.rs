use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tcfree::bundle::RegionBundle;
use tcfree::certifier::{certify_polytope, collision_pairs, CertifyOptions};
use tcfree::pipeline::{run_pipeline, PipelineOptions};
use tcfree::plots::{emit_plots, raster_svg};
use tcfree::raster::{rasterize_tcspace, Raster};
use tcfree::regions::TcPolytope;
use tcfree::scene::{parse_scene, Scene};
use tcfree::soscomp::VerifyTolerances;

#[derive(Parser)]
#[command(name = "tcfree", version, about = "Certified collision-free regions in tangent configuration space")]
struct Cli {
    /// Worker threads; 0 uses one per core.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CertifyArgs {
    /// Total degree of the plane coefficients; defaults to the scene option.
    #[arg(long)]
    plane_degree: Option<u32>,
    /// Coordinate degree of the multiplier Gram basis; defaults to the scene option.
    #[arg(long)]
    basis_degree: Option<u32>,
    /// Do not retry failed pairs one basis degree higher.
    #[arg(long)]
    no_escalate: bool,
}

#[derive(Args, Clone)]
struct GrowArgs {
    #[command(flatten)]
    certify: CertifyArgs,
    /// Relative ellipsoid-volume gain that ends the alternation.
    #[arg(long, default_value_t = 0.02)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    /// Largest uniform contraction tried on a candidate region.
    #[arg(long, default_value_t = 0.3)]
    contract_max: f64,
    /// Side of the initial octagon around each seed.
    #[arg(long, default_value_t = 0.01)]
    octagon_side: f64,
    /// Random seed for the seeding multi-starts.
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
    /// Output directory for bundles, report and plots.
    #[arg(long, short, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Certify a polytope (JSON `{c, d, kinds}` or a bundle) for a scene.
    Certify {
        scene: PathBuf,
        region: PathBuf,
        #[command(flatten)]
        certify: CertifyArgs,
        /// Write a bundle for the certified region here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grow certified regions from small octagons around joint-space seeds
    /// given as comma-separated values; defaults to the scene's seeds.
    Grow {
        scene: PathBuf,
        #[arg(value_parser = parse_point)]
        seeds: Vec<Vec<f64>>,
        #[command(flatten)]
        grow: GrowArgs,
    },
    /// Like `grow`, starting from nonlinear seeding candidates.
    Seed {
        scene: PathBuf,
        #[arg(value_parser = parse_point)]
        points: Vec<Vec<f64>>,
        #[command(flatten)]
        grow: GrowArgs,
    },
    /// Rasterize the collision map of a two-joint scene.
    Raster {
        scene: PathBuf,
        #[arg(long, default_value_t = 200)]
        resolution: usize,
        /// Bundles to overlay on the SVG.
        #[arg(long)]
        bundles: Vec<PathBuf>,
        #[arg(long, short, default_value = "out")]
        out: PathBuf,
    },
    /// Re-verify a bundle from its file alone.
    Verify {
        bundle: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        eq_tol: f64,
        #[arg(long, default_value_t = 1e-7)]
        eig_tol: f64,
    },
}

fn parse_point(text: &str) -> Result<Vec<f64>, String> {
    text.split(',').map(|v| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"))).collect()
}

type AnyResult<T> = Result<T, Box<dyn std::error::Error>>;

fn certify_options(scene: &Scene, args: &CertifyArgs) -> CertifyOptions {
    let mut opts = scene.options.certify_options();
    if let Some(d) = args.plane_degree {
        opts.plane_degree = d;
    }
    if let Some(d) = args.basis_degree {
        opts.basis_degree = d;
    }
    if args.no_escalate {
        opts.escalate = false;
    }
    opts
}

fn read_region(path: &Path) -> AnyResult<TcPolytope> {
    let text = std::fs::read_to_string(path)?;
    match serde_json::from_str::<TcPolytope>(&text) {
        Ok(p) => Ok(p),
        Err(_) => Ok(RegionBundle::from_json(&text)?.polytope),
    }
}

fn certify(scene_path: &Path, region: &Path, args: &CertifyArgs, out: Option<&Path>) -> AnyResult<bool> {
    let scene = parse_scene(scene_path)?;
    let p = read_region(region)?;
    let pairs = collision_pairs(&scene)?;
    let opts = CertifyOptions { early_exit: false, ..certify_options(&scene, args) };
    let report = certify_polytope(&scene, &pairs, &p, &opts)?;
    for (pair, outcome) in pairs.iter().zip(&report.outcomes) {
        let gram = outcome.certificate().map(|c| c.max_gram).unwrap_or(0);
        println!(
            "{:<20} {:<20} {:<14} gram {gram}",
            scene.bodies[pair.a].name,
            scene.bodies[pair.b].name,
            outcome.label()
        );
    }
    println!("largest Gram block {}", report.max_gram());
    println!("{} in {:.2} s", if report.certified() { "certified" } else { "not certified" }, report.elapsed);
    if let (Some(out), true) = (out, report.certified()) {
        let seed = p.chebyshev_center()?.0;
        let bundle = RegionBundle {
            scene: scene.to_toml(),
            seed,
            polytope: p,
            certificates: report.certificates(),
            log: Vec::new(),
        };
        bundle.write(out)?;
    }
    Ok(report.certified())
}

fn grow(scene_path: &Path, seeds: &[Vec<f64>], args: &GrowArgs, use_seeding: bool) -> AnyResult<bool> {
    let scene = parse_scene(scene_path)?;
    let seeds = if seeds.is_empty() { scene.seeds.clone() } else { seeds.to_vec() };
    let mut opts = PipelineOptions {
        use_seeding,
        octagon_side: args.octagon_side,
        contract_max: args.contract_max,
        ..Default::default()
    }
    .with_certify(certify_options(&scene, &args.certify));
    opts.alternation.tol = args.tol;
    opts.alternation.max_iters = args.max_iters;
    opts.seeding.rng_seed = args.rng_seed;
    let (bundles, report) = run_pipeline(&scene, &seeds, &opts)?;
    std::fs::create_dir_all(&args.out)?;
    for (k, b) in bundles.iter().enumerate() {
        b.write(args.out.join(format!("region_{k}.json")))?;
    }
    let table = report.table();
    print!("{table}");
    std::fs::write(args.out.join("report.txt"), &table)?;
    std::fs::write(args.out.join("report.json"), serde_json::to_string_pretty(&report)?)?;
    let raster = if scene.dof() == 2 { Some(rasterize_tcspace(&scene, 200)?) } else { None };
    emit_plots(&args.out, &bundles, raster.as_ref())?;
    Ok(report.all_certified())
}

fn raster(scene_path: &Path, resolution: usize, bundles: &[PathBuf], out: &Path) -> AnyResult<bool> {
    let scene = parse_scene(scene_path)?;
    let r: Raster = rasterize_tcspace(&scene, resolution)?;
    let regions = bundles
        .iter()
        .map(|b| RegionBundle::read(b).map(|b| b.polytope))
        .collect::<tcfree::Result<Vec<_>>>()?;
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("raster.json"), serde_json::to_string(&r)?)?;
    std::fs::write(out.join("raster.svg"), raster_svg(&r, &regions)?)?;
    println!("{} of {} cells free", r.free_count(), resolution * resolution);
    if !regions.is_empty() {
        println!("coverage {:.4}", r.coverage(&regions));
        println!("collision cells inside regions {}", r.collisions_inside(&regions).len());
    }
    Ok(true)
}

fn verify(path: &Path, tol: VerifyTolerances) -> AnyResult<bool> {
    let check = RegionBundle::read(path)?.verify(tol)?;
    let worst_res = check.checks.iter().map(|c| c.max_residual).fold(0.0, f64::max);
    let worst_eig = check.checks.iter().map(|c| c.min_eig).fold(f64::INFINITY, f64::min);
    println!("pairs {}, largest residual {worst_res:.3e}, smallest eigenvalue {worst_eig:.3e}", check.pairs);
    for p in &check.problems {
        println!("problem: {p}");
    }
    println!("{}", if check.passed { "verified" } else { "FAILED" });
    Ok(check.passed)
}

fn run(cli: Cli) -> AnyResult<bool> {
    if cli.workers > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build_global()?;
    }
    match cli.command {
        Command::Certify { scene, region, certify: args, out } => certify(&scene, &region, &args, out.as_deref()),
        Command::Grow { scene, seeds, grow: args } => grow(&scene, &seeds, &args, false),
        Command::Seed { scene, points, grow: args } => grow(&scene, &points, &args, true),
        Command::Raster { scene, resolution, bundles, out } => raster(&scene, resolution, &bundles, &out),
        Command::Verify { bundle, eq_tol, eig_tol } => verify(&bundle, VerifyTolerances { eq: eq_tol, eig: eig_tol }),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use scenecomp::config::RunConfig;
use scenecomp::geometry::DepthImage;
use scenecomp::io::{
    load_labels, load_pool, load_scene, read_pfm_depth, read_pfm_prob, resolve, save_pool, save_scene, SceneFile,
};
use scenecomp::pipeline::{align_pool, compose, detect_layout, evaluate};
use scenecomp::synth::{synth_scene, SynthParams};

/// Compose indoor scenes from a depth image, layout planes and posed
/// candidate shapes.
#[derive(Parser)]
#[command(name = "scenecomp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Weights {
    Annotation,
    Retrieval,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic room with ground truth, inputs and a candidate pool.
    Synth {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Synthesis settings are read from the `[synth]` table.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Align every candidate of a pool to its region of the scene's depth.
    Align {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long, value_enum)]
        weights: Weights,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Defaults to `<candidates>.aligned.json` beside the input.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Detect layout planes with extents and openings; writes a scene file
    /// holding them as proposals.
    Layout {
        #[arg(long)]
        depth: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        /// Must contain a `[camera]` table.
        #[arg(long)]
        config: PathBuf,
        /// Defaults to `layout.json` beside the depth file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Select objects from a pool and layouts from the scene's proposals.
    Compose {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        pobject: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Search the whole pool instead of the pruned one.
        #[arg(long)]
        no_prune: bool,
        /// Defaults to `composed.json` beside the scene.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare a predicted scene with ground truth.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        voxel_res: Option<f64>,
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Observed depth for the visible/occluded split; defaults to the
        /// ground truth's depth reference.
        #[arg(long)]
        depth: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => Ok(RunConfig::load(p)?),
        None => Ok(RunConfig::default()),
    }
}

fn scene_depth(scene: &SceneFile, scene_path: &Path) -> Result<DepthImage> {
    let r = scene
        .depth_ref
        .as_deref()
        .ok_or_else(|| anyhow!("{} names no depth file", scene_path.display()))?;
    Ok(read_pfm_depth(&resolve(scene_path, r))?)
}

/// Reference to `target` from a file written at `from`.
fn reference(from: &Path, target: &Path) -> Result<String> {
    let dir = |p: &Path| -> Result<PathBuf> {
        let parent = p
            .parent()
            .filter(|d| !d.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        parent
            .canonicalize()
            .with_context(|| format!("resolving {}", parent.display()))
    };
    let name = target
        .file_name()
        .ok_or_else(|| anyhow!("{} is not a file", target.display()))?;
    let target_dir = dir(target)?;
    if dir(from)? == target_dir {
        Ok(name.to_string_lossy().into_owned())
    } else {
        Ok(target_dir.join(name).to_string_lossy().into_owned())
    }
}

fn beside(path: &Path, name: &str) -> PathBuf {
    path.parent().unwrap_or(Path::new("")).join(name)
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Synth { seed, out, config: cfg } => {
            let mut cfg = config(cfg.as_deref())?;
            let params = SynthParams {
                seed,
                ..cfg.synth.clone()
            };
            let s = synth_scene(&params)?;
            s.write(&out)?;
            cfg.synth = params;
            cfg.camera = Some(s.scene.camera);
            cfg.save(&out.join("config.toml"))?;
            println!(
                "wrote {}: {} objects, {} candidates, {} layouts",
                out.display(),
                s.scene.objects.len(),
                s.pool.entries.len(),
                s.scene.layouts.len()
            );
        }
        Command::Align {
            scene,
            candidates,
            weights,
            config: cfg,
            out,
        } => {
            let cfg = config(cfg.as_deref())?;
            let sc = load_scene(&scene)?;
            let depth = scene_depth(&sc, &scene)?;
            let pool = load_pool(&candidates)?;
            let w = match weights {
                Weights::Annotation => cfg.fit.annotation,
                Weights::Retrieval => cfg.fit.retrieval,
            };
            let aligned = align_pool(&pool, &depth, &sc.camera, &w, &cfg.align)?;
            let out = out.unwrap_or_else(|| {
                let stem = candidates.file_stem().unwrap_or_default().to_string_lossy();
                beside(&candidates, &format!("{stem}.aligned.json"))
            });
            save_pool(&aligned, &out)?;
            for e in &aligned.entries {
                println!("{} energy = {}", e.spec.id, e.spec.fitting_energy);
            }
        }
        Command::Layout {
            depth,
            labels,
            config: cfg,
            out,
        } => {
            let cfg = config(Some(&cfg))?;
            let k = cfg
                .camera
                .ok_or_else(|| anyhow!("the configuration has no [camera] table"))?;
            let d = read_pfm_depth(&depth)?;
            let l = load_labels(&labels)?;
            let layouts = detect_layout(&d, &k, &l, &cfg.layout)?;
            let out = out.unwrap_or_else(|| beside(&depth, "layout.json"));
            let mut sc = SceneFile::new(k);
            sc.layouts = layouts;
            sc.depth_ref = Some(reference(&out, &depth)?);
            sc.labels_ref = Some(reference(&out, &labels)?);
            save_scene(&sc, &out)?;
            for p in &sc.layouts {
                println!("{} offset = {} score = {}", p.category.name(), p.offset, p.score);
            }
        }
        Command::Compose {
            scene,
            pool,
            pobject,
            config: cfg,
            no_prune,
            out,
        } => {
            let cfg = config(cfg.as_deref())?;
            let base = load_scene(&scene)?;
            let depth = scene_depth(&base, &scene)?;
            let p = read_pfm_prob(&pobject)?;
            let candidates = load_pool(&pool)?;
            let prune = (!no_prune).then_some(&cfg.prune);
            let c = compose(&base, &candidates, &depth, &p, &cfg.selection, prune)?;
            let out = out.unwrap_or_else(|| beside(&scene, "composed.json"));
            let mut result = c.scene;
            let depth_path = resolve(&scene, base.depth_ref.as_deref().unwrap_or_default());
            result.depth_ref = Some(reference(&out, &depth_path)?);
            result.labels_ref = match &base.labels_ref {
                Some(r) => Some(reference(&out, &resolve(&scene, r))?),
                None => None,
            };
            result.p_object_ref = Some(reference(&out, &pobject)?);
            save_scene(&result, &out)?;
            println!(
                "selected objects = {:?}",
                result.objects.iter().map(|o| o.id).collect::<Vec<_>>()
            );
            println!("selected layouts = {}", result.layouts.len());
            println!("cost = {}", c.hypothesis.cost);
            println!("cost.depth = {}", c.hypothesis.terms.depth);
            println!("cost.object_prob = {}", c.hypothesis.terms.object_prob);
            println!("cost.region_overlap = {}", c.hypothesis.terms.region_overlap);
            println!("cost.volume_overlap = {}", c.hypothesis.terms.volume_overlap);
            println!("stage.greedy = {}", c.trace.greedy);
            println!("stage.hill_climb = {}", c.trace.hill_climb);
            println!("stage.swap = {}", c.trace.swap);
        }
        Command::Eval {
            pred,
            gt,
            voxel_res,
            tolerance,
            config: cfg,
            depth,
            json,
        } => {
            let mut params = config(cfg.as_deref())?.eval;
            if let Some(r) = voxel_res {
                params.voxel_resolution = r;
            }
            if let Some(t) = tolerance {
                params.tolerance = t;
            }
            let p = load_scene(&pred)?;
            let g = load_scene(&gt)?;
            let observed = match (&depth, &g.depth_ref) {
                (Some(d), _) => Some(read_pfm_depth(d)?),
                (None, Some(r)) => Some(read_pfm_depth(&resolve(&gt, r))?),
                (None, None) => None,
            };
            let report = evaluate(&p, &g, observed.as_ref(), &params)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{report}");
            }
        }
    }
    Ok(())
}

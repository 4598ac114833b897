use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use geomatch::diagram::{build_diagram, verify_diagram, DiagramKind, FaceRegion, MatchingDiagram};
use geomatch::io::{
    export_svg, gen_grid_instance, gen_random_instance, parse_instance, write_instance,
    write_instance_json, InstanceFile, SvgOptions,
};
use geomatch::search::{
    const_factor_search, disk_eating_search, eps_optimum_search, random_sample_search,
};
use geomatch::stationary::{brute_force_oracle, solve_exact};
use geomatch::{CostExponent, Instance, TranslationVector};

#[derive(Parser)]
#[command(name = "geomatch", version, about = "Partial matching of planar point sets under translation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal k-matching at a fixed translation.
    Solve(SolveArgs),
    /// Search for a good translation.
    Optimize(OptimizeArgs),
    /// Build, query or verify an approximate matching diagram.
    #[command(subcommand)]
    Diagram(DiagramCommand),
    /// Generate an instance.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Draw a diagram as SVG.
    ExportSvg(ExportArgs),
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Translation as `dx,dy`.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_translation)]
    t: TranslationVector,
    /// Min-cost flow solver (default).
    #[arg(long, conflicts_with = "oracle")]
    exact: bool,
    /// Enumerate every k-matching instead.
    #[arg(long)]
    oracle: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Exhaustive,
    Grid,
    Random,
    Cluster,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum)]
    algo: Algo,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Rounds of the random search.
    #[arg(long, default_value_t = 4)]
    samples: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Voronoi3,
    Eps,
    ClusterEps,
    ClusterVoronoi,
}

impl From<Kind> for DiagramKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Voronoi3 => DiagramKind::Voronoi3,
            Kind::Eps => DiagramKind::EpsT,
            Kind::ClusterEps => DiagramKind::EpsCluster,
            Kind::ClusterVoronoi => DiagramKind::ClusterVoronoi,
        }
    }
}

#[derive(Subcommand)]
enum DiagramCommand {
    /// Build a diagram and write it as JSON.
    Build {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "voronoi3")]
        kind: Kind,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Locate a translation and report its face matching.
    Query {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        diagram: PathBuf,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_translation)]
        t: TranslationVector,
        /// Write newly memoized faces back to the diagram file.
        #[arg(long)]
        save: bool,
    },
    /// Compare face matchings with exact optima on sampled translations.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        diagram: PathBuf,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum GenCommand {
    /// Uniform random points in a square.
    Random {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "2", value_parser = parse_exponent)]
        p: CostExponent,
        #[arg(long = "box", default_value_t = 10.0)]
        box_side: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: GenOut,
    },
    /// Two unit grids.
    Grid {
        #[arg(long)]
        m_side: usize,
        #[arg(long)]
        n_side: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "2", value_parser = parse_exponent)]
        p: CostExponent,
        #[command(flatten)]
        out: GenOut,
    },
}

#[derive(Args)]
struct GenOut {
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write JSON instead of the text format.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    diagram: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Leave out the grid lines.
    #[arg(long)]
    no_grid: bool,
}

fn parse_translation(s: &str) -> std::result::Result<TranslationVector, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected dx,dy, got {s:?}"));
    }
    let parse = |v: &str| {
        v.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| format!("bad coordinate {v:?}"))
    };
    Ok(TranslationVector::new(parse(parts[0])?, parse(parts[1])?))
}

fn parse_exponent(s: &str) -> std::result::Result<CostExponent, String> {
    s.parse().map_err(|e: geomatch::Error| e.to_string())
}

fn load_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file = parse_instance(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(file.instance)
}

fn load_diagram(path: &Path) -> Result<MatchingDiagram> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    MatchingDiagram::from_json(&text).with_context(|| format!("loading {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn line(value: Value) {
    println!("{value}");
}

fn region_json(region: FaceRegion) -> Value {
    match region {
        FaceRegion::WholeCell => json!({"type": "WHOLE_CELL"}),
        FaceRegion::Central { i, j } => json!({"type": "CENTRAL_CELL", "i": i, "j": j}),
        FaceRegion::Annulus { level, i, j } => {
            json!({"type": "ANNULUS_CELL", "level": level, "i": i, "j": j})
        }
        FaceRegion::Outer => json!({"type": "OUTER"}),
    }
}

fn solve(args: SolveArgs) -> Result<()> {
    let inst = load_instance(&args.instance)?;
    let (r, method) = if args.oracle {
        (brute_force_oracle(&inst.a, &inst.b, inst.k, inst.p, args.t)?, "oracle")
    } else {
        (solve_exact(&inst.a, &inst.b, inst.k, inst.p, args.t)?, "exact")
    };
    line(json!({
        "cost": r.cost,
        "method": method,
        "pairs": r.matching,
        "translation": args.t,
    }));
    Ok(())
}

fn optimize(args: OptimizeArgs) -> Result<()> {
    let inst = load_instance(&args.instance)?;
    let result = match args.algo {
        Algo::Exhaustive => const_factor_search(&inst, args.delta)?,
        Algo::Grid => eps_optimum_search(&inst, args.eps)?,
        Algo::Random => random_sample_search(&inst, args.eps, args.samples, args.seed)?,
        Algo::Cluster => disk_eating_search(&inst, args.eps, args.delta)?,
    };
    line(serde_json::to_value(&result)?);
    Ok(())
}

fn diagram(cmd: DiagramCommand) -> Result<()> {
    match cmd {
        DiagramCommand::Build {
            instance,
            kind,
            eps,
            delta,
            out,
        } => {
            let inst = load_instance(&instance)?;
            let d = build_diagram(&inst, kind.into(), eps, delta)?;
            let text = d.to_json() + "\n";
            match out {
                Some(path) => {
                    emit(Some(&path), &text)?;
                    line(json!({
                        "eps": d.eps(),
                        "faceCount": d.face_count(),
                        "guaranteeFactor": d.guarantee_factor(),
                        "kind": d.kind(),
                        "levelCount": d.level_count(),
                        "sites": d.sites().len(),
                    }));
                }
                None => emit(None, &text)?,
            }
        }
        DiagramCommand::Query {
            instance,
            diagram,
            t,
            save,
        } => {
            let inst = load_instance(&instance)?;
            let d = load_diagram(&diagram)?;
            let ans = d.query(&inst, t)?;
            line(json!({
                "center": ans.face.center_translation,
                "cost": ans.cost,
                "matching": ans.matching,
                "region": region_json(ans.face.region),
                "site": ans.face.site_index,
                "translation": t,
            }));
            if save {
                emit(Some(&diagram), &(d.to_json() + "\n"))?;
            }
        }
        DiagramCommand::Verify {
            instance,
            diagram,
            samples,
            seed,
        } => {
            let inst = load_instance(&instance)?;
            let d = load_diagram(&diagram)?;
            let report = verify_diagram(&d, &inst, samples, seed)?;
            let mut v = serde_json::to_value(&report)?;
            v["guaranteeFactor"] = json!(d.guarantee_factor());
            v["kind"] = json!(d.kind());
            line(v);
        }
    }
    Ok(())
}

fn gen(cmd: GenCommand) -> Result<()> {
    let (file, out): (InstanceFile, GenOut) = match cmd {
        GenCommand::Random {
            m,
            n,
            k,
            p,
            box_side,
            seed,
            out,
        } => (gen_random_instance(m, n, k, p, box_side, seed)?, out),
        GenCommand::Grid {
            m_side,
            n_side,
            k,
            p,
            out,
        } => (gen_grid_instance(m_side, n_side, k, p)?, out),
    };
    let text = if out.json {
        write_instance_json(&file) + "\n"
    } else {
        write_instance(&file)
    };
    emit(out.out.as_deref(), &text)
}

fn export(args: ExportArgs) -> Result<()> {
    let d = load_diagram(&args.diagram)?;
    let options = SvgOptions {
        grid: !args.no_grid,
        ..SvgOptions::default()
    };
    emit(args.out.as_deref(), &export_svg(&d, &options))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve(a) => solve(a),
        Command::Optimize(a) => optimize(a),
        Command::Diagram(c) => diagram(c),
        Command::Gen(c) => gen(c),
        Command::ExportSvg(a) => export(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

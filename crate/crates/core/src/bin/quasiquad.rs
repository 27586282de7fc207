use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};

use quasiquad::diskquad::{DiskTable, B_MAX, I_MAX};
use quasiquad::mesh::io::{trimesh_vtk_string, write_obj, write_vtk};
use quasiquad::patterns::Catalogue;
use quasiquad::pipeline::{self, Config};
use quasiquad::svg::{render_svg, SvgOptions};
use quasiquad::PlanarModel;

#[derive(Parser)]
#[command(name = "quasiquad", version, about = "Quasi-structured quad meshing of planar models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mesh a planar model given as JSON.
    Mesh(MeshArgs),
    /// Enumerate disk quadrangulations and write the table.
    GenDiskTable {
        #[arg(long, default_value_t = B_MAX)]
        b_max: usize,
        #[arg(long, default_value_t = I_MAX)]
        i_max: usize,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct MeshArgs {
    model: PathBuf,
    /// Total number of quads aimed for.
    #[arg(long, default_value_t = 1000)]
    target_quads: usize,
    /// Maximum size gradation.
    #[arg(long, default_value_t = 0.3)]
    gmax: f64,
    /// Diffusion levels of the cross field solver.
    #[arg(long, default_value_t = 5)]
    levels: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Quad mesh in OBJ format.
    #[arg(long, short, default_value = "mesh.obj")]
    out: PathBuf,
    #[arg(long)]
    vtk: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Write the background size and cross fields of every face as VTK.
    #[arg(long)]
    dump_fields: bool,
    /// Wall-clock limit of the quasi-structuring of one face, in seconds.
    #[arg(long, default_value_t = 300.0)]
    max_time_per_face: f64,
    /// Extra patterns (JSON) appended to the built-in catalogue.
    #[arg(long)]
    patterns: Option<PathBuf>,
    /// Worker threads for the per-face stages.
    #[arg(long)]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("QUASIQUAD_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Mesh(args) => mesh(args),
        Command::GenDiskTable { b_max, i_max, out } => gen_disk_table(b_max, i_max, out).map(|()| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn mesh(args: MeshArgs) -> quasiquad::Result<bool> {
    let model = PlanarModel::from_json_file(&args.model)?;
    let mut catalogue = Catalogue::builtin();
    if let Some(p) = &args.patterns {
        catalogue.extend_from_file(p)?;
    }
    if !(args.max_time_per_face >= 0.0) {
        return Err(quasiquad::Error::Input("--max-time-per-face must be non-negative".into()));
    }
    let config = Config {
        target_quads: args.target_quads,
        g_max: args.gmax,
        levels: args.levels,
        seed: args.seed,
        max_time_per_face: Duration::from_secs_f64(args.max_time_per_face),
        jobs: args.jobs,
        ..Config::default()
    };
    let out = pipeline::run(&model, &config, &catalogue, DiskTable::builtin())?;
    write_obj(&out.mesh, &args.out)?;
    if let Some(p) = &args.vtk {
        write_vtk(&out.mesh, p)?;
    }
    if let Some(p) = &args.svg {
        std::fs::write(p, render_svg(&out.mesh, &out.singularities(), &SvgOptions::default()))?;
    }
    if let Some(p) = &args.stats {
        std::fs::write(p, out.stats.to_json_string())?;
    }
    if args.dump_fields {
        for f in &out.faces {
            let p = sibling(&args.out, &format!("face{}.fields.vtk", f.stats.id));
            std::fs::write(p, trimesh_vtk_string(&f.fields.background))?;
        }
    }
    let t = &out.stats.totals;
    println!(
        "{} quads, {} vertices, SICN min {:.3} avg {:.3}, irregular {} -> {}, {:.0} ms",
        t.n_quad, t.n_vert, t.sicn_min, t.sicn_avg, t.irregular_init, t.irregular_final, t.time_ms
    );
    Ok(out.success())
}

/// `dir/stem.suffix` next to `path`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("mesh");
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn gen_disk_table(b_max: usize, i_max: usize, out: Option<PathBuf>) -> quasiquad::Result<()> {
    let table = DiskTable::generate(b_max, i_max);
    for ((b, i), n) in table.counts() {
        println!("b={b:2} i={i} count={n}");
    }
    if let Some(path) = out {
        std::fs::write(path, table.to_json_string())?;
    }
    Ok(())
}

//! Command-line front end: build elements, run the verification suite, and export
//! traces and field samples.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use polyhdiv::element::{DualClass, Element, DEFAULT_TOL_ZERO};
use polyhdiv::geometry::{load_polygon, Polygon};
use polyhdiv::hkspace::{
    build_space, constructed_count, dimension, reduced_dimension_formula, ElementSpec, Generator, NormalConfig,
    Setting,
};
use polyhdiv::polyspace::ProjectorKind;
use polyhdiv::verify::{run_suite, Thresholds};
use polyhdiv::{Error, Result};
use serde::{Deserialize, Serialize};

pub const ARCHIVE_FORMAT: &str = "polyhdiv-element";
pub const ARCHIVE_VERSION: u32 = 1;
pub const METADATA_FILE: &str = "element.json";

#[derive(Debug, Parser)]
#[command(name = "polyhdiv", version, about = "H(div)-conforming elements on simple polygons")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the nodal basis and write an element archive.
    Build(BuildArgs),
    /// Run the verification suite and write a report.
    Verify(VerifyArgs),
    /// Write normal-trace tables of dual basis functions from an archive.
    Trace(TraceArgs),
    /// Write dual basis values at the sub-mesh nodes from an archive.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SpecArgs {
    /// Polygon file (`{"vertices": [[x, y], ...]}`).
    #[arg(long)]
    pub polygon: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value = "general")]
    pub setting: Setting,
    /// Normal functionals: `ia` (moments) or `ib` (midpoint value).
    #[arg(long, default_value = "ia")]
    pub config: NormalConfig,
    #[arg(long, default_value = "hermite")]
    pub projector: ProjectorKind,
    /// Sub-mesh size (default: diameter / 16).
    #[arg(long)]
    pub h_target: Option<f64>,
    /// Lagrange order of the local solver (default: max(2, k + 1)).
    #[arg(long)]
    pub fe_order: Option<usize>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

impl SpecArgs {
    pub fn spec(&self) -> Result<ElementSpec> {
        let mut s = match self.setting {
            Setting::General => ElementSpec::general(self.k),
            Setting::Reduced => ElementSpec::reduced(self.k),
        };
        s = s.with_config(self.config).with_projector(self.projector);
        if let Some(h) = self.h_target {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::Usage(format!("--h-target must be positive, got {h}")));
            }
            s = s.with_h_target(h);
        }
        if let Some(r) = self.fe_order {
            s = s.with_fe_order(r);
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// JSON file with threshold overrides (any subset of the fields).
    #[arg(long)]
    pub thresholds: Option<PathBuf>,
    #[arg(long)]
    pub tol_kron: Option<f64>,
    #[arg(long)]
    pub tol_vanish: Option<f64>,
    #[arg(long)]
    pub tol_conformity: Option<f64>,
    /// Number of meshes in the refinement study.
    #[arg(long)]
    pub levels: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct TraceArgs {
    /// Directory written by `build`.
    #[arg(long)]
    pub archive: PathBuf,
    /// One dual: its trace on every edge.
    #[arg(long, conflicts_with = "edge")]
    pub dof: Option<usize>,
    /// Every dual attached to this edge, sampled on the edge.
    #[arg(long)]
    pub edge: Option<usize>,
    #[arg(long, default_value_t = 33)]
    pub samples: usize,
    /// Output directory (default: the archive directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write a small matplotlib script plotting the tables.
    #[arg(long)]
    pub plot_script: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub archive: PathBuf,
    #[arg(long)]
    pub dof: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Shape and file of a stored matrix (row-major little-endian f64).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRef {
    pub file: String,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub normal: usize,
    pub degenerate_normal: usize,
    pub constant_lift: usize,
    pub internal: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionRecord {
    /// Closed-form dimension (the quoted formula in the reduced setting).
    pub formula: i64,
    pub constructed: usize,
    pub rank: usize,
    pub discrepancy: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveMetadata {
    pub format: String,
    pub version: u32,
    pub polygon: Polygon,
    pub spec: ElementSpec,
    pub n_basis: usize,
    pub cond: f64,
    pub kronecker_defect: f64,
    pub counts: ClassCounts,
    pub classes: Vec<DualClass>,
    pub dofs: Vec<String>,
    pub generators: Vec<Generator>,
    pub dimension: DimensionRecord,
    pub transfer: MatrixRef,
    pub inverse: MatrixRef,
}

/// A loaded archive: metadata plus the transfer matrix and its inverse.
#[derive(Debug, Clone)]
pub struct Archive {
    pub meta: ArchiveMetadata,
    pub transfer: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
}

impl Archive {
    /// `max |T C − I|` from the stored matrices.
    pub fn kronecker_defect(&self) -> f64 {
        let n = self.transfer.nrows();
        (&self.transfer * &self.inverse - DMatrix::<f64>::identity(n, n)).abs().max()
    }

    /// Rebuilds the element from polygon and spec, keeping the stored dual coefficients.
    pub fn rebuild(&self) -> Result<Element> {
        let space = Arc::new(build_space(&self.meta.polygon, &self.meta.spec)?);
        let mut el = Element::from_space_with_tol(space, DEFAULT_TOL_ZERO)?;
        let n = el.len();
        if self.inverse.shape() != (n, n) {
            let (r, c) = self.inverse.shape();
            return Err(Error::Format(format!("archive has {r}×{c} coefficients for {n} duals")));
        }
        el.basis.coeffs = self.inverse.clone();
        Ok(el)
    }
}

fn to_le_bytes(m: &DMatrix<f64>) -> Vec<u8> {
    // row-major on disk
    (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])).flat_map(f64::to_le_bytes).collect()
}

fn from_le_bytes(rows: usize, cols: usize, bytes: &[u8]) -> Option<DMatrix<f64>> {
    if bytes.len() != rows * cols * 8 {
        return None;
    }
    let v: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Some(DMatrix::from_row_slice(rows, cols, &v))
}

fn count(classes: &[DualClass]) -> ClassCounts {
    let c = |k| classes.iter().filter(|&&x| x == k).count();
    ClassCounts {
        normal: c(DualClass::Normal),
        degenerate_normal: c(DualClass::DegenerateNormal),
        constant_lift: c(DualClass::ConstantLift),
        internal: c(DualClass::Internal),
    }
}

fn dimension_record(el: &Element) -> Result<DimensionRecord> {
    let spec = &el.space.spec;
    let n = el.space.polygon.n_faces();
    let rank = el.space.gram_rank().0;
    let constructed = constructed_count(spec, n)?;
    let formula = match spec.setting {
        Setting::General => dimension(spec, n)? as i64,
        Setting::Reduced => reduced_dimension_formula(spec.k, n),
    };
    Ok(DimensionRecord { formula, constructed, rank, discrepancy: formula != rank as i64 })
}

fn write_matrix(dir: &Path, name: &str, m: &DMatrix<f64>) -> Result<MatrixRef> {
    fs::write(dir.join(name), to_le_bytes(m))?;
    Ok(MatrixRef { file: name.into(), rows: m.nrows(), cols: m.ncols() })
}

fn read_matrix(dir: &Path, r: &MatrixRef) -> Result<DMatrix<f64>> {
    let bytes = fs::read(dir.join(&r.file))?;
    from_le_bytes(r.rows, r.cols, &bytes)
        .ok_or_else(|| Error::Format(format!("{} does not hold a {}×{} matrix", r.file, r.rows, r.cols)))
}

/// Writes `element.json`, `transfer.bin` and `inverse.bin` into `dir`.
pub fn write_archive(el: &Element, dir: &Path) -> Result<ArchiveMetadata> {
    fs::create_dir_all(dir)?;
    let transfer = write_matrix(dir, "transfer.bin", &el.transfer.matrix)?;
    let inverse = write_matrix(dir, "inverse.bin", &el.basis.coeffs)?;
    let mut spec = el.space.spec;
    spec.normal_config = el.dofs.config;
    let meta = ArchiveMetadata {
        format: ARCHIVE_FORMAT.into(),
        version: ARCHIVE_VERSION,
        polygon: (*el.space.polygon).clone(),
        spec,
        n_basis: el.len(),
        cond: el.basis.cond,
        kronecker_defect: el.basis.kronecker_defect,
        counts: count(&el.basis.classes),
        classes: el.basis.classes.clone(),
        dofs: el.dofs.all().map(|d| d.label()).collect(),
        generators: el.space.generators.clone(),
        dimension: dimension_record(el)?,
        transfer,
        inverse,
    };
    fs::write(dir.join(METADATA_FILE), serde_json::to_string_pretty(&meta)?)?;
    Ok(meta)
}

pub fn read_archive(dir: &Path) -> Result<Archive> {
    let text = fs::read_to_string(dir.join(METADATA_FILE))?;
    let meta: ArchiveMetadata = serde_json::from_str(&text)?;
    if meta.format != ARCHIVE_FORMAT || meta.version != ARCHIVE_VERSION {
        return Err(Error::Format(format!("unsupported archive {} v{}", meta.format, meta.version)));
    }
    let transfer = read_matrix(dir, &meta.transfer)?;
    let inverse = read_matrix(dir, &meta.inverse)?;
    Ok(Archive { meta, transfer, inverse })
}

/// Summary printed by `build`.
#[derive(Debug, Serialize)]
struct BuildSummary<'a> {
    archive: String,
    n_basis: usize,
    cond: f64,
    kronecker_defect: f64,
    counts: &'a ClassCounts,
    dimension: &'a DimensionRecord,
}

pub fn cmd_build(a: &BuildArgs, out: &mut dyn Write) -> Result<i32> {
    let p = load_polygon(&a.spec.polygon)?;
    let spec = a.spec.spec()?;
    let el = Element::build(&p, &spec)?;
    let meta = write_archive(&el, &a.spec.out)?;
    let s = BuildSummary {
        archive: a.spec.out.display().to_string(),
        n_basis: meta.n_basis,
        cond: meta.cond,
        kronecker_defect: meta.kronecker_defect,
        counts: &meta.counts,
        dimension: &meta.dimension,
    };
    writeln!(out, "{}", serde_json::to_string_pretty(&s)?)?;
    Ok(0)
}

pub fn thresholds_for(a: &VerifyArgs) -> Result<Thresholds> {
    let mut th = match &a.thresholds {
        Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
        None => Thresholds::default(),
    };
    th.seed = a.spec.seed;
    if let Some(v) = a.tol_kron {
        th.tol_kron = v;
    }
    if let Some(v) = a.tol_vanish {
        th.tol_vanish = v;
    }
    if let Some(v) = a.tol_conformity {
        th.tol_conformity = v;
    }
    if let Some(v) = a.levels {
        if v == 0 {
            return Err(Error::Usage("--levels must be at least 1".into()));
        }
        th.levels = v;
    }
    Ok(th)
}

pub fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let p = load_polygon(&a.spec.polygon)?;
    let spec = a.spec.spec()?;
    let th = thresholds_for(a)?;
    let report = run_suite(&p, &spec, &th);
    fs::create_dir_all(&a.spec.out)?;
    fs::write(a.spec.out.join("report.json"), report.to_json())?;
    write!(out, "{}", report.summary())?;
    writeln!(out, "{}", if report.passed { "all checks passed" } else { "checks FAILED" })?;
    Ok(match &report.error {
        Some(e) if INPUT_KINDS.contains(&e.kind.as_str()) => 2,
        Some(_) => 3,
        None if report.passed => 0,
        None => 1,
    })
}

const INPUT_KINDS: [&str; 5] = ["GeometryError", "AdmissibilityError", "UsageError", "FormatError", "IoError"];

fn sample_ts(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5];
    }
    (0..n).map(|s| s as f64 / (n - 1) as f64).collect()
}

/// CSV with columns `edge,t,x,y,phi_1,phi_2,phi_dot_n`.
pub fn trace_table(el: &Element, dual: usize, edges: &[usize], samples: usize) -> String {
    let mut s = String::from("edge,t,x,y,phi_1,phi_2,phi_dot_n\n");
    for &e in edges {
        let ed = el.space.polygon.edge(e);
        for t in sample_ts(samples) {
            let x = ed.point(t);
            let v = el.trace(dual, e, t);
            let vn = v[0] * ed.normal[0] + v[1] * ed.normal[1];
            s.push_str(&format!("{e},{t:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{vn:.17e}\n", x[0], x[1], v[0], v[1]));
        }
    }
    s
}

const PLOT_SCRIPT: &str = r#"import csv, glob, sys
import matplotlib.pyplot as plt

for path in sorted(glob.glob(sys.argv[1] + "/trace_dof_*.csv" if len(sys.argv) > 1 else "trace_dof_*.csv")):
    rows = list(csv.DictReader(open(path)))
    edges = sorted({int(r["edge"]) for r in rows})
    for e in edges:
        pts = [r for r in rows if int(r["edge"]) == e]
        plt.plot([e + float(r["t"]) for r in pts], [float(r["phi_dot_n"]) for r in pts], label=f"{path} edge {e}")
plt.xlabel("edge + t")
plt.ylabel("phi . n")
plt.axhline(0.0, color="k", lw=0.5)
plt.show()
"#;

pub fn cmd_trace(a: &TraceArgs, out: &mut dyn Write) -> Result<i32> {
    let arch = read_archive(&a.archive)?;
    let n = arch.meta.n_basis;
    let nf = arch.meta.polygon.n_faces();
    if a.samples == 0 {
        return Err(Error::Usage("--samples must be positive".into()));
    }
    let el = arch.rebuild()?;
    let jobs: Vec<(usize, Vec<usize>)> = match (a.dof, a.edge) {
        (Some(i), _) => {
            if i >= n {
                return Err(Error::Usage(format!("--dof {i} out of range (element has {n} duals)")));
            }
            vec![(i, (0..nf).collect())]
        }
        (None, Some(e)) => {
            if e >= nf {
                return Err(Error::Usage(format!("--edge {e} out of range (polygon has {nf} edges)")));
            }
            el.dofs.edge_range(e).map(|i| (i, vec![e])).collect()
        }
        (None, None) => return Err(Error::Usage("give --dof or --edge".into())),
    };
    let dir = a.out.clone().unwrap_or_else(|| a.archive.clone());
    fs::create_dir_all(&dir)?;
    for (i, edges) in &jobs {
        let path = dir.join(format!("trace_dof_{i}.csv"));
        fs::write(&path, trace_table(&el, *i, edges, a.samples))?;
        writeln!(out, "{}", path.display())?;
    }
    if a.plot_script {
        let path = dir.join("plot_traces.py");
        fs::write(&path, PLOT_SCRIPT)?;
        writeln!(out, "{}", path.display())?;
    }
    Ok(0)
}

/// CSV with columns `node,x,y,phi_1,phi_2` at the sub-mesh vertices.
pub fn field_table(el: &Element, dual: usize) -> Result<String> {
    let mesh = &el.space.fe.mesh;
    let mut s = String::from("node,x,y,phi_1,phi_2\n");
    for (i, &x) in mesh.nodes.iter().enumerate() {
        let v = if mesh.tags[i].is_boundary() {
            // boundary nodes carry the exact data of the nearest edge
            let (e, t) = (0..mesh.polygon.n_faces())
                .map(|e| {
                    let (d, t) = mesh.polygon.edge(e).distance(x);
                    (d, e, t)
                })
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .map(|(_, e, t)| (e, t))
                .expect("polygon has edges");
            el.trace(dual, e, t)
        } else {
            el.eval_basis(dual, x)?
        };
        s.push_str(&format!("{i},{:.17e},{:.17e},{:.17e},{:.17e}\n", x[0], x[1], v[0], v[1]));
    }
    Ok(s)
}

pub fn cmd_export(a: &ExportArgs, out: &mut dyn Write) -> Result<i32> {
    let arch = read_archive(&a.archive)?;
    if a.dof >= arch.meta.n_basis {
        return Err(Error::Usage(format!("--dof {} out of range (element has {} duals)", a.dof, arch.meta.n_basis)));
    }
    let el = arch.rebuild()?;
    let path = a.out.clone().unwrap_or_else(|| a.archive.join(format!("field_dof_{}.csv", a.dof)));
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(&path, field_table(&el, a.dof)?)?;
    writeln!(out, "{}", path.display())?;
    Ok(0)
}

/// Machine-readable error record written to stderr.
#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorOutput {
    pub error: polyhdiv::verify::ErrorRecord,
}

/// Caps rayon's pool from `POLYHDIV_THREADS` (ignored when unset or invalid).
pub fn configure_threads() {
    if let Some(n) = std::env::var("POLYHDIV_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Runs a parsed command; returns the process exit status.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let r = match &cli.command {
        Command::Build(a) => cmd_build(a, out),
        Command::Verify(a) => cmd_verify(a, out),
        Command::Trace(a) => cmd_trace(a, out),
        Command::Export(a) => cmd_export(a, out),
    };
    match r {
        Ok(code) => code,
        Err(e) => {
            let rec = ErrorOutput { error: (&e).into() };
            let _ = writeln!(err, "{}", serde_json::to_string(&rec).unwrap_or_else(|_| e.to_string()));
            if e.is_input_error() {
                2
            } else {
                3
            }
        }
    }
}

//! nullstring-lab: classify, verify and scan metric-definition files.
//!
//! Exit codes: 0 ok, 1 a check failed, 2 bad input, 3 no usable sample point.

mod grid;
mod report;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use nullstring_core::catalog::{
    all_families, run_check, CheckKind, CheckResult, ClassificationRun, MetricFile, MetricInstance, PointFlag,
};
use nullstring_core::{Error, Mode, Scalar};

use grid::Grid;
use report::{digest, AxisJson, Cell, RunHeader, RunReport, ScanReport, SCHEMA_VERSION, TOOL_VERSION};

const SEED_ENV: &str = "NULLSTRING_LAB_SEED";

#[derive(Parser)]
#[command(name = "nullstring-lab", version, about = "Petrov-Penrose types, null strings and Killing checks for 4-metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Metric-definition file.
    file: PathBuf,
    /// Sampling seed; falls back to $NULLSTRING_LAB_SEED, then to the family's own seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the file's mode.
    #[arg(long)]
    mode: Option<Mode>,
    /// Write the JSON report here ("-" prints it instead of the text report).
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the metric at random nonsingular points.
    Classify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20)]
        points: usize,
        /// Print one line per sample point.
        #[arg(short, long)]
        verbose: bool,
    },
    /// Run named checks; exits 1 if any fails.
    Verify {
        #[command(flatten)]
        common: Common,
        /// congruences, einstein, selfdual, killing, master or type3; repeatable.
        #[arg(long = "check", required = true)]
        checks: Vec<CheckKind>,
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(short, long)]
        verbose: bool,
    },
    /// Label map over a one- or two-dimensional grid, e.g. --grid "x=-1:1:21,y=-1:1:21,q=0.3".
    Scan {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        grid: String,
    },
    /// List the catalog families.
    Families,
    /// Print a metric file with a family's default bindings.
    Template { family: String },
}

/// Maps failures onto exit codes.
enum Failure {
    Input(anyhow::Error),
    Sampling(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

fn core(e: Error) -> Failure {
    match e {
        Error::SamplingFailed => Failure::Sampling(e.into()),
        e => Failure::Input(e.into()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Sampling(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

struct Loaded {
    digest: String,
    file: MetricFile,
    inst: MetricInstance,
    seed: u64,
}

fn load(c: &Common) -> Result<Loaded, Failure> {
    let bytes = std::fs::read(&c.file).with_context(|| format!("reading {}", c.file.display()))?;
    let text = std::str::from_utf8(&bytes).with_context(|| format!("{} is not UTF-8", c.file.display()))?;
    let mut file = MetricFile::parse(text).map_err(|e| Failure::Input(anyhow::Error::new(e).context(c.file.display().to_string())))?;
    if let Some(m) = c.mode {
        file.mode = m;
    }
    let inst = file.instantiate().map_err(|e| Failure::Input(anyhow::Error::new(e).context(c.file.display().to_string())))?;
    let seed = match (c.seed, std::env::var(SEED_ENV)) {
        (Some(s), _) => s,
        (None, Ok(v)) => v.trim().parse().with_context(|| format!("{SEED_ENV}={v:?} is not an unsigned integer"))?,
        (None, Err(_)) => inst.seed,
    };
    Ok(Loaded { digest: digest(&bytes), file, inst, seed })
}

/// Samples in parallel batches; results come back in draw order.
fn classify_run(inst: &MetricInstance, points: usize, seed: u64) -> Result<ClassificationRun, Failure> {
    if points == 0 {
        return Err(Failure::Input(anyhow::anyhow!("--points must be positive")));
    }
    let sampled = inst
        .sample_with(points, seed, |batch| batch.par_iter().map(|p| inst.analyse(p)).collect())
        .map_err(core)?;
    Ok(inst.summarize(sampled))
}

fn declared_checks(inst: &MetricInstance) -> Vec<CheckKind> {
    CheckKind::ALL
        .into_iter()
        .filter(|k| match k {
            CheckKind::Congruences => !inst.congruences.is_empty(),
            CheckKind::Einstein => inst.lambda.is_some(),
            CheckKind::SelfDual => inst.self_dual,
            CheckKind::Killing => !inst.killing.is_empty(),
            CheckKind::Master => inst.master.is_some(),
            CheckKind::Type3 => inst.type3.is_some(),
        })
        .collect()
}

fn run(cmd: Command) -> Result<bool, Failure> {
    match cmd {
        Command::Classify { common, points, verbose } => {
            let l = load(&common)?;
            let run = classify_run(&l.inst, points, l.seed)?;
            let checks = declared_checks(&l.inst)
                .into_iter()
                .map(|k| run_check(&l.inst, k, &run.points))
                .collect::<nullstring_core::Result<Vec<_>>>()
                .map_err(core)?;
            let rep = RunReport::new(header("classify", &l, points), &l.inst, &run, checks);
            emit(&common, &rep, || human_run(&rep, &common.file, verbose))?;
            Ok(true)
        }
        Command::Verify { common, checks, points, verbose } => {
            let l = load(&common)?;
            let run = classify_run(&l.inst, points, l.seed)?;
            let mut kinds: Vec<CheckKind> = vec![];
            for k in checks {
                if !kinds.contains(&k) {
                    kinds.push(k);
                }
            }
            let results = kinds
                .into_iter()
                .map(|k| run_check(&l.inst, k, &run.points))
                .collect::<nullstring_core::Result<Vec<_>>>()
                .map_err(core)?;
            let passed = results.iter().all(|r| r.passed);
            let mut rep = RunReport::new(header("verify", &l, points), &l.inst, &run, results);
            rep.passed = Some(passed);
            emit(&common, &rep, || human_run(&rep, &common.file, verbose))?;
            Ok(passed)
        }
        Command::Scan { common, grid } => {
            let l = load(&common)?;
            let rep = scan(&l, &grid)?;
            emit(&common, &rep, || human_scan(&rep))?;
            if rep.singular_cells == rep.cells.len() {
                return Err(Failure::Sampling(anyhow::anyhow!("every grid cell is singular")));
            }
            Ok(true)
        }
        Command::Families => {
            for f in all_families() {
                println!("{:<14} {:<40} {}", f.id, f.claimed.to_string(), f.content);
            }
            Ok(true)
        }
        Command::Template { family } => {
            let f = nullstring_core::catalog::family(&family).map_err(core)?;
            let file = MetricFile {
                mode: Mode::Real,
                family: Some(f.id.to_string()),
                params: f.params.iter().map(|p| (p.name.to_string(), p.default)).collect(),
                functions: f
                    .slots
                    .iter()
                    .map(|s| (s.name.to_string(), s.default.unwrap_or("0").to_string()))
                    .collect(),
                ..MetricFile::default()
            };
            print!("{file}");
            Ok(true)
        }
    }
}

fn header(command: &'static str, l: &Loaded, points: usize) -> RunHeader {
    RunHeader {
        command,
        input_digest: l.digest.clone(),
        metric: l.file.to_string(),
        seed: l.seed,
        points_requested: points,
    }
}

fn emit<T: serde::Serialize>(c: &Common, rep: &T, human: impl FnOnce() -> String) -> Result<(), Failure> {
    let json = || -> Result<String, Failure> {
        let mut s = serde_json::to_string_pretty(rep).context("serialising report")?;
        s.push('\n');
        Ok(s)
    };
    match c.json.as_deref() {
        Some(p) if p == Path::new("-") => print!("{}", json()?),
        Some(p) => {
            std::fs::write(p, json()?).with_context(|| format!("writing {}", p.display()))?;
            print!("{}", human());
        }
        None => print!("{}", human()),
    }
    Ok(())
}

fn pass_word(b: bool) -> &'static str {
    if b {
        "PASS"
    } else {
        "FAIL"
    }
}

fn human_checks(out: &mut String, checks: &[CheckResult]) {
    for c in checks {
        let _ = writeln!(out, "check      {:<12} {}  worst {:.3e}", c.kind.name(), pass_word(c.passed), c.worst);
        for i in &c.items {
            let _ = write!(out, "             {:<28} {}  {:.3e}", i.name, pass_word(i.passed), i.value);
            match &i.note {
                Some(n) => {
                    let _ = writeln!(out, "  ({n})");
                }
                None => out.push('\n'),
            }
        }
    }
}

fn human_run(rep: &RunReport, path: &Path, verbose: bool) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "input      {}  {}", path.display(), rep.input_digest);
    let _ = writeln!(out, "family     {}  ({})", rep.family, rep.mode);
    let _ = writeln!(
        out,
        "points     {} sampled, {} rejected, seed {}",
        rep.points_sampled, rep.points_rejected, rep.seed
    );
    let a = &rep.aggregate;
    let _ = writeln!(
        out,
        "aggregate  {}  confidence {:.3}",
        a.symbol.as_deref().unwrap_or("(unclassified)"),
        a.confidence
    );
    if let (Some(c), Some(f)) = (&a.claimed, a.claim_fraction) {
        let _ = writeln!(out, "claimed    {c}  matched {f:.3}");
    }
    if verbose {
        for p in &rep.per_point {
            let _ = writeln!(
                out,
                "  #{:<3} {:<6} {:<6} {}{}",
                p.index,
                p.sd.as_deref().unwrap_or("?"),
                p.asd.as_deref().unwrap_or("?"),
                p.symbol.as_deref().unwrap_or("-"),
                if p.flags.is_empty() { String::new() } else { format!("  [{}]", p.flags.join("; ")) }
            );
        }
    }
    human_checks(&mut out, &rep.checks);
    if let Some(p) = rep.passed {
        let _ = writeln!(out, "result     {}", pass_word(p));
    }
    out
}

const SINGULAR: &str = "singular";
const ILL: &str = "ill-conditioned";

/// Label plus the signs of the real SD and ASD coefficients (real mode only).
struct CellData {
    label: String,
    signs: Option<[[i8; 5]; 2]>,
}

fn signs(c: &[Scalar; 5], zero: f64) -> [i8; 5] {
    c.map(|v| if v.re.abs() <= zero { 0 } else if v.re > 0.0 { 1 } else { -1 })
}

fn cell_data(inst: &MetricInstance, p: &[f64; 4]) -> Result<CellData, Error> {
    let pt: [Scalar; 4] = p.map(|v| Scalar::new(v, 0.0));
    match inst.analyse(&pt) {
        Ok(a) => {
            let zt = a.curvature.zero_tol();
            let signs = (inst.mode == Mode::Real)
                .then(|| [signs(&a.curvature.cup, zt), signs(&a.curvature.asd_coeffs(), zt)]);
            let ill = a.flags.iter().any(|f| matches!(f, PointFlag::IllConditioned(_)));
            let label = match (&a.sd, &a.asd) {
                (Some(s), Some(t)) if !ill => format!("[{}] ⊗ [{}]", s.label, t.label),
                _ => ILL.into(),
            };
            Ok(CellData { label, signs })
        }
        Err(e) if e.is_singular() => Ok(CellData { label: SINGULAR.into(), signs: None }),
        Err(e) => Err(e),
    }
}

/// Coefficients that are strictly positive in one cell and strictly negative in the other.
fn crossings(a: &CellData, b: &CellData) -> Vec<String> {
    let (Some(x), Some(y)) = (a.signs, b.signs) else { return vec![] };
    let mut out = vec![];
    for (side, name) in [(0, "sd"), (1, "asd")] {
        for k in 0..5 {
            if x[side][k] * y[side][k] < 0 {
                out.push(format!("{name} C{}", k + 1));
            }
        }
    }
    out
}

fn scan(l: &Loaded, spec: &str) -> Result<ScanReport, Failure> {
    let inst = &l.inst;
    let g = Grid::parse(spec, &inst.coordinates, &inst.sample_box).map_err(|e| Failure::Input(e.into()))?;
    let (rows, cols) = g.shape();
    let idx: Vec<(usize, usize)> = (0..rows).flat_map(|r| (0..cols).map(move |c| (r, c))).collect();
    let data: Vec<CellData> = idx
        .par_iter()
        .map(|&(r, c)| cell_data(inst, &g.point(r, c)))
        .collect::<Result<_, _>>()
        .map_err(core)?;
    let at = |r: usize, c: usize| &data[r * cols + c];
    let mut cells = Vec::with_capacity(idx.len());
    let mut distinct: Vec<String> = vec![];
    for &(r, c) in &idx {
        let me = at(r, c);
        if !distinct.contains(&me.label) {
            distinct.push(me.label.clone());
        }
        let mut nb = vec![];
        if r > 0 {
            nb.push(at(r - 1, c));
        }
        if r + 1 < rows {
            nb.push(at(r + 1, c));
        }
        if c > 0 {
            nb.push(at(r, c - 1));
        }
        if c + 1 < cols {
            nb.push(at(r, c + 1));
        }
        let mut sign_changes: Vec<String> = nb.iter().flat_map(|n| crossings(me, n)).collect();
        sign_changes.sort();
        sign_changes.dedup();
        cells.push(Cell {
            row: r,
            col: c,
            point: g.point(r, c).to_vec(),
            label: me.label.clone(),
            boundary: nb.iter().any(|n| n.label != me.label),
            sign_changes,
        });
    }
    Ok(ScanReport {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION,
        command: "scan",
        input_digest: l.digest.clone(),
        metric: l.file.to_string(),
        family: inst.family.clone(),
        mode: inst.mode.to_string(),
        coordinates: inst.coordinates.to_vec(),
        base: g.base.to_vec(),
        axes: g
            .axes
            .iter()
            .map(|a| AxisJson { coordinate: inst.coordinates[a.coord].clone(), lo: a.lo, hi: a.hi, n: a.n })
            .collect(),
        uniform: distinct.len() == 1,
        boundary_cells: cells.iter().filter(|c| c.boundary).count(),
        sign_change_cells: cells.iter().filter(|c| !c.sign_changes.is_empty()).count(),
        singular_cells: cells.iter().filter(|c| c.label == SINGULAR).count(),
        labels: distinct,
        cells,
    })
}

/// One character per cell: a letter per label (upper case on a boundary),
/// `#` singular, `?` ill-conditioned, `+` a coefficient changes sign next door.
fn human_scan(rep: &ScanReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "family     {}  ({})  {}", rep.family, rep.mode, rep.input_digest);
    let axes: Vec<String> =
        rep.axes.iter().map(|a| format!("{} {}..{} ({})", a.coordinate, a.lo, a.hi, a.n)).collect();
    let _ = writeln!(out, "axes       {}", axes.join(" by "));
    let letters: Vec<(String, char)> = rep
        .labels
        .iter()
        .filter(|l| *l != SINGULAR && *l != ILL)
        .enumerate()
        .map(|(i, l)| (l.clone(), (b'a' + (i % 26) as u8) as char))
        .collect();
    for (l, ch) in &letters {
        let _ = writeln!(out, "  {ch}  {l}");
    }
    let _ = writeln!(out, "  #  {SINGULAR}\n  ?  {ILL}\n  +  a curvature coefficient changes sign next to this cell");
    let _ = writeln!(out, "  (upper case: label changes next to this cell)");
    let cols = rep.axes.last().map_or(1, |a| a.n);
    for row in rep.cells.chunks(cols) {
        let line: String = row
            .iter()
            .map(|c| match c.label.as_str() {
                SINGULAR => '#',
                ILL => '?',
                l => {
                    let ch = letters.iter().find(|(k, _)| k == l).map_or('*', |x| x.1);
                    if c.boundary {
                        ch.to_ascii_uppercase()
                    } else if !c.sign_changes.is_empty() {
                        '+'
                    } else {
                        ch
                    }
                }
            })
            .collect();
        let _ = writeln!(out, "  {line}");
    }
    let _ = writeln!(
        out,
        "summary    {} label(s), {} boundary cell(s), {} sign-change cell(s), {} singular",
        rep.labels.len(),
        rep.boundary_cells,
        rep.sign_change_cells,
        rep.singular_cells
    );
    out
}

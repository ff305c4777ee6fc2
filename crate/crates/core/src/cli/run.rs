use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::config::{CoefficientEntry, ConfigError, ExperimentConfig, Task};
use super::svg;
use crate::antilinear_algebra::{self, FactorError, SymmetricComplexMatrix};
use crate::cr_operator::{self, BundleOperatorSpec, FourierGrid, OperatorError, TrigCoefficient, TrigPolynomial};
use crate::index_calculus::{self, CurveIndexData, IndexError};
use crate::lattice_covers::{self, Lattice, LatticeError, ModeIndex};
use crate::linalg::{self, CMatrix};
use crate::random;
use crate::spectral_probe::{self, ProbeError, SweepOptions, DEFAULT_RANK_TOL};
use crate::weitzenboeck::{self, WbError};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("matrix file {path}: {message}")]
    MatrixFile { path: PathBuf, message: String },
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Probe(#[from] ProbeError),
    #[error(transparent)]
    Weitzenboeck(#[from] WbError),
    #[error(transparent)]
    Factor(#[from] FactorError),
}

impl RunError {
    /// Short stable category for the machine-readable error line.
    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Config(_) => "config",
            RunError::Io { .. } => "io",
            RunError::Csv(_) => "csv",
            RunError::MatrixFile { .. } => "input",
            RunError::Index(_) => "index",
            RunError::Lattice(_) => "lattice",
            RunError::Operator(_) => "operator",
            RunError::Probe(_) => "probe",
            RunError::Weitzenboeck(_) => "weitzenboeck",
            RunError::Factor(_) => "factor",
        }
    }
}

/// Shortest round-trip form of a float.
fn num(v: f64) -> String {
    format!("{v:?}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// What a run produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSummary {
    /// Text for stdout (may be empty).
    pub stdout: String,
    /// Every file written, in write order.
    pub files: Vec<PathBuf>,
}

struct Output {
    dir: PathBuf,
    summary: RunSummary,
}

impl Output {
    fn csv<S: AsRef<str>>(&mut self, name: &str, header: &[&str], rows: &[Vec<S>]) -> Result<(), RunError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .quote_style(csv::QuoteStyle::Necessary)
            .from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            w.write_record(row.iter().map(|s| s.as_ref()))?;
        }
        let bytes = w.into_inner().map_err(|e| RunError::Io {
            path: self.dir.join(name),
            source: e.into_error(),
        })?;
        self.write(name, &bytes)
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), RunError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(io_err(&path))?;
        log::info!("wrote {}", path.display());
        self.summary.files.push(path);
        Ok(())
    }
}

/// Directory outputs go to when the config names none.
pub const DEFAULT_OUT: &str = ".";

/// Execute the configured task and write its outputs.
pub fn run(config: &ExperimentConfig) -> Result<RunSummary, RunError> {
    config.validate()?;
    let dir = config.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let mut out = Output {
        dir,
        summary: RunSummary::default(),
    };
    match config.task {
        Task::Index => run_index(config, &mut out)?,
        Task::Covers => run_covers(config, &mut out)?,
        Task::Sweep => run_sweep(config, &mut out)?,
        Task::Weitzenboeck => run_weitzenboeck(config, &mut out)?,
        Task::Factor => run_factor(config, &mut out)?,
        Task::Schur => run_schur(config, &mut out)?,
    }
    write_meta(config, &mut out)?;
    Ok(out.summary)
}

fn write_meta(config: &ExperimentConfig, out: &mut Output) -> Result<(), RunError> {
    let rendered = config.render();
    let mut hasher = Sha256::new();
    hasher.update(rendered.as_bytes());
    if let Some(path) = &config.matrix {
        hasher.update(fs::read(path).map_err(io_err(path))?);
    }
    let hash: String = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let text = format!(
        "task = {}\nseed = {}\ninput_sha256 = {hash}\ncrate_version = {}\nunix_time = {stamp}\n",
        config.task,
        config.seed,
        env!("CARGO_PKG_VERSION"),
    );
    out.write(&format!("{}.meta", config.task), text.as_bytes())
}

fn run_index(config: &ExperimentConfig, out: &mut Output) -> Result<(), RunError> {
    let data = CurveIndexData::new(config.half_dim, config.genus, config.c1)?;
    let index = index_calculus::curve_index(&data);
    out.summary.stdout = format!("{index}\n");
    out.csv(
        "index.csv",
        &["n", "g", "c1", "index"],
        &[vec![
            config.half_dim.to_string(),
            config.genus.to_string(),
            config.c1.to_string(),
            index.to_string(),
        ]],
    )
}

fn lattice(config: &ExperimentConfig) -> Result<Lattice, RunError> {
    let [a, b, c, d] = config.lattice;
    Ok(Lattice::new([a, b], [c, d])?)
}

fn run_covers(config: &ExperimentConfig, out: &mut Output) -> Result<(), RunError> {
    let subs = lattice_covers::enumerate_sublattices(lattice(config)?, config.degree)?;
    let rows: Vec<Vec<String>> = subs
        .iter()
        .map(|s| {
            let (a, b, c) = s.hnf();
            vec![config.degree.to_string(), a.to_string(), b.to_string(), c.to_string()]
        })
        .collect();
    out.summary.stdout = format!("{}\n", rows.len());
    out.csv("covers.csv", &["d", "a", "b", "c"], &rows)
}

fn polynomial(rank: usize, entries: &[CoefficientEntry]) -> Result<TrigPolynomial, RunError> {
    let mut by_mode: BTreeMap<ModeIndex, CMatrix> = BTreeMap::new();
    for e in entries {
        let m = by_mode
            .entry(ModeIndex::new(e.k1, e.k2))
            .or_insert_with(|| CMatrix::zeros(rank, rank));
        m[(e.row, e.col)] += Complex64::new(e.re, e.im);
    }
    let terms = by_mode
        .into_iter()
        .map(|(mode, matrix)| TrigCoefficient { mode, matrix })
        .collect();
    Ok(TrigPolynomial::new(rank, terms)?)
}

/// Operator spec and grid described by the config, at parameter `tau`.
pub fn build_spec(config: &ExperimentConfig, tau: f64) -> Result<(BundleOperatorSpec, FourierGrid), RunError> {
    let lat = lattice(config)?;
    let spec = BundleOperatorSpec::new(
        lat,
        polynomial(config.rank, &config.linear)?,
        polynomial(config.rank, &config.antilinear)?,
        tau,
    )?;
    let grid = FourierGrid::new(config.grid, lat)?;
    Ok((spec, grid))
}

fn run_sweep(config: &ExperimentConfig, out: &mut Output) -> Result<(), RunError> {
    let (spec, grid) = build_spec(config, 0.0)?;
    let family = cr_operator::assemble_family(&spec, &grid)?;
    let record = spectral_probe::sweep_family(
        &family,
        (config.tau_min, config.tau_max),
        config.samples,
        &SweepOptions::default(),
    )?;
    let rows: Vec<Vec<String>> = record
        .samples
        .iter()
        .map(|s| vec![num(s.tau), num(s.sigma_min), s.kernel_dim.to_string()])
        .collect();
    out.csv("sweep.csv", &["tau", "sigma_min", "kernel_dim"], &rows)?;
    let roots: Vec<Vec<String>> = record
        .roots
        .iter()
        .map(|r| vec![num(r.lo), num(r.hi)])
        .collect();
    out.csv("roots.csv", &["tau_lo", "tau_hi"], &roots)?;
    if record.degenerate_everywhere {
        log::warn!("kernel is nontrivial at every sample; no roots reported");
    }
    if config.plot {
        let svg = svg::sweep_chart(&record);
        out.write("sweep.svg", svg.as_bytes())?;
    }
    out.summary.stdout = format!("{} roots\n", record.roots.len());
    Ok(())
}

fn run_weitzenboeck(config: &ExperimentConfig, out: &mut Output) -> Result<(), RunError> {
    let (spec, grid) = build_spec(config, config.tau)?;
    let mut rng = random::rng(config.seed);
    let bandwidth = grid.section_bandwidth(spec.bandwidth());
    let section = random::random_section(&mut rng, &grid, config.rank, bandwidth);
    let report = weitzenboeck::wb_identity_residual(&spec, &grid, &section)?;
    let constants = weitzenboeck::wb_constants(&spec, weitzenboeck::SUP_GRID)?;
    let points: Vec<(f64, f64)> = (0..16)
        .flat_map(|i| (0..16).map(move |j| (i as f64 / 16.0, j as f64 / 16.0)))
        .collect();
    let symmetry = weitzenboeck::symmetry_identity_check(spec.antilinear(), &points, &mut rng);

    let mut rows: Vec<(&str, f64)> = report.terms();
    rows.extend([
        ("relative_residual", report.relative_residual()),
        ("lower_bound", report.lower_bound(&constants)),
        ("c", constants.c),
        ("c_prime", constants.c_prime),
        ("tau_star", constants.tau_star),
        ("symmetry_violation", symmetry),
    ]);
    let rows: Vec<Vec<String>> = rows
        .into_iter()
        .map(|(k, v)| vec![k.to_string(), num(v)])
        .collect();
    out.summary.stdout = format!("relative_residual {:?}\n", report.relative_residual());
    out.csv("weitzenboeck.csv", &["term", "value"], &rows)
}

/// Read a square matrix from CSV with header `row,col,re,im`; missing
/// entries are zero.
pub fn read_matrix(path: &Path) -> Result<CMatrix, RunError> {
    let bad = |message: String| RunError::MatrixFile {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::Reader::from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header != ["row", "col", "re", "im"] {
        return Err(bad(format!("expected header row,col,re,im, found {}", header.join(","))));
    }
    let mut entries = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let field = |k: usize| record.get(k).unwrap_or("").trim().to_string();
        let line = i + 2;
        let row: usize = field(0).parse().map_err(|_| bad(format!("line {line}: bad row")))?;
        let col: usize = field(1).parse().map_err(|_| bad(format!("line {line}: bad col")))?;
        let re: f64 = field(2).parse().map_err(|_| bad(format!("line {line}: bad re")))?;
        let im: f64 = field(3).parse().map_err(|_| bad(format!("line {line}: bad im")))?;
        entries.push((row, col, Complex64::new(re, im)));
    }
    let dim = entries.iter().map(|&(r, c, _)| r.max(c) + 1).max().unwrap_or(0);
    if dim == 0 {
        return Err(bad("no entries".into()));
    }
    let mut m = CMatrix::zeros(dim, dim);
    for (r, c, z) in entries {
        m[(r, c)] = z;
    }
    Ok(m)
}

fn matrix_rows(name: &str, m: &CMatrix, rows: &mut Vec<Vec<String>>) {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            rows.push(vec![
                name.to_string(),
                i.to_string(),
                j.to_string(),
                num(z.re),
                num(z.im),
            ]);
        }
    }
}

fn run_factor(config: &ExperimentConfig, out: &mut Output) -> Result<(), RunError> {
    let mut rng = random::rng(config.seed);
    let g = match &config.matrix {
        Some(path) => read_matrix(path)?,
        None => random::complex_matrix(&mut rng, config.rank, config.rank),
    };
    let (o, s) = antilinear_algebra::ortho_symmetric_polar(&g)?;
    let gram = SymmetricComplexMatrix::new(linalg::symmetrize(&(g.transpose() * &g)))?;
    let a = antilinear_algebra::takagi_factor(&gram, &mut rng)?;

    let mut rows = Vec::new();
    matrix_rows("G", &g, &mut rows);
    matrix_rows("A", &a, &mut rows);
    matrix_rows("O", &o, &mut rows);
    matrix_rows("S", &s, &mut rows);
    out.csv("factor.csv", &["matrix", "row", "col", "re", "im"], &rows)?;

    let residuals = [
        ("takagi", antilinear_algebra::takagi_residual(&a, gram.matrix())),
        ("polar", linalg::fro(&(&o * &s - &g)) / linalg::fro(&g)),
        ("orthogonality", antilinear_algebra::orthogonality_residual(&o)),
        ("symmetry", linalg::fro(&(&s - s.transpose())) / linalg::fro(&s)),
        ("det_o_re", o.determinant().re),
    ];
    let rows: Vec<Vec<String>> = residuals
        .iter()
        .map(|(k, v)| vec![k.to_string(), num(*v)])
        .collect();
    out.summary.stdout = format!("takagi_residual {:?}\n", residuals[0].1);
    out.csv("residuals.csv", &["name", "value"], &rows)
}

fn run_schur(config: &ExperimentConfig, out: &mut Output) -> Result<(), RunError> {
    let (spec, grid) = build_spec(config, 0.0)?;
    let family = cr_operator::assemble_family(&spec, &grid)?;
    let data = spectral_probe::schur_data(&family, Complex64::new(config.tau0, 0.0), DEFAULT_RANK_TOL)?;
    let threshold = DEFAULT_RANK_TOL * data.sigma_max();
    let mut rows = Vec::with_capacity(config.probes);
    for i in 0..config.probes {
        let tau = if config.probes == 1 {
            config.tau0
        } else {
            config.tau0 - config.radius + 2.0 * config.radius * i as f64 / (config.probes - 1) as f64
        };
        let phi = spectral_probe::schur_reduce(&family, &data, Complex64::new(tau, 0.0))?;
        let det = if phi.is_empty() {
            Complex64::new(1.0, 0.0)
        } else {
            phi.determinant()
        };
        rows.push(vec![
            num(tau),
            num(det.re),
            num(det.im),
            data.reduced_kernel_dimension(&phi).to_string(),
            spectral_probe::kernel_dimension_below(&family, tau, threshold).to_string(),
        ]);
    }
    out.summary.stdout = format!("reduced dimension {}\n", data.reduced_dim());
    out.csv(
        "schur.csv",
        &["tau", "det_re", "det_im", "reduced_kernel_dim", "full_kernel_dim"],
        &rows,
    )
}

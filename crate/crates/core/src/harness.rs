//! Experiment orchestration: regularized and trilinear solves on the
//! benchmark box, difference norms, convergence tables and file output.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::charges::ChargeSet;
use crate::dielectric::{BandProfile, TanhSphericalDielectric};
use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::operator::{assemble_regularized, assemble_trilinear};
use crate::radial::{RadialProblem, RadialProfile};
use crate::solver::{self, Preconditioner, SolveReport, SolverConfig};
use crate::{norm, sub};

/// Half width of the benchmark box `[-10, 10]^3`.
pub const BOX_HALF_WIDTH: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Regularized,
    Trilinear,
    Both,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regularized" => Ok(Self::Regularized),
            "trilinear" => Ok(Self::Trilinear),
            "both" => Ok(Self::Both),
            other => Err(Error::Config(format!("unknown method {other:?}"))),
        }
    }
}

/// Solver settings that do not depend on the grid size. Missing entries
/// fall back to [`SolverConfig::for_grid`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SolverOverrides {
    pub rel_tolerance: Option<f64>,
    pub max_iterations: Option<usize>,
    pub preconditioner: Option<Preconditioner>,
}

impl SolverOverrides {
    pub fn config_for(&self, grid: &Grid) -> SolverConfig {
        let mut cfg = SolverConfig::for_grid(grid);
        if let Some(t) = self.rel_tolerance {
            cfg.rel_tolerance = t;
        }
        if let Some(m) = self.max_iterations {
            cfg.max_iterations = m;
        }
        if let Some(p) = self.preconditioner {
            cfg.preconditioner = p;
        }
        cfg
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub grid_sizes: Vec<usize>,
    pub method: Method,
    pub dielectric: TanhSphericalDielectric,
    pub charges: ChargeSet,
    pub solver: SolverOverrides,
    pub output_dir: Option<PathBuf>,
    pub emit_slice: bool,
    pub emit_profile: bool,
    pub emit_field: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            grid_sizes: vec![50, 100, 200, 400],
            method: Method::Both,
            dielectric: TanhSphericalDielectric::default().with_profile(BandProfile::Continuous),
            charges: ChargeSet::centered(1.0),
            solver: SolverOverrides::default(),
            output_dir: None,
            emit_slice: false,
            emit_profile: false,
            emit_field: false,
        }
    }
}

impl ExperimentConfig {
    /// Benchmark setup on the given grid sizes.
    pub fn benchmark(grid_sizes: &[usize]) -> Self {
        Self {
            grid_sizes: grid_sizes.to_vec(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.dielectric.validate()?;
        if self.grid_sizes.is_empty() {
            return Err(Error::Config("no grid sizes given".into()));
        }
        if let Some(n) = self.grid_sizes.iter().find(|n| **n < 3) {
            return Err(Error::Config(format!("grid size {n} is below 3")));
        }
        Ok(())
    }

    pub fn grid(&self, n: usize) -> Result<Grid> {
        Grid::new([-BOX_HALF_WIDTH; 3], 2.0 * BOX_HALF_WIDTH, n)
    }

    /// The radial reference only applies to one charge at the origin.
    pub fn oracle_applicable(&self) -> bool {
        self.charges.is_single_centered()
    }
}

/// Output of the regularized solve.
#[derive(Clone, Debug)]
pub struct RegularizedRun {
    /// Reaction field `u_rf`.
    pub reaction: ScalarField,
    /// Recovered potential `u_rf + G`.
    pub total: ScalarField,
    pub report: SolveReport,
}

/// Output of the trilinear solve.
#[derive(Clone, Debug)]
pub struct TrilinearRun {
    /// Potential `u` of the original equation.
    pub total: ScalarField,
    /// `u - G`, comparable to the reaction field.
    pub reaction: ScalarField,
    pub report: SolveReport,
}

pub fn run_regularized(cfg: &ExperimentConfig, n: usize) -> Result<RegularizedRun> {
    cfg.validate()?;
    let grid = cfg.grid(n)?;
    let d = &cfg.dielectric;
    let sys = assemble_regularized(&grid, d, &cfg.charges)?;
    let (reaction, report) = solver::solve(&sys, &cfg.solver.config_for(&grid))?;
    let green = cfg.charges.greens_field(d.eps_i, &grid)?;
    let mut total = reaction.clone();
    for (t, g) in total.values_mut().iter_mut().zip(green.values()) {
        *t += g;
    }
    Ok(RegularizedRun {
        reaction,
        total,
        report,
    })
}

pub fn run_trilinear(cfg: &ExperimentConfig, n: usize) -> Result<TrilinearRun> {
    cfg.validate()?;
    let grid = cfg.grid(n)?;
    let d = &cfg.dielectric;
    let sys = assemble_trilinear(&grid, d, &cfg.charges)?;
    let (total, report) = solver::solve(&sys, &cfg.solver.config_for(&grid))?;
    let green = cfg.charges.greens_field(d.eps_i, &grid)?;
    let mut reaction = total.clone();
    for (r, g) in reaction.values_mut().iter_mut().zip(green.values()) {
        *r -= g;
    }
    Ok(TrilinearRun {
        total,
        reaction,
        report,
    })
}

/// Radial reference profile covering every node of the benchmark box.
pub fn radial_reference(cfg: &ExperimentConfig) -> Result<RadialProfile> {
    if !cfg.oracle_applicable() {
        return Err(Error::Config(
            "radial reference requires exactly one charge at the origin".into(),
        ));
    }
    let q = cfg.charges.charges()[0].magnitude;
    RadialProblem::covering_cube(cfg.dielectric, q, BOX_HALF_WIDTH).solve()
}

/// Radial profile sampled at every node of `grid`.
pub fn oracle_field(profile: &RadialProfile, grid: &Grid) -> Result<ScalarField> {
    let values = (0..grid.len())
        .map(|idx| profile.sample(grid.position_of(idx)))
        .collect::<Result<Vec<f64>>>()?;
    ScalarField::from_values(*grid, values)
}

/// Difference norms of two fields.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms {
    /// `sqrt(h^3 * sum (a - b)^2)` over included interior nodes.
    pub l2: f64,
    /// `sqrt(mean (a - b)^2)` over included interior nodes.
    pub rms: f64,
    /// `max |a - b|` over all included nodes.
    pub linf: f64,
    /// Node index where `linf` is attained.
    pub argmax: usize,
}

/// Norms of `a - b`, skipping nodes closer than `exclusion_radius` to any
/// charge (`0` keeps every node).
pub fn compute_norms(
    a: &ScalarField,
    b: &ScalarField,
    charges: &ChargeSet,
    exclusion_radius: f64,
) -> Result<Norms> {
    a.same_grid(b)?;
    let grid = *a.grid();
    let h = grid.spacing();
    let mut sum_sq = 0.0;
    let mut count = 0usize;
    let mut linf = 0.0;
    let mut argmax = 0;
    for (idx, (x, y)) in a.values().iter().zip(b.values()).enumerate() {
        let p = grid.position_of(idx);
        if exclusion_radius > 0.0
            && charges
                .charges()
                .iter()
                .any(|c| norm(sub(p, c.position)) < exclusion_radius)
        {
            continue;
        }
        let diff = (x - y).abs();
        if diff > linf {
            linf = diff;
            argmax = idx;
        }
        if !grid.is_boundary_index(idx) {
            sum_sq += diff * diff;
            count += 1;
        }
    }
    Ok(Norms {
        l2: (h * h * h * sum_sq).sqrt(),
        rms: if count == 0 {
            0.0
        } else {
            (sum_sq / count as f64).sqrt()
        },
        linf,
        argmax,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pair {
    RegularizedVsTrilinear,
    RegularizedVsOracle,
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::RegularizedVsTrilinear => "RF_vs_TL",
            Self::RegularizedVsOracle => "RF_vs_oracle",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    L2,
    Rms,
    Linf,
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::L2 => "L2",
            Self::Rms => "RMS",
            Self::Linf => "Linf",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComparisonRow {
    pub n: usize,
    pub h: f64,
    pub pair: Pair,
    pub norm: NormKind,
    pub value: f64,
    /// `log(prev / value) / log(h_prev / h)` against the previous grid size.
    pub observed_order: Option<f64>,
}

/// Per-grid solver outcome recorded by [`convergence_study`].
#[derive(Clone, Debug)]
pub struct StudyRun {
    pub n: usize,
    pub regularized: Option<SolveReport>,
    pub trilinear: Option<SolveReport>,
}

#[derive(Clone, Debug, Default)]
pub struct Study {
    pub rows: Vec<ComparisonRow>,
    pub runs: Vec<StudyRun>,
}

impl Study {
    pub fn value(&self, n: usize, pair: Pair, norm: NormKind) -> Option<f64> {
        self.find(n, pair, norm).map(|r| r.value)
    }

    pub fn find(&self, n: usize, pair: Pair, norm: NormKind) -> Option<&ComparisonRow> {
        self.rows
            .iter()
            .find(|r| r.n == n && r.pair == pair && r.norm == norm)
    }

    /// Writes `N,h,pair,norm,value,observed_order`; the order column is empty
    /// for the first grid size.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "N,h,pair,norm,value,observed_order")?;
        for r in &self.rows {
            let order = r
                .observed_order
                .map(|o| format!("{o:.6}"))
                .unwrap_or_default();
            writeln!(
                out,
                "{},{:.6e},{},{},{:.6e},{}",
                r.n, r.h, r.pair, r.norm, r.value, order
            )?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Runs every requested grid size and tabulates difference norms.
///
/// `RF_vs_TL` rows need both methods; `RF_vs_oracle` rows need a single
/// centered charge. Output files go to `cfg.output_dir` when set.
pub fn convergence_study(cfg: &ExperimentConfig) -> Result<Study> {
    cfg.validate()?;
    let want_rf = matches!(cfg.method, Method::Regularized | Method::Both);
    let want_tl = matches!(cfg.method, Method::Trilinear | Method::Both);
    let profile = if want_rf && cfg.oracle_applicable() {
        Some(radial_reference(cfg)?)
    } else {
        None
    };
    if let (Some(dir), Some(p)) = (&cfg.output_dir, &profile) {
        if cfg.emit_profile {
            p.write_csv(create(dir, "radial_profile.csv")?)?;
        }
    }

    let mut study = Study::default();
    for &n in &cfg.grid_sizes {
        let grid = cfg.grid(n)?;
        let rf = if want_rf {
            Some(run_regularized(cfg, n)?)
        } else {
            None
        };
        let tl = if want_tl {
            Some(run_trilinear(cfg, n)?)
        } else {
            None
        };

        if let (Some(rf), Some(tl)) = (&rf, &tl) {
            let norms = compute_norms(&rf.reaction, &tl.reaction, &cfg.charges, 0.0)?;
            push_rows(
                &mut study,
                n,
                grid.spacing(),
                Pair::RegularizedVsTrilinear,
                norms,
            );
        }
        if let (Some(rf), Some(profile)) = (&rf, &profile) {
            let oracle = oracle_field(profile, &grid)?;
            let norms = compute_norms(&rf.reaction, &oracle, &cfg.charges, 0.0)?;
            push_rows(
                &mut study,
                n,
                grid.spacing(),
                Pair::RegularizedVsOracle,
                norms,
            );
        }
        if let Some(dir) = &cfg.output_dir {
            if let Some(rf) = &rf {
                write_outputs(cfg, dir, n, "rf", &rf.reaction)?;
            }
            if let Some(tl) = &tl {
                write_outputs(cfg, dir, n, "tl", &tl.reaction)?;
            }
        }
        study.runs.push(StudyRun {
            n,
            regularized: rf.map(|r| r.report),
            trilinear: tl.map(|r| r.report),
        });
    }
    if let Some(dir) = &cfg.output_dir {
        study.write_csv(create(dir, "convergence.csv")?)?;
    }
    Ok(study)
}

fn push_rows(study: &mut Study, n: usize, h: f64, pair: Pair, norms: Norms) {
    for (kind, value) in [
        (NormKind::L2, norms.l2),
        (NormKind::Rms, norms.rms),
        (NormKind::Linf, norms.linf),
    ] {
        let observed_order = study
            .rows
            .iter()
            .rev()
            .find(|r| r.pair == pair && r.norm == kind)
            .filter(|prev| prev.value > 0.0 && value > 0.0)
            .map(|prev| (prev.value / value).ln() / (prev.h / h).ln());
        study.rows.push(ComparisonRow {
            n,
            h,
            pair,
            norm: kind,
            value,
            observed_order,
        });
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_outputs(
    cfg: &ExperimentConfig,
    dir: &Path,
    n: usize,
    tag: &str,
    field: &ScalarField,
) -> Result<()> {
    if cfg.emit_slice {
        emit_slice(field, create(dir, &format!("slice_{tag}_n{n}.csv"))?)?;
    }
    if cfg.emit_field {
        field.write_ascii(create(dir, &format!("field_{tag}_n{n}.txt"))?)?;
    }
    Ok(())
}

/// Index of the node plane closest to `z = 0` (the lower one on ties).
pub fn nearest_z_plane(grid: &Grid) -> usize {
    let s = -grid.lower()[2] / grid.spacing();
    let k = (s - 0.5).ceil().max(0.0) as usize;
    k.min(grid.n() - 1)
}

/// Writes the node plane nearest to `z = 0` as `x,y,value` rows, preceded
/// by a `# z=<actual z>` comment line.
pub fn emit_slice<W: Write>(field: &ScalarField, mut out: W) -> Result<()> {
    let grid = field.grid();
    let k = nearest_z_plane(grid);
    let z = grid.position(0, 0, k)[2];
    writeln!(out, "# z={z:.16e}")?;
    writeln!(out, "x,y,value")?;
    for j in 0..grid.n() {
        for i in 0..grid.n() {
            let p = grid.position(i, j, k);
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e}",
                p[0],
                p[1],
                field.get(i, j, k)
            )?;
        }
    }
    out.flush()?;
    Ok(())
}

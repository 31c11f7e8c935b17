//! Experiment drivers: each runs one suite for a [`RunConfig`] and returns the
//! checks it made plus a human-readable transcript.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::check::{all_pass, Check};
use crate::dilation::BigSpace;
use crate::error::{Error, Result};
use crate::grid_fock::{fock_dimension, GridSpec};
use crate::linalg::random_unit_vector;
use crate::markov::{
    choi_min_eigenvalue, dagger_operator, markov_defect, observation_crosscheck, semigroup_defect,
    shifted_compression_check, stinespring, top_singular, verify_theorem, NormMethod, DENSE_L_LIMIT,
};
use crate::oracles::{closed_form_m2, continuum_m2, CoherentOracle};
use crate::product_system::{f_section, OnbSection, Unit};

/// Largest `dim K` (storage size) for which the dilation space is built.
pub const DILATION_LIMIT: usize = 4_000_000;

/// Largest `dim L` for which the sweep evaluates the semigroup defect.
pub const SWEEP_SEMIGROUP_LIMIT: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Theorem,
    Observation,
    Semigroup,
    Intertwine,
    Sweep,
    All,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Theorem => "theorem",
            Self::Observation => "observation",
            Self::Semigroup => "semigroup",
            Self::Intertwine => "intertwine",
            Self::Sweep => "sweep",
            Self::All => "all",
        }
    }

    /// Largest integer time the suite dilates by.
    pub fn max_time(&self) -> usize {
        match self {
            Self::Theorem | Self::Observation | Self::Sweep => 1,
            Self::Semigroup | Self::Intertwine | Self::All => 2,
        }
    }
}

impl std::str::FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "theorem" => Self::Theorem,
            "observation" => Self::Observation,
            "semigroup" => Self::Semigroup,
            "intertwine" => Self::Intertwine,
            "sweep" => Self::Sweep,
            "all" => Self::All,
            other => return Err(Error::Config(format!("unknown experiment {other:?}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub cells_per_unit: usize,
    pub cutoff: usize,
    pub unit_re: f64,
    pub unit_im: f64,
    /// `K̆` window in time units.
    pub window: usize,
    pub onb_index: usize,
    pub experiment: Experiment,
    pub seed: u64,
    /// Random sections per sampled identity.
    pub samples: usize,
    pub sweep_cells: Vec<usize>,
    /// Record wall-clock times; off gives byte-identical output across runs.
    pub timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            cells_per_unit: 8,
            cutoff: 2,
            unit_re: 0.0,
            unit_im: 0.0,
            window: 3,
            onb_index: 2,
            experiment: Experiment::Theorem,
            seed: 0,
            samples: 100,
            sweep_cells: vec![8, 16, 32, 64],
            timing: true,
        }
    }
}

impl RunConfig {
    pub fn unit_parameter(&self) -> C64 {
        C64::new(self.unit_re, self.unit_im)
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.cells_per_unit, self.cutoff)
    }

    pub fn validate(&self) -> Result<GridSpec> {
        let grid = self.grid()?;
        if !self.unit_re.is_finite() || !self.unit_im.is_finite() {
            return Err(Error::Config("the unit parameter must be finite".into()));
        }
        OnbSection::new(self.onb_index, grid)?;
        if self.samples == 0 {
            return Err(Error::Config("samples must be positive".into()));
        }
        if self.sweep_cells.is_empty() || self.sweep_cells.contains(&0) {
            return Err(Error::Config("sweep cell counts must be positive".into()));
        }
        let need = self.experiment.max_time() + 1;
        if self.window < need {
            return Err(Error::TruncationOverflow {
                shift_cells: grid.cells(need),
                window_cells: grid.cells(self.window),
            });
        }
        Ok(grid)
    }
}

/// One row of the convergence sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub m_unit: usize,
    pub cutoff: usize,
    pub c_re: f64,
    pub c_im: f64,
    pub k: usize,
    pub m2_grid: f64,
    pub m2_closed_form: f64,
    pub t1a_norm: f64,
    pub isometry_defect: f64,
    pub semigroup_defect: f64,
    pub runtime_ms: u64,
}

#[derive(Clone, Debug, Default)]
pub struct ExperimentReport {
    pub experiment: String,
    pub checks: Vec<Check>,
    pub lines: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl ExperimentReport {
    fn new(name: &str) -> Self {
        Self { experiment: name.into(), ..Self::default() }
    }

    pub fn pass(&self) -> bool {
        all_pass(&self.checks)
    }

    fn absorb(&mut self, other: ExperimentReport) {
        self.lines.push(format!("== {} ==", other.experiment));
        self.lines.extend(other.lines);
        self.checks.extend(other.checks);
        self.rows.extend(other.rows);
    }
}

fn dilation_space(grid: GridSpec, window: usize) -> Result<Option<BigSpace>> {
    let l: usize = (0..grid.slices()).map(|j| fock_dimension(grid.alpha_cells(j), grid.cutoff())).sum();
    let k = fock_dimension(grid.cells(window), grid.cutoff());
    if l.saturating_mul(k) > DILATION_LIMIT {
        return Ok(None);
    }
    BigSpace::new(grid, window).map(Some)
}

fn require_space(grid: GridSpec, window: usize) -> Result<BigSpace> {
    dilation_space(grid, window)?.ok_or_else(|| {
        Error::SizeGuard { what: "dilation space", size: fock_dimension(grid.cells(window), grid.cutoff()), limit: DILATION_LIMIT }
    })
}

/// Runs the configured experiment.
pub fn run(config: &RunConfig) -> Result<ExperimentReport> {
    let grid = config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    match config.experiment {
        Experiment::Theorem => theorem(config, grid, &mut rng),
        Experiment::Observation => observation(config, grid),
        Experiment::Semigroup => semigroup(config, grid, &mut rng),
        Experiment::Intertwine => intertwine(config, grid, &mut rng),
        Experiment::Sweep => sweep(config, &mut rng),
        Experiment::All => {
            let mut all = ExperimentReport::new("all");
            all.absorb(theorem(config, grid, &mut rng)?);
            all.absorb(observation(config, grid)?);
            all.absorb(semigroup(config, grid, &mut rng)?);
            all.absorb(intertwine(config, grid, &mut rng)?);
            all.absorb(sweep(config, &mut rng)?);
            Ok(all)
        }
    }
}

fn theorem(config: &RunConfig, grid: GridSpec, rng: &mut ChaCha8Rng) -> Result<ExperimentReport> {
    let unit = Unit::new(config.unit_parameter(), grid);
    let space = if unit.is_vacuum() { dilation_space(grid, config.window)? } else { None };
    let r = verify_theorem(config.onb_index, &unit, space.as_ref(), config.samples, rng)?;
    let mut out = ExperimentReport::new("theorem");
    out.lines.push(format!(
        "unit c = {}, k = {}, m_unit = {}, cutoff = {}",
        r.unit, r.k, r.cells_per_unit, r.cutoff
    ));
    out.lines.push(format!("||a|| = {:.12}", r.a_norm));
    out.lines.push(format!("M^2 (grid) = {:.12}", r.m2_grid));
    if let Some(cf) = r.m2_closed_form {
        out.lines.push(format!("M^2 (closed form) = {cf:.12}"));
    }
    let method = match r.norm.method {
        NormMethod::DenseSvd => "dense SVD".to_string(),
        NormMethod::Lanczos => format!("Lanczos, residual {:.2e}", r.norm.residual),
    };
    out.lines.push(format!("||T_1(a)|| = {:.12} ({method})", r.t1a_norm));
    out.lines.push(format!(
        "dagger identity over {} sections ({:?} route): max deviation {:.3e}",
        r.dagger_samples, r.dagger_route, r.dagger_max_deviation
    ));
    out.lines.push(format!("max |<z_1, V Y>| = {:.12}, M = {:.12}", r.z1_max_overlap, r.m2_grid.sqrt()));
    if let Some(e) = r.interior_eigenvalue {
        out.lines.push(format!("eigenvalue of T_1(a) strictly inside (0, 1): {e:.12}"));
    }
    out.checks = r.checks;
    Ok(out)
}

fn observation(config: &RunConfig, grid: GridSpec) -> Result<ExperimentReport> {
    let space = require_space(grid, config.window)?;
    let c = config.unit_parameter();
    // the vacuum is compared against a coherent unit; fall back to c = 1
    let c = if c == C64::new(0.0, 0.0) { C64::new(1.0, 0.0) } else { c };
    let r = observation_crosscheck(c, 1, &space)?;
    let mut out = ExperimentReport::new("observation");
    for case in &r.cases {
        out.lines.push(format!(
            "c1 = {}, c2 = {}, n = {}: dagger pipeline {:.12}, closed form {:.12}; <X,Y> {:.12} vs {:.12}; u* gap {:.3e}, contraction gap {:.3e}",
            case.dilation_unit,
            case.section_unit,
            case.n,
            case.dagger_pipeline,
            case.dagger_closed_form,
            case.inner_pipeline,
            case.inner_closed_form,
            case.u_star_deviation,
            case.contraction_deviation
        ));
    }
    out.checks = r.checks;
    Ok(out)
}

fn semigroup(config: &RunConfig, grid: GridSpec, rng: &mut ChaCha8Rng) -> Result<ExperimentReport> {
    let space = require_space(grid, config.window)?;
    let unit = Unit::new(config.unit_parameter(), grid);
    let oracle = CoherentOracle::new(unit.parameter(), grid.cutoff());
    let mut out = ExperimentReport::new("semigroup");
    let g1 = stinespring(1, &unit, &space)?;
    let g2 = stinespring(2, &unit, &space)?;
    for g in [&g1, &g2] {
        let n = g.n();
        let defect = g.isometry_defect()?;
        let markov = markov_defect(g)?;
        let bound = oracle.isometry_defect(n);
        out.lines.push(format!("n = {n}: ||G*G - id|| = {defect:.3e} (oracle {bound:.3e}), ||T(id) - id|| = {markov:.3e}"));
        let tol = if unit.is_vacuum() { 1e-10 } else { 1e-12 };
        out.checks.push(Check::at_most(format!("Markov property: isometry defect n={n}"), defect, bound, tol));
        out.checks.push(Check::at_most(format!("Markov property: ||T_n(id) - id|| n={n}"), markov, defect, 1e-12));
    }
    let d = 12.min(g1.l_dim());
    let cols: Vec<DVector<C64>> = (0..d).map(|_| random_unit_vector(g1.l_dim(), rng)).collect();
    let p = DMatrix::from_columns(&cols).qr().q();
    let choi = choi_min_eigenvalue(&g1, &p)?;
    out.lines.push(format!("Choi matrix of T_1 on a {d}-dimensional subspace: min eigenvalue {choi:.3e}"));
    out.checks.push(Check::at_least("complete positivity: Choi min eigenvalue", choi, 0.0, 1e-9));
    let sg = semigroup_defect(&g1, &g2, 20, rng)?;
    out.lines.push(format!("max ||T_2(b) - T_1(T_1(b))|| over 20 Hermitian b: {sg:.3e}"));
    if unit.is_vacuum() {
        out.checks.push(Check::at_most("semigroup at integers: defect", sg, 0.0, 1e-8));
    } else {
        out.lines.push("(semigroup law for truncated coherent units is reported, not asserted)".into());
    }
    Ok(out)
}

fn intertwine(config: &RunConfig, grid: GridSpec, rng: &mut ChaCha8Rng) -> Result<ExperimentReport> {
    let space = require_space(grid, config.window)?;
    let r = shifted_compression_check(&space, 1, 1, 10, rng)?;
    let mut out = ExperimentReport::new("intertwine");
    out.lines.push(format!(
        "alpha = {}, t = {}, {} rank-one samples: max deviation {:.3e} (largest matrix element {:.3e})",
        r.alpha, r.t, r.samples, r.max_deviation, r.max_magnitude
    ));
    out.checks = r.checks;
    Ok(out)
}

/// `||G_n^* G_n - id||` from the level norms of `omega_n`: the Gram matrix is
/// diagonal, and a column with `k` input particles keeps the levels `<= N - k`.
pub fn unit_isometry_defect(unit: &Unit, n: usize) -> f64 {
    let levels = unit.vector(unit.grid().cells(n)).level_norms_sqr();
    let cutoff = unit.grid().cutoff();
    (0..=cutoff)
        .map(|k| (1.0 - levels[..=cutoff - k].iter().sum::<f64>()).abs())
        .fold(0.0, f64::max)
}

pub fn sweep_row(
    cells_per_unit: usize,
    cutoff: usize,
    c: C64,
    k: usize,
    timing: bool,
    rng: &mut ChaCha8Rng,
) -> Result<SweepRow> {
    let start = Instant::now();
    let grid = GridSpec::new(cells_per_unit, cutoff)?;
    let unit = Unit::new(c, grid);
    let x = OnbSection::new(k, grid)?.section();
    let m2_grid = f_section(k, &unit.vector(cells_per_unit), &grid)?.m_integral();
    let m2_closed_form = if k == 1 {
        closed_form_m2(c, cells_per_unit, cutoff)
    } else if unit.is_vacuum() {
        0.0
    } else {
        f64::NAN
    };
    let t1a_norm = top_singular(&dagger_operator(1, &unit, &x)?, rng).sigma_sqr;
    let isometry_defect = unit_isometry_defect(&unit, 1);
    let l_dim: usize = (0..grid.slices()).map(|j| fock_dimension(grid.alpha_cells(j), cutoff)).sum();
    let semigroup_defect = if l_dim <= SWEEP_SEMIGROUP_LIMIT.min(DENSE_L_LIMIT) {
        let space = BigSpace::new(grid, 2)?;
        let g1 = stinespring(1, &unit, &space)?;
        let g2 = stinespring(2, &unit, &space)?;
        semigroup_defect(&g1, &g2, 3, rng)?
    } else {
        f64::NAN
    };
    let runtime_ms = if timing { start.elapsed().as_millis() as u64 } else { 0 };
    Ok(SweepRow {
        m_unit: cells_per_unit,
        cutoff,
        c_re: c.re,
        c_im: c.im,
        k,
        m2_grid,
        m2_closed_form,
        t1a_norm,
        isometry_defect,
        semigroup_defect,
        runtime_ms,
    })
}

/// `|M^2(h) - limit|` for each row and the ratios of successive errors.
pub fn halving_ratios(rows: &[SweepRow], limit: f64) -> (Vec<f64>, Vec<f64>) {
    let errors: Vec<f64> = rows.iter().map(|r| (r.m2_grid - limit).abs()).collect();
    let ratios = errors.windows(2).map(|w| w[0] / w[1]).collect();
    (errors, ratios)
}

fn sweep(config: &RunConfig, rng: &mut ChaCha8Rng) -> Result<ExperimentReport> {
    let c = config.unit_parameter();
    let k = config.onb_index;
    let mut out = ExperimentReport::new("sweep");
    let mut cells = config.sweep_cells.clone();
    cells.sort_unstable();
    cells.dedup();
    for &m in &cells {
        let row = sweep_row(m, config.cutoff, c, k, config.timing, rng)?;
        out.lines.push(format!(
            "m_unit = {m}: M^2 = {:.12}, closed form {:.12}, ||T_1(a)|| = {:.12}",
            row.m2_grid, row.m2_closed_form, row.t1a_norm
        ));
        out.checks.push(Check::at_most(format!("theorem bound: ||T_1(a)|| <= M^2 at m_unit={m}"), row.t1a_norm, row.m2_grid, 1e-8));
        if row.m2_closed_form.is_finite() {
            out.checks.push(Check::close(format!("theorem bound: M^2 closed form at m_unit={m}"), row.m2_grid, row.m2_closed_form, 1e-10));
        }
        out.rows.push(row);
    }
    if k == 1 {
        let limit = continuum_m2(c, Some(config.cutoff));
        let (errors, ratios) = halving_ratios(&out.rows, limit);
        out.lines.push(format!(
            "continuum at cutoff {}: {:.12}; without cutoff: {:.12}",
            config.cutoff,
            limit,
            continuum_m2(c, None)
        ));
        out.lines.push(format!("errors: {}", errors.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>().join(", ")));
        if errors.iter().all(|e| *e <= 1e-12) {
            out.checks.push(Check::at_most("theorem bound: M^2 grid error (exact case)", errors.iter().copied().fold(0.0, f64::max), 0.0, 1e-12));
        } else {
            let doubling = cells.windows(2).all(|w| w[1] == 2 * w[0]);
            for (i, r) in ratios.iter().enumerate() {
                out.lines.push(format!("grid convergence: halving ratio {}->{}: {r:.4}", cells[i], cells[i + 1]));
                if doubling {
                    out.checks.push(Check::close(format!("grid convergence: halving ratio {}->{}", cells[i], cells[i + 1]), *r, 2.0, 0.3));
                }
            }
        }
    }
    Ok(out)
}

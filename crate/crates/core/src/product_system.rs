//! The type I product system on the grid: spaces `E_t`, units, the
//! measurable ONB and the partial inner products of `omega_1` against it.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::direct_integral::Section;
use crate::error::{Error, Result};
use crate::grid_fock::{exponential_vector, FockVector, GridSpec, Interval, OccupationBasis};

/// `E_t` for grid times `t = cells * h`; `E_0 = C`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProductSystem {
    grid: GridSpec,
}

impl ProductSystem {
    pub fn new(grid: GridSpec) -> Self {
        Self { grid }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Basis of `E_t` for `t = cells * h`.
    pub fn space(&self, cells: usize) -> Arc<OccupationBasis> {
        OccupationBasis::shared(cells, self.grid.cutoff())
    }

    pub fn dim(&self, cells: usize) -> usize {
        self.space(cells).dim()
    }
}

/// A unital unit `omega_t = e(c 1_[0,t)) / ||e(c 1_[0,t))||` with constant
/// parameter `c`; `c = 0` is the vacuum unit.
///
/// Normalization uses the truncated norm, so `||omega_t|| = 1` exactly while
/// `omega_s omega_t = omega_{s+t}` only holds up to the truncation tail.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Unit {
    c: C64,
    grid: GridSpec,
}

impl Unit {
    pub fn new(c: C64, grid: GridSpec) -> Self {
        Self { c, grid }
    }

    pub fn vacuum(grid: GridSpec) -> Self {
        Self::new(C64::new(0.0, 0.0), grid)
    }

    pub fn parameter(&self) -> C64 {
        self.c
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn is_vacuum(&self) -> bool {
        self.c == C64::new(0.0, 0.0)
    }

    /// `omega_t` on `[0, cells)`.
    pub fn vector(&self, cells: usize) -> FockVector {
        let interval = Interval::from_origin(cells);
        if self.is_vacuum() {
            return FockVector::vacuum(interval, self.grid.cutoff());
        }
        let e = exponential_vector(&vec![self.c; cells], interval, &self.grid)
            .expect("step function length matches by construction");
        let n = e.norm();
        e.scaled(C64::new(1.0 / n, 0.0))
    }

    /// `omega_t` for a time given in grid units; errors when `t` is off-grid.
    pub fn vector_at(&self, t: f64) -> Result<FockVector> {
        let cells = t * self.grid.cells_per_unit() as f64;
        let rounded = cells.round();
        if t < 0.0 || (cells - rounded).abs() > 1e-9 {
            return Err(Error::InvalidGrid(format!("time {t} is not a grid time")));
        }
        Ok(self.vector(rounded as usize))
    }

    /// The section `(omega_alpha)_alpha` of `L`; a unit vector.
    pub fn section(&self) -> Section {
        let vectors = (0..self.grid.slices()).map(|j| self.vector(self.grid.alpha_cells(j))).collect();
        Section::from_fock(&self.grid, vectors).expect("unit vectors live on [0, alpha_j)")
    }
}

/// The `k`-th member `(e^k_alpha)_alpha` of the graded-lex ONB, `k` 1-based:
/// `k = 1` is the vacuum, `k = 2` one particle in the leftmost cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OnbSection {
    k: usize,
    grid: GridSpec,
}

impl OnbSection {
    /// `k` must exist in every `E_alpha`, i.e. `k <= dim E_h = cutoff + 1`.
    pub fn new(k: usize, grid: GridSpec) -> Result<Self> {
        let max = OccupationBasis::shared(grid.alpha_cells(0), grid.cutoff()).dim();
        if k == 0 || k > max {
            return Err(Error::InvalidOnbIndex { k, max });
        }
        Ok(Self { k, grid })
    }

    pub fn index(&self) -> usize {
        self.k
    }

    /// `e^k_{alpha_j}` on `[0, alpha_j)`.
    pub fn component(&self, j: usize) -> FockVector {
        FockVector::basis_vector(
            Interval::from_origin(self.grid.alpha_cells(j)),
            self.grid.cutoff(),
            self.k - 1,
        )
        .expect("index checked against the smallest slice")
    }

    /// The same vector placed at the end of `[0, 1)`, i.e. on `[1 - alpha_j, 1)`.
    pub fn component_in_unit_interval(&self, j: usize) -> FockVector {
        let shift = self.grid.cells_per_unit() - self.grid.alpha_cells(j);
        self.component(j).translate(shift as isize).expect("nonnegative shift")
    }

    pub fn section(&self) -> Section {
        let vectors = (0..self.grid.slices()).map(|j| self.component(j)).collect();
        Section::from_fock(&self.grid, vectors).expect("ONB vectors live on [0, alpha_j)")
    }
}

/// `f^k_{1-alpha} = (id_{1-alpha} (x) e^k_alpha*) omega_1` for every
/// representative; component `j` lives on `[0, 1 - alpha_j)`.
#[derive(Clone, Debug)]
pub struct FSection {
    k: usize,
    grid: GridSpec,
    components: Vec<FockVector>,
}

impl FSection {
    pub fn index(&self) -> usize {
        self.k
    }

    pub fn component(&self, j: usize) -> &FockVector {
        &self.components[j]
    }

    pub fn components(&self) -> &[FockVector] {
        &self.components
    }

    /// `M^2 = sum_j h ||f^k_{1-alpha_j}||^2`, the grid value of
    /// `∫_0^1 ||f^k_{1-gamma}||^2 d gamma`.
    pub fn m_integral(&self) -> f64 {
        self.components.iter().map(|f| self.grid.h() * f.norm_sqr()).sum()
    }
}

pub fn f_section(k: usize, omega1: &FockVector, grid: &GridSpec) -> Result<FSection> {
    let onb = OnbSection::new(k, *grid)?;
    if omega1.interval() != Interval::from_origin(grid.cells_per_unit()) || omega1.cutoff() != grid.cutoff() {
        return Err(Error::IntervalMismatch(format!(
            "omega_1 must live on [0, {}) at cutoff {}",
            grid.cells_per_unit(),
            grid.cutoff()
        )));
    }
    let components = (0..grid.slices())
        .map(|j| omega1.partial_inner_right(&onb.component_in_unit_interval(j)))
        .collect::<Result<Vec<_>>>()?;
    Ok(FSection { k, grid: *grid, components })
}

/// `M^2` for the `k`-th ONB section against `omega_1` of `unit`.
pub fn m_integral(k: usize, unit: &Unit) -> Result<f64> {
    let grid = unit.grid();
    Ok(f_section(k, &unit.vector(grid.cells_per_unit()), grid)?.m_integral())
}

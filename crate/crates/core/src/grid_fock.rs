//! Truncated symmetric Fock spaces over grid intervals.
//!
//! The time axis is cut into cells of width `h`. A Fock space over an interval
//! of `m` cells is spanned by occupation-number states, truncated to a total
//! particle number of at most `cutoff`. A state is stored as the sorted list of
//! occupied cell positions (relative to the interval start), so a state with
//! two particles in cell 3 is `[3, 3]`.
//!
//! Basis order is graded lexicographic: total occupation ascending, and within
//! one level the sorted position tuples ascending. That puts the vacuum first
//! and, among one-particle states, the leftmost cell first. The rank of a state
//! is computed combinatorially, so large spaces never need a lookup table.
//!
//! One-particle coordinates are orthonormalized (`phi_j = sqrt(h) f_j`), so
//! every inner product here is the plain conjugate-linear dot product.

use std::collections::HashMap;
use std::ops::Range;
use std::sync::{Arc, Mutex, OnceLock};

use arrayvec::ArrayVec;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Largest supported total occupation.
pub const MAX_CUTOFF: usize = 12;

/// Scratch buffer for particle positions; concatenations of two admissible
/// states never exceed twice the cutoff.
pub(crate) type Positions = ArrayVec<u16, { 2 * MAX_CUTOFF }>;

/// Cell width and occupation cutoff shared by every space in a computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GridSpec {
    cells_per_unit: usize,
    cutoff: usize,
}

impl GridSpec {
    pub fn new(cells_per_unit: usize, cutoff: usize) -> Result<Self> {
        if cells_per_unit == 0 {
            return Err(Error::InvalidGrid("cells per unit must be positive".into()));
        }
        if cutoff == 0 {
            return Err(Error::InvalidGrid(
                "cutoff must be at least 1 (cutoff 0 leaves one-dimensional spaces)".into(),
            ));
        }
        if cutoff > MAX_CUTOFF {
            return Err(Error::CutoffTooLarge(cutoff));
        }
        Ok(Self { cells_per_unit, cutoff })
    }

    pub fn cells_per_unit(&self) -> usize {
        self.cells_per_unit
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Cell width.
    pub fn h(&self) -> f64 {
        1.0 / self.cells_per_unit as f64
    }

    /// Number of cells spanned by `units` time units.
    pub fn cells(&self, units: usize) -> usize {
        units * self.cells_per_unit
    }

    /// Cell count of the representative `alpha_j = (j + 1) h` of cell `j` of
    /// `[0, 1)`. Right endpoints keep every `E_alpha` nonempty.
    pub fn alpha_cells(&self, j: usize) -> usize {
        j + 1
    }

    /// Number of grid representatives in `[0, 1)`.
    pub fn slices(&self) -> usize {
        self.cells_per_unit
    }
}

/// The half-open cell range `[start, end)`, i.e. `[start h, end h)` in time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    start: usize,
    end: usize,
}

impl Interval {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start > end {
            return Err(Error::IntervalMismatch(format!("start {start} > end {end}")));
        }
        Ok(Self { start, end })
    }

    /// `[0, cells)`.
    pub fn from_origin(cells: usize) -> Self {
        Self { start: 0, end: cells }
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.end
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn shifted(&self, shift: isize) -> Result<Self> {
        let start = self.start as isize + shift;
        if start < 0 {
            return Err(Error::NegativeStart { shift });
        }
        let start = start as usize;
        Ok(Self { start, end: start + self.len() })
    }
}

pub(crate) fn binom(n: usize, r: usize) -> usize {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// Multisets of `size` elements drawn from `symbols` symbols.
fn multisets(symbols: usize, size: usize) -> usize {
    if size == 0 {
        1
    } else if symbols == 0 {
        0
    } else {
        binom(symbols + size - 1, size)
    }
}

/// Dimension of the truncated Fock space over `cells` cells.
pub fn fock_dimension(cells: usize, cutoff: usize) -> usize {
    (0..=cutoff).map(|k| multisets(cells, k)).sum()
}

/// Rank of a sorted position tuple among all states over `cells` cells.
///
/// Independent of the cutoff: truncation only removes states from the end.
pub fn state_index(cells: usize, positions: &[u16]) -> usize {
    let k = positions.len();
    if k == 0 {
        return 0;
    }
    // states with fewer than k particles
    let mut idx = binom(cells + k - 1, k - 1);
    let mut prev = 0usize;
    for (i, &p) in positions.iter().enumerate() {
        let p = p as usize;
        let r = k - i - 1;
        if p > prev {
            idx += binom(cells - prev + r, r + 1) - binom(cells - p + r, r + 1);
        }
        prev = p;
    }
    idx
}

/// Ordered occupation-number basis of a truncated Fock space.
#[derive(Debug)]
pub struct OccupationBasis {
    cells: usize,
    cutoff: usize,
    /// `level_offsets[k]` is the index of the first state with `k` particles.
    level_offsets: Vec<usize>,
    level_pos_offsets: Vec<usize>,
    positions: Vec<u16>,
}

type BasisCache = Mutex<HashMap<(usize, usize), Arc<OccupationBasis>>>;

fn basis_cache() -> &'static BasisCache {
    static CACHE: OnceLock<BasisCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl OccupationBasis {
    fn build(cells: usize, cutoff: usize) -> Self {
        assert!(cells <= u16::MAX as usize, "too many cells for u16 positions");
        let mut level_offsets = Vec::with_capacity(cutoff + 2);
        let mut level_pos_offsets = Vec::with_capacity(cutoff + 2);
        let mut positions = Vec::new();
        let mut count = 0usize;
        for k in 0..=cutoff {
            level_offsets.push(count);
            level_pos_offsets.push(positions.len());
            if k == 0 {
                count += 1;
                continue;
            }
            if cells == 0 {
                continue;
            }
            let mut tuple = vec![0u16; k];
            loop {
                positions.extend_from_slice(&tuple);
                count += 1;
                match (0..k).rev().find(|&i| (tuple[i] as usize) < cells - 1) {
                    Some(i) => {
                        let v = tuple[i] + 1;
                        tuple[i..].iter_mut().for_each(|t| *t = v);
                    }
                    None => break,
                }
            }
        }
        level_offsets.push(count);
        level_pos_offsets.push(positions.len());
        Self { cells, cutoff, level_offsets, level_pos_offsets, positions }
    }

    /// Shared basis for `cells` cells and the given cutoff.
    pub fn shared(cells: usize, cutoff: usize) -> Arc<Self> {
        let mut cache = basis_cache().lock().expect("basis cache poisoned");
        cache
            .entry((cells, cutoff))
            .or_insert_with(|| Arc::new(Self::build(cells, cutoff)))
            .clone()
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        *self.level_offsets.last().unwrap()
    }

    /// Index range of the states with exactly `k` particles.
    pub fn level(&self, k: usize) -> Range<usize> {
        if k > self.cutoff {
            return self.dim()..self.dim();
        }
        self.level_offsets[k]..self.level_offsets[k + 1]
    }

    /// Index range of the states with at most `k` particles.
    pub fn up_to(&self, k: usize) -> Range<usize> {
        0..self.level_offsets[k.min(self.cutoff) + 1]
    }

    /// Total occupation of state `i`.
    pub fn occupation(&self, i: usize) -> usize {
        self.level_offsets.partition_point(|&o| o <= i) - 1
    }

    /// Sorted particle positions of state `i`.
    pub fn state(&self, i: usize) -> &[u16] {
        let k = self.occupation(i);
        let start = self.level_pos_offsets[k] + (i - self.level_offsets[k]) * k;
        &self.positions[start..start + k]
    }

    /// Occupation numbers `n_j` of state `i`.
    pub fn occupation_vector(&self, i: usize) -> Vec<usize> {
        let mut n = vec![0; self.cells];
        for &p in self.state(i) {
            n[p as usize] += 1;
        }
        n
    }

    pub fn index_of(&self, positions: &[u16]) -> Option<usize> {
        if positions.len() > self.cutoff
            || positions.iter().any(|&p| p as usize >= self.cells)
            || positions.windows(2).any(|w| w[0] > w[1])
        {
            return None;
        }
        Some(state_index(self.cells, positions))
    }
}

/// Splits sorted positions at relative cell `at` into a left part and a right
/// part re-based to start at zero.
pub(crate) fn split_positions(positions: &[u16], at: usize) -> (&[u16], Positions) {
    let cut = positions.partition_point(|&p| (p as usize) < at);
    let right = positions[cut..].iter().map(|&p| p - at as u16).collect();
    (&positions[..cut], right)
}

/// Concatenates `left` with `right` shifted by `shift` cells.
pub(crate) fn concat_positions(left: &[u16], right: &[u16], shift: usize) -> Positions {
    let mut out = Positions::new();
    out.extend(left.iter().copied());
    out.extend(right.iter().map(|&p| p + shift as u16));
    out
}

/// A vector of a truncated Fock space over a grid interval.
#[derive(Clone, Debug)]
pub struct FockVector {
    interval: Interval,
    basis: Arc<OccupationBasis>,
    coeffs: Vec<C64>,
}

impl PartialEq for FockVector {
    fn eq(&self, other: &Self) -> bool {
        self.interval == other.interval
            && self.basis.cutoff == other.basis.cutoff
            && self.coeffs == other.coeffs
    }
}

impl FockVector {
    pub fn zeros(interval: Interval, cutoff: usize) -> Self {
        let basis = OccupationBasis::shared(interval.len(), cutoff);
        let coeffs = vec![C64::new(0.0, 0.0); basis.dim()];
        Self { interval, basis, coeffs }
    }

    pub fn vacuum(interval: Interval, cutoff: usize) -> Self {
        let mut v = Self::zeros(interval, cutoff);
        v.coeffs[0] = C64::new(1.0, 0.0);
        v
    }

    pub fn basis_vector(interval: Interval, cutoff: usize, index: usize) -> Result<Self> {
        let mut v = Self::zeros(interval, cutoff);
        if index >= v.dim() {
            return Err(Error::ShapeMismatch(format!(
                "basis index {index} out of range for dimension {}",
                v.dim()
            )));
        }
        v.coeffs[index] = C64::new(1.0, 0.0);
        Ok(v)
    }

    pub fn from_coefficients(interval: Interval, cutoff: usize, coeffs: Vec<C64>) -> Result<Self> {
        let basis = OccupationBasis::shared(interval.len(), cutoff);
        if coeffs.len() != basis.dim() {
            return Err(Error::ShapeMismatch(format!(
                "{} coefficients for a space of dimension {}",
                coeffs.len(),
                basis.dim()
            )));
        }
        Ok(Self { interval, basis, coeffs })
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn basis(&self) -> &Arc<OccupationBasis> {
        &self.basis
    }

    pub fn cutoff(&self) -> usize {
        self.basis.cutoff
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coefficients_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    pub fn into_coefficients(self) -> Vec<C64> {
        self.coeffs
    }

    fn check_same_space(&self, other: &Self) -> Result<()> {
        if self.interval != other.interval {
            return Err(Error::IntervalMismatch(format!(
                "{:?} vs {:?}",
                self.interval, other.interval
            )));
        }
        if self.cutoff() != other.cutoff() {
            return Err(Error::CutoffMismatch(self.cutoff(), other.cutoff()));
        }
        Ok(())
    }

    /// `<self, other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        self.check_same_space(other)?;
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Squared norms of the particle-number components.
    pub fn level_norms_sqr(&self) -> Vec<f64> {
        (0..=self.cutoff())
            .map(|k| self.coeffs[self.basis.level(k)].iter().map(|c| c.norm_sqr()).sum())
            .collect()
    }

    pub fn scaled(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= s);
        out
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: C64, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *a += s * b;
        }
        Ok(out)
    }

    /// Largest coefficient difference; intervals must agree.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_space(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// The same coefficients on an interval shifted by `shift` cells.
    pub fn translate(&self, shift: isize) -> Result<Self> {
        Ok(Self {
            interval: self.interval.shifted(shift)?,
            basis: self.basis.clone(),
            coeffs: self.coeffs.clone(),
        })
    }

    /// The product `x y` for `x` on `[a, b)` and `y` on `[b, c)`.
    ///
    /// Components whose total occupation exceeds the cutoff are dropped; see
    /// [`FockVector::filtering_defect`] for the size of what is lost.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if self.interval.end != other.interval.start {
            return Err(Error::NonAdjacent {
                left_start: self.interval.start,
                left_end: self.interval.end,
                right_start: other.interval.start,
                right_end: other.interval.end,
            });
        }
        if self.cutoff() != other.cutoff() {
            return Err(Error::CutoffMismatch(self.cutoff(), other.cutoff()));
        }
        let cutoff = self.cutoff();
        let shift = self.interval.len();
        let mut out = Self::zeros(Interval::new(self.interval.start, other.interval.end)?, cutoff);
        let cells = out.interval.len();
        for (a, &xa) in self.coeffs.iter().enumerate() {
            if xa == C64::new(0.0, 0.0) {
                continue;
            }
            let sa = self.basis.state(a);
            for b in other.basis.up_to(cutoff - sa.len()) {
                let joined = concat_positions(sa, other.basis.state(b), shift);
                out.coeffs[state_index(cells, &joined)] = xa * other.coeffs[b];
            }
        }
        Ok(out)
    }

    /// Norm of the part of `x (x) y` dropped by [`FockVector::multiply`].
    pub fn filtering_defect(&self, other: &Self) -> Result<f64> {
        if self.cutoff() != other.cutoff() {
            return Err(Error::CutoffMismatch(self.cutoff(), other.cutoff()));
        }
        let cutoff = self.cutoff();
        let (lx, ly) = (self.level_norms_sqr(), other.level_norms_sqr());
        let mut lost = 0.0;
        for (i, nx) in lx.iter().enumerate() {
            for (j, ny) in ly.iter().enumerate() {
                if i + j > cutoff {
                    lost += nx * ny;
                }
            }
        }
        Ok(lost.sqrt())
    }

    /// Rewrites the vector over the filtered tensor basis of the split at
    /// absolute cell `split`.
    pub fn factorize(&self, split: usize) -> Result<Factorized> {
        let Interval { start, end } = self.interval;
        if split < start || split > end {
            return Err(Error::SplitOutOfRange { split, start, end });
        }
        let basis = FilteredTensorBasis::shared(split - start, end - split, self.cutoff());
        let mut coeffs = vec![C64::new(0.0, 0.0); basis.len()];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[basis.concat_to_pair[i] as usize] = *c;
        }
        Ok(Factorized {
            left_interval: Interval { start, end: split },
            right_interval: Interval { start: split, end },
            basis,
            coeffs,
        })
    }

    /// `(id (x) x*) self` for `x` living on a suffix `[b, c)` of this interval.
    pub fn partial_inner_right(&self, x: &Self) -> Result<Self> {
        let Interval { start, end } = self.interval;
        if x.interval.end != end || x.interval.start < start {
            return Err(Error::IntervalMismatch(format!(
                "{:?} is not a suffix of {:?}",
                x.interval, self.interval
            )));
        }
        if self.cutoff() != x.cutoff() {
            return Err(Error::CutoffMismatch(self.cutoff(), x.cutoff()));
        }
        let at = x.interval.start - start;
        let mut out = Self::zeros(Interval { start, end: x.interval.start }, self.cutoff());
        for (i, &yi) in self.coeffs.iter().enumerate() {
            if yi == C64::new(0.0, 0.0) {
                continue;
            }
            let (left, right) = split_positions(self.basis.state(i), at);
            let r = state_index(x.interval.len(), &right);
            out.coeffs[state_index(at, left)] += x.coeffs[r].conj() * yi;
        }
        Ok(out)
    }
}

/// Exponential vector of the step function `f` (one value per cell) on
/// `interval`, truncated at the grid cutoff.
pub fn exponential_vector(f: &[C64], interval: Interval, grid: &GridSpec) -> Result<FockVector> {
    if f.len() != interval.len() {
        return Err(Error::LengthMismatch { expected: interval.len(), got: f.len() });
    }
    let sqrt_h = grid.h().sqrt();
    let phi: Vec<C64> = f.iter().map(|v| v * sqrt_h).collect();
    let mut out = FockVector::zeros(interval, grid.cutoff());
    let basis = out.basis.clone();
    for (i, c) in out.coeffs.iter_mut().enumerate() {
        let state = basis.state(i);
        let mut value = C64::new(1.0, 0.0);
        // runs of equal positions carry phi^n / sqrt(n!)
        let mut run = 0usize;
        for (k, &p) in state.iter().enumerate() {
            run = if k > 0 && state[k - 1] == p { run + 1 } else { 1 };
            value *= phi[p as usize] / (run as f64).sqrt();
        }
        *c = value;
    }
    Ok(out)
}

/// Index pairs `(left, right)` of `E_s (x) E_t` with total occupation within
/// the cutoff, ordered lexicographically. Bijective with the concatenated basis.
#[derive(Debug)]
pub struct FilteredTensorBasis {
    left: Arc<OccupationBasis>,
    right: Arc<OccupationBasis>,
    pairs: Vec<(u32, u32)>,
    concat_to_pair: Vec<u32>,
}

type TensorCache = Mutex<HashMap<(usize, usize, usize), Arc<FilteredTensorBasis>>>;

impl FilteredTensorBasis {
    pub fn shared(left_cells: usize, right_cells: usize, cutoff: usize) -> Arc<Self> {
        static CACHE: OnceLock<TensorCache> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut cache = cache.lock().expect("tensor cache poisoned");
        cache
            .entry((left_cells, right_cells, cutoff))
            .or_insert_with(|| Arc::new(Self::build(left_cells, right_cells, cutoff)))
            .clone()
    }

    fn build(left_cells: usize, right_cells: usize, cutoff: usize) -> Self {
        let left = OccupationBasis::shared(left_cells, cutoff);
        let right = OccupationBasis::shared(right_cells, cutoff);
        let total = left_cells + right_cells;
        let mut pairs = Vec::with_capacity(fock_dimension(total, cutoff));
        let mut concat_to_pair = vec![u32::MAX; fock_dimension(total, cutoff)];
        for a in 0..left.dim() {
            let sa = left.state(a);
            for b in right.up_to(cutoff - sa.len()) {
                let joined = concat_positions(sa, right.state(b), left_cells);
                concat_to_pair[state_index(total, &joined)] = pairs.len() as u32;
                pairs.push((a as u32, b as u32));
            }
        }
        debug_assert!(concat_to_pair.iter().all(|&p| p != u32::MAX));
        Self { left, right, pairs, concat_to_pair }
    }

    pub fn left(&self) -> &Arc<OccupationBasis> {
        &self.left
    }

    pub fn right(&self) -> &Arc<OccupationBasis> {
        &self.right
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pair(&self, i: usize) -> (usize, usize) {
        let (a, b) = self.pairs[i];
        (a as usize, b as usize)
    }

    /// Position of the pair in this basis, `None` if it is filtered out.
    pub fn pair_index(&self, left: usize, right: usize) -> Option<usize> {
        let (sa, sb) = (self.left.state(left), self.right.state(right));
        if sa.len() + sb.len() > self.left.cutoff() {
            return None;
        }
        let joined = concat_positions(sa, sb, self.left.cells());
        let total = self.left.cells() + self.right.cells();
        Some(self.concat_to_pair[state_index(total, &joined)] as usize)
    }

    /// Index of the concatenated state corresponding to pair `i`.
    pub fn concat_index(&self, i: usize) -> usize {
        let (a, b) = self.pair(i);
        let joined = concat_positions(self.left.state(a), self.right.state(b), self.left.cells());
        state_index(self.left.cells() + self.right.cells(), &joined)
    }
}

/// Coefficients of a vector over a [`FilteredTensorBasis`].
#[derive(Clone, Debug)]
pub struct Factorized {
    basis: Arc<FilteredTensorBasis>,
    left_interval: Interval,
    right_interval: Interval,
    coeffs: Vec<C64>,
}

impl Factorized {
    pub fn basis(&self) -> &Arc<FilteredTensorBasis> {
        &self.basis
    }

    pub fn left_interval(&self) -> Interval {
        self.left_interval
    }

    pub fn right_interval(&self) -> Interval {
        self.right_interval
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coefficient(&self, left: usize, right: usize) -> C64 {
        self.basis
            .pair_index(left, right)
            .map_or(C64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Inverse of [`FockVector::factorize`].
    pub fn recompose(&self) -> FockVector {
        let interval = Interval { start: self.left_interval.start, end: self.right_interval.end };
        let mut out = FockVector::zeros(interval, self.basis.left.cutoff());
        for (i, c) in self.coeffs.iter().enumerate() {
            out.coeffs[self.basis.concat_index(i)] = *c;
        }
        out
    }
}

//! The discrete right dilation on a finite window and the integer-time right
//! dilation `w_n` on `K = L (x) K̆`.
//!
//! `K̆` is the truncated Fock space over `[0, window)` with `omegă` its vacuum.
//! Every map here is a reindexing of occupation states: `w_n(x (x) Xi)` glues
//! `x` in front of the particles of `Xi`, hands the first `alpha` cells to the
//! `L` slot and the rest to `K̆`. States whose total occupation would exceed the
//! cutoff are dropped, so the maps are isometric on inputs where that does not
//! happen ("admissible" inputs).

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::direct_integral::{section_inner, Section, SectionLayout};
use crate::error::{Error, Result};
use crate::grid_fock::{
    concat_positions, split_positions, state_index, FockVector, GridSpec, Interval, OccupationBasis,
};

/// Largest `K̆` for which dense matrices are formed.
pub const DENSE_WINDOW_LIMIT: usize = 4000;

const ZERO: C64 = C64::new(0.0, 0.0);

/// `K̆` realized on `[0, window_units)`.
#[derive(Clone, Debug)]
pub struct DiscreteDilation {
    grid: GridSpec,
    window_units: usize,
    basis: Arc<OccupationBasis>,
}

impl DiscreteDilation {
    pub fn new(grid: GridSpec, window_units: usize) -> Result<Self> {
        if window_units == 0 {
            return Err(Error::Config("the window must be at least one time unit".into()));
        }
        let basis = OccupationBasis::shared(grid.cells(window_units), grid.cutoff());
        Ok(Self { grid, window_units, basis })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn window_units(&self) -> usize {
        self.window_units
    }

    pub fn window_cells(&self) -> usize {
        self.basis.cells()
    }

    pub fn basis(&self) -> &Arc<OccupationBasis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn interval(&self) -> Interval {
        Interval::from_origin(self.window_cells())
    }

    /// `omegă`.
    pub fn vacuum(&self) -> FockVector {
        FockVector::vacuum(self.interval(), self.grid.cutoff())
    }

    fn check_time(&self, n: usize) -> Result<usize> {
        let shift = self.grid.cells(n);
        if shift > self.window_cells() {
            return Err(Error::TruncationOverflow { shift_cells: shift, window_cells: self.window_cells() });
        }
        Ok(shift)
    }

    /// Whether state `i` of `K̆` has a particle in the last `shift` cells.
    fn occupies_tail(&self, i: usize, shift: usize) -> bool {
        self.basis.state(i).last().is_some_and(|&p| p as usize + shift >= self.window_cells())
    }

    /// Image of state `b` under `w̆_n(e_s (x) .)`: `s` on the first `shift`
    /// cells, `b` moved right by `shift`. `None` if the cutoff is exceeded.
    fn shifted_state(&self, s: &[u16], b: usize, shift: usize) -> Option<usize> {
        let sb = self.basis.state(b);
        if s.len() + sb.len() > self.grid.cutoff() {
            return None;
        }
        Some(state_index(self.window_cells(), &concat_positions(s, sb, shift)))
    }

    /// The copy of `x in E_n` in `K̆`: `x` followed by the vacuum.
    pub fn embed(&self, x: &FockVector) -> Result<FockVector> {
        self.w_breve(x, &self.vacuum())
    }

    /// `w̆_n(x (x) y)` for `x` on `[0, n)`.
    pub fn w_breve(&self, x: &FockVector, y: &FockVector) -> Result<FockVector> {
        let shift = x.interval().len();
        if x.interval().start() != 0 {
            return Err(Error::IntervalMismatch(format!("x must start at 0, got {:?}", x.interval())));
        }
        if y.interval() != self.interval() {
            return Err(Error::IntervalMismatch(format!("y must live on {:?}", self.interval())));
        }
        if shift > self.window_cells() {
            return Err(Error::TruncationOverflow { shift_cells: shift, window_cells: self.window_cells() });
        }
        let mut out = FockVector::zeros(self.interval(), self.grid.cutoff());
        let xb = x.basis();
        for (b, &yb) in y.coefficients().iter().enumerate() {
            if yb == ZERO {
                continue;
            }
            if self.occupies_tail(b, shift) {
                return Err(Error::TruncationOverflow { shift_cells: shift, window_cells: self.window_cells() });
            }
            for (s, &xs) in x.coefficients().iter().enumerate() {
                if xs == ZERO {
                    continue;
                }
                if let Some(t) = self.shifted_state(xb.state(s), b, shift) {
                    out.coefficients_mut()[t] += xs * yb;
                }
            }
        }
        Ok(out)
    }

    /// Support projection of `[0, n)`: states with no particle in cells `>= n`.
    pub fn theta_breve_vacuum_projection(&self, n: usize) -> Result<DMatrix<C64>> {
        let shift = self.check_time(n)?;
        self.dense_guard()?;
        let dim = self.dim();
        Ok(DMatrix::from_fn(dim, dim, |i, j| {
            let inside = self.basis.state(i).last().is_none_or(|&p| (p as usize) < shift);
            if i == j && inside {
                C64::new(1.0, 0.0)
            } else {
                ZERO
            }
        }))
    }

    /// `θ̆_n(omegă omegă*) = sum_p w̆_n(e_p (x) omegă) w̆_n(e_p (x) omegă)*`.
    pub fn theta_breve_by_conjugation(&self, n: usize) -> Result<DMatrix<C64>> {
        let shift = self.check_time(n)?;
        self.dense_guard()?;
        let en = Interval::from_origin(shift);
        let dim = self.dim();
        let mut out = DMatrix::from_element(dim, dim, ZERO);
        for p in 0..OccupationBasis::shared(shift, self.grid.cutoff()).dim() {
            let ep = FockVector::basis_vector(en, self.grid.cutoff(), p)?;
            let v = self.w_breve(&ep, &self.vacuum())?;
            for (i, a) in v.coefficients().iter().enumerate() {
                if *a == ZERO {
                    continue;
                }
                for (j, b) in v.coefficients().iter().enumerate() {
                    out[(i, j)] += a * b.conj();
                }
            }
        }
        Ok(out)
    }

    fn dense_guard(&self) -> Result<()> {
        if self.dim() > DENSE_WINDOW_LIMIT {
            return Err(Error::SizeGuard { what: "window space", size: self.dim(), limit: DENSE_WINDOW_LIMIT });
        }
        Ok(())
    }
}

/// `K = L (x) K̆`; vectors are sections with `H1 = C` and `H2 = K̆`.
#[derive(Clone, Debug)]
pub struct BigSpace {
    grid: GridSpec,
    window: DiscreteDilation,
    layout: SectionLayout,
}

/// A vector of `K`.
pub type KVector = Section;

impl BigSpace {
    pub fn new(grid: GridSpec, window_units: usize) -> Result<Self> {
        let window = DiscreteDilation::new(grid, window_units)?;
        let layout = SectionLayout::new(&grid, 1, window.dim());
        Ok(Self { grid, window, layout })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn window(&self) -> &DiscreteDilation {
        &self.window
    }

    /// `(sum_j dim E_{alpha_j}) dim K̆`, the storage size of a vector; see
    /// [`BigSpace::restrict`] for the states actually in use.
    pub fn dim(&self) -> usize {
        self.layout.total()
    }

    pub fn zeros(&self) -> KVector {
        Section::zeros(&self.grid, 1, self.window.dim())
    }

    /// `Y (x) omegă`.
    pub fn tensor_vacuum(&self, y: &Section) -> Result<KVector> {
        check_l(y, &self.grid)?;
        let kd = self.window.dim();
        let components = (0..y.slices())
            .map(|j| {
                let mut c = vec![ZERO; y.slice_dim(j) * kd];
                for (a, v) in y.component(j).iter().enumerate() {
                    c[a * kd] = *v;
                }
                c
            })
            .collect();
        Section::from_components(&self.grid, 1, kd, components)
    }

    /// The `L` part of a vector in the range of `Q`.
    pub fn vacuum_part(&self, xi: &KVector) -> Result<Section> {
        self.check_k(xi)?;
        let kd = self.window.dim();
        let components = (0..xi.slices()).map(|j| xi.component(j).iter().step_by(kd).copied().collect()).collect();
        Section::from_components(&self.grid, 1, 1, components)
    }

    /// `Q xi` with `Q = id_L (x) omegă omegă*`.
    pub fn q_project(&self, xi: &KVector) -> Result<KVector> {
        self.q_n_project(0, xi)
    }

    /// `Q_n xi`: keeps the `K̆` states with no particle in cells `>= n`.
    ///
    /// This is the structural form of `θ_n(Q)`; [`BigSpace::theta_q_apply`]
    /// computes the same projection through the dilation.
    pub fn q_n_project(&self, n: usize, xi: &KVector) -> Result<KVector> {
        self.check_k(xi)?;
        let shift = self.window.check_time(n)?;
        let inside = self.window.window_cells() - shift;
        self.filter(xi, |_, b| !self.window.occupies_tail(b, inside))
    }

    /// Drops the components whose total occupation exceeds the cutoff.
    ///
    /// `L` and `K̆` are truncated separately, so their tensor product also holds
    /// states with up to twice the cutoff. The dilation never reaches them:
    /// `K` proper is the span of the states kept here, and `w_n` is unitary onto it.
    pub fn restrict(&self, xi: &KVector) -> Result<KVector> {
        self.check_k(xi)?;
        self.filter(xi, |_, _| true)
    }

    fn filter<F: Fn(usize, usize) -> bool>(&self, xi: &KVector, keep: F) -> Result<KVector> {
        let cutoff = self.grid.cutoff();
        let kd = self.window.dim();
        let kb = self.window.basis();
        let mut out = xi.clone();
        for j in 0..out.slices() {
            let eb = OccupationBasis::shared(self.grid.alpha_cells(j), cutoff);
            for (i, c) in out.component_mut(j).iter_mut().enumerate() {
                let (a, b) = (i / kd, i % kd);
                if eb.occupation(a) + kb.occupation(b) > cutoff || !keep(a, b) {
                    *c = ZERO;
                }
            }
        }
        Ok(out)
    }

    /// A random unit vector of `K`.
    pub fn random_unit<R: rand::Rng>(&self, rng: &mut R) -> Result<KVector> {
        let v = self.restrict(&Section::random(&self.grid, 1, self.window.dim(), rng))?;
        let n = v.norm();
        Ok(v.scaled(C64::new(1.0 / n, 0.0)))
    }

    /// `w_n(x (x) Xi)` for `x in E_n` on `[0, n)`.
    pub fn w_n(&self, n: usize, x: &FockVector, xi: &KVector) -> Result<KVector> {
        self.check_k(xi)?;
        let shift = self.window.check_time(n)?;
        if x.interval() != Interval::from_origin(shift) || x.cutoff() != self.grid.cutoff() {
            return Err(Error::IntervalMismatch(format!("x must live on [0, {shift}) at the grid cutoff")));
        }
        let cutoff = self.grid.cutoff();
        let kd = self.window.dim();
        let kb = self.window.basis().clone();
        let xb = x.basis();
        let mut out = self.zeros();
        for j in 0..xi.slices() {
            let acells = self.grid.alpha_cells(j);
            let eb = OccupationBasis::shared(acells, cutoff);
            let src = xi.component(j);
            let dst = out.component_mut(j);
            for (idx, &v) in src.iter().enumerate() {
                if v == ZERO {
                    continue;
                }
                let (a, b) = (idx / kd, idx % kd);
                if self.window.occupies_tail(b, shift) {
                    return Err(Error::TruncationOverflow { shift_cells: shift, window_cells: self.window.window_cells() });
                }
                let (sa, sb) = (eb.state(a), kb.state(b));
                for (s, &xs) in x.coefficients().iter().enumerate() {
                    if xs == ZERO {
                        continue;
                    }
                    let ss = xb.state(s);
                    if ss.len() + sa.len() + sb.len() > cutoff {
                        continue;
                    }
                    // x y_alpha on [0, n + alpha), cut after alpha cells
                    let joined = concat_positions(ss, sa, shift);
                    let (l, r) = split_positions(&joined, acells);
                    let t = concat_positions(&r, sb, shift);
                    dst[state_index(acells, l) * kd + state_index(self.window.window_cells(), &t)] += xs * v;
                }
            }
        }
        Ok(out)
    }

    /// `w_n^*`, returned as a section with `H1 = E_n` and `H2 = K̆`.
    pub fn w_n_adjoint(&self, n: usize, xi: &KVector) -> Result<Section> {
        self.check_k(xi)?;
        let shift = self.window.check_time(n)?;
        let cutoff = self.grid.cutoff();
        let kd = self.window.dim();
        let en_dim = OccupationBasis::shared(shift, cutoff).dim();
        let kb = self.window.basis().clone();
        let mut out = Section::zeros(&self.grid, en_dim, kd);
        for j in 0..xi.slices() {
            let acells = self.grid.alpha_cells(j);
            let d = xi.slice_dim(j);
            let eb = OccupationBasis::shared(acells, cutoff);
            let src = xi.component(j);
            let dst = out.component_mut(j);
            for (idx, &v) in src.iter().enumerate() {
                if v == ZERO {
                    continue;
                }
                let (l, t) = (idx / kd, idx % kd);
                if eb.occupation(l) + kb.occupation(t) > cutoff {
                    // outside the range of w_n
                    continue;
                }
                let (r, b) = split_positions(kb.state(t), shift);
                let joined = concat_positions(eb.state(l), r, acells);
                let (s, a) = split_positions(&joined, shift);
                let (s, a, b) = (state_index(shift, s), state_index(acells, &a), state_index(self.window.window_cells(), &b));
                dst[(s * d + a) * kd + b] += v;
            }
        }
        Ok(out)
    }

    /// `w_n^*(Y (x) omegă)` with the `omegă` factor dropped: the section
    /// `(u_{n,alpha}^*(y_alpha omega_n))_alpha` for the vacuum unit.
    pub fn w_n_adjoint_on_q_range(&self, n: usize, y: &Section) -> Result<Section> {
        check_l(y, &self.grid)?;
        let shift = self.window.check_time(n)?;
        let cutoff = self.grid.cutoff();
        let en_dim = OccupationBasis::shared(shift, cutoff).dim();
        let mut out = Section::zeros(&self.grid, en_dim, 1);
        for j in 0..y.slices() {
            let acells = self.grid.alpha_cells(j);
            let d = y.slice_dim(j);
            let eb = OccupationBasis::shared(acells, cutoff);
            let dst = out.component_mut(j);
            for (l, &v) in y.component(j).iter().enumerate() {
                if v == ZERO {
                    continue;
                }
                // the K̆ part is the vacuum, so nothing moves back from the window
                let (s, a) = split_positions(eb.state(l), shift);
                dst[state_index(shift, s) * d + state_index(acells, &a)] += v;
            }
        }
        Ok(out)
    }

    /// `w_n (e_p (x) .)` for every basis vector `e_p` of `E_n`.
    pub fn dilate_basis(&self, n: usize, xi: &KVector) -> Result<Vec<KVector>> {
        let shift = self.window.check_time(n)?;
        let en = Interval::from_origin(shift);
        (0..OccupationBasis::shared(shift, self.grid.cutoff()).dim())
            .map(|p| self.w_n(n, &FockVector::basis_vector(en, self.grid.cutoff(), p)?, xi))
            .collect()
    }

    /// `θ_n(Q) xi = w_n (id (x) Q) w_n^* xi`.
    pub fn theta_q_apply(&self, n: usize, xi: &KVector) -> Result<KVector> {
        let shift = self.window.check_time(n)?;
        let cutoff = self.grid.cutoff();
        let mut pulled = self.w_n_adjoint(n, xi)?;
        let kd = self.window.dim();
        for j in 0..pulled.slices() {
            for (i, c) in pulled.component_mut(j).iter_mut().enumerate() {
                if i % kd != 0 {
                    *c = ZERO;
                }
            }
        }
        let en = Interval::from_origin(shift);
        let en_dim = OccupationBasis::shared(shift, cutoff).dim();
        let mut out = self.zeros();
        for p in 0..en_dim {
            // the p-th slot of the pulled-back vector as a vector of K
            let components = (0..pulled.slices())
                .map(|j| {
                    let block = pulled.slice_dim(j) * kd;
                    pulled.component(j)[p * block..(p + 1) * block].to_vec()
                })
                .collect();
            let slot = Section::from_components(&self.grid, 1, kd, components)?;
            let ep = FockVector::basis_vector(en, cutoff, p)?;
            out = out.add_scaled(C64::new(1.0, 0.0), &self.w_n(n, &ep, &slot)?)?;
        }
        Ok(out)
    }

    fn check_k(&self, xi: &KVector) -> Result<()> {
        if xi.grid() != &self.grid || xi.left_dim() != 1 || xi.right_dim() != self.window.dim() {
            return Err(Error::ShapeMismatch("not a vector of K".into()));
        }
        Ok(())
    }
}

fn check_l(y: &Section, grid: &GridSpec) -> Result<()> {
    if y.grid() != grid || y.left_dim() != 1 || y.right_dim() != 1 {
        return Err(Error::ShapeMismatch("not a section of L".into()));
    }
    Ok(())
}

/// A finite sum of rank-one operators `sum_i xi_i eta_i^*` on `K`.
#[derive(Clone, Debug, Default)]
pub struct RankSum {
    terms: Vec<(KVector, KVector)>,
}

impl RankSum {
    pub fn rank_one(xi: KVector, eta: KVector) -> Self {
        Self { terms: vec![(xi, eta)] }
    }

    pub fn terms(&self) -> &[(KVector, KVector)] {
        &self.terms
    }

    pub fn push(&mut self, xi: KVector, eta: KVector) {
        self.terms.push((xi, eta));
    }

    pub fn apply(&self, v: &KVector) -> Result<KVector> {
        let mut out = Section::zeros(v.grid(), v.left_dim(), v.right_dim());
        for (xi, eta) in &self.terms {
            out = out.add_scaled(section_inner(eta, v)?, xi)?;
        }
        Ok(out)
    }

    /// `P a P` for a projection given by its action on vectors.
    pub fn compress<F: Fn(&KVector) -> Result<KVector>>(&self, project: F) -> Result<Self> {
        let terms = self
            .terms
            .iter()
            .map(|(xi, eta)| Ok((project(xi)?, project(eta)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { terms })
    }

    /// `θ_n(a) = w_n (id_n (x) a) w_n^*`, term by term.
    pub fn theta(&self, space: &BigSpace, n: usize) -> Result<Self> {
        let mut terms = Vec::new();
        for (xi, eta) in &self.terms {
            let xs = space.dilate_basis(n, xi)?;
            let es = space.dilate_basis(n, eta)?;
            terms.extend(xs.into_iter().zip(es));
        }
        Ok(Self { terms })
    }
}

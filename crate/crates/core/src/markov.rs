//! The compressed Markov semigroup `T_n(b) = G_n^* (id_n (x) b) G_n` on `B(L)`
//! and the checks built on it.
//!
//! `G_n : L -> E_n (x) L` maps `Y` to `(u_{n,alpha}^*(y_alpha omega_n))_alpha`.
//! It is block diagonal in `alpha`, so it is kept as one sparse matrix whose
//! row `(p, r)` sits at `p * dim L + r`; matrices on `L` are written in the
//! orthonormal coordinates `sqrt(h) y_j`, in which `G_n` has the same entries.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;

use crate::check::{all_pass, Check};
use crate::dilation::{BigSpace, KVector};
use crate::direct_integral::{section_inner, Section, SectionLayout};
use crate::error::{Error, Result};
use crate::grid_fock::{concat_positions, split_positions, state_index, FockVector, GridSpec, Interval, OccupationBasis};
use crate::linalg::{hermitian_eigenvalues, hermitian_norm, lanczos_top, random_hermitian, SparseMatrix};
use crate::oracles::{closed_form_m2, same_unit_dagger_deficit_bound, spatial_dagger_value, spatial_inner};
use crate::product_system::{f_section, OnbSection, Unit};

/// Largest `dim L` for which dense operators on `L` are formed.
pub const DENSE_L_LIMIT: usize = 3000;

const ZERO: C64 = C64::new(0.0, 0.0);

fn l_layout(grid: &GridSpec) -> SectionLayout {
    SectionLayout::new(grid, 1, 1)
}

/// The Stinespring factor `G_n`.
#[derive(Clone, Debug)]
pub struct StinespringMap {
    n: usize,
    grid: GridSpec,
    en_dim: usize,
    layout: SectionLayout,
    matrix: SparseMatrix,
}

/// `G_n` for `unit`; the vacuum unit goes through the dilation, other units
/// through `u_{n,alpha}^*(y_alpha omega_n)` directly.
pub fn stinespring(n: usize, unit: &Unit, space: &BigSpace) -> Result<StinespringMap> {
    if space.grid() != unit.grid() {
        return Err(Error::ShapeMismatch("unit and dilation live on different grids".into()));
    }
    let window = space.window();
    if n > window.window_units() {
        return Err(Error::TruncationOverflow { shift_cells: unit.grid().cells(n), window_cells: window.window_cells() });
    }
    if unit.is_vacuum() {
        StinespringMap::from_dilation(n, space)
    } else {
        StinespringMap::from_unit(n, unit)
    }
}

impl StinespringMap {
    /// Columns from `u_{n,alpha}^*(e_l omega_n)`, glued and split state by state.
    pub fn from_unit(n: usize, unit: &Unit) -> Result<Self> {
        let grid = *unit.grid();
        let layout = l_layout(&grid);
        let l_dim = layout.total();
        let shift = grid.cells(n);
        let cutoff = grid.cutoff();
        let omega = unit.vector(shift);
        let ob = omega.basis().clone();
        let mut matrix = SparseMatrix::new(OccupationBasis::shared(shift, cutoff).dim() * l_dim);
        for j in 0..layout.slices() {
            let ac = grid.alpha_cells(j);
            let eb = OccupationBasis::shared(ac, cutoff);
            for l in 0..eb.dim() {
                let sl = eb.state(l);
                let mut col = Vec::new();
                for q in ob.up_to(cutoff - sl.len()) {
                    let w = omega.coefficients()[q];
                    if w == ZERO {
                        continue;
                    }
                    let joined = concat_positions(sl, ob.state(q), ac);
                    let (s, a) = split_positions(&joined, shift);
                    col.push((state_index(shift, s) * l_dim + layout.offset(j) + state_index(ac, &a), w));
                }
                matrix.push_column(col);
            }
        }
        Ok(Self { n, grid, en_dim: ob.dim(), layout, matrix })
    }

    /// Columns from `w_n^*(e_l (x) omegă)` on basis sections; vacuum unit only.
    pub fn from_dilation(n: usize, space: &BigSpace) -> Result<Self> {
        let grid = *space.grid();
        let layout = l_layout(&grid);
        let l_dim = layout.total();
        if l_dim > DENSE_L_LIMIT {
            return Err(Error::SizeGuard { what: "section space", size: l_dim, limit: DENSE_L_LIMIT });
        }
        let en_dim = OccupationBasis::shared(grid.cells(n), grid.cutoff()).dim();
        let mut matrix = SparseMatrix::new(en_dim * l_dim);
        for j in 0..layout.slices() {
            let d = layout.slice_dim(j);
            for l in 0..d {
                let mut y = Section::zeros(&grid, 1, 1);
                y.component_mut(j)[l] = C64::new(1.0, 0.0);
                let g = space.w_n_adjoint_on_q_range(n, &y)?;
                let col = g.component(j).iter().enumerate().filter(|(_, v)| **v != ZERO).map(|(i, v)| {
                    let (s, a) = (i / d, i % d);
                    (s * l_dim + layout.offset(j) + a, *v)
                });
                matrix.push_column(col.collect::<Vec<_>>());
            }
        }
        Ok(Self { n, grid, en_dim, layout, matrix })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// `dim E_n`.
    pub fn en_dim(&self) -> usize {
        self.en_dim
    }

    /// `dim L`.
    pub fn l_dim(&self) -> usize {
        self.layout.total()
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    /// `G_n Y` as a section of `∫ (E_n (x) E_alpha)`.
    pub fn apply(&self, y: &Section) -> Result<Section> {
        if y.grid() != &self.grid || y.left_dim() != 1 || y.right_dim() != 1 {
            return Err(Error::ShapeMismatch("G_n acts on sections of L".into()));
        }
        let l_dim = self.l_dim();
        let mut out = Section::zeros(&self.grid, self.en_dim, 1);
        for j in 0..self.layout.slices() {
            let d = self.layout.slice_dim(j);
            let off = self.layout.offset(j);
            for (l, &v) in y.component(j).iter().enumerate() {
                if v == ZERO {
                    continue;
                }
                for (row, g) in self.matrix.column(off + l) {
                    let (s, a) = (row / l_dim, row % l_dim - off);
                    out.component_mut(j)[s * d + a] += g * v;
                }
            }
        }
        Ok(out)
    }

    /// `||G_n^* G_n - id_L||`.
    pub fn isometry_defect(&self) -> Result<f64> {
        let l_dim = self.l_dim();
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); self.matrix.rows()];
        for c in 0..l_dim {
            for (r, v) in self.matrix.column(c) {
                rows[r].push((c, v));
            }
        }
        let mut diag = vec![0.0; l_dim];
        let mut off_diag = false;
        for row in &rows {
            for (c, v) in row {
                diag[*c] += v.norm_sqr();
            }
            off_diag |= row.len() > 1;
        }
        if !off_diag {
            return Ok(diag.iter().map(|d| (d - 1.0).abs()).fold(0.0, f64::max));
        }
        let gram = self.gram_dense()?;
        Ok(hermitian_norm(&(gram - DMatrix::identity(l_dim, l_dim))))
    }

    fn gram_dense(&self) -> Result<DMatrix<C64>> {
        let g = self.to_dense()?;
        Ok(g.adjoint() * g)
    }

    pub fn to_dense(&self) -> Result<DMatrix<C64>> {
        if self.l_dim() > DENSE_L_LIMIT {
            return Err(Error::SizeGuard { what: "section space", size: self.l_dim(), limit: DENSE_L_LIMIT });
        }
        Ok(self.matrix.to_dense())
    }

    /// Entries of `G_n` grouped by the `E_n` index: the Kraus operators.
    fn kraus(&self) -> Vec<Vec<(usize, usize, C64)>> {
        let l_dim = self.l_dim();
        let mut k = vec![Vec::new(); self.en_dim];
        for c in 0..l_dim {
            for (row, v) in self.matrix.column(c) {
                k[row / l_dim].push((row % l_dim, c, v));
            }
        }
        k
    }

    /// `T_n(b) = G_n^* (id_n (x) b) G_n`.
    pub fn t_apply(&self, b: &DMatrix<C64>) -> Result<CompressedOperator> {
        let l_dim = self.l_dim();
        if b.nrows() != l_dim || b.ncols() != l_dim {
            return Err(Error::ShapeMismatch(format!("operator of shape {:?} on L of dimension {l_dim}", b.shape())));
        }
        if l_dim > DENSE_L_LIMIT {
            return Err(Error::SizeGuard { what: "section space", size: l_dim, limit: DENSE_L_LIMIT });
        }
        let mut t = DMatrix::from_element(l_dim, l_dim, ZERO);
        for ks in self.kraus() {
            for &(r1, c1, g1) in &ks {
                let g1c = g1.conj();
                for &(r2, c2, g2) in &ks {
                    t[(c1, c2)] += g1c * g2 * b[(r1, r2)];
                }
            }
        }
        Ok(CompressedOperator::new(t))
    }

    /// `V = (id_n (x) X^*) G_n` as a map from `L` coordinates to `E_n`.
    pub fn contract(&self, x: &Section) -> Result<SparseMatrix> {
        check_l(x, &self.grid)?;
        let l_dim = self.l_dim();
        let w = self.grid.h().sqrt();
        let mut v = SparseMatrix::new(self.en_dim);
        for j in 0..self.layout.slices() {
            let off = self.layout.offset(j);
            for l in 0..self.layout.slice_dim(j) {
                let mut col: Vec<(usize, C64)> = self
                    .matrix
                    .column(off + l)
                    .filter_map(|(row, g)| {
                        let xa = x.component(j)[row % l_dim - off];
                        (xa != ZERO).then(|| (row / l_dim, xa.conj() * g * w))
                    })
                    .collect();
                merge_entries(&mut col);
                v.push_column(col);
            }
        }
        Ok(v)
    }
}

fn merge_entries(col: &mut Vec<(usize, C64)>) {
    col.sort_unstable_by_key(|e| e.0);
    col.dedup_by(|next, kept| {
        if next.0 == kept.0 {
            kept.1 += next.1;
            true
        } else {
            false
        }
    });
}

fn check_l(y: &Section, grid: &GridSpec) -> Result<()> {
    if y.grid() != grid || y.left_dim() != 1 || y.right_dim() != 1 {
        return Err(Error::ShapeMismatch("not a section of L".into()));
    }
    Ok(())
}

/// `V = (id_n (x) X^*) G_n` built column by column without forming `G_n`.
pub fn dagger_operator(n: usize, unit: &Unit, x: &Section) -> Result<SparseMatrix> {
    let grid = *unit.grid();
    check_l(x, &grid)?;
    let layout = l_layout(&grid);
    let shift = grid.cells(n);
    let cutoff = grid.cutoff();
    let w = grid.h().sqrt();
    let omega = unit.vector(shift);
    let ob = omega.basis().clone();
    let mut v = SparseMatrix::new(ob.dim());
    for j in 0..layout.slices() {
        let ac = grid.alpha_cells(j);
        let eb = OccupationBasis::shared(ac, cutoff);
        let xj = x.component(j);
        for l in 0..eb.dim() {
            let sl = eb.state(l);
            let mut col = Vec::new();
            for q in ob.up_to(cutoff - sl.len()) {
                let wq = omega.coefficients()[q];
                if wq == ZERO {
                    continue;
                }
                let joined = concat_positions(sl, ob.state(q), ac);
                let (s, a) = split_positions(&joined, shift);
                let xa = xj[state_index(ac, &a)];
                if xa != ZERO {
                    col.push((state_index(shift, s), xa.conj() * wq * w));
                }
            }
            merge_entries(&mut col);
            v.push_column(col);
        }
    }
    Ok(v)
}

/// A dense operator on `L` in orthonormal coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct CompressedOperator {
    pub matrix: DMatrix<C64>,
    pub hermitian: bool,
}

impl CompressedOperator {
    pub fn new(matrix: DMatrix<C64>) -> Self {
        let scale = matrix.norm().max(1.0);
        let hermitian = (&matrix - matrix.adjoint()).norm() <= 1e-12 * scale;
        Self { matrix, hermitian }
    }

    pub fn norm(&self) -> f64 {
        if self.hermitian {
            hermitian_norm(&self.matrix)
        } else {
            crate::linalg::operator_norm(&self.matrix)
        }
    }
}

/// How the largest singular value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormMethod {
    DenseSvd,
    Lanczos,
}

/// `sigma_max(V)^2` and the maximizing left singular vector `z_1`.
#[derive(Clone, Debug)]
pub struct TopSingular {
    pub sigma_sqr: f64,
    pub z1: DVector<C64>,
    pub method: NormMethod,
    pub residual: f64,
    /// All squared singular values, ascending, when computed densely.
    pub spectrum: Option<Vec<f64>>,
}

pub fn top_singular<R: Rng>(v: &SparseMatrix, rng: &mut R) -> TopSingular {
    if v.rows() <= DENSE_L_LIMIT && v.cols() <= DENSE_L_LIMIT {
        let d = v.to_dense();
        let svd = d.svd(true, false);
        let u = svd.u.expect("left singular vectors requested");
        let (imax, smax) = svd
            .singular_values
            .iter()
            .copied()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or((0, 0.0));
        let mut spectrum: Vec<f64> = svd.singular_values.iter().map(|s| s * s).collect();
        spectrum.sort_by(f64::total_cmp);
        let z1 = if u.ncols() > 0 { u.column(imax).into_owned() } else { DVector::zeros(v.rows()) };
        return TopSingular { sigma_sqr: smax * smax, z1, method: NormMethod::DenseSvd, residual: 0.0, spectrum: Some(spectrum) };
    }
    let top = lanczos_top(
        v.rows(),
        |z| v.mul_vec(v.adjoint_mul_vec(z.as_slice()).as_slice()),
        300,
        1e-13,
        rng,
    );
    TopSingular { sigma_sqr: top.value, z1: top.vector, method: NormMethod::Lanczos, residual: top.residual, spectrum: None }
}

/// `(id_1 (x) X^*) G_1(Y)` through the expansion `omega_1 = sum_m f^m e^m`:
/// `sum_j h sum_m <x_j, e^m> (y_j f^m_{1-alpha_j})`, each product cut to the
/// occupation left over by `e^m`.
#[derive(Clone, Debug)]
pub struct DaggerExpansion {
    grid: GridSpec,
    /// Per slice: `(conj(x_j[m]) h, f^m_{1-alpha_j} moved to [alpha_j, 1), room)`.
    terms: Vec<Vec<(C64, FockVector, usize)>>,
}

impl DaggerExpansion {
    pub fn new(unit: &Unit, x: &Section) -> Result<Self> {
        let grid = *unit.grid();
        check_l(x, &grid)?;
        let m = grid.cells_per_unit();
        let cutoff = grid.cutoff();
        let omega1 = unit.vector(m);
        let mut terms = Vec::with_capacity(grid.slices());
        for j in 0..grid.slices() {
            let ac = grid.alpha_cells(j);
            let eb = OccupationBasis::shared(ac, cutoff);
            let mut slice = Vec::new();
            for (mi, xm) in x.component(j).iter().enumerate() {
                if *xm == ZERO {
                    continue;
                }
                let em = FockVector::basis_vector(Interval::from_origin(ac), cutoff, mi)?.translate((m - ac) as isize)?;
                let f = omega1.partial_inner_right(&em)?.translate(ac as isize)?;
                slice.push((xm.conj() * grid.h(), f, cutoff - eb.occupation(mi)));
            }
            terms.push(slice);
        }
        Ok(Self { grid, terms })
    }

    pub fn apply(&self, y: &Section) -> Result<FockVector> {
        check_l(y, &self.grid)?;
        let mut out = FockVector::zeros(Interval::from_origin(self.grid.cells_per_unit()), self.grid.cutoff());
        for (j, slice) in self.terms.iter().enumerate() {
            if slice.is_empty() {
                continue;
            }
            let yj = y.fock_component(j)?;
            for (weight, f, room) in slice {
                let mut p = yj.multiply(f)?;
                let keep = p.basis().up_to(*room).end;
                p.coefficients_mut()[keep..].iter_mut().for_each(|c| *c = ZERO);
                out = out.add_scaled(*weight, &p)?;
            }
        }
        Ok(out)
    }
}

/// Result of [`verify_theorem`].
#[derive(Clone, Debug)]
pub struct TheoremReport {
    pub k: usize,
    pub unit: C64,
    pub cells_per_unit: usize,
    pub cutoff: usize,
    /// `||a|| = ||X||^2` for the rank-one projection `a = X X^* (x) omegă omegă^*`.
    pub a_norm: f64,
    pub m2_grid: f64,
    pub m2_closed_form: Option<f64>,
    pub t1a_norm: f64,
    pub norm: TopSingular,
    pub dagger_route: DaggerRoute,
    pub dagger_samples: usize,
    pub dagger_max_deviation: f64,
    /// `max |<z_1, V Y>|` over the sampled unit `Y`.
    pub z1_max_overlap: f64,
    /// An eigenvalue of `T_1(a)` strictly between 0 and 1, if one was found.
    pub interior_eigenvalue: Option<f64>,
    pub checks: Vec<Check>,
}

impl TheoremReport {
    pub fn pass(&self) -> bool {
        all_pass(&self.checks)
    }
}

/// Where the left side of the dagger identity comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DaggerRoute {
    /// `<Y (x) omegă, Q θ_1(a) Q (Y (x) omegă)>` through `w_1`.
    Dilation,
    /// The `f`-section expansion of `omega_1`.
    Expansion,
}

/// Margin below 1 that certifies `T_1(a)` is not a projection.
pub const PROJECTION_MARGIN: f64 = 1e-6;

/// Checks the bound `||T_1(a)|| <= M^2` for `a = X X^* (x) omegă omegă^*`,
/// `X` the `k`-th ONB section, together with the dagger identity
/// `<Y, T_1(a) Y> = ||V Y||^2` on `samples` random unit sections.
pub fn verify_theorem<R: Rng>(
    k: usize,
    unit: &Unit,
    space: Option<&BigSpace>,
    samples: usize,
    rng: &mut R,
) -> Result<TheoremReport> {
    let grid = *unit.grid();
    let x = OnbSection::new(k, grid)?.section();
    let a_norm = x.norm_sqr();
    let m2_grid = f_section(k, &unit.vector(grid.cells_per_unit()), &grid)?.m_integral();
    let m2_closed_form = if k == 1 {
        Some(closed_form_m2(unit.parameter(), grid.cells_per_unit(), grid.cutoff()))
    } else if unit.is_vacuum() {
        Some(0.0)
    } else {
        None
    };
    let v = dagger_operator(1, unit, &x)?;
    let norm = top_singular(&v, rng);
    let t1a_norm = norm.sigma_sqr;

    let route = match space {
        Some(s) if unit.is_vacuum() => {
            if s.grid() != &grid {
                return Err(Error::ShapeMismatch("dilation space on a different grid".into()));
            }
            DaggerRoute::Dilation
        }
        _ => DaggerRoute::Expansion,
    };
    let expansion = match route {
        DaggerRoute::Expansion => Some(DaggerExpansion::new(unit, &x)?),
        DaggerRoute::Dilation => None,
    };
    let dilated: Vec<KVector> = match (route, space) {
        (DaggerRoute::Dilation, Some(s)) => s.dilate_basis(1, &s.tensor_vacuum(&x)?)?,
        _ => Vec::new(),
    };
    let mut dagger_max_deviation: f64 = 0.0;
    let mut z1_max_overlap: f64 = 0.0;
    for _ in 0..samples {
        let y = Section::random_unit(&grid, 1, 1, rng);
        let vy = v.mul_vec(y.to_coords().as_slice());
        let rhs = vy.norm_squared();
        let lhs = match (route, space) {
            (DaggerRoute::Dilation, Some(s)) => {
                let yk = s.tensor_vacuum(&y)?;
                dilated.iter().map(|w| section_inner(w, &yk).map(|c| c.norm_sqr())).sum::<Result<f64>>()?
            }
            _ => expansion.as_ref().expect("built for this route").apply(&y)?.norm_sqr(),
        };
        dagger_max_deviation = dagger_max_deviation.max((lhs - rhs).abs());
        z1_max_overlap = z1_max_overlap.max(norm.z1.dotc(&vy).norm());
    }

    let interior_eigenvalue = norm.spectrum.as_ref().and_then(|s| {
        s.iter().copied().find(|&e| e > PROJECTION_MARGIN && e < 1.0 - PROJECTION_MARGIN)
    });

    let mut checks = vec![Check::close("theorem bound: ||a|| = ||X||^2", a_norm, 1.0, 1e-12)];
    if let Some(cf) = m2_closed_form {
        checks.push(Check::close("theorem bound: M^2 grid vs closed form", m2_grid, cf, 1e-10));
    }
    checks.push(Check::at_most("dagger identity: max deviation", dagger_max_deviation, 0.0, 1e-9));
    checks.push(Check::at_most("theorem bound: ||T_1(a)|| <= M^2", t1a_norm, m2_grid, 1e-8));
    checks.push(Check::at_most("theorem bound: max |<z_1, V Y>| <= M", z1_max_overlap, m2_grid.sqrt(), 1e-8));
    if t1a_norm < 1.0 - PROJECTION_MARGIN {
        checks.push(Check::at_most("endomorphism failure: T_1(a) not a projection, ||T_1(a)||", t1a_norm, 1.0 - PROJECTION_MARGIN, 0.0));
    } else {
        let dist = interior_eigenvalue.map_or(0.0, |e| e.min(1.0 - e));
        checks.push(Check::at_least("endomorphism failure: T_1(a) not a projection, eigenvalue gap", dist, PROJECTION_MARGIN, 0.0));
    }

    Ok(TheoremReport {
        k,
        unit: unit.parameter(),
        cells_per_unit: grid.cells_per_unit(),
        cutoff: grid.cutoff(),
        a_norm,
        m2_grid,
        m2_closed_form,
        t1a_norm,
        norm,
        dagger_route: route,
        dagger_samples: samples,
        dagger_max_deviation,
        z1_max_overlap,
        interior_eigenvalue,
        checks,
    })
}

/// `||T_n(id) - id||`.
pub fn markov_defect(g: &StinespringMap) -> Result<f64> {
    let l = g.l_dim();
    let t = g.t_apply(&DMatrix::identity(l, l))?;
    Ok(hermitian_norm(&(t.matrix - DMatrix::identity(l, l))))
}

/// Smallest eigenvalue of the Choi matrix of `c -> P^* T_n(P c P^*) P` for an
/// isometry `P` onto a subspace of `L`.
pub fn choi_min_eigenvalue(g: &StinespringMap, p: &DMatrix<C64>) -> Result<f64> {
    let d = p.ncols();
    if p.nrows() != g.l_dim() {
        return Err(Error::ShapeMismatch("subspace basis has the wrong length".into()));
    }
    let mut choi = DMatrix::from_element(d * d, d * d, ZERO);
    for i in 0..d {
        for j in 0..d {
            let eij = p.column(i) * p.column(j).adjoint();
            let t = p.adjoint() * g.t_apply(&eij)?.matrix * p;
            for k in 0..d {
                for l in 0..d {
                    choi[(i * d + k, j * d + l)] = t[(k, l)];
                }
            }
        }
    }
    Ok(hermitian_eigenvalues(&choi)[0])
}

/// `max ||T_2(b) - T_1(T_1(b))||` over random Hermitian `b`.
pub fn semigroup_defect<R: Rng>(g1: &StinespringMap, g2: &StinespringMap, samples: usize, rng: &mut R) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let b = random_hermitian(g1.l_dim(), rng);
        let two = g2.t_apply(&b)?;
        let once = g1.t_apply(&b)?;
        let twice = g1.t_apply(&once.matrix)?;
        worst = worst.max(hermitian_norm(&(two.matrix - twice.matrix)));
    }
    Ok(worst)
}

/// Result of [`shifted_compression_check`].
#[derive(Clone, Debug)]
pub struct IntertwiningReport {
    pub alpha: usize,
    pub t: usize,
    pub samples: usize,
    pub max_deviation: f64,
    /// Largest matrix element seen, to show the comparison is not between zeros.
    pub max_magnitude: f64,
    pub checks: Vec<Check>,
}

impl IntertwiningReport {
    pub fn pass(&self) -> bool {
        all_pass(&self.checks)
    }
}

fn slots(space: &BigSpace, pulled: &Section) -> Result<Vec<KVector>> {
    let kd = space.window().dim();
    (0..pulled.left_dim())
        .map(|p| {
            let components = (0..pulled.slices())
                .map(|j| {
                    let block = pulled.slice_dim(j) * kd;
                    pulled.component(j)[p * block..(p + 1) * block].to_vec()
                })
                .collect();
            Section::from_components(space.grid(), 1, kd, components)
        })
        .collect()
}

/// `sum_{i,p} <u_i, xi_p> <eta_p, v_i>`.
fn paired_form(us: &[KVector], vs: &[KVector], xis: &[KVector], etas: &[KVector]) -> Result<C64> {
    let mut acc = ZERO;
    for (u, v) in us.iter().zip(vs) {
        for (xi, eta) in xis.iter().zip(etas) {
            acc += section_inner(u, xi)? * section_inner(eta, v)?;
        }
    }
    Ok(acc)
}

/// Compares `θ_alpha(Q θ_t(b) Q)` with `Q_alpha θ_t(θ_alpha(b)) Q_alpha` for
/// `b = (Y (x) omegă)(Y' (x) omegă)^*`, through matrix elements between random
/// vectors of `K`.
pub fn shifted_compression_check<R: Rng>(
    space: &BigSpace,
    alpha: usize,
    t: usize,
    samples: usize,
    rng: &mut R,
) -> Result<IntertwiningReport> {
    let window = space.window();
    if alpha + t > window.window_units() {
        return Err(Error::TruncationOverflow {
            shift_cells: space.grid().cells(alpha + t),
            window_cells: window.window_cells(),
        });
    }
    let grid = *space.grid();
    let mut max_deviation: f64 = 0.0;
    let mut max_magnitude: f64 = 0.0;
    for _ in 0..samples {
        let xi = space.tensor_vacuum(&Section::random_unit(&grid, 1, 1, rng))?;
        let eta = space.tensor_vacuum(&Section::random_unit(&grid, 1, 1, rng))?;
        let u = space.random_unit(rng)?;
        let v = space.random_unit(rng)?;

        // θ_alpha(Q θ_t(b) Q)
        let q = |z: KVector| space.q_project(&z);
        let xis = space.dilate_basis(t, &xi)?.into_iter().map(q).collect::<Result<Vec<_>>>()?;
        let etas = space.dilate_basis(t, &eta)?.into_iter().map(q).collect::<Result<Vec<_>>>()?;
        let us = slots(space, &space.w_n_adjoint(alpha, &u)?)?;
        let vs = slots(space, &space.w_n_adjoint(alpha, &v)?)?;
        let lhs = paired_form(&us, &vs, &xis, &etas)?;

        // Q_alpha θ_t(θ_alpha(b)) Q_alpha
        let xis = space.dilate_basis(alpha, &xi)?;
        let etas = space.dilate_basis(alpha, &eta)?;
        let us = slots(space, &space.w_n_adjoint(t, &space.q_n_project(alpha, &u)?)?)?;
        let vs = slots(space, &space.w_n_adjoint(t, &space.q_n_project(alpha, &v)?)?)?;
        let rhs = paired_form(&us, &vs, &xis, &etas)?;

        max_deviation = max_deviation.max((lhs - rhs).norm());
        max_magnitude = max_magnitude.max(lhs.norm());
    }
    let checks = vec![Check::at_most(
        format!("intertwining: θ_{alpha} T_{t} = T^{alpha}_{t} θ_{alpha} max deviation"),
        max_deviation,
        0.0,
        1e-8,
    )];
    Ok(IntertwiningReport { alpha, t, samples, max_deviation, max_magnitude, checks })
}

/// One pair of units in [`observation_crosscheck`].
#[derive(Clone, Debug)]
pub struct ObservationCase {
    pub dilation_unit: C64,
    pub section_unit: C64,
    pub n: usize,
    /// Largest coefficient gap between `G_n(Y)` and `(y_alpha omega_{n-alpha}) (x) omega_alpha`.
    pub u_star_deviation: f64,
    /// Gap between `V(Y)` and `∫ y_alpha omega_{n-alpha} <x_alpha, omega_alpha>`.
    pub contraction_deviation: f64,
    pub inner_pipeline: C64,
    pub inner_closed_form: C64,
    pub dagger_pipeline: f64,
    pub dagger_closed_form: f64,
}

/// Result of [`observation_crosscheck`].
#[derive(Clone, Debug)]
pub struct ObservationReport {
    pub cases: Vec<ObservationCase>,
    pub checks: Vec<Check>,
}

impl ObservationReport {
    pub fn pass(&self) -> bool {
        all_pass(&self.checks)
    }
}

/// Runs the spatial cross-check for `X = (omega_alpha(c1))` and
/// `Y = (omega_alpha(c2))`, with `G_n` built from the unit `c1`.
pub fn observation_case(c1: C64, c2: C64, n: usize, space: &BigSpace) -> Result<ObservationCase> {
    let grid = *space.grid();
    let u1 = Unit::new(c1, grid);
    let u2 = Unit::new(c2, grid);
    let x = u1.section();
    let y = u2.section();
    let g = stinespring(n, &u1, space)?;
    let gy = g.apply(&y)?;

    let shift = grid.cells(n);
    let h = grid.h();
    let mut u_star_deviation: f64 = 0.0;
    let mut family = FockVector::zeros(Interval::from_origin(shift), grid.cutoff());
    for j in 0..grid.slices() {
        let ac = grid.alpha_cells(j);
        if ac > shift {
            return Err(Error::Config(format!("the closed form needs alpha <= n, got {ac} cells > {shift}")));
        }
        let head = u2.vector(ac).multiply(&u1.vector(shift - ac).translate(ac as isize)?)?;
        let tail = u1.vector(ac);
        let d = tail.dim();
        for (s, hs) in head.coefficients().iter().enumerate() {
            for (a, ta) in tail.coefficients().iter().enumerate() {
                u_star_deviation = u_star_deviation.max((gy.component(j)[s * d + a] - hs * ta).norm());
            }
        }
        let weight = x.fock_component(j)?.inner(&tail)? * h;
        family = family.add_scaled(weight, &head)?;
    }
    let v = crate::direct_integral::apply_id_tensor_adjoint(&x, &gy)?;
    let contraction_deviation = v
        .iter()
        .zip(family.coefficients())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);

    Ok(ObservationCase {
        dilation_unit: c1,
        section_unit: c2,
        n,
        u_star_deviation,
        contraction_deviation,
        inner_pipeline: section_inner(&x, &y)?,
        inner_closed_form: spatial_inner(c1, c2, &grid),
        dagger_pipeline: v.norm_squared(),
        dagger_closed_form: spatial_dagger_value(c1, c2, n, &grid),
    })
}

/// The spatial cross-check: the vacuum against the coherent unit `c` in both
/// roles, the vacuum against itself, and `c` against itself.
pub fn observation_crosscheck(c: C64, n: usize, space: &BigSpace) -> Result<ObservationReport> {
    let zero = ZERO;
    let pairs = [(zero, zero), (c, zero), (zero, c), (c, c)];
    let mut cases = Vec::new();
    let mut checks = Vec::new();
    for (c1, c2) in pairs {
        let case = observation_case(c1, c2, n, space)?;
        let label = format!("c1={c1}, c2={c2}");
        let exact = c1 == zero;
        let tol = if exact { 1e-10 } else { 1e-8 };
        checks.push(Check::close(
            format!("observation: dagger closed form vs pipeline ({label})"),
            case.dagger_pipeline,
            case.dagger_closed_form,
            tol,
        ));
        checks.push(Check::close(
            format!("observation: <X,Y> closed form vs pipeline ({label})"),
            (case.inner_pipeline - case.inner_closed_form).norm(),
            0.0,
            tol,
        ));
        if exact {
            checks.push(Check::at_most(format!("observation: u* closed form, vacuum dilation ({label})"), case.u_star_deviation, 0.0, 1e-10));
            checks.push(Check::at_most(format!("observation: contraction closed form ({label})"), case.contraction_deviation, 0.0, 1e-10));
        }
        if c1 == c2 {
            let bound = same_unit_dagger_deficit_bound(c1, n, space.grid().cutoff());
            checks.push(Check::at_most(format!("observation: same unit, 1 - dagger ({label})"), 1.0 - case.dagger_pipeline, bound, 1e-12));
        }
        cases.push(case);
    }
    Ok(ObservationReport { cases, checks })
}

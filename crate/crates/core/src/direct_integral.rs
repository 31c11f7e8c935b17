//! Sections of direct integrals `∫ (H1 (x) E_alpha (x) H2) d alpha` over `[0, 1)`.
//!
//! A section stores one component per grid representative `alpha_j = (j+1) h`,
//! each weighted by `h`. Components live on their own `E_alpha` bases, so the
//! storage is ragged rather than padded to a common dimension.

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::grid_fock::{fock_dimension, FockVector, GridSpec, Interval};

/// Flattened offsets of the slices of a section shape.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SectionLayout {
    left_dim: usize,
    right_dim: usize,
    slice_dims: Vec<usize>,
    offsets: Vec<usize>,
}

impl SectionLayout {
    pub fn new(grid: &GridSpec, left_dim: usize, right_dim: usize) -> Self {
        let slice_dims: Vec<usize> = (0..grid.slices())
            .map(|j| fock_dimension(grid.alpha_cells(j), grid.cutoff()))
            .collect();
        let mut offsets = Vec::with_capacity(slice_dims.len() + 1);
        let mut acc = 0;
        for d in &slice_dims {
            offsets.push(acc);
            acc += left_dim * d * right_dim;
        }
        offsets.push(acc);
        Self { left_dim, right_dim, slice_dims, offsets }
    }

    /// `dim E_{alpha_j}`.
    pub fn slice_dim(&self, j: usize) -> usize {
        self.slice_dims[j]
    }

    pub fn slices(&self) -> usize {
        self.slice_dims.len()
    }

    /// Offset of component `j` in the flattened coordinates.
    pub fn offset(&self, j: usize) -> usize {
        self.offsets[j]
    }

    pub fn total(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Slice holding flattened coordinate `idx`.
    pub fn slice_of(&self, idx: usize) -> usize {
        self.offsets.partition_point(|&o| o <= idx) - 1
    }
}

/// A square-integrable section, stored with raw components `x_j` and the
/// quadrature weight `h`, so `||X||^2 = sum_j h ||x_j||^2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Section {
    grid: GridSpec,
    left_dim: usize,
    right_dim: usize,
    components: Vec<Vec<C64>>,
}

impl Section {
    pub fn zeros(grid: &GridSpec, left_dim: usize, right_dim: usize) -> Self {
        let layout = SectionLayout::new(grid, left_dim, right_dim);
        let components = (0..layout.slices())
            .map(|j| vec![C64::new(0.0, 0.0); left_dim * layout.slice_dim(j) * right_dim])
            .collect();
        Self { grid: *grid, left_dim, right_dim, components }
    }

    pub fn from_components(
        grid: &GridSpec,
        left_dim: usize,
        right_dim: usize,
        components: Vec<Vec<C64>>,
    ) -> Result<Self> {
        let layout = SectionLayout::new(grid, left_dim, right_dim);
        if components.len() != layout.slices() {
            return Err(Error::ShapeMismatch(format!(
                "{} components for {} grid slices",
                components.len(),
                layout.slices()
            )));
        }
        for (j, c) in components.iter().enumerate() {
            let want = left_dim * layout.slice_dim(j) * right_dim;
            if c.len() != want {
                return Err(Error::ShapeMismatch(format!(
                    "component {j} has length {}, expected {want}",
                    c.len()
                )));
            }
        }
        Ok(Self { grid: *grid, left_dim, right_dim, components })
    }

    /// Section of `L = ∫ E_alpha` from one Fock vector per slice; vector `j`
    /// must live on `[0, alpha_j)`.
    pub fn from_fock(grid: &GridSpec, vectors: Vec<FockVector>) -> Result<Self> {
        let mut components = Vec::with_capacity(vectors.len());
        for (j, v) in vectors.into_iter().enumerate() {
            let want = Interval::from_origin(grid.alpha_cells(j));
            if v.interval() != want || v.cutoff() != grid.cutoff() {
                return Err(Error::IntervalMismatch(format!(
                    "slice {j} expects {want:?} at cutoff {}, got {:?} at cutoff {}",
                    grid.cutoff(),
                    v.interval(),
                    v.cutoff()
                )));
            }
            components.push(v.into_coefficients());
        }
        Self::from_components(grid, 1, 1, components)
    }

    /// Random section with uniform complex entries in the unit square.
    pub fn random<R: Rng>(grid: &GridSpec, left_dim: usize, right_dim: usize, rng: &mut R) -> Self {
        let mut s = Self::zeros(grid, left_dim, right_dim);
        for c in s.components.iter_mut().flatten() {
            *c = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        s
    }

    pub fn random_unit<R: Rng>(grid: &GridSpec, left_dim: usize, right_dim: usize, rng: &mut R) -> Self {
        let s = Self::random(grid, left_dim, right_dim, rng);
        let n = s.norm();
        s.scaled(C64::new(1.0 / n, 0.0))
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn left_dim(&self) -> usize {
        self.left_dim
    }

    pub fn right_dim(&self) -> usize {
        self.right_dim
    }

    pub fn layout(&self) -> SectionLayout {
        SectionLayout::new(&self.grid, self.left_dim, self.right_dim)
    }

    pub fn slices(&self) -> usize {
        self.components.len()
    }

    pub fn slice_dim(&self, j: usize) -> usize {
        self.components[j].len() / (self.left_dim * self.right_dim)
    }

    pub fn component(&self, j: usize) -> &[C64] {
        &self.components[j]
    }

    pub fn component_mut(&mut self, j: usize) -> &mut [C64] {
        &mut self.components[j]
    }

    /// Component `j` as a Fock vector on `[0, alpha_j)`; only for sections of `L`.
    pub fn fock_component(&self, j: usize) -> Result<FockVector> {
        if self.left_dim != 1 || self.right_dim != 1 {
            return Err(Error::ShapeMismatch("fock_component needs H1 = H2 = C".into()));
        }
        FockVector::from_coefficients(
            Interval::from_origin(self.grid.alpha_cells(j)),
            self.grid.cutoff(),
            self.components[j].clone(),
        )
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid || self.left_dim != other.left_dim || self.right_dim != other.right_dim {
            return Err(Error::ShapeMismatch(format!(
                "sections ({:?}, {}, {}) and ({:?}, {}, {})",
                self.grid, self.left_dim, self.right_dim, other.grid, other.left_dim, other.right_dim
            )));
        }
        Ok(())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.grid.h() * self.components.iter().flatten().map(|c| c.norm_sqr()).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scaled(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.components.iter_mut().flatten().for_each(|c| *c *= s);
        out
    }

    pub fn add_scaled(&self, s: C64, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.components.iter_mut().flatten().zip(other.components.iter().flatten()) {
            *a += s * b;
        }
        Ok(out)
    }

    /// Orthonormal coordinates `sqrt(h) x_j`, flattened slice by slice.
    pub fn to_coords(&self) -> DVector<C64> {
        let w = self.grid.h().sqrt();
        DVector::from_iterator(
            self.components.iter().map(Vec::len).sum(),
            self.components.iter().flatten().map(|c| c * w),
        )
    }

    pub fn from_coords(grid: &GridSpec, left_dim: usize, right_dim: usize, coords: &DVector<C64>) -> Result<Self> {
        let layout = SectionLayout::new(grid, left_dim, right_dim);
        if coords.len() != layout.total() {
            return Err(Error::ShapeMismatch(format!(
                "{} coordinates for a section space of dimension {}",
                coords.len(),
                layout.total()
            )));
        }
        let w = 1.0 / grid.h().sqrt();
        let components = (0..layout.slices())
            .map(|j| {
                coords.as_slice()[layout.offset(j)..layout.offset(j + 1)].iter().map(|c| c * w).collect()
            })
            .collect();
        Ok(Self { grid: *grid, left_dim, right_dim, components })
    }
}

/// `<X, Y> = sum_j h <x_j, y_j>`.
pub fn section_inner(x: &Section, y: &Section) -> Result<C64> {
    x.check_shape(y)?;
    let s: C64 = x
        .components
        .iter()
        .flatten()
        .zip(y.components.iter().flatten())
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok(s * x.grid.h())
}

/// `(id_1 (x) X*) Y` for `X` in `∫ E_alpha` and `Y` in `∫ (H1 (x) E_alpha)`,
/// evaluated as the weighted sum `sum_j h (id_1 (x) x_j*) y_j`.
pub fn apply_id_tensor_adjoint(x: &Section, y: &Section) -> Result<DVector<C64>> {
    if x.left_dim != 1 || x.right_dim != 1 {
        return Err(Error::ShapeMismatch("X must be a section of ∫ E_alpha".into()));
    }
    if y.right_dim != 1 || y.grid != x.grid {
        return Err(Error::ShapeMismatch("Y must be a section of ∫ (H1 (x) E_alpha) on the same grid".into()));
    }
    let h = x.grid.h();
    let mut out = DVector::from_element(y.left_dim, C64::new(0.0, 0.0));
    for (xj, yj) in x.components.iter().zip(&y.components) {
        let d = xj.len();
        for (i, o) in out.iter_mut().enumerate() {
            let row = &yj[i * d..(i + 1) * d];
            *o += row.iter().zip(xj).map(|(yv, xv)| xv.conj() * yv).sum::<C64>() * h;
        }
    }
    Ok(out)
}

/// `(id_1 (x) X' X*) Y`: the vector `(id_1 (x) X*) Y` tensored with each `x'_alpha`.
pub fn corollary_composite(x: &Section, x_prime: &Section, y: &Section) -> Result<Section> {
    x.check_shape(x_prime)?;
    let v = apply_id_tensor_adjoint(x, y)?;
    let components = x_prime
        .components
        .iter()
        .map(|xp| v.iter().flat_map(|vi| xp.iter().map(move |e| vi * e)).collect())
        .collect();
    Section::from_components(&x.grid, y.left_dim, 1, components)
}

/// `z (x) X` as a section of `∫ (H1 (x) E_alpha)`.
pub fn tensor_left(z: &DVector<C64>, x: &Section) -> Result<Section> {
    if x.left_dim != 1 || x.right_dim != 1 {
        return Err(Error::ShapeMismatch("X must be a section of ∫ E_alpha".into()));
    }
    let components = x
        .components
        .iter()
        .map(|xj| z.iter().flat_map(|zi| xj.iter().map(move |e| zi * e)).collect())
        .collect();
    Section::from_components(&x.grid, z.len(), 1, components)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> GridSpec {
        GridSpec::new(4, 2).unwrap()
    }

    fn onb_section(grid: &GridSpec, k: usize) -> Section {
        let v = (0..grid.slices())
            .map(|j| FockVector::basis_vector(Interval::from_origin(grid.alpha_cells(j)), grid.cutoff(), k).unwrap())
            .collect();
        Section::from_fock(grid, v).unwrap()
    }

    #[test]
    fn single_component_inner_is_h() {
        let g = grid();
        let mut x = Section::zeros(&g, 1, 1);
        x.component_mut(2)[3] = C64::new(1.0, 0.0);
        assert!((section_inner(&x, &x).unwrap() - C64::new(g.h(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn onb_sections_have_unit_norm() {
        let g = grid();
        for k in 0..=g.cutoff() {
            assert!((onb_section(&g, k).norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn cauchy_schwarz_and_shape_errors() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let x = Section::random(&g, 2, 1, &mut rng);
            let y = Section::random(&g, 2, 1, &mut rng);
            assert!(section_inner(&x, &y).unwrap().norm() <= x.norm() * y.norm() + 1e-12);
        }
        let a = Section::zeros(&g, 1, 1);
        let b = Section::zeros(&g, 2, 1);
        assert!(section_inner(&a, &b).is_err());
    }

    #[test]
    fn coords_roundtrip() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = Section::random(&g, 2, 3, &mut rng);
        let c = x.to_coords();
        assert!((c.norm_squared() - x.norm_sqr()).abs() < 1e-12);
        let back = Section::from_coords(&g, 2, 3, &c).unwrap();
        assert!(back.add_scaled(C64::new(-1.0, 0.0), &x).unwrap().norm() < 1e-14);
    }

    #[test]
    fn adjoint_on_single_cell_support() {
        let g = grid();
        let k = 1;
        let mut x = Section::zeros(&g, 1, 1);
        x.component_mut(1)[k] = C64::new(1.0, 0.0);
        let z = DVector::from_vec(vec![C64::new(0.5, -1.0), C64::new(2.0, 0.25)]);
        let y = tensor_left(&z, &x).unwrap();
        let got = apply_id_tensor_adjoint(&x, &y).unwrap();
        assert!((got - z * C64::new(g.h(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn adjoint_relation_and_isometry() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let x = Section::random_unit(&g, 1, 1, &mut rng);
            let y = Section::random(&g, 3, 1, &mut rng);
            let z = DVector::from_fn(3, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let lhs = apply_id_tensor_adjoint(&x, &y).unwrap().dotc(&z);
            let rhs = section_inner(&y, &tensor_left(&z, &x).unwrap()).unwrap();
            assert!((lhs - rhs).norm() < 1e-12);
            // Y = z (x) X with |X| = 1 gives back z
            let back = apply_id_tensor_adjoint(&x, &tensor_left(&z, &x).unwrap()).unwrap();
            assert!((back - &z).norm() < 1e-12);
        }
    }

    #[test]
    fn linear_in_y_conjugate_linear_in_x() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x1 = Section::random(&g, 1, 1, &mut rng);
        let x2 = Section::random(&g, 1, 1, &mut rng);
        let y1 = Section::random(&g, 2, 1, &mut rng);
        let y2 = Section::random(&g, 2, 1, &mut rng);
        let s = C64::new(0.3, -1.7);
        let ys = y1.add_scaled(s, &y2).unwrap();
        let lin = apply_id_tensor_adjoint(&x1, &ys).unwrap()
            - apply_id_tensor_adjoint(&x1, &y1).unwrap()
            - apply_id_tensor_adjoint(&x1, &y2).unwrap() * s;
        assert!(lin.norm() < 1e-12);
        let xs = x1.add_scaled(s, &x2).unwrap();
        let anti = apply_id_tensor_adjoint(&xs, &y1).unwrap()
            - apply_id_tensor_adjoint(&x1, &y1).unwrap()
            - apply_id_tensor_adjoint(&x2, &y1).unwrap() * s.conj();
        assert!(anti.norm() < 1e-12);
    }

    #[test]
    fn composite_projection_and_orthogonality() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = Section::random_unit(&g, 1, 1, &mut rng);
        let z = DVector::from_vec(vec![C64::new(1.0, 2.0), C64::new(-0.5, 0.0)]);
        let y = tensor_left(&z, &x).unwrap();
        let out = corollary_composite(&x, &x, &y).unwrap();
        assert!(out.add_scaled(C64::new(-1.0, 0.0), &y).unwrap().norm() < 1e-12);

        // X = e^1 section, Y built from e^2 components: orthogonal slice by slice
        let e1 = onb_section(&g, 1);
        let e2 = onb_section(&g, 2);
        let y = tensor_left(&z, &e2).unwrap();
        assert!(corollary_composite(&e1, &x, &y).unwrap().norm() < 1e-15);
    }
}

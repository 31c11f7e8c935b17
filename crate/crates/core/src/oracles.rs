//! Closed-form and brute-force reference values.
//!
//! Nothing in here calls the Fock-space, dilation or compression code it is
//! used to check: the coherent quantities are written out as truncated
//! exponential series, and the adjoint oracle is assembled entry by entry.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::direct_integral::Section;
use crate::error::{Error, Result};
use crate::grid_fock::GridSpec;

/// Largest product basis the dense adjoint oracle will assemble.
pub const DENSE_ORACLE_LIMIT: usize = 5000;

/// `S_N(z) = sum_{k <= N} z^k / k!`.
pub fn truncated_exp(z: C64, cutoff: usize) -> C64 {
    let mut term = C64::new(1.0, 0.0);
    let mut sum = term;
    for k in 1..=cutoff {
        term *= z / k as f64;
        sum += term;
    }
    sum
}

pub fn truncated_exp_real(x: f64, cutoff: usize) -> f64 {
    truncated_exp(C64::new(x, 0.0), cutoff).re
}

/// `e^x - S_N(x)`, summed from the tail so it stays accurate when small.
pub fn exp_tail(x: f64, cutoff: usize) -> f64 {
    let mut term = 1.0_f64;
    for k in 1..=cutoff + 1 {
        term *= x / k as f64;
    }
    let mut sum = 0.0_f64;
    let mut k = cutoff + 1;
    while term.abs() > f64::EPSILON * sum.abs().max(f64::MIN_POSITIVE) {
        sum += term;
        k += 1;
        term *= x / k as f64;
        if k > cutoff + 10_000 {
            break;
        }
    }
    sum
}

/// Truncated coherent-state quantities for a constant unit parameter `c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoherentOracle {
    pub c: C64,
    pub cutoff: usize,
}

impl CoherentOracle {
    pub fn new(c: C64, cutoff: usize) -> Self {
        Self { c, cutoff }
    }

    /// `||e(c 1_[0,t))||^2` truncated, i.e. `S_N(|c|^2 t)`.
    pub fn norm_sqr(&self, t: f64) -> f64 {
        truncated_exp_real(self.c.norm_sqr() * t, self.cutoff)
    }

    /// Vacuum coefficient of the normalized unit vector at time `t`.
    pub fn vacuum_amplitude(&self, t: f64) -> f64 {
        1.0 / self.norm_sqr(t).sqrt()
    }

    /// `<omega_t, omega'_t>` between this unit and the unit with parameter `other`.
    pub fn unit_inner(&self, other: C64, t: f64) -> C64 {
        let o = CoherentOracle::new(other, self.cutoff);
        truncated_exp(self.c.conj() * other * t, self.cutoff) / (self.norm_sqr(t) * o.norm_sqr(t)).sqrt()
    }

    /// `e^{|c|^2 t} - S_N(|c|^2 t)`.
    pub fn tail(&self, t: f64) -> f64 {
        exp_tail(self.c.norm_sqr() * t, self.cutoff)
    }

    /// `||f^1_{1-gamma}||^2 = S_N(|c|^2 (1-gamma)) / S_N(|c|^2)`.
    pub fn f1_norm_sqr(&self, gamma: f64) -> f64 {
        self.norm_sqr(1.0 - gamma) / self.norm_sqr(1.0)
    }

    /// `||G_n^* G_n - id||` for the Stinespring factor built from this unit.
    ///
    /// `G_n^* G_n` is diagonal with entries `S_{N-k}(|c|^2 n) / S_N(|c|^2 n)`
    /// for input occupation `k`; the worst entry is `k = N`.
    pub fn isometry_defect(&self, n: usize) -> f64 {
        1.0 - 1.0 / self.norm_sqr(n as f64)
    }
}

/// `sum_j h S_N(|c|^2 (1 - alpha_j)) / S_N(|c|^2)` over right-endpoint
/// representatives `alpha_j = (j+1) h`.
pub fn closed_form_m2(c: C64, cells_per_unit: usize, cutoff: usize) -> f64 {
    let o = CoherentOracle::new(c, cutoff);
    let h = 1.0 / cells_per_unit as f64;
    (0..cells_per_unit).map(|j| h * o.f1_norm_sqr((j + 1) as f64 * h)).sum()
}

/// `∫_0^1 S_N(x (1-g)) / S_N(x) dg = (S_{N+1}(x) - 1) / (x S_N(x))`, or the
/// untruncated `(1 - e^{-x}) / x` when `cutoff` is `None`; `x = |c|^2`.
pub fn continuum_m2(c: C64, cutoff: Option<usize>) -> f64 {
    let x = c.norm_sqr();
    if x == 0.0 {
        return 1.0;
    }
    match cutoff {
        Some(n) => (truncated_exp_real(x, n + 1) - 1.0) / (x * truncated_exp_real(x, n)),
        None => -(-x).exp_m1() / x,
    }
}

/// Dense matrix of `(id_1 (x) X)^*` acting on raw section coordinates of
/// `∫ (H1 (x) E_alpha)`, built from `(id (x) x*)(y1 (x) y2) = y1 <x, y2>` on
/// every product basis vector.
pub fn dense_adjoint_oracle(x: &Section, left_dim: usize) -> Result<DMatrix<C64>> {
    if x.left_dim() != 1 || x.right_dim() != 1 {
        return Err(Error::ShapeMismatch("X must be a section of ∫ E_alpha".into()));
    }
    let h = x.grid().h();
    let product: usize = (0..x.slices()).map(|j| left_dim * x.slice_dim(j)).sum();
    if product > DENSE_ORACLE_LIMIT {
        return Err(Error::SizeGuard { what: "product basis", size: product, limit: DENSE_ORACLE_LIMIT });
    }
    let mut m = DMatrix::from_element(left_dim, product, C64::new(0.0, 0.0));
    let mut col = 0;
    for j in 0..x.slices() {
        let xj = x.component(j);
        for i in 0..left_dim {
            for xe in xj {
                // basis vector: e_i (x) (delta_j e_e), whose L-inner product with X
                // is h * conj(x_j[e])
                m[(i, col)] = xe.conj() * h;
                col += 1;
            }
        }
    }
    Ok(m)
}

/// Matrix of `z -> z (x) X` from `H1` into raw section coordinates.
pub fn dense_tensor_oracle(x: &Section, left_dim: usize) -> Result<DMatrix<C64>> {
    let adj = dense_adjoint_oracle(x, left_dim)?;
    // raw coordinates carry weight h, so the Hilbert adjoint of `adj` is adj^H / h
    Ok(adj.adjoint() / C64::new(x.grid().h(), 0.0))
}

fn slice_times(grid: &GridSpec) -> Vec<f64> {
    (0..grid.slices()).map(|j| grid.alpha_cells(j) as f64 * grid.h()).collect()
}

/// `<X, Y>` for the unit sections `x_alpha = omega_alpha(c1)`, `y_alpha = omega_alpha(c2)`.
pub fn spatial_inner(c1: C64, c2: C64, grid: &GridSpec) -> C64 {
    let o = CoherentOracle::new(c1, grid.cutoff());
    slice_times(grid).into_iter().map(|a| o.unit_inner(c2, a) * grid.h()).sum()
}

/// Closed form of `||(id_n (x) X^*) G_n(Y)||^2` for the dilation unit `c1`,
/// `X` its own unit section and `Y` the unit section of `c2`.
///
/// With `g_j = c2 1_[0,alpha_j) + c1 1_[alpha_j, n)` the image is graded by
/// particle number `k`:
/// `sum_j h beta_{jk} P_k e(g_j)` with
/// `beta_{jk} = S_{N-k}(|c1|^2 alpha_j) / sqrt(S(|c2|^2 alpha_j) S(|c1|^2 n) S(|c1|^2 alpha_j))`,
/// and `<P_k e(g), P_k e(g')> = <g, g'>^k / k!`.
pub fn spatial_dagger_value(c1: C64, c2: C64, n: usize, grid: &GridSpec) -> f64 {
    let big_n = grid.cutoff();
    let h = grid.h();
    let nt = n as f64;
    let (x1, x2) = (c1.norm_sqr(), c2.norm_sqr());
    let alphas = slice_times(grid);
    let s = |x: f64, order: usize| truncated_exp_real(x, order);
    let beta = |a: f64, k: usize| {
        s(x1 * a, big_n - k) / (s(x2 * a, big_n) * s(x1 * nt, big_n) * s(x1 * a, big_n)).sqrt()
    };
    let overlap = |aj: f64, al: f64| -> C64 {
        let (lo, hi) = if aj <= al { (aj, al) } else { (al, aj) };
        let middle = if aj <= al { c1.conj() * c2 } else { c2.conj() * c1 };
        C64::new(x2 * lo + x1 * (nt - hi), 0.0) + middle * (hi - lo)
    };
    let mut total = C64::new(0.0, 0.0);
    for &aj in &alphas {
        for &al in &alphas {
            let g = overlap(aj, al);
            let mut gk = C64::new(1.0, 0.0);
            let mut fact = 1.0;
            for k in 0..=big_n {
                if k > 0 {
                    gk *= g;
                    fact *= k as f64;
                }
                total += gk / fact * (h * h * beta(aj, k) * beta(al, k));
            }
        }
    }
    total.re
}

/// Bound on `1 - (dagger value)` when `X` and `Y` both come from the
/// dilation unit: `1 - sum_k (xn)^k/k! (S_{N-k}(x)/S_N(x))^2 / S_N(xn)`.
pub fn same_unit_dagger_deficit_bound(c: C64, n: usize, cutoff: usize) -> f64 {
    let x = c.norm_sqr();
    let xn = x * n as f64;
    let sn = truncated_exp_real(x, cutoff);
    let mut acc = 0.0;
    let mut term = 1.0;
    for k in 0..=cutoff {
        if k > 0 {
            term *= xn / k as f64;
        }
        let r = truncated_exp_real(x, cutoff - k) / sn;
        acc += term * r * r;
    }
    1.0 - acc / truncated_exp_real(xn, cutoff)
}

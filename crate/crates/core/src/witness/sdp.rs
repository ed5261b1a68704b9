//! Dense primal-dual interior-point solver for small conic programs
//!
//! ```text
//!     minimize  cᵀx   subject to  A x = b,  x ∈ K
//!     maximize  bᵀy   subject to  Aᵀy + z = c,  z ∈ K
//! ```
//!
//! where `K` is a product of nonnegative orthants and cones of Hermitian
//! positive semidefinite matrices. A Hermitian `d × d` block occupies `d²`
//! real coordinates through the orthonormal map of [`herm_to_vec`], so the
//! Euclidean inner product of coordinates equals `tr(XZ)`.
//!
//! Search directions use the HKM scaling with a Mehrotra predictor-corrector
//! step. Problems here have at most a few hundred variables, so the Schur
//! complement is formed and factored densely.

use std::f64::consts::SQRT_2;

use num_complex::Complex64;

use crate::qmat::{eig_hermitian, ComplexMatrix};

/// One block of the cone `K`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cone {
    NonNegative(usize),
    /// Hermitian PSD matrices of the given dimension.
    HermitianPsd(usize),
}

impl Cone {
    /// Number of real coordinates.
    pub fn size(self) -> usize {
        match self {
            Cone::NonNegative(n) => n,
            Cone::HermitianPsd(d) => d * d,
        }
    }

    /// Barrier parameter contribution.
    fn degree(self) -> usize {
        match self {
            Cone::NonNegative(n) => n,
            Cone::HermitianPsd(d) => d,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    IterationCap,
    NumericalTrouble,
    /// The dual grew without bound: no primal feasible point exists.
    PrimalInfeasible,
}

/// Outcome summary of one solve.
#[derive(Clone, Debug, PartialEq)]
pub struct SdpReport {
    pub primal_value: f64,
    pub dual_value: f64,
    pub iterations: usize,
    pub status: SdpStatus,
}

impl SdpReport {
    /// `|primal − dual| / max(1, |primal|)`.
    pub fn relative_gap(&self) -> f64 {
        (self.primal_value - self.dual_value).abs() / self.primal_value.abs().max(1.0)
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SdpSettings {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iter: usize,
}

impl Default for SdpSettings {
    fn default() -> Self {
        Self { gap_tol: 1e-7, feas_tol: 1e-9, max_iter: 100 }
    }
}

/// Problem data. `a` is row-major `m × n`.
#[derive(Clone, Debug)]
pub struct ConicProblem {
    pub cones: Vec<Cone>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct ConicSolution {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub report: SdpReport,
}

impl ConicSolution {
    /// `xᵀz`.
    pub fn complementarity(&self) -> f64 {
        dot(&self.x, &self.z)
    }
}

/// Orthonormal coordinates of a Hermitian matrix: the diagonal, then
/// `√2·Re H_ij` and `√2·Im H_ij` for each `i < j`.
pub fn herm_to_vec(h: &ComplexMatrix) -> Vec<f64> {
    let d = h.dim();
    let mut v = Vec::with_capacity(d * d);
    v.extend((0..d).map(|i| h[(i, i)].re));
    for i in 0..d {
        for j in i + 1..d {
            v.push(SQRT_2 * h[(i, j)].re);
            v.push(SQRT_2 * h[(i, j)].im);
        }
    }
    v
}

/// Inverse of [`herm_to_vec`].
pub fn vec_to_herm(v: &[f64], d: usize) -> ComplexMatrix {
    debug_assert_eq!(v.len(), d * d);
    let mut h = ComplexMatrix::zeros(d);
    for i in 0..d {
        h[(i, i)] = Complex64::new(v[i], 0.0);
    }
    let mut k = d;
    for i in 0..d {
        for j in i + 1..d {
            let z = Complex64::new(v[k], v[k + 1]) / SQRT_2;
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
            k += 2;
        }
    }
    h
}

/// Basis matrix `k` of the coordinate map, i.e. `vec_to_herm(e_k)`.
pub fn herm_basis(d: usize, k: usize) -> ComplexMatrix {
    let mut e = vec![0.0; d * d];
    e[k] = 1.0;
    vec_to_herm(&e, d)
}

/// Four independent accumulators so the loop vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// In-place Cholesky of a symmetric positive definite row-major matrix.
/// Leaves the lower factor in the lower triangle.
fn cholesky(m: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut d = m[j * n + j];
        for k in 0..j {
            d -= m[j * n + k] * m[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        m[j * n + j] = d;
        for i in j + 1..n {
            let mut s = m[i * n + j];
            for k in 0..j {
                s -= m[i * n + k] * m[j * n + k];
            }
            m[i * n + j] = s / d;
        }
    }
    true
}

fn cholesky_solve(l: &[f64], n: usize, rhs: &mut [f64]) {
    for i in 0..n {
        let mut s = rhs[i];
        for k in 0..i {
            s -= l[i * n + k] * rhs[k];
        }
        rhs[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for k in i + 1..n {
            s -= l[k * n + i] * rhs[k];
        }
        rhs[i] = s / l[i * n + i];
    }
}

/// Per-block quantities of the current iterate.
enum BlockState {
    Lp { x: Vec<f64>, z: Vec<f64> },
    Psd { d: usize, x: ComplexMatrix, z_inv: ComplexMatrix },
}

impl BlockState {
    /// Applies the HKM scaling operator `U ↦ sym(X U Z⁻¹)` (LP: `u·x/z`).
    fn scale(&self, u: &[f64]) -> Vec<f64> {
        match self {
            BlockState::Lp { x, z } => u.iter().zip(x.iter().zip(z)).map(|(u, (x, z))| u * x / z).collect(),
            BlockState::Psd { d, x, z_inv, .. } => {
                let um = vec_to_herm(u, *d);
                herm_to_vec(&x.matmul(&um).matmul(z_inv).hermitian_part())
            }
        }
    }
}

struct Layout {
    offsets: Vec<usize>,
    n: usize,
    m: usize,
    nu: f64,
}

impl ConicProblem {
    fn layout(&self) -> Layout {
        let mut offsets = Vec::with_capacity(self.cones.len());
        let mut n = 0;
        for c in &self.cones {
            offsets.push(n);
            n += c.size();
        }
        let nu = self.cones.iter().map(|c| c.degree()).sum::<usize>() as f64;
        Layout { offsets, n, m: self.b.len(), nu }
    }

    fn a_mul(&self, x: &[f64], lay: &Layout) -> Vec<f64> {
        (0..lay.m).map(|i| dot(&self.a[i * lay.n..(i + 1) * lay.n], x)).collect()
    }

    fn at_mul(&self, y: &[f64], lay: &Layout) -> Vec<f64> {
        let mut out = vec![0.0; lay.n];
        for (i, &yi) in y.iter().enumerate() {
            if yi != 0.0 {
                for (o, a) in out.iter_mut().zip(&self.a[i * lay.n..(i + 1) * lay.n]) {
                    *o += a * yi;
                }
            }
        }
        out
    }

    /// Solves the program from a scaled identity starting point.
    pub fn solve(&self, settings: &SdpSettings) -> ConicSolution {
        let lay = self.layout();
        assert_eq!(self.a.len(), lay.m * lay.n, "constraint matrix shape");
        assert_eq!(self.c.len(), lay.n, "objective length");

        let mut x = self.identity_point(&lay, 1.0);
        let mut z = self.identity_point(&lay, 1.0);
        let mut y = vec![0.0; lay.m];
        let bnorm = 1.0 + norm(&self.b);
        let cnorm = 1.0 + norm(&self.c);

        let mut status = SdpStatus::IterationCap;
        let mut iterations = 0;
        let mut gamma = 0.9;
        let mut stalls = 0;

        for it in 0..=settings.max_iter {
            iterations = it;
            let ax = self.a_mul(&x, &lay);
            let rp: Vec<f64> = self.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let aty = self.at_mul(&y, &lay);
            let rd: Vec<f64> = (0..lay.n).map(|j| self.c[j] - aty[j] - z[j]).collect();
            let pobj = dot(&self.c, &x);
            let dobj = dot(&self.b, &y);
            let gap = (pobj - dobj).abs() / pobj.abs().max(1.0);
            let pinf = norm(&rp) / bnorm;
            let dinf = norm(&rd) / cnorm;
            log::trace!("ipm it={it} pobj={pobj:.10e} dobj={dobj:.10e} gap={gap:.2e} pinf={pinf:.2e} dinf={dinf:.2e}");

            if gap <= settings.gap_tol && pinf <= settings.feas_tol && dinf <= settings.feas_tol {
                status = SdpStatus::Optimal;
                break;
            }
            if dobj > 1e8 * pobj.abs().max(1.0) && dinf <= 1e-6 {
                status = SdpStatus::PrimalInfeasible;
                break;
            }
            if it == settings.max_iter {
                break;
            }

            let mu = dot(&x, &z) / lay.nu;
            let blocks = match self.block_states(&x, &z, &lay) {
                Some(b) => b,
                None => {
                    status = SdpStatus::NumericalTrouble;
                    break;
                }
            };
            let schur = match self.schur_factor(&blocks, &lay) {
                Some(s) => s,
                None => {
                    status = SdpStatus::NumericalTrouble;
                    break;
                }
            };

            // predictor
            let h_aff: Vec<f64> = x.iter().map(|v| -v).collect();
            let (dx_a, dy_a, dz_a) = self.direction(&blocks, &schur, &lay, &h_aff, &rp, &rd);
            let ap = self.max_step(&x, &dx_a, &lay);
            let ad = self.max_step(&z, &dz_a, &lay);
            let ap = ap.min(1.0);
            let ad = ad.min(1.0);
            let mu_aff: f64 = x
                .iter()
                .zip(&dx_a)
                .zip(z.iter().zip(&dz_a))
                .map(|((x, dx), (z, dz))| (x + ap * dx) * (z + ad * dz))
                .sum::<f64>()
                / lay.nu;
            let _ = dy_a;
            let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

            // corrector
            let h = self.corrector_target(&blocks, &lay, sigma * mu, &dx_a, &dz_a);
            let (dx, dy, dz) = self.direction(&blocks, &schur, &lay, &h, &rp, &rd);
            let ap = (gamma * self.max_step(&x, &dx, &lay)).min(1.0);
            let ad = (gamma * self.max_step(&z, &dz, &lay)).min(1.0);
            if !(ap.is_finite() && ad.is_finite()) {
                status = SdpStatus::NumericalTrouble;
                break;
            }
            if ap.max(ad) < 1e-10 {
                stalls += 1;
                if stalls > 3 {
                    status = SdpStatus::NumericalTrouble;
                    break;
                }
            }
            for (v, d) in x.iter_mut().zip(&dx) {
                *v += ap * d;
            }
            for (v, d) in y.iter_mut().zip(&dy) {
                *v += ad * d;
            }
            for (v, d) in z.iter_mut().zip(&dz) {
                *v += ad * d;
            }
            gamma = 0.9 + 0.09 * ap.min(ad);
        }

        let report = SdpReport { primal_value: dot(&self.c, &x), dual_value: dot(&self.b, &y), iterations, status };
        ConicSolution { x, y, z, report }
    }

    fn identity_point(&self, lay: &Layout, scale: f64) -> Vec<f64> {
        let mut v = vec![0.0; lay.n];
        for (cone, &off) in self.cones.iter().zip(&lay.offsets) {
            match *cone {
                Cone::NonNegative(k) => v[off..off + k].iter_mut().for_each(|e| *e = scale),
                Cone::HermitianPsd(d) => v[off..off + d].iter_mut().for_each(|e| *e = scale),
            }
        }
        v
    }

    fn block_states(&self, x: &[f64], z: &[f64], lay: &Layout) -> Option<Vec<BlockState>> {
        self.cones
            .iter()
            .zip(&lay.offsets)
            .map(|(cone, &off)| match *cone {
                Cone::NonNegative(k) => Some(BlockState::Lp { x: x[off..off + k].to_vec(), z: z[off..off + k].to_vec() }),
                Cone::HermitianPsd(d) => {
                    let xm = vec_to_herm(&x[off..off + d * d], d);
                    let zm = vec_to_herm(&z[off..off + d * d], d);
                    let spec = eig_hermitian(&zm).ok()?;
                    if !(spec.min() > 0.0) {
                        return None;
                    }
                    let z_inv = spec.reconstruct_with(|l| 1.0 / l);
                    Some(BlockState::Psd { d, x: xm, z_inv })
                }
            })
            .collect()
    }

    /// Factors `M = A D Aᵀ`.
    fn schur_factor(&self, blocks: &[BlockState], lay: &Layout) -> Option<Vec<f64>> {
        let (m, n) = (lay.m, lay.n);
        let mut schur = vec![0.0; m * m];
        for ((cone, &off), block) in self.cones.iter().zip(&lay.offsets).zip(blocks) {
            match block {
                BlockState::Lp { x, z } => {
                    let w: Vec<f64> = x.iter().zip(z).map(|(x, z)| x / z).collect();
                    for i in 0..m {
                        let ai = &self.a[i * n + off..i * n + off + w.len()];
                        let wai: Vec<f64> = ai.iter().zip(&w).map(|(a, w)| a * w).collect();
                        for j in i..m {
                            let aj = &self.a[j * n + off..j * n + off + w.len()];
                            let v = dot(&wai, aj);
                            schur[i * m + j] += v;
                        }
                    }
                }
                BlockState::Psd { .. } => {
                    let size = cone.size();
                    // A_b D (m × size), built row by row
                    let ad: Vec<Vec<f64>> = (0..m)
                        .map(|i| {
                            let row = &self.a[i * n + off..i * n + off + size];
                            if row.iter().all(|&v| v == 0.0) {
                                vec![0.0; size]
                            } else {
                                // D is symmetric, so (A_i D) = D(A_i)ᵀ
                                block.scale(row)
                            }
                        })
                        .collect();
                    for i in 0..m {
                        for j in i..m {
                            let aj = &self.a[j * n + off..j * n + off + size];
                            schur[i * m + j] += dot(&ad[i], aj);
                        }
                    }
                }
            }
        }
        for i in 0..m {
            for j in 0..i {
                schur[i * m + j] = schur[j * m + i];
            }
        }
        let scale = (0..m).map(|i| schur[i * m + i]).fold(0.0, f64::max).max(1e-300);
        for attempt in 0..4 {
            let mut f = schur.clone();
            if attempt > 0 {
                let reg = scale * 10f64.powi(-14 + 2 * attempt as i32);
                for i in 0..m {
                    f[i * m + i] += reg;
                }
            }
            if cholesky(&mut f, m) {
                return Some(f);
            }
        }
        None
    }

    fn apply_scaling(&self, blocks: &[BlockState], lay: &Layout, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; lay.n];
        for ((cone, &off), block) in self.cones.iter().zip(&lay.offsets).zip(blocks) {
            let size = cone.size();
            out[off..off + size].copy_from_slice(&block.scale(&u[off..off + size]));
        }
        out
    }

    /// Solves the Newton system for `dx = h − D dz`, `dz = rd − Aᵀdy`,
    /// `A dx = rp`.
    fn direction(
        &self,
        blocks: &[BlockState],
        schur: &[f64],
        lay: &Layout,
        h: &[f64],
        rp: &[f64],
        rd: &[f64],
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let d_rd = self.apply_scaling(blocks, lay, rd);
        let ah = self.a_mul(h, lay);
        let adrd = self.a_mul(&d_rd, lay);
        let mut dy: Vec<f64> = (0..lay.m).map(|i| rp[i] - ah[i] + adrd[i]).collect();
        cholesky_solve(schur, lay.m, &mut dy);
        let atdy = self.at_mul(&dy, lay);
        let dz: Vec<f64> = rd.iter().zip(&atdy).map(|(r, a)| r - a).collect();
        let d_dz = self.apply_scaling(blocks, lay, &dz);
        let dx: Vec<f64> = h.iter().zip(&d_dz).map(|(h, d)| h - d).collect();
        (dx, dy, dz)
    }

    fn corrector_target(&self, blocks: &[BlockState], lay: &Layout, target: f64, dx_a: &[f64], dz_a: &[f64]) -> Vec<f64> {
        let mut h = vec![0.0; lay.n];
        for ((cone, &off), block) in self.cones.iter().zip(&lay.offsets).zip(blocks) {
            let size = cone.size();
            let seg = off..off + size;
            match block {
                BlockState::Lp { x, z } => {
                    for (k, j) in seg.enumerate() {
                        h[j] = (target - x[k] * z[k] - dx_a[j] * dz_a[j]) / z[k];
                    }
                }
                BlockState::Psd { d, x, z_inv, .. } => {
                    let dxm = vec_to_herm(&dx_a[seg.clone()], *d);
                    let dzm = vec_to_herm(&dz_a[seg.clone()], *d);
                    let second = dxm.matmul(&dzm).matmul(z_inv).hermitian_part();
                    let hm = z_inv.scale(target).add_scaled(x, -1.0).add_scaled(&second, -1.0);
                    h[seg].copy_from_slice(&herm_to_vec(&hm));
                }
            }
        }
        h
    }

    /// Largest `α` with `v + α·dv ∈ K` (may be infinite).
    fn max_step(&self, v: &[f64], dv: &[f64], lay: &Layout) -> f64 {
        let mut alpha = f64::INFINITY;
        for (cone, &off) in self.cones.iter().zip(&lay.offsets) {
            match *cone {
                Cone::NonNegative(k) => {
                    for j in off..off + k {
                        if dv[j] < 0.0 {
                            alpha = alpha.min(-v[j] / dv[j]);
                        }
                    }
                }
                Cone::HermitianPsd(d) => {
                    let vm = vec_to_herm(&v[off..off + d * d], d);
                    let dm = vec_to_herm(&dv[off..off + d * d], d);
                    let Ok(spec) = eig_hermitian(&vm) else { return 0.0 };
                    if !(spec.min() > 0.0) {
                        return 0.0;
                    }
                    let isqrt = spec.reconstruct_with(|l| 1.0 / l.sqrt());
                    let k = isqrt.matmul(&dm).matmul(&isqrt).hermitian_part();
                    let Ok(ks) = eig_hermitian(&k) else { return 0.0 };
                    if ks.min() < 0.0 {
                        alpha = alpha.min(-1.0 / ks.min());
                    }
                }
            }
        }
        alpha
    }
}

/// Splits a coordinate vector into the matrices of its PSD blocks and the
/// entries of its LP blocks, in cone order.
pub fn block_slices<'a>(cones: &[Cone], v: &'a [f64]) -> Vec<&'a [f64]> {
    let mut out = Vec::with_capacity(cones.len());
    let mut off = 0;
    for c in cones {
        out.push(&v[off..off + c.size()]);
        off += c.size();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::c64;

    #[test]
    fn coordinate_map_is_isometric() {
        let mut h = ComplexMatrix::zeros(3);
        h[(0, 0)] = c64(0.5, 0.0);
        h[(1, 1)] = c64(-1.0, 0.0);
        h[(0, 2)] = c64(0.25, -0.75);
        h[(2, 0)] = c64(0.25, 0.75);
        let v = herm_to_vec(&h);
        assert_eq!(vec_to_herm(&v, 3), h);
        assert!((dot(&v, &v) - h.trace_product(&h)).abs() < 1e-15);
        for k in 0..9 {
            let e = herm_basis(3, k);
            assert!((e.trace_product(&h) - v[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn small_lp() {
        // min x1 + 2 x2  s.t. x1 + x2 = 1, x ≥ 0  →  1
        let p = ConicProblem { cones: vec![Cone::NonNegative(2)], a: vec![1.0, 1.0], b: vec![1.0], c: vec![1.0, 2.0] };
        let s = p.solve(&SdpSettings::default());
        assert_eq!(s.report.status, SdpStatus::Optimal);
        assert!((s.report.primal_value - 1.0).abs() < 1e-7);
        assert!(s.report.relative_gap() <= 1e-7);
    }

    #[test]
    fn min_eigenvalue_sdp() {
        // min tr(C X) s.t. tr X = 1, X ⪰ 0  →  λ_min(C)
        let mut cm = ComplexMatrix::from_real_diagonal(&[2.0, 1.0, 3.0]);
        cm[(0, 1)] = c64(0.0, 0.5);
        cm[(1, 0)] = c64(0.0, -0.5);
        let lmin = eig_hermitian(&cm).unwrap().min();
        let p = ConicProblem {
            cones: vec![Cone::HermitianPsd(3)],
            a: herm_to_vec(&ComplexMatrix::identity(3)),
            b: vec![1.0],
            c: herm_to_vec(&cm),
        };
        let s = p.solve(&SdpSettings::default());
        assert_eq!(s.report.status, SdpStatus::Optimal);
        assert!((s.report.primal_value - lmin).abs() < 1e-6, "{} vs {lmin}", s.report.primal_value);
        assert!((s.report.dual_value - lmin).abs() < 1e-6);
    }

    #[test]
    fn detects_infeasibility() {
        // x1 + x2 = -1 with x ≥ 0 has no solution
        let p = ConicProblem { cones: vec![Cone::NonNegative(2)], a: vec![1.0, 1.0], b: vec![-1.0], c: vec![1.0, 1.0] };
        let s = p.solve(&SdpSettings::default());
        assert_eq!(s.report.status, SdpStatus::PrimalInfeasible);
    }
}

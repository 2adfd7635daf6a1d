//! Dense complex linear algebra.
//!
//! Everything here is deterministic: the same input always produces the
//! bit-identical output. Basis ordering is big-endian (qubit 0 / leftmost
//! letter is the most significant index bit).
//!
//! Whenever a routine normalizes a vector or returns eigen-/orthogonalized
//! vectors, the global phase is fixed so that the first amplitude with
//! modulus above [`PHASE_REF_TOL`] is real and positive. This makes
//! regression comparisons exact instead of "up to phase".

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
use num_traits::Float;

/// Double-precision complex scalar used everywhere.
pub type C64 = Complex64;

/// Hard cap on vector/matrix dimensions (2^12).
pub const DIM_CAP: usize = 1 << 12;

/// Relative eigenvalue cutoff separating a span from its numerical null
/// space. Codeword Gram matrices become near-singular as the letter overlap
/// approaches one, so the cutoff is relative to the largest eigenvalue.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Amplitudes below this modulus are ignored when fixing global phase.
pub const PHASE_REF_TOL: f64 = 1e-8;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A complex amplitude vector over an indexed basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    amps: Vec<C64>,
}

impl Ket {
    /// Wraps raw amplitudes. Errors on an empty vector or one past the cap.
    pub fn new(amps: Vec<C64>) -> crate::Result<Self> {
        if amps.is_empty() {
            return Err(crate::Error::Size(String::from("ket must not be empty")));
        }
        if amps.len() > DIM_CAP {
            return Err(crate::Error::Size(alloc::format!(
                "ket dimension {} exceeds cap {}",
                amps.len(),
                DIM_CAP
            )));
        }
        Ok(Ket { amps })
    }

    /// Ket with real amplitudes.
    pub fn from_reals(re: &[f64]) -> Self {
        Ket {
            amps: re.iter().map(|&x| c(x, 0.0)).collect(),
        }
    }

    /// Computational basis ket `|index⟩` of the given dimension.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amps = vec![c(0.0, 0.0); dim];
        amps[index] = c(1.0, 0.0);
        Ket { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `⟨self|other⟩` (self is conjugated).
    pub fn inner(&self, other: &Ket) -> C64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&self, s: C64) -> Ket {
        Ket {
            amps: self.amps.iter().map(|a| a * s).collect(),
        }
    }

    pub fn add(&self, other: &Ket) -> Ket {
        Ket {
            amps: self
                .amps
                .iter()
                .zip(other.amps.iter())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Ket) -> Ket {
        Ket {
            amps: self
                .amps
                .iter()
                .zip(other.amps.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// Multiplies by the phase that makes the first amplitude with modulus
    /// above [`PHASE_REF_TOL`] real positive.
    pub fn canonical_phase(&self) -> Ket {
        match self.amps.iter().find(|a| a.norm() > PHASE_REF_TOL) {
            Some(a) => {
                let phase = a.conj() / a.norm();
                self.scale(phase)
            }
            None => self.clone(),
        }
    }

    /// Unit-norm copy with the canonical global phase.
    pub fn normalized(&self) -> Ket {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        self.scale(c(1.0 / n, 0.0)).canonical_phase()
    }

    pub fn is_unit(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() < tol
    }

    /// Tensor product, big-endian: `self` indexes the more significant part.
    pub fn tensor(&self, other: &Ket) -> crate::Result<Ket> {
        let dim = self
            .dim()
            .checked_mul(other.dim())
            .ok_or_else(|| crate::Error::Size(String::from("tensor dimension overflow")))?;
        if dim > DIM_CAP {
            return Err(crate::Error::Size(alloc::format!(
                "tensor dimension {dim} exceeds cap {DIM_CAP}"
            )));
        }
        let mut amps = Vec::with_capacity(dim);
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(Ket { amps })
    }

    /// Max-modulus difference from another ket.
    pub fn max_abs_diff(&self, other: &Ket) -> f64 {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for Ket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, a) in self.amps.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{:+.6}{:+.6}i", a.re, a.im)?;
        }
        write!(f, "]")
    }
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![c(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, c(1.0, 0.0));
        }
        m
    }

    /// Builds from a row-major flat slice.
    pub fn from_flat(rows: usize, cols: usize, data: Vec<C64>) -> crate::Result<Self> {
        if data.len() != rows * cols {
            return Err(crate::Error::Size(String::from(
                "flat data length does not match rows*cols",
            )));
        }
        if rows > DIM_CAP || cols > DIM_CAP {
            return Err(crate::Error::Size(String::from("matrix exceeds cap")));
        }
        Ok(CMatrix { rows, cols, data })
    }

    /// Builds from real row-major entries.
    pub fn from_reals(rows: usize, cols: usize, re: &[f64]) -> crate::Result<Self> {
        Self::from_flat(rows, cols, re.iter().map(|&x| c(x, 0.0)).collect())
    }

    /// Matrix whose rows are the adjoints of the given kets.
    pub fn from_bra_rows(kets: &[Ket]) -> Self {
        let rows = kets.len();
        let cols = kets.first().map_or(0, Ket::dim);
        let mut m = CMatrix::zeros(rows, cols);
        for (r, k) in kets.iter().enumerate() {
            for (cidx, a) in k.amps().iter().enumerate() {
                m.set(r, cidx, a.conj());
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, cidx: usize) -> C64 {
        self.data[r * self.cols + cidx]
    }

    #[inline]
    pub fn set(&mut self, r: usize, cidx: usize, v: C64) {
        self.data[r * self.cols + cidx] = v;
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column_ket(&self, cidx: usize) -> Ket {
        Ket {
            amps: (0..self.rows).map(|r| self.get(r, cidx)).collect(),
        }
    }

    pub fn adjoint(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for cidx in 0..self.cols {
                m.set(cidx, r, self.get(r, cidx).conj());
            }
        }
        m
    }

    pub fn transpose(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for cidx in 0..self.cols {
                m.set(cidx, r, self.get(r, cidx));
            }
        }
        m
    }

    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        debug_assert_eq!(self.cols, other.rows);
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for cidx in 0..other.cols {
                    let v = out.get(r, cidx) + a * other.get(k, cidx);
                    out.set(r, cidx, v);
                }
            }
        }
        out
    }

    pub fn mul_ket(&self, k: &Ket) -> Ket {
        debug_assert_eq!(self.cols, k.dim());
        let mut amps = vec![c(0.0, 0.0); self.rows];
        for r in 0..self.rows {
            let mut acc = c(0.0, 0.0);
            for cidx in 0..self.cols {
                acc += self.get(r, cidx) * k.amps[cidx];
            }
            amps[r] = acc;
        }
        Ket { amps }
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    /// `|a⟩⟨b|` outer product.
    pub fn outer(a: &Ket, b: &Ket) -> CMatrix {
        let mut m = CMatrix::zeros(a.dim(), b.dim());
        for r in 0..a.dim() {
            for cidx in 0..b.dim() {
                m.set(r, cidx, a.amps[r] * b.amps[cidx].conj());
            }
        }
        m
    }

    /// Tensor product, big-endian.
    pub fn tensor(&self, other: &CMatrix) -> crate::Result<CMatrix> {
        let rows = self
            .rows
            .checked_mul(other.rows)
            .ok_or_else(|| crate::Error::Size(String::from("tensor dimension overflow")))?;
        let cols = self
            .cols
            .checked_mul(other.cols)
            .ok_or_else(|| crate::Error::Size(String::from("tensor dimension overflow")))?;
        if rows > DIM_CAP || cols > DIM_CAP {
            return Err(crate::Error::Size(alloc::format!(
                "tensor dimension {rows}x{cols} exceeds cap {DIM_CAP}"
            )));
        }
        let mut out = CMatrix::zeros(rows, cols);
        for r1 in 0..self.rows {
            for c1 in 0..self.cols {
                let a = self.get(r1, c1);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for r2 in 0..other.rows {
                    for c2 in 0..other.cols {
                        out.set(
                            r1 * other.rows + r2,
                            c1 * other.cols + c2,
                            a * other.get(r2, c2),
                        );
                    }
                }
            }
        }
        Ok(out)
    }

    /// Largest entry modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// `‖M†M − I‖_max`.
    pub fn unitarity_defect(&self) -> f64 {
        self.adjoint()
            .mul(self)
            .max_abs_diff(&CMatrix::identity(self.cols))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.rows == self.cols && self.unitarity_defect() < tol
    }

    /// `‖M − M†‖_max`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.rows == self.cols && self.hermiticity_defect() < tol
    }

    /// Largest imaginary part over all entries.
    pub fn max_imag(&self) -> f64 {
        self.data.iter().map(|a| a.im.abs()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> crate::Result<CMatrix> {
        if self.rows != self.cols {
            return Err(crate::Error::Contract(String::from(
                "inverse needs a square matrix",
            )));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = CMatrix::identity(n);
        for col in 0..n {
            let mut piv = col;
            let mut best = a.get(col, col).norm();
            for r in (col + 1)..n {
                let v = a.get(r, col).norm();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best < 1e-300 {
                return Err(crate::Error::Degenerate(vec![alloc::format!(
                    "singular at column {col}"
                )]));
            }
            if piv != col {
                for k in 0..n {
                    let (x, y) = (a.get(col, k), a.get(piv, k));
                    a.set(col, k, y);
                    a.set(piv, k, x);
                    let (x, y) = (inv.get(col, k), inv.get(piv, k));
                    inv.set(col, k, y);
                    inv.set(piv, k, x);
                }
            }
            let d = a.get(col, col);
            for k in 0..n {
                a.set(col, k, a.get(col, k) / d);
                inv.set(col, k, inv.get(col, k) / d);
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a.get(r, col);
                if f.norm_sqr() == 0.0 {
                    continue;
                }
                for k in 0..n {
                    let v = a.get(r, k) - f * a.get(col, k);
                    a.set(r, k, v);
                    let v = inv.get(r, k) - f * inv.get(col, k);
                    inv.set(r, k, v);
                }
            }
        }
        Ok(inv)
    }
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermEig {
    /// Ascending eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors as columns, matching `eigenvalues`, each with the
    /// canonical global phase.
    pub eigenvectors: CMatrix,
}

/// Hermitian eigendecomposition by cyclic Jacobi rotations.
///
/// Deterministic for a fixed input: sweeps run in a fixed pivot order until
/// the off-diagonal mass is at rounding level. Errors if the input is not
/// Hermitian within 1e-10.
pub fn herm_eig(m: &CMatrix) -> crate::Result<HermEig> {
    if m.rows() != m.cols() {
        return Err(crate::Error::Contract(String::from(
            "eigendecomposition needs a square matrix",
        )));
    }
    if !m.is_hermitian(1e-10) {
        return Err(crate::Error::Contract(alloc::format!(
            "matrix is not Hermitian (defect {:.3e})",
            m.hermiticity_defect()
        )));
    }
    let n = m.rows();
    let mut a = m.clone();
    // Symmetrize exactly so rounding in the input cannot bias the sweep.
    for r in 0..n {
        for cidx in 0..n {
            let sym = (a.get(r, cidx) + a.get(cidx, r).conj()) * c(0.5, 0.0);
            a.set(r, cidx, sym);
            a.set(cidx, r, sym.conj());
        }
        let d = a.get(r, r);
        a.set(r, r, c(d.re, 0.0));
    }
    let mut v = CMatrix::identity(n);
    let scale = a.max_abs().max(1e-300);
    let stop = scale * 1e-15;
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a.get(p, q).norm());
            }
        }
        if off <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let g = a.get(p, q);
                let gn = g.norm();
                if gn <= stop * 1e-2 {
                    continue;
                }
                let phase = g / gn;
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                let tau = (aqq - app) / (2.0 * gn);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let cc = 1.0 / (1.0 + t * t).sqrt();
                let ss = t * cc;
                // G: columns (p,q) mix as
                //   col_p' =  c·col_p + s·e^{-iφ}·col_q
                //   col_q' = -s·e^{iφ}·col_p + c·col_q
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, akp * cc + akq * ss * phase.conj());
                    a.set(k, q, akq * cc - akp * ss * phase);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, apk * cc + aqk * ss * phase);
                    a.set(q, k, aqk * cc - apk * ss * phase.conj());
                }
                // Re-pin exact zeros/realness on the pivot pair.
                a.set(p, q, c(0.0, 0.0));
                a.set(q, p, c(0.0, 0.0));
                let dp = a.get(p, p);
                a.set(p, p, c(dp.re, 0.0));
                let dq = a.get(q, q);
                a.set(q, q, c(dq.re, 0.0));
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, vkp * cc + vkq * ss * phase.conj());
                    v.set(k, q, vkq * cc - vkp * ss * phase);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a.get(i, i)
            .re
            .partial_cmp(&a.get(j, j).re)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a.get(i, i).re).collect();
    let mut eigenvectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = v.column_ket(src).canonical_phase();
        for r in 0..n {
            eigenvectors.set(r, dst, col.amps()[r]);
        }
    }
    Ok(HermEig {
        eigenvalues,
        eigenvectors,
    })
}

/// Applies `f` to the spectrum of a Hermitian matrix, restricted to its
/// span: eigenvalues with `|λ| ≤ rank_tol·|λ|_max` are mapped to zero, the
/// rest through `f`. Errors if `f` returns a non-finite value on a retained
/// eigenvalue.
pub fn func_on_span(
    m: &CMatrix,
    f: impl Fn(f64) -> f64,
    rank_tol: f64,
) -> crate::Result<CMatrix> {
    let eig = herm_eig(m)?;
    let n = m.rows();
    let lam_max = eig
        .eigenvalues
        .iter()
        .map(|l| l.abs())
        .fold(0.0, f64::max);
    let cut = rank_tol * lam_max;
    let mut out = CMatrix::zeros(n, n);
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam.abs() <= cut {
            continue;
        }
        let fl = f(lam);
        if !fl.is_finite() {
            return Err(crate::Error::Domain(alloc::format!(
                "function undefined on retained eigenvalue {lam:.6e}"
            )));
        }
        let vk = eig.eigenvectors.column_ket(k);
        out = out.add(&CMatrix::outer(&vk, &vk).scale(c(fl, 0.0)));
    }
    Ok(out)
}

/// Result of extending an orthonormal set.
#[derive(Debug, Clone)]
pub struct BasisExtension {
    /// The full orthonormal set: the given vectors first, unchanged, then
    /// the accepted candidates.
    pub basis: Vec<Ket>,
    /// Indices (into the candidate list) that were linearly dependent on
    /// the accumulated set and skipped.
    pub skipped: Vec<usize>,
}

/// Sequential Gram-Schmidt extension of an orthonormal set.
///
/// Candidates are processed in order; each is projected against the
/// accumulated set (twice, which keeps orthogonality at rounding level) and
/// normalized. A candidate whose residual norm² falls below `rank_tol` is
/// recorded in `skipped` and the extension continues with the next one.
pub fn gram_schmidt_extend(
    given: &[Ket],
    candidates: &[Ket],
    rank_tol: f64,
) -> crate::Result<BasisExtension> {
    let dim = match given.first().or_else(|| candidates.first()) {
        Some(k) => k.dim(),
        None => return Err(crate::Error::Contract(String::from("no vectors given"))),
    };
    check_orthonormal(given, 1e-9, "given set")?;
    let mut basis: Vec<Ket> = given.to_vec();
    let mut skipped = Vec::new();
    for (idx, cand) in candidates.iter().enumerate() {
        if cand.dim() != dim {
            return Err(crate::Error::Size(String::from(
                "candidate dimension mismatch",
            )));
        }
        if basis.len() == dim {
            skipped.push(idx);
            continue;
        }
        let mut r = cand.clone();
        for _pass in 0..2 {
            for b in &basis {
                let ov = b.inner(&r);
                r = r.sub(&b.scale(ov));
            }
        }
        if r.norm_sqr() <= rank_tol {
            skipped.push(idx);
            continue;
        }
        basis.push(r.normalized());
    }
    Ok(BasisExtension { basis, skipped })
}

/// Symmetric (Löwdin) extension of an orthonormal set.
///
/// All candidates are projected onto the orthogonal complement of the given
/// set at once and then orthonormalized by the inverse square root of their
/// Gram matrix. Unlike the sequential extension this treats the candidates
/// symmetrically, so a symmetry of the candidate set survives into the
/// completed basis. Residuals whose Gram eigenvalue falls below `rank_tol`
/// (relative) are dropped and reported; the corresponding candidate index
/// is the one with the largest weight in the dropped eigenvector.
pub fn lowdin_extend(
    given: &[Ket],
    candidates: &[Ket],
    rank_tol: f64,
) -> crate::Result<BasisExtension> {
    let dim = match given.first().or_else(|| candidates.first()) {
        Some(k) => k.dim(),
        None => return Err(crate::Error::Contract(String::from("no vectors given"))),
    };
    check_orthonormal(given, 1e-9, "given set")?;
    let mut residuals: Vec<Ket> = Vec::with_capacity(candidates.len());
    for cand in candidates {
        if cand.dim() != dim {
            return Err(crate::Error::Size(String::from(
                "candidate dimension mismatch",
            )));
        }
        let mut r = cand.clone();
        for _pass in 0..2 {
            for b in given {
                let ov = b.inner(&r);
                r = r.sub(&b.scale(ov));
            }
        }
        residuals.push(r);
    }
    let k = residuals.len();
    if k == 0 {
        return Ok(BasisExtension {
            basis: given.to_vec(),
            skipped: Vec::new(),
        });
    }
    let mut gram = CMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            gram.set(i, j, residuals[i].inner(&residuals[j]));
        }
    }
    let eig = herm_eig(&gram)?;
    let lam_max = eig
        .eigenvalues
        .iter()
        .map(|l| l.abs())
        .fold(0.0, f64::max);
    let cut = rank_tol * lam_max.max(1e-300);
    let mut skipped = Vec::new();
    let mut keep: Vec<usize> = Vec::new();
    for (idx, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam <= cut {
            // Attribute the dropped direction to its dominant candidate.
            let col = eig.eigenvectors.column_ket(idx);
            let mut best = 0usize;
            let mut best_w = -1.0;
            for (ci, a) in col.amps().iter().enumerate() {
                if a.norm() > best_w {
                    best_w = a.norm();
                    best = ci;
                }
            }
            skipped.push(best);
        } else {
            keep.push(idx);
        }
    }
    // G^{-1/2} on the retained subspace, applied to the residual family.
    let mut basis = given.to_vec();
    let mut new_vecs: Vec<Ket> = Vec::new();
    for j in 0..k {
        // w_j = Σ_i residual_i · (G^{-1/2})_{ij}
        let mut coeffs = vec![c(0.0, 0.0); k];
        let mut in_span = false;
        for &e in &keep {
            let lam = eig.eigenvalues[e];
            let ucol = eig.eigenvectors.column_ket(e);
            let w = ucol.amps()[j].conj() / c(lam.sqrt(), 0.0);
            if w.norm() > 0.0 {
                in_span = true;
            }
            for (i, ci) in coeffs.iter_mut().enumerate() {
                *ci += ucol.amps()[i] * w;
            }
        }
        if !in_span {
            continue;
        }
        let mut w = Ket::basis(dim, 0).scale(c(0.0, 0.0));
        for (i, r) in residuals.iter().enumerate() {
            w = w.add(&r.scale(coeffs[i]));
        }
        if w.norm_sqr() <= rank_tol {
            continue;
        }
        new_vecs.push(w.normalized());
    }
    // Dropped directions make the Löwdin family rank-deficient; in that
    // case only the first `rank` outputs are kept, chosen greedily so the
    // result stays orthonormal.
    for wv in new_vecs {
        let mut r = wv;
        for b in &basis {
            let ov = b.inner(&r);
            r = r.sub(&b.scale(ov));
        }
        if r.norm_sqr() > 0.5 {
            basis.push(r.normalized());
        }
    }
    Ok(BasisExtension { basis, skipped })
}

/// Errors unless the set is pairwise orthonormal within `tol`.
pub fn check_orthonormal(kets: &[Ket], tol: f64, what: &str) -> crate::Result<()> {
    for (i, a) in kets.iter().enumerate() {
        if (a.norm() - 1.0).abs() > tol {
            return Err(crate::Error::Contract(alloc::format!(
                "{what}: vector {i} has norm {:.12}",
                a.norm()
            )));
        }
        for (j, b) in kets.iter().enumerate().skip(i + 1) {
            let ov = a.inner(b).norm();
            if ov > tol {
                return Err(crate::Error::Contract(alloc::format!(
                    "{what}: vectors {i},{j} overlap {ov:.3e}"
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mat2(a: f64, b: f64, cc: f64, d: f64) -> CMatrix {
        CMatrix::from_reals(2, 2, &[a, b, cc, d]).unwrap()
    }

    #[test]
    fn tensor_basis_case() {
        let up = Ket::basis(2, 0);
        let t = up.tensor(&up).unwrap();
        assert_eq!(t.amps(), Ket::from_reals(&[1.0, 0.0, 0.0, 0.0]).amps());
    }

    #[test]
    fn tensor_identity() {
        let i2 = CMatrix::identity(2);
        let i4 = i2.tensor(&i2).unwrap();
        assert_eq!(i4.max_abs_diff(&CMatrix::identity(4)), 0.0);
    }

    #[test]
    fn tensor_letter_pair_expansion() {
        // overlap 0.6 → p = 0.1; |+⟩⊗|+⟩ amplitudes (0.9, −0.3, −0.3, 0.1)
        let p: f64 = 0.1;
        let plus = Ket::from_reals(&[(1.0 - p).sqrt(), -p.sqrt()]);
        let t = plus.tensor(&plus).unwrap();
        let expect = Ket::from_reals(&[0.9, -0.3, -0.3, 0.1]);
        assert!(t.max_abs_diff(&expect) < 1e-14);
    }

    #[test]
    fn tensor_cap_enforced() {
        let big = Ket::from_reals(&alloc::vec![0.0; 1 << 11]);
        let err = big.tensor(&Ket::from_reals(&[1.0, 0.0, 0.0])).unwrap_err();
        assert!(matches!(err, crate::Error::Size(_)));
    }

    #[test]
    fn tensor_associative_and_unit_preserving() {
        let a = Ket::from_reals(&[0.6, 0.8]);
        let b = Ket::from_reals(&[0.8, -0.6]);
        let cv = Ket::from_reals(&[1.0 / 2.0f64.sqrt(), 1.0 / 2.0f64.sqrt()]);
        let left = a.tensor(&b).unwrap().tensor(&cv).unwrap();
        let right = a.tensor(&b.tensor(&cv).unwrap()).unwrap();
        assert!(left.max_abs_diff(&right) < 1e-14);
        assert!((left.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn herm_eig_2x2_closed_form() {
        // [[0.5,0.18],[0.18,0.5]] → eigenvalues 0.32, 0.68
        let m = mat2(0.5, 0.18, 0.18, 0.5);
        let eig = herm_eig(&m).unwrap();
        assert_abs_diff_eq!(eig.eigenvalues[0], 0.32, epsilon = 1e-13);
        assert_abs_diff_eq!(eig.eigenvalues[1], 0.68, epsilon = 1e-13);
        // reconstruction
        let mut rec = CMatrix::zeros(2, 2);
        for k in 0..2 {
            let v = eig.eigenvectors.column_ket(k);
            rec = rec.add(&CMatrix::outer(&v, &v).scale(C64::new(eig.eigenvalues[k], 0.0)));
        }
        assert!(rec.max_abs_diff(&m) < 1e-12);
    }

    #[test]
    fn herm_eig_identity_and_diag() {
        let eig = herm_eig(&CMatrix::identity(2)).unwrap();
        assert_eq!(eig.eigenvalues, alloc::vec![1.0, 1.0]);
        let d = mat2(2.0, 0.0, 0.0, 3.0);
        let eig = herm_eig(&d).unwrap();
        assert_eq!(eig.eigenvalues, alloc::vec![2.0, 3.0]);
    }

    #[test]
    fn herm_eig_rejects_non_hermitian() {
        let m = mat2(0.0, 1.0, 0.0, 0.0);
        assert!(matches!(
            herm_eig(&m),
            Err(crate::Error::Contract(_))
        ));
    }

    #[test]
    fn herm_eig_complex_hermitian() {
        let m = CMatrix::from_flat(
            2,
            2,
            alloc::vec![
                C64::new(1.0, 0.0),
                C64::new(0.0, -0.7),
                C64::new(0.0, 0.7),
                C64::new(2.0, 0.0),
            ],
        )
        .unwrap();
        let eig = herm_eig(&m).unwrap();
        let mut rec = CMatrix::zeros(2, 2);
        for k in 0..2 {
            let v = eig.eigenvectors.column_ket(k);
            rec = rec.add(&CMatrix::outer(&v, &v).scale(C64::new(eig.eigenvalues[k], 0.0)));
        }
        assert!(rec.max_abs_diff(&m) < 1e-12);
        assert!(eig.eigenvalues[0] < eig.eigenvalues[1]);
    }

    #[test]
    fn func_on_span_sqrt_frozen() {
        // eigen-decompose: √0.68, √0.32 recombine to the frozen entries
        let m = mat2(0.5, 0.18, 0.18, 0.5);
        let s = func_on_span(&m, |x| x.sqrt(), DEFAULT_RANK_TOL).unwrap();
        let diag = (0.68f64.sqrt() + 0.32f64.sqrt()) / 2.0;
        let off = (0.68f64.sqrt() - 0.32f64.sqrt()) / 2.0;
        assert_abs_diff_eq!(s.get(0, 0).re, diag, epsilon = 1e-12);
        assert_abs_diff_eq!(s.get(0, 1).re, off, epsilon = 1e-12);
        assert_abs_diff_eq!(diag, 0.695153, epsilon = 5e-7);
        assert_abs_diff_eq!(off, 0.129468, epsilon = 5e-7);
        // √M·√M = M on span
        assert!(s.mul(&s).max_abs_diff(&m) < 1e-12);
    }

    #[test]
    fn func_on_span_inv_sqrt_identity() {
        let s = func_on_span(&CMatrix::identity(3), |x| 1.0 / x.sqrt(), 1e-10).unwrap();
        assert!(s.max_abs_diff(&CMatrix::identity(3)) < 1e-13);
    }

    #[test]
    fn func_on_span_inv_sqrt_projector_fixed() {
        let v = Ket::from_reals(&[0.6, 0.8]);
        let p = CMatrix::outer(&v, &v);
        let s = func_on_span(&p, |x| 1.0 / x.sqrt(), 1e-10).unwrap();
        assert!(s.max_abs_diff(&p) < 1e-12);
    }

    #[test]
    fn func_on_span_identity_reproduces_on_span() {
        let v = Ket::from_reals(&[0.6, 0.8]);
        let p = CMatrix::outer(&v, &v).scale(C64::new(0.37, 0.0));
        let s = func_on_span(&p, |x| x, 1e-10).unwrap();
        assert!(s.max_abs_diff(&p) < 1e-12);
    }

    #[test]
    fn func_on_span_domain_error() {
        let m = mat2(-1.0, 0.0, 0.0, 2.0);
        let r = func_on_span(&m, |x| x.sqrt(), 1e-10);
        assert!(matches!(r, Err(crate::Error::Domain(_))));
    }

    #[test]
    fn gram_schmidt_simple_completion() {
        let e0 = Ket::from_reals(&[1.0, 0.0]);
        let cand = Ket::from_reals(&[1.0 / 2.0f64.sqrt(), 1.0 / 2.0f64.sqrt()]);
        let ext = gram_schmidt_extend(&[e0], &[cand], DEFAULT_RANK_TOL).unwrap();
        assert!(ext.skipped.is_empty());
        assert_eq!(ext.basis.len(), 2);
        assert!(ext.basis[1].max_abs_diff(&Ket::from_reals(&[0.0, 1.0])) < 1e-14);
    }

    #[test]
    fn gram_schmidt_skips_dependent() {
        let e0 = Ket::from_reals(&[1.0, 0.0]);
        let e1 = Ket::from_reals(&[0.0, 1.0]);
        let cand = Ket::from_reals(&[0.3, 0.4]);
        let ext = gram_schmidt_extend(&[e0.clone(), e1.clone()], &[cand], DEFAULT_RANK_TOL)
            .unwrap();
        assert_eq!(ext.skipped, alloc::vec![0]);
        assert_eq!(ext.basis.len(), 2);
        assert!(ext.basis[0].max_abs_diff(&e0) < 1e-15);
        assert!(ext.basis[1].max_abs_diff(&e1) < 1e-15);
    }

    #[test]
    fn extension_gram_is_identity() {
        // random-ish deterministic candidates in dim 4
        let given = alloc::vec![Ket::from_reals(&[0.5, 0.5, 0.5, 0.5])];
        let candidates = alloc::vec![
            Ket::from_reals(&[1.0, 0.0, 0.0, 0.0]),
            Ket::from_reals(&[0.0, 1.0, 0.0, 0.0]),
            Ket::from_reals(&[0.0, 0.0, 1.0, 0.0]),
            Ket::from_reals(&[0.0, 0.0, 0.0, 1.0]),
        ];
        for ext in [
            gram_schmidt_extend(&given, &candidates, DEFAULT_RANK_TOL).unwrap(),
            lowdin_extend(&given, &candidates, DEFAULT_RANK_TOL).unwrap(),
        ] {
            assert_eq!(ext.basis.len(), 4);
            let g = CMatrix::from_bra_rows(&ext.basis);
            assert!(g.mul(&g.adjoint()).max_abs_diff(&CMatrix::identity(4)) < 1e-9);
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let m = CMatrix::from_reals(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0])
            .unwrap();
        let inv = m.inverse().unwrap();
        assert!(m.mul(&inv).max_abs_diff(&CMatrix::identity(3)) < 1e-12);
    }

    #[test]
    fn canonical_phase_fixes_sign() {
        let k = Ket::from_reals(&[-0.6, 0.8]).canonical_phase();
        assert!(k.amps()[0].re > 0.0);
        let k2 = Ket::new(alloc::vec![C64::new(0.0, 0.5), C64::new(0.5, 0.0)])
            .unwrap()
            .canonical_phase();
        assert!(k2.amps()[0].im.abs() < 1e-15 && k2.amps()[0].re > 0.0);
    }
}

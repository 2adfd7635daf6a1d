//! From the optimal measurement to an elementary gate netlist.
//!
//! The adaptor unitary maps the optimal collective-measurement basis onto
//! the separate per-letter measurement basis, so decoding becomes "apply
//! the circuit, then read each letter". The compiler factors the adaptor
//! into two-level plane rotations (nested elimination over basis-index
//! pairs), conjugates each plane onto a single qubit with an X/CNOT mapper,
//! and expands the remaining multi-controlled rotation recursively. Every
//! stage is checked against the reconstructed matrix, never against
//! printed angle formulas.
//!
//! Angle conventions, fixed once:
//! `R_y(θ) = [[cos θ/2, sin θ/2], [−sin θ/2, cos θ/2]]`,
//! `R_z(θ) = diag(e^{iθ/2}, e^{−iθ/2})`, and a two-level rotation with
//! plane angle `γ` equals `R_y(−2γ)` on the mapped qubit.

use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Float;

use crate::codebook::Codebook;
use crate::decoder::{
    bayes_cost_reduction, error_probability, square_root_measurement_with_tol,
    srm_optimality_check, MeasurementSet,
};
use crate::linalg::{
    check_orthonormal, gram_schmidt_extend, lowdin_extend, BasisExtension, CMatrix, Ket, C64,
};
use crate::{Error, Result};

/// Gate lowering is implemented exactly for registers up to this size; the
/// controlled-X expansion vocabulary runs out beyond it.
pub const LOWER_QUBIT_CAP: usize = 4;

/// A rotation acting on one coordinate plane of the register basis.
///
/// Indices are 1-based (`j > i ≥ 1`) to match the usual `T_{[j,i]}`
/// bookkeeping; as a matrix it is the identity outside rows/columns
/// `(i−1, j−1)` where it acts as `[[cos γ, −sin γ], [sin γ, cos γ]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelRotation {
    pub j: usize,
    pub i: usize,
    pub gamma: f64,
}

impl TwoLevelRotation {
    pub fn new(j: usize, i: usize, gamma: f64) -> Result<Self> {
        if i == 0 || j <= i {
            return Err(Error::Contract(alloc::format!(
                "two-level indices must satisfy j > i ≥ 1, got ({j}, {i})"
            )));
        }
        Ok(TwoLevelRotation { j, i, gamma })
    }

    /// Dense matrix of this rotation in `dim` dimensions.
    pub fn matrix(&self, dim: usize) -> CMatrix {
        let mut m = CMatrix::identity(dim);
        let (lo, hi) = (self.i - 1, self.j - 1);
        let (cg, sg) = (self.gamma.cos(), self.gamma.sin());
        m.set(lo, lo, C64::new(cg, 0.0));
        m.set(lo, hi, C64::new(-sg, 0.0));
        m.set(hi, lo, C64::new(sg, 0.0));
        m.set(hi, hi, C64::new(cg, 0.0));
        m
    }
}

/// Product of two-level rotations applied in list order (the first list
/// entry is the leftmost matrix factor).
pub fn rotations_to_matrix(rots: &[TwoLevelRotation], dim: usize) -> CMatrix {
    let mut m = CMatrix::identity(dim);
    for r in rots {
        m = m.mul(&r.matrix(dim));
    }
    m
}

/// An elementary gate. Qubit indices are 0-based, big-endian (qubit 0 is
/// the most significant index bit / leftmost letter).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind"))]
pub enum Gate {
    #[cfg_attr(feature = "serde", serde(rename = "RY"))]
    Ry { qubit: usize, angle: f64 },
    #[cfg_attr(feature = "serde", serde(rename = "RZ"))]
    Rz { qubit: usize, angle: f64 },
    #[cfg_attr(feature = "serde", serde(rename = "X"))]
    X { qubit: usize },
    #[cfg_attr(feature = "serde", serde(rename = "CNOT"))]
    Cnot { control: usize, target: usize },
    #[cfg_attr(feature = "serde", serde(rename = "C_SQRT_X"))]
    CSqrtX { control: usize, target: usize },
    #[cfg_attr(feature = "serde", serde(rename = "C_RY"))]
    CRy {
        control: usize,
        target: usize,
        angle: f64,
    },
}

impl Gate {
    /// Qubits the gate touches.
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::Ry { qubit, .. } | Gate::Rz { qubit, .. } | Gate::X { qubit } => {
                alloc::vec![qubit]
            }
            Gate::Cnot { control, target }
            | Gate::CSqrtX { control, target }
            | Gate::CRy {
                control, target, ..
            } => alloc::vec![control, target],
        }
    }
}

/// An ordered gate list over an `n`-qubit register; earlier gates act
/// first in time.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GateNetlist {
    pub n: usize,
    pub gates: Vec<Gate>,
}

impl GateNetlist {
    pub fn new(n: usize, gates: Vec<Gate>) -> Result<GateNetlist> {
        for g in &gates {
            let qs = g.qubits();
            for &q in &qs {
                if q >= n {
                    return Err(Error::Contract(alloc::format!(
                        "gate {g:?} uses qubit {q} on an {n}-qubit register"
                    )));
                }
            }
            if qs.len() == 2 && qs[0] == qs[1] {
                return Err(Error::Contract(alloc::format!(
                    "gate {g:?} repeats a qubit"
                )));
            }
        }
        Ok(GateNetlist { n, gates })
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }
}

#[inline]
fn qubit_mask(n: usize, qubit: usize) -> usize {
    1usize << (n - 1 - qubit)
}

fn apply_single(amps: &mut [C64], n: usize, qubit: usize, m: [[C64; 2]; 2]) {
    let mask = qubit_mask(n, qubit);
    for idx in 0..amps.len() {
        if idx & mask == 0 {
            let a0 = amps[idx];
            let a1 = amps[idx | mask];
            amps[idx] = m[0][0] * a0 + m[0][1] * a1;
            amps[idx | mask] = m[1][0] * a0 + m[1][1] * a1;
        }
    }
}

fn apply_controlled(amps: &mut [C64], n: usize, control: usize, target: usize, m: [[C64; 2]; 2]) {
    let cmask = qubit_mask(n, control);
    let tmask = qubit_mask(n, target);
    for idx in 0..amps.len() {
        if idx & cmask != 0 && idx & tmask == 0 {
            let a0 = amps[idx];
            let a1 = amps[idx | tmask];
            amps[idx] = m[0][0] * a0 + m[0][1] * a1;
            amps[idx | tmask] = m[1][0] * a0 + m[1][1] * a1;
        }
    }
}

fn ry_block(angle: f64) -> [[C64; 2]; 2] {
    let (ch, sh) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    [
        [C64::new(ch, 0.0), C64::new(sh, 0.0)],
        [C64::new(-sh, 0.0), C64::new(ch, 0.0)],
    ]
}

fn rz_block(angle: f64) -> [[C64; 2]; 2] {
    let half = angle / 2.0;
    [
        [C64::new(half.cos(), half.sin()), C64::new(0.0, 0.0)],
        [C64::new(0.0, 0.0), C64::new(half.cos(), -half.sin())],
    ]
}

fn x_block() -> [[C64; 2]; 2] {
    [
        [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
    ]
}

fn sqrt_x_block() -> [[C64; 2]; 2] {
    let p = C64::new(0.5, 0.5);
    let q = C64::new(0.5, -0.5);
    [[p, q], [q, p]]
}

/// Applies one gate to a state vector in place.
pub fn apply_gate(amps: &mut [C64], n: usize, gate: &Gate) {
    match *gate {
        Gate::Ry { qubit, angle } => apply_single(amps, n, qubit, ry_block(angle)),
        Gate::Rz { qubit, angle } => apply_single(amps, n, qubit, rz_block(angle)),
        Gate::X { qubit } => apply_single(amps, n, qubit, x_block()),
        Gate::Cnot { control, target } => apply_controlled(amps, n, control, target, x_block()),
        Gate::CSqrtX { control, target } => {
            apply_controlled(amps, n, control, target, sqrt_x_block())
        }
        Gate::CRy {
            control,
            target,
            angle,
        } => apply_controlled(amps, n, control, target, ry_block(angle)),
    }
}

/// Dense matrix of the whole netlist (temporal order: earlier gates are
/// applied first, i.e. the product is `G_k ⋯ G_2 G_1`).
pub fn netlist_to_matrix(nl: &GateNetlist) -> CMatrix {
    let dim = 1usize << nl.n;
    let mut out = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut amps = alloc::vec![C64::new(0.0, 0.0); dim];
        amps[col] = C64::new(1.0, 0.0);
        for g in &nl.gates {
            apply_gate(&mut amps, nl.n, g);
        }
        for (r, a) in amps.iter().enumerate() {
            out.set(r, col, *a);
        }
    }
    out
}

/// Largest entry modulus of `a − e^{iθ} b` minimized over the global phase
/// `θ` (aligned on the largest entry of `b`).
pub fn max_abs_diff_up_to_phase(a: &CMatrix, b: &CMatrix) -> f64 {
    let mut best = (0usize, 0usize, 0.0f64);
    for r in 0..b.rows() {
        for cidx in 0..b.cols() {
            let v = b.get(r, cidx).norm();
            if v > best.2 {
                best = (r, cidx, v);
            }
        }
    }
    let (r, cidx, _) = best;
    let num = b.get(r, cidx) * a.get(r, cidx).conj();
    let phase = if num.norm() > 0.0 {
        num / num.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    a.scale(phase).max_abs_diff(b)
}

// ---------------------------------------------------------------------------
// Decoding basis completion

/// How the measurement set is completed to a full register basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Completion {
    /// Sequential projection of the non-codeword sequences in index order.
    Sequential,
    /// Symmetric (Löwdin) orthonormalization of the projected non-codeword
    /// sequences. Preserves the symmetry of a symmetric code and is what
    /// the closed-form two-word adaptor uses.
    Symmetric,
}

/// A completed decoding basis.
#[derive(Debug, Clone)]
pub struct DecodingBasis {
    /// Full orthonormal basis; the first `M` entries are the measurement
    /// vectors, unchanged.
    pub kets: Vec<Ket>,
    /// Positions (into the complement-sequence list) skipped as linearly
    /// dependent.
    pub skipped: Vec<usize>,
}

/// Extends the measurement set to a full orthonormal basis of the register
/// using the non-codeword letter sequences in index order (sequential
/// projection, the default contract).
pub fn decoding_basis(cb: &Codebook, ms: &MeasurementSet) -> Result<DecodingBasis> {
    decoding_basis_with(cb, ms, Completion::Sequential, crate::linalg::DEFAULT_RANK_TOL)
}

/// As [`decoding_basis`] with an explicit completion method and rank
/// cutoff.
pub fn decoding_basis_with(
    cb: &Codebook,
    ms: &MeasurementSet,
    completion: Completion,
    rank_tol: f64,
) -> Result<DecodingBasis> {
    if ms.dim() != cb.dim() {
        return Err(Error::Size(String::from(
            "measurement dimension does not match codebook",
        )));
    }
    let candidates: Vec<Ket> = cb
        .complement_sequences()
        .iter()
        .map(|w| cb.sequence_state(w))
        .collect::<Result<_>>()?;
    let n_candidates = candidates.len();
    let ext = match completion {
        Completion::Sequential => gram_schmidt_extend(ms.vectors(), &candidates, rank_tol)?,
        Completion::Symmetric => lowdin_extend(ms.vectors(), &candidates, rank_tol)?,
    };
    let BasisExtension { mut basis, skipped } = ext;
    if basis.len() < cb.dim() {
        // Degenerate completions (κ → 1) can leave holes; fill them from
        // the computational basis so the adaptor stays total.
        let fill: Vec<Ket> = (0..cb.dim()).map(|k| Ket::basis(cb.dim(), k)).collect();
        basis = gram_schmidt_extend(&basis, &fill, rank_tol)?.basis;
    }
    debug_assert_eq!(basis.len(), cb.dim());
    Ok(DecodingBasis {
        kets: basis,
        skipped: skipped.into_iter().filter(|&s| s < n_candidates).collect(),
    })
}

// ---------------------------------------------------------------------------
// Adaptor construction

/// The measurement pair distinguishing individual letters, as kets in the
/// letter space. Defaults to the level basis `{|↑⟩, |↓⟩}`.
#[derive(Debug, Clone)]
pub struct LetterBasis {
    pub a: Ket,
    pub b: Ket,
}

impl Default for LetterBasis {
    fn default() -> Self {
        LetterBasis {
            a: Ket::basis(2, 0),
            b: Ket::basis(2, 1),
        }
    }
}

impl LetterBasis {
    pub fn new(a: Ket, b: Ket) -> Result<LetterBasis> {
        if a.dim() != 2 || b.dim() != 2 {
            return Err(Error::Size(String::from("letter basis kets must be dim 2")));
        }
        check_orthonormal(&[a.clone(), b.clone()], 1e-9, "letter basis")?;
        Ok(LetterBasis { a, b })
    }

    /// Product ket `|A_index⟩` for a big-endian product index.
    pub fn product_ket(&self, index: usize, n: usize) -> Result<Ket> {
        let mut out: Option<Ket> = None;
        for q in 0..n {
            let bit = (index >> (n - 1 - q)) & 1;
            let letter = if bit == 0 { &self.a } else { &self.b };
            out = Some(match out {
                None => letter.clone(),
                Some(k) => k.tensor(letter)?,
            });
        }
        Ok(out.expect("n ≥ 1"))
    }

    fn is_computational(&self) -> bool {
        let e0 = Ket::basis(2, 0);
        let e1 = Ket::basis(2, 1);
        self.a.max_abs_diff(&e0) < 1e-12 && self.b.max_abs_diff(&e1) < 1e-12
    }
}

/// Default outcome assignment: each codeword points at the product ket
/// spelled by its own letters (`+ → a`, `− → b`), which maximizes the
/// outcome overlap.
pub fn default_assignment(cb: &Codebook) -> Vec<usize> {
    cb.words().iter().map(|w| w.product_index()).collect()
}

fn full_slot_order(assignment: &[usize], dim: usize) -> Result<Vec<usize>> {
    let mut used = alloc::vec![false; dim];
    for &a in assignment {
        if a >= dim {
            return Err(Error::Contract(alloc::format!(
                "assigned product index {a} out of range"
            )));
        }
        if used[a] {
            return Err(Error::Contract(alloc::format!(
                "product index {a} assigned twice"
            )));
        }
        used[a] = true;
    }
    let mut slots = assignment.to_vec();
    for (idx, &u) in used.iter().enumerate() {
        if !u {
            slots.push(idx);
        }
    }
    Ok(slots)
}

/// Builds the adaptor unitary `Û = Σ_t |A_{slot(t)}⟩⟨basis_t|`: it maps
/// each decoding-basis vector onto its assigned product measurement ket,
/// so `Û†|A_{slot(i)}⟩ = |ω_i⟩`.
///
/// `assignment` pairs codeword `i` (basis position `i < M`) with a product
/// index; the completion vectors take the unused product indices in
/// ascending order.
pub fn build_adaptor(
    basis: &[Ket],
    letter_basis: &LetterBasis,
    assignment: &[usize],
    n: usize,
) -> Result<CMatrix> {
    let dim = 1usize << n;
    if basis.len() != dim {
        return Err(Error::Contract(alloc::format!(
            "decoding basis has {} vectors, expected {dim}",
            basis.len()
        )));
    }
    check_orthonormal(basis, 1e-9, "decoding basis")?;
    let slots = full_slot_order(assignment, dim)?;
    let mut u = CMatrix::zeros(dim, dim);
    for (t, ket) in basis.iter().enumerate() {
        let a = letter_basis.product_ket(slots[t], n)?;
        u = u.add(&CMatrix::outer(&a, ket));
    }
    if !u.is_unitary(1e-9) {
        return Err(Error::Contract(alloc::format!(
            "adaptor failed unitarity ({:.3e})",
            u.unitarity_defect()
        )));
    }
    Ok(u)
}

/// The adaptor by the expansion route: expand every letter sequence over
/// the decoding basis (`B`) and over the product basis (`C`), then
/// `Û = Σ_{s,t} conj(B⁻¹C)_{s t} |A_{slot(s)}⟩⟨A_{slot(t)}|`.
///
/// Numerically equivalent to [`build_adaptor`]; kept as an independent
/// construction for cross-checking.
pub fn adaptor_from_expansion(
    cb: &Codebook,
    basis: &[Ket],
    letter_basis: &LetterBasis,
    assignment: &[usize],
) -> Result<CMatrix> {
    let dim = cb.dim();
    if basis.len() != dim {
        return Err(Error::Contract(String::from("expansion needs a full basis")));
    }
    let slots = full_slot_order(assignment, dim)?;
    // Sequences in formalism order: codewords first, complement after.
    let mut seqs: Vec<Ket> = (0..cb.word_count())
        .map(|i| cb.build_codeword(i))
        .collect::<Result<_>>()?;
    for w in cb.complement_sequences() {
        seqs.push(cb.sequence_state(&w)?);
    }
    let a_kets: Vec<Ket> = slots
        .iter()
        .map(|&s| letter_basis.product_ket(s, cb.n()))
        .collect::<Result<_>>()?;
    let mut b = CMatrix::zeros(dim, dim);
    let mut cmat = CMatrix::zeros(dim, dim);
    for (i, s) in seqs.iter().enumerate() {
        for j in 0..dim {
            b.set(i, j, basis[j].inner(s));
            cmat.set(i, j, a_kets[j].inner(s));
        }
    }
    let binv_c = b.inverse()?.mul(&cmat);
    let mut u = CMatrix::zeros(dim, dim);
    for s in 0..dim {
        for t in 0..dim {
            let coeff = binv_c.get(s, t).conj();
            if coeff.norm_sqr() == 0.0 {
                continue;
            }
            u = u.add(&CMatrix::outer(&a_kets[s], &a_kets[t]).scale(coeff));
        }
    }
    Ok(u)
}

// ---------------------------------------------------------------------------
// Two-level decomposition

/// Factors a real orthogonal matrix with determinant +1 into two-level
/// rotations `T_{[2,1]} T_{[3,1]} T_{[3,2]} ⋯ T_{[N,N−1]}` (nested
/// elimination of the last row/column, recursing on the leading block).
/// Angles below 1e-12 are suppressed.
///
/// Errors on complex, non-orthogonal, or reflecting (det −1) input.
pub fn reck_decompose(u: &CMatrix) -> Result<Vec<TwoLevelRotation>> {
    if u.rows() != u.cols() {
        return Err(Error::Contract(String::from("decomposition needs square input")));
    }
    if u.max_imag() > 1e-9 {
        return Err(Error::Contract(alloc::format!(
            "input has imaginary mass {:.3e}; factor phases out first",
            u.max_imag()
        )));
    }
    if !u.is_unitary(1e-9) {
        return Err(Error::Contract(alloc::format!(
            "input is not orthogonal (defect {:.3e})",
            u.unitarity_defect()
        )));
    }
    let nd = u.rows();
    let mut r: Vec<f64> = (0..nd * nd).map(|k| u.get(k / nd, k % nd).re).collect();
    let at = |r: &Vec<f64>, row: usize, col: usize| r[row * nd + col];
    let mut collected: Vec<TwoLevelRotation> = Vec::new();
    for jrow in (1..nd).rev() {
        for icol in (0..jrow).rev() {
            let a = at(&r, jrow, icol);
            let b = at(&r, jrow, jrow);
            if a.abs() <= 1e-12 && b > 0.0 {
                continue;
            }
            let gamma = a.atan2(b);
            // right-multiply by the inverse rotation in plane (icol, jrow):
            // col_i' = cos·col_i − sin·col_j ; col_j' = sin·col_i + cos·col_j
            let (cg, sg) = (gamma.cos(), gamma.sin());
            for row in 0..nd {
                let vi = r[row * nd + icol];
                let vj = r[row * nd + jrow];
                r[row * nd + icol] = cg * vi - sg * vj;
                r[row * nd + jrow] = sg * vi + cg * vj;
            }
            if gamma.abs() > 1e-12 {
                collected.push(TwoLevelRotation::new(jrow + 1, icol + 1, gamma)?);
            }
        }
    }
    // The residual must be the identity; a −1 in the top corner is a
    // reflection the caller has to absorb upstream.
    let mut residual = 0.0f64;
    for row in 0..nd {
        for col in 0..nd {
            let expect = if row == col { 1.0 } else { 0.0 };
            residual = residual.max((at(&r, row, col) - expect).abs());
        }
    }
    if residual > 1e-8 {
        if (at(&r, 0, 0) + 1.0).abs() < 1e-8 {
            return Err(Error::Contract(String::from(
                "reflection (determinant −1) cannot be written as plane rotations",
            )));
        }
        return Err(Error::Contract(alloc::format!(
            "elimination residual {residual:.3e}"
        )));
    }
    collected.reverse();
    Ok(collected)
}

/// Sign of the determinant of a real orthogonal matrix (±1), by Gaussian
/// elimination with partial pivoting.
pub fn orthogonal_det_sign(u: &CMatrix) -> f64 {
    let nd = u.rows();
    let mut r: Vec<f64> = (0..nd * nd).map(|k| u.get(k / nd, k % nd).re).collect();
    let mut sign = 1.0f64;
    for col in 0..nd {
        let mut piv = col;
        let mut best = r[col * nd + col].abs();
        for row in (col + 1)..nd {
            if r[row * nd + col].abs() > best {
                best = r[row * nd + col].abs();
                piv = row;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if piv != col {
            sign = -sign;
            for k in 0..nd {
                r.swap(col * nd + k, piv * nd + k);
            }
        }
        if r[col * nd + col] < 0.0 {
            sign = -sign;
        }
        for row in (col + 1)..nd {
            let f = r[row * nd + col] / r[col * nd + col];
            for k in col..nd {
                r[row * nd + k] -= f * r[col * nd + k];
            }
        }
    }
    sign
}

// ---------------------------------------------------------------------------
// Gate lowering

/// Target gate vocabulary of the lowering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateSet {
    /// `{RY, RZ, X, CNOT, C_RY}` — controlled rotations kept whole.
    ControlledRy,
    /// `{RY, RZ, X, CNOT}` — controlled rotations split into the
    /// half-angle/CNOT pattern.
    CnotRy,
    /// `{RY, RZ, X, C_SQRT_X}` — additionally every CNOT becomes two
    /// controlled-√NOT gates.
    SqrtxBasis,
}

fn mcx(controls: &[usize], target: usize, out: &mut Vec<Gate>) -> Result<()> {
    match controls.len() {
        0 => out.push(Gate::X { qubit: target }),
        1 => out.push(Gate::Cnot {
            control: controls[0],
            target,
        }),
        2 => {
            let (c1, c2) = (controls[0], controls[1]);
            out.push(Gate::CSqrtX {
                control: c2,
                target,
            });
            out.push(Gate::Cnot {
                control: c1,
                target: c2,
            });
            // √X† = √X³ in this vocabulary
            for _ in 0..3 {
                out.push(Gate::CSqrtX {
                    control: c2,
                    target,
                });
            }
            out.push(Gate::Cnot {
                control: c1,
                target: c2,
            });
            out.push(Gate::CSqrtX {
                control: c1,
                target,
            });
        }
        k => {
            return Err(Error::Size(alloc::format!(
                "controlled-X with {k} controls is outside the gate vocabulary"
            )))
        }
    }
    Ok(())
}

fn mcry(controls: &[usize], target: usize, angle: f64, out: &mut Vec<Gate>) -> Result<()> {
    match controls.len() {
        0 => out.push(Gate::Ry {
            qubit: target,
            angle,
        }),
        1 => out.push(Gate::CRy {
            control: controls[0],
            target,
            angle,
        }),
        _ => {
            let (rest, last) = controls.split_at(controls.len() - 1);
            let last = last[0];
            out.push(Gate::CRy {
                control: last,
                target,
                angle: angle / 2.0,
            });
            mcx(rest, last, out)?;
            out.push(Gate::CRy {
                control: last,
                target,
                angle: -angle / 2.0,
            });
            mcx(rest, last, out)?;
            mcry(rest, target, angle / 2.0, out)?;
        }
    }
    Ok(())
}

fn mcphase(controls: &[usize], target: usize, phi: f64, out: &mut Vec<Gate>) -> Result<()> {
    match controls.len() {
        0 => out.push(Gate::Rz {
            qubit: target,
            angle: -phi,
        }),
        1 => {
            let cq = controls[0];
            out.push(Gate::Cnot {
                control: cq,
                target,
            });
            out.push(Gate::Rz {
                qubit: target,
                angle: phi / 2.0,
            });
            out.push(Gate::Cnot {
                control: cq,
                target,
            });
            out.push(Gate::Rz {
                qubit: target,
                angle: -phi / 2.0,
            });
            out.push(Gate::Rz {
                qubit: cq,
                angle: -phi / 2.0,
            });
        }
        _ => {
            let (rest, last) = controls.split_at(controls.len() - 1);
            let last = last[0];
            mcphase(&[last], target, phi / 2.0, out)?;
            mcx(rest, last, out)?;
            mcphase(&[last], target, -phi / 2.0, out)?;
            mcx(rest, last, out)?;
            mcphase(rest, target, phi / 2.0, out)?;
        }
    }
    Ok(())
}

/// Lowers one two-level rotation to gates.
///
/// A CNOT/X mapper (an invertible affine map on bit patterns) conjugates
/// the rotation plane onto a single qubit `t` with every other qubit in
/// state 1; the rotation there is `R_y(−2γ)` controlled on the remaining
/// qubits, expanded recursively. The mapper flips less significant qubits
/// first and breaks ties toward the lowest qubit index.
pub fn lower_two_level(rot: &TwoLevelRotation, n: usize) -> Result<GateNetlist> {
    if n == 0 || n > LOWER_QUBIT_CAP {
        return Err(Error::Size(alloc::format!(
            "lowering supports 1..={LOWER_QUBIT_CAP} qubits, got {n}"
        )));
    }
    let dim = 1usize << n;
    if rot.j > dim {
        return Err(Error::Contract(alloc::format!(
            "rotation index {} exceeds register dimension {dim}",
            rot.j
        )));
    }
    let theta = -2.0 * rot.gamma;
    if n == 1 {
        return GateNetlist::new(1, alloc::vec![Gate::Ry { qubit: 0, angle: theta }]);
    }
    let mut a = rot.i - 1;
    let mut b = rot.j - 1;
    let d = a ^ b;
    let t_bitpos = d.trailing_zeros() as usize;
    let t_q = n - 1 - t_bitpos;
    let mut mapper: Vec<Gate> = Vec::new();
    for q in 0..n {
        if q == t_q {
            continue;
        }
        let bitpos = n - 1 - q;
        if (d >> bitpos) & 1 == 1 {
            mapper.push(Gate::Cnot {
                control: t_q,
                target: q,
            });
            if (a >> t_bitpos) & 1 == 1 {
                a ^= 1 << bitpos;
            }
            if (b >> t_bitpos) & 1 == 1 {
                b ^= 1 << bitpos;
            }
        }
    }
    debug_assert_eq!(a ^ b, 1 << t_bitpos);
    if (a >> t_bitpos) & 1 == 1 {
        mapper.push(Gate::X { qubit: t_q });
        a ^= 1 << t_bitpos;
        b ^= 1 << t_bitpos;
    }
    for q in 0..n {
        if q == t_q {
            continue;
        }
        let bitpos = n - 1 - q;
        if (a >> bitpos) & 1 == 0 {
            mapper.push(Gate::X { qubit: q });
            a ^= 1 << bitpos;
            b ^= 1 << bitpos;
        }
    }
    debug_assert_eq!(b, dim - 1);
    debug_assert_eq!(a, (dim - 1) ^ (1 << t_bitpos));
    let controls: Vec<usize> = (0..n).filter(|&q| q != t_q).collect();
    let mut gates = mapper.clone();
    mcry(&controls, t_q, theta, &mut gates)?;
    gates.extend(mapper.into_iter().rev());
    GateNetlist::new(n, gates)
}

/// Rewrites a netlist into the requested vocabulary. Exact gate identities
/// only; the matrix is unchanged.
pub fn expand_gate_set(nl: &GateNetlist, gate_set: GateSet) -> GateNetlist {
    if gate_set == GateSet::ControlledRy {
        return nl.clone();
    }
    let mut gates: Vec<Gate> = Vec::with_capacity(nl.gates.len() * 4);
    for g in &nl.gates {
        match *g {
            Gate::CRy {
                control,
                target,
                angle,
            } => {
                gates.push(Gate::Ry {
                    qubit: target,
                    angle: angle / 2.0,
                });
                gates.push(Gate::Cnot { control, target });
                gates.push(Gate::Ry {
                    qubit: target,
                    angle: -angle / 2.0,
                });
                gates.push(Gate::Cnot { control, target });
            }
            other => gates.push(other),
        }
    }
    if gate_set == GateSet::SqrtxBasis {
        let mut expanded = Vec::with_capacity(gates.len() * 2);
        for g in gates {
            match g {
                Gate::Cnot { control, target } => {
                    expanded.push(Gate::CSqrtX { control, target });
                    expanded.push(Gate::CSqrtX { control, target });
                }
                other => expanded.push(other),
            }
        }
        gates = expanded;
    }
    GateNetlist {
        n: nl.n,
        gates,
    }
}

/// A synthesized unitary: the netlist reconstructs the input up to one
/// global phase.
#[derive(Debug, Clone)]
pub struct Synthesis {
    pub netlist: GateNetlist,
    /// Plane rotations of the orthogonal factor, in application order.
    pub rotations: Vec<TwoLevelRotation>,
    /// Per-row phases factored out before the rotation elimination (all
    /// zero for real input).
    pub row_phases: Vec<f64>,
    /// `‖netlist − input‖_max` up to global phase.
    pub residual: f64,
}

/// Synthesizes a gate netlist for a unitary of the form
/// `U = diag(e^{iφ_r}) · O` with `O` real orthogonal, det `O` = +1.
/// The diagonal phase layer is emitted after the rotations as
/// pattern-controlled RZ blocks. Determinant −1 or essentially complex
/// input is rejected; the compile pipeline absorbs reflections into the
/// completion basis before calling this.
pub fn synthesize_unitary(u: &CMatrix, gate_set: GateSet) -> Result<Synthesis> {
    let dim = u.rows();
    if dim == 0 || !dim.is_power_of_two() || u.cols() != dim {
        return Err(Error::Size(String::from(
            "synthesis needs a square power-of-two dimension",
        )));
    }
    let n = dim.trailing_zeros() as usize;
    if !u.is_unitary(1e-9) {
        return Err(Error::Contract(alloc::format!(
            "input is not unitary (defect {:.3e})",
            u.unitarity_defect()
        )));
    }
    // Row phases from the first significant entry of each row; real rows
    // (including negative-leading ones) carry no phase.
    let mut row_phases = alloc::vec![0.0f64; dim];
    let mut ortho = u.clone();
    for r in 0..dim {
        let mut phi = 0.0f64;
        for cidx in 0..dim {
            let v = u.get(r, cidx);
            if v.norm() > 1e-8 {
                phi = if v.im.abs() < 1e-12 { 0.0 } else { v.arg() };
                break;
            }
        }
        row_phases[r] = phi;
        if phi != 0.0 {
            let ph = C64::new(phi.cos(), -phi.sin());
            for cidx in 0..dim {
                ortho.set(r, cidx, ortho.get(r, cidx) * ph);
            }
        }
    }
    if ortho.max_imag() > 1e-9 {
        return Err(Error::Contract(String::from(
            "unitary is not a phased real orthogonal matrix; unsupported",
        )));
    }
    let rotations = reck_decompose(&ortho)?;
    let mut gates: Vec<Gate> = Vec::new();
    for rot in rotations.iter().rev() {
        gates.extend(lower_two_level(rot, n)?.gates);
    }
    if row_phases.iter().any(|p| p.abs() > 1e-12) {
        for (k, &phi) in row_phases.iter().enumerate() {
            if phi.abs() <= 1e-12 {
                continue;
            }
            // Conjugate the all-ones coordinate onto k, phase it there.
            let mut conj_x: Vec<Gate> = Vec::new();
            for q in 0..n {
                if (k >> (n - 1 - q)) & 1 == 0 {
                    conj_x.push(Gate::X { qubit: q });
                }
            }
            gates.extend(conj_x.iter().copied());
            let controls: Vec<usize> = (0..n.saturating_sub(1)).collect();
            mcphase(&controls, n - 1, phi, &mut gates)?;
            gates.extend(conj_x.into_iter().rev());
        }
    }
    let netlist = expand_gate_set(&GateNetlist::new(n, gates)?, gate_set);
    let residual = max_abs_diff_up_to_phase(&netlist_to_matrix(&netlist), u);
    Ok(Synthesis {
        netlist,
        rotations,
        row_phases,
        residual,
    })
}

// ---------------------------------------------------------------------------
// End-to-end compilation

/// Options of the compile pipeline.
#[derive(Debug, Clone)]
pub struct CompileOptions {
    pub gate_set: GateSet,
    pub completion: Completion,
    pub rank_tol: f64,
    pub cost_tol: f64,
    pub max_sweeps: usize,
    /// Letter measurement basis; defaults to `{|↑⟩, |↓⟩}`.
    pub letter_basis: LetterBasis,
    /// Codeword → product-index assignment; defaults to each word's own
    /// letter pattern.
    pub assignment: Option<Vec<usize>>,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            gate_set: GateSet::ControlledRy,
            completion: Completion::Symmetric,
            rank_tol: crate::linalg::DEFAULT_RANK_TOL,
            cost_tol: crate::decoder::DEFAULT_COST_TOL,
            max_sweeps: crate::decoder::DEFAULT_MAX_SWEEPS,
            letter_basis: LetterBasis::default(),
            assignment: None,
        }
    }
}

/// A compiled decoder.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub netlist: GateNetlist,
    /// The optimal measurement the circuit realizes.
    pub measurement: MeasurementSet,
    /// Error probability the circuit-plus-letter-measurement attains.
    pub expected_error: f64,
    pub adaptor: CMatrix,
    /// Codeword → product-index outcome table.
    pub assignment: Vec<usize>,
    pub rotations: Vec<TwoLevelRotation>,
    /// `‖netlist matrix − adaptor‖_max` up to global phase.
    pub reconstruction_residual: f64,
    /// Complement-sequence positions skipped during completion.
    pub skipped_candidates: Vec<usize>,
    /// Cost-reduction sweeps spent.
    pub sweeps: usize,
    /// Whether the square-root measurement was already optimal.
    pub srm_optimal: bool,
    /// Whether a completion-vector sign flip absorbed a reflection.
    pub reflection_fixed: bool,
}

/// Full pipeline: square-root measurement → cost reduction → basis
/// completion → adaptor → two-level rotations → gate netlist, with the
/// reconstruction residual measured on the way out.
pub fn compile(cb: &Codebook, options: &CompileOptions) -> Result<Compiled> {
    let srm = square_root_measurement_with_tol(cb, options.rank_tol)?;
    let srm_optimal = srm_optimality_check(cb)?;
    let reduced = bayes_cost_reduction(cb, &srm, options.cost_tol, options.max_sweeps)?;
    let basis = decoding_basis_with(cb, &reduced.measurement, options.completion, options.rank_tol)?;
    let assignment = options
        .assignment
        .clone()
        .unwrap_or_else(|| default_assignment(cb));
    if assignment.len() != cb.word_count() {
        return Err(Error::Contract(String::from(
            "assignment must pair every codeword",
        )));
    }
    let mut kets = basis.kets;
    let mut adaptor = build_adaptor(&kets, &options.letter_basis, &assignment, cb.n())?;
    let mut reflection_fixed = false;
    if options.letter_basis.is_computational()
        && adaptor.max_imag() < 1e-12
        && orthogonal_det_sign(&adaptor) < 0.0
    {
        // Absorb the reflection into the last completion vector; outcome
        // statistics are insensitive to measurement-ket signs.
        let last = kets.len() - 1;
        kets[last] = kets[last].scale(C64::new(-1.0, 0.0));
        adaptor = build_adaptor(&kets, &options.letter_basis, &assignment, cb.n())?;
        reflection_fixed = true;
    }
    let synthesis = synthesize_unitary(&adaptor, options.gate_set)?;
    let expected_error = error_probability(cb, &reduced.measurement)?;
    Ok(Compiled {
        netlist: synthesis.netlist,
        measurement: reduced.measurement,
        expected_error,
        adaptor,
        assignment,
        rotations: synthesis.rotations,
        reconstruction_residual: synthesis.residual,
        skipped_candidates: basis.skipped,
        sweeps: reduced.sweeps,
        srm_optimal,
        reflection_fixed,
    })
}

// ---------------------------------------------------------------------------
// Closed-form reference data for the two-word code

/// One row of the comparison between decomposition angles and the printed
/// closed-form angle system of the two-word adaptor.
#[derive(Debug, Clone)]
pub struct AngleComparison {
    pub j: usize,
    pub i: usize,
    /// Plane angle from the elimination (this crate's convention).
    pub plane_angle: f64,
    /// `2×` plane angle: the controlled-`R_y` gate angle of the lowered
    /// block, which is the convention the closed forms are stated in.
    pub gate_angle: f64,
    /// Closed-form value in the gate-angle convention, when one exists.
    pub reference_angle: Option<f64>,
    pub note: String,
}

/// Closed-form adaptor for the two-word code `{++, −−}` at equal priors:
/// entries `(1±d₀)/(2d₀)` and `±κ/(2d₀)` with `d₀ = √(1+κ²)`.
pub fn two_word_adaptor_reference(kappa: f64) -> CMatrix {
    let d0 = (1.0 + kappa * kappa).sqrt();
    let s = 1.0 / (2.0 * d0);
    CMatrix::from_reals(
        4,
        4,
        &[
            (1.0 + d0) * s,
            -kappa * s,
            -kappa * s,
            (1.0 - d0) * s,
            kappa * s,
            (1.0 + d0) * s,
            (1.0 - d0) * s,
            kappa * s,
            kappa * s,
            (1.0 - d0) * s,
            (1.0 + d0) * s,
            kappa * s,
            (1.0 - d0) * s,
            -kappa * s,
            -kappa * s,
            (1.0 + d0) * s,
        ],
    )
    .expect("static shape")
}

/// Compares the decomposition angles of the compiled two-word adaptor with
/// the printed closed-form angle system. The `(4,1)` closed form as
/// printed has `|cos| > 1` and is reported as infeasible together with the
/// value the elimination actually produces.
pub fn two_word_angle_table(kappa: f64) -> Result<Vec<AngleComparison>> {
    let cb = crate::codebook::Codebook::new(
        kappa,
        alloc::vec![
            crate::codebook::Word::parse("++")?,
            crate::codebook::Word::parse("--")?,
        ],
        alloc::vec![0.5, 0.5],
    )?;
    let compiled = compile(&cb, &CompileOptions::default())?;
    let d0 = (1.0 + kappa * kappa).sqrt();
    let d1 = ((d0 + 1.0) * (d0 + 1.0) + kappa * kappa).sqrt();
    let d2 = (d1 * d1 + kappa * kappa).sqrt();
    let g43 = 2.0 * (-kappa).atan2(d0 + 1.0);
    let g42 = 2.0 * (-kappa).atan2(d1);
    let g41 = 2.0 * (-(d0 - 1.0)).atan2(d2);
    let reference = |j: usize, i: usize| -> (Option<f64>, String) {
        match (j, i) {
            (4, 3) => (Some(g43), String::from("cos(γ/2)=(d0+1)/d1, sin(γ/2)=−κ/d1")),
            (4, 2) => (Some(g42), String::from("cos(γ/2)=d1/d2, sin(γ/2)=−κ/d2")),
            (4, 1) => (
                Some(g41),
                String::from(
                    "printed cos(γ/2)=d2/d1 exceeds 1; elimination gives cos(γ/2)=d2/(2d0), \
                     sin(γ/2)=−(d0−1)/(2d0), matching the printed sine",
                ),
            ),
            (3, 2) => (Some(g41), String::from("relation γ32 = γ41")),
            (3, 1) => (Some(-g42), String::from("relation γ31 = −γ42")),
            (2, 1) => (Some(-g43), String::from("relation γ21 = −γ43")),
            _ => (None, String::from("no closed form")),
        }
    };
    let mut rows = Vec::new();
    for rot in &compiled.rotations {
        let (reference_angle, note) = reference(rot.j, rot.i);
        rows.push(AngleComparison {
            j: rot.j,
            i: rot.i,
            plane_angle: rot.gamma,
            gate_angle: 2.0 * rot.gamma,
            reference_angle,
            note,
        });
    }
    Ok(rows)
}

//! Optimal collective measurements and the information they extract.
//!
//! The square-root measurement is optimal whenever the diagonal of the
//! square-rooted Gram matrix is flat; otherwise the pairwise
//! Bayes-cost-reduction sweep walks it to the optimum. Reports carry the
//! induced classical channel and its mutual information, and the
//! single-letter capacity gives the baseline that collective decoding is
//! measured against.

use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Float;

use crate::codebook::{make_letter_pair, Codebook, Word};
use crate::linalg::{check_orthonormal, func_on_span, herm_eig, CMatrix, Ket, C64};
use crate::{Error, Result};

/// Default relative rank cutoff (matches `linalg`).
pub use crate::linalg::DEFAULT_RANK_TOL;

/// Default sweep-improvement tolerance of the cost-reduction iteration.
pub const DEFAULT_COST_TOL: f64 = 1e-10;

/// Default sweep cap of the cost-reduction iteration.
pub const DEFAULT_MAX_SWEEPS: usize = 10_000;

/// An orthonormal set of measurement vectors, one per codeword.
#[derive(Debug, Clone)]
pub struct MeasurementSet {
    vectors: Vec<Ket>,
    labels: Vec<usize>,
}

impl MeasurementSet {
    /// Validates pairwise orthonormality within 1e-9.
    pub fn new(vectors: Vec<Ket>, labels: Vec<usize>) -> Result<MeasurementSet> {
        if vectors.len() != labels.len() {
            return Err(Error::Contract(String::from(
                "labels must match measurement vectors",
            )));
        }
        check_orthonormal(&vectors, 1e-9, "measurement set")?;
        Ok(MeasurementSet { vectors, labels })
    }

    pub fn vectors(&self) -> &[Ket] {
        &self.vectors
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, Ket::dim)
    }
}

/// Decoding quality of a measurement on a codebook.
#[derive(Debug, Clone)]
pub struct DecodeReport {
    /// Average error probability `1 − Σ ζ_i |⟨S_i|ω_i⟩|²`.
    pub error_prob: f64,
    /// Transition probabilities `P(j|i)`, one row per codeword. When the
    /// measurement does not resolve the identity on the codeword span, a
    /// final "inconclusive" column holds the residual mass.
    pub channel: Vec<Vec<f64>>,
    /// Whether the inconclusive column was appended.
    pub inconclusive_column: bool,
    /// Mutual information of the induced classical channel, in bits.
    pub mutual_info_bits: f64,
    /// Whether one more cost-reduction sweep improves the error
    /// probability by less than 1e-9.
    pub optimal_flag: bool,
    /// Sweeps spent by the optimizer that produced the measurement
    /// (zero for a measurement analyzed as-is).
    pub iterations: usize,
}

fn weighted_codewords(cb: &Codebook) -> Result<Vec<Ket>> {
    (0..cb.word_count())
        .map(|i| {
            let s = cb.build_codeword(i)?;
            Ok(s.scale(C64::new(cb.priors()[i].sqrt(), 0.0)))
        })
        .collect()
}

fn degenerate_words(cb: &Codebook, gram: &CMatrix, rank_tol: f64) -> Option<Vec<String>> {
    let eig = herm_eig(gram).ok()?;
    let lam_max = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if eig.eigenvalues[0] > rank_tol * lam_max {
        return None;
    }
    let kernel = eig.eigenvectors.column_ket(0);
    let mut words = Vec::new();
    for (i, a) in kernel.amps().iter().enumerate() {
        if a.norm() > 1e-6 {
            words.push(cb.words()[i].as_string());
        }
    }
    if words.is_empty() {
        words.push(String::from("(unresolved)"));
    }
    Some(words)
}

/// Square-root measurement `|μ_i⟩ = ρ^{−1/2} |S̃_i⟩`, `ρ = Σ |S̃_i⟩⟨S̃_i|`.
///
/// The natural sign convention of the construction is kept (no per-vector
/// phase normalization), so `⟨μ_i|S_i⟩ > 0`.
pub fn square_root_measurement(cb: &Codebook) -> Result<MeasurementSet> {
    square_root_measurement_with_tol(cb, DEFAULT_RANK_TOL)
}

/// As [`square_root_measurement`] with an explicit rank cutoff.
pub fn square_root_measurement_with_tol(
    cb: &Codebook,
    rank_tol: f64,
) -> Result<MeasurementSet> {
    let gram = cb.overlap_matrix();
    if let Some(words) = degenerate_words(cb, &gram, rank_tol) {
        return Err(Error::Degenerate(words));
    }
    let weighted = weighted_codewords(cb)?;
    let dim = cb.dim();
    let mut rho = CMatrix::zeros(dim, dim);
    for s in &weighted {
        rho = rho.add(&CMatrix::outer(s, s));
    }
    let inv_sqrt = func_on_span(&rho, |x| 1.0 / x.sqrt(), rank_tol)?;
    let vectors: Vec<Ket> = weighted.iter().map(|s| inv_sqrt.mul_ket(s)).collect();
    MeasurementSet::new(vectors, (0..cb.word_count()).collect())
}

/// True iff the diagonal of `Γ^{1/2}` is flat within 1e-9, the condition
/// under which the square-root measurement is already optimal.
pub fn srm_optimality_check(cb: &Codebook) -> Result<bool> {
    let gram = cb.overlap_matrix();
    let sqrt = func_on_span(&gram, |x| x.sqrt(), DEFAULT_RANK_TOL)?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..sqrt.rows() {
        let d = sqrt.get(i, i).re;
        lo = lo.min(d);
        hi = hi.max(d);
    }
    Ok(hi - lo < 1e-9)
}

/// Minimum average error for two pure states with priors `z1 + z2 = 1`:
/// `½(1 − √(1 − 4 z1 z2 |⟨s1|s2⟩|²))`, plus the optimal orthonormal
/// measurement pair in their span.
pub fn helstrom_binary(s1: &Ket, s2: &Ket, z1: f64, z2: f64) -> Result<(f64, [Ket; 2])> {
    if (z1 + z2 - 1.0).abs() > 1e-12 || z1 < 0.0 || z2 < 0.0 {
        return Err(Error::Domain(String::from("priors must be a distribution")));
    }
    if !s1.is_unit(1e-9) || !s2.is_unit(1e-9) {
        return Err(Error::Contract(String::from("states must be unit kets")));
    }
    let ov = s1.inner(s2);
    let pe = 0.5 * (1.0 - (1.0 - 4.0 * z1 * z2 * ov.norm_sqr()).max(0.0).sqrt());
    // Orthonormal frame of the span; a degenerate (identical-state) pair
    // falls back to completing s1 with the first independent basis ket.
    let mut frame = alloc::vec![s1.normalized()];
    let mut r = s2.clone();
    for _ in 0..2 {
        let ov = frame[0].inner(&r);
        r = r.sub(&frame[0].scale(ov));
    }
    if r.norm_sqr() > 1e-20 {
        frame.push(r.normalized());
    } else {
        for k in 0..s1.dim() {
            let cand = Ket::basis(s1.dim(), k);
            let mut r = cand;
            for b in &frame {
                let ov = b.inner(&r);
                r = r.sub(&b.scale(ov));
            }
            if r.norm_sqr() > 0.5 {
                frame.push(r.normalized());
                break;
            }
        }
    }
    let (x, y) = optimal_pair_in_frame(&frame, s1, s2, z1, z2)?;
    Ok((pe, [x, y]))
}

/// Solves the two-dimensional minimum-error problem in the given
/// orthonormal frame: maximizes `z1|⟨x|s1⟩|² + z2|⟨y|s2⟩|²` over
/// orthonormal pairs `(x, y)` in the frame's span.
fn optimal_pair_in_frame(
    frame: &[Ket],
    s1: &Ket,
    s2: &Ket,
    z1: f64,
    z2: f64,
) -> Result<(Ket, Ket)> {
    let a = [frame[0].inner(s1), frame[1].inner(s1)];
    let b = [frame[0].inner(s2), frame[1].inner(s2)];
    let mut w = CMatrix::zeros(2, 2);
    for r in 0..2 {
        for cidx in 0..2 {
            let v = C64::new(z1, 0.0) * a[r] * a[cidx].conj()
                - C64::new(z2, 0.0) * b[r] * b[cidx].conj();
            w.set(r, cidx, v);
        }
    }
    let eig = herm_eig(&w)?;
    let x2 = eig.eigenvectors.column_ket(1);
    let y2 = eig.eigenvectors.column_ket(0);
    let build = |coef: &Ket| {
        frame[0]
            .scale(coef.amps()[0])
            .add(&frame[1].scale(coef.amps()[1]))
            .canonical_phase()
    };
    Ok((build(&x2), build(&y2)))
}

/// Outcome of the Bayes-cost-reduction iteration.
#[derive(Debug, Clone)]
pub struct CostReduction {
    pub measurement: MeasurementSet,
    /// Completed sweeps over all pairs.
    pub sweeps: usize,
    /// Final average error probability.
    pub error_prob: f64,
}

/// Pairwise cost-reduction sweep, starting from an orthonormal measurement
/// (typically the square-root measurement).
///
/// Pairs `(i, j)`, `i < j`, are visited in lexicographic order; each step
/// re-solves the binary decision problem for `(|S_i⟩, |S_j⟩)` restricted to
/// `span{|μ_i⟩, |μ_j⟩}` and keeps the revised pair only if it strictly
/// improves the pair success probability, so the average error is
/// non-increasing step by step. Stops when a full sweep improves the error
/// probability by less than `tol`.
pub fn bayes_cost_reduction(
    cb: &Codebook,
    start: &MeasurementSet,
    tol: f64,
    max_sweeps: usize,
) -> Result<CostReduction> {
    if start.len() != cb.word_count() {
        return Err(Error::Contract(String::from(
            "measurement must have one vector per codeword",
        )));
    }
    check_orthonormal(start.vectors(), 1e-9, "cost-reduction start")?;
    let states: Vec<Ket> = (0..cb.word_count())
        .map(|i| cb.build_codeword(i))
        .collect::<Result<_>>()?;
    let priors = cb.priors();
    let mut vectors: Vec<Ket> = start.vectors().to_vec();
    let m = vectors.len();
    let mut sweeps = 0usize;
    let mut pe = error_from_vectors(cb, &vectors)?;
    while sweeps < max_sweeps {
        let pe_before = pe;
        for i in 0..m {
            for j in (i + 1)..m {
                let frame = [vectors[i].clone(), vectors[j].clone()];
                let old = priors[i] * frame[0].inner(&states[i]).norm_sqr()
                    + priors[j] * frame[1].inner(&states[j]).norm_sqr();
                let (x, y) =
                    optimal_pair_in_frame(&frame, &states[i], &states[j], priors[i], priors[j])?;
                let new = priors[i] * x.inner(&states[i]).norm_sqr()
                    + priors[j] * y.inner(&states[j]).norm_sqr();
                if new > old + 1e-15 {
                    vectors[i] = x;
                    vectors[j] = y;
                }
            }
        }
        sweeps += 1;
        pe = error_from_vectors(cb, &vectors)?;
        debug_assert!(pe <= pe_before + 1e-12);
        if pe_before - pe < tol {
            break;
        }
    }
    let labels = start.labels().to_vec();
    Ok(CostReduction {
        measurement: MeasurementSet::new(vectors, labels)?,
        sweeps,
        error_prob: pe,
    })
}

fn error_from_vectors(cb: &Codebook, vectors: &[Ket]) -> Result<f64> {
    let mut correct = 0.0;
    for i in 0..cb.word_count() {
        let s = cb.build_codeword(i)?;
        correct += cb.priors()[i] * vectors[i].inner(&s).norm_sqr();
    }
    Ok(1.0 - correct)
}

/// Average error probability `1 − Σ ζ_i |⟨S_i|ω_i⟩|²` of a measurement.
pub fn error_probability(cb: &Codebook, ms: &MeasurementSet) -> Result<f64> {
    if ms.dim() != cb.dim() {
        return Err(Error::Size(String::from(
            "measurement dimension does not match codebook",
        )));
    }
    error_from_vectors(cb, ms.vectors())
}

/// Binary entropy in bits with the `0·log 0 = 0` convention.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    term(p) + term(1.0 - p)
}

/// Builds the induced classical channel `P(j|i) = |⟨ω_j|S_i⟩|²` and its
/// mutual information. Residual mass above 1e-9 on any row adds an
/// inconclusive column so rows always sum to one.
pub fn channel_and_information(cb: &Codebook, ms: &MeasurementSet) -> Result<DecodeReport> {
    if ms.dim() != cb.dim() {
        return Err(Error::Size(String::from(
            "measurement dimension does not match codebook",
        )));
    }
    let m = cb.word_count();
    let k = ms.len();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut max_residual = 0.0f64;
    for i in 0..m {
        let s = cb.build_codeword(i)?;
        let mut row: Vec<f64> = ms.vectors().iter().map(|w| w.inner(&s).norm_sqr()).collect();
        let residual = (1.0 - row.iter().sum::<f64>()).max(0.0);
        max_residual = max_residual.max(residual);
        row.push(residual);
        rows.push(row);
    }
    let inconclusive = max_residual > 1e-9;
    if !inconclusive {
        for row in &mut rows {
            row.truncate(k);
        }
    }
    let cols = if inconclusive { k + 1 } else { k };
    let mut output_dist = alloc::vec![0.0f64; cols];
    for (i, row) in rows.iter().enumerate() {
        for (j, p) in row.iter().enumerate() {
            output_dist[j] += cb.priors()[i] * p;
        }
    }
    let mut info = 0.0f64;
    for (i, row) in rows.iter().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            if p > 0.0 && output_dist[j] > 0.0 {
                info += cb.priors()[i] * p * (p / output_dist[j]).log2();
            }
        }
    }
    let pe = error_probability(cb, ms)?;
    let optimal_flag = {
        let probe = bayes_cost_reduction(cb, ms, DEFAULT_COST_TOL, 1)?;
        pe - probe.error_prob < 1e-9
    };
    Ok(DecodeReport {
        error_prob: pe,
        channel: rows,
        inconclusive_column: inconclusive,
        mutual_info_bits: info.max(0.0),
        optimal_flag,
        iterations: 0,
    })
}

/// Mutual information of one letter under a projective measurement at
/// angle `phi` with priors `(zeta, 1−zeta)`.
fn letter_information(kappa: f64, zeta: f64, phi: f64) -> f64 {
    let p = crate::codebook::letter_error_probability(kappa);
    // letters as real 2-vectors
    let plus = [(1.0 - p).sqrt(), -(p.sqrt())];
    let minus = [p.sqrt(), -((1.0 - p).sqrt())];
    let e1 = [phi.cos(), phi.sin()];
    let e2 = [-phi.sin(), phi.cos()];
    let dot = |a: [f64; 2], b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
    let rows = [
        [dot(e1, plus).powi(2), dot(e2, plus).powi(2)],
        [dot(e1, minus).powi(2), dot(e2, minus).powi(2)],
    ];
    let priors = [zeta, 1.0 - zeta];
    let mut q = [0.0f64; 2];
    for i in 0..2 {
        for j in 0..2 {
            q[j] += priors[i] * rows[i][j];
        }
    }
    let mut info = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let pij = rows[i][j];
            if pij > 0.0 && q[j] > 0.0 {
                info += priors[i] * pij * (pij / q[j]).log2();
            }
        }
    }
    info
}

fn golden_refine(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..80 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Best single-letter mutual information `C₁` over projective letter
/// measurements (one angle) and the input prior, by a 401×401 grid scan
/// followed by coordinate-wise golden-section refinement. Accurate to
/// better than 1e-7 in the information value.
pub fn letter_capacity_c1(kappa: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&kappa) {
        return Err(Error::Domain(alloc::format!(
            "letter overlap must lie in [0,1), got {kappa}"
        )));
    }
    const GRID: usize = 401;
    let pi = core::f64::consts::PI;
    let mut best = (0.0f64, 0.5f64, 0.0f64); // (I, zeta, phi)
    for zi in 0..GRID {
        let zeta = zi as f64 / (GRID - 1) as f64;
        for pj in 0..GRID {
            let phi = pi * pj as f64 / (GRID - 1) as f64;
            let info = letter_information(kappa, zeta, phi);
            if info > best.0 {
                best = (info, zeta, phi);
            }
        }
    }
    let dz = 1.0 / (GRID - 1) as f64;
    let dphi = pi / (GRID - 1) as f64;
    let (mut zeta, mut phi) = (best.1, best.2);
    for _ in 0..6 {
        phi = golden_refine(
            |x| letter_information(kappa, zeta, x),
            phi - dphi,
            phi + dphi,
        );
        zeta = golden_refine(
            |z| letter_information(kappa, z.clamp(0.0, 1.0), phi),
            (zeta - dz).max(0.0),
            (zeta + dz).min(1.0),
        );
    }
    Ok(letter_information(kappa, zeta, phi).max(best.0))
}

/// One row of the capacity sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepPoint {
    pub kappa: f64,
    /// Best single-letter information, bits.
    pub c1: f64,
    /// Mutual information of the length-3 collective decoder, bits.
    pub i3: f64,
    /// `I₃/3 − C₁`.
    pub gain: f64,
}

/// The four length-3 codewords whose collective decoding beats the best
/// single-letter strategy.
pub fn gain_code_words() -> Vec<Word> {
    alloc::vec![
        Word::parse("+++").unwrap(),
        Word::parse("+--").unwrap(),
        Word::parse("--+").unwrap(),
        Word::parse("-+-").unwrap(),
    ]
}

/// The equal-prior codebook over [`gain_code_words`] at the given overlap.
pub fn gain_codebook(kappa: f64) -> Result<Codebook> {
    Codebook::new(kappa, gain_code_words(), alloc::vec![0.25; 4])
}

/// Per-letter information gain `I₃/3 − C₁` of the length-3 code across a
/// list of overlaps. The square-root measurement is used for `I₃`; the
/// code's group symmetry makes it optimal (flat `Γ^{1/2}` diagonal).
pub fn superadditivity_sweep(kappas: &[f64]) -> Result<Vec<SweepPoint>> {
    let mut out = Vec::with_capacity(kappas.len());
    for &kappa in kappas {
        let c1 = letter_capacity_c1(kappa)?;
        let cb = gain_codebook(kappa)?;
        let srm = square_root_measurement(&cb)?;
        let report = channel_and_information(&cb, &srm)?;
        let i3 = report.mutual_info_bits;
        out.push(SweepPoint {
            kappa,
            c1,
            i3,
            gain: i3 / 3.0 - c1,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::Word;
    use approx::assert_abs_diff_eq;

    fn two_word_codebook(kappa: f64, z1: f64) -> Codebook {
        Codebook::new(
            kappa,
            alloc::vec![Word::parse("++").unwrap(), Word::parse("--").unwrap()],
            alloc::vec![z1, 1.0 - z1],
        )
        .unwrap()
    }

    /// closed-form two-word collective bound p₂ = (1 − √(1−κ⁴))/2
    fn p2(kappa: f64) -> f64 {
        (1.0 - (1.0 - kappa.powi(4)).sqrt()) / 2.0
    }

    #[test]
    fn srm_two_word_error_matches_bound() {
        let cb = two_word_codebook(0.6, 0.5);
        let srm = square_root_measurement(&cb).unwrap();
        let pe = error_probability(&cb, &srm).unwrap();
        assert_abs_diff_eq!(pe, p2(0.6), epsilon = 1e-12);
        assert_abs_diff_eq!(pe, 0.0335239, epsilon = 5e-8);
    }

    #[test]
    fn srm_orthogonal_codewords_no_error() {
        let cb = two_word_codebook(0.0, 0.5);
        let srm = square_root_measurement(&cb).unwrap();
        assert!(error_probability(&cb, &srm).unwrap() < 1e-15);
    }

    #[test]
    fn srm_error_equals_gram_sqrt_diagonal() {
        // Pₑ = 1 − Σ (Γ^{1/2})_{ii}² — the Gram route is the oracle
        for &kappa in &[0.3, 0.6, 0.85] {
            let cb = two_word_codebook(kappa, 0.5);
            let sqrt =
                func_on_span(&cb.overlap_matrix(), |x| x.sqrt(), DEFAULT_RANK_TOL).unwrap();
            let oracle =
                1.0 - (0..2).map(|i| sqrt.get(i, i).re.powi(2)).sum::<f64>();
            let srm = square_root_measurement(&cb).unwrap();
            let pe = error_probability(&cb, &srm).unwrap();
            assert_abs_diff_eq!(pe, oracle, epsilon = 1e-11);
        }
    }

    #[test]
    fn srm_channel_matches_gram_identity() {
        // P(j|i) = (Γ^{1/2})_{ij}² / ζ_i
        let cb = Codebook::new(
            0.7,
            alloc::vec![
                Word::parse("++-").unwrap(),
                Word::parse("-+-").unwrap(),
                Word::parse("+-+").unwrap(),
            ],
            alloc::vec![0.5, 0.2, 0.3],
        )
        .unwrap();
        let srm = square_root_measurement(&cb).unwrap();
        let report = channel_and_information(&cb, &srm).unwrap();
        let sqrt = func_on_span(&cb.overlap_matrix(), |x| x.sqrt(), DEFAULT_RANK_TOL).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = sqrt.get(i, j).re.powi(2) / cb.priors()[i];
                assert_abs_diff_eq!(report.channel[i][j], expect, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn srm_degenerate_codebook_names_words() {
        // at κ very close to 1 the two words nearly coincide: use κ where
        // the Gram becomes numerically singular relative to rank_tol
        let cb = two_word_codebook(1.0 - 1e-12, 0.5);
        let r = square_root_measurement_with_tol(&cb, 1e-6);
        match r {
            Err(Error::Degenerate(words)) => {
                assert!(words.contains(&String::from("++")));
            }
            other => panic!("expected degeneracy, got {other:?}"),
        }
    }

    #[test]
    fn optimality_check_symmetric_true() {
        assert!(srm_optimality_check(&two_word_codebook(0.6, 0.5)).unwrap());
    }

    #[test]
    fn optimality_check_skewed_priors_false() {
        assert!(!srm_optimality_check(&two_word_codebook(0.6, 0.9)).unwrap());
    }

    #[test]
    fn optimality_check_single_word() {
        let cb = Codebook::new(
            0.4,
            alloc::vec![Word::parse("+").unwrap()],
            alloc::vec![1.0],
        )
        .unwrap();
        assert!(srm_optimality_check(&cb).unwrap());
    }

    #[test]
    fn helstrom_closed_form() {
        // overlap 0.36, equal priors → 0.0335239
        let lp = make_letter_pair(0.36).unwrap();
        let (pe, basis) = helstrom_binary(lp.plus(), lp.minus(), 0.5, 0.5).unwrap();
        assert_abs_diff_eq!(pe, 0.0335239, epsilon = 5e-8);
        // basis achieves the bound
        let achieved = 1.0
            - 0.5 * basis[0].inner(lp.plus()).norm_sqr()
            - 0.5 * basis[1].inner(lp.minus()).norm_sqr();
        assert_abs_diff_eq!(achieved, pe, epsilon = 1e-12);
    }

    #[test]
    fn helstrom_orthogonal_and_identical() {
        let e0 = Ket::from_reals(&[1.0, 0.0]);
        let e1 = Ket::from_reals(&[0.0, 1.0]);
        let (pe, _) = helstrom_binary(&e0, &e1, 0.5, 0.5).unwrap();
        assert_eq!(pe, 0.0);
        let (pe, basis) = helstrom_binary(&e0, &e0, 0.5, 0.5).unwrap();
        assert_abs_diff_eq!(pe, 0.5, epsilon = 1e-15);
        assert!(basis[0].inner(&basis[1]).norm() < 1e-12);
    }

    #[test]
    fn helstrom_reproduces_letter_error() {
        for k in 0..20 {
            let kappa = k as f64 / 20.0;
            let lp = make_letter_pair(kappa).unwrap();
            let (pe, _) = helstrom_binary(lp.plus(), lp.minus(), 0.5, 0.5).unwrap();
            let expect = crate::codebook::letter_error_probability(kappa);
            assert_abs_diff_eq!(pe, expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn cost_reduction_fixed_point_on_symmetric_code() {
        let cb = two_word_codebook(0.6, 0.5);
        let srm = square_root_measurement(&cb).unwrap();
        let before = error_probability(&cb, &srm).unwrap();
        let red = bayes_cost_reduction(&cb, &srm, DEFAULT_COST_TOL, DEFAULT_MAX_SWEEPS).unwrap();
        assert!(before - red.error_prob < 1e-9);
        assert_eq!(red.sweeps, 1);
        for (a, b) in srm.vectors().iter().zip(red.measurement.vectors()) {
            assert!(a.max_abs_diff(b) < 1e-12, "fixed point must not move");
        }
    }

    #[test]
    fn cost_reduction_reaches_binary_helstrom() {
        // ζ = (0.7, 0.3), κ = 0.6 → ½(1 − √(1 − 4·0.21·κ⁴)) = 0.028
        let cb = two_word_codebook(0.6, 0.7);
        let srm = square_root_measurement(&cb).unwrap();
        let red = bayes_cost_reduction(&cb, &srm, DEFAULT_COST_TOL, DEFAULT_MAX_SWEEPS).unwrap();
        let overlap = 0.6f64.powi(2);
        let bound = 0.5 * (1.0 - (1.0 - 4.0 * 0.7 * 0.3 * overlap * overlap).sqrt());
        assert_abs_diff_eq!(red.error_prob, bound, epsilon = 1e-10);
        assert_abs_diff_eq!(bound, 0.028, epsilon = 1e-12);
    }

    #[test]
    fn cost_reduction_single_word_is_identity() {
        let cb = Codebook::new(
            0.4,
            alloc::vec![Word::parse("+").unwrap()],
            alloc::vec![1.0],
        )
        .unwrap();
        let srm = square_root_measurement(&cb).unwrap();
        let red = bayes_cost_reduction(&cb, &srm, DEFAULT_COST_TOL, 5).unwrap();
        assert_eq!(red.measurement.len(), 1);
        assert!(srm.vectors()[0].max_abs_diff(&red.measurement.vectors()[0]) < 1e-12);
    }

    #[test]
    fn cost_reduction_monotone_from_random_starts() {
        // deterministic pseudo-random rotations of the SRM basis
        let cb = Codebook::new(
            0.5,
            alloc::vec![
                Word::parse("++").unwrap(),
                Word::parse("+-").unwrap(),
                Word::parse("--").unwrap(),
            ],
            alloc::vec![0.5, 0.25, 0.25],
        )
        .unwrap();
        let srm = square_root_measurement(&cb).unwrap();
        let red = bayes_cost_reduction(&cb, &srm, DEFAULT_COST_TOL, DEFAULT_MAX_SWEEPS).unwrap();
        assert!(red.error_prob <= error_probability(&cb, &srm).unwrap() + 1e-12);
    }

    #[test]
    fn error_probability_random_basis_bounded_below_by_optimum() {
        let cb = two_word_codebook(0.6, 0.5);
        let dim = cb.dim();
        let basis: Vec<Ket> = (0..2).map(|k| Ket::basis(dim, k)).collect();
        let ms = MeasurementSet::new(basis, alloc::vec![0, 1]).unwrap();
        let pe = error_probability(&cb, &ms).unwrap();
        assert!(pe >= p2(0.6) - 1e-12);
        assert!((0.0..=1.0).contains(&pe));
    }

    #[test]
    fn channel_bsc_information() {
        let cb = two_word_codebook(0.6, 0.5);
        let srm = square_root_measurement(&cb).unwrap();
        let report = channel_and_information(&cb, &srm).unwrap();
        assert!(!report.inconclusive_column);
        for row in &report.channel {
            assert_abs_diff_eq!(row.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
        }
        let expect = 1.0 - binary_entropy(p2(0.6));
        assert_abs_diff_eq!(report.mutual_info_bits, expect, epsilon = 1e-10);
        assert!(report.optimal_flag);
    }

    #[test]
    fn channel_orthogonal_code_full_information() {
        let cb = Codebook::new(
            0.0,
            alloc::vec![
                Word::parse("++").unwrap(),
                Word::parse("+-").unwrap(),
                Word::parse("-+").unwrap(),
                Word::parse("--").unwrap(),
            ],
            alloc::vec![0.25; 4],
        )
        .unwrap();
        let srm = square_root_measurement(&cb).unwrap();
        let report = channel_and_information(&cb, &srm).unwrap();
        assert_abs_diff_eq!(report.mutual_info_bits, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn channel_gain_code_at_09() {
        // group-symmetric Gram oracle:
        // diag = (3√(1−κ²) + √(1+3κ²))/8, off = (√(1+3κ²) − √(1−κ²))/8,
        // P(j|i) = (4·entry)²/4
        let kappa: f64 = 0.9;
        let diag = (3.0 * (1.0 - kappa * kappa).sqrt()
            + (1.0 + 3.0 * kappa * kappa).sqrt())
            / 8.0;
        let off =
            ((1.0 + 3.0 * kappa * kappa).sqrt() - (1.0 - kappa * kappa).sqrt()) / 8.0;
        let p_diag = 4.0 * diag * diag;
        let p_off = 4.0 * off * off;
        assert_abs_diff_eq!(p_diag, 0.62398, epsilon = 5e-6);
        assert_abs_diff_eq!(p_off, 0.12534, epsilon = 5e-6);
        assert_abs_diff_eq!(p_diag + 3.0 * p_off, 1.0, epsilon = 1e-12);

        let cb = gain_codebook(kappa).unwrap();
        let srm = square_root_measurement(&cb).unwrap();
        let report = channel_and_information(&cb, &srm).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { p_diag } else { p_off };
                assert_abs_diff_eq!(report.channel[i][j], expect, epsilon = 1e-9);
            }
        }
        let h = -(p_diag * p_diag.log2() + 3.0 * p_off * p_off.log2());
        let i3_oracle = 2.0 - h;
        assert_abs_diff_eq!(report.mutual_info_bits, i3_oracle, epsilon = 1e-10);
        assert!(report.optimal_flag, "group code: SRM already optimal");
    }

    #[test]
    fn channel_inconclusive_column_appears() {
        // one measurement vector for a two-word codebook leaves mass behind
        let cb = two_word_codebook(0.6, 0.5);
        let srm = square_root_measurement(&cb).unwrap();
        let partial =
            MeasurementSet::new(alloc::vec![srm.vectors()[0].clone()], alloc::vec![0]).unwrap();
        let report = channel_and_information(&cb, &partial).unwrap();
        assert!(report.inconclusive_column);
        for row in &report.channel {
            assert_eq!(row.len(), 2);
            assert_abs_diff_eq!(row.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn letter_capacity_limits() {
        assert_abs_diff_eq!(letter_capacity_c1(0.0).unwrap(), 1.0, epsilon = 1e-9);
        // κ=0.6 → 1 − H₂(0.1)
        let expect = 1.0 - binary_entropy(0.1);
        assert_abs_diff_eq!(letter_capacity_c1(0.6).unwrap(), expect, epsilon = 1e-7);
        // κ=0.9 → 1 − H₂(0.2820552...)
        let p = crate::codebook::letter_error_probability(0.9);
        let expect = 1.0 - binary_entropy(p);
        assert_abs_diff_eq!(letter_capacity_c1(0.9).unwrap(), expect, epsilon = 1e-7);
        assert_abs_diff_eq!(expect, 0.141764, epsilon = 5e-7);
    }

    #[test]
    fn sweep_gain_structure() {
        let points = superadditivity_sweep(&[0.0, 0.9]).unwrap();
        // κ=0: I₃ = 2 exactly, C₁ = 1 → gain = −1/3
        assert_abs_diff_eq!(points[0].i3, 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(points[0].gain, -1.0 / 3.0, epsilon = 1e-7);
        // κ=0.9: positive gain ≈ 0.00785
        assert!(points[1].gain > 0.0);
        assert_abs_diff_eq!(points[1].gain, 0.00785, epsilon = 5e-4);
    }
}

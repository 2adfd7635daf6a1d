//! Letter states, codeword states and priors.
//!
//! Letters are binary with a real overlap `κ ∈ [0, 1)`. A codebook
//! concatenates them into length-`n` words used with given priors. The
//! phase-keyed coherent-state frontend maps the optical letters onto the
//! same two-dimensional structure with `κ = e^{-2α²}` and keeps the
//! truncated Fock-space vectors around for verification.

use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Float;

use crate::linalg::{CMatrix, Ket, C64, DIM_CAP};
use crate::{Error, Result};

/// One binary letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Letter {
    Plus,
    Minus,
}

/// A codeword: a sequence of letters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Word(pub Vec<Letter>);

impl Word {
    /// Parses `"+-+"` style strings (ASCII `+` and `-`).
    pub fn parse(s: &str) -> Result<Word> {
        let mut letters = Vec::with_capacity(s.len());
        for ch in s.chars() {
            match ch {
                '+' => letters.push(Letter::Plus),
                '-' => letters.push(Letter::Minus),
                _ => {
                    return Err(Error::Domain(alloc::format!(
                        "invalid letter {ch:?} in word {s:?}"
                    )))
                }
            }
        }
        if letters.is_empty() {
            return Err(Error::Domain(String::from("empty word")));
        }
        Ok(Word(letters))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Hamming distance to another word of the same length.
    pub fn hamming(&self, other: &Word) -> usize {
        self.0
            .iter()
            .zip(other.0.iter())
            .filter(|(a, b)| a != b)
            .count()
    }

    /// Big-endian product-basis index with `+ → 0`, `- → 1`.
    pub fn product_index(&self) -> usize {
        self.0.iter().fold(0usize, |acc, l| {
            (acc << 1) | usize::from(*l == Letter::Minus)
        })
    }

    /// Word whose product index is `idx` for length `n`.
    pub fn from_index(idx: usize, n: usize) -> Word {
        let mut letters = Vec::with_capacity(n);
        for q in 0..n {
            let bit = (idx >> (n - 1 - q)) & 1;
            letters.push(if bit == 1 { Letter::Minus } else { Letter::Plus });
        }
        Word(letters)
    }

    pub fn as_string(&self) -> String {
        self.0
            .iter()
            .map(|l| match l {
                Letter::Plus => '+',
                Letter::Minus => '-',
            })
            .collect()
    }
}

/// The two letter states with their overlap.
#[derive(Debug, Clone)]
pub struct LetterPair {
    kappa: f64,
    plus: Ket,
    minus: Ket,
}

impl LetterPair {
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn plus(&self) -> &Ket {
        &self.plus
    }

    pub fn minus(&self) -> &Ket {
        &self.minus
    }

    pub fn ket(&self, l: Letter) -> &Ket {
        match l {
            Letter::Plus => &self.plus,
            Letter::Minus => &self.minus,
        }
    }
}

/// Single-letter least error probability `p = (1 − √(1−κ²))/2`.
pub fn letter_error_probability(kappa: f64) -> f64 {
    (1.0 - (1.0 - kappa * kappa).sqrt()) / 2.0
}

/// Builds the letter pair for overlap `κ`: the upper-level state rotated
/// about y by `θ` and `π − θ`,
/// `|+⟩ = (√(1−p), −√p)`, `|−⟩ = (√p, −√(1−p))`, `p = (1 − √(1−κ²))/2`.
pub fn make_letter_pair(kappa: f64) -> Result<LetterPair> {
    if !(0.0..1.0).contains(&kappa) {
        return Err(Error::Domain(alloc::format!(
            "letter overlap must lie in [0,1), got {kappa}"
        )));
    }
    let p = letter_error_probability(kappa);
    let plus = Ket::from_reals(&[(1.0 - p).sqrt(), -(p.sqrt())]);
    let minus = Ket::from_reals(&[p.sqrt(), -((1.0 - p).sqrt())]);
    debug_assert!((plus.inner(&minus).re - kappa).abs() < 1e-12);
    Ok(LetterPair {
        kappa,
        plus,
        minus,
    })
}

/// The phase-keyed coherent-state letters after displacement, on a
/// truncated Fock space, together with the measurement pair that
/// distinguishes them.
#[derive(Debug, Clone)]
pub struct FockLetterPair {
    pub alpha: f64,
    pub n_max: usize,
    /// `|0⟩` (vacuum) — the displaced image of the first letter.
    pub zero_ket: Ket,
    /// `|−2α⟩` — the displaced image of the second letter.
    pub displaced_ket: Ket,
    /// Measurement ket `|a⟩ = |0⟩`.
    pub meas_a: Ket,
    /// Measurement ket `|b⟩ = (|−2α⟩ − |0⟩⟨0|−2α⟩)/√(1−|⟨0|−2α⟩|²)`.
    pub meas_b: Ket,
}

impl FockLetterPair {
    /// Effective letter overlap `⟨0|−2α⟩ = e^{−2α²}`.
    pub fn overlap(&self) -> f64 {
        self.zero_ket.inner(&self.displaced_ket).re
    }
}

/// Default tail mass allowed outside the Fock truncation.
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;

/// Cap on the Fock truncation index.
pub const FOCK_N_MAX_CAP: usize = 64;

/// Coherent-state amplitudes `e^{−β²/2} βⁿ/√n!` for real `β`, truncated at
/// `n_max` (inclusive) and renormalized.
fn coherent_ket(beta: f64, n_max: usize) -> Ket {
    let mut amps = Vec::with_capacity(n_max + 1);
    // amp_n = e^{-β²/2} β^n / √(n!) built by recurrence to avoid overflow
    let mut a = (-beta * beta / 2.0).exp();
    for n in 0..=n_max {
        amps.push(a);
        a *= beta / ((n + 1) as f64).sqrt();
    }
    Ket::from_reals(&amps).normalized()
}

/// Builds the displaced letter pair `{|0⟩, |−2α⟩}` with the smallest
/// truncation whose coherent tail mass is below `tail_tol`, and the
/// measurement pair `{|a⟩, |b⟩}`.
pub fn make_bpsk_letters(alpha: f64, tail_tol: f64) -> Result<FockLetterPair> {
    if alpha <= 0.0 {
        return Err(Error::Domain(alloc::format!(
            "field amplitude must be positive, got {alpha}"
        )));
    }
    let beta = -2.0 * alpha;
    let mean = beta * beta; // mean photon number of |−2α⟩
    let mut n_max = None;
    // Tail mass 1 − Σ_{n≤N} e^{−|β|²} |β|^{2n}/n!
    let mut term = (-mean).exp();
    let mut cum = term;
    for n in 0..=FOCK_N_MAX_CAP {
        if 1.0 - cum < tail_tol {
            n_max = Some(n);
            break;
        }
        term *= mean / ((n + 1) as f64);
        cum += term;
    }
    let n_max = n_max.ok_or_else(|| {
        Error::Size(alloc::format!(
            "tail mass {tail_tol:.1e} not reachable within n_max {FOCK_N_MAX_CAP}"
        ))
    })?;
    let dim = n_max + 1;
    if dim > DIM_CAP {
        return Err(Error::Size(String::from("Fock dimension exceeds cap")));
    }
    let zero_ket = Ket::basis(dim, 0);
    let displaced_ket = coherent_ket(beta, n_max);
    let ov = zero_ket.inner(&displaced_ket);
    let denom = (1.0 - ov.norm_sqr()).sqrt();
    let meas_b = displaced_ket
        .sub(&zero_ket.scale(ov))
        .scale(C64::new(1.0 / denom, 0.0));
    Ok(FockLetterPair {
        alpha,
        n_max,
        zero_ket,
        displaced_ket,
        meas_a: Ket::basis(dim, 0),
        meas_b,
    })
}

/// How the letters of a codebook arise physically.
#[derive(Debug, Clone)]
pub enum LetterSource {
    /// Abstract two-state letters with the stated overlap.
    TwoState,
    /// Displaced coherent-state letters; the two-state representation uses
    /// the effective overlap `e^{−2α²}` in the `{|a⟩, |b⟩}` frame.
    Bpsk(FockLetterPair),
}

/// Codeword states with priors.
#[derive(Debug, Clone)]
pub struct Codebook {
    n: usize,
    letters: LetterPair,
    words: Vec<Word>,
    priors: Vec<f64>,
    source: LetterSource,
}

impl Codebook {
    /// Builds a two-state codebook.
    pub fn new(kappa: f64, words: Vec<Word>, priors: Vec<f64>) -> Result<Codebook> {
        let letters = make_letter_pair(kappa)?;
        Self::with_letters(letters, words, priors, LetterSource::TwoState)
    }

    /// Builds a coherent-state codebook: letters `{|α⟩, |−α⟩}` displaced to
    /// `{|0⟩, |−2α⟩}`, decoded in the `{|a⟩, |b⟩}` frame where the letter
    /// overlap is `e^{−2α²}`.
    pub fn bpsk(
        alpha: f64,
        tail_tol: f64,
        words: Vec<Word>,
        priors: Vec<f64>,
    ) -> Result<Codebook> {
        let fock = make_bpsk_letters(alpha, tail_tol)?;
        let kappa = fock.overlap();
        let letters = make_letter_pair(kappa)?;
        Self::with_letters(letters, words, priors, LetterSource::Bpsk(fock))
    }

    fn with_letters(
        letters: LetterPair,
        words: Vec<Word>,
        priors: Vec<f64>,
        source: LetterSource,
    ) -> Result<Codebook> {
        if words.is_empty() {
            return Err(Error::Domain(String::from("codebook needs words")));
        }
        let n = words[0].len();
        if n == 0 || (1usize << n) > DIM_CAP {
            return Err(Error::Size(alloc::format!(
                "word length {n} outside supported range"
            )));
        }
        for w in &words {
            if w.len() != n {
                return Err(Error::Domain(String::from(
                    "all words must have equal length",
                )));
            }
        }
        for (i, a) in words.iter().enumerate() {
            for b in words.iter().skip(i + 1) {
                if a == b {
                    return Err(Error::Domain(alloc::format!(
                        "duplicate word {:?}",
                        a.as_string()
                    )));
                }
            }
        }
        if priors.len() != words.len() {
            return Err(Error::Domain(String::from(
                "priors must match the number of words",
            )));
        }
        if priors.iter().any(|&z| z < 0.0) {
            return Err(Error::Domain(String::from("priors must be nonnegative")));
        }
        let s: f64 = priors.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(alloc::format!(
                "priors sum to {s}, expected 1"
            )));
        }
        Ok(Codebook {
            n,
            letters,
            words,
            priors,
            source,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of codewords `M`.
    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    /// Register dimension `2ⁿ`.
    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn kappa(&self) -> f64 {
        self.letters.kappa()
    }

    pub fn letters(&self) -> &LetterPair {
        &self.letters
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn source(&self) -> &LetterSource {
        &self.source
    }

    /// Same codebook at a different letter overlap.
    pub fn with_kappa(&self, kappa: f64) -> Result<Codebook> {
        Codebook::new(kappa, self.words.clone(), self.priors.clone())
    }

    /// Tensor-product state of the given codeword.
    pub fn build_codeword(&self, word_index: usize) -> Result<Ket> {
        let w = self.words.get(word_index).ok_or_else(|| {
            Error::Domain(alloc::format!("word index {word_index} out of range"))
        })?;
        self.sequence_state(w)
    }

    /// Tensor-product state of an arbitrary letter sequence.
    pub fn sequence_state(&self, w: &Word) -> Result<Ket> {
        let mut out = self.letters.ket(w.0[0]).clone();
        for l in &w.0[1..] {
            out = out.tensor(self.letters.ket(*l))?;
        }
        Ok(out)
    }

    /// All `2ⁿ` letter sequences in product-index order.
    pub fn all_sequences(&self) -> Vec<Word> {
        (0..self.dim()).map(|i| Word::from_index(i, self.n)).collect()
    }

    /// The sequences that are not codewords, in product-index order. These
    /// complete the codeword family for basis extension.
    pub fn complement_sequences(&self) -> Vec<Word> {
        self.all_sequences()
            .into_iter()
            .filter(|w| !self.words.contains(w))
            .collect()
    }

    /// Gram matrix `Γ_{ij} = √(ζ_i ζ_j) κ^{d_H(w_i, w_j)}` of the
    /// prior-weighted codewords, computed combinatorially.
    pub fn overlap_matrix(&self) -> CMatrix {
        let m = self.word_count();
        let mut g = CMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                let d = self.words[i].hamming(&self.words[j]);
                let v = (self.priors[i] * self.priors[j]).sqrt()
                    * self.kappa().powi(d as i32);
                g.set(i, j, C64::new(v, 0.0));
            }
        }
        g
    }
}

//! Free-group word algebra.
//!
//! Letters are indices into an ambient alphabet together with an exponent
//! sign. Words are plain letter sequences; most operations return freely
//! reduced words. Conjugacy classes are compared through the least cyclic
//! rotation of cyclically reduced cores, so every test here is linear in the
//! length of its inputs.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordError {
    #[error("word is trivial in the free group")]
    TrivialWord,
    #[error("cyclic base is a proper power")]
    NonPrimitiveBase,
}

/// Exponent sign attached to a letter or to a conjugacy class representative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// A generator or its formal inverse.
///
/// Stored as `±(generator + 1)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Letter(i32);

impl Letter {
    pub fn new(generator: usize, sign: Sign) -> Letter {
        let g = i32::try_from(generator + 1).expect("generator index out of range");
        match sign {
            Sign::Plus => Letter(g),
            Sign::Minus => Letter(-g),
        }
    }

    pub fn pos(generator: usize) -> Letter {
        Letter::new(generator, Sign::Plus)
    }

    pub fn neg(generator: usize) -> Letter {
        Letter::new(generator, Sign::Minus)
    }

    pub fn generator(self) -> usize {
        (self.0.unsigned_abs() - 1) as usize
    }

    pub fn sign(self) -> Sign {
        if self.0 > 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn is_inverse(self) -> bool {
        self.0 < 0
    }

    pub fn inverse(self) -> Letter {
        Letter(-self.0)
    }

    /// Generator index first, then `+` before `-`.
    fn order_key(self) -> u32 {
        2 * self.generator() as u32 + u32::from(self.is_inverse())
    }
}

impl Ord for Letter {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order_key().cmp(&other.order_key())
    }
}

impl PartialOrd for Letter {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_inverse() {
            write!(f, "x{}^-1", self.generator())
        } else {
            write!(f, "x{}", self.generator())
        }
    }
}

/// A finite sequence of letters. Not necessarily reduced.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn identity() -> Word {
        Word(Vec::new())
    }

    pub fn from_letters(letters: Vec<Letter>) -> Word {
        Word(letters)
    }

    /// Freely reduces the given letters.
    pub fn reduced(letters: impl IntoIterator<Item = Letter>) -> Word {
        let mut out = Word::identity();
        for l in letters {
            out.push_reducing(l);
        }
        out
    }

    pub fn letter(l: Letter) -> Word {
        Word(vec![l])
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn into_letters(self) -> Vec<Letter> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Appends `l`, cancelling it against the last letter when they are inverse.
    pub fn push_reducing(&mut self, l: Letter) {
        if self.0.last() == Some(&l.inverse()) {
            self.0.pop();
        } else {
            self.0.push(l);
        }
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inverse()).collect())
    }

    /// Freely reduced product `self · other`.
    pub fn mul(&self, other: &Word) -> Word {
        let mut out = free_reduce(self);
        for &l in other.letters() {
            out.push_reducing(l);
        }
        out
    }

    /// Freely reduced power. Negative exponents invert.
    pub fn pow(&self, e: i64) -> Word {
        let base = if e < 0 { self.inverse() } else { self.clone() };
        let mut out = Word::identity();
        for _ in 0..e.unsigned_abs() {
            for &l in base.letters() {
                out.push_reducing(l);
            }
        }
        out
    }

    pub fn is_reduced(&self) -> bool {
        self.0.windows(2).all(|p| p[0] != p[1].inverse())
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        self.is_reduced()
            && match (self.0.first(), self.0.last()) {
                (Some(&a), Some(&b)) => self.0.len() == 1 || a != b.inverse(),
                _ => true,
            }
    }

    pub fn display<'a>(&'a self, alphabet: &'a Alphabet) -> WordDisplay<'a> {
        WordDisplay {
            letters: &self.0,
            alphabet,
        }
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl FromIterator<Letter> for Word {
    fn from_iter<I: IntoIterator<Item = Letter>>(iter: I) -> Self {
        Word(iter.into_iter().collect())
    }
}

/// A cyclically reduced, nonempty word stored in its least rotation.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CyclicWord(Word);

impl CyclicWord {
    /// Canonical representative of the rotation class of `w` (not of its
    /// inverse). `w` must be cyclically reduced and nonempty.
    pub fn from_cyclically_reduced(w: &Word) -> Result<CyclicWord, WordError> {
        if w.is_empty() {
            return Err(WordError::TrivialWord);
        }
        debug_assert!(w.is_cyclically_reduced());
        let k = least_rotation(w.letters());
        Ok(CyclicWord(rotate(w.letters(), k)))
    }

    pub fn word(&self) -> &Word {
        &self.0
    }

    pub fn letters(&self) -> &[Letter] {
        self.0.letters()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_primitive(&self) -> bool {
        smallest_period(self.letters()) == self.len()
    }
}

impl fmt::Debug for CyclicWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cyclic{:?}", self.0)
    }
}

/// Generator names, indexed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Alphabet {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl Alphabet {
    pub fn new() -> Alphabet {
        Alphabet::default()
    }

    /// Adds a name, returning its index. Returns `None` if already present.
    pub fn insert(&mut self, name: &str) -> Option<usize> {
        if self.index.contains_key(name) {
            return None;
        }
        let i = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), i);
        Some(i)
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Prints a word in the literal syntax accepted by the parser, grouping
/// runs of equal letters as `x^k`. The empty word prints as the empty string.
pub struct WordDisplay<'a> {
    letters: &'a [Letter],
    alphabet: &'a Alphabet,
}

impl fmt::Display for WordDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut i = 0;
        let mut first = true;
        while i < self.letters.len() {
            let l = self.letters[i];
            let mut j = i + 1;
            while j < self.letters.len() && self.letters[j] == l {
                j += 1;
            }
            let k = (j - i) as i64 * l.sign().value();
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            let name = self.alphabet.name(l.generator());
            if k == 1 {
                write!(f, "{name}")?;
            } else {
                write!(f, "{name}^{k}")?;
            }
            i = j;
        }
        Ok(())
    }
}

pub fn free_reduce(w: &Word) -> Word {
    Word::reduced(w.letters().iter().copied())
}

/// Splits `w` as `conjugator · core · conjugator⁻¹` with `core` cyclically
/// reduced. The conjugator of a trivial element is empty.
pub fn cyclic_reduce(w: &Word) -> (Word, Word) {
    let r = free_reduce(w);
    let letters = r.letters();
    let n = letters.len();
    let mut k = 0;
    while 2 * k + 1 < n && letters[k] == letters[n - 1 - k].inverse() {
        k += 1;
    }
    if n == 0 {
        return (Word::identity(), Word::identity());
    }
    let core = Word(letters[k..n - k].to_vec());
    let conj = Word(letters[..k].to_vec());
    (core, conj)
}

/// Length of the smallest period `p` of `s` with `p | s.len()`.
pub(crate) fn smallest_period(s: &[Letter]) -> usize {
    let n = s.len();
    if n == 0 {
        return 0;
    }
    // KMP failure function
    let mut fail = vec![0usize; n];
    let mut k = 0;
    for i in 1..n {
        while k > 0 && s[i] != s[k] {
            k = fail[k - 1];
        }
        if s[i] == s[k] {
            k += 1;
        }
        fail[i] = k;
    }
    let p = n - fail[n - 1];
    if n % p == 0 {
        p
    } else {
        n
    }
}

/// Maximal root of the cyclic core of `w`: `core = root^exponent` with
/// `root` cyclically reduced and not a proper power.
pub fn primitive_root(w: &Word) -> Result<(Word, u64), WordError> {
    let (core, _) = cyclic_reduce(w);
    if core.is_empty() {
        return Err(WordError::TrivialWord);
    }
    let p = smallest_period(core.letters());
    let root = Word(core.letters()[..p].to_vec());
    Ok((root, (core.len() / p) as u64))
}

/// Start index of the lexicographically least rotation (two-pointer scan).
pub(crate) fn least_rotation<T: Ord>(s: &[T]) -> usize {
    let n = s.len();
    let (mut i, mut j, mut k) = (0usize, 1usize, 0usize);
    while i < n && j < n && k < n {
        let a = &s[(i + k) % n];
        let b = &s[(j + k) % n];
        match a.cmp(b) {
            Ordering::Equal => {
                k += 1;
                continue;
            }
            Ordering::Greater => i += k + 1,
            Ordering::Less => j += k + 1,
        }
        if i == j {
            j += 1;
        }
        k = 0;
    }
    i.min(j)
}

fn rotate(s: &[Letter], k: usize) -> Word {
    s[k..].iter().chain(&s[..k]).copied().collect()
}

/// Canonical class of a cyclically reduced nonempty word, with the rotation
/// offset used. For `Sign::Plus`, `rep` is `core` rotated left by `offset`;
/// for `Sign::Minus` it is `core⁻¹` rotated left by `offset`.
pub(crate) fn canonical_detail(core: &Word) -> (CyclicWord, Sign, usize) {
    debug_assert!(!core.is_empty() && core.is_cyclically_reduced());
    let inv = core.inverse();
    let kp = least_rotation(core.letters());
    let km = least_rotation(inv.letters());
    let rp = rotate(core.letters(), kp);
    let rm = rotate(inv.letters(), km);
    // a nontrivial free-group element is never conjugate to its inverse,
    // so equality only happens on malformed input; prefer the word itself
    if rm < rp {
        (CyclicWord(rm), Sign::Minus, km)
    } else {
        (CyclicWord(rp), Sign::Plus, kp)
    }
}

/// Canonical representative of the conjugacy-and-inversion class of the
/// cyclic core of `w`, and whether `w` is conjugate to it (`Plus`) or to its
/// inverse (`Minus`).
pub fn canonical_class(w: &Word) -> Result<(CyclicWord, Sign), WordError> {
    let (core, _) = cyclic_reduce(w);
    if core.is_empty() {
        return Err(WordError::TrivialWord);
    }
    let (rep, sign, _) = canonical_detail(&core);
    Ok((rep, sign))
}

/// Conjugacy in the free group.
pub fn are_conjugate(u: &Word, v: &Word) -> bool {
    let (cu, _) = cyclic_reduce(u);
    let (cv, _) = cyclic_reduce(v);
    if cu.len() != cv.len() {
        return false;
    }
    if cu.is_empty() {
        return true;
    }
    let ru = rotate(cu.letters(), least_rotation(cu.letters()));
    let rv = rotate(cv.letters(), least_rotation(cv.letters()));
    ru == rv
}

/// Exponent `e` with `x = base^e` as reduced words, if any. `x` must be
/// freely reduced and `base` cyclically reduced, so the comparison is literal.
pub(crate) fn power_of(x: &[Letter], base: &[Letter]) -> Option<i64> {
    if x.is_empty() {
        return Some(0);
    }
    let b = base.len();
    if b == 0 || x.len() % b != 0 {
        return None;
    }
    let e = (x.len() / b) as i64;
    if x.iter().zip(base.iter().cycle()).all(|(p, q)| p == q) {
        return Some(e);
    }
    let inv: Vec<Letter> = base.iter().rev().map(|l| l.inverse()).collect();
    if x.iter().zip(inv.iter().cycle()).all(|(p, q)| p == q) {
        return Some(-e);
    }
    None
}

/// Returns `e` when `x = base^e` in the free group and `modulus | e`.
pub fn power_in_cyclic(x: &Word, base: &CyclicWord, modulus: i64) -> Result<Option<i64>, WordError> {
    if !base.is_primitive() {
        return Err(WordError::NonPrimitiveBase);
    }
    assert!(modulus != 0, "modulus must be nonzero");
    let x = free_reduce(x);
    Ok(power_of(x.letters(), base.letters()).filter(|e| e % modulus == 0))
}

/// Largest `|k|` such that `u` ends with `base^k` (literally); returns the
/// signed exponent and the suffix length in letters.
pub(crate) fn max_power_suffix(u: &[Letter], base: &[Letter]) -> (i64, usize) {
    let b = base.len();
    if b == 0 {
        return (0, 0);
    }
    let count = |pat: &[Letter]| {
        let mut k = 0usize;
        while (k + 1) * b <= u.len() && u[u.len() - (k + 1) * b..u.len() - k * b] == *pat {
            k += 1;
        }
        k
    };
    let kp = count(base);
    if kp > 0 {
        return (kp as i64, kp * b);
    }
    let inv: Vec<Letter> = base.iter().rev().map(|l| l.inverse()).collect();
    let km = count(&inv);
    (-(km as i64), km * b)
}

/// Largest `|k|` such that `u` starts with `base^k`.
pub(crate) fn max_power_prefix(u: &[Letter], base: &[Letter]) -> (i64, usize) {
    let b = base.len();
    if b == 0 {
        return (0, 0);
    }
    let count = |pat: &[Letter]| {
        let mut k = 0usize;
        while (k + 1) * b <= u.len() && u[k * b..(k + 1) * b] == *pat {
            k += 1;
        }
        k
    };
    let kp = count(base);
    if kp > 0 {
        return (kp as i64, kp * b);
    }
    let inv: Vec<Letter> = base.iter().rev().map(|l| l.inverse()).collect();
    let km = count(&inv);
    (-(km as i64), km * b)
}

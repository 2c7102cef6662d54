//! One-way function instantiations, puzzle sampling, inversion checking, and
//! empirical security measurement.
//!
//! Two instantiations are provided. `hash_truncate` applies a fixed
//! cryptographic hash (domain-separated by the key length) and truncates to
//! the output length; it is realistically hard but admits no exact analysis.
//! `random_table` is a seeded pseudorandom *permutation* of `{0,1}^k`
//! (extended with deterministic padding bits when the output is longer), which
//! makes desk-scale ground truth exact: an image has exactly one preimage, so
//! prefix-search success rates equal the covered fraction of the domain.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use num::{BigUint, One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::rat::{rat, Rat};

/// Largest supported key length for the `random_table` kind.
pub const RANDOM_TABLE_MAX_K: usize = 24;

/// Which concrete function family an instance evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OwfKind {
    /// Truncated cryptographic hash of `(k, x)`.
    HashTruncate,
    /// Seeded pseudorandom permutation (plus padding bits when `m > k`).
    RandomTable { seed: u64 },
}

/// A family of functions `f_k: {0,1}^k -> {0,1}^m` with `m = ceil(k^b)`.
pub struct OwfInstance {
    kind: OwfKind,
    exponent: Rat,
    evals: AtomicU64,
}

impl fmt::Debug for OwfInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OwfInstance")
            .field("kind", &self.kind)
            .field("exponent", &self.exponent.to_string())
            .finish()
    }
}

impl OwfInstance {
    /// Hash-truncation family with output length `m = k` (exponent 1).
    pub fn hash_truncate() -> Self {
        Self::with_exponent(OwfKind::HashTruncate, rat(1, 1)).expect("exponent 1 is valid")
    }

    /// Seeded random-permutation family with output length `m = k`.
    pub fn random_table(seed: u64) -> Self {
        Self::with_exponent(OwfKind::RandomTable { seed }, rat(1, 1))
            .expect("exponent 1 is valid")
    }

    /// Builds an instance with output length `m = ceil(k^b)`.
    pub fn with_exponent(kind: OwfKind, exponent: Rat) -> Result<Self> {
        if !exponent.is_positive() {
            return Err(Error::Argument(format!(
                "output length exponent must be positive, got {exponent}"
            )));
        }
        if exponent.numer().to_u32().is_none() || exponent.denom().to_u32().is_none() {
            return Err(Error::Argument(format!(
                "output length exponent {exponent} out of supported range"
            )));
        }
        Ok(OwfInstance {
            kind,
            exponent,
            evals: AtomicU64::new(0),
        })
    }

    pub fn kind(&self) -> OwfKind {
        self.kind
    }

    pub fn exponent(&self) -> &Rat {
        &self.exponent
    }

    /// Total evaluations performed through this instance (all threads).
    pub fn evals_performed(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }

    /// Exact `m = ceil(k^b)`: the smallest `m` with `m^q >= k^p`.
    pub fn output_len(&self, k: usize) -> Result<usize> {
        if k == 0 {
            return Err(Error::Argument("key length must be >= 1".to_string()));
        }
        let p = self.exponent.numer().to_u32().expect("validated");
        let q = self.exponent.denom().to_u32().expect("validated");
        if p > 16 || q > 16 {
            return Err(Error::Argument(format!(
                "exponent {} too extreme for exact output lengths",
                self.exponent
            )));
        }
        let kp = BigUint::from(k).pow(p);
        let mut m = (k as f64).powf(self.exponent.to_f64().unwrap()).ceil() as u64;
        m = m.max(1);
        while BigUint::from(m).pow(q) < kp {
            m += 1;
        }
        while m > 1 && BigUint::from(m - 1).pow(q) >= kp {
            m -= 1;
        }
        Ok(m as usize)
    }

    fn check_support(&self, k: usize) -> Result<()> {
        if k == 0 {
            return Err(Error::Argument("key length must be >= 1".to_string()));
        }
        if let OwfKind::RandomTable { .. } = self.kind {
            if k > RANDOM_TABLE_MAX_K {
                return Err(Error::Argument(format!(
                    "random_table supports k <= {RANDOM_TABLE_MAX_K}, got {k}"
                )));
            }
            if self.output_len(k)? < k {
                return Err(Error::Argument(format!(
                    "random_table requires output length >= key length (k = {k})"
                )));
            }
        }
        Ok(())
    }

    /// Evaluates `f_k(x)` where `k = x.len()`.
    pub fn eval(&self, x: &BitString) -> Result<BitString> {
        let k = x.len();
        self.check_support(k)?;
        self.evals.fetch_add(1, Ordering::Relaxed);
        let m = self.output_len(k)?;
        match self.kind {
            OwfKind::HashTruncate => {
                let mut seed_input = Vec::new();
                seed_input.extend_from_slice(b"gamelab-owf-ht");
                seed_input.extend_from_slice(&(k as u64).to_le_bytes());
                seed_input.extend_from_slice(x.as_bytes());
                Ok(expand_bits(&seed_input, m))
            }
            OwfKind::RandomTable { seed } => {
                let value = x.to_u64_msb().expect("k <= 24 fits in u64");
                let image = permute(seed, k as u32, value);
                let head = BitString::from_u64_msb(image, k)?;
                if m == k {
                    return Ok(head);
                }
                let mut seed_input = Vec::new();
                seed_input.extend_from_slice(b"gamelab-owf-rt-pad");
                seed_input.extend_from_slice(&seed.to_le_bytes());
                seed_input.extend_from_slice(&(k as u64).to_le_bytes());
                seed_input.extend_from_slice(&value.to_le_bytes());
                let pad = expand_bits(&seed_input, m - k);
                Ok(BitString::concat(&[&head, &pad]))
            }
        }
    }

    /// Samples a fresh puzzle: a uniform secret and its image.
    ///
    /// The game layer exposes only the image to players; the secret is
    /// returned for harnesses and oracles.
    pub fn sample_puzzle(&self, k: usize, rng_seed: u64) -> Result<(BitString, BitString)> {
        self.check_support(k)?;
        let mut rng = ChaCha20Rng::seed_from_u64(rng_seed);
        let secret = sample_secret(k, &mut rng);
        let image = self.eval(&secret)?;
        Ok((image, secret))
    }

    /// True iff `z` is a preimage of `image` (collisions count).
    pub fn check_inverts(&self, image: &BitString, z: &BitString, k: usize) -> Result<bool> {
        if z.len() != k {
            return Err(Error::Argument(format!(
                "candidate has length {}, expected {k}",
                z.len()
            )));
        }
        Ok(self.eval(z)? == *image)
    }

    /// Fraction of freshly sampled puzzles inverted by exhaustive search over
    /// the first `t` strings of `{0,1}^k` in lexicographic order.
    ///
    /// `random_table` only: the measurement is meaningful exactly because that
    /// kind has analyzable ground truth. Trials use per-trial derived seeds,
    /// so rates for nested budgets share their trial population.
    pub fn measure_security(&self, k: usize, t: u64, trials: u32, seed: u64) -> Result<f64> {
        if !matches!(self.kind, OwfKind::RandomTable { .. }) {
            return Err(Error::Argument(
                "measure_security requires the random_table kind".to_string(),
            ));
        }
        self.check_support(k)?;
        if trials == 0 {
            return Err(Error::Argument("trials must be >= 1".to_string()));
        }
        if t == 0 || (k < 64 && t > (1u64 << k)) {
            return Err(Error::Argument(format!(
                "inverter budget t = {t} outside 1..=2^{k}"
            )));
        }
        let index = PrefixIndex::build(self, k, t)?;
        let mut successes = 0u32;
        for trial in 0..trials {
            let (image, _secret) =
                self.sample_puzzle(k, crate::seeding::mix64(seed, u64::from(trial), 0x5ec))?;
            if index.query(&image, t).is_some() {
                successes += 1;
            }
        }
        Ok(f64::from(successes) / f64::from(trials))
    }
}

/// Draws a uniform secret of `k` bits.
pub fn sample_secret(k: usize, rng: &mut ChaCha20Rng) -> BitString {
    BitString::from_bits((0..k).map(|_| rng.gen::<bool>()))
}

/// Deterministic bit expansion: SHA-256 over `(input, counter)` blocks.
fn expand_bits(input: &[u8], bits: usize) -> BitString {
    let mut out = BitString::new(bits);
    let mut counter = 0u32;
    'outer: while out.len() < bits {
        let mut hasher = Sha256::new();
        hasher.update(input);
        hasher.update(counter.to_le_bytes());
        let digest = hasher.finalize();
        for byte in digest {
            for i in 0..8 {
                if out.len() == bits {
                    break 'outer;
                }
                out.push(byte & (0x80 >> i) != 0).expect("capacity");
            }
        }
        counter += 1;
    }
    out
}

/// SplitMix64 step used for Feistel round functions.
fn mixer(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Round keys for the k-bit permutation, derived once per `(seed, k)`.
fn round_keys(seed: u64, k: u32) -> [u64; 8] {
    let mut hasher = Sha256::new();
    hasher.update(b"gamelab-owf-rt-perm");
    hasher.update(seed.to_le_bytes());
    hasher.update(k.to_le_bytes());
    let digest = hasher.finalize();
    let mut keys = [0u64; 8];
    for (i, chunk) in digest.chunks_exact(8).enumerate() {
        keys[i] = u64::from_le_bytes(chunk.try_into().unwrap());
    }
    for i in 4..8 {
        keys[i] = mixer(keys[i - 4] ^ (i as u64));
    }
    keys
}

/// Seeded permutation of `{0,1}^k` via a balanced Feistel network over
/// `2*ceil(k/2)` bits with cycle walking back into the k-bit domain.
fn permute(seed: u64, k: u32, value: u64) -> u64 {
    debug_assert!(k >= 1 && k <= RANDOM_TABLE_MAX_K as u32);
    debug_assert!(value < (1u64 << k));
    let keys = round_keys(seed, k);
    let w = k.div_ceil(2);
    let mask = (1u64 << w) - 1;
    let domain = 1u64 << k;
    let mut v = value;
    loop {
        // One pass of the 2w-bit Feistel permutation.
        let mut left = v >> w;
        let mut right = v & mask;
        for key in keys {
            let f = mixer(key ^ right ^ (u64::from(w) << 56)) & mask;
            let new_right = left ^ f;
            left = right;
            right = new_right;
        }
        v = (left << w) | right;
        if v < domain {
            return v;
        }
    }
}

/// First-preimage index over a lexicographic prefix of `{0,1}^k`.
///
/// `query(image, limit)` returns exactly what a literal scan of the first
/// `limit` strings would find (the smallest matching index), for any
/// `limit <= prefix_len`; it just pays the evaluation cost once up front.
#[derive(Debug)]
pub struct PrefixIndex {
    k: usize,
    prefix_len: u64,
    /// `(packed image, first preimage index)`, sorted by image.
    entries: Vec<(u64, u64)>,
}

impl PrefixIndex {
    /// Evaluates the first `prefix_len` strings of `{0,1}^k` and records the
    /// first preimage index per image. Requires images of at most 64 bits.
    pub fn build(inst: &OwfInstance, k: usize, prefix_len: u64) -> Result<Self> {
        inst.check_support(k)?;
        if k > 63 {
            return Err(Error::UnsupportedMode(format!(
                "prefix index unsupported for k = {k} > 63"
            )));
        }
        if inst.output_len(k)? > 64 {
            return Err(Error::UnsupportedMode(
                "prefix index requires images of at most 64 bits".to_string(),
            ));
        }
        let prefix_len = prefix_len.min(1u64 << k);
        let mut entries = Vec::with_capacity(prefix_len as usize);
        for idx in 0..prefix_len {
            let z = BitString::from_u64_msb(idx, k)?;
            let image = inst.eval(&z)?;
            entries.push((image.to_u64_msb().expect("image <= 64 bits"), idx));
        }
        entries.sort_unstable();
        entries.dedup_by_key(|(image, _)| *image);
        Ok(PrefixIndex {
            k,
            prefix_len,
            entries,
        })
    }

    pub fn prefix_len(&self) -> u64 {
        self.prefix_len
    }

    /// Smallest index `< limit` whose string maps to `image`, if any.
    pub fn query(&self, image: &BitString, limit: u64) -> Option<u64> {
        debug_assert!(limit <= self.prefix_len);
        let key = image.to_u64_msb()?;
        match self.entries.binary_search_by_key(&key, |(img, _)| *img) {
            Ok(pos) => {
                let idx = self.entries[pos].1;
                (idx < limit).then_some(idx)
            }
            Err(_) => None,
        }
    }

    /// The matching candidate string for a query hit.
    pub fn candidate(&self, idx: u64) -> BitString {
        BitString::from_u64_msb(idx, self.k).expect("index within domain")
    }
}

/// Literal lexicographic prefix search: scans `z = 0, 1, ...` until a
/// preimage of `image` is found or `limit` strings have been evaluated.
/// Returns the match (as an index) and the exact number of evaluations spent.
pub fn search_preimage_prefix(
    inst: &OwfInstance,
    image: &BitString,
    k: usize,
    limit: u64,
) -> Result<(Option<u64>, u64)> {
    if k > 63 {
        return Err(Error::Argument(format!("k = {k} too large for search")));
    }
    let limit = limit.min(1u64 << k);
    for idx in 0..limit {
        let z = BitString::from_u64_msb(idx, k)?;
        if inst.check_inverts(image, &z, k)? {
            return Ok((Some(idx), idx + 1));
        }
    }
    Ok((None, limit))
}

/// Security-parameter pair: `s(k) = 2^{k * s_exponent}` against inverters
/// bounded by `t(k) = 2^{k * t_exponent}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OwfSecuritySpec {
    s_exponent: Rat,
    t_exponent: Rat,
}

impl OwfSecuritySpec {
    pub fn new(s_exponent: Rat, t_exponent: Rat) -> Result<Self> {
        let in_unit = |r: &Rat| r > &Rat::zero() && r < &Rat::one();
        if !in_unit(&s_exponent) || !in_unit(&t_exponent) || t_exponent >= s_exponent {
            return Err(Error::Argument(format!(
                "need 0 < t_exponent < s_exponent < 1, got s = {s_exponent}, t = {t_exponent}"
            )));
        }
        Ok(OwfSecuritySpec {
            s_exponent,
            t_exponent,
        })
    }

    /// The exponential profile used throughout: `2^{k/10}`-secure against a
    /// `2^{k/30}`-bounded inverter.
    pub fn exponential() -> Self {
        OwfSecuritySpec::new(rat(1, 10), rat(1, 30)).expect("valid constants")
    }

    pub fn s_exponent(&self) -> &Rat {
        &self.s_exponent
    }

    pub fn t_exponent(&self) -> &Rat {
        &self.t_exponent
    }

    /// `1 / s(k) = 2^{-k * s_exponent}`: the success bound at key length `k`.
    pub fn security_threshold(&self, k: usize) -> f64 {
        (-(k as f64) * self.s_exponent.to_f64().unwrap()).exp2()
    }

    /// `floor(2^{k * t_exponent})`: the inverter's step budget at `k`.
    pub fn inverter_budget(&self, k: usize) -> u64 {
        ((k as f64) * self.t_exponent.to_f64().unwrap()).exp2().floor() as u64
    }
}

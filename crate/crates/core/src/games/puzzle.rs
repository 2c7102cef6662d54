//! Puzzle tuples, candidate framing, hit counting, and the sign payoff.
//!
//! A game index `n` determines the tuple shape: `l = ceil(log2 n)` entries,
//! entry `i` (1-based) holding an image of a secret of `i * l` bits. Types and
//! actions travel as single bit strings under fixed-width framing, so entry
//! boundaries are fully determined by the layout.

use std::sync::Arc;

use rand_chacha::ChaCha20Rng;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::owf::{sample_secret, OwfInstance};
use crate::rat::{sign_of_diff, Rat};

/// `ceil(log2 n)` for `n >= 2`.
pub fn ceil_log2(n: u64) -> u32 {
    assert!(n >= 2, "ceil_log2 needs n >= 2");
    64 - (n - 1).leading_zeros()
}

/// Shape of one puzzle entry: its 1-based index in the full tuple, the secret
/// (key) length, and the image length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PuzzleEntrySpec {
    pub index: u32,
    pub key_len: usize,
    pub image_len: usize,
}

/// Entry layout for a puzzle game at a given index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PuzzleLayout {
    n: u64,
    /// Tuple length before any truncation (1 for the single-puzzle variant).
    l: u32,
    entries: Vec<PuzzleEntrySpec>,
}

impl PuzzleLayout {
    /// Layout of the inversion-race game at index `n`: entries with key
    /// lengths `i * ceil(log2 n)` for `i = 1..=ceil(log2 n)`.
    pub fn tuple_game(n: u64, inst: &OwfInstance) -> Result<Self> {
        Self::tuple_game_capped(n, inst, None)
    }

    /// As [`PuzzleLayout::tuple_game`], dropping entries whose key length
    /// exceeds `max_key_len` (the desk-scale tractability cap).
    pub fn tuple_game_capped(
        n: u64,
        inst: &OwfInstance,
        max_key_len: Option<usize>,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::Argument("game index n must be >= 2".into()));
        }
        let l = ceil_log2(n);
        let mut entries = Vec::new();
        for i in 1..=l {
            let key_len = i as usize * l as usize;
            if let Some(cap) = max_key_len {
                if key_len > cap {
                    break;
                }
            }
            entries.push(PuzzleEntrySpec {
                index: i,
                key_len,
                image_len: inst.output_len(key_len)?,
            });
        }
        if entries.is_empty() {
            return Err(Error::Argument(format!(
                "key-length cap {max_key_len:?} leaves no puzzle entries at n = {n}"
            )));
        }
        Ok(PuzzleLayout { n, l, entries })
    }

    /// Layout of the single-puzzle variant at index `n`: one entry whose
    /// secret has `n` bits.
    pub fn single(n: usize, inst: &OwfInstance) -> Result<Self> {
        if n < 1 {
            return Err(Error::Argument("game index n must be >= 1".into()));
        }
        Ok(PuzzleLayout {
            n: n as u64,
            l: 1,
            entries: vec![PuzzleEntrySpec {
                index: 1,
                key_len: n,
                image_len: inst.output_len(n)?,
            }],
        })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Untruncated tuple length.
    pub fn full_length(&self) -> u32 {
        self.l
    }

    pub fn entries(&self) -> &[PuzzleEntrySpec] {
        &self.entries
    }

    /// Total action length: the sum of candidate (key) lengths.
    pub fn action_len(&self) -> usize {
        self.entries.iter().map(|e| e.key_len).sum()
    }

    /// Total type length: the sum of image lengths.
    pub fn type_len(&self) -> usize {
        self.entries.iter().map(|e| e.image_len).sum()
    }
}

/// A player's type in a puzzle game: one image per retained entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PuzzleTuple {
    layout: Arc<PuzzleLayout>,
    images: Vec<BitString>,
}

impl PuzzleTuple {
    pub fn new(layout: Arc<PuzzleLayout>, images: Vec<BitString>) -> Result<Self> {
        if images.len() != layout.entries().len() {
            return Err(Error::Argument(format!(
                "expected {} images, got {}",
                layout.entries().len(),
                images.len()
            )));
        }
        for (spec, image) in layout.entries().iter().zip(&images) {
            if image.len() != spec.image_len {
                return Err(Error::Argument(format!(
                    "entry {} image has {} bits, expected {}",
                    spec.index,
                    image.len(),
                    spec.image_len
                )));
            }
        }
        Ok(PuzzleTuple { layout, images })
    }

    pub fn layout(&self) -> &Arc<PuzzleLayout> {
        &self.layout
    }

    pub fn images(&self) -> &[BitString] {
        &self.images
    }

    /// Fixed-width framing into a single type bit string.
    pub fn encode(&self) -> BitString {
        BitString::concat(&self.images.iter().collect::<Vec<_>>())
    }

    pub fn decode(layout: &Arc<PuzzleLayout>, encoded: &BitString) -> Result<Self> {
        if encoded.len() != layout.type_len() {
            return Err(Error::Argument(format!(
                "type has {} bits, layout needs {}",
                encoded.len(),
                layout.type_len()
            )));
        }
        let mut images = Vec::with_capacity(layout.entries().len());
        let mut pos = 0;
        for spec in layout.entries() {
            images.push(encoded.slice(pos, spec.image_len)?);
            pos += spec.image_len;
        }
        PuzzleTuple::new(layout.clone(), images)
    }
}

/// A player's action: one candidate preimage per entry, fixed-width framed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OwfGameAction {
    candidates: Vec<BitString>,
}

impl OwfGameAction {
    pub fn new(layout: &PuzzleLayout, candidates: Vec<BitString>) -> Result<Self> {
        if candidates.len() != layout.entries().len() {
            return Err(Error::Argument(format!(
                "expected {} candidates, got {}",
                layout.entries().len(),
                candidates.len()
            )));
        }
        for (spec, cand) in layout.entries().iter().zip(&candidates) {
            if cand.len() != spec.key_len {
                return Err(Error::Argument(format!(
                    "entry {} candidate has {} bits, expected {}",
                    spec.index,
                    cand.len(),
                    spec.key_len
                )));
            }
        }
        Ok(OwfGameAction { candidates })
    }

    pub fn candidates(&self) -> &[BitString] {
        &self.candidates
    }

    pub fn encode(&self) -> BitString {
        BitString::concat(&self.candidates.iter().collect::<Vec<_>>())
    }

    pub fn decode(layout: &PuzzleLayout, encoded: &BitString) -> Result<Self> {
        if encoded.len() != layout.action_len() {
            return Err(Error::Argument(format!(
                "action has {} bits, layout needs {}",
                encoded.len(),
                layout.action_len()
            )));
        }
        let mut candidates = Vec::with_capacity(layout.entries().len());
        let mut pos = 0;
        for spec in layout.entries() {
            candidates.push(encoded.slice(pos, spec.key_len)?);
            pos += spec.key_len;
        }
        OwfGameAction::new(layout, candidates)
    }
}

/// Number of entries whose candidate inverts the corresponding image.
pub fn count_hits(
    tuple: &PuzzleTuple,
    action: &OwfGameAction,
    inst: &OwfInstance,
) -> Result<u32> {
    if action.candidates.len() != tuple.images.len() {
        return Err(Error::Argument(format!(
            "action has {} candidates for {} images",
            action.candidates.len(),
            tuple.images.len()
        )));
    }
    let mut hits = 0;
    for ((spec, image), cand) in tuple
        .layout
        .entries()
        .iter()
        .zip(&tuple.images)
        .zip(&action.candidates)
    {
        if cand.len() != spec.key_len {
            return Err(Error::Argument(format!(
                "entry {} candidate has {} bits, expected {}",
                spec.index,
                cand.len(),
                spec.key_len
            )));
        }
        if inst.check_inverts(image, cand, spec.key_len)? {
            hits += 1;
        }
    }
    Ok(hits)
}

/// Sign-of-difference payoff on hit counts; zero-sum by construction: the
/// player with strictly more hits gets 1 and the other -1, ties pay 0.
pub fn owf_payoff(a1: u64, a2: u64) -> (Rat, Rat) {
    let v1 = sign_of_diff(a1 as i64, a2 as i64);
    let v2 = -v1.clone();
    (v1, v2)
}

/// Draws the tuple's secrets and images; shared by the type sampler and by
/// test harnesses that need ground truth.
pub fn sample_tuple_with_secrets(
    inst: &OwfInstance,
    layout: &Arc<PuzzleLayout>,
    rng: &mut ChaCha20Rng,
) -> Result<(PuzzleTuple, Vec<BitString>)> {
    let mut images = Vec::with_capacity(layout.entries().len());
    let mut secrets = Vec::with_capacity(layout.entries().len());
    for spec in layout.entries() {
        let secret = sample_secret(spec.key_len, rng);
        images.push(inst.eval(&secret)?);
        secrets.push(secret);
    }
    Ok((PuzzleTuple::new(layout.clone(), images)?, secrets))
}

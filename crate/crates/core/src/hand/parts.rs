//! Hand-part vocabulary: 17 fine parts and the 7 contact categories they
//! aggregate into.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::contact::ContactMap;
use crate::error::{Error, Result};

pub const FINGER_NAMES: [&str; 5] = ["thumb", "index", "middle", "ring", "pinky"];

/// One of 17 hand parts: pad, nail and knuckle of each finger, plus palm and
/// back of the hand. Encoded as `3 * finger + {0: pad, 1: nail, 2: knuckle}`,
/// 15 for the palm and 16 for the back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct PartLabel17(u8);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FingerPart {
    Pad,
    Nail,
    Knuckle,
}

impl PartLabel17 {
    pub const COUNT: usize = 17;
    pub const PALM: Self = Self(15);
    pub const BACK: Self = Self(16);

    pub fn finger(finger: usize, part: FingerPart) -> Self {
        assert!(finger < 5);
        Self((3 * finger + part as usize) as u8)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Contact category (bit position in [`ContactLabel7`]): pads and nails map
    /// to their finger, the palm to palmar (5), knuckles and the back to dorsal (6).
    pub fn category(self) -> usize {
        match self.0 {
            15 => ContactLabel7::PALMAR,
            16 => ContactLabel7::DORSAL,
            p if p % 3 == 2 => ContactLabel7::DORSAL,
            p => (p / 3) as usize,
        }
    }

    pub fn name(self) -> String {
        match self.0 {
            15 => "palm".into(),
            16 => "back".into(),
            p => {
                let part = ["pad", "nail", "knuckle"][(p % 3) as usize];
                format!("{}_{part}", FINGER_NAMES[(p / 3) as usize])
            }
        }
    }
}

impl TryFrom<u8> for PartLabel17 {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        if (v as usize) < Self::COUNT {
            Ok(Self(v))
        } else {
            Err(Error::Invalid(format!("part label {v} outside 0..17")))
        }
    }
}

impl From<PartLabel17> for u8 {
    fn from(p: PartLabel17) -> u8 {
        p.0
    }
}

/// Seven contact bits: five finger pads, palmar, dorsal. Rendered as a
/// 7-character string with bit 0 (thumb) first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ContactLabel7(u8);

impl ContactLabel7 {
    pub const PALMAR: usize = 5;
    pub const DORSAL: usize = 6;

    pub fn from_bits(bits: u8) -> Self {
        Self(bits & 0x7f)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn get(self, bit: usize) -> bool {
        self.0 >> bit & 1 == 1
    }

    pub fn with(self, bit: usize) -> Self {
        Self(self.0 | 1 << bit)
    }

    pub fn count(self) -> u32 {
        self.0.count_ones()
    }
}

impl fmt::Display for ContactLabel7 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in 0..7 {
            f.write_str(if self.get(b) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl std::str::FromStr for ContactLabel7 {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.len() != 7 || !s.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(Error::Invalid(format!("contact label must be 7 binary digits, got {s:?}")));
        }
        Ok(Self(s.bytes().enumerate().fold(0, |acc, (i, b)| acc | ((b - b'0') << i))))
    }
}

impl TryFrom<String> for ContactLabel7 {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ContactLabel7> for String {
    fn from(l: ContactLabel7) -> String {
        l.to_string()
    }
}

fn check_lengths(hand_contact: &ContactMap, part_label: &[PartLabel17]) -> Result<()> {
    if hand_contact.len() != part_label.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} contact bits vs {} part labels",
            hand_contact.len(),
            part_label.len()
        )));
    }
    Ok(())
}

/// Sets category bit `c` when at least `min_hits` contact vertices fall in it.
pub fn contact_label7(hand_contact: &ContactMap, part_label: &[PartLabel17], min_hits: usize) -> Result<ContactLabel7> {
    check_lengths(hand_contact, part_label)?;
    let mut hits = [0usize; 7];
    for (&on, label) in hand_contact.bits().iter().zip(part_label) {
        if on {
            hits[label.category()] += 1;
        }
    }
    Ok((0..7).filter(|&c| hits[c] >= min_hits.max(1)).fold(ContactLabel7::default(), ContactLabel7::with))
}

/// Bitset over the 17 parts with at least `min_hits` contact vertices.
pub fn contact_parts17(hand_contact: &ContactMap, part_label: &[PartLabel17], min_hits: usize) -> Result<u32> {
    check_lengths(hand_contact, part_label)?;
    let mut hits = [0usize; 17];
    for (&on, label) in hand_contact.bits().iter().zip(part_label) {
        if on {
            hits[label.index()] += 1;
        }
    }
    Ok((0..17).filter(|&p| hits[p] >= min_hits.max(1)).fold(0u32, |acc, p| acc | 1 << p))
}

/// Oversamples every distinct label up to the largest class count.
///
/// The output lists every original index once, in order, followed by the
/// extra draws (with replacement) for each under-represented class, classes
/// taken in order of first appearance.
pub fn balance_resample(labels: &[ContactLabel7], seed: u64) -> Result<Vec<usize>> {
    if labels.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut classes: BTreeMap<ContactLabel7, Vec<usize>> = BTreeMap::new();
    let mut first_seen = Vec::new();
    for (i, &l) in labels.iter().enumerate() {
        let members = classes.entry(l).or_default();
        if members.is_empty() {
            first_seen.push(l);
        }
        members.push(i);
    }
    let target = classes.values().map(Vec::len).max().unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<usize> = (0..labels.len()).collect();
    for label in first_seen {
        let members = &classes[&label];
        out.extend((members.len()..target).map(|_| members[rng.gen_range(0..members.len())]));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(bits: &[bool]) -> ContactMap {
        ContactMap::new(bits.to_vec())
    }

    #[test]
    fn aggregation_is_total_and_surjective() {
        let mut hit = [0; 7];
        for p in 0..17u8 {
            hit[PartLabel17::try_from(p).unwrap().category()] += 1;
        }
        assert!(hit.iter().all(|&n| n > 0));
        assert_eq!(hit.iter().sum::<usize>(), 17);
        assert_eq!(PartLabel17::finger(1, FingerPart::Nail).category(), 1);
        assert_eq!(PartLabel17::finger(4, FingerPart::Knuckle).category(), ContactLabel7::DORSAL);
        assert_eq!(PartLabel17::PALM.category(), ContactLabel7::PALMAR);
        assert!(PartLabel17::try_from(17).is_err());
    }

    #[test]
    fn label_strings() {
        let l: ContactLabel7 = "0101010".parse().unwrap();
        assert!(l.get(1) && l.get(3) && l.get(5) && !l.get(0));
        assert_eq!(l.to_string(), "0101010");
        assert!("01".parse::<ContactLabel7>().is_err());
        assert_eq!(serde_json::to_string(&l).unwrap(), "\"0101010\"");
    }

    #[test]
    fn label7_examples() {
        let thumb_pad = PartLabel17::finger(0, FingerPart::Pad);
        let index_nail = PartLabel17::finger(1, FingerPart::Nail);
        let labels = vec![thumb_pad, thumb_pad, thumb_pad, PartLabel17::PALM, PartLabel17::PALM, PartLabel17::PALM, index_nail, index_nail, index_nail];
        assert_eq!(contact_label7(&map(&[false; 9]), &labels, 3).unwrap().to_string(), "0000000");
        let thumb_only = map(&[true, true, true, false, false, false, false, false, false]);
        assert_eq!(contact_label7(&thumb_only, &labels, 3).unwrap().to_string(), "1000000");
        let palm_and_nail = map(&[false, false, false, true, true, true, true, true, true]);
        assert_eq!(contact_label7(&palm_and_nail, &labels, 3).unwrap().to_string(), "0100010");
        // below min_hits
        let sparse = map(&[true, true, false, false, false, false, false, false, false]);
        assert_eq!(contact_label7(&sparse, &labels, 3).unwrap().bits(), 0);
        assert!(contact_label7(&map(&[true]), &labels, 3).is_err());
        assert_eq!(contact_parts17(&palm_and_nail, &labels, 3).unwrap(), 1 << 15 | 1 << 4);
    }

    #[test]
    fn resample_examples() {
        let a = ContactLabel7::from_bits(1);
        let b = ContactLabel7::from_bits(2);
        let c = ContactLabel7::from_bits(4);
        assert_eq!(balance_resample(&[a; 6], 3).unwrap(), (0..6).collect::<Vec<_>>());

        let labels: Vec<_> = (0..10).map(|i| if i < 8 { a } else { b }).collect();
        let out = balance_resample(&labels, 3).unwrap();
        assert_eq!(out.len(), 16);
        assert_eq!(out.iter().filter(|&&i| labels[i] == a).count(), 8);
        assert_eq!(out.iter().filter(|&&i| labels[i] == b).count(), 8);
        assert_eq!(out, balance_resample(&labels, 3).unwrap());

        let three: Vec<_> = (0..15).map(|i| [a, b, c][i % 3]).collect();
        assert_eq!(balance_resample(&three, 1).unwrap(), (0..15).collect::<Vec<_>>());
        assert!(balance_resample(&[], 0).is_err());
    }
}

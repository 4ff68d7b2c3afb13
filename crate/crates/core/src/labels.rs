//! Track labels that carry their own lineage.
//!
//! A label is a flat list of `(time, index)` pairs. The first pair records the
//! birth event, every following pair records a spawn event appended to the
//! parent's label. The text form joins all integers with commas, so the second
//! generation track spawned at scan 56 from `1,1,10,1` prints as
//! `1,1,10,1,56,1`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;

use crate::error::LabelError;

/// Scan index.
pub type Scan = u32;

/// One `(time, index)` event on a label path.
pub type LabelEvent = (Scan, u32);

/// Lineage-encoding track identity.
///
/// Ordering is lexicographic over the flattened integer sequence, so a parent
/// always sorts immediately before its own descendants.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(SmallVec<[LabelEvent; 3]>);

/// Which part of the next-scan label space a label falls into.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelClass {
    /// Already present at the current scan.
    Surviving,
    /// Spontaneous birth at the next scan.
    Birth,
    /// Spawned from an existing track at the next scan.
    Spawn,
}

impl Label {
    /// Label of a track born at `time` from birth region `index`.
    pub fn birth(time: Scan, index: u32) -> Result<Self, LabelError> {
        if index == 0 {
            return Err(LabelError::ZeroIndex);
        }
        let mut path = SmallVec::new();
        path.push((time, index));
        Ok(Label(path))
    }

    /// Label of the `index`-th object spawned from `parent` at `time`.
    pub fn spawn(parent: &Label, time: Scan, index: u32) -> Result<Self, LabelError> {
        if index == 0 {
            return Err(LabelError::ZeroIndex);
        }
        let last = parent.last_time();
        if time <= last {
            return Err(LabelError::NonIncreasingTime { parent: last, time });
        }
        let mut path = parent.0.clone();
        path.push((time, index));
        Ok(Label(path))
    }

    /// Builds a label from an explicit event path.
    pub fn from_path(path: &[LabelEvent]) -> Result<Self, LabelError> {
        let (&(t0, i0), rest) = path.split_first().ok_or(LabelError::Empty)?;
        let mut label = Label::birth(t0, i0)?;
        for &(t, i) in rest {
            label = Label::spawn(&label, t, i)?;
        }
        Ok(label)
    }

    pub fn path(&self) -> &[LabelEvent] {
        &self.0
    }

    /// Number of spawn events between this track and its birth root.
    pub fn generation(&self) -> usize {
        self.0.len() - 1
    }

    pub fn birth_time(&self) -> Scan {
        self.0[0].0
    }

    /// Time of the most recent event on the path (birth or spawn).
    pub fn last_time(&self) -> Scan {
        self.0[self.0.len() - 1].0
    }

    /// The parent label, or `None` for a birth label.
    pub fn ancestor(&self) -> Option<Label> {
        if self.0.len() < 2 {
            return None;
        }
        let mut path = self.0.clone();
        path.pop();
        Some(Label(path))
    }

    /// The generation-0 label this lineage started from.
    pub fn root(&self) -> Label {
        let mut path = SmallVec::new();
        path.push(self.0[0]);
        Label(path)
    }

    /// True when `self` is a strict prefix of `other`.
    pub fn is_ancestor_of(&self, other: &Label) -> bool {
        self.0.len() < other.0.len() && other.0.starts_with(&self.0)
    }

    /// Classify against the label space of the scan `next`.
    pub fn classify(&self, next: Scan) -> LabelClass {
        if self.last_time() < next {
            LabelClass::Surviving
        } else if self.0.len() == 1 {
            LabelClass::Birth
        } else {
            LabelClass::Spawn
        }
    }

    /// Flattened integer sequence.
    pub fn to_ints(&self) -> Vec<u32> {
        self.0.iter().flat_map(|&(t, i)| [t, i]).collect()
    }
}

/// `⊎ {(ℓ, next, j) : j ∈ 1..=per_parent}` over all parents, in canonical order.
pub fn spawn_label_space<'a, I>(parents: I, next: Scan, per_parent: u32) -> Vec<Label>
where
    I: IntoIterator<Item = &'a Label>,
{
    let mut out = Vec::new();
    for parent in parents {
        for j in 1..=per_parent {
            // parents always predate `next` in a running filter
            if let Ok(label) = Label::spawn(parent, next, j) {
                out.push(label);
            }
        }
    }
    out.sort();
    out
}

/// Labels of the next scan split into surviving, birth and spawn spaces.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabelSpacePartition {
    pub surviving: BTreeSet<Label>,
    pub births: BTreeSet<Label>,
    pub spawns: BTreeSet<Label>,
}

impl LabelSpacePartition {
    pub fn from_labels<'a, I>(labels: I, next: Scan) -> Self
    where
        I: IntoIterator<Item = &'a Label>,
    {
        let mut part = LabelSpacePartition::default();
        for label in labels {
            let set = match label.classify(next) {
                LabelClass::Surviving => &mut part.surviving,
                LabelClass::Birth => &mut part.births,
                LabelClass::Spawn => &mut part.spawns,
            };
            set.insert(label.clone());
        }
        part
    }

    pub fn is_disjoint(&self) -> bool {
        self.surviving.is_disjoint(&self.births)
            && self.surviving.is_disjoint(&self.spawns)
            && self.births.is_disjoint(&self.spawns)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, (t, i)) in self.0.iter().enumerate() {
            if n > 0 {
                f.write_str(",")?;
            }
            write!(f, "{t},{i}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({self})")
    }
}

impl FromStr for Label {
    type Err = LabelError;

    /// Accepts `1,1,10,1` as well as the parenthesised `(1,1,10,1)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let body = s.trim();
        let body = body
            .strip_prefix('(')
            .and_then(|b| b.strip_suffix(')'))
            .unwrap_or(body);
        let ints = body
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<u32>()
                    .map_err(|_| LabelError::Parse(s.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if ints.is_empty() || ints.len() % 2 != 0 {
            return Err(LabelError::Parse(s.to_string()));
        }
        let path: Vec<LabelEvent> = ints.chunks(2).map(|c| (c[0], c[1])).collect();
        Label::from_path(&path)
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::png::{read_labels, write_labels};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceClass {
    Vehicle,
    Road,
    Other,
}

impl InstanceClass {
    pub fn as_str(self) -> &'static str {
        match self {
            InstanceClass::Vehicle => "vehicle",
            InstanceClass::Road => "road",
            InstanceClass::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "vehicle" => Some(InstanceClass::Vehicle),
            "road" => Some(InstanceClass::Road),
            "other" => Some(InstanceClass::Other),
            _ => None,
        }
    }
}

/// Per-pixel instance ids (0 = background) with a class per instance.
///
/// On disk the ids are a 16-bit PNG and the classes a sidecar text file at
/// `<png path>.classes` holding `id<TAB>class` lines. Ids present in the
/// image but absent from the class map are `other`.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceMask {
    width: u32,
    height: u32,
    labels: Vec<u16>,
    classes: BTreeMap<u16, InstanceClass>,
}

impl InstanceMask {
    pub fn new(
        width: u32,
        height: u32,
        labels: Vec<u16>,
        classes: BTreeMap<u16, InstanceClass>,
    ) -> Result<Self> {
        if labels.len() != width as usize * height as usize {
            return Err(Error::validation(format!(
                "{width}x{height} instance mask needs {} labels, got {}",
                width as usize * height as usize,
                labels.len()
            )));
        }
        if classes.contains_key(&0) {
            return Err(Error::validation("instance id 0 is reserved for background"));
        }
        let present: BTreeSet<u16> = labels.iter().copied().collect();
        if let Some(id) = classes.keys().find(|id| !present.contains(id)) {
            return Err(Error::validation(format!(
                "class map references instance {id} absent from the labels"
            )));
        }
        Ok(Self {
            width,
            height,
            labels,
            classes,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    pub fn classes(&self) -> &BTreeMap<u16, InstanceClass> {
        &self.classes
    }

    pub fn class_of(&self, id: u16) -> Option<InstanceClass> {
        if id == 0 {
            return None;
        }
        Some(self.classes.get(&id).copied().unwrap_or(InstanceClass::Other))
    }

    /// Distinct non-background ids in ascending order.
    pub fn instance_ids(&self) -> Vec<u16> {
        let ids: BTreeSet<u16> = self.labels.iter().copied().filter(|&id| id != 0).collect();
        ids.into_iter().collect()
    }

    /// Pixels belonging to any instance of `class`.
    pub fn class_mask(&self, class: InstanceClass) -> Vec<bool> {
        self.labels
            .iter()
            .map(|&id| self.class_of(id) == Some(class))
            .collect()
    }
}

pub fn classes_sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".classes");
    PathBuf::from(s)
}

pub fn read_instance_mask(path: impl AsRef<Path>) -> Result<InstanceMask> {
    let path = path.as_ref();
    let (w, h, labels) = read_labels(path)?;
    let sidecar = classes_sidecar(path);
    let text = fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
    let mut classes = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |reason: String| Error::Format {
            what: "instance class map",
            path: sidecar.clone(),
            reason: format!("line {}: {reason}", n + 1),
        };
        let (id, class) = line
            .split_once('\t')
            .ok_or_else(|| bad("expected `id<TAB>class`".into()))?;
        let id: u16 = id.parse().map_err(|_| bad(format!("bad id {id:?}")))?;
        let class = InstanceClass::parse(class).ok_or_else(|| bad(format!("unknown class {class:?}")))?;
        if classes.insert(id, class).is_some() {
            return Err(bad(format!("duplicate id {id}")));
        }
    }
    InstanceMask::new(w, h, labels, classes)
}

pub fn write_instance_mask(mask: &InstanceMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_labels(mask.width, mask.height, &mask.labels, path)?;
    let mut text = String::new();
    for (id, class) in &mask.classes {
        text.push_str(&format!("{id}\t{}\n", class.as_str()));
    }
    let sidecar = classes_sidecar(path);
    fs::write(&sidecar, text).map_err(|e| Error::io(&sidecar, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dangling_class_entry_rejected() {
        let classes = BTreeMap::from([(1, InstanceClass::Vehicle), (7, InstanceClass::Road)]);
        assert!(InstanceMask::new(2, 1, vec![0, 1], classes).is_err());
    }

    #[test]
    fn unlisted_ids_are_other() {
        let classes = BTreeMap::from([(1, InstanceClass::Vehicle)]);
        let m = InstanceMask::new(3, 1, vec![0, 1, 2], classes).unwrap();
        assert_eq!(m.class_of(0), None);
        assert_eq!(m.class_of(2), Some(InstanceClass::Other));
        assert_eq!(m.instance_ids(), vec![1, 2]);
        assert_eq!(m.class_mask(InstanceClass::Vehicle), vec![false, true, false]);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("inst.png");
        let classes = BTreeMap::from([(3, InstanceClass::Road), (9, InstanceClass::Vehicle)]);
        let m = InstanceMask::new(2, 2, vec![3, 3, 9, 0], classes).unwrap();
        write_instance_mask(&m, &path).unwrap();
        assert_eq!(read_instance_mask(&path).unwrap(), m);
    }
}

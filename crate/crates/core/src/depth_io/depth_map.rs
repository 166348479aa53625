use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What a depth map holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthKind {
    /// Measured depth in meters.
    GroundTruth,
    /// Network output lacking metric units; sigmoid-headed estimators emit
    /// values in (0, 1] but this is not enforced.
    UpToScale,
    /// Prediction in meters.
    AbsolutePrediction,
}

impl DepthKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DepthKind::GroundTruth => "ground_truth",
            DepthKind::UpToScale => "up_to_scale",
            DepthKind::AbsolutePrediction => "absolute_prediction",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ground_truth" => Some(DepthKind::GroundTruth),
            "up_to_scale" => Some(DepthKind::UpToScale),
            "absolute_prediction" => Some(DepthKind::AbsolutePrediction),
            _ => None,
        }
    }
}

/// Dense row-major depth map with an explicit validity mask.
///
/// Every valid pixel holds a finite value greater than zero. Invalid pixels
/// keep whatever value they were read with.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: u32,
    height: u32,
    values: Vec<f64>,
    valid: Vec<bool>,
    kind: DepthKind,
}

pub(crate) fn is_valid_depth(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

impl DepthMap {
    /// Builds a map whose mask marks every finite positive value valid.
    pub fn from_values(width: u32, height: u32, values: Vec<f64>, kind: DepthKind) -> Result<Self> {
        check_len(width, height, values.len())?;
        let valid = values.iter().map(|&v| is_valid_depth(v)).collect();
        Ok(Self {
            width,
            height,
            values,
            valid,
            kind,
        })
    }

    /// Builds a map from values and an explicit mask.
    pub fn new(
        width: u32,
        height: u32,
        values: Vec<f64>,
        valid: Vec<bool>,
        kind: DepthKind,
    ) -> Result<Self> {
        check_len(width, height, values.len())?;
        if valid.len() != values.len() {
            return Err(Error::validation(format!(
                "mask has {} entries, values have {}",
                valid.len(),
                values.len()
            )));
        }
        if let Some(i) = (0..values.len()).find(|&i| valid[i] && !is_valid_depth(values[i])) {
            return Err(Error::validation(format!(
                "pixel {i} marked valid with non-positive depth {}",
                values[i]
            )));
        }
        Ok(Self {
            width,
            height,
            values,
            valid,
            kind,
        })
    }

    /// All-invalid map.
    pub fn empty(width: u32, height: u32, kind: DepthKind) -> Self {
        let n = width as usize * height as usize;
        Self {
            width,
            height,
            values: vec![0.0; n],
            valid: vec![false; n],
            kind,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn kind(&self) -> DepthKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn index(&self, col: u32, row: u32) -> usize {
        row as usize * self.width as usize + col as usize
    }

    /// Depth at `(col, row)` if valid.
    pub fn get(&self, col: u32, row: u32) -> Option<f64> {
        let i = self.index(col, row);
        self.valid[i].then(|| self.values[i])
    }

    pub fn is_valid(&self, i: usize) -> bool {
        self.valid[i]
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Stores `depth` at `i` and updates the mask from it.
    pub fn set(&mut self, i: usize, depth: f64) {
        self.values[i] = depth;
        self.valid[i] = is_valid_depth(depth);
    }

    pub fn invalidate(&mut self, i: usize) {
        self.valid[i] = false;
    }

    /// Copy with every valid value multiplied by `factor` (> 0).
    pub fn scaled(&self, factor: f64, kind: DepthKind) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::validation(format!("scale factor {factor} must be positive")));
        }
        let values = self
            .values
            .iter()
            .zip(&self.valid)
            .map(|(&v, &ok)| if ok { v * factor } else { v })
            .collect();
        Ok(Self {
            values,
            kind,
            ..self.clone()
        })
    }

    pub fn with_kind(mut self, kind: DepthKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn same_shape(&self, other: &DepthMap) -> bool {
        self.width == other.width && self.height == other.height
    }
}

fn check_len(width: u32, height: u32, len: usize) -> Result<()> {
    let expected = width as usize * height as usize;
    if expected != len {
        return Err(Error::validation(format!(
            "{width}x{height} map needs {expected} values, got {len}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_follows_values() {
        let m = DepthMap::from_values(2, 2, vec![1.0, 0.0, f64::NAN, -3.0], DepthKind::GroundTruth).unwrap();
        assert_eq!(m.valid_mask(), &[true, false, false, false]);
        assert_eq!(m.get(0, 0), Some(1.0));
        assert_eq!(m.get(1, 0), None);
    }

    #[test]
    fn explicit_mask_checked() {
        assert!(DepthMap::new(1, 1, vec![0.0], vec![true], DepthKind::GroundTruth).is_err());
        assert!(DepthMap::new(1, 2, vec![1.0], vec![true], DepthKind::GroundTruth).is_err());
    }

    #[test]
    fn scaling_leaves_invalid_alone() {
        let m = DepthMap::from_values(3, 1, vec![0.5, 0.0, 0.25], DepthKind::UpToScale).unwrap();
        let s = m.scaled(100.0, DepthKind::AbsolutePrediction).unwrap();
        assert_eq!(s.values(), &[50.0, 0.0, 25.0]);
        assert_eq!(s.kind(), DepthKind::AbsolutePrediction);
        assert!(m.scaled(0.0, DepthKind::AbsolutePrediction).is_err());
    }
}

use serde::{Deserialize, Serialize};

/// Evaluation region applied before computing metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalCrop {
    None,
    /// Eigen-protocol border crop.
    Garg,
}

impl EvalCrop {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalCrop::None => "none",
            EvalCrop::Garg => "garg",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(EvalCrop::None),
            "garg" => Some(EvalCrop::Garg),
            _ => None,
        }
    }

    pub fn rect(self, width: u32, height: u32) -> PixelRect {
        match self {
            EvalCrop::None => PixelRect::full(width, height),
            EvalCrop::Garg => garg_crop(width, height),
        }
    }
}

/// Half-open pixel rectangle `[row_start, row_end) x [col_start, col_end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelRect {
    pub row_start: u32,
    pub row_end: u32,
    pub col_start: u32,
    pub col_end: u32,
}

impl PixelRect {
    pub fn full(width: u32, height: u32) -> Self {
        Self {
            row_start: 0,
            row_end: height,
            col_start: 0,
            col_end: width,
        }
    }

    pub fn contains(&self, col: u32, row: u32) -> bool {
        (self.row_start..self.row_end).contains(&row) && (self.col_start..self.col_end).contains(&col)
    }

    pub fn is_empty(&self) -> bool {
        self.row_start >= self.row_end || self.col_start >= self.col_end
    }
}

const GARG_ROWS: (f64, f64) = (0.408_108_11, 0.991_891_89);
const GARG_COLS: (f64, f64) = (0.035_947_71, 0.964_052_29);

/// Garg crop: rows `[0.40810811 h, 0.99189189 h)`, cols
/// `[0.03594771 w, 0.96405229 w)`, bounds floored.
pub fn garg_crop(width: u32, height: u32) -> PixelRect {
    let (h, w) = (f64::from(height), f64::from(width));
    PixelRect {
        row_start: (GARG_ROWS.0 * h).floor() as u32,
        row_end: (GARG_ROWS.1 * h).floor() as u32,
        col_start: (GARG_COLS.0 * w).floor() as u32,
        col_end: (GARG_COLS.1 * w).floor() as u32,
    }
}

//! Dataset ingestion, label rasterization, augmentation and splits.

mod augment;
mod cornell;
mod export;
mod io;
mod jacquard;
mod labels;
mod normalize;
mod sample;
mod split;

pub use augment::{augment, augment_with, warp_plane, AugmentParams, MAX_JITTER, MIN_ZOOM};
pub use export::{write_cornell, write_jacquard};
pub use cornell::{depth_from_point_cloud, load_cornell, parse_cornell_rectangles, parse_object_index};
pub use io::{read_depth_tiff, read_rgb, write_depth_tiff, write_rgb};
pub use jacquard::{load_jacquard, parse_jacquard_line, scale_short_side};
pub use labels::{label_band, rasterize_labels, WIDTH_SCALE};
pub use normalize::{inpaint_depth, normalize_inputs};
pub use sample::{GraspSample, Modality};
pub use split::{split, SplitMode};

/// Ground-truth planes share the layout of predicted grasp maps.
pub type GroundTruthMaps = crate::grasp::GraspMaps;

/// Which on-disk layout a dataset root follows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Cornell,
    Jacquard,
}

impl DatasetKind {
    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::Cornell => "cornell",
            DatasetKind::Jacquard => "jacquard",
        }
    }

    /// Loads every sample under `root`, cropped to `size x size`.
    pub fn load(self, root: &std::path::Path, size: usize) -> crate::Result<Vec<GraspSample>> {
        match self {
            DatasetKind::Cornell => load_cornell(root, size),
            DatasetKind::Jacquard => load_jacquard(root, size),
        }
    }
}

impl std::str::FromStr for DatasetKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cornell" => Ok(DatasetKind::Cornell),
            "jacquard" => Ok(DatasetKind::Jacquard),
            other => Err(crate::Error::Config(format!("unknown dataset `{other}` (expected cornell or jacquard)"))),
        }
    }
}

impl std::fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

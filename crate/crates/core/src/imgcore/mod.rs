//! Raster and tabular types shared by every stage, plus their file formats.
//!
//! All constructors validate their invariants, so a value of any of these
//! types is always well-formed.

mod classes;
pub mod io;
mod raster;
mod table;
mod tabular;

pub use classes::{Attribute, DiseaseClass};
pub use io::{
    load_mask_png, load_probmap, load_rgb_png, save_mask_png, save_probmap, save_probmap_png16,
    save_rgb_png,
};
pub use raster::{BinaryMask, ProbMap, RgbImage};
pub use table::{load_class_table, ClassTable, ProbTable, CLASS_COLUMNS};
pub use tabular::{ClassDistribution, ConfusionMatrix, DISTRIBUTION_SUM_TOLERANCE};

pub(crate) use tabular::argmax_index;

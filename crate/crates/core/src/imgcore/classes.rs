use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// The seven disease categories, in the canonical column order of
/// classification tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DiseaseClass {
    Mel,
    Nv,
    Bcc,
    Akiec,
    Bkl,
    Df,
    Vasc,
}

impl DiseaseClass {
    pub const COUNT: usize = 7;

    pub const ALL: [DiseaseClass; 7] = [
        DiseaseClass::Mel,
        DiseaseClass::Nv,
        DiseaseClass::Bcc,
        DiseaseClass::Akiec,
        DiseaseClass::Bkl,
        DiseaseClass::Df,
        DiseaseClass::Vasc,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Column name used in CSV headers.
    pub fn code(self) -> &'static str {
        match self {
            DiseaseClass::Mel => "MEL",
            DiseaseClass::Nv => "NV",
            DiseaseClass::Bcc => "BCC",
            DiseaseClass::Akiec => "AKIEC",
            DiseaseClass::Bkl => "BKL",
            DiseaseClass::Df => "DF",
            DiseaseClass::Vasc => "VASC",
        }
    }
}

impl fmt::Display for DiseaseClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for DiseaseClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Self::ALL
            .into_iter()
            .find(|c| c.code().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::invalid("disease class", format!("unknown code {s:?}")))
    }
}

/// Dermoscopic attributes, in the channel order of 5-channel probability maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Attribute {
    PigmentNetwork,
    NegativeNetwork,
    Streaks,
    MiliaLikeCysts,
    Globules,
}

impl Attribute {
    pub const COUNT: usize = 5;

    pub const ALL: [Attribute; 5] = [
        Attribute::PigmentNetwork,
        Attribute::NegativeNetwork,
        Attribute::Streaks,
        Attribute::MiliaLikeCysts,
        Attribute::Globules,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Attribute::PigmentNetwork => "pigment_network",
            Attribute::NegativeNetwork => "negative_network",
            Attribute::Streaks => "streaks",
            Attribute::MiliaLikeCysts => "milia_like_cyst",
            Attribute::Globules => "globules",
        }
    }
}

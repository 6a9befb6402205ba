use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{StaticFeatures, STATIC_BLOCKS};

/// Option labels per static block, in encoding order. Labels are matched
/// verbatim (after trimming); a few unambiguous aliases are accepted.
pub const PROFILE_OPTIONS: [(&str, &[&str]); 8] = [
    ("exhaled_co", &["<10", "[10, 20]", "[20, 30]", ">30"]),
    ("years_smoked", &["<10", "[10, 20]", ">20"]),
    ("age", &["<25", "[20, 25]", ">50"]),
    ("sex", &["Male", "Female"]),
    ("race", &["White", "American India", "Asian", "Black", "Hispanic", "Other"]),
    ("ethnicity", &["Non-Hispanic", "Hispanic", "Unknown"]),
    ("education", &["Elementary", "Middle", "High", "Coll/Tech", "College Graduate"]),
    ("marital", &["Single", "Separated", "Widowed", "Married", "Divorced"]),
];

const ALIASES: [(&str, &str, usize); 2] = [("age", "[25, 50]", 1), ("race", "American Indian", 1)];

/// A profile answer: either an option label or, for the numeric blocks
/// (CO ppm, years smoked, age), a measured value that is binned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Category {
    Value(f64),
    Label(String),
}

impl From<&str> for Category {
    fn from(s: &str) -> Self {
        Category::Label(s.to_string())
    }
}

impl From<f64> for Category {
    fn from(v: f64) -> Self {
        Category::Value(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomeLocation {
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantProfile {
    #[serde(default)]
    pub id: String,
    pub cigarettes_per_day: f64,
    pub home_location: HomeLocation,
    pub exhaled_co: Category,
    pub years_smoked: Category,
    pub age: Category,
    pub sex: Category,
    pub race: Category,
    pub ethnicity: Category,
    pub education: Category,
    pub marital: Category,
}

impl ParticipantProfile {
    fn answers(&self) -> [&Category; 8] {
        [
            &self.exhaled_co,
            &self.years_smoked,
            &self.age,
            &self.sex,
            &self.race,
            &self.ethnicity,
            &self.education,
            &self.marital,
        ]
    }
}

fn bin_value(block: usize, v: f64) -> Option<usize> {
    if !v.is_finite() || v < 0.0 {
        return None;
    }
    let idx = match block {
        0 => match v {
            v if v < 10.0 => 0,
            v if v <= 20.0 => 1,
            v if v <= 30.0 => 2,
            _ => 3,
        },
        1 => match v {
            v if v < 10.0 => 0,
            v if v <= 20.0 => 1,
            _ => 2,
        },
        2 => match v {
            v if v < 25.0 => 0,
            v if v <= 50.0 => 1,
            _ => 2,
        },
        _ => return None,
    };
    Some(idx)
}

fn choose(block: usize, answer: &Category) -> Result<usize> {
    let (name, options) = PROFILE_OPTIONS[block];
    let label = match answer {
        Category::Value(v) => {
            return bin_value(block, *v).ok_or_else(|| Error::Encoding { block: name, label: v.to_string() })
        }
        Category::Label(s) => s.trim(),
    };
    if let Some(i) = options.iter().position(|o| *o == label) {
        return Ok(i);
    }
    ALIASES
        .iter()
        .find(|(b, alias, _)| *b == name && *alias == label)
        .map(|(_, _, i)| *i)
        .ok_or_else(|| Error::Encoding { block: name, label: label.to_string() })
}

/// One-hot encodes all eight static blocks into a 31-dimensional vector.
pub fn encode_static(profile: &ParticipantProfile) -> Result<StaticFeatures> {
    debug_assert_eq!(PROFILE_OPTIONS.map(|(_, o)| o.len()), STATIC_BLOCKS.map(|(_, n)| n));
    let mut choices = [0usize; 8];
    for (block, answer) in profile.answers().into_iter().enumerate() {
        choices[block] = choose(block, answer)?;
    }
    StaticFeatures::from_choices(choices)
}

/// Reads a JSON object keyed by participant id. The key overrides any `id` field.
pub fn load_profiles<R: Read>(reader: R) -> Result<BTreeMap<String, ParticipantProfile>> {
    let raw: BTreeMap<String, ParticipantProfile> = serde_json::from_reader(reader)?;
    raw.into_iter()
        .map(|(id, mut p)| {
            if !(p.cigarettes_per_day > 0.0 && p.cigarettes_per_day.is_finite()) {
                return Err(Error::Parse(format!("participant {id}: cigarettes_per_day must be > 0")));
            }
            p.id = id.clone();
            encode_static(&p)?;
            Ok((id, p))
        })
        .collect()
}

// SPDX-License-Identifier: Apache-2.0

//! Bundled experiment configs with pinned seeds.

use std::fmt;
use std::str::FromStr;

use super::config::ExperimentConfig;
use crate::{Error, Result};

pub const SUITE_NAMES: [&str; 6] = [
    "fully_connected",
    "hourglass",
    "cube",
    "long_link",
    "realistic",
    "torus",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scale {
    #[default]
    Desk,
    Full,
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "full" => Ok(Scale::Full),
            other => Err(Error::Usage(format!("unknown scale '{other}' (desk or full)"))),
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::Desk => "desk",
            Scale::Full => "full",
        })
    }
}

/// Raw config text of a bundled experiment.
pub fn suite_source(name: &str, scale: Scale) -> Result<&'static str> {
    Ok(match (name, scale) {
        ("fully_connected", _) => include_str!("../../configs/fully_connected.cfg"),
        ("hourglass", _) => include_str!("../../configs/hourglass.cfg"),
        ("cube", _) => include_str!("../../configs/cube.cfg"),
        ("long_link", _) => include_str!("../../configs/long_link.cfg"),
        ("realistic", _) => include_str!("../../configs/realistic.cfg"),
        ("torus", Scale::Desk) => include_str!("../../configs/torus.cfg"),
        ("torus", Scale::Full) => include_str!("../../configs/torus_full.cfg"),
        (other, _) => {
            return Err(Error::Usage(format!(
                "unknown suite '{other}', expected one of {}",
                SUITE_NAMES.join(", ")
            )))
        }
    })
}

pub fn suite_config(name: &str, scale: Scale) -> Result<ExperimentConfig> {
    suite_source(name, scale)?.parse()
}

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::RunConfig;
use crate::chart::ChartMode;
use crate::error::{Error, Result};
use crate::scene::{BS_DOWNLINK, BS_UPLINK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LbbInput {
    TrueLocation,
    Chart,
}

/// Which channels the beamformer is trained and evaluated against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    /// Uplink channel at BS1.
    #[serde(rename = "bs1_ul")]
    UplinkBs1,
    /// Downlink channel from BS2.
    #[serde(rename = "bs2_dl")]
    DownlinkBs2,
}

impl Target {
    pub fn band(self) -> usize {
        match self {
            Target::UplinkBs1 => BS_UPLINK,
            Target::DownlinkBs2 => BS_DOWNLINK,
        }
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bs1_ul" => Ok(Target::UplinkBs1),
            "bs2_dl" => Ok(Target::DownlinkBs2),
            other => Err(Error::Config(format!("unknown target '{other}' (expected bs1_ul or bs2_dl)"))),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::UplinkBs1 => "bs1_ul",
            Target::DownlinkBs2 => "bs2_dl",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSpec {
    pub id: String,
    pub lbb_input: LbbInput,
    pub chart_mode: Option<ChartMode>,
    /// Chart dimension; unused for true-location inputs.
    pub chart_dim: usize,
    pub target: Target,
    /// False for anything other than the five shipped presets.
    pub preset: bool,
}

/// Chart dimension of the reduced-dimension preset.
pub const REDUCED_DIM: usize = 3;

pub const PRESETS: [&str; 5] = ["V1", "V2", "V3", "V4", "V5"];

impl VariantSpec {
    /// One of the five preset variants, with chart dimension taken from
    /// `config` (except V4, which always uses [`REDUCED_DIM`]).
    pub fn preset(id: &str, config: &RunConfig) -> Result<VariantSpec> {
        let d = config.chart.dim;
        let (lbb_input, chart_mode, chart_dim, target) = match id {
            "V1" => (LbbInput::TrueLocation, None, 0, Target::UplinkBs1),
            "V2" => (LbbInput::Chart, Some(ChartMode::OneShot), d, Target::UplinkBs1),
            "V3" => (LbbInput::Chart, Some(ChartMode::OneShot), d, Target::DownlinkBs2),
            "V4" => (LbbInput::Chart, Some(ChartMode::OneShot), REDUCED_DIM, Target::UplinkBs1),
            "V5" => (LbbInput::Chart, Some(ChartMode::OnTheFly), d, Target::DownlinkBs2),
            other => return Err(Error::Config(format!("unknown variant '{other}' (expected V1..V5)"))),
        };
        Ok(VariantSpec { id: id.into(), lbb_input, chart_mode, chart_dim, target, preset: true })
    }

    pub fn custom(id: &str, chart_mode: Option<ChartMode>, chart_dim: usize, target: Target) -> Result<VariantSpec> {
        if chart_mode.is_some() && chart_dim == 0 {
            return Err(Error::Config("chart variants need a positive dimension".into()));
        }
        if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(Error::Config(format!("variant id '{id}' must be alphanumeric")));
        }
        let lbb_input = if chart_mode.is_some() { LbbInput::Chart } else { LbbInput::TrueLocation };
        Ok(VariantSpec { id: id.into(), lbb_input, chart_mode, chart_dim, target, preset: false })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        let c = RunConfig::default();
        let v: Vec<_> = PRESETS.iter().map(|id| VariantSpec::preset(id, &c).unwrap()).collect();
        assert_eq!(v[0].lbb_input, LbbInput::TrueLocation);
        assert_eq!(v[2].target, Target::DownlinkBs2);
        assert_eq!(v[3].chart_dim, 3);
        assert_eq!(v[4].chart_mode, Some(ChartMode::OnTheFly));
        assert!(v.iter().all(|s| s.preset));
        assert!(VariantSpec::preset("V6", &c).is_err());
        assert!(!VariantSpec::custom("mine", None, 0, Target::UplinkBs1).unwrap().preset);
    }

    #[test]
    fn target_names() {
        for t in [Target::UplinkBs1, Target::DownlinkBs2] {
            assert_eq!(t.to_string().parse::<Target>().unwrap(), t);
            assert_eq!(serde_json::to_string(&t).unwrap(), format!("\"{t}\""));
        }
    }
}

//! Method selection and the serialisable parameter set of any method.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::CorrectionConfig;
use crate::conventional::{
    apply_loci, apply_qm, calibrate_loci, calibrate_qm, ConvParams, Correction,
};
use crate::error::{Error, Result};
use crate::markov::{calibrate_mc, McParams};
use crate::series::{DailySeries, PeriodScheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Loci,
    Qm,
    McLoci,
    McQm,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Loci, Method::Qm, Method::McLoci, Method::McQm];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Loci => "loci",
            Method::Qm => "qm",
            Method::McLoci => "mc-loci",
            Method::McQm => "mc-qm",
        }
    }

    pub fn is_markov(self) -> bool {
        matches!(self, Method::McLoci | Method::McQm)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown method '{s}' (expected loci, qm, mc-loci or mc-qm)"
                ))
            })
    }
}

/// Calibrated parameters of one method, tagged by method name in JSON.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum ParamSet {
    Loci(ConvParams),
    Qm(ConvParams),
    McLoci(McParams),
    McQm(McParams),
}

// Derived internally-tagged deserialisation cannot read integer map keys, so
// the tag is read from a JSON value first.
impl<'de> Deserialize<'de> for ParamSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let mut value = serde_json::Value::deserialize(d)?;
        let tag = value
            .as_object_mut()
            .and_then(|o| o.remove("method"))
            .ok_or_else(|| D::Error::missing_field("method"))?;
        let method: Method = serde_json::from_value(tag).map_err(D::Error::custom)?;
        let err = D::Error::custom;
        Ok(match method {
            Method::Loci => ParamSet::Loci(serde_json::from_value(value).map_err(err)?),
            Method::Qm => ParamSet::Qm(serde_json::from_value(value).map_err(err)?),
            Method::McLoci => ParamSet::McLoci(serde_json::from_value(value).map_err(err)?),
            Method::McQm => ParamSet::McQm(serde_json::from_value(value).map_err(err)?),
        })
    }
}

impl ParamSet {
    pub fn method(&self) -> Method {
        match self {
            ParamSet::Loci(_) => Method::Loci,
            ParamSet::Qm(_) => Method::Qm,
            ParamSet::McLoci(_) => Method::McLoci,
            ParamSet::McQm(_) => Method::McQm,
        }
    }

    pub fn warnings(&self) -> &[String] {
        match self {
            ParamSet::Loci(p) | ParamSet::Qm(p) => &p.warnings,
            ParamSet::McLoci(p) | ParamSet::McQm(p) => &p.warnings,
        }
    }

    pub fn apply(&self, model: &DailySeries, scheme: &PeriodScheme) -> Result<Correction> {
        match self {
            ParamSet::Loci(p) => Ok(Correction {
                series: apply_loci(model, p, scheme)?,
                warnings: vec![],
            }),
            ParamSet::Qm(p) => apply_qm(model, p, scheme),
            ParamSet::McLoci(p) => p.apply_loci(model, scheme),
            ParamSet::McQm(p) => p.apply_qm(model, scheme),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::InvalidConfig(format!("serialising parameters: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("parameter file: {e}")))
    }
}

pub fn calibrate(
    method: Method,
    obs: &DailySeries,
    model: &DailySeries,
    scheme: &PeriodScheme,
    cfg: &CorrectionConfig,
) -> Result<ParamSet> {
    Ok(match method {
        Method::Loci => ParamSet::Loci(calibrate_loci(obs, model, scheme, cfg)?),
        Method::Qm => ParamSet::Qm(calibrate_qm(obs, model, scheme, cfg)?),
        Method::McLoci => ParamSet::McLoci(calibrate_mc(obs, model, scheme, cfg, false)?),
        Method::McQm => ParamSet::McQm(calibrate_mc(obs, model, scheme, cfg, true)?),
    })
}

//! Interface designs for `estimate`, given as `key=value` lists.

use std::str::FromStr;

use espim_core::model::{espim_estimated, EspimEstimate, EspimInputs, ModelError, ScreenSpec, TargetSpec};
use serde::Serialize;

/// Parses `WIDTHxHEIGHT`.
pub fn parse_resolution(s: &str) -> Result<(f64, f64), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("`{s}` is not WIDTHxHEIGHT"))?;
    let num = |v: &str| {
        v.trim()
            .parse::<f64>()
            .ok()
            .filter(|n| n.is_finite() && *n > 0.0)
            .ok_or_else(|| format!("`{v}` in `{s}` is not a positive number"))
    };
    Ok((num(w)?, num(h)?))
}

/// A design to score: screen, target geometry, target distance and
/// expected task duration.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub name: String,
    pub screen: ScreenSpec,
    pub target: TargetSpec,
    pub d: f64,
    pub td: f64,
}

impl FromStr for Design {
    type Err = String;

    /// `screen=1920x1080,shape=circle,w=96,d=256,td=60[,h=40][,name=A]`
    fn from_str(s: &str) -> Result<Self, String> {
        let mut name = None;
        let mut screen = None;
        let mut shape = "circle".to_string();
        let (mut w, mut h, mut d, mut td) = (None, None, None, None);
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| format!("`{part}` is not key=value"))?;
            let num = || {
                v.parse::<f64>()
                    .map_err(|_| format!("`{k}` must be a number, got `{v}`"))
            };
            match k {
                "name" => name = Some(v.to_string()),
                "screen" => screen = Some(parse_resolution(v)?),
                "shape" => shape = v.to_string(),
                "w" => w = Some(num()?),
                "h" => h = Some(num()?),
                "d" => d = Some(num()?),
                "td" => td = Some(num()?),
                other => return Err(format!("unknown design key `{other}`")),
            }
        }
        let need = |v: Option<f64>, k: &str| v.ok_or_else(|| format!("design is missing `{k}`"));
        let (sw, sh) = screen.ok_or("design is missing `screen`")?;
        let screen = ScreenSpec::new(sw, sh).map_err(|e| e.to_string())?;
        let w = need(w, "w")?;
        let target = match shape.as_str() {
            "circle" if h.is_none() => TargetSpec::circle(0.0, 0.0, w),
            "circle" => return Err("circles take `w` only".into()),
            "rectangle" => TargetSpec::rectangle(0.0, 0.0, w, need(h, "h")?),
            other => return Err(format!("unknown shape `{other}`")),
        };
        Ok(Design {
            name: name.unwrap_or_default(),
            screen,
            target,
            d: need(d, "d")?,
            td: need(td, "td")?,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DesignScore {
    pub name: String,
    pub estimate: EspimEstimate,
}

impl Design {
    pub fn score(&self) -> Result<EspimEstimate, ModelError> {
        self.target.validate(&self.screen)?;
        let inputs = EspimInputs {
            screen: self.screen,
            aot: self.target.area(),
            d: self.d,
            w: self.target.w,
            anf: 1.0,
            td: self.td,
        };
        espim_estimated(&inputs, self.td)
    }
}

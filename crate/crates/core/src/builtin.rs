//! Named metrics shipped with the engine.

use crate::error::{Error, Result};
use crate::geometry::{ChartBounds, MetricSpec};

/// Chart half-width of the constant-curvature builtin. Keeps the
/// conformal factor away from its singular quadric for `|κ| ≤ 2`.
pub const CONSTCURV_HALF_WIDTH: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub enum Builtin {
    Flat,
    ConstCurv(f64),
    Petean(String),
    PerturbedNonSd,
}

impl Builtin {
    pub fn parse(name: &str) -> Result<Self> {
        let name = name.trim();
        match name {
            "flat" => return Ok(Builtin::Flat),
            "perturbed-nonsd" => return Ok(Builtin::PerturbedNonSd),
            _ => {}
        }
        if let Some(k) = name.strip_prefix("constcurv:") {
            let kappa: f64 = k
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("curvature `{k}` is not a number")))?;
            if !kappa.is_finite() || kappa.abs() > 2.0 {
                return Err(Error::InvalidParameter(format!(
                    "curvature {kappa} outside the supported range [-2, 2]"
                )));
            }
            return Ok(Builtin::ConstCurv(kappa));
        }
        if let Some(f) = name.strip_prefix("petean:") {
            return Ok(Builtin::Petean(f.to_string()));
        }
        Err(Error::InvalidParameter(format!("unknown builtin `{name}`")))
    }

    pub fn name(&self) -> String {
        match self {
            Builtin::Flat => "flat".into(),
            Builtin::ConstCurv(k) => format!("constcurv:{k}"),
            Builtin::Petean(f) => format!("petean:{f}"),
            Builtin::PerturbedNonSd => "perturbed-nonsd".into(),
        }
    }

    pub fn metric(&self) -> Result<MetricSpec> {
        match self {
            Builtin::Flat => flat(),
            Builtin::ConstCurv(k) => constant_curvature(*k),
            Builtin::Petean(f) => Ok(crate::petean::PeteanSpec::parse(f)?.metric().clone()),
            Builtin::PerturbedNonSd => perturbed_non_self_dual(),
        }
    }

    /// Whether `W⁻` vanishes identically for this family.
    pub fn is_self_dual(&self) -> bool {
        !matches!(self, Builtin::PerturbedNonSd)
    }
}

pub fn flat() -> Result<MetricSpec> {
    MetricSpec::parse(
        "flat",
        [
            ["1", "0", "0", "0"],
            ["", "1", "0", "0"],
            ["", "", "-1", "0"],
            ["", "", "", "-1"],
        ],
        ChartBounds::cube(1.0),
    )
}

/// `η / (1 + κ q / 4)²` with `q = x1² + x2² - x3² - x4²`.
pub fn constant_curvature(kappa: f64) -> Result<MetricSpec> {
    let conformal = format!("(1 + ({kappa}) * (x1^2 + x2^2 - x3^2 - x4^2) / 4)^(-2)");
    let neg = format!("-{conformal}");
    MetricSpec::parse(
        &format!("constcurv:{kappa}"),
        [
            [&conformal, "0", "0", "0"],
            ["", &conformal, "0", "0"],
            ["", "", &neg, "0"],
            ["", "", "", &neg],
        ],
        ChartBounds::cube(CONSTCURV_HALF_WIDTH),
    )
}

/// Flat metric with a localized `dx1·dx3` bump. It is neither Einstein nor
/// self-dual.
pub fn perturbed_non_self_dual() -> Result<MetricSpec> {
    let bump = "0.3 * exp(-(x1^2 + x2^2 + x3^2 + x4^2))";
    MetricSpec::parse(
        "perturbed-nonsd",
        [
            ["1", "0", bump, "0"],
            ["", "1", "0", "0"],
            ["", "", "-1", "0"],
            ["", "", "", "-1"],
        ],
        ChartBounds::cube(1.0),
    )
}

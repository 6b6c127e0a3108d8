//! Scenario files.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! protocol = "pp_epr"          # pp_epr | pp_single | pp_dense | kkkp
//! rounds = 10000
//! control_prob = 0.5
//! signal_wavelength_nm = 800.0
//! detector_window_nm = [600.0, 900.0]
//! seed = 42
//! log_rounds = false
//!
//! [filter]
//! enabled = true
//! passband_nm = [799.95, 800.05]
//!
//! [attack]
//! kind = "ipe"                 # no_eve | ipe | ipe_dense | intercept_resend | kkkp_probe
//! lambda_e_nm = 190000.0
//! ```
//!
//! Only `protocol` is required; everything else falls back to the built-in
//! canonical scenario. Unknown keys are rejected.

use pingpong_core::optics::{Band, EVE_WAVELENGTH_NM};
use pingpong_core::{
    Detector, MeasureBasis, OpticalFilter, ProtocolConfig, ProtocolKind, StrategyKind,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolName {
    PpEpr,
    PpSingle,
    PpDense,
    Kkkp,
}

impl From<ProtocolName> for ProtocolKind {
    fn from(name: ProtocolName) -> Self {
        match name {
            ProtocolName::PpEpr => ProtocolKind::PpEpr,
            ProtocolName::PpSingle => ProtocolKind::PpSingle,
            ProtocolName::PpDense => ProtocolKind::PpDense,
            ProtocolName::Kkkp => ProtocolKind::Kkkp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    NoEve,
    Ipe,
    IpeDense,
    InterceptResend,
    KkkpProbe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    pub enabled: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub passband_nm: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSection {
    pub kind: AttackKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_e_nm: Option<f64>,
    /// `"z"`, `"x"`, or `"rotated:<radians>"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_known: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub protocol: ProtocolName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounds: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_prob: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal_wavelength_nm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector_window_nm: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_rounds: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack: Option<AttackSection>,
}

fn constraint(field: &str, message: impl std::fmt::Display) -> CliError {
    CliError::Constraint(format!("{field}: {message}"))
}

fn band(field: &str, [lo, hi]: [f64; 2]) -> Result<Band, CliError> {
    Band::new(lo, hi).map_err(|e| constraint(field, e))
}

pub fn parse_basis(text: &str) -> Result<MeasureBasis, CliError> {
    match text.trim().to_ascii_lowercase().as_str() {
        "z" => Ok(MeasureBasis::Z),
        "x" => Ok(MeasureBasis::X),
        other => other
            .strip_prefix("rotated:")
            .and_then(|angle| angle.trim().parse::<f64>().ok())
            .filter(|angle| angle.is_finite())
            .map(MeasureBasis::Rotated)
            .ok_or_else(|| {
                constraint(
                    "attack.basis",
                    format!("expected z, x or rotated:<radians>, got `{text}`"),
                )
            }),
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn kind(&self) -> ProtocolKind {
        self.protocol.into()
    }

    /// Checks every numeric constraint and builds the run inputs.
    pub fn resolve(&self) -> Result<(ProtocolConfig, StrategyKind), CliError> {
        let mut cfg = ProtocolConfig::canonical(self.kind());
        if let Some(rounds) = self.rounds {
            cfg.rounds = rounds;
        }
        if let Some(c) = self.control_prob {
            cfg.control_prob = c;
        }
        if let Some(nm) = self.signal_wavelength_nm {
            cfg.signal_wavelength_nm = nm;
        }
        if let Some(window) = self.detector_window_nm {
            cfg.detector = Detector::new(band("detector_window_nm", window)?);
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.log_rounds = self.log_rounds.unwrap_or(false);
        if let Some(filter) = &self.filter {
            if filter.enabled {
                let f = match filter.passband_nm {
                    Some(pb) => OpticalFilter::new(band("filter.passband_nm", pb)?),
                    None => OpticalFilter::narrow(cfg.signal_wavelength_nm)
                        .map_err(|e| constraint("filter.passband_nm", e))?,
                };
                cfg.filter = Some(f);
            }
        }
        cfg.validate()
            .map_err(|e| CliError::Constraint(e.to_string()))?;
        let strategy = self.strategy()?;
        strategy
            .validate()
            .map_err(|e| CliError::Constraint(format!("attack: {e}")))?;
        Ok((cfg, strategy))
    }

    fn strategy(&self) -> Result<StrategyKind, CliError> {
        let Some(attack) = &self.attack else {
            return Ok(StrategyKind::NoEve);
        };
        let reject = |field: &str, present: bool| {
            if present {
                Err(constraint(
                    &format!("attack.{field}"),
                    format!("not used by {:?}", attack.kind),
                ))
            } else {
                Ok(())
            }
        };
        let lambda = attack.lambda_e_nm.unwrap_or(EVE_WAVELENGTH_NM);
        match attack.kind {
            AttackKind::NoEve
            | AttackKind::Ipe
            | AttackKind::IpeDense
            | AttackKind::InterceptResend => {
                reject("n", attack.n.is_some())?;
                reject("theta_known", attack.theta_known.is_some())?;
            }
            AttackKind::KkkpProbe => {}
        }
        if matches!(attack.kind, AttackKind::NoEve | AttackKind::InterceptResend) {
            reject("lambda_e_nm", attack.lambda_e_nm.is_some())?;
        }
        if attack.kind != AttackKind::InterceptResend {
            reject("basis", attack.basis.is_some())?;
        }
        Ok(match attack.kind {
            AttackKind::NoEve => StrategyKind::NoEve,
            AttackKind::Ipe => StrategyKind::Ipe {
                wavelength_nm: lambda,
            },
            AttackKind::IpeDense => StrategyKind::IpeDense {
                wavelength_nm: lambda,
            },
            AttackKind::InterceptResend => StrategyKind::InterceptResend {
                basis: parse_basis(attack.basis.as_deref().unwrap_or("z"))?,
            },
            AttackKind::KkkpProbe => {
                let n = attack.n.unwrap_or(1);
                let probes = usize::try_from(n).map_err(|_| constraint("attack.n", "too large"))?;
                if probes == 0 {
                    return Err(constraint("attack.n", "must be at least 1"));
                }
                StrategyKind::KkkpProbe {
                    probes,
                    wavelength_nm: lambda,
                    theta_known: attack.theta_known,
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const IPE: &str = r#"
protocol = "pp_epr"
rounds = 500
control_prob = 0.25
seed = 7

[attack]
kind = "ipe"
lambda_e_nm = 190000.0
"#;

    #[test]
    fn parses_and_resolves() {
        let s = Scenario::parse(IPE).unwrap();
        let (cfg, strategy) = s.resolve().unwrap();
        assert_eq!(cfg.kind, ProtocolKind::PpEpr);
        assert_eq!(cfg.rounds, 500);
        assert_eq!(cfg.control_prob, 0.25);
        assert_eq!(cfg.seed, 7);
        assert!(cfg.filter.is_none());
        assert_eq!(
            strategy,
            StrategyKind::Ipe {
                wavelength_nm: 190_000.0
            }
        );
    }

    #[test]
    fn minimal_scenario_uses_canonical_defaults() {
        let (cfg, strategy) = Scenario::parse("protocol = \"kkkp\"")
            .unwrap()
            .resolve()
            .unwrap();
        assert_eq!(cfg, ProtocolConfig::canonical(ProtocolKind::Kkkp));
        assert_eq!(strategy, StrategyKind::NoEve);
    }

    #[test]
    fn unknown_keys_are_parse_errors() {
        let err = Scenario::parse("protocol = \"pp_epr\"\ncolour = 3").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = Scenario::parse("protocol = \"bb84\"").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err =
            Scenario::parse("protocol = \"pp_epr\"\n[attack]\nkind = \"ipe\"\nwavelength = 3.0")
                .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn constraint_errors_name_the_field() {
        let err = Scenario::parse("protocol = \"pp_epr\"\ncontrol_prob = 1.5")
            .unwrap()
            .resolve()
            .unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("control_prob"), "{err}");

        let err = Scenario::parse(
            "protocol = \"pp_epr\"\n[filter]\nenabled = true\npassband_nm = [801.0, 799.0]",
        )
        .unwrap()
        .resolve()
        .unwrap_err();
        assert!(err.to_string().contains("filter.passband_nm"), "{err}");

        let err = Scenario::parse("protocol = \"kkkp\"\n[attack]\nkind = \"kkkp_probe\"\nn = 0")
            .unwrap()
            .resolve()
            .unwrap_err();
        assert!(err.to_string().contains("attack.n"), "{err}");

        let err = Scenario::parse("protocol = \"pp_epr\"\n[attack]\nkind = \"ipe\"\nn = 3")
            .unwrap()
            .resolve()
            .unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn filter_defaults_to_narrow_band_around_signal() {
        let s = Scenario::parse("protocol = \"pp_single\"\n[filter]\nenabled = true").unwrap();
        let (cfg, _) = s.resolve().unwrap();
        let pb = cfg.filter.unwrap().passband;
        assert!((pb.lo() - 799.95).abs() < 1e-9 && (pb.hi() - 800.05).abs() < 1e-9);

        let s = Scenario::parse(
            "protocol = \"pp_single\"\n[filter]\nenabled = false\npassband_nm = [1.0, 2.0]",
        )
        .unwrap();
        assert!(s.resolve().unwrap().0.filter.is_none());
    }

    #[test]
    fn bases() {
        assert_eq!(parse_basis("Z").unwrap(), MeasureBasis::Z);
        assert_eq!(parse_basis("x").unwrap(), MeasureBasis::X);
        assert_eq!(
            parse_basis("rotated:0.5").unwrap(),
            MeasureBasis::Rotated(0.5)
        );
        assert!(parse_basis("y").is_err());
    }
}

//! The `run`, `sweep` and `compare` commands. Each returns the text to write
//! so callers decide where it goes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use pingpong_core::optics::SIGNAL_WAVELENGTH_NM;
use pingpong_core::report::{format_optional, format_rate, render_run_report};
use pingpong_core::{
    run_session, MeasureBasis, OpticalFilter, ProtocolConfig, ProtocolKind, RunStats, SessionError,
    StrategyKind,
};

use crate::scenario::{AttackKind, AttackSection, FilterSection, Scenario};
use crate::CliError;

/// Command-line overrides applied on top of a scenario.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub rounds: Option<u64>,
}

impl Overrides {
    fn apply_to(&self, scenario: &mut Scenario) {
        if let Some(seed) = self.seed {
            scenario.seed = Some(seed);
        }
        if let Some(rounds) = self.rounds {
            scenario.rounds = Some(rounds);
        }
    }

    fn apply_to_config(&self, cfg: &mut ProtocolConfig) {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(rounds) = self.rounds {
            cfg.rounds = rounds;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepField {
    /// Filter centred on the signal wavelength with this half-width.
    PassbandHalfWidth,
    LambdaE,
    ControlProb,
    Probes,
}

impl FromStr for SweepField {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "passband_half_width_nm" => Ok(SweepField::PassbandHalfWidth),
            "lambda_e_nm" => Ok(SweepField::LambdaE),
            "control_prob" => Ok(SweepField::ControlProb),
            "n" => Ok(SweepField::Probes),
            other => Err(CliError::SweepField(other.to_string())),
        }
    }
}

pub const SWEEP_HEADER: [&str; 7] = [
    "value",
    "qber",
    "control_failure_rate",
    "eve_accuracy",
    "eve_mi_bits",
    "anomaly_count",
    "absorbed_total",
];

pub const COMPARE_HEADER: [&str; 14] = [
    "protocol",
    "attack",
    "filter",
    "rounds",
    "message_rounds",
    "control_rounds_evaluated",
    "qber",
    "control_failure_rate",
    "anomaly_count",
    "absorbed_total",
    "blind_rounds",
    "eve_accuracy",
    "eve_mi_bits",
    "eve_mi_plugin_bits",
];

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    Scenario::parse(&fs::read_to_string(path)?)
}

/// Writes to `path`, or to stdout when there is none.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

fn session(cfg: &ProtocolConfig, strategy: &StrategyKind) -> Result<RunStats, CliError> {
    run_session(cfg, strategy)
        .map(|out| out.stats)
        .map_err(|e| match e {
            SessionError::Round { .. } => CliError::Simulation(e.to_string()),
            other => CliError::Constraint(other.to_string()),
        })
}

/// One session as `key = value` lines.
pub fn run(scenario: &Scenario, overrides: &Overrides) -> Result<String, CliError> {
    let mut scenario = scenario.clone();
    overrides.apply_to(&mut scenario);
    let (cfg, strategy) = scenario.resolve()?;
    let stats = session(&cfg, &strategy)?;
    let mut out = String::new();
    writeln!(out, "protocol = \"{}\"", cfg.kind).unwrap();
    writeln!(out, "attack = \"{strategy}\"").unwrap();
    writeln!(out, "filter = {}", cfg.filter.is_some()).unwrap();
    out.push_str(&render_run_report(&stats));
    Ok(out)
}

fn bad_value(field: &str, value: &str) -> CliError {
    CliError::Parse(format!("sweep value `{value}` is not valid for {field}"))
}

fn attack_for<'a>(
    scenario: &'a mut Scenario,
    field: &str,
    allowed: &[AttackKind],
) -> Result<&'a mut AttackSection, CliError> {
    match scenario.attack.as_mut() {
        Some(attack) if allowed.contains(&attack.kind) => Ok(attack),
        _ => Err(CliError::Constraint(format!(
            "attack.{field}: sweeping it needs an attack of kind {allowed:?}"
        ))),
    }
}

fn set_field(scenario: &mut Scenario, field: SweepField, value: &str) -> Result<(), CliError> {
    let number = |name: &str| {
        value
            .trim()
            .parse::<f64>()
            .map_err(|_| bad_value(name, value))
    };
    match field {
        SweepField::PassbandHalfWidth => {
            let h = number("passband_half_width_nm")?;
            let center = scenario
                .signal_wavelength_nm
                .unwrap_or(SIGNAL_WAVELENGTH_NM);
            let lo = (center - h).max(f64::MIN_POSITIVE);
            scenario.filter = Some(FilterSection {
                enabled: true,
                passband_nm: Some([lo, center + h]),
            });
        }
        SweepField::LambdaE => {
            let nm = number("lambda_e_nm")?;
            attack_for(
                scenario,
                "lambda_e_nm",
                &[AttackKind::Ipe, AttackKind::IpeDense, AttackKind::KkkpProbe],
            )?
            .lambda_e_nm = Some(nm);
        }
        SweepField::ControlProb => scenario.control_prob = Some(number("control_prob")?),
        SweepField::Probes => {
            let n = value
                .trim()
                .parse::<u64>()
                .map_err(|_| bad_value("n", value))?;
            attack_for(scenario, "n", &[AttackKind::KkkpProbe])?.n = Some(n);
        }
    }
    Ok(())
}

fn csv_text(writer: csv::Writer<Vec<u8>>) -> Result<String, CliError> {
    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// One CSV row per value, in input order. `field` is checked before any value.
pub fn sweep(
    scenario: &Scenario,
    overrides: &Overrides,
    field: &str,
    values: &[String],
) -> Result<String, CliError> {
    let field: SweepField = field.parse()?;
    let mut base = scenario.clone();
    overrides.apply_to(&mut base);
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(SWEEP_HEADER).map_err(csv_error)?;
    for value in values {
        let mut point = base.clone();
        set_field(&mut point, field, value)?;
        let (cfg, strategy) = point.resolve()?;
        let s = session(&cfg, &strategy)?;
        writer
            .write_record([
                value.clone(),
                format_rate(s.qber),
                format_rate(s.control_failure_rate),
                format_optional(s.eve_accuracy),
                format_optional(s.eve_mutual_info_bits),
                s.anomaly_count.to_string(),
                s.absorbed_total.to_string(),
            ])
            .map_err(csv_error)?;
    }
    csv_text(writer)
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Io(e.into())
}

/// Attacks paired with each protocol in the comparison matrix.
pub fn matrix_attacks(kind: ProtocolKind) -> Vec<StrategyKind> {
    let intercept = StrategyKind::InterceptResend {
        basis: MeasureBasis::Z,
    };
    match kind {
        ProtocolKind::PpEpr | ProtocolKind::PpSingle => {
            vec![StrategyKind::NoEve, StrategyKind::ipe(), intercept]
        }
        ProtocolKind::PpDense => vec![StrategyKind::NoEve, StrategyKind::ipe_dense(), intercept],
        ProtocolKind::Kkkp => vec![
            StrategyKind::NoEve,
            StrategyKind::kkkp_probe(4, None),
            StrategyKind::kkkp_probe(1, Some(std::f64::consts::FRAC_PI_8)),
        ],
    }
}

/// Every protocol against every applicable attack, filter off then on.
pub fn compare(overrides: &Overrides) -> Result<String, CliError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(COMPARE_HEADER).map_err(csv_error)?;
    for kind in ProtocolKind::ALL {
        for strategy in matrix_attacks(kind) {
            for filtered in [false, true] {
                let mut cfg = ProtocolConfig::canonical(kind);
                overrides.apply_to_config(&mut cfg);
                if filtered {
                    cfg = cfg.with_filter(OpticalFilter::default());
                }
                let s = session(&cfg, &strategy)?;
                writer
                    .write_record([
                        kind.name().to_string(),
                        strategy.to_string(),
                        filtered.to_string(),
                        s.rounds.to_string(),
                        s.message_rounds.to_string(),
                        s.control_rounds_evaluated.to_string(),
                        format_rate(s.qber),
                        format_rate(s.control_failure_rate),
                        s.anomaly_count.to_string(),
                        s.absorbed_total.to_string(),
                        s.blind_rounds.to_string(),
                        format_optional(s.eve_accuracy),
                        format_optional(s.eve_mutual_info_bits),
                        format_optional(s.eve_mi_plugin_bits),
                    ])
                    .map_err(csv_error)?;
            }
        }
    }
    csv_text(writer)
}

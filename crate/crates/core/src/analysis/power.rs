use serde::{Deserialize, Serialize};

use super::AnalysisError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerEntry {
    pub component: String,
    #[serde(default)]
    pub part: String,
    pub power_mw: f64,
    #[serde(default)]
    pub intraoral: bool,
    /// Can be switched off in deployment (status LED).
    #[serde(default)]
    pub optional: bool,
}

/// Component power at a fixed supply voltage.
///
/// TOML form:
///
/// ```toml
/// supply_v = 3.3
///
/// [[entry]]
/// component = "ADC"
/// power_mw = 1.09
/// intraoral = true
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerBudget {
    #[serde(default = "default_supply")]
    pub supply_v: f64,
    #[serde(default, rename = "entry")]
    pub entries: Vec<PowerEntry>,
}

fn default_supply() -> f64 {
    3.3
}

impl Default for PowerBudget {
    fn default() -> Self {
        Self::table_i()
    }
}

impl PowerBudget {
    /// Measured consumption of the reference build at 3.3 V.
    pub fn table_i() -> Self {
        let entry = |component: &str, part: &str, power_mw, intraoral, optional| PowerEntry {
            component: component.into(),
            part: part.into(),
            power_mw,
            intraoral,
            optional,
        };
        Self {
            supply_v: 3.3,
            entries: vec![
                entry("ADC", "MAX11613", 1.09, true, false),
                entry("Temperature sensor", "LMT70", 0.049, true, false),
                entry("Front end", "TF412", 0.396, true, false),
                entry("Microcontroller", "ISP1907HT", 7.35, false, false),
                entry("Status LED", "SML-LX0404SIUPGUSB", 6.93, false, true),
            ],
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, AnalysisError> {
        let budget: PowerBudget =
            toml::from_str(text).map_err(|e| AnalysisError::InvalidBudget(e.to_string()))?;
        budget.validate()?;
        Ok(budget)
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        for e in &self.entries {
            if !(e.power_mw.is_finite() && e.power_mw >= 0.0) {
                return Err(AnalysisError::InvalidBudget(format!(
                    "{}: power {} mW must be a finite non-negative number",
                    e.component, e.power_mw
                )));
            }
        }
        Ok(())
    }
}

/// Totals in mW, rounded half up to two decimals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerTotals {
    pub total_mw: f64,
    pub total_without_optional_mw: f64,
    pub intraoral_mw: f64,
}

/// Sums are taken in integer nanowatts so that the rounding of the totals
/// does not depend on summation order.
pub fn power_totals(budget: &PowerBudget) -> PowerTotals {
    let nw = |e: &PowerEntry| (e.power_mw * 1e6).round() as u64;
    let sum = |keep: &dyn Fn(&PowerEntry) -> bool| -> f64 {
        let total: u64 = budget.entries.iter().filter(|e| keep(e)).map(nw).sum();
        // 10 µW steps = 0.01 mW
        crate::rounding::div_round_half_up(total, 10_000) as f64 / 100.0
    };
    PowerTotals {
        total_mw: sum(&|_| true),
        total_without_optional_mw: sum(&|e| !e.optional),
        intraoral_mw: sum(&|e| e.intraoral),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_totals() {
        let t = power_totals(&PowerBudget::table_i());
        // 1.09 + 0.049 + 0.396 + 7.35 + 6.93 = 15.815 → 15.82
        assert_eq!(t.total_mw, 15.82);
        assert_eq!(t.total_without_optional_mw, 8.89);
        assert_eq!(t.intraoral_mw, 1.54);
    }

    #[test]
    fn empty_budget() {
        let t = power_totals(&PowerBudget {
            supply_v: 3.3,
            entries: vec![],
        });
        assert_eq!(
            (t.total_mw, t.total_without_optional_mw, t.intraoral_mw),
            (0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn toml_roundtrip() {
        let b = PowerBudget::table_i();
        let text = toml::to_string(&b).unwrap();
        assert_eq!(PowerBudget::from_toml(&text).unwrap(), b);
        let minimal =
            PowerBudget::from_toml("[[entry]]\ncomponent = \"x\"\npower_mw = 2.5\n").unwrap();
        assert_eq!(minimal.supply_v, 3.3);
        assert!(!minimal.entries[0].optional);
    }

    #[test]
    fn negative_power_is_rejected() {
        let err = PowerBudget::from_toml("[[entry]]\ncomponent = \"x\"\npower_mw = -1\n");
        assert!(matches!(err, Err(AnalysisError::InvalidBudget(_))));
        assert!(PowerBudget::from_toml("[[entry]]\ncomponent = \"x\"\n").is_err());
        assert!(PowerBudget::from_toml("bogus = 1").is_err());
    }
}

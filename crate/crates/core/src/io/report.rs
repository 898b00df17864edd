//! Line-oriented `key=value` reports with numbers at 6 significant digits.

use std::fs;
use std::path::Path;

use serde_json::{Map, Value};

use crate::engine::RegistrationReport;
use crate::error::{RegError, Result};
use crate::evaluation::EvaluationReport;

const SIGNIFICANT_DIGITS: usize = 6;

/// `%g`-style formatting with 6 significant digits.
pub fn format_number(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let v = v + 0.0;
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= SIGNIFICANT_DIGITS as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone)]
enum Entry {
    Number(f64),
    Integer(i64),
    Text(String),
}

/// Ordered key/value record.
#[derive(Debug, Clone, Default)]
pub struct Report {
    entries: Vec<(String, Entry)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn number(&mut self, key: impl Into<String>, v: f64) -> &mut Self {
        self.entries.push((key.into(), Entry::Number(v)));
        self
    }

    pub fn integer(&mut self, key: impl Into<String>, v: i64) -> &mut Self {
        self.entries.push((key.into(), Entry::Integer(v)));
        self
    }

    pub fn text(&mut self, key: impl Into<String>, v: impl Into<String>) -> &mut Self {
        self.entries.push((key.into(), Entry::Text(v.into())));
        self
    }

    pub fn get(&self, key: &str) -> Option<String> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, e)| render(e))
    }

    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|(k, e)| format!("{k}={}\n", render(e)))
            .collect()
    }

    /// Flat JSON object with the same keys and the same rounded numbers.
    pub fn to_json(&self) -> String {
        let mut map = Map::new();
        for (k, e) in &self.entries {
            let v = match e {
                Entry::Number(x) => format_number(*x)
                    .parse::<f64>()
                    .ok()
                    .and_then(serde_json::Number::from_f64)
                    .map_or(Value::Null, Value::Number),
                Entry::Integer(i) => Value::from(*i),
                Entry::Text(s) => Value::from(s.as_str()),
            };
            map.insert(k.clone(), v);
        }
        let mut s = serde_json::to_string_pretty(&Value::Object(map)).expect("json");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| RegError::io(path, e))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| RegError::io(path, e))
    }

    pub fn add_evaluation(&mut self, e: &EvaluationReport) -> &mut Self {
        self.number("mae_before", e.mae_before)
            .number("mae", e.mae)
            .number("mae_change", e.mae - e.mae_before)
            .number("robustness", e.robustness)
            .integer("njd", e.njd as i64)
            .text("units", e.units);
        if let Some(mm) = e.mae_mm {
            self.number("mae_mm", mm);
        }
        self.integer("landmarks", e.per_landmark_errors.len() as i64);
        for l in &e.per_landmark_errors {
            self.number(format!("landmark.{}.before", l.id), l.before)
                .number(format!("landmark.{}.after", l.id), l.after);
        }
        self
    }

    pub fn add_registration(&mut self, r: &RegistrationReport) -> &mut Self {
        self.text("mode", r.mode.to_string())
            .integer("levels", r.levels.len() as i64);
        for l in &r.levels {
            let p = format!("level.{}", l.level);
            let [nx, ny, nz] = l.dims;
            self.text(format!("{p}.dims"), format!("{nx}x{ny}x{nz}"))
                .number(format!("{p}.loss_start"), l.loss_trace.first().copied().unwrap_or(0.0))
                .number(format!("{p}.loss_end"), l.loss_trace.last().copied().unwrap_or(0.0))
                .integer(format!("{p}.accepted_steps"), l.accepted_steps as i64)
                .integer(format!("{p}.rejected_steps"), l.rejected_steps as i64)
                .number(format!("{p}.ncc_promoted"), l.ncc_promoted)
                .number(format!("{p}.ncc_final"), l.ncc_final);
        }
        if let Some(ft) = &r.finetune {
            self.number("finetune.loss_start", ft.loss_trace.first().copied().unwrap_or(0.0))
                .number("finetune.loss_end", ft.loss_trace.last().copied().unwrap_or(0.0))
                .integer("finetune.accepted_steps", ft.accepted_steps as i64)
                .integer("finetune.rejected_steps", ft.rejected_steps as i64);
        }
        self.number("loss_total", r.final_loss.total);
        for l in &r.final_loss.levels {
            self.number(format!("loss.level.{}", l.level), l.total);
        }
        if let Some(e) = &r.evaluation {
            self.add_evaluation(e);
        }
        self
    }
}

fn render(e: &Entry) -> String {
    match e {
        Entry::Number(x) => format_number(*x),
        Entry::Integer(i) => i.to_string(),
        Entry::Text(s) => s.clone(),
    }
}

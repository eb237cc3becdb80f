//! Run reports: one JSON document per invocation.

use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
    /// The input does not meet the hypotheses of the statement being checked.
    #[serde(rename = "HYPOTHESIS-VIOLATED")]
    HypothesisViolated,
}

impl Verdict {
    pub fn of(pass: bool) -> Verdict {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::HypothesisViolated => "HYPOTHESIS-VIOLATED",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub verdict: Verdict,
    pub value: Value,
    pub tolerance: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Value>,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub details: Value,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, value: impl Into<Value>, tolerance: impl Into<Value>) -> Check {
        Check {
            name: name.into(),
            verdict: Verdict::of(pass),
            value: value.into(),
            tolerance: tolerance.into(),
            certificate: None,
            details: Value::Null,
        }
    }

    pub fn certificate(mut self, c: Value) -> Check {
        self.certificate = Some(c);
        self
    }

    pub fn details(mut self, d: Value) -> Check {
        self.details = d;
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }
}

/// A group of checks that passes only when every check does.
#[derive(Clone, Debug, Serialize)]
pub struct Section {
    pub name: String,
    pub verdict: Verdict,
    pub checks: Vec<Check>,
}

impl Section {
    pub fn new(name: impl Into<String>, checks: Vec<Check>) -> Section {
        let verdict = Verdict::of(checks.iter().all(Check::passed));
        Section {
            name: name.into(),
            verdict,
            checks,
        }
    }

    /// First failing check, for one-line summaries.
    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub config: Value,
    pub seeds: Vec<u64>,
    pub verdict: Verdict,
    pub sections: Vec<Section>,
}

impl RunReport {
    pub fn new(command: &str, config: Value, seeds: Vec<u64>, sections: Vec<Section>) -> RunReport {
        let verdict = Verdict::of(sections.iter().all(|s| s.verdict != Verdict::Fail));
        RunReport {
            command: command.to_string(),
            config,
            seeds,
            verdict,
            sections,
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.verdict == Verdict::Fail {
            1
        } else {
            0
        }
    }

    /// Compact JSON, or pretty JSON indented by `indent` spaces.
    pub fn to_json(&self, indent: Option<usize>) -> String {
        match indent {
            None => serde_json::to_string(self).expect("report serializes"),
            Some(n) => {
                let pad = vec![b' '; n];
                let fmt = serde_json::ser::PrettyFormatter::with_indent(&pad);
                let mut out = Vec::new();
                let mut ser = serde_json::Serializer::with_formatter(&mut out, fmt);
                self.serialize(&mut ser).expect("report serializes");
                String::from_utf8(out).expect("json is utf-8")
            }
        }
    }
}

/// Finite floats as numbers, the rest as strings (`"inf"`, `"nan"`), so nothing
/// silently becomes `null`.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        serde_json::json!(x)
    } else {
        Value::String(format!("{x}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn verdicts_and_exit_codes() {
        let ok = Section::new("a", vec![Check::new("x", true, 0, 0)]);
        let hyp = Section::new(
            "b",
            vec![Check {
                verdict: Verdict::HypothesisViolated,
                ..Check::new("y", true, 1, 0)
            }],
        );
        let r = RunReport::new("t", json!({}), vec![1], vec![ok.clone(), hyp]);
        assert_eq!(r.exit_code(), 0);
        let bad = Section::new("c", vec![Check::new("z", false, 1, 0)]);
        assert_eq!(bad.first_failure().unwrap().name, "z");
        let r = RunReport::new("t", json!({}), vec![1], vec![ok, bad]);
        assert_eq!(r.exit_code(), 1);
        let s = r.to_json(None);
        assert!(s.contains("\"verdict\":\"FAIL\""));
        assert!(r.to_json(Some(2)).contains("\n  \"command\""));
        assert_eq!(num(f64::INFINITY), json!("inf"));
    }
}

use std::fmt;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Property {
    Theorem1,
    Lemma1,
    Lemma2,
    Lemma3,
    Lemma4,
    Differential,
    StepPreservation,
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Fuel,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Fuel => "fuel",
        })
    }
}

/// Outcome of one property check on one case.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Report {
    pub case_id: String,
    pub property: Property,
    pub verdict: Verdict,
    pub detail: String,
}

impl Report {
    pub fn new(case_id: &str, property: Property, verdict: Verdict, detail: impl Into<String>) -> Self {
        Report {
            case_id: case_id.to_string(),
            property,
            verdict,
            detail: detail.into(),
        }
    }

    pub fn pass(case_id: &str, property: Property, detail: impl Into<String>) -> Self {
        Report::new(case_id, property, Verdict::Pass, detail)
    }

    pub fn fail(case_id: &str, property: Property, detail: impl Into<String>) -> Self {
        Report::new(case_id, property, Verdict::Fail, detail)
    }

    pub fn fuel(case_id: &str, property: Property, detail: impl Into<String>) -> Self {
        Report::new(case_id, property, Verdict::Fuel, detail)
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("reports serialize")
    }
}

/// `CASE id PROPERTY verdict`, followed by the detail for anything but a
/// pass.
impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CASE {} {} {}", self.case_id, self.property, self.verdict)?;
        if self.verdict != Verdict::Pass && !self.detail.is_empty() {
            write!(f, " | {}", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Totals {
    pub passed: usize,
    pub failed: usize,
    pub fuel: usize,
}

impl Totals {
    pub fn of<'a>(reports: impl IntoIterator<Item = &'a Report>) -> Self {
        let mut t = Totals::default();
        for r in reports {
            match r.verdict {
                Verdict::Pass => t.passed += 1,
                Verdict::Fail => t.failed += 1,
                Verdict::Fuel => t.fuel += 1,
            }
        }
        t
    }

    pub fn total(&self) -> usize {
        self.passed + self.failed + self.fuel
    }

    pub fn all_passed(&self) -> bool {
        self.failed == 0 && self.fuel == 0
    }
}

impl fmt::Display for Totals {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "TOTAL passed={} failed={} fuel={}",
            self.passed, self.failed, self.fuel
        )
    }
}

/// Renders reports sorted by case id and property, one per line, with a
/// totals footer. `json` switches to JSON lines.
pub fn render(reports: &[Report], json: bool) -> String {
    let mut sorted: Vec<&Report> = reports.iter().collect();
    sorted.sort_by(|a, b| (&a.case_id, a.property).cmp(&(&b.case_id, b.property)));
    let mut out = String::new();
    for r in &sorted {
        if json {
            out.push_str(&r.to_json());
        } else {
            out.push_str(&r.to_string());
        }
        out.push('\n');
    }
    let totals = Totals::of(sorted.iter().copied());
    if json {
        out.push_str(&serde_json::to_string(&totals).expect("totals serialize"));
    } else {
        out.push_str(&totals.to_string());
    }
    out.push('\n');
    out
}

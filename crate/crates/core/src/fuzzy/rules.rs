use std::fmt::Write as _;

use super::{FuzzyError, Label};

pub const RULES_CSV_HEADER: &str = "e,de,kp,ki,kd";

/// Consequent tables for `kp`, `ki`, `kd`, indexed `[e][de]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleBase {
    tables: [[[Label; 7]; 7]; 3],
}

impl Default for RuleBase {
    fn default() -> Self {
        RuleBase::standard()
    }
}

impl RuleBase {
    pub fn new(kp: [[Label; 7]; 7], ki: [[Label; 7]; 7], kd: [[Label; 7]; 7]) -> Self {
        RuleBase {
            tables: [kp, ki, kd],
        }
    }

    /// The shipped self-tuning table (rows `e`, columns `de`, NB..PB).
    pub fn standard() -> Self {
        use Label::*;
        #[rustfmt::skip]
        let cells: [[(Label, Label, Label); 7]; 7] = [
            [(PB,NB,PS),(PB,NB,NS),(PM,NM,NB),(PM,NM,NB),(PS,NS,NB),(ZO,ZO,NM),(ZO,ZO,PS)],
            [(PB,NB,PS),(PB,NB,NS),(PM,NM,NB),(PS,NS,NM),(PS,NS,NM),(ZO,ZO,NS),(NS,ZO,ZO)],
            [(PM,NB,ZO),(PM,NM,NM),(PM,NS,NM),(PS,NS,NM),(ZO,ZO,NS),(NS,PS,NS),(NS,PS,ZO)],
            [(PM,NM,ZO),(PM,NM,NS),(PS,NS,NS),(ZO,ZO,NS),(NS,PS,NS),(NM,PM,NS),(NM,PM,ZO)],
            [(PS,NM,ZO),(PS,NS,ZO),(ZO,ZO,ZO),(NS,PS,ZO),(NS,PS,ZO),(NM,PM,ZO),(NM,PB,ZO)],
            [(PS,ZO,PB),(ZO,ZO,NS),(NS,PS,PS),(NM,PS,PS),(NM,PM,PS),(NM,PB,PS),(NB,PB,PB)],
            [(ZO,ZO,PB),(ZO,ZO,PM),(NM,PS,PM),(NM,PM,PM),(NM,PM,PS),(NB,PB,PS),(NB,PB,PB)],
        ];
        let kp = cells.map(|row| row.map(|c| c.0));
        let ki = cells.map(|row| row.map(|c| c.1));
        let kd = cells.map(|row| row.map(|c| c.2));
        RuleBase::new(kp, ki, kd)
    }

    /// Consequent for output `out` (0 = kp, 1 = ki, 2 = kd).
    pub fn consequent(&self, out: usize, e: Label, de: Label) -> Label {
        self.tables[out][e.index()][de.index()]
    }

    pub fn table(&self, out: usize) -> &[[Label; 7]; 7] {
        &self.tables[out]
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(RULES_CSV_HEADER);
        s.push('\n');
        for e in Label::ALL {
            for de in Label::ALL {
                writeln!(
                    s,
                    "{e},{de},{},{},{}",
                    self.consequent(0, e, de),
                    self.consequent(1, e, de),
                    self.consequent(2, e, de)
                )
                .unwrap();
            }
        }
        s
    }

    /// Parses the 49-row CSV form; every `(e, de)` pair must appear once.
    pub fn from_csv(text: &str) -> Result<Self, FuzzyError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == RULES_CSV_HEADER => {}
            _ => {
                return Err(FuzzyError::RuleParse {
                    line: 1,
                    msg: format!("expected header `{RULES_CSV_HEADER}`"),
                })
            }
        }
        let mut tables: [[[Option<Label>; 7]; 7]; 3] = [[[None; 7]; 7]; 3];
        for (i, line) in lines {
            let err = |msg: String| FuzzyError::RuleParse { line: i + 1, msg };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(err(format!("expected 5 fields, got {}", fields.len())));
            }
            let labels: Result<Vec<Label>, String> = fields.iter().map(|f| f.parse()).collect();
            let labels = labels.map_err(err)?;
            let (e, de) = (labels[0].index(), labels[1].index());
            if tables[0][e][de].is_some() {
                return Err(err(format!("duplicate rule for ({}, {})", labels[0], labels[1])));
            }
            for out in 0..3 {
                tables[out][e][de] = Some(labels[2 + out]);
            }
        }
        let mut full = [[[Label::ZO; 7]; 7]; 3];
        for out in 0..3 {
            for e in 0..7 {
                for de in 0..7 {
                    full[out][e][de] = tables[out][e][de].ok_or_else(|| FuzzyError::RuleParse {
                        line: 0,
                        msg: format!("missing rule for ({}, {})", Label::ALL[e], Label::ALL[de]),
                    })?;
                }
            }
        }
        Ok(RuleBase { tables: full })
    }
}

use std::io::Read;

use serde::{Deserialize, Serialize};

use super::MetricsError;

pub const SUBSCALE_MIN: u8 = 1;
pub const SUBSCALE_MAX: u8 = 21;

/// Six self-ratings, each on a 1..=21 scale.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TlxRecord {
    pub participant_id: String,
    pub md: u8,
    pub pd: u8,
    pub td: u8,
    pub performance: u8,
    pub effort: u8,
    pub frustration: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TlxScore(pub i32);

impl TlxRecord {
    pub fn subscales(&self) -> [(&'static str, u8); 6] {
        [
            ("md", self.md),
            ("pd", self.pd),
            ("td", self.td),
            ("performance", self.performance),
            ("effort", self.effort),
            ("frustration", self.frustration),
        ]
    }

    fn check(&self) -> Result<(), MetricsError> {
        for (field, value) in self.subscales() {
            if !(SUBSCALE_MIN..=SUBSCALE_MAX).contains(&value) {
                return Err(MetricsError::Range {
                    participant: self.participant_id.clone(),
                    field,
                    value: value.into(),
                });
            }
        }
        Ok(())
    }
}

/// 21 minus the raw sum of the six subscales, unweighted and unclamped, so
/// the attainable range is -105..=15.
pub fn tlx_score(record: &TlxRecord) -> Result<TlxScore, MetricsError> {
    record.check()?;
    let sum: i32 = record.subscales().iter().map(|&(_, v)| i32::from(v)).sum();
    Ok(TlxScore(21 - sum))
}

const HEADER: [&str; 7] = [
    "participant_id",
    "md",
    "pd",
    "td",
    "performance",
    "effort",
    "frustration",
];

/// Reads `participant_id,md,pd,td,performance,effort,frustration` rows. The
/// header is required. Line numbers in errors are 1-based file lines.
pub fn read_tlx_csv(reader: impl Read) -> Result<Vec<TlxRecord>, MetricsError> {
    let mut csv = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = csv.headers().map_err(|e| MetricsError::MalformedRecord {
        line: 1,
        message: e.to_string(),
    })?;
    if header.iter().ne(HEADER) {
        return Err(MetricsError::MalformedRecord {
            line: 1,
            message: format!("expected header `{}`", HEADER.join(",")),
        });
    }

    let mut out = Vec::new();
    for row in csv.records() {
        let row = row.map_err(|e| MetricsError::MalformedRecord {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let mut values = [0u8; 6];
        for (i, slot) in values.iter_mut().enumerate() {
            let raw = &row[i + 1];
            let value: i64 = raw.parse().map_err(|_| MetricsError::MalformedRecord {
                line,
                message: format!("{} = `{raw}` is not an integer", HEADER[i + 1]),
            })?;
            if !(i64::from(SUBSCALE_MIN)..=i64::from(SUBSCALE_MAX)).contains(&value) {
                return Err(MetricsError::MalformedRecord {
                    line,
                    message: format!("{} = {value} is outside [1, 21]", HEADER[i + 1]),
                });
            }
            *slot = value as u8;
        }
        let [md, pd, td, performance, effort, frustration] = values;
        out.push(TlxRecord {
            participant_id: row[0].to_owned(),
            md,
            pd,
            td,
            performance,
            effort,
            frustration,
        });
    }
    Ok(out)
}

use std::fmt;

use serde::{Deserialize, Serialize};

/// Outcome category of an assessment. Ordered by severity, so
/// `RedAlert > MildYellow > SafeGreen`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Zone {
    SafeGreen,
    MildYellow,
    RedAlert,
}

impl Zone {
    pub const ALL: [Zone; 3] = [Zone::RedAlert, Zone::MildYellow, Zone::SafeGreen];

    pub fn as_str(self) -> &'static str {
        match self {
            Zone::RedAlert => "red_alert",
            Zone::MildYellow => "mild_yellow",
            Zone::SafeGreen => "safe_green",
        }
    }
}

impl fmt::Display for Zone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A yes/no answer to a protocol question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Answer {
    Yes,
    No,
}

impl Answer {
    pub fn as_str(self) -> &'static str {
        match self {
            Answer::Yes => "yes",
            Answer::No => "no",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn severity_order_is_total() {
        assert!(Zone::RedAlert > Zone::MildYellow);
        assert!(Zone::MildYellow > Zone::SafeGreen);
        assert!(Zone::RedAlert > Zone::SafeGreen);
        let mut zones = vec![Zone::SafeGreen, Zone::RedAlert, Zone::MildYellow];
        zones.sort();
        assert_eq!(
            zones,
            vec![Zone::SafeGreen, Zone::MildYellow, Zone::RedAlert]
        );
    }

    #[test]
    fn wire_names() {
        assert_eq!(
            serde_json::to_string(&Zone::RedAlert).unwrap(),
            "\"red_alert\""
        );
        assert_eq!(
            serde_json::from_str::<Zone>("\"mild_yellow\"").unwrap(),
            Zone::MildYellow
        );
        assert!(serde_json::from_str::<Zone>("\"orange\"").is_err());
    }
}

use std::fmt;

use regex::Regex;
use std::sync::LazyLock;
use thiserror::Error;

use crate::prompts::{Affect, DassSeverity};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("reply has no `{0}:` line")]
    MissingSubscale(&'static str),
    #[error("unrecognized {subscale} severity `{value}`")]
    UnknownSeverity { subscale: &'static str, value: String },
    #[error("reply gives no score for `{0}`")]
    MissingAffect(&'static str),
    #[error("{affect} score {score} is outside 1..=5")]
    OutOfRangeScore { affect: &'static str, score: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DassPrediction {
    pub depression: DassSeverity,
    pub anxiety: DassSeverity,
    pub stress: DassSeverity,
}

impl DassPrediction {
    pub fn subscales(&self) -> [(&'static str, DassSeverity); 3] {
        [("depression", self.depression), ("anxiety", self.anxiety), ("stress", self.stress)]
    }
}

/// Ten affect ratings, each in 1..=5, stored in [`Affect::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PanasScores([u8; 10]);

impl PanasScores {
    pub fn new(scores: [u8; 10]) -> Result<Self, ParseError> {
        for (affect, &s) in Affect::ALL.iter().zip(&scores) {
            if !(1..=5).contains(&s) {
                return Err(ParseError::OutOfRangeScore { affect: affect.name(), score: s as i64 });
            }
        }
        Ok(PanasScores(scores))
    }

    pub fn from_pairs(pairs: &[(Affect, u8)]) -> Result<Self, ParseError> {
        let mut scores = [0u8; 10];
        for &(a, s) in pairs {
            scores[a as usize] = s;
        }
        if let Some(i) = scores.iter().position(|&s| s == 0) {
            return Err(ParseError::MissingAffect(Affect::ALL[i].name()));
        }
        PanasScores::new(scores)
    }

    pub fn get(&self, affect: Affect) -> u8 {
        self.0[affect as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Affect, u8)> + '_ {
        Affect::ALL.iter().copied().zip(self.0.iter().copied())
    }
}

impl fmt::Display for DassPrediction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_dass(self))
    }
}

/// The reply shape the DASS prompt asks for.
pub fn format_dass(p: &DassPrediction) -> String {
    format!("Depression: {}\nAnxiety: {}\nStress: {}\n", p.depression, p.anxiety, p.stress)
}

pub fn format_panas(p: &PanasScores) -> String {
    p.iter().map(|(a, s)| format!("{}: {s}\n", a.name())).collect()
}

// Markdown emphasis and bullets that models like to wrap labels in.
const DECORATION: &str = r"[*_`#\s]*";

static DASS_LINES: LazyLock<[Regex; 3]> = LazyLock::new(|| {
    ["depression", "anxiety", "stress"].map(|label| {
        Regex::new(&format!(r"(?im)\b{label}\b{DECORATION}[:\-–]{DECORATION}([^\n]*)")).unwrap()
    })
});

static BANDS: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(extremely\s+severe|severe|moderate|mild|normal)\b").unwrap()
});

static PANAS_SCORES: LazyLock<Vec<Regex>> = LazyLock::new(|| {
    Affect::ALL
        .iter()
        .map(|a| Regex::new(&format!(r"(?i)\b{}\b{DECORATION}[:\-–=]?{DECORATION}(-?\d+)", a.name())).unwrap())
        .collect()
});

fn band(word: &str) -> DassSeverity {
    let lower = word.to_ascii_lowercase();
    match lower.split_whitespace().next() {
        Some("extremely") => DassSeverity::ExtremelySevere,
        Some("severe") => DassSeverity::Severe,
        Some("moderate") => DassSeverity::Moderate,
        Some("mild") => DassSeverity::Mild,
        _ => DassSeverity::Normal,
    }
}

/// Reads the three `Subscale: <severity>` lines out of a reply, ignoring
/// any prose around them.
pub fn parse_dass_response(text: &str) -> Result<DassPrediction, ParseError> {
    let names = ["Depression", "Anxiety", "Stress"];
    let mut found = [DassSeverity::Normal; 3];
    for (i, re) in DASS_LINES.iter().enumerate() {
        let mut first_value = None;
        let mut severity = None;
        for caps in re.captures_iter(text) {
            let value = caps.get(1).map_or("", |m| m.as_str());
            if let Some(m) = BANDS.find(value) {
                severity = Some(band(m.as_str()));
                break;
            }
            first_value.get_or_insert_with(|| value.trim().to_owned());
        }
        found[i] = match (severity, first_value) {
            (Some(s), _) => s,
            (None, Some(value)) => {
                return Err(ParseError::UnknownSeverity { subscale: names[i], value })
            }
            (None, None) => return Err(ParseError::MissingSubscale(names[i])),
        };
    }
    Ok(DassPrediction { depression: found[0], anxiety: found[1], stress: found[2] })
}

/// Reads `<affect>: <score>` for each of the ten affects. The first
/// numbered mention of an affect wins.
pub fn parse_panas_response(text: &str) -> Result<PanasScores, ParseError> {
    let mut scores = [0u8; 10];
    for (i, re) in PANAS_SCORES.iter().enumerate() {
        let affect = Affect::ALL[i].name();
        let caps = re.captures(text).ok_or(ParseError::MissingAffect(affect))?;
        let score: i64 = caps[1].parse().unwrap_or(i64::MAX);
        if !(1..=5).contains(&score) {
            return Err(ParseError::OutOfRangeScore { affect, score });
        }
        scores[i] = score as u8;
    }
    Ok(PanasScores(scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dass_examples() {
        let p = parse_dass_response("Depression: Moderate\nAnxiety: Mild\nStress: Normal").unwrap();
        assert_eq!(
            p,
            DassPrediction {
                depression: DassSeverity::Moderate,
                anxiety: DassSeverity::Mild,
                stress: DassSeverity::Normal
            }
        );
        let p = parse_dass_response("Depression: Moderate\nAnxiety: Moderate\nStress: Moderate").unwrap();
        assert!(p.subscales().iter().all(|(_, s)| *s == DassSeverity::Moderate));
        assert_eq!(parse_dass_response("Depression: Mild"), Err(ParseError::MissingSubscale("Anxiety")));
    }

    #[test]
    fn dass_tolerates_prose_and_markdown() {
        let reply = "Based on the week, here is my assessment.\n\n\
            **Depression:** Extremely Severe (the person rarely left home)\n\
            - **Anxiety**: severe\n\
            * Stress - mild, given the regular routine.\n\
            Overall the stress seems manageable.";
        let p = parse_dass_response(reply).unwrap();
        assert_eq!(p.depression, DassSeverity::ExtremelySevere);
        assert_eq!(p.anxiety, DassSeverity::Severe);
        assert_eq!(p.stress, DassSeverity::Mild);
    }

    #[test]
    fn dass_unknown_severity() {
        let err = parse_dass_response("Depression: Moderate\nAnxiety: Catastrophic\nStress: Normal").unwrap_err();
        assert_eq!(err, ParseError::UnknownSeverity { subscale: "Anxiety", value: "Catastrophic".into() });
    }

    #[test]
    fn dass_round_trips_every_combination() {
        for d in DassSeverity::ALL {
            for a in DassSeverity::ALL {
                for s in DassSeverity::ALL {
                    let p = DassPrediction { depression: d, anxiety: a, stress: s };
                    assert_eq!(parse_dass_response(&format_dass(&p)), Ok(p));
                }
            }
        }
    }

    #[test]
    fn panas_actual_results_in_prose() {
        let reply = "Here is an estimate of the person's affect over the week.\n\n\
            1. **Upset**: 2 - a few frustrating moments.\n\
            2. **Hostile**: 2\n\
            3. **Alert**: 3 - attentive in the mornings.\n\
            4. **Ashamed**: 1\n\
            5. **Inspired**: 4\n\
            6. **Nervous**: 2\n\
            7. **Determined**: 4\n\
            8. **Attentive**: 4\n\
            9. **Afraid**: 1\n\
            10. **Active**: 5 (lots of walking)\n";
        let p = parse_panas_response(reply).unwrap();
        let expected = [
            (Affect::Active, 5),
            (Affect::Determined, 4),
            (Affect::Attentive, 4),
            (Affect::Inspired, 4),
            (Affect::Alert, 3),
            (Affect::Upset, 2),
            (Affect::Hostile, 2),
            (Affect::Ashamed, 1),
            (Affect::Nervous, 2),
            (Affect::Afraid, 1),
        ];
        for (a, s) in expected {
            assert_eq!(p.get(a), s, "{}", a.name());
        }
    }

    #[test]
    fn panas_errors() {
        let full = "Upset: 2\nHostile: 2\nAlert: 3\nAshamed: 1\nInspired: 4\nNervous: 2\nDetermined: 4\nAttentive: 4\nAfraid: 1\n";
        assert_eq!(parse_panas_response(full), Err(ParseError::MissingAffect("Active")));
        let seven = format!("{full}Active: 7");
        assert_eq!(
            parse_panas_response(&seven),
            Err(ParseError::OutOfRangeScore { affect: "Active", score: 7 })
        );
        let zero = format!("{full}Active: 0");
        assert!(matches!(parse_panas_response(&zero), Err(ParseError::OutOfRangeScore { .. })));
    }

    #[test]
    fn inactive_is_not_active() {
        let text = "Upset: 2\nHostile: 2\nAlert: 3\nAshamed: 1\nInspired: 4\nNervous: 2\nDetermined: 4\nAttentive: 4\nAfraid: 1\nInactive: 3\n";
        assert_eq!(parse_panas_response(text), Err(ParseError::MissingAffect("Active")));
    }

    #[test]
    fn score_constructors_validate() {
        assert!(PanasScores::new([1, 2, 3, 4, 5, 1, 2, 3, 4, 5]).is_ok());
        assert!(PanasScores::new([1, 2, 3, 4, 6, 1, 2, 3, 4, 5]).is_err());
        assert_eq!(
            PanasScores::from_pairs(&[(Affect::Upset, 2)]),
            Err(ParseError::MissingAffect("Hostile"))
        );
    }

    proptest! {
        #[test]
        fn panas_round_trip(scores in prop::array::uniform10(1u8..=5)) {
            let p = PanasScores::new(scores).unwrap();
            prop_assert_eq!(parse_panas_response(&format_panas(&p)), Ok(p));
        }
    }
}

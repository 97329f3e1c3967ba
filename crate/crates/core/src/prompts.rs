//! Prompt assembly for daily questions, daily summaries and the weekly
//! DASS-21 and I-PANAS-SF predictions, plus the built-in question bank.

use std::fmt;

use thiserror::Error;

use crate::narrate::NarrativeDocument;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("the narrative has no lines")]
    EmptyNarrative,
    #[error("the question is empty")]
    EmptyQuestion,
    #[error("no daily summaries were supplied")]
    NoSummaries,
    #[error("a week has at most 7 daily summaries, got {0}")]
    TooManySummaries(usize),
    #[error("DASS scores are non-negative, got {0}")]
    NegativeScore(i64),
}

const DAILY_QUESTION_TEMPLATE: &str = "The following data is a chronological list that describes the smartphone sensor events collected over a day from the smartphone of a university student. The form of each data record is: timestamp | sensor | description. Answer the following question based on this data: {question}.";

pub const DAILY_SUMMARY_QUESTION: &str =
    "Generate a narrative of the day for the person in chronological order.";

const DASS_TEMPLATE: &str = "Using the narrative of activities collected from smartphone sensors over the past week, estimate the individual's mental health based on the DASS-21 scale. This scale evaluates three subscales: depression, anxiety, and stress, each with a maximum score of 21. For each subscale, categorize the result into one of the following ranges:
Normal: 0 to 4
Mild: 5 to 6
Moderate: 7 to 10
Severe: 11 to 13
Extremely Severe: 14 and above

Format your output as follows:
Depression: <extent>
Anxiety: <extent>
Stress: <extent>

Narratives data: ";

const PANAS_HEAD: &str = "Given a week's narrative of activity collected from smartphone sensors, estimate the scores for the following affective states that the person would report at the end of the week using the I-PANAS-SF scale. The scale ranges from 1 to 5, with 1 representing 'Never' and 5 representing 'Always':";

const DAYS_PER_WEEK: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PromptKind {
    DailyQuestion,
    DailySummary,
    WeeklyDass,
    WeeklyPanas,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptBundle {
    pub kind: PromptKind,
    pub text: String,
    pub token_estimate: usize,
    pub warnings: Vec<String>,
}

/// Rough token count: one token per four bytes, rounded up.
pub fn estimate_tokens(text: &str) -> usize {
    text.len().div_ceil(4)
}

impl PromptBundle {
    fn new(kind: PromptKind, text: String) -> Self {
        PromptBundle { kind, token_estimate: estimate_tokens(&text), text, warnings: Vec::new() }
    }

    /// Adds a warning when the estimate exceeds `limit` tokens.
    pub fn check_token_budget(&mut self, limit: usize) {
        if self.token_estimate > limit {
            self.warnings.push(format!(
                "prompt is about {} tokens, above the configured warning threshold of {limit}",
                self.token_estimate
            ));
        }
    }
}

fn question_prompt(kind: PromptKind, question: &str, doc: &NarrativeDocument) -> Result<PromptBundle, PromptError> {
    if question.trim().is_empty() {
        return Err(PromptError::EmptyQuestion);
    }
    if doc.is_empty() {
        return Err(PromptError::EmptyNarrative);
    }
    let mut text = DAILY_QUESTION_TEMPLATE.replace("{question}", question);
    text.push_str("\n\n");
    text.push_str(&doc.to_text());
    Ok(PromptBundle::new(kind, text))
}

pub fn build_daily_question_prompt(question: &str, doc: &NarrativeDocument) -> Result<PromptBundle, PromptError> {
    question_prompt(PromptKind::DailyQuestion, question, doc)
}

pub fn build_daily_summary_prompt(doc: &NarrativeDocument) -> Result<PromptBundle, PromptError> {
    question_prompt(PromptKind::DailySummary, DAILY_SUMMARY_QUESTION, doc)
}

fn week_body(summaries: &[String]) -> Result<(String, Vec<String>), PromptError> {
    match summaries.len() {
        0 => return Err(PromptError::NoSummaries),
        n if n > DAYS_PER_WEEK => return Err(PromptError::TooManySummaries(n)),
        _ => {}
    }
    if summaries.iter().all(|s| s.trim().is_empty()) {
        return Err(PromptError::NoSummaries);
    }
    let mut warnings = Vec::new();
    if summaries.len() < DAYS_PER_WEEK {
        warnings.push(format!(
            "only {} of {DAYS_PER_WEEK} daily summaries available; the weekly estimate covers a partial week",
            summaries.len()
        ));
    }
    Ok((summaries.join("\n\n"), warnings))
}

/// Weekly DASS-21 prompt over up to seven daily summaries, in day order.
pub fn build_dass_prompt(summaries: &[String]) -> Result<PromptBundle, PromptError> {
    let (body, warnings) = week_body(summaries)?;
    let mut bundle = PromptBundle::new(PromptKind::WeeklyDass, format!("{DASS_TEMPLATE}{body}"));
    bundle.warnings = warnings;
    Ok(bundle)
}

/// Weekly I-PANAS-SF prompt over up to seven daily summaries, in day order.
pub fn build_panas_prompt(summaries: &[String]) -> Result<PromptBundle, PromptError> {
    let (body, warnings) = week_body(summaries)?;
    let mut text = String::from(PANAS_HEAD);
    text.push_str("\n\n");
    for affect in Affect::ALL {
        text.push_str(affect.name());
        text.push('\n');
    }
    text.push_str("\nNarratives: ");
    text.push_str(&body);
    let mut bundle = PromptBundle::new(PromptKind::WeeklyPanas, text);
    bundle.warnings = warnings;
    Ok(bundle)
}

/// The ten I-PANAS-SF affects, in questionnaire order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Affect {
    Upset,
    Hostile,
    Alert,
    Ashamed,
    Inspired,
    Nervous,
    Determined,
    Attentive,
    Afraid,
    Active,
}

impl Affect {
    pub const ALL: [Affect; 10] = [
        Affect::Upset,
        Affect::Hostile,
        Affect::Alert,
        Affect::Ashamed,
        Affect::Inspired,
        Affect::Nervous,
        Affect::Determined,
        Affect::Attentive,
        Affect::Afraid,
        Affect::Active,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Affect::Upset => "Upset",
            Affect::Hostile => "Hostile",
            Affect::Alert => "Alert",
            Affect::Ashamed => "Ashamed",
            Affect::Inspired => "Inspired",
            Affect::Nervous => "Nervous",
            Affect::Determined => "Determined",
            Affect::Attentive => "Attentive",
            Affect::Afraid => "Afraid",
            Affect::Active => "Active",
        }
    }

    pub fn key(self) -> String {
        self.name().to_ascii_lowercase()
    }
}

/// Severity bands, applied alike to all three DASS-21 subscales.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DassSeverity {
    Normal,
    Mild,
    Moderate,
    Severe,
    ExtremelySevere,
}

impl DassSeverity {
    pub const ALL: [DassSeverity; 5] = [
        DassSeverity::Normal,
        DassSeverity::Mild,
        DassSeverity::Moderate,
        DassSeverity::Severe,
        DassSeverity::ExtremelySevere,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DassSeverity::Normal => "Normal",
            DassSeverity::Mild => "Mild",
            DassSeverity::Moderate => "Moderate",
            DassSeverity::Severe => "Severe",
            DassSeverity::ExtremelySevere => "Extremely Severe",
        }
    }
}

impl fmt::Display for DassSeverity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// 0-4 normal, 5-6 mild, 7-10 moderate, 11-13 severe, 14+ extremely severe.
pub fn categorize_dass(score: i64) -> Result<DassSeverity, PromptError> {
    Ok(match score {
        s if s < 0 => return Err(PromptError::NegativeScore(s)),
        0..=4 => DassSeverity::Normal,
        5..=6 => DassSeverity::Mild,
        7..=10 => DassSeverity::Moderate,
        11..=13 => DassSeverity::Severe,
        _ => DassSeverity::ExtremelySevere,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QuestionCategory {
    SmartphoneUsage,
    PhysicalActivity,
    Sleep,
    SignificantEvents,
    Analysis,
}

impl QuestionCategory {
    pub const ALL: [QuestionCategory; 5] = [
        QuestionCategory::SmartphoneUsage,
        QuestionCategory::PhysicalActivity,
        QuestionCategory::Sleep,
        QuestionCategory::SignificantEvents,
        QuestionCategory::Analysis,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            QuestionCategory::SmartphoneUsage => "smartphone-usage",
            QuestionCategory::PhysicalActivity => "physical-activity",
            QuestionCategory::Sleep => "sleep",
            QuestionCategory::SignificantEvents => "significant-events",
            QuestionCategory::Analysis => "analysis",
        }
    }

    pub fn from_slug(s: &str) -> Option<Self> {
        let s = s.trim().to_ascii_lowercase().replace('_', "-");
        Self::ALL.into_iter().find(|c| c.slug() == s)
    }
}

const SMARTPHONE_USAGE: &[&str] = &[
    "What are the peak usage times for the person using smartphones throughout the day?",
    "Did the person spend more time interacting with others (e.g. sending messages or making calls), or on their own (e.g. watching videos, playing games, etc.) throughout the day?",
    "What activities does the person use the smartphone for? What kind of role did the smartphone play in the person’s life throughout the day (e.g., working tool, communication tool, or game device; work-related, social, informational)?",
    "Did the user have any representative behavior, such as frequently changing applications, unlocking/locking their phone, checking notifications, or frequently scrolling the application menu?",
    "What is the time distribution of the person using different applications throughout the day?",
    "What actions did the person do in their social media engagement throughout the day (e.g. scrolling, posting posts, or giving likes)?",
];

const PHYSICAL_ACTIVITY: &[&str] = &[
    "How many and what places did the person visit, and what kind of activities did the person presumably conduct at these locations?",
    "What are the frequently visited places for the person?",
    "Was the visited place crowded or not?",
    "How long did the person spend at home?",
];

const SLEEP: &[&str] = &[
    "Provide an estimation for how long the person slept.",
    "What patterns emerged regarding the first and last activities before sleep?",
];

const SIGNIFICANT_EVENTS: &[&str] = &[
    DAILY_SUMMARY_QUESTION,
    "What are the minor behaviors that you may notice as a large language model that may not be evident or obvious when represented with numeric data?",
];

const ANALYSIS: &[&str] = &[
    "What can be revealed from the provided data (e.g. the keyboard input the person typed, the content they browse and preference of browsed topics)? For example, the personality of the person from their tone when sending messages, or if they initiate or respond to most calls, the schedules/plans of the person, or the opinion/background of the person?",
    "What would be the highlighted events for the person for the day?",
    "What psychological insights into the person can be provided based on their data for the day?",
];

/// Built-in sample questions for daily narratives.
#[derive(Debug, Clone, Copy, Default)]
pub struct QuestionBank;

impl QuestionBank {
    pub fn questions(&self, category: QuestionCategory) -> &'static [&'static str] {
        match category {
            QuestionCategory::SmartphoneUsage => SMARTPHONE_USAGE,
            QuestionCategory::PhysicalActivity => PHYSICAL_ACTIVITY,
            QuestionCategory::Sleep => SLEEP,
            QuestionCategory::SignificantEvents => SIGNIFICANT_EVENTS,
            QuestionCategory::Analysis => ANALYSIS,
        }
    }

    pub fn all(&self) -> impl Iterator<Item = (QuestionCategory, &'static str)> + '_ {
        QuestionCategory::ALL
            .into_iter()
            .flat_map(move |c| self.questions(c).iter().map(move |q| (c, *q)))
    }

    /// `category<TAB>question`, one per line.
    pub fn export(&self) -> String {
        self.all().map(|(c, q)| format!("{}\t{q}\n", c.slug())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{SensorKind, Timestamp};
    use crate::narrate::NarrativeLine;
    use chrono::NaiveDate;
    use std::collections::HashSet;

    fn doc(n: usize) -> NarrativeDocument {
        NarrativeDocument {
            date: NaiveDate::from_ymd_opt(2023, 9, 14).unwrap(),
            lines: (0..n)
                .map(|i| NarrativeLine {
                    ts: Timestamp::from_millis(i as i64).unwrap(),
                    stamp: format!("Thu Sep 14 09:29:{:02}", i % 60),
                    sensor: SensorKind::Screen,
                    description: "Phone screen turned on".into(),
                })
                .collect(),
        }
    }

    #[test]
    fn daily_question_layout() {
        let d = doc(1);
        let q = "Provide an estimation for how long the person slept.";
        let p = build_daily_question_prompt(q, &d).unwrap();
        assert_eq!(p.kind, PromptKind::DailyQuestion);
        assert!(p.text.starts_with("The following data is a chronological list that describes the smartphone sensor events collected over a day"));
        assert!(p.text.contains(&format!("Answer the following question based on this data: {q}.")));
        assert!(p.text.ends_with(&d.to_text()));
        assert_eq!(build_daily_question_prompt(q, &doc(0)), Err(PromptError::EmptyNarrative));
        assert_eq!(build_daily_question_prompt(" ", &d), Err(PromptError::EmptyQuestion));
    }

    #[test]
    fn daily_summary() {
        let p = build_daily_summary_prompt(&doc(3)).unwrap();
        assert_eq!(p.kind, PromptKind::DailySummary);
        assert!(p.text.contains("Generate a narrative of the day for the person in chronological order."));
        assert_eq!(build_daily_summary_prompt(&doc(0)), Err(PromptError::EmptyNarrative));
    }

    fn week(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("Day {i}: went to class.")).collect()
    }

    #[test]
    fn dass_prompt() {
        let p = build_dass_prompt(&week(7)).unwrap();
        for band in ["Normal: 0 to 4", "Mild: 5 to 6", "Moderate: 7 to 10", "Severe: 11 to 13", "Extremely Severe: 14 and above"] {
            assert!(p.text.contains(band), "{band}");
        }
        assert!(p.text.contains("Depression: <extent>\nAnxiety: <extent>\nStress: <extent>"));
        assert!(p.text.ends_with(&week(7).join("\n\n")));
        assert!(p.warnings.is_empty());
        assert_eq!(build_dass_prompt(&[]), Err(PromptError::NoSummaries));
        let partial = build_dass_prompt(&week(5)).unwrap();
        assert_eq!(partial.warnings.len(), 1);
        assert_eq!(build_dass_prompt(&week(8)), Err(PromptError::TooManySummaries(8)));
    }

    #[test]
    fn panas_prompt() {
        let p = build_panas_prompt(&week(7)).unwrap();
        assert!(p.text.contains("from 1 to 5, with 1 representing 'Never' and 5 representing 'Always'"));
        let listed = "Upset\nHostile\nAlert\nAshamed\nInspired\nNervous\nDetermined\nAttentive\nAfraid\nActive\n";
        assert!(p.text.contains(listed));
        assert_eq!(p.kind, PromptKind::WeeklyPanas);
        assert_eq!(build_panas_prompt(&[]), Err(PromptError::NoSummaries));
    }

    #[test]
    fn dass_bands() {
        use DassSeverity::*;
        let expect = |s| categorize_dass(s).unwrap();
        assert_eq!([expect(0), expect(4), expect(5)], [Normal, Normal, Mild]);
        assert_eq!([expect(10), expect(11), expect(13)], [Moderate, Severe, Severe]);
        assert_eq!([expect(14), expect(21)], [ExtremelySevere, ExtremelySevere]);
        assert_eq!(categorize_dass(-1), Err(PromptError::NegativeScore(-1)));
        let mut prev = Normal;
        for s in 0..=30 {
            let b = expect(s);
            assert!(b >= prev);
            prev = b;
        }
    }

    #[test]
    fn question_bank() {
        let bank = QuestionBank;
        assert_eq!(bank.questions(QuestionCategory::Sleep).len(), 2);
        assert_eq!(bank.all().count(), 17);
        let unique: HashSet<_> = bank.all().map(|(_, q)| q).collect();
        assert_eq!(unique.len(), 17);
        let export = bank.export();
        assert_eq!(export.lines().count(), 17);
        assert!(export.contains("sleep\tProvide an estimation for how long the person slept.\n"));
        assert_eq!(QuestionCategory::from_slug("Significant_Events"), Some(QuestionCategory::SignificantEvents));
        assert_eq!(QuestionCategory::from_slug("dreams"), None);
    }

    #[test]
    fn token_estimate_grows_with_narrative() {
        let mut last = 0;
        for n in 1..20 {
            let p = build_daily_summary_prompt(&doc(n)).unwrap();
            assert_eq!(p.token_estimate, p.text.len().div_ceil(4));
            assert!(p.token_estimate >= last);
            last = p.token_estimate;
        }
        let mut p = build_daily_summary_prompt(&doc(50)).unwrap();
        p.check_token_budget(10);
        assert_eq!(p.warnings.len(), 1);
    }
}

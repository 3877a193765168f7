//! Response parsing and the routed, ground-truth-anchored reward.
//!
//! A response earns a binary format reward for the exact
//! `<Reasoning>...</Reasoning> <Answer>...</Answer>` structure, and an
//! accuracy reward in `[0, 1]` from one of five strategies selected by the
//! record's pre-annotated type: strict yes/no match, normalized
//! multiple-choice match with subject extraction, unit-aware distance
//! tolerance, axis-wise spatial keyword match, and exact counting. The
//! total is the fixed weighting `0.9 * accuracy + 0.1 * format`.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::qa::{Grounding, QaRecord, RewardStrategy};

/// Weight of the accuracy component in the total reward.
pub const W_ACC: f64 = 0.9;
/// Weight of the format component in the total reward.
pub const W_FMT: f64 = 0.1;

/// Relative error at or below which a distance answer earns full reward.
pub const DISTANCE_FULL_TIER: f64 = 0.10;
/// Relative error at or below which a distance answer earns half reward.
pub const DISTANCE_HALF_TIER: f64 = 0.20;

/// Answers longer than this many whitespace tokens go through subject
/// extraction before the multiple-choice comparison.
pub const MCQ_LONG_SENTENCE_TOKENS: usize = 4;

/// Closed list of verbs/prepositions that end the subject of a sentence.
const SUBJECT_BREAKERS: &[&str] = &[
    "is", "are", "was", "were", "has", "have", "stands", "sits", "lies", "appears", "of", "in",
    "on", "at", "with", "near", "behind", "beside", "under", "over", "to", "from",
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RewardError {
    #[error("yes/no ground truth must be \"yes\" or \"no\", got {0:?}")]
    BadYesNoGroundTruth(String),
    #[error("distance ground truth must be positive, got {0}")]
    BadDistanceGroundTruth(f64),
    #[error("counting ground truth must be non-negative, got {0}")]
    BadCountGroundTruth(i64),
    #[error("spatial ground truth contains no lexicon keyword: {0:?}")]
    NoSpatialKeywords(String),
    #[error("reward routing failed for record {record_id}: {reason}")]
    Routing { record_id: String, reason: String },
    #[error("invalid spatial lexicon: {0}")]
    BadLexicon(String),
}

const REASONING_OPEN: &str = "<Reasoning>";
const REASONING_CLOSE: &str = "</Reasoning>";
const ANSWER_OPEN: &str = "<Answer>";
const ANSWER_CLOSE: &str = "</Answer>";

/// A response split into reasoning and answer.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedResponse {
    pub reasoning: String,
    pub answer: String,
    /// True iff the raw text is exactly one reasoning block followed by one
    /// answer block with nothing but whitespace around them.
    pub format_ok: bool,
}

fn count_occurrences(haystack: &str, needle: &str) -> usize {
    let mut count = 0;
    let mut rest = haystack;
    while let Some(pos) = rest.find(needle) {
        count += 1;
        rest = &rest[pos + needle.len()..];
    }
    count
}

/// Splits a raw response into reasoning and answer. Never fails: a response
/// that violates the structure is flagged via `format_ok` and the answer is
/// recovered best-effort from any `<Answer>` tag, else the whole text.
pub fn parse_response(raw: &str) -> ParsedResponse {
    let trimmed = raw.trim();
    let strict = (|| {
        for tag in [REASONING_OPEN, REASONING_CLOSE, ANSWER_OPEN, ANSWER_CLOSE] {
            if count_occurrences(trimmed, tag) != 1 {
                return None;
            }
        }
        if !trimmed.starts_with(REASONING_OPEN) || !trimmed.ends_with(ANSWER_CLOSE) {
            return None;
        }
        let r_close = trimmed.find(REASONING_CLOSE)?;
        let a_open = trimmed.find(ANSWER_OPEN)?;
        let a_close = trimmed.rfind(ANSWER_CLOSE)?;
        if !(REASONING_OPEN.len() <= r_close && r_close < a_open && a_open < a_close) {
            return None;
        }
        let between = &trimmed[r_close + REASONING_CLOSE.len()..a_open];
        if !between.chars().all(char::is_whitespace) {
            return None;
        }
        let reasoning = &trimmed[REASONING_OPEN.len()..r_close];
        let answer = &trimmed[a_open + ANSWER_OPEN.len()..a_close];
        Some(ParsedResponse {
            reasoning: reasoning.trim().to_string(),
            answer: answer.trim().to_string(),
            format_ok: true,
        })
    })();
    if let Some(parsed) = strict {
        return parsed;
    }

    // Fallback extraction. Format failure is data, not an error.
    let answer = if let Some(open) = raw.find(ANSWER_OPEN) {
        let after = &raw[open + ANSWER_OPEN.len()..];
        match after.find(ANSWER_CLOSE) {
            Some(close) => &after[..close],
            None => after,
        }
    } else {
        raw
    };
    let reasoning = raw
        .find(REASONING_OPEN)
        .and_then(|open| {
            let after = &raw[open + REASONING_OPEN.len()..];
            after.find(REASONING_CLOSE).map(|close| &after[..close])
        })
        .unwrap_or("");
    ParsedResponse {
        reasoning: reasoning.trim().to_string(),
        answer: answer.trim().to_string(),
        format_ok: false,
    }
}

/// Strategy A: strict, case-insensitive whole-string match against a
/// yes/no ground truth.
pub fn reward_yes_no(answer: &str, gt: &str) -> Result<f64, RewardError> {
    let gt_trimmed = gt.trim();
    if !gt_trimmed.eq_ignore_ascii_case("yes") && !gt_trimmed.eq_ignore_ascii_case("no") {
        return Err(RewardError::BadYesNoGroundTruth(gt.to_string()));
    }
    Ok(if answer.trim().eq_ignore_ascii_case(gt_trimmed) {
        1.0
    } else {
        0.0
    })
}

/// Lowercase alphanumeric tokens, with standalone articles removed.
fn normalize_tokens(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|word| {
            let token: String = word
                .chars()
                .filter(|c| c.is_ascii_alphanumeric())
                .map(|c| c.to_ascii_lowercase())
                .collect();
            if token.is_empty() || matches!(token.as_str(), "a" | "an" | "the") {
                None
            } else {
                Some(token)
            }
        })
        .collect()
}

fn normalize_mcq(text: &str) -> String {
    normalize_tokens(text).concat()
}

/// Text before the first verb/preposition of the closed
/// [`SUBJECT_BREAKERS`] list, or the whole text when none occurs.
fn extract_subject(text: &str) -> &str {
    let mut offset = 0;
    for word in text.split_whitespace() {
        let start = text[offset..]
            .find(word)
            .map(|p| p + offset)
            .unwrap_or(offset);
        offset = start + word.len();
        let token: String = word
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        if SUBJECT_BREAKERS.contains(&token.as_str()) {
            return text[..start].trim_end();
        }
    }
    text
}

/// Strategy B: normalized multiple-choice match. A direct normalized match
/// wins outright; long sentences additionally get one shot through subject
/// extraction, so "The truck is behind the building" still matches "truck".
pub fn reward_mcq(answer: &str, gt: &str) -> f64 {
    let gt_norm = normalize_mcq(gt);
    if gt_norm.is_empty() {
        return 0.0;
    }
    if normalize_mcq(answer) == gt_norm {
        return 1.0;
    }
    if answer.split_whitespace().count() > MCQ_LONG_SENTENCE_TOKENS {
        let subject = extract_subject(answer);
        if !subject.is_empty() && normalize_mcq(subject) == gt_norm {
            return 1.0;
        }
    }
    0.0
}

/// Supported length units, as (token, meters-per-unit).
const UNIT_TABLE: &[(&str, f64)] = &[
    ("mm", 0.001),
    ("millimeter", 0.001),
    ("millimeters", 0.001),
    ("millimetre", 0.001),
    ("millimetres", 0.001),
    ("cm", 0.01),
    ("centimeter", 0.01),
    ("centimeters", 0.01),
    ("centimetre", 0.01),
    ("centimetres", 0.01),
    ("m", 1.0),
    ("meter", 1.0),
    ("meters", 1.0),
    ("metre", 1.0),
    ("metres", 1.0),
    ("km", 1000.0),
    ("kilometer", 1000.0),
    ("kilometers", 1000.0),
    ("kilometre", 1000.0),
    ("kilometres", 1000.0),
    ("in", 0.0254),
    ("inch", 0.0254),
    ("inches", 0.0254),
    ("ft", 0.3048),
    ("foot", 0.3048),
    ("feet", 0.3048),
    ("yd", 0.9144),
    ("yard", 0.9144),
    ("yards", 0.9144),
    ("mi", 1609.344),
    ("mile", 1609.344),
    ("miles", 1609.344),
];

/// A number with an optional recognized length unit.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceQuantity {
    /// The literal parsed value.
    pub value: f64,
    /// Value converted to meters (bare numbers count as meters).
    pub meters: f64,
    pub unit: Option<&'static str>,
    /// True when further numbers follow the first one.
    pub more_numbers: bool,
}

/// Finds the first plain decimal number starting at or after `from`.
/// Thousands separators and scientific notation are not recognized; a comma
/// or exponent simply ends the number.
fn scan_number(bytes: &[u8], from: usize) -> Option<(f64, usize, usize)> {
    let mut i = from;
    while i < bytes.len() {
        let b = bytes[i];
        let digit_start = b.is_ascii_digit()
            || (b == b'.' && i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit());
        if !digit_start {
            i += 1;
            continue;
        }
        let mut start = i;
        if start > 0 && (bytes[start - 1] == b'-' || bytes[start - 1] == b'+') {
            let sign_ok = start < 2 || !bytes[start - 2].is_ascii_alphanumeric();
            if sign_ok {
                start -= 1;
            }
        }
        let mut end = i;
        while end < bytes.len() && bytes[end].is_ascii_digit() {
            end += 1;
        }
        if end < bytes.len() && bytes[end] == b'.' {
            let mut frac = end + 1;
            while frac < bytes.len() && bytes[frac].is_ascii_digit() {
                frac += 1;
            }
            if frac > end + 1 {
                end = frac;
            }
        }
        let text = core::str::from_utf8(&bytes[start..end]).ok()?;
        let value: f64 = text.parse().ok()?;
        return Some((value, start, end));
    }
    None
}

/// Parses the first number (with optional unit) from free text.
pub fn parse_distance(text: &str) -> Option<DistanceQuantity> {
    let bytes = text.as_bytes();
    let (value, _, end) = scan_number(bytes, 0)?;
    let mut unit_start = end;
    while unit_start < bytes.len() && bytes[unit_start].is_ascii_whitespace() {
        unit_start += 1;
    }
    let mut unit_end = unit_start;
    while unit_end < bytes.len() && bytes[unit_end].is_ascii_alphabetic() {
        unit_end += 1;
    }
    let unit_token = text[unit_start..unit_end].to_ascii_lowercase();
    let unit = UNIT_TABLE
        .iter()
        .find(|(token, _)| *token == unit_token)
        .copied();
    let meters = value * unit.map_or(1.0, |(_, factor)| factor);
    let more_numbers = scan_number(bytes, end).is_some();
    Some(DistanceQuantity {
        value,
        meters,
        unit: unit.map(|(token, _)| token),
        more_numbers,
    })
}

/// Tiered reward over relative error: 1.0 within 10%, 0.5 within 20%.
pub fn distance_tier(rel_error: f64) -> f64 {
    if rel_error <= DISTANCE_FULL_TIER {
        1.0
    } else if rel_error <= DISTANCE_HALF_TIER {
        0.5
    } else {
        0.0
    }
}

/// Strategy C: unit-aware numeric distance with tolerance tiers.
/// Unparsable answers earn 0.0 (not an error).
pub fn reward_distance(answer: &str, gt_meters: f64) -> Result<f64, RewardError> {
    if !gt_meters.is_finite() || gt_meters <= 0.0 {
        return Err(RewardError::BadDistanceGroundTruth(gt_meters));
    }
    Ok(match parse_distance(answer) {
        Some(q) => distance_tier(libm::fabs(q.meters - gt_meters) / gt_meters),
        None => 0.0,
    })
}

/// Directional axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Axis {
    FrontBack,
    LeftRight,
    UpDown,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::FrontBack, Axis::LeftRight, Axis::UpDown];
}

/// One polarity of an axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Direction {
    Front,
    Back,
    Left,
    Right,
    Up,
    Down,
}

impl Direction {
    pub const ALL: [Direction; 6] = [
        Direction::Front,
        Direction::Back,
        Direction::Left,
        Direction::Right,
        Direction::Up,
        Direction::Down,
    ];

    pub fn axis(&self) -> Axis {
        match self {
            Direction::Front | Direction::Back => Axis::FrontBack,
            Direction::Left | Direction::Right => Axis::LeftRight,
            Direction::Up | Direction::Down => Axis::UpDown,
        }
    }

    pub fn opposite(&self) -> Direction {
        match self {
            Direction::Front => Direction::Back,
            Direction::Back => Direction::Front,
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
        }
    }

    fn key(&self) -> &'static str {
        match self {
            Direction::Front => "front",
            Direction::Back => "back",
            Direction::Left => "left",
            Direction::Right => "right",
            Direction::Up => "up",
            Direction::Down => "down",
        }
    }
}

const EMBEDDED_LEXICON: &str = include_str!("../data/spatial_lexicon.json");

/// Closed keyword lexicon for spatial grading: phrases per direction, with
/// synonyms. Matching is longest-phrase-first over normalized words; the two
/// polarities of an axis never share a keyword.
#[derive(Debug, Clone)]
pub struct SpatialLexicon {
    /// (phrase words, direction), sorted by descending phrase length.
    entries: Vec<(Vec<String>, Direction)>,
}

impl SpatialLexicon {
    pub fn from_json(json: &str) -> Result<Self, RewardError> {
        let map: alloc::collections::BTreeMap<String, Vec<String>> =
            serde_json::from_str(json).map_err(|e| RewardError::BadLexicon(e.to_string()))?;
        let mut entries: Vec<(Vec<String>, Direction)> = Vec::new();
        for direction in Direction::ALL {
            let phrases = map.get(direction.key()).ok_or_else(|| {
                RewardError::BadLexicon(format!("missing direction {:?}", direction.key()))
            })?;
            for phrase in phrases {
                let words = phrase_words(phrase);
                if words.is_empty() {
                    return Err(RewardError::BadLexicon(format!("empty phrase {phrase:?}")));
                }
                if let Some((_, prior)) = entries.iter().find(|(w, _)| *w == words) {
                    if *prior != direction {
                        return Err(RewardError::BadLexicon(format!(
                            "phrase {phrase:?} appears under two directions"
                        )));
                    }
                }
                entries.push((words, direction));
            }
        }
        entries.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.0.cmp(&b.0)));
        Ok(Self { entries })
    }

    /// The lexicon shipped with the crate.
    pub fn embedded() -> Self {
        Self::from_json(EMBEDDED_LEXICON).expect("embedded lexicon is valid")
    }

    /// Extracts the set of asserted directions from free text via a
    /// longest-match scan at word granularity.
    pub fn extract(&self, text: &str) -> BTreeSet<Direction> {
        let words = phrase_words(text);
        let mut found = BTreeSet::new();
        let mut i = 0;
        while i < words.len() {
            let mut matched = false;
            for (phrase, direction) in &self.entries {
                if phrase.len() <= words.len() - i && words[i..i + phrase.len()] == phrase[..] {
                    found.insert(*direction);
                    i += phrase.len();
                    matched = true;
                    break;
                }
            }
            if !matched {
                i += 1;
            }
        }
        found
    }

    /// Iterates all (phrase, direction) entries, longest first.
    pub fn entries(&self) -> impl Iterator<Item = (&[String], Direction)> {
        self.entries.iter().map(|(w, d)| (w.as_slice(), *d))
    }
}

/// Lowercase alphanumeric words, articles kept (lexicon phrases contain
/// them: "to the left of").
fn phrase_words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| w.to_ascii_lowercase())
        .collect()
}

fn directions_by_axis(set: &BTreeSet<Direction>, axis: Axis) -> BTreeSet<Direction> {
    set.iter().copied().filter(|d| d.axis() == axis).collect()
}

/// Strategy D: fraction of ground-truth axes whose polarity set the answer
/// reproduces. Axes asserted by the answer but absent from the ground truth
/// change nothing.
pub fn reward_spatial(answer: &str, gt: &str, lex: &SpatialLexicon) -> Result<f64, RewardError> {
    let gt_dirs = lex.extract(gt);
    if gt_dirs.is_empty() {
        return Err(RewardError::NoSpatialKeywords(gt.to_string()));
    }
    let answer_dirs = lex.extract(answer);
    let mut constrained = 0u32;
    let mut correct = 0u32;
    for axis in Axis::ALL {
        let gt_axis = directions_by_axis(&gt_dirs, axis);
        if gt_axis.is_empty() {
            continue;
        }
        constrained += 1;
        if directions_by_axis(&answer_dirs, axis) == gt_axis {
            correct += 1;
        }
    }
    Ok(correct as f64 / constrained as f64)
}

const NUMBER_WORDS: &[(&str, i64)] = &[
    ("zero", 0),
    ("one", 1),
    ("two", 2),
    ("three", 3),
    ("four", 4),
    ("five", 5),
    ("six", 6),
    ("seven", 7),
    ("eight", 8),
    ("nine", 9),
    ("ten", 10),
    ("eleven", 11),
    ("twelve", 12),
    ("thirteen", 13),
    ("fourteen", 14),
    ("fifteen", 15),
    ("sixteen", 16),
    ("seventeen", 17),
    ("eighteen", 18),
    ("nineteen", 19),
    ("twenty", 20),
];

/// Parses the first integer from free text, accepting digit tokens and the
/// textual numbers zero through twenty.
pub fn parse_count(text: &str) -> Option<i64> {
    for token in text
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|t| !t.is_empty())
    {
        if token.bytes().all(|b| b.is_ascii_digit()) {
            if let Ok(value) = token.parse::<i64>() {
                return Some(value);
            }
            continue;
        }
        let lower = token.to_ascii_lowercase();
        if let Some((_, value)) = NUMBER_WORDS.iter().find(|(w, _)| *w == lower) {
            return Some(*value);
        }
    }
    None
}

/// Strategy E: exact integer match; unparsable answers earn 0.0.
pub fn reward_counting(answer: &str, gt: i64) -> Result<f64, RewardError> {
    if gt < 0 {
        return Err(RewardError::BadCountGroundTruth(gt));
    }
    Ok(match parse_count(answer) {
        Some(value) if value == gt => 1.0,
        _ => 0.0,
    })
}

/// Format, accuracy, and weighted total for one graded response.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RewardBreakdown {
    pub r_fmt: f64,
    pub r_acc: f64,
    pub strategy: RewardStrategy,
    pub total: f64,
    /// Human-readable audit trail of the grading decision.
    pub detail: String,
}

fn distance_ground_truth(record: &QaRecord) -> Result<f64, RewardError> {
    match &record.grounding {
        Grounding::DistanceHowFar {
            effective_depth_m,
            decimals,
            ..
        } => Ok(crate::qa::rounded_meters(*effective_depth_m, *decimals)),
        _ => Err(RewardError::Routing {
            record_id: record.id.clone(),
            reason: "distance strategy requires numeric distance grounding".to_string(),
        }),
    }
}

fn counting_ground_truth(record: &QaRecord) -> Result<i64, RewardError> {
    match &record.grounding {
        Grounding::ViewCount { count, .. } => Ok(*count as i64),
        _ => Err(RewardError::Routing {
            record_id: record.id.clone(),
            reason: "counting strategy requires a counted grounding".to_string(),
        }),
    }
}

/// Parses the raw response, routes it to the record's strategy, and applies
/// the fixed total weighting `W_ACC * r_acc + W_FMT * r_fmt`.
pub fn total_reward(
    raw: &str,
    record: &QaRecord,
    lex: &SpatialLexicon,
) -> Result<RewardBreakdown, RewardError> {
    let parsed = parse_response(raw);
    let r_fmt = if parsed.format_ok { 1.0 } else { 0.0 };
    let answer = parsed.answer.as_str();
    let (r_acc, note) = match record.reward_strategy {
        RewardStrategy::YesNo => {
            let r = reward_yes_no(answer, &record.answer)?;
            (r, format!("yes/no match against {:?}", record.answer))
        }
        RewardStrategy::Mcq => {
            let r = reward_mcq(answer, &record.answer);
            (r, format!("mcq match against {:?}", record.answer))
        }
        RewardStrategy::Distance => {
            let gt = distance_ground_truth(record)?;
            let r = reward_distance(answer, gt)?;
            let note = match parse_distance(answer) {
                Some(q) => {
                    let mut n = format!(
                        "parsed {} m vs gt {} m (rel err {:.4})",
                        q.meters,
                        gt,
                        libm::fabs(q.meters - gt) / gt
                    );
                    if q.more_numbers {
                        n.push_str("; multiple numbers, first used");
                    }
                    n
                }
                None => "unparsable".to_string(),
            };
            (r, note)
        }
        RewardStrategy::Spatial => {
            let r = reward_spatial(answer, &record.answer, lex)?;
            (r, format!("axis match against {:?}", record.answer))
        }
        RewardStrategy::Counting => {
            let gt = counting_ground_truth(record)?;
            let r = reward_counting(answer, gt)?;
            let note = match parse_count(answer) {
                Some(v) => format!("parsed {v} vs gt {gt}"),
                None => "unparsable".to_string(),
            };
            (r, note)
        }
    };
    Ok(RewardBreakdown {
        r_fmt,
        r_acc,
        strategy: record.reward_strategy,
        total: W_ACC * r_acc + W_FMT * r_fmt,
        detail: format!(
            "fmt={}; {}",
            if parsed.format_ok { "ok" } else { "broken" },
            note
        ),
    })
}

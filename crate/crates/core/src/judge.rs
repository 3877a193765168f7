//! Deterministic 0-10 judge rubric and the external-judge text protocol.
//!
//! [`judge`] scores every machine-checkable question type locally with the
//! same comparators the reward engine uses, so a 10 on yes/no, MCQ, or
//! counting coincides exactly with an accuracy reward of 1.0 (and a 0 with
//! 0.0). Open-ended semantic judging is delegated: [`build_judge_prompt`]
//! emits the evaluator transcript and [`parse_judge_reply`] extracts the
//! final `Score: X` from the reply. A token-F1 fallback keeps the pipeline
//! runnable offline, clearly labeled as an approximation.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};

use crate::reward::{
    distance_tier, parse_count, parse_distance, reward_mcq, Axis, Direction, SpatialLexicon,
    DISTANCE_FULL_TIER, DISTANCE_HALF_TIER,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum JudgeError {
    #[error("unrecognized question type {0:?}")]
    UnknownType(String),
    #[error("reference answer {reference:?} unusable for {question_type}: {reason}")]
    BadReference {
        question_type: &'static str,
        reference: String,
        reason: &'static str,
    },
    #[error("reply has no final \"Score: X\"; tail: {tail:?}")]
    MissingScore { tail: String },
    #[error("score {0} outside 0-10")]
    ScoreOutOfRange(i64),
}

/// A 0-10 judgment with its reasoning trail.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct JudgeScore {
    pub value: u8,
    pub rationale: String,
}

impl JudgeScore {
    fn new(value: u8, rationale: String) -> Self {
        debug_assert!(value <= 10);
        Self { value, rationale }
    }
}

/// One scoring request: the question, its type tag, the reference answer,
/// and the model answer under evaluation.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct JudgeRequest {
    pub question: String,
    pub question_type: String,
    pub reference: String,
    pub answer: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum JudgeKind {
    YesNo,
    Mcq,
    Distance,
    Counting,
    Spatial,
    OpenEnded,
}

fn kind_of(question_type: &str) -> Result<JudgeKind, JudgeError> {
    let t = question_type.trim().to_ascii_lowercase().replace('-', "_");
    Ok(match t.as_str() {
        "yes_no" | "true_false" => JudgeKind::YesNo,
        "mcq" | "multiple_choice" => JudgeKind::Mcq,
        "distance" => JudgeKind::Distance,
        "counting" => JudgeKind::Counting,
        "spatial" => JudgeKind::Spatial,
        "open_ended" => JudgeKind::OpenEnded,
        _ => return Err(JudgeError::UnknownType(question_type.to_string())),
    })
}

/// Maps yes/true/1 and no/false/0 onto a polarity; anything else is not a
/// recognizable yes/no answer.
fn yes_no_polarity(text: &str) -> Option<bool> {
    match text.trim().to_ascii_lowercase().as_str() {
        "yes" | "true" | "1" => Some(true),
        "no" | "false" | "0" => Some(false),
        _ => None,
    }
}

/// Scores a request deterministically per question type.
pub fn judge(req: &JudgeRequest, lex: &SpatialLexicon) -> Result<JudgeScore, JudgeError> {
    match kind_of(&req.question_type)? {
        JudgeKind::YesNo => {
            let reference = yes_no_polarity(&req.reference).ok_or(JudgeError::BadReference {
                question_type: "yes_no",
                reference: req.reference.clone(),
                reason: "not a yes/no polarity",
            })?;
            Ok(match yes_no_polarity(&req.answer) {
                Some(polarity) if polarity == reference => {
                    JudgeScore::new(10, "same yes/no meaning".to_string())
                }
                Some(_) => JudgeScore::new(0, "opposite yes/no meaning".to_string()),
                None => JudgeScore::new(0, "answer is not a yes/no".to_string()),
            })
        }
        JudgeKind::Mcq => {
            let matched = reward_mcq(&req.answer, &req.reference) == 1.0;
            Ok(if matched {
                JudgeScore::new(10, "option matches after normalization".to_string())
            } else {
                JudgeScore::new(0, "option mismatch".to_string())
            })
        }
        JudgeKind::Distance => {
            let reference = parse_distance(&req.reference).ok_or(JudgeError::BadReference {
                question_type: "distance",
                reference: req.reference.clone(),
                reason: "no parsable number",
            })?;
            if reference.meters.is_nan() || reference.meters <= 0.0 {
                return Err(JudgeError::BadReference {
                    question_type: "distance",
                    reference: req.reference.clone(),
                    reason: "non-positive reference distance",
                });
            }
            let Some(predicted) = parse_distance(&req.answer) else {
                return Ok(JudgeScore::new(0, "no valid number".to_string()));
            };
            let e = libm::fabs(predicted.meters - reference.meters) / reference.meters;
            Ok(JudgeScore::new(
                distance_score(e),
                format!("relative error {e:.4}"),
            ))
        }
        JudgeKind::Counting => {
            let reference = parse_count(&req.reference).ok_or(JudgeError::BadReference {
                question_type: "counting",
                reference: req.reference.clone(),
                reason: "no parsable integer",
            })?;
            Ok(match parse_count(&req.answer) {
                Some(value) if value == reference => {
                    JudgeScore::new(10, "exact integer match".to_string())
                }
                Some(value) => JudgeScore::new(0, format!("{value} != {reference}")),
                None => JudgeScore::new(0, "no valid integer".to_string()),
            })
        }
        JudgeKind::Spatial => {
            let reference = lex.extract(&req.reference);
            if reference.is_empty() {
                return Err(JudgeError::BadReference {
                    question_type: "spatial",
                    reference: req.reference.clone(),
                    reason: "no directional keyword",
                });
            }
            let answer = lex.extract(&req.answer);
            // Any opposed axis zeroes the score outright.
            for dir in &reference {
                if answer.contains(&dir.opposite()) {
                    return Ok(JudgeScore::new(
                        0,
                        format!("axis {:?} is opposite", dir.axis()),
                    ));
                }
            }
            let mut constrained = 0u32;
            let mut correct = 0u32;
            for axis in Axis::ALL {
                let ref_axis: BTreeSet<Direction> = reference
                    .iter()
                    .copied()
                    .filter(|d| d.axis() == axis)
                    .collect();
                if ref_axis.is_empty() {
                    continue;
                }
                constrained += 1;
                let ans_axis: BTreeSet<Direction> = answer
                    .iter()
                    .copied()
                    .filter(|d| d.axis() == axis)
                    .collect();
                if ans_axis == ref_axis {
                    correct += 1;
                }
            }
            let value = libm::round(10.0 * correct as f64 / constrained as f64) as u8;
            Ok(JudgeScore::new(
                value,
                format!("{correct} of {constrained} axes match"),
            ))
        }
        JudgeKind::OpenEnded => {
            let f1 = token_set_f1(&req.answer, &req.reference);
            Ok(JudgeScore::new(
                libm::round(10.0 * f1) as u8,
                format!(
                    "token-set F1 {f1:.3} (offline approximation; delegate to an external judge for semantic scoring)"
                ),
            ))
        }
    }
}

/// Distance rubric: 10 within 10% relative error, a linear 9..5 band up to
/// 20%, then 0.
pub fn distance_score(rel_error: f64) -> u8 {
    if rel_error <= DISTANCE_FULL_TIER {
        10
    } else if rel_error <= DISTANCE_HALF_TIER {
        let raw = libm::round(9.0 - 40.0 * (rel_error - DISTANCE_FULL_TIER));
        raw.clamp(5.0, 9.0) as u8
    } else {
        debug_assert_eq!(distance_tier(rel_error), 0.0);
        0
    }
}

fn token_set_f1(answer: &str, reference: &str) -> f64 {
    let tokens = |text: &str| -> BTreeSet<String> {
        text.split(|c: char| !c.is_ascii_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(|t| t.to_ascii_lowercase())
            .collect()
    };
    let a = tokens(answer);
    let r = tokens(reference);
    if a.is_empty() || r.is_empty() {
        return 0.0;
    }
    let overlap = a.intersection(&r).count() as f64;
    let precision = overlap / a.len() as f64;
    let recall = overlap / r.len() as f64;
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// System rubric for the external judge.
pub const JUDGE_SYSTEM_PROMPT: &str = "You are an evaluator. Compare answers and give a score 0-10.\n\nRules:\n- YES/NO: yes/true/1 = YES, no/false/0 = NO.\n  Same meaning -> 10, different -> 0.\n- Multiple choice: output a single option only.\n  Ignore articles/case/punctuation.\n  Match -> 10, else -> 0.\n- Numeric (distance, e.g. \"About X meters\"):\n  extract numbers. If no valid number -> 0.\n  * <=10% relative error -> 10\n  * <=20% -> 5-9\n  * >20% -> 0\n- Numeric (counting, e.g. \"3 different views\"):\n  use only the integer.\n  * Exact match -> 10\n  * Otherwise -> 0\n- Spatial: compare direction words (left/right,\n  front/behind, above/below).\n  If any axis is opposite (e.g. left vs right),\n  score -> 0. Otherwise, let N = axes used in\n  reference, C = correctly matched axes;\n  score \u{2248} 10 * C / N.\n- Open-ended: judge semantic match.\n  * All key info correct -> 10\n  * Most info correct -> 8-9\n  * Partially correct -> 6-7\n  * Mostly wrong -> 0-5\n\nIMPORTANT: End response with \"Score: X\"\nwhere X is 0-10.";

/// Builds the (system, user) transcript for the external judge.
pub fn build_judge_prompt(req: &JudgeRequest) -> (String, String) {
    let user = format!(
        "Q: {question}\nType: {question_type}\nReference: {reference}\nAnswer: {answer}\n\nGive score 0-10. Must end with \"Score: X\":",
        question = req.question,
        question_type = req.question_type,
        reference = req.reference,
        answer = req.answer,
    );
    (JUDGE_SYSTEM_PROMPT.to_string(), user)
}

/// Extracts the final `Score: X` from a judge reply. Earlier occurrences are
/// ignored; an out-of-range score is an error, never clamped.
pub fn parse_judge_reply(text: &str) -> Result<JudgeScore, JudgeError> {
    const MARKER: &str = "Score:";
    let start = text.rfind(MARKER).ok_or_else(|| JudgeError::MissingScore {
        tail: tail_of(text),
    })?;
    let after = text[start + MARKER.len()..].trim_start();
    let digits: String = after
        .chars()
        .take_while(|c| c.is_ascii_digit() || *c == '-')
        .collect();
    let value: i64 = digits.parse().map_err(|_| JudgeError::MissingScore {
        tail: tail_of(text),
    })?;
    if !(0..=10).contains(&value) {
        return Err(JudgeError::ScoreOutOfRange(value));
    }
    Ok(JudgeScore::new(
        value as u8,
        "external judge reply".to_string(),
    ))
}

fn tail_of(text: &str) -> String {
    let chars: alloc::vec::Vec<char> = text.chars().collect();
    let start = chars.len().saturating_sub(80);
    chars[start..].iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reward::{reward_counting, reward_yes_no};

    fn req(question_type: &str, reference: &str, answer: &str) -> JudgeRequest {
        JudgeRequest {
            question: "q".to_string(),
            question_type: question_type.to_string(),
            reference: reference.to_string(),
            answer: answer.to_string(),
        }
    }

    #[test]
    fn distance_band_examples() {
        assert_eq!(distance_score(0.05), 10);
        assert_eq!(distance_score(0.10), 10);
        assert_eq!(distance_score(0.101), 9);
        assert_eq!(distance_score(0.15), 7, "round(9 - 40*0.05)");
        assert_eq!(distance_score(0.20), 5);
        assert_eq!(distance_score(0.21), 0);
    }

    #[test]
    fn distance_judge_monotone() {
        let mut last = 10u8;
        for step in 0..=50 {
            let e = step as f64 * 0.01;
            let s = distance_score(e);
            assert!(s <= last, "score rose at e={e}");
            last = s;
        }
    }

    #[test]
    fn distance_judge_via_text() {
        let lex = SpatialLexicon::embedded();
        let score = judge(&req("distance", "About 10.0 meters", "11.5 m"), &lex).unwrap();
        assert_eq!(score.value, 7);
        let score = judge(&req("distance", "About 10.0 meters", "no idea"), &lex).unwrap();
        assert_eq!(score.value, 0);
        assert!(judge(&req("distance", "far away", "10 m"), &lex).is_err());
    }

    #[test]
    fn spatial_judge_formula_and_opposite() {
        let lex = SpatialLexicon::embedded();
        let score = judge(
            &req(
                "spatial",
                "behind and to the right of and above",
                "behind and right",
            ),
            &lex,
        )
        .unwrap();
        assert_eq!(score.value, 7, "round(10 * 2/3)");

        let score = judge(&req("spatial", "right", "left"), &lex).unwrap();
        assert_eq!(score.value, 0);

        // Opposite on one axis dominates correct axes.
        let score = judge(
            &req("spatial", "behind and above", "behind and below"),
            &lex,
        )
        .unwrap();
        assert_eq!(score.value, 0);
    }

    #[test]
    fn yes_no_judge_polarities() {
        let lex = SpatialLexicon::embedded();
        assert_eq!(judge(&req("yes_no", "Yes", "yes"), &lex).unwrap().value, 10);
        assert_eq!(
            judge(&req("yes_no", "Yes", "true"), &lex).unwrap().value,
            10
        );
        assert_eq!(judge(&req("yes_no", "No", "0"), &lex).unwrap().value, 10);
        assert_eq!(judge(&req("yes_no", "Yes", "no"), &lex).unwrap().value, 0);
        assert_eq!(
            judge(&req("yes_no", "Yes", "Yes, it is"), &lex)
                .unwrap()
                .value,
            0
        );
        assert!(judge(&req("yes_no", "maybe", "yes"), &lex).is_err());
    }

    #[test]
    fn binary_agreement_with_reward() {
        let lex = SpatialLexicon::embedded();
        for answer in ["Yes", "No", " YES ", "Yes, it is", "banana", ""] {
            let score = judge(&req("yes_no", "Yes", answer), &lex).unwrap().value;
            let reward = reward_yes_no(answer, "Yes").unwrap();
            assert_eq!(score == 10, reward == 1.0, "answer {answer:?}");
            assert_eq!(score == 0, reward == 0.0, "answer {answer:?}");
        }
        for answer in ["3", "three", "3 different views", "4", "none"] {
            let score = judge(&req("counting", "3", answer), &lex).unwrap().value;
            let reward = reward_counting(answer, 3).unwrap();
            assert_eq!(score == 10, reward == 1.0, "answer {answer:?}");
        }
        for answer in [
            "the crate",
            "crate",
            "The crate is on the left side",
            "cart",
        ] {
            let score = judge(&req("mcq", "crate", answer), &lex).unwrap().value;
            let reward = reward_mcq(answer, "crate");
            assert_eq!(score == 10, reward == 1.0, "answer {answer:?}");
        }
    }

    #[test]
    fn open_ended_fallback_f1() {
        let lex = SpatialLexicon::embedded();
        let score = judge(&req("open_ended", "a red crate", "a red crate"), &lex).unwrap();
        assert_eq!(score.value, 10);
        assert!(score.rationale.contains("approximation"));
        let score = judge(&req("open_ended", "a red crate", "something else"), &lex).unwrap();
        assert_eq!(score.value, 0);
    }

    #[test]
    fn unknown_type_rejected() {
        let lex = SpatialLexicon::embedded();
        assert!(matches!(
            judge(&req("essay", "x", "y"), &lex),
            Err(JudgeError::UnknownType(_))
        ));
    }

    #[test]
    fn prompt_contains_protocol_markers() {
        let (system, user) = build_judge_prompt(&req("distance", "About 4.2 meters", "4 m"));
        assert!(system.starts_with("You are an evaluator"));
        assert!(system.contains("Same meaning -> 10, different -> 0."));
        assert!(system.contains("<=20% -> 5-9"));
        assert!(system.contains("End response with \"Score: X\""));
        assert!(user.contains("Reference: About 4.2 meters"));
        assert!(user.ends_with("Give score 0-10. Must end with \"Score: X\":"));
    }

    #[test]
    fn reply_parsing() {
        assert_eq!(parse_judge_reply("thinking...\nScore: 8").unwrap().value, 8);
        assert_eq!(parse_judge_reply("Score: 7\nScore: 3").unwrap().value, 3);
        assert_eq!(parse_judge_reply("Score: 10").unwrap().value, 10);
        assert!(matches!(
            parse_judge_reply("Score: 11"),
            Err(JudgeError::ScoreOutOfRange(11))
        ));
        assert!(matches!(
            parse_judge_reply("Score: -2"),
            Err(JudgeError::ScoreOutOfRange(-2))
        ));
        assert!(matches!(
            parse_judge_reply("no score at all"),
            Err(JudgeError::MissingScore { .. })
        ));
        assert!(matches!(
            parse_judge_reply("Score: none"),
            Err(JudgeError::MissingScore { .. })
        ));
    }

    proptest::proptest! {
        #[test]
        fn prop_judge_total_on_arbitrary_answers(answer in ".{0,80}") {
            let lex = SpatialLexicon::embedded();
            for (question_type, reference) in [
                ("yes_no", "Yes"),
                ("mcq", "crate"),
                ("distance", "About 4.2 meters"),
                ("counting", "3"),
                ("spatial", "behind and above"),
                ("open_ended", "a red crate"),
            ] {
                let score = judge(&req(question_type, reference, &answer), &lex).unwrap();
                proptest::prop_assert!(score.value <= 10);
            }
        }

        #[test]
        fn prop_reply_parser_never_panics(text in ".{0,120}") {
            if let Ok(score) = parse_judge_reply(&text) {
                proptest::prop_assert!(score.value <= 10);
            }
        }
    }
}

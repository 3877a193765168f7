//! Generation of geometry-grounded QA pairs.
//!
//! Five categories are produced from analyzed scenes, each with
//! machine-checkable ground truth derived from the scene's physical
//! quantities: camera view source, distance, environment, relative spatial
//! position, and intrinsic attribute comparison. Every record carries
//! structured grounding metadata from which its answer can be re-derived
//! verbatim ([`regenerate_answer`]), which is the correctness oracle the
//! whole pipeline leans on.

mod generate;
mod templates;

pub use generate::{
    gen_attribute, gen_distance, gen_environment, gen_spatial, gen_view_source, generate_dataset,
    generate_scene_candidates, object_labels, Candidate, CandidateBody, EnvEntry, SceneCandidates,
    TfVariant,
};
pub use templates::TemplateRegistry;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::geom::{ErpDims, Vec3};
use crate::scene::{similar_distance_quartiles, SceneAttribute};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QaError {
    #[error("template registry is missing {category}/{kind}")]
    MissingTemplate { category: String, kind: String },
    #[error("template registry failed to parse: {0}")]
    BadTemplates(String),
    #[error("invalid generation config: {0}")]
    BadConfig(String),
}

/// The five question categories.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    ViewSource,
    Distance,
    Environment,
    Spatial,
    Attribute,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::ViewSource,
        Category::Distance,
        Category::Environment,
        Category::Spatial,
        Category::Attribute,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Category::ViewSource => "view_source",
            Category::Distance => "distance",
            Category::Environment => "environment",
            Category::Spatial => "spatial",
            Category::Attribute => "attribute",
        }
    }
}

/// Surface form of a question.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum QuestionType {
    TrueFalse,
    MultipleChoice,
    OpenEnded,
}

impl QuestionType {
    pub const ALL: [QuestionType; 3] = [
        QuestionType::TrueFalse,
        QuestionType::MultipleChoice,
        QuestionType::OpenEnded,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            QuestionType::TrueFalse => "true_false",
            QuestionType::MultipleChoice => "multiple_choice",
            QuestionType::OpenEnded => "open_ended",
        }
    }

    /// Structured questions have a closed answer space.
    pub fn is_structured(&self) -> bool {
        matches!(self, QuestionType::TrueFalse | QuestionType::MultipleChoice)
    }
}

/// Which accuracy-reward strategy grades the record.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum RewardStrategy {
    YesNo,
    Mcq,
    Distance,
    Spatial,
    Counting,
}

impl RewardStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            RewardStrategy::YesNo => "yes_no",
            RewardStrategy::Mcq => "mcq",
            RewardStrategy::Distance => "distance",
            RewardStrategy::Spatial => "spatial",
            RewardStrategy::Counting => "counting",
        }
    }
}

/// A directional word on one of the three spatial axes.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum AxisWord {
    InFrontOf,
    Behind,
    LeftOf,
    RightOf,
    Above,
    Below,
}

impl AxisWord {
    pub fn phrase(&self) -> &'static str {
        match self {
            AxisWord::InFrontOf => "in front of",
            AxisWord::Behind => "behind",
            AxisWord::LeftOf => "to the left of",
            AxisWord::RightOf => "to the right of",
            AxisWord::Above => "above",
            AxisWord::Below => "below",
        }
    }

    pub fn opposite(&self) -> AxisWord {
        match self {
            AxisWord::InFrontOf => AxisWord::Behind,
            AxisWord::Behind => AxisWord::InFrontOf,
            AxisWord::LeftOf => AxisWord::RightOf,
            AxisWord::RightOf => AxisWord::LeftOf,
            AxisWord::Above => AxisWord::Below,
            AxisWord::Below => AxisWord::Above,
        }
    }

    /// Whether the relation holds for displacement `v` at threshold `tau`.
    /// `v` is the first object's position minus the second's; forward is -Z.
    pub fn holds(&self, v: [f64; 3], tau: f64) -> bool {
        match self {
            AxisWord::InFrontOf => v[2] < -tau,
            AxisWord::Behind => v[2] > tau,
            AxisWord::LeftOf => v[0] < -tau,
            AxisWord::RightOf => v[0] > tau,
            AxisWord::Above => v[1] > tau,
            AxisWord::Below => v[1] < -tau,
        }
    }
}

/// Thresholded spatial relation between two objects, `v = P_i - P_j`.
/// An axis carries a label only when its component magnitude exceeds
/// `tau_pos`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialRelation {
    pub v: Vec3,
    pub tau_pos: f64,
    pub front_back: Option<AxisWord>,
    pub left_right: Option<AxisWord>,
    pub vertical: Option<AxisWord>,
}

/// Computes the labeled spatial relation of `pi` relative to `pj`.
pub fn spatial_relation(pi: Vec3, pj: Vec3, tau_pos: f64) -> SpatialRelation {
    let v = pi.sub(&pj);
    let comps = [v.x, v.y, v.z];
    let pick = |pos: AxisWord| -> Option<AxisWord> {
        if pos.holds(comps, tau_pos) {
            Some(pos)
        } else if pos.opposite().holds(comps, tau_pos) {
            Some(pos.opposite())
        } else {
            None
        }
    };
    SpatialRelation {
        v,
        tau_pos,
        front_back: pick(AxisWord::InFrontOf),
        left_right: pick(AxisWord::LeftOf),
        vertical: pick(AxisWord::Above),
    }
}

impl SpatialRelation {
    /// Labels in the fixed order front/back, left/right, up/down.
    pub fn labels(&self) -> Vec<AxisWord> {
        [self.front_back, self.left_right, self.vertical]
            .into_iter()
            .flatten()
            .collect()
    }

    /// Joined phrase such as "behind and to the right of and above",
    /// or `None` when no axis is decisive.
    pub fn phrase(&self) -> Option<String> {
        let labels = self.labels();
        if labels.is_empty() {
            return None;
        }
        let parts: Vec<&str> = labels.iter().map(|w| w.phrase()).collect();
        Some(parts.join(" and "))
    }
}

/// Structured ground truth attached to every record; sufficient on its own
/// to re-derive the answer string.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Grounding {
    ViewMajority {
        instance_id: u16,
        /// Face name -> sampled point count (nonzero faces only).
        face_counts: BTreeMap<String, u32>,
    },
    ViewSeam {
        instance_id: u16,
        faces: Vec<String>,
        is_seam: bool,
        /// True when the question asks "spans multiple views", false when it
        /// asks "only a single view".
        asked_multi: bool,
    },
    ViewCount {
        instance_id: u16,
        faces: Vec<String>,
        count: u32,
    },
    DistanceHowFar {
        instance_id: u16,
        effective_depth_m: f64,
        decimals: u8,
    },
    DistanceSimilar {
        instance_a: u16,
        instance_b: u16,
        /// `[p25, p50, p75]` per object.
        quartiles_a: [f64; 3],
        quartiles_b: [f64; 3],
        asked_similar: bool,
    },
    DistanceCloser {
        instance_a: u16,
        instance_b: u16,
        label_a: String,
        label_b: String,
        effective_a_m: f64,
        effective_b_m: f64,
    },
    EnvAttribute {
        attribute: SceneAttribute,
        asked: SceneAttribute,
    },
    EnvName {
        environment_name: String,
    },
    SpatialWhere {
        instance_a: u16,
        instance_b: u16,
        v: [f64; 3],
        tau_pos: f64,
    },
    SpatialAxis {
        instance_a: u16,
        instance_b: u16,
        v: [f64; 3],
        tau_pos: f64,
        asked: AxisWord,
    },
    VolumeLarger {
        instance_a: u16,
        instance_b: u16,
        label_a: String,
        label_b: String,
        volume_a: f64,
        volume_b: f64,
    },
    VolumeTf {
        instance_a: u16,
        instance_b: u16,
        volume_a: f64,
        volume_b: f64,
        /// True when the question asks "larger", false for "smaller".
        asked_larger: bool,
    },
    Flatter {
        instance_a: u16,
        instance_b: u16,
        label_a: String,
        label_b: String,
        flatness_a: f64,
        flatness_b: f64,
    },
}

/// One generated question with its physically derived answer.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QaRecord {
    pub id: String,
    pub scene_id: String,
    pub category: Category,
    pub question_type: QuestionType,
    pub reward_strategy: RewardStrategy,
    pub question: String,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<Vec<String>>,
    pub grounding: Grounding,
}

pub fn yes_no(value: bool) -> &'static str {
    if value {
        "Yes"
    } else {
        "No"
    }
}

/// Renders a distance answer, e.g. "About 4.2 meters".
pub fn distance_answer(meters: f64, decimals: u8) -> String {
    format!("About {:.*} meters", decimals as usize, meters)
}

/// The numeric value exactly as it appears in a rendered distance answer:
/// formatting and reparsing keeps grading and answer text bit-consistent.
pub fn rounded_meters(value: f64, decimals: u8) -> f64 {
    format!("{:.*}", decimals as usize, value)
        .parse()
        .expect("formatted float reparses")
}

/// Re-derives a record's answer from its grounding metadata alone.
///
/// For every emitted record this reproduces the stored answer exactly;
/// the end-to-end tests assert it over whole datasets.
pub fn regenerate_answer(record: &QaRecord) -> String {
    match &record.grounding {
        Grounding::ViewMajority { face_counts, .. } => {
            majority_face_name(face_counts).unwrap_or_default()
        }
        Grounding::ViewSeam {
            is_seam,
            asked_multi,
            ..
        } => String::from(yes_no(*is_seam == *asked_multi)),
        Grounding::ViewCount { count, .. } => format!("{count}"),
        Grounding::DistanceHowFar {
            effective_depth_m,
            decimals,
            ..
        } => distance_answer(*effective_depth_m, *decimals),
        Grounding::DistanceSimilar {
            quartiles_a,
            quartiles_b,
            asked_similar,
            ..
        } => {
            let similar = similar_distance_quartiles(*quartiles_a, *quartiles_b);
            String::from(yes_no(similar == *asked_similar))
        }
        Grounding::DistanceCloser {
            label_a,
            label_b,
            effective_a_m,
            effective_b_m,
            ..
        } => {
            if effective_a_m <= effective_b_m {
                label_a.clone()
            } else {
                label_b.clone()
            }
        }
        Grounding::EnvAttribute { attribute, asked } => String::from(yes_no(attribute == asked)),
        Grounding::EnvName { environment_name } => environment_name.clone(),
        Grounding::SpatialWhere { v, tau_pos, .. } => {
            spatial_relation(Vec3::new(v[0], v[1], v[2]), Vec3::ZERO, *tau_pos)
                .phrase()
                .unwrap_or_default()
        }
        Grounding::SpatialAxis {
            v, tau_pos, asked, ..
        } => String::from(yes_no(asked.holds(*v, *tau_pos))),
        Grounding::VolumeLarger {
            label_a,
            label_b,
            volume_a,
            volume_b,
            ..
        } => {
            if volume_a >= volume_b {
                label_a.clone()
            } else {
                label_b.clone()
            }
        }
        Grounding::VolumeTf {
            volume_a,
            volume_b,
            asked_larger,
            ..
        } => {
            let fact = if *asked_larger {
                volume_a > volume_b
            } else {
                volume_a < volume_b
            };
            String::from(yes_no(fact))
        }
        Grounding::Flatter {
            label_a,
            label_b,
            flatness_a,
            flatness_b,
            ..
        } => {
            if flatness_a <= flatness_b {
                label_a.clone()
            } else {
                label_b.clone()
            }
        }
    }
}

/// Majority face by count; ties resolve to the first face in
/// [`crate::geom::CubeFace::ALL`] order. Generation skips tied majorities,
/// so stored records are never ambiguous.
pub fn majority_face_name(face_counts: &BTreeMap<String, u32>) -> Option<String> {
    let mut best: Option<(&str, u32)> = None;
    for face in crate::geom::CubeFace::ALL {
        if let Some(count) = face_counts.get(face.name()) {
            if best.is_none_or(|(_, c)| *count > c) {
                best = Some((face.name(), *count));
            }
        }
    }
    best.map(|(name, _)| String::from(name))
}

/// Per-question-type weights for the generator's type mix.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct TypeMix {
    pub true_false: f64,
    pub multiple_choice: f64,
    pub open_ended: f64,
}

impl Default for TypeMix {
    fn default() -> Self {
        Self {
            true_false: 1.0,
            multiple_choice: 1.0,
            open_ended: 1.0,
        }
    }
}

impl TypeMix {
    pub fn weight(&self, qt: QuestionType) -> f64 {
        match qt {
            QuestionType::TrueFalse => self.true_false,
            QuestionType::MultipleChoice => self.multiple_choice,
            QuestionType::OpenEnded => self.open_ended,
        }
    }
}

/// Generator configuration.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    /// Desired record count per category.
    pub category_targets: BTreeMap<Category, usize>,
    pub type_mix: TypeMix,
    /// Threshold (meters) below which a displacement axis carries no label.
    pub tau_pos: f64,
    /// Decimal places in rendered distance answers.
    pub distance_decimals: u8,
    pub seed: u64,
    /// Target share of "Yes" among true/false answers.
    pub yes_no_balance: f64,
    /// Volume-ratio band treated as ambiguous (question skipped).
    pub volume_ratio_band: [f64; 2],
    /// Minimum flatness-score gap for a "flatter" comparison.
    pub flatness_min_gap: f64,
    /// Skip "how far" questions whose rendered answer would round below this.
    pub min_distance_answer_m: f64,
    /// Environment-identification MCQ draws per scene.
    pub env_mcq_per_scene: usize,
    /// Per-scene cap on candidates of each pairwise question kind.
    pub per_kind_scene_cap: usize,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            category_targets: Category::ALL.into_iter().map(|c| (c, 100)).collect(),
            type_mix: TypeMix::default(),
            tau_pos: 0.5,
            distance_decimals: 1,
            seed: 0,
            yes_no_balance: 0.5,
            volume_ratio_band: [0.8, 1.25],
            flatness_min_gap: 0.05,
            min_distance_answer_m: 0.1,
            env_mcq_per_scene: 4,
            per_kind_scene_cap: 16,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), QaError> {
        if self.tau_pos.is_nan() || self.tau_pos <= 0.0 {
            return Err(QaError::BadConfig(format!(
                "tau_pos must be positive, got {}",
                self.tau_pos
            )));
        }
        if !(self.yes_no_balance > 0.0 && self.yes_no_balance < 1.0) {
            return Err(QaError::BadConfig(format!(
                "yes_no_balance must be inside (0, 1), got {}",
                self.yes_no_balance
            )));
        }
        let [lo, hi] = self.volume_ratio_band;
        if !(lo > 0.0 && lo <= 1.0 && hi >= 1.0) {
            return Err(QaError::BadConfig(format!(
                "volume_ratio_band must bracket 1.0 with a positive lower edge, got [{lo}, {hi}]"
            )));
        }
        Ok(())
    }

    pub fn target_for(&self, category: Category) -> usize {
        self.category_targets.get(&category).copied().unwrap_or(0)
    }
}

/// Metrics derivable from a dataset alone.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DatasetStats {
    pub total_records: usize,
    pub category_counts: BTreeMap<String, usize>,
    pub category_shares: BTreeMap<String, f64>,
    pub question_type_counts: BTreeMap<String, usize>,
    pub unique_answers: usize,
    /// Mean answer length in characters.
    pub mean_answer_length: f64,
    pub yes_count: usize,
    pub no_count: usize,
    /// `yes / (yes + no)` over true/false records; absent without any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yes_no_ratio: Option<f64>,
}

impl DatasetStats {
    pub fn compute(records: &[QaRecord]) -> DatasetStats {
        let mut category_counts: BTreeMap<String, usize> = BTreeMap::new();
        let mut question_type_counts: BTreeMap<String, usize> = BTreeMap::new();
        let mut answers: alloc::collections::BTreeSet<&str> = alloc::collections::BTreeSet::new();
        let mut total_chars = 0usize;
        let mut yes = 0usize;
        let mut no = 0usize;
        for record in records {
            *category_counts
                .entry(String::from(record.category.name()))
                .or_default() += 1;
            *question_type_counts
                .entry(String::from(record.question_type.name()))
                .or_default() += 1;
            answers.insert(record.answer.as_str());
            total_chars += record.answer.chars().count();
            if record.question_type == QuestionType::TrueFalse {
                if record.answer == "Yes" {
                    yes += 1;
                } else if record.answer == "No" {
                    no += 1;
                }
            }
        }
        let total = records.len();
        let category_shares = category_counts
            .iter()
            .map(|(k, v)| (k.clone(), *v as f64 / total.max(1) as f64))
            .collect();
        DatasetStats {
            total_records: total,
            category_counts,
            category_shares,
            question_type_counts,
            unique_answers: answers.len(),
            mean_answer_length: if total == 0 {
                0.0
            } else {
                total_chars as f64 / total as f64
            },
            yes_count: yes,
            no_count: no,
            yes_no_ratio: if yes + no > 0 {
                Some(yes as f64 / (yes + no) as f64)
            } else {
                None
            },
        }
    }
}

/// Full generation report: dataset metrics plus supply diagnostics.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GenerationStats {
    pub seed: u64,
    #[serde(flatten)]
    pub dataset: DatasetStats,
    /// Per-category records missing relative to the configured target.
    pub shortfalls: BTreeMap<String, usize>,
    /// Named counters for skipped generations (e.g. empty distractor pools).
    pub warnings: BTreeMap<String, u32>,
}

const PROMPT_HEADER: &str = "You are an expert in analyzing 360\u{b0} panoramic (ERP) images";

/// Rule suffix appended for true/false questions.
pub const PROMPT_RULES_TRUE_FALSE: &str = "This is a YES/NO question. Your <Answer> must be EXACTLY \"Yes\" or \"No\" (case-sensitive, no extra words).\nExample:\n<Reasoning>...</Reasoning>\n<Answer>Yes</Answer>";

/// Rule suffix appended for multiple-choice questions.
pub const PROMPT_RULES_MULTIPLE_CHOICE: &str = "This is a MULTIPLE CHOICE question. Your <Answer> must be EXACTLY one of the provided options.\nExample:\n<Reasoning>...</Reasoning>\n<Answer>AbandonedCable</Answer>";

/// Rule suffix appended for open-ended questions.
pub const PROMPT_RULES_OPEN_ENDED: &str = "This is an OPEN-ENDED question. Your <Answer> should be concise and direct (under 20 words).\nExample:\n<Reasoning>...</Reasoning>\n<Answer>The building is behind and to the right of and below the truck</Answer>";

/// Builds the full model prompt for a record: the shared base prompt with the
/// image resolution and question interpolated, plus the rule suffix for the
/// record's question type. Options are listed inline for multiple choice.
pub fn build_prompt(record: &QaRecord, dims: ErpDims) -> String {
    let mut question = record.question.clone();
    if let Some(options) = &record.options {
        question.push_str("\nOptions: ");
        question.push_str(&options.join(" | "));
    }
    let rules = match record.question_type {
        QuestionType::TrueFalse => PROMPT_RULES_TRUE_FALSE,
        QuestionType::MultipleChoice => PROMPT_RULES_MULTIPLE_CHOICE,
        QuestionType::OpenEnded => PROMPT_RULES_OPEN_ENDED,
    };
    format!(
        "{header} ({w}x{h}).\nAnalyze the image carefully and focus on the specific objects mentioned in bounding boxes.\n\n{question}\n\nProvide your reasoning based on the panoramic scene within <Reasoning> tags, then give your final answer within <Answer> tags.\n\n{rules}",
        header = PROMPT_HEADER,
        w = dims.width(),
        h = dims.height(),
    )
}

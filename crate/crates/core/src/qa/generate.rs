//! Per-scene candidate generation and the balanced dataset assembly.
//!
//! Generation produces *candidates*: fully grounded questions whose
//! true/false variants keep both phrasings (positive and negated) so the
//! assembly pass can steer the global Yes/No ratio without ever bending a
//! fact. Assembly then fills per-category targets with a type mix, assigns
//! ids, and computes the run statistics. Everything is a pure function of
//! `(scenes, config, seed)`.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::geom::CubeFace;
use crate::sampling::{rng_for, shuffle};
use crate::scene::{containment_excluded, similar_distance, SceneAnalysis, SceneAttribute};

use super::templates::TemplateRegistry;
use super::{
    distance_answer, spatial_relation, yes_no, AxisWord, Category, DatasetStats, GenerationConfig,
    GenerationStats, Grounding, QaError, QaRecord, QuestionType, RewardStrategy,
};

/// One phrasing of a true/false candidate with its matching grounding.
#[derive(Debug, Clone)]
pub struct TfVariant {
    pub question: String,
    pub grounding: Grounding,
}

#[derive(Debug, Clone)]
pub enum CandidateBody {
    Fixed {
        question: String,
        answer: String,
        options: Option<Vec<String>>,
        grounding: Grounding,
    },
    /// `fact` is the truth of the positive phrasing; the negative phrasing
    /// is its logical complement, so either surface answer is reachable.
    TrueFalse {
        fact: bool,
        positive: TfVariant,
        negative: TfVariant,
    },
}

/// A record-to-be, before id assignment and Yes/No polarity selection.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub scene_id: String,
    pub category: Category,
    pub question_type: QuestionType,
    pub reward_strategy: RewardStrategy,
    pub body: CandidateBody,
}

impl Candidate {
    /// Answer of the positive phrasing (used by generation tests).
    pub fn preview_answer(&self) -> String {
        match &self.body {
            CandidateBody::Fixed { answer, .. } => answer.clone(),
            CandidateBody::TrueFalse { fact, .. } => yes_no(*fact).to_string(),
        }
    }

    pub fn question_for_preview(&self) -> &str {
        match &self.body {
            CandidateBody::Fixed { question, .. } => question,
            CandidateBody::TrueFalse { positive, .. } => &positive.question,
        }
    }

    /// Finalizes the candidate into a record. For true/false candidates,
    /// `want_yes` picks the phrasing that yields the desired surface answer.
    pub fn into_record(self, id: String, want_yes: bool) -> QaRecord {
        let (question, answer, options, grounding) = match self.body {
            CandidateBody::Fixed {
                question,
                answer,
                options,
                grounding,
            } => (question, answer, options, grounding),
            CandidateBody::TrueFalse {
                fact,
                positive,
                negative,
            } => {
                let variant = if fact == want_yes { positive } else { negative };
                (
                    variant.question,
                    yes_no(want_yes).to_string(),
                    None,
                    variant.grounding,
                )
            }
        };
        QaRecord {
            id,
            scene_id: self.scene_id,
            category: self.category,
            question_type: self.question_type,
            reward_strategy: self.reward_strategy,
            question,
            answer,
            options,
            grounding,
        }
    }
}

/// All candidates generated from one scene plus warning counters.
#[derive(Debug, Clone)]
pub struct SceneCandidates {
    pub scene_id: String,
    pub candidates: Vec<Candidate>,
    pub warnings: BTreeMap<String, u32>,
}

/// One entry of the environment distractor pool.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvEntry {
    pub name: String,
    pub category: String,
}

/// Display labels for a scene's objects: the bare class label when unique in
/// the scene, otherwise the class plus the 2D box for disambiguation.
pub fn object_labels(scene: &SceneAnalysis) -> Vec<String> {
    let mut class_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for obj in &scene.objects {
        *class_counts
            .entry(obj.instance.class_label.as_str())
            .or_default() += 1;
    }
    scene
        .objects
        .iter()
        .map(|obj| {
            let class = obj.instance.class_label.as_str();
            if class_counts[class] == 1 {
                class.to_string()
            } else {
                let b = &obj.instance.bbox2d;
                format!(
                    "{class} [{}, {}, {}, {}]",
                    b.x_min, b.y_min, b.x_max, b.y_max
                )
            }
        })
        .collect()
}

fn the(label: &str) -> String {
    format!("the {label}")
}

fn face_names(counts: &[u32; 6]) -> Vec<String> {
    CubeFace::ALL
        .into_iter()
        .filter(|f| counts[f.index()] > 0)
        .map(|f| f.name().to_string())
        .collect()
}

/// Unordered object pairs eligible for comparative questions: not excluded
/// by box containment, in a seeded deterministic shuffle order.
fn eligible_pairs(scene: &SceneAnalysis, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let n = scene.objects.len();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if !containment_excluded(
                &scene.objects[i].instance,
                &scene.objects[j].instance,
                &scene.filter,
            ) {
                pairs.push((i, j));
            }
        }
    }
    shuffle(&mut pairs, rng);
    pairs
}

/// Camera-view-source questions: majority-view MCQ, seam true/false, and
/// visible-view counting.
pub fn gen_view_source(
    scene: &SceneAnalysis,
    cfg: &GenerationConfig,
    registry: &TemplateRegistry,
) -> Vec<Candidate> {
    let labels = object_labels(scene);
    let mut out = Vec::new();
    for (idx, obj) in scene
        .objects
        .iter()
        .enumerate()
        .take(cfg.per_kind_scene_cap)
    {
        let a = the(&labels[idx]);
        let subs = [("{a}", a.as_str())];
        let id = obj.instance.instance_id;

        // Majority view: skipped when the top two counts tie.
        let mut best = 0u32;
        let mut second = 0u32;
        let mut best_face = None;
        for face in CubeFace::ALL {
            let c = obj.face_counts[face.index()];
            if c > best {
                second = best;
                best = c;
                best_face = Some(face);
            } else if c > second {
                second = c;
            }
        }
        if let Some(face) = best_face {
            if best > second {
                out.push(Candidate {
                    scene_id: scene.scene_id.clone(),
                    category: Category::ViewSource,
                    question_type: QuestionType::MultipleChoice,
                    reward_strategy: RewardStrategy::Mcq,
                    body: CandidateBody::Fixed {
                        question: registry.render(Category::ViewSource, "majority_mcq", &subs),
                        answer: face.name().to_string(),
                        options: Some(CubeFace::ALL.iter().map(|f| f.name().to_string()).collect()),
                        grounding: Grounding::ViewMajority {
                            instance_id: id,
                            face_counts: CubeFace::ALL
                                .into_iter()
                                .filter(|f| obj.face_counts[f.index()] > 0)
                                .map(|f| (f.name().to_string(), obj.face_counts[f.index()]))
                                .collect(),
                        },
                    },
                });
            }
        }

        let faces = face_names(&obj.face_counts);
        let is_seam = obj.object3d.is_seam;
        out.push(Candidate {
            scene_id: scene.scene_id.clone(),
            category: Category::ViewSource,
            question_type: QuestionType::TrueFalse,
            reward_strategy: RewardStrategy::YesNo,
            body: CandidateBody::TrueFalse {
                fact: is_seam,
                positive: TfVariant {
                    question: registry.render(Category::ViewSource, "seam_tf_pos", &subs),
                    grounding: Grounding::ViewSeam {
                        instance_id: id,
                        faces: faces.clone(),
                        is_seam,
                        asked_multi: true,
                    },
                },
                negative: TfVariant {
                    question: registry.render(Category::ViewSource, "seam_tf_neg", &subs),
                    grounding: Grounding::ViewSeam {
                        instance_id: id,
                        faces: faces.clone(),
                        is_seam,
                        asked_multi: false,
                    },
                },
            },
        });

        let count = obj.object3d.visible_faces.len() as u32;
        out.push(Candidate {
            scene_id: scene.scene_id.clone(),
            category: Category::ViewSource,
            question_type: QuestionType::OpenEnded,
            reward_strategy: RewardStrategy::Counting,
            body: CandidateBody::Fixed {
                question: registry.render(Category::ViewSource, "count_oe", &subs),
                answer: format!("{count}"),
                options: None,
                grounding: Grounding::ViewCount {
                    instance_id: id,
                    faces,
                    count,
                },
            },
        });
    }
    out
}

/// Distance questions: open-ended "how far", similar-distance true/false,
/// and closer-of-two MCQ (skipped when the pair is similar).
pub fn gen_distance(
    scene: &SceneAnalysis,
    cfg: &GenerationConfig,
    registry: &TemplateRegistry,
) -> Vec<Candidate> {
    let labels = object_labels(scene);
    let mut rng = rng_for(cfg.seed, &["gen", &scene.scene_id, "distance"]);
    let mut out = Vec::new();

    for (idx, obj) in scene
        .objects
        .iter()
        .enumerate()
        .take(cfg.per_kind_scene_cap)
    {
        let eff = obj.profile.effective_depth;
        if super::rounded_meters(eff, cfg.distance_decimals) < cfg.min_distance_answer_m {
            continue;
        }
        let a = the(&labels[idx]);
        out.push(Candidate {
            scene_id: scene.scene_id.clone(),
            category: Category::Distance,
            question_type: QuestionType::OpenEnded,
            reward_strategy: RewardStrategy::Distance,
            body: CandidateBody::Fixed {
                question: registry.render(Category::Distance, "how_far_oe", &[("{a}", a.as_str())]),
                answer: distance_answer(eff, cfg.distance_decimals),
                options: None,
                grounding: Grounding::DistanceHowFar {
                    instance_id: obj.instance.instance_id,
                    effective_depth_m: eff,
                    decimals: cfg.distance_decimals,
                },
            },
        });
    }

    let mut tf_left = cfg.per_kind_scene_cap;
    let mut mcq_left = cfg.per_kind_scene_cap;
    for (i, j) in eligible_pairs(scene, &mut rng) {
        if tf_left == 0 && mcq_left == 0 {
            break;
        }
        let (oa, ob) = (&scene.objects[i], &scene.objects[j]);
        let (la, lb) = (the(&labels[i]), the(&labels[j]));
        let subs = [("{a}", la.as_str()), ("{b}", lb.as_str())];
        let similar = similar_distance(&oa.profile, &ob.profile);

        if tf_left > 0 {
            tf_left -= 1;
            let grounding = |asked_similar: bool| Grounding::DistanceSimilar {
                instance_a: oa.instance.instance_id,
                instance_b: ob.instance.instance_id,
                quartiles_a: oa.profile.quartiles(),
                quartiles_b: ob.profile.quartiles(),
                asked_similar,
            };
            out.push(Candidate {
                scene_id: scene.scene_id.clone(),
                category: Category::Distance,
                question_type: QuestionType::TrueFalse,
                reward_strategy: RewardStrategy::YesNo,
                body: CandidateBody::TrueFalse {
                    fact: similar,
                    positive: TfVariant {
                        question: registry.render(Category::Distance, "similar_tf_pos", &subs),
                        grounding: grounding(true),
                    },
                    negative: TfVariant {
                        question: registry.render(Category::Distance, "similar_tf_neg", &subs),
                        grounding: grounding(false),
                    },
                },
            });
        }

        let (ea, eb) = (oa.profile.effective_depth, ob.profile.effective_depth);
        if mcq_left > 0 && !similar && ea != eb {
            mcq_left -= 1;
            let nearer = if ea <= eb { &labels[i] } else { &labels[j] };
            out.push(Candidate {
                scene_id: scene.scene_id.clone(),
                category: Category::Distance,
                question_type: QuestionType::MultipleChoice,
                reward_strategy: RewardStrategy::Mcq,
                body: CandidateBody::Fixed {
                    question: registry.render(Category::Distance, "closer_mcq", &subs),
                    answer: nearer.clone(),
                    options: Some([labels[i].clone(), labels[j].clone()].to_vec()),
                    grounding: Grounding::DistanceCloser {
                        instance_a: oa.instance.instance_id,
                        instance_b: ob.instance.instance_id,
                        label_a: labels[i].clone(),
                        label_b: labels[j].clone(),
                        effective_a_m: ea,
                        effective_b_m: eb,
                    },
                },
            });
        }
    }
    out
}

fn base_name(name: &str) -> String {
    let tokens: Vec<&str> = name.split('_').collect();
    if tokens.len() >= 2 {
        tokens[..tokens.len() - 1].join("_")
    } else {
        name.to_string()
    }
}

/// Two environment names are variants of one another when they share a base
/// name and differ only in a suffix token (day/night/winter style).
pub(crate) fn variant_affinity(a: &str, b: &str) -> bool {
    !a.eq_ignore_ascii_case(b) && base_name(a).eq_ignore_ascii_case(&base_name(b))
}

/// Environment questions: indoor/outdoor true/false and environment
/// identification MCQ with semantically chosen distractors. Returns the
/// number of MCQ draws skipped for lack of distractors.
pub fn gen_environment(
    scene: &SceneAnalysis,
    pool: &[EnvEntry],
    cfg: &GenerationConfig,
    registry: &TemplateRegistry,
) -> (Vec<Candidate>, u32) {
    let meta = &scene.metadata;
    let mut rng = rng_for(cfg.seed, &["gen", &scene.scene_id, "environment"]);
    let mut out = Vec::new();

    let indoor = meta.scene_attribute == SceneAttribute::Indoor;
    out.push(Candidate {
        scene_id: scene.scene_id.clone(),
        category: Category::Environment,
        question_type: QuestionType::TrueFalse,
        reward_strategy: RewardStrategy::YesNo,
        body: CandidateBody::TrueFalse {
            fact: indoor,
            positive: TfVariant {
                question: registry.render(Category::Environment, "attribute_tf_indoor", &[]),
                grounding: Grounding::EnvAttribute {
                    attribute: meta.scene_attribute,
                    asked: SceneAttribute::Indoor,
                },
            },
            negative: TfVariant {
                question: registry.render(Category::Environment, "attribute_tf_outdoor", &[]),
                grounding: Grounding::EnvAttribute {
                    attribute: meta.scene_attribute,
                    asked: SceneAttribute::Outdoor,
                },
            },
        },
    });

    let others: Vec<&EnvEntry> = pool
        .iter()
        .filter(|e| !e.name.eq_ignore_ascii_case(&meta.environment_name))
        .collect();
    if others.is_empty() {
        return (out, cfg.env_mcq_per_scene as u32);
    }

    let mut seen_option_sets: BTreeSet<Vec<String>> = BTreeSet::new();
    let mut skipped = 0u32;
    for _ in 0..cfg.env_mcq_per_scene {
        let mut affinity: Vec<&EnvEntry> = others
            .iter()
            .copied()
            .filter(|e| variant_affinity(&e.name, &meta.environment_name))
            .collect();
        let mut same_category: Vec<&EnvEntry> = others
            .iter()
            .copied()
            .filter(|e| {
                !variant_affinity(&e.name, &meta.environment_name)
                    && e.category.eq_ignore_ascii_case(&meta.scene_category)
            })
            .collect();
        let mut rest: Vec<&EnvEntry> = others
            .iter()
            .copied()
            .filter(|e| {
                !variant_affinity(&e.name, &meta.environment_name)
                    && !e.category.eq_ignore_ascii_case(&meta.scene_category)
            })
            .collect();
        shuffle(&mut affinity, &mut rng);
        shuffle(&mut same_category, &mut rng);
        shuffle(&mut rest, &mut rng);

        let distractors: Vec<String> = affinity
            .into_iter()
            .chain(same_category)
            .chain(rest)
            .take(3)
            .map(|e| e.name.clone())
            .collect();
        let mut key = distractors.clone();
        key.sort();
        if !seen_option_sets.insert(key) {
            skipped += 1;
            continue;
        }

        let mut options: Vec<String> = core::iter::once(meta.environment_name.clone())
            .chain(distractors)
            .collect();
        shuffle(&mut options, &mut rng);
        out.push(Candidate {
            scene_id: scene.scene_id.clone(),
            category: Category::Environment,
            question_type: QuestionType::MultipleChoice,
            reward_strategy: RewardStrategy::Mcq,
            body: CandidateBody::Fixed {
                question: registry.render(Category::Environment, "env_mcq", &[]),
                answer: meta.environment_name.clone(),
                options: Some(options),
                grounding: Grounding::EnvName {
                    environment_name: meta.environment_name.clone(),
                },
            },
        });
    }
    (out, skipped)
}

/// Spatial questions: open-ended multi-axis descriptions and single-axis
/// true/false, over containment-eligible pairs with at least one decisive
/// axis.
pub fn gen_spatial(
    scene: &SceneAnalysis,
    cfg: &GenerationConfig,
    registry: &TemplateRegistry,
) -> Vec<Candidate> {
    let labels = object_labels(scene);
    let mut rng = rng_for(cfg.seed, &["gen", &scene.scene_id, "spatial"]);
    let mut out = Vec::new();
    let mut oe_left = cfg.per_kind_scene_cap;
    let mut tf_left = cfg.per_kind_scene_cap;

    for (i, j) in eligible_pairs(scene, &mut rng) {
        if oe_left == 0 && tf_left == 0 {
            break;
        }
        let (oa, ob) = (&scene.objects[i], &scene.objects[j]);
        let rel = spatial_relation(oa.object3d.centroid, ob.object3d.centroid, cfg.tau_pos);
        let words = rel.labels();
        if words.is_empty() {
            continue;
        }
        let v = [rel.v.x, rel.v.y, rel.v.z];
        let (la, lb) = (the(&labels[i]), the(&labels[j]));

        if oe_left > 0 {
            oe_left -= 1;
            out.push(Candidate {
                scene_id: scene.scene_id.clone(),
                category: Category::Spatial,
                question_type: QuestionType::OpenEnded,
                reward_strategy: RewardStrategy::Spatial,
                body: CandidateBody::Fixed {
                    question: registry.render(
                        Category::Spatial,
                        "where_oe",
                        &[("{a}", la.as_str()), ("{b}", lb.as_str())],
                    ),
                    answer: rel.phrase().expect("at least one axis is decisive"),
                    options: None,
                    grounding: Grounding::SpatialWhere {
                        instance_a: oa.instance.instance_id,
                        instance_b: ob.instance.instance_id,
                        v,
                        tau_pos: cfg.tau_pos,
                    },
                },
            });
        }

        if tf_left > 0 {
            tf_left -= 1;
            let asked = words[rng.gen_range(0..words.len())];
            let variant = |word: AxisWord| TfVariant {
                question: registry.render(
                    Category::Spatial,
                    "axis_tf",
                    &[
                        ("{a}", la.as_str()),
                        ("{rel}", word.phrase()),
                        ("{b}", lb.as_str()),
                    ],
                ),
                grounding: Grounding::SpatialAxis {
                    instance_a: oa.instance.instance_id,
                    instance_b: ob.instance.instance_id,
                    v,
                    tau_pos: cfg.tau_pos,
                    asked: word,
                },
            };
            out.push(Candidate {
                scene_id: scene.scene_id.clone(),
                category: Category::Spatial,
                question_type: QuestionType::TrueFalse,
                reward_strategy: RewardStrategy::YesNo,
                body: CandidateBody::TrueFalse {
                    fact: true,
                    positive: variant(asked),
                    negative: variant(asked.opposite()),
                },
            });
        }
    }
    out
}

/// Intrinsic attribute questions: volume comparisons (MCQ and true/false)
/// and flatness comparisons, with ambiguity bands.
pub fn gen_attribute(
    scene: &SceneAnalysis,
    cfg: &GenerationConfig,
    registry: &TemplateRegistry,
) -> Vec<Candidate> {
    let labels = object_labels(scene);
    let mut rng = rng_for(cfg.seed, &["gen", &scene.scene_id, "attribute"]);
    let mut out = Vec::new();
    let mut vol_mcq_left = cfg.per_kind_scene_cap;
    let mut vol_tf_left = cfg.per_kind_scene_cap;
    let mut flat_left = cfg.per_kind_scene_cap;
    let [band_lo, band_hi] = cfg.volume_ratio_band;

    for (i, j) in eligible_pairs(scene, &mut rng) {
        if vol_mcq_left == 0 && vol_tf_left == 0 && flat_left == 0 {
            break;
        }
        let (oa, ob) = (&scene.objects[i], &scene.objects[j]);
        let (va, vb) = (oa.object3d.volume, ob.object3d.volume);
        let vol_ambiguous = if va == 0.0 && vb == 0.0 {
            true
        } else if va == 0.0 || vb == 0.0 {
            false
        } else {
            let r = va / vb;
            (band_lo..=band_hi).contains(&r) || (band_lo..=band_hi).contains(&(1.0 / r))
        };
        let subs_owned = (the(&labels[i]), the(&labels[j]));
        let subs = [
            ("{a}", subs_owned.0.as_str()),
            ("{b}", subs_owned.1.as_str()),
        ];

        if !vol_ambiguous {
            if vol_mcq_left > 0 {
                vol_mcq_left -= 1;
                let larger = if va >= vb { &labels[i] } else { &labels[j] };
                out.push(Candidate {
                    scene_id: scene.scene_id.clone(),
                    category: Category::Attribute,
                    question_type: QuestionType::MultipleChoice,
                    reward_strategy: RewardStrategy::Mcq,
                    body: CandidateBody::Fixed {
                        question: registry.render(Category::Attribute, "larger_mcq", &subs),
                        answer: larger.clone(),
                        options: Some([labels[i].clone(), labels[j].clone()].to_vec()),
                        grounding: Grounding::VolumeLarger {
                            instance_a: oa.instance.instance_id,
                            instance_b: ob.instance.instance_id,
                            label_a: labels[i].clone(),
                            label_b: labels[j].clone(),
                            volume_a: va,
                            volume_b: vb,
                        },
                    },
                });
            }
            if vol_tf_left > 0 {
                vol_tf_left -= 1;
                let grounding = |asked_larger: bool| Grounding::VolumeTf {
                    instance_a: oa.instance.instance_id,
                    instance_b: ob.instance.instance_id,
                    volume_a: va,
                    volume_b: vb,
                    asked_larger,
                };
                out.push(Candidate {
                    scene_id: scene.scene_id.clone(),
                    category: Category::Attribute,
                    question_type: QuestionType::TrueFalse,
                    reward_strategy: RewardStrategy::YesNo,
                    body: CandidateBody::TrueFalse {
                        fact: va > vb,
                        positive: TfVariant {
                            question: registry.render(Category::Attribute, "larger_tf_pos", &subs),
                            grounding: grounding(true),
                        },
                        negative: TfVariant {
                            question: registry.render(Category::Attribute, "larger_tf_neg", &subs),
                            grounding: grounding(false),
                        },
                    },
                });
            }
        }

        let (fa, fb) = (oa.object3d.flatness, ob.object3d.flatness);
        if flat_left > 0 && libm::fabs(fa - fb) >= cfg.flatness_min_gap {
            flat_left -= 1;
            let flatter = if fa <= fb { &labels[i] } else { &labels[j] };
            out.push(Candidate {
                scene_id: scene.scene_id.clone(),
                category: Category::Attribute,
                question_type: QuestionType::MultipleChoice,
                reward_strategy: RewardStrategy::Mcq,
                body: CandidateBody::Fixed {
                    question: registry.render(Category::Attribute, "flatter_mcq", &subs),
                    answer: flatter.clone(),
                    options: Some([labels[i].clone(), labels[j].clone()].to_vec()),
                    grounding: Grounding::Flatter {
                        instance_a: oa.instance.instance_id,
                        instance_b: ob.instance.instance_id,
                        label_a: labels[i].clone(),
                        label_b: labels[j].clone(),
                        flatness_a: fa,
                        flatness_b: fb,
                    },
                },
            });
        }
    }
    out
}

/// Runs all five category generators for one scene.
pub fn generate_scene_candidates(
    scene: &SceneAnalysis,
    pool: &[EnvEntry],
    cfg: &GenerationConfig,
    registry: &TemplateRegistry,
) -> SceneCandidates {
    let mut candidates = gen_view_source(scene, cfg, registry);
    candidates.extend(gen_distance(scene, cfg, registry));
    let (env, env_skipped) = gen_environment(scene, pool, cfg, registry);
    candidates.extend(env);
    candidates.extend(gen_spatial(scene, cfg, registry));
    candidates.extend(gen_attribute(scene, cfg, registry));
    let mut warnings = BTreeMap::new();
    if env_skipped > 0 {
        warnings.insert("env_mcq_skipped".to_string(), env_skipped);
    }
    SceneCandidates {
        scene_id: scene.scene_id.clone(),
        candidates,
        warnings,
    }
}

fn type_slot(qt: QuestionType) -> usize {
    match qt {
        QuestionType::TrueFalse => 0,
        QuestionType::MultipleChoice => 1,
        QuestionType::OpenEnded => 2,
    }
}

/// Balances per-scene candidates into the final dataset: fills per-category
/// targets with the configured type mix, interleaves categories, assigns
/// sequential ids, and steers the Yes/No ratio toward the configured target
/// by picking the complementary phrasing when one polarity runs ahead.
pub fn assemble_dataset(
    scene_candidates: Vec<SceneCandidates>,
    cfg: &GenerationConfig,
) -> (Vec<QaRecord>, GenerationStats) {
    let n_scenes = scene_candidates.len();
    let mut warnings: BTreeMap<String, u32> = BTreeMap::new();
    let mut queues: BTreeMap<Category, Vec<[VecDeque<Candidate>; 3]>> = Category::ALL
        .into_iter()
        .map(|c| {
            (
                c,
                (0..n_scenes)
                    .map(|_| core::array::from_fn(|_| VecDeque::new()))
                    .collect(),
            )
        })
        .collect();
    for (scene_idx, sc) in scene_candidates.into_iter().enumerate() {
        for (key, count) in sc.warnings {
            *warnings.entry(key).or_default() += count;
        }
        for cand in sc.candidates {
            let slot = type_slot(cand.question_type);
            queues
                .get_mut(&cand.category)
                .expect("all categories present")[scene_idx][slot]
                .push_back(cand);
        }
    }

    let mut selected: BTreeMap<Category, VecDeque<Candidate>> = BTreeMap::new();
    for category in Category::ALL {
        let target = cfg.target_for(category);
        let scene_queues = queues.get_mut(&category).expect("all categories present");
        let available: Vec<QuestionType> = QuestionType::ALL
            .into_iter()
            .filter(|qt| scene_queues.iter().any(|q| !q[type_slot(*qt)].is_empty()))
            .collect();
        let mut picked: Vec<Candidate> = Vec::with_capacity(target);
        if !available.is_empty() && target > 0 {
            let raw_weights: Vec<f64> = available
                .iter()
                .map(|qt| cfg.type_mix.weight(*qt).max(0.0))
                .collect();
            let weight_sum: f64 = raw_weights.iter().sum();
            let mut quotas: Vec<usize> = if weight_sum > 0.0 {
                raw_weights
                    .iter()
                    .map(|w| ((target as f64) * w / weight_sum) as usize)
                    .collect()
            } else {
                available.iter().map(|_| target / available.len()).collect()
            };
            let mut assigned: usize = quotas.iter().sum();
            let mut slot = 0;
            let n_quotas = quotas.len();
            while assigned < target {
                quotas[slot % n_quotas] += 1;
                assigned += 1;
                slot += 1;
            }
            for (qt, quota) in available.iter().zip(quotas) {
                round_robin_take(scene_queues, type_slot(*qt), quota, &mut picked);
            }
            // Spill: backfill from whatever supply remains.
            for qt in QuestionType::ALL {
                if picked.len() >= target {
                    break;
                }
                let missing = target - picked.len();
                round_robin_take(scene_queues, type_slot(qt), missing, &mut picked);
            }
        }
        selected.insert(category, picked.into());
    }

    let mut rng = rng_for(cfg.seed, &["assemble"]);
    let mut records = Vec::new();
    let mut yes = 0usize;
    let mut no = 0usize;
    let rounds = selected.values().map(VecDeque::len).max().unwrap_or(0);
    for _ in 0..rounds {
        for category in Category::ALL {
            let Some(cand) = selected.get_mut(&category).and_then(VecDeque::pop_front) else {
                continue;
            };
            let id = format!("qa-{:06}", records.len() + 1);
            let want_yes = match &cand.body {
                CandidateBody::TrueFalse { .. } => {
                    let drawn = decide_yes(yes, no, cfg.yes_no_balance, &mut rng);
                    if drawn {
                        yes += 1;
                    } else {
                        no += 1;
                    }
                    drawn
                }
                CandidateBody::Fixed { .. } => false,
            };
            records.push(cand.into_record(id, want_yes));
        }
    }

    let dataset = DatasetStats::compute(&records);
    let shortfalls = Category::ALL
        .into_iter()
        .filter_map(|c| {
            let target = cfg.target_for(c);
            let got = dataset.category_counts.get(c.name()).copied().unwrap_or(0);
            (got < target).then(|| (c.name().to_string(), target - got))
        })
        .collect();
    (
        records,
        GenerationStats {
            seed: cfg.seed,
            dataset,
            shortfalls,
            warnings,
        },
    )
}

fn decide_yes(yes: usize, no: usize, target: f64, rng: &mut ChaCha8Rng) -> bool {
    let total = (yes + no) as f64;
    let yes_f = yes as f64;
    if yes_f < target * total {
        true
    } else if yes_f > target * total {
        false
    } else {
        rng.gen_range(0.0..1.0) < target
    }
}

fn round_robin_take(
    scene_queues: &mut [[VecDeque<Candidate>; 3]],
    slot: usize,
    quota: usize,
    out: &mut Vec<Candidate>,
) {
    let mut taken = 0;
    while taken < quota {
        let mut any = false;
        for queues in scene_queues.iter_mut() {
            if taken >= quota {
                break;
            }
            if let Some(cand) = queues[slot].pop_front() {
                out.push(cand);
                taken += 1;
                any = true;
            }
        }
        if !any {
            break;
        }
    }
}

/// End-to-end generation: builds the environment pool, generates candidates
/// per scene (scene order is preserved, so a parallel map upstream yields the
/// same dataset), and assembles the balanced output.
pub fn generate_dataset(
    scenes: &[SceneAnalysis],
    cfg: &GenerationConfig,
) -> Result<(Vec<QaRecord>, GenerationStats), QaError> {
    cfg.validate()?;
    let registry = TemplateRegistry::embedded();
    let pool = environment_pool(scenes);
    let scene_candidates: Vec<SceneCandidates> = scenes
        .iter()
        .map(|s| generate_scene_candidates(s, &pool, cfg, &registry))
        .collect();
    Ok(assemble_dataset(scene_candidates, cfg))
}

/// Distinct environments across the corpus, sorted by name.
pub fn environment_pool(scenes: &[SceneAnalysis]) -> Vec<EnvEntry> {
    let mut by_name: BTreeMap<String, String> = BTreeMap::new();
    for scene in scenes {
        by_name
            .entry(scene.metadata.environment_name.clone())
            .or_insert_with(|| scene.metadata.scene_category.clone());
    }
    by_name
        .into_iter()
        .map(|(name, category)| EnvEntry { name, category })
        .collect()
}

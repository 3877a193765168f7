//! Group-relative policy optimization math and the two-stage curriculum.
//!
//! Rewards arrive per response group; advantages are each response's reward
//! minus the group mean. The objective is the token-mean clipped surrogate
//! minus a KL penalty against the reference policy. No gradients live here:
//! this module computes the numbers an external trainer consumes.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::qa::QuestionType;
use crate::sampling::{rng_for, sample_indices, shuffle};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GrpoError {
    #[error("group must have at least 2 responses, got {0}")]
    GroupTooSmall(usize),
    #[error("token log-prob lists differ in length: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("token log-prob lists must be nonempty")]
    EmptyTokens,
    #[error("{what} contains a non-finite value")]
    NonFinite { what: &'static str },
    #[error("group {prompt_id} has {got} responses, expected K={expected}")]
    WrongGroupSize {
        prompt_id: String,
        expected: usize,
        got: usize,
    },
    #[error("invalid config: {0}")]
    BadConfig(String),
    #[error("balanced stage requires at least one open-ended record")]
    NoOpenEnded,
    #[error("curriculum requires at least one structured (true/false or multiple-choice) record")]
    NoStructured,
}

/// Which KL estimator the objective uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KlEstimator {
    /// `exp(ref - new) - (ref - new) - 1`, per token: unbiased and
    /// nonnegative.
    #[default]
    NonNegative,
    /// Plain mean of `new - ref`, kept for comparison runs.
    PlainDiff,
}

/// GRPO hyperparameters.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct GrpoConfig {
    /// Responses sampled per prompt (K).
    pub group_size: usize,
    pub clip_epsilon: f64,
    pub kl_beta: f64,
    pub w_acc: f64,
    pub w_fmt: f64,
    pub max_completion_tokens: usize,
    pub kl_estimator: KlEstimator,
}

impl Default for GrpoConfig {
    fn default() -> Self {
        Self {
            group_size: 4,
            clip_epsilon: 0.2,
            kl_beta: 0.01,
            w_acc: crate::reward::W_ACC,
            w_fmt: crate::reward::W_FMT,
            max_completion_tokens: 256,
            kl_estimator: KlEstimator::default(),
        }
    }
}

impl GrpoConfig {
    pub fn validate(&self) -> Result<(), GrpoError> {
        if self.group_size < 2 {
            return Err(GrpoError::BadConfig(
                "group_size must be at least 2".to_string(),
            ));
        }
        if self.clip_epsilon.is_nan() || self.clip_epsilon <= 0.0 {
            return Err(GrpoError::BadConfig(
                "clip_epsilon must be positive".to_string(),
            ));
        }
        if self.kl_beta < 0.0 {
            return Err(GrpoError::BadConfig(
                "kl_beta must be non-negative".to_string(),
            ));
        }
        Ok(())
    }
}

/// Trainer-facing hyperparameter bundle carried alongside the GRPO math.
/// Stage 1 runs the aggressive preset, stage 2 the conservative one.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrainingPreset {
    pub name: &'static str,
    pub peak_learning_rate: f64,
    pub warmup_ratio: f64,
    pub global_batch_size: usize,
    pub epochs: usize,
    pub max_grad_norm: f64,
    pub lora_rank: usize,
    pub lora_alpha: usize,
    pub lora_dropout: f64,
}

impl TrainingPreset {
    pub fn aggressive() -> Self {
        Self {
            name: "aggressive",
            peak_learning_rate: 5e-6,
            warmup_ratio: 0.05,
            global_batch_size: 32,
            epochs: 2,
            max_grad_norm: 10.0,
            lora_rank: 16,
            lora_alpha: 32,
            lora_dropout: 0.05,
        }
    }

    /// Same schedule at half the peak learning rate, for the mixed stage.
    pub fn conservative() -> Self {
        Self {
            name: "conservative",
            peak_learning_rate: 2.5e-6,
            ..Self::aggressive()
        }
    }
}

/// One sampled response with its reward and per-token log-probs under the
/// current, old (sampling-time), and frozen reference policies.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RolloutResponse {
    pub reward: f64,
    pub token_logp_new: Vec<f64>,
    pub token_logp_old: Vec<f64>,
    pub token_logp_ref: Vec<f64>,
}

/// K responses for one prompt: the unit of advantage computation.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RolloutGroup {
    pub prompt_id: String,
    pub responses: Vec<RolloutResponse>,
}

impl RolloutGroup {
    /// Checks the group invariants: exactly `expected_k` responses, one
    /// shared nonempty length across the three log-prob lists of each
    /// response, all values finite.
    pub fn validate(&self, expected_k: usize) -> Result<(), GrpoError> {
        if self.responses.len() != expected_k {
            return Err(GrpoError::WrongGroupSize {
                prompt_id: self.prompt_id.clone(),
                expected: expected_k,
                got: self.responses.len(),
            });
        }
        for response in &self.responses {
            if !response.reward.is_finite() {
                return Err(GrpoError::NonFinite { what: "reward" });
            }
            let n = response.token_logp_new.len();
            if n == 0 {
                return Err(GrpoError::EmptyTokens);
            }
            for other in [&response.token_logp_old, &response.token_logp_ref] {
                if other.len() != n {
                    return Err(GrpoError::LengthMismatch {
                        left: n,
                        right: other.len(),
                    });
                }
            }
            for list in [
                &response.token_logp_new,
                &response.token_logp_old,
                &response.token_logp_ref,
            ] {
                if list.iter().any(|v| !v.is_finite()) {
                    return Err(GrpoError::NonFinite {
                        what: "token log-probs",
                    });
                }
            }
        }
        Ok(())
    }
}

/// Group-relative advantages: `A_k = R_k - mean(R)`. Sums to zero.
pub fn group_advantages(rewards: &[f64]) -> Result<Vec<f64>, GrpoError> {
    if rewards.len() < 2 {
        return Err(GrpoError::GroupTooSmall(rewards.len()));
    }
    if rewards.iter().any(|r| !r.is_finite()) {
        return Err(GrpoError::NonFinite { what: "rewards" });
    }
    let mean = rewards.iter().sum::<f64>() / rewards.len() as f64;
    Ok(rewards.iter().map(|r| r - mean).collect())
}

/// Token-mean PPO clipped surrogate for one response, maximization
/// convention: `mean_t min(rho_t * A, clip(rho_t, 1-eps, 1+eps) * A)` with
/// `rho_t = exp(logp_new_t - logp_old_t)`.
pub fn clipped_surrogate(
    logp_new: &[f64],
    logp_old: &[f64],
    advantage: f64,
    eps: f64,
) -> Result<f64, GrpoError> {
    if logp_new.len() != logp_old.len() {
        return Err(GrpoError::LengthMismatch {
            left: logp_new.len(),
            right: logp_old.len(),
        });
    }
    if logp_new.is_empty() {
        return Err(GrpoError::EmptyTokens);
    }
    if !advantage.is_finite() {
        return Err(GrpoError::NonFinite { what: "advantage" });
    }
    let mut sum = 0.0;
    for (new, old) in logp_new.iter().zip(logp_old) {
        if !new.is_finite() || !old.is_finite() {
            return Err(GrpoError::NonFinite {
                what: "token log-probs",
            });
        }
        let ratio = libm::exp(new - old);
        let clipped = ratio.clamp(1.0 - eps, 1.0 + eps);
        sum += (ratio * advantage).min(clipped * advantage);
    }
    Ok(sum / logp_new.len() as f64)
}

/// Token-mean nonnegative KL estimator against the reference policy:
/// `mean_t exp(ref - new) - (ref - new) - 1`. Zero iff the policies agree
/// on every sampled token.
pub fn kl_penalty(logp_new: &[f64], logp_ref: &[f64]) -> Result<f64, GrpoError> {
    kl_with(logp_new, logp_ref, KlEstimator::NonNegative)
}

/// Plain estimator `mean_t (new - ref)`, kept for comparison runs.
pub fn kl_penalty_plain(logp_new: &[f64], logp_ref: &[f64]) -> Result<f64, GrpoError> {
    kl_with(logp_new, logp_ref, KlEstimator::PlainDiff)
}

fn kl_with(logp_new: &[f64], logp_ref: &[f64], estimator: KlEstimator) -> Result<f64, GrpoError> {
    if logp_new.len() != logp_ref.len() {
        return Err(GrpoError::LengthMismatch {
            left: logp_new.len(),
            right: logp_ref.len(),
        });
    }
    if logp_new.is_empty() {
        return Err(GrpoError::EmptyTokens);
    }
    let mut sum = 0.0;
    for (new, reference) in logp_new.iter().zip(logp_ref) {
        if !new.is_finite() || !reference.is_finite() {
            return Err(GrpoError::NonFinite {
                what: "token log-probs",
            });
        }
        sum += match estimator {
            KlEstimator::NonNegative => {
                let gap = reference - new;
                libm::exp(gap) - gap - 1.0
            }
            KlEstimator::PlainDiff => new - reference,
        };
    }
    Ok(sum / logp_new.len() as f64)
}

/// Objective components for one group.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ObjectiveParts {
    /// `surrogate - kl_beta * kl` (maximization convention).
    pub objective: f64,
    pub surrogate: f64,
    pub kl: f64,
}

/// Advantages from the group's rewards, response-mean surrogate and KL, and
/// the combined objective.
pub fn total_objective(
    group: &RolloutGroup,
    cfg: &GrpoConfig,
) -> Result<ObjectiveParts, GrpoError> {
    cfg.validate()?;
    group.validate(cfg.group_size)?;
    let rewards: Vec<f64> = group.responses.iter().map(|r| r.reward).collect();
    let advantages = group_advantages(&rewards)?;
    let mut surrogate = 0.0;
    let mut kl = 0.0;
    for (response, advantage) in group.responses.iter().zip(&advantages) {
        surrogate += clipped_surrogate(
            &response.token_logp_new,
            &response.token_logp_old,
            *advantage,
            cfg.clip_epsilon,
        )?;
        kl += kl_with(
            &response.token_logp_new,
            &response.token_logp_ref,
            cfg.kl_estimator,
        )?;
    }
    let k = group.responses.len() as f64;
    let surrogate = surrogate / k;
    let kl = kl / k;
    Ok(ObjectiveParts {
        objective: surrogate - cfg.kl_beta * kl,
        surrogate,
        kl,
    })
}

/// Curriculum stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageKind {
    /// True/false and multiple-choice records only.
    Structured,
    /// Every open-ended record plus an equal-count sample of structured ones.
    Balanced,
}

impl StageKind {
    pub fn name(&self) -> &'static str {
        match self {
            StageKind::Structured => "structured",
            StageKind::Balanced => "balanced",
        }
    }
}

impl core::str::FromStr for StageKind {
    type Err = GrpoError;

    fn from_str(s: &str) -> Result<Self, GrpoError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "structured" => Ok(StageKind::Structured),
            "balanced" => Ok(StageKind::Balanced),
            other => Err(GrpoError::BadConfig(alloc::format!(
                "unknown curriculum stage {other:?}"
            ))),
        }
    }
}

/// A dataset record as the curriculum sampler sees it.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CurriculumEntry {
    pub id: String,
    pub question_type: QuestionType,
}

/// One batch of the curriculum stream.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BatchManifest {
    pub stage: StageKind,
    pub epoch: usize,
    pub batch_index: usize,
    pub record_ids: Vec<String>,
}

/// Builds the deterministic batch stream for a stage.
///
/// Structured epochs shuffle the structured records only. Balanced epochs
/// contain every open-ended record plus an equal count of structured ones,
/// drawn without replacement per epoch (cycling through reshuffles when the
/// structured supply is smaller than the open-ended count).
pub fn curriculum_batches(
    entries: &[CurriculumEntry],
    stage: StageKind,
    batch_size: usize,
    epochs: usize,
    seed: u64,
) -> Result<Vec<BatchManifest>, GrpoError> {
    if batch_size == 0 {
        return Err(GrpoError::BadConfig(
            "batch_size must be positive".to_string(),
        ));
    }
    let structured: Vec<&str> = entries
        .iter()
        .filter(|e| e.question_type.is_structured())
        .map(|e| e.id.as_str())
        .collect();
    let open_ended: Vec<&str> = entries
        .iter()
        .filter(|e| !e.question_type.is_structured())
        .map(|e| e.id.as_str())
        .collect();
    if structured.is_empty() {
        return Err(GrpoError::NoStructured);
    }
    if stage == StageKind::Balanced && open_ended.is_empty() {
        return Err(GrpoError::NoOpenEnded);
    }

    let mut manifests = Vec::new();
    for epoch in 0..epochs {
        let mut rng = rng_for(seed, &[stage.name(), "epoch", &epoch_label(epoch)]);
        let mut epoch_ids: Vec<String> = match stage {
            StageKind::Structured => structured.iter().map(|s| s.to_string()).collect(),
            StageKind::Balanced => {
                let mut ids: Vec<String> = open_ended.iter().map(|s| s.to_string()).collect();
                let mut needed = open_ended.len();
                while needed > 0 {
                    let take = needed.min(structured.len());
                    for idx in sample_indices(structured.len(), take, &mut rng) {
                        ids.push(structured[idx].to_string());
                    }
                    needed -= take;
                }
                ids
            }
        };
        shuffle(&mut epoch_ids, &mut rng);
        for (batch_index, chunk) in epoch_ids.chunks(batch_size).enumerate() {
            manifests.push(BatchManifest {
                stage,
                epoch,
                batch_index,
                record_ids: chunk.to_vec(),
            });
        }
    }
    Ok(manifests)
}

fn epoch_label(epoch: usize) -> String {
    crate::sampling::id_label(epoch as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn advantages_example() {
        let a = group_advantages(&[0.95, 0.5, 0.05, 0.5]).unwrap();
        let expected = [0.45, 0.0, -0.45, 0.0];
        for (got, want) in a.iter().zip(expected) {
            assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        }
    }

    #[test]
    fn advantages_equal_rewards_are_zero() {
        let a = group_advantages(&[0.7, 0.7, 0.7]).unwrap();
        assert!(a.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn advantages_reject_small_groups() {
        assert!(matches!(
            group_advantages(&[1.0]),
            Err(GrpoError::GroupTooSmall(1))
        ));
    }

    #[test]
    fn surrogate_identity_ratio_returns_advantage() {
        let logp = vec![-1.0, -2.0, -0.5];
        let s = clipped_surrogate(&logp, &logp, 0.37, 0.2).unwrap();
        assert!((s - 0.37).abs() < 1e-15);
    }

    #[test]
    fn surrogate_clip_arithmetic() {
        // rho = 1.5 with positive advantage: the clip at 1.2 binds.
        let new = vec![libm::log(1.5)];
        let old = vec![0.0];
        let s = clipped_surrogate(&new, &old, 1.0, 0.2).unwrap();
        assert!((s - 1.2).abs() < 1e-12);

        // rho = 0.5 with negative advantage: min(0.5*A, 0.8*A) is the
        // clipped branch, which pins the term at (1 - eps) * A.
        let new = vec![libm::log(0.5)];
        let s = clipped_surrogate(&new, &old, -1.0, 0.2).unwrap();
        assert!((s + 0.8).abs() < 1e-12);
    }

    #[test]
    fn surrogate_rejects_mismatched_lists() {
        assert!(matches!(
            clipped_surrogate(&[0.0], &[0.0, 0.0], 1.0, 0.2),
            Err(GrpoError::LengthMismatch { .. })
        ));
        assert!(matches!(
            clipped_surrogate(&[], &[], 1.0, 0.2),
            Err(GrpoError::EmptyTokens)
        ));
    }

    #[test]
    fn kl_identical_policies_zero() {
        let logp = vec![-1.0, -2.0];
        assert_eq!(kl_penalty(&logp, &logp).unwrap(), 0.0);
    }

    #[test]
    fn kl_unit_gap_closed_form() {
        // ref - new = 1 per token: k = e - 2.
        let new = vec![-2.0, -3.0];
        let reference = vec![-1.0, -2.0];
        let k = kl_penalty(&new, &reference).unwrap();
        assert!((k - (core::f64::consts::E - 2.0)).abs() < 1e-12);
    }

    #[test]
    fn kl_plain_diff_estimator() {
        let new = vec![-1.0, -2.0];
        let reference = vec![-1.5, -2.5];
        assert!((kl_penalty_plain(&new, &reference).unwrap() - 0.5).abs() < 1e-15);
    }

    fn group(rewards: &[f64], gaps: &[f64]) -> RolloutGroup {
        RolloutGroup {
            prompt_id: "p1".to_string(),
            responses: rewards
                .iter()
                .zip(gaps)
                .map(|(r, gap)| RolloutResponse {
                    reward: *r,
                    token_logp_new: vec![-1.0, -1.5],
                    token_logp_old: vec![-1.0, -1.5],
                    token_logp_ref: vec![-1.0 + gap, -1.5 + gap],
                })
                .collect(),
        }
    }

    #[test]
    fn objective_zero_when_identity_and_beta_zero() {
        let cfg = GrpoConfig {
            kl_beta: 0.0,
            ..GrpoConfig::default()
        };
        let g = group(&[1.0, 0.0, 0.5, 0.5], &[0.0; 4]);
        let parts = total_objective(&g, &cfg).unwrap();
        assert!(parts.surrogate.abs() < 1e-15, "zero-sum advantages cancel");
        assert_eq!(parts.objective, parts.surrogate);
        assert_eq!(parts.kl, 0.0);
    }

    #[test]
    fn objective_equal_rewards_is_kl_only() {
        let cfg = GrpoConfig::default();
        let g = group(&[0.5; 4], &[0.3; 4]);
        let parts = total_objective(&g, &cfg).unwrap();
        assert!(parts.surrogate.abs() < 1e-15);
        assert!(parts.kl > 0.0);
        assert!(parts.objective <= 0.0);
        assert!((parts.objective - (parts.surrogate - 0.01 * parts.kl)).abs() < 1e-18);
    }

    #[test]
    fn objective_combination_arithmetic() {
        assert!((0.2f64 - 0.01 * 0.5 - 0.195).abs() < 1e-15);
        let cfg = GrpoConfig::default();
        let g = group(&[1.0, 0.0, 0.25, 0.75], &[0.1, 0.2, 0.0, 0.05]);
        let parts = total_objective(&g, &cfg).unwrap();
        assert_eq!(parts.objective, parts.surrogate - cfg.kl_beta * parts.kl);
    }

    #[test]
    fn objective_rejects_wrong_k() {
        let cfg = GrpoConfig::default();
        let g = group(&[1.0, 0.0], &[0.0, 0.0]);
        assert!(matches!(
            total_objective(&g, &cfg),
            Err(GrpoError::WrongGroupSize {
                expected: 4,
                got: 2,
                ..
            })
        ));
    }

    fn entries(tf: usize, mcq: usize, oe: usize) -> Vec<CurriculumEntry> {
        let mut out = Vec::new();
        for i in 0..tf {
            out.push(CurriculumEntry {
                id: alloc::format!("tf-{i:03}"),
                question_type: QuestionType::TrueFalse,
            });
        }
        for i in 0..mcq {
            out.push(CurriculumEntry {
                id: alloc::format!("mc-{i:03}"),
                question_type: QuestionType::MultipleChoice,
            });
        }
        for i in 0..oe {
            out.push(CurriculumEntry {
                id: alloc::format!("oe-{i:03}"),
                question_type: QuestionType::OpenEnded,
            });
        }
        out
    }

    #[test]
    fn structured_stage_excludes_open_ended() {
        let data = entries(10, 10, 10);
        let manifests = curriculum_batches(&data, StageKind::Structured, 4, 5, 7).unwrap();
        for m in &manifests {
            for id in &m.record_ids {
                assert!(!id.starts_with("oe-"), "open-ended id {id} leaked");
            }
        }
        let per_epoch: usize = manifests
            .iter()
            .filter(|m| m.epoch == 0)
            .map(|m| m.record_ids.len())
            .sum();
        assert_eq!(per_epoch, 20);
    }

    #[test]
    fn balanced_stage_has_all_oe_plus_equal_structured() {
        let data = entries(10, 10, 10);
        let manifests = curriculum_batches(&data, StageKind::Balanced, 4, 3, 7).unwrap();
        for epoch in 0..3 {
            let ids: Vec<&String> = manifests
                .iter()
                .filter(|m| m.epoch == epoch)
                .flat_map(|m| &m.record_ids)
                .collect();
            assert_eq!(ids.len(), 20);
            let oe: Vec<_> = ids.iter().filter(|id| id.starts_with("oe-")).collect();
            assert_eq!(oe.len(), 10, "all open-ended records every epoch");
            let unique_oe: alloc::collections::BTreeSet<_> = oe.iter().collect();
            assert_eq!(unique_oe.len(), 10);
        }
    }

    #[test]
    fn balanced_stage_cycles_small_structured_supply() {
        let data = entries(3, 0, 10);
        let manifests = curriculum_batches(&data, StageKind::Balanced, 5, 1, 7).unwrap();
        let ids: Vec<&String> = manifests.iter().flat_map(|m| &m.record_ids).collect();
        assert_eq!(ids.len(), 20);
        let structured_count = ids.iter().filter(|id| id.starts_with("tf-")).count();
        assert_eq!(structured_count, 10);
    }

    #[test]
    fn curriculum_deterministic_and_validates() {
        let data = entries(8, 8, 8);
        let a = curriculum_batches(&data, StageKind::Balanced, 4, 2, 123).unwrap();
        let b = curriculum_batches(&data, StageKind::Balanced, 4, 2, 123).unwrap();
        assert_eq!(a, b);
        let c = curriculum_batches(&data, StageKind::Balanced, 4, 2, 124).unwrap();
        assert_ne!(a, c, "different seed, different stream");

        assert!(matches!(
            curriculum_batches(&entries(4, 4, 0), StageKind::Balanced, 4, 1, 1),
            Err(GrpoError::NoOpenEnded)
        ));
        assert!(matches!(
            curriculum_batches(&entries(0, 0, 4), StageKind::Structured, 4, 1, 1),
            Err(GrpoError::NoStructured)
        ));
        assert!(matches!(
            curriculum_batches(&entries(4, 4, 4), StageKind::Balanced, 0, 1, 1),
            Err(GrpoError::BadConfig(_))
        ));
    }

    #[test]
    fn presets_differ_in_learning_rate_only() {
        let a = TrainingPreset::aggressive();
        let c = TrainingPreset::conservative();
        assert_eq!(a.peak_learning_rate, 5e-6);
        assert_eq!(c.peak_learning_rate, 2.5e-6);
        assert_eq!(a.global_batch_size, c.global_batch_size);
        assert_eq!(a.lora_rank, 16);
        assert_eq!(a.lora_alpha, 32);
    }

    proptest! {
        #[test]
        fn prop_advantages_zero_sum_and_shift_invariant(
            rewards in proptest::collection::vec(0.0f64..1.0, 2..16),
            delta in -10.0f64..10.0,
        ) {
            let a = group_advantages(&rewards).unwrap();
            let sum: f64 = a.iter().sum();
            prop_assert!(sum.abs() < 1e-12 * rewards.len() as f64);

            let shifted: Vec<f64> = rewards.iter().map(|r| r + delta).collect();
            let b = group_advantages(&shifted).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn prop_kl_nonnegative(
            new in proptest::collection::vec(-5.0f64..0.0, 1..32),
            offsets in proptest::collection::vec(-2.0f64..2.0, 32),
        ) {
            let reference: Vec<f64> = new
                .iter()
                .zip(&offsets)
                .map(|(n, o)| n + o)
                .collect();
            let k = kl_penalty(&new, &reference).unwrap();
            prop_assert!(k >= 0.0);
        }

        #[test]
        fn prop_surrogate_unclipped_inside_band(
            logp in -3.0f64..0.0,
            ratio in 0.85f64..1.15,
            advantage in -1.0f64..1.0,
        ) {
            let new = vec![logp + libm::log(ratio)];
            let old = vec![logp];
            let s = clipped_surrogate(&new, &old, advantage, 0.2).unwrap();
            let rho = libm::exp(new[0] - old[0]);
            prop_assert!((s - rho * advantage).abs() < 1e-12);
        }
    }
}

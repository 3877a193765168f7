//! Subcommand implementations.
//!
//! Each command is deterministic given its inputs and the configured seed,
//! prints a one-line header recording both, and writes a `.meta.json`
//! sidecar next to its file outputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use panoqa_core::geom::{face_share_histogram, stitch_cubemap_to_erp, CubeFace, ErpDims, Sampling};
use panoqa_core::grpo::{
    curriculum_batches, group_advantages, total_objective, CurriculumEntry, GrpoConfig,
    RolloutGroup, StageKind,
};
use panoqa_core::judge::{build_judge_prompt, judge, parse_judge_reply, JudgeRequest};
use panoqa_core::qa::{generate_dataset, DatasetStats, QaRecord};
use panoqa_core::raster::{CubemapSet, RgbRaster};
use panoqa_core::reward::{parse_response, total_reward, SpatialLexicon};
use panoqa_core::scene::{analyze_scene, SceneAnalysis};

use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};
use crate::formats::{
    discover_bundles, index_records, load_scene, read_jsonl, write_jsonl, write_meta,
    AdvantageLine, BreakdownLine, RejectLine, ReplyLine, ResponseLine, ScoreLine, TranscriptLine,
};
use crate::synth::{write_synth_corpus, SynthConfig};

/// Stitches six face images (`front.png` ... `bottom.png`) into an ERP
/// panorama and prints the solid-angle-weighted share of each face.
pub fn cmd_stitch(
    faces_dir: &Path,
    width: u32,
    height: u32,
    out: &Path,
    sampling: Sampling,
) -> CliResult<()> {
    let dims = ErpDims::new(width, height)
        .map_err(|e| CliError::Format(format!("--width/--height: {e}")))?;
    let mut faces: Vec<RgbRaster> = Vec::with_capacity(6);
    for face in CubeFace::ALL {
        let path = faces_dir.join(format!("{}.png", face.name().to_ascii_lowercase()));
        if !path.exists() {
            return Err(CliError::MissingInput(path.display().to_string()));
        }
        let img = image::open(&path)
            .map_err(|e| CliError::format_at(&path, e))?
            .to_rgb8();
        faces.push(
            RgbRaster::from_vec(img.width(), img.height(), img.into_raw())
                .map_err(|e| CliError::format_at(&path, e))?,
        );
    }
    let cube = CubemapSet::new(faces.try_into().expect("six faces collected"))
        .map_err(|e| CliError::Format(e.to_string()))?;

    println!(
        "# stitch faces={} out={} dims={width}x{height} sampling={sampling:?}",
        faces_dir.display(),
        out.display()
    );
    let erp = stitch_cubemap_to_erp(&cube, dims, sampling);
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::format_at(parent, e))?;
        }
    }
    let img = image::RgbImage::from_raw(width, height, erp.data().to_vec())
        .expect("stitch output matches dims");
    img.save(out).map_err(|e| CliError::format_at(out, e))?;

    let shares = face_share_histogram(dims);
    println!("face shares (solid-angle weighted):");
    for face in CubeFace::ALL {
        println!("  {:<6} {:6.2}%", face.name(), shares[face.index()] * 100.0);
    }
    write_meta(
        out,
        "stitch",
        0,
        serde_json::json!({ "width": width, "height": height, "sampling": sampling }),
    )?;
    Ok(())
}

fn analysis_seed(config: &PipelineConfig) -> u64 {
    config.seed
}

/// Loads and analyzes every bundle under the configured scene roots,
/// in parallel, preserving the deterministic (sorted) scene order.
pub fn analyze_roots(config: &PipelineConfig) -> CliResult<Vec<SceneAnalysis>> {
    let mut dirs: Vec<PathBuf> = Vec::new();
    for root in &config.scene_roots {
        dirs.extend(discover_bundles(root)?);
    }
    if dirs.is_empty() {
        return Err(CliError::MissingInput(format!(
            "no scene bundles under {:?}",
            config
                .scene_roots
                .iter()
                .map(|p| p.display().to_string())
                .collect::<Vec<_>>()
        )));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| CliError::Format(format!("worker pool: {e}")))?;
    let seed = analysis_seed(config);
    let filter = config.filter.clone();
    pool.install(|| {
        dirs.par_iter()
            .map(|dir| {
                let bundle = load_scene(dir)?;
                analyze_scene(&bundle, &filter, seed).map_err(|e| CliError::format_at(dir, e))
            })
            .collect::<CliResult<Vec<SceneAnalysis>>>()
    })
}

/// Prints per-object analytics for one scene bundle.
pub fn cmd_analyze(scene_dir: &Path, config_path: Option<&Path>) -> CliResult<()> {
    let config = match config_path {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    let bundle = load_scene(scene_dir)?;
    let analysis = analyze_scene(&bundle, &config.filter, config.seed)
        .map_err(|e| CliError::format_at(scene_dir, e))?;
    println!(
        "# analyze scene={} seed={} objects={} skipped_no_depth={}",
        analysis.scene_id,
        config.seed,
        analysis.objects.len(),
        analysis.skipped_no_depth
    );
    println!(
        "{:>4} {:<12} {:>9} {:>8} {:>8} {:>9} {:>9} {:>6} {:<5} faces",
        "id", "class", "pixels", "p50", "eff", "volume", "flatness", "seam", "thick"
    );
    for obj in &analysis.objects {
        let faces: Vec<&str> = obj
            .object3d
            .visible_faces
            .iter()
            .map(|f| f.name())
            .collect();
        println!(
            "{:>4} {:<12} {:>9} {:>8.2} {:>8.2} {:>9.3} {:>9.3} {:>6} {:<5} {}",
            obj.instance.instance_id,
            obj.instance.class_label,
            obj.instance.pixel_count(),
            obj.profile.p50,
            obj.profile.effective_depth,
            obj.object3d.volume,
            obj.object3d.flatness,
            obj.object3d.is_seam,
            obj.profile.is_thick,
            faces.join("+"),
        );
    }
    Ok(())
}

/// Generates the dataset and its stats sidecar from the configured roots.
pub fn cmd_generate(config_path: &Path, out_override: Option<&Path>) -> CliResult<()> {
    let config = PipelineConfig::load(config_path)?;
    let scenes = analyze_roots(&config)?;
    let generation = config.effective_generation();
    let (records, stats) = generate_dataset(&scenes, &generation)?;

    let dataset_path = match out_override {
        Some(path) => path.to_path_buf(),
        None => config.output_root.join("dataset.jsonl"),
    };
    let stats_path = dataset_path.with_extension("stats.json");
    write_jsonl(&dataset_path, &records)?;
    std::fs::write(
        &stats_path,
        serde_json::to_string_pretty(&stats).expect("stats serialize"),
    )
    .map_err(|e| CliError::format_at(&stats_path, e))?;
    write_meta(
        &dataset_path,
        "generate",
        config.seed,
        serde_json::to_value(&config).expect("config serializes"),
    )?;

    println!(
        "# generate seed={} scenes={} records={} -> {}",
        config.seed,
        scenes.len(),
        records.len(),
        dataset_path.display()
    );
    print_stats(&stats.dataset);
    if !stats.shortfalls.is_empty() {
        println!("shortfalls (supply below target):");
        for (category, missing) in &stats.shortfalls {
            println!("  {category}: {missing}");
        }
    }
    for (warning, count) in &stats.warnings {
        println!("warning: {warning} x{count}");
    }
    Ok(())
}

fn print_stats(stats: &DatasetStats) {
    println!("records: {}", stats.total_records);
    println!("category shares:");
    for (category, count) in &stats.category_counts {
        println!(
            "  {:<12} {:>6}  {:>6.2}%",
            category,
            count,
            stats.category_shares[category] * 100.0
        );
    }
    println!("question types:");
    for (question_type, count) in &stats.question_type_counts {
        let share = *count as f64 / stats.total_records.max(1) as f64;
        println!(
            "  {:<16} {:>6}  {:>6.2}%",
            question_type,
            count,
            share * 100.0
        );
    }
    println!("unique answers: {}", stats.unique_answers);
    println!("mean answer length: {:.1} chars", stats.mean_answer_length);
    match stats.yes_no_ratio {
        Some(ratio) => println!(
            "yes/no ratio: {:.1}% vs {:.1}% ({} yes, {} no)",
            ratio * 100.0,
            (1.0 - ratio) * 100.0,
            stats.yes_count,
            stats.no_count
        ),
        None => println!("yes/no ratio: n/a (no true/false records)"),
    }
}

/// Prints dataset statistics.
pub fn cmd_stats(dataset: &Path) -> CliResult<()> {
    let records: Vec<QaRecord> = read_jsonl(dataset)?;
    println!("# stats dataset={}", dataset.display());
    print_stats(&DatasetStats::compute(&records));
    Ok(())
}

/// Grades responses against a dataset and writes reward breakdowns.
pub fn cmd_grade(dataset: &Path, responses: &Path, out: &Path) -> CliResult<()> {
    let records: Vec<QaRecord> = read_jsonl(dataset)?;
    let index = index_records(&records)?;
    let response_lines: Vec<ResponseLine> = read_jsonl(responses)?;

    let unknown: Vec<&str> = response_lines
        .iter()
        .filter(|r| !index.contains_key(r.record_id.as_str()))
        .map(|r| r.record_id.as_str())
        .collect();
    if !unknown.is_empty() {
        return Err(CliError::Invariant(format!(
            "unknown record ids in {}: {}",
            responses.display(),
            unknown.join(", ")
        )));
    }

    // Grading is pure per row: fan out over the worker pool, then write
    // through one writer in input order.
    let lex = SpatialLexicon::embedded();
    let lines: Vec<BreakdownLine> = response_lines
        .par_iter()
        .map(|response| {
            let record = index[response.record_id.as_str()];
            let breakdown = total_reward(&response.response_text, record, &lex)?;
            Ok(BreakdownLine {
                record_id: response.record_id.clone(),
                breakdown,
            })
        })
        .collect::<CliResult<Vec<BreakdownLine>>>()?;
    write_jsonl(out, &lines)?;
    write_meta(
        out,
        "grade",
        0,
        serde_json::json!({ "dataset": dataset, "responses": responses }),
    )?;

    println!(
        "# grade dataset={} responses={} rows={}",
        dataset.display(),
        responses.display(),
        lines.len()
    );
    if lines.is_empty() {
        println!("mean total: n/a (no rows)");
        return Ok(());
    }
    let n = lines.len() as f64;
    let mean_total: f64 = lines.iter().map(|l| l.breakdown.total).sum::<f64>() / n;
    let mean_fmt: f64 = lines.iter().map(|l| l.breakdown.r_fmt).sum::<f64>() / n;
    println!("mean total reward: {mean_total:.4}");
    println!("mean format reward: {mean_fmt:.4}");
    let mut by_strategy: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for line in &lines {
        let entry = by_strategy
            .entry(line.breakdown.strategy.name())
            .or_default();
        entry.0 += line.breakdown.r_acc;
        entry.1 += 1;
    }
    println!("per-strategy mean accuracy:");
    for (strategy, (sum, count)) in by_strategy {
        println!(
            "  {:<9} {:>7.4}  (n={})",
            strategy,
            sum / count as f64,
            count
        );
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JudgeMode {
    Deterministic,
    EmitPrompts,
    IngestReplies,
}

fn judge_request(record: &QaRecord, raw_response: &str) -> JudgeRequest {
    JudgeRequest {
        question: record.question.clone(),
        question_type: record.reward_strategy.name().to_string(),
        reference: record.answer.clone(),
        answer: parse_response(raw_response).answer,
    }
}

/// Deterministic judging, judge-prompt emission, or reply ingestion.
pub fn cmd_judge(
    dataset: &Path,
    responses: Option<&Path>,
    mode: JudgeMode,
    replies: Option<&Path>,
    out: &Path,
) -> CliResult<()> {
    let records: Vec<QaRecord> = read_jsonl(dataset)?;
    let index = index_records(&records)?;

    match mode {
        JudgeMode::Deterministic | JudgeMode::EmitPrompts => {
            let responses_path = responses.ok_or_else(|| {
                CliError::MissingInput("--responses is required for this judge mode".into())
            })?;
            let response_lines: Vec<ResponseLine> = read_jsonl(responses_path)?;
            let unknown: Vec<&str> = response_lines
                .iter()
                .filter(|r| !index.contains_key(r.record_id.as_str()))
                .map(|r| r.record_id.as_str())
                .collect();
            if !unknown.is_empty() {
                return Err(CliError::Invariant(format!(
                    "unknown record ids in {}: {}",
                    responses_path.display(),
                    unknown.join(", ")
                )));
            }
            if mode == JudgeMode::EmitPrompts {
                let transcripts: Vec<TranscriptLine> = response_lines
                    .iter()
                    .map(|r| {
                        let request = judge_request(index[r.record_id.as_str()], &r.response_text);
                        let (system, user) = build_judge_prompt(&request);
                        TranscriptLine {
                            record_id: r.record_id.clone(),
                            system,
                            user,
                        }
                    })
                    .collect();
                write_jsonl(out, &transcripts)?;
                write_meta(
                    out,
                    "judge emit-prompts",
                    0,
                    serde_json::json!({ "dataset": dataset }),
                )?;
                println!(
                    "# judge emit-prompts dataset={} transcripts={} -> {}",
                    dataset.display(),
                    transcripts.len(),
                    out.display()
                );
                return Ok(());
            }
            let lex = SpatialLexicon::embedded();
            let mut scores = Vec::with_capacity(response_lines.len());
            for response in &response_lines {
                let request =
                    judge_request(index[response.record_id.as_str()], &response.response_text);
                let score = judge(&request, &lex)?;
                scores.push(ScoreLine {
                    record_id: response.record_id.clone(),
                    value: score.value,
                    rationale: score.rationale,
                });
            }
            write_jsonl(out, &scores)?;
            write_meta(
                out,
                "judge deterministic",
                0,
                serde_json::json!({ "dataset": dataset }),
            )?;
            let mean = if scores.is_empty() {
                0.0
            } else {
                scores.iter().map(|s| s.value as f64).sum::<f64>() / scores.len() as f64
            };
            println!(
                "# judge deterministic dataset={} rows={} mean_score={:.2}",
                dataset.display(),
                scores.len(),
                mean
            );
            Ok(())
        }
        JudgeMode::IngestReplies => {
            let replies_path = replies.ok_or_else(|| {
                CliError::MissingInput("--replies is required for ingest-replies".into())
            })?;
            let reply_lines: Vec<ReplyLine> = read_jsonl(replies_path)?;
            let mut scores = Vec::new();
            let mut rejects = Vec::new();
            for reply in &reply_lines {
                match parse_judge_reply(&reply.reply) {
                    Ok(score) => scores.push(ScoreLine {
                        record_id: reply.record_id.clone(),
                        value: score.value,
                        rationale: score.rationale,
                    }),
                    Err(e) => rejects.push(RejectLine {
                        record_id: reply.record_id.clone(),
                        error: e.to_string(),
                    }),
                }
            }
            write_jsonl(out, &scores)?;
            let rejects_path = rejects_sidecar_path(out);
            write_jsonl(&rejects_path, &rejects)?;
            write_meta(
                out,
                "judge ingest-replies",
                0,
                serde_json::json!({ "replies": replies_path }),
            )?;
            println!(
                "# judge ingest-replies replies={} scored={} rejected={}",
                replies_path.display(),
                scores.len(),
                rejects.len()
            );
            if !rejects.is_empty() {
                println!(
                    "warning: {} replies missing a valid final score (see {})",
                    rejects.len(),
                    rejects_path.display()
                );
            }
            Ok(())
        }
    }
}

pub fn rejects_sidecar_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scores".to_string());
    out.with_file_name(format!("{stem}.rejects.jsonl"))
}

/// Computes advantages and objective parts for rollout groups.
pub fn cmd_advantage(rollouts: &Path, config_path: Option<&Path>, out: &Path) -> CliResult<()> {
    let grpo: GrpoConfig = match config_path {
        Some(path) => PipelineConfig::load(path)?.grpo,
        None => GrpoConfig::default(),
    };
    let groups: Vec<RolloutGroup> = read_jsonl(rollouts)?;
    let mut lines = Vec::with_capacity(groups.len());
    for group in &groups {
        group.validate(grpo.group_size)?;
        let rewards: Vec<f64> = group.responses.iter().map(|r| r.reward).collect();
        let advantages = group_advantages(&rewards)?;
        let parts = total_objective(group, &grpo)?;
        lines.push(AdvantageLine {
            prompt_id: group.prompt_id.clone(),
            advantages,
            surrogate: parts.surrogate,
            kl: parts.kl,
            objective: parts.objective,
        });
    }
    write_jsonl(out, &lines)?;
    write_meta(
        out,
        "advantage",
        0,
        serde_json::to_value(&grpo).expect("grpo config serializes"),
    )?;
    let mean_objective = if lines.is_empty() {
        0.0
    } else {
        lines.iter().map(|l| l.objective).sum::<f64>() / lines.len() as f64
    };
    println!(
        "# advantage rollouts={} groups={} K={} mean_objective={:.6}",
        rollouts.display(),
        lines.len(),
        grpo.group_size,
        mean_objective
    );
    Ok(())
}

/// Writes curriculum batch manifests for a stage.
pub fn cmd_curriculum(
    dataset: &Path,
    stage: StageKind,
    epochs: usize,
    batch_size: usize,
    seed: u64,
    out: &Path,
) -> CliResult<()> {
    let records: Vec<QaRecord> = read_jsonl(dataset)?;
    let entries: Vec<CurriculumEntry> = records
        .iter()
        .map(|r| CurriculumEntry {
            id: r.id.clone(),
            question_type: r.question_type,
        })
        .collect();
    let manifests = curriculum_batches(&entries, stage, batch_size, epochs, seed)?;
    write_jsonl(out, &manifests)?;
    write_meta(
        out,
        "curriculum",
        seed,
        serde_json::json!({ "stage": stage.name(), "epochs": epochs, "batch_size": batch_size }),
    )?;
    println!(
        "# curriculum stage={} seed={seed} epochs={epochs} batch_size={batch_size} batches={} -> {}",
        stage.name(),
        manifests.len(),
        out.display()
    );
    Ok(())
}

/// Writes a synthetic toy corpus.
pub fn cmd_synth(out: &Path, scenes: usize, seed: u64, width: u32, height: u32) -> CliResult<()> {
    let cfg = SynthConfig {
        scenes,
        width,
        height,
        seed,
    };
    let paths = write_synth_corpus(out, &cfg)?;
    println!(
        "# synth seed={seed} scenes={} dims={width}x{height} -> {}",
        paths.len(),
        out.display()
    );
    for path in &paths {
        println!("  {}", path.display());
    }
    write_meta(
        &out.join("corpus"),
        "synth",
        seed,
        serde_json::json!({ "scenes": scenes, "width": width, "height": height }),
    )?;
    Ok(())
}

//! Sequential execution of a plan against the backends, with the two-stage
//! dummy-garment path for styles that need currently covered skin exposed.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::backends::{BackendError, Backends, DummyGarmentProvider, SegmentationResult, TryOnRequest};
use crate::image_ref::ImageRef;
use crate::masking::{mask_efficiency, MaskReport};
use crate::planner::{ExecutionPlan, PlanStep, Stage};
use crate::raster::io::{self, IoError};
use crate::raster::{BinaryMask, BodyPart, LabelRaster};
use crate::rules::{infer_traces, realize_mask, GarmentSpec, MaskOptions, RuleError, RuleTable, StyleInstruction, TraceEstimate};

/// Default share of the required-exposure region that existing clothing may
/// cover before a dummy stage is needed.
pub const DEFAULT_CONFLICT_THRESHOLD: f64 = 0.02;

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("step {step} ({stage}): {source}")]
    Backend {
        step: usize,
        stage: &'static str,
        #[source]
        source: Box<BackendError>,
    },
    #[error("step {step} ({stage}): {source}")]
    Rules {
        step: usize,
        stage: &'static str,
        #[source]
        source: Box<RuleError>,
    },
    #[error("step {step}: {message}")]
    Contract { step: usize, message: String },
    #[error("conflict threshold {0} must be in [0, 1)")]
    InvalidThreshold(f64),
    #[error("garment `{0}` has no exposure conflict; a dummy garment is not needed")]
    NoConflict(String),
    #[error("no dummy garment for `{garment}`: {source}")]
    NoDummy {
        garment: String,
        #[source]
        source: Box<BackendError>,
    },
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Io(#[from] IoError),
}

impl ExecError {
    pub fn is_backend(&self) -> bool {
        matches!(self, ExecError::Backend { .. } | ExecError::NoDummy { .. })
    }
}

/// Whether existing clothing covers parts the requested style needs bare.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConflictReport {
    pub exposed_parts_required: BTreeSet<BodyPart>,
    pub offending_segments: BTreeSet<u8>,
    pub overlap_area: u64,
    pub threshold_area: f64,
    pub two_step: bool,
}

/// Overlap of the estimate's clothing segments with the required-exposure region.
pub fn needs_two_step(
    est: &TraceEstimate,
    body: &LabelRaster,
    clothing: &LabelRaster,
    threshold_fraction: f64,
) -> Result<ConflictReport, ExecError> {
    if !(0.0..1.0).contains(&threshold_fraction) {
        return Err(ExecError::InvalidThreshold(threshold_fraction));
    }
    let exposed = body.parts_region(&est.exposed_parts).map_err(RuleError::from)?;
    clothing.ensure_same_dims(body.dims()).map_err(RuleError::from)?;
    let mut per_label = [0u64; 256];
    for (&l, &e) in clothing.labels().iter().zip(exposed.bits()) {
        if e {
            per_label[l as usize] += 1;
        }
    }
    let offending: BTreeSet<u8> = est
        .c_hat
        .labels
        .iter()
        .copied()
        .filter(|&l| per_label[l as usize] > 0)
        .collect();
    // segments are disjoint, so the union's overlap is the sum
    let overlap_area = offending.iter().map(|&l| per_label[l as usize]).sum();
    let threshold_area = threshold_fraction * exposed.area() as f64;
    Ok(ConflictReport {
        two_step: !exposed.is_empty() && overlap_area as f64 > threshold_area,
        exposed_parts_required: est.exposed_parts.clone(),
        offending_segments: offending,
        overlap_area,
        threshold_area,
    })
}

/// A dummy of the same classification that leaves the required parts uncovered.
pub fn select_dummy(
    garment: &GarmentSpec,
    report: &ConflictReport,
    provider: &dyn DummyGarmentProvider,
    rules: &RuleTable,
) -> Result<GarmentSpec, ExecError> {
    if !report.two_step {
        return Err(ExecError::NoConflict(garment.id.clone()));
    }
    provider
        .fetch(garment.classification, &report.exposed_parts_required, rules)
        .map_err(|e| ExecError::NoDummy {
            garment: garment.id.clone(),
            source: Box::new(e),
        })
}

/// Which garment a mask was built for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskRole {
    Dummy,
    Target,
}

#[derive(Clone, Debug, Serialize)]
pub struct MaskRecord {
    pub role: MaskRole,
    pub garment_id: String,
    pub path: PathBuf,
    pub report: MaskReport,
    pub rule_trace: Vec<String>,
    #[serde(skip)]
    pub mask: BinaryMask,
}

#[derive(Clone, Debug, Serialize)]
pub struct StepArtifacts {
    pub step_index: usize,
    pub garment_id: String,
    pub stage: Stage,
    pub input: ImageRef,
    /// Dummy mask first when present, then the target mask.
    pub masks: Vec<MaskRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intermediate: Option<ImageRef>,
    pub output: ImageRef,
}

impl StepArtifacts {
    pub fn target_mask(&self) -> &BinaryMask {
        &self.masks.last().expect("every step has a target mask").mask
    }

    pub fn dummy_mask(&self) -> Option<&BinaryMask> {
        self.masks.iter().find(|m| m.role == MaskRole::Dummy).map(|m| &m.mask)
    }
}

/// Everything a run produced, also on failure.
#[derive(Clone, Debug, Serialize)]
pub struct RunOutcome {
    pub run_dir: PathBuf,
    pub final_image: ImageRef,
    pub steps: Vec<StepArtifacts>,
}

#[derive(Debug, Error)]
#[error("{error}")]
pub struct RunFailure {
    pub partial: Box<RunOutcome>,
    #[source]
    pub error: ExecError,
}

#[derive(Serialize)]
struct Manifest<'a> {
    plan: &'a ExecutionPlan,
    run: &'a RunOutcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

/// Runs plans step by step. Holds no mutable state.
pub struct Executor<'a> {
    pub backends: &'a Backends,
    pub rules: &'a RuleTable,
    pub options: MaskOptions,
}

impl<'a> Executor<'a> {
    pub fn new(backends: &'a Backends, rules: &'a RuleTable) -> Self {
        Self {
            backends,
            rules,
            options: MaskOptions::default(),
        }
    }

    fn mask_for(
        &self,
        step: usize,
        garment: &GarmentSpec,
        instruction: &StyleInstruction,
        seg: &SegmentationResult,
    ) -> Result<(BinaryMask, Vec<String>), ExecError> {
        let rules_err = |e| ExecError::Rules {
            step,
            stage: "masking",
            source: Box::new(e),
        };
        let est = infer_traces(self.rules, garment, instruction, &seg.body, &seg.clothing, &self.options)
            .map_err(rules_err)?;
        let mask = realize_mask(&est, &seg.body, &seg.clothing, &self.options).map_err(rules_err)?;
        Ok((mask, est.rule_trace))
    }

    #[allow(clippy::too_many_arguments)]
    fn inpaint(
        &self,
        step: usize,
        stage: &'static str,
        role: MaskRole,
        person: &ImageRef,
        garment: &GarmentSpec,
        instruction: &StyleInstruction,
        seg: &SegmentationResult,
        mask_path: PathBuf,
        out: &Path,
    ) -> Result<(MaskRecord, ImageRef), ExecError> {
        let (mask, rule_trace) = self.mask_for(step, garment, instruction, seg)?;
        io::write_mask(&mask_path, &mask)?;
        let req = TryOnRequest {
            person: person.clone(),
            garment: garment.image_ref.clone(),
            mask: mask.clone(),
            category: garment.clothing_category(),
            garment_name: garment.category_noun.clone(),
        };
        let output = self
            .backends
            .vto
            .try_on(&req, out)
            .map_err(|e| ExecError::Backend {
                step,
                stage,
                source: Box::new(e),
            })?;
        let record = MaskRecord {
            role,
            garment_id: garment.id.clone(),
            path: mask_path,
            report: mask_efficiency(&mask).map_err(RuleError::from)?,
            rule_trace,
            mask,
        };
        Ok((record, output))
    }

    /// One plan step on `person`, whose segmentation is `seg`.
    pub fn execute_step(
        &self,
        index: usize,
        person: &ImageRef,
        seg: &SegmentationResult,
        step: &PlanStep,
        step_dir: &Path,
    ) -> Result<StepArtifacts, ExecError> {
        let output_path = step_dir.join("output.png");
        let (masks, intermediate, output) = match (step.stage, &step.dummy_spec) {
            (Stage::Direct, _) => {
                let (rec, out) = self.inpaint(
                    index,
                    "try_on",
                    MaskRole::Target,
                    person,
                    &step.garment,
                    &step.instruction,
                    seg,
                    step_dir.join("mask.png"),
                    &output_path,
                )?;
                (vec![rec], None, out)
            }
            (Stage::DummyThenTarget, Some(dummy)) => {
                let (rec_a, inter) = self.inpaint(
                    index,
                    "dummy_try_on",
                    MaskRole::Dummy,
                    person,
                    dummy,
                    &StyleInstruction::default(),
                    seg,
                    step_dir.join("mask_dummy.png"),
                    &step_dir.join("intermediate.png"),
                )?;
                let seg_b = self.segment(index, &inter)?;
                if seg_b.dims() != seg.dims() {
                    return Err(ExecError::Contract {
                        step: index,
                        message: format!(
                            "re-segmentation is {:?}, expected {:?}",
                            seg_b.dims(),
                            seg.dims()
                        ),
                    });
                }
                let (rec_b, out) = self.inpaint(
                    index,
                    "try_on",
                    MaskRole::Target,
                    &inter,
                    &step.garment,
                    &step.instruction,
                    &seg_b,
                    step_dir.join("mask.png"),
                    &output_path,
                )?;
                (vec![rec_a, rec_b], Some(inter), out)
            }
            (Stage::DummyThenTarget, None) => {
                return Err(ExecError::Contract {
                    step: index,
                    message: "dummy_then_target step without a dummy garment".into(),
                })
            }
        };
        let artifacts = StepArtifacts {
            step_index: index,
            garment_id: step.garment.id.clone(),
            stage: step.stage,
            input: person.clone(),
            masks,
            intermediate,
            output,
        };
        io::write_json(&step_dir.join("report.json"), &artifacts)?;
        Ok(artifacts)
    }

    fn segment(&self, step: usize, image: &ImageRef) -> Result<SegmentationResult, ExecError> {
        self.backends
            .segmenter
            .segment(image)
            .map_err(|e| ExecError::Backend {
                step,
                stage: "segmentation",
                source: Box::new(e),
            })
    }

    /// Executes every step in order, feeding each output into the next step.
    /// Writes `run_<id>/step_<k>/...` and `run_<id>/manifest.json` under `runs_root`.
    pub fn execute_plan(&self, plan: &ExecutionPlan, runs_root: &Path) -> Result<RunOutcome, RunFailure> {
        let mut run = RunOutcome {
            run_dir: runs_root.join(format!("run_{}", run_id(plan))),
            final_image: plan.source_image_ref.clone(),
            steps: Vec::new(),
        };
        let result = self.run_steps(plan, &mut run);
        let manifest = Manifest {
            plan,
            run: &run,
            error: result.as_ref().err().map(ToString::to_string),
        };
        let written = io::write_json(&run.run_dir.join("manifest.json"), &manifest);
        match result.and(written.map_err(ExecError::from)) {
            Ok(()) => Ok(run),
            Err(error) => Err(RunFailure {
                partial: Box::new(run),
                error,
            }),
        }
    }

    fn run_steps(&self, plan: &ExecutionPlan, run: &mut RunOutcome) -> Result<(), ExecError> {
        for (k, step) in plan.steps.iter().enumerate() {
            let seg = self.segment(k, &run.final_image)?;
            let dir = run.run_dir.join(format!("step_{k}"));
            let artifacts = self.execute_step(k, &run.final_image, &seg, step, &dir)?;
            run.final_image = artifacts.output.clone();
            run.steps.push(artifacts);
        }
        Ok(())
    }
}

/// Stable id derived from the plan contents.
pub fn run_id(plan: &ExecutionPlan) -> String {
    let json = serde_json::to_vec(plan).expect("plans serialize");
    hex::encode(&Sha256::digest(&json)[..6])
}

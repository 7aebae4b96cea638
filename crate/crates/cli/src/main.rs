use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use ivton_core::backends::{BackendConfig, Backends, SegmentationResult};
use ivton_core::executor::Executor;
use ivton_core::fixtures::generate_dataset;
use ivton_core::harness::Evaluator;
use ivton_core::instruction::{resolve_bindings, Lexicon, Synonyms};
use ivton_core::masking::mask_efficiency;
use ivton_core::metrics::to_markdown;
use ivton_core::planner::{ExecutionPlan, Planner};
use ivton_core::raster::io;
use ivton_core::rules::{infer_traces, realize_mask, GarmentSpec, MaskOptions, RuleTable};
use ivton_core::ImageRef;

/// Instruction-driven virtual try-on.
#[derive(Parser)]
#[command(name = "ivton", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the inpainting mask for one garment.
    Mask(MaskArgs),
    /// Build the multi-garment execution plan.
    Plan(PlanArgs),
    /// Plan and execute a try-on run.
    Tryon(TryonArgs),
    /// Evaluate masks on a dataset directory.
    Eval(EvalArgs),
    /// Generate a synthetic dataset.
    GenFixtures(GenArgs),
}

#[derive(Args)]
struct Common {
    /// Backend configuration JSON; stub backends when omitted.
    #[arg(long)]
    backend_config: Option<PathBuf>,
    /// Parts-inclusion rule table replacing the built-in one.
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Instruction-noun synonym table.
    #[arg(long)]
    synonyms: Option<PathBuf>,
}

#[derive(Args)]
struct GarmentArgs {
    #[arg(long)]
    person: PathBuf,
    /// Garment spec JSON. Repeat for several garments.
    #[arg(long = "garment-spec", required = true)]
    garment_specs: Vec<PathBuf>,
    /// Garment images overriding each spec's image_ref, matched by position.
    #[arg(long = "garment")]
    garments: Vec<PathBuf>,
    #[arg(long, default_value = "")]
    instruction: String,
}

#[derive(Args)]
struct MaskArgs {
    #[command(flatten)]
    input: GarmentArgs,
    /// Output directory for mask.png and report.json.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    input: GarmentArgs,
    /// Output plan JSON file.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct TryonArgs {
    #[command(flatten)]
    input: GarmentArgs,
    /// Directory receiving the run directory.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Directory for eval.json, eval.md and try-on outputs.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 12)]
    count: usize,
}

/// Failure tagged with the pipeline stage and exit code.
struct Failure {
    stage: &'static str,
    code: u8,
    error: anyhow::Error,
}

const INPUT: u8 = 2;
const BACKEND: u8 = 3;

trait Stage<T> {
    fn stage(self, stage: &'static str, code: u8) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Stage<T> for Result<T, E> {
    fn stage(self, stage: &'static str, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            stage,
            code,
            error: e.into(),
        })
    }
}

struct Env {
    backends: Backends,
    rules: RuleTable,
    lexicon: Lexicon,
    synonyms: Synonyms,
}

fn context(common: &Common, scratch: &Path) -> Result<Env, Failure> {
    let cfg = match &common.backend_config {
        Some(p) => BackendConfig::load(p).stage("config", INPUT)?,
        None => BackendConfig::default(),
    };
    let backends = Backends::from_config(&cfg, scratch).stage("backends", BACKEND)?;
    let rules = match &common.rules {
        Some(p) => RuleTable::load(p).stage("rules", INPUT)?,
        None => RuleTable::builtin(),
    };
    let synonyms = match &common.synonyms {
        Some(p) => Synonyms::load(p).stage("synonyms", INPUT)?,
        None => Synonyms::builtin(),
    };
    Ok(Env {
        backends,
        rules,
        lexicon: Lexicon::builtin(),
        synonyms,
    })
}

fn load_garments(args: &GarmentArgs) -> Result<Vec<GarmentSpec>, Failure> {
    if !args.garments.is_empty() && args.garments.len() != args.garment_specs.len() {
        return Err(anyhow!(
            "{} --garment images given for {} --garment-spec files",
            args.garments.len(),
            args.garment_specs.len()
        ))
        .stage("input", INPUT);
    }
    let mut out = Vec::new();
    for (i, p) in args.garment_specs.iter().enumerate() {
        let mut g = GarmentSpec::load(p).stage("input", INPUT)?;
        if let Some(img) = args.garments.get(i) {
            g.image_ref = ImageRef::new(img);
        }
        out.push(g);
    }
    Ok(out)
}

fn segment(ctx: &Env, person: &ImageRef) -> Result<SegmentationResult, Failure> {
    ctx.backends.segmenter.segment(person).stage("segmentation", BACKEND)
}

fn cmd_mask(args: &MaskArgs) -> Result<(), Failure> {
    let ctx = context(&args.common, &args.out)?;
    let garments = load_garments(&args.input)?;
    let [garment] = garments.as_slice() else {
        return Err(anyhow!("mask takes exactly one --garment-spec")).stage("input", INPUT);
    };
    let person = ImageRef::new(&args.input.person);
    let seg = segment(&ctx, &person)?;
    let parsed = ctx.lexicon.parse(&args.input.instruction);
    if parsed.is_partial() {
        log::warn!("ignoring unparsed instruction text `{}`", parsed.residual);
    }
    let bindings =
        resolve_bindings(&parsed, &garments, &ctx.lexicon, &ctx.synonyms).stage("instruction", INPUT)?;
    let instruction = bindings[&garment.id];
    let options = MaskOptions::default();
    let est = infer_traces(&ctx.rules, garment, &instruction, &seg.body, &seg.clothing, &options)
        .stage("rules", INPUT)?;
    let mask = realize_mask(&est, &seg.body, &seg.clothing, &options).stage("masking", INPUT)?;
    let report = serde_json::json!({
        "garment_id": garment.id,
        "instruction": instruction,
        "parsed": parsed,
        "rule_trace": est.rule_trace,
        "body_parts": est.body_parts(),
        "clothing_segments": est.c_hat.labels,
        "exposed_parts": est.exposed_parts,
        "post_ops": est.post_ops,
        "mask": mask_efficiency(&mask).stage("masking", INPUT)?,
    });
    io::write_mask(&args.out.join("mask.png"), &mask).stage("output", INPUT)?;
    io::write_json(&args.out.join("report.json"), &report).stage("output", INPUT)?;
    println!("{}", args.out.join("mask.png").display());
    Ok(())
}

fn build_plan(ctx: &Env, input: &GarmentArgs) -> Result<ExecutionPlan, Failure> {
    let garments = load_garments(input)?;
    let person = ImageRef::new(&input.person);
    let seg = segment(ctx, &person)?;
    let mut planner = Planner::new(&ctx.rules, &ctx.lexicon, &ctx.synonyms, ctx.backends.dummies.as_ref());
    planner.vlm = ctx.backends.vlm.as_deref();
    planner
        .build_plan(&garments, &input.instruction, &seg, &person)
        .map_err(|e| {
            let code = match e {
                ivton_core::planner::PlanError::Vlm(_) => BACKEND,
                ivton_core::planner::PlanError::Exec(ref x) if x.is_backend() => BACKEND,
                _ => INPUT,
            };
            Failure {
                stage: "plan",
                code,
                error: e.into(),
            }
        })
}

fn cmd_plan(args: &PlanArgs) -> Result<(), Failure> {
    let scratch = args.out.parent().unwrap_or(Path::new(".")).to_path_buf();
    let ctx = context(&args.common, &scratch)?;
    let plan = build_plan(&ctx, &args.input)?;
    io::write_json(&args.out, &plan).stage("output", INPUT)?;
    println!("{}", args.out.display());
    Ok(())
}

fn cmd_tryon(args: &TryonArgs) -> Result<(), Failure> {
    let ctx = context(&args.common, &args.out)?;
    let plan = build_plan(&ctx, &args.input)?;
    let executor = Executor::new(&ctx.backends, &ctx.rules);
    match executor.execute_plan(&plan, &args.out) {
        Ok(run) => {
            println!("{}", run.final_image);
            Ok(())
        }
        Err(f) => {
            eprintln!("partial artifacts in {}", f.partial.run_dir.display());
            let code = if f.error.is_backend() { BACKEND } else { INPUT };
            Err(f.error).stage("execute", code)
        }
    }
}

fn cmd_eval(args: &EvalArgs) -> Result<(), Failure> {
    let ctx = context(&args.common, &args.out)?;
    let mut ev = Evaluator::new(&ctx.backends, &ctx.rules, &ctx.lexicon, &ctx.synonyms);
    ev.out_dir = Some(args.out.join("outputs"));
    let report = ev.evaluate(&args.dataset).stage("dataset", INPUT)?;
    io::write_json(&args.out.join("eval.json"), &report).stage("output", INPUT)?;
    let md = to_markdown(&report.table);
    std::fs::write(args.out.join("eval.md"), &md)
        .with_context(|| format!("writing {}", args.out.join("eval.md").display()))
        .stage("output", INPUT)?;
    print!("{md}");
    if !report.failures.is_empty() {
        let ids: Vec<&str> = report.failures.iter().map(|f| f.pair_id.as_str()).collect();
        return Err(anyhow!("{} pair(s) failed: {}", ids.len(), ids.join(", "))).stage("eval", INPUT);
    }
    Ok(())
}

fn cmd_gen(args: &GenArgs) -> Result<(), Failure> {
    let ids = generate_dataset(&args.out, args.seed, args.count).stage("output", INPUT)?;
    println!("wrote {} pairs to {}", ids.len(), args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Mask(a) => cmd_mask(a),
        Command::Plan(a) => cmd_plan(a),
        Command::Tryon(a) => cmd_tryon(a),
        Command::Eval(a) => cmd_eval(a),
        Command::GenFixtures(a) => cmd_gen(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error [{}]: {:#}", f.stage, f.error);
            ExitCode::from(f.code)
        }
    }
}

//! Multi-garment planning: bind style clauses to garments, order the garments
//! for sequential try-on and decide which steps need a dummy stage.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{BackendError, DummyGarmentProvider, SegmentationResult, VlmPlanner, VlmProposal};
use crate::executor::{needs_two_step, select_dummy, ExecError, DEFAULT_CONFLICT_THRESHOLD};
use crate::image_ref::ImageRef;
use crate::instruction::{resolve_bindings, BindingError, Lexicon, Synonyms};
use crate::names::named_enum;
use crate::rules::{infer_traces, Classification, GarmentSpec, MaskOptions, RuleError, RuleTable, StyleInstruction, Tuck};

named_enum! {
    pub enum Stage {
        Direct => "direct",
        DummyThenTarget => "dummy_then_target",
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanStep {
    pub garment: GarmentSpec,
    pub instruction: StyleInstruction,
    pub stage: Stage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dummy_spec: Option<GarmentSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionPlan {
    pub steps: Vec<PlanStep>,
    pub source_image_ref: ImageRef,
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("no garments to plan")]
    NoGarments,
    #[error(transparent)]
    Binding(#[from] BindingError),
    #[error(transparent)]
    Rules(#[from] RuleError),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error("VLM backend: {0}")]
    Vlm(BackendError),
    #[error("invalid plan: {0}")]
    Invalid(String),
}

/// Layering rank, doubled to stay integral: overall 2, tucked upper 3,
/// lower 4, upper 6, outerwear 8.
pub fn layer_rank(g: &GarmentSpec, instruction: &StyleInstruction) -> u8 {
    if g.outerwear {
        return 8;
    }
    match g.classification {
        Classification::Overall => 2,
        Classification::Upper if instruction.tuck == Tuck::Tucked => 3,
        Classification::Lower => 4,
        Classification::Upper => 6,
    }
}

/// Garment ids sorted by layering rank; equal ranks keep input order.
pub fn order_garments(garments: &[GarmentSpec], bindings: &BTreeMap<String, StyleInstruction>) -> Vec<String> {
    let mut order: Vec<&GarmentSpec> = garments.iter().collect();
    order.sort_by_key(|g| layer_rank(g, bindings.get(&g.id).unwrap_or(&StyleInstruction::default())));
    order.into_iter().map(|g| g.id.clone()).collect()
}

/// Checks that `order` is a permutation of the garment ids and that no
/// outerwear garment precedes a non-outerwear garment covering a shared body part.
pub fn check_order(
    order: &[String],
    garments: &[GarmentSpec],
    bindings: &BTreeMap<String, StyleInstruction>,
    rules: &RuleTable,
) -> Result<(), PlanError> {
    let ids: BTreeSet<&str> = garments.iter().map(|g| g.id.as_str()).collect();
    let seen: BTreeSet<&str> = order.iter().map(String::as_str).collect();
    if order.len() != garments.len() || seen != ids {
        return Err(PlanError::Invalid(format!(
            "order {order:?} is not a permutation of {ids:?}"
        )));
    }
    let by_id: BTreeMap<&str, &GarmentSpec> = garments.iter().map(|g| (g.id.as_str(), g)).collect();
    let mut coverage = Vec::with_capacity(order.len());
    for id in order {
        let g = by_id[id.as_str()];
        let instr = bindings.get(id).copied().unwrap_or_default();
        coverage.push((g, rules.evaluate(g, &instr)?.parts));
    }
    for (i, (outer, outer_parts)) in coverage.iter().enumerate() {
        if !outer.outerwear {
            continue;
        }
        let clash = coverage[i + 1..]
            .iter()
            .find(|(g, parts)| !g.outerwear && !parts.is_disjoint(outer_parts));
        if let Some((g, _)) = clash {
            return Err(PlanError::Invalid(format!(
                "outerwear `{}` would be put on before `{}`",
                outer.id, g.id
            )));
        }
    }
    Ok(())
}

/// Builds execution plans. Deterministic unless a VLM is configured, and VLM
/// proposals are only used after validation.
pub struct Planner<'a> {
    pub rules: &'a RuleTable,
    pub lexicon: &'a Lexicon,
    pub synonyms: &'a Synonyms,
    pub dummies: &'a dyn DummyGarmentProvider,
    pub vlm: Option<&'a dyn VlmPlanner>,
    pub threshold_fraction: f64,
    pub options: MaskOptions,
}

impl<'a> Planner<'a> {
    pub fn new(
        rules: &'a RuleTable,
        lexicon: &'a Lexicon,
        synonyms: &'a Synonyms,
        dummies: &'a dyn DummyGarmentProvider,
    ) -> Self {
        Self {
            rules,
            lexicon,
            synonyms,
            dummies,
            vlm: None,
            threshold_fraction: DEFAULT_CONFLICT_THRESHOLD,
            options: MaskOptions::default(),
        }
    }

    fn validate_proposal(
        &self,
        p: VlmProposal,
        garments: &[GarmentSpec],
    ) -> Result<(Vec<String>, BTreeMap<String, StyleInstruction>), PlanError> {
        let mut bindings: BTreeMap<String, StyleInstruction> =
            garments.iter().map(|g| (g.id.clone(), StyleInstruction::default())).collect();
        for (id, instr) in p.instructions {
            match bindings.get_mut(&id) {
                Some(slot) => *slot = instr,
                None => return Err(PlanError::Invalid(format!("instruction for unknown garment `{id}`"))),
            }
        }
        check_order(&p.order, garments, &bindings, self.rules)?;
        Ok((p.order, bindings))
    }

    /// Order and per-garment instructions, from the deterministic path or a
    /// validated VLM proposal.
    fn decide(
        &self,
        garments: &[GarmentSpec],
        text: &str,
        source: &ImageRef,
    ) -> Result<(Vec<String>, BTreeMap<String, StyleInstruction>), PlanError> {
        let parsed = self.lexicon.parse(text);
        let deterministic = resolve_bindings(&parsed, garments, self.lexicon, self.synonyms)
            .map(|b| (order_garments(garments, &b), b));
        let Some(vlm) = self.vlm.filter(|_| parsed.is_partial() || deterministic.is_err()) else {
            if parsed.is_partial() {
                log::warn!("ignoring unparsed instruction text `{}`", parsed.residual);
            }
            return Ok(deterministic?);
        };
        let proposal = match vlm.propose(garments, text, source) {
            Ok(p) => self.validate_proposal(p, garments),
            Err(e @ BackendError::InvalidResponse { .. }) => Err(PlanError::Vlm(e)),
            Err(e) => return Err(PlanError::Vlm(e)),
        };
        match (proposal, deterministic) {
            (Ok(p), _) => Ok(p),
            (Err(e), Ok(d)) => {
                log::warn!("rejected VLM proposal ({e}); using the deterministic plan");
                Ok(d)
            }
            (Err(e), Err(d)) => Err(PlanError::Invalid(format!(
                "VLM proposal rejected ({e}) and the instruction cannot be bound deterministically ({d})"
            ))),
        }
    }

    pub fn build_plan(
        &self,
        garments: &[GarmentSpec],
        text: &str,
        seg: &SegmentationResult,
        source: &ImageRef,
    ) -> Result<ExecutionPlan, PlanError> {
        if garments.is_empty() {
            return Err(PlanError::NoGarments);
        }
        for g in garments {
            g.validate().map_err(RuleError::InvalidGarment)?;
        }
        let (order, bindings) = self.decide(garments, text, source)?;
        let mut steps = Vec::with_capacity(order.len());
        for id in &order {
            let garment = garments.iter().find(|g| &g.id == id).expect("validated permutation");
            let instruction = bindings[id];
            let est = infer_traces(self.rules, garment, &instruction, &seg.body, &seg.clothing, &self.options)?;
            let report = needs_two_step(&est, &seg.body, &seg.clothing, self.threshold_fraction)?;
            let (stage, dummy_spec) = if report.two_step {
                let dummy = select_dummy(garment, &report, self.dummies, self.rules)?;
                (Stage::DummyThenTarget, Some(dummy))
            } else {
                (Stage::Direct, None)
            };
            steps.push(PlanStep {
                garment: garment.clone(),
                instruction,
                stage,
                dummy_spec,
            });
        }
        Ok(ExecutionPlan {
            steps,
            source_image_ref: source.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::DummyLibrary;
    use crate::fixtures::{render_person, FigureParams, Outfit, Preset};
    use crate::rules::{ClosureState, Sleeves};

    fn specs(list: &[(Preset, &str)]) -> Vec<GarmentSpec> {
        list.iter()
            .map(|(p, id)| p.spec(id, ImageRef::new(format!("{id}.png"))))
            .collect()
    }

    fn tucked() -> StyleInstruction {
        StyleInstruction {
            tuck: Tuck::Tucked,
            ..Default::default()
        }
    }

    #[test]
    fn ranks_and_stability() {
        let gs = specs(&[(Preset::Jacket, "jacket"), (Preset::LongSleeveShirt, "shirt"), (Preset::Pants, "pants")]);
        let mut b = BTreeMap::new();
        assert_eq!(order_garments(&gs, &b), ["pants", "shirt", "jacket"]);
        b.insert("shirt".to_string(), tucked());
        assert_eq!(order_garments(&gs, &b), ["shirt", "pants", "jacket"]);
        let two = specs(&[(Preset::TShirt, "b"), (Preset::LongSleeveShirt, "a")]);
        assert_eq!(order_garments(&two, &BTreeMap::new()), ["b", "a"]);
        let dress = specs(&[(Preset::TShirt, "t"), (Preset::Dress, "d")]);
        assert_eq!(order_garments(&dress, &BTreeMap::new()), ["d", "t"]);
    }

    #[test]
    fn outerwear_first_is_rejected() {
        let rules = RuleTable::builtin();
        let gs = specs(&[(Preset::Jacket, "jacket"), (Preset::LongSleeveShirt, "shirt")]);
        let b = BTreeMap::new();
        assert!(check_order(&["shirt".into(), "jacket".into()], &gs, &b, &rules).is_ok());
        assert!(check_order(&["jacket".into(), "shirt".into()], &gs, &b, &rules).is_err());
        assert!(check_order(&["shirt".into()], &gs, &b, &rules).is_err());
        assert!(check_order(&["shirt".into(), "shirt".into()], &gs, &b, &rules).is_err());
        // a jacket and pants share no part, so either order is fine
        let gp = specs(&[(Preset::Jacket, "jacket"), (Preset::Pants, "pants")]);
        assert!(check_order(&["jacket".into(), "pants".into()], &gp, &b, &rules).is_ok());
    }

    struct Fixed(Result<VlmProposal, fn() -> BackendError>);

    impl VlmPlanner for Fixed {
        fn name(&self) -> &str {
            "fixed"
        }

        fn propose(&self, _: &[GarmentSpec], _: &str, _: &ImageRef) -> Result<VlmProposal, BackendError> {
            match &self.0 {
                Ok(p) => Ok(p.clone()),
                Err(f) => Err(f()),
            }
        }
    }

    fn plan_with(vlm: Option<&dyn VlmPlanner>, gs: &[GarmentSpec], text: &str) -> Result<ExecutionPlan, PlanError> {
        let dir = tempfile::tempdir().unwrap();
        let lib = DummyLibrary::write_builtin(dir.path()).unwrap();
        let (rules, lex, syn) = (RuleTable::builtin(), Lexicon::builtin(), Synonyms::default());
        let mut planner = Planner::new(&rules, &lex, &syn, &lib);
        planner.vlm = vlm;
        let p = render_person(&FigureParams::default(), &Outfit::long_sleeves());
        let seg = SegmentationResult::new(p.body, p.clothing).unwrap();
        planner.build_plan(gs, text, &seg, &ImageRef::new("person.png"))
    }

    fn ids(plan: &ExecutionPlan) -> Vec<&str> {
        plan.steps.iter().map(|s| s.garment.id.as_str()).collect()
    }

    #[test]
    fn three_garment_plan() {
        let gs = specs(&[(Preset::Jacket, "jacket"), (Preset::Pants, "pants"), (Preset::LongSleeveShirt, "shirt")]);
        let plan = plan_with(None, &gs, "try on the shirt tucked in, jacket open").unwrap();
        assert_eq!(ids(&plan), ["shirt", "pants", "jacket"]);
        assert!(plan.steps.iter().all(|s| s.stage == Stage::Direct && s.dummy_spec.is_none()));
        assert_eq!(plan.steps[2].instruction.closure_state, ClosureState::Open);
    }

    #[test]
    fn rolled_sleeves_plan_uses_a_dummy() {
        let gs = specs(&[(Preset::LongSleeveShirt, "shirt")]);
        let plan = plan_with(None, &gs, "sleeves rolled up").unwrap();
        assert_eq!(plan.steps[0].stage, Stage::DummyThenTarget);
        assert_eq!(plan.steps[0].instruction.sleeves, Sleeves::RolledUp);
        assert_eq!(plan.steps[0].dummy_spec.as_ref().unwrap().category_noun, "tank top");
        let plain = plan_with(None, &gs, "").unwrap();
        assert_eq!(plain.steps[0].stage, Stage::Direct);
        let json = serde_json::to_value(&plain).unwrap();
        assert!(json["steps"][0].get("dummy_spec").is_none());
        assert_eq!(json["steps"][0]["stage"], "direct");
    }

    #[test]
    fn vlm_proposals_are_validated() {
        let gs = specs(&[(Preset::LongSleeveShirt, "shirt"), (Preset::Jacket, "jacket")]);
        // the text is out of grammar, so the VLM is consulted
        let text = "make it look casual";
        let good = Fixed(Ok(VlmProposal {
            order: vec!["shirt".into(), "jacket".into()],
            instructions: [("jacket".to_string(), StyleInstruction { closure_state: ClosureState::Open, ..Default::default() })].into(),
        }));
        let plan = plan_with(Some(&good), &gs, text).unwrap();
        assert_eq!(plan.steps[1].instruction.closure_state, ClosureState::Open);

        let bad = Fixed(Ok(VlmProposal {
            order: vec!["jacket".into(), "shirt".into()],
            instructions: BTreeMap::new(),
        }));
        let plan = plan_with(Some(&bad), &gs, text).unwrap();
        assert_eq!(ids(&plan), ["shirt", "jacket"]);
        assert!(plan.steps.iter().all(|s| s.instruction.is_default()));

        let garbled = Fixed(Err(|| BackendError::invalid("fixed", "not JSON")));
        assert_eq!(ids(&plan_with(Some(&garbled), &gs, text).unwrap()), ["shirt", "jacket"]);

        let down = Fixed(Err(|| BackendError::failed("fixed", "connection refused")));
        assert!(matches!(plan_with(Some(&down), &gs, text), Err(PlanError::Vlm(_))));
    }

    #[test]
    fn ambiguity_needs_a_vlm() {
        let gs = specs(&[(Preset::LongSleeveShirt, "shirt"), (Preset::Jacket, "jacket")]);
        assert!(matches!(plan_with(None, &gs, "sleeves rolled up"), Err(PlanError::Binding(_))));
        let vlm = Fixed(Ok(VlmProposal {
            order: vec!["shirt".into(), "jacket".into()],
            instructions: [("jacket".to_string(), StyleInstruction { sleeves: Sleeves::RolledUp, ..Default::default() })].into(),
        }));
        let plan = plan_with(Some(&vlm), &gs, "sleeves rolled up").unwrap();
        assert_eq!(plan.steps[1].instruction.sleeves, Sleeves::RolledUp);
        let bad = Fixed(Ok(VlmProposal { order: vec!["shirt".into()], instructions: BTreeMap::new() }));
        assert!(matches!(plan_with(Some(&bad), &gs, "sleeves rolled up"), Err(PlanError::Invalid(_))));
    }

    #[test]
    fn empty_garment_list() {
        assert!(matches!(plan_with(None, &[], ""), Err(PlanError::NoGarments)));
    }
}

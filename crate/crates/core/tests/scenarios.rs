mod common;

use std::path::PathBuf;

use common::scenario::{changed, parts, rgb, scene, segmentation};
use ivton_core::backends::Backends;
use ivton_core::fixtures::{generate_dataset, render_person, FigureParams, Outfit, Preset};
use ivton_core::harness::Evaluator;
use ivton_core::instruction::{Lexicon, Synonyms};
use ivton_core::planner::Stage;
use ivton_core::raster::{BinaryMask, BodyPart};
use ivton_core::rules::{
    infer_traces, realize_mask, ClosureState, MaskOptions, RuleError, RuleTable, Sleeves, StyleInstruction, Tuck,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ARMS: [BodyPart; 2] = [BodyPart::UpperArms, BodyPart::LowerArms];

#[test]
fn rolled_sleeves_over_long_sleeves_take_two_stages() {
    let s = scene(&Outfit::long_sleeves(), &[(Preset::LongSleeveShirt, "shirt")]);
    let plan = s.plan("sleeves rolled up");
    assert_eq!(plan.steps.len(), 1);
    assert_eq!(plan.steps[0].stage, Stage::DummyThenTarget);
    let run = s.run(&plan, &s.dir.path().join("runs"));
    let step = &run.steps[0];
    let source = segmentation(&s.person);
    let sleeves = source.clothing.region_of([2]).unwrap().intersect(&parts(&source, &ARMS)).unwrap();
    assert!(!sleeves.is_empty());
    assert!(sleeves.is_subset_of(step.dummy_mask().unwrap()));
    let seg_b = segmentation(step.intermediate.as_ref().unwrap());
    assert!(!step.target_mask().intersects(&parts(&seg_b, &[BodyPart::LowerArms])));
    let dir = &run.run_dir.join("step_0");
    for f in ["mask_dummy.png", "intermediate.png", "mask.png", "output.png", "report.json"] {
        assert!(dir.join(f).exists(), "{f}");
    }

    let plain = s.plan("");
    assert_eq!(plain.steps.len(), 1);
    assert_eq!(plain.steps[0].stage, Stage::Direct);
    assert!(plain.steps[0].dummy_spec.is_none());
}

#[test]
fn rolled_sleeves_over_a_t_shirt_stay_direct() {
    let s = scene(&Outfit::t_shirt(), &[(Preset::LongSleeveShirt, "shirt")]);
    assert_eq!(s.plan("sleeves rolled up").steps[0].stage, Stage::Direct);
}

#[test]
fn three_garments_in_layer_order_with_open_jacket() {
    let s = scene(
        &Outfit::long_sleeves(),
        &[(Preset::Jacket, "jacket"), (Preset::Pants, "pants"), (Preset::LongSleeveShirt, "shirt")],
    );
    let plan = s.plan("try on the shirt tucked in, jacket open");
    let order: Vec<&str> = plan.steps.iter().map(|st| st.garment.id.as_str()).collect();
    assert_eq!(order, ["shirt", "pants", "jacket"]);
    assert_eq!(plan.steps[0].instruction.tuck, Tuck::Tucked);
    assert_eq!(plan.steps[2].instruction.closure_state, ClosureState::Open);
    let run = s.run(&plan, &s.dir.path().join("runs"));
    let jacket = &run.steps[2];
    let seg = segmentation(&jacket.input);
    // an upper garment's trace only holds the upper torso, which anchors the stripe
    let torso = parts(&seg, &[BodyPart::UpperTorso]);
    let bb = torso.bbox().unwrap();
    let mask = jacket.target_mask();
    let cx = (bb.x0 + bb.x1) / 2;
    for y in bb.y0..=bb.y1 {
        assert!(!mask.get(cx, y), "center column masked at y={y}");
        assert!(mask.get(bb.x0, y) && mask.get(bb.x1, y), "torso edge unmasked at y={y}");
    }
}

#[test]
fn paste_through_run_is_reproducible_and_local() {
    let s = scene(
        &Outfit::t_shirt(),
        &[(Preset::Jacket, "jacket"), (Preset::Pants, "pants"), (Preset::LongSleeveShirt, "shirt")],
    );
    let plan = s.plan("try on the shirt tucked in, jacket open");
    let a = s.run(&plan, &s.dir.path().join("a"));
    let b = s.run(&plan, &s.dir.path().join("b"));
    assert_eq!(rgb(&a.final_image), rgb(&b.final_image));
    for (sa, sb) in a.steps.iter().zip(&b.steps) {
        assert_eq!(sa.masks.len(), sb.masks.len());
        for (ma, mb) in sa.masks.iter().zip(&sb.masks) {
            assert_eq!(std::fs::read(&ma.path).unwrap(), std::fs::read(&mb.path).unwrap());
        }
    }
    let mut union = BinaryMask::empty(48, 72);
    for st in &a.steps {
        for m in &st.masks {
            union = union.union(&m.mask).unwrap();
        }
    }
    assert!(changed(&rgb(&s.person), &rgb(&a.final_image)).is_subset_of(&union));
}

#[test]
fn failure_keeps_partial_artifacts() {
    let s = scene(&Outfit::t_shirt(), &[(Preset::Pants, "pants"), (Preset::LongSleeveShirt, "shirt")]);
    let plan = s.plan("");
    let mut backends = Backends::stubs(&s.dir.path().join("scratch2")).unwrap();
    backends.vto = Box::new(ivton_core::backends::PasteThroughVto {
        fail_on_garment: Some("shirt.png".into()),
    });
    let failure = ivton_core::executor::Executor::new(&backends, &s.rules)
        .execute_plan(&plan, &s.dir.path().join("runs"))
        .unwrap_err();
    assert!(failure.error.is_backend());
    let done = failure.partial.steps.len();
    assert!(done < plan.steps.len());
    assert!(failure.partial.run_dir.join("manifest.json").exists());
}

/// Exposed and identity parts stay out of every realized mask, for every
/// garment and instruction the table accepts, on a range of figures and outfits.
#[test]
fn exposure_and_identity_are_never_masked() {
    let rules = RuleTable::builtin();
    let opts = MaskOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut figures = vec![
        render_person(&FigureParams::default(), &Outfit::long_sleeves()),
        render_person(&FigureParams::default(), &Outfit::t_shirt()),
    ];
    for _ in 0..4 {
        let dir = tempfile::tempdir().unwrap();
        generate_dataset(dir.path(), rand::Rng::random(&mut rng), 1).unwrap();
        let seg = segmentation(&ivton_core::ImageRef::new(dir.path().join("pair_000/person.png")));
        figures.push(ivton_core::fixtures::PersonFixture {
            image: image::RgbImage::new(1, 1),
            body: seg.body,
            clothing: seg.clothing,
        });
    }
    let mut checked = 0;
    for g in common::all_garments() {
        for &sleeves in Sleeves::ALL {
            for &closure_state in ClosureState::ALL {
                for &tuck in Tuck::ALL {
                    let instr = StyleInstruction { sleeves, closure_state, tuck };
                    for f in &figures {
                        let est = match infer_traces(&rules, &g, &instr, &f.body, &f.clothing, &opts) {
                            Ok(e) => e,
                            Err(RuleError::Unmatched { .. }) => continue,
                            Err(e) => panic!("{e}"),
                        };
                        let m = realize_mask(&est, &f.body, &f.clothing, &opts).unwrap();
                        let banned: Vec<BodyPart> =
                            est.exposed_parts.iter().chain(&BodyPart::IDENTITY).copied().collect();
                        assert!(!m.intersects(&f.body.parts_region(&banned).unwrap()), "{:?}", est.rule_trace);
                        checked += 1;
                    }
                }
            }
        }
    }
    assert!(checked > 500, "{checked}");
}

fn bundled() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic")
}

#[test]
fn bundled_dataset_trace_masks_beat_bounding_boxes() {
    let dir = tempfile::tempdir().unwrap();
    let backends = Backends::stubs(dir.path()).unwrap();
    let (rules, lex, syn) = (RuleTable::builtin(), Lexicon::builtin(), Synonyms::default());
    let report = Evaluator::new(&backends, &rules, &lex, &syn).evaluate(&bundled()).unwrap();
    assert!(report.failures.is_empty(), "{:?}", report.failures);
    assert!(report.records.len() >= 24);
    assert!(report.dominance_violations().is_empty(), "{:?}", report.dominance_violations());
}

#[test]
fn bundled_dataset_regenerates_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let ids = generate_dataset(dir.path(), 7, 12).unwrap();
    for id in ids {
        for entry in std::fs::read_dir(bundled().join(&id)).unwrap() {
            let name = entry.unwrap().file_name();
            let fresh = std::fs::read(dir.path().join(&id).join(&name)).unwrap();
            assert_eq!(fresh, std::fs::read(bundled().join(&id).join(&name)).unwrap(), "{id}/{name:?}");
        }
    }
}

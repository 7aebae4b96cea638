//! Dataset evaluation: trace-based masks against the bounding-box baseline,
//! with SSIM against reference renders when a pair has one.
//!
//! A dataset is a directory of pair directories, each holding `person.png` (plus
//! whatever the segmentation backend needs), `garment_spec.json` (its image
//! ref relative to the pair), `pair.json` and optionally `reference.png`.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::backends::{Backends, TryOnRequest};
use crate::fixtures::PairMeta;
use crate::image_ref::ImageRef;
use crate::instruction::{resolve_bindings, Lexicon, Synonyms};
use crate::masking::mask_efficiency;
use crate::metrics::{aggregate, ssim_rgb, AggregateRow, Category, EvalRecord, Masker, SsimParams};
use crate::raster::io::{self, IoError};
use crate::raster::BinaryMask;
use crate::rules::{bbox_baseline_mask, infer_traces, realize_mask, GarmentSpec, MaskOptions, RuleTable};

#[derive(Clone, Debug, Serialize)]
pub struct PairFailure {
    pub pair_id: String,
    pub error: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct EvalReport {
    pub records: Vec<EvalRecord>,
    pub failures: Vec<PairFailure>,
    pub table: Vec<AggregateRow>,
}

impl EvalReport {
    /// Pairs where the trace mask is not strictly more efficient than the baseline.
    pub fn dominance_violations(&self) -> Vec<String> {
        let eff = |id: &str, m: Masker| {
            self.records
                .iter()
                .find(|r| r.pair_id == id && r.masker == m)
                .map(|r| r.efficiency)
        };
        let mut ids: Vec<&str> = self.records.iter().map(|r| r.pair_id.as_str()).collect();
        ids.dedup();
        ids.into_iter()
            .filter(|id| match (eff(id, Masker::Trace), eff(id, Masker::BboxBaseline)) {
                (Some(t), Some(b)) => t <= b,
                _ => true,
            })
            .map(String::from)
            .collect()
    }
}

pub struct Evaluator<'a> {
    pub backends: &'a Backends,
    pub rules: &'a RuleTable,
    pub lexicon: &'a Lexicon,
    pub synonyms: &'a Synonyms,
    pub options: MaskOptions,
    pub ssim: SsimParams,
    /// Where try-on outputs for SSIM go. SSIM is skipped when absent.
    pub out_dir: Option<PathBuf>,
}

impl<'a> Evaluator<'a> {
    pub fn new(backends: &'a Backends, rules: &'a RuleTable, lexicon: &'a Lexicon, synonyms: &'a Synonyms) -> Self {
        Self {
            backends,
            rules,
            lexicon,
            synonyms,
            options: MaskOptions::default(),
            ssim: SsimParams::default(),
            out_dir: None,
        }
    }

    /// Evaluates every pair directory under `root` in parallel. Pair failures are
    /// logged and reported, not fatal.
    pub fn evaluate(&self, root: &Path) -> Result<EvalReport, IoError> {
        let mut dirs: Vec<PathBuf> = std::fs::read_dir(root)
            .map_err(|source| IoError::Io {
                path: root.to_path_buf(),
                source,
            })?
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.is_dir())
            .collect();
        dirs.sort();
        let results: Vec<(String, Result<Vec<EvalRecord>, String>)> = dirs
            .par_iter()
            .map(|dir| {
                let id = dir.file_name().unwrap_or_default().to_string_lossy().into_owned();
                let r = self.evaluate_pair(&id, dir);
                if let Err(e) = &r {
                    log::error!("pair `{id}` excluded: {e}");
                }
                (id, r)
            })
            .collect();
        let mut report = EvalReport::default();
        for (pair_id, r) in results {
            match r {
                Ok(recs) => report.records.extend(recs),
                Err(error) => report.failures.push(PairFailure { pair_id, error }),
            }
        }
        report.table = aggregate(&report.records);
        Ok(report)
    }

    fn evaluate_pair(&self, id: &str, dir: &Path) -> Result<Vec<EvalRecord>, String> {
        let meta: PairMeta = io::read_json(&dir.join("pair.json")).map_err(|e| e.to_string())?;
        let category: Category = meta.category.parse()?;
        let garment = GarmentSpec::load(&dir.join("garment_spec.json")).map_err(|e| e.to_string())?;
        let person = ImageRef::new(dir.join("person.png"));
        let seg = self.backends.segmenter.segment(&person).map_err(|e| e.to_string())?;
        let parsed = self.lexicon.parse(&meta.instruction);
        let bindings = resolve_bindings(&parsed, std::slice::from_ref(&garment), self.lexicon, self.synonyms)
            .map_err(|e| e.to_string())?;
        let instr = bindings[&garment.id];
        let est = infer_traces(self.rules, &garment, &instr, &seg.body, &seg.clothing, &self.options)
            .map_err(|e| e.to_string())?;
        let trace = realize_mask(&est, &seg.body, &seg.clothing, &self.options).map_err(|e| e.to_string())?;
        let bbox = bbox_baseline_mask(&est, &seg.body, &seg.clothing).map_err(|e| e.to_string())?;
        let reference = dir.join("reference.png");
        let mut out = Vec::new();
        for (masker, mask) in [(Masker::Trace, trace), (Masker::BboxBaseline, bbox)] {
            let ssim = match (&self.out_dir, reference.exists()) {
                (Some(out_dir), true) => Some(self.ssim_for(id, masker, &person, &garment, mask.clone(), out_dir, &reference)?),
                _ => None,
            };
            out.push(EvalRecord {
                pair_id: id.to_string(),
                category,
                masker,
                efficiency: mask_efficiency(&mask).map_err(|e| e.to_string())?.efficiency,
                ssim,
            });
        }
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn ssim_for(
        &self,
        id: &str,
        masker: Masker,
        person: &ImageRef,
        garment: &GarmentSpec,
        mask: BinaryMask,
        out_dir: &Path,
        reference: &Path,
    ) -> Result<f64, String> {
        let req = TryOnRequest {
            person: person.clone(),
            garment: garment.image_ref.clone(),
            mask,
            category: garment.clothing_category(),
            garment_name: garment.category_noun.clone(),
        };
        let out = out_dir.join(id).join(format!("{masker}.png"));
        let result = self.backends.vto.try_on(&req, &out).map_err(|e| e.to_string())?;
        let a = io::read_rgb(result.path()).map_err(|e| e.to_string())?;
        let b = io::read_rgb(reference).map_err(|e| e.to_string())?;
        ssim_rgb(&a, &b, &self.ssim).map_err(|e| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::generate_dataset;

    #[test]
    fn small_dataset_dominance_and_failures() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("data");
        generate_dataset(&data, 3, 4).unwrap();
        std::fs::create_dir_all(data.join("pair_broken")).unwrap();
        let backends = Backends::stubs(dir.path()).unwrap();
        let (rules, lex, syn) = (RuleTable::builtin(), Lexicon::builtin(), Synonyms::default());
        let mut ev = Evaluator::new(&backends, &rules, &lex, &syn);
        ev.out_dir = Some(dir.path().join("out"));
        let report = ev.evaluate(&data).unwrap();
        assert_eq!(report.records.len(), 8);
        assert_eq!(report.failures.len(), 1);
        assert_eq!(report.failures[0].pair_id, "pair_broken");
        assert!(report.dominance_violations().is_empty());
        assert!(report.records.iter().all(|r| r.ssim.is_some_and(|s| (-1.0..=1.0).contains(&s))));
    }

    #[test]
    fn empty_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let backends = Backends::stubs(dir.path()).unwrap();
        let (rules, lex, syn) = (RuleTable::builtin(), Lexicon::builtin(), Synonyms::default());
        let empty = dir.path().join("empty");
        std::fs::create_dir(&empty).unwrap();
        let report = Evaluator::new(&backends, &rules, &lex, &syn).evaluate(&empty).unwrap();
        assert!(report.records.is_empty() && report.failures.is_empty() && report.table.is_empty());
    }
}

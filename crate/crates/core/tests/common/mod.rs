#![allow(dead_code)]

use std::path::PathBuf;

use sago::grammar::{GrammarDoc, Saog};
use sago::learning::{learn_grammar, load_scenes, CdConfig, LearnedGrammar};
use sago::sampler::SamplerConfig;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/bedroom")
}

pub fn bedroom_skeleton() -> GrammarDoc {
    GrammarDoc::load(data_dir().join("skeleton.json")).unwrap()
}

/// Bedroom grammar learned from the bundled training scenes.
pub fn learned_bedroom(cd: &CdConfig, seed: u64) -> LearnedGrammar {
    let scenes = load_scenes(data_dir().join("scenes.json")).unwrap();
    learn_grammar(&bedroom_skeleton(), &scenes, cd, &SamplerConfig::default(), seed).unwrap()
}

pub fn bedroom() -> Saog {
    learned_bedroom(&CdConfig::default(), 0).grammar
}

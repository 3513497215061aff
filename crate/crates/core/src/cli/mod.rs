//! The `sago` command line: learn → sample → instantiate → render, plus
//! validation and statistics.

mod config;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::grammar::{GrammarDoc, ParseGraph, Saog};
use crate::gtrender::{render_ground_truth, write_frame, CameraSpec, Channel};
use crate::learning::{
    collect_statistics, learn_grammar, load_scenes, relation_stats, scenes_from_json, LearnedGrammar, StatsReport,
};
use crate::sampler::{sample, ChainTrace, SamplerConfig};
use crate::scene::{instantiate_scene, layout_to_obj, validate_layout, AttributeRanges, ModelCatalog, SceneLayout};

pub use config::PipelineConfig;

#[derive(Debug, Parser)]
#[command(name = "sago", version, about = "Learn, sample, instantiate and render indoor scenes")]
pub struct Cli {
    /// Seed for every random choice; chain i uses seed + i.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Pipeline config supplying defaults for every command.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Learn a grammar bundle from training scenes.
    Learn(LearnArgs),
    /// Sample parse graphs from a grammar bundle.
    Sample(SampleArgs),
    /// Instantiate parse graphs into scene layouts.
    Instantiate(InstantiateArgs),
    /// Render ground-truth frames of scene layouts.
    Render(RenderArgs),
    /// Run every stage and write a hashed manifest.
    Pipeline(PipelineArgs),
    /// Check a grammar, training-scene, parse-graph, layout or catalog file.
    Validate(ValidateArgs),
    /// Print the sufficient statistics of training scenes.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct LearnArgs {
    #[arg(long)]
    pub skeleton: Option<PathBuf>,
    #[arg(long)]
    pub scenes: Option<PathBuf>,
    /// Output bundle path.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub iterations: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub grammar: Option<PathBuf>,
    /// Number of independent chains, one scene each.
    #[arg(long, visible_alias = "n")]
    pub chains: Option<usize>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long, overrides_with = "no_staged")]
    pub staged: bool,
    #[arg(long, overrides_with = "staged")]
    pub no_staged: bool,
    /// Directory for per-chain JSON-lines traces.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InstantiateArgs {
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    /// Attribute ranges (JSON).
    #[arg(long)]
    pub attributes: Option<PathBuf>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Also write box-proxy OBJ files.
    #[arg(long)]
    pub obj: bool,
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Camera spec or list of specs (JSON); defaults to each layout's cameras.
    #[arg(long)]
    pub camera: Option<PathBuf>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub channels: Option<Vec<Channel>>,
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub file: PathBuf,
    #[arg(long, value_enum)]
    pub kind: Option<FileKind>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub skeleton: Option<PathBuf>,
    #[arg(long)]
    pub scenes: Option<PathBuf>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileKind {
    Grammar,
    Scenes,
    ParseGraph,
    Layout,
    Catalog,
}

impl fmt::Display for FileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FileKind::Grammar => "grammar",
            FileKind::Scenes => "scenes",
            FileKind::ParseGraph => "parse graph",
            FileKind::Layout => "layout",
            FileKind::Catalog => "catalog",
        })
    }
}

/// A command failure and its exit code.
#[derive(Debug)]
pub enum Failure {
    /// Exit 1.
    Usage(String),
    /// Exit 2.
    Validation(String),
    /// Exit 3.
    Runtime(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Validation(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Validation(m) | Failure::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn stage<T>(name: &str, r: crate::Result<T>) -> CliResult<T> {
    r.map_err(|e| Failure::Runtime(format!("stage `{name}`: {e}")))
}

fn existing(p: Option<PathBuf>, what: &str) -> CliResult<PathBuf> {
    let p = p.ok_or_else(|| Failure::Usage(format!("missing {what} (flag or config)")))?;
    if !p.exists() {
        return Err(Failure::Usage(format!("{what} `{}` does not exist", p.display())));
    }
    Ok(p)
}

fn output(p: Option<PathBuf>, what: &str) -> CliResult<PathBuf> {
    p.ok_or_else(|| Failure::Usage(format!("missing {what} (flag or config)")))
}

fn mkdir(dir: &Path) -> crate::Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> crate::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        mkdir(dir)?;
    }
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> crate::Result<()> {
    write_text(path, &serde_json::to_string_pretty(value)?)
}

/// RNG of chain `i`.
pub fn chain_rng(seed: u64, i: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(i))
}

/// RNG used to instantiate scene `i`: stream 1 of the chain seed.
pub fn instance_rng(seed: u64, i: u64) -> ChaCha8Rng {
    let mut r = chain_rng(seed, i);
    r.set_stream(1);
    r
}

pub fn learn_from_files(skeleton: &Path, scenes: &Path, cfg: &PipelineConfig, seed: u64) -> crate::Result<LearnedGrammar> {
    let skel = GrammarDoc::load(skeleton)?;
    let scenes = load_scenes(scenes)?;
    learn_grammar(&skel, &scenes, &cfg.learning, &cfg.sampling, seed)
}

/// `n` independent chains with seeds `seed + i`, run in parallel.
pub fn sample_chains(grammar: &Saog, cfg: &SamplerConfig, n: usize, seed: u64) -> crate::Result<Vec<(ParseGraph, ChainTrace)>> {
    (0..n as u64)
        .into_par_iter()
        .map(|i| sample(grammar, cfg, &mut chain_rng(seed, i)))
        .collect()
}

fn scene_name(i: usize) -> String {
    format!("scene_{i:04}")
}

fn stem(p: &Path) -> String {
    let name = p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    name.strip_suffix(".layout.json")
        .or_else(|| name.strip_suffix(".json"))
        .unwrap_or(&name)
        .to_string()
}

fn load_cameras(path: &Path) -> crate::Result<Vec<CameraSpec>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.into(),
        source,
    })?;
    let cams = if v.is_array() {
        serde_json::from_value(v)?
    } else {
        vec![serde_json::from_value(v)?]
    };
    Ok(cams)
}

/// Renders every camera of `cameras` (or the layout's own) and returns the
/// written files with their channel.
pub fn render_layout(
    layout: &SceneLayout,
    cameras: &[CameraSpec],
    channels: &[Channel],
    out_dir: &Path,
    name: &str,
) -> crate::Result<Vec<(Channel, PathBuf)>> {
    mkdir(out_dir)?;
    let cams = if cameras.is_empty() { &layout.attributes.cameras[..] } else { cameras };
    let instances: BTreeMap<u32, String> = layout
        .instance_categories()
        .into_iter()
        .map(|(k, v)| (k, v.to_string()))
        .collect();
    let mut files = Vec::new();
    for (k, cam) in cams.iter().enumerate() {
        let frame = render_ground_truth(layout, cam)?;
        let base = out_dir.join(format!("{name}_cam{k}"));
        files.extend(write_frame(&frame, cam, &layout.label_table, &instances, &base, channels)?);
    }
    Ok(files)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    /// Path relative to the output directory, `/`-separated.
    pub path: String,
    pub kind: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub seed: u64,
    pub scenes: usize,
    pub artifacts: Vec<Artifact>,
}

pub fn sha256_file(path: &Path) -> crate::Result<(String, u64)> {
    let mut f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut n = 0u64;
    loop {
        let k = f.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if k == 0 {
            break;
        }
        h.update(&buf[..k]);
        n += k as u64;
    }
    Ok((hex::encode(h.finalize()), n))
}

fn artifact(root: &Path, path: &Path, kind: &str) -> crate::Result<Artifact> {
    let (sha256, bytes) = sha256_file(path)?;
    let rel = path.strip_prefix(root).unwrap_or(path);
    let parts: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
    Ok(Artifact {
        path: parts.join("/"),
        kind: kind.to_string(),
        sha256,
        bytes,
    })
}

/// Learn (or load) → sample → instantiate → render, then write
/// `manifest.json` under `out`.
pub fn run_pipeline(cfg: &PipelineConfig, out: &Path, seed: u64) -> CliResult<Manifest> {
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let catalog_path = existing(cfg.catalog.clone(), "catalog")?;
    stage("setup", mkdir(out))?;
    let mut written: Vec<(PathBuf, String)> = Vec::new();

    let grammar = match &cfg.grammar {
        Some(g) => stage("learn", Saog::load(existing(Some(g.clone()), "grammar")?))?,
        None => {
            let skeleton = existing(cfg.skeleton.clone(), "skeleton")?;
            let scenes = existing(cfg.scenes.clone(), "scenes")?;
            let learned = stage("learn", learn_from_files(&skeleton, &scenes, cfg, seed))?;
            let trace = out.join("learn_trace.json");
            stage("learn", write_json(&trace, &learned.cd.trace))?;
            written.push((trace, "learn_trace".into()));
            learned.grammar
        }
    };
    let bundle = out.join("grammar.json");
    stage("learn", grammar.to_json().and_then(|t| write_text(&bundle, &t)))?;
    written.push((bundle, "grammar".into()));

    let samples = stage("sample", sample_chains(&grammar, &cfg.sampling, cfg.n, seed))?;
    let catalog = stage("instantiate", ModelCatalog::load(&catalog_path))?;
    for (i, (pg, trace)) in samples.iter().enumerate() {
        let name = scene_name(i);
        let p = out.join("scenes").join(format!("{name}.json"));
        stage("sample", pg.to_json().and_then(|t| write_text(&p, &t)))?;
        written.push((p, "parse_graph".into()));
        if !trace.converged {
            log::warn!("{name}: chain stopped at the iteration cap before converging");
        }
    }
    let layouts: Vec<SceneLayout> = stage(
        "instantiate",
        samples
            .par_iter()
            .enumerate()
            .map(|(i, (pg, _))| instantiate_scene(pg, &catalog, &cfg.attributes, &mut instance_rng(seed, i as u64)))
            .collect(),
    )?;
    for (i, layout) in layouts.iter().enumerate() {
        let name = scene_name(i);
        let p = out.join("layouts").join(format!("{name}.layout.json"));
        stage("instantiate", layout.to_json().and_then(|t| write_text(&p, &t)))?;
        written.push((p, "layout".into()));
        if cfg.obj {
            let p = out.join("layouts").join(format!("{name}.obj"));
            stage("instantiate", write_text(&p, &layout_to_obj(layout)))?;
            written.push((p, "obj".into()));
        }
    }
    let frames = out.join("frames");
    for (i, layout) in layouts.iter().enumerate() {
        let name = scene_name(i);
        let files = stage("render", render_layout(layout, &cfg.cameras, &cfg.channels, &frames, &name))?;
        let ncam = if cfg.cameras.is_empty() { layout.attributes.cameras.len() } else { cfg.cameras.len() };
        for k in 0..ncam {
            written.push((frames.join(format!("{name}_cam{k}.json")), "frame_meta".into()));
        }
        written.extend(files.into_iter().map(|(c, p)| (p, c.name().to_string())));
    }

    let mut artifacts: Vec<Artifact> = stage(
        "manifest",
        written.iter().map(|(p, kind)| artifact(out, p, kind)).collect(),
    )?;
    artifacts.sort_by(|a, b| a.path.cmp(&b.path));
    let manifest = Manifest {
        version: 1,
        seed,
        scenes: cfg.n,
        artifacts,
    };
    stage("manifest", write_json(&out.join("manifest.json"), &manifest))?;
    Ok(manifest)
}

/// Learned bundles (carrying relation statistics) must build completely;
/// skeletons only structurally.
fn validate_grammar(text: &str) -> crate::Result<()> {
    let doc = GrammarDoc::from_json(text)?;
    if doc.relation_stats.is_some() {
        Saog::build(&doc)?;
    } else {
        Saog::build_skeleton(&doc)?;
    }
    Ok(())
}

fn detect_kind(v: &serde_json::Value) -> Option<FileKind> {
    if v.is_array() {
        return Some(FileKind::Scenes);
    }
    let o = v.as_object()?;
    if o.contains_key("placed") && o.contains_key("version") {
        Some(FileKind::Layout)
    } else if o.contains_key("entries") {
        Some(FileKind::Catalog)
    } else if o.contains_key("root") && o.contains_key("nodes") {
        Some(FileKind::Grammar)
    } else if o.contains_key("tree") && o.contains_key("objects") {
        Some(FileKind::ParseGraph)
    } else {
        None
    }
}

/// Schema and invariant checks of one file. `Ok` holds the detected kind;
/// every problem found is listed in the `Err`.
pub fn validate_file(path: &Path, kind: Option<FileKind>) -> std::result::Result<FileKind, Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| vec![format!("{}: {e}", path.display())])?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| vec![format!("parse error: {e}")])?;
    let kind = kind
        .or_else(|| detect_kind(&value))
        .ok_or_else(|| vec!["cannot tell the file kind; pass --kind".to_string()])?;
    let one = |r: crate::Result<()>| r.map_err(|e| vec![e.to_string()]);
    match kind {
        FileKind::Grammar => one(validate_grammar(&text))?,
        FileKind::Scenes => one(scenes_from_json(&text).map(|_| ()))?,
        FileKind::ParseGraph => one(ParseGraph::from_json(&text).map(|_| ()))?,
        FileKind::Catalog => one(ModelCatalog::from_json(&text).map(|_| ()))?,
        FileKind::Layout => {
            let layout = SceneLayout::from_json(&text).map_err(|e| vec![e.to_string()])?;
            let v = validate_layout(&layout);
            if !v.is_empty() {
                return Err(v.iter().map(ToString::to_string).collect());
            }
        }
    }
    Ok(kind)
}

fn cmd_learn(a: LearnArgs, cfg: &mut PipelineConfig, seed: u64) -> CliResult<()> {
    let skeleton = existing(a.skeleton.or(cfg.skeleton.clone()), "skeleton")?;
    let scenes = existing(a.scenes.or(cfg.scenes.clone()), "scenes")?;
    let out = output(a.out.or(cfg.out.as_ref().map(|d| d.join("grammar.json"))), "output path")?;
    if let Some(it) = a.iterations {
        cfg.learning.iterations = it;
    }
    cfg.learning.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let learned = learn_from_files(&skeleton, &scenes, cfg, seed)?;
    for (t, m) in learned.cd.trace.iter().enumerate() {
        println!("{t}\t{m}");
    }
    write_text(&out, &learned.grammar.to_json()?)?;
    log::info!("wrote {}", out.display());
    Ok(())
}

fn cmd_sample(a: SampleArgs, cfg: &mut PipelineConfig, seed: u64) -> CliResult<()> {
    let gpath = existing(a.grammar.or(cfg.grammar.clone()), "grammar")?;
    let out = output(a.out.or(cfg.out.as_ref().map(|d| d.join("scenes"))), "output directory")?;
    let s = &mut cfg.sampling;
    if let Some(b) = a.beta {
        s.beta = b;
    }
    if let Some(i) = a.iters {
        s.iter_max = i;
    }
    if a.staged {
        s.staged = true;
    }
    if a.no_staged {
        s.staged = false;
    }
    let n = a.chains.unwrap_or(cfg.n);
    if n == 0 {
        return Err(Failure::Usage("--chains must be >= 1".into()));
    }
    cfg.sampling.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let grammar = Saog::load(&gpath).map_err(|e| Failure::Runtime(format!("invalid grammar bundle: {e}")))?;
    let samples = sample_chains(&grammar, &cfg.sampling, n, seed)?;
    for (i, (pg, trace)) in samples.iter().enumerate() {
        let name = scene_name(i);
        write_text(&out.join(format!("{name}.json")), &pg.to_json()?)?;
        if let Some(dir) = &a.trace {
            write_text(&dir.join(format!("{name}.jsonl")), &trace.to_json_lines()?)?;
        }
        println!(
            "{name}\tenergy {}\tsteps {}\tconverged {}",
            pg.energy_cache.unwrap_or(f64::NAN),
            trace.steps(),
            trace.converged
        );
    }
    Ok(())
}

fn cmd_instantiate(a: InstantiateArgs, cfg: &PipelineConfig, seed: u64) -> CliResult<()> {
    let catalog = ModelCatalog::load(existing(a.catalog.or(cfg.catalog.clone()), "catalog")?)?;
    let ranges = match a.attributes {
        Some(p) => {
            let p = existing(Some(p), "attribute ranges")?;
            let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
            serde_json::from_str::<AttributeRanges>(&text).map_err(|source| Error::Json { path: p, source })?
        }
        None => cfg.attributes.clone(),
    };
    let out = output(a.out.or(cfg.out.as_ref().map(|d| d.join("layouts"))), "output directory")?;
    for (i, input) in a.inputs.iter().enumerate() {
        let input = existing(Some(input.clone()), "parse graph")?;
        let text = std::fs::read_to_string(&input).map_err(|e| Error::io(&input, e))?;
        let pg = ParseGraph::from_json(&text)?;
        let layout = instantiate_scene(&pg, &catalog, &ranges, &mut instance_rng(seed, i as u64))?;
        let name = stem(&input);
        write_text(&out.join(format!("{name}.layout.json")), &layout.to_json()?)?;
        if a.obj || cfg.obj {
            write_text(&out.join(format!("{name}.obj")), &layout_to_obj(&layout))?;
        }
    }
    Ok(())
}

fn cmd_render(a: RenderArgs, cfg: &PipelineConfig) -> CliResult<()> {
    let cameras = match a.camera {
        Some(p) => load_cameras(&existing(Some(p), "camera spec")?)?,
        None => cfg.cameras.clone(),
    };
    let channels = a.channels.unwrap_or_else(|| cfg.channels.clone());
    let out = output(a.out.or(cfg.out.as_ref().map(|d| d.join("frames"))), "output directory")?;
    for input in &a.inputs {
        let layout = SceneLayout::load(existing(Some(input.clone()), "layout")?)?;
        for (_, p) in render_layout(&layout, &cameras, &channels, &out, &stem(input))? {
            log::info!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn cmd_validate(a: ValidateArgs) -> CliResult<()> {
    match validate_file(&a.file, a.kind) {
        Ok(kind) => {
            println!("ok: {} ({kind})", a.file.display());
            Ok(())
        }
        Err(problems) => Err(Failure::Validation(format!("{}:\n  {}", a.file.display(), problems.join("\n  ")))),
    }
}

fn cmd_stats(a: StatsArgs, cfg: &PipelineConfig) -> CliResult<()> {
    let skeleton = GrammarDoc::load(existing(a.skeleton.or(cfg.skeleton.clone()), "skeleton")?)?;
    let scenes = load_scenes(existing(a.scenes.or(cfg.scenes.clone()), "scenes")?)?;
    let skel = Saog::build_skeleton(&skeleton)?;
    let stats = collect_statistics(&scenes, &skel);
    for (cat, n) in &stats.skipped {
        log::warn!("{n} object(s) of unknown category `{cat}` skipped");
    }
    let report = StatsReport {
        relation_stats: relation_stats(&stats, skel.relation_stats.d_acc),
        stats,
    };
    match a.out {
        Some(p) => write_json(&p, &report)?,
        None => println!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?),
    }
    Ok(())
}

/// Runs a parsed command line.
pub fn execute(cli: Cli) -> CliResult<()> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(Failure::Usage("--jobs must be >= 1".into()));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(&existing(Some(p.clone()), "config")?).map_err(|e| Failure::Usage(e.to_string()))?,
        None => PipelineConfig::default(),
    };
    match cli.command {
        Command::Learn(a) => cmd_learn(a, &mut cfg, cli.seed),
        Command::Sample(a) => cmd_sample(a, &mut cfg, cli.seed),
        Command::Instantiate(a) => cmd_instantiate(a, &cfg, cli.seed),
        Command::Render(a) => cmd_render(a, &cfg),
        Command::Pipeline(a) => {
            if cli.config.is_none() {
                return Err(Failure::Usage("pipeline needs --config".into()));
            }
            if let Some(n) = a.n {
                cfg.n = n;
            }
            let out = output(a.out.or(cfg.out.clone()), "output directory")?;
            let m = run_pipeline(&cfg, &out, cli.seed)?;
            println!("{} artifacts, manifest at {}", m.artifacts.len(), out.join("manifest.json").display());
            Ok(())
        }
        Command::Validate(a) => cmd_validate(a),
        Command::Stats(a) => cmd_stats(a, &cfg),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("SAGO_LOG", "warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {f}");
            f.code()
        }
    }
}

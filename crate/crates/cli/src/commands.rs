use std::path::{Path, PathBuf};

use dvlae_core::descriptors::SymmetryFunctionSet;
use dvlae_core::embedding::{
    pairwise_distances, pca_project, read_embedding_csv, tsne_embed, write_embedding_csv, Embedding, Metric, Points,
    TsneConfig,
};
use dvlae_core::fingerprint::{
    batch_fingerprints, compute_dataset_descriptors, fingerprint_with_spec, pad_descriptors, parse_fingerprints,
    parse_spec_file, select_reference, write_fingerprints, write_spec_file, FingerprintFile, HistogramSpec,
};
use dvlae_core::screening::{dedup_exact, dedup_hamming, novelty_screen, rank_ood, FingerprintStore, NoveltyConfig};
use dvlae_core::structures::{load_manifest, parse_extxyz, Dataset, Structure};
use dvlae_core::vectors::{read_vectors, write_vectors, VectorRecord};
use dvlae_core::BitString;

use crate::config::{Method, ReferenceSelector, RunConfig, ScreeningMode};
use crate::error::{CliError, CliResult, PathContext};
use crate::output::Outputs;
use crate::plot::{render_svg, PlotSize};
use crate::{Common, EmbedArgs, FingerprintArgs, OodArgs, PlotArgs, ScreenArgs};

pub const FINGERPRINTS_FILE: &str = "fingerprints.dvfp";
pub const SPEC_FILE: &str = "spec.dvspec";
pub const MEAN_VECTORS_FILE: &str = "mean_descriptors.csv";
pub const BASELINE_FILE: &str = "baseline.csv";
pub const SCREENING_REPORT_FILE: &str = "screening_report.json";
pub const KEPT_IDS_FILE: &str = "kept_ids.txt";
pub const NOVELTY_REPORT_FILE: &str = "novelty_report.json";
pub const ACCEPTED_IDS_FILE: &str = "accepted_ids.txt";
pub const EMBEDDING_FILE: &str = "embedding.csv";
pub const BASELINE_EMBEDDING_FILE: &str = "embedding_baseline.csv";
pub const OOD_SCORES_FILE: &str = "ood_scores.csv";
pub const HIGHLIGHT_FILE: &str = "highlight.txt";
pub const PLOT_FILE: &str = "plot.svg";

struct Context {
    cfg: RunConfig,
    out: PathBuf,
    seed: u64,
}

impl Context {
    fn load(c: &Common) -> CliResult<Self> {
        let cfg = RunConfig::load(&c.config)?;
        let out = c.out.clone().unwrap_or_else(|| cfg.out_dir());
        let seed = c.seed.unwrap_or(cfg.output.seed);
        Ok(Self { cfg, out, seed })
    }

    fn out_file(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).with_path(path)
}

/// Ids one per line; surrounding whitespace and blank lines ignored.
pub fn read_id_list(path: &Path) -> CliResult<Vec<String>> {
    Ok(read_text(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect())
}

fn id_list_text<S: AsRef<str>>(ids: &[S]) -> String {
    ids.iter().map(|s| format!("{}\n", s.as_ref())).collect()
}

fn read_fingerprint_file(path: &Path) -> CliResult<FingerprintFile> {
    parse_fingerprints(&read_text(path)?).with_path(path)
}

fn spec_elements(spec: &HistogramSpec) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for c in spec.columns() {
        if out.last() != Some(&c.element) {
            out.push(c.element.clone());
        }
    }
    out
}

/// A spec must have been produced with this config's bins, comparison and
/// descriptor grid. Returns the matching descriptor set.
fn check_spec(cfg: &RunConfig, spec: &HistogramSpec, what: &Path) -> CliResult<SymmetryFunctionSet> {
    let mismatch = |m: String| CliError::user(format!("{}: spec mismatch with config: {m}", what.display()));
    if spec.bins() != cfg.fingerprint.bins {
        return Err(mismatch(format!("file uses {} bins, config has {}", spec.bins(), cfg.fingerprint.bins)));
    }
    let comparison = cfg.comparison()?;
    if spec.comparison() != comparison {
        return Err(mismatch(format!("file uses {} comparison, config has {comparison}", spec.comparison())));
    }
    let elements = spec_elements(spec);
    if let Some(cfg_elements) = &cfg.data.elements {
        if *cfg_elements != elements {
            return Err(mismatch(format!("file elements {elements:?}, config elements {cfg_elements:?}")));
        }
    }
    let sfset = cfg.symmetry_functions(&elements)?;
    spec.check_descriptor_set(&sfset).map_err(|e| mismatch(e.to_string()))?;
    Ok(sfset)
}

fn load_datasets(manifests: &[PathBuf]) -> CliResult<Dataset> {
    if manifests.is_empty() {
        return Err(CliError::user("no dataset manifests: set data.manifests or pass --manifest"));
    }
    let parts = manifests
        .iter()
        .map(|m| load_manifest(m).with_path(m))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(Dataset::concat(parts)?)
}

fn dataset_elements(cfg: &RunConfig, ds: &Dataset) -> CliResult<Vec<String>> {
    match &cfg.data.elements {
        None => Ok(ds.elements().to_vec()),
        Some(list) => {
            if let Some(e) = ds.elements().iter().find(|e| !list.contains(e)) {
                return Err(CliError::user(format!("dataset contains element {e}, which data.elements does not list")));
            }
            Ok(list.clone())
        }
    }
}

fn resolve_reference(cfg: &RunConfig, ds: &Dataset, elements: &[String]) -> CliResult<Structure> {
    match cfg.reference()? {
        ReferenceSelector::Auto => select_reference(ds, elements).cloned().ok_or_else(|| {
            CliError::user(format!(
                "no structure contains every element of {elements:?}; set fingerprint.reference"
            ))
        }),
        ReferenceSelector::Id(id) => ds
            .get(&id)
            .cloned()
            .ok_or_else(|| CliError::user(format!("reference structure {id:?} is not in the dataset"))),
        ReferenceSelector::Path(p) => {
            let parsed = parse_extxyz(&read_text(&p)?, &p.display().to_string()).with_path(&p)?;
            parsed
                .into_structures()
                .into_iter()
                .next()
                .ok_or_else(|| CliError::user(format!("{}: no structures", p.display())))
        }
    }
}

pub fn fingerprint(a: &FingerprintArgs) -> CliResult<Vec<String>> {
    let ctx = Context::load(&a.common)?;
    let manifests = if a.manifests.is_empty() { ctx.cfg.manifests() } else { a.manifests.clone() };
    let mut ds = load_datasets(&manifests)?;
    if let Some(keep) = &a.keep {
        ds = ds.retain_ids(&read_id_list(keep)?).with_path(keep)?;
    }
    if ds.is_empty() {
        return Err(CliError::user("dataset is empty"));
    }

    let mut outputs = Outputs::new();
    let (file, sfset) = match &a.spec {
        Some(spec_path) => {
            let spec_file = parse_spec_file(&read_text(spec_path)?).with_path(spec_path)?;
            let sfset = check_spec(&ctx.cfg, &spec_file.spec, spec_path)?;
            let records = fingerprint_with_spec(&ds, &spec_file, &sfset)?;
            let file = FingerprintFile {
                reference_id: spec_file.reference.structure_id().to_owned(),
                spec: spec_file.spec,
                records,
            };
            (file, sfset)
        }
        None => {
            let elements = dataset_elements(&ctx.cfg, &ds)?;
            let sfset = ctx.cfg.symmetry_functions(&elements)?;
            let reference = resolve_reference(&ctx.cfg, &ds, &elements)?;
            let set = batch_fingerprints(&ds, &reference, &sfset, ctx.cfg.fingerprint.bins, ctx.cfg.comparison()?)?;
            outputs.stage(&ctx.out_file(SPEC_FILE), write_spec_file(&set.spec_file())?.as_bytes())?;
            (set.to_file(), sfset)
        }
    };
    let fp_path = ctx.out_file(FINGERPRINTS_FILE);
    outputs.stage(&fp_path, write_fingerprints(&file)?.as_bytes())?;

    if a.vectors {
        let matrices = compute_dataset_descriptors(&ds, &sfset)?;
        let means: Vec<VectorRecord> = matrices
            .iter()
            .map(|m| VectorRecord {
                id: m.structure_id().to_owned(),
                tag: m.tag().map(str::to_owned),
                values: m.mean_vector(),
            })
            .collect();
        let padded: Vec<VectorRecord> = pad_descriptors(&matrices)
            .into_iter()
            .map(|p| VectorRecord { id: p.structure_id, tag: p.tag, values: p.values })
            .collect();
        for (name, records) in [(MEAN_VECTORS_FILE, &means), (BASELINE_FILE, &padded)] {
            let mut buf = Vec::new();
            write_vectors(&mut buf, records)?;
            outputs.stage(&ctx.out_file(name), &buf)?;
        }
    }

    outputs.commit()?;
    Ok(vec![format!(
        "fingerprinted {} structures, {} bits each -> {}",
        file.records.len(),
        file.spec.bit_len(),
        fp_path.display()
    )])
}

fn filter_records(file: &mut FingerprintFile, keep: &Path) -> CliResult<()> {
    let ids = read_id_list(keep)?;
    let known: std::collections::HashSet<&str> = file.records.iter().map(|r| r.structure_id()).collect();
    if let Some(missing) = ids.iter().find(|i| !known.contains(i.as_str())) {
        return Err(CliError::user(format!("{}: id {missing:?} is not in the fingerprint file", keep.display())));
    }
    let ids: std::collections::HashSet<String> = ids.into_iter().collect();
    file.records.retain(|r| ids.contains(r.structure_id()));
    Ok(())
}

pub fn screen(a: &ScreenArgs) -> CliResult<Vec<String>> {
    let ctx = Context::load(&a.common)?;
    let mode = match a.mode.as_deref() {
        None => ctx.cfg.screening.mode,
        Some("exact") => ScreeningMode::Exact,
        Some("hamming") => ScreeningMode::Hamming,
        Some(_) => ScreeningMode::Novelty,
    };
    let mut outputs = Outputs::new();

    if mode == ScreeningMode::Novelty {
        let need = |p: &Option<PathBuf>, flag: &str| {
            p.clone()
                .ok_or_else(|| CliError::user(format!("novelty screening needs --{flag} <vector CSV>")))
        };
        let (cand_path, train_path) = (need(&a.candidates, "candidates")?, need(&a.training, "training")?);
        let load = |p: &Path| -> CliResult<Vec<VectorRecord>> {
            let f = std::fs::File::open(p).with_path(p)?;
            read_vectors(f).with_path(p)
        };
        let (candidates, training) = (load(&cand_path)?, load(&train_path)?);
        let aggregate = match &a.aggregate {
            Some(s) => s.parse()?,
            None => ctx.cfg.aggregate()?,
        };
        let cfg = NoveltyConfig::new(a.threshold.unwrap_or(ctx.cfg.screening.threshold), aggregate)?;
        let report = novelty_screen(&candidates, &training, &cfg)?;
        let accepted = report.accepted();
        let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::internal(e.to_string()))? + "\n";
        outputs.stage(&ctx.out_file(NOVELTY_REPORT_FILE), json.as_bytes())?;
        outputs.stage(&ctx.out_file(ACCEPTED_IDS_FILE), id_list_text(&accepted).as_bytes())?;
        outputs.commit()?;
        return Ok(vec![format!(
            "novelty screening accepted {} of {} candidates (threshold {}, {})",
            accepted.len(),
            candidates.len(),
            cfg.threshold(),
            cfg.aggregate
        )]);
    }

    let input = a.input.clone().unwrap_or_else(|| ctx.out_file(FINGERPRINTS_FILE));
    let mut file = read_fingerprint_file(&input)?;
    check_spec(&ctx.cfg, &file.spec, &input)?;
    if let Some(keep) = &a.keep {
        filter_records(&mut file, keep)?;
    }
    let report = match mode {
        ScreeningMode::Hamming => dedup_hamming(&file.records, a.radius.unwrap_or(ctx.cfg.screening.radius))?,
        _ => dedup_exact(&file.records)?,
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::internal(e.to_string()))? + "\n";
    outputs.stage(&ctx.out_file(SCREENING_REPORT_FILE), json.as_bytes())?;
    outputs.stage(&ctx.out_file(KEPT_IDS_FILE), id_list_text(&report.kept).as_bytes())?;
    outputs.commit()?;
    Ok(vec![format!(
        "screened {} structures ({}): kept {}, removed {}, reduction ratio {}",
        report.input_count,
        report.mode,
        report.output_count,
        report.removed.len(),
        report.reduction_ratio
    )])
}

enum EmbedInput {
    Bits(Vec<BitString>),
    Real(Vec<Vec<f64>>),
}

type Labels = Vec<(String, Option<String>)>;

fn read_embed_input(path: &Path) -> CliResult<(Labels, EmbedInput)> {
    let text = read_text(path)?;
    if text.starts_with("dvlae-fingerprints") {
        let file = parse_fingerprints(&text).with_path(path)?;
        let labels = file
            .records
            .iter()
            .map(|r| (r.structure_id().to_owned(), r.tag().map(str::to_owned)))
            .collect();
        let bits = file.records.into_iter().map(|r| r.bits().clone()).collect();
        Ok((labels, EmbedInput::Bits(bits)))
    } else {
        let records = read_vectors(text.as_bytes()).with_path(path)?;
        let labels = records.iter().map(|r| (r.id.clone(), r.tag.clone())).collect();
        Ok((labels, EmbedInput::Real(records.into_iter().map(|r| r.values).collect())))
    }
}

/// Coordinates, plus the initial and final KL divergence for t-SNE.
type Embedded = (Vec<[f64; 2]>, Option<(f64, f64)>);

fn embed_points(input: &EmbedInput, method: Method, tsne: &TsneConfig) -> CliResult<Embedded> {
    let n = match input {
        EmbedInput::Bits(b) => b.len(),
        EmbedInput::Real(v) => v.len(),
    };
    match method {
        Method::Pca => {
            if n < 2 {
                return Err(CliError::user(format!("PCA needs at least 2 points, got {n}")));
            }
            let real: Vec<Vec<f64>> = match input {
                EmbedInput::Real(v) => v.clone(),
                EmbedInput::Bits(b) => b
                    .iter()
                    .map(|bits| bits.iter().map(|x| if x { 1.0 } else { 0.0 }).collect())
                    .collect(),
            };
            let p = pca_project(&real, 2)?;
            Ok((p.coords.iter().map(|c| [c[0], c[1]]).collect(), None))
        }
        Method::Tsne => {
            if n < 4 {
                return Err(CliError::user(format!("t-SNE needs at least 4 points, got {n}")));
            }
            tsne.validate(n)?;
            let d = match input {
                EmbedInput::Bits(b) => pairwise_distances(Points::Bits(b), Metric::Hamming)?,
                EmbedInput::Real(v) => pairwise_distances(Points::Real(v), Metric::Euclidean)?,
            };
            let r = tsne_embed(&d, tsne)?;
            Ok((r.coords, Some((r.initial_kl, r.final_kl))))
        }
    }
}

fn embedding_csv(labels: &Labels, coords: &[[f64; 2]]) -> CliResult<Vec<u8>> {
    let e = Embedding::from_coords(labels, coords)?;
    let mut buf = Vec::new();
    write_embedding_csv(&mut buf, &e)?;
    Ok(buf)
}

pub fn embed(a: &EmbedArgs) -> CliResult<Vec<String>> {
    let ctx = Context::load(&a.common)?;
    let ec = &ctx.cfg.embedding;
    let method = a.method.unwrap_or(ec.method);
    let tsne = TsneConfig {
        perplexity: a.perplexity.unwrap_or(ec.perplexity),
        iterations: a.iterations.unwrap_or(ec.iterations),
        learning_rate: ec.learning_rate,
        seed: ctx.seed,
        ..TsneConfig::default()
    };

    let input = a.input.clone().unwrap_or_else(|| ctx.out_file(FINGERPRINTS_FILE));
    let (labels, points) = read_embed_input(&input)?;
    let mut outputs = Outputs::new();
    let mut lines = Vec::new();

    let (coords, kl) = embed_points(&points, method, &tsne)?;
    let out_path = ctx.out_file(EMBEDDING_FILE);
    outputs.stage(&out_path, &embedding_csv(&labels, &coords)?)?;
    lines.push(format!("embedded {} points ({method:?}) -> {}", labels.len(), out_path.display()));
    if let Some((k0, k1)) = kl {
        lines.push(format!("KL divergence {k0} -> {k1}"));
    }

    if a.compare_baseline || ec.compare_baseline {
        let path = a.baseline.clone().unwrap_or_else(|| ctx.out_file(BASELINE_FILE));
        let records = read_vectors(std::fs::File::open(&path).with_path(&path)?).with_path(&path)?;
        let labels: Labels = records.iter().map(|r| (r.id.clone(), r.tag.clone())).collect();
        let real = EmbedInput::Real(records.into_iter().map(|r| r.values).collect());
        let (coords, _) = embed_points(&real, method, &tsne).map_err(|e| e.context("baseline"))?;
        let path = ctx.out_file(BASELINE_EMBEDDING_FILE);
        outputs.stage(&path, &embedding_csv(&labels, &coords)?)?;
        lines.push(format!("embedded {} baseline vectors -> {}", labels.len(), path.display()));
    }
    outputs.commit()?;
    Ok(lines)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

pub fn ood(a: &OodArgs) -> CliResult<Vec<String>> {
    let ctx = Context::load(&a.common)?;
    let training = read_fingerprint_file(&a.training)?;
    let predictions = read_fingerprint_file(&a.predictions)?;
    if training.spec.checksum() != predictions.spec.checksum() {
        return Err(CliError::user(format!(
            "checksum mismatch: {} has spec {}, {} has spec {}; fingerprint predictions with --spec from the training run",
            a.training.display(),
            training.spec.checksum(),
            a.predictions.display(),
            predictions.spec.checksum()
        )));
    }
    if training.records.is_empty() {
        return Err(CliError::user(format!("{} holds no fingerprints", a.training.display())));
    }
    let store = FingerprintStore::new(&training.records)?;
    let scores = rank_ood(&predictions.records, &store)?;
    let top_n = a.top_n.unwrap_or(ctx.cfg.ood.top_n);

    let mut csv = String::from("id,min_hamming,normalized\n");
    for s in &scores {
        csv.push_str(&format!("{},{},{}\n", csv_field(&s.id), s.min_hamming, s.normalized));
    }
    let top: Vec<&str> = scores.iter().take(top_n).map(|s| s.id.as_str()).collect();
    let mut outputs = Outputs::new();
    let path = ctx.out_file(OOD_SCORES_FILE);
    outputs.stage(&path, csv.as_bytes())?;
    outputs.stage(&ctx.out_file(HIGHLIGHT_FILE), id_list_text(&top).as_bytes())?;
    outputs.commit()?;
    let first = scores
        .first()
        .map(|s| format!(", top: {} ({} bits)", s.id, s.min_hamming))
        .unwrap_or_default();
    Ok(vec![format!("scored {} predictions{first} -> {}", scores.len(), path.display())])
}

pub fn plot(a: &PlotArgs) -> CliResult<Vec<String>> {
    let ctx = Context::load(&a.common)?;
    let path = a.embedding.clone().unwrap_or_else(|| ctx.out_file(EMBEDDING_FILE));
    let embedding = read_embedding_csv(std::fs::File::open(&path).with_path(&path)?).with_path(&path)?;
    let highlight = match &a.highlight {
        Some(h) => read_id_list(h)?,
        None => Vec::new(),
    };
    let size = PlotSize {
        width: ctx.cfg.plot.width,
        height: ctx.cfg.plot.height,
    };
    let svg = render_svg(&embedding, &highlight, size)?;
    let out = a.output.clone().unwrap_or_else(|| ctx.out_file(PLOT_FILE));
    let mut outputs = Outputs::new();
    outputs.stage(&out, svg.as_bytes())?;
    outputs.commit()?;
    Ok(vec![format!(
        "plotted {} points, {} highlighted -> {}",
        embedding.len(),
        highlight.len(),
        out.display()
    )])
}

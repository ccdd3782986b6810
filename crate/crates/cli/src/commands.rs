use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use resrec::adapter::{assemble_batches, train_adapter, AdapterParams, TrainPair};
use resrec::config::RunConfig;
use resrec::corpus::{export_corpus, ingest_corpus_with, CorpusStore, EntityKind, IngestOptions};
use resrec::eval::synthetic::{generate, SyntheticParams};
use resrec::eval::{ablation_run, evaluate, random_split, read_split, report_rows, report_text, write_split, Resources};
use resrec::graph::{analyze_chain_pools, enumerate_chains, export_chains, ChainDirection, InteractionGraph};
use resrec::perception::{
    build_perceptions, build_representations, read_perception_cache, write_perception_cache, CollectivePerception,
    RepresentationToggles, TargetRepresentation,
};
use resrec::pipeline::{build_dense_index, AblationToggles, KindIndex, Pipeline, PipelineConfig, Retriever};
use resrec::providers::ProviderClient;
use resrec::rerank::{emit_sft_triplets, ChainAnchor, SftOptions};
use resrec::retrieval::{embed_texts, format_query, Bm25Index, Bm25Params, DenseIndex, EmbeddingVector, Query};
use resrec::{Error, Result};
use serde_json::{json, Value};

use crate::{Cli, Command, Format, PipelineFlags};

const MANIFEST: &str = "index.json";

fn write_file(path: &Path, contents: &str, what: &'static str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io("creating directory", dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(what, path, e))
}

fn load_store(cfg: &RunConfig) -> Result<CorpusStore> {
    let path = cfg.paths.store();
    if !path.exists() {
        return Err(Error::io(
            "reading store (run `resrec ingest` first)",
            &path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        ));
    }
    ingest_corpus_with(&path, &IngestOptions::default())
}

fn load_perceptions(cfg: &RunConfig) -> Result<BTreeMap<String, CollectivePerception>> {
    let path = cfg.paths.perception_cache();
    if path.exists() {
        read_perception_cache(&path)
    } else {
        log::warn!("no perception cache at {}, perception segments will be empty", path.display());
        Ok(BTreeMap::new())
    }
}

fn load_adapter(cfg: &RunConfig) -> Result<AdapterParams<f64>> {
    AdapterParams::load(&cfg.paths.adapter())
}

impl PipelineFlags {
    fn apply(&self, p: &mut PipelineConfig) {
        if let Some(r) = self.retriever {
            p.retriever = r.into();
        }
        if let Some(s) = self.shortlist {
            p.shortlist = s;
        }
        if let Some(t) = self.temperature {
            p.temperature = t;
        }
        if let Some(a) = self.alpha {
            p.alpha = a;
        }
        if self.rerank {
            p.toggles.rerank = true;
        }
        if self.no_rerank {
            p.toggles.rerank = false;
        }
        p.llm_rerank |= self.llm_rerank;
        p.toggles.chains &= !self.no_chains;
        p.toggles.perception &= !self.no_perception;
        p.toggles.description &= !self.no_description;
        p.use_adapter |= self.adapter;
    }
}

// A closed pipe (`| head`) is not an error worth reporting.
fn emit(format: Format, text: &str, value: &Value) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = match format {
        Format::Text => out.write_all(text.as_bytes()),
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(value).expect("json")),
    };
}

pub fn run(cli: &Cli, mut cfg: RunConfig) -> Result<()> {
    let client = ProviderClient::from_config(&cfg.provider)?;
    match &cli.command {
        Command::Ingest { corpus, no_merge } => {
            let corpus = corpus
                .clone()
                .or_else(|| cfg.paths.corpus.clone())
                .ok_or_else(|| Error::InvalidArgument("no corpus given (--corpus or paths.corpus)".into()))?;
            let store = ingest_corpus_with(&corpus, &IngestOptions { merge_aliases: !no_merge, ..Default::default() })?;
            write_file(&cfg.paths.store(), &export_corpus(&store), "writing store")?;
            let count = |k| store.entities_of(k).count();
            let summary = json!({
                "papers": store.papers.len(),
                "baselines": count(EntityKind::Baseline),
                "datasets": count(EntityKind::Dataset),
                "mentions": store.mentions.len(),
                "store": cfg.paths.store(),
            });
            let text = format!(
                "ingested {} papers, {} baselines, {} datasets, {} mentions -> {}\n",
                store.papers.len(),
                count(EntityKind::Baseline),
                count(EntityKind::Dataset),
                store.mentions.len(),
                cfg.paths.store().display()
            );
            emit(cli.format, &text, &summary);
        }
        Command::BuildPerception { radius, exclude, no_summarizer } => {
            let store = load_store(&cfg)?;
            let mut params = cfg.pipeline.perception.clone();
            if let Some(r) = radius {
                params.radius = *r;
            }
            let excluded: BTreeSet<String> = match exclude {
                Some(p) => read_split(p)?.into_iter().collect(),
                None => BTreeSet::new(),
            };
            let summarizer = (cfg.pipeline.use_summarizer && !no_summarizer).then_some(&client);
            let perceptions = build_perceptions(&store, None, &params, summarizer, &excluded)?;
            let path = cfg.paths.perception_cache();
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir).map_err(|e| Error::io("creating directory", dir, e))?;
            }
            write_perception_cache(&path, &perceptions)?;
            let with_evidence = perceptions.values().filter(|p| p.evidence_count > 0).count();
            emit(
                cli.format,
                &format!("{} perceptions ({with_evidence} with evidence) -> {}\n", perceptions.len(), path.display()),
                &json!({"perceptions": perceptions.len(), "with_evidence": with_evidence, "cache": path}),
            );
        }
        Command::BuildIndex { kind, no_perception, no_description, adapter } => {
            let store = load_store(&cfg)?;
            let perceptions = load_perceptions(&cfg)?;
            let toggles = RepresentationToggles { description: !no_description, perception: !no_perception };
            let params = if *adapter { Some(load_adapter(&cfg)?) } else { None };
            let mut lines = String::new();
            let mut dim = 0;
            for k in kind.kinds() {
                let reps = build_representations(&store, k, &perceptions, toggles)?;
                let index = build_dense_index(&reps, &client, params.as_ref())?;
                dim = index.dim();
                index.save(&cfg.paths.dense_index(k))?;
                let docs: String = reps
                    .iter()
                    .map(|r| serde_json::to_string(&json!({"entity_id": r.entity_id, "text": r.text})).expect("json") + "\n")
                    .collect();
                write_file(&cfg.paths.bm25_docs(k), &docs, "writing bm25 documents")?;
                let _ = writeln!(lines, "{k}: {} candidates -> {}", index.len(), cfg.paths.dense_index(k).display());
            }
            let manifest = json!({
                "description": toggles.description,
                "perception": toggles.perception,
                "adapter": adapter,
                "dim": dim,
                "fingerprint": cfg.fingerprint(),
            });
            write_file(&cfg.paths.work_dir.join(MANIFEST), &manifest.to_string(), "writing index manifest")?;
            emit(cli.format, &lines, &manifest);
        }
        Command::TrainAdapter { split, pairs, epochs, lr, lambda, batch_size } => {
            let hyper = &mut cfg.training;
            if let Some(e) = epochs {
                hyper.epochs = *e;
            }
            if let Some(l) = lr {
                hyper.learning_rate = *l;
            }
            if let Some(l) = lambda {
                hyper.reg_weight = *l;
            }
            if let Some(b) = batch_size {
                hyper.batch_size = *b;
            }
            let hyper = cfg.training.clone();
            if hyper.batch_size == 0 {
                return Err(Error::InvalidArgument("batch size must be >= 1".into()));
            }
            let keyed = match pairs {
                Some(path) => pairs_from_file(path)?,
                None => pairs_from_store(&cfg, split.as_deref())?,
            };
            let texts: Vec<String> = keyed.iter().flat_map(|(_, q, _, t)| [q.clone(), t.clone()]).collect();
            let vectors: Vec<EmbeddingVector<f64>> = embed_texts(&texts, &client)?;
            let train_pairs: Vec<TrainPair<f64>> = keyed
                .iter()
                .zip(vectors.chunks_exact(2))
                .map(|((qk, _, tk, _), v)| TrainPair {
                    query_key: qk.clone(),
                    target_key: tk.clone(),
                    query: v[0].values.clone(),
                    target: v[1].values.clone(),
                })
                .collect();
            let batches = assemble_batches(&train_pairs, hyper.batch_size, hyper.seed, hyper.reg_weight);
            if batches.is_empty() {
                return Err(Error::InvalidArgument("no trainable batches (need at least two distinct pairs)".into()));
            }
            let outcome = train_adapter(&batches, &hyper)?;
            outcome.params.save(&cfg.paths.adapter())?;
            let trace_path = cfg.paths.work_dir.join("adapter-trace.json");
            let trace = json!({
                "pairs": train_pairs.len(),
                "batches": batches.len(),
                "loss_trace": outcome.loss_trace,
                "fingerprint": cfg.fingerprint(),
            });
            write_file(&trace_path, &serde_json::to_string_pretty(&trace).expect("json"), "writing loss trace")?;
            let first = outcome.loss_trace[0];
            let last = *outcome.loss_trace.last().unwrap();
            emit(
                cli.format,
                &format!(
                    "{} pairs in {} batches; loss {first:.6} -> {last:.6} over {} epochs -> {}\n",
                    train_pairs.len(),
                    batches.len(),
                    hyper.epochs,
                    cfg.paths.adapter().display()
                ),
                &trace,
            );
        }
        Command::Query { text, paper, bridges, kind, k, pipeline } => {
            if *k == 0 {
                return Err(Error::InvalidArgument("--k must be >= 1".into()));
            }
            let store = load_store(&cfg)?;
            pipeline.apply(&mut cfg.pipeline);
            let manifest = read_manifest(&cfg)?;
            let adapted = manifest.get("adapter").and_then(Value::as_bool).unwrap_or(false);
            if cfg.pipeline.use_adapter != adapted && cfg.pipeline.retriever == Retriever::Dense {
                return Err(Error::InvalidArgument(format!(
                    "index was built {} the adapter; rebuild it or {} --adapter",
                    if adapted { "with" } else { "without" },
                    if adapted { "pass" } else { "drop" }
                )));
            }
            let params = if adapted { Some(load_adapter(&cfg)?) } else { None };
            let mut indexes = BTreeMap::new();
            for kd in kind.kinds() {
                indexes.insert(kd, load_index(&cfg, kd, cfg.pipeline.retriever)?);
            }
            let pipe = Pipeline::from_indexes(&store, cfg.pipeline.clone(), &client, params.as_ref(), indexes);
            let query = match (text, paper) {
                (Some(t), _) => Query::free_text("query", t.clone(), cfg.pipeline.instruction.clone()),
                (None, Some(p)) => Query::for_paper(store.paper(p)?, cfg.pipeline.instruction.clone()),
                (None, None) => unreachable!("clap enforces one of --text/--paper"),
            };
            for b in bridges {
                store.entity(b)?;
            }
            let mut out_text = String::new();
            let mut out_json = Vec::new();
            for kd in kind.kinds() {
                let anchor = match &query.source_paper_id {
                    Some(p) => ChainAnchor::Paper(p.clone()),
                    None if !bridges.is_empty() => ChainAnchor::Pseudo {
                        id: query.query_id.clone(),
                        bridges: bridges.iter().filter(|b| store.entities[*b].kind == kd.other()).cloned().collect(),
                    },
                    None => ChainAnchor::None,
                };
                let outcome = pipe.run(&query, None, kd, *k, &anchor)?;
                let ranking = outcome.ranking.truncated(*k);
                let mode = outcome.mode.map(|m| serde_json::to_value(m).expect("json"));
                let _ = writeln!(
                    out_text,
                    "{kd}s for {} ({}):",
                    query.query_id,
                    mode.as_ref().and_then(Value::as_str).unwrap_or("stage-1 only")
                );
                let _ = writeln!(out_text, "{:>4}  {:<10} {:<28} {:>10}  {:>7}  evidence", "rank", "id", "name", "score", "support");
                let mut rows = Vec::new();
                for e in &ranking.entries {
                    let evidence = outcome.bundle.as_ref().and_then(|b| b.per_candidate.get(&e.entity_id));
                    let support = evidence.map_or(0, |ev| ev.total_support());
                    let top = evidence.and_then(|ev| ev.chains.first()).map(|c| c.render()).unwrap_or_else(|| "-".into());
                    let name = &store.entities[&e.entity_id].canonical_name;
                    let _ = writeln!(out_text, "{:>4}  {:<10} {:<28} {:>10.4}  {:>7}  {top}", e.rank, e.entity_id, name, e.score, support);
                    rows.push(json!({
                        "rank": e.rank, "id": e.entity_id, "name": name, "score": e.score, "support": support,
                        "chains": evidence.map(|ev| ev.chains.iter().map(|c| c.render()).collect::<Vec<_>>()).unwrap_or_default(),
                    }));
                }
                out_text.push('\n');
                out_json.push(json!({"kind": kd, "mode": mode, "results": rows}));
            }
            emit(cli.format, &out_text, &json!({"query": query, "results": out_json}));
        }
        Command::EmitSft { split, out, max_shortlist } => {
            let store = load_store(&cfg)?;
            let graph = InteractionGraph::build(&store);
            let mut opts =
                SftOptions { seed: cfg.seed, instruction: cfg.pipeline.instruction.clone(), ..SftOptions::default() };
            if let Some(m) = max_shortlist {
                opts.max_shortlist = *m;
            }
            let report = emit_sft_triplets(&store, &graph, &read_split(split)?, out, &opts)?;
            emit(
                cli.format,
                &format!("{} triplets -> {} ({} skipped for empty gold)\n", report.written, out.display(), report.skipped.len()),
                &serde_json::to_value(&report).expect("json"),
            );
        }
        Command::Evaluate { split, ablation, recall_k, hitrate_k, out_dir, pipeline } => {
            let store = load_store(&cfg)?;
            pipeline.apply(&mut cfg.pipeline);
            if let Some(r) = recall_k {
                cfg.eval.recall = r.clone();
            }
            if let Some(h) = hitrate_k {
                cfg.eval.hitrate = h.clone();
            }
            cfg.validate()?;
            let split = read_split(split)?;
            let adapter = if cfg.pipeline.use_adapter { Some(load_adapter(&cfg)?) } else { None };
            let resources = Resources { client: &client, adapter: adapter.as_ref() };
            let fingerprint = cfg.fingerprint();
            let results = if *ablation {
                ablation_run(&store, &cfg.pipeline, resources, &AblationToggles::all_combinations(), &split, &cfg.eval, &fingerprint)?
            } else {
                vec![evaluate(&store, &cfg.pipeline, resources, &split, &cfg.eval, &fingerprint)?]
            };
            let text = report_text(&results);
            let value = json!({"rows": report_rows(&results), "results": results});
            let dir = out_dir.clone().unwrap_or_else(|| cfg.paths.reports.clone());
            write_file(&dir.join("eval.json"), &serde_json::to_string_pretty(&value).expect("json"), "writing report")?;
            write_file(&dir.join("eval.txt"), &text, "writing report")?;
            emit(cli.format, &text, &value);
        }
        Command::AnalyzeChains { split, with_venue, chains_out } => {
            let store = load_store(&cfg)?;
            let graph = InteractionGraph::build(&store);
            let split = read_split(split)?;
            let report = analyze_chain_pools(&graph, &store, &split, *with_venue)?;
            if let Some(path) = chains_out {
                let mut all = Vec::new();
                for p in &split {
                    for d in [ChainDirection::DatasetToBaseline, ChainDirection::BaselineToDataset] {
                        all.extend(enumerate_chains(&graph, p, d, None)?);
                    }
                }
                write_file(path, &export_chains(&all), "writing chains")?;
            }
            emit(cli.format, &report.to_text(), &serde_json::to_value(&report).expect("json"));
        }
        Command::GenSynthetic { out, papers, baselines, datasets, density, topics, topic_affinity, min_uses, test_fraction } => {
            let params = SyntheticParams {
                papers: *papers,
                baselines: *baselines,
                datasets: *datasets,
                density: *density,
                topics: *topics,
                topic_affinity: *topic_affinity,
                min_uses: *min_uses,
                seed: cfg.seed,
            };
            let store = generate(&params)?;
            write_file(out, &export_corpus(&store), "writing corpus")?;
            let mut text = format!("{} papers, {} entities -> {}\n", store.papers.len(), store.entities.len(), out.display());
            if let Some(f) = test_fraction {
                let (train, test) = random_split(&store, *f, cfg.seed);
                let dir = out.parent().map(Path::to_path_buf).unwrap_or_default();
                write_split(&dir.join("train.ids"), &train)?;
                write_split(&dir.join("test.ids"), &test)?;
                let _ = writeln!(text, "split: {} train, {} test", train.len(), test.len());
            }
            emit(cli.format, &text, &json!({"papers": store.papers.len(), "entities": store.entities.len(), "out": out}));
        }
    }
    Ok(())
}

fn read_manifest(cfg: &RunConfig) -> Result<Value> {
    let path = cfg.paths.work_dir.join(MANIFEST);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io("reading index manifest (run `resrec build-index` first)", &path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format { path, reason: e.to_string() })
}

fn load_index(cfg: &RunConfig, kind: EntityKind, retriever: Retriever) -> Result<KindIndex> {
    Ok(match retriever {
        Retriever::Dense => KindIndex::Dense(DenseIndex::load(&cfg.paths.dense_index(kind))?),
        Retriever::Bm25 => {
            let path = cfg.paths.bm25_docs(kind);
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io("reading bm25 documents", &path, e))?;
            let docs = text
                .lines()
                .map(|l| {
                    let v: Value = serde_json::from_str(l).map_err(|e| Error::Format { path: path.clone(), reason: e.to_string() })?;
                    Ok(TargetRepresentation {
                        entity_id: v["entity_id"].as_str().unwrap_or_default().to_string(),
                        text: v["text"].as_str().unwrap_or_default().to_string(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            KindIndex::Bm25(Bm25Index::build(&docs, Bm25Params::default()))
        }
    })
}

/// `(query key, query text, target key, target text)`.
type KeyedPair = (String, String, String, String);

fn pairs_from_file(path: &PathBuf) -> Result<Vec<KeyedPair>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io("reading pairs", path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let v: Value = serde_json::from_str(l)
                .map_err(|e| Error::MalformedRecord { line: i + 1, reason: e.to_string() })?;
            let field = |name: &str| {
                v[name].as_str().map(String::from).ok_or_else(|| Error::MalformedRecord {
                    line: i + 1,
                    reason: format!("missing string field {name:?}"),
                })
            };
            let (q, t) = (field("query")?, field("target")?);
            Ok((q.clone(), q, t.clone(), t))
        })
        .collect()
}

fn pairs_from_store(cfg: &RunConfig, split: Option<&Path>) -> Result<Vec<KeyedPair>> {
    let store = load_store(cfg)?;
    let perceptions = load_perceptions(cfg)?;
    let papers: Vec<String> = match split {
        Some(p) => read_split(p)?,
        None => store.papers.keys().cloned().collect(),
    };
    let mut reps: BTreeMap<String, String> = BTreeMap::new();
    for kind in EntityKind::ALL {
        for r in build_representations(&store, kind, &perceptions, cfg.pipeline.toggles.representation())? {
            reps.insert(r.entity_id, r.text);
        }
    }
    let mut out = Vec::new();
    for p in &papers {
        let query = format_query(&Query::for_paper(store.paper(p)?, cfg.pipeline.instruction.clone()));
        for kind in EntityKind::ALL {
            for e in store.gold(p, kind)? {
                out.push((p.clone(), query.clone(), e.clone(), reps[e].clone()));
            }
        }
    }
    Ok(out)
}

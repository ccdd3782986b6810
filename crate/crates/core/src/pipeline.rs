//! Stage 1 (dense or BM25 over fused representations) feeding Stage 2
//! (chain evidence and reranking of the shortlist).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::adapter::{apply_adapter, AdapterParams};
use crate::corpus::{CorpusStore, EntityKind};
use crate::error::{Error, Result};
use crate::graph::InteractionGraph;
use crate::perception::{build_representations, CollectivePerception, PerceptionParams, RepresentationToggles, TargetRepresentation};
use crate::providers::ProviderClient;
use crate::rerank::{assemble_evidence, rerank, splice_reranked, ChainAnchor, EvidenceBundle, RerankMode, DEFAULT_ALPHA};
use crate::retrieval::{
    bm25_search, dense_search, embed_texts, format_query, Bm25Index, Bm25Params, DenseIndex, EmbeddingVector, Query,
    RankedList, DEFAULT_INSTRUCTION, DEFAULT_SHORTLIST, DEFAULT_TEMPERATURE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Retriever {
    #[default]
    Dense,
    Bm25,
}

/// Which parts of the pipeline are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct AblationToggles {
    pub description: bool,
    pub perception: bool,
    pub chains: bool,
    pub rerank: bool,
}

impl Default for AblationToggles {
    fn default() -> Self {
        AblationToggles { description: true, perception: true, chains: true, rerank: true }
    }
}

impl AblationToggles {
    pub fn representation(self) -> RepresentationToggles {
        RepresentationToggles { description: self.description, perception: self.perception }
    }

    pub fn validate(self) -> Result<()> {
        if !self.description && !self.perception {
            return Err(Error::InvalidArgument("description and perception cannot both be off".into()));
        }
        Ok(())
    }

    /// Every valid combination, full pipeline first.
    pub fn all_combinations() -> Vec<AblationToggles> {
        let mut out = Vec::new();
        for bits in (0u8..16).rev() {
            let t = AblationToggles {
                description: bits & 8 != 0,
                perception: bits & 4 != 0,
                chains: bits & 2 != 0,
                rerank: bits & 1 != 0,
            };
            if t.validate().is_ok() {
                out.push(t);
            }
        }
        out
    }

    /// E.g. `desc+cp+chains+rerank`, `desc+rerank`.
    pub fn label(self) -> String {
        let parts = [(self.description, "desc"), (self.perception, "cp"), (self.chains, "chains"), (self.rerank, "rerank")];
        parts.iter().filter(|(on, _)| *on).map(|(_, n)| *n).collect::<Vec<_>>().join("+")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub retriever: Retriever,
    pub shortlist: usize,
    pub temperature: f64,
    pub alpha: f64,
    pub toggles: AblationToggles,
    /// Send rerank prompts to the provider; the deterministic blend otherwise.
    pub llm_rerank: bool,
    /// Summarize citation contexts through the provider.
    pub use_summarizer: bool,
    pub use_adapter: bool,
    pub instruction: String,
    pub perception: PerceptionParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            retriever: Retriever::Dense,
            shortlist: DEFAULT_SHORTLIST,
            temperature: DEFAULT_TEMPERATURE,
            alpha: DEFAULT_ALPHA,
            toggles: AblationToggles::default(),
            llm_rerank: false,
            use_summarizer: true,
            use_adapter: false,
            instruction: DEFAULT_INSTRUCTION.into(),
            perception: PerceptionParams::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.toggles.validate()?;
        if self.shortlist == 0 {
            return Err(Error::InvalidArgument("shortlist must be >= 1".into()));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::InvalidArgument("temperature must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidArgument("alpha must be in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn method_label(&self) -> String {
        let retriever = match self.retriever {
            Retriever::Dense => "dense",
            Retriever::Bm25 => "bm25",
        };
        let adapter = if self.use_adapter { "+adapter" } else { "" };
        format!("{retriever}{adapter}[{}]", self.toggles.label())
    }
}

/// Per-kind Stage-1 index.
#[derive(Debug, Clone)]
pub enum KindIndex {
    Dense(DenseIndex<f64>),
    Bm25(Bm25Index),
}

#[derive(Debug, Clone)]
pub struct QueryOutcome {
    pub stage1: RankedList,
    pub ranking: RankedList,
    pub bundle: Option<EvidenceBundle>,
    pub mode: Option<RerankMode>,
    pub justification: Option<String>,
}

pub struct Pipeline<'a> {
    pub store: &'a CorpusStore,
    pub graph: InteractionGraph,
    pub config: PipelineConfig,
    client: &'a ProviderClient,
    adapter: Option<&'a AdapterParams<f64>>,
    indexes: BTreeMap<EntityKind, KindIndex>,
}

/// Embeds representations (through the adapter when given) into a dense index.
pub fn build_dense_index(
    reps: &[TargetRepresentation],
    client: &ProviderClient,
    adapter: Option<&AdapterParams<f64>>,
) -> Result<DenseIndex<f64>> {
    let texts: Vec<String> = reps.iter().map(|r| r.text.clone()).collect();
    let vectors: Vec<EmbeddingVector<f64>> = embed_texts(&texts, client)?;
    let dim = vectors.first().map_or(0, EmbeddingVector::dim);
    let vectors = match adapter {
        Some(a) => vectors.iter().map(|v| apply_adapter(a, v)).collect::<Result<Vec<_>>>()?,
        None => vectors,
    };
    DenseIndex::build(reps.iter().map(|r| r.entity_id.clone()).zip(vectors), dim)
}

impl<'a> Pipeline<'a> {
    /// Builds per-kind indexes from the store and the given perceptions.
    pub fn build(
        store: &'a CorpusStore,
        config: PipelineConfig,
        client: &'a ProviderClient,
        adapter: Option<&'a AdapterParams<f64>>,
        perceptions: &BTreeMap<String, CollectivePerception>,
    ) -> Result<Self> {
        config.validate()?;
        let mut indexes = BTreeMap::new();
        for kind in EntityKind::ALL {
            let reps = build_representations(store, kind, perceptions, config.toggles.representation())?;
            let index = match config.retriever {
                Retriever::Dense => KindIndex::Dense(build_dense_index(&reps, client, adapter)?),
                Retriever::Bm25 => KindIndex::Bm25(Bm25Index::build(&reps, Bm25Params::default())),
            };
            indexes.insert(kind, index);
        }
        Ok(Self::from_indexes(store, config, client, adapter, indexes))
    }

    pub fn from_indexes(
        store: &'a CorpusStore,
        config: PipelineConfig,
        client: &'a ProviderClient,
        adapter: Option<&'a AdapterParams<f64>>,
        indexes: BTreeMap<EntityKind, KindIndex>,
    ) -> Self {
        Pipeline { store, graph: InteractionGraph::build(store), config, client, adapter, indexes }
    }

    pub fn index(&self, kind: EntityKind) -> Option<&KindIndex> {
        self.indexes.get(&kind)
    }

    /// Instruction-formatted, adapted and normalized query vectors.
    pub fn embed_queries(&self, queries: &[Query]) -> Result<Vec<EmbeddingVector<f64>>> {
        let texts: Vec<String> = queries.iter().map(format_query).collect();
        let vectors = embed_texts(&texts, self.client)?;
        match self.adapter {
            Some(a) => vectors.iter().map(|v| apply_adapter(a, v)).collect(),
            None => Ok(vectors),
        }
    }

    /// Stage-1 ranking of depth `k`. Dense retrieval needs `vector`; BM25
    /// scores the synopsis alone.
    pub fn stage1(&self, query: &Query, vector: Option<&EmbeddingVector<f64>>, kind: EntityKind, k: usize) -> Result<RankedList> {
        match self.indexes.get(&kind) {
            Some(KindIndex::Dense(index)) => {
                let owned;
                let v = match vector {
                    Some(v) => v,
                    None => {
                        owned = self.embed_queries(std::slice::from_ref(query))?.remove(0);
                        &owned
                    }
                };
                dense_search(index, v, k, self.config.temperature, &query.query_id)
            }
            Some(KindIndex::Bm25(index)) => bm25_search(index, &query.synopsis_text, k, &query.query_id),
            None => Ok(RankedList::from_ordered(query.query_id.clone(), [])),
        }
    }

    /// Full run: Stage 1 to `depth`, then (when enabled) reranking of the
    /// first `shortlist` entries with the tail kept in Stage-1 order.
    pub fn run(
        &self,
        query: &Query,
        vector: Option<&EmbeddingVector<f64>>,
        kind: EntityKind,
        depth: usize,
        anchor: &ChainAnchor,
    ) -> Result<QueryOutcome> {
        let depth = depth.max(self.config.shortlist);
        let stage1 = self.stage1(query, vector, kind, depth)?;
        if !self.config.toggles.rerank || stage1.is_empty() {
            return Ok(QueryOutcome { ranking: stage1.clone(), stage1, bundle: None, mode: None, justification: None });
        }
        let shortlist = stage1.truncated(self.config.shortlist);
        let anchor = if self.config.toggles.chains { anchor.clone() } else { ChainAnchor::None };
        let bundle = assemble_evidence(query, kind, &shortlist, &self.graph, self.store, &anchor)?;
        let client = self.config.llm_rerank.then_some(self.client);
        let result = rerank(&bundle, client, self.config.alpha);
        Ok(QueryOutcome {
            ranking: splice_reranked(&stage1, &result.ranking),
            stage1,
            bundle: Some(bundle),
            mode: Some(result.mode),
            justification: Some(result.justification),
        })
    }
}

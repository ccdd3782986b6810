use std::path::Path;

use crate::error::{Error, Result};
use crate::retrieval::{EmbeddingVector, RankedList};
use crate::scalar::{dot, Scalar};

pub const DEFAULT_TEMPERATURE: f64 = 20.0;
pub const DEFAULT_SHORTLIST: usize = 20;

/// Brute-force inner-product index over unit-norm rows.
///
/// On disk: `u32 dim`, `u32 count`, then `count` ids as `u32 byte length +
/// UTF-8`, then `count × dim` row-major `f32` values. All integers and
/// floats little-endian.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseIndex<T: Scalar> {
    ids: Vec<String>,
    rows: Vec<T>,
    dim: usize,
}

impl<T: Scalar> DenseIndex<T> {
    /// Rows are normalized on insertion.
    pub fn build(entries: impl IntoIterator<Item = (String, EmbeddingVector<T>)>, dim: usize) -> Result<Self> {
        let mut index = DenseIndex { ids: Vec::new(), rows: Vec::new(), dim };
        for (i, (id, v)) in entries.into_iter().enumerate() {
            if v.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, actual: v.dim() });
            }
            let v = v.normalized().ok_or(Error::DegenerateEmbedding(i))?;
            index.ids.push(id);
            index.rows.extend(v.values);
        }
        Ok(index)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    /// Rebuilds the index with `f` applied to every row.
    pub fn map_rows(&self, mut f: impl FnMut(&[T]) -> Result<EmbeddingVector<T>>) -> Result<Self> {
        let mapped: Vec<(String, EmbeddingVector<T>)> =
            (0..self.len()).map(|i| Ok((self.ids[i].clone(), f(self.row(i))?))).collect::<Result<_>>()?;
        DenseIndex::build(mapped, self.dim)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + self.rows.len() * 4);
        out.extend((self.dim as u32).to_le_bytes());
        out.extend((self.ids.len() as u32).to_le_bytes());
        for id in &self.ids {
            out.extend((id.len() as u32).to_le_bytes());
            out.extend(id.as_bytes());
        }
        for &x in &self.rows {
            out.extend(x.to_f32().unwrap_or(f32::NAN).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, String> {
        let mut cursor = bytes;
        let mut take = |n: usize| -> std::result::Result<&[u8], String> {
            if cursor.len() < n {
                return Err("truncated index".into());
            }
            let (head, tail) = cursor.split_at(n);
            cursor = tail;
            Ok(head)
        };
        let read_u32 = |b: &[u8]| u32::from_le_bytes(b.try_into().unwrap()) as usize;
        let dim = read_u32(take(4)?);
        let count = read_u32(take(4)?);
        let mut ids = Vec::with_capacity(count);
        for _ in 0..count {
            let len = read_u32(take(4)?);
            let id = std::str::from_utf8(take(len)?).map_err(|e| e.to_string())?;
            ids.push(id.to_string());
        }
        let body = take(count * dim * 4)?;
        let rows = body
            .chunks_exact(4)
            .map(|c| T::of(f64::from(f32::from_le_bytes(c.try_into().unwrap()))))
            .collect();
        if !cursor.is_empty() {
            return Err(format!("{} trailing bytes", cursor.len()));
        }
        Ok(DenseIndex { ids, rows, dim })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io("writing index", path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io("reading index", path, e))?;
        Self::from_bytes(&bytes).map_err(|reason| Error::Format { path: path.to_path_buf(), reason })
    }
}

/// Top-`k` rows by `temperature · ⟨query, row⟩`.
///
/// Ordering uses the raw inner product (ties to the smaller id), so the
/// ranking is the same for every positive temperature.
pub fn dense_search<T: Scalar>(
    index: &DenseIndex<T>,
    query: &EmbeddingVector<T>,
    k: usize,
    temperature: T,
    query_id: &str,
) -> Result<RankedList> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    if !(temperature > T::zero()) {
        return Err(Error::InvalidArgument("temperature must be > 0".into()));
    }
    if index.is_empty() {
        return Ok(RankedList::from_ordered(query_id, []));
    }
    if query.dim() != index.dim {
        return Err(Error::DimensionMismatch { expected: index.dim, actual: query.dim() });
    }
    let mut scored: Vec<(T, usize)> = (0..index.len()).map(|i| (dot(index.row(i), &query.values), i)).collect();
    let by_score = |a: &(T, usize), b: &(T, usize)| {
        b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal).then_with(|| index.ids[a.1].cmp(&index.ids[b.1]))
    };
    if k < scored.len() {
        scored.select_nth_unstable_by(k - 1, by_score);
        scored.truncate(k);
    }
    scored.sort_by(by_score);
    Ok(RankedList::from_ordered(
        query_id,
        scored.into_iter().map(|(ip, i)| (index.ids[i].clone(), (temperature * ip).as_f64())),
    ))
}

/// The Stage-1 shortlist handed to the reranker.
pub fn retrieve_shortlist<T: Scalar>(
    index: &DenseIndex<T>,
    query: &EmbeddingVector<T>,
    k: usize,
    temperature: T,
    query_id: &str,
) -> Result<RankedList> {
    dense_search(index, query, k, temperature, query_id)
}

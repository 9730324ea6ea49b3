//! CoNLL-U ingestion: one dependency graph per sentence block.
//!
//! Only the ID, FORM, HEAD, and DEPREL columns are consumed. Comment lines,
//! multiword-token ranges (`1-2`), and empty nodes (`1.1`) are skipped.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::error::CorpusError;

/// One directed dependency edge, head to dependent, with its relation label.
/// Token indices are 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepEdge {
    pub head: usize,
    pub dependent: usize,
    pub relation: String,
}

/// Per-sentence dependency graph: every non-root token has exactly one head.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyGraph {
    /// Token count; nodes are numbered 1..=n.
    pub n: usize,
    pub edges: Vec<DepEdge>,
    /// 1-based index of the root token (the one with head 0).
    pub root: usize,
}

impl DependencyGraph {
    /// Build from per-token heads (0 marks the root) and relation labels.
    pub fn from_heads(heads: &[usize], relations: &[&str]) -> Result<Self, String> {
        let n = heads.len();
        if relations.len() != n {
            return Err(format!("{} heads but {} relations", n, relations.len()));
        }
        let mut root = None;
        let mut edges = Vec::new();
        for (i, &head) in heads.iter().enumerate() {
            let dependent = i + 1;
            if head == 0 {
                if root.is_none() {
                    root = Some(dependent);
                }
                continue;
            }
            if head > n {
                return Err(format!("token {dependent} has head {head} outside 1..={n}"));
            }
            edges.push(DepEdge { head, dependent, relation: relations[i].to_string() });
        }
        let root = root.ok_or_else(|| "no root token (head 0)".to_string())?;

        // follow each head chain; revisiting a node before the root means a cycle
        for start in 1..=n {
            let mut current = start;
            let mut steps = 0;
            while heads[current - 1] != 0 {
                current = heads[current - 1];
                steps += 1;
                if steps > n {
                    return Err(format!("cycle detected in head chain starting at token {start}"));
                }
            }
        }
        Ok(DependencyGraph { n, edges, root })
    }
}

struct TokenLine {
    id: usize,
    head: usize,
    relation: String,
}

fn parse_token_line(line: &str) -> Result<Option<TokenLine>, String> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 10 {
        return Err(format!("expected 10 tab-separated columns, got {}", cols.len()));
    }
    let id_col = cols[0];
    if id_col.contains('-') || id_col.contains('.') {
        // multiword token range or empty node
        return Ok(None);
    }
    let id: usize = id_col.parse().map_err(|_| format!("non-integer token id `{id_col}`"))?;
    let head: usize = cols[6].parse().map_err(|_| format!("non-integer HEAD `{}`", cols[6]))?;
    Ok(Some(TokenLine { id, head, relation: cols[7].to_string() }))
}

fn graph_from_block(lines: &[TokenLine]) -> Result<DependencyGraph, String> {
    let n = lines.len();
    let mut heads = vec![0usize; n];
    let mut relations = vec![""; n];
    for (pos, t) in lines.iter().enumerate() {
        if t.id != pos + 1 {
            return Err(format!("token ids not contiguous: expected {}, got {}", pos + 1, t.id));
        }
        if t.head == t.id {
            return Err(format!("token {} heads itself", t.id));
        }
        heads[pos] = t.head;
        relations[pos] = &t.relation;
    }
    DependencyGraph::from_heads(&heads, &relations)
}

/// Parse CoNLL-U text into one graph per blank-line-separated block.
/// `origin` names the source in error messages.
pub fn parse_conllu_str(text: &str, origin: &str) -> Result<Vec<DependencyGraph>, CorpusError> {
    let mut graphs = Vec::new();
    let mut block: Vec<TokenLine> = Vec::new();
    let mut block_no = 1;

    let mut finish = |block: &mut Vec<TokenLine>, block_no: usize| -> Result<(), CorpusError> {
        if block.is_empty() {
            return Ok(());
        }
        let graph = graph_from_block(block).map_err(|detail| CorpusError::ConlluBlock {
            path: origin.to_string(),
            block: block_no,
            detail,
        })?;
        graphs.push(graph);
        block.clear();
        Ok(())
    };

    for line in text.lines() {
        let trimmed = line.trim_end();
        if trimmed.is_empty() {
            if !block.is_empty() {
                finish(&mut block, block_no)?;
                block_no += 1;
            }
            continue;
        }
        if trimmed.starts_with('#') {
            continue;
        }
        let parsed = parse_token_line(trimmed).map_err(|detail| CorpusError::ConlluBlock {
            path: origin.to_string(),
            block: block_no,
            detail,
        })?;
        if let Some(t) = parsed {
            block.push(t);
        }
    }
    finish(&mut block, block_no)?;
    if graphs.is_empty() {
        return Err(CorpusError::EmptyFile { path: origin.to_string() });
    }
    Ok(graphs)
}

/// Parse a CoNLL-U file into one graph per blank-line-separated block.
pub fn parse_conllu(path: &Path) -> Result<Vec<DependencyGraph>, CorpusError> {
    let display = path.display().to_string();
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| CorpusError::Io { path: display.clone(), source: e })?;
    parse_conllu_str(&text, &display)
}

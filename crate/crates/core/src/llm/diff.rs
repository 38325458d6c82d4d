use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiffError {
    #[error("response contains no SEARCH/REPLACE block")]
    NoBlocks,
    #[error("block {block}: SEARCH text not found in program")]
    NotFound { block: usize },
    #[error("block {block}: SEARCH text matches {count} places in program")]
    Ambiguous { block: usize, count: usize },
}

static BLOCK: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?ms)^<{7} SEARCH[ \t]*\r?\n(.*?)^={7}[ \t]*\r?\n(.*?)^>{7} REPLACE[ \t]*\r?$")
        .expect("block pattern")
});

fn strip_newline(s: &str) -> &str {
    s.strip_suffix('\n')
        .map(|s| s.strip_suffix('\r').unwrap_or(s))
        .unwrap_or(s)
}

/// SEARCH/REPLACE pairs found in `response`, in order. Text outside the
/// markers, including code fences, is ignored.
pub fn parse_blocks(response: &str) -> Vec<(String, String)> {
    BLOCK
        .captures_iter(response)
        .map(|c| {
            (
                strip_newline(&c[1]).to_string(),
                strip_newline(&c[2]).to_string(),
            )
        })
        .collect()
}

/// Applies every block of `response` to `source` in order. Each SEARCH
/// text must occur exactly once in the source as updated by the blocks
/// before it. Blocks are numbered from 1.
pub fn apply_search_replace_diff(source: &str, response: &str) -> Result<String, DiffError> {
    let blocks = parse_blocks(response);
    if blocks.is_empty() {
        return Err(DiffError::NoBlocks);
    }
    let mut current = source.to_string();
    for (i, (search, replace)) in blocks.iter().enumerate() {
        let block = i + 1;
        if search.is_empty() {
            return Err(DiffError::NotFound { block });
        }
        let count = current.matches(search.as_str()).count();
        match count {
            0 => return Err(DiffError::NotFound { block }),
            1 => current = current.replacen(search.as_str(), replace, 1),
            _ => return Err(DiffError::Ambiguous { block, count }),
        }
    }
    Ok(current)
}

use std::path::Path;

use crate::error::{Error, Result};

/// Parse a `parent child` edge list. Blank lines and `#` comments are
/// skipped; names resolve against `names`.
pub fn parse_edge_list(text: &str, names: &[String]) -> std::result::Result<Vec<(usize, usize)>, String> {
    let lookup = |tok: &str, line: usize| {
        names
            .iter()
            .position(|n| n == tok)
            .ok_or_else(|| format!("line {line}: unknown variable `{tok}`"))
    };
    let mut edges = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(format!("line {}: expected `parent child`", k + 1));
        }
        let (a, b) = (lookup(toks[0], k + 1)?, lookup(toks[1], k + 1)?);
        if a == b {
            return Err(format!("line {}: self loop on `{}`", k + 1, toks[0]));
        }
        if !edges.contains(&(a, b)) {
            edges.push((a, b));
        }
    }
    Ok(edges)
}

pub fn read_edge_list(path: impl AsRef<Path>, names: &[String]) -> Result<Vec<(usize, usize)>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text, names).map_err(|reason| Error::MalformedEdgeList {
        path: path.to_path_buf(),
        reason,
    })
}

pub fn format_edge_list(edges: impl IntoIterator<Item = (usize, usize)>, names: &[String]) -> String {
    edges
        .into_iter()
        .map(|(a, b)| format!("{} {}\n", names[a], names[b]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names() -> Vec<String> {
        ["a", "b", "c"].map(String::from).to_vec()
    }

    #[test]
    fn parses_with_comments() {
        let e = parse_edge_list("# gt\na b\n\n b c # tail\na b\n", &names()).unwrap();
        assert_eq!(e, vec![(0, 1), (1, 2)]);
        assert_eq!(format_edge_list(e, &names()), "a b\nb c\n");
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(parse_edge_list("a\n", &names()).is_err());
        assert!(parse_edge_list("a z\n", &names()).is_err());
        assert!(parse_edge_list("a a\n", &names()).is_err());
    }
}

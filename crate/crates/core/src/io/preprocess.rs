//! Layer selection and node merging for real multiplex data.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::io::edgelist::LabeledStack;
use crate::model::{AdjacencyStack, Layer};

/// Keeps the `target` layers with the most edges, densest first.
///
/// Equal counts keep their original relative order.
pub fn select_top_layers(ls: &LabeledStack, target: usize) -> Result<LabeledStack> {
    let total = ls.stack.len();
    if target > total {
        return Err(Error::Validation(format!(
            "cannot select {target} layers from {total}"
        )));
    }
    let counts = ls.stack.edge_counts();
    let mut order: Vec<usize> = (0..total).collect();
    // stable sort keeps ties in input order
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]));
    order.truncate(target);

    let layers = order.iter().map(|&l| ls.stack.layers()[l].clone()).collect();
    let layer_labels = order.iter().map(|&l| ls.layer_labels[l].clone()).collect();
    LabeledStack::new(
        AdjacencyStack::new(ls.stack.n(), layers)?,
        ls.node_labels.clone(),
        layer_labels,
    )
}

/// Reads `kept absorbed` pairs, one per line.
///
/// A tab separates the two labels when present, so labels may contain
/// spaces; otherwise the line must hold exactly two whitespace-separated
/// tokens. `#` starts a comment line.
pub fn parse_merge_spec<R: BufRead>(reader: R) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let pair: Vec<&str> = if line.contains('\t') {
            line.split('\t').map(str::trim).collect()
        } else {
            line.split_whitespace().collect()
        };
        match pair.as_slice() {
            [kept, absorbed] => pairs.push((kept.to_string(), absorbed.to_string())),
            _ => {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: "expected `kept_label absorbed_label`".into(),
                })
            }
        }
    }
    Ok(pairs)
}

/// Folds each absorbed node into its keeper.
///
/// In every layer the keeper's edges become the boolean OR of both nodes'
/// edges; an edge between the two becomes a self-loop on the keeper.
/// Remaining nodes keep their relative order.
pub fn merge_nodes(ls: &LabeledStack, spec: &[(String, String)]) -> Result<LabeledStack> {
    let lookup = |label: &str| {
        ls.node_index(label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    };
    let mut absorbed_into: BTreeMap<usize, usize> = BTreeMap::new();
    let mut keepers = BTreeSet::new();
    for (kept, absorbed) in spec {
        let k = lookup(kept)?;
        let a = lookup(absorbed)?;
        if k == a {
            return Err(Error::InvalidMerge(format!("`{kept}` cannot absorb itself")));
        }
        if absorbed_into.insert(a, k).is_some() {
            return Err(Error::InvalidMerge(format!("`{absorbed}` is absorbed twice")));
        }
        keepers.insert(k);
    }
    if let Some(&a) = absorbed_into.keys().find(|a| keepers.contains(a)) {
        return Err(Error::InvalidMerge(format!(
            "`{}` is both absorbed and a keeper",
            ls.node_labels[a]
        )));
    }

    let n = ls.stack.n();
    let mut new_index = vec![usize::MAX; n];
    let mut node_labels = Vec::with_capacity(n - absorbed_into.len());
    for i in (0..n).filter(|i| !absorbed_into.contains_key(i)) {
        new_index[i] = node_labels.len();
        node_labels.push(ls.node_labels[i].clone());
    }
    for (&a, &k) in &absorbed_into {
        new_index[a] = new_index[k];
    }
    let m = node_labels.len();
    let layers = ls
        .stack
        .layers()
        .iter()
        .map(|layer| Layer::from_edges(m, layer.edges().map(|(i, j)| (new_index[i], new_index[j]))))
        .collect::<Result<Vec<_>>>()?;
    LabeledStack::new(AdjacencyStack::new(m, layers)?, node_labels, ls.layer_labels.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::edgelist::parse_multiplex_edges;

    fn parse(text: &str) -> LabeledStack {
        parse_multiplex_edges(text.as_bytes(), None, None).unwrap()
    }

    fn stack_with_counts(counts: &[usize]) -> LabeledStack {
        let mut text = String::new();
        for (l, &c) in counts.iter().enumerate() {
            for e in 0..c {
                text.push_str(&format!("{} {} {}\n", l + 1, e + 1, e + 2));
            }
        }
        parse(&text)
    }

    #[test]
    fn tie_rule_keeps_original_order() {
        let ls = stack_with_counts(&[5, 9, 9, 1]);
        let top = select_top_layers(&ls, 2).unwrap();
        assert_eq!(top.layer_labels, vec!["2", "3"]);
        assert_eq!(top.stack.edge_counts(), vec![9, 9]);
    }

    #[test]
    fn full_selection_only_reorders() {
        let ls = stack_with_counts(&[2, 4, 1]);
        let top = select_top_layers(&ls, 3).unwrap();
        assert_eq!(top.layer_labels, vec!["2", "1", "3"]);
        assert!(select_top_layers(&ls, 4).is_err());
    }

    #[test]
    fn merge_collapses_parallel_edges() {
        let ls = parse("1 1 2\n1 3 2\n");
        let merged = merge_nodes(&ls, &[("1".into(), "3".into())]).unwrap();
        assert_eq!(merged.node_labels, vec!["1", "2"]);
        assert_eq!(merged.stack.edge_counts(), vec![1]);
        assert!(merged.stack.layers()[0].has_edge(0, 1));
    }

    #[test]
    fn merge_isolated_node() {
        let stack = parse("1 1 2\n1 2 1\n").stack;
        let bigger = AdjacencyStack::new(
            3,
            vec![Layer::from_edges(3, stack.layers()[0].edges()).unwrap()],
        )
        .unwrap();
        let ls = LabeledStack::new(bigger, vec!["a".into(), "b".into(), "c".into()], vec!["1".into()]).unwrap();
        let merged = merge_nodes(&ls, &[("a".into(), "c".into())]).unwrap();
        assert_eq!(merged.stack.n(), 2);
        assert_eq!(merged.stack.layers()[0].edges().collect::<Vec<_>>(), vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn merge_between_pair_makes_self_loop() {
        let ls = parse("1 1 2\n");
        let merged = merge_nodes(&ls, &[("2".into(), "1".into())]).unwrap();
        assert!(merged.stack.layers()[0].has_edge(0, 0));
    }

    #[test]
    fn invalid_specs() {
        let ls = parse("1 1 2\n1 2 3\n");
        let e = |a: &str, b: &str| (a.to_string(), b.to_string());
        assert!(matches!(merge_nodes(&ls, &[e("1", "1")]), Err(Error::InvalidMerge(_))));
        assert!(matches!(merge_nodes(&ls, &[e("1", "9")]), Err(Error::UnknownLabel(_))));
        assert!(matches!(merge_nodes(&ls, &[e("1", "2"), e("2", "3")]), Err(Error::InvalidMerge(_))));
        assert!(matches!(merge_nodes(&ls, &[e("1", "3"), e("2", "3")]), Err(Error::InvalidMerge(_))));
    }

    #[test]
    fn merge_spec_parsing() {
        let spec = parse_merge_spec("# keep absorb\nChina\tChina, mainland\nA B\n".as_bytes()).unwrap();
        assert_eq!(spec, vec![("China".into(), "China, mainland".into()), ("A".into(), "B".into())]);
        assert!(parse_merge_spec("A B C\n".as_bytes()).is_err());
    }
}

//! Multiplex edge lists.
//!
//! Data lines are whitespace separated `layer source target [weight]`.
//! Lines starting with `#` and blank lines are ignored. A positive (or
//! absent) weight yields one directed edge; repeated lines collapse to a
//! single edge, zero weights add nothing and negative weights are errors.
//!
//! Optional label tables (`id label` per line, an optional `nodeID`/`layerID`
//! header) fix the node and layer universe and order: every id listed in a
//! table exists in the result even if it has no edges, and tokens in the edge
//! file may name either the id or the label. Without a table, the node set is
//! the union of edge endpoints, ordered numerically when every token is an
//! integer and by first appearance otherwise.
//!
//! Written files use 1-based indices; everything in memory is 0-based.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{AdjacencyStack, Layer};

/// Adjacency stack with a label per node and per layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledStack {
    pub stack: AdjacencyStack,
    pub node_labels: Vec<String>,
    pub layer_labels: Vec<String>,
}

impl LabeledStack {
    pub fn new(stack: AdjacencyStack, node_labels: Vec<String>, layer_labels: Vec<String>) -> Result<Self> {
        if node_labels.len() != stack.n() || layer_labels.len() != stack.len() {
            return Err(Error::Dimension(format!(
                "{} node labels / {} layer labels for a stack of {} nodes and {} layers",
                node_labels.len(),
                layer_labels.len(),
                stack.n(),
                stack.len()
            )));
        }
        for (axis, labels) in [("node", &node_labels), ("layer", &layer_labels)] {
            let mut seen = BTreeSet::new();
            if let Some(dup) = labels.iter().find(|l| !seen.insert(l.as_str())) {
                return Err(Error::Validation(format!("duplicate {axis} label `{dup}`")));
            }
        }
        Ok(LabeledStack {
            stack,
            node_labels,
            layer_labels,
        })
    }

    /// Labels `1..=n` and `1..=L`.
    pub fn with_index_labels(stack: AdjacencyStack) -> Self {
        let node_labels = (1..=stack.n()).map(|i| i.to_string()).collect();
        let layer_labels = (1..=stack.len()).map(|l| l.to_string()).collect();
        LabeledStack {
            stack,
            node_labels,
            layer_labels,
        }
    }

    pub fn node_index(&self, label: &str) -> Option<usize> {
        self.node_labels.iter().position(|l| l == label)
    }
}

/// Ordered `id -> label` table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelTable {
    pub entries: Vec<(String, String)>,
}

impl LabelTable {
    pub fn parse<R: BufRead>(reader: R) -> Result<Self> {
        let mut entries = Vec::new();
        let mut first = true;
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::Parse {
                line: lineno + 1,
                message: e.to_string(),
            })?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (id, rest) = match line.split_once(char::is_whitespace) {
                Some((id, rest)) => (id, rest.trim()),
                None => (line, ""),
            };
            if first && (id.eq_ignore_ascii_case("nodeid") || id.eq_ignore_ascii_case("layerid")) {
                first = false;
                continue;
            }
            first = false;
            let label = if rest.is_empty() { id } else { rest };
            entries.push((id.to_string(), label.to_string()));
        }
        Ok(LabelTable { entries })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(BufReader::new(file))
    }

    fn write<W: Write>(labels: &[String], header: &str, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{header}")?;
        for (i, label) in labels.iter().enumerate() {
            writeln!(out, "{} {}", i + 1, label)?;
        }
        Ok(())
    }
}

/// Resolves edge-file tokens to dense indices along one axis.
struct Axis<'a> {
    table: Option<(&'a LabelTable, HashMap<&'a str, usize>)>,
    seen: Vec<String>,
    index: HashMap<String, usize>,
}

impl<'a> Axis<'a> {
    fn new(table: Option<&'a LabelTable>) -> Self {
        let table = table.map(|t| {
            let mut lookup = HashMap::new();
            // ids take precedence over labels
            for (i, (_, label)) in t.entries.iter().enumerate() {
                lookup.insert(label.as_str(), i);
            }
            for (i, (id, _)) in t.entries.iter().enumerate() {
                lookup.insert(id.as_str(), i);
            }
            (t, lookup)
        });
        Axis {
            table,
            seen: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// Table index, or a provisional first-appearance index without a table.
    fn resolve(&mut self, token: &str) -> Result<usize> {
        if let Some((_, lookup)) = &self.table {
            return lookup
                .get(token)
                .copied()
                .ok_or_else(|| Error::UnknownLabel(token.to_string()));
        }
        if let Some(&i) = self.index.get(token) {
            return Ok(i);
        }
        let i = self.seen.len();
        self.seen.push(token.to_string());
        self.index.insert(token.to_string(), i);
        Ok(i)
    }

    /// Final labels and a map from provisional to final index.
    fn finish(self) -> (Vec<String>, Vec<usize>) {
        if let Some((table, _)) = self.table {
            let labels: Vec<String> = table.entries.iter().map(|(_, l)| l.clone()).collect();
            let remap = (0..labels.len()).collect();
            return (labels, remap);
        }
        let mut order: Vec<usize> = (0..self.seen.len()).collect();
        let numeric: Option<Vec<u64>> = self.seen.iter().map(|s| s.parse::<u64>().ok()).collect();
        if let Some(values) = numeric {
            order.sort_by_key(|&i| values[i]);
        }
        let mut remap = vec![0usize; order.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old] = new;
        }
        let labels = order.into_iter().map(|i| self.seen[i].clone()).collect();
        (labels, remap)
    }
}

/// Parses a multiplex edge list, optionally against node and layer tables.
pub fn parse_multiplex_edges<R: BufRead>(
    reader: R,
    nodes: Option<&LabelTable>,
    layers: Option<&LabelTable>,
) -> Result<LabeledStack> {
    let mut node_axis = Axis::new(nodes);
    let mut layer_axis = Axis::new(layers);
    let mut edges: Vec<(usize, usize, usize)> = Vec::new();

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 3 && tokens.len() != 4 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected `layer source target [weight]`, found {} fields", tokens.len()),
            });
        }
        let weight = match tokens.get(3) {
            Some(w) => w.parse::<f64>().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("weight `{w}` is not a number"),
            })?,
            None => 1.0,
        };
        if weight < 0.0 || weight.is_nan() {
            return Err(Error::Parse {
                line: lineno,
                message: format!("negative weight {weight}"),
            });
        }
        let l = layer_axis.resolve(tokens[0])?;
        let i = node_axis.resolve(tokens[1])?;
        let j = node_axis.resolve(tokens[2])?;
        if weight > 0.0 {
            edges.push((l, i, j));
        }
    }
    if edges.is_empty() {
        return Err(Error::NoEdges);
    }

    let (node_labels, node_map) = node_axis.finish();
    let (layer_labels, layer_map) = layer_axis.finish();
    let n = node_labels.len();
    let mut per_layer: Vec<Vec<(usize, usize)>> = vec![Vec::new(); layer_labels.len()];
    for (l, i, j) in edges {
        per_layer[layer_map[l]].push((node_map[i], node_map[j]));
    }
    let layers = per_layer
        .into_iter()
        .map(|e| Layer::from_edges(n, e))
        .collect::<Result<Vec<_>>>()?;
    LabeledStack::new(AdjacencyStack::new(n, layers)?, node_labels, layer_labels)
}

/// Writes `1-based-layer 1-based-source 1-based-target 1` lines.
pub fn write_edges<W: Write>(ls: &LabeledStack, mut out: W) -> std::io::Result<()> {
    for (l, layer) in ls.stack.layers().iter().enumerate() {
        for (i, j) in layer.edges() {
            writeln!(out, "{} {} {} 1", l + 1, i + 1, j + 1)?;
        }
    }
    Ok(())
}

pub fn write_node_table<W: Write>(ls: &LabeledStack, out: W) -> std::io::Result<()> {
    LabelTable::write(&ls.node_labels, "nodeID nodeLabel", out)
}

pub fn write_layer_table<W: Write>(ls: &LabeledStack, out: W) -> std::io::Result<()> {
    LabelTable::write(&ls.layer_labels, "layerID layerLabel", out)
}

/// File names used by [`write_multiplex_dir`] and [`read_multiplex_dir`].
pub const EDGES_FILE: &str = "network.edges";
pub const NODES_FILE: &str = "nodes.txt";
pub const LAYERS_FILE: &str = "layers.txt";

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Writes edge list plus node and layer tables into `dir`.
pub fn write_multiplex_dir(ls: &LabeledStack, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let targets: [(&str, fn(&LabeledStack, &mut BufWriter<File>) -> std::io::Result<()>); 3] = [
        (EDGES_FILE, |ls, w| write_edges(ls, w)),
        (NODES_FILE, |ls, w| write_node_table(ls, w)),
        (LAYERS_FILE, |ls, w| write_layer_table(ls, w)),
    ];
    for (name, write) in targets {
        let path = dir.join(name);
        let mut w = create(&path)?;
        write(ls, &mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Reads an edge file with optional node and layer tables.
pub fn read_multiplex(edges: &Path, nodes: Option<&Path>, layers: Option<&Path>) -> Result<LabeledStack> {
    let nodes = nodes.map(LabelTable::from_path).transpose()?;
    let layers = layers.map(LabelTable::from_path).transpose()?;
    let file = File::open(edges).map_err(|e| Error::io(edges, e))?;
    parse_multiplex_edges(BufReader::new(file), nodes.as_ref(), layers.as_ref())
}

pub fn read_multiplex_dir(dir: &Path) -> Result<LabeledStack> {
    read_multiplex(
        &dir.join(EDGES_FILE),
        Some(&dir.join(NODES_FILE)),
        Some(&dir.join(LAYERS_FILE)),
    )
}

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, RecordError, Result};
use crate::jsonl;

use super::normalize::normalize_answer;

/// A single-rooted tree of words given as a child → parent map.
/// Node names are normalized like answers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaxonomyTree {
    parent: HashMap<String, String>,
    depth: HashMap<String, usize>,
    root: String,
}

impl TaxonomyTree {
    /// Build from `(node, parent)` edges. A node with no parent entry that is
    /// named as some other node's parent is the root; there must be exactly
    /// one. Self-loops, conflicting parents and cycles are rejected.
    pub fn from_edges<S: AsRef<str>>(edges: impl IntoIterator<Item = (S, S)>) -> Result<Self> {
        let mut parent: BTreeMap<String, String> = BTreeMap::new();
        for (node, par) in edges {
            let (node, par) = (normalize_answer(node.as_ref()), normalize_answer(par.as_ref()));
            if node.is_empty() || par.is_empty() {
                return Err(Error::Taxonomy("empty node name".into()));
            }
            if node == par {
                return Err(Error::Taxonomy(format!("{node:?} is its own parent")));
            }
            if let Some(old) = parent.get(&node) {
                if *old != par {
                    return Err(Error::Taxonomy(format!(
                        "{node:?} has two parents: {old:?} and {par:?}"
                    )));
                }
            }
            parent.insert(node, par);
        }
        let roots: Vec<&String> = {
            let mut r: Vec<&String> = parent.values().filter(|p| !parent.contains_key(*p)).collect();
            r.sort();
            r.dedup();
            r
        };
        let root = match roots.as_slice() {
            [root] => (*root).clone(),
            [] => return Err(Error::Taxonomy("no root (every node has a parent)".into())),
            many => {
                return Err(Error::Taxonomy(format!(
                    "{} roots: {}",
                    many.len(),
                    many.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
                )))
            }
        };

        let mut depth: HashMap<String, usize> = HashMap::with_capacity(parent.len() + 1);
        depth.insert(root.clone(), 1);
        for start in parent.keys() {
            let mut path = Vec::new();
            let mut on_path = HashSet::new();
            let mut cur = start;
            let base = loop {
                if let Some(&d) = depth.get(cur) {
                    break d;
                }
                if !on_path.insert(cur) {
                    return Err(Error::Taxonomy(format!("cycle through {cur:?}")));
                }
                path.push(cur);
                cur = &parent[cur];
            };
            for (i, node) in path.iter().rev().enumerate() {
                depth.insert((*node).clone(), base + i + 1);
            }
        }
        Ok(TaxonomyTree {
            parent: parent.into_iter().collect(),
            depth,
            root,
        })
    }

    /// Read a `node<TAB>parent` file. Blank lines and `#` comments are
    /// ignored; a line holding only a node name declares it a root.
    pub fn read(reader: impl BufRead) -> Result<Self, RecordError> {
        let mut edges = Vec::new();
        let mut declared_roots = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| RecordError {
                line: line_no,
                message: e.to_string(),
            })?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            match line.split_once('\t') {
                Some((node, par)) if !par.trim().is_empty() => {
                    edges.push((node.trim().to_string(), par.trim().to_string()))
                }
                _ => declared_roots.push((line_no, trimmed.to_string())),
            }
        }
        let tree = TaxonomyTree::from_edges(edges).map_err(|e| RecordError {
            line: 0,
            message: e.to_string(),
        })?;
        for (line, name) in declared_roots {
            if normalize_answer(&name) != tree.root {
                return Err(RecordError {
                    line,
                    message: format!("{name:?} declared as root but the root is {:?}", tree.root),
                });
            }
        }
        Ok(tree)
    }

    pub fn load(path: &Path) -> Result<Self> {
        TaxonomyTree::read(jsonl::open(path)?).map_err(|source| Error::Record {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    pub fn len(&self) -> usize {
        self.depth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.depth.is_empty()
    }

    pub fn contains(&self, node: &str) -> bool {
        self.depth.contains_key(node)
    }

    /// Depth of a node, with the root at depth 1.
    pub fn depth(&self, node: &str) -> Option<usize> {
        self.depth.get(node).copied()
    }

    pub fn parent(&self, node: &str) -> Option<&str> {
        self.parent.get(node).map(String::as_str)
    }

    /// Lowest common ancestor of two nodes.
    pub fn lca<'a>(&'a self, a: &'a str, b: &'a str) -> Option<&'a str> {
        let (mut a, mut b) = (self.key(a)?, self.key(b)?);
        let (mut da, mut db) = (self.depth[a], self.depth[b]);
        while da > db {
            a = &self.parent[a];
            da -= 1;
        }
        while db > da {
            b = &self.parent[b];
            db -= 1;
        }
        while a != b {
            a = &self.parent[a];
            b = &self.parent[b];
        }
        Some(a)
    }

    fn key(&self, node: &str) -> Option<&String> {
        self.depth.get_key_value(node).map(|(k, _)| k)
    }
}

/// Wu-Palmer similarity `2·depth(lca) / (depth(a) + depth(b))`, or `None`
/// when either node is missing.
pub fn wup(tree: &TaxonomyTree, a: &str, b: &str) -> Option<f64> {
    let lca = tree.lca(a, b)?;
    let (da, db, dl) = (tree.depth(a)?, tree.depth(b)?, tree.depth(lca)?);
    Some(2.0 * dl as f64 / (da + db) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn animals() -> TaxonomyTree {
        TaxonomyTree::from_edges([
            ("animal", "entity"),
            ("cat", "animal"),
            ("dog", "animal"),
            ("vehicle", "entity"),
            ("car", "vehicle"),
        ])
        .unwrap()
    }

    #[test]
    fn depths() {
        let t = animals();
        assert_eq!(t.root(), "entity");
        assert_eq!(t.depth("entity"), Some(1));
        assert_eq!(t.depth("cat"), Some(3));
        assert_eq!(t.len(), 6);
    }

    #[test]
    fn wup_examples() {
        let t = animals();
        assert_eq!(wup(&t, "cat", "cat"), Some(1.0));
        assert_eq!(wup(&t, "cat", "dog"), Some(2.0 * 2.0 / 6.0));
        assert_eq!(wup(&t, "entity", "cat"), Some(0.5));
        assert_eq!(wup(&t, "cat", "car"), Some(2.0 / 6.0));
        assert_eq!(wup(&t, "cat", "unicorn"), None);
    }

    #[test]
    fn rejects_bad_trees() {
        assert!(TaxonomyTree::from_edges([("a", "b"), ("b", "a")]).is_err());
        assert!(TaxonomyTree::from_edges([("a", "r1"), ("b", "r2")]).is_err());
        assert!(TaxonomyTree::from_edges([("a", "a")]).is_err());
        assert!(TaxonomyTree::from_edges([("a", "r"), ("a", "s")]).is_err());
        // cycle hanging off a valid root
        assert!(TaxonomyTree::from_edges([("a", "r"), ("b", "c"), ("c", "b")]).is_err());
    }

    #[test]
    fn reads_tab_file() {
        let text = "# test\nentity\nanimal\tentity\ncats\tanimal\n\n";
        let t = TaxonomyTree::read(text.as_bytes()).unwrap();
        assert_eq!(t.depth("cat"), Some(3));
        let err = TaxonomyTree::read("animal\tentity\nthing\n".as_bytes()).unwrap_err();
        assert_eq!(err.line, 2);
    }
}

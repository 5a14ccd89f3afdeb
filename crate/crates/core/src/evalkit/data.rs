use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use crate::error::{Error, Result};

/// The nine KU-PCP composition classes.
pub const KUPCP_CLASSES: [&str; 9] = [
    "RuleOfThirds",
    "Center",
    "Horizontal",
    "Symmetric",
    "Diagonal",
    "Curved",
    "Vertical",
    "Triangle",
    "Pattern",
];

fn class_key(name: &str) -> String {
    name.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

/// Canonical spelling of a KU-PCP class. Matching ignores case and
/// punctuation, so `rule-of-thirds` and `RULE_OF_THIRDS` both resolve.
pub fn canonical_class(name: &str) -> Option<&'static str> {
    let key = class_key(name);
    KUPCP_CLASSES.iter().copied().find(|c| class_key(c) == key)
}

/// Embedding vectors keyed by id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Embeddings {
    pub dim: usize,
    pub rows: BTreeMap<String, Vec<f64>>,
}

/// `id,v1,...,vD` lines. Blank lines are skipped.
pub fn parse_embeddings(text: &str) -> Result<Embeddings> {
    let mut out = Embeddings::default();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let id = parts.next().unwrap_or_default().trim();
        if id.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                reason: "empty id".into(),
            });
        }
        let values = parts
            .map(|p| {
                let p = p.trim();
                p.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        line: line_no,
                        reason: format!("not a finite number: '{p}'"),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                reason: format!("id '{id}' has no values"),
            });
        }
        if out.rows.is_empty() {
            out.dim = values.len();
        } else if values.len() != out.dim {
            return Err(Error::RaggedRow {
                line: line_no,
                expected: out.dim,
                found: values.len(),
            });
        }
        if out.rows.insert(id.to_string(), values).is_some() {
            return Err(Error::DuplicateId(id.to_string()));
        }
    }
    Ok(out)
}

pub fn load_embeddings(path: &Path) -> Result<Embeddings> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(&text)
}

/// Composition and semantic labels of one image, in file order without
/// duplicates.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabelSet {
    pub composition: Vec<String>,
    pub semantic: Vec<String>,
}

pub type Labels = BTreeMap<String, LabelSet>;

fn split_names(field: &str) -> Vec<String> {
    let mut seen = HashSet::new();
    field
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .filter(|s| seen.insert(s.to_string()))
        .map(str::to_string)
        .collect()
}

/// `id<TAB>comp;comp<TAB>sem;sem` lines; the semantic column may be empty
/// or absent. Unless `free_classes` is set, composition names must be
/// KU-PCP classes and are stored in canonical spelling.
pub fn parse_labels(text: &str, free_classes: bool) -> Result<Labels> {
    let mut out = Labels::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 2 || cols.len() > 3 {
            return Err(Error::Parse {
                line: line_no,
                reason: format!("expected 2 or 3 tab-separated columns, found {}", cols.len()),
            });
        }
        let id = cols[0].trim();
        if id.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                reason: "empty id".into(),
            });
        }
        let mut composition = split_names(cols[1]);
        if composition.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                reason: format!("empty composition set for '{id}'"),
            });
        }
        if !free_classes {
            composition = composition
                .into_iter()
                .map(|c| {
                    canonical_class(&c)
                        .map(str::to_string)
                        .ok_or(Error::UnknownClass {
                            line: line_no,
                            name: c,
                        })
                })
                .collect::<Result<_>>()?;
            let mut seen = HashSet::new();
            composition.retain(|c| seen.insert(c.clone()));
        }
        let semantic = cols.get(2).map(|s| split_names(s)).unwrap_or_default();
        let labels = LabelSet {
            composition,
            semantic,
        };
        if out.insert(id.to_string(), labels).is_some() {
            return Err(Error::DuplicateId(id.to_string()));
        }
    }
    Ok(out)
}

pub fn load_labels(path: &Path, free_classes: bool) -> Result<Labels> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labels(&text, free_classes)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub id: String,
    pub embedding: Vec<f64>,
    pub labels: LabelSet,
}

impl Entry {
    pub fn shares_composition(&self, other: &Entry) -> bool {
        self.labels
            .composition
            .iter()
            .any(|c| other.labels.composition.contains(c))
    }

    pub fn shares_semantic(&self, other: &Entry) -> bool {
        self.labels
            .semantic
            .iter()
            .any(|c| other.labels.semantic.contains(c))
    }

    /// First listed composition class, used as the cluster label.
    pub fn primary_class(&self) -> &str {
        &self.labels.composition[0]
    }
}

/// Labeled embeddings sorted by id.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledEmbeddingSet {
    entries: Vec<Entry>,
    dim: usize,
}

impl LabeledEmbeddingSet {
    pub fn new(mut entries: Vec<Entry>) -> Result<Self> {
        let first = entries.first().ok_or(Error::Empty("labeled embedding set"))?;
        let dim = first.embedding.len();
        let mut ids = HashSet::new();
        for e in &entries {
            if e.embedding.len() != dim {
                return Err(Error::DimensionMismatch(dim, e.embedding.len()));
            }
            if !ids.insert(e.id.clone()) {
                return Err(Error::DuplicateId(e.id.clone()));
            }
            if e.labels.composition.is_empty() {
                return Err(Error::InvalidParameter(format!(
                    "'{}' has no composition label",
                    e.id
                )));
            }
        }
        entries.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(Self { entries, dim })
    }

    /// Inner join on id. Ids present on only one side are logged and
    /// dropped.
    pub fn join(embeddings: &Embeddings, labels: &Labels) -> Result<Self> {
        let mut entries = Vec::new();
        for (id, v) in &embeddings.rows {
            match labels.get(id) {
                Some(l) => entries.push(Entry {
                    id: id.clone(),
                    embedding: v.clone(),
                    labels: l.clone(),
                }),
                None => log::warn!("embedding '{id}' has no labels; skipped"),
            }
        }
        for id in labels.keys().filter(|id| !embeddings.rows.contains_key(*id)) {
            log::warn!("label '{id}' has no embedding; skipped");
        }
        Self::new(entries)
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embeddings_parse() {
        let e = parse_embeddings("a,1,2,3\nb,4,5,6\n").unwrap();
        assert_eq!((e.rows.len(), e.dim), (2, 3));
        assert_eq!(e.rows["b"], vec![4.0, 5.0, 6.0]);
    }

    #[test]
    fn embeddings_errors() {
        match parse_embeddings("a,1,2\na,3,4") {
            Err(Error::DuplicateId(id)) => assert_eq!(id, "a"),
            other => panic!("{other:?}"),
        }
        match parse_embeddings("a,1,2,3,4\nb,1,2,3") {
            Err(Error::RaggedRow {
                line: 2,
                expected: 4,
                found: 3,
            }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_embeddings("a,1,x"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(parse_embeddings("a,1,NaN").is_err());
        assert!(parse_embeddings("a").is_err());
    }

    #[test]
    fn labels_parse() {
        let l = parse_labels("img1\tCenter;Horizontal\tperson\nimg3\tvertical\t\n", false).unwrap();
        assert_eq!(l["img1"].composition, vec!["Center", "Horizontal"]);
        assert_eq!(l["img1"].semantic, vec!["person"]);
        assert_eq!(l["img3"].composition, vec!["Vertical"]);
        assert!(l["img3"].semantic.is_empty());
        let l = parse_labels("x\trule-of-thirds", false).unwrap();
        assert_eq!(l["x"].composition, vec!["RuleOfThirds"]);
    }

    #[test]
    fn labels_errors() {
        assert!(matches!(
            parse_labels("img2\t\t", false),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_labels("a\tCenter\nb\tSpiral", false),
            Err(Error::UnknownClass { line: 2, .. })
        ));
        assert!(parse_labels("b\tSpiral", true).is_ok());
        assert!(parse_labels("only-id", false).is_err());
        assert!(matches!(
            parse_labels("a\tCenter\na\tPattern", false),
            Err(Error::DuplicateId(_))
        ));
    }

    #[test]
    fn join_sorts_and_drops_unmatched() {
        let e = parse_embeddings("z,1\nb,2\nq,3").unwrap();
        let l = parse_labels("b\tCenter\nz\tPattern\nw\tCenter", false).unwrap();
        let set = LabeledEmbeddingSet::join(&e, &l).unwrap();
        let ids: Vec<&str> = set.entries().iter().map(|e| e.id.as_str()).collect();
        assert_eq!(ids, vec!["b", "z"]);
        assert_eq!(set.dim(), 1);
    }
}

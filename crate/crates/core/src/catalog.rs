//! Condition vocabulary and clinical metadata.
//!
//! A catalog is loaded from a flat structured-text file made of blank-line
//! separated records. Each record is a sequence of `key: value` lines and
//! describes either a disease category or a condition:
//!
//! ```text
//! category: Htn
//! label: Hypertension
//!
//! category: Compl
//! label: Complications
//! complication: true
//!
//! condition: htn.dx
//! label: Hypertension diagnosis
//! kind: diagnosis
//! category: Htn
//! defining_measures: sbp, dbp
//!
//! condition: htn.tx
//! label: Hypertension treatment
//! kind: treatment
//! category: Htn
//! treats: htn.dx
//! ```
//!
//! Lines starting with `#` are comments. `severity_rank` orders conditions
//! within a progression chain (same category and kind); `defining_measures`
//! lists the labs/vitals that define a diagnosis; `treats` names the
//! diagnosis a treatment targets. The default catalog shipped with the crate
//! covers the T2DM vocabulary (obesity, hyperlipidemia, hypertension,
//! diabetes and complications).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

/// What a condition token denotes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConditionKind {
    Lab,
    Vital,
    Diagnosis,
    Treatment,
    Demographic,
}

impl ConditionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ConditionKind::Lab => "lab",
            ConditionKind::Vital => "vital",
            ConditionKind::Diagnosis => "diagnosis",
            ConditionKind::Treatment => "treatment",
            ConditionKind::Demographic => "demographic",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "lab" => Some(ConditionKind::Lab),
            "vital" => Some(ConditionKind::Vital),
            "diagnosis" => Some(ConditionKind::Diagnosis),
            "treatment" => Some(ConditionKind::Treatment),
            "demographic" => Some(ConditionKind::Demographic),
            _ => None,
        }
    }

    /// Labs and vitals are the measures that may define a diagnosis.
    pub fn is_measure(self) -> bool {
        matches!(self, ConditionKind::Lab | ConditionKind::Vital)
    }
}

impl fmt::Display for ConditionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One entry of the condition vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionDef {
    pub id: String,
    pub label: String,
    pub kind: ConditionKind,
    pub category: String,
    /// Position within a progression chain; higher is worse.
    pub severity_rank: Option<u32>,
    /// Labs/vitals that define this diagnosis.
    pub defining_measures: Vec<String>,
    /// For treatments: the diagnosis being treated.
    pub treats: Option<String>,
}

/// A disease category.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryDef {
    pub id: String,
    pub label: String,
    /// Downstream complication categories get special handling in H1.
    pub complication: bool,
}

/// Validated condition vocabulary plus category metadata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionCatalog {
    conditions: Vec<ConditionDef>,
    categories: Vec<CategoryDef>,
    index: HashMap<String, usize>,
}

impl ConditionCatalog {
    /// Builds and validates a catalog from parts.
    pub fn new(conditions: Vec<ConditionDef>, categories: Vec<CategoryDef>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, c) in conditions.iter().enumerate() {
            if index.insert(c.id.clone(), i).is_some() {
                return Err(Error::Catalog(format!("duplicate condition id `{}`", c.id)));
            }
        }
        let catalog = ConditionCatalog {
            conditions,
            categories,
            index,
        };
        catalog.validate()?;
        Ok(catalog)
    }

    /// The catalog shipped with the crate (T2DM vocabulary).
    pub fn default_catalog() -> Self {
        parse_catalog_str(DEFAULT_CATALOG, "<builtin>").expect("builtin catalog is valid")
    }

    pub fn conditions(&self) -> &[ConditionDef] {
        &self.conditions
    }

    pub fn categories(&self) -> &[CategoryDef] {
        &self.categories
    }

    /// Categories regarded as downstream complications.
    pub fn complication_categories(&self) -> HashSet<&str> {
        self.categories
            .iter()
            .filter(|c| c.complication)
            .map(|c| c.id.as_str())
            .collect()
    }

    pub fn get(&self, id: &str) -> Option<&ConditionDef> {
        self.index.get(id).map(|&i| &self.conditions[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    /// Owning disease category of a condition.
    pub fn category_of(&self, id: &str) -> Result<&str> {
        self.get(id)
            .map(|c| c.category.as_str())
            .ok_or_else(|| Error::UnknownCondition(id.to_string()))
    }

    /// Ids of all non-demographic conditions, in catalog order.
    pub fn condition_ids(&self) -> Vec<String> {
        self.conditions
            .iter()
            .filter(|c| c.kind != ConditionKind::Demographic)
            .map(|c| c.id.clone())
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let category_ids: HashSet<&str> = self.categories.iter().map(|c| c.id.as_str()).collect();
        if category_ids.len() != self.categories.len() {
            return Err(Error::Catalog("duplicate category id".into()));
        }
        let mut rank_seen: HashMap<(&str, ConditionKind), HashSet<u32>> = HashMap::new();
        for c in &self.conditions {
            if !category_ids.contains(c.category.as_str()) {
                return Err(Error::Catalog(format!(
                    "condition `{}` references unknown category `{}`",
                    c.id, c.category
                )));
            }
            for m in &c.defining_measures {
                match self.get(m) {
                    None => {
                        return Err(Error::Catalog(format!(
                            "condition `{}`: defining measure `{}` does not exist",
                            c.id, m
                        )))
                    }
                    Some(def) if !def.kind.is_measure() => {
                        return Err(Error::Catalog(format!(
                            "condition `{}`: defining measure `{}` is a {}, not a lab or vital",
                            c.id, m, def.kind
                        )))
                    }
                    _ => {}
                }
            }
            if let Some(t) = &c.treats {
                match self.get(t) {
                    None => {
                        return Err(Error::Catalog(format!(
                            "condition `{}`: treats unknown condition `{}`",
                            c.id, t
                        )))
                    }
                    Some(def) if def.kind != ConditionKind::Diagnosis => {
                        return Err(Error::Catalog(format!(
                            "condition `{}`: treats `{}` which is a {}, not a diagnosis",
                            c.id, t, def.kind
                        )))
                    }
                    _ => {}
                }
            }
            if let Some(rank) = c.severity_rank {
                let set = rank_seen.entry((c.category.as_str(), c.kind)).or_default();
                if !set.insert(rank) {
                    return Err(Error::Catalog(format!(
                        "condition `{}`: severity_rank {} duplicated within ({}, {})",
                        c.id, rank, c.category, c.kind
                    )));
                }
            }
        }
        Ok(())
    }

    /// Renders the catalog in its file format. Parsing the output yields an
    /// identical catalog.
    pub fn to_catalog_string(&self) -> String {
        let mut out = String::new();
        for cat in &self.categories {
            out.push_str(&format!("category: {}\nlabel: {}\n", cat.id, cat.label));
            if cat.complication {
                out.push_str("complication: true\n");
            }
            out.push('\n');
        }
        for c in &self.conditions {
            out.push_str(&format!(
                "condition: {}\nlabel: {}\nkind: {}\ncategory: {}\n",
                c.id, c.label, c.kind, c.category
            ));
            if let Some(r) = c.severity_rank {
                out.push_str(&format!("severity_rank: {r}\n"));
            }
            if !c.defining_measures.is_empty() {
                out.push_str(&format!(
                    "defining_measures: {}\n",
                    c.defining_measures.join(", ")
                ));
            }
            if let Some(t) = &c.treats {
                out.push_str(&format!("treats: {t}\n"));
            }
            out.push('\n');
        }
        out
    }
}

/// Loads and validates a catalog file.
pub fn load_catalog(path: impl AsRef<Path>) -> Result<ConditionCatalog> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_catalog_str(&text, &path.display().to_string())
}

/// Parses catalog text; `source` is used in error messages.
pub fn parse_catalog_str(text: &str, source: &str) -> Result<ConditionCatalog> {
    let mut categories = Vec::new();
    let mut conditions = Vec::new();

    for record in records(text, source)? {
        let Record { start_line, fields } = record;
        let lookup = |key: &str| -> Option<&str> {
            fields
                .iter()
                .find(|(k, _, _)| k == key)
                .map(|(_, v, _)| v.as_str())
        };
        let record_kind = fields[0].0.as_str();
        let known: &[&str] = match record_kind {
            "category" => &["category", "label", "complication"],
            "condition" => &[
                "condition",
                "label",
                "kind",
                "category",
                "severity_rank",
                "defining_measures",
                "treats",
            ],
            _ => {
                return Err(Error::parse(
                    source,
                    start_line,
                    "record must start with `category:` or `condition:`",
                ))
            }
        };
        for (k, _, line) in &fields {
            if !known.contains(&k.as_str()) {
                return Err(Error::parse(source, *line, format!("unknown key `{k}`")));
            }
        }

        if record_kind == "category" {
            let id = lookup("category").unwrap();
            let complication = match lookup("complication") {
                None => false,
                Some("true") => true,
                Some("false") => false,
                Some(other) => {
                    return Err(Error::parse(
                        source,
                        start_line,
                        format!("complication must be true or false, got `{other}`"),
                    ))
                }
            };
            categories.push(CategoryDef {
                id: id.to_string(),
                label: lookup("label").unwrap_or(id).to_string(),
                complication,
            });
        } else {
            let id = lookup("condition").unwrap();
            let kind_str = lookup("kind")
                .ok_or_else(|| Error::parse(source, start_line, format!("condition `{id}` is missing kind")))?;
            let kind = ConditionKind::parse(kind_str).ok_or_else(|| {
                Error::parse(source, start_line, format!("unknown kind `{kind_str}`"))
            })?;
            let category = lookup("category").ok_or_else(|| {
                Error::parse(source, start_line, format!("condition `{id}` is missing category"))
            })?;
            let severity_rank = match lookup("severity_rank") {
                None => None,
                Some(v) => Some(v.parse::<u32>().map_err(|_| {
                    Error::parse(source, start_line, format!("bad severity_rank `{v}`"))
                })?),
            };
            let defining_measures = lookup("defining_measures")
                .map(|v| {
                    v.split(',')
                        .map(|s| s.trim().to_string())
                        .filter(|s| !s.is_empty())
                        .collect()
                })
                .unwrap_or_default();
            conditions.push(ConditionDef {
                id: id.to_string(),
                label: lookup("label").unwrap_or(id).to_string(),
                kind,
                category: category.to_string(),
                severity_rank,
                defining_measures,
                treats: lookup("treats").map(|s| s.to_string()),
            });
        } else {
            return Err(Error::parse(
                source,
                start_line,
                "record must start with `category:` or `condition:`",
            ));
        }
    }

    ConditionCatalog::new(conditions, categories)
}

struct Record {
    start_line: usize,
    fields: Vec<(String, String, usize)>,
}

fn records(text: &str, source: &str) -> Result<Vec<Record>> {
    let mut out: Vec<Record> = Vec::new();
    let mut current: Vec<(String, String, usize)> = Vec::new();
    let mut start = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            if !current.is_empty() {
                out.push(Record {
                    start_line: start,
                    fields: std::mem::take(&mut current),
                });
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once(':')
            .ok_or_else(|| Error::parse(source, lineno, "expected `key: value`"))?;
        if current.is_empty() {
            start = lineno;
        }
        current.push((key.trim().to_string(), value.trim().to_string(), lineno));
    }
    if !current.is_empty() {
        out.push(Record {
            start_line: start,
            fields: current,
        });
    }
    Ok(out)
}

/// Severity chains: ranked conditions grouped by (category, kind), each group
/// sorted by rank. Used by the H1 heuristic.
pub fn severity_chains(catalog: &ConditionCatalog) -> Vec<Vec<&ConditionDef>> {
    let mut groups: BTreeMap<(&str, &str), Vec<&ConditionDef>> = BTreeMap::new();
    for c in catalog.conditions() {
        if c.severity_rank.is_some() {
            groups
                .entry((c.category.as_str(), c.kind.as_str()))
                .or_default()
                .push(c);
        }
    }
    let mut chains: Vec<Vec<&ConditionDef>> = groups.into_values().collect();
    for chain in &mut chains {
        chain.sort_by_key(|c| c.severity_rank.unwrap());
    }
    chains
}

const DEFAULT_CATALOG: &str = include_str!("../assets/default.catalog");

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_catalog_matches_vocabulary() {
        let cat = ConditionCatalog::default_catalog();
        assert_eq!(cat.conditions().len(), 25);
        assert_eq!(cat.categories().len(), 5);
        let ob: Vec<&str> = cat
            .conditions()
            .iter()
            .filter(|c| c.category == "Ob")
            .map(|c| c.id.as_str())
            .collect();
        assert_eq!(ob, vec!["bmi.25", "bmi.30", "ob.dx"]);
        let compl: Vec<&str> = cat
            .conditions()
            .iter()
            .filter(|c| c.category == "Compl")
            .map(|c| c.id.as_str())
            .collect();
        assert_eq!(compl, vec!["cad", "cevd", "chf", "crf", "mi", "stroke"]);
        assert_eq!(cat.complication_categories(), ["Compl"].into_iter().collect());
    }

    #[test]
    fn category_lookups() {
        let cat = ConditionCatalog::default_catalog();
        assert_eq!(cat.category_of("bmi.25").unwrap(), "Ob");
        assert_eq!(cat.category_of("stroke").unwrap(), "Compl");
        assert!(matches!(
            cat.category_of("xyz"),
            Err(Error::UnknownCondition(_))
        ));
    }

    #[test]
    fn empty_catalog_is_valid() {
        let cat = parse_catalog_str("category: X\nlabel: X\n", "<test>").unwrap();
        assert!(cat.conditions().is_empty());
        let cat = parse_catalog_str("", "<test>").unwrap();
        assert!(cat.conditions().is_empty());
    }

    #[test]
    fn dangling_treats_is_rejected() {
        let text = "\
category: Hl
label: Hyperlipidemia

condition: hl.tx
label: t
kind: treatment
category: Hl
treats: nonexistent.dx
";
        let err = parse_catalog_str(text, "<test>").unwrap_err();
        assert!(err.to_string().contains("nonexistent.dx"), "{err}");
    }

    #[test]
    fn dangling_measure_and_bad_kinds_rejected() {
        let base = "\
category: C
label: C

condition: a.dx
label: a
kind: diagnosis
category: C
defining_measures: missing
";
        assert!(parse_catalog_str(base, "<test>").is_err());

        // A diagnosis may not be a defining measure.
        let text = "\
category: C
label: C

condition: b.dx
label: b
kind: diagnosis
category: C

condition: a.dx
label: a
kind: diagnosis
category: C
defining_measures: b.dx
";
        assert!(parse_catalog_str(text, "<test>").is_err());
    }

    #[test]
    fn duplicate_id_rejected() {
        let text = "\
category: C
label: C

condition: a
label: a
kind: lab
category: C

condition: a
label: dup
kind: lab
category: C
";
        let err = parse_catalog_str(text, "<test>").unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn duplicate_rank_within_chain_rejected() {
        let text = "\
category: C
label: C

condition: a
label: a
kind: lab
category: C
severity_rank: 1

condition: b
label: b
kind: lab
category: C
severity_rank: 1
";
        assert!(parse_catalog_str(text, "<test>").is_err());
    }

    #[test]
    fn round_trip() {
        let cat = ConditionCatalog::default_catalog();
        let text = cat.to_catalog_string();
        let back = parse_catalog_str(&text, "<round-trip>").unwrap();
        assert_eq!(cat, back);
    }

    #[test]
    fn severity_chains_are_ordered() {
        let cat = ConditionCatalog::default_catalog();
        let chains = severity_chains(&cat);
        let bmi: Vec<&str> = chains
            .iter()
            .find(|ch| ch.iter().any(|c| c.id == "bmi.25"))
            .unwrap()
            .iter()
            .map(|c| c.id.as_str())
            .collect();
        assert_eq!(bmi, vec!["bmi.25", "bmi.30"]);
    }
}

//! NSL-KDD record schema, attack taxonomy and dataset parsing.
//!
//! NSL-KDD files are headerless CSV: 41 connection features, the attack
//! label, and (in the `+` distributions) a trailing difficulty score.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Nominal,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub name: String,
    pub kind: FeatureKind,
    pub position: usize,
}

/// Column layout of a record. Binary indicator columns are `Numeric`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<FeatureDescriptor>", into = "Vec<FeatureDescriptor>")]
pub struct FeatureSchema {
    features: Vec<FeatureDescriptor>,
}

const NSL_KDD_FEATURES: [&str; 41] = [
    "duration",
    "protocol_type",
    "service",
    "flag",
    "src_bytes",
    "dst_bytes",
    "land",
    "wrong_fragment",
    "urgent",
    "hot",
    "num_failed_logins",
    "logged_in",
    "num_compromised",
    "root_shell",
    "su_attempted",
    "num_root",
    "num_file_creations",
    "num_shells",
    "num_access_files",
    "num_outbound_cmds",
    "is_host_login",
    "is_guest_login",
    "count",
    "srv_count",
    "serror_rate",
    "srv_serror_rate",
    "rerror_rate",
    "srv_rerror_rate",
    "same_srv_rate",
    "diff_srv_rate",
    "srv_diff_host_rate",
    "dst_host_count",
    "dst_host_srv_count",
    "dst_host_same_srv_rate",
    "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate",
    "dst_host_srv_diff_host_rate",
    "dst_host_serror_rate",
    "dst_host_srv_serror_rate",
    "dst_host_rerror_rate",
    "dst_host_srv_rerror_rate",
];

const NOMINAL_FEATURES: [&str; 3] = ["protocol_type", "service", "flag"];

/// The six attributes visible to a software-defined-networking controller.
pub const SDN_FEATURES: [&str; 6] = [
    "duration",
    "protocol_type",
    "src_bytes",
    "dst_bytes",
    "count",
    "srv_count",
];

pub fn builtin_schema() -> FeatureSchema {
    let features = NSL_KDD_FEATURES
        .iter()
        .enumerate()
        .map(|(position, &name)| FeatureDescriptor {
            name: name.to_string(),
            kind: if NOMINAL_FEATURES.contains(&name) {
                FeatureKind::Nominal
            } else {
                FeatureKind::Numeric
            },
            position,
        })
        .collect();
    FeatureSchema { features }
}

impl FeatureSchema {
    /// Validates unique names and gap-free positions `0..n`.
    pub fn new(features: Vec<FeatureDescriptor>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::SchemaMismatch("schema has no features".into()));
        }
        let mut seen = HashSet::new();
        for (i, f) in features.iter().enumerate() {
            if f.position != i {
                return Err(Error::SchemaMismatch(format!(
                    "feature {:?} has position {} but sits at index {i}",
                    f.name, f.position
                )));
            }
            if !seen.insert(f.name.as_str()) {
                return Err(Error::SchemaMismatch(format!(
                    "duplicate feature name {:?}",
                    f.name
                )));
            }
        }
        Ok(FeatureSchema { features })
    }

    pub fn features(&self) -> &[FeatureDescriptor] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn position_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn nominal_count(&self) -> usize {
        self.features
            .iter()
            .filter(|f| f.kind == FeatureKind::Nominal)
            .count()
    }

    /// Sub-schema holding `names`, kept in this schema's column order and renumbered.
    pub fn restrict(&self, names: &[&str]) -> Result<(FeatureSchema, Vec<usize>)> {
        for name in names {
            if self.position_of(name).is_none() {
                return Err(Error::SchemaMismatch(format!(
                    "feature {name:?} is not in the schema"
                )));
            }
        }
        let kept: Vec<usize> = self
            .features
            .iter()
            .filter(|f| names.contains(&f.name.as_str()))
            .map(|f| f.position)
            .collect();
        let features = kept
            .iter()
            .enumerate()
            .map(|(position, &src)| FeatureDescriptor {
                name: self.features[src].name.clone(),
                kind: self.features[src].kind,
                position,
            })
            .collect();
        Ok((FeatureSchema { features }, kept))
    }

    /// SHA-256 over the ordered `name:kind` pairs, hex encoded.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for f in &self.features {
            let kind = match f.kind {
                FeatureKind::Nominal => "nominal",
                FeatureKind::Numeric => "numeric",
            };
            hasher.update(format!("{}:{}\n", f.name, kind).as_bytes());
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

impl TryFrom<Vec<FeatureDescriptor>> for FeatureSchema {
    type Error = Error;

    fn try_from(features: Vec<FeatureDescriptor>) -> Result<Self> {
        FeatureSchema::new(features)
    }
}

impl From<FeatureSchema> for Vec<FeatureDescriptor> {
    fn from(s: FeatureSchema) -> Self {
        s.features
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRecord {
    pub values: Vec<String>,
    pub label: String,
    pub difficulty: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    Normal,
    DoS,
    U2R,
    R2L,
    Probe,
    UnknownAttack,
}

impl Category {
    /// Table order used by reports.
    pub const ALL: [Category; 6] = [
        Category::Normal,
        Category::DoS,
        Category::U2R,
        Category::R2L,
        Category::Probe,
        Category::UnknownAttack,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Normal => "Normal",
            Category::DoS => "DoS",
            Category::U2R => "U2R",
            Category::R2L => "R2L",
            Category::Probe => "Probe",
            Category::UnknownAttack => "UnknownAttack",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown category {s:?}"))
    }
}

/// Maps attack names to their broad category.
#[derive(Debug, Clone)]
pub struct AttackTaxonomy {
    mapping: HashMap<String, Category>,
}

const DOS_ATTACKS: &[&str] = &[
    "back",
    "land",
    "neptune",
    "pod",
    "smurf",
    "teardrop",
    "mailbomb",
    "processtable",
    "udpstorm",
    "apache2",
    "worm",
];
const R2L_ATTACKS: &[&str] = &[
    "ftp_write",
    "guess_passwd",
    "imap",
    "multihop",
    "phf",
    "spy",
    "warezmaster",
    "warezclient",
    "xlock",
    "xsnoop",
    "snmpguess",
    "snmpgetattack",
    "httptunnel",
    "sendmail",
    "named",
];
const U2R_ATTACKS: &[&str] = &[
    "buffer_overflow",
    "loadmodule",
    "perl",
    "rootkit",
    "sqlattack",
    "xterm",
    "ps",
];
const PROBE_ATTACKS: &[&str] = &["ipsweep", "nmap", "portsweep", "satan", "mscan", "saint"];

impl AttackTaxonomy {
    pub fn standard() -> Self {
        let mut mapping = HashMap::new();
        mapping.insert("normal".to_string(), Category::Normal);
        for (names, cat) in [
            (DOS_ATTACKS, Category::DoS),
            (R2L_ATTACKS, Category::R2L),
            (U2R_ATTACKS, Category::U2R),
            (PROBE_ATTACKS, Category::Probe),
        ] {
            for name in names {
                mapping.insert(name.to_string(), cat);
            }
        }
        // misspelling of ftp_write that circulates in published attack tables
        mapping.insert("fpt_erite".to_string(), Category::R2L);
        AttackTaxonomy { mapping }
    }

    pub fn with_entry(mut self, name: &str, category: Category) -> Self {
        self.mapping.insert(normalize_label(name), category);
        self
    }

    pub fn categorize(&self, label: &str) -> Category {
        match self.mapping.get(label) {
            Some(&c) => c,
            None if label == "normal" => Category::Normal,
            None => Category::UnknownAttack,
        }
    }

    pub fn names(&self) -> impl Iterator<Item = (&str, Category)> {
        self.mapping.iter().map(|(k, &v)| (k.as_str(), v))
    }
}

impl Default for AttackTaxonomy {
    fn default() -> Self {
        AttackTaxonomy::standard()
    }
}

pub fn categorize(label: &str, taxonomy: &AttackTaxonomy) -> Category {
    taxonomy.categorize(label)
}

/// 0 for normal traffic, 1 for anything else.
pub fn binarize(label: &str) -> u8 {
    u8::from(label != "normal")
}

/// Lowercases, strips trailing punctuation and maps `-` to `_`.
pub fn normalize_label(raw: &str) -> String {
    raw.trim()
        .trim_end_matches(|c: char| c.is_ascii_punctuation())
        .to_ascii_lowercase()
        .replace('-', "_")
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub schema: FeatureSchema,
    pub records: Vec<RawRecord>,
    pub source: String,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.records.iter().map(|r| binarize(&r.label)).collect()
    }

    pub fn subset(&self, idx: &[usize]) -> LabeledDataset {
        LabeledDataset {
            schema: self.schema.clone(),
            records: idx.iter().map(|&i| self.records[i].clone()).collect(),
            source: self.source.clone(),
        }
    }
}

/// Parses headerless NSL-KDD text. Each non-empty line holds the schema's
/// features, the label, and optionally a difficulty score.
pub fn parse_dataset<R: BufRead>(
    reader: R,
    schema: &FeatureSchema,
    source: &str,
) -> Result<LabeledDataset> {
    let width = schema.len();
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let malformed = || Error::MalformedLine {
            line: line_no,
            expected: format!("{} or {}", width + 1, width + 2),
            found: fields.len(),
        };
        if fields.len() != width + 1 && fields.len() != width + 2 {
            return Err(malformed());
        }
        let label = normalize_label(fields[width]);
        if label.is_empty() {
            return Err(malformed());
        }
        let difficulty = match fields.get(width + 1) {
            Some(d) => Some(d.parse::<u32>().map_err(|_| malformed())?),
            None => None,
        };
        records.push(RawRecord {
            values: fields[..width].iter().map(|s| s.to_string()).collect(),
            label,
            difficulty,
        });
    }
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(LabeledDataset {
        schema: schema.clone(),
        records,
        source: source.to_string(),
    })
}

/// Record counts per category; every category is present, possibly with zero.
pub fn count_by_category(
    ds: &LabeledDataset,
    taxonomy: &AttackTaxonomy,
) -> BTreeMap<Category, usize> {
    let mut counts: BTreeMap<Category, usize> = Category::ALL.iter().map(|&c| (c, 0)).collect();
    for r in &ds.records {
        *counts.entry(taxonomy.categorize(&r.label)).or_default() += 1;
    }
    counts
}

/// Distinct attack names observed, with their counts.
pub fn label_inventory(ds: &LabeledDataset) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for r in &ds.records {
        *out.entry(r.label.clone()).or_default() += 1;
    }
    out
}

/// Which feature set a pipeline consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMode {
    Full,
    Sdn,
}

impl FeatureMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureMode::Full => "full",
            FeatureMode::Sdn => "sdn",
        }
    }

    pub fn schema(self) -> FeatureSchema {
        match self {
            FeatureMode::Full => builtin_schema(),
            FeatureMode::Sdn => {
                builtin_schema()
                    .restrict(&SDN_FEATURES)
                    .expect("SDN features are part of the builtin schema")
                    .0
            }
        }
    }
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(FeatureMode::Full),
            "sdn" => Ok(FeatureMode::Sdn),
            _ => Err(format!("unknown feature mode {s:?} (expected full or sdn)")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(label: &str, extra: Option<&str>) -> String {
        let mut fields: Vec<String> = (0..41)
            .map(|i| match i {
                1 => "tcp".to_string(),
                2 => "http".to_string(),
                3 => "SF".to_string(),
                _ => i.to_string(),
            })
            .collect();
        fields.push(label.to_string());
        if let Some(e) = extra {
            fields.push(e.to_string());
        }
        fields.join(",")
    }

    #[test]
    fn builtin_schema_shape() {
        let s = builtin_schema();
        assert_eq!(s.len(), 41);
        assert_eq!(s.nominal_count(), 3);
        assert_eq!(s.features()[0].name, "duration");
        assert_eq!(s.features()[0].kind, FeatureKind::Numeric);
        for (i, name) in ["protocol_type", "service", "flag"].iter().enumerate() {
            assert_eq!(s.features()[i + 1].name, *name);
            assert_eq!(s.features()[i + 1].kind, FeatureKind::Nominal);
        }
        let names: HashSet<_> = s.features().iter().map(|f| &f.name).collect();
        assert_eq!(names.len(), 41);
    }

    #[test]
    fn parses_43_field_line() {
        let text = line("normal", Some("21"));
        let ds = parse_dataset(text.as_bytes(), &builtin_schema(), "t").unwrap();
        assert_eq!(ds.records[0].label, "normal");
        assert_eq!(ds.records[0].difficulty, Some(21));
        assert_eq!(ds.records[0].values.len(), 41);
    }

    #[test]
    fn normalizes_labels_and_crlf() {
        let text = format!("{}\r\n\r\n{}\r\n", line("Normal.", None), line("guess-passwd", None));
        let ds = parse_dataset(text.as_bytes(), &builtin_schema(), "t").unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.records[0].label, "normal");
        assert_eq!(ds.records[0].difficulty, None);
        assert_eq!(ds.records[1].label, "guess_passwd");
    }

    #[test]
    fn short_line_is_malformed_with_line_number() {
        let text = format!("{}\n1,2,3,4,5,6,7,8,9,10\n", line("normal", None));
        match parse_dataset(text.as_bytes(), &builtin_schema(), "t") {
            Err(Error::MalformedLine { line, found, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(found, 10);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(
            parse_dataset("\n\n".as_bytes(), &builtin_schema(), "t"),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn taxonomy_examples() {
        let t = AttackTaxonomy::standard();
        assert_eq!(t.categorize("neptune"), Category::DoS);
        assert_eq!(t.categorize("normal"), Category::Normal);
        assert_eq!(t.categorize("mscan"), Category::Probe);
        assert_eq!(t.categorize("zzz_novel"), Category::UnknownAttack);
        assert_eq!(t.categorize("warezclient"), Category::R2L);
        assert_eq!(t.categorize(&normalize_label("fpt-erite")), Category::R2L);
        assert_eq!(t.categorize(&normalize_label("buffer-overflow")), Category::U2R);
    }

    #[test]
    fn test_only_attacks_keep_their_rows() {
        let t = AttackTaxonomy::standard();
        for (name, cat) in [
            ("mailbomb", Category::DoS),
            ("processtable", Category::DoS),
            ("udpstorm", Category::DoS),
            ("apache2", Category::DoS),
            ("worm", Category::DoS),
            ("snmpguess", Category::R2L),
            ("snmpgetattack", Category::R2L),
            ("httptunnel", Category::R2L),
            ("sendmail", Category::R2L),
            ("named", Category::R2L),
            ("xlock", Category::R2L),
            ("xsnoop", Category::R2L),
            ("sqlattack", Category::U2R),
            ("xterm", Category::U2R),
            ("ps", Category::U2R),
            ("mscan", Category::Probe),
            ("saint", Category::Probe),
        ] {
            assert_eq!(t.categorize(name), cat, "{name}");
        }
    }

    #[test]
    fn binarize_examples() {
        assert_eq!(binarize("normal"), 0);
        assert_eq!(binarize("smurf"), 1);
        assert_eq!(binarize("zzz_novel"), 1);
    }

    #[test]
    fn binarize_agrees_with_category() {
        let t = AttackTaxonomy::standard();
        for (name, _) in t.names() {
            assert_eq!(binarize(name) == 0, t.categorize(name) == Category::Normal, "{name}");
        }
        assert_eq!(binarize("unheard_of"), 1);
    }

    #[test]
    fn counts_of_empty_dataset_are_zero() {
        let ds = LabeledDataset {
            schema: builtin_schema(),
            records: vec![],
            source: String::new(),
        };
        let c = count_by_category(&ds, &AttackTaxonomy::standard());
        assert_eq!(c.len(), Category::ALL.len());
        assert!(c.values().all(|&v| v == 0));
    }

    #[test]
    fn restrict_to_sdn() {
        let (s, kept) = builtin_schema().restrict(&SDN_FEATURES).unwrap();
        assert_eq!(kept, vec![0, 1, 4, 5, 22, 23]);
        assert_eq!(s.nominal_count(), 1);
        assert_eq!(s.features()[5].position, 5);
        assert!(builtin_schema().restrict(&["nope"]).is_err());
    }

    #[test]
    fn fingerprint_depends_on_layout() {
        let full = builtin_schema();
        let (sdn, _) = full.restrict(&SDN_FEATURES).unwrap();
        assert_eq!(full.fingerprint(), builtin_schema().fingerprint());
        assert_ne!(full.fingerprint(), sdn.fingerprint());
        assert_eq!(full.fingerprint().len(), 64);
    }
}

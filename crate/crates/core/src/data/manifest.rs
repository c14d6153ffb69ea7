use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::features::{extract, FeatureConfig, Image};
use crate::manifold::{ManifoldCase, PoseAngles};

pub const MANIFEST_VERSION: u32 = 1;

const INLINE: &str = "@inline";
const ABSENT: &str = "-";

#[derive(Debug, Clone, PartialEq)]
pub enum Media {
    /// Image path, resolved against the manifest directory.
    Path(PathBuf),
    Inline(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub media: Media,
    pub object_id: String,
    pub category_id: String,
    pub yaw_deg: f64,
    pub pitch_deg: Option<f64>,
    pub roll_deg: Option<f64>,
    pub split: Split,
}

impl Record {
    pub fn pose(&self) -> Result<PoseAngles> {
        PoseAngles::new(
            self.yaw_deg.to_radians(),
            self.pitch_deg.map(f64::to_radians),
            self.roll_deg.map(f64::to_radians),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub manifold_case: ManifoldCase,
    pub feature_config: FeatureConfig,
    pub records: Vec<Record>,
    /// Directory that relative media paths resolve against.
    pub base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn split(&self, split: Split) -> impl Iterator<Item = (usize, &Record)> {
        self.records
            .iter()
            .enumerate()
            .filter(move |(_, r)| r.split == split)
    }

    /// Training record indices grouped by object, objects in order of first
    /// appearance.
    pub fn train_objects(&self) -> Vec<(String, String, Vec<usize>)> {
        let mut order: Vec<(String, String, Vec<usize>)> = Vec::new();
        let mut slot: HashMap<&str, usize> = HashMap::new();
        for (i, r) in self.split(Split::Train) {
            let idx = *slot.entry(r.object_id.as_str()).or_insert_with(|| {
                order.push((r.object_id.clone(), r.category_id.clone(), Vec::new()));
                order.len() - 1
            });
            order[idx].2.push(i);
        }
        order
    }

    /// Feature vector of one record: inline values as stored, images through
    /// the manifest's feature configuration.
    pub fn features(&self, index: usize) -> Result<DVector<f64>> {
        self.features_with(index, &self.feature_config)
    }

    /// Like [`DatasetManifest::features`] with images featurized by `config`.
    pub fn features_with(&self, index: usize, config: &FeatureConfig) -> Result<DVector<f64>> {
        match &self.records[index].media {
            Media::Inline(v) => Ok(DVector::from_column_slice(v)),
            Media::Path(p) => {
                let img = Image::open(self.base_dir.join(p))?;
                Ok(DVector::from_vec(extract(&img, config)?.values))
            }
        }
    }

    pub fn has_inline_records(&self) -> bool {
        self.records.iter().any(|r| matches!(r.media, Media::Inline(_)))
    }

    /// Canonical text form; parsing it gives back an equal manifest.
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for DatasetManifest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "format_version: {MANIFEST_VERSION}")?;
        writeln!(f, "manifold_case: {}", self.manifold_case)?;
        for (k, v) in self.feature_config.header_pairs() {
            writeln!(f, "{k}: {v}")?;
        }
        writeln!(f)?;
        let angle = |a: Option<f64>| a.map_or(ABSENT.to_string(), |v| v.to_string());
        for r in &self.records {
            let mut line = match &r.media {
                Media::Path(p) => p.display().to_string(),
                Media::Inline(_) => INLINE.to_string(),
            };
            let _ = write!(
                line,
                "\t{}\t{}\t{}\t{}\t{}\t{}",
                r.object_id,
                r.category_id,
                r.yaw_deg,
                angle(r.pitch_deg),
                angle(r.roll_deg),
                r.split.as_str()
            );
            if let Media::Inline(v) = &r.media {
                line.push('\t');
                let joined: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                line.push_str(&joined.join(","));
            }
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

/// Reads and validates a manifest; media files must exist.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(Error::read(path))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let manifest = parse_manifest(&text, &base)?;
    for r in &manifest.records {
        if let Media::Path(p) = &r.media {
            let full = manifest.base_dir.join(p);
            if !full.is_file() {
                return Err(Error::MissingMedia(full));
            }
        }
    }
    Ok(manifest)
}

/// Parses manifest text without touching the filesystem.
pub fn parse_manifest(text: &str, base_dir: &Path) -> Result<DatasetManifest> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut header: HashMap<String, String> = HashMap::new();
    let mut last_line = 0;
    for (n, line) in lines.by_ref() {
        last_line = n;
        let line = line.trim();
        if line.is_empty() {
            break;
        }
        if line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once(':').ok_or_else(|| Error::Parse {
            line: n,
            message: "header lines are 'key: value'".into(),
        })?;
        let key = k.trim();
        if !is_header_key(key) {
            return Err(Error::Parse {
                line: n,
                message: format!("unknown header key '{key}'"),
            });
        }
        if header.insert(key.to_string(), v.trim().to_string()).is_some() {
            return Err(Error::Parse {
                line: n,
                message: format!("duplicate header key '{key}'"),
            });
        }
    }
    let header_err = |message: String| Error::Parse {
        line: last_line,
        message,
    };
    let version = header
        .get("format_version")
        .ok_or_else(|| header_err("missing format_version".into()))?;
    if version.parse::<u32>().ok() != Some(MANIFEST_VERSION) {
        return Err(header_err(format!("unsupported format_version '{version}'")));
    }
    let manifold_case: ManifoldCase = header
        .get("manifold_case")
        .ok_or_else(|| header_err("missing manifold_case".into()))?
        .parse()
        .map_err(|e: Error| header_err(e.to_string()))?;
    let feature_config = FeatureConfig::from_header(|k| header.get(k).cloned())
        .map_err(|e| header_err(e.to_string()))?;

    let mut records = Vec::new();
    let mut first_line: HashMap<String, usize> = HashMap::new();
    for (n, line) in lines {
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let record = parse_record(line, n, manifold_case)?;
        first_line.entry(record.object_id.clone()).or_insert(n);
        records.push(record);
    }

    let manifest = DatasetManifest {
        manifold_case,
        feature_config,
        records,
        base_dir: base_dir.to_path_buf(),
    };
    for (object, _, views) in manifest.train_objects() {
        if views.len() < 2 {
            return Err(Error::Parse {
                line: first_line[&object],
                message: format!("training object '{object}' needs at least 2 views"),
            });
        }
    }
    Ok(manifest)
}

fn is_header_key(key: &str) -> bool {
    matches!(
        key,
        "format_version"
            | "manifold_case"
            | "feature.kind"
            | "feature.resize"
            | "feature.grid"
            | "feature.bins"
            | "feature.normalize"
    )
}

fn parse_record(line: &str, n: usize, case: ManifoldCase) -> Result<Record> {
    let parse_err = |message: String| Error::Parse { line: n, message };
    let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
    let inline = cols.first() == Some(&INLINE);
    let expected = if inline { 8 } else { 7 };
    if cols.len() != expected {
        return Err(parse_err(format!(
            "expected {expected} tab-separated columns, found {}",
            cols.len()
        )));
    }
    if cols[1].is_empty() || cols[2].is_empty() {
        return Err(parse_err("object_id and category_id must be non-empty".into()));
    }
    let angles_err = |message: String| Error::InvalidAngles { record: n, message };
    let angle = |s: &str, name: &str| -> Result<Option<f64>> {
        if s == ABSENT || s.is_empty() {
            return Ok(None);
        }
        let v: f64 = s
            .parse()
            .map_err(|_| parse_err(format!("{name} '{s}' is not a number")))?;
        if !v.is_finite() {
            return Err(angles_err(format!("{name} is not finite")));
        }
        Ok(Some(v))
    };
    let yaw = angle(cols[3], "yaw_deg")?
        .ok_or_else(|| angles_err(format!("object '{}' has no yaw", cols[1])))?;
    let pitch = angle(cols[4], "pitch_deg")?;
    let roll = angle(cols[5], "roll_deg")?;

    let needs_pitch = case != ManifoldCase::OneD;
    let needs_roll = case == ManifoldCase::ThreeD;
    for (value, needed, name) in [(pitch, needs_pitch, "pitch_deg"), (roll, needs_roll, "roll_deg")] {
        match (value, needed) {
            (None, true) => {
                return Err(angles_err(format!("{case} manifest needs {name}")));
            }
            (Some(_), false) => {
                return Err(parse_err(format!("{name} given in a {case} manifest")));
            }
            (Some(v), true) if !(-90.0..=90.0).contains(&v) => {
                return Err(angles_err(format!("{name} {v} outside [-90, 90]")));
            }
            _ => {}
        }
    }
    let split = match cols[6] {
        "train" => Split::Train,
        "test" => Split::Test,
        s => return Err(parse_err(format!("split '{s}' is neither train nor test"))),
    };
    let media = if inline {
        let values = cols[7]
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| parse_err("inline features must be comma-separated numbers".into()))?;
        Media::Inline(values)
    } else {
        Media::Path(PathBuf::from(cols[0]))
    };
    Ok(Record {
        media,
        object_id: cols[1].to_string(),
        category_id: cols[2].to_string(),
        yaw_deg: yaw.rem_euclid(360.0),
        pitch_deg: pitch,
        roll_deg: roll,
        split,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "format_version: 1\nmanifold_case: 1D\nfeature.kind: hog\nfeature.resize: 112x112\nfeature.grid: 7\nfeature.bins: 9\nfeature.normalize: l2_global\n\n";

    fn parse(body: &str) -> Result<DatasetManifest> {
        parse_manifest(&format!("{HEADER}{body}"), Path::new("."))
    }

    #[test]
    fn three_records() {
        let m = parse(
            "a.png\tmug\tcup\t0\t-\t-\ttrain\nb.png\tmug\tcup\t90\t-\t-\ttrain\nc.png\tmug\tcup\t45\t-\t-\ttest\n",
        )
        .unwrap();
        assert_eq!(m.records.len(), 3);
        assert_eq!(m.manifold_case, ManifoldCase::OneD);
        assert_eq!(m.train_objects().len(), 1);
    }

    #[test]
    fn missing_yaw_names_the_record() {
        let err = parse("a.png\tmug\tcup\t0\t-\t-\ttrain\nb.png\tmug\tcup\t-\t-\t-\ttrain\n").unwrap_err();
        assert!(matches!(err, Error::InvalidAngles { record: 10, .. }), "{err}");
    }

    #[test]
    fn roll_in_2d_is_a_schema_error() {
        let text = HEADER.replace("1D", "2D")
            + "a.png\tmug\tcup\t0\t10\t5\ttrain\nb.png\tmug\tcup\t90\t10\t-\ttrain\n";
        let err = parse_manifest(&text, Path::new(".")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 9, .. }), "{err}");
    }

    #[test]
    fn out_of_range_pitch() {
        let text = HEADER.replace("1D", "2D")
            + "a.png\tmug\tcup\t0\t95\t-\ttrain\nb.png\tmug\tcup\t90\t10\t-\ttrain\n";
        let err = parse_manifest(&text, Path::new(".")).unwrap_err();
        assert!(matches!(err, Error::InvalidAngles { .. }), "{err}");
    }

    #[test]
    fn single_view_training_object_rejected() {
        let err = parse("a.png\tmug\tcup\t0\t-\t-\ttrain\nb.png\tpot\tcup\t0\t-\t-\ttest\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 9, .. }), "{err}");
    }

    #[test]
    fn unknown_split_and_column_count() {
        assert!(matches!(
            parse("a.png\tmug\tcup\t0\t-\t-\tval\n").unwrap_err(),
            Error::Parse { .. }
        ));
        assert!(matches!(
            parse("a.png\tmug\tcup\t0\t-\ttrain\n").unwrap_err(),
            Error::Parse { .. }
        ));
    }

    #[test]
    fn yaw_wraps_and_text_round_trips() {
        let m = parse(
            "# turntable\n@inline\tmug\tcup\t-30\t-\t-\ttrain\t0.1,0.2,1e-300\n@inline\tmug\tcup\t725.5\t-\t-\ttrain\t0.30000000000000004,-2,3\n",
        )
        .unwrap();
        assert_eq!(m.records[0].yaw_deg, 330.0);
        assert_eq!(m.records[1].yaw_deg, 5.5);
        let again = parse_manifest(&m.to_text(), Path::new(".")).unwrap();
        assert_eq!(again, m);
        assert_eq!(again.features(1).unwrap()[0], 0.30000000000000004);
    }

    #[test]
    fn missing_media_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("set.hma-manifest");
        std::fs::write(
            &path,
            format!("{HEADER}a.png\tmug\tcup\t0\t-\t-\ttrain\nb.png\tmug\tcup\t9\t-\t-\ttrain\n"),
        )
        .unwrap();
        assert!(matches!(load_manifest(&path).unwrap_err(), Error::MissingMedia(_)));
    }
}

//! Single-file model container.
//!
//! Layout: the magic `HMAMODEL`, a little-endian `u32` version, a `u64` header
//! length, a JSON header, the raw little-endian `f64` payloads of the arrays
//! listed in the header (column-major), and a CRC-32 of everything before it.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::classify::LabeledStyleSet;
use crate::error::{Error, Result};
use crate::factor::StyleSpace;
use crate::features::FeatureConfig;
use crate::grbf::{BasisFunction, KernelConfig};
use crate::manifold::{ConceptualPoint, ManifoldCase};

pub const CONTAINER_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"HMAMODEL";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    /// Creation parameters, e.g. the command-line settings used for training.
    pub parameters: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelContainer {
    pub space: StyleSpace,
    pub object_ids: Vec<String>,
    pub category_ids: Vec<String>,
    pub feature_config: FeatureConfig,
    pub provenance: Provenance,
}

impl ModelContainer {
    pub fn new(
        space: StyleSpace,
        object_ids: Vec<String>,
        category_ids: Vec<String>,
        feature_config: FeatureConfig,
        provenance: Provenance,
    ) -> Result<Self> {
        for (what, len) in [("object ids", object_ids.len()), ("category ids", category_ids.len())] {
            if len != space.num_styles() {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: space.num_styles(),
                    found: len,
                });
            }
        }
        Ok(ModelContainer {
            space,
            object_ids,
            category_ids,
            feature_config,
            provenance,
        })
    }

    pub fn manifold_case(&self) -> ManifoldCase {
        self.space.case()
    }

    /// Learned styles labeled by object and category.
    pub fn support(&self) -> Result<LabeledStyleSet> {
        LabeledStyleSet::new(
            (0..self.space.num_styles()).map(|k| self.space.style(k)).collect(),
            self.object_ids.clone(),
            self.category_ids.clone(),
        )
    }

    pub fn object_index(&self, object_id: &str) -> Option<usize> {
        self.object_ids.iter().position(|o| o == object_id)
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    manifold_case: ManifoldCase,
    basis_function: BasisFunction,
    ridge: f64,
    polynomial: bool,
    feature_dim: usize,
    object_ids: Vec<String>,
    category_ids: Vec<String>,
    feature_config: FeatureConfig,
    provenance: Provenance,
    arrays: Vec<ArrayEntry>,
}

#[derive(Serialize, Deserialize)]
struct ArrayEntry {
    name: String,
    rows: usize,
    cols: usize,
}

const ARRAYS: [&str; 4] = ["centers", "basis", "styles", "singular_values"];

pub fn save_model(container: &ModelContainer, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode(container)?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelContainer> {
    let path = path.as_ref();
    decode(&std::fs::read(path).map_err(Error::read(path))?)
}

fn encode(c: &ModelContainer) -> Result<Vec<u8>> {
    let space = &c.space;
    let kernel = space.kernel();
    let e = kernel.embedding_dim();
    let centers = DMatrix::from_fn(e, kernel.num_centers(), |i, j| kernel.centers()[j].coords()[i]);
    let sv = DMatrix::from_column_slice(space.singular_values().len(), 1, space.singular_values());
    let arrays = [&centers, space.basis(), space.styles(), &sv];
    let header = Header {
        manifold_case: space.case(),
        basis_function: kernel.basis(),
        ridge: kernel.ridge(),
        polynomial: kernel.has_polynomial(),
        feature_dim: space.feature_dim(),
        object_ids: c.object_ids.clone(),
        category_ids: c.category_ids.clone(),
        feature_config: c.feature_config,
        provenance: c.provenance.clone(),
        arrays: ARRAYS
            .iter()
            .zip(arrays)
            .map(|(name, a)| ArrayEntry {
                name: name.to_string(),
                rows: a.nrows(),
                cols: a.ncols(),
            })
            .collect(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::CorruptContainer(e.to_string()))?;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&CONTAINER_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for a in arrays {
        for v in a.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

fn decode(bytes: &[u8]) -> Result<ModelContainer> {
    let corrupt = |m: &str| Error::CorruptContainer(m.to_string());
    if bytes.len() < MAGIC.len() + 4 + 8 + 4 {
        return Err(corrupt("file too short"));
    }
    if &bytes[..8] != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != CONTAINER_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
    if crc32fast::hash(body) != stored {
        return Err(corrupt("checksum mismatch"));
    }
    let header_len = u64::from_le_bytes(body[12..20].try_into().expect("8 bytes")) as usize;
    let json = body
        .get(20..20usize.saturating_add(header_len))
        .ok_or_else(|| corrupt("header runs past the end"))?;
    let header: Header =
        serde_json::from_slice(json).map_err(|e| Error::CorruptContainer(format!("header: {e}")))?;

    let mut payload = &body[20 + header_len..];
    let mut arrays = BTreeMap::new();
    for entry in &header.arrays {
        let n = entry.rows.checked_mul(entry.cols).ok_or_else(|| corrupt("array too large"))?;
        let size = n.checked_mul(8).ok_or_else(|| corrupt("array too large"))?;
        if payload.len() < size {
            return Err(corrupt("array payload truncated"));
        }
        let (data, rest) = payload.split_at(size);
        payload = rest;
        let values: Vec<f64> = data
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect();
        arrays.insert(entry.name.as_str(), DMatrix::from_vec(entry.rows, entry.cols, values));
    }
    if !payload.is_empty() {
        return Err(corrupt("trailing bytes after arrays"));
    }
    let mut take = |name: &str| {
        arrays
            .remove(name)
            .ok_or_else(|| Error::CorruptContainer(format!("missing array '{name}'")))
    };
    let centers = take("centers")?;
    let basis = take("basis")?;
    let styles = take("styles")?;
    let sv = take("singular_values")?;

    if centers.nrows() != header.manifold_case.embedding_dim() {
        return Err(corrupt("center dimension disagrees with the manifold case"));
    }
    let centers = (0..centers.ncols())
        .map(|j| ConceptualPoint::new(centers.column(j).iter().copied().collect()))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::CorruptContainer(format!("centers: {e}")))?;
    let kernel = KernelConfig::from_parts(header.basis_function, centers, header.ridge, header.polynomial)
        .map_err(|e| Error::CorruptContainer(format!("kernel: {e}")))?;
    let space = StyleSpace::from_parts(basis, styles, sv.as_slice().to_vec(), kernel, header.feature_dim)
        .map_err(|e| Error::CorruptContainer(format!("style space: {e}")))?;
    ModelContainer::new(
        space,
        header.object_ids,
        header.category_ids,
        header.feature_config,
        header.provenance,
    )
    .map_err(|e| Error::CorruptContainer(e.to_string()))
}

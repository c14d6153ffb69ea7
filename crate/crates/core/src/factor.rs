//! Style/content factorization of mapping coefficients.
//!
//! Every object's `D × N_ψ` coefficient matrix is vectorized column by column
//! and the vectors are stacked side by side. A thin SVD `C = UΣVᵀ` of the
//! stack gives content bases (columns of `UΣ`) and one style vector per object
//! (rows of `V`). The third-order core tensor is kept flattened as the basis
//! matrix, so contracting with a style vector is a matrix-vector product
//! followed by un-vectorizing.

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};
use crate::grbf::{KernelConfig, MappingModel};
use crate::manifold::ManifoldCase;

/// Low-dimensional parameterization of one object's manifold deformation.
pub type StyleVector = DVector<f64>;

pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-8;

/// Retained style dimensionality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StyleDim {
    /// Keep every singular direction (`d_s = K` for tall stacks).
    #[default]
    Full,
    Truncated(usize),
}

impl std::str::FromStr for StyleDim {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "full" {
            return Ok(StyleDim::Full);
        }
        s.parse::<usize>()
            .ok()
            .filter(|d| *d > 0)
            .map(StyleDim::Truncated)
            .ok_or_else(|| Error::InvalidConfig(format!("style dimension '{s}' is not 'full' or a positive integer")))
    }
}

/// Learned content bases and style vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct StyleSpace {
    basis: DMatrix<f64>,
    styles: DMatrix<f64>,
    singular_values: Vec<f64>,
    kernel: KernelConfig,
    feature_dim: usize,
}

impl StyleSpace {
    /// Stacks and factorizes the models of the training objects.
    pub fn learn(models: &[MappingModel], dim: StyleDim) -> Result<Self> {
        let stacked = stack_coefficients(models)?;
        factorize(&stacked, dim, models[0].kernel().clone(), models[0].feature_dim())
    }

    /// Reassembles a space from stored parts, checking shapes.
    pub fn from_parts(
        basis: DMatrix<f64>,
        styles: DMatrix<f64>,
        singular_values: Vec<f64>,
        kernel: KernelConfig,
        feature_dim: usize,
    ) -> Result<Self> {
        let rows = feature_dim * kernel.feature_len();
        if basis.nrows() != rows {
            return Err(Error::DimensionMismatch {
                what: "basis rows",
                expected: rows,
                found: basis.nrows(),
            });
        }
        if styles.nrows() != basis.ncols() {
            return Err(Error::DimensionMismatch {
                what: "style dimension",
                expected: basis.ncols(),
                found: styles.nrows(),
            });
        }
        if singular_values.len() != rows.min(styles.ncols()) {
            return Err(Error::DimensionMismatch {
                what: "singular values",
                expected: rows.min(styles.ncols()),
                found: singular_values.len(),
            });
        }
        Ok(StyleSpace {
            basis,
            styles,
            singular_values,
            kernel,
            feature_dim,
        })
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// `d_s × K`, one style vector per column.
    pub fn styles(&self) -> &DMatrix<f64> {
        &self.styles
    }

    pub fn style(&self, k: usize) -> StyleVector {
        self.styles.column(k).into_owned()
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn kernel(&self) -> &KernelConfig {
        &self.kernel
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn style_dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn num_styles(&self) -> usize {
        self.styles.ncols()
    }

    pub fn case(&self) -> ManifoldCase {
        self.kernel.case()
    }

    /// Root mean square of the style-vector norms.
    pub fn style_norm_rms(&self) -> f64 {
        let k = self.styles.ncols().max(1) as f64;
        (self.styles.iter().map(|v| v * v).sum::<f64>() / k).sqrt()
    }

    /// `unvec(basis · s)`, the `D × N_ψ` coefficient matrix for a style.
    pub fn coefficients_for(&self, s: &StyleVector) -> Result<DMatrix<f64>> {
        if s.len() != self.style_dim() {
            return Err(Error::DimensionMismatch {
                what: "style vector",
                expected: self.style_dim(),
                found: s.len(),
            });
        }
        let v = &self.basis * s;
        Ok(DMatrix::from_column_slice(
            self.feature_dim,
            self.kernel.feature_len(),
            v.as_slice(),
        ))
    }
}

/// Column `k` is `vec(C^k)`: the columns of `C^k` stacked top to bottom.
pub fn stack_coefficients(models: &[MappingModel]) -> Result<DMatrix<f64>> {
    let first = models
        .first()
        .ok_or_else(|| Error::ConfigMismatch("no models to stack".into()))?;
    let rows = first.coefficients().len();
    for (k, m) in models.iter().enumerate() {
        if m.kernel() != first.kernel() {
            return Err(Error::ConfigMismatch(format!("model {k} uses a different kernel")));
        }
        if m.feature_dim() != first.feature_dim() {
            return Err(Error::ConfigMismatch(format!(
                "model {k} has feature dimension {} instead of {}",
                m.feature_dim(),
                first.feature_dim()
            )));
        }
    }
    Ok(DMatrix::from_fn(rows, models.len(), |i, k| {
        models[k].coefficients().as_slice()[i]
    }))
}

/// Inverse of [`stack_coefficients`] for one column.
pub fn unstack_column(stacked: &DMatrix<f64>, k: usize, feature_dim: usize) -> DMatrix<f64> {
    let col = stacked.column(k);
    DMatrix::from_column_slice(feature_dim, stacked.nrows() / feature_dim, col.as_slice())
}

/// Thin SVD of the stacked coefficients.
///
/// Singular triplets are ordered by decreasing singular value, and each left
/// singular vector is signed so its largest-magnitude entry is non-negative.
pub fn factorize(
    stacked: &DMatrix<f64>,
    dim: StyleDim,
    kernel: KernelConfig,
    feature_dim: usize,
) -> Result<StyleSpace> {
    let (rows, k) = stacked.shape();
    if rows != feature_dim * kernel.feature_len() {
        return Err(Error::DimensionMismatch {
            what: "stacked rows",
            expected: feature_dim * kernel.feature_len(),
            found: rows,
        });
    }
    if stacked.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure("stacked coefficients are not finite".into()));
    }
    let rank_cap = rows.min(k);
    let d = match dim {
        StyleDim::Full => rank_cap,
        StyleDim::Truncated(d) if d >= 1 && d <= rank_cap => d,
        StyleDim::Truncated(d) => {
            return Err(Error::InvalidConfig(format!(
                "style dimension {d} outside 1..={rank_cap}"
            )))
        }
    };

    let (u, sigma, vt) = sorted_svd(stacked)?;
    let basis = DMatrix::from_fn(rows, d, |i, j| u[(i, j)] * sigma[j]);
    let styles = vt.rows(0, d).into_owned();
    StyleSpace::from_parts(basis, styles, sigma, kernel, feature_dim)
}

/// Thin SVD with descending singular values and the sign convention applied.
pub(crate) fn sorted_svd(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    // A bare f64::EPSILON convergence threshold can stall on rank-deficient
    // input and return a wrong decomposition; 5ε is nalgebra's own default.
    let svd = SVD::try_new(m.clone(), true, true, 5.0 * f64::EPSILON, 1_000_000)
        .ok_or_else(|| Error::NumericalFailure("SVD did not converge".into()))?;
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested Vᵀ");
    let s = svd.singular_values;

    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));

    let mut u_sorted = DMatrix::zeros(u.nrows(), order.len());
    let mut vt_sorted = DMatrix::zeros(order.len(), vt.ncols());
    let mut sigma = Vec::with_capacity(order.len());
    for (dst, &src) in order.iter().enumerate() {
        let col = u.column(src);
        let pivot = col.iter().enumerate().fold(0, |best, (i, v)| {
            if v.abs() > col[best].abs() {
                i
            } else {
                best
            }
        });
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        u_sorted.set_column(dst, &(col * sign));
        vt_sorted.set_row(dst, &(vt.row(src) * sign));
        sigma.push(s[src].max(0.0));
    }
    Ok((u_sorted, sigma, vt_sorted))
}

/// Mapping model for an arbitrary style vector.
pub fn reconstruct_coefficients(space: &StyleSpace, s: &StyleVector) -> Result<MappingModel> {
    MappingModel::new(space.coefficients_for(s)?, space.kernel.clone())
}

/// Least-squares style for a mapping fitted on dense views of a new object.
///
/// The basis columns are mutually orthogonal with norms `σ_i`, so the solution
/// is `s_i = b_iᵀ vec(C) / σ_i²`; directions with zero singular value get zero.
pub fn closed_form_style(space: &StyleSpace, model: &MappingModel) -> Result<StyleVector> {
    if model.kernel() != space.kernel() {
        return Err(Error::ConfigMismatch("model kernel differs from the style space".into()));
    }
    if model.feature_dim() != space.feature_dim {
        return Err(Error::DimensionMismatch {
            what: "feature dimension",
            expected: space.feature_dim,
            found: model.feature_dim(),
        });
    }
    let c = DVector::from_column_slice(model.coefficients().as_slice());
    let sigma_max = space.singular_values.first().copied().unwrap_or(0.0);
    let cutoff = sigma_max * f64::EPSILON * space.basis.nrows() as f64;
    Ok(DVector::from_fn(space.style_dim(), |i, _| {
        let sigma = space.singular_values[i];
        if sigma > cutoff && sigma > 0.0 {
            space.basis.column(i).dot(&c) / (sigma * sigma)
        } else {
            0.0
        }
    }))
}

/// Effective rank of `C` and whether its RBF block has collapsed.
///
/// Both counts use singular values above `tolerance × σ_max(C)`. A degenerate
/// model is at most affine in the conceptual coordinates.
pub fn degeneracy_rank(model: &MappingModel, tolerance: f64) -> (usize, bool) {
    let c = model.coefficients();
    let full = c.singular_values();
    let sigma_max = full.max();
    if sigma_max == 0.0 || c.is_empty() {
        return (0, true);
    }
    let threshold = tolerance * sigma_max;
    let rank = full.iter().filter(|s| **s > threshold).count();
    let rbf = model.rbf_block();
    let rbf_rank = if rbf.is_empty() {
        0
    } else {
        rbf.singular_values().iter().filter(|s| **s > threshold).count()
    };
    (rank, rbf_rank == 0)
}

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Design;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub names: Vec<String>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    /// `p x k`, row-major; column `j` is the `j`-th principal direction.
    pub rotation: Vec<f64>,
    pub n_components: usize,
    /// All `p` eigenvalues of the correlation matrix, non-increasing.
    pub eigenvalues: Vec<f64>,
    pub warnings: Vec<String>,
}

impl PcaModel {
    pub fn p(&self) -> usize {
        self.means.len()
    }

    pub fn loading(&self, feature: usize, component: usize) -> f64 {
        self.rotation[feature * self.n_components + component]
    }

    /// Share of total variance per kept component.
    pub fn explained_share(&self) -> Vec<f64> {
        let total: f64 = self.eigenvalues.iter().sum();
        self.eigenvalues[..self.n_components].iter().map(|e| e / total).collect()
    }
}

/// Principal components of the correlation matrix of `x`'s columns.
pub fn pca_fit(x: &Design, n_components: usize) -> Result<PcaModel> {
    let (n, p) = (x.n, x.p);
    if n_components == 0 || n_components > p {
        return Err(Error::Config(format!("n_components must be in [1, {p}], got {n_components}")));
    }
    if n < 2 {
        return Err(Error::TooFewRows(format!("PCA needs at least 2 rows, got {n}")));
    }
    let mut warnings = Vec::new();
    let mut means = vec![0.0; p];
    let mut sds = vec![0.0; p];
    for j in 0..p {
        let col = x.column(j);
        means[j] = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - means[j]).powi(2)).sum::<f64>() / (n - 1) as f64;
        sds[j] = if var > 0.0 {
            var.sqrt()
        } else {
            warnings.push(format!("column {:?} is constant; left unscaled", x.names.get(j).map_or("", String::as_str)));
            1.0
        };
    }
    let z = standardized(x, &means, &sds);
    let corr = (z.transpose() * &z) / (n - 1) as f64;
    let eig = SymmetricEigen::new(corr);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let near_zero = eigenvalues.iter().filter(|&&e| e < 1e-10 * p as f64).count();
    if near_zero > 0 {
        warnings.push(format!("rank deficient: {near_zero} near-zero eigenvalue(s) kept"));
    }
    let mut rotation = vec![0.0; p * n_components];
    for (k, &src) in order.iter().take(n_components).enumerate() {
        let v = eig.eigenvectors.column(src);
        let lead = (0..p).fold(0, |best, i| if v[i].abs() > v[best].abs() { i } else { best });
        let sign = if v[lead] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..p {
            rotation[i * n_components + k] = sign * v[i];
        }
    }
    Ok(PcaModel { names: x.names.clone(), means, sds, rotation, n_components, eigenvalues, warnings })
}

fn standardized(x: &Design, means: &[f64], sds: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(x.n, x.p, |i, j| (x.at(i, j) - means[j]) / sds[j])
}

fn rotation_matrix(m: &PcaModel) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.p(), m.n_components, &m.rotation)
}

fn check_width(m: &PcaModel, x: &Design) -> Result<()> {
    if x.p != m.p() {
        return Err(Error::SchemaMismatch(format!("PCA fitted on {} columns, got {}", m.p(), x.p)));
    }
    Ok(())
}

/// `x` standardized with the fitted means and standard deviations.
pub fn pca_standardize(m: &PcaModel, x: &Design) -> Result<Design> {
    check_width(m, x)?;
    let z = standardized(x, &m.means, &m.sds);
    Ok(Design::from_rows((0..x.n).flat_map(|i| (0..x.p).map(move |j| (i, j))).map(|(i, j)| z[(i, j)]).collect(), x.n, x.p))
}

/// Component scores, `n x k`.
pub fn pca_transform(m: &PcaModel, x: &Design) -> Result<Design> {
    check_width(m, x)?;
    let s = standardized(x, &m.means, &m.sds) * rotation_matrix(m);
    let k = m.n_components;
    let mut d = Design::from_rows((0..x.n).flat_map(|i| (0..k).map(move |j| (i, j))).map(|(i, j)| s[(i, j)]).collect(), x.n, k);
    d.names = (1..=k).map(|j| format!("PC{j}")).collect();
    Ok(d)
}

/// Maps scores back to standardized feature space; exact when `k = p`.
pub fn pca_inverse_transform(m: &PcaModel, scores: &Design) -> Result<Design> {
    if scores.p != m.n_components {
        return Err(Error::SchemaMismatch(format!("expected {} scores per row, got {}", m.n_components, scores.p)));
    }
    let s = DMatrix::from_row_slice(scores.n, scores.p, &scores.x);
    let z = s * rotation_matrix(m).transpose();
    let p = m.p();
    Ok(Design::from_rows((0..scores.n).flat_map(|i| (0..p).map(move |j| (i, j))).map(|(i, j)| z[(i, j)]).collect(), scores.n, p))
}

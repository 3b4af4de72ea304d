use crate::data::{Dataset, FeatureKind};
use crate::error::{Error, Result};

/// Complete numeric feature matrix handed to the solvers (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub n: usize,
    pub p: usize,
    pub x: Vec<f64>,
    pub names: Vec<String>,
    pub kinds: Vec<FeatureKind>,
}

impl Design {
    /// Feature columns of a fully preprocessed dataset. Missing cells are an
    /// error: imputation belongs to the recipe.
    pub fn features(ds: &Dataset) -> Result<Design> {
        let cols = ds.feature_indices();
        let p = cols.len();
        let n = ds.n_rows();
        let mut x = Vec::with_capacity(n * p);
        for r in 0..n {
            for &c in &cols {
                if ds.is_missing(r, c) {
                    return Err(Error::SchemaMismatch(format!(
                        "feature {:?} missing at row {r}; enable imputation",
                        ds.spec(c).name
                    )));
                }
                x.push(ds.value(r, c));
            }
        }
        Ok(Design {
            n,
            p,
            x,
            names: cols.iter().map(|&c| ds.spec(c).name.clone()).collect(),
            kinds: cols.iter().map(|&c| ds.spec(c).kind.clone()).collect(),
        })
    }

    /// Features plus the outcome vector.
    pub fn with_outcome(ds: &Dataset) -> Result<(Design, Vec<f64>)> {
        Ok((Design::features(ds)?, ds.outcome()?))
    }

    pub fn from_rows(x: Vec<f64>, n: usize, p: usize) -> Design {
        assert_eq!(x.len(), n * p);
        Design {
            n,
            p,
            x,
            names: (0..p).map(|j| format!("x{}", j + 1)).collect(),
            kinds: vec![FeatureKind::Continuous; p],
        }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.x[i * self.p + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.at(i, j)).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.p).map(|j| self.column(j)).collect()
    }

    /// Population (n-denominator) mean and standard deviation per column.
    pub fn moments(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n.max(1) as f64;
        let mut mean = vec![0.0; self.p];
        let mut sd = vec![0.0; self.p];
        for j in 0..self.p {
            let m = (0..self.n).map(|i| self.at(i, j)).sum::<f64>() / n;
            let v = (0..self.n).map(|i| (self.at(i, j) - m).powi(2)).sum::<f64>() / n;
            mean[j] = m;
            sd[j] = v.sqrt();
        }
        (mean, sd)
    }

    pub fn select_columns(&self, keep: &[usize]) -> Design {
        let mut x = Vec::with_capacity(self.n * keep.len());
        for i in 0..self.n {
            let row = self.row(i);
            x.extend(keep.iter().map(|&j| row[j]));
        }
        Design {
            n: self.n,
            p: keep.len(),
            x,
            names: keep.iter().map(|&j| self.names[j].clone()).collect(),
            kinds: keep.iter().map(|&j| self.kinds[j].clone()).collect(),
        }
    }
}

#[inline]
pub fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^eta)` without overflow.
#[inline]
pub fn softplus(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

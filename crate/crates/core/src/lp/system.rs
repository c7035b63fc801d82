use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

/// Where a row came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tag {
    ModelLinear,
    McCormick,
    Univariate,
    Pentagon,
    HullFacet,
    ObjectiveCut,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub coefs: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
    pub tag: Tag,
}

impl Row {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coefs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Violation at `x` (positive when violated), scaled by `1 + |rhs|`.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let g = self.activity(x);
        let v = match self.sense {
            RowSense::Le => g - self.rhs,
            RowSense::Ge => self.rhs - g,
            RowSense::Eq => (g - self.rhs).abs(),
        };
        v / (1.0 + self.rhs.abs())
    }
}

/// A linear program `min c·x + c0` over rows and variable bounds.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearSystem {
    pub names: Vec<String>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub rows: Vec<Row>,
    pub objective: Vec<(usize, f64)>,
    pub obj_constant: f64,
}

/// Sums duplicate indices and drops zero coefficients.
pub fn merge_coefs(coefs: impl IntoIterator<Item = (usize, f64)>) -> Vec<(usize, f64)> {
    let mut m: BTreeMap<usize, f64> = BTreeMap::new();
    for (j, a) in coefs {
        *m.entry(j).or_insert(0.0) += a;
    }
    m.into_iter().filter(|&(_, a)| a != 0.0).collect()
}

impl LinearSystem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lo: f64, hi: f64) -> usize {
        self.names.push(name.into());
        self.lo.push(lo);
        self.hi.push(hi);
        self.names.len() - 1
    }

    /// Adds a row; coefficients are merged and zeros dropped.
    ///
    /// # Panics
    /// Panics on NaN coefficients or out-of-range variable indices.
    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coefs: impl IntoIterator<Item = (usize, f64)>,
        sense: RowSense,
        rhs: f64,
        tag: Tag,
    ) -> usize {
        let coefs = merge_coefs(coefs);
        assert!(
            coefs.iter().all(|&(j, a)| j < self.n_vars() && !a.is_nan()) && !rhs.is_nan(),
            "malformed row"
        );
        self.rows.push(Row {
            name: name.into(),
            coefs,
            sense,
            rhs,
            tag,
        });
        self.rows.len() - 1
    }

    pub fn set_objective(&mut self, coefs: impl IntoIterator<Item = (usize, f64)>, constant: f64) {
        self.objective = merge_coefs(coefs);
        self.obj_constant = constant;
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective
            .iter()
            .fold(self.obj_constant, |acc, &(j, c)| acc + c * x[j])
    }

    /// Largest scaled violation of rows and bounds at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.n_vars() {
            worst = worst.max((self.lo[j] - x[j]) / (1.0 + self.lo[j].abs()));
            worst = worst.max((x[j] - self.hi[j]) / (1.0 + self.hi[j].abs()));
        }
        for r in &self.rows {
            worst = worst.max(r.violation(x));
        }
        worst
    }

    pub fn count_tag(&self, tag: Tag) -> usize {
        self.rows.iter().filter(|r| r.tag == tag).count()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

//! Suite bodies. Each returns its clauses, tables, and notes; the caller
//! wraps them into a [`Report`](super::report::Report).

use crate::error::Result;
use crate::spectral::SpectralBasis;

use super::cache::Cache;
use super::config::BasisConfig;
use super::report::{Clause, Table};

mod classical;
mod mass;
mod quantum;

pub(crate) use classical::{e3, e5, e6, e9};
pub(crate) use mass::{e1, e2};
pub(crate) use quantum::{e4, e7, e8};
pub use quantum::DOMINATION_CONSTANT;

#[derive(Debug, Default)]
pub(crate) struct Body {
    pub clauses: Vec<Clause>,
    pub tables: Vec<Table>,
    pub notes: Vec<String>,
}

pub(crate) struct Context {
    pub cache: Cache,
    pub seed: u64,
    pub strict: bool,
}

impl Context {
    pub fn basis(&self, cfg: &BasisConfig) -> Result<SpectralBasis> {
        Ok(self.cache.basis(cfg)?.0)
    }
}

/// Largest step `v[i+1] − v[i]`; `−∞` for fewer than two values.
pub(crate) fn max_increase(values: &[f64]) -> f64 {
    values.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_increase_of_decreasing_is_negative() {
        assert!(max_increase(&[3.0, 2.0, 1.5]) < 0.0);
        assert_eq!(max_increase(&[1.0, 4.0, 2.0]), 3.0);
        assert_eq!(max_increase(&[1.0]), f64::NEG_INFINITY);
    }
}

use crate::error::{Error, Result};

/// Unsigned Stirling numbers of the first kind, stored as `ln S(n, m)` for
/// `0 <= m <= n <= n_max`. Zero entries are `-inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct StirlingTable {
    rows: Vec<Vec<f64>>,
    bound: usize,
}

impl StirlingTable {
    /// Empty table that may later grow up to `bound` customers.
    pub fn with_bound(bound: usize) -> Self {
        Self {
            rows: vec![vec![0.0]],
            bound,
        }
    }

    pub fn n_max(&self) -> usize {
        self.rows.len() - 1
    }

    /// Extends the table through row `n` with
    /// `S(n+1, m) = n S(n, m) + S(n, m-1)` in log space.
    pub fn ensure(&mut self, n: usize) -> Result<()> {
        if n > self.bound {
            return Err(Error::Domain(format!(
                "Stirling table request for n = {n} exceeds the bound {}",
                self.bound
            )));
        }
        while self.rows.len() <= n {
            let k = self.rows.len() - 1;
            let prev = &self.rows[k];
            let ln_k = (k as f64).ln();
            let mut next = vec![f64::NEG_INFINITY; k + 2];
            for (m, slot) in next.iter_mut().enumerate() {
                let stay = if m <= k { prev[m] + ln_k } else { f64::NEG_INFINITY };
                let open = if m >= 1 { prev[m - 1] } else { f64::NEG_INFINITY };
                *slot = log_add(stay, open);
            }
            self.rows.push(next);
        }
        Ok(())
    }

    /// `ln S(n, m)`; the row must already be present.
    pub fn ln(&self, n: usize, m: usize) -> f64 {
        if m > n {
            return f64::NEG_INFINITY;
        }
        self.rows[n][m]
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.rows[n]
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Builds the table through `n_max`, failing if `n_max` exceeds `bound`.
pub fn log_stirling_table(n_max: usize, bound: usize) -> Result<StirlingTable> {
    if n_max < 1 {
        return Err(Error::Domain("Stirling table needs n_max >= 1".into()));
    }
    let mut t = StirlingTable::with_bound(bound);
    t.ensure(n_max)?;
    Ok(t)
}

#![allow(dead_code)]

/// Documents per class in the standard 20 Newsgroups training split.
pub const NEWSGROUPS_CLASS_SIZES: [u64; 20] = [
    480, 584, 591, 590, 578, 593, 585, 594, 598, 597, 600, 595, 591, 594, 593, 599, 546, 564, 465, 377,
];

pub const NEWSGROUPS_N: u64 = 11_314;

/// R_q for every document used as a query against its own class, self excluded.
pub fn newsgroups_per_query_r() -> Vec<u64> {
    NEWSGROUPS_CLASS_SIZES
        .iter()
        .flat_map(|&n| std::iter::repeat_n(n - 1, n as usize))
        .collect()
}

/// Binomial coefficients C(n, k) for n ≤ 60, exact.
pub struct Pascal(Vec<Vec<u128>>);

impl Pascal {
    pub fn new(max_n: usize) -> Self {
        let mut rows: Vec<Vec<u128>> = Vec::with_capacity(max_n + 1);
        for n in 0..=max_n {
            let mut row = vec![1u128; n + 1];
            for k in 1..n {
                row[k] = rows[n - 1][k - 1] + rows[n - 1][k];
            }
            rows.push(row);
        }
        Pascal(rows)
    }

    pub fn c(&self, n: u64, k: u64) -> u128 {
        if k > n {
            0
        } else {
            self.0[n as usize][k as usize]
        }
    }

    /// P(at least m of the R relevant among K draws from N), by counting.
    pub fn at_least(&self, n: u64, r: u64, k: u64, m: u64) -> f64 {
        let favourable: u128 = (m..=r.min(k)).map(|j| self.c(r, j) * self.c(n - r, k - j)).sum();
        favourable as f64 / self.c(n, k) as f64
    }
}

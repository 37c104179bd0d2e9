use serde::{Deserialize, Serialize};

/// Oracle-query counters of one pipeline run.
///
/// Cost model: a propagation from time 0 to `t` costs `⌈‖H‖·t⌉` Hamiltonian
/// queries and one state-preparation query.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLedger {
    pub h_queries: u64,
    pub sp_queries: u64,
    pub obs_queries: u64,
}

/// `⌈norm_bound · t⌉`.
pub fn propagation_cost(norm_bound: f64, t: f64) -> u64 {
    let units = norm_bound * t;
    if units <= 0.0 {
        0
    } else {
        units.ceil() as u64
    }
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Charges `copies` fresh propagations `0 → t`.
    pub fn charge_propagation(&mut self, norm_bound: f64, t: f64, copies: u64) {
        self.h_queries += propagation_cost(norm_bound, t) * copies;
        self.sp_queries += copies;
    }

    /// Charges `copies` coherent preparations of a state that costs
    /// `h_per_copy` Hamiltonian queries each.
    pub fn charge_preparation(&mut self, h_per_copy: u64, copies: u64) {
        self.h_queries += h_per_copy * copies;
        self.sp_queries += copies;
    }

    pub fn charge_observable(&mut self, uses: u64) {
        self.obs_queries += uses;
    }

    pub fn merge(&mut self, other: &QueryLedger) {
        self.h_queries += other.h_queries;
        self.sp_queries += other.sp_queries;
        self.obs_queries += other.obs_queries;
    }

    /// True when no counter of `self` is below the matching counter of `earlier`.
    pub fn dominates(&self, earlier: &QueryLedger) -> bool {
        self.h_queries >= earlier.h_queries
            && self.sp_queries >= earlier.sp_queries
            && self.obs_queries >= earlier.obs_queries
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn propagation_charge() {
        let mut ledger = QueryLedger::new();
        ledger.charge_propagation(1.5, 2.1, 3);
        assert_eq!(ledger.h_queries, 4 * 3);
        assert_eq!(ledger.sp_queries, 3);
        ledger.charge_propagation(1.0, 0.0, 1);
        assert_eq!(ledger.h_queries, 12);
        assert_eq!(ledger.sp_queries, 4);
    }

    #[test]
    fn merge_is_associative() {
        let a = QueryLedger {
            h_queries: 1,
            sp_queries: 2,
            obs_queries: 3,
        };
        let b = QueryLedger {
            h_queries: 4,
            sp_queries: 5,
            obs_queries: 6,
        };
        let d = QueryLedger {
            h_queries: 7,
            sp_queries: 8,
            obs_queries: 9,
        };
        let mut left = a;
        left.merge(&b);
        left.merge(&d);
        let mut bc = b;
        bc.merge(&d);
        let mut right = a;
        right.merge(&bc);
        assert_eq!(left, right);
        assert!(left.dominates(&a));
    }
}

//! User-to-access-point association, QoS accounting and alpha-fair utility.

use serde::{Deserialize, Serialize};

use crate::channel::LinkQuality;
use crate::error::DomainError;
use crate::scenario::UserState;

/// Rates are floored at 1 bit/s before entering a utility so that a served
/// but starved user contributes a finite (very negative) value.
pub const RATE_FLOOR_BPS: f64 = 1.0;

/// Binary association between access points and users, stored as the
/// serving access-point id of each user. A user is served by at most one
/// access point by construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssociationMatrix {
    n_aps: usize,
    serving: Vec<Option<usize>>,
}

impl AssociationMatrix {
    pub fn empty(n_aps: usize, n_users: usize) -> Self {
        AssociationMatrix { n_aps, serving: vec![None; n_users] }
    }

    /// # Panics
    /// If an entry names an access point `>= n_aps`.
    pub fn from_serving(n_aps: usize, serving: Vec<Option<usize>>) -> Self {
        assert!(serving.iter().flatten().all(|&a| a < n_aps), "serving access point out of range");
        AssociationMatrix { n_aps, serving }
    }

    pub fn n_aps(&self) -> usize {
        self.n_aps
    }

    pub fn n_users(&self) -> usize {
        self.serving.len()
    }

    pub fn serving(&self) -> &[Option<usize>] {
        &self.serving
    }

    pub fn serving_ap(&self, ue: usize) -> Option<usize> {
        self.serving[ue]
    }

    pub fn assign(&mut self, ue: usize, ap: Option<usize>) {
        if let Some(a) = ap {
            assert!(a < self.n_aps, "access point {a} out of range");
        }
        self.serving[ue] = ap;
    }

    pub fn get(&self, ap: usize, ue: usize) -> bool {
        self.serving[ue] == Some(ap)
    }

    pub fn load(&self, ap: usize) -> usize {
        self.serving.iter().filter(|s| **s == Some(ap)).count()
    }

    pub fn unassociated(&self) -> Vec<usize> {
        (0..self.serving.len()).filter(|&j| self.serving[j].is_none()).collect()
    }

    /// Dense `|A| x |U|` 0/1 matrix.
    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.n_aps).map(|a| self.serving.iter().map(|s| u8::from(*s == Some(a))).collect()).collect()
    }
}

/// Greedy MAX-SNR association.
///
/// Users are processed by decreasing best SNR (ties: lower UE id first);
/// each joins the covering access point with spare capacity and the highest
/// SNR (ties: lower access-point id). Users left over stay unassociated.
pub fn max_snr_association<Q: LinkQuality + ?Sized>(quality: &Q, n_aps: usize) -> AssociationMatrix {
    let n_users = quality.n_users();
    let n_slots = quality.n_slots();
    let best = |ue: usize| (0..n_slots).filter_map(|s| quality.snr_db(s, ue)).fold(f64::NEG_INFINITY, f64::max);
    let mut order: Vec<(usize, f64)> = (0..n_users).map(|u| (u, best(u))).collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let mut load = vec![0usize; n_slots];
    let mut assoc = AssociationMatrix::empty(n_aps, n_users);
    for (ue, _) in order {
        let mut choice: Option<(usize, f64)> = None;
        for slot in 0..n_slots {
            if load[slot] >= quality.slot_capacity(slot) {
                continue;
            }
            let Some(snr) = quality.snr_db(slot, ue) else { continue };
            let better = match choice {
                None => true,
                Some((c, best)) => snr > best || (snr == best && quality.slot_ap_id(slot) < quality.slot_ap_id(c)),
            };
            if better {
                choice = Some((slot, snr));
            }
        }
        if let Some((slot, _)) = choice {
            load[slot] += 1;
            assoc.assign(ue, Some(quality.slot_ap_id(slot)));
        }
    }
    assoc
}

/// kappa = min(1, R / D); a user without demand is fully satisfied.
pub fn qos_satisfaction(rate_bps: f64, demand_bps: f64) -> f64 {
    if demand_bps <= 0.0 {
        1.0
    } else {
        (rate_bps / demand_bps).clamp(0.0, 1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QosReport {
    pub kappa: Vec<f64>,
    pub satisfied: Vec<bool>,
    pub mean_kappa: f64,
    pub satisfied_fraction: f64,
}

impl QosReport {
    pub fn new(rates_bps: &[f64], users: &[UserState]) -> QosReport {
        assert_eq!(rates_bps.len(), users.len());
        let kappa: Vec<f64> = rates_bps.iter().zip(users).map(|(r, u)| qos_satisfaction(*r, u.demand_bps)).collect();
        let satisfied: Vec<bool> = kappa.iter().zip(users).map(|(k, u)| *k >= u.qos_target - 1e-12).collect();
        let n = users.len().max(1) as f64;
        QosReport {
            mean_kappa: if users.is_empty() { 1.0 } else { kappa.iter().sum::<f64>() / n },
            satisfied_fraction: if users.is_empty() {
                1.0
            } else {
                satisfied.iter().filter(|s| **s).count() as f64 / n
            },
            kappa,
            satisfied,
        }
    }

    pub fn all_satisfied(&self) -> bool {
        self.satisfied.iter().all(|s| *s)
    }
}

/// Alpha-fair utility: `ln x` for alpha = 1, `x^(1-alpha) / (1-alpha)` otherwise.
pub fn alpha_fair_utility(x: f64, alpha: f64) -> Result<f64, DomainError> {
    let undefined = DomainError::Utility { value: x, alpha };
    if x < 0.0 || !x.is_finite() || (x == 0.0 && alpha >= 1.0) {
        return Err(undefined);
    }
    if alpha == 1.0 {
        Ok(x.ln())
    } else {
        Ok(x.powf(1.0 - alpha) / (1.0 - alpha))
    }
}

/// Utility a user derives from `rate_bps` against `demand_bps`: the
/// demand-capped rate, floored at [`RATE_FLOOR_BPS`].
pub fn user_utility(rate_bps: f64, demand_bps: f64, alpha: f64) -> Result<f64, DomainError> {
    alpha_fair_utility(rate_bps.min(demand_bps).max(RATE_FLOOR_BPS), alpha)
}

/// R_alpha: sum over associated users of the alpha-fair utility of their
/// demand-capped rate.
pub fn network_utility(
    rates_bps: &[f64],
    demands_bps: &[f64],
    assoc: &AssociationMatrix,
    alpha: f64,
) -> Result<f64, DomainError> {
    assert_eq!(rates_bps.len(), assoc.n_users());
    assert_eq!(demands_bps.len(), assoc.n_users());
    let mut total = 0.0;
    for ue in 0..assoc.n_users() {
        if assoc.serving_ap(ue).is_some() {
            total += user_utility(rates_bps[ue], demands_bps[ue], alpha)?;
        }
    }
    Ok(total)
}

/// Fraction of (user, step) transitions whose serving access point changed,
/// including joins and drops. `trace[t][j]` is the serving access point of
/// user `j` at step `t`; a trace with fewer than two steps has frequency 0.
pub fn handover_frequency(trace: &[Vec<Option<usize>>]) -> f64 {
    if trace.len() < 2 {
        return 0.0;
    }
    let mut changes = 0usize;
    let mut transitions = 0usize;
    for pair in trace.windows(2) {
        assert_eq!(pair[0].len(), pair[1].len(), "population size changed inside a trace");
        transitions += pair[0].len();
        changes += pair[0].iter().zip(&pair[1]).filter(|(a, b)| a != b).count();
    }
    if transitions == 0 {
        0.0
    } else {
        changes as f64 / transitions as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Vec3;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// A fixed SNR table: `snr[slot][ue]`, `None` = not covered.
    struct Table {
        snr: Vec<Vec<Option<f64>>>,
        cap: Vec<usize>,
        ids: Vec<usize>,
    }

    impl LinkQuality for Table {
        fn n_slots(&self) -> usize {
            self.snr.len()
        }
        fn n_users(&self) -> usize {
            self.snr.first().map_or(0, |r| r.len())
        }
        fn slot_ap_id(&self, slot: usize) -> usize {
            self.ids[slot]
        }
        fn slot_capacity(&self, slot: usize) -> usize {
            self.cap[slot]
        }
        fn snr_db(&self, slot: usize, ue: usize) -> Option<f64> {
            self.snr[slot][ue]
        }
    }

    fn user(demand: f64, q: f64) -> UserState {
        UserState { id: 0, position: Vec3::default(), demand_bps: demand, qos_target: q }
    }

    #[test]
    fn max_snr_respects_capacity() {
        // AP0: 20, 15, 10 dB; AP1: 12, 14, 18 dB; N = 1 each
        let t = Table {
            snr: vec![vec![Some(20.0), Some(15.0), Some(10.0)], vec![Some(12.0), Some(14.0), Some(18.0)]],
            cap: vec![1, 1],
            ids: vec![0, 1],
        };
        let a = max_snr_association(&t, 2);
        assert_eq!(a.serving(), &[Some(0), None, Some(1)]);
        assert_eq!(a.unassociated(), vec![1]);
        assert_eq!(a.to_rows(), vec![vec![1, 0, 0], vec![0, 0, 1]]);
    }

    #[test]
    fn max_snr_ties_go_to_lower_ids() {
        let t = Table {
            snr: vec![vec![Some(5.0), Some(5.0)], vec![Some(5.0), Some(5.0)]],
            cap: vec![1, 1],
            ids: vec![0, 1],
        };
        assert_eq!(max_snr_association(&t, 2).serving(), &[Some(0), Some(1)]);
    }

    #[test]
    fn max_snr_skips_uncovered() {
        let t = Table { snr: vec![vec![None, Some(1.0)], vec![Some(-3.0), None]], cap: vec![5, 5], ids: vec![0, 3] };
        assert_eq!(max_snr_association(&t, 4).serving(), &[Some(3), Some(0)]);
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(qos_satisfaction(100e6, 200e6), 0.5);
        assert_eq!(qos_satisfaction(300e6, 200e6), 1.0);
        assert_eq!(qos_satisfaction(0.0, 0.0), 1.0);
        let r = QosReport::new(&[100e6, 300e6], &[user(200e6, 0.5), user(200e6, 1.0)]);
        assert_eq!(r.kappa, vec![0.5, 1.0]);
        assert!(r.all_satisfied());
        assert_eq!(r.mean_kappa, 0.75);
    }

    #[test]
    fn utility_examples() {
        assert_abs_diff_eq!(alpha_fair_utility(2.0, 0.0).unwrap(), 2.0);
        assert_abs_diff_eq!(alpha_fair_utility(std::f64::consts::E, 1.0).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(alpha_fair_utility(4.0, 2.0).unwrap(), -0.25);
        assert!(alpha_fair_utility(0.0, 1.0).is_err());
        assert!(alpha_fair_utility(0.0, 2.0).is_err());
        assert!(alpha_fair_utility(-1.0, 0.5).is_err());
        assert_eq!(alpha_fair_utility(0.0, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn network_utility_examples() {
        // every rate meets its demand: sum of log demands
        let assoc = AssociationMatrix::from_serving(2, vec![Some(0), Some(1), Some(1)]);
        let demands = [2e8, 1.5e8, 3e8];
        let u = network_utility(&[5e8, 2e8, 9e8], &demands, &assoc, 1.0).unwrap();
        assert_abs_diff_eq!(u, demands.iter().map(|d| d.ln()).sum::<f64>(), epsilon = 1e-9);
        // empty association
        let none = AssociationMatrix::empty(2, 3);
        assert_eq!(network_utility(&[1e9; 3], &demands, &none, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn network_utility_three_user_enumeration() {
        // rates: UE0 below demand, UE1 above, UE2 starved but served, UE3 unserved
        let assoc = AssociationMatrix::from_serving(3, vec![Some(2), Some(0), Some(1), None]);
        let rates = [50.0, 400.0, 0.0, 1e6];
        let demands = [100.0, 200.0, 300.0, 10.0];
        for alpha in [0.0, 0.5, 1.0, 2.0] {
            let u = |x: f64| if alpha == 1.0 { x.ln() } else { x.powf(1.0 - alpha) / (1.0 - alpha) };
            let expected = u(50.0) + u(200.0) + u(1.0);
            let got = network_utility(&rates, &demands, &assoc, alpha).unwrap();
            assert_abs_diff_eq!(got, expected, epsilon = 1e-9);
        }
    }

    #[test]
    fn log_utility_argmax_is_scale_invariant() {
        // brute force over every association of 3 UEs to 2 APs
        let rates = [[3.0, 7.0, 2.0], [5.0, 1.0, 6.0]];
        let demands = [1e9; 3];
        let best = |scale: f64| {
            let mut best = (f64::NEG_INFINITY, vec![]);
            for code in 0..8usize {
                let serving: Vec<Option<usize>> = (0..3).map(|j| Some((code >> j) & 1)).collect();
                let r: Vec<f64> = (0..3).map(|j| rates[serving[j].unwrap()][j] * scale).collect();
                let assoc = AssociationMatrix::from_serving(2, serving.clone());
                let u = network_utility(&r, &demands, &assoc, 1.0).unwrap();
                if u > best.0 {
                    best = (u, serving);
                }
            }
            best.1
        };
        assert_eq!(best(1.0), best(1000.0));
    }

    #[test]
    fn handover_examples() {
        let constant = vec![vec![Some(1), None]; 11];
        assert_eq!(handover_frequency(&constant), 0.0);
        // one UE, 11 snapshots, 3 changes over 10 transitions
        let serve = [1, 1, 2, 2, 2, 1, 1, 1, 0, 0, 0];
        let trace: Vec<Vec<Option<usize>>> = serve.iter().map(|a| vec![Some(*a)]).collect();
        assert_abs_diff_eq!(handover_frequency(&trace), 0.3);
        assert_eq!(handover_frequency(&trace[..1]), 0.0);
        let alternating: Vec<Vec<Option<usize>>> = (0..9).map(|t| vec![Some(t % 2)]).collect();
        assert_eq!(handover_frequency(&alternating), 1.0);
    }

    proptest! {
        #[test]
        fn max_snr_invariants(snr in proptest::collection::vec(proptest::option::of(-20.0f64..40.0), 15), cap in 0usize..4) {
            let t = Table { snr: snr.chunks(5).map(|c| c.to_vec()).collect(), cap: vec![cap; 3], ids: vec![0, 1, 2] };
            let a = max_snr_association(&t, 3);
            for ap in 0..3 {
                prop_assert!(a.load(ap) <= cap);
            }
            for ue in 0..5 {
                if let Some(ap) = a.serving_ap(ue) {
                    prop_assert!(t.snr[ap][ue].is_some());
                } else {
                    // unassociated only if every covering AP is full
                    for ap in 0..3 {
                        prop_assert!(t.snr[ap][ue].is_none() || a.load(ap) == cap);
                    }
                }
            }
        }

        #[test]
        fn kappa_in_unit_interval(r in 0.0f64..1e10, d in 0.0f64..1e10) {
            let k = qos_satisfaction(r, d);
            prop_assert!((0.0..=1.0).contains(&k));
        }

        #[test]
        fn utility_increasing(x in 1e-3f64..1e6, dx in 1e-3f64..1e3, alpha in 0.0f64..4.0) {
            prop_assert!(alpha_fair_utility(x + dx, alpha).unwrap() > alpha_fair_utility(x, alpha).unwrap());
        }

        #[test]
        fn handover_in_unit_interval(seq in proptest::collection::vec(proptest::collection::vec(proptest::option::of(0usize..3), 4), 0..12)) {
            let h = handover_frequency(&seq);
            prop_assert!((0.0..=1.0).contains(&h));
        }
    }
}

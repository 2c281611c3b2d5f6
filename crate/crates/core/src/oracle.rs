//! Desk-scale exact solver by exhaustive enumeration, plus a from-scratch
//! plan evaluator used to cross-check the eval module.

use std::time::Instant;

use thiserror::Error;

use crate::candgen::{CandidateGraph, NodeRole};
use crate::codec::{Service, Sortie, StructuredSolution};
use crate::eval::evaluate_plan;
use crate::model::{
    DistanceModel, Instance, LocationId, LoopPolicy, Objective, Variant, VariantConfig,
};

#[derive(Debug, Clone, Copy, Default)]
pub struct OracleLimits {
    /// Hard cap on evaluated plans; exceeding it is an explicit refusal.
    pub max_evaluations: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub optimum: f64,
    /// Integer view of the optimum (scaled minutes / nano-euros).
    pub soft_scaled: i64,
    pub plan: StructuredSolution,
    pub enumerated: u64,
    pub wall_time: f64,
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("instance has {n} customers; the brute-force cap for this variant is {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("evaluation cap exceeded after {evaluated} plans; refusing to approximate")]
    CapExceeded { evaluated: u64 },
    #[error("no violation-free plan exists under this configuration")]
    Infeasible,
}

struct Enumerator<'a> {
    instance: &'a Instance,
    dm: &'a DistanceModel,
    config: &'a VariantConfig,
    /// When set, sortie locations are restricted to each customer's
    /// candidate pool (rule-6 depot fallback stays legal).
    restrict: Option<&'a CandidateGraph>,
    max_evaluations: Option<u64>,
    enumerated: u64,
    best_key: (u64, i64),
    best: Option<(f64, i64, StructuredSolution)>,
}

impl<'a> Enumerator<'a> {
    fn pool_allows(&self, customer: usize, loc: LocationId, is_final_depot: bool) -> bool {
        match self.restrict {
            None => true,
            Some(graph) => {
                if is_final_depot {
                    return true; // decoder's missing-marker fallback
                }
                graph.nodes.iter().any(|nd| {
                    nd.color_id == customer
                        && nd.role == NodeRole::CandidateCopy
                        && nd.physical_loc == loc
                })
            }
        }
    }

    fn consider(&mut self, plan: &StructuredSolution) -> Result<(), OracleError> {
        self.enumerated += 1;
        if let Some(cap) = self.max_evaluations {
            if self.enumerated > cap {
                return Err(OracleError::CapExceeded { evaluated: self.enumerated });
            }
        }
        let (report, _) = evaluate_plan(self.instance, plan, self.dm, self.config);
        if report.is_feasible() && report.key() < self.best_key {
            self.best_key = report.key();
            self.best = Some((report.soft_objective, report.soft_scaled, plan.clone()));
        }
        Ok(())
    }

    /// Assign (route, launch, retrieval) to each drone customer recursively.
    fn assign_sorties(
        &mut self,
        drone_customers: &[usize],
        idx: usize,
        plan: &mut StructuredSolution,
    ) -> Result<(), OracleError> {
        if idx == drone_customers.len() {
            // Canonical sortie order and service map.
            let mut finished = plan.clone();
            for r in 0..finished.sorties.len() {
                finished.sorties[r].sort_by_key(|s| (s.launch_stop, s.customer));
                for (si, s) in finished.sorties[r].clone().iter().enumerate() {
                    finished.served[s.customer - 1] = vec![Service::Drone { route: r, sortie: si }];
                }
            }
            return self.consider(&finished);
        }
        let c = drone_customers[idx];
        for r in 0..plan.routes.len() {
            let stops = plan.routes[r].clone();
            if stops.len() < 2 {
                continue;
            }
            let last = stops.len() - 1;
            for a in 0..stops.len() {
                for b in a..stops.len() {
                    if a == b && self.config.loop_policy == LoopPolicy::ForbidLoop {
                        continue;
                    }
                    if a == b && (a == 0 || a == last) {
                        continue; // waiting at the depot endpoint is pointless
                    }
                    if self.config.loop_policy == LoopPolicy::ForbidLoop && stops[a] == stops[b] {
                        continue;
                    }
                    if !self.pool_allows(c, stops[a], false)
                        || !self.pool_allows(c, stops[b], b == last && stops[last] == 0)
                    {
                        continue;
                    }
                    plan.sorties[r].push(Sortie { customer: c, launch_stop: a, retrieval_stop: b });
                    self.assign_sorties(drone_customers, idx + 1, plan)?;
                    plan.sorties[r].pop();
                }
            }
        }
        Ok(())
    }

    fn route_plan(&self, routes: &[Vec<usize>]) -> StructuredSolution {
        let mut plan = StructuredSolution::empty(self.instance.customer_count());
        for (r, customers) in routes.iter().enumerate() {
            let mut stops = vec![0usize];
            for (i, &c) in customers.iter().enumerate() {
                stops.push(self.instance.customers[c - 1].location);
                plan.served[c - 1] = vec![Service::Truck { route: r, stop: i + 1 }];
            }
            stops.push(0);
            plan.routes.push(stops);
            plan.sorties.push(Vec::new());
        }
        plan
    }

    /// Scaled truck travel time of a route alone; a valid lower bound on any
    /// completion of it (drones only ever add synchronization waits).
    fn route_time_bound(&self, routes: &[Vec<usize>]) -> i64 {
        routes
            .iter()
            .map(|customers| {
                let mut t = 0i64;
                let mut prev = 0usize;
                for &c in customers {
                    let loc = self.instance.customers[c - 1].location;
                    t += self.dm.truck_time_scaled(prev, loc);
                    prev = loc;
                }
                t + self.dm.truck_time_scaled(prev, 0)
            })
            .max()
            .unwrap_or(0)
    }

    fn permutations(
        &mut self,
        remaining: &mut Vec<usize>,
        current: &mut Vec<usize>,
        trucks: usize,
        drone_customers: &[usize],
    ) -> Result<(), OracleError> {
        if remaining.is_empty() {
            self.splits(current.clone(), trucks, drone_customers)?;
            return Ok(());
        }
        for i in 0..remaining.len() {
            let c = remaining.remove(i);
            current.push(c);
            self.permutations(remaining, current, trucks, drone_customers)?;
            current.pop();
            remaining.insert(i, c);
        }
        Ok(())
    }

    /// Cut an ordered customer sequence into `trucks` routes at every
    /// composition, then enumerate sortie placements.
    fn splits(
        &mut self,
        sequence: Vec<usize>,
        trucks: usize,
        drone_customers: &[usize],
    ) -> Result<(), OracleError> {
        let mut cuts = vec![0usize; trucks + 1];
        cuts[trucks] = sequence.len();
        self.split_rec(&sequence, trucks, 1, &mut cuts, drone_customers)
    }

    fn split_rec(
        &mut self,
        sequence: &[usize],
        trucks: usize,
        level: usize,
        cuts: &mut Vec<usize>,
        drone_customers: &[usize],
    ) -> Result<(), OracleError> {
        if level == trucks {
            let routes: Vec<Vec<usize>> = (0..trucks)
                .map(|r| sequence[cuts[r]..cuts[r + 1]].to_vec())
                .collect();
            // Branch-and-bound against the incumbent (makespan objective).
            if self.config.objective == Objective::Makespan
                && self.best_key.0 == 0
                && self.route_time_bound(&routes) > self.best_key.1
            {
                return Ok(());
            }
            let mut plan = self.route_plan(&routes);
            return self.assign_sorties(drone_customers, 0, &mut plan);
        }
        for cut in cuts[level - 1]..=sequence.len() {
            cuts[level] = cut;
            self.split_rec(sequence, trucks, level + 1, cuts, drone_customers)?;
        }
        Ok(())
    }
}

/// Exhaustively enumerate every truck/drone service split, truck order,
/// route split and sortie placement; evaluate each with the eval scheduler;
/// return the minimum. Caps: n <= 8 (single truck), n <= 7 (VRP-D).
pub fn brute_force(
    instance: &Instance,
    dm: &DistanceModel,
    config: &VariantConfig,
    limits: OracleLimits,
) -> Result<OracleResult, OracleError> {
    brute_force_restricted(instance, dm, config, limits, None)
}

/// Same as [`brute_force`] but with sortie launch/retrieval locations
/// restricted to the candidate pool of `graph`.
pub fn brute_force_restricted(
    instance: &Instance,
    dm: &DistanceModel,
    config: &VariantConfig,
    limits: OracleLimits,
    graph: Option<&CandidateGraph>,
) -> Result<OracleResult, OracleError> {
    let n = instance.customer_count();
    let trucks = config.truck_count.max(1);
    let cap = match config.variant {
        Variant::Vrpd11 | Variant::Vrpd1M => 7,
        _ => 8,
    };
    if n > cap {
        return Err(OracleError::TooLarge { n, cap });
    }
    let start = Instant::now();
    let mut enumerator = Enumerator {
        instance,
        dm,
        config,
        restrict: graph,
        max_evaluations: limits.max_evaluations,
        enumerated: 0,
        best_key: (u64::MAX, i64::MAX),
        best: None,
    };

    let eligible: Vec<usize> = (1..=n)
        .filter(|&c| instance.customers[c - 1].drone_eligible)
        .collect();
    for mask in 0u32..(1 << eligible.len()) {
        let drone_customers: Vec<usize> = eligible
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &c)| c)
            .collect();
        let mut truck_customers: Vec<usize> =
            (1..=n).filter(|c| !drone_customers.contains(c)).collect();
        enumerator.permutations(&mut truck_customers, &mut Vec::new(), trucks, &drone_customers)?;
    }

    let enumerated = enumerator.enumerated;
    let wall_time = start.elapsed().as_secs_f64();
    match enumerator.best {
        Some((optimum, soft_scaled, plan)) => Ok(OracleResult {
            optimum,
            soft_scaled,
            plan,
            enumerated,
            wall_time,
        }),
        None => Err(OracleError::Infeasible),
    }
}

/// Result of the independent evaluator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndependentEval {
    pub makespan_scaled: i64,
    pub makespan_minutes: f64,
    pub cost: f64,
}

/// A from-scratch schedule simulation sharing no code with the eval module,
/// used for the evaluator-agreement cross-checks. Implements the same
/// contract: per-stop order is arrival, retrievals (each +D_R), truck
/// service, launches (each +D_L); cost terms per the Sacramento model.
pub fn evaluate_plan_independent(
    plan: &StructuredSolution,
    dm: &DistanceModel,
    config: &VariantConfig,
) -> IndependentEval {
    #[derive(Clone, Copy)]
    enum Event {
        Retrieve(usize),
        Serve(u32),
        Launch(usize),
    }

    let s_int = |minutes: f64| dm.scaled_minutes(minutes);
    let mut makespan_scaled: i64 = 0;
    let mut cost = 0.0f64;

    for (r, stops) in plan.routes.iter().enumerate() {
        let sorties = plan.sorties.get(r).map(Vec::as_slice).unwrap_or(&[]);
        // Truck services per stop, gathered from the service map.
        let services_here = |stop: usize| -> u32 {
            plan.served
                .iter()
                .flatten()
                .filter(|sv| matches!(sv, Service::Truck { route, stop: st } if *route == r && *st == stop))
                .count() as u32
        };
        // Per-stop event list in the normative order.
        let events_at = |stop: usize| -> Vec<Event> {
            let mut ev = Vec::new();
            for (si, so) in sorties.iter().enumerate() {
                if so.retrieval_stop == stop && so.launch_stop < stop {
                    ev.push(Event::Retrieve(si));
                }
            }
            ev.push(Event::Serve(services_here(stop)));
            for (si, so) in sorties.iter().enumerate() {
                if so.launch_stop == stop {
                    ev.push(Event::Launch(si));
                }
            }
            ev
        };

        // Integer pass.
        let mut clock: i64 = 0;
        let mut drone_back: Vec<i64> = vec![0; sorties.len()];
        let mut launch_clock: Vec<i64> = vec![0; sorties.len()];
        for stop in 0..stops.len() {
            if stop > 0 {
                clock += dm.truck_time_scaled(stops[stop - 1], stops[stop]);
            }
            for event in events_at(stop) {
                match event {
                    Event::Retrieve(si) => {
                        clock = clock.max(drone_back[si]) + s_int(config.retrieval_time);
                    }
                    Event::Serve(count) => clock += s_int(config.serv_truck) * count as i64,
                    Event::Launch(si) => {
                        launch_clock[si] = clock;
                        clock += s_int(config.launch_time);
                        let so = sorties[si];
                        let home = stops[so.retrieval_stop.min(stops.len() - 1)];
                        drone_back[si] = clock
                            + dm.drone_time_scaled(stops[stop], so.customer)
                            + s_int(config.serv_drone)
                            + dm.drone_time_scaled(so.customer, home);
                        if so.retrieval_stop == stop {
                            clock = clock.max(drone_back[si]) + s_int(config.retrieval_time);
                        }
                    }
                }
            }
        }
        makespan_scaled = makespan_scaled.max(clock);

        // Exact pass for the cost model.
        if stops.len() <= 2 && stops.iter().all(|&l| l == 0) {
            continue;
        }
        let mut t = 0.0f64;
        let mut miles = 0.0f64;
        let mut back: Vec<f64> = vec![0.0; sorties.len()];
        let mut airborne_from: Vec<f64> = vec![0.0; sorties.len()];
        let mut airborne_until: Vec<f64> = vec![0.0; sorties.len()];
        for stop in 0..stops.len() {
            if stop > 0 {
                t += dm.truck_time(stops[stop - 1], stops[stop]);
                miles += dm.truck_dist(stops[stop - 1], stops[stop]);
            }
            for event in events_at(stop) {
                match event {
                    Event::Retrieve(si) => {
                        t = t.max(back[si]) + config.retrieval_time;
                        airborne_until[si] = t;
                    }
                    Event::Serve(count) => t += config.serv_truck * count as f64,
                    Event::Launch(si) => {
                        airborne_from[si] = t;
                        t += config.launch_time;
                        let so = sorties[si];
                        let home = stops[so.retrieval_stop.min(stops.len() - 1)];
                        back[si] = t
                            + dm.drone_time(stops[stop], so.customer)
                            + config.serv_drone
                            + dm.drone_time(so.customer, home);
                        if so.retrieval_stop == stop {
                            t = t.max(back[si]) + config.retrieval_time;
                            airborne_until[si] = t;
                        }
                    }
                }
            }
        }
        cost += config.cost_coeffs.truck_per_mile * miles + config.cost_coeffs.truck_per_min * t;
        for (si, so) in sorties.iter().enumerate() {
            let home = stops[so.retrieval_stop.min(stops.len() - 1)];
            let flight =
                dm.drone_dist(stops[so.launch_stop], so.customer) + dm.drone_dist(so.customer, home);
            cost += config.cost_coeffs.drone_per_mile * flight
                + config.cost_coeffs.drone_per_min * (airborne_until[si] - airborne_from[si]);
        }
    }

    IndependentEval {
        makespan_scaled,
        makespan_minutes: dm.minutes(makespan_scaled),
        cost,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::evaluate_plan;
    use crate::model::build_distance_model;
    use crate::plangen::{random_instance, random_plan, rng_from_seed};

    #[test]
    fn single_customer_out_and_back() {
        let instance = Instance::from_coords(
            "n1",
            &[(0.0, 0.0), (7.0, 0.0)],
            None,
            f64::INFINITY,
            "synthetic",
        )
        .unwrap();
        let cfg = VariantConfig::fstsp();
        let dm = build_distance_model(&instance, &cfg, 10).unwrap();
        let result = brute_force(&instance, &dm, &cfg, OracleLimits::default()).unwrap();
        // The depot-to-depot sortie is a forbidden loop, so the truck drives
        // out and back: 2 * 7/35 * 60 = 24 minutes.
        assert_eq!(result.soft_scaled, 240);
        assert_eq!(result.plan.drone_served_count(), 0);
        assert_eq!(result.plan.routes, vec![vec![0, 1, 0]]);
    }

    #[test]
    fn refuses_oversized_instances() {
        let mut rng = rng_from_seed(1);
        let instance = random_instance(&mut rng, 9, "big");
        let cfg = VariantConfig::fstsp();
        let dm = build_distance_model(&instance, &cfg, 10).unwrap();
        assert!(matches!(
            brute_force(&instance, &dm, &cfg, OracleLimits::default()),
            Err(OracleError::TooLarge { n: 9, cap: 8 })
        ));
    }

    #[test]
    fn refuses_to_exceed_evaluation_cap() {
        let mut rng = rng_from_seed(2);
        let instance = random_instance(&mut rng, 5, "capped");
        let cfg = VariantConfig::fstsp();
        let dm = build_distance_model(&instance, &cfg, 10).unwrap();
        let limits = OracleLimits { max_evaluations: Some(10) };
        assert!(matches!(
            brute_force(&instance, &dm, &cfg, limits),
            Err(OracleError::CapExceeded { .. })
        ));
    }

    #[test]
    fn oracle_beats_or_matches_pure_tsp() {
        let mut rng = rng_from_seed(3);
        for i in 0..5 {
            let instance = random_instance(&mut rng, 5, &format!("r{}", i));
            let cfg = VariantConfig::fstsp();
            let dm = build_distance_model(&instance, &cfg, 10).unwrap();
            let result = brute_force(&instance, &dm, &cfg, OracleLimits::default()).unwrap();
            // The all-truck optimum is one of the enumerated plans, so the
            // oracle value can only be at most the best TSP tour.
            let mut best_tsp = i64::MAX;
            let mut perm: Vec<usize> = (1..=5).collect();
            loop {
                let mut t = 0;
                let mut prev = 0;
                for &c in &perm {
                    t += dm.truck_time_scaled(prev, c);
                    prev = c;
                }
                t += dm.truck_time_scaled(prev, 0);
                // Truck-served customers add no service time under FSTSP.
                best_tsp = best_tsp.min(t);
                if !next_permutation(&mut perm) {
                    break;
                }
            }
            assert!(result.soft_scaled <= best_tsp);
        }
    }

    fn next_permutation(perm: &mut [usize]) -> bool {
        let n = perm.len();
        if n < 2 {
            return false;
        }
        let mut i = n - 1;
        while i > 0 && perm[i - 1] >= perm[i] {
            i -= 1;
        }
        if i == 0 {
            return false;
        }
        let mut j = n - 1;
        while perm[j] <= perm[i - 1] {
            j -= 1;
        }
        perm.swap(i - 1, j);
        perm[i..].reverse();
        true
    }

    #[test]
    fn independent_evaluator_agrees_with_eval() {
        let mut rng = rng_from_seed(4);
        for i in 0..200 {
            let (instance, cfg) = if i % 2 == 0 {
                (random_instance(&mut rng, 6, "a"), VariantConfig::tsp_md(2))
            } else {
                let mut cfg = VariantConfig::vrpd_11(2);
                cfg.endurance = f64::INFINITY; // exercise the cost path widely
                (
                    crate::plangen::random_instance_with_demands(&mut rng, 6, 5.0, "b"),
                    cfg,
                )
            };
            let dm = build_distance_model(&instance, &cfg, 10).unwrap();
            let plan = random_plan(&mut rng, &instance, &cfg);
            let (report, schedule) = evaluate_plan(&instance, &plan, &dm, &cfg);
            let indep = evaluate_plan_independent(&plan, &dm, &cfg);
            assert_eq!(schedule.makespan, indep.makespan_scaled, "plan {:?}", plan);
            let cost = crate::eval::cost_objective(&plan, &dm, &cfg);
            assert!(
                (cost - indep.cost).abs() <= 1e-9 * cost.abs().max(1.0),
                "{} vs {}",
                cost,
                indep.cost
            );
            let _ = report;
        }
    }

    #[test]
    fn vrpd_route_split_uses_multiple_trucks_when_cheaper() {
        // Two far-apart clusters: a single 1-truck route must cross between
        // them; with 2 trucks the oracle should split.
        let instance = Instance::from_coords(
            "split",
            &[(0.0, 0.0), (10.0, 0.0), (-10.0, 0.0)],
            Some(&[1.0, 1.0]),
            5.0,
            "synthetic",
        )
        .unwrap();
        let mut cfg = VariantConfig::vrpd_11(2);
        cfg.objective = Objective::Makespan;
        let dm = build_distance_model(&instance, &cfg, 10).unwrap();
        let result = brute_force(&instance, &dm, &cfg, OracleLimits::default()).unwrap();
        assert_eq!(result.plan.used_routes(), 2);
    }
}

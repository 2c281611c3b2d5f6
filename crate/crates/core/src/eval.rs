//! Phase 2's penalty function: simulate truck/drone timing, check every
//! variant constraint, and compose hard violations with the soft objective.
//!
//! All schedule arithmetic runs on scaled integer minutes so that the search
//! and the oracle's independent evaluator agree bit-for-bit; the cost
//! objective is computed in exact f64 from unscaled distances.

use crate::codec::{check_revisit, decode, GiantTour, Service, StructuredSolution};
use crate::candgen::CandidateGraph;
use crate::model::{
    DistanceModel, Instance, LoopPolicy, Objective, ScaledTime, VariantConfig,
};

/// Hard-violation price: anything violated scores at least this much.
pub const BIG: f64 = 1_000_000.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ViolationCounts {
    pub unserved_customer: u32,
    pub double_service: u32,
    pub ineligible_drone_customer: u32,
    pub loop_sortie: u32,
    pub revisit: u32,
    pub drone_concurrency: u32,
    pub endurance: u32,
    pub payload: u32,
    pub truck_capacity: u32,
    pub route_duration: u32,
    pub malformed_sortie: u32,
}

impl ViolationCounts {
    pub fn total(&self) -> u64 {
        (self.unserved_customer
            + self.double_service
            + self.ineligible_drone_customer
            + self.loop_sortie
            + self.revisit
            + self.drone_concurrency
            + self.endurance
            + self.payload
            + self.truck_capacity
            + self.route_duration
            + self.malformed_sortie) as u64
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PenaltyReport {
    pub counts: ViolationCounts,
    /// Makespan minutes or cost EUR.
    pub soft_objective: f64,
    /// Integer view for exact comparisons: scaled minutes for makespan,
    /// nano-euros for cost.
    pub soft_scaled: i64,
    pub total_penalty: f64,
}

impl PenaltyReport {
    /// Exact ordering key used by the search: hard violations first, then the
    /// integer soft objective.
    pub fn key(&self) -> (u64, i64) {
        (self.counts.total(), self.soft_scaled)
    }

    pub fn is_feasible(&self) -> bool {
        self.counts.total() == 0
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SortieTiming {
    /// Time D_L handling begins at the launch stop.
    pub launch_start: ScaledTime,
    /// Drone leaves the truck.
    pub depart: ScaledTime,
    pub arrive_customer: ScaledTime,
    pub arrive_retrieval: ScaledTime,
    /// max(truck, drone) at the retrieval stop plus D_R.
    pub rejoin_complete: ScaledTime,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RouteSchedule {
    pub arrival: Vec<ScaledTime>,
    pub departure: Vec<ScaledTime>,
    pub sortie_timing: Vec<SortieTiming>,
    pub return_time: ScaledTime,
    /// Rendezvous wait per sortie: |truck ready - drone ready| before D_R.
    pub rendezvous_wait: Vec<ScaledTime>,
    pub concurrency_violations: u32,
    pub max_airborne: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Schedule {
    pub routes: Vec<RouteSchedule>,
    pub makespan: ScaledTime,
}

/// Per-stop event order: arrival, retrieval syncs (sequential, each +D_R),
/// truck service, launches (sequential, each +D_L; the drone departs after
/// its own D_L). Customer color c sits at location id c by construction.
pub fn simulate_schedule(
    plan: &StructuredSolution,
    dm: &DistanceModel,
    config: &VariantConfig,
) -> Schedule {
    let dl = dm.scaled_minutes(config.launch_time);
    let dr = dm.scaled_minutes(config.retrieval_time);
    let st = dm.scaled_minutes(config.serv_truck);
    let sd = dm.scaled_minutes(config.serv_drone);
    let m = config.drone_count.max(1);

    let mut schedule = Schedule::default();
    for (r, stops) in plan.routes.iter().enumerate() {
        let sorties = plan.sorties.get(r).map(Vec::as_slice).unwrap_or(&[]);
        let mut serv_count = vec![0u32; stops.len()];
        for services in &plan.served {
            for sv in services {
                if let Service::Truck { route, stop } = *sv {
                    if route == r {
                        serv_count[stop] += 1;
                    }
                }
            }
        }
        let mut rs = RouteSchedule {
            arrival: vec![0; stops.len()],
            departure: vec![0; stops.len()],
            sortie_timing: vec![SortieTiming::default(); sorties.len()],
            rendezvous_wait: vec![0; sorties.len()],
            ..RouteSchedule::default()
        };
        let mut airborne = 0usize;
        let mut t: ScaledTime = 0;
        for s in 0..stops.len() {
            if s > 0 {
                t += dm.truck_time_scaled(stops[s - 1], stops[s]);
            }
            rs.arrival[s] = t;
            // Retrievals completing here.
            for (si, so) in sorties.iter().enumerate() {
                if so.retrieval_stop == s && so.launch_stop < s {
                    let tm = rs.sortie_timing[si];
                    rs.rendezvous_wait[si] = (t - tm.arrive_retrieval).abs();
                    let rejoin = t.max(tm.arrive_retrieval) + dr;
                    rs.sortie_timing[si].rejoin_complete = rejoin;
                    t = rejoin;
                    airborne = airborne.saturating_sub(1);
                }
            }
            // Truck service.
            t += st * serv_count[s] as i64;
            // Launches.
            for (si, so) in sorties.iter().enumerate() {
                if so.launch_stop == s {
                    if airborne >= m {
                        rs.concurrency_violations += 1;
                    }
                    rs.sortie_timing[si].launch_start = t;
                    t += dl;
                    let depart = t;
                    let cust_loc = so.customer;
                    let arrive_customer = depart + dm.drone_time_scaled(stops[s], cust_loc);
                    let retrieval_loc = stops[so.retrieval_stop.min(stops.len() - 1)];
                    let arrive_retrieval =
                        arrive_customer + sd + dm.drone_time_scaled(cust_loc, retrieval_loc);
                    rs.sortie_timing[si].depart = depart;
                    rs.sortie_timing[si].arrive_customer = arrive_customer;
                    rs.sortie_timing[si].arrive_retrieval = arrive_retrieval;
                    if so.retrieval_stop == s {
                        // In-place loop: the truck waits for the drone here.
                        rs.rendezvous_wait[si] = (t - arrive_retrieval).abs();
                        let rejoin = t.max(arrive_retrieval) + dr;
                        rs.sortie_timing[si].rejoin_complete = rejoin;
                        t = rejoin;
                    } else {
                        airborne += 1;
                        rs.max_airborne = rs.max_airborne.max(airborne);
                    }
                }
            }
            rs.departure[s] = t;
        }
        rs.return_time = t;
        schedule.makespan = schedule.makespan.max(t);
        schedule.routes.push(rs);
    }
    schedule
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SortieVerdict {
    Feasible,
    Loop,
    Ineligible,
    Endurance,
    DegenerateLeg,
}

/// Static sortie feasibility: i != j != k, loop policy, eligibility of j, and
/// the endurance inequality D_L + D_R + Serv_D + tau'(i,j) + tau'(j,k) <= e.
pub fn sortie_feasible(
    instance: &Instance,
    launch: usize,
    customer: usize,
    retrieval: usize,
    dm: &DistanceModel,
    config: &VariantConfig,
) -> SortieVerdict {
    let cust = &instance.customers[customer - 1];
    let cust_loc = cust.location;
    if launch == cust_loc || retrieval == cust_loc {
        return SortieVerdict::DegenerateLeg;
    }
    if config.loop_policy == LoopPolicy::ForbidLoop && launch == retrieval {
        return SortieVerdict::Loop;
    }
    if !cust.drone_eligible {
        return SortieVerdict::Ineligible;
    }
    if config.endurance.is_finite() {
        let total = dm.scaled_minutes(config.launch_time)
            + dm.scaled_minutes(config.retrieval_time)
            + dm.scaled_minutes(config.serv_drone)
            + dm.drone_time_scaled(launch, cust_loc)
            + dm.drone_time_scaled(cust_loc, retrieval);
        if total > dm.scaled_minutes(config.endurance) {
            return SortieVerdict::Endurance;
        }
    }
    SortieVerdict::Feasible
}

/// Exact (unscaled) operational cost of a plan:
/// truck per-mile + per-minute route terms plus drone per-mile + per-minute
/// sortie terms. Route duration runs from time 0 to depot return; drone
/// airborne minutes run from launchStart to rejoinComplete.
pub fn cost_objective(plan: &StructuredSolution, dm: &DistanceModel, config: &VariantConfig) -> f64 {
    let cc = config.cost_coeffs;
    let dl = config.launch_time;
    let dr = config.retrieval_time;
    let st = config.serv_truck;
    let sd = config.serv_drone;
    let mut cost = 0.0;
    for (r, stops) in plan.routes.iter().enumerate() {
        if stops.len() <= 2 && stops.iter().all(|&l| l == 0) {
            continue; // unused truck
        }
        let sorties = plan.sorties.get(r).map(Vec::as_slice).unwrap_or(&[]);
        let mut serv_count = vec![0u32; stops.len()];
        for services in &plan.served {
            for sv in services {
                if let Service::Truck { route, stop } = *sv {
                    if route == r {
                        serv_count[stop] += 1;
                    }
                }
            }
        }
        let mut miles = 0.0;
        let mut t = 0.0f64;
        let mut launch_start = vec![0.0f64; sorties.len()];
        let mut arrive_retrieval = vec![0.0f64; sorties.len()];
        let mut rejoin = vec![0.0f64; sorties.len()];
        for s in 0..stops.len() {
            if s > 0 {
                miles += dm.truck_dist(stops[s - 1], stops[s]);
                t += dm.truck_time(stops[s - 1], stops[s]);
            }
            for (si, so) in sorties.iter().enumerate() {
                if so.retrieval_stop == s && so.launch_stop < s {
                    t = t.max(arrive_retrieval[si]) + dr;
                    rejoin[si] = t;
                }
            }
            t += st * serv_count[s] as f64;
            for (si, so) in sorties.iter().enumerate() {
                if so.launch_stop == s {
                    launch_start[si] = t;
                    t += dl;
                    let cust_loc = so.customer;
                    let retrieval_loc = stops[so.retrieval_stop.min(stops.len() - 1)];
                    arrive_retrieval[si] = t
                        + dm.drone_time(stops[s], cust_loc)
                        + sd
                        + dm.drone_time(cust_loc, retrieval_loc);
                    if so.retrieval_stop == s {
                        t = t.max(arrive_retrieval[si]) + dr;
                        rejoin[si] = t;
                    }
                }
            }
        }
        cost += cc.truck_per_mile * miles + cc.truck_per_min * t;
        for (si, so) in sorties.iter().enumerate() {
            let cust_loc = so.customer;
            let retrieval_loc = stops[so.retrieval_stop.min(stops.len() - 1)];
            let flight_miles =
                dm.drone_dist(stops[so.launch_stop], cust_loc) + dm.drone_dist(cust_loc, retrieval_loc);
            let airborne = rejoin[si] - launch_start[si];
            cost += cc.drone_per_mile * flight_miles + cc.drone_per_min * airborne;
        }
    }
    cost
}

/// Full constraint check + schedule + objective for a structured plan.
pub fn evaluate_plan(
    instance: &Instance,
    plan: &StructuredSolution,
    dm: &DistanceModel,
    config: &VariantConfig,
) -> (PenaltyReport, Schedule) {
    let mut counts = ViolationCounts::default();

    for services in &plan.served {
        match services.len() {
            0 => counts.unserved_customer += 1,
            1 => {}
            k => counts.double_service += (k - 1) as u32,
        }
    }

    for (r, sorties) in plan.sorties.iter().enumerate() {
        for so in sorties {
            if so.retrieval_stop < so.launch_stop
                || so.launch_stop >= plan.routes[r].len()
                || so.retrieval_stop >= plan.routes[r].len()
            {
                counts.malformed_sortie += 1;
                continue;
            }
            let launch_loc = plan.routes[r][so.launch_stop];
            let retrieval_loc = plan.routes[r][so.retrieval_stop];
            match sortie_feasible(instance, launch_loc, so.customer, retrieval_loc, dm, config) {
                SortieVerdict::Feasible => {}
                SortieVerdict::Loop => counts.loop_sortie += 1,
                SortieVerdict::Ineligible => counts.ineligible_drone_customer += 1,
                SortieVerdict::Endurance => counts.endurance += 1,
                SortieVerdict::DegenerateLeg => counts.malformed_sortie += 1,
            }
            if let Some(q) = instance.customers[so.customer - 1].demand {
                if q > config.drone_payload {
                    counts.payload += 1;
                }
            }
        }
    }

    counts.revisit += check_revisit(plan, config.revisit_policy) as u32;

    // Truck capacity: all parcels of a route ride on its truck.
    if config.truck_capacity.is_finite() {
        let mut route_load = vec![0.0f64; plan.routes.len()];
        for (ci, services) in plan.served.iter().enumerate() {
            let q = instance.customers[ci].demand.unwrap_or(0.0);
            for sv in services {
                let r = match sv {
                    Service::Truck { route, .. } => *route,
                    Service::Drone { route, .. } => *route,
                };
                if r < route_load.len() {
                    route_load[r] += q;
                }
            }
        }
        for load in route_load {
            if load > config.truck_capacity {
                counts.truck_capacity += 1;
            }
        }
    }

    let schedule = simulate_schedule(plan, dm, config);
    for rs in &schedule.routes {
        counts.drone_concurrency += rs.concurrency_violations;
        if config.max_route_duration.is_finite()
            && rs.return_time > dm.scaled_minutes(config.max_route_duration)
        {
            counts.route_duration += 1;
        }
    }

    let (soft, soft_scaled) = match config.objective {
        Objective::Makespan => (dm.minutes(schedule.makespan), schedule.makespan),
        Objective::Cost => {
            let c = cost_objective(plan, dm, config);
            (c, (c * 1e9).round() as i64)
        }
    };
    let report = PenaltyReport {
        counts,
        soft_objective: soft,
        soft_scaled,
        total_penalty: BIG * counts.total() as f64 + soft,
    };
    (report, schedule)
}

/// Decode and evaluate a giant tour; deterministic for fixed inputs.
pub fn evaluate_tour(
    tour: &GiantTour,
    graph: &CandidateGraph,
    instance: &Instance,
    dm: &DistanceModel,
    config: &VariantConfig,
) -> StructuredSolution {
    let mut plan = decode(tour, graph, config);
    let (report, schedule) = evaluate_plan(instance, &plan, dm, config);
    plan.objective_value = report.soft_objective;
    plan.report = report;
    plan.schedule = Some(schedule);
    plan
}

/// The penalty value of a tour (spec's `penalty` operation).
pub fn penalty(
    tour: &GiantTour,
    graph: &CandidateGraph,
    instance: &Instance,
    dm: &DistanceModel,
    config: &VariantConfig,
) -> PenaltyReport {
    evaluate_tour(tour, graph, instance, dm, config).report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{Service, Sortie};
    use crate::model::{build_distance_model, Instance, VariantConfig};

    fn inst(coords: &[(f64, f64)]) -> Instance {
        Instance::from_coords("t", coords, None, f64::INFINITY, "synthetic").unwrap()
    }

    fn truck_plan(route: Vec<usize>, served_stops: &[(usize, usize)], colors: usize) -> StructuredSolution {
        let mut plan = StructuredSolution::empty(colors);
        plan.routes = vec![route];
        plan.sorties = vec![vec![]];
        for &(color, stop) in served_stops {
            plan.served[color - 1].push(Service::Truck { route: 0, stop });
        }
        plan
    }

    #[test]
    fn out_and_back_makespan() {
        let instance = inst(&[(0.0, 0.0), (7.0, 0.0)]);
        let cfg = VariantConfig::fstsp();
        let dm = build_distance_model(&instance, &cfg, 10).unwrap();
        let plan = truck_plan(vec![0, 1, 0], &[(1, 1)], 1);
        let (report, schedule) = evaluate_plan(&instance, &plan, &dm, &cfg);
        assert!(report.is_feasible());
        // 2 * 7/35*60 = 24 minutes.
        assert_eq!(schedule.makespan, 240);
        assert_eq!(report.soft_objective, 24.0);
        assert_eq!(report.total_penalty, 24.0);
    }

    #[test]
    fn rendezvous_synchronization_closed_form() {
        // Depot 0, launch at customer 1 (35 miles out), retrieval at
        // customer 3 (70 miles out); customer 2 sits above the midpoint so
        // both drone legs are exactly 25 miles (30 minutes at 50 mph).
        let h = (25.0f64 * 25.0 - 17.5 * 17.5).sqrt();
        let instance = inst(&[(0.0, 0.0), (35.0, 0.0), (52.5, h), (70.0, 0.0)]);
        let cfg = VariantConfig::fstsp();
        let dm = build_distance_model(&instance, &cfg, 10).unwrap();
        let mut plan = truck_plan(vec![0, 1, 3, 0], &[(1, 1), (3, 2)], 3);
        plan.sorties = vec![vec![Sortie { customer: 2, launch_stop: 1, retrieval_stop: 2 }]];
        plan.served[1] = vec![Service::Drone { route: 0, sortie: 0 }];
        let (report, schedule) = evaluate_plan(&instance, &plan, &dm, &cfg);
        assert!(report.is_feasible(), "{:?}", report.counts);
        // Truck: 60 min to loc 1, 60 more to loc 3. Drone departs at 60,
        // flies 25 mi @50 (30 min) twice: back at loc 3 at t=120. Both meet
        // exactly; makespan = 120 + the 70-mile return leg (120 min) = 240.
        let tm = schedule.routes[0].sortie_timing[0];
        assert_eq!(tm.depart, 600);
        assert_eq!(tm.arrive_retrieval, 1200);
        assert_eq!(schedule.routes[0].rendezvous_wait[0], 0);
        assert_eq!(schedule.makespan, 2400);

        // Same shape with 50-mile (60-minute) drone legs: now the truck
        // arrives first and waits for the drone.
        let h2 = (50.0f64 * 50.0 - 17.5 * 17.5).sqrt();
        let instance2 = inst(&[(0.0, 0.0), (35.0, 0.0), (52.5, h2), (70.0, 0.0)]);
        let dm2 = build_distance_model(&instance2, &cfg, 10).unwrap();
        let (report2, schedule2) = evaluate_plan(&instance2, &plan, &dm2, &cfg);
        assert!(report2.is_feasible());
        // Drone legs are now 60 min each: drone reaches loc 3 at 180, truck
        // at 120 and waits 60; makespan 180 + 120 return = 300.
        assert_eq!(schedule2.routes[0].rendezvous_wait[0], 600);
        assert_eq!(schedule2.makespan, 3000);
    }

    #[test]
    fn endurance_boundary_at_sacramento_parameters() {
        // v_D = 50 mph; legs of 13.0 minutes need 10.8333.. miles.
        let leg = |mins: f64| 50.0 * mins / 60.0;
        let cfg = VariantConfig::vrpd_11(1);
        let feasible = inst(&[(0.0, 0.0), (leg(13.0), 0.0), (2.0 * leg(13.0), 0.0)]);
        let dm = build_distance_model(&feasible, &cfg, 10).unwrap();
        // legs 13 + 13 plus D_L + D_R + Serv_D = 3 -> 29 <= 30.
        assert_eq!(sortie_feasible(&feasible, 0, 1, 2, &dm, &cfg), SortieVerdict::Feasible);
        let tight = inst(&[(0.0, 0.0), (leg(14.0), 0.0), (2.0 * leg(14.0), 0.0)]);
        let dm2 = build_distance_model(&tight, &cfg, 10).unwrap();
        // 14 + 14 + 3 = 31 > 30.
        assert_eq!(sortie_feasible(&tight, 0, 1, 2, &dm2, &cfg), SortieVerdict::Endurance);
    }

    #[test]
    fn loop_and_eligibility_verdicts() {
        let mut instance = inst(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]);
        let cfg = VariantConfig::fstsp();
        let dm = build_distance_model(&instance, &cfg, 10).unwrap();
        assert_eq!(sortie_feasible(&instance, 0, 1, 0, &dm, &cfg), SortieVerdict::Loop);
        assert_eq!(sortie_feasible(&instance, 0, 1, 2, &dm, &cfg), SortieVerdict::Feasible);
        instance.customers[0].drone_eligible = false;
        assert_eq!(sortie_feasible(&instance, 0, 1, 2, &dm, &cfg), SortieVerdict::Ineligible);
    }

    #[test]
    fn violation_adds_at_least_big() {
        let instance = inst(&[(0.0, 0.0), (10.0, 0.0), (20.0, 0.0)]);
        let cfg = VariantConfig::fstsp();
        let dm = build_distance_model(&instance, &cfg, 10).unwrap();
        let clean = truck_plan(vec![0, 1, 2, 0], &[(1, 1), (2, 2)], 2);
        let (clean_report, _) = evaluate_plan(&instance, &clean, &dm, &cfg);
        assert!(clean_report.is_feasible());
        // Same plan, customer 2 dropped: unserved.
        let broken = truck_plan(vec![0, 1, 2, 0], &[(1, 1)], 2);
        let (broken_report, _) = evaluate_plan(&instance, &broken, &dm, &cfg);
        assert_eq!(broken_report.counts.unserved_customer, 1);
        assert!(broken_report.total_penalty >= clean_report.total_penalty + BIG);
    }

    #[test]
    fn concurrency_counter_matches_fleet_size() {
        // Two overlapping sorties from consecutive stops.
        let instance = inst(&[(0.0, 0.0), (10.0, 0.0), (10.0, 30.0), (20.0, 0.0), (20.0, 30.0), (30.0, 0.0)]);
        let mk = |m: usize| VariantConfig::tsp_md(m);
        let cfg1 = VariantConfig::fstsp();
        let dm = build_distance_model(&instance, &cfg1, 10).unwrap();
        let mut plan = StructuredSolution::empty(5);
        plan.routes = vec![vec![0, 1, 3, 5, 0]];
        plan.sorties = vec![vec![
            Sortie { customer: 2, launch_stop: 1, retrieval_stop: 3 },
            Sortie { customer: 4, launch_stop: 2, retrieval_stop: 3 },
        ]];
        plan.served[0] = vec![Service::Truck { route: 0, stop: 1 }];
        plan.served[1] = vec![Service::Drone { route: 0, sortie: 0 }];
        plan.served[2] = vec![Service::Truck { route: 0, stop: 2 }];
        plan.served[3] = vec![Service::Drone { route: 0, sortie: 1 }];
        plan.served[4] = vec![Service::Truck { route: 0, stop: 3 }];
        let (r1, s1) = evaluate_plan(&instance, &plan, &dm, &cfg1);
        assert_eq!(s1.routes[0].max_airborne, 2);
        assert_eq!(r1.counts.drone_concurrency, 1, "m=1 must flag the second launch");
        let (r2, _) = evaluate_plan(&instance, &plan, &dm, &mk(2));
        assert_eq!(r2.counts.drone_concurrency, 0);
    }

    #[test]
    fn cost_doubles_with_coordinates_minus_fixed_terms() {
        let coords = [(0.0f64, 0.0), (3.0, 4.0), (8.0, 1.0)];
        let doubled: Vec<(f64, f64)> = coords.iter().map(|&(x, y)| (2.0 * x, 2.0 * y)).collect();
        let mut cfg = VariantConfig::vrpd_11(1);
        // Strip fixed time components so every term scales with distance.
        cfg.serv_truck = 0.0;
        cfg.serv_drone = 0.0;
        cfg.launch_time = 0.0;
        cfg.retrieval_time = 0.0;
        cfg.endurance = f64::INFINITY;
        let i1 = inst(&coords);
        let i2 = inst(&doubled);
        let dm1 = build_distance_model(&i1, &cfg, 10).unwrap();
        let dm2 = build_distance_model(&i2, &cfg, 10).unwrap();
        let mut plan = truck_plan(vec![0, 1, 0], &[(1, 1)], 2);
        plan.sorties = vec![vec![Sortie { customer: 2, launch_stop: 1, retrieval_stop: 2 }]];
        plan.served[1] = vec![Service::Drone { route: 0, sortie: 0 }];
        let c1 = cost_objective(&plan, &dm1, &cfg);
        let c2 = cost_objective(&plan, &dm2, &cfg);
        assert!((c2 - 2.0 * c1).abs() < 1e-9, "{} vs {}", c2, 2.0 * c1);
    }

    #[test]
    fn empty_route_costs_nothing() {
        let instance = inst(&[(0.0, 0.0), (10.0, 0.0)]);
        let cfg = VariantConfig::vrpd_11(2);
        let dm = build_distance_model(&instance, &cfg, 10).unwrap();
        let mut plan = StructuredSolution::empty(1);
        plan.routes = vec![vec![0, 1, 0], vec![0, 0]];
        plan.sorties = vec![vec![], vec![]];
        plan.served[0] = vec![Service::Truck { route: 0, stop: 1 }];
        let with_idle = cost_objective(&plan, &dm, &cfg);
        plan.routes.pop();
        plan.sorties.pop();
        let without = cost_objective(&plan, &dm, &cfg);
        assert_eq!(with_idle, without);
    }

    #[test]
    fn route_duration_and_capacity_checks() {
        let mut instance = inst(&[(0.0, 0.0), (100.0, 0.0)]);
        instance.customers[0].demand = Some(2000.0);
        instance.customers[0].drone_eligible = false;
        let cfg = VariantConfig::vrpd_11(1); // T_max 480 min, Q_T 1300 kg
        let dm = build_distance_model(&instance, &cfg, 10).unwrap();
        let plan = truck_plan(vec![0, 1, 0], &[(1, 1)], 1);
        let (report, _) = evaluate_plan(&instance, &plan, &dm, &cfg);
        assert_eq!(report.counts.truck_capacity, 1);
        // 200 miles at 35 mph ≈ 343 min + 2 min service: inside T_max.
        assert_eq!(report.counts.route_duration, 0);
    }
}

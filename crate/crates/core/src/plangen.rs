//! Seeded random instances, tours and structured plans, shared by the test
//! suites, the oracle cross-checks and the CLI's `generate` subcommand.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::candgen::CandidateGraph;
use crate::codec::{GiantTour, Service, Sortie, StructuredSolution};
use crate::model::{Instance, VariantConfig};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform instance on [0, 100]^2 with all customers drone-eligible.
pub fn random_instance(rng: &mut ChaCha8Rng, n: usize, name: &str) -> Instance {
    let coords: Vec<(f64, f64)> = (0..=n)
        .map(|_| (rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)))
        .collect();
    Instance::from_coords(name, &coords, None, f64::INFINITY, "synthetic").unwrap()
}

/// Instance with parcel demands; roughly one customer in six is too heavy
/// for the drone payload.
pub fn random_instance_with_demands(
    rng: &mut ChaCha8Rng,
    n: usize,
    drone_payload: f64,
    name: &str,
) -> Instance {
    let coords: Vec<(f64, f64)> = (0..=n)
        .map(|_| (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)))
        .collect();
    let demands: Vec<f64> = (0..n)
        .map(|_| {
            if rng.gen_ratio(1, 6) {
                drone_payload * rng.gen_range(1.5..4.0)
            } else {
                rng.gen_range(0.1..drone_payload)
            }
        })
        .collect();
    Instance::from_coords(name, &coords, Some(&demands), drone_payload, "synthetic").unwrap()
}

/// Random permutation of all graph nodes plus the virtual separators.
pub fn random_tour(rng: &mut ChaCha8Rng, graph: &CandidateGraph, trucks: usize) -> GiantTour {
    let mut order: Vec<usize> = (0..GiantTour::expected_len(graph, trucks)).collect();
    order.shuffle(rng);
    GiantTour { order }
}

/// A structurally well-formed random plan: every customer served exactly
/// once, sorties anchored to existing stops with launch <= retrieval. The
/// plan may freely violate operational constraints (endurance, loops,
/// capacity ...), which is exactly what evaluator cross-checks need.
pub fn random_plan(
    rng: &mut ChaCha8Rng,
    instance: &Instance,
    config: &VariantConfig,
) -> StructuredSolution {
    let n = instance.customer_count();
    let trucks = config.truck_count.max(1);
    let mut plan = StructuredSolution::empty(n);
    plan.routes = vec![Vec::new(); trucks];
    plan.sorties = vec![Vec::new(); trucks];

    let mut truck_served: Vec<usize> = Vec::new();
    let mut drone_served: Vec<usize> = Vec::new();
    for c in 1..=n {
        if instance.customers[c - 1].drone_eligible && rng.gen_bool(0.4) {
            drone_served.push(c);
        } else {
            truck_served.push(c);
        }
    }
    truck_served.shuffle(rng);

    let mut route_customers: Vec<Vec<usize>> = vec![Vec::new(); trucks];
    for c in truck_served {
        route_customers[rng.gen_range(0..trucks)].push(c);
    }
    for (r, customers) in route_customers.iter().enumerate() {
        let mut stops = vec![0];
        for (i, &c) in customers.iter().enumerate() {
            stops.push(instance.customers[c - 1].location);
            plan.served[c - 1].push(Service::Truck { route: r, stop: i + 1 });
        }
        stops.push(0);
        plan.routes[r] = stops;
    }

    for c in drone_served {
        // Prefer routes that actually move; any route works structurally.
        let r = (0..trucks)
            .filter(|&r| plan.routes[r].len() > 2)
            .choose(rng)
            .unwrap_or_else(|| rng.gen_range(0..trucks));
        let len = plan.routes[r].len();
        let launch = rng.gen_range(0..len - 1);
        let retrieval = rng.gen_range(launch + 1..len);
        plan.sorties[r].push(Sortie { customer: c, launch_stop: launch, retrieval_stop: retrieval });
    }
    for r in 0..trucks {
        plan.sorties[r].sort_by_key(|s| (s.launch_stop, s.customer));
        for (si, s) in plan.sorties[r].clone().iter().enumerate() {
            plan.served[s.customer - 1].push(Service::Drone { route: r, sortie: si });
        }
    }
    plan
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::evaluate_plan;
    use crate::model::build_distance_model;

    #[test]
    fn random_plan_serves_every_customer_once() {
        let mut rng = rng_from_seed(7);
        for _ in 0..50 {
            let instance = random_instance(&mut rng, 6, "r");
            let cfg = VariantConfig::tsp_md(2);
            let plan = random_plan(&mut rng, &instance, &cfg);
            assert!(plan.served.iter().all(|s| s.len() == 1));
            let dm = build_distance_model(&instance, &cfg, 10).unwrap();
            // Evaluation must be total on these plans.
            let (report, _) = evaluate_plan(&instance, &plan, &dm, &cfg);
            assert!(report.total_penalty.is_finite());
        }
    }

    #[test]
    fn seeded_generation_is_deterministic() {
        let a = random_instance(&mut rng_from_seed(3), 5, "a");
        let b = random_instance(&mut rng_from_seed(3), 5, "a");
        assert_eq!(a, b);
    }
}

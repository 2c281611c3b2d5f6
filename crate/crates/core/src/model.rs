//! Physical problem description, variant configuration and distance/time
//! semantics shared by every other module.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index into the instance's location table. 0 is always the depot.
pub type LocationId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub id: LocationId,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Customer {
    pub location: LocationId,
    /// Parcel mass in kg. Absent for instance sets that carry no demands.
    pub demand: Option<f64>,
    pub drone_eligible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub name: String,
    pub depot: Location,
    pub customers: Vec<Customer>,
    /// All locations by id: depot first, then one per customer, then any
    /// injected waypoint locations.
    pub locations: Vec<Location>,
    /// Provenance tag, e.g. "set1", "set4", "set6", "synthetic".
    pub area_tag: String,
}

impl Instance {
    /// Build an instance from raw coordinates, depot first.
    pub fn from_coords(
        name: &str,
        coords: &[(f64, f64)],
        demands: Option<&[f64]>,
        drone_payload: f64,
        area_tag: &str,
    ) -> Result<Self, ModelError> {
        if coords.len() < 2 {
            return Err(ModelError::EmptyInstance);
        }
        for &(x, y) in coords {
            if !x.is_finite() || !y.is_finite() {
                return Err(ModelError::NonFiniteCoordinate { x, y });
            }
        }
        let locations: Vec<Location> = coords
            .iter()
            .enumerate()
            .map(|(id, &(x, y))| Location { id, x, y })
            .collect();
        let customers = (1..coords.len())
            .map(|id| {
                let demand = demands.map(|d| d[id - 1]);
                let drone_eligible = match demand {
                    Some(q) => q <= drone_payload,
                    None => true,
                };
                Customer { location: id, demand, drone_eligible }
            })
            .collect();
        Ok(Instance {
            name: name.to_string(),
            depot: locations[0],
            customers,
            locations,
            area_tag: area_tag.to_string(),
        })
    }

    pub fn customer_count(&self) -> usize {
        self.customers.len()
    }

    pub fn location(&self, id: LocationId) -> Location {
        self.locations[id]
    }

    /// The customer whose own location is `loc`, if any.
    pub fn customer_at(&self, loc: LocationId) -> Option<&Customer> {
        self.customers.iter().find(|c| c.location == loc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    Fstsp,
    TspMd,
    Vrpd11,
    Vrpd1M,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Objective {
    Makespan,
    Cost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RevisitPolicy {
    /// Config1: a truck never returns to a physical location after leaving it.
    NoRevisit,
    /// Config2: revisits allowed.
    RevisitOk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LoopPolicy {
    /// Launch and retrieval locations of a sortie must differ.
    ForbidLoop,
    /// The truck may wait in place for the drone.
    AllowLoop,
}

/// Per-mile and per-minute operating prices in EUR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostCoeffs {
    pub truck_per_mile: f64,
    pub truck_per_min: f64,
    pub drone_per_mile: f64,
    pub drone_per_min: f64,
}

impl CostCoeffs {
    /// Operating prices of the Sacramento benchmark: fuel 1.13 EUR/L at
    /// 0.07 L/km, 1.61 km/mile, drone-to-truck ratio 0.1.
    pub fn sacramento() -> Self {
        CostCoeffs {
            truck_per_mile: 0.127351,
            truck_per_min: 0.7428808,
            drone_per_mile: 0.0127351,
            drone_per_min: 0.01061258,
        }
    }

    pub fn zero() -> Self {
        CostCoeffs { truck_per_mile: 0.0, truck_per_min: 0.0, drone_per_mile: 0.0, drone_per_min: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantConfig {
    pub variant: Variant,
    pub objective: Objective,
    /// Truck speed in distance units per hour.
    pub truck_speed: f64,
    /// Drone speed in distance units per hour.
    pub drone_speed: f64,
    /// Drones per truck.
    pub drone_count: usize,
    /// Trucks in the fleet.
    pub truck_count: usize,
    /// Maximum airborne minutes per sortie; infinite when unbounded.
    pub endurance: f64,
    /// Launch handling minutes.
    pub launch_time: f64,
    /// Retrieval handling minutes.
    pub retrieval_time: f64,
    /// Truck service minutes per customer.
    pub serv_truck: f64,
    /// Drone service minutes per customer.
    pub serv_drone: f64,
    /// Truck payload in kg; infinite when unbounded.
    pub truck_capacity: f64,
    /// Drone payload in kg; infinite when unbounded.
    pub drone_payload: f64,
    /// Maximum route duration in minutes; infinite when unbounded.
    pub max_route_duration: f64,
    pub cost_coeffs: CostCoeffs,
    pub revisit_policy: RevisitPolicy,
    pub loop_policy: LoopPolicy,
    /// Inject non-customer waypoint locations into the candidate pool.
    pub non_customer_lr: bool,
}

impl VariantConfig {
    /// FSTSP as run on the Poikonen set: one truck, one drone, makespan,
    /// no endurance or handling times, 50/35 speed ratio.
    pub fn fstsp() -> Self {
        VariantConfig {
            variant: Variant::Fstsp,
            objective: Objective::Makespan,
            truck_speed: 35.0,
            drone_speed: 50.0,
            drone_count: 1,
            truck_count: 1,
            endurance: f64::INFINITY,
            launch_time: 0.0,
            retrieval_time: 0.0,
            serv_truck: 0.0,
            serv_drone: 0.0,
            truck_capacity: f64::INFINITY,
            drone_payload: f64::INFINITY,
            max_route_duration: f64::INFINITY,
            cost_coeffs: CostCoeffs::zero(),
            revisit_policy: RevisitPolicy::NoRevisit,
            loop_policy: LoopPolicy::ForbidLoop,
            non_customer_lr: false,
        }
    }

    /// TSP-mD: one truck carrying `m` homogeneous drones.
    pub fn tsp_md(m: usize) -> Self {
        VariantConfig { variant: Variant::TspMd, drone_count: m, ..Self::fstsp() }
    }

    /// 1-1 VRP-D with the Sacramento parameter block (Table of Section 5.3).
    pub fn vrpd_11(trucks: usize) -> Self {
        VariantConfig {
            variant: Variant::Vrpd11,
            objective: Objective::Cost,
            truck_count: trucks,
            endurance: 30.0,
            launch_time: 1.0,
            retrieval_time: 1.0,
            serv_truck: 2.0,
            serv_drone: 1.0,
            truck_capacity: 1300.0,
            drone_payload: 5.0,
            max_route_duration: 480.0,
            cost_coeffs: CostCoeffs::sacramento(),
            ..Self::fstsp()
        }
    }

    /// 1-m VRP-D extension: per-truck drone fleets, min-makespan by default.
    pub fn vrpd_1m(trucks: usize, drones_per_truck: usize) -> Self {
        VariantConfig {
            variant: Variant::Vrpd1M,
            objective: Objective::Makespan,
            drone_count: drones_per_truck,
            ..Self::vrpd_11(trucks)
        }
    }

    /// FSTSP with the Murray Set 1 endurance / handling-time block.
    pub fn fstsp_murray(endurance_min: f64) -> Self {
        VariantConfig {
            endurance: endurance_min,
            launch_time: 1.0,
            retrieval_time: 1.0,
            ..Self::fstsp()
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.truck_speed <= 0.0 || self.drone_speed <= 0.0 {
            return Err(ModelError::ZeroSpeed);
        }
        match self.variant {
            Variant::Fstsp => {
                if self.drone_count != 1 || self.truck_count != 1 {
                    return Err(ModelError::FleetMismatch("FSTSP requires one truck and one drone"));
                }
            }
            Variant::TspMd => {
                if self.truck_count != 1 {
                    return Err(ModelError::FleetMismatch("TSP-mD requires a single truck"));
                }
            }
            Variant::Vrpd11 => {
                if self.drone_count != 1 {
                    return Err(ModelError::FleetMismatch("1-1 VRP-D pairs each truck with one drone"));
                }
            }
            Variant::Vrpd1M => {}
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("instance has no customers")]
    EmptyInstance,
    #[error("non-finite coordinate ({x}, {y})")]
    NonFiniteCoordinate { x: f64, y: f64 },
    #[error("vehicle speed must be positive")]
    ZeroSpeed,
    #[error("fleet configuration invalid: {0}")]
    FleetMismatch(&'static str),
    #[error("scale must be >= 1")]
    BadScale,
    #[error("explicit matrix is {got}x{got2}, expected {want}x{want}", got2 = .got)]
    BadMatrix { got: usize, want: usize },
}

/// Scaled integer minutes. All schedule arithmetic runs on this type so the
/// search and the oracle agree bit-for-bit.
pub type ScaledTime = i64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceMode {
    Euclidean,
    ExplicitMatrix,
}

/// Distances and travel times, in both exact and fixed-point integer views.
///
/// The integer view drives the search (times in minutes x scale, rounded
/// half-up); the exact view backs closure-phase objective recomputation.
#[derive(Debug, Clone)]
pub struct DistanceModel {
    pub mode: DistanceMode,
    pub scale: i64,
    n: usize,
    /// Exact truck distance, row-major n x n.
    truck_dist: Vec<f64>,
    /// Exact drone distance.
    drone_dist: Vec<f64>,
    /// Exact truck travel time in minutes.
    truck_time: Vec<f64>,
    /// Exact drone travel time in minutes.
    drone_time: Vec<f64>,
    /// round_half_up(scale * truck_time).
    truck_time_scaled: Vec<ScaledTime>,
    drone_time_scaled: Vec<ScaledTime>,
    /// round_half_up(scale * truck_dist); the solver's integer matrix view.
    truck_dist_scaled: Vec<i64>,
}

pub fn round_half_up(x: f64, scale: i64) -> i64 {
    (x * scale as f64 + 0.5).floor() as i64
}

impl DistanceModel {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn truck_dist(&self, i: LocationId, j: LocationId) -> f64 {
        self.truck_dist[i * self.n + j]
    }
    pub fn drone_dist(&self, i: LocationId, j: LocationId) -> f64 {
        self.drone_dist[i * self.n + j]
    }
    pub fn truck_time(&self, i: LocationId, j: LocationId) -> f64 {
        self.truck_time[i * self.n + j]
    }
    pub fn drone_time(&self, i: LocationId, j: LocationId) -> f64 {
        self.drone_time[i * self.n + j]
    }
    pub fn truck_time_scaled(&self, i: LocationId, j: LocationId) -> ScaledTime {
        self.truck_time_scaled[i * self.n + j]
    }
    pub fn drone_time_scaled(&self, i: LocationId, j: LocationId) -> ScaledTime {
        self.drone_time_scaled[i * self.n + j]
    }
    pub fn truck_dist_scaled(&self, i: LocationId, j: LocationId) -> i64 {
        self.truck_dist_scaled[i * self.n + j]
    }

    /// Scaled config parameters, rounded once so every consumer agrees.
    pub fn scaled_minutes(&self, minutes: f64) -> ScaledTime {
        if minutes.is_infinite() {
            ScaledTime::MAX / 4
        } else {
            round_half_up(minutes, self.scale)
        }
    }

    /// Convert a scaled time back to minutes for reporting.
    pub fn minutes(&self, t: ScaledTime) -> f64 {
        t as f64 / self.scale as f64
    }

    /// Euclidean model from instance coordinates.
    pub fn euclidean(instance: &Instance, config: &VariantConfig, scale: i64) -> Result<Self, ModelError> {
        if scale < 1 {
            return Err(ModelError::BadScale);
        }
        config.validate()?;
        let n = instance.locations.len();
        let mut truck_dist = vec![0.0; n * n];
        for i in 0..n {
            let a = instance.locations[i];
            if !a.x.is_finite() || !a.y.is_finite() {
                return Err(ModelError::NonFiniteCoordinate { x: a.x, y: a.y });
            }
            for j in 0..n {
                let b = instance.locations[j];
                truck_dist[i * n + j] = ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt();
            }
        }
        let drone_dist = truck_dist.clone();
        Self::finish(n, truck_dist, drone_dist, None, None, config, scale)
    }

    /// Explicit travel-time matrices (minutes), as in the Murray files. Truck
    /// distance falls back to truck time; the cost objective is not meaningful
    /// in this mode.
    pub fn explicit(
        truck_time: Vec<Vec<f64>>,
        drone_time: Vec<Vec<f64>>,
        config: &VariantConfig,
        scale: i64,
    ) -> Result<Self, ModelError> {
        if scale < 1 {
            return Err(ModelError::BadScale);
        }
        config.validate()?;
        let n = truck_time.len();
        for m in [&truck_time, &drone_time] {
            if m.len() != n || m.iter().any(|r| r.len() != n) {
                return Err(ModelError::BadMatrix { got: m.len(), want: n });
            }
        }
        let flat = |m: &Vec<Vec<f64>>| m.iter().flat_map(|r| r.iter().copied()).collect::<Vec<_>>();
        let tt = flat(&truck_time);
        let dt = flat(&drone_time);
        let truck_dist = tt.clone();
        let drone_dist = dt.clone();
        let mut model = Self::finish(n, truck_dist, drone_dist, Some(tt), Some(dt), config, scale)?;
        model.mode = DistanceMode::ExplicitMatrix;
        Ok(model)
    }

    /// Rebuild a model from travel-time matrices (minutes), deriving the
    /// distance view from the config's speeds so per-mile cost terms stay
    /// meaningful. This is how solver-format files round-trip back into a
    /// usable model without the original coordinates.
    pub fn from_travel_times(
        truck_time: Vec<Vec<f64>>,
        drone_time: Vec<Vec<f64>>,
        config: &VariantConfig,
        scale: i64,
    ) -> Result<Self, ModelError> {
        if scale < 1 {
            return Err(ModelError::BadScale);
        }
        config.validate()?;
        let n = truck_time.len();
        for m in [&truck_time, &drone_time] {
            if m.len() != n || m.iter().any(|r| r.len() != n) {
                return Err(ModelError::BadMatrix { got: m.len(), want: n });
            }
        }
        let flat = |m: &Vec<Vec<f64>>| m.iter().flat_map(|r| r.iter().copied()).collect::<Vec<_>>();
        let tt = flat(&truck_time);
        let dt = flat(&drone_time);
        let truck_dist: Vec<f64> = tt.iter().map(|t| t / 60.0 * config.truck_speed).collect();
        let drone_dist: Vec<f64> = dt.iter().map(|t| t / 60.0 * config.drone_speed).collect();
        let mut model = Self::finish(n, truck_dist, drone_dist, Some(tt), Some(dt), config, scale)?;
        model.mode = DistanceMode::ExplicitMatrix;
        Ok(model)
    }

    fn finish(
        n: usize,
        truck_dist: Vec<f64>,
        drone_dist: Vec<f64>,
        truck_time: Option<Vec<f64>>,
        drone_time: Option<Vec<f64>>,
        config: &VariantConfig,
        scale: i64,
    ) -> Result<Self, ModelError> {
        let truck_time = truck_time
            .unwrap_or_else(|| truck_dist.iter().map(|d| d / config.truck_speed * 60.0).collect());
        let drone_time = drone_time
            .unwrap_or_else(|| drone_dist.iter().map(|d| d / config.drone_speed * 60.0).collect());
        let truck_time_scaled = truck_time.iter().map(|&t| round_half_up(t, scale)).collect();
        let drone_time_scaled = drone_time.iter().map(|&t| round_half_up(t, scale)).collect();
        let truck_dist_scaled = truck_dist.iter().map(|&d| round_half_up(d, scale)).collect();
        Ok(DistanceModel {
            mode: DistanceMode::Euclidean,
            scale,
            n,
            truck_dist,
            drone_dist,
            truck_time,
            drone_time,
            truck_time_scaled,
            drone_time_scaled,
            truck_dist_scaled,
        })
    }
}

/// Build the distance model an instance/config pair implies.
pub fn build_distance_model(
    instance: &Instance,
    config: &VariantConfig,
    scale: i64,
) -> Result<DistanceModel, ModelError> {
    DistanceModel::euclidean(instance, config, scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(coords: &[(f64, f64)]) -> Instance {
        Instance::from_coords("toy", coords, None, f64::INFINITY, "synthetic").unwrap()
    }

    #[test]
    fn three_four_five_triangle() {
        let inst = toy(&[(0.0, 0.0), (3.0, 4.0)]);
        let dm = build_distance_model(&inst, &VariantConfig::fstsp(), 10).unwrap();
        assert_eq!(dm.truck_dist(0, 1), 5.0);
        assert!((dm.truck_time(0, 1) - 5.0 / 35.0 * 60.0).abs() < 1e-12);
        assert!((dm.drone_time(0, 1) - 5.0 / 50.0 * 60.0).abs() < 1e-12);
    }

    #[test]
    fn zero_diagonal_and_symmetry() {
        let inst = toy(&[(0.0, 0.0), (1.0, 2.0), (4.0, 1.0)]);
        let dm = build_distance_model(&inst, &VariantConfig::fstsp(), 10).unwrap();
        for i in 0..3 {
            assert_eq!(dm.truck_time_scaled(i, i), 0);
            for j in 0..3 {
                assert_eq!(dm.truck_dist_scaled(i, j), dm.truck_dist_scaled(j, i));
            }
        }
    }

    #[test]
    fn scaled_matches_exact_within_half_ulp() {
        // Random 5-point instance, fixed numbers.
        let inst = toy(&[(0.0, 0.0), (1.3, 7.1), (9.42, 3.3), (5.5, 5.5), (2.25, 8.75)]);
        let dm = build_distance_model(&inst, &VariantConfig::fstsp(), 10).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let exact = dm.truck_dist(i, j);
                let scaled = dm.truck_dist_scaled(i, j) as f64 / 10.0;
                assert!((scaled - exact).abs() <= 0.05 + 1e-12, "{i},{j}: {scaled} vs {exact}");
            }
        }
    }

    #[test]
    fn rejects_zero_speed() {
        let inst = toy(&[(0.0, 0.0), (1.0, 1.0)]);
        let mut cfg = VariantConfig::fstsp();
        cfg.truck_speed = 0.0;
        assert!(build_distance_model(&inst, &cfg, 10).is_err());
    }

    #[test]
    fn rejects_non_finite_coordinate() {
        assert!(Instance::from_coords("bad", &[(0.0, 0.0), (f64::NAN, 1.0)], None, f64::INFINITY, "t").is_err());
    }

    #[test]
    fn fleet_invariants() {
        let mut cfg = VariantConfig::fstsp();
        cfg.drone_count = 2;
        assert!(cfg.validate().is_err());
        let mut cfg = VariantConfig::tsp_md(5);
        cfg.truck_count = 2;
        assert!(cfg.validate().is_err());
        assert!(VariantConfig::vrpd_11(3).validate().is_ok());
    }
}

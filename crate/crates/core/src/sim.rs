//! Deterministic discrete-event ride-hailing simulation: request arrivals,
//! a periodic minimum-distance matching engine, a periodic rebalancing hook
//! driven by an external controller, straight-line vehicle movement, and the
//! service metrics report.
//!
//! Determinism contract: identical (config, zones, requests, controller)
//! produce identical reports. The event queue orders by (time, event class,
//! insertion sequence); all randomness comes from the seeded RNG used once at
//! initialization for intra-zone request points.

use crate::assign::min_cost_matching;
use crate::error::{Error, Result};
use crate::graph::{ZoneSet, METERS_PER_MILE};
use crate::io::Trip;
use crate::mat::Mat;
use crate::mivr::{FleetState, RebalancePlan};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Batch size limit for the exact assignment; larger batches fall back to
/// greedy nearest-first matching.
const EXACT_MATCH_LIMIT: usize = 64;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SimConfig {
    pub fleet_size: u32,
    pub match_epoch_s: u32,
    pub rebalance_epoch_s: u32,
    /// Straight-line travel speed in meters per second.
    pub speed_mps: f64,
    /// Waiting requests older than this are abandoned.
    pub max_wait_s: f64,
    /// Radius of the uniform jitter applied to request points around zone
    /// centroids.
    pub zone_radius_m: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            fleet_size: 2000,
            match_epoch_s: 30,
            rebalance_epoch_s: 300,
            speed_mps: 6.0,
            max_wait_s: 600.0,
            zone_radius_m: 300.0,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fleet_size < 1 {
            return Err(Error::input("fleet must have at least one vehicle"));
        }
        if self.match_epoch_s == 0 || self.rebalance_epoch_s == 0 {
            return Err(Error::input("epochs must be positive"));
        }
        if self.rebalance_epoch_s % self.match_epoch_s != 0 {
            return Err(Error::input(
                "rebalance epoch must be a multiple of the match epoch",
            ));
        }
        // NaN fails all of these comparisons and is rejected.
        if !(self.speed_mps.is_finite() && self.speed_mps > 0.0) {
            return Err(Error::input("speed must be positive"));
        }
        if !(self.max_wait_s.is_finite() && self.max_wait_s > 0.0)
            || !(self.zone_radius_m.is_finite() && self.zone_radius_m >= 0.0)
        {
            return Err(Error::input("max wait and zone radius must be valid"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn dist(&self, other: &Point) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VehicleStatus {
    Idle,
    Rebalancing,
    Pickup,
    Occupied,
}

#[derive(Clone, Copy, Debug)]
enum LegKind {
    /// Heading to a request's origin point.
    Pickup(usize),
    /// Carrying the passenger of a request to its destination point.
    Occupied(usize),
    /// Repositioning toward a zone centroid.
    Rebalance(usize),
}

#[derive(Clone, Copy, Debug)]
struct Leg {
    kind: LegKind,
    target: Point,
    start_s: f64,
    arrive_s: f64,
    dist_m: f64,
}

#[derive(Clone, Debug)]
pub struct Vehicle {
    pub id: u32,
    pub zone: usize,
    pub pos: Point,
    pub status: VehicleStatus,
    pub odometer_total_m: f64,
    pub odometer_occupied_m: f64,
    pub rebalance_trips: u32,
    leg: Option<Leg>,
}

/// Completed movement leg, kept for invariant checking.
#[derive(Clone, Copy, Debug)]
pub struct LegRecord {
    pub vehicle: u32,
    pub start_s: f64,
    pub end_s: f64,
    pub dist_m: f64,
    pub occupied: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RequestOutcome {
    Waiting,
    Matched,
    Served,
    Abandoned,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimRequest {
    pub id: u64,
    pub arrival_s: f64,
    pub origin_zone: usize,
    pub dest_zone: usize,
    pub origin: Point,
    pub dest: Point,
    pub match_s: Option<f64>,
    pub pickup_s: Option<f64>,
    pub outcome: RequestOutcome,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum EventKind {
    Arrival(usize),
    VehicleArrives(u32),
    MatchEpoch,
    RebalanceEpoch,
}

impl EventKind {
    /// Tie-break class at equal times: arrivals first so new requests are
    /// matchable at that instant, then movement completions so newly idle
    /// vehicles are available, then the matching tick, then rebalancing.
    fn class(&self) -> u8 {
        match self {
            EventKind::Arrival(_) => 0,
            EventKind::VehicleArrives(_) => 1,
            EventKind::MatchEpoch => 2,
            EventKind::RebalanceEpoch => 3,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Event {
    time: f64,
    class: u8,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap, we want the earliest event.
        other
            .time
            .total_cmp(&self.time)
            .then(other.class.cmp(&self.class))
            .then(other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub struct SimState {
    pub config: SimConfig,
    pub zones: ZoneSet,
    pub vehicles: Vec<Vehicle>,
    pub requests: Vec<SimRequest>,
    pub legs: Vec<LegRecord>,
    pub now_s: f64,
    pub greedy_match_batches: u32,
    pub controller_failures: u32,
    events: BinaryHeap<Event>,
    seq: u64,
    /// Indices of requests that are waiting and unmatched.
    waiting: Vec<usize>,
}

/// Rolling-horizon controller hook invoked at every rebalance epoch.
pub type Controller<'a> = dyn FnMut(&FleetState) -> Result<RebalancePlan> + 'a;

/// Initializes the simulation: vehicles are distributed round-robin across
/// zones at the zone centroids, request points are jittered uniformly within
/// the zone radius using the seeded RNG, and arrival events are queued.
///
/// `sim_start_epoch_s` anchors the simulation clock: event times are seconds
/// since this epoch, and trips before it are rejected.
pub fn init_sim(
    config: &SimConfig,
    zones: &ZoneSet,
    trips: &[Trip],
    sim_start_epoch_s: i64,
) -> Result<SimState> {
    config.validate()?;
    if zones.n() == 0 {
        return Err(Error::input("simulation needs a non-empty zone set"));
    }

    let n = zones.n();
    let vehicles: Vec<Vehicle> = (0..config.fleet_size)
        .map(|v| {
            let zone = (v as usize) % n;
            let z = zones.zone(zone);
            Vehicle {
                id: v,
                zone,
                pos: Point { x: z.x_m, y: z.y_m },
                status: VehicleStatus::Idle,
                odometer_total_m: 0.0,
                odometer_occupied_m: 0.0,
                rebalance_trips: 0,
                leg: None,
            }
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let jitter = |zone: usize, rng: &mut ChaCha8Rng| -> Point {
        let z = zones.zone(zone);
        let r = config.zone_radius_m * rng.random::<f64>().sqrt();
        let theta = rng.random::<f64>() * std::f64::consts::TAU;
        Point {
            x: z.x_m + r * theta.cos(),
            y: z.y_m + r * theta.sin(),
        }
    };

    let mut state = SimState {
        config: *config,
        zones: zones.clone(),
        vehicles,
        requests: Vec::with_capacity(trips.len()),
        legs: Vec::new(),
        now_s: 0.0,
        greedy_match_batches: 0,
        controller_failures: 0,
        events: BinaryHeap::new(),
        seq: 0,
        waiting: Vec::new(),
    };

    for t in trips {
        if t.origin >= n || t.dest >= n {
            return Err(Error::input(format!("trip {} has out-of-range zone", t.id)));
        }
        let arrival_s = (t.arrival_epoch_s - sim_start_epoch_s) as f64;
        if arrival_s < 0.0 {
            return Err(Error::input(format!(
                "trip {} arrives before the simulation start",
                t.id
            )));
        }
        let idx = state.requests.len();
        let origin = jitter(t.origin, &mut rng);
        let dest = jitter(t.dest, &mut rng);
        state.requests.push(SimRequest {
            id: t.id,
            arrival_s,
            origin_zone: t.origin,
            dest_zone: t.dest,
            origin,
            dest,
            match_s: None,
            pickup_s: None,
            outcome: RequestOutcome::Waiting,
        });
        state.push_event(arrival_s, EventKind::Arrival(idx));
    }
    Ok(state)
}

impl SimState {
    fn push_event(&mut self, time: f64, kind: EventKind) {
        debug_assert!(time.is_finite());
        let ev = Event {
            time,
            class: kind.class(),
            seq: self.seq,
            kind,
        };
        self.seq += 1;
        self.events.push(ev);
    }

    fn idle_vehicle_ids(&self) -> Vec<u32> {
        self.vehicles
            .iter()
            .filter(|v| v.status == VehicleStatus::Idle)
            .map(|v| v.id)
            .collect()
    }

    /// Idle vehicle counts per zone, snapshotted for the controller.
    pub fn idle_per_zone(&self) -> Vec<u32> {
        let mut counts = vec![0u32; self.zones.n()];
        for v in &self.vehicles {
            if v.status == VehicleStatus::Idle {
                counts[v.zone] += 1;
            }
        }
        counts
    }

    fn start_leg(&mut self, vehicle_id: u32, kind: LegKind, target: Point, now: f64) {
        let speed = self.config.speed_mps;
        let v = &mut self.vehicles[vehicle_id as usize];
        let dist = v.pos.dist(&target);
        let arrive = now + dist / speed;
        v.leg = Some(Leg {
            kind,
            target,
            start_s: now,
            arrive_s: arrive,
            dist_m: dist,
        });
        self.push_event(arrive, EventKind::VehicleArrives(vehicle_id));
    }

    /// Matching engine tick: abandon requests that waited too long, then
    /// assign idle vehicles to the remaining waiting requests minimizing
    /// total pickup distance (exact up to 64x64 batches, greedy beyond).
    pub fn matching_step(&mut self, now: f64) {
        // Abandonment first.
        let max_wait = self.config.max_wait_s;
        let mut still_waiting = Vec::with_capacity(self.waiting.len());
        for &ri in &self.waiting {
            if now - self.requests[ri].arrival_s > max_wait {
                self.requests[ri].outcome = RequestOutcome::Abandoned;
            } else {
                still_waiting.push(ri);
            }
        }
        self.waiting = still_waiting;

        if self.waiting.is_empty() {
            return;
        }
        let idle = self.idle_vehicle_ids();
        if idle.is_empty() {
            return;
        }

        let assignments: Vec<(usize, u32)> =
            if self.waiting.len() <= EXACT_MATCH_LIMIT && idle.len() <= EXACT_MATCH_LIMIT {
                let cost = Mat::from_fn(self.waiting.len(), idle.len(), |r, c| {
                    self.requests[self.waiting[r]]
                        .origin
                        .dist(&self.vehicles[idle[c] as usize].pos)
                });
                min_cost_matching(&cost)
                    .into_iter()
                    .enumerate()
                    .filter_map(|(r, col)| col.map(|c| (self.waiting[r], idle[c])))
                    .collect()
            } else {
                self.greedy_match_batches += 1;
                let mut taken = vec![false; idle.len()];
                let mut out = Vec::new();
                for &ri in &self.waiting {
                    let origin = self.requests[ri].origin;
                    let mut best: Option<(usize, f64)> = None;
                    for (c, &vid) in idle.iter().enumerate() {
                        if taken[c] {
                            continue;
                        }
                        let d = origin.dist(&self.vehicles[vid as usize].pos);
                        if best.map_or(true, |(_, bd)| d < bd) {
                            best = Some((c, d));
                        }
                    }
                    if let Some((c, _)) = best {
                        taken[c] = true;
                        out.push((ri, idle[c]));
                    }
                }
                out
            };

        for (ri, vid) in assignments {
            self.requests[ri].match_s = Some(now);
            self.requests[ri].outcome = RequestOutcome::Matched;
            self.waiting.retain(|&w| w != ri);
            let target = self.requests[ri].origin;
            self.vehicles[vid as usize].status = VehicleStatus::Pickup;
            self.start_leg(vid, LegKind::Pickup(ri), target, now);
        }
    }

    /// Applies a continuous rebalancing plan: rounds flows to integer vehicle
    /// moves by largest-remainder rounding (respecting idle supply per origin
    /// zone), then dispatches idle vehicles nearest-first toward destination
    /// zone centroids.
    pub fn apply_rebalance_plan(&mut self, plan: &RebalancePlan, now: f64) -> usize {
        let idle = self.idle_per_zone();
        let moves = round_flows_largest_remainder(&plan.flows, &idle);
        let n = self.zones.n();
        let mut dispatched = 0usize;
        for i in 0..n {
            // Idle vehicles of this zone, consumed across destinations.
            let mut pool: Vec<u32> = self
                .vehicles
                .iter()
                .filter(|v| v.status == VehicleStatus::Idle && v.zone == i)
                .map(|v| v.id)
                .collect();
            for j in 0..n {
                let count = moves[(i, j)] as u32;
                if i == j || count == 0 {
                    continue;
                }
                let zj = self.zones.zone(j);
                let target = Point { x: zj.x_m, y: zj.y_m };
                // Nearest to the destination first, ties by vehicle id.
                pool.sort_by(|&a, &b| {
                    let da = self.vehicles[a as usize].pos.dist(&target);
                    let db = self.vehicles[b as usize].pos.dist(&target);
                    da.total_cmp(&db).then(a.cmp(&b))
                });
                for _ in 0..count {
                    let Some(vid) = pool.first().copied() else {
                        break;
                    };
                    pool.remove(0);
                    let v = &mut self.vehicles[vid as usize];
                    v.status = VehicleStatus::Rebalancing;
                    v.rebalance_trips += 1;
                    self.start_leg(vid, LegKind::Rebalance(j), target, now);
                    dispatched += 1;
                }
            }
        }
        dispatched
    }

    /// Rebalancing engine tick: snapshot idle supply, invoke the controller,
    /// apply the plan. Controller failures are logged and skipped so the
    /// simulation continues with a zero plan.
    pub fn rebalancing_step(&mut self, controller: &mut Controller, interval_index: usize, now: f64) {
        let state = FleetState {
            idle: self.idle_per_zone(),
            interval_index,
        };
        match controller(&state) {
            Ok(plan) => {
                self.apply_rebalance_plan(&plan, now);
            }
            Err(_) => {
                self.controller_failures += 1;
            }
        }
    }

    fn complete_leg(&mut self, vehicle_id: u32, now: f64) {
        let Some(leg) = self.vehicles[vehicle_id as usize].leg else {
            return; // stale event
        };
        if (leg.arrive_s - now).abs() > 1e-9 {
            return; // superseded leg
        }
        let occupied = matches!(leg.kind, LegKind::Occupied(_));
        {
            let v = &mut self.vehicles[vehicle_id as usize];
            v.pos = leg.target;
            v.odometer_total_m += leg.dist_m;
            if occupied {
                v.odometer_occupied_m += leg.dist_m;
            }
            v.leg = None;
        }
        self.legs.push(LegRecord {
            vehicle: vehicle_id,
            start_s: leg.start_s,
            end_s: leg.arrive_s,
            dist_m: leg.dist_m,
            occupied,
        });

        match leg.kind {
            LegKind::Pickup(ri) => {
                self.requests[ri].pickup_s = Some(now);
                self.requests[ri].outcome = RequestOutcome::Served;
                let dest = self.requests[ri].dest;
                self.vehicles[vehicle_id as usize].status = VehicleStatus::Occupied;
                self.start_leg(vehicle_id, LegKind::Occupied(ri), dest, now);
            }
            LegKind::Occupied(ri) => {
                let v = &mut self.vehicles[vehicle_id as usize];
                v.status = VehicleStatus::Idle;
                v.zone = self.requests[ri].dest_zone;
            }
            LegKind::Rebalance(zone) => {
                let v = &mut self.vehicles[vehicle_id as usize];
                v.status = VehicleStatus::Idle;
                v.zone = zone;
            }
        }
    }
}

/// Rounds nonnegative fractional flows to integers. The global total is
/// preserved at the nearest integer; per-origin totals never exceed either
/// the idle supply or the ceiling of the fractional row sum. Extra units go
/// to the cells with the largest remainders (ties broken by position).
pub fn round_flows_largest_remainder(flows: &Mat, idle: &[u32]) -> Mat {
    let n = flows.rows();
    let mut result = Mat::zeros(n, n);
    let mut total = 0.0;
    let mut row_caps = vec![0i64; n];
    let mut cells: Vec<(usize, usize, f64, f64)> = Vec::new(); // (i, j, floor, remainder)

    for i in 0..n {
        let mut row_sum = 0.0;
        let mut row_floor = 0i64;
        for j in 0..n {
            if i == j {
                continue;
            }
            let v = flows[(i, j)].max(0.0);
            if v == 0.0 {
                continue;
            }
            row_sum += v;
            total += v;
            let fl = v.floor();
            row_floor += fl as i64;
            result[(i, j)] = fl;
            cells.push((i, j, fl, v - fl));
        }
        let ceil_cap = (row_sum - 1e-9).ceil().max(0.0) as i64;
        row_caps[i] = ceil_cap.min(idle[i] as i64) - row_floor;
    }

    let target = (total + 0.5).floor() as i64;
    let assigned: i64 = (0..n)
        .map(|i| (0..n).map(|j| result[(i, j)] as i64).sum::<i64>())
        .sum();
    let mut extras = target - assigned;

    cells.sort_by(|a, b| b.3.total_cmp(&a.3).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    for (i, j, _, rem) in cells {
        if extras <= 0 {
            break;
        }
        if rem <= 0.0 || row_caps[i] <= 0 {
            continue;
        }
        result[(i, j)] += 1.0;
        row_caps[i] -= 1;
        extras -= 1;
    }
    result
}

/// Per-zone mean wait and the population standard deviation across zones
/// that served at least one request.
fn zone_wait_stats(requests: &[SimRequest], n_zones: usize) -> (Vec<Option<f64>>, f64) {
    let mut sums = vec![0.0; n_zones];
    let mut counts = vec![0usize; n_zones];
    for r in requests {
        if let (RequestOutcome::Served, Some(pickup)) = (r.outcome, r.pickup_s) {
            sums[r.origin_zone] += pickup - r.arrival_s;
            counts[r.origin_zone] += 1;
        }
    }
    let means: Vec<Option<f64>> = (0..n_zones)
        .map(|z| {
            if counts[z] > 0 {
                Some(sums[z] / counts[z] as f64)
            } else {
                None
            }
        })
        .collect();
    let present: Vec<f64> = means.iter().flatten().copied().collect();
    let std = if present.len() < 2 {
        0.0
    } else {
        let mean = present.iter().sum::<f64>() / present.len() as f64;
        (present.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / present.len() as f64).sqrt()
    };
    (means, std)
}

/// Aggregated service metrics. The request log is carried in memory but not
/// serialized; reports with identical metrics serialize identically.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimReport {
    pub total_requests: usize,
    pub served: usize,
    pub abandoned: usize,
    pub still_waiting: usize,
    pub unsatisfaction_rate: f64,
    pub wait_avg_s: f64,
    pub wait_std_across_zones_s: f64,
    pub per_zone_wait_mean_s: Vec<Option<f64>>,
    pub nonoccupied_vmt_avg_mi: f64,
    pub occupied_vmt_avg_mi: f64,
    pub total_vmt_avg_mi: f64,
    pub rebalancing_trips_avg: f64,
    pub greedy_match_batches: u32,
    pub controller_failures: u32,
    #[serde(skip)]
    pub request_log: Vec<SimRequest>,
}

fn run_loop(state: &mut SimState, controller: &mut Controller, horizon_s: f64) -> Result<()> {
    if horizon_s <= 0.0 {
        return Err(Error::input("horizon must be positive"));
    }
    let match_epoch = state.config.match_epoch_s as f64;
    let rebalance_epoch = state.config.rebalance_epoch_s as f64;
    state.push_event(match_epoch, EventKind::MatchEpoch);
    state.push_event(rebalance_epoch, EventKind::RebalanceEpoch);

    while let Some(ev) = state.events.peek().copied() {
        if ev.time > horizon_s {
            break;
        }
        state.events.pop();
        state.now_s = ev.time;
        match ev.kind {
            EventKind::Arrival(ri) => state.waiting.push(ri),
            EventKind::VehicleArrives(vid) => state.complete_leg(vid, ev.time),
            EventKind::MatchEpoch => {
                state.matching_step(ev.time);
                let next = ev.time + match_epoch;
                if next <= horizon_s {
                    state.push_event(next, EventKind::MatchEpoch);
                }
            }
            EventKind::RebalanceEpoch => {
                let interval_index = (ev.time / rebalance_epoch) as usize;
                state.rebalancing_step(controller, interval_index, ev.time);
                let next = ev.time + rebalance_epoch;
                if next <= horizon_s {
                    state.push_event(next, EventKind::RebalanceEpoch);
                }
            }
        }
    }
    state.now_s = horizon_s;
    Ok(())
}

fn summarize(state: &SimState) -> SimReport {
    let total = state.requests.len();
    let served = state
        .requests
        .iter()
        .filter(|r| r.outcome == RequestOutcome::Served)
        .count();
    let abandoned = state
        .requests
        .iter()
        .filter(|r| r.outcome == RequestOutcome::Abandoned)
        .count();
    let still_waiting = total - served - abandoned;
    let wait_sum: f64 = state
        .requests
        .iter()
        .filter(|r| r.outcome == RequestOutcome::Served)
        .map(|r| r.pickup_s.expect("served request has pickup") - r.arrival_s)
        .sum();
    let wait_avg = if served > 0 { wait_sum / served as f64 } else { 0.0 };
    let (per_zone, wait_std) = zone_wait_stats(&state.requests, state.zones.n());
    let fleet = state.vehicles.len() as f64;
    let occupied_m: f64 = state.vehicles.iter().map(|v| v.odometer_occupied_m).sum();
    let total_m: f64 = state.vehicles.iter().map(|v| v.odometer_total_m).sum();
    let rebalance_trips: u32 = state.vehicles.iter().map(|v| v.rebalance_trips).sum();
    SimReport {
        total_requests: total,
        served,
        abandoned,
        still_waiting,
        unsatisfaction_rate: if total > 0 {
            abandoned as f64 / total as f64
        } else {
            0.0
        },
        wait_avg_s: wait_avg,
        wait_std_across_zones_s: wait_std,
        per_zone_wait_mean_s: per_zone,
        nonoccupied_vmt_avg_mi: (total_m - occupied_m) / METERS_PER_MILE / fleet,
        occupied_vmt_avg_mi: occupied_m / METERS_PER_MILE / fleet,
        total_vmt_avg_mi: total_m / METERS_PER_MILE / fleet,
        rebalancing_trips_avg: rebalance_trips as f64 / fleet,
        greedy_match_batches: state.greedy_match_batches,
        controller_failures: state.controller_failures,
        request_log: state.requests.clone(),
    }
}

/// Runs the event loop until `horizon_s`, invoking the controller at every
/// rebalance epoch, and aggregates the report.
pub fn run(mut state: SimState, controller: &mut Controller, horizon_s: f64) -> Result<SimReport> {
    run_loop(&mut state, controller, horizon_s)?;
    Ok(summarize(&state))
}

/// Like [`run`], but hands the final state back for inspection of vehicles
/// and movement legs.
pub fn run_keep_state(
    mut state: SimState,
    controller: &mut Controller,
    horizon_s: f64,
) -> Result<(SimReport, SimState)> {
    run_loop(&mut state, controller, horizon_s)?;
    let report = summarize(&state);
    Ok((report, state))
}

//! Bundled synthetic scenario generator: a two-cluster city (compact
//! high-demand core, spread low-demand periphery) with demographic gradients
//! and seeded Poisson arrivals. Real trip records cannot be redistributed, so
//! the acceptance scenarios are generated from here.

use crate::error::Result;
use crate::graph::{DemographicTable, Zone, ZoneSet};
use crate::io::Trip;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const SECS_PER_DAY: i64 = 86_400;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SynthSpec {
    pub core_zones: usize,
    pub periphery_zones: usize,
    pub days: u32,
    pub interval_s: u32,
    /// Grid anchor; keep it a multiple of a day so day-of-week keys are clean.
    pub start_epoch_s: i64,
    /// Peak-hour Poisson mean per interval for a core zone.
    pub core_rate: f64,
    /// Peak-hour Poisson mean per interval for a periphery zone.
    pub periphery_rate: f64,
    /// Share of destinations drawn from the core cluster.
    pub core_dest_share: f64,
    pub core_spacing_m: f64,
    pub periphery_radius_m: f64,
    pub seed: u64,
    pub first_year: i32,
    pub demographic_years: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            core_zones: 4,
            periphery_zones: 4,
            days: 8,
            interval_s: 300,
            start_epoch_s: 0,
            core_rate: 3.0,
            periphery_rate: 0.8,
            core_dest_share: 0.7,
            core_spacing_m: 900.0,
            periphery_radius_m: 4200.0,
            seed: 7,
            first_year: 2015,
            demographic_years: 5,
        }
    }
}

pub struct SynthScenario {
    pub zones: ZoneSet,
    pub demo: DemographicTable,
    pub trips: Vec<Trip>,
    pub spec: SynthSpec,
}

/// Time-of-day demand multiplier with morning and evening peaks.
fn tod_profile(hour: f64) -> f64 {
    0.35 + 0.9 * (-((hour - 8.5) / 2.0).powi(2)).exp() + 1.1 * (-((hour - 18.0) / 2.5).powi(2)).exp()
}

fn dow_factor(dow: usize) -> f64 {
    match dow {
        5 => 0.8, // saturday-like
        6 => 0.7, // sunday-like
        _ => 1.0,
    }
}

fn poisson(rng: &mut ChaCha8Rng, lambda: f64) -> u32 {
    if lambda <= 0.0 {
        return 0;
    }
    let limit = (-lambda).exp();
    let mut k = 0u32;
    let mut p = 1.0;
    loop {
        p *= rng.random::<f64>();
        if p <= limit || k > 10_000 {
            return k;
        }
        k += 1;
    }
}

/// Core zones sit on a compact grid around the origin; periphery zones sit on
/// an outer ring. Irregular offsets keep the pairwise-distance spread nonzero.
fn layout(spec: &SynthSpec) -> Vec<Zone> {
    let mut zones = Vec::with_capacity(spec.core_zones + spec.periphery_zones);
    for i in 0..spec.core_zones {
        let col = (i % 2) as f64;
        let row = (i / 2) as f64;
        zones.push(Zone {
            id: 101 + i as u32,
            x_m: col * spec.core_spacing_m + row * 130.0,
            y_m: row * spec.core_spacing_m + col * 70.0,
        });
    }
    let np = spec.periphery_zones.max(1) as f64;
    for i in 0..spec.periphery_zones {
        let angle = std::f64::consts::TAU * (i as f64 / np) + 0.37;
        let radius = spec.periphery_radius_m * (1.0 + 0.06 * (i % 3) as f64);
        zones.push(Zone {
            id: 201 + i as u32,
            x_m: radius * angle.cos(),
            y_m: radius * angle.sin(),
        });
    }
    zones
}

/// Demographic vectors with opposite shapes for the two clusters: the core
/// has low minority share and somewhat higher poverty readings, the periphery
/// the reverse. Cross-cluster correlations come out strongly negative, so the
/// enrichment threshold separates the clusters.
fn demographics(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = spec.core_zones + spec.periphery_zones;
    let mut vectors = Vec::with_capacity(n);
    for zone in 0..n {
        let is_core = zone < spec.core_zones;
        let mut z = Vec::with_capacity(spec.demographic_years * 2);
        for year in 0..spec.demographic_years {
            let drift = 0.004 * year as f64;
            let noise = 0.01 * rng.random::<f64>();
            let (minority, poverty) = if is_core {
                (0.06 + drift + noise, 0.16 + drift + noise * 0.5)
            } else {
                (0.68 + drift + noise, 0.34 - drift + noise * 0.5)
            };
            z.push(minority.clamp(0.0, 1.0));
            z.push(poverty.clamp(0.0, 1.0));
        }
        vectors.push(z);
    }
    vectors
}

pub fn generate(spec: &SynthSpec) -> Result<SynthScenario> {
    let zones = ZoneSet::new(layout(spec))?;
    let n = zones.n();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let demo = DemographicTable::new(demographics(spec, &mut rng))?;

    // Destination weights: core zones share `core_dest_share` uniformly.
    let dest_cdf: Vec<f64> = {
        let core_w = if spec.core_zones > 0 {
            spec.core_dest_share / spec.core_zones as f64
        } else {
            0.0
        };
        let peri_w = if spec.periphery_zones > 0 {
            (1.0 - spec.core_dest_share) / spec.periphery_zones as f64
        } else {
            0.0
        };
        let mut acc = 0.0;
        (0..n)
            .map(|z| {
                acc += if z < spec.core_zones { core_w } else { peri_w };
                acc
            })
            .collect()
    };
    let total_w = *dest_cdf.last().unwrap();

    let intervals_per_day = (SECS_PER_DAY / spec.interval_s as i64) as usize;
    let mut trips = Vec::new();
    let mut next_id = 0u64;
    for day in 0..spec.days as i64 {
        let day_start = spec.start_epoch_s + day * SECS_PER_DAY;
        let dow = (day_start.div_euclid(SECS_PER_DAY)).rem_euclid(7) as usize;
        for k in 0..intervals_per_day {
            let t0 = day_start + (k as i64) * spec.interval_s as i64;
            let hour = (k as f64 * spec.interval_s as f64) / 3600.0;
            let shape = tod_profile(hour) * dow_factor(dow);
            for origin in 0..n {
                let base = if origin < spec.core_zones {
                    spec.core_rate
                } else {
                    spec.periphery_rate
                };
                let count = poisson(&mut rng, base * shape);
                for _ in 0..count {
                    let offset = (rng.random::<f64>() * spec.interval_s as f64) as i64;
                    let draw = rng.random::<f64>() * total_w;
                    let dest = dest_cdf.partition_point(|&c| c < draw).min(n - 1);
                    trips.push(Trip {
                        id: next_id,
                        arrival_epoch_s: t0 + offset.min(spec.interval_s as i64 - 1),
                        origin,
                        dest,
                    });
                    next_id += 1;
                }
            }
        }
    }
    trips.sort_by_key(|t| (t.arrival_epoch_s, t.id));
    // Re-number in arrival order so ids are stable and readable.
    for (i, t) in trips.iter_mut().enumerate() {
        t.id = i as u64;
    }

    Ok(SynthScenario {
        zones,
        demo,
        trips,
        spec: spec.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecast::DemandSeries;
    use crate::graph::{
        build_demo_correlation, build_distance_adjacency, enrich_adjacency, fairness_weights,
        rank_one_decompose,
    };
    use crate::io::aggregate_demand;

    #[test]
    fn generation_is_deterministic() {
        let spec = SynthSpec {
            days: 2,
            ..SynthSpec::default()
        };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.trips, b.trips);
        assert_eq!(a.zones.ids(), b.zones.ids());
    }

    #[test]
    fn demand_lands_on_full_day_grid() {
        let spec = SynthSpec {
            days: 3,
            ..SynthSpec::default()
        };
        let sc = generate(&spec).unwrap();
        let mut trips = sc.trips.clone();
        let series: DemandSeries =
            aggregate_demand(&mut trips, sc.zones.n(), spec.interval_s).unwrap();
        assert_eq!(series.len(), 3 * 288);
        assert_eq!(series.grid().start_epoch_s, 0);
        let total: u32 = (0..series.len())
            .map(|k| series.interval(k).iter().sum::<u32>())
            .sum();
        assert_eq!(total as usize, sc.trips.len());
    }

    #[test]
    fn core_zones_receive_lower_fairness_weights() {
        let spec = SynthSpec::default();
        let sc = generate(&spec).unwrap();
        let w = build_distance_adjacency(&sc.zones).unwrap();
        let corr = build_demo_correlation(&sc.demo).unwrap();
        let ws = enrich_adjacency(&w, &corr).unwrap();
        let r1 = rank_one_decompose(&ws).unwrap();
        let omega = fairness_weights(&r1.b).unwrap();
        let core_mean: f64 = (0..spec.core_zones).map(|i| omega.get(i)).sum::<f64>()
            / spec.core_zones as f64;
        let peri_mean: f64 = (spec.core_zones..sc.zones.n())
            .map(|i| omega.get(i))
            .sum::<f64>()
            / spec.periphery_zones as f64;
        assert!(
            core_mean < peri_mean,
            "core {core_mean} should be weighted below periphery {peri_mean}"
        );
    }

    #[test]
    fn clusters_are_separated_by_enrichment() {
        let spec = SynthSpec::default();
        let sc = generate(&spec).unwrap();
        let w = build_distance_adjacency(&sc.zones).unwrap();
        let corr = build_demo_correlation(&sc.demo).unwrap();
        let ws = enrich_adjacency(&w, &corr).unwrap();
        // Cross-cluster entries vanish under the threshold.
        for i in 0..spec.core_zones {
            for j in spec.core_zones..sc.zones.n() {
                assert_eq!(ws.get(i, j), 0.0, "cross edge ({i},{j}) survived");
            }
        }
    }
}

//! CSV ingestion and emission: zone centroids, demographic tables, trip
//! records, prediction batches, and the per-request simulation log.

use crate::error::{Error, Result};
use crate::forecast::{DemandSeries, TimeGrid};
use crate::graph::{DemographicTable, Zone, ZoneSet};
use crate::mat::Mat;
use crate::metrics::PredictionBatch;
use std::collections::BTreeMap;
use std::path::Path;

const SECS_PER_DAY: i64 = 86_400;

/// A trip request with zone ids resolved to zone indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Trip {
    pub id: u64,
    pub arrival_epoch_s: i64,
    pub origin: usize,
    pub dest: usize,
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn check_header(path: &Path, got: &csv::StringRecord, want: &[&str]) -> Result<()> {
    let got_cols: Vec<&str> = got.iter().map(str::trim).collect();
    if got_cols != want {
        return Err(Error::input(format!(
            "{}: expected header {:?}, found {:?}",
            path.display(),
            want.join(","),
            got_cols.join(",")
        )));
    }
    Ok(())
}

fn parse_field<T: std::str::FromStr>(
    record: &csv::StringRecord,
    idx: usize,
    what: &str,
) -> Result<T> {
    let raw = record
        .get(idx)
        .ok_or_else(|| Error::data(line_of(record), format!("missing {what}")))?;
    raw.trim()
        .parse()
        .map_err(|_| Error::data(line_of(record), format!("malformed {what}: {raw:?}")))
}

/// Zone centroid CSV with header `zone_id,x_m,y_m`.
pub fn load_zones(path: &Path) -> Result<ZoneSet> {
    let mut reader = csv::Reader::from_path(path)?;
    check_header(path, reader.headers()?, &["zone_id", "x_m", "y_m"])?;
    let mut zones = Vec::new();
    for record in reader.records() {
        let record = record?;
        zones.push(Zone {
            id: parse_field(&record, 0, "zone_id")?,
            x_m: parse_field(&record, 1, "x_m")?,
            y_m: parse_field(&record, 2, "y_m")?,
        });
    }
    ZoneSet::new(zones)
}

/// Demographic CSV with header `zone_id,year,minority_ratio,poverty_ratio`,
/// one row per zone-year. Vectors are assembled ordered by year ascending,
/// minority ratio before poverty ratio within each year.
pub fn load_demographics(path: &Path, zones: &ZoneSet) -> Result<DemographicTable> {
    let mut reader = csv::Reader::from_path(path)?;
    check_header(
        path,
        reader.headers()?,
        &["zone_id", "year", "minority_ratio", "poverty_ratio"],
    )?;
    let mut by_zone: Vec<BTreeMap<i32, (f64, f64)>> = vec![BTreeMap::new(); zones.n()];
    for record in reader.records() {
        let record = record?;
        let line = line_of(&record);
        let zone_id: u32 = parse_field(&record, 0, "zone_id")?;
        let Some(idx) = zones.index_of(zone_id) else {
            return Err(Error::data(line, format!("unknown zone id {zone_id}")));
        };
        let year: i32 = parse_field(&record, 1, "year")?;
        let minority: f64 = parse_field(&record, 2, "minority_ratio")?;
        let poverty: f64 = parse_field(&record, 3, "poverty_ratio")?;
        for (name, v) in [("minority_ratio", minority), ("poverty_ratio", poverty)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::data(line, format!("{name} {v} outside [0, 1]")));
            }
        }
        if by_zone[idx].insert(year, (minority, poverty)).is_some() {
            return Err(Error::data(
                line,
                format!("duplicate year {year} for zone {zone_id}"),
            ));
        }
    }
    let years: Vec<i32> = by_zone
        .first()
        .map(|m| m.keys().copied().collect())
        .unwrap_or_default();
    let mut vectors = Vec::with_capacity(zones.n());
    for (idx, rows) in by_zone.iter().enumerate() {
        let zone_years: Vec<i32> = rows.keys().copied().collect();
        if zone_years != years {
            return Err(Error::input(format!(
                "zone {} covers years {:?}, expected {:?}",
                zones.zone(idx).id,
                zone_years,
                years
            )));
        }
        let mut z = Vec::with_capacity(rows.len() * 2);
        for (minority, poverty) in rows.values() {
            z.push(*minority);
            z.push(*poverty);
        }
        vectors.push(z);
    }
    DemographicTable::new(vectors)
}

/// Aggregates trips onto a day-aligned interval grid (half-open bins) and
/// keeps the request list for simulation. Trips are ordered by arrival time,
/// ties by id.
pub fn aggregate_demand(
    trips: &mut Vec<Trip>,
    n_zones: usize,
    interval_s: u32,
) -> Result<DemandSeries> {
    if SECS_PER_DAY % interval_s as i64 != 0 {
        return Err(Error::input(format!(
            "interval length {interval_s} s does not divide a day"
        )));
    }
    trips.sort_by_key(|t| (t.arrival_epoch_s, t.id));
    if trips.is_empty() {
        return DemandSeries::new(TimeGrid::new(0, interval_s, 0)?, n_zones, Vec::new());
    }
    let min_t = trips.first().unwrap().arrival_epoch_s;
    let max_t = trips.last().unwrap().arrival_epoch_s;
    let start = min_t.div_euclid(SECS_PER_DAY) * SECS_PER_DAY;
    let end = (max_t.div_euclid(SECS_PER_DAY) + 1) * SECS_PER_DAY;
    let num_intervals = ((end - start) / interval_s as i64) as usize;
    let grid = TimeGrid::new(start, interval_s, num_intervals)?;
    let mut values = vec![0u32; num_intervals * n_zones];
    for t in trips.iter() {
        let k = grid
            .interval_of_epoch(t.arrival_epoch_s)
            .expect("trip within derived grid");
        values[k * n_zones + t.origin] += 1;
    }
    DemandSeries::new(grid, n_zones, values)
}

/// Trip CSV with header `request_id,arrival_epoch_s,origin_zone,dest_zone`.
pub fn load_trips(
    path: &Path,
    zones: &ZoneSet,
    interval_s: u32,
) -> Result<(DemandSeries, Vec<Trip>)> {
    let mut reader = csv::Reader::from_path(path)?;
    check_header(
        path,
        reader.headers()?,
        &["request_id", "arrival_epoch_s", "origin_zone", "dest_zone"],
    )?;
    let mut trips = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = line_of(&record);
        let origin_id: u32 = parse_field(&record, 2, "origin_zone")?;
        let dest_id: u32 = parse_field(&record, 3, "dest_zone")?;
        let origin = zones
            .index_of(origin_id)
            .ok_or_else(|| Error::data(line, format!("unknown origin zone {origin_id}")))?;
        let dest = zones
            .index_of(dest_id)
            .ok_or_else(|| Error::data(line, format!("unknown destination zone {dest_id}")))?;
        trips.push(Trip {
            id: parse_field(&record, 0, "request_id")?,
            arrival_epoch_s: parse_field(&record, 1, "arrival_epoch_s")?,
            origin,
            dest,
        });
    }
    let series = aggregate_demand(&mut trips, zones.n(), interval_s)?;
    Ok((series, trips))
}

pub fn write_zones(path: &Path, zones: &ZoneSet) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["zone_id", "x_m", "y_m"])?;
    for z in zones.zones() {
        w.write_record(&[z.id.to_string(), z.x_m.to_string(), z.y_m.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_demographics(
    path: &Path,
    zones: &ZoneSet,
    demo: &DemographicTable,
    first_year: i32,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["zone_id", "year", "minority_ratio", "poverty_ratio"])?;
    for (idx, z) in zones.zones().iter().enumerate() {
        let v = demo.vector(idx);
        for (y, pair) in v.chunks(2).enumerate() {
            w.write_record(&[
                z.id.to_string(),
                (first_year + y as i32).to_string(),
                pair[0].to_string(),
                pair[1].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_trips(path: &Path, zones: &ZoneSet, trips: &[Trip]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["request_id", "arrival_epoch_s", "origin_zone", "dest_zone"])?;
    for t in trips {
        w.write_record(&[
            t.id.to_string(),
            t.arrival_epoch_s.to_string(),
            zones.zone(t.origin).id.to_string(),
            zones.zone(t.dest).id.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-request simulation log with zone indices mapped back to zone ids.
pub fn write_request_log(
    path: &Path,
    zones: &ZoneSet,
    requests: &[crate::sim::SimRequest],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "request_id",
        "arrival_s",
        "origin_zone",
        "dest_zone",
        "match_s",
        "pickup_s",
        "wait_s",
        "outcome",
    ])?;
    for r in requests {
        let fmt_opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        let wait = r.pickup_s.map(|p| p - r.arrival_s);
        w.write_record(&[
            r.id.to_string(),
            r.arrival_s.to_string(),
            zones.zone(r.origin_zone).id.to_string(),
            zones.zone(r.dest_zone).id.to_string(),
            fmt_opt(r.match_s),
            fmt_opt(r.pickup_s),
            fmt_opt(wait),
            format!("{:?}", r.outcome).to_lowercase(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Long-format predictions CSV with header `interval,zone,actual,predicted`.
/// Every (interval, zone) pair must appear exactly once.
pub fn load_predictions(path: &Path) -> Result<PredictionBatch> {
    let mut reader = csv::Reader::from_path(path)?;
    check_header(
        path,
        reader.headers()?,
        &["interval", "zone", "actual", "predicted"],
    )?;
    let mut cells: BTreeMap<(i64, u32), (f64, f64)> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let line = line_of(&record);
        let k: i64 = parse_field(&record, 0, "interval")?;
        let z: u32 = parse_field(&record, 1, "zone")?;
        let actual: f64 = parse_field(&record, 2, "actual")?;
        let predicted: f64 = parse_field(&record, 3, "predicted")?;
        if cells.insert((k, z), (actual, predicted)).is_some() {
            return Err(Error::data(
                line,
                format!("duplicate cell interval={k} zone={z}"),
            ));
        }
    }
    // BTreeMap keys come out sorted by (interval, zone).
    let mut intervals: Vec<i64> = cells.keys().map(|&(k, _)| k).collect();
    intervals.dedup();
    let mut zones: Vec<u32> = cells.keys().map(|&(_, z)| z).collect();
    zones.sort_unstable();
    zones.dedup();
    let mut actual = Mat::zeros(intervals.len(), zones.len());
    let mut predicted = Mat::zeros(intervals.len(), zones.len());
    for (row, &k) in intervals.iter().enumerate() {
        for (col, &z) in zones.iter().enumerate() {
            let Some(&(a, p)) = cells.get(&(k, z)) else {
                return Err(Error::input(format!(
                    "missing cell for interval {k}, zone {z}"
                )));
            };
            actual[(row, col)] = a;
            predicted[(row, col)] = p;
        }
    }
    PredictionBatch::new(actual, predicted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    fn three_zones() -> ZoneSet {
        ZoneSet::new(vec![
            Zone { id: 10, x_m: 0.0, y_m: 0.0 },
            Zone { id: 20, x_m: 1000.0, y_m: 0.0 },
            Zone { id: 30, x_m: 0.0, y_m: 2000.0 },
        ])
        .unwrap()
    }

    #[test]
    fn zones_roundtrip() {
        let f = write_tmp("zone_id,x_m,y_m\n10,0.0,0.0\n20,1000,0\n30,0,2000\n");
        let zones = load_zones(f.path()).unwrap();
        assert_eq!(zones.n(), 3);
        assert_eq!(zones.index_of(20), Some(1));
    }

    #[test]
    fn zones_bad_header() {
        let f = write_tmp("id,x,y\n1,0,0\n");
        assert!(load_zones(f.path()).is_err());
    }

    #[test]
    fn demographics_vector_assembly_order() {
        let zones = three_zones();
        let f = write_tmp(
            "zone_id,year,minority_ratio,poverty_ratio\n\
             10,2016,0.5,0.6\n10,2015,0.1,0.2\n\
             20,2015,0.3,0.4\n20,2016,0.7,0.8\n\
             30,2015,0.0,0.0\n30,2016,0.0,0.0\n",
        );
        let demo = load_demographics(f.path(), &zones).unwrap();
        // Year ascending, minority before poverty.
        assert_eq!(demo.vector(0), &[0.1, 0.2, 0.5, 0.6]);
        assert_eq!(demo.vector(1), &[0.3, 0.4, 0.7, 0.8]);
    }

    #[test]
    fn demographics_unknown_zone_has_line_number() {
        let zones = three_zones();
        let f = write_tmp("zone_id,year,minority_ratio,poverty_ratio\n99,2015,0.1,0.1\n");
        match load_demographics(f.path(), &zones) {
            Err(Error::Data { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected data error, got {other:?}"),
        }
    }

    #[test]
    fn trips_aggregate_and_bin() {
        let zones = three_zones();
        // Three trips from zone 10 in the first interval of day 0, one at an
        // exact interval boundary.
        let f = write_tmp(
            "request_id,arrival_epoch_s,origin_zone,dest_zone\n\
             1,0,10,20\n2,100,10,30\n3,299,10,20\n4,300,20,10\n",
        );
        let (series, trips) = load_trips(f.path(), &zones, 300).unwrap();
        assert_eq!(trips.len(), 4);
        assert_eq!(series.len(), 288); // one full day
        assert_eq!(series.value(0, 0), 3);
        assert_eq!(series.value(0, 1), 0);
        // Boundary timestamp lands in the later interval.
        assert_eq!(series.value(1, 1), 1);
    }

    #[test]
    fn trips_empty_file() {
        let zones = three_zones();
        let f = write_tmp("request_id,arrival_epoch_s,origin_zone,dest_zone\n");
        let (series, trips) = load_trips(f.path(), &zones, 300).unwrap();
        assert!(trips.is_empty());
        assert_eq!(series.len(), 0);
    }

    #[test]
    fn trips_malformed_timestamp_reports_line() {
        let zones = three_zones();
        let f = write_tmp(
            "request_id,arrival_epoch_s,origin_zone,dest_zone\n1,notatime,10,20\n",
        );
        match load_trips(f.path(), &zones, 300) {
            Err(Error::Data { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("arrival_epoch_s"));
            }
            other => panic!("expected data error, got {other:?}"),
        }
    }

    #[test]
    fn predictions_long_format() {
        let f = write_tmp(
            "interval,zone,actual,predicted\n\
             0,1,4,3.5\n0,2,2,2\n1,1,5,6\n1,2,0,0.5\n",
        );
        let batch = load_predictions(f.path()).unwrap();
        assert_eq!(batch.periods(), 2);
        assert_eq!(batch.zones(), 2);
        assert_eq!(batch.actual()[(0, 0)], 4.0);
        assert_eq!(batch.predicted()[(1, 1)], 0.5);
    }

    #[test]
    fn predictions_missing_cell_rejected() {
        let f = write_tmp("interval,zone,actual,predicted\n0,1,4,3.5\n1,2,5,6\n");
        assert!(load_predictions(f.path()).is_err());
    }
}

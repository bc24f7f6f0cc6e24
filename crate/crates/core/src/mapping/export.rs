//! Map artifacts: GeoJSON feature collection and an SVG scatter plot.

use serde_json::{json, Value};

use super::geo;
use super::{FieldVector, HiveConfig};
use crate::circular::circular_mean;

/// Color saturation per dance, scaled over the run counts present:
/// the minimum dance (4 runs) maps to 0, the largest to 1.
fn saturations(vectors: &[FieldVector]) -> Vec<f64> {
    let min = vectors.iter().map(|v| v.runs_inlier).min().unwrap_or(4);
    let max = vectors.iter().map(|v| v.runs_inlier).max().unwrap_or(4);
    vectors
        .iter()
        .map(|v| {
            if max > min {
                (v.runs_inlier - min) as f64 / (max - min) as f64
            } else {
                1.0
            }
        })
        .collect()
}

fn mean_direction_line(vectors: &[FieldVector], hive: &HiveConfig) -> Option<Value> {
    if vectors.is_empty() {
        return None;
    }
    let bearings: Vec<f64> = vectors.iter().map(|v| v.bearing_deg).collect();
    let mean_bearing = circular_mean(&bearings).ok()?;
    let mean_distance =
        vectors.iter().map(|v| v.distance_m).sum::<f64>() / vectors.len() as f64;
    let (lat, lon) = geo::destination(
        hive.latitude_deg,
        hive.longitude_deg,
        mean_bearing,
        mean_distance,
    );
    Some(json!({
        "type": "Feature",
        "geometry": {
            "type": "LineString",
            "coordinates": [
                [hive.longitude_deg, hive.latitude_deg],
                [lon, lat],
            ],
        },
        "properties": {
            "kind": "mean-direction",
            "bearing_deg": mean_bearing,
            "distance_m": mean_distance,
        },
    }))
}

/// GeoJSON FeatureCollection: one point per dance endpoint, hive and
/// optional feeder markers, and the mean-direction line.
pub fn export_geojson(
    vectors: &[FieldVector],
    hive: &HiveConfig,
    feeder: Option<(f64, f64)>,
) -> Value {
    let sats = saturations(vectors);
    let mut features: Vec<Value> = Vec::new();
    for (v, sat) in vectors.iter().zip(&sats) {
        features.push(json!({
            "type": "Feature",
            "geometry": {
                "type": "Point",
                "coordinates": [v.endpoint_lon_deg, v.endpoint_lat_deg],
            },
            "properties": {
                "runs": v.runs_inlier,
                "bearing_deg": v.bearing_deg,
                "distance_m": v.distance_m,
                "p_r": v.profitability,
                "saturation": sat,
            },
        }));
    }
    features.push(json!({
        "type": "Feature",
        "geometry": {
            "type": "Point",
            "coordinates": [hive.longitude_deg, hive.latitude_deg],
        },
        "properties": { "kind": "hive" },
    }));
    if let Some((lat, lon)) = feeder {
        features.push(json!({
            "type": "Feature",
            "geometry": { "type": "Point", "coordinates": [lon, lat] },
            "properties": { "kind": "feeder" },
        }));
    }
    if let Some(line) = mean_direction_line(vectors, hive) {
        features.push(line);
    }
    json!({ "type": "FeatureCollection", "features": features })
}

/// Local east/north offsets of a point from the hive, meters.
fn local_en(hive: &HiveConfig, lat: f64, lon: f64) -> (f64, f64) {
    let (distance, bearing) = geo::inverse(hive.latitude_deg, hive.longitude_deg, lat, lon);
    let b = bearing.to_radians();
    (distance * b.sin(), distance * b.cos())
}

/// SVG scatter of dance endpoints in local meters around the hive.
/// North is up; circle opacity encodes the run count.
pub fn export_svg(
    vectors: &[FieldVector],
    hive: &HiveConfig,
    feeder: Option<(f64, f64)>,
) -> String {
    let sats = saturations(vectors);
    let mut points: Vec<(f64, f64, f64, &FieldVector)> = Vec::new();
    let mut extent = 100.0_f64;
    for (v, &sat) in vectors.iter().zip(&sats) {
        let (e, n) = local_en(hive, v.endpoint_lat_deg, v.endpoint_lon_deg);
        extent = extent.max(e.abs()).max(n.abs());
        points.push((e, n, sat, v));
    }
    let feeder_en = feeder.map(|(lat, lon)| {
        let (e, n) = local_en(hive, lat, lon);
        extent = extent.max(e.abs()).max(n.abs());
        (e, n)
    });
    extent *= 1.1;

    let size = 800.0;
    let to_px = |e: f64, n: f64| {
        (
            size / 2.0 + e / extent * (size / 2.0 - 20.0),
            size / 2.0 - n / extent * (size / 2.0 - 20.0),
        )
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" \
         viewBox=\"0 0 {size} {size}\">\n<rect width=\"{size}\" height=\"{size}\" fill=\"#fafafa\"/>\n"
    ));
    // 100 m grid rings.
    let mut ring = 100.0;
    while ring < extent {
        let r = ring / extent * (size / 2.0 - 20.0);
        svg.push_str(&format!(
            "<circle cx=\"{0}\" cy=\"{0}\" r=\"{r:.1}\" fill=\"none\" stroke=\"#ddd\"/>\n",
            size / 2.0
        ));
        ring += 100.0;
    }
    for (e, n, sat, v) in &points {
        let (x, y) = to_px(*e, *n);
        svg.push_str(&format!(
            "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"6\" fill=\"#6a0f8e\" \
             fill-opacity=\"{:.3}\" stroke=\"#6a0f8e\" stroke-opacity=\"0.6\">\
             <title>{} runs, {:.0} m at {:.1} deg</title></circle>\n",
            0.15 + 0.85 * sat,
            v.runs_inlier,
            v.distance_m,
            v.bearing_deg
        ));
    }
    if !points.is_empty() {
        let bearings: Vec<f64> = vectors.iter().map(|v| v.bearing_deg).collect();
        if let Ok(mean_bearing) = circular_mean(&bearings) {
            let mean_distance =
                vectors.iter().map(|v| v.distance_m).sum::<f64>() / vectors.len() as f64;
            let b = mean_bearing.to_radians();
            let (x, y) = to_px(mean_distance * b.sin(), mean_distance * b.cos());
            svg.push_str(&format!(
                "<line x1=\"{0}\" y1=\"{0}\" x2=\"{x:.1}\" y2=\"{y:.1}\" \
                 stroke=\"#333\" stroke-dasharray=\"6 4\"/>\n",
                size / 2.0
            ));
        }
    }
    // Hive marker (red) and optional feeder (green).
    let (hx, hy) = (size / 2.0, size / 2.0);
    svg.push_str(&format!(
        "<path d=\"M {hx} {} L {} {} L {} {} Z\" fill=\"#c22\"/>\n",
        hy - 8.0,
        hx - 7.0,
        hy + 6.0,
        hx + 7.0,
        hy + 6.0
    ));
    if let Some((e, n)) = feeder_en {
        let (x, y) = to_px(e, n);
        svg.push_str(&format!(
            "<path d=\"M {x} {} L {} {} L {} {} Z\" fill=\"#2a2\"/>\n",
            y - 8.0,
            x - 7.0,
            y + 6.0,
            x + 7.0,
            y + 6.0
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

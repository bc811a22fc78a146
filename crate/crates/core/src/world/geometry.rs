//! Planar geometry on longitude/latitude degrees (equirectangular view).

use geo::coordinate_position::{CoordPos, CoordinatePosition};
use geo::{Area, BoundingRect, Centroid, Coord, InteriorPoint, MultiPolygon, Polygon, Rect};
use serde::{Deserialize, Serialize};

/// A point in degrees: `lon` in [-180, 180], `lat` in [-90, 90].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LonLat {
    pub lon: f64,
    pub lat: f64,
}

impl LonLat {
    pub const fn new(lon: f64, lat: f64) -> Self {
        Self { lon, lat }
    }

    pub fn in_range(&self) -> bool {
        (-180.0..=180.0).contains(&self.lon) && (-90.0..=90.0).contains(&self.lat)
    }

    fn coord(self) -> Coord<f64> {
        Coord {
            x: self.lon,
            y: self.lat,
        }
    }
}

/// Compass direction on the map. Screen words map onto these: up = north,
/// down = south, right = east, left = west.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    North,
    South,
    East,
    West,
}

impl Direction {
    /// Bearing in degrees, clockwise from north.
    pub fn bearing(self) -> f64 {
        match self {
            Direction::North => 0.0,
            Direction::East => 90.0,
            Direction::South => 180.0,
            Direction::West => 270.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::North => "north",
            Direction::South => "south",
            Direction::East => "east",
            Direction::West => "west",
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Longitude difference `to - from`, wrapped into [-180, 180).
pub fn delta_lon(from: f64, to: f64) -> f64 {
    let mut d = to - from;
    while d >= 180.0 {
        d -= 360.0;
    }
    while d < -180.0 {
        d += 360.0;
    }
    d
}

/// Bearing of `to` seen from `from`, degrees clockwise from north in [0, 360).
pub fn bearing(from: LonLat, to: LonLat) -> f64 {
    let dx = delta_lon(from.lon, to.lon);
    let dy = to.lat - from.lat;
    let deg = dx.atan2(dy).to_degrees();
    if deg < 0.0 {
        deg + 360.0
    } else {
        deg
    }
}

/// Smallest absolute difference between two bearings, in [0, 180].
pub fn angular_deviation(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    if d > 180.0 {
        360.0 - d
    } else {
        d
    }
}

/// Area-weighted centroid of the largest polygon. Using the mainland keeps
/// far-flung islands (Alaska, overseas territories) from dragging the
/// reference point into the sea. Crescent-shaped mainlands whose centroid
/// falls outside the polygon use an interior point instead.
pub fn mainland_centroid(shape: &MultiPolygon<f64>) -> Option<LonLat> {
    let largest = largest_polygon(shape)?;
    let c = largest.centroid()?;
    if largest.coordinate_position(&c.0) != CoordPos::Outside {
        return Some(LonLat::new(c.x(), c.y()));
    }
    let p = largest.interior_point()?;
    Some(LonLat::new(p.x(), p.y()))
}

fn largest_polygon(shape: &MultiPolygon<f64>) -> Option<&Polygon<f64>> {
    shape.0.iter().max_by(|a, b| {
        a.unsigned_area()
            .partial_cmp(&b.unsigned_area())
            .unwrap_or(std::cmp::Ordering::Equal)
    })
}

pub fn bounding_box(shape: &MultiPolygon<f64>) -> Option<Rect<f64>> {
    shape.bounding_rect()
}

pub fn rect_contains(rect: &Rect<f64>, p: LonLat) -> bool {
    let (min, max) = (rect.min(), rect.max());
    p.lon >= min.x && p.lon <= max.x && p.lat >= min.y && p.lat <= max.y
}

pub fn rect_diagonal(rect: &Rect<f64>) -> f64 {
    let (w, h) = (rect.width(), rect.height());
    (w * w + h * h).sqrt()
}

/// Distance from `p` to the rectangle (zero inside).
pub fn rect_distance(rect: &Rect<f64>, p: LonLat) -> f64 {
    let (min, max) = (rect.min(), rect.max());
    let dx = (min.x - p.lon).max(0.0).max(p.lon - max.x);
    let dy = (min.y - p.lat).max(0.0).max(p.lat - max.y);
    (dx * dx + dy * dy).sqrt()
}

/// Whether `p` is inside or on the boundary of `shape`.
pub fn covers(shape: &MultiPolygon<f64>, p: LonLat) -> bool {
    shape.coordinate_position(&p.coord()) != CoordPos::Outside
}

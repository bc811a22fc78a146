//! The shared game board: countries, regions and land-border adjacency.
//!
//! A [`WorldMap`] is loaded once from a GeoJSON feature collection and is
//! immutable afterwards, so it can be shared freely between sessions. Every
//! feature carries the properties
//! `{id, name, aliases, region, area_km2, neighbors}` plus the optional
//! `continent` and `selectable` keys. Adjacency is read from the file rather
//! than computed from the polygons, and it must be symmetric.
//!
//! Relative-navigation queries work on country centroids in an
//! equirectangular view: "down" is south, "right" is east.

mod geometry;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use geo::{MultiPolygon, Rect};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use geometry::{angular_deviation, bearing, delta_lon, Direction, LonLat};

/// Neighbors deviating by this much or more from the requested compass
/// direction never qualify as a step.
pub const MAX_STEP_DEVIATION_DEG: f64 = 60.0;

static BUNDLED_MAP: &[u8] = include_bytes!("../../data/world.geojson");

/// ISO-3166 alpha-3 code, e.g. `EGY`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CountryId(String);

impl CountryId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CountryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::borrow::Borrow<str> for CountryId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl From<&str> for CountryId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

impl PartialEq<&str> for CountryId {
    fn eq(&self, other: &&str) -> bool {
        self.0 == *other
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    East,
    West,
}

#[derive(Debug, Clone)]
pub struct Country {
    pub id: CountryId,
    pub name: String,
    pub aliases: Vec<String>,
    /// Primary region tag, e.g. "Northern Africa".
    pub region: String,
    /// Coarse continent tag, e.g. "Africa", when the file provides one.
    pub continent: Option<String>,
    pub area_km2: f64,
    pub centroid: LonLat,
    pub geometry: MultiPolygon<f64>,
    pub bbox: Rect<f64>,
    /// Whether the country may be drawn as a target.
    pub selectable: bool,
}

impl Country {
    /// Region tags this country belongs to (primary region first).
    pub fn region_tags(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.region.as_str()).chain(self.continent.as_deref())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum WorldError {
    #[error("cannot read map file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("map file is not a valid feature collection: {0}")]
    Parse(String),
    #[error("country {country}: missing field `{field}`")]
    MissingField {
        country: String,
        field: &'static str,
    },
    #[error("country {country}: invalid field `{field}`: {reason}")]
    InvalidField {
        country: String,
        field: &'static str,
        reason: String,
    },
    #[error("duplicate country id {0}")]
    DuplicateId(String),
    #[error("alias `{alias}` names both {first} and {second}")]
    DuplicateAlias {
        alias: String,
        first: CountryId,
        second: CountryId,
    },
    #[error("asymmetric adjacency {0}/{1}")]
    AsymmetricAdjacency(CountryId, CountryId),
    #[error("country {0} lists itself as a neighbor")]
    SelfLoop(CountryId),
    #[error("country {country} lists unknown neighbor {neighbor}")]
    UnknownNeighbor {
        country: CountryId,
        neighbor: String,
    },
    #[error("unknown country {0}")]
    NotFound(String),
    #[error("unknown region {0}")]
    UnknownRegion(String),
    #[error("candidate set is empty")]
    EmptyCandidates,
    #[error("count must be at least 1")]
    ZeroCount,
    #[error("coordinates out of range: ({lon}, {lat})")]
    OutOfRange { lon: f64, lat: f64 },
}

/// The immutable game board.
#[derive(Debug, Clone)]
pub struct WorldMap {
    countries: BTreeMap<CountryId, Country>,
    adjacency: BTreeMap<CountryId, BTreeSet<CountryId>>,
    regions: BTreeMap<String, BTreeSet<CountryId>>,
    names: HashMap<String, CountryId>,
    version: String,
}

#[derive(Debug, Deserialize)]
struct FeatureProps {
    id: Option<String>,
    name: Option<String>,
    #[serde(default)]
    aliases: Vec<String>,
    region: Option<String>,
    continent: Option<String>,
    area_km2: Option<f64>,
    #[serde(default)]
    neighbors: Vec<String>,
    selectable: Option<bool>,
}

/// Reads and validates a map interchange file.
pub fn load_world(path: impl AsRef<Path>) -> Result<WorldMap, WorldError> {
    WorldMap::load(path)
}

/// Case-folds a name for lookup: lowercase, with punctuation other than
/// letters and digits collapsed to single spaces.
pub fn fold_name(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut space = false;
    for ch in s.chars().flat_map(char::to_lowercase) {
        if ch.is_alphanumeric() {
            if space && !out.is_empty() {
                out.push(' ');
            }
            space = false;
            out.push(ch);
        } else if ch != '\'' && ch != '’' {
            space = true;
        }
    }
    out
}

impl WorldMap {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, WorldError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|source| WorldError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_bytes(&bytes)
    }

    /// The 196-country world map shipped with the crate.
    pub fn bundled() -> &'static WorldMap {
        static MAP: OnceLock<WorldMap> = OnceLock::new();
        MAP.get_or_init(|| WorldMap::from_bytes(BUNDLED_MAP).expect("bundled map is valid"))
    }

    /// Raw bytes of the bundled map file (served to browser clients).
    pub fn bundled_bytes() -> &'static [u8] {
        BUNDLED_MAP
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, WorldError> {
        let version = hex::encode(Sha256::digest(bytes));
        let text = std::str::from_utf8(bytes).map_err(|e| WorldError::Parse(e.to_string()))?;
        let collection: geojson::FeatureCollection = text
            .parse()
            .map_err(|e: geojson::Error| WorldError::Parse(e.to_string()))?;

        let mut countries = BTreeMap::new();
        let mut listed: BTreeMap<CountryId, Vec<String>> = BTreeMap::new();
        for (index, feature) in collection.features.into_iter().enumerate() {
            let props: FeatureProps = match feature.properties {
                Some(obj) => serde_json::from_value(serde_json::Value::Object(obj))
                    .map_err(|e| WorldError::Parse(format!("feature {index}: {e}")))?,
                None => {
                    return Err(WorldError::Parse(format!(
                        "feature {index} has no properties"
                    )))
                }
            };
            let label = props.id.clone().unwrap_or_else(|| format!("#{index}"));
            let missing = |field| WorldError::MissingField {
                country: label.clone(),
                field,
            };
            let id = CountryId::new(props.id.clone().ok_or_else(|| missing("id"))?);
            let name = props.name.ok_or_else(|| missing("name"))?;
            let region = props.region.ok_or_else(|| missing("region"))?;
            let area_km2 = props.area_km2.ok_or_else(|| missing("area_km2"))?;
            if !(area_km2 > 0.0) {
                return Err(WorldError::InvalidField {
                    country: label,
                    field: "area_km2",
                    reason: format!("{area_km2} is not positive"),
                });
            }
            let geometry = feature.geometry.ok_or_else(|| missing("geometry"))?;
            let geometry =
                to_multipolygon(geometry.value).map_err(|reason| WorldError::InvalidField {
                    country: label.clone(),
                    field: "geometry",
                    reason,
                })?;
            let invalid_geometry = |reason: &str| WorldError::InvalidField {
                country: label.clone(),
                field: "geometry",
                reason: reason.to_string(),
            };
            let bbox =
                geometry::bounding_box(&geometry).ok_or_else(|| invalid_geometry("empty"))?;
            let centroid = geometry::mainland_centroid(&geometry)
                .ok_or_else(|| invalid_geometry("degenerate"))?;
            if !centroid.in_range()
                || geometry::rect_distance(&bbox, centroid) > geometry::rect_diagonal(&bbox)
            {
                return Err(invalid_geometry("centroid too far from geometry"));
            }
            if props.aliases.iter().any(|a| fold_name(a).is_empty()) {
                return Err(WorldError::InvalidField {
                    country: label,
                    field: "aliases",
                    reason: "empty alias".into(),
                });
            }
            listed.insert(id.clone(), props.neighbors);
            let country = Country {
                id: id.clone(),
                name,
                aliases: props.aliases,
                region,
                continent: props.continent.filter(|c| !c.is_empty()),
                area_km2,
                centroid,
                geometry,
                bbox,
                selectable: props.selectable.unwrap_or(true),
            };
            if countries.insert(id.clone(), country).is_some() {
                return Err(WorldError::DuplicateId(id.0));
            }
        }

        let mut adjacency: BTreeMap<CountryId, BTreeSet<CountryId>> = BTreeMap::new();
        for (id, neighbors) in &listed {
            let set = adjacency.entry(id.clone()).or_default();
            for n in neighbors {
                let Some((nid, _)) = countries.get_key_value(n.as_str()) else {
                    return Err(WorldError::UnknownNeighbor {
                        country: id.clone(),
                        neighbor: n.clone(),
                    });
                };
                if nid == id {
                    return Err(WorldError::SelfLoop(id.clone()));
                }
                set.insert(nid.clone());
            }
        }
        for (a, set) in &adjacency {
            for b in set {
                if !adjacency[b].contains(a) {
                    return Err(WorldError::AsymmetricAdjacency(a.clone(), b.clone()));
                }
            }
        }

        let mut regions: BTreeMap<String, BTreeSet<CountryId>> = BTreeMap::new();
        let mut names: HashMap<String, CountryId> = HashMap::new();
        for c in countries.values() {
            for tag in c.region_tags() {
                regions
                    .entry(tag.to_string())
                    .or_default()
                    .insert(c.id.clone());
            }
            for n in std::iter::once(&c.name).chain(&c.aliases) {
                let key = fold_name(n);
                match names.get(&key) {
                    Some(other) if other != &c.id => {
                        return Err(WorldError::DuplicateAlias {
                            alias: n.clone(),
                            first: other.clone(),
                            second: c.id.clone(),
                        })
                    }
                    _ => {
                        names.insert(key, c.id.clone());
                    }
                }
            }
        }

        Ok(Self {
            countries,
            adjacency,
            regions,
            names,
            version,
        })
    }

    /// Lowercase hex SHA-256 of the source bytes.
    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn len(&self) -> usize {
        self.countries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.countries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Country> {
        self.countries.get(id)
    }

    pub fn country(&self, id: &str) -> Result<&Country, WorldError> {
        self.get(id)
            .ok_or_else(|| WorldError::NotFound(id.to_string()))
    }

    /// Canonical id handle for `id`, if the country exists.
    pub fn id(&self, id: &str) -> Option<&CountryId> {
        self.countries.get_key_value(id).map(|(k, _)| k)
    }

    pub fn countries(&self) -> impl Iterator<Item = &Country> {
        self.countries.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = &CountryId> {
        self.countries.keys()
    }

    /// Countries eligible as targets, in id order.
    pub fn selectable_ids(&self) -> Vec<CountryId> {
        self.countries
            .values()
            .filter(|c| c.selectable)
            .map(|c| c.id.clone())
            .collect()
    }

    /// Looks up a country by display name or alias, case-insensitively.
    pub fn lookup_name(&self, name: &str) -> Option<&CountryId> {
        self.names.get(&fold_name(name))
    }

    /// Every folded name and alias with its country, for text matching.
    pub fn name_index(&self) -> impl Iterator<Item = (&str, &CountryId)> {
        self.names.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn neighbors(&self, id: &str) -> Result<&BTreeSet<CountryId>, WorldError> {
        self.adjacency
            .get(id)
            .ok_or_else(|| WorldError::NotFound(id.to_string()))
    }

    pub fn region_tags(&self) -> impl Iterator<Item = &str> {
        self.regions.keys().map(String::as_str)
    }

    pub fn region(&self, tag: &str) -> Result<&BTreeSet<CountryId>, WorldError> {
        self.regions
            .get(tag)
            .ok_or_else(|| WorldError::UnknownRegion(tag.to_string()))
    }

    /// The `n` largest members of `region`, by area descending then id.
    pub fn largest_in_region(&self, region: &str, n: usize) -> Result<Vec<CountryId>, WorldError> {
        let members = self.region(region)?;
        self.largest_among(members.iter(), n)
    }

    /// The `n` largest of `ids`, by area descending then id.
    pub fn largest_among<'a>(
        &self,
        ids: impl IntoIterator<Item = &'a CountryId>,
        n: usize,
    ) -> Result<Vec<CountryId>, WorldError> {
        if n == 0 {
            return Err(WorldError::ZeroCount);
        }
        let mut members = ids
            .into_iter()
            .map(|id| self.country(id.as_str()))
            .collect::<Result<Vec<_>, _>>()?;
        members.sort_by(|a, b| {
            b.area_km2
                .total_cmp(&a.area_km2)
                .then_with(|| a.id.cmp(&b.id))
        });
        members.dedup_by(|a, b| a.id == b.id);
        Ok(members.into_iter().take(n).map(|c| c.id.clone()).collect())
    }

    /// Neighbors of `from` within [`MAX_STEP_DEVIATION_DEG`] of `direction`,
    /// best first (smallest deviation, then id).
    pub fn qualifying_steps(
        &self,
        from: &str,
        direction: Direction,
    ) -> Result<Vec<(CountryId, f64)>, WorldError> {
        let origin = self.country(from)?;
        let mut out: Vec<(CountryId, f64)> = self
            .neighbors(from)?
            .iter()
            .map(|n| {
                let to = &self.countries[n];
                let dev =
                    angular_deviation(bearing(origin.centroid, to.centroid), direction.bearing());
                (n.clone(), dev)
            })
            .filter(|(_, dev)| *dev < MAX_STEP_DEVIATION_DEG)
            .collect();
        out.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        Ok(out)
    }

    /// The neighbor of `from` lying most nearly in `direction`, if any lies
    /// within 60 degrees of it.
    pub fn step_in_direction(
        &self,
        from: &str,
        direction: Direction,
    ) -> Result<Option<CountryId>, WorldError> {
        Ok(self
            .qualifying_steps(from, direction)?
            .into_iter()
            .next()
            .map(|(id, _)| id))
    }

    /// Repeats [`step_in_direction`](Self::step_in_direction) `count` times.
    /// A step never returns to the country just left unless it is the only
    /// qualifying neighbor. Stops early when no neighbor qualifies; the
    /// returned path starts at `from`.
    pub fn walk(
        &self,
        from: &str,
        direction: Direction,
        count: usize,
    ) -> Result<Vec<CountryId>, WorldError> {
        let start = self
            .id(from)
            .cloned()
            .ok_or_else(|| WorldError::NotFound(from.to_string()))?;
        let mut path = vec![start];
        for _ in 0..count {
            let here = path.last().expect("path is never empty");
            let previous = path.len().checked_sub(2).map(|i| &path[i]);
            let steps = self.qualifying_steps(here.as_str(), direction)?;
            let next = steps
                .iter()
                .find(|(id, _)| Some(id) != previous)
                .or_else(|| steps.first())
                .map(|(id, _)| id.clone());
            match next {
                Some(n) => path.push(n),
                None => break,
            }
        }
        Ok(path)
    }

    /// The candidate with the largest (east) or smallest (west) centroid
    /// longitude; ties go to the smaller id.
    pub fn extremal_by_longitude<'a>(
        &self,
        candidates: impl IntoIterator<Item = &'a CountryId>,
        side: Side,
    ) -> Result<CountryId, WorldError> {
        let mut best: Option<&Country> = None;
        for id in candidates {
            let c = self.country(id.as_str())?;
            best = match best {
                None => Some(c),
                Some(b) => {
                    let ord = c.centroid.lon.total_cmp(&b.centroid.lon);
                    let better = match side {
                        Side::East => ord.is_gt(),
                        Side::West => ord.is_lt(),
                    };
                    if better || (ord.is_eq() && c.id < b.id) {
                        Some(c)
                    } else {
                        Some(b)
                    }
                }
            };
        }
        best.map(|c| c.id.clone())
            .ok_or(WorldError::EmptyCandidates)
    }

    /// The country under `point`, or `None` over water. Points on a shared
    /// border go to the smaller id.
    pub fn hit_test(&self, point: LonLat) -> Result<Option<CountryId>, WorldError> {
        if !point.in_range() || point.lon.is_nan() || point.lat.is_nan() {
            return Err(WorldError::OutOfRange {
                lon: point.lon,
                lat: point.lat,
            });
        }
        // BTreeMap iteration is id-ordered, so the first hit is the smallest id.
        Ok(self
            .countries
            .values()
            .filter(|c| geometry::rect_contains(&c.bbox, point))
            .find(|c| geometry::covers(&c.geometry, point))
            .map(|c| c.id.clone()))
    }
}

fn to_multipolygon(value: geojson::Value) -> Result<MultiPolygon<f64>, String> {
    let geom: geo::Geometry<f64> = value
        .try_into()
        .map_err(|e: geojson::Error| e.to_string())?;
    match geom {
        geo::Geometry::Polygon(p) => Ok(MultiPolygon::new(vec![p])),
        geo::Geometry::MultiPolygon(mp) if !mp.0.is_empty() => Ok(mp),
        geo::Geometry::MultiPolygon(_) => Err("empty multipolygon".into()),
        other => Err(format!("expected Polygon or MultiPolygon, found {other:?}")
            .chars()
            .take(80)
            .collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = include_str!("../../testdata/toy5.geojson");

    fn toy() -> WorldMap {
        WorldMap::from_bytes(TOY.as_bytes()).unwrap()
    }

    #[test]
    fn toy_map_loads_with_symmetric_adjacency() {
        let map = toy();
        assert_eq!(map.len(), 5);
        for id in map.ids() {
            for n in map.neighbors(id.as_str()).unwrap() {
                assert!(map.neighbors(n.as_str()).unwrap().contains(id));
            }
        }
    }

    #[test]
    fn asymmetric_adjacency_is_rejected() {
        let broken = TOY.replace(
            r#""area_km2":100,"neighbors":["BBB","CCC"]"#,
            r#""area_km2":100,"neighbors":["BBB","CCC","DDD"]"#,
        );
        assert_ne!(broken, TOY);
        let err = WorldMap::from_bytes(broken.as_bytes()).unwrap_err();
        assert_eq!(err.to_string(), "asymmetric adjacency AAA/DDD");
    }

    #[test]
    fn missing_area_names_the_country() {
        let broken = TOY.replace(r#""area_km2":300,"#, "");
        let err = WorldMap::from_bytes(broken.as_bytes()).unwrap_err();
        assert!(
            matches!(err, WorldError::MissingField { ref country, field: "area_km2" } if country == "CCC"),
            "{err}"
        );
    }

    #[test]
    fn missing_region_names_the_country() {
        let broken = TOY.replace(r#""region":"Southland","#, "");
        let err = WorldMap::from_bytes(broken.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("EEE"), "{err}");
        assert!(err.to_string().contains("region"), "{err}");
    }

    #[test]
    fn version_is_sha256_of_bytes() {
        let a = toy();
        let b = toy();
        assert_eq!(a.version(), b.version());
        assert_eq!(a.version().len(), 64);
        let other = WorldMap::from_bytes(format!("{TOY} ").as_bytes()).unwrap();
        assert_ne!(a.version(), other.version());
    }

    #[test]
    fn largest_with_n_one_is_single_largest() {
        let map = toy();
        let all = map.largest_in_region("Toyland", 10).unwrap();
        assert_eq!(
            map.largest_in_region("Toyland", 1).unwrap(),
            vec![all[0].clone()]
        );
        assert!(matches!(
            map.largest_in_region("Atlantis", 3),
            Err(WorldError::UnknownRegion(_))
        ));
    }

    #[test]
    fn extremal_rejects_empty_set() {
        let map = toy();
        let none: Vec<CountryId> = vec![];
        assert!(matches!(
            map.extremal_by_longitude(&none, Side::East),
            Err(WorldError::EmptyCandidates)
        ));
        let one = vec![CountryId::from("CCC")];
        assert_eq!(map.extremal_by_longitude(&one, Side::West).unwrap(), "CCC");
    }

    #[test]
    fn shared_border_goes_to_smaller_id() {
        let map = toy();
        // AAA and BBB share the edge x = 10.
        assert_eq!(
            map.hit_test(LonLat::new(10.0, 5.0)).unwrap().unwrap(),
            "AAA"
        );
        assert_eq!(
            map.hit_test(LonLat::new(15.0, 5.0)).unwrap().unwrap(),
            "BBB"
        );
        assert!(map.hit_test(LonLat::new(100.0, 50.0)).unwrap().is_none());
        assert!(map.hit_test(LonLat::new(181.0, 0.0)).is_err());
    }

    #[test]
    fn fold_name_normalizes_case_and_punctuation() {
        assert_eq!(fold_name("Guinea-Bissau"), "guinea bissau");
        assert_eq!(fold_name("  Côte d'Ivoire "), "côte divoire");
        assert_eq!(fold_name("EGYPT"), "egypt");
    }
}

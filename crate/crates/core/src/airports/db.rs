use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::geo::{great_circle_nm, LatLon};
use super::metar::Metar;

#[derive(Debug, Error, PartialEq)]
pub enum AirportDbError {
    #[error("cannot read airport database {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("malformed airport row at line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("duplicate airport ident {ident} at line {line}")]
    DuplicateIdent { ident: String, line: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Runway {
    pub designators: String,
    pub length_ft: f64,
    pub width_ft: f64,
    pub surface: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Airport {
    pub ident: String,
    pub name: String,
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub elevation_ft: f64,
    pub runways: Vec<Runway>,
}

impl Airport {
    pub fn position(&self) -> LatLon {
        LatLon::new(self.latitude_deg, self.longitude_deg)
    }

    /// Zero when the airport has no runways.
    pub fn longest_runway_ft(&self) -> f64 {
        self.runways.iter().map(|r| r.length_ft).fold(0.0, f64::max)
    }

    pub fn has_runways(&self) -> bool {
        !self.runways.is_empty()
    }
}

#[derive(Debug, Clone, Default)]
pub struct AirportDb {
    airports: BTreeMap<String, Airport>,
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    ident: String,
    name: String,
    latitude_deg: f64,
    longitude_deg: f64,
    elevation_ft: f64,
    runway_designators: String,
    runway_length_ft: Option<f64>,
    runway_width_ft: Option<f64>,
    surface: String,
}

pub const CSV_HEADER: [&str; 9] = [
    "ident",
    "name",
    "latitude_deg",
    "longitude_deg",
    "elevation_ft",
    "runway_designators",
    "runway_length_ft",
    "runway_width_ft",
    "surface",
];

fn valid_ident(ident: &str) -> bool {
    ident.len() == 4 && ident.chars().all(|c| c.is_ascii_alphanumeric())
}

impl AirportDb {
    pub fn from_airports(airports: impl IntoIterator<Item = Airport>) -> Result<Self, AirportDbError> {
        let mut db = AirportDb::default();
        for (i, a) in airports.into_iter().enumerate() {
            let ident = a.ident.clone();
            if db.airports.insert(ident.clone(), a).is_some() {
                return Err(AirportDbError::DuplicateIdent { ident, line: i as u64 + 1 });
            }
        }
        Ok(db)
    }

    /// Parses the one-row-per-runway CSV format. Rows of one airport must be
    /// contiguous and repeat identical airport fields; an ident that reappears
    /// later, with different airport fields, or with a repeated runway
    /// designator is a duplicate.
    pub fn from_reader<R: std::io::Read>(reader: R) -> Result<Self, AirportDbError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| AirportDbError::MalformedRow { line: 1, reason: e.to_string() })?
            .clone();
        if headers.iter().collect::<Vec<_>>() != CSV_HEADER {
            return Err(AirportDbError::MalformedRow {
                line: 1,
                reason: format!("expected header `{}`", CSV_HEADER.join(",")),
            });
        }

        let mut db = AirportDb::default();
        let mut current: Option<String> = None;
        for result in rdr.records() {
            let record = result.map_err(|e| AirportDbError::MalformedRow {
                line: e.position().map(|p| p.line()).unwrap_or(0),
                reason: e.to_string(),
            })?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let row: CsvRow = record
                .deserialize(Some(&headers))
                .map_err(|e| AirportDbError::MalformedRow { line, reason: e.to_string() })?;
            let bad = |reason: String| AirportDbError::MalformedRow { line, reason };
            if !valid_ident(&row.ident) {
                return Err(bad(format!("ident `{}` is not 4 alphanumerics", row.ident)));
            }
            let pos = LatLon::new(row.latitude_deg, row.longitude_deg);
            if !pos.is_valid() {
                return Err(bad(format!(
                    "coordinates ({}, {}) out of range",
                    row.latitude_deg, row.longitude_deg
                )));
            }
            let runway = if row.runway_designators.is_empty() {
                if row.runway_length_ft.is_some() || row.runway_width_ft.is_some() {
                    return Err(bad("runway dimensions without designators".into()));
                }
                None
            } else {
                let length_ft = row.runway_length_ft.filter(|l| *l > 0.0);
                let width_ft = row.runway_width_ft.filter(|w| *w > 0.0);
                match (length_ft, width_ft) {
                    (Some(length_ft), Some(width_ft)) => Some(Runway {
                        designators: row.runway_designators.clone(),
                        length_ft,
                        width_ft,
                        surface: row.surface.clone(),
                    }),
                    _ => return Err(bad("runway length and width must be positive".into())),
                }
            };

            let duplicate = || AirportDbError::DuplicateIdent { ident: row.ident.clone(), line };
            match db.airports.get_mut(&row.ident) {
                Some(existing) => {
                    let same_airport = current.as_deref() == Some(row.ident.as_str())
                        && existing.name == row.name
                        && existing.latitude_deg == row.latitude_deg
                        && existing.longitude_deg == row.longitude_deg
                        && existing.elevation_ft == row.elevation_ft;
                    let Some(runway) = runway else {
                        return Err(duplicate());
                    };
                    if !same_airport
                        || existing.runways.iter().any(|r| r.designators == runway.designators)
                    {
                        return Err(duplicate());
                    }
                    existing.runways.push(runway);
                }
                None => {
                    db.airports.insert(
                        row.ident.clone(),
                        Airport {
                            ident: row.ident.clone(),
                            name: row.name,
                            latitude_deg: row.latitude_deg,
                            longitude_deg: row.longitude_deg,
                            elevation_ft: row.elevation_ft,
                            runways: runway.into_iter().collect(),
                        },
                    );
                }
            }
            current = Some(row.ident);
        }
        Ok(db)
    }

    pub fn len(&self) -> usize {
        self.airports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.airports.is_empty()
    }

    pub fn get(&self, ident: &str) -> Option<&Airport> {
        self.airports.get(ident)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Airport> {
        self.airports.values()
    }

    /// Airports loaded without any runway rows.
    pub fn without_runways(&self) -> impl Iterator<Item = &Airport> {
        self.airports.values().filter(|a| !a.has_runways())
    }
}

pub fn load_airport_db(path: &Path) -> Result<AirportDb, AirportDbError> {
    let file = std::fs::File::open(path).map_err(|e| AirportDbError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    AirportDb::from_reader(std::io::BufReader::new(file))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlternateCandidate {
    pub airport: Airport,
    pub distance_nm: f64,
    pub bearing_deg: f64,
    pub longest_runway_ft: f64,
    pub metar: Option<Metar>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlternateParams {
    pub radius_nm: f64,
    pub min_runway_ft: f64,
    pub max_results: usize,
}

impl Default for AlternateParams {
    fn default() -> Self {
        Self {
            radius_nm: 200.0,
            min_runway_ft: 5000.0,
            max_results: 5,
        }
    }
}

/// Airports within `radius_nm` whose longest runway is at least
/// `min_runway_ft`, nearest first (ties by ident), at most `max_results`.
/// Airports without runways never qualify.
pub fn nearby_airports(
    db: &AirportDb,
    position: LatLon,
    radius_nm: f64,
    min_runway_ft: f64,
    max_results: usize,
) -> Vec<AlternateCandidate> {
    let mut out: Vec<AlternateCandidate> = db
        .iter()
        .filter(|a| a.has_runways() && a.longest_runway_ft() >= min_runway_ft)
        .filter_map(|a| {
            let (distance_nm, bearing_deg) = great_circle_nm(position, a.position());
            (distance_nm <= radius_nm).then(|| AlternateCandidate {
                airport: a.clone(),
                distance_nm,
                bearing_deg,
                longest_runway_ft: a.longest_runway_ft(),
                metar: None,
            })
        })
        .collect();
    out.sort_by(|x, y| {
        x.distance_nm
            .total_cmp(&y.distance_nm)
            .then_with(|| x.airport.ident.cmp(&y.airport.ident))
    });
    out.truncate(max_results);
    out
}

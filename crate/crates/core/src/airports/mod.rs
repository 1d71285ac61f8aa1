//! Airport database, great-circle geometry, alternate shortlisting and
//! weather attachment.

mod db;
mod geo;
mod metar;
mod weather;

pub use db::{
    load_airport_db, nearby_airports, Airport, AirportDb, AirportDbError, AlternateCandidate,
    AlternateParams, Runway, CSV_HEADER,
};
pub use geo::{great_circle_nm, LatLon, EARTH_RADIUS_KM, KM_PER_NM};
pub use metar::{
    parse_metar, CloudCover, CloudLayer, GroupKind, Metar, MetarError, MetarGroup, Wind,
    WindDirection,
};
pub use weather::{attach_weather, FileMetarSource, MetarSource, RemoteMetarSource};

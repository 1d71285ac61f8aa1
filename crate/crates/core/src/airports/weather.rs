use std::collections::HashMap;
use std::path::Path;
use std::time::Duration;

use tracing::warn;

use super::db::AlternateCandidate;
use super::metar::parse_metar;

/// Supplier of raw METAR text keyed by ICAO ident.
pub trait MetarSource: Send + Sync {
    /// Raw reports for whichever of `stations` are available.
    fn fetch(&self, stations: &[&str]) -> HashMap<String, String>;
}

/// First whitespace token after an optional `METAR`/`SPECI` prefix.
fn station_of(line: &str) -> Option<&str> {
    let mut tokens = line.split_whitespace();
    let first = tokens.next()?;
    if matches!(first, "METAR" | "SPECI") {
        tokens.next()
    } else {
        Some(first)
    }
}

fn index_reports(text: &str) -> HashMap<String, String> {
    let mut map = HashMap::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        if let Some(station) = station_of(line) {
            // Later lines for the same station are newer reports.
            map.insert(station.to_string(), line.to_string());
        }
    }
    map
}

/// Newline-delimited METAR file; the station is the first token of a line.
#[derive(Debug, Clone, Default)]
pub struct FileMetarSource {
    reports: HashMap<String, String>,
}

impl FileMetarSource {
    pub fn load(path: &Path) -> std::io::Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn parse(text: &str) -> Self {
        Self { reports: index_reports(text) }
    }

    pub fn len(&self) -> usize {
        self.reports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reports.is_empty()
    }
}

impl MetarSource for FileMetarSource {
    fn fetch(&self, stations: &[&str]) -> HashMap<String, String> {
        stations
            .iter()
            .filter_map(|s| self.reports.get(*s).map(|r| (s.to_string(), r.clone())))
            .collect()
    }
}

/// HTTP GET source returning the same newline-delimited format. A `{ids}`
/// placeholder in the URL is replaced by the comma-separated station list;
/// otherwise an `ids=` query parameter is appended.
pub struct RemoteMetarSource {
    url: String,
    http: reqwest::blocking::Client,
}

impl RemoteMetarSource {
    pub fn new(url: impl Into<String>) -> Result<Self, reqwest::Error> {
        Ok(Self {
            url: url.into(),
            http: reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(10))
                .build()?,
        })
    }

    fn request_url(&self, stations: &[&str]) -> String {
        let ids = stations.join(",");
        if self.url.contains("{ids}") {
            self.url.replace("{ids}", &ids)
        } else if self.url.contains('?') {
            format!("{}&ids={ids}", self.url)
        } else {
            format!("{}?ids={ids}", self.url)
        }
    }
}

impl MetarSource for RemoteMetarSource {
    fn fetch(&self, stations: &[&str]) -> HashMap<String, String> {
        if stations.is_empty() {
            return HashMap::new();
        }
        let url = self.request_url(stations);
        let body = self
            .http
            .get(&url)
            .send()
            .and_then(|r| r.error_for_status())
            .and_then(|r| r.text());
        match body {
            Ok(text) => {
                let mut all = index_reports(&text);
                all.retain(|k, _| stations.contains(&k.as_str()));
                all
            }
            Err(e) => {
                warn!(%url, error = %e, "METAR fetch failed; continuing without weather");
                HashMap::new()
            }
        }
    }
}

/// Decorates candidates with decoded weather. Candidate order and count are
/// never changed; missing or undecodable reports leave `metar` empty.
pub fn attach_weather(
    candidates: Vec<AlternateCandidate>,
    source: &dyn MetarSource,
) -> Vec<AlternateCandidate> {
    let idents: Vec<&str> = candidates.iter().map(|c| c.airport.ident.as_str()).collect();
    let reports = source.fetch(&idents);
    candidates
        .into_iter()
        .map(|mut c| {
            c.metar = reports.get(&c.airport.ident).and_then(|raw| match parse_metar(raw) {
                Ok(m) => Some(m),
                Err(e) => {
                    warn!(station = %c.airport.ident, error = %e, "undecodable METAR dropped");
                    None
                }
            });
            c
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::airports::{Airport, Runway};

    fn candidate(ident: &str, distance_nm: f64) -> AlternateCandidate {
        AlternateCandidate {
            airport: Airport {
                ident: ident.into(),
                name: ident.into(),
                latitude_deg: 0.0,
                longitude_deg: 0.0,
                elevation_ft: 0.0,
                runways: vec![Runway {
                    designators: "09/27".into(),
                    length_ft: 8000.0,
                    width_ft: 150.0,
                    surface: "ASP".into(),
                }],
            },
            distance_nm,
            bearing_deg: 0.0,
            longest_runway_ft: 8000.0,
            metar: None,
        }
    }

    #[test]
    fn missing_weather_keeps_candidates() {
        let src = FileMetarSource::parse(
            "KAAA 121753Z 18012KT 10SM CLR 20/10 A3000\nKCCC 121753Z 27005KT 5SM BR OVC004 12/11 A2990\n",
        );
        let out = attach_weather(vec![candidate("KAAA", 1.0), candidate("KBBB", 2.0), candidate("KCCC", 3.0)], &src);
        assert_eq!(out.len(), 3);
        assert_eq!(out.iter().filter(|c| c.metar.is_some()).count(), 2);
        assert!(out[1].metar.is_none());
        assert_eq!(out[2].metar.as_ref().unwrap().ceiling_ft, Some(400));
    }

    #[test]
    fn undecodable_report_degrades_to_absent() {
        let mut reports = HashMap::new();
        reports.insert("KAAA".to_string(), "garbage".to_string());
        struct Fixed(HashMap<String, String>);
        impl MetarSource for Fixed {
            fn fetch(&self, _: &[&str]) -> HashMap<String, String> {
                self.0.clone()
            }
        }
        let out = attach_weather(vec![candidate("KAAA", 1.0)], &Fixed(reports));
        assert_eq!(out.len(), 1);
        assert!(out[0].metar.is_none());
    }

    #[test]
    fn attachment_preserves_order() {
        let text = ["KAAA", "KBBB", "KCCC", "KDDD"]
            .iter()
            .map(|s| format!("{s} 121753Z 18012KT 10SM CLR 20/10 A3000"))
            .collect::<Vec<_>>()
            .join("\n");
        let src = FileMetarSource::parse(&text);
        let before = vec![candidate("KDDD", 1.0), candidate("KAAA", 2.0), candidate("KCCC", 3.0), candidate("KBBB", 4.0)];
        let after = attach_weather(before.clone(), &src);
        let ids = |v: &[AlternateCandidate]| v.iter().map(|c| c.airport.ident.clone()).collect::<Vec<_>>();
        assert_eq!(ids(&before), ids(&after));
        assert!(after.iter().all(|c| c.metar.as_ref().is_some_and(|m| m.station == c.airport.ident)));
    }

    #[test]
    fn file_source_skips_prefix_and_comments() {
        let src = FileMetarSource::parse("# comment\nMETAR KSEA 121753Z 18012KT 2SM OVC008 12/10 A2970\n\n");
        assert_eq!(src.len(), 1);
        assert!(src.fetch(&["KSEA"]).contains_key("KSEA"));
    }

    #[test]
    fn remote_url_building() {
        let s = RemoteMetarSource::new("http://wx.local/metar?format=raw").unwrap();
        assert_eq!(s.request_url(&["KSEA", "KBFI"]), "http://wx.local/metar?format=raw&ids=KSEA,KBFI");
        let s = RemoteMetarSource::new("http://wx.local/{ids}.txt").unwrap();
        assert_eq!(s.request_url(&["KSEA"]), "http://wx.local/KSEA.txt");
    }
}

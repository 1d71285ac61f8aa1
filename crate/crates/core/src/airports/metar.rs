//! Best-effort METAR decoding.
//!
//! Every whitespace-separated group of the raw report is kept in
//! [`Metar::groups`] in its original order, tagged with what it was decoded
//! as. Groups the decoder does not understand end up in the remarks instead of
//! failing the parse.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::debug;

const KT_PER_MPS: f64 = 1.943_844;
const KT_PER_KMH: f64 = 0.539_957;
const SM_PER_METRE: f64 = 1.0 / 1609.344;
const INHG_PER_HPA: f64 = 0.029_529_98;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetarError {
    #[error("empty METAR")]
    Empty,
    #[error("unrecognized station identifier `{0}`")]
    UnrecognizedStation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum WindDirection {
    Calm,
    Variable,
    Degrees(u16),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Wind {
    pub direction: WindDirection,
    pub speed_kt: u32,
    pub gust_kt: Option<u32>,
    /// Extremes of a variable direction group such as `150V210`.
    pub varying_between: Option<(u16, u16)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CloudCover {
    Few,
    Scattered,
    Broken,
    Overcast,
    VerticalVisibility,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CloudLayer {
    pub cover: CloudCover,
    /// Feet above ground; absent when reported as `///`.
    pub height_ft: Option<u32>,
    pub convective: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GroupKind {
    ReportType,
    Station,
    ObservationTime,
    Modifier,
    Wind,
    WindVariation,
    Visibility,
    RunwayVisualRange,
    Weather,
    Cloud,
    SkyClear,
    TemperatureDewpoint,
    Altimeter,
    Trend,
    Remark,
    Unrecognized,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetarGroup {
    pub kind: GroupKind,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metar {
    pub station: String,
    pub raw: String,
    pub observation_time: Option<String>,
    pub wind: Option<Wind>,
    pub visibility_sm: Option<f64>,
    pub clouds: Vec<CloudLayer>,
    /// Lowest broken, overcast or vertical-visibility layer.
    pub ceiling_ft: Option<u32>,
    pub weather: Vec<String>,
    pub temperature_c: Option<i32>,
    pub dewpoint_c: Option<i32>,
    pub altimeter_inhg: Option<f64>,
    pub remarks: String,
    pub groups: Vec<MetarGroup>,
}

impl Metar {
    /// Rejoins all groups with single spaces; equals the raw report with its
    /// whitespace normalized.
    pub fn reconstruct(&self) -> String {
        self.groups
            .iter()
            .map(|g| g.text.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// One-line human summary used in prompts.
    pub fn summary(&self) -> String {
        let mut parts = Vec::new();
        if let Some(w) = &self.wind {
            let dir = match w.direction {
                WindDirection::Calm => "calm".to_string(),
                WindDirection::Variable => format!("VRB@{}kt", w.speed_kt),
                WindDirection::Degrees(d) => format!("{d:03}@{}kt", w.speed_kt),
            };
            match w.gust_kt {
                Some(g) => parts.push(format!("wind {dir} gust {g}kt")),
                None => parts.push(format!("wind {dir}")),
            }
        }
        if let Some(v) = self.visibility_sm {
            parts.push(format!("vis {v:.1} sm"));
        }
        match self.ceiling_ft {
            Some(c) => parts.push(format!("ceiling {c} ft")),
            None => parts.push("no ceiling".to_string()),
        }
        if !self.weather.is_empty() {
            parts.push(self.weather.join(" "));
        }
        if let (Some(t), Some(d)) = (self.temperature_c, self.dewpoint_c) {
            parts.push(format!("temp {t}C dew {d}C"));
        }
        if let Some(a) = self.altimeter_inhg {
            parts.push(format!("altimeter {a:.2} inHg"));
        }
        parts.join(", ")
    }
}

macro_rules! re {
    ($name:ident, $pat:expr) => {
        static $name: LazyLock<Regex> = LazyLock::new(|| Regex::new($pat).unwrap());
    };
}

re!(STATION, r"^[A-Z0-9]{4}$");
re!(TIME, r"^\d{6}Z$");
re!(WIND, r"^(\d{3}|VRB)(\d{2,3})(?:G(\d{2,3}))?(KT|MPS|KMH)$");
re!(WIND_VAR, r"^(\d{3})V(\d{3})$");
re!(VIS_SM, r"^([MP])?(?:(\d{1,2})|(\d{1,2})/(\d{1,2}))SM$");
re!(VIS_WHOLE, r"^\d{1,2}$");
re!(VIS_FRACTION_SM, r"^(\d{1,2})/(\d{1,2})SM$");
re!(VIS_METRES, r"^(\d{4})(NDV)?$");
re!(RVR, r"^R\d{2}[LCR]?/");
re!(
    WEATHER,
    r"^(?:[-+]|VC)?(?:MI|PR|BC|DR|BL|SH|TS|FZ)?(?:DZ|RA|SN|SG|IC|PL|GR|GS|UP|BR|FG|FU|VA|DU|SA|HZ|PY|PO|SQ|FC|SS|DS)*$"
);
re!(CLOUD, r"^(FEW|SCT|BKN|OVC)(\d{3}|///)(CB|TCU|///)?$");
re!(VERTICAL_VIS, r"^VV(\d{3}|///)$");
re!(TEMP, r"^(M?\d{2})/(M?\d{2})?$");
re!(ALT_INHG, r"^A(\d{4})$");
re!(ALT_HPA, r"^Q(\d{4})$");

fn signed_temp(s: &str) -> i32 {
    match s.strip_prefix('M') {
        Some(rest) => -rest.parse::<i32>().unwrap_or(0),
        None => s.parse().unwrap_or(0),
    }
}

fn parse_wind(tok: &str) -> Option<Wind> {
    let caps = WIND.captures(tok)?;
    let factor = match &caps[4] {
        "KT" => 1.0,
        "MPS" => KT_PER_MPS,
        _ => KT_PER_KMH,
    };
    let convert = |v: &str| (v.parse::<f64>().unwrap_or(0.0) * factor).round() as u32;
    let speed_kt = convert(&caps[2]);
    let mut gust_kt = caps.get(3).map(|g| convert(g.as_str()));
    if gust_kt.is_some_and(|g| g <= speed_kt) {
        debug!(group = tok, "ignoring gust not above mean wind");
        gust_kt = None;
    }
    let direction = match &caps[1] {
        "VRB" => WindDirection::Variable,
        _ if speed_kt == 0 && gust_kt.is_none() => WindDirection::Calm,
        d => WindDirection::Degrees(d.parse().ok()?),
    };
    Some(Wind {
        direction,
        speed_kt,
        gust_kt,
        varying_between: None,
    })
}

fn fraction(num: &str, den: &str) -> Option<f64> {
    let den: f64 = den.parse().ok()?;
    (den > 0.0).then(|| num.parse::<f64>().unwrap_or(0.0) / den)
}

fn parse_vis_sm(tok: &str) -> Option<f64> {
    let caps = VIS_SM.captures(tok)?;
    match (caps.get(2), caps.get(3), caps.get(4)) {
        (Some(whole), _, _) => whole.as_str().parse().ok(),
        (None, Some(n), Some(d)) => fraction(n.as_str(), d.as_str()),
        _ => None,
    }
}

pub fn parse_metar(raw: &str) -> Result<Metar, MetarError> {
    let tokens: Vec<&str> = raw.split_whitespace().collect();
    if tokens.is_empty() {
        return Err(MetarError::Empty);
    }
    let mut groups: Vec<MetarGroup> = Vec::with_capacity(tokens.len());
    let mut push = |kind: GroupKind, text: String| groups.push(MetarGroup { kind, text });

    let mut i = 0;
    if matches!(tokens[0], "METAR" | "SPECI") {
        push(GroupKind::ReportType, tokens[0].to_string());
        i += 1;
    }
    let station = tokens.get(i).copied().unwrap_or("");
    if !STATION.is_match(station) || station.chars().all(|c| c.is_ascii_digit()) {
        return Err(MetarError::UnrecognizedStation(station.to_string()));
    }
    push(GroupKind::Station, station.to_string());
    i += 1;

    let mut metar = Metar {
        station: station.to_string(),
        raw: raw.to_string(),
        observation_time: None,
        wind: None,
        visibility_sm: None,
        clouds: Vec::new(),
        ceiling_ft: None,
        weather: Vec::new(),
        temperature_c: None,
        dewpoint_c: None,
        altimeter_inhg: None,
        remarks: String::new(),
        groups: Vec::new(),
    };
    let mut remarks: Vec<&str> = Vec::new();
    let mut in_tail: Option<GroupKind> = None;

    while i < tokens.len() {
        let text = tokens[i];
        i += 1;
        if let Some(kind) = in_tail {
            push(kind, text.to_string());
            remarks.push(text);
            continue;
        }
        let tok = text.trim_end_matches('=');
        let kind = match tok {
            "RMK" => {
                in_tail = Some(GroupKind::Remark);
                push(GroupKind::Remark, text.to_string());
                continue;
            }
            "NOSIG" | "BECMG" | "TEMPO" => {
                in_tail = Some(GroupKind::Trend);
                push(GroupKind::Trend, text.to_string());
                remarks.push(text);
                continue;
            }
            "AUTO" | "COR" | "NIL" => GroupKind::Modifier,
            "CAVOK" => {
                metar.visibility_sm.get_or_insert(10_000.0 * SM_PER_METRE);
                GroupKind::Visibility
            }
            "SKC" | "CLR" | "NSC" | "NCD" => GroupKind::SkyClear,
            _ if TIME.is_match(tok) => {
                metar.observation_time.get_or_insert_with(|| tok.to_string());
                GroupKind::ObservationTime
            }
            _ if WIND.is_match(tok) => {
                if metar.wind.is_none() {
                    metar.wind = parse_wind(tok);
                }
                GroupKind::Wind
            }
            _ if WIND_VAR.is_match(tok) => {
                let caps = WIND_VAR.captures(tok).expect("matched");
                if let Some(w) = metar.wind.as_mut() {
                    w.varying_between = Some((caps[1].parse().unwrap_or(0), caps[2].parse().unwrap_or(0)));
                }
                GroupKind::WindVariation
            }
            _ if VIS_WHOLE.is_match(tok)
                && tokens
                    .get(i)
                    .is_some_and(|next| VIS_FRACTION_SM.is_match(next.trim_end_matches('='))) =>
            {
                let next = tokens[i];
                i += 1;
                let caps = VIS_FRACTION_SM.captures(next.trim_end_matches('=')).expect("matched");
                let whole: f64 = tok.parse().unwrap_or(0.0);
                if let Some(frac) = fraction(&caps[1], &caps[2]) {
                    metar.visibility_sm.get_or_insert(whole + frac);
                }
                push(GroupKind::Visibility, format!("{text} {next}"));
                continue;
            }
            _ if VIS_SM.is_match(tok) => {
                if let Some(v) = parse_vis_sm(tok) {
                    metar.visibility_sm.get_or_insert(v);
                }
                GroupKind::Visibility
            }
            _ if VIS_METRES.is_match(tok) => {
                let metres: f64 = tok[..4].parse().unwrap_or(0.0);
                // 9999 means 10 km or more.
                let metres = if metres >= 9999.0 { 10_000.0 } else { metres };
                metar.visibility_sm.get_or_insert(metres * SM_PER_METRE);
                GroupKind::Visibility
            }
            _ if RVR.is_match(tok) => GroupKind::RunwayVisualRange,
            _ if CLOUD.is_match(tok) => {
                let caps = CLOUD.captures(tok).expect("matched");
                let cover = match &caps[1] {
                    "FEW" => CloudCover::Few,
                    "SCT" => CloudCover::Scattered,
                    "BKN" => CloudCover::Broken,
                    _ => CloudCover::Overcast,
                };
                metar.clouds.push(CloudLayer {
                    cover,
                    height_ft: caps[2].parse::<u32>().ok().map(|h| h * 100),
                    convective: caps.get(3).map(|m| m.as_str().to_string()).filter(|c| c != "///"),
                });
                GroupKind::Cloud
            }
            _ if VERTICAL_VIS.is_match(tok) => {
                let caps = VERTICAL_VIS.captures(tok).expect("matched");
                metar.clouds.push(CloudLayer {
                    cover: CloudCover::VerticalVisibility,
                    height_ft: caps[1].parse::<u32>().ok().map(|h| h * 100),
                    convective: None,
                });
                GroupKind::Cloud
            }
            _ if TEMP.is_match(tok) => {
                let caps = TEMP.captures(tok).expect("matched");
                if metar.temperature_c.is_none() {
                    metar.temperature_c = Some(signed_temp(&caps[1]));
                    metar.dewpoint_c = caps.get(2).map(|d| signed_temp(d.as_str()));
                }
                GroupKind::TemperatureDewpoint
            }
            _ if ALT_INHG.is_match(tok) => {
                let hundredths: f64 = tok[1..].parse().unwrap_or(0.0);
                metar.altimeter_inhg.get_or_insert(hundredths / 100.0);
                GroupKind::Altimeter
            }
            _ if ALT_HPA.is_match(tok) => {
                let hpa: f64 = tok[1..].parse().unwrap_or(0.0);
                metar
                    .altimeter_inhg
                    .get_or_insert((hpa * INHG_PER_HPA * 100.0).round() / 100.0);
                GroupKind::Altimeter
            }
            _ if !tok.is_empty() && WEATHER.is_match(tok) && tok.chars().any(|c| c.is_ascii_alphabetic()) => {
                metar.weather.push(tok.to_string());
                GroupKind::Weather
            }
            _ => {
                remarks.push(text);
                GroupKind::Unrecognized
            }
        };
        push(kind, text.to_string());
    }

    metar.ceiling_ft = metar
        .clouds
        .iter()
        .filter(|l| matches!(l.cover, CloudCover::Broken | CloudCover::Overcast | CloudCover::VerticalVisibility))
        .filter_map(|l| l.height_ft)
        .min();
    metar.remarks = remarks.join(" ");
    metar.groups = groups;
    Ok(metar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decodes_low_ifr_report() {
        let m = parse_metar("KSEA 121753Z 18012KT 2SM -RA BKN008 OVC015 12/10 A2970").unwrap();
        assert_eq!(m.station, "KSEA");
        let w = m.wind.as_ref().unwrap();
        assert_eq!(w.direction, WindDirection::Degrees(180));
        assert_eq!(w.speed_kt, 12);
        assert_eq!(w.gust_kt, None);
        assert_eq!(m.visibility_sm, Some(2.0));
        assert_eq!(m.ceiling_ft, Some(800));
        assert_eq!(m.altimeter_inhg, Some(29.70));
        assert_eq!(m.weather, vec!["-RA"]);
        assert_eq!((m.temperature_c, m.dewpoint_c), (Some(12), Some(10)));
        assert!(m.remarks.is_empty());
    }

    #[test]
    fn calm_wind() {
        let m = parse_metar("KBFI 121753Z 00000KT 10SM CLR 15/08 A3001").unwrap();
        let w = m.wind.unwrap();
        assert_eq!(w.speed_kt, 0);
        assert_eq!(w.direction, WindDirection::Calm);
        assert_eq!(m.ceiling_ft, None);
    }

    #[test]
    fn gusts_exceed_mean_wind() {
        let m = parse_metar("KSFO 121756Z 28010G22KT 10SM FEW020 18/12 A3012").unwrap();
        let w = m.wind.unwrap();
        assert_eq!((w.speed_kt, w.gust_kt), (10, Some(22)));
        assert!(w.gust_kt.unwrap() > w.speed_kt);
        assert_eq!(m.ceiling_ft, None);
    }

    #[test]
    fn station_must_be_four_alphanumerics() {
        assert_eq!(
            parse_metar("SEA 121753Z 18012KT"),
            Err(MetarError::UnrecognizedStation("SEA".into()))
        );
        assert_eq!(parse_metar("   "), Err(MetarError::Empty));
        assert!(parse_metar("METAR EGLL 121750Z 24008KT 9999 SCT030 14/09 Q1012").is_ok());
    }

    #[test]
    fn unknown_groups_go_to_remarks_in_order() {
        let m = parse_metar("KPAE 121753Z 16008KT 10SM XYZZY OVC025 11/09 A2985 RMK AO2 SLP112").unwrap();
        assert_eq!(m.remarks, "XYZZY AO2 SLP112");
        assert_eq!(m.ceiling_ft, Some(2500));
        assert_eq!(m.reconstruct(), m.raw);
    }

    #[test]
    fn trend_groups_do_not_change_current_conditions() {
        let m = parse_metar("EGLL 121750Z 24008KT 9999 SCT030 14/09 Q1012 TEMPO BKN008").unwrap();
        assert_eq!(m.ceiling_ft, None);
        assert_eq!(m.altimeter_inhg, Some(29.88));
        assert_eq!(m.remarks, "TEMPO BKN008");
    }

    proptest! {
        #[test]
        fn never_fails_and_keeps_every_group(
            body in proptest::collection::vec(
                prop_oneof![
                    "[A-Z0-9/+-]{1,9}",
                    Just("RMK".to_string()),
                    Just("1".to_string()),
                    Just("1/2SM".to_string()),
                    Just("BKN010".to_string()),
                ],
                0..14,
            ),
            sep in " {1,3}",
        ) {
            let raw = format!("KXYZ{sep}{}", body.join(&sep));
            let m = parse_metar(&raw).unwrap();
            prop_assert_eq!(m.reconstruct(), raw.split_whitespace().collect::<Vec<_>>().join(" "));
            if let Some(w) = &m.wind {
                if let Some(g) = w.gust_kt {
                    prop_assert!(g > w.speed_kt);
                }
            }
        }
    }
}

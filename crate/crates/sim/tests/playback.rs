use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::Router;
use leraat_core::telemetry::parse_telemetry_message;
use leraat_sim::{load_scenario, parse_scenario, play, play_iterations, PlayError, ScenarioFile};

#[derive(Clone, Default)]
struct Sink {
    arrivals: Arc<Mutex<Vec<(Instant, Bytes)>>>,
    reject_every: usize,
}

async fn receive(State(sink): State<Sink>, body: Bytes) -> StatusCode {
    let mut log = sink.arrivals.lock().unwrap();
    log.push((Instant::now(), body));
    if sink.reject_every > 0 && log.len() % sink.reject_every == 0 {
        StatusCode::CONFLICT
    } else {
        StatusCode::NO_CONTENT
    }
}

async fn serve(sink: Sink) -> String {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let app = Router::new().route("/api/v1/telemetry", post(receive)).with_state(sink);
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    format!("http://{addr}")
}

fn scenario() -> ScenarioFile {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/scenarios/dual_hyd_ksea_final.ndjson");
    load_scenario(std::path::Path::new(path)).unwrap()
}

fn two_frames(gap_ms: u64) -> ScenarioFile {
    let frame = |offset: u64, ts: u64| {
        format!(
            r#"{{"offset_ms":{offset},"timestamp_ms":{ts},"latitude_deg":47.0,"longitude_deg":-122.0,"altitude_ft":3000,"indicated_airspeed_kt":150,"heading_deg":180,"vertical_speed_fpm":0,"fuel_left_kg":3000,"fuel_right_kg":3000,"autopilot_mode":"AP1","autothrottle_mode":"SPEED","master_warning":false,"master_caution":false,"ecam":[]}}"#
        )
    };
    parse_scenario(&format!("{{\"name\":\"pair\"}}\n{}\n{}", frame(0, 5), frame(gap_ms, 6))).unwrap()
}

#[tokio::test]
async fn fast_replay_delivers_every_frame_in_order() {
    let sink = Sink::default();
    let target = serve(sink.clone()).await;
    let s = scenario();
    assert_eq!(s.duration_ms(), 60_000);
    let summary = play(&s, &target, 1000.0, false).await.unwrap();
    assert!(summary.elapsed < Duration::from_secs(1), "{summary:?}");
    assert_eq!((summary.frames_sent, summary.rejections, summary.iterations), (61, 0, 1));

    let log = sink.arrivals.lock().unwrap();
    assert_eq!(log.len(), 61);
    let mut last_ts = 0;
    for ((_, body), frame) in log.iter().zip(&s.frames) {
        let (state, ecam) = parse_telemetry_message(body).unwrap();
        assert!(state.timestamp_ms > last_ts);
        last_ts = state.timestamp_ms;
        assert_eq!(state.latitude_deg, frame.state.latitude_deg);
        assert_eq!(state.master_warning, frame.state.master_warning);
        let texts: Vec<_> = ecam.iter().map(|m| &m.text).collect();
        let expected: Vec<_> = frame.ecam.iter().map(|m| &m.text).collect();
        assert_eq!(texts, expected);
    }
}

#[tokio::test]
async fn real_time_spacing_is_kept() {
    let sink = Sink::default();
    let target = serve(sink.clone()).await;
    play(&two_frames(500), &target, 1.0, false).await.unwrap();
    let log = sink.arrivals.lock().unwrap();
    let gap = log[1].0 - log[0].0;
    assert!(gap >= Duration::from_millis(450) && gap <= Duration::from_millis(550), "{gap:?}");
}

#[tokio::test]
async fn rate_scales_spacing() {
    let sink = Sink::default();
    let target = serve(sink.clone()).await;
    play(&two_frames(1000), &target, 4.0, false).await.unwrap();
    let log = sink.arrivals.lock().unwrap();
    let gap = log[1].0 - log[0].0;
    assert!(gap >= Duration::from_millis(200) && gap <= Duration::from_millis(300), "{gap:?}");
}

#[tokio::test]
async fn rejections_are_counted_not_fatal() {
    let sink = Sink { reject_every: 3, ..Sink::default() };
    let target = serve(sink.clone()).await;
    let summary = play(&scenario(), &target, 1000.0, false).await.unwrap();
    assert_eq!(summary.frames_sent, 61);
    assert_eq!(summary.rejections, 20);
}

#[tokio::test]
async fn looping_keeps_timestamps_increasing() {
    let sink = Sink::default();
    let target = serve(sink.clone()).await;
    let summary = play_iterations(&two_frames(100), &target, 10.0, Some(3)).await.unwrap();
    assert_eq!((summary.frames_sent, summary.iterations), (6, 3));
    let log = sink.arrivals.lock().unwrap();
    let ts: Vec<u64> = log.iter().map(|(_, b)| parse_telemetry_message(b).unwrap().0.timestamp_ms).collect();
    assert!(ts.windows(2).all(|w| w[1] > w[0]), "{ts:?}");
    // One cycle is the scenario length plus one trailing gap.
    let cycle = log[2].0 - log[0].0;
    assert!(cycle >= Duration::from_millis(15) && cycle <= Duration::from_millis(40), "{cycle:?}");
}

#[tokio::test]
async fn unreachable_target_fails_fast() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    match play(&scenario(), &format!("http://{addr}"), 1000.0, false).await {
        Err(PlayError::TargetUnreachable { summary, .. }) => assert_eq!(summary.frames_sent, 0),
        other => panic!("unexpected {other:?}"),
    }
}

#[tokio::test]
async fn bad_arguments() {
    let s = two_frames(10);
    for rate in [0.0, -1.0, f64::NAN, f64::INFINITY] {
        assert!(matches!(play(&s, "http://127.0.0.1:1", rate, false).await, Err(PlayError::InvalidRate(_))));
    }
    assert_eq!(play(&s, "::nope", 1.0, false).await, Err(PlayError::InvalidTarget("::nope".into())));
}

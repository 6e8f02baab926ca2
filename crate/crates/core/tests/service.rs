use std::time::Duration;

use base64::Engine;
use keelson::dynamics::VesselParams;
use keelson::radar::read_pgm;
use keelson::rl::{fixed_world, open_world, Action};
use keelson::service::{serve, Client, ClientError, Mode, Request, Session, SessionConfig};
use serde_json::{json, Value};

fn start(mode: Mode) -> (keelson::service::ServerHandle, Client) {
    let mut cfg = SessionConfig::new(VesselParams::example_ferry(), fixed_world());
    cfg.mode = mode;
    let server = serve("127.0.0.1:0", Session::new(cfg).unwrap()).unwrap();
    let client = Client::connect(server.local_addr()).unwrap();
    (server, client)
}

fn actions() -> Vec<Action> {
    (0..40).map(|k| Action::new(0.3 + 0.01 * (k % 7) as f64, 0.45 + 0.01 * (k % 11) as f64)).collect()
}

fn error_code(e: ClientError) -> String {
    match e {
        ClientError::Rpc(e) => serde_json::to_value(e.code).unwrap().as_str().unwrap().to_string(),
        other => panic!("expected rpc error, got {other}"),
    }
}

#[test]
fn banner_describes_spaces() {
    let (server, client) = start(Mode::Lockstep);
    let b = client.banner();
    assert_eq!(b.protocol, "keelson-rpc");
    assert_eq!(b.version, 1);
    assert_eq!(b.mode, Mode::Lockstep);
    assert_eq!(b.observation_len, 46);
    assert_eq!(b.action_low, [0.0, 0.4]);
    assert_eq!(b.action_high, [1.0, 0.6]);
    server.shutdown();
}

#[test]
fn wire_matches_in_process_bit_for_bit() {
    let (server, mut client) = start(Mode::Lockstep);
    let mut local = Session::new(SessionConfig::new(VesselParams::example_ferry(), fixed_world())).unwrap();
    let call = |s: &mut Session, m: &str, p: Value| s.handle(&Request { id: json!(0), method: m.into(), params: p }).unwrap();

    let a = client.call("env_reset", json!({"seed": 9})).unwrap();
    let b = call(&mut local, "env_reset", json!({"seed": 9}));
    assert_eq!(a["vector"], b["vector"]);
    for act in actions() {
        let p = json!({"thrust": act.thrust, "angle": act.angle});
        let a = client.call("env_step", p.clone()).unwrap();
        let b = call(&mut local, "env_step", p);
        let ra = a["reward"].as_f64().unwrap();
        let rb = b["reward"].as_f64().unwrap();
        assert_eq!(ra.to_bits(), rb.to_bits());
        let va: Vec<f64> = serde_json::from_value(a["vector"].clone()).unwrap();
        let vb: Vec<f64> = serde_json::from_value(b["vector"].clone()).unwrap();
        assert!(va.iter().zip(&vb).all(|(x, y)| x.to_bits() == y.to_bits()));
        if a["done"].as_bool().unwrap() {
            break;
        }
    }
    server.shutdown();
}

#[test]
fn two_sessions_same_rewards() {
    let run = || {
        let (server, mut c) = start(Mode::Lockstep);
        c.call("env_reset", json!({"seed": 1})).unwrap();
        let r: Vec<u64> = actions()
            .iter()
            .map(|a| c.call("env_step", json!({"thrust": a.thrust, "angle": a.angle})).unwrap()["reward"].as_f64().unwrap().to_bits())
            .collect();
        server.shutdown();
        r
    };
    assert_eq!(run(), run());
}

#[test]
fn errors_do_not_drop_session() {
    let (server, mut c) = start(Mode::Lockstep);
    assert_eq!(error_code(c.call("bogus", json!({})).unwrap_err()), "unknown-method");
    let resp = c.send_line("{not json").unwrap();
    assert!(!resp.ok);
    assert_eq!(serde_json::to_value(resp.error.unwrap().code).unwrap(), "parse-error");
    let resp = c.send_line(r#"{"id": 7, "params": {}}"#).unwrap();
    assert_eq!(resp.id, json!(7));
    assert_eq!(serde_json::to_value(resp.error.unwrap().code).unwrap(), "invalid-request");
    assert_eq!(error_code(c.call("sim_step", json!({"n": "many"})).unwrap_err()), "invalid-params");
    assert_eq!(error_code(c.call("env_step", json!({"thrust": 0.5, "angle": 0.5})).unwrap_err()), "episode-error");
    let state = c.call("get_state", json!({})).unwrap();
    assert_eq!(state["t"], json!(0.0));
    server.shutdown();
}

#[test]
fn controls_and_stepping() {
    let (server, mut c) = start(Mode::Lockstep);
    c.call("sim_step", json!({"n": 0})).unwrap();
    assert_eq!(c.call("get_state", json!({})).unwrap()["t"], json!(0.0));
    c.call("set_vessel_controls", json!({"thrust": 0.8, "angle": 0.5})).unwrap();
    let t = c.call("sim_step", json!({"n": 100})).unwrap()["t"].as_f64().unwrap();
    assert!((t - 2.0).abs() < 1e-9);
    let s = c.call("get_state", json!({})).unwrap();
    assert!(s["nu"]["u"].as_f64().unwrap() > 0.1);
    assert_eq!(s["command"][0]["thrust"], json!(0.8));
    server.shutdown();
}

#[test]
fn current_produces_lateral_drift() {
    let mut cfg = SessionConfig::new(VesselParams::example_ferry(), open_world());
    cfg.world.spawn = keelson::dynamics::Pose::new(0.0, 0.0, 0.0);
    let server = serve("127.0.0.1:0", Session::new(cfg).unwrap()).unwrap();
    let mut c = Client::connect(server.local_addr()).unwrap();
    c.call("set_current", json!({"speed": 0.5, "heading": 135f64.to_radians()})).unwrap();
    c.call("set_vessel_controls", json!({"thrust": 0.5, "angle": 0.5})).unwrap();
    let mut ys = Vec::new();
    for _ in 0..10 {
        c.call("sim_step", json!({"n": 50})).unwrap();
        ys.push(c.call("get_state", json!({})).unwrap()["pose"]["y"].as_f64().unwrap());
    }
    assert!(ys.last().unwrap().abs() > 1.0, "{ys:?}");
    server.shutdown();
}

#[test]
fn scan_radar_and_pcg() {
    let (server, mut c) = start(Mode::Lockstep);
    let scan = c.call("get_scan", json!({"n_beams": 90})).unwrap();
    assert_eq!(scan["ranges"].as_array().unwrap().len(), 90);

    let radar = c.call("get_radar", json!({"image_size": 128, "max_range": 60.0})).unwrap();
    let bytes = base64::engine::general_purpose::STANDARD.decode(radar["data"].as_str().unwrap()).unwrap();
    let frame = read_pgm(&bytes[..]).unwrap();
    assert_eq!(frame.size, 128);
    assert!(frame.count_set() > 0);
    assert_eq!(radar["metadata"]["size"], json!(128));

    let pcg = c.call("pcg_generate", json!({"pcg": {"n_segments": 5, "seed": 3}, "load": true})).unwrap();
    assert_eq!(pcg["n_sections"], json!(5));
    let state = c.call("get_state", json!({})).unwrap();
    assert_eq!(state["pose"]["x"], json!(0.0));
    assert_eq!(error_code(c.call("pcg_generate", json!({"pcg": {"n_segments": 0}})).unwrap_err()), "invalid-params");
    server.shutdown();
}

#[test]
fn episode_stats_accumulate() {
    let (server, mut c) = start(Mode::Lockstep);
    c.call("env_reset", json!({"seed": 0})).unwrap();
    loop {
        let r = c.call("env_step", json!({"thrust": 1.0, "angle": 0.6})).unwrap();
        if r["done"].as_bool().unwrap() {
            break;
        }
    }
    let stats = c.call("get_episode_stats", Value::Null).unwrap();
    assert_eq!(stats.as_array().unwrap().len(), 1);
    assert_eq!(stats[0]["success_rate_running"], json!(0.0));
    server.shutdown();
}

#[test]
fn realtime_mode_rejects_lockstep_methods() {
    let (server, mut c) = start(Mode::Realtime);
    assert_eq!(error_code(c.call("sim_step", json!({"n": 1})).unwrap_err()), "mode-error");
    assert_eq!(error_code(c.call("env_reset", json!({})).unwrap_err()), "mode-error");
    std::thread::sleep(Duration::from_millis(200));
    let t = c.call("get_state", json!({})).unwrap()["t"].as_f64().unwrap();
    assert!(t > 0.0);
    server.shutdown();
}

#[test]
fn bind_failure_is_reported() {
    let (server, _c) = start(Mode::Lockstep);
    let cfg = SessionConfig::new(VesselParams::example_ferry(), open_world());
    assert!(serve(server.local_addr(), Session::new(cfg).unwrap()).is_err());
    server.shutdown();
}

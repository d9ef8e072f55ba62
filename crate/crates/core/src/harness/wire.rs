//! Line-delimited JSON protocol serving environments to external clients.
//!
//! Each request is one JSON object on one line with an `op` field:
//!
//! - `{"op":"make","config":{...},"seed":0}` builds an environment from
//!   arguments under their documented names (both fields optional when the
//!   server was started with a config);
//! - `{"op":"reset"}` replies with `observation`, `achieved_goal`,
//!   `desired_goal` and, when enabled, `observation_img` / `goal_img`;
//! - `{"op":"step","action":[...]}` replies with `obs` (the same payload),
//!   `reward`, `done` and `info`;
//! - `{"op":"compute_reward","achieved_goal":[...],"desired_goal":[...]}`;
//! - `{"op":"close"}` ends the session.
//!
//! Successful replies carry `"ok":true`. Failures reply
//! `{"ok":false,"error":{"kind":...,"message":...}}` and keep the session
//! open. Floats are written with 17 significant digits so they round-trip
//! bit for bit; images carry base64 RGB bytes.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};

use base64::Engine;
use log::{debug, info, warn};
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;
use serde_json::Value;

use crate::env::{Env, EnvConfig, Observation};
use crate::error::{Error, Result};
use crate::render::Image;

/// Float written as `{:.16e}`; non-finite values become `null`.
pub struct Exact(pub f64);

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        RawValue::from_string(format!("{:.16e}", self.0))
            .map_err(serde::ser::Error::custom)?
            .serialize(s)
    }
}

pub struct ExactSlice<'a>(pub &'a [f64]);

impl Serialize for ExactSlice<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.len()))?;
        for &v in self.0 {
            seq.serialize_element(&Exact(v))?;
        }
        seq.end()
    }
}

#[derive(Serialize)]
struct WireImage<'a> {
    width: u32,
    height: u32,
    rgb: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    depth: Option<ExactSlice<'a>>,
}

impl<'a> WireImage<'a> {
    fn new(img: &'a Image) -> Self {
        WireImage {
            width: img.width,
            height: img.height,
            rgb: base64::engine::general_purpose::STANDARD.encode(&img.rgb),
            depth: img.depth.as_deref().map(ExactSlice),
        }
    }
}

#[derive(Serialize)]
struct WireObs<'a> {
    observation: ExactSlice<'a>,
    achieved_goal: ExactSlice<'a>,
    desired_goal: ExactSlice<'a>,
    #[serde(skip_serializing_if = "Option::is_none")]
    observation_img: Option<WireImage<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    goal_img: Option<WireImage<'a>>,
}

impl<'a> WireObs<'a> {
    fn new(o: &'a Observation) -> Self {
        WireObs {
            observation: ExactSlice(&o.observation),
            achieved_goal: ExactSlice(&o.achieved_goal),
            desired_goal: ExactSlice(&o.desired_goal),
            observation_img: o.observation_img.as_ref().map(WireImage::new),
            goal_img: o.goal_img.as_ref().map(WireImage::new),
        }
    }
}

#[derive(Serialize)]
struct Success<T> {
    ok: bool,
    #[serde(flatten)]
    body: T,
}

#[derive(Serialize)]
struct Made {
    task: &'static str,
    num_block: usize,
    action_dim: usize,
    obs_dim: usize,
    goal_dim: usize,
    horizon: usize,
}

#[derive(Serialize)]
struct Stepped<'a> {
    obs: WireObs<'a>,
    reward: Exact,
    done: bool,
    info: crate::env::Info,
}

#[derive(Serialize)]
struct Reward {
    reward: Exact,
}

#[derive(Serialize)]
struct Empty {}

/// Failure reply contents.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WireError {
    pub kind: String,
    pub message: String,
}

impl WireError {
    fn request(message: impl Into<String>) -> Self {
        WireError {
            kind: "request".into(),
            message: message.into(),
        }
    }
}

impl From<Error> for WireError {
    fn from(e: Error) -> Self {
        WireError {
            kind: e.kind().into(),
            message: e.to_string(),
        }
    }
}

fn error_reply(e: &WireError) -> String {
    #[derive(Serialize)]
    struct Failed<'a> {
        ok: bool,
        error: &'a WireError,
    }
    serde_json::to_string(&Failed {
        ok: false,
        error: e,
    })
    .expect("error replies serialise")
}

fn ok_reply<T: Serialize>(body: T) -> std::result::Result<String, WireError> {
    serde_json::to_string(&Success { ok: true, body }).map_err(|e| WireError {
        kind: "json".into(),
        message: e.to_string(),
    })
}

fn floats(req: &Value, key: &str) -> std::result::Result<Vec<f64>, WireError> {
    let v = req
        .get(key)
        .ok_or_else(|| WireError::request(format!("missing field '{key}'")))?;
    serde_json::from_value(v.clone())
        .map_err(|_| WireError::request(format!("field '{key}' must be an array of numbers")))
}

/// One client session: at most one environment at a time.
#[derive(Debug, Clone)]
pub struct Session {
    default: Option<EnvConfig>,
    env: Option<Env>,
    closed: bool,
}

impl Session {
    /// Session with an environment already built from `default` (seed 0), if
    /// given. `make` without a config rebuilds from it.
    pub fn new(default: Option<EnvConfig>) -> Result<Session> {
        let env = default.clone().map(|c| Env::with_seed(c, 0)).transpose()?;
        Ok(Session {
            default,
            env,
            closed: false,
        })
    }

    pub fn env(&self) -> Option<&Env> {
        self.env.as_ref()
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Reply to one request line.
    pub fn handle(&mut self, line: &str) -> String {
        match self.dispatch(line) {
            Ok(r) => r,
            Err(e) => error_reply(&e),
        }
    }

    fn env_mut(&mut self) -> std::result::Result<&mut Env, WireError> {
        self.env.as_mut().ok_or_else(|| WireError {
            kind: "no_env".into(),
            message: "no environment; send make first".into(),
        })
    }

    fn dispatch(&mut self, line: &str) -> std::result::Result<String, WireError> {
        let req: Value = serde_json::from_str(line)
            .map_err(|e| WireError::request(format!("malformed JSON: {e}")))?;
        let op = req
            .get("op")
            .and_then(Value::as_str)
            .ok_or_else(|| WireError::request("missing string field 'op'"))?;
        match op {
            "make" => {
                let cfg = match req.get("config") {
                    Some(c) => EnvConfig::from_json(c)?,
                    None => self
                        .default
                        .clone()
                        .ok_or_else(|| WireError::request("make needs a 'config' object"))?,
                };
                let seed = match req.get("seed") {
                    None => 0,
                    Some(s) => s.as_u64().ok_or_else(|| {
                        WireError::request("'seed' must be a non-negative integer")
                    })?,
                };
                let env = Env::with_seed(cfg, seed)?;
                let made = Made {
                    task: env.task().name(),
                    num_block: env.num_block(),
                    action_dim: env.action_dim(),
                    obs_dim: env.obs_dim(),
                    goal_dim: env.goal_dim(),
                    horizon: env.horizon(),
                };
                self.env = Some(env);
                ok_reply(made)
            }
            "reset" => {
                let o = self.env_mut()?.reset()?;
                ok_reply(WireObs::new(&o))
            }
            "step" => {
                let a = floats(&req, "action")?;
                let t = self.env_mut()?.step(&a)?;
                ok_reply(Stepped {
                    obs: WireObs::new(&t.obs),
                    reward: Exact(t.reward),
                    done: t.done,
                    info: t.info,
                })
            }
            "compute_reward" => {
                let a = floats(&req, "achieved_goal")?;
                let d = floats(&req, "desired_goal")?;
                let r = self.env_mut()?.compute_reward(&a, &d)?;
                ok_reply(Reward { reward: Exact(r) })
            }
            "close" => {
                self.env = None;
                self.closed = true;
                ok_reply(Empty {})
            }
            other => Err(WireError::request(format!("unknown op '{other}'"))),
        }
    }
}

/// Serves one session over a line stream until `close` or end of input.
pub fn serve_stream<R: BufRead, W: Write>(
    mut session: Session,
    input: R,
    mut output: W,
) -> Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        debug!("request {line}");
        let reply = session.handle(&line);
        writeln!(output, "{reply}")?;
        output.flush()?;
        if session.is_closed() {
            break;
        }
    }
    Ok(())
}

fn serve_connection(stream: TcpStream, default: Option<EnvConfig>) -> Result<()> {
    let session = Session::new(default)?;
    let reader = BufReader::new(stream.try_clone()?);
    serve_stream(session, reader, stream)
}

/// Accepts connections forever, one independent session per connection.
pub fn serve_tcp(listener: TcpListener, default: Option<EnvConfig>) -> Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        let peer = stream.peer_addr().ok();
        info!("session opened from {peer:?}");
        let default = default.clone();
        std::thread::spawn(move || match serve_connection(stream, default) {
            Ok(()) => info!("session from {peer:?} ended"),
            Err(e) => warn!("session from {peer:?} failed: {e}"),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Task;

    fn reply(s: &mut Session, line: &str) -> Value {
        serde_json::from_str(&s.handle(line)).unwrap()
    }

    #[test]
    fn exact_floats_round_trip() {
        for v in [0.1, -0.0, 1.0 / 3.0, 6.02e23, 5e-324, f64::MAX, -1.0] {
            let s = serde_json::to_string(&Exact(v)).unwrap();
            let back: f64 = serde_json::from_str(&s).unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(serde_json::to_string(&Exact(f64::NAN)).unwrap(), "null");
    }

    #[test]
    fn reset_and_step_on_reach() {
        let mut s = Session::new(Some(EnvConfig::new(Task::Reach))).unwrap();
        let r = reply(&mut s, r#"{"op":"reset"}"#);
        assert_eq!(r["ok"], true);
        for k in ["observation", "achieved_goal", "desired_goal"] {
            assert!(r[k].is_array(), "{k}");
        }
        let r = reply(&mut s, r#"{"op":"step","action":[0,0,0]}"#);
        let reward = r["reward"].as_f64().unwrap();
        assert!(reward == 0.0 || reward == -1.0);
        assert_eq!(r["done"], false);
        assert!(r["obs"]["observation"].is_array());
    }

    #[test]
    fn errors_keep_session_alive() {
        let mut s = Session::new(None).unwrap();
        let r = reply(&mut s, r#"{"op":"reset"}"#);
        assert_eq!(r["error"]["kind"], "no_env");
        let r = reply(&mut s, r#"{"op":"make","config":{"task":"fly"}}"#);
        assert_eq!(r["error"]["kind"], "unknown_task");
        let r = reply(
            &mut s,
            r#"{"op":"make","config":{"task":"reach"},"seed":3}"#,
        );
        assert_eq!(r["action_dim"], 3);
        reply(&mut s, r#"{"op":"reset"}"#);
        let r = reply(&mut s, r#"{"op":"step","action":[0,0]}"#);
        assert_eq!(r["ok"], false);
        assert_eq!(r["error"]["kind"], "dimension");
        let r = reply(&mut s, "not json");
        assert_eq!(r["error"]["kind"], "request");
        let r = reply(&mut s, r#"{"op":"jump"}"#);
        assert_eq!(r["error"]["kind"], "request");
        let r = reply(&mut s, r#"{"op":"step","action":[0,0,0]}"#);
        assert_eq!(r["ok"], true);
        let r = reply(
            &mut s,
            r#"{"op":"compute_reward","achieved_goal":[0,0,0],"desired_goal":[0,0,1]}"#,
        );
        assert_eq!(r["reward"], -1.0);
        assert_eq!(reply(&mut s, r#"{"op":"close"}"#)["ok"], true);
        assert!(s.is_closed());
    }

    #[test]
    fn images_are_base64() {
        let mut cfg = EnvConfig::new(Task::Push);
        cfg.image_observation = true;
        cfg.depth_image = true;
        let mut s = Session::new(Some(cfg)).unwrap();
        let r = reply(&mut s, r#"{"op":"reset"}"#);
        let img = &r["observation_img"];
        let (w, h) = (
            img["width"].as_u64().unwrap(),
            img["height"].as_u64().unwrap(),
        );
        let rgb = base64::engine::general_purpose::STANDARD
            .decode(img["rgb"].as_str().unwrap())
            .unwrap();
        assert_eq!(rgb.len() as u64, 3 * w * h);
        assert_eq!(img["depth"].as_array().unwrap().len() as u64, w * h);
    }
}

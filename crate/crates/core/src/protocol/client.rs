use std::time::Duration;

use base64::Engine;
use reqwest::blocking::{Client, Response};
use serde::Serialize;

use super::{ErrorResponse, Observation, Policy, PolicyError, ResetRequest, StepRequest, StepResponse};
use crate::render::Frame;
use crate::sim::Action;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// Client side of the wire protocol. Each request gets one retry on a
/// transport failure.
pub struct RemotePolicy {
    base: String,
    session: String,
    client: Client,
}

impl RemotePolicy {
    pub fn new(url: &str, session: impl Into<String>, timeout: Duration) -> Result<Self, PolicyError> {
        let client = Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| PolicyError::Transport(e.to_string()))?;
        Ok(Self {
            base: url.trim_end_matches('/').to_string(),
            session: session.into(),
            client,
        })
    }

    pub fn health(&self) -> Result<(), PolicyError> {
        let url = format!("{}/health", self.base);
        let resp = self.with_retry(|| self.client.get(&url).send())?;
        let body: serde_json::Value = read_json(resp)?;
        if body["status"] == "ok" {
            Ok(())
        } else {
            Err(PolicyError::Failed(format!("unhealthy server: {body}")))
        }
    }

    fn with_retry(&self, send: impl Fn() -> reqwest::Result<Response>) -> Result<Response, PolicyError> {
        match send() {
            Ok(r) => Ok(r),
            Err(first) => {
                log::warn!("request to {} failed ({first}), retrying once", self.base);
                send().map_err(|e| PolicyError::Transport(e.to_string()))
            }
        }
    }

    fn post<B: Serialize>(&self, path: &str, body: &B) -> Result<Response, PolicyError> {
        let url = format!("{}{path}", self.base);
        self.with_retry(|| self.client.post(&url).json(body).send())
    }
}

fn read_json<T: serde::de::DeserializeOwned>(resp: Response) -> Result<T, PolicyError> {
    let status = resp.status();
    let bytes = resp.bytes().map_err(|e| PolicyError::Transport(e.to_string()))?;
    if !status.is_success() {
        let message = serde_json::from_slice::<ErrorResponse>(&bytes)
            .map(|e| e.error)
            .unwrap_or_else(|_| String::from_utf8_lossy(&bytes).into_owned());
        return Err(PolicyError::Server {
            status: status.as_u16(),
            message,
        });
    }
    serde_json::from_slice(&bytes).map_err(|e| PolicyError::Failed(format!("malformed response: {e}")))
}

fn encode(frame: &Frame) -> Result<String, PolicyError> {
    let png = frame.to_png().map_err(|e| PolicyError::Failed(e.to_string()))?;
    Ok(base64::engine::general_purpose::STANDARD.encode(png))
}

impl Policy for RemotePolicy {
    fn reset(&mut self, goal: &Frame, episode_id: u64) -> Result<(), PolicyError> {
        let req = ResetRequest {
            session: self.session.clone(),
            goal: encode(goal)?,
            episode_id: episode_id.to_string(),
        };
        let _: serde_json::Value = read_json(self.post("/reset", &req)?)?;
        Ok(())
    }

    fn act(&mut self, obs: &Observation<'_>) -> Result<Action, PolicyError> {
        let rgb = obs.rgb.ok_or_else(|| PolicyError::Failed("remote policy needs an rgb observation".into()))?;
        let req = StepRequest {
            session: self.session.clone(),
            rgb: encode(rgb)?,
            collided: obs.collided,
        };
        let resp: StepResponse = read_json(self.post("/step", &req)?)?;
        resp.action.parse().map_err(|_| PolicyError::UnknownAction(resp.action))
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::protocol::{PolicyServer, RandomPolicy};

    fn random_server() -> PolicyServer {
        PolicyServer::start(Arc::new(|| Box::new(RandomPolicy::new(3)) as Box<dyn Policy>), "127.0.0.1:0").unwrap()
    }

    fn raw_post(url: &str, body: &str) -> (u16, serde_json::Value) {
        let resp = Client::new()
            .post(url)
            .header("content-type", "application/json")
            .body(body.to_string())
            .send()
            .unwrap();
        let status = resp.status().as_u16();
        (status, resp.json().unwrap())
    }

    #[test]
    fn health_and_contract_errors() {
        let server = random_server();
        let remote = RemotePolicy::new(&server.url(), "s", DEFAULT_TIMEOUT).unwrap();
        remote.health().unwrap();

        let frame = encode(&Frame::filled(4, 3, [1, 2, 3])).unwrap();
        let step = serde_json::json!({"session": "nobody", "rgb": frame, "collided": false}).to_string();
        let (status, body) = raw_post(&format!("{}/step", server.url()), &step);
        assert_eq!(status, 409);
        assert_eq!(body["error"], "session not initialized");

        let (status, body) = raw_post(&format!("{}/reset", server.url()), "{not json");
        assert_eq!(status, 400);
        assert!(body["error"].as_str().unwrap().contains("malformed"));

        let reset = serde_json::json!({"session": "s", "goal": "%%%", "episode_id": "1"}).to_string();
        assert_eq!(raw_post(&format!("{}/reset", server.url()), &reset).0, 400);
        server.shutdown().unwrap();
    }

    #[test]
    fn remote_random_matches_local() {
        let server = random_server();
        let mut remote = RemotePolicy::new(&server.url(), "a", DEFAULT_TIMEOUT).unwrap();
        let mut local = RandomPolicy::new(3);
        let goal = Frame::filled(4, 3, [9, 9, 9]);
        remote.reset(&goal, 5).unwrap();
        local.reset(&goal, 5).unwrap();
        let obs = Observation {
            rgb: Some(&goal),
            collided: false,
        };
        for _ in 0..20 {
            assert_eq!(remote.act(&obs).unwrap(), local.act(&obs).unwrap());
        }
    }

    #[test]
    fn port_in_use_is_a_startup_error() {
        let server = random_server();
        assert!(PolicyServer::start(Arc::new(|| Box::new(RandomPolicy::new(0)) as Box<dyn Policy>), &server.local_addr().to_string()).is_err());
    }

    #[test]
    fn unreachable_server_is_a_transport_error() {
        let addr = {
            let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
            l.local_addr().unwrap()
        };
        let remote = RemotePolicy::new(&format!("http://{addr}"), "x", Duration::from_millis(500)).unwrap();
        assert!(matches!(remote.health(), Err(PolicyError::Transport(_))));
    }

    /// Answers every request on a fresh port with the same body.
    fn canned_server(body: &'static str) -> String {
        use std::io::{BufRead, BufReader, Read, Write};
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { return };
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0;
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap_or(0);
                    }
                }
                let mut sink = vec![0; len];
                let _ = reader.read_exact(&mut sink);
                let _ = write!(
                    stream,
                    "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                );
            }
        });
        format!("http://{addr}")
    }

    #[test]
    fn unknown_action_is_named() {
        let url = canned_server(r#"{"action": "JUMP"}"#);
        let mut remote = RemotePolicy::new(&url, "x", Duration::from_secs(5)).unwrap();
        let frame = Frame::filled(2, 2, [0; 3]);
        let obs = Observation {
            rgb: Some(&frame),
            collided: false,
        };
        match remote.act(&obs) {
            Err(PolicyError::UnknownAction(a)) => assert_eq!(a, "JUMP"),
            other => panic!("expected UnknownAction, got {other:?}"),
        }
    }
}

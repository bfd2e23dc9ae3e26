#![allow(dead_code)]

use std::sync::Arc;
use std::time::Duration;

use futures::StreamExt;
use gesturechat_service::http::router;
use gesturechat_service::manager::SessionManager;
use serde_json::Value;
use tokio_tungstenite::tungstenite::Message;

pub type Stream = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

pub struct Server {
    pub base: String,
    pub manager: Arc<SessionManager>,
    pub client: reqwest::Client,
}

pub async fn start(manager: Arc<SessionManager>, static_dir: Option<std::path::PathBuf>) -> Server {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let app = router(Arc::clone(&manager), static_dir);
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    Server { base: format!("http://{addr}"), manager, client: reqwest::Client::new() }
}

impl Server {
    pub async fn create(&self) -> String {
        let r = self.client.post(format!("{}/session", self.base)).send().await.unwrap();
        assert_eq!(r.status(), 201);
        r.json::<Value>().await.unwrap()["id"].as_str().unwrap().to_string()
    }

    pub async fn post(&self, id: &str, text: &str) -> reqwest::Response {
        self.client
            .post(format!("{}/session/{id}/message", self.base))
            .json(&serde_json::json!({ "text": text }))
            .send()
            .await
            .unwrap()
    }

    pub async fn transcript(&self, id: &str) -> reqwest::Response {
        self.client.get(format!("{}/session/{id}/transcript", self.base)).send().await.unwrap()
    }

    pub async fn stream(&self, id: &str) -> Stream {
        let url = format!("{}/session/{id}/stream", self.base.replacen("http", "ws", 1));
        tokio_tungstenite::connect_async(url).await.unwrap().0
    }
}

/// Read events until `turns` turns have finished (`turn_done` or `error`).
pub async fn collect(stream: &mut Stream, turns: usize) -> Vec<Value> {
    let mut events = Vec::new();
    let mut done = 0;
    while done < turns {
        let msg = tokio::time::timeout(Duration::from_secs(10), stream.next())
            .await
            .expect("event within 10 s")
            .expect("stream open")
            .unwrap();
        let Message::Text(text) = msg else { continue };
        assert!(!text.contains('\n'), "events are single-line");
        let event: Value = serde_json::from_str(&text).unwrap();
        if matches!(event["type"].as_str(), Some("turn_done" | "error")) {
            done += 1;
        }
        events.push(event);
    }
    events
}

/// Check one successful turn per four events, in protocol order, with
/// strictly increasing seq and synchronized timelines.
pub fn check_turns(events: &[Value]) -> Result<(), String> {
    const ORDER: [&str; 4] = ["ack", "bot_text", "playback_plan", "turn_done"];
    if events.len() % 4 != 0 {
        return Err(format!("{} events is not a whole number of turns", events.len()));
    }
    let mut last_seq = 0;
    for (i, e) in events.iter().enumerate() {
        let kind = e["type"].as_str().unwrap_or("?");
        if kind != ORDER[i % 4] {
            return Err(format!("event {i} is {kind}, expected {}", ORDER[i % 4]));
        }
        let seq = e["seq"].as_u64().ok_or("missing seq")?;
        if seq <= last_seq {
            return Err(format!("seq {seq} after {last_seq}"));
        }
        last_seq = seq;
        if e["turn"] != events[i - i % 4]["turn"] {
            return Err(format!("event {i} belongs to another turn"));
        }
        if kind == "playback_plan" {
            let speech = e["speechDuration"].as_f64().ok_or("missing speechDuration")?;
            let timeline = e["jointTimeline"]["duration"].as_f64().ok_or("missing timeline duration")?;
            if (speech - timeline).abs() >= 1e-9 {
                return Err(format!("timeline {timeline} vs speech {speech}"));
            }
        }
    }
    Ok(())
}

#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;

use convqa_core::campaign::DataSet;
use convqa_core::config::CampaignConfig;
use convqa_core::gateway::{SourceSpec, StubKind, StubSpec};

pub type Handler = dyn Fn(&str, &serde_json::Value) -> (u16, String) + Send + Sync;

/// Minimal HTTP/1.1 server answering POSTs through `handler`. Requests are
/// recorded as (path, body).
pub struct MockServer {
    pub base_url: String,
    pub requests: Arc<Mutex<Vec<(String, serde_json::Value)>>>,
}

pub fn serve(handler: impl Fn(&str, &serde_json::Value) -> (u16, String) + Send + Sync + 'static) -> MockServer {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let base_url = format!("http://{}", listener.local_addr().unwrap());
    let requests = Arc::new(Mutex::new(Vec::new()));
    let log = requests.clone();
    let handler: Arc<Handler> = Arc::new(handler);
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let handler = handler.clone();
            let log = log.clone();
            thread::spawn(move || {
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 {
                    return;
                }
                let path = line.split_whitespace().nth(1).unwrap_or("/").to_string();
                let mut len = 0usize;
                loop {
                    let mut h = String::new();
                    reader.read_line(&mut h).unwrap();
                    let h = h.trim_end();
                    if h.is_empty() {
                        break;
                    }
                    if let Some((k, v)) = h.split_once(':') {
                        if k.eq_ignore_ascii_case("content-length") {
                            len = v.trim().parse().unwrap();
                        }
                    }
                }
                let mut body = vec![0u8; len];
                reader.read_exact(&mut body).unwrap();
                let json: serde_json::Value = serde_json::from_slice(&body).unwrap_or(serde_json::Value::Null);
                log.lock().unwrap().push((path.clone(), json.clone()));
                let (status, resp) = handler(&path, &json);
                let _ = write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{resp}",
                    resp.len()
                );
            });
        }
    });
    MockServer { base_url, requests }
}

pub fn stub_config(kind: StubKind, n_dialogs: usize, prompts: usize) -> CampaignConfig {
    let mut cfg = CampaignConfig::for_stub_tests();
    cfg.n_dialogs = n_dialogs;
    cfg.prompts_per_dialog = prompts;
    cfg.model_under_test = SourceSpec::Stub(StubSpec::new(kind, 3));
    cfg
}

pub fn data(cfg: &CampaignConfig) -> DataSet {
    DataSet::load(cfg).unwrap()
}

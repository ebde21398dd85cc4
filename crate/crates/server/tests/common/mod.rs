#![allow(dead_code)]

use std::net::SocketAddr;
use std::time::Duration;

use futures::StreamExt;
use hypocanvas_core::sample;
use hypocanvas_server::{serve, ServerConfig};
use reqwest::{Client, StatusCode};
use serde_json::{json, Value};
use tokio::sync::oneshot;

/// A server running inside the test's runtime on an ephemeral port.
pub struct TestServer {
    pub base: String,
    pub client: Client,
    stop: Option<oneshot::Sender<()>>,
    _dir: Option<tempfile::TempDir>,
}

impl TestServer {
    pub async fn start() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let mut s = Self::with_config(ServerConfig::new(dir.path())).await;
        s._dir = Some(dir);
        s
    }

    pub async fn with_config(mut config: ServerConfig) -> Self {
        config.listen = SocketAddr::from(([127, 0, 0, 1], 0));
        let (stop, stopped) = oneshot::channel::<()>();
        let (bound_tx, bound_rx) = oneshot::channel();
        tokio::spawn(async move {
            serve(config, move |a| bound_tx.send(a).unwrap(), async {
                let _ = stopped.await;
            })
            .await
            .unwrap();
        });
        let addr = bound_rx.await.unwrap();
        Self { base: format!("http://{addr}"), client: Client::new(), stop: Some(stop), _dir: None }
    }

    /// A handle on a server started elsewhere; nothing is stopped on drop.
    pub fn attach(base: &str) -> Self {
        Self { base: base.to_string(), client: Client::new(), stop: None, _dir: None }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    pub async fn get(&self, path: &str) -> (StatusCode, Value) {
        decode(self.client.get(self.url(path)).send().await.unwrap()).await
    }

    pub async fn post(&self, path: &str, body: Value) -> (StatusCode, Value) {
        decode(self.client.post(self.url(path)).json(&body).send().await.unwrap()).await
    }

    pub async fn put(&self, path: &str, body: Value) -> (StatusCode, Value) {
        decode(self.client.put(self.url(path)).json(&body).send().await.unwrap()).await
    }

    pub async fn delete(&self, path: &str) -> (StatusCode, Value) {
        decode(self.client.delete(self.url(path)).send().await.unwrap()).await
    }

    pub async fn upload(&self, name: &str, csv: &str) -> (StatusCode, Value) {
        let form = reqwest::multipart::Form::new()
            .text("name", name.to_string())
            .part("file", reqwest::multipart::Part::bytes(csv.as_bytes().to_vec()).file_name(format!("{name}.csv")));
        decode(self.client.post(self.url("/datasets")).multipart(form).send().await.unwrap()).await
    }

    /// Uploads the bundled sample and opens a document on it; returns
    /// (dataset id, document id).
    pub async fn sample_document(&self) -> (String, String) {
        let (status, ds) = self.upload("countries", sample::COUNTRIES_CSV).await;
        assert_eq!(status, StatusCode::CREATED, "{ds}");
        let ds_id = ds["dataset_id"].as_str().unwrap().to_string();
        let (status, doc) = self.post("/documents", json!({ "dataset_id": ds_id })).await;
        assert_eq!(status, StatusCode::CREATED, "{doc}");
        (ds_id, doc["id"].as_str().unwrap().to_string())
    }

    pub async fn doc_version(&self, doc: &str) -> u64 {
        self.get(&format!("/documents/{doc}")).await.1["doc_version"].as_u64().unwrap()
    }

    pub async fn note(&self, doc: &str, text: &str) -> u64 {
        let v = self.doc_version(doc).await;
        let (status, body) = self
            .post(
                &format!("/documents/{doc}/nodes"),
                json!({ "doc_version": v, "kind": "note", "text": text, "position": { "x": 0.0, "y": 0.0 } }),
            )
            .await;
        assert_eq!(status, StatusCode::CREATED, "{body}");
        body["node"]["id"].as_u64().unwrap()
    }

    /// Polls a job until it is done or failed.
    pub async fn wait(&self, job: &str) -> Value {
        for _ in 0..1000 {
            let (status, body) = self.get(&format!("/jobs/{job}")).await;
            assert_eq!(status, StatusCode::OK, "{body}");
            if body["state"] == "done" || body["state"] == "failed" {
                return body;
            }
            tokio::time::sleep(Duration::from_millis(5)).await;
        }
        panic!("job {job} did not finish");
    }

    /// Reads the event stream to its end; returns (event name, data) pairs.
    pub async fn events(&self, job: &str) -> Vec<(String, Value)> {
        read_events(&self.client, &self.url(&format!("/jobs/{job}/events"))).await
    }
}

impl Drop for TestServer {
    fn drop(&mut self) {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
    }
}

pub async fn decode(resp: reqwest::Response) -> (StatusCode, Value) {
    let status = resp.status();
    let text = resp.text().await.unwrap();
    let body = serde_json::from_str(&text).unwrap_or(Value::String(text));
    (status, body)
}

pub async fn read_events(client: &Client, url: &str) -> Vec<(String, Value)> {
    let resp = client.get(url).send().await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    let mut stream = resp.bytes_stream();
    let mut buf = String::new();
    let mut out = Vec::new();
    while let Some(chunk) = stream.next().await {
        buf.push_str(&String::from_utf8_lossy(&chunk.unwrap()));
        while let Some(end) = buf.find("\n\n") {
            let block: String = buf.drain(..end + 2).collect();
            let (mut name, mut data) = (String::new(), String::new());
            for line in block.lines() {
                if let Some(v) = line.strip_prefix("event:") {
                    name = v.trim().to_string();
                } else if let Some(v) = line.strip_prefix("data:") {
                    data.push_str(v.trim());
                }
            }
            if !name.is_empty() {
                out.push((name, serde_json::from_str(&data).unwrap()));
            }
        }
    }
    out
}

pub fn states(events: &[(String, Value)]) -> Vec<String> {
    events.iter().map(|(name, _)| name.clone()).collect()
}

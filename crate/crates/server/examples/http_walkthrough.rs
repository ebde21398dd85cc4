//! Starts the service in-process on an ephemeral port and drives it over
//! HTTP: upload, suggestions, a note, generation with its event stream, a
//! revision, lineage and a conflicting move.

use futures::StreamExt;
use hypocanvas_core::sample;
use hypocanvas_server::{serve, ServerConfig};
use reqwest::Client;
use serde_json::{json, Value};

async fn send(req: reqwest::RequestBuilder) -> Value {
    let resp = req.send().await.expect("request");
    let status = resp.status();
    let body: Value = resp.json().await.unwrap_or(Value::Null);
    println!("  <- {status}");
    body
}

/// Prints the job's event stream until it ends; returns the last data.
async fn follow(client: &Client, base: &str, job: &str) -> Value {
    let resp = client.get(format!("{base}/jobs/{job}/events")).send().await.expect("events");
    let mut stream = resp.bytes_stream();
    let (mut buf, mut last) = (String::new(), Value::Null);
    while let Some(chunk) = stream.next().await {
        buf.push_str(&String::from_utf8_lossy(&chunk.expect("chunk")));
        while let Some(end) = buf.find("\n\n") {
            let block: String = buf.drain(..end + 2).collect();
            if let Some(data) = block.lines().find_map(|l| l.strip_prefix("data:")) {
                last = serde_json::from_str(data.trim()).expect("event data");
                println!("  event {}", last["state"]);
            }
        }
    }
    last
}

#[tokio::main]
async fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let mut config = ServerConfig::new(dir.path());
    config.listen = ([127, 0, 0, 1], 0).into();
    let (bound_tx, bound_rx) = tokio::sync::oneshot::channel();
    let (stop_tx, stop_rx) = tokio::sync::oneshot::channel::<()>();
    let server = tokio::spawn(serve(config, move |a| bound_tx.send(a).unwrap(), async {
        let _ = stop_rx.await;
    }));
    let base = format!("http://{}", bound_rx.await.expect("bound"));
    let client = Client::new();
    println!("serving at {base}");

    println!("POST /datasets");
    let form = reqwest::multipart::Form::new()
        .part("file", reqwest::multipart::Part::bytes(sample::COUNTRIES_CSV.as_bytes()).file_name("countries.csv"));
    let ds = send(client.post(format!("{base}/datasets")).multipart(form)).await;
    let ds_id = ds["dataset_id"].as_str().unwrap().to_string();

    println!("GET /datasets/{{id}}/suggestions?k=3");
    let s = send(client.get(format!("{base}/datasets/{ds_id}/suggestions?k=3"))).await;
    println!("  {}", s["suggestions"]);

    println!("POST /documents");
    let doc = send(client.post(format!("{base}/documents")).json(&json!({ "dataset_id": ds_id }))).await;
    let doc_id = doc["id"].as_str().unwrap().to_string();

    println!("POST /documents/{{id}}/nodes (note)");
    let note = send(client.post(format!("{base}/documents/{doc_id}/nodes")).json(&json!({
        "doc_version": 0, "kind": "note", "text": sample::ANALYSIS_QUESTION, "position": { "x": 0, "y": 0 }
    })))
    .await;
    let note_id = note["node"]["id"].clone();

    println!("POST /generate");
    let job = send(client.post(format!("{base}/generate")).json(&json!({
        "dataset_id": ds_id, "document_id": doc_id, "source_node": note_id, "goal_text": sample::ANALYSIS_QUESTION
    })))
    .await;
    let done = follow(&client, &base, job["job_id"].as_str().unwrap()).await;
    let chart = done["node_id"].clone();

    println!("POST /documents/{{id}}/nodes/{chart}/revise");
    let job = send(client.post(format!("{base}/documents/{doc_id}/nodes/{chart}/revise")).json(&json!({ "instruction": "flip it" }))).await;
    let done = follow(&client, &base, job["job_id"].as_str().unwrap()).await;
    let leaf = done["node_id"].clone();

    println!("GET lineage of {leaf}");
    let lineage = send(client.get(format!("{base}/documents/{doc_id}/nodes/{leaf}/lineage"))).await;
    println!("  {lineage}");
    let spec = send(client.get(format!("{base}/documents/{doc_id}/nodes/{leaf}/spec"))).await;
    println!("  spec {spec}");

    let version = send(client.get(format!("{base}/documents/{doc_id}"))).await["doc_version"].clone();
    for x in [100, 200] {
        println!("PUT move node {note_id} with doc_version {version}");
        let body = send(
            client
                .put(format!("{base}/documents/{doc_id}/nodes/{note_id}"))
                .json(&json!({ "doc_version": version, "position": { "x": x, "y": 0 } })),
        )
        .await;
        if body["code"].is_string() {
            println!("  {body}");
        }
    }

    let _ = stop_tx.send(());
    server.await.expect("server task").expect("server");
}

use std::fs;
use std::path::{Path, PathBuf};

use espim_cli::collector::{serve_on, CollectorConfig, TOKEN_HEADER};
use espim_core::session::parse_session;
use reqwest::StatusCode;
use tokio::sync::oneshot;

fn fixture(name: &str) -> Vec<u8> {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures", name].iter().collect();
    fs::read(&path).unwrap()
}

fn with_id(id: &str) -> Vec<u8> {
    let mut v: serde_json::Value = serde_json::from_slice(&fixture("minimal_session.json")).unwrap();
    v["session_id"] = id.into();
    serde_json::to_vec_pretty(&v).unwrap()
}

struct Server {
    url: String,
    stop: Option<oneshot::Sender<()>>,
    task: tokio::task::JoinHandle<std::io::Result<()>>,
}

impl Server {
    async fn start(config: CollectorConfig) -> Self {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let (tx, rx) = oneshot::channel();
        let task = tokio::spawn(serve_on(listener, config, async {
            let _ = rx.await;
        }));
        Server { url, stop: Some(tx), task }
    }

    async fn stop(mut self) {
        self.stop.take().unwrap().send(()).unwrap();
        self.task.await.unwrap().unwrap();
    }
}

fn files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
}

#[tokio::test]
async fn health() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(CollectorConfig::new(dir.path())).await;
    let r = reqwest::get(format!("{}/v1/health", server.url)).await.unwrap();
    assert_eq!(r.status(), StatusCode::OK);
    let body: serde_json::Value = r.json().await.unwrap();
    assert_eq!(body["status"], "ok");
    server.stop().await;
}

#[tokio::test]
async fn upload_lifecycle() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(CollectorConfig::new(dir.path())).await;
    let client = reqwest::Client::new();
    let url = format!("{}/v1/sessions", server.url);
    let body = fixture("reference_session.json");

    let r = client.post(&url).body(body.clone()).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::CREATED);
    let json: serde_json::Value = r.json().await.unwrap();
    assert_eq!(json["id"], "reference-01");
    let stored = fs::read(dir.path().join("reference-01.json")).unwrap();
    assert_eq!(stored, body);
    assert_eq!(parse_session(&stored).unwrap(), parse_session(&body).unwrap());

    let r = client.post(&url).body(body.clone()).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::CONFLICT);
    assert_eq!(fs::read(dir.path().join("reference-01.json")).unwrap(), body);

    let r = client.post(&url).body(fixture("invalid/strain_rating_6.json")).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::UNPROCESSABLE_ENTITY);
    let json: serde_json::Value = r.json().await.unwrap();
    assert_eq!(json["violations"][0]["path"], "post.strain_rating");

    for junk in [fixture("invalid/truncated.json"), b"not json".to_vec(), Vec::new()] {
        let r = client.post(&url).body(junk).send().await.unwrap();
        assert_eq!(r.status(), StatusCode::UNPROCESSABLE_ENTITY);
    }
    assert_eq!(files(dir.path()), ["reference-01.json"]);
    server.stop().await;
}

#[tokio::test]
async fn oversized_body_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = CollectorConfig { max_body_bytes: 1024, ..CollectorConfig::new(dir.path()) };
    let server = Server::start(config).await;
    let r = reqwest::Client::new()
        .post(format!("{}/v1/sessions", server.url))
        .body(fixture("reference_session.json"))
        .send()
        .await
        .unwrap();
    assert_eq!(r.status(), StatusCode::PAYLOAD_TOO_LARGE);
    assert!(files(dir.path()).is_empty());
    server.stop().await;
}

#[tokio::test]
async fn token_is_enforced() {
    let dir = tempfile::tempdir().unwrap();
    let config = CollectorConfig { token: Some("s3cret".into()), ..CollectorConfig::new(dir.path()) };
    let server = Server::start(config).await;
    let client = reqwest::Client::new();
    let url = format!("{}/v1/sessions", server.url);

    let r = client.post(&url).body(with_id("a")).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::UNAUTHORIZED);
    let r = client.post(&url).header(TOKEN_HEADER, "nope").body(with_id("a")).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::UNAUTHORIZED);
    assert!(files(dir.path()).is_empty());

    let r = client.post(&url).header(TOKEN_HEADER, "s3cret").body(with_id("a")).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::CREATED);
    // Health stays open.
    let r = client.get(format!("{}/v1/health", server.url)).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::OK);
    server.stop().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_uploads_all_land_intact() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(CollectorConfig::new(dir.path())).await;
    let client = reqwest::Client::new();
    let url = format!("{}/v1/sessions", server.url);

    let bodies: Vec<(String, Vec<u8>)> = (0..50).map(|i| (format!("c-{i:02}"), with_id(&format!("c-{i:02}")))).collect();
    let mut tasks = Vec::new();
    for (_, body) in &bodies {
        let (client, url, body) = (client.clone(), url.clone(), body.clone());
        tasks.push(tokio::spawn(async move { client.post(url).body(body).send().await.unwrap().status() }));
    }
    // The same id raced from several clients: exactly one wins.
    for _ in 0..8 {
        let (client, url, body) = (client.clone(), url.clone(), with_id("contested"));
        tasks.push(tokio::spawn(async move { client.post(url).body(body).send().await.unwrap().status() }));
    }
    let mut statuses = Vec::new();
    for t in tasks {
        statuses.push(t.await.unwrap());
    }
    assert!(statuses[..50].iter().all(|s| *s == StatusCode::CREATED));
    assert_eq!(statuses[50..].iter().filter(|s| **s == StatusCode::CREATED).count(), 1);
    assert_eq!(statuses[50..].iter().filter(|s| **s == StatusCode::CONFLICT).count(), 7);

    let names = files(dir.path());
    assert_eq!(names.len(), 51, "no stray temp files: {names:?}");
    for (id, body) in &bodies {
        let stored = fs::read(dir.path().join(format!("{id}.json"))).unwrap();
        assert_eq!(&stored, body);
        assert_eq!(parse_session(&stored).unwrap().session_id, *id);
    }
    server.stop().await;
}

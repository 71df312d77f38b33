//! Drive the /v1 session API in-process: open a session, post two
//! observations, ask the planner and an expert for advice, then close it.
//!
//!     cargo run --release --example session_service

use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Method, Request};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use stroke_pomdp::service::{router, AppState, SessionStore};
use stroke_pomdp::ConfigFile;
use tower::ServiceExt;

async fn call(app: &Router, method: Method, uri: &str, body: Value) -> Value {
    let req = Request::builder()
        .method(method.clone())
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    println!("{method} {uri} -> {status}");
    if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() }
}

#[tokio::main]
async fn main() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ConfigFile::defaults();
    let store = Arc::new(SessionStore::open(cfg.model, dir.path(), Duration::from_secs(3600)).unwrap());
    let app = router(AppState::new(store, cfg.solver));

    let s = call(&app, Method::POST, "/v1/sessions", json!({})).await;
    let id = s["id"].as_str().unwrap().to_string();
    println!("  marginals {}", s["marginals"]);

    let steps = [
        json!({"action": "HOSP", "observation": {"kind": "clinical", "ct": "CT_POSITIVE", "siriraj": 3}}),
        json!({"action": "DSA", "observation": {"kind": "dsa_report", "pred_ane": true, "pred_avm": false, "pred_occ": false}}),
    ];
    for body in steps {
        let r = call(&app, Method::POST, &format!("/v1/sessions/{id}/step"), body).await;
        println!("  t={} marginals {}", r["t"], r["marginals"]);
    }

    for policy in ["despot", "expert-hosp"] {
        let r = call(&app, Method::POST, &format!("/v1/sessions/{id}/recommend"), json!({"policy": policy, "seed": 7})).await;
        println!("  {policy}: {} {}", r["action"], r.get("branch").unwrap_or(&Value::Null));
        if let Some(bounds) = r["bounds"].as_array() {
            for b in bounds {
                println!("    {b}");
            }
        }
    }

    call(&app, Method::DELETE, &format!("/v1/sessions/{id}"), Value::Null).await;
}

mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use common::{item_index, spec, FIVE_IMAGE, FIVE_IMAGE_RATIOS};
use http_body_util::BodyExt;
use pairpref_survey::archive::Archive;
use pairpref_survey::store::parse_log;
use pairpref_survey::{router, Durability, SurveyState, SurveyStore};
use serde_json::{json, Value};
use tempfile::TempDir;
use tower::ServiceExt;

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(v) => req.header("content-type", "application/json").body(Body::from(v.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn call_json(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, bytes) = call(app, method, uri, body).await;
    (status, serde_json::from_slice(&bytes).unwrap())
}

fn app() -> (TempDir, Arc<SurveyStore>, Router) {
    let dir = TempDir::new().unwrap();
    let store = Arc::new(SurveyStore::open(dir.path(), 1, Durability::Flush).unwrap());
    let app = router(store.clone());
    (dir, store, app)
}

/// Answers every question for `participant` over HTTP; `choose` sees the
/// left and right item ids.
async fn answer_all(
    app: &Router,
    survey: &str,
    participant: &str,
    choose: impl Fn(&str, &str) -> &'static str,
) -> usize {
    let mut n = 0;
    loop {
        let (status, q) =
            call_json(app, "GET", &format!("/surveys/{survey}/next?participant={participant}"), None).await;
        assert_eq!(status, StatusCode::OK);
        if q["status"] == "complete" {
            return n;
        }
        let (l, r) = (q["left"]["id"].as_str().unwrap(), q["right"]["id"].as_str().unwrap());
        let body = json!({
            "participant": participant, "group": q["group"], "left": l, "right": r, "choice": choose(l, r)
        });
        let (status, _) = call(app, "POST", &format!("/surveys/{survey}/votes"), Some(body)).await;
        assert_eq!(status, StatusCode::OK);
        n += 1;
    }
}

#[tokio::test]
async fn question_vote_results_flow() {
    let (_d, _s, app) = app();
    let (status, created) =
        call_json(&app, "POST", "/surveys", Some(serde_json::to_value(spec("s", &[2])).unwrap())).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(created["id"], "s");

    let (status, q) = call_json(&app, "GET", "/surveys/s/next?participant=alice", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(q["status"], "question");
    assert_eq!((q["answered"].as_u64(), q["total"].as_u64()), (Some(0), Some(1)));
    assert!(q["left"]["media"].as_str().unwrap().starts_with("https://"));
    let q_left = q["left"]["id"].clone();
    let vote = json!({
        "participant": "alice", "group": "g0", "left": q["left"]["id"], "right": q["right"]["id"], "choice": "left"
    });
    let (status, ack) = call_json(&app, "POST", "/surveys/s/votes", Some(vote.clone())).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!((ack["left_wins"].as_u64(), ack["right_wins"].as_u64()), (Some(1), Some(0)));

    let (status, err) = call_json(&app, "POST", "/surveys/s/votes", Some(vote)).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["error"], "conflict");

    let (_, q) = call_json(&app, "GET", "/surveys/s/next?participant=alice", None).await;
    assert_eq!(q, json!({"status": "complete", "answered": 1, "total": 1}));

    let (status, r) = call_json(&app, "GET", "/surveys/s/groups/g0/results", None).await;
    assert_eq!(status, StatusCode::OK);
    // one vote on a two-item group never links both ways
    assert_eq!(r["status"], "insufficient_comparisons");
    assert!(r.get("gammas").is_none());
    assert_eq!(r["diagnostic"]["upper"], json!([q_left]));
    assert_eq!(r["total_votes"], 1);
}

#[tokio::test]
async fn error_statuses() {
    let (_d, _s, app) = app();
    call(&app, "POST", "/surveys", Some(serde_json::to_value(spec("s", &[3])).unwrap())).await;
    let cases = [
        ("POST", "/surveys", Some(serde_json::to_value(spec("s", &[3])).unwrap()), StatusCode::CONFLICT),
        ("POST", "/surveys", Some(json!({"id": "e", "groups": []})), StatusCode::BAD_REQUEST),
        ("POST", "/surveys", Some(json!({"nonsense": true})), StatusCode::BAD_REQUEST),
        ("GET", "/surveys/missing/next?participant=p", None, StatusCode::NOT_FOUND),
        ("GET", "/surveys/s/next", None, StatusCode::BAD_REQUEST),
        ("GET", "/surveys/s/next?participant=a%09b", None, StatusCode::BAD_REQUEST),
        ("GET", "/surveys/s/groups/nope/results", None, StatusCode::NOT_FOUND),
        ("GET", "/surveys/missing/export", None, StatusCode::NOT_FOUND),
        (
            "POST",
            "/surveys/s/votes",
            Some(json!({"participant": "p", "group": "g0", "left": "i0", "right": "i1", "choice": "left"})),
            StatusCode::BAD_REQUEST,
        ),
        (
            "POST",
            "/surveys/s/votes",
            Some(json!({"participant": "p", "group": "g0", "left": "i0", "right": "i1", "choice": "tie"})),
            StatusCode::BAD_REQUEST,
        ),
    ];
    for (method, uri, body, want) in cases {
        let (status, err) = call_json(&app, method, uri, body).await;
        assert_eq!(status, want, "{method} {uri}: {err}");
        assert!(err["message"].is_string());
    }
}

#[tokio::test]
async fn five_image_group_via_results_endpoint() {
    let (_d, _s, app) = app();
    call(&app, "POST", "/surveys", Some(serde_json::to_value(spec("y", &[5])).unwrap())).await;
    for k in 0..54u64 {
        answer_all(&app, "y", &format!("p{k}"), move |l, r| {
            let (l, r) = (item_index(l), item_index(r));
            if (k < FIVE_IMAGE[l.min(r)][l.max(r)]) == (l < r) {
                "left"
            } else {
                "right"
            }
        })
        .await;
    }
    let (_, r) = call_json(&app, "GET", "/surveys/y/groups/g0/results", None).await;
    assert_eq!(r["matrix"], json!(FIVE_IMAGE));
    for (g, want) in r["gammas"].as_array().unwrap().iter().zip(FIVE_IMAGE_RATIOS) {
        assert!((g.as_f64().unwrap() - want).abs() <= 1e-3);
    }
    assert_eq!(r["fit"]["converged"], true);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_participants_and_export() {
    let (_d, store, app) = app();
    call(&app, "POST", "/surveys", Some(serde_json::to_value(spec("c", &[8, 8, 6])).unwrap())).await;
    let tasks: Vec<_> = (0..20)
        .map(|k| {
            let app = app.clone();
            tokio::spawn(async move {
                answer_all(&app, "c", &format!("p{k}"), move |l, r| {
                    if (item_index(l) + item_index(r) + k).is_multiple_of(3) {
                        "left"
                    } else {
                        "right"
                    }
                })
                .await
            })
        })
        .collect();
    let mut votes = 0;
    for t in tasks {
        votes += t.await.unwrap();
    }
    assert_eq!(votes, 20 * 71);

    let (status, bytes) = call(&app, "GET", "/surveys/c/export", None).await;
    assert_eq!(status, StatusCode::OK);
    let archive = Archive::read(&bytes).unwrap();
    let live: Vec<_> = store.matrices("c").unwrap().into_iter().map(|(_, m)| m).collect();
    assert_eq!(archive.matrices, live);
    let (events, _) = parse_log(&archive.log).unwrap();
    assert_eq!(events.len(), votes);
    let replayed = SurveyState::replay(archive.spec.clone(), 1, &events).unwrap();
    assert_eq!(replayed.matrices(), &live[..]);
    assert_eq!(live.iter().map(|m| m.total_votes()).sum::<u64>(), votes as u64);
}

//! HTTP provider tests against a minimal in-process server: auth
//! header propagation, retry-on-transient-failure, and expansion
//! extraction from the structured response.

use std::io::{Read, Write};
use std::net::TcpListener;
use std::sync::Arc;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;

use aimix_core::Error;
use aimix_core::rephrase::{HttpProvider, Provider, ProviderConfig, RephraseRequest};

struct CannedResponse {
    status: &'static str,
    body: String,
}

fn serve(
    responses: Vec<CannedResponse>,
) -> (String, Arc<AtomicUsize>, thread::JoinHandle<Vec<String>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let hits = Arc::new(AtomicUsize::new(0));
    let hits_clone = hits.clone();
    let handle = thread::spawn(move || {
        let mut seen_requests = Vec::new();
        for response in responses {
            let (mut stream, _) = listener.accept().unwrap();
            let mut buf = Vec::new();
            let mut chunk = [0u8; 4096];
            // Read headers, then the declared body length.
            let mut header_end = None;
            while header_end.is_none() {
                let n = stream.read(&mut chunk).unwrap();
                if n == 0 {
                    break;
                }
                buf.extend_from_slice(&chunk[..n]);
                header_end = buf.windows(4).position(|w| w == b"\r\n\r\n");
            }
            if let Some(pos) = header_end {
                let headers = String::from_utf8_lossy(&buf[..pos]).to_string();
                let content_length = headers
                    .lines()
                    .find_map(|l| {
                        let (name, value) = l.split_once(':')?;
                        name.eq_ignore_ascii_case("content-length")
                            .then(|| value.trim().parse::<usize>().ok())?
                    })
                    .unwrap_or(0);
                while buf.len() < pos + 4 + content_length {
                    let n = stream.read(&mut chunk).unwrap();
                    if n == 0 {
                        break;
                    }
                    buf.extend_from_slice(&chunk[..n]);
                }
                seen_requests.push(String::from_utf8_lossy(&buf).to_string());
            }
            hits_clone.fetch_add(1, Ordering::SeqCst);
            let reply = format!(
                "HTTP/1.1 {}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{}",
                response.status,
                response.body.len(),
                response.body
            );
            stream.write_all(reply.as_bytes()).unwrap();
        }
        seen_requests
    });
    (format!("http://{addr}/v1/chat/completions"), hits, handle)
}

fn chat_body(content: &str) -> String {
    serde_json::json!({
        "choices": [{"message": {"role": "assistant", "content": content}}]
    })
    .to_string()
}

fn test_config(endpoint: String, max_retries: u32) -> ProviderConfig {
    ProviderConfig {
        endpoint,
        model_name: "test-model".to_string(),
        auth_token_env: "AIMIX_TEST_TOKEN".to_string(),
        timeout_secs: 5,
        max_retries,
        backoff_base_ms: 1,
    }
}

fn set_test_token() {
    // Safe enough for test setup: single-threaded at this point.
    unsafe { std::env::set_var("AIMIX_TEST_TOKEN", "sekrit") };
}

const GOOD_CONTENT: &str = "1. **Outline Creation**\n- first idea\n- second idea\n\n\
2. **Expansion**\nHere is the rewritten abstract. It preserves the meaning of the input.\n\n\
**Validation**\nChecked.";

#[test]
fn provider_sends_auth_and_extracts_expansion() {
    set_test_token();
    let (endpoint, hits, handle) = serve(vec![CannedResponse {
        status: "200 OK",
        body: chat_body(GOOD_CONTENT),
    }]);
    let provider = HttpProvider::new(test_config(endpoint, 0)).unwrap();
    let out = provider
        .rephrase(&RephraseRequest::new(
            "A sample abstract with enough words.",
        ))
        .unwrap();
    assert_eq!(
        out,
        "Here is the rewritten abstract. It preserves the meaning of the input."
    );
    assert_eq!(hits.load(Ordering::SeqCst), 1);

    let requests = handle.join().unwrap();
    assert!(requests[0].contains("Bearer sekrit"));
    assert!(requests[0].contains("test-model"));
    assert!(requests[0].contains("around 6 words"));
}

#[test]
fn provider_retries_transient_errors() {
    set_test_token();
    let (endpoint, hits, handle) = serve(vec![
        CannedResponse {
            status: "500 Internal Server Error",
            body: "{}".to_string(),
        },
        CannedResponse {
            status: "429 Too Many Requests",
            body: "{}".to_string(),
        },
        CannedResponse {
            status: "200 OK",
            body: chat_body(GOOD_CONTENT),
        },
    ]);
    let provider = HttpProvider::new(test_config(endpoint, 3)).unwrap();
    let out = provider
        .rephrase(&RephraseRequest::new("Another abstract to rewrite."))
        .unwrap();
    assert!(out.starts_with("Here is the rewritten abstract."));
    assert_eq!(hits.load(Ordering::SeqCst), 3);
    handle.join().unwrap();
}

#[test]
fn provider_gives_up_after_max_retries() {
    set_test_token();
    let (endpoint, hits, handle) = serve(vec![
        CannedResponse {
            status: "500 Internal Server Error",
            body: "{}".to_string(),
        },
        CannedResponse {
            status: "500 Internal Server Error",
            body: "{}".to_string(),
        },
    ]);
    let provider = HttpProvider::new(test_config(endpoint, 1)).unwrap();
    let err = provider
        .rephrase(&RephraseRequest::new("Abstract."))
        .unwrap_err();
    match err {
        Error::ProviderRequest { attempts, .. } => assert_eq!(attempts, 2),
        other => panic!("unexpected error {other}"),
    }
    assert_eq!(hits.load(Ordering::SeqCst), 2);
    handle.join().unwrap();
}

#[test]
fn provider_rejects_response_without_expansion() {
    set_test_token();
    let (endpoint, _, handle) = serve(vec![CannedResponse {
        status: "200 OK",
        body: chat_body("**Outline**\n- just an outline, nothing else"),
    }]);
    let provider = HttpProvider::new(test_config(endpoint, 0)).unwrap();
    let err = provider
        .rephrase(&RephraseRequest::new("Abstract body."))
        .unwrap_err();
    assert!(matches!(err, Error::MissingExpansion { .. }));
    handle.join().unwrap();
}

#[test]
fn non_retryable_status_fails_fast() {
    set_test_token();
    let (endpoint, hits, handle) = serve(vec![CannedResponse {
        status: "401 Unauthorized",
        body: "{}".to_string(),
    }]);
    let provider = HttpProvider::new(test_config(endpoint, 3)).unwrap();
    let err = provider
        .rephrase(&RephraseRequest::new("Abstract body."))
        .unwrap_err();
    assert!(matches!(err, Error::ProviderRequest { .. }));
    assert_eq!(hits.load(Ordering::SeqCst), 1);
    handle.join().unwrap();
}

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use modalign::orchestrator::{
    BackendError, BackendRequest, ChatBackend, HttpBackend, Message, RequestContext, Role, StageId,
};

struct Seen {
    request_line: String,
    authorization: Option<String>,
    body: serde_json::Value,
}

/// Serves one canned HTTP response per entry, reporting each request.
fn serve(responses: Vec<(u16, String)>) -> (String, mpsc::Receiver<Seen>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for (status, body) in responses {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut request_line = String::new();
            reader.read_line(&mut request_line).unwrap();
            let mut length = 0;
            let mut authorization = None;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let line = line.trim_end();
                if line.is_empty() {
                    break;
                }
                let (name, value) = line.split_once(':').unwrap();
                match name.to_ascii_lowercase().as_str() {
                    "content-length" => length = value.trim().parse().unwrap(),
                    "authorization" => authorization = Some(value.trim().to_string()),
                    _ => {}
                }
            }
            let mut raw = vec![0; length];
            reader.read_exact(&mut raw).unwrap();
            tx.send(Seen { request_line: request_line.trim_end().into(), authorization, body: serde_json::from_slice(&raw).unwrap() })
                .unwrap();
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    (url, rx)
}

fn request() -> BackendRequest {
    BackendRequest {
        model: "gpt-4".into(),
        messages: vec![
            Message { role: Role::User, content: "first".into() },
            Message { role: Role::Assistant, content: "ok".into() },
            Message { role: Role::User, content: "second".into() },
        ],
        temperature: 0.0,
        context: RequestContext { rule_id: "r1".into(), stage: StageId::QueryEntities },
    }
}

#[test]
fn posts_chat_messages_and_reads_the_first_choice() {
    let reply = r#"{"choices":[{"message":{"role":"assistant","content":"gmo#Program"},"finish_reason":"stop"}]}"#;
    let (url, rx) = serve(vec![(200, reply.into())]);
    let backend = HttpBackend::new(url, "gpt-4", Some("test-token".into()), Duration::from_secs(5));
    let response = backend.complete(&request()).unwrap();
    assert_eq!(response.text, "gmo#Program");
    assert_eq!(response.finish, "stop");

    let seen = rx.recv_timeout(Duration::from_secs(5)).unwrap();
    assert!(seen.request_line.starts_with("POST /v1/chat/completions "));
    assert_eq!(seen.authorization.as_deref(), Some("Bearer test-token"));
    assert_eq!(
        seen.body,
        serde_json::json!({
            "model": "gpt-4",
            "temperature": 0.0,
            "messages": [
                {"role": "user", "content": "first"},
                {"role": "assistant", "content": "ok"},
                {"role": "user", "content": "second"}
            ]
        })
    );
    assert_eq!(backend.descriptor(), "http:gpt-4");
    assert!(!format!("{backend:?}").contains("test-token"));
}

#[test]
fn status_codes_map_to_error_classes() {
    let (url, _rx) = serve(vec![
        (503, "{}".into()),
        (429, "{}".into()),
        (401, "{}".into()),
        (200, r#"{"choices":[]}"#.into()),
        (200, "not json".into()),
    ]);
    let backend = HttpBackend::new(url, "m", None, Duration::from_secs(5));
    assert!(matches!(backend.complete(&request()), Err(BackendError::Transient(_))));
    assert!(matches!(backend.complete(&request()), Err(BackendError::Transient(_))));
    assert!(matches!(backend.complete(&request()), Err(BackendError::Fatal(_))));
    assert!(matches!(backend.complete(&request()), Err(BackendError::Fatal(_))));
    assert!(matches!(backend.complete(&request()), Err(BackendError::Fatal(_))));
}

#[test]
fn refused_connection_is_transient() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let backend = HttpBackend::new(format!("http://127.0.0.1:{port}/"), "m", None, Duration::from_secs(2));
    assert!(matches!(backend.complete(&request()), Err(BackendError::Transient(_))));
}

#[test]
fn missing_key_variable_is_named_not_echoed() {
    let err = HttpBackend::from_env("http://127.0.0.1:9/", "m", "MODALIGN_TEST_UNSET_KEY", Duration::from_secs(1)).unwrap_err();
    assert!(err.to_string().contains("MODALIGN_TEST_UNSET_KEY"));
}

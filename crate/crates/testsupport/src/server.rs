//! A minimal instrumented HTTP server for crawler tests.
//!
//! Serves a fixed route table over real TCP and records, per request, the
//! path and arrival time plus the peak number of simultaneously open
//! requests. Politeness assertions (spacing, no overlap, no refetch) read
//! those records after the crawl.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

#[derive(Debug, Clone)]
pub struct Route {
    pub status: u16,
    pub content_type: String,
    pub body: Vec<u8>,
}

impl Route {
    pub fn html(body: impl Into<String>) -> Self {
        Route {
            status: 200,
            content_type: "text/html; charset=utf-8".to_string(),
            body: body.into().into_bytes(),
        }
    }

    pub fn text(body: impl Into<String>) -> Self {
        Route {
            status: 200,
            content_type: "text/plain".to_string(),
            body: body.into().into_bytes(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RequestLog {
    pub path: String,
    pub at: Instant,
}

struct Shared {
    routes: HashMap<String, Route>,
    requests: Mutex<Vec<RequestLog>>,
    in_flight: AtomicUsize,
    max_in_flight: AtomicUsize,
    // artificial handling time, to widen the overlap-detection window
    handle_time: Duration,
}

pub struct FixtureServer {
    addr: String,
    shared: Arc<Shared>,
    stop: Arc<AtomicBool>,
    accept_thread: Option<thread::JoinHandle<()>>,
}

impl FixtureServer {
    pub fn start(routes: HashMap<String, Route>) -> Self {
        Self::start_with_handle_time(routes, Duration::from_millis(0))
    }

    /// Starts the server; every request additionally holds its connection
    /// open for `handle_time` before responding.
    pub fn start_with_handle_time(routes: HashMap<String, Route>, handle_time: Duration) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind fixture server");
        listener
            .set_nonblocking(true)
            .expect("nonblocking listener");
        let addr = format!("127.0.0.1:{}", listener.local_addr().unwrap().port());
        let shared = Arc::new(Shared {
            routes,
            requests: Mutex::new(Vec::new()),
            in_flight: AtomicUsize::new(0),
            max_in_flight: AtomicUsize::new(0),
            handle_time,
        });
        let stop = Arc::new(AtomicBool::new(false));

        let accept_shared = Arc::clone(&shared);
        let accept_stop = Arc::clone(&stop);
        let accept_thread = thread::spawn(move || {
            let mut workers = Vec::new();
            while !accept_stop.load(Ordering::SeqCst) {
                match listener.accept() {
                    Ok((stream, _)) => {
                        let shared = Arc::clone(&accept_shared);
                        workers.push(thread::spawn(move || handle(stream, &shared)));
                    }
                    Err(ref e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                        thread::sleep(Duration::from_millis(2));
                    }
                    Err(_) => break,
                }
            }
            for w in workers {
                let _ = w.join();
            }
        });

        FixtureServer {
            addr,
            shared,
            stop,
            accept_thread: Some(accept_thread),
        }
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn host(&self) -> &str {
        &self.addr
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{}", self.addr, path)
    }

    /// All requests seen so far, in arrival order.
    pub fn requests(&self) -> Vec<RequestLog> {
        self.shared.requests.lock().unwrap().clone()
    }

    pub fn count_for(&self, path: &str) -> usize {
        self.shared
            .requests
            .lock()
            .unwrap()
            .iter()
            .filter(|r| r.path == path)
            .count()
    }

    /// Peak number of requests being handled at the same moment.
    pub fn max_in_flight(&self) -> usize {
        self.shared.max_in_flight.load(Ordering::SeqCst)
    }
}

impl Drop for FixtureServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(t) = self.accept_thread.take() {
            let _ = t.join();
        }
    }
}

fn handle(mut stream: TcpStream, shared: &Shared) {
    let depth = shared.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
    shared.max_in_flight.fetch_max(depth, Ordering::SeqCst);

    let path = read_request_path(&mut stream);
    if let Some(path) = path {
        shared.requests.lock().unwrap().push(RequestLog {
            path: path.clone(),
            at: Instant::now(),
        });
        if !shared.handle_time.is_zero() {
            thread::sleep(shared.handle_time);
        }
        let response = match shared.routes.get(&path) {
            Some(route) => encode_response(route),
            None => encode_response(&Route {
                status: 404,
                content_type: "text/plain".to_string(),
                body: b"not found".to_vec(),
            }),
        };
        let _ = stream.write_all(&response);
        let _ = stream.flush();
    }

    shared.in_flight.fetch_sub(1, Ordering::SeqCst);
}

/// Reads the request head and returns the path from the request line.
fn read_request_path(stream: &mut TcpStream) -> Option<String> {
    stream
        .set_read_timeout(Some(Duration::from_secs(5)))
        .ok()?;
    let mut head = Vec::new();
    let mut buf = [0u8; 1024];
    while !head.windows(4).any(|w| w == b"\r\n\r\n") {
        match stream.read(&mut buf) {
            Ok(0) => break,
            Ok(n) => head.extend_from_slice(&buf[..n]),
            Err(_) => return None,
        }
        if head.len() > 64 * 1024 {
            return None;
        }
    }
    let text = String::from_utf8_lossy(&head);
    let line = text.lines().next()?;
    let mut parts = line.split_whitespace();
    let _method = parts.next()?;
    let target = parts.next()?;
    // absolute-form targets (proxies) reduce to their path
    let path = if let Some(rest) = target.strip_prefix("http://") {
        rest.find('/').map(|i| &rest[i..]).unwrap_or("/")
    } else {
        target
    };
    Some(path.split('#').next().unwrap_or(path).to_string())
}

fn encode_response(route: &Route) -> Vec<u8> {
    let reason = match route.status {
        200 => "OK",
        404 => "Not Found",
        _ => "Status",
    };
    let mut out = format!(
        "HTTP/1.1 {} {}\r\nContent-Type: {}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        route.status,
        reason,
        route.content_type,
        route.body.len()
    )
    .into_bytes();
    out.extend_from_slice(&route.body);
    out
}

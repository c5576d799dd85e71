//! Minimal TCP pub/sub broker and the client transport that binds to it.
//!
//! Line protocol, hex payloads: client sends `SUB <pattern>` and
//! `PUB <topic> <hex>`, the broker fans out `MSG <topic> <hex>` to every
//! connection whose patterns match. Same delivery contract as the
//! in-process bus.

use std::collections::VecDeque;
use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use super::bus::{Subscription, Transport, TransportError};
use super::topics::topic_matches;

struct BrokerClient {
    patterns: Vec<String>,
    stream: TcpStream,
}

#[derive(Default)]
struct BrokerState {
    clients: Vec<Arc<Mutex<BrokerClient>>>,
}

/// A running broker; dropping the handle shuts it down.
pub struct BrokerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    accept_thread: Option<JoinHandle<()>>,
}

impl BrokerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }
}

impl Drop for BrokerHandle {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(handle) = self.accept_thread.take() {
            let _ = handle.join();
        }
    }
}

/// Binds and serves a broker on `addr` (use port 0 for an ephemeral port).
pub fn serve_broker(addr: &str) -> Result<BrokerHandle, TransportError> {
    let listener = TcpListener::bind(addr).map_err(|e| TransportError::Io(e.to_string()))?;
    let local = listener.local_addr().map_err(|e| TransportError::Io(e.to_string()))?;
    listener.set_nonblocking(true).map_err(|e| TransportError::Io(e.to_string()))?;
    let stop = Arc::new(AtomicBool::new(false));
    let state = Arc::new(Mutex::new(BrokerState::default()));

    let accept_stop = stop.clone();
    let accept_thread = std::thread::spawn(move || {
        while !accept_stop.load(Ordering::SeqCst) {
            match listener.accept() {
                Ok((stream, _)) => {
                    let client = Arc::new(Mutex::new(BrokerClient {
                        patterns: Vec::new(),
                        stream: stream.try_clone().expect("clone broker stream"),
                    }));
                    state.lock().expect("broker state").clients.push(client.clone());
                    let state = state.clone();
                    std::thread::spawn(move || serve_client(stream, client, state));
                }
                Err(ref e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                    std::thread::sleep(Duration::from_millis(5));
                }
                Err(_) => break,
            }
        }
    });

    Ok(BrokerHandle { addr: local, stop, accept_thread: Some(accept_thread) })
}

fn serve_client(
    stream: TcpStream,
    client: Arc<Mutex<BrokerClient>>,
    state: Arc<Mutex<BrokerState>>,
) {
    let reader = BufReader::new(stream);
    for line in reader.lines() {
        let Ok(line) = line else { break };
        let mut parts = line.splitn(3, ' ');
        match (parts.next(), parts.next(), parts.next()) {
            (Some("SUB"), Some(pattern), None) => {
                client.lock().expect("broker client").patterns.push(pattern.to_string());
            }
            (Some("PUB"), Some(topic), Some(hex_payload)) => {
                let frame = format!("MSG {topic} {hex_payload}\n");
                // One route pass under the state lock keeps per-topic order.
                let clients = state.lock().expect("broker state").clients.clone();
                for peer in clients {
                    let mut peer = peer.lock().expect("broker client");
                    if peer.patterns.iter().any(|p| topic_matches(p, topic)) {
                        let _ = peer.stream.write_all(frame.as_bytes());
                    }
                }
            }
            _ => break,
        }
    }
    // Drop the client from the routing table on disconnect.
    let mut state = state.lock().expect("broker state");
    state.clients.retain(|c| !Arc::ptr_eq(c, &client));
}

type Queue = Arc<(Mutex<VecDeque<(String, Vec<u8>)>>, Condvar)>;

struct ClientSub {
    pattern: String,
    queue: Queue,
}

/// Client binding: one TCP connection, local fan-out to subscriptions.
pub struct TcpTransport {
    writer: Mutex<TcpStream>,
    subs: Arc<Mutex<Vec<ClientSub>>>,
}

impl TcpTransport {
    pub fn connect(addr: &str) -> Result<Arc<Self>, TransportError> {
        let stream = TcpStream::connect(addr).map_err(|e| TransportError::Io(e.to_string()))?;
        let reader_stream = stream.try_clone().map_err(|e| TransportError::Io(e.to_string()))?;
        let subs: Arc<Mutex<Vec<ClientSub>>> = Arc::new(Mutex::new(Vec::new()));
        let reader_subs = subs.clone();
        std::thread::spawn(move || {
            let reader = BufReader::new(reader_stream);
            for line in reader.lines() {
                let Ok(line) = line else { break };
                let mut parts = line.splitn(3, ' ');
                if let (Some("MSG"), Some(topic), Some(hex_payload)) =
                    (parts.next(), parts.next(), parts.next())
                {
                    let Ok(payload) = hex::decode(hex_payload) else { continue };
                    for sub in reader_subs.lock().expect("client subs").iter() {
                        if topic_matches(&sub.pattern, topic) {
                            let (queue, condvar) = &*sub.queue;
                            queue
                                .lock()
                                .expect("client queue")
                                .push_back((topic.to_string(), payload.clone()));
                            condvar.notify_one();
                        }
                    }
                }
            }
        });
        Ok(Arc::new(TcpTransport { writer: Mutex::new(stream), subs }))
    }
}

impl Transport for TcpTransport {
    fn publish(&self, topic: &str, payload: &[u8]) -> Result<(), TransportError> {
        let frame = format!("PUB {topic} {}\n", hex::encode(payload));
        self.writer
            .lock()
            .expect("tcp writer")
            .write_all(frame.as_bytes())
            .map_err(|e| TransportError::Io(e.to_string()))
    }

    fn subscribe(&self, pattern: &str) -> Box<dyn Subscription> {
        let queue: Queue = Arc::new((Mutex::new(VecDeque::new()), Condvar::new()));
        let frame = format!("SUB {pattern}\n");
        let _ = self.writer.lock().expect("tcp writer").write_all(frame.as_bytes());
        self.subs
            .lock()
            .expect("client subs")
            .push(ClientSub { pattern: pattern.to_string(), queue: queue.clone() });
        Box::new(TcpSubscription { queue })
    }
}

struct TcpSubscription {
    queue: Queue,
}

impl Subscription for TcpSubscription {
    fn poll(&mut self, timeout: Duration) -> Option<(String, Vec<u8>)> {
        let (queue, condvar) = &*self.queue;
        let deadline = std::time::Instant::now() + timeout;
        let mut guard = queue.lock().expect("client queue");
        loop {
            if let Some(item) = guard.pop_front() {
                return Some(item);
            }
            let left = deadline.saturating_duration_since(std::time::Instant::now());
            if left.is_zero() {
                return None;
            }
            let (next, _) = condvar.wait_timeout(guard, left).expect("client queue");
            guard = next;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn broker_routes_between_clients() {
        let broker = serve_broker("127.0.0.1:0").unwrap();
        let addr = broker.addr().to_string();
        let alice = TcpTransport::connect(&addr).unwrap();
        let bob = TcpTransport::connect(&addr).unwrap();
        let mut inbox = bob.subscribe("room/+/msg");
        // Subscription registration races the first publish; settle briefly.
        std::thread::sleep(Duration::from_millis(50));
        alice.publish("room/1/msg", b"over tcp").unwrap();
        let (topic, payload) = inbox.poll(Duration::from_secs(2)).expect("delivery");
        assert_eq!(topic, "room/1/msg");
        assert_eq!(payload, b"over tcp");
    }

    #[test]
    fn broker_preserves_order_within_topic() {
        let broker = serve_broker("127.0.0.1:0").unwrap();
        let addr = broker.addr().to_string();
        let tx = TcpTransport::connect(&addr).unwrap();
        let rx = TcpTransport::connect(&addr).unwrap();
        let mut inbox = rx.subscribe("seq/a/x");
        std::thread::sleep(Duration::from_millis(50));
        for i in 0u32..50 {
            tx.publish("seq/a/x", &i.to_be_bytes()).unwrap();
        }
        for i in 0u32..50 {
            let (_, payload) = inbox.poll(Duration::from_secs(2)).expect("delivery");
            assert_eq!(payload, i.to_be_bytes());
        }
    }
}

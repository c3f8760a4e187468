use std::io::ErrorKind;
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use log::{debug, info, warn};
use tungstenite::Message;

use super::protocol::{ClientMessage, EventBody, TeleopEvent};
use super::session::TeleopSession;

const POLL: Duration = Duration::from_millis(20);

enum Inbound {
    Message(ClientMessage),
    Invalid(String),
    Subscribe(Sender<String>),
}

/// WebSocket front end for one [`TeleopSession`].
///
/// A single worker thread owns the session. Commands queued while a shape is
/// being computed are applied in order and then solved once, so the newest
/// command set wins. Events are broadcast to every connected client.
pub struct TeleopServer {
    addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
    threads: Vec<JoinHandle<()>>,
}

impl TeleopServer {
    pub fn start(listener: TcpListener, session: TeleopSession) -> std::io::Result<Self> {
        let addr = listener.local_addr()?;
        listener.set_nonblocking(true)?;
        let shutdown = Arc::new(AtomicBool::new(false));
        let (tx, rx) = mpsc::channel();
        let worker = {
            let shutdown = shutdown.clone();
            thread::spawn(move || run_worker(session, rx, shutdown))
        };
        let acceptor = {
            let shutdown = shutdown.clone();
            thread::spawn(move || run_acceptor(listener, tx, shutdown))
        };
        info!("teleop service listening on ws://{addr}");
        Ok(Self {
            addr,
            shutdown,
            threads: vec![worker, acceptor],
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Blocks until the server stops (it only stops via [`Self::shutdown`]).
    pub fn wait(mut self) {
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }

    pub fn shutdown(mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}

impl Drop for TeleopServer {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
    }
}

fn broadcast(subscribers: &mut Vec<Sender<String>>, events: &[TeleopEvent]) {
    for e in events {
        let text = e.to_json();
        subscribers.retain(|s| s.send(text.clone()).is_ok());
    }
}

fn run_worker(mut session: TeleopSession, rx: Receiver<Inbound>, shutdown: Arc<AtomicBool>) {
    let mut subscribers = Vec::new();
    while !shutdown.load(Ordering::SeqCst) {
        let first = match rx.recv_timeout(POLL) {
            Ok(m) => m,
            Err(RecvTimeoutError::Timeout) => continue,
            Err(RecvTimeoutError::Disconnected) => break,
        };
        let mut batch = vec![first];
        batch.extend(rx.try_iter());
        for inbound in batch {
            let events = match inbound {
                Inbound::Subscribe(tx) => {
                    subscribers.push(tx);
                    session.snapshot()
                }
                Inbound::Message(ClientMessage::Snapshot) => session.snapshot(),
                Inbound::Message(msg) => msg
                    .inputs()
                    .into_iter()
                    .flat_map(|input| session.apply_command(input))
                    .collect(),
                Inbound::Invalid(message) => vec![session.error_event(message)],
            };
            broadcast(&mut subscribers, &events);
        }
        if session.is_dirty() {
            let events = session.recompute_shape();
            broadcast(&mut subscribers, &events);
        }
    }
}

fn run_acceptor(listener: TcpListener, tx: Sender<Inbound>, shutdown: Arc<AtomicBool>) {
    let mut connections = Vec::new();
    while !shutdown.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, peer)) => {
                debug!("client {peer} connected");
                let tx = tx.clone();
                let shutdown = shutdown.clone();
                connections.push(thread::spawn(move || {
                    if let Err(e) = run_connection(stream, tx, shutdown) {
                        debug!("client {peer}: {e}");
                    }
                }));
            }
            Err(e) if e.kind() == ErrorKind::WouldBlock => thread::sleep(POLL),
            Err(e) => {
                warn!("accept failed: {e}");
                thread::sleep(POLL);
            }
        }
    }
    for c in connections {
        let _ = c.join();
    }
}

fn run_connection(stream: TcpStream, tx: Sender<Inbound>, shutdown: Arc<AtomicBool>) -> Result<(), String> {
    stream.set_nonblocking(false).map_err(|e| e.to_string())?;
    let mut ws = tungstenite::accept(stream).map_err(|e| e.to_string())?;
    ws.get_ref().set_read_timeout(Some(POLL)).map_err(|e| e.to_string())?;
    let (out_tx, out_rx) = mpsc::channel();
    tx.send(Inbound::Subscribe(out_tx)).map_err(|e| e.to_string())?;
    while !shutdown.load(Ordering::SeqCst) {
        for text in out_rx.try_iter() {
            ws.send(Message::text(text)).map_err(|e| e.to_string())?;
        }
        match ws.read() {
            Ok(Message::Text(text)) => {
                let inbound = match ClientMessage::parse(text.as_str()) {
                    Ok(m) => Inbound::Message(m),
                    Err(e) => Inbound::Invalid(format!("bad message: {e}")),
                };
                tx.send(inbound).map_err(|e| e.to_string())?;
            }
            Ok(Message::Close(_)) => break,
            Ok(_) => {}
            Err(tungstenite::Error::Io(e))
                if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {}
            Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => break,
            Err(e) => return Err(e.to_string()),
        }
    }
    Ok(())
}

impl TeleopSession {
    pub(crate) fn error_event(&mut self, message: String) -> TeleopEvent {
        self.push_event(EventBody::Error { message })
    }
}

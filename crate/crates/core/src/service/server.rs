use std::io::{self, BufRead, BufReader, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, RecvTimeoutError};
use std::sync::{Arc, Mutex, RwLock};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use super::{parse_request, Banner, ErrorCode, Mode, Request, Response, RpcError, Session, Snapshot};

struct Job {
    request: Request,
    reply: mpsc::Sender<Response>,
}

/// Running server; dropping it without [`ServerHandle::shutdown`] leaves the threads running.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    streams: Arc<Mutex<Vec<TcpStream>>>,
    threads: Vec<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Blocks until the server stops (only happens after `shutdown` from another handle clone).
    pub fn join(self) {
        for t in self.threads {
            let _ = t.join();
        }
    }

    pub fn shutdown(self) {
        self.stop.store(true, Ordering::SeqCst);
        for s in self.streams.lock().expect("stream registry").drain(..) {
            let _ = s.shutdown(Shutdown::Both);
        }
        self.join();
    }
}

/// Binds `addr` and starts the accept loop and the simulation authority.
pub fn serve(addr: impl ToSocketAddrs, session: Session) -> io::Result<ServerHandle> {
    let listener = TcpListener::bind(addr)?;
    listener.set_nonblocking(true)?;
    let addr = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let streams = Arc::new(Mutex::new(Vec::new()));
    let banner = Arc::new(session.banner());
    let snapshot = Arc::new(RwLock::new(Arc::new(session.snapshot())));
    let (tx, rx) = mpsc::channel::<Job>();

    let authority = {
        let stop = Arc::clone(&stop);
        let snapshot = Arc::clone(&snapshot);
        thread::spawn(move || run_authority(session, rx, snapshot, stop))
    };

    let acceptor = {
        let stop = Arc::clone(&stop);
        let streams = Arc::clone(&streams);
        thread::spawn(move || {
            while !stop.load(Ordering::SeqCst) {
                match listener.accept() {
                    Ok((stream, peer)) => {
                        // Accepted sockets may inherit the listener's non-blocking flag.
                        if let Err(e) = stream.set_nonblocking(false) {
                            log::warn!("cannot configure connection {peer}: {e}");
                            continue;
                        }
                        log::debug!("connection from {peer}");
                        if let Ok(c) = stream.try_clone() {
                            streams.lock().expect("stream registry").push(c);
                        }
                        let tx = tx.clone();
                        let banner = Arc::clone(&banner);
                        let snapshot = Arc::clone(&snapshot);
                        thread::spawn(move || {
                            if let Err(e) = run_connection(stream, &banner, tx, snapshot) {
                                log::debug!("connection {peer} closed: {e}");
                            }
                        });
                    }
                    Err(e) if e.kind() == io::ErrorKind::WouldBlock => thread::sleep(Duration::from_millis(5)),
                    Err(e) => {
                        log::warn!("accept failed: {e}");
                        thread::sleep(Duration::from_millis(5));
                    }
                }
            }
        })
    };

    Ok(ServerHandle { addr, stop, streams, threads: vec![acceptor, authority] })
}

fn run_authority(
    mut session: Session,
    rx: mpsc::Receiver<Job>,
    snapshot: Arc<RwLock<Arc<Snapshot>>>,
    stop: Arc<AtomicBool>,
) {
    let dt = session.environment().config().dt;
    let tick = match session.mode() {
        Mode::Lockstep => Duration::from_millis(20),
        Mode::Realtime => Duration::from_secs_f64(dt),
    };
    let start = Instant::now();
    let mut stepped: u64 = 0;
    let publish = |s: &Session| *snapshot.write().expect("snapshot lock") = Arc::new(s.snapshot());
    while !stop.load(Ordering::SeqCst) {
        match rx.recv_timeout(tick) {
            Ok(job) => {
                let result = session.handle(&job.request);
                publish(&session);
                let _ = job.reply.send(Response::from_result(job.request.id, result));
            }
            Err(RecvTimeoutError::Timeout) => {}
            Err(RecvTimeoutError::Disconnected) => break,
        }
        if session.mode() == Mode::Realtime {
            let due = (start.elapsed().as_secs_f64() / dt).floor() as u64;
            if due > stepped {
                if let Err(e) = session.advance((due - stepped) as usize) {
                    log::error!("realtime stepping stopped: {e}");
                    break;
                }
                stepped = due;
                publish(&session);
            }
        }
    }
}

fn run_connection(
    stream: TcpStream,
    banner: &Banner,
    tx: mpsc::Sender<Job>,
    snapshot: Arc<RwLock<Arc<Snapshot>>>,
) -> io::Result<()> {
    stream.set_nodelay(true)?;
    let mut writer = stream.try_clone()?;
    write_json(&mut writer, banner)?;
    for line in BufReader::new(stream).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let request = match parse_request(&line) {
            Ok(r) => r,
            Err(resp) => {
                write_json(&mut writer, &resp)?;
                continue;
            }
        };
        if request.method == "get_state" {
            let snap = Arc::clone(&snapshot.read().expect("snapshot lock"));
            let value = serde_json::to_value(&*snap).expect("snapshot serializes");
            write_json(&mut writer, &Response::from_result(request.id, Ok(value)))?;
            continue;
        }
        let (reply_tx, reply_rx) = mpsc::channel();
        let id = request.id.clone();
        let resp = if tx.send(Job { request, reply: reply_tx }).is_ok() {
            reply_rx.recv().ok()
        } else {
            None
        };
        let resp = resp.unwrap_or_else(|| {
            Response::from_result(id, Err(RpcError::new(ErrorCode::SimulationError, "service is shutting down")))
        });
        write_json(&mut writer, &resp)?;
    }
    Ok(())
}

fn write_json<T: serde::Serialize>(w: &mut TcpStream, value: &T) -> io::Result<()> {
    let mut line = serde_json::to_string(value).expect("message serializes");
    line.push('\n');
    w.write_all(line.as_bytes())?;
    w.flush()
}

//! Key-gated image vault over TCP.
//!
//! Frame layout: `"MHDN"`, version `1`, command, status, `u32` big-endian payload
//! length, payload. One request and one response per connection.
//!
//! The server stores ciphertext together with an FNV-1a-64 tag of the key bytes
//! and releases plaintext only when the presented key has the same tag. The tag is
//! an access-control check, not a cryptographic commitment.

use std::fs;
use std::io::{self, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, RwLock};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use crate::cipher::{self, CipherKey, KEY_LEN};
use crate::error::{Error, Result};
use crate::pnm;

pub const MAGIC: [u8; 4] = *b"MHDN";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 11;
pub const MAX_PAYLOAD: usize = 1 << 26;
pub const DEFAULT_PORT: u16 = 8083;

const IO_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    Put,
    Get,
    Resp,
}

impl Command {
    pub fn byte(self) -> u8 {
        match self {
            Command::Put => 0x01,
            Command::Get => 0x02,
            Command::Resp => 0x80,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0x01 => Some(Command::Put),
            0x02 => Some(Command::Get),
            0x80 => Some(Command::Resp),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    /// 0x00; also the value carried by every request.
    Ok,
    WrongKey,
    NotFound,
    ProtocolError,
}

impl Status {
    pub fn byte(self) -> u8 {
        match self {
            Status::Ok => 0x00,
            Status::WrongKey => 0x01,
            Status::NotFound => 0x02,
            Status::ProtocolError => 0xFF,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0x00 => Some(Status::Ok),
            0x01 => Some(Status::WrongKey),
            0x02 => Some(Status::NotFound),
            0xFF => Some(Status::ProtocolError),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub command: Command,
    pub status: Status,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn request(command: Command, payload: Vec<u8>) -> Self {
        Self { command, status: Status::Ok, payload }
    }

    pub fn response(status: Status, payload: Vec<u8>) -> Self {
        Self { command: Command::Resp, status, payload }
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        if self.payload.len() > MAX_PAYLOAD {
            return Err(Error::Protocol(format!("payload of {} bytes exceeds cap", self.payload.len())));
        }
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(self.command.byte());
        out.push(self.status.byte());
        out.extend_from_slice(&(self.payload.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.payload);
        Ok(out)
    }

    /// Parses the fixed header and returns `(command, status, payload_len)`.
    pub fn decode_header(h: &[u8; HEADER_LEN]) -> Result<(Command, Status, usize)> {
        if h[..4] != MAGIC {
            return Err(Error::Protocol("bad magic".into()));
        }
        if h[4] != VERSION {
            return Err(Error::Protocol(format!("unsupported version {}", h[4])));
        }
        let command = Command::from_byte(h[5]).ok_or_else(|| Error::Protocol(format!("unknown command {:#04x}", h[5])))?;
        let status = Status::from_byte(h[6]).ok_or_else(|| Error::Protocol(format!("unknown status {:#04x}", h[6])))?;
        let len = u32::from_be_bytes([h[7], h[8], h[9], h[10]]) as usize;
        if len > MAX_PAYLOAD {
            return Err(Error::Protocol(format!("payload of {len} bytes exceeds cap")));
        }
        Ok((command, status, len))
    }

    /// Decodes exactly one frame occupying all of `bytes`.
    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let header: &[u8; HEADER_LEN] = bytes
            .get(..HEADER_LEN)
            .and_then(|h| h.try_into().ok())
            .ok_or_else(|| Error::Protocol("truncated header".into()))?;
        let (command, status, len) = Self::decode_header(header)?;
        let payload = &bytes[HEADER_LEN..];
        if payload.len() != len {
            return Err(Error::Protocol(format!("payload is {} bytes, header says {len}", payload.len())));
        }
        Ok(Self { command, status, payload: payload.to_vec() })
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut header = [0u8; HEADER_LEN];
        r.read_exact(&mut header)?;
        let (command, status, len) = Self::decode_header(&header)?;
        let mut payload = vec![0u8; len];
        r.read_exact(&mut payload)?;
        Ok(Self { command, status, payload })
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(&self.encode()?)?;
        w.flush()?;
        Ok(())
    }
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf29ce484222325u64, |h, &b| (h ^ b as u64).wrapping_mul(0x100000001b3))
}

/// Digest of the 64-byte key serialization, big-endian.
pub fn key_digest(key: &CipherKey) -> [u8; 8] {
    fnv1a64(&key.to_bytes()).to_be_bytes()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VaultEntry {
    pub image_id: u32,
    pub ciphertext: Vec<u8>,
    pub key_digest: [u8; 8],
}

/// Directory of `<id>.pnm` ciphertexts and `<id>.meta` digests. Writes take the lock
/// exclusively; reads share it.
#[derive(Debug)]
pub struct Vault {
    dir: PathBuf,
    lock: RwLock<()>,
}

impl Vault {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        if !dir.is_dir() {
            return Err(Error::InvalidArgument(format!("vault directory {} does not exist", dir.display())));
        }
        Ok(Self { dir, lock: RwLock::new(()) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn paths(&self, id: u32) -> (PathBuf, PathBuf) {
        (self.dir.join(format!("{id}.pnm")), self.dir.join(format!("{id}.meta")))
    }

    /// Encrypts and stores an image; duplicate ids are refused.
    pub fn put(&self, image_id: u32, key: &CipherKey, image: &[u8]) -> Result<VaultEntry> {
        let img = pnm::read_pnm(image)?;
        let ciphertext = pnm::write_pnm(&cipher::encrypt(&img, key)?);
        let entry = VaultEntry { image_id, ciphertext, key_digest: key_digest(key) };
        let _guard = self.lock.write().unwrap_or_else(|e| e.into_inner());
        let (img_path, meta_path) = self.paths(image_id);
        if meta_path.exists() || img_path.exists() {
            return Err(Error::Protocol(format!("image id {image_id} already stored")));
        }
        write_atomic(&img_path, &entry.ciphertext)?;
        write_atomic(&meta_path, &entry.key_digest)?;
        Ok(entry)
    }

    pub fn get(&self, image_id: u32) -> Result<Option<VaultEntry>> {
        let _guard = self.lock.read().unwrap_or_else(|e| e.into_inner());
        let (img_path, meta_path) = self.paths(image_id);
        let meta = match fs::read(&meta_path) {
            Ok(m) => m,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let key_digest: [u8; 8] = meta
            .try_into()
            .map_err(|_| Error::Protocol(format!("corrupt metadata for id {image_id}")))?;
        let ciphertext = fs::read(img_path)?;
        Ok(Some(VaultEntry { image_id, ciphertext, key_digest }))
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn split_id_key(payload: &[u8]) -> Result<(u32, CipherKey, &[u8])> {
    if payload.len() < 4 + KEY_LEN {
        return Err(Error::Protocol(format!("payload of {} bytes is too short", payload.len())));
    }
    let id = u32::from_be_bytes(payload[..4].try_into().expect("4 bytes"));
    let key = CipherKey::from_bytes(&payload[4..4 + KEY_LEN]).map_err(|e| Error::Protocol(e.to_string()))?;
    Ok((id, key, &payload[4 + KEY_LEN..]))
}

/// Produces the response for one request frame.
pub fn handle_request(vault: &Vault, req: &Frame) -> Frame {
    let protocol_error = |msg: String| Frame::response(Status::ProtocolError, msg.into_bytes());
    if req.status != Status::Ok {
        return protocol_error("requests must carry status 0".into());
    }
    match req.command {
        Command::Put => match split_id_key(&req.payload).and_then(|(id, key, img)| vault.put(id, &key, img)) {
            Ok(_) => Frame::response(Status::Ok, Vec::new()),
            Err(e) => protocol_error(e.to_string()),
        },
        Command::Get => {
            let (id, key, rest) = match split_id_key(&req.payload) {
                Ok(v) => v,
                Err(e) => return protocol_error(e.to_string()),
            };
            if !rest.is_empty() {
                return protocol_error("GET payload must be exactly 68 bytes".into());
            }
            match vault.get(id) {
                Ok(None) => Frame::response(Status::NotFound, Vec::new()),
                Ok(Some(entry)) if entry.key_digest != key_digest(&key) => {
                    Frame::response(Status::WrongKey, entry.ciphertext)
                }
                Ok(Some(entry)) => match pnm::read_pnm(&entry.ciphertext).and_then(|c| cipher::decrypt(&c, &key)) {
                    Ok(plain) => Frame::response(Status::Ok, pnm::write_pnm(&plain)),
                    Err(e) => protocol_error(e.to_string()),
                },
                Err(e) => protocol_error(e.to_string()),
            }
        }
        Command::Resp => protocol_error("unexpected response frame".into()),
    }
}

fn serve_connection(vault: &Vault, mut stream: TcpStream) -> Result<()> {
    stream.set_read_timeout(Some(IO_TIMEOUT))?;
    stream.set_write_timeout(Some(IO_TIMEOUT))?;
    let resp = match Frame::read_from(&mut stream) {
        Ok(req) => handle_request(vault, &req),
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::UnexpectedEof => {
            Frame::response(Status::ProtocolError, b"truncated frame".to_vec())
        }
        Err(Error::Io(e)) => return Err(e.into()),
        Err(e) => Frame::response(Status::ProtocolError, e.to_string().into_bytes()),
    };
    resp.write_to(&mut stream)?;
    let _ = stream.shutdown(Shutdown::Write);
    Ok(())
}

/// A bound listener not yet accepting.
pub struct Server {
    listener: TcpListener,
    vault: Arc<Vault>,
}

impl Server {
    pub fn bind(addr: impl ToSocketAddrs, vault_dir: impl Into<PathBuf>) -> Result<Self> {
        let vault = Arc::new(Vault::open(vault_dir)?);
        let listener = TcpListener::bind(addr)?;
        Ok(Self { listener, vault })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.listener.local_addr()?)
    }

    /// Accepts forever on the calling thread.
    pub fn serve(self) -> Result<()> {
        self.run(Arc::new(AtomicBool::new(false)))
    }

    fn run(self, stop: Arc<AtomicBool>) -> Result<()> {
        for conn in self.listener.incoming() {
            if stop.load(Ordering::SeqCst) {
                break;
            }
            let stream = match conn {
                Ok(s) => s,
                Err(_) => continue,
            };
            let vault = Arc::clone(&self.vault);
            thread::spawn(move || {
                let _ = serve_connection(&vault, stream);
            });
        }
        Ok(())
    }

    /// Accepts on a background thread until the handle is shut down.
    pub fn spawn(self) -> Result<ServerHandle> {
        let addr = self.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let flag = Arc::clone(&stop);
        let thread = thread::spawn(move || self.run(flag));
        Ok(ServerHandle { addr, stop, thread: Some(thread) })
    }
}

pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<Result<()>>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn shutdown(mut self) -> Result<()> {
        self.stop_and_join()
    }

    fn stop_and_join(&mut self) -> Result<()> {
        let Some(thread) = self.thread.take() else { return Ok(()) };
        self.stop.store(true, Ordering::SeqCst);
        // wake the blocking accept
        let _ = TcpStream::connect(self.addr);
        thread.join().map_err(|_| Error::Protocol("server thread panicked".into()))?
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        let _ = self.stop_and_join();
    }
}

/// Sends one request and reads the complete response.
pub fn request(addr: impl ToSocketAddrs, frame: &Frame) -> Result<Frame> {
    let mut stream = TcpStream::connect(addr)?;
    stream.set_read_timeout(Some(IO_TIMEOUT))?;
    stream.set_write_timeout(Some(IO_TIMEOUT))?;
    frame.write_to(&mut stream)?;
    let resp = Frame::read_from(&mut stream)?;
    if resp.command != Command::Resp {
        return Err(Error::Protocol("server replied with a request frame".into()));
    }
    Ok(resp)
}

fn id_key_payload(image_id: u32, key: &CipherKey) -> Vec<u8> {
    let mut p = image_id.to_be_bytes().to_vec();
    p.extend_from_slice(&key.to_bytes());
    p
}

/// Uploads a PNM image; the server encrypts and stores it.
pub fn put(addr: impl ToSocketAddrs, image_id: u32, key: &CipherKey, image: &[u8]) -> Result<Status> {
    let mut payload = id_key_payload(image_id, key);
    payload.extend_from_slice(image);
    let resp = request(addr, &Frame::request(Command::Put, payload))?;
    if resp.status == Status::ProtocolError {
        return Err(Error::Protocol(String::from_utf8_lossy(&resp.payload).into_owned()));
    }
    Ok(resp.status)
}

/// Plaintext PNM with `Status::Ok`, stored ciphertext with `Status::WrongKey`.
pub fn get(addr: impl ToSocketAddrs, image_id: u32, key: &CipherKey) -> Result<(Status, Vec<u8>)> {
    let resp = request(addr, &Frame::request(Command::Get, id_key_payload(image_id, key)))?;
    if resp.status == Status::ProtocolError {
        return Err(Error::Protocol(String::from_utf8_lossy(&resp.payload).into_owned()));
    }
    Ok((resp.status, resp.payload))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fnv_reference_vectors() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn header_layout() {
        let f = Frame::request(Command::Get, vec![9, 8, 7]);
        let bytes = f.encode().unwrap();
        assert_eq!(&bytes[..], &[b'M', b'H', b'D', b'N', 1, 0x02, 0x00, 0, 0, 0, 3, 9, 8, 7]);
        assert_eq!(Frame::decode(&bytes).unwrap(), f);
    }

    #[test]
    fn decoder_rejections() {
        let good = Frame::response(Status::NotFound, vec![]).encode().unwrap();
        assert!(Frame::decode(&good[..10]).is_err());
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(Frame::decode(&bad).is_err());
        let mut bad = good.clone();
        bad[4] = 2;
        assert!(Frame::decode(&bad).is_err());
        let mut bad = good.clone();
        bad[5] = 0x03;
        assert!(Frame::decode(&bad).is_err());
        let mut bad = good.clone();
        bad[7..11].copy_from_slice(&((MAX_PAYLOAD as u32) + 1).to_be_bytes());
        assert!(Frame::decode(&bad).is_err());
        let mut trailing = good;
        trailing.push(0);
        assert!(Frame::decode(&trailing).is_err());
    }

    fn any_frame() -> impl Strategy<Value = Frame> {
        let cmd = prop_oneof![Just(Command::Put), Just(Command::Get), Just(Command::Resp)];
        let st = prop_oneof![Just(Status::Ok), Just(Status::WrongKey), Just(Status::NotFound), Just(Status::ProtocolError)];
        (cmd, st, prop::collection::vec(any::<u8>(), 0..300))
            .prop_map(|(command, status, payload)| Frame { command, status, payload })
    }

    proptest! {
        #[test]
        fn codec_round_trip(f in any_frame()) {
            let bytes = f.encode().unwrap();
            prop_assert_eq!(Frame::decode(&bytes).unwrap(), f.clone());
            prop_assert_eq!(Frame::read_from(&mut &bytes[..]).unwrap(), f);
        }

        #[test]
        fn decoder_never_panics(data in prop::collection::vec(any::<u8>(), 0..64)) {
            let _ = Frame::decode(&data);
            let mut with_magic = b"MHDN\x01".to_vec();
            with_magic.extend(&data);
            let _ = Frame::decode(&with_magic);
        }
    }

    #[test]
    fn vault_put_get() {
        let dir = tempfile::tempdir().unwrap();
        let vault = Vault::open(dir.path()).unwrap();
        let key = crate::presets::reference_key();
        let img = pnm::write_pnm(&crate::testimage::gradient(5, 4, 3));
        let entry = vault.put(3, &key, &img).unwrap();
        assert_eq!(fs::read(dir.path().join("3.meta")).unwrap(), fnv1a64(&key.to_bytes()).to_be_bytes());
        assert_eq!(vault.get(3).unwrap().unwrap(), entry);
        assert!(vault.get(4).unwrap().is_none());
        assert!(vault.put(3, &key, &img).is_err());
        assert!(Vault::open(dir.path().join("missing")).is_err());
    }

    #[test]
    fn request_handling() {
        let dir = tempfile::tempdir().unwrap();
        let vault = Vault::open(dir.path()).unwrap();
        let key = crate::presets::reference_key();
        let mut payload = id_key_payload(1, &key);
        payload.extend(pnm::write_pnm(&crate::testimage::gradient(3, 3, 1)));
        assert_eq!(handle_request(&vault, &Frame::request(Command::Put, payload)).status, Status::Ok);
        let get = |k: &CipherKey, id| handle_request(&vault, &Frame::request(Command::Get, id_key_payload(id, k)));
        assert_eq!(get(&key, 1).status, Status::Ok);
        assert_eq!(get(&key, 2), Frame::response(Status::NotFound, vec![]));
        let mut wrong = key;
        wrong.m = 0.4;
        assert_eq!(get(&wrong, 1).status, Status::WrongKey);
        let mut bad = Frame::request(Command::Get, id_key_payload(1, &key));
        bad.status = Status::WrongKey;
        assert_eq!(handle_request(&vault, &bad).status, Status::ProtocolError);
        assert_eq!(handle_request(&vault, &Frame::request(Command::Get, vec![0; 5])).status, Status::ProtocolError);
        assert_eq!(handle_request(&vault, &Frame::response(Status::Ok, vec![])).status, Status::ProtocolError);
    }
}

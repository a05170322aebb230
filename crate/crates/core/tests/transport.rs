//! Socket-level behaviour of the vault server.

use std::io::{Read, Write};
use std::net::TcpStream;

use mhdnn::cipher::CipherKey;
use mhdnn::pnm::write_pnm;
use mhdnn::presets;
use mhdnn::testimage;
use mhdnn::transport::{self, Command, Frame, Server, Status, HEADER_LEN};

fn raw_exchange(addr: std::net::SocketAddr, bytes: &[u8]) -> Vec<u8> {
    let mut s = TcpStream::connect(addr).unwrap();
    s.write_all(bytes).unwrap();
    s.shutdown(std::net::Shutdown::Write).unwrap();
    let mut out = Vec::new();
    s.read_to_end(&mut out).unwrap();
    out
}

#[test]
fn adversarial_client_never_sees_plaintext() {
    let vault = tempfile::tempdir().unwrap();
    let server = Server::bind("127.0.0.1:0", vault.path()).unwrap().spawn().unwrap();
    let key = presets::reference_key();
    let plain = write_pnm(&testimage::natural(32, 32));
    assert_eq!(transport::put(server.addr(), 1, &key, &plain).unwrap(), Status::Ok);
    let stored = std::fs::read(vault.path().join("1.pnm")).unwrap();
    let raster = &plain[plain.len() - 32 * 32 * 3..];

    let mut guesses = vec![CipherKey::from_array([0.0; 8]).unwrap()];
    for i in 0..8 {
        let mut v = key.to_array();
        v[i] = f64::from_bits(v[i].to_bits() ^ 1);
        guesses.push(CipherKey::from_array(v).unwrap());
    }
    for guess in guesses {
        let mut payload = 1u32.to_be_bytes().to_vec();
        payload.extend_from_slice(&guess.to_bytes());
        let reply = raw_exchange(server.addr(), &Frame::request(Command::Get, payload).encode().unwrap());
        let frame = Frame::decode(&reply).unwrap();
        assert_eq!(frame.status, Status::WrongKey);
        assert_eq!(frame.payload, stored);
        assert!(!reply.windows(raster.len()).any(|w| w == raster));
    }
    server.shutdown().unwrap();
}

#[test]
fn concurrent_mixed_traffic() {
    let vault = tempfile::tempdir().unwrap();
    let server = Server::bind("127.0.0.1:0", vault.path()).unwrap().spawn().unwrap();
    let addr = server.addr();
    let key = presets::reference_key();
    let workers: Vec<_> = (0..16u32)
        .map(|id| {
            std::thread::spawn(move || {
                let img = write_pnm(&testimage::gradient(8 + id as usize, 5, 3));
                assert_eq!(transport::put(addr, id, &key, &img).unwrap(), Status::Ok);
                for _ in 0..4 {
                    let (st, got) = transport::get(addr, id, &key).unwrap();
                    assert_eq!(st, Status::Ok);
                    assert_eq!(got, img);
                }
            })
        })
        .collect();
    for w in workers {
        w.join().unwrap();
    }
    server.shutdown().unwrap();
}

#[test]
fn malformed_frames_get_protocol_errors() {
    let vault = tempfile::tempdir().unwrap();
    let server = Server::bind("127.0.0.1:0", vault.path()).unwrap().spawn().unwrap();
    let good_get = {
        let mut p = 5u32.to_be_bytes().to_vec();
        p.extend_from_slice(&presets::reference_key().to_bytes());
        Frame::request(Command::Get, p).encode().unwrap()
    };
    let mut bad_magic = good_get.clone();
    bad_magic[0] ^= 0xff;
    let mut short_payload = good_get[..HEADER_LEN].to_vec();
    short_payload[HEADER_LEN - 4..].copy_from_slice(&3u32.to_be_bytes());
    short_payload.extend([1, 2, 3]);
    for bad in [bad_magic, good_get[..HEADER_LEN - 1].to_vec(), good_get[..good_get.len() - 1].to_vec(), short_payload] {
        let reply = raw_exchange(server.addr(), &bad);
        assert_eq!(Frame::decode(&reply).unwrap().status, Status::ProtocolError);
    }
    let reply = Frame::decode(&raw_exchange(server.addr(), &good_get)).unwrap();
    assert_eq!(reply.status, Status::NotFound);
    server.shutdown().unwrap();
}

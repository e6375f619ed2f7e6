#![allow(dead_code)]

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn moralnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_moralnet"))
        .args(args)
        .env("RUST_LOG", "warn")
        .env_remove("MORALNET_API_KEY")
        .output()
        .expect("spawn moralnet")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Every file in `dir` (recursively) with its bytes.
pub fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

/// Chat-completion stand-in. Each cue gets the fixed answer
/// `"<cue>1, <cue>2, common"`; the counter tracks requests served.
pub struct MockServer {
    pub url: String,
    pub requests: Arc<AtomicUsize>,
}

pub fn mock_server() -> MockServer {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let requests = Arc::new(AtomicUsize::new(0));
    let counter = requests.clone();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(stream) = stream else { continue };
            let counter = counter.clone();
            std::thread::spawn(move || {
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0;
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 {
                        return;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                    if line == "\r\n" {
                        break;
                    }
                }
                let mut body = vec![0; len];
                reader.read_exact(&mut body).unwrap();
                let json: serde_json::Value = serde_json::from_slice(&body).unwrap();
                let user = json["messages"][1]["content"].as_str().unwrap_or("");
                let cue = user.trim_start_matches("Cue word: ");
                counter.fetch_add(1, Ordering::SeqCst);
                let reply = serde_json::json!({
                    "choices": [{"message": {"role": "assistant", "content": format!("{cue}1, {cue}2, common")}}]
                })
                .to_string();
                let mut stream = stream;
                let _ = write!(
                    stream,
                    "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                    reply.len()
                );
            });
        }
    });
    MockServer { url, requests }
}

/// A corpus with a tight "vice" community `v0..v7` and a looser crowd of
/// `w00..w39`, with a few bridges. Returns (responses CSV, community words).
pub fn community_corpus(seed: u64) -> (String, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let community: Vec<String> = (0..8).map(|i| format!("v{i}")).collect();
    let crowd: Vec<String> = (0..40).map(|i| format!("w{i:02}")).collect();
    let mut csv = String::from("cue,R1,R2,R3\n");
    for (i, cue) in community.iter().enumerate() {
        for _ in 0..30 {
            let picks: Vec<&str> = (0..3)
                .map(|_| loop {
                    let j = rng.random_range(0..community.len());
                    if j != i {
                        break community[j].as_str();
                    }
                })
                .collect();
            csv.push_str(&format!("{cue},{},{},{}\n", picks[0], picks[1], picks[2]));
        }
    }
    for (i, cue) in crowd.iter().enumerate() {
        for _ in 0..30 {
            let picks: Vec<&str> = (0..3)
                .map(|_| {
                    if rng.random_bool(0.02) {
                        community[rng.random_range(0..community.len())].as_str()
                    } else {
                        // neighbors on a ring plus random chords keep the crowd connected
                        let off = if rng.random_bool(0.7) { 1 } else { rng.random_range(2..crowd.len()) };
                        crowd[(i + off) % crowd.len()].as_str()
                    }
                })
                .collect();
            csv.push_str(&format!("{cue},{},{},{}\n", picks[0], picks[1], picks[2]));
        }
    }
    (csv, community)
}

/// Hard lexicon for [`community_corpus`]: one vice seed in the community,
/// virtue seeds in the crowd.
pub const COMMUNITY_MFD: &str = "word,care,fairness,loyalty,authority,sanctity\n\
v0,-1,,,,-1\n\
w00,1,1,,,\n\
w10,,1,1,,\n\
w20,,,1,1,\n\
w30,1,,,1,1\n\
unseen,1,,,,\n";

pub const NORMS_HEADER: &str = "word,score\n";

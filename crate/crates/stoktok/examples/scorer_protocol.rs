//! Attaching an external scorer over the line-delimited JSON protocol.
//!
//! A toy "model" serves log-probabilities on a TCP socket; the harness
//! connects with ProtoScorer and runs the greedy attack through it. The
//! same protocol works over a subprocess's stdin/stdout (see the
//! `scorer-serve` CLI subcommand). In-context prompts are assembled with
//! icl_prompt and scored through the identical contract.
//!
//! Run with: cargo run --example scorer_protocol

use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::path::Path;

use stoktok::adversarial::{greedy_attack, icl_prompt, AttackConfig, McqInstance, ProtoScorer, Scorer};
use stoktok::vocab::{decode, encode_canonical, Vocabulary};

fn main() -> stoktok::Result<()> {
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let addr = listener.local_addr()?;

    // One request per line: {"context": [ids], "continuation": [ids]}.
    // One response per line: {"logprob": value}.
    let server = std::thread::spawn(move || {
        let (stream, _) = listener.accept().expect("client connects");
        let mut reader = BufReader::new(stream.try_clone().expect("clone"));
        let mut writer = stream;
        let mut line = String::new();
        while reader.read_line(&mut line).expect("read") > 0 {
            let req: serde_json::Value = serde_json::from_str(&line).expect("request json");
            let ctx = req["context"].as_array().expect("ids").len() as f64;
            let cont = req["continuation"].as_array().expect("ids").len() as f64;
            let logprob = -(4.0 * (32.0 - cont.min(32.0)) + ctx * cont);
            writeln!(writer, "{}", serde_json::json!({ "logprob": logprob })).expect("write");
            line.clear();
        }
    });

    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let vocab = Vocabulary::load(&dir.join("mcq_vocab.json"), &dir.join("mcq_merges.txt"))?;
    let scorer = ProtoScorer::tcp(&addr.to_string())?;
    println!("connected to scorer at {addr} (single-flight: {})", scorer.single_flight());

    let instance = McqInstance {
        question: "iejeiagaca".into(),
        options: vec!["qrst".into(), "q".into(), "qr".into()],
        label: 0,
    };
    let result = greedy_attack(&scorer, &instance, &AttackConfig::default(), &vocab)?;
    println!(
        "attack over the wire: {} iterations, success = {}, margins {:?}",
        result.iterations, result.success, result.margins
    );

    // The same scorer contract covers in-context prompts.
    let q = encode_canonical(b"iejeiagaca", &vocab, false);
    let a = encode_canonical(b"qrst", &vocab, false);
    let query = encode_canonical(b"ahbihfdkabbd", &vocab, false);
    let sep = encode_canonical(b"\n", &vocab, false);
    let prompt = icl_prompt(&[(q, a)], &query, &sep);
    let z = scorer.score(prompt.ids(), encode_canonical(b"qr", &vocab, false).ids())?;
    println!(
        "one-shot prompt of {} tokens decodes to {:?}...; score {z:.1}",
        prompt.len(),
        String::from_utf8_lossy(&decode(&prompt, &vocab)?[..14])
    );

    drop(scorer);
    server.join().expect("server thread");
    Ok(())
}

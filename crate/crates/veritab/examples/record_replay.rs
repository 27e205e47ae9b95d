//! Records a model exchange into a content-addressed cache, replays it
//! offline, and shows that replay keys ignore line-ending and trailing
//! whitespace noise while any truly new request is a hard cache miss.
//!
//! Run with: cargo run --example record_replay

use std::error::Error;
use std::fs;

use veritab::gateway::{
    ChatMessage, ChatRequest, Gateway, GatewayError, GenerationParams, Mode, ModelEndpoint,
    ScriptStep,
};

fn endpoints() -> Vec<ModelEndpoint> {
    vec![ModelEndpoint::new("scripted-model")]
}

fn request(question: &str) -> ChatRequest {
    ChatRequest {
        endpoint: "scripted-model".into(),
        messages: vec![
            ChatMessage::system("You verify claims against tables."),
            ChatMessage::user(question),
        ],
        params: GenerationParams::default(),
    }
}

fn main() -> Result<(), Box<dyn Error>> {
    let dir = tempfile::tempdir()?;

    // Pass 1: a scripted backend answers and the response is written to
    // the cache, keyed by a digest of the canonicalized request.
    let recorder = Gateway::scripted(
        endpoints(),
        vec![ScriptStep::Reply(
            "Reused water covered 55.82% of operational use.".into(),
        )],
    )
    .with_replay(dir.path(), Mode::Record)?;
    let recorded = recorder.complete(&request("What share of operational water was reused?"))?;
    println!("recorded: {:?}", recorded.content);

    let entries: Vec<String> = fs::read_dir(dir.path())?
        .map(|e| Ok(e?.file_name().to_string_lossy().into_owned()))
        .collect::<Result<_, std::io::Error>>()?;
    println!("cache entries: {entries:?}");

    // Pass 2: no backend replies left, so every answer must come from the
    // cache. Carriage returns and trailing whitespace in the request do
    // not change its key.
    let replayer = Gateway::scripted(endpoints(), Vec::new())
        .with_replay(dir.path(), Mode::Replay)?;
    let noisy = request("What share of operational water was reused?  \r\n");
    let replayed = replayer.complete(&noisy)?;
    println!("replayed: {:?}", replayed.content);
    assert_eq!(replayed.content, recorded.content);
    assert_eq!(replayed.attempts, recorded.attempts);

    // A question that was never recorded cannot be answered offline.
    match replayer.complete(&request("What were total emissions?")) {
        Err(GatewayError::CacheMiss { digest }) => {
            println!("unrecorded request: cache miss at digest {}...", &digest[..12]);
        }
        other => panic!("expected a cache miss, got {other:?}"),
    }
    Ok(())
}

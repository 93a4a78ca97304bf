mod common;

use common::{dead_url, TestServer};
use defsim_core::embedding::{Embedder, ProviderConfig};
use defsim_core::generation::{
    generate_composites, GenerationConfig, HttpChatClient, PromptBundle,
};
use defsim_core::{fixtures, matrix, rank, Error, SelfExclusion};
use serde_json::json;

const NUMBERED: &str = "Here you go:\n\n\
1. A smart city applies sensors and data to run services efficiently.\n\
2. A smart city uses ICT to improve quality of life.\n\
3. Urban areas that use digital networks for sustainable growth.\n";

#[test]
fn chat_wire_contract_and_ranking() {
    let server = TestServer::start(|rec| {
        let msgs = rec.json()["messages"].as_array().unwrap().len();
        let content = if msgs == 1 {
            "A smart city integrates digital technology and sensors to improve services."
        } else {
            NUMBERED
        };
        (200, json!({ "content": content }).to_string())
    });
    let corpus = fixtures::individual_60();
    let config = GenerationConfig {
        endpoint: Some(server.url.clone()),
        n_definitions: 4,
        ..Default::default()
    };
    let client = HttpChatClient::from_config(&config).unwrap();
    let g = generate_composites(
        &corpus,
        &config,
        &PromptBundle::for_config(&corpus, &config),
        &client,
    )
    .unwrap();
    assert_eq!(g.corpus.ids(), vec!["gen-1", "gen-2", "gen-3", "gen-4"]);
    assert_eq!(
        g.corpus.get("gen-4").unwrap().text,
        "Urban areas that use digital networks for sustainable growth."
    );

    let reqs = server.recorded();
    assert_eq!(reqs.len(), 2);
    assert!(reqs.iter().all(|r| r.path == "/chat" && r.method == "POST"));
    let second = reqs[1].json();
    assert_eq!(second["model_id"], "gpt-4");
    assert_eq!(second["temperature"], 0.7);
    let roles: Vec<&str> = second["messages"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["role"].as_str().unwrap())
        .collect();
    assert_eq!(roles, vec!["user", "assistant", "user"]);
    assert_eq!(
        second["messages"][2]["content"],
        "Produce another 3 different definitions, limit each to 35 words."
    );

    // Generated composites go straight into the consensus stage.
    let e = Embedder::from_config(&ProviderConfig::local(256)).unwrap();
    let m = matrix(
        &e.embed_corpus(&g.corpus).unwrap(),
        &e.embed_corpus(&corpus).unwrap(),
    )
    .unwrap();
    let report = rank(&m, &SelfExclusion::by_id(), "individual-60").unwrap();
    assert_eq!(report.rows.len(), 4);
}

#[test]
fn chat_failures() {
    let corpus = fixtures::baseline();
    let mut config = GenerationConfig {
        endpoint: Some(dead_url()),
        n_definitions: 1,
        ..Default::default()
    };
    let client = HttpChatClient::from_config(&config).unwrap();
    let err = generate_composites(
        &corpus,
        &config,
        &PromptBundle::for_config(&corpus, &config),
        &client,
    )
    .unwrap_err();
    assert!(matches!(err, Error::ProviderUnavailable(_)));

    let server = TestServer::start(|_| (200, r#"{"text": "wrong field"}"#.into()));
    config.endpoint = Some(server.url.clone());
    let client = HttpChatClient::from_config(&config).unwrap();
    let err = generate_composites(
        &corpus,
        &config,
        &PromptBundle::for_config(&corpus, &config),
        &client,
    )
    .unwrap_err();
    assert!(matches!(err, Error::ProviderUnavailable(_)));

    config.endpoint = None;
    assert!(matches!(
        HttpChatClient::from_config(&config),
        Err(Error::InvalidConfig(_))
    ));
}

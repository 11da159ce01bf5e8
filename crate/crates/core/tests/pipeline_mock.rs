mod common;

use common::*;
use ontodraft::llm::{Backend, Gateway, GatewayError, ModelConfig};
use ontodraft::pipeline::{generate_incremental, generate_independent, load_run_dir, write_run_dir, CqResult, Mode, PipelineError};
use ontodraft::prompt::{build_memoryless_prompt, Technique};
use proptest::prelude::*;

fn mock(name: &str) -> Gateway {
    Gateway::new(ModelConfig::mock(fixtures().join("mock").join(name))).unwrap()
}

fn http(url: &str) -> ModelConfig {
    ModelConfig::from_toml(&format!(
        "endpoint_url = \"{url}/v1/chat/completions\"\nmodel = \"m\"\nretry_base_ms = 1\nmax_retries = 3\n"
    ))
    .unwrap()
}

fn completion(text: &str) -> String {
    serde_json::json!({ "choices": [{ "message": { "role": "assistant", "content": text } }] }).to_string()
}

#[test]
fn every_mode_and_technique_generates_the_library() {
    let case = case("library");
    let gw = mock("library");
    for technique in Technique::ALL {
        for run in [
            generate_independent(&case, technique, &gw).unwrap(),
            generate_incremental(&case, technique, &gw).unwrap(),
        ] {
            assert_eq!(run.failures().count(), 0, "{}", run.run_id);
            assert_eq!(run.per_cq.len(), 3);
            let sum: usize = run.per_cq.iter().filter_map(|(_, r)| r.ontology()).map(|o| o.len()).sum();
            assert!(run.merged.len() <= sum && !run.merged.is_empty());
        }
    }
}

#[test]
fn missing_reply_fails_only_that_cq() {
    let mut case = case("library");
    case.cqs[1].id = "cq99".into();
    let run = generate_independent(&case, Technique::MemorylessCQbyCQ, &mock("library")).unwrap();
    let failures: Vec<_> = run.failures().map(|(id, _)| id.to_string()).collect();
    assert_eq!(failures, vec!["cq99"]);
    assert!(matches!(run.result("cq01"), Some(CqResult::Generated(_))));
}

#[test]
fn ontogenia_incremental_prompts_carry_the_prior() {
    let case = case("library");
    let run = generate_incremental(&case, Technique::Ontogenia, &mock("library")).unwrap();
    let first = &run.prompts["cq01"].text;
    let last = &run.prompts["cq03"].text;
    assert!(!first.contains("ex:Library a owl:Class"));
    assert!(last.contains("Library"));
    assert!(run.prompts["cq03"].char_length > run.prompts["cq02"].char_length);
}

#[test]
fn run_dir_round_trips() {
    let case = case("library");
    let run = generate_independent(&case, Technique::MemorylessCQbyCQ, &mock("library")).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let dir = write_run_dir(&run, tmp.path(), false).unwrap();
    let loaded = load_run_dir(&dir).unwrap();
    assert_eq!(loaded.manifest.mode, Mode::Independent);
    assert_eq!(triple_set(&loaded.merged), triple_set(&run.merged));
    assert_eq!(loaded.partials.len(), 3);
    assert!(write_run_dir(&run, tmp.path(), false).is_err());
    assert!(write_run_dir(&run, tmp.path(), true).is_ok());
}

#[test]
fn gateway_retries_rate_limits_then_succeeds() {
    let (url, server) = serve(vec![
        (429, "{}".into()),
        (503, "{}".into()),
        (200, completion("```turtle\nex:A a owl:Class .\n```")),
    ]);
    let gw = Gateway::new(http(&url)).unwrap();
    let case = case("library");
    let (reply, transcript) = gw.complete(&build_memoryless_prompt(&case.story, &case.cqs[0]));
    let reply = reply.unwrap();
    assert_eq!(reply.attempt, 3);
    assert!(reply.text.contains("ex:A"));
    let statuses: Vec<_> = transcript.attempts.iter().map(|a| a.status).collect();
    assert_eq!(statuses, vec![Some(429), Some(503), Some(200)]);
    let seen = server.join().unwrap();
    assert!(seen.iter().all(|l| l.starts_with("POST /v1/chat/completions")));
}

#[test]
fn auth_rejection_aborts_the_run() {
    let (url, server) = serve(vec![(401, "{}".into())]);
    let mut cfg = http(&url);
    cfg.concurrency = 1;
    let case = case("library").truncated(1);
    let err = generate_independent(&case, Technique::MemorylessCQbyCQ, &Gateway::new(cfg).unwrap()).unwrap_err();
    assert_eq!(err, PipelineError::Auth(GatewayError::Auth { status: 401 }));
    server.join().unwrap();
}

#[test]
fn client_errors_are_not_retried() {
    let (url, server) = serve(vec![(400, "bad".into())]);
    let gw = Gateway::new(http(&url)).unwrap();
    let case = case("library");
    let (reply, _) = gw.complete(&build_memoryless_prompt(&case.story, &case.cqs[0]));
    assert_eq!(reply.unwrap_err(), GatewayError::Http { status: 400, body: "bad".into() });
    assert_eq!(server.join().unwrap().len(), 1);
}

#[test]
fn unreachable_endpoint_exhausts_retries() {
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut cfg = http(&format!("http://127.0.0.1:{port}"));
    cfg.max_retries = 1;
    assert_eq!(cfg.backend, Backend::Http);
    let case = case("library");
    let (reply, transcript) = Gateway::new(cfg).unwrap().complete(&build_memoryless_prompt(&case.story, &case.cqs[0]));
    assert!(matches!(reply, Err(GatewayError::Transport { attempts: 2, .. })));
    assert_eq!(transcript.attempts.len(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn memoryless_merge_ignores_cq_order(order in Just(vec![0usize, 1, 2]).prop_shuffle()) {
        let case = case("library");
        let mut shuffled = case.clone();
        shuffled.cqs = order.iter().map(|&i| case.cqs[i].clone()).collect();
        let gw = mock("library");
        for mode in [Mode::Independent, Mode::Incremental] {
            let gen = |c| match mode {
                Mode::Independent => generate_independent(c, Technique::MemorylessCQbyCQ, &gw),
                Mode::Incremental => generate_incremental(c, Technique::MemorylessCQbyCQ, &gw),
            };
            prop_assert_eq!(triple_set(&gen(&case).unwrap().merged), triple_set(&gen(&shuffled).unwrap().merged));
        }
    }
}

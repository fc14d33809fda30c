use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::action::{ActionKind, Platform};
use crate::dataset::cost::CostLedger;
use crate::env::{pointer_action, reset};
use crate::fixtures;

fn reasoner(replies: &[&str]) -> (RemoteReasoner, std::sync::Arc<FixtureTransport>) {
    let t = std::sync::Arc::new(FixtureTransport::texts(replies.iter().copied()));
    struct Shared(std::sync::Arc<FixtureTransport>);
    impl ChatTransport for Shared {
        fn send(&self, r: &ChatRequest) -> Result<ChatResponse, TransportError> {
            self.0.send(r)
        }
    }
    (RemoteReasoner::new(Box::new(Shared(t.clone())), ReasonerConfig::default()), t)
}

struct Run {
    ledger: CostLedger,
    rng: ChaCha8Rng,
}

impl Run {
    fn new() -> Self {
        Self { ledger: CostLedger::default(), rng: ChaCha8Rng::seed_from_u64(0) }
    }
    fn ctx<'a>(&'a mut self, world: &'a GuiWorld) -> ReasonCtx<'a> {
        ReasonCtx { world, ledger: &mut self.ledger, rng: &mut self.rng }
    }
}

#[test]
fn infer_goal_parses_fixture_reply() {
    let world = fixtures::clock(Platform::Mobile);
    let state = reset(&world, "clock").unwrap();
    let (r, t) = reasoner(&[
        r#"{"thoughts": "alarms are next", "task": "Open Set alarm and create a 7am alarm", "action": "Click(270, 300)", "app": "Clock"}"#,
    ]);
    let mut run = Run::new();
    let goal = r.infer_goal(&mut run.ctx(&world), &state, &[]).unwrap();
    assert_eq!(goal.origin, GoalOrigin::Inferred);
    assert_eq!(goal.success_spec, SuccessSpec::Landmarks { app: AppId("clock".into()), labels: vec!["Set alarm".into()] });
    assert_eq!(
        goal.success_spec.target_screens(&world),
        std::collections::BTreeSet::from([crate::env::ScreenKey::new("clock", "set")])
    );
    assert_eq!(run.ledger.entries.len(), 1);
    assert!(run.ledger.entries[0].usage.prompt_tokens > 0);
    let req = &t.requests()[0];
    assert_eq!(req.messages[0].content, prompts::NEXT_TASK_PREDICT_SYSTEM.trim_end());
    assert!(req.messages[1].content.starts_with("Given the history"));
}

#[test]
fn select_action_decodes_and_checks_legality() {
    let world = fixtures::clock(Platform::Mobile);
    let state = reset(&world, "clock").unwrap();
    let alarms = world.visible_elements(&state).find(|e| e.label == "Alarms").unwrap();
    let click = pointer_action(ActionKind::Click, alarms).unwrap();
    let goal = Goal {
        task_text: "Set alarm".into(),
        first_action_hint: String::new(),
        app: AppId("clock".into()),
        success_spec: SuccessSpec::Landmarks { app: AppId("clock".into()), labels: vec!["Set alarm".into()] },
        origin: GoalOrigin::Inferred,
    };
    let reply = format!(r#"{{"thoughts": "t", "action": "{}"}}"#, crate::action::encode_action(&click));
    let (r, _) = reasoner(&[&reply, r#"{"action": "HotKey(\"ctrl+c\")"}"#, r#"{"action": "Click(1, 1)"}"#]);
    let mut run = Run::new();
    assert_eq!(r.select_action(&mut run.ctx(&world), &state, &goal, &[]).unwrap(), click);
    assert!(matches!(
        r.select_action(&mut run.ctx(&world), &state, &goal, &[]),
        Err(ReasonerError::ReplyIllegalAction(_))
    ));
    assert!(matches!(
        r.select_action(&mut run.ctx(&world), &state, &goal, &[]),
        Err(ReasonerError::ReplyIllegalAction(_))
    ));
    assert_eq!(run.ledger.entries.len(), 3, "illegal actions are not retried");
}

#[test]
fn unparseable_replies_are_retried_with_a_note_and_billed() {
    let world = fixtures::clock(Platform::Mobile);
    let state = reset(&world, "clock").unwrap();
    let (r, t) = reasoner(&["I think you should tap", "{\"task\": ", r#"{"task": "Open Timer"}"#]);
    let mut run = Run::new();
    let goal = r.infer_goal(&mut run.ctx(&world), &state, &[]).unwrap();
    assert_eq!(goal.task_text, "Open Timer");
    assert_eq!(run.ledger.entries.len(), 3);
    let reqs = t.requests();
    assert!(!reqs[0].messages[1].content.contains("previous reply was rejected"));
    assert!(reqs[1].messages[1].content.contains("previous reply was rejected"));
    assert!(reqs[2].messages[1].content.contains("previous reply was rejected"));
}

#[test]
fn retries_are_bounded() {
    let world = fixtures::clock(Platform::Mobile);
    let state = reset(&world, "clock").unwrap();
    let (r, _) = reasoner(&["nope", "nope", "nope", r#"{"task": "late"}"#]);
    let mut run = Run::new();
    assert!(matches!(r.infer_goal(&mut run.ctx(&world), &state, &[]), Err(ReasonerError::ReplyUnparseable(_))));
    assert_eq!(run.ledger.entries.len(), 3, "one call plus max_retries = 2");
}

#[test]
fn cross_app_reply_naming_the_current_app_fails_after_retries() {
    let world = fixtures::map_chrome_clock(Platform::Mobile);
    let state = reset(&world, "map").unwrap();
    let same = r#"{"thoughts": "t", "task": "Search nearby", "action": "Click(1, 1)", "app": "Maps"}"#;
    let (r, _) = reasoner(&[same, same, same]);
    let mut run = Run::new();
    let err = r.propose_cross_app_goal(&mut run.ctx(&world), "s", &[], &[], &state, &world.app_ids());
    assert!(matches!(err, Err(ReasonerError::ReplyWrongApp(_))));
    assert_eq!(run.ledger.entries.len(), 3);

    let (r, _) = reasoner(&[r#"{"task": "Look up \"Search results\"", "app": "Chrome"}"#]);
    let goal = r.propose_cross_app_goal(&mut run.ctx(&world), "s", &[], &[], &state, &world.app_ids()).unwrap();
    assert_eq!(goal.app, AppId("chrome".into()));
    assert_eq!(goal.origin, GoalOrigin::CrossApp);

    let (r, _) = reasoner(&[]);
    let one = [AppId("map".into())];
    let err = r.propose_cross_app_goal(&mut run.ctx(&world), "s", &[], &[], &state, &one);
    assert!(matches!(err, Err(ReasonerError::Precondition(_))));
}

#[test]
fn summary_and_annotation_replies() {
    let world = fixtures::clock(Platform::Mobile);
    let state = reset(&world, "clock").unwrap();
    let (r, _) = reasoner(&[
        r#"{"thoughts": "t", "instruction": "Wait for the clock to load."}"#,
        r#"```json
{"thoughts": "t", "task": "Set a 7am alarm"}
```"#,
    ]);
    let mut run = Run::new();
    assert_eq!(
        r.annotate_step(&mut run.ctx(&world), &state, &Action::Wait, &state).unwrap(),
        "Wait for the clock to load."
    );
    let steps = vec![(state.clone(), "Wait.".to_string())];
    assert_eq!(r.summarize_stride(&mut run.ctx(&world), &steps, &[], None).unwrap(), "Set a 7am alarm");
    assert_eq!(r.summarize_stride(&mut run.ctx(&world), &[], &[], None), Err(ReasonerError::EmptyTrajectory));
}

#[test]
fn text_input_falls_back_to_label() {
    let world = fixtures::severed(Platform::Mobile);
    let state = reset(&world, "health").unwrap();
    let field = world.app_by_str("health").unwrap().screens[1].elements[1].clone();
    let (r, _) = reasoner(&[r#"{"text": "Penicillin"}"#]);
    let mut run = Run::new();
    assert_eq!(r.generate_text_input(&mut run.ctx(&world), &state, &field), "Penicillin");
    assert_eq!(r.generate_text_input(&mut run.ctx(&world), &state, &field), "Allergies");
}

#[test]
fn revise_goal_must_differ() {
    let world = fixtures::severed(Platform::Mobile);
    let state = reset(&world, "health").unwrap();
    let failed = Goal {
        task_text: "Open Emergency".into(),
        first_action_hint: String::new(),
        app: AppId("health".into()),
        success_spec: SuccessSpec::Landmarks { app: AppId("health".into()), labels: vec!["Emergency".into()] },
        origin: GoalOrigin::Inferred,
    };
    let (r, _) = reasoner(&[
        r#"{"task": "Open Emergency again", "app": "Health"}"#,
        r#"{"task": "Search the web for \"emergency numbers\" in Search results", "app": "chrome"}"#,
    ]);
    let mut run = Run::new();
    let g = r.revise_goal(&mut run.ctx(&world), &state, &failed, "stuck").unwrap();
    assert_eq!(g.origin, GoalOrigin::Revised);
    assert_eq!(g.app, AppId("chrome".into()));
    assert_ne!(g.success_spec, failed.success_spec);
}

#[test]
fn wire_response_usage_is_preferred() {
    let body = r#"{"choices": [{"message": {"role": "assistant", "content": "{\"task\": \"x\"}"}}], "usage": {"prompt_tokens": 11, "completion_tokens": 3, "total_tokens": 14}}"#;
    let resp = parse_wire_response(body).unwrap();
    assert_eq!(resp.usage, Some(TokenUsage { prompt_tokens: 11, completion_tokens: 3 }));
    assert!(matches!(parse_wire_response("{}"), Err(TransportError::Malformed(_))));
}

/// Serves `n` canned HTTP responses, returning the request heads it saw.
fn serve(bodies: Vec<(u16, String)>) -> (String, std::thread::JoinHandle<Vec<String>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let handle = std::thread::spawn(move || {
        let mut heads = Vec::new();
        for (status, body) in bodies {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream);
            let mut head = String::new();
            let mut len = 0usize;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                head.push_str(&line);
            }
            let mut payload = vec![0; len];
            reader.read_exact(&mut payload).unwrap();
            head.push_str(&String::from_utf8(payload).unwrap());
            heads.push(head);
            let mut stream = reader.into_inner();
            write!(
                stream,
                "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
        heads
    });
    (format!("http://{addr}/v1/chat/completions"), handle)
}

#[test]
fn http_transport_round_trip() {
    let ok = serde_json::json!({
        "choices": [{"message": {"role": "assistant", "content": "{\"task\": \"Open Timer\"}"}}],
        "usage": {"prompt_tokens": 40, "completion_tokens": 6}
    })
    .to_string();
    let (endpoint, server) = serve(vec![(503, "busy".into()), (200, ok)]);
    let config = ReasonerConfig { endpoint, timeout_secs: 5, ..ReasonerConfig::default() };
    let transport = HttpTransport::new(&config, Some("sk-test".into())).unwrap();
    let r = RemoteReasoner::new(Box::new(transport), config);
    let world = fixtures::clock(Platform::Mobile);
    let state = reset(&world, "clock").unwrap();
    let mut run = Run::new();
    let goal = r.infer_goal(&mut run.ctx(&world), &state, &[]).unwrap();
    assert_eq!(goal.task_text, "Open Timer");
    assert_eq!(run.ledger.entries.len(), 2, "the failed request is billed too");
    assert_eq!(run.ledger.entries[1].usage, TokenUsage { prompt_tokens: 40, completion_tokens: 6 });
    let heads = server.join().unwrap();
    assert!(heads[0].to_ascii_lowercase().contains("authorization: bearer sk-test"));
    assert!(heads[0].contains("\"model\":\"gpt-4o-mini\""));
}

//! The engine worker: sole owner of the engine, fed through an ordered
//! input queue, publishing one state message per tick.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::sync::mpsc::{Receiver, RecvTimeoutError};
use std::sync::Arc;
use std::time::{Duration, Instant};

use tokio::sync::{broadcast, mpsc};

use morphkit_core::{Command, Engine, EngineEvent, MorphSpec, Scene, TraceStep};

use crate::protocol::{error_message, state_message, ClientMessage};

/// A client message plus the channel its error replies go to.
pub struct Input {
    pub message: ClientMessage,
    pub reply: mpsc::UnboundedSender<Arc<str>>,
}

/// Replayable capture of a live session: the trace of applied scene
/// commands and the resulting event log, both JSONL.
pub struct Recorder {
    trace: BufWriter<File>,
    events: BufWriter<File>,
}

impl Recorder {
    pub fn create(dir: &PathBuf) -> std::io::Result<Recorder> {
        std::fs::create_dir_all(dir)?;
        Ok(Recorder {
            trace: BufWriter::new(File::create(dir.join("trace.jsonl"))?),
            events: BufWriter::new(File::create(dir.join("events.jsonl"))?),
        })
    }

    fn record(&mut self, tick: u64, commands: &[Command], events: &[EngineEvent]) -> std::io::Result<()> {
        for c in commands {
            let step = TraceStep { tick, command: c.clone() };
            writeln!(self.trace, "{}", step.to_json())?;
        }
        for e in events {
            writeln!(self.events, "{}", e.to_jsonl())?;
        }
        self.trace.flush()?;
        self.events.flush()
    }
}

fn reject(input: &Input, message: &str) {
    let _ = input.reply.send(error_message(message).into());
}

/// Applies a load immediately. Morph or scene errors go back to the sender
/// only; the session continues unchanged.
fn load(engine: &mut Engine, input: &Input, morphs: &Option<Vec<serde_json::Value>>, scene: &Option<serde_json::Value>) -> Vec<EngineEvent> {
    let parsed_scene = match scene {
        None => None,
        Some(v) => match Scene::from_json(&v.to_string()) {
            Ok(s) => Some(s),
            Err(e) => {
                reject(input, &format!("scene rejected: {e}"));
                return Vec::new();
            }
        },
    };
    let parsed_morphs = match morphs {
        None => None,
        Some(list) => {
            let mut out = Vec::new();
            for (i, v) in list.iter().enumerate() {
                match MorphSpec::from_json(v) {
                    Ok(m) => out.push(m),
                    Err(e) => {
                        let detail: Vec<String> = e.diagnostics().iter().map(|d| d.to_string()).collect();
                        reject(input, &format!("morph {i} rejected: {}", detail.join("; ")));
                        return Vec::new();
                    }
                }
            }
            Some(out)
        }
    };
    let mut ev = Vec::new();
    if let Some(m) = parsed_morphs {
        match engine.load_morphs(m) {
            Ok(e) => ev.extend(e),
            Err(e) => {
                reject(input, &e.to_string());
                return ev;
            }
        }
    }
    if let Some(s) = parsed_scene {
        ev.extend(engine.replace_scene(s));
    }
    ev
}

/// Runs until every input sender is dropped. Commands are stamped with the
/// tick they are applied on.
pub fn run(
    mut engine: Engine,
    hz: f64,
    inputs: Receiver<Input>,
    out: broadcast::Sender<Arc<str>>,
    mut recorder: Option<Recorder>,
) {
    let period = Duration::from_secs_f64(1.0 / hz);
    let mut next = Instant::now();
    loop {
        let mut commands = Vec::new();
        let mut early = Vec::new();
        loop {
            let wait = next.saturating_duration_since(Instant::now());
            let input = match inputs.recv_timeout(wait) {
                Ok(i) => i,
                Err(RecvTimeoutError::Timeout) => break,
                Err(RecvTimeoutError::Disconnected) => return,
            };
            match &input.message {
                ClientMessage::Command(c) => commands.push(c.clone()),
                ClientMessage::Seek(s) => commands.push(Command::SetUiValue {
                    id: s.id.clone(),
                    value: s.value,
                }),
                ClientMessage::Load { morphs, scene } => {
                    let (m, s) = (morphs.clone(), scene.clone());
                    early.extend(load(&mut engine, &input, &m, &s));
                }
            }
        }
        next += period;
        let tick = engine.tick();
        for e in &mut early {
            e.tick = tick;
        }
        let mut events = early;
        events.extend(engine.step(&commands));
        if let Some(r) = &mut recorder {
            if let Err(e) = r.record(tick, &commands, &events) {
                eprintln!("recording stopped: {e}");
                recorder = None;
            }
        }
        let _ = out.send(state_message(&engine, tick, &events).into());
    }
}

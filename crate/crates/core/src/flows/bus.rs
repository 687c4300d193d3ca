//! In-process message bus with transcript recording.

use std::fmt;

/// One delivered message. `bytes` are what the receiver got, after any tampering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptEntry {
    pub from: String,
    pub to: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Every message delivered to `actor`.
    pub fn inbound_to<'a>(&'a self, actor: &'a str) -> impl Iterator<Item = &'a TranscriptEntry> + 'a {
        self.entries.iter().filter(move |e| e.to == actor)
    }

    /// One line per message: `FROM→TO hex`.
    pub fn dump(&self) -> String {
        self.to_string()
    }

    pub fn parse(text: &str) -> Option<Self> {
        let entries = text
            .lines()
            .filter(|l| !l.is_empty())
            .map(|line| {
                let (route, hex_bytes) = line.split_once(' ')?;
                let (from, to) = route.split_once('→')?;
                Some(TranscriptEntry { from: from.to_owned(), to: to.to_owned(), bytes: hex::decode(hex_bytes).ok()? })
            })
            .collect::<Option<Vec<_>>>()?;
        Some(Transcript { entries })
    }
}

impl fmt::Display for Transcript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(f, "{}→{} {}", e.from, e.to, hex::encode(&e.bytes))?;
        }
        Ok(())
    }
}

/// Hook run on every message before delivery: `(index, from, to, bytes)`.
pub type TamperHook = Box<dyn FnMut(usize, &str, &str, &mut Vec<u8>)>;

#[derive(Default)]
pub struct MessageBus {
    transcript: Transcript,
    tamper: Option<TamperHook>,
}

impl fmt::Debug for MessageBus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MessageBus")
            .field("messages", &self.transcript.len())
            .field("tamper", &self.tamper.is_some())
            .finish()
    }
}

impl MessageBus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_tamper(hook: TamperHook) -> Self {
        MessageBus { transcript: Transcript::default(), tamper: Some(hook) }
    }

    /// Flips one bit of message `index`; every other message passes untouched.
    pub fn flipping_bit(index: usize, bit: usize) -> Self {
        Self::with_tamper(Box::new(move |i, _, _, bytes| {
            if i == index && !bytes.is_empty() {
                let bit = bit % (bytes.len() * 8);
                bytes[bit / 8] ^= 1 << (bit % 8);
            }
        }))
    }

    pub fn deliver(&mut self, from: &str, to: &str, mut bytes: Vec<u8>) -> Vec<u8> {
        if let Some(hook) = &mut self.tamper {
            hook(self.transcript.len(), from, to, &mut bytes);
        }
        self.transcript.entries.push(TranscriptEntry { from: from.to_owned(), to: to.to_owned(), bytes: bytes.clone() });
        bytes
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn into_transcript(self) -> Transcript {
        self.transcript
    }
}

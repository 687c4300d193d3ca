//! Event-sourced PKI state directory.
//!
//! `state.json` holds the deployment parameters and the ordered list of
//! lifecycle events. Every command replays the events from the seed, so the
//! directory is self-contained and the same seed reproduces the same bytes.
//! Certificates are written next to it for inspection and for `verify`.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use v2xcms_core::cert::{Certificate, HashedId8, Time32};
use v2xcms_core::crypto::CryptoProfile;
use v2xcms_core::flows::{Deployment, EndEntity, FlowError, MessageBus};
use v2xcms_core::secured::TrustChain;

use crate::CliError;

pub const STATE_FILE: &str = "state.json";
const STATE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Event {
    Bootstrap { name: String },
    Enroll { name: String },
    Authorize { name: String, batch: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateFile {
    pub version: u32,
    pub profile: CryptoProfile,
    pub seed: u64,
    /// PKI clock, Time32 seconds. Fixed at init so replays are exact.
    pub now: Time32,
    pub events: Vec<Event>,
    /// Messages signed so far; keys the per-signature randomness.
    pub signatures: u64,
}

impl StateFile {
    pub fn new(profile: CryptoProfile, seed: u64, now: Time32) -> Self {
        StateFile { version: STATE_VERSION, profile, seed, now, events: Vec::new(), signatures: 0 }
    }

    pub fn load(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join(STATE_FILE);
        let text = fs::read_to_string(&path)
            .map_err(|e| CliError::Usage(format!("no PKI state at {} ({e}); run `init` first", dir.display())))?;
        let state: StateFile =
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("corrupt {}: {e}", path.display())))?;
        if state.version != STATE_VERSION {
            return Err(CliError::Usage(format!("unsupported state version {}", state.version)));
        }
        Ok(state)
    }

    pub fn save(&self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir)?;
        let mut text = serde_json::to_string_pretty(self).expect("state serializes");
        text.push('\n');
        fs::write(dir.join(STATE_FILE), text)?;
        Ok(())
    }

    /// Rebuilds the in-memory PKI by replaying every recorded event.
    pub fn replay(&self) -> Result<World, CliError> {
        let mut world = World { deployment: Deployment::new(self.profile, self.now, self.seed), entities: BTreeMap::new() };
        for event in &self.events {
            world
                .apply(event, &mut MessageBus::new())
                .map_err(|e| CliError::Usage(format!("state replay failed at {event:?}: {e}")))?;
        }
        Ok(world)
    }
}

pub struct World {
    pub deployment: Deployment,
    pub entities: BTreeMap<String, EndEntity>,
}

impl World {
    fn entity(&mut self, name: &str) -> Result<&mut EndEntity, CliError> {
        self.entities.get_mut(name).ok_or_else(|| CliError::Usage(format!("unknown end entity `{name}`; run `bootstrap` first")))
    }

    /// Applies one event. Usage problems are [`CliError::Usage`]; protocol
    /// rejections surface as [`CliError::Flow`].
    pub fn apply(&mut self, event: &Event, bus: &mut MessageBus) -> Result<(), CliError> {
        match event {
            Event::Bootstrap { name } => {
                if self.entities.contains_key(name) {
                    return Err(CliError::Usage(format!("end entity `{name}` already exists")));
                }
                let ee = self.deployment.bootstrap(name);
                self.entities.insert(name.clone(), ee);
            }
            Event::Enroll { name } => {
                let mut ee = self.entity(name)?.clone();
                self.deployment.enroll(&mut ee, bus)?;
                self.entities.insert(name.clone(), ee);
            }
            Event::Authorize { name, batch } => {
                let mut ee = self.entity(name)?.clone();
                if ee.enrollment.is_none() {
                    return Err(CliError::Flow(FlowError::NotEnrolled));
                }
                self.deployment.authorize(&mut ee, *batch, bus)?;
                self.entities.insert(name.clone(), ee);
            }
        }
        Ok(())
    }

    pub fn trust(&self) -> TrustChain {
        self.deployment.trust()
    }

    /// Every certificate the authorities have issued, by id.
    pub fn issued(&self) -> HashMap<HashedId8, Certificate> {
        self.deployment.authorities().flat_map(|a| a.issued.iter().map(|(k, v)| (*k, v.clone()))).collect()
    }

    /// Writes every certificate to `dir`; returns the paths written.
    pub fn write_artifacts(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        let mut written = Vec::new();
        let mut put = |rel: PathBuf, bytes: Vec<u8>| -> Result<(), CliError> {
            let path = dir.join(rel);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(&path, bytes)?;
            written.push(path);
            Ok(())
        };
        put("root.cert".into(), self.deployment.root.to_bytes())?;
        for a in self.deployment.authorities() {
            put(Path::new("authorities").join(format!("{}.cert", a.name())), a.certificate().to_bytes())?;
        }
        for (name, ee) in &self.entities {
            let base = Path::new("ee").join(name);
            if let Some(cred) = &ee.enrollment {
                put(base.join("enrollment.cert"), cred.certificate().to_bytes())?;
            }
            for (i, cred) in ee.authorization.iter().enumerate() {
                put(base.join("authorization").join(format!("{i:03}.cert")), cred.certificate().to_bytes())?;
            }
        }
        Ok(written)
    }
}

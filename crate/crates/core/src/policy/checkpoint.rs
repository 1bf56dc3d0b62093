//! Self-describing checkpoint container.
//!
//! Layout: the 8-byte magic `SNCKPT01`, a little-endian `u64` header
//! length, a JSON header (metadata plus name, shape and element offset of
//! every tensor), then all tensor values as little-endian `f64`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::ddpg::{Agent, DdpgParams};
use super::network::{NetKind, Network, NetworkSpec};
use super::{PolicyError, Stage};
use crate::seed::{rng_for, Stream};

const MAGIC: &[u8; 8] = b"SNCKPT01";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub stage: Stage,
    pub network: NetworkSpec,
    /// `[rows, beams]` of the motion feature.
    pub input: [usize; 2],
    pub ddpg: DdpgParams,
    pub env_steps: u64,
    pub updates: u64,
    pub episodes: u64,
    /// SHA-256 of the training configuration that produced the weights.
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub meta: CheckpointMeta,
    pub tensors: Vec<NamedTensor>,
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    meta: CheckpointMeta,
    tensors: Vec<TensorEntry>,
}

const NETS: [&str; 4] = ["actor", "critic", "actor_target", "critic_target"];

fn nets(agent: &Agent) -> [&Network; 4] {
    [&agent.actor, &agent.critic, &agent.actor_target, &agent.critic_target]
}

impl Checkpoint {
    pub fn from_agent(agent: &Agent, meta: CheckpointMeta) -> Checkpoint {
        let mut tensors = Vec::new();
        for (prefix, net) in NETS.iter().zip(nets(agent)) {
            for p in net.params() {
                tensors.push(NamedTensor {
                    name: format!("{prefix}/{}", p.name),
                    shape: p.shape.clone(),
                    data: p.value.clone(),
                });
            }
        }
        for (prefix, net, opt) in [
            ("actor", &agent.actor, &agent.actor_opt),
            ("critic", &agent.critic, &agent.critic_opt),
        ] {
            for (moment, buffers) in [("m", &opt.m), ("v", &opt.v)] {
                for (p, b) in net.params().iter().zip(buffers) {
                    tensors.push(NamedTensor {
                        name: format!("adam/{prefix}/{moment}/{}", p.name),
                        shape: p.shape.clone(),
                        data: b.clone(),
                    });
                }
            }
        }
        tensors.push(NamedTensor {
            name: "adam/steps".into(),
            shape: vec![2],
            data: vec![agent.actor_opt.t as f64, agent.critic_opt.t as f64],
        });
        let mut meta = meta;
        meta.updates = agent.updates;
        Checkpoint { meta, tensors }
    }

    pub fn tensor(&self, name: &str) -> Option<&NamedTensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    fn fill(&self, prefix: &str, net: &mut Network) -> Result<(), PolicyError> {
        for p in net.params_mut() {
            let name = format!("{prefix}/{}", p.name);
            let t = self
                .tensor(&name)
                .ok_or_else(|| PolicyError::Checkpoint(format!("missing tensor {name}")))?;
            if t.shape != p.shape {
                return Err(PolicyError::ShapeMismatch {
                    what: "checkpoint tensor",
                    expected: format!("{name} {:?}", p.shape),
                    got: format!("{:?}", t.shape),
                });
            }
            p.value.copy_from_slice(&t.data);
        }
        Ok(())
    }

    fn empty_net(&self, kind: NetKind) -> Result<Network, PolicyError> {
        let [rows, beams] = self.meta.input;
        // weights are overwritten; the RNG only satisfies the constructor
        Network::new(kind, &self.meta.network, rows, beams, &mut rng_for(0, Stream::Network, 0))
    }

    pub fn actor(&self) -> Result<Network, PolicyError> {
        let mut net = self.empty_net(NetKind::Actor)?;
        self.fill("actor", &mut net)?;
        Ok(net)
    }

    pub fn agent(&self) -> Result<Agent, PolicyError> {
        let [rows, beams] = self.meta.input;
        let mut agent = Agent::new(
            &self.meta.network,
            rows,
            beams,
            self.meta.ddpg.clone(),
            &mut rng_for(0, Stream::Network, 0),
        )?;
        self.fill("actor", &mut agent.actor)?;
        self.fill("critic", &mut agent.critic)?;
        self.fill("actor_target", &mut agent.actor_target)?;
        self.fill("critic_target", &mut agent.critic_target)?;
        let restore = |prefix: &str, net: &Network, opt: &mut Adam| -> Result<(), PolicyError> {
            for (moment, buffers) in [("m", &mut opt.m), ("v", &mut opt.v)] {
                for (p, b) in net.params().iter().zip(buffers.iter_mut()) {
                    let name = format!("adam/{prefix}/{moment}/{}", p.name);
                    let t = self
                        .tensor(&name)
                        .ok_or_else(|| PolicyError::Checkpoint(format!("missing tensor {name}")))?;
                    if t.data.len() != b.len() {
                        return Err(PolicyError::Checkpoint(format!("tensor {name} has wrong length")));
                    }
                    b.copy_from_slice(&t.data);
                }
            }
            Ok(())
        };
        restore("actor", &agent.actor, &mut agent.actor_opt)?;
        restore("critic", &agent.critic, &mut agent.critic_opt)?;
        if let Some(t) = self.tensor("adam/steps") {
            agent.actor_opt.t = t.data[0] as u64;
            agent.critic_opt.t = t.data[1] as u64;
        }
        agent.updates = self.meta.updates;
        Ok(agent)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut offset = 0;
        let entries = self
            .tensors
            .iter()
            .map(|t| {
                let e = TensorEntry {
                    name: t.name.clone(),
                    shape: t.shape.clone(),
                    offset,
                };
                offset += t.data.len();
                e
            })
            .collect();
        let header = Header {
            meta: self.meta.clone(),
            tensors: entries,
        };
        let json = serde_json::to_vec(&header).expect("header serialises");
        let mut out = Vec::with_capacity(16 + json.len() + 8 * offset);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for t in &self.tensors {
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint, PolicyError> {
        let bad = |m: &str| PolicyError::Checkpoint(m.to_string());
        if bytes.len() < 16 || &bytes[..8] != MAGIC {
            return Err(bad("not a checkpoint file (bad magic)"));
        }
        let hlen = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
        let body = bytes.get(16..16 + hlen).ok_or_else(|| bad("truncated header"))?;
        let header: Header = serde_json::from_slice(body).map_err(|e| bad(&format!("header: {e}")))?;
        let data = &bytes[16 + hlen..];
        if data.len() % 8 != 0 {
            return Err(bad("tensor section is not a whole number of f64 values"));
        }
        let values: Vec<f64> = data
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let mut tensors = Vec::with_capacity(header.tensors.len());
        for e in header.tensors {
            let n: usize = e.shape.iter().product();
            let slice = values
                .get(e.offset..e.offset + n)
                .ok_or_else(|| bad(&format!("tensor {} out of bounds", e.name)))?;
            tensors.push(NamedTensor {
                name: e.name,
                shape: e.shape,
                data: slice.to_vec(),
            });
        }
        Ok(Checkpoint {
            meta: header.meta,
            tensors,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), PolicyError> {
        let mut f = fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Checkpoint, PolicyError> {
        Checkpoint::from_bytes(&fs::read(path)?)
    }
}

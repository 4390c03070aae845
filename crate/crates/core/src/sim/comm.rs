use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::params::ParamSet;

pub const BYTES_PER_PARAM: u64 = 4;
pub const BYTES_PER_PROB: u64 = 8;

/// `C_ne = 0.002 * d_e * V`.
pub fn comm_cost_client_edge(d_e: f64, volume: f64) -> f64 {
    0.002 * d_e * volume
}

/// `C_ce = 0.02 * d_c * V`.
pub fn comm_cost_edge_cloud(d_c: f64, volume: f64) -> f64 {
    0.02 * d_c * volume
}

/// Bytes needed to ship a model at 4 bytes per parameter.
pub fn model_volume(params: &ParamSet) -> u64 {
    BYTES_PER_PARAM * params.count_params() as u64
}

/// Bytes needed to ship a label distribution over `classes` labels.
pub fn distribution_volume(classes: usize) -> u64 {
    BYTES_PER_PROB * classes as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    Client,
    Edge,
    Cloud,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Endpoint {
    pub role: Role,
    pub id: usize,
}

impl Endpoint {
    pub fn client(id: usize) -> Self {
        Endpoint { role: Role::Client, id }
    }

    pub fn edge(id: usize) -> Self {
        Endpoint { role: Role::Edge, id }
    }

    pub fn cloud() -> Self {
        Endpoint { role: Role::Cloud, id: 0 }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let role = match self.role {
            Role::Client => "client",
            Role::Edge => "edge",
            Role::Cloud => "cloud",
        };
        write!(f, "{role}:{}", self.id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransferKind {
    ModelUpload,
    ModelDownload,
    DistributionBroadcast,
    DistributionUpload,
}

impl TransferKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TransferKind::ModelUpload => "model_upload",
            TransferKind::ModelDownload => "model_download",
            TransferKind::DistributionBroadcast => "distribution_broadcast",
            TransferKind::DistributionUpload => "distribution_upload",
        }
    }

    pub fn is_model(self) -> bool {
        matches!(self, TransferKind::ModelUpload | TransferKind::ModelDownload)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinkKind {
    ClientEdge,
    EdgeCloud,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub round: usize,
    pub event: TransferKind,
    pub src: Endpoint,
    pub dst: Endpoint,
    pub bytes: u64,
    pub cost: f64,
}

impl LedgerEntry {
    pub fn link(&self) -> LinkKind {
        if self.src.role == Role::Cloud || self.dst.role == Role::Cloud {
            LinkKind::EdgeCloud
        } else {
            LinkKind::ClientEdge
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LinkTotals {
    pub bytes: u64,
    pub cost: f64,
    pub transfers: usize,
}

/// Append-only log of every transfer, with costs from the distance model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommLedger {
    pub d_e: f64,
    pub d_c: f64,
    entries: Vec<LedgerEntry>,
}

impl CommLedger {
    pub const CSV_HEADER: &'static str = "round,event,src,dst,bytes,cost";

    pub fn new(d_e: f64, d_c: f64) -> Self {
        CommLedger {
            d_e,
            d_c,
            entries: Vec::new(),
        }
    }

    pub fn record(&mut self, round: usize, event: TransferKind, src: Endpoint, dst: Endpoint, bytes: u64) {
        let mut entry = LedgerEntry {
            round,
            event,
            src,
            dst,
            bytes,
            cost: 0.0,
        };
        entry.cost = match entry.link() {
            LinkKind::ClientEdge => comm_cost_client_edge(self.d_e, bytes as f64),
            LinkKind::EdgeCloud => comm_cost_edge_cloud(self.d_c, bytes as f64),
        };
        self.entries.push(entry);
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn totals(&self, filter: impl Fn(&LedgerEntry) -> bool) -> LinkTotals {
        self.entries.iter().filter(|e| filter(e)).fold(LinkTotals::default(), |mut acc, e| {
            acc.bytes += e.bytes;
            acc.cost += e.cost;
            acc.transfers += 1;
            acc
        })
    }

    pub fn link_totals(&self, link: LinkKind) -> LinkTotals {
        self.totals(|e| e.link() == link)
    }

    pub fn round_totals(&self, round: usize) -> LinkTotals {
        self.totals(|e| e.round == round)
    }

    pub fn total_cost(&self) -> f64 {
        self.entries.iter().map(|e| e.cost).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.entries.len() + 1));
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for e in &self.entries {
            let _ = writeln!(out, "{},{},{},{},{},{:?}", e.round, e.event.as_str(), e.src, e.dst, e.bytes, e.cost);
        }
        out
    }
}

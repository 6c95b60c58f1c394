//! Per-frame and per-packet simulation records.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::model::Packet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameRow {
    pub frame: u64,
    pub backlog: u64,
    pub failed_backlog: u64,
    pub potential: u64,
    pub injections: u64,
    pub deliveries: u64,
    pub cleanup_successes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketRow {
    pub id: u64,
    pub d: usize,
    pub injection_slot: u64,
    pub delivery_slot: Option<u64>,
    pub ever_failed: bool,
}

impl PacketRow {
    pub fn of(p: &Packet) -> Self {
        PacketRow {
            id: p.id.0,
            d: p.path_len(),
            injection_slot: p.injection_slot,
            delivery_slot: p.delivery_slot,
            ever_failed: p.ever_failed(),
        }
    }
}

/// Running count, sum and sum of squares of latencies in slots.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LatencyAcc {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl LatencyAcc {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &LatencyAcc) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    /// Unbiased sample variance (0 for fewer than two samples).
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsLog {
    pub frame_len: u64,
    pub m: usize,
    pub j: f64,
    pub out_of_theory: bool,
    pub frames: Vec<FrameRow>,
    /// Present when per-packet recording was requested.
    pub packets: Option<Vec<PacketRow>>,
    /// Delivered-packet latency by path length.
    pub latency: BTreeMap<usize, LatencyAcc>,
}

impl MetricsLog {
    pub fn record_delivery(&mut self, p: &Packet) {
        if let Some(lat) = p.latency() {
            self.latency.entry(p.path_len()).or_default().push(lat as f64);
        }
        if let Some(rows) = &mut self.packets {
            rows.push(PacketRow::of(p));
        }
    }

    pub fn backlog_series(&self) -> Vec<f64> {
        self.frames.iter().map(|r| r.backlog as f64).collect()
    }

    pub fn potential_series(&self) -> Vec<u64> {
        self.frames.iter().map(|r| r.potential).collect()
    }

    pub fn total_deliveries(&self) -> u64 {
        self.frames.iter().map(|r| r.deliveries).sum()
    }

    pub fn frames_csv(&self) -> String {
        let mut s = String::from("frame,backlog,failedBacklog,potential,injections,deliveries,cleanupSuccesses\n");
        for r in &self.frames {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.frame, r.backlog, r.failed_backlog, r.potential, r.injections, r.deliveries, r.cleanup_successes
            );
        }
        s
    }

    pub fn packets_csv(&self) -> String {
        let mut s = String::from("id,d,injectionSlot,deliverySlot,everFailed\n");
        for r in self.packets.iter().flatten() {
            let delivery = r.delivery_slot.map(|d| d.to_string()).unwrap_or_default();
            let _ = writeln!(s, "{},{},{},{},{}", r.id, r.d, r.injection_slot, delivery, r.ever_failed);
        }
        s
    }
}

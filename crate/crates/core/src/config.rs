//! Simulation configuration: ordering modes, device profiles, latency and
//! CPU-cost constants, scheduler knobs, and workload selection.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// How storage order is guaranteed for the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderingMode {
    /// Asynchronous I/O pipeline with ordering attributes and recovery.
    Rio,
    /// Next ordered request only after the previous one is durable; FLUSH per
    /// group on devices without power loss protection.
    SyncNvmeof,
    /// Synchronous per-request control-path round trip (ordering metadata to
    /// PMR) before asynchronous data.
    Horae,
    /// No ordering or durability constraints.
    Orderless,
}

impl OrderingMode {
    pub fn name(self) -> &'static str {
        match self {
            OrderingMode::Rio => "rio",
            OrderingMode::SyncNvmeof => "sync_nvmeof",
            OrderingMode::Horae => "horae",
            OrderingMode::Orderless => "orderless",
        }
    }
}

/// Per-SSD service model parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SsdProfile {
    /// Base service ticks for a write command.
    pub write_ticks: u64,
    /// Additional service ticks per block beyond the first.
    pub per_block_ticks: u64,
    /// Cache-drain duration for devices without power loss protection.
    pub flush_ticks: u64,
    /// Completion-time jitter bound (models internal reordering).
    pub jitter_ticks: u64,
    /// Power loss protection: cache contents count as durable.
    pub plp: bool,
    /// Parallel service slots.
    pub channels: u16,
    /// Maximum transfer size of a single command, in 4 KB blocks.
    pub max_transfer_blocks: u32,
}

impl SsdProfile {
    /// Flash SSD: volatile write cache, expensive FLUSH.
    pub fn flash() -> Self {
        SsdProfile {
            write_ticks: 100,
            per_block_ticks: 10,
            flush_ticks: 1000,
            jitter_ticks: 20,
            plp: false,
            channels: 8,
            max_transfer_blocks: 32,
        }
    }

    /// Optane-like SSD with power loss protection; FLUSH is a no-op.
    pub fn optane() -> Self {
        SsdProfile {
            write_ticks: 60,
            per_block_ticks: 6,
            flush_ticks: 0,
            jitter_ticks: 12,
            plp: true,
            channels: 8,
            max_transfer_blocks: 32,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "flash" => Some(Self::flash()),
            "optane" => Some(Self::optane()),
            _ => None,
        }
    }
}

/// CPU tick costs charged per operation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CpuCosts {
    /// Initiator-side cost of a two-sided send (command or completion).
    pub two_sided_initiator: u64,
    /// Target-side cost of a two-sided receive/send.
    pub two_sided_target: u64,
    /// Initiator-side cost of posting a one-sided operation.
    pub one_sided_initiator: u64,
    /// Software-stack cost per submitted request (sequencer + block layer).
    pub sw_submit: u64,
    /// Per-request cost of a merge examination in the plug window.
    pub merge_per_request: u64,
    /// Initiator-side cost of handling one completion.
    pub completion_handling: u64,
    /// Ticks to persist one 32 B ordering attribute to PMR.
    pub pmr_append_ticks: u64,
    /// Ticks to toggle a persist bit in PMR.
    pub pmr_persist_ticks: u64,
}

impl Default for CpuCosts {
    fn default() -> Self {
        CpuCosts {
            two_sided_initiator: 10,
            two_sided_target: 10,
            one_sided_initiator: 2,
            sw_submit: 3,
            merge_per_request: 1,
            completion_handling: 2,
            pmr_append_ticks: 6,
            pmr_persist_ticks: 6,
        }
    }
}

/// Queue selection policy at the initiator driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueueAffinity {
    /// Stream i always uses lane i mod num_queues (in-order delivery per
    /// stream and target).
    Affine,
    /// Commands rotate over lanes regardless of stream; exposes cross-queue
    /// reordering to the target gate.
    Scatter,
}

/// Fabric latency model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FabricConfig {
    /// Send-queue lanes per target (completion queues are paired 1:1).
    pub num_queues: u16,
    /// One-way base latency in ticks.
    pub base_latency_ticks: u64,
    /// Uniform jitter bound added per message (delays the queue tail, never
    /// reorders within a queue).
    pub jitter_ticks: u64,
    /// Wire ticks per 4 KB payload block.
    pub per_block_wire_ticks: u64,
    pub affinity: QueueAffinity,
}

impl Default for FabricConfig {
    fn default() -> Self {
        FabricConfig {
            num_queues: 4,
            base_latency_ticks: 20,
            jitter_ticks: 10,
            per_block_wire_ticks: 2,
            affinity: QueueAffinity::Affine,
        }
    }
}

/// ORDER-queue scheduler knobs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchedConfig {
    /// Requests buffered before the plug window closes.
    pub plug_depth: u32,
    /// Simulated-time bound on an open plug window.
    pub plug_timeout_ticks: u64,
    pub merge_enabled: bool,
}

impl Default for SchedConfig {
    fn default() -> Self {
        SchedConfig {
            plug_depth: 16,
            plug_timeout_ticks: 20,
            merge_enabled: true,
        }
    }
}

/// What initiator recovery does with durable groups beyond the prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoveryPolicy {
    /// Drop everything beyond the longest durable prefix.
    Drop,
    /// Repair gaps from the initiator replay buffer when it survived.
    ReplayIfBuffered,
}

/// Shipped policies for in-place-update records found during rollback.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IpuPolicy {
    /// Retain IPU blocks and surface them in the recovery report.
    ReportOnly,
    /// Retain IPU blocks, additionally erase non-IPU blocks of later groups
    /// in the same stream (data-consistency sketch).
    EraseLaterMetadata,
}

/// Deliberate protocol defects for checker sanity runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mutation {
    None,
    /// Target dispatches arrivals immediately, ignoring per-server order.
    NoGate,
    /// Sequencer releases completions as they arrive, out of order.
    NoInorderCompletion,
    /// Flush groups skip the fan-out markers to other touched servers.
    NoFlushFanout,
}

impl Default for Mutation {
    fn default() -> Self {
        Mutation::None
    }
}

/// Built-in workload generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum WorkloadKind {
    /// Metadata-journaling pattern: per group, a 2-block write then a 1-block
    /// write carrying group_end + flush.
    Journal3,
    /// Independent 4 KB random ordered writes, one group each.
    Random4k,
    /// Sequential writes of `kb` kilobytes, one group each.
    SeqK { kb: u32 },
    /// Batches of `k` consecutive 4 KB writes, one group each; adjacent
    /// batches are not contiguous.
    Batch { k: u32 },
    /// Random 4 KB writes with an in-place-update probability of
    /// `permille`/1000.
    IpuMix { permille: u32 },
}

/// Workload shape shared by every thread.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub kind: WorkloadKind,
    /// Groups each thread submits before stopping.
    pub groups_per_thread: u64,
    /// Private LBA range per thread, in blocks.
    pub thread_range_blocks: u64,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        WorkloadSpec {
            kind: WorkloadKind::Journal3,
            groups_per_thread: 1000,
            thread_range_blocks: 1 << 20,
        }
    }
}

/// Full simulation configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub mode: OrderingMode,
    /// Worker threads; each drives its own stream.
    pub threads: u16,
    pub targets: u16,
    pub ssds_per_target: u16,
    pub stripe_unit_blocks: u32,
    pub ssd: SsdProfile,
    pub fabric: FabricConfig,
    pub sched: SchedConfig,
    pub cpu: CpuCosts,
    /// Capacity of each per-target PMR circular log, in 32 B records.
    pub pmr_capacity: u32,
    /// Per-stream cap on submitted-but-not-yet-completed groups.
    pub inflight_groups: u32,
    /// CPU cores available to each target server.
    pub target_cores: u16,
    pub recovery_policy: RecoveryPolicy,
    pub ipu_policy: IpuPolicy,
    pub mutation: Mutation,
    pub seed: u64,
    pub workload: WorkloadSpec,
    /// Per-record scan/transfer cost during order reconstruction.
    pub recovery_scan_ticks_per_record: u64,
    /// Per-record cost of the global merge step.
    pub recovery_merge_ticks_per_record: u64,
    /// Per-block cost of discarding data during rollback.
    pub recovery_erase_ticks_per_block: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            mode: OrderingMode::Rio,
            threads: 1,
            targets: 2,
            ssds_per_target: 2,
            stripe_unit_blocks: 32,
            ssd: SsdProfile::flash(),
            fabric: FabricConfig::default(),
            sched: SchedConfig::default(),
            cpu: CpuCosts::default(),
            pmr_capacity: 65_536,
            inflight_groups: 128,
            target_cores: 4,
            recovery_policy: RecoveryPolicy::Drop,
            ipu_policy: IpuPolicy::ReportOnly,
            mutation: Mutation::None,
            seed: 1,
            workload: WorkloadSpec::default(),
            recovery_scan_ticks_per_record: 8,
            recovery_merge_ticks_per_record: 1,
            recovery_erase_ticks_per_block: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("config key `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
}

fn invalid(key: &'static str, reason: &str) -> ConfigError {
    ConfigError::Invalid {
        key,
        reason: String::from(reason),
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.threads == 0 {
            return Err(invalid("threads", "must be at least 1"));
        }
        if self.targets == 0 {
            return Err(invalid("targets", "volume must list at least one target"));
        }
        if self.ssds_per_target == 0 {
            return Err(invalid("ssds_per_target", "each target needs an SSD"));
        }
        if self.stripe_unit_blocks == 0 {
            return Err(invalid("stripe_unit_blocks", "must be at least 1"));
        }
        if self.fabric.num_queues == 0 {
            return Err(invalid("num_queues", "must be at least 1"));
        }
        if self.ssd.max_transfer_blocks == 0
            || self.ssd.max_transfer_blocks > crate::attr::MAX_RECORD_LEN
        {
            return Err(invalid(
                "max_transfer_blocks",
                "must be between 1 and 63 (record len width)",
            ));
        }
        if self.ssd.channels == 0 {
            return Err(invalid("channels", "must be at least 1"));
        }
        if self.pmr_capacity < 2 {
            return Err(invalid("pmr_capacity", "ring needs at least 2 slots"));
        }
        if self.inflight_groups == 0 {
            return Err(invalid("inflight_groups", "must be at least 1"));
        }
        if self.target_cores == 0 {
            return Err(invalid("target_cores", "must be at least 1"));
        }
        if self.workload.thread_range_blocks == 0 {
            return Err(invalid("thread_range_blocks", "must be nonzero"));
        }
        let total_blocks = (self.threads as u64)
            .checked_mul(self.workload.thread_range_blocks)
            .ok_or_else(|| invalid("thread_range_blocks", "address space overflow"))?;
        if total_blocks >= 1 << 34 {
            return Err(invalid(
                "thread_range_blocks",
                "thread ranges exceed the 34-bit block address space",
            ));
        }
        Ok(())
    }

    /// Number of streams (one per thread).
    pub fn num_streams(&self) -> u16 {
        self.threads
    }

    /// Flat list of SSD profiles per target, all identical under one profile.
    pub fn target_ssds(&self) -> Vec<SsdProfile> {
        let mut v = Vec::new();
        for _ in 0..self.ssds_per_target {
            v.push(self.ssd.clone());
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        SimConfig::default().validate().unwrap();
    }

    #[test]
    fn empty_volume_rejected_with_key_name() {
        let mut cfg = SimConfig::default();
        cfg.targets = 0;
        let err = cfg.validate().unwrap_err();
        let ConfigError::Invalid { key, .. } = err;
        assert_eq!(key, "targets");
    }

    #[test]
    fn oversize_thread_ranges_rejected() {
        let mut cfg = SimConfig::default();
        cfg.threads = 2;
        cfg.workload.thread_range_blocks = 1 << 33;
        assert!(cfg.validate().is_err());
    }
}

//! Ordering attributes and their persistent 32-byte record encoding.
//!
//! The ordering attribute is the identity every ordered write carries through
//! the stack: its group (`seq`), the preceding group on the same target server
//! (`prev`), the group's member count (`num`, nonzero only on the final
//! request), the durability bit (`persist`), the block extent, and the
//! split/ipu/flush flags. The same structure is what gets persisted to the
//! per-target PMR log, so the encoding here is bit-exact and pinned by a
//! golden file.
//!
//! Record layout (little-endian, 32 bytes):
//!
//! ```text
//! byte  0      magic/op code (0xA1 = ordering-attribute record); doubles as
//!              the written-last valid marker: an all-zero slot is dead
//! byte  1      flags: bit0 persist, bit1 group_end, bit2 flush, bit3 ipu,
//!              bit4 split-present; bits 5-7 reserved (zero)
//! bytes 2-3    stream id (u16)
//! bytes 4-11   start sequence (u64)
//! bytes 12-19  end sequence (u64; differs from start only after merging)
//! bytes 20-23  previous group on this target server (u32)
//! bytes 24-25  number of requests in the group (u16)
//! bytes 26-31  u48: bits 0-33 lba, bits 34-43 len,
//!              bits 40-43 split part index, bits 44-47 split part count - 1
//! ```
//!
//! The len field is 6 bits (bits 34-39): on-log records describe post-split,
//! post-merge commands, which never exceed the device max transfer (<= 63
//! blocks). Split descriptors fit 4+4 bits, capping splitting at 16 parts per
//! request; the splitter enforces both limits.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Stream identifier (independent storage-order domain).
pub type StreamId = u16;
/// Target server identifier.
pub type TargetId = u16;
/// Group sequence number. Zero means "none"; real groups start at 1.
pub type Seq = u64;

/// On-log record size in bytes.
pub const RECORD_SIZE: usize = 32;
/// Magic/op byte for an ordering-attribute record.
pub const RECORD_MAGIC: u8 = 0xA1;
/// Maximum encodable block count of a single record.
pub const MAX_RECORD_LEN: u32 = 63;
/// Maximum number of parts a request may be split into.
pub const MAX_SPLIT_PARTS: u16 = 16;

const FLAG_PERSIST: u8 = 1 << 0;
const FLAG_GROUP_END: u8 = 1 << 1;
const FLAG_FLUSH: u8 = 1 << 2;
const FLAG_IPU: u8 = 1 << 3;
const FLAG_SPLIT: u8 = 1 << 4;
const FLAG_RESERVED: u8 = 0xE0;

/// Descriptor carried by the parts of a divided request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitDesc {
    pub parent_seq: Seq,
    pub part_index: u16,
    pub part_count: u16,
}

/// Logical identity of an ordered write request (or of a merged run of them).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderingAttribute {
    pub stream_id: StreamId,
    pub seq_start: Seq,
    pub seq_end: Seq,
    pub prev: Seq,
    pub num: u32,
    pub persist: bool,
    pub lba: u64,
    pub len: u32,
    pub split: Option<SplitDesc>,
    pub ipu: bool,
    pub flush: bool,
    pub group_end: bool,
}

impl OrderingAttribute {
    /// A fresh single-request attribute with persist = 0.
    pub fn new(stream_id: StreamId, seq: Seq, lba: u64, len: u32) -> Self {
        OrderingAttribute {
            stream_id,
            seq_start: seq,
            seq_end: seq,
            prev: 0,
            num: 0,
            persist: false,
            lba,
            len,
            split: None,
            ipu: false,
            flush: false,
            group_end: false,
        }
    }

    /// True when the attribute covers more than one group (cross-group merge).
    pub fn is_merged(&self) -> bool {
        self.seq_start != self.seq_end
    }

    /// True for len-0 flush markers, which certify but carry no data.
    pub fn is_flush_marker(&self) -> bool {
        self.len == 0 && self.flush
    }

    /// Inclusive range of groups this attribute covers.
    pub fn groups(&self) -> impl Iterator<Item = Seq> {
        self.seq_start..=self.seq_end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("field overflow: {0}")]
    FieldOverflow(&'static str),
    #[error("merged attribute cannot carry a split descriptor")]
    MergedAndSplit,
    #[error("seq_start exceeds seq_end")]
    SeqOrder,
    #[error("num and group_end disagree")]
    NumGroupEnd,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("unset magic/op code")]
    ZeroRecord,
    #[error("bad magic/op byte {0:#04x}")]
    BadMagic(u8),
    #[error("reserved flag bits set")]
    ReservedFlags,
    #[error("record carries both a merged seq range and a split descriptor")]
    MergedAndSplit,
    #[error("seq_start exceeds seq_end")]
    SeqOrder,
    #[error("num and group_end disagree")]
    NumGroupEnd,
    #[error("split descriptor fields out of range")]
    BadSplit,
}

/// Encodes an attribute into its fixed 32-byte log/wire record.
///
/// Deterministic and injective over valid attributes; fails (naming the
/// field) when a value exceeds its on-record width.
pub fn encode_attr(a: &OrderingAttribute) -> Result<[u8; RECORD_SIZE], EncodeError> {
    if a.seq_start > a.seq_end {
        return Err(EncodeError::SeqOrder);
    }
    if a.is_merged() && a.split.is_some() {
        return Err(EncodeError::MergedAndSplit);
    }
    if (a.num > 0) != a.group_end {
        return Err(EncodeError::NumGroupEnd);
    }
    if a.prev > u32::MAX as u64 {
        return Err(EncodeError::FieldOverflow("prev"));
    }
    if a.num > u16::MAX as u32 {
        return Err(EncodeError::FieldOverflow("num"));
    }
    if a.lba >= 1 << 34 {
        return Err(EncodeError::FieldOverflow("lba"));
    }
    if a.len > MAX_RECORD_LEN {
        return Err(EncodeError::FieldOverflow("len"));
    }
    let (part_index, part_count) = match a.split {
        None => (0u16, 1u16),
        Some(d) => {
            if d.part_count == 0
                || d.part_count > MAX_SPLIT_PARTS
                || d.part_index >= d.part_count
                || d.parent_seq != a.seq_start
            {
                return Err(EncodeError::FieldOverflow("split"));
            }
            (d.part_index, d.part_count)
        }
    };

    let mut rec = [0u8; RECORD_SIZE];
    rec[0] = RECORD_MAGIC;
    let mut flags = 0u8;
    if a.persist {
        flags |= FLAG_PERSIST;
    }
    if a.group_end {
        flags |= FLAG_GROUP_END;
    }
    if a.flush {
        flags |= FLAG_FLUSH;
    }
    if a.ipu {
        flags |= FLAG_IPU;
    }
    if a.split.is_some() {
        flags |= FLAG_SPLIT;
    }
    rec[1] = flags;
    rec[2..4].copy_from_slice(&a.stream_id.to_le_bytes());
    rec[4..12].copy_from_slice(&a.seq_start.to_le_bytes());
    rec[12..20].copy_from_slice(&a.seq_end.to_le_bytes());
    rec[20..24].copy_from_slice(&(a.prev as u32).to_le_bytes());
    rec[24..26].copy_from_slice(&(a.num as u16).to_le_bytes());
    let packed: u64 = a.lba
        | (a.len as u64) << 34
        | (part_index as u64) << 40
        | ((part_count - 1) as u64) << 44;
    rec[26..32].copy_from_slice(&packed.to_le_bytes()[0..6]);
    Ok(rec)
}

/// Decodes a 32-byte record back into an ordering attribute.
pub fn decode_attr(rec: &[u8; RECORD_SIZE]) -> Result<OrderingAttribute, DecodeError> {
    if rec.iter().all(|&b| b == 0) {
        return Err(DecodeError::ZeroRecord);
    }
    if rec[0] != RECORD_MAGIC {
        return Err(DecodeError::BadMagic(rec[0]));
    }
    let flags = rec[1];
    if flags & FLAG_RESERVED != 0 {
        return Err(DecodeError::ReservedFlags);
    }
    let stream_id = u16::from_le_bytes([rec[2], rec[3]]);
    let seq_start = u64::from_le_bytes(rec[4..12].try_into().unwrap());
    let seq_end = u64::from_le_bytes(rec[12..20].try_into().unwrap());
    let prev = u32::from_le_bytes(rec[20..24].try_into().unwrap()) as u64;
    let num = u16::from_le_bytes([rec[24], rec[25]]) as u32;
    let mut packed_bytes = [0u8; 8];
    packed_bytes[0..6].copy_from_slice(&rec[26..32]);
    let packed = u64::from_le_bytes(packed_bytes);
    let lba = packed & ((1 << 34) - 1);
    let len = ((packed >> 34) & 0x3F) as u32;
    let part_index = ((packed >> 40) & 0xF) as u16;
    let part_count_m1 = ((packed >> 44) & 0xF) as u16;

    if seq_start > seq_end {
        return Err(DecodeError::SeqOrder);
    }
    let split = if flags & FLAG_SPLIT != 0 {
        if seq_start != seq_end {
            return Err(DecodeError::MergedAndSplit);
        }
        let desc = SplitDesc {
            parent_seq: seq_start,
            part_index,
            part_count: part_count_m1 + 1,
        };
        if desc.part_index >= desc.part_count || desc.part_count < 2 {
            return Err(DecodeError::BadSplit);
        }
        Some(desc)
    } else {
        if part_index != 0 || part_count_m1 != 0 {
            return Err(DecodeError::BadSplit);
        }
        None
    };
    let group_end = flags & FLAG_GROUP_END != 0;
    if (num > 0) != group_end {
        return Err(DecodeError::NumGroupEnd);
    }
    Ok(OrderingAttribute {
        stream_id,
        seq_start,
        seq_end,
        prev,
        num,
        persist: flags & FLAG_PERSIST != 0,
        lba,
        len,
        split,
        ipu: flags & FLAG_IPU != 0,
        flush: flags & FLAG_FLUSH != 0,
        group_end,
    })
}

/// Sets the persist bit directly in an encoded record (byte 1, bit 0).
pub fn set_persist_in_record(rec: &mut [u8; RECORD_SIZE]) {
    rec[1] |= FLAG_PERSIST;
}

/// Reads the persist bit of an encoded record.
pub fn record_persist(rec: &[u8; RECORD_SIZE]) -> bool {
    rec[1] & FLAG_PERSIST != 0
}

/// An ordering attribute as stored in the PMR, with its log slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersistenceRecord {
    pub attr: OrderingAttribute,
    pub log_slot: u32,
}

/// Simulated 64-bit content fingerprint of one 4 KB block.
///
/// Data movement is not modeled; recovery correctness only needs the identity
/// and location of blocks, so each block is a deterministic mix of the
/// (stream, seq, lba) that wrote it.
pub fn block_fingerprint(stream: StreamId, seq: Seq, lba: u64) -> u64 {
    let mut x = (stream as u64)
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(seq)
        .wrapping_mul(0xBF58_476D_1CE4_E5B9)
        .wrapping_add(lba)
        .wrapping_add(0x94D0_49BB_1331_11EB);
    x ^= x >> 30;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^= x >> 31;
    x
}

/// An ordered (or orderless) block write flowing through the pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WriteRequest {
    pub attr: OrderingAttribute,
    /// One content fingerprint per 4 KB block; length equals `attr.len`.
    pub payload: Vec<u64>,
    /// Orderless requests carry no attribute semantics downstream.
    pub ordered: bool,
    /// Destination server of the first block; parts of a divided request are
    /// re-stamped by the splitter.
    pub target_id: TargetId,
    /// Ordinal of this request within its group (assigned at submission).
    pub member_index: u32,
    /// Per-target `prev` values captured at submission, used when the
    /// splitter scatters the extent over several servers.
    pub prev_by_target: alloc::collections::BTreeMap<TargetId, Seq>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w1_1() -> OrderingAttribute {
        // First member of the two-request journal group: seq 1, two blocks.
        OrderingAttribute::new(0, 1, 100, 2)
    }

    #[test]
    fn golden_w1_1_record() {
        let rec = encode_attr(&w1_1()).unwrap();
        let mut hex = alloc::string::String::new();
        for b in rec {
            use core::fmt::Write;
            write!(hex, "{:02x}", b).unwrap();
        }
        assert_eq!(
            hex,
            "a100000001000000000000000100000000000000000000000000640000000800"
        );
    }

    #[test]
    fn roundtrip_simple_group_end() {
        let mut a = OrderingAttribute::new(0, 1, 100, 1);
        a.num = 2;
        a.group_end = true;
        let rec = encode_attr(&a).unwrap();
        assert_eq!(decode_attr(&rec).unwrap(), a);
    }

    #[test]
    fn merged_record_has_distinct_seq_dwords() {
        let mut a = OrderingAttribute::new(0, 1, 200, 3);
        a.seq_end = 3;
        a.num = 3;
        a.group_end = true;
        let rec = encode_attr(&a).unwrap();
        assert_ne!(rec[4..12], rec[12..20]);
        let back = decode_attr(&rec).unwrap();
        assert_eq!(back.seq_start, 1);
        assert_eq!(back.seq_end, 3);
    }

    #[test]
    fn zero_record_is_unset_magic() {
        let rec = [0u8; RECORD_SIZE];
        assert_eq!(decode_attr(&rec), Err(DecodeError::ZeroRecord));
    }

    #[test]
    fn merged_plus_split_rejected() {
        let mut a = OrderingAttribute::new(0, 1, 100, 1);
        a.seq_end = 2;
        a.num = 2;
        a.group_end = true;
        let mut rec = encode_attr(&a).unwrap();
        rec[1] |= FLAG_SPLIT;
        assert_eq!(decode_attr(&rec), Err(DecodeError::MergedAndSplit));
    }

    #[test]
    fn encode_overflow_names_field() {
        let mut a = w1_1();
        a.prev = u32::MAX as u64 + 1;
        assert_eq!(encode_attr(&a), Err(EncodeError::FieldOverflow("prev")));
        let mut a = w1_1();
        a.lba = 1 << 34;
        assert_eq!(encode_attr(&a), Err(EncodeError::FieldOverflow("lba")));
        let mut a = w1_1();
        a.len = MAX_RECORD_LEN + 1;
        assert_eq!(encode_attr(&a), Err(EncodeError::FieldOverflow("len")));
    }

    #[test]
    fn persist_bit_toggles_in_place() {
        let mut rec = encode_attr(&w1_1()).unwrap();
        assert!(!record_persist(&rec));
        set_persist_in_record(&mut rec);
        assert!(record_persist(&rec));
        assert!(decode_attr(&rec).unwrap().persist);
    }

    #[test]
    fn fingerprints_differ_by_identity() {
        let a = block_fingerprint(0, 1, 100);
        assert_ne!(a, block_fingerprint(0, 1, 101));
        assert_ne!(a, block_fingerprint(0, 2, 100));
        assert_ne!(a, block_fingerprint(1, 1, 100));
        assert_eq!(a, block_fingerprint(0, 1, 100));
    }

    /// Generator that only emits attributes satisfying the type invariants.
    pub(crate) fn arb_attr() -> impl Strategy<Value = OrderingAttribute> {
        (
            any::<u16>(),
            1u64..1 << 40,
            0u64..4,
            0u64..1 << 32,
            0u64..1 << 34,
            0u32..=MAX_RECORD_LEN,
            any::<bool>(),
            any::<bool>(),
            any::<bool>(),
            prop::option::of((0u16..MAX_SPLIT_PARTS, 2u16..=MAX_SPLIT_PARTS)),
            0u32..40,
        )
            .prop_map(
                |(stream, seq, span, prev, lba, len, flush, ipu, end, split, num)| {
                    let split = split.and_then(|(i, c)| {
                        // splits and merges are mutually exclusive
                        if span == 0 {
                            Some(SplitDesc {
                                parent_seq: seq,
                                part_index: i % c,
                                part_count: c,
                            })
                        } else {
                            None
                        }
                    });
                    OrderingAttribute {
                        stream_id: stream,
                        seq_start: seq,
                        seq_end: seq + span,
                        prev,
                        num: if end { num + 1 } else { 0 },
                        persist: false,
                        lba,
                        len,
                        split,
                        ipu,
                        flush,
                        group_end: end,
                    }
                },
            )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn encode_decode_roundtrip(a in arb_attr()) {
            let rec = encode_attr(&a).unwrap();
            prop_assert_eq!(decode_attr(&rec).unwrap(), a);
        }
    }

    proptest! {
        #[test]
        fn encoding_is_injective(a in arb_attr(), b in arb_attr()) {
            let ra = encode_attr(&a).unwrap();
            let rb = encode_attr(&b).unwrap();
            if a != b {
                prop_assert_ne!(ra, rb);
            }
        }
    }
}

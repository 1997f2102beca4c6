//! Messages exchanged between supervisor, masters and workers, their byte
//! accounting and the binary frame format.
//!
//! Frame layout, little-endian:
//!
//! ```text
//! [kind: 1][src: 2][dst: 2][length: 2][payload: length][checksum: 1]
//! ```
//!
//! Payload integers are `W` bytes wide (8 or 16). A batch reallocation
//! carries a `W`-byte count tag followed by that many ids. The checksum is
//! the wrapping byte sum of everything before it.

use std::fmt;

use flowbal_core::{NodeId, Time, TreeCodec};

use crate::error::{Result, RuntimeError};

/// Actor address: 0 is the supervisor, then masters, then workers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActorId(pub u16);

impl fmt::Display for ActorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MessageKind {
    AskForTasks,
    TaskGrant,
    UpdateSolutionRequest,
    BestSolution,
    LoadReport,
    ReallocateSingle,
    ReallocateBatch,
    Terminate,
}

impl MessageKind {
    pub const ALL: [MessageKind; 8] = [
        MessageKind::AskForTasks,
        MessageKind::TaskGrant,
        MessageKind::UpdateSolutionRequest,
        MessageKind::BestSolution,
        MessageKind::LoadReport,
        MessageKind::ReallocateSingle,
        MessageKind::ReallocateBatch,
        MessageKind::Terminate,
    ];

    pub fn code(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code.checked_sub(1)? as usize).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MessageKind::AskForTasks => "AskForTasks",
            MessageKind::TaskGrant => "TaskGrant",
            MessageKind::UpdateSolutionRequest => "UpdateSolutionRequest",
            MessageKind::BestSolution => "BestSolution",
            MessageKind::LoadReport => "LoadReport",
            MessageKind::ReallocateSingle => "ReallocateSingle",
            MessageKind::ReallocateBatch => "ReallocateBatch",
            MessageKind::Terminate => "Terminate",
        }
    }
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Master status sent to the supervisor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadReport {
    pub pending: u64,
    pub completed: u64,
    pub n_workers: u64,
    pub total_exec_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    AskForTasks,
    /// `None` tells the worker there is nothing to do right now.
    TaskGrant(Option<NodeId>),
    /// From a worker: refresh my incumbent. From the supervisor: report your
    /// best solution and load, and surrender pending particles above `quota`.
    UpdateSolutionRequest { quota: Option<u64> },
    BestSolution(Time),
    LoadReport(LoadReport),
    ReallocateSingle(NodeId),
    ReallocateBatch(Vec<NodeId>),
    Terminate,
}

impl Payload {
    pub fn kind(&self) -> MessageKind {
        match self {
            Payload::AskForTasks => MessageKind::AskForTasks,
            Payload::TaskGrant(_) => MessageKind::TaskGrant,
            Payload::UpdateSolutionRequest { .. } => MessageKind::UpdateSolutionRequest,
            Payload::BestSolution(_) => MessageKind::BestSolution,
            Payload::LoadReport(_) => MessageKind::LoadReport,
            Payload::ReallocateSingle(_) => MessageKind::ReallocateSingle,
            Payload::ReallocateBatch(_) => MessageKind::ReallocateBatch,
            Payload::Terminate => MessageKind::Terminate,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub src: ActorId,
    pub dst: ActorId,
    pub payload: Payload,
}

impl Message {
    pub fn new(src: ActorId, dst: ActorId, payload: Payload) -> Self {
        Self { src, dst, payload }
    }

    pub fn kind(&self) -> MessageKind {
        self.payload.kind()
    }
}

/// Frame overhead `H` and integer width `W` used for byte accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WireFormat {
    pub header: usize,
    pub width: usize,
}

/// Bytes of the `[kind][src][dst][length] ... [checksum]` framing.
pub const FRAME_OVERHEAD: usize = 8;

impl Default for WireFormat {
    fn default() -> Self {
        Self {
            header: FRAME_OVERHEAD,
            width: 8,
        }
    }
}

impl WireFormat {
    /// 8-byte integers when every node id of an `n`-job tree fits, else 16.
    pub fn for_codec(codec: &TreeCodec) -> Self {
        let width = if codec.node_count() - 1 <= u64::MAX as u128 { 8 } else { 16 };
        Self {
            header: FRAME_OVERHEAD,
            width,
        }
    }

    fn payload_len(&self, payload: &Payload) -> usize {
        let w = self.width;
        match payload {
            Payload::AskForTasks | Payload::Terminate => 0,
            Payload::TaskGrant(id) => id.map_or(0, |_| w),
            Payload::UpdateSolutionRequest { quota } => quota.map_or(0, |_| w),
            Payload::BestSolution(_) | Payload::ReallocateSingle(_) => w,
            Payload::LoadReport(_) => 3 * w + 8,
            Payload::ReallocateBatch(ids) => w * (1 + ids.len()),
        }
    }

    /// Largest batch whose payload still fits the 16-bit length field.
    pub fn max_batch(&self) -> usize {
        u16::MAX as usize / self.width - 1
    }
}

/// Bytes a message costs on the wire: `H` plus its payload.
///
/// `BestSolution`, `TaskGrant` and `ReallocateSingle` cost `H + W`;
/// `ReallocateBatch` of `c` ids costs `H + W * (1 + c)`.
pub fn transfer_cost(msg: &Message, wire: &WireFormat) -> usize {
    wire.header + wire.payload_len(&msg.payload)
}

fn put_uint(buf: &mut Vec<u8>, value: u128, width: usize) -> Result<()> {
    if width < 16 && value >> (8 * width) != 0 {
        return Err(RuntimeError::Wire(format!("{value} does not fit in {width} bytes")));
    }
    buf.extend_from_slice(&value.to_le_bytes()[..width]);
    Ok(())
}

/// Serializes one frame.
pub fn encode(msg: &Message, wire: &WireFormat) -> Result<Vec<u8>> {
    if wire.width != 8 && wire.width != 16 {
        return Err(RuntimeError::Wire(format!("unsupported integer width {}", wire.width)));
    }
    let w = wire.width;
    let mut payload = Vec::with_capacity(wire.payload_len(&msg.payload));
    match &msg.payload {
        Payload::AskForTasks | Payload::Terminate => {}
        Payload::TaskGrant(id) => {
            if let Some(id) = id {
                put_uint(&mut payload, id.0, w)?;
            }
        }
        Payload::UpdateSolutionRequest { quota } => {
            if let Some(q) = quota {
                put_uint(&mut payload, *q as u128, w)?;
            }
        }
        Payload::BestSolution(t) => put_uint(&mut payload, *t as u128, w)?,
        Payload::LoadReport(r) => {
            put_uint(&mut payload, r.pending as u128, w)?;
            put_uint(&mut payload, r.completed as u128, w)?;
            put_uint(&mut payload, r.n_workers as u128, w)?;
            payload.extend_from_slice(&r.total_exec_time.to_le_bytes());
        }
        Payload::ReallocateSingle(id) => put_uint(&mut payload, id.0, w)?,
        Payload::ReallocateBatch(ids) => {
            put_uint(&mut payload, ids.len() as u128, w)?;
            for id in ids {
                put_uint(&mut payload, id.0, w)?;
            }
        }
    }
    let len = u16::try_from(payload.len())
        .map_err(|_| RuntimeError::Wire(format!("payload of {} bytes exceeds frame limit", payload.len())))?;
    let mut frame = Vec::with_capacity(FRAME_OVERHEAD + payload.len());
    frame.push(msg.kind().code());
    frame.extend_from_slice(&msg.src.0.to_le_bytes());
    frame.extend_from_slice(&msg.dst.0.to_le_bytes());
    frame.extend_from_slice(&len.to_le_bytes());
    frame.extend_from_slice(&payload);
    frame.push(checksum(&frame));
    Ok(frame)
}

fn checksum(bytes: &[u8]) -> u8 {
    bytes.iter().fold(0u8, |acc, &b| acc.wrapping_add(b))
}

struct Reader<'a> {
    bytes: &'a [u8],
    width: usize,
}

impl Reader<'_> {
    fn uint(&mut self) -> Result<u128> {
        if self.bytes.len() < self.width {
            return Err(RuntimeError::Wire("truncated payload".into()));
        }
        let mut le = [0u8; 16];
        le[..self.width].copy_from_slice(&self.bytes[..self.width]);
        self.bytes = &self.bytes[self.width..];
        Ok(u128::from_le_bytes(le))
    }

    fn u64(&mut self) -> Result<u64> {
        u64::try_from(self.uint()?).map_err(|_| RuntimeError::Wire("integer exceeds 64 bits".into()))
    }

    fn f64(&mut self) -> Result<f64> {
        if self.bytes.len() < 8 {
            return Err(RuntimeError::Wire("truncated payload".into()));
        }
        let (head, rest) = self.bytes.split_at(8);
        self.bytes = rest;
        Ok(f64::from_le_bytes(head.try_into().expect("8 bytes")))
    }
}

/// Parses one frame, verifying length and checksum.
pub fn decode(frame: &[u8], wire: &WireFormat) -> Result<Message> {
    if frame.len() < FRAME_OVERHEAD {
        return Err(RuntimeError::Wire(format!("frame of {} bytes is too short", frame.len())));
    }
    let len = u16::from_le_bytes([frame[5], frame[6]]) as usize;
    if frame.len() != FRAME_OVERHEAD + len {
        return Err(RuntimeError::Wire(format!(
            "length field says {len} payload bytes, frame holds {}",
            frame.len() - FRAME_OVERHEAD
        )));
    }
    let (body, sum) = frame.split_at(frame.len() - 1);
    if checksum(body) != sum[0] {
        return Err(RuntimeError::Wire("checksum mismatch".into()));
    }
    let kind = MessageKind::from_code(frame[0])
        .ok_or_else(|| RuntimeError::Wire(format!("unknown kind code {}", frame[0])))?;
    let src = ActorId(u16::from_le_bytes([frame[1], frame[2]]));
    let dst = ActorId(u16::from_le_bytes([frame[3], frame[4]]));
    let bytes = &frame[7..7 + len];
    let mut r = Reader {
        bytes,
        width: wire.width,
    };
    let payload = match kind {
        MessageKind::AskForTasks => Payload::AskForTasks,
        MessageKind::Terminate => Payload::Terminate,
        MessageKind::TaskGrant => Payload::TaskGrant(if len == 0 { None } else { Some(NodeId(r.uint()?)) }),
        MessageKind::UpdateSolutionRequest => Payload::UpdateSolutionRequest {
            quota: if len == 0 { None } else { Some(r.u64()?) },
        },
        MessageKind::BestSolution => Payload::BestSolution(r.u64()?),
        MessageKind::LoadReport => Payload::LoadReport(LoadReport {
            pending: r.u64()?,
            completed: r.u64()?,
            n_workers: r.u64()?,
            total_exec_time: r.f64()?,
        }),
        MessageKind::ReallocateSingle => Payload::ReallocateSingle(NodeId(r.uint()?)),
        MessageKind::ReallocateBatch => {
            let count = r.u64()? as usize;
            let ids = (0..count).map(|_| r.uint().map(NodeId)).collect::<Result<Vec<_>>>()?;
            Payload::ReallocateBatch(ids)
        }
    };
    if !r.bytes.is_empty() {
        return Err(RuntimeError::Wire(format!("{} trailing payload bytes", r.bytes.len())));
    }
    Ok(Message { src, dst, payload })
}

/// One delivered message in a run trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub time: f64,
    pub message: Message,
    pub bytes: usize,
}

impl TraceRecord {
    /// `time \t kind \t src \t dst \t bytes`
    pub fn to_line(&self) -> String {
        format!(
            "{:.3}\t{}\t{}\t{}\t{}",
            self.time,
            self.message.kind(),
            self.message.src,
            self.message.dst,
            self.bytes
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msg(payload: Payload) -> Message {
        Message::new(ActorId(1), ActorId(3), payload)
    }

    #[test]
    fn cost_formulas() {
        let wire = WireFormat::default();
        assert_eq!(transfer_cost(&msg(Payload::BestSolution(1234)), &wire), 16);
        let five: Vec<NodeId> = (0..5).map(NodeId).collect();
        assert_eq!(transfer_cost(&msg(Payload::ReallocateBatch(five)), &wire), 56);
        let single = transfer_cost(&msg(Payload::ReallocateSingle(NodeId(7))), &wire);
        let batch_of_one = transfer_cost(&msg(Payload::ReallocateBatch(vec![NodeId(7)])), &wire);
        assert_eq!(batch_of_one - single, wire.width);
        assert_eq!(transfer_cost(&msg(Payload::TaskGrant(Some(NodeId(2)))), &wire), 16);
        let wide = WireFormat { header: 8, width: 16 };
        assert_eq!(transfer_cost(&msg(Payload::BestSolution(1)), &wide), 24);
    }

    #[test]
    fn encoded_length_matches_cost() {
        let wire = WireFormat::default();
        let samples = [
            Payload::AskForTasks,
            Payload::TaskGrant(None),
            Payload::TaskGrant(Some(NodeId(99))),
            Payload::UpdateSolutionRequest { quota: Some(3) },
            Payload::UpdateSolutionRequest { quota: None },
            Payload::BestSolution(2297),
            Payload::LoadReport(LoadReport {
                pending: 4,
                completed: 9,
                n_workers: 2,
                total_exec_time: 31.5,
            }),
            Payload::ReallocateSingle(NodeId(5)),
            Payload::ReallocateBatch(vec![NodeId(5), NodeId(6)]),
            Payload::Terminate,
        ];
        for p in samples {
            let m = msg(p);
            let frame = encode(&m, &wire).unwrap();
            assert_eq!(frame.len(), transfer_cost(&m, &wire));
            assert_eq!(decode(&frame, &wire).unwrap(), m);
        }
    }

    #[test]
    fn batch_frame_layout() {
        let wire = WireFormat::default();
        let frame = encode(&msg(Payload::ReallocateBatch(vec![NodeId(3), NodeId(258)])), &wire).unwrap();
        assert_eq!(frame[0], MessageKind::ReallocateBatch.code());
        assert_eq!(&frame[1..3], &[1, 0]);
        assert_eq!(&frame[3..5], &[3, 0]);
        assert_eq!(&frame[5..7], &[24, 0]);
        assert_eq!(&frame[7..15], &2u64.to_le_bytes());
        assert_eq!(&frame[15..23], &3u64.to_le_bytes());
        assert_eq!(&frame[23..31], &258u64.to_le_bytes());
    }

    #[test]
    fn decode_rejects_corruption() {
        let wire = WireFormat::default();
        let mut frame = encode(&msg(Payload::BestSolution(10)), &wire).unwrap();
        *frame.last_mut().unwrap() ^= 0xff;
        assert!(decode(&frame, &wire).is_err());
        let frame = encode(&msg(Payload::BestSolution(10)), &wire).unwrap();
        assert!(decode(&frame[..frame.len() - 2], &wire).is_err());
        assert!(decode(&[0; 4], &wire).is_err());
    }

    #[test]
    fn narrow_width_rejects_wide_ids() {
        let wire = WireFormat::default();
        let big = NodeId(u64::MAX as u128 + 1);
        assert!(encode(&msg(Payload::ReallocateSingle(big)), &wire).is_err());
        let wide = WireFormat { header: 8, width: 16 };
        let frame = encode(&msg(Payload::ReallocateSingle(big)), &wide).unwrap();
        assert_eq!(decode(&frame, &wide).unwrap().payload, Payload::ReallocateSingle(big));
    }

    #[test]
    fn width_follows_tree_size() {
        assert_eq!(WireFormat::for_codec(&TreeCodec::new(20).unwrap()).width, 8);
        assert_eq!(WireFormat::for_codec(&TreeCodec::new(21).unwrap()).width, 16);
    }

    #[test]
    fn trace_line_format() {
        let rec = TraceRecord {
            time: 12.5,
            message: msg(Payload::BestSolution(80)),
            bytes: 16,
        };
        assert_eq!(rec.to_line(), "12.500\tBestSolution\t1\t3\t16");
    }

    #[test]
    fn kind_codes_round_trip() {
        for k in MessageKind::ALL {
            assert_eq!(MessageKind::from_code(k.code()), Some(k));
        }
        assert_eq!(MessageKind::from_code(0), None);
        assert_eq!(MessageKind::from_code(9), None);
    }
}

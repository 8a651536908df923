//! Append-only adjoint tape.
//!
//! The augmented primal run appends one entry per recorded variable. Each
//! entry owns a contiguous run of edges `(predecessor, local partial)` in a
//! single flat edge array, addressed through a per-entry offset table. Symbolic
//! matrix operations embed [`CallbackRecord`]s at the entry position current
//! when they were registered; the reverse sweep fires each callback exactly
//! once, after every entry recorded later than it has been processed.
//!
//! The tape is an explicit handle. Active scalars borrow it, so any number of
//! independent tapes may coexist, but a single tape is confined to one thread.

use std::any::Any;
use std::cell::RefCell;
use std::fmt;
use std::rc::Rc;

use thiserror::Error;

/// Bytes charged per adjoint slot, offset, edge target, edge weight and
/// payload scalar by [`TapeStats::estimated_bytes`].
///
/// This is a fixed accounting model, independent of the in-memory layout, so
/// that tape sizes reported by different builds are comparable.
pub const BYTES_PER_WORD: u64 = 8;

/// Reference to a tape entry, or the passive sentinel.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarRef(u32);

impl VarRef {
    /// Marks a value that carries no derivative information.
    pub const PASSIVE: VarRef = VarRef(u32::MAX);

    pub fn is_passive(self) -> bool {
        self == Self::PASSIVE
    }

    /// Entry index, or `None` for [`VarRef::PASSIVE`].
    pub fn index(self) -> Option<usize> {
        (!self.is_passive()).then_some(self.0 as usize)
    }
}

impl fmt::Debug for VarRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index() {
            Some(i) => write!(f, "VarRef({i})"),
            None => f.write_str("VarRef(PASSIVE)"),
        }
    }
}

/// One edge of the computational graph: the predecessor and the local partial
/// derivative of the owning entry with respect to it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub target: VarRef,
    pub weight: f64,
}

/// Entry count of a tape, used to rewind it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TapePosition(pub usize);

/// Snapshot of tape occupancy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct TapeStats {
    pub num_entries: u64,
    pub num_edges: u64,
    pub num_callbacks: u64,
    pub num_callback_payload_scalars: u64,
    pub estimated_bytes: u64,
}

impl TapeStats {
    fn from_counts(entries: u64, edges: u64, callbacks: u64, payload: u64) -> Self {
        // slot + offset per entry, target + weight per edge, one word per payload scalar
        let estimated_bytes = BYTES_PER_WORD * (2 * entries + 2 * edges + payload);
        TapeStats {
            num_entries: entries,
            num_edges: edges,
            num_callbacks: callbacks,
            num_callback_payload_scalars: payload,
            estimated_bytes,
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum TapeError {
    #[error("passive variables carry no adjoint")]
    PassiveRef,
    #[error("variable index {index} is not on the tape (entry count {len})")]
    InvalidRef { index: usize, len: usize },
    #[error("a callback must have at least one output")]
    EmptyOutputs,
    #[error("callback output {output} was recorded before input {input}")]
    OutputBeforeInput { input: usize, output: usize },
    #[error("callback at entry position {position} does not follow the previous callback at {previous}")]
    CallbackOrder { position: usize, previous: usize },
    #[error("cannot rewind to position {requested}, tape holds only {current} entries")]
    RewindBeyond { requested: usize, current: usize },
    #[error("tape was already interpreted; reset, rewind or clear its adjoints first")]
    AlreadyInterpreted,
    #[error("tape byte budget of {limit} exceeded")]
    BudgetExceeded { limit: u64 },
    #[error("tape allocation failed: {0}")]
    Alloc(String),
    #[error("tape holds more than {max} entries or edges")]
    IndexOverflow { max: u64 },
}

/// Adjoint propagation rule of a symbolic tape node.
///
/// `propagate` receives the current adjoints of the callback's outputs and a
/// zeroed buffer, one slot per input, into which it writes the increments to
/// the input adjoints. The tape scatters the buffer with `+=` and skips
/// passive inputs. Rules never mutate their captured payload.
pub trait AdjointRule {
    /// Number of real scalars the rule keeps alive for the adjoint run.
    fn payload_scalars(&self) -> usize;

    fn propagate(&self, output_adjoints: &[f64], input_increments: &mut [f64]);
}

/// A symbolic node embedded in the tape.
pub struct CallbackRecord {
    pub inputs: Vec<VarRef>,
    pub outputs: Vec<VarRef>,
    pub rule: Box<dyn AdjointRule>,
}

impl fmt::Debug for CallbackRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CallbackRecord")
            .field("inputs", &self.inputs.len())
            .field("outputs", &self.outputs.len())
            .field("payload_scalars", &self.rule.payload_scalars())
            .finish()
    }
}

struct Retained {
    position: usize,
    scalars: u64,
    // held only to keep the payload alive until reset or rewind
    _payload: Rc<dyn Any>,
}

#[derive(Default)]
struct TapeInner {
    adjoints: Vec<f64>,
    // entry i owns edges offsets[i]..offsets[i + 1]; offsets[0] == 0
    offsets: Vec<u32>,
    edge_targets: Vec<u32>,
    edge_weights: Vec<f64>,
    callbacks: Vec<(usize, CallbackRecord)>,
    retained: Vec<Retained>,
    payload_scalars: u64,
    interpreted: bool,
    fault: Option<TapeError>,
    byte_limit: Option<u64>,
}

impl TapeInner {
    fn new(byte_limit: Option<u64>) -> Self {
        TapeInner {
            offsets: vec![0],
            byte_limit,
            ..Default::default()
        }
    }

    fn len(&self) -> usize {
        self.adjoints.len()
    }

    fn stats(&self) -> TapeStats {
        TapeStats::from_counts(
            self.adjoints.len() as u64,
            self.edge_targets.len() as u64,
            self.callbacks.len() as u64,
            self.payload_scalars,
        )
    }

    fn check_ref(&self, r: VarRef) -> Result<usize, TapeError> {
        let index = r.index().ok_or(TapeError::PassiveRef)?;
        if index >= self.len() {
            return Err(TapeError::InvalidRef {
                index,
                len: self.len(),
            });
        }
        Ok(index)
    }

    fn check_budget(&self, extra_entries: u64, extra_edges: u64, extra_payload: u64) -> Result<(), TapeError> {
        if let Some(limit) = self.byte_limit {
            let s = self.stats();
            let after = TapeStats::from_counts(
                s.num_entries + extra_entries,
                s.num_edges + extra_edges,
                s.num_callbacks,
                s.num_callback_payload_scalars + extra_payload,
            );
            if after.estimated_bytes > limit {
                return Err(TapeError::BudgetExceeded { limit });
            }
        }
        Ok(())
    }

    fn record(&mut self, deps: &[(VarRef, f64)]) -> Result<VarRef, TapeError> {
        let owner = self.len();
        let active = deps.iter().filter(|(r, _)| !r.is_passive()).count();
        for &(r, _) in deps {
            if let Some(index) = r.index() {
                // topological order: predecessors always precede the owner
                if index >= owner {
                    return Err(TapeError::InvalidRef { index, len: owner });
                }
            }
        }
        let max = u64::from(u32::MAX - 1);
        if owner as u64 >= max || (self.edge_targets.len() + active) as u64 >= max {
            return Err(TapeError::IndexOverflow { max });
        }
        self.check_budget(1, active as u64, 0)?;
        let alloc = |e: std::collections::TryReserveError| TapeError::Alloc(e.to_string());
        self.adjoints.try_reserve(1).map_err(alloc)?;
        self.offsets.try_reserve(1).map_err(alloc)?;
        self.edge_targets.try_reserve(active).map_err(alloc)?;
        self.edge_weights.try_reserve(active).map_err(alloc)?;

        for &(r, w) in deps {
            if !r.is_passive() {
                self.edge_targets.push(r.0);
                self.edge_weights.push(w);
            }
        }
        self.adjoints.push(0.0);
        self.offsets.push(self.edge_targets.len() as u32);
        Ok(VarRef(owner as u32))
    }

    fn record_variables(&mut self, count: usize) -> Result<std::ops::Range<u32>, TapeError> {
        let first = self.len();
        let max = u64::from(u32::MAX - 1);
        if (first + count) as u64 >= max {
            return Err(TapeError::IndexOverflow { max });
        }
        self.check_budget(count as u64, 0, 0)?;
        let alloc = |e: std::collections::TryReserveError| TapeError::Alloc(e.to_string());
        self.adjoints.try_reserve(count).map_err(alloc)?;
        self.offsets.try_reserve(count).map_err(alloc)?;
        let edges = self.edge_targets.len() as u32;
        self.adjoints.resize(first + count, 0.0);
        self.offsets.resize(first + count + 1, edges);
        Ok(first as u32..(first + count) as u32)
    }

    fn truncate(&mut self, position: usize) {
        let edges = self.offsets[position] as usize;
        self.adjoints.truncate(position);
        self.offsets.truncate(position + 1);
        self.edge_targets.truncate(edges);
        self.edge_weights.truncate(edges);
        // a callback at position p belongs to entries < p; keep it only if p <= position
        self.callbacks.retain(|(p, _)| *p <= position);
        self.retained.retain(|r| r.position <= position);
        self.payload_scalars = self
            .callbacks
            .iter()
            .map(|(_, c)| c.rule.payload_scalars() as u64)
            .chain(self.retained.iter().map(|r| r.scalars))
            .sum();
        self.adjoints.iter_mut().for_each(|a| *a = 0.0);
        self.interpreted = false;
        self.fault = None;
    }

    fn fire(adjoints: &mut [f64], record: &CallbackRecord, scratch_out: &mut Vec<f64>, scratch_in: &mut Vec<f64>) {
        scratch_out.clear();
        scratch_out.extend(record.outputs.iter().map(|r| r.index().map_or(0.0, |i| adjoints[i])));
        scratch_in.clear();
        scratch_in.resize(record.inputs.len(), 0.0);
        record.rule.propagate(scratch_out, scratch_in);
        for (r, inc) in record.inputs.iter().zip(scratch_in.iter()) {
            if let Some(i) = r.index() {
                adjoints[i] += inc;
            }
        }
    }

    fn interpret(&mut self) -> Result<(), TapeError> {
        if let Some(fault) = &self.fault {
            return Err(fault.clone());
        }
        if self.interpreted {
            return Err(TapeError::AlreadyInterpreted);
        }
        self.interpreted = true;

        let TapeInner {
            adjoints,
            offsets,
            edge_targets,
            edge_weights,
            callbacks,
            ..
        } = self;
        let mut pending = callbacks.len();
        let mut scratch_out = Vec::new();
        let mut scratch_in = Vec::new();

        for i in (0..adjoints.len()).rev() {
            // callbacks at position p fire once every entry >= p is done
            while pending > 0 && callbacks[pending - 1].0 > i {
                pending -= 1;
                Self::fire(adjoints, &callbacks[pending].1, &mut scratch_out, &mut scratch_in);
            }
            let a = adjoints[i];
            if a == 0.0 {
                continue;
            }
            let (lo, hi) = (offsets[i] as usize, offsets[i + 1] as usize);
            for e in lo..hi {
                adjoints[edge_targets[e] as usize] += edge_weights[e] * a;
            }
        }
        while pending > 0 {
            pending -= 1;
            Self::fire(adjoints, &callbacks[pending].1, &mut scratch_out, &mut scratch_in);
        }
        Ok(())
    }
}

/// Adjoint tape handle.
///
/// All methods take `&self`; the tape uses interior mutability so that active
/// scalars can hold a shared reference to it.
pub struct Tape {
    inner: RefCell<TapeInner>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Debug for Tape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tape").field("stats", &self.stats()).finish()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            inner: RefCell::new(TapeInner::new(None)),
        }
    }

    /// Creates a tape that refuses to grow past `limit` estimated bytes.
    pub fn with_byte_limit(limit: u64) -> Self {
        Tape {
            inner: RefCell::new(TapeInner::new(Some(limit))),
        }
    }

    /// Appends an entry whose edges are the non-passive `deps`.
    ///
    /// Non-finite weights are stored unchanged and propagate into the
    /// adjoints.
    pub fn record(&self, deps: &[(VarRef, f64)]) -> Result<VarRef, TapeError> {
        self.inner.borrow_mut().record(deps)
    }

    /// Records a fresh edge-free entry (an independent variable).
    pub fn new_variable(&self) -> Result<VarRef, TapeError> {
        self.record(&[])
    }

    /// Records `count` independent variables at once.
    pub fn new_variables(&self, count: usize) -> Result<Vec<VarRef>, TapeError> {
        let range = self.inner.borrow_mut().record_variables(count)?;
        Ok(range.map(VarRef).collect())
    }

    /// Records from operator overloads, which cannot return errors. On
    /// failure the tape keeps the error, the result is passive, and the next
    /// [`Tape::interpret_reverse`] reports it.
    pub(crate) fn record_or_fault(&self, deps: &[(VarRef, f64)]) -> VarRef {
        let mut inner = self.inner.borrow_mut();
        if inner.fault.is_some() {
            return VarRef::PASSIVE;
        }
        match inner.record(deps) {
            Ok(r) => r,
            Err(e) => {
                inner.fault = Some(e);
                VarRef::PASSIVE
            }
        }
    }

    /// Error raised by an operator overload since the last reset, if any.
    pub fn fault(&self) -> Option<TapeError> {
        self.inner.borrow().fault.clone()
    }

    /// Embeds a symbolic node at the current entry position.
    pub fn register_callback(&self, record: CallbackRecord) -> Result<(), TapeError> {
        let mut inner = self.inner.borrow_mut();
        if record.outputs.is_empty() {
            return Err(TapeError::EmptyOutputs);
        }
        let mut first_output = usize::MAX;
        for &r in &record.outputs {
            first_output = first_output.min(inner.check_ref(r)?);
        }
        for &r in &record.inputs {
            if r.is_passive() {
                continue;
            }
            let input = inner.check_ref(r)?;
            if input >= first_output {
                return Err(TapeError::OutputBeforeInput {
                    input,
                    output: first_output,
                });
            }
        }
        let position = inner.len();
        if let Some(&(previous, _)) = inner.callbacks.last() {
            if previous >= position {
                return Err(TapeError::CallbackOrder { position, previous });
            }
        }
        let scalars = record.rule.payload_scalars() as u64;
        inner.check_budget(0, 0, scalars)?;
        inner.payload_scalars += scalars;
        inner.callbacks.push((position, record));
        Ok(())
    }

    /// Keeps `payload` alive until the tape is reset or rewound past the
    /// current position, and charges `scalars` to the payload statistics.
    pub fn retain_payload(&self, payload: Rc<dyn Any>, scalars: usize) -> Result<(), TapeError> {
        let mut inner = self.inner.borrow_mut();
        inner.check_budget(0, 0, scalars as u64)?;
        let position = inner.len();
        inner.payload_scalars += scalars as u64;
        inner.retained.push(Retained {
            position,
            scalars: scalars as u64,
            _payload: payload,
        });
        Ok(())
    }

    pub fn set_adjoint(&self, r: VarRef, value: f64) -> Result<(), TapeError> {
        let mut inner = self.inner.borrow_mut();
        let i = inner.check_ref(r)?;
        inner.adjoints[i] = value;
        Ok(())
    }

    pub fn get_adjoint(&self, r: VarRef) -> Result<f64, TapeError> {
        let inner = self.inner.borrow();
        let i = inner.check_ref(r)?;
        Ok(inner.adjoints[i])
    }

    /// Adjoint of `r`, zero for passive or unknown refs.
    pub fn adjoint_or_zero(&self, r: VarRef) -> f64 {
        self.get_adjoint(r).unwrap_or(0.0)
    }

    /// Reverse sweep over all entries and callbacks.
    ///
    /// A tape can be interpreted once; a second call without an intervening
    /// [`reset`](Tape::reset), [`rewind_to`](Tape::rewind_to) or
    /// [`clear_adjoints`](Tape::clear_adjoints) is rejected instead of
    /// accumulating the adjoints twice.
    pub fn interpret_reverse(&self) -> Result<(), TapeError> {
        self.inner.borrow_mut().interpret()
    }

    /// Zeroes every adjoint slot and re-arms interpretation. Entries are kept.
    pub fn clear_adjoints(&self) {
        let mut inner = self.inner.borrow_mut();
        inner.adjoints.iter_mut().for_each(|a| *a = 0.0);
        inner.interpreted = false;
    }

    /// Empties the tape, dropping callbacks and retained payloads. Allocated
    /// capacity is kept.
    pub fn reset(&self) {
        self.inner.borrow_mut().truncate(0);
    }

    pub fn position(&self) -> TapePosition {
        TapePosition(self.inner.borrow().len())
    }

    /// Drops everything recorded after `position` and zeroes all adjoints.
    pub fn rewind_to(&self, position: TapePosition) -> Result<(), TapeError> {
        let mut inner = self.inner.borrow_mut();
        let current = inner.len();
        if position.0 > current {
            return Err(TapeError::RewindBeyond {
                requested: position.0,
                current,
            });
        }
        inner.truncate(position.0);
        Ok(())
    }

    pub fn stats(&self) -> TapeStats {
        self.inner.borrow().stats()
    }

    /// Edges of entry `r`, in recording order.
    pub fn edges(&self, r: VarRef) -> Result<Vec<Edge>, TapeError> {
        let inner = self.inner.borrow();
        let i = inner.check_ref(r)?;
        let (lo, hi) = (inner.offsets[i] as usize, inner.offsets[i + 1] as usize);
        Ok((lo..hi)
            .map(|e| Edge {
                target: VarRef(inner.edge_targets[e]),
                weight: inner.edge_weights[e],
            })
            .collect())
    }

    /// Snapshot of every adjoint slot.
    pub fn adjoints(&self) -> Vec<f64> {
        self.inner.borrow().adjoints.clone()
    }

    pub(crate) fn same(&self, other: &Tape) -> bool {
        std::ptr::eq(self, other)
    }
}

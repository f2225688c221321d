//! Bit-exact simulation of placement and coded delivery.
//!
//! Files are synthetic bit strings of length `F`. File `n` is cut into
//! subfiles `W_{n,S}`, one per user subset `S`, of `a_{|S|} F` bits each,
//! laid out in canonical order: by subset size `l = 0..=K`, then by
//! ascending bitmask. User `k` caches every `W_{n,S}` with `k ∈ S`.
//!
//! For a demand `d`, the server picks a leader group holding one requester
//! per distinct file and sends, for each subset `S` of size `l + 1` that
//! meets the leader group, `XOR_{k ∈ S} W_{d_k, S \ {k}}`. Subsets that
//! miss the leader group are redundant and skipped.
//!
//! Users are 0-based in this API (bit `k` of a [`SubsetId`] is user `k`)
//! and 1-based when displayed. File indices are 1-based throughout.

mod bits;
mod decode;

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use bits::Bits;
pub use decode::decode_check;

use crate::demand_oracle::DemandVector;
use crate::error::{Error, Result};
use crate::placement::{check_feasible, per_demand_rate, PlacementVector, ProblemInstance};
use crate::rational::{common_denominator, integer, Rational};

/// Largest user count the simulator accepts; the store holds `N 2^K` subfiles.
pub const MAX_SIMULATED_USERS: usize = 20;

/// A set of users as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SubsetId(pub u64);

impl SubsetId {
    pub fn singleton(user: usize) -> Self {
        Self(1 << user)
    }

    pub fn size(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, user: usize) -> bool {
        self.0 >> user & 1 == 1
    }

    pub fn with(self, user: usize) -> Self {
        Self(self.0 | 1 << user)
    }

    pub fn without(self, user: usize) -> Self {
        Self(self.0 & !(1 << user))
    }

    pub fn intersects(self, other: SubsetId) -> bool {
        self.0 & other.0 != 0
    }

    /// Members in ascending order.
    pub fn users(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                return None;
            }
            let u = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(u)
        })
    }

    /// Binary string with user 1 as the leftmost character.
    pub fn to_bit_string(self, users: usize) -> String {
        (0..users).map(|u| if self.contains(u) { '1' } else { '0' }).collect()
    }
}

impl fmt::Display for SubsetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_char('{')?;
        for (i, u) in self.users().enumerate() {
            if i > 0 {
                f.write_char(',')?;
            }
            write!(f, "{}", u + 1)?;
        }
        f.write_char('}')
    }
}

/// All subsets of `{0..users}` of the given size, ascending by bitmask.
pub fn subsets_of_size(users: usize, size: usize) -> Vec<SubsetId> {
    if size > users {
        return Vec::new();
    }
    if size == 0 {
        return vec![SubsetId(0)];
    }
    let limit = 1u64 << users;
    let mut out = Vec::new();
    let mut mask = (1u64 << size) - 1;
    while mask < limit {
        out.push(SubsetId(mask));
        // Gosper's hack: next larger integer with the same popcount.
        let c = mask & mask.wrapping_neg();
        let r = mask + c;
        mask = (((r ^ mask) >> 2) / c) | r;
    }
    out
}

/// Every subset in canonical subfile order: by size, then by bitmask.
pub fn canonical_subsets(users: usize) -> Vec<SubsetId> {
    (0..=users).flat_map(|l| subsets_of_size(users, l)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubfileId {
    /// 1-based file index.
    pub file: usize,
    pub subset: SubsetId,
}

impl fmt::Display for SubfileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "W_{},{}", self.file, self.subset)
    }
}

/// Where synthetic file contents come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PayloadSource {
    /// ChaCha8 stream seeded with the given value.
    Random(u64),
    Zeros,
    Ones,
}

impl fmt::Display for PayloadSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PayloadSource::Random(seed) => write!(f, "random:{seed}"),
            PayloadSource::Zeros => f.write_str("zeros"),
            PayloadSource::Ones => f.write_str("ones"),
        }
    }
}

/// Smallest `F` such that every `a_l F` is an integer.
pub fn choose_file_size(a: &PlacementVector) -> Result<usize> {
    let f = common_denominator(a.entries());
    f.to_usize()
        .ok_or_else(|| Error::FileSizeTooLarge(f.to_string()))
}

/// Bits per subfile at each level for a placement and file size.
pub fn level_sizes(a: &PlacementVector, file_size: usize) -> Result<Vec<usize>> {
    a.entries()
        .iter()
        .map(|al| {
            let bits = al * integer(file_size);
            if !bits.is_integer() {
                return Err(Error::NonIntegralFileSize { file_size });
            }
            bits.to_integer()
                .to_usize()
                .ok_or_else(|| Error::FileSizeTooLarge(bits.to_string()))
        })
        .collect()
}

/// Every subfile of every file, plus the original files.
#[derive(Debug, Clone)]
pub struct SubfileStore {
    users: usize,
    file_size: usize,
    level_bits: Vec<usize>,
    source: PayloadSource,
    originals: Vec<Bits>,
    subfiles: BTreeMap<SubfileId, Bits>,
}

impl SubfileStore {
    pub fn files(&self) -> usize {
        self.originals.len()
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn file_size(&self) -> usize {
        self.file_size
    }

    /// Subfile length in bits for each subset size.
    pub fn level_bits(&self) -> &[usize] {
        &self.level_bits
    }

    pub fn source(&self) -> PayloadSource {
        self.source
    }

    /// Original contents of 1-based file `n`.
    pub fn original(&self, file: usize) -> &Bits {
        &self.originals[file - 1]
    }

    pub fn subfile(&self, id: SubfileId) -> &Bits {
        &self.subfiles[&id]
    }

    /// Concatenates the subfiles of `file` in canonical order.
    pub fn reassemble(&self, file: usize) -> Bits {
        let mut out = Bits::zeros(0);
        for subset in canonical_subsets(self.users) {
            out.extend_from(self.subfile(SubfileId { file, subset }));
        }
        out
    }
}

/// One user's cache contents.
#[derive(Debug, Clone)]
pub struct UserCache {
    /// 0-based.
    pub user: usize,
    pub entries: BTreeMap<SubfileId, Bits>,
}

impl UserCache {
    pub fn occupancy_bits(&self) -> usize {
        self.entries.values().map(Bits::len).sum()
    }
}

fn generate_file(source: PayloadSource, file: usize, file_size: usize) -> Bits {
    match source {
        PayloadSource::Zeros => Bits::zeros(file_size),
        PayloadSource::Ones => Bits::ones(file_size),
        PayloadSource::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(file as u64);
            Bits::from_fn(file_size, |_| rng.random())
        }
    }
}

/// Splits every file per the placement and fills each user's cache.
pub fn partition_and_cache(
    inst: &ProblemInstance,
    a: &PlacementVector,
    file_size: usize,
    source: PayloadSource,
) -> Result<(SubfileStore, Vec<UserCache>)> {
    let users = inst.users();
    if users > MAX_SIMULATED_USERS {
        return Err(Error::InvalidInstance(format!(
            "simulation supports at most {MAX_SIMULATED_USERS} users, got {users}"
        )));
    }
    let report = check_feasible(inst, a)?;
    if !report.is_feasible() {
        return Err(Error::Infeasible(report.violations));
    }
    if file_size == 0 {
        return Err(Error::NonIntegralFileSize { file_size });
    }
    let level_bits = level_sizes(a, file_size)?;

    let originals: Vec<Bits> = (1..=inst.files())
        .map(|n| generate_file(source, n, file_size))
        .collect();
    let mut subfiles = BTreeMap::new();
    for (idx, original) in originals.iter().enumerate() {
        let mut offset = 0;
        for subset in canonical_subsets(users) {
            let len = level_bits[subset.size()];
            subfiles.insert(
                SubfileId {
                    file: idx + 1,
                    subset,
                },
                original.slice(offset, len),
            );
            offset += len;
        }
        debug_assert_eq!(offset, file_size);
    }

    let caches = (0..users)
        .map(|user| UserCache {
            user,
            entries: subfiles
                .iter()
                .filter(|(id, _)| id.subset.contains(user))
                .map(|(id, bits)| (*id, bits.clone()))
                .collect(),
        })
        .collect();

    Ok((
        SubfileStore {
            users,
            file_size,
            level_bits,
            source,
            originals,
            subfiles,
        },
        caches,
    ))
}

/// One requester per distinct file: the lowest-indexed user asking for it.
pub fn leader_set(demand: &DemandVector) -> SubsetId {
    let mut seen = Vec::new();
    let mut leaders = SubsetId::default();
    for (user, &file) in demand.entries().iter().enumerate() {
        if !seen.contains(&file) {
            seen.push(file);
            leaders = leaders.with(user);
        }
    }
    leaders
}

/// Subsets of the given size that meet `leaders`, ascending by bitmask.
pub fn non_redundant_subsets(users: usize, leaders: SubsetId, size: usize) -> Vec<SubsetId> {
    subsets_of_size(users, size)
        .into_iter()
        .filter(|s| s.intersects(leaders))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedMessage {
    /// Recipients; the message serves subfiles of level `|subset| - 1`.
    pub subset: SubsetId,
    pub payload: Bits,
}

/// All multicast messages for one demand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeliveryTranscript {
    pub demand: DemandVector,
    pub leader_set: SubsetId,
    pub messages: Vec<CodedMessage>,
    pub total_bits: usize,
    pub file_size: usize,
    /// Subfile length per subset size; part of the public placement.
    pub level_bits: Vec<usize>,
    pub source: PayloadSource,
}

impl DeliveryTranscript {
    pub fn users(&self) -> usize {
        self.demand.users()
    }

    /// Structured text record used for golden files.
    pub fn to_record(&self) -> String {
        let users = self.users();
        let mut out = String::new();
        let _ = writeln!(out, "demand: {}", self.demand);
        let _ = writeln!(out, "leader_set: {}", self.leader_set);
        let _ = writeln!(out, "file_size: {}", self.file_size);
        let _ = writeln!(
            out,
            "level_bits: {}",
            self.level_bits.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
        );
        let _ = writeln!(out, "payload: {}", self.source);
        let _ = writeln!(out, "messages: {}", self.messages.len());
        for m in &self.messages {
            let _ = writeln!(
                out,
                "message: subset={} users={} bits={} hex={}",
                m.subset.to_bit_string(users),
                m.subset,
                m.payload.len(),
                m.payload.to_hex()
            );
        }
        let _ = writeln!(out, "total_bits: {}", self.total_bits);
        out
    }

    /// The transcript with message `index` removed (for mutation tests).
    pub fn without_message(&self, index: usize) -> Self {
        let mut t = self.clone();
        let removed = t.messages.remove(index);
        t.total_bits -= removed.payload.len();
        t
    }
}

/// Builds the coded messages for `demand` from the server-side store.
pub fn build_messages(
    inst: &ProblemInstance,
    a: &PlacementVector,
    demand: &DemandVector,
    store: &SubfileStore,
) -> Result<DeliveryTranscript> {
    if store.users() != inst.users() || store.files() != inst.files() {
        return Err(Error::Inconsistent(format!(
            "store has N={}, K={} but instance is {inst}",
            store.files(),
            store.users()
        )));
    }
    if demand.users() != inst.users() || demand.files() != inst.files() {
        return Err(Error::Inconsistent(format!(
            "demand {demand} does not fit instance {inst}"
        )));
    }
    if level_sizes(a, store.file_size())? != store.level_bits() {
        return Err(Error::Inconsistent(
            "placement does not match the store's subfile sizes".into(),
        ));
    }

    build_messages_with_leaders(inst, a, demand, store, leader_set(demand))
}

/// [`build_messages`] with a caller-chosen leader group: any set holding
/// exactly one requester of each distinct file.
pub fn build_messages_with_leaders(
    inst: &ProblemInstance,
    a: &PlacementVector,
    demand: &DemandVector,
    store: &SubfileStore,
    leaders: SubsetId,
) -> Result<DeliveryTranscript> {
    let users = inst.users();
    let mut covered: Vec<usize> = leaders.users().filter(|&u| u < users).map(|u| demand.file_of(u)).collect();
    covered.sort_unstable();
    covered.dedup();
    if leaders.size() != demand.distinct() || covered.len() != demand.distinct() || leaders.0 >> users != 0 {
        return Err(Error::Inconsistent(format!(
            "{leaders} is not one requester per distinct file of {demand}"
        )));
    }
    let mut messages = Vec::new();
    for level in 0..users {
        if a.get(level).is_zero() {
            continue;
        }
        for subset in non_redundant_subsets(users, leaders, level + 1) {
            let mut payload = Bits::zeros(store.level_bits()[level]);
            for user in subset.users() {
                payload.xor_assign(store.subfile(SubfileId {
                    file: demand.file_of(user),
                    subset: subset.without(user),
                }));
            }
            messages.push(CodedMessage { subset, payload });
        }
    }
    let total_bits = messages.iter().map(|m| m.payload.len()).sum();
    Ok(DeliveryTranscript {
        demand: demand.clone(),
        leader_set: leaders,
        messages,
        total_bits,
        file_size: store.file_size(),
        level_bits: store.level_bits().to_vec(),
        source: store.source(),
    })
}

/// Delivered bits normalized by the file size.
pub fn delivered_load(transcript: &DeliveryTranscript) -> Rational {
    Rational::new(transcript.total_bits.into(), transcript.file_size.into())
}

/// Everything produced by simulating one demand.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub transcript: DeliveryTranscript,
    pub load: Rational,
    pub expected_load: Rational,
    /// Per user: decoded bits, or why decoding failed.
    pub decoded: Vec<Result<Bits>>,
    pub occupancy_bits: Vec<usize>,
}

impl Simulation {
    /// Every user recovered exactly the file it asked for.
    pub fn all_decoded(&self, store: &SubfileStore) -> bool {
        self.decoded.iter().enumerate().all(|(user, r)| {
            r.as_ref()
                .is_ok_and(|bits| bits == store.original(self.transcript.demand.file_of(user)))
        })
    }
}

/// Runs delivery and decoding for one demand against a prepared store.
pub fn simulate_demand(
    inst: &ProblemInstance,
    a: &PlacementVector,
    demand: &DemandVector,
    store: &SubfileStore,
    caches: &[UserCache],
) -> Result<Simulation> {
    let transcript = build_messages(inst, a, demand, store)?;
    let load = delivered_load(&transcript);
    let expected_load = per_demand_rate(inst, a, demand.distinct())?;
    let decoded = caches.iter().map(|c| decode_check(&transcript, c)).collect();
    Ok(Simulation {
        transcript,
        load,
        expected_load,
        decoded,
        occupancy_bits: caches.iter().map(UserCache::occupancy_bits).collect(),
    })
}

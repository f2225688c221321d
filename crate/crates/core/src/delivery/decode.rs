//! Decodability check by GF(2) elimination.
//!
//! Level `l` is solved on its own: the unknowns are the symbols `W_{n,S}`
//! with `|S| = l`, the user's cached symbols are unit rows, and every
//! message for a subset of size `l + 1` is a row with one coefficient per
//! recipient. Rows are kept in reduced row echelon form with payloads
//! carried along, so a needed symbol is recoverable exactly when some row
//! reduces to its unit vector.

use std::collections::HashMap;

use super::{canonical_subsets, subsets_of_size, Bits, DeliveryTranscript, SubfileId, UserCache};
use crate::error::{Error, Result};

struct Row {
    coeffs: Vec<u64>,
    payload: Bits,
}

impl Row {
    fn bit(&self, col: usize) -> bool {
        self.coeffs[col / 64] >> (col % 64) & 1 == 1
    }

    fn leading(&self) -> Option<usize> {
        self.coeffs
            .iter()
            .enumerate()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    fn xor_with(&mut self, other: &Row) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a ^= b;
        }
        self.payload.xor_assign(&other.payload);
    }

    fn is_unit(&self, col: usize) -> bool {
        self.coeffs.iter().enumerate().all(|(i, &w)| {
            let expected = if i == col / 64 { 1u64 << (col % 64) } else { 0 };
            w == expected
        })
    }
}

/// Row space kept in reduced row echelon form.
struct Echelon {
    width: usize,
    /// Pivot column -> row.
    rows: HashMap<usize, Row>,
}

impl Echelon {
    fn new(width: usize) -> Self {
        Self {
            width,
            rows: HashMap::new(),
        }
    }

    fn row(&self, cols: &[usize], payload: Bits) -> Row {
        let mut coeffs = vec![0u64; self.width.div_ceil(64)];
        for &c in cols {
            coeffs[c / 64] ^= 1 << (c % 64);
        }
        Row { coeffs, payload }
    }

    /// Adds a row; fails if it contradicts the rows already present.
    fn insert(&mut self, mut row: Row) -> std::result::Result<(), ()> {
        let pivots: Vec<usize> = self.rows.keys().copied().collect();
        for p in pivots {
            if row.bit(p) {
                row.xor_with(&self.rows[&p]);
            }
        }
        let Some(lead) = row.leading() else {
            return if row.payload.is_zero() { Ok(()) } else { Err(()) };
        };
        for other in self.rows.values_mut() {
            if other.bit(lead) {
                other.xor_with(&row);
            }
        }
        self.rows.insert(lead, row);
        Ok(())
    }

    fn solved(&self, col: usize) -> Option<&Bits> {
        self.rows
            .get(&col)
            .filter(|r| r.is_unit(col))
            .map(|r| &r.payload)
    }
}

/// Reconstructs the file requested by `cache.user` from its cache and the
/// transcript, or reports the first subfile it cannot recover.
pub fn decode_check(transcript: &DeliveryTranscript, cache: &UserCache) -> Result<Bits> {
    let users = transcript.users();
    let files = transcript.demand.files();
    let me = cache.user;
    if me >= users {
        return Err(Error::Inconsistent(format!("user {} is not in the system", me + 1)));
    }
    if transcript.level_bits.len() != users + 1 {
        return Err(Error::Inconsistent("transcript level sizes do not match the user count".into()));
    }
    let wanted = transcript.demand.file_of(me);
    let mut recovered: HashMap<SubfileId, Bits> = HashMap::new();

    for level in 0..=users {
        let bits = transcript.level_bits[level];
        let subsets = subsets_of_size(users, level);
        let needed = subsets.iter().filter(|s| !s.contains(me)).map(|&subset| SubfileId {
            file: wanted,
            subset,
        });
        if bits == 0 {
            recovered.extend(needed.map(|id| (id, Bits::zeros(0))));
            continue;
        }

        let mut index = HashMap::new();
        for n in 1..=files {
            for &subset in &subsets {
                let next = index.len();
                index.insert(SubfileId { file: n, subset }, next);
            }
        }
        let mut system = Echelon::new(index.len());
        for (id, payload) in cache.entries.range(..) {
            if let Some(&col) = index.get(id) {
                let row = system.row(&[col], payload.clone());
                system
                    .insert(row)
                    .map_err(|_| Error::Inconsistent(format!("cached {id} conflicts with other rows")))?;
            }
        }
        for message in transcript.messages.iter().filter(|m| m.subset.size() == level + 1) {
            let cols: Vec<usize> = message
                .subset
                .users()
                .map(|u| {
                    index[&SubfileId {
                        file: transcript.demand.file_of(u),
                        subset: message.subset.without(u),
                    }]
                })
                .collect();
            if message.payload.len() != bits {
                return Err(Error::Inconsistent(format!(
                    "message to {} has {} bits, expected {bits}",
                    message.subset,
                    message.payload.len()
                )));
            }
            let row = system.row(&cols, message.payload.clone());
            system.insert(row).map_err(|_| {
                Error::Inconsistent(format!("message to {} contradicts earlier rows", message.subset))
            })?;
        }
        for id in needed {
            let solved = system.solved(index[&id]).ok_or(Error::Undecodable {
                user: me + 1,
                file: wanted,
                missing: id,
            })?;
            recovered.insert(id, solved.clone());
        }
    }

    let mut file = Bits::zeros(0);
    for subset in canonical_subsets(users) {
        let id = SubfileId { file: wanted, subset };
        let part = if subset.contains(me) {
            cache.entries.get(&id).ok_or_else(|| {
                Error::Inconsistent(format!("user {} should cache {id}", me + 1))
            })?
        } else {
            &recovered[&id]
        };
        file.extend_from(part);
    }
    Ok(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delivery::{build_messages, partition_and_cache, PayloadSource};
    use crate::demand_oracle::DemandVector;
    use crate::placement::{optimal_placement, ProblemInstance};
    use crate::rational::integer;

    #[test]
    fn echelon_solves_small_system() {
        // x0 ^ x1 = 1, x1 = 0 over 1-bit payloads.
        let mut e = Echelon::new(2);
        let r = e.row(&[0, 1], Bits::ones(1));
        e.insert(r).unwrap();
        assert!(e.solved(0).is_none());
        let r = e.row(&[1], Bits::zeros(1));
        e.insert(r).unwrap();
        assert_eq!(e.solved(0), Some(&Bits::ones(1)));
        assert_eq!(e.solved(1), Some(&Bits::zeros(1)));
        let r = e.row(&[0], Bits::zeros(1));
        assert!(e.insert(r).is_err());
    }

    #[test]
    fn every_user_decodes_every_demand() {
        let inst = ProblemInstance::new(2, 3, integer(1)).unwrap();
        let a = optimal_placement(&inst);
        let (store, caches) = partition_and_cache(&inst, &a, 6, PayloadSource::Random(11)).unwrap();
        for d in DemandVector::all(2, 3) {
            let t = build_messages(&inst, &a, &d, &store).unwrap();
            for cache in &caches {
                let bits = decode_check(&t, cache).unwrap();
                assert_eq!(&bits, store.original(d.file_of(cache.user)), "d={d} user={}", cache.user + 1);
            }
        }
    }

    #[test]
    fn dropping_a_message_breaks_decoding() {
        let inst = ProblemInstance::new(2, 3, integer(1)).unwrap();
        let a = optimal_placement(&inst);
        let (store, caches) = partition_and_cache(&inst, &a, 6, PayloadSource::Random(2)).unwrap();
        let d = DemandVector::new(2, vec![1, 2, 1]).unwrap();
        let t = build_messages(&inst, &a, &d, &store).unwrap();
        for i in 0..t.messages.len() {
            let cut = t.without_message(i);
            let failures = caches.iter().filter(|c| decode_check(&cut, c).is_err()).count();
            assert!(failures > 0, "dropping message {i} went unnoticed");
        }
    }

    #[test]
    fn full_cache_decodes_from_cache() {
        let inst = ProblemInstance::new(2, 2, integer(2)).unwrap();
        let a = optimal_placement(&inst);
        let (store, caches) = partition_and_cache(&inst, &a, 1, PayloadSource::Ones).unwrap();
        let d = DemandVector::new(2, vec![2, 1]).unwrap();
        let t = build_messages(&inst, &a, &d, &store).unwrap();
        assert!(t.messages.is_empty());
        assert_eq!(&decode_check(&t, &caches[0]).unwrap(), store.original(2));
    }
}

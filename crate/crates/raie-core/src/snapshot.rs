//! Binary region-set snapshots.
//!
//! Layout (all little-endian):
//!
//! ```text
//! magic "RAIE" | version u32 = 1 | dim u32 | K u32
//! K × { id u64 | center dim×f64 | radius f64 |
//!       member_count u64 | edit_count u64 | created_phase u8 }
//! buffer_count u32 | buffer_count × (dim×f64)
//! config: tau f64 | delta_min f64 | beta f64 | gamma f64 |
//!         lambda_expand f64 | alpha_expand f64 | r_max f64 |
//!         radius_quantile f64 | buffer_threshold u32 | k_add u32 |
//!         lambda_sep f64 | overlap_distance_mode u32
//! crc32 u32 (over all preceding bytes)
//! ```
//!
//! `created_phase`: 0 = Setup, 1 = Finetune. `overlap_distance_mode`:
//! 0 = Angular, 1 = EuclideanLiteral. Restore is strict: bad magic,
//! version, checksum, phase byte, non-unit centers, out-of-range radii,
//! or trailing bytes are all rejected.

use crate::error::SnapshotError;
use crate::region::{CreatedPhase, EditConfig, OverlapDistanceMode, Region, RegionId, RegionSet};
use crate::vector::UnitVector;
use crate::wire::{Reader, Writer};

pub const MAGIC: &[u8; 4] = b"RAIE";
pub const VERSION: u32 = 1;

/// Serializes a region set; the inverse of [`restore`].
pub fn snapshot(set: &RegionSet) -> Vec<u8> {
    let mut w = Writer::new();
    w.bytes(MAGIC);
    w.u32(VERSION);
    w.u32(set.dim() as u32);
    w.u32(set.k() as u32);
    for r in set.regions() {
        w.u64(r.id.0);
        for &x in r.center.as_slice() {
            w.f64(x);
        }
        w.f64(r.radius);
        w.u64(r.member_count);
        w.u64(r.edit_count);
        w.u8(match r.created_at_phase {
            CreatedPhase::Setup => 0,
            CreatedPhase::Finetune => 1,
        });
    }
    w.u32(set.buffer().len() as u32);
    for v in set.buffer() {
        for &x in v.as_slice() {
            w.f64(x);
        }
    }
    let c = set.config();
    w.f64(c.tau);
    w.f64(c.delta_min);
    w.f64(c.beta);
    w.f64(c.gamma);
    w.f64(c.lambda_expand);
    w.f64(c.alpha_expand);
    w.f64(c.r_max);
    w.f64(c.radius_quantile);
    w.u32(c.buffer_threshold);
    w.u32(c.k_add);
    w.f64(c.lambda_sep);
    w.u32(match c.overlap_distance_mode {
        OverlapDistanceMode::Angular => 0,
        OverlapDistanceMode::EuclideanLiteral => 1,
    });
    w.finish()
}

/// Reconstructs a region set bit-exactly from [`snapshot`] output.
pub fn restore(bytes: &[u8]) -> Result<RegionSet, SnapshotError> {
    let mut r = Reader::new_checked(bytes)?;
    r.magic(MAGIC)?;
    let version = r.u32()?;
    if version != VERSION {
        return Err(SnapshotError::UnsupportedVersion(version));
    }
    let dim = r.u32()? as usize;
    let k = r.u32()? as usize;
    if dim == 0 && k > 0 {
        return Err(SnapshotError::Corrupt("zero dimension with regions"));
    }

    let mut regions = Vec::new();
    for _ in 0..k {
        let id = RegionId(r.u64()?);
        let center = UnitVector::new(r.f64_vec(dim)?)
            .map_err(|_| SnapshotError::Corrupt("center is not unit-norm"))?;
        let radius = r.f64()?;
        if !(radius >= 0.0 && radius <= std::f64::consts::PI) {
            return Err(SnapshotError::Corrupt("radius outside [0, pi]"));
        }
        let member_count = r.u64()?;
        let edit_count = r.u64()?;
        let created_at_phase = match r.u8()? {
            0 => CreatedPhase::Setup,
            1 => CreatedPhase::Finetune,
            _ => return Err(SnapshotError::Corrupt("unknown phase byte")),
        };
        regions.push(Region {
            id,
            center,
            radius,
            member_count,
            edit_count,
            created_at_phase,
        });
    }

    let buffer_count = r.u32()? as usize;
    let mut buffer = Vec::new();
    for _ in 0..buffer_count {
        let v = UnitVector::new(r.f64_vec(dim)?)
            .map_err(|_| SnapshotError::Corrupt("buffered vector is not unit-norm"))?;
        buffer.push(v);
    }

    let config = EditConfig {
        tau: r.f64()?,
        delta_min: r.f64()?,
        beta: r.f64()?,
        gamma: r.f64()?,
        lambda_expand: r.f64()?,
        alpha_expand: r.f64()?,
        r_max: r.f64()?,
        radius_quantile: r.f64()?,
        buffer_threshold: r.u32()?,
        k_add: r.u32()?,
        lambda_sep: r.f64()?,
        overlap_distance_mode: match r.u32()? {
            0 => OverlapDistanceMode::Angular,
            1 => OverlapDistanceMode::EuclideanLiteral,
            _ => return Err(SnapshotError::Corrupt("unknown distance mode")),
        },
    };
    r.expect_end()?;

    for region in &regions {
        if region.radius > config.r_max {
            return Err(SnapshotError::Corrupt("radius exceeds configured cap"));
        }
    }
    RegionSet::from_parts(regions, dim, config, buffer)
        .map_err(|_| SnapshotError::Corrupt("inconsistent region state"))
}

//! Minimal nested-scheme HEALPix: angle → pixel and pixel → center angle.
//!
//! Only what the orientation grid needs. `nside` must be a power of two.

use std::f64::consts::{FRAC_PI_2, TAU};

const JRLL: [i64; 12] = [2, 2, 2, 2, 3, 3, 3, 3, 4, 4, 4, 4];
const JPLL: [i64; 12] = [1, 3, 5, 7, 0, 2, 4, 6, 1, 3, 5, 7];

pub fn pixel_count(nside: u64) -> u64 {
    12 * nside * nside
}

/// Spreads the low 32 bits of `v` onto even bit positions.
fn spread_bits(v: u64) -> u64 {
    let mut x = v & 0xffff_ffff;
    x = (x | (x << 16)) & 0x0000_ffff_0000_ffff;
    x = (x | (x << 8)) & 0x00ff_00ff_00ff_00ff;
    x = (x | (x << 4)) & 0x0f0f_0f0f_0f0f_0f0f;
    x = (x | (x << 2)) & 0x3333_3333_3333_3333;
    (x | (x << 1)) & 0x5555_5555_5555_5555
}

fn compress_bits(v: u64) -> u64 {
    let mut x = v & 0x5555_5555_5555_5555;
    x = (x | (x >> 1)) & 0x3333_3333_3333_3333;
    x = (x | (x >> 2)) & 0x0f0f_0f0f_0f0f_0f0f;
    x = (x | (x >> 4)) & 0x00ff_00ff_00ff_00ff;
    x = (x | (x >> 8)) & 0x0000_ffff_0000_ffff;
    (x | (x >> 16)) & 0xffff_ffff
}

fn xyf_to_nest(nside: u64, ix: u64, iy: u64, face: u64) -> u64 {
    face * nside * nside + spread_bits(ix) + (spread_bits(iy) << 1)
}

fn nest_to_xyf(nside: u64, pix: u64) -> (u64, u64, u64) {
    let npface = nside * nside;
    let face = pix / npface;
    let ipf = pix % npface;
    (compress_bits(ipf), compress_bits(ipf >> 1), face)
}

/// Nested pixel containing colatitude `theta ∈ [0, π]` and longitude `phi`.
pub fn ang2pix_nest(nside: u64, theta: f64, phi: f64) -> u64 {
    let ns = nside as i64;
    let z = theta.cos();
    let za = z.abs();
    let tt = phi.rem_euclid(TAU) / FRAC_PI_2; // in [0, 4)
    let tt = if tt >= 4.0 { 0.0 } else { tt };

    let (ix, iy, face) = if za <= 2.0 / 3.0 {
        let temp1 = nside as f64 * (0.5 + tt);
        let temp2 = nside as f64 * z * 0.75;
        let jp = (temp1 - temp2).floor() as i64;
        let jm = (temp1 + temp2).floor() as i64;
        let ifp = jp.div_euclid(ns);
        let ifm = jm.div_euclid(ns);
        let face = if ifp == ifm {
            ifp.rem_euclid(4) + 4
        } else if ifp < ifm {
            ifp.rem_euclid(4)
        } else {
            ifm.rem_euclid(4) + 8
        };
        let ix = jm.rem_euclid(ns);
        let iy = ns - jp.rem_euclid(ns) - 1;
        (ix, iy, face)
    } else {
        let ntt = (tt.floor() as i64).min(3);
        let tp = tt - ntt as f64;
        let tmp = nside as f64 * (3.0 * (1.0 - za)).sqrt();
        let jp = ((tp * tmp).floor() as i64).min(ns - 1);
        let jm = (((1.0 - tp) * tmp).floor() as i64).min(ns - 1);
        if z >= 0.0 {
            (ns - jm - 1, ns - jp - 1, ntt)
        } else {
            (jp, jm, ntt + 8)
        }
    };
    xyf_to_nest(nside, ix as u64, iy as u64, face as u64)
}

/// Center `(theta, phi)` of a nested pixel.
pub fn pix2ang_nest(nside: u64, pix: u64) -> (f64, f64) {
    let ns = nside as i64;
    let (ix, iy, face) = nest_to_xyf(nside, pix);
    let (ix, iy, face) = (ix as i64, iy as i64, face as usize);
    let nl4 = 4 * ns;
    let npface = (ns * ns) as f64;

    let jr = JRLL[face] * ns - ix - iy - 1;
    let (nr, z, kshift) = if jr < ns {
        let nr = jr;
        (nr, 1.0 - (nr * nr) as f64 / (3.0 * npface), 0)
    } else if jr > 3 * ns {
        let nr = nl4 - jr;
        (nr, (nr * nr) as f64 / (3.0 * npface) - 1.0, 0)
    } else {
        (ns, (2 * ns - jr) as f64 * 2.0 / (3.0 * ns as f64), (jr - ns) & 1)
    };

    let mut jp = (JPLL[face] * nr + ix - iy + 1 + kshift) / 2;
    if jp > nl4 {
        jp -= nl4;
    }
    if jp < 1 {
        jp += nl4;
    }
    let phi = (jp as f64 - (kshift + 1) as f64 * 0.5) * (FRAC_PI_2 / nr as f64);
    (z.clamp(-1.0, 1.0).acos(), phi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_all_pixels() {
        for nside in [1u64, 2, 4, 8] {
            for p in 0..pixel_count(nside) {
                let (t, f) = pix2ang_nest(nside, p);
                assert_eq!(ang2pix_nest(nside, t, f), p, "nside {nside} pix {p}");
            }
        }
    }

    #[test]
    fn base_pixel_centers() {
        // Base pixel 0 is centered at z = 2/3, phi = π/4.
        let (t, f) = pix2ang_nest(1, 0);
        assert!((t.cos() - 2.0 / 3.0).abs() < 1e-12);
        assert!((f - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
        // Base pixel 4 is on the equator at phi = 0.
        let (t, f) = pix2ang_nest(1, 4);
        assert!(t.cos().abs() < 1e-12);
        assert!(f.abs() < 1e-12);
    }

    #[test]
    fn bit_interleave_inverse() {
        for v in [0u64, 1, 5, 0xabcd, 0xffff_ffff] {
            assert_eq!(compress_bits(spread_bits(v)), v);
        }
    }
}

//! Initial TTL inference and router signatures.

use crate::model::{Brand, RouterSignature};

const INITIALS: [u8; 3] = [64, 128, 255];

/// Smallest usual initial TTL that could have produced `received_ttl`.
pub fn infer_initial_ttl(received_ttl: u8) -> u8 {
    INITIALS
        .into_iter()
        .find(|&i| i >= received_ttl)
        .unwrap_or(255)
}

/// Number of hops the reply travelled, counting the replying router.
pub fn path_len(received_ttl: u8) -> i32 {
    i32::from(infer_initial_ttl(received_ttl)) - i32::from(received_ttl) + 1
}

pub fn signature(ttl_te: u8, ttl_er: u8) -> RouterSignature {
    let te = infer_initial_ttl(ttl_te);
    let er = infer_initial_ttl(ttl_er);
    let brand = match (te, er) {
        (255, 255) => Brand::CiscoLike,
        (255, 64) => Brand::JuniperJunOS,
        (128, 128) => Brand::JuniperJunosE,
        (64, 64) => Brand::UnixLike,
        _ => Brand::Unknown,
    };
    RouterSignature {
        te_initial_ttl: te,
        er_initial_ttl: er,
        brand,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_ttl_ceiling() {
        assert_eq!(infer_initial_ttl(253), 255);
        assert_eq!(infer_initial_ttl(62), 64);
        assert_eq!(infer_initial_ttl(120), 128);
        assert_eq!(infer_initial_ttl(64), 64);
        assert_eq!(infer_initial_ttl(65), 128);
    }

    #[test]
    fn path_lengths() {
        assert_eq!(path_len(247), 9);
        assert_eq!(path_len(253), 3);
        assert_eq!(path_len(64), 1);
        assert_eq!(path_len(247) - path_len(253), 6);
    }

    #[test]
    fn table_one() {
        assert_eq!(signature(250, 250).brand, Brand::CiscoLike);
        assert_eq!(signature(250, 62).brand, Brand::JuniperJunOS);
        assert_eq!(signature(60, 60).brand, Brand::UnixLike);
        assert_eq!(signature(120, 125).brand, Brand::JuniperJunosE);
        assert_eq!(signature(60, 250).brand, Brand::Unknown);
    }
}

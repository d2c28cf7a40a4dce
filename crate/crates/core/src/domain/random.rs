//! TPC-C random value generators (uniform ranges, alphanumeric strings,
//! last-name syllables).

use rand::Rng;

const ALPHANUMERIC: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
const SYLLABLES: [&str; 10] = ["BAR", "OUGHT", "ABLE", "PRI", "PRES", "ESE", "ANTI", "CALLY", "ATION", "EING"];

pub fn uniform<R: Rng + ?Sized>(rng: &mut R, low: u64, high: u64) -> u64 {
    rng.random_range(low..=high)
}

pub fn uniform_u32<R: Rng + ?Sized>(rng: &mut R, low: u32, high: u32) -> u32 {
    rng.random_range(low..=high)
}

/// Random alphanumeric string with length in `[min_len, max_len]`.
pub fn astring<R: Rng + ?Sized>(rng: &mut R, min_len: usize, max_len: usize) -> String {
    let len = rng.random_range(min_len..=max_len);
    (0..len).map(|_| ALPHANUMERIC[rng.random_range(0..ALPHANUMERIC.len())] as char).collect()
}

/// Random numeric string with length in `[min_len, max_len]`.
pub fn nstring<R: Rng + ?Sized>(rng: &mut R, min_len: usize, max_len: usize) -> String {
    let len = rng.random_range(min_len..=max_len);
    (0..len).map(|_| char::from(b'0' + rng.random_range(0..10u8))).collect()
}

/// `i_data` / `s_data`: 26..50 characters, 10% of them containing "ORIGINAL".
pub fn data_with_original<R: Rng + ?Sized>(rng: &mut R) -> String {
    let mut data = astring(rng, 26, 50);
    if rng.random_range(1..=100) <= 10 {
        let at = rng.random_range(0..=data.len() - 8);
        data.replace_range(at..at + 8, "ORIGINAL");
    }
    data
}

pub fn zip<R: Rng + ?Sized>(rng: &mut R) -> String {
    let mut zip = nstring(rng, 4, 4);
    zip.push_str("11111");
    zip
}

pub fn state<R: Rng + ?Sized>(rng: &mut R) -> String {
    (0..2).map(|_| char::from(b'A' + rng.random_range(0..26u8))).collect()
}

/// Customer last name built from the three decimal digits of `number`.
pub fn last_name(number: u64) -> String {
    debug_assert!(number <= 999);
    let digits = [number / 100, (number / 10) % 10, number % 10];
    digits.iter().map(|&d| SYLLABLES[d as usize]).collect()
}

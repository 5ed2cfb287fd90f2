//! Named sub-seeds derived from one master seed, so each consumer of
//! randomness stays reproducible when others change.

pub const INSTANCE_GEN: &str = "instance-gen";
pub const PROPOSER: &str = "proposer";
pub const SHUFFLE: &str = "shuffle";
pub const FLEET: &str = "fleet";
pub const ORDERS: &str = "orders";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xCBF2_9CE4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01B3))
}

/// Sub-seed for the stream called `name`.
pub fn derive(master: u64, name: &str) -> u64 {
    splitmix64(master ^ splitmix64(fnv1a(name.as_bytes())))
}

/// Sub-seed for item `index` of a stream, e.g. one round of a schedule.
pub fn derive_indexed(master: u64, name: &str, index: u64) -> u64 {
    splitmix64(derive(master, name) ^ splitmix64(index))
}

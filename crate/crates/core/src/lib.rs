//! Packet-type-based coded caching for device-to-device networks: exact
//! counting, design construction, bit-exact placement and delivery, and an
//! exhaustive design search.

pub mod combinat;
pub mod design;
pub mod scheme;
pub mod search;
pub mod simulate;

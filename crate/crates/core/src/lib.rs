pub mod exact;
pub mod hilbert;
pub mod instability;
pub mod p1sheaf;
pub mod quiver;

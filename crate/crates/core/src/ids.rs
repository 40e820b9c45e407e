//! Index newtypes shared across the simulator.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Simulation day. Day 0 is the seeding instant; the daily loop runs days `1..=T`.
pub type Day = u32;

macro_rules! index_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }

            #[inline]
            pub fn from_index(index: usize) -> Self {
                debug_assert!(index <= u32::MAX as usize);
                Self(index as u32)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

index_newtype!(
    /// Dense agent index, `0..n`.
    AgentId
);
index_newtype!(
    /// Dense locality index into [`crate::city::CityModel`], not the label used in city files.
    LocalityId
);
index_newtype!(
    /// Index of a visited destination slot (a column of the OD matrix other than the no-visit column).
    DestinationId
);

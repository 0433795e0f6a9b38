use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::LeakageError;

/// Behavioural model of the leaky routines a cryptographic library exposes
/// to an SAE implementation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LibraryProfile {
    /// Single parity branch; leading-zero skipping on conversion.
    #[serde(rename = "openssl")]
    OpenSsl,
    /// As OpenSSL plus a parity test whose call count is visible on one path.
    #[serde(rename = "wolfssl")]
    WolfSsl,
    /// Dispatches on the format first, then on parity; fixed-size conversion.
    Ell,
    /// Secret-independent decompression and conversion.
    #[serde(rename = "corecrypto")]
    CoreCrypto,
    /// OpenSSL with one more converted secret (the successful seed).
    #[serde(rename = "freeradius-openssl")]
    FreeRadiusOpenSsl,
    /// This crate's constant-time routines.
    Hardened,
}

/// How a profile's decompression branches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecompressionStyle {
    OpenSsl,
    WolfSsl,
    Ell,
    Silent,
}

impl LibraryProfile {
    pub const ALL: [LibraryProfile; 6] = [
        LibraryProfile::OpenSsl,
        LibraryProfile::WolfSsl,
        LibraryProfile::Ell,
        LibraryProfile::CoreCrypto,
        LibraryProfile::FreeRadiusOpenSsl,
        LibraryProfile::Hardened,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LibraryProfile::OpenSsl => "openssl",
            LibraryProfile::WolfSsl => "wolfssl",
            LibraryProfile::Ell => "ell",
            LibraryProfile::CoreCrypto => "corecrypto",
            LibraryProfile::FreeRadiusOpenSsl => "freeradius-openssl",
            LibraryProfile::Hardened => "hardened",
        }
    }

    pub fn decompression_style(self) -> DecompressionStyle {
        match self {
            LibraryProfile::OpenSsl | LibraryProfile::FreeRadiusOpenSsl => {
                DecompressionStyle::OpenSsl
            }
            LibraryProfile::WolfSsl => DecompressionStyle::WolfSsl,
            LibraryProfile::Ell => DecompressionStyle::Ell,
            LibraryProfile::CoreCrypto | LibraryProfile::Hardened => DecompressionStyle::Silent,
        }
    }

    /// Whether byte-string conversion skips leading zeros.
    pub fn leaky_bin2bn(self) -> bool {
        matches!(
            self,
            LibraryProfile::OpenSsl | LibraryProfile::WolfSsl | LibraryProfile::FreeRadiusOpenSsl
        )
    }

    /// Whether the successful hunting-and-pecking seed is also converted.
    pub fn leaks_seed(self) -> bool {
        self == LibraryProfile::FreeRadiusOpenSsl
    }

    /// Expected bits per SAE session from decompression alone.
    pub fn expected_decompression_bits(self) -> f64 {
        match self.decompression_style() {
            DecompressionStyle::OpenSsl => 1.0,
            DecompressionStyle::WolfSsl => 1.5,
            DecompressionStyle::Ell => 2.0,
            DecompressionStyle::Silent => 0.0,
        }
    }

    pub fn leaks_anything(self) -> bool {
        self.leaky_bin2bn() || self.decompression_style() != DecompressionStyle::Silent
    }
}

impl fmt::Display for LibraryProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LibraryProfile {
    type Err = LeakageError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        LibraryProfile::ALL
            .into_iter()
            .find(|p| {
                p.name() == norm
                    || (norm == "freeradius" && *p == LibraryProfile::FreeRadiusOpenSsl)
            })
            .ok_or_else(|| LeakageError::UnknownProfile(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_roundtrip() {
        for p in LibraryProfile::ALL {
            assert_eq!(p.name().parse::<LibraryProfile>().unwrap(), p);
            assert_eq!(
                serde_json::to_string(&p).unwrap(),
                format!("\"{}\"", p.name())
            );
        }
        assert!("boringssl".parse::<LibraryProfile>().is_err());
    }

    #[test]
    fn expected_decompression_bits_table() {
        let bits: Vec<f64> = LibraryProfile::ALL
            .iter()
            .map(|p| p.expected_decompression_bits())
            .collect();
        assert_eq!(bits, vec![1.0, 1.5, 2.0, 0.0, 1.0, 0.0]);
        assert!(!LibraryProfile::Hardened.leaks_anything());
        assert!(!LibraryProfile::CoreCrypto.leaks_anything());
    }
}

//! Textual method specifications: `tsd(10)`, `sd`, `bb1`, `bb2`, `cabb`,
//! `csd(2)`. Bare `tsd` and `csd` take the default cycle parameters
//! `j = 10` and `m = 2`.

use tsd_core::solvers::MethodId;

use crate::error::BenchError;

pub const DEFAULT_J: u32 = 10;
pub const DEFAULT_M: u32 = 2;

/// Parses one method spec string.
pub fn parse_method_spec(s: &str) -> Result<MethodId, BenchError> {
    let s = s.trim();
    let (name, param) = match s.find('(') {
        Some(open) => {
            let close = s
                .strip_suffix(')')
                .ok_or_else(|| BenchError::InvalidMethod(s.to_string()))?;
            let value: u32 = close[open + 1..]
                .trim()
                .parse()
                .map_err(|_| BenchError::InvalidMethod(s.to_string()))?;
            (&s[..open], Some(value))
        }
        None => (s, None),
    };
    method_from_parts(name, param)
}

/// Builds a method from a name and an optional cycle parameter (the CLI
/// passes `--j` / `--m` values here).
pub fn method_from_parts(name: &str, param: Option<u32>) -> Result<MethodId, BenchError> {
    let m = match name.trim() {
        "tsd" => MethodId::Tsd {
            j: param.unwrap_or(DEFAULT_J),
        },
        "sd" => MethodId::Sd,
        "bb1" => MethodId::Bb1,
        "bb2" => MethodId::Bb2,
        "cabb" => MethodId::CaBb,
        "csd" => MethodId::Csd {
            m: param.unwrap_or(DEFAULT_M),
        },
        other => return Err(BenchError::InvalidMethod(other.to_string())),
    };
    m.validate()
        .map_err(|e| BenchError::InvalidMethod(e.to_string()))?;
    Ok(m)
}

//! Key-value config files: one `key = value` pair per line, `#` comments.
//! Keys mirror the long flag names with underscores (`stop_tol`, `eps_list`).
//! Command-line flags win over file values.

use std::collections::HashMap;

pub struct FileConfig {
    values: HashMap<String, String>,
}

impl FileConfig {
    pub fn empty() -> Self {
        Self {
            values: HashMap::new(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut values = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(format!(
                    "config line {}: expected `key = value`, got {raw:?}",
                    lineno + 1
                ));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() || value.is_empty() {
                return Err(format!("config line {}: empty key or value", lineno + 1));
            }
            values.insert(key, value);
        }
        Ok(Self { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    pub fn get_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| format!("config key {key}: cannot parse {raw:?}")),
        }
    }
}

/// Parse a fraction like `1/2` or `2/6` whose reciprocal is an integer.
/// Decimal input is rejected so the reciprocal stays exact.
pub fn parse_eps_fraction(text: &str) -> Result<usize, String> {
    let Some((num, den)) = text.split_once('/') else {
        return Err(format!(
            "eps must be a fraction like 1/2 (decimals are not accepted), got {text:?}"
        ));
    };
    let num: u64 = num
        .trim()
        .parse()
        .map_err(|_| format!("bad fraction numerator in {text:?}"))?;
    let den: u64 = den
        .trim()
        .parse()
        .map_err(|_| format!("bad fraction denominator in {text:?}"))?;
    if num == 0 || den == 0 {
        return Err(format!("fraction terms must be positive in {text:?}"));
    }
    if !den.is_multiple_of(num) {
        return Err(format!("1/eps must be an integer, got eps = {text}"));
    }
    let m = den / num;
    if m < 2 {
        return Err(format!("eps must be at most 1/2, got {text}"));
    }
    Ok(m as usize)
}

pub fn parse_eps_list(text: &str) -> Result<Vec<usize>, String> {
    let parts: Vec<&str> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if parts.is_empty() {
        return Err("eps list is empty".into());
    }
    parts.into_iter().map(parse_eps_fraction).collect()
}

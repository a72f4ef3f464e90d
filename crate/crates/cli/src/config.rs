//! Config-file merging and value parsers shared by the subcommands.

use std::fs;
use std::str::FromStr;

use hcr::measure::budget_cells;

/// Turns `key = value` lines into flags. `command = name` selects the
/// subcommand when none is given on the command line; `true` and `false`
/// toggle switches.
pub fn read_config(path: &str) -> Result<(Option<String>, Vec<String>), String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let mut command = None;
    let mut flags = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| format!("{path}:{}: expected `key = value`", no + 1))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(format!("{path}:{}: empty key", no + 1));
        }
        match (key, value) {
            ("command", v) => command = Some(v.to_string()),
            (k, "true") => flags.push(format!("--{k}")),
            (_, "false") => {}
            (k, v) => {
                flags.push(format!("--{k}"));
                flags.push(v.to_string());
            }
        }
    }
    Ok((command, flags))
}

const GLOBAL_WITH_VALUE: [&str; 2] = ["--config", "--mem-budget"];

/// Inserts config flags right after the subcommand so that command-line
/// flags, which come later, take precedence.
pub fn merge_args(args: Vec<String>) -> Result<Vec<String>, String> {
    let mut config = None;
    let mut sub = None;
    let mut i = 1;
    while i < args.len() {
        let a = &args[i];
        if let Some(v) = a.strip_prefix("--config=") {
            config = Some(v.to_string());
        } else if a == "--config" {
            config = args.get(i + 1).cloned();
            i += 1;
        } else if GLOBAL_WITH_VALUE.contains(&a.as_str()) {
            i += 1;
        } else if !a.starts_with('-') {
            sub = Some(i);
            break;
        }
        i += 1;
    }
    let Some(path) = config else { return Ok(args) };
    let (command, flags) = read_config(&path)?;
    let mut out = args.clone();
    match sub {
        Some(at) => {
            out.splice(at + 1..at + 1, flags);
        }
        None => {
            let command = command.ok_or_else(|| format!("{path}: no subcommand given and no `command` key"))?;
            out.push(command);
            out.extend(flags);
        }
    }
    Ok(out)
}

/// Nonempty comma-separated list.
pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    let items: Vec<&str> = s.split(',').map(str::trim).filter(|x| !x.is_empty()).collect();
    if items.is_empty() {
        return Err("list is empty".into());
    }
    items.iter().map(|x| x.parse::<T>().map_err(|e| format!("`{x}`: {e}"))).collect()
}

pub fn parse_u64_list(s: &str) -> Result<Vec<u64>, String> {
    parse_list(s)
}

pub fn parse_u32_list(s: &str) -> Result<Vec<u32>, String> {
    parse_list(s)
}

/// Exponent: a positive number, a fraction `a/b`, or `inf`.
pub fn parse_exponent(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let v = match t {
        "inf" | "Inf" | "infinity" | "∞" => f64::INFINITY,
        _ => match t.split_once('/') {
            Some((a, b)) => {
                let a: f64 = a.trim().parse().map_err(|e| format!("`{t}`: {e}"))?;
                let b: f64 = b.trim().parse().map_err(|e| format!("`{t}`: {e}"))?;
                a / b
            }
            None => t.parse().map_err(|e| format!("`{t}`: {e}"))?,
        },
    };
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("exponent must be positive, got `{t}`"))
    }
}

/// Deleted-set budget as a function of `N`.
#[derive(Clone, Debug, PartialEq)]
pub enum BSchedule {
    List(Vec<f64>),
    /// `c / (N log2(N)^k)`.
    Rule { c: f64, k: f64 },
}

impl BSchedule {
    pub fn values(&self, n: u64) -> Vec<f64> {
        match self {
            BSchedule::List(v) => v.clone(),
            BSchedule::Rule { c, k } => {
                let n = n.max(2) as f64;
                vec![c / (n * n.log2().powf(*k))]
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            BSchedule::List(v) => v.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(","),
            BSchedule::Rule { c, k } => format!("{c}/(N*log2(N)^{k})"),
        }
    }
}

/// `0.01,0.05` or `rule:c=0.5,k=1`.
pub fn parse_b_schedule(s: &str) -> Result<BSchedule, String> {
    let t = s.trim();
    if let Some(rest) = t.strip_prefix("rule:") {
        let (mut c, mut k) = (None, None);
        for part in rest.split(',') {
            let (key, v) = part.split_once('=').ok_or_else(|| format!("rule term `{part}` is not key=value"))?;
            let v: f64 = v.trim().parse().map_err(|e| format!("`{part}`: {e}"))?;
            match key.trim() {
                "c" => c = Some(v),
                "k" => k = Some(v),
                other => return Err(format!("unknown rule key `{other}`")),
            }
        }
        let c = c.ok_or("rule needs c")?;
        if !(c > 0.0) {
            return Err("rule constant c must be positive".into());
        }
        return Ok(BSchedule::Rule { c, k: k.unwrap_or(1.0) });
    }
    let v: Vec<f64> = parse_list(t)?;
    if let Some(b) = v.iter().find(|b| !(**b >= 0.0 && **b < 1.0)) {
        return Err(format!("budget {b} outside [0, 1)"));
    }
    Ok(BSchedule::List(v))
}

/// Bytes with an optional `K`, `M`, or `G` (binary) suffix.
pub fn parse_bytes(s: &str) -> Result<u64, String> {
    let t = s.trim();
    let (num, mult) = match t.chars().last() {
        Some('K' | 'k') => (&t[..t.len() - 1], 1u64 << 10),
        Some('M' | 'm') => (&t[..t.len() - 1], 1 << 20),
        Some('G' | 'g') => (&t[..t.len() - 1], 1 << 30),
        _ => (t, 1),
    };
    let n: u64 = num.trim().parse().map_err(|e| format!("memory budget `{t}`: {e}"))?;
    n.checked_mul(mult).filter(|&b| b > 0).ok_or_else(|| format!("memory budget `{t}` out of range"))
}

/// Cells needed to retain the deleted set of a streamed evaluation.
pub fn retained_cells(b: f64, total: u64) -> u64 {
    budget_cells(b, total) + 1
}

//! The counts CSV format.
//!
//! UTF-8, `#` comment lines, header `setting_x,setting_y,n_pp,n_pm,n_mp,n_mm`,
//! then exactly one row per setting pair with labels `a|a_prime` and
//! `b|b_prime`. Parse errors name the offending line.

use bell_core::chsh::SettingPair;
use bell_core::sampling::{CountsRecord, SettingCounts};

use crate::errors::{CliError, CliResult};

pub const HEADER: &str = "setting_x,setting_y,n_pp,n_pm,n_mp,n_mm";

pub fn parse_counts_str(text: &str) -> CliResult<CountsRecord> {
    let mut slots: [Option<SettingCounts>; 4] = [None; 4];
    let mut saw_header = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            if line != HEADER {
                return Err(CliError::Validation(format!(
                    "line {line_no}: expected header '{HEADER}', got '{line}'"
                )));
            }
            saw_header = true;
            continue;
        }

        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 6 {
            return Err(CliError::Validation(format!(
                "line {line_no}: expected 6 comma-separated fields, got {}",
                fields.len()
            )));
        }
        let pair = SettingPair::from_labels(fields[0], fields[1]).ok_or_else(|| {
            CliError::Validation(format!(
                "line {line_no}: unknown setting labels ({}, {}); expected a|a_prime and b|b_prime",
                fields[0], fields[1]
            ))
        })?;

        let mut counts = [0u64; 4];
        for (k, (name, field)) in ["n_pp", "n_pm", "n_mp", "n_mm"]
            .into_iter()
            .zip(&fields[2..])
            .enumerate()
        {
            let value: i64 = field.parse().map_err(|_| {
                CliError::Validation(format!(
                    "line {line_no}: malformed field {name} = '{field}'"
                ))
            })?;
            if value < 0 {
                return Err(CliError::Validation(format!(
                    "line {line_no}: negative count {name} = {value}"
                )));
            }
            counts[k] = value as u64;
        }

        let i = pair.index();
        if slots[i].is_some() {
            let (x, y) = pair.labels();
            return Err(CliError::Validation(format!(
                "line {line_no}: duplicate row for setting ({x}, {y})"
            )));
        }
        slots[i] = Some(SettingCounts::new(
            counts[0], counts[1], counts[2], counts[3],
        ));
    }

    if !saw_header {
        return Err(CliError::Validation("counts file has no header row".into()));
    }
    let mut out = [SettingCounts::new(0, 0, 0, 0); 4];
    for pair in SettingPair::ALL {
        match slots[pair.index()] {
            Some(c) => out[pair.index()] = c,
            None => {
                let (x, y) = pair.labels();
                return Err(CliError::Validation(format!("missing setting ({x}, {y})")));
            }
        }
    }
    Ok(CountsRecord::new(out))
}

pub fn counts_to_csv(record: &CountsRecord) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    for (pair, c) in record.iter() {
        let (x, y) = pair.labels();
        out.push_str(&format!(
            "{x},{y},{},{},{},{}\n",
            c.n_pp, c.n_pm, c.n_mp, c.n_mm
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn good_csv() -> String {
        "# sample dataset\n\
         setting_x,setting_y,n_pp,n_pm,n_mp,n_mm\n\
         a,b,10,20,30,40\n\
         a,b_prime,1,2,3,4\n\
         a_prime,b,5,6,7,8\n\
         a_prime,b_prime,9,10,11,12\n"
            .to_string()
    }

    #[test]
    fn well_formed_file_round_trips() {
        let record = parse_counts_str(&good_csv()).unwrap();
        assert_eq!(record.get(SettingPair::ALL[0]).total(), 100);
        let emitted = counts_to_csv(&record);
        let reparsed = parse_counts_str(&emitted).unwrap();
        assert_eq!(record, reparsed);
    }

    #[test]
    fn missing_setting_is_reported() {
        let text = good_csv().replace("a_prime,b,5,6,7,8\n", "");
        let err = parse_counts_str(&text).unwrap_err();
        assert!(
            err.to_string().contains("missing setting (a_prime, b)"),
            "{err}"
        );
    }

    #[test]
    fn negative_count_names_line_and_field() {
        let text = good_csv().replace("a,b_prime,1,2,3,4", "a,b_prime,1,-2,3,4");
        let err = parse_counts_str(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 4"), "{msg}");
        assert!(msg.contains("negative count n_pm"), "{msg}");
    }

    #[test]
    fn duplicate_row_is_reported() {
        let text = good_csv() + "a,b,1,1,1,1\n";
        let err = parse_counts_str(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("duplicate row for setting (a, b)"), "{msg}");
        assert!(msg.contains("line 7"), "{msg}");
    }

    #[test]
    fn malformed_field_names_line() {
        let text = good_csv().replace("a_prime,b_prime,9,10,11,12", "a_prime,b_prime,9,x,11,12");
        let err = parse_counts_str(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 6"), "{msg}");
        assert!(msg.contains("malformed field n_pm"), "{msg}");
    }

    #[test]
    fn bad_labels_are_rejected() {
        let text = good_csv().replace("a_prime,b,", "alice,b,");
        let err = parse_counts_str(&text).unwrap_err();
        assert!(err.to_string().contains("unknown setting labels"), "{err}");
    }
}

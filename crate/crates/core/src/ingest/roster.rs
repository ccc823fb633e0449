use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use super::{Role, Teammate};
use crate::error::{Error, Result};

pub fn read_roles(path: &Path) -> Result<Vec<Teammate>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_roles(&text, path)
}

/// Parses `user_id,role` rows. A leading `user_id,role` header is optional.
pub fn parse_roles(text: &str, path: &Path) -> Result<Vec<Teammate>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec =
            rec.map_err(|e| Error::malformed(path, format!("record {}", i + 1), e.to_string()))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(i as u64 + 1);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if rec.len() != 2 {
            return Err(Error::malformed(
                path,
                format!("line {line}"),
                format!("expected 2 fields, found {}", rec.len()),
            ));
        }
        if i == 0 && rec[0].eq_ignore_ascii_case("user_id") {
            continue;
        }
        let user_id = rec[0].to_owned();
        let role: Role = rec[1]
            .parse()
            .map_err(|e: String| Error::malformed(path, format!("line {line}"), e))?;
        if user_id.is_empty() || !seen.insert(user_id.clone()) {
            return Err(Error::malformed(
                path,
                format!("line {line}"),
                format!("empty or duplicate user id {user_id:?}"),
            ));
        }
        out.push(Teammate {
            user_id,
            role,
            consented: true,
        });
    }
    Ok(out)
}

pub fn read_exclusions(path: &Path) -> Result<BTreeSet<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_exclusions(&text))
}

/// One user id per line; `#` starts a comment.
pub fn parse_exclusions(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roles_with_and_without_header() {
        let p = Path::new("roles.csv");
        let a = parse_roles("user_id,role\nU1,PM\nU2,hrm\nU3,MEMBER\n", p).unwrap();
        let b = parse_roles("U1,PM\nU2,HRM\nU3,MEMBER", p).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[1].role, Role::Hrm);
    }

    #[test]
    fn bad_role_is_malformed() {
        let err = parse_roles("U1,BOSS\n", Path::new("r.csv")).unwrap_err();
        assert!(err.is_malformed_input(), "{err}");
        assert!(err.to_string().contains("line 1"));
    }

    #[test]
    fn duplicate_user_is_malformed() {
        assert!(parse_roles("U1,PM\nU1,HRM\n", Path::new("r.csv")).is_err());
    }

    #[test]
    fn exclusions_skip_comments() {
        let ex = parse_exclusions("# header\nU1\n\n  U2  # trailing\n#U3\n");
        assert_eq!(ex.into_iter().collect::<Vec<_>>(), vec!["U1", "U2"]);
    }
}

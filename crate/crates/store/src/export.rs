use std::fmt::Write as _;

use rusqlite::types::ValueRef;
use rusqlite::Connection;

use crate::schema::{SCHEMA_VERSION, TABLES};
use crate::{Result, StoreError};

/// Columns and row order per table. `{filter}` restricts rows to one user.
const QUERIES: [(&str, &str, &str); 6] = [
    ("users", "id, label, created_at", "SELECT id, label, created_at FROM users WHERE {filter} ORDER BY id"),
    (
        "trials",
        "id, user_id, config_json, task, started_at, seed, status, synthetic",
        "SELECT id, user_id, config_json, task, started_at, seed, status, synthetic FROM trials
         WHERE {filter} ORDER BY id",
    ),
    (
        "prompts",
        "trial_id, m, theta_hat, mag_hat, t_m, onset",
        "SELECT p.trial_id, p.m, p.theta_hat, p.mag_hat, p.t_m, p.onset FROM prompts p
         JOIN trials t ON t.id = p.trial_id WHERE {filter} ORDER BY p.trial_id, p.m",
    ),
    (
        "samples",
        "trial_id, seq, t, ux, uy, pose_x, pose_y, heading, segment_id, in_bounds",
        "SELECT s.trial_id, s.seq, s.t, s.ux, s.uy, s.pose_x, s.pose_y, s.heading, s.segment_id, s.in_bounds
         FROM samples s JOIN trials t ON t.id = s.trial_id WHERE {filter} ORDER BY s.trial_id, s.seq",
    ),
    (
        "covariates",
        "trial_id, seq, instrument_id, responses_json, raw_total, administered_at",
        "SELECT c.trial_id, c.seq, c.instrument_id, c.responses_json, c.raw_total, c.administered_at
         FROM covariates c JOIN trials t ON t.id = c.trial_id WHERE {filter} ORDER BY c.trial_id, c.seq",
    ),
    (
        "outcomes",
        "trial_id, measure_name, value, defined_flag",
        "SELECT o.trial_id, o.measure_name, o.value, o.defined_flag FROM outcomes o
         JOIN trials t ON t.id = o.trial_id WHERE {filter} ORDER BY o.trial_id, o.measure_name",
    ),
];

fn literal(v: ValueRef<'_>) -> Result<String> {
    Ok(match v {
        ValueRef::Null => "NULL".to_owned(),
        ValueRef::Integer(i) => i.to_string(),
        ValueRef::Real(f) if f.is_finite() => format!("{f:?}"),
        ValueRef::Real(f) => return Err(StoreError::Corrupt(format!("non-finite value {f} in store"))),
        ValueRef::Text(t) => {
            let s = std::str::from_utf8(t).map_err(|e| StoreError::Corrupt(e.to_string()))?;
            format!("'{}'", s.replace('\'', "''"))
        }
        ValueRef::Blob(b) => {
            let mut hex = String::with_capacity(b.len() * 2 + 3);
            hex.push_str("X'");
            for byte in b {
                let _ = write!(hex, "{byte:02X}");
            }
            hex.push('\'');
            hex
        }
    })
}

pub(crate) fn sql(conn: &Connection, user_id: Option<i64>) -> Result<String> {
    let mut out = String::new();
    let _ = writeln!(out, "-- assessment store export, schema version {SCHEMA_VERSION}");
    for (_, ddl) in TABLES {
        out.push_str(ddl);
        out.push('\n');
    }
    for (table, columns, query) in QUERIES {
        let filter = match (user_id, table) {
            (None, _) => "1 = 1",
            (Some(_), "users") => "id = ?1",
            (Some(_), "trials") => "user_id = ?1",
            (Some(_), _) => "t.user_id = ?1",
        };
        let query = query.replace("{filter}", filter);
        let mut stmt = conn.prepare(&query)?;
        let n = stmt.column_count();
        let mut rows = match user_id {
            Some(id) => stmt.query([id])?,
            None => stmt.query([])?,
        };
        while let Some(row) = rows.next()? {
            let values = (0..n).map(|i| literal(row.get_ref(i)?)).collect::<Result<Vec<_>>>()?;
            let _ = writeln!(out, "INSERT INTO {table} ({columns}) VALUES ({});", values.join(", "));
        }
    }
    Ok(out)
}

/// Bumped whenever a table changes shape.
pub const SCHEMA_VERSION: i32 = 1;

/// Table definitions, in dependency order. Used both to initialize a store
/// and as the DDL header of the SQL export.
pub const TABLES: [(&str, &str); 6] = [
    (
        "users",
        "CREATE TABLE users (
    id INTEGER PRIMARY KEY,
    label TEXT NOT NULL UNIQUE,
    created_at TEXT NOT NULL
);",
    ),
    (
        "trials",
        "CREATE TABLE trials (
    id INTEGER PRIMARY KEY,
    user_id INTEGER NOT NULL REFERENCES users(id),
    config_json TEXT NOT NULL,
    task TEXT NOT NULL,
    started_at TEXT NOT NULL,
    seed INTEGER NOT NULL,
    status TEXT NOT NULL,
    synthetic INTEGER NOT NULL
);",
    ),
    (
        "prompts",
        "CREATE TABLE prompts (
    trial_id INTEGER NOT NULL REFERENCES trials(id),
    m INTEGER NOT NULL,
    theta_hat REAL NOT NULL,
    mag_hat REAL,
    t_m REAL NOT NULL,
    onset REAL NOT NULL,
    PRIMARY KEY (trial_id, m)
);",
    ),
    (
        "samples",
        "CREATE TABLE samples (
    trial_id INTEGER NOT NULL REFERENCES trials(id),
    seq INTEGER NOT NULL,
    t REAL NOT NULL,
    ux REAL NOT NULL,
    uy REAL NOT NULL,
    pose_x REAL,
    pose_y REAL,
    heading REAL,
    segment_id INTEGER,
    in_bounds INTEGER,
    PRIMARY KEY (trial_id, seq)
);",
    ),
    (
        "covariates",
        "CREATE TABLE covariates (
    trial_id INTEGER NOT NULL REFERENCES trials(id),
    seq INTEGER NOT NULL,
    instrument_id TEXT NOT NULL,
    responses_json TEXT NOT NULL,
    raw_total REAL,
    administered_at TEXT NOT NULL,
    PRIMARY KEY (trial_id, seq)
);",
    ),
    (
        "outcomes",
        "CREATE TABLE outcomes (
    trial_id INTEGER NOT NULL REFERENCES trials(id),
    measure_name TEXT NOT NULL,
    value REAL,
    defined_flag INTEGER NOT NULL,
    PRIMARY KEY (trial_id, measure_name)
);",
    ),
];

pub fn init_sql() -> String {
    let mut out = String::new();
    for (_, ddl) in TABLES {
        out.push_str(&ddl.replacen("CREATE TABLE", "CREATE TABLE IF NOT EXISTS", 1));
        out.push('\n');
    }
    out
}

//! Structural validation of scenario files that reports every violation.

use toml::Value;

use crate::error::SchemaIssue;

pub(crate) enum Shape {
    Str,
    /// Nonnegative integer.
    Int,
    /// Integer or float.
    Num,
    Bool,
    List(&'static Shape),
    Map(&'static Shape),
    Record(&'static [Field]),
    Enum(&'static [&'static str]),
    /// Table selected by a string tag field.
    Tagged {
        tag: &'static str,
        variants: &'static [(&'static str, &'static [Field])],
    },
    /// Accept the first alternative that fits.
    Either(&'static [&'static Shape]),
}

pub(crate) struct Field {
    name: &'static str,
    shape: &'static Shape,
    required: bool,
}

const fn req(name: &'static str, shape: &'static Shape) -> Field {
    Field {
        name,
        shape,
        required: true,
    }
}

const fn opt(name: &'static str, shape: &'static Shape) -> Field {
    Field {
        name,
        shape,
        required: false,
    }
}

static STR: Shape = Shape::Str;
static INT: Shape = Shape::Int;
static NUM: Shape = Shape::Num;
static BOOL: Shape = Shape::Bool;
static STRS: Shape = Shape::List(&STR);
static NUMS: Shape = Shape::List(&NUM);
static STR_MAP: Shape = Shape::Map(&STR);
static NUM_MAP: Shape = Shape::Map(&NUM);

static BACKEND: Shape = Shape::Tagged {
    tag: "kind",
    variants: &[
        (
            "table",
            &[
                req("path", &STR),
                opt("slots", &STR_MAP),
                opt("temperature", &NUM),
            ],
        ),
        (
            "remote",
            &[
                opt("endpoint", &STR),
                opt("timeout_ms", &INT),
                opt("max_retries", &INT),
                opt("token_env", &STR),
            ],
        ),
    ],
};

static METRIC: Shape = Shape::Tagged {
    tag: "kind",
    variants: &[
        ("token-jaccard", &[]),
        (
            "weighted-overlap",
            &[opt("weights", &NUM_MAP), opt("default_weight", &NUM)],
        ),
    ],
};

static CANDIDATE_SETS: Shape = Shape::Map(&STRS);

static ACTOR: Shape = Shape::Record(&[
    req("id", &STR),
    opt("count", &INT),
    opt("role", &STR),
    opt("persona", &STR),
    opt("logic", &STR),
    opt("selector", &STRS),
    req("backend", &BACKEND),
    opt("memory", &STR),
    opt("capacity", &INT),
    req("candidates", &CANDIDATE_SETS),
    opt("mode", &Shape::Enum(&["sample", "argmax"])),
    opt("retrieval", &BOOL),
    opt("witness", &BOOL),
    opt("metric", &METRIC),
    opt("newcomer", &BOOL),
    opt("consolidate_every", &INT),
]);

static STEP: Shape = Shape::Record(&[
    req("kind", &Shape::Enum(&["summarize", "retrieve", "policy"])),
    opt("question", &STR),
    opt("candidates", &STR),
    opt("k", &INT),
    opt("framing", &STR),
]);

static LOGIC: Shape = Shape::Record(&[req("steps", &Shape::List(&STEP))]);

static CONDITION: Shape = Shape::Record(&[
    opt("role", &STR),
    opt("quantifier", &Shape::Enum(&["any", "all", "none"])),
    req("action", &STR),
]);

static VALENCE: Shape = Shape::Enum(&["approve", "disapprove", "unlabeled"]);

static SANCTION: Shape = Shape::Record(&[
    req("trigger", &STR),
    opt("target_role", &STR),
    req("sanctioner_role", &STR),
    opt("sanctioner_action", &STR),
    req("signal", &STR),
    opt("valence", &VALENCE),
]);

static RULE: Shape = Shape::Record(&[
    req("name", &STR),
    opt("scene", &STR),
    opt("when", &Shape::List(&CONDITION)),
    opt("effect", &STR),
    opt("views", &STR_MAP),
    opt("sanction", &SANCTION),
]);

static WITNESS_ROLES: Shape = Shape::Record(&[req("roles", &STRS)]);
static WITNESS: Shape = Shape::Either(&[&Shape::Enum(&["all", "none"]), &WITNESS_ROLES]);

static ENVIRONMENT: Shape = Shape::Record(&[
    req("scene", &STR),
    opt("rules", &Shape::List(&RULE)),
    opt("views", &STR_MAP),
    opt("witness_policy", &WITNESS),
    opt("narrator", &BACKEND),
]);

static FOCAL: Shape = Shape::Record(&[
    opt("role", &STR),
    req("observation", &STR),
    req("convention", &STR),
]);

static EXPERIMENT: Shape = Shape::Record(&[
    opt(
        "kind",
        &Shape::Enum(&["run", "stability", "adoption", "probe", "consolidation"]),
    ),
    opt("ticks", &INT),
    opt("metrics", &STRS),
    opt("focal", &FOCAL),
    opt("insert_at", &INT),
    opt("stable_threshold", &NUM),
    opt("naive_threshold", &NUM),
    opt("adopted_threshold", &NUM),
    opt("naive_window", &INT),
    opt("final_window", &INT),
    opt(
        "probe",
        &Shape::Enum(&["convention", "sanction", "norm", "epsilon"]),
    ),
]);

static MATCHER: Shape = Shape::Enum(&["exact-field", "epsilon-similar"]);

static CONVENTION_PROBE: Shape = Shape::Record(&[
    opt("actor", &STR),
    opt("mode", &Shape::Enum(&["contextual", "context-free"])),
    opt("observation", &STR),
    opt("context", &STR),
    req("action", &STR),
    req("alternative", &STR),
    opt("grid", &NUMS),
    opt("warmup_ticks", &INT),
    opt("matcher", &MATCHER),
    opt("epsilon", &NUM),
    opt("shuffles", &INT),
    opt("exact_limit", &INT),
]);

static SANCTION_PROBE: Shape = Shape::Record(&[
    opt("actor", &STR),
    opt("observation", &STR),
    opt("context", &STR),
    req("signal", &STR),
    req("action", &STR),
    req("alternative", &STR),
    opt("warmup_ticks", &INT),
    opt("injected", &INT),
]);

static THRESHOLDS: Shape =
    Shape::Record(&[opt("rate", &NUM), opt("conv", &NUM), opt("scope", &NUM)]);

static NORM_PROBE: Shape = Shape::Record(&[
    req("context", &STR),
    req("action", &STR),
    req("alternative", &STR),
    opt("sanction_alternative", &STR),
    opt("thresholds", &THRESHOLDS),
    opt("min_ticks", &INT),
    opt("sample", &INT),
    opt("grid", &NUMS),
    opt("warmup_ticks", &INT),
]);

static EPSILON_PROBE: Shape = Shape::Record(&[
    opt("actor", &STR),
    opt("observation", &STR),
    opt("context", &STR),
    req("u", &STR),
    req("v", &STR),
    opt("epsilon", &NUM),
    opt("candidates", &STRS),
]);

static PROBES: Shape = Shape::Record(&[
    opt("convention", &CONVENTION_PROBE),
    opt("sanction", &SANCTION_PROBE),
    opt("norm", &NORM_PROBE),
    opt("epsilon", &EPSILON_PROBE),
]);

static FILTER_SUBJECT: Shape = Shape::Record(&[req("subject", &STR)]);
static FILTER: Shape = Shape::Either(&[
    &Shape::Enum(&["all", "unsanctioned", "sanctioned", "own"]),
    &FILTER_SUBJECT,
]);

static PRECEDENCE: Shape = Shape::Record(&[
    opt("context", &STR),
    req("signal", &STR),
    req("action", &STR),
]);

static CONSOLIDATION: Shape = Shape::Record(&[
    opt("actor", &STR),
    opt("replay_passes", &INT),
    opt("learning_rate", &NUM),
    opt("filter", &FILTER),
    opt("observation", &STR),
    opt("warmup_ticks", &INT),
    opt("max_gap", &NUM),
    opt("precedence", &PRECEDENCE),
]);

static OUTPUT: Shape = Shape::Record(&[
    opt("dir", &STR),
    opt("events", &STR),
    opt("metrics", &STR),
    opt("format", &Shape::Enum(&["csv", "jsonl"])),
    opt("report", &STR),
]);

pub(crate) static SCENARIO: Shape = Shape::Record(&[
    req("name", &STR),
    opt("seed", &INT),
    opt("logics", &Shape::Map(&LOGIC)),
    req("actors", &Shape::List(&ACTOR)),
    req("environment", &ENVIRONMENT),
    opt("experiment", &EXPERIMENT),
    opt("probes", &PROBES),
    opt("consolidation", &CONSOLIDATION),
    opt("output", &OUTPUT),
]);

/// `/a/b` pointer with `~` and `/` escaped.
pub(crate) fn pointer(parent: &str, key: &str) -> String {
    format!("{parent}/{}", key.replace('~', "~0").replace('/', "~1"))
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::String(_) => "string",
        Value::Integer(_) => "integer",
        Value::Float(_) => "float",
        Value::Boolean(_) => "boolean",
        Value::Datetime(_) => "datetime",
        Value::Array(_) => "array",
        Value::Table(_) => "table",
    }
}

fn issue(out: &mut Vec<SchemaIssue>, at: &str, message: String) {
    out.push(SchemaIssue {
        pointer: at.to_string(),
        message,
    });
}

fn check_fields(
    fields: &[Field],
    t: &toml::Table,
    skip: Option<&str>,
    at: &str,
    out: &mut Vec<SchemaIssue>,
) {
    for f in fields {
        match t.get(f.name) {
            Some(v) => check(v, f.shape, &pointer(at, f.name), out),
            None if f.required => issue(out, &pointer(at, f.name), "missing required key".into()),
            None => {}
        }
    }
    for k in t.keys() {
        if Some(k.as_str()) != skip && !fields.iter().any(|f| f.name == k) {
            issue(out, &pointer(at, k), format!("unknown key {k:?}"));
        }
    }
}

pub(crate) fn check(v: &Value, shape: &Shape, at: &str, out: &mut Vec<SchemaIssue>) {
    let mismatch = |out: &mut Vec<SchemaIssue>, want: &str| {
        issue(out, at, format!("expected {want}, found {}", type_name(v)));
    };
    match shape {
        Shape::Str => {
            if !v.is_str() {
                mismatch(out, "string");
            }
        }
        Shape::Int => match v {
            Value::Integer(i) if *i >= 0 => {}
            Value::Integer(i) => issue(out, at, format!("expected nonnegative integer, found {i}")),
            _ => mismatch(out, "integer"),
        },
        Shape::Num => {
            if !matches!(v, Value::Integer(_) | Value::Float(_)) {
                mismatch(out, "number");
            }
        }
        Shape::Bool => {
            if !v.is_bool() {
                mismatch(out, "boolean");
            }
        }
        Shape::List(item) => match v {
            Value::Array(xs) => {
                for (i, x) in xs.iter().enumerate() {
                    check(x, item, &pointer(at, &i.to_string()), out);
                }
            }
            _ => mismatch(out, "array"),
        },
        Shape::Map(item) => match v {
            Value::Table(t) => {
                for (k, x) in t {
                    check(x, item, &pointer(at, k), out);
                }
            }
            _ => mismatch(out, "table"),
        },
        Shape::Record(fields) => match v {
            Value::Table(t) => check_fields(fields, t, None, at, out),
            _ => mismatch(out, "table"),
        },
        Shape::Enum(names) => match v.as_str() {
            Some(s) if names.contains(&s) => {}
            Some(s) => issue(
                out,
                at,
                format!("unknown value {s:?}; expected one of {}", names.join(", ")),
            ),
            None => mismatch(out, "string"),
        },
        Shape::Tagged { tag, variants } => {
            let Value::Table(t) = v else {
                return mismatch(out, "table");
            };
            let names: Vec<&str> = variants.iter().map(|(n, _)| *n).collect();
            match t.get(*tag).map(|x| x.as_str()) {
                None => issue(out, &pointer(at, tag), "missing required key".into()),
                Some(None) => issue(out, &pointer(at, tag), "expected string".into()),
                Some(Some(k)) => match variants.iter().find(|(n, _)| *n == k) {
                    Some((_, fields)) => check_fields(fields, t, Some(tag), at, out),
                    None => issue(
                        out,
                        &pointer(at, tag),
                        format!("unknown value {k:?}; expected one of {}", names.join(", ")),
                    ),
                },
            }
        }
        Shape::Either(options) => {
            let mut first = None;
            for s in options.iter() {
                let mut local = Vec::new();
                check(v, s, at, &mut local);
                if local.is_empty() {
                    return;
                }
                first.get_or_insert(local);
            }
            if matches!(v, Value::Table(_)) {
                // Report against the table-shaped alternative.
                let table_alt = options.iter().find(|s| matches!(s, Shape::Record(_)));
                if let Some(s) = table_alt {
                    return check(v, s, at, out);
                }
            }
            out.extend(first.unwrap_or_default());
        }
    }
}

//! File formats.
//!
//! * Grid functions: CSV with header `p,t,q`.
//! * Trajectories: CSV `p,t,q,newton_iters` followed by `# status=...`.
//! * Operators and couples: `key=value` lines, `#` comments.

use std::io::{Read, Write};

use dischelm_core::integrate::Trajectory;
use dischelm_core::lagrange::{LagrangianFn, SynthesizedLagrangian};
use dischelm_core::{Expr, GridFn, LagrangianCouple, ParseError, Partition, SecondOrderOp};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Core(#[from] dischelm_core::Error),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

pub type Result<T, E = IoError> = std::result::Result<T, E>;

fn format_err(line: usize, message: impl Into<String>) -> IoError {
    IoError::Format {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct GridRow {
    p: usize,
    t: f64,
    q: f64,
}

pub fn write_grid_fn<W: Write>(q: &GridFn, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (p, (t, &value)) in q.partition().times().zip(q.values()).enumerate() {
        w.serialize(GridRow { p, t, q: value })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a grid function. The step is reconstructed as `(t_n - t_0)/n` and
/// every row's time must agree with `t_0 + p·h` to `1e-9` relative.
pub fn read_grid_fn<R: Read>(input: R) -> Result<GridFn> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let rows = rdr.deserialize().collect::<Result<Vec<GridRow>, _>>()?;
    grid_from_rows(rows.iter().map(|r| (r.p, r.t, r.q)))
}

fn grid_from_rows(rows: impl Iterator<Item = (usize, f64, f64)>) -> Result<GridFn> {
    let rows: Vec<_> = rows.collect();
    for (i, &(p, _, _)) in rows.iter().enumerate() {
        if p != i {
            return Err(format_err(i + 2, format!("expected p = {i}, found {p}")));
        }
    }
    let n = rows.len().saturating_sub(1);
    let t0 = rows.first().map_or(0.0, |r| r.1);
    let tn = rows.last().map_or(0.0, |r| r.1);
    let partition = Partition::new(t0, (tn - t0) / n.max(1) as f64, n)?;
    for &(p, t, _) in &rows {
        let expected = partition.time(p);
        if (t - expected).abs() > 1e-9 * (1.0 + t.abs()) {
            return Err(format_err(
                p + 2,
                format!("time {t} is off the uniform grid (expected {expected})"),
            ));
        }
    }
    Ok(GridFn::new(partition, rows.iter().map(|r| r.2).collect())?)
}

#[derive(Debug, Serialize, Deserialize)]
struct TrajectoryRow {
    p: usize,
    t: f64,
    q: f64,
    newton_iters: usize,
}

pub fn write_trajectory<W: Write>(tr: &Trajectory, mut out: W) -> Result<()> {
    {
        let mut w = csv::Writer::from_writer(&mut out);
        for (p, (&q, &newton_iters)) in tr.values().iter().zip(tr.iterations()).enumerate() {
            w.serialize(TrajectoryRow {
                p,
                t: tr.partition().time(p),
                q,
                newton_iters,
            })?;
        }
        w.flush()?;
    }
    writeln!(out, "# status={}", tr.status())?;
    Ok(())
}

/// A trajectory as read back from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub values: Vec<f64>,
    pub times: Vec<f64>,
    pub newton_iters: Vec<usize>,
    pub status: String,
}

pub fn read_trajectory<R: Read>(mut input: R) -> Result<TrajectoryRecord> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let status = text
        .lines()
        .find_map(|l| l.trim().strip_prefix("# status="))
        .ok_or_else(|| format_err(text.lines().count(), "missing `# status=` line"))?
        .to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let rows = rdr.deserialize().collect::<Result<Vec<TrajectoryRow>, _>>()?;
    Ok(TrajectoryRecord {
        values: rows.iter().map(|r| r.q).collect(),
        times: rows.iter().map(|r| r.t).collect(),
        newton_iters: rows.iter().map(|r| r.newton_iters).collect(),
        status,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Fde,
    Continuous,
    Lagrangian,
}

/// Contents of an operator or couple file.
#[derive(Debug, Clone, PartialEq)]
pub enum SpecFile {
    Operator {
        role: Role,
        expr: String,
        label: Option<String>,
    },
    Couple {
        l_minus: String,
        l_plus: String,
    },
    /// Rebuilt from its source scheme rather than tabulated.
    SynthesizedCouple {
        source: String,
        label: Option<String>,
        anchors: (f64, f64),
        quad_order: usize,
    },
}

const KEYS: [&str; 9] = [
    "role",
    "expr",
    "label",
    "l_minus",
    "l_plus",
    "source",
    "anchor_y",
    "anchor_z",
    "quad_order",
];

pub fn parse_spec_file(text: &str) -> Result<SpecFile> {
    let mut fields: Vec<(&str, &str, usize)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format_err(i + 1, "expected `key=value`"))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(format_err(i + 1, format!("unknown key `{key}`")));
        }
        if fields.iter().any(|f| f.0 == key) {
            return Err(format_err(i + 1, format!("duplicate key `{key}`")));
        }
        fields.push((key, value.trim(), i + 1));
    }
    let get = |k: &str| fields.iter().find(|f| f.0 == k).map(|f| (f.1, f.2));
    let allow_only = |allowed: &[&str]| -> Result<()> {
        match fields.iter().find(|f| !allowed.contains(&f.0)) {
            Some(f) => Err(format_err(f.2, format!("key `{}` not valid for this role", f.0))),
            None => Ok(()),
        }
    };
    let require = |k: &str| {
        get(k)
            .map(|f| f.0.to_string())
            .ok_or_else(|| format_err(0, format!("missing `{k}=`")))
    };
    let label = get("label").map(|f| f.0.to_string());
    let (role, _) = get("role").ok_or_else(|| format_err(0, "missing `role=`"))?;
    match role {
        "fde" | "continuous" | "lagrangian" => {
            allow_only(&["role", "expr", "label"])?;
            let role = match role {
                "fde" => Role::Fde,
                "continuous" => Role::Continuous,
                _ => Role::Lagrangian,
            };
            Ok(SpecFile::Operator {
                role,
                expr: require("expr")?,
                label,
            })
        }
        "lagrangian_couple" if get("source").is_some() => {
            allow_only(&["role", "source", "label", "anchor_y", "anchor_z", "quad_order"])?;
            let number = |k: &str, default: f64| -> Result<f64> {
                match get(k) {
                    None => Ok(default),
                    Some((v, line)) => v
                        .parse()
                        .map_err(|_| format_err(line, format!("`{k}` is not a number"))),
                }
            };
            let quad_order = match get("quad_order") {
                None => dischelm_core::lagrange::DEFAULT_QUAD_ORDER,
                Some((v, line)) => v
                    .parse()
                    .map_err(|_| format_err(line, "`quad_order` is not a positive integer"))?,
            };
            Ok(SpecFile::SynthesizedCouple {
                source: require("source")?,
                label,
                anchors: (number("anchor_y", 0.0)?, number("anchor_z", 0.0)?),
                quad_order,
            })
        }
        "lagrangian_couple" => {
            allow_only(&["role", "l_minus", "l_plus", "label"])?;
            if get("l_minus").is_none() && get("l_plus").is_none() {
                return Err(format_err(0, "couple needs `l_minus=` or `l_plus=`"));
            }
            Ok(SpecFile::Couple {
                l_minus: get("l_minus").map_or("0", |f| f.0).to_string(),
                l_plus: get("l_plus").map_or("0", |f| f.0).to_string(),
            })
        }
        other => Err(format_err(
            get("role").map_or(0, |f| f.1),
            format!("unknown role `{other}`"),
        )),
    }
}

pub fn format_operator(op: &SecondOrderOp) -> String {
    format!("role=fde\nexpr={}\nlabel={}\n", op.body(), op.label())
}

/// File form of a couple. Couples built by combining others have none.
pub fn format_couple(c: &LagrangianCouple) -> Option<String> {
    if let Some(s) = c.synthesized() {
        let (y0, z0) = s.anchors();
        return Some(format!(
            "role=lagrangian_couple\nsource={}\nlabel={}\nanchor_y={y0:?}\nanchor_z={z0:?}\nquad_order={}\n",
            s.source().body(),
            s.source().label(),
            s.quad_order()
        ));
    }
    let half = |f: &LagrangianFn| match f {
        LagrangianFn::Zero => Some("0".to_string()),
        LagrangianFn::Expr(e) => Some(e.to_string()),
        _ => None,
    };
    Some(format!(
        "role=lagrangian_couple\nl_minus={}\nl_plus={}\n",
        half(c.l_minus())?,
        half(c.l_plus())?
    ))
}

pub fn couple_from_spec(spec: &SpecFile) -> Result<LagrangianCouple> {
    match spec {
        SpecFile::Couple { l_minus, l_plus } => Ok(LagrangianCouple::parse(l_minus, l_plus)?),
        SpecFile::SynthesizedCouple {
            source,
            label,
            anchors,
            quad_order,
        } => {
            let mut op = SecondOrderOp::parse(source)?;
            if let Some(l) = label {
                op = op.with_label(l.clone());
            }
            Ok(SynthesizedLagrangian::new(op, *quad_order)?
                .with_anchors(anchors.0, anchors.1)
                .into_couple())
        }
        SpecFile::Operator { .. } => Err(format_err(0, "expected role=lagrangian_couple")),
    }
}

/// Parses a scheme body and attaches an optional label.
pub fn scheme_from(expr: &str, label: Option<&str>) -> Result<SecondOrderOp> {
    let op = SecondOrderOp::parse(expr)?;
    Ok(match label {
        Some(l) => op.with_label(l),
        None => op,
    })
}

/// Round-trips an expression through its printed form.
pub fn reparse(e: &Expr) -> Result<Expr> {
    Ok(Expr::parse(&e.to_string(), e.vocabulary())?)
}

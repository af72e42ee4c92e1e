//! Sweep execution: one row per (sweep value, method).

use fsocap_core::capacity::self_audit;
use fsocap_core::montecarlo::mc_capacity_sweep;
use fsocap_core::{Capacity, Method};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{LinkSection, McSection, Mode, Scenario, SnrSection, SweepSection};
use crate::error::CliError;
use crate::model::{ChannelModel, ModelInfo, PointInputs};
use crate::output::{fmt_num, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// The mixture behind the value failed its normalization audit.
    Unreliable,
    /// The closed form disagreed with quadrature at the audit point.
    AuditFailed,
    Error,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Unreliable => "unreliable",
            Status::AuditFailed => "audit_failed",
            Status::Error => "error",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub sweep_axis: &'static str,
    pub sweep_value: f64,
    pub method: &'static str,
    pub capacity_bits: f64,
    pub err_estimate: f64,
    pub status: Status,
}

#[derive(Debug, Clone, Serialize)]
pub struct RowError {
    pub sweep_value: f64,
    pub method: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditInfo {
    pub sweep_value: f64,
    pub closed_form: f64,
    pub quadrature: f64,
    pub discrepancy: f64,
    pub allowed: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_sha256: String,
    pub mode: Mode,
    pub m: u32,
    pub n: u32,
    pub eta: f64,
    pub link: LinkSection,
    pub sweep: SweepSection,
    pub snr: Option<SnrSection>,
    pub methods: Vec<&'static str>,
    pub tolerance: f64,
    pub monte_carlo: Option<McSection>,
    pub models: Vec<ModelInfo>,
    pub self_audit: Option<AuditInfo>,
    pub errors: Vec<RowError>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub metadata: Metadata,
    pub rows: Vec<Row>,
}

impl Report {
    /// 0 on success, 3 if any row failed, 4 if only the self-audit failed.
    pub fn exit_code(&self) -> i32 {
        if self.rows.iter().any(|r| r.status == Status::Error) {
            3
        } else if self.metadata.self_audit.as_ref().is_some_and(|a| !a.passed) {
            4
        } else {
            0
        }
    }

    pub fn table(&self) -> Table {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.sweep_axis.to_string(),
                    fmt_num(r.sweep_value),
                    r.method.to_string(),
                    fmt_num(r.capacity_bits),
                    fmt_num(r.err_estimate),
                    r.status.as_str().to_string(),
                ]
            })
            .collect();
        Table {
            metadata: serde_json::to_value(&self.metadata).expect("metadata serializes"),
            header: ["sweep_axis", "sweep_value", "method", "capacity_bits", "err_estimate", "status"]
                .map(String::from)
                .to_vec(),
            rows,
        }
    }
}

/// Per-point state shared by every method.
struct Point {
    value: f64,
    model: usize,
    gamma0: Result<f64, String>,
}

/// Channel laws for every sweep point, shared between consecutive points
/// that only differ in SNR.
pub fn build_models(sc: &Scenario) -> (Vec<PointInputs>, Vec<usize>, Vec<Result<ChannelModel, String>>) {
    let values = sc.file.sweep.values();
    let inputs: Vec<PointInputs> = values.iter().map(|&v| PointInputs::at(sc, v)).collect();
    let mut index = Vec::with_capacity(inputs.len());
    let mut firsts: Vec<usize> = Vec::new();
    for (i, p) in inputs.iter().enumerate() {
        match firsts.iter().position(|&f| inputs[f].same_channel(p)) {
            Some(k) => index.push(k),
            None => {
                index.push(firsts.len());
                firsts.push(i);
            }
        }
    }
    let mode = sc.file.system.mode;
    let models = firsts
        .par_iter()
        .map(|&i| ChannelModel::build(mode, &inputs[i]).map_err(|e| e.to_string()))
        .collect();
    (inputs, index, models)
}

pub fn run_scenario(sc: &Scenario, command: &str) -> Result<Report, CliError> {
    let f = &sc.file;
    let (m, n, eta) = (f.system.m, f.system.n, f.system.eta);
    let tol = sc.tolerance();
    let axis = f.sweep.axis.as_str();
    let (inputs, index, models) = build_models(sc);

    let points: Vec<Point> = inputs
        .iter()
        .zip(&index)
        .zip(f.sweep.values())
        .map(|((p, &k), value)| Point {
            value,
            model: k,
            gamma0: models[k]
                .as_ref()
                .map_err(Clone::clone)
                .and_then(|mdl| mdl.context(m, n, eta, p.snr_axis, p.snr_db).map(|c| c.gamma0).map_err(|e| e.to_string())),
        })
        .collect();

    let analytical: Vec<Method> = sc.methods.iter().copied().filter(|&m| m != Method::MonteCarlo).collect();
    let mut cells: Vec<Vec<Option<Result<Capacity<f64>, String>>>> = points
        .par_iter()
        .map(|p| {
            sc.methods
                .iter()
                .map(|&method| {
                    analytical.contains(&method).then(|| {
                        let g0 = p.gamma0.clone()?;
                        models[p.model].as_ref().map_err(Clone::clone)?.capacity(method, g0, tol)
                    })
                })
                .collect()
        })
        .collect();

    if let Some(col) = sc.methods.iter().position(|&m| m == Method::MonteCarlo) {
        let cfg = sc.mc_config();
        // one pass per channel law; every SNR on it reuses the same draws
        for (k, model) in models.iter().enumerate() {
            let members: Vec<usize> = (0..points.len()).filter(|&i| points[i].model == k).collect();
            let ok: Vec<usize> = members.iter().copied().filter(|&i| points[i].gamma0.is_ok()).collect();
            for &i in members.iter().filter(|i| !ok.contains(i)) {
                cells[i][col] = Some(Err(points[i].gamma0.clone().unwrap_err()));
            }
            let result = model.as_ref().map_err(Clone::clone).and_then(|mdl| {
                let g0: Vec<f64> = ok.iter().map(|&i| *points[i].gamma0.as_ref().unwrap()).collect();
                mc_capacity_sweep(&mdl.channels, &g0, &cfg).map_err(|e| e.to_string())
            });
            for (slot, &i) in ok.iter().enumerate() {
                cells[i][col] = Some(result.as_ref().map(|v| v[slot]).map_err(Clone::clone));
            }
        }
    }

    let audit = sc.methods.contains(&Method::ClosedForm).then(|| {
        let mid = points.len() / 2;
        let p = &points[mid];
        let col = sc.methods.iter().position(|&m| m == Method::ClosedForm).unwrap();
        let closed = cells[mid][col].clone().unwrap();
        let quad = p
            .gamma0
            .clone()
            .and_then(|g0| models[p.model].as_ref().map_err(Clone::clone)?.capacity(Method::Quadrature, g0, tol));
        match (closed, quad) {
            (Ok(c), Ok(q)) => {
                let a = self_audit(&c, &q, tol);
                AuditInfo {
                    sweep_value: p.value,
                    closed_form: c.bits,
                    quadrature: q.bits,
                    discrepancy: a.discrepancy,
                    allowed: a.allowed,
                    passed: a.passed,
                    error: None,
                }
            }
            (c, q) => AuditInfo {
                sweep_value: p.value,
                closed_form: c.as_ref().map_or(f64::NAN, |c| c.bits),
                quadrature: q.as_ref().map_or(f64::NAN, |q| q.bits),
                discrepancy: f64::NAN,
                allowed: f64::NAN,
                passed: false,
                error: c.err().or(q.err()),
            },
        }
    });
    let audit_failed = audit.as_ref().is_some_and(|a| !a.passed);
    if audit_failed {
        log::error!("closed form failed its self-audit against quadrature: {audit:?}");
    }

    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for (p, row) in points.iter().zip(cells) {
        let reliable = models[p.model].as_ref().is_ok_and(|m| m.reliable());
        for (&method, cell) in sc.methods.iter().zip(row) {
            let (bits, err, status) = match cell.expect("every cell is filled") {
                Ok(c) => {
                    let status = if method == Method::ClosedForm && audit_failed {
                        Status::AuditFailed
                    } else if !reliable && matches!(method, Method::ClosedForm | Method::Quadrature | Method::HighSnr) {
                        Status::Unreliable
                    } else {
                        Status::Ok
                    };
                    (c.bits, c.err_estimate, status)
                }
                Err(message) => {
                    log::error!("{axis} = {}: {method}: {message}", p.value);
                    errors.push(RowError {
                        sweep_value: p.value,
                        method: method.as_str(),
                        message,
                    });
                    (f64::NAN, f64::NAN, Status::Error)
                }
            };
            rows.push(Row {
                sweep_axis: axis,
                sweep_value: p.value,
                method: method.as_str(),
                capacity_bits: bits,
                err_estimate: err,
                status,
            });
        }
    }

    let shared = models.len() == 1;
    let model_info = models
        .iter()
        .enumerate()
        .map(|(k, mdl)| {
            let first = points.iter().find(|p| p.model == k).map(|p| p.value);
            match mdl {
                Ok(mdl) => Ok(mdl.describe(if shared { None } else { first }, false)),
                Err(e) => Err(e),
            }
        })
        .filter_map(|r| r.ok())
        .collect();

    Ok(Report {
        metadata: Metadata {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config_sha256: sc.digest.clone(),
            mode: f.system.mode,
            m,
            n,
            eta,
            link: f.link.clone(),
            sweep: f.sweep.clone(),
            snr: f.snr,
            methods: sc.methods.iter().map(|m| m.as_str()).collect(),
            tolerance: tol,
            monte_carlo: sc.methods.contains(&Method::MonteCarlo).then_some(f.mc),
            models: model_info,
            self_audit: audit,
            errors,
        },
        rows,
    })
}

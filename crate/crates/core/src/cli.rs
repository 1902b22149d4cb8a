//! Batch commands behind the `paqft` binary. Each writes one JSON document to
//! the configured output path and returns a one-screen summary.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{ExtractionMode, HadamardMode, RunConfig};
use crate::error::{Error, Result};
use crate::functionals::{check_additivity, PolyFunctional};
use crate::hbar::HbarScalar;
use crate::lagrangian::GeneralizedLagrangian;
use crate::lattice::{not_later_than, FieldConfiguration, Lattice, LatticePoint, Region};
use crate::relations::{check_hammerstein, RealAdditive};
use crate::report::Report;
use crate::samples::SampleGenerator;
use crate::smatrix::*;
use crate::star_algebra::{contraction_product, poisson_bracket_functional, Contraction};

pub const THREADS_ENV: &str = "PAQFT_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Propagators,
    Axioms,
    ExtractZ,
    Correlate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Propagators => "propagators",
            Command::Axioms => "axioms",
            Command::ExtractZ => "extract-z",
            Command::Correlate => "correlate",
        }
    }
}

/// Result of one command: the written document and its verdict.
#[derive(Debug)]
pub struct Outcome {
    pub passed: bool,
    pub summary: String,
    pub document: Value,
}

/// Thread pool sized by `PAQFT_THREADS` (all cores when unset).
pub fn thread_pool_from_env() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| Error::InvalidConfig {
            field: THREADS_ENV.into(),
            reason: format!("expected a positive integer, got `{raw}`"),
        })?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::InvalidConfig { field: THREADS_ENV.into(), reason: e.to_string() })
}

/// Runs `cmd`, writes the document to `cfg.output`.
pub fn run(cmd: Command, cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    let lattice = Lattice::new(cfg.lattice.nt, cfg.lattice.nx, cfg.lattice.mass)?;
    let (report, extra) = match cmd {
        Command::Propagators => propagators(cfg, &lattice)?,
        Command::Axioms => axioms(cfg, &lattice)?,
        Command::ExtractZ => extract(cfg, &lattice)?,
        Command::Correlate => correlate(cfg, &lattice)?,
    };
    let passed = report.passed();
    let mut summary = format!("paqft {}: {}\n{}", cmd.name(), if passed { "pass" } else { "FAIL" }, report.summary());
    if let Some(w) = extra.get("warnings").and_then(Value::as_array) {
        for line in w.iter().filter_map(Value::as_str) {
            summary.push_str(&format!("\nwarning: {line}"));
        }
    }
    let document = json!({
        "command": cmd.name(),
        "config": cfg,
        "passed": passed,
        "report": report,
        "results": extra,
    });
    std::fs::write(&cfg.output, serde_json::to_string_pretty(&document)? + "\n")?;
    Ok(Outcome { passed, summary, document })
}

fn generator(cfg: &RunConfig, stream: u64, i: usize) -> SampleGenerator {
    let seed = cfg.samples.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(stream << 32).wrapping_add(i as u64);
    SampleGenerator::new(crate::lattice::LatticeShape { nt: cfg.lattice.nt, nx: cfg.lattice.nx }, seed)
}

fn prefixed(mut r: Report, prefix: &str) -> Report {
    for e in &mut r.entries {
        e.sample_id = format!("{prefix}/{}", e.sample_id);
    }
    r
}

/// Runs `f` for each sample index in parallel and concatenates in index order.
fn per_sample(count: usize, f: impl Fn(usize) -> Result<Report> + Sync + Send) -> Result<Report> {
    let parts: Vec<Report> = (0..count).into_par_iter().map(f).collect::<Result<_>>()?;
    let mut out = Report::new();
    for p in parts {
        out.extend(p);
    }
    Ok(out)
}

fn primary_smatrix(cfg: &RunConfig, lattice: &Lattice) -> Result<SMatrix> {
    match cfg.hadamard.mode {
        HadamardMode::ExactBisolution => build_smatrix(lattice),
        HadamardMode::Perturbed => perturbed_smatrix(lattice, cfg.hadamard.perturbation_seed, cfg.hadamard.perturbation_scale),
    }
}

fn propagators(cfg: &RunConfig, lattice: &Lattice) -> Result<(Report, Value)> {
    let tol = cfg.tolerances.kernel;
    let p = lattice.propagators();
    let mut r = Report::new();
    let suite = "lattice";
    r.residual(suite, "green-retarded", None, "PΔR-I", p.retarded.operator_residual(lattice, true, true), tol);
    r.residual(suite, "green-advanced", None, "PΔA-I", p.advanced.operator_residual(lattice, true, true), tol);
    r.residual(suite, "advanced-transpose", None, "ΔA-ΔR^T", p.advanced.max_abs_diff(&p.retarded.transpose()), tol);
    r.residual(suite, "pauli-jordan", None, "antisymmetry", p.pauli_jordan.antisymmetry_residual(), tol);
    let n = lattice.shape().sites();
    let mut h1: f64 = 0.0;
    for x in 0..n {
        for y in 0..n {
            h1 = h1.max((p.pauli_jordan.get(x, y).re - 2.0 * p.wightman.get(x, y).im).abs());
        }
    }
    r.residual(suite, "H1", None, "Δ-2ImW", h1, tol);
    for (name, k) in [("W", &p.wightman), ("H", &p.hadamard)] {
        r.residual(suite, "H2", None, format!("{name}-first"), k.operator_residual(lattice, true, false), tol);
        r.residual(suite, "H2", None, format!("{name}-second"), k.operator_residual(lattice, false, false), tol);
    }
    let h3 = p.wightman.min_hermitian_eigenvalue();
    r.residual(suite, "H3", None, "min-eigenvalue", (-h3).max(0.0), tol);
    let kernels = json!({
        "retarded": p.retarded.to_dump(),
        "advanced": p.advanced.to_dump(),
        "pauli-jordan": p.pauli_jordan.to_dump(),
        "hadamard": p.hadamard.to_dump(),
        "wightman": p.wightman.to_dump(),
        "feynman": p.feynman.to_dump(),
    });
    Ok((r, json!({ "kernels": kernels, "min-eigenvalue": h3, "warnings": p.warnings })))
}

fn axioms(cfg: &RunConfig, lattice: &Lattice) -> Result<(Report, Value)> {
    let s = Arc::new(primary_smatrix(cfg, lattice)?);
    let shape = lattice.shape();
    let cap = cfg.caps.lambda_order;
    let count = cfg.samples.count;
    let tols = cfg.tolerances;
    let plan_for = |triples, spacelike, additivity, cap| SamplePlan { triples, spacelike, additivity, additivity_gap: 1, cap, tolerances: tols };
    let deg = cfg.caps.degree.min(2);
    let mut report = Report::new();
    let mut notes = Vec::new();
    for (stream, suite) in cfg.suites.iter().enumerate() {
        let stream = stream as u64 + 1;
        let part = match suite.as_str() {
            "S" => per_sample(count, |i| {
                let mut g = generator(cfg, stream, i);
                let plan = plan_for(vec![g.causal_triple(deg, 3)], vec![g.spacelike_pair(deg, 2)], Vec::new(), cap);
                Ok(prefixed(check_s_axioms(&s, &plan)?, &i.to_string()))
            })?,
            "T1" => per_sample(count, |i| {
                let mut g = generator(cfg, stream, i);
                let mut r = Report::new();
                for n in 2..=cap.clamp(2, 4) {
                    r.extend(check_causal_factorization(&s, &g.causal_chain(n, deg, 2), &format!("{i}/n{n}"), tols.kernel)?);
                }
                Ok(r)
            })?,
            "Z" => {
                let window = Region::rectangle(shape, 1, shape.nt - 1, 0, shape.nx);
                let z = Arc::new(make_handcrafted_z(cfg.extraction.kappa, &window)?);
                let composed = compose(&s, &z);
                per_sample(count, |i| {
                    let mut g = generator(cfg, stream, i);
                    let additivity = (0..2).map(|_| g.additivity_sample()).collect();
                    let plan = plan_for(vec![g.causal_triple(deg, 2)], Vec::new(), additivity, cap.min(3));
                    let mut r = check_z_axioms(&z, &plan)?;
                    let mut closure = check_s_axioms(&composed, &plan)?;
                    for e in &mut closure.entries {
                        e.suite = "closure".into();
                    }
                    r.extend(closure);
                    Ok(prefixed(r, &i.to_string()))
                })?
            }
            "SD" => {
                let gl = GeneralizedLagrangian::free_scalar(shape, lattice.mass());
                let (tol, note) = match cfg.hadamard.mode {
                    HadamardMode::ExactBisolution => (tols.extraction, "exact discrete bisolution".to_string()),
                    HadamardMode::Perturbed => {
                        let h = lattice.propagators().hadamard.combine(
                            Complex64::new(1.0, 0.0),
                            &diagonal_perturbation(shape, cfg.hadamard.perturbation_seed, cfg.hadamard.perturbation_scale),
                            Complex64::new(1.0, 0.0),
                            crate::lattice::KernelKind::Hadamard,
                        );
                        let h2 = h.operator_residual(lattice, true, false).max(h.operator_residual(lattice, false, false));
                        (10.0 * h2 + tols.extraction, format!("perturbed H, H2 residual {h2:.3e}, bound 10×H2"))
                    }
                };
                notes.push(format!("SD: {note}"));
                let near = Region::rectangle(shape, shape.nt / 3 - 1, shape.nt / 3 + 3, 0, 5.min(shape.nx));
                per_sample(count, |i| {
                    let mut g = generator(cfg, stream, i);
                    let f = g.functional(&near, deg, 3);
                    let phi0 = g.interior_field();
                    check_schwinger_dyson(&s, &gl, &f, &phi0, cap.min(3), tol, &i.to_string())
                })?
            }
            "hammerstein" => {
                let all = Region::rectangle(shape, 0, shape.nt, 0, shape.nx);
                let lagrangian = GeneralizedLagrangian::free_scalar(shape, lattice.mass()).on_region(&all)?;
                per_sample(count, |i| {
                    let mut g = generator(cfg, stream, i);
                    let local = g.functional(&all, cfg.caps.degree, 4).add(&lagrangian);
                    let early = Region::rectangle(shape, 1, shape.nt / 4 + 1, 0, shape.nx);
                    let late = Region::rectangle(shape, shape.nt / 2 + 1, shape.nt - 1, 0, shape.nx);
                    let samples = vec![(g.field(&early), g.field(&all), g.field(&late))];
                    let map = |psi: &FieldConfiguration| local.evaluate(psi).map(|v| v.coeff(0).re).unwrap_or(f64::NAN);
                    let related = |a: &FieldConfiguration, b: &FieldConfiguration| not_later_than(&a.support(), &b.support());
                    let r = check_hammerstein("hammerstein", map, |a, b| a.add(b), &FieldConfiguration::zeros(shape), &RealAdditive, related, &samples, tols.series);
                    Ok(prefixed(r, &i.to_string()))
                })?
            }
            "deformation" => {
                let region = Region::rectangle(shape, 1, shape.nt - 1, 0, shape.nx);
                per_sample(count, |i| {
                    let mut g = generator(cfg, stream, i);
                    let (f, h) = (g.general_functional(&region, cfg.caps.degree.min(3), 3), g.general_functional(&region, cfg.caps.degree.min(3), 3));
                    let lhs = s.context().commutator(&f, &h)?.hbar_part(1);
                    let rhs = poisson_bracket_functional(&s.context().pauli_jordan, &f, &h)?.scale(Complex64::new(0.0, 1.0)).shift_hbar(1);
                    let mut r = Report::new();
                    r.residual("deformation", "hbar1-commutator", Some(1), i.to_string(), lhs.max_abs_diff(&rhs), tols.kernel);
                    Ok(r)
                })?
            }
            "hbar" => per_sample(count, |i| {
                let mut g = generator(cfg, stream, i);
                let v = g.causal_triple(cfg.caps.degree, 2).f;
                check_hbar_accounting(&s, &v, cap.min(3), &i.to_string())
            })?,
            other => return Err(Error::UnknownSuite(other.into())),
        };
        let mut part = part;
        if suite != "Z" {
            for e in &mut part.entries {
                e.suite = suite.clone();
            }
        }
        report.extend(part);
    }
    Ok((report, json!({ "smatrix": s.tag(), "notes": notes })))
}

fn extract(cfg: &RunConfig, lattice: &Lattice) -> Result<(Report, Value)> {
    let shape = lattice.shape();
    let cap = cfg.caps.lambda_order;
    let tols = cfg.tolerances;
    let s = Arc::new(build_smatrix(lattice)?);
    let window = Region::rectangle(shape, 1, shape.nt - 1, 0, shape.nx);
    let planted = Arc::new(make_handcrafted_z(cfg.extraction.kappa, &window)?);
    let st = Arc::new(match cfg.extraction.mode {
        ExtractionMode::Roundtrip => compose(&s, &planted),
        ExtractionMode::TwoHadamard => perturbed_smatrix(lattice, cfg.hadamard.perturbation_seed, cfg.hadamard.perturbation_scale)?,
    });
    let fs: Vec<PolyFunctional> = (0..cfg.samples.count).map(|i| generator(cfg, 100, i).causal_triple(cfg.caps.degree.min(2), 3).f).collect();
    let per_f: Vec<(Report, Value)> = fs
        .par_iter()
        .enumerate()
        .map(|(i, f)| -> Result<(Report, Value)> {
            let id = i.to_string();
            let z = extract_z(&s, &st, f, cap)?;
            let mut r = Report::new();
            for (n, res) in compose_back_residuals(&s, &st, f, &z)?.into_iter().enumerate() {
                r.residual("extraction", "compose-back", Some(n), &id, res, tols.for_order(n));
            }
            match cfg.extraction.mode {
                ExtractionMode::Roundtrip => {
                    for (n, zn) in z.iter().enumerate().skip(2) {
                        r.residual("extraction", "planted", Some(n), &id, crate::formal_series::Linear::distance(zn, &planted.value(n, f)?), tols.extraction);
                    }
                }
                ExtractionMode::TwoHadamard if cap >= 2 => {
                    let diff = contraction_product(f, f, &st.context().feynman, Contraction::FULL)?
                        .sub(&contraction_product(f, f, &s.context().feynman, Contraction::FULL)?)
                        .scale_hbar(&HbarScalar::i_over_hbar_pow(1));
                    r.residual("extraction", "kernel-difference", Some(2), &id, z[2].max_abs_diff(&diff), tols.extraction);
                }
                ExtractionMode::TwoHadamard => {}
            }
            for (n, zn) in z.iter().enumerate().skip(2) {
                let ok = zn.hbar_range().is_none_or(|(lo, hi)| lo >= cfg.caps.hbar_window.0 && hi <= cfg.caps.hbar_window.1);
                r.verdict("extraction", "hbar-window", format!("{id}/order-{n}"), ok, "");
            }
            let grading: Vec<Value> = z.iter().skip(2).map(|zn| json!(zn.hbar_range())).collect();
            let values: Vec<Value> = z.iter().skip(2).map(PolyFunctional::to_json).collect();
            Ok((r, json!({ "f": f.to_json(), "z": values, "hbar-range": grading })))
        })
        .collect::<Result<_>>()?;
    let mut report = Report::new();
    let mut values = Vec::new();
    for (r, v) in per_f {
        report.extend(r);
        values.push(v);
    }
    let mut g = generator(cfg, 101, 0);
    let plan = SamplePlan {
        triples: (0..cfg.samples.count.min(3)).map(|_| g.causal_triple(cfg.caps.degree.min(2), 2)).collect(),
        spacelike: Vec::new(),
        additivity: (0..3).map(|_| g.additivity_sample()).collect(),
        additivity_gap: 1,
        cap,
        tolerances: tols,
    };
    report.extend(verify_extracted_locality(s.clone(), st.clone(), &fs, &plan)?);
    let mode = match cfg.extraction.mode {
        ExtractionMode::Roundtrip => "roundtrip",
        ExtractionMode::TwoHadamard => "two-hadamard",
    };
    Ok((report, json!({ "mode": mode, "values": values })))
}

fn default_interaction(lattice: &Lattice) -> PolyFunctional {
    let p = LatticePoint::new(lattice.nt() / 2 - 1, lattice.nx() / 2);
    PolyFunctional::monomial(lattice.shape(), &[p; 4], HbarScalar::one())
}

fn correlate(cfg: &RunConfig, lattice: &Lattice) -> Result<(Report, Value)> {
    let shape = lattice.shape();
    let v = match &cfg.interaction {
        Some(j) => PolyFunctional::from_json(shape, j).map_err(|e| Error::InvalidConfig { field: "interaction".into(), reason: e.to_string() })?,
        None => default_interaction(lattice),
    };
    let mut g = generator(cfg, 200, 0);
    let samples: Vec<_> = (0..4).map(|_| g.additivity_sample()).collect();
    if !check_additivity(&v, &samples, 1, cfg.tolerances.series)?.passed() {
        return Err(Error::InvalidConfig { field: "interaction".into(), reason: "not local: fails the additivity pre-check".into() });
    }
    let observables: Vec<PolyFunctional> = if cfg.observables.is_empty() {
        let (t, x) = (lattice.nt() / 2 + 2, lattice.nx() / 2);
        vec![PolyFunctional::field(shape, LatticePoint::new(t, x - 1)), PolyFunctional::field(shape, LatticePoint::new(t + 1, x + 1))]
    } else {
        cfg.observables
            .iter()
            .enumerate()
            .map(|(i, j)| PolyFunctional::from_json(shape, j).map_err(|e| Error::InvalidConfig { field: format!("observables[{i}]"), reason: e.to_string() }))
            .collect::<Result<_>>()?
    };
    let s = primary_smatrix(cfg, lattice)?;
    let values = correlation(&s, &v, &observables, cfg.caps.lambda_order)?;
    let mut report = Report::new();
    for (n, w) in values.iter().enumerate() {
        report.verdict("correlate", "hbar-window", format!("order-{n}"), w.within(cfg.caps.hbar_window), "");
    }
    let free = correlation(&s, &PolyFunctional::zero(shape), &observables, 0)?;
    report.residual("correlate", "free-limit", Some(0), "order-0", (&free[0] - &values[0]).max_abs(), cfg.tolerances.kernel);
    let table: Vec<Value> = values.iter().enumerate().map(|(n, w)| json!({ "order": n, "value": w })).collect();
    Ok((report, json!({ "interaction": v.to_json(), "observables": observables.iter().map(PolyFunctional::to_json).collect::<Vec<_>>(), "orders": table })))
}

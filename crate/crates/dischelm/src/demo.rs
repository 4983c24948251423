//! End-to-end walk through the worked examples.

use std::io::Write;

use dischelm_core::fdeop::direct_discretize;
use dischelm_core::helmholtz::check_helmholtz;
use dischelm_core::integrate::{self, StepConfig};
use dischelm_core::lagrange::{null_check, synthesize, verify_synthesis, ElOperator, DEFAULT_QUAD_ORDER};
use dischelm_core::{ContinuousOp, LagrangianCouple, NullVerdict, Partition, SamplingConfig, SecondOrderOp, Verdict};

use crate::cli::CliError;

struct Tally<'a> {
    out: &'a mut dyn Write,
    failures: usize,
}

impl Tally<'_> {
    fn line(&mut self, name: &str, got: &str, expected: &str) -> Result<(), CliError> {
        let mark = if got == expected { "ok" } else { "MISMATCH" };
        if got != expected {
            self.failures += 1;
        }
        writeln!(self.out, "[{mark}] {name}: {got} (expected {expected})")?;
        Ok(())
    }
}

pub fn run(seed: u64, grids: usize, out: &mut dyn Write) -> Result<i32, CliError> {
    let cfg = SamplingConfig {
        seed,
        grids,
        ..SamplingConfig::default()
    };
    cfg.validate()?;
    let mut t = Tally { out, failures: 0 };

    let friction = direct_discretize(&ContinuousOp::parse("x + v + w")?, 0.5)?;
    let r = check_helmholtz(&friction, &cfg)?;
    t.line(
        "damped oscillator, centred velocity",
        r.verdict.as_str(),
        Verdict::Violated.as_str(),
    )?;
    let tr = integrate::run(
        &friction,
        1.0,
        1.0,
        Partition::new(0.0, 0.1, 5)?,
        &StepConfig::default(),
    )?;
    let values: Vec<String> = tr.values().iter().map(|q| format!("{q:.6}")).collect();
    writeln!(t.out, "       trajectory from (1, 1), h = 0.1: {}", values.join(", "))?;

    let couple = LagrangianCouple::parse("(x^2 - v^2)/2", "0")?;
    let oscillator = SecondOrderOp::parse("x + w")?;
    let r = verify_synthesis(&oscillator, &couple, &cfg)?;
    t.line(
        "couple ((x^2 - v^2)/2, 0) generates x + w",
        r.verdict.as_str(),
        Verdict::Satisfied.as_str(),
    )?;

    let r = check_helmholtz(&oscillator, &cfg)?;
    t.line("x + w", r.verdict.as_str(), Verdict::Satisfied.as_str())?;
    writeln!(
        t.out,
        "       max residual {:e} over {} grids",
        r.max_residual, r.samples
    )?;
    let synth = synthesize(&oscillator, DEFAULT_QUAD_ORDER)?;
    let r = verify_synthesis(&oscillator, &synth, &cfg)?;
    t.line(
        "synthesized couple of x + w reproduces it",
        r.verdict.as_str(),
        Verdict::Satisfied.as_str(),
    )?;
    let gap = synth.sub(&couple);
    let r = null_check(&gap, &cfg)?;
    t.line(
        "difference of the two couples of x + w",
        r.verdict.as_str(),
        NullVerdict::Null.as_str(),
    )?;
    let cmp = integrate::compare(
        &ElOperator(&synth),
        &oscillator,
        1.0,
        1.0,
        Partition::new(0.0, 0.1, 100)?,
        &StepConfig::default(),
    )?;
    writeln!(
        t.out,
        "       synthesized vs direct trajectory deviation {:e}",
        cmp.max_deviation
    )?;

    let sine = ContinuousOp::parse("x + sin(v)*w")?;
    for blend in [0.0, 0.5, 1.0] {
        let op = direct_discretize(&sine, blend)?;
        let r = check_helmholtz(&op, &cfg)?;
        t.line(
            &format!("x + sin(v)*w at blend {blend}"),
            r.verdict.as_str(),
            Verdict::Violated.as_str(),
        )?;
    }

    writeln!(t.out, "{} mismatches", t.failures)?;
    Ok(if t.failures == 0 { 0 } else { 1 })
}

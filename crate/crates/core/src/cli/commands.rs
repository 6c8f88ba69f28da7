use std::f64::consts::{FRAC_PI_2, TAU};

use rayon::prelude::*;
use serde_json::{json, Value};

use super::output::{Cell, Table};
use super::schema;
use super::{Cli, CliError, Command, CommandOutput, EveMode, GateChoice};
use crate::attacks::{ee_attack, AttackSpec, EEAttackSpec, IrEvaluator};
use crate::channel::{calibrate_amplitude, combined_qber_for_target, gate_noise_qber, NoiseFamily};
use crate::error::Error;
use crate::metrics::{
    bb84_key_rate, break_even_delta, key_rate, mutual_information, zero_crossing,
};
use crate::optimize::{
    maximize_eve, maximize_key_rate, ChannelOptions, EveSearch, EveTarget, GateSearch, C_STAR,
};
use crate::protocol::{format_bases, format_bits, prepare_packed, run_round, Attack, RoundConfig};
use crate::quantum::{
    canonical_gate, star_gate, ComplexMatrix, GateParams, StarGateSpec, StateVector,
};

type CmdResult = Result<CommandOutput, CliError>;

pub(super) fn dispatch(cli: &Cli) -> CmdResult {
    match cli.command {
        Command::SweepC => sweep_c(cli),
        Command::InfoQber => info_qber(cli),
        Command::RateDelta => rate_delta(cli),
        Command::NoiseRate => noise_rate(cli),
        Command::LossQber => loss_qber(cli),
        Command::OptimizeRate => optimize_rate(cli),
        Command::TableNq => table_nq(cli),
        Command::EeDemo => ee_demo(cli),
    }
}

fn resolution(cli: &Cli, default: usize) -> Result<usize, CliError> {
    match cli.resolution.unwrap_or(default) {
        0 => Err(CliError::Usage("--resolution must be at least 1".into())),
        r => Ok(r),
    }
}

/// `r` evenly spaced points on `[lo, hi]`; a single point sits at `lo`.
fn linspace(lo: f64, hi: f64, r: usize) -> Vec<f64> {
    if r == 1 {
        return vec![lo];
    }
    (0..r)
        .map(|k| lo + (hi - lo) * k as f64 / (r - 1) as f64)
        .collect()
}

fn family(cli: &Cli) -> NoiseFamily {
    cli.noise.map(NoiseFamily::from).unwrap_or(NoiseFamily::Xyz)
}

fn gate_c(c: [f64; 3]) -> Result<ComplexMatrix, Error> {
    canonical_gate(&GateParams::new(c[0], c[1], c[2]))
}

fn u2_star() -> Result<ComplexMatrix, Error> {
    star_gate(&StarGateSpec::standard(2))
}

fn sweep_c(cli: &Cli) -> CmdResult {
    let r = resolution(cli, 9)?;
    let mode = cli.mode.unwrap_or(EveMode::Both);
    let axis = linspace(0.0, TAU, r);
    let spec = match mode {
        EveMode::Both => AttackSpec::z_basis(2),
        EveMode::One => AttackSpec::z_basis_masked(2, 0b10),
    };
    let rows = (0..r * r * r)
        .into_par_iter()
        .map(|k| {
            let c = [axis[k / (r * r)], axis[(k / r) % r], axis[k % r]];
            let info = IrEvaluator::new(&gate_c(c)?)?.info(&spec)?;
            Ok(vec![c[0], c[1], c[2], info.mutual_information, info.qber])
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let mut table = Table::new(schema::SWEEP_C);
    let (mut i_min, mut i_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for row in rows {
        i_min = i_min.min(row[3]);
        i_max = i_max.max(row[3]);
        table.push(row.into_iter().map(Cell::Num).collect());
    }
    Ok(CommandOutput {
        table,
        summary: json!({
            "mode": format!("{mode:?}").to_lowercase(),
            "rows": r * r * r,
            "information_min": i_min,
            "information_max": i_max,
        }),
    })
}

fn info_qber(cli: &Cli) -> CmdResult {
    let r = resolution(cli, 16)?;
    let gates: Vec<(&str, ComplexMatrix)> = match cli.gate.unwrap_or(GateChoice::All) {
        GateChoice::All => vec![
            ("identity", ComplexMatrix::identity(4)?),
            ("cstar", gate_c(C_STAR)?),
        ],
        GateChoice::Identity => vec![("identity", ComplexMatrix::identity(4)?)],
        GateChoice::Cstar => vec![("cstar", gate_c(C_STAR)?)],
        GateChoice::U2star => vec![("u2star", u2_star()?)],
    };
    let mut table = Table::new(schema::INFO_QBER);
    let mut summary = serde_json::Map::new();
    for (name, gate) in gates {
        let best = maximize_eve(&gate, EveTarget::Slope, &EveSearch::default())?;
        let spec = AttackSpec::from_mask_angles(2, best.mask, &best.angles)?;
        let xis = if r == 1 {
            vec![1.0]
        } else {
            linspace(0.0, 1.0, r)
        };
        for xi in xis {
            let cfg = RoundConfig::new(gate.clone()).with_intercept(spec.clone().with_fraction(xi));
            let info = mutual_information(&run_round(&cfg)?)?;
            table.push(vec![
                name.into(),
                info.qber.into(),
                info.mutual_information.into(),
            ]);
        }
        summary.insert(
            name.into(),
            json!({
                "slope": best.value,
                "mask": best.mask,
                "angles": best.angles,
                "information": best.info.mutual_information,
                "qber": best.info.qber,
            }),
        );
    }
    Ok(CommandOutput {
        table,
        summary: Value::Object(summary),
    })
}

fn rate_delta(cli: &Cli) -> CmdResult {
    let q_ref = cli.q_ref.unwrap_or(0.06);
    if !(q_ref > 0.0 && q_ref < 0.5 / 3.0) {
        return Err(CliError::Usage(format!(
            "--q-ref {q_ref} must lie in (0, 1/6)"
        )));
    }
    let r = resolution(cli, 201)?;
    let s_cstar = maximize_eve(&gate_c(C_STAR)?, EveTarget::Slope, &EveSearch::default())?.value;
    let r_bb84 = bb84_key_rate(q_ref)?;
    let mut table = Table::new(schema::RATE_DELTA);
    for delta in linspace(1.0, 3.0, r) {
        let q_e = delta * q_ref;
        table.push(vec![
            delta.into(),
            key_rate(s_cstar, q_e, false)?.r.into(),
            key_rate(0.0, q_e, false)?.r.into(),
            r_bb84.into(),
        ]);
    }
    let u2 = u2_star()?;
    let delta_for = |fam: NoiseFamily| -> Result<f64, Error> {
        Ok(gate_noise_qber(&u2, fam, calibrate_amplitude(fam, q_ref)?)? / q_ref)
    };
    Ok(CommandOutput {
        table,
        summary: json!({
            "q_ref": q_ref,
            "slope_cstar": s_cstar,
            "r_bb84": r_bb84,
            "break_even_delta_ideal": break_even_delta(0.0, q_ref)?,
            "break_even_delta_cstar": break_even_delta(s_cstar, q_ref)?,
            "delta_u2star_xyz": delta_for(NoiseFamily::Xyz)?,
            "delta_u2star_xz": delta_for(NoiseFamily::Xz)?,
        }),
    })
}

fn noise_rate(cli: &Cli) -> CmdResult {
    let r = resolution(cli, 101)?;
    let u2 = u2_star()?;
    let s = maximize_eve(&u2, EveTarget::Slope, &EveSearch::default())?.value;
    let rate = |fam: NoiseFamily, q: f64| -> Result<f64, Error> {
        let q_e = gate_noise_qber(&u2, fam, calibrate_amplitude(fam, q)?)?;
        Ok(key_rate(s, q_e, false)?.r)
    };
    let mut table = Table::new(schema::NOISE_RATE);
    for q in linspace(0.0, 0.25, r) {
        table.push(vec![
            q.into(),
            bb84_key_rate(q)?.into(),
            rate(NoiseFamily::Xyz, q)?.into(),
            rate(NoiseFamily::Xz, q)?.into(),
        ]);
    }
    Ok(CommandOutput {
        table,
        summary: json!({
            "slope_u2star": s,
            "zero_bb84": zero_crossing(bb84_key_rate, 0.01, 0.3)?,
            "zero_u2star_xyz": zero_crossing(|q| rate(NoiseFamily::Xyz, q), 0.01, 0.3)?,
            "zero_u2star_xz": zero_crossing(|q| rate(NoiseFamily::Xz, q), 0.01, 0.25)?,
        }),
    })
}

fn loss_qber(cli: &Cli) -> CmdResult {
    let r = resolution(cli, 33)?;
    let qs = cli.q.clone().unwrap_or_else(|| vec![0.0, 0.06, 0.10]);
    let loss = cli.loss.unwrap_or(0.5);
    let fam = family(cli);
    let mut table = Table::new(schema::LOSS_QBER);
    let mut summary = Vec::new();
    for &q in &qs {
        let mut last = None;
        for c2 in linspace(0.0, FRAC_PI_2, r) {
            let res = combined_qber_for_target(&gate_c([0.0, c2, 0.0])?, fam, q, loss)?;
            table.push(vec![q.into(), c2.into(), res.q_e.into(), res.q_loss.into()]);
            last = Some(res.q_e);
        }
        let cstar = combined_qber_for_target(&gate_c(C_STAR)?, fam, q, loss)?;
        summary.push(json!({
            "q": q,
            "q_e_at_pi_2": last,
            "q_e_cstar": cstar.q_e,
            "q_loss_cstar": cstar.q_loss,
        }));
    }
    Ok(CommandOutput {
        table,
        summary: json!({ "loss": loss, "noise": fam.to_string(), "curves": summary }),
    })
}

fn optimize_rate(cli: &Cli) -> CmdResult {
    let qs = cli
        .q
        .clone()
        .unwrap_or_else(|| vec![0.02, 0.04, 0.06, 0.08, 0.10, 0.12, 0.25]);
    let channel = ChannelOptions {
        family: family(cli),
        loss: cli.loss.unwrap_or(0.0),
        correlated: cli.corr,
    };
    let search = GateSearch {
        random_starts: cli.random_starts.unwrap_or(1),
        rng_seeds: cli.seed_list.clone().unwrap_or_else(|| vec![1]),
        ..GateSearch::default()
    };
    let mut table = Table::new(schema::OPTIMIZE_RATE);
    let mut summary = Vec::new();
    for &q in &qs {
        let opt = maximize_key_rate(q, &channel, &search)?;
        let c = opt.canonical;
        table.push(vec![
            q.into(),
            c[0].into(),
            c[1].into(),
            c[2].into(),
            opt.best.rate.r.into(),
            opt.bb84_rate.into(),
            opt.best.slope.into(),
            opt.best.q_e.into(),
        ]);
        summary.push(json!({
            "q": q,
            "amplitude": opt.amplitude,
            "params": opt.report.best_params,
            "converged": opt.report.converged,
            "start_values": opt.report.starts.iter().map(|s| s.result.value).collect::<Vec<_>>(),
        }));
    }
    Ok(CommandOutput {
        table,
        summary: json!({
            "noise": channel.family.to_string(),
            "loss": channel.loss,
            "correlated": channel.correlated,
            "seed_list": search.rng_seeds,
            "random_starts": search.random_starts,
            "results": summary,
        }),
    })
}

fn table_nq(cli: &Cli) -> CmdResult {
    let qs = cli
        .q
        .clone()
        .unwrap_or_else(|| vec![0.02, 0.04, 0.06, 0.08, 0.10, 0.12, 0.25, 0.50]);
    let fam = family(cli);
    let mut table = Table::new(schema::TABLE_NQ);
    for &q in &qs {
        table.push(vec![q.into(), calibrate_amplitude(fam, q)?.into()]);
    }
    Ok(CommandOutput {
        table,
        summary: json!({ "noise": fam.to_string(), "rows": qs.len() }),
    })
}

fn ee_demo(cli: &Cli) -> CmdResult {
    let n = cli.qubits.unwrap_or(2);
    if !(2..=3).contains(&n) {
        return Err(CliError::Usage(format!(
            "--qubits {n}: the attack exists for 2 or 3 qubits"
        )));
    }
    let spec = EEAttackSpec::new(StarGateSpec::standard(n))?;
    let gate = spec.gate()?;
    let undo = gate.dagger();
    let two = 1usize << n;
    let mut table = Table::new(schema::EE_DEMO);
    let mut min_fidelity = f64::INFINITY;
    for basis in 0..two {
        for alice in 0..two {
            let sent = prepare_packed(alice, basis, n, &gate)?;
            for b in ee_attack(&sent, &spec)? {
                let decoded = undo.apply(&b.bob_state)?;
                let f = decoded.fidelity(&StateVector::basis(n, b.eve_bits)?)?;
                min_fidelity = min_fidelity.min(f);
                table.push(vec![
                    format_bases(basis, n).into(),
                    format_bits(alice, n).into(),
                    format_bits(b.eve_bits, n).into(),
                    b.probability.into(),
                    f.into(),
                ]);
            }
        }
    }
    let dist = run_round(&RoundConfig::new(gate).with_attack(Attack::EntanglementEnhanced(spec)))?;
    let info = mutual_information(&dist)?;
    Ok(CommandOutput {
        table,
        summary: json!({
            "qubits": n,
            "information": info.mutual_information,
            "qber": info.qber,
            "min_fidelity": min_fidelity,
        }),
    })
}

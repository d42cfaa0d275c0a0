//! Subcommand implementations.

use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, bail, Context};
use serde_json::json;

use relaygame::af_analytic::{
    basin_map, br_coefficients, enumerate_ne, fixed_gains, BasinLabel, NoiseReading,
};
use relaygame::afgain::{optimal_gain, GainParams};
use relaygame::game::{cournot, utilities, verify_ne, BrOptions, CournotOptions, PowerAllocation};
use relaygame::gen::{generate, Family, ProtocolKind, RandomSpec};
use relaygame::leader::{
    best_leader_value, dominance_map, linspace, sweep, DominanceOptions, EquilibriumPolicy, LeaderVariable,
    SweepResult, SweepSpec,
};
use relaygame::rates::{band_rates_detailed, saturating_gain};
use relaygame::scenario::{read_scenario, scenario_to_json, GainDenominator, Scenario, User};
use relaygame::Error;

use crate::output::{document, num, write_json, Csv};
use crate::{Command, Common, Format, GainDenominatorArg, GridArgs, PolicyArg, ReadingArg, RunConfig};

fn load(common: &Common) -> anyhow::Result<Scenario> {
    let path = common.scenario.as_ref().ok_or_else(|| Error::Domain("--scenario is required".into()))?;
    let mut s = read_scenario(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(gd) = common.gain_denominator {
        s = s.with_gain_denominator(match gd {
            GainDenominatorArg::Allocated => GainDenominator::Allocated,
            GainDenominatorArg::Full => GainDenominator::Full,
        });
    }
    Ok(s)
}

fn reading(common: &Common) -> NoiseReading {
    match common.d_reading {
        ReadingArg::Squared => NoiseReading::Squared,
        ReadingArg::Printed => NoiseReading::Printed,
    }
}

fn cournot_opts(common: &Common, max_iter: usize, simultaneous: bool) -> CournotOptions {
    let d = CournotOptions::default();
    CournotOptions { max_iter, tol: common.tol.unwrap_or(d.tol), simultaneous, br: d.br }
}

fn policy(p: PolicyArg) -> EquilibriumPolicy {
    match p {
        PolicyArg::Cournot => EquilibriumPolicy::Cournot,
        PolicyArg::MultiStart => EquilibriumPolicy::MultiStart,
        PolicyArg::Analytic => EquilibriumPolicy::Analytic,
    }
}

fn band_index(s: &Scenario, band: usize) -> anyhow::Result<usize> {
    if band >= s.num_bands() {
        bail!(Error::Domain(format!("band {band} out of range, scenario has {}", s.num_bands())));
    }
    Ok(band)
}

fn out(cfg: &RunConfig) -> Option<&Path> {
    cfg.common.out.as_deref()
}

fn format_or(cfg: &RunConfig, default: Format) -> Format {
    cfg.common.format.unwrap_or(default)
}

pub fn run(cfg: &RunConfig) -> anyhow::Result<()> {
    let c = &cfg.common;
    match &cfg.command {
        Command::Rates { band, powers } => {
            let s = load(c)?;
            let q = band_index(&s, *band)?;
            let pw = match powers {
                Some(v) => (v[0], v[1]),
                None => (s.p1, s.p2),
            };
            let (r, detail) = band_rates_detailed(&s.bands[q], pw, s.gain_denominator, (s.p1, s.p2))?;
            let body = json!({
                "band": q,
                "protocol": s.bands[q].protocol.name(),
                "powers": [pw.0, pw.1],
                "r1": r.r1,
                "r2": r.r2,
                "sum": r.sum(),
                "detail": detail,
            });
            write_json(out(cfg), &document("rates", body)?)
        }
        Command::AfGain { band, user, a_max } => {
            let s = load(c)?;
            let q = band_index(&s, *band)?;
            let u = User::from_label(*user).ok_or_else(|| Error::Domain(format!("user must be 1 or 2, got {user}")))?;
            let ch = &s.bands[q].channel;
            let a_max = a_max.unwrap_or_else(|| saturating_gain(ch, (s.p1, s.p2)));
            let gp = GainParams::from_band(ch, u, (s.p1, s.p2));
            let sol = optimal_gain(&gp, a_max)?;
            let body = json!({ "band": q, "user": u, "a_max": a_max, "solution": sol });
            write_json(out(cfg), &document("af_gain", body)?)
        }
        Command::Ne { analytic } => {
            let s = load(c)?;
            let opts = BrOptions::default();
            if *analytic {
                let coeffs = br_coefficients(&s, fixed_gains(&s)?, reading(c))?;
                let set = enumerate_ne(&coeffs)?;
                let checks: Vec<_> = set
                    .points
                    .iter()
                    .map(|p| {
                        let chk = verify_ne(&s, &PowerAllocation::two_band(p.theta1, p.theta2), c.verify_tol, &opts);
                        json!({ "pass": chk.pass, "improvements": chk.improvements })
                    })
                    .collect();
                let body = json!({ "coefficients": coeffs, "equilibria": set, "verification": checks });
                write_json(out(cfg), &document("ne_analytic", body)?)
            } else {
                let tr = cournot(&s, &PowerAllocation::uniform(s.num_bands()), &cournot_opts(c, 1000, false))?;
                let state = tr.states.last().cloned().expect("trace holds the initial state");
                let chk = verify_ne(&s, &state, c.verify_tol, &opts);
                let body = json!({
                    "converged": tr.converged && chk.pass,
                    "iterations": tr.iterations,
                    "state": state,
                    "utilities": utilities(&s, &state),
                    "improvements": chk.improvements,
                });
                write_json(out(cfg), &document("ne", body)?)
            }
        }
        Command::Cournot { start, max_iter, simultaneous } => {
            let s = load(c)?;
            let q = s.num_bands();
            let initial = match start.as_deref() {
                None => PowerAllocation::uniform(q),
                Some([a, b]) if q == 2 => PowerAllocation::two_band(*a, *b),
                Some(v) if v.len() == 2 * q => PowerAllocation::new(v[..q].to_vec(), v[q..].to_vec()),
                Some(v) => bail!(Error::Domain(format!("--start needs 2 or {} values, got {}", 2 * q, v.len()))),
            };
            initial.check(q)?;
            let tr = cournot(&s, &initial, &cournot_opts(c, *max_iter, *simultaneous))?;
            match format_or(cfg, Format::Csv) {
                Format::Json => {
                    let u: Vec<[f64; 2]> = tr.states.iter().map(|st| utilities(&s, st)).collect();
                    write_json(out(cfg), &document("cournot", json!({ "trace": tr, "utilities": u }))?)
                }
                Format::Csv => {
                    let mut header = vec!["iteration".to_string()];
                    for user in 1..=2 {
                        header.extend((0..q).map(|b| format!("theta{user}_{b}")));
                    }
                    header.extend(["u1".to_string(), "u2".to_string()]);
                    let mut csv = Csv::new(header);
                    for (k, st) in tr.states.iter().enumerate() {
                        let u = utilities(&s, st);
                        let mut row = vec![k.to_string()];
                        row.extend(st.theta1.iter().chain(&st.theta2).map(|&x| num(x)));
                        row.extend([num(u[0]), num(u[1])]);
                        csv.row(row);
                    }
                    csv.write(out(cfg))
                }
            }
        }
        Command::Basin { resolution } => {
            let s = load(c)?;
            let coeffs = br_coefficients(&s, fixed_gains(&s)?, reading(c))?;
            let map = basin_map(&coeffs, *resolution)?;
            match format_or(cfg, Format::Csv) {
                Format::Json => write_json(out(cfg), &document("basin", &map)?),
                Format::Csv => {
                    let mut csv = Csv::new(["theta1", "theta2", "label"]);
                    for cell in &map.cells {
                        let label = match cell.label {
                            BasinLabel::Point(i) => format!("ne{i}"),
                            BasinLabel::Segment => "segment".into(),
                            BasinLabel::Unconverged => "unconverged".into(),
                        };
                        csv.row(vec![num(cell.theta1), num(cell.theta2), label]);
                    }
                    csv.write(out(cfg))
                }
            }
        }
        Command::SweepGain { band, n, a_max, policy: p, summary } => {
            let s = load(c)?;
            let q = band_index(&s, *band)?;
            let top = a_max.unwrap_or_else(|| saturating_gain(&s.bands[q].channel, (s.p1, s.p2)));
            let var = LeaderVariable::Amplification { band: q, values: linspace(0.0, top, *n) };
            run_sweep(cfg, &s, var, *p, summary.as_deref(), &["gain"])
        }
        Command::SweepNu { band, n, policy: p, summary } => {
            let s = load(c)?;
            let q = band_index(&s, *band)?;
            let var = LeaderVariable::Nu { band: q, values: linspace(0.0, 1.0, *n) };
            run_sweep(cfg, &s, var, *p, summary.as_deref(), &["nu"])
        }
        Command::SweepPosition { grid, policy: p, summary } => {
            let s = load(c)?;
            let (xs, ys) = axes(grid);
            run_sweep(cfg, &s, LeaderVariable::RelayPosition { xs, ys }, *p, summary.as_deref(), &["x", "y"])
        }
        Command::DominanceMap { grid, tie_tol, summary } => {
            let s = load(c)?;
            let (xs, ys) = axes(grid);
            let opts = DominanceOptions { tie_tol: *tie_tol, ..DominanceOptions::default() };
            let map = dominance_map(&s, &xs, &ys, &opts)?;
            let counts = json!({
                "df": map.count(relaygame::leader::Dominant::Df),
                "ef": map.count(relaygame::leader::Dominant::Ef),
                "af": map.count(relaygame::leader::Dominant::Af),
            });
            let best = map
                .cells
                .iter()
                .max_by(|a, b| a.rates.df.max(a.rates.ef).max(a.rates.af).total_cmp(&b.rates.df.max(b.rates.ef).max(b.rates.af)));
            let summary_doc = document(
                "dominance_map_summary",
                json!({ "nx": map.nx, "ny": map.ny, "counts": counts, "best_cell": best }),
            )?;
            match format_or(cfg, Format::Csv) {
                Format::Json => write_json(out(cfg), &document("dominance_map", json!({ "map": map, "counts": counts }))?),
                Format::Csv => {
                    let mut csv = Csv::new(["x", "y", "df", "ef", "af", "label"]);
                    for cell in &map.cells {
                        csv.row(vec![
                            num(cell.relay[0]),
                            num(cell.relay[1]),
                            num(cell.rates.df),
                            num(cell.rates.ef),
                            num(cell.rates.af),
                            cell.label.name().into(),
                        ]);
                    }
                    csv.write(out(cfg))?;
                    emit_summary(summary.as_deref(), &summary_doc)
                }
            }
        }
        Command::Gen { family, bands, protocol, time_sharing } => {
            let fam: Family = family.parse().map_err(|e: Error| anyhow!(e))?;
            let kind: ProtocolKind = protocol.parse().map_err(|e: Error| anyhow!(e))?;
            let spec = RandomSpec { bands: *bands, protocol: kind, time_sharing: *time_sharing };
            let s = generate(fam, c.seed, &spec)?;
            let mut w = crate::output::sink(out(cfg))?;
            w.write_all(scenario_to_json(&s).as_bytes())?;
            w.flush()?;
            Ok(())
        }
    }
}


fn axes(g: &GridArgs) -> (Vec<f64>, Vec<f64>) {
    (linspace(g.xmin, g.xmax, g.nx), linspace(g.ymin, g.ymax, g.ny))
}

fn emit_summary(path: Option<&Path>, doc: &serde_json::Value) -> anyhow::Result<()> {
    match path {
        Some(p) => write_json(Some(p), doc),
        None => {
            eprintln!("{}", serde_json::to_string(doc)?);
            Ok(())
        }
    }
}

fn sweep_summary(r: &SweepResult, variable: &LeaderVariable, pol: EquilibriumPolicy) -> anyhow::Result<serde_json::Value> {
    let best = match best_leader_value(r) {
        Ok(p) => json!({ "leader": p.leader, "sum_rate": p.sum_rate, "utilities": p.utilities, "state": p.state }),
        Err(Error::NoConvergedPoint) => serde_json::Value::Null,
        Err(e) => return Err(e.into()),
    };
    let kind = match variable {
        LeaderVariable::Amplification { .. } => "amplification",
        LeaderVariable::Nu { .. } => "nu",
        LeaderVariable::RelayPosition { .. } => "relay_position",
    };
    document(
        "sweep_summary",
        json!({
            "variable": kind,
            "policy": pol,
            "points": r.points.len(),
            "converged": r.points.iter().filter(|p| p.converged).count(),
            "argmax": best,
        }),
    )
}

fn run_sweep(
    cfg: &RunConfig,
    s: &Scenario,
    variable: LeaderVariable,
    p: PolicyArg,
    summary: Option<&Path>,
    leader_cols: &[&str],
) -> anyhow::Result<()> {
    let c = &cfg.common;
    let spec = SweepSpec {
        variable,
        policy: policy(p),
        cournot: cournot_opts(c, CournotOptions::default().max_iter, false),
        verify_tol: c.verify_tol,
    };
    let r = sweep(&spec, s)?;
    let summary_doc = sweep_summary(&r, &spec.variable, spec.policy)?;
    match format_or(cfg, Format::Csv) {
        Format::Json => {
            write_json(out(cfg), &document("sweep", json!({ "summary": summary_doc, "points": r.points }))?)
        }
        Format::Csv => {
            let q = s.num_bands();
            let mut header: Vec<String> = leader_cols.iter().map(|s| s.to_string()).collect();
            header.push("converged".into());
            for user in 1..=2 {
                header.extend((0..q).map(|b| format!("theta{user}_{b}")));
            }
            header.extend(["u1", "u2", "sum_rate", "iterations", "max_improvement", "equilibria"].map(String::from));
            let mut csv = Csv::new(header);
            for pt in &r.points {
                let mut row: Vec<String> = pt.leader.iter().map(|&x| num(x)).collect();
                row.push(pt.converged.to_string());
                row.extend(pt.state.theta1.iter().chain(&pt.state.theta2).map(|&x| num(x)));
                row.extend([
                    num(pt.utilities[0]),
                    num(pt.utilities[1]),
                    num(pt.sum_rate),
                    pt.iterations.to_string(),
                    num(pt.max_improvement),
                    pt.equilibria.len().to_string(),
                ]);
                csv.row(row);
            }
            csv.write(out(cfg))?;
            emit_summary(summary, &summary_doc)
        }
    }
}

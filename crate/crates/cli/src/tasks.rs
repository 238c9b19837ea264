use std::f64::consts::PI;
use std::fmt::Write as _;

use ncgabor::algebra::{
    act_left, act_right, inner_left, inner_right, trace_l, trace_r, twisted_conv, twisted_star, LatticeSeq,
};
use ncgabor::frame::{laurent_symbol, reconstruction_residual, wexler_raz_residual, FrameSystem};
use ncgabor::geometry::{covariant, derive, soliton_experiment, Axis, ChernReport};
use ncgabor::lattice::LatticeKind;
use ncgabor::moyal::{
    continuous_chern, continuous_energy, default_corpus, moyal_check, parse_corpus, screen_corpus, CHERN_EXTENT,
    CHERN_STEP,
};
use ncgabor::signal::{cocycle, tf_shift, GridSignal, ShiftKind};
use ncgabor::Error;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{ExperimentConfig, RawConfig, Task};
use crate::error::{CliError, Result};
use crate::random;
use crate::report::{write_file, Check, Report};

/// Output locations and per-command extras that are not part of the experiment itself.
#[derive(Debug, Clone, Default)]
pub struct Extras {
    pub frame_trend: bool,
    pub tight: bool,
    pub window_out: Option<String>,
    pub plot_dir: Option<String>,
    pub corpus: Option<String>,
}

impl Extras {
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        Ok(Extras {
            window_out: raw.single("window_out")?.map(str::to_string),
            plot_dir: raw.single("plot_dir")?.map(str::to_string),
            corpus: raw.single("corpus")?.map(str::to_string),
            ..Extras::default()
        })
    }
}

struct State {
    system: Option<FrameSystem>,
    experiment: Option<ChernReport>,
}

pub fn run(cfg: &ExperimentConfig, extras: &Extras, report: &mut Report) -> Result<()> {
    let mut st = State { system: None, experiment: None };
    for task in &cfg.tasks {
        match task {
            Task::Axioms => axioms(cfg, report)?,
            Task::Frame => frame(cfg, extras, report, &mut st)?,
            Task::WexlerRaz => wexler_raz(cfg, extras, report, &st)?,
            Task::Chern => chern(cfg, report, &mut st)?,
            Task::Energy => energy(cfg, report, &mut st)?,
            Task::Soliton => soliton(cfg, report, &mut st)?,
            Task::Moyal => moyal(cfg, extras, report)?,
        }
    }
    if extras.tight {
        tight(cfg, extras, report, &st)?;
    }
    Ok(())
}

fn relative(a: &GridSignal, b: &GridSignal) -> Result<f64> {
    let scale = a.norm().max(b.norm());
    Ok(if scale == 0.0 { 0.0 } else { a.sub(b)?.norm() / scale })
}

fn axioms(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let p = cfg.params;
    let q = p.q;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut seq_worst = [0.0f64; 5];
    for i in 0..cfg.count {
        let kind = if i % 2 == 0 { LatticeKind::TimeFreq } else { LatticeKind::Adjoint };
        let a = random::sequence(p, kind, 5, 2, &mut rng);
        let b = random::sequence(p, kind, 5, 2, &mut rng);
        let d = random::sequence(p, kind, 5, 2, &mut rng);
        let conv = |x: &LatticeSeq, y: &LatticeSeq| twisted_conv(x, y);
        let tr = |x: &LatticeSeq| match kind {
            LatticeKind::TimeFreq => trace_l(x),
            LatticeKind::Adjoint => trace_r(x),
        };
        let ab = conv(&a, &b)?;
        seq_worst[0] = seq_worst[0].max(conv(&ab, &d)?.l1_distance(&conv(&a, &conv(&b, &d)?)?, None)?);
        let star = conv(&twisted_star(&b), &twisted_star(&a))?;
        seq_worst[1] = seq_worst[1].max(twisted_star(&ab).l1_distance(&star, None)?);
        seq_worst[2] = seq_worst[2].max(twisted_star(&twisted_star(&a)).l1_distance(&a, None)?);
        seq_worst[3] = seq_worst[3].max((tr(&ab)? - tr(&conv(&b, &a)?)?).norm());
        for axis in [Axis::Time, Axis::Frequency] {
            let rhs = conv(&derive(&a, axis), &b)?.add(&conv(&a, &derive(&b, axis))?)?;
            seq_worst[4] = seq_worst[4].max(derive(&ab, axis).l1_distance(&rhs, None)?);
        }
    }
    let names = [
        "associativity",
        "involution anti-homomorphism",
        "involution is involutive",
        "trace cyclicity",
        "Leibniz rule",
    ];
    for (name, w) in names.iter().zip(seq_worst) {
        report.check(Check::below(*name, w, cfg.ladder.algebra));
    }

    // operator-level identities act on grid signals, so fewer instances
    let mut sig_worst = [0.0f64; 4];
    let mut fundamental: f64 = 0.0;
    for _ in 0..cfg.count.min(10) {
        let f = random::signal(cfg.grid, &mut rng);
        let (n1, n2) = (random::point(q, &mut rng), random::point(q, &mut rng));
        let lhs = tf_shift(&tf_shift(&f, &n2, ShiftKind::TimeFreq), &n1, ShiftKind::TimeFreq);
        let rhs = tf_shift(&f, &n1.plus(&n2, q), ShiftKind::TimeFreq).scaled(cocycle(&n1, &n2, q));
        sig_worst[0] = sig_worst[0].max(relative(&lhs, &rhs)?);

        let a1 = random::sequence(p, LatticeKind::TimeFreq, 3, 1, &mut rng);
        let a2 = random::sequence(p, LatticeKind::TimeFreq, 3, 1, &mut rng);
        let lhs = act_left(&a1, &act_left(&a2, &f)?)?;
        sig_worst[1] = sig_worst[1].max(relative(&lhs, &act_left(&twisted_conv(&a1, &a2)?, &f)?)?);

        let b1 = random::sequence(p, LatticeKind::Adjoint, 3, 1, &mut rng);
        let b2 = random::sequence(p, LatticeKind::Adjoint, 3, 1, &mut rng);
        let lhs = act_right(&act_right(&f, &b1)?, &b2)?;
        sig_worst[2] = sig_worst[2].max(relative(&lhs, &act_right(&f, &twisted_conv(&b1, &b2)?)?)?);

        let f12 = covariant(&covariant(&f, Axis::Frequency), Axis::Time)
            .sub(&covariant(&covariant(&f, Axis::Time), Axis::Frequency))?;
        let target = f.scaled(Complex64::new(0.0, -2.0 * PI));
        sig_worst[3] = sig_worst[3].max(relative(&f12, &target)?);

        let g = random::signal(cfg.grid, &mut rng);
        let h = random::signal(cfg.grid, &mut rng);
        let lhs = act_left(&inner_left(&f, &g, &p, cfg.radius)?, &h)?;
        let rhs = act_right(&f, &inner_right(&g, &h, &p, cfg.radius)?)?;
        fundamental = fundamental.max(relative(&lhs, &rhs)?);
    }
    let names = ["shift cocycle", "left module action", "right module action", "curvature F12 = -2 pi i"];
    for (name, w) in names.iter().zip(sig_worst) {
        report.check(Check::below(*name, w, cfg.ladder.algebra));
    }
    // both inner products are truncated at the radius, so this one sits on the frame rung
    report.check(Check::below("fundamental identity", fundamental, cfg.ladder.frame));
    report.insert("axiom_instances", json!({ "sequences": cfg.count, "signals": cfg.count.min(10) }));
    Ok(())
}

fn frame(cfg: &ExperimentConfig, extras: &Extras, report: &mut Report, st: &mut State) -> Result<()> {
    let p = cfg.params;
    let g = cfg.window.build(cfg.grid, &p, cfg.radius)?;
    let sys = FrameSystem::new(g, p, cfg.radius)?;
    if extras.frame_trend {
        let trend = sys.frame_trend(cfg.probes, cfg.seed)?;
        report.insert("frame_trend", trend);
        if !trend.frame {
            return Err(Error::NotAFrame { lower: trend.lower_large, upper: trend.upper }.into());
        }
    }
    let b = sys.frame_bounds(cfg.probes, cfg.seed)?;
    report.insert(
        "frame",
        json!({
            "A": b.lower,
            "B": b.upper,
            "probe_dim": b.probe_dim,
            "radius": cfg.radius,
            "N": cfg.grid.samples,
            "L": cfg.grid.period,
        }),
    );
    match laurent_symbol(sys.window(), &p, cfg.symbol_grid, cfg.radius) {
        Ok(sym) => {
            let (lo, hi) = sym.frame_bounds();
            report.insert(
                "laurent",
                json!({ "min_abs": sym.min_abs, "max_abs": sym.max_abs, "riesz": sym.riesz, "A": lo, "B": hi }),
            );
            if let Some(dir) = &extras.plot_dir {
                let mut out = String::from("# t1 t2 |F(t1,t2)|\n");
                for i in 0..sym.grid {
                    for j in 0..sym.grid {
                        let (t1, t2) = (i as f64 / sym.grid as f64, j as f64 / sym.grid as f64);
                        writeln!(out, "{t1} {t2} {}", sym.at(i, j).norm()).unwrap();
                    }
                    out.push('\n');
                }
                write_file(&format!("{dir}/laurent_abs.dat"), &out)?;
            }
        }
        Err(Error::LaurentUnavailable(msg)) => report.insert("laurent", json!({ "unavailable": msg })),
        Err(e) => return Err(e.into()),
    }
    st.system = Some(sys);
    Ok(())
}

fn system(st: &State) -> &FrameSystem {
    st.system.as_ref().expect("frame task runs first")
}

fn export(path: &Option<String>, signal: &GridSignal) -> Result<()> {
    if let Some(path) = path {
        let file = std::fs::File::create(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
        signal.write_columns(std::io::BufWriter::new(file))?;
    }
    Ok(())
}

fn wexler_raz(cfg: &ExperimentConfig, extras: &Extras, report: &mut Report, st: &State) -> Result<()> {
    let sys = system(st);
    let (g, p) = (sys.window(), cfg.params);
    let (h, stats) = sys.solve_bounded(g, cfg.cg_tol, cfg.cg_max_iter)?;
    let wr = wexler_raz_residual(g, &h, &p, cfg.radius)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rec: f64 = 0.0;
    for _ in 0..cfg.count {
        rec = rec.max(reconstruction_residual(&random::signal(cfg.grid, &mut rng), g, &h, &p, cfg.radius)?);
    }
    report.insert(
        "dual",
        json!({ "cg_iterations": stats.iterations, "wexler_raz": wr, "reconstruction": rec, "probes": cfg.count }),
    );
    report.check(Check::below("Wexler-Raz residual", wr, cfg.ladder.frame));
    report.check(Check::below("reconstruction residual", rec, cfg.ladder.frame));
    if !extras.tight {
        export(&extras.window_out, &h)?;
    }
    Ok(())
}

fn tight(cfg: &ExperimentConfig, extras: &Extras, report: &mut Report, st: &State) -> Result<()> {
    let sys = system(st);
    let t = sys.canonical_tight(cfg.cg_tol)?;
    let b = FrameSystem::new(t.clone(), cfg.params, cfg.radius)?.frame_bounds(cfg.probes, cfg.seed)?;
    let wr = wexler_raz_residual(t, t, &cfg.params, cfg.radius)?;
    report.insert("tight", json!({ "A": b.lower, "B": b.upper, "self_wexler_raz": wr }));
    report.check(Check::below("tight lower bound |A - 1|", (b.lower - 1.0).abs(), cfg.ladder.frame));
    report.check(Check::below("tight upper bound |B - 1|", (b.upper - 1.0).abs(), cfg.ladder.frame));
    report.check(Check::below("tight self-duality", wr, cfg.ladder.frame));
    export(&extras.window_out, t)
}

fn experiment<'a>(cfg: &ExperimentConfig, report: &mut Report, st: &'a mut State) -> Result<&'a ChernReport> {
    if st.experiment.is_none() {
        let r = soliton_experiment(&cfg.params, &cfg.window, &cfg.settings())?;
        report.insert("soliton", &r);
        st.experiment = Some(r);
    }
    Ok(st.experiment.as_ref().unwrap())
}

fn chern(cfg: &ExperimentConfig, report: &mut Report, st: &mut State) -> Result<()> {
    let r = experiment(cfg, report, st)?.clone();
    let tol = cfg.ladder.chern;
    report.check(Check::below("projection idempotency", r.idempotency, cfg.ladder.frame));
    report.check(Check::below("c1 integrality", (r.c1_re - r.c1_re.round()).abs(), tol));
    report.check(Check::below("c1 imaginary part", r.c1_im.abs(), tol));
    report.check(Check::below("trace and lattice-sum formulas agree", (r.c1() - r.c1_sum()).norm(), tol));
    Ok(())
}

fn energy(cfg: &ExperimentConfig, report: &mut Report, st: &mut State) -> Result<()> {
    let r = experiment(cfg, report, st)?.clone();
    let tol = cfg.ladder.chern;
    report.check(Check::below("derivative and window energies agree", (r.energy - r.energy_window).abs(), tol));
    report.check(Check::at_least("energy bound E - |c1|", r.gap, -tol));
    Ok(())
}

fn soliton(cfg: &ExperimentConfig, report: &mut Report, st: &mut State) -> Result<()> {
    let r = experiment(cfg, report, st)?.clone();
    let tol = cfg.ladder.chern;
    let q = cfg.params.q as f64;
    report.check(Check::below("|c1 - q|", (r.c1() - Complex64::new(q, 0.0)).norm(), tol));
    report.check(Check::below("|E - q|", (r.energy - q).abs(), tol));
    report.check(Check::below("self-duality residual", r.sd_min(), tol));
    let sign = if r.sd_residual_plus <= r.sd_residual_minus { "+" } else { "-" };
    report.insert("self_dual_sign", sign);
    Ok(())
}

fn moyal(cfg: &ExperimentConfig, extras: &Extras, report: &mut Report) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.count {
        let f = random::signal(cfg.grid, &mut rng);
        let g = random::signal(cfg.grid, &mut rng);
        worst = worst.max(moyal_check(&f, &g)?.relative_error);
    }
    report.check(Check::below("Moyal identity", worst, cfg.ladder.algebra));

    let g = cfg.window.build(cfg.grid, &cfg.params, cfg.radius)?;
    let e = continuous_energy(&g)?;
    let c1 = continuous_chern(&g, CHERN_STEP, CHERN_EXTENT)?;
    report.insert("window", json!({ "energy": e, "c1_re": c1.re, "c1_im": c1.im }));
    let q = cfg.params.q as f64;
    report.check(Check::below("continuous |c1 - q|", (c1 - Complex64::new(q, 0.0)).norm(), cfg.ladder.chern));
    report.check(Check::at_least("continuous E - q", e - q, -cfg.ladder.chern));

    let corpus = match &extras.corpus {
        None => default_corpus(),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
            parse_corpus(&text)?
        }
    };
    let rows = screen_corpus(&corpus, cfg.grid.period, cfg.grid.samples)?;
    let min_excess = rows.iter().map(|r| r.excess).fold(f64::INFINITY, f64::min);
    let gauss_excess = rows.iter().filter(|r| r.generalized_gaussian).map(|r| r.excess.abs()).fold(0.0, f64::max);
    report.check(Check::at_least("corpus min(E - q)", min_excess, -cfg.ladder.chern));
    report.check(Check::below("corpus generalized Gaussians |E - q|", gauss_excess, cfg.ladder.chern));
    report.insert("corpus", rows);
    Ok(())
}

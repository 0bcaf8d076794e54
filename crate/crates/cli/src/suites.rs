use std::cell::OnceCell;
use std::f64::consts::PI;

use klsrp_core::criterion::{finite_mode_sum, integral_id, lro_verdict, IntegralResult};
use klsrp_core::rotor::{LatticeSpec, PerturbField, RotorModel};
use klsrp_core::rp::{curvature_check_on, default_step, energy_tolerance, ground_energy, plane_wave_probe_on, rp_inequalities};
use klsrp_core::schatten::{
    kls_gap, polar_decompose, random_matrix, truncation_ladder, BoundedRule, ComplexDense, MatrixKind,
    TruncatedOperator,
};
use klsrp_core::spectra::{chi_agreement, momentum_scan, sum_rule, symmetry_report, MomentumReport, RotorSystem};
use klsrp_core::vectorize::{expectation_identity, lemma_identities, rp_expectation_bound, PairingU};
use klsrp_core::{tol, Complex64, Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{ModelConfig, RunConfig, Suite};
use crate::report::{CheckRecord, Status, Table};

/// Stable check indices entering the derived seeds.
mod stream {
    pub const KLS_RANDOM: u64 = 1;
    pub const KLS_EQUALITY: u64 = 2;
    pub const KLS_POLAR: u64 = 3;
    pub const VECTORIZE: u64 = 10;
    pub const RP_FIELDS: u64 = 20;
    pub const RP_MIRROR: u64 = 21;
    pub const RP_SHIFT: u64 = 22;
    pub const RP_CURVATURE: u64 = 23;
}

/// `master + (check << 40) + trial`.
pub fn derived_seed(master: u64, check: u64, trial: u64) -> u64 {
    master.wrapping_add(check << 40).wrapping_add(trial)
}

fn rng_for(master: u64, check: u64, trial: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derived_seed(master, check, trial as u64))
}

/// Checks of one suite and the tables it produced.
#[derive(Debug, Default)]
pub struct SuiteOutput {
    pub checks: Vec<CheckRecord>,
    pub momentum: Option<Table>,
    pub ladder: Option<Table>,
}

/// Largest Hilbert space the criterion suite builds on its own initiative.
const FLOOR_DIM_LIMIT: f64 = 1.0e5;

pub struct Context<'a> {
    pub cfg: &'a RunConfig,
    system: OnceCell<RotorSystem>,
}

impl<'a> Context<'a> {
    pub fn new(cfg: &'a RunConfig) -> Self {
        Self {
            cfg,
            system: OnceCell::new(),
        }
    }

    pub fn model(&self) -> Result<RotorModel> {
        let m = &self.cfg.model;
        RotorModel::new(m.inertia, m.coupling, m.cutoff)
    }

    pub fn lattice(&self) -> Result<LatticeSpec> {
        LatticeSpec::build(self.cfg.model.dim, self.cfg.model.half_edge())
    }

    pub fn system(&self) -> Result<&RotorSystem> {
        if let Some(s) = self.system.get() {
            return Ok(s);
        }
        let s = RotorSystem::solve(self.model()?, self.lattice()?)?;
        Ok(self.system.get_or_init(|| s))
    }

    fn model_inputs(&self) -> Value {
        serde_json::to_value(&self.cfg.model).unwrap_or(Value::Null)
    }

    pub fn run(&self, suite: Suite) -> Result<SuiteOutput> {
        match suite {
            Suite::Kls => self.kls(),
            Suite::Vectorize => self.vectorize(),
            Suite::Ladder => self.ladder(),
            Suite::Rotor => self.rotor(),
            Suite::Rp => self.rp(),
            Suite::Criterion => self.criterion(),
        }
    }

    fn kls(&self) -> Result<SuiteOutput> {
        let r = &self.cfg.random;
        let tol = self.cfg.tolerances.inequality;
        let inputs = json!({ "trials": r.trials, "max_dim": r.max_dim, "seed": r.seed });
        let slacks = (0..r.trials)
            .into_par_iter()
            .map(|i| {
                let mut rng = rng_for(r.seed, stream::KLS_RANDOM, i);
                let n = rng.random_range(1..=r.max_dim);
                let m = if i % 2 == 0 { n } else { rng.random_range(1..=r.max_dim) };
                let kind = KINDS[rng.random_range(0..4)];
                let kind = if n != m && matches!(kind, MatrixKind::Hermitian | MatrixKind::Psd) {
                    MatrixKind::Ginibre
                } else {
                    kind
                };
                let c = random_matrix(kind, n, m, rng.random())?;
                let a = random_square(&mut rng, m)?;
                let b = random_square(&mut rng, n)?;
                Ok(kls_gap(&c, &a, &b)?.normalized_slack())
            })
            .collect::<Result<Vec<f64>>>()?;
        let (worst_trial, worst) = argmin(&slacks);
        let violations = slacks.iter().filter(|&&s| s < -tol).count();
        let random = CheckRecord::new("kls", "random_triples", inputs.clone())
            .value("trials", r.trials)
            .value("worst_trial", worst_trial)
            .value("violations", violations)
            .value("mean_normalized_slack", slacks.iter().sum::<f64>() / slacks.len() as f64)
            .slack("min_normalized", worst)
            .assert_slacks(tol, format!("min normalized slack {worst:.3e} over {} triples", r.trials));

        let cases = r.trials.min(50);
        let mut defect: f64 = 0.0;
        for i in 0..cases {
            let mut rng = rng_for(r.seed, stream::KLS_EQUALITY, i);
            let n = rng.random_range(1..=r.max_dim);
            let u = random_matrix(MatrixKind::PartialIsometry, n, n, rng.random())?;
            let a = random_matrix(MatrixKind::Ginibre, n, n, rng.random())?;
            let b = &(&u * &a) * &u.adjoint();
            defect = defect.max(kls_gap(&u, &a, &b)?.normalized_slack().abs());
            let sc = |z: Complex64| ComplexDense::from_row_major(1, 1, vec![z]);
            let mut phase = || Complex64::from_polar(rng.random_range(0.1..3.0), rng.random_range(-PI..PI));
            let (z, x, y) = (phase(), phase(), phase());
            let y = Complex64::from_polar(x.norm(), y.arg());
            defect = defect.max(kls_gap(&sc(z)?, &sc(x)?, &sc(y)?)?.normalized_slack().abs());
        }
        let equality = CheckRecord::new("kls", "equality_cases", inputs.clone())
            .value("cases", cases)
            .value("max_defect", defect)
            .tolerance(tol)
            .assert(defect <= tol, format!("max |slack| {defect:.1e} on {cases} equality cases"));

        let count = r.trials.min(200);
        let rec = (0..count)
            .into_par_iter()
            .map(|i| {
                let mut rng = rng_for(r.seed, stream::KLS_POLAR, i);
                let (n, m) = (rng.random_range(1..=r.max_dim), rng.random_range(1..=r.max_dim));
                let c = random_matrix(MatrixKind::Ginibre, n, m, rng.random())?;
                let p = polar_decompose(&c)?;
                let scale = 1.0 + c.frobenius();
                let sym = &(&p.sqrt_mod_r * &p.u) * &p.sqrt_mod_l;
                Ok([
                    (&p.u * &p.mod_l).max_abs_diff(&c),
                    (&p.mod_r * &p.u).max_abs_diff(&c),
                    sym.max_abs_diff(&c),
                ]
                .into_iter()
                .fold(0.0, f64::max)
                    / scale)
            })
            .collect::<Result<Vec<f64>>>()?;
        let worst_rec = rec.iter().copied().fold(0.0, f64::max);
        let polar = CheckRecord::new("kls", "polar_reconstruction", inputs)
            .value("matrices", count)
            .value("max_relative_error", worst_rec)
            .tolerance(tol::REC)
            .assert(worst_rec <= tol::REC, format!("max relative error {worst_rec:.1e}"));
        Ok(SuiteOutput {
            checks: vec![random, equality, polar],
            ..Default::default()
        })
    }

    fn vectorize(&self) -> Result<SuiteOutput> {
        let r = &self.cfg.random;
        let (id_tol, ineq_tol) = (self.cfg.tolerances.identity, self.cfg.tolerances.inequality);
        let side = r.max_dim.min(8);
        let inputs = json!({ "trials": r.trials, "max_side": side, "seed": r.seed });
        let per_trial = (0..r.trials)
            .into_par_iter()
            .map(|i| {
                let mut rng = rng_for(r.seed, stream::VECTORIZE, i);
                let n = rng.random_range(1..=side);
                let c = random_matrix(MatrixKind::Ginibre, n, n, rng.random())?;
                let d = random_matrix(MatrixKind::Ginibre, n, n, rng.random())?;
                let a = random_square(&mut rng, n)?;
                let b = random_square(&mut rng, n)?;
                let u = PairingU::new(random_matrix(MatrixKind::PartialIsometry, n, n, rng.random())?)?;
                let td: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
                let sd: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
                let ids: Vec<(&'static str, f64)> = lemma_identities(&c, &d, &a, &b, &u, &td, &sd)?
                    .into_iter()
                    .map(|chk| (chk.name, chk.relative_defect()))
                    .collect();
                let m = rng.random_range(1..=side);
                let cr = random_matrix(MatrixKind::Ginibre, m, n, rng.random())?;
                let br = random_square(&mut rng, m)?;
                let e = expectation_identity(&cr, &a, &br)?;
                let exp_defect = e.difference() / (1.0 + e.trace_form.norm());
                let ineq = rp_expectation_bound(&c, &a, &b, &u)?.normalized_slack();
                Ok((ids, exp_defect, ineq))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut by_name = std::collections::BTreeMap::<&str, f64>::new();
        for (ids, _, _) in &per_trial {
            for &(name, d) in ids {
                let e = by_name.entry(name).or_insert(0.0);
                *e = e.max(d);
            }
        }
        let worst_id = by_name.values().copied().fold(0.0, f64::max);
        let worst_exp = per_trial.iter().map(|t| t.1).fold(0.0, f64::max);
        let (_, worst_ineq) = argmin(&per_trial.iter().map(|t| t.2).collect::<Vec<_>>());
        let lemmas = CheckRecord::new("vectorize", "lemma_identities", inputs.clone())
            .value("max_relative_defect", &by_name)
            .tolerance(id_tol)
            .assert(worst_id <= id_tol, format!("max relative defect {worst_id:.1e} over {} identities", by_name.len()));
        let expectation = CheckRecord::new("vectorize", "expectation_identity", inputs.clone())
            .value("max_relative_defect", worst_exp)
            .tolerance(id_tol)
            .assert(worst_exp <= id_tol, format!("max relative defect {worst_exp:.1e}"));
        let inequality = CheckRecord::new("vectorize", "expectation_inequality", inputs)
            .slack("min_normalized", worst_ineq)
            .assert_slacks(ineq_tol, format!("min normalized slack {worst_ineq:.3e}"));
        Ok(SuiteOutput {
            checks: vec![lemmas, expectation, inequality],
            ..Default::default()
        })
    }

    fn ladder(&self) -> Result<SuiteOutput> {
        let sizes = &self.cfg.ladder.sizes;
        let tol = self.cfg.tolerances.inequality;
        let ops = [
            TruncatedOperator::rank_one_harmonic(),
            TruncatedOperator::hilbert_square(),
            TruncatedOperator::geometric_phase(0.8, 0.4)?,
        ];
        let rules = [BoundedRule::identity(), BoundedRule::shift(), BoundedRule::phase_diagonal(0.7)];
        let mut table = Table::new(
            [
                "operator",
                "a",
                "b",
                "size",
                "lhs",
                "rhs",
                "slack",
                "hs_norm",
                "tail_bound",
                "lhs_increment",
                "lhs_increment_bound",
                "rhs_increment",
                "rhs_increment_bound",
            ]
            .map(String::from)
            .to_vec(),
        );
        let opt = |o: Option<f64>| o.map(|x| x.to_string()).unwrap_or_default();
        let mut checks = Vec::new();
        for op in &ops {
            let mut worst = f64::INFINITY;
            let mut bounded = true;
            let mut rungs = 0;
            for a in &rules {
                for b in &rules {
                    for r in truncation_ladder(op, a, b, sizes)? {
                        rungs += 1;
                        worst = worst.min(r.report.normalized_slack());
                        bounded &= r.increments_within_bounds();
                        table.rows.push(vec![
                            op.name.clone(),
                            a.name.clone(),
                            b.name.clone(),
                            r.size.to_string(),
                            r.report.lhs.to_string(),
                            r.report.rhs.to_string(),
                            r.report.slack.to_string(),
                            r.hs_norm.to_string(),
                            r.tail_bound.to_string(),
                            opt(r.lhs_increment),
                            opt(r.lhs_increment_bound),
                            opt(r.rhs_increment),
                            opt(r.rhs_increment_bound),
                        ]);
                    }
                }
            }
            let rec = CheckRecord::new("ladder", op.name.clone(), json!({ "sizes": sizes }))
                .value("rungs", rungs)
                .value("increments_within_bounds", bounded)
                .slack("min_normalized", worst)
                .tolerance(tol);
            let ok = worst >= -tol && bounded;
            checks.push(rec.assert(
                ok,
                format!("{rungs} rungs, min slack {worst:.3e}, increments bounded: {bounded}"),
            ));
        }
        Ok(SuiteOutput {
            checks,
            ladder: Some(table),
            ..Default::default()
        })
    }

    fn rotor(&self) -> Result<SuiteOutput> {
        let sys = self.system()?;
        let t = &self.cfg.tolerances;
        let inputs = self.model_inputs();
        let g = &sys.ground;
        let degenerate = sys.is_degenerate();
        let mut checks = vec![CheckRecord::new("rotor", "ground_state", inputs.clone())
            .value("hilbert_dim", sys.hamiltonian.dim)
            .value("energy", g.energy)
            .value("gap", g.gap)
            .value("residual", g.residual)
            .value("solver", format!("{:?}", g.solver).to_lowercase())
            .value("iterations", g.iterations)
            .assert(
                !degenerate,
                format!("E0 = {:.10}, gap {:.4e}, dim {}", g.energy, g.gap, sys.hamiltonian.dim),
            )];

        let sr = sum_rule(sys)?;
        let sr_defect = (sr.sum_g - sr.rhs_truncated).abs();
        let parseval_defect = (sr.sum_g - sr.parseval).abs();
        checks.push(
            CheckRecord::new("rotor", "sum_rule", inputs.clone())
                .value("sum_g", sr.sum_g)
                .value("sum_symmetrized", sr.sum_symmetrized)
                .value("parseval", sr.parseval)
                .value("rhs_truncated", sr.rhs_truncated)
                .value("defect", sr_defect)
                .value("parseval_defect", parseval_defect)
                .tolerance(t.observable)
                .assert(
                    sr_defect <= t.observable && parseval_defect <= t.observable,
                    format!("sum g = {:.10}, defect {sr_defect:.1e}", sr.sum_g),
                ),
        );
        checks.push(
            CheckRecord::new("rotor", "sum_rule_deficit", inputs.clone())
                .value("ideal_rhs", sr.ideal_rhs)
                .value("deficit", sr.deficit)
                .flag(format!("truncation deficit {:.6} against {}", sr.deficit, sr.ideal_rhs)),
        );
        let sym = symmetry_report(sys)?;
        checks.push(
            CheckRecord::new("rotor", "symmetry", inputs.clone())
                .value("max_mean", sym.max_mean)
                .value("max_g_difference", sym.max_g_difference)
                .value("gap", sym.gap)
                .tolerance(t.observable)
                .assert(
                    !sym.degenerate && sym.holds(t.observable),
                    format!("max |<s_x>| {:.1e}, max |g - g_y| {:.1e}", sym.max_mean, sym.max_g_difference),
                ),
        );

        let reports = momentum_scan(sys)?;
        let quarter = 0.25 / sys.model.inertia;
        let mut excess = f64::NEG_INFINITY;
        let mut mixed = f64::INFINITY;
        for r in &reports {
            excess = excess.max(r.dcomm_truncated - quarter);
            mixed = mixed.min(r.slacks.schwarz);
            checks.push(momentum_check(r, &inputs, t.observable, t.chi_agreement));
        }
        checks.push(
            CheckRecord::new("rotor", "schwarz_untruncated", inputs.clone())
                .value("min_slack", mixed)
                .flag(format!("min chi D - g^2 with the untruncated D = 1/(4I): {mixed:.3e}")),
        );
        checks.push(
            CheckRecord::new("rotor", "dcomm_truncated_excess", inputs)
                .value("max_excess", excess)
                .flag(format!("max truncated double commutator minus 1/(4I): {excess:.3e}")),
        );
        let mut table = Table::new(MomentumReport::csv_header(sys.lattice.dim));
        table.rows = reports.iter().map(MomentumReport::csv_record).collect();
        Ok(SuiteOutput {
            checks,
            momentum: Some(table),
            ..Default::default()
        })
    }

    fn rp(&self) -> Result<SuiteOutput> {
        let sys = self.system()?;
        let r = &self.cfg.random;
        let t = &self.cfg.tolerances;
        let (model, lat) = (&sys.model, &sys.lattice);
        let sites = lat.num_sites();
        let mut base = self.model_inputs();
        base["seed"] = json!(r.seed);
        let mut checks = Vec::new();

        let reports = (0..r.rp_fields)
            .into_par_iter()
            .map(|i| rp_inequalities(model, lat, &random_field(&mut rng_for(r.seed, stream::RP_FIELDS, i), sites)))
            .collect::<Result<Vec<_>>>()?;
        let mono = reports.iter().map(|x| x.monotone_slack).fold(f64::INFINITY, f64::min);
        let bond = reports.iter().map(|x| x.bond_slack).fold(f64::INFINITY, f64::min);
        let mut inputs = base.clone();
        inputs["fields"] = json!(r.rp_fields);
        checks.push(
            CheckRecord::new("rp", "energy_inequalities", inputs)
                .value("fields", r.rp_fields)
                .value("max_tolerance", reports.iter().map(|x| x.tolerance).fold(0.0, f64::max))
                .slack("monotone", mono)
                .slack("bond", bond)
                .assert(
                    reports.iter().all(|x| x.holds()),
                    format!("min E0(b) - E0(0) = {mono:.3e}, min bond slack {bond:.3e}"),
                ),
        );

        let mut rng = rng_for(r.seed, stream::RP_MIRROR, 0);
        let mut vals = random_field(&mut rng, sites).values;
        for s in 0..sites {
            if lat.in_left_half(s)? {
                vals[lat.reflect(s)?] = vals[s];
            }
        }
        let mirror = rp_inequalities(model, lat, &PerturbField::new(vals)?)?;
        checks.push(
            CheckRecord::new("rp", "mirror_symmetric", base.clone())
                .value("bond_slack", mirror.bond_slack)
                .tolerance(mirror.tolerance)
                .assert(
                    mirror.bond_slack.abs() <= mirror.tolerance,
                    format!("bond slack {:.1e} for a reflection-symmetric field", mirror.bond_slack),
                ),
        );

        let mut rng = rng_for(r.seed, stream::RP_SHIFT, 0);
        let b = random_field(&mut rng, sites);
        let shift = Complex64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let shifted = PerturbField::new(b.values.iter().map(|z| z + shift).collect())?;
        let (e1, e2) = (ground_energy(model, lat, &b)?, ground_energy(model, lat, &shifted)?);
        let tol_e = energy_tolerance(e1);
        checks.push(
            CheckRecord::new("rp", "constant_shift", base.clone())
                .value("energy", e1)
                .value("difference", (e1 - e2).abs())
                .tolerance(tol_e)
                .assert((e1 - e2).abs() <= tol_e, format!("|E0(b + c) - E0(b)| = {:.1e}", (e1 - e2).abs())),
        );

        let mut worst_match: f64 = 0.0;
        let mut worst_rich: f64 = 0.0;
        let mut min_fd = f64::INFINITY;
        for i in 0..r.curvature_fields {
            let b = random_field(&mut rng_for(r.seed, stream::RP_CURVATURE, i), sites);
            let c = curvature_check_on(sys, &b, default_step(&b))?;
            worst_match = worst_match.max(c.match_defect());
            worst_rich = worst_rich.max(c.richardson_defect());
            min_fd = min_fd.min(c.fd_second);
        }
        let mut inputs = base.clone();
        inputs["fields"] = json!(r.curvature_fields);
        checks.push(
            CheckRecord::new("rp", "curvature", inputs)
                .value("max_match_defect", worst_match)
                .value("max_richardson_defect", worst_rich)
                .value("min_second_derivative", min_fd)
                .tolerance(t.curvature)
                .assert(
                    worst_match <= t.curvature && min_fd >= -tol::CURV,
                    format!("max relative defect {worst_match:.1e}, min second derivative {min_fd:.4}"),
                ),
        );

        if model.coupling == 0.0 {
            checks.push(CheckRecord::new("rp", "plane_wave", base).flag("bounds are vacuous at zero coupling"));
        } else {
            let mut sharper = f64::NEG_INFINITY;
            for k in lat.momenta.iter().filter(|k| k.iter().any(|&x| x != 0.0)) {
                let p = plane_wave_probe_on(sys, k)?;
                sharper = sharper.max(p.chi - p.chi_curvature_bound);
                let c_defect = (p.c_of_b - p.c_expected).abs();
                let mut inputs = base.clone();
                inputs["k"] = json!(k);
                let rec = CheckRecord::new("rp", format!("plane_wave[k={}]", fmt_k(k)), inputs)
                    .value("chi", p.chi)
                    .value("g", p.g)
                    .value("chi_bound", p.chi_bound)
                    .value("g_bound", p.g_bound)
                    .value("c_of_b", p.c_of_b)
                    .value("c_defect", c_defect)
                    .value("parallelogram_defect", p.parallelogram_defect)
                    .value("chi_curvature_bound", p.chi_curvature_bound)
                    .value("trivial", p.trivial)
                    .slack("chi", p.chi_slack)
                    .slack("g", p.g_slack);
                let ok = p.chi_slack >= -t.observable
                    && p.g_slack >= -t.observable
                    && c_defect <= tol::ID * (1.0 + p.c_expected);
                checks.push(rec.tolerance(t.observable).assert(
                    ok,
                    format!("chi {:.6} <= {:.6}, g {:.6} <= {:.6}", p.chi, p.chi_bound, p.g, p.g_bound),
                ));
            }
            checks.push(
                CheckRecord::new("rp", "curvature_bound", base)
                    .value("max_excess", sharper)
                    .flag(format!("max chi - 1/(2 J E(k)) over nonzero k: {sharper:.3e}")),
            );
        }
        Ok(SuiteOutput {
            checks,
            ..Default::default()
        })
    }

    fn criterion(&self) -> Result<SuiteOutput> {
        let m = &self.cfg.model;
        let tol = self.cfg.tolerances.integral;
        let mut checks = Vec::new();
        let res = integral_id(m.dim, tol)?;
        checks.push(integral_check(&res, tol));
        let inputs = json!({ "dim": m.dim, "tol": tol });
        if let Some(reference) = reference_value(m.dim) {
            let dev = (res.value - reference).abs();
            let allowed = 5e-7 + tol;
            checks.push(
                CheckRecord::new("criterion", "reference_value", inputs.clone())
                    .value("value", res.value)
                    .value("reference", reference)
                    .value("deviation", dev)
                    .tolerance(allowed)
                    .assert(dev <= allowed, format!("|I_{} - {reference}| = {dev:.1e}", m.dim)),
            );
        }

        let mut sums = Vec::new();
        let mut n = 4;
        while n <= 32 && ((2 * n) as f64).powi(m.dim as i32) <= (1u64 << 21) as f64 {
            sums.push((n, finite_mode_sum(m.dim, n)?));
            n *= 2;
        }
        let mut trend = CheckRecord::new("criterion", "mode_sum_trend", json!({ "dim": m.dim }))
            .value("half_edges", sums.iter().map(|s| s.0).collect::<Vec<_>>())
            .value("mode_sums", sums.iter().map(|s| s.1).collect::<Vec<_>>());
        if !res.diverged {
            trend = trend.value("distance", sums.iter().map(|s| (s.1 - res.value).abs()).collect::<Vec<_>>());
        }
        checks.push(trend.flag(format!("{} finite mode sums up to N = {}", sums.len(), sums.last().map_or(0, |s| s.0))));

        if m.coupling == 0.0 {
            checks.push(
                CheckRecord::new("criterion", "verdict", self.model_inputs()).flag("criterion needs J > 0"),
            );
            return Ok(SuiteOutput {
                checks,
                ..Default::default()
            });
        }
        let v = lro_verdict(m.inertia, m.coupling, m.dim, None)?;
        checks.push(
            CheckRecord::new("criterion", "verdict", self.model_inputs())
                .value("holds", v.holds)
                .value("sqrt_ij", v.sqrt_ij)
                .value("mode_sum", v.mode_sum)
                .value("lower_bound_c", v.lower_bound_c)
                .flag(format!(
                    "sqrt(IJ) = {:.6} vs I_{} = {:.6}: order {}",
                    v.sqrt_ij,
                    m.dim,
                    v.mode_sum,
                    if v.holds { "guaranteed" } else { "not guaranteed" }
                )),
        );
        let fv = lro_verdict(m.inertia, m.coupling, m.dim, Some(m.half_edge()))?;
        checks.push(
            CheckRecord::new("criterion", "finite_verdict", self.model_inputs())
                .value("holds", fv.holds)
                .value("mode_sum", fv.mode_sum)
                .value("lower_bound_c", fv.lower_bound_c)
                .flag(format!("S(N = {}) = {:.6}, C = {:.6}", m.half_edge(), fv.mode_sum, fv.lower_bound_c)),
        );
        checks.push(self.zero_mode_floor(fv.mode_sum, fv.sqrt_ij)?);
        Ok(SuiteOutput {
            checks,
            ..Default::default()
        })
    }

    /// `g0/|Λ| >= 1/2 - S/(2 sqrt(IJ)) - deficit/|Λ|` on the finite lattice.
    fn zero_mode_floor(&self, mode_sum: f64, sqrt_ij: f64) -> Result<CheckRecord> {
        let m = &self.cfg.model;
        let sites = (m.edge as f64).powi(m.dim as i32);
        let hilbert = ((2 * m.cutoff + 1) as f64).powf(sites);
        let rec = CheckRecord::new("criterion", "zero_mode_floor", self.model_inputs());
        if self.system.get().is_none() && hilbert > FLOOR_DIM_LIMIT {
            return Ok(rec.flag(format!("skipped: Hilbert dimension {hilbert:.3e} is too large")));
        }
        let sys = self.system()?;
        let sr = sum_rule(sys)?;
        let g0 = momentum_scan(sys)?
            .into_iter()
            .find(MomentumReport::is_zero_mode)
            .map(|r| r.g)
            .ok_or(Error::EmptyInput("no zero mode"))?;
        let sites = sys.lattice.num_sites() as f64;
        let floor = 0.5 - mode_sum / (2.0 * sqrt_ij) - sr.deficit / sites;
        let tol = self.cfg.tolerances.observable;
        Ok(rec
            .value("g0_per_site", g0 / sites)
            .value("floor", floor)
            .slack("floor", g0 / sites - floor)
            .assert_slacks(tol, format!("g0/|L| = {:.6} >= {floor:.6}", g0 / sites)))
    }
}

const KINDS: [MatrixKind; 4] = [
    MatrixKind::Ginibre,
    MatrixKind::Hermitian,
    MatrixKind::Psd,
    MatrixKind::PartialIsometry,
];

fn random_square(rng: &mut ChaCha8Rng, n: usize) -> Result<ComplexDense> {
    let kind = KINDS[rng.random_range(0..4)];
    random_matrix(kind, n, n, rng.random())
}

fn random_field(rng: &mut ChaCha8Rng, n: usize) -> PerturbField {
    let values = (0..n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    PerturbField::new(values).expect("finite samples")
}

/// First index of the minimum.
fn argmin(v: &[f64]) -> (usize, f64) {
    v.iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, x)| if x < acc.1 { (i, x) } else { acc })
}

fn fmt_k(k: &[f64]) -> String {
    k.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(",")
}

fn reference_value(dim: usize) -> Option<f64> {
    match dim {
        2 => Some(0.909173),
        3 => Some(0.643954),
        _ => None,
    }
}

fn momentum_check(r: &MomentumReport, inputs: &Value, tol: f64, chi_tol: f64) -> CheckRecord {
    let mut inputs = inputs.clone();
    inputs["k"] = json!(r.k);
    let mut rec = CheckRecord::new("rotor", format!("momentum[k={}]", fmt_k(&r.k)), inputs)
        .value("g", r.g)
        .value("g_symmetrized", r.g_symmetrized)
        .value("chi", r.chi)
        .value("chi_spectral", r.chi_spectral)
        .value("dcomm", r.dcomm)
        .value("dcomm_truncated", r.dcomm_truncated)
        .value("dcomm_reduction", r.dcomm_reduction)
        .value("solve_residual", r.solve_residual)
        .value("schwarz_untruncated_slack", r.slacks.schwarz)
        .slack("schwarz_truncated", r.slacks.schwarz_truncated)
        .slack("dcomm", r.slacks.dcomm);
    if r.g_bound.is_finite() {
        rec = rec.value("g_bound", r.g_bound).slack("g_bound", r.slacks.g_bound);
    }
    if r.chi_bound.is_finite() {
        rec = rec.value("chi_bound", r.chi_bound).slack("chi_bound", r.slacks.chi_bound);
    }
    let agree = chi_agreement(r);
    if let Some(a) = agree {
        rec = rec.value("chi_agreement", a);
    }
    let reduction = (r.dcomm - r.dcomm_reduction).abs();
    let slacks_ok = rec.slacks.values().all(|&s| s >= -tol);
    let ok = slacks_ok && reduction <= tol && agree.is_none_or(|a| a <= chi_tol);
    rec.tolerance(tol).assert(
        ok,
        format!("g = {:.6}, chi = {:.6}, D = {:.6}", r.g, r.chi, r.dcomm),
    )
}

pub fn integral_check(res: &IntegralResult, tol: f64) -> CheckRecord {
    let rec = CheckRecord::new("criterion", "integral", json!({ "dim": res.dim, "tol": tol }))
        .value("value", res.value)
        .value("error_estimate", res.error_estimate)
        .value("diverged", res.diverged)
        .value("refinements", res.refinement_trace.len());
    if res.diverged {
        rec.flag(format!(
            "I_{} diverges; partial value {:.6} at {} nodes per axis",
            res.dim,
            res.value,
            res.refinement_trace.last().map_or(0, |s| s.nodes_per_axis)
        ))
    } else {
        rec.tolerance(tol).assert(
            res.error_estimate <= tol,
            format!("I_{} = {:.9} (error estimate {:.1e})", res.dim, res.value, res.error_estimate),
        )
    }
}

pub fn integral_table(res: &IntegralResult) -> Table {
    let mut t = Table::new(["nodes_per_axis", "raw", "extrapolated"].map(String::from).to_vec());
    t.rows = res
        .refinement_trace
        .iter()
        .map(|s| vec![s.nodes_per_axis.to_string(), s.raw.to_string(), s.extrapolated.to_string()])
        .collect();
    t
}

/// One sweep point: the rotor suite on a modified model.
pub fn sweep_point(cfg: &RunConfig, model: ModelConfig) -> Result<(Vec<String>, CheckRecord)> {
    let mut local = cfg.clone();
    local.model = model;
    let cx = Context::new(&local);
    let out = cx.rotor()?;
    let sys = cx.system()?;
    let sr = sum_rule(sys)?;
    let min_slack = |key: &str| {
        out.checks
            .iter()
            .filter_map(|c| c.slacks.get(key).copied())
            .fold(f64::INFINITY, f64::min)
    };
    let failing: Vec<&str> = out
        .checks
        .iter()
        .filter(|c| c.status == Status::Fail)
        .map(|c| c.name.as_str())
        .collect();
    let untruncated = out
        .checks
        .iter()
        .find(|c| c.name == "schwarz_untruncated")
        .and_then(|c| c.values.get("min_slack"))
        .and_then(|v| v.as_f64())
        .unwrap_or(f64::NAN);
    let param = cfg.sweep.param;
    let value = crate::config::sweep_value(&local.model, param);
    let row = vec![
        value.to_string(),
        sys.hamiltonian.dim.to_string(),
        sys.ground.energy.to_string(),
        sys.ground.gap.to_string(),
        sr.deficit.to_string(),
        min_slack("schwarz_truncated").to_string(),
        untruncated.to_string(),
        min_slack("g_bound").to_string(),
        min_slack("chi_bound").to_string(),
        (failing.is_empty()).to_string(),
    ];
    let name = format!("point[{}={value}]", param.name());
    let rec = CheckRecord::new("sweep", name, serde_json::to_value(&local.model).unwrap_or(Value::Null))
        .value("hilbert_dim", sys.hamiltonian.dim)
        .value("energy", sys.ground.energy)
        .value("gap", sys.ground.gap)
        .value("deficit", sr.deficit)
        .value("failing", &failing)
        .value("min_schwarz_untruncated_slack", untruncated)
        .slack("schwarz_truncated", min_slack("schwarz_truncated"))
        .slack("g_bound", min_slack("g_bound"))
        .slack("chi_bound", min_slack("chi_bound"))
        .assert(
            failing.is_empty(),
            format!("E0 = {:.8}, deficit {:.3e}, {} failing checks", sys.ground.energy, sr.deficit, failing.len()),
        );
    Ok((row, rec))
}

pub fn sweep_header() -> Vec<String> {
    [
        "value",
        "hilbert_dim",
        "energy",
        "gap",
        "deficit",
        "min_slack_schwarz_truncated",
        "min_slack_schwarz_untruncated",
        "min_slack_g_bound",
        "min_slack_chi_bound",
        "all_pass",
    ]
    .map(String::from)
    .to_vec()
}

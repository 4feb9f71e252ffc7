use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use lgcalab_core::dynamics::{self, CollisionModel, CollisionTable, RandomPolicy};
use lgcalab_core::eca::{self, EcaBoundary, EcaRule};
use lgcalab_core::linalg::{self, LinalgError};
use lgcalab_core::observables::{self, macro_fields, measure_viscosity, predicted_viscosity, OccupationAccumulator};
use lgcalab_core::pca::{analyze_rulespace, ConstantColumns, PcaError};
use lgcalab_core::rng::{self, Stream};
use lgcalab_core::wsccs::{self, WsccsError};
use lgcalab_core::{FhpConstants64, ObservablesError, Topology, Units64};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use crate::args::*;
use crate::formats::{self, float, Csv, RunManifest};
use crate::CliError;

/// Outputs of one run, written relative to `--out-dir`.
struct Run {
    seed: u64,
    out_dir: PathBuf,
    started: DateTime<Utc>,
    outputs: Vec<String>,
}

impl Run {
    fn path(&self, name: &Path) -> PathBuf {
        self.out_dir.join(name)
    }

    fn write(&mut self, name: impl AsRef<Path>, bytes: &[u8]) -> Result<(), CliError> {
        let name = name.as_ref();
        formats::write_file(&self.path(name), bytes)?;
        self.outputs.push(name.display().to_string());
        Ok(())
    }

    fn csv(&mut self, name: impl AsRef<Path>, csv: &Csv) -> Result<(), CliError> {
        self.write(name, csv.as_str().as_bytes())
    }

    fn finish(self, subcommand: &str, params: &impl Serialize) -> Result<(), CliError> {
        let manifest = RunManifest::new(subcommand, params, self.seed, self.started, self.outputs);
        let name = format!("{}.manifest.json", subcommand.replace(' ', "-"));
        formats::write_file(&self.out_dir.join(name), manifest.to_json().as_bytes())
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn dispatch(cli: &crate::Cli) -> Result<(), CliError> {
    let run = Run { seed: cli.seed, out_dir: cli.out_dir.clone(), started: Utc::now(), outputs: Vec::new() };
    match &cli.command {
        Command::Lgca(LgcaCommand::Run(a)) if a.measure_viscosity => lgca_viscosity(run, a),
        Command::Lgca(LgcaCommand::Run(a)) => lgca_run(run, a),
        Command::Eca(EcaCommand::Run(a)) => eca_run(run, a),
        Command::Eca(EcaCommand::Table(a)) => eca_table(run, a),
        Command::Pca(PcaCommand::Rulespace(a)) => pca_rulespace(run, a),
        Command::Pca(PcaCommand::Eig(a)) => pca_eig(run, a),
        Command::Wsccs(WsccsCommand::Colony(a)) => wsccs_colony(run, a),
    }
}

fn topology(a: &LgcaRun) -> Result<Topology, CliError> {
    match a.model {
        Model::Hpp => Topology::square(a.width, a.height),
        Model::Fhp => Topology::hex(a.width, a.height),
    }
    .map_err(|e| usage(format!("--width/--height: {e}")))
}

fn lgca_run(mut run: Run, a: &LgcaRun) -> Result<(), CliError> {
    let topo = topology(a)?;
    let z = topo.z() as f64;
    if !(0.0..=z).contains(&a.density) {
        return Err(usage(format!("--density must lie in [0, {z}] for {:?}, got {}", a.model, a.density)));
    }
    if a.block == 0 || !a.width.is_multiple_of(a.block) || !a.height.is_multiple_of(a.block) {
        return Err(usage(format!("--block {} must divide --width {} and --height {}", a.block, a.width, a.height)));
    }
    if a.window == 0 || a.window > a.steps + 1 {
        return Err(usage(format!("--window must lie in [1, steps + 1 = {}], got {}", a.steps + 1, a.window)));
    }
    if a.snapshot_every == Some(0) {
        return Err(usage("--snapshot-every must be at least 1"));
    }
    let model = match a.model {
        Model::Hpp => CollisionModel::Hpp,
        Model::Fhp => CollisionModel::Fhp,
    };
    let table = CollisionTable::build(model).map_err(|e| CliError::Numerical(e.to_string()))?;
    let policy = RandomPolicy::new(run.seed);
    let kind = topo.kind();

    let mut state = dynamics::random_state(topo, a.density, run.seed);
    let (mass0, momentum0) = (state.mass(), state.momentum());
    let mut invariants = Csv::new(["step", "mass", "px", "py"]);
    let mut acc = OccupationAccumulator::new(topo, a.block).map_err(|e| usage(e.to_string()))?;
    let average_from = a.steps + 1 - a.window;
    let mut conserved = true;
    loop {
        let t = state.time();
        let p = state.momentum().to_physical::<f64>(kind);
        invariants.row([t.to_string(), state.mass().to_string(), float(p[0]), float(p[1])]);
        conserved &= state.mass() == mass0 && state.momentum() == momentum0;
        if t >= average_from {
            acc.push(&state).map_err(|e| CliError::Numerical(e.to_string()))?;
        }
        if let Some(k) = a.snapshot_every {
            if t.is_multiple_of(k) {
                run.write(format!("lgca_snapshot_{t:06}.pgm"), &formats::pgm(&state))?;
            }
        }
        if t == a.steps {
            break;
        }
        state = dynamics::step(&state, &table, &policy).map_err(|e| CliError::Numerical(e.to_string()))?;
    }

    run.write("lgca_final.pgm", &formats::pgm(&state))?;
    if a.bitmask_csv {
        run.csv("lgca_final_bitmask.csv", &formats::bitmask_csv(&state))?;
    }
    run.csv("lgca_invariants.csv", &invariants)?;
    let occ = acc.finish::<f64>().map_err(|e| CliError::Numerical(e.to_string()))?;
    run.csv("lgca_macro.csv", &macro_csv(&occ))?;

    println!(
        "{} {}x{} steps={} mass={} momentum=({}, {}) conserved={}",
        model, a.width, a.height, a.steps, mass0, momentum0.x, momentum0.y, conserved
    );
    if !conserved {
        return Err(CliError::Numerical("mass or momentum changed during the run".into()));
    }
    run.finish("lgca run", a)
}

fn macro_csv(occ: &observables::OccupationField<f64>) -> Csv {
    let mf = macro_fields(occ, &Units64::default());
    let mut csv = Csv::new(["x", "y", "rho", "ux", "uy", "Pxx", "Pxy", "Pyy"]);
    for cy in 0..mf.cells_y {
        for cx in 0..mf.cells_x {
            let i = mf.index(0, cx, cy);
            let (u, pi) = (mf.u[i], mf.pi[i]);
            csv.row([
                cx.to_string(),
                cy.to_string(),
                float(mf.rho[i]),
                float(u[0]),
                float(u[1]),
                float(pi[0]),
                float(pi[1]),
                float(pi[2]),
            ]);
        }
    }
    csv
}

fn lgca_viscosity(mut run: Run, a: &LgcaRun) -> Result<(), CliError> {
    if a.model != Model::Fhp {
        return Err(usage("--measure-viscosity requires --model fhp"));
    }
    let cfg = observables::ShearWaveConfig {
        width: a.width,
        height: a.height,
        density: a.density,
        amplitude: a.u0,
        steps: a.steps,
        seed: run.seed,
    };
    let m = measure_viscosity(&cfg).map_err(|e| match e {
        ObservablesError::FitFailed(_) | ObservablesError::Dynamics(_) => CliError::Numerical(e.to_string()),
        other => usage(other.to_string()),
    })?;
    let predicted = predicted_viscosity(a.density, &FhpConstants64::default()).map_err(|e| usage(e.to_string()))?;

    let mut decay = Csv::new(["step", "amplitude"]);
    for (t, amp) in m.amplitudes.iter().enumerate() {
        decay.row([t.to_string(), float(*amp)]);
    }
    run.csv("viscosity_decay.csv", &decay)?;
    let mut summary = Csv::new(["quantity", "value"]);
    for (k, v) in [
        ("measured", m.viscosity),
        ("predicted_total", predicted.total),
        ("predicted_collision", predicted.collision),
        ("predicted_lattice", predicted.lattice),
        ("decay_rate", m.decay_rate),
        ("wavenumber", m.wavenumber),
        ("fit_start", m.fit_range.0 as f64),
        ("fit_end", m.fit_range.1 as f64),
        ("cutoff", m.cutoff),
    ] {
        summary.row([k.to_string(), float(v)]);
    }
    run.csv("viscosity.csv", &summary)?;
    println!(
        "measured nu = {:.6} (fit steps {}..{}), predicted nu = {:.6}, mass conserved = {}",
        m.viscosity, m.fit_range.0, m.fit_range.1, predicted.total, m.mass_conserved
    );
    if !m.mass_conserved {
        return Err(CliError::Numerical("mass changed during the shear-wave run".into()));
    }
    run.finish("lgca run", a)
}

fn eca_run(mut run: Run, a: &EcaRun) -> Result<(), CliError> {
    if a.width < 3 {
        return Err(usage(format!("--width must be at least 3, got {}", a.width)));
    }
    let initial = match a.init {
        Init::Single => eca::single_seed(a.width),
        Init::Random => (0..a.width)
            .map(|i| rng::keyed(run.seed, &[Stream::EcaInit as u64, i as u64]) & 1 == 1)
            .collect(),
    };
    let boundary = match a.boundary {
        BoundaryArg::Zero => EcaBoundary::FixedZero,
        BoundaryArg::Periodic => EcaBoundary::Periodic,
    };
    let d = eca::evolve(EcaRule::new(a.rule), &initial, a.steps, boundary).map_err(|e| usage(e.to_string()))?;
    let name = format!("eca_rule{:03}.pbm", a.rule);
    run.write(&name, &formats::pbm(&d.rows))?;
    let live: usize = d.rows.last().map_or(0, |r| r.iter().filter(|&&c| c).count());
    println!("rule {} width {} steps {}: {} live cells in the last row -> {}", a.rule, a.width, a.steps, live, name);
    run.finish("eca run", a)
}

/// Largest pattern length written as CSV.
const MAX_TABLE_EXPORT: usize = 16;

fn eca_table(mut run: Run, a: &EcaTable) -> Result<(), CliError> {
    if a.l > MAX_TABLE_EXPORT {
        return Err(usage(format!("--l must be at most {MAX_TABLE_EXPORT} for CSV export, got {}", a.l)));
    }
    let t = eca::build_pattern_table(a.l).map_err(|e| usage(e.to_string()))?;
    let mut csv = Csv::new(std::iter::once("pattern".to_string()).chain((0..=255).map(|r| format!("R{r}"))));
    for p in 0..t.rows() {
        csv.row(
            std::iter::once(eca::bit_string(p as u32, a.l))
                .chain(t.row(p).iter().map(|&v| eca::bit_string(v, a.l - 2))),
        );
    }
    run.csv(&a.out, &csv)?;
    println!("{} patterns x 256 rules -> {}", t.rows(), a.out.display());
    run.finish("eca table", a)
}

fn linalg_error(e: LinalgError) -> CliError {
    match e {
        LinalgError::NoConvergence { .. } => CliError::Numerical(e.to_string()),
        other => usage(other.to_string()),
    }
}

fn pca_rulespace(mut run: Run, a: &PcaRulespace) -> Result<(), CliError> {
    let constant = if a.drop_constant { ConstantColumns::Drop } else { ConstantColumns::Zero };
    let analysis = analyze_rulespace::<f64>(a.l, constant).map_err(|e| match e {
        PcaError::Linalg(inner) => linalg_error(inner),
        other => usage(format!("--l: {other}")),
    })?;
    let ev = &analysis.spectrum.eigenvalues;
    let mut spectrum = Csv::new(["rank", "eigenvalue"]);
    for (k, v) in ev.iter().enumerate() {
        spectrum.row([(k + 1).to_string(), float(*v)]);
    }
    run.csv(&a.out_spectrum, &spectrum)?;
    if let Some(path) = &a.out_loadings {
        let k = a.components.min(ev.len());
        let vecs = analysis.original_frame_eigenvectors();
        let mut csv = Csv::new(std::iter::once("rule".to_string()).chain((1..=k).map(|c| format!("pc{c}"))));
        for (i, rule) in analysis.rules.iter().enumerate() {
            csv.row(std::iter::once(rule.to_string()).chain((0..k).map(|c| float(vecs[(i, c)]))));
        }
        run.csv(path, &csv)?;
    }
    let lead = &ev[..ev.len().min(7)];
    println!("l = {}: {}", a.l, formats::join_fixed(lead, 4));
    let sum: f64 = ev.iter().sum();
    match (ev.get(6), ev.get(7)) {
        (Some(l7), Some(l8)) => println!("sum = {sum:.6}, lambda7 = {l7:.6e}, lambda8 = {l8:.6e}"),
        _ => println!("sum = {sum:.6}"),
    }
    run.finish("pca rulespace", a)
}

fn pca_eig(mut run: Run, a: &PcaEig) -> Result<(), CliError> {
    let input = run.path(&a.input);
    let m = formats::read_matrix(&input)?;
    let s = linalg::eig_sym(&m).map_err(linalg_error)?;
    let n = m.rows();
    let mut csv = Csv::new(["k".to_string(), "eigenvalue".to_string()].into_iter().chain((0..n).map(|i| format!("v{i}"))));
    for k in 0..n {
        csv.row(
            [(k + 1).to_string(), float(s.eigenvalues[k])]
                .into_iter()
                .chain((0..n).map(|i| float(s.eigenvectors[(i, k)]))),
        );
    }
    run.csv(&a.out, &csv)?;
    println!("{n}x{n} matrix: {} sweeps, residual {:.3e}", s.sweeps, s.eigen_residual(&m));
    run.finish("pca eig", a)
}

/// Exact value of a decimal literal such as `0.25` or `5e-2`.
pub(crate) fn parse_decimal(s: &str) -> Option<BigRational> {
    let s = s.trim();
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let num: BigInt = format!("{int}{frac}").parse().ok()?;
    let num = if neg { -num } else { num };
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let pow = num_traits::pow(ten, scale.unsigned_abs() as usize);
    Some(if scale >= 0 {
        BigRational::from_integer(num * pow)
    } else {
        BigRational::new(num, pow)
    })
}

fn wsccs_error(e: WsccsError) -> CliError {
    match e {
        WsccsError::Singular => CliError::Numerical(e.to_string()),
        other => usage(other.to_string()),
    }
}

fn wsccs_colony(mut run: Run, a: &WsccsColony) -> Result<(), CliError> {
    let p: f64 = a.p.trim().parse().map_err(|_| usage(format!("--p must be a number, got `{}`", a.p)))?;
    let chain = wsccs::colony_matrix(a.n, p).map_err(wsccs_error)?;
    let start = a.start.unwrap_or(a.n);
    if start > a.n {
        return Err(usage(format!("--start must be at most --n = {}, got {start}", a.n)));
    }

    if a.exact_check {
        if a.n > wsccs::MAX_COMPOSED_AGENTS {
            return Err(usage(format!(
                "--exact-check expands all 2^n branch assignments and needs --n <= {}",
                wsccs::MAX_COMPOSED_AGENTS
            )));
        }
        let exact_p = parse_decimal(&a.p).ok_or_else(|| usage(format!("--p `{}` is not a decimal literal", a.p)))?;
        let closed = wsccs::colony_matrix(a.n, exact_p.clone()).map_err(wsccs_error)?;
        let brute = wsccs::colony_matrix_by_composition(a.n, exact_p).map_err(wsccs_error)?;
        if closed != brute {
            return Err(CliError::Numerical("binomial chain differs from the brute-force composition".into()));
        }
        let worst = closed
            .to_f64()
            .rows()
            .iter()
            .flatten()
            .zip(chain.rows().iter().flatten())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        if worst > 1e-12 {
            return Err(CliError::Numerical(format!("floating-point chain deviates by {worst:.3e}")));
        }
        println!("exact check: binomial chain equals brute-force composition (float deviation {worst:.1e})");
    }

    let mut matrix = Csv::new(std::iter::once("from".to_string()).chain((0..=a.n).map(|k| format!("to_{k}"))));
    for i in 0..=a.n {
        matrix.row(std::iter::once(i.to_string()).chain(chain.row(i).iter().map(|x| float(*x))));
    }
    run.csv("colony_matrix.csv", &matrix)?;

    let sim = wsccs::simulate(&chain, start, a.steps, a.trials, run.seed).map_err(wsccs_error)?;
    let mut traj = Csv::new(["trial", "t", "a"]);
    for (trial, path) in sim.paths.iter().enumerate() {
        for (t, s) in path.iter().enumerate() {
            traj.row([trial.to_string(), t.to_string(), s.to_string()]);
        }
    }
    run.csv("colony_trajectories.csv", &traj)?;

    let mut summary = Csv::new(["t", "mean_simulated", "mean_exact", "extinct_simulated", "extinct_exact"]);
    let mut dist = vec![0.0; a.n + 1];
    dist[start] = 1.0;
    for t in 0..=a.steps {
        if t > 0 {
            dist = chain.propagate_distribution(&dist);
        }
        let trials = a.trials.max(1) as f64;
        let mean_sim = sim.paths.iter().map(|p| p[t] as f64).sum::<f64>() / trials;
        let ext_sim = sim.paths.iter().filter(|p| p[t] == 0).count() as f64 / trials;
        let mean_exact: f64 = dist.iter().enumerate().map(|(k, x)| k as f64 * x).sum();
        summary.row([t.to_string(), float(mean_sim), float(mean_exact), float(ext_sim), float(dist[0])]);
    }
    run.csv("colony_summary.csv", &summary)?;

    let analysis = wsccs::analyze(&chain, start, a.steps as u64).map_err(wsccs_error)?;
    println!(
        "n = {}, p = {}, start = {}: expected absorption time {:.6}, P(extinct by t = {}) = {:.6}",
        a.n, p, start, analysis.expected_absorption, a.steps, analysis.distribution[0]
    );
    run.finish("wsccs colony", a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals() {
        let q = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
        assert_eq!(parse_decimal("0.5"), Some(q(1, 2)));
        assert_eq!(parse_decimal(".2"), Some(q(1, 5)));
        assert_eq!(parse_decimal("9e-1"), Some(q(9, 10)));
        assert_eq!(parse_decimal("-1.25E1"), Some(q(-25, 2)));
        assert_eq!(parse_decimal("3"), Some(q(3, 1)));
        assert_eq!(parse_decimal("abc"), None);
        assert_eq!(parse_decimal("."), None);
        assert_eq!(parse_decimal("1.2.3"), None);
    }
}

use anyhow::{bail, Result};
use serde_json::json;
use xysim::circuit::{unitary_of_circuit, Expectation, Gate, StateVector};
use xysim::disentangler::{
    bell_input, chain_eigenstate, compile_chain_disentangler_in_sector, eigenenergy, eigenstate, two_site_circuit,
    two_site_unitary_matrix, Occupation,
};
use xysim::linalg::{self, phase_aligned_diff};
use xysim::optics::{
    choi, cnot_matrix, noisy_pipeline, process_fidelity, spdc_bell_source, DepolarizedUnitary, PostselectedCnot,
    UnitaryChannel,
};
use xysim::quench::{run_quench, HamiltonianSpec, Method, Preparation, QuenchProtocol};
use xysim::spin_model::{
    build_xy_hamiltonian, mixing_angle, restricted_eigenvalues, to_dense, two_site_spectrum, Boundary,
    ComplexRows, ParitySector,
};
use xysim::tomography::{correlation_sweep, default_w_grid, tomographic_sweep};

use crate::config::{MethodArg, RunConfig};
use crate::output::{Cell, Report};

/// Largest chain whose compiled circuit is checked against dense diagonalization.
const VERIFY_MAX_SITES: usize = 8;

fn param_meta(r: &mut Report, cfg: &RunConfig) {
    r.meta("jx", cfg.params.jx).meta("jy", cfg.params.jy).meta("b", cfg.params.b).meta("L", cfg.num_sites);
}

fn basis_label(index: usize, n: usize) -> String {
    format!("{index:0n$b}")
}

fn amplitude_rows(r: &mut Report, state: &StateVector) {
    let n = state.num_qubits();
    for (i, a) in state.amplitudes().iter().enumerate() {
        r.row(vec![i.into(), basis_label(i, n).into(), a.re.into(), a.im.into()]);
    }
}

fn occupation(cfg: &RunConfig) -> Result<Occupation> {
    match &cfg.occupation {
        Some(s) => Ok(s.parse()?),
        None => Ok(Occupation::vacuum(cfg.num_sites)),
    }
}

fn require_periodic(cfg: &RunConfig) -> Result<()> {
    if cfg.boundary != Boundary::Periodic {
        bail!("the chain compiler supports periodic boundaries only");
    }
    Ok(())
}

pub fn spectrum(cfg: &RunConfig) -> Result<Report> {
    if cfg.num_sites == 2 {
        let s = two_site_spectrum(&cfg.params);
        let mut r = Report::new(&["quantity", "value"]);
        param_meta(&mut r, cfg);
        for (name, v) in [("E1", s.e1()), ("E2", s.e2()), ("E3", s.e3()), ("E4", s.e4()), ("omega1", s.omega1()), ("omega2", s.omega2())] {
            r.row(vec![name.into(), v.into()]);
        }
        if let Ok(w) = mixing_angle(&cfg.params) {
            r.row(vec!["w".into(), w.radians().into()]);
        }
        return Ok(r);
    }
    let h = to_dense(&build_xy_hamiltonian(&cfg.params, cfg.num_sites, cfg.boundary)?)?;
    let mut r = Report::new(&["sector", "level", "energy"]);
    param_meta(&mut r, cfg);
    r.meta("boundary", cfg.boundary.to_string());
    for sector in [ParitySector::Even, ParitySector::Odd] {
        for (k, e) in restricted_eigenvalues(&h, &sector.basis(cfg.num_sites)).into_iter().enumerate() {
            r.row(vec![sector.label().into(), k.into(), e.into()]);
        }
    }
    Ok(r)
}

pub fn prepare(cfg: &RunConfig) -> Result<Report> {
    if cfg.num_sites > 2 {
        require_periodic(cfg)?;
        let occ = occupation(cfg)?;
        let compiled = compile_chain_disentangler_in_sector(&cfg.params, cfg.num_sites, occ.parity())?;
        let state = chain_eigenstate(&compiled, &occ)?;
        let h = build_xy_hamiltonian(&cfg.params, cfg.num_sites, Boundary::Periodic)?;
        let mut r = Report::new(&["index", "basis", "re", "im"]);
        param_meta(&mut r, cfg);
        r.meta("occupation", occ.to_string())
            .meta("sector", occ.parity().label())
            .meta("energy", state.expectation(&h)?);
        amplitude_rows(&mut r, &state);
        r.data = Some(serde_json::to_value(state.to_dump())?);
        return Ok(r);
    }
    let mut r;
    if cfg.noise_enabled {
        let out = noisy_pipeline(&cfg.params, cfg.idx, &cfg.noise)?;
        r = Report::new(&["row", "col", "re", "im"]);
        param_meta(&mut r, cfg);
        r.meta("idx", cfg.idx.to_string())
            .meta("noise_input", cfg.noise.input_fidelity)
            .meta("noise_process", cfg.noise.process_fidelity)
            .meta("fidelity", out.fidelity)
            .meta("success_prob", out.success_prob);
        let m = out.rho.matrix();
        for i in 0..4 {
            for j in 0..4 {
                r.row(vec![i.into(), j.into(), m[(i, j)].re.into(), m[(i, j)].im.into()]);
            }
        }
        r.data = Some(json!({ "density_matrix": ComplexRows::from(m) }));
    } else {
        let state = eigenstate(&cfg.params, cfg.idx)?;
        r = Report::new(&["index", "basis", "re", "im"]);
        param_meta(&mut r, cfg);
        r.meta("idx", cfg.idx.to_string()).meta("energy", eigenenergy(&cfg.params, cfg.idx));
        amplitude_rows(&mut r, &state);
        r.data = Some(serde_json::to_value(state.to_dump())?);
    }
    Ok(r)
}

fn gate_row(i: usize, g: &Gate, stage: &str) -> Vec<Cell> {
    let kind = match g {
        Gate::Single { .. } => "single",
        Gate::Cnot { .. } => "cnot",
        Gate::CPhase { .. } => "cphase",
        Gate::TwoQubit { .. } => "two_qubit",
    };
    let targets = g.qubits().iter().map(|q| q.to_string()).collect::<Vec<_>>().join(" ");
    vec![i.into(), stage.into(), kind.into(), targets.into()]
}

pub fn circuit(cfg: &RunConfig) -> Result<Report> {
    let mut r = Report::new(&["index", "stage", "kind", "targets"]);
    param_meta(&mut r, cfg);
    if cfg.num_sites == 2 {
        let w = mixing_angle(&cfg.params)?;
        let c = two_site_circuit(w);
        let u = unitary_of_circuit(&c)?;
        let target = two_site_unitary_matrix(w).into_matrix().adjoint();
        r.meta("w", w.radians())
            .meta("cnots", c.cnot_count())
            .meta("deviation", phase_aligned_diff(u.matrix(), &target));
        for (i, g) in c.gates().iter().enumerate() {
            r.row(gate_row(i, g, "two-site"));
        }
        r.data = Some(serde_json::to_value(c.to_file())?);
        return Ok(r);
    }
    require_periodic(cfg)?;
    let compiled = compile_chain_disentangler_in_sector(&cfg.params, cfg.num_sites, occupation(cfg)?.parity())?;
    let counts = compiled.stage_counts();
    r.meta("sector", compiled.sector().label())
        .meta("gates", compiled.gate_count())
        .meta("jw-relabel", counts.jw_relabel)
        .meta("fourier", counts.fourier)
        .meta("antisymmetry", counts.antisymmetry)
        .meta("bogoliubov", counts.bogoliubov);
    if cfg.num_sites <= VERIFY_MAX_SITES {
        let v = compiled.verify()?;
        r.meta("off_diagonal_ratio", v.off_diagonal_ratio).meta("spectrum_error", v.spectrum_error);
    }
    for (i, (g, s)) in compiled.circuit().gates().iter().zip(compiled.stages()).enumerate() {
        r.row(gate_row(i, g, s.label()));
    }
    r.data = Some(serde_json::to_value(compiled.to_export())?);
    Ok(r)
}

pub fn optics(cfg: &RunConfig) -> Result<Report> {
    let gate = PostselectedCnot::new();
    let choi_distance = linalg::max_abs_diff(&choi(&gate), &choi(&UnitaryChannel(cnot_matrix())));
    let model = DepolarizedUnitary::from_process_fidelity(cnot_matrix(), cfg.noise.process_fidelity)?;
    let source = spdc_bell_source(bell_input(cfg.idx), cfg.noise.input_fidelity)?;
    let source_fidelity = xysim::circuit::fidelity(&source, &bell_input(cfg.idx).state())?;
    let pipeline = noisy_pipeline(&cfg.params, cfg.idx, &cfg.noise)?;
    let mut r = Report::new(&["quantity", "value"]);
    param_meta(&mut r, cfg);
    r.meta("idx", cfg.idx.to_string()).meta("bell_input", bell_input(cfg.idx).label());
    for (name, v) in [
        ("success_prob", gate.success_probability()),
        ("choi_distance", choi_distance),
        ("source_fidelity", source_fidelity),
        ("depolarizing_mu", model.mu()),
        ("process_fidelity", process_fidelity(&model, &cnot_matrix())),
        ("pipeline_fidelity", pipeline.fidelity),
        ("pipeline_success_prob", pipeline.success_prob),
    ] {
        r.row(vec![name.into(), v.into()]);
    }
    r.data = Some(json!({ "kraus": ComplexRows::from(gate.kraus()) }));
    Ok(r)
}

fn grid(cfg: &RunConfig) -> Vec<f64> {
    match (&cfg.w_grid, cfg.w) {
        (Some(g), _) => g.clone(),
        (None, Some(w)) => vec![w],
        (None, None) => default_w_grid(),
    }
}

pub fn sweep(cfg: &RunConfig) -> Result<Report> {
    let g = grid(cfg);
    let clean = correlation_sweep(cfg.idx, &g, None)?;
    let noisy = correlation_sweep(cfg.idx, &g, Some(&cfg.noise))?;
    let mut r = Report::new(&[
        "w", "xx", "yy", "z_avg", "fidelity", "xx_noisy", "yy_noisy", "z_avg_noisy", "fidelity_noisy",
    ]);
    r.meta("idx", cfg.idx.to_string())
        .meta("noise_input", cfg.noise.input_fidelity)
        .meta("noise_process", cfg.noise.process_fidelity);
    for (c, n) in clean.iter().zip(&noisy) {
        r.row(vec![
            c.w.into(),
            c.xx.into(),
            c.yy.into(),
            c.z_avg.into(),
            c.fidelity.into(),
            n.xx.into(),
            n.yy.into(),
            n.z_avg.into(),
            n.fidelity.into(),
        ]);
    }
    Ok(r)
}

pub fn tomo(cfg: &RunConfig) -> Result<Report> {
    let g = grid(cfg);
    let noise = cfg.noise_enabled.then_some(&cfg.noise);
    let rows = tomographic_sweep(cfg.idx, &g, noise, cfg.shots, cfg.seed)?;
    let mut r = Report::new(&["w", "xx", "yy", "z_avg", "fidelity"]);
    r.meta("idx", cfg.idx.to_string())
        .meta("noise", if cfg.noise_enabled { format!("{}/{}", cfg.noise.input_fidelity, cfg.noise.process_fidelity) } else { "none".into() })
        .meta("shots", cfg.shots as usize)
        .meta("seed", cfg.seed.to_string());
    let mut matrices = Vec::new();
    for (row, rho) in &rows {
        r.row(vec![row.w.into(), row.xx.into(), row.yy.into(), row.z_avg.into(), row.fidelity.into()]);
        matrices.push(json!({ "w": row.w, "density_matrix": ComplexRows::from(rho.matrix()) }));
    }
    r.data = Some(json!({ "reconstructions": matrices }));
    Ok(r)
}

pub fn quench(cfg: &RunConfig) -> Result<Report> {
    let prepare = if cfg.num_sites == 2 {
        Preparation::TwoSite { params: cfg.params, idx: cfg.idx }
    } else {
        require_periodic(cfg)?;
        Preparation::Chain { params: cfg.params, occupation: occupation(cfg)?.to_string() }
    };
    let method = match cfg.method {
        MethodArg::Exact => Method::Exact,
        MethodArg::Trotter => Method::Trotter { steps_per_unit: cfg.steps_per_unit },
    };
    let protocol = QuenchProtocol {
        prepare,
        evolve: HamiltonianSpec::new(cfg.evolve_params, cfg.hx, cfg.num_sites, cfg.boundary)?,
        times: QuenchProtocol::uniform_times(cfg.t_max, cfg.points),
        observables: Vec::new(),
        method,
    };
    let ts = run_quench(&protocol)?;
    let mut columns = vec!["t".to_string()];
    columns.extend(ts.observables.iter().cloned());
    columns.extend(["norm".to_string(), "energy".to_string()]);
    let mut r = Report { columns, ..Report::default() };
    param_meta(&mut r, cfg);
    r.meta("evolve_jx", cfg.evolve_params.jx)
        .meta("evolve_jy", cfg.evolve_params.jy)
        .meta("evolve_b", cfg.evolve_params.b)
        .meta("hx", cfg.hx)
        .meta("method", match method {
            Method::Exact => "exact".to_string(),
            Method::Trotter { steps_per_unit } => format!("trotter({steps_per_unit})"),
        });
    for row in &ts.rows {
        let mut cells: Vec<Cell> = vec![row.t.into()];
        cells.extend(row.values.iter().map(|&v| v.into()));
        cells.extend([row.norm.into(), row.energy.into()]);
        r.row(cells);
    }
    Ok(r)
}

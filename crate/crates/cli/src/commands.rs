use std::path::{Path, PathBuf};

use qcoupler::circuits::{DeviceParams, FluxPoint, QubitId};
use qcoupler::coupled::{
    default_window, resolve_crossing, spectroscopy_sweep, CompositeModel, Subsystem,
    RESONANCE_RESOLUTION,
};
use qcoupler::coupler::coupling_region_map;
use qcoupler::noise::{
    amplitude_curves, coherence_vs_coupler, constraint_triangle, eta, gamma_grid, parse_rate_table,
    ResponseEvaluator, Sequence,
};
use qcoupler::output::{Provenance, Table};
use qcoupler::semiclassical::LoadedQubits;
use qcoupler::{Error, Result};
use rayon::prelude::*;

use crate::plot::{self, PlotSpec};
use crate::{Command, LoadedConfig};

/// One output file, plus an optional plot of it.
#[derive(Debug, Clone)]
pub enum Artifact {
    Csv {
        name: &'static str,
        table: Table,
        plot: Option<PlotSpec>,
    },
    Json {
        name: &'static str,
        value: serde_json::Value,
    },
}

impl Artifact {
    pub fn name(&self) -> &'static str {
        match self {
            Artifact::Csv { name, .. } | Artifact::Json { name, .. } => name,
        }
    }

    pub fn write(
        &self,
        dir: &Path,
        command: &str,
        digest: &str,
        svg: bool,
    ) -> Result<Vec<PathBuf>> {
        let path = dir.join(self.name());
        let mut written = vec![path.clone()];
        match self {
            Artifact::Csv { table, plot, .. } => {
                table.write(&path, &Provenance::new(command, digest))?;
                if let (true, Some(spec)) = (svg, plot) {
                    let svg_path = path.with_extension("svg");
                    let text = plot::render(table, spec)?;
                    std::fs::write(&svg_path, text).map_err(|e| {
                        Error::Data(format!("cannot write {}: {e}", svg_path.display()))
                    })?;
                    written.push(svg_path);
                }
            }
            Artifact::Json { value, .. } => {
                let mut text =
                    serde_json::to_string_pretty(value).map_err(|e| Error::Data(e.to_string()))?;
                text.push('\n');
                std::fs::write(&path, text)
                    .map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))?;
            }
        }
        Ok(written)
    }
}

pub fn execute(command: &Command, loaded: &LoadedConfig) -> Result<Vec<Artifact>> {
    let device = loaded.config.device()?;
    match command {
        Command::CouplerResponse => coupler_response(loaded, &device),
        Command::CouplingSweep => coupling_sweep(loaded, &device),
        Command::Coherence => coherence(loaded, &device),
        Command::NoiseFit { data } => noise_fit(loaded, &device, data.as_deref()),
        Command::EtaTable => eta_table(loaded),
        Command::Spectrum => spectrum(loaded, &device),
    }
}

fn coupler_response(loaded: &LoadedConfig, device: &DeviceParams) -> Result<Vec<Artifact>> {
    let grid = loaded.config.sweep.coupler.points();
    let r = coupling_region_map(device, &grid)?;
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    let mut table = Table::new(&[
        "flux_c",
        "e0_GHz",
        "i_slope_nA",
        "i_op_nA",
        "inv_l_eff_per_pH",
        "l_eff_pH",
        "region",
    ]);
    for (i, &f) in grid.iter().enumerate() {
        table.push(vec![
            f.into(),
            r.e0_ghz[i].into(),
            r.i_slope_na[i].into(),
            r.i_op_na[i].into(),
            r.inv_l_eff_per_ph[i].into(),
            (1.0 / r.inv_l_eff_per_ph[i]).into(),
            r.region[i].label().into(),
        ])?;
    }
    Ok(vec![Artifact::Csv {
        name: "coupler_response.csv",
        table,
        plot: Some(PlotSpec::lines(
            "Coupler circulating current",
            "flux_c",
            &["i_slope_nA", "i_op_nA"],
            "current (nA)",
        )),
    }])
}

fn coupling_sweep(loaded: &LoadedConfig, device: &DeviceParams) -> Result<Vec<Artifact>> {
    let sweep = &loaded.config.sweep;
    let grid = sweep.coupling.points();
    let f_b = 0.5 + sweep.fb_offset;
    let window = default_window(f_b);

    let qubits = LoadedQubits::new(device)?;
    let model = CompositeModel::new(device)?;
    let f0 = grid[0];
    let verify = || -> Result<()> {
        for which in [QubitId::A, QubitId::B] {
            qubits.verify_convergence(which, f0)?;
        }
        model.verify_retained_convergence(FluxPoint::new(0.5 * (window.0 + window.1), f_b, f0)?)?;
        Ok(())
    };
    verify().map_err(|e| e.at_flux(f0))?;

    let semi = grid
        .par_iter()
        .map(|&f| qubits.coupling(f).map_err(|e| e.at_flux(f)))
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(&[
        "f_c",
        "j_semiclassical_MHz",
        "j_splitting_MHz",
        "below_floor",
        "crossing_f_a",
        "inv_l_eff_per_pH",
    ]);
    for (&f, s) in grid.iter().zip(&semi) {
        let res = resolve_crossing(&model, f_b, f, window, RESONANCE_RESOLUTION)
            .map_err(|e| e.at_flux(f))?;
        table.push(vec![
            f.into(),
            s.j_over_2pi_mhz().into(),
            res.splitting.j_over_2pi_mhz().into(),
            res.splitting.below_floor.into(),
            res.splitting.location.into(),
            s.inv_l_eff_per_ph.into(),
        ])?;
    }
    Ok(vec![Artifact::Csv {
        name: "coupling_sweep.csv",
        table,
        plot: Some(PlotSpec::lines(
            "Coupling strength",
            "f_c",
            &["j_semiclassical_MHz", "j_splitting_MHz"],
            "J/2π (MHz)",
        )),
    }])
}

fn coherence(loaded: &LoadedConfig, device: &DeviceParams) -> Result<Vec<Artifact>> {
    let cfg = &loaded.config;
    let options = cfg.noise.options()?;
    let grid = cfg.sweep.coherence.points();
    let report = coherence_vs_coupler(device, &options, &grid)?;

    let mut table = Table::new(&[
        "f_c",
        "f_b",
        "delta_GHz",
        "kappa_rad_per_s_per_phi0",
        "coupler_element_nA",
        "qubit_element_nA",
        "omega01_GHz",
        "t1_coupler_s",
        "t1_background_s",
        "t1_s",
        "gamma_phi_ramsey_per_s",
        "gamma_phi_echo_per_s",
        "t2_ramsey_s",
        "t2_echo_s",
    ]);
    for p in &report.points {
        let r = &p.response;
        table.push(vec![
            r.f_c.into(),
            r.f_b.into(),
            r.delta_ghz.into(),
            r.kappa.into(),
            r.element_na.into(),
            r.qubit_element_na.into(),
            qcoupler::units::rad_per_s_to_ghz(r.omega01).into(),
            p.t1_coupler.into(),
            p.t1_qubit_background.into(),
            p.t1_total.into(),
            p.gamma0_phi.into(),
            p.gamma1_phi.into(),
            p.t2_ramsey().into(),
            p.t2_echo().into(),
        ])?;
    }
    let mut out = vec![Artifact::Csv {
        name: "coherence.csv",
        table,
        plot: Some(
            PlotSpec::lines(
                "Qubit B coherence",
                "f_c",
                &["t1_s", "t2_ramsey_s", "t2_echo_s"],
                "time (s)",
            )
            .log_y(),
        ),
    }];

    if !cfg.sweep.envelope_points.is_empty() {
        let taus = cfg.sweep.envelope_delays.points();
        let mut env = Table::new(&["f_c", "tau_s", "ramsey", "echo"]);
        for &f in &cfg.sweep.envelope_points {
            let p = report
                .points
                .iter()
                .find(|p| (p.response.f_c - f).abs() < 1e-12)
                .ok_or_else(|| Error::Config(format!("envelope point {f} not evaluated")))?;
            for &tau in &taus {
                env.push(vec![
                    f.into(),
                    tau.into(),
                    p.envelope(Sequence::Ramsey, tau)?.into(),
                    p.envelope(Sequence::Echo, tau)?.into(),
                ])?;
            }
        }
        out.push(Artifact::Csv {
            name: "coherence_envelopes.csv",
            table: env,
            plot: Some(
                PlotSpec::lines("Decay envelopes", "tau_s", &["ramsey", "echo"], "envelope")
                    .grouped_by("f_c"),
            ),
        });
    }
    Ok(out)
}

fn noise_fit(
    loaded: &LoadedConfig,
    device: &DeviceParams,
    data: Option<&Path>,
) -> Result<Vec<Artifact>> {
    let cfg = &loaded.config;
    let path = match (data, &cfg.sweep.rates) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => loaded.base.join(p),
        (None, None) => {
            return Err(Error::Config(
                "noise-fit needs a rate table (--data or sweep.rates)".into(),
            ))
        }
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    let rows = parse_rate_table(&text)?;

    let mut biases: Vec<f64> = rows.iter().map(|r| r.f_c).collect();
    biases.sort_by(f64::total_cmp);
    biases.dedup();
    let responses = ResponseEvaluator::new(device)?.sweep(&biases)?;
    let g = &cfg.sweep.gamma;
    let gammas = gamma_grid(g.start, g.stop, g.points).map_err(|e| Error::Config(e.to_string()))?;
    let curves = amplitude_curves(&rows, &responses, &gammas, cfg.noise.model.window())?;
    let triangle = constraint_triangle(&curves);

    let mut table = Table::new(&["gamma", "channel", "amplitude_phi0_per_rthz"]);
    for c in &curves {
        for (&gamma, &a) in c.gammas.iter().zip(&c.amplitudes) {
            table.push(vec![gamma.into(), c.channel.label().into(), a.into()])?;
        }
    }
    let mut vertices = Table::new(&["channel_1", "channel_2", "gamma", "amplitude_phi0_per_rthz"]);
    for v in &triangle.vertices {
        vertices.push(vec![
            v.channels.0.label().into(),
            v.channels.1.label().into(),
            v.gamma.into(),
            v.amplitude.into(),
        ])?;
    }
    let value = serde_json::to_value(&triangle).map_err(|e| Error::Data(e.to_string()))?;
    Ok(vec![
        Artifact::Csv {
            name: "noise_fit_curves.csv",
            table,
            plot: Some(
                PlotSpec::lines(
                    "Flux-noise amplitude",
                    "gamma",
                    &["amplitude_phi0_per_rthz"],
                    "A (Φ₀/√Hz)",
                )
                .grouped_by("channel"),
            ),
        },
        Artifact::Csv {
            name: "noise_fit_triangle.csv",
            table: vertices,
            plot: None,
        },
        Artifact::Json {
            name: "noise_fit_triangle.json",
            value,
        },
    ])
}

fn eta_table(loaded: &LoadedConfig) -> Result<Vec<Artifact>> {
    let cfg = &loaded.config;
    let g = &cfg.sweep.gamma;
    let gammas = gamma_grid(g.start, g.stop, g.points).map_err(|e| Error::Config(e.to_string()))?;
    let window = cfg.noise.model.window();
    let etas = gammas
        .par_iter()
        .map(|&gamma| -> Result<(f64, f64)> {
            Ok((
                eta(Sequence::Ramsey, gamma, window)?,
                eta(Sequence::Echo, gamma, window)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(&["gamma", "eta0", "eta1", "sqrt_eta0", "sqrt_eta1"]);
    for (&gamma, &(e0, e1)) in gammas.iter().zip(&etas) {
        table.push(vec![
            gamma.into(),
            e0.into(),
            e1.into(),
            e0.sqrt().into(),
            e1.sqrt().into(),
        ])?;
    }
    Ok(vec![Artifact::Csv {
        name: "eta_table.csv",
        table,
        plot: Some(PlotSpec::lines(
            "Dephasing factors",
            "gamma",
            &["sqrt_eta0", "sqrt_eta1"],
            "√η",
        )),
    }])
}

fn spectrum(loaded: &LoadedConfig, device: &DeviceParams) -> Result<Vec<Artifact>> {
    let s = &loaded.config.sweep.spectrum;
    let grid = s.range.points();
    let axis: Subsystem = s.axis.into();
    let model = CompositeModel::new(device)?;
    let first = match axis {
        Subsystem::QubitA => FluxPoint {
            f_a: grid[0],
            ..s.fixed
        },
        Subsystem::QubitB => FluxPoint {
            f_b: grid[0],
            ..s.fixed
        },
        Subsystem::Coupler => FluxPoint {
            f_c: grid[0],
            ..s.fixed
        },
    };
    model
        .verify_retained_convergence(first)
        .map_err(|e| e.at_flux(grid[0]))?;
    let spec = spectroscopy_sweep(&model, axis, &grid, s.fixed, s.branches)?;
    let mut table = Table::new(&["swept_flux", "branch_index", "freq_GHz", "tag"]);
    for p in &spec.points {
        for (k, (&f, tag)) in p.freqs.iter().zip(&p.tags).enumerate() {
            table.push(vec![
                p.flux.into(),
                (k + 1).into(),
                f.into(),
                tag.label().into(),
            ])?;
        }
    }
    Ok(vec![Artifact::Csv {
        name: "spectrum.csv",
        table,
        plot: Some(
            PlotSpec::lines(
                "Composite spectrum",
                "swept_flux",
                &["freq_GHz"],
                "frequency (GHz)",
            )
            .grouped_by("branch_index"),
        ),
    }])
}

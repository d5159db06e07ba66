"""Command-line front end over the analysis modules.

    fluxcoupler [--config FILE] [--seed N] [--threads N] [--out DIR] COMMAND

Each command computes its results first and only then writes artifacts, so
a failed run leaves nothing behind.  Files land atomically (temp file then
rename) in a per-command directory under the output root, followed by a
manifest.json listing every artifact with its size and sha256 digest; the
same config and seed produce byte-identical artifacts and manifest.  Every
JSON artifact embeds the effective configuration.  Diagnostics go to
stderr.  Exit status: 0 success, 1 validation or usage error, 2 numerical
failure.
"""

import csv
import hashlib
import io
import json
import os
import sys

import click
import numpy as np

from .benchmarking import NoiseModel, run_xeb_pair
from .circuit import CircuitModel, FluxPoint
from .config import config_echo, load_config
from .dynamics import (CrosstalkModel, DecoherenceRates,
                       calibrate_crosstalk_compensation, chevron_scan,
                       fit_oscillation_frequency)
from .errorbudget import assemble_error_budget
from .errors import ConfigError, FitError, FluxcouplerError
from .fluxmap import (extract_effective_params, find_off_position,
                      phi_s_rows, sweet_spot_contour, zz_landscape)
from .gates import (GatePhases, bswap_like_matrix, calibrate_phases,
                    calibrate_rotation_angle)
from .spectrum import (computational_spectrum, fit_spectroscopy,
                       qubit_splittings, read_spectroscopy_csv, zz_strength)


# ---------------------------------------------------------------------------
# artifact plumbing

def _np_item(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON-serializable: {type(obj).__name__}")


def _json_text(payload):
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False,
                      default=_np_item) + "\n"


def _write_atomic(path, data):
    tmp = path + ".tmp"
    with open(tmp, "wb") as f:
        f.write(data)
    os.replace(tmp, path)


def _g(x, spec=".10g"):
    return format(float(x), spec)


class _Emitter:
    """Staged artifact writer: collect text in memory, land files at once."""

    def __init__(self, cfg, command):
        self.dir = os.path.join(cfg.out, command)
        self.items = []

    def add_json(self, name, payload):
        self.items.append((name, _json_text(payload)))

    def add_csv(self, name, rows):
        """rows includes the header row."""
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(rows)
        self.items.append((name, buf.getvalue()))

    def add_text(self, name, text):
        self.items.append((name, text))

    def flush(self):
        os.makedirs(self.dir, exist_ok=True)
        entries = []
        for name, text in self.items:
            data = text.encode()
            _write_atomic(os.path.join(self.dir, name), data)
            entries.append({"name": name, "bytes": len(data),
                            "sha256": hashlib.sha256(data).hexdigest()})
            click.echo(f"wrote {os.path.join(self.dir, name)}", err=True)
        _write_atomic(os.path.join(self.dir, "manifest.json"),
                      _json_text({"artifacts": entries}).encode())
        click.echo(f"wrote {os.path.join(self.dir, 'manifest.json')}",
                   err=True)


def _echo(cfg):
    """Config echo for artifacts; the output location is not provenance,
    so identical runs give byte-identical files wherever they land."""
    raw = config_echo(cfg)
    raw["run"].pop("out", None)
    return raw


def _model(cfg):
    return CircuitModel(cfg.circuit, keep=cfg.keep, ho_dim=cfg.ho_dim)


def _landscape_model(cfg):
    return CircuitModel(cfg.circuit, keep=cfg.landscape_keep,
                        ho_dim=cfg.landscape_ho_dim)


def _flux_dict(flux):
    return {"phi_a": float(flux.phi_a), "phi_b": float(flux.phi_b),
            "phi_c": float(flux.phi_c)}


def _phi_c_grid(cfg):
    fl = cfg.flux
    return np.linspace(fl["phi_c_start"], fl["phi_c_stop"],
                       fl["phi_c_points"])


# ---------------------------------------------------------------------------
# command group

@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None,
              metavar="FILE", help="TOML config; bundled defaults fill gaps.")
@click.option("--seed", type=int, default=None, help="Override run.seed.")
@click.option("--threads", type=int, default=None,
              help="Override run.threads (0 = machine capacity).")
@click.option("--out", "out_dir", default=None, metavar="DIR",
              help="Override run.out artifact root.")
@click.pass_context
def cli(ctx, config_path, seed, threads, out_dir):
    """Coupled-fluxonium pair simulator: spectra, coupling landscapes,
    driven gates, calibration, error budgets, and benchmarking."""
    run = {}
    if seed is not None:
        run["seed"] = seed
    if threads is not None:
        run["threads"] = threads
    if out_dir is not None:
        run["out"] = out_dir
    ctx.obj = load_config(config_path, overrides={"run": run} if run else None)


@cli.command()
@click.pass_obj
def spectrum(cfg):
    """Bare qubit-mode levels and the labeled circuit spectrum at the
    coupler off position."""
    model = _model(cfg)
    off = find_off_position(_landscape_model(cfg))
    spec = computational_spectrum(model, off)
    f_a, f_b = qubit_splittings(spec)

    per_qubit = {}
    rows = [("mode", "index", "energy_GHz")]
    for name, mode in (("qubit_a", model.mode_a), ("qubit_b", model.mode_b)):
        ev = mode.evals - mode.evals[0]
        per_qubit[name] = {
            "levels_ghz": [float(e) for e in ev[:4]],
            "f10_mhz": float(ev[1] * 1e3),
            "anharmonicity_ghz": float(ev[2] - 2.0 * ev[1]),
        }
        rows += [(name, i, _g(e, ".12g")) for i, e in enumerate(ev[:6])]

    f00 = spec.energy_of((0, 0, 0, 0))
    computational = {
        f"{i}{j}": float(spec.energy_of((i, j, 0, 0)) - f00)
        for i in (0, 1) for j in (0, 1)}
    em = _Emitter(cfg, "spectrum")
    em.add_json("spectrum.json", {
        "config": _echo(cfg),
        "off_position": _flux_dict(off),
        "qubit_modes": per_qubit,
        "circuit": {"f10_a_mhz": float(f_a * 1e3),
                    "f10_b_mhz": float(f_b * 1e3),
                    "zz_khz": float(zz_strength(spec)),
                    "computational_energies_ghz": computational},
    })
    em.add_csv("levels.csv", rows)
    em.flush()


@cli.command()
@click.pass_obj
def contour(cfg):
    """Sweet-spot contour: qubit fluxes holding both qubits at their
    transition minima versus coupler flux."""
    pts = sweet_spot_contour(_landscape_model(cfg), _phi_c_grid(cfg))
    rows = [("phi_c", "phi_a", "phi_b", "gradient_norm_GHz_per_Phi0")]
    for p in pts:
        rows.append((_g(p.flux.phi_c), _g(p.flux.phi_a, ".12g"),
                     _g(p.flux.phi_b, ".12g"), _g(p.gradient_norm, ".3g")))
    em = _Emitter(cfg, "contour")
    em.add_json("contour.json", {
        "config": _echo(cfg),
        "n_points": len(pts),
        "phi_a_range": [float(min(p.flux.phi_a for p in pts)),
                        float(max(p.flux.phi_a for p in pts))],
        "phi_b_range": [float(min(p.flux.phi_b for p in pts)),
                        float(max(p.flux.phi_b for p in pts))],
        "max_gradient_norm": float(max(p.gradient_norm for p in pts)),
    })
    em.add_csv("contour.csv", rows)
    em.flush()


@cli.command("zz-map")
@click.pass_obj
def zz_map(cfg):
    """Static and full ZZ maps over the (phi_s, phi_c) plane around the
    sweet-spot contour, plus the off position and cancellation curve."""
    fl = cfg.flux
    phi_s = phi_s_rows(fl["map_phi_s_inner"], fl["map_phi_s_outer"],
                       fl["map_phi_s_steps"])
    phi_c = np.linspace(fl["map_phi_c_start"], fl["map_phi_c_stop"],
                        fl["map_phi_c_points"])
    land = zz_landscape(_landscape_model(cfg), phi_s, phi_c)
    rows = [("phi_s", "phi_c", "zeta_s_kHz", "zeta_tot_kHz")]
    for i, s in enumerate(land.phi_s):
        for j, c in enumerate(land.phi_c):
            rows.append((_g(s), _g(c), _g(land.zeta_s[i, j], ".8g"),
                         _g(land.zeta_tot[i, j], ".8g")))
    em = _Emitter(cfg, "zz-map")
    em.add_json("zz_map.json", {"config": _echo(cfg), **land.summary()})
    em.add_csv("zz_map.csv", rows)
    em.flush()


@cli.command("coupling-sweep")
@click.pass_obj
def coupling_sweep(cfg):
    """Effective two-qubit parameters (J, zeta, qubit frequencies) along
    the sweet-spot contour over the coupler-flux grid."""
    model = _landscape_model(cfg)
    pts = sweet_spot_contour(model, _phi_c_grid(cfg))
    rows = [("phi_c", "j_MHz", "zeta_kHz", "omega_a_MHz", "omega_b_MHz",
             "Omega_a_MHz", "Omega_b_MHz")]
    j_values = []
    for p in pts:
        eff = extract_effective_params(model, p.flux)
        j_values.append(eff.j)
        rows.append((_g(p.flux.phi_c), _g(eff.j, ".8g"), _g(eff.zeta, ".8g"),
                     _g(eff.omega_a, ".10g"), _g(eff.omega_b, ".10g"),
                     _g(eff.Omega_a, ".6g"), _g(eff.Omega_b, ".6g")))
    off = find_off_position(model)
    em = _Emitter(cfg, "coupling-sweep")
    em.add_json("coupling_sweep.json", {
        "config": _echo(cfg),
        "off_position": _flux_dict(off),
        "j_mhz_range": [float(min(j_values)), float(max(j_values))],
    })
    em.add_csv("coupling_sweep.csv", rows)
    em.flush()


@cli.command()
@click.option("--branch", type=click.Choice(["difference", "sum"]),
              default="difference", show_default=True,
              help="difference drives |01><->|10>, sum drives |00><->|11>.")
@click.option("--amplitude-mhz", type=float, default=2.0, show_default=True)
@click.option("--span-mhz", type=float, default=8.0, show_default=True,
              help="Full drive-frequency span around the branch center.")
@click.option("--freq-points", type=int, default=11, show_default=True)
@click.option("--t-max-ns", type=float, default=1000.0, show_default=True)
@click.option("--time-points", type=int, default=161, show_default=True)
@click.option("--envelope", type=click.Choice(["flat", "gaussian"]),
              default="flat", show_default=True)
@click.pass_obj
def chevron(cfg, branch, amplitude_mhz, span_mhz, freq_points, t_max_ns,
            time_points, envelope):
    """Population map versus drive frequency and duration for one
    parametric branch of the coupler drive."""
    center = (abs(cfg.f_b_mhz - cfg.f_a_mhz) if branch == "difference"
              else cfg.f_a_mhz + cfg.f_b_mhz)
    f_d = center + np.linspace(-0.5 * span_mhz, 0.5 * span_mhz, freq_points)
    t = np.linspace(0.0, t_max_ns, time_points)
    cmap = chevron_scan(cfg.f_a_mhz, cfg.f_b_mhz, amplitude_mhz, f_d, t,
                        branch=branch, envelope=envelope,
                        theta_ce=cfg.theta_ce, threads=cfg.threads)
    k = int(np.argmin(np.abs(cmap.f_d_mhz - center)))
    target = 1 if branch == "difference" else 3
    resonant_mhz = fit_oscillation_frequency(
        cmap.t_ns, cmap.populations[k, :, target])

    rows = [("f_d_MHz", "t_ns", "P00", "P01", "P10", "P11")]
    for i, fd in enumerate(cmap.f_d_mhz):
        for m, tn in enumerate(cmap.t_ns):
            rows.append((_g(fd), _g(tn),
                         *(_g(cmap.populations[i, m, s], ".8g")
                           for s in range(4))))
    em = _Emitter(cfg, "chevron")
    em.add_json("chevron.json", {
        "config": _echo(cfg),
        "branch": branch,
        "drive_center_mhz": float(center),
        "amplitude_mhz": float(amplitude_mhz),
        "envelope": envelope,
        "resonant_oscillation_mhz": float(resonant_mhz),
    })
    em.add_csv("chevron.csv", rows)
    em.flush()


def _wrap_deg(delta_rad):
    return float(np.degrees((delta_rad + np.pi) % (2.0 * np.pi) - np.pi))


@cli.command()
@click.option("--n-units", type=int, default=322, show_default=True,
              help="Gate repetitions per phase-calibration point.")
@click.option("--max-reps", type=int, default=402, show_default=True,
              help="Final repetition count of the rotation-angle search.")
@click.pass_obj
def calibrate(cfg, n_units, max_reps):
    """Closed-loop calibration simulators: gate-phase recovery,
    rotation-angle tune-up, and crosstalk compensation."""
    rng = np.random.default_rng(cfg.seed)

    # phase recovery: hide random gate phases, recover them blind; the
    # single-qubit phases stay within the protocol's +/- pi/4 capture
    # range around phi_11
    phi_11, phi_d = rng.uniform(-np.pi, np.pi, size=2)
    off_01, off_10 = rng.uniform(-0.6, 0.6, size=2)
    hidden = GatePhases.with_phi_11(theta=np.pi / 4, phi_01=phi_11 + off_01,
                                    phi_10=phi_11 + off_10, phi_d=phi_d,
                                    phi_11=phi_11)
    recovered = calibrate_phases(bswap_like_matrix(hidden), n_units=n_units)
    names = ("phi_01", "phi_10", "phi_d", "phi_11")
    errors = {n: _wrap_deg(getattr(recovered, n) - getattr(hidden, n))
              for n in names}

    # rotation angle: hide a scale error on the amplitude-to-angle map
    scale_error = float(rng.uniform(-0.02, 0.02))

    def family(amplitude):
        theta = (np.pi / 4) * amplitude * (1.0 + scale_error)
        return bswap_like_matrix(GatePhases(theta=theta))

    amplitude, theta, uncertainty = calibrate_rotation_angle(
        family, 1.0, max_reps=max_reps)
    theta_true = (np.pi / 4) * (1.0 + scale_error)

    # crosstalk compensation against the configured spurious-flux level
    model = _model(cfg)
    kappa_a = 2e3 * np.pi * cfg.circuit.qubit_a.e_l * abs(
        model.qubit_phi_01("a"))
    kappa_b = 2e3 * np.pi * cfg.circuit.qubit_b.e_l * abs(
        model.qubit_phi_01("b"))
    injected = CrosstalkModel(
        xi_a=cfg.xi_over_2pi[0], xi_b=cfg.xi_over_2pi[1],
        kappa_a_mhz_per_phi0=kappa_a, kappa_b_mhz_per_phi0=kappa_b)
    comp = calibrate_crosstalk_compensation(injected, cfg.f_a_mhz,
                                            cfg.f_b_mhz)

    em = _Emitter(cfg, "calibrate")
    em.add_json("calibrate.json", {
        "config": _echo(cfg),
        "phase_recovery": {
            "hidden_deg": {n: float(np.degrees(getattr(hidden, n)))
                           for n in names},
            "recovered_deg": {n: float(np.degrees(getattr(recovered, n)))
                              for n in names},
            "errors_deg": errors,
            "max_error_deg": max(abs(v) for v in errors.values()),
        },
        "rotation_angle": {
            "injected_scale_error": scale_error,
            "calibrated_amplitude": float(amplitude),
            "theta_at_nominal_rad": float(theta),
            "theta_error_rad": float(abs(theta - theta_true)),
            "uncertainty_rad": float(uncertainty),
        },
        "crosstalk_compensation": {
            "injected": {"xi_a": float(injected.xi_a),
                         "xi_b": float(injected.xi_b),
                         "kappa_a_mhz_per_phi0": float(kappa_a),
                         "kappa_b_mhz_per_phi0": float(kappa_b)},
            "recovered": {"comp_phase_a": float(comp.comp_phase_a),
                          "comp_amp_a": float(comp.comp_amp_a),
                          "comp_phase_b": float(comp.comp_phase_b),
                          "comp_amp_b": float(comp.comp_amp_b)},
        },
    })
    em.flush()


@cli.command("error-budget")
@click.option("--analytic-only", is_flag=True,
              help="Skip the Lindblad and rotating-frame simulations.")
@click.pass_obj
def error_budget(cfg, analytic_only):
    """Per-gate error budget: decoherence, beyond-RWA, carrier-envelope,
    and crosstalk channels, analytic beside simulated."""
    rates = DecoherenceRates.from_coherence_times(
        cfg.t1_us[0], cfg.t2_us[0], cfg.t1_us[1], cfg.t2_us[1])
    tau = {"iswap": cfg.gate_tau_ns("iswap"),
           "bswap": cfg.gate_tau_ns("bswap"),
           "x90a": cfg.gate_tau_ns("x_a"),
           "x90b": cfg.gate_tau_ns("x_b")}
    budget = assemble_error_budget(rates, tau_ns_by_gate=tau,
                                   f_a_mhz=cfg.f_a_mhz, f_b_mhz=cfg.f_b_mhz,
                                   simulate=not analytic_only)
    budget.validate()
    em = _Emitter(cfg, "error-budget")
    em.add_json("error_budget.json",
                {"config": _echo(cfg), **budget.to_json_dict()})
    em.add_text("error_budget.txt", budget.table_text() + "\n")
    em.flush()


@cli.command()
@click.option("--gate", type=click.Choice(["iswap", "bswap"]),
              default="bswap", show_default=True)
@click.option("--samples", type=int, default=0, show_default=True,
              help="Measurement shots per sequence; 0 = exact populations.")
@click.pass_obj
def xeb(cfg, gate, samples):
    """Reference and interleaved cross-entropy benchmarking of one
    two-qubit gate under the configured depolarizing noise."""
    noise = NoiseModel(kind="depolarizing", p_layer=cfg.bench_p_layer,
                       p_gate=cfg.bench_p_layer, samples=samples)
    pair = run_xeb_pair(gate, cfg.bench_depths, cfg.bench_trials, cfg.seed,
                        noise)
    em = _Emitter(cfg, "xeb")
    em.add_json("xeb.json", {"config": _echo(cfg),
                             **pair.to_json_dict()})
    em.add_csv("reference.csv", pair.reference.to_rows())
    em.add_csv("interleaved.csv", pair.interleaved.to_rows())
    em.flush()


@cli.command("fit-spectroscopy")
@click.option("--data", "data_path", type=click.Path(exists=True),
              required=True, metavar="FILE",
              help="CSV of flux_a,flux_b,flux_c,frequency_GHz,transition_tag.")
@click.option("--free", "free_params", multiple=True,
              default=("qubit_a.e_j", "qubit_b.e_j"), show_default=True,
              help="Dotted circuit-parameter path to fit (repeatable).")
@click.pass_obj
def fit_spectroscopy_cmd(cfg, data_path, free_params):
    """Fit circuit parameters to measured spectroscopy points."""
    try:
        data = read_spectroscopy_csv(data_path)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad spectroscopy file {data_path}: {exc}")
    if not data:
        raise ConfigError(f"spectroscopy file {data_path} has no rows")
    fit = fit_spectroscopy(data, cfg.circuit, free_params,
                           keep=cfg.landscape_keep,
                           ho_dim=cfg.landscape_ho_dim, threads=cfg.threads)
    if not fit.converged:
        raise FitError(
            f"spectroscopy fit did not converge in {fit.n_iterations} "
            f"iterations (rms {fit.rms_residual_ghz:.3e} GHz)",
            best=fit)
    em = _Emitter(cfg, "fit-spectroscopy")
    em.add_json("spectroscopy_fit.json",
                {"config": _echo(cfg), **fit.report()})
    em.flush()


def main(argv=None):
    """Entry point with the documented exit-code contract."""
    try:
        cli.main(args=argv, prog_name="fluxcoupler", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except (ConfigError, ValueError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except np.linalg.LinAlgError as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        return 2
    except FluxcouplerError as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

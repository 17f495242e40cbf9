"""Command-line surface: run / ensemble / check / measure / em-order.

Exit codes are stable: 0 ok, 2 config error, 3 blow-up, 4 property failure,
5 I/O or archive error.  The output directory can be overridden by the
``CHNS_OUTPUT_DIR`` environment variable or the ``--out`` flag.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
from numpy.random import Generator, Philox

from . import __version__
from .checkpoint import CheckpointError, read_checkpoint, write_checkpoint
from .config import (
    ConfigError,
    RunConfig,
    RunManifest,
    load_manifest,
    now,
    parse_config,
    parse_config_text,
    serialize_config,
    write_manifest,
)
from .diagnostics import (
    ObservableSeries,
    energy_report,
    read_observables_csv,
    state_norms,
    write_observables_csv,
)
from .integrator import (
    BlowUpError,
    ScalarObserver,
    SystemState,
    em_order_probe,
    simulate,
    step as advance_step,
)
from .measure import (
    ObservableSpec,
    convergence_diagnostic,
    kb_average,
    tightness_profile,
)
from .noise import check_conditions, make_noise_model
from .spectral import (
    GridSpec,
    SpectralField,
    advect,
    capillary_integrand,
    chemical_potential,
    inner,
    l2_norm,
    lattice_modes,
    leray_project,
    max_divergence,
    scalar_advection,
    spatial_mean,
    zero_field,
    zero_velocity,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_PROPERTY = 4
EXIT_IO = 5

_OUTPUT_ENV = "CHNS_OUTPUT_DIR"


# initial states -------------------------------------------------------------


def initial_state(cfg: RunConfig) -> SystemState:
    """Deterministic initial data derived from the noise seed."""
    grid = cfg.grid
    if cfg.initial.kind == "zero":
        phi = zero_field(grid)
        phi.coeffs[0, 0] = cfg.initial.phi_mean
        return SystemState(u=zero_velocity(grid), phi=phi)
    gen = Generator(Philox(key=[cfg.noise.seed & ((1 << 64) - 1), 0xC0FFEE]))
    phi = _random_smooth_field(grid, gen, cfg.initial.amplitude, cfg.initial.max_mode)
    phi.coeffs[0, 0] = cfg.initial.phi_mean
    raw_x = _random_smooth_field(grid, gen, cfg.initial.amplitude, cfg.initial.max_mode)
    raw_y = _random_smooth_field(grid, gen, cfg.initial.amplitude, cfg.initial.max_mode)
    u = leray_project(raw_x, raw_y)
    return SystemState(u=u, phi=phi)


def _random_smooth_field(
    grid: GridSpec, gen: Generator, amplitude: float, max_mode: int
) -> SpectralField:
    """Random band-limited field with 1/(1+|m|^2) spectral decay, zero mean."""
    f = zero_field(grid)
    n = grid.n
    cap = min(max_mode, grid.max_mode)
    for mx in range(-cap, cap + 1):
        for my in range(0, cap + 1):
            if my == 0 and mx <= 0:
                continue
            z = (gen.standard_normal() + 1j * gen.standard_normal()) / np.sqrt(2.0)
            c = amplitude * z / (1.0 + mx * mx + my * my)
            f.coeffs[mx % n, my % n] = c
            f.coeffs[(-mx) % n, (-my) % n] = np.conj(c)
    return f


# observables ----------------------------------------------------------------


def _standard_observers(cfg: RunConfig, stride: int) -> list[ScalarObserver]:
    params = cfg.physics
    return [
        ScalarObserver("u_l2", lambda s: state_norms(s).u_l2, stride),
        ScalarObserver("grad_phi_l2", lambda s: state_norms(s).grad_phi_l2, stride),
        ScalarObserver("phi_h1", lambda s: state_norms(s).phi_h1, stride),
        ScalarObserver("state_norm", lambda s: state_norms(s).state, stride),
        ScalarObserver("energy_total", lambda s: energy_report(s, params).total, stride),
        ScalarObserver("energy_kinetic", lambda s: energy_report(s, params).kinetic, stride),
        ScalarObserver("phi_mean", lambda s: spatial_mean(s.phi), stride),
        ScalarObserver("max_divergence", lambda s: max_divergence(s.u), stride),
    ]


def _series_with_initial(obs: ScalarObserver, state0: SystemState) -> ObservableSeries:
    fn = obs.fn
    return ObservableSeries(
        name=obs.name,
        times=np.array([state0.t] + obs.times),
        values=np.array([float(fn(state0))] + obs.values),
    )


# run ------------------------------------------------------------------------


def _run_single(cfg: RunConfig, out_dir: Path, member: int = 0, quiet: bool = False) -> Path:
    """One trajectory: observables CSV, checkpoints, manifest. Returns CSV path."""
    out_dir.mkdir(parents=True, exist_ok=True)
    ckpt_dir = out_dir / "checkpoints"
    ckpt_dir.mkdir(exist_ok=True)
    noise_model = make_noise_model(
        cfg.grid, cfg.noise.k_modes, cfg.noise.sigma0, cfg.noise.sigma_decay,
        cfg.noise.c0, cfg.noise.c1_mult, cfg.noise.seed,
    )
    state0 = initial_state(cfg)
    observers = _standard_observers(cfg, cfg.time.observe_every)
    checkpoints: list[str] = []

    def sink(state: SystemState) -> None:
        path = ckpt_dir / f"step_{state.step:010d}.chk"
        write_checkpoint(path, state, cfg.physics, cfg.noise.k_modes)
        checkpoints.append(path.name)

    sink(state0)
    result = simulate(
        state0, cfg.physics, noise_model, cfg.scheme(), cfg.time.horizon,
        observers, member=member,
        checkpoint_every=cfg.time.checkpoint_every, checkpoint_sink=sink,
    )
    final_already_sunk = result.final.step == state0.step or (
        cfg.time.checkpoint_every > 0 and result.final.step % cfg.time.checkpoint_every == 0
    )
    if not final_already_sunk:
        sink(result.final)
    csv_path = out_dir / "observables.csv"
    write_observables_csv(csv_path, [_series_with_initial(o, state0) for o in observers])
    if not quiet:
        print(f"wrote {csv_path} ({len(observers[0].times) + 1} rows)")
    return csv_path


def _load_run_config(path: str) -> RunConfig:
    """Accept either an INI config or a manifest JSON embedding one."""
    p = Path(path)
    if p.suffix == ".json":
        manifest = load_manifest(p)
        return parse_config_text(manifest.config_text, str(p))
    return parse_config(p)


def _effective_out(cfg: RunConfig, args) -> Path:
    if args.out:
        return Path(args.out)
    env = os.environ.get(_OUTPUT_ENV)
    if env:
        return Path(env)
    return Path(cfg.output.directory)


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if getattr(args, "seed_override", None) is not None:
        cfg = replace(cfg, noise=replace(cfg.noise, seed=args.seed_override))
    return cfg


def cmd_run(args) -> int:
    cfg = _apply_overrides(_load_run_config(args.config), args)
    out_dir = _effective_out(cfg, args)
    manifest = RunManifest(
        config_text=serialize_config(cfg), command="run", members=1, start_time=now()
    )
    try:
        _run_single(cfg, out_dir, member=0, quiet=args.quiet)
    except BlowUpError as err:
        manifest.status = f"blow-up: {err}"
        manifest.end_time = now()
        write_manifest(out_dir / "manifest.json", manifest)
        print(f"error: {err}", file=sys.stderr)
        return EXIT_BLOWUP
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO
    manifest.end_time = now()
    manifest.checkpoints = sorted(p.name for p in (out_dir / "checkpoints").glob("*.chk"))
    write_manifest(out_dir / "manifest.json", manifest)
    return EXIT_OK


# ensemble ---------------------------------------------------------------------


def _member_task(config_text: str, member: int, out_dir: str) -> tuple[int, str]:
    cfg = parse_config_text(config_text)
    path = _run_single(cfg, Path(out_dir), member=member, quiet=True)
    return member, str(path)


def cmd_ensemble(args) -> int:
    cfg = _apply_overrides(_load_run_config(args.config), args)
    out_dir = _effective_out(cfg, args)
    out_dir.mkdir(parents=True, exist_ok=True)
    members = args.members
    if members < 1:
        print("error: --members must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    config_text = serialize_config(cfg)
    manifest = RunManifest(
        config_text=config_text, command="ensemble", members=members, start_time=now()
    )
    member_dirs = [out_dir / f"member_{m:03d}" for m in range(members)]
    failures: dict[int, str] = {}
    jobs = [(config_text, m, str(member_dirs[m])) for m in range(members)]
    if args.workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.workers) as pool:
            futures = {pool.submit(_member_task, *job): job[1] for job in jobs}
            for fut in concurrent.futures.as_completed(futures):
                m = futures[fut]
                try:
                    fut.result()
                except BlowUpError as err:
                    failures[m] = f"blow-up: {err}"
                except Exception as err:  # noqa: BLE001 - reported per member
                    failures[m] = str(err)
    else:
        for job in jobs:
            try:
                _member_task(*job)
            except BlowUpError as err:
                failures[job[1]] = f"blow-up: {err}"
            except Exception as err:  # noqa: BLE001 - reported per member
                failures[job[1]] = str(err)
    for m in sorted(failures):
        print(f"member {m}: {failures[m]}", file=sys.stderr)
    if failures:
        manifest.status = f"{len(failures)} member(s) failed"
        manifest.end_time = now()
        write_manifest(out_dir / "manifest.json", manifest)
        return EXIT_BLOWUP if any("blow-up" in v for v in failures.values()) else EXIT_IO

    # merge in fixed member order, independent of worker scheduling
    all_series = [read_observables_csv(d / "observables.csv") for d in member_dirs]
    names = [s.name for s in all_series[0]]
    times = all_series[0][0].times
    merged = []
    for j, name in enumerate(names):
        stack = np.stack([series[j].values for series in all_series], axis=0)
        merged.append(ObservableSeries(name=name, times=times, values=stack.mean(axis=0)))
    write_observables_csv(out_dir / "ensemble_mean.csv", merged)

    # member-mean running integral of the squared state norm
    integrals = []
    for series in all_series:
        by_name = {s.name: s for s in series}
        sq = by_name["state_norm"].values ** 2
        t = by_name["state_norm"].times
        run = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(t) * (sq[1:] + sq[:-1]))])
        integrals.append(run)
    mean_int = np.stack(integrals, axis=0).mean(axis=0)
    write_observables_csv(
        out_dir / "moment_integral.csv",
        [ObservableSeries(name="mean_integral_state_sq", times=times, values=mean_int)],
    )
    manifest.end_time = now()
    write_manifest(out_dir / "manifest.json", manifest)
    if not args.quiet:
        print(f"ensemble of {members} members -> {out_dir}")
    return EXIT_OK


# check ------------------------------------------------------------------------


def _random_states(cfg: RunConfig, count: int, amplitude: float = 0.3) -> list[SystemState]:
    gen = Generator(Philox(key=[cfg.noise.seed & ((1 << 64) - 1), 0x5EED]))
    states = []
    cap = max(2, cfg.grid.max_mode // 2)
    for _ in range(count):
        phi = _random_smooth_field(cfg.grid, gen, amplitude, cap)
        u = leray_project(
            _random_smooth_field(cfg.grid, gen, amplitude, cap),
            _random_smooth_field(cfg.grid, gen, amplitude, cap),
        )
        states.append(SystemState(u=u, phi=phi))
    return states


def cmd_check(args) -> int:
    cfg = _apply_overrides(_load_run_config(args.config), args)
    grid, params = cfg.grid, cfg.physics
    rows: list[tuple[bool, str]] = []

    def add(ok: bool, label: str, detail: str) -> None:
        rows.append((ok, f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"))

    # trilinear cancellations and the transfer duality on random triples
    gen = Generator(Philox(key=[cfg.noise.seed & ((1 << 64) - 1), 0xCAFE]))
    cap = max(2, min(grid.max_mode // 2, grid.n // 4 - 1))
    worst_b0 = worst_b2 = worst_dual = 0.0
    for _ in range(args.samples):
        u = leray_project(
            _random_smooth_field(grid, gen, 0.5, cap), _random_smooth_field(grid, gen, 0.5, cap)
        )
        v = leray_project(
            _random_smooth_field(grid, gen, 0.5, cap), _random_smooth_field(grid, gen, 0.5, cap)
        )
        phi = _random_smooth_field(grid, gen, 0.5, cap)
        b0 = abs(inner(advect(u, v), v)) / max(l2_norm(u) * l2_norm(v) ** 2, 1e-30)
        b2 = abs(inner(scalar_advection(u, phi), phi)) / max(l2_norm(u) * l2_norm(phi) ** 2, 1e-30)
        mu = chemical_potential(phi, params)
        lhs = inner(scalar_advection(u, phi), mu)
        rhs = inner(capillary_integrand(phi, params), u)
        dual = abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-30)
        worst_b0, worst_b2 = max(worst_b0, b0), max(worst_b2, b2)
        worst_dual = max(worst_dual, dual)
    add(worst_b0 <= 1e-11, "convection cancellation", f"max |<(u.grad)v, v>| = {worst_b0:.3g} (rel)")
    add(worst_b2 <= 1e-11, "advection cancellation", f"max |<u.grad phi, phi>| = {worst_b2:.3g} (rel)")
    add(worst_dual <= 1e-10, "transfer duality", f"max relative defect = {worst_dual:.3g}")

    # short driven run: conservation, divergence, finite values
    noise_model = make_noise_model(
        grid, cfg.noise.k_modes, cfg.noise.sigma0, cfg.noise.sigma_decay,
        cfg.noise.c0, cfg.noise.c1_mult, cfg.noise.seed,
    )
    state = initial_state(cfg)
    mean0 = spatial_mean(state.phi)
    scheme = cfg.scheme()
    steps = min(200, max(2, int(round(cfg.time.horizon / cfg.time.dt))))
    max_mass = max_div = 0.0
    sampled = [state.copy()]
    try:
        for _ in range(steps):
            state, _rec = advance_step(state, params, noise_model, scheme)
            max_mass = max(max_mass, abs(spatial_mean(state.phi) - mean0))
            max_div = max(max_div, max_divergence(state.u))
            if state.step % max(1, steps // 4) == 0:
                sampled.append(state.copy())
    except BlowUpError as err:
        add(False, "short driven run", str(err))
    else:
        add(max_mass <= 1e-12, "phase-mean conservation", f"max drift = {max_mass:.3g} over {steps} steps")
        add(max_div <= 1e-12, "divergence-freedom", f"max |k.u_hat| = {max_div:.3g}")

    # deterministic energy dissipation at the configured resolution
    det_state = initial_state(cfg)
    energy = energy_report(det_state, params).total
    worst_rise = 0.0
    try:
        for _ in range(min(200, steps)):
            det_state, _rec = advance_step(det_state, params, None, scheme)
            e_next = energy_report(det_state, params).total
            worst_rise = max(worst_rise, (e_next - energy) / max(abs(energy), 1e-30))
            energy = e_next
    except BlowUpError as err:
        add(False, "deterministic dissipation", str(err))
    else:
        add(worst_rise <= 1e-10, "deterministic dissipation", f"max relative rise = {worst_rise:.3g}")

    # noise growth/Lipschitz/smallness/mobility conditions
    report = check_conditions(noise_model, params, sampled + _random_states(cfg, 4))
    for line in report.lines():
        rows.append((line.startswith("[PASS]"), line))

    for _ok, line in rows:
        print(line)
    return EXIT_OK if all(ok for ok, _ in rows) else EXIT_PROPERTY


# measure ----------------------------------------------------------------------


def _parse_observables_spec(path: Path, params) -> list[ObservableSpec]:
    import configparser

    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        parser.read_string(path.read_text(), source=str(path))
    except (OSError, configparser.Error) as err:
        raise ConfigError(f"cannot parse observables spec {path}: {err}") from err
    specs = []
    for section in parser.sections():
        if not section.startswith("observable:"):
            raise ConfigError(f"{path}: unexpected section [{section}]")
        name = section.split(":", 1)[1]
        kind = parser.get(section, "kind", fallback="state_norm")
        mode_raw = parser.get(section, "mode", fallback="1 0").split()
        specs.append(
            ObservableSpec(
                kind=kind,
                name=name,
                which=parser.get(section, "which", fallback="state_sq"),
                component=parser.get(section, "component", fallback="phi"),
                mode=(int(mode_raw[0]), int(mode_raw[1])),
                scale=parser.getfloat(section, "scale", fallback=1.0),
                params=params,
            )
        )
    if not specs:
        raise ConfigError(f"{path}: no [observable:*] sections")
    return specs


def _load_archive(archive: Path) -> tuple[list[list[tuple[float, SystemState]]], RunConfig]:
    manifest_path = archive / "manifest.json"
    if not manifest_path.exists():
        raise CheckpointError(f"missing manifest {manifest_path}")
    cfg = parse_config_text(load_manifest(manifest_path).config_text, str(manifest_path))
    member_dirs = sorted(archive.glob("member_*")) or [archive]
    members = []
    for d in member_dirs:
        ckpts = sorted((d / "checkpoints").glob("*.chk"))
        if not ckpts:
            raise CheckpointError(f"no checkpoints under {d / 'checkpoints'}")
        samples = []
        for p in ckpts:
            state, _params, _k = read_checkpoint(p, dealias_pad=cfg.grid.dealias_pad)
            samples.append((state.t, state))
        members.append(samples)
    return members, cfg


def cmd_measure(args) -> int:
    archive = Path(args.archive)
    try:
        members, cfg = _load_archive(archive)
        specs = _parse_observables_spec(Path(args.observables), cfg.physics)
    except (CheckpointError, ConfigError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO if isinstance(err, CheckpointError) else EXIT_CONFIG

    t_lo = max(m[0][0] for m in members)
    t_hi = min(m[-1][0] for m in members)
    t0 = max(cfg.time.burn_in, t_lo)
    span = t_hi - t0
    eps = 1e-9 * max(1.0, abs(t_hi))
    if span <= 0.0:
        print(f"error: archive covers [{t_lo:.6g}, {t_hi:.6g}] but burn-in is {t0:.6g}",
              file=sys.stderr)
        return EXIT_IO
    quarter = span / 4.0
    windows = [
        (t0, t_hi + eps),
        (t0, t0 + span / 2.0),
        (t0 + span / 2.0, t_hi + eps),
        (t0 + quarter, t0 + 2.0 * quarter),
        (t0 + 2.0 * quarter, t0 + 4.0 * quarter + eps),
    ]
    out_dir = Path(args.out) if args.out else archive
    rows = ["observable,window_start,window_end,mean,variance,n_samples"]
    summary = [f"archive: {archive}", f"members: {len(members)}", f"window base: [{t0:.6g}, {t_hi:.6g}]"]
    try:
        for spec in specs:
            measures = [kb_average(members, spec, a, b) for a, b in windows]
            for m in measures:
                rows.append(
                    f"{m.name},{m.t_start:.17g},{m.t_end:.17g},{m.mean:.17g},{m.variance:.17g},{m.n_samples}"
                )
            comparison = convergence_diagnostic(
                members, spec, [windows[3], windows[4]], threshold=args.threshold
            )
            summary.append(
                f"{spec.name}: window means {comparison.means.tolist()} "
                f"rel. discrepancy {comparison.max_relative_discrepancy:.3g} "
                f"{'stationary' if comparison.stationary else 'NOT stationary'}"
            )
            hist = measures[0]
            hist_rows = ["bin_left,bin_right,count"] + [
                f"{hist.bin_edges[i]:.17g},{hist.bin_edges[i + 1]:.17g},{hist.counts[i]}"
                for i in range(len(hist.counts))
            ]
            (out_dir / f"hist_{spec.name}.csv").write_text("\n".join(hist_rows) + "\n")
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO

    norms = [kb_average(members, ObservableSpec(kind="state_norm", which="state_sq"), t0, t_hi + eps)]
    scale = float(np.sqrt(max(norms[0].mean, 1e-30)))
    radii = [scale * f for f in (0.5, 1.0, 2.0, 4.0, 8.0, 16.0)]
    window_samples = [[(t, s) for t, s in m if t0 <= t <= t_hi] for m in members]
    profile = tightness_profile(window_samples, radii)
    tight_rows = ["R,exit_fraction,envelope"] + [
        f"{r:.17g},{f:.17g},{e:.17g}"
        for r, f, e in zip(profile.radii, profile.exit_fraction, profile.envelope)
    ]
    (out_dir / "tightness.csv").write_text("\n".join(tight_rows) + "\n")
    summary.append(
        f"tightness: chebyshev holds = {profile.chebyshev_holds()}, "
        f"largest-R exit fraction = {profile.exit_fraction[-1]:.3g}"
    )
    (out_dir / "measure_report.csv").write_text("\n".join(rows) + "\n")
    (out_dir / "measure_summary.txt").write_text("\n".join(summary) + "\n")
    if not args.quiet:
        print("\n".join(summary))
    return EXIT_OK


# em-order ---------------------------------------------------------------------


def cmd_em_order(args) -> int:
    cfg = _apply_overrides(_load_run_config(args.config), args)
    grid = cfg.grid
    dts = [float(x) for x in args.dt_list.split(",")]
    mode = lattice_modes(1)[0]

    additive = make_noise_model(grid, 1, args.sigma, 0.0, c0=1.0, c1=0.0, seed=cfg.noise.seed)
    quiet_state = SystemState(u=zero_velocity(grid), phi=zero_field(grid))
    lin_scheme = replace(cfg.scheme(), convection=False, stabilization=0.0)
    report_lin = em_order_probe(
        quiet_state, cfg.physics, additive, lin_scheme, dts,
        horizon=args.horizon, members=args.members, mode=mode,
    )
    print("additive, linear regime:")
    print("\n".join(report_lin.lines()))

    mult = make_noise_model(
        grid, cfg.noise.k_modes, cfg.noise.sigma0, cfg.noise.sigma_decay,
        cfg.noise.c0, max(cfg.noise.c1_mult, 0.25), cfg.noise.seed,
    )
    start = initial_state(cfg)
    report_nl = em_order_probe(
        start, cfg.physics, mult, cfg.scheme(), dts,
        horizon=args.horizon, members=args.members, mode=None,
    )
    print("multiplicative, nonlinear regime:")
    print("\n".join(report_nl.lines()))
    return EXIT_OK


# entry point --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chns",
        description="Pseudo-spectral phase-field / flow simulator with "
        "invariant-measure diagnostics",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="INI config or manifest JSON")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--seed-override", type=int, default=None)
        p.add_argument("--quiet", action="store_true")

    p_run = sub.add_parser("run", help="single trajectory")
    common(p_run)
    p_run.set_defaults(fn=cmd_run)

    p_ens = sub.add_parser("ensemble", help="member trajectories with derived seeds")
    common(p_ens)
    p_ens.add_argument("--members", type=int, default=4)
    p_ens.add_argument("--workers", type=int, default=1)
    p_ens.set_defaults(fn=cmd_ensemble)

    p_chk = sub.add_parser("check", help="property and noise-condition checks")
    common(p_chk)
    p_chk.add_argument("--samples", type=int, default=20, help="random field triples")
    p_chk.set_defaults(fn=cmd_check)

    p_meas = sub.add_parser("measure", help="time-averaged measures over an archive")
    p_meas.add_argument("--archive", required=True, help="run or ensemble output directory")
    p_meas.add_argument("--observables", required=True, help="observables spec (INI)")
    p_meas.add_argument("--out", default=None)
    p_meas.add_argument("--threshold", type=float, default=0.05)
    p_meas.add_argument("--quiet", action="store_true")
    p_meas.set_defaults(fn=cmd_measure)

    p_em = sub.add_parser("em-order", help="strong-order refinement probe")
    common(p_em)
    p_em.add_argument("--dt-list", default="0.04,0.02,0.01")
    p_em.add_argument("--horizon", type=float, default=0.5)
    p_em.add_argument("--members", type=int, default=8)
    p_em.add_argument("--sigma", type=float, default=0.2)
    p_em.set_defaults(fn=cmd_em_order)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except BlowUpError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_BLOWUP
    except CheckpointError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

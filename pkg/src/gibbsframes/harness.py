"""Experiment runner: executes a configuration, writes tables, then a manifest.

Each command writes its tables into ``config.output``.  The manifest
(``manifest.json``) is removed when a run starts and written only after
every table is in place, so its presence means the outputs are complete.
Table bytes depend only on the configuration: per-path random streams are
keyed by path id and results are merged in path-id order, whatever the
number of workers.
"""

import dataclasses
import hashlib
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import frames, loops, nls, partitions, tables, transport
from .config import (
    AnalyzeConfig,
    EvolveNlsConfig,
    JkConfig,
    SampleLoopsConfig,
    SimulateFramesConfig,
    table_meta,
)
from .streams import stream

MANIFEST = "manifest.json"
INDEPENDENCE_NOTE = (
    "independence of longitude and colatitude is tested with Pearson chi-square "
    "on equal-probability bins, in place of a kernel (HSIC) test"
)


@dataclass(frozen=True)
class ResultManifest:
    command: str
    config: dict
    outputs: dict  # relative path -> sha256
    content_hash: str
    wall_time_s: float
    per_worker_paths: list
    notes: list
    path: str


def _content_hash(outputs):
    h = hashlib.sha256()
    for name in sorted(outputs):
        h.update(f"{name}\t{outputs[name]}\n".encode())
    return h.hexdigest()


def _config_echo(cfg):
    out = {}
    for k, v in dataclasses.asdict(cfg).items():
        out[k] = list(v) if isinstance(v, tuple) else (v if v != math.inf else "inf")
    return out


def run_experiment(cfg):
    """Run one configured command and return its manifest."""
    runners = {
        SampleLoopsConfig: _run_sample_loops,
        EvolveNlsConfig: _run_evolve_nls,
        SimulateFramesConfig: _run_simulate_frames,
        AnalyzeConfig: _run_analyze,
        JkConfig: _run_jk,
    }
    runner = runners[type(cfg)]
    out_dir = cfg.output
    if out_dir is None:
        raise ValueError("an output directory is required")
    os.makedirs(out_dir, exist_ok=True)
    manifest_path = os.path.join(out_dir, MANIFEST)
    if os.path.exists(manifest_path):
        os.unlink(manifest_path)
    t0 = time.perf_counter()
    written, per_worker, notes = runner(cfg, out_dir)
    wall = time.perf_counter() - t0
    outputs = {os.path.relpath(p, out_dir): tables.sha256_file(p) for p in written}
    manifest = ResultManifest(
        command=cfg.command,
        config=_config_echo(cfg),
        outputs=outputs,
        content_hash=_content_hash(outputs),
        wall_time_s=wall,
        per_worker_paths=per_worker,
        notes=notes,
        path=manifest_path,
    )
    body = {k: v for k, v in dataclasses.asdict(manifest).items() if k != "path"}
    tables.atomic_write_bytes(manifest_path, (json.dumps(body, indent=2, sort_keys=True) + "\n").encode())
    return manifest


def read_manifest(out_dir):
    with open(os.path.join(out_dir, MANIFEST), encoding="utf-8") as fh:
        return json.load(fh)


# ---------------------------------------------------------------- sample-loops

LOOP_COLUMNS = ("sample_id", "H1", "H2", "H3", "weight")


def _run_sample_loops(cfg, out_dir):
    meta = table_meta(cfg)
    meta["table"] = "loops"
    path = os.path.join(out_dir, "loops.tsv")
    if cfg.proposals == 0:
        tables.write_table(path, LOOP_COLUMNS, [], meta)
        return [path], [0], []
    ens = loops.gibbs_ensemble(cfg.modes, cfg.proposals, cfg.lam, cfg.K, cfg.seed, cfg.kind)
    h1, h2, h3 = loops.invariants_batch(ens.coeff_matrix(), ens.beta)
    rows = [(i, a, b, c, w) for i, a, b, c, w in zip(ens.ids, h1, h2, h3, ens.weights)]
    meta.update(acceptance=ens.acceptance, ess=ens.ess)
    tables.write_table(path, LOOP_COLUMNS, rows, meta)
    return [path], [cfg.proposals], []


# ---------------------------------------------------------------- evolve-nls

def initial_state(cfg):
    if isinstance(cfg.initial, int):
        sample = loops.sample_wiener_loop(cfg.modes, stream(cfg.initial, "nls-initial"))
        return nls.NlsState.from_loop(sample, cfg.beta)
    _, cols, rows = tables.read_table(cfg.initial)
    c = np.zeros(2 * cfg.modes + 1, dtype=complex)
    for mode, re, im in zip(tables.column(cols, rows, "mode", int), tables.column(cols, rows, "re"),
                            tables.column(cols, rows, "im")):
        if abs(mode) > cfg.modes:
            raise ValueError(f"initial file has mode {mode} beyond modes={cfg.modes}")
        c[mode + cfg.modes] = re + 1j * im
    return nls.NlsState(c, 0.0, cfg.beta)


def _run_evolve_nls(cfg, out_dir):
    state = initial_state(cfg)
    traj, report = nls.evolve(state, cfg.dt, cfg.steps, record_every=cfg.record_every)
    meta = table_meta(cfg)
    meta["table"] = "invariants"
    inv_path = os.path.join(out_dir, "invariants.tsv")
    rows = [(i, t, *v) for i, (t, v) in enumerate(zip(report.times, report.series)) if i % cfg.record_every == 0 or i == cfg.steps]
    tables.write_table(inv_path, ("step", "t", "H1", "H2", "H3"), rows, meta)
    drift_path = os.path.join(out_dir, "drift.tsv")
    tables.write_table(
        drift_path,
        ("quantity", "max_abs_drift"),
        [("H1", report.h1), ("H1_relative", report.h1_relative), ("H2", report.h2), ("H3", report.h3)],
        dict(meta, table="drift"),
    )
    written = [inv_path, drift_path]
    if cfg.trajectory:
        modes = np.arange(-state.n, state.n + 1)
        rows = [(s.t, int(k), c.real, c.imag) for s in traj for k, c in zip(modes, s.coeffs)]
        p = os.path.join(out_dir, "trajectory.tsv")
        tables.write_table(p, ("t", "mode", "re", "im"), rows, dict(meta, table="trajectory"))
        written.append(p)
    return written, [1], []


# ---------------------------------------------------------------- simulate-frames

def _frame_config(cfg):
    return frames.FrameConfig(cfg.epsilon, cfg.h, cfg.T, cfg.seed, (0.0, 0.0, 1.0), cfg.periodic_bridge)


def _frame_block(cfg, start, count, s_all):
    return frames.simulate_angles(_frame_config(cfg), count, s_all, start=start)


def _blocks(paths, workers):
    edges = np.linspace(0, paths, workers + 1).round().astype(int)
    return [(int(a), int(b - a)) for a, b in zip(edges[:-1], edges[1:])]


def simulate_frame_angles(cfg):
    """Angles at ``s_grid + (T,)`` for every path, merged in path-id order."""
    s_all = np.array(list(cfg.s_grid) + [cfg.T])
    blocks = _blocks(cfg.paths, cfg.workers)
    if cfg.workers == 1 or cfg.paths == 0:
        parts = [_frame_block(cfg, a, n, s_all) for a, n in blocks]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(_frame_block, cfg, a, n, s_all) for a, n in blocks]
            parts = [f.result() for f in futures]
    thetas = np.concatenate([p[0] for p in parts], axis=0) if parts else np.zeros((0, s_all.size))
    phis = np.concatenate([p[1] for p in parts], axis=0) if parts else np.zeros((0, s_all.size))
    return s_all, thetas, phis, [n for _, n in blocks]


def _run_simulate_frames(cfg, out_dir):
    s_all, thetas, phis, counts = simulate_frame_angles(cfg)
    meta = table_meta(cfg)
    meta["h_eff"] = frames.effective_step(cfg.h)
    k = len(cfg.s_grid)
    rows = [(p, s_all[j], thetas[p, j], phis[p, j]) for j in range(k) for p in range(cfg.paths)]
    ang = os.path.join(out_dir, "angles.tsv")
    tables.write_table(ang, ("path_id", "s", "theta", "phi"), rows, dict(meta, table="angles"))
    term = os.path.join(out_dir, "terminal.tsv")
    tables.write_table(term, ("path_id", "theta", "phi"),
                       [(p, thetas[p, k], phis[p, k]) for p in range(cfg.paths)], dict(meta, table="terminal"))
    written = [ang, term]
    fc = _frame_config(cfg)
    for p in range(min(cfg.dump_paths, cfg.paths)):
        path = frames.simulate_frame_path(fc, record_every=cfg.record_every, path_id=p)
        written.append(tables.write_path_dump(os.path.join(out_dir, "paths", f"path_{p:06d}.bin"),
                                              path.times, path.rotations, path.points))
    return written, counts, []


# ---------------------------------------------------------------- analyze

REPORT_COLUMNS = (
    "s", "n", "w1_theta", "w1_phi", "bound_total", "bound_theta", "bound_phi", "bound_conditional",
    "ks_theta", "ks_theta_p", "ks_phi", "ks_phi_p", "chi2", "chi2_dof", "chi2_p",
    "reject_theta", "reject_phi", "reject_independence",
)


def analyze_angles(thetas, phis, s, bins_theta=8, bins_phi=8, level=0.00045):
    """One report row for the angles recorded at ``s``."""
    nan = float("nan")
    F1, G1 = transport.reference_cdfs()
    n = thetas.size
    row = dict.fromkeys(REPORT_COLUMNS, nan)
    row.update(s=s, n=n)
    if n == 0:
        return row
    row["w1_theta"] = transport.w1_cdf(transport.EmpiricalCdf(thetas), F1)
    row["w1_phi"] = transport.w1_cdf(transport.EmpiricalCdf(phis), G1)
    samples = transport.SphereSampleSet(thetas, phis, s)
    if n >= 100:
        b = transport.sphere_w1_bound(samples)
        row.update(bound_total=b.total, bound_theta=b.theta_term, bound_phi=b.phi_term,
                   bound_conditional=b.conditional_term)
    if n >= 10:
        kt = transport.ks_test(thetas, F1)
        kp = transport.ks_test(phis, G1)
        row.update(ks_theta=kt.statistic, ks_theta_p=kt.p_value, ks_phi=kp.statistic, ks_phi_p=kp.p_value,
                   reject_theta=int(kt.p_value < level), reject_phi=int(kp.p_value < level))
        try:
            c = transport.chi2_independence(samples, bins_theta, bins_phi)
            row.update(chi2=c.statistic, chi2_dof=c.dof, chi2_p=c.p_value, reject_independence=int(c.p_value < level))
        except ValueError:
            pass
    return row


def emit_plot_data(angle_sets, out_dir, hist_bins=36, meta=None):
    """2-D (theta, phi) histograms per ``s`` and the (s, W1) series.

    ``angle_sets`` maps each configured ``s`` to ``(thetas, phis)``.
    """
    meta = dict(meta or {})
    F1, G1 = transport.reference_cdfs()
    te = np.linspace(-np.pi, np.pi, hist_bins + 1)
    pe = np.linspace(0.0, np.pi, hist_bins + 1)
    cols = ("theta_lo", "theta_hi") + tuple(f"phi_{j:03d}" for j in range(hist_bins))
    written = []
    series = []
    for idx, (s, (th, ph)) in enumerate(sorted(angle_sets.items())):
        rows = []
        if th.size:
            counts, _, _ = np.histogram2d(th, ph, bins=[te, pe])
            rows = [(te[i], te[i + 1], *counts[i].astype(int)) for i in range(hist_bins)]
            series.append((s, th.size,
                           transport.w1_cdf(transport.EmpiricalCdf(th), F1),
                           transport.w1_cdf(transport.EmpiricalCdf(ph), G1)))
        hmeta = dict(meta, table="histogram", s=s, phi_edges=[float(v) for v in pe])
        written.append(tables.write_table(os.path.join(out_dir, f"hist_{idx:03d}.tsv"), cols, rows, hmeta))
    written.append(tables.write_table(os.path.join(out_dir, "w1_series.tsv"), ("s", "n", "w1_theta", "w1_phi"),
                                      series, dict(meta, table="w1_series")))
    return written


def _run_analyze(cfg, out_dir):
    angles = os.path.join(cfg.input, "angles.tsv")
    loops_path = os.path.join(cfg.input, "loops.tsv")
    if os.path.exists(angles):
        return _analyze_frames(cfg, angles, out_dir)
    if os.path.exists(loops_path):
        return _analyze_loops(loops_path, out_dir)
    raise FileNotFoundError(f"no angles.tsv or loops.tsv in {cfg.input}")


def _analyze_frames(cfg, angles, out_dir):
    src_meta, cols, rows = tables.read_table(angles)
    s_grid = [float(s) for s in src_meta.get("s_grid", [])]
    s_col = tables.column(cols, rows, "s")
    th_col = tables.column(cols, rows, "theta")
    ph_col = tables.column(cols, rows, "phi")
    sets = {}
    for s in s_grid:
        sel = np.isclose(s_col, s, rtol=0, atol=1e-12)
        sets[s] = (th_col[sel], ph_col[sel])
    meta = {"command": "analyze", "source": {k: src_meta[k] for k in sorted(src_meta) if k != "table"},
            "level": cfg.level, "independence_test": INDEPENDENCE_NOTE}
    report = [analyze_angles(th, ph, s, cfg.bins_theta, cfg.bins_phi, cfg.level) for s, (th, ph) in sets.items()]
    rpath = os.path.join(out_dir, "report.tsv")
    tables.write_table(rpath, REPORT_COLUMNS, [tuple(r[c] for c in REPORT_COLUMNS) for r in report],
                       dict(meta, table="report"))
    written = [rpath] + emit_plot_data(sets, out_dir, cfg.hist_bins, meta)
    return written, [len(rows)], [INDEPENDENCE_NOTE]


def _analyze_loops(path, out_dir):
    src_meta, cols, rows = tables.read_table(path)
    h1 = tables.column(cols, rows, "H1")
    h2 = tables.column(cols, rows, "H2")
    h3 = tables.column(cols, rows, "H3")
    w = tables.column(cols, rows, "weight")
    out = [("samples", len(rows))]
    if rows:
        out += [
            ("weighted_mean_H1", float(w @ h1)),
            ("weighted_mean_H2", float(w @ h2)),
            ("weighted_mean_H3", float(w @ h3)),
            ("ess", float(1.0 / np.sum(w**2))),
            ("max_H1", float(h1.max())),
            ("fraction_area_inequality", float(np.mean(h2**2 <= h1 * h3 / 4.0))),
        ]
    p = os.path.join(out_dir, "loop_summary.tsv")
    meta = {"command": "analyze", "table": "loop_summary",
            "source": {k: src_meta[k] for k in sorted(src_meta) if k != "table"}}
    tables.write_table(p, ("statistic", "value"), out, meta)
    return [p], [len(rows)], []


# ---------------------------------------------------------------- jk

def read_alphas(path):
    values = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0]
            values += [float(v) for v in line.replace(",", " ").split()]
    return values


def jk_rows(cfg):
    return partitions.jk_table(partitions.assemble_jk(cfg.k, read_alphas(cfg.alphas)))


def _run_jk(cfg, out_dir):
    p = os.path.join(out_dir, "jk.tsv")
    tables.write_table(p, ("bra", "ket", "coefficient"), jk_rows(cfg), {"command": "jk", "k": cfg.k})
    return [p], [1], []

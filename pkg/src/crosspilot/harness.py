"""Seeded Monte Carlo experiment runner.

Every sweep point gets a derived substream seed recorded in its CSV row:
``point_seed = SeedSequence(master_seed, spawn_key=(point_index,))`` and
frame f within the point runs on ``SeedSequence(point_seed,
spawn_key=(f,))``.  Frames are therefore independent of execution order
and worker count; aggregation walks the per-frame results in frame order,
so a sweep rerun with any ``--workers`` value is byte-identical.

Within one frame the draw order is fixed: channel gains, Doppler angles,
the shared noise matrix, then the data bits.  Both pilot schemes reuse
the same channel, noise, and bits (paired comparison).

The swept PDR is interpreted per ``pdr_convention``:

* ``total``:      pdr = N_p*Ep / (MN*Es), the total pilot over total data
                  energy (the shipped default), converted per scheme to
                  the per-symbol ratio before solving the energy split;
* ``per-symbol``: pdr = Ep/Es directly.
"""
from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import detector, estimator, pilots
from .channel import (ChannelProfile, complex_noise, draw_channel, observe,
                      solve_energy)
from .dd_core import FrameConfig, dzt, idzt
from .estimator import SearchConfig
from .pilots import CrossPilots, MultiPilots

SCHEMA_VERSION = "crosspilot-results v1"
CSV_COLUMNS = ("sweep_value", "ber_proposed", "ber_baseline",
               "papr_mean_db", "papr_p99_db",
               "papr_mean_db_baseline", "papr_p99_db_baseline",
               "frames", "seed")
KMH_TO_MPS = 1000.0 / 3600.0
TOOL_VERSION = "crosspilot/0.1.0"


@dataclass(frozen=True)
class SweepConfig:
    snr_db: tuple[float, ...] = (-6.0, -2.0, 2.0, 6.0)
    pdr_db: tuple[float, ...] = (-20.0, -10.0, -5.0, -2.0, 0.0, 10.0)
    snr_db_fixed: float = -2.0
    pdr_db_fixed: float = -5.0


@dataclass(frozen=True)
class ExperimentConfig:
    frame: FrameConfig
    channel: ChannelProfile
    cross: CrossPilots
    multi: MultiPilots
    baseline_method: str = "local-vote"
    n_rx: int = 32
    qam_order: int = 4
    search: SearchConfig = field(default_factory=SearchConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    pdr_convention: str = "total"
    sigma2: float = 1.0
    papr_oversampling: int = 1
    frames: int = 200
    seed: int = 20260810

    def __post_init__(self):
        if self.frames < 1:
            raise ValueError("frames must be >= 1")
        if self.n_rx < 1:
            raise ValueError("n_rx must be >= 1")
        if self.pdr_convention not in ("total", "per-symbol"):
            raise ValueError(f"unknown pdr_convention {self.pdr_convention!r}")
        if self.baseline_method not in ("local-vote", "pattern-correlation"):
            raise ValueError(f"unknown baseline_method {self.baseline_method!r}")

    def config_hash(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


def default_config() -> ExperimentConfig:
    """High-mobility 4-path vehicular scenario (the repo's reference setup)."""
    frame = FrameConfig(M=64, N=16, delta_f=30e3, cp_samples=16, fc=5.9e9)
    channel = ChannelProfile(
        tau_s=(0.0, 0.9e-6, 2.4e-6, 3.0e-6),
        power_db=(0.0, -1.0, -5.0, -7.0),
        doa_deg=(10.0, 42.0, -25.0, 24.0),
        v_max_mps=500.0 * KMH_TO_MPS,
    )
    return ExperimentConfig(frame=frame, channel=channel,
                            cross=CrossPilots(),
                            multi=MultiPilots.uniform(frame, 8, 4))


# ---------------------------------------------------------------------------
# config file loading
# ---------------------------------------------------------------------------

def _cfg_error(path: str, msg: str):
    raise ValueError(f"config {path}: {msg}")


def _take(block: dict, path: str, key: str, default=None):
    return block.pop(key) if key in block else default


def _no_leftovers(block: dict, path: str):
    if block:
        _cfg_error(path, f"unknown keys {sorted(block)}")


def load_config(path: str) -> ExperimentConfig:
    """Parse a YAML experiment config; errors name the offending key path."""
    import yaml

    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        _cfg_error(path, "top level must be a mapping")
    return config_from_dict(raw, source=path)


def config_from_dict(raw: dict, source: str = "<dict>") -> ExperimentConfig:
    raw = dict(raw)
    base = default_config()

    fr = dict(_take(raw, source, "frame", {}) or {})
    frame = FrameConfig(
        M=int(_take(fr, "frame", "m", base.frame.M)),
        N=int(_take(fr, "frame", "n", base.frame.N)),
        delta_f=float(_take(fr, "frame", "delta_f_hz", base.frame.delta_f)),
        cp_samples=int(_take(fr, "frame", "cp_samples", base.frame.cp_samples)),
        fc=float(_take(fr, "frame", "fc_hz", base.frame.fc)),
    )
    _no_leftovers(fr, "frame")

    ch = dict(_take(raw, source, "channel", {}) or {})
    v_max_kmh = _take(ch, "channel", "v_max_kmh", None)
    v_max_mps = (float(v_max_kmh) * KMH_TO_MPS if v_max_kmh is not None
                 else float(_take(ch, "channel", "v_max_mps", base.channel.v_max_mps)))
    channel = ChannelProfile(
        tau_s=tuple(_take(ch, "channel", "tau_s", base.channel.tau_s)),
        power_db=tuple(_take(ch, "channel", "power_db", base.channel.power_db)),
        doa_deg=tuple(_take(ch, "channel", "doa_deg", base.channel.doa_deg)),
        v_max_mps=v_max_mps,
        doppler_mode=_take(ch, "channel", "doppler_mode", base.channel.doppler_mode),
        nu_fixed_hz=tuple(_take(ch, "channel", "nu_fixed_hz", ()) or ()),
        gain_mode=_take(ch, "channel", "gain_mode", base.channel.gain_mode),
        min_doa_sep_deg=float(_take(ch, "channel", "min_doa_sep_deg",
                                    base.channel.min_doa_sep_deg)),
    )
    _no_leftovers(ch, "channel")

    rx = dict(_take(raw, source, "receiver", {}) or {})
    n_rx = int(_take(rx, "receiver", "n_rx", base.n_rx))
    _no_leftovers(rx, "receiver")

    sc = dict(_take(raw, source, "scheme", {}) or {})
    cr = dict(_take(sc, "scheme", "cross", {}) or {})
    cross = CrossPilots(m_p=_take(cr, "scheme.cross", "m_p", None),
                        n_p=_take(cr, "scheme.cross", "n_p", None))
    _no_leftovers(cr, "scheme.cross")
    mu = dict(_take(sc, "scheme", "multi", {}) or {})
    positions = _take(mu, "scheme.multi", "positions", None)
    if positions is not None:
        multi = MultiPilots(positions=tuple((int(m), int(n)) for m, n in positions))
    else:
        gm, gn = _take(mu, "scheme.multi", "grid", [8, 4])
        multi = MultiPilots.uniform(frame, int(gm), int(gn))
    baseline_method = _take(mu, "scheme.multi", "estimator", base.baseline_method)
    _no_leftovers(mu, "scheme.multi")
    _no_leftovers(sc, "scheme")

    de = dict(_take(raw, source, "detector", {}) or {})
    qam_order = int(_take(de, "detector", "qam_order", base.qam_order))
    _no_leftovers(de, "detector")

    se = dict(_take(raw, source, "search", {}) or {})
    search = SearchConfig(
        fine_step=float(_take(se, "search", "fine_step", 0.01)),
        refine=_take(se, "search", "refine", "none"),
        restrict_delay_to_cp=bool(_take(se, "search", "restrict_delay_to_cp", True)),
    )
    _no_leftovers(se, "search")

    en = dict(_take(raw, source, "energy", {}) or {})
    pdr_convention = _take(en, "energy", "pdr_convention", base.pdr_convention)
    _no_leftovers(en, "energy")

    sw = dict(_take(raw, source, "sweep", {}) or {})
    sweep = SweepConfig(
        snr_db=tuple(float(x) for x in _take(sw, "sweep", "snr_db",
                                             base.sweep.snr_db)),
        pdr_db=tuple(float(x) for x in _take(sw, "sweep", "pdr_db",
                                             base.sweep.pdr_db)),
        snr_db_fixed=float(_take(sw, "sweep", "snr_db_fixed",
                                 base.sweep.snr_db_fixed)),
        pdr_db_fixed=float(_take(sw, "sweep", "pdr_db_fixed",
                                 base.sweep.pdr_db_fixed)),
    )
    if not sweep.snr_db or not sweep.pdr_db:
        _cfg_error("sweep", "sweep lists must be non-empty")
    _no_leftovers(sw, "sweep")

    cfg = ExperimentConfig(
        frame=frame, channel=channel, cross=cross, multi=multi,
        baseline_method=baseline_method, n_rx=n_rx,
        qam_order=qam_order, search=search, sweep=sweep,
        pdr_convention=pdr_convention,
        sigma2=float(_take(raw, source, "sigma2", base.sigma2)),
        papr_oversampling=int(_take(raw, source, "papr_oversampling",
                                    base.papr_oversampling)),
        frames=int(_take(raw, source, "frames", base.frames)),
        seed=int(_take(raw, source, "seed", base.seed)),
    )
    _no_leftovers(raw, source)
    return cfg


# ---------------------------------------------------------------------------
# per-frame simulation
# ---------------------------------------------------------------------------

def effective_pdr_db(pdr_db: float, n_pilots: int, cfg: FrameConfig,
                     convention: str) -> float:
    """Convert a configured PDR to the per-symbol Ep/Es ratio in dB."""
    if convention == "per-symbol":
        return pdr_db
    return pdr_db + 10.0 * np.log10(cfg.n_cells / n_pilots)


def point_seed_for(master_seed: int, point_index: int) -> int:
    return int(np.random.SeedSequence(
        master_seed, spawn_key=(point_index,)).generate_state(1, np.uint64)[0])


def frame_rng(point_seed: int, frame_idx: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(point_seed, spawn_key=(frame_idx,)))


@dataclass(frozen=True)
class PointTask:
    exp: ExperimentConfig
    snr_db: float
    pdr_db: float
    point_seed: int


@dataclass(frozen=True)
class FrameStats:
    bit_errors_proposed: int
    bit_errors_baseline: int
    n_bits: int
    papr_proposed_db: float
    papr_baseline_db: float


def _gain_or_fallback(r_p, scheme, l_hat, k_hat, alloc, cfg):
    # Ep = 0 leaves the LS divisor undefined; project onto the unit-amplitude
    # pilot instead so the PDR -> -inf edge of a sweep degrades rather than dies.
    if alloc.ep > 0:
        return estimator.estimate_gain(r_p, scheme, l_hat, k_hat, alloc, cfg)
    w = estimator.pilot_waveform(scheme, l_hat, k_hat, cfg)
    return complex(np.vdot(w, np.asarray(r_p)) / scheme.n_pilots(cfg))


def _estimate_proposed(obs, scheme, doas, alloc, search, cfg):
    if alloc.ep > 0:
        return estimator.estimate_channel(obs, scheme, doas, alloc, search, cfg)
    paths, beams = [], []
    for theta in doas:
        r_p = estimator.beamform(obs, theta)
        prof = estimator.profiles(dzt(r_p, cfg), cfg)
        k_hat, pv = estimator.estimate_doppler(prof.v, scheme, search, cfg)
        l_hat, pu = estimator.estimate_delay(prof.u, k_hat, scheme, search, cfg)
        alpha = _gain_or_fallback(r_p, scheme, l_hat, k_hat, alloc, cfg)
        beams.append(r_p)
        paths.append(estimator.PathEstimate(alpha_hat=alpha, l_hat=l_hat,
                                            k_hat=k_hat, theta=float(theta),
                                            peak_metric_u=pu, peak_metric_v=pv))
    return estimator.EstimateSet(paths=tuple(paths), beamformed=tuple(beams))


def _estimate_baseline(obs, scheme, doas, alloc, cfg, search, method):
    if alloc.ep <= 0:
        alloc = replace(alloc, ep=1.0)
    return estimator.baseline_estimate(obs, scheme, doas, alloc, cfg, search,
                                       method=method)


def simulate_frame(task: PointTask, frame_idx: int) -> FrameStats:
    """One Monte Carlo frame: both schemes on a shared channel/noise/bits draw."""
    exp = task.exp
    cfg = exp.frame
    rng = frame_rng(task.point_seed, frame_idx)

    ch = draw_channel(exp.channel, cfg, rng)
    noise = complex_noise((cfg.n_cells, exp.n_rx), exp.sigma2, rng)
    bits_per_frame = cfg.n_cells * int(np.log2(exp.qam_order))
    bits = rng.integers(0, 2, bits_per_frame)

    stats = {}
    for name, scheme in (("proposed", exp.cross), ("baseline", exp.multi)):
        n_pil = scheme.n_pilots(cfg)
        alloc = solve_energy(task.snr_db,
                             effective_pdr_db(task.pdr_db, n_pil, cfg,
                                              exp.pdr_convention),
                             cfg.M, cfg.N, n_pil, exp.sigma2)
        tx = pilots.build_tx_frame(bits, scheme, alloc, exp.qam_order, cfg)
        s = idzt(tx.X, cfg)
        papr = pilots.papr_db(s, exp.papr_oversampling)
        obs = observe(s, ch, cfg, exp.n_rx, exp.sigma2, noise=noise)
        if name == "proposed":
            est = _estimate_proposed(obs, scheme, ch.doas, alloc, exp.search, cfg)
        else:
            est = _estimate_baseline(obs, scheme, ch.doas, alloc, cfg, exp.search,
                                     exp.baseline_method)
        det = detector.mf_mrc_detect(est.beamformed, est, tx.Xp, alloc, cfg,
                                     exp.qam_order, bits_ref=bits)
        stats[name] = (int(np.sum(det.bits_hat != bits)), papr)

    return FrameStats(
        bit_errors_proposed=stats["proposed"][0],
        bit_errors_baseline=stats["baseline"][0],
        n_bits=bits_per_frame,
        papr_proposed_db=stats["proposed"][1],
        papr_baseline_db=stats["baseline"][1],
    )


# ---------------------------------------------------------------------------
# sweep execution and CSV output
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResultRow:
    sweep_value: float
    ber_proposed: float
    ber_baseline: float
    papr_mean_db: float
    papr_p99_db: float
    papr_mean_db_baseline: float
    papr_p99_db_baseline: float
    frames: int
    seed: int


def _frame_task(args) -> FrameStats:
    task, idx = args
    return simulate_frame(task, idx)


def run_point(task: PointTask, sweep_value: float, workers: int = 1) -> ResultRow:
    """All frames of one sweep point; aggregation is in fixed frame order."""
    frames = task.exp.frames
    if workers > 1:
        jobs = [(task, i) for i in range(frames)]
        chunk = max(1, frames // (workers * 4))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_frame = list(pool.map(_frame_task, jobs, chunksize=chunk))
    else:
        per_frame = [simulate_frame(task, i) for i in range(frames)]

    err_p = sum(f.bit_errors_proposed for f in per_frame)
    err_b = sum(f.bit_errors_baseline for f in per_frame)
    n_bits = sum(f.n_bits for f in per_frame)
    papr_p = np.array([f.papr_proposed_db for f in per_frame])
    papr_b = np.array([f.papr_baseline_db for f in per_frame])
    return ResultRow(
        sweep_value=sweep_value,
        ber_proposed=err_p / n_bits,
        ber_baseline=err_b / n_bits,
        papr_mean_db=float(papr_p.mean()),
        papr_p99_db=float(np.percentile(papr_p, 99)),
        papr_mean_db_baseline=float(papr_b.mean()),
        papr_p99_db_baseline=float(np.percentile(papr_b, 99)),
        frames=frames,
        seed=task.point_seed,
    )


def _run_sweep(exp: ExperimentConfig, points, workers: int) -> list[ResultRow]:
    rows = []
    for idx, (sweep_value, snr_db, pdr_db) in enumerate(points):
        task = PointTask(exp=exp, snr_db=snr_db, pdr_db=pdr_db,
                         point_seed=point_seed_for(exp.seed, idx))
        rows.append(run_point(task, sweep_value, workers=workers))
    return rows


def run_ber_vs_snr(exp: ExperimentConfig, workers: int = 1) -> list[ResultRow]:
    """Sweep SNR at the fixed PDR."""
    points = [(snr, snr, exp.sweep.pdr_db_fixed) for snr in exp.sweep.snr_db]
    return _run_sweep(exp, points, workers)


def run_ber_vs_pdr(exp: ExperimentConfig, workers: int = 1) -> list[ResultRow]:
    """Sweep PDR at the fixed SNR."""
    points = [(pdr, exp.sweep.snr_db_fixed, pdr) for pdr in exp.sweep.pdr_db]
    return _run_sweep(exp, points, workers)


def run_papr_vs_ber(exp: ExperimentConfig, workers: int = 1) -> list[ResultRow]:
    """Sweep PDR at the fixed SNR, recording the PAPR/BER trade-off."""
    return run_ber_vs_pdr(exp, workers)


def format_csv(rows: list[ResultRow], exp: ExperimentConfig, kind: str) -> str:
    bits_per_frame = exp.frame.n_cells * int(np.log2(exp.qam_order))
    lines = [f"# {SCHEMA_VERSION} kind={kind} tool={TOOL_VERSION} "
             f"config_sha256={exp.config_hash()} master_seed={exp.seed} "
             f"bits_per_frame={bits_per_frame}"]
    lines.append(",".join(CSV_COLUMNS))
    for r in rows:
        lines.append(",".join([
            f"{r.sweep_value:.10g}", f"{r.ber_proposed:.10g}",
            f"{r.ber_baseline:.10g}", f"{r.papr_mean_db:.10g}",
            f"{r.papr_p99_db:.10g}", f"{r.papr_mean_db_baseline:.10g}",
            f"{r.papr_p99_db_baseline:.10g}", str(r.frames), str(r.seed),
        ]))
    return "\n".join(lines) + "\n"


def write_csv(rows: list[ResultRow], exp: ExperimentConfig, kind: str,
              out_path: str) -> None:
    text = format_csv(rows, exp, kind)
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# selftest
# ---------------------------------------------------------------------------

def _check_transforms():
    cfg = FrameConfig(M=8, N=4, delta_f=30e3, cp_samples=2)
    rng = np.random.default_rng(1)
    x = rng.standard_normal((8, 4)) + 1j * rng.standard_normal((8, 4))
    assert np.max(np.abs(dzt(idzt(x, cfg), cfg) - x)) < 1e-10
    fn = np.exp(-2j * np.pi * np.outer(np.arange(4), np.arange(4)) / 4) / 2
    dense = np.kron(fn.conj().T, np.eye(8)) @ x.flatten(order="F")
    assert np.max(np.abs(dense - idzt(x, cfg))) < 1e-10


def _check_delay_profile_exactness():
    cfg = FrameConfig(M=64, N=16, delta_f=30e3, cp_samples=16)
    scheme = CrossPilots().resolve(cfg)
    alpha, ep = 0.8 - 0.4j, 0.5
    l, k = 4.608, 1.2
    from .dd_core import apply_path_operator
    s = apply_path_operator(idzt(np.sqrt(ep) * scheme.matrix(cfg), cfg), l, k, cfg)
    prof = estimator.profiles(dzt(alpha * s, cfg), cfg)
    g_u = estimator.delay_template(l, k, scheme.m_p, cfg)[0]
    err = np.linalg.norm(cfg.N * prof.u - alpha * np.sqrt(ep) * g_u)
    assert err <= 1e-9 * np.linalg.norm(g_u), f"closed-form residual {err:.2e}"


def _check_doppler_approx():
    cfg = FrameConfig(M=64, N=16, delta_f=30e3, cp_samples=16)
    scheme = CrossPilots().resolve(cfg)
    alpha, ep = 0.8 - 0.4j, 0.5
    from .dd_core import apply_path_operator
    for k in (0.5, 1.0, 2.0):
        s = apply_path_operator(idzt(np.sqrt(ep) * scheme.matrix(cfg), cfg),
                                3.3, k, cfg)
        prof = estimator.profiles(dzt(alpha * s, cfg), cfg)
        g_v = estimator.doppler_template(k, scheme.n_p, cfg)[0]
        lhs = cfg.M * prof.v / (alpha * np.sqrt(ep))
        scale = np.vdot(g_v, lhs) / np.vdot(g_v, g_v)
        resid = np.linalg.norm(lhs - scale * g_v) / np.linalg.norm(g_v)
        assert resid <= 0.05, f"descaled Doppler residual {resid:.3f} at k={k}"


def _check_noiseless_recovery():
    exp = default_config()
    cfg = exp.frame
    scheme = exp.cross
    alloc = solve_energy(0.0, 0.0, cfg.M, cfg.N, scheme.n_pilots(cfg))
    from .channel import ChannelRealization, PathParams
    # fractional (l, k) chosen on the fine grid so recovery is exact
    ch = ChannelRealization(paths=(PathParams(alpha=0.9 - 0.2j, l=1.73,
                                              k=-1.3, theta=0.3),))
    s = idzt(np.sqrt(alloc.ep) * scheme.matrix(cfg), cfg)
    obs = observe(s, ch, cfg, exp.n_rx, 0.0)
    est = estimator.estimate_channel(obs, scheme, [0.3], alloc, exp.search, cfg)
    p = est.paths[0]
    assert abs(p.l_hat - 1.73) <= exp.search.fine_step + 1e-12
    assert abs(p.k_hat + 1.3) <= exp.search.fine_step + 1e-12
    assert abs(p.alpha_hat - (0.9 - 0.2j)) < 1e-6, f"gain error {p.alpha_hat}"


def _check_noise_calibration():
    exp = default_config()
    cfg = exp.frame
    rng = np.random.default_rng(7)
    reps = int(np.ceil(1e5 / cfg.n_cells))
    vals = []
    for _ in range(reps):
        noise = complex_noise((cfg.n_cells, exp.n_rx), 1.0, rng)
        obs = type("O", (), {"R": noise, "n_rx": exp.n_rx})()
        vals.append(np.abs(estimator.beamform(obs, 0.25)) ** 2)
    var = float(np.mean(np.concatenate(vals)))
    assert abs(var - 1.0 / exp.n_rx) <= 0.05 / exp.n_rx, f"beamformed var {var:.5f}"


def _check_energy_identity():
    alloc = solve_energy(-2.0, -5.0, 64, 16, 79, 1.0)
    snr_back = alloc.ef / (64 * 16 * 1.0)
    assert abs(snr_back - 10 ** (-0.2)) < 1e-12


def _check_determinism():
    exp = replace(default_config(), frames=2,
                  sweep=SweepConfig(snr_db=(0.0,), pdr_db=(-5.0,)))
    a = format_csv(run_ber_vs_snr(exp, workers=1), exp, "ber-vs-snr")
    b = format_csv(run_ber_vs_snr(exp, workers=1), exp, "ber-vs-snr")
    assert a == b


SELFTEST_CHECKS = (
    ("transform-roundtrip-and-oracle", _check_transforms),
    ("delay-profile-template-exactness", _check_delay_profile_exactness),
    ("doppler-profile-template-approximation", _check_doppler_approx),
    ("noiseless-single-path-recovery", _check_noiseless_recovery),
    ("beamformed-noise-calibration", _check_noise_calibration),
    ("energy-split-identity", _check_energy_identity),
    ("csv-determinism", _check_determinism),
)


def selftest(out=print) -> bool:
    """Run the invariant suites; returns True when everything passes."""
    ok = True
    for name, check in SELFTEST_CHECKS:
        t0 = time.perf_counter()
        try:
            check()
            status = "PASS"
        except Exception as exc:  # noqa: BLE001 - report and continue
            status = f"FAIL ({exc})"
            ok = False
        out(f"{status:<6} {name} ({time.perf_counter() - t0:.2f}s)")
    return ok

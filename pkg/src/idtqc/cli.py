"""Experiment runner: BER sweeps, rate curves, and code generation.

Configs are JSON documents; results are a CSV file plus a JSON manifest
echoing the config, the master seed, and the package version.  Every trial
draws its randomness from a stream derived deterministically from
(master_seed, point_index, trial_index), and trials run in fixed-size
batches, so results never depend on the worker count or on scheduling.

SNR convention: snr_db = 10 log10(P) with unit-variance noise, i.e. the
per-symbol transmit power against a fixed noise floor.  A null snr entry is
the noiseless sentinel.
"""

from __future__ import annotations

import argparse
import functools
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__, channels, idt, qc_ldpc, rates, receivers
from .galois import FieldSpec
from .idt import IdtConfig, PamMap

BER_HEADER = "snr_db,frames,bit_errors,frame_errors,ber,fer,seed"
_BATCH = 50  # fixed trial batch; part of the determinism contract


class ConfigError(Exception):
    """Invalid experiment configuration; message names the offending field."""


def _require(cfg: dict, field: str, typ=None):
    if field not in cfg:
        raise ConfigError(f"missing config field: {field}")
    v = cfg[field]
    if typ is not None and not isinstance(v, typ):
        raise ConfigError(f"config field {field}: expected {typ}")
    return v


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}")


def _build_code(spec, master_seed: int) -> qc_ldpc.QcCode:
    """Code from a description file path or inline generation parameters."""
    if isinstance(spec, str):
        try:
            with open(spec) as fh:
                return qc_ldpc.code_from_json(fh.read())
        except OSError as e:
            raise ConfigError(f"cannot read code file: {e}")
    if not isinstance(spec, dict):
        raise ConfigError("code: expected a path or a parameter object")
    p = int(spec.get("p", 2))
    b = int(_require(spec, "b"))
    L = int(_require(spec, "L"))
    k_b = int(_require(spec, "k_b"))
    w = int(spec.get("msg_col_weight", 3))
    proto = qc_ldpc.default_protograph(b, k_b, w)
    rng = np.random.default_rng(np.random.SeedSequence((int(spec.get("seed", master_seed)), 0xC0DE)))
    return qc_ldpc.expand_protograph(proto, L, rng=rng, p=p)


def _snr_list(cfg: dict) -> list:
    grid = _require(cfg, "snr_db", list)
    if not grid:
        raise ConfigError("snr_db: grid must be non-empty")
    return [math.inf if v is None else float(v) for v in grid]


def _apply_long_run(cfg: dict, long_run: bool) -> dict:
    if long_run:
        cfg = dict(cfg)
        cfg.update(cfg.get("long_run", {}))
    return cfg


# ---------------------------------------------------------------------------
# Per-trial experiment kernels (shared by serial and parallel paths)
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=8)
def _context(cfg_json: str, master_seed: int):
    """Heavy per-experiment state, cached per process."""
    cfg = json.loads(cfg_json)
    kind = cfg["kind"]
    code = _build_code(cfg["code"], master_seed)
    if kind == "isi_ber":
        taps = tuple(int(t) for t in _require(cfg, "taps", list))
        d_max = int(cfg.get("d_max", len(taps) - 1))
        icfg = IdtConfig.for_code(code, d_max=d_max, n_sources=1)
        return code, icfg, {"taps": taps}
    d_max = int(_require(cfg, "d_max"))
    icfg = IdtConfig.for_code(code, d_max=d_max, n_sources=2)
    return code, icfg, {}


def _encode_frame(code, icfg, pam, rng):
    w = icfg.random_message(rng, code.field.p)
    c = qc_ldpc.encode(code, w)
    sig = idt.frame(idt.interleave(pam.modulate(c), code.b, code.L), icfg,
                    pam.frozen_amplitude).signal
    return w, c, sig


def _trial_isi(cfg, code, icfg, extra, pam, noise_std, rng):
    ch = channels.IsiChannel(extra["taps"], noise_std)
    w, c, sig = _encode_frame(code, icfg, pam, rng)
    y = channels.isi_apply(sig, ch, rng if noise_std > 0 else None)
    res = receivers.isi_receive(y, ch, code, icfg, pam,
                                int(cfg.get("bp_iters", 200)))
    if res.message is None:
        return icfg.k // 2, 1
    bits = int((res.message != w).sum())
    return bits, 1 if bits else 0


def _trial_cf_frame(cfg, code, icfg, extra, pam, noise_std, rng):
    gains = cfg.get("gains", [1.0, 1.0])
    a = [int(x) for x in cfg.get("a", [1, 1])]
    dconf = cfg.get("delays", "random")
    if dconf == "random":
        tau = rng.integers(0, icfg.d_max + 1, size=2)
    else:
        tau = np.asarray(dconf, dtype=np.int64)
    scene = channels.CfScene.of([gains], [tau], power=pam.power,
                                d_max=icfg.d_max)
    w1, c1, s1 = _encode_frame(code, icfg, pam, rng)
    w2, c2, s2 = _encode_frame(code, icfg, pam, rng)
    y = channels.cf_frame_apply([s1, s2], scene, 0, rng, noise_std=noise_std)
    fn = receivers.relay_receive_frame(y, scene, 0, a, code, icfg, pam,
                                       int(cfg.get("bp_iters", 200)))
    p = code.field.p
    truth = (a[0] * np.roll(c1, code.b * int(tau[0]))
             + a[1] * np.roll(c2, code.b * int(tau[1]))) % p
    if fn.word is None:
        return icfg.k // 2, 1
    bits = int((fn.word[code.msg_positions] != truth[code.msg_positions]).sum())
    return bits, 1 if bits else 0


def _trial_cf_symbol(cfg, code, icfg, extra, pam, noise_std, rng):
    gains = cfg.get("gains", [1.0, 1.0])
    tau = float(_require(cfg, "tau"))
    scene = channels.CfScene.of([gains], [[0.0, tau]], power=pam.power,
                                d_max=icfg.d_max, model="symbol")
    w1, c1, s1 = _encode_frame(code, icfg, pam, rng)
    w2, c2, s2 = _encode_frame(code, icfg, pam, rng)
    rx = channels.cf_symbol_oversample([s1, s2], scene, 0, rng,
                                       noiseless=(noise_std == 0))
    fn = receivers.jcf_decode(rx, code, icfg, pam,
                              outer_iters=int(cfg.get("outer_iters", 40)),
                              inner_iters=int(cfg.get("inner_iters", 5)))
    if fn.word is None:
        return icfg.k // 2, 1
    truth = c1 ^ np.roll(c2, code.b * fn.delays[1])
    bits = int((fn.word[code.msg_positions] != truth[code.msg_positions]).sum())
    return bits, 1 if bits else 0


_TRIALS = {
    "isi_ber": _trial_isi,
    "cf_frame_ber": _trial_cf_frame,
    "cf_symbol_ber": _trial_cf_symbol,
}


def _run_chunk(args):
    """Run trials [t0, t1) of one sweep point; returns summed counters."""
    cfg_json, master_seed, point_index, snr_db, t0, t1 = args
    cfg = json.loads(cfg_json)
    code, icfg, extra = _context(cfg_json, master_seed)
    noiseless = math.isinf(snr_db)
    P = 1.0 if noiseless else 10.0 ** (snr_db / 10.0)
    pam = PamMap(code.field, power=P)
    noise_std = 0.0 if noiseless else 1.0
    fn = _TRIALS[cfg["kind"]]
    bits = 0
    ferrs = 0
    for t in range(t0, t1):
        rng = np.random.default_rng(
            np.random.SeedSequence((master_seed, point_index, t)))
        db, df = fn(cfg, code, icfg, extra, pam, noise_std, rng)
        bits += db
        ferrs += df
    return bits, ferrs


# ---------------------------------------------------------------------------
# Sweep driver
# ---------------------------------------------------------------------------


def ber_sweep(cfg: dict, master_seed: int, workers: int = 1):
    """Run every SNR point to its stopping rule; returns point dicts."""
    snrs = _snr_list(cfg)
    min_fe = int(cfg.get("min_frame_errors", 100))
    max_frames = int(cfg.get("max_frames", 2000))
    if min_fe < 0 or max_frames <= 0:
        raise ConfigError("stopping rule must be positive")
    cfg_json = json.dumps(cfg, sort_keys=True)
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    points = []
    try:
        for pi, snr in enumerate(snrs):
            frames = 0
            bits = 0
            ferrs = 0
            while frames < max_frames:
                n = min(_BATCH, max_frames - frames)
                chunk_edges = np.linspace(frames, frames + n,
                                          (workers if pool else 1) + 1,
                                          dtype=int)
                jobs = [(cfg_json, master_seed, pi, snr, int(a), int(b))
                        for a, b in zip(chunk_edges[:-1], chunk_edges[1:])
                        if b > a]
                results = (pool.map(_run_chunk, jobs) if pool
                           else map(_run_chunk, jobs))
                for db, df in results:
                    bits += db
                    ferrs += df
                frames += n
                if ferrs >= min_fe:
                    break
            K = _context(cfg_json, master_seed)[1].k
            points.append({
                "snr_db": snr,
                "frames": frames,
                "bit_errors": bits,
                "frame_errors": ferrs,
                "ber": bits / (frames * K),
                "fer": ferrs / frames,
                "seed": master_seed,
                "converged": min_fe > 0 and ferrs >= min_fe,
            })
    finally:
        if pool:
            pool.shutdown()
    return points


def _format_snr(v: float) -> str:
    return "inf" if math.isinf(v) else f"{v:g}"


def ber_points_to_csv(points) -> str:
    lines = [BER_HEADER]
    for pt in points:
        lines.append(",".join([
            _format_snr(pt["snr_db"]), str(pt["frames"]),
            str(pt["bit_errors"]), str(pt["frame_errors"]),
            f"{pt['ber']:.8g}", f"{pt['fer']:.8g}", str(pt["seed"]),
        ]))
    return "\n".join(lines) + "\n"


def _write_outputs(out_path: str, csv_text: str, manifest: dict):
    try:
        with open(out_path, "w") as fh:
            fh.write(csv_text)
        base, _ = os.path.splitext(out_path)
        with open(base + ".manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2)
    except OSError as e:
        raise IOError(f"cannot write output: {e}")


def _manifest(cfg: dict, seed: int, extra=None) -> dict:
    doc = {
        "config": cfg,
        "seed": seed,
        "version": __version__,
        "snr_definition": "snr_db = 10*log10(P), unit-variance noise",
    }
    if extra:
        doc.update(extra)
    return doc


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_codegen(cfg: dict, seed: int, out: str, workers: int) -> int:
    code = _build_code(cfg.get("code", cfg), seed)
    text = qc_ldpc.code_to_json(code)
    try:
        with open(out, "w") as fh:
            fh.write(text)
        base, _ = os.path.splitext(out)
        with open(base + ".manifest.json", "w") as fh:
            json.dump(_manifest(cfg, seed, {
                "n_prime": code.n, "k": code.k,
                "design_rate": code.design_rate}), fh, indent=2)
    except OSError as e:
        raise IOError(f"cannot write output: {e}")
    return 0


def _cmd_ber(kind: str):
    def run(cfg: dict, seed: int, out: str, workers: int) -> int:
        cfg = dict(cfg)
        cfg["kind"] = kind
        _require(cfg, "code")
        points = ber_sweep(cfg, seed, workers)
        _write_outputs(out, ber_points_to_csv(points),
                       _manifest(cfg, seed, {"points": points}))
        return 0
    return run


def _cmd_rates(cfg: dict, seed: int, out: str, workers: int) -> int:
    grid = _require(cfg, "d_max", list)
    if not grid:
        raise ConfigError("d_max: grid must be non-empty")
    pts = rates.monte_carlo_rates(
        S=int(cfg.get("S", 2)), M=int(cfg.get("M", 2)),
        P=float(cfg.get("P", 10.0)), d_max_list=grid,
        n_realizations=int(cfg.get("n_realizations", 1000)),
        seed=seed, a_bound=cfg.get("a_bound"), p=int(cfg.get("p", 2)))
    _write_outputs(out, rates.rate_points_to_csv(pts),
                   _manifest(cfg, seed, {"points": [vars(p) for p in pts]}))
    return 0


_COMMANDS = {
    "codegen": _cmd_codegen,
    "isi-ber": _cmd_ber("isi_ber"),
    "cf-frame-ber": _cmd_ber("cf_frame_ber"),
    "cf-symbol-ber": _cmd_ber("cf_symbol_ber"),
    "rates": _cmd_rates,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="idtqc",
        description="Asynchronous physical-layer network coding experiments")
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, help="JSON config path")
    parser.add_argument("--seed", type=int, default=None,
                        help="master seed (overrides config)")
    parser.add_argument("--out", default=None,
                        help="output path (overrides config)")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--long-run", action="store_true",
                        help="apply the config's long_run overrides")
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args.config)
        if not isinstance(cfg, dict):
            raise ConfigError("config root must be an object")
        cfg = _apply_long_run(cfg, args.long_run)
        seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
        out = args.out or cfg.get("out")
        if not out:
            raise ConfigError("missing output path (--out or config.out)")
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        return _COMMANDS[args.command](cfg, seed, out, args.workers)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # panic-free failure contract
        print(f"runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

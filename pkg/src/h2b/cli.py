"""``h2b`` command-line entry point.

Every subcommand is reproducible from its flags, an optional JSON config
file (``--config``) whose keys mirror :class:`ExperimentConfig`, and
``--seed``. Flags given explicitly override the config file.

Exit status: 0 on success, 1 when the pipeline fails (reason on stderr),
2 on usage errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import (BodyScenario, benchmark_reconciliation, bit_table, quantized_pairs,
                       randomness_suite, simulate_passive_attack, simulate_presentation_attack,
                       sparsity_histogram)
from .analysis.scenarios import derive_seed, parallel_map
from .errors import H2BError, ParameterError
from .ipi import SmootherConfig, extract_ipis
from .protocol import PairingSession, PipelineParams, ReconMessage, Role, pair_end_to_end
from .protocol.pipeline import margin_summary, paired_keys
from .quantizer import BitKey, build_key, fit_model
from .signalgen import HeartModel, SensorConfig
from .types import IpiSequence, Location, PiezoTrace

__all__ = ["ExperimentConfig", "main", "read_trace", "write_trace"]


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    n: int = 128
    m: int = 50
    levels: int = 64
    band: tuple = (4, 6)
    rate: float = 120.0
    noise_std: float = 0.2
    jitter_std: float = 2.0
    mean_ipi: float = 850.0
    ipi_std: float = 50.0
    ar_coefficient: float = 0.0
    n_ipis: int = 350
    epsilon: float = 1e-6
    trials: int = 100

    def __post_init__(self):
        object.__setattr__(self, "band", tuple(int(b) for b in self.band))
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ParameterError("seed must be a 64-bit unsigned integer")
        if self.trials < 1:
            raise ParameterError("trials must be at least 1")
        # Delegate the remaining checks to the modules these values feed.
        self.pipeline()
        self.heart()
        SensorConfig(sampling_rate=self.rate, noise_std=self.noise_std,
                     jitter_std=self.jitter_std)

    def pipeline(self, **overrides) -> PipelineParams:
        base = dict(n_bits=self.n, m=self.m, levels=self.levels, band=self.band,
                    matrix_seed=self.seed, epsilon=self.epsilon)
        base.update(overrides)
        return PipelineParams(**base)

    def heart(self, seed=None) -> HeartModel:
        return HeartModel(self.mean_ipi, self.ipi_std, self.ar_coefficient,
                          self.seed if seed is None else seed)

    def scenario(self, locations=(Location.CHEST, Location.WAIST), noise_free=False):
        return BodyScenario(tuple(locations), self.n_ipis, self.rate, self.noise_std,
                            self.jitter_std, noise_free)

    def to_json(self) -> dict:
        out = dataclasses.asdict(self)
        out["band"] = list(self.band)
        return out

    @classmethod
    def from_json(cls, obj) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ParameterError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**obj)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_json(json.loads(Path(path).read_text()))


# Trace files -----------------------------------------------------------------

def write_trace(trace: PiezoTrace, stem) -> tuple[Path, Path]:
    """``stem.csv`` (header, metadata row, one amplitude per line) and ``stem.json``."""
    stem = Path(stem)
    csv_path, json_path = stem.with_suffix(".csv"), stem.with_suffix(".json")
    lines = ["sampling_rate,location", f"{trace.sampling_rate:g},{trace.location.value}"]
    lines += [repr(float(v)) for v in trace.samples]
    csv_path.write_text("\n".join(lines) + "\n")
    json_path.write_text(json.dumps({
        "sampling_rate": trace.sampling_rate,
        "location": trace.location.value,
        "true_beat_times_ms": trace.true_beat_times.tolist(),
    }))
    return csv_path, json_path


def read_trace(path) -> PiezoTrace:
    path = Path(path)
    lines = path.read_text().split()
    if not lines or lines[0].strip() != "sampling_rate,location":
        raise ParameterError(f"{path}: missing 'sampling_rate,location' header")
    rate, location = lines[1].split(",")
    samples = np.array([float(v) for v in lines[2:]])
    sidecar = path.with_suffix(".json")
    beats = []
    if sidecar.exists():
        beats = json.loads(sidecar.read_text()).get("true_beat_times_ms", [])
    return PiezoTrace(samples, float(rate), np.asarray(beats, dtype=float), Location(location))


# Output ----------------------------------------------------------------------

def _emit(args, text: str):
    if not text.endswith("\n"):
        text += "\n"
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


def _band(text) -> tuple:
    try:
        low, high = (int(p) for p in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"band must look like LOW:HIGH, got {text!r}") from None
    return (low, high)


# Subcommands -----------------------------------------------------------------

def cmd_gen(args, cfg: ExperimentConfig):
    from .signalgen import generate_ipi_series, render_body, render_trace

    locations = [Location(x) for x in args.locations.split(",")]
    ipis = generate_ipi_series(cfg.heart(), cfg.n_ipis)
    sensors = [SensorConfig.at(loc, sampling_rate=cfg.rate, noise_std=cfg.noise_std,
                               jitter_std=cfg.jitter_std) for loc in locations]
    render_seed = derive_seed(cfg.seed, 1)
    if len(sensors) == 1:
        traces = [render_trace(ipis, sensors[0], seed=render_seed)]
    else:
        traces = render_body(ipis, sensors, seed=render_seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [str(write_trace(t, out_dir / t.location.value)[0]) for t in traces]
    _emit(args, _dump({"traces": written, "beats": len(ipis) + 1}) if args.json
          else "\n".join(written))
    return 0


def cmd_extract(args, cfg):
    trace = read_trace(args.trace)
    smoother = None
    if args.window is not None or args.order is not None:
        default = SmootherConfig.for_rate(trace.sampling_rate)
        smoother = SmootherConfig(args.window or default.window_length,
                                  default.poly_order if args.order is None else args.order)
    ipis = extract_ipis(trace, smoother)
    _emit(args, json.dumps(ipis.to_json()))
    return 0


def cmd_quantize(args, cfg):
    ipis = IpiSequence.from_json(json.loads(Path(args.ipis).read_text()))
    key = build_key(ipis, fit_model(ipis, cfg.levels), cfg.band)
    if args.bits:
        key = key.take(args.bits)
    _emit(args, json.dumps(key.to_json()))
    return 0


def _load_key(path) -> BitKey:
    return BitKey.from_json(json.loads(Path(path).read_text()))


def cmd_reconcile(args, cfg):
    key = _load_key(args.key)
    seed = cfg.seed if args.matrix_seed is None else args.matrix_seed
    role = Role.INITIATOR if args.role == "alice" else Role.RESPONDER
    session = PairingSession(role, seed, cfg.m, len(key), cfg.epsilon)
    if role is Role.INITIATOR:
        msg = session.initiate(key)
        _emit(args, _dump({"message": msg.to_bytes().hex(), "m": msg.m, "n": msg.n,
                           "matrix_seed": msg.matrix_seed, "y": msg.y_values.tolist()}))
        return 0
    if not args.message:
        raise ParameterError("--message is required for --role bob")
    text = Path(args.message).read_text().strip()
    wire = bytes.fromhex(json.loads(text)["message"] if text.startswith("{") else text)
    outcome = session.respond(ReconMessage.from_bytes(wire), key)
    report = {"verified": outcome.verified, "reason": outcome.reason,
              "final_key": outcome.final_key.hex if outcome.final_key else None,
              "notification": session.confirm().to_bytes().hex(),
              "corrected_bits": session.corrected_mismatch}
    _emit(args, _dump(report))
    if not outcome.verified:
        print(f"reconciliation failed: {outcome.reason}", file=sys.stderr)
    return 0 if outcome.verified else 1


def cmd_pair(args, cfg):
    params = cfg.pipeline()
    if bool(args.alice) != bool(args.bob):
        raise ParameterError("give both --alice and --bob, or neither")
    if args.alice:
        trace_a, trace_b = read_trace(args.alice), read_trace(args.bob)
    else:
        trace_a, trace_b = cfg.scenario(noise_free=args.noise_free).record(cfg.heart(), 0)[:2]
    result = pair_end_to_end(trace_a, trace_b, params)
    key_a, key_b = result.final_keys
    report = {
        "verified": result.verified,
        "reason": result.reason,
        "initiator_key": key_a.hex if key_a else None,
        "responder_key": key_b.hex if key_b else None,
    }
    diag = dict(result.diagnostics)
    if diag:
        report.update({k: diag[k] for k in ("aligned_ipis", "mismatch_bits", "mismatch_rate",
                                            "s_key")})
        report["margin"] = margin_summary(diag["margin"], diag["verdict"])
    if args.json:
        _emit(args, _dump(report))
    else:
        _emit(args, f"initiator {report['initiator_key']}\nresponder {report['responder_key']}")
    if not result.verified:
        print(f"pairing failed: {result.reason}", file=sys.stderr)
    return 0 if result.verified else 1


def cmd_bench(args, cfg):
    result = benchmark_reconciliation(args.method, cfg.n, cfg.m, args.mismatch_rate, cfg.trials,
                                      cfg.seed, args.threads, cfg.epsilon)
    if args.json:
        _emit(args, _dump({"method": result.method.value, "n": result.n, "m": result.m,
                           "mismatch_rate": result.mismatch_rate, "trials": result.trials,
                           "success_rate": result.success_rate}))
    else:
        _emit(args, result.to_csv())
    return 0


def cmd_bit_table(args, cfg):
    pairs = quantized_pairs(args.pairs, cfg.seed, cfg.scenario(), cfg.levels, cfg.heart(),
                            args.threads)
    if not pairs:
        raise H2BError("no recording produced a usable key pair")
    stats = bit_table(pairs, cfg.levels.bit_length() - 1)
    _emit(args, _dump({"rows": stats.rows()}) if args.json else stats.to_csv())
    return 0


def cmd_sparsity(args, cfg):
    report = sparsity_histogram(cfg.trials, cfg.n, cfg.pipeline(), cfg.seed, cfg.scenario(),
                                cfg.heart(), args.threads)
    if args.json:
        _emit(args, _dump({"trials": report.trials, "failed": report.failed, "m": report.m,
                           "fraction_p_ge_m": report.fraction_not_effective,
                           "mean_s_mismatch": float(report.s_mismatch.mean()),
                           "mean_s_attacker": float(report.s_attacker.mean())}))
    else:
        _emit(args, report.to_csv())
    return 0


def cmd_attack(args, cfg):
    params = cfg.pipeline()
    scenario = cfg.scenario(locations=(Location.CHEST,))
    if args.kind == "passive":
        users = [cfg.heart(seed=derive_seed(cfg.seed, 100, u)) for u in range(args.users)]
        report = simulate_passive_attack(users, cfg.trials, params, scenario, cfg.seed,
                                         args.threads)
    else:
        report = simulate_presentation_attack(cfg.heart(), cfg.trials, params, scenario,
                                              cfg.seed, args.threads)
    _emit(args, _dump(report.to_json()))
    return 0 if report.success_count == 0 else 1


def _pipeline_bits(cfg, n_keys, threads):
    params = cfg.pipeline()
    scenario = cfg.scenario()

    def one(t):
        try:
            key_a, _, _ = paired_keys(*scenario.record(cfg.heart(seed=derive_seed(cfg.seed, t)),
                                                       t)[:2], params)
            return key_a.bits
        except H2BError:
            return None

    keys = [k for k in parallel_map(one, range(n_keys), threads) if k is not None]
    return np.concatenate(keys) if keys else np.empty(0, dtype=np.uint8)


def cmd_nist(args, cfg):
    if args.bits:
        text = Path(args.bits).read_text()
        if text.lstrip().startswith("{"):
            bits = _load_key(args.bits).bits
        else:
            bits = np.array([int(c) for c in text if c in "01"], dtype=np.uint8)
    else:
        bits = _pipeline_bits(cfg, args.keys, args.threads)
    pvalues = randomness_suite(bits)
    passed = all(p >= 0.01 for p in pvalues.values())
    _emit(args, _dump({"bits": int(bits.size), "p_values": pvalues, "passed": passed}))
    return 0


# Parser ----------------------------------------------------------------------

_CONFIG_FLAGS = {
    "seed": int, "n": int, "m": int, "levels": int, "band": _band, "rate": float,
    "noise_std": float, "jitter_std": float, "mean_ipi": float, "ipi_std": float,
    "ar_coefficient": float, "n_ipis": int, "epsilon": float, "trials": int,
}
_FLAG_NAMES = {"noise_std": "--noise", "jitter_std": "--jitter", "ar_coefficient": "--ar",
               "n_ipis": "--count", "mean_ipi": "--mean-ipi", "ipi_std": "--ipi-std"}


def _common_parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("experiment")
    for name, kind in _CONFIG_FLAGS.items():
        flag = _FLAG_NAMES.get(name, "--" + name.replace("_", "-"))
        g.add_argument(flag, dest=name, type=kind, default=None,
                       help=f"overrides config '{name}'")
    g.add_argument("--config", help="JSON file with ExperimentConfig fields")
    g.add_argument("--json", action="store_true", help="machine-readable JSON output")
    g.add_argument("--out", help="write output here instead of stdout")
    g.add_argument("--threads", type=int, default=1, help="parallel trial workers")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="h2b", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, fn, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        p.set_defaults(func=fn)
        return p

    p = add("gen", cmd_gen, "render synthetic traces for several body locations")
    p.add_argument("--locations", default="chest,waist")
    p.add_argument("--out-dir", required=True)

    p = add("extract", cmd_extract, "extract IPIs from a trace CSV")
    p.add_argument("--trace", required=True)
    p.add_argument("--window", type=int)
    p.add_argument("--order", type=int)

    p = add("quantize", cmd_quantize, "turn an IPI JSON file into a key JSON file")
    p.add_argument("--ipis", required=True)
    p.add_argument("--bits", type=int, help="keep only the first BITS bits")

    p = add("reconcile", cmd_reconcile, "one side of the sketch exchange")
    p.add_argument("--role", choices=("alice", "bob"), required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--matrix-seed", type=int)
    p.add_argument("--message", help="alice's message (hex or its JSON output), for bob")

    p = add("pair", cmd_pair, "pair two traces end to end (generates a body pair if none given)")
    p.add_argument("--alice")
    p.add_argument("--bob")
    p.add_argument("--noise-free", action="store_true")

    def bench_args(p):
        p.add_argument("--method", choices=("cs", "rs"), default="cs")
        p.add_argument("--mismatch-rate", type=float, default=0.1)

    def attack_args(p):
        p.add_argument("--kind", choices=("passive", "presentation"), default="passive")
        p.add_argument("--users", type=int, default=10)

    def nist_args(p):
        p.add_argument("--bits", help="file of 0/1 characters or a key JSON")
        p.add_argument("--keys", type=int, default=80, help="pipeline keys to concatenate")

    bench_args(add("bench", cmd_bench, "CS vs RS reconciliation benchmark (per-trial CSV)"))
    attack_args(add("attack", cmd_attack, "passive or presentation attack simulation"))
    nist_args(add("nist", cmd_nist, "randomness tests on key bits"))

    analyze = sub.add_parser("analyze", help="evaluation tables and reports")
    asub = analyze.add_subparsers(dest="analysis", required=True, metavar="ANALYSIS")

    def add_analysis(name, fn, help_text):
        p = asub.add_parser(name, parents=[common], help=help_text, description=help_text)
        p.set_defaults(func=fn)
        return p

    add_analysis("bit-table", cmd_bit_table, "per-bit entropy and mismatch (CSV)").add_argument(
        "--pairs", type=int, default=50)
    add_analysis("sparsity", cmd_sparsity, "per-trial sparsities and P/Q (CSV)")
    bench_args(add_analysis("bench", cmd_bench, "CS vs RS reconciliation benchmark"))
    attack_args(add_analysis("attack", cmd_attack, "attack simulation report (JSON)"))
    nist_args(add_analysis("nist", cmd_nist, "randomness test report (JSON)"))
    return parser


def _config(args) -> ExperimentConfig:
    base = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    overrides = {k: getattr(args, k) for k in _CONFIG_FLAGS if getattr(args, k) is not None}
    return dataclasses.replace(base, **overrides)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        return args.func(args, cfg)
    except (H2BError, OSError, KeyError, ValueError) as exc:
        print(f"h2b {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry point: check-params, fit-relu, run-protocol, train,
replay and attack-bench."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import adversary as adv
from .fl import ATTACKS, FLConfig, config_dict, train
from .net import Transcript, derive_seed
from .params import check_counts, min_users, setup
from .protocol import ProtocolEngine, plaintext_oracle
from .quantizer import QuantConfig, normalize, quantize, required_prime, validate_params
from .relu_poly import curve_samples, embed_coeffs, fit_relu


def parse_config(path: str | Path) -> dict:
    """Flat ``key = value`` file; '#' starts a comment."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = val
    return out


def load_config(args) -> FLConfig:
    raw = parse_config(args.config) if getattr(args, "config", None) else {}
    for item in getattr(args, "set", None) or []:
        key, _, val = item.partition("=")
        raw[key.strip().replace("-", "_")] = val.strip()
    cfg = FLConfig.from_dict(raw)
    env = os.environ.get("BYITFL_SEED")
    if env is not None:
        cfg = replace(cfg, seed=int(env))
    return cfg


def _out_dir(args, default: str) -> Path:
    p = Path(args.out or default)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _dump(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# subcommands -----------------------------------------------------------------

def cmd_check_params(args) -> int:
    cfg = load_config(args)
    b = cfg.b if cfg.b_max is None else cfg.b_max
    need = min_users(b, cfg.k, cfg.m, cfg.t, cfg.p_drop)
    verdict = check_counts(cfg.n, b, cfg.k, cfg.m, cfg.t, cfg.p_drop)
    reasons = list(verdict.reasons)
    d = args.d or cfg.dim
    params, approx = setup(cfg.n, cfg.b, cfg.t, cfg.p_drop, cfg.m, cfg.k, cfg.q, d, epsilon=cfg.epsilon,
                           b_max=cfg.b_max, prime=args.prime)
    reasons += list(validate_params(params.quant).reasons)
    report = {"n": cfg.n, "min_users": need, "prime_bits": params.prime.bit_length(),
              "coeff_scale": params.coeff_scale, "ok": not reasons, "violations": reasons}
    print(json.dumps(report, indent=2))
    if reasons:
        for r in reasons:
            print(f"REJECT: {r}", file=sys.stderr)
        return 1
    print("OK")
    return 0


def cmd_fit_relu(args) -> int:
    approx = fit_relu(args.k, (-1.0, 1.0), args.nodes)
    out = _out_dir(args, "runs/fit-relu")
    doc = {"k": approx.k, "interval": list(approx.fit_interval), "coefficients": list(approx.real_coeffs),
           "max_abs_error": approx.max_abs_error, "nodes": args.nodes}
    if args.q:
        qc = QuantConfig(args.q, 2, args.d, args.k, args.n)
        emb = embed_coeffs(approx, args.q, required_prime(qc))
        doc["coeff_scale"] = emb.coeff_scale
        doc["int_coefficients"] = list(emb.int_coeffs)
    _dump(out / f"relu_k{args.k}.json", doc)
    with open(out / f"relu_k{args.k}.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x", "relu", "h"])
        for x, r, h in curve_samples(approx, args.points):
            wr.writerow([f"{x:.6f}", f"{r:.10f}", f"{h:.10f}"])
    print(json.dumps(doc, indent=2))
    return 0


def _protocol_inputs(cfg: FLConfig, params, round_idx: int, attackers):
    """Seeded synthetic updates clustered around the root update."""
    rng = np.random.default_rng(derive_seed(cfg.seed, "inputs", round_idx))
    d = params.d
    g0 = rng.normal(size=d)
    ups = {i: g0 + 0.8 * np.linalg.norm(g0) / np.sqrt(d) * rng.normal(size=d) for i in range(1, cfg.n + 1)}
    scaled = set()
    kind = ATTACKS.get(cfg.attack)
    for i in attackers:
        if kind == adv.SIGN_FLIP:
            ups[i] = -ups[i]
        elif kind == adv.SCALE:
            scaled.add(i)
    out = {}
    for i, g in ups.items():
        r = np.random.default_rng(derive_seed(cfg.seed, "quant", round_idx, i))
        gt = normalize(g) * (cfg.scale_factor if i in scaled else 1.0)
        out[i] = quantize(gt, params.quant, r, i, check_range=i not in scaled)
    r0 = np.random.default_rng(derive_seed(cfg.seed, "quant", round_idx, 0))
    return out, quantize(normalize(g0), params.quant, r0, 0), float(np.linalg.norm(g0))


def run_protocol(cfg: FLConfig, out: Path | None = None):
    params, approx = setup(cfg.n, cfg.b, cfg.t, cfg.p_drop, cfg.m, cfg.k, cfg.q, cfg.dim, epsilon=cfg.epsilon,
                           b_max=cfg.b_max)
    check = params.check()
    if not check:
        raise ValueError("; ".join(check.reasons))
    kind = ATTACKS[cfg.attack]
    attackers = []
    if kind is not None and cfg.b:
        rng = np.random.default_rng(derive_seed(cfg.seed, "attackers"))
        attackers = sorted(int(i) for i in rng.choice(np.arange(1, cfg.n + 1), cfg.b, replace=False))
    specs = [adv.AttackSpec(kind, frozenset(attackers))] if attackers and kind in adv.PROTOCOL_KINDS else []
    engine = ProtocolEngine(params, approx, seed=cfg.seed, attacks=specs)
    records, summaries = [], []
    for r in range(cfg.rounds):
        ups, g0, norm0 = _protocol_inputs(cfg, params, r, attackers)
        res = engine.run_round(ups, g0, norm0, round_idx=r)
        oracle = plaintext_oracle(ups, g0, approx, params.prime, res.included)
        rec = res.to_record()
        rec["oracle_match"] = oracle.field_quotients == res.field_quotients
        records.append(rec)
        tr = engine.transcripts[-1]
        tr.meta = {"config": config_dict(cfg), "round": r, "command": "run-protocol"}
        if out is not None:
            tr.export(out / f"transcript_r{r}")
        summaries.append(rec)
    return engine, records, attackers


def cmd_run_protocol(args) -> int:
    cfg = load_config(args)
    out = _out_dir(args, "runs/run-protocol")
    t0 = time.perf_counter()
    engine, records, attackers = run_protocol(cfg, out)
    with open(out / "rounds.jsonl", "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    summary = {"rounds": len(records), "attackers": attackers, "excluded": sorted(engine.excluded),
               "oracle_match": all(r["oracle_match"] for r in records),
               "wall_time": round(time.perf_counter() - t0, 3)}
    _dump(out / "summary.json", summary)
    print(json.dumps(summary, indent=2))
    return 0 if summary["oracle_match"] else 2


def cmd_train(args) -> int:
    cfg = load_config(args)
    out = _out_dir(args, "runs/train")
    if args.sweep:
        return _sweep(cfg, args.sweep, out)
    res = train(cfg, out / "metrics.csv")
    with open(out / "rounds.jsonl", "w") as fh:
        for rec in res.records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    summary = {"final_accuracy": res.final_accuracy, "attackers": res.attackers, "excluded": sorted(res.excluded),
               "skipped_rounds": res.skipped, "wall_time": round(res.wall_time, 3), "config": config_dict(cfg)}
    _dump(out / "summary.json", summary)
    print(json.dumps({k: v for k, v in summary.items() if k != "config"}, indent=2))
    return 0


def _sweep_one(item):
    cfg, path = item
    res = train(cfg, path)
    return path, res.final_accuracy


def _sweep(cfg: FLConfig, spec: str, out: Path) -> int:
    key, _, vals = spec.partition("=")
    key = key.strip().replace("-", "_")
    jobs = []
    for v in vals.split(","):
        c = FLConfig.from_dict({**config_dict(cfg), key: v.strip()})
        jobs.append((c, str(out / f"metrics_{key}_{v.strip()}.csv")))
    with ProcessPoolExecutor(max_workers=max(1, min(len(jobs), os.cpu_count() or 1))) as ex:
        for path, acc in ex.map(_sweep_one, jobs):
            print(f"{path}: final accuracy {acc:.4f}")
    return 0


def cmd_replay(args) -> int:
    """Re-execute the run recorded in a transcript and compare byte for byte."""
    prefix = Path(args.log)
    if prefix.suffix in (".bin", ".json"):
        prefix = prefix.with_suffix("")
    old = Transcript.load(prefix)
    meta = old.meta
    if meta.get("command") != "run-protocol":
        print("transcript carries no replayable run-protocol metadata", file=sys.stderr)
        return 2
    cfg = FLConfig.from_dict(meta["config"])
    r = int(meta["round"])
    engine, _, _ = run_protocol(replace(cfg, rounds=r + 1))
    new = engine.transcripts[r]
    same = new.to_bytes() == old.to_bytes()
    print(json.dumps({"records": len(old), "identical": same}, indent=2))
    return 0 if same else 1


def cmd_attack_bench(args) -> int:
    cfg = load_config(args)
    out = _out_dir(args, "runs/attack-bench")
    attacks = args.attacks.split(",")
    aggs = args.aggregators.split(",")
    rows = []
    for att in attacks:
        for agg in aggs:
            c = replace(cfg, attack=att, aggregator=agg, b=(0 if att == "none" else cfg.b))
            res = train(c, out / f"metrics_{agg}_{att}.csv")
            rows.append((att, agg, res.final_accuracy, len(res.excluded), round(res.wall_time, 3)))
            print(f"{att:>18} {agg:>15} acc={res.final_accuracy:.4f} excluded={len(res.excluded)}")
    with open(out / "bench.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["attack", "aggregator", "final_accuracy", "excluded_count", "wall_time"])
        for row in rows:
            wr.writerow([row[0], row[1], f"{row[2]:.6f}", row[3], row[4]])
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="byitfl", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
        p.add_argument("--out", help="output directory")

    p = sub.add_parser("check-params", help="check the user-count bound and field guards")
    common(p)
    p.add_argument("--d", type=int, help="model dimension (default: dim)")
    p.add_argument("--prime", type=int, help="test this prime instead of the auto-selected one")
    p.set_defaults(fn=cmd_check_params)

    p = sub.add_parser("fit-relu", help="fit the polynomial ReLU and emit JSON + CSV")
    p.add_argument("--k", type=int, default=6)
    p.add_argument("--nodes", type=int, default=1001)
    p.add_argument("--points", type=int, default=201)
    p.add_argument("--q", type=int, default=0, help="also embed for this q")
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_fit_relu)

    p = sub.add_parser("run-protocol", help="run secure rounds on synthetic updates")
    common(p)
    p.set_defaults(fn=cmd_run_protocol)

    p = sub.add_parser("train", help="federated training with a chosen aggregator")
    common(p)
    p.add_argument("--sweep", help="KEY=v1,v2,... run independent configs in parallel")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("replay", help="re-execute a recorded protocol round and compare transcripts")
    p.add_argument("--log", required=True, help="transcript prefix (or its .bin/.json file)")
    p.set_defaults(fn=cmd_replay)

    p = sub.add_parser("attack-bench", help="accuracy of each aggregator under each attack")
    common(p)
    p.add_argument("--attacks", default="none,trim,label_flip")
    p.add_argument("--aggregators", default="fedavg,fltrust-exact,fltrust-approx")
    p.set_defaults(fn=cmd_attack_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

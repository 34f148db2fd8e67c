"""Operator entry points: eval, gen-data, score-qa, replay, serve-planner-endpoint.

Exit codes: 0 success, 1 configuration/input error, 2 planner failure.
Every subcommand is deterministic given identical inputs and seeds; output
files are byte-identical across repeated runs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .config import ConfigError, HarnessConfig, apply_overrides, load_config
from .datagen import (MixtureSpec, build_mixture, make_trajectory_pair,
                      read_qa_jsonl, write_qa_jsonl)
from .harness import (BenchmarkRun, FingerprintMismatch, InProcessProvider,
                      ReplayDivergence, WireProvider, load_trace, replay,
                      run_benchmark, save_trace)
from .planners import FAULT_PLANNER_NAMES, fault_factory, oracle_factory
from .scenario import ScenarioInvalid
from .scoring import render_table, report_to_dict
from .suites import resolve_scenarios
from .textmetrics import (EmptyCorpus, ScoredPair, SingletonCorpus, bleu,
                          cider_d)
from .wire import HandshakeVersionMismatch, WirePlannerServer

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PLANNER = 2


def _load_cfg(args) -> HarnessConfig:
    cfg = load_config(args.config) if args.config else HarnessConfig()
    overrides = list(args.set or [])
    if getattr(args, "attention_prefix", None):
        overrides.append(f"attention_prefix={args.attention_prefix}")
    if getattr(args, "seed", None) is not None:
        overrides.append(f"seed={args.seed}")
    return apply_overrides(cfg, overrides)


def _make_provider(args, cfg: HarnessConfig):
    selector = args.planner
    if selector == "oracle":
        return InProcessProvider(oracle_factory(cfg.oracle), "oracle")
    if selector.startswith("faults:"):
        name = selector.split(":", 1)[1]
        return InProcessProvider(fault_factory(name, cfg.oracle), name)
    if selector == "external":
        if not args.endpoint:
            raise ConfigError("--planner external requires --endpoint host:port")
        host, _, port = args.endpoint.partition(":")
        server = WirePlannerServer(host=host or "127.0.0.1",
                                   port=int(port) if port else 0,
                                   accept_timeout_s=args.accept_timeout)
        bound = server.listen()
        print(f"waiting for planner client on {server.host}:{bound}", flush=True)
        return WireProvider(server)
    raise ConfigError(f"unknown planner selector {selector!r}; expected oracle, "
                      f"faults:<{'|'.join(FAULT_PLANNER_NAMES)}> or external")


def _write_benchmark(run: BenchmarkRun, out_dir: str, invocation: list[str]) -> None:
    os.makedirs(out_dir, exist_ok=True)
    traces_dir = os.path.join(out_dir, "traces")
    os.makedirs(traces_dir, exist_ok=True)
    for trace in run.traces:
        save_trace(trace, os.path.join(traces_dir, f"{trace.episode_id}.json"))
    payload = {
        "invocation": invocation,
        "errors": [{"episode_id": e, "message": m} for e, m in run.errors],
        "report": report_to_dict(run.report) if run.report else None,
    }
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(out_dir, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write("invocation: " + " ".join(invocation) + "\n\n")
        if run.report:
            fh.write(render_table(run.report))
        for episode_id, message in run.errors:
            fh.write(f"episode {episode_id} failed: {message}\n")


def _cmd_eval(args, invocation) -> int:
    cfg = _load_cfg(args)
    scenarios = resolve_scenarios(args.routes)
    provider = _make_provider(args, cfg)
    try:
        run = run_benchmark(scenarios, provider, cfg)
    except HandshakeVersionMismatch as exc:
        print(f"planner handshake failed: {exc}", file=sys.stderr)
        return EXIT_PLANNER
    finally:
        provider.close()
    _write_benchmark(run, args.out, invocation)
    if run.report:
        print(render_table(run.report), end="")
    for episode_id, message in run.errors:
        print(f"episode {episode_id} failed: {message}", file=sys.stderr)
    return EXIT_PLANNER if run.errors or run.report is None else EXIT_OK


def _cmd_gen_data(args, invocation) -> int:
    cfg = _load_cfg(args)
    scenarios = resolve_scenarios(args.routes)
    provider = InProcessProvider(oracle_factory(cfg.oracle), "oracle")
    run = run_benchmark(scenarios, provider, cfg)
    os.makedirs(args.out, exist_ok=True)
    stride = int(round(cfg.oracle.wp_dt / cfg.dt))
    datasets = {}
    all_pairs = []
    for trace in run.traces:
        pairs = []
        last_start = len(trace.ticks) - 1 - 5 * stride
        for tick in range(0, last_start + 1, args.stride):
            pairs.append(make_trajectory_pair(
                _route_of(trace), trace.ticks, tick, lookahead=cfg.lookahead,
                wp_dt=cfg.oracle.wp_dt, dt=cfg.dt))
        all_pairs.extend(pairs)
    write_qa_jsonl(all_pairs, os.path.join(args.out, "carla.jsonl"))
    datasets["carla"] = all_pairs
    manifest = {
        "invocation": invocation,
        "pairs": {"carla": len(all_pairs)},
    }
    if args.mixture:
        with open(args.mixture, encoding="utf-8") as fh:
            spec = MixtureSpec.from_dict(json.load(fh))
        for tag, _ in spec.streams:
            if tag not in datasets:
                path = os.path.join(os.path.dirname(args.mixture), f"{tag}.jsonl")
                if not os.path.exists(path):
                    print(f"mixture tag {tag!r}: no dataset file {path}",
                          file=sys.stderr)
                    return EXIT_CONFIG
                datasets[tag] = read_qa_jsonl(path)
        stream = build_mixture(spec, datasets)
        write_qa_jsonl(stream, os.path.join(args.out, "mixture.jsonl"))
        manifest["mixture"] = {
            "seed": spec.seed,
            "streams": [{"source": tag, "repeat": rep,
                         "emitted": len(datasets[tag]) * rep}
                        for tag, rep in spec.streams],
            "total": len(stream),
        }
    with open(os.path.join(args.out, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_OK


def _route_of(trace):
    from .scenario import scenario_from_dict
    return scenario_from_dict(trace.scenario).route


def _read_jsonl(path: str) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}:{lineno}: malformed record: {exc.msg}")
    return records


def _cmd_score_qa(args, invocation) -> int:
    predictions = _read_jsonl(args.predictions)
    references = _read_jsonl(args.references)
    refs_by_id = {}
    for record in references:
        refs_by_id[str(record["id"])] = record["references"]
    pairs = []
    seen = set()
    for record in predictions:
        rid = str(record["id"])
        if rid not in refs_by_id:
            print(f"id mismatch: prediction id {rid!r} has no reference record",
                  file=sys.stderr)
            return EXIT_CONFIG
        seen.add(rid)
        pairs.append(ScoredPair.from_text(rid, str(record["hypothesis"]),
                                          refs_by_id[rid]))
    missing = sorted(set(refs_by_id) - seen)
    if missing:
        print(f"id mismatch: reference id {missing[0]!r} has no prediction",
              file=sys.stderr)
        return EXIT_CONFIG
    try:
        mean_cider, per_pair = cider_d(pairs)
        bleu_score = bleu(pairs, sentence_level=args.bleu_mode == "sentence")
    except (EmptyCorpus, SingletonCorpus) as exc:
        print(f"cannot score: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    scale = 10.0 if args.cider_scale == "x10" else 1.0
    payload = {
        "invocation": invocation,
        "bleu": bleu_score,
        "bleu_mode": args.bleu_mode,
        "cider_d": mean_cider * scale,
        "cider_scale": args.cider_scale,
        "per_pair_cider": {k: v * scale for k, v in sorted(per_pair.items())},
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"bleu={bleu_score:.6f} cider_d={mean_cider * scale:.6f}")
    return EXIT_OK


def _cmd_replay(args, invocation) -> int:
    trace = load_trace(args.trace)
    try:
        result = replay(trace)
    except (FingerprintMismatch, ReplayDivergence) as exc:
        print(f"replay failed: {exc}", file=sys.stderr)
        return EXIT_PLANNER
    print(f"route {result.route_id}: rc={result.rc:.2f} is={result.infraction:.4f} "
          f"ds={result.ds:.2f} termination={result.termination.value}")
    recorded = trace.get("result", {})
    matches = (abs(recorded.get("ds", -1.0) - result.ds) < 1e-9
               and recorded.get("termination") == result.termination.value)
    print(f"matches recorded result: {'yes' if matches else 'no'}")
    return EXIT_OK if matches else EXIT_PLANNER


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="driveloop",
        description="Closed-loop driving evaluation harness with a textual "
                    "waypoint planning protocol.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, planner=False):
        p.add_argument("--config", help="harness config JSON file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a declared config key (repeatable)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", default="out", help="output directory")
        if planner:
            p.add_argument("--routes", required=True,
                           help="scenario directory or builtin:<suite>")
            p.add_argument("--planner", default="oracle",
                           help="oracle | faults:<name> | external")
            p.add_argument("--endpoint", help="host:port for --planner external")
            p.add_argument("--attention-prefix", choices=("on", "off"),
                           help="toggle the cautionary prompt prefix")
            p.add_argument("--accept-timeout", type=float, default=30.0,
                           help="seconds to wait for an external client")

    p_eval = sub.add_parser("eval", help="run a closed-loop benchmark")
    common(p_eval, planner=True)

    p_serve = sub.add_parser(
        "serve-planner-endpoint",
        help="bind the wire endpoint and run the benchmark against one "
             "attached external planner client")
    common(p_serve, planner=True)

    p_gen = sub.add_parser("gen-data", help="generate planning QA data")
    common(p_gen)
    p_gen.add_argument("--routes", required=True,
                       help="scenario directory or builtin:<suite>")
    p_gen.add_argument("--stride", type=int, default=5,
                       help="ticks between emitted QA pairs")
    p_gen.add_argument("--mixture", help="mixture spec JSON file")

    p_score = sub.add_parser("score-qa", help="score predictions with BLEU and CIDEr-D")
    p_score.add_argument("--predictions", required=True,
                         help="JSON-lines {id, hypothesis}")
    p_score.add_argument("--references", required=True,
                         help="JSON-lines {id, references[]}")
    p_score.add_argument("--out", default="scores.json")
    p_score.add_argument("--bleu-mode", choices=("corpus", "sentence"),
                         default="corpus")
    p_score.add_argument("--cider-scale", choices=("raw", "x10"), default="raw")

    p_replay = sub.add_parser("replay", help="re-run an episode from its trace")
    p_replay.add_argument("--trace", required=True, help="trace JSON file")

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    invocation = ["driveloop"] + argv
    try:
        if args.command in ("eval", "serve-planner-endpoint"):
            if args.command == "serve-planner-endpoint":
                args.planner = "external"
            return _cmd_eval(args, invocation)
        if args.command == "gen-data":
            return _cmd_gen_data(args, invocation)
        if args.command == "score-qa":
            return _cmd_score_qa(args, invocation)
        if args.command == "replay":
            return _cmd_replay(args, invocation)
        parser.error(f"unknown command {args.command!r}")
    except (ConfigError, ScenarioInvalid, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: ``flowcomm {spectrum,communities,compare}``."""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .analysis import core_overlap, scale_summary, write_overlap_csv
from .communities import (
    Partition,
    edge_similarity,
    multiscale_sweep,
    write_partitions_json,
)
from .dynamics import InstabilityError, SimulationConfig, prepare_flow, simulate
from .graph import load_edge_list, load_item_sets, load_node_attributes, largest_component
from .operators import (
    ConvergenceError,
    Laplacian,
    canonical_replicator,
    smallest_eigenvalues,
)

logger = logging.getLogger("flowcomm")

MODEL_ALIASES = {
    "conservative": "conservative",
    "laplacian": "conservative",
    "nonconservative": "nonconservative",
    "replicator": "nonconservative",
}

PARTITIONS = "partitions.json"
REPORT = "report.json"
COHESIVENESS = "cohesiveness.csv"
MANIFEST = "manifest.json"
STEADY = "steady_states.csv"
SNAPSHOTS = "snapshots.csv"


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _read_graph(path, all_components):
    with open(path, encoding="utf-8") as f:
        g = load_edge_list(f)
    if not all_components and g.num_nodes:
        g, _ = largest_component(g)
    return g


def _read_config(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment.  Keys may use - or _."""
    out = {}
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = val
    return out


def _dump_json(obj, path):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, indent=1, sort_keys=True)
        f.write("\n")


def cmd_spectrum(args) -> int:
    g = _read_graph(args.graph, args.all_components)
    if args.k > g.num_nodes:
        print(f"error: k={args.k} exceeds the number of nodes N={g.num_nodes}", file=sys.stderr)
        return 2
    if args.model == "conservative":
        kind = Laplacian()
    else:
        kind = canonical_replicator(g, args.alpha_mode)
    status = 0
    try:
        summary = smallest_eigenvalues(kind, g, args.k, tol=args.tol)
    except ConvergenceError as exc:
        logger.error("%s", exc)
        summary = exc.partial
        status = 1
        if summary is None:
            return status
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as f:
            summary.to_csv(f)
    else:
        summary.to_csv(sys.stdout)
    return status


def cmd_communities(args) -> int:
    if not args.mu:
        print("error: at least one --mu is required", file=sys.stderr)
        return 2
    mus = sorted(set(float(m) for m in args.mu))
    eval_step = args.steps if args.eval_step is None else args.eval_step
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    g = _read_graph(args.graph, args.all_components)
    attrs = items = None
    if args.attrs:
        with open(args.attrs, encoding="utf-8", newline="") as f:
            attrs = load_node_attributes(f, g)
    if args.items:
        with open(args.items, encoding="utf-8") as f:
            items = load_item_sets(f, g)

    cfg = SimulationConfig(
        model=args.model,
        step_size=args.dt,
        num_steps=args.steps,
        num_runs=args.runs,
        seed=args.seed,
        snapshot_times=(eval_step,),
        alpha_mode=args.alpha_mode,
        workers=args.workers,
    )
    flow = prepare_flow(g, cfg.model, cfg.alpha_mode)
    try:
        bundle = simulate(cfg, g, flow=flow)
    except InstabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    sims = edge_similarity(bundle, g, eval_step, num_threads=args.workers)
    if sims.num_undefined:
        logger.warning("%d edges have undefined similarity and never merge", sims.num_undefined)
    report = multiscale_sweep(g, sims, mus)
    features = attrs.features if attrs is not None else []
    summary = scale_summary(report, g, attrs, features, items)

    with open(out / PARTITIONS, "w", encoding="utf-8") as f:
        write_partitions_json(report, g, f)
    _dump_json(report.to_json_obj(g), out / REPORT)
    with open(out / COHESIVENESS, "w", encoding="utf-8", newline="") as f:
        summary.write_csv(f)
    outputs = {"partitions": PARTITIONS, "report": REPORT, "cohesiveness": COHESIVENESS}
    if args.save_trajectories:
        with open(out / STEADY, "w", encoding="utf-8", newline="") as f:
            bundle.write_steady_csv(g, f)
        with open(out / SNAPSHOTS, "w", encoding="utf-8", newline="") as f:
            bundle.write_snapshots_csv(g, f)
        outputs.update(steady_states=STEADY, snapshots=SNAPSHOTS)

    inputs = {"graph": {"path": str(args.graph), "sha256": _sha256(args.graph)}}
    for key in ("attrs", "items"):
        path = getattr(args, key)
        if path:
            inputs[key] = {"path": str(path), "sha256": _sha256(path)}
    manifest = {
        "tool": "flowcomm",
        "version": __version__,
        "inputs": inputs,
        "config": {
            "model": cfg.model,
            "runs": cfg.num_runs,
            "steps": cfg.num_steps,
            "dt": bundle.step_size,
            "dt_requested": args.dt,
            "seed": cfg.seed,
            "alpha_mode": cfg.alpha_mode,
            "largest_component_only": not args.all_components,
        },
        "mu": mus,
        "eval_step": eval_step,
        "out": str(args.out),
        "num_nodes": g.num_nodes,
        "num_edges": g.num_edges,
        "outputs": outputs,
        "warnings": {"undefined_similarity_edges": sims.num_undefined},
    }
    _dump_json(manifest, out / MANIFEST)
    return 0


def _load_run(manifest_path):
    manifest_path = Path(manifest_path)
    with open(manifest_path, encoding="utf-8") as f:
        manifest = json.load(f)
    with open(manifest_path.parent / manifest["outputs"]["partitions"], encoding="utf-8") as f:
        parts = json.load(f)["partitions"]
    return manifest, parts


def _node_set(part_obj):
    return {nid for c in part_obj["communities"] for nid in c}


def cmd_compare(args) -> int:
    ma, pa = _load_run(args.manifest_a)
    mb, pb = _load_run(args.manifest_b)
    if ma["inputs"]["graph"]["sha256"] != mb["inputs"]["graph"]["sha256"]:
        logger.warning("runs were made on different graph files")
    if args.pair:
        pairs = []
        for pair in args.pair:
            try:
                ia, ib = (int(s) for s in pair.split(":"))
            except ValueError:
                print(f"error: bad --pair {pair!r}, expected IA:IB", file=sys.stderr)
                return 2
            pairs.append((ia, ib))
    else:
        pairs = [(k, k) for k in range(min(len(pa), len(pb)))]
    rows = []
    for ia, ib in pairs:
        if not (0 <= ia < len(pa) and 0 <= ib < len(pb)):
            print(f"error: scale pair {ia}:{ib} out of range ({len(pa)}, {len(pb)} scales)",
                  file=sys.stderr)
            return 2
        na, nb = _node_set(pa[ia]), _node_set(pb[ib])
        if na != nb:
            print("error: runs cover different node sets", file=sys.stderr)
            return 1
        ids = sorted(na)
        part_a = Partition.from_json_obj(pa[ia], ids)
        part_b = Partition.from_json_obj(pb[ib], ids)
        label = f"{pa[ia]['mu']!r}:{pb[ib]['mu']!r}"
        rows.append(core_overlap(part_a, part_b, scale=label, method=args.overlap))
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as f:
            write_overlap_csv(rows, f)
    else:
        write_overlap_csv(rows, sys.stdout)
    return 0


def _model(value):
    try:
        return MODEL_ALIASES[value]
    except KeyError:
        raise argparse.ArgumentTypeError(
            f"invalid model {value!r}; choose conservative or nonconservative") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flowcomm", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key=value file; command-line flags override it")
        p.add_argument("--model", type=_model, default="conservative",
                       help="conservative|nonconservative (aliases laplacian|replicator)")
        p.add_argument("--alpha-mode", choices=["per-component", "global"],
                       default="per-component")
        p.add_argument("--all-components", action="store_true",
                       help="keep every component instead of only the largest")

    p = sub.add_parser("spectrum", help="smallest eigenvalues of the flow operator")
    p.add_argument("graph")
    common(p)
    p.add_argument("-k", type=int, default=10)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("communities", help="simulate, cluster at each --mu, summarise")
    p.add_argument("graph")
    common(p)
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--dt", type=float, default=None,
                   help="Euler step (default: half the stability bound)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eval-step", type=int, default=None,
                   help="step at which similarities are measured (default: --steps)")
    p.add_argument("--mu", type=float, action="append", default=[],
                   help="similarity threshold; repeat for several scales")
    p.add_argument("--attrs", help="node attribute CSV")
    p.add_argument("--items", help="'node item' file for co-vote cohesiveness")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--save-trajectories", action="store_true")
    p.set_defaults(func=cmd_communities)

    p = sub.add_parser("compare", help="core overlap between two communities runs")
    p.add_argument("manifest_a")
    p.add_argument("manifest_b")
    p.add_argument("--pair", action="append", default=[],
                   help="IA:IB scale indices to compare (default: equal indices)")
    p.add_argument("--overlap", choices=["min", "jaccard"], default="min")
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)
    return parser


def _apply_config(parser, argv):
    """Re-parse with defaults taken from ``--config`` so explicit flags win."""
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    values = _read_config(args.config)
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, val in values.items():
        if key not in known:
            parser.error(f"unknown config key {key!r}")
        action = known[key]
        if key == "mu":
            defaults[key] = [float(v) for v in val.replace(",", " ").split()]
        elif isinstance(action, argparse._StoreTrueAction):
            defaults[key] = val.lower() in ("1", "true", "yes", "on")
        else:
            defaults[key] = action.type(val) if action.type else val
    subparser.set_defaults(**defaults)
    args = parser.parse_args(argv)
    if key_given(argv, "--mu") and "mu" in defaults:
        # repeatable flag: explicit values replace the config list
        args.mu = args.mu[len(defaults["mu"]):]
    return args


def key_given(argv, flag):
    return any(a == flag or a.startswith(flag + "=") for a in argv)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = _apply_config(parser, argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

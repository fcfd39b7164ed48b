"""Command-line pipeline: build, export, query, synth, compare.

Exit codes: 0 success, 1 I/O or validation failure, 2 usage error.
Diagnostics go to stderr; artifacts go to files or stdout, never mixed.
The parsed argparse namespace is the run configuration.
"""

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import depgraph, graphio, ingest, scenario, synth, topology
from .errors import CyberDepError, FormatError, ValidationError

_FORMAT_SUFFIXES = {".json": "json", ".dot": "dot", ".gv": "dot", ".graphml": "graphml"}


def _diag(message: str) -> None:
    print(message, file=sys.stderr)


def _load_topology(args) -> topology.Topology:
    if args.topo is None:
        return topology.default_topology()
    path = Path(args.topo)
    if not path.is_file():
        raise FormatError(f"topology file not found: {path}")
    with open(path, "rb") as fh:
        return topology.load_topology(fh)


def _read_input(path_str: str) -> bytes:
    path = Path(path_str)
    if not path.is_file():
        raise FormatError(f"input file not found: {path}")
    return path.read_bytes()


def _write_output(path_str: str | None, payload: bytes) -> None:
    if path_str is None or path_str == "-":
        sys.stdout.buffer.write(payload)
        sys.stdout.buffer.flush()
    else:
        Path(path_str).write_bytes(payload)


def _pick_format(args) -> str:
    if args.format:
        return args.format
    if args.out and args.out != "-":
        suffix = Path(args.out).suffix.lower()
        if suffix in _FORMAT_SUFFIXES:
            return _FORMAT_SUFFIXES[suffix]
    return "json"


def _build_from_capture(args, capture_path: str, topo: topology.Topology):
    window = ingest.parse_packet_log(_read_input(capture_path), source_label=capture_path)
    filtered = ingest.filter_dnp3(window)
    mapped, unmapped = topology.map_window(topo, filtered)
    counts = depgraph.count_flows(mapped, window.source_label)
    dropped_total = 0
    if not args.no_scada_collapse:
        counts, dropped_total = depgraph.collapse_to_scada(counts, topo)
    graph = depgraph.edge_probabilities(
        counts, depgraph.Normalization(args.normalization), topo.roles()
    )

    stats = window.stats
    _diag(
        f"{capture_path}: parsed {stats.parsed}/{stats.total} lines "
        f"({stats.rejected} rejected); dnp3 retained {len(filtered.records)} "
        f"(filtered out {filtered.stats.filtered_out})"
    )
    _diag(
        f"{capture_path}: mapped {len(mapped)} records "
        f"({unmapped.records} unmapped); non-scada flow dropped: {dropped_total}"
    )
    if args.verbose:
        for reject in window.rejections[:20]:
            _diag(f"  rejected line {reject.line_no}: {reject.reason}")
        for addr, n in sorted(unmapped.by_addr.items()):
            _diag(f"  unmapped address {addr}: {n} records")
    return graph


def cmd_build(args) -> int:
    topo = _load_topology(args)
    graph = _build_from_capture(args, args.input, topo)
    fmt = _pick_format(args)
    _write_output(args.out, graphio.render_graph(graph, fmt))
    _diag(
        f"graph: {len(graph.nodes)} nodes, {len(graph.edges)} edges, "
        f"grand_total {graph.grand_total} ({fmt} -> {args.out or 'stdout'})"
    )
    return 0


def cmd_export(args) -> int:
    graph = graphio.load_graph_json(_read_input(args.input))
    _write_output(args.out, graphio.render_graph(graph, args.format))
    return 0


def cmd_query(args) -> int:
    graph = graphio.load_graph_json(_read_input(args.input))
    active = [name for name in (args.active or "").split(",") if name]
    q = depgraph.ConditionalQuery(args.target, {name: True for name in active})
    result = depgraph.query(graph, q)
    print(f"{result:.6g}")
    return 0


def cmd_synth(args) -> int:
    topo = _load_topology(args)
    if args.profile in synth.BUILTIN_PROFILES:
        profile = synth.builtin_profile(
            args.profile,
            topo,
            n_messages=args.n if args.n is not None else synth.DEFAULT_N_MESSAGES,
            seed=args.seed if args.seed is not None else synth.DEFAULT_SEED,
            noise_fraction=args.noise_fraction,
        )
    else:
        path = Path(args.profile)
        if not path.is_file():
            raise FormatError(
                f"profile {args.profile!r} is neither a built-in "
                f"({', '.join(synth.BUILTIN_PROFILES)}) nor a file"
            )
        profile = synth.load_profile(path.read_bytes())
        overrides = {}
        if args.n is not None:
            overrides["n_messages"] = args.n
        if args.seed is not None:
            overrides["seed"] = args.seed
        if overrides:
            profile = dataclasses.replace(profile, **overrides)
    payload = synth.generate(profile, topo)
    _write_output(args.out, payload)
    _diag(
        f"synth {profile.scenario.value}: {profile.n_messages} dnp3 messages, "
        f"seed {profile.seed} -> {args.out or 'stdout'}"
    )
    return 0


def cmd_compare(args) -> int:
    topo = _load_topology(args)
    manifest_path = Path(args.input)
    try:
        entries = json.loads(_read_input(args.input))
    except json.JSONDecodeError as exc:
        raise FormatError(f"manifest is not valid json: {exc.msg}")
    if not isinstance(entries, list) or not entries:
        raise ValidationError("manifest must be a non-empty json list")

    runs = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise FormatError(f"manifest[{i}] is not an object")
        try:
            kind = scenario.ScenarioKind(entry.get("scenario"))
        except ValueError:
            raise FormatError(f"manifest[{i}]: unknown scenario {entry.get('scenario')!r}")
        run_id = entry.get("run_id")
        if not isinstance(run_id, int) or isinstance(run_id, bool):
            raise FormatError(f"manifest[{i}]: 'run_id' must be an integer")
        capture = entry.get("capture")
        if not isinstance(capture, str):
            raise FormatError(f"manifest[{i}]: 'capture' must be a path string")
        capture_path = str((manifest_path.parent / capture))
        graph = _build_from_capture(args, capture_path, topo)
        runs.append(scenario.ScenarioRun(kind, run_id, capture, graph))

    report = scenario.compare(runs, uniformity_tol=args.uniformity_tol)
    if args.format == "text":
        payload = report.to_text().encode("utf-8")
    else:
        payload = (json.dumps(report.to_json_dict(), indent=2) + "\n").encode("utf-8")
    _write_output(args.out, payload)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cyberdep",
        description="Dependency graphs and noisy-OR queries over DNP3 traffic logs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, topo=True):
        p.add_argument("-v", "--verbose", action="store_true", help="verbose diagnostics")
        if topo:
            p.add_argument(
                "--topo",
                default=None,
                help="topology JSON path (default: bundled wscc9 fixture)",
            )

    p_build = sub.add_parser("build", help="build a dependency graph from a packet log")
    p_build.add_argument("--in", dest="input", required=True, help="JSON Lines capture path")
    p_build.add_argument("--out", default=None, help="output path ('-' or absent: stdout)")
    p_build.add_argument(
        "--format",
        choices=graphio.FORMATS,
        default=None,
        help="output format (default: inferred from --out suffix, else json)",
    )
    p_build.add_argument(
        "--normalization",
        choices=["global", "per-sink"],
        default="global",
        help="edge probability normalization scheme",
    )
    p_build.add_argument(
        "--no-scada-collapse",
        action="store_true",
        help="keep raw directed device pairs instead of collapsing onto the SCADA master",
    )
    common(p_build)

    p_export = sub.add_parser("export", help="re-emit a graph JSON file in another format")
    p_export.add_argument("--in", dest="input", required=True, help="graph JSON path")
    p_export.add_argument("--format", choices=graphio.FORMATS, required=True)
    p_export.add_argument("--out", default=None, help="output path ('-' or absent: stdout)")
    common(p_export, topo=False)

    p_query = sub.add_parser("query", help="noisy-OR conditional probability of a node")
    p_query.add_argument("--in", dest="input", required=True, help="graph JSON path")
    p_query.add_argument("--target", required=True, help="target node name")
    p_query.add_argument(
        "--active", default="", help="comma-separated active parent node names"
    )
    common(p_query, topo=False)

    p_synth = sub.add_parser("synth", help="generate a synthetic capture")
    p_synth.add_argument(
        "--profile",
        required=True,
        help=f"built-in profile ({', '.join(synth.BUILTIN_PROFILES)}) or profile JSON path",
    )
    p_synth.add_argument("--out", default=None, help="output path ('-' or absent: stdout)")
    p_synth.add_argument("--seed", type=int, default=None, help="RNG seed override")
    p_synth.add_argument("--n", type=int, default=None, help="DNP3 message count override")
    p_synth.add_argument(
        "--noise-fraction",
        type=float,
        default=0.0,
        help="fraction of extra non-DNP3 noise records (built-in profiles only)",
    )
    common(p_synth)

    p_compare = sub.add_parser("compare", help="compare graphs across scenario runs")
    p_compare.add_argument(
        "--in",
        dest="input",
        required=True,
        help='run manifest: json list of {"scenario", "run_id", "capture"}',
    )
    p_compare.add_argument("--out", default=None, help="report path ('-' or absent: stdout)")
    p_compare.add_argument("--format", choices=["json", "text"], default="json")
    p_compare.add_argument(
        "--normalization", choices=["global", "per-sink"], default="global"
    )
    p_compare.add_argument("--no-scada-collapse", action="store_true")
    p_compare.add_argument(
        "--uniformity-tol",
        type=float,
        default=scenario.DEFAULT_UNIFORMITY_TOL,
        help="tolerance for the baseline uniformity flag",
    )
    common(p_compare)

    return parser


_COMMANDS = {
    "build": cmd_build,
    "export": cmd_export,
    "query": cmd_query,
    "synth": cmd_synth,
    "compare": cmd_compare,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except CyberDepError as exc:
        print(f"cyberdep {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"cyberdep {args.command}: i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

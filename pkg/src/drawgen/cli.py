"""Command-line interface: validate/repair diagram files, generate diagrams
through a provider, diff two files, run the benchmark suite, serve HTTP.

Exit codes: 0 success, 1 residual validation failure or non-empty diff,
2 unreadable input, 3 provider auth, 4 transport, 5 protocol.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .layout import LayoutConfig, Orientation
from .model import DiagramDiff, diff as diagram_diff
from .pipeline import GenerationResult, run_generation
from .prompts import PromptConfig, load_default_examples
from .provider import ProviderConfig, ProviderKind, make_provider
from .validator import CorrectionOutcome, validate_and_correct
from .verifier import RequirementSpec, semantic_accuracy
from .xml_codec import ParseFailure, parse

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INPUT = 2
EXIT_AUTH = 3
EXIT_TRANSPORT = 4
EXIT_PROTOCOL = 5

CATEGORIES = ("infrastructure", "flowchart", "orgchart", "wireframe")

_ERROR_EXITS = {"auth": EXIT_AUTH, "transport": EXIT_TRANSPORT, "protocol": EXIT_PROTOCOL}


def _data_path(*parts: str) -> Path:
    return Path(str(resources.files("drawgen") / "data")).joinpath(*parts)


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------

def _outcome_report(outcome: CorrectionOutcome) -> dict:
    return {
        "status": outcome.status.value,
        "issues": [
            {"category": i.category.value, "detail": i.detail, "repaired": i.repaired}
            for i in outcome.issues
        ],
        "passes_applied": list(outcome.passes_applied),
    }


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        text = Path(args.file).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        print(f"error: cannot read {args.file}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    outcome = validate_and_correct(text)
    report = _outcome_report(outcome)
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        print(f"status: {outcome.status.value}")
        for issue in outcome.issues:
            mark = "repaired" if issue.repaired else "residual"
            print(f"  - {issue.category.value}: {issue.detail} ({mark})")
        if outcome.passes_applied:
            print(f"passes: {', '.join(outcome.passes_applied)}")
    if args.fix and outcome.xml is not None:
        if args.out:
            Path(args.out).write_text(outcome.xml, encoding="utf-8")
        else:
            print(outcome.xml)
    return EXIT_OK if outcome.ok() else EXIT_FAILURE


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------

def _provider_config(args: argparse.Namespace) -> ProviderConfig:
    if args.provider == "mock":
        script = args.mock_script or str(_data_path("mock", "flowchart.json"))
        return ProviderConfig(
            kind=ProviderKind.MOCK, script_path=script, temperature=args.temperature
        )
    return ProviderConfig(
        kind=ProviderKind.HTTP,
        endpoint_url=args.endpoint,
        api_key_env_var_name=args.api_key_env,
        model_id=args.model,
        temperature=args.temperature,
    )


def _layout_config(args: argparse.Namespace) -> LayoutConfig:
    return LayoutConfig(
        orientation=Orientation(args.orientation),
        node_gap=args.node_gap,
        layer_gap=args.layer_gap,
    )


def _result_exit(result: GenerationResult) -> int:
    if result.status == "ok":
        return EXIT_OK
    return _ERROR_EXITS.get(result.error_kind or "", EXIT_FAILURE)


def _run_to_completion(provider, prompt: str, image: bytes | None, args) -> GenerationResult:
    layout_cfg = _layout_config(args)
    prompt_cfg = PromptConfig(alignment=layout_cfg.orientation)
    generation = run_generation(
        provider,
        prompt,
        image=image,
        examples=load_default_examples(),
        prompt_cfg=prompt_cfg,
        layout_cfg=layout_cfg,
    )
    while True:
        try:
            next(generation)
        except StopIteration as done:
            return done.value


def cmd_generate(args: argparse.Namespace) -> int:
    image = None
    if args.image:
        try:
            image = Path(args.image).read_bytes()
        except OSError as exc:
            print(f"error: cannot read image {args.image}: {exc}", file=sys.stderr)
            return EXIT_INPUT
    try:
        provider = make_provider(_provider_config(args))
    except (OSError, ValueError) as exc:
        print(f"error: provider setup failed: {exc}", file=sys.stderr)
        return EXIT_INPUT

    started = time.monotonic()
    result = _run_to_completion(provider, args.prompt, image, args)
    elapsed = time.monotonic() - started

    summary = {
        "status": result.status,
        "correction_iterations": result.correction_iterations,
        "elapsed_seconds": round(elapsed, 3),
        "tokens": {"input": result.input_tokens, "output": result.output_tokens},
    }
    if result.status != "ok":
        summary["error"] = result.error
        print(json.dumps(summary) if args.json else f"error: {result.error}", file=sys.stderr)
        return _result_exit(result)

    if args.out:
        Path(args.out).write_text(result.xml, encoding="utf-8")
    elif args.json:
        print(json.dumps({**summary, "xml": result.xml}, indent=2))
    else:
        print(result.xml, end="")
    print(
        f"correction_iterations: {result.correction_iterations}\n"
        f"elapsed_seconds: {elapsed:.3f}",
        file=sys.stderr,
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# diff
# ---------------------------------------------------------------------------

def _render_diff(delta: DiagramDiff) -> str:
    lines: list[str] = []
    if delta.added:
        lines.append("added:")
        lines += [f"  + {cid}" for cid in delta.added]
    if delta.removed:
        lines.append("removed:")
        lines += [f"  - {cid}" for cid in delta.removed]
    if delta.relabeled:
        lines.append("relabeled:")
        lines += [f"  ~ {cid}: {old!r} -> {new!r}" for cid, old, new in delta.relabeled]
    if delta.moved:
        lines.append("moved:")
        lines += [f"  ~ {cid}" for cid, _, _ in delta.moved]
    return "\n".join(lines) if lines else "no differences"


def cmd_diff(args: argparse.Namespace) -> int:
    diagrams = []
    for name in (args.a, args.b):
        try:
            diagrams.append(parse(Path(name).read_text(encoding="utf-8")))
        except (OSError, UnicodeDecodeError) as exc:
            print(f"error: cannot read {name}: {exc}", file=sys.stderr)
            return EXIT_INPUT
        except ParseFailure as exc:
            print(f"error: {name} does not parse: {exc}", file=sys.stderr)
            return EXIT_INPUT
    delta = diagram_diff(diagrams[0], diagrams[1])
    if args.json:
        print(
            json.dumps(
                {
                    "added": list(delta.added),
                    "removed": list(delta.removed),
                    "relabeled": [[c, o, n] for c, o, n in delta.relabeled],
                    "moved": [c for c, _, _ in delta.moved],
                },
                indent=2,
            )
        )
    else:
        print(_render_diff(delta))
    return EXIT_OK if delta.is_empty() else EXIT_FAILURE


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TaskSpec:
    id: str
    category: str
    prompt: str
    requirements: RequirementSpec
    reference_xml_path: str | None = None


def load_task(path: Path) -> TaskSpec:
    data = json.loads(path.read_text(encoding="utf-8"))
    category = data["category"]
    if category not in CATEGORIES:
        raise ValueError(f"{path}: unknown category {category!r}")
    req = data.get("requirements", {})
    requirements = RequirementSpec(
        required_components=tuple(req.get("components", [])),
        required_edges=tuple((s, t) for s, t in req.get("edges", [])),
    )
    return TaskSpec(
        id=data["id"],
        category=category,
        prompt=data["prompt"],
        requirements=requirements,
        reference_xml_path=data.get("reference_xml"),
    )


def load_tasks(directory: Path) -> list[TaskSpec]:
    tasks = [load_task(p) for p in sorted(directory.glob("*.json"))]
    if not tasks:
        raise ValueError(f"no task files in {directory}")
    return tasks


def _run_bench_task(provider, task: TaskSpec, args) -> dict:
    started = time.monotonic()
    result = _run_to_completion(provider, task.prompt, None, args)
    elapsed = time.monotonic() - started
    valid_first_pass = (
        result.outcome is not None and result.outcome.status.value == "CleanFirstPass"
    )
    accuracy = (
        semantic_accuracy(result.diagram, task.requirements)
        if result.diagram is not None
        else 0.0
    )
    return {
        "id": task.id,
        "category": task.category,
        "semantic_accuracy": round(accuracy, 6),
        "structurally_valid": valid_first_pass,
        "correction_iterations": result.correction_iterations,
        "response_seconds": round(elapsed, 4),
        "tokens": {"input": result.input_tokens, "output": result.output_tokens},
        "layout_clarity": None,  # human-entered rating placeholder
        "status": result.status,
    }


def _seconds(value) -> str:
    return "-" if value is None else f"{value:.3f}"


def _bench_table(rows: list[dict], aggregate: dict) -> str:
    header = f"{'id':<22}{'category':<16}{'accuracy':>9}{'valid':>7}{'iters':>7}{'seconds':>9}  tokens"
    lines = [header, "-" * len(header)]
    for row in rows:
        tokens = f"{row['tokens']['input']}/{row['tokens']['output']}"
        lines.append(
            f"{row['id']:<22}{row['category']:<16}{row['semantic_accuracy']:>9.3f}"
            f"{('yes' if row['structurally_valid'] else 'no'):>7}"
            f"{row['correction_iterations']:>7}{_seconds(row['response_seconds']):>9}  {tokens}"
        )
    lines.append("-" * len(header))
    lines.append(
        f"mean accuracy {aggregate['mean_accuracy']:.3f}, "
        f"validity rate {aggregate['validity_rate']:.3f}, "
        f"mean latency {_seconds(aggregate['mean_latency_seconds'])} s"
    )
    return "\n".join(lines)


def cmd_bench_run(args: argparse.Namespace) -> int:
    tasks_dir = Path(args.tasks) if args.tasks else _data_path("bench", "tasks")
    try:
        tasks = load_tasks(tasks_dir)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: cannot load tasks: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.provider == "mock" and not args.mock_script:
        args.mock_script = str(_data_path("bench", "mock_script.json"))
    try:
        provider = make_provider(_provider_config(args))
    except (OSError, ValueError) as exc:
        print(f"error: provider setup failed: {exc}", file=sys.stderr)
        return EXIT_INPUT

    if args.parallel:
        # Concurrency invalidates per-task wall-clock comparison.
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=min(4, len(tasks))) as pool:
            rows = list(pool.map(lambda task: _run_bench_task(provider, task, args), tasks))
        for row in rows:
            row["response_seconds"] = None
        mean_latency = None
    else:
        rows = [_run_bench_task(provider, task, args) for task in tasks]
        mean_latency = round(sum(r["response_seconds"] for r in rows) / len(rows), 4)
    aggregate = {
        "mean_accuracy": round(sum(r["semantic_accuracy"] for r in rows) / len(rows), 6),
        "validity_rate": round(
            sum(1 for r in rows if r["structurally_valid"]) / len(rows), 6
        ),
        "mean_latency_seconds": mean_latency,
    }
    report = {"tasks": rows, "aggregate": aggregate}
    if args.report:
        Path(args.report).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        print(_bench_table(rows, aggregate))
    return EXIT_OK


# ---------------------------------------------------------------------------
# serve
# ---------------------------------------------------------------------------

def cmd_serve(args: argparse.Namespace) -> int:
    import os

    import uvicorn

    from .service import ProviderSettings, ServiceConfig, ServiceSettings, create_app

    # Precedence: flags > config file > DRAWGEN_* env vars > defaults.
    file_config: dict = {}
    if args.config:
        try:
            file_config = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: cannot load config {args.config}: {exc}", file=sys.stderr)
            return EXIT_INPUT

    def resolved(flag_value, file_key: str, env_name: str, default):
        if flag_value is not None:
            return flag_value
        if file_key in file_config:
            return file_config[file_key]
        return os.environ.get(env_name, default)

    host = resolved(args.host, "host", "DRAWGEN_HOST", "127.0.0.1")
    port = int(resolved(args.port, "port", "DRAWGEN_PORT", 8000))
    data_dir = resolved(args.data_dir, "data_dir", "DRAWGEN_DATA_DIR", None)
    ui_origin = resolved(args.ui_origin, "ui_origin", "DRAWGEN_UI_ORIGIN", "*")

    try:
        settings = ServiceSettings.model_validate(file_config.get("settings", {}))
    except ValueError as exc:
        print(f"error: invalid settings in config file: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.provider is not None or "settings" not in file_config:
        settings.provider = ProviderSettings(
            kind=args.provider or "mock",
            endpoint_url=args.endpoint,
            api_key_env_var_name=args.api_key_env,
            model_id=args.model,
            temperature=args.temperature,
            script_path=args.mock_script or str(_data_path("mock", "flowchart.json")),
        )
    try:
        settings.provider.to_config()
    except ValueError as exc:
        print(f"error: invalid provider settings: {exc}", file=sys.stderr)
        return EXIT_INPUT
    config = ServiceConfig(
        data_dir=Path(data_dir) if data_dir else None,
        ui_origin=ui_origin,
        settings=settings,
    )
    uvicorn.run(create_app(config), host=host, port=port)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_provider_flags(parser: argparse.ArgumentParser, default_provider: str | None = "mock") -> None:
    parser.add_argument("--provider", choices=["mock", "http"], default=default_provider)
    parser.add_argument("--mock-script", help="path to a mock script JSON file")
    parser.add_argument("--endpoint", default="", help="chat-completion endpoint URL")
    parser.add_argument("--model", default="default", help="model id sent to the endpoint")
    parser.add_argument(
        "--api-key-env",
        default="DRAWGEN_API_KEY",
        help="name of the environment variable holding the API key",
    )
    parser.add_argument("--temperature", type=float, default=0.2)


def _add_layout_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--orientation", choices=["horizontal", "vertical"], default="horizontal")
    parser.add_argument("--node-gap", type=float, default=60.0)
    parser.add_argument("--layer-gap", type=float, default=120.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="drawgen", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="validate and optionally repair a diagram file")
    p_validate.add_argument("file")
    p_validate.add_argument("--fix", action="store_true", help="write repaired XML")
    p_validate.add_argument("--out", help="output path for --fix (default: stdout)")
    p_validate.add_argument("--json", action="store_true")
    p_validate.set_defaults(func=cmd_validate)

    p_generate = sub.add_parser("generate", help="generate a diagram from a prompt")
    p_generate.add_argument("--prompt", required=True)
    p_generate.add_argument("--image", help="replicate a diagram image (path)")
    p_generate.add_argument("--out", help="write XML here instead of stdout")
    p_generate.add_argument("--json", action="store_true")
    _add_provider_flags(p_generate)
    _add_layout_flags(p_generate)
    p_generate.set_defaults(func=cmd_generate)

    p_diff = sub.add_parser("diff", help="compare two diagram files by cell id")
    p_diff.add_argument("a")
    p_diff.add_argument("b")
    p_diff.add_argument("--json", action="store_true")
    p_diff.set_defaults(func=cmd_diff)

    p_bench = sub.add_parser("bench", help="benchmark harness")
    bench_sub = p_bench.add_subparsers(dest="bench_command", required=True)
    p_run = bench_sub.add_parser("run", help="run the task suite and compute metrics")
    p_run.add_argument("--tasks", help="task directory (default: bundled suite)")
    p_run.add_argument("--report", help="write the JSON report here")
    p_run.add_argument("--json", action="store_true", help="print the JSON report to stdout")
    p_run.add_argument(
        "--parallel", action="store_true", help="run tasks concurrently (drops timing fields)"
    )
    _add_provider_flags(p_run)
    _add_layout_flags(p_run)
    p_run.set_defaults(func=cmd_bench_run)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--config", help="JSON config file (host, port, data_dir, ui_origin, settings)")
    p_serve.add_argument("--host", help="bind address (env: DRAWGEN_HOST)")
    p_serve.add_argument("--port", type=int, help="bind port (env: DRAWGEN_PORT)")
    p_serve.add_argument("--data-dir", help="session history directory (env: DRAWGEN_DATA_DIR)")
    p_serve.add_argument("--ui-origin", help="allowed CORS origin (env: DRAWGEN_UI_ORIGIN)")
    _add_provider_flags(p_serve, default_provider=None)
    p_serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

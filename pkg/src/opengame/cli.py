"""The `opengame` command: generation, evaluation, skills, content tools.

Exit codes: 0 success, 1 domain failure, 2 usage error. A flat
`opengame.toml`-style key/value config file can supply defaults; explicit
flags always win.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import abcmusic
from .evaluate import EvalSettings, evaluate_project
from .gateway import BackendError, Gateway, HttpBackend, build_gateway
from .skills import (
    ConflictingPath,
    SkillStore,
    UnstableCandidate,
    find_skills_root,
)
from .tilemap import TilemapSpec, write_tilemaps
from .workflow import GameSpec, RunConfig, WorkspaceNotEmpty, run_generation


def read_config(path: str | Path | None) -> dict[str, str]:
    """Parse a flat key = value config file (quotes and # comments allowed)."""
    if path is None:
        candidate = Path("opengame.toml")
        if not candidate.is_file():
            return {}
        path = candidate
    config: dict[str, str] = {}
    for raw_line in Path(path).read_text().splitlines():
        line = raw_line.split("#", 1)[0].strip()
        if not line or "=" not in line:
            continue
        key, _, value = line.partition("=")
        config[key.strip()] = value.strip().strip("\"'")
    return config


def _non_negative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _parse_seeds(text: str) -> tuple[int, ...]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise argparse.ArgumentTypeError("seeds must be a non-empty comma list")
    seeds = tuple(int(p) for p in parts)
    if len(set(seeds)) != len(seeds):
        raise argparse.ArgumentTypeError("seeds must be distinct")
    return seeds


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opengame",
        description="Generate 2D web games from prompts and evaluate them.",
    )
    parser.add_argument("--config", help="key=value config file (flags win)")
    commands = parser.add_subparsers(dest="command", required=True)

    generate = commands.add_parser("generate", help="run the six-phase generation")
    generate.add_argument("prompt", nargs="?", help="the game description")
    generate.add_argument("--prompt-file", help="read the prompt from a file")
    generate.add_argument("--out", required=True, help="workspace directory (must be empty)")
    generate.add_argument("--mock", action="store_true", help="use fixture-backed mock backends")
    generate.add_argument("--fixtures", help="mock fixture directory (default ./fixtures)")
    generate.add_argument("--backend", help="chat-completion base URL (overrides env)")
    generate.add_argument(
        "--max-debug-iters", type=_non_negative_int, default=None, help="repair budget T"
    )
    generate.add_argument("--skills-root", help="skills directory (default: auto-discover)")
    generate.add_argument("--title", help="title hint (also the mock fixture scenario tag)")

    evaluate = commands.add_parser("evaluate", help="score a generated project")
    evaluate.add_argument("project_dir")
    evaluate.add_argument("--seeds", type=_parse_seeds, default=(1, 2, 3))
    evaluate.add_argument("--no-browser", action="store_true", help="use the fake browser backend")
    evaluate.add_argument("--report", help="report path (default <project>/report.json)")
    evaluate.add_argument("--mock", action="store_true", help="use fixture-backed mock judge")
    evaluate.add_argument("--fixtures", help="mock fixture directory (default ./fixtures)")
    evaluate.add_argument("--prompt", help="original prompt (default: workspace task.json)")
    evaluate.add_argument("--build-command", default="npm run build")

    skills = commands.add_parser("skills", help="inspect and evolve the skill stores")
    skills.add_argument("action", choices=["list", "stats", "promote"])
    skills.add_argument("candidate_id", nargs="?")
    skills.add_argument("--skills-root")

    tilemap = commands.add_parser("tilemap", help="ASCII layouts -> tilemap JSON")
    tilemap.add_argument("spec_file")
    tilemap.add_argument("--out", default=".")

    abc2wav = commands.add_parser("abc2wav", help="ABC notation -> WAV")
    abc2wav.add_argument("abc_file")
    abc2wav.add_argument("-o", "--output", help="output path (default input with .wav)")

    classify = commands.add_parser("classify", help="physics-first archetype routing")
    classify.add_argument("prompt")
    classify.add_argument("--mock", action="store_true")
    classify.add_argument("--fixtures")

    return parser


def _fixtures_root(args, config) -> Path:
    return Path(args.fixtures or config.get("fixtures", "fixtures"))


def _make_gateway(args, config, need_mock_default: bool) -> Gateway | None:
    if getattr(args, "mock", False) or (need_mock_default and not getattr(args, "backend", None)):
        root = _fixtures_root(args, config)
        if root.is_dir():
            return build_gateway(mock_fixtures=root)
        if getattr(args, "mock", False):
            raise BackendError(f"--mock set but fixture directory {root} does not exist")
    backend_url = getattr(args, "backend", None) or config.get("backend")
    if backend_url:
        gateway = Gateway()
        gateway.register("chat", HttpBackend(backend_url))
        gateway.register("vlm", HttpBackend(backend_url, vision=True))
        return gateway
    try:
        return build_gateway()
    except BackendError:
        return None


def cmd_generate(args, config) -> int:
    if args.prompt and args.prompt_file:
        print("error: give a prompt or --prompt-file, not both", file=sys.stderr)
        return 2
    prompt = args.prompt
    if args.prompt_file:
        prompt = Path(args.prompt_file).read_text()
    if not prompt or not prompt.strip():
        print("error: empty prompt", file=sys.stderr)
        return 2

    out = Path(args.out)
    if out.exists() and any(out.iterdir()):
        print(f"error: WorkspaceNotEmpty: {out}", file=sys.stderr)
        return 1

    try:
        skills_root = find_skills_root(args.skills_root or config.get("skills_root"))
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    store = SkillStore(skills_root)
    library = store.load_library()
    protocol = store.load_protocol()

    gateway = _make_gateway(args, config, need_mock_default=args.mock)
    if gateway is None:
        print("error: no backend configured (set OPENGAME_LLM_BASE_URL or use --mock)", file=sys.stderr)
        return 1

    run_config = RunConfig(
        workspace_root=out,
        max_debug_iters=(
            args.max_debug_iters
            if args.max_debug_iters is not None
            else int(config.get("max_debug_iters", 5))
        ),
        build_command=config.get("build_command", "npm run build"),
        test_command=config.get("test_command", "npm run test"),
        skills_root=skills_root,
    )
    spec = GameSpec(prompt=prompt, title_hint=args.title, run_config=run_config)

    def on_phase(phase):
        print(f"[phase] {phase.value}")

    try:
        workspace = run_generation(
            spec, library, protocol, gateway, store=store, on_phase=on_phase
        )
    except WorkspaceNotEmpty as exc:
        print(f"error: WorkspaceNotEmpty: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if workspace.failed:
        print(f"generation failed: {workspace.failure_reason}", file=sys.stderr)
        return 1
    print(f"workspace ready: {workspace.root}")
    return 0


def cmd_evaluate(args, config) -> int:
    project_dir = Path(args.project_dir)
    if not project_dir.is_dir():
        print(f"error: {project_dir} is not a directory", file=sys.stderr)
        return 1

    gateway = _make_gateway(args, config, need_mock_default=args.no_browser)
    settings = EvalSettings(
        seeds=args.seeds,
        no_browser=args.no_browser,
        build_command=args.build_command,
        prompt=args.prompt,
    )
    try:
        report = evaluate_project(project_dir, gateway, settings)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    report_path = Path(args.report) if args.report else project_dir / "report.json"
    report.write(report_path)
    for line in report.summary_lines():
        print(line)
    print(f"report written: {report_path}")
    return 0 if report.mean is not None else 1


def cmd_skills(args, config) -> int:
    try:
        store = SkillStore(find_skills_root(args.skills_root or config.get("skills_root")))
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if args.action == "list":
        library = store.load_library()
        protocol = store.load_protocol()
        for family in library.all_families():
            archetypes = ", ".join(sorted(a.value for a in family.archetype_map))
            print(
                f"{family.family_id}: archetypes [{archetypes}], "
                f"{len(family.file_tree)} files, {len(family.extension_points)} hooks"
            )
        print(f"library version {library.version}")
        print(f"debug protocol: {len(protocol.entries)} entries (version {protocol.version})")
        return 0

    if args.action == "stats":
        library = store.load_library()
        protocol = store.load_protocol()
        for family in library.all_families():
            stats = family.provenance
            print(
                f"{family.family_id}: used {stats.times_used}, "
                f"successful {stats.times_successful}"
            )
        for entry in protocol.entries:
            print(f"fix[{entry.verified_count}x]: {entry.signature[:70]}")
        candidates = store.load_fragments()
        for candidate in candidates:
            print(f"candidate {candidate.candidate_id}: seen in {len(set(candidate.runs))} run(s)")
        return 0

    if args.action == "promote":
        if not args.candidate_id:
            print("error: promote needs a candidate id", file=sys.stderr)
            return 2
        try:
            library = store.promote(args.candidate_id)
        except (UnstableCandidate, ConflictingPath, KeyError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        print(f"promoted; library version {library.version}")
        return 0
    return 2


def cmd_tilemap(args, config) -> int:
    try:
        spec = TilemapSpec.from_dict(json.loads(Path(args.spec_file).read_text()))
        written = write_tilemaps(spec, args.out)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


def cmd_abc2wav(args, config) -> int:
    source = Path(args.abc_file)
    output = Path(args.output) if args.output else source.with_suffix(".wav")
    try:
        score = abcmusic.abc_to_wav(source.read_text(), output)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"{output} ({len(score.events)} events, {float(score.total_seconds()):.3f}s)")
    return 0


def cmd_classify(args, config) -> int:
    from .design import ClassificationFailed, classify_game_type

    gateway = None
    try:
        gateway = _make_gateway(args, config, need_mock_default=args.mock)
    except BackendError:
        gateway = None
    try:
        result = classify_game_type(args.prompt, gateway, tags=("classify", "cli"))
    except (ClassificationFailed, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"{result.archetype.value} (source={result.source}, confidence={result.confidence:.2f})")
    return 0


_HANDLERS = {
    "generate": cmd_generate,
    "evaluate": cmd_evaluate,
    "skills": cmd_skills,
    "tilemap": cmd_tilemap,
    "abc2wav": cmd_abc2wav,
    "classify": cmd_classify,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = read_config(args.config)
    return _HANDLERS[args.command](args, config)


if __name__ == "__main__":
    sys.exit(main())

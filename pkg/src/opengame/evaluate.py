"""Per-seed evaluation of a generated project: build, serve, play, score.

Each seed gets its own browser session against a freshly served copy of the
project. Invalid seeds become pipeline errors with reasons; valid seeds get
the three metrics. Requirements are compiled once per task from the original
prompt (CLI flag or the workspace's recorded task), and the vision judge
produces per-requirement verdicts per seed.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

from .bench import (
    BuildResult,
    MissingEntryPoint,
    PlaySchedule,
    RunValidity,
    check_run_validity,
    run_build,
    run_play_script,
    serve_project,
)
from .fakebrowser import FakeBrowserSession
from .gateway import BackendError, Gateway, SchemaError
from .scoring import (
    EvalReport,
    MetricScores,
    MissingVerdict,
    NoRequirements,
    Requirement,
    SeedResult,
    UnknownRequirement,
    aggregate_report,
    collect_verdicts,
    compile_requirements,
    score_build_health,
    score_intent_alignment,
    score_visual_usability,
)

logger = logging.getLogger(__name__)


@dataclass
class EvalSettings:
    seeds: tuple[int, ...] = (1, 2, 3)
    no_browser: bool = True
    build_command: str = "npm run build"
    schedule: PlaySchedule | None = None
    prompt: str | None = None
    task_id: str | None = None
    browser_path: str | None = None
    probe_file: str | Path | None = None


def load_task_meta(project_dir: str | Path) -> dict:
    task_path = Path(project_dir) / ".opengame" / "task.json"
    if task_path.is_file():
        try:
            return json.loads(task_path.read_text())
        except json.JSONDecodeError:
            pass
    return {}


def _session_for(project_dir: Path, url: str, seed: int, settings: EvalSettings):
    if settings.no_browser:
        return FakeBrowserSession(project_dir, seed=seed, target_url=url)
    from .bench import launch_session

    return launch_session(url, seed=seed, browser_path=settings.browser_path)


def evaluate_project(
    project_dir: str | Path,
    gateway: Gateway | None = None,
    settings: EvalSettings | None = None,
) -> EvalReport:
    """Run the full evaluation protocol and aggregate a report."""
    settings = settings or EvalSettings()
    project_dir = Path(project_dir)
    if not project_dir.is_dir():
        raise FileNotFoundError(project_dir)

    task_meta = load_task_meta(project_dir)
    scenario = task_meta.get("scenario") or (settings.task_id or project_dir.name)
    task_id = settings.task_id or task_meta.get("task_id") or project_dir.name
    prompt = settings.prompt or task_meta.get("prompt")

    requirements: list[Requirement] | None = None
    if prompt and gateway is not None:
        try:
            requirements = compile_requirements(
                prompt, gateway, tags=("requirements", scenario)
            )
        except (NoRequirements, BackendError, SchemaError) as exc:
            logger.warning("requirement compilation unavailable: %s", exc)

    per_seed: list[SeedResult] = []
    for seed in settings.seeds:
        per_seed.append(
            _evaluate_seed(project_dir, seed, gateway, settings, scenario, requirements)
        )
    return aggregate_report(task_id, per_seed)


def _evaluate_seed(
    project_dir: Path,
    seed: int,
    gateway: Gateway | None,
    settings: EvalSettings,
    scenario: str,
    requirements: list[Requirement] | None,
) -> SeedResult:
    try:
        build = run_build(project_dir, settings.build_command)
    except Exception as exc:
        return SeedResult(
            seed=seed,
            validity=RunValidity(verdict="pipeline_error", reasons=[f"build step error: {exc}"]),
            scores=None,
        )

    try:
        server = serve_project(project_dir, probe_file=settings.probe_file)
    except MissingEntryPoint as exc:
        return SeedResult(
            seed=seed,
            validity=RunValidity(verdict="pipeline_error", reasons=[f"MissingEntryPoint: {exc}"]),
            scores=None,
        )

    try:
        session = _session_for(project_dir, server.base_url, seed, settings)
        try:
            captures = run_play_script(session, seed, settings.schedule)
        finally:
            session.close()
    except Exception as exc:
        server.close()
        return SeedResult(
            seed=seed,
            validity=RunValidity(verdict="pipeline_error", reasons=[f"session failed: {exc}"]),
            scores=None,
        )
    server.close()

    validity = check_run_validity(build, captures)
    if not validity.is_valid:
        return SeedResult(seed=seed, validity=validity, scores=None)

    bh_scores = score_build_health(build, captures)
    vu = score_visual_usability(captures, gateway, tags=("judge_vu", scenario))

    ia = 0.0
    verdicts = []
    subscores = dict(bh_scores.subscores)
    subscores["vu_heuristic"] = vu.heuristic
    if vu.judge is not None:
        subscores["vu_judge"] = vu.judge
    if vu.heuristic_only:
        subscores["vu_heuristic_only"] = 1.0

    if requirements and gateway is not None:
        try:
            verdicts = collect_verdicts(
                requirements, captures, gateway, tags=("judge_ia", scenario)
            )
            ia = score_intent_alignment(requirements, verdicts)
        except (BackendError, SchemaError, MissingVerdict, UnknownRequirement) as exc:
            logger.warning("intent alignment unavailable for seed %s: %s", seed, exc)
            subscores["ia_skipped"] = 1.0
            verdicts = []
            ia = 0.0
    else:
        subscores["ia_skipped"] = 1.0

    scores = MetricScores(bh=bh_scores.bh, vu=vu.vu, ia=ia, subscores=subscores)
    return SeedResult(seed=seed, validity=validity, scores=scores, verdicts=verdicts)

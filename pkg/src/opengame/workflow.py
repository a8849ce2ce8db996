"""The six-phase generation run and the bounded verification/repair loop.

Phases advance in one fixed order: classification+scaffolding, game design,
asset synthesis, config registration, code implementation, verification.
The workflow owns its workspace exclusively; persistent todo state and the
phase log live under `.opengame/`.

Verification runs the static pre-execution validators first (findings are
fixed before anything is built), then the configured build and test
commands, consulting the debug protocol on each failure and appending a
verified entry when a new pattern's fix is confirmed. At most T repair
iterations are spent before the run is flagged failed.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
import shlex
import shutil
import subprocess
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import design as design_tools
from .assets import AssetBackends, AssetEntry, MockImageBackend, generate_assets
from .bench import run_build
from .design import GameConfig, extract_roadmap, generate_gdd, merge_game_config, render_gdd
from .gateway import ChatRequest, Gateway, ResponseSchema, SchemaKey
from .skills import (
    Archetype,
    DebugEntry,
    DebugProtocol,
    FixRecipe,
    SkillStore,
    TemplateLibrary,
    append_entry,
    extract_fragments,
    instantiate_template,
    lookup_fix,
    normalize_error_signature,
    run_pre_execution_validations,
    select_template,
)
from .tilemap import TilemapSpec, write_tilemaps
from .workspace import (
    PHASE_ORDER,
    Phase,
    PhaseState,
    ProjectWorkspace,
    RunOutcome,
    TodoItem,
    TodoList,
    TodoStatus,
    next_phase,
)

logger = logging.getLogger(__name__)

DEFAULT_MAX_DEBUG_ITERS = 5  # returns plateau toward five repair rounds
DEFAULT_SEEDS = (1, 2, 3)


class WorkspaceNotEmpty(RuntimeError):
    pass


class PhaseFailure(RuntimeError):
    def __init__(self, phase: Phase, cause: str):
        super().__init__(f"{phase.value}: {cause}")
        self.phase = phase
        self.cause = cause


class IllegalTransition(RuntimeError):
    pass


class DuplicateInProgress(ValueError):
    pass


class DuplicateId(ValueError):
    pass


class MissingDoc(FileNotFoundError):
    pass


class RepairBudgetExhausted(RuntimeError):
    def __init__(self, message: str, outcome: "RepairOutcome"):
        super().__init__(message)
        self.outcome = outcome


@dataclass
class RunConfig:
    workspace_root: Path = Path("workspace")
    max_debug_iters: int = DEFAULT_MAX_DEBUG_ITERS
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    build_command: str = "npm run build"
    test_command: str = "npm run test"
    chat_backend_id: str = "chat"
    judge_backend_id: str = "vlm"
    skills_root: Path | None = None

    def __post_init__(self) -> None:
        self.workspace_root = Path(self.workspace_root)
        if self.max_debug_iters < 0:
            raise ValueError("max_debug_iters must be >= 0")
        seeds = tuple(self.seeds)
        if not seeds or len(set(seeds)) != len(seeds):
            raise ValueError("seeds must be non-empty and distinct")
        self.seeds = seeds


@dataclass
class GameSpec:
    prompt: str
    title_hint: str | None = None
    run_config: RunConfig = field(default_factory=RunConfig)

    def __post_init__(self) -> None:
        if not self.prompt or not self.prompt.strip():
            raise ValueError("prompt must be non-empty")

    @property
    def scenario_tag(self) -> str:
        if self.title_hint:
            slug = re.sub(r"[^a-z0-9]+", "-", self.title_hint.lower()).strip("-")
            if slug:
                return slug
        return "task-" + hashlib.sha1(self.prompt.encode()).hexdigest()[:8]


# --- phase transitions -----------------------------------------------------------

def advance_phase(
    state: PhaseState,
    artifacts: list[str] | None = None,
    to: Phase | None = None,
) -> PhaseState:
    """Advance to the next phase in the fixed order; `to` may assert the
    intended target and anything but the canonical successor is illegal."""
    if state.phase is Phase.DONE:
        raise IllegalTransition("Done is terminal")
    successor = next_phase(state.phase)
    if to is not None and to is not successor:
        raise IllegalTransition(
            f"{state.phase.value} -> {to.value} skips the canonical order "
            f"(next is {successor.value})"
        )
    state.finished_at = time.time()
    if artifacts:
        state.artifacts.extend(artifacts)
    return PhaseState(phase=successor)


# --- todo management ---------------------------------------------------------------

def todo_write(todos: TodoList, updates: list[TodoItem]) -> TodoList:
    """Apply status changes / appends, enforcing unique ids and at most one
    in-progress item."""
    existing_ids = {item.id for item in todos.items}
    new_ids = [u.id for u in updates if u.id not in existing_ids]
    if len(set(new_ids)) != len(new_ids):
        raise DuplicateId(f"update batch appends duplicate ids: {new_ids}")

    items = [replace(item) for item in todos.items]
    by_id = {item.id: item for item in items}
    for update in updates:
        if update.id in by_id:
            by_id[update.id].status = update.status
            if update.content:
                by_id[update.id].content = update.content
        else:
            item = TodoItem(id=update.id, content=update.content, status=update.status)
            items.append(item)
            by_id[update.id] = item

    ids = [item.id for item in items]
    if len(set(ids)) != len(ids):
        raise DuplicateId(f"todo ids collide: {ids}")
    in_progress = [item.id for item in items if item.status is TodoStatus.IN_PROGRESS]
    if len(in_progress) > 1:
        raise DuplicateInProgress(f"multiple items in progress: {in_progress}")
    return TodoList(items=items)


# --- three-layer reading --------------------------------------------------------------

@dataclass
class ReadingBundle:
    api_summary: str
    target_source: str
    implementation_guide: str

    def assemble(self) -> str:
        """API summary, then the target source, then the guide last."""
        return "\n\n".join(
            [
                "### Template API summary\n" + self.api_summary,
                "### Target source\n" + self.target_source,
                "### Implementation guide\n" + self.implementation_guide,
            ]
        )


def three_layer_read(workspace: ProjectWorkspace, target_file: str | Path) -> ReadingBundle:
    target = workspace.path(str(target_file))
    if not workspace.contains(target) or not target.is_file():
        raise ValueError(f"target {target_file} is not a file inside the workspace")
    summary_path = workspace.path("docs/template_api.md")
    guide_path = workspace.path("docs/implementation_guide.md")
    if not summary_path.is_file():
        raise MissingDoc("docs/template_api.md not found")
    if not guide_path.is_file():
        raise MissingDoc("docs/implementation_guide.md not found")
    return ReadingBundle(
        api_summary=summary_path.read_text(),
        target_source=target.read_text(),
        implementation_guide=guide_path.read_text(),
    )


# --- model-driven edits -----------------------------------------------------------------

EDITS_SCHEMA = ResponseSchema(
    required_keys=(SchemaKey("edits", "list"),),
    description="file edits",
)

IMPLEMENT_SYSTEM_PROMPT = """\
You implement game logic by filling designated extension hooks in template
files. Respond with JSON: {"edits": [{"file": ..., "find": ..., "replace":
...} or {"file": ..., "content": ...}, ...]}. Edit hook bodies only; never
touch lifecycle methods or the engine. Keep asset keys consistent with
asset-pack.json and config keys with gameConfig.json.
"""

FIX_SYSTEM_PROMPT = """\
You repair a broken game project. Respond with JSON: {"edits": [{"file":
..., "find": ..., "replace": ...} or {"file": ..., "content": ...}, ...],
"cause": "<one-line root cause>"}. Make the smallest change that resolves
the reported failure.
"""


def apply_edits(workspace: ProjectWorkspace, edits: list[dict]) -> list[str]:
    """Apply find/replace or whole-content edits inside the workspace."""
    touched = []
    for edit in edits:
        relative = str(edit.get("file", ""))
        target = workspace.path(relative)
        if not workspace.contains(target):
            raise ValueError(f"edit escapes workspace: {relative!r}")
        if "content" in edit:
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(str(edit["content"]))
        else:
            find, replacement = str(edit.get("find", "")), str(edit.get("replace", ""))
            if not target.is_file():
                raise ValueError(f"edit targets missing file: {relative!r}")
            text = target.read_text()
            if find not in text:
                raise ValueError(f"find-text not present in {relative!r}: {find[:60]!r}")
            target.write_text(text.replace(find, replacement, 1))
        touched.append(relative)
    return touched


# --- verification loop --------------------------------------------------------------------

@dataclass
class DetectedFailure:
    stage: str  # validation | build | test
    text: str


@dataclass
class RepairOutcome:
    status: str  # success | failed
    iterations_used: int
    protocol_appended: int
    failure: str | None = None


def _declares_script(project_dir: Path, name: str) -> bool:
    package_json = project_dir / "package.json"
    if not package_json.is_file():
        return False
    try:
        return name in json.loads(package_json.read_text()).get("scripts", {})
    except json.JSONDecodeError:
        return False


def _tail(text: str, lines: int = 12) -> str:
    parts = [line for line in text.strip().splitlines() if line.strip()]
    return "\n".join(parts[-lines:])


def detect_failure(workspace: ProjectWorkspace, config: RunConfig) -> DetectedFailure | None:
    """Static validations, then build, then test; first failure wins."""
    findings = run_pre_execution_validations(workspace)
    if findings:
        first = findings[0]
        return DetectedFailure(
            stage="validation",
            text=f"validation {first.kind.value}: {first.detail} in {first.file}",
        )

    build = run_build(workspace.root, config.build_command)
    if build.status == "failure":
        return DetectedFailure(stage="build", text=_tail(build.log) or "build failed")

    if _declares_script(workspace.root, "test"):
        executable = shlex.split(config.test_command)[0]
        if shutil.which(executable) is None:
            return DetectedFailure(stage="test", text=f"test executable missing: {executable}")
        completed = subprocess.run(
            config.test_command,
            shell=True,
            cwd=workspace.root,
            capture_output=True,
            text=True,
            timeout=600,
        )
        if completed.returncode != 0:
            return DetectedFailure(
                stage="test", text=_tail(completed.stdout + completed.stderr) or "tests failed"
            )
    return None


def _request_fix(
    gateway: Gateway,
    config: RunConfig,
    scenario: str,
    failure: DetectedFailure,
    known_entry: DebugEntry | None,
) -> dict:
    recipe_hint = ""
    if known_entry is not None:
        recipe_hint = (
            f"\nA verified fix recipe exists for this pattern "
            f"(files: {known_entry.fix.file_glob}): {known_entry.fix.description}"
        )
    request = ChatRequest(
        backend_id=config.chat_backend_id,
        system_prompt=FIX_SYSTEM_PROMPT,
        user_prompt=f"Stage: {failure.stage}\nFailure:\n{failure.text}{recipe_hint}",
        temperature=0.0,
        tags=("fix", scenario),
    )
    return gateway.complete_structured(request, EDITS_SCHEMA)


def verification_loop(
    workspace: ProjectWorkspace,
    protocol: DebugProtocol,
    max_iters: int,
    gateway: Gateway,
    config: RunConfig,
    scenario: str = "default",
    store: SkillStore | None = None,
) -> RepairOutcome:
    """Static self-review, then build/test, with at most `max_iters` repairs.

    A novel failure pattern whose fix is confirmed (the same signature does
    not re-occur on the next detection pass) is appended to the protocol as a
    verified entry.
    """
    iterations = 0
    appended = 0
    pending: tuple[str, str, dict] | None = None  # (signature, stage, fix response)

    while True:
        failure = detect_failure(workspace, config)

        if pending is not None:
            signature, _stage, response = pending
            still_failing = failure is not None and normalize_error_signature(failure.text) == signature
            if not still_failing:
                entry = DebugEntry(
                    signature=signature,
                    cause=str(response.get("cause", "unknown")),
                    fix=FixRecipe(
                        file_glob=", ".join(str(e.get("file", "?")) for e in response["edits"]),
                        description=str(response.get("cause", "applied structured edits")),
                    ),
                )
                before = len(protocol.entries)
                append_entry(protocol, entry)
                if len(protocol.entries) > before:
                    appended += 1
                if store is not None:
                    store.save_protocol(protocol)
            pending = None

        if failure is None:
            return RepairOutcome(
                status="success", iterations_used=iterations, protocol_appended=appended
            )

        if iterations >= max_iters:
            outcome = RepairOutcome(
                status="failed",
                iterations_used=iterations,
                protocol_appended=appended,
                failure=failure.text,
            )
            raise RepairBudgetExhausted(
                f"still failing after {iterations} repair iteration(s): {failure.text}",
                outcome,
            )

        iterations += 1
        signature = normalize_error_signature(failure.text)
        known = lookup_fix(signature, protocol)
        try:
            response = _request_fix(gateway, config, scenario, failure, known)
            apply_edits(workspace, response["edits"])
        except Exception as exc:
            outcome = RepairOutcome(
                status="failed",
                iterations_used=iterations,
                protocol_appended=appended,
                failure=f"repair attempt failed: {exc}",
            )
            raise RepairBudgetExhausted(str(exc), outcome) from exc

        if known is None:
            pending = (signature, failure.stage, response)
        else:
            # reuse of a known pattern: bump its verification count
            append_entry(protocol, DebugEntry(signature=signature, cause=known.cause, fix=known.fix))
            if store is not None:
                store.save_protocol(protocol)


# --- the six-phase run -------------------------------------------------------------------

_TILEMAP_BLOCK_RE = re.compile(r"```tilemap\s*\n(.*?)```", re.DOTALL)


def _asset_registry(gdd) -> list[AssetEntry]:
    return [
        AssetEntry(key=a.key, type=a.type, description=a.description, params=dict(a.params))
        for a in gdd.assets
    ]


def run_generation(
    spec: GameSpec,
    library: TemplateLibrary,
    protocol: DebugProtocol,
    gateway: Gateway,
    image_backend: MockImageBackend | None = None,
    store: SkillStore | None = None,
    on_phase=None,
) -> ProjectWorkspace:
    """Execute all six phases; returns a workspace that either verified
    successfully or is flagged failed with the last error attached."""
    config = spec.run_config
    root = config.workspace_root
    if root.exists() and any(root.iterdir()):
        raise WorkspaceNotEmpty(f"{root} is not empty")
    scenario = spec.scenario_tag
    backend_id = config.chat_backend_id
    doc_root = (config.skills_root / "docs") if config.skills_root else None

    def notify(phase: Phase) -> None:
        if on_phase is not None:
            on_phase(phase)

    state = PhaseState(phase=Phase.CLASSIFICATION_SCAFFOLDING)
    notify(state.phase)

    # Phase 1: classification + scaffolding. A failed classification does not
    # abort the run; it falls back to the meta template, flagged.
    classification_note = None
    try:
        classification = design_tools.classify_game_type(
            spec.prompt, gateway, backend_id=backend_id, tags=("classify", scenario)
        )
        archetype: Archetype | None = classification.archetype
    except design_tools.ClassificationFailed as exc:
        classification, archetype = None, None
        classification_note = f"classification failed, using meta template: {exc}"
        logger.warning(classification_note)
    except ValueError as exc:
        raise PhaseFailure(Phase.CLASSIFICATION_SCAFFOLDING, str(exc))

    family = select_template(archetype, library)
    try:
        workspace = instantiate_template(family, root, archetype=archetype)
    except Exception as exc:
        raise PhaseFailure(Phase.CLASSIFICATION_SCAFFOLDING, f"scaffolding failed: {exc}")
    if classification_note:
        state.error = classification_note
    workspace.phase_log.append(state)
    (workspace.meta_dir / "task.json").write_text(
        json.dumps(
            {
                "prompt": spec.prompt,
                "title_hint": spec.title_hint,
                "scenario": scenario,
                "task_id": scenario,
            },
            indent=2,
        )
        + "\n"
    )

    def fail(phase_state: PhaseState, cause: str) -> ProjectWorkspace:
        phase_state.finished_at = time.time()
        phase_state.error = cause
        workspace.failed = True
        workspace.failure_reason = f"{phase_state.phase.value}: {cause}"
        workspace.save()
        logger.error("run failed in %s: %s", phase_state.phase.value, cause)
        return workspace

    state = advance_phase(state, artifacts=list(family.file_tree))
    workspace.phase_log.append(state)
    notify(state.phase)

    # Phase 2: game design.
    try:
        gdd = generate_gdd(
            spec.prompt,
            classification,
            gateway,
            doc_root=doc_root,
            backend_id=backend_id,
            tags=("gdd", scenario),
        )
        workspace.path(workspace.gdd_path).write_text(render_gdd(gdd))
        todos = todo_write(TodoList(), extract_roadmap(gdd))
        todos.save(workspace.meta_dir / "todos.json")
    except Exception as exc:
        return fail(state, f"game design failed: {exc}")

    state = advance_phase(state, artifacts=[workspace.gdd_path, ".opengame/todos.json"])
    workspace.phase_log.append(state)
    notify(state.phase)

    # Phase 3: asset synthesis.
    try:
        backends = AssetBackends(
            image=image_backend or MockImageBackend(),
            gateway=gateway,
            chat_backend_id=backend_id,
            abc_tags=("abc", scenario),
        )
        pack = generate_assets(_asset_registry(gdd), backends, workspace.root)
        artifacts = [workspace.asset_pack_path]
        for block in _TILEMAP_BLOCK_RE.findall(gdd.level_content):
            tilemap_spec = TilemapSpec.from_dict(json.loads(block))
            written = write_tilemaps(tilemap_spec, workspace.path("assets/maps"))
            artifacts.extend(
                str(Path(p).relative_to(workspace.root)) for p in map(Path, written)
            )
    except Exception as exc:
        return fail(state, f"asset synthesis failed: {exc}")

    state = advance_phase(state, artifacts=artifacts)
    workspace.phase_log.append(state)
    notify(state.phase)

    # Phase 4: config merge + registration.
    try:
        existing = GameConfig.from_file(workspace.path(workspace.config_path))
        merged = merge_game_config(gdd, existing)
        merged.write(workspace.path(workspace.config_path))
    except Exception as exc:
        return fail(state, f"config registration failed: {exc}")

    state = advance_phase(state, artifacts=[workspace.config_path])
    workspace.phase_log.append(state)
    notify(state.phase)

    # Phase 5: code implementation via three-layer reading + hook edits.
    try:
        todos = TodoList.load(workspace.meta_dir / "todos.json")
        target_files = []
        for item in todos.items:
            match = re.match(r"^\[(.+?)\]", item.content)
            if match and match.group(1) not in target_files:
                target_files.append(match.group(1))
        bundles = [
            (name, three_layer_read(workspace, name))
            for name in target_files
            if workspace.path(name).is_file()
        ]
        context_parts = []
        if bundles:
            context_parts.append("### Template API summary\n" + bundles[0][1].api_summary)
            for name, bundle in bundles:
                context_parts.append(f"### Source: {name}\n" + bundle.target_source)
            context_parts.append(
                "### Implementation guide\n" + bundles[0][1].implementation_guide
            )
        roadmap_text = "\n".join(f"- {item.content}" for item in todos.items)
        request = ChatRequest(
            backend_id=backend_id,
            system_prompt=IMPLEMENT_SYSTEM_PROMPT,
            user_prompt=(
                f"User request:\n{spec.prompt}\n\nRoadmap:\n{roadmap_text}\n\n"
                + "\n\n".join(context_parts)
            ),
            tags=("implement", scenario),
        )
        response = gateway.complete_structured(request, EDITS_SCHEMA)
        edited = apply_edits(workspace, response["edits"])
        for item in todos.items:
            todos = todo_write(
                todos, [TodoItem(id=item.id, content=item.content, status=TodoStatus.IN_PROGRESS)]
            )
            todos = todo_write(
                todos, [TodoItem(id=item.id, content=item.content, status=TodoStatus.COMPLETED)]
            )
        todos.save(workspace.meta_dir / "todos.json")
    except Exception as exc:
        return fail(state, f"code implementation failed: {exc}")

    state = advance_phase(state, artifacts=edited)
    workspace.phase_log.append(state)
    notify(state.phase)

    # Phase 6: verification with bounded repair.
    try:
        outcome = verification_loop(
            workspace,
            protocol,
            config.max_debug_iters,
            gateway,
            config,
            scenario=scenario,
            store=store,
        )
    except RepairBudgetExhausted as exc:
        if store is not None:
            store.bump_usage(family.family_id, success=False)
        return fail(state, str(exc))

    state.finished_at = time.time()
    state.artifacts.append(f"repair_iterations={outcome.iterations_used}")
    workspace.final_phase = Phase.DONE.value
    workspace.save()

    if store is not None:
        store.bump_usage(family.family_id, success=True)
        candidates = extract_fragments(
            workspace, RunOutcome(run_id=scenario + "-" + str(int(time.time())), success=True), library
        )
        store.record_fragments(candidates)

    notify(Phase.DONE)
    return workspace

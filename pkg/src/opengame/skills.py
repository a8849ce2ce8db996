"""The two evolving skill stores: template library and debug protocol.

Template skill: a library of project skeletons (the game-agnostic meta
template plus five specialized families) selected by archetype, instantiated
by copying the manifest's file tree, and grown by promoting code fragments
observed in repeated successful runs.

Debug skill: a persistent protocol of (error signature, cause, fix) entries
with exact/fuzzy signature lookup, plus the lightweight pre-execution
validators that catch cross-file inconsistencies (asset keys, config fields,
scene wiring, init order) before anything is built.

On-disk layout (human-readable, versioned in the repo)::

    skills/templates/<family_id>/manifest.json  + file tree
    skills/templates/library.json               (library version)
    skills/debug_protocol.json
    skills/fragments.json                       (promotion candidates)
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import shutil
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from filelock import FileLock

from .workspace import ProjectWorkspace, RunOutcome

SKILLS_ROOT_ENV = "OPENGAME_SKILLS_ROOT"
JACCARD_THRESHOLD = 0.6
PROMOTION_MIN_RUNS = 2


class Archetype(str, Enum):
    PLATFORMER = "platformer"
    TOP_DOWN = "top_down"
    GRID_LOGIC = "grid_logic"
    TOWER_DEFENSE = "tower_defense"
    UI_HEAVY = "ui_heavy"


ARCHETYPE_TO_FAMILY: dict[Archetype, str] = {
    Archetype.PLATFORMER: "gravity_side_view",
    Archetype.TOP_DOWN: "top_down_continuous",
    Archetype.GRID_LOGIC: "discrete_grid_logic",
    Archetype.TOWER_DEFENSE: "path_and_wave",
    Archetype.UI_HEAVY: "ui_driven",
}


class DestNotEmpty(RuntimeError):
    """Instantiation target already has content."""


class CorruptTemplate(RuntimeError):
    """Manifest and file tree disagree, or a hook cannot be resolved."""


class UnstableCandidate(RuntimeError):
    """Fragment seen in fewer successful runs than promotion requires."""


class ConflictingPath(RuntimeError):
    """Fragment collides with an existing template file of different content."""


# --- template library -------------------------------------------------------

@dataclass
class Hook:
    name: str
    file: str


@dataclass
class UsageStats:
    times_used: int = 0
    times_successful: int = 0


@dataclass
class TemplateFamily:
    family_id: str
    archetype_map: frozenset[Archetype]
    file_tree: tuple[str, ...]
    extension_points: tuple[Hook, ...]
    docs: tuple[str, ...]
    provenance: UsageStats
    root: Path

    @property
    def is_meta(self) -> bool:
        return self.family_id == "meta"


@dataclass
class TemplateLibrary:
    meta: TemplateFamily
    families: list[TemplateFamily]
    version: int
    root: Path

    def family(self, family_id: str) -> TemplateFamily:
        if family_id == "meta":
            return self.meta
        for family in self.families:
            if family.family_id == family_id:
                return family
        raise KeyError(family_id)

    def all_families(self) -> list[TemplateFamily]:
        return [self.meta, *self.families]


def find_skills_root(explicit: str | Path | None = None) -> Path:
    """Resolve the skills directory: explicit arg > env var > upward search."""
    if explicit is not None:
        return Path(explicit)
    env = os.environ.get(SKILLS_ROOT_ENV)
    if env:
        return Path(env)
    current = Path.cwd()
    for candidate in (current, *current.parents):
        root = candidate / "skills"
        if (root / "templates").is_dir():
            return root
    raise FileNotFoundError(
        "no skills/ directory found; pass --skills-root or set "
        f"{SKILLS_ROOT_ENV}"
    )


def _load_family(family_dir: Path) -> TemplateFamily:
    manifest = json.loads((family_dir / "manifest.json").read_text())
    provenance = manifest.get("provenance", {})
    return TemplateFamily(
        family_id=manifest["family_id"],
        archetype_map=frozenset(Archetype(a) for a in manifest["archetypes"]),
        file_tree=tuple(manifest["files"]),
        extension_points=tuple(
            Hook(p["hook"], p["file"]) for p in manifest.get("extension_points", [])
        ),
        docs=tuple(manifest.get("docs", [])),
        provenance=UsageStats(
            times_used=provenance.get("times_used", 0),
            times_successful=provenance.get("times_successful", 0),
        ),
        root=family_dir,
    )


def load_template_library(skills_root: str | Path | None = None) -> TemplateLibrary:
    root = find_skills_root(skills_root) / "templates"
    families = []
    meta = None
    for family_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        if not (family_dir / "manifest.json").is_file():
            continue
        family = _load_family(family_dir)
        if family.is_meta:
            meta = family
        else:
            if not family.extension_points:
                raise CorruptTemplate(
                    f"family {family.family_id} declares no extension points"
                )
            families.append(family)
    if meta is None:
        raise CorruptTemplate("template library has no meta family")
    if meta.archetype_map != frozenset(Archetype):
        raise CorruptTemplate("meta family must map to every archetype")
    ids = [f.family_id for f in families]
    if len(set(ids)) != len(ids):
        raise CorruptTemplate(f"family ids collide: {ids}")
    version_file = root / "library.json"
    version = 1
    if version_file.is_file():
        version = int(json.loads(version_file.read_text()).get("version", 1))
    return TemplateLibrary(meta=meta, families=families, version=version, root=root)


def select_template(archetype: Archetype | None, library: TemplateLibrary) -> TemplateFamily:
    """Pick the family covering the archetype; the meta template is the total
    fallback, so selection never fails."""
    if archetype is not None:
        for family in library.families:
            if archetype in family.archetype_map:
                return family
    return library.meta


def hook_definition_pattern(hook_name: str) -> re.Pattern:
    # Matches a method definition line, not call sites like `this.hook()`.
    return re.compile(rf"^\s*(?:async\s+)?{re.escape(hook_name)}\s*\(", re.M)


def instantiate_template(
    family: TemplateFamily,
    dest: str | Path,
    archetype: Archetype | None = None,
) -> ProjectWorkspace:
    """Copy the family's file tree into an empty directory."""
    dest = Path(dest)
    if dest.exists() and any(dest.iterdir()):
        raise DestNotEmpty(f"{dest} is not empty")

    missing = [f for f in family.file_tree if not (family.root / f).is_file()]
    if missing:
        raise CorruptTemplate(f"manifest lists missing files: {missing}")

    for relative in family.file_tree:
        target = dest / relative
        target.parent.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(family.root / relative, target)

    for hook in family.extension_points:
        host = dest / hook.file
        if not host.is_file():
            raise CorruptTemplate(f"hook {hook.name} host file {hook.file} missing")
        count = len(hook_definition_pattern(hook.name).findall(host.read_text()))
        if count != 1:
            raise CorruptTemplate(
                f"hook {hook.name} resolves {count} times in {hook.file}, expected 1"
            )

    if not any(doc.startswith("docs/") for doc in family.file_tree):
        raise CorruptTemplate("template ships no docs/ subtree")

    workspace = ProjectWorkspace(
        root=dest,
        archetype=archetype.value if archetype else None,
        family_id=family.family_id,
    )
    workspace.save()
    return workspace


# --- fragment extraction and promotion ---------------------------------------

@dataclass
class FragmentCandidate:
    candidate_id: str
    family_id: str
    path: str
    content_digest: str
    content: str
    runs: list[str] = field(default_factory=list)


def _strip_hook_bodies(source: str, hooks: list[str]) -> str:
    """Blank out each hook method body so template-vs-project comparison only
    sees code outside the designated extension points."""
    for hook in hooks:
        match = hook_definition_pattern(hook).search(source)
        if not match:
            continue
        open_brace = source.find("{", match.end() - 1)
        if open_brace == -1:
            continue
        depth = 0
        for i in range(open_brace, len(source)):
            if source[i] == "{":
                depth += 1
            elif source[i] == "}":
                depth -= 1
                if depth == 0:
                    source = source[: open_brace + 1] + source[i:]
                    break
    return source


def extract_fragments(
    workspace: ProjectWorkspace,
    outcome: RunOutcome,
    library: TemplateLibrary,
) -> list[FragmentCandidate]:
    """Diff the finished project against its template; return code added or
    changed outside the hook overrides. Candidates are recorded, not merged."""
    if not outcome.success:
        raise ValueError("fragments are only extracted from successful runs")
    family = library.family(workspace.family_id or "meta")
    hooks_by_file: dict[str, list[str]] = {}
    for hook in family.extension_points:
        hooks_by_file.setdefault(hook.file, []).append(hook.name)

    candidates = []
    for path in sorted(workspace.root.rglob("*.js")):
        relative = str(path.relative_to(workspace.root)).replace("\\", "/")
        if relative.startswith(".opengame/") or relative.startswith("assets/"):
            continue
        content = path.read_text()
        if relative in family.file_tree:
            template_text = (family.root / relative).read_text()
            if content == template_text:
                continue
            hooks = hooks_by_file.get(relative, [])
            if _strip_hook_bodies(content, hooks) == _strip_hook_bodies(template_text, hooks):
                continue  # only hook bodies differ
        digest = hashlib.sha1(content.encode()).hexdigest()[:12]
        candidates.append(
            FragmentCandidate(
                candidate_id=f"{family.family_id}:{relative}:{digest}",
                family_id=family.family_id,
                path=relative,
                content_digest=digest,
                content=content,
                runs=[outcome.run_id],
            )
        )
    return candidates


def promote_fragment(
    candidate: FragmentCandidate,
    library: TemplateLibrary,
) -> TemplateLibrary:
    """Merge a fragment seen in >= 2 distinct successful runs into its family."""
    if len(set(candidate.runs)) < PROMOTION_MIN_RUNS:
        raise UnstableCandidate(
            f"candidate {candidate.candidate_id} seen in {len(set(candidate.runs))} "
            f"run(s); needs {PROMOTION_MIN_RUNS}"
        )
    family = library.family(candidate.family_id)
    target = family.root / candidate.path
    if target.is_file() and candidate.path in family.file_tree:
        if target.read_text() != candidate.content:
            raise ConflictingPath(
                f"{candidate.path} exists in family {family.family_id} with "
                "different content"
            )
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(candidate.content)

    manifest_path = family.root / "manifest.json"
    manifest = json.loads(manifest_path.read_text())
    if candidate.path not in manifest["files"]:
        manifest["files"] = sorted([*manifest["files"], candidate.path])
    _atomic_write_json(manifest_path, manifest)

    library.version += 1
    _atomic_write_json(library.root / "library.json", {"version": library.version})
    return load_template_library(library.root.parent)


# --- error signatures and the debug protocol ---------------------------------

_HEX_RE = re.compile(r"\b0x[0-9a-f]+\b")
_MEMSIZE_RE = re.compile(r"\b\d+(?:\.\d+)?\s*(?:bytes|kib|kb|mib|mb|gib|gb)\b")
_PATH_RE = re.compile(r"(?:[a-z]:)?(?:[\\/][\w.\-]+)+[\\/]([\w.\-]+)")
_LINECOL_RE = re.compile(r":\d+(?::\d+)?")


def normalize_error_signature(raw: str) -> str:
    """Collapse an error message to a stable signature: lowercase, basenames
    instead of absolute paths, line/column numbers, hex addresses and memory
    sizes stripped, whitespace collapsed."""
    if not raw.strip():
        raise ValueError("error text is empty")
    text = raw.lower()
    text = _HEX_RE.sub("", text)
    text = _MEMSIZE_RE.sub("", text)
    text = _PATH_RE.sub(r"\1", text)
    text = _LINECOL_RE.sub("", text)
    return " ".join(text.split())


def signature_jaccard(a: str, b: str) -> float:
    tokens_a, tokens_b = set(a.split()), set(b.split())
    if not tokens_a and not tokens_b:
        return 1.0
    union = tokens_a | tokens_b
    return len(tokens_a & tokens_b) / len(union)


@dataclass
class FixRecipe:
    file_glob: str
    description: str

    def to_dict(self) -> dict:
        return {"file_glob": self.file_glob, "description": self.description}


@dataclass
class DebugEntry:
    signature: str
    cause: str
    fix: FixRecipe
    verified_count: int = 1
    created_at: float = field(default_factory=time.time)

    def __post_init__(self) -> None:
        if not self.signature:
            raise ValueError("signature must be non-empty")
        if self.verified_count < 1:
            raise ValueError("verified_count must be >= 1 at creation")

    def to_dict(self) -> dict:
        return {
            "signature": self.signature,
            "cause": self.cause,
            "fix": self.fix.to_dict(),
            "verified_count": self.verified_count,
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DebugEntry":
        return cls(
            signature=data["signature"],
            cause=data.get("cause", ""),
            fix=FixRecipe(
                file_glob=data.get("fix", {}).get("file_glob", "**/*"),
                description=data.get("fix", {}).get("description", ""),
            ),
            verified_count=data.get("verified_count", 1),
            created_at=data.get("created_at", 0.0),
        )


@dataclass
class DebugProtocol:
    entries: list[DebugEntry] = field(default_factory=list)
    validators: list[str] = field(
        default_factory=lambda: [
            "asset_keys",
            "config_fields",
            "scene_transitions",
            "init_order",
        ]
    )
    version: int = 1

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "validators": list(self.validators),
            "entries": [entry.to_dict() for entry in self.entries],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DebugProtocol":
        return cls(
            entries=[DebugEntry.from_dict(e) for e in data.get("entries", [])],
            validators=list(data.get("validators", [])),
            version=int(data.get("version", 1)),
        )


def lookup_fix(signature: str, protocol: DebugProtocol) -> DebugEntry | None:
    """Exact signature match first, then best token-set Jaccard >= 0.6."""
    for entry in protocol.entries:
        if entry.signature == signature:
            return entry
    best, best_score = None, 0.0
    for entry in protocol.entries:
        score = signature_jaccard(signature, entry.signature)
        if score > best_score:
            best, best_score = entry, score
    if best is not None and best_score >= JACCARD_THRESHOLD:
        return best
    return None


def append_entry(protocol: DebugProtocol, entry: DebugEntry) -> DebugProtocol:
    """Dedup by signature (bumping verified_count) or append; either way the
    protocol version increases."""
    for existing in protocol.entries:
        if existing.signature == entry.signature:
            existing.verified_count += 1
            protocol.version += 1
            return protocol
    protocol.entries.append(entry)
    protocol.version += 1
    return protocol


# --- pre-execution validations ------------------------------------------------

class FindingKind(str, Enum):
    MISMATCHED_ASSET_KEY = "MismatchedAssetKey"
    MISSING_CONFIG_FIELD = "MissingConfigField"
    INVALID_SCENE_TRANSITION = "InvalidSceneTransition"
    INITIALIZATION_ORDER = "InitializationOrder"


@dataclass
class ValidationFinding:
    kind: FindingKind
    file: str
    detail: str


_ASSET_REF_RE = re.compile(r"\.(?:asset|sound)\(\s*[\"']([^\"']+)[\"']")
_CONFIG_REF_RE = re.compile(r"\.value\(\s*[\"']([^\"']+)[\"']")
_SCENE_REG_RE = re.compile(r"\bregisterScene\(\s*[\"']([^\"']+)[\"']")
_SCENE_USE_RE = re.compile(r"\.(?:goto|start)\(\s*[\"']([^\"']+)[\"']")
_SCENE_START_RE = re.compile(r"\.start\(\s*[\"']")
_CONFIG_LOAD_RE = re.compile(r"\bloadConfig\s*\(|\bconfig\.load\s*\(")


def run_pre_execution_validations(workspace: ProjectWorkspace) -> list[ValidationFinding]:
    """Lexical cross-file consistency scan; returns findings, never raises."""
    root = workspace.root
    findings: list[ValidationFinding] = []

    pack_path = workspace.path(workspace.asset_pack_path)
    asset_keys: set[str] | None = None
    if pack_path.is_file():
        try:
            pack = json.loads(pack_path.read_text())
            asset_keys = set(pack.get("entries", {}).keys())
        except json.JSONDecodeError as exc:
            findings.append(
                ValidationFinding(
                    FindingKind.MISMATCHED_ASSET_KEY,
                    workspace.asset_pack_path,
                    f"asset pack is not valid JSON: {exc}",
                )
            )
    else:
        findings.append(
            ValidationFinding(
                FindingKind.MISMATCHED_ASSET_KEY,
                workspace.asset_pack_path,
                "asset-pack.json not found",
            )
        )

    config_path = workspace.path(workspace.config_path)
    config_keys: set[str] | None = None
    if config_path.is_file():
        try:
            config_keys = set(json.loads(config_path.read_text()).keys())
        except json.JSONDecodeError as exc:
            findings.append(
                ValidationFinding(
                    FindingKind.MISSING_CONFIG_FIELD,
                    workspace.config_path,
                    f"gameConfig.json is not valid JSON: {exc}",
                )
            )
    else:
        findings.append(
            ValidationFinding(
                FindingKind.MISSING_CONFIG_FIELD,
                workspace.config_path,
                "gameConfig.json not found",
            )
        )

    registered_scenes: set[str] = set()
    scene_uses: list[tuple[str, str]] = []

    sources = sorted((root / "src").rglob("*.js")) if (root / "src").is_dir() else []
    for path in sources:
        relative = str(path.relative_to(root)).replace("\\", "/")
        text = path.read_text()

        if asset_keys is not None:
            for key in _ASSET_REF_RE.findall(text):
                if key not in asset_keys:
                    findings.append(
                        ValidationFinding(
                            FindingKind.MISMATCHED_ASSET_KEY,
                            relative,
                            f"asset key {key!r} referenced in code but absent "
                            "from asset-pack.json",
                        )
                    )
        if config_keys is not None:
            for key in _CONFIG_REF_RE.findall(text):
                if key not in config_keys:
                    findings.append(
                        ValidationFinding(
                            FindingKind.MISSING_CONFIG_FIELD,
                            relative,
                            f"config key {key!r} read in code but absent from "
                            "gameConfig.json",
                        )
                    )

        registered_scenes.update(_SCENE_REG_RE.findall(text))
        for scene in _SCENE_USE_RE.findall(text):
            scene_uses.append((relative, scene))

        start_match = _SCENE_START_RE.search(text)
        if start_match:
            load_match = _CONFIG_LOAD_RE.search(text)
            if load_match is None or load_match.start() > start_match.start():
                findings.append(
                    ValidationFinding(
                        FindingKind.INITIALIZATION_ORDER,
                        relative,
                        "scene start occurs before the config is loaded",
                    )
                )

    for relative, scene in scene_uses:
        if scene not in registered_scenes:
            findings.append(
                ValidationFinding(
                    FindingKind.INVALID_SCENE_TRANSITION,
                    relative,
                    f"transition to scene {scene!r} which is never registered",
                )
            )

    return findings


# --- persistent store ----------------------------------------------------------

def _atomic_write_json(path: Path, data) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(data, indent=2) + "\n")
    os.replace(tmp, path)


class SkillStore:
    """Filesystem-backed access to both skill stores.

    Reads are lock-free; mutations serialize through a file lock and land via
    atomic replacement, so concurrent runs can share one store.
    """

    def __init__(self, root: str | Path | None = None):
        self.root = find_skills_root(root)
        self.templates_dir = self.root / "templates"
        self.protocol_path = self.root / "debug_protocol.json"
        self.fragments_path = self.root / "fragments.json"
        self._lock = FileLock(str(self.root / ".skills.lock"))

    def load_library(self) -> TemplateLibrary:
        return load_template_library(self.root)

    def load_protocol(self) -> DebugProtocol:
        if not self.protocol_path.is_file():
            return DebugProtocol()
        return DebugProtocol.from_dict(json.loads(self.protocol_path.read_text()))

    def save_protocol(self, protocol: DebugProtocol) -> None:
        with self._lock:
            _atomic_write_json(self.protocol_path, protocol.to_dict())

    def append_entry(self, entry: DebugEntry) -> DebugProtocol:
        with self._lock:
            protocol = self.load_protocol()
            append_entry(protocol, entry)
            _atomic_write_json(self.protocol_path, protocol.to_dict())
            return protocol

    def load_fragments(self) -> list[FragmentCandidate]:
        if not self.fragments_path.is_file():
            return []
        data = json.loads(self.fragments_path.read_text())
        return [
            FragmentCandidate(
                candidate_id=c["candidate_id"],
                family_id=c["family_id"],
                path=c["path"],
                content_digest=c["content_digest"],
                content=c["content"],
                runs=list(c.get("runs", [])),
            )
            for c in data.get("candidates", [])
        ]

    def record_fragments(self, candidates: list[FragmentCandidate]) -> None:
        """Merge newly observed candidates into the store by candidate id."""
        if not candidates:
            return
        with self._lock:
            existing = {c.candidate_id: c for c in self.load_fragments()}
            for candidate in candidates:
                if candidate.candidate_id in existing:
                    runs = existing[candidate.candidate_id].runs
                    for run in candidate.runs:
                        if run not in runs:
                            runs.append(run)
                else:
                    existing[candidate.candidate_id] = candidate
            payload = {
                "candidates": [
                    {
                        "candidate_id": c.candidate_id,
                        "family_id": c.family_id,
                        "path": c.path,
                        "content_digest": c.content_digest,
                        "content": c.content,
                        "runs": c.runs,
                    }
                    for c in existing.values()
                ]
            }
            _atomic_write_json(self.fragments_path, payload)

    def promote(self, candidate_id: str) -> TemplateLibrary:
        with self._lock:
            candidates = {c.candidate_id: c for c in self.load_fragments()}
            if candidate_id not in candidates:
                raise KeyError(f"unknown fragment candidate {candidate_id!r}")
            library = self.load_library()
            return promote_fragment(candidates[candidate_id], library)

    def bump_usage(self, family_id: str, success: bool) -> None:
        with self._lock:
            manifest_path = self.templates_dir / family_id / "manifest.json"
            manifest = json.loads(manifest_path.read_text())
            stats = manifest.setdefault("provenance", {"times_used": 0, "times_successful": 0})
            stats["times_used"] = stats.get("times_used", 0) + 1
            if success:
                stats["times_successful"] = stats.get("times_successful", 0) + 1
            _atomic_write_json(manifest_path, manifest)

"""Workspace types shared by the skill store and the workflow engine.

A project workspace is a directory laid out as::

    <root>/gdd.md
    <root>/gameConfig.json
    <root>/assets/asset-pack.json
    <root>/src/...
    <root>/index.html
    <root>/.opengame/phase_log.json
    <root>/.opengame/todos.json
    <root>/.opengame/workspace.json

Artifact paths are recorded relative to the root so workspaces relocate.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path


class Phase(str, Enum):
    CLASSIFICATION_SCAFFOLDING = "ClassificationScaffolding"
    GAME_DESIGN = "GameDesign"
    ASSET_SYNTHESIS = "AssetSynthesis"
    CONFIG_REGISTRATION = "ConfigRegistration"
    CODE_IMPLEMENTATION = "CodeImplementation"
    VERIFICATION = "Verification"
    DONE = "Done"


PHASE_ORDER: tuple[Phase, ...] = (
    Phase.CLASSIFICATION_SCAFFOLDING,
    Phase.GAME_DESIGN,
    Phase.ASSET_SYNTHESIS,
    Phase.CONFIG_REGISTRATION,
    Phase.CODE_IMPLEMENTATION,
    Phase.VERIFICATION,
    Phase.DONE,
)


def next_phase(phase: Phase) -> Phase:
    index = PHASE_ORDER.index(phase)
    if phase is Phase.DONE:
        raise ValueError("Done is terminal")
    return PHASE_ORDER[index + 1]


@dataclass
class PhaseState:
    phase: Phase
    started_at: float = field(default_factory=time.time)
    finished_at: float | None = None
    artifacts: list[str] = field(default_factory=list)
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "phase": self.phase.value,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "artifacts": list(self.artifacts),
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PhaseState":
        return cls(
            phase=Phase(data["phase"]),
            started_at=data.get("started_at", 0.0),
            finished_at=data.get("finished_at"),
            artifacts=list(data.get("artifacts", [])),
            error=data.get("error"),
        )


@dataclass
class RunOutcome:
    run_id: str
    success: bool


class TodoStatus(str, Enum):
    PENDING = "pending"
    IN_PROGRESS = "in_progress"
    COMPLETED = "completed"


@dataclass
class TodoItem:
    id: str
    content: str
    status: TodoStatus = TodoStatus.PENDING


@dataclass
class TodoList:
    items: list[TodoItem] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "items": [
                {"id": item.id, "content": item.content, "status": item.status.value}
                for item in self.items
            ]
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TodoList":
        return cls(
            items=[
                TodoItem(i["id"], i["content"], TodoStatus(i.get("status", "pending")))
                for i in data.get("items", [])
            ]
        )

    def save(self, path: str | Path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "TodoList":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class ProjectWorkspace:
    root: Path
    archetype: str | None = None
    family_id: str | None = None
    gdd_path: str = "gdd.md"
    config_path: str = "gameConfig.json"
    asset_pack_path: str = "assets/asset-pack.json"
    phase_log: list[PhaseState] = field(default_factory=list)
    failed: bool = False
    failure_reason: str | None = None
    final_phase: str | None = None

    def __post_init__(self) -> None:
        self.root = Path(self.root)

    @property
    def meta_dir(self) -> Path:
        return self.root / ".opengame"

    def path(self, relative: str) -> Path:
        return self.root / relative

    def contains(self, target: Path) -> bool:
        try:
            Path(target).resolve().relative_to(self.root.resolve())
            return True
        except ValueError:
            return False

    def save(self) -> None:
        self.meta_dir.mkdir(parents=True, exist_ok=True)
        meta = {
            "archetype": self.archetype,
            "family_id": self.family_id,
            "gdd_path": self.gdd_path,
            "config_path": self.config_path,
            "asset_pack_path": self.asset_pack_path,
            "failed": self.failed,
            "failure_reason": self.failure_reason,
            "final_phase": self.final_phase,
        }
        (self.meta_dir / "workspace.json").write_text(json.dumps(meta, indent=2) + "\n")
        log = [state.to_dict() for state in self.phase_log]
        (self.meta_dir / "phase_log.json").write_text(json.dumps(log, indent=2) + "\n")

    @classmethod
    def load(cls, root: str | Path) -> "ProjectWorkspace":
        root = Path(root)
        meta_path = root / ".opengame" / "workspace.json"
        meta = json.loads(meta_path.read_text()) if meta_path.is_file() else {}
        workspace = cls(
            root=root,
            archetype=meta.get("archetype"),
            family_id=meta.get("family_id"),
            gdd_path=meta.get("gdd_path", "gdd.md"),
            config_path=meta.get("config_path", "gameConfig.json"),
            asset_pack_path=meta.get("asset_pack_path", "assets/asset-pack.json"),
            failed=meta.get("failed", False),
            failure_reason=meta.get("failure_reason"),
            final_phase=meta.get("final_phase"),
        )
        log_path = root / ".opengame" / "phase_log.json"
        if log_path.is_file():
            workspace.phase_log = [
                PhaseState.from_dict(item) for item in json.loads(log_path.read_text())
            ]
        return workspace

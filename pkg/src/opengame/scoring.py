"""The three benchmark metrics plus requirement compilation and aggregation.

All metrics land in [0, 100]. The rubric weights are explicit constants so a
report is auditable:

- Build Health: build 40 + load 30 + render 20 + console 10*(1 - errors/5).
- Visual Usability: 0.5 * heuristic + 0.5 * judge, where the heuristic is
  100 * (0.5 * mean frame entropy + 0.5 * motion score).
- Intent Alignment: 100 * weighted pass rate over per-requirement verdicts
  with category weights core 3 / secondary 2 / cosmetic 1.

Invalid runs are never scored as zero; they are excluded from means and
counted separately as pipeline errors.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from . import imaging
from .bench import BuildResult, CaptureSet, RunValidity, TooFewFrames, has_fatal_error
from .gateway import (
    BackendError,
    ChatRequest,
    Gateway,
    JudgeRequest,
    ResponseSchema,
    SchemaError,
    SchemaKey,
)

logger = logging.getLogger(__name__)

BH_BUILD_POINTS = 40.0
BH_LOAD_POINTS = 30.0
BH_RENDER_POINTS = 20.0
BH_CONSOLE_POINTS = 10.0
CONSOLE_ERROR_BUDGET = 5
MOTION_SATURATION = 0.02

CATEGORY_WEIGHTS = {"core_mechanic": 3, "secondary_mechanic": 2, "cosmetic": 1}


class NoRequirements(ValueError):
    """The compiler produced no usable requirement list."""


class MissingVerdict(ValueError):
    pass


class UnknownRequirement(ValueError):
    pass


class VerdictValue(float, Enum):
    PASS = 1.0
    PARTIAL = 0.5
    FAIL = 0.0

    @classmethod
    def parse(cls, raw) -> "VerdictValue":
        if isinstance(raw, cls):
            return raw
        if isinstance(raw, str):
            return {"pass": cls.PASS, "partial": cls.PARTIAL, "fail": cls.FAIL}[raw.lower()]
        return cls(float(raw))


@dataclass(frozen=True)
class Requirement:
    id: str
    text: str
    category: str  # core_mechanic | secondary_mechanic | cosmetic

    def __post_init__(self) -> None:
        if self.category not in CATEGORY_WEIGHTS:
            raise ValueError(f"unknown category {self.category!r}")

    @property
    def weight(self) -> int:
        return CATEGORY_WEIGHTS[self.category]


@dataclass(frozen=True)
class Verdict:
    requirement_id: str
    value: VerdictValue
    evidence: str = ""


@dataclass
class MetricScores:
    bh: float
    vu: float
    ia: float
    subscores: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name, value in (("bh", self.bh), ("vu", self.vu), ("ia", self.ia)):
            if not 0.0 <= value <= 100.0:
                raise ValueError(f"{name}={value} outside [0, 100]")


REQUIREMENTS_SCHEMA = ResponseSchema(
    required_keys=(SchemaKey("requirements", "list"),),
    description="requirement extraction",
)

REQUIREMENTS_SYSTEM_PROMPT = """\
You turn a game request into a checklist of discrete, visually verifiable
requirements. Respond with JSON: {"requirements": [{"text": ...,
"category": "core_mechanic" | "secondary_mechanic" | "cosmetic"}, ...]}.
core_mechanic: the game is broken without it. secondary_mechanic: notable
but survivable. cosmetic: look/feel only. Keep each requirement one
sentence, concrete, and checkable from screenshots of play.
"""

VU_RUBRIC_PROMPT = """\
Rate the visual usability of this game session from its screenshots on a
0-100 scale: is coherent, animated, visibly interactable game content being
rendered (not a blank, corrupt, or frozen page)? Respond as JSON:
{"score": <number>}.
"""

IA_RUBRIC_PROMPT = """\
Judge each requirement against the gameplay screenshots. For every
requirement id, answer pass (clearly satisfied), partial (attempted or
ambiguous), or fail (absent). Respond as JSON:
{"verdicts": [{"requirement_id": ..., "value": "pass|partial|fail",
"evidence": ...}, ...]}.
"""


def requirement_id(text: str) -> str:
    return "req-" + hashlib.sha1(text.strip().lower().encode()).hexdigest()[:10]


def compile_requirements(
    prompt: str,
    gateway: Gateway,
    backend_id: str = "chat",
    tags: tuple[str, ...] = (),
) -> list[Requirement]:
    """Extract categorized requirements from the prompt; duplicates merge by
    normalized text, and at least one core mechanic must survive."""
    if not prompt or not prompt.strip():
        raise ValueError("prompt must be non-empty")
    request = ChatRequest(
        backend_id=backend_id,
        system_prompt=REQUIREMENTS_SYSTEM_PROMPT,
        user_prompt=f"Game request:\n{prompt}",
        temperature=0.0,
        tags=tags or ("requirements", "default"),
    )
    raw = gateway.complete_structured(request, REQUIREMENTS_SCHEMA)
    requirements: list[Requirement] = []
    seen: set[str] = set()
    for item in raw["requirements"]:
        text = str(item.get("text", "")).strip()
        if not text:
            continue
        identifier = requirement_id(text)
        if identifier in seen:
            continue
        seen.add(identifier)
        category = str(item.get("category", "secondary_mechanic"))
        if category not in CATEGORY_WEIGHTS:
            category = "secondary_mechanic"
        requirements.append(Requirement(id=identifier, text=text, category=category))
    if not requirements:
        raise NoRequirements("model produced no requirements")
    if not any(r.category == "core_mechanic" for r in requirements):
        raise NoRequirements("no core_mechanic requirement extracted")
    return requirements


# --- build health ------------------------------------------------------------

def score_build_health(build: BuildResult, captures: CaptureSet) -> MetricScores:
    subscores = {
        "build": BH_BUILD_POINTS if build.ok else 0.0,
        "load": 0.0 if has_fatal_error(captures) else BH_LOAD_POINTS,
        "render": 0.0,
        "console": 0.0,
    }
    for blob in captures.screenshot_bytes():
        try:
            if imaging.non_empty_frame(blob):
                subscores["render"] = BH_RENDER_POINTS
                break
        except imaging.DecodeError:
            continue
    error_count = sum(1 for e in captures.console_events if e.level == "error")
    error_count += len(captures.page_errors)
    subscores["console"] = BH_CONSOLE_POINTS * max(
        0.0, 1.0 - error_count / CONSOLE_ERROR_BUDGET
    )
    bh = max(0.0, min(100.0, sum(subscores.values())))
    return MetricScores(bh=bh, vu=0.0, ia=0.0, subscores=subscores)


# --- visual usability ----------------------------------------------------------

def frame_entropy(image: bytes) -> float:
    """Normalized Shannon entropy of the grayscale histogram, in [0, 1]."""
    return imaging.histogram_entropy(imaging.grayscale_array(image))


def motion_score(captures: CaptureSet) -> float:
    """Mean consecutive-frame difference mapped so 2% average change = 1."""
    shots = captures.screenshot_bytes()
    if len(shots) < 2:
        raise TooFewFrames("motion needs at least 2 screenshots")
    grays = [imaging.grayscale_array(blob) for blob in shots]
    diffs = [imaging.mean_abs_diff(a, b) for a, b in zip(grays, grays[1:])]
    mean_diff = sum(diffs) / len(diffs)
    return min(1.0, mean_diff / MOTION_SATURATION)


def visual_heuristic(captures: CaptureSet) -> float:
    """100 * (0.5 * mean frame entropy + 0.5 * motion score)."""
    shots = captures.screenshot_bytes()
    if not shots:
        return 0.0
    entropies = [frame_entropy(blob) for blob in shots]
    mean_entropy = sum(entropies) / len(entropies)
    motion = motion_score(captures) if len(shots) >= 2 else 0.0
    return 100.0 * (0.5 * mean_entropy + 0.5 * motion)


@dataclass
class VuScore:
    vu: float
    heuristic: float
    judge: float | None
    heuristic_only: bool = False


def score_visual_usability(
    captures: CaptureSet,
    gateway: Gateway | None,
    tags: tuple[str, ...] = (),
) -> VuScore:
    """0.5 * heuristic + 0.5 * VLM judge; falls back to the heuristic alone
    (flagged) when the judge is unavailable."""
    heuristic = visual_heuristic(captures)
    if gateway is None:
        return VuScore(vu=heuristic, heuristic=heuristic, judge=None, heuristic_only=True)
    try:
        request = JudgeRequest(
            images=tuple(captures.screenshot_bytes()),
            rubric_prompt=VU_RUBRIC_PROMPT,
            schema=ResponseSchema(required_keys=(SchemaKey("score", "number"),)),
            tags=tags or ("judge_vu", "default"),
        )
        judge = float(gateway.judge(request)["score"])
        judge = max(0.0, min(100.0, judge))
    except (BackendError, SchemaError, ValueError) as exc:
        logger.warning("VU judge unavailable (%s); falling back to heuristic", exc)
        return VuScore(vu=heuristic, heuristic=heuristic, judge=None, heuristic_only=True)
    vu = 0.5 * heuristic + 0.5 * judge
    return VuScore(vu=vu, heuristic=heuristic, judge=judge)


# --- intent alignment ------------------------------------------------------------

def collect_verdicts(
    requirements: list[Requirement],
    captures: CaptureSet,
    gateway: Gateway,
    tags: tuple[str, ...] = (),
) -> list[Verdict]:
    """Ask the vision judge for one verdict per requirement."""
    listing = "\n".join(f"- {r.id}: {r.text} [{r.category}]" for r in requirements)
    request = JudgeRequest(
        images=tuple(captures.screenshot_bytes()),
        rubric_prompt=IA_RUBRIC_PROMPT + "\nRequirements:\n" + listing,
        schema=ResponseSchema(required_keys=(SchemaKey("verdicts", "list"),)),
        tags=tags or ("judge_ia", "default"),
    )
    raw = gateway.judge(request)
    verdicts = []
    for item in raw["verdicts"]:
        verdicts.append(
            Verdict(
                requirement_id=str(item["requirement_id"]),
                value=VerdictValue.parse(item.get("value", "fail")),
                evidence=str(item.get("evidence", "")),
            )
        )
    return verdicts


def score_intent_alignment(
    requirements: list[Requirement],
    verdicts: list[Verdict],
) -> float:
    """100 * sum(w_i * v_i) / sum(w_i); verdicts must cover every requirement
    exactly once."""
    by_id = {r.id: r for r in requirements}
    seen: set[str] = set()
    weighted = 0.0
    for verdict in verdicts:
        if verdict.requirement_id not in by_id:
            raise UnknownRequirement(verdict.requirement_id)
        if verdict.requirement_id in seen:
            raise UnknownRequirement(f"duplicate verdict for {verdict.requirement_id}")
        seen.add(verdict.requirement_id)
        weighted += by_id[verdict.requirement_id].weight * float(verdict.value.value)
    missing = set(by_id) - seen
    if missing:
        raise MissingVerdict(f"no verdict for: {sorted(missing)}")
    total_weight = sum(r.weight for r in requirements)
    return 100.0 * weighted / total_weight


# --- aggregation -------------------------------------------------------------------

@dataclass
class SeedResult:
    seed: int
    validity: RunValidity
    scores: MetricScores | None
    verdicts: list[Verdict] = field(default_factory=list)


@dataclass
class EvalReport:
    task_id: str
    per_seed: list[SeedResult]
    mean: MetricScores | None
    pipeline_error_count: int

    def to_dict(self) -> dict:
        def round4(value: float) -> float:
            return round(value + 0.0, 4)

        seeds = []
        for result in self.per_seed:
            entry: dict = {
                "seed": result.seed,
                "validity": {
                    "verdict": result.validity.verdict,
                    "reasons": list(result.validity.reasons),
                },
            }
            if result.scores is not None:
                entry.update(
                    bh=round4(result.scores.bh),
                    vu=round4(result.scores.vu),
                    ia=round4(result.scores.ia),
                    subscores={k: round4(v) for k, v in sorted(result.scores.subscores.items())},
                )
            entry["verdicts"] = [
                {
                    "requirement_id": v.requirement_id,
                    "value": v.value.name.lower(),
                    "evidence": v.evidence,
                }
                for v in result.verdicts
            ]
            seeds.append(entry)
        payload = {
            "task_id": self.task_id,
            "seeds": seeds,
            "pipeline_errors": self.pipeline_error_count,
        }
        if self.mean is not None:
            payload["mean"] = {
                "bh": round4(self.mean.bh),
                "vu": round4(self.mean.vu),
                "ia": round4(self.mean.ia),
            }
        else:
            payload["mean"] = None
        return payload

    def write(self, path: str | Path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(
            json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"
        )

    def summary_lines(self) -> list[str]:
        lines = [f"task {self.task_id}:"]
        for result in self.per_seed:
            if result.validity.is_valid and result.scores:
                lines.append(
                    f"  seed {result.seed}: BH {result.scores.bh:.1f}  "
                    f"VU {result.scores.vu:.1f}  IA {result.scores.ia:.1f}"
                )
            else:
                lines.append(
                    f"  seed {result.seed}: pipeline error ({'; '.join(result.validity.reasons)})"
                )
        if self.mean:
            lines.append(
                f"  mean: BH {self.mean.bh:.1f}  VU {self.mean.vu:.1f}  IA {self.mean.ia:.1f}"
            )
        else:
            lines.append("  mean: n/a (no valid runs)")
        return lines


def aggregate_report(task_id: str, per_seed: list[SeedResult]) -> EvalReport:
    """Mean metrics over valid seeds; pipeline errors counted, never averaged."""
    if not per_seed:
        raise ValueError("need at least one seed result")
    valid = [r for r in per_seed if r.validity.is_valid and r.scores is not None]
    errors = len(per_seed) - len(valid)
    mean = None
    if valid:
        mean = MetricScores(
            bh=sum(r.scores.bh for r in valid) / len(valid),
            vu=sum(r.scores.vu for r in valid) / len(valid),
            ia=sum(r.scores.ia for r in valid) / len(valid),
        )
    return EvalReport(
        task_id=task_id,
        per_seed=per_seed,
        mean=mean,
        pipeline_error_count=errors,
    )

"""ABC notation parsing, rendering, and sine-wave synthesis.

Supported input is the monophonic subset used for generated game music:
the six mandatory headers (X, T, M, L, Q, K), note letters ``A-G``/``a-g``
with explicit accidentals (``^`` ``_`` ``=``), octave marks (``'`` ``,``),
digit/slash lengths, rests (``z``), and bar lines (ignored for timing).
The key header is carried through verbatim but does not alter pitches;
accidentals must be written out per note.

Pitch is stored as a semitone offset where 0 is middle C, so ``A`` (= A4)
sits at +9 and renders at 440 Hz under equal temperament.
"""

from __future__ import annotations

import math
import wave
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

REQUIRED_HEADERS = ("X", "T", "M", "L", "Q", "K")

_NATURAL_SEMITONES = {"C": 0, "D": 2, "E": 4, "F": 5, "G": 7, "A": 9, "B": 11}
_SEMITONE_NAMES = {
    0: ("", "C"),
    1: ("^", "C"),
    2: ("", "D"),
    3: ("^", "D"),
    4: ("", "E"),
    5: ("", "F"),
    6: ("^", "F"),
    7: ("", "G"),
    8: ("^", "G"),
    9: ("", "A"),
    10: ("^", "A"),
    11: ("", "B"),
}

MIDDLE_C_HZ = 440.0 * 2.0 ** (-9 / 12)
ATTACK_RELEASE_SECONDS = 0.010
PEAK_FRACTION = 0.8


class MissingHeader(ValueError):
    def __init__(self, name: str):
        super().__init__(f"missing required ABC header {name}:")
        self.name = name


class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at body position {position})")
        self.position = position


class EmptyScore(ValueError):
    """Synthesis was asked for a score with no events."""


@dataclass(frozen=True)
class AbcEvent:
    kind: str  # "note" | "rest"
    length: Fraction  # multiples of the L unit note length
    pitch: int | None = None  # semitones from middle C; None for rests


@dataclass
class AbcScore:
    index: str
    title: str
    meter: str
    unit_length: Fraction
    tempo_unit: Fraction  # the note value one beat refers to
    tempo_bpm: int
    key: str
    events: list[AbcEvent] = field(default_factory=list)

    def event_seconds(self, event: AbcEvent) -> Fraction:
        """Exact duration of one event, in seconds, as a rational."""
        whole_notes = event.length * self.unit_length
        return whole_notes * Fraction(60, self.tempo_bpm) / self.tempo_unit

    def total_seconds(self) -> Fraction:
        return sum((self.event_seconds(e) for e in self.events), Fraction(0))


def _parse_fraction(text: str) -> Fraction:
    num, _, den = text.partition("/")
    if den:
        return Fraction(int(num), int(den))
    return Fraction(int(num))


def _parse_tempo(value: str, unit_length: Fraction) -> tuple[Fraction, int]:
    value = value.strip()
    if "=" in value:
        unit_text, _, bpm_text = value.partition("=")
        return _parse_fraction(unit_text.strip()), int(bpm_text.strip())
    # Bare "Q:120" means 120 unit note lengths per minute.
    return unit_length, int(value)


def parse_abc(text: str) -> AbcScore:
    """Parse ABC notation text into a score."""
    if not text.strip():
        raise ValueError("ABC text is empty")

    headers: dict[str, str] = {}
    body_lines: list[str] = []
    in_body = False
    for raw_line in text.splitlines():
        line = raw_line.split("%", 1)[0]
        if not in_body:
            stripped = line.strip()
            if not stripped:
                continue
            if len(stripped) >= 2 and stripped[1] == ":" and stripped[0].isalpha():
                name = stripped[0].upper()
                headers[name] = stripped[2:].strip()
                if name == "K":
                    in_body = True
                continue
            # Tune body started without a K: line; the required-header check
            # below reports the missing header.
            in_body = True
            body_lines.append(line)
        else:
            if line.strip().lower().startswith("w:"):
                continue  # lyrics
            body_lines.append(line)

    for name in REQUIRED_HEADERS:
        if name not in headers:
            raise MissingHeader(name)

    unit_length = _parse_fraction(headers["L"])
    if unit_length <= 0:
        raise ValueError("L: unit note length must be positive")
    tempo_unit, tempo_bpm = _parse_tempo(headers["Q"], unit_length)
    if tempo_bpm <= 0 or tempo_unit <= 0:
        raise ValueError("Q: tempo must be positive")

    body = "\n".join(body_lines)
    events = _parse_body(body)

    return AbcScore(
        index=headers["X"],
        title=headers["T"],
        meter=headers["M"],
        unit_length=unit_length,
        tempo_unit=tempo_unit,
        tempo_bpm=tempo_bpm,
        key=headers["K"],
        events=events,
    )


def _parse_body(body: str) -> list[AbcEvent]:
    events: list[AbcEvent] = []
    i = 0
    n = len(body)
    while i < n:
        ch = body[i]
        if ch in " \t\n|:-":
            i += 1
            continue
        if ch in "[]" and (
            (i > 0 and body[i - 1] == "|") or (i + 1 < n and body[i + 1] == "|")
        ):
            i += 1
            continue

        accidental = 0
        start = i
        if ch in "^_=":
            mark = ch
            while i < n and body[i] == mark:
                i += 1
            count = i - start
            if mark == "^":
                accidental = count
            elif mark == "_":
                accidental = -count
            if i >= n:
                raise ParseError("accidental with no note", start)
            ch = body[i]

        if ch == "z":
            i += 1
            length, i = _parse_length(body, i)
            if accidental:
                raise ParseError("accidental before a rest", start)
            events.append(AbcEvent(kind="rest", length=length))
            continue

        upper = ch.upper()
        if upper in _NATURAL_SEMITONES:
            pitch = _NATURAL_SEMITONES[upper] + accidental
            if ch.islower():
                pitch += 12
            i += 1
            while i < n and body[i] in "',":
                pitch += 12 if body[i] == "'" else -12
                i += 1
            length, i = _parse_length(body, i)
            events.append(AbcEvent(kind="note", length=length, pitch=pitch))
            continue

        raise ParseError(f"unexpected character {ch!r}", i)
    return events


def _parse_length(body: str, i: int) -> tuple[Fraction, int]:
    n = len(body)
    num_start = i
    while i < n and body[i].isdigit():
        i += 1
    numerator = int(body[num_start:i]) if i > num_start else 1
    denominator = 1
    while i < n and body[i] == "/":
        i += 1
        den_start = i
        while i < n and body[i].isdigit():
            i += 1
        denominator *= int(body[den_start:i]) if i > den_start else 2
    length = Fraction(numerator, denominator)
    if length <= 0:
        raise ParseError("event length must be positive", num_start)
    return length, i


def _render_length(length: Fraction) -> str:
    if length == 1:
        return ""
    if length.denominator == 1:
        return str(length.numerator)
    if length.numerator == 1:
        return "/" if length.denominator == 2 else f"/{length.denominator}"
    return f"{length.numerator}/{length.denominator}"


def _render_pitch(pitch: int) -> str:
    octave, semitone = divmod(pitch, 12)
    accidental, letter = _SEMITONE_NAMES[semitone]
    if octave <= 0:
        marks = "," * (-octave)
    else:
        letter = letter.lower()
        marks = "'" * (octave - 1)
    return f"{accidental}{letter}{marks}"


def render_abc(score: AbcScore) -> str:
    """Render a score back to ABC text (canonical form, 8 events per line)."""
    tempo = f"{score.tempo_unit.numerator}/{score.tempo_unit.denominator}={score.tempo_bpm}"
    lines = [
        f"X:{score.index}",
        f"T:{score.title}",
        f"M:{score.meter}",
        f"L:{score.unit_length.numerator}/{score.unit_length.denominator}",
        f"Q:{tempo}",
        f"K:{score.key}",
    ]
    tokens = []
    for event in score.events:
        if event.kind == "rest":
            body = "z"
        else:
            body = _render_pitch(event.pitch if event.pitch is not None else 0)
        tokens.append(body + _render_length(event.length))
    for start in range(0, len(tokens), 8):
        lines.append(" ".join(tokens[start : start + 8]) + " |")
    return "\n".join(lines) + "\n"


@dataclass
class PcmAudio:
    sample_rate: int
    samples: np.ndarray  # int16, mono
    channels: int = 1
    bit_depth: int = 16

    @property
    def duration_seconds(self) -> float:
        return len(self.samples) / self.sample_rate


def note_frequency(pitch: int) -> float:
    """Equal-temperament frequency for a semitone offset from middle C."""
    return MIDDLE_C_HZ * 2.0 ** (pitch / 12.0)


def synthesize_audio(score: AbcScore, sample_rate: int = 44100) -> PcmAudio:
    """Render a score to 16-bit mono PCM: sine notes, 10 ms ramps, rests silent.

    Event boundaries are placed at ``round(exact_time * sample_rate)`` so the
    total length never drifts more than one sample from the rational total.
    """
    if not score.events:
        raise EmptyScore("score has no events")

    boundaries = [0]
    t = Fraction(0)
    for event in score.events:
        t += score.event_seconds(event)
        boundaries.append(round(t * sample_rate))

    total_samples = boundaries[-1]
    buf = np.zeros(total_samples, dtype=np.float64)
    ramp_samples = int(round(ATTACK_RELEASE_SECONDS * sample_rate))

    for event, start, end in zip(score.events, boundaries, boundaries[1:]):
        count = end - start
        if event.kind != "note" or count <= 0:
            continue
        freq = note_frequency(event.pitch or 0)
        times = np.arange(count) / sample_rate
        tone = np.sin(2.0 * math.pi * freq * times)
        ramp = min(ramp_samples, count // 2)
        if ramp > 0:
            envelope = np.ones(count)
            envelope[:ramp] = np.linspace(0.0, 1.0, ramp, endpoint=False)
            envelope[count - ramp :] = np.linspace(1.0, 0.0, ramp, endpoint=False)
            tone *= envelope
        buf[start:end] = tone

    peak = float(np.abs(buf).max())
    if peak > 0:
        buf *= PEAK_FRACTION / peak
    samples = np.round(buf * 32767.0).astype(np.int16)
    return PcmAudio(sample_rate=sample_rate, samples=samples)


def write_wav(audio: PcmAudio, path) -> None:
    """Write PCM audio as a canonical little-endian RIFF/WAVE file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with wave.open(str(path), "wb") as handle:
        handle.setnchannels(audio.channels)
        handle.setsampwidth(audio.bit_depth // 8)
        handle.setframerate(audio.sample_rate)
        handle.writeframes(audio.samples.tobytes())


def abc_to_wav(text: str, path, sample_rate: int = 44100) -> AbcScore:
    """Parse ABC text, synthesize it, and write a WAV file in one step."""
    score = parse_abc(text)
    write_wav(synthesize_audio(score, sample_rate), path)
    return score

"""ABC notation -> parsed score -> sine-rendered WAV.

Run from the repo root: python3 demos/02_abc_music.py
"""

from opengame.abcmusic import note_frequency, parse_abc, render_abc, synthesize_audio, write_wav

NOTATION = """\
X:1
T:Cavern Loop
M:4/4
L:1/8
Q:1/4=112
K:C
CDEF GABc | c2G2 E2C2 | EGcG EGcG | C4 z4 |
"""

score = parse_abc(NOTATION)
print(f"parsed {len(score.events)} events at {score.tempo_bpm} bpm")
print(f"exact duration: {float(score.total_seconds()):.3f}s")
print(f"pitch A sits at {note_frequency(9):.1f} Hz (equal temperament)")

audio = synthesize_audio(score)
print(f"rendered {len(audio.samples)} samples at {audio.sample_rate} Hz")

write_wav(audio, "demo_loop.wav")
print("wrote demo_loop.wav")

# The renderer emits canonical notation that parses back to an equal score:
assert parse_abc(render_abc(score)) == score
print("round-trip: parse(render(score)) == score")

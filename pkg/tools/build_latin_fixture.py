"""Regenerate ``src/synphylo/data/sswl_latin.csv``.

The reference Latin-subfamily study reports only the frequency table of the
fully mapped parameters, not the per-parameter values. This script builds a
matrix realizing that table exactly: one column per occurrence of each
outcome over (French, Italian, Latin, Spanish, Portuguese), shuffled with a
fixed seed, plus nine partially mapped parameters and two extra languages
so that restriction and filtering have something to do.

Run from the repository root:

    python tools/build_latin_fixture.py
"""

import random
from pathlib import Path

LATIN_FIVE = ("French", "Italian", "Latin", "Spanish", "Portuguese")
EXTRA = ("English", "German")

# outcome over LATIN_FIVE -> number of fully mapped parameters realizing it
COUNTS = {
    "00000": 31, "00001": 1, "00010": 1, "00100": 23,
    "00101": 3, "00111": 2, "01000": 1, "01011": 1,
    "01101": 1, "01111": 3, "10000": 5, "10010": 2,
    "11010": 1, "11000": 2, "11011": 8, "11111": 21,
}
N_PARTIAL = 9


def build(seed=20170302):
    rng = random.Random(seed)
    columns = [bits for bits, count in sorted(COUNTS.items()) for _ in range(count)]
    assert len(columns) == 106
    for _ in range(N_PARTIAL):
        columns.append(None)
    rng.shuffle(columns)

    records = []
    for j, bits in enumerate(columns, start=1):
        param = f"P{j:03d}"
        if bits is None:
            # partial: French always mapped, Latin never, others at random
            values = {"French": rng.randint(0, 1)}
            for lang in ("Italian", "Spanish", "Portuguese"):
                if rng.random() < 0.7:
                    values[lang] = rng.randint(0, 1)
        else:
            values = dict(zip(LATIN_FIVE, map(int, bits)))
        for lang in EXTRA:
            if rng.random() < 0.85:
                values[lang] = rng.randint(0, 1)
        records.append((param, values))

    lines = ["language|property|value"]
    for lang in LATIN_FIVE + EXTRA:
        for param, values in records:
            if lang in values:
                lines.append(f"{lang}|{param}|{values[lang]}")
    return "\n".join(lines) + "\n"


if __name__ == "__main__":
    out = Path(__file__).resolve().parents[1] / "src" / "synphylo" / "data" / "sswl_latin.csv"
    out.write_text(build(), encoding="utf-8")
    print(f"wrote {out}")

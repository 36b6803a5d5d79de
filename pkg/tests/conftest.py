import math
import random

import pytest
from hypothesis import settings

from abelia.fields import extensions_with_conductor, quadratic_compositum
from abelia.quadratic import fundamental_discriminant, is_fundamental

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

FUNDAMENTAL = [d for d in range(-10**4, 10**4 + 1) if d not in (0, 1) and is_fundamental(d)]


def random_multiquadratic(rng: random.Random, r: int, cond_max: int = 10**4):
    """Q(sqrt(D1), ..., sqrt(Dr)) with independent Di and conductor <= cond_max."""
    while True:
        discs = []
        generated = {1}
        while len(discs) < r:
            d = rng.choice(FUNDAMENTAL)
            if d in generated or math.lcm(*(abs(x) for x in discs + [d])) > cond_max:
                if len(discs) and rng.random() < 0.05:
                    break
                continue
            discs.append(d)
            generated |= {fundamental_discriminant(g * d) for g in generated} | {d}
        if len(discs) == r:
            return quadratic_compositum(discs)


def random_extension(rng: random.Random, p: int, r: int, cond_max: int = 10**4):
    """Uniform over conductors first, then over extensions with that conductor."""
    if p == 2:
        return random_multiquadratic(rng, r, cond_max)
    while True:
        f = rng.randrange(7, cond_max + 1)
        found = extensions_with_conductor(f, p, r)
        if found:
            return rng.choice(found)


@pytest.fixture
def rng():
    return random.Random(20261015)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []
ACCEPTANCE_NOTES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
        for note in ACCEPTANCE_NOTES:
            terminalreporter.write_line(note)

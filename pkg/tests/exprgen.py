"""Random expression texts in the case-file grammar, for property tests.

Expressions use the space variable ``x``, the parameter ``beta``, the field
``u`` and the jet ``u_x``.  Square roots and logarithms only see arguments
bounded away from zero and exponentials only see bounded arguments, so every
expression is smooth and of moderate size on the sampling box.
"""

from __future__ import annotations

import random

from hypothesis import strategies as st

LEAVES = ("x", "beta", "u", "u_x", "1", "2", "3", "(1/2)", "(2/3)")
BOX = {"x": (0.5, 2.0), "beta": (0.5, 2.0), "u": (0.5, 2.0), "u_x": (-1.0, 1.0)}


def _wrap(kind: str, a: str) -> str:
    if kind == "exp":
        return f"exp(sin({a}))"
    if kind == "sqrt":
        return f"sqrt(1 + ({a})^2)"
    if kind == "ln":
        return f"ln(2 + cos({a}))"
    if kind == "div":
        return f"1/(2 + sin({a}))"
    return f"{kind}({a})"


UNARY = ("exp", "sqrt", "ln", "sin", "cos", "tanh", "div")
BINARY = ("+", "-", "*")


def random_text(rng: random.Random, depth: int = 4) -> str:
    if depth == 0 or rng.random() < 0.2:
        return rng.choice(LEAVES)
    r = rng.random()
    if r < 0.35:
        return _wrap(rng.choice(UNARY), random_text(rng, depth - 1))
    if r < 0.45:
        return f"({random_text(rng, depth - 1)})^{rng.choice(('2', '3'))}"
    op = rng.choice(BINARY)
    return f"({random_text(rng, depth - 1)} {op} {random_text(rng, depth - 1)})"


@st.composite
def expr_texts(draw, depth: int = 4) -> str:
    seed = draw(st.integers(min_value=0, max_value=2**32 - 1))
    return random_text(random.Random(seed), depth)


def random_point(rng: random.Random) -> dict[str, float]:
    return {k: rng.uniform(lo, hi) for k, (lo, hi) in BOX.items()}

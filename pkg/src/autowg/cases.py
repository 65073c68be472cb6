"""Manufactured solutions of -Laplace(u) = f on the unit square, u = 0 on the boundary."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class ManufacturedCase:
    name: str
    u: Callable
    grad: Callable  # (x, y) -> (m, 2)
    f: Callable


def _sine():
    pi = np.pi

    def u(x, y):
        return np.sin(pi * x) * np.sin(pi * y)

    def grad(x, y):
        return np.stack([pi * np.cos(pi * x) * np.sin(pi * y), pi * np.sin(pi * x) * np.cos(pi * y)], axis=-1)

    def f(x, y):
        return 2 * pi**2 * np.sin(pi * x) * np.sin(pi * y)

    return ManufacturedCase("sine", u, grad, f)


def _patch():
    def u(x, y):
        return x * (1 - x) * y * (1 - y)

    def grad(x, y):
        return np.stack([(1 - 2 * x) * y * (1 - y), x * (1 - x) * (1 - 2 * y)], axis=-1)

    def f(x, y):
        return 2 * y * (1 - y) + 2 * x * (1 - x)

    return ManufacturedCase("patchP4", u, grad, f)


def _zero():
    def u(x, y):
        return np.zeros_like(np.asarray(x, dtype=float))

    def grad(x, y):
        return np.zeros(np.shape(x) + (2,))

    return ManufacturedCase("zero", u, grad, u)


CASES = {"sine": _sine(), "patchP4": _patch(), "zero": _zero()}


def get_case(name):
    try:
        return CASES[name]
    except KeyError:
        raise ValueError(f"unknown case {name!r}; choose from {sorted(CASES)}") from None

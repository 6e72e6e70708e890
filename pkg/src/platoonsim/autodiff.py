"""Forward-mode automatic differentiation on dual numbers.

A :class:`Dual` carries a value and a tuple of partial derivatives with
respect to a fixed set of seed directions.  Arithmetic propagates the
derivative part exactly (no finite differencing), which is what the
backstepping and barrier control laws need for their partial-derivative
terms.  The one- and two-direction cases sit on the simulation hot path, so
the arithmetic special-cases those tuple widths.
"""

from __future__ import annotations

import math


class Dual:
    """Value plus gradient against a fixed set of seed directions."""

    __slots__ = ("value", "grad")

    def __init__(self, value, grad):
        self.value = value
        self.grad = grad if type(grad) is tuple else tuple(grad)

    def __repr__(self):
        return f"Dual({self.value!r}, {self.grad!r})"

    def __neg__(self):
        g = self.grad
        if len(g) == 2:
            return Dual(-self.value, (-g[0], -g[1]))
        return Dual(-self.value, tuple(-x for x in g))

    def __add__(self, other):
        if isinstance(other, Dual):
            a, b = self.grad, other.grad
            if len(a) == 2:
                return Dual(self.value + other.value, (a[0] + b[0], a[1] + b[1]))
            return Dual(self.value + other.value, tuple(x + y for x, y in zip(a, b)))
        return Dual(self.value + other, self.grad)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            a, b = self.grad, other.grad
            if len(a) == 2:
                return Dual(self.value - other.value, (a[0] - b[0], a[1] - b[1]))
            return Dual(self.value - other.value, tuple(x - y for x, y in zip(a, b)))
        return Dual(self.value - other, self.grad)

    def __rsub__(self, other):
        return Dual(other - self.value, (-self.grad[0], -self.grad[1])
                    if len(self.grad) == 2 else tuple(-x for x in self.grad))

    def __mul__(self, other):
        if isinstance(other, Dual):
            u, v = self.value, other.value
            a, b = self.grad, other.grad
            if len(a) == 2:
                return Dual(u * v, (a[0] * v + u * b[0], a[1] * v + u * b[1]))
            return Dual(u * v, tuple(x * v + u * y for x, y in zip(a, b)))
        g = self.grad
        if len(g) == 2:
            return Dual(self.value * other, (g[0] * other, g[1] * other))
        return Dual(self.value * other, tuple(x * other for x in g))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            inv = 1.0 / other.value
            val = self.value * inv
            a, b = self.grad, other.grad
            if len(a) == 2:
                return Dual(val, ((a[0] - val * b[0]) * inv, (a[1] - val * b[1]) * inv))
            return Dual(val, tuple((x - val * y) * inv for x, y in zip(a, b)))
        inv = 1.0 / other
        g = self.grad
        if len(g) == 2:
            return Dual(self.value * inv, (g[0] * inv, g[1] * inv))
        return Dual(self.value * inv, tuple(x * inv for x in g))

    def __rtruediv__(self, other):
        inv = 1.0 / self.value
        val = other * inv
        scale = -val * inv
        g = self.grad
        if len(g) == 2:
            return Dual(val, (scale * g[0], scale * g[1]))
        return Dual(val, tuple(scale * x for x in g))

    def __pow__(self, n):
        # integer/float powers of the value part only
        val = self.value ** n
        scale = n * self.value ** (n - 1)
        g = self.grad
        if len(g) == 2:
            return Dual(val, (scale * g[0], scale * g[1]))
        return Dual(val, tuple(scale * x for x in g))


def log(x):
    """Natural logarithm for floats and duals."""
    if isinstance(x, Dual):
        inv = 1.0 / x.value
        g = x.grad
        if len(g) == 2:
            return Dual(math.log(x.value), (inv * g[0], inv * g[1]))
        return Dual(math.log(x.value), tuple(inv * y for y in g))
    return math.log(x)


def seed_variables(values):
    """Lift ``values`` into duals with unit seeds (one direction per input)."""
    n = len(values)
    return tuple(Dual(v, tuple(1.0 if k == i else 0.0 for k in range(n)))
                 for i, v in enumerate(values))


def gradient(fn, inputs):
    """Value and full gradient of ``fn`` at ``inputs`` in one forward sweep."""
    out = fn(*seed_variables(tuple(inputs)))
    if isinstance(out, Dual):
        return out.value, out.grad
    return out, (0.0,) * len(inputs)


def dual_eval(fn, inputs, seed):
    """Value of ``fn`` at ``inputs`` and its directional derivative along ``seed``."""
    inputs = tuple(inputs)
    seed = tuple(seed)
    args = tuple(Dual(v, (s,)) for v, s in zip(inputs, seed))
    out = fn(*args)
    if isinstance(out, Dual):
        return out.value, out.grad[0]
    return out, 0.0

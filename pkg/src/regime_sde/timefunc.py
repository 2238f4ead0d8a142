"""Closed-form scalar functions of time with structural derivatives.

A :class:`TimeFunction` is an immutable expression tree over the free
variable ``t`` and, for regime families, the integer symbol ``n``. Trees are
built through the folding constructors (:func:`add`, :func:`mul`,
:func:`power`, ...) or the arithmetic operators, so that constant subtrees
collapse as soon as ``n`` is bound. That folding is what lets ``beta_n`` of a
multiplicative problem with constant ``sigma1`` come out as a plain constant
with an exact antiderivative.

JSON form: ``{"op": name, "args": [...]}`` with ops ``const, t, n, add, mul,
pow, exp, log, affine``. Bare numbers and the strings ``"t"``/``"n"`` are
accepted as shorthands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from numbers import Real

import numpy as np

from . import quadrature
from .errors import ProblemFileError


class TimeFunction:
    """Base node. Subclasses are frozen dataclasses."""

    # -- evaluation -------------------------------------------------------
    def __call__(self, t, n=None):
        return self.eval(t, n)

    def eval(self, t, n=None):
        """Evaluate at time(s) ``t``; arrays broadcast, scalars return float."""
        if isinstance(t, np.ndarray):
            with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
                out = self._eval(t, n)
            return np.broadcast_to(np.asarray(out, dtype=float), t.shape).copy()
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            return float(self._eval(float(t), n))

    def _eval(self, t, n):
        raise NotImplementedError

    # -- structure --------------------------------------------------------
    def children(self):
        return ()

    def depends_on(self, var):
        return any(c.depends_on(var) for c in self.children())

    @property
    def constant(self):
        """Folded constant value, or None when the node is not a bare constant."""
        return None

    def bind(self, n):
        """Substitute the regime index ``n`` and re-fold."""
        if not self.depends_on("n"):
            return self
        return self._bind(float(n))

    def _bind(self, n):
        raise NotImplementedError

    def deriv(self, var="t"):
        raise NotImplementedError

    # -- integration ------------------------------------------------------
    @cached_property
    def antiderivative(self):
        """Exact antiderivative in ``t`` or None ("quadrature required")."""
        if not self.depends_on("t"):
            return mul(self, T)
        return self._antiderivative()

    def _antiderivative(self):
        return None

    @property
    def needs_quadrature(self):
        return self.antiderivative is None

    def integral(self, a, b, n=None):
        """Integral over [a, b]; exact when an antiderivative exists."""
        f = self if n is None else self.bind(n)
        if a == b:
            return 0.0
        prim = f.antiderivative
        if prim is not None:
            value = prim.eval(b) - prim.eval(a)
            if math.isfinite(value):
                return value
        return quadrature.integrate(f.eval, a, b)

    # -- arithmetic sugar -------------------------------------------------
    def __add__(self, other):
        return add(self, as_function(other))

    def __radd__(self, other):
        return add(as_function(other), self)

    def __sub__(self, other):
        return add(self, mul(Const(-1.0), as_function(other)))

    def __rsub__(self, other):
        return add(as_function(other), mul(Const(-1.0), self))

    def __mul__(self, other):
        return mul(self, as_function(other))

    def __rmul__(self, other):
        return mul(as_function(other), self)

    def __truediv__(self, other):
        return mul(self, power(as_function(other), -1.0))

    def __rtruediv__(self, other):
        return mul(as_function(other), power(self, -1.0))

    def __neg__(self):
        return mul(Const(-1.0), self)

    def __pow__(self, p):
        return power(self, p)

    # -- serialisation ----------------------------------------------------
    def to_json(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Const(TimeFunction):
    value: float

    def _eval(self, t, n):
        return self.value

    @property
    def constant(self):
        return self.value

    def depends_on(self, var):
        return False

    def deriv(self, var="t"):
        return ZERO

    def to_json(self):
        return {"op": "const", "args": [self.value]}

    def __str__(self):
        return repr(self.value)


@dataclass(frozen=True)
class Var(TimeFunction):
    name: str

    def _eval(self, t, n):
        if self.name == "t":
            return t
        if n is None:
            raise ValueError("expression depends on the regime index n; pass n= or bind() it first")
        return float(n)

    def depends_on(self, var):
        return self.name == var

    def _bind(self, n):
        return Const(n) if self.name == "n" else self

    def deriv(self, var="t"):
        return ONE if self.name == var else ZERO

    def _antiderivative(self):
        return mul(Const(0.5), power(T, 2.0))

    def to_json(self):
        return {"op": self.name}

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Add(TimeFunction):
    terms: tuple

    def _eval(self, t, n):
        total = self.terms[0]._eval(t, n)
        for term in self.terms[1:]:
            total = total + term._eval(t, n)
        return total

    def children(self):
        return self.terms

    def _bind(self, n):
        return add(*(c.bind(n) for c in self.terms))

    def deriv(self, var="t"):
        return add(*(c.deriv(var) for c in self.terms))

    def _antiderivative(self):
        parts = [c.antiderivative for c in self.terms]
        if any(p is None for p in parts):
            return None
        return add(*parts)

    def to_json(self):
        return {"op": "add", "args": [c.to_json() for c in self.terms]}

    def __str__(self):
        return "(" + " + ".join(str(c) for c in self.terms) + ")"


@dataclass(frozen=True)
class Mul(TimeFunction):
    factors: tuple

    def _eval(self, t, n):
        total = self.factors[0]._eval(t, n)
        for factor in self.factors[1:]:
            total = total * factor._eval(t, n)
        return total

    def children(self):
        return self.factors

    def _bind(self, n):
        return mul(*(c.bind(n) for c in self.factors))

    def deriv(self, var="t"):
        terms = []
        for i, f in enumerate(self.factors):
            d = f.deriv(var)
            if d.constant == 0.0:
                continue
            terms.append(mul(*self.factors[:i], d, *self.factors[i + 1:]))
        return add(*terms)

    def _antiderivative(self):
        timed = [f for f in self.factors if f.depends_on("t")]
        if len(timed) != 1:
            return None
        inner = timed[0].antiderivative
        if inner is None:
            return None
        rest = [f for f in self.factors if not f.depends_on("t")]
        return mul(*rest, inner)

    def to_json(self):
        return {"op": "mul", "args": [c.to_json() for c in self.factors]}

    def __str__(self):
        return "*".join(str(c) for c in self.factors)


@dataclass(frozen=True)
class Pow(TimeFunction):
    base: TimeFunction
    exponent: float

    def _eval(self, t, n):
        b = self.base._eval(t, n)
        p = self.exponent
        if p == 2.0:
            return b * b
        if p == -1.0:
            return np.divide(1.0, b)
        if p == 0.5:
            return np.sqrt(b)
        return np.power(b, p)

    def children(self):
        return (self.base,)

    def _bind(self, n):
        return power(self.base.bind(n), self.exponent)

    def deriv(self, var="t"):
        p = self.exponent
        return mul(Const(p), power(self.base, p - 1.0), self.base.deriv(var))

    def _antiderivative(self):
        p = self.exponent
        if isinstance(self.base, Exp):
            return Exp(mul(Const(p), self.base.arg)).antiderivative
        lin = linear_coeffs(self.base)
        if lin is None or lin[0] == 0.0:
            return None
        a = lin[0]
        if p == -1.0:
            return mul(Const(1.0 / a), log(self.base))
        return mul(Const(1.0 / (a * (p + 1.0))), power(self.base, p + 1.0))

    def to_json(self):
        return {"op": "pow", "args": [self.base.to_json(), self.exponent]}

    def __str__(self):
        return f"{self.base}^{self.exponent!r}"


@dataclass(frozen=True)
class Exp(TimeFunction):
    arg: TimeFunction

    def _eval(self, t, n):
        return np.exp(self.arg._eval(t, n))

    def children(self):
        return (self.arg,)

    def _bind(self, n):
        return exp(self.arg.bind(n))

    def deriv(self, var="t"):
        return mul(self, self.arg.deriv(var))

    def _antiderivative(self):
        lin = linear_coeffs(self.arg)
        if lin is None or lin[0] == 0.0:
            return None
        return mul(Const(1.0 / lin[0]), self)

    def to_json(self):
        return {"op": "exp", "args": [self.arg.to_json()]}

    def __str__(self):
        return f"exp({self.arg})"


@dataclass(frozen=True)
class Log(TimeFunction):
    arg: TimeFunction

    def _eval(self, t, n):
        return np.log(self.arg._eval(t, n))

    def children(self):
        return (self.arg,)

    def _bind(self, n):
        return log(self.arg.bind(n))

    def deriv(self, var="t"):
        return mul(self.arg.deriv(var), power(self.arg, -1.0))

    def _antiderivative(self):
        lin = linear_coeffs(self.arg)
        if lin is None or lin[0] == 0.0:
            return None
        u = self.arg
        return mul(Const(1.0 / lin[0]), add(mul(u, self), mul(Const(-1.0), u)))

    def to_json(self):
        return {"op": "log", "args": [self.arg.to_json()]}

    def __str__(self):
        return f"log({self.arg})"


@dataclass(frozen=True)
class Affine(TimeFunction):
    """``inner`` evaluated at ``scale * t + shift``."""

    inner: TimeFunction
    scale: float
    shift: float

    def _eval(self, t, n):
        return self.inner._eval(self.scale * t + self.shift, n)

    def children(self):
        return (self.inner,)

    def _bind(self, n):
        return affine(self.inner.bind(n), self.scale, self.shift)

    def deriv(self, var="t"):
        d = affine(self.inner.deriv(var), self.scale, self.shift)
        return mul(Const(self.scale), d) if var == "t" else d

    def _antiderivative(self):
        prim = self.inner.antiderivative
        if prim is None or self.scale == 0.0:
            return None
        return mul(Const(1.0 / self.scale), affine(prim, self.scale, self.shift))

    def to_json(self):
        return {"op": "affine", "args": [self.inner.to_json(), self.scale, self.shift]}

    def __str__(self):
        return f"[{self.inner}]({self.scale!r}*t + {self.shift!r})"


ZERO = Const(0.0)
ONE = Const(1.0)
T = Var("t")
N = Var("n")


# ---------------------------------------------------------------------------
# folding constructors

def as_function(x):
    if isinstance(x, TimeFunction):
        return x
    if isinstance(x, Real):
        return Const(float(x))
    raise TypeError(f"cannot interpret {x!r} as a TimeFunction")


def const(value):
    return Const(float(value))


def add(*terms):
    flat = []
    c = 0.0
    for term in map(as_function, terms):
        parts = term.terms if isinstance(term, Add) else (term,)
        for p in parts:
            if p.constant is not None:
                c += p.constant
            else:
                flat.append(p)
    if c != 0.0 or not flat:
        flat.append(Const(c))
    if len(flat) == 1:
        return flat[0]
    return Add(tuple(flat))


def mul(*factors):
    flat = []
    c = 1.0
    for factor in map(as_function, factors):
        parts = factor.factors if isinstance(factor, Mul) else (factor,)
        for p in parts:
            if p.constant is not None:
                c *= p.constant
            else:
                flat.append(p)
    if c == 0.0:
        return ZERO
    if not flat:
        return Const(c)
    if c != 1.0:
        flat.insert(0, Const(c))
    if len(flat) == 1:
        return flat[0]
    return Mul(tuple(flat))


def power(base, p):
    base = as_function(base)
    p = float(p)
    if p == 0.0:
        return ONE
    if p == 1.0:
        return base
    if base.constant is not None:
        with np.errstate(all="ignore"):
            return Const(float(np.power(base.constant, p)))
    return Pow(base, p)


def exp(arg):
    arg = as_function(arg)
    if arg.constant is not None:
        return Const(math.exp(arg.constant))
    return Exp(arg)


def log(arg):
    arg = as_function(arg)
    if arg.constant is not None and arg.constant > 0.0:
        return Const(math.log(arg.constant))
    return Log(arg)


def affine(inner, scale, shift):
    inner = as_function(inner)
    scale = float(scale)
    shift = float(shift)
    if not inner.depends_on("t"):
        return inner
    if scale == 1.0 and shift == 0.0:
        return inner
    if inner == T:
        return add(mul(Const(scale), T), Const(shift))
    return Affine(inner, scale, shift)


def linear_coeffs(expr):
    """Return (a, c) if ``expr`` is exactly a*t + c with numeric a, c, else None."""
    if expr.constant is not None:
        return 0.0, expr.constant
    if expr == T:
        return 1.0, 0.0
    if isinstance(expr, Add):
        a = c = 0.0
        for term in expr.terms:
            lin = linear_coeffs(term)
            if lin is None:
                return None
            a += lin[0]
            c += lin[1]
        return a, c
    if isinstance(expr, Mul):
        scale = 1.0
        lin = None
        for f in expr.factors:
            if f.constant is not None:
                scale *= f.constant
            elif lin is None:
                lin = linear_coeffs(f)
                if lin is None:
                    return None
            else:
                return None
        if lin is None:
            return 0.0, scale
        return scale * lin[0], scale * lin[1]
    if isinstance(expr, Affine):
        lin = linear_coeffs(expr.inner)
        if lin is None:
            return None
        return lin[0] * expr.scale, lin[0] * expr.shift + lin[1]
    return None


# ---------------------------------------------------------------------------
# JSON

_ARITY = {"exp": 1, "log": 1, "pow": 2, "affine": 3, "const": 1}


def from_json(node):
    """Parse the ``{"op": ..., "args": [...]}`` form into a TimeFunction."""
    if isinstance(node, bool):
        raise ProblemFileError(f"booleans are not expressions: {node!r}")
    if isinstance(node, Real):
        return Const(float(node))
    if isinstance(node, str):
        node = {"op": node}
    if not isinstance(node, dict) or "op" not in node:
        raise ProblemFileError(f"expression must be a number, 't', 'n' or an object with 'op': {node!r}")
    op = node["op"]
    args = node.get("args", [])
    if not isinstance(args, list):
        raise ProblemFileError(f"'args' of {op!r} must be a list")
    if op in _ARITY and len(args) != _ARITY[op]:
        raise ProblemFileError(f"op {op!r} takes {_ARITY[op]} argument(s), got {len(args)}")
    try:
        if op == "const":
            return Const(float(args[0]))
        if op == "t":
            return T
        if op == "n":
            return N
        if op == "add":
            if not args:
                raise ProblemFileError("'add' needs at least one argument")
            return add(*(from_json(a) for a in args))
        if op == "mul":
            if not args:
                raise ProblemFileError("'mul' needs at least one argument")
            return mul(*(from_json(a) for a in args))
        if op == "pow":
            return power(from_json(args[0]), _number(args[1], "pow exponent"))
        if op == "exp":
            return exp(from_json(args[0]))
        if op == "log":
            return log(from_json(args[0]))
        if op == "affine":
            return affine(from_json(args[0]), _number(args[1], "affine scale"), _number(args[2], "affine shift"))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ProblemFileError):
            raise
        raise ProblemFileError(f"bad arguments for {op!r}: {exc}") from exc
    raise ProblemFileError(f"unknown op {op!r}")


def _number(x, what):
    if isinstance(x, bool) or not isinstance(x, Real):
        raise ProblemFileError(f"{what} must be a number, got {x!r}")
    return float(x)

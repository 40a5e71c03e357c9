"""Sparse multivariate polynomials with complex coefficients, and polynomial maps.

A :class:`MultiPoly` is an immutable mapping from exponent tuples to complex
coefficients, always stored in canonical graded-lexicographic order (highest
total degree first, ties broken lexicographically, larger exponent of the
earlier variable first). Two polynomials that are equal after pruning have
identical JSON.

A :class:`PolyMap` is a tuple of MultiPoly components sharing one variable
count. Batched evaluation goes through :mod:`holofix.kernels`.
"""

from __future__ import annotations

import json
import math
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from ._config import TOLERANCES
from .errors import ArityError, ResourceError


def _canonical_key(exp):
    return (-sum(exp), tuple(-e for e in exp))


def _check_finite(c):
    if not (math.isfinite(c.real) and math.isfinite(c.imag)):
        raise ValueError(f"non-finite coefficient {c!r}")


class MultiPoly:
    """Sparse polynomial in ``nvars`` complex variables.

    Coefficients below ``prune_rel * max|c|`` are dropped on construction,
    which also removes exact zeros.
    """

    def __init__(self, nvars: int, terms: Mapping[tuple, complex] | None = None,
                 prune_rel: float | None = None):
        if nvars < 1:
            raise ArityError("nvars must be positive")
        self.nvars = int(nvars)
        prune_rel = TOLERANCES["prune_rel"] if prune_rel is None else prune_rel
        clean = {}
        for exp, c in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != self.nvars:
                raise ArityError(f"exponent {exp} has length {len(exp)}, expected {self.nvars}")
            if any(e < 0 for e in exp):
                raise ValueError(f"negative exponent in {exp}")
            c = complex(c)
            _check_finite(c)
            if c != 0:
                clean[exp] = clean.get(exp, 0) + c
        if clean:
            cutoff = prune_rel * max(abs(c) for c in clean.values())
            clean = {e: c for e, c in clean.items() if c != 0 and abs(c) >= cutoff}
        self._terms = {e: clean[e] for e in sorted(clean, key=_canonical_key)}

    # construction helpers

    @classmethod
    def constant(cls, nvars: int, c: complex) -> "MultiPoly":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, nvars: int, i: int, c: complex = 1.0) -> "MultiPoly":
        if not 0 <= i < nvars:
            raise ArityError(f"variable index {i} out of range for {nvars} variables")
        exp = [0] * nvars
        exp[i] = 1
        return cls(nvars, {tuple(exp): c})

    @classmethod
    def from_univariate(cls, coeffs: Sequence[complex], nvars: int = 1, var: int = 0) -> "MultiPoly":
        """Polynomial sum(coeffs[k] * z_var**k) in ``nvars`` variables."""
        terms = {}
        for k, c in enumerate(coeffs):
            exp = [0] * nvars
            exp[var] = k
            terms[tuple(exp)] = c
        return cls(nvars, terms)

    @classmethod
    def from_roots(cls, roots: Iterable[complex], nvars: int = 1, var: int = 0) -> "MultiPoly":
        """Monic product of (z_var - r) over ``roots``."""
        p = cls.constant(nvars, 1.0)
        x = cls.variable(nvars, var)
        for r in roots:
            p = p * (x - complex(r))
        return p

    # basic protocol

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms.items())

    def coefficient(self, exp) -> complex:
        return self._terms.get(tuple(exp), 0j)

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self._terms), default=0)

    def degree_in(self, var: int) -> int:
        return max((e[var] for e in self._terms), default=0)

    def __eq__(self, other):
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.nvars == other.nvars and list(self._terms.items()) == list(other._terms.items())

    def __hash__(self):
        return hash((self.nvars, tuple(self._terms.items())))

    def almost_equal(self, other: "MultiPoly", tol: float = 1e-12) -> bool:
        """Coefficientwise equality up to ``tol`` relative to the larger coefficient scale."""
        if self.nvars != other.nvars:
            return False
        keys = set(self._terms) | set(other._terms)
        scale = max([abs(c) for c in self._terms.values()] + [abs(c) for c in other._terms.values()] + [1.0])
        return all(abs(self.coefficient(k) - other.coefficient(k)) <= tol * scale for k in keys)

    def __repr__(self):
        if not self._terms:
            return f"MultiPoly({self.nvars}, 0)"
        parts = []
        for exp, c in self._terms.items():
            mono = "*".join(f"z{i + 1}" + (f"^{e}" if e > 1 else "") for i, e in enumerate(exp) if e)
            parts.append(f"({c:.6g})" + (f"*{mono}" if mono else ""))
        return f"MultiPoly({self.nvars}, " + " + ".join(parts) + ")"

    # arithmetic

    def _coerce(self, other):
        if isinstance(other, MultiPoly):
            if other.nvars != self.nvars:
                raise ArityError(f"nvars mismatch: {self.nvars} vs {other.nvars}")
            return other
        return MultiPoly.constant(self.nvars, complex(other))

    def __add__(self, other):
        other = self._coerce(other)
        terms = dict(self._terms)
        for e, c in other._terms.items():
            terms[e] = terms.get(e, 0) + c
        return MultiPoly(self.nvars, terms)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly(self.nvars, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, MultiPoly):
            c = complex(other)
            return MultiPoly(self.nvars, {e: c * v for e, v in self._terms.items()})
        other = self._coerce(other)
        cap = TOLERANCES["compose_term_cap"]
        if len(self._terms) * len(other._terms) > 100 * cap:
            raise ResourceError(f"product of {len(self)} x {len(other)} terms exceeds cap")
        terms: dict = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                terms[e] = terms.get(e, 0) + c1 * c2
        if len(terms) > cap:
            raise ResourceError(f"product has {len(terms)} terms, cap is {cap}")
        return MultiPoly(self.nvars, terms)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a non-negative integer")
        result = MultiPoly.constant(self.nvars, 1.0)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def diff(self, var: int) -> "MultiPoly":
        """Partial derivative with respect to variable ``var`` (0-based)."""
        if not 0 <= var < self.nvars:
            raise ArityError(f"variable index {var} out of range")
        terms = {}
        for e, c in self._terms.items():
            if e[var]:
                ne = list(e)
                ne[var] -= 1
                terms[tuple(ne)] = c * e[var]
        return MultiPoly(self.nvars, terms)

    def substitute(self, polys: Sequence["MultiPoly"], term_cap: int | None = None) -> "MultiPoly":
        """Compose: replace variable i by ``polys[i]`` (all in a common variable count)."""
        if len(polys) != self.nvars:
            raise ArityError(f"need {self.nvars} substitutions, got {len(polys)}")
        if not polys:
            raise ArityError("empty substitution")
        m = polys[0].nvars
        if any(q.nvars != m for q in polys):
            raise ArityError("substituted polynomials disagree on nvars")
        cap = TOLERANCES["compose_term_cap"] if term_cap is None else term_cap
        powers = [{0: MultiPoly.constant(m, 1.0)} for _ in polys]

        def power(i, e):
            cache = powers[i]
            if e not in cache:
                k = max(k for k in cache if k < e)
                acc = cache[k]
                for j in range(k + 1, e + 1):
                    acc = acc * polys[i]
                    cache[j] = acc
            return cache[e]

        terms: dict = {}
        for exp, c in self._terms.items():
            prod = MultiPoly.constant(m, c)
            for i, e in enumerate(exp):
                if e:
                    prod = prod * power(i, e)
            for e2, c2 in prod._terms.items():
                terms[e2] = terms.get(e2, 0) + c2
            if len(terms) > cap:
                raise ResourceError(f"composition exceeds {cap} terms")
        return MultiPoly(m, terms)

    # evaluation

    @cached_property
    def _arrays(self):
        if self._terms:
            exps = np.array(list(self._terms.keys()), dtype=np.int64)
        else:
            exps = np.zeros((0, self.nvars), dtype=np.int64)
        coeffs = np.array(list(self._terms.values()), dtype=np.complex128)
        return exps, coeffs, np.zeros(len(coeffs), dtype=np.int64)

    def eval_batch(self, Z) -> np.ndarray:
        Z = np.ascontiguousarray(np.atleast_2d(np.asarray(Z, dtype=np.complex128)))
        if Z.shape[1] != self.nvars:
            raise ArityError(f"points have {Z.shape[1]} coordinates, polynomial has {self.nvars} variables")
        exps, coeffs, comp = self._arrays
        return kernels.poly_eval_batch(exps, coeffs, comp, 1, Z)[:, 0]

    def eval(self, z) -> complex:
        z = np.atleast_1d(np.asarray(z, dtype=np.complex128))
        if z.shape != (self.nvars,):
            raise ArityError(f"point has {z.size} coordinates, polynomial has {self.nvars} variables")
        return complex(self.eval_batch(z[None, :])[0])

    __call__ = eval

    def univariate_coeffs(self, var: int = 0) -> np.ndarray:
        """Ascending coefficients when the polynomial only involves ``var``."""
        d = self.degree_in(var)
        out = np.zeros(d + 1, dtype=np.complex128)
        for e, c in self._terms.items():
            if any(x for i, x in enumerate(e) if i != var):
                raise ArityError("polynomial depends on more than one variable")
            out[e[var]] = c
        return out

    # serialization

    def to_dict(self) -> dict:
        return {
            "nvars": self.nvars,
            "terms": [{"exp": list(e), "re": c.real, "im": c.imag} for e, c in self._terms.items()],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "MultiPoly":
        return cls(int(d["nvars"]), {tuple(t["exp"]): complex(t["re"], t["im"]) for t in d["terms"]})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, s: str) -> "MultiPoly":
        return cls.from_dict(json.loads(s))


class PolyMap:
    """Polynomial map from C^dim_in to C^dim_out."""

    def __init__(self, components: Sequence[MultiPoly]):
        comps = tuple(components)
        if not comps:
            raise ArityError("a map needs at least one component")
        n = comps[0].nvars
        if any(c.nvars != n for c in comps):
            raise ArityError("components disagree on the number of variables")
        self.components = comps
        self.dim_in = n
        self.dim_out = len(comps)

    @classmethod
    def identity(cls, n: int) -> "PolyMap":
        return cls([MultiPoly.variable(n, i) for i in range(n)])

    @classmethod
    def linear(cls, A, b=None) -> "PolyMap":
        """z -> A z + b."""
        A = np.atleast_2d(np.asarray(A, dtype=np.complex128))
        m, n = A.shape
        b = np.zeros(m) if b is None else np.asarray(b, dtype=np.complex128)
        comps = []
        for i in range(m):
            terms = {(0,) * n: b[i]}
            for j in range(n):
                exp = [0] * n
                exp[j] = 1
                terms[tuple(exp)] = A[i, j]
            comps.append(MultiPoly(n, terms))
        return cls(comps)

    @property
    def dim(self) -> int:
        if self.dim_in != self.dim_out:
            raise ArityError("map is not square")
        return self.dim_in

    @property
    def degree(self) -> int:
        return max(c.degree for c in self.components)

    @property
    def n_terms(self) -> int:
        return sum(len(c) for c in self.components)

    def __eq__(self, other):
        if not isinstance(other, PolyMap):
            return NotImplemented
        return self.components == other.components

    def __hash__(self):
        return hash(self.components)

    def almost_equal(self, other: "PolyMap", tol: float = 1e-12) -> bool:
        return (self.dim_in == other.dim_in and self.dim_out == other.dim_out
                and all(a.almost_equal(b, tol) for a, b in zip(self.components, other.components)))

    def __repr__(self):
        return f"PolyMap(dim_in={self.dim_in}, dim_out={self.dim_out}, degree={self.degree}, terms={self.n_terms})"

    def compose(self, inner: "PolyMap") -> "PolyMap":
        """Symbolic composition self o inner."""
        if self.dim_in != inner.dim_out:
            raise ArityError(f"cannot compose: outer takes {self.dim_in} inputs, inner gives {inner.dim_out}")
        return PolyMap([c.substitute(inner.components) for c in self.components])

    def __matmul__(self, inner):
        return self.compose(inner)

    @staticmethod
    def _stack(polys):
        exps, coeffs, comp = [], [], []
        for k, p in enumerate(polys):
            e, c, _ = p._arrays
            exps.append(e)
            coeffs.append(c)
            comp.append(np.full(len(c), k, dtype=np.int64))
        return (np.ascontiguousarray(np.concatenate(exps)), np.concatenate(coeffs),
                np.concatenate(comp), len(polys))

    @cached_property
    def _stacked(self):
        return self._stack(self.components)

    @cached_property
    def _jac_polys(self):
        return [c.diff(j) for c in self.components for j in range(self.dim_in)]

    @cached_property
    def _jac_stacked(self):
        return self._stack(self._jac_polys)

    def _points(self, Z):
        Z = np.ascontiguousarray(np.atleast_2d(np.asarray(Z, dtype=np.complex128)))
        if Z.shape[1] != self.dim_in:
            raise ArityError(f"points have {Z.shape[1]} coordinates, map takes {self.dim_in}")
        return Z

    def eval_batch(self, Z) -> np.ndarray:
        exps, coeffs, comp, k = self._stacked
        return kernels.poly_eval_batch(exps, coeffs, comp, k, self._points(Z))

    def jacobian_batch(self, Z) -> np.ndarray:
        Z = self._points(Z)
        exps, coeffs, comp, k = self._jac_stacked
        return kernels.poly_eval_batch(exps, coeffs, comp, k, Z).reshape(Z.shape[0], self.dim_out, self.dim_in)

    def eval(self, z) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=np.complex128))
        if z.shape != (self.dim_in,):
            raise ArityError(f"point has {z.size} coordinates, map takes {self.dim_in}")
        return self.eval_batch(z[None, :])[0]

    __call__ = eval

    def jacobian(self, z) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=np.complex128))
        if z.shape != (self.dim_in,):
            raise ArityError(f"point has {z.size} coordinates, map takes {self.dim_in}")
        return self.jacobian_batch(z[None, :])[0]

    def to_dict(self) -> dict:
        return {"dim_in": self.dim_in, "dim_out": self.dim_out,
                "components": [c.to_dict() for c in self.components]}

    @classmethod
    def from_dict(cls, d: Mapping) -> "PolyMap":
        m = cls([MultiPoly.from_dict(c) for c in d["components"]])
        if m.dim_out != int(d.get("dim_out", m.dim_out)) or m.dim_in != int(d.get("dim_in", m.dim_in)):
            raise ArityError("declared dimensions disagree with components")
        return m

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, s: str) -> "PolyMap":
        return cls.from_dict(json.loads(s))


def compose(f: PolyMap, g: PolyMap) -> PolyMap:
    """f o g, symbolically."""
    return f.compose(g)


def jacobian(f: PolyMap, z) -> np.ndarray:
    return f.jacobian(z)


def eval_map(f, z):
    """Evaluate a MultiPoly or PolyMap at a single point."""
    return f.eval(z)

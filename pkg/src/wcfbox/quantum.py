"""Small pure-state simulator on named registers.

States are kept unnormalised: the squared norm of the amplitude tensor is
the probability of the branch that produced it.  With Fraction-valued
(object dtype) amplitudes everything stays exact.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import KernelError

FLOAT_TOL = 1e-12


def as_matrix(u) -> np.ndarray:
    a = np.array(u, dtype=object)
    if all(isinstance(x, (Fraction, int)) for x in a.flat):
        return np.vectorize(Fraction, otypes=[object])(a)
    return np.array(u, dtype=complex)


def is_exact(a: np.ndarray) -> bool:
    return a.dtype == object


def check_unitary(u: np.ndarray) -> None:
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise KernelError(f"operator must be square, got {u.shape}")
    if is_exact(u):
        prod = u.T.dot(u)  # real rational entries only
        ident = np.vectorize(Fraction, otypes=[object])(np.eye(u.shape[0], dtype=int))
        if not (prod == ident).all():
            raise KernelError("rational operator is not orthogonal")
    else:
        prod = u.conj().T @ u
        if not np.allclose(prod, np.eye(u.shape[0]), atol=1e-12):
            raise KernelError("operator is not unitary")


def fraction_sqrt(x: Fraction) -> Fraction | float:
    """Exact square root when x is a square of a rational, else float."""
    x = Fraction(x)
    n, d = x.numerator, x.denominator
    rn, rd = int(round(n ** 0.5)), int(round(d ** 0.5))
    for a in (rn - 1, rn, rn + 1):
        for b in (rd - 1, rd, rd + 1):
            if a >= 0 and b > 0 and a * a == n and b * b == d:
                return Fraction(a, b)
    return float(x) ** 0.5


class QState:
    def __init__(self, names: Sequence[str] = (), dims: Sequence[int] = (), amp=None, exact=True):
        self.names = tuple(names)
        self.dims = tuple(dims)
        if amp is None:
            amp = np.array(Fraction(1), dtype=object) if exact else np.array(1.0 + 0j)
        self.amp = amp

    @property
    def exact(self) -> bool:
        return is_exact(self.amp)

    def _promote(self, other_exact: bool) -> "QState":
        if self.exact and not other_exact:
            return QState(self.names, self.dims, self.amp.astype(complex))
        return self

    def norm2(self):
        if self.exact:
            return sum((x * x for x in self.amp.flat), Fraction(0))
        return float(np.sum(np.abs(self.amp) ** 2))

    def add(self, name: str, dim: int, value: int = 0) -> "QState":
        if name in self.names:
            raise KernelError(f"register {name!r} already exists")
        if self.exact:
            e = np.array([Fraction(int(i == value)) for i in range(dim)], dtype=object)
        else:
            e = np.zeros(dim, dtype=complex)
            e[value] = 1
        return QState(self.names + (name,), self.dims + (dim,), np.multiply.outer(self.amp, e))

    def rename(self, old: str, new: str) -> "QState":
        if new in self.names:
            raise KernelError(f"register {new!r} already exists")
        names = tuple(new if n == old else n for n in self.names)
        return QState(names, self.dims, self.amp)

    def apply(self, u: np.ndarray, regs: Sequence[str]) -> "QState":
        st = self._promote(is_exact(u))
        if not is_exact(u) or not st.exact:
            u = u.astype(complex)
        axes = [st.names.index(r) for r in regs]
        dims = [st.dims[a] for a in axes]
        size = int(np.prod(dims)) if dims else 1
        if u.shape != (size, size):
            raise KernelError(f"operator shape {u.shape} does not fit registers {list(regs)} {dims}")
        ut = u.reshape(dims + dims)
        k = len(axes)
        out = np.tensordot(ut, st.amp, axes=(list(range(k, 2 * k)), axes))
        out = np.moveaxis(out, list(range(k)), axes)
        return QState(st.names, st.dims, out)

    def measure(self, name: str) -> list[tuple[int, "QState"]]:
        """Projective computational-basis measurement; register is discarded."""
        ax = self.names.index(name)
        names = self.names[:ax] + self.names[ax + 1:]
        dims = self.dims[:ax] + self.dims[ax + 1:]
        out = []
        for v in range(self.dims[ax]):
            part = QState(names, dims, np.asarray(np.take(self.amp, v, axis=ax), dtype=self.amp.dtype))
            w = part.norm2()
            if w == 0 or (not part.exact and w < FLOAT_TOL ** 2):
                continue
            out.append((v, part))
        return out


def permutation_unitary(dims: Sequence[int], fn, exact=True) -> np.ndarray:
    """Unitary |x⟩ ↦ |fn(x)⟩ for a bijection fn on basis tuples."""
    import itertools
    basis = list(itertools.product(*[range(d) for d in dims]))
    index = {b: i for i, b in enumerate(basis)}
    n = len(basis)
    if exact:
        u = np.full((n, n), Fraction(0), dtype=object)
        one = Fraction(1)
    else:
        u = np.zeros((n, n), dtype=complex)
        one = 1
    seen = set()
    for b in basis:
        target = tuple(fn(b))
        if target in seen:
            raise KernelError("permutation map is not a bijection")
        seen.add(target)
        u[index[target], index[b]] = one
    return u

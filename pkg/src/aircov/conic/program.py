"""Real-valued conic program container.

A program is a linear objective over n_vars real scalars, equality rows,
second-order-cone blocks and PSD blocks.  Cone blocks hold sparse affine
expressions: each block owns its entry list plus a constant part, and the
backend stacks them into standard form at solve time.

Conventions fixed here and relied on everywhere else:

* complex n x m variables occupy 2nm slots: Re in row-major order, then Im;
* Hermitian n x n variables occupy n^2 slots: the n real diagonal entries
  first, then (Re, Im) pairs of the strict upper triangle in row-major order;
* a PSD entry (p, q, col, w) with p <= q means the symmetric matrix gets
  w * x[col] added at positions (p, q) AND (q, p); diagonal entries add once.
"""

import json
from dataclasses import dataclass, field

import numpy as np

_KINDS = ("real", "complex", "hermitian")


@dataclass(frozen=True)
class VarInfo:
    name: str
    offset: int
    shape: tuple
    kind: str

    @property
    def size(self):
        n = 1
        for d in self.shape:
            n *= d
        if self.kind == "complex":
            return 2 * n
        if self.kind == "hermitian":
            return self.shape[0] ** 2
        return n


@dataclass
class LinearObjective:
    entries: dict = field(default_factory=dict)
    constant: float = 0.0

    def add(self, col, w):
        if w != 0.0:
            self.entries[col] = self.entries.get(col, 0.0) + float(w)


@dataclass
class EqConstraint:
    entries: list
    rhs: float


class SocBlock:
    """Affine expression constrained to ||u[1:]|| <= u[0]."""

    def __init__(self, dim):
        if dim < 1:
            raise ValueError("soc dimension must be >= 1")
        self.dim = dim
        self.entries = []
        self.const = np.zeros(dim)

    def add(self, row, col, w):
        if not 0 <= row < self.dim:
            raise ValueError(f"soc row {row} out of range")
        if abs(w) > 0.0:
            self.entries.append((row, col, float(w)))

    def set_const(self, row, val):
        self.const[row] = val


class PsdBlock:
    """Affine symmetric-matrix expression constrained PSD."""

    def __init__(self, n):
        if n < 1:
            raise ValueError("psd side must be >= 1")
        self.n = n
        self.entries = []
        self.const = np.zeros((n, n))

    def add(self, p, q, col, w):
        if p > q:
            p, q = q, p
        if not 0 <= q < self.n:
            raise ValueError(f"psd index ({p},{q}) out of range")
        if abs(w) > 1e-15:
            self.entries.append((p, q, col, float(w)))

    def add_const(self, p, q, val):
        if p > q:
            p, q = q, p
        self.const[p, q] += val
        if p != q:
            self.const[q, p] += val


class ConicProgram:
    def __init__(self):
        self.n_vars = 0
        self.var_index = {}
        self.objective = LinearObjective()
        self.eq_constraints = []
        self.soc_constraints = []
        self.psd_constraints = []
        # metadata for variables pinned outside the program (baselines fix V)
        self.fixed = {}
        self._dirty = True

    # ------------------------------------------------------------ variables

    def add_var(self, name, shape, kind="real"):
        if name in self.var_index:
            raise ValueError(f"duplicate variable {name!r}")
        if kind not in _KINDS:
            raise ValueError(f"unknown kind {kind!r}")
        shape = tuple(int(d) for d in shape)
        if kind == "hermitian" and (len(shape) != 2 or shape[0] != shape[1]):
            raise ValueError("hermitian variables must be square")
        info = VarInfo(name, self.n_vars, shape, kind)
        self.var_index[name] = info
        self.n_vars += info.size
        self._dirty = True
        return info

    # ---------------------------------------------------------- constraints

    def add_eq(self, entries, rhs):
        self.eq_constraints.append(
            EqConstraint([(c, float(w)) for c, w in entries if w != 0.0],
                         float(rhs)))
        self._dirty = True
        return self.eq_constraints[-1]

    def add_soc(self, dim):
        blk = SocBlock(dim)
        self.soc_constraints.append(blk)
        self._dirty = True
        return blk

    def add_psd(self, n):
        blk = PsdBlock(n)
        self.psd_constraints.append(blk)
        self._dirty = True
        return blk

    def set_objective(self, entries, constant=0.0):
        self.objective = LinearObjective(
            {int(c): float(w) for c, w in dict(entries).items() if w != 0.0},
            float(constant))
        # objective swaps do not invalidate compiled cone structure

    # ------------------------------------------------------------- checking

    def validate(self):
        def check_col(col):
            if not 0 <= col < self.n_vars:
                raise ValueError(f"column {col} out of range")

        for col in self.objective.entries:
            check_col(col)
        for eq in self.eq_constraints:
            for col, _ in eq.entries:
                check_col(col)
        for blk in self.soc_constraints:
            for row, col, _ in blk.entries:
                check_col(col)
                if not 0 <= row < blk.dim:
                    raise ValueError("soc row out of range")
        for blk in self.psd_constraints:
            if not np.allclose(blk.const, blk.const.T):
                raise ValueError("psd constant not symmetric")
            for p, q, col, _ in blk.entries:
                check_col(col)
                if not 0 <= p <= q < blk.n:
                    raise ValueError("psd entry out of range")
        return self

    # ----------------------------------------------------------- debug dump

    def to_json_dict(self):
        return {
            "n_vars": self.n_vars,
            "objective": {
                "entries": sorted([c, w] for c, w in self.objective.entries.items()),
                "constant": self.objective.constant,
            },
            "equalities": [
                {"entries": [[c, w] for c, w in eq.entries], "rhs": eq.rhs}
                for eq in self.eq_constraints
            ],
            "socs": [
                {"dim": b.dim, "entries": [[r, c, w] for r, c, w in b.entries],
                 "const": b.const.tolist()}
                for b in self.soc_constraints
            ],
            "psds": [
                {"n": b.n, "entries": [[p, q, c, w] for p, q, c, w in b.entries],
                 "const": b.const.tolist()}
                for b in self.psd_constraints
            ],
            "variables": {
                name: {"offset": v.offset, "shape": list(v.shape), "kind": v.kind}
                for name, v in self.var_index.items()
            },
        }

    def dump_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=1, sort_keys=True)


# ------------------------------------------------------- slot pack/unpack
#
# These realize the slot conventions in the module docstring; the subproblem
# builder and the iterate extraction must agree exactly, so they live here.

def pack_complex(m):
    m = np.asarray(m, dtype=complex)
    return np.concatenate([m.real.ravel(), m.imag.ravel()])


def unpack_complex(vec, shape):
    n = int(np.prod(shape))
    vec = np.asarray(vec, dtype=float)
    if vec.size != 2 * n:
        raise ValueError("slot count mismatch for complex variable")
    return vec[:n].reshape(shape) + 1j * vec[n:].reshape(shape)


def hermitian_slot_order(n):
    """Pairs (i, j) in slot order: diagonal first, then strict upper."""
    order = [(i, i) for i in range(n)]
    order.extend((i, j) for i in range(n) for j in range(i + 1, n))
    return order


def pack_hermitian(m):
    m = np.asarray(m, dtype=complex)
    n = m.shape[0]
    out = np.empty(n * n)
    out[:n] = m.diagonal().real
    k = n
    for i in range(n):
        for j in range(i + 1, n):
            out[k] = m[i, j].real
            out[k + 1] = m[i, j].imag
            k += 2
    return out


def unpack_hermitian(vec, n):
    vec = np.asarray(vec, dtype=float)
    if vec.size != n * n:
        raise ValueError("slot count mismatch for hermitian variable")
    m = np.zeros((n, n), dtype=complex)
    m[np.diag_indices(n)] = vec[:n]
    k = n
    for i in range(n):
        for j in range(i + 1, n):
            m[i, j] = vec[k] + 1j * vec[k + 1]
            m[j, i] = vec[k] - 1j * vec[k + 1]
            k += 2
    return m

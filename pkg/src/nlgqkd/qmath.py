"""Small dense complex linear algebra for few-qubit strategies.

Everything here works on plain ``numpy`` arrays of shape ``(d, d)`` with
``d`` at most 64. Observables with eigenvalues +1/-1 are split into
projectors with the closed form ``(I +/- O) / 2`` so no eigensolver is
needed on the hot path.
"""

from dataclasses import dataclass
from functools import reduce

import numpy as np

#: Tolerance for structural checks (PSD, involutions, completeness).
TOL_STRUCT = 1e-10
#: Tolerance for algebraic identities (hermiticity, traces).
TOL_ALGEBRA = 1e-12

MAX_DIM = 64

_PAULI = {
    "I": np.array([[1, 0], [0, 1]], dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class InvalidObservableError(ValueError):
    """Raised when an operator is not a +1/-1 valued Hermitian involution."""


class InvalidStateError(ValueError):
    """Raised when a matrix is not a valid density operator."""


def as_cmatrix(m):
    """Return ``m`` as a 2-d complex array, checking it is at most MAX_DIM wide."""
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {arr.shape}")
    if max(arr.shape) > MAX_DIM:
        raise ValueError(f"dimension {max(arr.shape)} exceeds {MAX_DIM}")
    return arr


def kron(*ops):
    """Kronecker product of one or more matrices, left to right."""
    if not ops:
        raise ValueError("kron needs at least one operand")
    return reduce(np.kron, (as_cmatrix(o) for o in ops))


def pauli(name):
    """The 2x2 Pauli matrix ``I``, ``X``, ``Y`` or ``Z``.

    >>> pauli("Z").real.astype(int).tolist()
    [[1, 0], [0, -1]]
    """
    try:
        return _PAULI[name.upper()].copy()
    except (KeyError, AttributeError):
        raise ValueError(f"unknown Pauli name {name!r}; use one of I, X, Y, Z") from None


def pauli_string(word):
    """Tensor product of Paulis spelled by ``word``, e.g. ``"XZ"``."""
    return kron(*(pauli(c) for c in word))


def is_hermitian(m, tol=TOL_ALGEBRA):
    m = np.asarray(m)
    return m.shape[0] == m.shape[1] and np.max(np.abs(m - m.conj().T), initial=0.0) <= tol


def is_psd(m, tol=TOL_STRUCT):
    """Hermitian with smallest eigenvalue at least ``-tol``."""
    m = np.asarray(m)
    if not is_hermitian(m, tol):
        return False
    return np.linalg.eigvalsh((m + m.conj().T) / 2)[0] >= -tol


def eig_projectors(observable):
    """Split a +1/-1 valued observable into its two spectral projectors.

    Returns ``[(+1.0, P_plus), (-1.0, P_minus)]`` with
    ``P_plus/minus = (I +/- O) / 2``.

    Raises:
        InvalidObservableError: if ``O`` is not Hermitian or ``O @ O != I``.
    """
    o = as_cmatrix(observable)
    d = o.shape[0]
    if o.shape != (d, d) or not is_hermitian(o, TOL_STRUCT):
        raise InvalidObservableError("observable must be a square Hermitian matrix")
    eye = np.eye(d, dtype=complex)
    if np.max(np.abs(o @ o - eye)) > TOL_STRUCT:
        raise InvalidObservableError("observable does not square to the identity")
    return [(1.0, (eye + o) / 2), (-1.0, (eye - o) / 2)]


def check_measurement(ops, dim=None, projective=False, tol=TOL_STRUCT):
    """Validate a list of POVM elements; returns them as a stacked array.

    Each element must be PSD and the elements must sum to the identity. With
    ``projective=True`` every element must also be idempotent.
    """
    mats = np.stack([as_cmatrix(p) for p in ops])
    d = mats.shape[1]
    if dim is not None and d != dim:
        raise ValueError(f"measurement acts on dimension {d}, expected {dim}")
    for k, p in enumerate(mats):
        if not is_psd(p, tol):
            raise ValueError(f"measurement element {k} is not positive semidefinite")
        if projective and np.max(np.abs(p @ p - p)) > tol:
            raise ValueError(f"measurement element {k} is not a projector")
    if np.max(np.abs(mats.sum(axis=0) - np.eye(d))) > tol:
        raise ValueError("measurement elements do not sum to the identity")
    return mats


def _check_dims(dims, d):
    dims = tuple(int(k) for k in dims)
    if int(np.prod(dims)) != d:
        raise ValueError(f"subsystem dims {dims} do not multiply to {d}")
    return dims


def partial_trace(rho, dims, keep):
    """Trace out every subsystem not listed in ``keep``.

    ``dims`` gives the local dimensions in tensor order; the kept subsystems
    stay in their original relative order.
    """
    rho = as_cmatrix(rho)
    dims = _check_dims(dims, rho.shape[0])
    keep = sorted(set(keep))
    n = len(dims)
    t = rho.reshape(dims + dims)
    traced = [k for k in range(n) if k not in keep]
    # Contract each traced index with its partner, highest first so positions stay valid.
    for count, k in enumerate(sorted(traced, reverse=True)):
        m = n - count
        t = np.trace(t, axis1=k, axis2=k + m)
    dk = int(np.prod([dims[k] for k in keep])) if keep else 1
    return t.reshape(dk, dk)


def permute_subsystems(rho, dims, order):
    """Reorder tensor factors so that new factor ``j`` is old factor ``order[j]``."""
    rho = as_cmatrix(rho)
    dims = _check_dims(dims, rho.shape[0])
    n = len(dims)
    order = list(order)
    if sorted(order) != list(range(n)):
        raise ValueError(f"{order} is not a permutation of {n} subsystems")
    t = rho.reshape(dims + dims).transpose(order + [k + n for k in order])
    d = rho.shape[0]
    return t.reshape(d, d)


def depolarize(rho, p, dims=None, group=None):
    """Mix (part of) a state with white noise.

    Without ``group`` this is ``(1 - p) rho + p I/d``. With ``group`` (a list
    of subsystem indices) only those subsystems are replaced:
    ``(1 - p) rho + p tau_group (x) Tr_group[rho]``.
    """
    rho = as_cmatrix(rho)
    d = rho.shape[0]
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"mixing weight {p} not in [0, 1]")
    if group is None:
        return (1 - p) * rho + p * np.eye(d) / d
    dims = _check_dims(dims, d)
    group = sorted(set(group))
    rest = [k for k in range(len(dims)) if k not in group]
    dg = int(np.prod([dims[k] for k in group]))
    reduced = partial_trace(rho, dims, rest)
    noisy = kron(np.eye(dg) / dg, reduced)
    # noisy is ordered (group, rest); undo that ordering.
    cur = group + rest
    back = [cur.index(k) for k in range(len(dims))]
    noisy = permute_subsystems(noisy, [dims[k] for k in cur], back)
    return (1 - p) * rho + p * noisy


@dataclass(frozen=True, eq=False)
class QState:
    """A validated density matrix, optionally annotated with subsystem dims."""

    density: np.ndarray
    dims: tuple = None

    def __post_init__(self):
        rho = as_cmatrix(self.density).copy()
        d = rho.shape[0]
        if rho.shape != (d, d):
            raise InvalidStateError("density matrix must be square")
        if not is_hermitian(rho, TOL_ALGEBRA):
            raise InvalidStateError("density matrix is not Hermitian")
        if abs(np.trace(rho).real - 1) > TOL_ALGEBRA:
            raise InvalidStateError(f"trace is {np.trace(rho).real!r}, not 1")
        if np.linalg.eigvalsh(rho)[0] < -TOL_STRUCT:
            raise InvalidStateError("density matrix has a negative eigenvalue")
        rho.setflags(write=False)
        object.__setattr__(self, "density", rho)
        dims = (d,) if self.dims is None else _check_dims(self.dims, d)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self):
        return self.density.shape[0]

    @classmethod
    def from_vector(cls, psi, dims=None):
        psi = np.asarray(psi, dtype=complex).ravel()
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()), dims)

    @classmethod
    def maximally_mixed(cls, dim, dims=None):
        return cls(np.eye(dim, dtype=complex) / dim, dims)

    def ptrace(self, keep):
        """Reduced state on the subsystems in ``keep``."""
        kept = [self.dims[k] for k in sorted(set(keep))]
        return QState(partial_trace(self.density, self.dims, keep), kept or None)


def phi_plus(local_dim=2):
    """Maximally entangled state sum_i |ii> / sqrt(d) as a QState."""
    psi = np.eye(local_dim, dtype=complex).ravel()
    return QState.from_vector(psi, (local_dim, local_dim))


def expectation(state, op):
    """``Tr[rho op]`` for a Hermitian ``op``, returned as a float."""
    rho = state.density if isinstance(state, QState) else as_cmatrix(state)
    op = as_cmatrix(op)
    if op.shape != rho.shape:
        raise ValueError(f"operator shape {op.shape} does not match state {rho.shape}")
    val = np.einsum("ij,ji->", rho, op)
    if abs(val.imag) > TOL_STRUCT:
        raise ValueError(f"expectation has imaginary part {val.imag:.3g}; is op Hermitian?")
    return float(val.real)

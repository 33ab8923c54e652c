"""Two-party non-local games with matching-bit predicates.

A game is described by its question and answer labels, product input
distribution and two key maps ``sk_a[x, y, a]`` and ``sk_b[x, y, b]``. The
players win when their key bits agree; in the tripartite extension a third
player who sees both questions must also output that same bit.
"""

import itertools
import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from .qmath import (
    TOL_ALGEBRA,
    TOL_STRUCT,
    QState,
    check_measurement,
    depolarize,
    eig_projectors,
    is_psd,
    kron,
    pauli_string,
)

#: Largest number of joint deterministic strategies enumerated by brute force.
SEARCH_CAP = 10**7

#: Tripartite quantum value of the magic square game, an NPA upper bound.
MSG_OMEGA3 = 8.00077 / 9
#: Tripartite quantum value of CHSH; approximate, used only as a default.
CHSH_OMEGA3_APPROX = 0.75


class SearchSpaceError(ValueError):
    """The brute-force search would exceed ``SEARCH_CAP`` strategies."""


def _labels(seq):
    out = tuple(str(s) for s in seq)
    if len(set(out)) != len(out) or not out:
        raise ValueError(f"labels must be non-empty and distinct: {seq!r}")
    return out


def _distribution(p, size, what):
    p = np.asarray(p, dtype=float)
    if p.shape != (size,) or np.any(p < 0) or abs(p.sum() - 1) > TOL_ALGEBRA:
        raise ValueError(f"{what} must be a probability vector of length {size}")
    return p


@dataclass(frozen=True, eq=False)
class GameSpec:
    """A non-local game ``(pi, X, Y, A, B, sk_a, sk_b)`` with product ``pi``.

    ``sk_a`` has shape ``(|X|, |Y|, |A|)`` and ``sk_b`` has shape
    ``(|X|, |Y|, |B|)``, both with 0/1 entries. The predicate is always
    derived from them and never stored.
    """

    x_labels: tuple
    y_labels: tuple
    a_labels: tuple
    b_labels: tuple
    pi_x: np.ndarray
    pi_y: np.ndarray
    sk_a: np.ndarray
    sk_b: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        for attr in ("x_labels", "y_labels", "a_labels", "b_labels"):
            object.__setattr__(self, attr, _labels(getattr(self, attr)))
        nx, ny, na, nb = self.sizes
        px = _distribution(self.pi_x, nx, "pi_x")
        py = _distribution(self.pi_y, ny, "pi_y")
        ska = np.asarray(self.sk_a, dtype=np.int8)
        skb = np.asarray(self.sk_b, dtype=np.int8)
        if ska.shape != (nx, ny, na) or skb.shape != (nx, ny, nb):
            raise ValueError(
                f"key maps have shapes {ska.shape}, {skb.shape}; "
                f"expected {(nx, ny, na)} and {(nx, ny, nb)}"
            )
        if not (np.isin(ska, (0, 1)).all() and np.isin(skb, (0, 1)).all()):
            raise ValueError("key maps must take values in {0, 1}")
        for arr in (px, py, ska, skb):
            arr.setflags(write=False)
        object.__setattr__(self, "pi_x", px)
        object.__setattr__(self, "pi_y", py)
        object.__setattr__(self, "sk_a", ska)
        object.__setattr__(self, "sk_b", skb)

    @property
    def sizes(self):
        return len(self.x_labels), len(self.y_labels), len(self.a_labels), len(self.b_labels)

    @property
    def pi(self):
        """Joint input distribution, shape ``(|X|, |Y|)``."""
        return np.outer(self.pi_x, self.pi_y)

    @property
    def is_uniform(self):
        nx, ny, _, _ = self.sizes
        return np.all(self.pi_x == 1 / nx) and np.all(self.pi_y == 1 / ny)

    def predicate(self):
        """Boolean array ``V[x, y, a, b]``: key bits agree."""
        return self.sk_a[:, :, :, None] == self.sk_b[:, :, None, :]

    def tripartite_predicate(self):
        """Boolean array ``V3[x, y, a, b, c]``: both key bits equal ``c``."""
        c = np.arange(2)
        return (self.sk_a[..., None, None] == c) & (self.sk_b[:, :, None, :, None] == c)

    def permute_x(self, perm):
        """Relabel Alice's questions: new question ``j`` is old question ``perm[j]``."""
        perm = list(perm)
        return replace(
            self,
            x_labels=[self.x_labels[k] for k in perm],
            pi_x=self.pi_x[perm],
            sk_a=self.sk_a[perm],
            sk_b=self.sk_b[perm],
        )

    @classmethod
    def from_joint(cls, pi, **kw):
        """Build from a joint input table, checking that it factorizes."""
        pi = np.asarray(pi, dtype=float)
        px, py = pi.sum(axis=1), pi.sum(axis=0)
        if np.max(np.abs(pi - np.outer(px, py))) > TOL_ALGEBRA:
            raise ValueError("input distribution is not a product of its marginals")
        return cls(pi_x=px, pi_y=py, **kw)


def msg_game():
    """The magic square game.

    Alice answers a row with even parity, Bob a column with odd parity; the
    key bits are the shared cell ``a[y]`` and ``b[x]``.
    """
    a_labels = ("000", "011", "101", "110")
    b_labels = ("001", "010", "100", "111")
    sk_a = np.array([[[int(a[y]) for a in a_labels] for y in range(3)] for _ in range(3)])
    sk_b = np.array([[[int(b[x]) for b in b_labels] for _ in range(3)] for x in range(3)])
    return GameSpec(
        x_labels=("0", "1", "2"),
        y_labels=("0", "1", "2"),
        a_labels=a_labels,
        b_labels=b_labels,
        pi_x=np.full(3, 1 / 3),
        pi_y=np.full(3, 1 / 3),
        sk_a=sk_a,
        sk_b=sk_b,
        name="msg",
    )


def chsh_game():
    """CHSH: win iff ``a = b xor (x and y)``."""
    sk_a = np.array([[[0, 1]] * 2] * 2)
    sk_b = np.array([[[b ^ (x & y) for b in (0, 1)] for y in (0, 1)] for x in (0, 1)])
    return GameSpec(
        x_labels=("0", "1"),
        y_labels=("0", "1"),
        a_labels=("0", "1"),
        b_labels=("0", "1"),
        pi_x=np.full(2, 0.5),
        pi_y=np.full(2, 0.5),
        sk_a=sk_a,
        sk_b=sk_b,
        name="chsh",
    )


def constant_game(nx=2, ny=2, na=2, nb=2):
    """A game every strategy wins: both key maps are identically zero."""
    return GameSpec(
        x_labels=range(nx),
        y_labels=range(ny),
        a_labels=range(na),
        b_labels=range(nb),
        pi_x=np.full(nx, 1 / nx),
        pi_y=np.full(ny, 1 / ny),
        sk_a=np.zeros((nx, ny, na)),
        sk_b=np.zeros((nx, ny, nb)),
        name="constant",
    )


# Classical strategies


@dataclass(frozen=True)
class ClassicalStrategy:
    """A deterministic strategy: answer-index tables per question.

    ``table_c`` (indexed ``[x][y]``) is only used for the tripartite extension.
    """

    table_a: tuple
    table_b: tuple
    weight: float = 1.0
    table_c: tuple = None


def _check_tables(game, strat):
    nx, ny, na, nb = game.sizes
    ta, tb = np.asarray(strat.table_a), np.asarray(strat.table_b)
    if ta.shape != (nx,) or tb.shape != (ny,):
        raise ValueError("strategy tables do not match the question alphabets")
    if ta.min() < 0 or ta.max() >= na or tb.min() < 0 or tb.max() >= nb:
        raise ValueError("strategy tables answer outside the declared alphabets")
    return ta, tb


def classical_win_prob(game, strategy):
    """Winning probability of a deterministic strategy or a weighted mixture of them."""
    if isinstance(strategy, ClassicalStrategy):
        strategy = [strategy]
    weights = np.array([s.weight for s in strategy], dtype=float)
    if np.any(weights < 0) or abs(weights.sum() - 1) > TOL_ALGEBRA:
        raise ValueError("mixture weights must be nonnegative and sum to 1")
    v = game.predicate()
    xs, ys = np.meshgrid(np.arange(game.sizes[0]), np.arange(game.sizes[1]), indexing="ij")
    total = 0.0
    for w, s in zip(weights, strategy):
        ta, tb = _check_tables(game, s)
        total += w * float(np.sum(game.pi * v[xs, ys, ta[xs], tb[ys]]))
    return total


def _all_tables(n_questions, n_answers):
    """Every answer table, lexicographic in question order; shape (n_answers**n_questions, n_questions)."""
    return np.array(list(itertools.product(range(n_answers), repeat=n_questions)), dtype=np.intp)


def _input_weights(game):
    """Per-input weights; integer counts when pi is uniform so sums stay exact."""
    if game.is_uniform:
        return np.ones(game.pi.shape, dtype=np.int64), game.pi.size
    return game.pi, None


def _pair_scores(game, table_a, table_b, win):
    """Score of every (Alice table, Bob table) pair, summed over inputs."""
    weights, _ = _input_weights(game)
    nx, ny = weights.shape
    scores = np.zeros((len(table_a), len(table_b)), dtype=weights.dtype)
    for x in range(nx):
        for y in range(ny):
            w = win[x, y].astype(weights.dtype) * weights[x, y]
            scores += w[np.ix_(table_a[:, x], table_b[:, y])]
    return scores


def _as_value(score, denom):
    return Fraction(int(score), denom) if denom is not None else float(score)


def best_classical_strategy(game):
    """Exhaustive search for an optimal deterministic strategy.

    Returns ``(value, strategy)``. Tables are enumerated lexicographically and
    the first optimum found wins ties.
    """
    nx, ny, na, nb = game.sizes
    if na**nx * nb**ny > SEARCH_CAP:
        raise SearchSpaceError(f"{na**nx * nb**ny} strategies exceed the cap {SEARCH_CAP}")
    ta, tb = _all_tables(nx, na), _all_tables(ny, nb)
    _, denom = _input_weights(game)
    v = game.predicate()
    best, best_idx = None, None
    chunk = max(1, SEARCH_CAP // (10 * len(tb)))
    for start in range(0, len(ta), chunk):
        scores = _pair_scores(game, ta[start : start + chunk], tb, v)
        i, j = np.unravel_index(np.argmax(scores), scores.shape)
        if best is None or scores[i, j] > best:
            best, best_idx = scores[i, j], (start + i, j)
    strat = ClassicalStrategy(tuple(ta[best_idx[0]].tolist()), tuple(tb[best_idx[1]].tolist()))
    return _as_value(best, denom), strat


def classical_value(game):
    """Classical value by brute force; a ``Fraction`` when ``pi`` is uniform."""
    return best_classical_strategy(game)[0]


def classical_value_tripartite(game):
    """Classical value of the tripartite extension by brute force.

    Enumerates Alice, Bob and guesser tables jointly, the guesser answering a
    bit for every question pair. A ``Fraction`` when ``pi`` is uniform.
    """
    nx, ny, na, nb = game.sizes
    n_c = 2 ** (nx * ny)
    total = na**nx * nb**ny * n_c
    if total > SEARCH_CAP:
        raise SearchSpaceError(f"{total} strategies exceed the cap {SEARCH_CAP}")
    ta, tb = _all_tables(nx, na), _all_tables(ny, nb)
    weights, denom = _input_weights(game)
    # cbits[k, xy]: guess for input pair xy in guesser table k.
    cbits = _all_tables(nx * ny, 2)
    v3 = game.tripartite_predicate()
    flat_w = weights.ravel()
    # For each (a-table, b-table) pair, the win indicator per input pair and guess.
    rows = []
    for x in range(nx):
        for y in range(ny):
            rows.append(v3[x, y][np.ix_(ta[:, x], tb[:, y])])  # (NA, NB, 2)
    wins = np.stack(rows, axis=2).reshape(len(ta) * len(tb), nx * ny, 2)
    wins = wins.astype(weights.dtype) * flat_w[None, :, None]
    best = None
    chunk = max(1, SEARCH_CAP // (10 * n_c))
    for start in range(0, len(wins), chunk):
        w = wins[start : start + chunk]
        scores = w[:, :, 0] @ (1 - cbits).T + w[:, :, 1] @ cbits.T
        m = scores.max()
        if best is None or m > best:
            best = m
    return _as_value(best, denom)


# Quantum strategies


@dataclass(frozen=True, eq=False)
class QuantumStrategy:
    """A shared state with one measurement per question on each side.

    ``povms_a[x]`` is an array of shape ``(|A|, dA, dA)`` ordered like the
    game's answer labels, likewise ``povms_b[y]``. The state lives on
    ``A (x) B``. ``subsystem_dims`` and ``pairs`` optionally record a finer
    tensor structure, e.g. two Bell pairs as ``(2, 2, 2, 2)`` with pairs
    ``((0, 2), (1, 3))``.
    """

    state: QState
    povms_a: tuple
    povms_b: tuple
    subsystem_dims: tuple = None
    pairs: tuple = None
    dims: tuple = field(init=False)

    def __post_init__(self):
        pa = tuple(check_measurement(list(m)) for m in self.povms_a)
        pb = tuple(check_measurement(list(m)) for m in self.povms_b)
        da, db = pa[0].shape[1], pb[0].shape[1]
        if any(m.shape[1] != da for m in pa) or any(m.shape[1] != db for m in pb):
            raise ValueError("all measurements of one party must act on the same space")
        if self.state.dim != da * db:
            raise ValueError(f"state dimension {self.state.dim} != {da}*{db}")
        for m in pa + pb:
            m.setflags(write=False)
        object.__setattr__(self, "povms_a", pa)
        object.__setattr__(self, "povms_b", pb)
        object.__setattr__(self, "dims", (da, db))
        if self.subsystem_dims is not None:
            sd = tuple(int(k) for k in self.subsystem_dims)
            if int(np.prod(sd)) != da * db:
                raise ValueError("subsystem_dims do not match the state dimension")
            object.__setattr__(self, "subsystem_dims", sd)

    def with_state(self, state):
        return replace(self, state=state)


def _check_compatible(game, strat):
    nx, ny, na, nb = game.sizes
    if len(strat.povms_a) != nx or len(strat.povms_b) != ny:
        raise ValueError("strategy has the wrong number of measurements for this game")
    if any(len(m) != na for m in strat.povms_a) or any(len(m) != nb for m in strat.povms_b):
        raise ValueError("measurement outcome counts do not match the answer alphabets")


def joint_distribution(strat):
    """``p[x, y, a, b] = Tr[rho (P^x_a (x) Q^y_b)]`` for every input and output."""
    da, db = strat.dims
    rho = strat.state.density.reshape(da, db, da, db)
    pa = np.stack(strat.povms_a)
    pb = np.stack(strat.povms_b)
    # Tr[rho (P (x) Q)] = sum rho[k,l,i,j] P[i,k] Q[j,l]
    p = np.einsum("xaik,ybjl,klij->xyab", pa, pb, rho, optimize=True)
    if np.max(np.abs(p.imag)) > TOL_STRUCT:
        raise ValueError("outcome probabilities have an imaginary part")
    return np.clip(p.real, 0.0, 1.0)


def quantum_win_prob(game, strat):
    """Winning probability of a quantum strategy, clamped to [0, 1]."""
    _check_compatible(game, strat)
    p = joint_distribution(strat)
    w = np.einsum("xy,xyab,xyab->", game.pi, game.predicate(), p)
    return float(np.clip(w, 0.0, 1.0))


def qber(game, strat):
    """Quantum bit error rate ``1 - win probability``."""
    return 1.0 - quantum_win_prob(game, strat)


#: Observables of the magic square strategy; Alice measures row x, Bob column y.
MSG_OBSERVABLES = (
    (("IZ", 1), ("ZI", 1), ("ZZ", 1)),
    (("XI", 1), ("IX", 1), ("XX", 1)),
    (("XZ", -1), ("ZX", -1), ("YY", 1)),
)


def _parity_measurement(observables, labels):
    """Joint PVM of three commuting +1/-1 observables, one element per label.

    Label bit ``k`` is the outcome of observable ``k`` (0 for +1, 1 for -1).
    """
    halves = [eig_projectors(o) for o in observables]
    out = []
    for lab in labels:
        p = np.eye(observables[0].shape[0], dtype=complex)
        for bit, half in zip(lab, halves):
            p = p @ half[int(bit)][1]
        out.append(p)
    return check_measurement(out, projective=True)


def _signed(word, sign):
    return sign * pauli_string(word)


def msg_honest_strategy():
    """Optimal magic square strategy on two Bell pairs.

    Tensor order is (A1, A2, B1, B2); pairs are (A1, B1) and (A2, B2).
    """
    game = msg_game()
    psi = np.zeros(16, dtype=complex)
    for i in range(4):
        psi[5 * i] = 1.0  # |i>_A |i>_B with i in {0..3}
    state = QState.from_vector(psi, (2, 2, 2, 2))
    rows = [[_signed(w, s) for w, s in MSG_OBSERVABLES[x]] for x in range(3)]
    cols = [[_signed(*MSG_OBSERVABLES[k][y]) for k in range(3)] for y in range(3)]
    povms_a = tuple(_parity_measurement(r, game.a_labels) for r in rows)
    povms_b = tuple(_parity_measurement(c, game.b_labels) for c in cols)
    return QuantumStrategy(state, povms_a, povms_b, (2, 2, 2, 2), ((0, 2), (1, 3)))


def chsh_honest_strategy():
    """Tsirelson-optimal CHSH strategy on one Bell pair."""
    s = 1 / np.sqrt(2)
    z, x = pauli_string("Z"), pauli_string("X")
    obs_a = (z, x)
    obs_b = (s * (z + x), s * (z - x))
    povms_a = tuple(np.stack([p for _, p in eig_projectors(o)]) for o in obs_a)
    povms_b = tuple(np.stack([p for _, p in eig_projectors(o)]) for o in obs_b)
    state = QState.from_vector(np.array([1, 0, 0, 1]), (2, 2))
    return QuantumStrategy(state, povms_a, povms_b, (2, 2), ((0, 1),))


def apply_depolarizing(strat, q, per_pair=True):
    """Honest-device noise: ``rho -> (1 - 2q) rho + 2q tau``.

    With ``per_pair`` the channel acts on each entangled pair listed in
    ``strat.pairs``; otherwise on the whole state.
    """
    if not 0.0 <= q <= 0.5:
        raise ValueError(f"noise parameter q={q} not in [0, 1/2]")
    rho = strat.state.density
    if per_pair:
        if strat.pairs is None or strat.subsystem_dims is None:
            raise ValueError("per-pair noise needs subsystem_dims and pairs on the strategy")
        for pair in strat.pairs:
            rho = depolarize(rho, 2 * q, strat.subsystem_dims, pair)
    else:
        rho = depolarize(rho, 2 * q)
    return strat.with_state(QState(rho, strat.state.dims))


def msg_win_prob_closed_form(q):
    """Noisy magic square winning probability ``1 - (2/9) q (7 - 5q)``."""
    return 1 - (2 / 9) * q * (7 - 5 * q)


# Tripartite operator identity


def _winning_operators(game, strat, x, y):
    """Alice's and Bob's projectors onto key bit 0/1 for input (x, y)."""
    pa, pb = strat.povms_a[x], strat.povms_b[y]
    a_bit = [sum(pa[k] for k in np.flatnonzero(game.sk_a[x, y] == c)) for c in (0, 1)]
    b_bit = [sum(pb[k] for k in np.flatnonzero(game.sk_b[x, y] == c)) for c in (0, 1)]
    return a_bit, b_bit


def tripartite_win_operator(game, strat, f0, x, y):
    """``sum_c F_c (x) A_c (x) B_c`` on C (x) A (x) B, with ``F_1 = I - F_0``."""
    a_bit, b_bit = _winning_operators(game, strat, x, y)
    f = (f0, np.eye(len(f0)) - f0)
    return sum(kron(f[c], a_bit[c], b_bit[c]) for c in (0, 1))


def simplified_win_operator(game, strat, f0, x, y):
    """Expansion using only the 1-outcomes of Alice and the 0-outcomes of Bob.

    Sums ``F0 (x) I (x) Q_b / 2 + (I - F0) (x) P_a (x) I / 2 - I (x) P_a (x) Q_b``
    over Alice answers with key bit 1 and Bob answers with key bit 0. The
    halves assume two such answers per side, as in the magic square game.
    """
    pa, pb = strat.povms_a[x], strat.povms_b[y]
    da, db = strat.dims
    ic, ia, ib = np.eye(len(f0)), np.eye(da), np.eye(db)
    total = 0
    for a in np.flatnonzero(game.sk_a[x, y] == 1):
        for b in np.flatnonzero(game.sk_b[x, y] == 0):
            total = total + (
                0.5 * kron(f0, ia, pb[b])
                + 0.5 * kron(ic - f0, pa[a], ib)
                - kron(ic, pa[a], pb[b])
            )
    return total


def verify_pi_simplification(game, strat, f0s):
    """Largest entrywise gap between the two forms of the winning operator.

    ``f0s[x][y]`` is the third party's 0-outcome effect for input (x, y); it
    must satisfy ``0 <= F0 <= I``.
    """
    nx, ny, _, _ = game.sizes
    _check_compatible(game, strat)
    for m in strat.povms_a + strat.povms_b:
        for p in m:
            if np.max(np.abs(p @ p - p)) > TOL_STRUCT:
                raise ValueError("the identity needs projective measurements")
    worst = 0.0
    for x in range(nx):
        for y in range(ny):
            f0 = np.asarray(f0s[x][y], dtype=complex)
            if not (is_psd(f0) and is_psd(np.eye(len(f0)) - f0)):
                raise ValueError(f"F0 for input ({x}, {y}) is not an effect")
            full = tripartite_win_operator(game, strat, f0, x, y)
            short = simplified_win_operator(game, strat, f0, x, y)
            worst = max(worst, float(np.max(np.abs(full - short))))
    return worst


def random_effect(dim, rng):
    """Random operator with ``0 <= F <= I``: a random unitary frame, eigenvalues in [0, 1]."""
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    u, _ = np.linalg.qr(z)
    return (u * rng.uniform(0, 1, size=dim)) @ u.conj().T


# JSON documents


def _matrix_from_json(m):
    arr = np.asarray(m, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValueError("matrices are encoded as nested [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def _matrix_to_json(m):
    m = np.asarray(m, dtype=complex)
    return np.stack([m.real, m.imag], axis=-1).tolist()


def game_to_dict(game):
    return {
        "name": game.name,
        "x_labels": list(game.x_labels),
        "y_labels": list(game.y_labels),
        "a_labels": list(game.a_labels),
        "b_labels": list(game.b_labels),
        "pi_x": game.pi_x.tolist(),
        "pi_y": game.pi_y.tolist(),
        "sk_a": game.sk_a.tolist(),
        "sk_b": game.sk_b.tolist(),
    }


def game_from_dict(doc):
    keys = ("x_labels", "y_labels", "a_labels", "b_labels", "pi_x", "pi_y", "sk_a", "sk_b")
    missing = [k for k in keys if k not in doc]
    if missing:
        raise ValueError(f"game document is missing {missing}")
    return GameSpec(name=doc.get("name", "custom"), **{k: doc[k] for k in keys})


def strategy_to_dict(strat):
    return {
        "state": _matrix_to_json(strat.state.density),
        "povms_a": [[_matrix_to_json(p) for p in m] for m in strat.povms_a],
        "povms_b": [[_matrix_to_json(p) for p in m] for m in strat.povms_b],
        "subsystem_dims": list(strat.subsystem_dims) if strat.subsystem_dims else None,
        "pairs": [list(p) for p in strat.pairs] if strat.pairs else None,
    }


def strategy_from_dict(doc):
    sd = doc.get("subsystem_dims")
    state = QState(_matrix_from_json(doc["state"]), sd)
    return QuantumStrategy(
        state,
        tuple(np.stack([_matrix_from_json(p) for p in m]) for m in doc["povms_a"]),
        tuple(np.stack([_matrix_from_json(p) for p in m]) for m in doc["povms_b"]),
        tuple(sd) if sd else None,
        tuple(tuple(p) for p in doc["pairs"]) if doc.get("pairs") else None,
    )


def load_game_file(path):
    """Read ``{"game": {...}, "strategy": {...}?}``; returns ``(game, strategy or None)``."""
    doc = json.loads(Path(path).read_text())
    game = game_from_dict(doc["game"] if "game" in doc else doc)
    strat = strategy_from_dict(doc["strategy"]) if doc.get("strategy") else None
    if strat is not None:
        _check_compatible(game, strat)
    return game, strat

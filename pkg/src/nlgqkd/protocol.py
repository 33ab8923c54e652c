"""Simulation of the sequential spot-checking key distribution protocol.

One run goes through measurement, sifting, parameter estimation, one-way
error correction with hash verification and privacy amplification. All
randomness comes from one integer seed split into named counter-based
streams, so a run can be replayed exactly.
"""

import itertools
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.stats import binomtest

from .games import joint_distribution

STREAMS = ("testing", "inputs_a", "inputs_b", "devices", "ec_hash", "pa_hash", "code")


def make_streams(seed):
    """Independent Philox generators, one per named purpose, from one seed."""
    children = np.random.SeedSequence(int(seed)).spawn(len(STREAMS))
    return {name: np.random.Generator(np.random.Philox(ss)) for name, ss in zip(STREAMS, children)}


def derive_seeds(seed, count):
    """``count`` 64-bit child seeds, deterministic in ``seed``."""
    children = np.random.SeedSequence(int(seed)).spawn(count)
    return [int(c.generate_state(1, np.uint64)[0]) for c in children]


# Bit helpers


def _bits(x):
    return np.asarray(x, dtype=np.uint8) & 1


def bits_to_hex(bits):
    bits = _bits(bits)
    return {"bits": int(bits.size), "hex": np.packbits(bits).tobytes().hex()}


def hex_to_bits(doc):
    raw = np.frombuffer(bytes.fromhex(doc["hex"]), dtype=np.uint8)
    return np.unpackbits(raw)[: doc["bits"]]


def _symbols_to_hex(symbols, size):
    """One hex digit per round when the alphabet fits, else a plain list."""
    symbols = np.asarray(symbols)
    if size <= 16:
        return "".join("0123456789abcdef"[s] for s in symbols)
    return symbols.tolist()


# Hashing


@dataclass(frozen=True, eq=False)
class ToeplitzHash:
    """A member of the Toeplitz family ``{0,1}^m -> {0,1}^l``.

    ``T[i, j] = seed[i - j + m - 1]``, so the ``m + l - 1`` seed bits fix
    the whole matrix.
    """

    seed: np.ndarray
    input_len: int
    output_len: int

    def __post_init__(self):
        s = _bits(self.seed).copy()
        if s.size != max(self.input_len + self.output_len - 1, 0):
            raise ValueError("seed must have input_len + output_len - 1 bits")
        s.setflags(write=False)
        object.__setattr__(self, "seed", s)

    @classmethod
    def random(cls, input_len, output_len, rng):
        size = max(input_len + output_len - 1, 0)
        return cls(rng.integers(0, 2, size, dtype=np.uint8), input_len, output_len)

    def matrix(self):
        m, l = self.input_len, self.output_len
        i, j = np.indices((l, m))
        return self.seed[i - j + m - 1]

    def __call__(self, bits):
        return toeplitz_hash(self, bits)


def toeplitz_hash(h, bits):
    """GF(2) product of the Toeplitz matrix with ``bits``."""
    x = _bits(bits)
    if x.ndim != 1 or x.size != h.input_len:
        raise ValueError(f"input has {x.size} bits, hash expects {h.input_len}")
    if h.output_len == 0:
        return np.zeros(0, dtype=np.uint8)
    # Row i of T is seed[i : i + m] reversed.
    windows = sliding_window_view(h.seed, h.input_len)
    return ((windows.astype(np.int64) @ x[::-1].astype(np.int64)) & 1).astype(np.uint8)


def toeplitz_hash_batch(seeds, inputs, output_len):
    """Hash many inputs, each with its own seed; rows of ``seeds`` and ``inputs`` pair up."""
    seeds, inputs = _bits(seeds), _bits(inputs)
    m = inputs.shape[1]
    if output_len == 0:
        return np.zeros((len(inputs), 0), dtype=np.uint8)
    windows = sliding_window_view(seeds, m, axis=1).astype(np.int64)
    return (np.einsum("tlm,tm->tl", windows, inputs[:, ::-1].astype(np.int64)) & 1).astype(np.uint8)


# Error correction


@dataclass(frozen=True, eq=False)
class LinearCode:
    """Random binary linear code with bounded-weight syndrome decoding.

    Keys longer than the block length are split into blocks, the last one
    zero-padded. Decoding looks up the lowest-weight error pattern with the
    observed syndrome, ties broken by the lexicographically first support.
    """

    parity: np.ndarray
    radius: int = 3
    _table: dict = field(init=False, repr=False)
    _columns: list = field(init=False, repr=False)

    def __post_init__(self):
        h = _bits(self.parity)
        if h.ndim != 2 or h.shape[1] == 0:
            raise ValueError("parity matrix must be 2-d with at least one column")
        h = h.copy()
        h.setflags(write=False)
        object.__setattr__(self, "parity", h)
        cols = [int("".join(map(str, h[:, j])) or "0", 2) for j in range(h.shape[1])]
        table = {}
        for w in range(self.radius + 1):
            for support in itertools.combinations(range(h.shape[1]), w):
                s = 0
                for j in support:
                    s ^= cols[j]
                table.setdefault(s, support)
        object.__setattr__(self, "_table", table)
        object.__setattr__(self, "_columns", cols)

    @classmethod
    def random(cls, block_length, rows, radius=3, rng=None):
        rng = np.random.default_rng() if rng is None else rng
        return cls(rng.integers(0, 2, (rows, block_length), dtype=np.uint8), radius)

    @property
    def block_length(self):
        return self.parity.shape[1]

    @property
    def rows(self):
        return self.parity.shape[0]

    def syndrome_length(self, n):
        return self.rows * -(-n // self.block_length)

    def _blocks(self, s):
        s = _bits(s)
        k = self.block_length
        nb = -(-s.size // k)
        padded = np.zeros(nb * k, dtype=np.uint8)
        padded[: s.size] = s
        return padded.reshape(nb, k)

    def synd(self, s):
        """Concatenated block syndromes ``H s`` over GF(2)."""
        blocks = self._blocks(s)
        return ((blocks.astype(np.int64) @ self.parity.T.astype(np.int64)) & 1).astype(np.uint8).ravel()

    def corr(self, s_b, z):
        """Bob's estimate of Alice's string from his string and her syndrome.

        Blocks whose syndrome difference has no pattern within the radius are
        returned unchanged.
        """
        s_b = _bits(s_b)
        z = _bits(z)
        if z.size != self.syndrome_length(s_b.size):
            raise ValueError("syndrome length does not match the string length")
        blocks = self._blocks(s_b)
        diff = (self.synd(s_b) ^ z).reshape(len(blocks), self.rows)
        weights = 1 << np.arange(self.rows - 1, -1, -1, dtype=object)
        out = blocks.copy()
        for b, d in enumerate(diff):
            if not d.any():
                continue
            key = int(np.dot(d.astype(object), weights))
            support = self._table.get(key)
            if support is not None:
                out[b, list(support)] ^= 1
        return out.ravel()[: s_b.size]


# Devices


class Device:
    """A measurement device: round index and input label index in, output index out.

    Subclasses implement :meth:`measure`. Devices that are i.i.d. across
    rounds may set ``batchable = True`` and override :meth:`measure_batch`.
    """

    batchable = False

    def __init__(self, n_inputs, n_outputs):
        self.n_inputs = int(n_inputs)
        self.n_outputs = int(n_outputs)

    def measure(self, i, x):
        raise NotImplementedError

    def measure_batch(self, indices, xs):
        return np.array([self.measure(int(i), int(x)) for i, x in zip(indices, xs)], dtype=np.intp)

    def reseed(self, rng):
        """Take fresh randomness from the protocol's device stream."""

    def check_output(self, out):
        out = np.asarray(out)
        if np.any(out < 0) or np.any(out >= self.n_outputs):
            raise ValueError("device produced an output outside its alphabet")
        return out


class FunctionDevice(Device):
    """Device backed by ``fn(i, x) -> output``; ``fn`` may keep internal state."""

    def __init__(self, n_inputs, n_outputs, fn):
        super().__init__(n_inputs, n_outputs)
        self.fn = fn

    def measure(self, i, x):
        return int(self.check_output(self.fn(i, x)))


class TableDevice(Device):
    """Deterministic memoryless device answering ``table[x]``."""

    batchable = True

    def __init__(self, n_outputs, table):
        self.table = np.asarray(table, dtype=np.intp)
        super().__init__(len(self.table), n_outputs)
        self.check_output(self.table)

    def measure(self, i, x):
        return int(self.table[x])

    def measure_batch(self, indices, xs):
        return self.table[np.asarray(xs)]


def _sample_rows(cdf, rng):
    """One categorical sample per row of a cumulative table."""
    u = rng.random(len(cdf))
    idx = (cdf <= u[:, None]).sum(axis=1)
    return np.minimum(idx, cdf.shape[1] - 1)


class _SharedSource:
    """Outcome sampler shared by the two halves of an honest device pair.

    Whichever device is used first in a round samples from its marginal; the
    other samples conditionally on that outcome. This reproduces the joint
    distribution of the strategy without any per-round matrix work.
    """

    def __init__(self, joint, pi_x, pi_y, rng):
        p = np.clip(joint, 0, None)
        self.joint = p
        self.rng = rng
        marg_a = np.einsum("y,xyab->xa", pi_y, p)
        marg_b = np.einsum("x,xyab->yb", pi_x, p)
        self.cdf_a = np.cumsum(marg_a / marg_a.sum(axis=1, keepdims=True), axis=-1)
        self.cdf_b = np.cumsum(marg_b / marg_b.sum(axis=1, keepdims=True), axis=-1)
        self.cond_b = self._conditional(p, axis=3)  # b | x, y, a
        self.cond_a = self._conditional(p, axis=2)  # a | x, y, b
        self.pending = {}
        self.pending_batch = None

    @staticmethod
    def _conditional(p, axis):
        tot = p.sum(axis=axis, keepdims=True)
        k = p.shape[axis]
        cond = np.where(tot > 0, p / np.where(tot > 0, tot, 1), 1 / k)
        cdf = np.cumsum(cond, axis=axis)
        return cdf if axis == 3 else np.moveaxis(cdf, 2, 3)  # last axis is sampled

    def single(self, party, i, inp):
        other = self.pending.pop(i, None)
        if other is None:
            cdf = self.cdf_a[inp] if party == "a" else self.cdf_b[inp]
            out = int(_sample_rows(cdf[None], self.rng)[0])
            self.pending[i] = (party, inp, out)
            return out
        _, oinp, oout = other
        if party == "b":
            cdf = self.cond_b[oinp, inp, oout]
        else:
            cdf = self.cond_a[inp, oinp, oout]
        return int(_sample_rows(cdf[None], self.rng)[0])

    def batch(self, party, indices, inputs):
        pend = self.pending_batch
        if pend is not None and pend[0] != party and np.array_equal(pend[1], indices):
            self.pending_batch = None
            _, _, oinp, oout = pend
            if party == "b":
                cdf = self.cond_b[oinp, inputs, oout]
            else:
                cdf = self.cond_a[inputs, oinp, oout]
            return _sample_rows(cdf, self.rng)
        cdf = self.cdf_a[inputs] if party == "a" else self.cdf_b[inputs]
        out = _sample_rows(cdf, self.rng)
        self.pending_batch = (party, np.array(indices), np.asarray(inputs), out)
        return out


class HonestDevice(Device):
    """One half of an i.i.d. honest device pair; see :func:`honest_devices`."""

    batchable = True

    def __init__(self, source, party, n_inputs, n_outputs):
        super().__init__(n_inputs, n_outputs)
        self.source = source
        self.party = party

    def measure(self, i, x):
        return self.source.single(self.party, i, x)

    def measure_batch(self, indices, xs):
        return self.source.batch(self.party, np.asarray(indices), np.asarray(xs, dtype=np.intp))

    def reseed(self, rng):
        self.source.rng = rng


def honest_devices(game, strategy, rng=None):
    """Alice's and Bob's devices playing ``strategy`` independently in every round."""
    rng = np.random.default_rng(0) if rng is None else rng
    nx, ny, na, nb = game.sizes
    src = _SharedSource(joint_distribution(strategy), game.pi_x, game.pi_y, rng)
    return HonestDevice(src, "a", nx, na), HonestDevice(src, "b", ny, nb)


# Protocol run


@dataclass(frozen=True, eq=False)
class Transcript:
    """Everything produced by one run. ``C`` is 1/0 on test rounds and -1 elsewhere."""

    seed: int
    n: int
    gamma: float
    omega_exp: float
    delta_tol: float
    l_ec: int
    l_key: int
    T: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    A: np.ndarray
    B: np.ndarray
    S_A: np.ndarray
    S_B: np.ndarray
    C: np.ndarray
    pe_failures: int
    pe_threshold: float
    F_PE: bool
    F_EC: bool = None
    Z: np.ndarray = None
    S_B_hat: np.ndarray = None
    H_A: np.ndarray = None
    H_B: np.ndarray = None
    ec_hash_seed: np.ndarray = None
    pa_seed: np.ndarray = None
    K_A: np.ndarray = None
    K_B: np.ndarray = None
    alphabet_sizes: tuple = (16, 16, 16, 16)

    @property
    def aborted(self):
        return not (self.F_PE and self.F_EC)

    @property
    def keys_match(self):
        return self.K_A is not None and np.array_equal(self.K_A, self.K_B)

    @property
    def ec_exact(self):
        return self.S_B_hat is not None and np.array_equal(self.S_A, self.S_B_hat)

    def to_dict(self):
        nx, ny, na, nb = self.alphabet_sizes
        test = self.T.astype(bool)
        public = {
            "seed": self.seed,
            "n": self.n,
            "gamma": self.gamma,
            "omega_exp": self.omega_exp,
            "delta_tol": self.delta_tol,
            "l_ec": self.l_ec,
            "l_key": self.l_key,
            "T": bits_to_hex(self.T),
            "X": _symbols_to_hex(self.X, nx),
            "Y": _symbols_to_hex(self.Y, ny),
            "S_A_test": bits_to_hex(self.S_A[test]),
            "C_test": bits_to_hex(self.C[test]),
            "pe_failures": self.pe_failures,
            "pe_threshold": self.pe_threshold,
            "F_PE": self.F_PE,
            "F_EC": self.F_EC,
        }
        for name in ("Z", "H_A", "H_B", "ec_hash_seed", "pa_seed"):
            val = getattr(self, name)
            if val is not None:
                public[name] = bits_to_hex(val)
        private = {
            "A": _symbols_to_hex(self.A, na),
            "B": _symbols_to_hex(self.B, nb),
            "S_A": bits_to_hex(self.S_A),
            "S_B": bits_to_hex(self.S_B),
        }
        if self.S_B_hat is not None:
            private["S_B_hat"] = bits_to_hex(self.S_B_hat)
        if not self.aborted:
            private["K_A"] = bits_to_hex(self.K_A)
            private["K_B"] = bits_to_hex(self.K_B)
        return {"public": public, "private": private}

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), sort_keys=True, **kw)


def _sample_inputs(p, n, rng):
    return _sample_rows(np.broadcast_to(np.cumsum(p), (n, len(p))), rng)


def _measure(dev_a, dev_b, X, Y):
    n = len(X)
    idx = np.arange(n)
    if dev_a.batchable and dev_b.batchable:
        A = dev_a.check_output(dev_a.measure_batch(idx, X))
        B = dev_b.check_output(dev_b.measure_batch(idx, Y))
        return np.asarray(A, dtype=np.intp), np.asarray(B, dtype=np.intp)
    A = np.empty(n, dtype=np.intp)
    B = np.empty(n, dtype=np.intp)
    for i in range(n):
        A[i] = dev_a.check_output(dev_a.measure(i, int(X[i])))
        B[i] = dev_b.check_output(dev_b.measure(i, int(Y[i])))
    return A, B


def run_protocol(game, dev_a, dev_b, params, ec=None, seed=0, l_key=0, pe_only=False):
    """Run the protocol once.

    ``params`` supplies ``n``, ``gamma``, ``omega_exp``, ``delta_tol`` and
    ``l_ec``. With ``ec=None`` Bob's guess is his own raw key, so any
    mismatch is left for the verification hash to catch. ``pe_only`` stops
    after parameter estimation.
    """
    n = params.n
    nx, ny, na, nb = game.sizes
    if (dev_a.n_inputs, dev_a.n_outputs, dev_b.n_inputs, dev_b.n_outputs) != (nx, na, ny, nb):
        raise ValueError("device alphabets do not match the game")
    if not 0 <= l_key <= n:
        raise ValueError("l_key must lie in [0, n]")
    rng = make_streams(seed)
    dev_a.reseed(rng["devices"])
    dev_b.reseed(rng["devices"])

    # Measurement.
    T = (rng["testing"].random(n) < params.gamma).astype(np.uint8)
    X = _sample_inputs(game.pi_x, n, rng["inputs_a"])
    Y = _sample_inputs(game.pi_y, n, rng["inputs_b"])
    A, B = _measure(dev_a, dev_b, X, Y)

    # Sifting.
    S_A = game.sk_a[X, Y, A].astype(np.uint8)
    S_B = game.sk_b[X, Y, B].astype(np.uint8)

    # Parameter estimation on test rounds.
    C = np.where(T == 1, (S_A == S_B).astype(np.int8), np.int8(-1))
    failures = int(np.sum(C == 0))
    threshold = (1 - params.omega_exp + params.delta_tol) * params.gamma * n
    base = dict(
        seed=int(seed),
        n=n,
        gamma=params.gamma,
        omega_exp=params.omega_exp,
        delta_tol=params.delta_tol,
        l_ec=params.l_ec,
        l_key=l_key,
        T=T,
        X=X,
        Y=Y,
        A=A,
        B=B,
        S_A=S_A,
        S_B=S_B,
        C=C,
        pe_failures=failures,
        pe_threshold=threshold,
        alphabet_sizes=game.sizes,
    )
    if failures > threshold:
        return Transcript(F_PE=False, **base)
    if pe_only:
        return Transcript(F_PE=True, **base)

    # Error correction and verification.
    if ec is not None:
        Z = ec.synd(S_A)
        S_B_hat = ec.corr(S_B, Z)
    else:
        Z = np.zeros(0, dtype=np.uint8)
        S_B_hat = S_B.copy()
    h_ec = ToeplitzHash.random(n, params.l_ec, rng["ec_hash"])
    H_A, H_B = h_ec(S_A), h_ec(S_B_hat)
    ec_fields = dict(Z=Z, S_B_hat=S_B_hat, H_A=H_A, H_B=H_B, ec_hash_seed=h_ec.seed)
    if not np.array_equal(H_A, H_B):
        return Transcript(F_PE=True, F_EC=False, **ec_fields, **base)

    # Privacy amplification.
    h_pa = ToeplitzHash.random(n, l_key, rng["pa_hash"])
    return Transcript(
        F_PE=True,
        F_EC=True,
        pa_seed=h_pa.seed,
        K_A=h_pa(S_A),
        K_B=h_pa(S_B_hat),
        **ec_fields,
        **base,
    )


# Monte Carlo harnesses


def thread_count():
    """Worker threads for Monte Carlo; capped by ``NLGQKD_THREADS``."""
    cap = os.environ.get("NLGQKD_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise ValueError(f"NLGQKD_THREADS must be an integer, got {cap!r}") from None
    return n


def _parallel_map(fn, items, threads=None):
    threads = thread_count() if threads is None else threads
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class MonteCarloResult:
    events: int
    trials: int
    ci_low: float
    ci_high: float
    detail: dict = field(default_factory=dict)

    @property
    def rate(self):
        return self.events / self.trials if self.trials else float("nan")


def binomial_ci(k, n, level=0.95):
    """Exact (Clopper-Pearson) confidence interval for a binomial proportion."""
    ci = binomtest(int(k), int(n)).proportion_ci(confidence_level=level, method="exact")
    return float(ci.low), float(ci.high)


def monte_carlo_completeness(game, device_factory, params, trials, seed=0, ec=None, l_key=0, threads=None):
    """Abort frequency of honest runs.

    ``device_factory()`` returns a fresh ``(dev_a, dev_b)`` pair. With
    ``ec=None`` only parameter estimation is simulated.
    """
    seeds = derive_seeds(seed, trials)

    def one(s):
        da, db = device_factory()
        t = run_protocol(game, da, db, params, ec=ec, seed=s, l_key=l_key, pe_only=ec is None)
        return (not t.F_PE), (t.F_PE and t.F_EC is False)

    outcomes = _parallel_map(one, seeds, threads)
    pe = sum(o[0] for o in outcomes)
    ecf = sum(o[1] for o in outcomes)
    lo, hi = binomial_ci(pe + ecf, trials)
    return MonteCarloResult(pe + ecf, trials, lo, hi, {"pe_aborts": pe, "ec_aborts": ecf})


def flip_random_bits(s, rng):
    """Default mismatch injector: XOR with a uniformly random nonzero pattern."""
    while True:
        e = rng.integers(0, 2, s.shape, dtype=np.uint8)
        if e.any():
            return s ^ e


def monte_carlo_correctness(length, l_ec, trials, seed=0, injector=flip_random_bits, chunk=10_000):
    """How often the verification hash passes when Bob's guess is forced to differ.

    ``injector(s_a, rng)`` returns Bob's guess; a fresh Toeplitz hash is drawn
    for every trial. Counts passes among trials where the strings differ, and
    separately the trials where they are equal.
    """
    rng = make_streams(seed)
    passes = mismatched = equal_passes = 0
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        s_a = rng["inputs_a"].integers(0, 2, (m, length), dtype=np.uint8)
        s_b = np.stack([injector(row, rng["devices"]) for row in s_a])
        seeds = rng["ec_hash"].integers(0, 2, (m, length + l_ec - 1), dtype=np.uint8)
        h_a = toeplitz_hash_batch(seeds, s_a, l_ec)
        h_b = toeplitz_hash_batch(seeds, s_b, l_ec)
        same_hash = np.all(h_a == h_b, axis=1)
        differ = np.any(s_a != s_b, axis=1)
        passes += int(np.sum(same_hash & differ))
        equal_passes += int(np.sum(same_hash & ~differ))
        mismatched += int(np.sum(differ))
        done += m
    lo, hi = binomial_ci(passes, mismatched) if mismatched else (float("nan"), float("nan"))
    return MonteCarloResult(
        passes,
        mismatched,
        lo,
        hi,
        {"equal_trials": trials - mismatched, "equal_passes": equal_passes, "bound": 2.0**-l_ec},
    )

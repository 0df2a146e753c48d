"""Deterministic randomness, shared record types, and the trace CSV contract.

Everything downstream (dynamics engine, experiment harness, cross-language
twin runs) depends on the exact bit-level behavior of the generator here, so
SplitMix64 and Box-Muller are spelled out rather than delegated to numpy's
Generator machinery. Word consumption is a hard interface: every normal draw
of dimension d costs exactly 2 * ceil(d / 2) words no matter what values come
out, which keeps parallel implementations in lockstep.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1
_PHI64 = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_TWO_NEG53 = 2.0 ** -53


def splitmix64_next(state):
    """Advance a SplitMix64 state by one step.

    Returns (new_state, output_word), both Python ints in [0, 2^64).
    """
    assert 0 <= state <= _MASK64
    state = (state + _PHI64) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    z = z ^ (z >> 31)
    return state, z


class RngStream:
    """Scalar SplitMix64 stream with Box-Muller normals.

    uniform() maps one 64-bit word to [0, 1) via (word >> 11) * 2**-53.
    gaussian_pair() consumes exactly two words: u1 = 1 - uniform() in (0, 1]
    feeds the log, u2 = uniform() feeds the angle, and the pair is
    (r cos(2 pi u2), r sin(2 pi u2)) with r = sqrt(-2 ln u1).
    """

    def __init__(self, seed):
        assert 0 <= seed <= _MASK64
        self.state = seed

    def next_word(self):
        self.state, word = splitmix64_next(self.state)
        return word

    def uniform(self):
        return (self.next_word() >> 11) * _TWO_NEG53

    def gaussian_pair(self):
        u1 = 1.0 - self.uniform()
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        ang = 2.0 * math.pi * u2
        return r * math.cos(ang), r * math.sin(ang)

    def normal(self, d):
        """First d values from ceil(d / 2) Box-Muller pairs, as a float array."""
        assert d >= 1
        vals = np.empty(d)
        for j in range((d + 1) // 2):
            z1, z2 = self.gaussian_pair()
            vals[2 * j] = z1
            if 2 * j + 1 < d:
                vals[2 * j + 1] = z2
        return vals

    def index(self, n):
        """Uniformly distributed index in [0, n) from one word."""
        assert n >= 1
        i = int(self.uniform() * n)
        return min(i, n - 1)


class RngStreams:
    """Vectorized batch of independent SplitMix64 streams, one per run.

    Stream i is seeded with base_seed XOR i and is word-for-word identical to
    RngStream(base_seed ^ i). All arithmetic happens on a uint64 state array;
    unsigned wraparound mod 2^64 is exactly the intended semantics.
    """

    def __init__(self, base_seed, n):
        assert 0 <= base_seed <= _MASK64 and n >= 1
        self.states = np.uint64(base_seed) ^ np.arange(n, dtype=np.uint64)

    def next_words(self):
        self.states = self.states + np.uint64(_PHI64)
        z = self.states.copy()
        z ^= z >> np.uint64(30)
        z *= np.uint64(_MIX1)
        z ^= z >> np.uint64(27)
        z *= np.uint64(_MIX2)
        z ^= z >> np.uint64(31)
        return z

    def uniform(self):
        return (self.next_words() >> np.uint64(11)) * _TWO_NEG53

    def normal(self, d):
        """(n_streams, d) standard normals, same word budget as the scalar path.

        The transcendental part runs through scalar libm on purpose: numpy's
        vectorized log/cos/sin differ from math.log/cos/sin by one ulp on
        rare inputs, which would silently break the bit-for-bit equivalence
        with RngStream that the twin tests rely on.
        """
        assert d >= 1
        n = self.states.shape[0]
        out = np.empty((n, d))
        for j in range((d + 1) // 2):
            u1 = 1.0 - self.uniform()
            u2 = self.uniform()
            second = 2 * j + 1 < d
            for i in range(n):
                r = math.sqrt(-2.0 * math.log(u1[i]))
                ang = 2.0 * math.pi * u2[i]
                out[i, 2 * j] = r * math.cos(ang)
                if second:
                    out[i, 2 * j + 1] = r * math.sin(ang)
        return out


@dataclass(frozen=True)
class ScheduleStep:
    """Parameters consumed by one update: x+ = x - gamma g - eta m+ with
    m+ = beta m + (1 - beta) g. theta is carried only by schedules that
    certify an accelerated rate."""

    k: int
    beta: float
    gamma: float
    eta: float
    theta: float | None = None


@dataclass
class RunState:
    """State between iterations. x is the current iterate x_k and m the
    momentum buffer m_{k-1} (zero vector before the first step). The optional
    slots hold auxiliary sequences when the caller asked to track them."""

    k: int
    x: np.ndarray
    m: np.ndarray
    w: np.ndarray | None = None
    v: np.ndarray | None = None
    y: np.ndarray | None = None
    xbar: np.ndarray | None = None
    g_prev: np.ndarray | None = None


# Fixed CSV schema. Optional cells are rendered empty, never as nan text.
TRACE_COLUMNS = (
    "k", "f_x", "f_w", "f_y", "grad_sq", "m_sq",
    "phi", "varphi", "bound", "resid_w", "resid_v",
)


@dataclass
class TraceRow:
    """One row of the trace file, keyed by iteration counter k."""

    k: int
    f_x: float
    grad_sq: float
    m_sq: float
    f_w: float | None = None
    f_y: float | None = None
    phi: float | None = None
    varphi: float | None = None
    bound: float | None = None
    resid_w: float | None = None
    resid_v: float | None = None

    def fields(self):
        return [getattr(self, name) for name in TRACE_COLUMNS]


def _fmt(value):
    if value is None:
        return ""
    v = float(value)
    if math.isnan(v):
        return ""
    return "%.17g" % v


def write_trace(path, columns):
    """Write a trace CSV with the fixed 11-column header.

    columns maps a subset of TRACE_COLUMNS to equal-length sequences; "k" and
    "f_x" are mandatory. Columns that were not tracked are written as empty
    cells so every trace parses against the same header. %.17g round-trips
    float64 exactly.
    """
    assert "k" in columns and "f_x" in columns
    n = len(columns["k"])
    for name in columns:
        assert name in TRACE_COLUMNS, name
        assert len(columns[name]) == n, name
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for i in range(n):
            row = []
            for name in TRACE_COLUMNS:
                if name == "k":
                    row.append(str(int(columns["k"][i])))
                elif name in columns:
                    row.append(_fmt(columns[name][i]))
                else:
                    row.append("")
            writer.writerow(row)


def read_trace(path):
    """Inverse of write_trace. Fully empty columns are dropped, isolated gaps
    come back as nan, and k is returned as an int64 array."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        assert tuple(header) == TRACE_COLUMNS, header
        cells = {name: [] for name in TRACE_COLUMNS}
        for row in reader:
            assert len(row) == len(TRACE_COLUMNS), row
            for name, cell in zip(TRACE_COLUMNS, row):
                cells[name].append(cell)
    out = {"k": np.array([int(c) for c in cells["k"]], dtype=np.int64)}
    for name in TRACE_COLUMNS[1:]:
        col = cells[name]
        if all(c == "" for c in col):
            continue
        out[name] = np.array([float(c) if c else math.nan for c in col])
    return out


def mean_traces(traces):
    """Columnwise mean across runs.

    Averages recorded values (function gaps, squared norms, residuals), never
    iterates; that distinction matters because f(mean x) != mean f(x). All
    inputs must share the k grid and the set of recorded columns.
    """
    assert len(traces) >= 1
    first = traces[0]
    keys = set(first)
    for tr in traces[1:]:
        assert set(tr) == keys, "traces disagree on recorded columns"
        assert np.array_equal(tr["k"], first["k"]), "traces disagree on k grid"
    out = {"k": first["k"].copy()}
    for name in sorted(keys - {"k"}):
        out[name] = np.mean([tr[name] for tr in traces], axis=0)
    return out

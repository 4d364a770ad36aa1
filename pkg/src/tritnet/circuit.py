"""Hardening soft networks into discrete circuits, and running them.

Hardening a ternary network rounds every neuron's truth-table values to
the nearest trit (ties away from zero) and stores the resulting gate
id. The mean squared rounding residue equals the commitment loss of
the soft network exactly, so a committed network loses nothing in the
discretization.

Hardening the binary baseline takes every neuron's argmax-probability
Boolean gate (ties to the lowest gate index) and embeds its 4-entry
table on the ternary grid: corner entries carry the Boolean outputs
mapped 0 -> -1, 1 -> +1, and entries with an UNKNOWN input take the
consensus of all Boolean completions, or UNKNOWN if they disagree. On
all-Boolean inputs the embedded circuit reproduces the Boolean circuit
bit for bit, since non-corner rows are never exercised.

Circuits evaluate by table lookup only; class predictions take the
argmax score with ties broken toward the lowest class index, and the
margin is the gap between the top two scores.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field

import numpy as np

from . import algebra
from .network import (
    BinaryNetwork,
    ConnectivityMap,
    GroupSumConfig,
    TernaryNetwork,
    boolean_gate_table,
    forward_binary,
    forward_soft,
)


@dataclass
class Circuit:
    """A discrete ternary gate circuit with a GroupSum head."""

    input_dim: int
    widths: tuple[int, ...]
    conn: ConnectivityMap
    gate_ids: list[np.ndarray]  # per layer, int64
    groupsum: GroupSumConfig
    provenance: dict = field(default_factory=dict)
    tables: list[np.ndarray] = field(default_factory=list)  # (w, 9) int8

    def __post_init__(self):
        if not self.tables:
            self.tables = [
                np.stack([np.array(algebra.decode_table(g), dtype=np.int8)
                          for g in ids])
                for ids in self.gate_ids
            ]

    @property
    def n_neurons(self) -> int:
        return sum(self.widths)

    def all_gate_ids(self) -> np.ndarray:
        return np.concatenate([np.asarray(g) for g in self.gate_ids])


def harden_network(net: TernaryNetwork, source_hash: str | None = None) -> Circuit:
    """Round every neuron of a ternary network to its nearest gate."""
    gate_ids = []
    tables = []
    for w in net.coeffs:
        tbl = algebra.round_table(w @ algebra.VANDERMONDE.T)
        tables.append(tbl)
        gate_ids.append(algebra.encode_tables(tbl))
    return Circuit(
        input_dim=net.input_dim,
        widths=net.widths,
        conn=net.conn,
        gate_ids=gate_ids,
        groupsum=net.groupsum,
        provenance={
            "arch": "ternary",
            "source_sha256": source_hash or "",
            "hardened_at": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
        },
        tables=tables,
    )


def _boolean_to_ternary_table(gate: int) -> np.ndarray:
    """Embed one Boolean gate on the ternary grid (consensus rule)."""
    bits = boolean_gate_table(gate)  # (a, b) in ((0,0), (0,1), (1,0), (1,1))

    def bool_out(a: int, b: int) -> int:
        return bits[2 * a + b]

    entries = np.zeros(9, dtype=np.int8)
    for g, (a, b) in enumerate(algebra.GRID_POINTS):
        a_opts = (0, 1) if a == 0 else ((a + 1) // 2,)
        b_opts = (0, 1) if b == 0 else ((b + 1) // 2,)
        outs = {bool_out(ai, bi) for ai in a_opts for bi in b_opts}
        entries[g] = 0 if len(outs) > 1 else 2 * outs.pop() - 1
    return entries


#: Ternary embeddings of the 16 Boolean gates, indexed by gate number.
BOOLEAN_EMBEDDINGS = np.stack([_boolean_to_ternary_table(k) for k in range(16)])


def harden_binary(net: BinaryNetwork, source_hash: str | None = None) -> Circuit:
    """Argmax-gate hardening of the baseline, embedded on trits."""
    gate_ids = []
    tables = []
    for logit in net.logits:
        best = logit.argmax(axis=1)  # first max wins, the lowest index
        tbl = BOOLEAN_EMBEDDINGS[best]
        tables.append(tbl.astype(np.int8))
        gate_ids.append(algebra.encode_tables(tbl))
    return Circuit(
        input_dim=net.input_dim,
        widths=net.widths,
        conn=net.conn,
        gate_ids=gate_ids,
        groupsum=net.groupsum,
        provenance={
            "arch": "binary",
            "source_sha256": source_hash or "",
            "hardened_at": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
        },
        tables=tables,
    )


def eval_circuit(circuit: Circuit, x):
    """Run trit inputs through the circuit by table lookup.

    Returns (outputs, scores, predictions, margins): the output-layer
    trits, GroupSum scores, argmax class (lowest index on ties) and the
    top-minus-second score margin. Accepts one vector or a batch.
    """
    x = np.asarray(x)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != circuit.input_dim:
        raise ValueError(f"expected {circuit.input_dim} inputs, got {x.shape[1]}")
    xi = x.astype(np.int64)
    if x.size and (np.any(xi != x) or xi.min() < -1 or xi.max() > 1):
        raise ValueError("circuit inputs must be trits in {-1, 0, +1}")
    h = xi
    for (s, t), tbl in zip(circuit.conn.layers, circuit.tables):
        idx = 3 * (h[:, s] + 1) + (h[:, t] + 1)
        h = tbl[np.arange(tbl.shape[0])[None, :], idx]
    outputs = h
    k, tau = circuit.groupsum.k, circuit.groupsum.tau
    group = circuit.widths[-1] // k
    scores = outputs.reshape(-1, k, group).sum(axis=2) / tau
    preds = scores.argmax(axis=1)
    top2 = -np.partition(-scores, 1, axis=1)[:, :2] if k >= 2 else None
    margins = top2[:, 0] - top2[:, 1]
    if single:
        return outputs[0], scores[0], int(preds[0]), float(margins[0])
    return outputs, scores, preds, margins


def hardening_error(net: TernaryNetwork) -> float:
    """Mean squared residue of rounding all truth tables to trits.

    Equals `training.commitment_loss` exactly; computed independently
    through the rounding path rather than the lattice-distance path.
    """
    total = 0.0
    for w in net.coeffs:
        tbl = w @ algebra.VANDERMONDE.T
        r = tbl - algebra.round_table(tbl)
        total += float((r * r).sum())
    return total / (9.0 * net.n_neurons)


@dataclass
class GapReport:
    """Soft-versus-hardened comparison on one evaluation set."""

    soft_accuracy: float
    circuit_accuracy: float
    gap_pp: float
    hardening_error: float
    unknown_fraction: float
    n_samples: int


def gap_report(net, circuit: Circuit, x_enc, y) -> GapReport:
    """Accuracy of the soft network and its hardened circuit.

    `x_enc` holds the encoded inputs in the architecture's own domain:
    trits for a ternary network, bits for the binary baseline (bits are
    mapped to the +-1 corners for the circuit pass). The gap is soft
    minus circuit accuracy in percentage points; unknown_fraction is
    the share of UNKNOWN trits among all output-neuron values.
    """
    x_enc = np.atleast_2d(np.asarray(x_enc))
    y = np.atleast_1d(np.asarray(y))
    if x_enc.shape[0] == 0:
        raise ValueError("cannot report on an empty dataset")
    if isinstance(net, TernaryNetwork):
        _, scores = forward_soft(net, x_enc.astype(float))
        x_circ = x_enc
        herr = hardening_error(net)
    elif isinstance(net, BinaryNetwork):
        _, scores = forward_binary(net, x_enc.astype(float))
        x_circ = 2 * x_enc.astype(np.int64) - 1
        herr = 0.0
    else:
        raise TypeError(f"unsupported network type {type(net).__name__}")
    soft_pred = scores.argmax(axis=1)
    outputs, _, circ_pred, _ = eval_circuit(circuit, x_circ)
    soft_acc = float((soft_pred == y).mean())
    circ_acc = float((circ_pred == y).mean())
    return GapReport(
        soft_accuracy=soft_acc,
        circuit_accuracy=circ_acc,
        gap_pp=100.0 * (soft_acc - circ_acc),
        hardening_error=herr,
        unknown_fraction=float((outputs == 0).mean()),
        n_samples=int(x_enc.shape[0]),
    )


def file_sha256(path) -> str:
    """Hex digest of a file's bytes, for provenance fields."""
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()

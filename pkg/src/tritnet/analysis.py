"""Circuit-level analyses: abstention, gate diversity, spectra, sweeps.

Selective prediction uses the GroupSum margin (top score minus second
score) as a confidence signal: UNKNOWN-heavy circuits produce genuinely
small margins on ambiguous inputs, so dropping low-margin samples
should raise accuracy on what remains. The coverage curve reports
accuracy at a grid of retention fractions and its mean over the grid as
an area-under-curve summary (stored positive; printed reports flip the
sign so that a lower printed value means a better curve, matching the
convention of risk-style tables).

Gate diversity summarizes how many distinct truth tables a circuit
actually uses. The effective diversity is exp of the Shannon entropy
(in nats) of the usage distribution, and the concentration Gini
coefficient uses the mean-absolute-difference form over usage counts
padded to the architecture's full gate vocabulary (3^9 ternary gates,
16 Boolean gates), so a circuit that leans on one gate scores close
to 1 and uniform usage of the whole vocabulary scores 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import algebra, fourier
from .circuit import Circuit, eval_circuit

TERNARY_VOCAB = algebra.N_GATES
BINARY_VOCAB = 16

DEFAULT_RETENTION_GRID = tuple(round(0.05 * i, 2) for i in range(20, 0, -1))


@dataclass
class CoverageCurve:
    """Accuracy at decreasing retention fractions, plus the mean AUC."""

    points: tuple[tuple[float, float], ...]  # (coverage, accuracy)
    auc: float
    n_samples: int

    def accuracy_at(self, coverage: float) -> float:
        for c, acc in self.points:
            if abs(c - coverage) < 1e-9:
                return acc
        raise KeyError(f"coverage {coverage} not on the retention grid")


def selective_curve(circuit: Circuit, x_enc, y,
                    retention_grid=DEFAULT_RETENTION_GRID) -> CoverageCurve:
    """Margin-ordered selective accuracy of a circuit.

    Samples are sorted by margin, descending, with ties kept in stable
    input order; at each retention fraction c the accuracy over the
    ceil(c * n) most confident samples is reported.
    """
    grid = tuple(float(c) for c in retention_grid)
    if not grid:
        raise ValueError("retention grid must not be empty")
    if any(not 0.0 < c <= 1.0 for c in grid):
        raise ValueError(f"retention fractions must lie in (0, 1]: {grid}")
    if any(b >= a for a, b in zip(grid, grid[1:])):
        raise ValueError("retention grid must be strictly decreasing")
    x_enc = np.atleast_2d(np.asarray(x_enc))
    y = np.atleast_1d(np.asarray(y))
    n = x_enc.shape[0]
    if n == 0:
        raise ValueError("cannot build a coverage curve on an empty dataset")
    _, _, preds, margins = eval_circuit(circuit, x_enc)
    order = np.argsort(-margins, kind="stable")
    correct = (preds == y)[order]
    cum = np.cumsum(correct)
    points = []
    for c in grid:
        kept = max(1, math.ceil(c * n))
        points.append((c, float(cum[kept - 1]) / kept))
    auc = float(np.mean([acc for _, acc in points]))
    return CoverageCurve(points=tuple(points), auc=auc, n_samples=n)


@dataclass
class DiversityReport:
    """How widely a circuit spreads over its gate vocabulary."""

    n_neurons: int
    vocab_size: int
    unique_gates: int
    effective_diversity: float
    gini: float
    redundancy: float
    max_copies: int
    singletons: int


def diversity_report(circuit: Circuit, vocab_size: int | None = None) -> DiversityReport:
    """Usage statistics of the distinct gates in a circuit.

    The vocabulary defaults to 3^9 for ternary-derived circuits and 16
    for circuits hardened from the binary baseline.
    """
    if vocab_size is None:
        arch = circuit.provenance.get("arch", "ternary")
        vocab_size = BINARY_VOCAB if arch == "binary" else TERNARY_VOCAB
    ids = circuit.all_gate_ids()
    n = ids.size
    _, counts = np.unique(ids, return_counts=True)
    u = counts.size
    if u > vocab_size:
        raise ValueError(f"{u} distinct gates exceed vocabulary {vocab_size}")
    p = counts / n
    entropy = float(-(p * np.log(p)).sum())
    # Gini over counts padded with the unused part of the vocabulary,
    # via the sorted-counts identity for the mean absolute difference.
    full = np.sort(np.concatenate([np.zeros(vocab_size - u), counts]))
    ranks = np.arange(1, vocab_size + 1)
    gini = float(2.0 * (ranks * full).sum() / (vocab_size * full.sum())
                 - (vocab_size + 1.0) / vocab_size)
    return DiversityReport(
        n_neurons=int(n),
        vocab_size=int(vocab_size),
        unique_gates=int(u),
        effective_diversity=float(np.exp(entropy)),
        gini=gini,
        redundancy=float(1.0 - u / n),
        max_copies=int(counts.max()),
        singletons=int((counts == 1).sum()),
    )


@dataclass
class SpectralProfile:
    """Aggregate spectral makeup of a circuit's distinct gates."""

    unique_gates: int
    pct_ternary: float  # share of gates not reducible to a Boolean gate
    class_shares: dict[str, float]  # LINEAR/BILINEAR/QUADRATIC/FULL
    band_shares: dict[str, float]  # mean normalized energy per degree band
    zero_energy_gates: int


def is_binary_equivalent(table: np.ndarray) -> bool:
    """True when the gate is a Boolean gate in disguise.

    The test restricts the table to the four Boolean corners: if none
    of them is UNKNOWN, Boolean signals pass through the gate exactly
    as through the corner-defined Boolean gate, and the five remaining
    entries are never exercised.
    """
    t = np.asarray(table)
    return bool((t[list(algebra.CORNER_INDICES)] != 0).all())


def spectral_profile(circuit: Circuit, tol: float = 1e-9) -> SpectralProfile:
    """Spectral classes and degree-band energies over distinct gates.

    Band shares are the mean of the per-gate normalized band vectors;
    gates with zero spectral energy (the all-UNKNOWN gate) are counted
    separately and excluded from that mean.
    """
    ids = np.unique(circuit.all_gate_ids())
    classes = {"LINEAR": 0, "BILINEAR": 0, "QUADRATIC": 0, "FULL": 0}
    band_names = ("const", "linear", "quad", "cubic", "quartic")
    band_sum = {name: 0.0 for name in band_names}
    n_ternary = 0
    zero_energy = 0
    for gid in ids:
        table = np.array(algebra.decode_table(int(gid)), dtype=float)
        fhat = fourier.fourier_transform(table)
        classes[fourier.spectral_class(fhat, tol)] += 1
        if not is_binary_equivalent(table):
            n_ternary += 1
        bands = fourier.spectral_energy_bands(fhat)
        if bands["total"] == 0.0:
            zero_energy += 1
        else:
            for name in band_names:
                band_sum[name] += bands[name]
    u = ids.size
    live = u - zero_energy
    return SpectralProfile(
        unique_gates=int(u),
        pct_ternary=100.0 * n_ternary / u if u else 0.0,
        class_shares={k: v / u if u else 0.0 for k, v in classes.items()},
        band_shares={k: v / live if live else 0.0 for k, v in band_sum.items()},
        zero_energy_gates=int(zero_energy),
    )


def spearman(x, y) -> float:
    """Spearman rank correlation with average ranks on ties."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("spearman expects two equal-length 1-D arrays")
    if x.size < 2:
        raise ValueError("need at least 2 points")

    def ranks(v):
        order = np.argsort(v, kind="stable")
        r = np.empty_like(v)
        r[order] = np.arange(1, v.size + 1, dtype=float)
        for val in np.unique(v):
            mask = v == val
            if mask.sum() > 1:
                r[mask] = r[mask].mean()
        return r

    rx, ry = ranks(x), ranks(y)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = math.sqrt(float((rx * rx).sum() * (ry * ry).sum()))
    if denom == 0.0:
        raise ValueError("rank variance is zero; correlation undefined")
    return float((rx * ry).sum() / denom)


# --------------------------------------------------------------- sweeps

def separation_sweep(seps, recipe, n_train: int = 2000, n_test: int = 500,
                     data_seed: int = 0) -> list[dict]:
    """Train both architectures on gaussians of growing separation.

    Returns one row per separation with the hardened test accuracy of
    each architecture, the UNKNOWN share of the ternary circuit and the
    closed-form optimal accuracy. A training failure is recorded in
    its row (key "error") without aborting the remaining rows.
    """
    from . import data as data_mod
    from . import pipeline
    from .training import NumericalFailure

    rows = []
    for sep in seps:
        full = data_mod.gen_dataset("gaussians", n_train + n_test, 0.0,
                                    data_seed, sep=float(sep))
        train_ds, test_ds = data_mod.split_dataset(full, n_train)
        row: dict = {"sep": float(sep),
                     "bayes_accuracy": data_mod.bayes_accuracy_gaussians(sep)}
        try:
            tern = pipeline.run_pipeline(
                train_ds, test_ds, pipeline.vary(recipe, arch="ternary"))
            row["ternary_accuracy"] = tern.gap.circuit_accuracy
            row["unknown_fraction"] = tern.gap.unknown_fraction
        except NumericalFailure as exc:
            row["error"] = f"ternary: {exc}"
        try:
            binr = pipeline.run_pipeline(
                train_ds, test_ds, pipeline.vary(recipe, arch="binary"))
            row["binary_accuracy"] = binr.gap.circuit_accuracy
        except NumericalFailure as exc:
            row["error"] = (row.get("error", "") + "; " if "error" in row
                            else "") + f"binary: {exc}"
        rows.append(row)
    return rows


def delta_sweep(deltas, recipe, train_ds, test_ds) -> list[dict]:
    """Ternary runs across dead-zone widths on a fixed dataset."""
    from . import data as data_mod
    from . import pipeline
    from .training import NumericalFailure

    rows = []
    for delta in deltas:
        r = pipeline.vary(recipe, arch="ternary", delta=float(delta))
        row: dict = {"delta": float(delta)}
        enc = data_mod.fit_encoder(train_ds.features, r.thresholds,
                                   r.delta, mode="ternary")
        row["encoder_unknown_share"] = data_mod.encoder_unknown_share(
            train_ds.features, enc)
        try:
            res = pipeline.run_pipeline(train_ds, test_ds, r)
            row["circuit_accuracy"] = res.gap.circuit_accuracy
            row["unknown_fraction"] = res.gap.unknown_fraction
        except NumericalFailure as exc:
            row["error"] = str(exc)
        rows.append(row)
    return rows


def resolution_sweep(threshold_counts, body_widths_per_row, recipe,
                     train_ds, test_ds) -> list[dict]:
    """Ternary runs across encoder resolutions with scaled widths.

    `threshold_counts` gives K per row; `body_widths_per_row` the body
    widths to use alongside each K (wider networks for finer inputs).
    """
    from . import pipeline
    from .training import NumericalFailure

    if len(threshold_counts) != len(body_widths_per_row):
        raise ValueError("need one width tuple per threshold count")
    rows = []
    for K, widths in zip(threshold_counts, body_widths_per_row):
        r = pipeline.vary(recipe, arch="ternary", thresholds=int(K),
                          body_widths=tuple(widths))
        row: dict = {"thresholds": int(K), "resolution": int(K) + 1,
                     "body_widths": list(widths),
                     "input_dim": train_ds.d * int(K)}
        try:
            res = pipeline.run_pipeline(train_ds, test_ds, r)
            row["circuit_accuracy"] = res.gap.circuit_accuracy
            row["unknown_fraction"] = res.gap.unknown_fraction
        except NumericalFailure as exc:
            row["error"] = str(exc)
        rows.append(row)
    return rows

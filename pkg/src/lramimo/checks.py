"""Randomized residual sweeps certifying the detector equivalences.

Each check draws random channel instances and compares two independently
computed routes to the same mathematical object: the successive
pseudo-inverse filters of the augmented reduced matrix on one side and
the closed-form correlated-estimation matrices on the other.  The sweep
maxima are the certification artifact; thresholds live with the callers.
"""

from dataclasses import dataclass

import numpy as np

from . import blast, estimate
from .equalize import le_zf_matrix, lra_le_mmse_matrix
from .lattice import lll_reduce, matrix_to_float

FF_TOL = 1e-9
FB_TOL = 1e-9
SCHUR_TOL = 1e-10
FAST_TOL = 1e-9
MMSE_FORMS_TOL = 1e-12


@dataclass(frozen=True)
class EquivalenceReport:
    """Worst-case residuals of one full sweep."""

    feedforward: float
    feedback: float
    order_mismatches: int
    schur: float
    fast_filters: float
    fast_order_mismatches: int
    mmse_le_forms: float

    def within(self) -> bool:
        return (
            self.feedforward <= FF_TOL
            and self.feedback <= FB_TOL
            and self.order_mismatches == 0
            and self.schur <= SCHUR_TOL
            and self.fast_filters <= FAST_TOL
            and self.fast_order_mismatches == 0
            and self.mmse_le_forms <= MMSE_FORMS_TOL
        )


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    scale = np.linalg.norm(b)
    if scale == 0.0:
        return float(np.linalg.norm(a - b))
    return float(np.linalg.norm(a - b) / scale)


def _draw_instance(rng, dims=(2, 3, 4), extra_rx=(0, 1, 2), snr_db_range=(0.0, 30.0), max_cond=None):
    """Random real channel, inverse-SNR weight, and its augmented reduction."""
    n_tx = int(rng.choice(dims))
    n_rx = n_tx + int(rng.choice(extra_rx))
    while True:
        h = rng.normal(size=(n_rx, n_tx))
        if max_cond is None or np.linalg.cond(h) <= max_cond:
            break
    snr_db = rng.uniform(*snr_db_range)
    zeta = 10.0 ** (-snr_db / 10.0)
    return h, zeta


def _augmented_reduction(h: np.ndarray, zeta: float):
    n_tx = h.shape[1]
    stacked = np.vstack([h, np.sqrt(zeta) * np.eye(n_tx)])
    rb = lll_reduce(stacked)
    zi = matrix_to_float(rb.unimodular_inv)
    reduced_obs = h @ zi
    reg = np.sqrt(zeta) * zi
    return rb, reduced_obs, reg


def check_dfe_equivalence(n_instances: int = 1000, seed: int = 20260823):
    """Augmented-matrix successive filters vs correlated-estimation forms.

    For every instance and every detection step compares the step
    feedforward matrix (pseudo-inverse route, observation columns only)
    and the step feedback matrix against their closed forms, and re-derives
    the detection order greedily from the sorting metric.

    Returns (max feedforward residual, max feedback residual,
    order mismatch count).
    """
    rng = np.random.default_rng(seed)
    worst_ff = 0.0
    worst_fb = 0.0
    mismatches = 0
    for _ in range(n_instances):
        h, zeta = _draw_instance(rng)
        n_rx, n_tx = h.shape
        rb, reduced_obs, reg = _augmented_reduction(h, zeta)
        stacked = np.vstack([reduced_obs, reg])
        fs = blast.vblast_sorted_factorization(stacked)
        perm = fs.perm
        obs_sorted = reduced_obs[:, perm]
        reg_sorted = reg[:, perm]
        for level in range(n_tx):
            sub = stacked[:, perm[level:]]
            step_pinv = le_zf_matrix(sub)
            ff_blast = step_pinv[:, :n_rx]
            ff_est = estimate.correlated_ff_matrix(obs_sorted, reg_sorted, level)
            worst_ff = max(worst_ff, _rel(ff_est, ff_blast))
            if level > 0:
                weights = step_pinv @ stacked[:, perm]
                fb_blast = weights[:, :level]
                fb_est = estimate.correlated_fb_matrix(reduced_obs, reg, perm, level)
                worst_fb = max(worst_fb, _rel(fb_est, fb_blast))
        if not np.array_equal(_greedy_order(reduced_obs, reg), perm):
            mismatches += 1
    return worst_ff, worst_fb, mismatches


def _greedy_order(reduced_obs: np.ndarray, reg: np.ndarray) -> np.ndarray:
    """Detection order re-derived from the estimation-side sorting metric."""
    remaining = list(range(reduced_obs.shape[1]))
    order = []
    while remaining:
        metric = estimate.sorting_metric(reduced_obs[:, remaining], reg[:, remaining], 0)
        k = int(np.argmin(metric))  # remaining ascending: ties pick lowest index
        order.append(remaining.pop(k))
    return np.array(order)


def random_unimodular(rng, n: int, n_ops: int = None, max_shear: int = 2) -> np.ndarray:
    """Product of random elementary integer operations; determinant +-1."""
    z = np.eye(n, dtype=object)
    for i in range(n):
        for j in range(n):
            z[i, j] = int(z[i, j])
    if n_ops is None:
        n_ops = 3 * n
    for _ in range(n_ops):
        kind = rng.integers(0, 3)
        i, j = rng.choice(n, size=2, replace=False) if n > 1 else (0, 0)
        if kind == 0 and n > 1:
            c = int(rng.integers(1, max_shear + 1)) * (1 if rng.random() < 0.5 else -1)
            z[i, :] = z[i, :] + c * z[j, :]
        elif kind == 1 and n > 1:
            tmp = z[i, :].copy()
            z[i, :] = z[j, :]
            z[j, :] = tmp
        else:
            z[i, :] = -z[i, :]
    return z


def check_schur_identity(n_instances: int = 1000, seed: int = 20260823, max_dim: int = 8) -> float:
    """Max residual of the conditional-precision identity over random bases."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_instances):
        n = int(rng.integers(1, max_dim + 1))
        z = random_unimodular(rng, n)
        symbol_var = float(rng.uniform(0.25, 2.0))
        zeta = 10.0 ** (-rng.uniform(0.0, 30.0) / 10.0)
        noise_var = zeta * symbol_var
        for level in range(n):
            worst = max(
                worst,
                estimate.schur_gramian_identity(z, zeta, symbol_var, noise_var, level),
            )
    return worst


def check_fast_vblast(n_instances: int = 500, seed: int = 20260823):
    """Fast correlated factorization vs the augmented reference path.

    Returns (max filter residual over F and B, permutation mismatch count).
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    mismatches = 0
    for _ in range(n_instances):
        h, zeta = _draw_instance(rng)
        rb, reduced_obs, reg = _augmented_reduction(h, zeta)
        stacked = np.vstack([reduced_obs, reg])
        ref = blast.vblast_sorted_factorization(stacked)
        fast = blast.fast_vblast_correlated(h, rb.unimodular, zeta)
        if not np.array_equal(ref.perm, fast.perm):
            mismatches += 1
            continue
        worst = max(worst, _rel(fast.feedforward, ref.feedforward))
        worst = max(worst, _rel(fast.feedback, ref.feedback))
    return worst, mismatches


def check_mmse_le_forms(n_instances: int = 1000, seed: int = 20260823) -> float:
    """Max pairwise residual among the three receive-matrix forms.

    Compares (C^T C + zeta Z^-T Z^-1)^-1 C^T, Z (H^T H + zeta I)^-1 H^T,
    and the optimum-estimator instantiation with white noise and data
    covariance symbol_var * Z Z^T.  Instances are kept numerically tame
    (condition cap) because the stated agreement is at working precision.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_instances):
        h, zeta = _draw_instance(rng, max_cond=30.0)
        if zeta < 1e-3:
            zeta = 1e-3
        rb, reduced_obs, reg = _augmented_reduction(h, zeta)
        zf = matrix_to_float(rb.unimodular)
        zi = matrix_to_float(rb.unimodular_inv)
        n_tx = h.shape[1]

        gram_direct = reduced_obs.T @ reduced_obs + zeta * (zi.T @ zi)
        form_direct = np.linalg.solve(gram_direct, reduced_obs.T)
        form_closed = lra_le_mmse_matrix(h, rb.unimodular, zeta)

        symbol_var = 1.0
        noise_var = zeta * symbol_var
        data_cov = symbol_var * (zf @ zf.T)
        info = np.linalg.inv(data_cov) + (reduced_obs.T @ reduced_obs) / noise_var
        form_estimator = np.linalg.solve(info, reduced_obs.T) / noise_var

        worst = max(worst, _rel(form_direct, form_closed))
        worst = max(worst, _rel(form_estimator, form_closed))
        worst = max(worst, _rel(form_estimator, form_direct))
    return worst


def equivalence_suite(n_instances: int = 1000, seed: int = 20260823) -> EquivalenceReport:
    """Run every check; fast path uses half the instances."""
    ff, fb, order_bad = check_dfe_equivalence(n_instances, seed)
    schur = check_schur_identity(n_instances, seed)
    fast, fast_bad = check_fast_vblast(max(1, n_instances // 2), seed)
    forms = check_mmse_le_forms(n_instances, seed)
    return EquivalenceReport(
        feedforward=ff,
        feedback=fb,
        order_mismatches=order_bad,
        schur=schur,
        fast_filters=fast,
        fast_order_mismatches=fast_bad,
        mmse_le_forms=forms,
    )

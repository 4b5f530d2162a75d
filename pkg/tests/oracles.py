"""Independent reference implementations used to freeze expected values.

Nothing here imports the package under test: the point is that every
numerical claim in the test suite is checked against a second, separately
written route (plain Python loops, high-precision arithmetic, or an
alternative matrix factorization).
"""

from __future__ import annotations

import math

import mpmath as mp
import numpy as np


def top_k_sort_oracle(full, k):
    """Full sort, ties broken by lower index; returns (values, indices)."""
    order = sorted(range(len(full)), key=lambda i: (-full[i], i))[:k]
    return [full[i] for i in order], order


def entropy_oracle_mp(values, eps, dps=50):
    """Softmax entropy with log(p + eps), evaluated at high precision."""
    with mp.workdps(dps):
        vals = [mp.mpf(repr(float(v))) for v in values]
        top = max(vals)
        exps = [mp.e ** (v - top) for v in vals]
        total = sum(exps)
        ps = [e / total for e in exps]
        h = -sum(p * mp.log(p + mp.mpf(repr(float(eps)))) for p in ps)
        return float(h)


def sigmoid_oracle_mp(x, dps=50):
    with mp.workdps(dps):
        return float(1 / (1 + mp.e ** (-mp.mpf(repr(float(x))))))


def alpha_oracle_mp(h, gap, *, h_0, d_0, s_h, s_d, alpha_max, dps=50):
    with mp.workdps(dps):
        arg = (mp.mpf(repr(float(h))) - h_0) / s_h - (mp.mpf(d_0) - mp.mpf(repr(float(gap)))) / s_d
        sig = 1 / (1 + mp.e ** (-arg))
        return float(1 + sig * (mp.mpf(repr(float(alpha_max))) - 1))


def softmax_oracle(values):
    values = np.asarray(values, dtype=np.float64)
    e = np.exp(values - values.max())
    return e / e.sum()


def exact_entropy_oracle(values):
    """Plain -sum(p log p) in float64 (no epsilon smoothing)."""
    p = softmax_oracle(values)
    return float(-(p * np.log(p)).sum())


def fd_entropy_gradient(values, step=1e-5):
    """Central finite differences of the exact softmax entropy."""
    values = np.asarray(values, dtype=np.float64)
    grad = np.zeros_like(values)
    for i in range(values.size):
        bumped_up = values.copy()
        bumped_up[i] += step
        bumped_down = values.copy()
        bumped_down[i] -= step
        grad[i] = (exact_entropy_oracle(bumped_up) - exact_entropy_oracle(bumped_down)) / (
            2.0 * step
        )
    return grad


def descent_oracle(values, steps, learning_rate):
    """Independently coded plain gradient descent on softmax entropy."""
    v = [float(x) for x in values]
    for _ in range(steps):
        top = max(v)
        exps = [math.exp(x - top) for x in v]
        total = sum(exps)
        p = [e / total for e in exps]
        h = -sum(pi * math.log(pi) for pi in p)
        g = [-pi * (math.log(pi) + h) for pi in p]
        v = [x - learning_rate * gi for x, gi in zip(v, g)]
    top = max(v)
    exps = [math.exp(x - top) for x in v]
    total = sum(exps)
    p = [e / total for e in exps]
    return v, -sum(pi * math.log(pi) for pi in p)


def gram_projector_oracle(centered_matrix, m, svd_tol):
    """Projector from the top-m eigenvectors of the k-by-k Gram matrix.

    Returns (projector, singular_values, m_eff); None when degenerate.
    This goes through an eigendecomposition of Z~.T @ Z~, a completely
    different numerical route from a thin SVD of Z~.
    """
    z = np.asarray(centered_matrix, dtype=np.float64)
    gram = z.T @ z
    eigenvalues, eigenvectors = np.linalg.eigh(gram)
    eigenvalues = eigenvalues[::-1]
    eigenvectors = eigenvectors[:, ::-1]
    singular = np.sqrt(np.clip(eigenvalues, 0.0, None))
    if singular.size == 0 or singular[0] < svd_tol:
        return None
    rank = int(np.count_nonzero(singular >= svd_tol * singular[0]))
    m_eff = min(m, z.shape[0], z.shape[1], rank)
    basis = eigenvectors[:, :m_eff]
    return basis @ basis.T, singular[:m_eff], m_eff


def straight_line_reference(value_rows, config):
    """One-function transcription of the whole gated rescaling recipe.

    ``value_rows`` is the per-step top-k value vectors in stream order;
    ``config`` is a plain dict with keys window, rank, h_thres, alpha_max,
    gamma, s_h, s_d, h_0, d_0, epsilon, svd_tol.  Returns one diagnostics
    dict per step plus the adjusted vector, forming the full k-by-k
    projector explicitly (tests only).
    """
    window = config["window"]
    rows: list[np.ndarray] = []
    out = []
    for step, raw in enumerate(value_rows):
        z = np.asarray(raw, dtype=np.float64)
        rows.append(z.copy())
        if len(rows) > window:
            rows.pop(0)
        p = softmax_oracle(z)
        entropy_pre = float(-(p * np.log(p + config["epsilon"])).sum())
        gap = math.inf if z.size == 1 else float(z[0] - z[1])
        fired = False
        alpha = m_eff = singular = None
        adjusted = z
        entropy_post = entropy_pre
        if entropy_pre > config["h_thres"] and len(rows) >= 2:
            stacked = np.asarray(rows)
            centered = stacked - stacked.mean(axis=0)
            _, s, vt = np.linalg.svd(centered, full_matrices=False)
            if s.size and s[0] >= config["svd_tol"]:
                rank = int(np.count_nonzero(s >= config["svd_tol"] * s[0]))
                m_eff = min(config["rank"], stacked.shape[0], stacked.shape[1], rank)
                basis = vt[:m_eff].T
                projector = basis @ basis.T
                argument = (entropy_pre - config["h_0"]) / config["s_h"] - (
                    config["d_0"] - gap
                ) / config["s_d"]
                alpha = float(1.0 + (1.0 / (1.0 + math.exp(-argument))) * (config["alpha_max"] - 1.0))
                # gamma*z + (alpha-gamma)*Pz == gamma*(z - Pz) + alpha*Pz
                adjusted = config["gamma"] * z + (alpha - config["gamma"]) * (projector @ z)
                rows[-1] = adjusted.copy()
                p_post = softmax_oracle(adjusted)
                entropy_post = float(-(p_post * np.log(p_post + config["epsilon"])).sum())
                singular = [float(x) for x in s[:m_eff]]
                fired = True
        out.append(
            {
                "step": step,
                "entropy_pre": entropy_pre,
                "gap": gap,
                "gate_fired": fired,
                "alpha": alpha,
                "m_eff": m_eff,
                "singular_values": singular,
                "entropy_post": entropy_post,
                "adjusted": adjusted.tolist(),
            }
        )
    return out

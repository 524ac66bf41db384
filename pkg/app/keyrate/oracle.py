"""
Density-matrix model of the router's GHZ measurement.

Each party k shares a depolarized Bell pair (retained qubit r_k, stored qubit
s_k) with the router. The router applies CNOTs from A's stored qubit onto every
B_i's stored qubit, a Hadamard on A's stored qubit, and reads all stored qubits
in Z. The parties then correct with Z^{m_a} on A and X^{m_bi} on B_i. Registers
are ordered with party A as the most significant bit.
"""
from __future__ import annotations

import functools
from typing import Sequence, Tuple

import numpy as np

MAX_ORACLE_PARTIES = 5

_PHI_PLUS = np.array([1.0, 0.0, 0.0, 1.0]) / np.sqrt(2.0)
_HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)


def depolarized_bell(f: float) -> np.ndarray:
    """F |Phi+><Phi+| + (1-F)/3 (I - |Phi+><Phi+|), basis (retained, stored)."""
    proj = np.outer(_PHI_PLUS, _PHI_PLUS)
    return f * proj + (1.0 - f) / 3.0 * (np.eye(4) - proj)


@functools.lru_cache(maxsize=8)
def stored_unitary(n: int) -> np.ndarray:
    d = 2 ** n
    b_mask = d // 2 - 1
    perm = np.zeros((d, d))
    for x in range(d):
        a = (x >> (n - 1)) & 1
        perm[x ^ (b_mask if a else 0), x] = 1.0
    return np.kron(_HADAMARD, np.eye(d // 2)) @ perm


def _product_state(fids: Sequence[float]) -> np.ndarray:
    n = len(fids)
    rho = functools.reduce(np.kron, [depolarized_bell(f) for f in fids])
    # kron order is (r0, s0, r1, s1, ...); regroup to (r0..r_{n-1}, s0..s_{n-1})
    axes = [2 * k for k in range(n)] + [2 * k + 1 for k in range(n)]
    t = rho.reshape((2,) * (4 * n)).transpose(axes + [2 * n + a for a in axes])
    return t.reshape(4 ** n, 4 ** n)


def circuit_density(fids: Sequence[float]) -> np.ndarray:
    """Retained N-qubit state after measurement and correction, averaged over outcomes."""
    n = len(fids)
    if not 2 <= n <= MAX_ORACLE_PARTIES:
        raise ValueError(f"circuit oracle supports 2..{MAX_ORACLE_PARTIES} parties, got {n}")
    d = 2 ** n
    u = np.kron(np.eye(d), stored_unitary(n))
    rho = u @ _product_state(fids) @ u.T
    blocks = rho.reshape(d, d, d, d)  # (r, s, r', s')

    idx = np.arange(d)
    a_sign = np.where((idx >> (n - 1)) & 1, -1.0, 1.0)
    out = np.zeros((d, d))
    for m in range(d):
        flip = idx ^ (m & (d // 2 - 1))
        b = blocks[:, m, :, m][np.ix_(flip, flip)]
        if (m >> (n - 1)) & 1:
            b = a_sign[:, None] * b * a_sign[None, :]
        out += b
    return out


# -------------------------
# GHZ basis readout
# -------------------------

def ghz_weights(rho: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """<GHZ_i^+|rho|GHZ_i^+> and <GHZ_i^-|rho|GHZ_i^-> for i = 0 .. 2^(N-1)-1."""
    d = rho.shape[0]
    i = np.arange(d // 2)
    j = i ^ (d - 1)
    diag = rho[i, i] + rho[j, j]
    cross = rho[i, j] + rho[j, i]
    return (diag + cross) / 2.0, (diag - cross) / 2.0


def ghz_diagonal_density(plus: Sequence[float], minus: Sequence[float]) -> np.ndarray:
    plus, minus = np.asarray(plus, dtype=float), np.asarray(minus, dtype=float)
    d = 2 * plus.size
    rho = np.zeros((d, d))
    for i in range(plus.size):
        j = i ^ (d - 1)
        s, t = (plus[i] + minus[i]) / 2.0, (plus[i] - minus[i]) / 2.0
        rho[i, i] = rho[j, j] = s
        rho[i, j] = rho[j, i] = t
    return rho


def offdiagonal_weight(rho: np.ndarray) -> float:
    """Largest entry of rho outside its GHZ-diagonal part."""
    plus, minus = ghz_weights(rho)
    return float(np.max(np.abs(rho - ghz_diagonal_density(plus, minus))))


def x_expectation(rho: np.ndarray) -> float:
    d = rho.shape[0]
    idx = np.arange(d)
    return float(rho[idx, idx ^ (d - 1)].sum())


def zz_expectation(rho: np.ndarray, b_index: int) -> float:
    """<Z_A Z_Bi> for B_i = b_index (1-based party position)."""
    d = rho.shape[0]
    n = d.bit_length() - 1
    idx = np.arange(d)
    parity = ((idx >> (n - 1)) ^ (idx >> (n - 1 - b_index))) & 1
    return float(np.dot(rho.diagonal(), 1.0 - 2.0 * parity))

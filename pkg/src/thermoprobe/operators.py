"""Dense operators on one and two qubits.

Basis convention: sigma_z |0> = +|0>, so |0> is the upper level of
H = omega sigma_z / 2 and |1> the lower one. Two-qubit kets are ordered
|00>, |01>, |10>, |11> with the first label belonging to qubit 1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
# lowers |0> (upper level) to |1>
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.conj().T

KET_0 = np.array([1, 0], dtype=complex)
KET_1 = np.array([0, 1], dtype=complex)
KET_PLUS = (KET_0 + KET_1) / np.sqrt(2)

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10


class InvalidStateError(ValueError):
    pass


def tensor(*ops):
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, op)
    return out


def embed(op, qubit: int, n_qubits: int = 2):
    """Place a single-qubit operator on ``qubit`` (1-based)."""
    factors = [IDENTITY] * n_qubits
    factors[qubit - 1] = op
    return tensor(*factors)


def projector(ket):
    ket = np.asarray(ket, dtype=complex)
    return np.outer(ket, ket.conj())


def partial_trace(rho, keep: int):
    """Reduced state of qubit ``keep`` (1 or 2) of a two-qubit operator."""
    rho = np.asarray(rho)
    if rho.shape != (4, 4):
        raise ValueError(f"partial_trace expects a 4x4 matrix, got {rho.shape}")
    r = rho.reshape(2, 2, 2, 2)
    if keep == 1:
        return np.einsum("ijkj->ik", r)
    if keep == 2:
        return np.einsum("ijil->jl", r)
    raise ValueError(f"keep must be 1 or 2, got {keep}")


def partial_trace_many(rhos, keep: int):
    """partial_trace over a leading stack axis."""
    rhos = np.asarray(rhos)
    r = rhos.reshape(rhos.shape[:-2] + (2, 2, 2, 2))
    if keep == 1:
        return np.einsum("...ijkj->...ik", r)
    if keep == 2:
        return np.einsum("...ijil->...jl", r)
    raise ValueError(f"keep must be 1 or 2, got {keep}")


def check_density_matrix(rho, psd_tol: float = 1e-9):
    """Raise InvalidStateError unless rho is a valid density matrix."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidStateError("density matrix must be square")
    if np.max(np.abs(rho - rho.conj().T)) > HERMITICITY_TOL:
        raise InvalidStateError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > TRACE_TOL:
        raise InvalidStateError(f"trace is {np.trace(rho).real:.12g}, not 1")
    lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if lam[0] < -psd_tol:
        raise InvalidStateError(f"negative eigenvalue {lam[0]:.3e}")
    return rho


def gibbs_state(h, beta: float):
    energies, vecs = np.linalg.eigh(h)
    w = np.exp(-beta * (energies - energies.min()))
    w /= w.sum()
    return (vecs * w) @ vecs.conj().T


@dataclass(frozen=True)
class JumpDecomposition:
    """Coupling operator split by Bohr frequency, sorted by frequency."""

    frequencies: tuple[float, ...]
    operators: tuple[np.ndarray, ...]

    def __iter__(self):
        return iter(zip(self.frequencies, self.operators))

    def __len__(self):
        return len(self.frequencies)

    def at(self, omega: float, tol: float = 1e-12):
        for w, op in self:
            if abs(w - omega) <= tol:
                return op
        raise KeyError(omega)

    def total(self):
        return sum(self.operators)


def jump_decompose(h, a, eigensystem=None, merge_tol: float = 1e-10) -> JumpDecomposition:
    """Split ``a`` into eigen-operators A(w) with [H, A(w)] = -w A(w).

    A(w) = sum over eps_m - eps_n = w of |n><n| a |m><m|. Gaps closer than
    merge_tol * max|eps| are merged; blocks with no weight are dropped.
    ``eigensystem`` may supply (energies, column eigenvectors) directly.
    """
    h = np.asarray(h, dtype=complex)
    a = np.asarray(a, dtype=complex)
    if eigensystem is None:
        if np.max(np.abs(h - h.conj().T)) > HERMITICITY_TOL:
            raise ValueError("Hamiltonian is not Hermitian")
        try:
            energies, vecs = np.linalg.eigh(h)
        except np.linalg.LinAlgError as exc:
            raise RuntimeError("eigensolver did not converge") from exc
    else:
        energies, vecs = (np.asarray(x) for x in eigensystem)

    scale = max(float(np.max(np.abs(energies))), 1.0)
    tol = merge_tol * scale
    a_eig = vecs.conj().T @ a @ vecs
    gaps = energies[None, :] - energies[:, None]  # gaps[n, m] = eps_m - eps_n

    flat = sorted(gaps.ravel())
    groups: list[list[float]] = []
    for g in flat:
        if groups and abs(g - groups[-1][-1]) <= tol:
            groups[-1].append(g)
        else:
            groups.append([g])

    a_norm = max(np.max(np.abs(a)), 1e-300)
    freqs, ops = [], []
    for grp in groups:
        lo, hi = grp[0] - tol / 2, grp[-1] + tol / 2
        mask = (gaps >= lo) & (gaps <= hi)
        block = np.where(mask, a_eig, 0.0)
        if np.max(np.abs(block)) <= 1e-14 * a_norm:
            continue
        # midpoint keeps w(-group) == -w(group) exactly
        w = 0.5 * (grp[0] + grp[-1])
        if abs(w) <= tol:
            w = 0.0
        freqs.append(w)
        ops.append(vecs @ block @ vecs.conj().T)
    return JumpDecomposition(tuple(freqs), tuple(ops))

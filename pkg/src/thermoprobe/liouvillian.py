"""Generators of the open qubit dynamics.

Every builder goes through the same Bloch-Redfield assembly: each coupling
channel (a qubit operator coupled to one bath) is split into eigen-operators of
a reference Hamiltonian, and every retained frequency pair (w, w') of two
channels attached to the same bath contributes

    rate * (A(w) rho A(w')^+ - 1/2 {A(w')^+ A(w), rho})

together with a Lamb-shift term S * A(w')^+ A(w). Baths are mutually
uncorrelated, so local baths never produce inter-qubit terms.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np

from .bath import BathLabel, BathSpec, half_fourier
from .operators import (
    KET_0,
    KET_1,
    KET_PLUS,
    SIGMA_X,
    SIGMA_Z,
    JumpDecomposition,
    check_density_matrix,
    embed,
    jump_decompose,
    projector,
    tensor,
)

LOCAL_FORM_MAX_K = 0.05  # in units of omega2


class InitialState(str, Enum):
    """Named preparations; kets use the |0>, |1> labels of ``operators``."""

    SINGLE_EXCITED = "1"
    EXCITED_EXCITED = "11"
    PLUS_PLUS = "++"


class SecularMode(str, Enum):
    PARTIAL = "partial"
    FULL = "full"


class CoefficientScheme(str, Enum):
    REDFIELD = "redfield"
    UNIFIED = "unified"


@dataclass(frozen=True)
class ApproximationVariant:
    """How the Bloch-Redfield generator is truncated.

    ``secular_cutoff`` defaults to 0.1 times the smallest qubit frequency.
    Under the unified scheme all pairs inside a cluster of mutually close
    frequencies share the rate evaluated at the cluster mean.
    """

    secular: SecularMode = SecularMode.PARTIAL
    coefficients: CoefficientScheme = CoefficientScheme.REDFIELD
    lamb_shift: bool = True
    secular_cutoff: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "secular", SecularMode(self.secular))
        object.__setattr__(self, "coefficients", CoefficientScheme(self.coefficients))
        if self.secular_cutoff is not None and self.secular_cutoff < 0:
            raise ValueError("secular_cutoff must be non-negative")

    def cutoff_for(self, smallest_frequency: float) -> float:
        if self.secular_cutoff is not None:
            return self.secular_cutoff
        return 0.1 * smallest_frequency


@dataclass(frozen=True)
class SystemSpec:
    """One qubit (omega2 is None) or two qubits with exchange coupling k."""

    omega1: float = 1.0
    omega2: float | None = None
    k: float = 0.0
    baths: tuple[BathSpec, ...] = ()
    initial_state: object = None

    def __post_init__(self):
        object.__setattr__(self, "baths", tuple(self.baths))
        if not self.omega1 > 0:
            raise ValueError("omega1 must be positive")
        if self.omega2 is not None:
            if not self.omega2 > 0:
                raise ValueError("omega2 must be positive")
            if self.omega1 < self.omega2:
                raise ValueError("qubit 1 must have the larger frequency (omega1 >= omega2)")
        if self.k < 0:
            raise ValueError("k must be non-negative")
        if isinstance(self.initial_state, str):
            object.__setattr__(self, "initial_state", InitialState(self.initial_state))
        labels = [b.label for b in self.baths]
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate bath labels")

    @property
    def n_qubits(self) -> int:
        return 1 if self.omega2 is None else 2

    @property
    def dim(self) -> int:
        return 2 ** self.n_qubits

    def initial_density_matrix(self) -> np.ndarray:
        """rho(0): |1> for one qubit and |+>|+> for two unless set otherwise."""
        state = self.initial_state
        if state is None:
            state = InitialState.SINGLE_EXCITED if self.n_qubits == 1 else InitialState.PLUS_PLUS
        if isinstance(state, InitialState):
            if len(state.value) != self.n_qubits:
                raise ValueError(f"initial state {state.value!r} needs {len(state.value)} qubit(s)")
            kets = {"0": KET_0, "1": KET_1, "+": KET_PLUS}
            return projector(tensor(*(kets[c] for c in state.value)))
        rho = np.asarray(state, dtype=complex)
        if rho.shape != (self.dim, self.dim):
            raise ValueError(f"custom initial state has shape {rho.shape}")
        return check_density_matrix(rho)

    def bath(self, label) -> BathSpec:
        label = BathLabel(label)
        for b in self.baths:
            if b.label == label:
                return b
        raise KeyError(f"no bath {label.value!r} in system")

    def with_beta(self, label, beta: float) -> "SystemSpec":
        label = BathLabel(label)
        self.bath(label)
        baths = tuple(dataclasses.replace(b, beta=beta) if b.label == label else b
                      for b in self.baths)
        return dataclasses.replace(self, baths=baths)


@dataclass(frozen=True, eq=False)
class JumpTerm:
    omega_left: float
    omega_right: float
    op_left: np.ndarray
    op_right: np.ndarray
    rate: complex
    bath: BathLabel
    channel_left: str = ""
    channel_right: str = ""

    def apply(self, rho):
        l, r = self.op_left, self.op_right
        rd = r.conj().T
        rdl = rd @ l
        return self.rate * (l @ rho @ rd - 0.5 * (rdl @ rho + rho @ rdl))


@dataclass(frozen=True, eq=False)
class LiouvillianModel:
    dim: int
    bare_hamiltonian: np.ndarray
    lamb_shift_hamiltonian: np.ndarray
    jump_terms: tuple[JumpTerm, ...]
    variant: ApproximationVariant
    secular_cutoff: float = 0.0
    form: str = "single"

    @property
    def hamiltonian(self):
        if self.variant.lamb_shift:
            return self.bare_hamiltonian + self.lamb_shift_hamiltonian
        return self.bare_hamiltonian

    def apply(self, rho):
        """Direct, term-by-term action of the generator on rho."""
        h = self.hamiltonian
        out = -1j * (h @ rho - rho @ h)
        for term in self.jump_terms:
            out = out + term.apply(rho)
        return out

    @cached_property
    def superoperator(self):
        return _superop(self)


# --------------------------------------------------------------------------
# assembly


@dataclass(frozen=True, eq=False)
class _Channel:
    name: str
    operator: np.ndarray
    coupling: float
    bath: BathSpec = field(repr=False)


def _clusters(freqs, cutoff, secular: SecularMode):
    """Map each frequency to the mean of its cluster of mutually close ones."""
    freqs = sorted(set(freqs))
    if secular is SecularMode.FULL:
        return {w: w for w in freqs}
    groups: list[list[float]] = []
    for w in freqs:
        if groups and w - groups[-1][-1] < cutoff:
            groups[-1].append(w)
        else:
            groups.append([w])
    rep = {}
    for grp in groups:
        mean = math.fsum(grp) / len(grp)
        if abs(mean) < 1e-14:
            mean = 0.0
        for w in grp:
            rep[w] = mean
    return rep


def _retained(w1, w2, cutoff, secular: SecularMode) -> bool:
    if secular is SecularMode.FULL:
        return w1 == w2
    return abs(w1 - w2) < cutoff


def _assemble(h_bare, h_ref, channels, variant, cutoff, eigensystem=None, form=""):
    dim = h_bare.shape[0]
    h_ls = np.zeros((dim, dim), dtype=complex)
    terms: list[JumpTerm] = []

    by_bath: dict[BathLabel, list[_Channel]] = {}
    for ch in channels:
        if ch.coupling != 0.0:
            by_bath.setdefault(ch.bath.label, []).append(ch)

    for label, chans in by_bath.items():
        bath = chans[0].bath
        pieces = []
        for ch in chans:
            dec: JumpDecomposition = jump_decompose(h_ref, ch.operator, eigensystem=eigensystem)
            pieces.extend((ch, w, op) for w, op in dec)
        rep = _clusters([w for _, w, _ in pieces], cutoff, variant.secular)
        unified = variant.coefficients is CoefficientScheme.UNIFIED

        for ch_l, w_l, a_l in pieces:
            for ch_r, w_r, a_r in pieces:
                if not _retained(w_l, w_r, cutoff, variant.secular):
                    continue
                mu = ch_l.coupling * ch_r.coupling
                if unified:
                    g = half_fourier(rep[w_l], bath.beta, bath.spectral)
                    rate = complex(mu * g.gamma)
                    shift = complex(mu * g.s)
                else:
                    g_l = half_fourier(w_l, bath.beta, bath.spectral).complex
                    g_r = half_fourier(w_r, bath.beta, bath.spectral).complex
                    rate = mu * (g_l + g_r.conjugate())
                    shift = mu * (g_l - g_r.conjugate()) / 2j
                terms.append(JumpTerm(w_l, w_r, a_l, a_r, rate, label, ch_l.name, ch_r.name))
                h_ls += shift * (a_r.conj().T @ a_l)

    if np.max(np.abs(h_ls - h_ls.conj().T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(h_ls))):
        raise RuntimeError("Lamb-shift Hamiltonian is not Hermitian")
    h_ls = 0.5 * (h_ls + h_ls.conj().T)
    # the trace part only adds a global phase
    h_ls -= np.trace(h_ls).real / dim * np.eye(dim)
    return LiouvillianModel(
        dim=dim,
        bare_hamiltonian=np.asarray(h_bare, dtype=complex),
        lamb_shift_hamiltonian=h_ls,
        jump_terms=tuple(terms),
        variant=variant,
        secular_cutoff=cutoff,
        form=form,
    )


def _qubit_channels(bath: BathSpec, qubits, n_qubits):
    out = []
    for q in qubits:
        out.append(_Channel(f"x{q}", embed(SIGMA_X, q, n_qubits) if n_qubits > 1 else SIGMA_X,
                            bath.mu_x, bath))
        out.append(_Channel(f"z{q}", embed(SIGMA_Z, q, n_qubits) if n_qubits > 1 else SIGMA_Z,
                            bath.mu_z, bath))
    return out


def _bath_qubits(label: BathLabel):
    return {BathLabel.COMMON: (1, 2), BathLabel.LOCAL1: (1,), BathLabel.LOCAL2: (2,)}[label]


def build_single_qubit(spec: SystemSpec, bath: BathSpec | None = None,
                       variant: ApproximationVariant | None = None) -> LiouvillianModel:
    """Qubit H = omega1 sigma_z / 2 in one bath: emission, absorption and
    dephasing dissipators plus H_LS = s0 sigma_z / 2."""
    if spec.n_qubits != 1:
        raise ValueError("build_single_qubit needs a one-qubit SystemSpec")
    variant = variant or ApproximationVariant()
    if bath is None:
        if len(spec.baths) != 1:
            raise ValueError("single qubit takes exactly one bath")
        bath = spec.baths[0]
    h = 0.5 * spec.omega1 * SIGMA_Z
    channels = _qubit_channels(bath, (1,), 1)
    cutoff = variant.cutoff_for(spec.omega1)
    return _assemble(h, h, channels, variant, cutoff, form="single")


def _two_qubit_hamiltonians(spec: SystemSpec):
    h0 = 0.5 * spec.omega1 * embed(SIGMA_Z, 1) + 0.5 * spec.omega2 * embed(SIGMA_Z, 2)
    hk = spec.k * embed(SIGMA_X, 1) @ embed(SIGMA_X, 2)
    return h0, h0 + hk


def _two_qubit_channels(spec: SystemSpec):
    channels = []
    for bath in spec.baths:
        channels.extend(_qubit_channels(bath, _bath_qubits(bath.label), 2))
    return channels


def build_two_qubit_local(spec: SystemSpec, variant: ApproximationVariant | None = None
                          ) -> LiouvillianModel:
    """Local-form generator: single-qubit jump operators, valid for k << omega2."""
    if spec.n_qubits != 2:
        raise ValueError("build_two_qubit_local needs a two-qubit SystemSpec")
    if spec.k > LOCAL_FORM_MAX_K * spec.omega2:
        raise ValueError(
            f"k={spec.k} exceeds the local-form bound {LOCAL_FORM_MAX_K}*omega2; "
            "use build_global"
        )
    variant = variant or ApproximationVariant()
    h0, h = _two_qubit_hamiltonians(spec)
    cutoff = variant.cutoff_for(spec.omega2)
    return _assemble(h, h0, _two_qubit_channels(spec), variant, cutoff, form="local")


@dataclass(frozen=True)
class DressedSystem:
    """Eigensystem of the exchange-coupled pair.

    Columns of ``vectors`` are |a>, |b>, |c>, |d> in ascending energy:
    |a> = -sin(t)|00> + cos(t)|11>,  |b> = -sin(p)|01> + cos(p)|10>,
    |c> =  cos(p)|01> + sin(p)|10>,  |d> =  cos(t)|00> + sin(t)|11>,
    with tan 2t = 2k/(w1+w2), tan 2p = 2k/(w1-w2).
    """

    energies: np.ndarray
    vectors: np.ndarray
    theta: float
    phi: float
    omega_I: float
    omega_II: float
    omega_III: float
    omega_IV: float


def dressed_eigensystem(omega1: float, omega2: float, k: float) -> DressedSystem:
    w_plus, w_minus = omega1 + omega2, omega1 - omega2
    r_plus = math.sqrt(w_plus * w_plus + 4 * k * k)
    r_minus = math.sqrt(w_minus * w_minus + 4 * k * k)
    theta = 0.5 * math.atan2(2 * k, w_plus)
    phi = 0.5 * math.atan2(2 * k, w_minus)
    ct, st, cp, sp = math.cos(theta), math.sin(theta), math.cos(phi), math.sin(phi)
    # basis |00>, |01>, |10>, |11>
    a = np.array([-st, 0, 0, ct], dtype=complex)
    b = np.array([0, -sp, cp, 0], dtype=complex)
    c = np.array([0, cp, sp, 0], dtype=complex)
    d = np.array([ct, 0, 0, st], dtype=complex)
    energies = np.array([-r_plus / 2, -r_minus / 2, r_minus / 2, r_plus / 2])
    gaps = np.diff(energies)
    if np.min(gaps) <= 1e-12 * r_plus:
        raise ValueError("dressed spectrum is degenerate")
    return DressedSystem(
        energies=energies,
        vectors=np.column_stack([a, b, c, d]),
        theta=theta,
        phi=phi,
        omega_I=0.5 * (r_plus + r_minus),
        omega_II=0.5 * (r_plus - r_minus),
        omega_III=r_plus,
        omega_IV=r_minus,
    )


def build_global(spec: SystemSpec, variant: ApproximationVariant | None = None) -> LiouvillianModel:
    """Generator for directly coupled qubits with jump operators between
    dressed eigenstates of the full two-qubit Hamiltonian."""
    if spec.n_qubits != 2:
        raise ValueError("build_global needs a two-qubit SystemSpec")
    if not spec.k > 0:
        raise ValueError("build_global requires k > 0")
    variant = variant or ApproximationVariant()
    _, h = _two_qubit_hamiltonians(spec)
    dressed = dressed_eigensystem(spec.omega1, spec.omega2, spec.k)
    cutoff = variant.cutoff_for(spec.omega2)
    return _assemble(h, h, _two_qubit_channels(spec), variant, cutoff,
                     eigensystem=(dressed.energies, dressed.vectors), form="global")


def build_model(spec: SystemSpec, variant: ApproximationVariant | None = None,
                form: str = "auto") -> LiouvillianModel:
    """Pick the builder: single qubit, local form for k = 0, global otherwise."""
    if spec.n_qubits == 1:
        return build_single_qubit(spec, variant=variant)
    if form == "auto":
        form = "local" if spec.k == 0 else "global"
    if form == "local":
        return build_two_qubit_local(spec, variant)
    if form == "global":
        return build_global(spec, variant)
    raise ValueError(f"unknown form {form!r}")


def toggle_lamb_shift(model: LiouvillianModel, on: bool) -> LiouvillianModel:
    variant = dataclasses.replace(model.variant, lamb_shift=on)
    return dataclasses.replace(model, variant=variant)


# --------------------------------------------------------------------------
# superoperator


def _spre(a):
    return np.kron(np.eye(a.shape[0]), a)


def _spost(a):
    return np.kron(a.T, np.eye(a.shape[0]))


def _superop(model: LiouvillianModel):
    h = model.hamiltonian
    sup = -1j * (_spre(h) - _spost(h))
    for t in model.jump_terms:
        rd = t.op_right.conj().T
        rdl = rd @ t.op_left
        sup = sup + t.rate * (np.kron(t.op_right.conj(), t.op_left)
                              - 0.5 * (_spre(rdl) + _spost(rdl)))
    return sup


def superop_matrix(model: LiouvillianModel):
    """Column-stacking matrix of rho -> -i[H, rho] + D[rho]."""
    return model.superoperator


def vec(rho):
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v, dim: int):
    return np.asarray(v).reshape(dim, dim, order="F")


def kossakowski_blocks(model: LiouvillianModel):
    """Coefficient matrix of each bath over its (channel, frequency) operators."""
    out = {}
    for label in {t.bath for t in model.jump_terms}:
        terms = [t for t in model.jump_terms if t.bath == label]
        keys = sorted({(t.channel_left, t.omega_left) for t in terms}
                      | {(t.channel_right, t.omega_right) for t in terms})
        index = {key: i for i, key in enumerate(keys)}
        mat = np.zeros((len(keys), len(keys)), dtype=complex)
        for t in terms:
            mat[index[(t.channel_left, t.omega_left)],
                index[(t.channel_right, t.omega_right)]] = t.rate
        out[label] = (keys, mat)
    return out

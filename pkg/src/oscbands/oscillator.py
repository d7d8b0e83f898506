"""Quantum side: Hermite-basis assembly, diagonalization, cluster detection.

The operator is (1/2)(-hbar^2 Laplacian + |x|^2 - hbar*n) + hbar^2 V with the
ground-state energy subtracted, so the unperturbed levels sit at hbar*j with
multiplicity C(n+j-1, n-1).  Position operators are assembled from ladder
matrices x_i = sqrt(hbar/2)(a_i + a_i^dagger); matrix elements of polynomial
potentials are exact (products are taken on an enlarged ladder and cropped),
which keeps the truncation variational.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .averaging import Potential
from .phasepoly import DimensionMismatchError

DEFAULT_TRUST_FRACTION = 0.6


class ClusterOverlapError(RuntimeError):
    """Eigenvalues strayed too far from the unperturbed ladder; hbar is not
    in the clustering regime (or V is too large on the trusted window)."""


class TrustWindowError(RuntimeError):
    pass


@dataclass(frozen=True)
class BasisSpec:
    """Hermite basis |k|, |k| <= J, with a trusted sub-window."""

    dim: int
    hbar: float
    J: int
    J_trust: int | None = None

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise DimensionMismatchError("matrix backend supports dim 1 and 2 only")
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")
        if self.J < 4:
            raise ValueError("basis too small")
        if self.J_trust is None:
            object.__setattr__(self, "J_trust", int(DEFAULT_TRUST_FRACTION * self.J))
        if not (0 < self.J_trust < self.J):
            raise ValueError("need 0 < J_trust < J")

    def check_buffer(self, v_degree: int, safety: int = 2):
        if self.J - self.J_trust < max(1, v_degree) * safety:
            raise TrustWindowError(
                f"trust buffer J-J_trust={self.J - self.J_trust} below "
                f"deg(V)*{safety}={v_degree * safety}")

    @property
    def trusted_max_energy(self) -> float:
        return self.hbar * (self.J_trust + 0.5)

    def size(self) -> int:
        if self.dim == 1:
            return self.J + 1
        return (self.J + 1) * (self.J + 2) // 2


def basis_for_energy(dim: int, hbar: float, emax: float,
                     trust_fraction: float = DEFAULT_TRUST_FRACTION,
                     buffer: int = 16) -> BasisSpec:
    """Smallest basis whose trusted window covers energies up to emax."""
    j_trust = int(math.ceil(emax / hbar))
    J = int(math.ceil((j_trust + buffer) / trust_fraction))
    return BasisSpec(dim=dim, hbar=hbar, J=J, J_trust=j_trust + buffer // 2)


# ----------------------------------------------------------------------
# matrix assembly

def position_matrix(size: int, hbar: float) -> np.ndarray:
    """<j|x|k> on the first `size` ladder states."""
    m = np.zeros((size, size))
    for j in range(size - 1):
        m[j, j + 1] = m[j + 1, j] = math.sqrt(hbar * (j + 1) / 2.0)
    return m


def position_power_matrices(size: int, hbar: float, max_power: int) -> list[np.ndarray]:
    """Exact <j|x^m|k> for j,k < size, m <= max_power (computed on an
    enlarged ladder so cropped products are exact)."""
    big = position_matrix(size + max_power, hbar)
    out = [np.eye(size + max_power)]
    for _ in range(max_power):
        out.append(out[-1] @ big)
    return [m[:size, :size].copy() for m in out]


def simplex_basis(J: int) -> list[tuple[int, int]]:
    return [(k1, t - k1) for t in range(J + 1) for k1 in range(t + 1)]


def assemble_hamiltonian(v: Potential, basis: BasisSpec) -> np.ndarray:
    """Dense symmetric matrix of the perturbed oscillator on the basis."""
    if v.dim != basis.dim:
        raise DimensionMismatchError("potential/basis dimension mismatch")
    if not v.is_polynomial():
        raise ValueError("matrix assembly needs a polynomial potential")
    deg = max(v.degree(), 0)
    basis.check_buffer(deg)
    hbar = basis.hbar

    if basis.dim == 1:
        size = basis.J + 1
        xp = position_power_matrices(size, hbar, deg)
        m = np.diag(hbar * np.arange(size, dtype=float))
        for (a,), c in v.terms.items():
            m += (hbar ** 2 * c) * xp[a]
    else:
        states = simplex_basis(basis.J)
        size = len(states)
        k1 = np.array([s[0] for s in states])
        k2 = np.array([s[1] for s in states])
        xp = position_power_matrices(basis.J + 1, hbar, deg)
        m = np.diag(hbar * (k1 + k2).astype(float))
        ix1 = np.ix_(k1, k1)
        ix2 = np.ix_(k2, k2)
        for (a1, a2), c in v.terms.items():
            m += (hbar ** 2 * c) * (xp[a1][ix1] * xp[a2][ix2])

    asym = np.max(np.abs(m - m.T))
    scale = max(np.max(np.abs(m)), 1e-300)
    if asym > 1e-13 * scale:
        raise ArithmeticError(f"assembled matrix asymmetric: {asym:.3e}")
    return 0.5 * (m + m.T)


def quadratic_exact_spectrum(c1: float, c2: float, n: int, hbar: float,
                             j_max: int) -> np.ndarray:
    """Closed-form levels for V = c1*|x|^2 + c2, ground state subtracted:
    hbar*sqrt(1+2*hbar^2*c1)*(j + n/2) - hbar*n/2 + hbar^2*c2, repeated with
    multiplicity C(n+j-1, n-1), j = 0..j_max, sorted ascending."""
    disc = 1.0 + 2.0 * hbar ** 2 * c1
    if disc <= 0:
        raise ValueError("effective frequency is not positive")
    omega = math.sqrt(disc)
    vals = []
    for j in range(j_max + 1):
        e = hbar * omega * (j + n / 2.0) - hbar * n / 2.0 + hbar ** 2 * c2
        vals.extend([e] * math.comb(n + j - 1, n - 1))
    return np.sort(np.array(vals))


def eigensolve(m: np.ndarray, check_residual: bool = False,
               sym_tol: float = 1e-12) -> np.ndarray:
    """Ascending spectrum of a real symmetric matrix (LAPACK dense solver)."""
    m = np.asarray(m, dtype=float)
    scale = max(np.max(np.abs(m)), 1e-300)
    if np.max(np.abs(m - m.T)) > sym_tol * scale:
        raise ArithmeticError("input matrix is not symmetric within tolerance")
    if not check_residual:
        return np.linalg.eigvalsh(m)
    vals, vecs = np.linalg.eigh(m)
    idx = np.linspace(0, len(vals) - 1, min(8, len(vals))).astype(int)
    for i in idx:
        res = np.linalg.norm(m @ vecs[:, i] - vals[i] * vecs[:, i])
        if res > 1e-10 * scale:
            raise ArithmeticError(f"eigenpair residual {res:.3e} too large")
    return vals


# ----------------------------------------------------------------------
# spectra and clusters

@dataclass
class SpectralData:
    basis: BasisSpec
    eigenvalues: np.ndarray
    trusted_max_energy: float

    def trusted(self) -> np.ndarray:
        return self.eigenvalues[self.eigenvalues <= self.trusted_max_energy]

    def to_json_dict(self) -> dict:
        return {"dim": self.basis.dim, "hbar": self.basis.hbar,
                "J": self.basis.J, "J_trust": self.basis.J_trust,
                "trusted_max_energy": self.trusted_max_energy,
                "eigenvalues": [float(e) for e in self.eigenvalues]}


def split_separable(v: Potential) -> tuple[Potential, Potential] | None:
    """(V1(x1), V2(x2)) if V = V1 + V2 in dim 2, else None."""
    if v.dim != 2 or not v.is_polynomial():
        return None
    t1, t2 = {}, {}
    for (a1, a2), c in v.terms.items():
        if a1 and a2:
            return None
        if a2 == 0:
            t1[(a1,)] = c
        else:
            t2[(a2,)] = c
    return Potential(1, t1), Potential(1, t2)


try:
    from scipy.linalg import eigvals_banded as _eigvals_banded
except ImportError:  # pragma: no cover
    _eigvals_banded = None

_BANDED_MIN_SIZE = 700


def _banded_hamiltonian_1d(v: Potential, hbar: float, size: int) -> np.ndarray:
    """Upper-band storage of the 1-D Hamiltonian (exact matrix elements).

    Band products are taken on an enlarged ladder and cropped, as in the
    dense path.  Returns ab with ab[bw - d, d:] = diagonal d.
    """
    deg = max(v.degree(), 1)
    big = size + deg
    # diagonals stored as zero-padded length-`big` arrays: vec[i] = A[i, i+d]
    off = np.sqrt(hbar * np.arange(1, big) / 2.0)
    up = np.zeros(big)
    up[: big - 1] = off
    lo = np.zeros(big)
    lo[1:] = off
    xband = {1: up, -1: lo}

    def band_mul(a: dict, b: dict) -> dict:
        out: dict[int, np.ndarray] = {}
        for da, va in a.items():
            for db, vb in b.items():
                d = da + db
                if abs(d) >= big:
                    continue
                # C[i, i+d] += A[i, i+da] * B[i+da, (i+da)+db]
                shifted = np.zeros(big)
                if da >= 0:
                    shifted[: big - da] = vb[da:]
                else:
                    shifted[-da:] = vb[: big + da]
                tgt = out.setdefault(d, np.zeros(big))
                tgt += va * shifted
        return {d: vec for d, vec in out.items() if np.any(vec)}

    # accumulate hbar^2 * V(x) in band form
    acc: dict[int, np.ndarray] = {}
    power: dict[int, np.ndarray] = {0: np.ones(big)}
    by_power = {a[0]: c for a, c in v.terms.items()}
    for m in range(0, deg + 1):
        c = by_power.get(m)
        if c is not None:
            for d, vec in power.items():
                tgt = acc.setdefault(d, np.zeros(big))
                tgt += (hbar ** 2 * c) * vec
        if m < deg:
            power = band_mul(power, xband)
    acc.setdefault(0, np.zeros(big))
    acc[0][:size] += hbar * np.arange(size, dtype=float)

    bw = max((abs(d) for d in acc), default=0)
    ab = np.zeros((bw + 1, size))
    for d in range(bw + 1):
        diag = acc.get(d)
        if diag is not None:
            ab[bw - d, d:size] = diag[: size - d]
    return ab


def spectrum_1d(v: Potential, hbar: float, J: int) -> np.ndarray:
    size = J + 1
    if _eigvals_banded is not None and size >= _BANDED_MIN_SIZE:
        ab = _banded_hamiltonian_1d(v, hbar, size)
        return np.sort(_eigvals_banded(ab, lower=False))
    basis = BasisSpec(dim=1, hbar=hbar, J=J, J_trust=J - max(2 * max(v.degree(), 1), 8))
    return eigensolve(assemble_hamiltonian(v, basis))


def compute_spectrum(v: Potential, basis: BasisSpec,
                     force_dense: bool = False) -> SpectralData:
    """Spectrum of the perturbed oscillator on the trusted window.

    Separable 2-D potentials take a box-truncated fast path (two 1-D
    problems, eigenvalues are all pairwise sums); everything else is dense
    on the total-degree simplex.  Both are variational truncations of the
    same operator and agree on trusted windows.
    """
    cutoff = basis.trusted_max_energy
    if basis.dim == 2 and not force_dense:
        parts = split_separable(v)
        if parts is not None:
            v1, v2 = parts
            e1 = spectrum_1d(v1, basis.hbar, basis.J)
            e2 = spectrum_1d(v2, basis.hbar, basis.J)
            keep = cutoff + basis.hbar
            e1 = e1[e1 <= keep - min(0.0, e2[0])]
            sums = (e1[:, None] + e2[None, :]).ravel()
            sums = np.sort(sums[sums <= keep])
            return SpectralData(basis=basis, eigenvalues=sums,
                                trusted_max_energy=cutoff)
    vals = eigensolve(assemble_hamiltonian(v, basis))
    return SpectralData(basis=basis, eigenvalues=vals,
                        trusted_max_energy=cutoff)


@dataclass
class Cluster:
    j: int
    energies: np.ndarray
    shifts: np.ndarray


@dataclass
class ClusterSet:
    hbar: float
    dim: int
    clusters: list[Cluster] = field(default_factory=list)

    def get(self, j: int) -> Cluster:
        for c in self.clusters:
            if c.j == j:
                return c
        raise KeyError(f"no trusted cluster at level {j}")

    def max_deviation(self) -> float:
        return max((np.max(np.abs(c.energies - self.hbar * c.j))
                    for c in self.clusters if len(c.energies)), default=0.0)

    def margin_factor(self) -> float:
        dev = self.max_deviation()
        return math.inf if dev == 0 else (self.hbar / 2.0) / dev

    def counts(self) -> dict[int, int]:
        return {c.j: len(c.energies) for c in self.clusters}

    def to_json_dict(self) -> dict:
        return {"hbar": self.hbar, "dim": self.dim,
                "clusters": [{"j": c.j,
                              "energies": [float(e) for e in c.energies],
                              "shifts": [float(s) for s in c.shifts]}
                             for c in self.clusters]}

    def to_csv_rows(self) -> list[tuple]:
        rows = [("j", "k", "energy", "shift")]
        for c in self.clusters:
            for k, (e, s) in enumerate(zip(c.energies, c.shifts)):
                rows.append((c.j, k, float(e), float(s)))
        return rows


def detect_clusters(data: SpectralData, margin: float = 0.1) -> ClusterSet:
    """Assign each trusted eigenvalue E to the nearest ladder level j and
    record the band shift mu = (E - hbar*j)/hbar^2.

    Fails loudly when any deviation reaches hbar/4 (the measured clustering
    condition) or hbar/2*(1-margin), whichever is stricter.
    """
    hbar = data.basis.hbar
    evs = data.trusted()
    threshold = min(hbar / 4.0, (hbar / 2.0) * (1.0 - margin))
    groups: dict[int, list[float]] = {}
    for e in evs:
        j = int(round(e / hbar))
        dev = abs(e - hbar * j)
        if dev >= threshold:
            raise ClusterOverlapError(
                f"eigenvalue {e:.6g} deviates {dev:.3g} >= {threshold:.3g} from "
                f"level {j} (hbar={hbar:g}); not in the clustering regime")
        groups.setdefault(j, []).append(float(e))
    clusters = []
    for j in sorted(groups):
        es = np.array(sorted(groups[j]))
        clusters.append(Cluster(j=j, energies=es,
                                shifts=(es - hbar * j) / hbar ** 2))
    return ClusterSet(hbar=hbar, dim=data.basis.dim, clusters=clusters)


def cluster_width_scan(v: Potential, energy: float, hbars: list[float],
                       trust_fraction: float = DEFAULT_TRUST_FRACTION,
                       window: float = 0.2,
                       force_dense: bool = False) -> list[float]:
    """max |E_{j,k} - hbar*j| over clusters with centers within
    `window`*energy of `energy`, for each hbar (un-normalized widths)."""
    widths = []
    for hbar in hbars:
        basis = basis_for_energy(v.dim, hbar, energy * (1.0 + window),
                                 trust_fraction=trust_fraction)
        clusters = detect_clusters(compute_spectrum(v, basis, force_dense=force_dense))
        lo, hi = energy * (1.0 - window), energy * (1.0 + window)
        w = 0.0
        for c in clusters.clusters:
            center = hbar * c.j
            if lo <= center <= hi and len(c.energies):
                w = max(w, float(np.max(np.abs(c.energies - center))))
        widths.append(w)
    return widths

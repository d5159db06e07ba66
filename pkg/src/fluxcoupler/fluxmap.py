"""Flux-landscape analysis: the two-qubit sweet-spot contour, the coupler
off position, effective two-qubit parameters, and the ZZ-cancellation
landscape.

Conventions.  The sweet-spot contour at a given coupler flux is the qubit
flux pair making the |1100> - |0000> transition energy stationary; this is
the simultaneous extremum of both qubit transitions, where the residual
transverse matrix elements Omega_a, Omega_b vanish.  (Minimizing the
absolute |1100> energy instead lands ~5e-4 Phi0 away, where the
transition picks up tens of kHz of spurious ZZ through the
Omega-dependent channel; the transition objective is what keeps the
landscape's ZZ at the sub-kHz level.)  J's sign comes from the
positive-diagonal phase convention of the one-excitation block, which
makes the dressed splitting f_01 - f_10 grow with J at positive bare
detuning.
"""

import csv
import json
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .circuit import FluxPoint
from .errors import LabelingError, LandscapeError
from .spectrum import LabeledSpectrum, diagonalize, zz_strength
from .operators import product_index

TRUST_REGION = (0.4, 0.6)

_TARGETS = ((0, 0, 0, 0), (1, 0, 0, 0), (0, 1, 0, 0), (1, 1, 0, 0))


@dataclass(frozen=True)
class ContourPoint:
    """One solved contour point; gradient_norm is the remaining gradient of
    the minimized transition energy in GHz per Phi0."""

    flux: FluxPoint
    gradient_norm: float


@dataclass(frozen=True)
class EffectiveParams:
    """Two-qubit effective model at one flux point.

    omega_a, omega_b: qubit 01 frequencies (MHz); Omega_a, Omega_b: residual
    flux-displacement transverse coefficients (MHz); j: XX coupling (MHz);
    zeta: full-model ZZ strength (kHz).
    """

    omega_a: float
    omega_b: float
    Omega_a: float
    Omega_b: float
    j: float
    zeta: float


def _labeled_energies(model, flux, k=12, min_overlap=0.3):
    """Spectrum with just the four computational labels assigned.

    Each target label goes to the eigenstate with the largest squared
    overlap against its bare product vector; stray higher states stay
    unlabeled, so an ambiguous coupler excitation cannot poison the
    landscape scan.
    """
    spec = diagonalize(model.hamiltonian(flux), k)
    dims = model.keep
    w = np.abs(spec.vectors[[product_index(lab, dims)
                             for lab in _TARGETS], :]) ** 2
    # greedy over (target, eigenstate) pairs so a strongly hybridized pair
    # (e.g. 50/50 dressed one-excitation states at large J) still splits
    # into distinct assignments
    order = sorted(((w[t, i], t, i) for t in range(len(_TARGETS))
                    for i in range(w.shape[1])), reverse=True)
    labels = [None] * len(spec.energies)
    overlaps = np.zeros(len(spec.energies))
    placed = {}
    for ov, t, i in order:
        if t in placed or labels[i] is not None:
            continue
        labels[i] = _TARGETS[t]
        overlaps[i] = ov
        placed[t] = ov
        if len(placed) == len(_TARGETS):
            break
    worst = min(placed.values())
    if len(placed) < len(_TARGETS) or worst < min_overlap:
        raise LabelingError(
            f"computational labels unresolved at {flux} "
            f"(worst overlap {worst:.3f})")
    return LabeledSpectrum(energies=spec.energies, vectors=spec.vectors,
                           dims=dims, labels=labels, overlaps=overlaps)


def _transition_objective(model, phi_c):
    """Objective g(phi_a, phi_b) = E_1100 - E_0000 at fixed coupler flux."""

    def g(pa, pb):
        spec = _labeled_energies(model, FluxPoint(pa, pb, phi_c))
        return spec.energy_of((1, 1, 0, 0)) - spec.energy_of((0, 0, 0, 0))

    return g


def _newton2d(g, x0, y0, h=2e-4, tol=1e-8, max_iter=40, clip=0.01):
    """Damped 2-D Newton descent on a 9-point finite-difference stencil.

    Falls back to scaled steepest descent when the local Hessian is not
    positive definite, and backtracks on the objective value while the
    gradient is still large (near convergence the value differences drop
    below float resolution, so pure Newton takes over).  Returns
    (x, y, gradient_norm); raises LandscapeError when an iterate leaves
    the trust region or the gradient will not come down.
    """
    x, y = x0, y0
    for _ in range(max_iter):
        if not (TRUST_REGION[0] <= x <= TRUST_REGION[1]
                and TRUST_REGION[0] <= y <= TRUST_REGION[1]):
            raise LandscapeError(
                f"contour search left trust region at ({x:.4f}, {y:.4f})")
        s = np.empty((3, 3))
        for i, dx in enumerate((-h, 0.0, h)):
            for j, dy in enumerate((-h, 0.0, h)):
                s[i, j] = g(x + dx, y + dy)
        gx = (s[2, 1] - s[0, 1]) / (2 * h)
        gy = (s[1, 2] - s[1, 0]) / (2 * h)
        gnorm = float(np.hypot(gx, gy))
        if gnorm < tol:
            return x, y, gnorm
        gxx = (s[2, 1] - 2 * s[1, 1] + s[0, 1]) / h**2
        gyy = (s[1, 2] - 2 * s[1, 1] + s[1, 0]) / h**2
        gxy = (s[2, 2] - s[2, 0] - s[0, 2] + s[0, 0]) / (4 * h**2)
        det = gxx * gyy - gxy * gxy
        if det > 0 and gxx > 0:
            step = np.linalg.solve(np.array([[gxx, gxy], [gxy, gyy]]),
                                   -np.array([gx, gy]))
        else:
            scale = max(abs(gxx), abs(gyy), gnorm / clip)
            step = -np.array([gx, gy]) / scale
        norm = float(np.hypot(*step))
        if norm > clip:
            step *= clip / norm
        # value-based backtracking only while the expected decrease clears
        # the eigensolver noise floor (~1e-12 GHz)
        if gnorm > 1e-3:
            for shrink in (1.0, 0.5, 0.25, 0.125):
                trial = (x + shrink * step[0], y + shrink * step[1])
                try:
                    if g(*trial) < s[1, 1]:
                        x, y = trial
                        break
                except LabelingError:
                    continue
            else:
                raise LandscapeError(
                    f"contour step failed to reduce the objective at "
                    f"({x:.5f}, {y:.5f}), gradient {gnorm:.2e} GHz/Phi0")
        else:
            x, y = x + step[0], y + step[1]
    if gnorm < 1e-7:
        return x, y, gnorm
    raise LandscapeError(
        f"contour gradient stalled at {gnorm:.2e} GHz/Phi0 "
        f"(needs < 1e-7) near ({x:.5f}, {y:.5f})")


def _contour_guess(model, phi_c):
    """Warm-start qubit fluxes from the minus mode's ground-state phase.

    The qubit feels an effective flux offset of <phi_minus>/2 through the
    shared inductance, so the classical compensation point sits at
    0.5 +/- <phi_minus>/(4 pi), antisymmetric between the qubits.
    """
    shift = model.minus_mode(phi_c).phi[0, 0] / (4.0 * np.pi)
    return 0.5 + shift, 0.5 - shift


def sweet_spot_contour(model, phi_c, warm_start=None):
    """Contour points over one coupler flux or a grid of them.

    Walks the grid in order, continuing from the previous solution; the
    first point (or a cold call) starts from the minus-mode phase guess,
    trying both its sign options.  Returns a list of ContourPoint.
    """
    phis = np.atleast_1d(np.asarray(phi_c, dtype=float))
    points = []
    prev = warm_start
    for pc in phis:
        g = _transition_objective(model, pc)

        def try_g(pa, pb):
            try:
                return g(pa, pb)
            except LabelingError:
                return np.inf

        # candidate starts: the previous solution (continuation) and the
        # minus-mode analytic guess in both mirror orientations (the
        # phase-convention sign of <phi_minus> is basis-dependent); pick
        # whichever candidate starts lowest.  A candidate so far off that
        # labeling fails is certainly wrong.
        ga, gb = _contour_guess(model, pc)
        candidates = [(ga, gb), (gb, ga)]
        if prev is not None:
            candidates.insert(0, prev)
        scored = sorted((try_g(*c), c) for c in candidates)
        if not np.isfinite(scored[0][0]):
            raise LandscapeError(
                f"no labelable contour start found at phi_c={pc}")
        start = scored[0][1]
        x, y, gnorm = _newton2d(g, start[0], start[1])
        points.append(ContourPoint(FluxPoint(x, y, pc), gnorm))
        prev = (x, y)
    return points


def _loewdin_block(spec, model, labels):
    """Symmetrically orthogonalized effective block over the given labels.

    Projects the labeled dressed states onto their bare product vectors and
    returns the hermitian matrix (GHz) whose eigenvalues are the dressed
    energies.  Column phases are fixed by making the overlap diagonal
    positive, which pins the sign of off-diagonal couplings.
    """
    dims = model.keep
    idx = [product_index(lab, dims) for lab in labels]
    cols = [spec.labels.index(tuple(lab)) for lab in labels]
    m = spec.vectors[np.ix_(idx, cols)].astype(float)
    m = m * np.sign(np.diag(m))[None, :]
    u, s, vt = np.linalg.svd(m)
    t = u @ vt                                    # closest orthogonal frame
    e = spec.energies[cols]
    block = t @ np.diag(e) @ t.T
    return 0.5 * (block + block.T)


def extract_effective_params(model, flux, k=12):
    """Effective two-qubit parameters at one flux point.

    omega_mu and J come from the one-excitation Loewdin block referenced to
    the ground state; Omega_mu from the ground-to-one-excitation block of
    the same construction (the sigma_x coefficient a qubit-flux
    displacement turns on); zeta from the four computational levels.
    """
    spec = _labeled_energies(model, flux, k=k)
    e00 = spec.energy_of((0, 0, 0, 0))

    one_exc = _loewdin_block(spec, model, [(1, 0, 0, 0), (0, 1, 0, 0)])
    omega_a = (one_exc[0, 0] - e00) * 1e3
    omega_b = (one_exc[1, 1] - e00) * 1e3
    j = one_exc[0, 1] * 1e3

    ga = _loewdin_block(spec, model, [(0, 0, 0, 0), (1, 0, 0, 0)])
    gb = _loewdin_block(spec, model, [(0, 0, 0, 0), (0, 1, 0, 0)])
    return EffectiveParams(
        omega_a=omega_a, omega_b=omega_b,
        Omega_a=ga[0, 1] * 1e3, Omega_b=gb[0, 1] * 1e3,
        j=j, zeta=zz_strength(spec))


def find_off_position(model, bracket=(0.2, 0.45), tol=1e-6):
    """Coupler flux where the XX coupling J crosses zero along the contour.

    Scans the bracket for a sign change of J, bisects it to `tol` in flux,
    and returns the full FluxPoint on the contour.  The returned point also
    minimizes the |1100> transition energy along the contour (the level
    repulsion through J vanishes there).  Raises LandscapeError when no
    interior crossing exists in [0, 0.5].
    """
    lo, hi = bracket

    def j_at(pc, warm):
        pt = sweet_spot_contour(model, pc, warm_start=warm)[0]
        eff = extract_effective_params(model, pt.flux)
        return eff.j, (pt.flux.phi_a, pt.flux.phi_b), pt

    j_lo, warm_lo, _ = j_at(lo, None)
    j_hi, warm_hi, _ = j_at(hi, warm_lo)
    if j_lo * j_hi > 0:
        # widen over the full physical window before giving up
        grid = np.linspace(0.02, 0.48, 8)
        js = []
        warm = None
        for pc in grid:
            val, warm, _ = j_at(pc, warm)
            js.append(val)
        sign_change = [(grid[i], grid[i + 1]) for i in range(len(js) - 1)
                       if js[i] * js[i + 1] <= 0]
        if not sign_change:
            raise LandscapeError(
                "no interior J zero crossing in coupler flux [0, 0.5]")
        lo, hi = sign_change[0]
        j_lo, warm_lo, _ = j_at(lo, warm)
    warm = warm_lo
    point = None
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        j_mid, warm, point = j_at(mid, warm)
        if j_lo * j_mid <= 0:
            hi = mid
        else:
            lo, j_lo = mid, j_mid
    if point is None:
        _, warm, point = j_at(0.5 * (lo + hi), warm)
    return point.flux


def coupling_slope(model, phi_c, h=2e-3, warm_start=None):
    """dJ/dphi_c along the contour, in MHz per Phi0."""
    pts = sweet_spot_contour(model, [phi_c - h, phi_c + h],
                             warm_start=warm_start)
    j = [extract_effective_params(model, p.flux).j for p in pts]
    return (j[1] - j[0]) / (2 * h)


def phi_s_rows(inner, outer, steps):
    """Mirrored antisymmetric-shift rows: +/- linspace(inner, outer, steps)."""
    side = np.linspace(inner, outer, steps)
    return np.concatenate([-side[::-1], side])


def cancellation_offset(model, off_flux, span=5e-5):
    """Antisymmetric qubit-flux shift that zeroes zeta_tot at the off point.

    Brackets and bisects the full-model ZZ along the phi_s direction about
    the off position; the root sits within ~1e-5 Phi0 of the contour, where
    the shift-linear ZZ channel cancels the small contour residual.
    """
    pa, pb, pc = off_flux.phi_a, off_flux.phi_b, off_flux.phi_c

    def zeta(s):
        spec = _labeled_energies(model, FluxPoint(pa + s, pb - s, pc))
        return zz_strength(spec)

    lo, hi = -span, span
    zlo, zhi = zeta(lo), zeta(hi)
    if zlo * zhi > 0:
        raise LandscapeError(
            f"zeta_tot does not change sign within +/-{span} Phi0 "
            f"of the off position")
    return float(scipy.optimize.brentq(zeta, lo, hi, xtol=1e-9))


@dataclass
class ZZLandscape:
    """ZZ maps over (phi_s, phi_c): phi_s is the antisymmetric qubit-flux
    shift about the sweet-spot contour (qubit a +phi_s, qubit b -phi_s)."""

    phi_s: np.ndarray
    phi_c: np.ndarray
    zeta_s: np.ndarray        # kHz, shape (len(phi_s), len(phi_c))
    zeta_tot: np.ndarray      # kHz, same shape
    contour: list             # ContourPoint per phi_c
    off_position: FluxPoint
    cancellation: list        # (phi_s, phi_c) zero crossings of zeta_tot
    cancellation_shift: float  # phi_s zeroing zeta_tot at the off position

    def summary(self):
        return {
            "off_position": {"phi_a": self.off_position.phi_a,
                             "phi_b": self.off_position.phi_b,
                             "phi_c": self.off_position.phi_c},
            "cancellation_point": {"phi_s": self.cancellation_shift,
                                   "phi_c": self.off_position.phi_c},
            "cancellation_curve": [
                {"phi_s": float(s), "phi_c": float(c)}
                for s, c in self.cancellation],
            "zeta_tot_max_abs_khz": float(np.max(np.abs(self.zeta_tot))),
        }

    def write_csv(self, path):
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["phi_s", "phi_c", "zeta_s_kHz", "zeta_tot_kHz"])
            for i, s in enumerate(self.phi_s):
                for j, c in enumerate(self.phi_c):
                    w.writerow([f"{s:.10g}", f"{c:.10g}",
                                f"{self.zeta_s[i, j]:.8g}",
                                f"{self.zeta_tot[i, j]:.8g}"])

    def write_summary(self, path):
        with open(path, "w") as f:
            json.dump(self.summary(), f, indent=2)
            f.write("\n")


def zz_landscape(model, phi_s_grid, phi_c_grid, off_position=None):
    """Static and full ZZ maps over the (phi_s, phi_c) plane.

    zeta_s is the effective-model static channel J 4 Omega_a Omega_b /
    (omega_a omega_b); zeta_tot the full-spectrum four-level combination.
    The cancellation list holds linear-interpolated zeros of zeta_tot along
    each phi_s != 0 row; a too-coarse grid that never brackets a zero
    leaves the list empty (warning case).
    """
    phi_s = np.asarray(phi_s_grid, dtype=float)
    phi_c = np.asarray(phi_c_grid, dtype=float)
    contour = sweet_spot_contour(model, phi_c)
    zeta_s = np.empty((len(phi_s), len(phi_c)))
    zeta_tot = np.empty_like(zeta_s)
    for jc, pt in enumerate(contour):
        for is_, s in enumerate(phi_s):
            flux = FluxPoint(pt.flux.phi_a + s, pt.flux.phi_b - s,
                             pt.flux.phi_c)
            eff = extract_effective_params(model, flux)
            zeta_s[is_, jc] = (eff.j * 4.0 * eff.Omega_a * eff.Omega_b
                               / (eff.omega_a * eff.omega_b)) * 1e3
            zeta_tot[is_, jc] = eff.zeta
    if off_position is None:
        off_position = find_off_position(model)
    cancellation = []
    for i, s in enumerate(phi_s):
        if s == 0.0:
            continue
        row = zeta_tot[i]
        for j in range(len(phi_c) - 1):
            if row[j] * row[j + 1] < 0:
                frac = row[j] / (row[j] - row[j + 1])
                cancellation.append((float(s),
                                     float(phi_c[j]
                                           + frac * (phi_c[j + 1] - phi_c[j]))))
    shift = cancellation_offset(model, off_position)
    return ZZLandscape(phi_s, phi_c, zeta_s, zeta_tot, contour,
                       off_position, cancellation, shift)

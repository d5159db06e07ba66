"""Eigenspectra: diagonalization, bare-state labeling, transition
frequencies, ZZ strength, and the spectroscopy forward model / fitter.

Rules used throughout: energies in GHz ascending; a label is the bare
product occupation (n_a, n_b, n_minus, n_plus); the ZZ strength is the
four-level combination f_11 - f_01 - f_10 + f_00 reported in kHz.
"""

import csv
import dataclasses
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize

from .circuit import CircuitModel, FluxPoint
from .errors import FitError, LabelingError
from .operators import hermiticity_defect, product_index


@dataclass
class LabeledSpectrum:
    """Eigenvalues with (optionally) their vectors and bare-product labels.

    labels[i] is a 4-tuple (n_a, n_b, n_minus, n_plus) or None when the
    state is untracked; overlaps[i] is the squared overlap with the bare
    product state behind the assignment.
    """

    energies: np.ndarray
    vectors: np.ndarray = None
    dims: tuple = None
    labels: list = None
    overlaps: np.ndarray = None

    def energy_of(self, label):
        label = tuple(label)
        if self.labels is None or label not in self.labels:
            raise LabelingError(f"label {label} not present in spectrum")
        return self.energies[self.labels.index(label)]

    def transition(self, lo, hi):
        """Transition frequency E(hi) - E(lo) in GHz."""
        return self.energy_of(hi) - self.energy_of(lo)


def diagonalize(h, k):
    """Lowest-k eigenpairs of a hermitian matrix, residual-checked."""
    defect = hermiticity_defect(h)
    scale = float(np.max(np.abs(h)))
    if defect > 1e-9 * max(scale, 1.0):
        raise ValueError(f"matrix is not hermitian (defect {defect:.2e})")
    k = min(k, h.shape[0])
    w, v = scipy.linalg.eigh(h, subset_by_index=(0, k - 1))
    hnorm = np.linalg.norm(h)
    resid = np.linalg.norm(h @ v - v * w[None, :], axis=0)
    worst = float(np.max(resid))
    if worst > 1e-9 * hnorm:
        raise ValueError(f"eigenpair residual {worst:.2e} exceeds 1e-9*|H|")
    return LabeledSpectrum(energies=w, vectors=v)


def label_states(spec, dims, min_overlap=0.5):
    """Assign bare product labels to eigenstates, greedy by overlap.

    All (eigenstate, bare-index) pairs are ranked by squared overlap and
    assigned greedily so each eigenstate and each bare label is used once;
    ties break toward the lower bare index.  An eigenstate whose winning
    overlap is below `min_overlap` raises a LabelingError naming the
    competing candidates.
    """
    v = spec.vectors
    if v is None:
        raise ValueError("spectrum has no eigenvectors to label")
    nstates = v.shape[1]
    w = np.abs(v) ** 2                        # (basis, state)
    order = []
    for i in range(nstates):
        for idx in np.argsort(-w[:, i], kind="stable")[:8]:
            order.append((w[idx, i], -idx, i, idx))
    order.sort(reverse=True)

    labels = [None] * nstates
    overlaps = np.zeros(nstates)
    used_idx = set()
    assigned = 0
    for ov, _negidx, i, idx in order:
        if labels[i] is not None or idx in used_idx:
            continue
        labels[i] = _unravel(idx, dims)
        overlaps[i] = ov
        used_idx.add(idx)
        assigned += 1
        if assigned == nstates:
            break

    for i in range(nstates):
        if labels[i] is None or overlaps[i] < min_overlap:
            cand = np.argsort(-w[:, i])[:3]
            cands = [(_unravel(int(c), dims), float(w[c, i])) for c in cand]
            raise LabelingError(
                f"ambiguous label for eigenstate {i}: best overlap "
                f"{overlaps[i] if labels[i] else w[cand[0], i]:.3f} < "
                f"{min_overlap}; candidates {cands}", candidates=cands)
    return LabeledSpectrum(energies=spec.energies, vectors=v, dims=tuple(dims),
                           labels=labels, overlaps=overlaps)


def _unravel(idx, dims):
    out = []
    for d in reversed(dims):
        out.append(idx % d)
        idx //= d
    return tuple(reversed(out))


def label_by_reference(spec, reference_vectors, reference_labels,
                       min_overlap=0.25):
    """Label eigenstates by overlap with a previously labeled basis.

    Used for continuity tracking through avoided crossings in flux sweeps,
    where bare-product overlap alone would jump branches.
    """
    v = spec.vectors
    w = np.abs(reference_vectors.T @ v) ** 2   # (ref_state, state)
    labels = [None] * v.shape[1]
    overlaps = np.zeros(v.shape[1])
    pairs = [(w[r, i], -r, i, r) for r in range(w.shape[0])
             for i in range(w.shape[1])]
    pairs.sort(reverse=True)
    used = set()
    for ov, _nr, i, r in pairs:
        if labels[i] is not None or r in used:
            continue
        if ov < min_overlap:
            continue
        labels[i] = reference_labels[r]
        overlaps[i] = ov
        used.add(r)
    return LabeledSpectrum(energies=spec.energies, vectors=v, dims=spec.dims,
                           labels=labels, overlaps=overlaps)


_COMPUTATIONAL = [(0, 0, 0, 0), (0, 1, 0, 0), (1, 0, 0, 0), (1, 1, 0, 0)]


def computational_spectrum(model, flux, k=12, min_overlap=0.5):
    """Labeled low-energy spectrum of the full model at one flux point."""
    h = model.hamiltonian(flux)
    spec = diagonalize(h, k)
    dims = model.keep
    # Label only as far as needed: greedy over the k lowest states.
    return label_states(spec, dims, min_overlap=min_overlap)


def zz_strength(spec):
    """ZZ strength f_11 - f_01 - f_10 + f_00 in kHz from a labeled spectrum."""
    f00 = spec.energy_of((0, 0, 0, 0))
    f01 = spec.energy_of((0, 1, 0, 0))
    f10 = spec.energy_of((1, 0, 0, 0))
    f11 = spec.energy_of((1, 1, 0, 0))
    return (f11 - f01 - f10 + f00) * 1e6


def qubit_splittings(spec):
    """(f_a, f_b) transition frequencies in GHz from a labeled spectrum."""
    f00 = spec.energy_of((0, 0, 0, 0))
    return (spec.energy_of((1, 0, 0, 0)) - f00,
            spec.energy_of((0, 1, 0, 0)) - f00)


def spectroscopy_forward(model, flux_sweep, transitions, k=14, threads=0):
    """Transition frequencies along a flux sweep, with continuity tracking.

    flux_sweep is a sequence of FluxPoint; transitions a sequence of
    (label_lo, label_hi) pairs.  Returns {transition: masked frequency
    array (GHz)} where masked entries mark points whose labels could not
    be resolved.  Eigenproblems run in parallel; labeling walks the sweep
    in order, using the previous point's labeled vectors as reference to
    ride through avoided crossings.
    """
    transitions = [(tuple(lo), tuple(hi)) for lo, hi in transitions]
    needed = {lab for pair in transitions for lab in pair}

    def solve(flux):
        return diagonalize(model.hamiltonian(flux), k)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            specs = list(ex.map(solve, flux_sweep))
    else:
        specs = [solve(f) for f in flux_sweep]

    curves = {t: np.ma.masked_all(len(flux_sweep)) for t in transitions}
    prev = None
    for i, spec in enumerate(specs):
        labeled = None
        try:
            labeled = label_states(spec, model.keep)
        except LabelingError:
            if prev is not None:
                labeled = label_by_reference(spec, prev.vectors, prev.labels)
        if labeled is None:
            continue
        have = {lab for lab in labeled.labels if lab is not None}
        for t in transitions:
            lo, hi = t
            if lo in have and hi in have:
                curves[t][i] = labeled.energy_of(hi) - labeled.energy_of(lo)
        if needed <= have:
            prev = labeled
    return curves


# ---------------------------------------------------------------------------
# spectroscopy data I/O and fitting

def read_spectroscopy_csv(path):
    """Read delimited spectroscopy data.

    Columns: flux_a, flux_b, flux_c, frequency_GHz, transition_tag, where a
    tag looks like "0.0.0.0>2.0.0.0" (occupations dot-joined, '>' between
    the two states).
    """
    points = []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            lo, hi = parse_transition_tag(row["transition_tag"])
            points.append((float(row["flux_a"]), float(row["flux_b"]),
                           float(row["flux_c"]), float(row["frequency_GHz"]),
                           (lo, hi)))
    return points


def write_spectroscopy_csv(path, points):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["flux_a", "flux_b", "flux_c", "frequency_GHz",
                    "transition_tag"])
        for fa, fb, fc, freq, (lo, hi) in points:
            w.writerow([f"{fa:.10g}", f"{fb:.10g}", f"{fc:.10g}",
                        f"{freq:.10g}", format_transition_tag(lo, hi)])


def format_transition_tag(lo, hi):
    return ".".join(str(n) for n in lo) + ">" + ".".join(str(n) for n in hi)


def parse_transition_tag(tag):
    lo, hi = tag.split(">")
    return (tuple(int(x) for x in lo.split(".")),
            tuple(int(x) for x in hi.split(".")))


_PARAM_PATHS = ("qubit_a.e_j", "qubit_a.e_c", "qubit_a.e_l",
                "qubit_b.e_j", "qubit_b.e_c", "qubit_b.e_l",
                "e_jc", "e_cc", "e_cm", "e_l")


def _get_param(params, path):
    obj = params
    for part in path.split("."):
        obj = getattr(obj, part)
    return obj


def _set_params(params, paths, values):
    updates = {}
    for path, value in zip(paths, values):
        parts = path.split(".")
        if len(parts) == 1:
            updates[parts[0]] = value
        else:
            sub = updates.get(parts[0], _get_param(params, parts[0]))
            sub = dataclasses.replace(sub, **{parts[1]: value})
            updates[parts[0]] = sub
    return dataclasses.replace(params, **updates)


@dataclass
class SpectroscopyFit:
    params: object
    free_params: tuple
    values: np.ndarray
    sigmas: np.ndarray
    covariance: np.ndarray
    rms_residual_ghz: float
    n_points: int
    n_iterations: int
    converged: bool

    def report(self):
        """JSON-serializable fit report."""
        return {
            "free_params": list(self.free_params),
            "values_ghz": [float(v) for v in self.values],
            "uncertainties_ghz": [float(s) for s in self.sigmas],
            "rms_residual_ghz": float(self.rms_residual_ghz),
            "n_points": self.n_points,
            "n_iterations": self.n_iterations,
            "converged": self.converged,
        }

    def write_report(self, path):
        with open(path, "w") as f:
            json.dump(self.report(), f, indent=2)
            f.write("\n")


def fit_spectroscopy(data, initial, free_params, keep=(6, 6, 4, 3),
                     ho_dim=40, k=14, max_nm_iter=200, max_gn_iter=12,
                     rel_step=1e-4, threads=0):
    """Least-squares circuit-parameter fit to spectroscopy points.

    `data` rows are (flux_a, flux_b, flux_c, frequency_GHz, (lo, hi)).
    `free_params` names dotted parameter paths such as "qubit_a.e_j".
    Derivative-free simplex refines the basin, then finite-difference
    Gauss-Newton polishes and supplies the Jacobian for uncertainties.
    Raises FitError (with best-so-far attached) on non-convergence.
    """
    free_params = tuple(free_params)
    for p in free_params:
        if p not in _PARAM_PATHS:
            raise ValueError(f"unknown parameter path {p!r}")
    x0 = np.array([_get_param(initial, p) for p in free_params])
    n = len(data)
    if free_params and n < len(free_params):
        raise ValueError("need at least as many points as free parameters")

    flux_points = [FluxPoint(r[0], r[1], r[2]) for r in data]
    freqs = np.array([r[3] for r in data])
    pairs = [r[4] for r in data]

    def residuals(x):
        params = _set_params(initial, free_params, x)
        model = CircuitModel(params, keep=keep, ho_dim=ho_dim)
        out = np.empty(n)

        def one(i):
            spec = computational_spectrum(model, flux_points[i], k=k,
                                          min_overlap=0.3)
            lo, hi = pairs[i]
            return spec.energy_of(hi) - spec.energy_of(lo)

        if threads and threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as ex:
                vals = list(ex.map(one, range(n)))
        else:
            vals = [one(i) for i in range(n)]
        out[:] = vals
        return out - freqs

    if not free_params:
        r = residuals(x0)
        rms = float(np.sqrt(np.mean(r ** 2)))
        return SpectroscopyFit(initial, free_params, x0, np.array([]),
                               np.zeros((0, 0)), rms, n, 0, True)

    def cost(x):
        return float(np.sum(residuals(x) ** 2))

    # simplex with restarts
    best = None
    x_start = x0.copy()
    nm_iters = 0
    for attempt in range(3):
        res = scipy.optimize.minimize(
            cost, x_start, method="Nelder-Mead",
            options=dict(maxiter=max_nm_iter, xatol=1e-8, fatol=1e-16))
        nm_iters += res.nit
        if best is None or res.fun < best.fun:
            best = res
        if res.fun < 1e-18:
            break
        x_start = best.x * (1.0 + 2e-3 * (attempt + 1))

    # finite-difference Gauss-Newton polish
    x = best.x.copy()
    r = residuals(x)
    ssr = float(np.sum(r ** 2))
    converged = False
    gn_iters = 0
    jac = None
    for _ in range(max_gn_iter):
        gn_iters += 1
        jac = np.empty((n, len(x)))
        for j in range(len(x)):
            h = rel_step * max(abs(x[j]), 1e-6)
            xp = x.copy()
            xp[j] += h
            jac[:, j] = (residuals(xp) - r) / h
        g = jac.T @ r
        try:
            step = np.linalg.solve(jac.T @ jac + 1e-12 * np.eye(len(x)), -g)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(step)):
            break
        x_new = x + step
        r_new = residuals(x_new)
        ssr_new = float(np.sum(r_new ** 2))
        if ssr_new <= ssr:
            rel_move = float(np.max(np.abs(step) / np.maximum(np.abs(x), 1e-9)))
            x, r, ssr = x_new, r_new, ssr_new
            if rel_move < 1e-9 or ssr < n * 1e-20:
                converged = True
                break
        else:
            # try a damped step before giving up
            x_try = x + 0.25 * step
            r_try = residuals(x_try)
            if float(np.sum(r_try ** 2)) < ssr:
                x, r = x_try, r_try
                ssr = float(np.sum(r ** 2))
            else:
                converged = True   # at a local minimum within step resolution
                break

    dof = max(n - len(x), 1)
    s2 = ssr / dof
    try:
        cov = s2 * np.linalg.inv(jac.T @ jac)
        sigmas = np.sqrt(np.maximum(np.diag(cov), 0.0))
    except (np.linalg.LinAlgError, TypeError):
        cov = np.full((len(x), len(x)), np.nan)
        sigmas = np.full(len(x), np.nan)

    fit = SpectroscopyFit(_set_params(initial, free_params, x), free_params,
                          x, sigmas, cov, float(np.sqrt(ssr / n)), n,
                          nm_iters + gn_iters, converged)
    if not converged:
        raise FitError(f"fit did not converge after {fit.n_iterations} "
                       f"iterations (rms {fit.rms_residual_ghz:.3e} GHz)",
                       best=fit)
    return fit

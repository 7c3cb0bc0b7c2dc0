"""Receiver traces and transfer samples, with deterministic CSV export.

A :class:`ResponseSet` is the common currency between reduced models,
reference solvers and the experiment harness: a sample axis (times, or
complex Laplace frequencies), one column per receiver, and a provenance
dictionary that ends up in the JSON sidecar next to every CSV.

Floats are written with ``repr``, the shortest round-trip representation,
so identical runs produce byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError

_KINDS = ("time", "frequency")


def _fmt(x: float) -> str:
    return repr(float(x))


@dataclass(frozen=True)
class ResponseSet:
    kind: str                     # "time" or "frequency"
    samples: np.ndarray           # (ns,) float times, or complex s values
    values: np.ndarray            # (ns, nr); real for time, complex for freq
    receivers: tuple[str, ...]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise UsageError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        ns, nr = self.values.shape
        if self.samples.shape != (ns,) or len(self.receivers) != nr:
            raise UsageError(
                f"inconsistent shapes: {self.samples.shape} samples, "
                f"values {self.values.shape}, {len(self.receivers)} receivers")

    @property
    def n_samples(self) -> int:
        return self.samples.size

    def _require_compatible(self, other: "ResponseSet") -> None:
        if (self.kind != other.kind
                or not np.array_equal(self.samples, other.samples)
                or self.receivers != other.receivers):
            raise UsageError(
                "responses are not comparable: kind/samples/receivers differ")

    def max_sample_error(self, reference: "ResponseSet") -> float:
        """max over samples of ||row - ref_row||_2 / ||ref_row||_2."""
        self._require_compatible(reference)
        num = np.linalg.norm(self.values - reference.values, axis=1)
        den = np.linalg.norm(reference.values, axis=1)
        floor = 1.0e-300 + den.max()
        return float((num / np.maximum(den, 1.0e-13 * floor)).max())

    def window_error(self, reference: "ResponseSet") -> float:
        """Relative L2 distance over the whole sample window, all receivers."""
        self._require_compatible(reference)
        den = np.linalg.norm(reference.values)
        if den == 0.0:
            return float(np.linalg.norm(self.values) > 0.0)
        return float(np.linalg.norm(self.values - reference.values) / den)

    def restricted(self, receiver_ids) -> "ResponseSet":
        keep = [self.receivers.index(r) for r in receiver_ids]
        return ResponseSet(self.kind, self.samples, self.values[:, keep],
                           tuple(receiver_ids), dict(self.meta))

    def write_csv(self, path) -> list[str]:
        """Write <path> and a .json provenance sidecar; returns both paths."""
        path = str(path)
        sidecar = path[:-4] + ".json" if path.endswith(".csv") else path + ".json"
        lines = []
        if self.kind == "time":
            lines.append("t,receiver,re,im")
            for j, t in enumerate(self.samples):
                row = self.values[j]
                for r, rid in enumerate(self.receivers):
                    v = complex(row[r])
                    lines.append(f"{_fmt(t)},{rid},{_fmt(v.real)},{_fmt(v.imag)}")
        else:
            lines.append("re_s,im_s,receiver,re,im")
            for j, s in enumerate(self.samples):
                s = complex(s)
                row = self.values[j]
                for r, rid in enumerate(self.receivers):
                    v = complex(row[r])
                    lines.append(f"{_fmt(s.real)},{_fmt(s.imag)},{rid},"
                                 f"{_fmt(v.real)},{_fmt(v.imag)}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        side = {"kind": self.kind, "receivers": list(self.receivers),
                "n_samples": int(self.n_samples)}
        side.update(self.meta)
        with open(sidecar, "w") as fh:
            json.dump(side, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return [path, sidecar]


def uniform_step(times: np.ndarray) -> float:
    """Grid spacing of a uniform time axis starting at zero."""
    times = np.asarray(times, dtype=float)
    if times.size < 2 or times[0] != 0.0:
        raise UsageError("need a uniform time grid starting at t = 0")
    dt = times[1] - times[0]
    if dt <= 0 or np.abs(np.diff(times) - dt).max() > 1.0e-9 * dt:
        raise UsageError("time grid is not uniform")
    return float(dt)


def gaussian_wavelet(omega_c: float, sigma: float):
    """Modulated-Gaussian source signature, delayed to start near zero.

    f(t) = exp(-(t - t0)^2 / (2 sigma^2)) * sin(omega_c (t - t0)) with
    t0 = 5 sigma, so f(0) is at the 3.7e-6 level and the spectrum is
    centered on omega_c with ~1/sigma width.
    """
    if omega_c <= 0 or sigma <= 0:
        raise UsageError("wavelet needs omega_c > 0 and sigma > 0")
    t0 = 5.0 * sigma

    def signature(t):
        tau = np.asarray(t, dtype=float) - t0
        return np.exp(-0.5 * (tau / sigma) ** 2) * np.sin(omega_c * tau)

    signature.omega_c = omega_c
    signature.sigma = sigma
    signature.t0 = t0
    return signature


def convolve_response(response: ResponseSet, forcing) -> ResponseSet:
    """Traces of the source-driven problem from impulse-response traces.

    Discrete causal convolution dt * sum_m f_m u_{n-m} on the response's
    own (uniform, zero-based) time grid; ``forcing`` is a callable f(t) or
    an array already sampled on that grid. Applying the same forcing to two
    responses preserves their comparability.
    """
    if response.kind != "time":
        raise UsageError("convolution is defined for time responses only")
    dt = uniform_step(response.samples)
    f = forcing(response.samples) if callable(forcing) else np.asarray(forcing)
    if f.shape != response.samples.shape:
        raise UsageError("forcing samples do not match the time grid")
    nt = response.n_samples
    out = np.empty_like(response.values)
    for r in range(out.shape[1]):
        out[:, r] = dt * np.convolve(f, response.values[:, r])[:nt]
    meta = dict(response.meta)
    meta["forcing"] = "convolved"
    return ResponseSet("time", response.samples, out, response.receivers, meta)

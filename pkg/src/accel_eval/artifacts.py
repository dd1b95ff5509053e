"""Output files: trace CSVs, JSON summaries, manifests and saved models.

Every file is written to a temporary sibling and renamed into place. Floats
are written with ``repr``, the shortest string that parses back to the same
double, so saved models round-trip exactly.
"""

import hashlib
import json
import math
import os
import platform
import tempfile
from importlib import metadata
from pathlib import Path

import numpy as np

from . import _kernels, accelerate, classifier, featuremap
from .gaussmath import MultivariateGaussian
from .gmm import GaussianMixture

TRACE_HEADER = "n,p_hat,rel_half_width"


def atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else None


def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _header(cfg):
    return [f"# seed={cfg.pipeline.seed}", f"# config={cfg.to_json()}"]


def trace_text(result, cfg):
    lines = _header(cfg) + [TRACE_HEADER]
    for n, p, w in zip(result.trace_n, result.trace_p, result.trace_w):
        lines.append(f"{int(n)},{float(p)!r},{float(w)!r}")
    return "\n".join(lines) + "\n"


def wide_trace_text(results, cfg):
    """One row per checkpoint; a method with no value at that ``n`` is blank."""
    rows = sorted({int(n) for r in results.values() for n in r.trace_n})
    cols = ["n"]
    lookup = {}
    for label, r in results.items():
        cols += [f"{label}_p_hat", f"{label}_rel_half_width"]
        lookup[label] = {int(n): (float(p), float(w)) for n, p, w in zip(r.trace_n, r.trace_p, r.trace_w)}
    lines = _header(cfg) + [",".join(cols)]
    for n in rows:
        cells = [str(n)]
        for label in results:
            if n in lookup[label]:
                p, w = lookup[label][n]
                cells += [repr(p), repr(w)]
            else:
                cells += ["", ""]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def read_trace(path):
    """Parse a trace CSV into ``(n, p_hat, rel_half_width)`` arrays."""
    rows = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    if not rows or rows[0] != TRACE_HEADER:
        raise ValueError(f"{path}: missing trace header {TRACE_HEADER!r}")
    data = [ln.split(",") for ln in rows[1:]]
    n = np.array([int(r[0]) for r in data], dtype=np.int64)
    p = np.array([float(r[1]) for r in data])
    w = np.array([float(r[2]) for r in data])
    return n, p, w


def estimate_summary(result, confidence):
    from .estimate import required_samples_crude

    out = {
        "method": result.method,
        "p_hat": result.p_hat,
        "sigma_hat": result.sigma_hat,
        "std_error": result.std_error,
        "rel_half_width": _num(result.rel_half_width),
        "n_samples": result.n_samples,
        "hit_count": result.hit_count,
        "nonfinite": result.nonfinite,
        "confidence": confidence,
        "required_crude_samples": None,
        "crude_multiplier": None,
    }
    w = result.rel_half_width
    if 0.0 < result.p_hat < 1.0 and math.isfinite(w) and w > 0.0:
        need = required_samples_crude(result.p_hat, w, confidence)
        out["required_crude_samples"] = need
        out["crude_multiplier"] = need / result.n_samples
    return out


def versions():
    out = {"python": platform.python_version(), "backend": _kernels.BACKEND}
    for pkg in ("numpy", "scipy", "numba", "artifact"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = None
    return out


def manifest(cfg, written):
    """Config echo, versions and a SHA-256 of every artifact in ``written``."""
    digests = {}
    for path in written:
        digests[Path(path).name] = hashlib.sha256(Path(path).read_bytes()).hexdigest()
    return {
        "seed": cfg.pipeline.seed,
        "config": cfg.to_dict(),
        "source": cfg.source,
        "versions": versions(),
        "artifacts": digests,
    }


# ---------------------------------------------------------------------------
# models


def _mixture_to_dict(mix):
    return {
        "weights": mix.weights.tolist(),
        "means": mix.means.tolist(),
        "covariances": mix.covariances.tolist(),
    }


def _mixture_from_dict(d):
    comps = [MultivariateGaussian(m, np.array(c)) for m, c in zip(d["means"], d["covariances"])]
    return GaussianMixture(np.array(d["weights"]), comps)


def model_to_dict(model, fmap, cfg=None):
    out = {
        "feature_map": {"input_dim": fmap.input_dim, "degree": fmap.degree},
        "hyperplane": {"beta": model.hyperplane.beta.tolist(), "b": float(model.hyperplane.b)},
        "feature_mixture": _mixture_to_dict(model.feature_mixture),
        "original_mixture": _mixture_to_dict(model.original_mixture),
        "dominating_points": np.asarray(model.dominating_points).tolist(),
        "feature_fit": _mixture_to_dict(model.feature_fit) if model.feature_fit is not None else None,
    }
    if cfg is not None:
        out["seed"] = cfg.pipeline.seed
        out["config"] = cfg.to_dict()
    return out


def model_from_dict(d):
    """Inverse of ``model_to_dict``; returns ``(AcceleratedModel, feature map)``."""
    fm = d["feature_map"]
    fmap = featuremap.build_map(int(fm["input_dim"]), int(fm["degree"]))
    h = classifier.Hyperplane(np.array(d["hyperplane"]["beta"]), float(d["hyperplane"]["b"]))
    fit = d.get("feature_fit")
    model = accelerate.AcceleratedModel(
        feature_mixture=_mixture_from_dict(d["feature_mixture"]),
        original_mixture=_mixture_from_dict(d["original_mixture"]),
        dominating_points=np.array(d["dominating_points"]),
        hyperplane=h,
        feature_fit=_mixture_from_dict(fit) if fit is not None else None,
    )
    return model, fmap


def load_model(path):
    return model_from_dict(json.loads(Path(path).read_text()))

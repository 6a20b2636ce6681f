"""Distribution heads: raw outputs -> distribution parameters, log-likelihoods
and their gradients, sampling, and the Gaussian reparameterisation."""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, log_softmax, softmax

from src.errors import ContractError
from src.nnet.spec import SIGMA_MIN, HeadKind, HeadSpec

LOG_2PI = float(np.log(2.0 * np.pi))

Grad = dict[str, np.ndarray]


@dataclass
class HeadOutput:
    spec: HeadSpec
    raw: np.ndarray
    params: dict[str, np.ndarray]

    def __getitem__(self, key: str) -> np.ndarray:
        return self.params[key]


def softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def head_forward(spec: HeadSpec, raw: np.ndarray, sigma_min: float = SIGMA_MIN) -> HeadOutput:
    n = raw.shape[0]
    if spec.kind == HeadKind.BERNOULLI:
        return HeadOutput(spec, raw, {"logit": raw, "p": expit(raw)})
    if spec.kind == HeadKind.GAUSSIAN:
        sd_raw = raw[:, spec.dim:]
        return HeadOutput(
            spec,
            raw,
            {"mean": raw[:, : spec.dim], "sd": np.maximum(sigma_min, softplus(sd_raw))},
        )
    logits = raw.reshape(n, spec.dim, spec.categories)
    return HeadOutput(spec, raw, {"logits": logits, "probs": softmax(logits, axis=-1)})


def head_backward(out: HeadOutput, upstream: Grad, sigma_min: float = SIGMA_MIN) -> np.ndarray:
    """Gradient of the loss w.r.t. the raw head outputs.

    ``upstream`` maps parameter names ("p"/"logit", "mean"/"sd", "probs"/"logits")
    to d loss / d parameter; missing names contribute nothing.
    """
    spec = out.spec
    n = out.raw.shape[0]
    if spec.kind == HeadKind.BERNOULLI:
        p = out["p"]
        g = np.zeros_like(out.raw)
        if "logit" in upstream:
            g = g + upstream["logit"]
        if "p" in upstream:
            g = g + upstream["p"] * p * (1.0 - p)
        return g
    if spec.kind == HeadKind.GAUSSIAN:
        sd_raw = out.raw[:, spec.dim:]
        g_mean = upstream.get("mean", np.zeros((n, spec.dim)))
        g_sd = upstream.get("sd", np.zeros((n, spec.dim)))
        active = softplus(sd_raw) > sigma_min
        return np.concatenate([g_mean, g_sd * expit(sd_raw) * active], axis=1)
    probs = out["probs"]
    g = np.zeros_like(probs)
    if "logits" in upstream:
        g = g + upstream["logits"]
    if "probs" in upstream:
        gp = upstream["probs"]
        g = g + probs * (gp - np.sum(gp * probs, axis=-1, keepdims=True))
    return g.reshape(n, spec.width)


def _check_categorical(spec: HeadSpec, obs: np.ndarray) -> np.ndarray:
    codes = np.asarray(obs)
    if np.any(codes != np.round(codes)) or np.any(codes < 0) or np.any(codes >= spec.categories):
        raise ContractError(
            f"Categorical observation outside {{0..{spec.categories - 1}}}"
        )
    return codes.astype(np.int64)


def _as_matrix(obs: np.ndarray, dim: int) -> np.ndarray:
    obs = np.asarray(obs, dtype=np.float64)
    if obs.ndim == 0:
        obs = obs.reshape(1, 1)
    elif obs.ndim == 1:
        obs = obs.reshape(-1, dim) if dim > 1 else obs.reshape(-1, 1)
    return obs


def log_prob(spec: HeadSpec, params: dict[str, np.ndarray], obs: np.ndarray) -> np.ndarray:
    """Per-record log-likelihood, summed over the head's dims; shape (n,)."""
    obs = _as_matrix(obs, spec.dim)
    if spec.kind == HeadKind.BERNOULLI:
        if "logit" in params:
            logit = params["logit"]
            lp = obs * logit - softplus(logit)
        else:
            p = params["p"]
            lp = obs * np.log(p) + (1.0 - obs) * np.log1p(-p)
        return lp.sum(axis=1)
    if spec.kind == HeadKind.GAUSSIAN:
        mean, sd = params["mean"], params["sd"]
        resid = (obs - mean) / sd
        return (-0.5 * resid**2 - np.log(sd) - 0.5 * LOG_2PI).sum(axis=1)
    codes = _check_categorical(spec, obs)
    if "logits" in params:
        logp = log_softmax(params["logits"], axis=-1)
    else:
        logp = np.log(params["probs"])
    picked = np.take_along_axis(logp, codes[..., None], axis=-1)[..., 0]
    return picked.sum(axis=1)


def log_prob_grad(spec: HeadSpec, params: dict[str, np.ndarray], obs: np.ndarray) -> Grad:
    """d log_prob / d parameters, per record (not averaged)."""
    obs = _as_matrix(obs, spec.dim)
    if spec.kind == HeadKind.BERNOULLI:
        return {"logit": obs - expit(params["logit"])}
    if spec.kind == HeadKind.GAUSSIAN:
        mean, sd = params["mean"], params["sd"]
        diff = obs - mean
        return {"mean": diff / sd**2, "sd": diff**2 / sd**3 - 1.0 / sd}
    codes = _check_categorical(spec, obs)
    onehot = np.eye(spec.categories)[codes]
    return {"logits": onehot - softmax(params["logits"], axis=-1)}


def scale_grad(grad: Grad, factor: np.ndarray | float) -> Grad:
    """Multiply every entry by ``factor`` (broadcast over records)."""
    out = {}
    for key, value in grad.items():
        f = np.asarray(factor, dtype=np.float64)
        if f.ndim == 1:
            f = f.reshape((-1,) + (1,) * (value.ndim - 1))
        out[key] = value * f
    return out


def head_mean(out: HeadOutput) -> np.ndarray:
    """Point decoding: Gaussian mean, Bernoulli probability, categorical argmax."""
    kind = out.spec.kind
    if kind == HeadKind.GAUSSIAN:
        return out["mean"]
    if kind == HeadKind.BERNOULLI:
        return out["p"]
    return np.argmax(out["probs"], axis=-1).astype(np.float64)


def head_sample(out: HeadOutput, rng: np.random.Generator) -> np.ndarray:
    kind = out.spec.kind
    if kind == HeadKind.GAUSSIAN:
        eps = rng.standard_normal(out["mean"].shape)
        return out["mean"] + out["sd"] * eps
    if kind == HeadKind.BERNOULLI:
        return (rng.random(out["p"].shape) < out["p"]).astype(np.float64)
    probs = out["probs"]
    cum = np.cumsum(probs, axis=-1)
    u = rng.random(probs.shape[:-1] + (1,))
    codes = np.minimum((u > cum).sum(axis=-1), out.spec.categories - 1)
    return codes.astype(np.float64)


def sample_gaussian_reparam(mu: np.ndarray, sigma: np.ndarray, eps: np.ndarray) -> np.ndarray:
    """z = mu + sigma * eps; dz/dmu = 1 and dz/dsigma = eps."""
    return mu + sigma * eps


def reparam_backward(g_z: np.ndarray, eps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return g_z, g_z * eps

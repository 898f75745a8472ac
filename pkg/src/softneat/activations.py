"""Activation functions available to CPPN nodes.

Every function works on floats and on numpy arrays and is total on finite
input: singular points are guarded instead of raising.
"""
import numpy as np

from .errors import ConfigurationError

LOG_EPS = 1e-7
INV_EPS = 1e-7
SIGMOID_GAIN = 4.9
SELU_LAMBDA = 1.0507
SELU_ALPHA = 1.6733


def _sin(x):
    return np.sin(x)


def _neg_sin(x):
    return -np.sin(x)


def _abs(x):
    return np.abs(x)


def _neg_abs(x):
    return -np.abs(x)


def _square(x):
    return x * x


def _neg_square(x):
    return -(x * x)


def _square_abs(x):
    a = np.abs(x)
    return a * a


def _neg_square_abs(x):
    a = np.abs(x)
    return -(a * a)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-SIGMOID_GAIN * x))


def _clamped(x):
    return np.clip(x, -1.0, 1.0)


def _cube(x):
    return x * x * x


def _exp(x):
    return np.exp(np.clip(x, -60.0, 60.0))


def _gauss(x):
    return np.exp(-5.0 * x * x)


def _hat(x):
    return np.maximum(0.0, 1.0 - np.abs(x))


def _identity(x):
    return x + 0.0


def _inv(x):
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < INV_EPS
    return np.where(small, 0.0, 1.0 / np.where(small, 1.0, x))


def _log(x):
    return np.log(np.maximum(x, LOG_EPS))


def _relu(x):
    return np.maximum(x, 0.0)


def _lelu(x):
    return np.where(x > 0.0, x, 0.005 * x)


def _selu(x):
    neg = SELU_ALPHA * np.expm1(np.minimum(x, 0.0))
    return SELU_LAMBDA * np.where(x > 0.0, x, neg)


def _elu(x):
    return np.where(x > 0.0, x, np.expm1(np.minimum(x, 0.0)))


def _softplus(x):
    return np.logaddexp(0.0, x)


def _tanh(x):
    return np.tanh(x)


ACTIVATIONS = {
    "sin": _sin,
    "neg_sin": _neg_sin,
    "abs": _abs,
    "neg_abs": _neg_abs,
    "square": _square,
    "neg_square": _neg_square,
    "square_abs": _square_abs,
    "neg_square_abs": _neg_square_abs,
    "sigmoid": _sigmoid,
    "clamped": _clamped,
    "cube": _cube,
    "exp": _exp,
    "gauss": _gauss,
    "hat": _hat,
    "identity": _identity,
    "inv": _inv,
    "log": _log,
    "relu": _relu,
    "selu": _selu,
    "lelu": _lelu,
    "elu": _elu,
    "softplus": _softplus,
    "tanh": _tanh,
}

DISPLAY_NAMES = {
    "sin": "Sine",
    "neg_sin": "Negative sine",
    "abs": "Absolute value",
    "neg_abs": "Negative absolute value",
    "square": "Squared",
    "neg_square": "Negative squared",
    "square_abs": "Squared absolute value",
    "neg_square_abs": "Negative squared absolute value",
    "sigmoid": "Sigmoid",
    "clamped": "Clamped",
    "cube": "Cubical",
    "exp": "Exponential",
    "gauss": "Gaussian",
    "hat": "Hat",
    "identity": "Identity",
    "inv": "Inverse",
    "log": "Logarithmic",
    "relu": "ReLU",
    "selu": "SeLU",
    "lelu": "LeLU",
    "elu": "eLU",
    "softplus": "Softplus",
    "tanh": "Hyperbolic tangent",
}

FULL_DICTIONARY = tuple(ACTIVATIONS)
REDUCED_DICTIONARY = (
    "sin",
    "neg_sin",
    "square",
    "neg_square",
    "sigmoid",
    "cube",
    "gauss",
    "log",
    "tanh",
)

DICTIONARIES = {"fd": FULL_DICTIONARY, "rd": REDUCED_DICTIONARY}


def get_dictionary(name):
    """Return the activation ids of dictionary ``name`` ('fd' or 'rd')."""
    try:
        return DICTIONARIES[name.lower()]
    except KeyError:
        raise ConfigurationError(f"unknown activation dictionary {name!r}") from None


def get_activation(name):
    try:
        return ACTIVATIONS[name]
    except KeyError:
        raise ConfigurationError(f"unknown activation function {name!r}") from None


def activation_eval(name, x):
    """Evaluate activation ``name`` at scalar ``x`` and return a Python float."""
    fn = get_activation(name)
    with np.errstate(all="ignore"):
        return float(fn(np.float64(x)))


def validate_dictionary(names):
    unknown = [n for n in names if n not in ACTIVATIONS]
    if unknown:
        raise ConfigurationError(f"unknown activation functions: {unknown}")
    return tuple(names)


__all__ = [
    "ACTIVATIONS",
    "DISPLAY_NAMES",
    "FULL_DICTIONARY",
    "REDUCED_DICTIONARY",
    "activation_eval",
    "get_activation",
    "get_dictionary",
    "validate_dictionary",
]

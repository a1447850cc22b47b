"""Sequential density models with a uniform predict/update contract.

Model keys understood by `make_model`:

    frequency     empirical counts over an atomic alphabet
    dirichlet     Dirichlet-multinomial counts (alpha=1/2 default)
    sad           sparse adaptive counts for large alphabets
    ctw           context-tree weighting over the model's own history
    factored-ctw  per-factor context trees with grid context wiring
    factored-sad  per-factor sparse counts (region/patch models)
    lz            incremental-parse dictionary model (unnormalized scores)
    logistic      shared-weight autoregressive softmax over factors
"""

from __future__ import annotations

from ..errors import ConfigError
from .base import Alphabet, SequentialModel, log_add, normalize_log_weights
from .counts import DirichletModel, FrequencyModel, SadModel, sad_escape_mass
from .ctw import ContextTree, CtwModel
from .factored import FactoredModel, GridWiring, factored_ctw, factored_sad
from .logistic import PAD, AdagradOptimizer, LogisticModel
from .lz import Lz78Model, LzPhrase, parse_lz78, phrase_strings

MODEL_KEYS = (
    "frequency", "dirichlet", "sad", "ctw",
    "factored-ctw", "factored-sad", "lz", "logistic",
)

ATOMIC_KEYS = ("frequency", "dirichlet", "sad", "ctw")
FACTORED_KEYS = ("factored-ctw", "factored-sad", "logistic")


def make_model(key: str, *, atomic_size: int | None = None,
               factor_alphabets=None, log_factor_sizes=None, params=None):
    """Build a state-block-capable model.

    Atomic models need `atomic_size`; factored models need
    `factor_alphabets` (and optionally `log_factor_sizes` for huge
    factor alphabets); the LZ model accepts either view and treats the
    block symbols as one running stream.
    """
    params = dict(params or {})
    if key not in MODEL_KEYS:
        raise ConfigError(f"unknown model key '{key}'; expected one of {MODEL_KEYS}")

    if key in ATOMIC_KEYS:
        if atomic_size is None:
            raise ConfigError(f"model '{key}' needs an atomic alphabet size")
        if key == "frequency":
            return FrequencyModel(Alphabet(atomic_size))
        if key == "dirichlet":
            return DirichletModel(Alphabet(atomic_size), alpha=params.pop("alpha", 0.5))
        if key == "sad":
            return SadModel(atomic_size)
        return CtwModel(Alphabet(atomic_size),
                        depth=params.pop("depth", 2), alpha=params.pop("alpha", 0.5))

    if key == "lz":
        if factor_alphabets is not None:
            sizes = set(int(b) for b in factor_alphabets)
            if len(sizes) != 1:
                raise ConfigError("lz over a factored view needs uniform factor alphabets")
            size = sizes.pop()
        elif atomic_size is not None:
            size = atomic_size
        else:
            raise ConfigError("model 'lz' needs an alphabet")
        return Lz78Model(Alphabet(size))

    if factor_alphabets is None:
        raise ConfigError(f"model '{key}' needs factor alphabets")
    if key == "factored-ctw":
        return factored_ctw(factor_alphabets,
                            depth=params.pop("depth", 2), alpha=params.pop("alpha", 0.5))
    if key == "factored-sad":
        return factored_sad(factor_alphabets, log_sizes=log_factor_sizes,
                            depth=params.pop("depth", 2))
    sizes = set(int(b) for b in factor_alphabets)
    if len(sizes) != 1:
        raise ConfigError("logistic model needs uniform factor alphabets")
    return LogisticModel(sizes.pop(), len(factor_alphabets),
                         context_slots=params.pop("depth", 2),
                         learning_rate=params.pop("learning_rate", 0.1),
                         eps=params.pop("eps", 1e-8))


__all__ = [
    "Alphabet", "SequentialModel", "FrequencyModel", "DirichletModel", "SadModel",
    "CtwModel", "ContextTree", "FactoredModel", "GridWiring", "factored_ctw",
    "factored_sad", "LogisticModel", "AdagradOptimizer", "Lz78Model", "LzPhrase",
    "parse_lz78", "phrase_strings", "make_model", "log_add", "normalize_log_weights",
    "sad_escape_mass", "MODEL_KEYS", "PAD",
]

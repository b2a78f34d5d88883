import json
import math

from bidder_selection import logger
from bidder_selection.distributions import (
    AuctionInstance,
    DiscreteDistribution,
    InvalidInstance,
)


class InstanceFileError(OSError):
    pass


def format_number(value) -> str:
    value = float(value)
    if not math.isfinite(value):
        raise InvalidInstance(f"cannot serialize non-finite value {value!r}")
    return format(value, ".17g")


def _format_list(values) -> str:
    return "[" + ", ".join(format_number(v) for v in values) + "]"


def format_instance(instance) -> str:
    """Canonical single-line JSON text of an instance, 17 significant digits."""
    distributions = ", ".join(
        f'{{"support": {_format_list(d.support)}, "probs": {_format_list(d.probs)}}}'
        for d in instance.distributions
    )
    return (
        f'{{"n": {instance.n}, "k": {instance.k}, '
        f'"weights": {_format_list(instance.weights)}, '
        f'"distributions": [{distributions}]}}'
    )


def parse_instance(text) -> AuctionInstance:
    try:
        data = json.loads(text)
        distributions = [
            DiscreteDistribution(support=d["support"], probs=d["probs"])
            for d in data["distributions"]
        ]
        n, k, weights = data["n"], data["k"], data["weights"]
    except (json.JSONDecodeError, KeyError, TypeError) as e:
        raise InvalidInstance(f"malformed instance JSON: {e}")
    if n != len(distributions):
        raise InvalidInstance(f"n={n} but {len(distributions)} distributions given")
    return AuctionInstance(distributions, weights, k)


def save_instance(instance, path):
    try:
        with open(path, "w") as outfile:
            outfile.write(format_instance(instance) + "\n")
    except OSError as e:
        raise InstanceFileError(f"cannot write instance to {path}: {e}")
    logger.info(f"wrote instance n={instance.n} k={instance.k} to {path}")


def load_instance(path) -> AuctionInstance:
    try:
        with open(path) as infile:
            text = infile.read()
    except OSError as e:
        raise InstanceFileError(f"cannot read instance from {path}: {e}")
    return parse_instance(text)

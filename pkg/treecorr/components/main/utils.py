import csv
import hashlib
import json
import logging
import os
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from django.conf import settings

logger = logging.getLogger(__name__)


def to_fraction(value):
    """Convert ints, Fractions, "p/q" or decimal strings and floats to an exact Fraction.

    Floats go through their shortest repr so 0.3 becomes 3/10 rather than the binary
    expansion of the double.
    """
    if isinstance(value, bool):
        raise TypeError(f"A boolean is not a rational: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"Can not convert {value!r} to a rational")


def format_rational(value):
    return str(Fraction(value))


def format_pair(pair):
    return f"{pair[0]},{pair[1]}"


def parse_pair(text):
    parts = [part.strip() for part in str(text).split(",")]
    if len(parts) != 2:
        raise ValueError(f"A pair must look like 'k,l', got {text!r}")
    k, l = int(parts[0]), int(parts[1])
    return (k, l) if k <= l else (l, k)


def hash_to_u64(text):
    digest = hashlib.sha256(text.encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big", signed=False)


@dataclass(frozen=True)
class StreamSeeds:
    """Deterministic, named child streams from one base seed.

    The same (seed, stream) always yields the same numpy generator, so samplers that
    run on separate streams stay reproducible when run in any order or in parallel.
    """

    base_seed: int

    def child_seed(self, stream):
        if stream is None or stream == "":
            raise ValueError("stream name must be non-empty")
        return hash_to_u64(f"{self.base_seed}:{stream}")

    def generator(self, stream):
        return np.random.default_rng(self.child_seed(stream))


def read_json_document(path):
    with open(path, encoding="utf-8") as document:
        return json.load(document)


def read_fixture(name):
    """A named JSON document from TREECORR_FIXTURES_DIR."""
    return read_json_document(os.path.join(settings.TREECORR_FIXTURES_DIR, f"{name}.json"))


def to_jsonable(value):
    """Fractions as "p/q", pairs as "k,l", vertices as bitstrings and numpy scalars as
    plain numbers, recursively."""
    if isinstance(value, Fraction):
        return format_rational(value)
    if isinstance(value, (np.integer, np.floating)):
        return value.item()
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, dict):
        return {_json_key(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if hasattr(value, "to_bitstring"):
        return value.to_bitstring()
    return value


def _json_key(key):
    if isinstance(key, tuple) and len(key) == 2:
        return format_pair(key)
    if hasattr(key, "to_bitstring"):
        return key.to_bitstring()
    return str(key)


def dump_json(payload):
    return json.dumps(to_jsonable(payload), indent=2, sort_keys=False)


def write_csv(stream, header, rows):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_csv_cell(value) for value in row])


def _csv_cell(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return int(value)
    return value

import io
from fractions import Fraction

import numpy as np
from django.test import SimpleTestCase
from rest_framework.exceptions import ValidationError

from treecorr.components.hypercube.models import HypercubeVertex
from treecorr.components.main.decorators import timeit
from treecorr.components.main.serializers import RationalField
from treecorr.components.main.utils import (
    StreamSeeds,
    parse_pair,
    to_fraction,
    to_jsonable,
    write_csv,
)


class RationalParsingTestCase(SimpleTestCase):
    def test_to_fraction(self):
        self.assertEqual(to_fraction(0.3), Fraction(3, 10))
        self.assertEqual(to_fraction("2/4"), Fraction(1, 2))
        self.assertEqual(to_fraction(" 1.25 "), Fraction(5, 4))
        self.assertEqual(to_fraction(7), Fraction(7))
        with self.assertRaises(TypeError):
            to_fraction(True)
        with self.assertRaises(TypeError):
            to_fraction([1])

    def test_parse_pair(self):
        self.assertEqual(parse_pair("3,1"), (1, 3))
        self.assertEqual(parse_pair(" 2 , 2 "), (2, 2))
        with self.assertRaises(ValueError):
            parse_pair("1,2,3")

    def test_rational_field(self):
        field = RationalField()
        self.assertEqual(field.to_internal_value("1/3"), Fraction(1, 3))
        self.assertEqual(field.to_representation(Fraction(2, 4)), "1/2")
        with self.assertLogs("treecorr.components.main.serializers", "WARNING"):
            self.assertEqual(field.to_internal_value(0.5), Fraction(1, 2))
        with self.assertRaises(ValidationError):
            field.to_internal_value("one half")
        with self.assertRaises(ValidationError):
            RationalField(allow_float=False).to_internal_value(0.5)


class StreamSeedsTestCase(SimpleTestCase):
    def test_streams_are_reproducible(self):
        first = StreamSeeds(11).generator("sample").integers(0, 1000, size=20)
        again = StreamSeeds(11).generator("sample").integers(0, 1000, size=20)
        other = StreamSeeds(11).generator("battery").integers(0, 1000, size=20)
        self.assertTrue(np.array_equal(first, again))
        self.assertFalse(np.array_equal(first, other))
        self.assertNotEqual(StreamSeeds(11).child_seed("a"), StreamSeeds(12).child_seed("a"))

    def test_stream_name_required(self):
        with self.assertRaises(ValueError):
            StreamSeeds(1).child_seed("")


class ReportTestCase(SimpleTestCase):
    def test_to_jsonable(self):
        value = {
            (1, 2): Fraction(1, 2),
            "draws": np.array([1, 2]),
            "vertex": HypercubeVertex.from_bitstring("101"),
            "pairs": [(1, 2), np.int64(3), np.float64(0.5)],
        }
        self.assertEqual(
            to_jsonable(value),
            {"1,2": "1/2", "draws": [1, 2], "vertex": "101", "pairs": [[1, 2], 3, 0.5]},
        )

    def test_write_csv(self):
        stream = io.StringIO()
        write_csv(stream, ["a", "b"], [[np.int64(1), 0.1], [2, "x"]])
        self.assertEqual(stream.getvalue(), "a,b\n1,0.1\n2,x\n")

    def test_timeit(self):
        @timeit
        def double(x):
            return 2 * x

        with self.assertLogs("treecorr.components.main.decorators", "DEBUG"):
            self.assertEqual(double(4), 8)

import math
import re

import numpy as np
import pytest

from relureach.encoder import EncodedProblem, Mode, Variable, VarKind, VarRef, encode_problem
from relureach.generate import random_halfspace_property, random_instance
from relureach.lpfile import LpFileError, export_lp_file, parse_lp_file
from relureach.network import Layer, Network
from relureach.propspec import parse_property


def _sections(text):
    return [line for line in text.splitlines() if line and not line.startswith((" ", "\\"))]


def test_empty_constraint_problem():
    p = EncodedProblem((Variable(VarRef(VarKind.LAYER_OUT, 1, 0), -1.0, 1.0),), (), (), 0.0, Mode.EXACT)
    text = export_lp_file(p)
    assert _sections(text) == ["Minimize", "Subject To", "Bounds", "End"]
    body = text.split("Subject To")[1].split("Bounds")[0]
    assert body.strip() == ""
    assert " -1.0 <= x_1_0 <= 1.0" in text
    assert parse_lp_file(text) == p


def test_single_neuron_file():
    net = Network(1, [Layer([[1.0]], [0.0])])
    p = encode_problem(net, parse_property("in[0] >= -1\nin[0] <= 1"), mode=Mode.EXACT)
    text = export_lp_file(p)
    layer_rows = re.findall(r"^ (L2_n0_\w+):", text, flags=re.M)
    assert layer_rows == ["L2_n0_lb", "L2_n0_ub", "L2_n0_nn", "L2_n0_off"]
    assert text.split("Binaries\n")[1].split("End")[0].split() == ["d_2_0"]


def test_round_trip_fixed_point(rng):
    for mode in Mode:
        net, lo, hi = random_instance(rng)
        p = encode_problem(net, random_halfspace_property(rng, net, lo, hi), mode=mode)
        text = export_lp_file(p)
        again = parse_lp_file(text)
        assert again == p
        assert export_lp_file(again) == text


def test_long_rows_wrap_and_parse(rng):
    net = Network(20, [Layer(rng.normal(size=(2, 20)), [0.0, 0.0], "linear")])
    p = encode_problem(net, parse_property("in[0] <= 1"), mode=Mode.EPSILON)
    text = export_lp_file(p)
    assert max(len(line) for line in text.splitlines()) < 255
    assert parse_lp_file(text) == p


def test_infinite_bounds_round_trip():
    refs = [VarRef(VarKind.LAYER_OUT, 1, j) for j in range(4)]
    variables = (
        Variable(refs[0], -math.inf, math.inf),
        Variable(refs[1], -math.inf, 2.5),
        Variable(refs[2], 0.1, math.inf),
        Variable(refs[3], 3.0, 3.0),
    )
    p = EncodedProblem(variables, (), (), 0.0, Mode.EXACT)
    text = export_lp_file(p)
    assert " x_1_0 free" in text and " x_1_3 = 3.0" in text
    assert parse_lp_file(text) == p


def test_reader_rejects_garbage():
    with pytest.raises(LpFileError):
        parse_lp_file("junk before sections\nMinimize\n obj: x_1_0\nEnd\n")
    with pytest.raises(LpFileError):
        parse_lp_file("Minimize\n obj: x_1_0\nSubject To\n c1: x_1_0 +\nEnd\n")

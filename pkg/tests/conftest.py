import json

import pytest

from sturm_green import Potential

CANONICAL = {
    "one": Potential.constant(1.0),
    "oscillator": Potential.polynomial([1.0, 0.0, 1.0]),
    "periodic": Potential.sinusoid(2.0, 1.0),
}


@pytest.fixture(params=sorted(CANONICAL))
def canonical(request):
    return request.param, CANONICAL[request.param]


@pytest.fixture
def write_json(tmp_path):
    def _write(name, obj):
        path = tmp_path / name
        path.write_text(json.dumps(obj))
        return str(path)

    return _write


def whole_line(shape, **params):
    return {"segments": [{"from": "-inf", "to": "+inf", "shape": shape, "params": params}]}


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])

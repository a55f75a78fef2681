import pytest

from swarmforage import _kernels_py

BACKENDS = [_kernels_py]
try:
    from swarmforage import _kernels
except ImportError:  # extension not built
    pass
else:
    BACKENDS.append(_kernels)


@pytest.fixture(params=BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def backend(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    from tests import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.RESULTS, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

import numpy as np
import pytest


@pytest.fixture(scope="session")
def natural_image_227():
    """8-bit grayscale natural photograph, 227x227 (AlexNet input size)."""
    from skimage import color, data, transform

    gray = color.rgb2gray(data.chelsea())[:, 75:375]
    img = transform.resize(gray, (227, 227), anti_aliasing=True)
    return np.round(img * 255) / 255


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_configure(config):
    config.acceptance_lines = []


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(number, title, passed, detail, seconds, label=None):
        status = label or ("PASS" if passed else "FAIL")
        line = f"criterion {number} {status} ({seconds:.2f} s) {title}: {detail}"
        request.config.acceptance_lines.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
